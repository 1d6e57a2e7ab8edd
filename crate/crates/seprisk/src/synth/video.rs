use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::nn::tensor::{sigmoid, Tensor};
use crate::video::clip::VideoClip;

/// Synthetic clips carrying a known pixel-level signal: a latent risk
/// variable `u ~ N(0,1)` drives the label, via
/// `Bernoulli(sigmoid(signal_strength * u))`, and both the amplitude
/// (`0.2 + 0.6 * sigmoid(1.5 u)`) and spatial extent of a moving Gaussian
/// blob. The extent matters: per-clip normalization inside the network can
/// cancel a pure brightness scaling, but not a change in how much of the
/// frame the blob covers. Pixel noise is added on top. Returns clips, labels
/// and the true label probabilities for oracle use. At `signal_strength = 0`
/// the labels are independent of the pixels.
pub fn gen_videos(
    n: usize,
    dims: (usize, usize, usize),
    signal_strength: f64,
    seed: u64,
) -> Result<(Vec<VideoClip>, Vec<u8>, Vec<f64>)> {
    let (t, h, w) = dims;
    if n == 0 || t == 0 || h < 4 || w < 4 {
        return Err(Error::InvalidArgument(format!(
            "video generator needs n >= 1 and dims at least [1,4,4], got n={n} dims {dims:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clips = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut probs = Vec::with_capacity(n);

    for i in 0..n {
        let u: f64 = StandardNormal.sample(&mut rng);
        let prob = sigmoid(signal_strength * u);
        let label = u8::from(rng.random_range(0.0..1.0) < prob);
        clips.push(blob_clip(&mut rng, u, dims, &format!("clip{i:05}"))?);
        labels.push(label);
        probs.push(prob);
    }
    Ok((clips, labels, probs))
}

/// Renders one clip: a drifting Gaussian blob whose amplitude and spatial
/// extent both grow with the latent `u`, plus uniform pixel noise, clamped
/// to [0, 1]. The path starts in the middle band and drifts without leaving
/// the frame.
pub(crate) fn blob_clip(
    rng: &mut ChaCha8Rng,
    u: f64,
    dims: (usize, usize, usize),
    id: &str,
) -> Result<VideoClip> {
    let (t, h, w) = dims;
    let noise_level = 0.08;
    let amplitude = 0.2 + 0.6 * sigmoid(1.5 * u);
    let sigma = (0.06 + 0.12 * sigmoid(1.5 * u)) * h.min(w) as f64;

    let cx0 = rng.random_range(0.3..0.7) * w as f64;
    let cy0 = rng.random_range(0.3..0.7) * h as f64;
    let steps = (t - 1).max(1) as f64;
    let vx = rng.random_range(-0.25..0.25) * w as f64 / steps;
    let vy = rng.random_range(-0.25..0.25) * h as f64 / steps;

    let mut data = Vec::with_capacity(t * h * w);
    for frame in 0..t {
        let cx = cx0 + vx * frame as f64;
        let cy = cy0 + vy * frame as f64;
        for y in 0..h {
            for x in 0..w {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                let blob = amplitude * (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
                let noise = rng.random_range(0.0..noise_level);
                data.push((blob + noise).clamp(0.0, 1.0));
            }
        }
    }
    VideoClip::new(Tensor::from_vec(&[t, h, w], data)?, 30.0, id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::auc::auc;
    use crate::synth::tabular::oracle_auc;

    pub const DESK_DIMS: (usize, usize, usize) = (12, 28, 38);

    #[test]
    fn pixels_stay_in_unit_range() {
        let (clips, _, _) = gen_videos(5, DESK_DIMS, 2.0, 1).unwrap();
        for c in &clips {
            assert!(c.frames.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn strong_signal_yields_high_oracle_auc() {
        let (_, labels, probs) = gen_videos(400, (4, 8, 8), 6.0, 7).unwrap();
        let oracle = oracle_auc(&probs, &labels).unwrap();
        assert!(oracle > 0.95, "oracle AUC {oracle}");
    }

    #[test]
    fn zero_signal_decouples_labels_from_pixels() {
        let (clips, labels, probs) = gen_videos(600, (2, 6, 6), 0.0, 3).unwrap();
        assert!(probs.iter().all(|&p| p == 0.5));
        // Mean clip brightness, the strongest pixel statistic available,
        // carries no label information.
        let brightness: Vec<f64> = clips
            .iter()
            .map(|c| c.frames.data().iter().sum::<f64>() / c.frames.len() as f64)
            .collect();
        let a = auc(&brightness, &labels).unwrap();
        assert!((a - 0.5).abs() < 0.08, "brightness AUC {a}");
    }

    #[test]
    fn amplitude_tracks_the_latent_signal() {
        // With a strong signal, mean brightness alone should separate the
        // classes well: the CNN has something to find.
        let (clips, labels, _) = gen_videos(400, (4, 10, 10), 3.0, 11).unwrap();
        let brightness: Vec<f64> = clips
            .iter()
            .map(|c| c.frames.data().iter().sum::<f64>() / c.frames.len() as f64)
            .collect();
        let a = auc(&brightness, &labels).unwrap();
        assert!(a > 0.85, "brightness AUC {a}");
    }

    #[test]
    fn deterministic_given_seed() {
        let a = gen_videos(3, (2, 6, 6), 1.0, 42).unwrap();
        let b = gen_videos(3, (2, 6, 6), 1.0, 42).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        let c = gen_videos(3, (2, 6, 6), 1.0, 43).unwrap();
        assert_ne!(a.0, c.0);
    }
}
