use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::nn::tensor::sigmoid;
use crate::synth::tabular::{assemble_cohort, sample_row, GeneratorSpec};
use crate::synth::video::blob_clip;
use crate::tabular::cohort::Cohort;
use crate::video::clip::VideoClip;

/// Paired tabular + video sampling under one separable ground truth:
///
/// `log-odds = bias + sum_i effect_i(x_i) + video_signal * u`
///
/// where the latent `u ~ N(0,1)` also drives clip i's blob amplitude and
/// extent. The label is drawn once from the combined log-odds, so row i of
/// the cohort and clip i describe the same synthetic patient, and the clips
/// carry risk signal beyond the tabular columns exactly when `video_signal`
/// is nonzero. Clip ids equal the patient ids.
pub fn gen_multimodal(
    spec: &GeneratorSpec,
    n: usize,
    dims: (usize, usize, usize),
    video_signal: f64,
    seed: u64,
) -> Result<(Cohort, Vec<VideoClip>, Vec<f64>)> {
    let (t, h, w) = dims;
    if n == 0 || t == 0 || h < 4 || w < 4 {
        return Err(Error::InvalidArgument(format!(
            "multimodal generator needs n >= 1 and dims at least [1,4,4], got n={n} dims {dims:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = spec.features.len();
    let mut values = Vec::with_capacity(n * p);
    let mut labels = Vec::with_capacity(n);
    let mut probs = Vec::with_capacity(n);
    let mut clips = Vec::with_capacity(n);
    let mut row = vec![0.0; p];

    for i in 0..n {
        sample_row(spec, &mut rng, &mut row);
        let u: f64 = StandardNormal.sample(&mut rng);
        let prob = sigmoid(spec.true_logodds(&row) + video_signal * u);
        let label = u8::from(rng.random_range(0.0..1.0) < prob);
        clips.push(blob_clip(&mut rng, u, dims, &format!("p{i:06}"))?);
        values.extend(row.iter().map(|&v| Some(v)));
        labels.push(label);
        probs.push(prob);
    }

    let cohort = assemble_cohort(spec, values, labels)?;
    Ok((cohort, clips, probs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::auc::auc;
    use crate::synth::tabular::{EffectFn, FeatureDist, FeatureGen};
    use crate::tabular::cohort::Modality;

    fn spec(slope: f64) -> GeneratorSpec {
        GeneratorSpec {
            features: vec![
                FeatureGen::new("age", Modality::Cd, FeatureDist::Uniform, EffectFn::Linear { slope }),
                FeatureGen::new("ef", Modality::Edm, FeatureDist::Uniform, EffectFn::Linear { slope: -slope }),
            ],
            bias: 0.0,
        }
    }

    #[test]
    fn rows_and_clips_align_one_to_one() {
        let (cohort, clips, probs) = gen_multimodal(&spec(1.0), 40, (2, 6, 6), 1.0, 3).unwrap();
        assert_eq!(cohort.n_rows(), 40);
        assert_eq!(clips.len(), 40);
        assert_eq!(probs.len(), 40);
        for (i, clip) in clips.iter().enumerate() {
            assert_eq!(clip.id, cohort.patient_ids[i]);
            assert_eq!(clip.dims(), (2, 6, 6));
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = gen_multimodal(&spec(1.0), 8, (2, 6, 6), 0.8, 9).unwrap();
        let b = gen_multimodal(&spec(1.0), 8, (2, 6, 6), 0.8, 9).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        assert_eq!(a.2, b.2);
        let c = gen_multimodal(&spec(1.0), 8, (2, 6, 6), 0.8, 10).unwrap();
        assert_ne!(a.0, c.0);
    }

    fn brightness_auc(clips: &[VideoClip], labels: &[u8]) -> f64 {
        let brightness: Vec<f64> = clips
            .iter()
            .map(|c| c.frames.data().iter().sum::<f64>() / c.frames.len() as f64)
            .collect();
        auc(&brightness, labels).unwrap()
    }

    #[test]
    fn video_signal_reaches_the_labels_through_the_clips() {
        // Null tabular effects: only the latent drives the outcome, and the
        // blob renders it into the pixels.
        let (cohort, clips, _) = gen_multimodal(&spec(0.0), 400, (4, 10, 10), 3.0, 11).unwrap();
        let a = brightness_auc(&clips, &cohort.labels);
        assert!(a > 0.85, "brightness AUC {a}");
    }

    #[test]
    fn zero_video_signal_decouples_clips_from_labels() {
        let (cohort, clips, probs) = gen_multimodal(&spec(2.0), 600, (2, 6, 6), 0.0, 4).unwrap();
        let a = brightness_auc(&clips, &cohort.labels);
        assert!((a - 0.5).abs() < 0.08, "brightness AUC {a}");
        // The tabular oracle still separates the classes.
        let oracle = auc(&probs, &cohort.labels).unwrap();
        assert!(oracle > 0.8, "oracle AUC {oracle}");
    }

    #[test]
    fn rejects_degenerate_shapes() {
        assert!(gen_multimodal(&spec(1.0), 0, (2, 6, 6), 1.0, 1).is_err());
        assert!(gen_multimodal(&spec(1.0), 4, (0, 6, 6), 1.0, 1).is_err());
        assert!(gen_multimodal(&spec(1.0), 4, (2, 3, 6), 1.0, 1).is_err());
    }
}
