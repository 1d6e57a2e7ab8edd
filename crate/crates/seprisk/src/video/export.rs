//! Feature-map export: the per-frame activation maps of any block, each
//! normalized to [0,1] and written as a binary PGM image.

use std::path::{Path, PathBuf};

use crate::cli::fsutil::write_atomic_bytes;
use crate::error::{Error, Result};
use crate::nn::pool::MaxPool;
use crate::nn::tensor::{relu, Tensor};
use crate::video::clip::VideoClip;
use crate::video::net::{VideoNet, N_BLOCKS};

/// Activation maps of one frame at the output of the requested block
/// (post-norm, pre-pool, inference mode), one `[h, w]` tensor per channel,
/// each independently rescaled to [0,1]. A constant map rescales to all
/// zeros. `block` is 1-based.
pub fn export_feature_maps(
    net: &VideoNet,
    clip: &VideoClip,
    block: usize,
    frame: usize,
) -> Result<Vec<Tensor>> {
    if block == 0 || block > N_BLOCKS {
        return Err(Error::InvalidArgument(format!(
            "block {block} out of range 1..={N_BLOCKS}"
        )));
    }
    let (t, h, w) = clip.dims();
    if frame >= t {
        return Err(Error::InvalidArgument(format!(
            "frame {frame} out of range for a {t}-frame clip"
        )));
    }
    if (t, h, w) != (net.config.frames, net.config.height, net.config.width) {
        return Err(Error::ShapeMismatch(format!(
            "clip dims {t}x{h}x{w} do not match config {}x{}x{}",
            net.config.frames, net.config.height, net.config.width
        )));
    }

    let mut x = clip.frames.clone().reshape(&[t, 1, h, w])?;
    let mut maps = None;
    for b in 0..block {
        let a = relu(&net.convs[2 * b].forward(&x)?);
        let a = relu(&net.convs[2 * b + 1].forward(&a)?);
        let a = net.norms[b].forward_eval(&a)?;
        if b + 1 == block {
            maps = Some(a.clone());
        }
        x = MaxPool::forward(&a)?.0;
    }
    let maps = maps.expect("loop reaches the requested block");

    let s = maps.shape().to_vec();
    let (channels, mh, mw) = (s[1], s[2], s[3]);
    let mut out = Vec::with_capacity(channels);
    for c in 0..channels {
        let base = (frame * channels + c) * mh * mw;
        let slice = &maps.data()[base..base + mh * mw];
        let lo = slice.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = slice.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let data = if hi > lo {
            slice.iter().map(|&v| (v - lo) / (hi - lo)).collect()
        } else {
            vec![0.0; mh * mw]
        };
        out.push(Tensor::from_vec(&[mh, mw], data)?);
    }
    Ok(out)
}

/// Serializes one normalized `[h, w]` map as a binary (P5) PGM image with
/// 8-bit depth.
pub fn write_pgm(path: &Path, map: &Tensor) -> Result<()> {
    let s = map.shape();
    if s.len() != 2 {
        return Err(Error::ShapeMismatch(format!(
            "PGM export expects a 2D map, got shape {s:?}"
        )));
    }
    let (h, w) = (s[0], s[1]);
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    bytes.extend(map.data().iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    write_atomic_bytes(path, &bytes)
}

/// Writes every map of a block/frame as `block<b>_frame<f>_map<i>.pgm`
/// under `dir`, returning the paths.
pub fn write_feature_maps(
    net: &VideoNet,
    clip: &VideoClip,
    block: usize,
    frame: usize,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    let maps = export_feature_maps(net, clip, block, frame)?;
    let mut paths = Vec::with_capacity(maps.len());
    for (i, map) in maps.iter().enumerate() {
        let path = dir.join(format!("block{block}_frame{frame}_map{i}.pgm"));
        write_pgm(&path, map)?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::video::net::VideoNetConfig;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_net(seed: u64) -> VideoNet {
        let cfg = VideoNetConfig { frames: 2, height: 9, width: 12, ..VideoNetConfig::full_scale() };
        VideoNet::init(cfg, seed).unwrap()
    }

    fn random_clip(net: &VideoNet, seed: u64) -> VideoClip {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = &net.config;
        let n = cfg.frames * cfg.height * cfg.width;
        let data: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        VideoClip::new(
            Tensor::from_vec(&[cfg.frames, cfg.height, cfg.width], data).unwrap(),
            30.0,
            "clip",
        )
        .unwrap()
    }

    #[test]
    fn map_counts_follow_block_channels() {
        let net = tiny_net(3);
        let clip = random_clip(&net, 1);
        assert_eq!(export_feature_maps(&net, &clip, 1, 0).unwrap().len(), 4);
        for block in 2..=4 {
            assert_eq!(export_feature_maps(&net, &clip, block, 0).unwrap().len(), 8);
        }
        // Block 1 maps are at input resolution; block 2 after one pool.
        assert_eq!(export_feature_maps(&net, &clip, 1, 0).unwrap()[0].shape(), &[9, 12]);
        assert_eq!(export_feature_maps(&net, &clip, 2, 1).unwrap()[0].shape(), &[3, 4]);
    }

    #[test]
    fn maps_are_normalized_to_unit_range() {
        let net = tiny_net(5);
        let clip = random_clip(&net, 7);
        for map in export_feature_maps(&net, &clip, 3, 0).unwrap() {
            let lo = map.data().iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = map.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(lo >= 0.0 && hi <= 1.0);
            assert!(hi == 1.0 || (lo == 0.0 && hi == 0.0));
        }
    }

    #[test]
    fn zero_clip_yields_constant_maps() {
        // Fresh-init biases are zero, so an all-zero clip produces constant
        // (all-zero after normalization) maps.
        let net = tiny_net(11);
        let cfg = &net.config;
        let clip = VideoClip::new(
            Tensor::zeros(&[cfg.frames, cfg.height, cfg.width]),
            30.0,
            "z",
        )
        .unwrap();
        for map in export_feature_maps(&net, &clip, 1, 0).unwrap() {
            assert!(map.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn rejects_bad_block_or_frame() {
        let net = tiny_net(2);
        let clip = random_clip(&net, 2);
        assert!(export_feature_maps(&net, &clip, 0, 0).is_err());
        assert!(export_feature_maps(&net, &clip, 5, 0).is_err());
        assert!(export_feature_maps(&net, &clip, 1, 99).is_err());
    }

    #[test]
    fn pgm_files_are_well_formed() {
        let net = tiny_net(13);
        let clip = random_clip(&net, 17);
        let dir = tempfile::tempdir().unwrap();
        let paths = write_feature_maps(&net, &clip, 1, 0, dir.path()).unwrap();
        assert_eq!(paths.len(), 4);
        for p in &paths {
            let bytes = std::fs::read(p).unwrap();
            assert!(bytes.starts_with(b"P5\n12 9\n255\n"));
            assert_eq!(bytes.len(), "P5\n12 9\n255\n".len() + 9 * 12);
        }
    }
}
