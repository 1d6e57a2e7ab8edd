use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

/// A grayscale echo clip: frames `[T, H, W]` with values in [0, 1] after
/// preprocessing, plus the acquisition frame rate and a patient/study link.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoClip {
    pub frames: Tensor,
    pub frame_rate: f64,
    pub id: String,
}

impl VideoClip {
    pub fn new(frames: Tensor, frame_rate: f64, id: &str) -> Result<Self> {
        let s = frames.shape();
        if s.len() != 3 || s[0] == 0 || s[1] == 0 || s[2] == 0 {
            return Err(Error::ShapeMismatch(format!(
                "clip frames must be non-empty [T,H,W], got {:?}",
                s
            )));
        }
        if !(frame_rate > 0.0) {
            return Err(Error::InvalidArgument(format!("frame rate {frame_rate} must be positive")));
        }
        Ok(VideoClip { frames, frame_rate, id: id.into() })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        let s = self.frames.shape();
        (s[0], s[1], s[2])
    }
}

/// Temporal and intensity canonicalization targets. The trained network
/// expects 30 fps clips of a fixed length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreprocessConfig {
    pub target_fps: f64,
    pub target_frames: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig { target_fps: 30.0, target_frames: 60 }
    }
}

/// Canonicalizes a raw clip: linear temporal interpolation to the target
/// frame rate, crop to the target frame count if longer or pad by repeating
/// the last frame if shorter, and intensity rescale into [0, 1] when values
/// fall outside it. Idempotent: preprocessing a preprocessed clip is a no-op.
pub fn preprocess_video(clip: &VideoClip, cfg: PreprocessConfig) -> Result<VideoClip> {
    let (t_src, h, w) = clip.dims();
    let frame_len = h * w;
    let src = clip.frames.data();

    // Resample: source frame i sits at time i/src_fps; output frame k at
    // k/target_fps, for every k not past the last source frame.
    let resampled: Vec<f64> = if (clip.frame_rate - cfg.target_fps).abs() < 1e-9 {
        src.to_vec()
    } else {
        let n_out = ((t_src - 1) as f64 * cfg.target_fps / clip.frame_rate).floor() as usize + 1;
        let mut out = Vec::with_capacity(n_out * frame_len);
        for k in 0..n_out {
            let pos = k as f64 * clip.frame_rate / cfg.target_fps;
            let lo = (pos.floor() as usize).min(t_src - 1);
            let hi = (lo + 1).min(t_src - 1);
            let frac = pos - lo as f64;
            let a = &src[lo * frame_len..(lo + 1) * frame_len];
            let b = &src[hi * frame_len..(hi + 1) * frame_len];
            out.extend(a.iter().zip(b).map(|(x, y)| x + frac * (y - x)));
        }
        out
    };
    let t_mid = resampled.len() / frame_len;

    // Crop or pad to the target frame count.
    let mut frames = Vec::with_capacity(cfg.target_frames * frame_len);
    if t_mid >= cfg.target_frames {
        frames.extend_from_slice(&resampled[..cfg.target_frames * frame_len]);
    } else {
        frames.extend_from_slice(&resampled);
        let last = resampled[(t_mid - 1) * frame_len..t_mid * frame_len].to_vec();
        for _ in t_mid..cfg.target_frames {
            frames.extend_from_slice(&last);
        }
    }

    // Rescale intensities only when they leave [0,1], so the op is a no-op
    // on already-canonical clips.
    let min = frames.iter().copied().fold(f64::INFINITY, f64::min);
    let max = frames.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !min.is_finite() || !max.is_finite() {
        return Err(Error::Numeric("non-finite pixel values".into()));
    }
    if min < 0.0 || max > 1.0 {
        let span = max - min;
        for v in frames.iter_mut() {
            *v = if span > 0.0 { (*v - min) / span } else { 0.0 };
        }
    }

    VideoClip::new(
        Tensor::from_vec(&[cfg.target_frames, h, w], frames)?,
        cfg.target_fps,
        &clip.id,
    )
}

const SVID_MAGIC: &[u8; 4] = b"SVID";

/// Writes clips in the SVID container: magic "SVID", four little-endian u32
/// (n_clips, T, H, W), then clip-major row-major f32 pixels. All clips must
/// share dimensions.
pub fn write_svid<W: Write>(writer: &mut W, clips: &[VideoClip]) -> Result<()> {
    if clips.is_empty() {
        return Err(Error::EmptyInput("no clips to write".into()));
    }
    let dims = clips[0].dims();
    for c in clips {
        if c.dims() != dims {
            return Err(Error::ShapeMismatch(format!(
                "clip {} dims {:?} differ from {:?}",
                c.id,
                c.dims(),
                dims
            )));
        }
    }
    writer.write_all(SVID_MAGIC)?;
    for v in [clips.len(), dims.0, dims.1, dims.2] {
        let v = u32::try_from(v)
            .map_err(|_| Error::VideoFile("dimension exceeds u32 range".into()))?;
        writer.write_all(&v.to_le_bytes())?;
    }
    for c in clips {
        for &px in c.frames.data() {
            writer.write_all(&(px as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn write_svid_path(path: &Path, clips: &[VideoClip]) -> Result<()> {
    crate::cli::fsutil::write_atomic(path, |w| write_svid(w, clips))
}

/// Reads an SVID container. Stored pixels carry no frame rate; clips are
/// assumed canonical at 30 fps and get ids from their position.
pub fn read_svid<R: Read>(reader: &mut R) -> Result<Vec<VideoClip>> {
    let mut magic = [0u8; 4];
    reader
        .read_exact(&mut magic)
        .map_err(|_| Error::VideoFile("file too short for SVID header".into()))?;
    if &magic != SVID_MAGIC {
        return Err(Error::VideoFile(format!(
            "bad magic {:?}, expected \"SVID\"",
            String::from_utf8_lossy(&magic)
        )));
    }
    let mut header = [0u8; 16];
    reader
        .read_exact(&mut header)
        .map_err(|_| Error::VideoFile("truncated SVID header".into()))?;
    let mut dims = [0usize; 4];
    for (i, chunk) in header.chunks_exact(4).enumerate() {
        dims[i] = u32::from_le_bytes(chunk.try_into().expect("4-byte chunk")) as usize;
    }
    let [n_clips, t, h, w] = dims;
    if n_clips == 0 || t == 0 || h == 0 || w == 0 {
        return Err(Error::VideoFile(format!(
            "degenerate SVID dims n={n_clips} T={t} H={h} W={w}"
        )));
    }
    let frame_len = t * h * w;
    let mut clips = Vec::with_capacity(n_clips);
    let mut buf = vec![0u8; frame_len * 4];
    for i in 0..n_clips {
        reader
            .read_exact(&mut buf)
            .map_err(|_| Error::VideoFile(format!("truncated pixel data in clip {i}")))?;
        let data: Vec<f64> = buf
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4-byte chunk")) as f64)
            .collect();
        clips.push(VideoClip::new(
            Tensor::from_vec(&[t, h, w], data)?,
            30.0,
            &format!("clip{i:05}"),
        )?);
    }
    let mut trailing = [0u8; 1];
    if reader.read(&mut trailing)? != 0 {
        return Err(Error::VideoFile("trailing bytes after declared clips".into()));
    }
    Ok(clips)
}

pub fn read_svid_path(path: &Path) -> Result<Vec<VideoClip>> {
    let file = std::fs::File::open(path)?;
    read_svid(&mut std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_clip(t: usize, h: usize, w: usize, fps: f64) -> VideoClip {
        // Frame i is constant at i/(t-1) so temporal interpolation is easy to
        // check from any single pixel.
        let mut data = Vec::with_capacity(t * h * w);
        for i in 0..t {
            let v = if t > 1 { i as f64 / (t - 1) as f64 } else { 0.0 };
            data.extend(std::iter::repeat_n(v, h * w));
        }
        VideoClip::new(Tensor::from_vec(&[t, h, w], data).unwrap(), fps, "ramp").unwrap()
    }

    #[test]
    fn canonical_clip_is_unchanged() {
        let clip = ramp_clip(60, 4, 5, 30.0);
        let out = preprocess_video(&clip, PreprocessConfig::default()).unwrap();
        assert_eq!(out, VideoClip { id: "ramp".into(), ..clip });
    }

    #[test]
    fn long_fast_clip_is_resampled_then_cropped() {
        // 4 s at 60 fps: 240 source frames resample to 120 at 30 fps; the
        // first 60 are kept, so the last kept frame is source time 59/30 s.
        let clip = ramp_clip(240, 2, 2, 60.0);
        let out = preprocess_video(&clip, PreprocessConfig::default()).unwrap();
        assert_eq!(out.dims(), (60, 2, 2));
        let last = out.frames.data()[59 * 4];
        // Source value at time 59/30 s = frame 118 of 239 intervals.
        assert!((last - 118.0 / 239.0).abs() < 1e-12);
    }

    #[test]
    fn short_clip_pads_with_last_frame() {
        let clip = ramp_clip(45, 3, 3, 30.0);
        let out = preprocess_video(&clip, PreprocessConfig::default()).unwrap();
        assert_eq!(out.dims(), (60, 3, 3));
        let d = out.frames.data();
        for k in 45..60 {
            assert_eq!(d[k * 9..(k + 1) * 9], d[44 * 9..45 * 9]);
        }
    }

    #[test]
    fn out_of_range_intensities_are_rescaled() {
        let clip = VideoClip::new(
            Tensor::from_vec(&[1, 1, 3], vec![-1.0, 0.0, 3.0]).unwrap(),
            30.0,
            "c",
        )
        .unwrap();
        let out = preprocess_video(&clip, PreprocessConfig { target_fps: 30.0, target_frames: 1 })
            .unwrap();
        assert_eq!(out.frames.data(), &[0.0, 0.25, 1.0]);
    }

    #[test]
    fn preprocessing_is_idempotent() {
        let clip = ramp_clip(100, 3, 4, 47.5);
        let cfg = PreprocessConfig::default();
        let once = preprocess_video(&clip, cfg).unwrap();
        let twice = preprocess_video(&once, cfg).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn svid_round_trip() {
        let clips = vec![ramp_clip(5, 3, 4, 30.0), ramp_clip(5, 3, 4, 30.0)];
        let mut buf = Vec::new();
        write_svid(&mut buf, &clips).unwrap();
        assert_eq!(&buf[..4], b"SVID");
        assert_eq!(buf.len(), 4 + 16 + 2 * 5 * 3 * 4 * 4);
        let back = read_svid(&mut &buf[..]).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].dims(), (5, 3, 4));
        for (a, b) in back[0].frames.data().iter().zip(clips[0].frames.data()) {
            assert!((a - b).abs() < 1e-7, "f32 round trip within precision");
        }
    }

    #[test]
    fn svid_rejects_corruption() {
        let clips = vec![ramp_clip(4, 2, 2, 30.0)];
        let mut buf = Vec::new();
        write_svid(&mut buf, &clips).unwrap();
        let bad_magic = {
            let mut b = buf.clone();
            b[0] = b'X';
            b
        };
        assert!(read_svid(&mut &bad_magic[..]).is_err());
        let truncated = &buf[..buf.len() - 3];
        assert!(read_svid(&mut &truncated[..]).is_err());
        let mut padded = buf.clone();
        padded.push(0);
        assert!(read_svid(&mut &padded[..]).is_err());
    }

    #[test]
    fn mismatched_clip_dims_rejected_on_write() {
        let clips = vec![ramp_clip(4, 2, 2, 30.0), ramp_clip(4, 2, 3, 30.0)];
        let mut buf = Vec::new();
        assert!(write_svid(&mut buf, &clips).is_err());
    }
}
