use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::eval::auc::auc;
use crate::synth::mask::mask_mcar;
use crate::synth::multimodal::gen_multimodal;
use crate::synth::tabular::{gen_tabular, GeneratorSpec};
use crate::tabular::cohort::Cohort;
use crate::video::clip::write_svid_path;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub rows: usize,
    pub seed: u64,
    /// Fraction of feature cells to knock out, for exercising prep.
    pub mask_rate: f64,
    /// Also emit a clip per row whose content carries label signal.
    pub clips: bool,
    /// Clip geometry as (frames, height, width).
    pub video_dims: (usize, usize, usize),
    /// Log-odds weight of the latent the clips encode.
    pub video_signal: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            rows: 2000,
            seed: 0,
            mask_rate: 0.0,
            clips: false,
            video_dims: (12, 28, 38),
            video_signal: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthReport {
    pub rows: usize,
    pub prevalence: f64,
    /// Discrimination of the generator's own event probabilities: the
    /// ceiling any fitted model is judged against.
    pub oracle_auc: f64,
    pub masked_cells: usize,
    pub cohort_path: PathBuf,
    pub clips_path: Option<PathBuf>,
}

impl SynthReport {
    pub fn render_text(&self) -> String {
        let mut s = format!(
            "wrote {} rows to {}\nprevalence {:.3}  oracle AUC {:.3}\n",
            self.rows,
            self.cohort_path.display(),
            self.prevalence,
            self.oracle_auc,
        );
        if self.masked_cells > 0 {
            s.push_str(&format!("masked {} cells\n", self.masked_cells));
        }
        if let Some(p) = &self.clips_path {
            s.push_str(&format!("wrote clips to {}\n", p.display()));
        }
        s
    }
}

/// Generates a demo cohort with known separable ground truth, optionally
/// paired clips, and optionally missing-completely-at-random holes, then
/// writes `cohort.csv` (and `clips.svid`) under `out`.
pub fn cmd_synth(out: &Path, opts: &SynthOptions) -> Result<SynthReport> {
    if opts.rows < 2 {
        return Err(Error::InvalidArgument(format!("rows {} must be >= 2", opts.rows)));
    }
    let spec = GeneratorSpec::demo();

    let (mut cohort, clips, probs) = if opts.clips {
        let (c, v, p) =
            gen_multimodal(&spec, opts.rows, opts.video_dims, opts.video_signal, opts.seed)?;
        (c, Some(v), p)
    } else {
        let (c, p) = gen_tabular(&spec, opts.rows, opts.seed)?;
        (c, None, p)
    };
    let prevalence =
        cohort.labels.iter().map(|&y| f64::from(y)).sum::<f64>() / cohort.n_rows() as f64;
    let oracle_auc = auc(&probs, &cohort.labels)?;

    let mut masked_cells = 0;
    if opts.mask_rate > 0.0 {
        let full: Vec<Vec<f64>> = cohort
            .to_matrix()
            .into_iter()
            .map(|row| row.into_iter().map(|v| v.expect("generated cohort is complete")).collect())
            .collect();
        let (masked, mask) = mask_mcar(&full, opts.mask_rate, opts.seed ^ 0x5eed)?;
        for (r, row) in masked.iter().enumerate() {
            for (f, v) in row.iter().enumerate() {
                cohort.set_value(r, f, *v);
            }
        }
        masked_cells = mask.iter().flatten().filter(|&&m| m).count();
    }

    let cohort_path = out.join("cohort.csv");
    cohort.write_csv_path(&cohort_path)?;
    let clips_path = match clips {
        Some(v) => {
            let p = out.join("clips.svid");
            write_svid_path(&p, &v)?;
            Some(p)
        }
        None => None,
    };

    Ok(SynthReport {
        rows: opts.rows,
        prevalence,
        oracle_auc,
        masked_cells,
        cohort_path,
        clips_path,
    })
}
