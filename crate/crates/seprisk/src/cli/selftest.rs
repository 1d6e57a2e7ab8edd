use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::additive::model::AdditiveRiskModel;
use crate::additive::train::{train_additive, TrainConfig};
use crate::additive::model::ModalityConfig;
use crate::error::{Error, Result};
use crate::eval::auc::{auc, auc_brute_force};
use crate::nn::gradcheck::grad_check;
use crate::nn::tensor::Tensor;
use crate::synth::tabular::{gen_tabular, GeneratorSpec};
use crate::tabular::normalize::{FeatureNorm, NormStats};
use crate::video::clip::VideoClip;
use crate::video::net::{VideoNet, VideoNetConfig};

/// Full-scale network parameter budget the implementation must reproduce.
pub const EXPECTED_TRAINABLE: usize = 4237;
pub const EXPECTED_NON_TRAINABLE: usize = 56;

#[derive(Debug, Clone)]
pub struct SelfCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct SelftestReport {
    pub checks: Vec<SelfCheck>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{}  {} ({})\n",
                if c.passed { "ok  " } else { "FAIL" },
                c.name,
                c.detail
            ));
        }
        out.push_str(&format!(
            "{} of {} checks passed\n",
            self.checks.iter().filter(|c| c.passed).count(),
            self.checks.len()
        ));
        out
    }
}

fn check(name: &'static str, result: Result<String>) -> SelfCheck {
    match result {
        Ok(detail) => SelfCheck { name, passed: true, detail },
        Err(e) => SelfCheck { name, passed: false, detail: e.to_string() },
    }
}

fn architecture_identity() -> Result<String> {
    let net = VideoNet::new(VideoNetConfig::full_scale())?;
    let (trainable, frozen) = net.param_count();
    if (trainable, frozen) != (EXPECTED_TRAINABLE, EXPECTED_NON_TRAINABLE) {
        return Err(Error::Numeric(format!(
            "parameter count ({trainable}, {frozen}) != ({EXPECTED_TRAINABLE}, {EXPECTED_NON_TRAINABLE})"
        )));
    }
    Ok(format!("{trainable} trainable + {frozen} frozen parameters"))
}

fn video_gradient_check() -> Result<String> {
    let cfg = VideoNetConfig { frames: 2, height: 5, width: 7, ..VideoNetConfig::full_scale() };
    let mut worst: f64 = 0.0;
    for seed in [3u64, 17] {
        let net = VideoNet::init(cfg.clone(), seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc11f);
        let n = cfg.frames * cfg.height * cfg.width;
        let data: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let clip = VideoClip::new(
            Tensor::from_vec(&[cfg.frames, cfg.height, cfg.width], data)?,
            30.0,
            "selftest",
        )?;

        let (_, cache) = net.clone().forward_train(&clip)?;
        let analytic = net.backward(&cache, 1.0)?;
        let params = net.params_flat();
        let f = |q: &[f64]| -> Result<f64> {
            let mut n = net.clone();
            n.set_params_flat(q)?;
            Ok(n.forward_train(&clip)?.0)
        };
        worst = worst.max(grad_check(f, &params, &analytic, 1e-5)?);
    }
    if worst >= 1e-4 {
        return Err(Error::Numeric(format!("max relative gradient error {worst:.2e} >= 1e-4")));
    }
    Ok(format!("max relative error {worst:.2e} over every trainable parameter"))
}

fn auc_equivalence() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..20 {
        let n = rng.random_range(2..=200);
        // Coarse scores force ties; labels resample until both classes show.
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..12i32)) / 4.0).collect();
        let labels: Vec<u8> = loop {
            let l: Vec<u8> = (0..n).map(|_| u8::from(rng.random_range(0.0..1.0) < 0.4)).collect();
            if l.iter().any(|&y| y == 1) && l.iter().any(|&y| y == 0) {
                break l;
            }
        };
        let fast = auc(&scores, &labels)?;
        let brute = auc_brute_force(&scores, &labels)?;
        if fast != brute {
            return Err(Error::Numeric(format!(
                "case {case}: rank-based {fast} != brute-force {brute}"
            )));
        }
    }
    Ok("rank-based AUC equals the pairwise definition on 20 tied score sets".into())
}

fn tiny_model() -> Result<AdditiveRiskModel> {
    let (cohort, _) = gen_tabular(&GeneratorSpec::demo(), 160, 12)?;
    let rows: Vec<usize> = (0..cohort.n_rows()).collect();
    let (train_rows, val_rows) = rows.split_at(120);
    let tc = TrainConfig { max_epochs: 12, batch_size: 64, ..TrainConfig::default() };
    let out = train_additive(
        &cohort,
        train_rows,
        val_rows,
        None,
        ModalityConfig::CD_EDM,
        &tc,
    )?;
    Ok(out.model)
}

fn separability(model: &AdditiveRiskModel) -> Result<String> {
    let (cohort, _) = gen_tabular(&GeneratorSpec::demo(), 40, 13)?;
    let rows: Vec<usize> = (0..cohort.n_rows()).collect();
    let matrix = model.norm_stats.apply_cohort(&cohort, &rows)?;
    let mut worst: f64 = 0.0;
    for row in &matrix {
        let total = model.logodds(row, None)?;
        let mut manual = model.bias;
        for b in model.poly_branches() {
            manual += b.contribution(row[model.norm_stats.feature_index(&b.feature)?]);
        }
        for b in &model.binary_branches {
            manual += b.weight * row[model.norm_stats.feature_index(&b.feature)?];
        }
        worst = worst.max((total - manual).abs());
    }
    if worst >= 1e-12 {
        return Err(Error::Numeric(format!(
            "log-odds deviate from the branch sum by {worst:.2e}"
        )));
    }
    Ok(format!("log-odds equal the branch sum to {worst:.1e} on 40 samples"))
}

fn model_file_round_trip(model: &AdditiveRiskModel, dir: &std::path::Path) -> Result<String> {
    let path = dir.join("model.json");
    model.save(&path)?;
    let loaded = AdditiveRiskModel::load(&path)?;
    let again = dir.join("model_again.json");
    loaded.save(&again)?;
    if std::fs::read(&path)? != std::fs::read(&again)? {
        return Err(Error::ModelFile("save -> load -> save is not byte identical".into()));
    }

    // A corrupted file must be rejected, not silently repaired.
    let mut text = std::fs::read_to_string(&path)?;
    text = text.replace("\"bias\"", "\"bais\"");
    let bad = dir.join("model_bad.json");
    std::fs::write(&bad, &text)?;
    match AdditiveRiskModel::load(&bad) {
        Err(e) if e.is_validation() => {}
        Err(e) => return Err(Error::ModelFile(format!("corruption surfaced as non-validation: {e}"))),
        Ok(_) => return Err(Error::ModelFile("corrupted model file loaded silently".into())),
    }

    // So must a structurally valid file that violates the weight constraint.
    let mut negative = loaded.clone();
    if let Some(b) = negative.scalar_branches.first_mut() {
        b.weight = -0.25;
    }
    let neg_text = serde_json::to_string(&negative)
        .map_err(|e| Error::ModelFile(format!("serialization failed: {e}")))?;
    if AdditiveRiskModel::from_json(&neg_text).is_ok() {
        return Err(Error::ModelFile("negative fusion weight passed validation".into()));
    }
    Ok("round trip byte identical; corrupted and constraint-violating files rejected".into())
}

fn normalization_identity() -> Result<String> {
    let stats = NormStats {
        features: vec![FeatureNorm { name: "x".into(), min: 0.0, max: 10.0, bypass: false }],
    };
    let got = stats.apply_value(0, 12.0);
    if got != 1.4 {
        return Err(Error::Numeric(format!("normalize(12 on [0,10]) = {got}, expected 1.4")));
    }
    let back = stats.invert_value(0, got);
    if (back - 12.0).abs() > 1e-12 {
        return Err(Error::Numeric(format!("invert(1.4) = {back}, expected 12")));
    }
    Ok("out-of-range values extrapolate linearly and invert exactly".into())
}

/// Runs the built-in integrity checks and reports one line per check. Any
/// failure makes the command exit nonzero; scratch files go to a temp
/// directory that is removed afterwards.
pub fn cmd_selftest() -> Result<SelftestReport> {
    let scratch = std::env::temp_dir().join(format!("seprisk_selftest_{}", std::process::id()));
    std::fs::create_dir_all(&scratch)?;

    let mut checks = vec![
        check("architecture parameter identity", architecture_identity()),
        check("video network gradients", video_gradient_check()),
        check("auc rank/pairwise equivalence", auc_equivalence()),
        check("feature normalization", normalization_identity()),
    ];
    match tiny_model() {
        Ok(model) => {
            checks.push(check("model separability", separability(&model)));
            checks.push(check("model file round trip", model_file_round_trip(&model, &scratch)));
        }
        Err(e) => {
            checks.push(SelfCheck {
                name: "model separability",
                passed: false,
                detail: format!("training failed: {e}"),
            });
        }
    }

    let _ = std::fs::remove_dir_all(&scratch);
    Ok(SelftestReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        let report = cmd_selftest().unwrap();
        assert!(report.passed(), "{}", report.render_text());
        assert_eq!(report.checks.len(), 6);
        let text = report.render_text();
        assert!(text.contains("6 of 6 checks passed"), "{text}");
    }
}
