use chrono::NaiveDate;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::eval::auc::auc;
use crate::nn::tensor::sigmoid;
use crate::tabular::cohort::{Cohort, FeatureKind, FeatureSpec, Modality};

/// True per-feature effect on the log-odds. The library stays inside
/// degree-3 polynomials so a cubic-branch model can recover every shape
/// exactly; the sigmoid is a deliberate out-of-class stress shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EffectFn {
    Null,
    Linear { slope: f64 },
    /// Centered bowl `scale * x^2`.
    Quadratic { scale: f64 },
    /// Strictly increasing cubic `scale * (x^3 + 0.5 x)`.
    MonotoneCubic { scale: f64 },
    /// Out-of-class stress shape `scale * (sigmoid(steepness * x) - 0.5)`.
    Sigmoid { scale: f64, steepness: f64 },
}

impl EffectFn {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            EffectFn::Null => 0.0,
            EffectFn::Linear { slope } => slope * x,
            EffectFn::Quadratic { scale } => scale * x * x,
            EffectFn::MonotoneCubic { scale } => scale * (x * x * x + 0.5 * x),
            EffectFn::Sigmoid { scale, steepness } => scale * (sigmoid(steepness * x) - 0.5),
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, EffectFn::Null)
    }
}

/// Sampling distribution of a feature's raw values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureDist {
    /// Uniform on [-1, 1].
    Uniform,
    /// Normal(0, 0.5): mostly within [-1.5, 1.5].
    Gaussian,
    /// {0, 1} with the given success probability; marks a binary feature.
    Bernoulli { p: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGen {
    pub name: String,
    pub modality: Modality,
    pub dist: FeatureDist,
    pub effect: EffectFn,
}

impl FeatureGen {
    pub fn new(name: &str, modality: Modality, dist: FeatureDist, effect: EffectFn) -> Self {
        FeatureGen { name: name.into(), modality, dist, effect }
    }

    fn spec(&self) -> FeatureSpec {
        FeatureSpec {
            name: self.name.clone(),
            kind: match self.dist {
                FeatureDist::Bernoulli { .. } => FeatureKind::Binary,
                _ => FeatureKind::Continuous,
            },
            modality: self.modality,
            limits: None,
        }
    }
}

/// Generator with exactly separable ground truth:
/// `log-odds(x) = bias + sum_i effect_i(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub features: Vec<FeatureGen>,
    pub bias: f64,
}

impl GeneratorSpec {
    pub fn true_logodds(&self, row: &[f64]) -> f64 {
        self.bias
            + self
                .features
                .iter()
                .zip(row)
                .map(|(f, &x)| f.effect.eval(x))
                .sum::<f64>()
    }

    /// Clinically shaped eleven-feature demo cohort in standardized units:
    /// both modalities, one binary feature, one null feature per modality so
    /// rankings have something to suppress, and every effect family
    /// represented. Used by the `synth` subcommand and the examples.
    pub fn demo() -> Self {
        use EffectFn::*;
        use FeatureDist::*;
        use Modality::*;
        GeneratorSpec {
            features: vec![
                FeatureGen::new("age", Cd, Gaussian, MonotoneCubic { scale: 1.1 }),
                FeatureGen::new("heart_rate", Cd, Gaussian, Quadratic { scale: 0.9 }),
                FeatureGen::new("weight", Cd, Uniform, Linear { slope: 0.8 }),
                FeatureGen::new("diastolic_bp", Cd, Gaussian, Linear { slope: 0.7 }),
                FeatureGen::new(
                    "systolic_bp",
                    Cd,
                    Gaussian,
                    Sigmoid { scale: 0.9, steepness: 3.0 },
                ),
                FeatureGen::new("male_sex", Cd, Bernoulli { p: 0.45 }, Linear { slope: 0.6 }),
                FeatureGen::new("cd_noise", Cd, Uniform, Null),
                // The `edm_` prefix survives CSV round-trips as the modality tag.
                FeatureGen::new("edm_ee_ratio", Edm, Gaussian, MonotoneCubic { scale: 0.9 }),
                FeatureGen::new("edm_lvef", Edm, Uniform, Linear { slope: -0.9 }),
                FeatureGen::new("edm_dec_time", Edm, Gaussian, Quadratic { scale: 0.7 }),
                FeatureGen::new("edm_noise", Edm, Gaussian, Null),
            ],
            bias: -0.9,
        }
    }
}

/// Samples one raw feature row in place.
pub(crate) fn sample_row(spec: &GeneratorSpec, rng: &mut ChaCha8Rng, row: &mut [f64]) {
    for (j, f) in spec.features.iter().enumerate() {
        row[j] = match f.dist {
            FeatureDist::Uniform => rng.random_range(-1.0..1.0),
            FeatureDist::Gaussian => {
                let z: f64 = StandardNormal.sample(rng);
                0.5 * z
            }
            FeatureDist::Bernoulli { p } => {
                if rng.random_range(0.0..1.0) < p {
                    1.0
                } else {
                    0.0
                }
            }
        };
    }
}

/// Wraps sampled values and labels into a cohort with synthetic patient ids
/// (`p000000`, ...) and a fixed study time.
pub(crate) fn assemble_cohort(
    spec: &GeneratorSpec,
    values: Vec<Option<f64>>,
    labels: Vec<u8>,
) -> Result<Cohort> {
    let n = labels.len();
    let base = NaiveDate::from_ymd_opt(2020, 6, 1)
        .expect("valid date")
        .and_hms_opt(12, 0, 0)
        .expect("valid time");
    Cohort::new(
        spec.features.iter().map(FeatureGen::spec).collect(),
        (0..n).map(|i| format!("p{i:06}")).collect(),
        vec![base; n],
        labels,
        values,
    )
}

/// Samples a cohort and returns it with the true per-row event
/// probabilities, the oracle any fitted model is scored against.
pub fn gen_tabular(spec: &GeneratorSpec, n: usize, seed: u64) -> Result<(Cohort, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = spec.features.len();
    let mut values = Vec::with_capacity(n * p);
    let mut labels = Vec::with_capacity(n);
    let mut probs = Vec::with_capacity(n);
    let mut row = vec![0.0; p];

    for _ in 0..n {
        sample_row(spec, &mut rng, &mut row);
        let prob = sigmoid(spec.true_logodds(&row));
        let label = u8::from(rng.random_range(0.0..1.0) < prob);
        values.extend(row.iter().map(|&v| Some(v)));
        labels.push(label);
        probs.push(prob);
    }

    let cohort = assemble_cohort(spec, values, labels)?;
    Ok((cohort, probs))
}

/// AUC of the true generating probabilities against the realized labels:
/// the Bayes ceiling for any model fit on this cohort.
pub fn oracle_auc(true_probs: &[f64], labels: &[u8]) -> Result<f64> {
    auc(true_probs, labels)
}
