//! Pairwise AUC maximisation with ROC fairness constraints on synthetic
//! two-group data and a linear scorer.
//!
//! Both groups share one base sample (labels and features); the skewed group
//! feature is shifted by `+skew` in group p and `−skew` in group u. With
//! `skew = 0` the groups are identical and every rate gap is exactly zero.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{
    sigmoid, ConstrainedProblem, Constraint, Evaluation, InstanceSpec, NestedAbsHingeConstraint, Objective, Oracle,
    ProblemConstants,
};
use crate::stream::{splitmix64, SampleId};
use crate::{Error, Result, Vector};

const FEATURES: usize = 3;
const REGION_RADIUS: f64 = 5.0;
/// max |σ''|
const SIGMOID_CURVATURE: f64 = 0.096_225;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FairnessSpec {
    pub n_per_group: usize,
    pub thresholds: Vec<f64>,
    pub kappa: f64,
    pub seed: u64,
    /// Group shift of the biased feature.
    #[serde(default = "default_skew")]
    pub skew: f64,
    /// Class separation of the unbiased feature.
    #[serde(default = "default_signal")]
    pub signal: f64,
    /// Class separation of the biased feature.
    #[serde(default = "default_group_signal")]
    pub group_signal: f64,
    /// ℓ2 weight added to the AUC loss so its minimiser is finite.
    #[serde(default = "default_ridge")]
    pub ridge: f64,
}

fn default_skew() -> f64 {
    0.75
}
fn default_signal() -> f64 {
    1.0
}
fn default_group_signal() -> f64 {
    0.5
}
fn default_ridge() -> f64 {
    0.05
}

/// Labelled features of one group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupData {
    pub positives: Vec<[f64; FEATURES]>,
    pub negatives: Vec<[f64; FEATURES]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FairnessData {
    pub groups: [GroupData; 2],
}

impl FairnessData {
    fn pooled(&self, positive: bool) -> Vec<[f64; FEATURES]> {
        self.groups
            .iter()
            .flat_map(|g| {
                if positive {
                    g.positives.clone()
                } else {
                    g.negatives.clone()
                }
            })
            .collect()
    }
}

/// Mean of σ(s(a⁺) − s(a⁻)) over all positive/negative pairs, pooled across
/// groups. Larger is better.
pub fn auc_surrogate(data: &FairnessData, w: &Vector) -> f64 {
    let pos = data.pooled(true);
    let neg = data.pooled(false);
    let sp: Vec<f64> = pos.iter().map(|a| dot(w, a)).collect();
    let sn: Vec<f64> = neg.iter().map(|a| dot(w, a)).collect();
    let mut total = 0.0;
    for p in &sp {
        for n in &sn {
            total += sigmoid(p - n);
        }
    }
    total / (sp.len() * sn.len()) as f64
}

fn dot(w: &Vector, a: &[f64; FEATURES]) -> f64 {
    w[0] * a[0] + w[1] * a[1] + w[2] * a[2]
}

impl FairnessSpec {
    pub fn new(n_per_group: usize, thresholds: Vec<f64>, kappa: f64, seed: u64) -> Self {
        Self {
            n_per_group,
            thresholds,
            kappa,
            seed,
            skew: default_skew(),
            signal: default_signal(),
            group_signal: default_group_signal(),
            ridge: default_ridge(),
        }
    }

    pub fn data(&self) -> Result<FairnessData> {
        if self.n_per_group < 10 {
            return Err(Error::invalid("n_per_group", "at least 10 examples per group"));
        }
        if self.thresholds.is_empty() {
            return Err(Error::invalid("thresholds", "at least one threshold"));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::invalid("kappa", "must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(self.seed ^ 0xfa1e));
        let mut base = Vec::with_capacity(self.n_per_group);
        for _ in 0..self.n_per_group {
            let y: f64 = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let z: [f64; 3] = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            base.push((y > 0.0, [y * self.signal + z[0], z[1], y * self.group_signal + z[2]]));
        }
        let group = |shift: f64, name: &'static str| -> Result<GroupData> {
            let mut g = GroupData {
                positives: Vec::new(),
                negatives: Vec::new(),
            };
            for (pos, a) in &base {
                let a = [a[0], a[1], a[2] + shift];
                if *pos {
                    g.positives.push(a);
                } else {
                    g.negatives.push(a);
                }
            }
            if g.positives.is_empty() {
                return Err(Error::DegenerateGroup {
                    group: name,
                    missing: "positive",
                });
            }
            if g.negatives.is_empty() {
                return Err(Error::DegenerateGroup {
                    group: name,
                    missing: "negative",
                });
            }
            Ok(g)
        };
        Ok(FairnessData {
            groups: [group(self.skew, "p")?, group(-self.skew, "u")?],
        })
    }

    pub fn build(&self) -> Result<ConstrainedProblem> {
        let data = self.data()?;
        let pos = Arc::new(data.pooled(true));
        let neg = Arc::new(data.pooled(false));
        let amax = pos
            .iter()
            .chain(neg.iter())
            .map(|a| a.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let rn = REGION_RADIUS * (FEATURES as f64).sqrt();
        let objective = PairwiseAucOracle {
            pos,
            neg,
            ridge: self.ridge,
        };

        let mut constraints = Vec::with_capacity(2 * self.thresholds.len());
        for &tau in &self.thresholds {
            for (rate, positive) in [("tpr", true), ("fpr", false)] {
                let subset = |g: &GroupData| -> Arc<dyn Oracle> {
                    let examples = if positive {
                        g.positives.clone()
                    } else {
                        g.negatives.clone()
                    };
                    Arc::new(GroupRateOracle {
                        examples: Arc::new(examples),
                        threshold: tau,
                    })
                };
                constraints.push(Constraint::NestedAbs(NestedAbsHingeConstraint {
                    label: format!("{rate}_th_{tau}"),
                    first: subset(&data.groups[0]),
                    second: subset(&data.groups[1]),
                    kappa: self.kappa,
                }));
            }
        }
        let dmax = 2.0 * amax;
        let constants = ProblemConstants {
            rho_objective: (SIGMOID_CURVATURE * dmax * dmax - self.ridge).max(0.0),
            rho_constraints: 2.0 * SIGMOID_CURVATURE * amax * amax,
            lipschitz_objective: 0.25 * dmax + self.ridge * rn,
            lipschitz_constraints: 0.5 * amax,
            region_radius: REGION_RADIUS,
            noise_objective: 0.5,
            noise_constraints: 0.5,
            regularity_delta: None,
            fcco: None,
        };
        let mut p = ConstrainedProblem::new(
            "fairness",
            Objective::Plain(Arc::new(objective)),
            constraints,
            constants,
            Vector::zeros(FEATURES),
        )?;
        p.spec = Some(InstanceSpec::Fairness(self.clone()));
        Ok(p)
    }
}

/// Synthetic ROC-fairness instance with 2·|thresholds| rate-gap constraints.
pub fn make_fairness_instance(
    n_per_group: usize,
    thresholds: Vec<f64>,
    kappa: f64,
    seed: u64,
) -> Result<ConstrainedProblem> {
    FairnessSpec::new(n_per_group, thresholds, kappa, seed).build()
}

/// −σ(wᵀ(a⁺ − a⁻)) + (ridge/2)‖w‖², averaged over positive/negative pairs.
/// A sample is one uniformly drawn pair.
#[derive(Debug)]
struct PairwiseAucOracle {
    pos: Arc<Vec<[f64; FEATURES]>>,
    neg: Arc<Vec<[f64; FEATURES]>>,
    ridge: f64,
}

impl Oracle for PairwiseAucOracle {
    fn dim(&self) -> usize {
        FEATURES
    }

    fn noise_level(&self) -> f64 {
        0.5
    }

    fn sample(&self, w: &Vector, sample: SampleId) -> Evaluation {
        let mut rng = sample.rng();
        let a = &self.pos[rng.random_range(0..self.pos.len())];
        let b = &self.neg[rng.random_range(0..self.neg.len())];
        let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
        let s = sigmoid(dot(w, &d));
        let slope = -s * (1.0 - s);
        let grad = Vector::from_fn(FEATURES, |i, _| slope * d[i] + self.ridge * w[i]);
        Evaluation::new(-s + 0.5 * self.ridge * w.norm_squared(), grad)
    }

    fn exact(&self, w: &Vector) -> Option<Evaluation> {
        let sp: Vec<f64> = self.pos.iter().map(|a| dot(w, a)).collect();
        let sn: Vec<f64> = self.neg.iter().map(|a| dot(w, a)).collect();
        let mut row = vec![0.0; sp.len()];
        let mut col = vec![0.0; sn.len()];
        let mut value = 0.0;
        for (i, p) in sp.iter().enumerate() {
            for (j, n) in sn.iter().enumerate() {
                let s = sigmoid(p - n);
                value += s;
                let c = s * (1.0 - s);
                row[i] += c;
                col[j] += c;
            }
        }
        let pairs = (sp.len() * sn.len()) as f64;
        let mut grad = Vector::zeros(FEATURES);
        for (a, r) in self.pos.iter().zip(&row) {
            for k in 0..FEATURES {
                grad[k] -= r * a[k];
            }
        }
        for (a, c) in self.neg.iter().zip(&col) {
            for k in 0..FEATURES {
                grad[k] += c * a[k];
            }
        }
        grad /= pairs;
        grad.axpy(self.ridge, w, 1.0);
        Some(Evaluation::new(
            -value / pairs + 0.5 * self.ridge * w.norm_squared(),
            grad,
        ))
    }
}

/// Smoothed rate (1/|S|) Σ_{a∈S} σ(wᵀa − τ) over one group/label subset.
#[derive(Debug)]
struct GroupRateOracle {
    examples: Arc<Vec<[f64; FEATURES]>>,
    threshold: f64,
}

impl GroupRateOracle {
    fn term(&self, w: &Vector, a: &[f64; FEATURES]) -> (f64, f64) {
        let s = sigmoid(dot(w, a) - self.threshold);
        (s, s * (1.0 - s))
    }
}

impl Oracle for GroupRateOracle {
    fn dim(&self) -> usize {
        FEATURES
    }

    fn noise_level(&self) -> f64 {
        0.5
    }

    fn sample(&self, w: &Vector, sample: SampleId) -> Evaluation {
        let a = &self.examples[sample.rng().random_range(0..self.examples.len())];
        let (v, d) = self.term(w, a);
        Evaluation::new(v, Vector::from_fn(FEATURES, |i, _| d * a[i]))
    }

    fn exact(&self, w: &Vector) -> Option<Evaluation> {
        let mut value = 0.0;
        let mut grad = Vector::zeros(FEATURES);
        for a in self.examples.iter() {
            let (v, d) = self.term(w, a);
            value += v;
            for k in 0..FEATURES {
                grad[k] += d * a[k];
            }
        }
        let n = self.examples.len() as f64;
        Some(Evaluation::new(value / n, grad / n))
    }
}
