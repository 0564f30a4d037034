//! Multiclass kernel SVM built from binary SMO machines.
//!
//! Inputs are z-scored with a [`Scaler`] fit on the training rows; the scaler
//! travels with the model so prediction takes raw feature vectors.

mod grid;
mod kernel;
mod smo;

pub use grid::{grid_search, grid_search_split, Grid, GridEntry, GridReport};
pub use kernel::{KernelConfig, KernelKind};
pub use smo::{dual_objective, kkt_violation, train_binary, BinaryMachine, BinaryTraining};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::Dataset;
use crate::scaling::Scaler;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    OneVsRest,
    OneVsOne,
}

impl fmt::Display for Reduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reduction::OneVsRest => "ovr",
            Reduction::OneVsOne => "ovo",
        })
    }
}

impl FromStr for Reduction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ovr" | "one_vs_rest" => Ok(Reduction::OneVsRest),
            "ovo" | "one_vs_one" => Ok(Reduction::OneVsOne),
            other => Err(Error::Config(format!("unknown reduction '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c: f64,
    pub kernel: KernelConfig,
    pub reduction: Reduction,
    /// Stopping tolerance on the maximal KKT violation.
    pub tol: f64,
    /// Iteration budget in sweeps of `n` pair updates; `None` means `10 n`,
    /// with at least a million pair updates in total.
    pub max_passes: Option<usize>,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            kernel: KernelConfig::rbf(0.1),
            reduction: Reduction::OneVsRest,
            tol: 1e-3,
            max_passes: None,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("C must be > 0, got {}", self.c)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be > 0, got {}", self.tol)));
        }
        self.kernel.validate()
    }
}

/// Which classes a binary machine separates. The first class (or the single
/// class of a one-vs-rest machine) is the positive side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MachineTag {
    Pair(usize, usize),
    Rest(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedMachine {
    pub tag: MachineTag,
    pub machine: BinaryMachine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub config: SvmConfig,
    /// Sorted class indices.
    pub classes: Vec<usize>,
    pub scaler: Scaler,
    pub machines: Vec<TaggedMachine>,
    /// False when any binary machine hit its iteration cap.
    pub converged: bool,
}

/// Trains one machine per class pair (`N(N-1)/2`) or per class (`N`).
pub fn train_multiclass(data: &Dataset, cfg: &SvmConfig) -> Result<SvmModel> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::DegenerateData("no training samples".into()));
    }
    let classes = data.classes();
    if classes.len() < 2 {
        return Err(Error::DegenerateData(format!(
            "need at least two classes, got {}",
            classes.len()
        )));
    }
    let scaler = Scaler::fit(&data.x)?;
    let x = scaler.transform_all(&data.x)?;

    let mut machines = Vec::new();
    let mut converged = true;
    match cfg.reduction {
        Reduction::OneVsOne => {
            for (a, &ca) in classes.iter().enumerate() {
                for &cb in &classes[a + 1..] {
                    let idx: Vec<usize> =
                        (0..data.len()).filter(|&i| data.y[i] == ca || data.y[i] == cb).collect();
                    let xs: Vec<Vec<f64>> = idx.iter().map(|&i| x[i].clone()).collect();
                    let ys: Vec<f64> =
                        idx.iter().map(|&i| if data.y[i] == ca { 1.0 } else { -1.0 }).collect();
                    let t = train_binary(&xs, &ys, cfg)?;
                    converged &= t.converged;
                    machines.push(TaggedMachine {
                        tag: MachineTag::Pair(ca, cb),
                        machine: t.machine,
                    });
                }
            }
        }
        Reduction::OneVsRest => {
            for &ca in &classes {
                let ys: Vec<f64> = data.y.iter().map(|&c| if c == ca { 1.0 } else { -1.0 }).collect();
                let t = train_binary(&x, &ys, cfg)?;
                converged &= t.converged;
                machines.push(TaggedMachine {
                    tag: MachineTag::Rest(ca),
                    machine: t.machine,
                });
            }
        }
    }
    Ok(SvmModel {
        config: *cfg,
        classes,
        scaler,
        machines,
        converged,
    })
}

impl SvmModel {
    /// Decision value of every machine, in machine order.
    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = self.scaler.transform(x)?;
        Ok(self.machines.iter().map(|m| m.machine.decision(&z)).collect())
    }

    /// One-vs-rest: largest decision value. One-vs-one: most votes, then the
    /// largest summed decision value, then the earliest class.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let values = self.decision_values(x)?;
        let k = self.classes.len();
        let pos = |c: usize| self.classes.iter().position(|&x| x == c).unwrap();
        let winner = match self.config.reduction {
            Reduction::OneVsRest => {
                let mut score = vec![f64::NEG_INFINITY; k];
                for (m, v) in self.machines.iter().zip(&values) {
                    if let MachineTag::Rest(c) = m.tag {
                        score[pos(c)] = *v;
                    }
                }
                argmax_first(&score, &vec![0.0; k])
            }
            Reduction::OneVsOne => {
                let mut votes = vec![0.0; k];
                let mut sums = vec![0.0; k];
                for (m, v) in self.machines.iter().zip(&values) {
                    if let MachineTag::Pair(a, b) = m.tag {
                        let (pa, pb) = (pos(a), pos(b));
                        if *v > 0.0 {
                            votes[pa] += 1.0;
                        } else {
                            votes[pb] += 1.0;
                        }
                        sums[pa] += v;
                        sums[pb] -= v;
                    }
                }
                argmax_first(&votes, &sums)
            }
        };
        Ok(self.classes[winner])
    }

    pub fn predict_all(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>> {
        rows.iter().map(|r| self.predict(r)).collect()
    }

    pub fn support_vector_count(&self) -> usize {
        self.machines.iter().map(|m| m.machine.support_vectors.len()).sum()
    }
}

/// Index of the largest `primary`, ties broken by `secondary`, then by index.
fn argmax_first(primary: &[f64], secondary: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..primary.len() {
        let better = primary[i] > primary[best]
            || (primary[i] == primary[best] && secondary[i] > secondary[best]);
        if better {
            best = i;
        }
    }
    best
}

/// Fraction of rows whose prediction matches the label.
pub fn accuracy(model: &SvmModel, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyData("accuracy of an empty set".into()));
    }
    let pred = model.predict_all(&data.x)?;
    Ok(pred.iter().zip(&data.y).filter(|(p, t)| p == t).count() as f64 / data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blobs(per_class: usize, seed: u64) -> Dataset {
        let centers = [[-4.0, -4.0], [4.0, -4.0], [-4.0, 4.0], [4.0, 4.0]];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (c, ctr) in centers.iter().enumerate() {
            for _ in 0..per_class {
                x.push(vec![ctr[0] + rng.random_range(-1.0..1.0), ctr[1] + rng.random_range(-1.0..1.0)]);
                y.push(c);
            }
        }
        Dataset::new(x, y).unwrap()
    }

    fn cfg(reduction: Reduction) -> SvmConfig {
        SvmConfig {
            c: 1.0,
            kernel: KernelConfig::linear(),
            reduction,
            ..SvmConfig::default()
        }
    }

    #[test]
    fn machine_counts() {
        let data = blobs(10, 1);
        let ovo = train_multiclass(&data, &cfg(Reduction::OneVsOne)).unwrap();
        assert_eq!(ovo.machines.len(), 6);
        let ovr = train_multiclass(&data, &cfg(Reduction::OneVsRest)).unwrap();
        assert_eq!(ovr.machines.len(), 4);
    }

    #[test]
    fn one_class_is_degenerate() {
        let data = Dataset::new(vec![vec![0.0], vec![1.0]], vec![2, 2]).unwrap();
        assert!(matches!(
            train_multiclass(&data, &cfg(Reduction::OneVsOne)),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn predicts_training_support_vectors() {
        let data = blobs(15, 2);
        for red in [Reduction::OneVsOne, Reduction::OneVsRest] {
            let m = train_multiclass(&data, &cfg(red)).unwrap();
            assert_eq!(accuracy(&m, &data).unwrap(), 1.0);
            // A support vector, mapped back to raw units, is classified as its own class.
            let tm = &m.machines[0];
            let sv = &tm.machine.support_vectors[0];
            let raw: Vec<f64> = sv
                .iter()
                .zip(&m.scaler.mean)
                .zip(&m.scaler.std)
                .map(|((z, mu), s)| z * s + mu)
                .collect();
            let i = data
                .x
                .iter()
                .position(|r| r.iter().zip(&raw).all(|(a, b)| (a - b).abs() < 1e-9))
                .unwrap();
            assert_eq!(m.predict(&raw).unwrap(), data.y[i]);
            assert!(matches!(m.predict(&[0.0]), Err(Error::Shape { .. })));
        }
    }

    #[test]
    fn xor_multiclass() {
        let data = Dataset::new(
            vec![vec![1.0, 1.0], vec![-1.0, -1.0], vec![1.0, -1.0], vec![-1.0, 1.0]],
            vec![0, 0, 1, 1],
        )
        .unwrap();
        let c = SvmConfig {
            c: 100.0,
            kernel: KernelConfig::rbf(1.0),
            reduction: Reduction::OneVsOne,
            ..SvmConfig::default()
        };
        let m = train_multiclass(&data, &c).unwrap();
        assert_eq!(m.predict_all(&data.x).unwrap(), data.y);
    }

    #[test]
    fn ovr_tie_goes_to_first_class() {
        // Two mirror-image machines produce equal decision values at the origin.
        let machine = |sign: f64| BinaryMachine {
            kernel: KernelConfig::linear(),
            support_vectors: vec![vec![1.0]],
            coefficients: vec![sign],
            bias: 0.5,
        };
        let model = SvmModel {
            config: cfg(Reduction::OneVsRest),
            classes: vec![1, 3],
            scaler: Scaler { mean: vec![0.0], std: vec![1.0] },
            machines: vec![
                TaggedMachine { tag: MachineTag::Rest(1), machine: machine(1.0) },
                TaggedMachine { tag: MachineTag::Rest(3), machine: machine(-1.0) },
            ],
            converged: true,
        };
        let v = model.decision_values(&[0.0]).unwrap();
        assert_eq!(v[0], v[1]);
        assert_eq!(model.predict(&[0.0]).unwrap(), 1);
        assert_eq!(model.predict(&[1.0]).unwrap(), 1);
        assert_eq!(model.predict(&[-1.0]).unwrap(), 3);
    }

    #[test]
    fn ovo_vote_tie_uses_decision_sums() {
        assert_eq!(argmax_first(&[1.0, 1.0, 1.0], &[0.2, 0.7, -0.9]), 1);
        assert_eq!(argmax_first(&[1.0, 1.0], &[0.0, 0.0]), 0);
        assert_eq!(argmax_first(&[0.0, 2.0], &[5.0, -5.0]), 1);
    }

    #[test]
    fn prediction_is_deterministic_and_scale_invariant() {
        let data = blobs(12, 3);
        let c = SvmConfig { kernel: KernelConfig::rbf(0.5), ..SvmConfig::default() };
        let m = train_multiclass(&data, &c).unwrap();
        let probe: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i as f64 * 0.7).sin() * 5.0, (i as f64 * 1.3).cos() * 5.0])
            .collect();
        let p1 = m.predict_all(&probe).unwrap();
        assert_eq!(p1, m.predict_all(&probe).unwrap());

        let scale = |r: &Vec<f64>| vec![r[0] * 1000.0 + 7.0, r[1] * 0.01 - 3.0];
        let scaled = Dataset::new(data.x.iter().map(scale).collect(), data.y.clone()).unwrap();
        let m2 = train_multiclass(&scaled, &c).unwrap();
        let p2 = m2.predict_all(&probe.iter().map(scale).collect::<Vec<_>>()).unwrap();
        assert_eq!(p1, p2);
    }
}
