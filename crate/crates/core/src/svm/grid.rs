use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{accuracy, train_multiclass, KernelConfig, KernelKind, SvmConfig, SvmModel};
use crate::error::{Error, Result};
use crate::evaluation::Dataset;

/// Hyperparameter grid. Every combination is trained, including the `gamma`
/// values that a linear kernel ignores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub cs: Vec<f64>,
    pub gammas: Vec<f64>,
    pub kernels: Vec<KernelKind>,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            cs: vec![0.1, 1.0, 10.0, 100.0],
            gammas: vec![1.0, 0.1, 0.01, 0.001],
            kernels: KernelKind::ALL.to_vec(),
        }
    }
}

impl Grid {
    pub fn len(&self) -> usize {
        self.cs.len() * self.gammas.len() * self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All configurations, kernel-major then C then gamma.
    pub fn configs(&self, base: &SvmConfig) -> Vec<SvmConfig> {
        let mut out = Vec::with_capacity(self.len());
        for &kind in &self.kernels {
            for &c in &self.cs {
                for &gamma in &self.gammas {
                    out.push(SvmConfig {
                        c,
                        kernel: KernelConfig {
                            kind,
                            gamma,
                            ..base.kernel
                        },
                        ..*base
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub config: SvmConfig,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub converged: bool,
    /// Wall-clock training time of this combination.
    pub train_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct GridReport {
    pub entries: Vec<GridEntry>,
    /// Index of the selected entry.
    pub best: usize,
    pub best_model: SvmModel,
    /// Wall-clock time of the whole search.
    pub total_seconds: f64,
}

impl GridReport {
    pub fn best_config(&self) -> SvmConfig {
        self.entries[self.best].config
    }
}

/// Trains every grid combination on `train` and scores it on `test`.
///
/// The winner has the highest test accuracy; ties go to the simpler kernel
/// (linear < rbf < poly < sigmoid), then the smaller C, then grid order.
pub fn grid_search(train: &Dataset, test: &Dataset, grid: &Grid, base: &SvmConfig) -> Result<GridReport> {
    if grid.is_empty() {
        return Err(Error::Config("empty hyperparameter grid".into()));
    }
    if test.is_empty() {
        return Err(Error::EmptyData("grid search needs a non-empty test set".into()));
    }
    let start = Instant::now();
    let results = grid
        .configs(base)
        .into_par_iter()
        .map(|cfg| -> Result<(GridEntry, SvmModel)> {
            let t0 = Instant::now();
            let model = train_multiclass(train, &cfg)?;
            let train_seconds = t0.elapsed().as_secs_f64();
            let entry = GridEntry {
                config: cfg,
                train_accuracy: accuracy(&model, train)?,
                test_accuracy: accuracy(&model, test)?,
                converged: model.converged,
                train_seconds,
            };
            Ok((entry, model))
        })
        .collect::<Result<Vec<_>>>()?;
    let total_seconds = start.elapsed().as_secs_f64();

    let mut best = 0;
    for (i, (e, _)) in results.iter().enumerate().skip(1) {
        let b = &results[best].0;
        let better = e.test_accuracy > b.test_accuracy
            || (e.test_accuracy == b.test_accuracy
                && (e.config.kernel.kind, e.config.c) < (b.config.kernel.kind, b.config.c));
        if better {
            best = i;
        }
    }
    let (entries, mut models): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok(GridReport {
        entries,
        best,
        best_model: models.swap_remove(best),
        total_seconds,
    })
}

/// Stratified split followed by [`grid_search`].
pub fn grid_search_split(
    data: &Dataset,
    grid: &Grid,
    test_fraction: f64,
    seed: u64,
    base: &SvmConfig,
) -> Result<(GridReport, Dataset, Dataset)> {
    let (train, test) = data.stratified_split(test_fraction, seed)?;
    let report = grid_search(&train, &test, grid, base)?;
    Ok((report, train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> Dataset {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..40 {
            let j = (i as f64 * 0.61).sin();
            let c = i % 4;
            let (cx, cy) = [(0.0, 0.0), (6.0, 0.0), (0.0, 6.0), (6.0, 6.0)][c];
            x.push(vec![cx + j, cy - j * 0.5]);
            y.push(c);
        }
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn full_grid_has_64_configs() {
        let grid = Grid::default();
        assert_eq!(grid.len(), 64);
        let configs = grid.configs(&SvmConfig::default());
        assert_eq!(configs.len(), 64);
        for kind in KernelKind::ALL {
            assert_eq!(configs.iter().filter(|c| c.kernel.kind == kind).count(), 16);
        }
    }

    #[test]
    fn separable_data_reaches_full_accuracy() {
        let grid = Grid {
            cs: vec![0.1, 1.0],
            gammas: vec![1.0, 0.1],
            kernels: vec![KernelKind::Rbf, KernelKind::Linear],
        };
        let (report, _, _) = grid_search_split(&separable(), &grid, 0.25, 42, &SvmConfig::default()).unwrap();
        assert_eq!(report.entries.len(), 8);
        let best = &report.entries[report.best];
        assert_eq!(best.test_accuracy, 1.0);
        // Tie-break: linear before rbf, then smallest C, then first gamma.
        assert_eq!(best.config.kernel.kind, KernelKind::Linear);
        assert_eq!(best.config.c, 0.1);
        assert_eq!(best.config.kernel.gamma, 1.0);
    }

    #[test]
    fn empty_grid_is_rejected() {
        let grid = Grid { cs: vec![], ..Grid::default() };
        let data = separable();
        assert!(grid_search(&data, &data, &grid, &SvmConfig::default()).is_err());
    }
}
