//! Datasets, stratified train/test splitting and confusion matrices.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feature rows with class indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
}

impl Dataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<usize>) -> Result<Dataset> {
        if x.len() != y.len() {
            return Err(Error::Shape {
                expected: x.len(),
                actual: y.len(),
            });
        }
        if let Some(first) = x.first() {
            if let Some(bad) = x.iter().find(|r| r.len() != first.len()) {
                return Err(Error::Shape {
                    expected: first.len(),
                    actual: bad.len(),
                });
            }
        }
        Ok(Dataset { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    /// Sorted distinct class indices.
    pub fn classes(&self) -> Vec<usize> {
        let mut c = self.y.clone();
        c.sort_unstable();
        c.dedup();
        c
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: idx.iter().map(|&i| self.x[i].clone()).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }

    /// Stratified split: within each class a seeded shuffle sends
    /// `round(test_fraction * n_class)` samples to the test set, always
    /// leaving at least one sample for training.
    pub fn stratified_split(&self, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(0.0..1.0).contains(&test_fraction) {
            return Err(Error::Config(format!(
                "test fraction must be in [0, 1), got {test_fraction}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut train = Vec::new();
        let mut test = Vec::new();
        for class in self.classes() {
            let mut idx: Vec<usize> = (0..self.len()).filter(|&i| self.y[i] == class).collect();
            idx.shuffle(&mut rng);
            let n = idx.len();
            let n_test = ((test_fraction * n as f64).round() as usize).min(n - 1);
            test.extend_from_slice(&idx[..n_test]);
            train.extend_from_slice(&idx[n_test..]);
        }
        train.sort_unstable();
        test.sort_unstable();
        Ok((self.subset(&train), self.subset(&test)))
    }
}

/// Row-normalized confusion matrix over a fixed class list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<usize>,
    /// `counts[actual][predicted]`
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    /// Row percentages; rows without samples are all zero.
    pub fn percentages(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let total: usize = row.iter().sum();
                row.iter()
                    .map(|&c| if total == 0 { 0.0 } else { 100.0 * c as f64 / total as f64 })
                    .collect()
            })
            .collect()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Fraction of correct predictions in `[0, 1]`.
    pub fn accuracy(&self) -> f64 {
        self.correct() as f64 / self.total() as f64
    }

    /// Per-class recall in percent (the diagonal of [`Self::percentages`]).
    pub fn per_class_accuracy(&self) -> Vec<f64> {
        let p = self.percentages();
        (0..self.classes.len()).map(|i| p[i][i]).collect()
    }
}

/// Builds the confusion matrix of `pred` against `truth` over `classes`.
pub fn confusion_matrix(pred: &[usize], truth: &[usize], classes: &[usize]) -> Result<ConfusionMatrix> {
    if pred.len() != truth.len() {
        return Err(Error::Shape {
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::EmptyData("confusion matrix of no predictions".into()));
    }
    let pos = |c: usize| {
        classes
            .iter()
            .position(|&k| k == c)
            .ok_or_else(|| Error::Schema(format!("class {c} not in class list")))
    };
    let mut counts = vec![vec![0; classes.len()]; classes.len()];
    for (&p, &t) in pred.iter().zip(truth) {
        counts[pos(t)?][pos(p)?] += 1;
    }
    Ok(ConfusionMatrix {
        classes: classes.to_vec(),
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_examples() {
        let cm = confusion_matrix(&[0, 1, 2, 3], &[0, 1, 2, 3], &[0, 1, 2, 3]).unwrap();
        for (i, row) in cm.percentages().iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(*v, if i == j { 100.0 } else { 0.0 });
            }
        }
        assert_eq!(cm.accuracy(), 1.0);

        // truth [A,A,B], pred [A,B,B]
        let cm = confusion_matrix(&[0, 1, 1], &[0, 0, 1], &[0, 1]).unwrap();
        assert_eq!(cm.percentages(), vec![vec![50.0, 50.0], vec![0.0, 100.0]]);
        assert!((cm.accuracy() - 2.0 / 3.0).abs() < 1e-15);

        assert!(matches!(confusion_matrix(&[], &[], &[0]), Err(Error::EmptyData(_))));
        assert!(confusion_matrix(&[0], &[0, 1], &[0, 1]).is_err());
    }

    #[test]
    fn rows_sum_to_hundred() {
        let truth: Vec<usize> = (0..97).map(|i| i % 4).collect();
        let pred: Vec<usize> = (0..97).map(|i| (i * 7 + i / 3) % 4).collect();
        let cm = confusion_matrix(&pred, &truth, &[0, 1, 2, 3]).unwrap();
        for row in cm.percentages() {
            assert!((row.iter().sum::<f64>() - 100.0).abs() < 1e-9);
        }
    }

    #[test]
    fn split_is_stratified_and_seeded() {
        let y: Vec<usize> = (0..400).map(|i| if i < 40 { 0 } else if i < 140 { 1 } else { 2 }).collect();
        let x = y.iter().enumerate().map(|(i, _)| vec![i as f64]).collect();
        let data = Dataset::new(x, y).unwrap();
        let (train, test) = data.stratified_split(0.25, 42).unwrap();
        assert_eq!(test.len(), 10 + 25 + 65);
        assert_eq!(train.len() + test.len(), 400);
        for (c, n) in [(0, 10), (1, 25), (2, 65)] {
            assert_eq!(test.y.iter().filter(|&&k| k == c).count(), n);
        }
        let (_, again) = data.stratified_split(0.25, 42).unwrap();
        assert_eq!(again, test);
        let (_, other) = data.stratified_split(0.25, 7).unwrap();
        assert_ne!(other, test);
    }
}
