use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Z-score parameters fitted on the training set.
///
/// Uses the population standard deviation (divide by N). A feature whose
/// training sd is zero passes through unchanged and is flagged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub degenerate: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum FeatureError {
    #[error("training set is empty")]
    EmptyTrain,
    #[error("row {row} has {got} features, expected {expected}")]
    Ragged { row: usize, expected: usize, got: usize },
}

impl Standardizer {
    pub fn fit(train: &[Vec<f64>]) -> Result<Self, FeatureError> {
        let first = train.first().ok_or(FeatureError::EmptyTrain)?;
        let dims = first.len();
        check_width(train, dims)?;
        let n = train.len() as f64;
        let mut mean = alloc::vec![0.0; dims];
        for row in train {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = alloc::vec![0.0; dims];
        for row in train {
            for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let sd: Vec<f64> = var.iter().map(|v| libm::sqrt(v / n)).collect();
        let degenerate = sd.iter().map(|s| !(s.is_finite() && *s > 0.0)).collect();
        Ok(Standardizer { mean, sd, degenerate })
    }

    pub fn any_degenerate(&self) -> bool {
        self.degenerate.iter().any(|d| *d)
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &x)| if self.degenerate[j] { x } else { (x - self.mean[j]) / self.sd[j] })
            .collect()
    }

    pub fn apply_all(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, FeatureError> {
        check_width(rows, self.mean.len())?;
        Ok(rows.iter().map(|r| self.apply(r)).collect())
    }
}

fn check_width(rows: &[Vec<f64>], dims: usize) -> Result<(), FeatureError> {
    match rows.iter().position(|r| r.len() != dims) {
        Some(row) => Err(FeatureError::Ragged { row, expected: dims, got: rows[row].len() }),
        None => Ok(()),
    }
}

pub type Standardized = (Vec<Vec<f64>>, Vec<Vec<f64>>, Standardizer);

/// Fits on `train` and applies the same transform to both sets.
pub fn standardize(train: &[Vec<f64>], test: &[Vec<f64>]) -> Result<Standardized, FeatureError> {
    let params = Standardizer::fit(train)?;
    Ok((params.apply_all(train)?, params.apply_all(test)?, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn two_point_symmetry() {
        let (tr, te, p) = standardize(&[vec![0.0], vec![10.0]], &[vec![5.0]]).unwrap();
        assert_eq!(tr, vec![vec![-1.0], vec![1.0]]);
        assert_eq!(te, vec![vec![0.0]]);
        assert!(!p.any_degenerate());
    }

    #[test]
    fn constant_feature_passes_through() {
        let (tr, te, p) = standardize(&[vec![3.0, 1.0], vec![3.0, 2.0]], &[vec![7.0, 1.5]]).unwrap();
        assert_eq!(p.degenerate, vec![true, false]);
        assert_eq!(tr[0][0], 3.0);
        assert_eq!(te[0], vec![7.0, 0.0]);
    }

    #[test]
    fn errors() {
        assert_eq!(Standardizer::fit(&[]), Err(FeatureError::EmptyTrain));
        assert!(matches!(standardize(&[vec![1.0]], &[vec![1.0, 2.0]]), Err(FeatureError::Ragged { .. })));
    }
}
