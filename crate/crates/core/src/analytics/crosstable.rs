use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{Debug, Display};

use serde::{Deserialize, Serialize};

/// Actual-versus-predicted contingency table. Rows are actual classes,
/// columns predicted classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossTable<L> {
    pub classes: Vec<L>,
    pub counts: Vec<Vec<u64>>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CrossTableError {
    #[error("{actual} actual labels but {predicted} predicted labels")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("label {0} is not one of the table classes")]
    UnknownLabel(String),
}

/// Tallies paired label vectors over `classes`.
pub fn cross_table<L: PartialEq + Clone + Debug>(
    actual: &[L],
    predicted: &[L],
    classes: &[L],
) -> Result<CrossTable<L>, CrossTableError> {
    if actual.len() != predicted.len() {
        return Err(CrossTableError::LengthMismatch { actual: actual.len(), predicted: predicted.len() });
    }
    let pos =
        |l: &L| classes.iter().position(|c| c == l).ok_or_else(|| CrossTableError::UnknownLabel(format!("{l:?}")));
    let n = classes.len();
    let mut counts = alloc::vec![alloc::vec![0u64; n]; n];
    for (a, p) in actual.iter().zip(predicted) {
        counts[pos(a)?][pos(p)?] += 1;
    }
    Ok(CrossTable { classes: classes.to_vec(), counts })
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl<L> CrossTable<L> {
    pub fn from_counts(classes: Vec<L>, counts: Vec<Vec<u64>>) -> Self {
        assert_eq!(counts.len(), classes.len(), "one row per class");
        assert!(counts.iter().all(|r| r.len() == classes.len()), "square table");
        CrossTable { classes, counts }
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_total(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn col_total(&self, j: usize) -> u64 {
        self.counts.iter().map(|r| r[j]).sum()
    }

    pub fn row_totals(&self) -> Vec<u64> {
        (0..self.len()).map(|i| self.row_total(i)).collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        (0..self.len()).map(|j| self.col_total(j)).collect()
    }

    pub fn trace(&self) -> u64 {
        (0..self.len()).map(|i| self.counts[i][i]).sum()
    }

    /// N / row total (0 for an empty row).
    pub fn row_prop(&self, i: usize, j: usize) -> f64 {
        ratio(self.counts[i][j], self.row_total(i))
    }

    /// N / column total (0 for an empty column).
    pub fn col_prop(&self, i: usize, j: usize) -> f64 {
        ratio(self.counts[i][j], self.col_total(j))
    }

    /// N / table total.
    pub fn table_prop(&self, i: usize, j: usize) -> f64 {
        ratio(self.counts[i][j], self.total())
    }

    /// Fraction of observations in row `i`.
    pub fn row_share(&self, i: usize) -> f64 {
        ratio(self.row_total(i), self.total())
    }

    /// Fraction of observations in column `j`.
    pub fn col_share(&self, j: usize) -> f64 {
        ratio(self.col_total(j), self.total())
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.trace(), self.total())
    }
}

/// Which rows a success summary counts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SummaryScope {
    AllClasses,
    /// The first `n` rows; predictions outside those rows count as missed.
    FirstRows(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuccessSummary {
    /// e.g. `T1:T7`.
    pub scope: String,
    pub success: u64,
    pub missed: u64,
    /// Integer percent, rounded half up.
    pub success_pct: u32,
}

/// `round(100 * num / den)` with halves rounded up, in integer arithmetic.
pub fn percent_half_up(num: u64, den: u64) -> u32 {
    if den == 0 {
        return 0;
    }
    ((200 * num + den) / (2 * den)) as u32
}

/// Diagonal hits versus off-diagonal misses over the scoped rows.
pub fn success_summary<L: Display>(ct: &CrossTable<L>, scope: &SummaryScope) -> SuccessSummary {
    let rows = match scope {
        SummaryScope::AllClasses => ct.len(),
        SummaryScope::FirstRows(n) => (*n).min(ct.len()),
    };
    let success: u64 = (0..rows).map(|i| ct.counts[i][i]).sum();
    let total: u64 = (0..rows).map(|i| ct.row_total(i)).sum();
    let label = match rows {
        0 => String::new(),
        _ => format!("{}:{}", ct.classes[0], ct.classes[rows - 1]),
    };
    SuccessSummary { scope: label, success, missed: total - success, success_pct: percent_half_up(success, total) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokens::TokenId;
    use alloc::vec;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    /// Actual/classified counts of the reference run.
    pub(crate) fn reference_counts() -> Vec<Vec<u64>> {
        vec![
            vec![7, 0, 0, 0, 0, 0, 0],
            vec![0, 9, 0, 0, 0, 0, 0],
            vec![0, 0, 6, 0, 0, 0, 1],
            vec![0, 0, 0, 9, 0, 1, 0],
            vec![0, 0, 0, 0, 9, 0, 0],
            vec![0, 1, 0, 0, 0, 7, 0],
            vec![4, 0, 0, 0, 0, 0, 10],
        ]
    }

    fn expand(counts: &[Vec<u64>]) -> (Vec<TokenId>, Vec<TokenId>) {
        let (mut a, mut p) = (Vec::new(), Vec::new());
        for (i, row) in counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                for _ in 0..c {
                    a.push(TokenId::ALL[i]);
                    p.push(TokenId::ALL[j]);
                }
            }
        }
        (a, p)
    }

    #[test]
    fn reference_table_totals_and_summaries() {
        let (a, p) = expand(&reference_counts());
        let ct = cross_table(&a, &p, &TokenId::ALL).unwrap();
        assert_eq!(ct.counts, reference_counts());
        assert_eq!(ct.counts[0], vec![7, 0, 0, 0, 0, 0, 0]);
        assert_eq!(ct.counts[6], vec![4, 0, 0, 0, 0, 0, 10]);
        assert_eq!(ct.col_totals(), vec![11, 10, 6, 9, 9, 8, 11]);
        assert_eq!(ct.total(), 64);

        let all = success_summary(&ct, &SummaryScope::AllClasses);
        assert_eq!((all.scope.as_str(), all.success, all.missed, all.success_pct), ("T1:T7", 57, 7, 89));
        let six = success_summary(&ct, &SummaryScope::FirstRows(6));
        assert_eq!((six.scope.as_str(), six.success, six.missed, six.success_pct), ("T1:T6", 47, 3, 94));

        // Row T3: 6 of 7 on the diagonal, 1 into T7.
        assert_eq!(alloc::format!("{:.3}", ct.row_prop(2, 2)), "0.857");
        assert_eq!(alloc::format!("{:.3}", ct.row_prop(2, 6)), "0.143");
        assert_eq!(alloc::format!("{:.3}", ct.col_prop(2, 2)), "1.000");
        assert_eq!(alloc::format!("{:.3}", ct.table_prop(2, 2)), "0.094");
    }

    #[test]
    fn perfect_predictions_are_diagonal() {
        let labels = [1u8, 2, 3, 3, 2, 1, 1];
        let ct = cross_table(&labels, &labels, &[1, 2, 3]).unwrap();
        for i in 0..3 {
            assert_eq!(ct.row_prop(i, i), 1.0);
            for j in 0..3 {
                if i != j {
                    assert_eq!(ct.counts[i][j], 0);
                }
            }
        }
        let s = success_summary(&ct, &SummaryScope::AllClasses);
        assert_eq!((s.success_pct, s.missed), (100, 0));
    }

    #[test]
    fn unknown_label_and_length_errors() {
        assert!(matches!(cross_table(&[1, 9], &[1, 1], &[1, 2]), Err(CrossTableError::UnknownLabel(_))));
        assert!(matches!(cross_table(&[1], &[1, 1], &[1]), Err(CrossTableError::LengthMismatch { .. })));
    }

    #[test]
    fn half_up_rounding() {
        assert_eq!(percent_half_up(57, 64), 89);
        assert_eq!(percent_half_up(47, 50), 94);
        assert_eq!(percent_half_up(1, 8), 13); // 12.5
        assert_eq!(percent_half_up(0, 0), 0);
    }

    proptest! {
        #[test]
        fn reconstruction_and_sum_identities(pairs in prop::collection::vec((0u8..5, 0u8..5), 1..200)) {
            let (a, p): (Vec<u8>, Vec<u8>) = pairs.iter().copied().unzip();
            let ct = cross_table(&a, &p, &[0, 1, 2, 3, 4]).unwrap();
            let n = pairs.len() as u64;
            prop_assert_eq!(ct.total(), n);
            for c in 0..5u8 {
                prop_assert_eq!(ct.row_total(c as usize), a.iter().filter(|&&x| x == c).count() as u64);
                prop_assert_eq!(ct.col_total(c as usize), p.iter().filter(|&&x| x == c).count() as u64);
            }
            let mut table_sum = 0.0;
            for i in 0..5 {
                let row: f64 = (0..5).map(|j| ct.row_prop(i, j)).sum();
                if ct.row_total(i) > 0 {
                    prop_assert!((row - 1.0).abs() < 1e-9);
                }
                table_sum += (0..5).map(|j| ct.table_prop(i, j)).sum::<f64>();
            }
            prop_assert!((table_sum - 1.0).abs() < 1e-9);
            let s = success_summary(&ct, &SummaryScope::AllClasses);
            prop_assert_eq!(s.success, ct.trace());
            prop_assert_eq!(s.success + s.missed, n);
        }
    }
}
