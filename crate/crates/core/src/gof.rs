//! Cell pooling, the chi-square statistic and RMSE.

use serde::{Deserialize, Serialize};

use crate::error::{EdmError, Result};
use crate::special::chi2_sf;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolingRule {
    /// Smallest expected count a pooled cell may hold.
    pub min_expected: f64,
    /// Pool every category at or above this index into one cell.
    pub explicit_cut: Option<usize>,
}

impl Default for PoolingRule {
    fn default() -> Self {
        PoolingRule {
            min_expected: 1.0,
            explicit_cut: None,
        }
    }
}

impl PoolingRule {
    pub fn with_cut(cut: usize) -> Self {
        PoolingRule {
            explicit_cut: Some(cut),
            ..PoolingRule::default()
        }
    }
}

/// Categories `first..=last` merged into one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PooledCell {
    pub first: usize,
    pub last: usize,
    pub observed: f64,
    pub expected: f64,
}

impl PooledCell {
    fn single(k: usize, observed: f64, expected: f64) -> Self {
        PooledCell {
            first: k,
            last: k,
            observed,
            expected,
        }
    }

    fn absorb(&mut self, other: &PooledCell) {
        self.last = other.last;
        self.observed += other.observed;
        self.expected += other.expected;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub chi2: f64,
    pub df: u32,
    pub p_value: f64,
    pub rmse: f64,
    pub cells: Vec<PooledCell>,
    pub n_params: usize,
}

/// Merge sparse cells. Without a cut, cells are closed left to right once
/// their expected count reaches `min_expected`; an unfinished remainder
/// joins the last closed cell.
pub fn pool_cells(observed: &[f64], expected: &[f64], rule: &PoolingRule, n_params: usize) -> Result<Vec<PooledCell>> {
    if observed.len() != expected.len() || observed.is_empty() {
        return Err(EdmError::Dataset(format!(
            "observed and expected lengths differ or are empty ({} vs {})",
            observed.len(),
            expected.len()
        )));
    }
    if !(rule.min_expected > 0.0) {
        return Err(EdmError::InvalidParams(format!(
            "min_expected must be positive, got {}",
            rule.min_expected
        )));
    }
    let raw = observed
        .iter()
        .zip(expected)
        .enumerate()
        .map(|(k, (&o, &e))| PooledCell::single(k, o, e));
    let mut cells: Vec<PooledCell> = Vec::new();
    match rule.explicit_cut {
        Some(cut) => {
            for cell in raw {
                match cells.last_mut() {
                    Some(last) if cell.first >= cut && last.first >= cut => last.absorb(&cell),
                    _ => cells.push(cell),
                }
            }
        }
        None => {
            let mut open: Option<PooledCell> = None;
            for cell in raw {
                let current = match open.take() {
                    Some(mut acc) => {
                        acc.absorb(&cell);
                        acc
                    }
                    None => cell,
                };
                if current.expected >= rule.min_expected {
                    cells.push(current);
                } else {
                    open = Some(current);
                }
            }
            if let Some(rest) = open {
                match cells.last_mut() {
                    Some(last) => last.absorb(&rest),
                    None => cells.push(rest),
                }
            }
        }
    }
    let needed = n_params + 2;
    if cells.len() < needed {
        return Err(EdmError::InsufficientCells {
            cells: cells.len(),
            needed,
        });
    }
    Ok(cells)
}

/// Pearson statistic over pooled cells, with `df = cells - 1 - n_params`.
/// The returned report carries no RMSE; see [`goodness_of_fit`].
pub fn chi_square(observed: &[f64], expected: &[f64], n_params: usize, rule: &PoolingRule) -> Result<GofReport> {
    let cells = pool_cells(observed, expected, rule, n_params)?;
    let chi2: f64 = cells
        .iter()
        .map(|c| {
            let d = c.observed - c.expected;
            d * d / c.expected
        })
        .sum();
    let df = (cells.len() - 1 - n_params) as u32;
    Ok(GofReport {
        chi2,
        df,
        p_value: chi2_sf(chi2, df),
        rmse: f64::NAN,
        cells,
        n_params,
    })
}

/// `sqrt(mean((n_k - E_k)^2))` over the unpooled categories.
pub fn rmse(observed: &[f64], expected: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected.len(), "rmse needs equal lengths");
    let ss: f64 = observed.iter().zip(expected).map(|(o, e)| (o - e) * (o - e)).sum();
    (ss / observed.len() as f64).sqrt()
}

/// Chi-square on `chi2_expected` (which may carry the tail mass in its last
/// entry) and RMSE on `expected`.
pub fn goodness_of_fit(
    observed: &[f64],
    expected: &[f64],
    chi2_expected: &[f64],
    n_params: usize,
    rule: &PoolingRule,
) -> Result<GofReport> {
    let mut report = chi_square(observed, chi2_expected, n_params, rule)?;
    report.rmse = rmse(observed, expected);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    const T1_OBS: [f64; 7] = [103704.0, 14075.0, 1766.0, 255.0, 45.0, 6.0, 2.0];
    const T1_LMNS: [f64; 7] = [103707.97, 14060.87, 1781.15, 252.84, 40.91, 7.40, 1.46];

    #[test]
    fn tail_merging() {
        let obs = [10.0, 5.0, 2.0, 1.0];
        let exp = [9.0, 6.0, 5.55, 0.88];
        let cells = pool_cells(&obs, &exp, &PoolingRule::default(), 0).unwrap();
        assert_eq!(cells.len(), 3);
        assert_eq!((cells[2].first, cells[2].last), (2, 3));
        assert!((cells[2].expected - 6.43).abs() < 1e-12);
    }

    #[test]
    fn no_pooling_when_all_large() {
        let obs = [10.0, 5.0, 2.0];
        let exp = [9.0, 6.0, 2.0];
        let cells = pool_cells(&obs, &exp, &PoolingRule::default(), 0).unwrap();
        assert_eq!(cells.len(), 3);
        assert!(cells.iter().all(|c| c.first == c.last));
    }

    #[test]
    fn explicit_cut_gives_six_cells() {
        let cells = pool_cells(&T1_OBS, &T1_LMNS, &PoolingRule::with_cut(5), 2).unwrap();
        assert_eq!(cells.len(), 6);
        assert_eq!((cells[5].first, cells[5].last), (5, 6));
        assert_eq!(cells[5].observed, 8.0);
    }

    #[test]
    fn pooling_preserves_totals() {
        for rule in [
            PoolingRule::default(),
            PoolingRule::with_cut(3),
            PoolingRule::with_cut(5),
        ] {
            let cells = pool_cells(&T1_OBS, &T1_LMNS, &rule, 0).unwrap();
            let so: f64 = cells.iter().map(|c| c.observed).sum();
            let se: f64 = cells.iter().map(|c| c.expected).sum();
            assert_eq!(so, T1_OBS.iter().sum::<f64>());
            assert!((se - T1_LMNS.iter().sum::<f64>()).abs() < 1e-9);
        }
    }

    #[test]
    fn insufficient_cells() {
        let err = pool_cells(&[5.0, 1.0, 0.0], &[5.0, 0.5, 0.5], &PoolingRule::default(), 2).unwrap_err();
        assert!(matches!(err, EdmError::InsufficientCells { cells: 2, needed: 4 }));
    }

    #[test]
    fn perfect_fit() {
        let obs = [50.0, 30.0, 15.0, 5.0];
        let r = chi_square(&obs, &obs, 1, &PoolingRule::default()).unwrap();
        assert_eq!(r.chi2, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.df, 2);
        assert_eq!(rmse(&obs, &obs), 0.0);
    }

    #[test]
    fn table1_lmns_column() {
        // The last cell also holds the fitted mass beyond the largest count.
        let n: f64 = T1_OBS.iter().sum();
        let mut chi_exp = T1_LMNS;
        chi_exp[6] += n - T1_LMNS.iter().sum::<f64>();
        let r = goodness_of_fit(&T1_OBS, &T1_LMNS, &chi_exp, 2, &PoolingRule::with_cut(5)).unwrap();
        assert_eq!(r.df, 3);
        assert!((r.chi2 - 0.7432).abs() < 0.01, "{}", r.chi2);
        assert!((r.p_value - 0.8630).abs() < 0.01);
        assert!((r.rmse - 8.182).abs() < 0.01, "{}", r.rmse);
    }

    #[test]
    fn rmse_hand_value() {
        assert!((rmse(&[3.0, 0.0], &[0.0, 4.0]) - 12.5f64.sqrt()).abs() < 1e-15);
    }
}
