use std::collections::HashMap;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;

/// Minimum expected count for a cell to stand on its own.
pub const MIN_EXPECTED: f64 = 5.0;

/// Largest number of cells a contingency table may span.
const MAX_CELLS: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// Cells merged into the pooled cell.
    pub pooled_cells: usize,
}

/// Two-sided normal tail probability of `z`.
pub fn normal_two_sided(z: f64) -> f64 {
    if z.is_nan() {
        return 1.0;
    }
    erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

/// Chi-square test of mutual independence of the coordinates of a
/// multiway table given by its nonzero cells.
///
/// Categories that never occur are dropped. Expected counts are `N` times
/// the product of marginal frequencies. Pooling rule: cells are visited by
/// increasing expected count (ties by cell order); every cell with expected
/// count below 5 joins one pooled cell, and while the pooled cell is still
/// below 5 the next smallest cell joins it too. Degrees of freedom are
/// `cells - 1 - sum(r_i - 1)` after pooling; a table with no freedom left
/// gives statistic 0 and p-value 1.
pub fn chi_square_independence(dims: &[usize], joint: &HashMap<Vec<usize>, u64>) -> ChiSquare {
    let none = ChiSquare {
        statistic: 0.0,
        df: 0,
        p_value: 1.0,
        pooled_cells: 0,
    };
    let total: u64 = joint.values().sum();
    if total == 0 || dims.is_empty() {
        return none;
    }
    let n = total as f64;
    let mut marg: Vec<Vec<u64>> = dims.iter().map(|&d| vec![0; d]).collect();
    for (cell, &c) in joint {
        for (i, &v) in cell.iter().enumerate() {
            marg[i][v] += c;
        }
    }
    let present: Vec<Vec<usize>> = marg
        .iter()
        .map(|m| (0..m.len()).filter(|&v| m[v] > 0).collect())
        .collect();
    let cells: usize = present.iter().map(Vec::len).product();
    if cells > MAX_CELLS {
        return ChiSquare {
            p_value: f64::NAN,
            ..none
        };
    }
    let mut table = Vec::with_capacity(cells);
    let mut idx = vec![0usize; dims.len()];
    loop {
        let cell: Vec<usize> = idx
            .iter()
            .enumerate()
            .map(|(i, &j)| present[i][j])
            .collect();
        let expected = n * cell
            .iter()
            .enumerate()
            .map(|(i, &v)| marg[i][v] as f64 / n)
            .product::<f64>();
        let observed = joint.get(&cell).copied().unwrap_or(0) as f64;
        table.push((expected, observed));
        let mut d = dims.len();
        loop {
            if d == 0 {
                break;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < present[d].len() {
                break;
            }
            idx[d] = 0;
        }
        if idx.iter().all(|&i| i == 0) {
            break;
        }
    }
    let mut order: Vec<usize> = (0..table.len()).collect();
    order.sort_by(|&a, &b| table[a].0.total_cmp(&table[b].0).then(a.cmp(&b)));
    let mut pooled = (0.0, 0.0);
    let mut pooled_cells = 0;
    let mut rest = order.iter().peekable();
    while let Some(&&i) = rest.peek() {
        if table[i].0 >= MIN_EXPECTED && (pooled_cells == 0 || pooled.0 >= MIN_EXPECTED) {
            break;
        }
        pooled.0 += table[i].0;
        pooled.1 += table[i].1;
        pooled_cells += 1;
        rest.next();
    }
    let mut statistic = 0.0;
    let mut used = 0usize;
    for &i in rest {
        let (e, o) = table[i];
        statistic += (o - e) * (o - e) / e;
        used += 1;
    }
    if pooled_cells > 0 && pooled.0 > 0.0 {
        statistic += (pooled.1 - pooled.0) * (pooled.1 - pooled.0) / pooled.0;
        used += 1;
    }
    let constraints: usize = present.iter().map(|p| p.len() - 1).sum();
    if used <= constraints + 1 {
        return ChiSquare {
            pooled_cells,
            ..none
        };
    }
    let df = used - 1 - constraints;
    let p_value = ChiSquared::new(df as f64)
        .map(|d| d.sf(statistic))
        .unwrap_or(1.0);
    ChiSquare {
        statistic,
        df,
        p_value,
        pooled_cells,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[&[u64]]) -> HashMap<Vec<usize>, u64> {
        let mut t = HashMap::new();
        for (i, r) in rows.iter().enumerate() {
            for (j, &c) in r.iter().enumerate() {
                if c > 0 {
                    t.insert(vec![i, j], c);
                }
            }
        }
        t
    }

    #[test]
    fn textbook_two_by_two() {
        // Expected 25 in every cell: statistic 4 * 25 / 25 = 4 with df 1.
        let c = chi_square_independence(&[2, 2], &table(&[&[30, 20], &[20, 30]]));
        assert!((c.statistic - 4.0).abs() < 1e-12);
        assert_eq!(c.df, 1);
        assert!((c.p_value - 0.045_500_263_896_358_41).abs() < 1e-9, "{c:?}");
    }

    #[test]
    fn constant_margin_has_no_freedom() {
        let c = chi_square_independence(&[1, 3], &table(&[&[5, 9, 7]]));
        assert_eq!((c.df, c.p_value), (0, 1.0));
    }

    #[test]
    fn rare_cells_are_pooled() {
        let c = chi_square_independence(&[2, 3], &table(&[&[500, 500, 2], &[500, 500, 1]]));
        assert!(c.pooled_cells >= 2, "{c:?}");
        assert!(c.p_value > 0.01);
    }

    #[test]
    fn normal_tails() {
        assert!((normal_two_sided(1.959_963_984_540_054) - 0.05).abs() < 1e-9);
        assert_eq!(normal_two_sided(0.0), 1.0);
    }
}
