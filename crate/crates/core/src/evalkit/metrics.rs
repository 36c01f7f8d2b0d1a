use std::collections::HashMap;

use crate::error::{invalid, Result};

/// Contingency table of two labelings over dense class ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Contingency {
    pub rows: Vec<u64>,
    pub cols: Vec<u64>,
    /// Non-zero cells as `((row, col), count)`, sorted.
    pub cells: Vec<((usize, usize), u64)>,
}

pub fn contingency(a: &[usize], b: &[usize]) -> Result<Contingency> {
    if a.len() != b.len() {
        return invalid(format!(
            "labelings differ in length: {} vs {}",
            a.len(),
            b.len()
        ));
    }
    if a.is_empty() {
        return invalid("labelings are empty");
    }
    let mut ids_a = HashMap::new();
    let mut ids_b = HashMap::new();
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    let mut cells: HashMap<(usize, usize), u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        let next = ids_a.len();
        let x = *ids_a.entry(x).or_insert(next);
        let next = ids_b.len();
        let y = *ids_b.entry(y).or_insert(next);
        if x == rows.len() {
            rows.push(0);
        }
        if y == cols.len() {
            cols.push(0);
        }
        rows[x] += 1;
        cols[y] += 1;
        *cells.entry((x, y)).or_default() += 1;
    }
    let mut cells: Vec<_> = cells.into_iter().collect();
    cells.sort_unstable();
    Ok(Contingency { rows, cols, cells })
}

fn pairs(x: u64) -> f64 {
    (x as f64) * (x.saturating_sub(1) as f64) / 2.0
}

/// Adjusted Rand index in `[-1, 1]`.
///
/// When the chance-corrected denominator vanishes (both labelings a single
/// class, or both all singletons) the partitions coincide and the score is 1.
pub fn ari(a: &[usize], b: &[usize]) -> Result<f64> {
    let Contingency { rows, cols, cells } = contingency(a, b)?;
    let total = pairs(a.len() as u64);
    let index: f64 = cells.iter().map(|&(_, c)| pairs(c)).sum();
    let sum_rows: f64 = rows.iter().map(|&c| pairs(c)).sum();
    let sum_cols: f64 = cols.iter().map(|&c| pairs(c)).sum();
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_rows * sum_cols / total;
    let max_index = 0.5 * (sum_rows + sum_cols);
    let denom = max_index - expected;
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok((index - expected) / denom)
}

fn entropy(counts: &[u64], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information in `[0, 1]`, normalized by the arithmetic
/// mean of the two entropies.
///
/// Two single-class labelings score 1; exactly one single-class labeling scores 0.
/// Partitions that coincide up to renaming score exactly 1.
pub fn nmi(a: &[usize], b: &[usize]) -> Result<f64> {
    let n = a.len() as f64;
    let Contingency { rows, cols, cells } = contingency(a, b)?;
    let (ha, hb) = (entropy(&rows, n), entropy(&cols, n));
    if rows.len() == 1 && cols.len() == 1 {
        return Ok(1.0);
    }
    if rows.len() == 1 || cols.len() == 1 {
        return Ok(0.0);
    }
    if cells.len() == rows.len() && cells.len() == cols.len() {
        // One-to-one classes: the same partition under other names.
        return Ok(1.0);
    }
    let mi: f64 = cells
        .iter()
        .map(|&((x, y), c)| {
            let c = c as f64;
            c / n * (n * c / (rows[x] as f64 * cols[y] as f64)).ln()
        })
        .sum();
    let score = mi / (0.5 * (ha + hb));
    Ok(score.clamp(0.0, 1.0))
}
