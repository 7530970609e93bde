//! Beta-type constants: the least `N` with
//! `χ(A)/χ(C) <= N (|A|/|C|)^β` for `A ⊂ C`.

use serde::{Deserialize, Serialize};

use super::norms::cell_masses;
use super::Weight;
use crate::error::{Error, Result};
use crate::filtration::Filtration;
use crate::par;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    pub constant: f64,
    pub beta: f64,
    pub cells_examined: usize,
    pub cells_total: usize,
    pub budget: usize,
}

/// Among unions of `k` finest subcells the heaviest one is the `k` largest
/// masses, so sorting gives the exact maximum over unions for every `k`.
fn cell_ratio(masses: &mut [f64], beta: f64) -> f64 {
    masses.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = masses.iter().sum();
    if !(total > 0.0) {
        return if total == 0.0 { 0.0 } else { f64::INFINITY };
    }
    let n = masses.len() as f64;
    let mut acc = 0.0;
    let mut best: f64 = 0.0;
    for (k, m) in masses.iter().enumerate() {
        acc += m;
        best = best.max((acc / total) / ((k + 1) as f64 / n).powf(beta));
    }
    best
}

/// Maximizes over cells `C` of every level (at most `budget` of them,
/// evenly spread in level-major order) and over all unions `A` of finest
/// subcells of `C`.
pub fn beta_type_constant(w: &Weight, beta: f64, budget: usize, filtration: &Filtration) -> Result<BetaEstimate> {
    if budget == 0 {
        return Err(Error::param("sample budget must be at least 1"));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::param(format!("beta must lie in (0, 1], got {beta}")));
    }
    let masses = cell_masses(w, filtration)?;
    let n_max = filtration.n_max();
    let mut cells: Vec<(i32, usize)> = Vec::new();
    for n in filtration.levels() {
        cells.extend((0..filtration.cell_count(n)).map(|i| (n, i)));
    }
    let total = cells.len();
    let picked: Vec<(i32, usize)> = if total <= budget {
        cells
    } else {
        (0..budget).map(|j| cells[j * total / budget]).collect()
    };
    let members: Vec<(i32, Vec<Vec<usize>>)> = filtration
        .levels()
        .map(|n| {
            let mut groups = vec![Vec::new(); filtration.cell_count(n)];
            for (fine, &coarse) in filtration.ancestor_map(n_max, n).iter().enumerate() {
                groups[coarse].push(fine);
            }
            (n, groups)
        })
        .collect();
    let ratios = par::map_slice(&picked, |&(n, i)| {
        let groups = &members[(n - filtration.n_min()) as usize].1;
        let mut m: Vec<f64> = groups[i].iter().map(|&f| masses[f]).collect();
        cell_ratio(&mut m, beta)
    });
    Ok(BetaEstimate {
        constant: ratios.into_iter().fold(0.0, f64::max),
        beta,
        cells_examined: picked.len(),
        cells_total: total,
        budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtration::FiltrationSpec;

    #[test]
    fn lebesgue_measure_has_constant_one() {
        let f = Filtration::new(FiltrationSpec::full(2, -1, 2, vec![[0.0, 2.0], [0.0, 2.0]])).unwrap();
        let est = beta_type_constant(&Weight::unit(), 1.0, 1000, &f).unwrap();
        assert!((est.constant - 1.0).abs() < 1e-12);
        assert!(beta_type_constant(&Weight::unit(), 1.0, 0, &f).is_err());
    }

    #[test]
    fn sorted_prefix_matches_subset_enumeration() {
        let m = [0.3, 2.0, 0.1, 0.7, 1.1];
        let beta = 0.6;
        let total: f64 = m.iter().sum();
        let mut brute: f64 = 0.0;
        for mask in 1u32..32 {
            let k = mask.count_ones() as f64;
            let s: f64 = (0..5).filter(|i| mask >> i & 1 == 1).map(|i| m[i]).sum();
            brute = brute.max((s / total) / (k / 5.0).powf(beta));
        }
        assert!((cell_ratio(&mut m.to_vec(), beta) - brute).abs() < 1e-14);
    }
}
