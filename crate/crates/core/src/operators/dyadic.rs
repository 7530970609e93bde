//! Filtration-based maximal and sharp functions.

use crate::error::{Error, Result};
use crate::filtration::DiscreteField;
use crate::par;

/// `M_m f(x) = sup_{n <= m} |f|_n(x)`; all materialized levels when `m` is
/// `None`.
pub fn dyadic_maximal(f: &DiscreteField, m: Option<i32>) -> Result<DiscreteField> {
    let filt = f.filtration();
    let top = match m {
        Some(m) => {
            filt.check_level(m)?;
            m
        }
        None => filt.n_max(),
    };
    let pyr = f.abs().pyramid();
    let mut out = vec![0.0f64; f.len()];
    for level in filt.n_min()..=top {
        let avg = pyr.averages(level);
        let map = pyr.map(level);
        for (o, &c) in out.iter_mut().zip(map) {
            *o = o.max(avg[c]);
        }
    }
    Ok(f.with_values(out))
}

/// `u^#_{gamma,m}(x) = sup_{n >= m} (avg_C avg_C |u(z) - u(y)|^gamma)^{1/gamma}`
/// with `C = C_n(x)`, the double average taken exactly over finest subcells.
pub fn dyadic_sharp(u: &DiscreteField, gamma: f64, m: i32) -> Result<DiscreteField> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::param(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    let filt = u.filtration();
    filt.check_level(m)?;
    let mut out = vec![0.0f64; u.len()];
    for level in m..filt.n_max() {
        let map = filt.level_map(level);
        let cells = filt.cell_count(level);
        let mut members: Vec<Vec<f64>> = vec![Vec::new(); cells];
        for (i, &c) in map.iter().enumerate() {
            members[c].push(u.values()[i]);
        }
        let osc = par::map_slice(&members, |vals| mean_oscillation(vals, gamma));
        for (o, &c) in out.iter_mut().zip(&map) {
            *o = o.max(osc[c]);
        }
    }
    Ok(u.with_values(out))
}

/// `(K^{-2} sum_{i,j} |v_i - v_j|^gamma)^{1/gamma}`.
pub fn mean_oscillation(vals: &[f64], gamma: f64) -> f64 {
    let k = vals.len();
    if k < 2 {
        return 0.0;
    }
    let s = if gamma == 1.0 {
        // sum_{i<j} |v_i - v_j| from the sorted order
        let mut v = vals.to_vec();
        v.sort_by(f64::total_cmp);
        v.iter()
            .enumerate()
            .map(|(i, x)| x * (2.0 * i as f64 - (k - 1) as f64))
            .sum::<f64>()
    } else {
        let mut s = 0.0;
        for i in 0..k {
            for j in (i + 1)..k {
                s += (vals[i] - vals[j]).abs().powf(gamma);
            }
        }
        s
    };
    (2.0 * s / (k * k) as f64).max(0.0).powf(1.0 / gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtration::{build_filtration, FiltrationSpec};

    fn field(n_min: i32, n_max: i32, hi: f64, v: Vec<f64>) -> DiscreteField {
        let f = build_filtration(FiltrationSpec::full(1, n_min, n_max, vec![[0.0, hi]])).unwrap();
        DiscreteField::new(f, v).unwrap()
    }

    #[test]
    fn indicator_maximal_profile() {
        let k = 6;
        let mut v = vec![0.0; 1 << k];
        v[0] = 1.0;
        let mf = dyadic_maximal(&field(-k, 0, 64.0, v), None).unwrap();
        assert_eq!(mf.values()[0], 1.0);
        assert_eq!(mf.values()[1], 0.5);
        assert_eq!(mf.values()[2], 0.25);
        assert_eq!(mf.values()[3], 0.25);
        assert_eq!(mf.values()[63], 1.0 / 64.0);
    }

    #[test]
    fn restricted_levels() {
        let f = field(-2, 0, 4.0, vec![4.0, 0.0, 0.0, 0.0]);
        let m = dyadic_maximal(&f, Some(-1)).unwrap();
        assert_eq!(m.values(), &[2.0, 2.0, 1.0, 1.0]);
        assert!(dyadic_maximal(&f, Some(1)).is_err());
    }

    #[test]
    fn sharp_of_half_indicator() {
        let u = field(-1, 0, 2.0, vec![1.0, 0.0]);
        let s = dyadic_sharp(&u, 1.0, -1).unwrap();
        assert_eq!(s.values(), &[0.5, 0.5]);
        let s = dyadic_sharp(&u, 0.5, -1).unwrap();
        assert!((s.values()[0] - 0.25).abs() < 1e-15);
        assert!(dyadic_sharp(&u, 0.0, -1).is_err());
        assert!(dyadic_sharp(&u, 1.5, -1).is_err());
    }

    #[test]
    fn sorted_and_pairwise_oscillation_agree() {
        let v: [f64; 7] = [0.3, -1.0, 2.5, 2.5, 0.0, 7.0, -3.25];
        let mut brute = 0.0f64;
        for a in &v {
            for b in &v {
                brute += (a - b).abs();
            }
        }
        brute /= 49.0;
        assert!((mean_oscillation(&v, 1.0) - brute).abs() < 1e-14);
        assert!((mean_oscillation(&v, 1.0 - 1e-12) - brute).abs() < 1e-9);
    }
}
