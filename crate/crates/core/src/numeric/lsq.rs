//! Dense linear least squares (Householder QR) and Chebyshev polynomial fits.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Minimize ‖A c − b‖₂ for a row-major `rows × cols` matrix `A`.
///
/// Returns the coefficients and the residual 2-norm. Fails when a diagonal
/// entry of R is negligible relative to the largest one (rank deficiency).
pub fn least_squares(a: &[f64], rows: usize, cols: usize, b: &[f64]) -> Result<(Vec<f64>, f64)> {
    assert_eq!(a.len(), rows * cols);
    assert_eq!(b.len(), rows);
    if rows < cols {
        return Err(Error::IllConditioned(alloc::format!(
            "{rows} equations for {cols} unknowns"
        )));
    }
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    let mut diag = vec![0.0; cols];
    for k in 0..cols {
        let norm = (k..rows).map(|i| m[i * cols + k].powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::IllConditioned("zero column in design matrix".into()));
        }
        let alpha = if m[k * cols + k] > 0.0 { -norm } else { norm };
        // v = x - alpha e1, stored in place
        m[k * cols + k] -= alpha;
        let vnorm2: f64 = (k..rows).map(|i| m[i * cols + k].powi(2)).sum();
        for j in (k + 1)..cols {
            let dot: f64 = (k..rows).map(|i| m[i * cols + k] * m[i * cols + j]).sum();
            let s = 2.0 * dot / vnorm2;
            for i in k..rows {
                m[i * cols + j] -= s * m[i * cols + k];
            }
        }
        let dot: f64 = (k..rows).map(|i| m[i * cols + k] * rhs[i]).sum();
        let s = 2.0 * dot / vnorm2;
        for i in k..rows {
            rhs[i] -= s * m[i * cols + k];
        }
        diag[k] = alpha;
    }
    let dmax = diag.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
    let mut c = vec![0.0; cols];
    for k in (0..cols).rev() {
        if diag[k].abs() <= 1e-13 * dmax {
            return Err(Error::IllConditioned(alloc::format!(
                "rank deficient least-squares system (column {k})"
            )));
        }
        let mut s = rhs[k];
        for j in (k + 1)..cols {
            s -= m[k * cols + j] * c[j];
        }
        c[k] = s / diag[k];
    }
    let residual = rhs[cols..].iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok((c, residual))
}

/// Chebyshev nodes of the first kind mapped to `[-r, r]`, ascending.
pub fn chebyshev_nodes(n: usize, r: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let theta = core::f64::consts::PI * (2 * (n - 1 - k) + 1) as f64 / (2 * n) as f64;
            r * theta.cos()
        })
        .collect()
}

/// Least-squares fit of `y ≈ Σ_k a_k T_k(x / r)` for `k ≤ degree`; returns
/// the monomial coefficients of the fitted polynomial in `x` together with the
/// RMS residual.
pub fn chebyshev_fit(xs: &[f64], ys: &[f64], degree: usize, r: f64) -> Result<(Vec<f64>, f64)> {
    let cols = degree + 1;
    let rows = xs.len();
    let mut a = vec![0.0; rows * cols];
    for (i, &x) in xs.iter().enumerate() {
        let t = x / r;
        let (mut t0, mut t1) = (1.0, t);
        for k in 0..cols {
            a[i * cols + k] = match k {
                0 => 1.0,
                1 => t,
                _ => {
                    let t2 = 2.0 * t * t1 - t0;
                    t0 = t1;
                    t1 = t2;
                    t2
                }
            };
        }
    }
    let (cheb, residual) = least_squares(&a, rows, cols, ys)?;
    // T_k as monomials in t, accumulated; then rescale t = x / r
    let mut mono_t = vec![0.0; cols];
    let mut prev = vec![0.0; cols];
    let mut cur = vec![0.0; cols];
    prev[0] = 1.0;
    if cols > 1 {
        cur[1] = 1.0;
    }
    for (k, &ck) in cheb.iter().enumerate() {
        let tk = match k {
            0 => prev.clone(),
            1 => cur.clone(),
            _ => {
                let mut next = vec![0.0; cols];
                for j in 0..cols {
                    if j > 0 {
                        next[j] += 2.0 * cur[j - 1];
                    }
                    next[j] -= prev[j];
                }
                prev = core::mem::replace(&mut cur, next);
                cur.clone()
            }
        };
        for j in 0..cols {
            mono_t[j] += ck * tk[j];
        }
    }
    let mut scale = 1.0;
    let mono: Vec<f64> = mono_t
        .iter()
        .map(|c| {
            let v = c * scale;
            scale /= r;
            v
        })
        .collect();
    Ok((mono, residual / (rows as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_overdetermined_line() {
        // y = 1 + 2x exactly
        let xs = [0.0, 1.0, 2.0, 3.0];
        let a: Vec<f64> = xs.iter().flat_map(|&x| [1.0, x]).collect();
        let b: Vec<f64> = xs.iter().map(|x| 1.0 + 2.0 * x).collect();
        let (c, res) = least_squares(&a, 4, 2, &b).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-14 && (c[1] - 2.0).abs() < 1e-14);
        assert!(res < 1e-13);
    }

    #[test]
    fn detects_rank_deficiency() {
        let a = [1.0, 2.0, 2.0, 4.0, 3.0, 6.0];
        assert!(least_squares(&a, 3, 2, &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn chebyshev_fit_recovers_monomials() {
        let xs = chebyshev_nodes(24, 0.1);
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| -x + 2.0 * x * x - 4.0 * x.powi(3) + 10.0 * x.powi(4) - 28.0 * x.powi(5))
            .collect();
        let (c, rms) = chebyshev_fit(&xs, &ys, 9, 0.1).unwrap();
        let expect = [0.0, -1.0, 2.0, -4.0, 10.0, -28.0];
        for (k, e) in expect.iter().enumerate() {
            assert!((c[k] - e).abs() < 1e-7 * e.abs().max(1.0), "k={k}: {}", c[k]);
        }
        assert!(rms < 1e-16);
    }
}
