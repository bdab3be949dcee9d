//! Finite differences with Richardson extrapolation.


/// Derivative estimate with its extrapolation error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Derivative {
    pub value: f64,
    pub error: f64,
}

/// Ridders' method: central differences at geometrically shrinking steps
/// `h, h/1.4, h/1.4², …`, combined in a Neville tableau. Returns the entry
/// with the smallest error estimate.
pub fn ridders<F: FnMut(f64) -> f64>(mut f: F, x: f64, h: f64) -> Derivative {
    const N: usize = 10;
    const CON: f64 = 1.4;
    const CON2: f64 = CON * CON;
    let mut a = [[0.0f64; N]; N];
    let mut hh = h;
    a[0][0] = (f(x + hh) - f(x - hh)) / (2.0 * hh);
    let mut best = Derivative {
        value: a[0][0],
        error: f64::INFINITY,
    };
    for i in 1..N {
        hh /= CON;
        a[0][i] = (f(x + hh) - f(x - hh)) / (2.0 * hh);
        let mut fac = CON2;
        for j in 1..=i {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= CON2;
            let err = (a[j][i] - a[j - 1][i])
                .abs()
                .max((a[j][i] - a[j - 1][i - 1]).abs());
            if err <= best.error {
                best = Derivative {
                    value: a[j][i],
                    error: err,
                };
            }
        }
        if (a[i][i] - a[i - 1][i - 1]).abs() >= 2.0 * best.error {
            break;
        }
    }
    best
}

/// Central difference `(f(x+h) − f(x−h)) / 2h` refined by one Richardson
/// step with `h/2` (fourth order).
pub fn central_richardson<F: FnMut(f64) -> f64>(mut f: F, x: f64, h: f64) -> f64 {
    let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
    let h2 = 0.5 * h;
    let d2 = (f(x + h2) - f(x - h2)) / (2.0 * h2);
    (4.0 * d2 - d1) / 3.0
}

/// Gradient of a function on ℝ⁴ by per-coordinate Ridders differentiation,
/// with initial step `rel_step · max(1, |x_i|)`.
pub fn gradient4<F: FnMut(&[f64; 4]) -> f64>(mut f: F, x: &[f64; 4], rel_step: f64) -> [f64; 4] {
    let mut g = [0.0; 4];
    for i in 0..4 {
        let h = rel_step * x[i].abs().max(1.0);
        g[i] = ridders(
            |t| {
                let mut p = *x;
                p[i] = t;
                f(&p)
            },
            x[i],
            h,
        )
        .value;
    }
    g
}

/// Hessian on ℝ⁴ from central second differences at step `h` and `h/2`,
/// combined by one Richardson step.
pub fn hessian4<F: FnMut(&[f64; 4]) -> f64>(mut f: F, x: &[f64; 4], h: f64) -> [[f64; 4]; 4] {
    let mut second = |h: f64| {
        let mut hs = [[0.0; 4]; 4];
        let f0 = f(x);
        let mut at = |di: (usize, f64), dj: (usize, f64)| {
            let mut p = *x;
            p[di.0] += di.1;
            p[dj.0] += dj.1;
            f(&p)
        };
        for i in 0..4 {
            hs[i][i] = (at((i, h), (i, 0.0)) - 2.0 * f0 + at((i, -h), (i, 0.0))) / (h * h);
            for j in (i + 1)..4 {
                let v = (at((i, h), (j, h)) - at((i, h), (j, -h)) - at((i, -h), (j, h))
                    + at((i, -h), (j, -h)))
                    / (4.0 * h * h);
                hs[i][j] = v;
                hs[j][i] = v;
            }
        }
        hs
    };
    let coarse = second(h);
    let fine = second(0.5 * h);
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (4.0 * fine[i][j] - coarse[i][j]) / 3.0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ridders_is_accurate() {
        let d = ridders(|x| x.sin(), 0.7, 0.1);
        assert!((d.value - 0.7f64.cos()).abs() < 1e-13);
        assert!(d.error < 1e-10);
    }

    #[test]
    fn richardson_is_fourth_order() {
        let e1 = (central_richardson(|x| x.exp(), 0.0, 0.1) - 1.0).abs();
        let e2 = (central_richardson(|x| x.exp(), 0.0, 0.05) - 1.0).abs();
        assert!(e1 / e2 > 12.0);
    }

    #[test]
    fn gradient_and_hessian_of_quadratic_form() {
        let f = |p: &[f64; 4]| p[0] * p[0] + 3.0 * p[0] * p[1] - p[2] * p[3] + 2.0 * p[3] * p[3];
        let x = [0.5, -1.0, 2.0, 0.25];
        let g = gradient4(f, &x, 1e-2);
        let expect = [2.0 * 0.5 + 3.0 * -1.0, 3.0 * 0.5, -0.25, -2.0 + 1.0];
        for i in 0..4 {
            assert!((g[i] - expect[i]).abs() < 1e-12);
        }
        let h = hessian4(f, &x, 1e-3);
        let exact = [
            [2.0, 3.0, 0.0, 0.0],
            [3.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, -1.0],
            [0.0, 0.0, -1.0, 4.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((h[i][j] - exact[i][j]).abs() < 1e-8);
            }
        }
    }
}
