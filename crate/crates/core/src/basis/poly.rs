//! Orthogonal polynomials and their homogenized (scaled) forms.

use std::sync::OnceLock;

/// Legendre polynomial `P_n(x)` by the three-term recurrence.
pub fn legendre_eval(n: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return p0;
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Jacobi polynomial `P_n^(alpha, beta)(x)` by the three-term recurrence.
pub fn jacobi_eval(n: usize, alpha: f64, beta: f64, x: f64) -> f64 {
    let mut p0 = 1.0;
    if n == 0 {
        return p0;
    }
    let mut p1 = (alpha + 1.0) + (alpha + beta + 2.0) * (x - 1.0) / 2.0;
    for k in 2..=n {
        let (a1, a2, a3, a4) = jacobi_coefficients(k, alpha, beta);
        let p2 = ((a2 + a3 * x) * p1 - a4 * p0) / a1;
        p0 = p1;
        p1 = p2;
    }
    p1
}

fn jacobi_coefficients(n: usize, alpha: f64, beta: f64) -> (f64, f64, f64, f64) {
    let n = n as f64;
    let s = 2.0 * n + alpha + beta;
    let a1 = 2.0 * n * (n + alpha + beta) * (s - 2.0);
    let a2 = (s - 1.0) * (alpha * alpha - beta * beta);
    let a3 = (s - 2.0) * (s - 1.0) * s;
    let a4 = 2.0 * (n + alpha - 1.0) * (n + beta - 1.0) * s;
    (a1, a2, a3, a4)
}

/// Polynomial in one variable, coefficients in ascending powers.
type Coeffs = Vec<f64>;

fn mul_shift(p: &Coeffs) -> Coeffs {
    // p(u) * (2u - 1)
    let mut out = vec![0.0; p.len() + 1];
    for (k, &c) in p.iter().enumerate() {
        out[k] -= c;
        out[k + 1] += 2.0 * c;
    }
    out
}

fn axpy(a: f64, x: &Coeffs, y: &mut Coeffs) {
    if y.len() < x.len() {
        y.resize(x.len(), 0.0);
    }
    for (k, &c) in x.iter().enumerate() {
        y[k] += a * c;
    }
}

/// Coefficients in `u` of `P_n^(alpha, 0)(2u - 1)` for `n = 0..=max`.
fn shifted_jacobi_family(max: usize, alpha: f64) -> Vec<Coeffs> {
    let mut out: Vec<Coeffs> = vec![vec![1.0]];
    if max == 0 {
        return out;
    }
    // (alpha + 1) + (alpha + 2)(x - 1)/2 with x = 2u - 1
    out.push(vec![-1.0, alpha + 2.0]);
    for n in 2..=max {
        let (a1, a2, a3, a4) = jacobi_coefficients(n, alpha, 0.0);
        let mut next = vec![0.0; n + 1];
        axpy(a2 / a1, &out[n - 1], &mut next);
        axpy(a3 / a1, &mul_shift(&out[n - 1]), &mut next);
        axpy(-a4 / a1, &out[n - 2], &mut next);
        next.truncate(n + 1);
        out.push(next);
    }
    out
}

/// Homogeneous polynomial `sum_k c_k x^k t^(n-k)` of degree `n`, the scaled
/// form `t^n q(x / t)` of a polynomial `q` on `[0, 1]`.
#[derive(Debug, Clone)]
pub(crate) struct HomPoly {
    coeffs: Coeffs,
}

impl HomPoly {
    fn new(mut coeffs: Coeffs, degree: usize) -> Self {
        coeffs.resize(degree + 1, 0.0);
        HomPoly { coeffs }
    }

    /// Value and partial derivatives with respect to `x` and `t`.
    #[inline]
    pub(crate) fn eval(&self, x: f64, t: f64) -> (f64, f64, f64) {
        let n = self.coeffs.len() - 1;
        let mut xp = [1.0; 8];
        let mut tp = [1.0; 8];
        for k in 1..=n {
            xp[k] = xp[k - 1] * x;
            tp[k] = tp[k - 1] * t;
        }
        let (mut v, mut dx, mut dt) = (0.0, 0.0, 0.0);
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            v += c * xp[k] * tp[n - k];
            if k > 0 {
                dx += c * k as f64 * xp[k - 1] * tp[n - k];
            }
            if k < n {
                dt += c * (n - k) as f64 * xp[k] * tp[n - k - 1];
            }
        }
        (v, dx, dt)
    }
}

pub(crate) const MAX_DEGREE: usize = 6;
pub(crate) const MAX_ALPHA: usize = 12;

struct Tables {
    legendre: Vec<HomPoly>,
    integrated_jacobi: Vec<Vec<HomPoly>>,
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let legendre = shifted_jacobi_family(MAX_DEGREE, 0.0)
            .into_iter()
            .enumerate()
            .map(|(n, c)| HomPoly::new(c, n))
            .collect();
        let integrated_jacobi = (0..=MAX_ALPHA)
            .map(|alpha| {
                let family = shifted_jacobi_family(MAX_DEGREE, alpha as f64);
                (0..=MAX_DEGREE)
                    .map(|n| {
                        if n == 0 {
                            return HomPoly::new(vec![1.0], 0);
                        }
                        // Antiderivative vanishing at u = 0.
                        let p = &family[n - 1];
                        let mut c = vec![0.0; n + 1];
                        for (k, &a) in p.iter().enumerate() {
                            c[k + 1] = a / (k + 1) as f64;
                        }
                        HomPoly::new(c, n)
                    })
                    .collect()
            })
            .collect();
        Tables {
            legendre,
            integrated_jacobi,
        }
    })
}

/// Scaled shifted Legendre `t^n P_n(2x/t - 1)`.
pub(crate) fn scaled_legendre(n: usize) -> &'static HomPoly {
    &tables().legendre[n]
}

/// Scaled integrated Jacobi `t^n \int_0^{x/t} P_{n-1}^(alpha,0)(2s - 1) ds`.
pub(crate) fn scaled_integrated_jacobi(n: usize, alpha: usize) -> &'static HomPoly {
    &tables().integrated_jacobi[alpha][n]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_values() {
        assert_eq!(legendre_eval(0, 0.7), 1.0);
        assert_eq!(legendre_eval(1, 0.3), 0.3);
        assert_relative_eq!(legendre_eval(2, 0.5), -0.125, epsilon = 1e-15);
        // Closed form P_3 = (5x^3 - 3x)/2.
        let x: f64 = -0.4;
        assert_relative_eq!(legendre_eval(3, x), (5.0 * x.powi(3) - 3.0 * x) / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn legendre_bounded_on_interval() {
        for n in 0..=6 {
            for i in 0..=200 {
                let x = -1.0 + i as f64 / 100.0;
                assert!(legendre_eval(n, x).abs() <= 1.0 + 1e-14);
            }
        }
    }

    #[test]
    fn jacobi_values() {
        assert_eq!(jacobi_eval(0, 1.5, 0.5, 0.2), 1.0);
        assert_relative_eq!(jacobi_eval(1, 2.0, 0.0, 0.5), 2.0, epsilon = 1e-15);
        for n in 0..=6 {
            for &x in &[-0.9, -0.3, 0.0, 0.45, 1.0] {
                assert_relative_eq!(jacobi_eval(n, 0.0, 0.0, x), legendre_eval(n, x), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn jacobi_endpoint_value() {
        // P_n^(a,b)(1) = binomial(n + a, n).
        let a = 3.0;
        let mut binom = 1.0;
        for n in 0..=6 {
            if n > 0 {
                binom *= (n as f64 + a) / n as f64;
            }
            assert_relative_eq!(jacobi_eval(n, a, 0.5, 1.0), binom, max_relative = 1e-13);
        }
    }

    #[test]
    fn homogenized_tables_match_direct_evaluation() {
        for n in 0..=MAX_DEGREE {
            for &(x, t) in &[(0.2, 0.7), (0.5, 1.0), (0.05, 0.3)] {
                let (v, _, _) = scaled_legendre(n).eval(x, t);
                let expected = t.powi(n as i32) * legendre_eval(n, 2.0 * x / t - 1.0);
                assert_relative_eq!(v, expected, epsilon = 1e-13);
            }
        }
        // Integrated Jacobi by composite Simpson quadrature of the direct form.
        for alpha in [0usize, 1, 5, 9] {
            for n in 1..=MAX_DEGREE {
                let u: f64 = 0.63;
                let m = 2000;
                let h = u / m as f64;
                let f = |s: f64| jacobi_eval(n - 1, alpha as f64, 0.0, 2.0 * s - 1.0);
                let mut sum = f(0.0) + f(u);
                for k in 1..m {
                    sum += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
                }
                let expected = sum * h / 3.0;
                let (v, _, _) = scaled_integrated_jacobi(n, alpha).eval(u, 1.0);
                assert_relative_eq!(v, expected, max_relative = 1e-9, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn homogenized_derivatives() {
        let p = scaled_integrated_jacobi(4, 3);
        let (x, t, h) = (0.31, 0.77, 1e-6);
        let (_, dx, dt) = p.eval(x, t);
        let fdx = (p.eval(x + h, t).0 - p.eval(x - h, t).0) / (2.0 * h);
        let fdt = (p.eval(x, t + h).0 - p.eval(x, t - h).0) / (2.0 * h);
        assert_relative_eq!(dx, fdx, max_relative = 1e-7);
        assert_relative_eq!(dt, fdt, max_relative = 1e-7);
    }
}
