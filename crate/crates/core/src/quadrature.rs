//! Integration rules on the reference simplices.
//!
//! Reference domains: tetrahedron with vertices `0, e_x, e_y, e_z`
//! (measure 1/6), triangle with vertices `0, e_x, e_y` (measure 1/2) and the
//! segment `[-1, 1]`. Tetrahedron and triangle rules are conical products of
//! Gauss-Jacobi rules on the collapsed coordinates.

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

pub const MAX_TET_DEGREE: usize = 14;
pub const MAX_TRI_DEGREE: usize = 14;
pub const MAX_SEGMENT_DEGREE: usize = 13;

#[derive(Debug, Error, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature degree {degree} outside [1, {max}]")]
    DegreeOutOfRange { degree: usize, max: usize },
}

/// Points and weights of a rule. Unused trailing coordinates are zero
/// (triangle points use `[x, y, 0]`, segment points `[x, 0, 0]`).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub exact_degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Barycentric coordinates of tetrahedron rule points.
    pub fn tet_barycentric(&self) -> impl Iterator<Item = [f64; 4]> + '_ {
        self.points
            .iter()
            .map(|p| [1.0 - p[0] - p[1] - p[2], p[0], p[1], p[2]])
    }
}

/// Gauss-Jacobi nodes and weights on `[0, 1]` for the weight `(1 - u)^alpha`,
/// by the Golub-Welsch eigenvalue method.
fn gauss_jacobi_unit(n: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let beta = 0.0;
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + alpha + beta;
        jm[(k, k)] = if k == 0 {
            (beta - alpha) / (alpha + beta + 2.0)
        } else {
            (beta * beta - alpha * alpha) / (s * (s + 2.0))
        };
        if k + 1 < n {
            let m = kf + 1.0;
            let s = 2.0 * m + alpha + beta;
            let b = (4.0 * m * (m + alpha) * (m + beta) * (m + alpha + beta) / (s * s * (s + 1.0) * (s - 1.0))).sqrt();
            jm[(k, k + 1)] = b;
            jm[(k + 1, k)] = b;
        }
    }
    let eig = SymmetricEigen::new(jm);
    // Integral of (1 - u)^alpha over [0, 1].
    let mu0 = 1.0 / (alpha + 1.0);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            ((eig.eigenvalues[k] + 1.0) / 2.0, mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Gauss points per direction for exactness `degree`: `ceil((degree + 1) / 2)`.
fn points_for(degree: usize) -> usize {
    (degree + 2) / 2
}

fn check(degree: usize, max: usize) -> Result<(), QuadratureError> {
    if degree == 0 || degree > max {
        return Err(QuadratureError::DegreeOutOfRange { degree, max });
    }
    Ok(())
}

/// Rule on the reference tetrahedron exact for total degree `degree`.
pub fn tet_rule(degree: usize) -> Result<QuadratureRule, QuadratureError> {
    check(degree, MAX_TET_DEGREE)?;
    let n = points_for(degree);
    let (a, wa) = gauss_jacobi_unit(n, 0.0);
    let (b, wb) = gauss_jacobi_unit(n, 1.0);
    let (c, wc) = gauss_jacobi_unit(n, 2.0);
    let mut points = Vec::with_capacity(n * n * n);
    let mut weights = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let z = c[k];
                let y = b[j] * (1.0 - z);
                let x = a[i] * (1.0 - b[j]) * (1.0 - z);
                points.push([x, y, z]);
                weights.push(wa[i] * wb[j] * wc[k]);
            }
        }
    }
    Ok(QuadratureRule {
        points,
        weights,
        exact_degree: degree,
    })
}

/// Rule on the reference triangle exact for total degree `degree`.
pub fn tri_rule(degree: usize) -> Result<QuadratureRule, QuadratureError> {
    check(degree, MAX_TRI_DEGREE)?;
    let n = points_for(degree);
    let (a, wa) = gauss_jacobi_unit(n, 0.0);
    let (b, wb) = gauss_jacobi_unit(n, 1.0);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            points.push([a[i] * (1.0 - b[j]), b[j], 0.0]);
            weights.push(wa[i] * wb[j]);
        }
    }
    Ok(QuadratureRule {
        points,
        weights,
        exact_degree: degree,
    })
}

/// Gauss-Legendre rule on `[-1, 1]` exact for degree `degree`.
pub fn segment_rule(degree: usize) -> Result<QuadratureRule, QuadratureError> {
    check(degree, MAX_SEGMENT_DEGREE)?;
    let n = points_for(degree);
    let (u, w) = gauss_jacobi_unit(n, 0.0);
    Ok(QuadratureRule {
        points: u.iter().map(|&u| [2.0 * u - 1.0, 0.0, 0.0]).collect(),
        weights: w.iter().map(|&w| 2.0 * w).collect(),
        exact_degree: degree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn degree_one_rules_are_midpoints() {
        let t = tet_rule(1).unwrap();
        assert_eq!(t.len(), 1);
        for c in t.points[0] {
            assert_relative_eq!(c, 0.25, epsilon = 1e-15);
        }
        assert_relative_eq!(t.weights[0], 1.0 / 6.0, epsilon = 1e-16);

        let tr = tri_rule(1).unwrap();
        assert_eq!(tr.len(), 1);
        assert_relative_eq!(tr.points[0][0], 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(tr.points[0][1], 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(tr.weights[0], 0.5, epsilon = 1e-16);

        let s = segment_rule(1).unwrap();
        assert_eq!(s.points, vec![[0.0, 0.0, 0.0]]);
        assert_relative_eq!(s.weights[0], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn analytic_examples() {
        let t = tet_rule(3).unwrap();
        let ix: f64 = t.points.iter().zip(&t.weights).map(|(p, w)| w * p[0]).sum();
        assert_relative_eq!(ix, 1.0 / 24.0, max_relative = 1e-13);
        let ix2y: f64 = t.points.iter().zip(&t.weights).map(|(p, w)| w * p[0] * p[0] * p[1]).sum();
        assert_relative_eq!(ix2y, 1.0 / 360.0, max_relative = 1e-13);

        let tr = tri_rule(2).unwrap();
        let ixy: f64 = tr.points.iter().zip(&tr.weights).map(|(p, w)| w * p[0] * p[1]).sum();
        assert_relative_eq!(ixy, 1.0 / 24.0, max_relative = 1e-13);

        let s = segment_rule(3).unwrap();
        assert_eq!(s.len(), 2);
        let ix2: f64 = s.points.iter().zip(&s.weights).map(|(p, w)| w * p[0] * p[0]).sum();
        assert_relative_eq!(ix2, 2.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn out_of_range() {
        assert!(tet_rule(0).is_err());
        assert!(tet_rule(15).is_err());
        assert!(segment_rule(14).is_err());
    }

    #[test]
    fn tet_monomial_sweep() {
        for degree in 1..=MAX_TET_DEGREE {
            let rule = tet_rule(degree).unwrap();
            for a in 0..=degree {
                for b in 0..=degree - a {
                    for c in 0..=degree - a - b {
                        let q: f64 = rule
                            .points
                            .iter()
                            .zip(&rule.weights)
                            .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32))
                            .sum();
                        let exact = factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3);
                        assert_relative_eq!(q, exact, max_relative = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn tri_and_segment_sweep() {
        for degree in 1..=MAX_TRI_DEGREE {
            let rule = tri_rule(degree).unwrap();
            for a in 0..=degree {
                for b in 0..=degree - a {
                    let q: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                    assert_relative_eq!(q, exact, max_relative = 1e-12);
                }
            }
        }
        for degree in 1..=MAX_SEGMENT_DEGREE {
            let rule = segment_rule(degree).unwrap();
            for a in 0..=degree {
                let q: f64 = rule.points.iter().zip(&rule.weights).map(|(p, w)| w * p[0].powi(a as i32)).sum();
                let exact = if a % 2 == 1 { 0.0 } else { 2.0 / (a as f64 + 1.0) };
                assert_relative_eq!(q, exact, max_relative = 1e-12, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn points_inside_reference_domains() {
        for degree in 1..=MAX_TET_DEGREE {
            let rule = tet_rule(degree).unwrap();
            let total: f64 = rule.weights.iter().sum();
            assert_relative_eq!(total, 1.0 / 6.0, max_relative = 1e-14);
            for l in rule.tet_barycentric() {
                assert!(l.iter().all(|&v| (0.0..=1.0).contains(&v)));
            }
        }
    }
}
