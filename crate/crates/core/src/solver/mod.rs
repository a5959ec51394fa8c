//! Linear solvers for the complex-symmetric systems: right-preconditioned
//! restarted GMRES and a dense LU fallback for small problems.

mod dense;
mod sparse;

pub use dense::DENSE_LIMIT;
pub use sparse::CsrMatrix;

use crate::assembly::ComplexSparseSystem;
use crate::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("matrix is singular (pivot {pivot})")]
    Singular { pivot: usize },
    #[error("dense solver limited to {limit} unknowns, system has {n}")]
    TooLarge { n: usize, limit: usize },
    #[error("zero diagonal entry in row {row}")]
    ZeroDiagonal { row: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("GMRES breakdown after {iterations} iterations")]
    Breakdown { iterations: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Krylov,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreconditionerKind {
    None,
    Diagonal,
    Ssor { omega: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: Method,
    pub tolerance: f64,
    pub restart: usize,
    pub max_iterations: usize,
    pub preconditioner: PreconditionerKind,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: Method::Krylov,
            tolerance: 1e-8,
            restart: 100,
            max_iterations: 10_000,
            preconditioner: PreconditionerKind::Diagonal,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(SolverError::InvalidConfig(format!(
                "tolerance {} outside (0, 1)",
                self.tolerance
            )));
        }
        if self.restart == 0 {
            return Err(SolverError::InvalidConfig("restart must be at least 1".into()));
        }
        if let PreconditionerKind::Ssor { omega } = self.preconditioner {
            if !(omega > 0.0 && omega < 2.0) {
                return Err(SolverError::InvalidConfig(format!("ssor relaxation {omega} outside (0, 2)")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// `||b - A x|| / ||b||`, recomputed from the returned solution.
    pub residual: f64,
    /// Seconds.
    pub wall_time: f64,
    pub converged: bool,
}

const DOT_CHUNK: usize = 4096;

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let partial: Vec<Complex64> = a
        .par_chunks(DOT_CHUNK)
        .zip(b.par_chunks(DOT_CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u.conj() * v).sum())
        .collect();
    partial.into_iter().sum()
}

fn norm(a: &[Complex64]) -> f64 {
    let partial: Vec<f64> = a
        .par_chunks(DOT_CHUNK)
        .map(|x| x.iter().map(|u| u.norm_sqr()).sum())
        .collect();
    partial.into_iter().sum::<f64>().sqrt()
}

fn residual_norm(matrix: &CsrMatrix, x: &[Complex64], b: &[Complex64]) -> f64 {
    let ax = matrix.matvec(x);
    let r: Vec<Complex64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    norm(&r)
}

/// Relative residual `||b - A x|| / ||b||` (absolute when `b = 0`).
pub fn relative_residual(matrix: &CsrMatrix, x: &[Complex64], b: &[Complex64]) -> f64 {
    let r = residual_norm(matrix, x, b);
    let bn = norm(b);
    if bn > 0.0 {
        r / bn
    } else {
        r
    }
}

/// Linear preconditioner `z = M^{-1} r`.
pub enum Preconditioner<'a> {
    Identity,
    Diagonal(Vec<Complex64>),
    Ssor {
        matrix: &'a CsrMatrix,
        diag: Vec<Complex64>,
        omega: f64,
    },
}

pub fn precondition(matrix: &CsrMatrix, kind: PreconditionerKind) -> Result<Preconditioner<'_>, SolverError> {
    let nonzero_diag = || -> Result<Vec<Complex64>, SolverError> {
        let d = matrix.diagonal();
        match d.iter().position(|v| v.norm() == 0.0) {
            Some(row) => Err(SolverError::ZeroDiagonal { row }),
            None => Ok(d),
        }
    };
    Ok(match kind {
        PreconditionerKind::None => Preconditioner::Identity,
        PreconditionerKind::Diagonal => Preconditioner::Diagonal(nonzero_diag()?.iter().map(|d| 1.0 / d).collect()),
        PreconditionerKind::Ssor { omega } => Preconditioner::Ssor {
            matrix,
            diag: nonzero_diag()?,
            omega,
        },
    })
}

impl Preconditioner<'_> {
    pub fn apply(&self, r: &[Complex64]) -> Vec<Complex64> {
        match self {
            Preconditioner::Identity => r.to_vec(),
            Preconditioner::Diagonal(inv) => r.iter().zip(inv).map(|(r, d)| r * d).collect(),
            Preconditioner::Ssor { matrix, diag, omega } => {
                // M = (D + w L) D^{-1} (D + w U)
                let n = r.len();
                let mut u = vec![Complex64::new(0.0, 0.0); n];
                for i in 0..n {
                    let (cols, vals) = matrix.row(i);
                    let mut s = r[i];
                    for (&j, &v) in cols.iter().zip(vals) {
                        if j >= i {
                            break;
                        }
                        s -= *omega * v * u[j];
                    }
                    u[i] = s / diag[i];
                }
                for i in 0..n {
                    u[i] *= diag[i];
                }
                let mut z = vec![Complex64::new(0.0, 0.0); n];
                for i in (0..n).rev() {
                    let (cols, vals) = matrix.row(i);
                    let mut s = u[i];
                    for (&j, &v) in cols.iter().zip(vals).rev() {
                        if j <= i {
                            break;
                        }
                        s -= *omega * v * z[j];
                    }
                    z[i] = s / diag[i];
                }
                z
            }
        }
    }
}

/// Dispatches on `config.method`.
pub fn solve(system: &ComplexSparseSystem, config: &SolverConfig) -> Result<(Vec<Complex64>, SolveReport), SolverError> {
    match config.method {
        Method::Krylov => krylov_solve(system, config),
        Method::Dense => {
            let start = Instant::now();
            let x = dense_solve(system)?;
            let residual = relative_residual(&system.matrix, &x, &system.rhs);
            Ok((
                x,
                SolveReport {
                    iterations: 0,
                    residual,
                    wall_time: start.elapsed().as_secs_f64(),
                    converged: true,
                },
            ))
        }
    }
}

/// Restarted GMRES with right preconditioning and modified Gram-Schmidt.
/// Returns the last iterate with a non-converged report when the iteration
/// budget runs out.
pub fn krylov_solve(
    system: &ComplexSparseSystem,
    config: &SolverConfig,
) -> Result<(Vec<Complex64>, SolveReport), SolverError> {
    config.validate()?;
    let start = Instant::now();
    let a = &system.matrix;
    let b = &system.rhs;
    let n = a.dim();
    let zero = Complex64::new(0.0, 0.0);
    let mut x = vec![zero; n];
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                residual: 0.0,
                wall_time: start.elapsed().as_secs_f64(),
                converged: true,
            },
        ));
    }
    let prec = precondition(a, config.preconditioner)?;
    let m = config.restart.min(n.max(1));
    let mut iterations = 0;

    while iterations < config.max_iterations {
        let ax = a.matvec(&x);
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        if beta / bnorm <= config.tolerance {
            break;
        }
        let mut basis: Vec<Vec<Complex64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h: Vec<Vec<Complex64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<Complex64> = Vec::with_capacity(m);
        let mut g = vec![zero; m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut k = 0;
        while k < m && iterations < config.max_iterations {
            let z = prec.apply(&basis[k]);
            let mut w = a.matvec(&z);
            let mut col = vec![zero; k + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(v, &w);
                col[i] = hij;
                w.par_iter_mut().zip(v.par_iter()).for_each(|(w, v)| *w -= hij * v);
            }
            let hnext = norm(&w);
            col[k + 1] = Complex64::new(hnext, 0.0);
            for i in 0..k {
                let (c, s) = (cs[i], sn[i]);
                let t = c * col[i] + s * col[i + 1];
                col[i + 1] = -s.conj() * col[i] + c * col[i + 1];
                col[i] = t;
            }
            let (c, s) = givens(col[k], col[k + 1]);
            col[k] = c * col[k] + s * col[k + 1];
            col[k + 1] = zero;
            g[k + 1] = -s.conj() * g[k];
            g[k] *= c;
            cs.push(c);
            sn.push(s);
            h.push(col);
            iterations += 1;
            k += 1;
            if g[k].norm() / bnorm <= config.tolerance || hnext <= 1e-300 {
                break;
            }
            basis.push(w.iter().map(|v| v / hnext).collect());
        }
        // Back substitution on the triangularized Hessenberg system.
        let mut y = vec![zero; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[j][i] * y[j];
            }
            if h[i][i].norm() == 0.0 {
                return Err(SolverError::Breakdown { iterations });
            }
            y[i] = s / h[i][i];
        }
        let mut update = vec![zero; n];
        for (j, v) in basis.iter().take(k).enumerate() {
            let yj = y[j];
            update.par_iter_mut().zip(v.par_iter()).for_each(|(u, v)| *u += yj * v);
        }
        let dx = prec.apply(&update);
        x.par_iter_mut().zip(dx.par_iter()).for_each(|(x, d)| *x += d);
        if g[k].norm() >= 0.999_999 * beta {
            // No progress in a full cycle.
            break;
        }
    }

    let residual = residual_norm(a, &x, b) / bnorm;
    Ok((
        x,
        SolveReport {
            iterations,
            residual,
            wall_time: start.elapsed().as_secs_f64(),
            converged: residual <= config.tolerance,
        },
    ))
}

fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    if b.norm() == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if a.norm() == 0.0 {
        return (0.0, Complex64::new(1.0, 0.0));
    }
    let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let c = a.norm() / r;
    let s = (a / a.norm()) * b.conj() / r;
    (c, s)
}

/// Direct solve by LU with partial pivoting. Rows already constrained to
/// identity are eliminated first.
pub fn dense_solve(system: &ComplexSparseSystem) -> Result<Vec<Complex64>, SolverError> {
    let a = &system.matrix;
    let n = a.dim();
    if n > DENSE_LIMIT {
        return Err(SolverError::TooLarge { n, limit: DENSE_LIMIT });
    }
    let mut fixed = vec![None; n];
    for &(d, v) in &system.constrained {
        let (cols, vals) = a.row(d);
        let identity = cols
            .iter()
            .zip(vals)
            .all(|(&j, &x)| if j == d { x == Complex64::new(1.0, 0.0) } else { x == Complex64::new(0.0, 0.0) });
        if identity {
            fixed[d] = Some(v);
        }
    }
    let free: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
    let mut index = vec![usize::MAX; n];
    for (k, &i) in free.iter().enumerate() {
        index[i] = k;
    }
    let nf = free.len();
    let mut dense = vec![Complex64::new(0.0, 0.0); nf * nf];
    let mut rhs = vec![Complex64::new(0.0, 0.0); nf];
    for (k, &i) in free.iter().enumerate() {
        let (cols, vals) = a.row(i);
        rhs[k] = system.rhs[i];
        for (&j, &v) in cols.iter().zip(vals) {
            match fixed[j] {
                Some(xj) => rhs[k] -= v * xj,
                None => dense[k * nf + index[j]] += v,
            }
        }
    }
    let y = dense::lu_solve(dense, nf, rhs)?;
    let mut x: Vec<Complex64> = fixed.iter().map(|f| f.unwrap_or_default()).collect();
    for (k, &i) in free.iter().enumerate() {
        x[i] = y[k];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn system(matrix: CsrMatrix, rhs: Vec<Complex64>) -> ComplexSparseSystem {
        ComplexSparseSystem {
            matrix,
            rhs,
            constrained: Vec::new(),
        }
    }

    #[test]
    fn identity_in_one_iteration() {
        let b: Vec<Complex64> = (0..7).map(|i| c(i as f64, 1.0)).collect();
        let s = system(CsrMatrix::identity(7), b.clone());
        let (x, rep) = krylov_solve(&s, &SolverConfig::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.iterations <= 1);
        for (x, b) in x.iter().zip(&b) {
            assert_relative_eq!(x.re, b.re, epsilon = 1e-14);
            assert_relative_eq!(x.im, b.im, epsilon = 1e-14);
        }
        assert_eq!(dense_solve(&s).unwrap(), b);
    }

    #[test]
    fn two_by_two_hand_inverse() {
        let a = CsrMatrix::from_dense(&[vec![c(2.0, 0.0), c(0.0, 1.0)], vec![c(0.0, 1.0), c(1.0, 0.0)]]);
        let s = system(a, vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let expected = [c(1.0 / 3.0, 0.0), c(0.0, -1.0 / 3.0)];
        for kind in [PreconditionerKind::None, PreconditionerKind::Diagonal, PreconditionerKind::Ssor { omega: 1.2 }] {
            let cfg = SolverConfig {
                preconditioner: kind,
                ..SolverConfig::default()
            };
            let (x, rep) = krylov_solve(&s, &cfg).unwrap();
            assert!(rep.converged, "{kind:?}");
            for (x, e) in x.iter().zip(&expected) {
                assert!((x - e).norm() < 1e-12);
            }
        }
        let x = dense_solve(&s).unwrap();
        for (x, e) in x.iter().zip(&expected) {
            assert!((x - e).norm() < 1e-15);
        }
    }

    #[test]
    fn diagonal_preconditioner() {
        let a = CsrMatrix::from_dense(&[vec![c(2.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 4.0)]]);
        let p = precondition(&a, PreconditionerKind::Diagonal).unwrap();
        assert_eq!(p.apply(&[c(2.0, 0.0), c(0.0, 4.0)]), vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let r = vec![c(0.3, -1.0), c(2.0, 0.5)];
        assert_eq!(precondition(&a, PreconditionerKind::None).unwrap().apply(&r), r);
        let id = CsrMatrix::identity(2);
        for omega in [0.5, 1.0, 1.7] {
            let p = precondition(&id, PreconditionerKind::Ssor { omega }).unwrap();
            assert_eq!(p.apply(&r), r);
        }
        let singular = CsrMatrix::from_dense(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(1.0, 0.0)]]);
        assert!(matches!(
            precondition(&singular, PreconditionerKind::Diagonal),
            Err(SolverError::ZeroDiagonal { row: 0 })
        ));
    }

    #[test]
    fn dense_diagonal_and_guard() {
        let a = CsrMatrix::from_dense(&[vec![c(2.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 4.0)]]);
        let x = dense_solve(&system(a, vec![c(1.0, 1.0), c(4.0, 0.0)])).unwrap();
        assert_eq!(x, vec![c(0.5, 0.5), c(0.0, -1.0)]);
        let big = system(CsrMatrix::identity(DENSE_LIMIT + 1), vec![c(0.0, 0.0); DENSE_LIMIT + 1]);
        assert!(matches!(dense_solve(&big), Err(SolverError::TooLarge { .. })));
        let zero = CsrMatrix::from_pattern(vec![vec![0], vec![1]]);
        assert!(matches!(
            dense_solve(&system(zero, vec![c(1.0, 0.0); 2])),
            Err(SolverError::Singular { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let bad = SolverConfig {
            tolerance: 1.5,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            restart: 0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
