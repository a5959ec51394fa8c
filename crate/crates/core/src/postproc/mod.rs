//! Field evaluation, L2 errors, convergence orders and analytic references.

mod analytic;

pub use analytic::{fullspace_dipole_oracle, mms_fields, MmsFields, MmsSpec};

use crate::assembly::{physical_shapes, AssemblyError, TableCache};
use crate::mesh::{Mesh, MeshError};
use crate::refine::DofMap;
use crate::{to_complex, CVec3, Complex64, Vec3, VectorField};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PostprocError {
    #[error("coefficient vector has length {found}, dof map has {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("point {index} at ({x}, {y}, {z}) is outside the mesh")]
    OutsideMesh { index: usize, x: f64, y: f64, z: f64 },
    #[error("exact field has zero norm")]
    ZeroNorm,
    #[error("dipole offset must be nonzero")]
    ZeroOffset,
    #[error("need at least two levels with matching lengths")]
    TooFewLevels,
    #[error("spacings must be strictly decreasing")]
    SpacingOrder,
    #[error("errors must be positive")]
    NonPositiveError,
    #[error("{0}")]
    InvalidSpec(String),
    #[error("{0}")]
    Assembly(String),
}

impl From<AssemblyError> for PostprocError {
    fn from(e: AssemblyError) -> Self {
        PostprocError::Assembly(e.to_string())
    }
}

/// Discrete field `E = sum x_i w_i` over a dof map.
#[derive(Debug, Clone, Copy)]
pub struct SolutionField<'a> {
    mesh: &'a Mesh,
    dofmap: &'a DofMap,
    coeffs: &'a [Complex64],
}

impl<'a> SolutionField<'a> {
    pub fn new(mesh: &'a Mesh, dofmap: &'a DofMap, coeffs: &'a [Complex64]) -> Result<Self, PostprocError> {
        if coeffs.len() != dofmap.total_dof() {
            return Err(PostprocError::LengthMismatch {
                expected: dofmap.total_dof(),
                found: coeffs.len(),
            });
        }
        Ok(SolutionField { mesh, dofmap, coeffs })
    }

    pub fn coefficients(&self) -> &[Complex64] {
        self.coeffs
    }

    /// Field value and curl inside element `tet` at barycentric `lambda`.
    pub fn eval_in_element(&self, tet: usize, lambda: [f64; 4]) -> Result<(CVec3, CVec3), PostprocError> {
        let s = physical_shapes(self.mesh, self.dofmap, tet, lambda)?;
        let mut e = CVec3::zeros();
        let mut c = CVec3::zeros();
        for ((&d, v), cu) in s.dofs.iter().zip(&s.values).zip(&s.curls) {
            let x = self.coeffs[d];
            e += to_complex(v) * x;
            c += to_complex(cu) * x;
        }
        Ok((e, c))
    }
}

/// Evaluates the field at physical points.
pub fn evaluate_field(field: &SolutionField, points: &[Vec3]) -> Result<Vec<CVec3>, PostprocError> {
    points
        .iter()
        .enumerate()
        .map(|(index, p)| {
            let (tet, lambda) = field.mesh.locate_point(p).map_err(|e| match e {
                MeshError::OutsideMesh(_) => PostprocError::OutsideMesh {
                    index,
                    x: p.x,
                    y: p.y,
                    z: p.z,
                },
                other => PostprocError::Assembly(other.to_string()),
            })?;
            Ok(field.eval_in_element(tet, lambda)?.0)
        })
        .collect()
}

/// Relative L2 error `||E_h - E|| / ||E||` by element quadrature.
pub fn l2_error(field: &SolutionField, exact: &dyn VectorField, quad_degree: usize) -> Result<f64, PostprocError> {
    let (mesh, dofmap) = (field.mesh, field.dofmap);
    let nt = mesh.num_tets();
    let cache = TableCache::build((0..nt).map(|t| (*dofmap.element_orders(t), mesh.face_frames(t), quad_degree)));
    let parts: Vec<(f64, f64)> = (0..nt)
        .into_par_iter()
        .map(|t| {
            let geom = crate::assembly::ElementGeometry::new(&mesh.vertices(t))
                .ok_or(AssemblyError::SingularElement { tet: t })?;
            let (table, pos) = cache.get(dofmap.element_orders(t), &mesh.face_frames(t), quad_degree);
            let n = table.len();
            let dofs = dofmap.element_dofs(t);
            let signs = dofmap.element_signs(t);
            let (mut num, mut den) = (0.0, 0.0);
            for (q, lambda) in table.lambdas.iter().enumerate() {
                let mut eh = CVec3::zeros();
                for (i, &p) in pos.iter().enumerate() {
                    let w = geom.map_value(&table.values[q * n + p]) * signs[i];
                    eh += to_complex(&w) * field.coeffs[dofs[i]];
                }
                let e = exact.eval(&geom.point(lambda));
                let dv = table.rule.weights[q] * geom.det.abs();
                num += (eh - e).norm_squared() * dv;
                den += e.norm_squared() * dv;
            }
            Ok((num, den))
        })
        .collect::<Result<_, PostprocError>>()?;
    let (num, den) = parts.iter().fold((0.0, 0.0), |(a, b), (n, d)| (a + n, b + d));
    if den == 0.0 {
        return Err(PostprocError::ZeroNorm);
    }
    Ok((num / den).sqrt())
}

fn check_levels(errors: &[f64], spacings: &[f64]) -> Result<(), PostprocError> {
    if errors.len() < 2 || errors.len() != spacings.len() {
        return Err(PostprocError::TooFewLevels);
    }
    if spacings.windows(2).any(|w| !(w[1] < w[0])) || spacings.iter().any(|&h| !(h > 0.0)) {
        return Err(PostprocError::SpacingOrder);
    }
    if errors.iter().any(|&e| !(e > 0.0)) {
        return Err(PostprocError::NonPositiveError);
    }
    Ok(())
}

/// Pairwise slopes `log(e_k / e_{k+1}) / log(h_k / h_{k+1})`.
pub fn convergence_order(errors: &[f64], spacings: &[f64]) -> Result<Vec<f64>, PostprocError> {
    check_levels(errors, spacings)?;
    Ok(errors
        .windows(2)
        .zip(spacings.windows(2))
        .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect())
}

/// Least-squares slope of `log e` against `log h`.
pub fn fitted_order(errors: &[f64], spacings: &[f64]) -> Result<f64, PostprocError> {
    check_levels(errors, spacings)?;
    let n = errors.len() as f64;
    let xs: Vec<f64> = spacings.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// One mesh level of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub divisions: usize,
    pub h: f64,
    pub dof: usize,
    pub error: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    /// Assembly plus solve time in seconds; omitted for reproducible output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

/// Convergence study for one refinement plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub plan: String,
    pub levels: Vec<LevelRecord>,
    pub pairwise_slopes: Vec<f64>,
    pub fitted_slope: f64,
}

impl ConvergenceRecord {
    pub fn new(plan: impl Into<String>, levels: Vec<LevelRecord>) -> Result<Self, PostprocError> {
        let errors: Vec<f64> = levels.iter().map(|l| l.error).collect();
        let h: Vec<f64> = levels.iter().map(|l| l.h).collect();
        Ok(ConvergenceRecord {
            plan: plan.into(),
            pairwise_slopes: convergence_order(&errors, &h)?,
            fitted_slope: fitted_order(&errors, &h)?,
            levels,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn table_slopes() {
        let s = convergence_order(&[4.252e-2, 2.201e-2], &[0.5, 0.25]).unwrap();
        assert_abs_diff_eq!(s[0], 0.949, epsilon = 0.002);
        let s = convergence_order(&[2.210e-2, 6.010e-3], &[0.5, 0.25]).unwrap();
        assert_abs_diff_eq!(s[0], 1.879, epsilon = 0.005);
        let s = convergence_order(&[1.0, 0.5, 0.25], &[1.0, 0.5, 0.25]).unwrap();
        for v in s {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(fitted_order(&[1.0, 0.25, 0.0625], &[1.0, 0.5, 0.25]).unwrap(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn slope_errors() {
        assert_eq!(convergence_order(&[1.0], &[1.0]).unwrap_err(), PostprocError::TooFewLevels);
        assert_eq!(convergence_order(&[1.0, 0.5], &[0.5, 1.0]).unwrap_err(), PostprocError::SpacingOrder);
        assert_eq!(
            convergence_order(&[1.0, 0.0], &[1.0, 0.5]).unwrap_err(),
            PostprocError::NonPositiveError
        );
    }
}
