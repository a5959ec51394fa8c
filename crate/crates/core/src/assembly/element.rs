use super::{AssemblyError, Conductivity};
use crate::basis::{mode_list, shape_functions_into, ElementOrders, EntityKind, FaceFrames, ModeId};
use crate::quadrature::{tet_rule, QuadratureRule, MAX_TET_DEGREE};
use crate::Vec3;
use nalgebra::{DMatrix, Matrix3};
use rayon::prelude::*;
use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

/// Affine map from the reference tetrahedron: `x = v0 + J xi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub origin: Vec3,
    pub jacobian: Matrix3<f64>,
    pub inv_jacobian: Matrix3<f64>,
    pub det: f64,
}

impl ElementGeometry {
    pub fn new(v: &[Vec3; 4]) -> Option<Self> {
        let jacobian = Matrix3::from_columns(&[v[1] - v[0], v[2] - v[0], v[3] - v[0]]);
        let det = jacobian.determinant();
        let scale = (jacobian.norm() / 3f64.sqrt()).powi(3);
        if !(det.abs() > 1e-14 * scale) {
            return None;
        }
        Some(ElementGeometry {
            origin: v[0],
            jacobian,
            inv_jacobian: jacobian.try_inverse()?,
            det,
        })
    }

    pub fn point(&self, lambda: &[f64; 4]) -> Vec3 {
        self.origin + self.jacobian * Vec3::new(lambda[1], lambda[2], lambda[3])
    }

    /// Covariant map of a reference value.
    pub fn map_value(&self, w: &Vec3) -> Vec3 {
        self.inv_jacobian.transpose() * w
    }

    pub fn map_curl(&self, c: &Vec3) -> Vec3 {
        self.jacobian * c / self.det
    }

    pub fn volume(&self) -> f64 {
        self.det.abs() / 6.0
    }
}

/// Element stiffness and mass matrices by direct quadrature, in local
/// shape-function order without orientation signs.
pub fn element_matrices(
    vertices: &[Vec3; 4],
    orders: &ElementOrders,
    frames: &FaceFrames,
    sigma: &Conductivity,
    quad: &QuadratureRule,
) -> Result<(DMatrix<f64>, DMatrix<f64>), AssemblyError> {
    let geom = ElementGeometry::new(vertices).ok_or(AssemblyError::SingularElement { tet: 0 })?;
    orders.validate()?;
    let modes = mode_list(orders);
    let n = modes.len();
    let s = sigma.tensor();
    let mut k = DMatrix::zeros(n, n);
    let mut m = DMatrix::zeros(n, n);
    let (mut vals, mut curls) = (Vec::new(), Vec::new());
    for (lambda, &w) in quad.tet_barycentric().zip(&quad.weights) {
        shape_functions_into(&modes, lambda, frames, &mut vals, &mut curls);
        let pv: Vec<Vec3> = vals.iter().map(|v| geom.map_value(v)).collect();
        let pc: Vec<Vec3> = curls.iter().map(|c| geom.map_curl(c)).collect();
        let dv = w * geom.det.abs();
        for i in 0..n {
            let sv = s * pv[i];
            for j in 0..n {
                k[(i, j)] += dv * pc[i].dot(&pc[j]);
                m[(i, j)] += dv * sv.dot(&pv[j]);
            }
        }
    }
    Ok((k, m))
}

/// Index pairs of the symmetric moment matrices.
const PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

/// Reference shape functions of uniform order `p` tabulated at the points of
/// a tetrahedron rule, for one face-frame configuration.
pub(crate) struct ReferenceTable {
    pub modes: Vec<ModeId>,
    pub rule: QuadratureRule,
    pub lambdas: Vec<[f64; 4]>,
    /// `values[q * n + i]`.
    pub values: Vec<Vec3>,
    pub curls: Vec<Vec3>,
    moments: OnceLock<Moments>,
}

/// `R_ab = sum_q w_q (u_a u_b^T + u_b u_a^T)` for curls and values (the
/// diagonal pairs without the factor two).
struct Moments {
    curl: Vec<DMatrix<f64>>,
    value: Vec<DMatrix<f64>>,
}

impl ReferenceTable {
    fn new(p: u8, frames: &FaceFrames, degree: usize) -> Self {
        let modes = mode_list(&ElementOrders::uniform(p));
        let rule = tet_rule(degree.clamp(1, MAX_TET_DEGREE)).expect("valid degree");
        let lambdas: Vec<[f64; 4]> = rule.tet_barycentric().collect();
        let n = modes.len();
        let mut values = Vec::with_capacity(n * lambdas.len());
        let mut curls = Vec::with_capacity(n * lambdas.len());
        let (mut v, mut c) = (Vec::new(), Vec::new());
        for &l in &lambdas {
            shape_functions_into(&modes, l, frames, &mut v, &mut c);
            values.extend_from_slice(&v);
            curls.extend_from_slice(&c);
        }
        ReferenceTable {
            modes,
            rule,
            lambdas,
            values,
            curls,
            moments: OnceLock::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    fn moments(&self) -> &Moments {
        self.moments.get_or_init(|| {
            let n = self.len();
            let nq = self.lambdas.len();
            let build = |data: &[Vec3]| -> Vec<DMatrix<f64>> {
                let comps: Vec<DMatrix<f64>> = (0..3)
                    .map(|a| DMatrix::from_fn(nq, n, |q, i| data[q * n + i][a]))
                    .collect();
                let weighted: Vec<DMatrix<f64>> = (0..3)
                    .map(|a| DMatrix::from_fn(nq, n, |q, i| self.rule.weights[q] * comps[a][(q, i)]))
                    .collect();
                PAIRS
                    .iter()
                    .map(|&(a, b)| {
                        let r = weighted[a].transpose() * &comps[b];
                        if a == b {
                            r
                        } else {
                            let rt = r.transpose();
                            r + rt
                        }
                    })
                    .collect()
            };
            Moments {
                curl: build(&self.curls),
                value: build(&self.values),
            }
        })
    }

    /// Element matrices for the modes at `positions` via the precomputed
    /// moments: `K = sum G_ab R_ab` with `G = J^T J / |det|` and
    /// `M = sum S_ab R_ab` with `S = |det| J^{-1} sigma J^{-T}`.
    pub fn element_matrices(
        &self,
        geom: &ElementGeometry,
        positions: &[usize],
        sigma: &Matrix3<f64>,
    ) -> (DMatrix<f64>, DMatrix<f64>) {
        let mom = self.moments();
        let adet = geom.det.abs();
        let g = geom.jacobian.transpose() * geom.jacobian / adet;
        let s = geom.inv_jacobian * sigma * geom.inv_jacobian.transpose() * adet;
        let n = positions.len();
        let mut k = DMatrix::zeros(n, n);
        let mut m = DMatrix::zeros(n, n);
        for (idx, &(a, b)) in PAIRS.iter().enumerate() {
            let (gk, sm) = (g[(a, b)], s[(a, b)]);
            let (rc, rv) = (&mom.curl[idx], &mom.value[idx]);
            for (i, &pi) in positions.iter().enumerate() {
                for (j, &pj) in positions.iter().enumerate() {
                    k[(i, j)] += gk * rc[(pi, pj)];
                    m[(i, j)] += sm * rv[(pi, pj)];
                }
            }
        }
        (k, m)
    }
}

/// Positions of the modes of `orders` inside the uniform list of order
/// `orders.max_order()`. Both lists are level ordered, so the filtered
/// subsequence reproduces `mode_list(orders)`.
pub(crate) fn subset_positions(full: &[ModeId], orders: &ElementOrders) -> Vec<usize> {
    full.iter()
        .enumerate()
        .filter(|(_, m)| {
            let p = match m.kind {
                EntityKind::Edge => orders.edges[m.local as usize],
                EntityKind::Face => orders.faces[m.local as usize],
                EntityKind::Interior => orders.interior,
            };
            m.level < p
        })
        .map(|(i, _)| i)
        .collect()
}

type TableKey = (u8, FaceFrames, usize);

/// Reference tables and mode subsets shared by all elements of a mesh.
pub(crate) struct TableCache {
    tables: HashMap<TableKey, Arc<ReferenceTable>>,
    subsets: HashMap<ElementOrders, Arc<Vec<usize>>>,
}

impl TableCache {
    /// Tabulates every `(order, frames, degree)` combination requested.
    pub fn build(keys: impl IntoIterator<Item = (ElementOrders, FaceFrames, usize)>) -> Self {
        let mut table_keys: Vec<TableKey> = Vec::new();
        let mut orders: Vec<ElementOrders> = Vec::new();
        {
            let mut seen_t = std::collections::HashSet::new();
            let mut seen_o = std::collections::HashSet::new();
            for (o, f, d) in keys {
                let key = (o.max_order(), f, d);
                if seen_t.insert(key) {
                    table_keys.push(key);
                }
                if seen_o.insert(o) {
                    orders.push(o);
                }
            }
        }
        let tables: HashMap<TableKey, Arc<ReferenceTable>> = table_keys
            .par_iter()
            .map(|&(p, f, d)| ((p, f, d), Arc::new(ReferenceTable::new(p, &f, d))))
            .collect();
        let subsets = orders
            .into_iter()
            .map(|o| {
                let full = mode_list(&ElementOrders::uniform(o.max_order()));
                (o, Arc::new(subset_positions(&full, &o)))
            })
            .collect();
        TableCache { tables, subsets }
    }

    pub fn get(&self, orders: &ElementOrders, frames: &FaceFrames, degree: usize) -> (&ReferenceTable, &[usize]) {
        let t = &self.tables[&(orders.max_order(), *frames, degree)];
        let s = &self.subsets[orders];
        (t, s)
    }
}
