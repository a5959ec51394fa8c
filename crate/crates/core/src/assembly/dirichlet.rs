use super::global::physical_shapes;
use super::{AssemblyError, ComplexSparseSystem};
use crate::mesh::Mesh;
use crate::quadrature::{segment_rule, tri_rule, MAX_SEGMENT_DEGREE, MAX_TRI_DEGREE};
use crate::refine::DofMap;
use crate::{to_complex, CVec3, Complex64, Vec3, VectorField};
use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;

/// Symmetric elimination of prescribed dofs: `b <- b - A[:, D] x_D`, rows and
/// columns of `D` zeroed, unit diagonal and `b_D = x_D`. The sparsity pattern
/// is kept.
pub fn apply_constraints(system: &mut ComplexSparseSystem, constraints: &[(usize, Complex64)]) {
    let n = system.dim();
    let zero = Complex64::new(0.0, 0.0);
    let mut value: Vec<Option<Complex64>> = vec![None; n];
    for &(d, v) in constraints {
        value[d] = Some(v);
    }
    for i in 0..n {
        let (cols, vals) = system.matrix.row_mut(i);
        if let Some(xi) = value[i] {
            for (&j, v) in cols.iter().zip(vals.iter_mut()) {
                *v = if j == i { Complex64::new(1.0, 0.0) } else { zero };
            }
            system.rhs[i] = xi;
        } else {
            let mut correction = zero;
            for (&j, v) in cols.iter().zip(vals.iter_mut()) {
                if let Some(xj) = value[j] {
                    correction += *v * xj;
                    *v = zero;
                }
            }
            system.rhs[i] -= correction;
        }
    }
    let mut merged: HashMap<usize, Complex64> = system.constrained.iter().copied().collect();
    merged.extend(constraints.iter().copied());
    let mut all: Vec<(usize, Complex64)> = merged.into_iter().collect();
    all.sort_unstable_by_key(|&(d, _)| d);
    system.constrained = all;
}

/// Constrains every dof on boundary edges and faces to zero (`n x E = 0`).
pub fn apply_homogeneous_dirichlet(system: &mut ComplexSparseSystem, dofmap: &DofMap, mesh: &Mesh) {
    let zero = Complex64::new(0.0, 0.0);
    let constraints: Vec<(usize, Complex64)> = dofmap.boundary_dofs(mesh).into_iter().map(|d| (d, zero)).collect();
    apply_constraints(system, &constraints);
}

fn local_index(tet_nodes: &[usize; 4], node: usize) -> usize {
    tet_nodes.iter().position(|&n| n == node).expect("node of element")
}

/// Solves `G x = r` for a symmetric positive definite real Gram matrix and a
/// complex right-hand side.
fn solve_gram(g: DMatrix<f64>, rhs: &[Complex64]) -> Option<Vec<Complex64>> {
    let chol = g.cholesky()?;
    let re = chol.solve(&DVector::from_iterator(rhs.len(), rhs.iter().map(|c| c.re)));
    let im = chol.solve(&DVector::from_iterator(rhs.len(), rhs.iter().map(|c| c.im)));
    Some(re.iter().zip(im.iter()).map(|(&r, &i)| Complex64::new(r, i)).collect())
}

/// Projects the tangential trace of `exact` onto the boundary dofs.
///
/// Edge step: for each boundary edge, the `p_e x p_e` tangential mass system
/// along the edge. Face step: for each boundary face with face dofs, the
/// tangential mass system of the face modes, with the edge contributions
/// subtracted from the target trace.
pub fn project_dirichlet_trace(
    mesh: &Mesh,
    dofmap: &DofMap,
    exact: &dyn VectorField,
) -> Result<Vec<(usize, Complex64)>, AssemblyError> {
    let nodes = mesh.nodes();
    let mut values: HashMap<usize, Complex64> = HashMap::new();

    for &edge in mesh.boundary_edges() {
        let range = dofmap.edge_dofs(edge);
        let np = range.len();
        let [a, b] = mesh.edges()[edge];
        let tet = mesh.edge_tet(edge);
        let tn = mesh.tets()[tet];
        let (la, lb) = (local_index(&tn, a), local_index(&tn, b));
        let d = nodes[b] - nodes[a];
        let len = d.norm();
        let tangent = d / len;
        let rule = segment_rule((2 * np + 2).min(MAX_SEGMENT_DEGREE)).expect("valid degree");
        let mut gram = DMatrix::zeros(np, np);
        let mut rhs = vec![Complex64::new(0.0, 0.0); np];
        for (p, &w) in rule.points.iter().zip(&rule.weights) {
            let u = 0.5 * (1.0 + p[0]);
            let mut lambda = [0.0; 4];
            lambda[la] = 1.0 - u;
            lambda[lb] = u;
            let x = nodes[a] + d * u;
            let shapes = physical_shapes(mesh, dofmap, tet, lambda)?;
            let traces: Vec<f64> = range
                .clone()
                .map(|dof| {
                    let k = shapes.dofs.iter().position(|&g| g == dof).expect("edge dof on element");
                    shapes.values[k].dot(&tangent)
                })
                .collect();
            let et = exact.eval(&x).dot(&to_complex(&tangent));
            let ds = 0.5 * len * w;
            for i in 0..np {
                rhs[i] += et * traces[i] * ds;
                for j in 0..np {
                    gram[(i, j)] += traces[i] * traces[j] * ds;
                }
            }
        }
        let x = solve_gram(gram, &rhs).ok_or(AssemblyError::SingularProjection { entity: "edge", id: edge })?;
        for (dof, v) in range.zip(x) {
            values.insert(dof, v);
        }
    }

    for &face in mesh.boundary_faces() {
        let range = dofmap.face_dofs(face);
        let nf = range.len();
        if nf == 0 {
            continue;
        }
        let tet = mesh.face_tets(face)[0].expect("boundary face has an element");
        let tn = mesh.tets()[tet];
        let fnodes = mesh.faces()[face];
        let lv = fnodes.map(|n| local_index(&tn, n));
        let (x0, x1, x2) = (nodes[fnodes[0]], nodes[fnodes[1]], nodes[fnodes[2]]);
        let cross = (x1 - x0).cross(&(x2 - x0));
        let jac = cross.norm();
        let normal = cross / jac;
        let pmax = (((nf as f64) + 0.25).sqrt() + 0.5).round() as usize;
        let rule = tri_rule((2 * pmax + 2).min(MAX_TRI_DEGREE)).expect("valid degree");
        let mut gram = DMatrix::zeros(nf, nf);
        let mut rhs = vec![Complex64::new(0.0, 0.0); nf];
        let tangential = |v: Vec3| v - normal * v.dot(&normal);
        for (p, &w) in rule.points.iter().zip(&rule.weights) {
            let mut lambda = [0.0; 4];
            lambda[lv[0]] = 1.0 - p[0] - p[1];
            lambda[lv[1]] = p[0];
            lambda[lv[2]] = p[1];
            let x = x0 * lambda[lv[0]] + x1 * p[0] + x2 * p[1];
            let shapes = physical_shapes(mesh, dofmap, tet, lambda)?;
            // Residual trace after removing the projected edge contributions.
            let mut r: CVec3 = exact.eval(&x);
            for (k, &dof) in shapes.dofs.iter().enumerate() {
                if let Some(&xe) = values.get(&dof) {
                    if !range.contains(&dof) {
                        r -= to_complex(&shapes.values[k]) * xe;
                    }
                }
            }
            let rt = r - to_complex(&normal) * r.dot(&to_complex(&normal));
            let traces: Vec<Vec3> = range
                .clone()
                .map(|dof| {
                    let k = shapes.dofs.iter().position(|&g| g == dof).expect("face dof on element");
                    tangential(shapes.values[k])
                })
                .collect();
            let da = jac * w;
            for i in 0..nf {
                rhs[i] += rt.dot(&to_complex(&traces[i])) * da;
                for j in 0..nf {
                    gram[(i, j)] += traces[i].dot(&traces[j]) * da;
                }
            }
        }
        let x = solve_gram(gram, &rhs).ok_or(AssemblyError::SingularProjection { entity: "face", id: face })?;
        for (dof, v) in range.zip(x) {
            values.insert(dof, v);
        }
    }

    let mut out: Vec<(usize, Complex64)> = values.into_iter().collect();
    out.sort_unstable_by_key(|&(d, _)| d);
    Ok(out)
}
