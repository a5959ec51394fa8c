use super::element::TableCache;
use super::{AssemblyError, ComplexSparseSystem, ElementGeometry, MaterialModel, SourceSpec};
use crate::basis::{mode_list, shape_functions_into};
use crate::mesh::Mesh;
use crate::refine::DofMap;
use crate::solver::CsrMatrix;
use crate::{to_complex, CVec3, Complex64, Vec3, VectorField, MU0};
use nalgebra::DMatrix;
use rayon::prelude::*;

/// Elements processed per parallel block before the ordered scatter.
const ELEMENT_BLOCK: usize = 2048;

/// Quadrature degree used for the element matrices at order `p`.
pub(crate) fn matrix_degree(p: u8) -> usize {
    (2 * p as usize).max(2)
}

pub(crate) fn geometry(mesh: &Mesh, tet: usize) -> Result<ElementGeometry, AssemblyError> {
    ElementGeometry::new(&mesh.vertices(tet)).ok_or(AssemblyError::SingularElement { tet })
}

/// Row pattern of the global matrix: the union of element dof sets.
fn sparsity(dofmap: &DofMap) -> Vec<Vec<usize>> {
    let n = dofmap.total_dof();
    let ne = dofmap.num_elements();
    let mut count = vec![0usize; n + 1];
    for t in 0..ne {
        for &d in dofmap.element_dofs(t) {
            count[d + 1] += 1;
        }
    }
    for i in 0..n {
        count[i + 1] += count[i];
    }
    let mut fill = count.clone();
    let mut elems = vec![0usize; count[n]];
    for t in 0..ne {
        for &d in dofmap.element_dofs(t) {
            elems[fill[d]] = t;
            fill[d] += 1;
        }
    }
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row: Vec<usize> = elems[count[i]..count[i + 1]]
                .iter()
                .flat_map(|&t| dofmap.element_dofs(t).iter().copied())
                .collect();
            row.sort_unstable();
            row.dedup();
            row
        })
        .collect()
}

/// Assembles `A = sum K_e - i w mu0 sum M_e` for frequency `frequency` (Hz).
/// `quad_degree` overrides the default `max(2 p, 2)` per element. The
/// right-hand side is left at zero.
pub fn assemble(
    mesh: &Mesh,
    dofmap: &DofMap,
    material: &MaterialModel,
    frequency: f64,
    quad_degree: Option<usize>,
) -> Result<ComplexSparseSystem, AssemblyError> {
    let nt = mesh.num_tets();
    let degree = |t: usize| quad_degree.unwrap_or_else(|| matrix_degree(dofmap.element_orders(t).max_order()));
    let cache = TableCache::build((0..nt).map(|t| (*dofmap.element_orders(t), mesh.face_frames(t), degree(t))));
    let sigmas = (0..nt)
        .map(|t| material.conductivity(mesh.region_tags()[t]).map(|c| c.tensor()))
        .collect::<Result<Vec<_>, _>>()?;
    let omega_mu = 2.0 * std::f64::consts::PI * frequency * MU0;

    let mut matrix = CsrMatrix::from_pattern(sparsity(dofmap));
    for start in (0..nt).step_by(ELEMENT_BLOCK) {
        let end = (start + ELEMENT_BLOCK).min(nt);
        let blocks: Vec<(DMatrix<f64>, DMatrix<f64>)> = (start..end)
            .into_par_iter()
            .map(|t| {
                let geom = geometry(mesh, t)?;
                let (table, pos) = cache.get(dofmap.element_orders(t), &mesh.face_frames(t), degree(t));
                Ok(table.element_matrices(&geom, pos, &sigmas[t]))
            })
            .collect::<Result<_, AssemblyError>>()?;
        for (t, (k, m)) in (start..end).zip(blocks) {
            let dofs = dofmap.element_dofs(t);
            let signs = dofmap.element_signs(t);
            for (i, &gi) in dofs.iter().enumerate() {
                let (cols, vals) = matrix.row_mut(gi);
                for (j, &gj) in dofs.iter().enumerate() {
                    let s = signs[i] * signs[j];
                    let v = Complex64::new(s * k[(i, j)], -s * omega_mu * m[(i, j)]);
                    let pos = cols.binary_search(&gj).expect("pattern entry");
                    vals[pos] += v;
                }
            }
        }
    }
    Ok(ComplexSparseSystem {
        matrix,
        rhs: vec![Complex64::new(0.0, 0.0); dofmap.total_dof()],
        constrained: Vec::new(),
    })
}

/// Physical (signed) global basis functions of one element at one point.
#[derive(Debug, Clone)]
pub struct PhysicalShapes {
    pub dofs: Vec<usize>,
    pub values: Vec<Vec3>,
    pub curls: Vec<Vec3>,
}

/// Evaluates the global basis functions supported on `tet` at barycentric
/// point `lambda`, including covariant mapping and orientation signs.
pub fn physical_shapes(
    mesh: &Mesh,
    dofmap: &DofMap,
    tet: usize,
    lambda: [f64; 4],
) -> Result<PhysicalShapes, AssemblyError> {
    let geom = geometry(mesh, tet)?;
    let modes = mode_list(dofmap.element_orders(tet));
    let (mut v, mut c) = (Vec::new(), Vec::new());
    shape_functions_into(&modes, lambda, &mesh.face_frames(tet), &mut v, &mut c);
    let signs = dofmap.element_signs(tet);
    Ok(PhysicalShapes {
        dofs: dofmap.element_dofs(tet).to_vec(),
        values: v.iter().zip(signs).map(|(v, s)| geom.map_value(v) * *s).collect(),
        curls: c.iter().zip(signs).map(|(c, s)| geom.map_curl(c) * *s).collect(),
    })
}

/// Point-dipole load `b_i = i w mu0 m w_i(x_s) . d` on the element
/// containing the source (lowest id on shared entities).
pub fn dipole_rhs(mesh: &Mesh, dofmap: &DofMap, source: &SourceSpec) -> Result<Vec<Complex64>, AssemblyError> {
    source.validate()?;
    let (tet, lambda) = mesh.locate_point(&source.position)?;
    let shapes = physical_shapes(mesh, dofmap, tet, lambda)?;
    let scale = Complex64::new(0.0, source.omega() * MU0 * source.moment);
    let mut b = vec![Complex64::new(0.0, 0.0); dofmap.total_dof()];
    for (&d, w) in shapes.dofs.iter().zip(&shapes.values) {
        b[d] += scale * w.dot(&source.direction);
    }
    Ok(b)
}

/// Load vector `b_i = int w_i . F` by element quadrature of degree `quad_degree`.
pub fn mms_rhs(
    mesh: &Mesh,
    dofmap: &DofMap,
    forcing: &dyn VectorField,
    quad_degree: usize,
) -> Result<Vec<Complex64>, AssemblyError> {
    let nt = mesh.num_tets();
    let cache = TableCache::build((0..nt).map(|t| (*dofmap.element_orders(t), mesh.face_frames(t), quad_degree)));
    let mut b = vec![Complex64::new(0.0, 0.0); dofmap.total_dof()];
    for start in (0..nt).step_by(ELEMENT_BLOCK) {
        let end = (start + ELEMENT_BLOCK).min(nt);
        let locals: Vec<Vec<Complex64>> = (start..end)
            .into_par_iter()
            .map(|t| {
                let geom = geometry(mesh, t)?;
                let (table, pos) = cache.get(dofmap.element_orders(t), &mesh.face_frames(t), quad_degree);
                let n = table.len();
                let mut local = vec![Complex64::new(0.0, 0.0); pos.len()];
                for (q, lambda) in table.lambdas.iter().enumerate() {
                    let f: CVec3 = forcing.eval(&geom.point(lambda));
                    let dv = table.rule.weights[q] * geom.det.abs();
                    for (i, &p) in pos.iter().enumerate() {
                        let w = to_complex(&geom.map_value(&table.values[q * n + p]));
                        local[i] += w.dot(&f) * dv;
                    }
                }
                Ok(local)
            })
            .collect::<Result<_, AssemblyError>>()?;
        for (t, local) in (start..end).zip(locals) {
            for ((&d, &s), v) in dofmap.element_dofs(t).iter().zip(dofmap.element_signs(t)).zip(local) {
                b[d] += v * s;
            }
        }
    }
    Ok(b)
}
