use edgefem::assembly::{
    apply_constraints, apply_homogeneous_dirichlet, assemble, dipole_rhs, element_matrices, mms_rhs,
    project_dirichlet_trace, Conductivity, MaterialModel, SourceSpec,
};
use edgefem::basis::{reference_face_frames, ElementOrders};
use edgefem::mesh::{build_connectivity, structured_box_mesh, BoxBounds, Mesh, RawMesh};
use edgefem::quadrature::tet_rule;
use edgefem::refine::{assign_orders, build_dofmap, DofMap, PlanMode};
use edgefem::{CVec3, Complex64, Vec3, MU0};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Unit cube with interior nodes jittered and two region tags.
fn jittered_cube(n: usize, seed: u64) -> Mesh {
    let mut raw = structured_box_mesh(&BoxBounds::unit(), [n; 3]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1.0 / n as f64;
    for p in &mut raw.nodes {
        if p.iter().all(|&x| x > 1e-9 && x < 1.0 - 1e-9) {
            for x in p.iter_mut() {
                *x += rng.gen_range(-0.2..0.2) * h;
            }
        }
    }
    for (t, tag) in raw.region_tag.iter_mut().enumerate() {
        *tag = if t % 3 == 0 { 2 } else { 1 };
    }
    build_connectivity(raw).unwrap()
}

fn layered_material() -> MaterialModel {
    let mut m = MaterialModel::new();
    m.insert(1, Conductivity::isotropic(0.5)).unwrap();
    m.insert(2, Conductivity { sigma_h: 2.0, sigma_v: 0.25 }).unwrap();
    m
}

fn dofmap(mesh: &Mesh, plan: PlanMode) -> DofMap {
    build_dofmap(mesh, &assign_orders(mesh, &plan).unwrap())
}

#[test]
fn global_matrix_is_complex_symmetric() {
    let mesh = jittered_cube(2, 3);
    let plans = [
        PlanMode::Uniform(1),
        PlanMode::Uniform(2),
        PlanMode::Uniform(3),
        PlanMode::EntityLevel { edge: 2, face: 1, interior: 3 },
        PlanMode::PerElement((0..mesh.num_tets()).map(|t| (t % 3) as u8 + 1).collect()),
    ];
    for plan in plans {
        let dm = dofmap(&mesh, plan.clone());
        let sys = assemble(&mesh, &dm, &layered_material(), 10.0, None).unwrap();
        let asym = sys.matrix.asymmetry() / sys.matrix.norm();
        assert!(asym <= 1e-13, "{plan:?}: asymmetry {asym:e}");
    }
}

#[test]
fn gradients_are_in_the_curl_nullspace() {
    let mesh = jittered_cube(3, 5);
    let dm = dofmap(&mesh, PlanMode::Uniform(1));
    let sys = assemble(&mesh, &dm, &layered_material(), 1.0, None).unwrap();
    let phi: Vec<f64> = mesh.nodes().iter().map(|p| (1.3 * p.x).sin() + p.y * p.z - 0.7 * p.z).collect();
    let mut x = vec![c(0.0, 0.0); dm.total_dof()];
    for (e, &[a, b]) in mesh.edges().iter().enumerate() {
        x[dm.edge_dofs(e).start] = c(phi[b] - phi[a], 0.0);
    }
    let kx: Vec<f64> = (0..dm.total_dof())
        .map(|i| {
            let (cols, vals) = sys.matrix.row(i);
            cols.iter().zip(vals).map(|(&j, v)| v.re * x[j].re).sum()
        })
        .collect();
    let k_norm = sys.matrix.to_dense().iter().flatten().map(|v| v.re * v.re).sum::<f64>().sqrt();
    let x_norm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let r = kx.iter().map(|v| v * v).sum::<f64>().sqrt() / (k_norm * x_norm);
    assert!(r <= 1e-10, "residual {r:e}");
}

#[test]
fn mass_term_is_linear_in_conductivity() {
    let mesh = jittered_cube(2, 8);
    let dm = dofmap(&mesh, PlanMode::Uniform(2));
    let a1 = assemble(&mesh, &dm, &MaterialModel::homogeneous(0.3).unwrap(), 5.0, None).unwrap();
    let a2 = assemble(&mesh, &dm, &MaterialModel::homogeneous(0.6).unwrap(), 5.0, None).unwrap();
    let scale = a1.matrix.norm();
    for i in 0..dm.total_dof() {
        let (cols, vals) = a1.matrix.row(i);
        for (&j, v1) in cols.iter().zip(vals) {
            let v2 = a2.matrix.get(i, j);
            assert!((v2.re - v1.re).abs() <= 1e-14 * scale);
            assert!((v2.im - 2.0 * v1.im).abs() <= 1e-14 * scale);
        }
    }
}

fn single_tet(vertices: [Vec3; 4]) -> Mesh {
    build_connectivity(RawMesh {
        nodes: vertices.to_vec(),
        tets: vec![[0, 1, 2, 3]],
        region_tag: vec![1],
        boundary_markers: vec![],
    })
    .unwrap()
}

#[test]
fn single_element_mesh_equals_element_matrices() {
    let v = [
        Vec3::new(0.1, 0.0, 0.0),
        Vec3::new(1.2, 0.1, 0.0),
        Vec3::new(0.3, 0.9, 0.1),
        Vec3::new(0.2, 0.3, 1.1),
    ];
    let mesh = single_tet(v);
    let sigma = Conductivity { sigma_h: 1.5, sigma_v: 0.5 };
    let mut material = MaterialModel::new();
    material.insert(1, sigma).unwrap();
    let f = 2.0;
    for p in 1..=3u8 {
        let dm = dofmap(&mesh, PlanMode::Uniform(p));
        let sys = assemble(&mesh, &dm, &material, f, None).unwrap();
        let rule = tet_rule((2 * p as usize).max(2)).unwrap();
        let (k, m) = element_matrices(&v, &ElementOrders::uniform(p), &reference_face_frames(), &sigma, &rule).unwrap();
        let w = 2.0 * PI * f * MU0;
        let (dofs, signs) = (dm.element_dofs(0), dm.element_signs(0));
        assert_eq!(sys.dim(), k.nrows());
        for i in 0..k.nrows() {
            for j in 0..k.ncols() {
                let s = signs[i] * signs[j];
                let expected = c(s * k[(i, j)], -s * w * m[(i, j)]);
                let got = sys.matrix.get(dofs[i], dofs[j]);
                assert!((got - expected).norm() <= 1e-12 * (1.0 + expected.norm()), "p={p} ({i},{j})");
            }
        }
    }
}

#[test]
fn dipole_load_at_centroid() {
    let v = [Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()];
    let mesh = single_tet(v);
    let dm = dofmap(&mesh, PlanMode::Uniform(1));
    let source = SourceSpec {
        position: Vec3::repeat(0.25),
        direction: Vec3::x(),
        moment: 1.0,
        length: 1.0,
        frequency: 1.0,
    };
    let b = dipole_rhs(&mesh, &dm, &source).unwrap();
    let grads = [Vec3::new(-1.0, -1.0, -1.0), Vec3::x(), Vec3::y(), Vec3::z()];
    let scale = c(0.0, 2.0 * PI * MU0);
    for (e, &[a, bb]) in mesh.edges().iter().enumerate() {
        // Whitney function at the centroid: (grad l_b - grad l_a) / 4.
        let w = (grads[bb] - grads[a]) / 4.0;
        let expected = scale * w.x;
        assert!((b[dm.edge_dofs(e).start] - expected).norm() <= 1e-15 * scale.norm());
    }
}

#[test]
fn constant_field_trace_projection() {
    let mesh = jittered_cube(2, 21);
    let e0 = CVec3::new(c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0));
    for p in 1..=3u8 {
        let dm = dofmap(&mesh, PlanMode::Uniform(p));
        let trace = project_dirichlet_trace(&mesh, &dm, &|_: &Vec3| e0).unwrap();
        let boundary = dm.boundary_dofs(&mesh);
        assert_eq!(trace.iter().map(|t| t.0).collect::<Vec<_>>(), boundary);
        let values: std::collections::HashMap<usize, Complex64> = trace.into_iter().collect();
        for &e in mesh.boundary_edges() {
            let [a, b] = mesh.edges()[e];
            let d = mesh.nodes()[b] - mesh.nodes()[a];
            let mut range = dm.edge_dofs(e);
            let first = range.next().unwrap();
            assert!((values[&first] - c(d.x + d.y, 0.0)).norm() < 1e-12);
            for hi in range {
                assert!(values[&hi].norm() < 1e-12);
            }
        }
        for &f in mesh.boundary_faces() {
            for d in dm.face_dofs(f) {
                assert!(values[&d].norm() < 1e-12);
            }
        }
    }
}

#[test]
fn homogeneous_dirichlet_keeps_pattern_and_symmetry() {
    let mesh = jittered_cube(2, 4);
    let dm = dofmap(&mesh, PlanMode::Uniform(2));
    let mut sys = assemble(&mesh, &dm, &layered_material(), 1.0, None).unwrap();
    sys.rhs = mms_rhs(&mesh, &dm, &|p: &Vec3| CVec3::new(c(p.y, 0.0), c(0.0, p.z), c(1.0, 0.0)), 6).unwrap();
    let nnz = sys.matrix.nnz();
    apply_homogeneous_dirichlet(&mut sys, &dm, &mesh);
    assert_eq!(sys.matrix.nnz(), nnz);
    assert!(sys.matrix.asymmetry() <= 1e-13 * sys.matrix.norm());
    for d in dm.boundary_dofs(&mesh) {
        assert_eq!(sys.rhs[d], c(0.0, 0.0));
        assert_eq!(sys.matrix.get(d, d), c(1.0, 0.0));
        let (cols, vals) = sys.matrix.row(d);
        for (&j, &v) in cols.iter().zip(vals) {
            if j != d {
                assert_eq!(v, c(0.0, 0.0));
                assert_eq!(sys.matrix.get(j, d), c(0.0, 0.0));
            }
        }
    }
    // Interior rows keep their values where they do not couple to the boundary.
    let before = assemble(&mesh, &dm, &layered_material(), 1.0, None).unwrap();
    let boundary: std::collections::HashSet<usize> = dm.boundary_dofs(&mesh).into_iter().collect();
    for i in (0..dm.total_dof()).filter(|i| !boundary.contains(i)) {
        let (cols, vals) = sys.matrix.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if !boundary.contains(&j) {
                assert_eq!(v, before.matrix.get(i, j));
            }
        }
    }
}

#[test]
fn constraint_elimination_preserves_solution() {
    let mesh = jittered_cube(2, 9);
    let dm = dofmap(&mesh, PlanMode::Uniform(1));
    let mut sys = assemble(&mesh, &dm, &layered_material(), 1.0e4, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x: Vec<Complex64> = (0..dm.total_dof()).map(|_| c(rng.gen(), rng.gen())).collect();
    sys.rhs = sys.matrix.matvec(&x);
    let constraints: Vec<(usize, Complex64)> = dm.boundary_dofs(&mesh).into_iter().map(|d| (d, x[d])).collect();
    apply_constraints(&mut sys, &constraints);
    let r = sys.matrix.matvec(&x);
    for (a, b) in r.iter().zip(&sys.rhs) {
        assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()));
    }
}
