use super::poly::{scaled_integrated_jacobi, scaled_legendre, HomPoly};
use super::BasisError;
use crate::mesh::{LOCAL_EDGES, LOCAL_FACES};
use crate::{Vec3, MAX_ORDER};

/// Gradients of the barycentric coordinates on the reference tetrahedron
/// with vertices `0, e_x, e_y, e_z`.
pub const REFERENCE_GRADIENTS: [[f64; 3]; 4] =
    [[-1.0, -1.0, -1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Polynomial orders of the entities of one element (local numbering).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ElementOrders {
    pub edges: [u8; 6],
    pub faces: [u8; 4],
    pub interior: u8,
}

impl ElementOrders {
    pub fn uniform(p: u8) -> Self {
        ElementOrders {
            edges: [p; 6],
            faces: [p; 4],
            interior: p,
        }
    }

    pub fn entity_level(edge: u8, face: u8, interior: u8) -> Self {
        ElementOrders {
            edges: [edge; 6],
            faces: [face; 4],
            interior,
        }
    }

    pub fn validate(&self) -> Result<(), BasisError> {
        for &p in self.edges.iter().chain(self.faces.iter()).chain(std::iter::once(&self.interior)) {
            if !(1..=MAX_ORDER).contains(&p) {
                return Err(BasisError::OrderOutOfRange(p));
            }
        }
        Ok(())
    }

    pub fn max_order(&self) -> u8 {
        self.edges
            .iter()
            .chain(self.faces.iter())
            .copied()
            .fold(self.interior, u8::max)
    }
}

/// Per-entity and total dof counts of one element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofCount {
    pub edges: usize,
    pub faces: usize,
    pub interior: usize,
}

impl DofCount {
    pub fn total(&self) -> usize {
        self.edges + self.faces + self.interior
    }
}

pub(crate) fn edge_dofs(p: u8) -> usize {
    p as usize
}

pub(crate) fn face_dofs(p: u8) -> usize {
    let p = p as usize;
    p * p.saturating_sub(1)
}

pub(crate) fn interior_dofs(p: u8) -> usize {
    let p = p as usize;
    p * p.saturating_sub(1) * p.saturating_sub(2) / 2
}

pub fn dof_count(orders: &ElementOrders) -> DofCount {
    DofCount {
        edges: orders.edges.iter().map(|&p| edge_dofs(p)).sum(),
        faces: orders.faces.iter().map(|&p| face_dofs(p)).sum(),
        interior: interior_dofs(orders.interior),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntityKind {
    Edge,
    Face,
    Interior,
}

/// Owner of a shape function: entity kind, local entity index and mode
/// number within the entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeId {
    pub kind: EntityKind,
    pub local: u8,
    pub mode: u16,
    pub(crate) level: u8,
    pub(crate) i: u8,
    pub(crate) j: u8,
    pub(crate) k: u8,
    pub(crate) family: u8,
}

/// For each local face, its local vertices in ascending global order.
pub type FaceFrames = [[usize; 3]; 4];

/// Face frames when local and global vertex orders agree.
pub fn reference_face_frames() -> FaceFrames {
    LOCAL_FACES
}

/// Hierarchical enumeration of the element's shape functions.
pub fn mode_list(orders: &ElementOrders) -> Vec<ModeId> {
    let max_level = orders.max_order() as usize;
    let mut modes = Vec::with_capacity(dof_count(orders).total());
    let mut face_count = [0u16; 4];
    let mut interior_count = 0u16;
    for n in 0..max_level {
        for e in 0..6 {
            if n < orders.edges[e] as usize {
                modes.push(ModeId {
                    kind: EntityKind::Edge,
                    local: e as u8,
                    mode: n as u16,
                    level: n as u8,
                    i: n as u8,
                    j: 0,
                    k: 0,
                    family: 0,
                });
            }
        }
        if n >= 1 {
            for f in 0..4 {
                if n < orders.faces[f] as usize {
                    for i in 0..n {
                        for family in 0..2 {
                            modes.push(ModeId {
                                kind: EntityKind::Face,
                                local: f as u8,
                                mode: face_count[f],
                                level: n as u8,
                                i: i as u8,
                                j: (n - i) as u8,
                                k: 0,
                                family,
                            });
                            face_count[f] += 1;
                        }
                    }
                }
            }
        }
        if n >= 2 && n < orders.interior as usize {
            for i in 0..=n - 2 {
                for j in 1..=n - 1 - i {
                    let k = n - i - j;
                    for family in 0..3 {
                        modes.push(ModeId {
                            kind: EntityKind::Interior,
                            local: 0,
                            mode: interior_count,
                            level: n as u8,
                            i: i as u8,
                            j: j as u8,
                            k: k as u8,
                            family,
                        });
                        interior_count += 1;
                    }
                }
            }
        }
    }
    modes
}

/// Shape function values and curls at one point.
#[derive(Debug, Clone, Default)]
pub struct ShapeSet {
    pub values: Vec<Vec3>,
    pub curls: Vec<Vec3>,
    pub entity_of: Vec<ModeId>,
}

impl ShapeSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Evaluates all shape functions of an element at barycentric point
/// `lambda` on the reference tetrahedron.
pub fn shape_functions(orders: &ElementOrders, lambda: [f64; 4], frames: &FaceFrames) -> Result<ShapeSet, BasisError> {
    orders.validate()?;
    let sum: f64 = lambda.iter().sum();
    if lambda.iter().any(|&l| !(l >= -1e-12)) || (sum - 1.0).abs() > 1e-10 {
        return Err(BasisError::InvalidBarycentric(lambda));
    }
    let modes = mode_list(orders);
    let mut set = ShapeSet {
        values: Vec::with_capacity(modes.len()),
        curls: Vec::with_capacity(modes.len()),
        entity_of: Vec::new(),
    };
    shape_functions_into(&modes, lambda, frames, &mut set.values, &mut set.curls);
    set.entity_of = modes;
    Ok(set)
}

/// Scalar blending factor and its reference gradient.
#[derive(Clone, Copy)]
struct Factor {
    value: f64,
    grad: Vec3,
}

impl Factor {
    fn times(self, other: Factor) -> Factor {
        Factor {
            value: self.value * other.value,
            grad: self.grad * other.value + other.grad * self.value,
        }
    }
}

struct Point {
    lambda: [f64; 4],
    grad: [Vec3; 4],
}

impl Point {
    fn blend(&self, poly: &HomPoly, x: usize, t: &[usize]) -> Factor {
        let tv: f64 = t.iter().map(|&a| self.lambda[a]).sum();
        let tg: Vec3 = t.iter().map(|&a| self.grad[a]).sum();
        let (v, dx, dt) = poly.eval(self.lambda[x], tv);
        Factor {
            value: v,
            grad: self.grad[x] * dx + tg * dt,
        }
    }

    fn whitney(&self, a: usize, b: usize) -> (Vec3, Vec3) {
        let value = self.grad[b] * self.lambda[a] - self.grad[a] * self.lambda[b];
        let curl = self.grad[a].cross(&self.grad[b]) * 2.0;
        (value, curl)
    }

    /// `factor * W_ab` and its curl.
    fn blended_whitney(&self, factor: Factor, a: usize, b: usize) -> (Vec3, Vec3) {
        let (w, cw) = self.whitney(a, b);
        (w * factor.value, factor.grad.cross(&w) + cw * factor.value)
    }

    /// Face factor for mode `(i, j)` with vertices `(v0, v1, v2)`.
    fn face_factor(&self, v: [usize; 3], i: usize, j: usize) -> Factor {
        let edge = self.blend(scaled_legendre(i), v[1], &[v[0], v[1]]);
        let lift = self.blend(scaled_integrated_jacobi(j, 2 * i + 1), v[2], &v);
        edge.times(lift)
    }
}

fn family_vertices(frame: [usize; 3], family: u8) -> [usize; 3] {
    match family {
        0 => frame,
        _ => [frame[1], frame[2], frame[0]],
    }
}

/// Evaluates the listed modes at `lambda`, writing reference values and
/// curls into the output vectors (cleared first).
pub fn shape_functions_into(
    modes: &[ModeId],
    lambda: [f64; 4],
    frames: &FaceFrames,
    values: &mut Vec<Vec3>,
    curls: &mut Vec<Vec3>,
) {
    let grad = REFERENCE_GRADIENTS.map(|g| Vec3::new(g[0], g[1], g[2]));
    let pt = Point { lambda, grad };
    values.clear();
    curls.clear();
    for m in modes {
        let (v, c) = match m.kind {
            EntityKind::Edge => {
                let [a, b] = LOCAL_EDGES[m.local as usize];
                let f = pt.blend(scaled_legendre(m.i as usize), b, &[a, b]);
                pt.blended_whitney(f, a, b)
            }
            EntityKind::Face => {
                let v = family_vertices(frames[m.local as usize], m.family);
                let f = pt.face_factor(v, m.i as usize, m.j as usize);
                pt.blended_whitney(f, v[0], v[1])
            }
            EntityKind::Interior => {
                let (i, j, k) = (m.i as usize, m.j as usize, m.k as usize);
                let (v, top) = match m.family {
                    0 => ([0, 1, 2], 3),
                    1 => ([1, 2, 3], 0),
                    _ => ([2, 3, 0], 1),
                };
                let f = pt
                    .face_factor(v, i, j)
                    .times(pt.blend(scaled_integrated_jacobi(k, 2 * (i + j)), top, &[0, 1, 2, 3]));
                pt.blended_whitney(f, v[0], v[1])
            }
        };
        values.push(v);
        curls.push(c);
    }
}
