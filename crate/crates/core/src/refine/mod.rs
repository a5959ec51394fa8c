//! Per-entity polynomial orders, global dof numbering and the skin-depth
//! meshing rules.

mod rules;

pub use rules::{
    characteristic_spacing, h_rule_params, skin_depth, source_spacing, HRuleParams, Threshold, AIR_RESISTIVITY,
    TABLE_LAMBDA_DELTA, TABLE_SOURCE_RESOLUTION,
};

use crate::basis::shape::{face_dofs, interior_dofs};
use crate::basis::{mode_list, ElementOrders, EntityKind};
use crate::mesh::Mesh;
use crate::MAX_ORDER;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RefineError {
    #[error("polynomial order {0} outside [1, 6]")]
    OrderOutOfRange(u8),
    #[error("per-element plan has {found} orders for {expected} elements")]
    PlanLength { expected: usize, found: usize },
    #[error("unknown error threshold {0}% (expected 5, 3 or 1)")]
    UnknownThreshold(f64),
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("material model has no conductive (non-air) region")]
    NoConductiveRegion,
}

/// How polynomial orders are distributed over the mesh.
#[derive(Debug, Clone, PartialEq)]
pub enum PlanMode {
    Uniform(u8),
    /// Global orders for all edges, all faces and all interiors.
    EntityLevel { edge: u8, face: u8, interior: u8 },
    /// Requested order per element.
    PerElement(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementPlan {
    pub mode: PlanMode,
    pub threshold: Threshold,
}

/// Polynomial order of every edge, face and element interior.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityOrders {
    pub edge: Vec<u8>,
    pub face: Vec<u8>,
    pub interior: Vec<u8>,
}

impl EntityOrders {
    /// Orders of the local entities of `tet`.
    pub fn element(&self, mesh: &Mesh, tet: usize) -> ElementOrders {
        ElementOrders {
            edges: mesh.tet_edges(tet).map(|e| self.edge[e]),
            faces: mesh.tet_faces(tet).map(|f| self.face[f]),
            interior: self.interior[tet],
        }
    }
}

fn check_order(p: u8) -> Result<u8, RefineError> {
    if (1..=MAX_ORDER).contains(&p) {
        Ok(p)
    } else {
        Err(RefineError::OrderOutOfRange(p))
    }
}

/// Assigns entity orders. Per-element plans give shared edges and faces the
/// maximum order requested by the adjacent elements.
pub fn assign_orders(mesh: &Mesh, plan: &PlanMode) -> Result<EntityOrders, RefineError> {
    let (ne, nf, nt) = (mesh.num_edges(), mesh.num_faces(), mesh.num_tets());
    match plan {
        PlanMode::Uniform(p) => {
            let p = check_order(*p)?;
            Ok(EntityOrders {
                edge: vec![p; ne],
                face: vec![p; nf],
                interior: vec![p; nt],
            })
        }
        PlanMode::EntityLevel { edge, face, interior } => Ok(EntityOrders {
            edge: vec![check_order(*edge)?; ne],
            face: vec![check_order(*face)?; nf],
            interior: vec![check_order(*interior)?; nt],
        }),
        PlanMode::PerElement(requested) => {
            if requested.len() != nt {
                return Err(RefineError::PlanLength {
                    expected: nt,
                    found: requested.len(),
                });
            }
            let mut orders = EntityOrders {
                edge: vec![1; ne],
                face: vec![1; nf],
                interior: vec![1; nt],
            };
            for (t, &p) in requested.iter().enumerate() {
                let p = check_order(p)?;
                for &e in mesh.tet_edges(t) {
                    orders.edge[e] = orders.edge[e].max(p);
                }
                for &f in mesh.tet_faces(t) {
                    orders.face[f] = orders.face[f].max(p);
                }
                orders.interior[t] = p;
            }
            Ok(orders)
        }
    }
}

/// Global dof numbering: all edge dofs, then face dofs, then interior dofs,
/// each by ascending entity id and mode.
#[derive(Debug, Clone)]
pub struct DofMap {
    edge_offset: Vec<usize>,
    face_offset: Vec<usize>,
    interior_offset: Vec<usize>,
    total: usize,
    element_orders: Vec<ElementOrders>,
    gather_start: Vec<usize>,
    gather_dofs: Vec<usize>,
    gather_signs: Vec<f64>,
}

fn offsets(counts: impl Iterator<Item = usize>, start: usize) -> Vec<usize> {
    let mut out = vec![start];
    let mut acc = start;
    for c in counts {
        acc += c;
        out.push(acc);
    }
    out
}

pub fn build_dofmap(mesh: &Mesh, orders: &EntityOrders) -> DofMap {
    let edge_offset = offsets(orders.edge.iter().map(|&p| p as usize), 0);
    let face_offset = offsets(
        orders.face.iter().map(|&p| face_dofs(p)),
        *edge_offset.last().unwrap(),
    );
    let interior_offset = offsets(
        orders.interior.iter().map(|&p| interior_dofs(p)),
        *face_offset.last().unwrap(),
    );
    let total = *interior_offset.last().unwrap();

    let mut element_orders = Vec::with_capacity(mesh.num_tets());
    let mut gather_start = vec![0];
    let mut gather_dofs = Vec::new();
    let mut gather_signs = Vec::new();
    for t in 0..mesh.num_tets() {
        let eo = orders.element(mesh, t);
        let edges = mesh.tet_edges(t);
        let signs = mesh.tet_edge_signs(t);
        let faces = mesh.tet_faces(t);
        for m in mode_list(&eo) {
            let l = m.local as usize;
            let (dof, sign) = match m.kind {
                EntityKind::Edge => {
                    // Mode i changes sign as (-1)^(i+1) under edge reversal.
                    let s = if signs[l] > 0 || m.mode % 2 == 1 { 1.0 } else { -1.0 };
                    (edge_offset[edges[l]] + m.mode as usize, s)
                }
                EntityKind::Face => (face_offset[faces[l]] + m.mode as usize, 1.0),
                EntityKind::Interior => (interior_offset[t] + m.mode as usize, 1.0),
            };
            gather_dofs.push(dof);
            gather_signs.push(sign);
        }
        gather_start.push(gather_dofs.len());
        element_orders.push(eo);
    }
    DofMap {
        edge_offset,
        face_offset,
        interior_offset,
        total,
        element_orders,
        gather_start,
        gather_dofs,
        gather_signs,
    }
}

impl DofMap {
    pub fn total_dof(&self) -> usize {
        self.total
    }

    pub fn num_elements(&self) -> usize {
        self.element_orders.len()
    }

    pub fn element_orders(&self, tet: usize) -> &ElementOrders {
        &self.element_orders[tet]
    }

    /// Global dofs of `tet` in local shape-function order.
    pub fn element_dofs(&self, tet: usize) -> &[usize] {
        &self.gather_dofs[self.gather_start[tet]..self.gather_start[tet + 1]]
    }

    /// Orientation signs matching [`DofMap::element_dofs`].
    pub fn element_signs(&self, tet: usize) -> &[f64] {
        &self.gather_signs[self.gather_start[tet]..self.gather_start[tet + 1]]
    }

    pub fn edge_dofs(&self, edge: usize) -> std::ops::Range<usize> {
        self.edge_offset[edge]..self.edge_offset[edge + 1]
    }

    pub fn face_dofs(&self, face: usize) -> std::ops::Range<usize> {
        self.face_offset[face]..self.face_offset[face + 1]
    }

    pub fn interior_dofs(&self, tet: usize) -> std::ops::Range<usize> {
        self.interior_offset[tet]..self.interior_offset[tet + 1]
    }

    /// Number of edge, face and interior dofs.
    pub fn block_sizes(&self) -> (usize, usize, usize) {
        let e = *self.edge_offset.last().unwrap();
        let f = *self.face_offset.last().unwrap() - e;
        (e, f, self.total - e - f)
    }

    /// Sorted dofs of all boundary edges and faces.
    pub fn boundary_dofs(&self, mesh: &Mesh) -> Vec<usize> {
        let mut out: Vec<usize> = mesh
            .boundary_edges()
            .iter()
            .flat_map(|&e| self.edge_dofs(e))
            .chain(mesh.boundary_faces().iter().flat_map(|&f| self.face_dofs(f)))
            .collect();
        out.sort_unstable();
        out
    }
}
