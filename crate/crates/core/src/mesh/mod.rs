//! Unstructured tetrahedral meshes and their derived entities.
//!
//! A [`RawMesh`] is the plain node/tetrahedron soup produced by the
//! structured generators or the MSH reader. [`build_connectivity`] turns it
//! into an immutable [`Mesh`] that carries globally numbered edges and faces,
//! per-element orientation data, boundary sets and a point locator.
//!
//! Global conventions: an edge is the pair `(a, b)` with `a < b`; a face is
//! its ascending node triple. Entity ids follow the lexicographic order of
//! these tuples, so numbering is deterministic.

mod locate;
mod msh;
mod structured;

pub use locate::PointLocator;
pub use msh::{read_msh, read_msh_file, MshImport};
pub use structured::{graded_axis, structured_box_mesh, tensor_box_mesh, BoxBounds};

use crate::Vec3;
use std::collections::HashMap;
use thiserror::Error;

/// Local edges of a tetrahedron as pairs of local vertex indices.
pub const LOCAL_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// Local faces of a tetrahedron; face `f` is opposite local vertex `f`.
pub const LOCAL_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

/// Permutations used to encode how a local face maps onto its global frame.
pub const FACE_PERMUTATIONS: [[usize; 3]; 6] =
    [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Relative tolerance on barycentric coordinates for point containment.
pub const LOCATE_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("element {tet} references node {node}, but the mesh has {count} nodes")]
    DanglingNode { tet: usize, node: usize, count: usize },
    #[error("element {tet} has non-positive volume {volume:e} after reordering")]
    InvertedElement { tet: usize, volume: f64 },
    #[error("face {face:?} is shared by {count} elements")]
    NonManifoldFace { face: [usize; 3], count: usize },
    #[error("region tags: expected {expected}, found {found}")]
    RegionTagCount { expected: usize, found: usize },
    #[error("degenerate box: every axis needs a positive extent")]
    DegenerateBox,
    #[error("divisions must be at least 1 on every axis, got {0:?}")]
    InvalidDivisions([usize; 3]),
    #[error("axis coordinates must be strictly increasing with at least two values")]
    InvalidAxis,
    #[error("msh line {line}: {message}")]
    Msh { line: usize, message: String },
    #[error("binary msh files are not supported")]
    UnsupportedBinary,
    #[error("msh file contains no tetrahedra")]
    NoTetrahedra,
    #[error("point ({}, {}, {}) lies outside the mesh", .0.x, .0.y, .0.z)]
    OutsideMesh(Vec3),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MeshError>;

/// Node/tetrahedron soup as produced by generators and readers.
#[derive(Debug, Clone, Default)]
pub struct RawMesh {
    /// Node coordinates in metres.
    pub nodes: Vec<Vec3>,
    /// Four node indices per tetrahedron.
    pub tets: Vec<[usize; 4]>,
    /// Material region per tetrahedron.
    pub region_tag: Vec<i32>,
    /// Optional boundary face markers (ascending node triple, marker).
    pub boundary_markers: Vec<([usize; 3], i32)>,
}

impl RawMesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_tets(&self) -> usize {
        self.tets.len()
    }
}

/// Signed volume of the tetrahedron `(a, b, c, d)`.
pub fn signed_volume(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    (b - a).cross(&(c - a)).dot(&(d - a)) / 6.0
}

/// Immutable tetrahedral mesh with derived entities.
#[derive(Debug, Clone)]
pub struct Mesh {
    nodes: Vec<Vec3>,
    tets: Vec<[usize; 4]>,
    region_tag: Vec<i32>,
    edges: Vec<[usize; 2]>,
    faces: Vec<[usize; 3]>,
    tet_edges: Vec<[usize; 6]>,
    tet_edge_signs: Vec<[i8; 6]>,
    tet_faces: Vec<[usize; 4]>,
    tet_face_perms: Vec<[u8; 4]>,
    face_tets: Vec<[Option<usize>; 2]>,
    edge_tet: Vec<usize>,
    boundary_faces: Vec<usize>,
    boundary_edges: Vec<usize>,
    boundary_nodes: Vec<usize>,
    is_boundary_face: Vec<bool>,
    is_boundary_edge: Vec<bool>,
    face_markers: HashMap<usize, i32>,
    repaired: Vec<usize>,
    locator: PointLocator,
}

/// Builds the derived entity structure of a raw mesh.
///
/// Elements with negative orientation are repaired by swapping their last
/// two nodes; the repaired ids are available through [`Mesh::repaired`].
pub fn build_connectivity(raw: RawMesh) -> Result<Mesh> {
    let RawMesh {
        nodes,
        mut tets,
        region_tag,
        boundary_markers,
    } = raw;
    if region_tag.len() != tets.len() {
        return Err(MeshError::RegionTagCount {
            expected: tets.len(),
            found: region_tag.len(),
        });
    }

    let mut repaired = Vec::new();
    for (t, tet) in tets.iter_mut().enumerate() {
        for &n in tet.iter() {
            if n >= nodes.len() {
                return Err(MeshError::DanglingNode {
                    tet: t,
                    node: n,
                    count: nodes.len(),
                });
            }
        }
        let mut vol = signed_volume(&nodes[tet[0]], &nodes[tet[1]], &nodes[tet[2]], &nodes[tet[3]]);
        if vol < 0.0 {
            tet.swap(2, 3);
            vol = -vol;
            repaired.push(t);
        }
        // Relative to the bounding size of the element.
        let scale = (1..4)
            .map(|k| (nodes[tet[k]] - nodes[tet[0]]).norm())
            .fold(0.0, f64::max);
        if !(vol > 1e-14 * scale.powi(3)) {
            return Err(MeshError::InvertedElement { tet: t, volume: vol });
        }
    }

    let mut edges: Vec<[usize; 2]> = Vec::with_capacity(tets.len() * 2);
    let mut faces: Vec<[usize; 3]> = Vec::with_capacity(tets.len() * 3);
    for tet in &tets {
        for [a, b] in LOCAL_EDGES {
            edges.push(sorted2(tet[a], tet[b]));
        }
        for [a, b, c] in LOCAL_FACES {
            faces.push(sorted3(tet[a], tet[b], tet[c]));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    faces.sort_unstable();
    faces.dedup();

    let mut tet_edges = Vec::with_capacity(tets.len());
    let mut tet_edge_signs = Vec::with_capacity(tets.len());
    let mut tet_faces = Vec::with_capacity(tets.len());
    let mut tet_face_perms = Vec::with_capacity(tets.len());
    let mut face_tets: Vec<[Option<usize>; 2]> = vec![[None, None]; faces.len()];
    let mut face_count = vec![0usize; faces.len()];
    let mut edge_tet = vec![usize::MAX; edges.len()];

    for (t, tet) in tets.iter().enumerate() {
        let mut ids = [0usize; 6];
        let mut signs = [0i8; 6];
        for (k, [a, b]) in LOCAL_EDGES.iter().enumerate() {
            let key = sorted2(tet[*a], tet[*b]);
            let id = edges.binary_search(&key).expect("edge present");
            ids[k] = id;
            signs[k] = if tet[*a] < tet[*b] { 1 } else { -1 };
            if edge_tet[id] == usize::MAX {
                edge_tet[id] = t;
            }
        }
        tet_edges.push(ids);
        tet_edge_signs.push(signs);

        let mut fids = [0usize; 4];
        let mut perms = [0u8; 4];
        for (f, local) in LOCAL_FACES.iter().enumerate() {
            let key = sorted3(tet[local[0]], tet[local[1]], tet[local[2]]);
            let id = faces.binary_search(&key).expect("face present");
            fids[f] = id;
            perms[f] = face_permutation(tet, local);
            let slot = face_count[id];
            if slot < 2 {
                face_tets[id][slot] = Some(t);
            }
            face_count[id] += 1;
        }
        tet_faces.push(fids);
        tet_face_perms.push(perms);
    }

    if let Some((id, &count)) = face_count.iter().enumerate().find(|(_, &c)| c > 2) {
        return Err(MeshError::NonManifoldFace {
            face: faces[id],
            count,
        });
    }

    let is_boundary_face: Vec<bool> = face_count.iter().map(|&c| c == 1).collect();
    let boundary_faces: Vec<usize> = (0..faces.len()).filter(|&f| is_boundary_face[f]).collect();
    let mut is_boundary_edge = vec![false; edges.len()];
    let mut is_boundary_node = vec![false; nodes.len()];
    for &f in &boundary_faces {
        let [a, b, c] = faces[f];
        for pair in [[a, b], [a, c], [b, c]] {
            let id = edges.binary_search(&pair).expect("face edge present");
            is_boundary_edge[id] = true;
        }
        for n in [a, b, c] {
            is_boundary_node[n] = true;
        }
    }
    let boundary_edges = (0..edges.len()).filter(|&e| is_boundary_edge[e]).collect();
    let boundary_nodes = (0..nodes.len()).filter(|&n| is_boundary_node[n]).collect();

    let mut face_markers = HashMap::new();
    for (key, marker) in boundary_markers {
        let key = sorted3(key[0], key[1], key[2]);
        if let Ok(id) = faces.binary_search(&key) {
            face_markers.insert(id, marker);
        }
    }

    let locator = PointLocator::new(&nodes, &tets);

    Ok(Mesh {
        nodes,
        tets,
        region_tag,
        edges,
        faces,
        tet_edges,
        tet_edge_signs,
        tet_faces,
        tet_face_perms,
        face_tets,
        edge_tet,
        boundary_faces,
        boundary_edges,
        boundary_nodes,
        is_boundary_face,
        is_boundary_edge,
        face_markers,
        repaired,
        locator,
    })
}

fn sorted2(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

fn sorted3(a: usize, b: usize, c: usize) -> [usize; 3] {
    let mut v = [a, b, c];
    v.sort_unstable();
    v
}

fn face_permutation(tet: &[usize; 4], local: &[usize; 3]) -> u8 {
    let g = [tet[local[0]], tet[local[1]], tet[local[2]]];
    FACE_PERMUTATIONS
        .iter()
        .position(|p| g[p[0]] < g[p[1]] && g[p[1]] < g[p[2]])
        .expect("distinct nodes") as u8
}

impl Mesh {
    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn region_tags(&self) -> &[i32] {
        &self.region_tag
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    /// Global edge ids of the six local edges of `tet`.
    pub fn tet_edges(&self, tet: usize) -> &[usize; 6] {
        &self.tet_edges[tet]
    }

    /// `+1` where the local edge direction agrees with the global one.
    pub fn tet_edge_signs(&self, tet: usize) -> &[i8; 6] {
        &self.tet_edge_signs[tet]
    }

    pub fn tet_faces(&self, tet: usize) -> &[usize; 4] {
        &self.tet_faces[tet]
    }

    /// Permutation codes into [`FACE_PERMUTATIONS`] for the four local faces.
    pub fn tet_face_perms(&self, tet: usize) -> &[u8; 4] {
        &self.tet_face_perms[tet]
    }

    /// Local vertex indices of local face `f`, ordered by ascending global node.
    pub fn face_frame(&self, tet: usize, f: usize) -> [usize; 3] {
        let p = FACE_PERMUTATIONS[self.tet_face_perms[tet][f] as usize];
        let local = LOCAL_FACES[f];
        [local[p[0]], local[p[1]], local[p[2]]]
    }

    /// Face frames of all four local faces of `tet`.
    pub fn face_frames(&self, tet: usize) -> [[usize; 3]; 4] {
        [0, 1, 2, 3].map(|f| self.face_frame(tet, f))
    }

    /// Elements adjacent to a face; the second slot is empty on the boundary.
    pub fn face_tets(&self, face: usize) -> [Option<usize>; 2] {
        self.face_tets[face]
    }

    /// Lowest-numbered element containing the edge.
    pub fn edge_tet(&self, edge: usize) -> usize {
        self.edge_tet[edge]
    }

    pub fn boundary_faces(&self) -> &[usize] {
        &self.boundary_faces
    }

    pub fn boundary_edges(&self) -> &[usize] {
        &self.boundary_edges
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn is_boundary_face(&self, face: usize) -> bool {
        self.is_boundary_face[face]
    }

    pub fn is_boundary_edge(&self, edge: usize) -> bool {
        self.is_boundary_edge[edge]
    }

    /// Boundary marker imported for a face, if any.
    pub fn face_marker(&self, face: usize) -> Option<i32> {
        self.face_markers.get(&face).copied()
    }

    /// Elements whose node order was swapped to fix their orientation.
    pub fn repaired(&self) -> &[usize] {
        &self.repaired
    }

    pub fn vertices(&self, tet: usize) -> [Vec3; 4] {
        let t = &self.tets[tet];
        [
            self.nodes[t[0]],
            self.nodes[t[1]],
            self.nodes[t[2]],
            self.nodes[t[3]],
        ]
    }

    pub fn volume(&self, tet: usize) -> f64 {
        let [a, b, c, d] = self.vertices(tet);
        signed_volume(&a, &b, &c, &d)
    }

    pub fn centroid(&self, tet: usize) -> Vec3 {
        let [a, b, c, d] = self.vertices(tet);
        (a + b + c + d) / 4.0
    }

    /// Barycentric coordinates of `point` with respect to element `tet`.
    pub fn barycentric(&self, tet: usize, point: &Vec3) -> [f64; 4] {
        locate::barycentric(&self.vertices(tet), point)
    }

    /// Axis-aligned bounding box of all nodes.
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        self.locator.bounds()
    }

    /// Finds the lowest-numbered element containing `point`.
    pub fn locate_point(&self, point: &Vec3) -> Result<(usize, [f64; 4])> {
        self.locator
            .locate(&self.nodes, &self.tets, point)
            .ok_or(MeshError::OutsideMesh(*point))
    }
}
