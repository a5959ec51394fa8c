//! Hierarchical curl-conforming shape functions on the reference tetrahedron.
//!
//! Every function is a scalar blending factor times a lowest-order Whitney
//! field `l_a grad(l_b) - l_b grad(l_a)`:
//!
//! * edge `(a, b)`, mode `i`: `P_i(l_b; l_a + l_b) W_ab` with scaled Legendre
//!   `P_i`, evaluated in the local edge direction;
//! * face `(s0, s1, s2)`, mode `(i, j)`: the edge factor on `(s0, s1)` times
//!   the integrated Jacobi blend `L_j^(2i+1)(s2; s0 + s1 + s2)`, in two
//!   families obtained by rotating the face vertices. Face vertices are taken
//!   in ascending global order so neighbouring elements agree;
//! * interior, mode `(i, j, k)`: a face function of the cyclically shifted
//!   faces `(0, 1, 2)`, `(1, 2, 3)` and `(2, 3, 0)` times `L_k^(2(i+j))` of
//!   the remaining barycentric coordinate.
//!
//! A function of level `n` (polynomial degree `n + 1`) belongs to an entity
//! of order `p` when `n <= p - 1`. Functions are listed level by level, so
//! the set for order `p - 1` is a prefix of the set for order `p`.

mod poly;
pub(crate) mod shape;

pub use poly::{jacobi_eval, legendre_eval};
pub use shape::{
    dof_count, mode_list, reference_face_frames, shape_functions, shape_functions_into, DofCount,
    ElementOrders, EntityKind, FaceFrames, ModeId, ShapeSet, REFERENCE_GRADIENTS,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BasisError {
    #[error("polynomial order {0} outside the supported range [1, 6]")]
    OrderOutOfRange(u8),
    #[error("invalid barycentric coordinates {0:?}")]
    InvalidBarycentric([f64; 4]),
}
