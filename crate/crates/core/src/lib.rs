//! Hierarchical high-order curl-conforming finite elements for 3D
//! frequency-domain (diffusive) electromagnetic forward modelling.
//!
//! The crate is organised along the solver pipeline:
//!
//! * [`mesh`] builds tetrahedral meshes, derives edge/face entities and
//!   locates points.
//! * [`basis`] evaluates the hierarchical H(curl) shape functions.
//! * [`quadrature`] provides simplex integration rules.
//! * [`refine`] assigns per-entity polynomial orders, numbers the degrees of
//!   freedom and implements the skin-depth meshing rules.
//! * [`assembly`] discretizes `curl curl E - i w mu0 sigma E = i w mu0 J`.
//! * [`solver`] solves the resulting complex-symmetric sparse systems.
//! * [`postproc`] evaluates fields, computes errors and analytic references.

pub mod assembly;
pub mod basis;
pub mod mesh;
pub mod postproc;
pub mod quadrature;
pub mod refine;
pub mod solver;

pub use num_complex::Complex64;

/// Real 3-vector used for coordinates and basis values.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Complex 3-vector used for field values.
pub type CVec3 = nalgebra::Vector3<Complex64>;

/// Free-space magnetic permeability (H/m).
pub const MU0: f64 = 4.0e-7 * std::f64::consts::PI;

/// Highest supported polynomial order on any entity.
pub const MAX_ORDER: u8 = 6;

/// Complex-valued vector field `r -> E(r)`.
pub trait VectorField: Sync {
    fn eval(&self, point: &Vec3) -> CVec3;
}

impl<F> VectorField for F
where
    F: Fn(&Vec3) -> CVec3 + Sync,
{
    fn eval(&self, point: &Vec3) -> CVec3 {
        self(point)
    }
}

pub(crate) fn to_complex(v: &Vec3) -> CVec3 {
    CVec3::new(v.x.into(), v.y.into(), v.z.into())
}
