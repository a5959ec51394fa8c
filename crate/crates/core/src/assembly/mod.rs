//! Galerkin discretization of `curl curl E - i w mu0 sigma E = i w mu0 J`.
//!
//! The global matrix is `A = K - i w mu0 M` with `K_ij = int curl w_i . curl w_j`
//! and `M_ij = int w_i . sigma w_j`. Reference shape functions are mapped
//! covariantly: `w = J^{-T} w_ref`, `curl w = J curl_ref / det J`.

mod dirichlet;
mod element;
mod global;

pub use dirichlet::{apply_constraints, apply_homogeneous_dirichlet, project_dirichlet_trace};
pub use element::{element_matrices, ElementGeometry};
pub use global::{assemble, dipole_rhs, mms_rhs, physical_shapes, PhysicalShapes};

pub(crate) use element::TableCache;

use crate::basis::BasisError;
use crate::mesh::MeshError;
use crate::solver::CsrMatrix;
use crate::{Complex64, Vec3};
use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Conductivity assigned to air regions (S/m).
pub const AIR_CONDUCTIVITY: f64 = 1.0e-8;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("singular element Jacobian in element {tet}")]
    SingularElement { tet: usize },
    #[error("no conductivity for region {0}")]
    UnknownRegion(i32),
    #[error("conductivity must be positive, got ({sigma_h}, {sigma_v})")]
    InvalidConductivity { sigma_h: f64, sigma_v: f64 },
    #[error("invalid source: {0}")]
    InvalidSource(String),
    #[error("singular trace projection on {entity} {id}")]
    SingularProjection { entity: &'static str, id: usize },
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Vertically transverse isotropic conductivity `diag(sigma_h, sigma_h, sigma_v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conductivity {
    pub sigma_h: f64,
    pub sigma_v: f64,
}

impl Conductivity {
    pub fn isotropic(sigma: f64) -> Self {
        Conductivity {
            sigma_h: sigma,
            sigma_v: sigma,
        }
    }

    pub fn from_resistivity(rho_h: f64, rho_v: f64) -> Self {
        Conductivity {
            sigma_h: 1.0 / rho_h,
            sigma_v: 1.0 / rho_v,
        }
    }

    pub fn tensor(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vec3::new(self.sigma_h, self.sigma_h, self.sigma_v))
    }

    fn validate(self) -> Result<Self, AssemblyError> {
        if self.sigma_h > 0.0 && self.sigma_v > 0.0 && self.sigma_h.is_finite() && self.sigma_v.is_finite() {
            Ok(self)
        } else {
            Err(AssemblyError::InvalidConductivity {
                sigma_h: self.sigma_h,
                sigma_v: self.sigma_v,
            })
        }
    }
}

/// Conductivity per mesh region tag, with an optional default for tags not
/// listed explicitly.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MaterialModel {
    regions: BTreeMap<i32, Conductivity>,
    default: Option<Conductivity>,
}

impl MaterialModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every region gets conductivity `sigma`.
    pub fn homogeneous(sigma: f64) -> Result<Self, AssemblyError> {
        Ok(MaterialModel {
            regions: BTreeMap::new(),
            default: Some(Conductivity::isotropic(sigma).validate()?),
        })
    }

    pub fn insert(&mut self, region: i32, conductivity: Conductivity) -> Result<(), AssemblyError> {
        self.regions.insert(region, conductivity.validate()?);
        Ok(())
    }

    pub fn insert_resistivity(&mut self, region: i32, rho_h: f64, rho_v: f64) -> Result<(), AssemblyError> {
        self.insert(region, Conductivity::from_resistivity(rho_h, rho_v))
    }

    pub fn insert_air(&mut self, region: i32) {
        self.regions.insert(region, Conductivity::isotropic(AIR_CONDUCTIVITY));
    }

    pub fn conductivity(&self, region: i32) -> Result<Conductivity, AssemblyError> {
        self.regions
            .get(&region)
            .copied()
            .or(self.default)
            .ok_or(AssemblyError::UnknownRegion(region))
    }

    pub fn regions(&self) -> impl Iterator<Item = (i32, Conductivity)> + '_ {
        self.regions.iter().map(|(&r, &c)| (r, c))
    }

    /// Smallest resistivity among regions below `air_threshold` (ohm m).
    pub fn min_resistivity(&self, air_threshold: f64) -> Option<f64> {
        self.regions
            .values()
            .chain(self.default.iter())
            .map(|c| (1.0 / c.sigma_h).min(1.0 / c.sigma_v))
            .filter(|&rho| rho < air_threshold)
            .min_by(f64::total_cmp)
    }
}

/// Point electric dipole source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    pub position: Vec3,
    pub direction: Vec3,
    /// Dipole moment (A m).
    pub moment: f64,
    /// Physical source length (m), used only by the meshing rules.
    pub length: f64,
    /// Frequency (Hz).
    pub frequency: f64,
}

impl SourceSpec {
    pub fn validate(&self) -> Result<(), AssemblyError> {
        if ((self.direction.norm() - 1.0).abs()) > 1e-12 {
            return Err(AssemblyError::InvalidSource(format!(
                "direction must be a unit vector, |d| = {}",
                self.direction.norm()
            )));
        }
        if !(self.frequency > 0.0) {
            return Err(AssemblyError::InvalidSource(format!(
                "frequency must be positive, got {}",
                self.frequency
            )));
        }
        if !self.moment.is_finite() {
            return Err(AssemblyError::InvalidSource("moment must be finite".into()));
        }
        Ok(())
    }

    pub fn omega(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.frequency
    }
}

/// Sparse matrix, right-hand side and the prescribed values of constrained dofs.
#[derive(Debug, Clone)]
pub struct ComplexSparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<Complex64>,
    pub constrained: Vec<(usize, Complex64)>,
}

impl ComplexSparseSystem {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}
