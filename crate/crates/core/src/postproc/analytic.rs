//! Closed-form reference fields: manufactured plane wave and full-space
//! electric dipole. Time dependence `exp(-i w t)`.

use super::PostprocError;
use crate::{to_complex, CVec3, Complex64, Vec3, MU0};
use std::f64::consts::PI;

/// Manufactured plane wave `E = E_pol exp(-i k0 k_p . r)` and its forcing
/// `F = curl curl E - i w mu0 sigma E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmsSpec {
    pub e_pol: CVec3,
    pub k_dir: Vec3,
    pub k0: f64,
    pub sigma: f64,
    pub omega: f64,
}

impl Default for MmsSpec {
    fn default() -> Self {
        MmsSpec {
            e_pol: CVec3::new(1.0.into(), 1.0.into(), 0.0.into()),
            k_dir: Vec3::z(),
            k0: 2.0 * PI,
            sigma: 1.0,
            omega: 2.0 * PI,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmsFields {
    pub e: CVec3,
    pub curl: CVec3,
    pub forcing: CVec3,
}

impl MmsSpec {
    pub fn validate(&self) -> Result<(), PostprocError> {
        if (self.k_dir.norm() - 1.0).abs() > 1e-12 {
            return Err(PostprocError::InvalidSpec(format!(
                "propagation direction must be a unit vector, |k_p| = {}",
                self.k_dir.norm()
            )));
        }
        Ok(())
    }

    pub fn field(&self, r: &Vec3) -> CVec3 {
        mms_fields(self, r).e
    }

    pub fn forcing(&self, r: &Vec3) -> CVec3 {
        mms_fields(self, r).forcing
    }
}

pub fn mms_fields(spec: &MmsSpec, r: &Vec3) -> MmsFields {
    let i = Complex64::new(0.0, 1.0);
    let phase = (-i * spec.k0 * spec.k_dir.dot(r)).exp();
    let k = to_complex(&spec.k_dir);
    let e = spec.e_pol * phase;
    let curl = k.cross(&spec.e_pol) * (-i * spec.k0 * phase);
    let curl_curl = (spec.e_pol - k * k.dot(&spec.e_pol)) * (spec.k0 * spec.k0 * phase);
    let forcing = curl_curl - e * (i * spec.omega * MU0 * spec.sigma);
    MmsFields { e, curl, forcing }
}

/// Electric field of a point dipole in a homogeneous whole space:
///
/// `E = m e^{ikr} / (4 pi sigma r^3) [ r^ (r^.d)(3 - 3ikr - k^2 r^2) + d (k^2 r^2 + ikr - 1) ]`
///
/// with `k = sqrt(i w mu0 sigma) = (1 + i) / delta`.
pub fn fullspace_dipole_oracle(
    sigma: f64,
    frequency: f64,
    moment: f64,
    direction: &Vec3,
    offset: &Vec3,
) -> Result<CVec3, PostprocError> {
    let r = offset.norm();
    if r == 0.0 {
        return Err(PostprocError::ZeroOffset);
    }
    let omega = 2.0 * PI * frequency;
    let delta = (2.0 / (omega * MU0 * sigma)).sqrt();
    let i = Complex64::new(0.0, 1.0);
    let k = Complex64::new(1.0, 1.0) / delta;
    let ikr = i * k * r;
    let k2r2 = k * k * r * r;
    let rhat = offset / r;
    let pre = ikr.exp() * moment / (4.0 * PI * sigma * r.powi(3));
    let radial = to_complex(&rhat) * (rhat.dot(direction) * (3.0 - 3.0 * ikr - k2r2));
    let along = to_complex(direction) * (k2r2 + ikr - 1.0);
    Ok((radial + along) * pre)
}
