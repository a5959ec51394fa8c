//! Skin-depth based h-rules: characteristic spacing `d = delta_min / lambda`
//! and source refinement `d_s = min(L_s / r_s, d)`.

use super::RefineError;
use crate::assembly::MaterialModel;
use crate::MU0;
use serde::{Deserialize, Serialize};

/// Regions at or above this resistivity (ohm m) are treated as air.
pub const AIR_RESISTIVITY: f64 = 1.0e6;

/// Points per skin depth, indexed `[p - 1][threshold]` with thresholds
/// ordered 5%, 3%, 1%.
pub const TABLE_LAMBDA_DELTA: [[f64; 3]; 6] = [
    [9.22, 13.93, 16.81],
    [7.12, 9.39, 10.55],
    [6.33, 8.14, 9.35],
    [5.02, 5.95, 8.12],
    [4.98, 5.82, 6.95],
    [3.86, 4.69, 5.78],
];

/// Source resolution numbers, same layout as [`TABLE_LAMBDA_DELTA`].
pub const TABLE_SOURCE_RESOLUTION: [[f64; 3]; 6] = [
    [14.0, 13.0, 15.0],
    [10.0, 11.0, 12.0],
    [9.0, 10.0, 11.0],
    [8.0, 9.0, 10.0],
    [7.0, 8.0, 9.0],
    [6.0, 7.0, 8.0],
];

/// Target relative error class of the meshing rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Threshold {
    FivePercent,
    ThreePercent,
    OnePercent,
}

impl Threshold {
    pub const ALL: [Threshold; 3] = [Threshold::FivePercent, Threshold::ThreePercent, Threshold::OnePercent];

    pub fn from_percent(percent: f64) -> Result<Self, RefineError> {
        match percent {
            x if x == 5.0 => Ok(Threshold::FivePercent),
            x if x == 3.0 => Ok(Threshold::ThreePercent),
            x if x == 1.0 => Ok(Threshold::OnePercent),
            other => Err(RefineError::UnknownThreshold(other)),
        }
    }

    pub fn percent(self) -> f64 {
        match self {
            Threshold::FivePercent => 5.0,
            Threshold::ThreePercent => 3.0,
            Threshold::OnePercent => 1.0,
        }
    }

    fn column(self) -> usize {
        match self {
            Threshold::FivePercent => 0,
            Threshold::ThreePercent => 1,
            Threshold::OnePercent => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HRuleParams {
    pub lambda_delta: f64,
    pub r_s: f64,
}

pub fn h_rule_params(p: u8, threshold: Threshold) -> Result<HRuleParams, RefineError> {
    if !(1..=6).contains(&p) {
        return Err(RefineError::OrderOutOfRange(p));
    }
    let row = p as usize - 1;
    Ok(HRuleParams {
        lambda_delta: TABLE_LAMBDA_DELTA[row][threshold.column()],
        r_s: TABLE_SOURCE_RESOLUTION[row][threshold.column()],
    })
}

/// Skin depth `sqrt(2 rho / (omega mu0))` in meters.
pub fn skin_depth(resistivity: f64, frequency: f64) -> Result<f64, RefineError> {
    if !(resistivity > 0.0) {
        return Err(RefineError::NonPositive {
            name: "resistivity",
            value: resistivity,
        });
    }
    if !(frequency > 0.0) {
        return Err(RefineError::NonPositive {
            name: "frequency",
            value: frequency,
        });
    }
    let omega = 2.0 * std::f64::consts::PI * frequency;
    Ok((2.0 * resistivity / (omega * MU0)).sqrt())
}

/// Characteristic spacing from the smallest skin depth among non-air regions.
pub fn characteristic_spacing(
    model: &MaterialModel,
    frequency: f64,
    p: u8,
    threshold: Threshold,
) -> Result<f64, RefineError> {
    let rho_min = model
        .min_resistivity(AIR_RESISTIVITY)
        .ok_or(RefineError::NoConductiveRegion)?;
    let delta = skin_depth(rho_min, frequency)?;
    Ok(delta / h_rule_params(p, threshold)?.lambda_delta)
}

/// Local spacing around a source of length `source_length`.
pub fn source_spacing(source_length: f64, d_delta: f64, p: u8, threshold: Threshold) -> Result<f64, RefineError> {
    if !(source_length > 0.0) {
        return Err(RefineError::NonPositive {
            name: "source length",
            value: source_length,
        });
    }
    Ok((source_length / h_rule_params(p, threshold)?.r_s).min(d_delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn skin_depth_values() {
        assert_abs_diff_eq!(skin_depth(1.0, 1.0).unwrap(), 503.29, epsilon = 0.01);
        assert_abs_diff_eq!(skin_depth(0.3, 3.0).unwrap(), 159.16, epsilon = 0.01);
        let r = skin_depth(4.0, 2.0).unwrap() / skin_depth(1.0, 2.0).unwrap();
        assert_abs_diff_eq!(r, 2.0, epsilon = 1e-14);
        assert!(skin_depth(0.0, 1.0).is_err());
        assert!(skin_depth(1.0, -1.0).is_err());
    }

    #[test]
    fn thresholds() {
        assert_eq!(Threshold::from_percent(3.0).unwrap(), Threshold::ThreePercent);
        assert_eq!(Threshold::from_percent(2.0).unwrap_err(), RefineError::UnknownThreshold(2.0));
    }

    #[test]
    fn spacing_examples() {
        let mut model = MaterialModel::new();
        model.insert_resistivity(1, 0.3, 0.3).unwrap();
        model.insert_resistivity(2, 1.0e8, 1.0e8).unwrap();
        let d = characteristic_spacing(&model, 3.0, 2, Threshold::ThreePercent).unwrap();
        assert_abs_diff_eq!(d, 16.95, epsilon = 0.01);
        let d1 = characteristic_spacing(&model, 3.0, 1, Threshold::FivePercent).unwrap();
        assert_abs_diff_eq!(d1, 17.26, epsilon = 0.01);
        assert_eq!(source_spacing(100.0, d, 3, Threshold::ThreePercent).unwrap(), 10.0);
        assert_eq!(source_spacing(1.0e9, d, 3, Threshold::ThreePercent).unwrap(), d);
        assert_eq!(source_spacing(14.0, d1, 1, Threshold::FivePercent).unwrap(), 1.0);
    }

    #[test]
    fn air_only_model() {
        let mut model = MaterialModel::new();
        model.insert_resistivity(1, 1.0e8, 1.0e8).unwrap();
        assert_eq!(
            characteristic_spacing(&model, 1.0, 2, Threshold::OnePercent).unwrap_err(),
            RefineError::NoConductiveRegion
        );
    }
}
