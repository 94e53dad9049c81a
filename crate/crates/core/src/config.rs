//! Simulation parameters.

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Layout of the active antennas behind each RIS (and of the conventional
/// small array in the no-RIS baseline).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArrayGeometry {
    Linear,
    /// Planar grid with the given number of rows; `antennas_per_ap` must be
    /// a multiple of it.
    Planar { rows: usize },
}

/// Spatial correlation model for UE-to-array channels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CorrelationModel {
    /// Gaussian local scattering in azimuth and elevation with the given
    /// angular standard deviation (degrees). Zero yields a rank-one matrix.
    LocalScattering { angular_std_deg: f64 },
    /// `R = β I`.
    Uncorrelated,
}

/// Model for the non-line-of-sight part of the RIS-to-array channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NlosModel {
    /// I.i.d. complex Gaussian entries, made orthogonal to the LOS column
    /// before the per-column power split.
    Iid,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub num_aps: usize,
    pub num_ues: usize,
    pub antennas_per_ap: usize,
    pub ris_rows: usize,
    pub ris_cols: usize,
    pub area_side_m: f64,
    pub carrier_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_power_w: f64,
    pub pilot_power_w: f64,
    pub data_power_w: f64,
    pub coherence_samples: usize,
    pub pilot_samples: usize,
    /// RIS element spacing in wavelengths.
    pub element_spacing: f64,
    /// Active antenna spacing in wavelengths.
    pub antenna_spacing: f64,
    pub array_geometry: ArrayGeometry,
    /// Separation between the RIS plane and the antenna array, in wavelengths.
    pub box_depth_wavelengths: f64,
    pub rician_los_fraction: f64,
    pub nlos_model: NlosModel,
    pub ap_height_m: f64,
    pub correlation: CorrelationModel,
    /// Gauss-Hermite nodes per angular dimension for the local scattering
    /// integral.
    pub quadrature_nodes: usize,
    pub pathloss_intercept_db: f64,
    pub pathloss_slope_db: f64,
    pub shadowing_std_db: f64,
    pub shadowing_decorrelation_m: f64,
    pub min_distance_m: f64,
    pub power_iterations: usize,
    pub power_iteration_tolerance: f64,
    pub mc_setups: usize,
    pub mc_channel_realizations: usize,
    pub seed: u64,
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watt_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

impl Default for SimConfig {
    /// The small-network setup: 50 APs and 10 UEs in a 1 km square.
    fn default() -> Self {
        SimConfig {
            num_aps: 50,
            num_ues: 10,
            antennas_per_ap: 4,
            ris_rows: 6,
            ris_cols: 6,
            area_side_m: 1000.0,
            carrier_frequency_hz: 2e9,
            bandwidth_hz: 20e6,
            noise_power_w: dbm_to_watt(-94.0),
            pilot_power_w: 0.1,
            data_power_w: 0.1,
            coherence_samples: 200,
            pilot_samples: 10,
            element_spacing: 0.5,
            antenna_spacing: 0.5,
            array_geometry: ArrayGeometry::Linear,
            box_depth_wavelengths: 4.0,
            rician_los_fraction: 0.9,
            nlos_model: NlosModel::Iid,
            ap_height_m: 10.0,
            correlation: CorrelationModel::LocalScattering {
                angular_std_deg: 15.0,
            },
            quadrature_nodes: 40,
            pathloss_intercept_db: -30.5,
            pathloss_slope_db: 36.7,
            shadowing_std_db: 4.0,
            shadowing_decorrelation_m: 9.0,
            min_distance_m: 1.0,
            power_iterations: 100,
            power_iteration_tolerance: 1e-8,
            mc_setups: 50,
            mc_channel_realizations: 100,
            seed: 0,
        }
    }
}

impl SimConfig {
    /// Presets for the three published network setups (1, 2 or 3).
    pub fn figure(index: u8) -> Option<Self> {
        let base = SimConfig::default();
        match index {
            1 => Some(base),
            2 => Some(SimConfig {
                num_aps: 100,
                num_ues: 20,
                ..base
            }),
            3 => Some(SimConfig {
                num_aps: 100,
                num_ues: 20,
                area_side_m: 2000.0,
                ..base
            }),
            _ => None,
        }
    }

    /// Number of RIS elements per AP.
    pub fn ris_elements(&self) -> usize {
        self.ris_rows * self.ris_cols
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency_hz
    }

    pub fn box_depth_m(&self) -> f64 {
        self.box_depth_wavelengths * self.wavelength_m()
    }

    /// `(τ_c - τ_p) / τ_c`.
    pub fn prelog_factor(&self) -> f64 {
        (self.coherence_samples - self.pilot_samples) as f64 / self.coherence_samples as f64
    }

    /// Rows and columns of the active antenna grid.
    pub fn antenna_grid(&self) -> (usize, usize) {
        match self.array_geometry {
            ArrayGeometry::Linear => (1, self.antennas_per_ap),
            ArrayGeometry::Planar { rows } => (rows, self.antennas_per_ap / rows.max(1)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(field: &str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be positive and finite, got {v}")))
            }
        }
        fn at_least_one(field: &str, v: usize) -> Result<()> {
            if v >= 1 {
                Ok(())
            } else {
                Err(Error::config(field, "must be at least 1"))
            }
        }
        at_least_one("num_aps", self.num_aps)?;
        at_least_one("num_ues", self.num_ues)?;
        at_least_one("antennas_per_ap", self.antennas_per_ap)?;
        at_least_one("ris_rows", self.ris_rows)?;
        at_least_one("ris_cols", self.ris_cols)?;
        at_least_one("pilot_samples", self.pilot_samples)?;
        at_least_one("mc_setups", self.mc_setups)?;
        at_least_one("mc_channel_realizations", self.mc_channel_realizations)?;
        at_least_one("quadrature_nodes", self.quadrature_nodes)?;
        if self.pilot_samples >= self.coherence_samples {
            return Err(Error::config(
                "pilot_samples",
                format!(
                    "must be smaller than coherence_samples ({} >= {})",
                    self.pilot_samples, self.coherence_samples
                ),
            ));
        }
        if self.antennas_per_ap > self.ris_elements() {
            return Err(Error::config(
                "antennas_per_ap",
                format!(
                    "must not exceed the RIS element count {}",
                    self.ris_elements()
                ),
            ));
        }
        if let ArrayGeometry::Planar { rows } = self.array_geometry {
            if rows == 0 || !self.antennas_per_ap.is_multiple_of(rows) {
                return Err(Error::config(
                    "antenna_rows",
                    format!("must divide antennas_per_ap = {}", self.antennas_per_ap),
                ));
            }
        }
        positive("carrier_frequency_hz", self.carrier_frequency_hz)?;
        positive("bandwidth_hz", self.bandwidth_hz)?;
        positive("noise_power_dbm", self.noise_power_w)?;
        positive("pilot_power_mw", self.pilot_power_w)?;
        positive("data_power_mw", self.data_power_w)?;
        positive("element_spacing_wavelengths", self.element_spacing)?;
        positive("antenna_spacing_wavelengths", self.antenna_spacing)?;
        positive("box_depth_wavelengths", self.box_depth_wavelengths)?;
        positive("min_distance_m", self.min_distance_m)?;
        positive("power_iteration_tolerance", self.power_iteration_tolerance)?;
        if !(self.area_side_m >= 0.0 && self.area_side_m.is_finite()) {
            return Err(Error::config("area_side_m", "must be non-negative"));
        }
        if !(self.ap_height_m >= 0.0 && self.ap_height_m.is_finite()) {
            return Err(Error::config("ap_height_m", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.rician_los_fraction) {
            return Err(Error::config("rician_los_fraction", "must lie in [0, 1]"));
        }
        if !(self.shadowing_std_db >= 0.0) {
            return Err(Error::config("shadowing_std_db", "must be non-negative"));
        }
        if self.shadowing_std_db > 0.0 {
            positive("shadowing_decorrelation_m", self.shadowing_decorrelation_m)?;
        }
        if let CorrelationModel::LocalScattering { angular_std_deg } = self.correlation {
            if !(angular_std_deg >= 0.0 && angular_std_deg.is_finite()) {
                return Err(Error::config("angular_std_deg", "must be non-negative"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        for i in 1..=3 {
            SimConfig::figure(i).unwrap().validate().unwrap();
        }
        assert!(SimConfig::figure(4).is_none());
    }

    #[test]
    fn default_units() {
        let cfg = SimConfig::default();
        assert!((watt_to_dbm(cfg.noise_power_w) + 94.0).abs() < 1e-12);
        assert!((cfg.wavelength_m() - 0.149_896).abs() < 1e-6);
        assert_eq!(cfg.ris_elements(), 36);
        assert!((cfg.prelog_factor() - 0.95).abs() < 1e-15);
    }

    #[test]
    fn validation_names_the_field() {
        let cfg = SimConfig {
            pilot_samples: 200,
            ..SimConfig::default()
        };
        match cfg.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "pilot_samples"),
            other => panic!("unexpected {other:?}"),
        }
        let cfg = SimConfig {
            antennas_per_ap: 40,
            ..SimConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "antennas_per_ap"));
        let cfg = SimConfig {
            box_depth_wavelengths: 0.0,
            ..SimConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "box_depth_wavelengths"));
        let cfg = SimConfig {
            data_power_w: 0.0,
            ..SimConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
