//! Fixed channel between a transmissive RIS and the antenna array behind it.
//!
//! The RIS sits in the plane `z = 0`, centered at the origin; the antennas
//! are centered on the same axis at `z = -box_depth`. The LOS entry for
//! antenna `m` and element `n` is `λ/(4π d) · exp(-j2π d/λ)`. Each column is
//! then split into a LOS part carrying `rician_los_fraction` of its power
//! and an NLOS part orthogonal to it, so every column has unit norm: all
//! energy collected by an element reaches the antennas.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::config::{NlosModel, SimConfig};
use crate::correlation::ArrayLayout;
use crate::error::{Error, Result};
use crate::linalg::{standard_complex_normal, CMatrix};
use crate::rng::{substream, tag, SimRng};

/// Element positions in meters, ordered as in [`ArrayLayout`], centered on
/// the origin of the plane `z`.
pub fn grid_positions(layout: &ArrayLayout, wavelength: f64, z: f64) -> Vec<[f64; 3]> {
    let pitch = layout.spacing * wavelength;
    let x0 = (layout.cols as f64 - 1.0) / 2.0;
    let y0 = (layout.rows as f64 - 1.0) / 2.0;
    (0..layout.len())
        .map(|n| {
            let (r, c) = layout.coords(n);
            [(c as f64 - x0) * pitch, (r as f64 - y0) * pitch, z]
        })
        .collect()
}

/// Free-space near-field LOS matrix between `antennas` (rows) and
/// `elements` (columns).
pub fn los_matrix(antennas: &[[f64; 3]], elements: &[[f64; 3]], wavelength: f64) -> CMatrix {
    CMatrix::from_fn(antennas.len(), elements.len(), |m, n| {
        let a = antennas[m];
        let e = elements[n];
        let d = ((a[0] - e[0]).powi(2) + (a[1] - e[1]).powi(2) + (a[2] - e[2]).powi(2)).sqrt();
        Complex64::from_polar(wavelength / (4.0 * PI * d), -2.0 * PI * d / wavelength)
    })
}

/// LOS matrix for the box geometry of `cfg`.
pub fn box_los_matrix(cfg: &SimConfig) -> Result<CMatrix> {
    if !(cfg.box_depth_wavelengths > 0.0) {
        return Err(Error::config("box_depth_wavelengths", "must be positive"));
    }
    let lambda = cfg.wavelength_m();
    let antennas = grid_positions(&ArrayLayout::antennas(cfg), lambda, -cfg.box_depth_m());
    let elements = grid_positions(&ArrayLayout::ris(cfg), lambda, 0.0);
    Ok(los_matrix(&antennas, &elements, lambda))
}

/// Combines a LOS matrix with random NLOS columns into a matrix with unit
/// column norms. When a column has no room for an orthogonal NLOS part
/// (single antenna), it keeps the LOS direction only.
pub fn combine_los_nlos<R: Rng + ?Sized>(
    los: &CMatrix,
    los_fraction: f64,
    model: NlosModel,
    rng: &mut R,
) -> CMatrix {
    let (m, n) = los.shape();
    let mut h = CMatrix::zeros(m, n);
    for col in 0..n {
        let los_col = los.column(col);
        let unit_los = los_col / Complex64::from(los_col.norm());
        let w = match model {
            NlosModel::Iid => standard_complex_normal(rng, m),
        };
        let proj = unit_los.adjoint() * &w;
        let residual = &w - &unit_los * proj[(0, 0)];
        let res_norm = residual.norm();
        let mut column = if res_norm > 1e-12 * w.norm() {
            &unit_los * Complex64::from(los_fraction.sqrt())
                + residual * Complex64::from((1.0 - los_fraction).sqrt() / res_norm)
        } else {
            unit_los.clone_owned()
        };
        let norm = column.norm();
        column /= Complex64::from(norm);
        h.set_column(col, &column);
    }
    h
}

/// The RIS-to-array matrix `H_l` of AP `ap_index`. It depends only on the
/// global seed and the AP index, never on the network realization.
pub fn build_ap_ris_channel(cfg: &SimConfig, ap_index: usize) -> Result<CMatrix> {
    let mut rng = ap_channel_rng(cfg.seed, ap_index);
    build_ap_ris_channel_with(cfg, &mut rng)
}

pub fn build_ap_ris_channel_with<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Result<CMatrix> {
    let los = box_los_matrix(cfg)?;
    Ok(combine_los_nlos(&los, cfg.rician_los_fraction, cfg.nlos_model, rng))
}

pub fn ap_channel_rng(seed: u64, ap_index: usize) -> SimRng {
    substream(seed, ap_index as u64, tag::AP_CHANNEL)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_by_one(depth_wavelengths: f64) -> SimConfig {
        SimConfig {
            antennas_per_ap: 1,
            ris_rows: 1,
            ris_cols: 1,
            box_depth_wavelengths: depth_wavelengths,
            rician_los_fraction: 1.0,
            ..SimConfig::default()
        }
    }

    #[test]
    fn los_entry_at_one_wavelength() {
        let cfg = one_by_one(1.0);
        let los = box_los_matrix(&cfg).unwrap();
        let v = los[(0, 0)];
        assert!((v.re - 1.0 / (4.0 * PI)).abs() < 1e-12);
        assert!(v.im.abs() < 1e-12);
        let h = build_ap_ris_channel(&cfg, 0).unwrap();
        assert!((h[(0, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn los_entry_at_half_wavelength() {
        let v = box_los_matrix(&one_by_one(0.5)).unwrap()[(0, 0)];
        assert!((v.re + 1.0 / (2.0 * PI)).abs() < 1e-12);
        assert!(v.im.abs() < 1e-12);
    }

    #[test]
    fn rejects_non_positive_depth() {
        let cfg = SimConfig {
            box_depth_wavelengths: 0.0,
            ..SimConfig::default()
        };
        assert!(matches!(build_ap_ris_channel(&cfg, 0), Err(Error::Config { .. })));
    }

    #[test]
    fn unit_columns_and_los_fraction() {
        let cfg = SimConfig::default();
        let los = box_los_matrix(&cfg).unwrap();
        let h = build_ap_ris_channel(&cfg, 3).unwrap();
        assert_eq!(h.shape(), (4, 36));
        for n in 0..36 {
            assert!((h.column(n).norm() - 1.0).abs() < 1e-12);
            let unit = los.column(n) / Complex64::from(los.column(n).norm());
            let los_power = (unit.adjoint() * h.column(n))[(0, 0)].norm_sqr();
            assert!((los_power - cfg.rician_los_fraction).abs() < 1e-10);
        }
    }

    #[test]
    fn fixed_per_ap() {
        let cfg = SimConfig::default();
        assert_eq!(build_ap_ris_channel(&cfg, 1).unwrap(), build_ap_ris_channel(&cfg, 1).unwrap());
        assert_ne!(build_ap_ris_channel(&cfg, 1).unwrap(), build_ap_ris_channel(&cfg, 2).unwrap());
    }
}
