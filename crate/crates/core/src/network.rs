//! Network realizations: AP/UE placement, path loss and correlated shadowing.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::SimConfig;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Direction from an AP towards a UE, as seen by the AP array.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction {
    /// Radians, measured in the horizontal plane.
    pub azimuth: f64,
    /// Radians; negative when the UE is below the array.
    pub elevation: f64,
}

/// One Monte Carlo network setup.
#[derive(Clone, Debug)]
pub struct NetworkRealization {
    pub ap_positions: Vec<Position>,
    pub ue_positions: Vec<Position>,
    /// `K × L` large-scale fading coefficients (linear power gain).
    pub beta: DMatrix<f64>,
    /// `K × L` shadowing terms in dB.
    pub shadowing_db: DMatrix<f64>,
}

impl NetworkRealization {
    pub fn num_aps(&self) -> usize {
        self.ap_positions.len()
    }

    pub fn num_ues(&self) -> usize {
        self.ue_positions.len()
    }

    /// Horizontal distance, clamped below by `cfg.min_distance_m`.
    pub fn horizontal_distance(&self, k: usize, l: usize, cfg: &SimConfig) -> f64 {
        self.ue_positions[k]
            .distance(&self.ap_positions[l])
            .max(cfg.min_distance_m)
    }

    pub fn direction(&self, k: usize, l: usize, cfg: &SimConfig) -> Direction {
        direction(&self.ap_positions[l], &self.ue_positions[k], cfg)
    }
}

pub fn direction(ap: &Position, ue: &Position, cfg: &SimConfig) -> Direction {
    let horizontal = ue.distance(ap).max(cfg.min_distance_m);
    Direction {
        azimuth: (ue.y - ap.y).atan2(ue.x - ap.x),
        elevation: (-cfg.ap_height_m).atan2(horizontal),
    }
}

/// Path loss in dB at 3D distance `distance_m`.
pub fn path_loss_db(distance_m: f64, cfg: &SimConfig) -> f64 {
    cfg.pathloss_intercept_db - cfg.pathloss_slope_db * distance_m.log10()
}

/// 3D distance for a horizontal separation, after clamping.
pub fn distance_3d(horizontal_m: f64, cfg: &SimConfig) -> f64 {
    horizontal_m.max(cfg.min_distance_m).hypot(cfg.ap_height_m)
}

/// Draws AP and UE positions uniformly over the square and evaluates the
/// large-scale fading.
pub fn generate_realization<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Result<NetworkRealization> {
    cfg.validate()?;
    let side = cfg.area_side_m;
    let draw = |rng: &mut R| Position::new(side * rng.random::<f64>(), side * rng.random::<f64>());
    let aps: Vec<Position> = (0..cfg.num_aps).map(|_| draw(rng)).collect();
    let ues: Vec<Position> = (0..cfg.num_ues).map(|_| draw(rng)).collect();
    realization_at(cfg, aps, ues, rng)
}

/// Large-scale fading for fixed positions. Shadowing is zero-mean Gaussian
/// in dB with covariance `std² · 2^(-δ/d_c)` between UEs a distance `δ`
/// apart (same AP), independent across APs.
pub fn realization_at<R: Rng + ?Sized>(
    cfg: &SimConfig,
    ap_positions: Vec<Position>,
    ue_positions: Vec<Position>,
    rng: &mut R,
) -> Result<NetworkRealization> {
    let (k_count, l_count) = (ue_positions.len(), ap_positions.len());
    if k_count == 0 || l_count == 0 {
        return Err(Error::config("num_ues", "realization needs at least one AP and one UE"));
    }
    let shadow_root = shadowing_root(cfg, &ue_positions)?;
    let mut shadowing_db = DMatrix::zeros(k_count, l_count);
    if let Some(root) = shadow_root {
        for l in 0..l_count {
            let w = DVector::from_fn(k_count, |_, _| rng.sample::<f64, _>(StandardNormal));
            shadowing_db.set_column(l, &(&root * w));
        }
    }
    let beta = DMatrix::from_fn(k_count, l_count, |k, l| {
        let d = distance_3d(ue_positions[k].distance(&ap_positions[l]), cfg);
        10f64.powf((path_loss_db(d, cfg) + shadowing_db[(k, l)]) / 10.0)
    });
    Ok(NetworkRealization {
        ap_positions,
        ue_positions,
        beta,
        shadowing_db,
    })
}

fn shadowing_root(cfg: &SimConfig, ues: &[Position]) -> Result<Option<DMatrix<f64>>> {
    if cfg.shadowing_std_db == 0.0 {
        return Ok(None);
    }
    let var = cfg.shadowing_std_db.powi(2);
    let k = ues.len();
    let cov = DMatrix::from_fn(k, k, |i, j| {
        var * 2f64.powf(-ues[i].distance(&ues[j]) / cfg.shadowing_decorrelation_m)
    });
    // Co-located UEs make the covariance singular; the eigen-root handles it.
    let eig = SymmetricEigen::new(cov);
    let trace: f64 = eig.eigenvalues.iter().sum();
    if eig.eigenvalues.iter().any(|&l| l < -1e-10 * trace) {
        return Err(Error::NotPsd {
            min_eigenvalue: eig.eigenvalues.min(),
            tolerance: 1e-10 * trace,
        });
    }
    let sqrt_vals = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let scaled = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals);
    Ok(Some(scaled * eig.eigenvectors.transpose()))
}
