//! MMSE channel estimation through a fixed RIS configuration.
//!
//! With `Φ_l = H_l Ψ_l` the observation operator of AP `l`, the despread
//! pilot signal of UE `k` is
//!
//! ```text
//! z_kl = sqrt(τ_p ρ_p) Σ_{i ∈ P_k} Φ_l h_il + n_kl,   n_kl ~ CN(0, σ² I_M)
//! ```
//!
//! and the MMSE estimate and its error covariance are
//!
//! ```text
//! ĥ_kl = sqrt(τ_p ρ_p) R_kl Φ_l^H G_kl^{-1} z_kl
//! C_kl = R_kl − τ_p ρ_p R_kl Φ_l^H G_kl^{-1} Φ_l R_kl
//! G_kl = τ_p ρ_p Σ_{i ∈ P_k} Φ_l R_il Φ_l^H + σ² I_M
//! ```
//!
//! `G_kl` only depends on the pilot of `k`, so it is shared by co-pilot UEs.
//! Because `Φ_l ĥ_kl` is the MMSE estimate of the effective channel
//! `g_kl = Φ_l h_kl ~ CN(0, Φ_l R_kl Φ_l^H)`, the same formulas with `Φ = I`
//! and `R` replaced by the effective covariance give the effective
//! estimates directly; [`LinearMmse::effective`] uses that form.

use num_complex::Complex64;
use rand::Rng;

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_part, standard_complex_normal, CMatrix, CVector, Cholesky};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PilotParams {
    pub pilot_samples: usize,
    pub pilot_power: f64,
    pub noise_power: f64,
}

impl PilotParams {
    pub fn from_config(cfg: &SimConfig) -> Self {
        PilotParams {
            pilot_samples: cfg.pilot_samples,
            pilot_power: cfg.pilot_power_w,
            noise_power: cfg.noise_power_w,
        }
    }

    /// `τ_p ρ_p`.
    pub fn processing_gain(&self) -> f64 {
        self.pilot_samples as f64 * self.pilot_power
    }
}

/// `H diag(ψ)`.
pub fn observation_operator(h: &CMatrix, psi: &CVector) -> CMatrix {
    let mut phi = h.clone();
    for (n, mut col) in phi.column_iter_mut().enumerate() {
        col *= psi[n];
    }
    phi
}

/// `Φ R Φ^H`, symmetrized.
pub fn effective_covariance(phi: &CMatrix, r: &CMatrix) -> CMatrix {
    hermitian_part(&(phi * r * phi.adjoint()))
}

/// The regularized pilot Gram matrix `G = τ_p ρ_p Σ_i Q_i + σ² I` of one
/// pilot at one AP, with its factorization.
#[derive(Clone, Debug)]
pub struct EffectiveStats {
    gram: CMatrix,
    chol: Cholesky,
}

impl EffectiveStats {
    /// From the effective covariances `Q_il = Φ_l R_il Φ_l^H` of the
    /// co-pilot UEs.
    pub fn new(copilot_covs: &[&CMatrix], dim: usize, params: &PilotParams) -> Result<Self> {
        let mut gram = CMatrix::identity(dim, dim) * Complex64::from(params.noise_power);
        let gain = Complex64::from(params.processing_gain());
        for q in copilot_covs {
            if q.shape() != (dim, dim) {
                return Err(Error::dimension(
                    "effective covariance",
                    format!("{dim}x{dim}"),
                    format!("{}x{}", q.nrows(), q.ncols()),
                ));
            }
            gram += *q * gain;
        }
        let chol = Cholesky::new(&gram)?;
        Ok(EffectiveStats { gram, chol })
    }

    /// From the channel correlation matrices of the co-pilot UEs.
    pub fn from_correlations(copilot_r: &[&CMatrix], phi: &CMatrix, params: &PilotParams) -> Result<Self> {
        let qs: Vec<CMatrix> = copilot_r.iter().map(|r| effective_covariance(phi, r)).collect();
        let refs: Vec<&CMatrix> = qs.iter().collect();
        EffectiveStats::new(&refs, phi.nrows(), params)
    }

    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    /// Draws a pilot statistic with covariance `G`, i.e. with the exact
    /// distribution of the statistic built from channel draws.
    pub fn sample_statistic<R: Rng + ?Sized>(&self, rng: &mut R) -> CVector {
        self.chol.lower_mul(&standard_complex_normal(rng, self.dim()))
    }

    /// `G^{-1} x`.
    pub fn solve(&self, x: &CMatrix) -> CMatrix {
        self.chol.solve_matrix(x)
    }
}

/// `z_kl` from the true channels of the UEs in `P_k` (UE `k` included).
pub fn received_pilot_statistic<R: Rng + ?Sized>(
    copilot_channels: &[&CVector],
    phi: &CMatrix,
    params: &PilotParams,
    rng: &mut R,
) -> CVector {
    let m = phi.nrows();
    let mut z = standard_complex_normal(rng, m) * Complex64::from(params.noise_power.sqrt());
    let scale = Complex64::from(params.processing_gain().sqrt());
    for h in copilot_channels {
        z += (phi * *h) * scale;
    }
    z
}

/// MMSE estimate `ĥ_kl` of the element-domain channel.
pub fn mmse_estimate(
    z: &CVector,
    stats: &EffectiveStats,
    r_kl: &CMatrix,
    phi: &CMatrix,
    params: &PilotParams,
) -> CVector {
    let w = stats.chol.solve(z);
    (r_kl * (phi.adjoint() * w)) * Complex64::from(params.processing_gain().sqrt())
}

/// MMSE error covariance `C_kl` of the element-domain channel.
pub fn error_covariance(stats: &EffectiveStats, r_kl: &CMatrix, phi: &CMatrix, params: &PilotParams) -> CMatrix {
    let phi_r = phi * r_kl;
    let reduction = phi_r.adjoint() * stats.solve(&phi_r);
    hermitian_part(&(r_kl - reduction * Complex64::from(params.processing_gain())))
}

/// Precomputed estimator `ĥ = W z` for one UE/AP pair together with its
/// error covariance.
#[derive(Clone, Debug)]
pub struct LinearMmse {
    pub gain: CMatrix,
    pub error_cov: CMatrix,
}

impl LinearMmse {
    pub fn new(stats: &EffectiveStats, r_kl: &CMatrix, phi: &CMatrix, params: &PilotParams) -> Self {
        let phi_r = phi * r_kl;
        let solved = stats.solve(&phi_r);
        let root = params.processing_gain().sqrt();
        LinearMmse {
            gain: solved.adjoint() * Complex64::from(root),
            error_cov: hermitian_part(&(r_kl - phi_r.adjoint() * solved * Complex64::from(root * root))),
        }
    }

    /// Estimator of the effective channel with covariance `q` (`Φ = I`).
    pub fn effective(stats: &EffectiveStats, q: &CMatrix, params: &PilotParams) -> Self {
        let solved = stats.solve(q);
        let root = params.processing_gain().sqrt();
        LinearMmse {
            gain: solved.adjoint() * Complex64::from(root),
            error_cov: hermitian_part(&(q - q * solved * Complex64::from(root * root))),
        }
    }

    pub fn estimate(&self, z: &CVector) -> CVector {
        &self.gain * z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{rel_frobenius, sample_complex_gaussian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar(v: f64) -> CMatrix {
        CMatrix::from_element(1, 1, Complex64::from(v))
    }

    fn unit_params(noise: f64) -> PilotParams {
        PilotParams {
            pilot_samples: 1,
            pilot_power: 1.0,
            noise_power: noise,
        }
    }

    #[test]
    fn scalar_estimate_and_error() {
        let params = unit_params(1.0);
        let (r, phi) = (scalar(1.0), scalar(1.0));
        let stats = EffectiveStats::from_correlations(&[&r], &phi, &params).unwrap();
        let z = CVector::from_element(1, Complex64::new(0.8, -0.4));
        let h = mmse_estimate(&z, &stats, &r, &phi, &params);
        assert!((h[0] - z[0] / 2.0).norm() < 1e-15);
        let c = error_covariance(&stats, &r, &phi, &params);
        assert!((c[(0, 0)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn noiseless_limit_gives_zero_error() {
        let params = unit_params(1e-12);
        let (r, phi) = (scalar(1.0), scalar(1.0));
        let stats = EffectiveStats::from_correlations(&[&r], &phi, &params).unwrap();
        assert!(error_covariance(&stats, &r, &phi, &params)[(0, 0)].re < 1e-11);
    }

    #[test]
    fn zero_channel_and_zero_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let phi = CMatrix::from_fn(2, 3, |_, _| standard_complex_normal(&mut rng, 1)[0]);
        let x = CMatrix::from_fn(3, 3, |_, _| standard_complex_normal(&mut rng, 1)[0]);
        let r = &x * x.adjoint();

        let params = unit_params(0.5);
        let zero = CMatrix::zeros(3, 3);
        let stats = EffectiveStats::from_correlations(&[&zero], &phi, &params).unwrap();
        assert_eq!(error_covariance(&stats, &zero, &phi, &params), zero);

        let silent = PilotParams {
            pilot_power: 0.0,
            ..params
        };
        let stats = EffectiveStats::from_correlations(&[&r], &phi, &silent).unwrap();
        assert!(rel_frobenius(&error_covariance(&stats, &r, &phi, &silent), &r) < 1e-15);
    }

    #[test]
    fn zero_power_statistic_is_noise() {
        let params = PilotParams {
            pilot_samples: 10,
            pilot_power: 0.0,
            noise_power: 2.0,
        };
        let phi = CMatrix::identity(2, 2);
        let h = CVector::from_element(2, Complex64::new(5.0, 5.0));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let draws = 10_000;
        let mut power = 0.0;
        for _ in 0..draws {
            power += received_pilot_statistic(&[&h], &phi, &params, &mut rng).norm_squared();
        }
        let per_entry = power / (2 * draws) as f64;
        assert!((per_entry / 2.0 - 1.0).abs() < 0.03, "{per_entry}");
    }

    #[test]
    fn noiseless_scalar_chain() {
        let params = PilotParams {
            pilot_samples: 10,
            pilot_power: 0.1,
            noise_power: 0.0,
        };
        let h = CVector::from_element(1, Complex64::new(0.3, -1.2));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let z = received_pilot_statistic(&[&h], &scalar(1.0), &params, &mut rng);
        assert!((z[0] - h[0]).norm() < 1e-15);
    }

    #[test]
    fn precomputed_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = PilotParams {
            pilot_samples: 4,
            pilot_power: 0.3,
            noise_power: 0.2,
        };
        let phi = CMatrix::from_fn(2, 4, |_, _| standard_complex_normal(&mut rng, 1)[0]);
        let rs: Vec<CMatrix> = (0..2)
            .map(|_| {
                let x = CMatrix::from_fn(4, 4, |_, _| standard_complex_normal(&mut rng, 1)[0]);
                &x * x.adjoint()
            })
            .collect();
        let stats = EffectiveStats::from_correlations(&[&rs[0], &rs[1]], &phi, &params).unwrap();
        let est = LinearMmse::new(&stats, &rs[0], &phi, &params);
        let h0 = sample_complex_gaussian(&rs[0], &mut rng).unwrap();
        let h1 = sample_complex_gaussian(&rs[1], &mut rng).unwrap();
        let z = received_pilot_statistic(&[&h0, &h1], &phi, &params, &mut rng);
        let direct = mmse_estimate(&z, &stats, &rs[0], &phi, &params);
        assert!((est.estimate(&z) - &direct).norm() <= 1e-12 * direct.norm());
        let c = error_covariance(&stats, &rs[0], &phi, &params);
        assert!(rel_frobenius(&est.error_cov, &c) < 1e-12);

        // Effective-domain form equals Φ applied to the element-domain one.
        let qs: Vec<CMatrix> = rs.iter().map(|r| effective_covariance(&phi, r)).collect();
        let eff_stats = EffectiveStats::new(&[&qs[0], &qs[1]], 2, &params).unwrap();
        let eff = LinearMmse::effective(&eff_stats, &qs[0], &params);
        let g_hat = eff.estimate(&z);
        assert!((&phi * &direct - &g_hat).norm() <= 1e-12 * g_hat.norm());
        let phi_c = &phi * &c * phi.adjoint();
        assert!(rel_frobenius(&eff.error_cov, &phi_c) < 1e-10);

        // Co-pilot estimates are fixed transformations of the same z.
        let other = LinearMmse::new(&stats, &rs[1], &phi, &params);
        let via_first = &other.gain * &z;
        assert!((via_first - mmse_estimate(&z, &stats, &rs[1], &phi, &params)).norm() < 1e-12);
    }
}
