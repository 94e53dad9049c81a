//! Long-term RIS phase configuration.
//!
//! For AP `l` the received signal strength (up to the factor `τ_p ρ_p`) is
//! `tr(H Ψ B Ψ^H H^H)` with `B = Σ_{k ∈ D_l} R_kl` and `Ψ = diag(ψ)`.
//! Writing `B = Σ_n λ_n u_n u_n^H` it equals the quadratic form `ψ^H A ψ`
//! with
//!
//! ```text
//! A = Σ_n λ_n diag(u_n^*) H^H H diag(u_n)
//! ```
//!
//! which is maximized over unit-modulus `ψ` by the constrained power
//! iteration: multiply by `A`, then project every entry back onto the unit
//! circle. Since `ψ^H A ψ` is convex and the projection maximizes the
//! linearization, the objective cannot decrease from one step to the next;
//! [`PowerIterationOutcome::monotone`] records whether that held
//! numerically.

use std::f64::consts::PI;

use log::warn;
use num_complex::Complex64;
use rand::Rng;

use crate::association::Association;
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, CMatrix, CVector};

/// Relative slack allowed when checking the objective trajectory.
pub const MONOTONE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PhaseMode {
    Optimized,
    Random,
    Identity,
}

/// One unit-modulus vector `ψ_l` per AP; `Ψ_l = diag(ψ_l)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseConfig {
    pub phases: Vec<CVector>,
}

impl PhaseConfig {
    pub fn identity(num_aps: usize, elements: usize) -> Self {
        PhaseConfig {
            phases: vec![CVector::from_element(elements, Complex64::from(1.0)); num_aps],
        }
    }

    pub fn num_aps(&self) -> usize {
        self.phases.len()
    }

    pub fn psi(&self, l: usize) -> &CVector {
        &self.phases[l]
    }

    /// Largest deviation of any `|ψ_{l,n}|` from one.
    pub fn max_modulus_error(&self) -> f64 {
        self.phases
            .iter()
            .flat_map(|p| p.iter())
            .map(|z| (z.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// `B_l` and `A_l` of one AP.
#[derive(Clone, Debug)]
pub struct SignalStrengthObjective {
    pub b: CMatrix,
    pub a: CMatrix,
    /// `true` when the AP serves nobody; its phases are left at one.
    pub neutral: bool,
}

impl SignalStrengthObjective {
    /// `ψ^H A ψ`.
    pub fn value(&self, psi: &CVector) -> f64 {
        quadratic_form(&self.a, psi)
    }

    /// `tr(H Ψ B Ψ^H H^H)`, evaluated directly.
    pub fn trace_form(&self, h: &CMatrix, psi: &CVector) -> f64 {
        let mut h_psi = h.clone();
        for (n, mut col) in h_psi.column_iter_mut().enumerate() {
            col *= psi[n];
        }
        (&h_psi * &self.b * h_psi.adjoint()).trace().re
    }
}

pub fn quadratic_form(a: &CMatrix, psi: &CVector) -> f64 {
    psi.dotc(&(a * psi)).re
}

/// Builds `B_l` from the correlation matrices of the served UEs and `A_l`
/// from its eigendecomposition.
pub fn build_objective(served_r: &[&CMatrix], h: &CMatrix) -> Result<SignalStrengthObjective> {
    let n = h.ncols();
    let mut b = CMatrix::zeros(n, n);
    for r in served_r {
        if r.shape() != (n, n) {
            return Err(Error::dimension(
                "build_objective",
                format!("{n}x{n}"),
                format!("{}x{}", r.nrows(), r.ncols()),
            ));
        }
        b += *r;
    }
    if served_r.is_empty() {
        return Ok(SignalStrengthObjective {
            b,
            a: CMatrix::zeros(n, n),
            neutral: true,
        });
    }
    let gram = h.adjoint() * h;
    let eig = hermitian_eig(&b)?;
    let mut a = CMatrix::zeros(n, n);
    for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
        let u = eig.eigenvectors.column(idx);
        // diag(u^*) G diag(u): entry (i, j) is conj(u_i) G_ij u_j.
        for j in 0..n {
            let uj = u[j] * lambda;
            for i in 0..n {
                a[(i, j)] += u[i].conj() * gram[(i, j)] * uj;
            }
        }
    }
    Ok(SignalStrengthObjective {
        b,
        a: crate::linalg::hermitian_part(&a),
        neutral: false,
    })
}

/// Projects every entry onto the unit circle (`e^{j arg w_n}`); zero entries
/// map to one.
fn project_unit_modulus(w: &CVector) -> CVector {
    w.map(|z| {
        if z.norm() > 0.0 {
            Complex64::from_polar(1.0, z.arg())
        } else {
            Complex64::from(1.0)
        }
    })
}

/// Exactly `iterations` steps of the constrained power iteration from the
/// all-ones vector. If `A ψ` vanishes the current `ψ` is returned.
pub fn constrained_power_iteration(a: &CMatrix, iterations: usize) -> CVector {
    let mut psi = CVector::from_element(a.ncols(), Complex64::from(1.0));
    for _ in 0..iterations {
        let w = a * &psi;
        let norm = w.norm();
        if norm == 0.0 || !norm.is_finite() {
            break;
        }
        psi = project_unit_modulus(&(w / Complex64::from(norm)));
    }
    psi
}

#[derive(Clone, Debug)]
pub struct PowerIterationOutcome {
    pub psi: CVector,
    /// Objective before the first step and after every step taken.
    pub objective: Vec<f64>,
    pub monotone: bool,
}

impl PowerIterationOutcome {
    pub fn iterations(&self) -> usize {
        self.objective.len() - 1
    }

    pub fn final_objective(&self) -> f64 {
        *self.objective.last().expect("initial objective recorded")
    }
}

/// Constrained power iteration with early exit once the relative objective
/// gain drops below `tolerance`, recording the objective trajectory.
pub fn power_iteration_with_trace(a: &CMatrix, max_iterations: usize, tolerance: f64) -> PowerIterationOutcome {
    let mut psi = CVector::from_element(a.ncols(), Complex64::from(1.0));
    let mut objective = vec![quadratic_form(a, &psi)];
    let mut monotone = true;
    for _ in 0..max_iterations {
        let w = a * &psi;
        let norm = w.norm();
        if norm == 0.0 || !norm.is_finite() {
            break;
        }
        let next = project_unit_modulus(&(w / Complex64::from(norm)));
        let value = quadratic_form(a, &next);
        let prev = *objective.last().unwrap();
        if value < prev - MONOTONE_TOLERANCE * prev.abs() {
            monotone = false;
            warn!("constrained power iteration objective decreased: {prev} -> {value}");
        }
        psi = next;
        objective.push(value);
        if (value - prev).abs() <= tolerance * value.abs() {
            break;
        }
    }
    PowerIterationOutcome {
        psi,
        objective,
        monotone,
    }
}

pub fn random_phases<R: Rng + ?Sized>(elements: usize, rng: &mut R) -> CVector {
    CVector::from_fn(elements, |_, _| Complex64::from_polar(1.0, 2.0 * PI * rng.random::<f64>()))
}

/// Chooses `ψ_l` for every AP from long-term statistics only.
///
/// `r[k][l]` are the element-domain correlation matrices and `h[l]` the
/// RIS-to-array matrices.
pub fn select_long_term_config<R: Rng + ?Sized>(
    r: &[Vec<CMatrix>],
    h: &[CMatrix],
    assoc: &Association,
    cfg: &SimConfig,
    mode: PhaseMode,
    rng: &mut R,
) -> Result<PhaseConfig> {
    let elements = cfg.ris_elements();
    let num_aps = h.len();
    match mode {
        PhaseMode::Identity => Ok(PhaseConfig::identity(num_aps, elements)),
        PhaseMode::Random => Ok(PhaseConfig {
            phases: (0..num_aps).map(|_| random_phases(elements, rng)).collect(),
        }),
        PhaseMode::Optimized => {
            let mut phases = Vec::with_capacity(num_aps);
            for (l, h_l) in h.iter().enumerate() {
                let served: Vec<&CMatrix> = assoc.served_ues(l).iter().map(|&k| &r[k][l]).collect();
                let objective = build_objective(&served, h_l)?;
                if objective.neutral {
                    phases.push(CVector::from_element(elements, Complex64::from(1.0)));
                    continue;
                }
                let outcome = power_iteration_with_trace(
                    &objective.a,
                    cfg.power_iterations,
                    cfg.power_iteration_tolerance,
                );
                phases.push(outcome.psi);
            }
            Ok(PhaseConfig { phases })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::standard_complex_normal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cvec(v: &[Complex64]) -> CVector {
        CVector::from_column_slice(v)
    }

    #[test]
    fn identity_fixed_point() {
        let a = CMatrix::identity(5, 5);
        for iters in [1, 3, 10] {
            let psi = constrained_power_iteration(&a, iters);
            assert!(psi.iter().all(|z| (*z - Complex64::from(1.0)).norm() < 1e-15));
            assert!((quadratic_form(&a, &psi) - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_one_alignment() {
        let v = cvec(&[
            Complex64::from(1.0),
            Complex64::from_polar(1.0, PI / 3.0),
            Complex64::from_polar(1.0, -PI / 4.0),
        ]);
        let a = &v * v.adjoint();
        let psi = constrained_power_iteration(&a, 5);
        assert!((quadratic_form(&a, &psi) - 9.0).abs() < 1e-12);
        let global = psi[0] / Complex64::from_polar(1.0, v[0].arg());
        for n in 0..3 {
            let want = Complex64::from_polar(1.0, v[n].arg()) * global;
            assert!((psi[n] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_matrix_keeps_ones() {
        let psi = constrained_power_iteration(&CMatrix::zeros(4, 4), 10);
        assert_eq!(psi, CVector::from_element(4, Complex64::from(1.0)));
    }

    #[test]
    fn identity_channel_objective() {
        let h = CMatrix::identity(2, 2);
        let b = CMatrix::identity(2, 2);
        let obj = build_objective(&[&b], &h).unwrap();
        assert!((obj.a.clone() - CMatrix::identity(2, 2)).norm() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = random_phases(2, &mut rng);
        assert!((obj.value(&psi) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rank_one_objective_reduction() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r_vec = standard_complex_normal(&mut rng, 4);
        let r = &r_vec * r_vec.adjoint();
        let h = CMatrix::from_fn(2, 4, |_, _| standard_complex_normal(&mut rng, 1)[0]);
        let obj = build_objective(&[&r], &h).unwrap();
        let expected = CMatrix::from_diagonal(&r_vec.conjugate()) * h.adjoint() * &h * CMatrix::from_diagonal(&r_vec);
        assert!((&obj.a - &expected).norm() <= 1e-10 * expected.norm());
    }

    #[test]
    fn empty_served_set_is_neutral() {
        let h = CMatrix::identity(2, 3);
        let obj = build_objective(&[], &h).unwrap();
        assert!(obj.neutral);
        assert_eq!(obj.a, CMatrix::zeros(3, 3));
    }

    #[test]
    fn trace_stops_early_and_records_history() {
        let a = CMatrix::identity(3, 3);
        let outcome = power_iteration_with_trace(&a, 100, 1e-8);
        assert_eq!(outcome.iterations(), 1);
        assert!(outcome.monotone);
        assert!((outcome.final_objective() - 3.0).abs() < 1e-12);
    }
}
