//! Independent reference computations and the consistency suites built on
//! them.
//!
//! The routines here deliberately avoid the production kernels: eigenvalues
//! come from characteristic-polynomial roots, inverses from cofactors, the
//! local-scattering integral from a direct tensor trapezoid rule, the
//! combiner from a full-dimensional LU solve. They are slow and only meant
//! for small instances.

use std::f64::consts::PI;

use nalgebra::{Cholesky as NaCholesky, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ap_channel::box_los_matrix;
use crate::association::Association;
use crate::config::SimConfig;
use crate::correlation::{ArrayLayout, CorrelationBuilder};
use crate::estimation::{
    error_covariance, mmse_estimate, observation_operator, received_pilot_statistic, EffectiveStats, PilotParams,
};
use crate::linalg::{
    hermitian_eig, psd_sqrt, real_trace, rel_frobenius, standard_complex_normal, CMatrix,
    CVector, Cholesky, GaussianSampler,
};
use crate::network::Direction;
use crate::receiver::{
    expand_blocks, instantaneous_sinr, mmse_combiner, pmmse_combiner, rayleigh_quotient_sinr, CollectiveEstimates,
    CombinerKind, CombiningPlan, ReceiverStats,
};
use crate::ris::{
    build_objective, constrained_power_iteration, power_iteration_with_trace, quadratic_form, random_phases,
    MONOTONE_TOLERANCE,
};

/// Outcome of one named check.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        CheckResult {
            name,
            passed,
            detail: detail.into(),
        }
    }

    /// `value <= bound`, reported with both numbers.
    fn bounded(name: &'static str, value: f64, bound: f64) -> Self {
        CheckResult::new(name, value <= bound, format!("{value:.3e} (bound {bound:.1e})"))
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::from(re)
}

/// Random complex matrix with i.i.d. CN(0, 1) entries.
pub fn random_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let data = standard_complex_normal(rng, rows * cols);
    CMatrix::from_column_slice(rows, cols, data.as_slice())
}

/// Random Hermitian PSD matrix of the given rank.
pub fn random_psd<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> CMatrix {
    let x = random_matrix(n, rank, rng);
    &x * x.adjoint()
}

// ---------------------------------------------------------------------------
// Reference kernels.

/// Coefficients `c_0..c_n` (ascending powers, `c_n = 1`) of `det(λI - A)` by
/// the Faddeev-LeVerrier recursion.
pub fn characteristic_polynomial(a: &CMatrix) -> Vec<Complex64> {
    let n = a.nrows();
    let mut coeffs = vec![Complex64::default(); n + 1];
    coeffs[n] = c(1.0);
    let mut m = CMatrix::zeros(n, n);
    for k in 1..=n {
        m = a * &m + CMatrix::identity(n, n) * coeffs[n - k + 1];
        coeffs[n - k] = -(a * &m).trace() / c(k as f64);
    }
    coeffs
}

/// All roots of a polynomial (ascending coefficients) by Durand-Kerner.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let lead = coeffs[n];
    let monic: Vec<Complex64> = coeffs.iter().map(|x| x / lead).collect();
    let eval = |z: Complex64| monic.iter().rev().fold(Complex64::default(), |acc, &cf| acc * z + cf);
    let radius = 1.0 + monic[..n].iter().map(|x| x.norm()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32) * radius).collect();
    for _ in 0..5000 {
        let mut change: f64 = 0.0;
        for i in 0..n {
            let mut denom = c(1.0);
            for j in 0..n {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            change = change.max(step.norm());
        }
        if change < 1e-15 * radius {
            break;
        }
    }
    roots
}

/// Eigenvalues of a Hermitian matrix (descending) from the roots of its
/// characteristic polynomial.
pub fn eigenvalues_by_charpoly(a: &CMatrix) -> Vec<f64> {
    let scale = a.norm().max(f64::MIN_POSITIVE);
    let scaled = a / c(scale);
    let mut values: Vec<f64> = polynomial_roots(&characteristic_polynomial(&scaled))
        .into_iter()
        .map(|z| z.re * scale)
        .collect();
    values.sort_by(|x, y| y.total_cmp(x));
    values
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(a: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut m = a.clone();
    let mut det = c(1.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[(i, col)].norm().total_cmp(&m[(j, col)].norm()))
            .expect("non-empty column");
        if m[(pivot, col)].norm() == 0.0 {
            return Complex64::default();
        }
        if pivot != col {
            m.swap_rows(pivot, col);
            det = -det;
        }
        det *= m[(col, col)];
        for row in (col + 1)..n {
            let factor = m[(row, col)] / m[(col, col)];
            for k in col..n {
                let v = m[(col, k)];
                m[(row, k)] -= factor * v;
            }
        }
    }
    det
}

/// Inverse from cofactors: `A^{-1} = adj(A) / det(A)`.
pub fn adjugate_inverse(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let det = determinant(a);
    CMatrix::from_fn(n, n, |i, j| {
        // Entry (i, j) of the adjugate is the (j, i) cofactor.
        let minor = a.clone().remove_row(j).remove_column(i);
        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        let cof = if n == 1 { c(1.0) } else { determinant(&minor) };
        cof * sign / det
    })
}

/// Empirical second moment `(1/n) Σ x x^H`.
pub fn empirical_covariance(samples: &[CVector]) -> CMatrix {
    let n = samples.first().map_or(0, |s| s.len());
    let mut acc = CMatrix::zeros(n, n);
    for s in samples {
        acc += s * s.adjoint();
    }
    acc / c(samples.len().max(1) as f64)
}

/// Maximum of `ψ^H A ψ` over a grid of `levels` phases per entry, with the
/// first entry fixed to one (the objective ignores a global phase).
pub fn phase_grid_maximum(a: &CMatrix, levels: usize) -> (f64, CVector) {
    let n = a.nrows();
    let phasor = |i: usize| Complex64::from_polar(1.0, 2.0 * PI * i as f64 / levels as f64);
    let total = levels.pow(n.saturating_sub(1) as u32);
    let mut best = (f64::NEG_INFINITY, CVector::from_element(n, c(1.0)));
    let mut psi = CVector::from_element(n, c(1.0));
    for index in 0..total {
        let mut rest = index;
        for e in 1..n {
            psi[e] = phasor(rest % levels);
            rest /= levels;
        }
        let value = quadratic_form(a, &psi);
        if value > best.0 {
            best = (value, psi.clone());
        }
    }
    best
}

/// Local-scattering correlation by a direct tensor trapezoid rule over
/// `±6σ` in azimuth and elevation with `points` nodes per axis.
pub fn local_scattering_reference(
    layout: &ArrayLayout,
    dir: Direction,
    beta: f64,
    std_deg: f64,
    points: usize,
) -> CMatrix {
    let n = layout.len();
    let std = std_deg.to_radians();
    let half = 6.0 * std;
    let step = 2.0 * half / (points - 1) as f64;
    let density = |x: f64| (-0.5 * (x / std).powi(2)).exp();
    let mut acc = CMatrix::zeros(n, n);
    let mut mass = 0.0;
    for i in 0..points {
        let da = -half + step * i as f64;
        let wa = density(da) * if i == 0 || i == points - 1 { 0.5 } else { 1.0 };
        for j in 0..points {
            let de = -half + step * j as f64;
            let we = density(de) * if j == 0 || j == points - 1 { 0.5 } else { 1.0 };
            let (az, el) = (dir.azimuth + da, dir.elevation + de);
            let a = CVector::from_fn(n, |e, _| {
                let (r, col) = (e / layout.cols, e % layout.cols);
                let phase = 2.0 * PI * layout.spacing * (col as f64 * az.sin() * el.cos() + r as f64 * el.sin());
                Complex64::from_polar(1.0, phase)
            });
            acc += (&a * a.adjoint()) * c(wa * we);
            mass += wa * we;
        }
    }
    acc * c(beta / mass)
}

/// LOS RIS-to-array matrix from explicitly listed coordinates: elements on
/// the plane `z = 0`, antennas on the line `y = 0, z = -depth`, both
/// centered on the axis.
pub fn box_los_reference(cfg: &SimConfig) -> CMatrix {
    let lambda = 299_792_458.0 / cfg.carrier_frequency_hz;
    let depth = cfg.box_depth_wavelengths * lambda;
    let mut elements = Vec::new();
    for r in 0..cfg.ris_rows {
        for col in 0..cfg.ris_cols {
            let x = (col as f64 - (cfg.ris_cols as f64 - 1.0) / 2.0) * cfg.element_spacing * lambda;
            let y = (r as f64 - (cfg.ris_rows as f64 - 1.0) / 2.0) * cfg.element_spacing * lambda;
            elements.push((x, y));
        }
    }
    let m = cfg.antennas_per_ap;
    CMatrix::from_fn(m, elements.len(), |a, e| {
        let xa = (a as f64 - (m as f64 - 1.0) / 2.0) * cfg.antenna_spacing * lambda;
        let (xe, ye) = elements[e];
        let d = ((xa - xe).powi(2) + ye.powi(2) + depth.powi(2)).sqrt();
        Complex64::from_polar(lambda / (4.0 * PI * d), -2.0 * PI * d / lambda)
    })
}

/// Pilot statistics built from an explicit pilot matrix: the received block
/// `Y = Σ_i sqrt(ρ) g_i φ_{t(i)}^T + N` with orthogonal DFT pilots of energy
/// `τ_p`, correlated with `φ_t / sqrt(τ_p)`. Returns one statistic per pilot.
pub fn pilot_matrix_statistics(
    effective_channels: &[CVector],
    pilot_of: &[usize],
    params: &PilotParams,
    noise: &CMatrix,
) -> Vec<CVector> {
    let tau = params.pilot_samples;
    let m = noise.nrows();
    let pilot = |t: usize| {
        CVector::from_fn(tau, |s, _| Complex64::from_polar(1.0, -2.0 * PI * (t * s) as f64 / tau as f64))
    };
    let mut y = noise.clone();
    for (g, &t) in effective_channels.iter().zip(pilot_of) {
        y += (g * pilot(t).transpose()) * c(params.pilot_power.sqrt());
    }
    assert_eq!(y.shape(), (m, tau));
    (0..tau)
        .map(|t| (&y * pilot(t).conjugate()) / c((tau as f64).sqrt()))
        .collect()
}

/// Combining matrix of UE `k` over the full `L·M` dimension with the
/// selector applied explicitly.
fn full_combining_matrix(
    k: usize,
    interferers: &[usize],
    stats: &ReceiverStats,
    est: &CollectiveEstimates,
    assoc: &Association,
    include_own: bool,
) -> CMatrix {
    let m = stats.ap_dim;
    let dim = stats.num_aps() * m;
    let mut selector = CMatrix::zeros(dim, dim);
    for &l in assoc.serving_aps(k) {
        for e in 0..m {
            selector[(l * m + e, l * m + e)] = c(1.0);
        }
    }
    let mut inner = CMatrix::zeros(dim, dim);
    for &i in interferers {
        if i == k && !include_own {
            continue;
        }
        let g = est.stacked(i);
        inner += (&g * g.adjoint()) * c(stats.data_power[i]);
    }
    let mut errors = CMatrix::zeros(dim, dim);
    for &i in interferers {
        for l in 0..stats.num_aps() {
            let mut block = errors.view_mut((l * m, l * m), (m, m));
            block += &stats.error_cov[i][l] * c(stats.data_power[i]);
        }
    }
    &selector * (inner + errors) * &selector + CMatrix::identity(dim, dim) * c(stats.noise_power)
}

/// Combiner of UE `k` solved in full `L·M` dimension by LU.
pub fn full_dimension_combiner(
    k: usize,
    kind: CombinerKind,
    stats: &ReceiverStats,
    est: &CollectiveEstimates,
    assoc: &Association,
) -> CVector {
    let interferers = kind.interferers(k, assoc);
    let matrix = full_combining_matrix(k, &interferers, stats, est, assoc, true);
    let m = stats.ap_dim;
    let mut rhs = CVector::zeros(matrix.nrows());
    for &l in assoc.serving_aps(k) {
        rhs.rows_mut(l * m, m).copy_from(&est.blocks[k][l]);
    }
    matrix.lu().solve(&(rhs * c(stats.data_power[k]))).expect("non-singular combining matrix")
}

/// Largest achievable SINR of UE `k`: the principal generalized eigenvalue
/// of `(η_k ĝ_k ĝ_k^H, denominator)` on the serving subspace.
pub fn max_sinr_generalized_eigen(k: usize, stats: &ReceiverStats, est: &CollectiveEstimates, assoc: &Association) -> f64 {
    let m = stats.ap_dim;
    let aps = assoc.serving_aps(k);
    let all: Vec<usize> = (0..stats.num_ues()).collect();
    let full = full_combining_matrix(k, &all, stats, est, assoc, false);
    let idx: Vec<usize> = aps.iter().flat_map(|&l| (l * m)..(l * m + m)).collect();
    let den = CMatrix::from_fn(idx.len(), idx.len(), |i, j| full[(idx[i], idx[j])]);
    let g = CVector::from_fn(idx.len(), |i, _| est.blocks[k][aps[i / m]][i % m]);
    let chol = NaCholesky::new(den).expect("positive-definite denominator");
    let l_inv = chol.l().try_inverse().expect("invertible factor");
    let whitened = &l_inv * g;
    let numerator = (&whitened * whitened.adjoint()) * c(stats.data_power[k]);
    SymmetricEigen::new(numerator).eigenvalues.max()
}

// ---------------------------------------------------------------------------
// Random receiver instances.

/// A random receiver instance with `num_ues` UEs, `num_aps` APs of `ap_dim`
/// antennas and the given serving sets.
pub fn random_receiver_instance<R: Rng + ?Sized>(
    serving: Vec<Vec<usize>>,
    num_aps: usize,
    ap_dim: usize,
    rng: &mut R,
) -> (ReceiverStats, CollectiveEstimates, Association) {
    let k = serving.len();
    let error_cov = (0..k)
        .map(|_| {
            (0..num_aps)
                .map(|_| random_psd(ap_dim, ap_dim, rng) * c(0.2 * rng.random::<f64>()))
                .collect()
        })
        .collect();
    let powers = (0..k).map(|_| 0.2 + rng.random::<f64>()).collect();
    let stats = ReceiverStats::new(powers, 0.1 + rng.random::<f64>(), error_cov).expect("consistent shapes");
    let est = CollectiveEstimates {
        blocks: (0..k)
            .map(|_| (0..num_aps).map(|_| standard_complex_normal(rng, ap_dim)).collect())
            .collect(),
    };
    let assoc = Association::from_sets(vec![0; k], serving, num_aps, 1).expect("valid serving sets");
    (stats, est, assoc)
}

/// Random non-empty serving sets.
pub fn random_serving_sets<R: Rng + ?Sized>(num_ues: usize, num_aps: usize, rng: &mut R) -> Vec<Vec<usize>> {
    (0..num_ues)
        .map(|_| {
            let mut set: Vec<usize> = (0..num_aps).filter(|_| rng.random_bool(0.5)).collect();
            if set.is_empty() {
                set.push(rng.random_range(0..num_aps));
            }
            set
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Suites.

/// Linear-algebra kernels against characteristic-polynomial roots, cofactor
/// inverses and Monte Carlo moments.
pub fn linalg_suite(seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_eig: f64 = 0.0;
    let mut worst_recon: f64 = 0.0;
    for _ in 0..20 {
        let x = random_matrix(8, 8, &mut rng);
        let a = (&x + x.adjoint()) * c(0.5);
        let eig = hermitian_eig(&a).expect("square");
        let reference = eigenvalues_by_charpoly(&a);
        let scale = eig.eigenvalues.amax();
        for (mine, theirs) in eig.eigenvalues.iter().zip(&reference) {
            worst_eig = worst_eig.max((mine - theirs).abs() / scale);
        }
        worst_recon = worst_recon.max(rel_frobenius(&eig.reconstruct(), &a));
    }
    let mut worst_solve: f64 = 0.0;
    for _ in 0..20 {
        let a = random_psd(6, 6, &mut rng) + CMatrix::identity(6, 6) * c(0.1);
        let b = standard_complex_normal(&mut rng, 6);
        let x = Cholesky::new(&a).expect("positive definite").solve(&b);
        let reference = adjugate_inverse(&a) * &b;
        worst_solve = worst_solve.max((&x - &reference).norm() / reference.norm());
    }
    let sampler = GaussianSampler::new(&CMatrix::identity(2, 2)).expect("psd");
    let samples: Vec<CVector> = (0..100_000).map(|_| sampler.sample(&mut rng)).collect();
    let cov_err = (empirical_covariance(&samples) - CMatrix::identity(2, 2)).norm() / 2f64.sqrt();
    vec![
        CheckResult::bounded("eigenvalues vs characteristic roots", worst_eig, 1e-8),
        CheckResult::bounded("eigen reconstruction", worst_recon, 1e-10),
        CheckResult::bounded("cholesky solve vs adjugate inverse", worst_solve, 1e-8),
        CheckResult::bounded("complex gaussian sampler covariance", cov_err, 0.02),
    ]
}

/// Channel-model constructions against direct evaluations.
pub fn model_suite(_seed: u64) -> Vec<CheckResult> {
    let cfg = SimConfig::default();
    let layout = ArrayLayout::ris(&cfg);
    let builder = CorrelationBuilder::from_config(&cfg);
    let std_deg = match cfg.correlation {
        crate::config::CorrelationModel::LocalScattering { angular_std_deg } => angular_std_deg,
        crate::config::CorrelationModel::Uncorrelated => 0.0,
    };
    let mut worst_corr: f64 = 0.0;
    for (az, el) in [(0.3, -0.1), (-2.0, -0.6), (1.2, -0.02)] {
        let dir = Direction {
            azimuth: az,
            elevation: el,
        };
        let r = builder.build(&layout, dir, 1e-9);
        let reference = local_scattering_reference(&layout, dir, 1e-9, std_deg, 161);
        worst_corr = worst_corr.max(rel_frobenius(&r, &reference));
    }
    let los = box_los_matrix(&cfg).expect("valid geometry");
    let los_err = rel_frobenius(&los, &box_los_reference(&cfg));
    vec![
        CheckResult::bounded("local scattering vs direct integration", worst_corr, 1e-6),
        CheckResult::bounded("box LOS matrix vs explicit geometry", los_err, 1e-12),
    ]
}

/// MMSE estimation against an explicit pilot matrix and Monte Carlo.
pub fn estimation_suite(seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    // Explicit pilot matrix, noiseless, two co-pilot UEs plus one other.
    let params = PilotParams {
        pilot_samples: 3,
        pilot_power: 0.7,
        noise_power: 0.0,
    };
    let (m, n) = (2, 4);
    let h = random_matrix(m, n, &mut rng);
    let phi = observation_operator(&h, &random_phases(n, &mut rng));
    let channels: Vec<CVector> = (0..3).map(|_| standard_complex_normal(&mut rng, n)).collect();
    let effective: Vec<CVector> = channels.iter().map(|x| &phi * x).collect();
    let from_matrix = pilot_matrix_statistics(&effective, &[1, 1, 2], &params, &CMatrix::zeros(m, 3));
    let direct = received_pilot_statistic(&[&channels[0], &channels[1]], &phi, &params, &mut rng);
    out.push(CheckResult::bounded(
        "pilot statistic vs explicit pilot matrix",
        (&direct - &from_matrix[1]).norm() / direct.norm(),
        1e-12,
    ));

    // Monte Carlo: M = 2, N = 4, one co-pilot interferer.
    let params = PilotParams {
        pilot_samples: 2,
        pilot_power: 1.0,
        noise_power: 0.5,
    };
    let r_k = random_psd(n, n, &mut rng) * c(0.5);
    let r_i = random_psd(n, 2, &mut rng) * c(0.5);
    let stats = EffectiveStats::from_correlations(&[&r_k, &r_i], &phi, &params).expect("positive definite");
    let c_k = error_covariance(&stats, &r_k, &phi, &params);
    let (root_k, root_i) = (psd_sqrt(&r_k).expect("psd"), psd_sqrt(&r_i).expect("psd"));
    let draws = 100_000;
    let mut err_cov = CMatrix::zeros(n, n);
    let mut cross = CMatrix::zeros(n, n);
    let mut est_cov = CMatrix::zeros(n, n);
    let mut zz = CMatrix::zeros(m, m);
    let mut zh = CMatrix::zeros(m, n);
    for _ in 0..draws {
        let hk = &root_k * standard_complex_normal(&mut rng, n);
        let hi = &root_i * standard_complex_normal(&mut rng, n);
        let z = received_pilot_statistic(&[&hk, &hi], &phi, &params, &mut rng);
        let est = mmse_estimate(&z, &stats, &r_k, &phi, &params);
        let e = &hk - &est;
        err_cov += &e * e.adjoint();
        cross += &est * e.adjoint();
        est_cov += &est * est.adjoint();
        zz += &z * z.adjoint();
        zh += &z * hk.adjoint();
    }
    let scale = c(1.0 / draws as f64);
    let (err_cov, cross, est_cov, zz, zh) = (err_cov * scale, cross * scale, est_cov * scale, zz * scale, zh * scale);
    out.push(CheckResult::bounded(
        "estimation error covariance vs Monte Carlo",
        rel_frobenius(&err_cov, &c_k),
        0.03,
    ));
    out.push(CheckResult::bounded(
        "estimate/error orthogonality",
        cross.norm() / real_trace(&r_k),
        0.03,
    ));
    out.push(CheckResult::bounded(
        "estimate covariance plus error covariance",
        rel_frobenius(&(est_cov + &c_k), &r_k),
        0.03,
    ));
    let mse = |w: &CMatrix| -> f64 {
        // E||h - W z||^2 from the empirical moments.
        real_trace(&r_k) - 2.0 * (w * &zh).trace().re + real_trace(&(w * &zz * w.adjoint()))
    };
    let w_mmse = r_k.clone() * phi.adjoint() * stats.solve(&CMatrix::identity(m, m)) * c(params.processing_gain().sqrt());
    let mmse = mse(&w_mmse);
    let mut beaten = 0;
    for trial in 0..50 {
        let size = w_mmse.norm() * 10f64.powf(-2.0 + 2.0 * trial as f64 / 49.0);
        let w = &w_mmse + random_matrix(n, m, &mut rng) * c(size / (2.0 * (n * m) as f64).sqrt());
        if mse(&w) < mmse {
            beaten += 1;
        }
    }
    out.push(CheckResult::new(
        "MMSE beats random linear estimators",
        beaten == 0,
        format!("{beaten} of 50 random estimators had lower MSE"),
    ));
    out.push(CheckResult::bounded(
        "empirical MSE matches trace of error covariance",
        (mmse - real_trace(&c_k)).abs() / real_trace(&c_k),
        0.02,
    ));
    out
}

/// RIS phase optimization against direct evaluation, exhaustive search and
/// closed forms.
pub fn optimizer_suite(seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let mut worst_identity: f64 = 0.0;
    for _ in 0..10 {
        let h = random_matrix(2, 4, &mut rng);
        let r1 = random_psd(4, 4, &mut rng);
        let r2 = random_psd(4, 1, &mut rng);
        let obj = build_objective(&[&r1, &r2], &h).expect("shapes");
        for _ in 0..100 {
            let psi = random_phases(4, &mut rng);
            let direct = obj.trace_form(&h, &psi);
            worst_identity = worst_identity.max((obj.value(&psi) - direct).abs() / direct.abs());
        }
    }
    out.push(CheckResult::bounded("quadratic form vs trace objective", worst_identity, 1e-10));

    let mut violations = 0;
    let mut worst_drop: f64 = 0.0;
    for trial in 0..1000 {
        let n = 2 + trial % 15;
        let a = random_psd(n, 1 + trial % n, &mut rng);
        let outcome = power_iteration_with_trace(&a, 100, 0.0);
        for pair in outcome.objective.windows(2) {
            let drop = (pair[0] - pair[1]) / pair[0].abs();
            worst_drop = worst_drop.max(drop);
            if drop > MONOTONE_TOLERANCE {
                violations += 1;
            }
        }
    }
    out.push(CheckResult::new(
        "power iteration objective non-decreasing",
        violations == 0,
        format!("{violations} decreases over 1000 instances, worst relative drop {worst_drop:.2e}"),
    ));

    let mut worst_grid: f64 = 0.0;
    for _ in 0..20 {
        let a = random_psd(3, 3, &mut rng);
        let psi = constrained_power_iteration(&a, 50);
        let (grid, _) = phase_grid_maximum(&a, 64);
        worst_grid = worst_grid.max((grid - quadratic_form(&a, &psi)) / grid);
    }
    out.push(CheckResult::bounded("power iteration vs 64-level phase grid", worst_grid, 0.01));

    // Rank-one A = v v^H: optimum aligns every phase with v.
    let mut worst_align: f64 = 0.0;
    for _ in 0..20 {
        let v = standard_complex_normal(&mut rng, 5);
        let a = &v * v.adjoint();
        let psi = constrained_power_iteration(&a, 10);
        let global = psi[0] * Complex64::from_polar(1.0, -v[0].arg());
        for (p, x) in psi.iter().zip(v.iter()) {
            worst_align = worst_align.max((p - Complex64::from_polar(1.0, x.arg()) * global).norm());
        }
        let optimum = v.iter().map(|x| x.norm()).sum::<f64>().powi(2);
        worst_align = worst_align.max((quadratic_form(&a, &psi) - optimum).abs() / optimum);
    }
    out.push(CheckResult::bounded("rank-one optimum up to global phase", worst_align, 1e-10));

    // One AP with a single antenna and one UE with rank-one correlation:
    // the objective is |Σ h_n r_n ψ_n|², maximized at (Σ |h_n r_n|)².
    let mut worst_gain: f64 = 0.0;
    for _ in 0..20 {
        let h = random_matrix(1, 6, &mut rng);
        let r = standard_complex_normal(&mut rng, 6);
        let obj = build_objective(&[&(&r * r.adjoint())], &h).expect("shapes");
        let psi = constrained_power_iteration(&obj.a, 20);
        let ones = CVector::from_element(6, c(1.0));
        let analytic_best: f64 = (0..6).map(|n| (h[(0, n)] * r[n]).norm()).sum::<f64>().powi(2);
        let analytic_gain = analytic_best - obj.value(&ones);
        let gain = obj.value(&psi) - obj.value(&ones);
        worst_gain = worst_gain.max((gain - analytic_gain).abs() / analytic_best);
    }
    out.push(CheckResult::bounded("rank-one improvement over identity phases", worst_gain, 1e-10));
    out
}

/// Combining and SINR against full-dimensional and eigenvalue references.
pub fn receiver_suite(seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let mut worst_forms: f64 = 0.0;
    let mut worst_scale: f64 = 0.0;
    for _ in 0..100 {
        let serving = random_serving_sets(3, 2, &mut rng);
        let (stats, est, assoc) = random_receiver_instance(serving, 2, 2, &mut rng);
        for k in 0..3 {
            let v = standard_complex_normal(&mut rng, 4);
            let a = instantaneous_sinr(k, &v, &stats, &est, &assoc).expect("shapes");
            let b = rayleigh_quotient_sinr(k, &v, &stats, &est, &assoc).expect("shapes");
            worst_forms = worst_forms.max((a - b).abs() / a.abs().max(f64::MIN_POSITIVE));
            let scaled = &v * Complex64::new(-3.7, 0.2);
            let s = instantaneous_sinr(k, &scaled, &stats, &est, &assoc).expect("shapes");
            worst_scale = worst_scale.max((a - s).abs() / a.abs().max(f64::MIN_POSITIVE));
        }
    }
    out.push(CheckResult::bounded("SINR direct form vs Rayleigh quotient", worst_forms, 1e-12));
    out.push(CheckResult::bounded("SINR invariant to combiner scaling", worst_scale, 1e-12));

    let mut beaten = 0;
    let mut worst_eig: f64 = 0.0;
    let mut worst_support: f64 = 0.0;
    for _ in 0..100 {
        let serving = random_serving_sets(3, 2, &mut rng);
        let (stats, est, assoc) = random_receiver_instance(serving, 2, 2, &mut rng);
        for k in 0..3 {
            let v = mmse_combiner(k, &stats, &est, &assoc).expect("shapes");
            let best = instantaneous_sinr(k, &v, &stats, &est, &assoc).expect("shapes");
            for _ in 0..200 {
                let mut r = standard_complex_normal(&mut rng, 4);
                for l in 0..2 {
                    if !assoc.serves(k, l) {
                        r.rows_mut(2 * l, 2).fill(Complex64::default());
                    }
                }
                if instantaneous_sinr(k, &r, &stats, &est, &assoc).expect("shapes") > best * (1.0 + 1e-12) {
                    beaten += 1;
                }
            }
            let eig = max_sinr_generalized_eigen(k, &stats, &est, &assoc);
            worst_eig = worst_eig.max((eig - best).abs() / eig);
            for l in 0..2 {
                if !assoc.serves(k, l) {
                    worst_support = worst_support.max(v.rows(2 * l, 2).norm());
                }
            }
        }
    }
    out.push(CheckResult::new(
        "MMSE combiner dominates random combiners",
        beaten == 0,
        format!("{beaten} of 60000 random combiners did better"),
    ));
    out.push(CheckResult::bounded("MMSE SINR vs generalized eigenvalue", worst_eig, 1e-8));
    out.push(CheckResult::bounded("combiner supported on serving APs", worst_support, 0.0));

    let mut worst_full: f64 = 0.0;
    let mut worst_reduction: f64 = 0.0;
    let mut dominance_gap: f64 = 0.0;
    for trial in 0..50 {
        let (k_count, l_count, m) = (4, 3, 2);
        let serving = if trial % 2 == 0 {
            random_serving_sets(k_count, l_count, &mut rng)
        } else {
            vec![(0..l_count).collect(); k_count]
        };
        let full_overlap = trial % 2 == 1;
        let (stats, est, assoc) = random_receiver_instance(serving, l_count, m, &mut rng);
        for kind in [CombinerKind::Mmse, CombinerKind::PartialMmse] {
            let plan = CombiningPlan::new(kind, &stats, &assoc).expect("positive definite");
            let fast = plan.combiners(&est, &stats, &assoc).expect("shapes");
            for k in 0..k_count {
                let reference = full_dimension_combiner(k, kind, &stats, &est, &assoc);
                let v = expand_blocks(&fast[k], l_count, m);
                worst_full = worst_full.max((&v - &reference).norm() / reference.norm());
            }
        }
        for k in 0..k_count {
            let v_mmse = mmse_combiner(k, &stats, &est, &assoc).expect("shapes");
            let v_p = pmmse_combiner(k, &stats, &est, &assoc).expect("shapes");
            if full_overlap {
                worst_reduction = worst_reduction.max((&v_mmse - &v_p).norm() / v_mmse.norm());
            }
            let s_mmse = instantaneous_sinr(k, &v_mmse, &stats, &est, &assoc).expect("shapes");
            let s_p = instantaneous_sinr(k, &v_p, &stats, &est, &assoc).expect("shapes");
            dominance_gap = dominance_gap.max((s_p - s_mmse) / s_mmse);
        }
    }
    out.push(CheckResult::bounded("reduced combiner vs full-dimension solve", worst_full, 1e-10));
    out.push(CheckResult::bounded("P-MMSE equals MMSE under full overlap", worst_reduction, 1e-10));
    out.push(CheckResult::bounded("P-MMSE SINR never exceeds MMSE SINR", dominance_gap.max(0.0), 1e-9));
    out
}

/// Every suite, in a fixed order.
pub fn run_suite(seed: u64) -> Vec<CheckResult> {
    let mut out = linalg_suite(seed);
    out.extend(model_suite(seed));
    out.extend(estimation_suite(seed));
    out.extend(optimizer_suite(seed));
    out.extend(receiver_suite(seed));
    out
}
