//! Centralized uplink combining, instantaneous SINR and spectral efficiency.
//!
//! All quantities live in the effective antenna domain: the estimate of UE
//! `i` at AP `l` is `ĝ_il = H_l Ψ_l ĥ_il` (length `M`) and its error
//! covariance `H_l Ψ_l C_il Ψ_l^H H_l^H`. Collective vectors stack the `L`
//! per-AP blocks. Combiners only ever touch the blocks of the serving APs
//! `M_k`, so every computation is carried out on that subspace.

use num_complex::Complex64;

use crate::association::Association;
use crate::error::{Error, Result};
use crate::linalg::{solve_pd, CMatrix, CVector, Cholesky};

/// Long-term receiver statistics of one network realization and RIS
/// configuration.
#[derive(Clone, Debug)]
pub struct ReceiverStats {
    pub data_power: Vec<f64>,
    pub noise_power: f64,
    pub ap_dim: usize,
    /// `[i][l]`: effective error covariance of UE `i` at AP `l`.
    pub error_cov: Vec<Vec<CMatrix>>,
    /// `[l]`: `Σ_i η_i` times the error covariance of UE `i` at AP `l`.
    weighted_error: Vec<CMatrix>,
}

impl ReceiverStats {
    pub fn new(data_power: Vec<f64>, noise_power: f64, error_cov: Vec<Vec<CMatrix>>) -> Result<Self> {
        if data_power.len() != error_cov.len() {
            return Err(Error::dimension("receiver stats", data_power.len(), error_cov.len()));
        }
        let num_aps = error_cov.first().map_or(0, Vec::len);
        let ap_dim = error_cov
            .first()
            .and_then(|row| row.first())
            .map_or(0, |c| c.nrows());
        let mut weighted_error = vec![CMatrix::zeros(ap_dim, ap_dim); num_aps];
        for (i, row) in error_cov.iter().enumerate() {
            if row.len() != num_aps {
                return Err(Error::dimension("receiver stats row", num_aps, row.len()));
            }
            for (l, c) in row.iter().enumerate() {
                if c.shape() != (ap_dim, ap_dim) {
                    return Err(Error::dimension("error covariance", ap_dim, c.nrows()));
                }
                weighted_error[l] += c * Complex64::from(data_power[i]);
            }
        }
        Ok(ReceiverStats {
            data_power,
            noise_power,
            ap_dim,
            error_cov,
            weighted_error,
        })
    }

    pub fn num_ues(&self) -> usize {
        self.data_power.len()
    }

    pub fn num_aps(&self) -> usize {
        self.weighted_error.len()
    }

    /// `Σ_i η_i C_il` in the effective domain (the `l`-th block of `Z_k`).
    pub fn weighted_error(&self, l: usize) -> &CMatrix {
        &self.weighted_error[l]
    }
}

/// Channel estimates of one coherence block, `[i][l]`.
#[derive(Clone, Debug)]
pub struct CollectiveEstimates {
    pub blocks: Vec<Vec<CVector>>,
}

impl CollectiveEstimates {
    pub fn stacked(&self, i: usize) -> CVector {
        let parts = &self.blocks[i];
        let dim = parts.first().map_or(0, |p| p.len());
        let mut out = CVector::zeros(parts.len() * dim);
        for (l, p) in parts.iter().enumerate() {
            out.rows_mut(l * dim, dim).copy_from(p);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CombinerKind {
    /// Interference statistics of all UEs.
    Mmse,
    /// Interference statistics restricted to UEs sharing a serving AP.
    PartialMmse,
}

impl CombinerKind {
    pub fn interferers(&self, k: usize, assoc: &Association) -> Vec<usize> {
        match self {
            CombinerKind::Mmse => (0..assoc.num_ues()).collect(),
            CombinerKind::PartialMmse => assoc.overlapping_ues(k),
        }
    }
}

fn check_shapes(stats: &ReceiverStats, est: &CollectiveEstimates, assoc: &Association) -> Result<()> {
    if est.blocks.len() != stats.num_ues() || assoc.num_ues() != stats.num_ues() {
        return Err(Error::dimension("UE count", stats.num_ues(), est.blocks.len()));
    }
    if est.blocks.iter().any(|row| row.len() != stats.num_aps()) || assoc.num_aps() != stats.num_aps() {
        return Err(Error::dimension("AP count", stats.num_aps(), assoc.num_aps()));
    }
    Ok(())
}

/// Dense solve of the combining problem on the serving subspace of `k`,
/// with interference statistics taken from `interferers`.
fn dense_combiner(
    k: usize,
    interferers: &[usize],
    stats: &ReceiverStats,
    est: &CollectiveEstimates,
    assoc: &Association,
) -> Result<CVector> {
    check_shapes(stats, est, assoc)?;
    let m = stats.ap_dim;
    let aps = assoc.serving_aps(k);
    let d = aps.len() * m;
    let mut full = CVector::zeros(stats.num_aps() * m);
    if d == 0 {
        return Ok(full);
    }
    let restricted = |i: usize| {
        let mut g = CVector::zeros(d);
        for (a, &l) in aps.iter().enumerate() {
            g.rows_mut(a * m, m).copy_from(&est.blocks[i][l]);
        }
        g
    };
    let mut mat = CMatrix::identity(d, d) * Complex64::from(stats.noise_power);
    for &i in interferers {
        let g = restricted(i);
        let eta = Complex64::from(stats.data_power[i]);
        mat += (&g * g.adjoint()) * eta;
        for (a, &l) in aps.iter().enumerate() {
            let mut block = mat.view_mut((a * m, a * m), (m, m));
            block += &stats.error_cov[i][l] * eta;
        }
    }
    let v = solve_pd(&mat, &(restricted(k) * Complex64::from(stats.data_power[k])))?;
    for (a, &l) in aps.iter().enumerate() {
        full.rows_mut(l * m, m).copy_from(&v.rows(a * m, m));
    }
    Ok(full)
}

/// MMSE combiner of UE `k` (length `L·M`, zero outside `M_k`).
pub fn mmse_combiner(k: usize, stats: &ReceiverStats, est: &CollectiveEstimates, assoc: &Association) -> Result<CVector> {
    dense_combiner(k, &CombinerKind::Mmse.interferers(k, assoc), stats, est, assoc)
}

/// P-MMSE combiner of UE `k`: the MMSE construction restricted to `S_k`.
pub fn pmmse_combiner(k: usize, stats: &ReceiverStats, est: &CollectiveEstimates, assoc: &Association) -> Result<CVector> {
    dense_combiner(k, &CombinerKind::PartialMmse.interferers(k, assoc), stats, est, assoc)
}

/// Block-sparse combiner: `(l, v_kl)` for every serving AP `l`.
pub type CombinerBlocks = Vec<(usize, CVector)>;

fn blocks_of(k: usize, v: &CVector, m: usize, assoc: &Association) -> CombinerBlocks {
    assoc
        .serving_aps(k)
        .iter()
        .map(|&l| (l, v.rows(l * m, m).clone_owned()))
        .collect()
}

/// SINR terms `(signal, interference, estimation error, noise)`.
fn sinr_terms(k: usize, v: &[(usize, CVector)], stats: &ReceiverStats, est: &CollectiveEstimates) -> (f64, f64, f64, f64) {
    let inner = |i: usize| -> Complex64 { v.iter().map(|(l, vl)| vl.dotc(&est.blocks[i][*l])).sum() };
    let signal = stats.data_power[k] * inner(k).norm_sqr();
    let interference: f64 = (0..stats.num_ues())
        .filter(|&i| i != k)
        .map(|i| stats.data_power[i] * inner(i).norm_sqr())
        .sum();
    let error: f64 = v
        .iter()
        .map(|(l, vl)| vl.dotc(&(stats.weighted_error(*l) * vl)).re)
        .sum();
    let noise = stats.noise_power * v.iter().map(|(_, vl)| vl.norm_squared()).sum::<f64>();
    (signal, interference, error, noise)
}

fn sinr_from_blocks(k: usize, v: &[(usize, CVector)], stats: &ReceiverStats, est: &CollectiveEstimates) -> f64 {
    let (signal, interference, error, noise) = sinr_terms(k, v, stats, est);
    let denominator = interference + error + noise;
    if denominator > 0.0 {
        signal / denominator
    } else {
        0.0
    }
}

/// Instantaneous SINR of UE `k` for an arbitrary combiner `v` (length
/// `L·M`; blocks outside `M_k` are ignored, as `D_k v` is used).
pub fn instantaneous_sinr(
    k: usize,
    v: &CVector,
    stats: &ReceiverStats,
    est: &CollectiveEstimates,
    assoc: &Association,
) -> Result<f64> {
    check_shapes(stats, est, assoc)?;
    let m = stats.ap_dim;
    if v.len() != stats.num_aps() * m {
        return Err(Error::dimension("combiner length", stats.num_aps() * m, v.len()));
    }
    Ok(sinr_from_blocks(k, &blocks_of(k, v, m, assoc), stats, est))
}

/// The denominator matrix of the generalized Rayleigh quotient,
/// `Σ_{i≠k} η_i D_k ĝ_i ĝ_i^H D_k + Z_k + σ² D_k`, in full `L·M` dimension.
pub fn rayleigh_denominator(k: usize, stats: &ReceiverStats, est: &CollectiveEstimates, assoc: &Association) -> CMatrix {
    let m = stats.ap_dim;
    let dim = stats.num_aps() * m;
    let mask = |x: CVector| -> CVector {
        let mut out = CVector::zeros(dim);
        for &l in assoc.serving_aps(k) {
            out.rows_mut(l * m, m).copy_from(&x.rows(l * m, m));
        }
        out
    };
    let mut den = CMatrix::zeros(dim, dim);
    for i in (0..stats.num_ues()).filter(|&i| i != k) {
        let g = mask(est.stacked(i));
        den += (&g * g.adjoint()) * Complex64::from(stats.data_power[i]);
    }
    for &l in assoc.serving_aps(k) {
        let mut block = den.view_mut((l * m, l * m), (m, m));
        block += stats.weighted_error(l);
        block += CMatrix::identity(m, m) * Complex64::from(stats.noise_power);
    }
    den
}

/// SINR written as the generalized Rayleigh quotient
/// `η_k |v^H D_k ĝ_k|² / (v^H Den v)`.
pub fn rayleigh_quotient_sinr(
    k: usize,
    v: &CVector,
    stats: &ReceiverStats,
    est: &CollectiveEstimates,
    assoc: &Association,
) -> Result<f64> {
    check_shapes(stats, est, assoc)?;
    let m = stats.ap_dim;
    let mut g = CVector::zeros(stats.num_aps() * m);
    for &l in assoc.serving_aps(k) {
        g.rows_mut(l * m, m).copy_from(&est.blocks[k][l]);
    }
    let numerator = stats.data_power[k] * v.dotc(&g).norm_sqr();
    let denominator = v.dotc(&(rayleigh_denominator(k, stats, est, assoc) * v)).re;
    Ok(if denominator > 0.0 { numerator / denominator } else { 0.0 })
}

/// `(τ_c - τ_p)/τ_c` times the sample mean of `log2(1 + SINR)`.
pub fn spectral_efficiency(sinr_samples: &[f64], coherence_samples: usize, pilot_samples: usize) -> Result<f64> {
    if sinr_samples.is_empty() {
        return Err(Error::dimension("spectral_efficiency", "at least one sample", 0));
    }
    let prelog = (coherence_samples - pilot_samples) as f64 / coherence_samples as f64;
    let mean = sinr_samples.iter().map(|s| (1.0 + s).log2()).sum::<f64>() / sinr_samples.len() as f64;
    Ok(prelog * mean)
}

/// UEs sharing one interferer set, with per-AP factorizations of
/// `Σ_{i ∈ set} η_i C_il + σ² I` over the union of their serving APs.
#[derive(Clone, Debug)]
struct Group {
    interferers: Vec<usize>,
    members: Vec<usize>,
    aps: Vec<usize>,
    factors: Vec<Cholesky>,
}

/// Combiner computation for every UE of a block, reusing the long-term
/// factorizations across coherence blocks.
///
/// The combining matrix of UE `k` is a block-diagonal part (error
/// covariances plus noise, fixed per realization) plus a low-rank part
/// `G E G^H` from the current estimates, so it is inverted with the Woodbury
/// identity: per-AP triangular solves and one `|S_k| × |S_k|` system.
#[derive(Clone, Debug)]
pub struct CombiningPlan {
    kind: CombinerKind,
    groups: Vec<Group>,
}

impl CombiningPlan {
    pub fn new(kind: CombinerKind, stats: &ReceiverStats, assoc: &Association) -> Result<Self> {
        let mut groups: Vec<Group> = Vec::new();
        for k in 0..assoc.num_ues() {
            let interferers = kind.interferers(k, assoc);
            match groups.iter_mut().find(|g| g.interferers == interferers) {
                Some(g) => g.members.push(k),
                None => groups.push(Group {
                    interferers,
                    members: vec![k],
                    aps: Vec::new(),
                    factors: Vec::new(),
                }),
            }
        }
        let m = stats.ap_dim;
        for group in &mut groups {
            let mut aps: Vec<usize> = group
                .members
                .iter()
                .flat_map(|&k| assoc.serving_aps(k).iter().copied())
                .collect();
            aps.sort_unstable();
            aps.dedup();
            let mut factors = Vec::with_capacity(aps.len());
            for &l in &aps {
                let mut base = CMatrix::identity(m, m) * Complex64::from(stats.noise_power);
                for &i in &group.interferers {
                    base += &stats.error_cov[i][l] * Complex64::from(stats.data_power[i]);
                }
                factors.push(Cholesky::new(&base)?);
            }
            group.aps = aps;
            group.factors = factors;
        }
        Ok(CombiningPlan { kind, groups })
    }

    pub fn kind(&self) -> CombinerKind {
        self.kind
    }

    /// Combiners of all UEs for one block of estimates.
    pub fn combiners(&self, est: &CollectiveEstimates, stats: &ReceiverStats, assoc: &Association) -> Result<Vec<CombinerBlocks>> {
        check_shapes(stats, est, assoc)?;
        let mut out: Vec<CombinerBlocks> = vec![Vec::new(); assoc.num_ues()];
        for group in &self.groups {
            let s = group.interferers.len();
            let naps = group.aps.len();
            // w[j * naps + a] = L^{-1} ĝ_{s_j, l} with B_l = L L^H and l = aps[a].
            let mut w = Vec::with_capacity(s * naps);
            for &j in &group.interferers {
                for (a, &l) in group.aps.iter().enumerate() {
                    let mut x = est.blocks[j][l].clone();
                    group.factors[a].forward_in_place(x.as_mut_slice());
                    w.push(x);
                }
            }
            // gram[a](i, j) = ĝ_{s_i, l}^H B_l^{-1} ĝ_{s_j, l}.
            let mut gram = vec![CMatrix::zeros(s, s); naps];
            for (a, p) in gram.iter_mut().enumerate() {
                for i in 0..s {
                    let wi = &w[i * naps + a];
                    for j in i..s {
                        let value = wi.dotc(&w[j * naps + a]);
                        p[(i, j)] = value;
                        p[(j, i)] = value.conj();
                    }
                }
            }
            for &k in &group.members {
                let serving = assoc.serving_aps(k);
                if serving.is_empty() {
                    continue;
                }
                let kk = group
                    .interferers
                    .iter()
                    .position(|&i| i == k)
                    .expect("a served UE overlaps with itself");
                let local: Vec<usize> = serving
                    .iter()
                    .map(|l| group.aps.binary_search(l).expect("serving AP in group"))
                    .collect();
                let mut t = CMatrix::zeros(s, s);
                for &a in &local {
                    t += &gram[a];
                }
                let rhs = t.column(kk).clone_owned();
                for (idx, &i) in group.interferers.iter().enumerate() {
                    t[(idx, idx)] += Complex64::from(1.0 / stats.data_power[i]);
                }
                let c = Cholesky::new(&t)?.solve(&rhs);
                let eta = Complex64::from(stats.data_power[k]);
                let blocks = serving
                    .iter()
                    .zip(&local)
                    .map(|(&l, &a)| {
                        let mut u = w[kk * naps + a].clone();
                        for (j, cj) in c.iter().enumerate() {
                            u.axpy(-*cj, &w[j * naps + a], Complex64::from(1.0));
                        }
                        group.factors[a].backward_in_place(u.as_mut_slice());
                        (l, u * eta)
                    })
                    .collect();
                out[k] = blocks;
            }
        }
        Ok(out)
    }

    /// Per-UE SINR of one block with this plan's combiners.
    pub fn block_sinr(&self, est: &CollectiveEstimates, stats: &ReceiverStats, assoc: &Association) -> Result<Vec<f64>> {
        let combiners = self.combiners(est, stats, assoc)?;
        Ok(combiners
            .iter()
            .enumerate()
            .map(|(k, v)| sinr_from_blocks(k, v, stats, est))
            .collect())
    }
}

/// Expands block form into a length `L·M` vector.
pub fn expand_blocks(blocks: &[(usize, CVector)], num_aps: usize, ap_dim: usize) -> CVector {
    let mut out = CVector::zeros(num_aps * ap_dim);
    for (l, v) in blocks {
        out.rows_mut(l * ap_dim, ap_dim).copy_from(v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(v: &[f64]) -> CVector {
        CVector::from_iterator(v.len(), v.iter().map(|&x| Complex64::from(x)))
    }

    #[test]
    fn single_user_closed_form() {
        let stats = ReceiverStats::new(vec![1.0], 1.0, vec![vec![CMatrix::zeros(2, 2)]]).unwrap();
        let g = cv(&[2.0, 0.0]);
        let est = CollectiveEstimates {
            blocks: vec![vec![g.clone()]],
        };
        let assoc = Association::from_sets(vec![0], vec![vec![0]], 1, 1).unwrap();
        let sinr = instantaneous_sinr(0, &g, &stats, &est, &assoc).unwrap();
        assert!((sinr - 4.0).abs() < 1e-14);
        let se = spectral_efficiency(&[sinr], 200, 10).unwrap();
        assert!((se - 0.95 * 5f64.log2()).abs() < 1e-14);

        // Matched filter direction.
        let v = mmse_combiner(0, &stats, &est, &assoc).unwrap();
        let cos = v.dotc(&g).norm() / (v.norm() * g.norm());
        assert!((cos - 1.0).abs() < 1e-12);

        let orth = cv(&[0.0, 1.0]);
        assert_eq!(instantaneous_sinr(0, &orth, &stats, &est, &assoc).unwrap(), 0.0);
    }

    #[test]
    fn se_arithmetic() {
        assert_eq!(spectral_efficiency(&[0.0, 0.0], 200, 10).unwrap(), 0.0);
        assert!((spectral_efficiency(&[3.0; 4], 200, 10).unwrap() - 1.9).abs() < 1e-14);
        assert!((spectral_efficiency(&[1.0, 3.0], 200, 10).unwrap() - 1.425).abs() < 1e-14);
        assert!(spectral_efficiency(&[], 200, 10).is_err());
    }

    #[test]
    fn zero_forcing_limit() {
        let zero = CMatrix::zeros(2, 2);
        let stats = ReceiverStats::new(vec![1.0, 1.0], 1e-10, vec![vec![zero.clone()], vec![zero]]).unwrap();
        let est = CollectiveEstimates {
            blocks: vec![vec![cv(&[1.0, 1.0])], vec![cv(&[1.0, -1.0])]],
        };
        let assoc = Association::from_sets(vec![0, 1], vec![vec![0], vec![0]], 1, 2).unwrap();
        let v0 = mmse_combiner(0, &stats, &est, &assoc).unwrap();
        let leak = v0.dotc(&est.blocks[1][0]).norm() / v0.norm();
        assert!(leak < 1e-8);
    }

    #[test]
    fn disjoint_clusters_ignore_each_other() {
        let zero = CMatrix::zeros(1, 1);
        let stats = ReceiverStats::new(
            vec![1.0, 2.0],
            0.5,
            vec![vec![zero.clone(), zero.clone()], vec![zero.clone(), zero]],
        )
        .unwrap();
        let est = CollectiveEstimates {
            blocks: vec![vec![cv(&[1.0]), cv(&[0.3])], vec![cv(&[0.7]), cv(&[2.0])]],
        };
        let assoc = Association::from_sets(vec![0, 0], vec![vec![0], vec![1]], 2, 1).unwrap();
        assert_eq!(assoc.overlapping_ues(0), vec![0]);
        let v = pmmse_combiner(0, &stats, &est, &assoc).unwrap();
        // Single-user MMSE on AP 0: η g / (η |g|² + σ²).
        let expected = 1.0 / (1.0 + 0.5);
        assert!((v[0].re - expected).abs() < 1e-14);
        assert_eq!(v[1], Complex64::default());
    }

    fn random_instance(seed: u64) -> (ReceiverStats, CollectiveEstimates, Association) {
        use crate::linalg::standard_complex_normal;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (k_count, l_count, m) = (5, 4, 3);
        let error_cov = (0..k_count)
            .map(|_| {
                (0..l_count)
                    .map(|_| {
                        let x = CMatrix::from_fn(m, m, |_, _| standard_complex_normal(&mut rng, 1)[0]);
                        &x * x.adjoint() * Complex64::from(rng.random::<f64>())
                    })
                    .collect()
            })
            .collect();
        let powers = (0..k_count).map(|_| 0.5 + rng.random::<f64>()).collect();
        let stats = ReceiverStats::new(powers, 0.3, error_cov).unwrap();
        let est = CollectiveEstimates {
            blocks: (0..k_count)
                .map(|_| (0..l_count).map(|_| standard_complex_normal(&mut rng, m)).collect())
                .collect(),
        };
        let serving = vec![vec![0], vec![0, 1], vec![2], vec![2, 3], vec![3]];
        let assoc = Association::from_sets(vec![0, 1, 0, 1, 2], serving, l_count, 3).unwrap();
        (stats, est, assoc)
    }

    #[test]
    fn plan_matches_dense_solve() {
        for seed in 0..5 {
            let (stats, est, assoc) = random_instance(seed);
            for (kind, dense) in [
                (CombinerKind::Mmse, mmse_combiner as fn(usize, &ReceiverStats, &CollectiveEstimates, &Association) -> Result<CVector>),
                (CombinerKind::PartialMmse, pmmse_combiner),
            ] {
                let plan = CombiningPlan::new(kind, &stats, &assoc).unwrap();
                let fast = plan.combiners(&est, &stats, &assoc).unwrap();
                for k in 0..assoc.num_ues() {
                    let reference = dense(k, &stats, &est, &assoc).unwrap();
                    let v = expand_blocks(&fast[k], stats.num_aps(), stats.ap_dim);
                    assert!((&v - &reference).norm() <= 1e-10 * reference.norm(), "{kind:?} UE {k}");
                }
            }
        }
    }
}
