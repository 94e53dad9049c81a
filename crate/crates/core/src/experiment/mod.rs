//! Monte Carlo orchestration over network realizations and coherence blocks.
//!
//! Each realization draws a network, associates UEs, and then runs every
//! requested scenario on it with its own random stream, so scenarios are
//! paired (same positions, shadowing and correlation matrices) and results
//! do not depend on how realizations are scheduled across threads.

mod report;
mod settings;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use log::{debug, info};
use rand::Rng;
use rayon::prelude::*;

use crate::ap_channel::build_ap_ris_channel;
use crate::association::{assign_pilots_and_clusters, Association};
use crate::config::SimConfig;
use crate::correlation::{ArrayLayout, CorrelationBuilder};
use crate::error::{Error, Result};
use crate::estimation::{effective_covariance, observation_operator, EffectiveStats, LinearMmse, PilotParams};
use crate::linalg::{CMatrix, CVector};
use crate::network::generate_realization;
use crate::receiver::{CollectiveEstimates, CombinerKind, CombiningPlan, ReceiverStats};
use crate::ris::{select_long_term_config, PhaseMode};
use crate::rng::{substream, tag};

pub use report::{
    cdf_file_name, emit_report, manifest_text, read_cdf_csv, read_samples_csv, EmittedFiles, ScenarioReport, SeReport,
    SeSample, MANIFEST_FILE, SAMPLES_FILE,
};
pub use settings::{parse_settings, read_settings, write_settings, Settings};

/// The four compared access-point architectures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scenario {
    /// `M` antennas behind an RIS with statistically optimized phases.
    RisOptimized,
    /// `M` antennas behind an RIS with uniformly random phases.
    RisRandom,
    /// Conventional array of `M` antennas.
    NoRisSmall,
    /// Conventional array with as many antennas as RIS elements, laid out
    /// like the RIS.
    NoRisLarge,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::RisOptimized,
        Scenario::RisRandom,
        Scenario::NoRisSmall,
        Scenario::NoRisLarge,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::RisOptimized => "ris_optimized",
            Scenario::RisRandom => "ris_random",
            Scenario::NoRisSmall => "no_ris_small",
            Scenario::NoRisLarge => "no_ris_large",
        }
    }

    pub fn uses_ris(&self) -> bool {
        matches!(self, Scenario::RisOptimized | Scenario::RisRandom)
    }

    fn stream_tag(&self) -> u64 {
        tag::SCENARIO_BASE
            + match self {
                Scenario::RisOptimized => 0,
                Scenario::RisRandom => 1,
                Scenario::NoRisSmall => 2,
                Scenario::NoRisLarge => 3,
            }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                Error::config(
                    "scenario",
                    format!("unknown scenario `{s}` (expected one of ris_optimized, ris_random, no_ris_small, no_ris_large)"),
                )
            })
    }
}

pub fn combiner_name(kind: CombinerKind) -> &'static str {
    match kind {
        CombinerKind::Mmse => "mmse",
        CombinerKind::PartialMmse => "p-mmse",
    }
}

pub fn parse_combiner(s: &str) -> Result<CombinerKind> {
    match s {
        "mmse" => Ok(CombinerKind::Mmse),
        "p-mmse" | "pmmse" => Ok(CombinerKind::PartialMmse),
        _ => Err(Error::config("combiner", format!("unknown combiner `{s}` (expected mmse or p-mmse)"))),
    }
}

/// Everything needed to run one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub config: SimConfig,
    pub scenarios: Vec<Scenario>,
    pub combiner: CombinerKind,
    pub out_dir: Option<PathBuf>,
    /// Worker threads; does not affect results.
    pub threads: usize,
}

impl ExperimentSpec {
    /// All four scenarios, P-MMSE combining, one thread, no output.
    pub fn new(config: SimConfig) -> Self {
        ExperimentSpec {
            config,
            scenarios: Scenario::ALL.to_vec(),
            combiner: CombinerKind::PartialMmse,
            out_dir: None,
            threads: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.threads == 0 {
            return Err(Error::config("threads", "must be at least 1"));
        }
        for (i, s) in self.scenarios.iter().enumerate() {
            if self.scenarios[..i].contains(s) {
                return Err(Error::config("scenario", format!("`{s}` listed twice")));
            }
        }
        Ok(())
    }
}

/// Runs the Monte Carlo experiment.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<SeReport> {
    spec.validate()?;
    let cfg = &spec.config;
    let channels: Vec<CMatrix> = if spec.scenarios.iter().any(Scenario::uses_ris) {
        (0..cfg.num_aps)
            .map(|l| build_ap_ris_channel(cfg, l))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.threads)
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))?;
    info!(
        "running {} realizations x {} blocks for {} scenario(s) on {} thread(s)",
        cfg.mc_setups,
        cfg.mc_channel_realizations,
        spec.scenarios.len(),
        spec.threads
    );
    let per_realization: Vec<Result<Vec<Vec<f64>>>> = pool.install(|| {
        (0..cfg.mc_setups)
            .into_par_iter()
            .map(|r| run_realization(cfg, r, &spec.scenarios, &channels, spec.combiner))
            .collect()
    });
    let mut scenarios: Vec<ScenarioReport> = spec
        .scenarios
        .iter()
        .map(|&scenario| ScenarioReport {
            scenario,
            samples: Vec::with_capacity(cfg.mc_setups * cfg.num_ues),
        })
        .collect();
    for (r, result) in per_realization.into_iter().enumerate() {
        for (report, se) in scenarios.iter_mut().zip(result?) {
            report
                .samples
                .extend(se.into_iter().enumerate().map(|(ue, se)| SeSample { realization: r, ue, se }));
        }
    }
    Ok(SeReport {
        config: cfg.clone(),
        combiner: spec.combiner,
        scenarios,
    })
}

/// Per-UE SE of every scenario for network realization `index`.
pub fn run_realization(
    cfg: &SimConfig,
    index: usize,
    scenarios: &[Scenario],
    channels: &[CMatrix],
    combiner: CombinerKind,
) -> Result<Vec<Vec<f64>>> {
    let mut net_rng = substream(cfg.seed, index as u64, tag::NETWORK);
    let net = generate_realization(cfg, &mut net_rng)?;
    let assoc = assign_pilots_and_clusters(&net.beta, cfg.pilot_samples)?;
    let builder = CorrelationBuilder::from_config(cfg);
    let correlations = |layout: &ArrayLayout| -> Vec<Vec<CMatrix>> {
        (0..cfg.num_ues)
            .map(|k| {
                (0..cfg.num_aps)
                    .map(|l| builder.build(layout, net.direction(k, l, cfg), net.beta[(k, l)]))
                    .collect()
            })
            .collect()
    };
    let large = scenarios
        .iter()
        .any(|s| *s != Scenario::NoRisSmall)
        .then(|| correlations(&ArrayLayout::ris(cfg)));
    let small = scenarios
        .contains(&Scenario::NoRisSmall)
        .then(|| correlations(&ArrayLayout::antennas(cfg)));

    let mut out = Vec::with_capacity(scenarios.len());
    for &scenario in scenarios {
        let mut rng = substream(cfg.seed, index as u64, scenario.stream_tag());
        let se = match scenario {
            Scenario::RisOptimized | Scenario::RisRandom => {
                let r = large.as_ref().expect("element-domain correlations");
                let mode = if scenario == Scenario::RisOptimized {
                    PhaseMode::Optimized
                } else {
                    PhaseMode::Random
                };
                let phases = select_long_term_config(r, channels, &assoc, cfg, mode, &mut rng)?;
                let operators: Vec<CMatrix> = channels
                    .iter()
                    .enumerate()
                    .map(|(l, h)| observation_operator(h, phases.psi(l)))
                    .collect();
                let q: Vec<Vec<CMatrix>> = r
                    .iter()
                    .map(|row| row.iter().zip(&operators).map(|(r_kl, phi)| effective_covariance(phi, r_kl)).collect())
                    .collect();
                simulate_blocks(cfg, &assoc, &q, combiner, &mut rng)?
            }
            Scenario::NoRisSmall => simulate_blocks(cfg, &assoc, small.as_ref().expect("array correlations"), combiner, &mut rng)?,
            Scenario::NoRisLarge => simulate_blocks(cfg, &assoc, large.as_ref().expect("array correlations"), combiner, &mut rng)?,
        };
        debug!("realization {index} {scenario}: mean SE {}", se.iter().sum::<f64>() / se.len() as f64);
        out.push(se);
    }
    Ok(out)
}

/// Runs `mc_channel_realizations` coherence blocks on effective channels
/// with covariances `q[k][l]` and returns the per-UE SE.
pub fn simulate_blocks<R: Rng + ?Sized>(
    cfg: &SimConfig,
    assoc: &Association,
    q: &[Vec<CMatrix>],
    combiner: CombinerKind,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let num_ues = assoc.num_ues();
    let num_aps = assoc.num_aps();
    let num_pilots = assoc.num_pilots();
    let dim = q.first().and_then(|row| row.first()).map_or(0, |m| m.nrows());
    let params = PilotParams::from_config(cfg);

    let pilot_users: Vec<Vec<usize>> = (0..num_pilots).map(|t| assoc.pilot_users(t)).collect();
    // pilot_stats[l][t]: statistics of the pilot-`t` observation at AP `l`.
    let mut pilot_stats: Vec<Vec<Option<EffectiveStats>>> = Vec::with_capacity(num_aps);
    let mut estimators: Vec<Vec<Option<LinearMmse>>> = vec![vec![None; num_aps]; num_ues];
    for l in 0..num_aps {
        let mut row = Vec::with_capacity(num_pilots);
        for users in &pilot_users {
            if users.is_empty() {
                row.push(None);
                continue;
            }
            let covs: Vec<&CMatrix> = users.iter().map(|&i| &q[i][l]).collect();
            let stats = EffectiveStats::new(&covs, dim, &params)?;
            for &k in users {
                estimators[k][l] = Some(LinearMmse::effective(&stats, &q[k][l], &params));
            }
            row.push(Some(stats));
        }
        pilot_stats.push(row);
    }
    let estimators: Vec<Vec<LinearMmse>> = estimators
        .into_iter()
        .map(|row| row.into_iter().map(|e| e.expect("every UE has a pilot")).collect())
        .collect();
    let error_cov = estimators
        .iter()
        .map(|row| row.iter().map(|e| e.error_cov.clone()).collect())
        .collect();
    let stats = ReceiverStats::new(vec![cfg.data_power_w; num_ues], cfg.noise_power_w, error_cov)?;
    let plan = CombiningPlan::new(combiner, &stats, assoc)?;

    let mut acc = vec![0.0; num_ues];
    let mut est = CollectiveEstimates {
        blocks: vec![vec![CVector::zeros(dim); num_aps]; num_ues],
    };
    for _ in 0..cfg.mc_channel_realizations {
        // Only the estimates enter the SINR, and the pilot statistic of
        // pilot `t` at AP `l` is CN(0, G_tl) independently over `(t, l)`, so
        // it is drawn directly instead of through the channels.
        for (l, row) in pilot_stats.iter().enumerate() {
            for (users, stats_tl) in pilot_users.iter().zip(row) {
                let Some(stats_tl) = stats_tl else { continue };
                let z = stats_tl.sample_statistic(rng);
                for &k in users {
                    est.blocks[k][l] = estimators[k][l].estimate(&z);
                }
            }
        }
        for (a, sinr) in acc.iter_mut().zip(plan.block_sinr(&est, &stats, assoc)?) {
            *a += (1.0 + sinr).log2();
        }
    }
    let blocks = cfg.mc_channel_realizations as f64;
    Ok(acc.into_iter().map(|a| cfg.prelog_factor() * a / blocks).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SimConfig {
        SimConfig {
            num_aps: 3,
            num_ues: 2,
            antennas_per_ap: 2,
            ris_rows: 2,
            ris_cols: 2,
            area_side_m: 200.0,
            pilot_samples: 1,
            quadrature_nodes: 8,
            mc_setups: 2,
            mc_channel_realizations: 3,
            seed: 11,
            ..SimConfig::default()
        }
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert!("ris".parse::<Scenario>().is_err());
    }

    #[test]
    fn smoke_single_everything() {
        let cfg = SimConfig {
            num_aps: 1,
            num_ues: 1,
            mc_setups: 1,
            mc_channel_realizations: 1,
            ..tiny()
        };
        let report = run_experiment(&ExperimentSpec::new(cfg)).unwrap();
        for s in &report.scenarios {
            assert_eq!(s.samples.len(), 1);
            assert!(s.samples[0].se >= 0.0);
        }
    }

    #[test]
    fn sample_count_and_determinism() {
        let spec = ExperimentSpec::new(tiny());
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        assert_eq!(a, b);
        for s in &a.scenarios {
            assert_eq!(s.samples.len(), 4);
        }
    }

    #[test]
    fn scenario_subset_does_not_change_results() {
        let full = run_experiment(&ExperimentSpec::new(tiny())).unwrap();
        let spec = ExperimentSpec {
            scenarios: vec![Scenario::NoRisLarge],
            ..ExperimentSpec::new(tiny())
        };
        let only = run_experiment(&spec).unwrap();
        assert_eq!(only.scenarios[0], full.scenarios[3]);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = ExperimentSpec::new(tiny());
        spec.threads = 0;
        assert!(matches!(run_experiment(&spec), Err(Error::Config { field, .. }) if field == "threads"));
        let mut spec = ExperimentSpec::new(tiny());
        spec.scenarios = vec![Scenario::RisRandom, Scenario::RisRandom];
        assert!(spec.validate().is_err());
        let mut spec = ExperimentSpec::new(tiny());
        spec.config.num_aps = 0;
        assert!(matches!(run_experiment(&spec), Err(Error::Config { field, .. }) if field == "num_aps"));
    }
}
