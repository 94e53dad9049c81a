//! SE reports and their CSV / manifest serialization.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::receiver::CombinerKind;

use super::settings::write_settings;
use super::Scenario;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeSample {
    pub realization: usize,
    pub ue: usize,
    /// bit/s/Hz.
    pub se: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub samples: Vec<SeSample>,
}

impl ScenarioReport {
    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.se).collect()
    }

    fn sorted(&self) -> Vec<f64> {
        let mut v = self.values();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Empirical CDF: sorted values with cumulative probability `i / n`.
    pub fn cdf(&self) -> Vec<(f64, f64)> {
        let v = self.sorted();
        let n = v.len() as f64;
        v.into_iter()
            .enumerate()
            .map(|(i, x)| (x, (i + 1) as f64 / n))
            .collect()
    }

    /// Quantile with linear interpolation between order statistics
    /// (`p` in `[0, 1]`); `None` for an empty report.
    pub fn quantile(&self, p: f64) -> Option<f64> {
        quantile(&self.sorted(), p)
    }

    pub fn median(&self) -> Option<f64> {
        self.quantile(0.5)
    }

    pub fn percentile_10(&self) -> Option<f64> {
        self.quantile(0.1)
    }
}

/// Quantile of already sorted data.
pub(crate) fn quantile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeReport {
    pub config: SimConfig,
    pub combiner: CombinerKind,
    pub scenarios: Vec<ScenarioReport>,
}

impl SeReport {
    pub fn scenario(&self, scenario: Scenario) -> Option<&ScenarioReport> {
        self.scenarios.iter().find(|s| s.scenario == scenario)
    }

    pub fn median(&self, scenario: Scenario) -> Option<f64> {
        self.scenario(scenario).and_then(ScenarioReport::median)
    }
}

/// Paths written by [`emit_report`].
#[derive(Clone, Debug, Default)]
pub struct EmittedFiles {
    pub manifest: PathBuf,
    pub samples: Option<PathBuf>,
    pub cdfs: Vec<PathBuf>,
}

pub const SAMPLES_FILE: &str = "se_samples.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";

pub fn cdf_file_name(scenario: Scenario) -> String {
    format!("cdf_{}.csv", scenario.name())
}

/// Writes `se_samples.csv`, one `cdf_<scenario>.csv` per scenario and
/// `manifest.txt` into `dir` (created if needed). With no scenarios only the
/// manifest is written.
pub fn emit_report(report: &SeReport, dir: &Path) -> Result<EmittedFiles> {
    fs::create_dir_all(dir)?;
    let mut files = EmittedFiles {
        manifest: dir.join(MANIFEST_FILE),
        ..EmittedFiles::default()
    };
    if !report.scenarios.is_empty() {
        let path = dir.join(SAMPLES_FILE);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["scenario", "realization", "ue", "se"])?;
        for s in &report.scenarios {
            for x in &s.samples {
                w.write_record([
                    s.scenario.name().to_string(),
                    x.realization.to_string(),
                    x.ue.to_string(),
                    format!("{}", x.se),
                ])?;
            }
        }
        w.flush()?;
        files.samples = Some(path);
        for s in &report.scenarios {
            let path = dir.join(cdf_file_name(s.scenario));
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["se", "cumulative_probability"])?;
            for (x, p) in s.cdf() {
                w.write_record([format!("{x}"), format!("{p}")])?;
            }
            w.flush()?;
            files.cdfs.push(path);
        }
    }
    fs::write(&files.manifest, manifest_text(report))?;
    Ok(files)
}

/// The manifest is a settings file reproducing the run, followed by
/// dotted summary keys that the settings parser ignores.
pub fn manifest_text(report: &SeReport) -> String {
    let scenarios: Vec<Scenario> = report.scenarios.iter().map(|s| s.scenario).collect();
    let mut out = String::from("# ris-cellfree run manifest\n");
    out.push_str(&format!("tool.version = {}\n", env!("CARGO_PKG_VERSION")));
    out.push_str(&write_settings(&report.config, Some(&scenarios), Some(report.combiner)));
    for s in &report.scenarios {
        let name = s.scenario.name();
        out.push_str(&format!("summary.{name}.samples = {}\n", s.samples.len()));
        if let (Some(median), Some(p10)) = (s.median(), s.percentile_10()) {
            out.push_str(&format!("summary.{name}.median_se = {median}\n"));
            out.push_str(&format!("summary.{name}.p10_se = {p10}\n"));
        }
    }
    out
}

fn parse_field<T: std::str::FromStr>(value: &str, path: &Path, line: usize, column: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Parse {
        location: format!("{}:{line}", path.display()),
        reason: format!("invalid {column} `{value}`"),
    })
}

/// Reads `se_samples.csv` back into per-scenario reports, in file order.
pub fn read_samples_csv(path: &Path) -> Result<Vec<ScenarioReport>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out: Vec<ScenarioReport> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        if record.len() != 4 {
            return Err(Error::Parse {
                location: format!("{}:{line}", path.display()),
                reason: format!("expected 4 fields, got {}", record.len()),
            });
        }
        let scenario: Scenario = record[0].parse()?;
        let sample = SeSample {
            realization: parse_field(&record[1], path, line, "realization")?,
            ue: parse_field(&record[2], path, line, "ue")?,
            se: parse_field(&record[3], path, line, "se")?,
        };
        match out.iter_mut().find(|s| s.scenario == scenario) {
            Some(s) => s.samples.push(sample),
            None => out.push(ScenarioReport {
                scenario,
                samples: vec![sample],
            }),
        }
    }
    Ok(out)
}

/// Reads a `cdf_<scenario>.csv` file.
pub fn read_cdf_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        out.push((
            parse_field(&record[0], path, line, "se")?,
            parse_field(&record[1], path, line, "cumulative_probability")?,
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report_of(values: &[f64]) -> ScenarioReport {
        ScenarioReport {
            scenario: Scenario::RisRandom,
            samples: values
                .iter()
                .enumerate()
                .map(|(i, &se)| SeSample {
                    realization: i / 2,
                    ue: i % 2,
                    se,
                })
                .collect(),
        }
    }

    #[test]
    fn quantiles() {
        let r = report_of(&[4.0, 1.0, 3.0, 2.0]);
        assert_eq!(r.median(), Some(2.5));
        assert_eq!(r.quantile(0.0), Some(1.0));
        assert_eq!(r.quantile(1.0), Some(4.0));
        assert!((r.percentile_10().unwrap() - 1.3).abs() < 1e-12);
        assert_eq!(report_of(&[5.0, 1.0, 3.0]).median(), Some(3.0));
        assert_eq!(report_of(&[]).median(), None);
    }

    #[test]
    fn cdf_shape() {
        let cdf = report_of(&[0.3, 0.1, 0.2, 0.1]).cdf();
        assert_eq!(cdf.iter().map(|c| c.0).collect::<Vec<_>>(), vec![0.1, 0.1, 0.2, 0.3]);
        assert_eq!(cdf.last().unwrap().1, 1.0);
        assert!(cdf.windows(2).all(|w| w[0].1 <= w[1].1));
    }
}
