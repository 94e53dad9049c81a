//! Flat `key = value` settings files.
//!
//! Units are part of the key name (`noise_power_dbm`, `pilot_power_mw`,
//! ...). `#` starts a comment. A `figure = 1|2|3` key selects a preset that
//! the remaining keys then override, wherever it appears in the file. Keys
//! containing a dot are annotations (run manifests use them for summary
//! statistics) and are ignored. Unknown or repeated keys are errors.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::config::{dbm_to_watt, watt_to_dbm, ArrayGeometry, CorrelationModel, NlosModel, SimConfig};
use crate::error::{Error, Result};
use crate::receiver::CombinerKind;

use super::{combiner_name, parse_combiner, Scenario};

/// Contents of a settings file.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub config: SimConfig,
    pub scenarios: Option<Vec<Scenario>>,
    pub combiner: Option<CombinerKind>,
}

pub fn read_settings(path: &Path) -> Result<Settings> {
    let text = fs::read_to_string(path)?;
    parse_settings(&text).map_err(|e| match e {
        Error::Parse { location, reason } => Error::Parse {
            location: format!("{}:{location}", path.display()),
            reason,
        },
        other => other,
    })
}

fn value<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{raw}`")))
}

pub fn parse_settings(text: &str) -> Result<Settings> {
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, raw) = content.split_once('=').ok_or_else(|| Error::Parse {
            location: format!("line {line_no}"),
            reason: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        if key.contains('.') {
            continue;
        }
        if entries
            .insert(key.to_string(), (line_no, raw.trim().to_string()))
            .is_some()
        {
            return Err(Error::Parse {
                location: format!("line {line_no}"),
                reason: format!("key `{key}` given more than once"),
            });
        }
    }

    let mut cfg = match entries.remove("figure") {
        Some((_, raw)) => {
            let index: u8 = value("figure", &raw)?;
            SimConfig::figure(index).ok_or_else(|| Error::config("figure", format!("no preset {index}")))?
        }
        None => SimConfig::default(),
    };
    let mut settings = Settings {
        config: SimConfig::default(),
        scenarios: None,
        combiner: None,
    };
    let mut angular_std: Option<f64> = None;
    let mut uncorrelated = false;
    for (key, (line_no, raw)) in &entries {
        let k = key.as_str();
        let raw = raw.as_str();
        match k {
            "num_aps" => cfg.num_aps = value(k, raw)?,
            "num_ues" => cfg.num_ues = value(k, raw)?,
            "antennas_per_ap" => cfg.antennas_per_ap = value(k, raw)?,
            "antenna_rows" => {
                let rows: usize = value(k, raw)?;
                cfg.array_geometry = if rows <= 1 {
                    ArrayGeometry::Linear
                } else {
                    ArrayGeometry::Planar { rows }
                };
            }
            "ris_rows" => cfg.ris_rows = value(k, raw)?,
            "ris_cols" => cfg.ris_cols = value(k, raw)?,
            "area_side_m" => cfg.area_side_m = value(k, raw)?,
            "carrier_frequency_hz" => cfg.carrier_frequency_hz = value(k, raw)?,
            "bandwidth_hz" => cfg.bandwidth_hz = value(k, raw)?,
            "noise_power_dbm" => cfg.noise_power_w = dbm_to_watt(value(k, raw)?),
            "noise_power_w" => cfg.noise_power_w = value(k, raw)?,
            "pilot_power_mw" => cfg.pilot_power_w = value::<f64>(k, raw)? * 1e-3,
            "pilot_power_w" => cfg.pilot_power_w = value(k, raw)?,
            "data_power_mw" => cfg.data_power_w = value::<f64>(k, raw)? * 1e-3,
            "data_power_w" => cfg.data_power_w = value(k, raw)?,
            "coherence_samples" => cfg.coherence_samples = value(k, raw)?,
            "pilot_samples" => cfg.pilot_samples = value(k, raw)?,
            "element_spacing_wavelengths" => cfg.element_spacing = value(k, raw)?,
            "antenna_spacing_wavelengths" => cfg.antenna_spacing = value(k, raw)?,
            "box_depth_wavelengths" => cfg.box_depth_wavelengths = value(k, raw)?,
            "rician_los_fraction" => cfg.rician_los_fraction = value(k, raw)?,
            "nlos_model" => match raw {
                "iid" => cfg.nlos_model = NlosModel::Iid,
                _ => return Err(Error::config(k, format!("unknown model `{raw}` (expected iid)"))),
            },
            "ap_height_m" => cfg.ap_height_m = value(k, raw)?,
            "correlation" => match raw {
                "local_scattering" => {}
                "uncorrelated" => uncorrelated = true,
                _ => {
                    return Err(Error::config(
                        k,
                        format!("unknown model `{raw}` (expected local_scattering or uncorrelated)"),
                    ))
                }
            },
            "angular_std_deg" => angular_std = Some(value(k, raw)?),
            "quadrature_nodes" => cfg.quadrature_nodes = value(k, raw)?,
            "pathloss_intercept_db" => cfg.pathloss_intercept_db = value(k, raw)?,
            "pathloss_slope_db" => cfg.pathloss_slope_db = value(k, raw)?,
            "shadowing_std_db" => cfg.shadowing_std_db = value(k, raw)?,
            "shadowing_decorrelation_m" => cfg.shadowing_decorrelation_m = value(k, raw)?,
            "min_distance_m" => cfg.min_distance_m = value(k, raw)?,
            "power_iterations" => cfg.power_iterations = value(k, raw)?,
            "power_iteration_tolerance" => cfg.power_iteration_tolerance = value(k, raw)?,
            "mc_setups" => cfg.mc_setups = value(k, raw)?,
            "mc_channel_realizations" => cfg.mc_channel_realizations = value(k, raw)?,
            "seed" => cfg.seed = value(k, raw)?,
            "scenarios" => {
                settings.scenarios = Some(
                    raw.split([',', ' '])
                        .filter(|s| !s.is_empty())
                        .map(str::parse)
                        .collect::<Result<_>>()?,
                )
            }
            "combiner" => settings.combiner = Some(parse_combiner(raw)?),
            _ => {
                return Err(Error::Parse {
                    location: format!("line {line_no}"),
                    reason: format!("unknown key `{key}`"),
                })
            }
        }
    }
    if uncorrelated {
        if angular_std.is_some() {
            return Err(Error::config("angular_std_deg", "not used with correlation = uncorrelated"));
        }
        cfg.correlation = CorrelationModel::Uncorrelated;
    } else if let Some(angular_std_deg) = angular_std {
        cfg.correlation = CorrelationModel::LocalScattering { angular_std_deg };
    }
    cfg.validate()?;
    settings.config = cfg;
    Ok(settings)
}

/// Serializes a configuration so that [`parse_settings`] reproduces it
/// exactly. Powers are written in watts to avoid unit round-off.
pub fn write_settings(cfg: &SimConfig, scenarios: Option<&[Scenario]>, combiner: Option<CombinerKind>) -> String {
    let antenna_rows = match cfg.array_geometry {
        ArrayGeometry::Linear => 1,
        ArrayGeometry::Planar { rows } => rows,
    };
    let mut lines = vec![
        format!("num_aps = {}", cfg.num_aps),
        format!("num_ues = {}", cfg.num_ues),
        format!("antennas_per_ap = {}", cfg.antennas_per_ap),
        format!("antenna_rows = {antenna_rows}"),
        format!("ris_rows = {}", cfg.ris_rows),
        format!("ris_cols = {}", cfg.ris_cols),
        format!("area_side_m = {}", cfg.area_side_m),
        format!("carrier_frequency_hz = {}", cfg.carrier_frequency_hz),
        format!("bandwidth_hz = {}", cfg.bandwidth_hz),
        format!("noise_power_w = {}  # {} dBm", cfg.noise_power_w, watt_to_dbm(cfg.noise_power_w)),
        format!("pilot_power_w = {}", cfg.pilot_power_w),
        format!("data_power_w = {}", cfg.data_power_w),
        format!("coherence_samples = {}", cfg.coherence_samples),
        format!("pilot_samples = {}", cfg.pilot_samples),
        format!("element_spacing_wavelengths = {}", cfg.element_spacing),
        format!("antenna_spacing_wavelengths = {}", cfg.antenna_spacing),
        format!("box_depth_wavelengths = {}", cfg.box_depth_wavelengths),
        format!("rician_los_fraction = {}", cfg.rician_los_fraction),
        "nlos_model = iid".to_string(),
        format!("ap_height_m = {}", cfg.ap_height_m),
    ];
    match cfg.correlation {
        CorrelationModel::LocalScattering { angular_std_deg } => {
            lines.push("correlation = local_scattering".to_string());
            lines.push(format!("angular_std_deg = {angular_std_deg}"));
        }
        CorrelationModel::Uncorrelated => lines.push("correlation = uncorrelated".to_string()),
    }
    lines.extend([
        format!("quadrature_nodes = {}", cfg.quadrature_nodes),
        format!("pathloss_intercept_db = {}", cfg.pathloss_intercept_db),
        format!("pathloss_slope_db = {}", cfg.pathloss_slope_db),
        format!("shadowing_std_db = {}", cfg.shadowing_std_db),
        format!("shadowing_decorrelation_m = {}", cfg.shadowing_decorrelation_m),
        format!("min_distance_m = {}", cfg.min_distance_m),
        format!("power_iterations = {}", cfg.power_iterations),
        format!("power_iteration_tolerance = {}", cfg.power_iteration_tolerance),
        format!("mc_setups = {}", cfg.mc_setups),
        format!("mc_channel_realizations = {}", cfg.mc_channel_realizations),
        format!("seed = {}", cfg.seed),
    ]);
    if let Some(scenarios) = scenarios {
        let names: Vec<&str> = scenarios.iter().map(Scenario::name).collect();
        lines.push(format!("scenarios = {}", names.join(",")));
    }
    if let Some(kind) = combiner {
        lines.push(format!("combiner = {}", combiner_name(kind)));
    }
    let mut out = lines.join("\n");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn units_and_overrides() {
        let s = parse_settings(
            "# comment\nnum_ues = 7\nfigure = 2   # preset first\nnoise_power_dbm = -94\npilot_power_mw = 50\n",
        )
        .unwrap();
        assert_eq!(s.config.num_aps, 100);
        assert_eq!(s.config.num_ues, 7);
        assert!((s.config.pilot_power_w - 0.05).abs() < 1e-15);
        assert!((watt_to_dbm(s.config.noise_power_w) + 94.0).abs() < 1e-12);
        assert_eq!(s.scenarios, None);
    }

    #[test]
    fn round_trip() {
        let cfg = SimConfig {
            array_geometry: ArrayGeometry::Planar { rows: 2 },
            correlation: CorrelationModel::Uncorrelated,
            seed: 99,
            ..SimConfig::figure(3).unwrap()
        };
        let text = write_settings(&cfg, Some(&[Scenario::NoRisSmall, Scenario::RisOptimized]), Some(CombinerKind::Mmse));
        let s = parse_settings(&text).unwrap();
        assert_eq!(s.config, cfg);
        assert_eq!(s.scenarios, Some(vec![Scenario::NoRisSmall, Scenario::RisOptimized]));
        assert_eq!(s.combiner, Some(CombinerKind::Mmse));
    }

    #[test]
    fn errors_name_the_problem() {
        assert!(matches!(parse_settings("bogus = 1"), Err(Error::Parse { .. })));
        assert!(matches!(parse_settings("seed = 1\nseed = 2"), Err(Error::Parse { .. })));
        assert!(matches!(parse_settings("just text"), Err(Error::Parse { .. })));
        assert!(matches!(parse_settings("num_aps = many"), Err(Error::Config { field, .. }) if field == "num_aps"));
        assert!(matches!(parse_settings("figure = 9"), Err(Error::Config { field, .. }) if field == "figure"));
        assert!(parse_settings("correlation = uncorrelated\nangular_std_deg = 5").is_err());
        assert!(parse_settings("summary.x.median_se = 3").is_ok());
    }
}
