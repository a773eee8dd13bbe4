//! Experiment configuration: strict flat key-value text format with dotted
//! section names.
//!
//! Unknown keys are rejected with their line number; scalar values for the
//! per-cluster lists are broadcast to the cluster count when the experiment is
//! resolved. `load → emit → load` reproduces the configuration exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::float::Float;
use crate::harness::Rule;

/// How the detection-threshold sweep is specified: a grid size spanning the
/// observed statistic range, or an explicit list of thresholds.
#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdSpec<F> {
    Count(usize),
    Explicit(Vec<F>),
}

/// How the channel noise levels are specified: per-hop SNR targets in dB, or
/// explicit noise variances.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec<F> {
    SnrDb { snr_c_db: Vec<F>, snr_f_db: Vec<F> },
    Explicit { snch: Vec<F>, chfc: Vec<F> },
}

/// Full description of one Monte Carlo experiment.
///
/// Defaults describe the reference setup: a 50×50 region split into a 3×3
/// grid, unit-power target at (4, 5), sensing SNR 0 dB, local false-alarm
/// probability 10⁻², deployment intensity 2, unit transmit powers, and 5 dB
/// per-hop channel SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig<F> {
    pub region_width: F,
    pub region_height: F,
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub target_power: F,
    pub target_x: F,
    pub target_y: F,
    pub sensing_noise_std: F,
    pub sensing_ref_distance: F,
    pub sensing_local_pfa: F,
    pub intensity: F,
    pub sn_power: F,
    /// Relay powers; a single entry broadcasts to every cluster.
    pub ch_powers: Vec<F>,
    pub noise: NoiseSpec<F>,
    pub sample_count: usize,
    pub trials: usize,
    pub seed: u64,
    pub rules: Vec<Rule>,
    pub threshold_grid: ThresholdSpec<F>,
    /// Mean-difference floor `D₀`; enables the power-allocated rule.
    pub md_floor: Option<F>,
    pub aml_rounds: usize,
    pub aml_gamma: F,
    /// Normalized floor values `D₁` swept by the allocation report.
    pub d1_values: Vec<F>,
}

impl<F: Float> Default for ExperimentConfig<F> {
    fn default() -> Self {
        Self {
            region_width: F::of(50.0),
            region_height: F::of(50.0),
            grid_rows: 3,
            grid_cols: 3,
            target_power: F::of(1.0),
            target_x: F::of(4.0),
            target_y: F::of(5.0),
            sensing_noise_std: F::of(1.0),
            sensing_ref_distance: F::of(1.0),
            sensing_local_pfa: F::of(0.01),
            intensity: F::of(2.0),
            sn_power: F::of(1.0),
            ch_powers: vec![F::of(1.0)],
            noise: NoiseSpec::SnrDb {
                snr_c_db: vec![F::of(5.0)],
                snr_f_db: vec![F::of(5.0)],
            },
            sample_count: 1,
            trials: 10_000,
            seed: 0,
            rules: vec![Rule::Cr, Rule::Ocr, Rule::Llr, Rule::Lfr, Rule::LfrAml],
            threshold_grid: ThresholdSpec::Count(200),
            md_floor: None,
            aml_rounds: 10,
            aml_gamma: F::of(0.0),
            d1_values: (0..11).map(|i| F::of(1.0 + 0.5 * i as f64)).collect(),
        }
    }
}

fn parse_float<F: Float>(line: usize, key: &str, value: &str) -> Result<F> {
    value.trim().parse::<f64>().map(F::of).map_err(|_| {
        Error::Config(format!("line {line}: key `{key}`: expected a number, got `{value}`"))
    })
}

fn parse_usize(line: usize, key: &str, value: &str) -> Result<usize> {
    value.trim().parse::<usize>().map_err(|_| {
        Error::Config(format!(
            "line {line}: key `{key}`: expected a non-negative integer, got `{value}`"
        ))
    })
}

fn parse_u64(line: usize, key: &str, value: &str) -> Result<u64> {
    value.trim().parse::<u64>().map_err(|_| {
        Error::Config(format!(
            "line {line}: key `{key}`: expected a 64-bit unsigned integer, got `{value}`"
        ))
    })
}

fn parse_float_list<F: Float>(line: usize, key: &str, value: &str) -> Result<Vec<F>> {
    value
        .split(',')
        .map(|part| parse_float(line, key, part))
        .collect()
}

fn fmt_f<F: Float>(x: F) -> String {
    format!("{:?}", x.as_f64())
}

fn fmt_list<F: Float>(xs: &[F]) -> String {
    xs.iter().map(|&x| fmt_f(x)).collect::<Vec<_>>().join(",")
}

impl<F: Float> ExperimentConfig<F> {
    /// Parse the strict key-value format. Later keys may not repeat earlier
    /// ones; unknown keys are rejected with their line number.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        let mut snr_c: Option<Vec<F>> = None;
        let mut snr_f: Option<Vec<F>> = None;
        let mut var_c: Option<Vec<F>> = None;
        let mut var_f: Option<Vec<F>> = None;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {line_no}: expected `key = value`, got `{line}`"))
            })?;
            let key = key.trim();
            let value = value.trim();
            if let Some(prev) = seen.insert(key.to_string(), line_no) {
                return Err(Error::Config(format!(
                    "line {line_no}: key `{key}` already set on line {prev}"
                )));
            }
            match key {
                "region.width" => cfg.region_width = parse_float(line_no, key, value)?,
                "region.height" => cfg.region_height = parse_float(line_no, key, value)?,
                "region.grid_rows" => cfg.grid_rows = parse_usize(line_no, key, value)?,
                "region.grid_cols" => cfg.grid_cols = parse_usize(line_no, key, value)?,
                "target.power" => cfg.target_power = parse_float(line_no, key, value)?,
                "target.x" => cfg.target_x = parse_float(line_no, key, value)?,
                "target.y" => cfg.target_y = parse_float(line_no, key, value)?,
                "sensing.noise_std" => cfg.sensing_noise_std = parse_float(line_no, key, value)?,
                "sensing.ref_distance" => {
                    cfg.sensing_ref_distance = parse_float(line_no, key, value)?
                }
                "sensing.local_pfa" => cfg.sensing_local_pfa = parse_float(line_no, key, value)?,
                "intensity" => cfg.intensity = parse_float(line_no, key, value)?,
                "channel.sn_power" => cfg.sn_power = parse_float(line_no, key, value)?,
                "channel.ch_powers" => cfg.ch_powers = parse_float_list(line_no, key, value)?,
                "channel.snr_c_db" => snr_c = Some(parse_float_list(line_no, key, value)?),
                "channel.snr_f_db" => snr_f = Some(parse_float_list(line_no, key, value)?),
                "channel.snch_noise_vars" => {
                    var_c = Some(parse_float_list(line_no, key, value)?)
                }
                "channel.chfc_noise_vars" => {
                    var_f = Some(parse_float_list(line_no, key, value)?)
                }
                "sample_count" => cfg.sample_count = parse_usize(line_no, key, value)?,
                "trials" => cfg.trials = parse_usize(line_no, key, value)?,
                "seed" => cfg.seed = parse_u64(line_no, key, value)?,
                "rules" => {
                    cfg.rules = value
                        .split(',')
                        .map(|name| {
                            Rule::parse(name.trim()).ok_or_else(|| {
                                Error::Config(format!(
                                    "line {line_no}: unknown rule `{}`",
                                    name.trim()
                                ))
                            })
                        })
                        .collect::<Result<Vec<_>>>()?
                }
                "threshold_grid" => {
                    cfg.threshold_grid = if value.contains(',') || value.contains('.') {
                        ThresholdSpec::Explicit(parse_float_list(line_no, key, value)?)
                    } else {
                        ThresholdSpec::Count(parse_usize(line_no, key, value)?)
                    }
                }
                "md_floor" => cfg.md_floor = Some(parse_float(line_no, key, value)?),
                "aml.rounds" => cfg.aml_rounds = parse_usize(line_no, key, value)?,
                "aml.gamma" => cfg.aml_gamma = parse_float(line_no, key, value)?,
                "power.d1_values" => cfg.d1_values = parse_float_list(line_no, key, value)?,
                _ => {
                    return Err(Error::Config(format!(
                        "line {line_no}: unknown key `{key}`"
                    )))
                }
            }
        }

        let has_snr = snr_c.is_some() || snr_f.is_some();
        let has_vars = var_c.is_some() || var_f.is_some();
        if has_snr && has_vars {
            return Err(Error::Config(
                "channel noise given both as SNR (channel.snr_*_db) and as explicit \
                 variances (channel.*_noise_vars); pick one"
                    .into(),
            ));
        }
        if has_vars {
            let (Some(snch), Some(chfc)) = (var_c, var_f) else {
                return Err(Error::Config(
                    "explicit channel noise needs both channel.snch_noise_vars and \
                     channel.chfc_noise_vars"
                        .into(),
                ));
            };
            cfg.noise = NoiseSpec::Explicit { snch, chfc };
        } else if has_snr {
            let default_snr = vec![F::of(5.0)];
            cfg.noise = NoiseSpec::SnrDb {
                snr_c_db: snr_c.unwrap_or_else(|| default_snr.clone()),
                snr_f_db: snr_f.unwrap_or(default_snr),
            };
        }
        Ok(cfg)
    }

    pub fn from_config_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_config_str(&text)
    }

    /// Canonical serialization; parsing the output reproduces `self`.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "region.width = {}", fmt_f(self.region_width));
        let _ = writeln!(s, "region.height = {}", fmt_f(self.region_height));
        let _ = writeln!(s, "region.grid_rows = {}", self.grid_rows);
        let _ = writeln!(s, "region.grid_cols = {}", self.grid_cols);
        let _ = writeln!(s, "target.power = {}", fmt_f(self.target_power));
        let _ = writeln!(s, "target.x = {}", fmt_f(self.target_x));
        let _ = writeln!(s, "target.y = {}", fmt_f(self.target_y));
        let _ = writeln!(s, "sensing.noise_std = {}", fmt_f(self.sensing_noise_std));
        let _ = writeln!(
            s,
            "sensing.ref_distance = {}",
            fmt_f(self.sensing_ref_distance)
        );
        let _ = writeln!(s, "sensing.local_pfa = {}", fmt_f(self.sensing_local_pfa));
        let _ = writeln!(s, "intensity = {}", fmt_f(self.intensity));
        let _ = writeln!(s, "channel.sn_power = {}", fmt_f(self.sn_power));
        let _ = writeln!(s, "channel.ch_powers = {}", fmt_list(&self.ch_powers));
        match &self.noise {
            NoiseSpec::SnrDb { snr_c_db, snr_f_db } => {
                let _ = writeln!(s, "channel.snr_c_db = {}", fmt_list(snr_c_db));
                let _ = writeln!(s, "channel.snr_f_db = {}", fmt_list(snr_f_db));
            }
            NoiseSpec::Explicit { snch, chfc } => {
                let _ = writeln!(s, "channel.snch_noise_vars = {}", fmt_list(snch));
                let _ = writeln!(s, "channel.chfc_noise_vars = {}", fmt_list(chfc));
            }
        }
        let _ = writeln!(s, "sample_count = {}", self.sample_count);
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(
            s,
            "rules = {}",
            self.rules
                .iter()
                .map(|r| r.name())
                .collect::<Vec<_>>()
                .join(",")
        );
        match &self.threshold_grid {
            ThresholdSpec::Count(n) => {
                let _ = writeln!(s, "threshold_grid = {n}");
            }
            ThresholdSpec::Explicit(xs) => {
                let _ = writeln!(s, "threshold_grid = {}", fmt_list(xs));
            }
        }
        if let Some(floor) = self.md_floor {
            let _ = writeln!(s, "md_floor = {}", fmt_f(floor));
        }
        let _ = writeln!(s, "aml.rounds = {}", self.aml_rounds);
        let _ = writeln!(s, "aml.gamma = {}", fmt_f(self.aml_gamma));
        let _ = writeln!(s, "power.d1_values = {}", fmt_list(&self.d1_values));
        s
    }

    /// Broadcast a per-cluster list to the cluster count.
    pub(crate) fn broadcast(list: &[F], m: usize, what: &str) -> Result<Vec<F>> {
        if list.len() == m {
            Ok(list.to_vec())
        } else if list.len() == 1 {
            Ok(vec![list[0]; m])
        } else {
            Err(Error::Config(format!(
                "{what} has {} entries; expected 1 (broadcast) or {m}",
                list.len()
            )))
        }
    }
}
