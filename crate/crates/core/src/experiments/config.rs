//! Scenario configuration and its flat `key = value` text format.
//!
//! ```text
//! # single-user scan at -3.1 dB back-off
//! channel = measured.csv
//! users = 5
//! precoder = z3ro
//! m_s = 2
//! selection = smallest
//! pa = rapp
//! pa_saturation_power = 1
//! pa_smoothness = 2
//! backoff_db = -3.1
//! noise_var = 0
//! ensemble_size = 200000
//! seed = 1
//! ```
//!
//! `channel` is a file path (CSV, or JSON by extension unless `channel_format`
//! says otherwise), `rayleigh:<M>:<L>:<seed>`, or
//! `los:<M>:<start_deg>:<stop_deg>:<points>` (half-wavelength ULA). Unknown and
//! repeated keys are errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{synth_los_set, synth_rayleigh, ChannelFormat, ChannelSet};
use crate::error::{Error, Result};
use crate::pa::{PaModel, DEFAULT_CUBIC_COEFF, DEFAULT_RAPP_SMOOTHNESS};
use crate::precoding::{PowerBudget, PrecoderKind, Selection};

pub const DEFAULT_BACKOFF_DB: f64 = -3.1;
pub const DEFAULT_ENSEMBLE_SIZE: usize = 200_000;
/// Environment variable naming the default search root for channel files.
pub const DATA_ENV: &str = "Z3RO_SIM_DATA";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ChannelSource {
    File {
        path: PathBuf,
        format: Option<ChannelFormat>,
    },
    Rayleigh {
        m: usize,
        l: usize,
        seed: u64,
    },
    Los {
        m: usize,
        start_deg: f64,
        stop_deg: f64,
        points: usize,
    },
}

impl ChannelSource {
    fn parse(value: &str) -> Result<Self> {
        let bad = |what: &str| Error::Config(format!("malformed {what} channel spec `{value}`"));
        if let Some(rest) = value.strip_prefix("rayleigh:") {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(bad("rayleigh"));
            }
            return Ok(ChannelSource::Rayleigh {
                m: parts[0].parse().map_err(|_| bad("rayleigh"))?,
                l: parts[1].parse().map_err(|_| bad("rayleigh"))?,
                seed: parts[2].parse().map_err(|_| bad("rayleigh"))?,
            });
        }
        if let Some(rest) = value.strip_prefix("los:") {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 4 {
                return Err(bad("los"));
            }
            return Ok(ChannelSource::Los {
                m: parts[0].parse().map_err(|_| bad("los"))?,
                start_deg: parts[1].parse().map_err(|_| bad("los"))?,
                stop_deg: parts[2].parse().map_err(|_| bad("los"))?,
                points: parts[3].parse().map_err(|_| bad("los"))?,
            });
        }
        if value.is_empty() {
            return Err(Error::Config("empty channel path".into()));
        }
        Ok(ChannelSource::File {
            path: PathBuf::from(value),
            format: None,
        })
    }

    fn to_value(&self) -> String {
        match self {
            ChannelSource::File { path, .. } => path.display().to_string(),
            ChannelSource::Rayleigh { m, l, seed } => format!("rayleigh:{m}:{l}:{seed}"),
            ChannelSource::Los {
                m,
                start_deg,
                stop_deg,
                points,
            } => format!("los:{m}:{start_deg}:{stop_deg}:{points}"),
        }
    }

    /// Where a relative channel path is looked up: `$Z3RO_SIM_DATA` if set,
    /// else `base` (normally the config file's directory).
    pub fn resolve_path(path: &Path, base: Option<&Path>) -> PathBuf {
        if path.is_absolute() {
            return path.to_path_buf();
        }
        if let Some(root) = std::env::var_os(DATA_ENV) {
            let candidate = Path::new(&root).join(path);
            if candidate.exists() {
                return candidate;
            }
        }
        match base {
            Some(dir) => dir.join(path),
            None => path.to_path_buf(),
        }
    }

    pub fn load(&self, base: Option<&Path>) -> Result<ChannelSet> {
        match self {
            ChannelSource::File { path, format } => {
                let resolved = Self::resolve_path(path, base);
                if !resolved.exists() {
                    return Err(Error::io(
                        &resolved,
                        std::io::Error::new(std::io::ErrorKind::NotFound, "channel file not found"),
                    ));
                }
                let format = format.unwrap_or_else(|| ChannelFormat::from_path(&resolved));
                ChannelSet::load(&resolved, format)
            }
            ChannelSource::Rayleigh { m, l, seed } => synth_rayleigh(*m, *l, *seed),
            ChannelSource::Los {
                m,
                start_deg,
                stop_deg,
                points,
            } => {
                let angles = linspace(*start_deg, *stop_deg, *points)?
                    .into_iter()
                    .map(f64::to_radians)
                    .collect::<Vec<_>>();
                synth_los_set(*m, &angles, 0.5)
            }
        }
    }
}

/// `points` evenly spaced values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(Error::Validation("grid needs at least one point".into()));
    }
    if points == 1 {
        return Ok(vec![start]);
    }
    let step = (stop - start) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| if i + 1 == points { stop } else { start + step * i as f64 })
        .collect())
}

/// Everything needed to reproduce one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub channel: ChannelSource,
    pub users: Vec<usize>,
    pub precoder: PrecoderKind,
    /// Saturated antennas per user; `None` means `2·K`.
    pub m_s: Option<usize>,
    pub selection: Selection,
    pub pa: PaModel,
    pub backoff_db: f64,
    pub noise_var: f64,
    pub ensemble_size: usize,
    pub master_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            channel: ChannelSource::Rayleigh { m: 32, l: 42, seed: 0 },
            users: vec![0],
            precoder: PrecoderKind::Z3ro,
            m_s: None,
            selection: Selection::default(),
            pa: PaModel::Rapp {
                saturation_power: 1.0,
                smoothness: DEFAULT_RAPP_SMOOTHNESS,
            },
            backoff_db: DEFAULT_BACKOFF_DB,
            noise_var: 0.0,
            ensemble_size: DEFAULT_ENSEMBLE_SIZE,
            master_seed: 1,
        }
    }
}

const KEYS: &[&str] = &[
    "channel",
    "channel_format",
    "users",
    "precoder",
    "m_s",
    "selection",
    "pa",
    "pa_saturation_power",
    "pa_smoothness",
    "pa_linear_gain",
    "pa_cubic_coeff",
    "backoff_db",
    "noise_var",
    "ensemble_size",
    "seed",
];

impl ScenarioConfig {
    /// Saturated antenna count for `users` simultaneous users.
    pub fn effective_m_s(&self, users: usize) -> usize {
        self.m_s.unwrap_or(2 * users)
    }

    /// Saturation power used to turn the back-off into an input power. Models
    /// without saturation use a unit reference.
    pub fn reference_saturation_power(&self) -> f64 {
        self.pa.saturation_power().unwrap_or(1.0)
    }

    pub fn budget(&self, users: usize) -> Result<PowerBudget> {
        PowerBudget::from_backoff_db(self.backoff_db, self.reference_saturation_power(), users)
    }

    pub fn validate(&self) -> Result<()> {
        if self.users.is_empty() {
            return Err(Error::Config("`users` must list at least one location".into()));
        }
        let mut sorted = self.users.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("user locations must be distinct, got {:?}", self.users)));
        }
        if !self.backoff_db.is_finite() {
            return Err(Error::Config("`backoff_db` must be finite".into()));
        }
        if !(self.noise_var >= 0.0 && self.noise_var.is_finite()) {
            return Err(Error::Config(format!("`noise_var` must be >= 0, got {}", self.noise_var)));
        }
        if self.ensemble_size == 0 {
            return Err(Error::Config("`ensemble_size` must be positive".into()));
        }
        if self.m_s == Some(0) {
            return Err(Error::Config("`m_s` must be positive".into()));
        }
        self.pa.validate()
    }

    /// Checks user indices against a loaded channel set.
    pub fn validate_against(&self, channels: &ChannelSet) -> Result<()> {
        self.validate()?;
        let l = channels.location_count();
        if let Some(&bad) = self.users.iter().find(|&&u| u >= l) {
            return Err(Error::Bounds { index: bad, len: l });
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(usize, &str, &str)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("expected `key = value`, found `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("unknown key `{key}`"),
                });
            }
            if entries.iter().any(|(_, k, _)| *k == key) {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("duplicate key `{key}`"),
                });
            }
            entries.push((line_no, key, value));
        }

        let get = |key: &str| entries.iter().find(|(_, k, _)| *k == key).map(|(l, _, v)| (*l, *v));
        let mut cfg = ScenarioConfig::default();

        fn num<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
            value.parse().map_err(|_| Error::Parse {
                line,
                message: format!("invalid value `{value}` for `{key}`"),
            })
        }
        let wrap = |line: usize, e: Error| Error::Parse {
            line,
            message: e.to_string(),
        };

        if let Some((line, v)) = get("channel") {
            cfg.channel = ChannelSource::parse(v).map_err(|e| wrap(line, e))?;
        }
        if let Some((line, v)) = get("channel_format") {
            let fmt: ChannelFormat = v.parse().map_err(|e| wrap(line, e))?;
            match &mut cfg.channel {
                ChannelSource::File { format, .. } => *format = Some(fmt),
                _ => {
                    return Err(Error::Parse {
                        line,
                        message: "`channel_format` only applies to file channels".into(),
                    })
                }
            }
        }
        if let Some((line, v)) = get("users") {
            cfg.users = v
                .split(',')
                .map(|u| num(line, "users", u.trim()))
                .collect::<Result<_>>()?;
        }
        if let Some((line, v)) = get("precoder") {
            cfg.precoder = v.parse().map_err(|e| wrap(line, e))?;
        }
        if let Some((line, v)) = get("m_s") {
            cfg.m_s = Some(num(line, "m_s", v)?);
        }
        if let Some((line, v)) = get("selection") {
            cfg.selection = v.parse().map_err(|e| wrap(line, e))?;
        }
        if let Some((line, v)) = get("backoff_db") {
            cfg.backoff_db = num(line, "backoff_db", v)?;
        }
        if let Some((line, v)) = get("noise_var") {
            cfg.noise_var = num(line, "noise_var", v)?;
        }
        if let Some((line, v)) = get("ensemble_size") {
            cfg.ensemble_size = num(line, "ensemble_size", v)?;
        }
        if let Some((line, v)) = get("seed") {
            cfg.master_seed = num(line, "seed", v)?;
        }

        let pa_kind = get("pa").map(|(l, v)| (l, v.to_ascii_lowercase()));
        let rapp_keys = ["pa_saturation_power", "pa_smoothness"];
        let poly_keys = ["pa_linear_gain", "pa_cubic_coeff"];
        let stray = |keys: &[&str]| keys.iter().find_map(|k| get(k).map(|(l, _)| (l, k.to_string())));
        cfg.pa = match pa_kind.as_ref().map(|(l, v)| (*l, v.as_str())) {
            None | Some((_, "rapp")) => {
                if let Some((line, key)) = stray(&poly_keys) {
                    return Err(Error::Parse {
                        line,
                        message: format!("`{key}` does not apply to the Rapp model"),
                    });
                }
                let p_sat = get("pa_saturation_power")
                    .map(|(l, v)| num(l, "pa_saturation_power", v))
                    .transpose()?
                    .unwrap_or(1.0);
                let s = get("pa_smoothness")
                    .map(|(l, v)| num(l, "pa_smoothness", v))
                    .transpose()?
                    .unwrap_or(DEFAULT_RAPP_SMOOTHNESS);
                PaModel::Rapp {
                    saturation_power: p_sat,
                    smoothness: s,
                }
            }
            Some((_, "polynomial3")) => {
                if let Some((line, key)) = stray(&rapp_keys) {
                    return Err(Error::Parse {
                        line,
                        message: format!("`{key}` does not apply to the polynomial model"),
                    });
                }
                let a1 = get("pa_linear_gain")
                    .map(|(l, v)| parse_complex(l, "pa_linear_gain", v))
                    .transpose()?
                    .unwrap_or(Complex64::new(1.0, 0.0));
                let a3 = get("pa_cubic_coeff")
                    .map(|(l, v)| parse_complex(l, "pa_cubic_coeff", v))
                    .transpose()?
                    .unwrap_or(Complex64::new(DEFAULT_CUBIC_COEFF, 0.0));
                PaModel::Polynomial3 {
                    linear_gain: a1,
                    cubic_coeff: a3,
                }
            }
            Some((_, "ideal")) => {
                if let Some((line, key)) = stray(&[rapp_keys, poly_keys].concat()) {
                    return Err(Error::Parse {
                        line,
                        message: format!("`{key}` does not apply to the ideal model"),
                    });
                }
                PaModel::Ideal
            }
            Some((line, other)) => {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown PA model `{other}`"),
                })
            }
        };

        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Config text that parses back to `self`.
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "channel = {}", self.channel.to_value());
        if let ChannelSource::File {
            format: Some(fmt), ..
        } = &self.channel
        {
            let name = match fmt {
                ChannelFormat::Csv => "csv",
                ChannelFormat::Json => "json",
            };
            let _ = writeln!(out, "channel_format = {name}");
        }
        let users: Vec<String> = self.users.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "users = {}", users.join(","));
        let _ = writeln!(out, "precoder = {}", self.precoder);
        if let Some(m_s) = self.m_s {
            let _ = writeln!(out, "m_s = {m_s}");
        }
        let _ = writeln!(out, "selection = {}", self.selection);
        match self.pa {
            PaModel::Rapp {
                saturation_power,
                smoothness,
            } => {
                let _ = writeln!(out, "pa = rapp");
                let _ = writeln!(out, "pa_saturation_power = {saturation_power}");
                let _ = writeln!(out, "pa_smoothness = {smoothness}");
            }
            PaModel::Polynomial3 {
                linear_gain,
                cubic_coeff,
            } => {
                let _ = writeln!(out, "pa = polynomial3");
                let _ = writeln!(out, "pa_linear_gain = {},{}", linear_gain.re, linear_gain.im);
                let _ = writeln!(out, "pa_cubic_coeff = {},{}", cubic_coeff.re, cubic_coeff.im);
            }
            PaModel::Ideal => {
                let _ = writeln!(out, "pa = ideal");
            }
        }
        let _ = writeln!(out, "backoff_db = {}", self.backoff_db);
        let _ = writeln!(out, "noise_var = {}", self.noise_var);
        let _ = writeln!(out, "ensemble_size = {}", self.ensemble_size);
        let _ = writeln!(out, "seed = {}", self.master_seed);
        out
    }
}

/// `re` or `re,im`.
fn parse_complex(line: usize, key: &str, value: &str) -> Result<Complex64> {
    let bad = || Error::Parse {
        line,
        message: format!("invalid complex value `{value}` for `{key}`"),
    };
    let mut parts = value.split(',').map(str::trim);
    let re: f64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
    let im: f64 = match parts.next() {
        Some(p) => p.parse().map_err(|_| bad())?,
        None => 0.0,
    };
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok(Complex64::new(re, im))
}
