//! Channel sets: measured files and synthetic generators.
//!
//! A [`ChannelSet`] holds one complex gain per (antenna, location) pair. The
//! gains are used as-is; there is no normalization on load, so path-loss
//! differences between locations stay visible downstream.
//!
//! Text format (`csv`):
//!
//! ```text
//! # M=2 L=2
//! 1.0,0.0,0.0,1.0
//! 0.5,0.5,-0.5,0.5
//! ```
//!
//! One row per antenna with `re_0,im_0,...,re_{L-1},im_{L-1}`. Extra comment
//! lines after the header may carry `# location_ids=a,b,...` and
//! `# meta.<key>=<value>`; other comment and blank lines are ignored.
//!
//! JSON format: `{"m": M, "l": L, "location_ids": [...], "gains": [[[re, im]; L]; M]}`
//! with an optional `"metadata"` string map.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex gains for `M` antennas × `L` locations.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    gains: Array2<Complex64>,
    location_ids: Vec<String>,
    metadata: BTreeMap<String, String>,
}

/// Channel from every antenna to one user.
#[derive(Debug, Clone, PartialEq)]
pub struct UserChannel {
    pub gains: Vec<Complex64>,
    pub source_location: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelFormat {
    Csv,
    Json,
}

impl ChannelFormat {
    /// Guesses the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => ChannelFormat::Json,
            _ => ChannelFormat::Csv,
        }
    }
}

impl FromStr for ChannelFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ChannelFormat::Csv),
            "json" => Ok(ChannelFormat::Json),
            other => Err(Error::Validation(format!("unknown channel format `{other}`"))),
        }
    }
}

fn default_ids(l: usize) -> Vec<String> {
    (0..l).map(|i| i.to_string()).collect()
}

impl ChannelSet {
    /// Builds a set with numeric location ids `0..L`.
    pub fn new(gains: Array2<Complex64>) -> Result<Self> {
        let ids = default_ids(gains.ncols());
        Self::with_ids(gains, ids)
    }

    pub fn with_ids(gains: Array2<Complex64>, location_ids: Vec<String>) -> Result<Self> {
        let (m, l) = gains.dim();
        if m == 0 || l == 0 {
            return Err(Error::Validation(format!(
                "channel set needs M >= 1 and L >= 1, got M={m} L={l}"
            )));
        }
        if location_ids.len() != l {
            return Err(Error::Validation(format!(
                "{} location ids for {l} locations",
                location_ids.len()
            )));
        }
        let mut seen = HashSet::new();
        for id in &location_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::Validation(format!("duplicate location id `{id}`")));
            }
        }
        if let Some(((a, loc), _)) = gains
            .indexed_iter()
            .find(|(_, g)| !(g.re.is_finite() && g.im.is_finite()))
        {
            return Err(Error::Validation(format!(
                "non-finite gain at antenna {a}, location {loc}"
            )));
        }
        Ok(Self {
            gains,
            location_ids,
            metadata: BTreeMap::new(),
        })
    }

    pub fn with_metadata(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.insert(key.into(), value.into());
        self
    }

    pub fn antenna_count(&self) -> usize {
        self.gains.nrows()
    }

    pub fn location_count(&self) -> usize {
        self.gains.ncols()
    }

    pub fn gains(&self) -> &Array2<Complex64> {
        &self.gains
    }

    /// Column `l`: the gains from every antenna to location `l`.
    pub fn location(&self, l: usize) -> ArrayView1<'_, Complex64> {
        self.gains.column(l)
    }

    pub fn location_ids(&self) -> &[String] {
        &self.location_ids
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    /// Picks location `index` as a user channel.
    pub fn select_user_channel(&self, index: usize) -> Result<UserChannel> {
        let l = self.location_count();
        if index >= l {
            return Err(Error::Bounds { index, len: l });
        }
        UserChannel::new(
            self.gains.column(index).to_vec(),
            Some(self.location_ids[index].clone()),
        )
    }

    pub fn load(path: impl AsRef<Path>, format: ChannelFormat) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        match format {
            ChannelFormat::Csv => Self::parse_csv(&text),
            ChannelFormat::Json => Self::parse_json(&text),
        }
    }

    pub fn write(&self, path: impl AsRef<Path>, format: ChannelFormat) -> Result<()> {
        let path = path.as_ref();
        let text = match format {
            ChannelFormat::Csv => self.to_csv(),
            ChannelFormat::Json => self.to_json()?,
        };
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, line)| (i + 1, line.trim()))
            .filter(|(_, line)| !line.is_empty());

        let (header_line, header) = lines
            .next()
            .ok_or_else(|| Error::Validation("empty channel file".into()))?;
        let (m, l) = parse_header(header).ok_or_else(|| Error::Parse {
            line: header_line,
            message: format!("expected `# M=<int> L=<int>`, found `{header}`"),
        })?;
        if m == 0 || l == 0 {
            return Err(Error::Validation(format!(
                "channel set needs M >= 1 and L >= 1, got M={m} L={l}"
            )));
        }

        let mut ids = None;
        let mut metadata = BTreeMap::new();
        let mut data = Vec::with_capacity(m * l);
        let mut rows = 0;
        for (line_no, line) in lines {
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(list) = comment.strip_prefix("location_ids=") {
                    ids = Some(list.split(',').map(|s| s.trim().to_string()).collect());
                } else if let Some(kv) = comment.strip_prefix("meta.") {
                    if let Some((k, v)) = kv.split_once('=') {
                        metadata.insert(k.trim().to_string(), v.trim().to_string());
                    }
                }
                continue;
            }
            rows += 1;
            if rows > m {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("more than M={m} antenna rows"),
                });
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 2 * l {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {} fields, found {}", 2 * l, fields.len()),
                });
            }
            for pair in fields.chunks_exact(2) {
                let re = parse_field(pair[0], line_no)?;
                let im = parse_field(pair[1], line_no)?;
                data.push(Complex64::new(re, im));
            }
        }
        if rows != m {
            return Err(Error::Parse {
                line: header_line,
                message: format!("header declares M={m} rows, file has {rows}"),
            });
        }

        let gains = Array2::from_shape_vec((m, l), data)
            .map_err(|e| Error::Dimension(e.to_string()))?;
        let mut set = Self::with_ids(gains, ids.unwrap_or_else(|| default_ids(l)))?;
        set.metadata = metadata;
        Ok(set)
    }

    /// Serializes with shortest round-trip decimal formatting, so loading the
    /// output reproduces every gain bit for bit.
    pub fn to_csv(&self) -> String {
        let (m, l) = self.gains.dim();
        let mut out = format!("# M={m} L={l}\n");
        if self.location_ids != default_ids(l) {
            let _ = writeln!(out, "# location_ids={}", self.location_ids.join(","));
        }
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# meta.{k}={v}");
        }
        out.push_str(&complex_rows_csv(&self.gains));
        out
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let raw: JsonChannelSet = serde_json::from_str(text)?;
        if raw.gains.len() != raw.m {
            return Err(Error::Validation(format!(
                "`m` is {} but gains has {} rows",
                raw.m,
                raw.gains.len()
            )));
        }
        let mut data = Vec::with_capacity(raw.m * raw.l);
        for (a, row) in raw.gains.iter().enumerate() {
            if row.len() != raw.l {
                return Err(Error::Validation(format!(
                    "antenna {a} has {} locations, expected {}",
                    row.len(),
                    raw.l
                )));
            }
            data.extend(row.iter().map(|[re, im]| Complex64::new(*re, *im)));
        }
        let gains = Array2::from_shape_vec((raw.m, raw.l), data)
            .map_err(|e| Error::Validation(e.to_string()))?;
        let ids = raw.location_ids.unwrap_or_else(|| default_ids(raw.l));
        let mut set = Self::with_ids(gains, ids)?;
        set.metadata = raw.metadata;
        Ok(set)
    }

    pub fn to_json(&self) -> Result<String> {
        let (m, l) = self.gains.dim();
        let raw = JsonChannelSet {
            m,
            l,
            location_ids: Some(self.location_ids.clone()),
            gains: self
                .gains
                .rows()
                .into_iter()
                .map(|row| row.iter().map(|g| [g.re, g.im]).collect())
                .collect(),
            metadata: self.metadata.clone(),
        };
        Ok(serde_json::to_string_pretty(&raw)?)
    }
}

#[derive(Serialize, Deserialize)]
struct JsonChannelSet {
    m: usize,
    l: usize,
    #[serde(default)]
    location_ids: Option<Vec<String>>,
    gains: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    metadata: BTreeMap<String, String>,
}

fn parse_header(header: &str) -> Option<(usize, usize)> {
    let body = header.strip_prefix('#')?;
    let mut m = None;
    let mut l = None;
    for token in body.split_whitespace() {
        let (key, value) = token.split_once('=')?;
        match key {
            "M" => m = Some(value.parse().ok()?),
            "L" => l = Some(value.parse().ok()?),
            _ => return None,
        }
    }
    Some((m?, l?))
}

fn parse_field(field: &str, line: usize) -> Result<f64> {
    let value: f64 = field.parse().map_err(|_| Error::Parse {
        line,
        message: format!("`{field}` is not a decimal number"),
    })?;
    if !value.is_finite() {
        return Err(Error::Validation(format!(
            "non-finite value `{field}` on line {line}"
        )));
    }
    Ok(value)
}

/// One CSV row per matrix row with interleaved `re,im` columns.
pub(crate) fn complex_rows_csv(matrix: &Array2<Complex64>) -> String {
    let mut out = String::new();
    for row in matrix.rows() {
        let mut first = true;
        for g in row {
            if !first {
                out.push(',');
            }
            first = false;
            let _ = write!(out, "{},{}", g.re, g.im);
        }
        out.push('\n');
    }
    out
}

impl UserChannel {
    pub fn new(gains: Vec<Complex64>, source_location: Option<String>) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::Validation("user channel has no antennas".into()));
        }
        if gains.iter().any(|g| !(g.re.is_finite() && g.im.is_finite())) {
            return Err(Error::Validation("user channel has non-finite gains".into()));
        }
        if gains.iter().all(|g| g.norm_sqr() == 0.0) {
            let at = source_location.as_deref().unwrap_or("<unnamed>");
            return Err(Error::Validation(format!(
                "user channel at location {at} is all zero"
            )));
        }
        Ok(Self {
            gains,
            source_location,
        })
    }

    pub fn antenna_count(&self) -> usize {
        self.gains.len()
    }

    /// `Σ_m |h_m|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.gains.iter().map(|g| g.norm_sqr()).sum()
    }
}

/// Line-of-sight uniform linear array steering vector,
/// `h_m = gain · exp(j·2π·spacing·m·sin(angle))`.
pub fn synth_los_ula(m: usize, angle: f64, element_spacing: f64, gain: f64) -> Result<UserChannel> {
    if m == 0 {
        return Err(Error::Validation("ULA needs at least one antenna".into()));
    }
    if !(element_spacing > 0.0 && element_spacing.is_finite()) {
        return Err(Error::Validation(format!(
            "element spacing must be positive, got {element_spacing}"
        )));
    }
    if !(gain > 0.0 && gain.is_finite()) {
        return Err(Error::Validation(format!("gain must be positive, got {gain}")));
    }
    let phase_step = 2.0 * std::f64::consts::PI * element_spacing * angle.sin();
    let gains = (0..m)
        .map(|i| Complex64::from_polar(gain, phase_step * i as f64))
        .collect();
    UserChannel::new(gains, None)
}

/// Set of LOS steering vectors, one location per angle (radians).
pub fn synth_los_set(m: usize, angles: &[f64], element_spacing: f64) -> Result<ChannelSet> {
    let mut gains = Array2::zeros((m, angles.len()));
    for (l, &angle) in angles.iter().enumerate() {
        let h = synth_los_ula(m, angle, element_spacing, 1.0)?;
        gains
            .column_mut(l)
            .iter_mut()
            .zip(&h.gains)
            .for_each(|(dst, src)| *dst = *src);
    }
    Ok(ChannelSet::new(gains)?
        .with_metadata("array", "ULA")
        .with_metadata("element_spacing", element_spacing.to_string()))
}

/// I.i.d. `CN(0, 1)` channel gains, reproducible under `seed`.
pub fn synth_rayleigh(m: usize, l: usize, seed: u64) -> Result<ChannelSet> {
    if m == 0 || l == 0 {
        return Err(Error::Validation(format!(
            "channel set needs M >= 1 and L >= 1, got M={m} L={l}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let gains = Array2::from_shape_simple_fn((m, l), || {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(scale * re, scale * im)
    });
    ChannelSet::new(gains)
}
