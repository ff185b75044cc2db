//! Command-line front end: `scan`, `sweep` and `pattern`.
//!
//! Every command writes plot-ready CSV tables plus `summary.json` and a
//! `manifest.json` listing what was written. dB values are printed with six
//! decimals; clamped (zero) distortion shows up as `-inf`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{
    angular_pattern, backoff_sweep, ecdf, noise_grid_for_snr, noise_sweep, report_values,
    scan_statistics, sign_changes, single_user_scan, two_user_scan, PatternConfig, Placement,
    ReductionMode, ReductionStatistics, ScenarioConfig,
};
use crate::precoding::Selection;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "z3ro-sim", version, about = "MRT vs Z3RO precoding under nonlinear amplifiers")]
pub struct Cli {
    /// Scenario config file (`key = value` lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the config's Monte-Carlo ensemble size.
    #[arg(long, global = true)]
    pub ensemble_size: Option<usize>,
    /// Caps the worker thread count.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Overrides the Z3RO saturated-antenna selection.
    #[arg(long, global = true, value_enum)]
    pub selection: Option<SelectionArg>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectionArg {
    First,
    Smallest,
}

impl From<SelectionArg> for Selection {
    fn from(arg: SelectionArg) -> Self {
        match arg {
            SelectionArg::First => Selection::FirstIndices,
            SelectionArg::Smallest => Selection::SmallestGains,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepAxis {
    Noise,
    Backoff,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Place one user (or two) at every location and compare distortion.
    Scan {
        /// Users served at once; the config's `users` list picks the heatmap placement.
        #[arg(long)]
        users: Option<usize>,
    },
    /// Rate of both precoders along a noise or back-off grid.
    Sweep {
        #[arg(long, value_enum)]
        axis: SweepAxis,
        /// `start:stop:points` in dB (`p·M·‖h‖²/σ²` for noise, `p_in/p_sat` for back-off).
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
    },
    /// LOS angular third-order distortion pattern of both precoders.
    Pattern {
        #[arg(long, default_value_t = 32)]
        m: usize,
        /// Degrees from broadside.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        user_angle: f64,
        /// `start:stop:points` in degrees.
        #[arg(long, default_value = "-90:90:361", allow_hyphen_values = true)]
        grid: String,
        #[arg(long, default_value_t = 2)]
        ms: usize,
    },
}

/// Record of one CLI run, written as `manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    /// Resolved config in its text form; feeding it back reproduces the run.
    pub config_text: Option<String>,
    pub duration_seconds: f64,
    pub outputs: Vec<PathBuf>,
    pub clamp_counts: BTreeMap<String, usize>,
    /// Headline numbers, also printed to stdout.
    pub highlights: BTreeMap<String, f64>,
}

/// Inclusive `start:stop:points` grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || Error::Usage(format!("grid spec must be `start:stop:points`, got `{spec}`"));
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let points: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if !(start.is_finite() && stop.is_finite()) {
            return Err(bad());
        }
        if points == 0 {
            return Err(Error::Usage(format!("grid `{spec}` is empty")));
        }
        if stop < start {
            return Err(Error::Usage(format!("grid `{spec}` runs backwards")));
        }
        if points == 1 && stop != start {
            return Err(Error::Usage(format!(
                "single-point grid `{spec}` needs start == stop"
            )));
        }
        Ok(Self { start, stop, points })
    }

    pub fn values(&self) -> Vec<f64> {
        crate::experiments::linspace(self.start, self.stop, self.points)
            .expect("points validated at parse time")
    }
}

/// Parses config text / flags into a runnable scenario.
fn resolve_config(cli: &Cli, required: bool) -> Result<(ScenarioConfig, Option<PathBuf>)> {
    let (mut config, base) = match &cli.config {
        Some(path) => (
            ScenarioConfig::load(path)?,
            path.parent().map(Path::to_path_buf),
        ),
        None if required => {
            return Err(Error::Usage("this command needs --config".into()));
        }
        None => (ScenarioConfig::default(), None),
    };
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    if let Some(n) = cli.ensemble_size {
        config.ensemble_size = n;
    }
    if let Some(sel) = cli.selection {
        config.selection = sel.into();
    }
    config.validate()?;
    Ok((config, base))
}

/// Runs the parsed command line, honoring `--threads`.
pub fn run(cli: &Cli) -> Result<RunManifest> {
    match cli.threads {
        Some(0) => Err(Error::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Validation(format!("thread pool: {e}")))?
            .install(|| dispatch(cli)),
        None => dispatch(cli),
    }
}

fn dispatch(cli: &Cli) -> Result<RunManifest> {
    match &cli.command {
        Command::Scan { users } => {
            let (config, base) = resolve_config(cli, true)?;
            let users = users.unwrap_or(config.users.len());
            cmd_scan(&config, base.as_deref(), users, &cli.out)
        }
        Command::Sweep { axis, grid } => {
            let (config, base) = resolve_config(cli, true)?;
            cmd_sweep(&config, base.as_deref(), *axis, &GridSpec::parse(grid)?, &cli.out)
        }
        Command::Pattern {
            m,
            user_angle,
            grid,
            ms,
        } => {
            let (config, _) = resolve_config(cli, false)?;
            let pattern = PatternConfig {
                antennas: *m,
                user_angle: check_angle(*user_angle)?.to_radians(),
                m_s: *ms,
                selection: config.selection,
                input_power: config.reference_saturation_power() * crate::from_db(config.backoff_db),
                ensemble_size: config.ensemble_size,
                seed: config.master_seed,
                ..PatternConfig::default()
            };
            let pattern = if cli.config.is_some() {
                PatternConfig {
                    pa: config.pa,
                    ..pattern
                }
            } else {
                pattern
            };
            cmd_pattern(&pattern, &GridSpec::parse(grid)?, &cli.out)
        }
    }
}

fn check_angle(deg: f64) -> Result<f64> {
    if (-90.0..=90.0).contains(&deg) {
        Ok(deg)
    } else {
        Err(Error::Validation(format!("angle {deg} deg outside [-90, 90]")))
    }
}

fn fmt_db(v: f64) -> String {
    format!("{v:.6}")
}

struct OutputDir {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    fn finish(self, mut manifest: RunManifest) -> Result<RunManifest> {
        manifest.outputs = self.written;
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest)?;
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }
}

#[derive(Serialize)]
struct ScanSummary<'a> {
    tool_version: &'a str,
    users: usize,
    placements: usize,
    config_text: String,
    config: &'a ScenarioConfig,
    at_user: StatsSummary,
    all_locations: StatsSummary,
    clamp_count_mrt: usize,
    clamp_count_z3ro: usize,
}

#[derive(Serialize)]
struct StatsSummary {
    samples: usize,
    mean_db_gap: f64,
    mean_power_db_gap: f64,
    tail_db_gap: f64,
    tail_quantile: f64,
    max_db_gap: f64,
    median_mrt_db: f64,
    median_z3ro_db: f64,
}

impl From<&ReductionStatistics> for StatsSummary {
    fn from(s: &ReductionStatistics) -> Self {
        Self {
            samples: s.samples,
            mean_db_gap: s.mean_db_gap,
            mean_power_db_gap: s.mean_power_db_gap,
            tail_db_gap: s.tail_db_gap,
            tail_quantile: crate::experiments::TAIL_QUANTILE,
            max_db_gap: s.max_db_gap,
            median_mrt_db: s.median_mrt_db,
            median_z3ro_db: s.median_z3ro_db,
        }
    }
}

fn ecdf_csv(placements: &[Placement], mode: ReductionMode) -> Result<String> {
    let mut out = String::from("precoder,distortion_db,cumulative_fraction\n");
    for (name, values) in [
        ("mrt", placements.iter().flat_map(|p| report_values(&p.mrt, mode)).collect::<Vec<_>>()),
        ("z3ro", placements.iter().flat_map(|p| report_values(&p.z3ro, mode)).collect()),
    ] {
        for (v, f) in ecdf(&values)? {
            let _ = writeln!(out, "{name},{},{f:.6}", fmt_db(v));
        }
    }
    Ok(out)
}

/// Location scan with one or two simultaneous users.
pub fn cmd_scan(
    config: &ScenarioConfig,
    base: Option<&Path>,
    users: usize,
    out: &Path,
) -> Result<RunManifest> {
    let started = Instant::now();
    if !(users == 1 || users == 2) {
        return Err(Error::Usage(format!("--users must be 1 or 2, got {users}")));
    }
    if config.users.len() != users {
        return Err(Error::Usage(format!(
            "--users {users} needs {users} entries in the config's `users` list, found {}",
            config.users.len()
        )));
    }
    let channels = config.channel.load(base)?;
    config.validate_against(&channels)?;
    let mut out_dir = OutputDir::create(out)?;

    let placements = if users == 1 {
        single_user_scan(config, &channels)?
    } else {
        two_user_scan(config, &channels)?
    };
    let (at_user, all) = scan_statistics(&placements)?;

    out_dir.write("at_user_ecdf.csv", &ecdf_csv(&placements, ReductionMode::AtUser)?)?;
    out_dir.write("all_locations_ecdf.csv", &ecdf_csv(&placements, ReductionMode::AllLocations)?)?;

    let mut heat_users = config.users.clone();
    heat_users.sort_unstable();
    let heat = placements
        .iter()
        .find(|p| p.user_locations == heat_users)
        .expect("every placement is scanned");
    let mut heatmap = String::from("location_index,location_id");
    for k in 0..users {
        if users == 1 {
            heatmap.push_str(",mrt_db,z3ro_db");
        } else {
            let _ = write!(heatmap, ",mrt_user{k}_db,z3ro_user{k}_db");
        }
    }
    heatmap.push('\n');
    for (l, id) in channels.location_ids().iter().enumerate() {
        let _ = write!(heatmap, "{l},{id}");
        for k in 0..users {
            let _ = write!(
                heatmap,
                ",{},{}",
                fmt_db(heat.mrt.distortion_db[(l, k)]),
                fmt_db(heat.z3ro.distortion_db[(l, k)])
            );
        }
        heatmap.push('\n');
    }
    let tag: Vec<String> = heat_users.iter().map(ToString::to_string).collect();
    out_dir.write(&format!("heatmap_user{}.csv", tag.join("_")), &heatmap)?;

    let mut table = String::from(
        "placement,user,user_location,location_id,mrt_db,z3ro_db,gap_db,mrt_sndr_db,z3ro_sndr_db,mrt_rate,z3ro_rate\n",
    );
    for (i, p) in placements.iter().enumerate() {
        for (k, &loc) in p.user_locations.iter().enumerate() {
            let (dm, dz) = (p.mrt.at_user_distortion_db[k], p.z3ro.at_user_distortion_db[k]);
            let _ = writeln!(
                table,
                "{i},{k},{loc},{},{},{},{},{},{},{:.6},{:.6}",
                channels.location_ids()[loc],
                fmt_db(dm),
                fmt_db(dz),
                fmt_db(dm - dz),
                fmt_db(crate::db(p.mrt.sndr[k])),
                fmt_db(crate::db(p.z3ro.sndr[k])),
                p.mrt.rate[k],
                p.z3ro.rate[k]
            );
        }
    }
    out_dir.write("placements.csv", &table)?;

    let clamp_mrt = placements.iter().map(|p| p.mrt.clamp_count).sum();
    let clamp_z3ro = placements.iter().map(|p| p.z3ro.clamp_count).sum();
    let summary = ScanSummary {
        tool_version: TOOL_VERSION,
        users,
        placements: placements.len(),
        config_text: config.to_config_text(),
        config,
        at_user: (&at_user).into(),
        all_locations: (&all).into(),
        clamp_count_mrt: clamp_mrt,
        clamp_count_z3ro: clamp_z3ro,
    };
    out_dir.write("summary.json", &serde_json::to_string_pretty(&summary)?)?;

    let manifest = RunManifest {
        tool_version: TOOL_VERSION.into(),
        command: format!("scan --users {users}"),
        config_text: Some(config.to_config_text()),
        duration_seconds: started.elapsed().as_secs_f64(),
        outputs: Vec::new(),
        clamp_counts: BTreeMap::from([("mrt".into(), clamp_mrt), ("z3ro".into(), clamp_z3ro)]),
        highlights: BTreeMap::from([
            ("at_user.mean_db_gap".into(), at_user.mean_db_gap),
            ("at_user.tail_db_gap".into(), at_user.tail_db_gap),
            ("all_locations.median_mrt_db".into(), all.median_mrt_db),
            ("all_locations.median_z3ro_db".into(), all.median_z3ro_db),
        ]),
    };
    out_dir.finish(manifest)
}

#[derive(Serialize)]
struct SweepSummary {
    axis: &'static str,
    points: usize,
    /// Sign flips of `R_Z3RO − R_MRT` along the grid, per user.
    sign_changes: Vec<usize>,
    /// Axis value where `R_Z3RO − R_MRT` crosses zero (linear interpolation), per user.
    crossover: Vec<Option<f64>>,
    config_text: String,
}

fn crossover(axis: &[f64], diff: &[f64]) -> Option<f64> {
    axis.windows(2).zip(diff.windows(2)).find_map(|(x, d)| {
        if d[0] == 0.0 {
            Some(x[0])
        } else if (d[0] < 0.0) != (d[1] < 0.0) && d[1] != 0.0 {
            Some(x[0] + (x[1] - x[0]) * d[0] / (d[0] - d[1]))
        } else {
            None
        }
    })
}

/// Rate sweep over noise level or back-off.
pub fn cmd_sweep(
    config: &ScenarioConfig,
    base: Option<&Path>,
    axis: SweepAxis,
    grid: &GridSpec,
    out: &Path,
) -> Result<RunManifest> {
    let started = Instant::now();
    let channels = config.channel.load(base)?;
    config.validate_against(&channels)?;
    let mut out_dir = OutputDir::create(out)?;
    let k = config.users.len();
    let axis_values = grid.values();

    let (axis_name, rates): (&'static str, Vec<(Vec<f64>, Vec<f64>, Option<f64>)>) = match axis {
        SweepAxis::Noise => {
            let noise = noise_grid_for_snr(config, &channels, &axis_values)?;
            let rows = noise_sweep(config, &channels, &noise)?;
            (
                "snr_db",
                rows.into_iter()
                    .map(|r| (r.rate_mrt, r.rate_z3ro, Some(r.noise_var)))
                    .collect(),
            )
        }
        SweepAxis::Backoff => {
            let rows = backoff_sweep(config, &channels, &axis_values)?;
            (
                "backoff_db",
                rows.into_iter().map(|r| (r.rate_mrt, r.rate_z3ro, None)).collect(),
            )
        }
    };

    let mut csv = String::from(axis_name);
    for user in 0..k {
        let _ = write!(csv, ",r_mrt_user{user},r_z3ro_user{user}");
    }
    if axis == SweepAxis::Noise {
        csv.push_str(",noise_var");
    }
    csv.push('\n');
    for (x, (mrt, z3ro, noise)) in axis_values.iter().zip(&rates) {
        let _ = write!(csv, "{}", fmt_db(*x));
        for user in 0..k {
            let _ = write!(csv, ",{:.6},{:.6}", mrt[user], z3ro[user]);
        }
        if let Some(noise) = noise {
            let _ = write!(csv, ",{noise:e}");
        }
        csv.push('\n');
    }
    out_dir.write("sweep.csv", &csv)?;

    let diffs: Vec<Vec<f64>> = (0..k)
        .map(|user| rates.iter().map(|(m, z, _)| z[user] - m[user]).collect())
        .collect();
    let summary = SweepSummary {
        axis: axis_name,
        points: axis_values.len(),
        sign_changes: diffs.iter().map(|d| sign_changes(d)).collect(),
        crossover: diffs.iter().map(|d| crossover(&axis_values, d)).collect(),
        config_text: config.to_config_text(),
    };
    out_dir.write("summary.json", &serde_json::to_string_pretty(&summary)?)?;

    let mut highlights = BTreeMap::new();
    for (user, c) in summary.crossover.iter().enumerate() {
        if let Some(c) = c {
            highlights.insert(format!("user{user}.crossover_{axis_name}"), *c);
        }
    }
    let manifest = RunManifest {
        tool_version: TOOL_VERSION.into(),
        command: format!("sweep --axis {axis_name}"),
        config_text: Some(config.to_config_text()),
        duration_seconds: started.elapsed().as_secs_f64(),
        outputs: Vec::new(),
        clamp_counts: BTreeMap::new(),
        highlights,
    };
    out_dir.finish(manifest)
}

/// LOS angular pattern, grid in degrees.
pub fn cmd_pattern(config: &PatternConfig, grid: &GridSpec, out: &Path) -> Result<RunManifest> {
    let started = Instant::now();
    check_angle(config.user_angle.to_degrees())?;
    check_angle(grid.start)?;
    check_angle(grid.stop)?;
    let degrees = grid.values();
    let radians: Vec<f64> = degrees.iter().map(|d| d.to_radians()).collect();
    let points = angular_pattern(config, &radians)?;

    let mut out_dir = OutputDir::create(out)?;
    let mut csv = String::from("angle_deg,mrt_db,z3ro_db\n");
    for (deg, p) in degrees.iter().zip(&points) {
        let _ = writeln!(csv, "{},{},{}", fmt_db(*deg), fmt_db(p.mrt_db), fmt_db(p.z3ro_db));
    }
    out_dir.write("pattern.csv", &csv)?;

    // the grid point nearest the user
    let nearest = degrees
        .iter()
        .enumerate()
        .min_by(|a, b| {
            let target = config.user_angle.to_degrees();
            (a.1 - target).abs().total_cmp(&(b.1 - target).abs())
        })
        .map(|(i, _)| i)
        .expect("grid is non-empty");
    let manifest = RunManifest {
        tool_version: TOOL_VERSION.into(),
        command: "pattern".into(),
        config_text: None,
        duration_seconds: started.elapsed().as_secs_f64(),
        outputs: Vec::new(),
        clamp_counts: BTreeMap::new(),
        highlights: BTreeMap::from([
            ("user_angle.mrt_db".into(), points[nearest].mrt_db),
            ("user_angle.z3ro_db".into(), points[nearest].z3ro_db),
        ]),
    };
    out_dir.finish(manifest)
}
