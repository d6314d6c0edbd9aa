//! Command-line front end.
//!
//! Every subcommand resolves an [`ExperimentConfig`] from built-in
//! defaults, an optional JSON file and command-line flags (in that order of
//! precedence, flags last), runs the mapped library operation and writes
//! its artifacts plus a `provenance.json` sidecar into the output
//! directory. CSV artifacts start with a `# config_hash=...` line and JSON
//! artifacts carry a `config_hash` field.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bessel::{sample_y_path, BesselLaw};
use crate::csvio::{column, read_table, write_table};
use crate::ergodic::{
    chordal_tip_experiment, diffusion_time_average, radial_tip_experiment, reversibility_check,
    write_tip_records, ChordalTipConfig, RadialTipConfig, ReversibilityConfig, TestFunction, TipExperiment,
    SCHEMA_VERSION,
};
use crate::error::{ErrorClass, Result, SleError};
use crate::loewner::{compute_trace, compute_welding, extract_wholeplane_driving, ExtractOptions, Kind, C64};
use crate::sle::{sample_brownian_driving, sample_stationary, sample_wholeplane_driving, Sigma, SleParams};

/// Environment variable consulted when `--threads` is absent.
pub const THREADS_ENV: &str = "SLE_LAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SimTrace,
    Extract,
    Welding,
    BesselDensity,
    BesselSample,
    ErgodicDiffusion,
    ErgodicTip,
    ErgodicRadial,
    Reversibility,
}

macro_rules! params {
    ($($(#[$doc:meta])* $name:ident : $ty:ty),* $(,)?) => {
        /// Every numeric parameter any subcommand reads. Each subcommand
        /// uses a subset; the rest keep their defaults.
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct Params {
            $($(#[$doc])* pub $name: $ty,)*
        }

        /// Partial [`Params`], as read from a config file or the flags.
        #[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct ParamOverrides {
            $(#[serde(default, skip_serializing_if = "Option::is_none")] pub $name: Option<$ty>,)*
        }

        impl Params {
            pub fn apply(&mut self, o: &ParamOverrides) {
                $(if let Some(v) = &o.$name { self.$name = v.clone(); })*
            }
        }
    };
}

params! {
    kind: Kind,
    kappa: f64,
    /// Force weight; `None` until resolved to the subcommand's default.
    rho: Option<f64>,
    t: f64,
    t_start: f64,
    t0: f64,
    t_future: f64,
    steps: usize,
    replicas: usize,
    f: TestFunction,
    delta: f64,
    x0: f64,
    y0: f64,
    grid: usize,
    killed: bool,
    input: Option<PathBuf>,
    /// Prepend the origin to the curve (whole-plane traces start at the
    /// seed tip).
    prepend_origin: bool,
    grid_steps: Option<usize>,
    anchor_tol: f64,
    horizon: f64,
    dt: f64,
    resamples: usize,
    probe: f64,
    running_points: usize,
}

impl Params {
    pub fn defaults(cmd: Command) -> Self {
        let mut p = Params {
            kind: Kind::Chordal,
            kappa: 2.0,
            rho: None,
            t: 1.0,
            t_start: -8.0,
            t0: 1.0,
            t_future: 10.0,
            steps: 2000,
            replicas: 20,
            f: TestFunction::Cos,
            delta: 3.0,
            x0: 0.0,
            y0: 0.0,
            grid: 200,
            killed: false,
            input: None,
            prepend_origin: false,
            grid_steps: None,
            anchor_tol: 1e-8,
            horizon: 5000.0,
            dt: 0.01,
            resamples: 0,
            probe: -1.0,
            running_points: 100,
        };
        match cmd {
            Command::Welding => {
                p.steps = 1000;
                p.grid = 400;
            }
            Command::BesselSample => {
                p.t = 10.0;
                p.steps = 10_000;
            }
            Command::ErgodicDiffusion => p.kappa = 4.0,
            Command::ErgodicTip => p.steps = 4000,
            Command::ErgodicRadial => {
                p.kappa = 4.0;
                p.steps = 4000;
            }
            Command::Reversibility => {
                p.replicas = 200;
                p.t_start = -3.0;
                p.steps = 3000;
            }
            _ => {}
        }
        p
    }

    /// Default force weight of a subcommand, given `κ`.
    fn default_rho(cmd: Command, kappa: f64) -> f64 {
        match cmd {
            Command::Welding => -kappa - 6.0,
            Command::ErgodicDiffusion => 6.0,
            Command::Reversibility => kappa + 2.0,
            _ => 0.0,
        }
    }
}

/// Statistical gates; unset gates never fail.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Largest accepted `|empirical - analytic| / stderr`.
    #[serde(default)]
    pub max_z: Option<f64>,
    /// Significance level of the reversibility KS test.
    #[serde(default)]
    pub ks_level: Option<f64>,
    /// Standard error above which a time average is flagged.
    #[serde(default)]
    pub stderr: Option<f64>,
}

/// Fully resolved run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub params: Params,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// Config file layout: any subset of [`ExperimentConfig`].
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    command: Option<Command>,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
    #[serde(default)]
    params: ParamOverrides,
    tolerances: Option<Tolerances>,
}

impl ExperimentConfig {
    /// SHA-256 of the canonical JSON form with the output directory
    /// blanked, so that the same run in two places hashes alike.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        let json = serde_json::to_string(&c).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Parser)]
#[command(name = "sle-lab", version, about = "Loewner chains, SLE drivers and tip ergodics")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (falls back to SLE_LAB_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    max_z: Option<f64>,
    #[arg(long, global = true)]
    ks_level: Option<f64>,
    #[arg(long, global = true)]
    stderr_tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Sample a driving function and its trace.
    SimTrace {
        #[arg(long)]
        kind: Option<Kind>,
        #[arg(long)]
        kappa: Option<f64>,
        /// Force weight (whole-plane only).
        #[arg(long, allow_hyphen_values = true)]
        rho: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        /// Duration for chordal and radial traces.
        #[arg(long)]
        t: Option<f64>,
        /// Start capacity for whole-plane traces.
        #[arg(long, allow_hyphen_values = true)]
        t_start: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Whole-plane driving function of a curve given as `re, im` columns.
    Extract {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Prepend the origin, as needed for traces written by sim-trace.
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        prepend_origin: Option<bool>,
        #[arg(long)]
        grid_steps: Option<usize>,
        #[arg(long)]
        anchor_tol: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Welding of a stationary backward radial SLE(κ;ρ).
    Welding {
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        rho: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        grid: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Cell-averaged transition density of Y = cos X.
    BesselDensity {
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<f64>,
        #[arg(long)]
        grid: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Euler–Maruyama path of Y = cos X.
    BesselSample {
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        y0: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        killed: Option<bool>,
        #[command(flatten)]
        common: Common,
    },
    /// Time average of f(Z) along a stationary SLE(κ;ρ) diffusion.
    ErgodicDiffusion {
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        rho: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        f: Option<TestFunction>,
        #[command(flatten)]
        common: Common,
    },
    /// Harmonic-measure average at the tip of chordal SLE_κ.
    ErgodicTip {
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        t0: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        replicas: Option<usize>,
        #[arg(long)]
        f: Option<TestFunction>,
        #[command(flatten)]
        common: Common,
    },
    /// Harmonic-measure average at the end of radial SLE_κ.
    ErgodicRadial {
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        t_future: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        replicas: Option<usize>,
        #[arg(long)]
        f: Option<TestFunction>,
        #[command(flatten)]
        common: Common,
    },
    /// Forward against reversed Z statistics of whole-plane SLE(κ;ρ).
    Reversibility {
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        replicas: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        rho: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        t_start: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        resamples: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

impl clap::ValueEnum for Kind {
    fn value_variants<'a>() -> &'a [Self] {
        &[Kind::Chordal, Kind::Radial, Kind::WholePlane]
    }
    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.name()))
    }
}

impl clap::ValueEnum for TestFunction {
    fn value_variants<'a>() -> &'a [Self] {
        &[TestFunction::One, TestFunction::Cos, TestFunction::Sin]
    }
    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.name()))
    }
}

impl Cmd {
    fn split(self) -> (Command, ParamOverrides, Common) {
        let mut o = ParamOverrides::default();
        let (cmd, common) = match self {
            Cmd::SimTrace { kind, kappa, rho, steps, t, t_start, common } => {
                (o.kind, o.kappa, o.rho, o.steps, o.t, o.t_start) = (kind, kappa, rho.map(Some), steps, t, t_start);
                (Command::SimTrace, common)
            }
            Cmd::Extract { input, prepend_origin, grid_steps, anchor_tol, common } => {
                (o.input, o.prepend_origin, o.grid_steps, o.anchor_tol) =
                    (input.map(Some), prepend_origin, grid_steps.map(Some), anchor_tol);
                (Command::Extract, common)
            }
            Cmd::Welding { kappa, rho, t, steps, grid, common } => {
                (o.kappa, o.rho, o.t, o.steps, o.grid) = (kappa, rho.map(Some), t, steps, grid);
                (Command::Welding, common)
            }
            Cmd::BesselDensity { delta, t, x0, grid, common } => {
                (o.delta, o.t, o.x0, o.grid) = (delta, t, x0, grid);
                (Command::BesselDensity, common)
            }
            Cmd::BesselSample { delta, y0, t, steps, killed, common } => {
                (o.delta, o.y0, o.t, o.steps, o.killed) = (delta, y0, t, steps, killed);
                (Command::BesselSample, common)
            }
            Cmd::ErgodicDiffusion { kappa, rho, horizon, dt, f, common } => {
                (o.kappa, o.rho, o.horizon, o.dt, o.f) = (kappa, rho.map(Some), horizon, dt, f);
                (Command::ErgodicDiffusion, common)
            }
            Cmd::ErgodicTip { kappa, t0, steps, replicas, f, common } => {
                (o.kappa, o.t0, o.steps, o.replicas, o.f) = (kappa, t0, steps, replicas, f);
                (Command::ErgodicTip, common)
            }
            Cmd::ErgodicRadial { kappa, t_future, steps, replicas, f, common } => {
                (o.kappa, o.t_future, o.steps, o.replicas, o.f) = (kappa, t_future, steps, replicas, f);
                (Command::ErgodicRadial, common)
            }
            Cmd::Reversibility { kappa, replicas, rho, t_start, steps, resamples, common } => {
                (o.kappa, o.replicas, o.rho, o.t_start, o.steps, o.resamples) =
                    (kappa, replicas, rho.map(Some), t_start, steps, resamples);
                (Command::Reversibility, common)
            }
        };
        (cmd, o, common)
    }
}

/// Defaults, then the config file, then the flags.
fn resolve(cmd: Command, flags: &ParamOverrides, common: &Common) -> Result<ExperimentConfig> {
    let file = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| SleError::Io(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<ConfigFile>(&text)
                .map_err(|e| SleError::InvalidInput(format!("config {}: {e}", path.display())))?
        }
        None => ConfigFile::default(),
    };
    if let Some(c) = file.command {
        if c != cmd {
            return Err(SleError::InvalidInput(format!("config is for {c:?}, not {cmd:?}")));
        }
    }
    let mut params = Params::defaults(cmd);
    params.apply(&file.params);
    params.apply(flags);
    if params.rho.is_none() {
        params.rho = Some(Params::default_rho(cmd, params.kappa));
    }
    let mut tolerances = file.tolerances.unwrap_or_default();
    if common.max_z.is_some() {
        tolerances.max_z = common.max_z;
    }
    if common.ks_level.is_some() {
        tolerances.ks_level = common.ks_level;
    }
    if common.stderr_tol.is_some() {
        tolerances.stderr = common.stderr_tol;
    }
    Ok(ExperimentConfig {
        command: cmd,
        seed: common.seed.or(file.seed).unwrap_or(0),
        out_dir: common.out.clone().or(file.out_dir).unwrap_or_else(|| PathBuf::from("out")),
        params,
        tolerances,
    })
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| SleError::InvalidInput(format!("{THREADS_ENV}={v:?} is not a thread count"))),
        _ => Ok(None),
    }
}

/// Writes artifacts into the output directory and remembers their names.
struct Sink {
    dir: PathBuf,
    hash: String,
    written: Vec<String>,
}

impl Sink {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        self.written.push(name.to_string());
        Ok(BufWriter::new(File::create(path)?))
    }

    fn comment(&self) -> String {
        format!("config_hash={}", self.hash)
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
        let c = self.comment();
        let out = self.create(name)?;
        write_table(out, Some(&c), header, rows)
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut v = serde_json::to_value(value).map_err(|e| SleError::Io(e.to_string()))?;
        if let serde_json::Value::Object(m) = &mut v {
            m.insert("config_hash".into(), self.hash.clone().into());
            m.entry("schema_version").or_insert(SCHEMA_VERSION.into());
        }
        let mut out = self.create(name)?;
        serde_json::to_writer_pretty(&mut out, &v).map_err(|e| SleError::Io(e.to_string()))?;
        writeln!(out)?;
        out.flush()?;
        Ok(())
    }
}

/// Runs one resolved configuration and writes its artifacts.
pub fn execute(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let mut sink = Sink { dir: cfg.out_dir.clone(), hash: cfg.hash(), written: Vec::new() };
    fs::create_dir_all(&sink.dir)?;
    let p = &cfg.params;
    let rho = p.rho.expect("resolved");
    let mut gate: Option<SleError> = None;
    match cfg.command {
        Command::SimTrace => {
            let driving = match p.kind {
                Kind::WholePlane => {
                    let params = SleParams::new(p.kappa, rho, Sigma::Forward, cfg.seed);
                    sample_wholeplane_driving(&params, p.t_start, p.steps)?
                }
                kind => {
                    let mut d = sample_brownian_driving(p.kappa, p.t, p.steps, cfg.seed)?;
                    d.kind = kind;
                    d
                }
            };
            let trace = compute_trace(&driving)?;
            let c = sink.comment();
            driving.write_csv(sink.create("driving.csv")?, Some(&c))?;
            trace.write_csv(sink.create("trace.csv")?, Some(&c))?;
        }
        Command::Extract => {
            let path = p.input.as_ref().ok_or_else(|| SleError::InvalidInput("extract needs --input".into()))?;
            let mut curve = read_curve(path)?;
            if p.prepend_origin {
                curve.insert(0, C64::new(0.0, 0.0));
            }
            let opts = ExtractOptions { anchor_tol: p.anchor_tol, grid_steps: p.grid_steps, ..Default::default() };
            let d = extract_wholeplane_driving(&curve, &opts)?;
            let q = d.q.clone().expect("extraction yields q");
            let rows = (0..d.lambda.len()).map(|k| vec![d.time(k), d.lambda[k], q[k], d.lambda[k] - q[k]]);
            sink.csv("driving.csv", &["t", "lambda", "q", "z"], rows)?;
        }
        Command::Welding => {
            let params = SleParams::new(p.kappa, rho, Sigma::Backward, cfg.seed);
            let driving = sample_stationary(&params, p.t, p.steps)?.to_driving(Kind::Radial)?;
            let table = compute_welding(&driving, p.grid)?;
            let rows = table.grid.iter().zip(&table.partner).map(|(x, w)| match w {
                Some(y) => vec![*x, *y, 1.0],
                None => vec![*x, f64::NAN, 0.0],
            });
            sink.csv("welding.csv", &["x", "partner", "welded"], rows)?;
            sink.json(
                "welding.json",
                &serde_json::json!({
                    "fixed_points": table.fixed_points,
                    "max_involution_error": table.max_involution_error,
                    "unwelded": table.unwelded().count(),
                    "lambda0": driving.lambda[0],
                    "q0": driving.q.as_ref().map(|q| q[0]),
                }),
            )?;
        }
        Command::BesselDensity => {
            let law = BesselLaw::new(p.delta)?;
            let rows = law.density_table(p.t, p.x0, p.grid)?;
            sink.csv("density.csv", &["x", "y", "t", "value"], rows.iter().map(|r| r.to_vec()))?;
        }
        Command::BesselSample => {
            let path = sample_y_path(p.delta, p.y0, p.t, p.steps, cfg.seed, p.killed)?;
            let c = sink.comment();
            path.write_csv(sink.create("path.csv")?, Some(&c))?;
        }
        Command::ErgodicDiffusion => {
            if !(p.dt > 0.0 && p.horizon > 0.0) {
                return Err(SleError::InvalidInput("need dt > 0 and horizon > 0".into()));
            }
            let steps = (p.horizon / p.dt).round() as usize;
            let params = SleParams::new(p.kappa, rho, Sigma::Forward, cfg.seed);
            let path = sample_stationary(&params, p.horizon, steps)?;
            let report = diffusion_time_average(&path, p.f, cfg.tolerances.stderr)?;
            gate = z_gate(report.z_score(), cfg);
            let stride = (steps / p.running_points.max(1)).max(1);
            let mut acc = 0.0;
            let mut rows = Vec::new();
            for k in 1..path.len() {
                acc += 0.5 * (p.f.eval(path.z[k - 1]) + p.f.eval(path.z[k])) * path.dt;
                if k % stride == 0 || k == path.len() - 1 {
                    let h = k as f64 * path.dt;
                    rows.push(vec![h, acc / h]);
                }
            }
            sink.csv("running_average.csv", &["horizon", "running_average"], rows)?;
            sink.json("report.json", &report)?;
        }
        Command::ErgodicTip | Command::ErgodicRadial => {
            let exp = if cfg.command == Command::ErgodicTip {
                chordal_tip_experiment(&ChordalTipConfig {
                    kappa: p.kappa,
                    t0: p.t0,
                    steps: p.steps,
                    replicas: p.replicas,
                    seed: cfg.seed,
                    f: p.f,
                })?
            } else {
                radial_tip_experiment(&RadialTipConfig {
                    kappa: p.kappa,
                    t_future: p.t_future,
                    steps: p.steps,
                    replicas: p.replicas,
                    seed: cfg.seed,
                    f: p.f,
                })?
            };
            gate = z_gate(exp.report.z_score(), cfg);
            write_tip_outputs(&mut sink, &exp, p)?;
        }
        Command::Reversibility => {
            let rc = ReversibilityConfig {
                kappa: p.kappa,
                replicas: p.replicas,
                seed: cfg.seed,
                rho: Some(rho),
                t_start: p.t_start,
                steps: p.steps,
                probe: p.probe,
                resamples: p.resamples,
            };
            let r = reversibility_check(&rc)?;
            if let Some(level) = cfg.tolerances.ks_level {
                if !r.ks.passes(level) {
                    gate = Some(SleError::StatisticalGate(format!(
                        "KS p-value {:.3e} below {level}",
                        r.ks.p_value
                    )));
                }
            }
            let n = r.forward.len().max(r.reversed.len());
            let rows = (0..n).map(|i| {
                vec![i as f64, r.forward.get(i).copied().unwrap_or(f64::NAN), r.reversed.get(i).copied().unwrap_or(f64::NAN)]
            });
            sink.csv("samples.csv", &["replica", "forward_z", "reversed_z"], rows)?;
            sink.json("report.json", &r)?;
        }
    }
    let written = sink.written.clone();
    sink.json(
        "provenance.json",
        &serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "version": env!("CARGO_PKG_VERSION"),
            "config": cfg,
            "outputs": written,
        }),
    )?;
    match gate {
        Some(e) => Err(e),
        None => Ok(sink.written),
    }
}

fn z_gate(z: f64, cfg: &ExperimentConfig) -> Option<SleError> {
    let limit = cfg.tolerances.max_z?;
    (z.abs() > limit || z.is_nan())
        .then(|| SleError::StatisticalGate(format!("|z| = {:.3} exceeds {limit}", z.abs())))
}

fn write_tip_outputs(sink: &mut Sink, exp: &TipExperiment, p: &Params) -> Result<()> {
    let c = sink.comment();
    for r in &exp.replicas {
        let out = sink.create(&format!("tips/replica_{:04}.csv", r.index))?;
        write_tip_records(&r.records, out, Some(&c))?;
    }
    let out = sink.create("running_average.csv")?;
    exp.write_running_average(p.f, p.running_points, out, Some(&c))?;
    sink.json("report.json", &exp.report)
}

fn read_curve(path: &Path) -> Result<Vec<C64>> {
    let file = File::open(path).map_err(|e| SleError::Io(format!("{}: {e}", path.display())))?;
    let (header, rows) = read_table(BufReader::new(file))?;
    let (re, im) = (column(&header, "re")?, column(&header, "im")?);
    Ok(rows.iter().map(|r| C64::new(r[re], r[im])).collect())
}

/// Machine-readable error payload printed on standard error.
pub fn error_json(e: &SleError) -> String {
    let class = match e.class() {
        ErrorClass::Validation => "validation",
        ErrorClass::Numerical => "numerical",
        ErrorClass::Statistical => "statistical",
    };
    serde_json::json!({ "error": e.tag(), "class": class, "message": e.to_string() }).to_string()
}

pub fn exit_code(e: &SleError) -> i32 {
    match e.class() {
        ErrorClass::Validation => 2,
        ErrorClass::Numerical => 3,
        ErrorClass::Statistical => 4,
    }
}

/// Parses `argv`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let err = SleError::InvalidInput(e.to_string().trim().to_string());
            eprintln!("{}", error_json(&err));
            return 2;
        }
    };
    let (cmd, flags, common) = cli.command.split();
    let outcome = resolve(cmd, &flags, &common).and_then(|cfg| {
        let threads = thread_count(common.threads)?;
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            builder = builder.num_threads(n);
        }
        let pool = builder.build().map_err(|e| SleError::InvalidInput(e.to_string()))?;
        pool.install(|| execute(&cfg))
    });
    match outcome {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_json() {
        let cfg = resolve(Command::ErgodicTip, &ParamOverrides::default(), &Common {
            config: None,
            seed: Some(3),
            out: None,
            threads: None,
            max_z: Some(3.0),
            ks_level: None,
            stderr_tol: None,
        })
        .unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.params.rho, Some(0.0));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"seed": 1, "params": {"kapa": 2.0}}"#;
        assert!(serde_json::from_str::<ConfigFile>(text).is_err());
        let text = r#"{"seed": 1, "colour": "red"}"#;
        assert!(serde_json::from_str::<ConfigFile>(text).is_err());
    }

    #[test]
    fn hash_ignores_the_output_directory() {
        let mut a = ExperimentConfig {
            command: Command::BesselDensity,
            seed: 0,
            out_dir: "a".into(),
            params: Params::defaults(Command::BesselDensity),
            tolerances: Tolerances::default(),
        };
        let h = a.hash();
        a.out_dir = "b".into();
        assert_eq!(a.hash(), h);
        a.seed = 1;
        assert_ne!(a.hash(), h);
    }
}
