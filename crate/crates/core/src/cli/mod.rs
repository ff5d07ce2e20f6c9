//! Command-line front end: run configuration, sweep execution and the
//! `run` / `verify` subcommands. The binary only forwards its arguments to
//! [`main_entry`].

mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ModelSpec, QubitRingSpec, SpinRingSpec};
use crate::oracle::{collect_sweeps, sweep_points, Method, SweepOptions};
use crate::verify::{self, VerifyOptions};

pub use output::{csv_string, svg_string, Manifest};

pub const THREADS_ENV: &str = "LIOUVILLE_PT_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ModelKind {
    SpinRing,
    QubitRing,
}

/// `name:start:stop:points`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: String,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl std::str::FromStr for SweepSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::InvalidConfig(format!("sweep {s:?} is not name:start:stop:points"));
        if parts.len() != 4 || parts[0].is_empty() {
            return Err(bad());
        }
        Ok(SweepSpec {
            parameter: parts[0].to_string(),
            start: parts[1].parse().map_err(|_| bad())?,
            stop: parts[2].parse().map_err(|_| bad())?,
            points: parts[3].parse().map_err(|_| bad())?,
        })
    }
}

impl SweepSpec {
    pub fn grid(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|k| {
                if k + 1 == n {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * k as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

/// Everything a run depends on. Spin-ring parameters are in units of `γ`,
/// qubit-ring parameters in units of `ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelKind,
    pub sites: usize,
    pub eps_over_gamma: f64,
    pub t_over_gamma: f64,
    pub kappa_over_eps: f64,
    pub g_over_eps: f64,
    pub gamma_a_over_eps: f64,
    pub gamma_q_over_eps: f64,
    pub fock_cutoff: usize,
    pub sweep: SweepSpec,
    pub methods: Vec<Method>,
    pub order: usize,
    /// Correction-matrix parameter; `None` applies the default policy.
    pub reg_c: Option<f64>,
    pub output: PathBuf,
    /// Worker threads; `None` uses all cores.
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::SpinRing,
            sites: 4,
            eps_over_gamma: 0.8,
            t_over_gamma: 0.4,
            kappa_over_eps: 10.0,
            g_over_eps: 0.5,
            gamma_a_over_eps: 0.05,
            gamma_q_over_eps: 0.05,
            fock_cutoff: 3,
            sweep: SweepSpec { parameter: "delta_omega".into(), start: -3.0, stop: 3.0, points: 201 },
            methods: Method::ALL.to_vec(),
            order: 2,
            reg_c: None,
            output: PathBuf::from("out"),
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sweep.points < 2 {
            return Err(Error::InvalidConfig(format!("sweep needs >= 2 points, got {}", self.sweep.points)));
        }
        if !self.sweep.start.is_finite() || !self.sweep.stop.is_finite() {
            return Err(Error::InvalidConfig("sweep bounds must be finite".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no methods requested".into()));
        }
        if let Some(c) = self.reg_c {
            if !(c >= 0.0) || !c.is_finite() {
                return Err(Error::InvalidConfig(format!("reg_c must be >= 0, got {c}")));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("threads must be >= 1".into()));
        }
        let spec = self.model_spec()?;
        match &spec {
            ModelSpec::SpinRing(s) => s.validate()?,
            ModelSpec::QubitRing(s) => s.validate()?,
        }
        self.model_parameter()?;
        Ok(())
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        Ok(match self.model {
            ModelKind::SpinRing => ModelSpec::SpinRing(SpinRingSpec {
                n_sites: self.sites,
                delta_omega: 0.0,
                epsilon: self.eps_over_gamma,
                t_coupling: self.t_over_gamma,
                gamma: 1.0,
            }),
            ModelKind::QubitRing => ModelSpec::QubitRing(QubitRingSpec {
                fock_cutoff: self.fock_cutoff,
                delta_omega: 0.0,
                epsilon: 1.0,
                kappa: self.kappa_over_eps,
                g: self.g_over_eps,
                gamma_a: self.gamma_a_over_eps,
                gamma_q: self.gamma_q_over_eps,
            }),
        })
    }

    /// Model parameter the sweep drives. Ratios to the unit rate map onto
    /// the plain parameter since that rate is 1.
    pub fn model_parameter(&self) -> Result<&'static str> {
        let name = self.sweep.parameter.as_str();
        let mapped = match (self.model, name) {
            (ModelKind::SpinRing, "delta_omega" | "delta_omega_over_gamma") => "delta_omega",
            (ModelKind::SpinRing, "epsilon" | "eps_over_gamma") => "epsilon",
            (ModelKind::SpinRing, "t" | "t_over_gamma") => "t",
            (ModelKind::QubitRing, "delta_omega" | "delta_omega_over_eps") => "delta_omega",
            (ModelKind::QubitRing, "kappa" | "kappa_over_eps") => "kappa",
            (ModelKind::QubitRing, "g" | "g_over_eps") => "g",
            (ModelKind::QubitRing, "gamma_a" | "gamma_a_over_eps") => "gamma_a",
            (ModelKind::QubitRing, "gamma_q" | "gamma_q_over_eps") => "gamma_q",
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "cannot sweep {name:?} for {}",
                    match self.model {
                        ModelKind::SpinRing => "spin_ring",
                        ModelKind::QubitRing => "qubit_ring",
                    }
                )))
            }
        };
        Ok(mapped)
    }

    pub fn sweep_options(&self) -> SweepOptions {
        let mut methods = Vec::new();
        for m in &self.methods {
            if !methods.contains(m) {
                methods.push(*m);
            }
        }
        SweepOptions { methods, order: self.order, reg_c: self.reg_c, ..Default::default() }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
    pub svg_paths: Vec<PathBuf>,
    /// Grid points at which at least one method failed.
    pub failed_points: usize,
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::Internal(format!("thread pool: {e}")))
}

/// Evaluates the sweep and writes `<model>.csv`, `manifest.json` and one
/// `<model>_<observable>.svg` per observable into `config.output`.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let start = Instant::now();
    let model = config.model_spec()?;
    let parameter = config.model_parameter()?;
    let grid = config.sweep.grid();
    let opts = config.sweep_options();
    let pool = thread_pool(config.threads)?;
    let points = pool.install(|| sweep_points(&model, parameter, &grid, &opts))?;
    let sweeps = collect_sweeps(&model, &grid, &points, &opts);

    std::fs::create_dir_all(&config.output)?;
    let name = model.name();
    let csv_path = config.output.join(format!("{name}.csv"));
    std::fs::write(&csv_path, csv_string(&config.sweep.parameter, model.observable_names(), &sweeps))?;
    let mut svg_paths = Vec::new();
    for obs in model.observable_names() {
        let path = config.output.join(format!("{name}_{obs}.svg"));
        std::fs::write(&path, svg_string(name, &config.sweep.parameter, obs, &sweeps))?;
        svg_paths.push(path);
    }
    let failed_points = points.iter().filter(|p| !p.diagnostics.errors.is_empty()).count();
    let manifest = Manifest {
        software: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: config.clone(),
        model,
        sweep_parameter: parameter,
        grid,
        threads: pool.current_num_threads(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        csv: file_name(&csv_path),
        svg: svg_paths.iter().map(|p| file_name(p)).collect(),
        failed_points,
        points: points.into_iter().map(|p| p.diagnostics).collect(),
    };
    let manifest_path = config.output.join("manifest.json");
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(RunOutcome { csv_path, manifest_path, svg_paths, failed_points })
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

#[derive(Debug, Parser)]
#[command(name = "liouville-pt", version, about = "Perturbation theory for Lindblad steady states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep one parameter and write CSV, SVG and a JSON manifest.
    Run(RunArgs),
    /// Run the acceptance suite and print a JSON report.
    Verify(VerifyArgs),
}

fn parse_threads(s: &str) -> std::result::Result<Threads, String> {
    if s == "auto" {
        return Ok(Threads(None));
    }
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(Threads(Some(n))),
        _ => Err(format!("expected a positive count or 'auto', got {s:?}")),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Threads(pub Option<usize>);

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_enum, default_value = "spin_ring")]
    pub model: ModelKind,
    /// Number of spins (spin_ring).
    #[arg(long, default_value_t = 4)]
    pub sites: usize,
    #[arg(long, default_value_t = 0.8)]
    pub eps_over_gamma: f64,
    #[arg(long, default_value_t = 0.4)]
    pub t_over_gamma: f64,
    #[arg(long, default_value_t = 10.0)]
    pub kappa_over_eps: f64,
    #[arg(long, default_value_t = 0.5)]
    pub g_over_eps: f64,
    /// Sets both qubit and resonator decay rates.
    #[arg(long)]
    pub gammas_over_eps: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub gamma_a_over_eps: f64,
    #[arg(long, default_value_t = 0.05)]
    pub gamma_q_over_eps: f64,
    /// Fock levels per displaced mode (qubit_ring).
    #[arg(long, default_value_t = 3)]
    pub fock_cutoff: usize,
    /// `name:start:stop:points`, e.g. `delta_omega_over_gamma:-3:3:201`.
    #[arg(long, default_value = "delta_omega:-3:3:201")]
    pub sweep: SweepSpec,
    #[arg(long, value_delimiter = ',', default_value = "exact,order0,dm_pt,amp_pt")]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    #[arg(long)]
    pub reg_c: Option<f64>,
    #[arg(long, default_value = "out")]
    pub output: PathBuf,
    /// Worker threads or `auto`.
    #[arg(long, env = THREADS_ENV, value_parser = parse_threads, default_value = "auto")]
    pub threads: Threads,
}

impl From<RunArgs> for RunConfig {
    fn from(a: RunArgs) -> Self {
        let (gamma_a, gamma_q) = match a.gammas_over_eps {
            Some(g) => (g, g),
            None => (a.gamma_a_over_eps, a.gamma_q_over_eps),
        };
        RunConfig {
            model: a.model,
            sites: a.sites,
            eps_over_gamma: a.eps_over_gamma,
            t_over_gamma: a.t_over_gamma,
            kappa_over_eps: a.kappa_over_eps,
            g_over_eps: a.g_over_eps,
            gamma_a_over_eps: gamma_a,
            gamma_q_over_eps: gamma_q,
            fock_cutoff: a.fock_cutoff,
            sweep: a.sweep,
            methods: a.methods,
            order: a.order,
            reg_c: a.reg_c,
            output: a.output,
            threads: a.threads.0,
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Criterion ids to run (default: all).
    #[arg(long, value_delimiter = ',')]
    pub criteria: Vec<u8>,
    /// Negate the perturbation in every perturbative computation.
    #[arg(long)]
    pub mutate_l1_sign: bool,
    #[arg(long, default_value_t = 201)]
    pub sweep_points: usize,
    /// Grid points solved exactly at Fock cutoff 4 in criterion 6.
    #[arg(long, default_value_t = 7)]
    pub cutoff_check_points: usize,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, env = THREADS_ENV, value_parser = parse_threads, default_value = "auto")]
    pub threads: Threads,
}

/// Parses arguments, runs the subcommand and returns the process exit code:
/// 0 on success, 1 on numerical failures or failed criteria, 2 on usage
/// errors.
pub fn main_entry<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Run(a) => run_command(a.into()),
        Command::Verify(a) => verify_command(a),
    }
}

fn run_command(config: RunConfig) -> i32 {
    match run(&config) {
        Ok(outcome) => {
            println!("wrote {}", outcome.csv_path.display());
            println!("wrote {}", outcome.manifest_path.display());
            for p in &outcome.svg_paths {
                println!("wrote {}", p.display());
            }
            if outcome.failed_points > 0 {
                eprintln!("{} grid point(s) had failures; see the manifest", outcome.failed_points);
                1
            } else {
                0
            }
        }
        Err(e @ Error::InvalidConfig(_)) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn verify_command(a: VerifyArgs) -> i32 {
    if let Some(bad) = a.criteria.iter().find(|id| !(1..=10).contains(*id)) {
        eprintln!("error: no criterion {bad}");
        return 2;
    }
    let opts = VerifyOptions {
        criteria: a.criteria,
        mutate_l1_sign: a.mutate_l1_sign,
        sweep_points: a.sweep_points.max(3),
        cutoff_check_points: a.cutoff_check_points,
        ..Default::default()
    };
    let pool = match thread_pool(a.threads.0) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let report = pool.install(|| verify::verify_with(&opts, |c| eprintln!("{}", c.line())));
    let json = match serde_json::to_string_pretty(&report) {
        Ok(j) => j,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match &a.report {
        Some(path) => {
            if let Err(e) = std::fs::write(path, json + "\n") {
                eprintln!("error: {e}");
                return 1;
            }
        }
        None => println!("{json}"),
    }
    if report.all_passed {
        0
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_spec_parsing() {
        let s: SweepSpec = "delta_omega_over_gamma:-3:3:201".parse().unwrap();
        assert_eq!(s, SweepSpec { parameter: "delta_omega_over_gamma".into(), start: -3.0, stop: 3.0, points: 201 });
        assert!("x:1:2".parse::<SweepSpec>().is_err());
        assert!("x:a:2:3".parse::<SweepSpec>().is_err());
        let g = s.grid();
        assert_eq!((g[0], g[100], g[200]), (-3.0, 0.0, 3.0));
    }

    #[test]
    fn parameter_mapping() {
        let mut c = RunConfig::default();
        c.sweep.parameter = "delta_omega_over_gamma".into();
        assert_eq!(c.model_parameter().unwrap(), "delta_omega");
        c.sweep.parameter = "kappa_over_eps".into();
        assert!(c.model_parameter().is_err());
        c.model = ModelKind::QubitRing;
        assert_eq!(c.model_parameter().unwrap(), "kappa");
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::default();
        assert!(c.validate().is_ok());
        c.sweep.points = 1;
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        let mut c = RunConfig { methods: vec![], ..Default::default() };
        assert!(c.validate().is_err());
        c.methods = vec![Method::Exact];
        c.sites = 1;
        assert!(c.validate().is_err());
    }

    #[test]
    fn args_map_to_config() {
        let cli = Cli::try_parse_from([
            "liouville-pt",
            "run",
            "--model",
            "qubit_ring",
            "--gammas-over-eps",
            "0.1",
            "--methods",
            "exact,amp_pt",
            "--threads",
            "2",
        ])
        .unwrap();
        let Command::Run(a) = cli.command else { panic!("expected run") };
        let c: RunConfig = a.into();
        assert_eq!(c.model, ModelKind::QubitRing);
        assert_eq!((c.gamma_a_over_eps, c.gamma_q_over_eps), (0.1, 0.1));
        assert_eq!(c.methods, vec![Method::Exact, Method::AmpPt]);
        assert_eq!(c.threads, Some(2));
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(main_entry(["liouville-pt", "run", "--methods", "bogus"]), 2);
        assert_eq!(main_entry(["liouville-pt", "run", "--sweep", "delta_omega:-1:1:1"]), 2);
        assert_eq!(main_entry(["liouville-pt", "verify", "--criteria", "12"]), 2);
    }
}
