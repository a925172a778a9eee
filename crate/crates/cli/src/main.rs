use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sobolev_lab_cli::{resolve, run, thread_cap, RawConfig};

#[derive(Parser)]
#[command(name = "sobolev-lab", version, about = "Best Sobolev constants, extremals and their inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Extremal and best constant on a domain or ball.
    Solve,
    /// Rearranged extremal against the ball equation and matched balls.
    Rearrange,
    /// Reverse-Hölder and log-type inequality battery.
    Verify,
    /// Hadamard rate against finite differences.
    Derivative,
    /// Boundary flow with rate-bound monitoring.
    Flow,
    /// Monotone quantity along image balls of a Möbius chain.
    Conformal,
}

impl Cmd {
    fn key(self) -> &'static str {
        match self {
            Cmd::Solve => "solve",
            Cmd::Rearrange => "rearrange",
            Cmd::Verify => "verify",
            Cmd::Derivative => "derivative",
            Cmd::Flow => "flow",
            Cmd::Conformal => "conformal",
        }
    }
}

/// Every flag is a config key; values are parsed during resolution so file
/// and flag inputs share one set of error messages.
#[derive(Args)]
struct Flags {
    /// `key = value` file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// disk | square | perturbed | ball | file
    #[arg(long, global = true)]
    domain: Option<String>,
    #[arg(long = "R", global = true)]
    radius: Option<String>,
    #[arg(long, global = true)]
    side: Option<String>,
    #[arg(long, global = true)]
    amplitude: Option<String>,
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Radial samples for a `file` domain.
    #[arg(long, global = true)]
    file: Option<String>,
    #[arg(long, global = true)]
    n: Option<String>,
    #[arg(long, global = true)]
    p: Option<String>,
    #[arg(long, global = true)]
    r: Option<String>,
    #[arg(long, global = true)]
    h: Option<String>,
    /// Radial cells for ball solves.
    #[arg(long, global = true)]
    grid: Option<String>,
    #[arg(long, global = true)]
    levels: Option<String>,
    #[arg(long, global = true)]
    cells: Option<String>,
    #[arg(long, global = true)]
    tolerance: Option<String>,
    /// all | reverse_holder | log2d | power_r
    #[arg(long, global = true)]
    suite: Option<String>,
    #[arg(long, global = true)]
    delta: Option<String>,
    #[arg(long = "w-offset", global = true)]
    w_offset: Option<String>,
    #[arg(long = "w-amplitude", global = true)]
    w_amplitude: Option<String>,
    #[arg(long = "w-mode", global = true)]
    w_mode: Option<String>,
    #[arg(long = "w-phase", global = true)]
    w_phase: Option<String>,
    /// Uniform flow speed.
    #[arg(long, global = true)]
    speed: Option<String>,
    /// uniform | weighted | hele_shaw
    #[arg(long, global = true)]
    law: Option<String>,
    #[arg(long, global = true)]
    dt: Option<String>,
    #[arg(long, global = true)]
    steps: Option<String>,
    /// `x,y`
    #[arg(long, global = true, allow_hyphen_values = true)]
    pole: Option<String>,
    /// e.g. `translate 2,0,0; invert; scale 4`
    #[arg(long, global = true, allow_hyphen_values = true)]
    map: Option<String>,
    #[arg(long, global = true)]
    points: Option<String>,
    /// Write the JSON document here instead of stdout.
    #[arg(long, global = true)]
    json: Option<String>,
    #[arg(long, global = true)]
    csv: Option<String>,
    #[arg(long, global = true)]
    field: Option<String>,
    #[arg(long, global = true)]
    mesh: Option<String>,
    #[arg(long, global = true)]
    profile: Option<String>,
}

impl Flags {
    fn to_raw(&self, command: Cmd) -> RawConfig {
        let mut raw = RawConfig::default();
        raw.set("command", command.key());
        let pairs = [
            ("domain.kind", &self.domain),
            ("domain.R", &self.radius),
            ("domain.side", &self.side),
            ("domain.amplitude", &self.amplitude),
            ("domain.mode", &self.mode),
            ("domain.file", &self.file),
            ("exponents.n", &self.n),
            ("exponents.p", &self.p),
            ("exponents.r", &self.r),
            ("mesh.h", &self.h),
            ("mesh.grid", &self.grid),
            ("mesh.levels", &self.levels),
            ("mesh.cells", &self.cells),
            ("check.tolerance", &self.tolerance),
            ("verify.suite", &self.suite),
            ("derivative.delta", &self.delta),
            ("speed.offset", &self.w_offset),
            ("speed.amplitude", &self.w_amplitude),
            ("speed.mode", &self.w_mode),
            ("speed.phase", &self.w_phase),
            ("speed.value", &self.speed),
            ("flow.law", &self.law),
            ("flow.dt", &self.dt),
            ("flow.steps", &self.steps),
            ("flow.pole", &self.pole),
            ("conformal.map", &self.map),
            ("conformal.points", &self.points),
            ("output.json", &self.json),
            ("output.csv", &self.csv),
            ("output.field", &self.field),
            ("output.mesh", &self.mesh),
            ("output.profile", &self.profile),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                raw.set(key, v.as_str());
            }
        }
        raw
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("sobolev-lab: {e}");
            ExitCode::from(1)
        }
    }
}

fn execute(cli: &Cli) -> Result<u8, Box<dyn std::error::Error>> {
    let file = match &cli.flags.config {
        Some(path) => RawConfig::read(path)?,
        None => RawConfig::default(),
    };
    let cfg = resolve(&file.overridden_by(&cli.flags.to_raw(cli.command)))?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    let doc = pool.install(|| run(&cfg))?;
    let text = doc.to_json();
    match &cfg.outputs.json {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    for c in doc.checks.iter().filter(|c| !c.passed) {
        eprintln!("check failed: {}", c.name);
    }
    Ok(doc.exit_code() as u8)
}
