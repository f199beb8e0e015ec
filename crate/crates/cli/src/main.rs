use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use autoqec::scenario::{self, RunOptions, Scenario, Sweep, PRESET_NAMES};
use autoqec::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "autoqec", version, about = "AutoQEC code search, simulation and QFI analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the LP code search and the KL/HNLS/P1/P2 diagnostics.
    SearchCode(Common),
    /// Integrate one trajectory and write trajectory.csv.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Engineered rate ratio (defaults to the first R of the scenario).
        #[arg(long = "r")]
        r: Option<f64>,
        /// AutoQEC order (defaults to the first c of the scenario).
        #[arg(long)]
        c: Option<usize>,
        /// Simulate without engineered dissipation.
        #[arg(long)]
        no_qec: bool,
        /// Steps between recorded samples.
        #[arg(long, default_value_t = 100)]
        record_every: usize,
        /// Append flattened density-matrix entries to the CSV.
        #[arg(long)]
        states: bool,
    },
    /// Compute QFI curves (with projected and no-QEC baselines).
    QfiCurve(Common),
    /// Run the R-doubling scaling experiment.
    Scaling(Common),
    /// List or run built-in presets.
    Preset {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    Run {
        name: String,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Args)]
struct Common {
    /// Built-in preset name.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// JSON scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Clone)]
struct Overrides {
    /// Output directory; results go to <out>/<scenario>/.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Fixed integrator step.
    #[arg(long)]
    dt: Option<f64>,
    /// Central-difference step for dF/dw.
    #[arg(long)]
    dw: Option<f64>,
    /// Simulation horizon T.
    #[arg(long)]
    t_max: Option<f64>,
    /// Natural noise rate.
    #[arg(long)]
    kappa: Option<f64>,
    /// Comma-separated R values for the curve sweep.
    #[arg(long = "r-list", value_delimiter = ',')]
    r_list: Option<Vec<f64>>,
    /// Number of QFI sampling intervals.
    #[arg(long)]
    samples: Option<usize>,
    /// Seed for randomized property checks; physics is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

impl Overrides {
    fn apply(&self, s: &mut Scenario) {
        if self.dt.is_some() {
            s.dt = self.dt;
        }
        if self.dw.is_some() {
            s.dw = self.dw;
        }
        if let Some(t) = self.t_max {
            s.t = t;
        }
        if let Some(k) = self.kappa {
            s.kappa = k;
        }
        if let Some(r) = &self.r_list {
            s.r = Sweep::Many(r.clone());
        }
        if let Some(n) = self.samples {
            s.samples = n;
        }
    }
}

fn load(common: &Common) -> Result<Scenario, Error> {
    let mut s = match (&common.preset, &common.config) {
        (Some(p), _) => scenario::preset(p)?,
        (None, Some(path)) => scenario::load_config(path)?,
        (None, None) => return Err(Error::InvalidInput("either --preset or --config is required".into())),
    };
    common.overrides.apply(&mut s);
    s.validate()?;
    Ok(s)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::SearchFailed => 2,
        Error::IntegrationUnstable { .. } => 3,
        _ => 1,
    }
}

fn run_and_report(s: &Scenario, out: &PathBuf, opts: RunOptions) -> Result<u8, Error> {
    let opts = RunOptions {
        out: Some(out.clone()),
        ..opts
    };
    let result = scenario::run(s, &opts)?;
    let dir = out.join(&s.name);
    if result.report.search_failed {
        eprintln!("code search failed for {}: no feasible eigenvalue pair", s.name);
        println!("{}", dir.join("report.json").display());
        return Ok(2);
    }
    for c in &result.report.curves {
        println!(
            "{:<12} F(T) = {:.6e}  F_id(T) = {:.6e}  data-processing {}",
            c.label,
            c.final_qfi,
            c.final_ideal,
            if c.data_processing_ok { "ok" } else { "VIOLATED" }
        );
    }
    if let Some(sc) = &result.report.scaling {
        match sc.fitted_c {
            Some(c) => println!("scaling: eps = {:?}, fitted c = {c:.3}", sc.eps),
            None => println!("scaling: flagged (eps = {:?})", sc.eps),
        }
    }
    println!("wrote {}", dir.display());
    Ok(0)
}

fn main_inner(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Preset { action: PresetAction::List } => {
            for name in PRESET_NAMES {
                let s = scenario::preset(name)?;
                println!("{name:<28} {}", s.description);
            }
            Ok(0)
        }
        Command::Preset {
            action: PresetAction::Run { name, overrides },
        } => {
            let mut s = scenario::preset(&name)?;
            overrides.apply(&mut s);
            run_and_report(&s, &overrides.out, RunOptions::full())
        }
        Command::SearchCode(common) => {
            let s = load(&common)?;
            let opts = RunOptions {
                out: Some(common.overrides.out.clone()),
                ..RunOptions::diagnostics_only()
            };
            let result = scenario::run(&s, &opts)?;
            println!("{}", serde_json::to_string_pretty(&result.report)?);
            Ok(if result.report.search_failed { 2 } else { 0 })
        }
        Command::QfiCurve(common) => {
            let s = load(&common)?;
            let opts = RunOptions {
                scaling: false,
                ..RunOptions::full()
            };
            run_and_report(&s, &common.overrides.out, opts)
        }
        Command::Scaling(common) => {
            let s = load(&common)?;
            if s.scaling.is_none() {
                return Err(Error::config("scaling", "scenario has no scaling block"));
            }
            let opts = RunOptions {
                scaling: true,
                ..RunOptions::diagnostics_only()
            };
            run_and_report(&s, &common.overrides.out, opts)
        }
        Command::Simulate {
            common,
            r,
            c,
            no_qec,
            record_every,
            states,
        } => {
            let s = load(&common)?;
            let r = r.unwrap_or_else(|| s.r_values()[0]);
            let c = if no_qec { None } else { Some(c.unwrap_or_else(|| s.orders()[0])) };
            let traj = scenario::simulate(&s, r, c, record_every)?;
            let dir = common.overrides.out.join(&s.name);
            fs::create_dir_all(&dir)?;
            let path = dir.join("trajectory.csv");
            fs::write(&path, traj.to_csv(states))?;
            println!("{} samples, dt = {:.3e}, wrote {}", traj.times.len(), traj.dt, path.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
