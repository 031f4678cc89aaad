use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use curvlab::suite::{default_tolerance, identity_tasks, run_tasks};
use curvlab::{
    cmd_curvature, find_model_with, Bundle, Group, IdentityReport, RunSettings, Samples, Status,
    SuiteConfig, Task,
};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "curvlab", version, about = "Curvature operator identity checks on model geometries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Curvature summary of a model at one point.
    Curvature {
        #[arg(long)]
        model: String,
        /// Comma-separated coordinates.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        point: Vec<f64>,
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long)]
        json: bool,
    },
    /// Every applicable identity on one model.
    Identities(ModelRun),
    /// L² adjointness defects of both linearizations.
    Adjoint(ModelRun),
    /// Kernel checks for coordinate eigenfunctions on round spheres.
    Kernel(ModelRun),
    /// The full acceptance suite.
    Suite {
        /// TOML configuration; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "tol", value_name = "ID=VALUE")]
        tol: Vec<String>,
        #[arg(long = "grid", value_name = "MODEL=N,N,..")]
        grid: Vec<String>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct ModelRun {
    #[arg(long)]
    model: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// `ID=VALUE`, or a bare `VALUE` applied to every identity.
    #[arg(long = "tol", value_name = "ID=VALUE")]
    tol: Vec<String>,
    /// Quadrature resolution per axis, e.g. `32,64`.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    #[arg(long)]
    json: bool,
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn parse_tolerances(items: &[String], ids: &[&str]) -> Result<BTreeMap<String, f64>, String> {
    let mut out = BTreeMap::new();
    for item in items {
        let (targets, value): (Vec<&str>, &str) = match item.split_once('=') {
            Some((id, v)) => {
                if default_tolerance(id).is_none() {
                    return Err(format!("unknown identity `{id}` in --tol"));
                }
                (vec![id], v)
            }
            None => (ids.to_vec(), item.as_str()),
        };
        let v: f64 = value
            .parse()
            .ok()
            .filter(|v: &f64| *v >= 0.0)
            .ok_or_else(|| format!("bad tolerance `{value}`"))?;
        for id in targets {
            out.insert(id.to_string(), v);
        }
    }
    Ok(out)
}

fn parse_grid(item: &str) -> Result<(String, Vec<usize>), String> {
    let (model, dims) = item
        .split_once('=')
        .ok_or_else(|| format!("expected MODEL=N,N,.. in --grid, got `{item}`"))?;
    let dims = dims
        .split(',')
        .map(|d| d.trim().parse::<usize>().map_err(|_| format!("bad grid size `{d}`")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((model.to_string(), dims))
}

fn all_ids() -> Vec<&'static str> {
    Group::ALL.iter().flat_map(|g| g.identities().iter().copied()).collect()
}

fn print_reports(reports: &[IdentityReport]) {
    for r in reports {
        let status = match r.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        };
        let crit = r.criterion.map_or(String::new(), |c| format!("[{c:>2}] "));
        if r.status == Status::Skipped {
            println!("{status} {crit}{:<17} {:<30} {}", r.model, r.identity, r.detail);
            continue;
        }
        println!(
            "{status} {crit}{:<17} {:<30} residual {:>10.3e}  tol {:>8.1e}  {}",
            r.model, r.identity, r.max_residual, r.tolerance, r.points_or_grid
        );
        if r.status == Status::Fail && !r.detail.is_empty() {
            println!("       {}", r.detail);
        }
    }
}

fn finish(bundle: &Bundle, json: bool) -> ExitCode {
    if json {
        println!("{}", bundle.to_json());
    } else {
        print_reports(&bundle.reports);
        let s = &bundle.summary;
        println!(
            "{} reports: {} passed, {} failed, {} skipped",
            s.total, s.passed, s.failed, s.skipped
        );
    }
    if bundle.summary.all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn run_model(run: &ModelRun, groups: Option<&[Group]>) -> ExitCode {
    let params = Default::default();
    if let Err(e) = find_model_with(&run.model, &params) {
        return usage(e);
    }
    let tolerances = match parse_tolerances(&run.tol, &all_ids()) {
        Ok(t) => t,
        Err(e) => return usage(e),
    };
    let mut settings = RunSettings::with_seed(run.seed);
    settings.tolerances = tolerances;
    if let Some(g) = &run.grid {
        settings.grids.insert(run.model.clone(), g.clone());
    }
    let tasks: Vec<Task> = match groups {
        None => identity_tasks(&run.model),
        Some(gs) => gs
            .iter()
            .map(|&group| Task {
                criterion: None,
                model: run.model.clone(),
                group,
                samples: if group == Group::Adjoint {
                    Samples::new(0, 10)
                } else {
                    Samples::default()
                },
            })
            .collect(),
    };
    finish(&Bundle::new(run.seed, run_tasks(&tasks, &settings)), run.json)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Curvature {
            model,
            point,
            order,
            json,
        } => {
            let m = match find_model_with(&model, &Default::default()) {
                Ok(m) => m,
                Err(e) => return usage(e),
            };
            match cmd_curvature(&m, &point, order) {
                Ok(s) if json => {
                    println!("{}", serde_json::to_string_pretty(&s).expect("summary serializes"));
                    ExitCode::SUCCESS
                }
                Ok(s) => {
                    println!("model              {}", s.model);
                    println!("point              {:?}", s.point);
                    println!("scalar curvature   {:.12}", s.scalar_curvature);
                    println!("ricci eigenvalues  {:?}", s.ricci_eigenvalues);
                    println!("sigma2             {:.12}", s.sigma2);
                    println!("|traceless ricci|  {:.3e}", s.traceless_ricci_norm);
                    println!("|traceless ricci|² {:.12}", s.traceless_ricci_norm_sq);
                    ExitCode::SUCCESS
                }
                Err(e) => usage(e),
            }
        }
        Command::Identities(run) => run_model(&run, None),
        Command::Adjoint(run) => run_model(&run, Some(&[Group::Adjoint])),
        Command::Kernel(run) => run_model(
            &run,
            Some(&[Group::SphereKernel, Group::StaticBranchEinstein, Group::ExtendedExactZero]),
        ),
        Command::Suite {
            config,
            seed,
            tol,
            grid,
            json,
        } => {
            let mut cfg = match &config {
                Some(path) => match SuiteConfig::load(path) {
                    Ok(c) => c,
                    Err(e) => return usage(e),
                },
                None => SuiteConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            match parse_tolerances(&tol, &all_ids()) {
                Ok(t) => cfg.tolerances.extend(t),
                Err(e) => return usage(e),
            }
            for g in &grid {
                match parse_grid(g) {
                    Ok((m, d)) => {
                        cfg.grids.insert(m, d);
                    }
                    Err(e) => return usage(e),
                }
            }
            finish(&curvlab::cmd_suite(&cfg), json)
        }
    }
}
