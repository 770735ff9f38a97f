use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use tensor_bench::compare::{compare_bounds, BoundContext};
use tensor_bench::config::{ExperimentConfig, InstanceSpec, OUTPUT_ROOT_ENV};
use tensor_bench::experiment::{run_experiment, Outcome};
use tensor_bench::fit::{fit_rate, residual_series};
use tensor_bench::plot::{emit_plots, plot_from_report, plot_from_trace};
use tensor_bench::registry::Registry;
use tensor_bench::theory::{theory_constants, TheoryInputs};
use tensor_bench::trace::load_trace;
use tensor_bench::Result;
use tensor_methods::methods::MethodKind;

#[derive(Parser)]
#[command(name = "tensor-bench", version, about = "Run and analyse tensor-method experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more experiment configs.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Concurrent runs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Root for relative output directories (overrides the TENSOR_BENCH_OUT variable).
        #[arg(long)]
        out_root: Option<PathBuf>,
    },
    /// Fit the residual decay exponent of a trace.
    Fit { trace: PathBuf },
    /// Compare a trace against the upper and lower envelopes.
    Compare {
        trace: PathBuf,
        #[command(flatten)]
        bounds: BoundArgs,
    },
    /// Plot traces as log-log SVGs.
    Plot {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
        /// Overlay envelopes; needs --instance and --method.
        #[command(flatten)]
        bounds: OptionalBoundArgs,
    },
    /// Evaluate the analysis constants.
    Constants {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        theta: f64,
        #[arg(long = "Hf")]
        holder: f64,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long = "R")]
        r_eps: Option<f64>,
    },
}

#[derive(Args, Clone)]
struct Extra {
    /// Fixed M or H0; defaults to the trace's first H.
    #[arg(long)]
    coefficient: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    theta: f64,
    /// The run used α = 1 instead of α = ν.
    #[arg(long)]
    nu_unknown: bool,
    #[arg(long)]
    d0: Option<f64>,
    #[arg(long = "R")]
    r_eps: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// ‖x0 − x*‖; defaults to ‖x*‖, i.e. a start at the origin.
    #[arg(long)]
    x0_dist: Option<f64>,
}

#[derive(Args)]
struct BoundArgs {
    /// `hard:n=11,k=5,p=2,nu=1`, `power-sum:n=..,p=..,nu=..`, or a JSON instance object.
    #[arg(long)]
    instance: String,
    #[arg(long)]
    method: String,
    #[command(flatten)]
    extra: Extra,
}

#[derive(Args)]
struct OptionalBoundArgs {
    #[arg(long, requires = "method")]
    instance: Option<String>,
    #[arg(long, requires = "instance")]
    method: Option<String>,
    #[command(flatten)]
    extra: Extra,
}

fn bound_context(instance: &str, method: &str, extra: &Extra, first_h: Option<f64>) -> Result<BoundContext> {
    let spec = InstanceSpec::parse_short(instance)?;
    let method: MethodKind = method.parse()?;
    let inst = Registry::new().build(&spec)?;
    let p = inst.oracle.order();
    let nu = match spec {
        InstanceSpec::Hard { nu, .. } | InstanceSpec::PowerSum { nu, .. } => nu,
        _ => inst.holder.map(|h| h.nu).unwrap_or(1.0),
    };
    let x0_dist = extra
        .x0_dist
        .or_else(|| inst.x_star.as_ref().map(|x| x.dot(x).sqrt()));
    let hard_k = match spec {
        InstanceSpec::Hard { k, .. } if extra.x0_dist.is_none() => Some(k),
        _ => None,
    };
    Ok(BoundContext {
        method,
        p,
        nu,
        nu_known: !extra.nu_unknown,
        theta: extra.theta,
        holder: inst.holder.map(|h| h.constant),
        coefficient: extra.coefficient.or(first_h),
        d0: extra.d0,
        r_eps: extra.r_eps,
        eps: extra.eps,
        x0_dist,
        hard_k,
    })
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn run_many(configs: &[PathBuf], jobs: usize, out_root: Option<PathBuf>) -> Result<ExitCode> {
    let root = out_root.or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from));
    let mut loaded = Vec::with_capacity(configs.len());
    for path in configs {
        loaded.push(ExperimentConfig::load(path)?);
    }
    let registry = Registry::new();
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<Outcome>>>> = Mutex::new((0..loaded.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, loaded.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cfg) = loaded.get(i) else { break };
                let out = run_experiment(cfg, &registry, root.as_deref());
                results.lock().expect("result slots")[i] = Some(out);
            });
        }
    });
    let mut code = 0u8;
    for (cfg, res) in loaded.iter().zip(results.into_inner().expect("result slots")) {
        match res.expect("every config ran") {
            Ok(out) => {
                let s = &out.summary;
                println!(
                    "{}: {} after {} iterations, residual {}, {}",
                    s.name,
                    s.status,
                    s.iterations,
                    s.final_residual.map_or("n/a".into(), |r| format!("{r:.3e}")),
                    out.dir.display()
                );
                for w in &s.warnings {
                    eprintln!("warning: {}: {w}", s.name);
                }
                if !s.converged {
                    code = code.max(1);
                }
            }
            Err(e) => {
                eprintln!("{}: {e}", cfg.name);
                code = code.max(e.exit_code() as u8);
            }
        }
    }
    Ok(ExitCode::from(code))
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { configs, jobs, out_root } => run_many(&configs, jobs, out_root),
        Command::Fit { trace } => {
            let rows = load_trace(&trace)?;
            print_json(&fit_rate(&residual_series(&rows))?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare { trace, bounds } => {
            let rows = load_trace(&trace)?;
            let ctx = bound_context(&bounds.instance, &bounds.method, &bounds.extra, rows.first().map(|r| r.h))?;
            let report = compare_bounds(&rows, &ctx)?;
            if report.partial {
                eprintln!("warning: partial report, missing {}", report.missing.join(", "));
            }
            if report.violations > 0 {
                eprintln!("warning: {} iterations below the lower envelope", report.violations);
            }
            print_json(&report)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Plot { traces, out, bounds } => {
            let mut plots = Vec::new();
            for path in &traces {
                let rows = load_trace(path)?;
                let name = path
                    .parent()
                    .and_then(|d| d.file_name())
                    .filter(|_| path.file_stem().is_some_and(|s| s == "trace"))
                    .or_else(|| path.file_stem())
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "trace".into());
                plots.push(match (&bounds.instance, &bounds.method) {
                    (Some(i), Some(m)) => {
                        let ctx = bound_context(i, m, &bounds.extra, rows.first().map(|r| r.h))?;
                        plot_from_report(&name, &compare_bounds(&rows, &ctx)?)
                    }
                    _ => plot_from_trace(&name, &rows),
                });
            }
            let written = emit_plots(&plots, &out)?;
            for w in &written.warnings {
                eprintln!("warning: {w}");
            }
            for p in &written.written {
                println!("{}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Constants {
            p,
            nu,
            theta,
            holder,
            eps,
            r_eps,
        } => {
            print_json(&theory_constants(&TheoryInputs {
                p,
                nu,
                theta,
                holder,
                eps,
                r_eps,
            })?)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
