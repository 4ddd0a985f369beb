use clap::{Args, Parser, Subcommand, ValueEnum};
use perfmm::apply::ApplyPath;
use perfmm::cell::Periodicity;
use perfmm::harness::{self, CellSpec, RunConfig, ValidationReport};
use perfmm::kernels::Pde;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "perfmm", version, about = "Periodic sums of 2D Poisson, modified Helmholtz, Stokes and modified Stokes kernels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Periodicity residuals of random systems, gated at 5 eps.
    Validate {
        #[command(flatten)]
        run: RunArgs,
        /// Run the full cell sweep (rectangles and parallelograms) instead of one cell.
        #[arg(long)]
        sweep: bool,
    },
    /// Evaluate the periodic field of sources from a file at targets from a file.
    Apply {
        #[command(flatten)]
        run: RunArgs,
        /// Sources: `x y q` or `x y qx qy [nx ny]` per line.
        #[arg(long)]
        sources: PathBuf,
        /// Targets: `x y` per line.
        #[arg(long)]
        targets: PathBuf,
    },
    /// Time the far-field apply over aspect ratios and source counts.
    Bench {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', default_value = "1,10,100,1000")]
        aspects: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "4000")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PdeArg {
    Poisson,
    Mhelm,
    Stokes,
    Mstokes,
}

#[derive(Clone, Copy, ValueEnum)]
enum AccelArg {
    Auto,
    Direct,
    Nufft,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "mhelm")]
    pde: PdeArg,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Explicit cell `d,xi,eta`; overrides --aspect and --theta.
    #[arg(long, value_parser = parse_cell)]
    cell: Option<(f64, f64, f64)>,
    /// Aspect ratio `A` with `d = 1`.
    #[arg(long, default_value_t = 1.0)]
    aspect: f64,
    /// Angle between the lattice vectors, radians or `pi/N`.
    #[arg(long, value_parser = parse_angle, default_value = "pi/2")]
    theta: f64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    periodicity: u8,
    #[arg(long, default_value_t = 1e-12)]
    eps: f64,
    #[arg(long = "n-src", default_value_t = 4000)]
    n_src: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "auto")]
    accel: AccelArg,
    /// Targets per cell face.
    #[arg(long, default_value_t = 500)]
    samples: usize,
    /// Also evaluate the pressure (stokes, mstokes).
    #[arg(long)]
    pressure: bool,
    /// Output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_cell(s: &str) -> Result<(f64, f64, f64), String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| format!("'{x}' is not a number")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [d, xi, eta] => Ok((d, xi, eta)),
        _ => Err(format!("expected d,xi,eta, got {} values", v.len())),
    }
}

fn parse_angle(s: &str) -> Result<f64, String> {
    let pi = std::f64::consts::PI;
    if let Some(rest) = s.trim().strip_prefix("pi") {
        return match rest.strip_prefix('/') {
            None if rest.is_empty() => Ok(pi),
            Some(n) => n.parse::<f64>().map(|n| pi / n).map_err(|_| format!("bad angle '{s}'")),
            None => Err(format!("bad angle '{s}' (use radians or pi/N)")),
        };
    }
    s.parse().map_err(|_| format!("bad angle '{s}' (use radians or pi/N)"))
}

impl RunArgs {
    fn config(&self) -> RunConfig {
        RunConfig {
            pde: match self.pde {
                PdeArg::Poisson => Pde::Poisson,
                PdeArg::Mhelm => Pde::ModHelmholtz,
                PdeArg::Stokes => Pde::Stokes,
                PdeArg::Mstokes => Pde::ModStokes,
            },
            beta: self.beta,
            cell: match self.cell {
                Some((d, xi, eta)) => CellSpec::Explicit { d, xi, eta },
                None => CellSpec::Angle { aspect: self.aspect, theta: self.theta },
            },
            periodicity: if self.periodicity == 1 { Periodicity::Singly } else { Periodicity::Doubly },
            eps: self.eps,
            n_src: self.n_src,
            seed: self.seed,
            samples: self.samples,
            accel: match self.accel {
                AccelArg::Auto => ApplyPath::Auto,
                AccelArg::Direct => ApplyPath::Direct,
                AccelArg::Nufft => ApplyPath::Accelerated,
            },
            pressure: self.pressure,
        }
    }

    fn emit(&self, text: &str) -> Result<(), String> {
        match &self.out {
            Some(p) => std::fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn read(path: &PathBuf) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize") + "\n"
}

fn table_line(label: &str, r: &ValidationReport) -> String {
    let t = &r.timings;
    format!(
        "{label:<24} A={:<7} t_per={:.3} t_near={:.3} t_total={:.3} t_free={:.3} Error={:.2e} {}",
        t.aspect,
        t.t_per,
        t.t_near,
        t.t_total,
        t.t_free,
        t.error,
        if r.passed { "pass" } else { "FAIL" }
    )
}

fn run(cli: Cli) -> Result<bool, String> {
    let args = match &cli.command {
        Command::Validate { run, .. } | Command::Apply { run, .. } | Command::Bench { run, .. } => run,
    };
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| format!("cannot set thread count: {e}"))?;
    }
    let cfg = args.config();
    match &cli.command {
        Command::Validate { sweep, .. } => {
            let cases: Vec<(String, RunConfig)> = if *sweep {
                harness::table_sweep()
                    .into_iter()
                    .map(|(label, cell, periodicity)| (label, RunConfig { cell, periodicity, ..cfg.clone() }))
                    .collect()
            } else {
                vec![("cell".to_string(), cfg.clone())]
            };
            let mut reports = Vec::new();
            for (label, c) in &cases {
                let r = harness::validate(c).map_err(|e| format!("{label}: {e}"))?;
                eprintln!("{}", table_line(label, &r));
                reports.push(r);
            }
            let passed = reports.iter().all(|r| r.passed);
            let failures: Vec<&String> = reports.iter().flat_map(|r| &r.failures).collect();
            let body = serde_json::json!({ "passed": passed, "failures": failures, "runs": reports });
            args.emit(&json(&body))?;
            Ok(passed)
        }
        Command::Apply { sources, targets, .. } => {
            let out = harness::apply_files(&cfg, &read(sources)?, &read(targets)?).map_err(|e| e.to_string())?;
            args.emit(&out.to_text())?;
            Ok(true)
        }
        Command::Bench { aspects, sizes, repeats, .. } => {
            let rows = harness::bench(&cfg, aspects, sizes, *repeats).map_err(|e| e.to_string())?;
            eprint!("{}", harness::bench_table(&rows));
            args.emit(&json(&rows))?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
