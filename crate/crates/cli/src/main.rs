use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nodal_core::ensembles::EnsembleKind;
use nodal_core::harness::{run_experiment, sweep_manifold, ExperimentConfig, Spacing};
use nodal_core::lemmas::run_lemma_suite;
use nodal_core::nodal::{build_nesting_tree, label_domains};
use nodal_core::sampler::{sample_field, validate_covariance, GridSpec};
use nodal_core::stats::{decay_fit, fmt_real, Estimate, MonteCarloReport};
use nodal_core::Error;

/// Nodal-domain Monte Carlo for stationary Gaussian fields.
#[derive(Parser)]
#[command(name = "nodal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's thread count.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Origin-to-boundary probability over a list of radii.
    Percolation {
        #[command(flatten)]
        ensemble: EnsembleArgs,
        #[arg(long = "R", value_delimiter = ',', required = true)]
        radii: Vec<f64>,
        #[arg(long)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Grid spacing (default: automatic).
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Arithmetic random waves on the torus over `arithmetic_n_list`.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Random configurations through the lemma and identity checkers.
    Check {
        #[arg(long)]
        cases: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for reproducer files.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Empirical covariance against the analytic kernel.
    Covariance {
        #[command(flatten)]
        ensemble: EnsembleArgs,
        #[arg(long)]
        reps: usize,
        #[arg(long = "R", default_value_t = 16.0)]
        radius: f64,
        #[arg(long, default_value_t = 0.25)]
        h: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.02)]
        tolerance: f64,
        /// Lags along the first axis.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 1.0, 2.0, 4.0])]
        lags: Vec<f64>,
    },
    /// Dump one sample and its domain table.
    Sample {
        #[command(flatten)]
        ensemble: EnsembleArgs,
        #[arg(long = "R")]
        radius: f64,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output prefix: writes `<prefix>.bin`, `<prefix>.toml`, `<prefix>-domains.csv`.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct EnsembleArgs {
    #[arg(long)]
    ensemble: String,
    #[arg(long, default_value_t = 2)]
    dimension: usize,
    #[arg(long)]
    band_alpha: Option<f64>,
    #[arg(long)]
    arithmetic_n: Option<u64>,
    #[arg(long)]
    num_waves: Option<usize>,
    #[arg(long)]
    periodic: bool,
    #[arg(long)]
    allow_coarse_grid: bool,
}

impl EnsembleArgs {
    fn config(&self, radii: Vec<f64>, replicates: u64) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(&self.ensemble, radii, replicates);
        c.dimension = self.dimension;
        c.band_alpha = self.band_alpha;
        c.arithmetic_n = self.arithmetic_n;
        c.num_waves = self.num_waves;
        c.periodic = self.periodic;
        c.allow_coarse_grid = self.allow_coarse_grid;
        c
    }
}

enum Failure {
    Validation(String),
    Error(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn print_report(report: &MonteCarloReport) {
    println!(
        "{:>10} {:>8} {:>20} {:>20} {:>20} {:>20}",
        "R", "reps", "c_ns", "P", "V/Vol", "mean_conn"
    );
    let pm = |e: &Estimate| format!("{:.5} ± {:.5}", e.value, e.se);
    for r in &report.radii {
        println!(
            "{:>10} {:>8} {:>20} {:>20} {:>20} {:>20}",
            r.radius,
            r.replicates,
            pm(&r.c_ns),
            pm(&r.percolation),
            pm(&r.v_fraction),
            pm(&r.mean_connectivity)
        );
    }
    if !report.identities_exact() {
        println!("warning: nonzero identity residuals");
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate { config, threads } => {
            let mut c = ExperimentConfig::from_file(&config)?;
            if let Some(t) = threads {
                c.threads = t;
            }
            let out = run_experiment(&c)?;
            print_report(&out.report);
            if let Some(l) = &out.lemma_suite {
                println!("lemma suite passed: {}", l.passed());
            }
            if !out.report.identities_exact() {
                return Err(Failure::Validation("identity residuals are not zero".into()));
            }
            if out.lemma_suite.as_ref().is_some_and(|l| !l.passed()) {
                return Err(Failure::Validation("lemma suite found violations".into()));
            }
        }
        Command::Percolation {
            ensemble,
            radii,
            reps,
            seed,
            h,
            threads,
            out,
        } => {
            let mut c = ensemble.config(radii, reps);
            c.base_seed = seed;
            c.percolation_only = true;
            c.threads = threads;
            c.output_dir = out;
            if let Some(h) = h {
                c.spacing = Spacing::Fixed(h);
            }
            let out = run_experiment(&c)?;
            println!("{:>10} {:>20} {:>20}", "R", "P", "se");
            for r in &out.report.radii {
                println!("{:>10} {:>20} {:>20}", r.radius, fmt_real(r.percolation.value), fmt_real(r.percolation.se));
            }
            let radii: Vec<f64> = out.report.radii.iter().map(|r| r.radius).collect();
            let est: Vec<Estimate> = out.report.radii.iter().map(|r| r.percolation).collect();
            match decay_fit(&radii, &est) {
                Some(f) => println!("beta = {:.4} ± {:.4}  (95% CI [{:.4}, {:.4}])", f.beta, f.se, f.ci_low, f.ci_high),
                None => println!("beta: not estimable"),
            }
        }
        Command::Sweep { config } => {
            let c = ExperimentConfig::from_file(&config)?;
            let report = sweep_manifold(&c)?;
            if let Some(p) = &report.planar_c_ns {
                println!("planar c_ns (R = {}): {:.5} ± {:.5}", report.planar_radius, p.value, p.se);
            }
            println!("{:>8} {:>6} {:>22} {:>22} {:>10}", "n", "r(n)", "N/n^(d/2)", "N/(2pi sqrt n)^d", "rel");
            for e in &report.entries {
                println!(
                    "{:>8} {:>6} {:>22} {:>22} {:>10}",
                    e.n,
                    e.multiplicity,
                    format!("{:.5} ± {:.5}", e.ratio.value, e.ratio.se),
                    format!("{:.5} ± {:.5}", e.scaled_density.value, e.scaled_density.se),
                    e.relative_to_planar.map(|r| format!("{r:+.3}")).unwrap_or_default()
                );
            }
            for n in &report.skipped {
                println!("skipped n = {n}");
            }
        }
        Command::Check { cases, seed, out } => {
            let r = run_lemma_suite(cases, seed, out.as_deref())?;
            println!(
                "component bound: {} cases, {} violations",
                r.component_cases, r.component_violations
            );
            println!(
                "small component bound: {} cases, {} violations",
                r.small_component_cases, r.small_component_violations
            );
            println!("euler identities: {} cases, {} violations", r.euler_cases, r.euler_violations);
            for p in &r.reproducers {
                println!("reproducer: {}", p.display());
            }
            if !r.passed() {
                return Err(Failure::Validation("lemma suite found violations".into()));
            }
        }
        Command::Covariance {
            ensemble,
            reps,
            radius,
            h,
            seed,
            tolerance,
            lags,
        } => {
            let spec = ensemble.config(vec![radius], 1).spec()?;
            let grid = GridSpec::new(spec.dimension, radius, h, ensemble.periodic)?
                .with_allow_coarse(ensemble.allow_coarse_grid);
            let lag_vectors: Vec<Vec<f64>> = lags
                .iter()
                .map(|&r| {
                    let mut v = vec![0.0; spec.dimension];
                    v[0] = r;
                    v
                })
                .collect();
            let report = validate_covariance(&spec, &grid, reps, &lag_vectors, tolerance, seed)?;
            println!("{:>8} {:>16} {:>16} {:>14} {:>6}", "lag", "empirical", "analytic", "se", "pass");
            for c in &report.checks {
                println!(
                    "{:>8} {:>16.8} {:>16.8} {:>14.3e} {:>6}",
                    c.grid_lag[0], c.empirical, c.analytic, c.standard_error, c.pass
                );
            }
            if !report.pass {
                return Err(Failure::Validation(format!(
                    "covariance of {} outside tolerance",
                    EnsembleKind::parse(&ensemble.ensemble)?.name()
                )));
            }
        }
        Command::Sample {
            ensemble,
            radius,
            h,
            seed,
            out,
        } => {
            let mut c = ensemble.config(vec![radius], 1);
            if let Some(h) = h {
                c.spacing = Spacing::Fixed(h);
            }
            let spec = c.spec()?;
            let grid = c.grid(&spec, radius)?;
            let sample = sample_field(&spec, &grid, seed)?;
            sample.dump(&out)?;
            let labeling = label_domains(&sample);
            let tree = if spec.dimension == 2 && !grid.periodic {
                Some(build_nesting_tree(&labeling)?)
            } else {
                None
            };
            let mut csv_path = out.clone().into_os_string();
            csv_path.push("-domains.csv");
            labeling.write_domain_csv(tree.as_ref(), &PathBuf::from(csv_path))?;
            println!(
                "{} domains, {} interior, {} zero perturbations",
                labeling.total_domains(),
                labeling.interior_domains(),
                sample.zero_perturbations
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("validation failed: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            match e {
                Error::Replicate { .. } => ExitCode::from(3),
                Error::Io(_) | Error::Csv(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
