//! Command-line front end: sample matrices, compute spectra, run
//! localization diagnostics, drive Monte Carlo studies, and run the
//! verification suite. Exit code is 0 iff every configured assertion passed.

use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use heavyband::ensemble::{
    export_binary, export_text, import_binary, import_text, largest_entries, sample_matrix,
    BandPattern, PatternKind, SampledMatrix,
};
use heavyband::error::Result;
use heavyband::experiments::{
    config_file::load_config, persist::persist_summary, persist::write_localization_csv,
    persist::write_spectrum_csv, run_study, StudyKind, StudySummary,
};
use heavyband::heavy_tail::{SlowlyVarying, TailLaw};
use heavyband::localization::{delocalization_scan, two_coord_overlap};
use heavyband::spectral::{dense_eigh, lanczos_both_ends, SpectralSummary};

#[derive(Parser)]
#[command(name = "heavyband", version, about = "Heavy-tailed random band matrix experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PatternArg {
    Band,
    Cyclic,
}

impl From<PatternArg> for PatternKind {
    fn from(p: PatternArg) -> Self {
        match p {
            PatternArg::Band => PatternKind::Band,
            PatternArg::Cyclic => PatternKind::CyclicBand,
        }
    }
}

#[derive(Args)]
struct LawArgs {
    /// Tail exponent alpha.
    #[arg(long)]
    alpha: f64,
    /// Minimum modulus of the entry law.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Slowly varying factor: constant:<c> or log_power:<beta>.
    #[arg(long, default_value = "constant:1.0")]
    slowly_varying: String,
    /// Draw signs as independent fair flips.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    symmetrized: bool,
    /// Rescale the law to unit second moment (needs alpha > 2).
    #[arg(long, default_value_t = false)]
    variance_normalized: bool,
}

impl LawArgs {
    fn build(&self) -> Result<TailLaw> {
        let sv = parse_sv(&self.slowly_varying)?;
        TailLaw::new(self.alpha, self.scale, sv, self.symmetrized, self.variance_normalized)
    }
}

fn parse_sv(s: &str) -> Result<SlowlyVarying> {
    let (kind, v) = s.split_once(':').ok_or_else(|| {
        heavyband::Error::Config(format!("slowly_varying wants kind:value, got '{s}'"))
    })?;
    let v: f64 = v
        .parse()
        .map_err(|_| heavyband::Error::Config(format!("bad slowly_varying value '{s}'")))?;
    match kind {
        "constant" => Ok(SlowlyVarying::Constant(v)),
        "log_power" => Ok(SlowlyVarying::LogPower(v)),
        _ => Err(heavyband::Error::Config(format!("unknown slowly_varying kind '{kind}'"))),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample one matrix replica and export it.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        mu: f64,
        #[command(flatten)]
        law: LawArgs,
        #[arg(long, value_enum, default_value_t = PatternArg::Cyclic)]
        pattern: PatternArg,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        replica: u64,
        /// Output path; .bin selects the compact binary format.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute eigenvalues (and residuals) of an exported matrix.
    Spectrum {
        /// Matrix file from `sample` (text or binary).
        #[arg(long)]
        input: PathBuf,
        /// Number of pairs per spectral end for the iterative path.
        #[arg(long, default_value_t = 5)]
        top: usize,
        /// Force the dense full-spectrum path.
        #[arg(long, default_value_t = false)]
        dense: bool,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write eigenvectors as CSV.
        #[arg(long)]
        vectors: Option<PathBuf>,
    },
    /// Localization diagnostics of the extreme eigenvectors.
    Localize {
        #[arg(long)]
        input: PathBuf,
        /// Pairs per spectral end to examine.
        #[arg(long, default_value_t = 5)]
        top: usize,
        /// Support-size exponent: L = floor(N^c).
        #[arg(long, default_value_t = 0.25)]
        c: f64,
        /// Localization mass cap for the scan trigger.
        #[arg(long, default_value_t = 0.4)]
        eta0: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a Monte Carlo study from a config file.
    Study {
        /// Study kind; must match the config's kind.
        kind: String,
        #[arg(long)]
        config: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the replica count.
        #[arg(long)]
        replicas: Option<usize>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (defaults to the rayon global pool).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run the instance-wise verification suite.
    Verify {
        /// Heavier sweep sizes (the acceptance-scale parameters).
        #[arg(long, default_value_t = false)]
        full: bool,
        #[arg(long, default_value_t = 271828)]
        seed: u64,
    },
}

fn import_matrix(path: &Path) -> Result<SampledMatrix> {
    let mut f = std::fs::File::open(path)?;
    let mut magic = [0u8; 4];
    let is_binary = f.read_exact(&mut magic).is_ok() && &magic == b"HBM1";
    drop(f);
    if is_binary {
        import_binary(path)
    } else {
        import_text(path)
    }
}

fn solve(m: &SampledMatrix, top: usize, dense: bool, tol: f64, max_iter: usize) -> Result<SpectralSummary> {
    if dense {
        dense_eigh(&m.to_dense()?)
    } else {
        lanczos_both_ends(m, top, top, tol, max_iter)
    }
}

fn run() -> Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Sample { n, mu, law, pattern, seed, replica, out } => {
            let law = law.build()?;
            let pattern = BandPattern::build(n, mu, pattern.into())?;
            let m = sample_matrix(&pattern, &law, seed, replica);
            if out.extension().is_some_and(|e| e == "bin") {
                export_binary(&m, &out)?;
            } else {
                export_text(&m, &out)?;
            }
            eprintln!(
                "sampled n={n} mu={mu} entries={} seed={seed} replica={replica} -> {}",
                m.entries().len(),
                out.display()
            );
            Ok(true)
        }
        Command::Spectrum { input, top, dense, tol, max_iter, out, vectors } => {
            let m = import_matrix(&input)?;
            let summary = solve(&m, top, dense || m.n() <= 64, tol, max_iter)?;
            write_spectrum_csv(&summary, &out)?;
            if let Some(vpath) = vectors {
                heavyband::experiments::persist::write_eigenvectors_csv(&summary, &vpath)?;
            }
            eprintln!(
                "{} eigenvalues ({:?}, converged: {}) -> {}",
                summary.eigenvalues.len(),
                summary.method,
                summary.converged,
                out.display()
            );
            Ok(summary.converged)
        }
        Command::Localize { input, top, c, eta0, tol, max_iter, out } => {
            let m = import_matrix(&input)?;
            let summary = solve(&m, top, m.n() <= 64, tol, max_iter)?;
            let report = delocalization_scan(&summary, &m, c, eta0)?;
            write_localization_csv(&report, &out)?;
            // extended view with the two-coordinate overlaps for the ranked entries
            let ranked = largest_entries(&m, report.records.len().min(m.entries().len()))?;
            let mut extended = String::from("# heavyband csv v1\nk,eigenvalue,L,best_tail,successive_tail,participation_ratio,overlap\n");
            for (r, e) in report.records.iter().zip(&ranked) {
                let overlap = summary
                    .eigenvector(r.k)
                    .and_then(|v| two_coord_overlap(v, e.i as usize, e.j as usize, e.sign).ok());
                let _ = writeln!(
                    extended,
                    "{},{:e},{},{:e},{:e},{:e},{}",
                    r.k + 1,
                    r.eigenvalue,
                    report.l,
                    r.best_tail,
                    r.successive_tail,
                    r.participation_ratio,
                    overlap.map(|o| format!("{o:e}")).unwrap_or_default(),
                );
            }
            std::fs::write(&out, extended)?;
            let flagged = report.any_flagged_localized || report.any_flagged_successive;
            eprintln!(
                "L={} rho={:.6e} flagged={} -> {}",
                report.l,
                report.rho,
                flagged,
                out.display()
            );
            Ok(true)
        }
        Command::Study { kind, config, seed, replicas, out, threads } => {
            let kind = StudyKind::parse(&kind)?;
            let mut cfg = load_config(&config)?;
            if cfg.kind != kind {
                return Err(heavyband::Error::Config(format!(
                    "config is a {} study but '{}' was requested",
                    cfg.kind.name(),
                    kind.name()
                )));
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(r) = replicas {
                cfg.replicas = r;
            }
            if let Some(o) = out {
                cfg.out_dir = Some(o.display().to_string());
            }
            let summary = match threads {
                Some(t) => {
                    let pool = rayon::ThreadPoolBuilder::new()
                        .num_threads(t)
                        .build()
                        .map_err(|e| heavyband::Error::Config(e.to_string()))?;
                    pool.install(|| run_study(&cfg))?
                }
                None => run_study(&cfg)?,
            };
            print_summary(&summary);
            if let Some(dir) = &summary.config.out_dir {
                persist_summary(&summary, Path::new(dir))?;
                eprintln!("persisted to {dir}");
            }
            Ok(summary.all_checks_passed())
        }
        Command::Verify { full, seed } => {
            let outcomes = if full {
                vec![
                    heavyband::verify::perturbation_sweep(10_000, 50, seed),
                    heavyband::verify::localized_bound_exhaustive(100, 12, seed.wrapping_add(1)),
                    heavyband::verify::interlacing_check(50, seed.wrapping_add(2)),
                    heavyband::verify::row_norm_chain_sweep(200, seed.wrapping_add(3)),
                    heavyband::verify::truncated_moment_grid(),
                    heavyband::verify::bennett_sweep(100_000, seed.wrapping_add(4)),
                ]
            } else {
                heavyband::verify::quick_suite(seed)
            };
            let mut all = true;
            for o in &outcomes {
                println!("[{}] {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
                all &= o.passed;
            }
            Ok(all)
        }
    }
}

fn print_summary(summary: &StudySummary) {
    println!(
        "study {} n={} mu={} alpha={} replicas={} seed={} ({} ms, {} solver iterations)",
        summary.config.kind.name(),
        summary.config.n,
        summary.config.mu,
        summary.config.alpha,
        summary.config.replicas,
        summary.config.seed,
        summary.wall_ms,
        summary.solver_iterations
    );
    for a in &summary.aggregates {
        println!("  {} = {:.6}", a.name, a.value);
    }
    for c in &summary.checks {
        let band = match (c.lo, c.hi) {
            (Some(lo), Some(hi)) => format!("[{lo}, {hi}]"),
            (Some(lo), None) => format!(">= {lo}"),
            (None, Some(hi)) => format!("<= {hi}"),
            (None, None) => "(unbounded)".to_string(),
        };
        let observed = c.observed.map(|v| format!("{v:.6}")).unwrap_or_else(|| "n/a".into());
        println!(
            "[{}] {}: observed {} wanted {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            observed,
            band
        );
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
