//! `rtz`: Toeplitz products with quasi-homogeneous symbols on Bergman
//! spaces of bounded Reinhardt domains.
//!
//! Verbs: `norms`, `product-check`, `fiber analyze`, `experiment <kind>`.
//! Exit codes: 0 = verdict computed, 1 = config error, 2 = numeric failure.
//! The only environment variable honored is `RT_CACHE_DIR` (moment cache).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rtz_cli::config::{parse_tuple, Config, ExperimentKind, ExperimentSpec};
use rtz_cli::experiments::{run_experiment, RunError};
use rtz_cli::report::{FiberReport, ProductCheckReport, REPORT_SCHEMA_VERSION};
use rtz_core::domain::DomainSpec;
use rtz_core::fibers::satisfies_condition_i;
use rtz_core::lattice::{MultiIndex, TruncationLattice};
use rtz_core::moments::MomentTable;
use rtz_core::symbolic::parse::parse_index_set;
use rtz_core::symbols::{QhSymbol, SymbolSpec, SymbolSum};
use rtz_core::toeplitz::{
    default_zero_tolerance, product_apply, product_apply_sliced, zero_product_verdict,
    LatticeOperator,
};

#[derive(Parser)]
#[command(
    name = "rtz",
    version = concat!(env!("CARGO_PKG_VERSION"), " (report schema v1)"),
    about = "Toeplitz operator products on Bergman spaces of bounded Reinhardt domains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute monomial norms and Bergman coefficients as CSV.
    Norms {
        /// Domain spec, e.g. polydisk(1,1), ball(1), ellipsoid(p=(2,4), r=1)
        #[arg(long)]
        domain: String,
        /// Largest index, e.g. (10,10)
        #[arg(long = "alpha-max")]
        alpha_max: String,
        /// Relative quadrature tolerance (default 1e-10 built-in / 1e-7 generic)
        #[arg(long)]
        tol: Option<f64>,
        /// Output CSV path (a .manifest.json is written alongside)
        #[arg(long)]
        out: PathBuf,
    },
    /// Compose a product of symbols and report the zero-product verdict.
    ProductCheck {
        #[arg(long)]
        domain: String,
        /// Config file whose [symbols] section lists the factors, phi_1 first
        #[arg(long)]
        symbols: PathBuf,
        /// Lattice bound, e.g. (10,10)
        #[arg(long)]
        kmax: String,
        /// Zero tolerance relative to the product of sup bounds (default 1e-6)
        #[arg(long)]
        tol: Option<f64>,
        /// Also write the sparse operator entries as CSV
        #[arg(long = "export-matrix")]
        export_matrix: Option<PathBuf>,
        /// JSON report path
        #[arg(long)]
        report: PathBuf,
    },
    /// Fiber combinatorics over symbolic index sets.
    Fiber {
        #[command(subcommand)]
        command: FiberCommand,
    },
    /// Run an experiment from a config file.
    Experiment {
        /// proposition1 | corollary1 | theorem1_box_reduction | moment_vanishing
        kind: String,
        #[arg(long)]
        config: PathBuf,
        /// Override the report output path
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum FiberCommand {
    /// Decide condition (I) for an index-set expression.
    Analyze {
        /// Expression, e.g. "AP(1,2) x FULL | FIN(3,5) x GEO(2)"
        #[arg(long)]
        set: String,
        /// Include the deletion-process layers in the report
        #[arg(long)]
        decompose: bool,
        /// JSON report path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Norms {
            domain,
            alpha_max,
            tol,
            out,
        } => cmd_norms(&domain, &alpha_max, tol, &out),
        Command::ProductCheck {
            domain,
            symbols,
            kmax,
            tol,
            export_matrix,
            report,
        } => cmd_product_check(&domain, &symbols, &kmax, tol, export_matrix.as_deref(), &report),
        Command::Fiber {
            command: FiberCommand::Analyze { set, decompose, out },
        } => cmd_fiber_analyze(&set, decompose, out.as_deref()),
        Command::Experiment { kind, config, out } => cmd_experiment(&kind, &config, out),
    }
}

fn build_domain(spec_text: &str, dim: usize) -> Result<rtz_core::DomainProfile, RunError> {
    let spec = DomainSpec::parse(spec_text).map_err(RunError::config)?;
    spec.build(dim, Some(Path::new("."))).map_err(RunError::config)
}

fn build_table(
    domain: &rtz_core::DomainProfile,
    tol: Option<f64>,
) -> Result<MomentTable, RunError> {
    match tol {
        Some(t) => MomentTable::new(domain, t),
        None => MomentTable::with_default_tolerance(domain),
    }
    .map_err(RunError::numeric)
}

/// Moment-cache path under RT_CACHE_DIR, keyed by domain label + tolerance.
fn cache_path(table: &MomentTable) -> Option<PathBuf> {
    let dir = std::env::var_os("RT_CACHE_DIR")?;
    let key = format!("{}@{:e}", table.domain().label(), table.quad_tolerance());
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in key.bytes() {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    Some(PathBuf::from(dir).join(format!("rtz-norms-{hash:016x}.csv")))
}

fn load_cache_if_any(table: &MomentTable) {
    if let Some(path) = cache_path(table) {
        if path.exists() {
            // stale or foreign caches are ignored, not fatal
            let _ = table.load_cache(&path);
        }
    }
}

fn save_cache_if_any(table: &MomentTable) {
    if let Some(path) = cache_path(table) {
        if let Some(parent) = path.parent() {
            let _ = std::fs::create_dir_all(parent);
        }
        let _ = table.save_cache(&path);
    }
}

fn cmd_norms(
    domain_text: &str,
    alpha_max: &str,
    tol: Option<f64>,
    out: &Path,
) -> Result<(), RunError> {
    let alpha = parse_tuple(alpha_max).map_err(RunError::config)?;
    if alpha.iter().any(|a| *a < 0) {
        return Err(RunError::Config("alpha-max entries must be nonnegative".into()));
    }
    let domain = build_domain(domain_text, alpha.len())?;
    let table = build_table(&domain, tol)?;
    load_cache_if_any(&table);
    let lattice = TruncationLattice::new(MultiIndex::new(alpha));
    table.ensure_norms(lattice.iter());
    table.save_cache(out).map_err(RunError::numeric)?;
    save_cache_if_any(&table);
    println!(
        "wrote {} rows to {}",
        lattice.cardinality(),
        out.display()
    );
    Ok(())
}

/// Build the factors from a config file's [symbols] section. A trailing
/// linf spec becomes the sliced outermost factor.
fn load_factors(
    path: &Path,
    dim: usize,
    domain: &rtz_core::DomainProfile,
) -> Result<(Vec<SymbolSum>, Option<rtz_core::SlicedSymbol>), RunError> {
    let config = Config::load(path).map_err(RunError::config)?;
    let specs: Vec<SymbolSpec> = config
        .get_all("symbols", "symbol")
        .into_iter()
        .map(SymbolSpec::parse)
        .collect::<Result<_, _>>()
        .map_err(RunError::config)?;
    if specs.is_empty() {
        return Err(RunError::Config(format!(
            "no [symbols] entries in {}",
            path.display()
        )));
    }
    let mut sums = Vec::new();
    let mut sliced = None;
    let last = specs.len() - 1;
    for (i, s) in specs.iter().enumerate() {
        if s.is_linf() {
            if i != last {
                return Err(RunError::Config(
                    "an linf symbol must be the outermost factor (listed last)".into(),
                ));
            }
            sliced = Some(s.build_sliced(dim, domain, 2).map_err(RunError::config)?);
        } else {
            sums.push(s.build_sum(dim, domain).map_err(RunError::config)?);
        }
    }
    Ok((sums, sliced))
}

fn cmd_product_check(
    domain_text: &str,
    symbols_path: &Path,
    kmax_text: &str,
    tol: Option<f64>,
    export_matrix: Option<&Path>,
    report_path: &Path,
) -> Result<(), RunError> {
    let kmax = parse_tuple(kmax_text).map_err(RunError::config)?;
    if kmax.iter().any(|k| *k < 0) {
        return Err(RunError::Config("kmax entries must be nonnegative".into()));
    }
    let dim = kmax.len();
    let domain = build_domain(domain_text, dim)?;
    let table = build_table(&domain, None)?;
    load_cache_if_any(&table);
    let lattice = TruncationLattice::new(MultiIndex::new(kmax.clone()));
    let (sums, sliced) = load_factors(symbols_path, dim, &domain)?;

    let op: LatticeOperator;
    let mut sups: Vec<f64> = sums.iter().map(|s| s.sup_bound()).collect();
    match sliced {
        Some(head) => {
            let mut tail = Vec::new();
            for s in &sums {
                match s.terms().next() {
                    Some((_, qh)) if s.term_count() == 1 => tail.push(qh.clone()),
                    None => tail.push(QhSymbol::zero(dim)),
                    _ => {
                        return Err(RunError::Config(
                            "with an linf factor, the tail must be single quasi-homogeneous symbols"
                                .into(),
                        ))
                    }
                }
            }
            sups.push(head.sup_bound());
            op = product_apply_sliced(&table, &head, &tail, &lattice)
                .map_err(RunError::numeric)?;
        }
        None => {
            op = product_apply(&table, &sums, &lattice).map_err(RunError::numeric)?;
        }
    }
    let zero_tol = tol.map_or_else(
        || default_zero_tolerance(&sups),
        |rel| rel * sups.iter().product::<f64>().max(f64::MIN_POSITIVE),
    );
    let verdict = zero_product_verdict(&op, &table, zero_tol).map_err(RunError::numeric)?;
    if let Some(path) = export_matrix {
        std::fs::write(path, op.to_matrix_csv())
            .map_err(|e| RunError::Numeric(format!("cannot write {}: {e}", path.display())))?;
    }
    let report = ProductCheckReport::from_product(domain_text.to_string(), kmax, &verdict);
    std::fs::write(report_path, rtz_cli::report::to_json_string(&report))
        .map_err(|e| RunError::Numeric(format!("cannot write {}: {e}", report_path.display())))?;
    save_cache_if_any(&table);
    println!(
        "zero_flag = {}, norm estimate = {:.6e} (report: {})",
        report.zero_flag,
        report.norm_estimate,
        report_path.display()
    );
    Ok(())
}

fn cmd_fiber_analyze(
    set_text: &str,
    decompose: bool,
    out: Option<&Path>,
) -> Result<(), RunError> {
    let set = parse_index_set(set_text).map_err(RunError::config)?;
    let verdict = satisfies_condition_i(&set).map_err(RunError::numeric)?;
    let report = FiberReport {
        schema_version: REPORT_SCHEMA_VERSION,
        engine_version: rtz_cli::report::engine_version(),
        set: set_text.to_string(),
        condition_i: verdict.holds,
        witness: verdict.witness.as_ref().map(|w| w.to_string()),
        layers: decompose.then(|| {
            verdict
                .certificate
                .layers
                .iter()
                .map(|l| l.to_string())
                .collect()
        }),
        deleted: decompose.then(|| {
            verdict
                .certificate
                .deleted
                .iter()
                .map(|f| f.to_string())
                .collect()
        }),
    };
    let json = rtz_cli::report::to_json_string(&report);
    match out {
        Some(path) => {
            std::fs::write(path, &json)
                .map_err(|e| RunError::Numeric(format!("cannot write {}: {e}", path.display())))?;
            println!(
                "condition (I) {} for {}",
                if report.condition_i { "holds" } else { "fails" },
                set_text
            );
        }
        None => print!("{json}"),
    }
    Ok(())
}

fn cmd_experiment(kind: &str, config_path: &Path, out: Option<PathBuf>) -> Result<(), RunError> {
    let kind = ExperimentKind::parse(kind).map_err(RunError::config)?;
    let config = Config::load(config_path).map_err(RunError::config)?;
    let mut spec = ExperimentSpec::from_config(&config, Some(kind)).map_err(RunError::config)?;
    if let Some(out) = out {
        spec.out = Some(out);
    }
    let (json, summary) = run_experiment(&spec)?;
    if spec.out.is_none() {
        print!("{json}");
    }
    println!("{summary}");
    Ok(())
}
