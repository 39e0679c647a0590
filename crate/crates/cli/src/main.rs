//! `netrisk` command-line front end.
//!
//! Exit codes: 0 success, 1 other failure, 2 malformed input or unknown
//! scenario, 3 infeasible configuration, 4 sampler abort.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use netrisk::bench::{
    run_comparison, write_raw_csv, write_summary_csv, ComparisonSpec, OracleMode, Scenario,
    ScenarioInstance,
};
use netrisk::network::load_network;
use netrisk::validation::{validate_fixture, Fixture};
use netrisk::{
    run_bound, run_mcs, run_tmcmc, AssetRegistry, ConsequenceModel, Error, LoadOptions, Method,
    RiskReport, TmcmcConfig,
};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "netrisk",
    version,
    about = "Network risk estimation with transitional MCMC"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the risk of one network.
    Assess(AssessArgs),
    /// Compare methods on a generated scenario over several seeds.
    Bench(BenchArgs),
    /// Run a built-in self-check: fig1, gaussian-evidence, enum-n10 or all.
    Validate { fixture: String },
}

#[derive(Args)]
struct Tuning {
    /// Sampler settings as a flat TOML file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Samples per stage.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    chains: Option<usize>,
    /// analytic, enumerate or none.
    #[arg(long)]
    oracle: Option<String>,
}

impl Tuning {
    fn tmcmc_config(&self) -> netrisk::Result<TmcmcConfig> {
        let mut cfg = match &self.config {
            Some(p) => TmcmcConfig::load(p)?,
            None => TmcmcConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = self.samples {
            cfg.samples_per_stage = n;
        }
        if let Some(c) = self.chains {
            cfg.n_chains = c;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn oracle(&self, default: OracleMode) -> Result<OracleMode, Failure> {
        match &self.oracle {
            None => Ok(default),
            Some(s) => s.parse().map_err(|e: Error| Failure::new(2, e.to_string())),
        }
    }
}

#[derive(Args)]
struct AssessArgs {
    /// Edge list `from,to,capacity,asset_id,failed_capacity`.
    #[arg(long, requires_all = ["od", "assets"], conflicts_with = "generate")]
    network: Option<PathBuf>,
    /// OD list `origin,destination`.
    #[arg(long)]
    od: Option<PathBuf>,
    /// Asset list `asset_id,beta[,label]`.
    #[arg(long)]
    assets: Option<PathBuf>,
    /// Use a generated scenario, e.g. `grid:40x40:0.18:seed=3`.
    #[arg(long)]
    generate: Option<String>,
    #[arg(long, default_value = "tmcmc")]
    method: String,
    /// Evaluation budget (mcs) or state count (bound).
    #[arg(long)]
    budget: Option<u64>,
    /// Divide capacity drops by the intact capacity.
    #[arg(long)]
    normalize: bool,
    /// Give asset links without a failed capacity the detour default.
    #[arg(long)]
    detour_default: bool,
    /// Report path (default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Importance CSV path.
    #[arg(long)]
    importance: Option<PathBuf>,
    /// Where to write diagnostics if the sampler aborts.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Args)]
struct BenchArgs {
    /// Scenario such as `case1:n=5:seed=42` or `case2:n=50:rel=5:seed=7`.
    scenario: String,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    /// Comma-separated subset of tmcmc,mcs,bound.
    #[arg(long, value_delimiter = ',', default_values_t = ["tmcmc".to_string(), "mcs".to_string(), "bound".to_string()])]
    methods: Vec<String>,
    /// Baseline budget when tmcmc is not among the methods.
    #[arg(long)]
    budget: Option<u64>,
    #[command(flatten)]
    tuning: Tuning,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse { .. } => 2,
            Error::Config(_) => 3,
            Error::ZeroLikelihoodPrior { .. } | Error::MaxStagesExceeded { .. } => 4,
            _ => 1,
        };
        Self::new(code, e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::new(1, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    let result = match cli.command {
        Command::Assess(a) => assess(a),
        Command::Bench(b) => bench(b),
        Command::Validate { fixture } => validate(&fixture),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_instance(a: &AssessArgs) -> Result<ScenarioInstance, Failure> {
    if let Some(g) = &a.generate {
        let scenario: Scenario = g
            .parse()
            .map_err(|e: Error| Failure::new(2, e.to_string()))?;
        let mut inst = scenario.build()?;
        if let Some(net) = &inst.network {
            inst.model = ConsequenceModel::capacity_drop(net.clone(), a.normalize);
        }
        return Ok(inst);
    }
    let (Some(edges), Some(od), Some(assets)) = (&a.network, &a.od, &a.assets) else {
        return Err(Failure::new(
            2,
            "either --generate or all of --network, --od and --assets are required",
        ));
    };
    let registry = AssetRegistry::load(assets)?;
    let options = LoadOptions {
        detour_default: a.detour_default,
    };
    let (network, dropped) = load_network(edges, od, &registry, options)?;
    for d in &dropped {
        eprintln!(
            "warning: dropped link {} -> {} with capacity {}",
            d.from, d.to, d.capacity
        );
    }
    let network = Arc::new(network);
    Ok(ScenarioInstance {
        model: ConsequenceModel::capacity_drop(network.clone(), a.normalize),
        registry,
        network: Some(network),
    })
}

fn assess(a: AssessArgs) -> Result<u8, Failure> {
    let method: Method = a
        .method
        .parse()
        .map_err(|e: Error| Failure::new(3, e.to_string()))?;
    let cfg = a.tuning.tmcmc_config()?;
    let oracle_mode = a.tuning.oracle(OracleMode::None)?;
    if method != Method::Tmcmc && a.budget.is_none() {
        return Err(Failure::new(
            3,
            format!("--budget is required for --method {method}"),
        ));
    }
    let inst = load_instance(&a)?;

    let report = match method {
        Method::Tmcmc => match run_tmcmc(&inst.model, &inst.registry, &cfg) {
            Ok(r) => r,
            Err(e) => {
                if matches!(
                    e,
                    Error::ZeroLikelihoodPrior { .. } | Error::MaxStagesExceeded { .. }
                ) {
                    let path = diagnostics_path(&a);
                    write_diagnostics(&path, &e, &cfg)?;
                    eprintln!("diagnostics written to {}", path.display());
                }
                return Err(e.into());
            }
        },
        Method::Mcs => run_mcs(&inst.model, &inst.registry, a.budget.unwrap_or(0), cfg.seed)?,
        Method::Bound => run_bound(&inst.model, &inst.registry, a.budget.unwrap_or(0))?,
    };

    let json = report.to_json()?;
    match &a.output {
        Some(p) => std::fs::write(p, &json)?,
        None => io::stdout().write_all(json.as_bytes())?,
    }
    if let Some(p) = &a.importance {
        report.write_importance_csv(&inst.registry, BufWriter::new(File::create(p)?))?;
    }
    summarize(&report, inst.registry.len());
    if let Some(exact) = inst.oracle(oracle_mode)? {
        eprintln!("oracle risk: {exact}");
    }
    Ok(0)
}

fn summarize(report: &RiskReport<f64>, assets: usize) {
    eprintln!(
        "{}: risk {} over {assets} assets, {} stages, {} unique states, {} evaluations",
        report.method,
        report.estimated_risk,
        report.stages_used,
        report.unique_states,
        report.total_evaluations
    );
}

fn diagnostics_path(a: &AssessArgs) -> PathBuf {
    if let Some(p) = &a.diagnostics {
        return p.clone();
    }
    match &a.output {
        Some(p) => p.with_extension("diagnostics.json"),
        None => PathBuf::from("netrisk-diagnostics.json"),
    }
}

fn write_diagnostics(path: &Path, e: &Error, cfg: &TmcmcConfig) -> Result<(), Failure> {
    let mut doc = json!({
        "error": e.to_string(),
        "config": cfg,
    });
    if let Error::MaxStagesExceeded {
        last_exponent,
        stages,
        ..
    } = e
    {
        doc["last_exponent"] = json!(last_exponent);
        doc["stages"] = json!(stages);
    }
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Failure::new(1, e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn bench(b: BenchArgs) -> Result<u8, Failure> {
    let scenario: Scenario = b
        .scenario
        .parse()
        .map_err(|e: Error| Failure::new(2, e.to_string()))?;
    let methods = b
        .methods
        .iter()
        .map(|m| m.parse::<Method>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::new(3, e.to_string()))?;
    let cfg = b.tuning.tmcmc_config()?;
    let spec = ComparisonSpec {
        methods,
        n_repeats: b.repeats,
        base_seed: cfg.seed,
        tmcmc: cfg,
        fallback_budget: b.budget,
        oracle: b.tuning.oracle(OracleMode::Analytic)?,
    };
    let cmp = run_comparison(&scenario, &spec)?;
    std::fs::create_dir_all(&b.out_dir)?;
    write_summary_csv(
        &cmp.rows,
        BufWriter::new(File::create(b.out_dir.join("summary.csv"))?),
    )?;
    write_raw_csv(
        &cmp.raw,
        BufWriter::new(File::create(b.out_dir.join("raw.csv"))?),
    )?;
    write_summary_csv(&cmp.rows, io::stdout())?;
    Ok(0)
}

fn validate(name: &str) -> Result<u8, Failure> {
    let fixture: Fixture = name
        .parse()
        .map_err(|e: Error| Failure::new(2, e.to_string()))?;
    let checks = validate_fixture(fixture)?;
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!(
        "{} of {} checks passed",
        checks.len() - failed,
        checks.len()
    );
    Ok(if failed == 0 { 0 } else { 1 })
}
