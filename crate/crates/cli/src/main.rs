use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use prefdisc::axioms::{audit, Tolerances};
use prefdisc::chain::stationary;
use prefdisc::ddm::{
    is_transitive, prior_from_transitive_zeta, zeta_from_global_prior, DdmSpec, GibbsPrior, TRANSITIVITY_TOL,
};
use prefdisc::experiments::{pipeline, simulate, PipelineConfig, SimulationConfig, VERSION};
use prefdisc::identify::{identify, reconstruction_residual, RECONSTRUCTION_TOL};
use prefdisc::{ChoiceDataset, DatasetKind, Error, Menu};
use serde_json::{json, Value};

const EXIT_IO: u8 = 1;
const EXIT_AXIOM: u8 = 2;
const EXIT_NOT_SOFTMAX: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

#[derive(Parser)]
#[command(name = "prefdisc", version, about = "Deliberative choice: axiom audits, identification, DDM sampling")]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, env = "PREFDISC_SEED")]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every axiom check on a dataset (exit 2 if any fails).
    Audit { dataset: PathBuf },
    /// Recover softmax parameters from a dataset (exit 3 if not softmax).
    Identify { dataset: PathBuf },
    /// Run the Metropolis-DDM algorithm on a preset or a config file.
    Simulate(SimulateArgs),
    /// Stationary choice law of the incumbent chain.
    Stationary {
        #[arg(long)]
        spec: PathBuf,
        /// Comma-separated labels; the whole universe by default.
        #[arg(long, value_delimiter = ',')]
        menu: Option<Vec<String>>,
    },
    /// Convert between initial conditions and a global prior.
    Gibbs(GibbsArgs),
    /// Neural-to-behavioral pipeline with cross-validation.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4), conflicts_with = "config")]
    sim: Option<u8>,
    #[arg(long, required_unless_present = "sim")]
    config: Option<PathBuf>,
    /// Also write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the empirical and target distributions as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct GibbsArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Prior implied by a transitive spec (the default).
    #[arg(long, conflicts_with = "from_prior")]
    to_prior: bool,
    /// Initial conditions generated by the prior in this file.
    #[arg(long, value_name = "PRIOR")]
    from_prior: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn io(message: impl Into<String>) -> Self {
        Failure { code: EXIT_IO, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::NotSoftmax(_) => EXIT_NOT_SOFTMAX,
            Error::Intransitive { .. }
            | Error::Runaway(_)
            | Error::NonConvergence(_)
            | Error::DegenerateOdds { .. }
            | Error::InvalidNeuralBias(_)
            | Error::UnsupportedSize(_) => EXIT_NUMERIC,
            Error::Replication { source, .. } => Failure::from((**source).clone()).code,
            _ => EXIT_IO,
        };
        Failure { code, message: e.to_string() }
    }
}

type Outcome = Result<(Value, u8), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    serde_json::from_str(&read(path)?).map_err(|e| {
        Failure::io(format!("{}: line {} column {}: {e}", path.display(), e.line(), e.column()))
    })
}

fn in_file(path: &Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    }
}

fn load_dataset(path: &Path) -> Result<ChoiceDataset, Failure> {
    ChoiceDataset::from_json_str(&read(path)?).map_err(in_file(path))
}

fn load_spec(path: &Path) -> Result<DdmSpec, Failure> {
    DdmSpec::from_json(&read_json(path)?).map_err(in_file(path))
}

fn header(command: &str, seed: u64) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("version".into(), json!(VERSION));
    m.insert("command".into(), json!(command));
    m.insert("seed".into(), json!(seed));
    m
}

fn run_audit(path: &Path, seed: u64) -> Outcome {
    let d = load_dataset(path)?;
    let tol = Tolerances::for_dataset(&d);
    let reports = audit(&d, &tol)?;
    let passed = reports.iter().all(|r| r.passed());
    let mut doc = header("audit", seed);
    doc.insert("input".into(), json!(path.display().to_string()));
    doc.insert("tolerances".into(), json!(tol));
    doc.insert("passed".into(), json!(passed));
    doc.insert("axioms".into(), json!(reports));
    Ok((Value::Object(doc), if passed { 0 } else { EXIT_AXIOM }))
}

fn run_identify(path: &Path, seed: u64) -> Outcome {
    let d = load_dataset(path)?;
    let id = identify(&d).map_err(|e| match e {
        // a sure choice can never come from a softmax process
        Error::DegenerateOdds { .. } => Failure { code: EXIT_NOT_SOFTMAX, message: e.to_string() },
        e => e.into(),
    })?;
    let residual = reconstruction_residual(&d, &id.params)?;
    // exact tables must be reproduced; sampled ones only approximately
    let exact = d.kind() == DatasetKind::Exact;
    let mut doc = header("identify", seed);
    doc.insert("input".into(), json!(path.display().to_string()));
    doc.insert("identified".into(), id.to_json());
    doc.insert("reconstruction_residual".into(), json!(residual));
    let code = if exact && residual > RECONSTRUCTION_TOL { EXIT_NOT_SOFTMAX } else { 0 };
    Ok((Value::Object(doc), code))
}

fn run_simulate(args: &SimulateArgs, seed: Option<u64>) -> Outcome {
    let mut cfg = match (&args.sim, &args.config) {
        (Some(id), _) => SimulationConfig::preset(*id)?,
        (None, Some(path)) => SimulationConfig::from_json_str(&read(path)?).map_err(in_file(path))?,
        (None, None) => return Err(Failure::io("either --sim or --config is required")),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let report = simulate(&cfg)?;
    let mut doc = header("simulate", cfg.seed);
    if let Value::Object(body) = report.to_json() {
        doc.extend(body);
    }
    let doc = Value::Object(doc);
    if let Some(out) = &args.out {
        write(out, &pretty(&doc))?;
    }
    if let Some(csv) = &args.csv {
        write(csv, &report.to_csv())?;
    }
    Ok((doc, 0))
}

fn run_stationary(path: &Path, menu: Option<&[String]>, seed: u64) -> Outcome {
    let spec = load_spec(path)?;
    let members = match menu {
        None => (0..spec.len()).collect(),
        Some(labels) => labels
            .iter()
            .map(|l| spec.index_of(l).ok_or_else(|| Failure::io(format!("--menu: unknown label {l:?}"))))
            .collect::<Result<Vec<_>, _>>()?,
    };
    let menu = Menu::new(members, spec.len())?;
    let report = is_transitive(&spec.restrict(&menu)?, TRANSITIVITY_TOL)?;
    let law = stationary(&spec, &menu)?;
    let probs: serde_json::Map<String, Value> = law
        .iter()
        .map(|(a, p)| (spec.labels()[a].clone(), json!(p)))
        .collect();
    let mut doc = header("stationary", seed);
    doc.insert("spec".into(), spec.to_json());
    doc.insert("menu".into(), json!(menu.members().iter().map(|&a| &spec.labels()[a]).collect::<Vec<_>>()));
    doc.insert("max_cycle_residual".into(), json!(report.worst_residual));
    doc.insert("stationary".into(), Value::Object(probs));
    Ok((Value::Object(doc), 0))
}

fn run_gibbs(args: &GibbsArgs, seed: u64) -> Outcome {
    let spec = load_spec(&args.spec)?;
    let mut doc = header("gibbs", seed);
    doc.insert("spec".into(), spec.to_json());
    match &args.from_prior {
        Some(path) => {
            let prior = GibbsPrior::from_json(&read_json(path)?, spec.labels()).map_err(in_file(path))?;
            let built = zeta_from_global_prior(spec.v(), spec.beta(), &prior)?;
            doc.insert("prior".into(), prior.to_json());
            doc.insert("result".into(), built.to_json());
        }
        None => {
            let prior = prior_from_transitive_zeta(&spec)?;
            doc.insert("result".into(), prior.to_json());
        }
    }
    Ok((Value::Object(doc), 0))
}

fn run_pipeline(path: &Path, seed: u64) -> Outcome {
    let cfg = PipelineConfig::from_json_str(&read(path)?).map_err(in_file(path))?;
    let report = pipeline(&cfg)?;
    let code = if !report.axioms_passed {
        EXIT_AXIOM
    } else if report.cross_validation.as_ref().is_some_and(|cv| !cv.equivalent) {
        EXIT_NUMERIC
    } else {
        0
    };
    let mut doc = header("pipeline", seed);
    if let Value::Object(body) = report.to_json() {
        doc.extend(body);
    }
    Ok((Value::Object(doc), code))
}

fn pretty(doc: &Value) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("reports serialize");
    s.push('\n');
    s
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(EXIT_IO);
        }
    };
    let seed = cli.seed.unwrap_or(0);
    let outcome = match &cli.command {
        Command::Audit { dataset } => run_audit(dataset, seed),
        Command::Identify { dataset } => run_identify(dataset, seed),
        Command::Simulate(args) => run_simulate(args, cli.seed),
        Command::Stationary { spec, menu } => run_stationary(spec, menu.as_deref(), seed),
        Command::Gibbs(args) => run_gibbs(args, seed),
        Command::Pipeline { config } => run_pipeline(config, seed),
    };
    match outcome {
        Ok((doc, code)) => {
            print!("{}", pretty(&doc));
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
