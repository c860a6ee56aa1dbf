use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

use sinrsched::experiment::{self, ExperimentConfig, ExperimentName};
use sinrsched::generate::{gen_random, DemandSpec, GenConfig, PowerSpec, UtilityFamily};
use sinrsched::oracle::{brute_opt_flexible_fixed, brute_opt_threshold, check_spectral, Regime};
use sinrsched::verify::{verify_flexible, verify_schedule, verify_solution};
use sinrsched::{
    check_admissible, solve, solve_flexible, solve_latency, Algorithm, FlexibleRun, Instance, LinkId,
    PowerAssignment, PowerCap, Schedule, Solution, Verification,
};

/// Caps the worker pool when set to a positive integer.
const THREADS_ENV: &str = "SINRSCHED_THREADS";

#[derive(Parser)]
#[command(name = "sinrsched", version, about = "SINR link scheduling toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance.
    Gen(GenArgs),
    /// Run a solver on an instance.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        algorithm: SolveAlgorithm,
        /// Power regime for `flexible`; defaults to limited with a finite cap
        /// and unlimited otherwise.
        #[arg(long)]
        mode: Option<Algorithm>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a multi-slot schedule meeting every link's demand.
    Schedule {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        mode: Option<Algorithm>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check a solution, flexible run or schedule against its instance.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Admissibility certificate or exact optimum.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        /// Comma-separated link ids; all links when omitted.
        #[arg(long, value_delimiter = ',')]
        subset: Option<Vec<u32>>,
        #[arg(long, value_enum, default_value_t = OracleMethod::FixedPoint)]
        method: OracleMethod,
        /// Power regime for `brute`.
        #[arg(long, value_enum, default_value_t = BruteRegime::Variable)]
        regime: BruteRegime,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a seeded batch experiment and write JSON and CSV reports.
    Experiment {
        #[arg(long, value_enum)]
        name: ExperimentArg,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        pmax: Option<PowerCap>,
        #[arg(long)]
        area: Option<f64>,
        /// JSON report; the CSV goes next to it with a `.csv` extension.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct GenArgs {
    /// Full generator configuration as JSON; the flags below are ignored
    /// except `--seed` and `--out`.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long, default_value = "inf")]
    pmax: PowerCap,
    #[arg(long, default_value_t = 100.0)]
    area: f64,
    #[arg(long, default_value_t = 1e-6)]
    noise: f64,
    #[arg(long, value_enum)]
    utility: Option<UtilityArg>,
    /// Demands as multiples of each link's maximum utility, `MIN,MAX`.
    #[arg(long, value_delimiter = ',')]
    demand: Option<Vec<f64>>,
    /// Uniform fixed power on every link.
    #[arg(long)]
    power: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveAlgorithm {
    Unlimited,
    Fixed,
    Limited,
    Flexible,
}

#[derive(Clone, Copy, ValueEnum)]
enum UtilityArg {
    Threshold,
    Step,
    Shannon,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleMethod {
    FixedPoint,
    Spectral,
    Brute,
    BruteFlexible,
}

#[derive(Clone, Copy, ValueEnum)]
enum BruteRegime {
    Variable,
    Capped,
    Fixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentArg {
    Ratio,
    Adversary,
    Aloha,
    Strengthen,
    Reverse,
}

impl From<ExperimentArg> for ExperimentName {
    fn from(e: ExperimentArg) -> Self {
        match e {
            ExperimentArg::Ratio => ExperimentName::Ratio,
            ExperimentArg::Adversary => ExperimentName::Adversary,
            ExperimentArg::Aloha => ExperimentName::Aloha,
            ExperimentArg::Strengthen => ExperimentName::Strengthen,
            ExperimentArg::Reverse => ExperimentName::Reverse,
        }
    }
}

/// A run that completed but found something wrong.
struct Failed;

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_instance(path: &Path) -> anyhow::Result<Instance> {
    Instance::from_json(&read(path)?).with_context(|| format!("parsing instance {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn emit_json<T: serde::Serialize>(out: Option<&Path>, value: &T) -> anyhow::Result<()> {
    emit(out, &serde_json::to_string_pretty(value)?)
}

fn default_mode(inst: &Instance, mode: Option<Algorithm>) -> Algorithm {
    mode.unwrap_or(if inst.p_max().is_finite() {
        Algorithm::Limited
    } else {
        Algorithm::Unlimited
    })
}

fn gen_config(args: &GenArgs) -> anyhow::Result<GenConfig> {
    let mut c = match &args.config {
        Some(path) => serde_json::from_str(&read(path)?).context("parsing generator config")?,
        None => {
            let mut c = GenConfig::new(args.n, 0);
            c.alpha = args.alpha;
            c.p_max = args.pmax;
            c.area = args.area;
            c.noise = args.noise;
            c.utility = args.utility.map(|u| match u {
                UtilityArg::Threshold => UtilityFamily::Threshold,
                UtilityArg::Step => UtilityFamily::Step {
                    steps: 3,
                    gamma_max: 20.0,
                    value_max: 4.0,
                },
                UtilityArg::Shannon => UtilityFamily::Shannon { scale: 1.0, cutoff: 1.0 },
            });
            c.demand = match args.demand.as_deref() {
                None => None,
                Some(&[min, max]) => Some(DemandSpec::RelativeToMax { min, max }),
                Some(_) => bail!("--demand takes MIN,MAX"),
            };
            c.power = args.power.map(|power| PowerSpec::Uniform { power });
            c
        }
    };
    match (args.seed, &args.config) {
        (Some(seed), _) => c.seed = seed,
        (None, None) => bail!("--seed is required"),
        (None, Some(_)) => {}
    }
    Ok(c)
}

fn link_subset(inst: &Instance, subset: Option<Vec<u32>>) -> Vec<LinkId> {
    match subset {
        Some(ids) => ids.into_iter().map(LinkId).collect(),
        None => inst.link_ids(),
    }
}

fn fixed_powers(inst: &Instance, ids: &[LinkId]) -> anyhow::Result<PowerAssignment> {
    let mut p = PowerAssignment::new();
    for &id in ids {
        let power = inst.link(id)?.fixed_power.ok_or_else(|| anyhow!("link {id} has no fixed power"))?;
        p.set(id, power);
    }
    Ok(p)
}

/// Picks the verifier from the shape of the JSON document.
fn verify_document(inst: &Instance, doc: Value) -> anyhow::Result<Verification> {
    Ok(if doc.get("levels").is_some() {
        let run: FlexibleRun = serde_json::from_value(doc).context("parsing flexible run")?;
        verify_flexible(inst, &run)?
    } else if doc.get("slots").is_some() {
        let schedule: Schedule = serde_json::from_value(doc).context("parsing schedule")?;
        verify_schedule(inst, &schedule)?
    } else {
        let sol: Solution = serde_json::from_value(doc).context("parsing solution")?;
        verify_solution(inst, &sol)?
    })
}

fn run(cli: Cli) -> anyhow::Result<Result<(), Failed>> {
    match cli.command {
        Command::Gen(args) => {
            let inst = gen_random(&gen_config(&args)?)?;
            emit(args.out.as_deref(), &inst.to_json()?)?;
        }
        Command::Solve {
            instance,
            algorithm,
            mode,
            out,
        } => {
            let inst = load_instance(&instance)?;
            let ids = inst.link_ids();
            match algorithm {
                SolveAlgorithm::Flexible => {
                    let run = solve_flexible(&inst, default_mode(&inst, mode), &ids)?;
                    emit_json(out.as_deref(), &run)?;
                }
                other => {
                    let alg = match other {
                        SolveAlgorithm::Unlimited => Algorithm::Unlimited,
                        SolveAlgorithm::Fixed => Algorithm::Fixed,
                        _ => Algorithm::Limited,
                    };
                    emit_json(out.as_deref(), &solve(&inst, alg, &ids)?)?;
                }
            }
        }
        Command::Schedule { instance, mode, out } => {
            let inst = load_instance(&instance)?;
            let schedule = solve_latency(&inst, default_mode(&inst, mode), &inst.link_ids())?;
            emit_json(out.as_deref(), &schedule)?;
        }
        Command::Verify {
            instance,
            solution,
            out,
        } => {
            let inst = load_instance(&instance)?;
            let doc: Value = serde_json::from_str(&read(&solution)?).context("parsing solution document")?;
            let check = verify_document(&inst, doc)?;
            emit_json(out.as_deref(), &check)?;
            if !check.ok() {
                for v in &check.violations {
                    eprintln!("violation: {v}");
                }
                return Ok(Err(Failed));
            }
        }
        Command::Oracle {
            instance,
            subset,
            method,
            regime,
            out,
        } => {
            let inst = load_instance(&instance)?;
            let ids = link_subset(&inst, subset);
            match method {
                OracleMethod::FixedPoint => emit_json(out.as_deref(), &check_admissible(&inst, &ids, inst.p_max())?)?,
                OracleMethod::Spectral => emit_json(out.as_deref(), &check_spectral(&inst, &ids)?)?,
                OracleMethod::Brute => {
                    let regime = match regime {
                        BruteRegime::Variable => Regime::Variable,
                        BruteRegime::Capped => Regime::VariableCapped,
                        BruteRegime::Fixed => Regime::Fixed {
                            powers: fixed_powers(&inst, &ids)?,
                        },
                    };
                    emit_json(out.as_deref(), &brute_opt_threshold(&inst, &ids, &regime)?)?;
                }
                OracleMethod::BruteFlexible => {
                    let powers = fixed_powers(&inst, &ids)?;
                    emit_json(out.as_deref(), &brute_opt_flexible_fixed(&inst, &ids, &powers)?)?;
                }
            }
        }
        Command::Experiment {
            name,
            n,
            trials,
            seed,
            alpha,
            pmax,
            area,
            out,
            csv,
        } => {
            let defaults = ExperimentConfig::new(name.into());
            let config = ExperimentConfig {
                n: n.unwrap_or(defaults.n),
                trials: trials.unwrap_or(defaults.trials),
                seed,
                alpha,
                p_max: pmax.unwrap_or(defaults.p_max),
                area,
                ..defaults
            };
            let report = experiment::run(&config)?;
            emit(out.as_deref(), &report.to_json()?)?;
            let csv_path = csv.or_else(|| out.as_ref().map(|p| p.with_extension("csv")));
            if let Some(path) = csv_path {
                let file = fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
                report.write_csv(file)?;
            }
            if !report.passed() {
                for f in &report.failures {
                    eprintln!("failure: {f}");
                }
                return Ok(Err(Failed));
            }
        }
    }
    Ok(Ok(()))
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().with_context(|| format!("{THREADS_ENV}={v:?} is not a count"))?;
        if n > 0 {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
        }
    }
    Ok(())
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
    match configure_threads().and_then(|_| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failed)) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
