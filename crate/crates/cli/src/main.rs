use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use aht_core::anticipation::Endpoint;
use aht_core::behavior::{learn_ensemble, read_traces, write_traces, BehaviorEnsemble, DEFAULT_DEPTH};
use aht_core::data;
use aht_core::harness::{
    collect_human_traces, run_experiment, text_table, write_report, ExpId, ExperimentConfig, HarnessError,
    TRAINING_TRACES,
};
use aht_core::sim::{PlanRequest, SimError, World, WorldConfig};
use aht_core::Goal;

#[derive(Parser)]
#[command(name = "aht", version, about = "Ad hoc teamwork experiments in a simulated household")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write summary.csv, trials.jsonl and table.txt.
    Run(RunArgs),
    /// Plan for one robot from a seeded starting state and print the plan.
    Plan(PlanArgs),
    /// Learn a teammate model from a trace file.
    LearnBm(LearnArgs),
    /// Record scripted-human trace steps for learn-bm.
    CollectTraces(CollectArgs),
}

#[derive(Args)]
struct WorldArgs {
    /// Scenario JSON file (defaults to the shipped house).
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Domain description file (defaults to the shipped house domain).
    #[arg(long)]
    domain: Option<PathBuf>,
}

impl WorldArgs {
    fn load(&self) -> Result<(Arc<WorldConfig>, String), CliError> {
        let scenario = match &self.scenario {
            Some(p) => WorldConfig::load(p)?,
            None => WorldConfig::shipped(),
        };
        let domain = match &self.domain {
            Some(p) => fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
            None => data::HOUSE_DOMAIN.to_string(),
        };
        Ok((Arc::new(scenario), domain))
    }
}

#[derive(Args)]
struct RunArgs {
    /// exp1, scalability, exp2 or exp3.
    #[arg(long)]
    exp: String,
    /// Paired trials (defaults to 30 for exp1 and scalability, 20 otherwise).
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    world: WorldArgs,
    /// mock:FILE, noisy-mock:FILE or url:ENDPOINT; FILE may be `builtin`.
    #[arg(long)]
    llm: Option<String>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Comma-separated variant names; the first is the reference.
    #[arg(long, value_delimiter = ',')]
    variants: Option<Vec<String>>,
    /// Profile of the scripted human.
    #[arg(long, default_value = "default")]
    human: String,
    /// JSON map of stored teammate models (as written by learn-bm).
    #[arg(long)]
    models: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 0.6)]
    theta: f64,
    #[arg(long, default_value_t = 10)]
    window: usize,
    #[arg(long, default_value_t = 40)]
    horizon: usize,
    #[arg(long, default_value_t = 200)]
    step_cap: usize,
}

#[derive(Args)]
struct PlanArgs {
    /// Task label whose goal is planned for.
    #[arg(long)]
    task: String,
    /// Task to prepare for while doing `task`.
    #[arg(long)]
    anticipate: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 40)]
    horizon: usize,
    #[command(flatten)]
    world: WorldArgs,
}

#[derive(Args)]
struct LearnArgs {
    /// Tab-separated trace file.
    #[arg(long)]
    traces: PathBuf,
    /// Model identifier in the output map.
    #[arg(long, default_value = "learned")]
    id: String,
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    depth: usize,
    #[arg(long, default_value = "models.json")]
    out: PathBuf,
}

#[derive(Args)]
struct CollectArgs {
    #[arg(long, default_value = "default")]
    profile: String,
    #[arg(long, default_value_t = TRAINING_TRACES)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    world: WorldArgs,
    #[arg(long, default_value = "traces.tsv")]
    out: PathBuf,
}

#[derive(Debug)]
enum CliError {
    /// Bad arguments or input files; exit code 2.
    Config(String),
    Runtime(String),
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) | SimError::UnknownDayType(_) | SimError::Lang(_) => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(_) | HarnessError::UnknownVariant(_) => CliError::Config(e.to_string()),
            HarnessError::Sim(s) => s.into(),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let exp: ExpId = args.exp.parse()?;
    let (scenario, domain) = args.world.load()?;
    let mut cfg = ExperimentConfig::new(exp);
    cfg.scenario = scenario;
    cfg.domain = domain;
    cfg.seed = args.seed;
    cfg.human_profile = args.human;
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(v) = args.variants {
        cfg.variants = v;
    }
    if let Some(spec) = &args.llm {
        cfg.endpoint = Endpoint::parse(spec).map_err(|e| CliError::Config(e.to_string()))?;
    }
    if let Some(p) = &args.models {
        let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
        let lib: BTreeMap<String, BehaviorEnsemble> =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
        cfg.library = Some(lib);
    }
    cfg.knobs.k = args.k;
    cfg.knobs.theta = args.theta;
    cfg.knobs.window = args.window;
    cfg.knobs.horizon = args.horizon;
    cfg.knobs.step_cap = args.step_cap;
    let results = run_experiment(&cfg)?;
    print!("{}", text_table(&results)?);
    for p in write_report(&results, &args.out)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn plan(args: PlanArgs) -> Result<(), CliError> {
    let (scenario, domain) = args.world.load()?;
    let robot = scenario
        .robots
        .first()
        .cloned()
        .ok_or_else(|| CliError::Config("the scenario has no robots".into()))?;
    let world = World::new(scenario.clone(), &domain, std::slice::from_ref(&robot))?;
    let state = world.initial_state(args.seed)?;
    let current: Goal = scenario.task_goal(&args.task)?;
    let anticipated = args.anticipate.as_deref().map(|t| scenario.task_goal(t)).transpose()?;
    let req = PlanRequest {
        actor: &robot,
        current: Some(current),
        anticipated,
        exo: Default::default(),
        preferred_regions: &[],
        max_horizon: args.horizon,
    };
    println!("start: {:?}", world.snapshot(&state));
    match world.plan_for(&state, &req)? {
        Some(p) => {
            for (i, s) in p.steps.iter().enumerate() {
                let a = s.action.as_ref().map_or("noop".to_string(), ToString::to_string);
                println!("{:3}  {a}", i + 1);
            }
            for (goal, step) in &p.achieves {
                println!("{goal} holds after step {step}");
            }
        }
        None => println!("no plan within {} steps", args.horizon),
    }
    Ok(())
}

fn learn(args: LearnArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.traces)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.traces.display())))?;
    let records = read_traces(&text).map_err(|e| CliError::Config(e.to_string()))?;
    let pairs: Vec<_> = records.into_iter().map(|r| (r.cues, r.observed)).collect();
    let ens = learn_ensemble(&pairs, args.depth).map_err(|e| CliError::Config(e.to_string()))?;
    println!(
        "learned {} families from {} steps; training accuracy {:.3}",
        ens.families.len(),
        pairs.len(),
        ens.accuracy(&pairs)
    );
    let lib = BTreeMap::from([(args.id, ens)]);
    let json = serde_json::to_string_pretty(&lib).map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(&args.out, json).map_err(|e| CliError::Runtime(format!("{}: {e}", args.out.display())))?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn collect(args: CollectArgs) -> Result<(), CliError> {
    let (scenario, domain) = args.world.load()?;
    scenario.profile(&args.profile)?;
    if args.count == 0 {
        return Err(CliError::Config("count must be positive".into()));
    }
    let world = World::new(scenario.clone(), &domain, &scenario.robots[..1.min(scenario.robots.len())])?;
    let traces = collect_human_traces(&world, &args.profile, args.count, args.seed)?;
    fs::write(&args.out, write_traces(&traces)).map_err(|e| CliError::Runtime(format!("{}: {e}", args.out.display())))?;
    println!("wrote {} trace steps to {}", traces.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Plan(a) => plan(a),
        Command::LearnBm(a) => learn(a),
        Command::CollectTraces(a) => collect(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
