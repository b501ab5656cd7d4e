use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use fcmmsb_core::eval::{evaluate, EvalReport, MeanSd};
use fcmmsb_core::gibbs::{load_checkpoint, save_checkpoint, Run};
use fcmmsb_core::io::{
    load_ground_truth, load_temporal_edgelist, save_ground_truth, save_temporal_edgelist, Config,
    GroundTruth, LoadOptions, LoadedNetwork,
};
use fcmmsb_core::oracle::{chain_prior_report, enumerate_posterior, predict_for, TinyInstance};
use fcmmsb_core::sim::{generate_network, generate_synthetic_benchmark, BenchmarkConfig};
use fcmmsb_core::{gibbs, Error, Partition};

#[derive(Parser)]
#[command(name = "fcmmsb", version, about = "Dynamic mixed-membership blockmodel with evolving communities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset and its ground truth.
    Generate(GenerateArgs),
    /// Run the Gibbs sampler on a dataset.
    Fit(FitArgs),
    /// Predict link probabilities from a checkpoint.
    Predict(PredictArgs),
    /// Hold-out AUC (and ARI against ground truth) over several seeds.
    Evaluate(EvaluateArgs),
    /// Exact posteriors on tiny instances by enumeration.
    EnumerateOracle(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Benchmark {
    #[value(name = "synthetic-3x2")]
    Synthetic3x2,
}

#[derive(Args)]
struct GenerateArgs {
    /// Built-in benchmark; without it the network is simulated from the prior.
    #[arg(long, value_enum)]
    benchmark: Option<Benchmark>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Hyperparameters for prior simulation.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    entities: usize,
    #[arg(long, default_value_t = 3)]
    slices: usize,
    /// Output directory (edges.txt, truth.json).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DataArgs {
    /// Temporal edge list `t i j [w]`.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    directed: Option<bool>,
    #[arg(long)]
    slices: Option<usize>,
    #[arg(long)]
    entities: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    threshold: f64,
}

impl DataArgs {
    fn load(&self) -> Result<LoadedNetwork, CliError> {
        let opts = LoadOptions {
            directed: self.directed,
            n_slices: self.slices,
            n_entities: self.entities,
            binarize_threshold: self.threshold,
        };
        let loaded = load_temporal_edgelist(&self.data, &opts)?;
        for w in &loaded.warnings {
            warn!("{w}");
        }
        Ok(loaded)
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: Option<DataArgs>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Continue from this checkpoint instead of starting afresh.
    #[arg(long, conflicts_with_all = ["data", "config", "seed", "chains"])]
    resume: Option<PathBuf>,
    /// Stop (and checkpoint) after this iteration.
    #[arg(long)]
    stop_after: Option<u64>,
    /// Independent chains, seeded `seed, seed+1, ...`, written to `chain-<c>/`.
    #[arg(long, default_value_t = 1)]
    chains: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Pair list `t i j`; defaults to every slot of the network.
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Entity ids written by `fit`; when given, pairs use these ids.
    #[arg(long)]
    entities: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Ground-truth sidecar from `generate`, enabling ARI.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Output directory (summary.tsv, seeds.tsv, report.json).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[command(subcommand)]
    what: OracleCommand,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Exact prior probability of every partition chain.
    Prior {
        #[arg(long)]
        entities: usize,
        #[arg(long)]
        slices: usize,
        #[arg(long, default_value_t = 1.0)]
        zeta: f64,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
    },
    /// Posterior over chains and predictive probabilities with compatibility
    /// parameters drawn once from the prior.
    Posterior {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

struct CliError {
    code: u8,
    message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Parameter(_) => 2,
            Error::Numeric(_) | Error::UndefinedMetric(_) => 4,
            _ => 3,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn config_error(message: impl Into<String>) -> CliError {
    CliError {
        code: 2,
        message: message.into(),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError {
        code: 3,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError {
        code: 3,
        message: format!("cannot create {}: {e}", path.display()),
    })
}

fn load_config(path: Option<&Path>) -> Result<Config, CliError> {
    match path {
        None => Ok(Config::default()),
        Some(p) => Config::load(p).map_err(|e| match e {
            Error::Io { .. } => config_error(e.to_string()),
            e => e.into(),
        }),
    }
}

fn labels(p: &[Partition]) -> Vec<Vec<usize>> {
    p.iter().map(|p| p.labels().to_vec()).collect()
}

fn generate(args: GenerateArgs) -> Result<(), CliError> {
    create_dir(&args.out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let (network, truth, latents) = match args.benchmark {
        Some(Benchmark::Synthetic3x2) => {
            let b = generate_synthetic_benchmark(&BenchmarkConfig::default(), &mut rng)?;
            let truth = GroundTruth {
                communities: b.communities.clone(),
                groups: b.groups.clone(),
            };
            let latents = json!({ "membership": b.membership });
            (b.network, truth, latents)
        }
        None => {
            let config = load_config(args.config.as_deref())?;
            let hyper = config.hyperparams()?;
            let g = generate_network(&hyper, args.entities, args.slices, &mut rng)?;
            let dominant = (0..args.entities)
                .map(|i| {
                    let row = g.membership.row(0, i);
                    (0..row.len()).fold(0, |best, k| if row[k] > row[best] { k } else { best })
                })
                .collect();
            let truth = GroundTruth {
                communities: g.chain.coarse_partitions().to_vec(),
                groups: dominant,
            };
            let latents = json!({
                "chain": g.chain,
                "membership": g.membership,
                "groups": g.groups,
                "compat": g.compat,
            });
            (g.network, truth, latents)
        }
    };
    save_temporal_edgelist(&network, &args.out.join("edges.txt"))?;
    save_ground_truth(&truth, &args.out.join("truth.json"))?;
    write_file(
        &args.out.join("latents.json"),
        &serde_json::to_string(&latents).map_err(Error::from)?,
    )?;
    info!(
        "wrote {} entities x {} slices to {}",
        network.n_entities(),
        network.n_slices(),
        args.out.display()
    );
    Ok(())
}

fn write_fit_outputs(run: &Run, dir: &Path, entity_ids: Option<&[String]>) -> Result<(), CliError> {
    create_dir(dir)?;
    save_checkpoint(run, &dir.join("checkpoint.json"))?;
    let mut trace = String::new();
    for r in run.summary().trace.iter().filter(|r| r.retained) {
        trace.push_str(&serde_json::to_string(r).map_err(Error::from)?);
        trace.push('\n');
    }
    write_file(&dir.join("trace.jsonl"), &trace)?;
    let net = run.state().network();
    let activeness: Option<Vec<Vec<f64>>> = (0..net.n_slices())
        .map(|t| {
            (0..net.n_entities())
                .map(|i| run.activeness_mean(t, i))
                .collect()
        })
        .collect();
    let summary = json!({
        "iteration": run.state().iteration(),
        "finished": run.is_finished(),
        "config": run.config(),
        "hyperparams": run.state().hyper(),
        "n_retained": run.summary().n_retained,
        "b_mean": run.b_mean(),
        "q_mean": run.q_mean(),
        "activeness": activeness,
        "mode": run.summary().mode.as_ref().map(|m| json!({
            "iteration": m.iteration,
            "log_joint": m.log_joint,
            "communities": labels(&m.coarse),
        })),
    });
    write_file(
        &dir.join("summary.json"),
        &serde_json::to_string_pretty(&summary).map_err(Error::from)?,
    )?;
    if let Some(ids) = entity_ids {
        write_file(&dir.join("entities.txt"), &(ids.join("\n") + "\n"))?;
    }
    Ok(())
}

fn advance(run: &mut Run, stop_after: Option<u64>) -> Result<(), CliError> {
    match stop_after {
        Some(it) => run.run_until(it.min(run.config().n_iters))?,
        None => run.run_to_end()?,
    }
    Ok(())
}

fn fit(args: FitArgs) -> Result<(), CliError> {
    if let Some(path) = &args.resume {
        let mut run = load_checkpoint(path)?;
        info!("resuming at iteration {}", run.state().iteration());
        advance(&mut run, args.stop_after)?;
        return write_fit_outputs(&run, &args.out, None);
    }
    let data = args
        .data
        .as_ref()
        .ok_or_else(|| config_error("fit needs --data or --resume"))?;
    if args.chains == 0 {
        return Err(config_error("--chains must be at least 1"));
    }
    let mut config = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let hyper = config.hyperparams()?;
    let loaded = data.load()?;
    create_dir(&args.out)?;
    write_file(&args.out.join("config.toml"), &config.to_toml_string()?)?;

    let fit_one = |seed: u64, dir: PathBuf| -> Result<(), CliError> {
        let run_config = gibbs::RunConfig {
            seed,
            ..config.run_config()
        };
        let mut run = Run::new(loaded.network.clone(), hyper.clone(), run_config)?;
        advance(&mut run, args.stop_after)?;
        info!("chain seed {seed}: stopped at iteration {}", run.state().iteration());
        write_fit_outputs(&run, &dir, Some(&loaded.entity_ids))
    };
    if args.chains == 1 {
        return fit_one(config.seed, args.out.clone());
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..args.chains)
            .map(|c| {
                let dir = args.out.join(format!("chain-{c}"));
                let fit_one = &fit_one;
                s.spawn(move || fit_one(config.seed + c, dir))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain thread panicked"))
            .collect::<Result<Vec<()>, CliError>>()
    })?;
    Ok(())
}

fn parse_pairs(text: &str, path: &Path, ids: Option<&[String]>) -> Result<Vec<(usize, usize, usize)>, CliError> {
    let data_error = |line: usize, message: String| CliError {
        code: 3,
        message: format!("{}:{line}: {message}", path.display()),
    };
    let mut pairs = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() != 3 {
            return Err(data_error(k + 1, format!("expected `t i j`, got {line:?}")));
        }
        let t = fields[0]
            .parse()
            .map_err(|_| data_error(k + 1, format!("bad slice {:?}", fields[0])))?;
        let entity = |f: &str| -> Result<usize, CliError> {
            match ids {
                Some(ids) => ids
                    .iter()
                    .position(|id| id == f)
                    .ok_or_else(|| data_error(k + 1, format!("unknown entity {f:?}"))),
                None => f
                    .parse()
                    .map_err(|_| data_error(k + 1, format!("bad entity index {f:?}"))),
            }
        };
        pairs.push((t, entity(fields[1])?, entity(fields[2])?));
    }
    Ok(pairs)
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError {
        code: 3,
        message: format!("cannot read {}: {e}", path.display()),
    })
}

fn predict(args: PredictArgs) -> Result<(), CliError> {
    let run = load_checkpoint(&args.checkpoint)?;
    let net = run.state().network();
    let (n, t_slices) = (net.n_entities(), net.n_slices());
    let ids: Option<Vec<String>> = match &args.entities {
        Some(p) => Some(read_text(p)?.lines().map(str::to_string).collect()),
        None => None,
    };
    let pairs = match &args.pairs {
        Some(p) => parse_pairs(&read_text(p)?, p, ids.as_deref())?,
        None => (0..t_slices)
            .flat_map(|t| (0..n).flat_map(move |i| (0..n).map(move |j| (t, i, j))))
            .filter(|&(_, i, j)| i != j || net.self_loops_allowed())
            .collect(),
    };
    let name = |i: usize| match &ids {
        Some(ids) => ids[i].clone(),
        None => i.to_string(),
    };
    let mut out = String::from("t\ti\tj\tprobability\n");
    for (t, i, j) in pairs {
        if t >= t_slices || i >= n || j >= n {
            return Err(CliError {
                code: 3,
                message: format!("pair ({t}, {i}, {j}) is outside the network"),
            });
        }
        let p = run.predictive_mean(t, i, j).ok_or_else(|| CliError {
            code: 4,
            message: "checkpoint has no retained samples yet".into(),
        })?;
        out.push_str(&format!("{t}\t{}\t{}\t{p:.6}\n", name(i), name(j)));
    }
    match &args.out {
        Some(p) => write_file(p, &out),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

fn fmt_opt(v: &Option<MeanSd>) -> String {
    v.as_ref().map_or("NA".into(), |m| m.to_string())
}

fn summary_table(report: &EvalReport) -> String {
    let mut s = String::from("model\tmetric\tslice\tmean ± sd\tn\n");
    for m in &report.summaries {
        let name = m.model.name();
        let n = |v: &Option<MeanSd>| v.as_ref().map_or(0, |m| m.n);
        s.push_str(&format!("{name}\ttest_auc\tall\t{}\t{}\n", fmt_opt(&m.test_auc), n(&m.test_auc)));
        for (t, v) in m.train_auc_per_slice.iter().enumerate() {
            s.push_str(&format!("{name}\ttrain_auc\t{t}\t{}\t{}\n", fmt_opt(v), n(v)));
        }
        for (t, v) in m.test_auc_per_slice.iter().enumerate() {
            s.push_str(&format!("{name}\ttest_auc\t{t}\t{}\t{}\n", fmt_opt(v), n(v)));
        }
        for (t, v) in m.ari_per_slice.iter().flatten().enumerate() {
            s.push_str(&format!("{name}\tari\t{t}\t{}\t{}\n", fmt_opt(v), n(v)));
        }
    }
    s
}

fn seed_table(report: &EvalReport) -> String {
    let f = |v: Option<f64>| v.map_or("NA".into(), |x| format!("{x:.6}"));
    let mut s = String::from("model\tseed\tmetric\tslice\tvalue\n");
    for r in &report.results {
        let name = r.model.name();
        s.push_str(&format!("{name}\t{}\ttest_auc\tall\t{}\n", r.seed, f(r.test_auc)));
        for (t, &v) in r.train_auc_per_slice.iter().enumerate() {
            s.push_str(&format!("{name}\t{}\ttrain_auc\t{t}\t{}\n", r.seed, f(v)));
        }
        for (t, &v) in r.test_auc_per_slice.iter().enumerate() {
            s.push_str(&format!("{name}\t{}\ttest_auc\t{t}\t{}\n", r.seed, f(v)));
        }
        for (t, &v) in r.ari_per_slice.iter().flatten().enumerate() {
            s.push_str(&format!("{name}\t{}\tari\t{t}\t{}\n", r.seed, f(Some(v))));
        }
    }
    s
}

fn run_evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let config = load_config(args.config.as_deref())?;
    let hyper = config.hyperparams()?;
    let loaded = args.data.load()?;
    let truth = match &args.truth {
        Some(p) => Some(load_ground_truth(p)?),
        None => None,
    };
    let report = evaluate(
        &loaded.network,
        &hyper,
        &config.eval_config(),
        truth.as_ref().map(|t| t.communities.as_slice()),
    )?;
    create_dir(&args.out)?;
    let echo = config.to_toml_string()?;
    let commented: String = echo.lines().map(|l| format!("# {l}\n")).collect();
    let summary = summary_table(&report);
    write_file(&args.out.join("summary.tsv"), &(commented.clone() + &summary))?;
    write_file(&args.out.join("seeds.tsv"), &(commented + &seed_table(&report)))?;
    let record = json!({ "config": config, "report": report });
    write_file(
        &args.out.join("report.json"),
        &serde_json::to_string_pretty(&record).map_err(Error::from)?,
    )?;
    print!("{summary}");
    Ok(())
}

fn oracle(args: OracleArgs) -> Result<(), CliError> {
    let value = match args.what {
        OracleCommand::Prior {
            entities,
            slices,
            zeta,
            eta,
        } => {
            if !(zeta > 0.0 && eta > 0.0) {
                return Err(config_error("zeta and eta must be positive"));
            }
            if entities == 0 || slices == 0 || entities > 6 {
                return Err(config_error("need 1..=6 entities and at least one slice"));
            }
            json!({ "chains": chain_prior_report(entities, slices, zeta, eta) })
        }
        OracleCommand::Posterior { data, config, seed } => {
            let config = load_config(config.as_deref())?;
            let hyper = config.hyperparams()?;
            let network = data.load()?.network;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let compat = gibbs::sample_compat_prior(&hyper, &mut rng)?;
            let inst = TinyInstance {
                network,
                hyper,
                compat,
            };
            let configs = enumerate_posterior(&inst, None, None)?;
            let mut chains: Vec<(Vec<Vec<usize>>, f64)> = Vec::new();
            for c in &configs {
                let key = labels(c.chain.coarse_partitions());
                match chains.iter_mut().find(|(k, _)| *k == key) {
                    Some((_, p)) => *p += c.probability,
                    None => chains.push((key, c.probability)),
                }
            }
            let net = &inst.network;
            let n = net.n_entities();
            let mut predictive = Vec::new();
            for t in 0..net.n_slices() {
                for i in 0..n {
                    for j in (0..n).filter(|&j| j != i || net.self_loops_allowed()) {
                        let p: f64 = configs
                            .iter()
                            .map(|c| c.probability * predict_for(&inst, c, t, i, j))
                            .sum();
                        predictive.push(json!({ "t": t, "i": i, "j": j, "probability": p }));
                    }
                }
            }
            json!({
                "compat": inst.compat,
                "coarse_chains": chains
                    .into_iter()
                    .map(|(c, p)| json!({ "coarse": c, "probability": p }))
                    .collect::<Vec<_>>(),
                "predictive": predictive,
            })
        }
    };
    let mut stdout = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, &value).map_err(Error::from)?;
    writeln!(stdout).ok();
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Fit(a) => fit(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::EnumerateOracle(a) => oracle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
