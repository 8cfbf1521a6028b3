use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use proppr::eval::{average_precision, read_exclusivity, sample_negatives};
use proppr::grounder::{AlphaPrime, GroundGraph};
use proppr::kb::kb_subset;
use proppr::learner::{ground_examples, initialize, read_examples, train_grounded, TrainReport};
use proppr::pra::{read_paths, translate_paths, TranslationMode};
use proppr::{
    auc_macro, auc_micro, ground, load_facts, mean_avg_precision, parse_goal, parse_program, Error,
    FactIndex, Goal, GroundedExample, GroundingConfig, Hyperparams, NibbleConfig, ParameterVector,
    PowerConfig, Program, Prover, RankedAnswerList, Sym, TrainingExample, Weighting,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "proppr",
    version,
    about = "Ground, train and query annotated logic programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ground every example and write one graph file per example.
    Ground(GroundCmd),
    /// Learn feature weights from labelled examples.
    Train(TrainCmd),
    /// Rank the answers of each query.
    Answer(AnswerCmd),
    /// Score ranked answers against labelled examples.
    Eval(EvalCmd),
    /// Keep the facts over the entities closest to a seed entity.
    Subset(SubsetCmd),
    /// Add negatives drawn from mutually exclusive relations.
    SampleNeg(SampleNegCmd),
    /// Turn weighted relation paths into clauses.
    TranslatePra(TranslateCmd),
}

#[derive(Args)]
struct Inputs {
    /// Program file.
    #[arg(long)]
    rules: PathBuf,
    /// Fact file (tab-separated).
    #[arg(long)]
    facts: PathBuf,
}

#[derive(Args, Clone, Copy)]
struct GroundOpts {
    /// Restart probability.
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Push threshold.
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
    /// Fixed push lower bound; by default it adapts to the graph.
    #[arg(long)]
    alpha_prime: Option<f64>,
    #[arg(long, default_value = "nibble")]
    prover: Prover,
    #[arg(long, default_value = "exp")]
    weighting: Weighting,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

impl GroundOpts {
    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            bail!(Error::InvalidParameter(format!(
                "--alpha must be in (0,1), got {}",
                self.alpha
            )));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            bail!(Error::InvalidParameter(format!(
                "--epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if let Some(a) = self.alpha_prime {
            if !(a > 0.0 && a < 1.0) {
                bail!(Error::InvalidParameter(format!(
                    "--alpha-prime must be in (0,1), got {a}"
                )));
            }
        }
        if self.threads == 0 {
            bail!(Error::InvalidParameter(
                "--threads must be at least 1".into()
            ));
        }
        Ok(())
    }

    fn grounding(&self) -> GroundingConfig {
        GroundingConfig {
            alpha: self.alpha,
            weighting: self.weighting,
        }
    }

    fn prover(&self) -> Prover {
        match self.prover {
            Prover::Power(_) => Prover::Power(PowerConfig::default()),
            Prover::Nibble(_) => Prover::Nibble(NibbleConfig {
                alpha_prime: match self.alpha_prime {
                    Some(a) => AlphaPrime::Fixed(a),
                    None => AlphaPrime::Auto {
                        start: self.alpha,
                        floor: 1e-4,
                    },
                },
                epsilon: self.epsilon,
            }),
        }
    }
}

#[derive(Args)]
struct GroundCmd {
    #[command(flatten)]
    inputs: Inputs,
    /// Labelled examples.
    #[arg(long)]
    examples: PathBuf,
    /// Parameters to ground under (unit weights otherwise).
    #[arg(long)]
    params: Option<PathBuf>,
    /// Output directory for graph files.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    opts: GroundOpts,
}

#[derive(Args)]
struct TrainCmd {
    /// Directory written by `ground`.
    #[arg(long, conflicts_with_all = ["rules", "facts", "examples"])]
    grounded: Option<PathBuf>,
    #[arg(long, requires_all = ["facts", "examples"])]
    rules: Option<PathBuf>,
    #[arg(long)]
    facts: Option<PathBuf>,
    #[arg(long)]
    examples: Option<PathBuf>,
    /// Output parameter file.
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch loss log (TSV); stdout if omitted.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Warm-start parameter file, used without jitter.
    #[arg(long)]
    warm: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    #[arg(long, default_value_t = 0.01)]
    jitter: f64,
    #[arg(long, default_value_t = 0)]
    seed_shuffle: u64,
    #[arg(long, default_value_t = 0)]
    seed_init: u64,
    #[command(flatten)]
    opts: GroundOpts,
}

#[derive(Args)]
struct AnswerCmd {
    #[command(flatten)]
    inputs: Inputs,
    /// Queries, one per line; extra tab-separated columns are ignored.
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    params: Option<PathBuf>,
    /// Output file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    opts: GroundOpts,
}

#[derive(Args)]
struct EvalCmd {
    /// Ranked answers written by `answer`.
    #[arg(long)]
    answers: PathBuf,
    /// Labelled examples.
    #[arg(long)]
    examples: PathBuf,
    /// Also print per-query average precision.
    #[arg(long)]
    per_query: bool,
}

#[derive(Args)]
struct SubsetCmd {
    #[arg(long)]
    facts: PathBuf,
    /// Seed entity.
    #[arg(long)]
    seed: String,
    /// Number of entities to keep.
    #[arg(long)]
    size: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleNegCmd {
    #[arg(long)]
    facts: PathBuf,
    /// Examples whose positives are kept.
    #[arg(long)]
    examples: PathBuf,
    /// Lines `target TAB rel1 TAB rel2 ...`.
    #[arg(long)]
    exclusive: PathBuf,
    /// Negatives per query.
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed_sample: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TranslateCmd {
    /// Weighted paths, `target TAB r1,^r2,... TAB weight`.
    #[arg(long)]
    paths: PathBuf,
    #[arg(long, default_value = "nonrecursive")]
    mode: TranslationMode,
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Ground(c) => cmd_ground(c),
        Command::Train(c) => cmd_train(c),
        Command::Answer(c) => cmd_answer(c),
        Command::Eval(c) => cmd_eval(c),
        Command::Subset(c) => cmd_subset(c),
        Command::SampleNeg(c) => cmd_sample_neg(c),
        Command::TranslatePra(c) => cmd_translate(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        match cause.downcast_ref::<Error>() {
            Some(
                Error::Syntax { .. }
                | Error::UnboundFeatureVariable { .. }
                | Error::ArityMismatch { .. }
                | Error::Format { .. },
            ) => return 2,
            Some(Error::InvalidParameter(_)) => return 1,
            _ => {}
        }
    }
    3
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_program(path: &Path) -> Result<Program> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_program(&text).with_context(|| format!("in {}", path.display()))
}

fn read_facts(path: &Path) -> Result<FactIndex> {
    load_facts(open(path)?).with_context(|| format!("in {}", path.display()))
}

fn read_labelled(path: &Path) -> Result<Vec<TrainingExample>> {
    read_examples(open(path)?).with_context(|| format!("in {}", path.display()))
}

fn read_params(path: Option<&Path>) -> Result<ParameterVector> {
    match path {
        Some(p) => {
            ParameterVector::read_tsv(open(p)?).with_context(|| format!("in {}", p.display()))
        }
        None => Ok(ParameterVector::new()),
    }
}

fn ms(d: std::time::Duration) -> String {
    format!("{:.3}", d.as_secs_f64() * 1e3)
}

const EXAMPLES_FILE: &str = "examples.txt";

fn graph_file(dir: &Path, i: usize) -> PathBuf {
    dir.join(format!("{i:06}.graph"))
}

fn cmd_ground(c: GroundCmd) -> Result<()> {
    c.opts.validate()?;
    let program = read_program(&c.inputs.rules)?;
    let facts = read_facts(&c.inputs.facts)?;
    let examples = read_labelled(&c.examples)?;
    let params = read_params(c.params.as_deref())?;
    fs::create_dir_all(&c.out).with_context(|| format!("cannot create {}", c.out.display()))?;
    let (grounding, prover) = (c.opts.grounding(), c.opts.prover());

    let one = |ex: &TrainingExample| {
        let start = Instant::now();
        let g = ground(&ex.query, &program, &facts, &params, grounding, prover);
        (g, start.elapsed())
    };
    let results: Vec<_> = if c.opts.threads <= 1 || examples.len() < 2 {
        examples.iter().map(one).collect()
    } else {
        let chunk = examples.len().div_ceil(c.opts.threads);
        std::thread::scope(|s| {
            let handles: Vec<_> = examples
                .chunks(chunk)
                .map(|part| s.spawn(move || part.iter().map(one).collect::<Vec<_>>()))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("grounding worker panicked"))
                .collect()
        })
    };

    let mut kept = Vec::new();
    let mut report = output(None)?;
    writeln!(report, "query\tnodes\tedges\tsolutions\ttime_ms\tstatus")?;
    for (ex, (g, elapsed)) in examples.iter().zip(&results) {
        let status = if g.graph.solutions.is_empty() {
            log::warn!("{}: no solutions, skipped", ex.query);
            "no-solutions"
        } else {
            let path = graph_file(&c.out, kept.len());
            let mut w = BufWriter::new(
                File::create(&path).with_context(|| format!("cannot create {}", path.display()))?,
            );
            g.graph.to_ground().write(&mut w)?;
            w.flush()?;
            kept.push(ex);
            "ok"
        };
        writeln!(
            report,
            "{}\t{}\t{}\t{}\t{}\t{status}",
            ex.query,
            g.graph.node_count(),
            g.graph.edge_count(),
            g.graph.solutions.len(),
            ms(*elapsed)
        )?;
    }
    report.flush()?;
    let mut w = BufWriter::new(File::create(c.out.join(EXAMPLES_FILE))?);
    for ex in kept {
        writeln!(w, "{ex}")?;
    }
    w.flush()?;
    Ok(())
}

fn load_grounded(dir: &Path) -> Result<Vec<GroundedExample>> {
    let examples = read_labelled(&dir.join(EXAMPLES_FILE))?;
    examples
        .iter()
        .enumerate()
        .map(|(i, ex)| {
            let path = graph_file(dir, i);
            let g = GroundGraph::read(open(&path)?)
                .with_context(|| format!("in {}", path.display()))?;
            Ok(GroundedExample::new(ex, g))
        })
        .collect()
}

fn cmd_train(c: TrainCmd) -> Result<()> {
    c.opts.validate()?;
    for (name, v) in [("--eta", c.eta), ("--mu", c.mu), ("--jitter", c.jitter)] {
        if v.is_nan() || v < 0.0 {
            bail!(Error::InvalidParameter(format!(
                "{name} must be nonnegative, got {v}"
            )));
        }
    }
    let h = Hyperparams {
        epochs: c.epochs,
        eta: c.eta,
        mu: c.mu,
        threads: c.opts.threads,
        jitter: c.jitter,
        weighting: c.opts.weighting,
        shuffle_seed: c.seed_shuffle,
        init_seed: c.seed_init,
        ..Default::default()
    };
    let warm = c
        .warm
        .as_deref()
        .map(|p| read_params(Some(p)))
        .transpose()?;

    let (grounded, grounding_time, dropped) = if let Some(dir) = &c.grounded {
        let start = Instant::now();
        (load_grounded(dir)?, start.elapsed(), 0)
    } else {
        let (Some(rules), Some(facts), Some(examples)) = (&c.rules, &c.facts, &c.examples) else {
            bail!(Error::InvalidParameter(
                "either --grounded or --rules, --facts and --examples is required".into()
            ));
        };
        let program = read_program(rules)?;
        let facts = read_facts(facts)?;
        let examples = read_labelled(examples)?;
        let base = warm.clone().unwrap_or_default();
        let g = ground_examples(
            &examples,
            &program,
            &facts,
            &base,
            c.opts.grounding(),
            c.opts.prover(),
            h.threads,
        );
        (g.grounded, g.elapsed, g.dropped)
    };

    let features: Vec<Goal> = grounded
        .iter()
        .flat_map(GroundedExample::features)
        .collect();
    let init = initialize(&features, warm.as_ref(), &h);
    let mut report: TrainReport = train_grounded(&grounded, &init, &h);
    report.grounding_time = grounding_time;
    report.dropped = dropped;

    let mut w = BufWriter::new(
        File::create(&c.out).with_context(|| format!("cannot create {}", c.out.display()))?,
    );
    report.params.write_tsv(&mut w)?;
    w.flush()?;

    let mut log = output(c.log.as_deref())?;
    writeln!(log, "epoch\tloss\tskipped\ttime_ms\tthreads")?;
    for (i, e) in report.epochs.iter().enumerate() {
        writeln!(
            log,
            "{}\t{:.6}\t{}\t{}\t{}",
            i + 1,
            e.loss,
            e.skipped,
            ms(e.elapsed),
            h.threads
        )?;
    }
    log.flush()?;
    eprintln!(
        "examples {} dropped {} grounding_ms {} training_ms {} threads {} final_loss {:.6}",
        grounded.len(),
        report.dropped,
        ms(report.grounding_time),
        ms(report.training_time),
        h.threads,
        report.final_loss
    );
    Ok(())
}

/// Queries with the variable names they were written with.
fn read_queries(path: &Path) -> Result<Vec<(Goal, Vec<Sym>)>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let first = t.split('\t').next().unwrap_or(t);
        let parsed = parse_goal(first).map_err(|e| Error::Format {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(parsed);
    }
    Ok(out)
}

fn cmd_answer(c: AnswerCmd) -> Result<()> {
    c.opts.validate()?;
    let program = read_program(&c.inputs.rules)?;
    let facts = read_facts(&c.inputs.facts)?;
    let queries =
        read_queries(&c.queries).with_context(|| format!("in {}", c.queries.display()))?;
    let params = read_params(c.params.as_deref())?;
    let mut out = output(c.out.as_deref())?;
    writeln!(out, "query\trank\tanswer\tscore")?;
    for (q, names) in &queries {
        let shown = q.display_with(names).to_string();
        let start = Instant::now();
        let g = ground(
            q,
            &program,
            &facts,
            &params,
            c.opts.grounding(),
            c.opts.prover(),
        );
        log::info!(
            "{shown}: {} answers in {} ms",
            g.answers.len(),
            ms(start.elapsed())
        );
        if g.answers.is_empty() {
            log::warn!("{shown}: no answers");
        }
        for (rank, (a, score)) in g.answers.iter().enumerate() {
            writeln!(out, "{shown}\t{}\t{a}\t{score:.12e}", rank + 1)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads `query TAB rank TAB answer TAB score` rows, grouped by query.
fn read_answers(path: &Path) -> Result<HashMap<Goal, Vec<(Goal, f64)>>> {
    let mut out: HashMap<Goal, Vec<(Goal, f64)>> = HashMap::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line?;
        if i == 0 && line.starts_with("query\t") {
            continue;
        }
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let bad = |message: String| Error::Format {
            line: i + 1,
            message,
        };
        let fields: Vec<&str> = t.split('\t').collect();
        if fields.len() != 4 {
            bail!(bad(format!("expected 4 fields, found {}", fields.len())));
        }
        let q = parse_goal(fields[0]).map_err(|e| bad(e.to_string()))?.0;
        let a = parse_goal(fields[2]).map_err(|e| bad(e.to_string()))?.0;
        let score: f64 = fields[3]
            .parse()
            .map_err(|_| bad(format!("bad score {:?}", fields[3])))?;
        out.entry(q).or_default().push((a, score));
    }
    Ok(out)
}

fn metric(x: proppr::Result<f64>) -> String {
    match x {
        Ok(v) => format!("{v:.6}"),
        Err(e) => {
            log::warn!("{e}");
            "undefined".into()
        }
    }
}

fn cmd_eval(c: EvalCmd) -> Result<()> {
    let mut answers =
        read_answers(&c.answers).with_context(|| format!("in {}", c.answers.display()))?;
    let examples = read_labelled(&c.examples)?;
    let lists: Vec<RankedAnswerList> = examples
        .iter()
        .map(|ex| {
            let a = answers.remove(&ex.query).unwrap_or_default();
            RankedAnswerList::labelled(ex.query.clone(), a, &ex.positives, &ex.negatives)
        })
        .collect();
    let mut out = output(None)?;
    writeln!(out, "metric\tvalue")?;
    writeln!(out, "queries\t{}", lists.len())?;
    writeln!(out, "map\t{}", metric(mean_avg_precision(&lists)))?;
    writeln!(out, "auc_micro\t{}", metric(auc_micro(&lists)))?;
    writeln!(out, "auc_macro\t{}", metric(auc_macro(&lists)))?;
    if c.per_query {
        writeln!(out)?;
        writeln!(out, "query\tap")?;
        for l in &lists {
            writeln!(out, "{}\t{}", l.query, metric(average_precision(l)))?;
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_subset(c: SubsetCmd) -> Result<()> {
    let facts = read_facts(&c.facts)?;
    let sub = kb_subset(&facts, Sym::intern(&c.seed), c.size, c.alpha)?;
    let mut out = output(c.out.as_deref())?;
    sub.write_tsv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn cmd_sample_neg(c: SampleNegCmd) -> Result<()> {
    let facts = read_facts(&c.facts)?;
    let examples = read_labelled(&c.examples)?;
    let exclusive = read_exclusivity(open(&c.exclusive)?)
        .with_context(|| format!("in {}", c.exclusive.display()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed_sample);
    let mut out = output(c.out.as_deref())?;
    for ex in &examples {
        let rels = exclusive
            .get(ex.query.functor.as_str())
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        let negatives = sample_negatives(&facts, &ex.query, &ex.positives, rels, c.count, &mut rng);
        let labelled = TrainingExample::new(ex.query.clone(), ex.positives.clone(), negatives)?;
        writeln!(out, "{labelled}")?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_translate(c: TranslateCmd) -> Result<()> {
    let paths = read_paths(open(&c.paths)?).with_context(|| format!("in {}", c.paths.display()))?;
    let program = translate_paths(&paths, c.mode, c.top_k)?;
    let mut out = output(c.out.as_deref())?;
    write!(out, "{program}")?;
    out.flush()?;
    Ok(())
}
