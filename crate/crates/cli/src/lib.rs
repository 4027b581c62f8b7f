//! Command-line pipeline: synth → build → train → eval, plus baselines,
//! multi-run comparison tables and the literal ablation.

mod compare;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use weldkg::baselines::{
    kge_mlp_queries, kge_mlp_train, mlp_queries, mlp_train, one_hot_encode, LabelSpace, MlpConfig, OneHotEncoder,
};
use weldkg::eval::{evaluate, report_from_queries, EvalOptions, Grouping, RankOptions, RankingReport, TieMode};
use weldkg::kg::{
    build_from_table, parse_kg, serialize_kg, BuildOptions, DiameterBinning, KnowledgeGraph, Partition, Question,
    RelationMapping, SplitRatios,
};
use weldkg::literals::{read_schemes, write_schemes, BinStrategy, BinningScheme, SchemeSet};
use weldkg::models::{checkpoint, ModelKind, ModelParams};
use weldkg::synth::{generate, SynthConfig};
use weldkg::table::{load_schema, load_table, select_features, write_schema, TableDataset};
use weldkg::train::{default_grid, grid_search, train_with_time, TrainConfig, TrainReport};

pub use compare::{collect_runs, compare_runs, mean_std, Comparison, RunEntry, Stat};

pub const SCHEMES_FILE: &str = "schemes.json";
pub const DIAMETER_FILE: &str = "diameter_scheme.json";
pub const GROUPING_FILE: &str = "grouping.tsv";
pub const BUILD_REPORT_FILE: &str = "build_report.json";
pub const BUILD_OPTIONS_FILE: &str = "build_options.json";
pub const SPLITS_DIR: &str = "splits";
pub const CHECKPOINT_FILE: &str = "best.ckpt";
pub const TRAIN_REPORT_FILE: &str = "train_report.json";
pub const DAGGER: &str = "†";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] weldkg::Error),
}

impl CliError {
    /// 2 usage, 3 data, 4 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_numeric() => 4,
            CliError::Core(_) => 3,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "weldkg", version, about = "Knowledge-graph embeddings for welding quality data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic welding table with planted structure.
    Synth(SynthArgs),
    /// Prune, split, fit bins on train and build the knowledge graph.
    Build(BuildArgs),
    /// Train one model, or sweep embedding sizes with --grid.
    Train(TrainArgs),
    /// Rank held-out triples of one question and write a report.
    Eval(EvalArgs),
    /// Train and evaluate the MLP or KGE-MLP baseline.
    Baseline(BaselineArgs),
    /// Tabulate several run directories as mean ± std.
    Compare(CompareArgs),
    /// Train and evaluate on a graph, optionally with literal triples removed.
    Ablate(AblateArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// `key = value` generator config; defaults when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub rows: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long)]
    pub schema: PathBuf,
    /// `column=relation` lines.
    #[arg(long)]
    pub mapping: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "0.8,0.1,0.1")]
    pub ratios: String,
    /// Comma-separated columns to keep (targets and row id are always kept).
    #[arg(long, value_delimiter = ',')]
    pub select: Option<Vec<String>>,
    #[arg(long, default_value_t = weldkg::literals::DEFAULT_STAGES)]
    pub stages: usize,
    #[arg(long, default_value_t = weldkg::literals::DEFAULT_SENSOR_BINS)]
    pub sensor_bins: usize,
    /// Equal-width instead of equal-frequency sensor bins.
    #[arg(long)]
    pub equal_width: bool,
    #[arg(long, default_value_t = 0.5, conflicts_with = "diameter_bins")]
    pub diameter_width: f64,
    #[arg(long)]
    pub diameter_bins: Option<usize>,
    #[arg(long)]
    pub drop_literals: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub kg: PathBuf,
    /// `key = value` training config; defaults when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub grid: bool,
    /// Comma-separated grid dims.
    #[arg(long, value_delimiter = ',', requires = "grid")]
    pub dims: Option<Vec<usize>>,
    #[arg(long)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PartitionArg {
    Valid,
    Test,
}

impl From<PartitionArg> for Partition {
    fn from(p: PartitionArg) -> Self {
        match p {
            PartitionArg::Valid => Partition::Valid,
            PartitionArg::Test => Partition::Test,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalOpts {
    /// Carbody grouping file (`label<TAB>group`); defaults to the graph's grouping.tsv.
    #[arg(long)]
    pub grouping: Option<PathBuf>,
    /// Evaluation threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long)]
    pub no_timestamp: bool,
    #[arg(long, value_enum, default_value = "test")]
    pub partition: PartitionArg,
    #[arg(long, default_value = "realistic")]
    pub tie: TieMode,
    /// Rank against every entity instead of the question's class.
    #[arg(long)]
    pub full_candidates: bool,
    /// Raw instead of filtered ranking.
    #[arg(long)]
    pub raw: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub kg: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub question: Question,
    #[arg(long)]
    pub out: PathBuf,
    /// Model name in the report; defaults to the checkpoint's model kind.
    #[arg(long)]
    pub label: Option<String>,
    #[command(flatten)]
    pub opts: EvalOpts,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BaselineKind {
    Mlp,
    KgeMlp,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(value_enum)]
    pub kind: BaselineKind,
    #[arg(long)]
    pub kg: PathBuf,
    #[arg(long)]
    pub question: Question,
    /// Run directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Frozen TransE or DistMult checkpoint (kge-mlp only).
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "256")]
    pub hidden: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 16)]
    pub n_negatives: usize,
    /// MLP without literal feature blocks.
    #[arg(long)]
    pub drop_literals: bool,
    #[command(flatten)]
    pub opts: EvalOpts,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub runs: Vec<PathBuf>,
    /// Markdown table; a JSON summary is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub kg: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub drop_literals: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub opts: EvalOpts,
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Build(a) => cmd_build(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Baseline(a) => cmd_baseline(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Ablate(a) => cmd_ablate(a),
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let body = serde_json::to_string_pretty(value).map_err(|e| weldkg::Error::Data(e.to_string()))?;
    std::fs::write(path, body + "\n").map_err(|e| weldkg::Error::io(path, e))?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| weldkg::Error::io(path, e))?;
    Ok(serde_json::from_str(&text)
        .map_err(|e| weldkg::Error::parse(path.display().to_string(), e.line(), e.to_string()))?)
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| weldkg::Error::io(dir, e))?;
    Ok(())
}

pub fn cmd_synth(a: &SynthArgs) -> CliResult<()> {
    let mut config = match &a.config {
        Some(p) => SynthConfig::load(p)?,
        None => SynthConfig::default(),
    };
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if let Some(n) = a.rows {
        config.n_rows = n;
    }
    config.validate()?;
    let out = generate(&config)?;
    out.write(&a.out)?;
    println!("synth: {} rows written to {}", out.table.n_rows(), a.out.display());
    Ok(())
}

pub fn cmd_build(a: &BuildArgs) -> CliResult<()> {
    let schema = load_schema(&a.schema)?;
    let mut table = load_table(&a.csv, &schema)?;
    if let Some(keep) = &a.select {
        let keep: Vec<&str> = keep.iter().map(String::as_str).collect();
        table = select_features(&table, &keep)?;
    }
    let ratios: SplitRatios = a.ratios.parse().map_err(|e: weldkg::Error| CliError::Usage(e.to_string()))?;
    let mapping = match &a.mapping {
        Some(p) => RelationMapping::load(p)?,
        None => RelationMapping::default(),
    };
    let options = BuildOptions {
        n_stages: a.stages,
        sensor_bins: a.sensor_bins,
        sensor_strategy: if a.equal_width { BinStrategy::EqualWidth } else { BinStrategy::EqualFrequency },
        diameter: match a.diameter_bins {
            Some(k) => DiameterBinning::Count(k),
            None => DiameterBinning::Width(a.diameter_width),
        },
        drop_literals: a.drop_literals,
    };
    let built = build_from_table(&table, ratios, a.seed, &mapping, &options)?;
    write_build(&a.out, &built.kg, &built.schemes, built.diameter.as_ref(), &[&built.train, &built.valid, &built.test])?;
    write_json(&a.out.join(BUILD_REPORT_FILE), &built.report)?;
    write_json(&a.out.join(BUILD_OPTIONS_FILE), &options)?;
    println!(
        "build: {} entities, {} relations, {} train / {} valid / {} test triples",
        built.kg.vocab.n_entities(),
        built.kg.vocab.n_relations(),
        built.kg.count(Partition::Train),
        built.kg.count(Partition::Valid),
        built.kg.count(Partition::Test)
    );
    Ok(())
}

fn write_build(
    dir: &Path,
    kg: &KnowledgeGraph,
    schemes: &SchemeSet,
    diameter: Option<&BinningScheme>,
    splits: &[&TableDataset; 3],
) -> CliResult<()> {
    serialize_kg(kg, dir)?;
    write_schemes(&dir.join(SCHEMES_FILE), schemes)?;
    if let Some(d) = diameter {
        write_json(&dir.join(DIAMETER_FILE), d)?;
    }
    Grouping::for_kg(kg).save(&dir.join(GROUPING_FILE))?;
    let sd = dir.join(SPLITS_DIR);
    create_dir(&sd)?;
    write_schema(&sd.join("schema.txt"), splits[0].columns())?;
    for (name, ds) in ["train", "valid", "test"].iter().zip(splits) {
        ds.write_csv(&sd.join(format!("{name}.csv")))?;
    }
    Ok(())
}

/// A built graph directory with its sidecars.
pub struct KgDir {
    pub kg: KnowledgeGraph,
    pub diameter: Option<BinningScheme>,
    pub fingerprint: String,
    dir: PathBuf,
}

impl KgDir {
    pub fn open(dir: &Path) -> CliResult<Self> {
        let kg = parse_kg(dir)?;
        let dpath = dir.join(DIAMETER_FILE);
        let diameter = if dpath.exists() { Some(read_json(&dpath)?) } else { None };
        let mut h = Sha256::new();
        for f in [weldkg::kg::ENTITIES_FILE, weldkg::kg::TRIPLES_FILE] {
            let p = dir.join(f);
            if p.exists() {
                h.update(std::fs::read(&p).map_err(|e| weldkg::Error::io(&p, e))?);
            }
        }
        let fingerprint = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
        Ok(KgDir { kg, diameter, fingerprint, dir: dir.to_path_buf() })
    }

    fn grouping(&self, explicit: Option<&Path>) -> CliResult<Option<Grouping>> {
        let path = explicit.map(Path::to_path_buf).unwrap_or_else(|| self.dir.join(GROUPING_FILE));
        if path.exists() {
            Ok(Some(Grouping::load(&path)?))
        } else if explicit.is_some() {
            Err(weldkg::Error::io(&path, std::io::Error::from(std::io::ErrorKind::NotFound)).into())
        } else {
            Ok(None)
        }
    }

    /// Sidecars a question needs; errors when one is missing.
    fn sidecars(&self, q: Question, grouping: Option<&Path>) -> CliResult<(Option<BinningScheme>, Option<Grouping>)> {
        match q {
            Question::Q1 => match &self.diameter {
                Some(d) => Ok((Some(d.clone()), None)),
                None => Err(CliError::Usage(format!("Q1 needs {} in {}", DIAMETER_FILE, self.dir.display()))),
            },
            Question::Q2 => match self.grouping(grouping)? {
                Some(g) => Ok((None, Some(g))),
                None => Err(CliError::Usage("Q2 needs a carbody grouping (--grouping)".into())),
            },
        }
    }

    fn split(&self, name: &str) -> CliResult<TableDataset> {
        let sd = self.dir.join(SPLITS_DIR);
        let schema = load_schema(&sd.join("schema.txt"))?;
        Ok(load_table(&sd.join(format!("{name}.csv")), &schema)?)
    }

    fn schemes(&self) -> CliResult<SchemeSet> {
        Ok(read_schemes(&self.dir.join(SCHEMES_FILE))?)
    }
}

fn train_config(path: Option<&Path>) -> CliResult<TrainConfig> {
    Ok(match path {
        Some(p) => TrainConfig::load(p)?,
        None => TrainConfig::default(),
    })
}

pub fn cmd_train(a: &TrainArgs) -> CliResult<()> {
    let kgd = KgDir::open(&a.kg)?;
    let mut config = train_config(a.config.as_deref())?;
    if let Some(m) = a.model {
        config.model = m;
    }
    if let Some(d) = a.dim {
        config.dim = d;
    }
    if let Some(e) = a.epochs {
        config.epochs = e;
    }
    if let Some(s) = a.seed {
        config.seed = s;
    }
    config.validate()?;
    create_dir(&a.out)?;
    let record_time = !a.no_timestamp;
    let (params, report) = if a.grid {
        let dims = a.dims.clone().unwrap_or_else(default_grid);
        let res = grid_search(&kgd.kg, &config, &dims, record_time)?;
        let mut table = String::from("dim\tvalid_mrr\tbest_epoch\n");
        for r in &res.rows {
            table.push_str(&format!("{}\t{}\t{}\n", r.dim, r.valid_mrr, r.best_epoch));
        }
        let gp = a.out.join("grid.tsv");
        std::fs::write(&gp, table).map_err(|e| weldkg::Error::io(&gp, e))?;
        println!("grid: selected dim {}", res.best_config.dim);
        (res.best_params, res.best_report)
    } else {
        train_with_time(&kgd.kg, &config, record_time)?
    };
    save_run(&a.out, &params, &report)?;
    println!(
        "train: {} dim {} best validation MRR {:.4} at epoch {}",
        report.config.model, report.config.dim, report.best_valid_mrr, report.best_epoch
    );
    Ok(())
}

fn save_run(out: &Path, params: &ModelParams, report: &TrainReport) -> CliResult<()> {
    checkpoint::save(params, &out.join(CHECKPOINT_FILE))?;
    report.write_json(&out.join(TRAIN_REPORT_FILE))?;
    let cp = out.join("train.conf");
    std::fs::write(&cp, report.config.to_string()).map_err(|e| weldkg::Error::io(&cp, e))?;
    Ok(())
}

fn eval_options(o: &EvalOpts) -> EvalOptions {
    EvalOptions {
        rank: RankOptions { filtered: !o.raw, tie: o.tie },
        full_candidates: o.full_candidates,
        partition: o.partition.into(),
        record_time: !o.no_timestamp,
        ..EvalOptions::default()
    }
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn finish_report(report: &mut RankingReport, kgd: &KgDir, opts: &EvalOptions, extra: &[(&str, String)]) {
    report.kg_fingerprint = Some(kgd.fingerprint.clone());
    let mut config = BTreeMap::new();
    config.insert("filtered".to_string(), opts.rank.filtered.to_string());
    config.insert("full_candidates".to_string(), opts.full_candidates.to_string());
    config.insert("tie".to_string(), format!("{:?}", opts.rank.tie).to_lowercase());
    for (k, v) in extra {
        config.insert(k.to_string(), v.clone());
    }
    report.config = config;
}

fn write_report(report: &RankingReport, out: &Path) -> CliResult<()> {
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    report.write_json(out)?;
    report.write_queries_tsv(&out.with_extension("queries.tsv"))?;
    let extra = match (report.nrmse, report.hits_groupby3) {
        (Some(n), _) => format!(" nrmse {n:.4}"),
        (_, Some(g)) => format!(" Hits@GroupBy3 {g:.4}"),
        _ => String::new(),
    };
    println!(
        "eval: {} {} Hits@1 {:.4} MRR {:.4}{extra} ({} queries)",
        report.model, report.question, report.hits_at_1, report.mrr, report.n_queries
    );
    Ok(())
}

fn eval_params(
    kgd: &KgDir,
    params: &ModelParams,
    label: &str,
    question: Question,
    o: &EvalOpts,
) -> CliResult<RankingReport> {
    let (scheme, grouping) = kgd.sidecars(question, o.grouping.as_deref())?;
    let opts = eval_options(o);
    let mut report = with_threads(o.threads, || {
        evaluate(label, params, &kgd.kg, question, scheme.as_ref(), grouping.as_ref(), &opts)
    })??;
    finish_report(&mut report, kgd, &opts, &[("dim", params.dim.to_string()), ("seed", params.seed.to_string())]);
    Ok(report)
}

pub fn cmd_eval(a: &EvalArgs) -> CliResult<()> {
    let kgd = KgDir::open(&a.kg)?;
    let params = checkpoint::load(&a.checkpoint, kgd.kg.vocab.n_entities(), kgd.kg.vocab.n_relations())?;
    let label = a.label.clone().unwrap_or_else(|| params.kind.to_string());
    let report = eval_params(&kgd, &params, &label, a.question, &a.opts)?;
    write_report(&report, &a.out)
}

/// Report file name used inside run directories.
pub fn report_name(q: Question) -> String {
    format!("eval_{}.json", q.to_string().to_lowercase())
}

pub fn cmd_baseline(a: &BaselineArgs) -> CliResult<()> {
    let kgd = KgDir::open(&a.kg)?;
    create_dir(&a.out)?;
    let config = MlpConfig {
        hidden: a.hidden.clone(),
        epochs: a.epochs,
        batch_size: a.batch_size,
        learning_rate: a.lr,
        seed: a.seed,
    };
    let opts = eval_options(&a.opts);
    let (scheme, grouping) = kgd.sidecars(a.question, a.opts.grouping.as_deref())?;
    let start = Instant::now();
    let (label, mut report, mlp_report) = match a.kind {
        BaselineKind::Mlp => {
            if opts.partition != Partition::Test && opts.partition != Partition::Valid {
                return Err(CliError::Usage("partition must be valid or test".into()));
            }
            let train = kgd.split("train")?;
            let held = kgd.split(if opts.partition == Partition::Valid { "valid" } else { "test" })?;
            let schemes = if a.drop_literals { SchemeSet::new() } else { kgd.schemes()? };
            let options: BuildOptions = read_json(&a.kg.join(BUILD_OPTIONS_FILE))?;
            let encoder = OneHotEncoder::fit(&train, &schemes, options.n_stages);
            let labels = LabelSpace::for_question(&kgd.kg, a.question, kgd.diameter.as_ref())?;
            let (x, y) = one_hot_encode(&train, &encoder, &labels)?;
            let (mlp, rep) = mlp_train(&x, &y, labels.n_classes(), &config)?;
            mlp.save(&a.out.join("mlp.ckpt"), a.seed)?;
            let train_secs = start.elapsed().as_secs_f64();
            let (hx, hy) = one_hot_encode(&held, &encoder, &labels)?;
            let test_start = Instant::now();
            let (typed, queries) = mlp_queries(&kgd.kg, &mlp, &hx, &hy, &held, &labels)?;
            let label = if a.drop_literals { format!("MLP{DAGGER}") } else { "MLP".to_string() };
            let mut r = report_from_queries(&label, &kgd.kg, a.question, &queries, &typed, scheme.as_ref(), grouping.as_ref(), &opts)?;
            if opts.record_time {
                r.time_test = Some(test_start.elapsed().as_secs_f64());
            }
            (label, r, (rep, train_secs))
        }
        BaselineKind::KgeMlp => {
            let ck = a.checkpoint.as_ref().ok_or_else(|| CliError::Usage("kge-mlp needs --checkpoint".into()))?;
            let kge = checkpoint::load(ck, kgd.kg.vocab.n_entities(), kgd.kg.vocab.n_relations())?;
            let (model, rep) = kge_mlp_train(&kgd.kg, &kge, a.question, a.n_negatives, &config)?;
            model.mlp.save(&a.out.join("mlp.ckpt"), a.seed)?;
            let train_secs = start.elapsed().as_secs_f64();
            let test_start = Instant::now();
            let (typed, queries) = with_threads(a.opts.threads, || {
                kge_mlp_queries(&kgd.kg, &kge, &model, opts.partition, opts.rank.filtered)
            })??;
            let label = format!("{}-MLP", kge.kind);
            let mut r = report_from_queries(&label, &kgd.kg, a.question, &queries, &typed, scheme.as_ref(), grouping.as_ref(), &opts)?;
            if opts.record_time {
                r.time_test = Some(test_start.elapsed().as_secs_f64());
            }
            (label, r, (rep, train_secs))
        }
    };
    finish_report(&mut report, &kgd, &opts, &[("seed", a.seed.to_string())]);
    let (rep, secs) = mlp_report;
    let summary = serde_json::json!({
        "model": label,
        "epoch_loss": rep.epoch_loss,
        "config": rep.config,
        "time_train": if opts.record_time { Some(secs) } else { None },
    });
    write_json(&a.out.join(TRAIN_REPORT_FILE), &summary)?;
    write_report(&report, &a.out.join(report_name(a.question)))
}

pub fn cmd_compare(a: &CompareArgs) -> CliResult<()> {
    let entries = collect_runs(&a.runs)?;
    if entries.is_empty() {
        return Err(weldkg::Error::Data("no evaluation reports found in the run directories".into()).into());
    }
    let cmp = compare_runs(&entries);
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    std::fs::write(&a.out, cmp.markdown()).map_err(|e| weldkg::Error::io(&a.out, e))?;
    write_json(&a.out.with_extension("json"), &cmp)?;
    println!("compare: {} reports over {} runs → {}", entries.len(), a.runs.len(), a.out.display());
    Ok(())
}

pub fn cmd_ablate(a: &AblateArgs) -> CliResult<()> {
    let mut kgd = KgDir::open(&a.kg)?;
    let mut config = train_config(a.config.as_deref())?;
    if let Some(s) = a.seed {
        config.seed = s;
    }
    create_dir(&a.out)?;
    if a.drop_literals {
        kgd.kg = kgd.kg.without_literals();
        let kdir = a.out.join("kg");
        serialize_kg(&kgd.kg, &kdir)?;
        let reopened = KgDir::open(&kdir)?;
        kgd.kg = reopened.kg;
        kgd.fingerprint = reopened.fingerprint;
    }
    let (params, report) = train_with_time(&kgd.kg, &config, !a.opts.no_timestamp)?;
    save_run(&a.out, &params, &report)?;
    let label = if a.drop_literals { format!("{}{DAGGER}", params.kind) } else { params.kind.to_string() };
    for q in [Question::Q1, Question::Q2] {
        if kgd.kg.question_triples(a.opts.partition.into(), q).is_empty() {
            continue;
        }
        let r = eval_params(&kgd, &params, &label, q, &a.opts)?;
        write_report(&r, &a.out.join(report_name(q)))?;
    }
    Ok(())
}
