//! Negative sampling, margin ranking loss, Adagrad training loop with
//! early stopping on validation MRR, and the embedding-size grid search.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::partition_mrr;
use crate::kg::{is_target_relation, EntityClass, KnowledgeGraph, Partition, Question, Triple};
use crate::models::{ModelKind, ModelParams, TripleGradient, DIM_GRID};

/// Retries per negative before a known positive is accepted and flagged.
pub const MAX_RETRIES: usize = 64;
const ADAGRAD_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeMode {
    UniformTail,
    TypedTail,
}

impl NegativeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NegativeMode::UniformTail => "uniform_tail",
            NegativeMode::TypedTail => "typed_tail",
        }
    }
}

impl FromStr for NegativeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform_tail" => Ok(NegativeMode::UniformTail),
            "typed_tail" => Ok(NegativeMode::TypedTail),
            other => Err(Error::InvalidArgument(format!("unknown negative mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model: ModelKind,
    pub dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub margin: f64,
    pub n_negatives: usize,
    /// Applied to target relations; context relations always use uniform tails.
    pub negative_mode: NegativeMode,
    pub seed: u64,
    pub patience: usize,
    pub eval_every: usize,
    /// Restricts validation MRR to one question; `None` uses both.
    pub valid_question: Option<Question>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            model: ModelKind::TransE,
            dim: 128,
            epochs: 500,
            batch_size: 256,
            learning_rate: 0.1,
            margin: 1.0,
            n_negatives: 16,
            negative_mode: NegativeMode::TypedTail,
            seed: 0,
            patience: 50,
            eval_every: 5,
            valid_question: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dim", self.dim),
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("n_negatives", self.n_negatives),
            ("patience", self.patience),
            ("eval_every", self.eval_every),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        for (name, v) in [("learning_rate", self.learning_rate), ("margin", self.margin)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be a positive real, got {v}")));
            }
        }
        if matches!(self.model, ModelKind::RotatE | ModelKind::AttH) && self.dim % 2 != 0 {
            return Err(Error::InvalidArgument(format!("{} needs an even dim", self.model)));
        }
        Ok(())
    }

    /// Parses flat `key = value` lines; `#` starts a comment. Unset keys keep defaults.
    pub fn parse(text: &str, file: &str) -> Result<Self> {
        let mut c = TrainConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| Error::parse(file, i + 1, msg);
            let (key, value) = line.split_once('=').ok_or_else(|| perr("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            fn num<T: FromStr>(v: &str) -> std::result::Result<T, String> {
                v.parse().map_err(|_| format!("bad value {v:?}"))
            }
            let r: std::result::Result<(), String> = (|| {
                match key {
                    "model" => c.model = value.parse().map_err(|e: Error| e.to_string())?,
                    "dim" => c.dim = num(value)?,
                    "epochs" => c.epochs = num(value)?,
                    "batch_size" => c.batch_size = num(value)?,
                    "learning_rate" | "lr" => c.learning_rate = num(value)?,
                    "margin" => c.margin = num(value)?,
                    "n_negatives" => c.n_negatives = num(value)?,
                    "negative_mode" => c.negative_mode = value.parse().map_err(|e: Error| e.to_string())?,
                    "seed" => c.seed = num(value)?,
                    "patience" => c.patience = num(value)?,
                    "eval_every" => c.eval_every = num(value)?,
                    "valid_question" => {
                        c.valid_question = match value {
                            "all" => None,
                            q => Some(q.parse().map_err(|e: Error| e.to_string())?),
                        }
                    }
                    other => return Err(format!("unknown key {other:?}")),
                }
                Ok(())
            })();
            r.map_err(perr)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }
}

impl fmt::Display for TrainConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model = {}", self.model)?;
        writeln!(f, "dim = {}", self.dim)?;
        writeln!(f, "epochs = {}", self.epochs)?;
        writeln!(f, "batch_size = {}", self.batch_size)?;
        writeln!(f, "learning_rate = {}", self.learning_rate)?;
        writeln!(f, "margin = {}", self.margin)?;
        writeln!(f, "n_negatives = {}", self.n_negatives)?;
        writeln!(f, "negative_mode = {}", self.negative_mode.as_str())?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "patience = {}", self.patience)?;
        writeln!(f, "eval_every = {}", self.eval_every)?;
        match self.valid_question {
            Some(q) => writeln!(f, "valid_question = {q}"),
            None => writeln!(f, "valid_question = all"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epoch_loss: Vec<f64>,
    /// `(epoch, validation MRR)` at every evaluation point.
    pub valid_mrr: Vec<(usize, f64)>,
    /// Seconds; absent when timestamps are masked.
    pub time_train: Option<f64>,
    pub best_epoch: usize,
    pub best_valid_mrr: f64,
    pub epochs_run: usize,
    pub stopped_early: bool,
    /// Negatives kept after exhausting the retry budget.
    pub flagged_negatives: usize,
    pub config: TrainConfig,
}

impl TrainReport {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let body = serde_json::to_string_pretty(self).map_err(|e| Error::Data(e.to_string()))?;
        std::fs::write(path, body + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::parse(path.display().to_string(), e.line(), e.to_string()))
    }

    pub fn mask_time(&mut self) {
        self.time_train = None;
    }
}

/// A corrupted triple; `flagged` marks a known positive kept after the retry budget ran out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Negative {
    pub triple: Triple,
    pub flagged: bool,
}

/// Tail-corruption sampler with per-class candidate pools and a train-set filter.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    n_entities: usize,
    pools: BTreeMap<EntityClass, Vec<usize>>,
    classes: Vec<EntityClass>,
    known: HashSet<Triple>,
}

impl NegativeSampler {
    pub fn new(kg: &KnowledgeGraph) -> Self {
        let v = &kg.vocab;
        let classes: Vec<EntityClass> = (0..v.n_entities()).map(|i| v.class_of(i)).collect();
        let mut pools: BTreeMap<EntityClass, Vec<usize>> = BTreeMap::new();
        for (i, &c) in classes.iter().enumerate() {
            pools.entry(c).or_default().push(i);
        }
        NegativeSampler { n_entities: v.n_entities(), pools, classes, known: kg.train_set() }
    }

    /// `n` corruptions of `triple`'s tail, never equal to the true tail.
    pub fn sample(
        &self,
        triple: Triple,
        n: usize,
        mode: NegativeMode,
        rng: &mut impl Rng,
    ) -> Result<Vec<Negative>> {
        if n == 0 {
            return Err(Error::InvalidArgument("n_negatives must be positive".into()));
        }
        let pool: Option<&[usize]> = match mode {
            NegativeMode::UniformTail => None,
            NegativeMode::TypedTail => {
                let class = *self
                    .classes
                    .get(triple.tail)
                    .ok_or_else(|| Error::OutOfRange(format!("entity {}", triple.tail)))?;
                Some(self.pools.get(&class).map(Vec::as_slice).unwrap_or(&[]))
            }
        };
        let size = pool.map_or(self.n_entities, <[usize]>::len);
        if size < 2 {
            return Err(Error::Data(format!(
                "no valid corruption for tail {}: candidate set has {size} member(s)",
                triple.tail
            )));
        }
        let draw = |rng: &mut dyn rand::RngCore| loop {
            let i = rng.random_range(0..size);
            let e = pool.map_or(i, |p| p[i]);
            if e != triple.tail {
                return e;
            }
        };
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let mut candidate = Triple { tail: draw(rng), ..triple };
            let mut flagged = true;
            for _ in 0..MAX_RETRIES {
                if !self.known.contains(&candidate) {
                    flagged = false;
                    break;
                }
                candidate.tail = draw(rng);
            }
            if flagged && !self.known.contains(&candidate) {
                flagged = false;
            }
            out.push(Negative { triple: candidate, flagged });
        }
        Ok(out)
    }
}

/// Convenience form of [`NegativeSampler::sample`] for a single triple.
pub fn sample_negatives(
    kg: &KnowledgeGraph,
    triple: Triple,
    n: usize,
    mode: NegativeMode,
    rng: &mut impl Rng,
) -> Result<Vec<Negative>> {
    NegativeSampler::new(kg).sample(triple, n, mode, rng)
}

/// Mean over negatives of `max(0, margin - pos + neg)`.
pub fn ranking_loss(pos_score: f64, neg_scores: &[f64], margin: f64) -> Result<f64> {
    if neg_scores.is_empty() {
        return Err(Error::InvalidArgument("ranking loss needs at least one negative".into()));
    }
    Ok(neg_scores.iter().map(|&n| (margin - pos_score + n).max(0.0)).sum::<f64>() / neg_scores.len() as f64)
}

/// Dense Adagrad accumulators over both parameter tables.
#[derive(Debug, Clone)]
struct Adagrad {
    lr: f64,
    ent: Vec<f64>,
    rel: Vec<f64>,
}

impl Adagrad {
    fn new(params: &ModelParams, lr: f64) -> Self {
        Adagrad { lr, ent: vec![0.0; params.entity_table().len()], rel: vec![0.0; params.relation_table().len()] }
    }

    fn step(acc: &mut [f64], row: &mut [f64], g: &[f64], lr: f64) {
        for ((p, a), &gi) in row.iter_mut().zip(acc.iter_mut()).zip(g) {
            *a += gi * gi;
            *p -= lr * gi / (a.sqrt() + ADAGRAD_EPS);
        }
    }

    fn apply(&mut self, params: &mut ModelParams, ent: &BTreeMap<usize, Vec<f64>>, rel: &BTreeMap<usize, Vec<f64>>) {
        let ew = params.entity_width();
        let rw = params.relation_width();
        for (&i, g) in ent {
            Self::step(&mut self.ent[i * ew..(i + 1) * ew], params.entity_mut(i), g, self.lr);
        }
        for (&r, g) in rel {
            Self::step(&mut self.rel[r * rw..(r + 1) * rw], params.relation_mut(r), g, self.lr);
            params.constrain_relation(r);
        }
    }
}

fn accumulate(map: &mut BTreeMap<usize, Vec<f64>>, key: usize, g: &[f64], w: f64) {
    let slot = map.entry(key).or_insert_with(|| vec![0.0; g.len()]);
    for (s, &x) in slot.iter_mut().zip(g) {
        *s += w * x;
    }
}

/// Trains one model on the train partition and keeps the parameters with the
/// best validation MRR. Deterministic for a fixed config.
pub fn train(kg: &KnowledgeGraph, config: &TrainConfig) -> Result<(ModelParams, TrainReport)> {
    train_with_time(kg, config, true)
}

pub fn train_with_time(kg: &KnowledgeGraph, config: &TrainConfig, record_time: bool) -> Result<(ModelParams, TrainReport)> {
    config.validate()?;
    let mut train_triples = kg.partition(Partition::Train);
    if train_triples.is_empty() {
        return Err(Error::Data("train partition is empty".into()));
    }
    if kg.count(Partition::Valid) == 0 {
        return Err(Error::Data("valid partition is empty".into()));
    }
    let start = Instant::now();
    let v = &kg.vocab;
    let target_rel: Vec<bool> = (0..v.n_relations()).map(|r| is_target_relation(v.relation_label(r))).collect();
    let sampler = NegativeSampler::new(kg);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = ModelParams::init(config.model, v.n_entities(), v.n_relations(), config.dim, config.seed)?;
    let mut opt = Adagrad::new(&params, config.learning_rate);

    let mut best = params.clone();
    let mut best_mrr = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut report = TrainReport {
        epoch_loss: Vec::new(),
        valid_mrr: Vec::new(),
        time_train: None,
        best_epoch: 0,
        best_valid_mrr: 0.0,
        epochs_run: 0,
        stopped_early: false,
        flagged_negatives: 0,
        config: config.clone(),
    };

    let mut g = TripleGradient::zeros(config.model, config.dim);
    let mut negs = Vec::with_capacity(config.n_negatives);
    let mut neg_scores = Vec::with_capacity(config.n_negatives);
    let neg_w = 1.0 / config.n_negatives as f64;

    for epoch in 1..=config.epochs {
        train_triples.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (b, batch) in train_triples.chunks(config.batch_size).enumerate() {
            let mut ent_g: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
            let mut rel_g: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
            let mut batch_loss = 0.0;
            let w = 1.0 / batch.len() as f64;
            for &t in batch {
                let mode = if target_rel[t.relation] { config.negative_mode } else { NegativeMode::UniformTail };
                negs.clear();
                negs.extend(sampler.sample(t, config.n_negatives, mode, &mut rng)?);
                report.flagged_negatives += negs.iter().filter(|n| n.flagged).count();
                let pos = params.score_unchecked(t.head, t.relation, t.tail);
                neg_scores.clear();
                neg_scores.extend(negs.iter().map(|n| params.score_unchecked(n.triple.head, n.triple.relation, n.triple.tail)));
                let loss = ranking_loss(pos, &neg_scores, config.margin)?;
                if !loss.is_finite() {
                    return Err(Error::NonFinite(format!("loss at epoch {epoch}, batch {b}")));
                }
                batch_loss += loss;
                // d loss / d pos = -(active fraction); d loss / d neg_i = 1/n when active
                let mut pos_w = 0.0;
                for (n, &s) in negs.iter().zip(&neg_scores) {
                    if config.margin - pos + s > 0.0 {
                        pos_w -= neg_w;
                        params.gradient_into(n.triple.head, n.triple.relation, n.triple.tail, &mut g);
                        accumulate(&mut ent_g, n.triple.head, &g.head, w * neg_w);
                        accumulate(&mut rel_g, n.triple.relation, &g.relation, w * neg_w);
                        accumulate(&mut ent_g, n.triple.tail, &g.tail, w * neg_w);
                    }
                }
                if pos_w != 0.0 {
                    params.gradient_into(t.head, t.relation, t.tail, &mut g);
                    accumulate(&mut ent_g, t.head, &g.head, w * pos_w);
                    accumulate(&mut rel_g, t.relation, &g.relation, w * pos_w);
                    accumulate(&mut ent_g, t.tail, &g.tail, w * pos_w);
                }
            }
            let grads_finite = ent_g.values().chain(rel_g.values()).flatten().all(|x| x.is_finite());
            if !grads_finite {
                return Err(Error::NonFinite(format!("gradient at epoch {epoch}, batch {b}")));
            }
            opt.apply(&mut params, &ent_g, &rel_g);
            epoch_loss += batch_loss;
        }
        report.epoch_loss.push(epoch_loss / train_triples.len() as f64);
        report.epochs_run = epoch;

        if epoch % config.eval_every == 0 || epoch == config.epochs {
            params.check_finite().map_err(|_| Error::NonFinite(format!("parameters after epoch {epoch}")))?;
            let mrr = partition_mrr(&params, kg, Partition::Valid, config.valid_question)?;
            report.valid_mrr.push((epoch, mrr));
            if mrr > best_mrr {
                best_mrr = mrr;
                best_epoch = epoch;
                best = params.clone();
            } else if epoch - best_epoch >= config.patience {
                report.stopped_early = epoch < config.epochs;
                break;
            }
        }
    }
    report.best_epoch = best_epoch;
    report.best_valid_mrr = best_mrr;
    if record_time {
        report.time_train = Some(start.elapsed().as_secs_f64());
    }
    Ok((best, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub dim: usize,
    pub valid_mrr: f64,
    pub best_epoch: usize,
}

#[derive(Debug, Clone)]
pub struct GridResult {
    pub rows: Vec<GridRow>,
    pub best_config: TrainConfig,
    pub best_params: ModelParams,
    pub best_report: TrainReport,
}

/// Trains one model per dim and keeps the one with the highest validation MRR;
/// ties go to the smaller dim.
pub fn grid_search(kg: &KnowledgeGraph, base: &TrainConfig, dims: &[usize], record_time: bool) -> Result<GridResult> {
    if dims.is_empty() {
        return Err(Error::InvalidArgument("grid search needs at least one dim".into()));
    }
    let mut dims = dims.to_vec();
    dims.sort_unstable();
    dims.dedup();
    let mut rows = Vec::with_capacity(dims.len());
    let mut best: Option<(TrainConfig, ModelParams, TrainReport)> = None;
    for &dim in &dims {
        let config = TrainConfig { dim, ..base.clone() };
        let (params, report) = train_with_time(kg, &config, record_time)?;
        rows.push(GridRow { dim, valid_mrr: report.best_valid_mrr, best_epoch: report.best_epoch });
        let better = best.as_ref().is_none_or(|(_, _, r)| report.best_valid_mrr > r.best_valid_mrr);
        if better {
            best = Some((config, params, report));
        }
    }
    let (best_config, best_params, best_report) = best.expect("non-empty grid");
    Ok(GridResult { rows, best_config, best_params, best_report })
}

/// The default embedding-size grid.
pub fn default_grid() -> Vec<usize> {
    DIM_GRID.to_vec()
}
