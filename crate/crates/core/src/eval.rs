//! Link-prediction evaluation: filtered tail ranking, Hits@k, MRR,
//! Hits@GroupBy3 and diameter nrmse.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityClass, KnowledgeGraph, Partition, Question, Triple};
use crate::literals::{bin_midpoint, BinningScheme};
use crate::models::ModelParams;

/// Anything that can score a triple; higher is more plausible.
pub trait TripleScorer: Sync {
    fn score_triple(&self, h: usize, r: usize, t: usize) -> f64;
}

impl TripleScorer for ModelParams {
    fn score_triple(&self, h: usize, r: usize, t: usize) -> f64 {
        self.score_unchecked(h, r, t)
    }
}

/// How candidates scoring exactly as high as the true tail are counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieMode {
    /// Half of the ties rank above the true tail, rounded up.
    #[default]
    Realistic,
    Optimistic,
    Pessimistic,
}

impl std::str::FromStr for TieMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "realistic" => Ok(TieMode::Realistic),
            "optimistic" => Ok(TieMode::Optimistic),
            "pessimistic" => Ok(TieMode::Pessimistic),
            other => Err(Error::InvalidArgument(format!("unknown tie mode {other:?}"))),
        }
    }
}

/// 1-based rank of `true_score` among `others` (which exclude the true tail).
pub fn rank_from_scores(true_score: f64, others: impl IntoIterator<Item = f64>, tie: TieMode) -> usize {
    let (mut higher, mut equal) = (0usize, 0usize);
    for s in others {
        if s > true_score {
            higher += 1;
        } else if s == true_score {
            equal += 1;
        }
    }
    1 + higher
        + match tie {
            TieMode::Optimistic => 0,
            TieMode::Pessimistic => equal,
            TieMode::Realistic => equal.div_ceil(2),
        }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankOptions {
    pub filtered: bool,
    pub tie: TieMode,
}

impl Default for RankOptions {
    fn default() -> Self {
        RankOptions { filtered: true, tie: TieMode::Realistic }
    }
}

/// Candidates left after filtering: the true tail plus every candidate that is
/// not a known positive for `(h, r)`.
pub fn filter_candidates(
    h: usize,
    r: usize,
    true_tail: usize,
    candidates: &[usize],
    known: &HashSet<Triple>,
    filtered: bool,
) -> Vec<usize> {
    candidates
        .iter()
        .copied()
        .filter(|&c| c == true_tail || !filtered || !known.contains(&Triple::new(h, r, c)))
        .collect()
}

/// Rank of the true tail of `(h, r, ?)` among `candidates`.
pub fn rank_tail(
    scorer: &impl TripleScorer,
    h: usize,
    r: usize,
    true_tail: usize,
    candidates: &[usize],
    known: &HashSet<Triple>,
    opts: RankOptions,
) -> Result<usize> {
    if !candidates.contains(&true_tail) {
        return Err(Error::InvalidArgument(format!("true tail {true_tail} not among candidates")));
    }
    let kept = filter_candidates(h, r, true_tail, candidates, known, opts.filtered);
    let true_score = scorer.score_triple(h, r, true_tail);
    let others = kept.iter().filter(|&&c| c != true_tail).map(|&c| scorer.score_triple(h, r, c));
    Ok(rank_from_scores(true_score, others, opts.tie))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub hits_at_1: f64,
    pub hits_at_k: BTreeMap<usize, f64>,
    pub mrr: f64,
}

pub const DEFAULT_KS: [usize; 3] = [1, 3, 10];

pub fn compute_metrics(ranks: &[usize], ks: &[usize]) -> Result<Metrics> {
    if ranks.is_empty() {
        return Err(Error::InvalidArgument("no ranks to summarise".into()));
    }
    if ranks.contains(&0) {
        return Err(Error::InvalidArgument("ranks are 1-based".into()));
    }
    let n = ranks.len() as f64;
    let hits = |k: usize| ranks.iter().filter(|&&r| r <= k).count() as f64 / n;
    Ok(Metrics {
        hits_at_1: hits(1),
        hits_at_k: ks.iter().map(|&k| (k, hits(k))).collect(),
        mrr: ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n,
    })
}

/// Assignment of carbody entities (by label) to groups.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grouping {
    groups: BTreeMap<String, usize>,
}

impl Grouping {
    /// Sorts labels and chunks them into consecutive groups of three.
    pub fn by_sorted_labels<'a>(labels: impl IntoIterator<Item = &'a str>) -> Self {
        let mut sorted: Vec<&str> = labels.into_iter().collect();
        sorted.sort_unstable();
        sorted.dedup();
        Grouping {
            groups: sorted.iter().enumerate().map(|(i, l)| (l.to_string(), i / 3)).collect(),
        }
    }

    /// Default grouping of all carbody entities in a graph.
    pub fn for_kg(kg: &KnowledgeGraph) -> Self {
        let ids = kg.vocab.entities_of_class(EntityClass::Carbody);
        Grouping::by_sorted_labels(ids.iter().map(|&i| kg.vocab.entity_label(i)))
    }

    pub fn group_of(&self, label: &str) -> Option<usize> {
        self.groups.get(label).copied()
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Reads `label<TAB>group` lines.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file = path.display().to_string();
        let mut groups = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (label, g) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(&file, i + 1, "expected `label<TAB>group`"))?;
            let g = g
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::parse(&file, i + 1, format!("bad group {g:?}")))?;
            groups.insert(label.to_string(), g);
        }
        Ok(Grouping { groups })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let body: String = self.groups.iter().map(|(l, g)| format!("{l}\t{g}\n")).collect();
        std::fs::write(path, body).map_err(|e| Error::io(path, e))
    }
}

/// Fraction of queries whose predicted carbody lies in the true carbody's group.
pub fn hits_groupby3(predicted: &[&str], truth: &[&str], grouping: &Grouping) -> Result<f64> {
    if predicted.len() != truth.len() || predicted.is_empty() {
        return Err(Error::InvalidArgument("predictions and truths must be non-empty and equally long".into()));
    }
    let group = |l: &str| {
        grouping.group_of(l).ok_or_else(|| Error::Data(format!("carbody {l:?} has no group")))
    };
    let mut hits = 0usize;
    for (p, t) in predicted.iter().zip(truth) {
        if group(p)? == group(t)? {
            hits += 1;
        }
    }
    Ok(hits as f64 / truth.len() as f64)
}

/// Root-mean-square diameter error over class midpoints, divided by the mean true diameter.
pub fn nrmse(predicted: &[usize], truth: &[usize], scheme: &BinningScheme) -> Result<f64> {
    if predicted.len() != truth.len() || predicted.is_empty() {
        return Err(Error::InvalidArgument("predictions and truths must be non-empty and equally long".into()));
    }
    let mut se = 0.0;
    let mut sum_true = 0.0;
    for (&p, &t) in predicted.iter().zip(truth) {
        let (dp, dt) = (bin_midpoint(scheme, p)?, bin_midpoint(scheme, t)?);
        se += (dt - dp).powi(2);
        sum_true += dt;
    }
    let n = truth.len() as f64;
    let mean_true = sum_true / n;
    if mean_true == 0.0 {
        return Err(Error::InvalidArgument("mean true diameter is zero".into()));
    }
    Ok((se / n).sqrt() / mean_true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub spot: String,
    pub truth: String,
    pub predicted: String,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingReport {
    pub model: String,
    pub question: Question,
    pub partition: Partition,
    pub hits_at_1: f64,
    pub hits_at_k: BTreeMap<usize, f64>,
    pub mrr: f64,
    pub hits_groupby3: Option<f64>,
    pub nrmse: Option<f64>,
    pub n_queries: usize,
    /// Seconds; absent when timestamps are masked.
    pub time_test: Option<f64>,
    pub ranks: Vec<usize>,
    pub kg_fingerprint: Option<String>,
    pub config: BTreeMap<String, String>,
    #[serde(skip)]
    pub queries: Vec<QueryRecord>,
}

impl RankingReport {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let body = serde_json::to_string_pretty(self).map_err(|e| Error::Data(e.to_string()))?;
        std::fs::write(path, body + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::parse(path.display().to_string(), e.line(), e.to_string()))
    }

    /// Per-query audit file: `spot<TAB>true<TAB>predicted<TAB>rank`.
    pub fn write_queries_tsv(&self, path: &Path) -> Result<()> {
        let mut body = String::from("spot\ttrue\tpredicted\trank\n");
        for q in &self.queries {
            body.push_str(&format!("{}\t{}\t{}\t{}\n", q.spot, q.truth, q.predicted, q.rank));
        }
        std::fs::write(path, body).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub rank: RankOptions,
    pub ks: Vec<usize>,
    /// Rank against every entity instead of the question's entity class.
    pub full_candidates: bool,
    pub partition: Partition,
    pub record_time: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            rank: RankOptions::default(),
            ks: DEFAULT_KS.to_vec(),
            full_candidates: false,
            partition: Partition::Test,
            record_time: true,
        }
    }
}

/// A scored query, ready for ranking: candidate entity ids with their scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredQuery {
    pub head: usize,
    pub truth: usize,
    pub candidates: Vec<(usize, f64)>,
}

impl ScoredQuery {
    pub fn rank(&self, tie: TieMode) -> usize {
        let true_score = self
            .candidates
            .iter()
            .find(|(c, _)| *c == self.truth)
            .map(|(_, s)| *s)
            .expect("truth among candidates");
        let others = self.candidates.iter().filter(|(c, _)| *c != self.truth).map(|(_, s)| *s);
        rank_from_scores(true_score, others, tie)
    }

    /// Highest-scoring candidate; ties go to the earliest candidate.
    pub fn top1(&self) -> usize {
        let mut best = self.candidates[0];
        for &(c, s) in &self.candidates[1..] {
            if s > best.1 {
                best = (c, s);
            }
        }
        best.0
    }
}

fn diameter_bin(label: &str) -> Result<usize> {
    label
        .strip_prefix("dia:")
        .and_then(|b| b.parse().ok())
        .ok_or_else(|| Error::Data(format!("{label:?} is not a diameter class entity")))
}

/// Builds the RankingReport for already-scored queries.
#[allow(clippy::too_many_arguments)]
pub fn report_from_queries(
    model: &str,
    kg: &KnowledgeGraph,
    question: Question,
    queries: &[ScoredQuery],
    typed: &[usize],
    scheme: Option<&BinningScheme>,
    grouping: Option<&Grouping>,
    opts: &EvalOptions,
) -> Result<RankingReport> {
    if queries.is_empty() {
        return Err(Error::Data(format!("no {question} queries in the {} partition", opts.partition.as_str())));
    }
    let typed_set: HashSet<usize> = typed.iter().copied().collect();
    let v = &kg.vocab;
    let mut ranks = Vec::with_capacity(queries.len());
    let mut records = Vec::with_capacity(queries.len());
    let mut pred_ids = Vec::with_capacity(queries.len());
    for q in queries {
        let rank = q.rank(opts.rank.tie);
        // predictions are always drawn from the question's entity class
        let typed_only = ScoredQuery {
            head: q.head,
            truth: q.truth,
            candidates: q.candidates.iter().copied().filter(|(c, _)| typed_set.contains(c)).collect(),
        };
        let pred = typed_only.top1();
        ranks.push(rank);
        pred_ids.push(pred);
        records.push(QueryRecord {
            spot: v.entity_label(q.head).to_string(),
            truth: v.entity_label(q.truth).to_string(),
            predicted: v.entity_label(pred).to_string(),
            rank,
        });
    }
    let m = compute_metrics(&ranks, &opts.ks)?;
    let mut report = RankingReport {
        model: model.to_string(),
        question,
        partition: opts.partition,
        hits_at_1: m.hits_at_1,
        hits_at_k: m.hits_at_k,
        mrr: m.mrr,
        hits_groupby3: None,
        nrmse: None,
        n_queries: queries.len(),
        time_test: None,
        ranks,
        kg_fingerprint: None,
        config: BTreeMap::new(),
        queries: records,
    };
    match question {
        Question::Q1 => {
            let scheme = scheme.ok_or_else(|| Error::InvalidArgument("Q1 needs the diameter scheme".into()))?;
            let pred = pred_ids.iter().map(|&p| diameter_bin(v.entity_label(p))).collect::<Result<Vec<_>>>()?;
            let truth = queries.iter().map(|q| diameter_bin(v.entity_label(q.truth))).collect::<Result<Vec<_>>>()?;
            report.nrmse = Some(nrmse(&pred, &truth, scheme)?);
        }
        Question::Q2 => {
            let grouping = grouping.ok_or_else(|| Error::InvalidArgument("Q2 needs a carbody grouping".into()))?;
            let pred: Vec<&str> = pred_ids.iter().map(|&p| v.entity_label(p)).collect();
            let truth: Vec<&str> = queries.iter().map(|q| v.entity_label(q.truth)).collect();
            report.hits_groupby3 = Some(hits_groupby3(&pred, &truth, grouping)?);
        }
    }
    Ok(report)
}

/// Candidate ids and scored queries for one question.
pub fn score_queries(
    scorer: &impl TripleScorer,
    kg: &KnowledgeGraph,
    question: Question,
    opts: &EvalOptions,
) -> (Vec<usize>, Vec<ScoredQuery>) {
    let typed = kg.vocab.entities_of_class(question.target_class());
    let candidates: Vec<usize> =
        if opts.full_candidates { (0..kg.vocab.n_entities()).collect() } else { typed.clone() };
    let known = kg.all_triples();
    let triples = kg.question_triples(opts.partition, question);
    let queries = triples
        .par_iter()
        .map(|t| {
            let mut cands = candidates.clone();
            if !cands.contains(&t.tail) {
                cands.push(t.tail);
            }
            let kept = filter_candidates(t.head, t.relation, t.tail, &cands, &known, opts.rank.filtered);
            ScoredQuery {
                head: t.head,
                truth: t.tail,
                candidates: kept.iter().map(|&c| (c, scorer.score_triple(t.head, t.relation, c))).collect(),
            }
        })
        .collect();
    (typed, queries)
}

/// Ranks every held-out triple of the question's relation and summarises.
pub fn evaluate(
    model: &str,
    scorer: &impl TripleScorer,
    kg: &KnowledgeGraph,
    question: Question,
    scheme: Option<&BinningScheme>,
    grouping: Option<&Grouping>,
    opts: &EvalOptions,
) -> Result<RankingReport> {
    match question {
        Question::Q1 if scheme.is_none() => {
            return Err(Error::InvalidArgument("Q1 evaluation needs the diameter scheme".into()))
        }
        Question::Q2 if grouping.is_none() => {
            return Err(Error::InvalidArgument("Q2 evaluation needs a carbody grouping".into()))
        }
        _ => {}
    }
    let start = Instant::now();
    let (typed, queries) = score_queries(scorer, kg, question, opts);
    let mut report = report_from_queries(model, kg, question, &queries, &typed, scheme, grouping, opts)?;
    if opts.record_time {
        report.time_test = Some(start.elapsed().as_secs_f64());
    }
    Ok(report)
}

/// Mean reciprocal rank over the held-out triples of `partition`, with
/// candidates typed by each true tail's class. Used for model selection.
pub fn partition_mrr(
    scorer: &impl TripleScorer,
    kg: &KnowledgeGraph,
    partition: Partition,
    question: Option<Question>,
) -> Result<f64> {
    let relations: Vec<usize> = match question {
        Some(q) => kg.vocab.relation_id(q.relation()).into_iter().collect(),
        None => [Question::Q1, Question::Q2]
            .iter()
            .filter_map(|q| kg.vocab.relation_id(q.relation()))
            .collect(),
    };
    let triples: Vec<Triple> =
        kg.partition(partition).into_iter().filter(|t| relations.contains(&t.relation)).collect();
    if triples.is_empty() {
        return Err(Error::Data(format!("no target triples in the {} partition", partition.as_str())));
    }
    let known = kg.all_triples();
    let mut by_class: BTreeMap<EntityClass, Vec<usize>> = BTreeMap::new();
    let ranks: Vec<usize> = triples
        .iter()
        .map(|t| {
            let class = kg.vocab.class_of(t.tail);
            let cands = by_class.entry(class).or_insert_with(|| kg.vocab.entities_of_class(class));
            rank_tail(scorer, t.head, t.relation, t.tail, cands, &known, RankOptions::default())
        })
        .collect::<Result<_>>()?;
    Ok(compute_metrics(&ranks, &[1])?.mrr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{Vocab, BELONGS_TO_CARBODY, HAS_DIAMETER_CLASS};
    use crate::literals::BinStrategy;

    struct Table(Vec<f64>, usize);
    impl TripleScorer for Table {
        fn score_triple(&self, h: usize, _r: usize, t: usize) -> f64 {
            self.0[h * self.1 + t]
        }
    }

    struct Constant;
    impl TripleScorer for Constant {
        fn score_triple(&self, _: usize, _: usize, _: usize) -> f64 {
            0.5
        }
    }

    #[test]
    fn tie_conventions() {
        assert_eq!(rank_from_scores(1.0, [0.5, 0.2], TieMode::Realistic), 1);
        // all |C| = 4 tied: ceil((1 + 4) / 2) = 3
        assert_eq!(rank_from_scores(1.0, [1.0, 1.0, 1.0], TieMode::Realistic), 3);
        assert_eq!(rank_from_scores(1.0, [1.0, 1.0, 1.0], TieMode::Optimistic), 1);
        assert_eq!(rank_from_scores(1.0, [1.0, 1.0, 1.0], TieMode::Pessimistic), 4);
        assert_eq!(rank_from_scores(1.0, [1.0, 1.0], TieMode::Realistic), 2);
    }

    #[test]
    fn metrics_examples() {
        let m = compute_metrics(&[1, 1, 1], &[1, 3]).unwrap();
        assert_eq!((m.hits_at_1, m.mrr), (1.0, 1.0));
        let m = compute_metrics(&[1, 2, 4], &[1, 3]).unwrap();
        assert!((m.hits_at_1 - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.mrr - (1.0 + 0.5 + 0.25) / 3.0).abs() < 1e-15);
        assert!((m.hits_at_k[&3] - 2.0 / 3.0).abs() < 1e-15);
        let m = compute_metrics(&[10], &[1]).unwrap();
        assert_eq!((m.hits_at_1, m.mrr), (0.0, 0.1));
        assert!(compute_metrics(&[], &[1]).is_err());
        assert!(compute_metrics(&[0], &[1]).is_err());
    }

    #[test]
    fn rank_tail_filtering() {
        // entity 0 is the head; candidates 1..=3
        let scorer = Table(vec![0., 0.9, 0.5, 0.7, /* */ 0., 0., 0., 0., 0., 0., 0., 0., 0., 0., 0., 0.], 4);
        let cands = [1, 2, 3];
        let mut known = HashSet::new();
        let opts = RankOptions::default();
        assert_eq!(rank_tail(&scorer, 0, 0, 2, &cands, &known, opts).unwrap(), 3);
        known.insert(Triple::new(0, 0, 1));
        assert_eq!(rank_tail(&scorer, 0, 0, 2, &cands, &known, opts).unwrap(), 2);
        let raw = RankOptions { filtered: false, ..opts };
        assert_eq!(rank_tail(&scorer, 0, 0, 2, &cands, &known, raw).unwrap(), 3);
        assert!(rank_tail(&scorer, 0, 0, 0, &cands, &known, opts).is_err());
        assert_eq!(rank_tail(&scorer, 0, 0, 1, &cands, &known, opts).unwrap(), 1);
    }

    #[test]
    fn groupby3_and_nrmse() {
        let g = Grouping::by_sorted_labels(["c", "a", "b", "d", "e"]);
        assert_eq!(g.group_of("a"), Some(0));
        assert_eq!(g.group_of("c"), Some(0));
        assert_eq!(g.group_of("d"), Some(1));
        assert_eq!(hits_groupby3(&["a", "d"], &["a", "d"], &g).unwrap(), 1.0);
        assert_eq!(hits_groupby3(&["d", "a"], &["a", "e"], &g).unwrap(), 0.0);
        assert_eq!(hits_groupby3(&["b", "a"], &["a", "e"], &g).unwrap(), 0.5);
        assert!(hits_groupby3(&["z"], &["a"], &g).is_err());

        let s = BinningScheme::from_edges("d", BinStrategy::EqualWidth, vec![3.5, 4.5, 5.5]).unwrap();
        assert_eq!(nrmse(&[0, 1], &[0, 1], &s).unwrap(), 0.0);
        // midpoints 4 and 5: true all 4, predicted all 5 → sqrt(1)/4
        assert_eq!(nrmse(&[1, 1, 1], &[0, 0, 0], &s).unwrap(), 0.25);
        let s = BinningScheme::from_edges("d", BinStrategy::EqualWidth, vec![4.6, 5.4, 6.0]).unwrap();
        // midpoints 5.0 and 5.7: single query, |D - D̂| = 0.7, D̄ = 5
        assert!((nrmse(&[1], &[0], &s).unwrap() - 0.7 / 5.0).abs() < 1e-12);
        let s = BinningScheme::from_edges("d", BinStrategy::EqualWidth, vec![-1.0, 1.0, 3.0]).unwrap();
        assert!(nrmse(&[1], &[0], &s).is_err());
    }

    #[test]
    fn nrmse_single_query_example() {
        // |D - D̂| = 0.3 with D̄ = 5 gives 0.06
        let s = BinningScheme::from_edges("d", BinStrategy::EqualWidth, vec![4.85, 5.15, 5.45]).unwrap();
        assert!((nrmse(&[1], &[0], &s).unwrap() - 0.06).abs() < 1e-12);
    }

    fn toy_kg() -> (KnowledgeGraph, BinningScheme) {
        let mut v = Vocab::new();
        let dias: Vec<usize> = (0..4).map(|b| v.entity(&format!("dia:{b}"), EntityClass::DiameterClass)).collect();
        let cars: Vec<usize> = (0..5).map(|b| v.entity(&format!("carbody:C{b}"), EntityClass::Carbody)).collect();
        let spots: Vec<usize> = (0..6).map(|i| v.entity(&format!("spot:S{i}"), EntityClass::Spot)).collect();
        let hd = v.relation(HAS_DIAMETER_CLASS);
        let bc = v.relation(BELONGS_TO_CARBODY);
        let mut triples = Vec::new();
        for (i, &s) in spots.iter().enumerate() {
            let p = if i < 3 { Partition::Train } else { Partition::Test };
            triples.push((Triple::new(s, hd, dias[i % 4]), p));
            triples.push((Triple::new(s, bc, cars[i % 5]), p));
        }
        let scheme = BinningScheme::from_edges("diameter", BinStrategy::EqualWidth, vec![4.0, 4.5, 5.0, 5.5, 6.0]).unwrap();
        (KnowledgeGraph::new(v, triples).unwrap(), scheme)
    }

    struct Oracle(HashSet<Triple>);
    impl TripleScorer for Oracle {
        fn score_triple(&self, h: usize, r: usize, t: usize) -> f64 {
            if self.0.contains(&Triple::new(h, r, t)) {
                1.0
            } else {
                0.0
            }
        }
    }

    #[test]
    fn perfect_scorer() {
        let (kg, scheme) = toy_kg();
        let oracle = Oracle(kg.partition(Partition::Test).into_iter().collect());
        let g = Grouping::for_kg(&kg);
        let opts = EvalOptions::default();
        let r1 = evaluate("oracle", &oracle, &kg, Question::Q1, Some(&scheme), None, &opts).unwrap();
        assert_eq!((r1.hits_at_1, r1.mrr, r1.nrmse), (1.0, 1.0, Some(0.0)));
        assert_eq!(r1.n_queries, 3);
        assert!(r1.time_test.unwrap() >= 0.0);
        let r2 = evaluate("oracle", &oracle, &kg, Question::Q2, None, Some(&g), &opts).unwrap();
        assert_eq!((r2.hits_at_1, r2.hits_groupby3), (1.0, Some(1.0)));
    }

    #[test]
    fn constant_scorer_tie_arithmetic() {
        let (kg, scheme) = toy_kg();
        let opts = EvalOptions::default();
        let r = evaluate("const", &Constant, &kg, Question::Q1, Some(&scheme), None, &opts).unwrap();
        // 4 diameter classes, all tied: every rank is ceil(5/2) = 3
        assert_eq!(r.ranks, vec![3, 3, 3]);
        assert!((r.mrr - 1.0 / 3.0).abs() < 1e-15);
        let g = Grouping::for_kg(&kg);
        let r = evaluate("const", &Constant, &kg, Question::Q2, None, Some(&g), &opts).unwrap();
        assert_eq!(r.ranks, vec![3, 3, 3]);
        assert!(r.hits_groupby3.unwrap() >= r.hits_at_1);
    }

    #[test]
    fn missing_sidecars() {
        let (kg, _) = toy_kg();
        let opts = EvalOptions::default();
        assert!(evaluate("c", &Constant, &kg, Question::Q1, None, None, &opts).is_err());
        assert!(evaluate("c", &Constant, &kg, Question::Q2, None, None, &opts).is_err());
        let valid = EvalOptions { partition: Partition::Valid, ..opts };
        let g = Grouping::for_kg(&kg);
        assert!(evaluate("c", &Constant, &kg, Question::Q2, None, Some(&g), &valid).is_err());
    }

    #[test]
    fn grouping_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("groups.tsv");
        let g = Grouping::by_sorted_labels(["carbody:A", "carbody:B", "carbody:C", "carbody:D"]);
        g.save(&p).unwrap();
        assert_eq!(Grouping::load(&p).unwrap(), g);
        std::fs::write(&p, "carbody:A 1\n").unwrap();
        assert!(Grouping::load(&p).is_err());
    }
}
