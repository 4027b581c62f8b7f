//! Table → knowledge graph conversion and table-first splitting.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    EntityClass, KnowledgeGraph, Partition, Triple, Vocab, BELONGS_TO_CARBODY,
    DIAMETER_CLASS_TYPE, HAS_DIAMETER_CLASS, RDF_TYPE,
};
use crate::error::{Error, Result};
use crate::literals::{
    aggregate_series, discretize, fit_bins, fit_bins_by_width, literal_entity_label, BinStrategy,
    BinningScheme, SchemeSet,
};
use crate::table::{Cell, ColumnKind, TableDataset};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios { train: 0.8, valid: 0.1, test: 0.1 }
    }
}

impl std::str::FromStr for SplitRatios {
    type Err = Error;

    /// Parses `0.8,0.1,0.1`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidArgument(format!("bad ratios {s:?}")))?;
        match parts[..] {
            [train, valid, test] => Ok(SplitRatios { train, valid, test }),
            _ => Err(Error::InvalidArgument(format!("expected three ratios, got {s:?}"))),
        }
    }
}

/// Shuffles rows with a seeded generator and cuts them into train/valid/test.
/// Each part keeps the original relative row order.
pub fn split_table(
    ds: &TableDataset,
    ratios: SplitRatios,
    seed: u64,
) -> Result<(TableDataset, TableDataset, TableDataset)> {
    let SplitRatios { train, valid, test } = ratios;
    if [train, valid, test].iter().any(|r| !(*r >= 0.0)) || (train + valid + test - 1.0).abs() > 1e-9
    {
        return Err(Error::InvalidArgument(format!(
            "ratios must be non-negative and sum to 1, got {train}/{valid}/{test}"
        )));
    }
    let n = ds.n_rows();
    if n < 10 {
        return Err(Error::InvalidArgument(format!("need at least 10 rows to split, got {n}")));
    }
    let n_train = (n as f64 * train).round() as usize;
    let n_valid = (n as f64 * valid).round() as usize;
    let n_test = n.saturating_sub(n_train + n_valid);
    if n_train == 0 || n_valid == 0 || n_test == 0 || n_train + n_valid > n {
        return Err(Error::InvalidArgument(format!(
            "degenerate split {n_train}/{n_valid}/{n_test} of {n} rows"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let part = |range: std::ops::Range<usize>| {
        let mut rows = idx[range].to_vec();
        rows.sort_unstable();
        ds.subset(&rows)
    };
    Ok((
        part(0..n_train),
        part(n_train..n_train + n_valid),
        part(n_train + n_valid..n),
    ))
}

/// Column → relation name overrides; unmapped columns use `has_{column}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationMapping {
    map: BTreeMap<String, String>,
}

impl Default for RelationMapping {
    fn default() -> Self {
        let mut map = BTreeMap::new();
        map.insert("machine".to_string(), "conducted_on_machine".to_string());
        RelationMapping { map }
    }
}

impl RelationMapping {
    pub fn empty() -> Self {
        RelationMapping { map: BTreeMap::new() }
    }

    pub fn insert(&mut self, column: impl Into<String>, relation: impl Into<String>) {
        self.map.insert(column.into(), relation.into());
    }

    pub fn relation_for(&self, column: &str) -> String {
        self.map.get(column).cloned().unwrap_or_else(|| format!("has_{column}"))
    }

    /// Reads `column=relation_name` lines on top of the defaults.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file = path.display().to_string();
        let mut m = RelationMapping::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (col, rel) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(&file, i + 1, "expected `column=relation_name`"))?;
            let (col, rel) = (col.trim(), rel.trim());
            if col.is_empty() || rel.is_empty() || rel.contains(char::is_whitespace) {
                return Err(Error::parse(&file, i + 1, "empty or malformed mapping entry"));
            }
            if super::is_target_relation(rel) || rel == RDF_TYPE {
                return Err(Error::parse(&file, i + 1, format!("relation {rel:?} is reserved")));
            }
            m.insert(col, rel);
        }
        Ok(m)
    }
}

/// Where a literal feature's value comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum FeatureSource {
    Numeric { column: String },
    SeriesStage { column: String, stage: usize },
    SeriesMean { column: String },
}

/// The literal features derived from a table's numeric and sensor columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiteralPlan {
    pub n_stages: usize,
    pub features: Vec<(String, FeatureSource)>,
}

impl LiteralPlan {
    pub fn for_table(ds: &TableDataset, n_stages: usize) -> Self {
        let mut features = Vec::new();
        for c in ds.columns() {
            match c.kind {
                ColumnKind::Numeric => features
                    .push((c.name.clone(), FeatureSource::Numeric { column: c.name.clone() })),
                ColumnKind::SensorSeries => {
                    for s in 0..n_stages {
                        features.push((
                            format!("{}_stage{}", c.name, s + 1),
                            FeatureSource::SeriesStage { column: c.name.clone(), stage: s },
                        ));
                    }
                    features.push((
                        format!("{}_mean", c.name),
                        FeatureSource::SeriesMean { column: c.name.clone() },
                    ));
                }
                _ => {}
            }
        }
        LiteralPlan { n_stages, features }
    }

    /// Feature values of one row; `None` where the cell is missing or too short.
    pub fn row_values(&self, ds: &TableDataset, row: usize) -> Vec<Option<f64>> {
        let mut cache: BTreeMap<&str, Option<(Vec<f64>, f64)>> = BTreeMap::new();
        self.features
            .iter()
            .map(|(_, src)| match src {
                FeatureSource::Numeric { column } => ds.cell(row, column).and_then(Cell::as_real),
                FeatureSource::SeriesStage { column, stage } => {
                    let agg = cache.entry(column).or_insert_with(|| self.aggregate(ds, row, column));
                    agg.as_ref().and_then(|(st, _)| st.get(*stage).copied())
                }
                FeatureSource::SeriesMean { column } => {
                    let agg = cache.entry(column).or_insert_with(|| self.aggregate(ds, row, column));
                    agg.as_ref().map(|(_, m)| *m)
                }
            })
            .collect()
    }

    fn aggregate(&self, ds: &TableDataset, row: usize, column: &str) -> Option<(Vec<f64>, f64)> {
        let series = ds.cell(row, column)?.as_series()?;
        if series.is_empty() {
            return None;
        }
        match aggregate_series(column, series, self.n_stages) {
            Ok(a) => Some((a.stage_means, a.overall_mean)),
            // shorter than the stage count: only the overall mean is usable
            Err(_) => Some((Vec::new(), series.iter().sum::<f64>() / series.len() as f64)),
        }
    }
}

/// How diameter classes are formed from the real-valued diameter target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiameterBinning {
    /// Fixed class width (measurement resolution).
    Width(f64),
    /// Equal-width bins over the observed range.
    Count(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub n_stages: usize,
    pub sensor_bins: usize,
    pub sensor_strategy: BinStrategy,
    pub diameter: DiameterBinning,
    pub drop_literals: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            n_stages: crate::literals::DEFAULT_STAGES,
            sensor_bins: crate::literals::DEFAULT_SENSOR_BINS,
            sensor_strategy: BinStrategy::EqualFrequency,
            diameter: DiameterBinning::Width(0.5),
            drop_literals: false,
        }
    }
}

impl BuildOptions {
    /// Fits literal and diameter schemes on the training rows only.
    /// Features whose training values are all identical are skipped.
    pub fn fit_schemes(
        &self,
        train: &TableDataset,
    ) -> Result<(SchemeSet, Option<BinningScheme>, Vec<String>)> {
        let plan = LiteralPlan::for_table(train, self.n_stages);
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); plan.features.len()];
        for row in 0..train.n_rows() {
            for (f, v) in plan.row_values(train, row).into_iter().enumerate() {
                if let Some(v) = v {
                    columns[f].push(v);
                }
            }
        }
        let mut schemes = SchemeSet::new();
        let mut skipped = Vec::new();
        for ((name, _), values) in plan.features.iter().zip(columns) {
            let mut distinct = values.clone();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            if distinct.len() < 2 {
                skipped.push(name.clone());
                continue;
            }
            let k = match self.sensor_strategy {
                BinStrategy::EqualFrequency => self.sensor_bins.min(distinct.len()),
                BinStrategy::EqualWidth => self.sensor_bins,
            };
            schemes.insert(name.clone(), fit_bins(name, &values, self.sensor_strategy, k)?);
        }
        let diameter = match train.column_of_kind(ColumnKind::TargetDiameter) {
            None => None,
            Some(c) => {
                let name = &train.columns()[c].name;
                let values: Vec<f64> =
                    train.rows().iter().filter_map(|r| r[c].as_real()).collect();
                Some(match self.diameter {
                    DiameterBinning::Width(w) => fit_bins_by_width(name, &values, w)?,
                    DiameterBinning::Count(k) => {
                        fit_bins(name, &values, BinStrategy::EqualWidth, k)?
                    }
                })
            }
        };
        Ok((schemes, diameter, skipped))
    }
}

/// Triples emitted for one table row, split by role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowTriples {
    pub spot: usize,
    pub context: Vec<Triple>,
    pub targets: Vec<Triple>,
}

pub fn diameter_label(bin: usize) -> String {
    format!("dia:{bin}")
}

/// Registers every diameter class entity and its type link.
fn register_diameter_classes(vocab: &mut Vocab, scheme: &BinningScheme) -> Vec<Triple> {
    let ty = vocab.entity(DIAMETER_CLASS_TYPE, EntityClass::Other);
    let rel = vocab.relation(RDF_TYPE);
    vocab.relation(HAS_DIAMETER_CLASS);
    (0..scheme.k())
        .map(|b| {
            let d = vocab.entity(&diameter_label(b), EntityClass::DiameterClass);
            Triple::new(d, rel, ty)
        })
        .collect()
}

/// Converts table rows into triples, growing `vocab`.
///
/// With `flag_unseen`, entities (other than spots) that did not exist before
/// the call are recorded in `unseen` as (label, row id).
pub fn tabular_to_triples(
    ds: &TableDataset,
    schemes: &SchemeSet,
    diameter: Option<&BinningScheme>,
    mapping: &RelationMapping,
    options: &BuildOptions,
    vocab: &mut Vocab,
    mut unseen: Option<&mut Vec<(String, String)>>,
) -> Result<Vec<RowTriples>> {
    let plan = LiteralPlan::for_table(ds, options.n_stages);
    let dia_col = ds.column_of_kind(ColumnKind::TargetDiameter);
    if dia_col.is_some() && diameter.is_none() {
        return Err(Error::InvalidArgument("diameter column present but no diameter scheme".into()));
    }
    let mut out = Vec::with_capacity(ds.n_rows());
    for row in 0..ds.n_rows() {
        let spot = vocab.entity(&format!("spot:{}", ds.row_id(row)), EntityClass::Spot);
        let mut context = Vec::new();
        let mut targets = Vec::new();
        let mut add = |vocab: &mut Vocab, label: String, class: EntityClass| -> usize {
            let before = vocab.n_entities();
            let id = vocab.entity(&label, class);
            if id == before {
                if let Some(u) = unseen.as_deref_mut() {
                    u.push((label, ds.row_id(row).to_string()));
                }
            }
            id
        };
        for (c, spec) in ds.columns().iter().enumerate() {
            let cell = &ds.rows()[row][c];
            match (spec.kind, cell) {
                (ColumnKind::Categorical, Cell::Text(v)) => {
                    let class = EntityClass::for_categorical_column(&spec.name);
                    let e = add(vocab, format!("{}:{v}", spec.name), class);
                    let r = vocab.relation(&mapping.relation_for(&spec.name));
                    context.push(Triple::new(spot, r, e));
                }
                (ColumnKind::TargetCarbody, Cell::Text(v)) => {
                    let e = add(vocab, format!("carbody:{v}"), EntityClass::Carbody);
                    let r = vocab.relation(BELONGS_TO_CARBODY);
                    targets.push(Triple::new(spot, r, e));
                }
                (ColumnKind::TargetDiameter, Cell::Real(x)) => {
                    let scheme = diameter.expect("checked above");
                    let e = vocab.entity(&diameter_label(discretize(*x, scheme)), EntityClass::DiameterClass);
                    let r = vocab.relation(HAS_DIAMETER_CLASS);
                    targets.push(Triple::new(spot, r, e));
                }
                _ => {}
            }
        }
        if !options.drop_literals {
            for ((name, _), value) in plan.features.iter().zip(plan.row_values(ds, row)) {
                let (Some(x), Some(scheme)) = (value, schemes.get(name)) else {
                    continue;
                };
                let label = literal_entity_label(scheme, discretize(x, scheme))?;
                let e = add(vocab, label, EntityClass::Literal);
                let r = vocab.relation(&mapping.relation_for(name));
                context.push(Triple::new(spot, r, e));
            }
        }
        out.push(RowTriples { spot, context, targets });
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub rows: BTreeMap<String, usize>,
    pub triples: BTreeMap<String, usize>,
    pub n_entities: usize,
    pub n_relations: usize,
    pub entity_classes: BTreeMap<String, usize>,
    pub unseen_entities: Vec<UnseenEntity>,
    pub duplicates_removed: usize,
    pub spots_without_context: Vec<String>,
    pub skipped_features: Vec<String>,
    pub leakage_violations: Vec<String>,
    pub pruned_columns: Vec<crate::table::PrunedColumn>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnseenEntity {
    pub label: String,
    pub row_id: String,
    pub partition: Partition,
}

const CONTEXT_NOTE: &str = "context triples (machine, program, literals) of valid/test rows are \
placed in the train partition so held-out spots have an embedding; held-out partitions contain \
only has_diameter_class / belongs_to_carbody triples";

/// Builds the partitioned graph: all triples of train rows go to train;
/// valid/test rows contribute their target triples to their own partition
/// and their context triples to train.
pub fn build_kg(
    train: &TableDataset,
    valid: &TableDataset,
    test: &TableDataset,
    schemes: &SchemeSet,
    diameter: Option<&BinningScheme>,
    mapping: &RelationMapping,
    options: &BuildOptions,
) -> Result<(KnowledgeGraph, BuildReport)> {
    let has_target = train.column_of_kind(ColumnKind::TargetDiameter).is_some()
        || train.column_of_kind(ColumnKind::TargetCarbody).is_some();
    if !has_target {
        return Err(Error::MissingColumn("target_diameter or target_carbody".into()));
    }
    for part in [valid, test] {
        if part.columns() != train.columns() {
            return Err(Error::Schema("split parts disagree on columns".into()));
        }
    }
    let mut vocab = Vocab::new();
    let mut report = BuildReport::default();
    let mut triples: Vec<(Triple, Partition)> = Vec::new();
    if let Some(d) = diameter {
        triples.extend(register_diameter_classes(&mut vocab, d).into_iter().map(|t| (t, Partition::Train)));
    }
    vocab.relation(BELONGS_TO_CARBODY);

    let mut held_out_spots = Vec::new();
    for (part, ds) in [(Partition::Train, train), (Partition::Valid, valid), (Partition::Test, test)] {
        let mut unseen = Vec::new();
        let flag = (part != Partition::Train).then_some(&mut unseen);
        let rows = tabular_to_triples(ds, schemes, diameter, mapping, options, &mut vocab, flag)?;
        for r in rows {
            triples.extend(r.context.iter().map(|&t| (t, Partition::Train)));
            triples.extend(r.targets.iter().map(|&t| (t, part)));
            if part != Partition::Train {
                held_out_spots.push(r.spot);
            }
        }
        report.unseen_entities.extend(
            unseen.into_iter().map(|(label, row_id)| UnseenEntity { label, row_id, partition: part }),
        );
        report.rows.insert(part.as_str().to_string(), ds.n_rows());
    }

    let mut seen = HashSet::new();
    let before = triples.len();
    triples.retain(|&(t, _)| seen.insert(t));
    report.duplicates_removed = before - triples.len();

    let kg = KnowledgeGraph::new(vocab, triples)?;
    let train_heads: HashSet<usize> = kg.partition(Partition::Train).iter().map(|t| t.head).collect();
    report.spots_without_context = held_out_spots
        .iter()
        .filter(|s| !train_heads.contains(s))
        .map(|&s| kg.vocab.entity_label(s).to_string())
        .collect();
    report.leakage_violations = check_leakage(&kg);
    for p in [Partition::Train, Partition::Valid, Partition::Test] {
        report.triples.insert(p.as_str().to_string(), kg.count(p));
    }
    report.n_entities = kg.vocab.n_entities();
    report.n_relations = kg.vocab.n_relations();
    report.entity_classes = kg
        .vocab
        .class_counts()
        .into_iter()
        .map(|(c, n)| (c.as_str().to_string(), n))
        .collect();
    report.notes.push(CONTEXT_NOTE.to_string());
    if !report.leakage_violations.is_empty() {
        return Err(Error::Data(format!(
            "leakage: {} held-out target triples also known in train (first: {})",
            report.leakage_violations.len(),
            report.leakage_violations[0]
        )));
    }
    Ok((kg, report))
}

/// Held-out target triples whose (head, relation) also occurs in train.
pub fn check_leakage(kg: &KnowledgeGraph) -> Vec<String> {
    let train: HashSet<(usize, usize)> = kg
        .partition(Partition::Train)
        .iter()
        .filter(|t| super::is_target_relation(kg.vocab.relation_label(t.relation)))
        .map(|t| (t.head, t.relation))
        .collect();
    kg.triples()
        .iter()
        .filter(|(t, p)| *p != Partition::Train && train.contains(&(t.head, t.relation)))
        .map(|(t, p)| {
            format!(
                "{}\t{}\t{}\t{}",
                kg.vocab.entity_label(t.head),
                kg.vocab.relation_label(t.relation),
                kg.vocab.entity_label(t.tail),
                p.as_str()
            )
        })
        .collect()
}

/// Everything produced by [`build_from_table`].
#[derive(Debug, Clone, PartialEq)]
pub struct BuildOutput {
    pub kg: KnowledgeGraph,
    pub schemes: SchemeSet,
    pub diameter: Option<BinningScheme>,
    pub report: BuildReport,
    pub train: TableDataset,
    pub valid: TableDataset,
    pub test: TableDataset,
}

/// Prunes empty and constant columns, splits the table, fits binning schemes
/// on the training rows and builds the partitioned graph.
pub fn build_from_table(
    ds: &TableDataset,
    ratios: SplitRatios,
    seed: u64,
    mapping: &RelationMapping,
    options: &BuildOptions,
) -> Result<BuildOutput> {
    let (pruned, prune_report) = crate::table::prune_columns(ds);
    let (train, valid, test) = split_table(&pruned, ratios, seed)?;
    let (schemes, diameter, skipped) = options.fit_schemes(&train)?;
    let (kg, mut report) = build_kg(&train, &valid, &test, &schemes, diameter.as_ref(), mapping, options)?;
    report.pruned_columns = prune_report.removed;
    report.skipped_features = skipped;
    if options.drop_literals {
        report.notes.push("literal triples dropped".to_string());
    }
    Ok(BuildOutput { kg, schemes, diameter, report, train, valid, test })
}
