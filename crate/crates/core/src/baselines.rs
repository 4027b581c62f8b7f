//! Classifier baselines: a one-hot MLP over table rows and the KGE-MLP
//! hybrid that classifies (head, tail) embedding pairs.

use std::path::Path;

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::ScoredQuery;
use crate::kg::{diameter_label, KnowledgeGraph, LiteralPlan, Partition, Question, Triple};
use crate::literals::{discretize, BinningScheme, SchemeSet};
use crate::models::checkpoint::{read_arrays, write_arrays, Header, MLP_TAG};
use crate::models::{ModelKind, ModelParams};
use crate::table::{Cell, ColumnKind, TableDataset};
use crate::train::{NegativeMode, NegativeSampler};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Block {
    Categorical { column: String, values: Vec<String> },
    Literal { feature: String, scheme: BinningScheme },
}

impl Block {
    fn width(&self) -> usize {
        match self {
            Block::Categorical { values, .. } => values.len(),
            Block::Literal { scheme, .. } => scheme.k(),
        }
    }
}

/// One-hot dictionary fit on training rows: a block per categorical column
/// and per binned literal feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneHotEncoder {
    n_stages: usize,
    blocks: Vec<Block>,
}

impl OneHotEncoder {
    pub fn fit(train: &TableDataset, schemes: &SchemeSet, n_stages: usize) -> Self {
        let mut blocks = Vec::new();
        for (c, spec) in train.columns().iter().enumerate() {
            if spec.kind != ColumnKind::Categorical {
                continue;
            }
            let mut values: Vec<String> =
                train.rows().iter().filter_map(|r| r[c].as_text().map(str::to_string)).collect();
            values.sort_unstable();
            values.dedup();
            blocks.push(Block::Categorical { column: spec.name.clone(), values });
        }
        for (name, _) in LiteralPlan::for_table(train, n_stages).features {
            if let Some(scheme) = schemes.get(&name) {
                blocks.push(Block::Literal { feature: name, scheme: scheme.clone() });
            }
        }
        OneHotEncoder { n_stages, blocks }
    }

    pub fn width(&self) -> usize {
        self.blocks.iter().map(Block::width).sum()
    }

    /// Encodes every row; missing values and unseen categories give a zero block.
    pub fn encode(&self, ds: &TableDataset) -> Array2<f64> {
        let plan = LiteralPlan::for_table(ds, self.n_stages);
        let mut x = Array2::zeros((ds.n_rows(), self.width()));
        for row in 0..ds.n_rows() {
            let lits = plan.row_values(ds, row);
            let mut offset = 0;
            for b in &self.blocks {
                let hot = match b {
                    Block::Categorical { column, values } => ds
                        .cell(row, column)
                        .and_then(Cell::as_text)
                        .and_then(|v| values.binary_search_by(|p| p.as_str().cmp(v)).ok()),
                    Block::Literal { feature, scheme } => plan
                        .features
                        .iter()
                        .position(|(n, _)| n == feature)
                        .and_then(|i| lits[i])
                        .map(|v| discretize(v, scheme)),
                };
                if let Some(h) = hot {
                    x[[row, offset + h]] = 1.0;
                }
                offset += b.width();
            }
        }
        x
    }
}

/// Class labels of a question, each tied to a graph entity label.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelSpace {
    Diameter(BinningScheme),
    /// Carbody entity labels (`carbody:{value}`).
    Carbody(Vec<String>),
}

impl LabelSpace {
    /// Label space of `question` over a built graph.
    pub fn for_question(kg: &KnowledgeGraph, question: Question, diameter: Option<&BinningScheme>) -> Result<Self> {
        match question {
            Question::Q1 => diameter
                .cloned()
                .map(LabelSpace::Diameter)
                .ok_or_else(|| Error::InvalidArgument("Q1 needs the diameter scheme".into())),
            Question::Q2 => {
                let ids = kg.vocab.entities_of_class(question.target_class());
                Ok(LabelSpace::Carbody(ids.iter().map(|&i| kg.vocab.entity_label(i).to_string()).collect()))
            }
        }
    }

    pub fn n_classes(&self) -> usize {
        match self {
            LabelSpace::Diameter(s) => s.k(),
            LabelSpace::Carbody(v) => v.len(),
        }
    }

    pub fn entity_label(&self, class: usize) -> String {
        match self {
            LabelSpace::Diameter(_) => diameter_label(class),
            LabelSpace::Carbody(v) => v[class].clone(),
        }
    }

    /// Label of every row.
    pub fn labels(&self, ds: &TableDataset) -> Result<Vec<usize>> {
        let kind = match self {
            LabelSpace::Diameter(_) => ColumnKind::TargetDiameter,
            LabelSpace::Carbody(_) => ColumnKind::TargetCarbody,
        };
        let c = ds.column_of_kind(kind).ok_or_else(|| Error::MissingColumn(kind.as_str().into()))?;
        (0..ds.n_rows())
            .map(|row| {
                let missing = || Error::Data(format!("row {} has no {} label", ds.row_id(row), kind.as_str()));
                match self {
                    LabelSpace::Diameter(s) => ds.rows()[row][c].as_real().map(|x| discretize(x, s)).ok_or_else(missing),
                    LabelSpace::Carbody(v) => {
                        let raw = ds.rows()[row][c].as_text().ok_or_else(missing)?;
                        let label = format!("carbody:{raw}");
                        v.iter()
                            .position(|l| *l == label)
                            .ok_or_else(|| Error::Data(format!("carbody {raw:?} outside the label space")))
                    }
                }
            })
            .collect()
    }
}

/// Feature matrix and labels of `ds`.
pub fn one_hot_encode(ds: &TableDataset, encoder: &OneHotEncoder, labels: &LabelSpace) -> Result<(Array2<f64>, Vec<usize>)> {
    Ok((encoder.encode(ds), labels.labels(ds)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig { hidden: vec![256], epochs: 200, batch_size: 64, learning_rate: 0.1, seed: 0 }
    }
}

/// Fully connected network: ReLU hidden layers and a softmax output.
/// Layer `i` maps `a ↦ a·W_i + b_i` with `W_i` of shape (in, out).
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl MlpParams {
    /// He-uniform weights, zero biases.
    pub fn init(sizes: &[usize], seed: u64) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidArgument(format!("bad layer sizes {sizes:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in sizes.windows(2) {
            let bound = (6.0 / w[0] as f64).sqrt();
            weights.push(Array2::from_shape_simple_fn((w[0], w[1]), || rng.random_range(-bound..bound)));
            biases.push(Array1::zeros(w[1]));
        }
        Ok(MlpParams { weights, biases })
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.weights[0].nrows()];
        s.extend(self.weights.iter().map(|w| w.ncols()));
        s
    }

    pub fn n_inputs(&self) -> usize {
        self.weights[0].nrows()
    }

    pub fn n_outputs(&self) -> usize {
        self.weights.last().unwrap().ncols()
    }

    pub fn zeros_like(&self) -> Self {
        MlpParams {
            weights: self.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            biases: self.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
        }
    }

    /// All parameters, layer by layer, weights before biases.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn from_flat(sizes: &[usize], flat: &[f64]) -> Result<Self> {
        let need: usize = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        if sizes.len() < 2 || flat.len() != need {
            return Err(Error::InvalidArgument(format!("{} values do not fit layer sizes {sizes:?}", flat.len())));
        }
        let mut pos = 0;
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in sizes.windows(2) {
            let n = w[0] * w[1];
            weights.push(Array2::from_shape_vec((w[0], w[1]), flat[pos..pos + n].to_vec()).unwrap());
            pos += n;
            biases.push(Array1::from(flat[pos..pos + w[1]].to_vec()));
            pos += w[1];
        }
        Ok(MlpParams { weights, biases })
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.n_inputs() {
            return Err(Error::InvalidArgument(format!(
                "input width {} does not match the network's {}",
                x.ncols(),
                self.n_inputs()
            )));
        }
        Ok(())
    }

    /// Pre-activations of every layer.
    fn forward(&self, x: &ArrayView2<f64>) -> Vec<Array2<f64>> {
        let mut zs: Vec<Array2<f64>> = Vec::with_capacity(self.weights.len());
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let z = if i == 0 { x.dot(w) } else { zs[i - 1].mapv(relu).dot(w) } + b;
            zs.push(z);
        }
        zs
    }

    pub fn save(&self, path: &Path, seed: u64) -> Result<()> {
        let sizes: Vec<f64> = self.sizes().iter().map(|&s| s as f64).collect();
        let header = Header {
            kind: MLP_TAG,
            dim: self.weights.len() as u64,
            n_entities: self.n_inputs() as u64,
            n_relations: self.n_outputs() as u64,
            seed,
        };
        let flat = self.to_flat();
        write_arrays(path, header, &[&sizes, &flat])
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (h, arrays) = read_arrays(path)?;
        let file = path.display().to_string();
        if h.kind != MLP_TAG || arrays.len() != 2 {
            return Err(Error::parse(&file, 0, "not an MLP checkpoint"));
        }
        let sizes: Vec<usize> = arrays[0].iter().map(|&s| s as usize).collect();
        Self::from_flat(&sizes, &arrays[1]).map_err(|e| Error::parse(&file, 0, e.to_string()))
    }
}

fn relu(z: f64) -> f64 {
    z.max(0.0)
}

fn softmax_rows(z: &Array2<f64>) -> Array2<f64> {
    let mut p = z.clone();
    for mut row in p.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let s = row.sum();
        row /= s;
    }
    p
}

/// Class probabilities, one row per input row.
pub fn mlp_predict(params: &MlpParams, x: &Array2<f64>) -> Result<Array2<f64>> {
    params.check_input(&x.view())?;
    Ok(softmax_rows(params.forward(&x.view()).last().unwrap()))
}

fn check_labels(params: &MlpParams, x: &ArrayView2<f64>, y: &[usize]) -> Result<()> {
    params.check_input(x)?;
    if x.nrows() == 0 || x.nrows() != y.len() {
        return Err(Error::InvalidArgument("inputs and labels must be non-empty and equally long".into()));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= params.n_outputs()) {
        return Err(Error::OutOfRange(format!("label {bad} with {} classes", params.n_outputs())));
    }
    Ok(())
}

/// Mean cross-entropy of the labels.
pub fn mlp_loss(params: &MlpParams, x: &Array2<f64>, y: &[usize]) -> Result<f64> {
    check_labels(params, &x.view(), y)?;
    let p = softmax_rows(params.forward(&x.view()).last().unwrap());
    Ok(-y.iter().enumerate().map(|(i, &c)| p[[i, c]].max(f64::MIN_POSITIVE).ln()).sum::<f64>() / y.len() as f64)
}

fn backward(params: &MlpParams, x: &ArrayView2<f64>, y: &[usize]) -> (f64, MlpParams) {
    let zs = params.forward(x);
    let p = softmax_rows(zs.last().unwrap());
    let n = y.len() as f64;
    let loss = -y.iter().enumerate().map(|(i, &c)| p[[i, c]].max(f64::MIN_POSITIVE).ln()).sum::<f64>() / n;
    let mut dz = p;
    for (i, &c) in y.iter().enumerate() {
        dz[[i, c]] -= 1.0;
    }
    dz /= n;
    let mut grads = params.zeros_like();
    for l in (0..params.weights.len()).rev() {
        let a_prev = if l == 0 { x.to_owned() } else { zs[l - 1].mapv(relu) };
        grads.weights[l] = a_prev.t().dot(&dz);
        grads.biases[l] = dz.sum_axis(Axis(0));
        if l > 0 {
            let mut da = dz.dot(&params.weights[l].t());
            da.zip_mut_with(&zs[l - 1], |d, &z| {
                if z <= 0.0 {
                    *d = 0.0
                }
            });
            dz = da;
        }
    }
    (loss, grads)
}

/// Mean cross-entropy and its gradient with respect to every parameter.
pub fn mlp_gradient(params: &MlpParams, x: &Array2<f64>, y: &[usize]) -> Result<(f64, MlpParams)> {
    check_labels(params, &x.view(), y)?;
    Ok(backward(params, &x.view(), y))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpReport {
    pub epoch_loss: Vec<f64>,
    pub config: MlpConfig,
}

/// Mini-batch gradient descent on the mean cross-entropy.
pub fn mlp_train(x: &Array2<f64>, y: &[usize], n_classes: usize, config: &MlpConfig) -> Result<(MlpParams, MlpReport)> {
    if config.epochs == 0 || config.batch_size == 0 || !(config.learning_rate > 0.0) {
        return Err(Error::InvalidArgument("epochs, batch_size and learning_rate must be positive".into()));
    }
    let mut sizes = vec![x.ncols()];
    sizes.extend(&config.hidden);
    sizes.push(n_classes);
    let mut params = MlpParams::init(&sizes, config.seed)?;
    check_labels(&params, &x.view(), y)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);
    let mut order: Vec<usize> = (0..y.len()).collect();
    let mut report = MlpReport { epoch_loss: Vec::with_capacity(config.epochs), config: config.clone() };
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let xb = x.select(Axis(0), batch);
            let yb: Vec<usize> = batch.iter().map(|&i| y[i]).collect();
            let (loss, g) = backward(&params, &xb.view(), &yb);
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("MLP loss at epoch {epoch}, batch {b}")));
            }
            total += loss * batch.len() as f64;
            for (w, gw) in params.weights.iter_mut().zip(&g.weights) {
                w.scaled_add(-config.learning_rate, gw);
            }
            for (bias, gb) in params.biases.iter_mut().zip(&g.biases) {
                bias.scaled_add(-config.learning_rate, gb);
            }
        }
        report.epoch_loss.push(total / y.len() as f64);
    }
    Ok((params, report))
}

/// Scored queries for the MLP: one per row, candidates are all classes.
pub fn mlp_queries(
    kg: &KnowledgeGraph,
    params: &MlpParams,
    x: &Array2<f64>,
    y: &[usize],
    ds: &TableDataset,
    labels: &LabelSpace,
) -> Result<(Vec<usize>, Vec<ScoredQuery>)> {
    let probs = mlp_predict(params, x)?;
    let ent = |label: &str| {
        kg.vocab.entity_id(label).ok_or_else(|| Error::Data(format!("entity {label:?} not in the graph")))
    };
    let class_ids: Vec<usize> =
        (0..labels.n_classes()).map(|c| ent(&labels.entity_label(c))).collect::<Result<_>>()?;
    let mut queries = Vec::with_capacity(y.len());
    for (row, &truth) in y.iter().enumerate() {
        queries.push(ScoredQuery {
            head: ent(&format!("spot:{}", ds.row_id(row)))?,
            truth: class_ids[truth],
            candidates: class_ids.iter().enumerate().map(|(c, &e)| (e, probs[[row, c]])).collect(),
        });
    }
    Ok((class_ids, queries))
}

/// MLP over concatenated (head, tail) embeddings of a frozen KGE model,
/// predicting whether a target triple holds.
#[derive(Debug, Clone, PartialEq)]
pub struct KgeMlp {
    pub mlp: MlpParams,
    pub question: Question,
}

fn pair_features(kge: &ModelParams, pairs: &[(usize, usize)]) -> Array2<f64> {
    let d = kge.entity_width();
    let mut x = Array2::zeros((pairs.len(), 2 * d));
    for (i, &(h, t)) in pairs.iter().enumerate() {
        x.slice_mut(s![i, ..d]).assign(&ndarray::ArrayView1::from(kge.entity(h)));
        x.slice_mut(s![i, d..]).assign(&ndarray::ArrayView1::from(kge.entity(t)));
    }
    x
}

impl KgeMlp {
    /// Probability that each (head, tail) pair is a true target triple.
    pub fn probabilities(&self, kge: &ModelParams, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
        if 2 * kge.entity_width() != self.mlp.n_inputs() {
            return Err(Error::InvalidArgument(format!(
                "embedding width {} does not match the classifier input {}",
                2 * kge.entity_width(),
                self.mlp.n_inputs()
            )));
        }
        let p = mlp_predict(&self.mlp, &pair_features(kge, pairs))?;
        Ok(p.column(1).to_vec())
    }
}

/// Trains the classifier on the question's train triples and typed negative corruptions.
pub fn kge_mlp_train(
    kg: &KnowledgeGraph,
    kge: &ModelParams,
    question: Question,
    n_negatives: usize,
    config: &MlpConfig,
) -> Result<(KgeMlp, MlpReport)> {
    if !matches!(kge.kind, ModelKind::TransE | ModelKind::DistMult) {
        return Err(Error::InvalidArgument(format!("KGE-MLP supports TransE and DistMult, not {}", kge.kind)));
    }
    if kge.n_entities() != kg.vocab.n_entities() {
        return Err(Error::InvalidArgument("embedding table does not match the graph".into()));
    }
    let positives = kg.question_triples(Partition::Train, question);
    if positives.is_empty() {
        return Err(Error::Data(format!("no {question} triples in the train partition")));
    }
    let sampler = NegativeSampler::new(kg);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut pairs = Vec::new();
    let mut y = Vec::new();
    for t in positives {
        pairs.push((t.head, t.tail));
        y.push(1);
        for n in sampler.sample(t, n_negatives, NegativeMode::TypedTail, &mut rng)? {
            pairs.push((n.triple.head, n.triple.tail));
            y.push(0);
        }
    }
    let (mlp, report) = mlp_train(&pair_features(kge, &pairs), &y, 2, config)?;
    Ok((KgeMlp { mlp, question }, report))
}

/// Scored queries for the hybrid over the held-out triples of `partition`.
pub fn kge_mlp_queries(
    kg: &KnowledgeGraph,
    kge: &ModelParams,
    model: &KgeMlp,
    partition: Partition,
    filtered: bool,
) -> Result<(Vec<usize>, Vec<ScoredQuery>)> {
    let typed = kg.vocab.entities_of_class(model.question.target_class());
    let known = kg.all_triples();
    let mut queries = Vec::new();
    for t in kg.question_triples(partition, model.question) {
        let cands = crate::eval::filter_candidates(t.head, t.relation, t.tail, &typed, &known, filtered);
        let pairs: Vec<(usize, usize)> = cands.iter().map(|&c| (t.head, c)).collect();
        let probs = model.probabilities(kge, &pairs)?;
        queries.push(ScoredQuery { head: t.head, truth: t.tail, candidates: cands.into_iter().zip(probs).collect() });
    }
    Ok((typed, queries))
}

/// Binary accuracy of the hybrid on labelled triples.
pub fn kge_mlp_accuracy(kge: &ModelParams, model: &KgeMlp, labelled: &[(Triple, bool)]) -> Result<f64> {
    let pairs: Vec<(usize, usize)> = labelled.iter().map(|(t, _)| (t.head, t.tail)).collect();
    let p = model.probabilities(kge, &pairs)?;
    let hits = p.iter().zip(labelled).filter(|(&p, (_, y))| (p > 0.5) == *y).count();
    Ok(hits as f64 / labelled.len().max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::ColumnSpec;

    fn toy_table() -> TableDataset {
        let cols = vec![
            ColumnSpec::new("spot_id", ColumnKind::RowId),
            ColumnSpec::new("machine", ColumnKind::Categorical),
            ColumnSpec::new("program", ColumnKind::Categorical),
            ColumnSpec::new("diameter", ColumnKind::TargetDiameter),
        ];
        let row = |id: &str, m: &str, p: &str, d: f64| {
            vec![Cell::Text(id.into()), Cell::Text(m.into()), Cell::Text(p.into()), Cell::Real(d)]
        };
        TableDataset::new(
            cols,
            vec![row("a", "M1", "P1", 4.2), row("b", "M2", "P2", 4.7), row("c", "M1", "P2", 4.3)],
        )
        .unwrap()
    }

    #[test]
    fn block_widths_and_unseen_values() {
        let ds = toy_table();
        let enc = OneHotEncoder::fit(&ds, &SchemeSet::new(), 3);
        assert_eq!(enc.width(), 4);
        let x = enc.encode(&ds);
        for row in x.rows() {
            assert_eq!(row.sum(), 2.0);
        }
        assert_eq!(x.row(0).to_vec(), vec![1.0, 0.0, 1.0, 0.0]);
        let mut rows = ds.rows().to_vec();
        rows[0][1] = Cell::Text("M9".into());
        rows[1][2] = Cell::Missing;
        let other = TableDataset::new(ds.columns().to_vec(), rows).unwrap();
        let x = enc.encode(&other);
        assert_eq!(x.row(0).to_vec(), vec![0.0, 0.0, 1.0, 0.0]);
        assert_eq!(x.row(1).to_vec(), vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(enc.encode(&ds), enc.encode(&ds));
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let p = MlpParams::init(&[5, 7, 3], 1).unwrap();
        let x = Array2::from_shape_fn((6, 5), |(i, j)| (i as f64 - j as f64) * 3.0);
        for row in mlp_predict(&p, &x).unwrap().rows() {
            assert!((row.sum() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn separable_toy_reaches_full_accuracy() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 60;
        let x = Array2::from_shape_simple_fn((n, 2), || rng.random_range(-1.0..1.0));
        let y: Vec<usize> = x.rows().into_iter().map(|r| usize::from(r[0] + 0.5 * r[1] > 0.0)).collect();
        let cfg = MlpConfig { hidden: vec![16], epochs: 500, batch_size: 16, learning_rate: 0.2, seed: 3 };
        let (p, rep) = mlp_train(&x, &y, 2, &cfg).unwrap();
        let probs = mlp_predict(&p, &x).unwrap();
        let correct = probs.rows().into_iter().zip(&y).filter(|(r, &c)| (r[1] > r[0]) == (c == 1)).count();
        assert_eq!(correct, n);
        assert!(rep.epoch_loss.last().unwrap() < &rep.epoch_loss[0]);
        let (p2, _) = mlp_train(&x, &y, 2, &cfg).unwrap();
        assert_eq!(p, p2);
    }

    #[test]
    fn label_and_shape_errors() {
        let p = MlpParams::init(&[2, 3, 2], 0).unwrap();
        let x = Array2::zeros((2, 2));
        assert!(mlp_loss(&p, &x, &[0, 2]).is_err());
        assert!(mlp_loss(&p, &x, &[0]).is_err());
        assert!(mlp_loss(&p, &Array2::zeros((2, 3)), &[0, 1]).is_err());
        assert!(MlpParams::init(&[2], 0).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mlp.ckpt");
        let p = MlpParams::init(&[4, 6, 5, 3], 11).unwrap();
        p.save(&path, 11).unwrap();
        assert_eq!(MlpParams::load(&path).unwrap(), p);
        let kge = ModelParams::init(ModelKind::TransE, 3, 2, 4, 0).unwrap();
        crate::models::checkpoint::save(&kge, &path).unwrap();
        assert!(MlpParams::load(&path).is_err());
    }
}
