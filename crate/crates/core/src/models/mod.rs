//! Embedding models: parameter storage, initialisation, scores and analytic gradients.
//!
//! All scores are "higher is more plausible"; distance-based models return
//! negated distances.

mod atth;
pub mod checkpoint;
mod distmult;
pub mod hyperbolic;
mod rotate;
mod transe;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default embedding-size grid.
pub const DIM_GRID: [usize; 5] = [16, 32, 64, 128, 256];
/// Curvatures are kept at or above this after each update.
pub const MIN_CURVATURE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    TransE,
    DistMult,
    RotatE,
    AttH,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] =
        [ModelKind::TransE, ModelKind::DistMult, ModelKind::RotatE, ModelKind::AttH];

    pub fn tag(self) -> u32 {
        match self {
            ModelKind::TransE => 0,
            ModelKind::DistMult => 1,
            ModelKind::RotatE => 2,
            ModelKind::AttH => 3,
        }
    }

    pub fn from_tag(tag: u32) -> Option<Self> {
        ModelKind::ALL.into_iter().find(|k| k.tag() == tag)
    }

    fn needs_even_dim(self) -> bool {
        matches!(self, ModelKind::RotatE | ModelKind::AttH)
    }

    pub fn entity_width(self, dim: usize) -> usize {
        match self {
            ModelKind::AttH => dim + 1,
            _ => dim,
        }
    }

    pub fn relation_width(self, dim: usize) -> usize {
        match self {
            ModelKind::TransE | ModelKind::DistMult => dim,
            ModelKind::RotatE => dim / 2,
            ModelKind::AttH => atth::relation_width(dim),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        ModelKind::ALL
            .into_iter()
            .find(|k| k.to_string().to_ascii_lowercase() == lower)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model kind {s:?}")))
    }
}

/// Gradient of one triple's score with respect to the rows it touches.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleGradient {
    pub head: Vec<f64>,
    pub relation: Vec<f64>,
    pub tail: Vec<f64>,
}

impl TripleGradient {
    pub fn zeros(kind: ModelKind, dim: usize) -> Self {
        let ew = kind.entity_width(dim);
        TripleGradient {
            head: vec![0.0; ew],
            relation: vec![0.0; kind.relation_width(dim)],
            tail: vec![0.0; ew],
        }
    }
}

/// Learnable state of one model: a row per entity and a row per relation.
///
/// Row layouts:
/// - TransE / DistMult: entity `[v (d)]`, relation `[v_r or diag (d)]`
/// - RotatE: entity `[re (d/2), im (d/2)]`, relation `[phase (d/2)]`
/// - AttH: entity `[tangent (d), bias]`, relation
///   `[rot (d/2), ref (d/2), translation (d), attention (d), curvature]`
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub kind: ModelKind,
    pub dim: usize,
    pub seed: u64,
    n_entities: usize,
    n_relations: usize,
    entities: Vec<f64>,
    relations: Vec<f64>,
}

impl ModelParams {
    /// Random initialisation: vectors uniform in `±6/√dim`, angles uniform in
    /// `[-π, π)`, curvatures 1, biases 0.
    pub fn init(
        kind: ModelKind,
        n_entities: usize,
        n_relations: usize,
        dim: usize,
        seed: u64,
    ) -> Result<Self> {
        use std::f64::consts::PI;
        if n_entities == 0 || n_relations == 0 {
            return Err(Error::InvalidArgument("model needs at least one entity and relation".into()));
        }
        if dim == 0 {
            return Err(Error::InvalidArgument("dim must be positive".into()));
        }
        if kind.needs_even_dim() && dim % 2 != 0 {
            return Err(Error::InvalidArgument(format!("{kind} needs an even dim, got {dim}")));
        }
        let bound = 6.0 / (dim as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ew = kind.entity_width(dim);
        let rw = kind.relation_width(dim);
        let mut entities = Vec::with_capacity(n_entities * ew);
        for _ in 0..n_entities {
            for _ in 0..dim {
                entities.push(rng.random_range(-bound..bound));
            }
            if kind == ModelKind::AttH {
                entities.push(0.0);
            }
        }
        let mut relations = Vec::with_capacity(n_relations * rw);
        for _ in 0..n_relations {
            match kind {
                ModelKind::TransE | ModelKind::DistMult => {
                    relations.extend((0..dim).map(|_| rng.random_range(-bound..bound)))
                }
                ModelKind::RotatE => relations.extend((0..dim / 2).map(|_| rng.random_range(-PI..PI))),
                ModelKind::AttH => {
                    relations.extend((0..dim).map(|_| rng.random_range(-PI..PI)));
                    relations.extend((0..2 * dim).map(|_| rng.random_range(-bound..bound)));
                    relations.push(1.0);
                }
            }
        }
        Ok(ModelParams { kind, dim, seed, n_entities, n_relations, entities, relations })
    }

    pub(crate) fn from_parts(
        kind: ModelKind,
        dim: usize,
        seed: u64,
        n_entities: usize,
        n_relations: usize,
        entities: Vec<f64>,
        relations: Vec<f64>,
    ) -> Result<Self> {
        if entities.len() != n_entities * kind.entity_width(dim)
            || relations.len() != n_relations * kind.relation_width(dim)
        {
            return Err(Error::Data("parameter arrays do not match header".into()));
        }
        let p = ModelParams { kind, dim, seed, n_entities, n_relations, entities, relations };
        p.check_finite()?;
        Ok(p)
    }

    pub fn n_entities(&self) -> usize {
        self.n_entities
    }

    pub fn n_relations(&self) -> usize {
        self.n_relations
    }

    pub fn entity_width(&self) -> usize {
        self.kind.entity_width(self.dim)
    }

    pub fn relation_width(&self) -> usize {
        self.kind.relation_width(self.dim)
    }

    pub fn entity(&self, i: usize) -> &[f64] {
        let w = self.entity_width();
        &self.entities[i * w..(i + 1) * w]
    }

    pub fn entity_mut(&mut self, i: usize) -> &mut [f64] {
        let w = self.entity_width();
        &mut self.entities[i * w..(i + 1) * w]
    }

    pub fn relation(&self, r: usize) -> &[f64] {
        let w = self.relation_width();
        &self.relations[r * w..(r + 1) * w]
    }

    pub fn relation_mut(&mut self, r: usize) -> &mut [f64] {
        let w = self.relation_width();
        &mut self.relations[r * w..(r + 1) * w]
    }

    /// Entity embedding without any trailing bias column.
    pub fn entity_vector(&self, i: usize) -> &[f64] {
        &self.entity(i)[..self.dim]
    }

    pub fn entity_table(&self) -> &[f64] {
        &self.entities
    }

    pub fn relation_table(&self) -> &[f64] {
        &self.relations
    }

    /// AttH curvature of relation `r`.
    pub fn curvature(&self, r: usize) -> Option<f64> {
        (self.kind == ModelKind::AttH).then(|| self.relation(r)[atth::curvature_offset(self.dim)])
    }

    fn check_indices(&self, h: usize, r: usize, t: usize) -> Result<()> {
        if h >= self.n_entities || t >= self.n_entities || r >= self.n_relations {
            return Err(Error::OutOfRange(format!(
                "triple ({h}, {r}, {t}) outside {} entities / {} relations",
                self.n_entities, self.n_relations
            )));
        }
        Ok(())
    }

    fn check_rows(&self, h: usize, r: usize, t: usize) -> Result<()> {
        self.check_indices(h, r, t)?;
        let finite = |s: &[f64]| s.iter().all(|x| x.is_finite());
        if !(finite(self.entity(h)) && finite(self.entity(t)) && finite(self.relation(r))) {
            return Err(Error::NonFinite(format!("parameters of triple ({h}, {r}, {t})")));
        }
        Ok(())
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.entities.iter().chain(&self.relations).all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(format!("{} parameters", self.kind)))
        }
    }

    /// Score without index or finiteness checks. Panics on out-of-range indices.
    pub fn score_unchecked(&self, h: usize, r: usize, t: usize) -> f64 {
        let (hv, rv, tv) = (self.entity(h), self.relation(r), self.entity(t));
        match self.kind {
            ModelKind::TransE => transe::score(hv, rv, tv),
            ModelKind::DistMult => distmult::score(hv, rv, tv),
            ModelKind::RotatE => rotate::score(hv, rv, tv),
            ModelKind::AttH => atth::score(hv, rv, tv, self.dim),
        }
    }

    pub fn score(&self, h: usize, r: usize, t: usize) -> Result<f64> {
        self.check_rows(h, r, t)?;
        Ok(self.score_unchecked(h, r, t))
    }

    /// Writes the score gradient into `g` and returns the score.
    pub fn gradient_into(&self, h: usize, r: usize, t: usize, g: &mut TripleGradient) -> f64 {
        let (hv, rv, tv) = (self.entity(h), self.relation(r), self.entity(t));
        match self.kind {
            ModelKind::TransE => transe::gradient(hv, rv, tv, g),
            ModelKind::DistMult => distmult::gradient(hv, rv, tv, g),
            ModelKind::RotatE => rotate::gradient(hv, rv, tv, g),
            ModelKind::AttH => atth::gradient(hv, rv, tv, self.dim, g),
        }
    }

    /// Score and its gradient with respect to the head row, relation row and tail row.
    pub fn score_gradient(&self, h: usize, r: usize, t: usize) -> Result<(f64, TripleGradient)> {
        self.check_rows(h, r, t)?;
        let mut g = TripleGradient::zeros(self.kind, self.dim);
        let s = self.gradient_into(h, r, t, &mut g);
        Ok((s, g))
    }

    /// AttH query point in the Poincaré ball for `(h, r, ·)`.
    pub fn atth_query(&self, h: usize, r: usize) -> Option<Vec<f64>> {
        (self.kind == ModelKind::AttH).then(|| atth::query(self.entity(h), self.relation(r), self.dim))
    }

    /// Restores parameter constraints after an update of relation row `r`:
    /// RotatE phases wrapped to `[-π, π)`, AttH curvature kept positive.
    pub fn constrain_relation(&mut self, r: usize) {
        let dim = self.dim;
        match self.kind {
            ModelKind::RotatE => {
                for p in self.relation_mut(r) {
                    *p = rotate::wrap_phase(*p);
                }
            }
            ModelKind::AttH => {
                let c = &mut self.relation_mut(r)[atth::curvature_offset(dim)];
                *c = c.max(MIN_CURVATURE);
            }
            _ => {}
        }
    }
}
