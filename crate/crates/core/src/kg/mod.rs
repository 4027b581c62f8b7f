//! Knowledge graph data model: vocabularies, triples and partitions.

mod build;
mod io;

pub use build::{
    build_from_table, build_kg, check_leakage, diameter_label, split_table, tabular_to_triples,
    BuildOptions, BuildOutput, BuildReport, DiameterBinning, FeatureSource, LiteralPlan,
    RelationMapping, RowTriples, SplitRatios, UnseenEntity,
};
pub use io::{parse_kg, serialize_kg, ENTITIES_FILE, RELATIONS_FILE, TRIPLES_FILE};

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HAS_DIAMETER_CLASS: &str = "has_diameter_class";
pub const BELONGS_TO_CARBODY: &str = "belongs_to_carbody";
pub const RDF_TYPE: &str = "rdf_type";
pub const DIAMETER_CLASS_TYPE: &str = "DiameterClass";

/// Coarse type of an entity; used for typed negative sampling and candidate sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityClass {
    Spot,
    Machine,
    Program,
    Carbody,
    DiameterClass,
    Literal,
    Component,
    Other,
}

impl EntityClass {
    pub const ALL: [EntityClass; 8] = [
        EntityClass::Spot,
        EntityClass::Machine,
        EntityClass::Program,
        EntityClass::Carbody,
        EntityClass::DiameterClass,
        EntityClass::Literal,
        EntityClass::Component,
        EntityClass::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityClass::Spot => "spot",
            EntityClass::Machine => "machine",
            EntityClass::Program => "program",
            EntityClass::Carbody => "carbody",
            EntityClass::DiameterClass => "diameter_class",
            EntityClass::Literal => "literal",
            EntityClass::Component => "component",
            EntityClass::Other => "other",
        }
    }

    /// Class for entities created from a categorical column, guessed from its name.
    pub fn for_categorical_column(column: &str) -> Self {
        let c = column.to_ascii_lowercase();
        if c.contains("machine") {
            EntityClass::Machine
        } else if c.contains("program") {
            EntityClass::Program
        } else if c.contains("component") {
            EntityClass::Component
        } else {
            EntityClass::Other
        }
    }
}

impl fmt::Display for EntityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EntityClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Data(format!("unknown entity class {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Train,
    Valid,
    Test,
}

impl Partition {
    pub fn as_str(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Valid => "valid",
            Partition::Test => "test",
        }
    }
}

impl FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Partition::Train),
            "valid" => Ok(Partition::Valid),
            "test" => Ok(Partition::Test),
            other => Err(Error::Data(format!("unknown partition tag {other:?}"))),
        }
    }
}

/// The two prediction tasks: diameter class (Q1) and carbody (Q2) of a spot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Question {
    Q1,
    Q2,
}

impl Question {
    pub fn relation(self) -> &'static str {
        match self {
            Question::Q1 => HAS_DIAMETER_CLASS,
            Question::Q2 => BELONGS_TO_CARBODY,
        }
    }

    pub fn target_class(self) -> EntityClass {
        match self {
            Question::Q1 => EntityClass::DiameterClass,
            Question::Q2 => EntityClass::Carbody,
        }
    }
}

impl FromStr for Question {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "Q1" => Ok(Question::Q1),
            "Q2" => Ok(Question::Q2),
            other => Err(Error::InvalidArgument(format!("unknown question {other:?}"))),
        }
    }
}

impl fmt::Display for Question {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

pub fn is_target_relation(label: &str) -> bool {
    label == HAS_DIAMETER_CLASS || label == BELONGS_TO_CARBODY
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
}

impl Triple {
    pub fn new(head: usize, relation: usize, tail: usize) -> Self {
        Triple { head, relation, tail }
    }
}

/// Dense label/index maps for entities and relations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    entities: Vec<String>,
    entity_index: HashMap<String, usize>,
    classes: Vec<EntityClass>,
    relations: Vec<String>,
    relation_index: HashMap<String, usize>,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    /// Index of `label`, adding it with `class` if new. An existing entity keeps its class.
    pub fn entity(&mut self, label: &str, class: EntityClass) -> usize {
        if let Some(&i) = self.entity_index.get(label) {
            return i;
        }
        let i = self.entities.len();
        self.entities.push(label.to_string());
        self.classes.push(class);
        self.entity_index.insert(label.to_string(), i);
        i
    }

    pub fn relation(&mut self, label: &str) -> usize {
        if let Some(&i) = self.relation_index.get(label) {
            return i;
        }
        let i = self.relations.len();
        self.relations.push(label.to_string());
        self.relation_index.insert(label.to_string(), i);
        i
    }

    pub fn entity_id(&self, label: &str) -> Option<usize> {
        self.entity_index.get(label).copied()
    }

    pub fn relation_id(&self, label: &str) -> Option<usize> {
        self.relation_index.get(label).copied()
    }

    pub fn entity_label(&self, i: usize) -> &str {
        &self.entities[i]
    }

    pub fn relation_label(&self, i: usize) -> &str {
        &self.relations[i]
    }

    pub fn class_of(&self, i: usize) -> EntityClass {
        self.classes[i]
    }

    pub fn n_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn n_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn relations(&self) -> &[String] {
        &self.relations
    }

    /// Entity indices of one class, in index order.
    pub fn entities_of_class(&self, class: EntityClass) -> Vec<usize> {
        (0..self.classes.len()).filter(|&i| self.classes[i] == class).collect()
    }

    pub fn class_counts(&self) -> BTreeMap<EntityClass, usize> {
        let mut m = BTreeMap::new();
        for &c in &self.classes {
            *m.entry(c).or_insert(0) += 1;
        }
        m
    }
}

/// Integer-indexed triples with a partition tag each.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnowledgeGraph {
    pub vocab: Vocab,
    triples: Vec<(Triple, Partition)>,
}

impl KnowledgeGraph {
    /// Validates index ranges, per-partition uniqueness, and that held-out
    /// partitions only carry target relations.
    pub fn new(vocab: Vocab, triples: Vec<(Triple, Partition)>) -> Result<Self> {
        let (ne, nr) = (vocab.n_entities(), vocab.n_relations());
        let mut seen = HashSet::new();
        for &(t, p) in &triples {
            if t.head >= ne || t.tail >= ne || t.relation >= nr {
                return Err(Error::OutOfRange(format!("triple {t:?} outside vocab")));
            }
            if !seen.insert((t, p)) {
                return Err(Error::Data(format!(
                    "duplicate triple ({}, {}, {}) in {}",
                    vocab.entity_label(t.head),
                    vocab.relation_label(t.relation),
                    vocab.entity_label(t.tail),
                    p.as_str()
                )));
            }
            if p != Partition::Train && !is_target_relation(vocab.relation_label(t.relation)) {
                return Err(Error::Data(format!(
                    "{} partition holds non-target relation {}",
                    p.as_str(),
                    vocab.relation_label(t.relation)
                )));
            }
        }
        Ok(KnowledgeGraph { vocab, triples })
    }

    pub fn triples(&self) -> &[(Triple, Partition)] {
        &self.triples
    }

    pub fn partition(&self, p: Partition) -> Vec<Triple> {
        self.triples.iter().filter(|(_, q)| *q == p).map(|(t, _)| *t).collect()
    }

    pub fn n_triples(&self) -> usize {
        self.triples.len()
    }

    pub fn count(&self, p: Partition) -> usize {
        self.triples.iter().filter(|(_, q)| *q == p).count()
    }

    pub fn all_triples(&self) -> HashSet<Triple> {
        self.triples.iter().map(|(t, _)| *t).collect()
    }

    pub fn train_set(&self) -> HashSet<Triple> {
        self.partition(Partition::Train).into_iter().collect()
    }

    /// Held-out triples of the given question's relation.
    pub fn question_triples(&self, p: Partition, q: Question) -> Vec<Triple> {
        match self.vocab.relation_id(q.relation()) {
            None => Vec::new(),
            Some(r) => self.partition(p).into_iter().filter(|t| t.relation == r).collect(),
        }
    }

    /// Copy without the triples whose tail entities are literals. Vocabulary
    /// is rebuilt so that literal entities and literal-only relations disappear.
    pub fn without_literals(&self) -> KnowledgeGraph {
        let mut vocab = Vocab::new();
        let old = &self.vocab;
        let keep: Vec<(Triple, Partition)> = self
            .triples
            .iter()
            .filter(|(t, _)| {
                old.class_of(t.tail) != EntityClass::Literal
                    && old.class_of(t.head) != EntityClass::Literal
            })
            .copied()
            .collect();
        // keep entity order stable: walk old vocab, dropping literals
        for i in 0..old.n_entities() {
            if old.class_of(i) != EntityClass::Literal {
                vocab.entity(old.entity_label(i), old.class_of(i));
            }
        }
        let used: HashSet<usize> = keep.iter().map(|(t, _)| t.relation).collect();
        for r in 0..old.n_relations() {
            if used.contains(&r) {
                vocab.relation(old.relation_label(r));
            }
        }
        let triples = keep
            .into_iter()
            .map(|(t, p)| {
                let h = vocab.entity_id(old.entity_label(t.head)).unwrap();
                let r = vocab.relation_id(old.relation_label(t.relation)).unwrap();
                let tl = vocab.entity_id(old.entity_label(t.tail)).unwrap();
                (Triple::new(h, r, tl), p)
            })
            .collect();
        KnowledgeGraph { vocab, triples }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocab_is_dense_and_stable() {
        let mut v = Vocab::new();
        assert_eq!(v.entity("spot:S1", EntityClass::Spot), 0);
        assert_eq!(v.entity("machine:M1", EntityClass::Machine), 1);
        assert_eq!(v.entity("spot:S1", EntityClass::Other), 0);
        assert_eq!(v.class_of(0), EntityClass::Spot);
        assert_eq!(v.relation("r"), 0);
        assert_eq!(v.relation("r"), 0);
        assert_eq!(v.entities_of_class(EntityClass::Machine), vec![1]);
    }

    #[test]
    fn kg_rejects_bad_triples() {
        let mut v = Vocab::new();
        let a = v.entity("a", EntityClass::Spot);
        let b = v.entity("b", EntityClass::Machine);
        let r = v.relation("conducted_on_machine");
        let d = v.relation(HAS_DIAMETER_CLASS);
        let t = Triple::new(a, r, b);
        assert!(KnowledgeGraph::new(v.clone(), vec![(t, Partition::Train), (t, Partition::Train)]).is_err());
        assert!(KnowledgeGraph::new(v.clone(), vec![(t, Partition::Test)]).is_err());
        assert!(KnowledgeGraph::new(v.clone(), vec![(Triple::new(a, r, 9), Partition::Train)]).is_err());
        let kg = KnowledgeGraph::new(v, vec![(t, Partition::Train), (Triple::new(a, d, b), Partition::Test)])
            .unwrap();
        assert_eq!(kg.count(Partition::Train), 1);
        assert_eq!(kg.question_triples(Partition::Test, Question::Q1).len(), 1);
    }

    #[test]
    fn class_and_question_parsing() {
        for c in EntityClass::ALL {
            assert_eq!(c.as_str().parse::<EntityClass>().unwrap(), c);
        }
        assert_eq!("q2".parse::<Question>().unwrap(), Question::Q2);
        assert!("Q3".parse::<Question>().is_err());
        assert!("holdout".parse::<Partition>().is_err());
        assert_eq!(EntityClass::for_categorical_column("WeldingMachine"), EntityClass::Machine);
        assert_eq!(EntityClass::for_categorical_column("ProgramID"), EntityClass::Program);
    }
}
