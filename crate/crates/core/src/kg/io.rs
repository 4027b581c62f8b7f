//! TSV serialisation of a knowledge graph directory:
//! `entities.tsv` (`index<TAB>label<TAB>class`), `relations.tsv`
//! (`index<TAB>label`) and `triples.tsv` (`head<TAB>relation<TAB>tail<TAB>partition`).

use std::fmt::Write as _;
use std::path::Path;

use super::{EntityClass, KnowledgeGraph, Partition, Triple, Vocab};
use crate::error::{Error, Result};

pub const ENTITIES_FILE: &str = "entities.tsv";
pub const RELATIONS_FILE: &str = "relations.tsv";
pub const TRIPLES_FILE: &str = "triples.tsv";

fn check_label(label: &str) -> Result<()> {
    if label.is_empty() || label.contains(['\t', '\n', '\r']) {
        return Err(Error::Data(format!("label {label:?} cannot be written as TSV")));
    }
    Ok(())
}

pub fn serialize_kg(kg: &KnowledgeGraph, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let v = &kg.vocab;
    let mut ents = String::new();
    for (i, label) in v.entities().iter().enumerate() {
        check_label(label)?;
        writeln!(ents, "{i}\t{label}\t{}", v.class_of(i)).unwrap();
    }
    let mut rels = String::new();
    for (i, label) in v.relations().iter().enumerate() {
        check_label(label)?;
        writeln!(rels, "{i}\t{label}").unwrap();
    }
    let mut trip = String::new();
    for (t, p) in kg.triples() {
        writeln!(
            trip,
            "{}\t{}\t{}\t{}",
            v.entity_label(t.head),
            v.relation_label(t.relation),
            v.entity_label(t.tail),
            p.as_str()
        )
        .unwrap();
    }
    for (name, body) in [(ENTITIES_FILE, ents), (RELATIONS_FILE, rels), (TRIPLES_FILE, trip)] {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.to_string()))
        .collect())
}

fn expect_index(file: &str, line: usize, raw: &str, want: usize) -> Result<()> {
    match raw.parse::<usize>() {
        Ok(i) if i == want => Ok(()),
        _ => Err(Error::parse(file, line, format!("expected dense index {want}, got {raw:?}"))),
    }
}

/// Reads a directory written by [`serialize_kg`].
///
/// The vocabulary files may be absent when the triple file is empty.
pub fn parse_kg(dir: &Path) -> Result<KnowledgeGraph> {
    let mut vocab = Vocab::new();
    let ent_path = dir.join(ENTITIES_FILE);
    let rel_path = dir.join(RELATIONS_FILE);
    let trip_path = dir.join(TRIPLES_FILE);

    if ent_path.exists() {
        let file = ent_path.display().to_string();
        for (line, text) in read_lines(&ent_path)? {
            let f: Vec<&str> = text.split('\t').collect();
            if f.len() != 3 {
                return Err(Error::parse(&file, line, format!("expected 3 fields, found {}", f.len())));
            }
            expect_index(&file, line, f[0], vocab.n_entities())?;
            let class: EntityClass =
                f[2].parse().map_err(|e: Error| Error::parse(&file, line, e.to_string()))?;
            if vocab.entity_id(f[1]).is_some() {
                return Err(Error::parse(&file, line, format!("duplicate entity {:?}", f[1])));
            }
            vocab.entity(f[1], class);
        }
    }
    if rel_path.exists() {
        let file = rel_path.display().to_string();
        for (line, text) in read_lines(&rel_path)? {
            let f: Vec<&str> = text.split('\t').collect();
            if f.len() != 2 {
                return Err(Error::parse(&file, line, format!("expected 2 fields, found {}", f.len())));
            }
            expect_index(&file, line, f[0], vocab.n_relations())?;
            if vocab.relation_id(f[1]).is_some() {
                return Err(Error::parse(&file, line, format!("duplicate relation {:?}", f[1])));
            }
            vocab.relation(f[1]);
        }
    }

    let file = trip_path.display().to_string();
    let mut triples = Vec::new();
    for (line, text) in read_lines(&trip_path)? {
        let f: Vec<&str> = text.split('\t').collect();
        if f.len() != 4 {
            return Err(Error::parse(&file, line, format!("expected 4 fields, found {}", f.len())));
        }
        let ent = |label: &str| {
            vocab
                .entity_id(label)
                .ok_or_else(|| Error::parse(&file, line, format!("unknown entity {label:?}")))
        };
        let head = ent(f[0])?;
        let tail = ent(f[2])?;
        let relation = vocab
            .relation_id(f[1])
            .ok_or_else(|| Error::parse(&file, line, format!("unknown relation {:?}", f[1])))?;
        let part: Partition = f[3].parse().map_err(|e: Error| Error::parse(&file, line, e.to_string()))?;
        triples.push((Triple { head, relation, tail }, part));
    }
    KnowledgeGraph::new(vocab, triples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{BELONGS_TO_CARBODY, HAS_DIAMETER_CLASS};

    fn sample() -> KnowledgeGraph {
        let mut v = Vocab::new();
        let s1 = v.entity("spot:S1", EntityClass::Spot);
        let s2 = v.entity("spot:S2", EntityClass::Spot);
        let m = v.entity("machine:M1", EntityClass::Machine);
        let d = v.entity("dia:0", EntityClass::DiameterClass);
        let c = v.entity("carbody:C1", EntityClass::Carbody);
        let on = v.relation("conducted_on_machine");
        let hd = v.relation(HAS_DIAMETER_CLASS);
        let bc = v.relation(BELONGS_TO_CARBODY);
        KnowledgeGraph::new(
            v,
            vec![
                (Triple::new(s1, on, m), Partition::Train),
                (Triple::new(s2, on, m), Partition::Train),
                (Triple::new(s1, hd, d), Partition::Train),
                (Triple::new(s2, hd, d), Partition::Valid),
                (Triple::new(s2, bc, c), Partition::Test),
            ],
        )
        .unwrap()
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let kg = sample();
        serialize_kg(&kg, dir.path()).unwrap();
        assert_eq!(parse_kg(dir.path()).unwrap(), kg);
    }

    #[test]
    fn short_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        serialize_kg(&sample(), dir.path()).unwrap();
        let p = dir.path().join(TRIPLES_FILE);
        let mut body = std::fs::read_to_string(&p).unwrap();
        body.push_str("spot:S1\tconducted_on_machine\n");
        std::fs::write(&p, body).unwrap();
        match parse_kg(dir.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_partition_tag() {
        let dir = tempfile::tempdir().unwrap();
        serialize_kg(&sample(), dir.path()).unwrap();
        let p = dir.path().join(TRIPLES_FILE);
        let body = std::fs::read_to_string(&p).unwrap().replace("\tvalid", "\tdev");
        std::fs::write(&p, body).unwrap();
        assert!(matches!(parse_kg(dir.path()), Err(Error::Parse { line: 4, .. })));
    }

    #[test]
    fn empty_triple_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(TRIPLES_FILE), "").unwrap();
        let kg = parse_kg(dir.path()).unwrap();
        assert_eq!(kg.n_triples(), 0);
        assert_eq!(kg.vocab.n_entities(), 0);
        assert_eq!(kg.vocab.n_relations(), 0);
    }

    #[test]
    fn tab_in_label_refused() {
        let mut v = Vocab::new();
        v.entity("bad\tlabel", EntityClass::Other);
        let kg = KnowledgeGraph::new(v, vec![]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        assert!(serialize_kg(&kg, dir.path()).is_err());
    }
}
