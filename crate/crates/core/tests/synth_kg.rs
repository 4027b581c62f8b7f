use weldkg::kg::{build_from_table, check_leakage, BuildOptions, EntityClass, RelationMapping, SplitRatios};
use weldkg::synth::{generate, SynthConfig, MAPPING};

#[test]
fn default_config_entity_count_is_near_reference() {
    let out = generate(&SynthConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mapping_path = dir.path().join("mapping.txt");
    std::fs::write(&mapping_path, MAPPING).unwrap();
    let mapping = RelationMapping::load(&mapping_path).unwrap();
    let b = build_from_table(&out.table, SplitRatios::default(), 0, &mapping, &BuildOptions::default()).unwrap();
    let n = b.kg.vocab.n_entities() as f64;
    assert!((3342.0 * 0.8..=3342.0 * 1.2).contains(&n), "{n} entities");
    assert!(check_leakage(&b.kg).is_empty());
    let counts = b.kg.vocab.class_counts();
    assert_eq!(counts[&EntityClass::Spot], 2000);
    assert_eq!(counts[&EntityClass::Machine], 18);
    assert!(b.report.pruned_columns.iter().any(|c| c.name == "status"));
    assert!(b.report.pruned_columns.iter().any(|c| c.name == "remark"));
}
