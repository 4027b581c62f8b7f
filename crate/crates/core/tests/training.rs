use weldkg::eval::{evaluate, EvalOptions};
use weldkg::kg::{
    build_from_table, BuildOptions, EntityClass, KnowledgeGraph, Partition, Question, RelationMapping,
    SplitRatios, Triple, Vocab, HAS_DIAMETER_CLASS,
};
use weldkg::models::ModelKind;
use weldkg::synth::{generate, SynthConfig};
use weldkg::train::{grid_search, train, train_with_time, TrainConfig};

/// Ten train triples: five spots, each linked to a machine and a diameter class.
fn toy_kg() -> KnowledgeGraph {
    let mut v = Vocab::new();
    let dias: Vec<usize> = (0..2).map(|b| v.entity(&format!("dia:{b}"), EntityClass::DiameterClass)).collect();
    let machines: Vec<usize> = (0..2).map(|m| v.entity(&format!("machine:M{m}"), EntityClass::Machine)).collect();
    let on = v.relation("conducted_on_machine");
    let hd = v.relation(HAS_DIAMETER_CLASS);
    let mut triples = Vec::new();
    for i in 0..6 {
        let s = v.entity(&format!("spot:{i}"), EntityClass::Spot);
        let p = if i < 5 { Partition::Train } else { Partition::Valid };
        if i < 5 {
            triples.push((Triple::new(s, on, machines[i % 2]), Partition::Train));
        }
        triples.push((Triple::new(s, hd, dias[i % 2]), p));
    }
    KnowledgeGraph::new(v, triples).unwrap()
}

fn small_config(model: ModelKind, dim: usize, epochs: usize) -> TrainConfig {
    TrainConfig { model, dim, epochs, n_negatives: 4, batch_size: 4, patience: 1000, seed: 1, ..Default::default() }
}

#[test]
fn loss_decreases_on_toy_graph() {
    let kg = toy_kg();
    assert_eq!(kg.count(Partition::Train), 10);
    let (_, report) = train(&kg, &small_config(ModelKind::TransE, 8, 200)).unwrap();
    assert_eq!(report.epoch_loss.len(), 200);
    assert!(report.epoch_loss.iter().all(|l| l.is_finite() && *l >= 0.0));
    assert!(report.epoch_loss.last().unwrap() < &report.epoch_loss[0]);
}

#[test]
fn every_model_trains_finitely() {
    let kg = toy_kg();
    for kind in ModelKind::ALL {
        let (params, report) = train(&kg, &small_config(kind, 8, 30)).unwrap();
        params.check_finite().unwrap();
        assert!(report.epoch_loss.iter().all(|l| l.is_finite()));
        if kind == ModelKind::AttH {
            for r in 0..params.n_relations() {
                assert!(params.curvature(r).unwrap() > 0.0);
            }
        }
    }
}

#[test]
fn training_is_deterministic() {
    let kg = toy_kg();
    let cfg = small_config(ModelKind::RotatE, 8, 20);
    let (a, ra) = train_with_time(&kg, &cfg, false).unwrap();
    let (b, rb) = train_with_time(&kg, &cfg, false).unwrap();
    assert_eq!(a, b);
    assert_eq!(ra, rb);
    let (c, _) = train_with_time(&kg, &TrainConfig { seed: 2, ..cfg }, false).unwrap();
    assert_ne!(a, c);
}

#[test]
fn early_stopping_keeps_best_parameters() {
    let kg = toy_kg();
    let cfg = TrainConfig { patience: 5, eval_every: 1, ..small_config(ModelKind::TransE, 8, 300) };
    let (params, report) = train(&kg, &cfg).unwrap();
    let best = report.valid_mrr.iter().map(|&(_, m)| m).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(report.best_valid_mrr, best);
    assert!(report.stopped_early || report.epochs_run == 300);
    let again = weldkg::eval::partition_mrr(&params, &kg, Partition::Valid, None).unwrap();
    assert_eq!(again, best);
}

#[test]
fn grid_search_shape_and_argmax() {
    let kg = toy_kg();
    let base = small_config(ModelKind::DistMult, 8, 10);
    let single = grid_search(&kg, &base, &[4], false).unwrap();
    assert_eq!(single.best_config.dim, 4);
    assert_eq!(single.rows.len(), 1);
    let res = grid_search(&kg, &base, &[8, 4, 16], false).unwrap();
    assert_eq!(res.rows.iter().map(|r| r.dim).collect::<Vec<_>>(), vec![4, 8, 16]);
    let max = res.rows.iter().map(|r| r.valid_mrr).fold(f64::NEG_INFINITY, f64::max);
    let first_max = res.rows.iter().find(|r| r.valid_mrr == max).unwrap().dim;
    assert_eq!(res.best_config.dim, first_max);
    assert_eq!(res.best_report.best_valid_mrr, max);
    assert!(grid_search(&kg, &base, &[], false).is_err());
}

/// Brute-force nearest-neighbour check: for every valid Q1 query the class
/// closest to `h + r` under TransE is the true class.
#[test]
fn planted_structure_is_recovered() {
    let cfg = SynthConfig {
        n_rows: 300,
        n_machines: 4,
        n_programs: 6,
        n_carbodies: 15,
        n_diameter_classes: 4,
        seed: 3,
        ..Default::default()
    };
    let out = generate(&cfg).unwrap();
    let b = build_from_table(&out.table, SplitRatios::default(), 3, &RelationMapping::default(), &BuildOptions::default())
        .unwrap();
    let tc = TrainConfig { model: ModelKind::TransE, dim: 32, valid_question: Some(Question::Q1), seed: 3, ..Default::default() };
    let (p, report) = train(&b.kg, &tc).unwrap();
    assert!(report.best_valid_mrr >= 0.9, "{}", report.best_valid_mrr);

    let dias = b.kg.vocab.entities_of_class(EntityClass::DiameterClass);
    let valid = b.kg.question_triples(Partition::Valid, Question::Q1);
    let mut hits = 0;
    for t in &valid {
        let q: Vec<f64> = p.entity(t.head).iter().zip(p.relation(t.relation)).map(|(h, r)| h + r).collect();
        let dist = |e: usize| p.entity(e).iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let nearest = *dias.iter().min_by(|&&a, &&b| dist(a).total_cmp(&dist(b))).unwrap();
        hits += usize::from(nearest == t.tail);
    }
    let eval_opts = EvalOptions { partition: Partition::Valid, ..Default::default() };
    let rep = evaluate("TransE", &p, &b.kg, Question::Q1, b.diameter.as_ref(), None, &eval_opts).unwrap();
    assert_eq!(hits as f64 / valid.len() as f64, rep.hits_at_1);
}
