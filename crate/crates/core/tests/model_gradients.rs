//! Analytic score gradients against central finite differences of `score`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weldkg::models::{ModelKind, ModelParams};

const EPS: f64 = 1e-5;

fn randomize(p: &mut ModelParams, rng: &mut ChaCha8Rng) {
    let kind = p.kind;
    let dim = p.dim;
    for i in 0..p.n_entities() {
        for x in p.entity_mut(i) {
            *x = rng.random_range(-0.8..0.8);
        }
    }
    for r in 0..p.n_relations() {
        let row = p.relation_mut(r);
        for x in row.iter_mut() {
            *x = rng.random_range(-0.8..0.8);
        }
        if kind == ModelKind::AttH {
            row[3 * dim] = rng.random_range(0.2..2.0);
        }
    }
}

/// Relative error between two gradient vectors.
fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-8)
}

#[derive(Clone, Copy)]
enum Row {
    Head,
    Relation,
    Tail,
}

fn shifted_score(p: &ModelParams, (h, r, t): (usize, usize, usize), row: Row, i: usize, delta: f64) -> f64 {
    let mut q = p.clone();
    match row {
        Row::Head => q.entity_mut(h)[i] += delta,
        Row::Relation => q.relation_mut(r)[i] += delta,
        Row::Tail => q.entity_mut(t)[i] += delta,
    }
    q.score(h, r, t).unwrap()
}

fn fd_gradient(p: &ModelParams, triple: (usize, usize, usize)) -> Vec<f64> {
    let rows = [
        (Row::Head, p.entity_width()),
        (Row::Relation, p.relation_width()),
        (Row::Tail, p.entity_width()),
    ];
    rows.iter()
        .flat_map(|&(row, w)| {
            (0..w).map(move |i| {
                (shifted_score(p, triple, row, i, EPS) - shifted_score(p, triple, row, i, -EPS)) / (2.0 * EPS)
            })
        })
        .collect()
}

#[test]
fn analytic_matches_finite_differences_all_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for kind in ModelKind::ALL {
        let mut worst: f64 = 0.0;
        for trial in 0..100 {
            let mut p = ModelParams::init(kind, 3, 2, 8, trial).unwrap();
            randomize(&mut p, &mut rng);
            let (h, r, t) = (0, 1, 2);
            let (_, g) = p.score_gradient(h, r, t).unwrap();
            let analytic: Vec<f64> = g.head.iter().chain(&g.relation).chain(&g.tail).copied().collect();
            let fd = fd_gradient(&p, (h, r, t));
            worst = worst.max(rel_err(&analytic, &fd));
        }
        assert!(worst <= 1e-4, "{kind}: worst relative error {worst:e}");
    }
}

#[test]
fn distance_models_are_nonpositive_and_distmult_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for seed in 0..50 {
        for kind in [ModelKind::TransE, ModelKind::RotatE] {
            let p = ModelParams::init(kind, 4, 2, 8, seed).unwrap();
            for h in 0..4 {
                for t in 0..4 {
                    assert!(p.score(h, 1, t).unwrap() <= 0.0);
                }
            }
        }
        let mut p = ModelParams::init(ModelKind::DistMult, 4, 2, 8, seed).unwrap();
        randomize(&mut p, &mut rng);
        let a = p.score(0, 1, 3).unwrap();
        let b = p.score(3, 1, 0).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}

#[test]
fn rotate_preserves_modulus() {
    let mut p = ModelParams::init(ModelKind::RotatE, 2, 1, 8, 1).unwrap();
    // tail = 0 makes -score the norm of the rotated head; per-coordinate moduli survive rotation
    for x in p.entity_mut(1) {
        *x = 0.0;
    }
    let h: Vec<f64> = p.entity(0).to_vec();
    let head_norm = h.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!((p.score(0, 0, 1).unwrap() + head_norm).abs() < 1e-12);
}
