//! RotatE: entities are complex vectors (real parts then imaginary parts),
//! relations are phases; `score = -‖h ∘ e^{iθ} - t‖`.

use super::TripleGradient;

fn residual(h: &[f64], phases: &[f64], t: &[f64]) -> Vec<f64> {
    let k = phases.len();
    let mut d = vec![0.0; 2 * k];
    for j in 0..k {
        let (sin, cos) = phases[j].sin_cos();
        let (hr, hi) = (h[j], h[k + j]);
        d[j] = hr * cos - hi * sin - t[j];
        d[k + j] = hr * sin + hi * cos - t[k + j];
    }
    d
}

pub(crate) fn score(h: &[f64], phases: &[f64], t: &[f64]) -> f64 {
    -residual(h, phases, t).iter().map(|d| d * d).sum::<f64>().sqrt()
}

pub(crate) fn gradient(h: &[f64], phases: &[f64], t: &[f64], g: &mut TripleGradient) -> f64 {
    let k = phases.len();
    let d = residual(h, phases, t);
    let n = d.iter().map(|x| x * x).sum::<f64>().sqrt();
    let inv = if n > 0.0 { 1.0 / n } else { 0.0 };
    for j in 0..k {
        let (sin, cos) = phases[j].sin_cos();
        let (hr, hi) = (h[j], h[k + j]);
        // d score / d residual
        let (gr, gi) = (-d[j] * inv, -d[k + j] * inv);
        g.head[j] = gr * cos + gi * sin;
        g.head[k + j] = -gr * sin + gi * cos;
        g.relation[j] = gr * (-hr * sin - hi * cos) + gi * (hr * cos - hi * sin);
        g.tail[j] = -gr;
        g.tail[k + j] = -gi;
    }
    -n
}

/// Wraps a phase into `[-π, π)`.
pub(crate) fn wrap_phase(x: f64) -> f64 {
    use std::f64::consts::PI;
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI {
        -PI
    } else {
        y
    }
}
