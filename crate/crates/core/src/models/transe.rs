//! TransE: `score = -‖h + r - t‖₂`.

use super::TripleGradient;

pub(crate) fn score(h: &[f64], r: &[f64], t: &[f64]) -> f64 {
    -h.iter()
        .zip(r)
        .zip(t)
        .map(|((h, r), t)| (h + r - t).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// At `h + r = t` the norm is not differentiable; the zero subgradient is returned.
pub(crate) fn gradient(h: &[f64], r: &[f64], t: &[f64], g: &mut TripleGradient) -> f64 {
    let diff: Vec<f64> = h.iter().zip(r).zip(t).map(|((h, r), t)| h + r - t).collect();
    let n = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
    for i in 0..diff.len() {
        let gi = if n > 0.0 { -diff[i] / n } else { 0.0 };
        g.head[i] = gi;
        g.relation[i] = gi;
        g.tail[i] = -gi;
    }
    -n
}
