//! DistMult: diagonal bilinear form `Σ h_i r_i t_i`.

use super::TripleGradient;

pub(crate) fn score(h: &[f64], r: &[f64], t: &[f64]) -> f64 {
    h.iter().zip(r).zip(t).map(|((h, r), t)| h * r * t).sum()
}

pub(crate) fn gradient(h: &[f64], r: &[f64], t: &[f64], g: &mut TripleGradient) -> f64 {
    for i in 0..h.len() {
        g.head[i] = r[i] * t[i];
        g.relation[i] = h[i] * t[i];
        g.tail[i] = h[i] * r[i];
    }
    score(h, r, t)
}
