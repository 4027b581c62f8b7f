//! AttH: attention over a hyperbolic rotation and reflection of the head,
//! followed by a Möbius translation, scored by negative squared geodesic
//! distance plus entity biases.
//!
//! Entity row: `[tangent vector (d), bias]`.
//! Relation row: `[rotation angles (d/2), reflection angles (d/2),
//! translation (d), attention (d), curvature]`.

use super::hyperbolic::*;
use super::TripleGradient;

struct RelationView<'a> {
    rot: &'a [f64],
    refl: &'a [f64],
    trans: &'a [f64],
    attn: &'a [f64],
    c: f64,
}

fn split(r: &[f64], dim: usize) -> RelationView<'_> {
    let k = dim / 2;
    RelationView {
        rot: &r[..k],
        refl: &r[k..2 * k],
        trans: &r[2 * k..2 * k + dim],
        attn: &r[2 * k + dim..2 * k + 2 * dim],
        c: r[2 * k + 2 * dim],
    }
}

pub(crate) fn relation_width(dim: usize) -> usize {
    3 * dim + 1
}

pub(crate) fn curvature_offset(dim: usize) -> usize {
    3 * dim
}

/// Query point: attention-combined rotation/reflection of the head, translated.
pub(crate) fn query(h: &[f64], r: &[f64], dim: usize) -> Vec<f64> {
    let rel = split(r, dim);
    let e = &h[..dim];
    let (u, _) = attention_tangent(rel.attn, &rotate_raw(e, rel.rot), &reflect_raw(e, rel.refl));
    let (_, x) = to_ball(&u, rel.c);
    let (_, y) = to_ball(rel.trans, rel.c);
    project_raw(&mobius_add_raw(&x, &y, rel.c), rel.c)
}

pub(crate) fn score(h: &[f64], r: &[f64], t: &[f64], dim: usize) -> f64 {
    let c = split(r, dim).c;
    let q = query(h, r, dim);
    let (_, w) = to_ball(&t[..dim], c);
    let d = distance_raw(&q, &w, c);
    -d * d + h[dim] + t[dim]
}

pub(crate) fn gradient(h: &[f64], r: &[f64], t: &[f64], dim: usize, g: &mut TripleGradient) -> f64 {
    let rel = split(r, dim);
    let c = rel.c;
    let e = &h[..dim];

    let t_rot = rotate_raw(e, rel.rot);
    let t_ref = reflect_raw(e, rel.refl);
    let (u, _) = attention_tangent(rel.attn, &t_rot, &t_ref);
    let (x_raw, x) = to_ball(&u, c);
    let (y_raw, y) = to_ball(rel.trans, c);
    let z_raw = mobius_add_raw(&x, &y, c);
    let z = project_raw(&z_raw, c);
    let (w_raw, w) = to_ball(&t[..dim], c);
    let (d, gz, gw, mut gc) = distance_vjp(&z, &w, c);
    let score = -d * d + h[dim] + t[dim];

    let scale = -2.0 * d;
    let gz: Vec<f64> = gz.iter().map(|v| v * scale).collect();
    let gw: Vec<f64> = gw.iter().map(|v| v * scale).collect();
    gc *= scale;

    let (ge_t, c1) = to_ball_vjp(&t[..dim], &w_raw, c, &gw);
    let (gz_raw, c2) = project_vjp(&z_raw, c, &gz);
    let (gx, gy, c3) = mobius_add_vjp(&x, &y, c, &gz_raw);
    let (g_trans, c4) = to_ball_vjp(rel.trans, &y_raw, c, &gy);
    let (gu, c5) = to_ball_vjp(&u, &x_raw, c, &gx);
    let (g_attn, g_rot_out, g_ref_out) = attention_tangent_vjp(rel.attn, &t_rot, &t_ref, &gu);
    let (ge_rot, g_rot) = rotate_vjp(e, rel.rot, &g_rot_out);
    let (ge_ref, g_ref) = reflect_vjp(e, rel.refl, &g_ref_out);

    let k = dim / 2;
    for i in 0..dim {
        g.head[i] = ge_rot[i] + ge_ref[i];
        g.tail[i] = ge_t[i];
        g.relation[2 * k + i] = g_trans[i];
        g.relation[2 * k + dim + i] = g_attn[i];
    }
    g.head[dim] = 1.0;
    g.tail[dim] = 1.0;
    g.relation[..k].copy_from_slice(&g_rot);
    g.relation[k..2 * k].copy_from_slice(&g_ref);
    g.relation[curvature_offset(dim)] = gc + c1 + c2 + c3 + c4 + c5;
    score
}
