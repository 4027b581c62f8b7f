//! Poincaré-ball geometry with curvature `c > 0` (ball radius `1/√c`),
//! plus the Givens rotations/reflections and tangent-space attention used by AttH.
//!
//! The `*_vjp` functions are reverse-mode derivatives: given an upstream
//! gradient on the output they return gradients on the inputs and on `c`.

use crate::error::{Error, Result};

/// Points are kept within `(1 - BALL_EPS) / √c` of the origin.
pub const BALL_EPS: f64 = 1e-5;
/// Upper clamp on the `artanh` argument.
pub const ARTANH_MAX: f64 = 1.0 - 1e-15;
/// Below this `√c·‖v‖`, exp-map factors use their Taylor series.
const SERIES_CUTOFF: f64 = 1e-3;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn artanh(x: f64) -> f64 {
    0.5 * ((1.0 + x) / (1.0 - x)).ln()
}

/// `tanh(x)/x` and its derivative.
fn tanh_ratio(x: f64) -> (f64, f64) {
    if x < SERIES_CUTOFF {
        let x2 = x * x;
        (1.0 - x2 / 3.0 + 2.0 * x2 * x2 / 15.0, -2.0 * x / 3.0 + 8.0 * x2 * x / 15.0)
    } else {
        let t = x.tanh();
        let sech2 = 1.0 - t * t;
        (t / x, (x * sech2 - t) / (x * x))
    }
}

fn check_curvature(c: f64) -> Result<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("curvature must be positive, got {c}")))
    }
}

fn check_finite(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(name.to_string()))
    }
}

fn check_same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() == b.len() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("dimension mismatch {} vs {}", a.len(), b.len())))
    }
}

pub(crate) fn max_norm(c: f64) -> f64 {
    (1.0 - BALL_EPS) / c.sqrt()
}

pub(crate) fn project_raw(x: &[f64], c: f64) -> Vec<f64> {
    let n = norm(x);
    let m = max_norm(c);
    if n > m {
        x.iter().map(|v| v * m / n).collect()
    } else {
        x.to_vec()
    }
}

pub(crate) fn project_vjp(x: &[f64], c: f64, up: &[f64]) -> (Vec<f64>, f64) {
    let n = norm(x);
    let m = max_norm(c);
    if n <= m {
        return (up.to_vec(), 0.0);
    }
    let ux = dot(up, x);
    let mut gx: Vec<f64> = up.iter().map(|u| u * m / n).collect();
    axpy(-m * ux / (n * n * n), x, &mut gx);
    (gx, -(ux / n) * m / (2.0 * c))
}

pub(crate) fn mobius_add_raw(x: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let xy = dot(x, y);
    let x2 = dot(x, x);
    let y2 = dot(y, y);
    let a = 1.0 + 2.0 * c * xy + c * y2;
    let b = 1.0 - c * x2;
    let d = 1.0 + 2.0 * c * xy + c * c * x2 * y2;
    x.iter().zip(y).map(|(xi, yi)| (a * xi + b * yi) / d).collect()
}

/// Gradients of `mobius_add(x, y, c)` given the upstream gradient `up`.
pub(crate) fn mobius_add_vjp(x: &[f64], y: &[f64], c: f64, up: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
    let xy = dot(x, y);
    let x2 = dot(x, x);
    let y2 = dot(y, y);
    let a = 1.0 + 2.0 * c * xy + c * y2;
    let b = 1.0 - c * x2;
    let d = 1.0 + 2.0 * c * xy + c * c * x2 * y2;
    let ux = dot(up, x);
    let uy = dot(up, y);
    // numerator N = a x + b y
    let un = a * ux + b * uy;
    let k = un / (d * d);

    let mut gx: Vec<f64> = up.iter().map(|u| a * u / d).collect();
    axpy(2.0 * c * ux / d, y, &mut gx);
    axpy(-2.0 * c * uy / d, x, &mut gx);
    axpy(-k * 2.0 * c, y, &mut gx);
    axpy(-k * 2.0 * c * c * y2, x, &mut gx);

    let mut gy: Vec<f64> = up.iter().map(|u| b * u / d).collect();
    axpy(2.0 * c * ux / d, x, &mut gy);
    axpy(2.0 * c * ux / d, y, &mut gy);
    axpy(-k * 2.0 * c, x, &mut gy);
    axpy(-k * 2.0 * c * c * x2, y, &mut gy);

    let gc = (ux * (2.0 * xy + y2) - uy * x2) / d - k * (2.0 * xy + 2.0 * c * x2 * y2);
    (gx, gy, gc)
}

/// Exponential map at the origin, without projection.
pub(crate) fn exp_map0_raw(v: &[f64], c: f64) -> Vec<f64> {
    let s = c.sqrt();
    let (g, _) = tanh_ratio(s * norm(v));
    v.iter().map(|x| g * x).collect()
}

pub(crate) fn exp_map0_vjp(v: &[f64], c: f64, up: &[f64]) -> (Vec<f64>, f64) {
    let s = c.sqrt();
    let n = norm(v);
    let (g, dg) = tanh_ratio(s * n);
    let uv = dot(up, v);
    let mut gv: Vec<f64> = up.iter().map(|u| g * u).collect();
    if n > 0.0 {
        axpy(dg * s * uv / n, v, &mut gv);
    }
    (gv, dg * n / (2.0 * s) * uv)
}

pub(crate) fn log_map0_raw(x: &[f64], c: f64) -> Vec<f64> {
    let s = c.sqrt();
    let arg = (s * norm(x)).min(ARTANH_MAX);
    if arg < SERIES_CUTOFF {
        // artanh(a)/a = 1 + a²/3 + a⁴/5
        let a2 = arg * arg;
        let f = 1.0 + a2 / 3.0 + a2 * a2 / 5.0;
        return x.iter().map(|v| f * v).collect();
    }
    let f = artanh(arg) / arg;
    x.iter().map(|v| f * v).collect()
}

/// Exponential map then projection into the ball.
pub(crate) fn to_ball(v: &[f64], c: f64) -> (Vec<f64>, Vec<f64>) {
    let raw = exp_map0_raw(v, c);
    let p = project_raw(&raw, c);
    (raw, p)
}

/// Backward through [`to_ball`].
pub(crate) fn to_ball_vjp(v: &[f64], raw: &[f64], c: f64, up: &[f64]) -> (Vec<f64>, f64) {
    let (g_raw, c1) = project_vjp(raw, c, up);
    let (gv, c2) = exp_map0_vjp(v, c, &g_raw);
    (gv, c1 + c2)
}

pub(crate) fn distance_raw(x: &[f64], y: &[f64], c: f64) -> f64 {
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    let m = norm(&mobius_add_raw(&neg, y, c));
    let s = c.sqrt();
    2.0 / s * artanh((s * m).min(ARTANH_MAX))
}

/// Distance and its gradients with respect to `x`, `y` and `c`.
pub(crate) fn distance_vjp(x: &[f64], y: &[f64], c: f64) -> (f64, Vec<f64>, Vec<f64>, f64) {
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    let v = mobius_add_raw(&neg, y, c);
    let m = norm(&v);
    let s = c.sqrt();
    let raw_arg = s * m;
    let clamped = raw_arg > ARTANH_MAX;
    let arg = raw_arg.min(ARTANH_MAX);
    let d = 2.0 / s * artanh(arg);
    let (dm, ds) = if clamped {
        (0.0, -2.0 * artanh(arg) / (s * s))
    } else {
        let denom = 1.0 - arg * arg;
        (2.0 / denom, 2.0 * m / (s * denom) - 2.0 * artanh(arg) / (s * s))
    };
    let mut gc = ds / (2.0 * s);
    if m == 0.0 || dm == 0.0 {
        return (d, vec![0.0; x.len()], vec![0.0; y.len()], gc);
    }
    let gv: Vec<f64> = v.iter().map(|vi| dm * vi / m).collect();
    let (gneg, gy, gc2) = mobius_add_vjp(&neg, y, c, &gv);
    gc += gc2;
    (d, gneg.into_iter().map(|g| -g).collect(), gy, gc)
}

/// 2×2 rotations on consecutive coordinate pairs.
pub(crate) fn rotate_raw(x: &[f64], angles: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for (j, &a) in angles.iter().enumerate() {
        let (sin, cos) = a.sin_cos();
        let (x0, x1) = (x[2 * j], x[2 * j + 1]);
        out[2 * j] = cos * x0 - sin * x1;
        out[2 * j + 1] = sin * x0 + cos * x1;
    }
    out
}

pub(crate) fn rotate_vjp(x: &[f64], angles: &[f64], up: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut gx = vec![0.0; x.len()];
    let mut ga = vec![0.0; angles.len()];
    for (j, &a) in angles.iter().enumerate() {
        let (sin, cos) = a.sin_cos();
        let (x0, x1) = (x[2 * j], x[2 * j + 1]);
        let (u0, u1) = (up[2 * j], up[2 * j + 1]);
        gx[2 * j] = cos * u0 + sin * u1;
        gx[2 * j + 1] = -sin * u0 + cos * u1;
        ga[j] = u0 * (-sin * x0 - cos * x1) + u1 * (cos * x0 - sin * x1);
    }
    (gx, ga)
}

/// 2×2 reflections `[[cos, sin], [sin, -cos]]` on consecutive coordinate pairs.
pub(crate) fn reflect_raw(x: &[f64], angles: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for (j, &a) in angles.iter().enumerate() {
        let (sin, cos) = a.sin_cos();
        let (x0, x1) = (x[2 * j], x[2 * j + 1]);
        out[2 * j] = cos * x0 + sin * x1;
        out[2 * j + 1] = sin * x0 - cos * x1;
    }
    out
}

pub(crate) fn reflect_vjp(x: &[f64], angles: &[f64], up: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut gx = vec![0.0; x.len()];
    let mut ga = vec![0.0; angles.len()];
    for (j, &a) in angles.iter().enumerate() {
        let (sin, cos) = a.sin_cos();
        let (x0, x1) = (x[2 * j], x[2 * j + 1]);
        let (u0, u1) = (up[2 * j], up[2 * j + 1]);
        gx[2 * j] = cos * u0 + sin * u1;
        gx[2 * j + 1] = sin * u0 - cos * u1;
        ga[j] = u0 * (-sin * x0 + cos * x1) + u1 * (cos * x0 + sin * x1);
    }
    (gx, ga)
}

/// Softmax attention over two tangent vectors, logits `<a, t_k>/√d`.
/// Returns the weighted combination and the two weights.
pub(crate) fn attention_tangent(a: &[f64], t_rot: &[f64], t_ref: &[f64]) -> (Vec<f64>, [f64; 2]) {
    let scale = 1.0 / (a.len() as f64).sqrt();
    let s0 = scale * dot(a, t_rot);
    let s1 = scale * dot(a, t_ref);
    let mx = s0.max(s1);
    let (e0, e1) = ((s0 - mx).exp(), (s1 - mx).exp());
    let w = [e0 / (e0 + e1), e1 / (e0 + e1)];
    let out = t_rot.iter().zip(t_ref).map(|(p, q)| w[0] * p + w[1] * q).collect();
    (out, w)
}

/// Backward through [`attention_tangent`]: gradients on `a`, `t_rot`, `t_ref`.
pub(crate) fn attention_tangent_vjp(
    a: &[f64],
    t_rot: &[f64],
    t_ref: &[f64],
    up: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let scale = 1.0 / (a.len() as f64).sqrt();
    let (u, w) = attention_tangent(a, t_rot, t_ref);
    let uu = dot(up, &u);
    let gs = [w[0] * (dot(up, t_rot) - uu), w[1] * (dot(up, t_ref) - uu)];
    let mut ga = vec![0.0; a.len()];
    axpy(scale * gs[0], t_rot, &mut ga);
    axpy(scale * gs[1], t_ref, &mut ga);
    let mut g_rot: Vec<f64> = up.iter().map(|x| w[0] * x).collect();
    axpy(scale * gs[0], a, &mut g_rot);
    let mut g_ref: Vec<f64> = up.iter().map(|x| w[1] * x).collect();
    axpy(scale * gs[1], a, &mut g_ref);
    (ga, g_rot, g_ref)
}

// Checked public kernel.

/// Möbius addition `x ⊕_c y`.
pub fn mobius_add(x: &[f64], y: &[f64], c: f64) -> Result<Vec<f64>> {
    check_curvature(c)?;
    check_same_len(x, y)?;
    check_finite("mobius_add input", x)?;
    check_finite("mobius_add input", y)?;
    Ok(mobius_add_raw(&project_raw(x, c), &project_raw(y, c), c))
}

/// Maps a tangent vector at the origin into the ball.
pub fn exp_map0(v: &[f64], c: f64) -> Result<Vec<f64>> {
    check_curvature(c)?;
    check_finite("exp_map0 input", v)?;
    Ok(to_ball(v, c).1)
}

/// Maps a ball point to the tangent space at the origin.
pub fn log_map0(x: &[f64], c: f64) -> Result<Vec<f64>> {
    check_curvature(c)?;
    check_finite("log_map0 input", x)?;
    Ok(log_map0_raw(&project_raw(x, c), c))
}

/// Geodesic distance `(2/√c)·artanh(√c·‖(−x) ⊕_c y‖)`.
pub fn hyp_distance(x: &[f64], y: &[f64], c: f64) -> Result<f64> {
    check_curvature(c)?;
    check_same_len(x, y)?;
    check_finite("hyp_distance input", x)?;
    check_finite("hyp_distance input", y)?;
    Ok(distance_raw(&project_raw(x, c), &project_raw(y, c), c))
}

fn check_pairs(x: &[f64], angles: &[f64]) -> Result<()> {
    if x.len() % 2 != 0 || angles.len() * 2 != x.len() {
        return Err(Error::InvalidArgument(format!(
            "{} coordinates need {} angles, got {}",
            x.len(),
            x.len() / 2,
            angles.len()
        )));
    }
    check_finite("givens input", x)?;
    check_finite("givens angles", angles)
}

pub fn givens_rotate(x: &[f64], angles: &[f64]) -> Result<Vec<f64>> {
    check_pairs(x, angles)?;
    Ok(rotate_raw(x, angles))
}

pub fn givens_reflect(x: &[f64], angles: &[f64]) -> Result<Vec<f64>> {
    check_pairs(x, angles)?;
    Ok(reflect_raw(x, angles))
}

/// Attention-weighted combination of two ball points: both are taken to the
/// tangent space at the origin, weighted by a softmax of `<a, ·>/√d`, summed
/// and mapped back.
pub fn hyp_attention(a: &[f64], p_rot: &[f64], p_ref: &[f64], c: f64) -> Result<Vec<f64>> {
    check_curvature(c)?;
    check_same_len(a, p_rot)?;
    check_same_len(a, p_ref)?;
    for v in [a, p_rot, p_ref] {
        check_finite("hyp_attention input", v)?;
    }
    let t_rot = log_map0_raw(&project_raw(p_rot, c), c);
    let t_ref = log_map0_raw(&project_raw(p_ref, c), c);
    let (u, _) = attention_tangent(a, &t_rot, &t_ref);
    Ok(to_ball(&u, c).1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn identities() {
        let y = [0.1, -0.4, 0.2];
        assert_eq!(mobius_add(&[0.0; 3], &y, 1.3).unwrap(), y.to_vec());
        let x = [0.3, 0.1, -0.2];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!(close(&mobius_add(&neg, &x, 0.7).unwrap(), &[0.0; 3], 1e-15));
        assert_eq!(hyp_distance(&x, &x, 2.0).unwrap(), 0.0);
        let v = [1e-3, -2e-3, 5e-4];
        assert!(close(&log_map0(&exp_map0(&v, 1.0).unwrap(), 1.0).unwrap(), &v, 1e-12));
    }

    #[test]
    fn distance_matches_arcosh_form() {
        // closed form: arcosh(1 + 2|x-y|² / ((1-|x|²)(1-|y|²))) for c = 1
        let x = [0.3, 0.0];
        let y = [-0.3, 0.0];
        let oracle = (1.0f64 + 2.0 * 0.36 / (0.91 * 0.91)).acosh();
        let d = hyp_distance(&x, &y, 1.0).unwrap();
        assert!((d - oracle).abs() < 1e-12, "{d} vs {oracle}");
        assert!((d - 2.0 * artanh(0.6 / 1.09)).abs() < 1e-12);
        assert!((d - 1.2380_8).abs() < 1e-4);
    }

    #[test]
    fn bad_inputs() {
        assert!(mobius_add(&[0.1], &[0.2], 0.0).is_err());
        assert!(exp_map0(&[f64::NAN], 1.0).is_err());
        assert!(hyp_distance(&[0.1, 0.2], &[0.1], 1.0).is_err());
        assert!(givens_rotate(&[1.0, 2.0, 3.0], &[0.1]).is_err());
        assert!(hyp_attention(&[1.0, 0.0], &[0.1, 0.1], &[0.2, 0.0], -1.0).is_err());
    }

    #[test]
    fn projection_keeps_points_inside() {
        let p = exp_map0(&[50.0, 50.0], 1.0).unwrap();
        assert!(norm(&p) <= max_norm(1.0) + 1e-15);
        let q = mobius_add(&[0.99999, 0.0], &[0.99999, 0.0], 1.0).unwrap();
        assert!(norm(&q) < 1.0);
    }

    #[test]
    fn reflect_is_involution_rotate_preserves_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
            let a: Vec<f64> = (0..3).map(|_| rng.random_range(-3.2..3.2)).collect();
            let r = givens_reflect(&givens_reflect(&x, &a).unwrap(), &a).unwrap();
            assert!(close(&r, &x, 1e-12));
            let rot = givens_rotate(&x, &a).unwrap();
            assert!((norm(&rot) - norm(&x)).abs() < 1e-12);
        }
    }

    #[test]
    fn attention_point_and_tangent_forms_agree() {
        let a = [0.5, -1.0, 0.25, 2.0];
        let u1 = [0.2, 0.1, -0.3, 0.05];
        let u2 = [-0.1, 0.4, 0.2, 0.0];
        let c = 0.8;
        let p = hyp_attention(&a, &exp_map0(&u1, c).unwrap(), &exp_map0(&u2, c).unwrap(), c).unwrap();
        let (u, w) = attention_tangent(&a, &u1, &u2);
        assert!((w[0] + w[1] - 1.0).abs() < 1e-15);
        assert!(close(&p, &exp_map0(&u, c).unwrap(), 1e-12));
    }

    fn fd_check(f: impl Fn(&[f64]) -> f64, x: &[f64], grad: &[f64]) {
        let eps = 1e-6;
        for i in 0..x.len() {
            let mut p = x.to_vec();
            p[i] += eps;
            let mut m = x.to_vec();
            m[i] -= eps;
            let fd = (f(&p) - f(&m)) / (2.0 * eps);
            assert!((fd - grad[i]).abs() < 1e-6 * (1.0 + fd.abs()), "coord {i}: fd {fd} vs {}", grad[i]);
        }
    }

    #[test]
    fn vjps_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let d = 4;
            let rv = |rng: &mut ChaCha8Rng, s: f64| -> Vec<f64> { (0..d).map(|_| rng.random_range(-s..s)).collect() };
            let x = rv(&mut rng, 0.4);
            let y = rv(&mut rng, 0.4);
            let up = rv(&mut rng, 1.0);
            let c = rng.random_range(0.3..2.0);

            let (gx, gy, gc) = mobius_add_vjp(&x, &y, c, &up);
            let f = |x: &[f64], y: &[f64], c: f64| dot(&mobius_add_raw(x, y, c), &up);
            fd_check(|v| f(v, &y, c), &x, &gx);
            fd_check(|v| f(&x, v, c), &y, &gy);
            fd_check(|v| f(&x, &y, v[0]), &[c], &[gc]);

            let v = rv(&mut rng, 1.5);
            let (gv, gc) = exp_map0_vjp(&v, c, &up);
            let f = |v: &[f64], c: f64| dot(&exp_map0_raw(v, c), &up);
            fd_check(|w| f(w, c), &v, &gv);
            fd_check(|w| f(&v, w[0]), &[c], &[gc]);

            let (_, gx, gy, gc) = distance_vjp(&x, &y, c);
            fd_check(|w| distance_raw(w, &y, c), &x, &gx);
            fd_check(|w| distance_raw(&x, w, c), &y, &gy);
            fd_check(|w| distance_raw(&x, &y, w[0]), &[c], &[gc]);

            let far: Vec<f64> = x.iter().map(|v| v * 10.0).collect();
            let (gp, gc) = project_vjp(&far, c, &up);
            fd_check(|w| dot(&project_raw(w, c), &up), &far, &gp);
            fd_check(|w| dot(&project_raw(&far, w[0]), &up), &[c], &[gc]);

            let ang = rv(&mut rng, 3.0)[..2].to_vec();
            let (gx, ga) = rotate_vjp(&x, &ang, &up);
            fd_check(|w| dot(&rotate_raw(w, &ang), &up), &x, &gx);
            fd_check(|w| dot(&rotate_raw(&x, w), &up), &ang, &ga);
            let (gx, ga) = reflect_vjp(&x, &ang, &up);
            fd_check(|w| dot(&reflect_raw(w, &ang), &up), &x, &gx);
            fd_check(|w| dot(&reflect_raw(&x, w), &up), &ang, &ga);

            let a = rv(&mut rng, 2.0);
            let (ga, g1, g2) = attention_tangent_vjp(&a, &x, &y, &up);
            let f = |a: &[f64], p: &[f64], q: &[f64]| dot(&attention_tangent(a, p, q).0, &up);
            fd_check(|w| f(w, &x, &y), &a, &ga);
            fd_check(|w| f(&a, w, &y), &x, &g1);
            fd_check(|w| f(&a, &x, w), &y, &g2);
        }
    }
}
