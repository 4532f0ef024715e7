//! Covariance structure of the mixture X = a·W + b·B^H: the fBm closed form,
//! the Bm/fBm cross term by quadrature, the mixed covariance
//!
//!   R(t,s) = a²(t∧s) + ab ∫_0^{t∧s} [K_H(t,u) + K_H(s,u)] du + b² R_H(t,s),
//!
//! and the long-range-dependence diagnostics built on it.
//!
//! The cross integrals carry a u^{-β} singularity at the origin and an
//! algebraic kink where the integration range touches the kernel diagonal;
//! both ends get geometrically graded panels with a weighted Gauss rule on
//! the final panel, which keeps the absolute error near `abs_tol` — the
//! increment diagnostics difference values of order t^{2H} down to order δ²,
//! so the quadrature has to hold up under heavy cancellation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::kernels::KernelCtx;
use crate::operators;
use crate::params::{validate_hurst, ModelParams, QuadratureSpec};
use crate::quad::{jacobi_rule, legendre_rule};

/// Increment-covariance query: the lag-δ increments at t0 and at t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncrementQuery {
    t0: f64,
    delta: f64,
    t: f64,
}

impl IncrementQuery {
    pub fn new(t0: f64, delta: f64, t: f64) -> Result<Self> {
        if !(t0 >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "t0",
                value: t0,
                constraint: "base time must be nonnegative",
            });
        }
        if !(delta > 0.0) {
            return Err(Error::InvalidParameter {
                name: "delta",
                value: delta,
                constraint: "lag must be positive",
            });
        }
        if !(t >= t0) {
            return Err(Error::InvalidParameter {
                name: "t",
                value: t,
                constraint: "second increment must not start before the first",
            });
        }
        Ok(Self { t0, delta, t })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn t(&self) -> f64 {
        self.t
    }
}

/// fBm covariance R_H(t,s) = (t^{2H} + s^{2H} - |t-s|^{2H}) / 2.
///
/// Valid for any Hurst index in (0,1); H = 1/2 gives min(t,s).
pub fn fbm_cov(hurst: f64, t: f64, s: f64) -> f64 {
    debug_assert!(t >= 0.0 && s >= 0.0);
    let two_h = 2.0 * hurst;
    0.5 * (t.powf(two_h) + s.powf(two_h) - (t - s).abs().powf(two_h))
}

/// Cross covariance E[W_t B^H_s] = ∫_0^{t∧s} K_H(s,u) du.
pub fn cross_cov(hurst: f64, t: f64, s: f64, q: &QuadratureSpec) -> Result<f64> {
    validate_hurst(hurst)?;
    if t <= 0.0 || s <= 0.0 {
        return Ok(0.0);
    }
    let ctx = KernelCtx::new(hurst, q);
    Ok(kh_integral(&ctx, s, t.min(s), q))
}

/// Mixed covariance, Proposition-style composition of the three parts.
pub fn ccmfbm_cov(p: &ModelParams, t: f64, s: f64, q: &QuadratureSpec) -> Result<f64> {
    if t <= 0.0 || s <= 0.0 {
        return Ok(0.0);
    }
    let m = t.min(s);
    let a = p.a();
    let b = p.b();
    let mut cov = a * a * m + b * b * fbm_cov(p.hurst(), t, s);
    if b != 0.0 && a != 0.0 {
        let ctx = KernelCtx::new(p.hurst(), q);
        cov += a * b * (kh_integral(&ctx, t, m, q) + kh_integral(&ctx, s, m, q));
    }
    Ok(cov)
}

/// Incremental covariance
/// ρ_X(t0,δ;t) = E[(X_{t0+δ}-X_{t0})(X_{t+δ}-X_t)],
/// computed from the exact covariance function by the four-term difference.
pub fn incremental_cov(p: &ModelParams, iq: &IncrementQuery, q: &QuadratureSpec) -> Result<f64> {
    let (t0, d, t) = (iq.t0(), iq.delta(), iq.t());
    Ok(ccmfbm_cov(p, t0 + d, t + d, q)? - ccmfbm_cov(p, t0 + d, t, q)?
        - ccmfbm_cov(p, t0, t + d, q)?
        + ccmfbm_cov(p, t0, t, q)?)
}

/// Leading-order decay of ρ_X for t >> t0 + δ: the fBm term
/// b²·H(2H-1)·δ²·(t-t0)^{2H-2} plus the cross term
/// ab·δ²·c(H)·(t/t0)^{H-1/2}·(t-t0)^{H-3/2}. Both decay like t^{2H-2}.
pub fn lrd_asymptote(p: &ModelParams, iq: &IncrementQuery) -> Result<f64> {
    let (t0, d, t) = (iq.t0(), iq.delta(), iq.t());
    if !(t > t0 + d) {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            constraint: "asymptote requires t > t0 + delta",
        });
    }
    if !(t0 > 0.0) {
        return Err(Error::InvalidParameter {
            name: "t0",
            value: t0,
            constraint: "asymptote requires t0 > 0",
        });
    }
    let h = p.hurst();
    let beta = p.beta();
    let c = crate::kernels::c_of_h_unchecked(h);
    let fbm_term = p.b() * p.b() * h * (2.0 * h - 1.0) * d * d * (t - t0).powf(2.0 * h - 2.0);
    let cross_term =
        p.a() * p.b() * d * d * c * (t / t0).powf(beta) * (t - t0).powf(beta - 1.0);
    Ok(fbm_term + cross_term)
}

/// Full covariance table R(t_k, t_j), k,j = 1..N, on a grid.
///
/// The cross integrals are accumulated from per-cell kernel integrals
/// (the same cell convention the discretized operators use), so the table
/// costs one operator build rather than N²/2 scattered quadratures. Spot
/// agreement with `ccmfbm_cov` is part of the covariance test suite.
pub fn covariance_table(p: &ModelParams, grid: &TimeGrid, q: &QuadratureSpec) -> Vec<f64> {
    let n = grid.steps();
    let a = p.a();
    let b = p.b();
    let h = p.hurst();
    // cum[i][j] = ∫_0^{t_{j+1}} K_H(t_{i+1}, u) du
    let cum = if a != 0.0 && b != 0.0 {
        Some(operators::kernel_cell_cumulative(p.hurst(), grid, q))
    } else {
        None
    };
    let mut table = vec![0.0; n * n];
    for i in 0..n {
        let ti = grid.node(i + 1);
        for j in 0..=i {
            let tj = grid.node(j + 1);
            let mut cov = a * a * tj + b * b * fbm_cov(h, ti, tj);
            if let Some(cum) = &cum {
                cov += a * b * (cum[i * n + j] + cum[j * n + j]);
            }
            table[i * n + j] = cov;
            table[j * n + i] = cov;
        }
    }
    table
}

/// ∫_0^m K_H(x, u) du for 0 <= m <= x, by graded panels.
///
/// Near u = 0 the integrand behaves like u^{-β}(c0 + c1·u^{2β} + ...): the
/// final left panel uses a Gauss rule with weight u^{-β} and the geometric
/// grading makes its u^{2β} remainder negligible. When m reaches x the
/// integrand vanishes like (x-u)^β and the right end is graded the same way.
pub(crate) fn kh_integral(ctx: &KernelCtx, x: f64, m: f64, q: &QuadratureSpec) -> f64 {
    debug_assert!(m <= x * (1.0 + 1e-12));
    if m <= 0.0 {
        return 0.0;
    }
    let beta = ctx.beta;
    let n = q.node_count();
    let gl = legendre_rule(n);
    let touches_diagonal = m >= x * (1.0 - 1e-12);
    let upper_smooth = if touches_diagonal { 0.5 * m } else { m };

    // left end: tail [0, m·2^-jl] with weight u^-β, then geometric panels
    let jl = panel_depth(q.abs_tol(), 1.0 - beta);
    let tail = upper_smooth * 0.5f64.powi(jl);
    let rule_left = jacobi_rule(n, -beta);
    let mut acc = tail.powf(1.0 - beta) * rule_left.sum(|v| {
        let u = tail * v;
        u.powf(beta) * ctx.mg(x, u)
    });
    let mut lo = tail;
    while lo < upper_smooth * (1.0 - 1e-14) {
        let hi = (2.0 * lo).min(upper_smooth);
        acc += gl.integrate(lo, hi, |u| ctx.mg(x, u));
        lo = hi;
    }

    if touches_diagonal {
        // right end: K_H(m, m-y) = y^β · φ(m-y) with φ analytic
        let jr = panel_depth(q.abs_tol(), 1.0 + beta);
        let tail_r = 0.5 * m * 0.5f64.powi(jr);
        let rule_right = jacobi_rule(n, beta);
        acc += tail_r.powf(1.0 + beta) * rule_right.sum(|v| {
            let y = tail_r * v;
            ctx.mg_over_edge(x, m - y)
        });
        acc += graded_upper_panels(&gl, |u| ctx.mg(x, u), 0.5 * m, m - tail_r, m);
    }
    acc
}

/// Composite Gauss-Legendre over [lo, hi_end] with panels shrinking
/// geometrically toward the singular point m >= hi_end.
fn graded_upper_panels(
    gl: &crate::quad::GaussRule,
    mut f: impl FnMut(f64) -> f64,
    lo: f64,
    hi_end: f64,
    m: f64,
) -> f64 {
    let mut acc = 0.0;
    let mut prev = lo;
    let span = m - lo;
    for k in 1..=60 {
        let x = m - span * 0.5f64.powi(k);
        if x >= hi_end {
            break;
        }
        if x > prev {
            acc += gl.integrate(prev, x, &mut f);
            prev = x;
        }
    }
    if prev < hi_end {
        acc += gl.integrate(prev, hi_end, &mut f);
    }
    acc
}

/// ∫_0^m K_H(t, u)·K_H(s, u) du for m <= t∧s; same grading strategy with
/// weight u^{-2β} at the origin and (t∧s - u)^β (or ^{2β} when t = s) at the
/// diagonal end.
pub(crate) fn kh_product_integral(
    ctx: &KernelCtx,
    t: f64,
    s: f64,
    m: f64,
    q: &QuadratureSpec,
) -> f64 {
    if m <= 0.0 {
        return 0.0;
    }
    let beta = ctx.beta;
    let n = q.node_count();
    let gl = legendre_rule(n);
    let lower = t.min(s);
    let touches_diagonal = m >= lower * (1.0 - 1e-12);
    let both = touches_diagonal && (t - s).abs() <= 1e-12 * lower;
    let upper_smooth = if touches_diagonal { 0.5 * m } else { m };

    let jl = panel_depth(q.abs_tol(), 1.0 - 2.0 * beta);
    let tail = upper_smooth * 0.5f64.powi(jl);
    let rule_left = jacobi_rule(n, -2.0 * beta);
    let mut acc = tail.powf(1.0 - 2.0 * beta) * rule_left.sum(|v| {
        let u = tail * v;
        u.powf(2.0 * beta) * ctx.mg(t, u) * ctx.mg(s, u)
    });
    let mut lo = tail;
    while lo < upper_smooth * (1.0 - 1e-14) {
        let hi = (2.0 * lo).min(upper_smooth);
        acc += gl.integrate(lo, hi, |u| ctx.mg(t, u) * ctx.mg(s, u));
        lo = hi;
    }

    if touches_diagonal {
        let edge_pow = if both { 2.0 * beta } else { beta };
        let jr = panel_depth(q.abs_tol(), 1.0 + edge_pow);
        let tail_r = 0.5 * m * 0.5f64.powi(jr);
        let rule_right = jacobi_rule(n, edge_pow);
        let other = t.max(s);
        acc += tail_r.powf(1.0 + edge_pow) * rule_right.sum(|v| {
            let u = m - tail_r * v;
            if both {
                let phi = ctx.mg_over_edge(lower, u);
                phi * phi
            } else {
                ctx.mg_over_edge(lower, u) * ctx.mg(other, u)
            }
        });
        acc += graded_upper_panels(
            &gl,
            |u| ctx.mg(t, u) * ctx.mg(s, u),
            0.5 * m,
            m - tail_r,
            m,
        );
    }
    acc
}

/// Geometric panel count needed to push the end-panel mass (which scales
/// like width^decay) below `tol` relative to the whole.
fn panel_depth(tol: f64, decay: f64) -> i32 {
    let tol = tol.clamp(1e-15, 1e-2);
    ((-tol.log2()) / decay).ceil().clamp(8.0, 52.0) as i32
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn fbm_cov_trivial_values() {
        assert_relative_eq!(fbm_cov(0.75, 1.0, 1.0), 1.0);
        assert_relative_eq!(fbm_cov(0.75, 2.0, 1.0), 2f64.sqrt(), max_relative = 1e-15);
        // H = 1/2 degenerates to min(t,s)
        for (t, s) in [(0.3, 0.8), (1.5, 0.2), (2.0, 2.0)] {
            assert_relative_eq!(fbm_cov(0.5, t, s), t.min(s), max_relative = 1e-15);
        }
    }

    #[test]
    fn cross_cov_zero_edges() {
        assert_eq!(cross_cov(0.75, 0.0, 1.0, &q()).unwrap(), 0.0);
        assert_eq!(cross_cov(0.75, 1.0, 0.0, &q()).unwrap(), 0.0);
    }

    #[test]
    fn ccmfbm_cov_degenerate_mixtures() {
        let q = q();
        let bm = ModelParams::new_unchecked(1.5, 0.0, 0.75);
        assert_relative_eq!(
            ccmfbm_cov(&bm, 2.0, 0.7, &q).unwrap(),
            1.5 * 1.5 * 0.7,
            max_relative = 1e-14
        );
        let fbm = ModelParams::new_unchecked(0.0, 2.0, 0.75);
        assert_relative_eq!(
            ccmfbm_cov(&fbm, 2.0, 0.7, &q).unwrap(),
            4.0 * fbm_cov(0.75, 2.0, 0.7),
            max_relative = 1e-14
        );
    }

    #[test]
    fn ccmfbm_cov_symmetry() {
        let q = q();
        let p = ModelParams::new(1.0, 1.0, 0.75).unwrap();
        for (t, s) in [(0.9, 0.3), (1.7, 0.2), (0.45, 0.44)] {
            let a = ccmfbm_cov(&p, t, s, &q).unwrap();
            let b = ccmfbm_cov(&p, s, t, &q).unwrap();
            assert_eq!(a, b, "symmetry must be exact at ({t},{s})");
        }
    }

    #[test]
    fn increment_variance_nonnegative() {
        let q = q();
        let p = ModelParams::new(1.0, 1.0, 0.75).unwrap();
        let iq = IncrementQuery::new(0.4, 0.1, 0.4).unwrap();
        let v = incremental_cov(&p, &iq, &q).unwrap();
        assert!(v >= 0.0, "variance of an increment must be >= 0, got {v}");
    }

    #[test]
    fn disjoint_bm_increments_uncorrelated() {
        let q = q();
        let p = ModelParams::new_unchecked(1.3, 0.0, 0.75);
        let iq = IncrementQuery::new(0.2, 0.1, 0.9).unwrap();
        let v = incremental_cov(&p, &iq, &q).unwrap();
        assert!(v.abs() < 1e-12, "Bm increments are independent, got {v}");
    }

    #[test]
    fn asymptote_scales_as_delta_squared() {
        let p = ModelParams::new(1.0, 1.0, 0.75).unwrap();
        let a1 = lrd_asymptote(&p, &IncrementQuery::new(0.1, 0.01, 8.0).unwrap()).unwrap();
        let a2 = lrd_asymptote(&p, &IncrementQuery::new(0.1, 0.02, 8.0).unwrap()).unwrap();
        assert_relative_eq!(a2 / a1, 4.0, max_relative = 1e-12);
    }

    #[test]
    fn asymptote_requires_separation() {
        let p = ModelParams::new(1.0, 1.0, 0.75).unwrap();
        let iq = IncrementQuery::new(0.1, 0.05, 0.12).unwrap();
        assert!(lrd_asymptote(&p, &iq).is_err());
    }

    #[test]
    fn fbm_term_dominates_cross_term_at_large_t() {
        // exponent comparison: 2H-2 > H-3/2 for H > 1/2
        let p = ModelParams::new(1.0, 1.0, 0.75).unwrap();
        let h = p.hurst();
        for t in [64.0, 256.0] {
            let fbm_term = h * (2.0 * h - 1.0) * (t - 0.1f64).powf(2.0 * h - 2.0);
            let c = crate::kernels::c_of_h_unchecked(h);
            let cross =
                c * (t / 0.1f64).powf(h - 0.5) * (t - 0.1f64).powf(h - 1.5);
            assert!(fbm_term / cross > (t / 8.0).powf(h - 0.5) * 0.1);
        }
        let r64 = {
            let iq = IncrementQuery::new(0.1, 0.01, 64.0).unwrap();
            lrd_asymptote(&p, &iq).unwrap()
        };
        assert!(r64 > 0.0);
    }
}
