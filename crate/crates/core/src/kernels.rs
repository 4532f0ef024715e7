//! Pointwise evaluation of the scalar kernels: the normalization c(H), the
//! Molchan-Golosov kernel K_H and its t-derivative, the mixed kernel
//! L(t,s) = a·1_{[0,t)}(s) + b·K_H(t,s), the iterated kernels γ_k, and the
//! inverse kernel
//!
//!   L^{-1}(t,s) = (1/a)·1_{[0,t)}(s) + (1/a)·Σ_{k≥1} (-1)^k (b/a)^k γ_k(t,s).
//!
//! All integrals reduce to ∫_0^1 (s + (t-s)v)^β v^{σ-1} dv with β = H - 1/2
//! and σ = kβ, which a Gauss-Jacobi rule with weight v^{σ-1} evaluates to
//! machine precision: the algebraic endpoint factor is carried by the weight
//! exactly, for every k. Everything here is a pure function of its inputs.

use std::sync::Arc;

use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::params::{validate_hurst, ModelParams, QuadratureSpec, SeriesSpec};
use crate::quad::{jacobi_rule, GaussRule};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_74;

/// Normalization constant of the Molchan-Golosov kernel,
/// sqrt(2H·Γ(3/2-H) / (Γ(H+1/2)·Γ(2-2H))) · (H-1/2).
pub fn c_of_h(hurst: f64) -> Result<f64> {
    validate_hurst(hurst)?;
    Ok(c_of_h_unchecked(hurst))
}

pub(crate) fn c_of_h_unchecked(hurst: f64) -> f64 {
    let num = 2.0 * hurst * gamma(1.5 - hurst);
    let den = gamma(hurst + 0.5) * gamma(2.0 - 2.0 * hurst);
    (num / den).sqrt() * (hurst - 0.5)
}

/// ∫_s^t u^β (u-s)^{σ-1} du with a rule carrying the weight v^{σ-1}.
///
/// For s >= t-s the affine map to [0,1] has its branch point at
/// v = -s/(t-s) <= -1 and one weighted rule is spectrally accurate. For
/// smaller s the branch point crowds the interval, so the range splits at
/// u = 2s: the weighted rule handles [s, 2s] and octave-doubling
/// Gauss-Legendre panels cover the rest, keeping every panel a fixed
/// distance from both u = s and u = 0 relative to its width.
pub(crate) fn power_tail_integral(
    beta: f64,
    sigma: f64,
    t: f64,
    s: f64,
    rule: &GaussRule,
    gl: &GaussRule,
) -> f64 {
    let d = t - s;
    if d <= 0.0 {
        return 0.0;
    }
    if s >= d {
        return d.powf(sigma) * rule.sum(|v| (s + d * v).powf(beta));
    }
    let mut acc = s.powf(sigma) * rule.sum(|v| (s + s * v).powf(beta));
    let mut lo = 2.0 * s;
    let mut width = 2.0 * s;
    while lo < t {
        let hi = (lo + width).min(t);
        acc += gl.integrate(lo, hi, |u| u.powf(beta) * (u - s).powf(sigma - 1.0));
        lo = hi;
        width *= 2.0;
    }
    acc
}

/// Shared per-(H, quadrature) state for kernel evaluation hot loops.
#[derive(Clone)]
pub(crate) struct KernelCtx {
    pub beta: f64,
    pub c: f64,
    rule: Arc<GaussRule>,
    gl: Arc<GaussRule>,
}

impl KernelCtx {
    /// `hurst` must already be validated.
    pub fn new(hurst: f64, q: &QuadratureSpec) -> Self {
        let beta = hurst - 0.5;
        Self {
            beta,
            c: c_of_h_unchecked(hurst),
            rule: jacobi_rule(q.node_count(), beta - 1.0),
            gl: crate::quad::legendre_rule(16),
        }
    }

    /// K_H(t, s) for s > 0; zero when s >= t.
    pub fn mg(&self, t: f64, s: f64) -> f64 {
        if s >= t {
            return 0.0;
        }
        let beta = self.beta;
        let integral = power_tail_integral(beta, beta, t, s, &self.rule, &self.gl);
        self.c * s.powf(-beta) * integral
    }

    /// K_H(t, s) with the (t-s)^β endpoint factor removed:
    /// K_H(t,s) = (t-s)^β · φ(s). φ is analytic in s up to s = t; only
    /// meaningful near the diagonal (s >= t-s), where a single rule is exact.
    pub fn mg_over_edge(&self, t: f64, s: f64) -> f64 {
        let beta = self.beta;
        let d = t - s;
        debug_assert!(s >= d, "edge-removed kernel is for the near-diagonal regime");
        let sum = self.rule.sum(|v| (s + d * v).powf(beta));
        self.c * s.powf(-beta) * sum
    }
}

/// Molchan-Golosov kernel
/// K_H(t,s) = c(H)·s^{-(H-1/2)} ∫_s^t u^{H-1/2} (u-s)^{H-3/2} du.
///
/// Volterra: returns 0 for s >= t. The integrable (u-s)^{H-3/2} endpoint
/// factor is absorbed into the quadrature weight.
pub fn mg_kernel(hurst: f64, t: f64, s: f64, q: &QuadratureSpec) -> Result<f64> {
    validate_hurst(hurst)?;
    require_positive_column(s)?;
    if t < 0.0 {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            constraint: "t must be nonnegative",
        });
    }
    Ok(KernelCtx::new(hurst, q).mg(t, s))
}

/// ∂K_H/∂t(t,s) = c(H)·(t/s)^{H-1/2}·(t-s)^{H-3/2}, closed form.
pub fn mg_kernel_dt(hurst: f64, t: f64, s: f64) -> Result<f64> {
    validate_hurst(hurst)?;
    require_positive_column(s)?;
    if s >= t {
        return Err(Error::InvalidParameter {
            name: "s",
            value: s,
            constraint: "the derivative requires s < t",
        });
    }
    let beta = hurst - 0.5;
    Ok(c_of_h_unchecked(hurst) * (t / s).powf(beta) * (t - s).powf(beta - 1.0))
}

/// Transfer kernel L(t,s) = a·1_{[0,t)}(s) + b·K_H(t,s).
///
/// The indicator is half-open, so L(t,t) = 0.
pub fn l_kernel(p: &ModelParams, t: f64, s: f64, q: &QuadratureSpec) -> Result<f64> {
    require_positive_column(s)?;
    let indicator = if s < t { p.a() } else { 0.0 };
    Ok(indicator + p.b() * mg_kernel(p.hurst(), t, s, q)?)
}

/// ln of the coefficient c(H)^k Γ(β)^k / Γ(kβ) of γ_k, with β = H - 1/2.
fn ln_gamma_coeff(c: f64, beta: f64, k: usize) -> f64 {
    let kf = k as f64;
    kf * (c.ln() + ln_gamma(beta)) - ln_gamma(kf * beta)
}

/// Iterated kernel
/// γ_k(t,s) = c(H)^k Γ(β)^k / Γ(kβ) · s^{-β} ∫_s^t u^β (u-s)^{kβ-1} du.
///
/// γ_1 coincides with K_H. Zero when s >= t.
pub fn gamma_k(hurst: f64, k: usize, t: f64, s: f64, q: &QuadratureSpec) -> Result<f64> {
    validate_hurst(hurst)?;
    require_positive_column(s)?;
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "k",
            value: 0.0,
            constraint: "iterated-kernel index starts at 1",
        });
    }
    if s >= t {
        return Ok(0.0);
    }
    let beta = hurst - 0.5;
    let c = c_of_h_unchecked(hurst);
    let rule = jacobi_rule(q.node_count(), k as f64 * beta - 1.0);
    let gl = crate::quad::legendre_rule(16);
    Ok(gamma_k_with_rule(c, beta, k, t, s, &rule, &gl))
}

pub(crate) fn gamma_k_with_rule(
    c: f64,
    beta: f64,
    k: usize,
    t: f64,
    s: f64,
    rule: &GaussRule,
    gl: &GaussRule,
) -> f64 {
    if s >= t {
        return 0.0;
    }
    let sigma = k as f64 * beta;
    let integral = power_tail_integral(beta, sigma, t, s, rule, gl);
    (ln_gamma_coeff(c, beta, k) - beta * s.ln()).exp() * integral
}

/// Stirling upper bound on γ_k(t,s):
///
///   γ_k(t,s) <= C^k / (sqrt(2π)·(kβ)^{kβ+1/2}) · (t/s)^β (t-s)^{kβ},
///
/// with C = c(H)·Γ(β)·e^β, obtained from Γ(x) >= sqrt(2π) x^{x-1/2} e^{-x}
/// and s^{-β} ∫_s^t u^β (u-s)^{kβ-1} du <= (t/s)^β (t-s)^{kβ}/(kβ).
/// Used for series truncation only; any valid constant would do.
pub fn gamma_k_bound(hurst: f64, k: usize, t: f64, s: f64) -> Result<f64> {
    validate_hurst(hurst)?;
    require_positive_column(s)?;
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "k",
            value: 0.0,
            constraint: "iterated-kernel index starts at 1",
        });
    }
    if s >= t {
        return Ok(0.0);
    }
    let beta = hurst - 0.5;
    let c = c_of_h_unchecked(hurst);
    Ok(ln_gamma_k_bound(c, beta, k, t, s).exp())
}

pub(crate) fn ln_gamma_k_bound(c: f64, beta: f64, k: usize, t: f64, s: f64) -> f64 {
    let kf = k as f64;
    let sigma = kf * beta;
    let ln_big_c = c.ln() + ln_gamma(beta) + beta;
    kf * ln_big_c - (sigma + 0.5) * sigma.ln() - LN_SQRT_2PI + beta * (t / s).ln()
        + sigma * (t - s).ln()
}

/// Inverse transfer kernel via the Liouville-Neumann series,
/// truncated at the first index whose term bound (past its peak) drops
/// below `series.tol()`.
///
/// Zero for s >= t (the indicator is half-open and every γ_k vanishes).
pub fn l_inverse_kernel(
    p: &ModelParams,
    t: f64,
    s: f64,
    series: &SeriesSpec,
    q: &QuadratureSpec,
) -> Result<f64> {
    require_positive_column(s)?;
    let indicator = if s < t { 1.0 / p.a() } else { 0.0 };
    let tail = SeriesEvaluator::new(p, series, q).series_part(t, s)?;
    Ok(indicator + tail)
}

/// Evaluator for the continuous part of L^{-1}:
/// γ~(t,s) = (1/a) Σ_{k>=1} (-1)^k (b/a)^k γ_k(t,s).
///
/// The whole series is summed on one fixed node set: the substitution
/// w = (u-s)^β turns the k-th iterate's (u-s)^{kβ-1} du into w^{k-1} dw/β,
/// an exact polynomial in w, so a single Legendre rule in w integrates
/// every term at once with running powers at each node. The rule order 64
/// covers polynomial degree 127, beyond any truncation depth whose terms
/// still matter. When s is small relative to t-s the substituted base
/// (s + w^{1/β})^β loses analyticity margin, so the range splits at
/// u = 2s with octave Legendre panels beyond, as in the pointwise kernels.
pub(crate) struct SeriesEvaluator {
    a: f64,
    ratio: f64,
    beta: f64,
    c: f64,
    tol: f64,
    max_terms: usize,
    rule_w: Arc<GaussRule>,
    gl: Arc<GaussRule>,
    /// C_k = (1/a)·(-b/a)^k · c(H)^k Γ(β)^k / Γ(kβ), k = 1..max_terms.
    signed_coeffs: Vec<f64>,
}

impl SeriesEvaluator {
    pub fn new(p: &ModelParams, series: &SeriesSpec, q: &QuadratureSpec) -> Self {
        let beta = p.beta();
        let c = c_of_h_unchecked(p.hurst());
        let b_over_a = p.b() / p.a();
        let mut signed_coeffs = Vec::with_capacity(series.max_terms());
        let mut coeff = 1.0 / p.a();
        for k in 1..=series.max_terms() {
            let kf = k as f64;
            // A_1 = c; A_k/A_{k-1} = c·Γ(β)·Γ((k-1)β)/Γ(kβ)
            let step = if k == 1 {
                c
            } else {
                (c.ln() + ln_gamma(beta) + ln_gamma((kf - 1.0) * beta) - ln_gamma(kf * beta))
                    .exp()
            };
            coeff *= -b_over_a * step;
            signed_coeffs.push(coeff);
        }
        let _ = q;
        Self {
            a: p.a(),
            ratio: b_over_a.abs(),
            beta,
            c,
            tol: series.tol(),
            max_terms: series.max_terms(),
            rule_w: crate::quad::legendre_rule(64),
            gl: crate::quad::legendre_rule(24),
            signed_coeffs,
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// |k-th series term| bound: (1/|a|)·|b/a|^k · (Stirling bound on γ_k).
    fn term_bound(&self, k: usize, t: f64, s: f64) -> f64 {
        (ln_gamma_k_bound(self.c, self.beta, k, t, s) + k as f64 * self.ratio.ln()
            - self.a.abs().ln())
        .exp()
    }

    /// Number of terms the bound-based rule keeps at (t, s); errs on the
    /// side of more terms. Used by cell-average builders that share one
    /// truncation depth across a quadrature panel.
    pub fn terms_needed(&self, t: f64, s: f64) -> Result<usize> {
        self.terms_needed_with_tol(t, s, self.tol)
    }

    pub fn terms_needed_with_tol(&self, t: f64, s: f64, tol: f64) -> Result<usize> {
        if self.ratio == 0.0 || s >= t {
            return Ok(0);
        }
        let mut prev = f64::INFINITY;
        for k in 1..=self.max_terms {
            let bound = self.term_bound(k, t, s);
            if bound < tol && bound <= prev {
                return Ok(k);
            }
            prev = bound;
        }
        Err(Error::SeriesTruncation {
            t,
            s,
            tol,
            bound: prev,
            max_terms: self.max_terms,
        })
    }

    /// Σ_{k=1..n} C_k e^{k-1}, the per-node series chain.
    #[inline]
    fn chain(&self, e: f64, n_terms: usize) -> f64 {
        let mut acc = 0.0;
        let mut p = 1.0;
        for &c in &self.signed_coeffs[..n_terms] {
            acc += c * p;
            p *= e;
        }
        acc
    }

    /// γ~(t,s), the series part of L^{-1}(t,s).
    pub fn series_part(&self, t: f64, s: f64) -> Result<f64> {
        if s >= t || self.ratio == 0.0 {
            return Ok(0.0);
        }
        let n_terms = self.terms_needed(t, s)?;
        Ok(self.series_part_with_terms(t, s, n_terms))
    }

    /// γ~(t,s) truncated at a caller-chosen depth.
    pub fn series_part_with_terms(&self, t: f64, s: f64, n_terms: usize) -> f64 {
        if s >= t || n_terms == 0 {
            return 0.0;
        }
        let beta = self.beta;
        let inv_beta = 1.0 / beta;
        let s_pow = s.powf(-beta);

        // near range [s, min(2s, t)] in the w = (u-s)^β variable:
        // (1/β) ∫_0^{W} (s + w^{1/β})^β Σ_k C_k w^{k-1} dw
        let m = (2.0 * s).min(t);
        let w_end = (m - s).powf(beta);
        let mut acc = 0.0;
        for (v, gw) in self.rule_w.iter() {
            let w = w_end * v;
            let base = (s + w.powf(inv_beta)).powf(beta);
            acc += gw * base * self.chain(w, n_terms);
        }
        let mut total = s_pow * inv_beta * w_end * acc;

        // octave panels on [2s, t]: u^β (u-s)^{kβ-1} = u^β e^k/(u-s)
        let mut lo = 2.0 * s;
        let mut width = 2.0 * s;
        while lo < t {
            let hi = (lo + width).min(t);
            let h = hi - lo;
            let mut panel = 0.0;
            for (v, gw) in self.gl.iter() {
                let u = lo + h * v;
                let du = u - s;
                let e = du.powf(beta);
                panel += gw * u.powf(beta) / du * e * self.chain(e, n_terms);
            }
            total += s_pow * h * panel;
            lo = hi;
            width *= 2.0;
        }
        total
    }
}

fn require_positive_column(s: f64) -> Result<()> {
    if s > 0.0 {
        Ok(())
    } else {
        Err(Error::NonpositiveColumn(s))
    }
}
