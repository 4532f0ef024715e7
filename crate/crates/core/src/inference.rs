//! Drift likelihood and maximum-likelihood estimation, the discretized
//! Girsanov likelihood ratio, and conditional prediction.
//!
//! The drift machinery works in the coordinates of the recovered Brownian
//! motion w_t = ∫_0^t L^{-1}(t,s) dX_s: the likelihood of drift θ is
//! exp{θ·w_t - θ²t/2} with maximizer w_t/t. Note that ∫_0^t L^{-1}(t,s) ds
//! differs from t, so a drift θ on the driving noise and a drift θ·s added
//! to the observation are different models; the estimator here is unbiased
//! under the former.
//!
//! Prediction uses the conditional law of X_t given observations up to u:
//! stochastic mean X_u + ∫_0^u Ψ(t,s|u) dX_s with
//! Ψ(t,·|u) = (L*)^{-1}[L(t,·) - L(u,·)] on horizon u, and deterministic
//! covariance R(t,s) - ∫_0^u L(t,v) L(s,v) dv.

use serde::Serialize;

use crate::covariance::{ccmfbm_cov, kh_integral, kh_product_integral};
use crate::error::{Error, Result};
use crate::grid::SampledFunction;
use crate::kernels::KernelCtx;
use crate::operators::{apply_lstar_inverse_with_table, linverse_series_table, TriangularKernel};
use crate::params::{ModelParams, QuadratureSpec, SeriesSpec};
use crate::simulation::{recover_bm, SamplePath};

/// A candidate drift value for the likelihood ratio test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftHypothesis {
    pub theta: f64,
}

/// Hitsuda-style equivalence data: a Volterra kernel ℓ and a drift g.
#[derive(Debug, Clone)]
pub struct EquivalenceSpec {
    pub ell: TriangularKernel,
    pub g: SampledFunction,
}

impl EquivalenceSpec {
    pub fn new(ell: TriangularKernel, g: SampledFunction) -> Result<Self> {
        if ell.grid() != g.grid() {
            return Err(Error::GridMismatch(
                "kernel and drift live on different grids".into(),
            ));
        }
        Ok(Self { ell, g })
    }
}

/// Conditional law of the targets given observations up to u.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionResult {
    pub u: f64,
    pub targets: Vec<f64>,
    pub mean: Vec<f64>,
    /// Row-major targets × targets conditional covariance; deterministic,
    /// identical for any observed path.
    pub cov: Vec<f64>,
}

impl PredictionResult {
    pub fn cov_at(&self, i: usize, j: usize) -> f64 {
        self.cov[i * self.targets.len() + j]
    }
}

/// Log-likelihood θ·w_t - θ²t/2 of drift θ given the observed path.
pub fn drift_log_likelihood(
    path: &SamplePath,
    hyp: &DriftHypothesis,
    p: &ModelParams,
    series: &SeriesSpec,
    q: &QuadratureSpec,
) -> Result<f64> {
    let t = path.grid().horizon();
    let w_t = recover_bm(path, p, series, q)?.terminal();
    Ok(hyp.theta * w_t - 0.5 * hyp.theta * hyp.theta * t)
}

/// As [`drift_log_likelihood`] with a prebuilt inverse operator, for
/// likelihood evaluations over many paths or hypotheses.
pub fn drift_log_likelihood_with(
    path: &SamplePath,
    hyp: &DriftHypothesis,
    inverse: &crate::operators::TriangularKernel,
) -> Result<f64> {
    let t = path.grid().horizon();
    let w_t = crate::simulation::recover_bm_with(path, inverse)?.terminal();
    Ok(hyp.theta * w_t - 0.5 * hyp.theta * hyp.theta * t)
}

/// Maximum-likelihood drift estimate w_t / t.
pub fn drift_mle(
    path: &SamplePath,
    p: &ModelParams,
    series: &SeriesSpec,
    q: &QuadratureSpec,
) -> Result<f64> {
    let t = path.grid().horizon();
    let w_t = recover_bm(path, p, series, q)?.terminal();
    Ok(w_t / t)
}

/// As [`drift_mle`] with a prebuilt inverse operator.
pub fn drift_mle_with(
    path: &SamplePath,
    inverse: &crate::operators::TriangularKernel,
) -> Result<f64> {
    let t = path.grid().horizon();
    let w_t = crate::simulation::recover_bm_with(path, inverse)?.terminal();
    Ok(w_t / t)
}

/// Discretized Girsanov log-likelihood of the equivalence data over a
/// Brownian path:
///
///   ∫_0^t [∫_0^s ℓ(s,v) dW_v + g(s)] dW_s
///   - (1/2) ∫_0^t [∫_0^s ℓ(s,v) dW_v - g(s)]² ds,
///
/// with left-point (Ito) sums in the outer integral. The inner integral
/// attributes each increment to the kernel value at the cell's right node;
/// g at t_0 is taken as its first sample.
pub fn girsanov_log_likelihood(w_path: &SamplePath, spec: &EquivalenceSpec) -> Result<f64> {
    let grid = w_path.grid();
    if spec.ell.grid() != grid {
        return Err(Error::GridMismatch(
            "equivalence kernel and path live on different grids".into(),
        ));
    }
    let n = grid.steps();
    let dt = grid.dt();
    let w = w_path.x();
    let dw: Vec<f64> = w.windows(2).map(|c| c[1] - c[0]).collect();
    let g = spec.g.values();

    // inner[j] = ∫_0^{t_j} ℓ(t_j, v) dW_v, j = 1..N (index j-1)
    let inner: Vec<f64> = (0..n)
        .map(|j| {
            spec.ell.row(j)[..=j]
                .iter()
                .zip(&dw[..=j])
                .map(|(l, d)| l * d)
                .sum()
        })
        .collect();

    let mut log_lik = 0.0;
    let mut quad_term = 0.0;
    for j in 0..n {
        // left endpoint of cell (t_j, t_{j+1}]
        let drift = if j == 0 { g[0] } else { g[j - 1] };
        let integ = if j == 0 { 0.0 } else { inner[j - 1] };
        log_lik += (integ + drift) * dw[j];
        let dev = integ - drift;
        quad_term += dev * dev;
    }
    Ok(log_lik - 0.5 * quad_term * dt)
}

/// Conditional mean and covariance of the targets given the path up to u.
///
/// u and every target must be grid nodes; targets lie in (u, T]. The
/// covariance never touches the observed values, so it is bit-identical
/// across observed paths.
pub fn predict(
    path: &SamplePath,
    p: &ModelParams,
    u: f64,
    targets: &[f64],
    series: &SeriesSpec,
    q: &QuadratureSpec,
) -> Result<PredictionResult> {
    let grid = path.grid();
    let n_u = grid.index_of(u).ok_or(Error::NotAGridNode(u))?;
    if n_u < 2 {
        return Err(Error::InvalidParameter {
            name: "u",
            value: u,
            constraint: "need at least two observed steps",
        });
    }
    let mut target_idx = Vec::with_capacity(targets.len());
    for &t in targets {
        let k = grid.index_of(t).ok_or(Error::NotAGridNode(t))?;
        if k <= n_u {
            return Err(Error::InvalidParameter {
                name: "target",
                value: t,
                constraint: "targets must lie strictly beyond u",
            });
        }
        target_idx.push(k);
    }

    let sub = grid.truncated(n_u)?;
    let table = linverse_series_table(p, &sub, series, q)?;
    let ctx = KernelCtx::new(p.hurst(), q);
    let x = path.x();
    let x_u = x[n_u];

    let mut mean = Vec::with_capacity(targets.len());
    for (&t, &_k) in targets.iter().zip(&target_idx) {
        // f = L(t,·) - L(u,·) sampled on (0, u]: the a-indicators cancel
        // below u, and the jump of size a exactly at s = u is an atom the
        // Wiener integral never sees, so the endpoint is sampled by its
        // left limit b·K_H(t,u).
        let f = SampledFunction::new(
            sub,
            (1..=n_u)
                .map(|j| {
                    let s = sub.node(j);
                    if j == n_u {
                        p.b() * ctx.mg(t, s)
                    } else {
                        p.b() * (ctx.mg(t, s) - ctx.mg(u, s))
                    }
                })
                .collect(),
        )?;
        let psi = apply_lstar_inverse_with_table(p, &f, &table);
        let mut m = x_u;
        for j in 1..=n_u {
            m += psi.value_at_node(j) * (x[j] - x[j - 1]);
        }
        mean.push(m);
    }

    // deterministic covariance R(t,s) - ∫_0^u L(t,v)L(s,v) dv
    let k = targets.len();
    let mut cov = vec![0.0; k * k];
    let a = p.a();
    let b = p.b();
    for i in 0..k {
        for j in 0..=i {
            let (ti, tj) = (targets[i], targets[j]);
            let mut observed_part = a * a * u;
            if a != 0.0 && b != 0.0 {
                observed_part +=
                    a * b * (kh_integral(&ctx, ti, u, q) + kh_integral(&ctx, tj, u, q));
            }
            if b != 0.0 {
                observed_part += b * b * kh_product_integral(&ctx, ti, tj, u, q);
            }
            let v = ccmfbm_cov(p, ti, tj, q)? - observed_part;
            cov[i * k + j] = v;
            cov[j * k + i] = v;
        }
    }

    Ok(PredictionResult {
        u,
        targets: targets.to_vec(),
        mean,
        cov,
    })
}
