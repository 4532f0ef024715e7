//! Gauss rules for the weighted integrals the kernels reduce to.
//!
//! Every singular integral in this crate can be written as
//! ∫_0^1 f(v)·v^lam dv with lam > -1 and f analytic on [0, 1], so the
//! endpoint singularity is absorbed into the weight exactly. Nodes and
//! weights come from the Golub-Welsch eigenvalue construction on the
//! Jacobi recurrence; rules are cached per (order, exponent).

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::DMatrix;

#[derive(Debug, Clone)]
pub(crate) struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    /// Weighted sum approximating ∫_0^1 f(v)·v^lam dv, with lam baked into
    /// the weights at construction.
    pub(crate) fn sum(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&v, &w)| w * f(v))
            .sum()
    }

    /// Node/weight pairs.
    pub(crate) fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Plain ∫_a^b f(u) du; only meaningful for the lam = 0 rule.
    pub(crate) fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let h = b - a;
        h * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&v, &w)| w * f(a + h * v))
            .sum::<f64>()
    }

}

/// Golub-Welsch for the weight (1+x)^lam on [-1,1] (Jacobi with alpha = 0),
/// mapped to [0,1] so that sum w_i f(v_i) = ∫_0^1 f(v) v^lam dv.
fn build_rule(n: usize, lam: f64) -> GaussRule {
    assert!(n >= 2 && lam > -1.0);
    let mut m = DMatrix::<f64>::zeros(n, n);
    m[(0, 0)] = lam / (lam + 2.0);
    for j in 1..n {
        let jf = j as f64;
        let denom = 2.0 * jf + lam;
        m[(j, j)] = lam * lam / (denom * (denom + 2.0));
        let off = (4.0 * jf * jf * (jf + lam) * (jf + lam)
            / (denom * denom * (denom * denom - 1.0)))
            .sqrt();
        m[(j, j - 1)] = off;
        m[(j - 1, j)] = off;
    }
    let eigen = m.symmetric_eigen();
    // total mass of (1+x)^lam on [-1,1]
    let mu0 = 2f64.powf(lam + 1.0) / (lam + 1.0);
    let scale = 2f64.powf(-(lam + 1.0));
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let x = eigen.eigenvalues[i];
            let q0 = eigen.eigenvectors.column(i)[0];
            ((1.0 + x) / 2.0, scale * mu0 * q0 * q0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    GaussRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

type RuleCache = RwLock<HashMap<(usize, u64), Arc<GaussRule>>>;

fn cache() -> &'static RuleCache {
    static CACHE: OnceLock<RuleCache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Cached rule for ∫_0^1 f(v)·v^lam dv.
pub(crate) fn jacobi_rule(n: usize, lam: f64) -> Arc<GaussRule> {
    let key = (n, lam.to_bits());
    if let Some(rule) = cache().read().unwrap().get(&key) {
        return Arc::clone(rule);
    }
    let rule = Arc::new(build_rule(n, lam));
    cache()
        .write()
        .unwrap()
        .entry(key)
        .or_insert(rule)
        .clone()
}

/// Cached Gauss-Legendre rule on [0,1].
pub(crate) fn legendre_rule(n: usize) -> Arc<GaussRule> {
    jacobi_rule(n, 0.0)
}
