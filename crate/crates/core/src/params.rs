use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model parameters of the mixed process X = a·W + b·B^H, where the
/// fractional component B^H is driven by the same Brownian motion W.
///
/// `a` and `b` are the mixing weights, `hurst` the Hurst index of the
/// fractional part. Only the long-range dependent regime H in (1/2, 1) is
/// supported, and the mixture must be genuine: a·b != 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    a: f64,
    b: f64,
    hurst: f64,
}

impl ModelParams {
    pub fn new(a: f64, b: f64, hurst: f64) -> Result<Self> {
        if !(a * b).is_normal() || a * b == 0.0 {
            return Err(Error::InvalidParameter {
                name: "a*b",
                value: a * b,
                constraint: "mixing weights must satisfy a*b != 0 and be finite",
            });
        }
        validate_hurst(hurst)?;
        Ok(Self { a, b, hurst })
    }

    /// Degenerate constructor that skips the a·b != 0 check, so pure-Bm
    /// (b = 0) and pure-fBm (a = 0) configurations can serve as oracles in
    /// tests. The Hurst restriction still applies.
    pub fn new_unchecked(a: f64, b: f64, hurst: f64) -> Self {
        assert!(
            hurst > 0.5 && hurst < 1.0,
            "hurst must lie in (1/2, 1), got {hurst}"
        );
        assert!(a.is_finite() && b.is_finite());
        Self { a, b, hurst }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    /// H - 1/2, the exponent that controls every kernel singularity.
    pub(crate) fn beta(&self) -> f64 {
        self.hurst - 0.5
    }
}

pub(crate) fn validate_hurst(hurst: f64) -> Result<()> {
    if !(hurst > 0.5 && hurst < 1.0) {
        return Err(Error::InvalidParameter {
            name: "hurst",
            value: hurst,
            constraint: "Hurst index must lie in the open interval (1/2, 1)",
        });
    }
    Ok(())
}

/// Fixed-order quadrature controls.
///
/// `node_count` is the order of the Gauss rules used after the endpoint
/// singularities have been absorbed into the weight function; `abs_tol`
/// controls how deep the graded panel subdivision goes in the
/// high-accuracy covariance integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    node_count: usize,
    abs_tol: f64,
}

impl QuadratureSpec {
    pub fn new(node_count: usize, abs_tol: f64) -> Result<Self> {
        if node_count < 2 {
            return Err(Error::InvalidParameter {
                name: "node_count",
                value: node_count as f64,
                constraint: "quadrature order must be at least 2",
            });
        }
        if !(abs_tol >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "abs_tol",
                value: abs_tol,
                constraint: "absolute tolerance must be nonnegative",
            });
        }
        Ok(Self {
            node_count,
            abs_tol,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn abs_tol(&self) -> f64 {
        self.abs_tol
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            node_count: 48,
            abs_tol: 1e-12,
        }
    }
}

/// Truncation controls for the alternating inverse-kernel series.
///
/// The series is cut at the first index whose term bound drops below `tol`
/// (once the bound has passed its peak); reaching `max_terms` first is an
/// error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesSpec {
    tol: f64,
    max_terms: usize,
}

impl SeriesSpec {
    pub fn new(tol: f64, max_terms: usize) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tol",
                value: tol,
                constraint: "series tolerance must be positive",
            });
        }
        if max_terms == 0 {
            return Err(Error::InvalidParameter {
                name: "max_terms",
                value: 0.0,
                constraint: "series cap must be at least 1",
            });
        }
        Ok(Self { tol, max_terms })
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }
}

impl Default for SeriesSpec {
    // 200 terms: near H = 1/2 the term bound decays slowly (H = 0.6 needs
    // ~150 terms to reach 1e-10 on [0,1]); the cap must clear that.
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_terms: 200,
        }
    }
}
