//! Path generation for the mixed process and its diagnostics.
//!
//! Three schemes: exact Cholesky (the fBm covariance square root driven by
//! the same normals as the Brownian part), the Molchan-Golosov operator
//! approximation (the forward operator applied to scaled noise increments),
//! and a truncated orthonormal-series expansion. All schemes draw one
//! ChaCha stream per path keyed by (seed, path index), so a configuration
//! fixes the output bit-for-bit whatever the worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{ccmfbm_cov, fbm_cov};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::operators::{build_forward_operator, build_inverse_operator, TriangularKernel};
use crate::params::{ModelParams, QuadratureSpec, SeriesSpec};

/// Simulation scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Exact in distribution on the grid; costs one Cholesky factorization.
    Cholesky,
    /// Forward-operator proxy for the Cholesky square root.
    MgApprox,
    /// Truncated series over an orthonormal basis.
    Series,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cholesky" => Ok(Self::Cholesky),
            "mg-approx" | "mg_approx" => Ok(Self::MgApprox),
            "series" => Ok(Self::Series),
            _ => Err(Error::Parse(format!(
                "unknown scheme `{s}` (expected cholesky, mg-approx or series)"
            ))),
        }
    }
}

/// Orthonormal basis for the series scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesBasis {
    /// Fourier basis on [0,T]: 1/sqrt(T), then paired cosines and sines.
    #[default]
    Trigonometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: ModelParams,
    pub grid: TimeGrid,
    pub n_paths: usize,
    pub seed: u64,
    pub scheme: Scheme,
    /// Series scheme only: number of basis terms kept.
    pub series_terms: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::InvalidParameter {
                name: "n_paths",
                value: 0.0,
                constraint: "at least one path",
            });
        }
        if self.scheme == Scheme::Series && self.series_terms == 0 {
            return Err(Error::InvalidParameter {
                name: "series_terms",
                value: 0.0,
                constraint: "series scheme needs at least one term",
            });
        }
        Ok(())
    }
}

/// A realized path on a grid: x holds the mixed process at t_0..t_N with
/// x[0] = 0. The Brownian component `w`, fractional component `bh` and raw
/// normal draws `xi` are kept when the scheme provides them.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    grid: TimeGrid,
    x: Vec<f64>,
    w: Option<Vec<f64>>,
    bh: Option<Vec<f64>>,
    xi: Option<Vec<f64>>,
}

impl SamplePath {
    /// Wrap externally observed values (CLI input path). x must start at 0.
    pub fn from_values(grid: TimeGrid, x: Vec<f64>) -> Result<Self> {
        if x.len() != grid.steps() + 1 {
            return Err(Error::GridMismatch(format!(
                "path needs {} values at t_0..t_N, got {}",
                grid.steps() + 1,
                x.len()
            )));
        }
        if x[0] != 0.0 {
            return Err(Error::InvalidParameter {
                name: "x[0]",
                value: x[0],
                constraint: "paths start at zero",
            });
        }
        Ok(Self {
            grid,
            x,
            w: None,
            bh: None,
            xi: None,
        })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn w(&self) -> Option<&[f64]> {
        self.w.as_deref()
    }

    pub fn bh(&self) -> Option<&[f64]> {
        self.bh.as_deref()
    }

    pub fn xi(&self) -> Option<&[f64]> {
        self.xi.as_deref()
    }

    pub fn terminal(&self) -> f64 {
        *self.x.last().unwrap()
    }

    /// Increments x(t_j) - x(t_{j-1}), j = 1..N.
    pub fn increments(&self) -> Vec<f64> {
        self.x.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// One independent stream per (seed, path index).
fn path_rng(seed: u64, path_index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

fn draw_normals(rng: &mut ChaCha12Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Dispatch on the configured scheme.
pub fn simulate(cfg: &SimConfig, q: &QuadratureSpec) -> Result<Vec<SamplePath>> {
    match cfg.scheme {
        Scheme::Cholesky => simulate_cholesky(cfg),
        Scheme::MgApprox => Ok(simulate_mg_approx(cfg, q)),
        Scheme::Series => Ok(simulate_series(cfg, SeriesBasis::Trigonometric, q)),
    }
}

/// Exact simulation: X(t_k) = a·sqrt(Δ)·Σ_{j<=k} ξ_j + b·Σ_{j<=k} L_H(k,j)·ξ_j
/// with L_H the Cholesky factor of the fBm covariance on t_1..t_N. The same
/// draws ξ feed both components, which is what makes the mixture completely
/// correlated.
pub fn simulate_cholesky(cfg: &SimConfig) -> Result<Vec<SamplePath>> {
    cfg.validate()?;
    let grid = cfg.grid;
    let n = grid.steps();
    let p = cfg.params;
    let factor = fbm_cholesky_factor(p.hurst(), &grid)?;
    let sqrt_dt = grid.dt().sqrt();

    let mut paths = Vec::with_capacity(cfg.n_paths);
    (0..cfg.n_paths)
        .into_par_iter()
        .map(|idx| {
            let mut rng = path_rng(cfg.seed, idx as u64);
            let xi = draw_normals(&mut rng, n);
            let mut w = Vec::with_capacity(n + 1);
            let mut bh = Vec::with_capacity(n + 1);
            let mut x = Vec::with_capacity(n + 1);
            w.push(0.0);
            bh.push(0.0);
            x.push(0.0);
            let mut wsum = 0.0;
            for k in 0..n {
                wsum += sqrt_dt * xi[k];
                let row = &factor[k * n..k * n + k + 1];
                let b_val: f64 = row.iter().zip(&xi[..=k]).map(|(l, z)| l * z).sum();
                w.push(wsum);
                bh.push(b_val);
                x.push(p.a() * wsum + p.b() * b_val);
            }
            SamplePath {
                grid,
                x,
                w: Some(w),
                bh: Some(bh),
                xi: Some(xi),
            }
        })
        .collect_into_vec(&mut paths);
    Ok(paths)
}

/// Molchan-Golosov approximation: the forward operator applied to scaled
/// noise increments. The driving draws are stored so the noise is known
/// exactly for round-trip checks.
pub fn simulate_mg_approx(cfg: &SimConfig, q: &QuadratureSpec) -> Vec<SamplePath> {
    cfg.validate().expect("invalid simulation config");
    let grid = cfg.grid;
    let n = grid.steps();
    let p = cfg.params;
    let op = build_forward_operator(&p, &grid, q);
    simulate_with_operator(cfg, &op, n)
}

/// mg-approx path generation against a prebuilt forward operator.
pub fn simulate_with_operator(
    cfg: &SimConfig,
    op: &TriangularKernel,
    n: usize,
) -> Vec<SamplePath> {
    let grid = cfg.grid;
    let p = cfg.params;
    let sqrt_dt = grid.dt().sqrt();
    let mut paths = Vec::with_capacity(cfg.n_paths);
    (0..cfg.n_paths)
        .into_par_iter()
        .map(|idx| {
            let mut rng = path_rng(cfg.seed, idx as u64);
            let xi = draw_normals(&mut rng, n);
            let dw: Vec<f64> = xi.iter().map(|z| sqrt_dt * z).collect();
            let samples = op.apply_to_increments(&dw);
            let mut x = Vec::with_capacity(n + 1);
            let mut w = Vec::with_capacity(n + 1);
            x.push(0.0);
            w.push(0.0);
            let mut wsum = 0.0;
            for k in 0..n {
                wsum += dw[k];
                w.push(wsum);
                x.push(samples[k]);
            }
            let bh = if p.b() != 0.0 {
                Some(
                    x.iter()
                        .zip(&w)
                        .map(|(xv, wv)| (xv - p.a() * wv) / p.b())
                        .collect(),
                )
            } else {
                None
            };
            SamplePath {
                grid,
                x,
                w: Some(w),
                bh,
                xi: Some(xi),
            }
        })
        .collect_into_vec(&mut paths);
    paths
}

/// Series expansion X(t) = Σ_{k<=K} e_k(t)·ξ_k with
/// e_k(t) = ∫_0^t L(t,s)·ẽ_k(s) ds. The integrals reuse the forward
/// operator's cell averages against exact cell integrals of the basis.
pub fn simulate_series(cfg: &SimConfig, basis: SeriesBasis, q: &QuadratureSpec) -> Vec<SamplePath> {
    cfg.validate().expect("invalid simulation config");
    let grid = cfg.grid;
    let n = grid.steps();
    let terms = cfg.series_terms;
    let e = series_coefficient_table(&cfg.params, &grid, basis, terms, q);

    let mut paths = Vec::with_capacity(cfg.n_paths);
    (0..cfg.n_paths)
        .into_par_iter()
        .map(|idx| {
            let mut rng = path_rng(cfg.seed, idx as u64);
            let xi = draw_normals(&mut rng, terms);
            let mut x = Vec::with_capacity(n + 1);
            x.push(0.0);
            for i in 0..n {
                x.push(e[i * terms..(i + 1) * terms]
                    .iter()
                    .zip(&xi)
                    .map(|(ek, z)| ek * z)
                    .sum());
            }
            SamplePath {
                grid,
                x,
                w: None,
                bh: None,
                xi: Some(xi),
            }
        })
        .collect_into_vec(&mut paths);
    paths
}

/// Table e_k(t_i), row-major (node i, term k), for the series scheme.
pub fn series_coefficient_table(
    p: &ModelParams,
    grid: &TimeGrid,
    basis: SeriesBasis,
    terms: usize,
    q: &QuadratureSpec,
) -> Vec<f64> {
    let SeriesBasis::Trigonometric = basis;
    let n = grid.steps();
    let horizon = grid.horizon();
    let op = build_forward_operator(p, grid, q);
    // exact cell integrals of the basis functions
    let mut cell_basis = vec![0.0; n * terms];
    for j in 0..n {
        let lo = grid.node(j);
        let hi = grid.node(j + 1);
        for k in 0..terms {
            cell_basis[j * terms + k] = basis_cell_integral(horizon, k, lo, hi);
        }
    }
    let mut e = vec![0.0; n * terms];
    e.par_chunks_mut(terms).enumerate().for_each(|(i, row)| {
        for j in 0..=i {
            let m = op.entry(i, j);
            for k in 0..terms {
                row[k] += m * cell_basis[j * terms + k];
            }
        }
    });
    e
}

/// ∫_lo^hi ẽ_k(s) ds for the Fourier basis on [0, T]; index 0 is the
/// constant, then cos/sin pairs of increasing frequency.
fn basis_cell_integral(horizon: f64, k: usize, lo: f64, hi: f64) -> f64 {
    use std::f64::consts::TAU;
    if k == 0 {
        return (hi - lo) / horizon.sqrt();
    }
    let m = ((k + 1) / 2) as f64;
    let omega = TAU * m / horizon;
    let amp = (2.0 / horizon).sqrt();
    if k % 2 == 1 {
        // cosine term: ∫ cos(ωs) ds
        amp * ((omega * hi).sin() - (omega * lo).sin()) / omega
    } else {
        // sine term: ∫ sin(ωs) ds
        amp * ((omega * lo).cos() - (omega * hi).cos()) / omega
    }
}

/// Recover the driving Brownian motion W(t_k) = Σ_{j<=k} L^{-1}(t_k, ·)
/// cell averages times the observed increments, using the analytic inverse
/// operator.
pub fn recover_bm(
    path: &SamplePath,
    p: &ModelParams,
    series: &SeriesSpec,
    q: &QuadratureSpec,
) -> Result<SamplePath> {
    let grid = path.grid();
    let inv = build_inverse_operator(p, &grid, series, q)?;
    recover_bm_with(path, &inv)
}

/// Recovery against a prebuilt inverse operator (analytic or numeric).
pub fn recover_bm_with(path: &SamplePath, inverse: &TriangularKernel) -> Result<SamplePath> {
    if inverse.grid() != path.grid() {
        return Err(Error::GridMismatch(
            "inverse operator and path live on different grids".into(),
        ));
    }
    let w = inverse.apply_to_increments(&path.increments());
    let mut x = Vec::with_capacity(w.len() + 1);
    x.push(0.0);
    x.extend_from_slice(&w);
    Ok(SamplePath {
        grid: path.grid(),
        x,
        w: None,
        bh: None,
        xi: None,
    })
}

/// Running quadratic variation Σ_{j<=k} (x(t_j) - x(t_{j-1}))² at each node.
pub fn quadratic_variation(path: &SamplePath) -> Vec<f64> {
    let mut out = Vec::with_capacity(path.x.len());
    out.push(0.0);
    let mut acc = 0.0;
    for inc in path.x.windows(2) {
        let d = inc[1] - inc[0];
        acc += d * d;
        out.push(acc);
    }
    out
}

/// Short-time scale diagnostic: the analytic ratio
/// E[(X_{t+δ} - X_t)²] / (a²δ) for each lag, computed from the exact
/// covariance. Tends to 1 as δ -> 0 at rate δ^{H-1/2}.
pub fn holder_diagnostic(
    p: &ModelParams,
    t: f64,
    lags: &[f64],
    q: &QuadratureSpec,
) -> Result<Vec<(f64, f64)>> {
    debug_assert!(lags.windows(2).all(|w| w[1] < w[0]), "lags must decrease");
    let mut out = Vec::with_capacity(lags.len());
    let var_t = ccmfbm_cov(p, t, t, q)?;
    for &d in lags {
        if !(d > 0.0) {
            return Err(Error::InvalidParameter {
                name: "lag",
                value: d,
                constraint: "lags must be positive",
            });
        }
        let v = ccmfbm_cov(p, t + d, t + d, q)? - 2.0 * ccmfbm_cov(p, t + d, t, q)? + var_t;
        out.push((d, v / (p.a() * p.a() * d)));
    }
    Ok(out)
}

/// Cholesky factor (row-major, lower triangle) of the fBm covariance on
/// t_1..t_N, with escalating diagonal jitter before giving up.
pub(crate) fn fbm_cholesky_factor(hurst: f64, grid: &TimeGrid) -> Result<Vec<f64>> {
    let n = grid.steps();
    let base: Vec<f64> = {
        let mut m = vec![0.0; n * n];
        for k in 0..n {
            let tk = grid.node(k + 1);
            for j in 0..=k {
                let v = fbm_cov(hurst, tk, grid.node(j + 1));
                m[k * n + j] = v;
                m[j * n + k] = v;
            }
        }
        m
    };
    let mut jitter = 0.0;
    loop {
        let mut mat = base.clone();
        if jitter > 0.0 {
            for k in 0..n {
                mat[k * n + k] *= 1.0 + jitter;
            }
        }
        if cholesky_in_place(&mut mat, n).is_ok() {
            if jitter > 0.0 {
                log::warn!(
                    "fBm covariance at H = {hurst}, N = {n} needed diagonal jitter {jitter:.1e}"
                );
            }
            return Ok(mat);
        }
        jitter = if jitter == 0.0 { 1e-14 } else { jitter * 10.0 };
        if jitter > 1e-10 {
            return Err(Error::FactorizationFailed {
                n,
                hurst,
                jitter: 1e-10,
            });
        }
    }
}

/// In-place lower Cholesky; the upper triangle is zeroed. Err carries the
/// failing pivot index.
fn cholesky_in_place(mat: &mut [f64], n: usize) -> std::result::Result<(), usize> {
    for i in 0..n {
        let (head, tail) = mat.split_at_mut(i * n);
        let row_i = &mut tail[..n];
        for j in 0..=i {
            let dot: f64 = if j < i {
                let row_j = &head[j * n..j * n + j];
                row_i[..j].iter().zip(row_j).map(|(a, b)| a * b).sum()
            } else {
                row_i[..j].iter().map(|a| a * a).sum()
            };
            let acc = row_i[j] - dot;
            if i == j {
                if acc <= 0.0 {
                    return Err(i);
                }
                row_i[i] = acc.sqrt();
            } else {
                row_i[j] = acc / head[j * n + j];
            }
        }
        for v in row_i[i + 1..n].iter_mut() {
            *v = 0.0;
        }
    }
    Ok(())
}
