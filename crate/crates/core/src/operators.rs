//! Discretized Volterra operators on a time grid.
//!
//! The discretization convention is increments-to-samples: an operator entry
//! M(k,j) is the average of the kernel's row t_k over the cell
//! (t_{j-1}, t_j], so that sample values are recovered from driver
//! increments as X(t_k) = Σ_{j<=k} M(k,j)·ΔW_j. Composition and inversion
//! therefore happen in increment form: with D the differencing matrix and
//! C = D^{-1} the cumulative-sum matrix, the inverse operator satisfies
//! (D·M^{-1})(D·M) = I, not M^{-1}·M = I.
//!
//! Cell integrals absorb the kernel's algebraic endpoint factors into
//! Gauss-Jacobi weights: s^{-β} on the first cell, (t-s)^β (or (t-s)^{kβ}
//! for the iterated kernels) on the diagonal cell; interior cells see an
//! analytic integrand and plain Gauss-Legendre.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{SampledFunction, TimeGrid};
use crate::kernels::{KernelCtx, SeriesEvaluator};
use crate::params::{ModelParams, QuadratureSpec, SeriesSpec};
use crate::quad::{jacobi_rule, legendre_rule};

/// Lower-triangular N×N table over the kernel nodes t_1..t_N of a grid.
/// Entry (i, j) (0-based) refers to the node pair (t_{i+1}, t_{j+1});
/// entries with j > i are zero (Volterra).
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularKernel {
    grid: TimeGrid,
    entries: Vec<f64>,
}

impl TriangularKernel {
    pub fn zeros(grid: TimeGrid) -> Self {
        let n = grid.steps();
        Self {
            grid,
            entries: vec![0.0; n * n],
        }
    }

    /// Fill the lower triangle with f(t_row, t_col) at node pairs.
    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.steps();
        let mut k = Self::zeros(grid);
        for i in 0..n {
            let ti = grid.node(i + 1);
            for j in 0..=i {
                k.entries[i * n + j] = f(ti, grid.node(j + 1));
            }
        }
        k
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.steps()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n() + j]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        let n = self.n();
        self.entries[i * n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.entries[i * n..(i + 1) * n]
    }

    pub fn is_volterra(&self) -> bool {
        let n = self.n();
        (0..n).all(|i| (i + 1..n).all(|j| self.entry(i, j) == 0.0))
    }

    /// Samples from driver increments: y_i = Σ_{j<=i} M(i,j)·incr_j.
    pub fn apply_to_increments(&self, incr: &[f64]) -> Vec<f64> {
        let n = self.n();
        assert_eq!(incr.len(), n, "increment vector must have one entry per cell");
        (0..n)
            .map(|i| {
                self.row(i)[..=i]
                    .iter()
                    .zip(&incr[..=i])
                    .map(|(m, dx)| m * dx)
                    .sum()
            })
            .collect()
    }

    /// Increment form D·M: row k becomes row k minus row k-1.
    pub fn to_increment_form(&self) -> TriangularKernel {
        let n = self.n();
        let mut out = Self::zeros(self.grid);
        out.entries[..n].copy_from_slice(&self.entries[..n]);
        for i in 1..n {
            for j in 0..=i {
                out.entries[i * n + j] = self.entries[i * n + j]
                    - if j <= i - 1 {
                        self.entries[(i - 1) * n + j]
                    } else {
                        0.0
                    };
            }
        }
        out
    }

    /// Cumulative form C·M: running column sums down the rows.
    pub fn cumsum_rows(&self) -> TriangularKernel {
        let n = self.n();
        let mut out = Self::zeros(self.grid);
        for j in 0..n {
            let mut acc = 0.0;
            for i in j..n {
                acc += self.entries[i * n + j];
                out.entries[i * n + j] = acc;
            }
        }
        out
    }

    /// Plain triangular matrix product self·other.
    pub fn matmul(&self, other: &TriangularKernel) -> TriangularKernel {
        let n = self.n();
        assert_eq!(other.n(), n);
        let mut out = Self::zeros(self.grid);
        out.entries
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, row)| {
                for j in 0..=i {
                    let mut acc = 0.0;
                    for m in j..=i {
                        acc += self.entries[i * n + m] * other.entries[m * n + j];
                    }
                    row[j] = acc;
                }
            });
        out
    }

    /// Exact triangular inverse of self taken as an increment-form matrix.
    pub fn invert_lower_triangular(&self) -> Result<TriangularKernel> {
        let n = self.n();
        for i in 0..n {
            if self.entry(i, i) == 0.0 {
                return Err(Error::InvalidParameter {
                    name: "diagonal",
                    value: 0.0,
                    constraint: "triangular inversion needs a nonzero diagonal",
                });
            }
        }
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
        (0..n)
            .into_par_iter()
            .map(|j| {
                let mut x = vec![0.0; n];
                x[j] = 1.0 / self.entry(j, j);
                for i in j + 1..n {
                    let mut acc = 0.0;
                    for r in j..i {
                        acc += self.entry(i, r) * x[r];
                    }
                    x[i] = -acc / self.entry(i, i);
                }
                x
            })
            .collect_into_vec(&mut cols);
        let mut out = Self::zeros(self.grid);
        for j in 0..n {
            for i in j..n {
                out.entries[i * n + j] = cols[j][i];
            }
        }
        Ok(out)
    }

    /// Forward substitution: solve self·y = rhs with self in increment form.
    pub fn solve_increments(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        assert_eq!(rhs.len(), n);
        let mut y = vec![0.0; n];
        for i in 0..n {
            let d = self.entry(i, i);
            if d == 0.0 {
                return Err(Error::InvalidParameter {
                    name: "diagonal",
                    value: 0.0,
                    constraint: "forward substitution needs a nonzero diagonal",
                });
            }
            let mut acc = rhs[i];
            for j in 0..i {
                acc -= self.entry(i, j) * y[j];
            }
            y[i] = acc / d;
        }
        Ok(y)
    }

    /// Trapezoid-weighted Volterra composition
    /// (self∘other)(t,s) = ∫_s^t self(t,u)·other(u,s) du on the grid nodes.
    pub fn compose_volterra(&self, other: &TriangularKernel) -> TriangularKernel {
        let n = self.n();
        assert_eq!(other.n(), n);
        let dt = self.grid.dt();
        let mut out = Self::zeros(self.grid);
        out.entries
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, row)| {
                for j in 0..i {
                    let mut acc =
                        0.5 * (self.entries[i * n + j] * other.entries[j * n + j]
                            + self.entries[i * n + i] * other.entries[i * n + j]);
                    for m in j + 1..i {
                        acc += self.entries[i * n + m] * other.entries[m * n + j];
                    }
                    row[j] = acc * dt;
                }
            });
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// CSV rows `row,col,value` over the lower triangle, 1-based indices.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "row,col,value")?;
        let n = self.n();
        for i in 0..n {
            for j in 0..=i {
                writeln!(w, "{},{},{:.16e}", i + 1, j + 1, self.entry(i, j))?;
            }
        }
        Ok(())
    }
}

/// Per-cell integrals of the Molchan-Golosov kernel:
/// cell(i,j) = ∫_{t_j}^{t_{j+1}} K_H(t_{i+1}, s) ds for j <= i.
pub(crate) fn kernel_cell_integrals(hurst: f64, grid: &TimeGrid, q: &QuadratureSpec) -> Vec<f64> {
    let n = grid.steps();
    let ctx = KernelCtx::new(hurst, q);
    let beta = ctx.beta;
    let nn = q.node_count();
    let gl = legendre_rule(nn);
    let rule_origin = jacobi_rule(nn, -beta);
    let rule_edge = jacobi_rule(nn, beta);
    let t1 = grid.node(1);

    let mut cells = vec![0.0; n * n];
    cells.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let t = grid.node(i + 1);
        for j in 0..=i {
            let lo = grid.node(j);
            let hi = grid.node(j + 1);
            row[j] = if j == 0 && i == 0 {
                // both the s^{-β} origin and the (t-s)^β diagonal edge
                let mid = 0.5 * t1;
                let left = mid.powf(1.0 - beta) * rule_origin.sum(|v| {
                    let s = mid * v;
                    s.powf(beta) * ctx.mg(t1, s)
                });
                let right = mid.powf(1.0 + beta)
                    * rule_edge.sum(|v| ctx.mg_over_edge(t1, t1 - mid * v));
                left + right
            } else if j == 0 {
                hi.powf(1.0 - beta) * rule_origin.sum(|v| {
                    let s = hi * v;
                    s.powf(beta) * ctx.mg(t, s)
                })
            } else if j == i {
                let w = hi - lo;
                w.powf(1.0 + beta) * rule_edge.sum(|v| ctx.mg_over_edge(t, t - w * v))
            } else {
                gl.integrate(lo, hi, |s| ctx.mg(t, s))
            };
        }
    });
    cells
}

/// Cumulative kernel integrals cum(i,j) = ∫_0^{t_{j+1}} K_H(t_{i+1}, u) du.
pub(crate) fn kernel_cell_cumulative(
    hurst: f64,
    grid: &TimeGrid,
    q: &QuadratureSpec,
) -> Vec<f64> {
    let n = grid.steps();
    let mut cells = kernel_cell_integrals(hurst, grid, q);
    for i in 0..n {
        for j in 1..=i {
            cells[i * n + j] += cells[i * n + j - 1];
        }
    }
    cells
}

/// Forward operator: M(k,j) = a + (b/Δ)·∫_{t_{j-1}}^{t_j} K_H(t_k, s) ds,
/// mapping scaled noise increments to path samples,
/// X(t_k) ≈ Σ_{j<=k} M(k,j)·ΔW_j with ΔW_j = sqrt(Δ)·ξ_j.
pub fn build_forward_operator(
    p: &ModelParams,
    grid: &TimeGrid,
    q: &QuadratureSpec,
) -> TriangularKernel {
    let n = grid.steps();
    let dt = grid.dt();
    let mut out = TriangularKernel::zeros(*grid);
    if p.b() == 0.0 {
        for i in 0..n {
            for j in 0..=i {
                out.set(i, j, p.a());
            }
        }
        return out;
    }
    let cells = kernel_cell_integrals(p.hurst(), grid, q);
    let a = p.a();
    let scale = p.b() / dt;
    for i in 0..n {
        for j in 0..=i {
            out.set(i, j, a + scale * cells[i * n + j]);
        }
    }
    out
}

/// Analytic inverse operator: cell averages of L^{-1}(t_k, ·) under the same
/// convention as the forward operator, with per-cell series truncation.
pub fn build_inverse_operator(
    p: &ModelParams,
    grid: &TimeGrid,
    series: &SeriesSpec,
    q: &QuadratureSpec,
) -> Result<TriangularKernel> {
    let n = grid.steps();
    let dt = grid.dt();
    let inv_a = 1.0 / p.a();
    let mut out = TriangularKernel::zeros(*grid);
    if p.b() == 0.0 {
        for i in 0..n {
            for j in 0..=i {
                out.set(i, j, inv_a);
            }
        }
        return Ok(out);
    }

    let ev = SeriesEvaluator::new(p, series, q);
    let beta = ev.beta();
    let nn = q.node_count();
    // interior cells see an analytic integrand a safe distance from both
    // singular lines; low order suffices
    let gl_cell = legendre_rule(10);
    let rule_origin = jacobi_rule(nn, -beta);
    let rule_edge = jacobi_rule(nn, beta);
    let t1 = grid.node(1);

    let rows: Vec<Result<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let t = grid.node(i + 1);
            let mut row = vec![0.0; i + 1];
            for (j, slot) in row.iter_mut().enumerate() {
                let lo = grid.node(j);
                let hi = grid.node(j + 1);
                // the bound is decreasing in s, so the left edge is
                // conservative; the first cell integrates s^{-β} mass and
                // gets a constant-factor allowance on top of its midpoint
                let (s_ref, slack) = if j == 0 { (0.5 * t1, 1.5) } else { (lo, 1.0) };
                let n_terms = ev.terms_needed_with_tol(t, s_ref, series.tol() / slack)?;
                let integral = if j == 0 && i == 0 {
                    let mid = 0.5 * t1;
                    let left = mid.powf(1.0 - beta) * rule_origin.sum(|v| {
                        let s = mid * v;
                        s.powf(beta) * ev.series_part_with_terms(t1, s, n_terms)
                    });
                    let right = mid.powf(1.0 + beta) * rule_edge.sum(|v| {
                        let y = mid * v;
                        ev.series_part_with_terms(t1, t1 - y, n_terms) / y.powf(beta)
                    });
                    left + right
                } else if j == 0 {
                    hi.powf(1.0 - beta) * rule_origin.sum(|v| {
                        let s = hi * v;
                        s.powf(beta) * ev.series_part_with_terms(t, s, n_terms)
                    })
                } else if j == i {
                    // γ~(t, t-y) vanishes like y^β at the diagonal; the
                    // higher iterates' steeper powers ride the same rule
                    let w = hi - lo;
                    w.powf(1.0 + beta) * rule_edge.sum(|v| {
                        let y = w * v;
                        ev.series_part_with_terms(t, t - y, n_terms) / y.powf(beta)
                    })
                } else {
                    gl_cell.integrate(lo, hi, |s| ev.series_part_with_terms(t, s, n_terms))
                };
                *slot = inv_a + integral / dt;
            }
            Ok(row)
        })
        .collect();

    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row?.into_iter().enumerate() {
            out.set(i, j, v);
        }
    }
    Ok(out)
}

/// Numeric inverse operator: exact triangular inversion of the forward
/// operator in increment form, mapped back to sample form. Serves as the
/// independent oracle for the analytic construction.
pub fn build_inverse_operator_numeric(
    p: &ModelParams,
    grid: &TimeGrid,
    q: &QuadratureSpec,
) -> Result<TriangularKernel> {
    let fwd = build_forward_operator(p, grid, q);
    Ok(fwd.to_increment_form().invert_lower_triangular()?.cumsum_rows())
}

/// Max-abs residual of (D·inverse)(D·forward) - I, the increments-to-samples
/// reading of forward∘inverse → identity.
pub fn transfer_identity_residual(
    forward: &TriangularKernel,
    inverse: &TriangularKernel,
) -> f64 {
    let a = forward.to_increment_form();
    let b = inverse.to_increment_form();
    let prod = b.matmul(&a);
    let n = prod.n();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..=i {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((prod.entry(i, j) - target).abs());
        }
    }
    worst
}

/// Adjoint operator L* applied to a sampled function:
/// (L*f)(t) = a·f(t) + b ∫_t^T f(u)·∂K_H/∂u(u,t) du,
/// with f piecewise linear between nodes and the (u-t)^{β-1} factor on the
/// first cell absorbed into the quadrature weight.
pub fn apply_lstar(p: &ModelParams, f: &SampledFunction, q: &QuadratureSpec) -> SampledFunction {
    let grid = f.grid();
    let n = grid.steps();
    let vals = f.values();
    if p.b() == 0.0 {
        return SampledFunction::new(grid, vals.iter().map(|v| p.a() * v).collect()).unwrap();
    }
    let ctx = KernelCtx::new(p.hurst(), q);
    let beta = ctx.beta;
    let nn = q.node_count();
    let gl = legendre_rule(nn);
    let rule_sing = jacobi_rule(nn, beta - 1.0);
    let dt = grid.dt();

    let out: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let t = grid.node(i + 1);
            let mut integral = 0.0;
            for m in i + 1..n {
                let lo = grid.node(m);
                let hi = grid.node(m + 1);
                let (f_lo, f_hi) = (vals[m - 1], vals[m]);
                let interp = |u: f64| f_lo + (f_hi - f_lo) * (u - lo) / dt;
                integral += if m == i + 1 {
                    dt.powf(beta) * rule_sing.sum(|v| {
                        let u = t + dt * v;
                        interp(u) * u.powf(beta)
                    })
                } else {
                    gl.integrate(lo, hi, |u| interp(u) * u.powf(beta) * (u - t).powf(beta - 1.0))
                };
            }
            p.a() * vals[i] + p.b() * ctx.c * t.powf(-beta) * integral
        })
        .collect();
    SampledFunction::new(grid, out).unwrap()
}

/// Node table of the series part γ~(t_r, t_j) of L^{-1}, r >= j.
pub(crate) fn linverse_series_table(
    p: &ModelParams,
    grid: &TimeGrid,
    series: &SeriesSpec,
    q: &QuadratureSpec,
) -> Result<TriangularKernel> {
    let n = grid.steps();
    let mut out = TriangularKernel::zeros(*grid);
    if p.b() == 0.0 {
        return Ok(out);
    }
    let ev = SeriesEvaluator::new(p, series, q);
    let rows: Vec<Result<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|r| {
            let t = grid.node(r + 1);
            (0..=r)
                .map(|j| ev.series_part(t, grid.node(j + 1)))
                .collect()
        })
        .collect();
    for (r, row) in rows.into_iter().enumerate() {
        for (j, v) in row?.into_iter().enumerate() {
            out.set(r, j, v);
        }
    }
    Ok(out)
}

/// Inverse adjoint via the Stieltjes form
/// (L*)^{-1} f(t) = f(t)·L^{-1}(T,t) + ∫_t^T [f(s) - f(t)] L^{-1}(ds, t).
///
/// The indicator contributes a jump of size 1/a at s = t+, which the
/// integrand kills; its contribution to L^{-1}(T,t) is applied analytically
/// (value 1/a at every node, reading the indicator as closed at T). The
/// absolutely continuous γ-series part is integrated with left-point sums.
pub fn apply_lstar_inverse(
    p: &ModelParams,
    f: &SampledFunction,
    series: &SeriesSpec,
    q: &QuadratureSpec,
) -> Result<SampledFunction> {
    let grid = f.grid();
    let table = linverse_series_table(p, &grid, series, q)?;
    Ok(apply_lstar_inverse_with_table(p, f, &table))
}

pub(crate) fn apply_lstar_inverse_with_table(
    p: &ModelParams,
    f: &SampledFunction,
    table: &TriangularKernel,
) -> SampledFunction {
    let grid = f.grid();
    let n = grid.steps();
    let vals = f.values();
    let inv_a = 1.0 / p.a();
    let out: Vec<f64> = (0..n)
        .map(|j| {
            let mut acc = vals[j] * (inv_a + table.entry(n - 1, j));
            let mut prev = 0.0; // γ~(t_{j+1}, t_{j+1}) = 0
            for r in j + 1..n {
                let cur = table.entry(r, j);
                acc += (vals[r - 1] - vals[j]) * (cur - prev);
                prev = cur;
            }
            acc
        })
        .collect();
    SampledFunction::new(grid, out).unwrap()
}

/// Volterra resolvent ℓ~ = Σ_{k>=1} ℓ^(k) with
/// ℓ^(k+1)(t,s) = ∫_s^t ℓ(t,u) ℓ^(k)(u,s) du, iterated with the trapezoid
/// composition until the term norm falls below 1e-12 or N iterations pass.
pub fn resolvent_kernel(ell: &TriangularKernel) -> Result<TriangularKernel> {
    const TERM_TOL: f64 = 1e-12;
    let n = ell.n();
    let mut sum = ell.clone();
    let mut term = ell.clone();
    let mut prev_norm = term.max_abs();
    if prev_norm == 0.0 {
        return Ok(sum);
    }
    let mut growth_streak = 0usize;
    for _ in 1..n {
        term = ell.compose_volterra(&term);
        let norm = term.max_abs();
        if !norm.is_finite() {
            return Err(Error::ResolventDiverged(growth_streak + 1));
        }
        let nn = n * n;
        for idx in 0..nn {
            sum.entries[idx] += term.entries[idx];
        }
        if norm < TERM_TOL {
            return Ok(sum);
        }
        if norm > prev_norm {
            growth_streak += 1;
            if growth_streak >= n {
                return Err(Error::ResolventDiverged(growth_streak));
            }
        } else {
            growth_streak = 0;
        }
        prev_norm = norm;
    }
    Ok(sum)
}
