//! Desk-scale verification suite: each check pins one structural claim of
//! the model at a fixed tolerance and reports pass/fail with detail. The
//! CLI `verify` subcommand runs the whole list; the acceptance test target
//! asserts each check individually.
//!
//! Two checks are expected to fail as stated and are kept faithful rather
//! than loosened: the short-time quadratic-variation and Hölder-ratio
//! tolerances are unattainable at these grid sizes because the Bm/fBm
//! cross term vanishes only like (scale)^{H-1/2}; see each check's detail
//! string for the measured values.

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::covariance::{covariance_table, fbm_cov, incremental_cov, lrd_asymptote};
use crate::error::Result;
use crate::grid::{SampledFunction, TimeGrid};
use crate::inference::{girsanov_log_likelihood, predict};
use crate::kernels::{gamma_k, mg_kernel, KernelCtx};
use crate::operators::{
    build_forward_operator, build_inverse_operator, resolvent_kernel,
    transfer_identity_residual, TriangularKernel,
};
use crate::params::{ModelParams, QuadratureSpec, SeriesSpec};
use crate::simulation::{quadratic_variation, recover_bm_with, simulate_cholesky, Scheme, SimConfig};
use crate::{EquivalenceSpec, IncrementQuery, SamplePath};

/// Result of one verification check.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckReport {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            name,
            passed,
            detail,
        }
    }
}

fn q() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn series() -> SeriesSpec {
    SeriesSpec::default()
}

fn std_params() -> ModelParams {
    ModelParams::new(1.0, 1.0, 0.75).unwrap()
}

/// 1. Kernel factorization: ∫_0^{t∧s} K_H(t,u)K_H(s,u) du = R_H(t,s) within
/// 1e-5 relative over a 10×10 grid on [0.1, 1]², H in {0.6, 0.75, 0.9};
/// runtime under 10 s.
pub fn check_kernel_factorization() -> CheckReport {
    let start = std::time::Instant::now();
    let q = q();
    let mut worst = 0.0f64;
    let mut worst_at = (0.0, 0.0, 0.0);
    for &h in &[0.6, 0.75, 0.9] {
        let ctx = KernelCtx::new(h, &q);
        for i in 0..10 {
            for j in 0..=i {
                let t = 0.1 + 0.1 * i as f64;
                let s = 0.1 + 0.1 * j as f64;
                let m = t.min(s);
                let got = crate::covariance::kh_product_integral(&ctx, t, s, m, &q);
                let want = fbm_cov(h, t, s);
                let rel = ((got - want) / want).abs();
                if rel > worst {
                    worst = rel;
                    worst_at = (h, t, s);
                }
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let passed = worst <= 1e-5 && elapsed < 10.0;
    CheckReport::new(
        "kernel-factorization",
        passed,
        format!(
            "max rel err {worst:.2e} at (H,t,s)={worst_at:?} (tol 1e-5); {elapsed:.1}s (limit 10s)"
        ),
    )
}

/// 2. Series inversion: identity residual of forward∘inverse strictly
/// smaller at N = 512 than at N = 128, and γ_1 ≡ K_H within 1e-8;
/// runtime under 60 s.
pub fn check_series_inversion() -> Result<CheckReport> {
    let start = std::time::Instant::now();
    let p = std_params();
    let q = q();
    let series = series();
    let mut residuals = Vec::new();
    for n in [128usize, 512] {
        let grid = TimeGrid::new(1.0, n)?;
        let fwd = build_forward_operator(&p, &grid, &q);
        let inv = build_inverse_operator(&p, &grid, &series, &q)?;
        residuals.push(transfer_identity_residual(&fwd, &inv));
    }
    let mut gamma_gap = 0.0f64;
    for (t, s) in [(1.0, 0.5), (0.9, 0.2), (0.3, 0.29), (1.0, 0.01)] {
        let g1 = gamma_k(0.75, 1, t, s, &q)?;
        let k = mg_kernel(0.75, t, s, &q)?;
        gamma_gap = gamma_gap.max((g1 - k).abs() / k.abs().max(1.0));
    }
    let elapsed = start.elapsed().as_secs_f64();
    let passed = residuals[1] < residuals[0] && gamma_gap <= 1e-8 && elapsed < 60.0;
    Ok(CheckReport::new(
        "series-inversion",
        passed,
        format!(
            "identity residual N=128: {:.2e}, N=512: {:.2e} (must shrink); γ1-K gap {gamma_gap:.1e} (tol 1e-8); {elapsed:.1}s (limit 60s)",
            residuals[0], residuals[1]
        ),
    ))
}

/// 3. Inverse-equation residual: a·L^{-1}(t,s) + b ∫ L^{-1}(t,u)∂K/∂u(u,s)du
/// reproduces the indicator within 1e-4 at 20 sampled pairs, H = 0.75.
pub fn check_inverse_equation_residual() -> Result<CheckReport> {
    let p = std_params();
    let q = q();
    let series = series();
    let ev = crate::kernels::SeriesEvaluator::new(&p, &series, &q);
    let ctx = KernelCtx::new(0.75, &q);
    let gl = crate::quad::legendre_rule(q.node_count());
    let rule_sing = crate::quad::jacobi_rule(q.node_count(), ctx.beta - 1.0);

    let mut worst = 0.0f64;
    let mut pairs = 0;
    for i in 1..=5 {
        let t = 0.2 * i as f64;
        for j in 1..=4 {
            let s = t * 0.22 * j as f64;
            pairs += 1;
            let linv = crate::kernels::l_inverse_kernel(&p, t, s, &series, &q)?;
            // the kernel-derivative factor is c(H)(u/s)^β(u-s)^{β-1}: a
            // weighted rule takes the lower endpoint, graded panels the
            // upper kink where the γ series flattens into the indicator
            let beta = ctx.beta;
            let linv_at = |u: f64| -> f64 {
                if u >= t {
                    return 0.0;
                }
                1.0 / p.a() + ev.series_part(t, u).unwrap_or(f64::NAN)
            };
            let mid = 0.5 * (s + t);
            let weighted = (mid - s).powf(beta)
                * rule_sing.sum(|v| {
                    let u = s + (mid - s) * v;
                    linv_at(u) * (u / s).powf(beta)
                });
            let mut upper = 0.0;
            let mut lo = mid;
            let span = t - mid;
            for k in 1..=40 {
                let hi = t - span * 0.5f64.powi(k);
                if hi <= lo {
                    break;
                }
                upper += gl.integrate(lo, hi, |u| {
                    linv_at(u) * (u / s).powf(beta) * (u - s).powf(beta - 1.0)
                });
                lo = hi;
            }
            let integral = weighted + upper;
            let residual = (p.a() * linv + p.b() * ctx.c * integral - 1.0).abs();
            worst = worst.max(residual);
        }
    }
    let passed = worst <= 1e-4;
    Ok(CheckReport::new(
        "inverse-equation-residual",
        passed,
        format!("max |residual| {worst:.2e} over {pairs} pairs (tol 1e-4)"),
    ))
}

/// 4. Exact simulation covariance: 20,000 Cholesky paths at N = 64; the
/// elementwise sample covariance sits within 4 standard errors of the
/// analytic covariance for at least 95% of entries; runtime under 2 min.
pub fn check_cholesky_covariance() -> Result<CheckReport> {
    let start = std::time::Instant::now();
    let p = std_params();
    let q = q();
    let n = 64usize;
    let grid = TimeGrid::new(1.0, n)?;
    let cfg = SimConfig {
        params: p,
        grid,
        n_paths: 20_000,
        seed: 0x5eed_cafe,
        scheme: Scheme::Cholesky,
        series_terms: 0,
    };
    let paths = simulate_cholesky(&cfg)?;
    let analytic = covariance_table(&p, &grid, &q);

    // sample covariance accumulated serially for determinism
    let mut sums = vec![0.0f64; n * n];
    for path in &paths {
        let x = &path.x()[1..];
        for i in 0..n {
            for j in 0..=i {
                sums[i * n + j] += x[i] * x[j];
            }
        }
    }
    let n_paths = paths.len() as f64;
    let mut within = 0usize;
    let mut total = 0usize;
    let mut worst_z = 0.0f64;
    for i in 0..n {
        for j in 0..=i {
            let sample = sums[i * n + j] / n_paths;
            let want = analytic[i * n + j];
            let se =
                ((analytic[i * n + i] * analytic[j * n + j] + want * want) / n_paths).sqrt();
            let z = ((sample - want) / se).abs();
            worst_z = worst_z.max(z);
            if z <= 4.0 {
                within += 1;
            }
            total += 1;
        }
    }
    let frac = within as f64 / total as f64;
    let elapsed = start.elapsed().as_secs_f64();
    let passed = frac >= 0.95 && elapsed < 120.0;
    Ok(CheckReport::new(
        "cholesky-covariance",
        passed,
        format!(
            "{within}/{total} entries within 4 SE ({:.1}%, need 95%); worst |z| {worst_z:.2}; {elapsed:.1}s (limit 120s)",
            frac * 100.0
        ),
    ))
}

/// 5. Quadratic variation: 200 paths at N = 4096; terminal QV within 5% of
/// a²T for at least 95% of paths.
///
/// Faithfully implemented and expected to fail: E[QV] at this resolution is
/// a²T·(1 + 2c(H)/(β(1+β))·N^{-β} + N^{-1/2}) ≈ 1.23·a²T for H = 3/4 — the
/// cross term vanishes like N^{-1/4}, so 5% would need N ≈ 5·10⁷.
pub fn check_quadratic_variation() -> Result<CheckReport> {
    let p = std_params();
    let grid = TimeGrid::new(1.0, 4096)?;
    let cfg = SimConfig {
        params: p,
        grid,
        n_paths: 200,
        seed: 0x9e37_79b9,
        scheme: Scheme::Cholesky,
        series_terms: 0,
    };
    let paths = simulate_cholesky(&cfg)?;
    let mut within = 0usize;
    let mut qv_mean = 0.0;
    for path in &paths {
        let qv = *quadratic_variation(path).last().unwrap();
        qv_mean += qv;
        if (qv - 1.0).abs() <= 0.05 {
            within += 1;
        }
    }
    qv_mean /= paths.len() as f64;
    let frac = within as f64 / paths.len() as f64;
    let passed = frac >= 0.95;
    Ok(CheckReport::new(
        "quadratic-variation",
        passed,
        format!(
            "{within}/200 paths within 5% of a²T ({:.0}%, need 95%); mean QV {qv_mean:.4} vs a²T = 1 — the N^{{-1/4}} cross-term excess dominates",
            frac * 100.0
        ),
    ))
}

/// 6. Hölder index: analytic ratio E[(X_{t+δ}-X_t)²]/(a²δ) at t = 0.5
/// within 5% of 1 at δ = 1e-3, deviation monotone over δ in {0.1, 0.01, 1e-3}.
///
/// Faithfully implemented and expected to fail the 5% clause: the exact
/// ratio at δ = 1e-3 is ≈ 1.336 because the cross term decays like
/// δ^{H-1/2} = δ^{1/4}; 5% would need δ ≈ 7·10^{-7}. Monotonicity holds.
pub fn check_holder_index() -> Result<CheckReport> {
    let p = std_params();
    let rows = crate::simulation::holder_diagnostic(&p, 0.5, &[0.1, 0.01, 0.001], &q())?;
    let devs: Vec<f64> = rows.iter().map(|(_, r)| (r - 1.0).abs()).collect();
    let monotone = devs.windows(2).all(|w| w[1] < w[0]);
    let at_smallest = devs[2];
    let passed = monotone && at_smallest <= 0.05;
    Ok(CheckReport::new(
        "holder-index",
        passed,
        format!(
            "deviations over δ={{0.1,0.01,1e-3}}: {:.4}/{:.4}/{:.4} (monotone: {monotone}); need ≤0.05 at δ=1e-3 — the δ^{{1/4}} cross term keeps it at {:.3}",
            devs[0], devs[1], devs[2], at_smallest
        ),
    ))
}

/// 7. Long-range dependence: log-log slope of exact ρ_X over t in [8, 64]
/// within ±0.1 of 2H-2 for H in {0.6, 0.75, 0.9}; ratio to the asymptote
/// within 10% at the largest t.
pub fn check_long_range_dependence() -> Result<CheckReport> {
    let q = q();
    let mut detail = String::new();
    let mut passed = true;
    for &h in &[0.6, 0.75, 0.9] {
        let p = ModelParams::new(1.0, 1.0, h)?;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut last_ratio = 0.0;
        for &t in &[8.0, 16.0, 32.0, 64.0] {
            let iq = IncrementQuery::new(0.1, 0.01, t)?;
            let rho = incremental_cov(&p, &iq, &q)?;
            xs.push((t - 0.1f64).ln());
            ys.push(rho.ln());
            last_ratio = rho / lrd_asymptote(&p, &iq)?;
        }
        let n = xs.len() as f64;
        let xm = xs.iter().sum::<f64>() / n;
        let ym = ys.iter().sum::<f64>() / n;
        let slope = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - xm) * (y - ym))
            .sum::<f64>()
            / xs.iter().map(|x| (x - xm) * (x - xm)).sum::<f64>();
        let target = 2.0 * h - 2.0;
        let slope_ok = (slope - target).abs() <= 0.1;
        let ratio_ok = (last_ratio - 1.0).abs() <= 0.10;
        passed &= slope_ok && ratio_ok;
        detail.push_str(&format!(
            "H={h}: slope {slope:.4} (target {target:.2}±0.1), asymptote ratio {last_ratio:.4} at t=64; "
        ));
    }
    Ok(CheckReport::new("long-range-dependence", passed, detail))
}

/// 8. Transfer round trip: on mg-approx paths at N = 512, correlation
/// between analytically recovered Bm increments and the stored driving
/// noise exceeds 0.99.
pub fn check_transfer_roundtrip() -> Result<CheckReport> {
    let p = std_params();
    let q = q();
    let grid = TimeGrid::new(1.0, 512)?;
    let cfg = SimConfig {
        params: p,
        grid,
        n_paths: 4,
        seed: 7_777,
        scheme: Scheme::MgApprox,
        series_terms: 0,
    };
    let paths = crate::simulation::simulate_mg_approx(&cfg, &q);
    let inv = build_inverse_operator(&p, &grid, &series(), &q)?;
    let sqrt_dt = grid.dt().sqrt();
    let mut worst = 1.0f64;
    for path in &paths {
        let rec = recover_bm_with(path, &inv)?;
        let rec_inc = rec.increments();
        let driver: Vec<f64> = path.xi().unwrap().iter().map(|z| z * sqrt_dt).collect();
        let mx = rec_inc.iter().sum::<f64>() / rec_inc.len() as f64;
        let my = driver.iter().sum::<f64>() / driver.len() as f64;
        let mut num = 0.0;
        let mut dx = 0.0;
        let mut dy = 0.0;
        for (a, b) in rec_inc.iter().zip(&driver) {
            num += (a - mx) * (b - my);
            dx += (a - mx) * (a - mx);
            dy += (b - my) * (b - my);
        }
        worst = worst.min(num / (dx * dy).sqrt());
    }
    let passed = worst > 0.99;
    Ok(CheckReport::new(
        "transfer-roundtrip",
        passed,
        format!("min recovery correlation {worst:.5} over 4 paths (need > 0.99)"),
    ))
}

/// 9. Drift MLE: 1,000 paths under the noise-drift model with θ = 2, T = 5,
/// N = 512 — sample mean within 3 SE of 2, sample variance within 20% of
/// 1/T; Girsanov density unit-mean within 3 SE over 10,000 paths.
pub fn check_drift_mle() -> Result<CheckReport> {
    let p = std_params();
    let q = q();
    let grid = TimeGrid::new(5.0, 512)?;
    let theta = 2.0;
    let fwd = build_forward_operator(&p, &grid, &q);
    let inv = build_inverse_operator(&p, &grid, &series(), &q)?;
    let n = grid.steps();
    let dt = grid.dt();
    let horizon = grid.horizon();

    let mut estimates = Vec::with_capacity(1000);
    for idx in 0..1000u64 {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0xd41f7);
        rng.set_stream(idx);
        let dw: Vec<f64> = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                dt.sqrt() * z + theta * dt
            })
            .collect();
        let x = fwd.apply_to_increments(&dw);
        let mut path = Vec::with_capacity(n + 1);
        path.push(0.0);
        path.extend_from_slice(&x);
        let sample = SamplePath::from_values(grid, path)?;
        estimates.push(recover_bm_with(&sample, &inv)?.terminal() / horizon);
    }
    let m = estimates.iter().sum::<f64>() / estimates.len() as f64;
    let var = estimates.iter().map(|e| (e - m) * (e - m)).sum::<f64>()
        / (estimates.len() as f64 - 1.0);
    let se = (var / estimates.len() as f64).sqrt();
    let mean_ok = (m - theta).abs() <= 3.0 * se;
    let var_ok = (var * horizon - 1.0).abs() <= 0.20;

    // Girsanov unit mean: ℓ = 0, g ≡ 0.5, T = 1, N = 256
    let g1 = TimeGrid::new(1.0, 256)?;
    let bm = ModelParams::new_unchecked(1.0, 0.0, 0.75);
    let cfg = SimConfig {
        params: bm,
        grid: g1,
        n_paths: 10_000,
        seed: 0xfeed,
        scheme: Scheme::Cholesky,
        series_terms: 0,
    };
    let spec = EquivalenceSpec::new(
        TriangularKernel::zeros(g1),
        SampledFunction::from_fn(g1, |_| 0.5),
    )?;
    let paths = simulate_cholesky(&cfg)?;
    let densities: Vec<f64> = paths
        .iter()
        .map(|path| girsanov_log_likelihood(path, &spec).map(f64::exp))
        .collect::<Result<_>>()?;
    let dm = densities.iter().sum::<f64>() / densities.len() as f64;
    let dvar = densities.iter().map(|d| (d - dm) * (d - dm)).sum::<f64>()
        / (densities.len() as f64 - 1.0);
    let dse = (dvar / densities.len() as f64).sqrt();
    let density_ok = (dm - 1.0).abs() <= 3.0 * dse;

    let passed = mean_ok && var_ok && density_ok;
    Ok(CheckReport::new(
        "drift-mle",
        passed,
        format!(
            "θ̂ mean {m:.4} (target 2 ± {:.4}), variance·T {:.3} (target 1 ± 0.2); density mean {dm:.4} ± {dse:.4}",
            3.0 * se,
            var * horizon
        ),
    ))
}

/// 10. Prediction: conditional mean and covariance against the Schur
/// oracle at N = 256 within 2%, errors strictly decreasing over
/// N in {128, 256, 512}; covariance bit-identical across observed paths.
pub fn check_prediction() -> Result<CheckReport> {
    let p = std_params();
    let q = q();
    let series = series();
    let u = 0.5;
    let mut errs = Vec::new();
    for n in [128usize, 256, 512] {
        let grid = TimeGrid::new(1.0, n)?;
        // 0.6 and 0.8 are not exact dyadic nodes; snap to the nearest node
        let targets: Vec<f64> = [0.6, 0.8, 1.0]
            .iter()
            .map(|&t| grid.node((t * n as f64).round() as usize))
            .collect();
        let cfg = SimConfig {
            params: p,
            grid,
            n_paths: 1,
            seed: 40_404,
            scheme: Scheme::Cholesky,
            series_terms: 0,
        };
        let path = &simulate_cholesky(&cfg)?[0];
        let res = predict(path, &p, u, &targets, &series, &q)?;

        let table = covariance_table(&p, &grid, &q);
        let n_u = grid.index_of(u).unwrap();
        let observed: Vec<usize> = (0..n_u).collect();
        let target_idx: Vec<usize> = targets
            .iter()
            .map(|&t| grid.index_of(t).unwrap() - 1)
            .collect();
        let x_obs: Vec<f64> = (1..=n_u).map(|k| path.x()[k]).collect();
        let (schur_mean, schur_cov) =
            schur_conditional(&table, n, &observed, &target_idx, &x_obs);

        let mut worst = 0.0f64;
        for i in 0..targets.len() {
            worst = worst
                .max((res.mean[i] - schur_mean[i]).abs() / schur_mean[i].abs().max(1e-2));
            for j in 0..targets.len() {
                worst = worst.max(
                    (res.cov_at(i, j) - schur_cov[i * 3 + j]).abs()
                        / schur_cov[i * 3 + j].abs().max(1e-3),
                );
            }
        }
        errs.push(worst);
    }

    // bit-identical covariance across two different observed paths
    let grid = TimeGrid::new(1.0, 128)?;
    let cfg = SimConfig {
        params: p,
        grid,
        n_paths: 2,
        seed: 808,
        scheme: Scheme::Cholesky,
        series_terms: 0,
    };
    let paths = simulate_cholesky(&cfg)?;
    let r0 = predict(&paths[0], &p, u, &targets, &series, &q)?;
    let r1 = predict(&paths[1], &p, u, &targets, &series, &q)?;
    let bit_identical = r0.cov == r1.cov;

    let passed = errs[1] <= 0.02 && errs[0] > errs[1] && errs[1] > errs[2] && bit_identical;
    Ok(CheckReport::new(
        "prediction",
        passed,
        format!(
            "rel err vs Schur: N=128 {:.4}, N=256 {:.4} (tol 0.02), N=512 {:.4} (strictly decreasing); cov bit-identical: {bit_identical}",
            errs[0], errs[1], errs[2]
        ),
    ))
}

/// 11. Resolvent: the constant kernel's resolvent matches c·e^{c(t-s)}
/// within 1% at N = 512.
pub fn check_resolvent() -> Result<CheckReport> {
    let grid = TimeGrid::new(1.0, 512)?;
    let c = 1.0;
    let ell = TriangularKernel::from_fn(grid, |_, _| c);
    let res = resolvent_kernel(&ell)?;
    let mut worst = 0.0f64;
    let n = 512;
    for i in (0..n).step_by(8) {
        for j in (0..=i).step_by(8) {
            let d = grid.node(i + 1) - grid.node(j + 1);
            let want = c * (c * d).exp();
            worst = worst.max((res.entry(i, j) / want - 1.0).abs());
        }
    }
    let passed = worst <= 0.01;
    Ok(CheckReport::new(
        "resolvent",
        passed,
        format!("max rel err {worst:.2e} vs c·e^{{c(t-s)}} (tol 1e-2)"),
    ))
}

/// The Schur-complement conditioning oracle used by the prediction check.
fn schur_conditional(
    cov: &[f64],
    n: usize,
    observed: &[usize],
    targets: &[usize],
    x_obs: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let no = observed.len();
    let nt = targets.len();
    let mut s_oo = vec![0.0; no * no];
    for (a, &i) in observed.iter().enumerate() {
        for (b, &j) in observed.iter().enumerate() {
            s_oo[a * no + b] = cov[i * n + j];
        }
    }
    for i in 0..no {
        for j in 0..=i {
            let mut acc = s_oo[i * no + j];
            for m in 0..j {
                acc -= s_oo[i * no + m] * s_oo[j * no + m];
            }
            if i == j {
                assert!(acc > 0.0, "observed block lost positive definiteness");
                s_oo[i * no + i] = acc.sqrt();
            } else {
                s_oo[i * no + j] = acc / s_oo[j * no + j];
            }
        }
    }
    let solve = |rhs: &[f64]| -> Vec<f64> {
        let mut y = rhs.to_vec();
        for i in 0..no {
            for j in 0..i {
                y[i] = y[i] - s_oo[i * no + j] * y[j];
            }
            y[i] /= s_oo[i * no + i];
        }
        for i in (0..no).rev() {
            for j in i + 1..no {
                y[i] = y[i] - s_oo[j * no + i] * y[j];
            }
            y[i] /= s_oo[i * no + i];
        }
        y
    };
    let w = solve(x_obs);
    let mean = targets
        .iter()
        .map(|&t| {
            observed
                .iter()
                .zip(&w)
                .map(|(&o, wv)| cov[t * n + o] * wv)
                .sum()
        })
        .collect();
    let solved: Vec<Vec<f64>> = targets
        .iter()
        .map(|&t| {
            let col: Vec<f64> = observed.iter().map(|&o| cov[o * n + t]).collect();
            solve(&col)
        })
        .collect();
    let mut cond = vec![0.0; nt * nt];
    for (a, &ti) in targets.iter().enumerate() {
        for (b, &tj) in targets.iter().enumerate() {
            let dot: f64 = observed
                .iter()
                .enumerate()
                .map(|(idx, &o)| cov[ti * n + o] * solved[b][idx])
                .sum();
            cond[a * nt + b] = cov[ti * n + tj] - dot;
        }
    }
    (mean, cond)
}

/// Run the full desk-scale suite in criterion order.
pub fn run_desk() -> Result<Vec<CheckReport>> {
    Ok(vec![
        check_kernel_factorization(),
        check_series_inversion()?,
        check_inverse_equation_residual()?,
        check_cholesky_covariance()?,
        check_quadratic_variation()?,
        check_holder_index()?,
        check_long_range_dependence()?,
        check_transfer_roundtrip()?,
        check_drift_mle()?,
        check_prediction()?,
        check_resolvent()?,
    ])
}
