//! Discretized-operator checks: covariance consistency of the forward
//! operator, agreement of the analytic and numeric inverse routes, the
//! adjoint relation and isometry of L*, inverse-adjoint round trips, the
//! resolvent series and the operator-norm bound.

mod common;

use approx::assert_relative_eq;
use ccmfbm::covariance::{ccmfbm_cov, covariance_table};
use ccmfbm::kernels::mg_kernel;
use ccmfbm::operators::{
    apply_lstar, apply_lstar_inverse, build_forward_operator, build_inverse_operator,
    build_inverse_operator_numeric, resolvent_kernel, transfer_identity_residual,
    TriangularKernel,
};
use ccmfbm::{ModelParams, QuadratureSpec, SampledFunction, SeriesSpec, TimeGrid};

fn q() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn series() -> SeriesSpec {
    SeriesSpec::default()
}

fn grid(n: usize) -> TimeGrid {
    TimeGrid::new(1.0, n).unwrap()
}

#[test]
fn forward_operator_reproduces_terminal_variance() {
    // Σ_j M(N,j)²·Δ ≈ R(T,T), within 2% at N = 64 and improving at N = 256
    let p = ModelParams::new(1.0, 1.0, 0.75).unwrap();
    let want = ccmfbm_cov(&p, 1.0, 1.0, &q()).unwrap();
    let mut errs = Vec::new();
    for n in [64usize, 256] {
        let g = grid(n);
        let m = build_forward_operator(&p, &g, &q());
        let got: f64 = m.row(n - 1).iter().map(|v| v * v).sum::<f64>() * g.dt();
        let rel = (got / want - 1.0).abs();
        errs.push(rel);
    }
    assert!(errs[0] < 0.02, "N=64 variance error {}", errs[0]);
    assert!(errs[1] < errs[0], "error should improve with N: {errs:?}");
}

#[test]
fn forward_diagonal_cells_are_finite_and_positive() {
    let p = ModelParams::new(1.0, 1.0, 0.75).unwrap();
    let g = grid(32);
    let m = build_forward_operator(&p, &g, &q());
    for i in 0..32 {
        let v = m.entry(i, i);
        assert!(v.is_finite() && v > 1.0, "diagonal entry {v} at {i}");
    }
}

#[test]
fn analytic_and_numeric_inverse_agree_and_converge() {
    let p = ModelParams::new(1.0, 1.0, 0.75).unwrap();
    let mut residuals = Vec::new();
    let mut discrepancies = Vec::new();
    for n in [32usize, 128] {
        let g = grid(n);
        let fwd = build_forward_operator(&p, &g, &q());
        let analytic = build_inverse_operator(&p, &g, &series(), &q()).unwrap();
        let numeric = build_inverse_operator_numeric(&p, &g, &q()).unwrap();
        residuals.push(transfer_identity_residual(&fwd, &analytic));
        // column 0 is the boundary cell averaging the s^{-β} layer; its
        // pointwise gap does not shrink, but its contribution enters paths
        // through a sqrt(Δ)-sized increment. Compare the interior columns.
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 1..=i {
                worst = worst.max((analytic.entry(i, j) - numeric.entry(i, j)).abs());
            }
        }
        discrepancies.push(worst);
    }
    assert!(
        residuals[1] < residuals[0],
        "identity residual must shrink with N: {residuals:?}"
    );
    assert!(
        discrepancies[1] < discrepancies[0],
        "analytic vs numeric gap must shrink with N: {discrepancies:?}"
    );
    // numeric inversion is exact by construction
    let g = grid(128);
    let fwd = build_forward_operator(&p, &g, &q());
    let numeric = build_inverse_operator_numeric(&p, &g, &q()).unwrap();
    assert!(transfer_identity_residual(&fwd, &numeric) < 1e-10);
}

#[test]
fn builders_preserve_triangularity() {
    // |b/a| < 1 keeps the H = 0.6 series depth moderate
    let p = ModelParams::new(1.7, 0.8, 0.6).unwrap();
    let g = grid(24);
    assert!(build_forward_operator(&p, &g, &q()).is_volterra());
    assert!(build_inverse_operator(&p, &g, &series(), &q())
        .unwrap()
        .is_volterra());
    assert!(build_inverse_operator_numeric(&p, &g, &q())
        .unwrap()
        .is_volterra());
}

#[test]
fn lstar_on_indicator_samples_the_transfer_kernel() {
    // L*1_{[0,t_k)} = L(t_k, ·): check away from the jump cell, where the
    // piecewise-linear ramp and the one-cell offset cost O(Δ) each
    let p = ModelParams::new(1.0, 1.0, 0.75).unwrap();
    let n = 128;
    let g = grid(n);
    let k = 96; // t_k = 0.75
    let t_k = g.node(k);
    let f = SampledFunction::from_fn(g, |t| if t < t_k { 1.0 } else { 0.0 });
    let out = apply_lstar(&p, &f, &q());
    for j in (8..k - 4).step_by(8) {
        let s = g.node(j);
        let want = p.a() + p.b() * mg_kernel(0.75, t_k, s, &q()).unwrap();
        let got = out.value_at_node(j);
        assert_relative_eq!(got, want, max_relative = 0.02);
    }
    // beyond the indicator's support the integrand vanishes identically
    for j in k..=n {
        assert_eq!(out.value_at_node(j), 0.0 + p.a() * 0.0);
    }
}

#[test]
fn lstar_isometry_as_quadratic_form() {
    // ‖L*f‖² dt ≈ fᵀ Σ_ΔX f where Σ_ΔX is the increment covariance table
    let p = ModelParams::new(1.0, 1.0, 0.75).unwrap();
    let n = 256;
    let g = grid(n);
    let f = SampledFunction::from_fn(g, |t| 1.0 + (2.0 * t).sin());
    let lf = apply_lstar(&p, &f, &q());
    let lhs = lf.norm_sq();

    let table = covariance_table(&p, &g, &q());
    let cov_full = |i: usize, j: usize| -> f64 {
        // covariance of samples including the zero node t_0
        if i == 0 || j == 0 {
            0.0
        } else {
            table[(i - 1) * n + (j - 1)]
        }
    };
    let mut rhs = 0.0;
    for i in 1..=n {
        for j in 1..=n {
            let inc_cov = cov_full(i, j) - cov_full(i, j - 1) - cov_full(i - 1, j)
                + cov_full(i - 1, j - 1);
            rhs += f.value_at_node(i) * f.value_at_node(j) * inc_cov;
        }
    }
    assert_relative_eq!(lhs, rhs, max_relative = 0.02);
}

#[test]
fn lstar_round_trip_on_smooth_function() {
    // error measured against the sup norm of f, which is 1 here
    let p = ModelParams::new(1.0, 1.0, 0.75).unwrap();
    let mut errs = Vec::new();
    for n in [64usize, 256] {
        let g = grid(n);
        let f = SampledFunction::from_fn(g, |t| t * t);
        let back = apply_lstar_inverse(&p, &apply_lstar(&p, &f, &q()), &series(), &q()).unwrap();
        let worst = f
            .values()
            .iter()
            .zip(back.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        errs.push(worst);
    }
    assert!(errs[1] < 0.02, "round-trip error at N=256: {}", errs[1]);
    assert!(errs[1] < errs[0], "round-trip must improve with N: {errs:?}");
}

#[test]
fn lstar_inverse_maps_transfer_kernel_to_indicator() {
    let p = ModelParams::new(1.0, 1.0, 0.75).unwrap();
    let n = 256;
    let g = grid(n);
    let k = 192;
    let t_k = g.node(k);
    let f = SampledFunction::from_fn(g, |s| {
        let ind = if s < t_k { p.a() } else { 0.0 };
        ind + p.b() * mg_kernel(0.75, t_k, s, &q()).unwrap()
    });
    let out = apply_lstar_inverse(&p, &f, &series(), &q()).unwrap();
    for j in (16..k - 8).step_by(16) {
        assert_relative_eq!(out.value_at_node(j), 1.0, max_relative = 0.02);
    }
    for j in k + 2..=n {
        assert!(
            out.value_at_node(j).abs() < 0.02,
            "past t_k the inverse image should vanish, got {}",
            out.value_at_node(j)
        );
    }
}

#[test]
fn resolvent_of_constant_kernel_is_exponential() {
    // ℓ ≡ c has ℓ^(k)(t,s) = c^k (t-s)^{k-1}/(k-1)! and resolvent c·e^{c(t-s)}
    let n = 256;
    let g = grid(n);
    let c = 1.0;
    let ell = TriangularKernel::from_fn(g, |_, _| c);
    let res = resolvent_kernel(&ell).unwrap();
    let mut worst = 0.0f64;
    for i in (0..n).step_by(16) {
        for j in (0..=i).step_by(16) {
            let d = g.node(i + 1) - g.node(j + 1);
            let want = c * (c * d).exp();
            worst = worst.max((res.entry(i, j) / want - 1.0).abs());
        }
    }
    assert!(worst < 0.02, "constant-kernel resolvent error {worst}");
}

#[test]
fn resolvent_first_iterate_matches_closed_form() {
    // one composition of the constant kernel: ∫_s^t c·c du = c²(t-s)
    let g = grid(128);
    let ell = TriangularKernel::from_fn(g, |_, _| 2.0);
    let second = ell.compose_volterra(&ell);
    for (i, j) in [(100usize, 3usize), (64, 63), (127, 0)] {
        let want = 4.0 * (g.node(i + 1) - g.node(j + 1));
        assert_relative_eq!(second.entry(i, j), want, epsilon = 1e-12);
    }
}

#[test]
fn resolvent_satisfies_its_defining_identity() {
    // ℓ~ = ℓ + ℓ∘ℓ~ holds to series-truncation accuracy by linearity
    let g = grid(96);
    let ell = TriangularKernel::from_fn(g, |t, s| 0.5 * (-(t - s)).exp());
    let res = resolvent_kernel(&ell).unwrap();
    let composed = ell.compose_volterra(&res);
    let mut worst = 0.0f64;
    for i in 0..96 {
        for j in 0..=i {
            worst = worst
                .max((res.entry(i, j) - ell.entry(i, j) - composed.entry(i, j)).abs());
        }
    }
    assert!(worst < 1e-10, "resolvent identity residual {worst}");
}

#[test]
fn adjoint_rayleigh_quotient_respects_norm_bound() {
    // ‖K*_H f‖² <= H(2H-1)·T^{2H-1}/(H-1/2)·‖f‖², with 5% discretization slack
    for h in [0.6, 0.75, 0.9] {
        let p = ModelParams::new_unchecked(0.0, 1.0, h);
        let bound = h * (2.0 * h - 1.0) / (h - 0.5); // T = 1
        let g = grid(256);
        for f in [
            SampledFunction::from_fn(g, |t| (3.0 * t).sin()),
            SampledFunction::from_fn(g, |t| t * t),
            SampledFunction::from_fn(g, |t| if t < 0.5 { 1.0 } else { 0.0 }),
        ] {
            let kf = apply_lstar(&p, &f, &q());
            let rayleigh = kf.norm_sq() / f.norm_sq();
            assert!(
                rayleigh <= bound * 1.05,
                "H={h}: Rayleigh {rayleigh} exceeds bound {bound}"
            );
        }
    }
}

#[test]
fn csv_serialization_round_trips_entries() {
    let g = grid(4);
    let k = TriangularKernel::from_fn(g, |t, s| t * 10.0 + s);
    let mut buf = Vec::new();
    k.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "row,col,value");
    let mut count = 0;
    for line in lines {
        let parts: Vec<&str> = line.split(',').collect();
        assert_eq!(parts.len(), 3);
        let (i, j): (usize, usize) = (parts[0].parse().unwrap(), parts[1].parse().unwrap());
        let v: f64 = parts[2].parse().unwrap();
        assert_eq!(v, k.entry(i - 1, j - 1), "17-digit output must round-trip");
        count += 1;
    }
    assert_eq!(count, 10);
}
