//! Shared oracle machinery for the integration tests.
//!
//! Deliberately independent of the library's quadrature: `tanh_sinh` is a
//! double-exponential trapezoid rule, so agreement with the Gauss-Jacobi
//! path is evidence, not tautology.

#![allow(dead_code)]

/// Double-exponential quadrature of ∫_a^b f(x, x-a, b-x) dx; handles
/// integrable endpoint singularities. The distances to the endpoints are
/// computed without cancellation (1 - tanh s = 2/(e^{2s}+1)) and handed to
/// the integrand, so algebraic endpoint factors stay accurate however close
/// the abscissas creep. Halves the step until two refinements agree.
pub fn tanh_sinh_sing(
    f: impl Fn(f64, f64, f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> f64 {
    use std::f64::consts::FRAC_PI_2;
    let half = 0.5 * (b - a);
    // deep enough that even a (x-a)^{-0.9} endpoint factor leaves no tail
    let t_max = 6.0f64;
    let eval = |t: f64| -> f64 {
        let tt = t.abs();
        let s = FRAC_PI_2 * tt.sinh();
        let w = 2.0 / ((2.0 * s).exp() + 1.0); // 1 - tanh(s)
        let near = half * w;
        let far = half * (2.0 - w);
        let (da, db) = if t >= 0.0 { (far, near) } else { (near, far) };
        let x = a + da;
        // sech² = (1-tanh)(1+tanh) = w(2-w)
        let dxdt = half * FRAC_PI_2 * tt.cosh() * w * (2.0 - w);
        if da <= 0.0 || db <= 0.0 || !dxdt.is_finite() {
            return 0.0;
        }
        let v = f(x, da, db) * dxdt;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let mut h = 0.5;
    let mut prev = f64::NAN;
    for _ in 0..12 {
        let n = (t_max / h).ceil() as i64;
        let mut sum = eval(0.0);
        for i in 1..=n {
            let t = i as f64 * h;
            sum += eval(t) + eval(-t);
        }
        let cur = sum * h;
        if !prev.is_nan() && (cur - prev).abs() <= rel_tol * cur.abs().max(1e-300) {
            return cur;
        }
        prev = cur;
        h *= 0.5;
    }
    prev
}

/// Convenience wrapper when the integrand has no endpoint singularity.
pub fn tanh_sinh(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    tanh_sinh_sing(|x, _, _| f(x), a, b, rel_tol)
}

/// Least-squares slope of y against x.
pub fn regression_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        num += (x - xm) * (y - ym);
        den += (x - xm) * (x - xm);
    }
    num / den
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let mx = mean(xs);
    let my = mean(ys);
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        dx += (x - mx) * (x - mx);
        dy += (y - my) * (y - my);
    }
    num / (dx * dy).sqrt()
}

/// Finite-dimensional Gaussian conditioning by Schur complement, straight
/// from a dense covariance table: mean = Σ_TO Σ_OO^{-1} x_O and
/// cov = Σ_TT - Σ_TO Σ_OO^{-1} Σ_OT. Plain Cholesky solves, test-side only.
pub fn schur_conditional(
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
    // in-place Cholesky
    for i in 0..no {
        for j in 0..=i {
            let mut acc = s_oo[i * no + j];
            for m in 0..j {
                acc -= s_oo[i * no + m] * s_oo[j * no + m];
            }
            if i == j {
                assert!(acc > 0.0, "observed covariance block not PD at {i}");
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
    let mut mean = Vec::with_capacity(nt);
    for &t in targets {
        let row: Vec<f64> = observed.iter().map(|&o| cov[t * n + o]).collect();
        mean.push(row.iter().zip(&w).map(|(r, wv)| r * wv).sum());
    }
    let mut cond_cov = vec![0.0; nt * nt];
    let solved_cols: Vec<Vec<f64>> = targets
        .iter()
        .map(|&t| {
            let col: Vec<f64> = observed.iter().map(|&o| cov[o * n + t]).collect();
            solve(&col)
        })
        .collect();
    for (a, &ti) in targets.iter().enumerate() {
        for (b, &tj) in targets.iter().enumerate() {
            let dot: f64 = observed
                .iter()
                .enumerate()
                .map(|(idx, &o)| cov[ti * n + o] * solved_cols[b][idx])
                .sum();
            cond_cov[a * nt + b] = cov[ti * n + tj] - dot;
        }
    }
    (mean, cond_cov)
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &mut Vec<f64>, b: &mut Vec<f64>) -> f64 {
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}
