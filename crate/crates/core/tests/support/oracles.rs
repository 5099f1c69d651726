//! Reference implementations that share no code with the library.

use std::f64::consts::PI;

/// Tanh-sinh quadrature over `[a, b]`. Integrable endpoint singularities are
/// fine: nodes approach the ends without touching them.
pub fn tanh_sinh(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let half = (b - a) / 2.0;
    if half <= 0.0 {
        return 0.0;
    }
    let term = |t: f64| -> f64 {
        let u = PI / 2.0 * t.sinh();
        let e = (-2.0 * u.abs()).exp();
        // Distance of the node from the nearer endpoint, in units of `half`.
        let delta = 2.0 * e / (1.0 + e);
        let w = half * PI / 2.0 * t.cosh() * 4.0 * e / ((1.0 + e) * (1.0 + e));
        if delta == 0.0 || w == 0.0 {
            return 0.0;
        }
        let x = if t >= 0.0 {
            b - half * delta
        } else {
            a + half * delta
        };
        let v = f(x) * w;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let t_max = 6.5;
    let mut h = 0.5;
    let mut sum = term(0.0);
    let mut k = 1;
    while k as f64 * h <= t_max {
        sum += term(k as f64 * h) + term(-(k as f64) * h);
        k += 1;
    }
    let mut estimate = sum * h;
    for _ in 0..12 {
        h /= 2.0;
        let mut k = 1;
        while k as f64 * h <= t_max {
            sum += term(k as f64 * h) + term(-(k as f64) * h);
            k += 2;
        }
        let next = sum * h;
        let done = (next - estimate).abs() <= 1e-15 * next.abs();
        estimate = next;
        if done {
            break;
        }
    }
    estimate
}

fn beta_lower(a: f64, b: f64, x: f64) -> f64 {
    tanh_sinh(|t| t.powf(a - 1.0) * (1.0 - t).powf(b - 1.0), 0.0, x)
}

/// Regularized incomplete beta `I_x(a, b)` with the complete integral split
/// at one half, so each piece has at most one singular end.
pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let full = beta_lower(a, b, 0.5) + beta_lower(b, a, 0.5);
    if x <= 0.5 {
        beta_lower(a, b, x) / full
    } else {
        1.0 - beta_lower(b, a, 1.0 - x) / full
    }
}

/// `Γ(k / 2)` from the factorial and half-integer product formulas.
pub fn gamma_half(k: u32) -> f64 {
    if k % 2 == 0 {
        (1..k / 2).map(f64::from).product()
    } else {
        PI.sqrt()
            * (1..=(k - 1) / 2)
                .map(|i| f64::from(i) - 0.5)
                .product::<f64>()
    }
}

pub fn chi2_cdf(x: f64, df: u32) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let a = f64::from(df) / 2.0;
    tanh_sinh(|t| t.powf(a - 1.0) * (-t).exp(), 0.0, x / 2.0) / gamma_half(df)
}

/// Upper tail computed from the tail integral itself, not as `1 − cdf`.
pub fn chi2_sf(x: f64, df: u32) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let a = f64::from(df) / 2.0;
    let lo = x / 2.0;
    // Substitute t = lo + s / (1 − s) to map the tail onto [0, 1).
    let tail = tanh_sinh(
        |s| {
            let t = lo + s / (1.0 - s);
            t.powf(a - 1.0) * (-t).exp() / ((1.0 - s) * (1.0 - s))
        },
        0.0,
        1.0,
    );
    tail / gamma_half(df)
}

pub fn f_cdf(x: f64, d1: f64, d2: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    beta_reg(d1 / 2.0, d2 / 2.0, d1 * x / (d1 * x + d2))
}

pub fn f_sf(x: f64, d1: f64, d2: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    beta_reg(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * x))
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// One-way ANOVA `(F, p)` from explicit sums of squares.
pub fn anova(groups: &[Vec<f64>]) -> (f64, f64) {
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let grand = mean(&all);
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for g in groups {
        let m = mean(g);
        ssb += g.len() as f64 * (m - grand) * (m - grand);
        for &v in g {
            ssw += (v - m) * (v - m);
        }
    }
    let d1 = (groups.len() - 1) as f64;
    let d2 = (all.len() - groups.len()) as f64;
    let f = (ssb / d1) / (ssw / d2);
    (f, f_sf(f, d1, d2))
}

/// Pearson chi-square `(statistic, df, p)` from margin-derived expectations.
pub fn chi_square(table: &[Vec<u64>]) -> (f64, u32, f64) {
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let cols: Vec<f64> = (0..table[0].len())
        .map(|j| table.iter().map(|r| r[j]).sum::<u64>() as f64)
        .collect();
    let n: f64 = rows.iter().sum();
    let mut stat = 0.0;
    for (i, r) in table.iter().enumerate() {
        for (j, &o) in r.iter().enumerate() {
            let e = rows[i] * cols[j] / n;
            stat += (o as f64 - e).powi(2) / e;
        }
    }
    let df = ((table.len() - 1) * (table[0].len() - 1)) as u32;
    (stat, df, chi2_sf(stat, df))
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    sxy / (sxx * syy).sqrt()
}

/// Solve `a·x = b` by Gaussian elimination with partial pivoting; `None` when
/// a pivot vanishes.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

pub fn rbf_kernel(x: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    x.iter()
        .map(|a| {
            x.iter()
                .map(|b| {
                    (-gamma * a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>()).exp()
                })
                .collect()
        })
        .collect()
}

/// `½ αᵀQα − Σα` with `Q_ij = y_i y_j K_ij`.
pub fn dual_objective(k: &[Vec<f64>], y: &[f64], alpha: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * k[i][j];
        }
    }
    0.5 * quad - alpha.iter().sum::<f64>()
}

/// Largest KKT violation `max_{up} −y∇f − min_{low} −y∇f` of a dual point.
pub fn kkt_violation(k: &[Vec<f64>], y: &[f64], alpha: &[f64], c: f64) -> f64 {
    let n = y.len();
    let (mut up, mut low) = (f64::NEG_INFINITY, f64::INFINITY);
    for t in 0..n {
        let grad: f64 = (0..n)
            .map(|s| y[t] * y[s] * k[t][s] * alpha[s])
            .sum::<f64>()
            - 1.0;
        let v = -y[t] * grad;
        let in_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
        let in_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
        if in_up {
            up = up.max(v);
        }
        if in_low {
            low = low.min(v);
        }
    }
    if up.is_finite() && low.is_finite() {
        (up - low).max(0.0)
    } else {
        0.0
    }
}

/// Global minimum of the box- and equality-constrained dual, by enumerating
/// every assignment of each variable to the lower bound, upper bound or the
/// free set and solving the equality-constrained problem on the free set.
pub fn qp_oracle(k: &[Vec<f64>], y: &[f64], c: f64) -> f64 {
    let n = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * k[i][j];
    let mut best = f64::INFINITY;
    for code in 0..3usize.pow(n as u32) {
        let mut state = vec![0u8; n];
        let mut r = code;
        for s in state.iter_mut() {
            *s = (r % 3) as u8;
            r /= 3;
        }
        let mut alpha: Vec<f64> = state
            .iter()
            .map(|&s| if s == 1 { c } else { 0.0 })
            .collect();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let bound_sum: f64 = (0..n)
            .filter(|&i| state[i] != 2)
            .map(|i| y[i] * alpha[i])
            .sum();
        if free.is_empty() {
            if bound_sum.abs() > 1e-12 {
                continue;
            }
        } else {
            let m = free.len();
            let mut a = vec![vec![0.0; m + 1]; m + 1];
            let mut b = vec![0.0; m + 1];
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[r][s] = q(i, j);
                }
                a[r][m] = y[i];
                a[m][r] = y[i];
                let fixed: f64 = (0..n)
                    .filter(|&j| state[j] != 2)
                    .map(|j| q(i, j) * alpha[j])
                    .sum();
                b[r] = 1.0 - fixed;
            }
            b[m] = -bound_sum;
            let Some(sol) = solve_linear(a, b) else {
                continue;
            };
            if sol[..m].iter().any(|&v| v < -1e-12 || v > c + 1e-12) {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r].clamp(0.0, c);
            }
        }
        best = best.min(dual_objective(k, y, &alpha));
    }
    best
}

pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    1.0 - counts
        .iter()
        .map(|&c| (c as f64 / n as f64).powi(2))
        .sum::<f64>()
}

/// Every midpoint threshold of a 1-D sample with its Gini gain, in ascending
/// threshold order.
pub fn split_candidates(x: &[f64], y: &[usize], n_classes: usize) -> Vec<(f64, f64)> {
    let mut values: Vec<f64> = x.to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let hist = |keep: &dyn Fn(f64) -> bool| {
        let mut h = vec![0usize; n_classes];
        for (&v, &c) in x.iter().zip(y) {
            if keep(v) {
                h[c] += 1;
            }
        }
        h
    };
    let n = x.len() as f64;
    let parent = gini(&hist(&|_| true));
    values
        .windows(2)
        .map(|w| {
            let t = w[0] + (w[1] - w[0]) / 2.0;
            let left = hist(&|v| v <= t);
            let right = hist(&|v| v > t);
            let nl: usize = left.iter().sum();
            let gain = parent - nl as f64 / n * gini(&left) - (n - nl as f64) / n * gini(&right);
            (t, gain)
        })
        .collect()
}
