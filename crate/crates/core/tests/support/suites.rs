//! Randomized oracle comparisons shared by the unit-level suites and the
//! acceptance report. Each returns what it checked and every mismatch.

use ndarray::Array2;
use painscale::corpus::PainClass;
use painscale::models::{solve_dual, Node, SvmModel, SvmParams, TreeModel};
use painscale::stats;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracles;

#[derive(Debug, Default)]
pub struct Outcome {
    pub checked: usize,
    pub max_error: f64,
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    fn compare(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        self.checked += 1;
        let err = (got - want).abs();
        self.max_error = self.max_error.max(err);
        if !(err <= tol) {
            self.failures
                .push(format!("{what}: got {got:e}, oracle {want:e}"));
        }
    }

    fn require(&mut self, what: impl FnOnce() -> String, cond: bool) {
        self.checked += 1;
        if !cond {
            self.failures.push(what());
        }
    }

    pub fn merge(&mut self, other: Outcome) {
        self.checked += other.checked;
        self.max_error = self.max_error.max(other.max_error);
        self.failures.extend(other.failures);
    }
}

pub const STATS_TOL: f64 = 1e-8;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller keeps the suites free of distribution crates.
    let u: f64 = rng.random_range(f64::EPSILON..1.0);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

pub fn anova_suite(instances: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Outcome::default();
    for i in 0..instances {
        let g = rng.random_range(2..=4);
        let groups: Vec<Vec<f64>> = (0..g)
            .map(|_| {
                let shift = rng.random_range(-1.0..1.0);
                let n = rng.random_range(2..=8);
                (0..n).map(|_| shift + normal(&mut rng)).collect()
            })
            .collect();
        let (f, p) = oracles::anova(&groups);
        let r = stats::one_way_anova(&groups).expect("valid groups");
        out.compare(
            &format!("anova {i} F"),
            r.statistic,
            f,
            STATS_TOL * f.max(1.0),
        );
        out.compare(&format!("anova {i} p"), r.p, p, STATS_TOL);
    }
    out
}

pub fn chi_square_suite(instances: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Outcome::default();
    for i in 0..instances {
        let (r, c) = (rng.random_range(2..=4), rng.random_range(2..=3));
        let table: Vec<Vec<u64>> = (0..r)
            .map(|_| (0..c).map(|_| rng.random_range(1..=30)).collect())
            .collect();
        let (stat, df, p) = oracles::chi_square(&table);
        let t = stats::chi_square_independence(&table).expect("positive margins");
        out.compare(
            &format!("chi2 {i} statistic"),
            t.statistic,
            stat,
            STATS_TOL * stat.max(1.0),
        );
        out.compare(&format!("chi2 {i} df"), t.df1, f64::from(df), 0.0);
        out.compare(&format!("chi2 {i} p"), t.p, p, STATS_TOL);
    }
    out
}

pub fn pearson_suite(instances: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Outcome::default();
    for i in 0..instances {
        let n = rng.random_range(3..=20);
        let rho = rng.random_range(-1.0..1.0);
        let x: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
        let y: Vec<f64> = x.iter().map(|&v| rho * v + normal(&mut rng)).collect();
        let r = stats::pearson_r(&x, &y).expect("non-degenerate");
        out.compare(
            &format!("pearson {i}"),
            r,
            oracles::pearson(&x, &y),
            STATS_TOL,
        );
    }
    out
}

pub fn cdf_suite(instances: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Outcome::default();
    for i in 0..instances {
        let d1 = f64::from(rng.random_range(1..=5u32));
        let d2 = f64::from(rng.random_range(1..=60u32));
        let x = -2.0 * rng.random_range(f64::EPSILON..1.0f64).ln();
        out.compare(
            &format!("F cdf {i} ({d1},{d2}) at {x}"),
            stats::f_cdf(x, d1, d2).unwrap(),
            oracles::f_cdf(x, d1, d2),
            STATS_TOL,
        );
        out.compare(
            &format!("F sf {i} ({d1},{d2}) at {x}"),
            stats::f_sf(x, d1, d2).unwrap(),
            oracles::f_sf(x, d1, d2),
            STATS_TOL,
        );

        let df = rng.random_range(1..=12u32);
        let x = rng.random_range(0.0..40.0);
        let k = f64::from(df);
        out.compare(
            &format!("chi2 cdf {i} ({df}) at {x}"),
            stats::chi2_cdf(x, k).unwrap(),
            oracles::chi2_cdf(x, df),
            STATS_TOL,
        );
        out.compare(
            &format!("chi2 sf {i} ({df}) at {x}"),
            stats::chi2_sf(x, k).unwrap(),
            oracles::chi2_sf(x, df),
            STATS_TOL,
        );
    }
    out
}

/// ANOVA, chi-square, Pearson and both CDFs, `instances` cases each.
pub fn stats_suite(instances: usize, seed: u64) -> Outcome {
    let mut out = anova_suite(instances, seed);
    out.merge(chi_square_suite(instances, seed + 1));
    out.merge(pearson_suite(instances, seed + 2));
    out.merge(cdf_suite(instances, seed + 3));
    out
}

pub const SVM_OBJECTIVE_TOL: f64 = 1e-6;
pub const SVM_KKT_TOL: f64 = 1e-3;
/// Solver threshold for the objective comparison.
pub const SVM_TIGHT_TOL: f64 = 1e-8;

fn to_array(rows: &[Vec<f64>]) -> Array2<f64> {
    let d = rows[0].len();
    Array2::from_shape_fn((rows.len(), d), |(i, j)| rows[i][j])
}

/// Random tiny binary duals checked against [`oracles::qp_oracle`], plus
/// KKT residuals at the default threshold.
pub fn svm_dual_suite(problems: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Outcome::default();
    let defaults = SvmParams::default();
    for p in 0..problems {
        let n = rng.random_range(2..=8);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let mut y: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        y[0] = 1.0;
        y[1] = -1.0;
        let gamma = rng.random_range(0.1..2.0);
        let c = [0.1, 1.0, 10.0][rng.random_range(0..3)];
        let k = oracles::rbf_kernel(&x, gamma);
        let karr = to_array(&k);

        let tight = solve_dual(&karr, &y, c, SVM_TIGHT_TOL, 10_000_000);
        let feasible = tight.alpha.iter().all(|&a| (0.0..=c).contains(&a))
            && tight
                .alpha
                .iter()
                .zip(&y)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                .abs()
                < 1e-9;
        out.require(
            || format!("svm {p}: infeasible alpha {:?}", tight.alpha),
            feasible,
        );
        let got = oracles::dual_objective(&k, &y, &tight.alpha);
        out.compare(
            &format!("svm {p} objective (n={n}, C={c})"),
            got,
            oracles::qp_oracle(&k, &y, c),
            SVM_OBJECTIVE_TOL,
        );

        let loose = solve_dual(&karr, &y, c, defaults.tol, defaults.max_iter);
        let v = oracles::kkt_violation(&k, &y, &loose.alpha, c);
        out.require(
            || format!("svm {p}: KKT violation {v:e} at default threshold"),
            v <= SVM_KKT_TOL,
        );
    }
    out
}

/// Two far-apart Gaussian clouds must be fitted without training error.
pub fn svm_separable_suite(problems: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Outcome::default();
    for p in 0..problems {
        let n = rng.random_range(4..=30);
        let d = rng.random_range(1..=4);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let (class, centre) = if i % 2 == 0 {
                (PainClass::Mild, -3.0)
            } else {
                (PainClass::Severe, 3.0)
            };
            rows.push(
                (0..d)
                    .map(|_| centre + 0.5 * normal(&mut rng))
                    .collect::<Vec<f64>>(),
            );
            y.push(class);
        }
        let x = to_array(&rows);
        let model = SvmModel::fit(x.view(), &y, SvmParams::default()).expect("two classes");
        let errors = model
            .predict(x.view())
            .iter()
            .zip(&y)
            .filter(|(a, b)| a != b)
            .count();
        out.require(
            || format!("separable {p}: {errors} training errors"),
            errors == 0,
        );
    }
    out
}

const CLASSES: [PainClass; 3] = [PainClass::Mild, PainClass::Moderate, PainClass::Severe];

/// Recursively compare every split of a 1-D tree with the enumeration over
/// the samples reaching it.
fn check_node(node: &Node, x: &[f64], y: &[usize], path: &str, out: &mut Outcome) {
    let Node::Split {
        feature,
        threshold,
        left,
        right,
    } = node
    else {
        return;
    };
    out.require(
        || format!("{path}: split on feature {feature} of a 1-D problem"),
        *feature == 0,
    );
    let cands = oracles::split_candidates(x, y, 3);
    let best = cands.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    match cands.iter().position(|c| c.0 == *threshold) {
        None => out
            .failures
            .push(format!("{path}: threshold {threshold} is not a midpoint")),
        Some(at) => {
            out.compare(&format!("{path} gain"), cands[at].1, best, 1e-12);
            let near_best = cands.iter().filter(|c| c.1 >= best - 1e-9).count();
            if near_best == 1 {
                let want = cands.iter().find(|c| c.1 == best).unwrap().0;
                out.compare(&format!("{path} threshold"), *threshold, want, 0.0);
            }
        }
    }
    let split = |keep: bool| -> (Vec<f64>, Vec<usize>) {
        x.iter()
            .zip(y)
            .filter(|(v, _)| (**v <= *threshold) == keep)
            .map(|(v, c)| (*v, *c))
            .unzip()
    };
    let (lx, ly) = split(true);
    let (rx, ry) = split(false);
    check_node(left, &lx, &ly, &format!("{path}L"), out);
    check_node(right, &rx, &ry, &format!("{path}R"), out);
}

/// Consistent data: each distinct row gets one random label.
fn consistent_labels(rows: &[Vec<f64>], n_classes: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut seen: Vec<(Vec<f64>, usize)> = Vec::new();
    rows.iter()
        .map(|r| match seen.iter().find(|(s, _)| s == r) {
            Some((_, c)) => *c,
            None => {
                let c = rng.random_range(0..n_classes);
                seen.push((r.clone(), c));
                c
            }
        })
        .collect()
}

pub fn tree_suite(problems: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Outcome::default();
    for p in 0..problems {
        let one_d = p % 2 == 0;
        let d = if one_d { 1 } else { rng.random_range(2..=5) };
        let n = rng.random_range(4..=40);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..d)
                    .map(|_| f64::from(rng.random_range(0..6u8)) * 0.5)
                    .collect()
            })
            .collect();
        let n_classes = rng.random_range(2..=3);
        let labels = consistent_labels(&rows, n_classes, &mut rng);
        let y: Vec<PainClass> = labels.iter().map(|&c| CLASSES[c]).collect();
        let x = to_array(&rows);
        let tree = TreeModel::fit(x.view(), &y).expect("non-empty");
        let errors = tree
            .predict(x.view())
            .iter()
            .zip(&y)
            .filter(|(a, b)| a != b)
            .count();
        out.require(
            || format!("tree {p}: {errors} training errors on consistent data"),
            errors == 0,
        );
        if one_d {
            let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
            check_node(
                &tree.root,
                &xs,
                &labels,
                &format!("tree {p} root"),
                &mut out,
            );
        }
    }
    out
}
