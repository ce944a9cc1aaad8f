//! Hypothesis-testing toolkit shared by all experiments.
//!
//! Each test emits a [`TestReport`]. Pass semantics are uniform: a p-value
//! test passes when `p >= threshold`, a distance/z-score test passes when
//! `statistic <= threshold`. Everything is deterministic given its inputs
//! and the supplied stream, including permutation shuffles.

use crate::dist::phi_bar;
use crate::quad::gl;
use crate::rng::Stream;
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_lr;

/// Outcome of one statistical check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestReport {
    pub experiment: String,
    pub n: Vec<u64>,
    pub seed: u64,
    pub statistic: f64,
    pub p_value_or_distance: f64,
    pub threshold: f64,
    pub pass: bool,
    pub retries: u64,
}

impl TestReport {
    /// p-value semantics: pass iff `p >= threshold`.
    pub fn from_p_value(name: &str, n: Vec<u64>, statistic: f64, p: f64, threshold: f64) -> Self {
        TestReport {
            experiment: name.to_string(),
            n,
            seed: 0,
            statistic,
            p_value_or_distance: p,
            threshold,
            pass: p >= threshold,
            retries: 0,
        }
    }

    /// distance semantics: pass iff `distance <= threshold`.
    pub fn from_distance(name: &str, n: Vec<u64>, distance: f64, threshold: f64) -> Self {
        TestReport {
            experiment: name.to_string(),
            n,
            seed: 0,
            statistic: distance,
            p_value_or_distance: distance,
            threshold,
            pass: distance <= threshold,
            retries: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_retries(mut self, retries: u64) -> Self {
        self.retries = retries;
        self
    }
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 1e-8 {
        return 1.0;
    }
    if lambda < 1.18 {
        // theta-function form, fast for small lambda
        let f = std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda);
        let mut cdf = 0.0;
        for k in 1..=12u32 {
            let m = (2 * k - 1) as f64;
            cdf += (-m * m * f).exp();
        }
        cdf *= (2.0 * std::f64::consts::PI).sqrt() / lambda;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut sf = 0.0;
        for k in 1..=32u32 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            sf += if k % 2 == 1 { term } else { -term };
        }
        (2.0 * sf).clamp(0.0, 1.0)
    }
}

fn sort_checked(xs: &mut [f64]) -> Result<()> {
    if xs.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("samples contain NaN".into()));
    }
    xs.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(())
}

/// One-sample Kolmogorov-Smirnov test against a CDF.
///
/// Sorts `samples` in place. Asymptotic p-value; requires n >= 20.
pub fn ks_one_sample<F: Fn(f64) -> f64>(
    name: &str,
    samples: &mut [f64],
    cdf: F,
    alpha: f64,
) -> Result<TestReport> {
    let n = samples.len();
    if n < 20 {
        return Err(Error::InvalidInput(format!("KS needs n >= 20, got {n}")));
    }
    sort_checked(samples)?;
    let nf = n as f64;
    let mut d = 0.0f64;
    let mut prev_f = -1.0;
    for (i, &x) in samples.iter().enumerate() {
        let fx = cdf(x);
        if fx < prev_f - 1e-12 || !(0.0..=1.0 + 1e-12).contains(&fx) {
            return Err(Error::InvalidInput(format!(
                "reference CDF not monotone in [0,1] on sample range (x = {x})"
            )));
        }
        prev_f = fx;
        d = d.max((i as f64 / nf - fx).abs()).max(((i + 1) as f64 / nf - fx).abs());
    }
    let p = kolmogorov_sf(nf.sqrt() * d);
    Ok(TestReport::from_p_value(name, vec![n as u64], d, p, alpha))
}

/// Two-sample Kolmogorov-Smirnov test. Sorts both inputs in place.
pub fn ks_two_sample(name: &str, a: &mut [f64], b: &mut [f64], alpha: f64) -> Result<TestReport> {
    let (n1, n2) = (a.len(), b.len());
    if n1 < 20 || n2 < 20 {
        return Err(Error::InvalidInput(format!("KS needs n >= 20, got ({n1}, {n2})")));
    }
    sort_checked(a)?;
    sort_checked(b)?;
    let mut i = 0usize;
    let mut j = 0usize;
    let mut d = 0.0f64;
    while i < n1 && j < n2 {
        // advance through ties on both sides before comparing ECDFs
        let x = a[i].min(b[j]);
        while i < n1 && a[i] == x {
            i += 1;
        }
        while j < n2 && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / n1 as f64 - j as f64 / n2 as f64).abs());
    }
    let n_eff = (n1 as f64 * n2 as f64) / (n1 as f64 + n2 as f64);
    let p = kolmogorov_sf(n_eff.sqrt() * d);
    Ok(TestReport::from_p_value(
        name,
        vec![n1 as u64, n2 as u64],
        d,
        p,
        alpha,
    ))
}

// ---------------------------------------------------------------------------
// Chi-square goodness of fit with quadrature bin probabilities
// ---------------------------------------------------------------------------

/// Pearson chi-square from raw cell counts and cell probabilities.
///
/// Cells with expected count below 5 are pooled into one cell; the leftover
/// probability mass (1 - sum p) forms an implicit cell with the unassigned
/// counts. Degrees of freedom = final cells - 1.
pub fn chi_square_from_counts(
    name: &str,
    counts: &[u64],
    probs: &[f64],
    n_total: u64,
    alpha: f64,
) -> Result<TestReport> {
    if counts.len() != probs.len() || counts.is_empty() {
        return Err(Error::InvalidInput("counts/probs length mismatch".into()));
    }
    let psum: f64 = probs.iter().sum();
    if probs.iter().any(|&p| p < -1e-9) || psum > 1.0 + 1e-6 {
        return Err(Error::Setup(format!(
            "bin probabilities not a sub-distribution (sum = {psum})"
        )));
    }
    let assigned: u64 = counts.iter().sum();
    if assigned > n_total {
        return Err(Error::InvalidInput("counts exceed n_total".into()));
    }
    let nf = n_total as f64;
    let mut cells: Vec<(f64, f64)> = counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| (c as f64, nf * p.max(0.0)))
        .collect();
    // implicit remainder cell
    let p_rest = (1.0 - psum).max(0.0);
    cells.push(((n_total - assigned) as f64, nf * p_rest));

    // pool low-expectation cells
    let mut kept: Vec<(f64, f64)> = Vec::with_capacity(cells.len());
    let mut pool = (0.0, 0.0);
    for (o, e) in cells {
        if e < 5.0 {
            pool.0 += o;
            pool.1 += e;
        } else {
            kept.push((o, e));
        }
    }
    if pool.1 >= 5.0 {
        kept.push(pool);
    } else if let Some(last) = kept.last_mut() {
        last.0 += pool.0;
        last.1 += pool.1;
    }
    if kept.len() < 2 {
        return Err(Error::Setup("fewer than 2 usable cells after pooling".into()));
    }
    let stat: f64 = kept
        .iter()
        .map(|&(o, e)| if e > 0.0 { (o - e) * (o - e) / e } else { 0.0 })
        .sum();
    let dof = (kept.len() - 1) as f64;
    let p = 1.0 - gamma_lr(dof / 2.0, stat / 2.0);
    Ok(TestReport::from_p_value(name, vec![n_total], stat, p, alpha))
}

/// Adaptive-bin chi-square GOF of d-dimensional samples against a density
/// oracle (d <= 3). Bin edges come from marginal sample quantiles inside
/// `box_hi` (support lower edge is `box_lo`); bin probabilities come from
/// Gauss-Legendre quadrature of the oracle over each cell.
pub fn chi_square_gof_nd<F: Fn(&[f64]) -> f64>(
    name: &str,
    samples: &[Vec<f64>],
    density: F,
    bins_per_dim: usize,
    box_lo: &[f64],
    box_hi: &[f64],
    alpha: f64,
) -> Result<TestReport> {
    let n = samples.len();
    if n < 100 {
        return Err(Error::InvalidInput("GOF needs n >= 100".into()));
    }
    let d = samples[0].len();
    if d == 0 || d > 3 || box_lo.len() != d || box_hi.len() != d {
        return Err(Error::InvalidInput(format!("unsupported dimension {d}")));
    }
    if bins_per_dim < 2 {
        return Err(Error::InvalidInput("need >= 2 bins per dim".into()));
    }
    // quantile edges per dimension
    let mut edges: Vec<Vec<f64>> = Vec::with_capacity(d);
    for dim in 0..d {
        let mut col: Vec<f64> = samples.iter().map(|s| s[dim]).collect();
        sort_checked(&mut col)?;
        let mut e = vec![box_lo[dim]];
        for k in 1..bins_per_dim {
            let q = col[(n * k) / bins_per_dim];
            e.push(q.clamp(box_lo[dim], box_hi[dim]));
        }
        e.push(box_hi[dim]);
        for w in e.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Setup("degenerate quantile edges".into()));
            }
        }
        edges.push(e);
    }
    let n_cells = bins_per_dim.pow(d as u32);
    let mut counts = vec![0u64; n_cells];
    'outer: for s in samples {
        let mut idx = 0usize;
        for dim in 0..d {
            let e = &edges[dim];
            let x = s[dim];
            if x < e[0] || x > e[bins_per_dim] {
                continue 'outer; // lands in the implicit remainder cell
            }
            let mut b = e.partition_point(|&v| v <= x);
            b = b.clamp(1, bins_per_dim) - 1;
            idx = idx * bins_per_dim + b;
        }
        counts[idx] += 1;
    }
    // cell probabilities by product Gauss-Legendre
    let rule = gl(16);
    let mut probs = vec![0.0f64; n_cells];
    for (cell, prob) in probs.iter_mut().enumerate() {
        let mut b = [0usize; 3];
        let mut c = cell;
        for dim in (0..d).rev() {
            b[dim] = c % bins_per_dim;
            c /= bins_per_dim;
        }
        let lo: Vec<f64> = (0..d).map(|k| edges[k][b[k]]).collect();
        let hi: Vec<f64> = (0..d).map(|k| edges[k][b[k] + 1]).collect();
        *prob = match d {
            1 => rule.integrate(lo[0], hi[0], |x| density(&[x])),
            2 => rule.integrate(lo[0], hi[0], |x| {
                rule.integrate(lo[1], hi[1], |y| density(&[x, y]))
            }),
            _ => rule.integrate(lo[0], hi[0], |x| {
                rule.integrate(lo[1], hi[1], |y| {
                    rule.integrate(lo[2], hi[2], |z| density(&[x, y, z]))
                })
            }),
        };
    }
    chi_square_from_counts(name, &counts, &probs, n as u64, alpha)
}

// ---------------------------------------------------------------------------
// Energy distance permutation test
// ---------------------------------------------------------------------------

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn energy_statistic(pts: &[Vec<f64>], idx: &[usize], n1: usize) -> f64 {
    let n2 = idx.len() - n1;
    let (mut sxy, mut sxx, mut syy) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..n1 {
        let xi = &pts[idx[i]];
        for j in (i + 1)..n1 {
            sxx += euclid(xi, &pts[idx[j]]);
        }
        for j in n1..idx.len() {
            sxy += euclid(xi, &pts[idx[j]]);
        }
    }
    for i in n1..idx.len() {
        for j in (i + 1)..idx.len() {
            syy += euclid(&pts[idx[i]], &pts[idx[j]]);
        }
    }
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    2.0 * sxy / (n1f * n2f) - 2.0 * sxx / (n1f * n1f) - 2.0 * syy / (n2f * n2f)
}

/// Two-sample energy-distance permutation test.
///
/// Groups larger than `cap` are subsampled (deterministically from `rng`).
pub fn energy_distance_test(
    name: &str,
    x: &[Vec<f64>],
    y: &[Vec<f64>],
    permutations: usize,
    cap: usize,
    rng: &mut Stream,
    alpha: f64,
) -> Result<TestReport> {
    if permutations < 100 {
        return Err(Error::InvalidInput("need >= 100 permutations".into()));
    }
    if x.is_empty() || y.is_empty() || x[0].len() != y[0].len() {
        return Err(Error::InvalidInput("empty sample or dimension mismatch".into()));
    }
    let d = x[0].len();
    if x.iter().chain(y.iter()).any(|v| v.len() != d) {
        return Err(Error::InvalidInput("ragged sample dimensions".into()));
    }
    let take = |src: &[Vec<f64>], rng: &mut Stream| -> Vec<Vec<f64>> {
        if src.len() <= cap {
            src.to_vec()
        } else {
            // partial Fisher-Yates for a uniform subsample
            let mut ix: Vec<usize> = (0..src.len()).collect();
            for i in 0..cap {
                let j = rng.gen_range(i..ix.len());
                ix.swap(i, j);
            }
            ix[..cap].iter().map(|&i| src[i].clone()).collect()
        }
    };
    let xs = take(x, rng);
    let ys = take(y, rng);
    let n1 = xs.len();
    let pts: Vec<Vec<f64>> = xs.into_iter().chain(ys).collect();
    let idx: Vec<usize> = (0..pts.len()).collect();
    let observed = energy_statistic(&pts, &idx, n1);
    let mut shuffled = idx;
    let mut ge = 0usize;
    for _ in 0..permutations {
        for i in (1..shuffled.len()).rev() {
            let j = rng.gen_range(0..=i);
            shuffled.swap(i, j);
        }
        if energy_statistic(&pts, &shuffled, n1) >= observed {
            ge += 1;
        }
    }
    let p = (1.0 + ge as f64) / (1.0 + permutations as f64);
    Ok(TestReport::from_p_value(
        name,
        vec![n1 as u64, (pts.len() - n1) as u64],
        observed,
        p,
        alpha,
    ))
}

// ---------------------------------------------------------------------------
// Poisson count test and weighted-mean (Radon-Nikodym) check
// ---------------------------------------------------------------------------

/// z-tests on the mean and on the dispersion (variance/mean) of iid counts
/// against a Poisson(mean) null. Pass iff both |z| <= 3.
pub fn poisson_count_test(name: &str, counts: &[u64], mean: f64) -> Result<TestReport> {
    let n = counts.len();
    if n < 1000 {
        return Err(Error::InvalidInput(format!("need >= 1000 counts, got {n}")));
    }
    let nf = n as f64;
    let sum: f64 = counts.iter().map(|&c| c as f64).sum();
    let xbar = sum / nf;
    let z_mean = (xbar - mean) / (mean / nf).sqrt();
    // under H0, (n-1) s^2 / mean ~ chi^2_{n-1}; normal approximation
    let s2 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - xbar;
            d * d
        })
        .sum::<f64>()
        / (nf - 1.0);
    let z_disp = ((nf - 1.0) * s2 / mean - (nf - 1.0)) / (2.0 * (nf - 1.0)).sqrt();
    let dist = z_mean.abs().max(z_disp.abs());
    Ok(TestReport::from_distance(name, vec![n as u64], dist, 3.0))
}

/// Two-sided p-value of the mean z-score only (used for null calibration).
pub fn poisson_mean_p(counts: &[u64], mean: f64) -> f64 {
    let nf = counts.len() as f64;
    let xbar = counts.iter().map(|&c| c as f64).sum::<f64>() / nf;
    let z = (xbar - mean) / (mean / nf).sqrt();
    2.0 * phi_bar(z.abs())
}

/// Compares `mean f(A)` with the weighted mean `sum w_i f(B_i) / n_B`
/// (weights are Radon-Nikodym factors with unit expectation). Pass iff the
/// pooled z-score is at most 3.
pub fn weighted_mean_check<F: Fn(f64) -> f64>(
    name: &str,
    f: F,
    sample_a: &[f64],
    sample_b: &[f64],
    weights_b: &[f64],
) -> Result<TestReport> {
    if sample_b.len() != weights_b.len() || sample_a.is_empty() || sample_b.is_empty() {
        return Err(Error::InvalidInput("length mismatch or empty sample".into()));
    }
    if weights_b.iter().any(|&w| w < 0.0) {
        return Err(Error::InvalidInput("negative weight".into()));
    }
    if weights_b.iter().all(|&w| w == 0.0) {
        return Err(Error::InvalidInput("degenerate weights (all zero)".into()));
    }
    let stats = |vals: &mut dyn Iterator<Item = f64>, n: f64| -> (f64, f64) {
        let (mut s, mut s2, mut cnt) = (0.0, 0.0, 0.0);
        for v in vals {
            s += v;
            s2 += v * v;
            cnt += 1.0;
        }
        debug_assert_eq!(cnt, n);
        let mean = s / n;
        (mean, ((s2 / n - mean * mean) / n).max(0.0))
    };
    let (ma, va) = stats(&mut sample_a.iter().map(|&x| f(x)), sample_a.len() as f64);
    let (mb, vb) = stats(
        &mut sample_b.iter().zip(weights_b).map(|(&x, &w)| w * f(x)),
        sample_b.len() as f64,
    );
    let z = (ma - mb) / (va + vb).sqrt();
    Ok(TestReport::from_distance(
        name,
        vec![sample_a.len() as u64, sample_b.len() as u64],
        z.abs(),
        3.0,
    ))
}

/// Weighted mean of `f` over sample/weight pairs with its MC standard error;
/// used for the RN normalization checks.
pub fn weighted_mean_se<F: Fn(f64) -> f64>(f: F, sample: &[f64], weights: &[f64]) -> (f64, f64) {
    let n = sample.len() as f64;
    let (mut s, mut s2) = (0.0, 0.0);
    for (&x, &w) in sample.iter().zip(weights) {
        let v = w * f(x);
        s += v;
        s2 += v * v;
    }
    let mean = s / n;
    (mean, ((s2 / n - mean * mean) / n).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use rand_distr::Distribution;

    #[test]
    fn kolmogorov_critical_value() {
        // Q(1.9495) ~ 0.001, the alpha = 0.001 critical point.
        let lo = kolmogorov_sf(1.94);
        let hi = kolmogorov_sf(1.96);
        assert!(lo > 0.001 && hi < 0.001, "{lo} {hi}");
        // the two series agree at the branch seam
        assert!((kolmogorov_sf(1.18 - 1e-7) - kolmogorov_sf(1.18 + 1e-7)).abs() < 1e-6);
    }

    #[test]
    fn ks_sample_vs_itself() {
        let mut a: Vec<f64> = (0..500).map(|i| (i as f64) / 500.0).collect();
        let mut b = a.clone();
        let rep = ks_two_sample("self", &mut a, &mut b, 0.001).unwrap();
        assert_eq!(rep.statistic, 0.0);
        assert!((rep.p_value_or_distance - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ks_uniform_critical_distance() {
        // 1e5 uniforms against the uniform CDF stay under the alpha = 0.001
        // critical distance in repeated runs.
        for seed in 0..5 {
            let mut rng = RngStream::new(100 + seed, 0).rng();
            let n = 100_000usize;
            let mut xs: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let rep = ks_one_sample("unif", &mut xs, |x| x.clamp(0.0, 1.0), 0.001).unwrap();
            assert!(rep.statistic < 1.95 / (n as f64).sqrt(), "{rep:?}");
            assert!(rep.pass);
        }
    }

    #[test]
    fn ks_shifted_sample_rejects() {
        let mut rng = RngStream::new(7, 1).rng();
        let a: Vec<f64> = (0..2000).map(|_| rng.gen::<f64>()).collect();
        let mut b: Vec<f64> = a.iter().map(|x| x + 1.0).collect();
        let mut a = a;
        let rep = ks_two_sample("shift", &mut a, &mut b, 0.001).unwrap();
        assert!(rep.p_value_or_distance < 1e-6, "{rep:?}");
    }

    #[test]
    fn ks_too_small_errors() {
        let mut a = vec![0.1, 0.2];
        assert!(ks_one_sample("tiny", &mut a, |x| x, 0.001).is_err());
    }

    #[test]
    fn gof_null_and_power() {
        // Samples drawn from the oracle itself pass; a wrong oracle
        // (chi_3 in place of chi_5) is rejected hard.
        let mut rng = RngStream::new(21, 0).rng();
        let gamma = rand_distr::Gamma::new(2.5, 2.0).unwrap();
        let samples: Vec<Vec<f64>> =
            (0..100_000).map(|_| vec![f64::sqrt(gamma.sample(&mut rng))]).collect();
        let ok = chi_square_gof_nd(
            "chi5_gof",
            &samples,
            |x| crate::dist::chi_pdf(5, x[0]),
            8,
            &[0.0],
            &[12.0],
            0.001,
        )
        .unwrap();
        assert!(ok.pass, "{ok:?}");
        let bad = chi_square_gof_nd(
            "chi3_gof_wrong",
            &samples,
            |x| crate::dist::chi_pdf(3, x[0]),
            8,
            &[0.0],
            &[12.0],
            0.001,
        )
        .unwrap();
        assert!(bad.p_value_or_distance < 1e-6, "{bad:?}");
    }

    #[test]
    fn energy_null_and_power() {
        let mut rng = RngStream::new(22, 0).rng();
        let gamma5 = rand_distr::Gamma::new(2.5, 2.0).unwrap();
        let gamma3 = rand_distr::Gamma::new(1.5, 2.0).unwrap();
        let x: Vec<Vec<f64>> = (0..4000).map(|_| vec![f64::sqrt(gamma5.sample(&mut rng))]).collect();
        let y: Vec<Vec<f64>> = (0..4000).map(|_| vec![f64::sqrt(gamma5.sample(&mut rng))]).collect();
        let z: Vec<Vec<f64>> = (0..4000).map(|_| vec![f64::sqrt(gamma3.sample(&mut rng))]).collect();
        let mut prng = RngStream::new(22, 1).rng();
        let null = energy_distance_test("null", &x, &y, 200, 1000, &mut prng, 0.001).unwrap();
        assert!(null.pass, "{null:?}");
        let mut prng = RngStream::new(22, 2).rng();
        let alt = energy_distance_test("alt", &x, &z, 200, 1000, &mut prng, 0.001).unwrap();
        assert!(alt.p_value_or_distance < 0.01, "{alt:?}");
    }

    #[test]
    fn energy_identical_draw() {
        let x = vec![vec![1.0], vec![2.0], vec![3.0]];
        let mut prng = RngStream::new(1, 1).rng();
        let rep = energy_distance_test("same", &x, &x, 100, 1000, &mut prng, 0.001).unwrap();
        assert!((rep.p_value_or_distance - 1.0).abs() < 1e-12, "{rep:?}");
    }

    #[test]
    fn energy_dimension_mismatch() {
        let x = vec![vec![1.0, 2.0]];
        let y = vec![vec![1.0]];
        let mut prng = RngStream::new(1, 1).rng();
        assert!(energy_distance_test("dim", &x, &y, 100, 10, &mut prng, 0.001).is_err());
    }

    #[test]
    fn poisson_counts() {
        // null calibration on simulated Poisson(1)
        let mut rng = RngStream::new(23, 0).rng();
        let pois = rand_distr::Poisson::new(1.0f64).unwrap();
        let counts: Vec<u64> = (0..50_000).map(|_| pois.sample(&mut rng) as u64).collect();
        let rep = poisson_count_test("pois_null", &counts, 1.0).unwrap();
        assert!(rep.pass, "{rep:?}");
        // constant counts fail dispersion
        let constant = vec![1u64; 5000];
        let rep = poisson_count_test("pois_const", &constant, 1.0).unwrap();
        assert!(!rep.pass, "{rep:?}");
    }

    #[test]
    fn weighted_mean_identity() {
        let mut rng = RngStream::new(24, 0).rng();
        let a: Vec<f64> = (0..20_000).map(|_| rng.gen::<f64>()).collect();
        let b: Vec<f64> = (0..20_000).map(|_| rng.gen::<f64>()).collect();
        let w = vec![1.0; b.len()];
        let rep = weighted_mean_check("wm_id", |x| x * x, &a, &b, &w).unwrap();
        assert!(rep.pass, "{rep:?}");
        let all_zero = vec![0.0; b.len()];
        assert!(weighted_mean_check("wm_bad", |x| x, &a, &b, &all_zero).is_err());
    }
}
