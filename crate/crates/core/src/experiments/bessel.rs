//! Experiments on the convex minorant of the drifted Bessel(3) process:
//! face-count intensity, agreement of the direct and Poissonian
//! constructions, and the fixed-time marginal densities.

use super::{par_draws, Params, RunOutput, ALPHA};
use crate::dist::{phi, phi_bar, norm_cdf, zenith_density};
use crate::geometry::{convex_minorant, straddle};
use crate::poisson::{bessel_minorant_at, sample_minorant_faces};
use crate::quad::{gl, integrate_panels, integrate_to_inf};
use crate::rng::RngStream;
use crate::stats::{chi_square_from_counts, energy_distance_test, poisson_count_test, TestReport};
use crate::Result;

/// One direct draw of `(C'(1), R(1) - C(1))` from a grid path.
fn direct_functionals(
    mu: f64,
    horizon: f64,
    grid_per_unit: usize,
    rng: &mut crate::rng::Stream,
) -> (f64, f64) {
    let n = (horizon * grid_per_unit as f64) as usize;
    let path = crate::paths::sample_bessel(3, 0.0, mu, n, horizon, rng).expect("bessel path");
    let minorant = convex_minorant(&path).expect("minorant");
    let info = straddle(&minorant, 1.0).expect("straddle at 1");
    let r1 = path.value_at(1.0).expect("grid value");
    (info.slope, r1 - info.value)
}

pub(super) fn bessel_minorant_counts(p: &Params, base: RngStream) -> Result<RunOutput> {
    let reps = p.get_usize("reps");
    let mu = p.get("mu");
    let (a1, a2) = (p.get("a1"), p.get("a2"));
    let expected = ((mu - a1) / (mu - a2)).ln();
    let mut out = RunOutput::default();

    // quadrature cross-check of the slope-marginal intensity
    let by_quad = integrate_panels(a1, a2, 64, 4, |alpha| {
        integrate_to_inf(0.0, 64, 16, |t| phi(t.sqrt() * (mu - alpha)) / t.sqrt())
    });
    out.push(TestReport::from_distance(
        "bessel_minorant_intensity_quadrature",
        vec![],
        (by_quad - expected).abs(),
        1e-5,
    ));

    let alpha_hi = a2 + 0.5 * (mu - a2);
    let counts: Vec<u64> = par_draws(base, reps, |rng| {
        sample_minorant_faces(mu, alpha_hi, rng)
            .expect("faces")
            .iter()
            .filter(|f| f.0 > a1 && f.0 < a2)
            .count() as u64
    });
    out.push(poisson_count_test("bessel_minorant_counts", &counts, expected)?);
    Ok(out)
}

pub(super) fn bessel_cross_construction(p: &Params, base: RngStream) -> Result<RunOutput> {
    let n = p.get_usize("n");
    let mu = p.get("mu");
    let horizon = p.get("horizon");
    let grid = p.get_usize("grid_per_unit");
    let perms = p.get_usize("permutations");
    let cap = p.get_usize("cap");

    let direct: Vec<Vec<f64>> = par_draws(base.substream(1), n, |rng| {
        let (s, g) = direct_functionals(mu, horizon, grid, rng);
        vec![s, g]
    });
    let poissonian: Vec<Vec<f64>> = par_draws(base.substream(2), n, |rng| {
        let (s, g) = bessel_minorant_at(mu, 1.0, rng).expect("lazy minorant");
        vec![s, g]
    });
    let mut prng = base.substream(3).rng();
    let rep = energy_distance_test(
        "bessel_cross_construction",
        &direct,
        &poissonian,
        perms,
        cap,
        &mut prng,
        ALPHA,
    )?;
    let mut out = RunOutput::default();
    out.push(rep);
    Ok(out)
}

/// Marginal density of `C'(1)` for the minorant of BES^0(3, mu), obtained
/// by integrating the five-variable fixed-time density: the gap integrates
/// out exactly, the start-to-crossing span contributes an incomplete
/// Gaussian tail, and the vertex-position factor is a section integral of
/// the zenith density. The `G_1 = 0` boundary part contributes
/// `2 phi_bar(mu - alpha) / mu`.
///
/// The vertex time is substituted as u = q^2 to absorb the integrable
/// 1/sqrt(u) endpoint behaviour of the zenith section.
fn cprime_marginal_density(mu: f64, alpha: f64) -> f64 {
    if alpha <= 0.0 || alpha >= mu {
        return 0.0;
    }
    let c = mu - alpha;
    let interior = integrate_panels(0.0, 1.0, 64, 2, |q| {
        let u = q * q;
        if u <= 0.0 {
            return 0.0;
        }
        let h_section = integrate_panels(c * u, mu * u, 32, 1, |z| {
            zenith_density(mu, c, u, z).unwrap_or(0.0)
        });
        2.0 * q * (2.0 / c) * phi_bar(c * (1.0 - u).max(0.0).sqrt()) * h_section
    });
    interior + 2.0 * phi_bar(c) / mu
}

/// Probabilities that the gap `R(1) - C(1)` lands in each bin of `edges`,
/// by quadrature of the five-variable density over the other four
/// variables; the gap integral over a bin is a Gaussian partial moment.
/// One pass serves all bins.
fn gap_bin_probabilities(mu: f64, edges: &[f64]) -> Vec<f64> {
    let n_bins = edges.len() - 1;
    // second moment of the standard normal below v
    let m2 = |v: f64| norm_cdf(v) - v * phi(v) - 0.5;
    let alpha_nodes = crate::quad::gl_nodes(0.0, mu, 32, 2);
    let q_nodes = crate::quad::gl_nodes(0.0, 1.0, 32, 2); // u = q^2
    let z_nodes = crate::quad::gl_nodes(0.0, 1.0, 32, 1); // scaled section variable
    let mut probs = vec![0.0f64; n_bins];
    for &(alpha, wa) in &alpha_nodes {
        let c = mu - alpha;
        // interior part
        for &(q, wq) in &q_nodes {
            let u = q * q;
            if u <= 0.0 || u >= 1.0 {
                continue;
            }
            let mut h_section = 0.0;
            for &(zq, wz) in &z_nodes {
                let z = u * (c + zq * (mu - c)); // z in (c u, mu u)
                h_section += wz * u * (mu - c) * zenith_density(mu, c, u, z).unwrap_or(0.0);
            }
            if h_section == 0.0 {
                continue;
            }
            let x_nodes = crate::quad::gl_nodes_to_inf(1.0 - u, 32, 6);
            for &(x, wx) in &x_nodes {
                let sigma = ((1.0 - u) * (x + u - 1.0) / x).max(0.0).sqrt();
                if sigma <= 0.0 {
                    continue;
                }
                let base = wa * wq * 2.0 * q * wx * phi(c * x.sqrt()) / x.sqrt() * h_section;
                for (b, p) in probs.iter_mut().enumerate() {
                    *p += base * 2.0 * (m2(edges[b + 1] / sigma) - m2(edges[b] / sigma));
                }
            }
        }
        // boundary part: G_1 = 0, x > 1
        let x_nodes = crate::quad::gl_nodes_to_inf(1.0, 32, 6);
        for &(x, wx) in &x_nodes {
            let sigma = ((x - 1.0) / x).max(0.0).sqrt();
            if sigma <= 0.0 {
                continue;
            }
            let base = wa * (1.0 - alpha / mu) * wx * phi(c * x.sqrt()) / x.sqrt();
            for (b, p) in probs.iter_mut().enumerate() {
                *p += base * 2.0 * (m2(edges[b + 1] / sigma) - m2(edges[b] / sigma));
            }
        }
    }
    probs
}

pub(super) fn drift_fixed_marginals(p: &Params, base: RngStream) -> Result<RunOutput> {
    let n = p.get_usize("n");
    let mu = p.get("mu");
    let horizon = p.get("horizon");
    let grid = p.get_usize("grid_per_unit");
    let mut out = RunOutput::default();

    let draws: Vec<(f64, f64)> =
        par_draws(base, n, |rng| direct_functionals(mu, horizon, grid, rng));

    // C'(1) marginal: equal-width bins over (0, mu), probabilities by
    // quadrature of the derived marginal density
    let slope_bins = 10usize;
    let mut counts = vec![0u64; slope_bins];
    for &(s, _) in &draws {
        let b = ((s / mu * slope_bins as f64) as usize).min(slope_bins - 1);
        counts[b] += 1;
    }
    let probs: Vec<f64> = (0..slope_bins)
        .map(|b| {
            let lo = mu * b as f64 / slope_bins as f64;
            let hi = mu * (b + 1) as f64 / slope_bins as f64;
            gl(32).integrate(lo, hi, |alpha| cprime_marginal_density(mu, alpha))
        })
        .collect();
    out.push(chi_square_from_counts("drift_fixed_cprime_gof", &counts, &probs, n as u64, ALPHA)?);

    // total mass of the derived slope marginal should be 1
    let mass: f64 = probs.iter().sum();
    out.push(TestReport::from_distance("drift_fixed_cprime_mass", vec![], (mass - 1.0).abs(), 2e-3));

    // R(1) - C(1) marginal: sample-quantile bins, probabilities by 4D
    // quadrature with the gap bin mass in closed form
    let mut gaps: Vec<f64> = draws.iter().map(|d| d.1).collect();
    gaps.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let gap_bins = 8usize;
    let mut edges = vec![0.0f64];
    for k in 1..gap_bins {
        edges.push(gaps[k * n / gap_bins]);
    }
    edges.push(gaps[n - 1] * 1.3);
    let mut counts = vec![0u64; gap_bins];
    for &g in &gaps {
        let b = edges.partition_point(|&e| e <= g).clamp(1, gap_bins) - 1;
        counts[b] += 1;
    }
    let probs = gap_bin_probabilities(mu, &edges);
    out.push(chi_square_from_counts("drift_fixed_gap_gof", &counts, &probs, n as u64, ALPHA)?);
    Ok(out)
}
