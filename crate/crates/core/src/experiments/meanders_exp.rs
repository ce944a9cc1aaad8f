//! Meander experiments: endpoint marginals and the Radon-Nikodym
//! reweighting of both pseudo-meanders against the Bessel(3) law.
//!
//! The heavy samplers use the passage-bridge representation: conditionally
//! on the drifted maximum pair, the drift-corrected meander is a Bessel(3)
//! bridge from 0 to its endpoint. A smaller direct-simulation variant reads
//! the meanders off raw drifted Brownian paths as a cross-check.

use super::{par_draws, Params, RunOutput, SampleTable, ALPHA};
use crate::dist::{chi_cdf, meander_rn, meander_tilde1_cdf, mills};
use crate::geometry::{meanders, minslope, sigma_mu};
use crate::paths::{sample_bessel, sample_bessel_bridge, sample_bm};
use crate::poisson::williams_vertex;
use crate::rng::RngStream;
use crate::stats::{ks_one_sample, weighted_mean_check, weighted_mean_se, TestReport};
use crate::Result;

/// Endpoint of the drift-corrected meander: `(B(sigma) - sigma) / sqrt(sigma)`
/// for mu = 1 (pure scalar draw, no path needed).
fn tilde1_draw(rng: &mut crate::rng::Stream) -> f64 {
    let (sigma, value) = williams_vertex(1.0, rng).expect("vertex");
    (value - sigma) / sigma.sqrt()
}

/// Meander pair with path-level functionals via the bridge representation:
/// returns (tilde(1), hat(1), minslope(hat)).
fn meander_path_draw(grid: usize, rng: &mut crate::rng::Stream) -> (f64, f64, f64) {
    let (sigma, value) = williams_vertex(1.0, rng).expect("vertex");
    let rs = sigma.sqrt();
    let r_end = (value - sigma) / rs;
    let tilde = sample_bessel_bridge(1.0, 0.0, r_end, grid, rng).expect("bridge");
    // minslope of hat = minslope of tilde + mu sqrt(sigma), attained together
    let (m_tilde, _) = minslope(&tilde).expect("minslope");
    (r_end, r_end + rs, m_tilde + rs)
}

pub(super) fn meander_rn_tilde(p: &Params, base: RngStream) -> Result<RunOutput> {
    let n = p.get_usize("n");
    let tilde1: Vec<f64> = par_draws(base.substream(1), n, tilde1_draw);
    // Bessel(3) endpoint with RN weights 2 M(x) / x
    let bessel1: Vec<f64> = par_draws(base.substream(2), n, |rng| {
        crate::dist::sample_scalar(crate::dist::ScalarLaw::Chi(3), rng).expect("chi3")
    });
    let weights: Vec<f64> = bessel1.iter().map(|&x| meander_rn(x)).collect();
    let mut out = RunOutput::default();
    let (norm, norm_se) = weighted_mean_se(|_| 1.0, &bessel1, &weights);
    out.push(TestReport::from_distance(
        "meander_rn_tilde_normalization",
        vec![n as u64],
        (norm - 1.0).abs() / norm_se,
        3.0,
    ));
    out.push(weighted_mean_check("meander_rn_tilde_mean_x", |x| x, &tilde1, &bessel1, &weights)?);
    out.push(weighted_mean_check(
        "meander_rn_tilde_mean_exp",
        |x| (-x).exp(),
        &tilde1,
        &bessel1,
        &weights,
    )?);
    Ok(out)
}

pub(super) fn meander_rn_hat(p: &Params, base: RngStream) -> Result<RunOutput> {
    let n = p.get_usize("n");
    let grid = p.get_usize("grid");
    // meander side: hat(1) and minslope(hat) via the bridge representation
    let hat: Vec<(f64, f64, f64)> = par_draws(base.substream(1), n, |rng| meander_path_draw(grid, rng));
    // Bessel side: endpoint and minslope of BES^0(3) paths on [0, 1]
    let bessel: Vec<(f64, f64)> = par_draws(base.substream(2), n, |rng| {
        let path = sample_bessel(3, 0.0, 0.0, grid, 1.0, rng).expect("bessel path");
        let (m, _) = minslope(&path).expect("minslope");
        (*path.values.last().unwrap(), m)
    });
    let weights: Vec<f64> = bessel.iter().map(|&(r1, m)| 2.0 * m / r1).collect();
    let bessel1: Vec<f64> = bessel.iter().map(|b| b.0).collect();
    let bessel_m: Vec<f64> = bessel.iter().map(|b| b.1).collect();
    let hat1: Vec<f64> = hat.iter().map(|h| h.1).collect();
    let hat_m: Vec<f64> = hat.iter().map(|h| h.2).collect();

    let mut out = RunOutput::default();
    let (norm, norm_se) = weighted_mean_se(|_| 1.0, &bessel1, &weights);
    out.push(TestReport::from_distance(
        "meander_rn_hat_normalization",
        vec![n as u64],
        (norm - 1.0).abs() / norm_se,
        3.0,
    ));
    out.push(weighted_mean_check("meander_rn_hat_mean_x", |x| x, &hat1, &bessel1, &weights)?);
    out.push(weighted_mean_check(
        "meander_rn_hat_mean_exp",
        |x| (-x).exp(),
        &hat1,
        &bessel1,
        &weights,
    )?);
    // path-level functional: the minslope itself under the same reweighting
    out.push(weighted_mean_check(
        "meander_rn_hat_minslope_mean",
        |x| x,
        &hat_m,
        &bessel_m,
        &weights,
    )?);
    Ok(out)
}

pub(super) fn meander_marginals(p: &Params, base: RngStream) -> Result<RunOutput> {
    let n = p.get_usize("n");
    let grid = p.get_usize("grid");
    let n_direct = p.get_usize("n_direct");
    let direct_grid = p.get_usize("direct_grid");
    let mut out = RunOutput::default();

    // tilde(1) against the closed-form CDF of 4 t phi_bar(t)
    let mut tilde1: Vec<f64> = par_draws(base.substream(1), n, tilde1_draw);
    out.push(ks_one_sample("meander_tilde1_ks", &mut tilde1, meander_tilde1_cdf, ALPHA)?);
    out.samples.push(SampleTable {
        name: "meander_tilde1".into(),
        columns: vec!["tilde1".into()],
        rows: tilde1.iter().map(|&x| vec![x]).collect(),
    });

    // (hat(1), minslope/hat(1)) against (chi3, beta(2,1)); the minslope needs
    // path draws
    let n_paths = (n / 2).max(1000);
    let hats: Vec<(f64, f64, f64)> =
        par_draws(base.substream(2), n_paths, |rng| meander_path_draw(grid, rng));
    let mut hat1: Vec<f64> = hats.iter().map(|h| h.1).collect();
    let mut ratio: Vec<f64> = hats.iter().map(|h| h.2 / h.1).collect();
    out.push(ks_one_sample("meander_hat1_ks", &mut hat1, |x| chi_cdf(3, x), ALPHA)?);
    out.push(ks_one_sample("meander_minslope_ratio_ks", &mut ratio, |u| (u * u).clamp(0.0, 1.0), ALPHA)?);

    // direct-simulation cross-check on raw drifted Brownian paths
    let mu = 1.0;
    let horizon = 16.0;
    let direct: Vec<Option<(f64, f64, f64)>> = par_draws(base.substream(3), n_direct, |rng| {
        let path = sample_bm(direct_grid, horizon, 0.0, rng).expect("bm");
        let s = sigma_mu(&path, mu).expect("sigma");
        if s.hit_boundary || s.index == 0 {
            return None;
        }
        let m = meanders(&path, mu, 1 << 10).expect("meanders");
        let tilde_end = *m.tilde.values.last().unwrap();
        let hat_end = *m.hat.values.last().unwrap();
        let (ms, _) = minslope(&m.hat).expect("minslope");
        Some((tilde_end, hat_end, ms / hat_end))
    });
    let dropped = direct.iter().filter(|d| d.is_none()).count() as u64;
    let kept: Vec<(f64, f64, f64)> = direct.into_iter().flatten().collect();
    let mut d_tilde: Vec<f64> = kept.iter().map(|k| k.0).collect();
    let mut d_ratio: Vec<f64> = kept.iter().map(|k| k.2).collect();
    out.push(
        ks_one_sample("meander_tilde1_direct_ks", &mut d_tilde, meander_tilde1_cdf, ALPHA)?
            .with_retries(dropped),
    );
    out.push(
        ks_one_sample("meander_ratio_direct_ks", &mut d_ratio, |u| (u * u).clamp(0.0, 1.0), ALPHA)?
            .with_retries(dropped),
    );

    // identity check for the RN factor table used by the CLI density dump
    let rn_consistent = (meander_rn(1.3) - 2.0 * mills(1.3) / 1.3).abs();
    out.push(TestReport::from_distance("meander_rn_identity", vec![], rn_consistent, 1e-15));
    Ok(out)
}
