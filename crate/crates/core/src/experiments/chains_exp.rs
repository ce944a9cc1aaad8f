//! Experiments for the vertex Markov chain: stationarity of the scaled
//! intercepts and values, and law preservation of the vertex map.

use super::{par_draws, Params, RunOutput, ALPHA};
use crate::chains::{sample_chain, tau_rho_step, theorem_map, theorem_map_law};
use crate::poisson::williams_vertex;
use crate::rng::RngStream;
use crate::stats::{energy_distance_test, ks_two_sample};
use crate::Result;

pub(super) fn tau_rho_stationarity(p: &Params, base: RngStream) -> Result<RunOutput> {
    let n = p.get_usize("n");
    let depth = p.get_usize("depth");
    let pairs: Vec<(f64, f64)> = par_draws(base, n, |rng| {
        let (sigma, value) = williams_vertex(1.0, rng).expect("vertex");
        let (mut tau, mut rho) = (sigma, value - sigma);
        let start = rho / tau.sqrt();
        for _ in 0..depth {
            let (t, r) = tau_rho_step(tau, rho, rng).expect("recursion step");
            tau = t;
            rho = r;
        }
        (start, rho / tau.sqrt())
    });
    let mut at0: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut atn: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut out = RunOutput::default();
    out.push(ks_two_sample("tau_rho_stationarity", &mut at0, &mut atn, ALPHA)?);
    Ok(out)
}

pub(super) fn kappa_stationarity(p: &Params, base: RngStream) -> Result<RunOutput> {
    let n = p.get_usize("n");
    let depth = p.get_usize("depth");
    let draws: Vec<((f64, f64), u64)> = par_draws(base, n, |rng| {
        let (chain, retries) = sample_chain(depth, rng).expect("chain");
        let s0 = &chain[0];
        let sn = &chain[depth];
        ((s0.kappa / s0.tau.sqrt(), sn.kappa / sn.tau.sqrt()), retries)
    });
    let retries: u64 = draws.iter().map(|d| d.1).sum();
    let mut at0: Vec<f64> = draws.iter().map(|d| d.0 .0).collect();
    let mut atn: Vec<f64> = draws.iter().map(|d| d.0 .1).collect();
    let mut out = RunOutput::default();
    out.push(ks_two_sample("kappa_stationarity", &mut at0, &mut atn, ALPHA)?.with_retries(retries));
    Ok(out)
}

pub(super) fn map_preservation(p: &Params, base: RngStream) -> Result<RunOutput> {
    let n = p.get_usize("n");
    let perms = p.get_usize("permutations");
    let cap = p.get_usize("cap");
    let pushed: Vec<[f64; 4]> = par_draws(base.substream(1), n, |rng| {
        let (t, r, q, u) = theorem_map_law(rng).expect("law draw");
        let (t2, r2, q2, u2) = theorem_map(t, r, q, u).expect("map");
        [t2, r2, q2, u2]
    });
    let fresh: Vec<[f64; 4]> = par_draws(base.substream(2), n, |rng| {
        let (t, r, q, u) = theorem_map_law(rng).expect("law draw");
        [t, r, q, u]
    });
    let mut out = RunOutput::default();
    let names = ["map_marginal_t", "map_marginal_r", "map_marginal_q", "map_marginal_u"];
    for (k, name) in names.iter().enumerate() {
        let mut a: Vec<f64> = pushed.iter().map(|v| v[k]).collect();
        let mut b: Vec<f64> = fresh.iter().map(|v| v[k]).collect();
        out.push(ks_two_sample(name, &mut a, &mut b, ALPHA)?);
    }
    let x: Vec<Vec<f64>> = pushed.iter().map(|v| v.to_vec()).collect();
    let y: Vec<Vec<f64>> = fresh.iter().map(|v| v.to_vec()).collect();
    let mut prng = base.substream(3).rng();
    out.push(energy_distance_test("map_joint_energy", &x, &y, perms, cap, &mut prng, ALPHA)?);
    Ok(out)
}
