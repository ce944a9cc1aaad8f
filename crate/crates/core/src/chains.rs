//! The vertex Markov chain of the majorant before sigma_1: the
//! (tau, rho)-recursion, the law-preserving map on (0,inf)^3 x (0,1), and
//! extraction of (tau_n, kappa_n, rho_n) from the Poisson construction.

use crate::dist::std_normal;
use crate::poisson::{sample_tau_window, williams_vertex};
use crate::rng::Stream;
use crate::{Error, Result};
use rand::Rng;

/// One vertex of the chain: time, value, and the intercept of the face to
/// its right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainState {
    pub tau: f64,
    pub kappa: f64,
    pub rho: f64,
}

/// One step of the (tau, rho)-recursion with explicit innovations:
/// `rho' = u rho`, `tau' = tau rho'^2 / (tau z^2 + rho'^2)`.
pub fn tau_rho_step_with(tau: f64, rho: f64, u: f64, z: f64) -> Result<(f64, f64)> {
    if !(tau > 0.0) || !(rho > 0.0) {
        return Err(Error::param(format!("recursion needs tau, rho > 0, got ({tau}, {rho})")));
    }
    let rho_next = u * rho;
    let tau_next = tau * rho_next * rho_next / (tau * z * z + rho_next * rho_next);
    Ok((tau_next, rho_next))
}

/// One step of the (tau, rho)-recursion with fresh uniform x normal
/// innovations.
pub fn tau_rho_step(tau: f64, rho: f64, rng: &mut Stream) -> Result<(f64, f64)> {
    let u = rng.gen::<f64>();
    let z = std_normal(rng);
    tau_rho_step_with(tau, rho, u, z)
}

/// The law-preserving map on `(0, inf)^3 x (0, 1)`:
/// `(t, r, q, u) -> (u^2(t+q), u(1-u)(t+q) + u r, r^2 q / (t(t+q)),
/// r / (r + (1-u)(t+q)))`.
pub fn theorem_map(t: f64, r: f64, q: f64, u: f64) -> Result<(f64, f64, f64, f64)> {
    if !(t > 0.0) || !(r > 0.0) || !(q > 0.0) || !(u > 0.0 && u < 1.0) {
        return Err(Error::param(format!(
            "map domain is (0,inf)^3 x (0,1), got ({t}, {r}, {q}, {u})"
        )));
    }
    let s = t + q;
    Ok((
        u * u * s,
        u * (1.0 - u) * s + u * r,
        r * r * q / (t * s),
        r / (r + (1.0 - u) * s),
    ))
}

/// Draw from the invariant law of the map:
/// `(chi3^2 b^2, chi3^2 b (1-b), chi1^2, U)` with `b = beta(1,2)`,
/// all factors independent (the first two share chi3 and b).
pub fn theorem_map_law(rng: &mut Stream) -> Result<(f64, f64, f64, f64)> {
    let x = crate::dist::sample_scalar(crate::dist::ScalarLaw::Chi(3), rng)?;
    let b = crate::dist::sample_scalar(crate::dist::ScalarLaw::Beta(1.0, 2.0), rng)?;
    let z = std_normal(rng);
    let u = rng.gen::<f64>();
    Ok((x * x * b * b, x * x * b * (1.0 - b), z * z, u))
}

const MAX_RETRIES: u64 = 64;

/// Extract the chain `(tau_n, kappa_n, rho_n)` for n = 0..=m from one
/// Poisson realization of the majorant's faces with slopes above 1.
///
/// The window depth is chosen so the realization covers m faces except with
/// negligible probability; the leftover is retried (and counted). rho_0
/// uses the slope-1 supporting line, matching the chain's initialization
/// `(sigma_1, B(sigma_1) - sigma_1)`.
pub fn sample_chain(m: usize, rng: &mut Stream) -> Result<(Vec<ChainState>, u64)> {
    if m == 0 {
        return Err(Error::param("chain depth must be at least 1"));
    }
    let mf = (m + 1) as f64;
    let lambda = mf + 6.0 * mf.sqrt() + 4.0;
    let r_lo = (-lambda).exp();
    let mut retries = 0u64;
    loop {
        if retries >= MAX_RETRIES {
            return Err(Error::Coverage {
                msg: format!("chain depth {m} not covered after {retries} retries"),
                needed_ratio: (lambda * 2.0).exp(),
            });
        }
        let (t0, v0) = williams_vertex(1.0 / r_lo, rng)?;
        let jumps = sample_tau_window(r_lo, 1.0, rng)?;
        let faces = &jumps.jumps;
        if faces.len() < m {
            retries += 1;
            continue;
        }
        // cumulative vertex times/values; index j is the vertex after face j-1
        let count = faces.len();
        let mut times = Vec::with_capacity(count + 1);
        let mut vals = Vec::with_capacity(count + 1);
        times.push(t0);
        vals.push(v0);
        for &(r, dt) in faces {
            times.push(times.last().unwrap() + dt);
            vals.push(vals.last().unwrap() + dt / r);
        }
        let mut chain = Vec::with_capacity(m + 1);
        for n in 0..=m {
            let j = count - n; // vertex index counted back from sigma_1
            let tau = times[j];
            let kappa = vals[j];
            let slope = if n == 0 { 1.0 } else { 1.0 / faces[j].0 };
            chain.push(ChainState { tau, kappa, rho: kappa - slope * tau });
        }
        return Ok((chain, retries));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::stats::{ks_one_sample, ks_two_sample};

    #[test]
    fn recursion_worked_example() {
        let (tau, rho) = tau_rho_step_with(1.0, 1.0, 0.5, 1.0).unwrap();
        assert!((rho - 0.5).abs() < 1e-15);
        assert!((tau - 0.2).abs() < 1e-15);
        assert!(tau_rho_step_with(-1.0, 1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn recursion_contracts_tau() {
        let mut rng = RngStream::new(71, 0).rng();
        let mut tau = 2.3;
        let mut rho = 1.1;
        for _ in 0..64 {
            let (t, r) = tau_rho_step(tau, rho, &mut rng).unwrap();
            assert!(t < tau);
            assert!(r < rho);
            tau = t;
            rho = r;
        }
    }

    #[test]
    fn map_worked_example() {
        let out = theorem_map(1.0, 1.0, 1.0, 0.5).unwrap();
        assert_eq!(out, (0.5, 1.0, 0.5, 0.5));
        assert!(theorem_map(1.0, 1.0, 1.0, 1.5).is_err());
        assert!(theorem_map(0.0, 1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn map_outputs_stay_in_domain() {
        let mut rng = RngStream::new(72, 0).rng();
        for _ in 0..50_000 {
            let (t, r, q, u) = theorem_map_law(&mut rng).unwrap();
            let (t2, r2, q2, u2) = theorem_map(t, r, q, u).unwrap();
            assert!(t2 > 0.0 && r2 > 0.0 && q2 > 0.0 && (0.0..1.0).contains(&u2));
        }
    }

    #[test]
    fn map_numeric_injectivity_probe() {
        let mut rng = RngStream::new(73, 0).rng();
        let mut pts = Vec::with_capacity(10_000);
        for _ in 0..10_000 {
            pts.push(theorem_map_law(&mut rng).unwrap());
        }
        let imgs: Vec<(f64, f64, f64, f64)> = pts
            .iter()
            .map(|&(t, r, q, u)| theorem_map(t, r, q, u).unwrap())
            .collect();
        // distinct inputs keep distinct outputs
        let mut min_d = f64::INFINITY;
        for i in 0..imgs.len() {
            for j in (i + 1)..imgs.len().min(i + 50) {
                let a = imgs[i];
                let b = imgs[j];
                let d = (a.0 - b.0).abs() + (a.1 - b.1).abs() + (a.2 - b.2).abs() + (a.3 - b.3).abs();
                min_d = min_d.min(d);
            }
        }
        assert!(min_d > 0.0, "collision in injectivity probe");
    }

    #[test]
    fn chain_rho_decreasing_and_domain() {
        let mut rng = RngStream::new(74, 0).rng();
        for _ in 0..400 {
            let (chain, _) = sample_chain(6, &mut rng).unwrap();
            assert_eq!(chain.len(), 7);
            for s in &chain {
                assert!(s.tau > 0.0 && 0.0 < s.rho && s.rho < s.kappa, "{s:?}");
            }
            for w in chain.windows(2) {
                assert!(w[1].tau < w[0].tau);
                assert!(w[1].rho < w[0].rho);
            }
        }
    }

    #[test]
    fn chain_initialization_matches_recursion_one_step() {
        // (tau_0, rho_0) -> one recursion step vs the extracted (tau_1, rho_1):
        // two-sample KS on rho_1 / sqrt(tau_1).
        let mut rng = RngStream::new(75, 0).rng();
        let n = 30_000;
        let mut via_extract = Vec::with_capacity(n);
        let mut via_recursion = Vec::with_capacity(n);
        for _ in 0..n {
            let (chain, _) = sample_chain(1, &mut rng).unwrap();
            via_extract.push(chain[1].rho / chain[1].tau.sqrt());
            let (sigma, value) = williams_vertex(1.0, &mut rng).unwrap();
            let (t1, r1) = tau_rho_step(sigma, value - sigma, &mut rng).unwrap();
            via_recursion.push(r1 / t1.sqrt());
        }
        let rep = ks_two_sample("chain_init", &mut via_extract, &mut via_recursion, 0.001).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn additive_innovation_is_chi_sq() {
        // rho_{n+1}^2 / tau_{n+1} - u^2 rho_n^2 / tau_n with u = rho_{n+1}/rho_n
        // is a fresh chi_1^2 along extracted chains.
        let mut rng = RngStream::new(76, 0).rng();
        let mut qs = Vec::with_capacity(40_000);
        while qs.len() < 40_000 {
            let (chain, _) = sample_chain(4, &mut rng).unwrap();
            for w in chain.windows(2) {
                let u = w[1].rho / w[0].rho;
                qs.push(w[1].rho * w[1].rho / w[1].tau - u * u * w[0].rho * w[0].rho / w[0].tau);
            }
        }
        let rep =
            ks_one_sample("chain_chisq", &mut qs, |x| crate::dist::chi_sq_cdf(1, x), 0.001).unwrap();
        assert!(rep.pass, "{rep:?}");
    }
}
