//! Named, registered experiment scenarios binding samplers to oracles.
//!
//! Every entry in the registry checks one distributional claim about the
//! majorant and emits `TestReport`s (plus optional raw-sample tables for
//! plotting). Replications run on pre-assigned substreams, so reports do
//! not depend on the worker count.

mod bessel;
mod chains_exp;
mod conjecture;
mod fixed_time;
mod meanders_exp;

use crate::rng::{RngStream, Stream};
use crate::stats::TestReport;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Default per-test significance level.
pub const ALPHA: f64 = 0.001;

/// A request to run one registered experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
}

/// Raw sample sidecar: named columns of f64 rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Result of one experiment run.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub reports: Vec<TestReport>,
    pub samples: Vec<SampleTable>,
}

impl RunOutput {
    pub fn push(&mut self, r: TestReport) {
        self.reports.push(r);
    }
}

/// Typed view over resolved parameters.
pub struct Params {
    values: BTreeMap<String, f64>,
}

impl Params {
    pub fn get(&self, key: &str) -> f64 {
        *self.values.get(key).expect("parameter resolved from defaults")
    }
    pub fn get_usize(&self, key: &str) -> usize {
        self.get(key).max(0.0) as usize
    }
}

type Runner = fn(&Params, RngStream) -> Result<RunOutput>;

/// A registry entry: the name, the one-line claim it checks, its tunable
/// parameters with defaults, and the runner.
pub struct Descriptor {
    pub name: &'static str,
    pub claim: &'static str,
    pub defaults: &'static [(&'static str, f64)],
    run: Runner,
}

pub fn registry() -> &'static [Descriptor] {
    &REGISTRY
}

static REGISTRY: [Descriptor; 22] = [
    Descriptor {
        name: "chi5_marginal",
        claim: "2K(1) - B(1) from the Poisson construction has the chi(5) law (one-sample KS)",
        defaults: &[("n", 200_000.0)],
        run: fixed_time::chi5_marginal,
    },
    Descriptor {
        name: "exchangeability",
        claim: "(K(1), K(1)-B(1)) is exchangeable (swap-sample energy permutation test)",
        defaults: &[("n", 4000.0), ("permutations", 200.0)],
        run: fixed_time::exchangeability,
    },
    Descriptor {
        name: "f3_gof",
        claim: "(K'(1), I(1), K(1)-B(1)) has density 4y(a+b+y)phi(a+b+y) (chi-square GOF)",
        defaults: &[("n", 100_000.0), ("bins", 4.0)],
        run: fixed_time::f3_gof,
    },
    Descriptor {
        name: "f5_quadrature",
        claim: "the 3- and 5-variable fixed-time densities integrate to one (quadrature)",
        defaults: &[],
        run: fixed_time::f5_quadrature,
    },
    Descriptor {
        name: "d1_mixture_consistency",
        claim: "D_1 - 1 given (K'(1), I(1), K(1)-B(1)) is the stated inverse-Gaussian mixture",
        defaults: &[("n", 200_000.0), ("a", 0.4), ("b", 0.4), ("y", 0.4), ("box", 0.15)],
        run: fixed_time::d1_mixture_consistency,
    },
    Descriptor {
        name: "tau_counts",
        claim: "tau jump counts on (x, y) are Poisson(log(y/x)) (mean and dispersion)",
        defaults: &[("windows", 50_000.0)],
        run: fixed_time::tau_counts,
    },
    Descriptor {
        name: "excursion_conditional",
        claim: "K(1)-B(1) given (G_1, D_1) = (u, v) is sqrt((1-u)(v-1)/(v-u)) chi(3)",
        defaults: &[("n", 200_000.0), ("u0", 0.6), ("v0", 1.6), ("width", 0.1)],
        run: fixed_time::excursion_conditional,
    },
    Descriptor {
        name: "zenith_atom_and_density",
        claim: "zenith increments have atom b/a at (0,0) and density h^{a,b} elsewhere",
        defaults: &[("n", 100_000.0), ("a", 2.0), ("b", 1.0), ("bins", 6.0)],
        run: fixed_time::zenith_atom_and_density,
    },
    Descriptor {
        name: "bessel_minorant_counts",
        claim: "minorant face counts in a slope window are Poisson(log((mu-a1)/(mu-a2)))",
        defaults: &[("reps", 20_000.0), ("mu", 2.0), ("a1", 0.5), ("a2", 1.5)],
        run: bessel::bessel_minorant_counts,
    },
    Descriptor {
        name: "bessel_cross_construction",
        claim: "direct and Poissonian constructions of (C'(1), R(1)-C(1)) agree in law",
        defaults: &[
            ("n", 4000.0),
            ("mu", 2.0),
            ("horizon", 16.0),
            ("grid_per_unit", 8192.0),
            ("permutations", 150.0),
            ("cap", 2000.0),
        ],
        run: bessel::bessel_cross_construction,
    },
    Descriptor {
        name: "drift_fixed_marginals",
        claim: "C'(1) and R(1)-C(1) marginals match quadrature of the five-variable density",
        defaults: &[("n", 20_000.0), ("mu", 2.0), ("horizon", 16.0), ("grid_per_unit", 8192.0)],
        run: bessel::drift_fixed_marginals,
    },
    Descriptor {
        name: "tau_rho_stationarity",
        claim: "rho_n / sqrt(tau_n) is stationary under the (tau, rho)-recursion",
        defaults: &[("n", 100_000.0), ("depth", 8.0)],
        run: chains_exp::tau_rho_stationarity,
    },
    Descriptor {
        name: "kappa_stationarity",
        claim: "kappa_n / sqrt(tau_n) is stationary along extracted vertex chains",
        defaults: &[("n", 100_000.0), ("depth", 5.0)],
        run: chains_exp::kappa_stationarity,
    },
    Descriptor {
        name: "map_preservation",
        claim: "the vertex map preserves the law of (chi3^2 b^2, chi3^2 b(1-b), chi1^2, U)",
        defaults: &[("n", 100_000.0), ("permutations", 150.0), ("cap", 2000.0)],
        run: chains_exp::map_preservation,
    },
    Descriptor {
        name: "meander_rn_tilde",
        claim: "the drift-corrected meander reweights Bessel(3) by 2 M(R(1))/R(1)",
        defaults: &[("n", 200_000.0)],
        run: meanders_exp::meander_rn_tilde,
    },
    Descriptor {
        name: "meander_rn_hat",
        claim: "the raw meander reweights Bessel(3) by 2 minslope(R)/R(1)",
        defaults: &[("n", 50_000.0), ("grid", 4096.0)],
        run: meanders_exp::meander_rn_hat,
    },
    Descriptor {
        name: "meander_marginals",
        claim: "meander endpoint laws: 4t phi_bar(t) for tilde, (chi3, beta(2,1)) for hat",
        defaults: &[("n", 100_000.0), ("grid", 4096.0), ("n_direct", 4000.0), ("direct_grid", 65_536.0)],
        run: meanders_exp::meander_marginals,
    },
    Descriptor {
        name: "conjecture_marginals",
        claim: "2K(t) - B(t) matches BES(5) marginals at fixed times; joint laws recorded",
        defaults: &[
            ("n", 20_000.0),
            ("horizon", 16.0),
            ("grid_per_unit", 16_384.0),
            ("permutations", 150.0),
            ("cap", 2000.0),
        ],
        run: conjecture::conjecture_marginals,
    },
    Descriptor {
        name: "conjecture_qv",
        claim: "2K - B accumulates unit quadratic variation on [0, 1]",
        defaults: &[("n", 1000.0), ("grid_per_unit", 131_072.0), ("horizon", 4.0)],
        run: conjecture::conjecture_qv,
    },
    Descriptor {
        name: "generator_check",
        claim: "the short-time generator of 2K - B at z matches (2/z) d/dz + (1/2) d2/dz2",
        defaults: &[
            ("z", 2.0),
            ("h", 1e-3),
            ("band", 0.02),
            ("n_accept", 200_000.0),
            ("grid_scale", 128.0),
        ],
        run: conjecture::generator_check,
    },
    Descriptor {
        name: "psi_scaling_consistency",
        claim: "stepping the 4-component state by delta = 1 reproduces the t = 2 law",
        defaults: &[("n", 50_000.0), ("grid_scale", 128.0)],
        run: conjecture::psi_scaling_consistency,
    },
    Descriptor {
        name: "bridge_line_mc",
        claim: "bridge line-crossing probabilities match the exponential formula (MC)",
        defaults: &[("n", 20_000.0), ("s", 1.0), ("t", 2.0), ("a", 0.0), ("b", 1.0)],
        run: conjecture::bridge_line_mc,
    },
];

fn descriptor(name: &str) -> Result<&'static Descriptor> {
    REGISTRY.iter().find(|d| d.name == name).ok_or_else(|| Error::UnknownExperiment {
        name: name.to_string(),
        valid: REGISTRY.iter().map(|d| d.name).collect::<Vec<_>>().join(", "),
    })
}

/// Run one registered experiment.
pub fn run(spec: &ExperimentSpec) -> Result<RunOutput> {
    let d = descriptor(&spec.name)?;
    let mut values: BTreeMap<String, f64> =
        d.defaults.iter().map(|&(k, v)| (k.to_string(), v)).collect();
    for (k, v) in &spec.params {
        if !values.contains_key(k) {
            return Err(Error::InvalidParameter(format!(
                "unknown parameter `{k}` for `{}`; known: {}",
                d.name,
                d.defaults.iter().map(|&(k, _)| k).collect::<Vec<_>>().join(", ")
            )));
        }
        values.insert(k.clone(), *v);
    }
    let params = Params { values };
    let mut out = (d.run)(&params, RngStream::new(spec.seed, 0))?;
    for r in &mut out.reports {
        r.seed = spec.seed;
    }
    Ok(out)
}

/// Replication-parallel sampling: `n` draws in fixed-size chunks, one
/// substream per chunk, so the result is independent of thread scheduling.
pub(crate) fn par_draws<T, F>(base: RngStream, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut Stream) -> T + Sync,
{
    const CHUNK: usize = 512;
    let n_chunks = n.div_ceil(CHUNK);
    let mut chunks: Vec<Vec<T>> = Vec::with_capacity(n_chunks);
    (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = base.substream(c as u64).rng();
            let count = CHUNK.min(n - c * CHUNK);
            (0..count).map(|_| f(&mut rng)).collect::<Vec<T>>()
        })
        .collect_into_vec(&mut chunks);
    chunks.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_name_lists_valid() {
        let spec = ExperimentSpec {
            name: "nosuch".into(),
            params: BTreeMap::new(),
            seed: 1,
        };
        match run(&spec) {
            Err(Error::UnknownExperiment { valid, .. }) => {
                assert!(valid.contains("chi5_marginal"));
            }
            other => panic!("expected UnknownExperiment, got {other:?}"),
        }
    }

    #[test]
    fn unknown_param_rejected() {
        let mut params = BTreeMap::new();
        params.insert("bogus".to_string(), 1.0);
        let spec = ExperimentSpec { name: "chi5_marginal".into(), params, seed: 1 };
        assert!(matches!(run(&spec), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn par_draws_worker_independent() {
        let base = RngStream::new(5, 9);
        let a = par_draws(base, 2000, |rng| crate::dist::std_normal(rng));
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| par_draws(base, 2000, |rng| crate::dist::std_normal(rng)));
        assert_eq!(a, b);
    }
}
