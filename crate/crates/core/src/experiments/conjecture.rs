//! Evidence experiments for the law of 2K - B: fixed-time marginals and
//! joint laws against the five-dimensional Bessel process, quadratic
//! variation, the conditional-moment and generator checks, the semigroup
//! scaling consistency, and the bridge line-crossing Monte Carlo.

use super::{par_draws, Params, RunOutput, SampleTable, ALPHA};
use crate::dist::{bridge_crossing_prob, chi_cdf, kprime_given_z_density, std_normal};
use crate::geometry::{concave_majorant, quadratic_variation};
use crate::paths::{sample_bm, sample_bridge};
use crate::poisson::{psi_step, straddle_at_time, straddle_time_one, StraddleSample};
use crate::rng::RngStream;
use crate::stats::{energy_distance_test, ks_one_sample, ks_two_sample, TestReport};
use crate::Result;

/// 2K(t) - B(t) at the requested times from one grid path with its
/// majorant.
fn two_k_minus_b(path: &crate::paths::GridPath, times: &[f64]) -> Vec<f64> {
    let skel = concave_majorant(path).expect("majorant");
    times
        .iter()
        .map(|&t| {
            let k = skel.value_at(t).expect("skeleton value");
            let b = path.value_at(t).expect("path value");
            2.0 * k - b
        })
        .collect()
}

/// Norms of a 5-dimensional Brownian motion at the requested times
/// (increment sampling, no grid).
fn bes5_at(times: &[f64], rng: &mut crate::rng::Stream) -> Vec<f64> {
    let mut coord = [0.0f64; 5];
    let mut t_prev = 0.0;
    times
        .iter()
        .map(|&t| {
            let sd = (t - t_prev).sqrt();
            for c in coord.iter_mut() {
                *c += sd * std_normal(rng);
            }
            t_prev = t;
            coord.iter().map(|c| c * c).sum::<f64>().sqrt()
        })
        .collect()
}

pub(super) fn conjecture_marginals(p: &Params, base: RngStream) -> Result<RunOutput> {
    let n = p.get_usize("n");
    let horizon = p.get("horizon");
    let grid = p.get_usize("grid_per_unit");
    let perms = p.get_usize("permutations");
    let cap = p.get_usize("cap");
    let times = [0.5, 1.0, 2.0];
    let mut out = RunOutput::default();

    let steps = (horizon * grid as f64) as usize;
    let draws: Vec<Vec<f64>> = par_draws(base.substream(1), n, |rng| {
        let path = sample_bm(steps, horizon, 0.0, rng).expect("bm");
        two_k_minus_b(&path, &times)
    });
    // per-time KS against the scaled chi(5) law (proven marginals)
    for (i, &t) in times.iter().enumerate() {
        let mut xs: Vec<f64> = draws.iter().map(|d| d[i]).collect();
        let rt = t.sqrt();
        let rep = ks_one_sample(
            &format!("conjecture_marginal_t{t}"),
            &mut xs,
            |x| chi_cdf(5, x / rt),
            ALPHA,
        )?;
        out.push(rep);
    }
    // pairwise joint energy distances against BES(5): recorded as evidence,
    // no pass/fail beyond the proven marginals (threshold 0)
    let bes: Vec<Vec<f64>> = par_draws(base.substream(2), n, |rng| bes5_at(&times, rng));
    let pairs = [(0usize, 1usize), (1, 2), (0, 2)];
    for &(i, j) in &pairs {
        let x: Vec<Vec<f64>> = draws.iter().map(|d| vec![d[i], d[j]]).collect();
        let y: Vec<Vec<f64>> = bes.iter().map(|d| vec![d[i], d[j]]).collect();
        let mut prng = base.substream(10 + (3 * i + j) as u64).rng();
        let rep = energy_distance_test(
            &format!("conjecture_pair_t{}_t{}", times[i], times[j]),
            &x,
            &y,
            perms,
            cap,
            &mut prng,
            0.0,
        )?;
        out.push(rep);
    }
    out.samples.push(SampleTable {
        name: "conjecture_paths".into(),
        columns: times.iter().map(|t| format!("x_at_{t}")).collect(),
        rows: draws,
    });
    Ok(out)
}

pub(super) fn conjecture_qv(p: &Params, base: RngStream) -> Result<RunOutput> {
    let n = p.get_usize("n");
    let grid = p.get_usize("grid_per_unit");
    let horizon = p.get("horizon");
    let steps = (horizon * grid as f64) as usize;
    let unit_steps = grid; // grid points covering [0, 1]
    let qvs: Vec<f64> = par_draws(base, n, |rng| {
        let path = sample_bm(steps, horizon, 0.0, rng).expect("bm");
        let skel = concave_majorant(&path).expect("majorant");
        let vals: Vec<f64> = (0..=unit_steps)
            .map(|i| {
                let t = path.time(i);
                2.0 * skel.value_at(t).expect("K") - path.values[i]
            })
            .collect();
        quadratic_variation(&vals)
    });
    let mut out = RunOutput::default();
    let worst = qvs.iter().map(|q| (q - 1.0).abs()).fold(0.0, f64::max);
    out.push(TestReport::from_distance("conjecture_qv_per_path", vec![n as u64], worst, 0.02));
    let mean = qvs.iter().sum::<f64>() / n as f64;
    let var = qvs.iter().map(|q| (q - mean) * (q - mean)).sum::<f64>() / (n as f64 - 1.0);
    let z = (mean - 1.0).abs() / (var / n as f64).sqrt();
    out.push(TestReport::from_distance("conjecture_qv_mean", vec![n as u64], z, 3.0));
    Ok(out)
}

/// C^2 bump functions with analytic first and second derivatives.
struct Bump {
    name: &'static str,
    f: Box<dyn Fn(f64) -> f64 + Sync>,
    d1: Box<dyn Fn(f64) -> f64 + Sync>,
    d2: Box<dyn Fn(f64) -> f64 + Sync>,
}

fn bump_library(z: f64) -> Vec<Bump> {
    // Gaussian bump centred at z: phi'(z) = 0, phi''(z) = -2.
    let gauss = Bump {
        name: "gauss",
        f: Box::new(move |x| (-(x - z) * (x - z)).exp()),
        d1: Box::new(move |x| -2.0 * (x - z) * (-(x - z) * (x - z)).exp()),
        d2: Box::new(move |x| (4.0 * (x - z) * (x - z) - 2.0) * (-(x - z) * (x - z)).exp()),
    };
    // compactly supported C^infinity bump, centre offset so the first
    // derivative is nonzero at z
    let c = z - 0.5;
    let w = 1.5;
    let g = move |s: f64| {
        if s.abs() >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - s * s)).exp()
        }
    };
    let g1 = move |s: f64| {
        if s.abs() >= 1.0 {
            0.0
        } else {
            let d = 1.0 - s * s;
            g(s) * (-2.0 * s / (d * d))
        }
    };
    let g2 = move |s: f64| {
        if s.abs() >= 1.0 {
            0.0
        } else {
            let d = 1.0 - s * s;
            g(s) * (4.0 * s * s / (d * d * d * d) - 2.0 / (d * d) - 8.0 * s * s / (d * d * d))
        }
    };
    let smooth = Bump {
        name: "smooth_bump",
        f: Box::new(move |x| g((x - c) / w)),
        d1: Box::new(move |x| g1((x - c) / w) / w),
        d2: Box::new(move |x| g2((x - c) / w) / (w * w)),
    };
    vec![gauss, smooth]
}

pub(super) fn generator_check(p: &Params, base: RngStream) -> Result<RunOutput> {
    let z = p.get("z");
    let h = p.get("h");
    if !(1e-4..=1e-2).contains(&h) {
        return Err(crate::Error::InvalidParameter(format!(
            "generator step h must lie in [1e-4, 1e-2], got {h}"
        )));
    }
    let band = p.get("band");
    let n_accept = p.get_usize("n_accept");
    let grid_scale = p.get_usize("grid_scale");
    let mut out = RunOutput::default();

    // accept straddle states with 2K(1) - B(1) in the band; one pass serves
    // both band widths
    let mut accepted: Vec<StraddleSample> = Vec::with_capacity(n_accept);
    let mut stream_index = 1_000u64;
    let mut total_draws = 0u64;
    while accepted.len() < n_accept {
        let batch: Vec<Option<StraddleSample>> =
            par_draws(base.substream(stream_index), 2_000_000, |rng| {
                let s = straddle_time_one(rng).expect("straddle");
                let zv = s.state.k + s.state.y;
                ((zv - z).abs() <= band).then_some(s)
            });
        total_draws += 2_000_000;
        accepted.extend(batch.into_iter().flatten());
        stream_index += 1;
        if stream_index > 1_100 {
            return Err(crate::Error::Setup(format!(
                "band z +- {band} too narrow: {} accepted of {total_draws}",
                accepted.len()
            )));
        }
    }
    accepted.truncate(n_accept);

    for (suffix, half) in [("", band), ("_narrow", 0.5 * band)] {
        let subset: Vec<&StraddleSample> = accepted
            .iter()
            .filter(|s| (s.state.k + s.state.y - z).abs() <= half)
            .collect();
        let n_sub = subset.len();

        // conditional-density inputs validated first: K'(1)/z given z has
        // density 3(1-v)^2, and the gap ratio has density 6v(1-v)
        let mut v_slope: Vec<f64> = subset.iter().map(|s| s.state.a / (s.state.k + s.state.y)).collect();
        let rep = ks_one_sample(
            &format!("generator_kprime_conditional{suffix}"),
            &mut v_slope,
            |v| {
                let v = v.clamp(0.0, 1.0);
                1.0 - (1.0 - v) * (1.0 - v) * (1.0 - v)
            },
            ALPHA,
        )?;
        out.push(rep);
        let mut v_gap: Vec<f64> = subset.iter().map(|s| s.state.y / (s.state.k + s.state.y)).collect();
        let rep = ks_one_sample(
            &format!("generator_gap_conditional{suffix}"),
            &mut v_gap,
            |v| {
                let v = v.clamp(0.0, 1.0);
                v * v * (3.0 - 2.0 * v)
            },
            ALPHA,
        )?;
        out.push(rep);

        // conditional moments: E[K'(1) | z] = z/4 and E[1/(K-B) | z] = 3/z,
        // tested as mean-zero differences against the per-sample z
        let diffs_a: Vec<f64> = subset.iter().map(|s| s.state.a - (s.state.k + s.state.y) / 4.0).collect();
        out.push(mean_zero_report(&format!("generator_mean_kprime{suffix}"), &diffs_a));
        let diffs_y: Vec<f64> = subset
            .iter()
            .map(|s| 1.0 / s.state.y - 3.0 / (s.state.k + s.state.y))
            .collect();
        let mut rep = mean_zero_report(&format!("generator_mean_inv_gap{suffix}"), &diffs_y);
        rep.n = vec![n_sub as u64];
        out.push(rep);
    }

    // finite-difference generator estimate for each bump function
    let stepped: Vec<(f64, f64)> = {
        let states: Vec<(PsiStateCopy, f64)> = accepted
            .iter()
            .map(|s| ((s.state.a, s.state.k, s.state.y, s.state.w), s.state.k + s.state.y))
            .collect();
        let base2 = base.substream(7);
        let results: Vec<(f64, f64)> = {
            use rayon::prelude::*;
            states
                .par_chunks(512)
                .enumerate()
                .map(|(c, chunk)| {
                    let mut rng = base2.substream(c as u64).rng();
                    chunk
                        .iter()
                        .map(|&((a, k, y, w), z0)| {
                            let st = crate::poisson::PsiState { a, k, y, w };
                            let next = psi_step(&st, h, grid_scale, &mut rng).expect("psi step");
                            (z0, next.k + next.y)
                        })
                        .collect::<Vec<_>>()
                })
                .flatten()
                .collect()
        };
        results
    };
    for bump in bump_library(z) {
        let target = 2.0 / z * (bump.d1)(z) + 0.5 * (bump.d2)(z);
        let samples: Vec<f64> =
            stepped.iter().map(|&(z0, z1)| ((bump.f)(z1) - (bump.f)(z0)) / h).collect();
        let nf = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / nf;
        let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (nf - 1.0);
        let se = (var / nf).sqrt();
        let tol = (0.05 * target.abs()).max(3.0 * se);
        out.push(TestReport::from_distance(
            &format!("generator_estimate_{}", bump.name),
            vec![samples.len() as u64],
            (mean - target).abs(),
            tol,
        ));
    }
    Ok(out)
}

type PsiStateCopy = (f64, f64, f64, f64);

fn mean_zero_report(name: &str, diffs: &[f64]) -> TestReport {
    let nf = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / nf;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (nf - 1.0);
    let z = mean.abs() / (var / nf).sqrt();
    TestReport::from_distance(name, vec![diffs.len() as u64], z, 3.0)
}

pub(super) fn psi_scaling_consistency(p: &Params, base: RngStream) -> Result<RunOutput> {
    let n = p.get_usize("n");
    let grid_scale = p.get_usize("grid_scale");
    // evolve the t = 1 state by delta = 1 and compare against the direct
    // construction at t = 2 (its law is fixed by Brownian scaling)
    let stepped: Vec<(f64, f64, f64, f64)> = par_draws(base.substream(1), n, |rng| {
        let s = straddle_time_one(rng).expect("straddle");
        let next = psi_step(&s.state, 1.0, grid_scale, rng).expect("psi step");
        (next.a, next.k, next.y, next.w)
    });
    let direct: Vec<(f64, f64, f64, f64)> = par_draws(base.substream(2), n, |rng| {
        let s = straddle_at_time(2.0, rng).expect("straddle at 2");
        (s.state.a, s.state.k, s.state.y, s.state.w)
    });
    let mut out = RunOutput::default();
    let mut a1: Vec<f64> = stepped.iter().map(|s| s.0).collect();
    let mut a2: Vec<f64> = direct.iter().map(|s| s.0).collect();
    out.push(ks_two_sample("psi_scaling_slope", &mut a1, &mut a2, ALPHA)?);
    let mut y1: Vec<f64> = stepped.iter().map(|s| s.2).collect();
    let mut y2: Vec<f64> = direct.iter().map(|s| s.2).collect();
    out.push(ks_two_sample("psi_scaling_gap", &mut y1, &mut y2, ALPHA)?);
    let mut k1: Vec<f64> = stepped.iter().map(|s| s.1).collect();
    let mut k2: Vec<f64> = direct.iter().map(|s| s.1).collect();
    out.push(ks_two_sample("psi_scaling_value", &mut k1, &mut k2, ALPHA)?);
    Ok(out)
}

pub(super) fn bridge_line_mc(p: &Params, base: RngStream) -> Result<RunOutput> {
    let n = p.get_usize("n");
    let (s, t) = (p.get("s"), p.get("t"));
    let (a, b) = (p.get("a"), p.get("b"));
    let (x, y) = (0.0, 0.0);
    let formula = bridge_crossing_prob(s, t, a, b, x, y)?;

    // grid simulation underestimates continuum crossings by O(sqrt(dt));
    // two resolutions and a Richardson step remove the leading bias
    let cross_freq = |steps: usize, stream: u64| -> f64 {
        let hits: Vec<bool> = par_draws(base.substream(stream), n, |rng| {
            let bridge = sample_bridge(steps, t - s, x, y, rng).expect("bridge");
            let crossed = bridge.points().any(|(u, v)| v > a * (s + u) + b);
            crossed
        });
        hits.iter().filter(|&&h| h).count() as f64 / n as f64
    };
    let p_coarse = cross_freq(1 << 12, 1);
    let p_fine = cross_freq(1 << 16, 2);
    // bias model p_grid = p - c sqrt(dt); dt ratio 16 gives factor 4
    let p_extrap = p_fine + (p_fine - p_coarse) / 3.0;
    let var = formula * (1.0 - formula) / n as f64;
    let se = ((16.0 * var + var) / 9.0).sqrt();
    let mut out = RunOutput::default();
    out.push(TestReport::from_distance(
        "bridge_line_mc",
        vec![n as u64],
        (p_extrap - formula).abs() / se,
        3.0,
    ));
    if (s, t, a, b) == (1.0, 2.0, 0.0, 1.0) {
        out.push(TestReport::from_distance(
            "bridge_line_formula_value",
            vec![],
            (formula - (-2.0f64).exp()).abs(),
            1e-12,
        ));
    }
    // the conditional-density inputs of the slope-conditional check reuse
    // kprime_given_z_density; pin its normalization here as a cheap oracle
    let mass = crate::quad::integrate_panels(0.0, 2.0, 64, 2, |v| kprime_given_z_density(2.0, v));
    out.push(TestReport::from_distance("kprime_conditional_mass", vec![], (mass - 1.0).abs(), 1e-10));
    Ok(out)
}
