//! The Poissonian description of the concave majorant: the pure-jump
//! process tau realized as a marked point process, skeleton assembly,
//! excursion attachment, exact sampling of the straddling-face state at
//! t = 1, the convex minorant of the drifted Bessel(3) process, zenith
//! increments, and the four-component Markov semigroup step.
//!
//! Inverse slopes r of the majorant's faces form a Poisson point process
//! with intensity dr/r; the duration attached to an inverse slope r is
//! r^2 chi_1^2. Everything below the sampled window is accounted for
//! exactly by one vertex draw `(sigma, B(sigma))` of the drifted maximum
//! (its two-coordinate law is an explicit chi/beta factorization), so the
//! constructions carry no truncation bias.

use crate::dist::{sample_scalar, std_normal, ScalarLaw};
use crate::geometry::{
    convex_minorant_of_points, straddle, HullKind, MajorantSkeleton, StraddleInfo,
};
use crate::paths::{bessel3_bridge_at, bessel3_bridge_marginal, PathSamples};
use crate::rng::Stream;
use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Poisson};

/// Marked point set {(r, dtau_r)}: the jumps of tau inside an inverse-slope
/// window, sorted by increasing r.
#[derive(Debug, Clone)]
pub struct TauJumps {
    /// (inverse slope r, duration dtau), r strictly increasing.
    pub jumps: Vec<(f64, f64)>,
    pub window: (f64, f64),
}

impl TauJumps {
    pub fn total_duration(&self) -> f64 {
        self.jumps.iter().map(|j| j.1).sum()
    }

    /// Extend the realization upward to `new_hi`, sampling only the fresh
    /// sub-window so the union remains one Poisson realization.
    pub fn extend_up(&mut self, new_hi: f64, rng: &mut Stream) -> Result<()> {
        if new_hi <= self.window.1 {
            return Err(Error::param("extend_up needs a larger upper edge"));
        }
        let fresh = sample_tau_window(self.window.1, new_hi, rng)?;
        self.jumps.extend(fresh.jumps);
        self.window.1 = new_hi;
        Ok(())
    }
}

/// Sample the jump set of tau on the inverse-slope window `(r_lo, r_hi)`:
/// a Poisson(log(r_hi/r_lo)) number of locations, uniform in log r, each
/// marked with an independent duration r^2 chi_1^2.
pub fn sample_tau_window(r_lo: f64, r_hi: f64, rng: &mut Stream) -> Result<TauJumps> {
    if !(r_lo > 0.0) || !(r_hi > r_lo) {
        return Err(Error::param(format!(
            "tau window needs 0 < r_lo < r_hi, got ({r_lo}, {r_hi})"
        )));
    }
    let lambda = (r_hi / r_lo).ln();
    let n = Poisson::new(lambda)
        .map_err(|e| Error::param(format!("window intensity: {e}")))?
        .sample(rng) as usize;
    let mut jumps: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let r = r_lo * (rng.gen::<f64>() * lambda).exp();
            let z = std_normal(rng);
            (r, r * r * z * z)
        })
        .collect();
    jumps.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(TauJumps { jumps, window: (r_lo, r_hi) })
}

/// Assemble the majorant skeleton of a jump set: faces in time order are
/// the jumps by increasing r (decreasing slope 1/r), starting at the
/// window's tau origin.
pub fn assemble_k(jumps: &TauJumps) -> Result<MajorantSkeleton> {
    if jumps.jumps.is_empty() {
        return Err(Error::InvalidInput("cannot assemble K from an empty jump set".into()));
    }
    let faces: Vec<(f64, f64)> = jumps.jumps.iter().map(|&(r, dt)| (1.0 / r, dt)).collect();
    MajorantSkeleton::from_faces(HullKind::Concave, (0.0, 0.0), &faces)
}

/// One draw of `(sigma_mu, B(sigma_mu))`: the chi/beta factorization of the
/// drifted maximum, `(mu^2 sigma, mu B(sigma)) = (X^2 V^2, X^2 V)` with
/// X chi(3) and V beta(1,2) independent.
pub fn williams_vertex(mu: f64, rng: &mut Stream) -> Result<(f64, f64)> {
    if !(mu > 0.0) {
        return Err(Error::param(format!("williams_vertex needs mu > 0, got {mu}")));
    }
    let x = sample_scalar(ScalarLaw::Chi(3), rng)?;
    let v = sample_scalar(ScalarLaw::Beta(1.0, 2.0), rng)?;
    let sigma = (x * v / mu) * (x * v / mu);
    let value = x * x * v / mu;
    Ok((sigma, value))
}

/// Reconstruct the path below (above) a skeleton by hanging independent
/// scaled excursions on every face: `n_per_face` uniform sub-steps per
/// face, vertices included exactly.
pub fn attach_excursions(
    skeleton: &MajorantSkeleton,
    n_per_face: usize,
    rng: &mut Stream,
) -> Result<PathSamples> {
    if n_per_face < 2 {
        return Err(Error::param("need at least 2 sub-steps per face"));
    }
    let sign = match skeleton.kind {
        HullKind::Concave => -1.0, // path hangs below K
        HullKind::Convex => 1.0,   // path sits above C
    };
    let mut times = Vec::with_capacity(skeleton.n_faces() * n_per_face + 1);
    let mut values = Vec::with_capacity(times.capacity());
    times.push(skeleton.vertices[0].0);
    values.push(skeleton.vertices[0].1);
    for w in skeleton.vertices.windows(2) {
        let (t0, v0) = w[0];
        let (t1, v1) = w[1];
        let dur = t1 - t0;
        let slope = (v1 - v0) / dur;
        let rel: Vec<f64> = (1..n_per_face).map(|j| j as f64 / n_per_face as f64).collect();
        let exc = bessel3_bridge_at(&rel, 1.0, 0.0, 0.0, rng)?;
        for (u, e) in rel.iter().zip(exc) {
            times.push(t0 + u * dur);
            values.push(v0 + slope * u * dur + sign * dur.sqrt() * e);
        }
        times.push(t1);
        values.push(v1);
    }
    PathSamples::new(times, values)
}

/// Four-coordinate state of the majorant at a time t:
/// slope K'(t), value K(t), gap K(t) - B(t), and time to next vertex D_t - t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiState {
    pub a: f64,
    pub k: f64,
    pub y: f64,
    pub w: f64,
}

/// Exact draw of the majorant state straddling t = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StraddleSample {
    pub state: PsiState,
    /// I(1) = K(1) - K'(1).
    pub intercept: f64,
    pub g1: f64,
    pub d1: f64,
    pub retries: u64,
}

/// Window bottom for the straddle construction. Everything below is one
/// exact vertex draw; the probability that the face straddling t = 1 has
/// slope above 1/R_LO is on the order of exp(-2^15) and triggers a logged
/// resample.
const STRADDLE_R_LO: f64 = 1.0 / 256.0;
const STRADDLE_R_HI0: f64 = 4.0;
const WINDOW_RATIO_CAP: f64 = 1.0995e12; // 2^40
const MAX_RETRIES: u64 = 64;

/// Sample `(K'(1), K(1), K(1) - B(1), D_1 - 1)` plus `I(1)` and `G_1`
/// exactly from the Poisson construction: jumps on a window, one vertex
/// draw for the sub-window mass, and the lazy excursion marginal on the
/// straddling face.
pub fn straddle_time_one(rng: &mut Stream) -> Result<StraddleSample> {
    straddle_at_time(1.0, rng)
}

/// Same construction at an arbitrary fixed time `t > 0` (used by the
/// scaling cross-checks; the law is the Brownian-scaled copy of t = 1).
pub fn straddle_at_time(t: f64, rng: &mut Stream) -> Result<StraddleSample> {
    if !(t > 0.0) {
        return Err(Error::param(format!("straddle time must be positive, got {t}")));
    }
    // scale: jumps for horizon t are the t=1 window scaled by sqrt(t)
    let scale = t.sqrt();
    let mut retries = 0u64;
    loop {
        if retries >= MAX_RETRIES {
            return Err(Error::GrowthCap(format!(
                "straddle_at_time({t}): window cap hit {retries} times"
            )));
        }
        let r_lo = STRADDLE_R_LO * scale;
        let (mut t_cur, mut v_cur) = williams_vertex(1.0 / r_lo, rng)?;
        if t_cur >= t {
            retries += 1;
            continue;
        }
        let mut jumps = sample_tau_window(r_lo, STRADDLE_R_HI0 * scale, rng)?;
        // walk faces; extend the window upward until the span crosses t
        let mut face: Option<(f64, f64, f64, f64)> = None; // (r, g, d, v_at_g)
        let mut idx = 0usize;
        'walk: loop {
            while idx < jumps.jumps.len() {
                let (r, dt) = jumps.jumps[idx];
                let t_next = t_cur + dt;
                if t <= t_next && t > t_cur {
                    face = Some((r, t_cur, t_next, v_cur));
                    break 'walk;
                }
                t_cur = t_next;
                v_cur += dt / r;
                idx += 1;
            }
            if face.is_none() {
                let hi = jumps.window.1;
                if hi / jumps.window.0 > WINDOW_RATIO_CAP {
                    break 'walk;
                }
                jumps.extend_up(hi * hi / jumps.window.0, rng)?;
            }
        }
        let Some((r, g, d, v_g)) = face else {
            retries += 1;
            continue;
        };
        let a = 1.0 / r;
        let k = v_g + (t - g) * a;
        let chi3 = sample_scalar(ScalarLaw::Chi(3), rng)?;
        let y = ((t - g) * (d - t) / (d - g)).sqrt() * chi3;
        return Ok(StraddleSample {
            state: PsiState { a, k, y, w: d - t },
            intercept: k - t * a,
            g1: g,
            d1: d,
            retries,
        });
    }
}

/// Zenith increment `(sigma_b - sigma_a, B(sigma_b) - B(sigma_a))` for
/// slopes `0 < b < a`, sampled exactly from the tau jumps in the window
/// `(1/a, 1/b)`. The empty jump set yields the atom (0, 0).
pub fn zenith_increment(a: f64, b: f64, rng: &mut Stream) -> Result<(f64, f64)> {
    if !(b > 0.0) || !(a > b) {
        return Err(Error::param(format!("zenith increment needs 0 < b < a, got ({a}, {b})")));
    }
    let jumps = sample_tau_window(1.0 / a, 1.0 / b, rng)?;
    let ds: f64 = jumps.jumps.iter().map(|j| j.1).sum();
    let dz: f64 = jumps.jumps.iter().map(|&(r, dt)| dt / r).sum();
    Ok((ds, dz))
}

// ---------------------------------------------------------------------------
// Convex minorant of the drifted Bessel(3) process
// ---------------------------------------------------------------------------

/// Which construction produced a Bessel minorant sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinorantConstruction {
    /// Simulate the radial path on a grid and take its hull.
    Direct,
    /// Sample the face point process and attach excursions.
    Poissonian,
}

/// A drifted-Bessel path together with its convex minorant.
#[derive(Debug, Clone)]
pub struct BesselMinorant {
    pub construction: MinorantConstruction,
    pub path: PathSamples,
    pub minorant: MajorantSkeleton,
}

/// Sample the face point process of the convex minorant of BES^0(3, mu) on
/// the slope window (0, alpha_hi): intensity d(alpha) / (mu - alpha),
/// durations chi_1^2 / (mu - alpha)^2.
pub fn sample_minorant_faces(
    mu: f64,
    alpha_hi: f64,
    rng: &mut Stream,
) -> Result<Vec<(f64, f64)>> {
    if !(mu > 0.0) || !(alpha_hi > 0.0) || alpha_hi >= mu {
        return Err(Error::param(format!(
            "slope window needs 0 < alpha_hi < mu, got (mu = {mu}, alpha_hi = {alpha_hi})"
        )));
    }
    let lambda = (mu / (mu - alpha_hi)).ln();
    let n = Poisson::new(lambda)
        .map_err(|e| Error::param(format!("face intensity: {e}")))?
        .sample(rng) as usize;
    let mut faces: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let v = rng.gen::<f64>() * lambda;
            let alpha = mu * (1.0 - (-v).exp());
            let z = std_normal(rng);
            let dur = z * z / ((mu - alpha) * (mu - alpha));
            (alpha, dur)
        })
        .collect();
    faces.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(faces)
}

/// Both constructions of (R, C) for a BES^0(3, mu) over `[0, horizon]`,
/// behind one interface. `n_per_unit` is the grid resolution for the direct
/// path; the Poissonian path attaches `n_per_unit.min(64)` excursion points
/// per face.
pub fn bessel_minorant(
    mu: f64,
    horizon: f64,
    n_per_unit: usize,
    construction: MinorantConstruction,
    rng: &mut Stream,
) -> Result<BesselMinorant> {
    if !(mu > 0.0) || !(horizon > 0.0) || n_per_unit < 2 {
        return Err(Error::param(format!(
            "bessel_minorant needs mu > 0, horizon > 0, n_per_unit >= 2, got ({mu}, {horizon}, {n_per_unit})"
        )));
    }
    match construction {
        MinorantConstruction::Direct => {
            let n = (horizon * n_per_unit as f64).ceil() as usize;
            let path = crate::paths::sample_bessel(3, 0.0, mu, n, horizon, rng)?;
            let minorant = crate::geometry::convex_minorant(&path)?;
            let times: Vec<f64> = (0..path.len()).map(|i| path.time(i)).collect();
            Ok(BesselMinorant {
                construction,
                path: PathSamples::new(times, path.values)?,
                minorant,
            })
        }
        MinorantConstruction::Poissonian => {
            let faces = grow_minorant_faces(mu, horizon, rng)?;
            let minorant =
                MajorantSkeleton::from_faces(HullKind::Convex, (0.0, 0.0), &faces)?;
            let path = attach_excursions(&minorant, n_per_unit.min(64).max(2), rng)?;
            Ok(BesselMinorant { construction, path, minorant })
        }
    }
}

/// Grow the slope window until the assembled span exceeds `horizon`.
fn grow_minorant_faces(mu: f64, horizon: f64, rng: &mut Stream) -> Result<Vec<(f64, f64)>> {
    let mut alpha_hi = 0.5 * mu;
    let mut faces = sample_minorant_faces(mu, alpha_hi, rng)?;
    let mut span: f64 = faces.iter().map(|f| f.1).sum();
    let mut grows = 0;
    while span <= horizon {
        grows += 1;
        if grows > 60 {
            return Err(Error::GrowthCap(format!(
                "minorant face window: span {span} below horizon {horizon} after {grows} growths"
            )));
        }
        let new_hi = mu - 0.5 * (mu - alpha_hi);
        let lambda = ((mu - alpha_hi) / (mu - new_hi)).ln();
        let n = Poisson::new(lambda).unwrap().sample(rng) as usize;
        for _ in 0..n {
            let v = rng.gen::<f64>() * lambda;
            let alpha = mu - (mu - alpha_hi) * (-v).exp();
            let z = std_normal(rng);
            let dur = z * z / ((mu - alpha) * (mu - alpha));
            faces.push((alpha, dur));
            span += dur;
        }
        alpha_hi = new_hi;
    }
    faces.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(faces)
}

/// Exact lazy draw of `(C'(t), R(t) - C(t))` for the Poissonian
/// construction: straddling face plus the excursion marginal.
pub fn bessel_minorant_at(mu: f64, t: f64, rng: &mut Stream) -> Result<(f64, f64)> {
    if !(mu > 0.0) || !(t > 0.0) {
        return Err(Error::param(format!("bessel_minorant_at needs mu, t > 0, got ({mu}, {t})")));
    }
    let faces = grow_minorant_faces(mu, t, rng)?;
    let mut t_cur = 0.0;
    for &(alpha, dur) in &faces {
        let t_next = t_cur + dur;
        if t > t_cur && t <= t_next {
            let chi3 = sample_scalar(ScalarLaw::Chi(3), rng)?;
            let gap = ((t - t_cur) * (t_next - t) / dur).sqrt() * chi3;
            return Ok((alpha, gap));
        }
        t_cur = t_next;
    }
    Err(Error::GrowthCap("face walk ended before t".into()))
}

// ---------------------------------------------------------------------------
// Psi semigroup step
// ---------------------------------------------------------------------------

/// One step of the four-component Markov semigroup.
///
/// For `delta` short of the next vertex the state moves along the face and
/// only the excursion marginal is sampled. Past the vertex, the state renews
/// through a drifted Bessel path and its convex minorant, simulated on a
/// scale-adaptive grid with horizon extension until the straddling face is
/// comfortably interior. `n_per_scale` controls the relative grid
/// resolution of that simulation.
pub fn psi_step(
    state: &PsiState,
    delta: f64,
    n_per_scale: usize,
    rng: &mut Stream,
) -> Result<PsiState> {
    if !(delta > 0.0) {
        return Err(Error::param(format!("psi_step needs delta > 0, got {delta}")));
    }
    if !(state.a > 0.0) || !(state.w > 0.0) || state.y < 0.0 {
        return Err(Error::param("psi_step state out of domain"));
    }
    if delta < state.w {
        let y_new = bessel3_bridge_marginal(state.y, state.w, delta, rng)?;
        return Ok(PsiState {
            a: state.a,
            k: state.k + state.a * delta,
            y: y_new,
            w: state.w - delta,
        });
    }
    // past the vertex: renewal via BES^0(3, a) and its convex minorant
    let u = (delta - state.w).max(delta * 1e-12);
    let (slope, c_u, r_u, d_u) = bessel_minorant_renewal(state.a, u, n_per_scale.max(32), rng)?;
    Ok(PsiState {
        a: state.a - slope,
        k: state.k + state.a * delta - c_u,
        y: r_u - c_u,
        w: d_u - u,
    })
}

/// Simulate BES^0(3, a) on a graded grid until its convex minorant has the
/// face straddling `u` safely interior; return
/// `(C'(u), C(u), R(u), D_u)`.
fn bessel_minorant_renewal(
    a: f64,
    u: f64,
    n_per_scale: usize,
    rng: &mut Stream,
) -> Result<(f64, f64, f64, f64)> {
    // graded time grid: uniform below u, then relative resolution 1/n per scale
    let mut times: Vec<f64> = (0..=n_per_scale).map(|j| u * j as f64 / n_per_scale as f64).collect();
    let mut horizon = 4.0 * (u + 1.0 / (a * a));
    let grow_times = |times: &mut Vec<f64>, to: f64, n: usize| {
        let mut t = *times.last().unwrap();
        while t < to {
            t += t / n as f64;
            times.push(t);
        }
    };
    grow_times(&mut times, horizon, n_per_scale);

    // vector increments; extendable
    let mut coord = [0.0f64; 3];
    coord[0] = 0.0;
    let mut values = Vec::with_capacity(times.len());
    values.push(0.0);
    let mut t_prev = 0.0;
    let sample_to = |coord: &mut [f64; 3], values: &mut Vec<f64>, t_prev: &mut f64, t: f64, rng: &mut Stream| {
        let dt = t - *t_prev;
        let sd = dt.sqrt();
        coord[0] += a * dt + sd * std_normal(rng);
        coord[1] += sd * std_normal(rng);
        coord[2] += sd * std_normal(rng);
        values.push((coord[0] * coord[0] + coord[1] * coord[1] + coord[2] * coord[2]).sqrt());
        *t_prev = t;
    };
    for i in 1..times.len() {
        let t = times[i];
        sample_to(&mut coord, &mut values, &mut t_prev, t, rng);
    }
    for attempt in 0..40 {
        let minorant = convex_minorant_of_points(&times, &values)?;
        if let Ok(info) = straddle(&minorant, u) {
            if info.d < 0.5 * horizon {
                let r_u = values[n_per_scale]; // u is an exact grid point
                return Ok((info.slope, info.value, r_u, info.d));
            }
        }
        if attempt == 39 {
            break;
        }
        // extend horizon and path
        horizon *= 2.0;
        let start = times.len();
        grow_times(&mut times, horizon, n_per_scale);
        for i in start..times.len() {
            let t = times[i];
            sample_to(&mut coord, &mut values, &mut t_prev, t, rng);
        }
    }
    Err(Error::GrowthCap(format!(
        "bessel minorant renewal: face at u = {u} not interior by horizon {horizon}"
    )))
}

/// Convenience: the straddling-face info of a skeleton at `t` (re-exported
/// geometry call, used throughout the experiments).
pub fn skeleton_straddle(skel: &MajorantSkeleton, t: f64) -> Result<StraddleInfo> {
    straddle(skel, t)
}
