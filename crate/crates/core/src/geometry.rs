//! Exact concave-majorant / convex-minorant computation on sampled paths
//! and the path functionals built on top of them.
//!
//! The hull is Andrew's monotone chain on time-sorted points, O(n). Slope
//! comparisons use the cross-product form with a relative epsilon so that
//! collinear points merge into a single face.

use crate::paths::{GridPath, PathSamples};
use crate::rng::Stream;
use crate::{Error, Result};

const HULL_EPS: f64 = 1e-12;

/// Orientation of a piecewise-linear hull.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HullKind {
    /// Slopes strictly decreasing left to right; dominates the path.
    Concave,
    /// Slopes strictly increasing left to right; lies below the path.
    Convex,
}

/// Ordered vertex list of a concave majorant (or convex minorant).
#[derive(Debug, Clone, PartialEq)]
pub struct MajorantSkeleton {
    pub kind: HullKind,
    /// (time, value) pairs; times strictly increasing.
    pub vertices: Vec<(f64, f64)>,
}

/// The face of a skeleton straddling a query time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StraddleInfo {
    /// Left-hand vertex time `G_t`.
    pub g: f64,
    /// Right-hand vertex time `D_t`.
    pub d: f64,
    /// Face slope (right-hand derivative at a vertex).
    pub slope: f64,
    /// Skeleton value at the query time.
    pub value: f64,
    /// Intercept at zero, `value - t * slope`.
    pub intercept: f64,
}

impl MajorantSkeleton {
    /// Build from ordered faces (slope, duration) starting at `origin`.
    pub fn from_faces(kind: HullKind, origin: (f64, f64), faces: &[(f64, f64)]) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::InvalidInput("cannot assemble a skeleton from zero faces".into()));
        }
        let mut vertices = Vec::with_capacity(faces.len() + 1);
        vertices.push(origin);
        let (mut t, mut v) = origin;
        let mut prev_slope = f64::NAN;
        for &(slope, dur) in faces {
            if !(dur > 0.0) {
                return Err(Error::InvalidInput("face durations must be positive".into()));
            }
            let ordered = match kind {
                HullKind::Concave => prev_slope.is_nan() || slope < prev_slope,
                HullKind::Convex => prev_slope.is_nan() || slope > prev_slope,
            };
            if !ordered {
                return Err(Error::InvalidInput("face slopes out of order for hull kind".into()));
            }
            prev_slope = slope;
            t += dur;
            v += slope * dur;
            vertices.push((t, v));
        }
        Ok(MajorantSkeleton { kind, vertices })
    }

    pub fn span(&self) -> (f64, f64) {
        (self.vertices[0].0, self.vertices[self.vertices.len() - 1].0)
    }

    pub fn n_faces(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Face slopes, in time order.
    pub fn slopes(&self) -> Vec<f64> {
        self.vertices
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect()
    }

    /// Index of the face with `vertices[j].0 <= t < vertices[j+1].0`.
    fn face_index(&self, t: f64) -> Result<usize> {
        let (lo, hi) = self.span();
        if t < lo || t >= hi {
            return Err(Error::OutOfRange(format!("t = {t} outside skeleton span [{lo}, {hi})")));
        }
        let j = self.vertices.partition_point(|&(vt, _)| vt <= t);
        Ok(j.clamp(1, self.vertices.len() - 1) - 1)
    }

    /// Piecewise-linear value at `t`.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let (lo, hi) = self.span();
        if t == hi {
            return Ok(self.vertices[self.vertices.len() - 1].1);
        }
        if t < lo || t > hi {
            return Err(Error::OutOfRange(format!("t = {t} outside skeleton span [{lo}, {hi}]")));
        }
        let j = self.face_index(t)?;
        let (t0, v0) = self.vertices[j];
        let (t1, v1) = self.vertices[j + 1];
        Ok(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
    }

    /// Negate values (majorant <-> minorant duality).
    pub fn negated(&self) -> MajorantSkeleton {
        MajorantSkeleton {
            kind: match self.kind {
                HullKind::Concave => HullKind::Convex,
                HullKind::Convex => HullKind::Concave,
            },
            vertices: self.vertices.iter().map(|&(t, v)| (t, -v)).collect(),
        }
    }
}

/// Upper hull of time-sorted points. `strict`ness of the pop comparison is
/// controlled by the cross-product epsilon; collinear points merge.
fn upper_hull(times: &[f64], values: &[f64]) -> Vec<(f64, f64)> {
    let n = times.len();
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(64);
    for i in 0..n {
        let p3 = (times[i], values[i]);
        while hull.len() >= 2 {
            let p1 = hull[hull.len() - 2];
            let p2 = hull[hull.len() - 1];
            let a = (p2.0 - p1.0) * (p3.1 - p1.1);
            let b = (p3.0 - p1.0) * (p2.1 - p1.1);
            let tol = HULL_EPS * a.abs().max(b.abs());
            // pop p2 when it is at or below the chord p1 -> p3
            if a >= b - tol {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p3);
    }
    hull
}

/// Least concave majorant of a grid path.
pub fn concave_majorant(path: &GridPath) -> Result<MajorantSkeleton> {
    let times: Vec<f64> = (0..path.len()).map(|i| path.time(i)).collect();
    concave_majorant_of_points(&times, &path.values)
}

/// Least concave majorant of explicitly-timed samples.
pub fn concave_majorant_of_points(times: &[f64], values: &[f64]) -> Result<MajorantSkeleton> {
    if times.len() < 2 || times.len() != values.len() {
        return Err(Error::InvalidInput(format!(
            "hull needs >= 2 points with matching times, got {}",
            times.len()
        )));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("hull input times must be strictly increasing".into()));
    }
    Ok(MajorantSkeleton {
        kind: HullKind::Concave,
        vertices: upper_hull(times, values),
    })
}

/// Greatest convex minorant: exactly the negated majorant of the negated path.
pub fn convex_minorant(path: &GridPath) -> Result<MajorantSkeleton> {
    let times: Vec<f64> = (0..path.len()).map(|i| path.time(i)).collect();
    convex_minorant_of_points(&times, &path.values)
}

pub fn convex_minorant_of_points(times: &[f64], values: &[f64]) -> Result<MajorantSkeleton> {
    let neg: Vec<f64> = values.iter().map(|v| -v).collect();
    Ok(concave_majorant_of_points(times, &neg)?.negated())
}

/// Face of `skeleton` straddling `t`: left/right vertices, slope (the
/// right-hand derivative when `t` is a vertex), value and zero-intercept.
pub fn straddle(skeleton: &MajorantSkeleton, t: f64) -> Result<StraddleInfo> {
    let j = skeleton.face_index(t)?;
    let (t0, v0) = skeleton.vertices[j];
    let (t1, v1) = skeleton.vertices[j + 1];
    let slope = (v1 - v0) / (t1 - t0);
    let value = v0 + slope * (t - t0);
    Ok(StraddleInfo {
        g: t0,
        d: t1,
        slope,
        value,
        intercept: value - t * slope,
    })
}

/// Rightmost maximizer of `B(t) - mu t` over the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaMu {
    pub index: usize,
    pub time: f64,
    /// Path value at the maximizer.
    pub value: f64,
    /// The maximizer sits at the final grid point: the horizon was too short
    /// for the drifted maximum to be interior.
    pub hit_boundary: bool,
}

pub fn sigma_mu(path: &GridPath, mu: f64) -> Result<SigmaMu> {
    if !(mu > 0.0) {
        return Err(Error::param(format!("sigma_mu requires mu > 0, got {mu}")));
    }
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0usize;
    for (i, &v) in path.values.iter().enumerate() {
        let drifted = v - mu * path.time(i);
        if drifted >= best {
            best = drifted;
            arg = i;
        }
    }
    Ok(SigmaMu {
        index: arg,
        time: path.time(arg),
        value: path.values[arg],
        hit_boundary: arg == path.len() - 1,
    })
}

/// Minslope of a nonnegative path on [0, 1] with f(0) = 0: the minimum of
/// f(u)/u over grid points u > 0 and the last grid time attaining it.
pub fn minslope(path: &GridPath) -> Result<(f64, f64)> {
    if path.t0 != 0.0 || (path.horizon() - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidInput("minslope expects a grid over [0, 1]".into()));
    }
    if path.values.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidInput("minslope input must be nonnegative".into()));
    }
    let mut m = f64::INFINITY;
    let mut b = 0.0;
    for i in 1..path.len() {
        let u = path.time(i);
        let ratio = path.values[i] / u;
        if ratio <= m {
            m = ratio;
            b = u;
        }
    }
    Ok((m, b))
}

/// The two pseudo-meanders read off a drifted path at `sigma_mu`, rescaled
/// onto a fixed grid of `out_n` steps on [0, 1] by linear interpolation.
///
/// `tilde` uses the drift-corrected increments (`B(t) - mu t`), `hat` the
/// raw ones; pointwise `hat(u) = tilde(u) + mu sqrt(sigma) u`.
#[derive(Debug, Clone)]
pub struct Meanders {
    pub tilde: GridPath,
    pub hat: GridPath,
    pub sigma: SigmaMu,
}

pub fn meanders(path: &GridPath, mu: f64, out_n: usize) -> Result<Meanders> {
    let sigma = sigma_mu(path, mu)?;
    if sigma.index == 0 {
        return Err(Error::InvalidInput("sigma_mu at the path start; no meander".into()));
    }
    let s = sigma.time;
    let rs = s.sqrt();
    let b_sigma = sigma.value;
    let dt = 1.0 / out_n as f64;
    let mut tilde = Vec::with_capacity(out_n + 1);
    let mut hat = Vec::with_capacity(out_n + 1);
    tilde.push(0.0);
    hat.push(0.0);
    for j in 1..=out_n {
        let u = j as f64 * dt;
        let t_back = (1.0 - u) * s;
        let b_back = path.value_at(t_back)?;
        hat.push((b_sigma - b_back) / rs);
        tilde.push(((b_sigma - mu * s) - (b_back - mu * t_back)) / rs);
    }
    Ok(Meanders {
        tilde: GridPath::new(0.0, dt, tilde)?,
        hat: GridPath::new(0.0, dt, hat)?,
        sigma,
    })
}

/// Sum of squared increments.
pub fn quadratic_variation(values: &[f64]) -> f64 {
    values.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum()
}

/// Functionals of a path and its majorant at a fixed interior time:
/// `(K'(t), K(t), K(t) - B(t))`.
pub fn majorant_functionals_at(path: &GridPath, t: f64) -> Result<(f64, f64, f64)> {
    let skel = concave_majorant(path)?;
    let info = straddle(&skel, t)?;
    let b = path.value_at(t)?;
    Ok((info.slope, info.value, info.value - b))
}

/// Time-inverted copy of a path: points `(1/t, B(t)/t)` for grid times in
/// `[t_min, T]`, re-sorted by time. Used by the time-inversion law checks.
pub fn time_inverted_points(path: &GridPath, t_min: f64) -> Result<PathSamples> {
    let mut pts: Vec<(f64, f64)> = path
        .points()
        .filter(|&(t, _)| t >= t_min)
        .map(|(t, v)| (1.0 / t, v / t))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InvalidInput("too few points after inversion".into()));
    }
    pts.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let times: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let values: Vec<f64> = pts.iter().map(|p| p.1).collect();
    PathSamples::new(times, values)
}

/// Exhaustive reference hull for small inputs: the lower envelope of all
/// lines through point pairs that dominate every point. O(n^3); test oracle
/// for the monotone chain.
pub fn brute_force_majorant_values(times: &[f64], values: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut lines = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let a = (values[j] - values[i]) / (times[j] - times[i]);
            let b = values[i] - a * times[i];
            if (0..n).all(|k| a * times[k] + b >= values[k] - 1e-9) {
                lines.push((a, b));
            }
        }
    }
    times
        .iter()
        .map(|&t| {
            lines
                .iter()
                .map(|&(a, b)| a * t + b)
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Draw a random grid path for property tests.
pub fn random_small_path(n: usize, rng: &mut Stream) -> GridPath {
    use rand::Rng;
    let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    GridPath::new(0.0, 1.0, values).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn path_of(values: &[f64]) -> GridPath {
        GridPath::new(0.0, 1.0, values.to_vec()).unwrap()
    }

    #[test]
    fn hull_four_points() {
        // Oracle: brute force over all dominating pair-lines.
        let times = [0.0, 1.0, 2.0, 3.0];
        let values = [0.0, 2.0, 1.0, 3.0];
        let skel = concave_majorant_of_points(&times, &values).unwrap();
        assert_eq!(skel.vertices, vec![(0.0, 0.0), (1.0, 2.0), (3.0, 3.0)]);
        let brute = brute_force_majorant_values(&times, &values);
        for (i, &t) in times.iter().enumerate() {
            assert!((skel.value_at(t).unwrap() - brute[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn hull_idempotent_on_concave_data() {
        // strictly decreasing slopes survive untouched
        let times = [0.0, 1.0, 2.0, 4.0];
        let values = [0.0, 3.0, 5.0, 6.0];
        let skel = concave_majorant_of_points(&times, &values).unwrap();
        assert_eq!(skel.vertices.len(), 4);
        let slopes = skel.slopes();
        assert!(slopes.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn hull_merges_collinear() {
        let times = [0.0, 1.0, 2.0, 3.0];
        let values = [0.0, 1.0, 2.0, 2.5];
        let skel = concave_majorant_of_points(&times, &values).unwrap();
        // (1,1) is on the chord (0,0)-(2,2): merged away
        assert_eq!(skel.vertices, vec![(0.0, 0.0), (2.0, 2.0), (3.0, 2.5)]);
    }

    #[test]
    fn reflection_duality_exact() {
        let mut rng = RngStream::new(41, 0).rng();
        for _ in 0..200 {
            let p = random_small_path(24, &mut rng);
            let min = convex_minorant(&p).unwrap();
            let neg = GridPath::new(0.0, 1.0, p.values.iter().map(|v| -v).collect()).unwrap();
            let maj_of_neg = concave_majorant(&neg).unwrap();
            assert_eq!(min.vertices.len(), maj_of_neg.vertices.len());
            for (a, b) in min.vertices.iter().zip(&maj_of_neg.vertices) {
                assert_eq!(a.0, b.0);
                assert_eq!(a.1, -b.1);
            }
        }
    }

    #[test]
    fn hull_matches_brute_force_small_grids() {
        let mut rng = RngStream::new(42, 0).rng();
        for n in 2..=12 {
            for _ in 0..400 {
                let p = random_small_path(n, &mut rng);
                let times: Vec<f64> = (0..n).map(|i| i as f64).collect();
                let skel = concave_majorant(&p).unwrap();
                let brute = brute_force_majorant_values(&times, &p.values);
                for (i, &t) in times.iter().enumerate() {
                    let hv = skel.value_at(t).unwrap();
                    assert!(
                        (hv - brute[i]).abs() < 1e-9,
                        "n={n}, i={i}: hull {hv} vs brute {}",
                        brute[i]
                    );
                }
            }
        }
    }

    #[test]
    fn domination_and_minimality() {
        let mut rng = RngStream::new(43, 0).rng();
        for _ in 0..300 {
            let p = random_small_path(40, &mut rng);
            let skel = concave_majorant(&p).unwrap();
            // domination with touching at vertices
            for (i, &v) in p.values.iter().enumerate() {
                let kv = skel.value_at(p.time(i)).unwrap();
                assert!(kv >= v - 1e-12);
            }
            for &(t, kv) in &skel.vertices {
                let i = t as usize;
                assert!((kv - p.values[i]).abs() < 1e-12);
            }
            // removing an interior vertex breaks domination somewhere
            for drop in 1..skel.vertices.len().saturating_sub(1) {
                let mut vs = skel.vertices.clone();
                vs.remove(drop);
                let reduced = MajorantSkeleton { kind: HullKind::Concave, vertices: vs };
                let violated = (0..p.len()).any(|i| {
                    reduced
                        .value_at(p.time(i))
                        .map(|kv| kv < p.values[i] - 1e-12)
                        .unwrap_or(false)
                });
                assert!(violated, "vertex {drop} is redundant");
            }
        }
    }

    #[test]
    fn straddle_worked_example() {
        let skel = MajorantSkeleton {
            kind: HullKind::Concave,
            vertices: vec![(0.0, 0.0), (1.0, 2.0), (3.0, 3.0)],
        };
        let info = straddle(&skel, 2.0).unwrap();
        assert_eq!(info.g, 1.0);
        assert_eq!(info.d, 3.0);
        assert!((info.slope - 0.5).abs() < 1e-15);
        assert!((info.value - 2.5).abs() < 1e-15);
        assert!((info.intercept - 1.5).abs() < 1e-15);
        // at a vertex: right-hand face
        let at_vertex = straddle(&skel, 1.0).unwrap();
        assert!((at_vertex.slope - 0.5).abs() < 1e-15);
        // intercept identity on a generic point
        let q = straddle(&skel, 2.34).unwrap();
        assert!((q.intercept - (q.value - 2.34 * q.slope)).abs() < 1e-12);
        // outside span
        assert!(straddle(&skel, 3.5).is_err());
        assert!(straddle(&skel, -0.1).is_err());
    }

    #[test]
    fn sigma_mu_deterministic_cases() {
        // v(t) = min(t, 2-t) on [0, 2], mu = 1/2: rightmost argmax at t = 1
        let n = 200;
        let values: Vec<f64> = (0..=n)
            .map(|i| {
                let t = 2.0 * i as f64 / n as f64;
                t.min(2.0 - t)
            })
            .collect();
        let p = GridPath::new(0.0, 2.0 / n as f64, values).unwrap();
        let s = sigma_mu(&p, 0.5).unwrap();
        assert!((s.time - 1.0).abs() < 1e-12);
        assert!(!s.hit_boundary);
        // exact tie on a constant-drifted segment: last index wins
        let tie = path_of(&[0.0, 0.5, 1.0, 0.2]);
        let s = sigma_mu(&tie, 0.5).unwrap();
        assert_eq!(s.index, 2);
        assert!(sigma_mu(&tie, 0.0).is_err());
    }

    #[test]
    fn minslope_cases() {
        let n = 64;
        let grid = |f: &dyn Fn(f64) -> f64| {
            GridPath::new(
                0.0,
                1.0 / n as f64,
                (0..=n).map(|i| f(i as f64 / n as f64)).collect(),
            )
            .unwrap()
        };
        let (m, b) = minslope(&grid(&|u| u)).unwrap();
        assert_eq!(m, 1.0);
        assert_eq!(b, 1.0);
        // concave f through the origin: ratio nonincreasing, so m = f(1), b = 1
        let (m, b) = minslope(&grid(&|u| u.sqrt())).unwrap();
        assert!((m - 1.0).abs() < 1e-12);
        assert_eq!(b, 1.0);
        // f(u) = u^2: ratio u increasing, minimum at the first grid point
        let (m, b) = minslope(&grid(&|u| u * u)).unwrap();
        assert!((b - 1.0 / n as f64).abs() < 1e-12);
        assert!((m - 1.0 / n as f64).abs() < 1e-12);
        let bad = GridPath::new(0.0, 0.5, vec![0.0, -0.1, 0.0]).unwrap();
        assert!(minslope(&bad).is_err());
    }

    #[test]
    fn meander_identities() {
        let mut rng = RngStream::new(44, 0).rng();
        let path = crate::paths::sample_bm(1 << 14, 16.0, 0.0, &mut rng).unwrap();
        let mu = 1.0;
        let m = meanders(&path, mu, 256).unwrap();
        assert_eq!(m.tilde.values[0], 0.0);
        assert_eq!(m.hat.values[0], 0.0);
        let rs = m.sigma.time.sqrt();
        for j in 0..=256 {
            let u = j as f64 / 256.0;
            let lhs = m.hat.values[j];
            let rhs = m.tilde.values[j] + mu * rs * u;
            assert!((lhs - rhs).abs() < 1e-12, "u = {u}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn quadratic_variation_cases() {
        // linear path: QV -> 0 with dt
        let n = 1 << 16;
        let lin: Vec<f64> = (0..=n).map(|i| 2.0 * i as f64 / n as f64).collect();
        assert!(quadratic_variation(&lin) < 1e-3);
        // BM on [0,1]: QV ~ 1 within 2%
        let mut rng = RngStream::new(45, 0).rng();
        let mut qvs = Vec::new();
        for _ in 0..50 {
            let p = crate::paths::sample_bm(n, 1.0, 0.0, &mut rng).unwrap();
            let qv = quadratic_variation(&p.values);
            assert!((qv - 1.0).abs() < 0.02, "qv = {qv}");
            qvs.push(qv);
        }
        let mean = qvs.iter().sum::<f64>() / qvs.len() as f64;
        assert!((mean - 1.0).abs() < 0.005, "mean qv = {mean}");
    }
}
