//! Grid-based path samplers: Brownian motion with drift, bridges,
//! excursions, Bessel processes and bridges, first-passage bridges.
//!
//! Bridges use the pinned sequential Gaussian construction, which is exact
//! on the grid; Bessel paths are norms of vector Gaussian increments, which
//! avoids discretizing the 1/R drift singularity at zero.

use crate::dist::std_normal;
use crate::rng::Stream;
use crate::{Error, Result};
use rand::Rng;

/// Uniformly sampled path: `values[i]` at time `t0 + i * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
    /// Documentation-only tag for the drift used to generate the path.
    pub drift_tag: Option<f64>,
}

impl GridPath {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || values.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "grid path needs dt > 0 and >= 2 points, got dt = {dt}, len = {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite path value".into()));
        }
        Ok(GridPath { t0, dt, values, drift_tag: None })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.values.len() - 1)
    }

    /// Linear interpolation at `t` inside the span.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let span = self.horizon();
        if t < self.t0 - 1e-12 || t > span + 1e-12 {
            return Err(Error::OutOfRange(format!(
                "t = {t} outside [{}, {span}]",
                self.t0
            )));
        }
        let u = ((t - self.t0) / self.dt).clamp(0.0, (self.values.len() - 1) as f64);
        let i = (u.floor() as usize).min(self.values.len() - 2);
        let frac = u - i as f64;
        Ok(self.values[i] * (1.0 - frac) + self.values[i + 1] * frac)
    }

    /// (time, value) pairs.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().enumerate().map(|(i, &v)| (self.time(i), v))
    }
}

/// Path sampled at explicit (not necessarily uniform) times.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSamples {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl PathSamples {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(Error::InvalidInput("need matching times/values, >= 2 points".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("times must be strictly increasing".into()));
        }
        Ok(PathSamples { times, values })
    }

    pub fn value_at(&self, t: f64) -> Result<f64> {
        let n = self.times.len();
        if t < self.times[0] - 1e-12 || t > self.times[n - 1] + 1e-12 {
            return Err(Error::OutOfRange(format!("t = {t} outside sampled span")));
        }
        let j = self.times.partition_point(|&s| s <= t).clamp(1, n - 1);
        let (t0, t1) = (self.times[j - 1], self.times[j]);
        let frac = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        Ok(self.values[j - 1] * (1.0 - frac) + self.values[j] * frac)
    }
}

fn check_grid(n: usize, t_horizon: f64) -> Result<f64> {
    if n == 0 || !(t_horizon > 0.0) {
        return Err(Error::param(format!(
            "need n >= 1 steps and T > 0, got n = {n}, T = {t_horizon}"
        )));
    }
    Ok(t_horizon / n as f64)
}

/// Brownian motion with drift `mu` on [0, T]: n steps, n+1 values, B(0) = 0.
pub fn sample_bm(n: usize, t_horizon: f64, mu: f64, rng: &mut Stream) -> Result<GridPath> {
    let dt = check_grid(n, t_horizon)?;
    let sd = dt.sqrt();
    let mut values = Vec::with_capacity(n + 1);
    values.push(0.0);
    let mut acc = 0.0;
    for _ in 0..n {
        acc += mu * dt + sd * std_normal(rng);
        values.push(acc);
    }
    let mut p = GridPath::new(0.0, dt, values)?;
    p.drift_tag = Some(mu);
    Ok(p)
}

/// Scalar Brownian bridge values at interior `times` (strictly increasing,
/// inside (0, total)), from `x` at 0 to `y` at `total`. Sequential pinned
/// construction, exact in law on the given times.
pub(crate) fn bridge_scalar_at(
    times: &[f64],
    total: f64,
    x: f64,
    y: f64,
    rng: &mut Stream,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut cur = x;
    let mut t_cur = 0.0;
    for &t in times {
        let remaining = total - t_cur;
        let dt = t - t_cur;
        let mean = cur + (y - cur) * dt / remaining;
        let var = dt * (remaining - dt) / remaining;
        cur = mean + var.max(0.0).sqrt() * std_normal(rng);
        t_cur = t;
        out.push(cur);
    }
    out
}

/// Brownian bridge from `x` at 0 to `y` at T on a uniform grid; endpoints
/// are pinned exactly.
pub fn sample_bridge(n: usize, t_horizon: f64, x: f64, y: f64, rng: &mut Stream) -> Result<GridPath> {
    let dt = check_grid(n, t_horizon)?;
    let interior: Vec<f64> = (1..n).map(|i| i as f64 * dt).collect();
    let mid = bridge_scalar_at(&interior, t_horizon, x, y, rng);
    let mut values = Vec::with_capacity(n + 1);
    values.push(x);
    values.extend(mid);
    values.push(y);
    GridPath::new(0.0, dt, values)
}

/// Values of a three-coordinate pinned bridge norm at interior times: a
/// Bessel(3) bridge between scalars `x >= 0` and `y >= 0` over `[0, total]`.
///
/// One endpoint at zero needs no angular information; for x, y both positive
/// the relative angle of the endpoint vectors is tilted by the 3D Gaussian
/// transition weight (von Mises-Fisher with kappa = x y / total).
pub(crate) fn bessel3_bridge_at(
    times: &[f64],
    total: f64,
    x: f64,
    y: f64,
    rng: &mut Stream,
) -> Result<Vec<f64>> {
    if x < 0.0 || y < 0.0 {
        return Err(Error::param(format!("bessel bridge endpoints must be >= 0, got ({x}, {y})")));
    }
    let start = [x, 0.0, 0.0];
    let end = if x == 0.0 || y == 0.0 {
        [y, 0.0, 0.0]
    } else {
        let kappa = x * y / total;
        let v: f64 = rng.gen();
        // inverse CDF of density ∝ exp(kappa * u) on [-1, 1], written to stay
        // stable for large kappa
        let u = 1.0 + (v + (1.0 - v) * (-2.0 * kappa).exp()).ln() / kappa;
        let psi = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
        let s = (1.0 - u * u).max(0.0).sqrt();
        [y * u, y * s * psi.cos(), y * s * psi.sin()]
    };
    let mut coords = Vec::with_capacity(3);
    for k in 0..3 {
        coords.push(bridge_scalar_at(times, total, start[k], end[k], rng));
    }
    Ok((0..times.len())
        .map(|i| {
            (coords[0][i] * coords[0][i] + coords[1][i] * coords[1][i] + coords[2][i] * coords[2][i])
                .sqrt()
        })
        .collect())
}

/// Standard Brownian excursion on [0, 1]: zero at both ends, strictly
/// positive inside; the norm of three independent Brownian bridges.
pub fn sample_excursion(n: usize, rng: &mut Stream) -> Result<GridPath> {
    if n < 2 {
        return Err(Error::param(format!("excursion needs n >= 2 steps, got {n}")));
    }
    let dt = 1.0 / n as f64;
    let interior: Vec<f64> = (1..n).map(|i| i as f64 * dt).collect();
    let mid = bessel3_bridge_at(&interior, 1.0, 0.0, 0.0, rng)?;
    let mut values = Vec::with_capacity(n + 1);
    values.push(0.0);
    values.extend(mid);
    values.push(0.0);
    GridPath::new(0.0, dt, values)
}

/// Bessel process of dimension 3 or 5 started at `r0`, drift magnitude `mu`
/// along one axis. Supported starts: `r0 = 0` with any `mu >= 0`, or
/// `r0 > 0` with `mu = 0` (a positive start combined with drift would need
/// an angle-tilted initial direction to be the radial diffusion).
pub fn sample_bessel(
    dim: u32,
    r0: f64,
    mu: f64,
    n: usize,
    t_horizon: f64,
    rng: &mut Stream,
) -> Result<GridPath> {
    if dim != 3 && dim != 5 {
        return Err(Error::param(format!("bessel dimension must be 3 or 5, got {dim}")));
    }
    if mu < 0.0 || r0 < 0.0 {
        return Err(Error::param(format!("need r0 >= 0 and mu >= 0, got ({r0}, {mu})")));
    }
    if dim == 5 && mu != 0.0 {
        return Err(Error::param("drift is only supported for dimension 3"));
    }
    if r0 > 0.0 && mu > 0.0 {
        return Err(Error::param(
            "unsupported combination r0 > 0 with mu > 0 (radial law depends on the start direction)",
        ));
    }
    let dt = check_grid(n, t_horizon)?;
    let sd = dt.sqrt();
    let d = dim as usize;
    let mut coord = vec![0.0f64; d];
    coord[0] = r0;
    let mut values = Vec::with_capacity(n + 1);
    values.push(r0);
    for _ in 0..n {
        coord[0] += mu * dt + sd * std_normal(rng);
        for c in coord.iter_mut().skip(1) {
            *c += sd * std_normal(rng);
        }
        values.push(coord.iter().map(|c| c * c).sum::<f64>().sqrt());
    }
    let mut p = GridPath::new(0.0, dt, values)?;
    p.drift_tag = Some(mu);
    Ok(p)
}

/// Bessel(3) bridge from `x` to `y` over `[0, a]`, endpoints pinned exactly.
pub fn sample_bessel_bridge(a: f64, x: f64, y: f64, n: usize, rng: &mut Stream) -> Result<GridPath> {
    if !(a > 0.0) {
        return Err(Error::param(format!("bridge length must be positive, got {a}")));
    }
    if n < 2 {
        return Err(Error::param("bessel bridge needs n >= 2 steps"));
    }
    let dt = a / n as f64;
    let interior: Vec<f64> = (1..n).map(|i| i as f64 * dt).collect();
    let mid = bessel3_bridge_at(&interior, a, x, y, rng)?;
    let mut values = Vec::with_capacity(n + 1);
    values.push(x);
    values.extend(mid);
    values.push(y);
    GridPath::new(0.0, dt, values)
}

/// Marginal of a Bessel(3) bridge from `(0, y0)` to `(w, 0)` at time
/// `delta` in (0, w): the norm of a pinned 3-vector.
pub fn bessel3_bridge_marginal(y0: f64, w: f64, delta: f64, rng: &mut Stream) -> Result<f64> {
    if !(w > 0.0) || !(delta > 0.0) || delta >= w || y0 < 0.0 {
        return Err(Error::param(format!(
            "bridge marginal needs 0 < delta < w and y0 >= 0, got (y0 = {y0}, w = {w}, delta = {delta})"
        )));
    }
    let remaining = w - delta;
    let mean = y0 * remaining / w;
    let sd = (delta * remaining / w).sqrt();
    let a = mean + sd * std_normal(rng);
    let b = sd * std_normal(rng);
    let c = sd * std_normal(rng);
    Ok((a * a + b * b + c * c).sqrt())
}

/// First-passage bridge: Brownian path from 0 that first hits level `y > 0`
/// exactly at time `T`; below `y` on [0, T).
pub fn sample_fp_bridge(t_horizon: f64, y: f64, n: usize, rng: &mut Stream) -> Result<GridPath> {
    if !(y > 0.0) {
        return Err(Error::param(format!("passage level must be positive, got {y}")));
    }
    let bridge = sample_bessel_bridge(t_horizon, 0.0, y, n, rng)?;
    let values: Vec<f64> = bridge.values.iter().rev().map(|r| y - r).collect();
    GridPath::new(0.0, bridge.dt, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::chi_cdf;
    use crate::rng::RngStream;
    use crate::stats::{ks_one_sample, ks_two_sample};

    fn mean_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    #[test]
    fn bm_basics() {
        let mut rng = RngStream::new(31, 0).rng();
        assert!(sample_bm(0, 1.0, 0.0, &mut rng).is_err());
        assert!(sample_bm(8, -1.0, 0.0, &mut rng).is_err());
        let terminals: Vec<f64> = (0..100_000)
            .map(|_| {
                let p = sample_bm(16, 2.0, 0.0, &mut rng).unwrap();
                assert_eq!(p.values[0], 0.0);
                *p.values.last().unwrap()
            })
            .collect();
        let (m, se) = mean_se(&terminals);
        assert!(m.abs() < 3.0 * se, "mean {m} se {se}");
        let sq: Vec<f64> = terminals.iter().map(|x| x * x).collect();
        let (v, vse) = mean_se(&sq);
        assert!((v - 2.0).abs() < 3.0 * vse, "var {v} se {vse}");
    }

    #[test]
    fn bm_drift_mean() {
        let mut rng = RngStream::new(32, 0).rng();
        let terminals: Vec<f64> = (0..100_000)
            .map(|_| *sample_bm(16, 2.0, 1.5, &mut rng).unwrap().values.last().unwrap())
            .collect();
        let (m, se) = mean_se(&terminals);
        assert!((m - 3.0).abs() < 3.0 * se, "mean {m} se {se}");
    }

    #[test]
    fn bridge_endpoints_and_midpoint() {
        let mut rng = RngStream::new(33, 0).rng();
        let t = 2.0;
        let n = 16;
        let mut mids = Vec::with_capacity(100_000);
        for _ in 0..100_000 {
            let p = sample_bridge(n, t, 0.7, -0.3, &mut rng).unwrap();
            assert_eq!(p.values[0], 0.7);
            assert_eq!(*p.values.last().unwrap(), -0.3);
            mids.push(p.values[n / 2] - 0.5 * (0.7 - 0.3));
        }
        // midpoint variance T/4 within MC error
        let sq: Vec<f64> = mids.iter().map(|x| x * x).collect();
        let (v, vse) = mean_se(&sq);
        assert!((v - t / 4.0).abs() < 3.0 * vse, "var {v} se {vse}");
        // two-sample KS against N(0, T/4)
        let sd = (t / 4.0f64).sqrt();
        let mut normals: Vec<f64> =
            (0..100_000).map(|_| sd * std_normal(&mut rng)).collect();
        let rep = ks_two_sample("bridge_mid", &mut mids, &mut normals, 0.001).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn excursion_marginal() {
        let mut rng = RngStream::new(34, 0).rng();
        let mut mids = Vec::with_capacity(100_000);
        let mut sq = Vec::with_capacity(100_000);
        for _ in 0..100_000 {
            let e = sample_excursion(8, &mut rng).unwrap();
            assert_eq!(e.values[0], 0.0);
            assert_eq!(*e.values.last().unwrap(), 0.0);
            assert!(e.values[1..8].iter().all(|&v| v > 0.0));
            mids.push(e.values[4]);
            sq.push(e.values[4] * e.values[4]);
        }
        // e(1/2) = chi_3 / 2 in law
        let rep = ks_one_sample("exc_mid", &mut mids, |x| chi_cdf(3, 2.0 * x), 0.001).unwrap();
        assert!(rep.pass, "{rep:?}");
        let (m, se) = mean_se(&sq);
        assert!((m - 0.75).abs() < 3.0 * se, "mean {m} se {se}");
    }

    #[test]
    fn bessel_marginals() {
        let mut rng = RngStream::new(35, 0).rng();
        // BES^0(3) terminal at T = 1 is chi_3
        let mut term: Vec<f64> = (0..100_000)
            .map(|_| *sample_bessel(3, 0.0, 0.0, 8, 1.0, &mut rng).unwrap().values.last().unwrap())
            .collect();
        let rep = ks_one_sample("bes3_t1", &mut term, |x| chi_cdf(3, x), 0.001).unwrap();
        assert!(rep.pass, "{rep:?}");
        // BES^0(5): E R(1)^2 = 5
        let sq: Vec<f64> = (0..100_000)
            .map(|_| {
                let v = *sample_bessel(5, 0.0, 0.0, 8, 1.0, &mut rng).unwrap().values.last().unwrap();
                v * v
            })
            .collect();
        let (m, se) = mean_se(&sq);
        assert!((m - 5.0).abs() < 3.0 * se, "mean {m} se {se}");
        // initial condition
        let p = sample_bessel(3, 2.0, 0.0, 4, 0.01, &mut rng).unwrap();
        assert_eq!(p.values[0], 2.0);
        // unsupported combinations
        assert!(sample_bessel(5, 0.0, 1.0, 4, 1.0, &mut rng).is_err());
        assert!(sample_bessel(4, 0.0, 0.0, 4, 1.0, &mut rng).is_err());
        assert!(sample_bessel(3, 1.0, 1.0, 4, 1.0, &mut rng).is_err());
    }

    #[test]
    fn bessel_bridge_matches_excursion() {
        let mut rng = RngStream::new(36, 0).rng();
        let n = 8;
        let mut a: Vec<f64> = (0..60_000)
            .map(|_| sample_bessel_bridge(1.0, 0.0, 0.0, n, &mut rng).unwrap().values[n / 2])
            .collect();
        let mut b: Vec<f64> = (0..60_000)
            .map(|_| sample_excursion(n, &mut rng).unwrap().values[n / 2])
            .collect();
        let rep = ks_two_sample("bridge_vs_exc", &mut a, &mut b, 0.001).unwrap();
        assert!(rep.pass, "{rep:?}");
        // midpoint of a length-a zero-to-zero bridge is sqrt(a)/2 * chi_3
        let alen = 3.0;
        let mut mids: Vec<f64> = (0..60_000)
            .map(|_| sample_bessel_bridge(alen, 0.0, 0.0, n, &mut rng).unwrap().values[n / 2])
            .collect();
        let s = (alen / 4.0f64).sqrt();
        let rep = ks_one_sample("bridge_scale", &mut mids, |x| chi_cdf(3, x / s), 0.001).unwrap();
        assert!(rep.pass, "{rep:?}");
        // endpoints exact
        let p = sample_bessel_bridge(2.0, 0.5, 1.5, n, &mut rng).unwrap();
        assert_eq!(p.values[0], 0.5);
        assert_eq!(*p.values.last().unwrap(), 1.5);
    }

    #[test]
    fn bessel_bridge_positive_endpoints_marginal() {
        // Cross-check of the angle-tilted construction against the product
        // of Bessel(3) transition densities q_s(x, m) q_{a-s}(m, y).
        let (x, y, a) = (0.8f64, 1.3f64, 1.0f64);
        let n = 8;
        let mut rng = RngStream::new(37, 0).rng();
        let mut mids: Vec<f64> = (0..80_000)
            .map(|_| sample_bessel_bridge(a, x, y, n, &mut rng).unwrap().values[n / 2])
            .collect();
        let q = |t: f64, from: f64, to: f64| -> f64 {
            // BES(3) transition density for from > 0
            (to / from) * (crate::dist::phi((to - from) / t.sqrt())
                - crate::dist::phi((to + from) / t.sqrt()))
                / t.sqrt()
        };
        let s = 0.5 * a;
        let norm = crate::quad::integrate_to_inf(0.0, 64, 32, |m| q(s, x, m) * q(a - s, m, y));
        let cdf = |v: f64| -> f64 {
            if v <= 0.0 {
                return 0.0;
            }
            crate::quad::integrate_panels(0.0, v, 64, 8, |m| q(s, x, m) * q(a - s, m, y)) / norm
        };
        let rep = ks_one_sample("bridge_xy_mid", &mut mids, cdf, 0.001).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn fp_bridge_properties() {
        let mut rng = RngStream::new(38, 0).rng();
        let n = 16;
        for _ in 0..2000 {
            let p = sample_fp_bridge(1.0, 1.0, n, &mut rng).unwrap();
            assert_eq!(p.values[0], 0.0);
            assert_eq!(*p.values.last().unwrap(), 1.0);
            assert!(p.values[..n].iter().all(|&v| v < 1.0));
        }
        // value at T/2 matches 1 - (Bessel bridge 1 -> 0)(1/2) sampled directly
        let mut a: Vec<f64> = (0..60_000)
            .map(|_| sample_fp_bridge(1.0, 1.0, n, &mut rng).unwrap().values[n / 2])
            .collect();
        let mut b: Vec<f64> = (0..60_000)
            .map(|_| 1.0 - sample_bessel_bridge(1.0, 1.0, 0.0, n, &mut rng).unwrap().values[n / 2])
            .collect();
        let rep = ks_two_sample("fp_mid", &mut a, &mut b, 0.001).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn brownian_scaling_of_marginals() {
        // c * path(t / c^2) has the law of a path with horizon c^2 T.
        let mut rng = RngStream::new(39, 0).rng();
        let c = 1.7f64;
        let t = 1.3f64;
        let mut a: Vec<f64> = (0..50_000)
            .map(|_| c * *sample_bm(16, t, 0.0, &mut rng).unwrap().values.last().unwrap())
            .collect();
        let mut b: Vec<f64> = (0..50_000)
            .map(|_| *sample_bm(16, c * c * t, 0.0, &mut rng).unwrap().values.last().unwrap())
            .collect();
        let rep = ks_two_sample("scaling", &mut a, &mut b, 0.001).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn value_at_interpolates() {
        let p = GridPath::new(0.0, 0.5, vec![0.0, 1.0, 0.0]).unwrap();
        assert!((p.value_at(0.25).unwrap() - 0.5).abs() < 1e-15);
        assert!(p.value_at(1.5).is_err());
        let s = PathSamples::new(vec![0.0, 1.0, 4.0], vec![0.0, 2.0, 8.0]).unwrap();
        assert!((s.value_at(2.5).unwrap() - 5.0).abs() < 1e-12);
    }
}
