//! Numerical integration used by density oracles and tests.
//!
//! Two workhorses: fixed-order Gauss-Legendre panels (fast, for smooth
//! integrands over boxes) and adaptive Simpson (the oracle of record when a
//! tolerance is stated). Semi-infinite integrals go through the rational map
//! u -> u/(1-u).

use std::sync::OnceLock;

/// Gauss-Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on the Legendre recurrence. Good to ~1e-15 for the
    /// orders used here.
    pub fn new(n: usize) -> Self {
        assert!(n >= 2);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        for i in 0..m {
            // Tricomi initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Integrate `f` over [a, b] with a single panel.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (b + a);
        let h = 0.5 * (b - a);
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(c + h * x);
        }
        acc * h
    }
}

/// Evaluate (P_n(x), P_n'(x)).
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared node tables for the orders the crate uses.
pub fn gl(n: usize) -> &'static GaussLegendre {
    static GL16: OnceLock<GaussLegendre> = OnceLock::new();
    static GL32: OnceLock<GaussLegendre> = OnceLock::new();
    static GL64: OnceLock<GaussLegendre> = OnceLock::new();
    static GL128: OnceLock<GaussLegendre> = OnceLock::new();
    match n {
        16 => GL16.get_or_init(|| GaussLegendre::new(16)),
        32 => GL32.get_or_init(|| GaussLegendre::new(32)),
        64 => GL64.get_or_init(|| GaussLegendre::new(64)),
        128 => GL128.get_or_init(|| GaussLegendre::new(128)),
        _ => panic!("uncached Gauss-Legendre order {n}"),
    }
}

/// Gauss-Legendre over [a, b] split into `panels` equal panels.
pub fn integrate_panels<F: FnMut(f64) -> f64>(
    a: f64,
    b: f64,
    order: usize,
    panels: usize,
    mut f: F,
) -> f64 {
    let rule = gl(order);
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for i in 0..panels {
        acc += rule.integrate(a + i as f64 * h, a + (i + 1) as f64 * h, &mut f);
    }
    acc
}

/// Explicit (node, weight) pairs for Gauss-Legendre panels over [a, b];
/// for integrands that are cheaper to evaluate in hoisted loops.
pub fn gl_nodes(a: f64, b: f64, order: usize, panels: usize) -> Vec<(f64, f64)> {
    let rule = gl(order);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(order * panels);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let c = lo + 0.5 * h;
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            out.push((c + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

/// Nodes for an integral over [a, inf) through t = a + u/(1-u).
pub fn gl_nodes_to_inf(a: f64, order: usize, panels: usize) -> Vec<(f64, f64)> {
    gl_nodes(0.0, 1.0, order, panels)
        .into_iter()
        .map(|(u, w)| {
            let om = 1.0 - u;
            (a + u / om, w / (om * om))
        })
        .collect()
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(a: f64, b: f64, tol: f64, f: &mut F) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    simpson_rec(a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol, f, 50)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: FnMut(f64) -> f64>(
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    f: &mut F,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_rec(a, m, fa, flm, fm, left, tol / 2.0, f, depth - 1)
            + simpson_rec(m, b, fm, frm, fb, right, tol / 2.0, f, depth - 1)
    }
}

/// Integral of `f` over [a, +inf) via the substitution t = a + u/(1-u).
pub fn integrate_to_inf<F: FnMut(f64) -> f64>(a: f64, order: usize, panels: usize, mut f: F) -> f64 {
    integrate_panels(0.0, 1.0, order, panels, |u| {
        let one_minus = 1.0 - u;
        if one_minus <= 0.0 {
            return 0.0;
        }
        let t = a + u / one_minus;
        f(t) / (one_minus * one_minus)
    })
}

/// Adaptive Simpson over [a, +inf) through the same rational map.
pub fn adaptive_to_inf<F: FnMut(f64) -> f64>(a: f64, tol: f64, f: &mut F) -> f64 {
    adaptive_simpson(0.0, 1.0 - 1e-12, tol, &mut |u: f64| {
        let one_minus = 1.0 - u;
        let t = a + u / one_minus;
        let v = f(t);
        if v == 0.0 {
            0.0
        } else {
            v / (one_minus * one_minus)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_exact_for_polynomials() {
        // GL-16 integrates x^k exactly for k <= 31.
        let v = gl(16).integrate(0.0, 1.0, |x| x.powi(21));
        assert!((v - 1.0 / 22.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_simpson_gaussian() {
        let v = adaptive_simpson(-8.0, 8.0, 1e-12, &mut |x: f64| {
            (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
        });
        assert!((v - 1.0).abs() < 1e-10, "got {v}");
    }

    #[test]
    fn semi_infinite_exponential() {
        let v = integrate_to_inf(0.0, 64, 8, |t| (-t).exp());
        assert!((v - 1.0).abs() < 1e-12, "got {v}");
        let w = adaptive_to_inf(1.0, 1e-12, &mut |t: f64| (-t).exp());
        assert!((w - (-1.0f64).exp()).abs() < 1e-10, "got {w}");
    }
}
