use cmlab::dist::chi_cdf;
use cmlab::poisson::straddle_time_one;
use cmlab::rng::RngStream;
use cmlab::stats::ks_one_sample;
use cmlab::quad::integrate_panels;

fn main() {
    let n = 100_000;
    let mut rng = RngStream::new(3, 7).rng();
    let mut z = Vec::with_capacity(n);
    let mut slope = Vec::with_capacity(n);
    for _ in 0..n {
        let s = straddle_time_one(&mut rng).unwrap();
        z.push(s.state.k + s.state.y);
        slope.push(s.state.a);
    }
    let kz = ks_one_sample("z", &mut z, |x| chi_cdf(5, x), 0.001).unwrap();
    println!("exact z vs chi5: D={:.5} p={:.5} crit={:.5}", kz.statistic, kz.p_value_or_distance, 1.95/(n as f64).sqrt());
    // K'(1) marginal CDF by quadrature of f3
    let cdf = |a: f64| -> f64 {
        integrate_panels(0.0, a.min(12.0), 64, 4, |aa| {
            integrate_panels(0.0, 14.0, 64, 4, |bb| {
                integrate_panels(0.0, 14.0 - bb, 32, 2, |yy| cmlab::dist::f3_density(aa, bb, yy))
            })
        })
    };
    let ks = ks_one_sample("slope", &mut slope, cdf, 0.001).unwrap();
    println!("exact slope vs f3-marginal: D={:.5} p={:.5}", ks.statistic, ks.p_value_or_distance);
}
