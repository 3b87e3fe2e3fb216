use hexiso::boundary_norm::beta_estimate;
use hexiso::cheeger::{bn_box, cheeger_anneal, AnnealSchedule};
use hexiso::fpp::mu_estimate;
use hexiso::lattice::Vec2;
use hexiso::percolation::Configuration;
use std::f64::consts::PI;
use std::time::Instant;
fn main() {
    let t = Instant::now();
    let m = mu_estimate(0.7, Vec2::new(1.0, 0.0), 256, 60, 51).unwrap();
    let b = beta_estimate(0.7, Vec2::new(1.0, 0.0), 256, 60, 51).unwrap();
    let comb = (m.stderr.powi(2) + b.sample.stderr.powi(2)).sqrt();
    println!("[{:.1?}] mu={:.5}±{:.5} mid={:.5}±{:.5} lower={:.5} upper={:.5} width={:.5}", t.elapsed(),
        m.mean, m.stderr, b.sample.mean, b.sample.stderr, b.lower_mean, b.upper_mean, b.width_mean);
    println!("diff={:.5} 3se={:.5} 3se+w/2={:.5} mu-2/n={:.5} resamples={}", (m.mean - b.sample.mean).abs(), 3.0 * comb, 3.0 * comb + b.width_mean / 2.0, m.mean - 2.0 / 256.0, b.resamples);
    let n = 96u32;
    let t = Instant::now();
    let c = Configuration::sample(bn_box(n).bounding_rect(2.0), 1.0, 5).unwrap();
    let r = cheeger_anneal(&c, n, &AnnealSchedule::default(), 5).unwrap();
    println!("cheeger n=96 [{:.1?}] value*n={:.4} gate=({:.3},{:.3})", t.elapsed(), r.value() * n as f64,
        0.85 * 2.0 * PI.sqrt() / 2f64.sqrt(), 1.25 * 2.0 * PI.sqrt() / 2f64.sqrt());
}
