//! Trains a small critic to estimate the Wasserstein-1 distance between two
//! 1-D Gaussian samples and compares it with the exact sorted-sample value.
//!
//! `cargo run --release --example wasserstein_duality -- [steps]`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use wdtl::wdgrl::{empirical_wasserstein, fit_critic, w1_empirical_1d, Critic, DEFAULT_RHO};
use wdtl::Tensor;

fn main() -> wdtl::Result<()> {
    let steps: usize = std::env::args().nth(1).map_or(2000, |s| s.parse().expect("steps"));
    let n = 1024;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    println!("{:>5} {:>10} {:>10} {:>10}", "d", "critic", "sorted", "analytic");
    for d in [0.5, 1.0, 2.0] {
        let xs: Vec<f64> = (0..n).map(|_| unit.sample(&mut rng)).collect();
        let ys: Vec<f64> = (0..n).map(|_| d + unit.sample(&mut rng)).collect();
        // the critic sees the shifted sample as "source" so its estimate is positive
        let h_s = Tensor::<f64>::from_f64(vec![n, 1], &ys)?;
        let h_t = Tensor::<f64>::from_f64(vec![n, 1], &xs)?;
        let mut critic = Critic::<f64>::zeros(1, 128);
        critic.init(&mut rng);
        fit_critic(&mut critic, &h_s, &h_t, steps, 1e-3, DEFAULT_RHO, &mut rng)?;
        let estimate = empirical_wasserstein(&h_s, &h_t, &critic)?;
        let exact = w1_empirical_1d(&xs, &ys)?;
        println!("{d:>5} {estimate:>10.4} {exact:>10.4} {d:>10.4}");
    }
    Ok(())
}
