//! Hellinger distance between two point clouds and how binning affects it.
//!
//! cargo run --release --example hellinger_stability

use rand_distr::{Distribution, StandardNormal};
use sigreadout::metrics::{hellinger_2d, Bounds};
use sigreadout::rng;

fn cloud(seed: u64, n: usize, shift: f64) -> Vec<[f64; 2]> {
    let mut r = rng::stream(seed, 0);
    (0..n)
        .map(|_| {
            let a: f64 = StandardNormal.sample(&mut r);
            let b: f64 = StandardNormal.sample(&mut r);
            [a + shift, b]
        })
        .collect()
}

fn main() -> sigreadout::Result<()> {
    let exact = (1.0 - (-1.0f64 / 8.0).exp()).sqrt();
    println!("unit Gaussians one standard deviation apart: exact distance {exact:.4}");
    for n in [10_000, 100_000] {
        let p = cloud(1, n, 0.0);
        let q = cloud(2, n, 1.0);
        let bounds = Bounds::shared(&p, &q)?;
        let row: Vec<String> = [12, 25, 50, 100]
            .iter()
            .map(|&b| Ok(format!("{b} bins {:.4}", hellinger_2d(&p, &q, b, &bounds)?)))
            .collect::<sigreadout::Result<_>>()?;
        // fine grids over few samples overstate the distance
        println!("{n:>6} samples: {}", row.join(", "));
    }
    Ok(())
}
