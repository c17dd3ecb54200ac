//! The three classifiers on synthetic data where their differences show.
//!
//! cargo run --release --example classifiers

use rand_distr::{Distribution, StandardNormal};
use sigreadout::classify::{
    accuracy, gmm_fit, gmm_predict, lda_fit, lda_predict, rf_fit, rf_predict, CovarianceMode,
    ForestHyperparams,
};
use sigreadout::features::FeatureMatrix;
use sigreadout::rng;
use sigreadout::traces::Label;

fn blobs(
    seed: u64,
    centers: &[(f64, f64, Label)],
    n: usize,
    sigma: f64,
) -> (FeatureMatrix, Vec<Label>) {
    let mut r = rng::stream(seed, 0);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for &(cx, cy, l) in centers {
        for _ in 0..n {
            let a: f64 = StandardNormal.sample(&mut r);
            let b: f64 = StandardNormal.sample(&mut r);
            rows.push([cx + sigma * a, cy + sigma * b]);
            y.push(l);
        }
    }
    (FeatureMatrix::from_rows(&rows).expect("rows"), y)
}

fn main() -> sigreadout::Result<()> {
    let hp = ForestHyperparams::default();

    let gauss = [(-1.0, 0.0, 0), (1.0, 0.0, 1), (0.0, 1.5, 2)];
    let (x, y) = blobs(1, &gauss, 400, 0.5);
    let (xt, yt) = blobs(2, &gauss, 400, 0.5);
    println!("three Gaussian blobs");
    println!(
        "  GMM {:.3}",
        accuracy(
            &gmm_predict(&gmm_fit(&x, &y, CovarianceMode::Spherical)?, &xt)?,
            &yt
        )
    );
    println!(
        "  LDA {:.3}",
        accuracy(&lda_predict(&lda_fit(&x, &y)?, &xt)?, &yt)
    );
    println!(
        "  RF  {:.3}",
        accuracy(&rf_predict(&rf_fit(&x, &y, &hp, 7)?, &xt)?.0, &yt)
    );

    // no linear boundary separates XOR
    let xor = [
        (1.0, 1.0, 0),
        (-1.0, -1.0, 0),
        (1.0, -1.0, 1),
        (-1.0, 1.0, 1),
    ];
    let (x, y) = blobs(3, &xor, 250, 0.35);
    let (xt, yt) = blobs(4, &xor, 250, 0.35);
    println!("XOR");
    println!(
        "  LDA {:.3}",
        accuracy(&lda_predict(&lda_fit(&x, &y)?, &xt)?, &yt)
    );
    let forest = rf_fit(&x, &y, &hp, 7)?;
    let (pred, probs) = rf_predict(&forest, &xt)?;
    println!(
        "  RF  {:.3} (first row class probabilities {:?})",
        accuracy(&pred, &yt),
        probs.row(0)
    );
    Ok(())
}
