//! Truncated signatures of small paths: levels, Levy area, Chen's identity.
//!
//! cargo run --example signature_basics

use sigreadout::signature::{sig_dim, signature, Path};

fn main() -> sigreadout::Result<()> {
    // right then up, against up then right
    let l_shape = Path::from_points(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]])?;
    let flipped = Path::from_points(vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]])?;
    let a = signature(&l_shape, 3);
    let b = signature(&flipped, 3);

    println!("features for a 2-d path to depth 3: {}", sig_dim(2, 3));
    println!("level 1 of both paths: {:?} {:?}", a.level(1), b.level(1));
    println!("level 2, right-then-up: {:?}", a.level(2));
    println!("level 2, up-then-right: {:?}", b.level(2));
    println!(
        "Levy areas: {:+.3} and {:+.3}",
        a.levy_area(0, 1)?,
        b.levy_area(0, 1)?
    );

    // the signature of a path followed by another is the tensor product
    let there_and_back = a.concat(&signature(&l_shape.reversed(), 3))?;
    let largest = there_and_back
        .coeffs()
        .iter()
        .fold(0.0f64, |m, c| m.max(c.abs()));
    println!("largest coefficient of a path followed by its reversal: {largest:.1e}");

    // with a time channel the features also see when things happened
    let with_time = Path::from_points(vec![
        vec![0.0, 0.0, 0.0],
        vec![1.0, 0.0, 0.5],
        vec![1.0, 1.0, 1.0],
    ])?;
    let s = signature(&with_time, 5);
    println!(
        "time-augmented depth-5 signature has {} coefficients",
        s.coeffs().len()
    );
    Ok(())
}
