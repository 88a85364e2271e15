//! Log-sum-exp smoothing of a minimum and its gradient weights.
//!
//! ```bash
//! cargo run --example soft_min
//! ```

use stin::gpi::{lse_soft_min, softmin_weights};

fn main() -> stin::Result<()> {
    let rates = [2.4, 2.5, 3.1, 5.0];
    println!("min = {}", rates.iter().copied().fold(f64::INFINITY, f64::min));
    for mu in [1.0, 0.3, 0.1, 0.03, 0.01] {
        let w = softmin_weights(&rates, mu);
        println!(
            "mu {mu:<5} soft-min {:.5}  bound {:.5}  weights {:?}",
            lse_soft_min(&rates, mu)?,
            rates[0] + mu * (rates.len() as f64).ln(),
            w.iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>()
        );
    }
    Ok(())
}
