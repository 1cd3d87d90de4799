//! Match the Exponential kernel to the uniform kernel by minimizing their
//! L1 distance, and translate bandwidths back and forth.
//!
//! Run: `cargo run --example kernel_matching`

use abc_gbi::calibration::{g_epsilon, implied_abc_epsilon, match_exponential_to_uniform};

fn main() -> abc_gbi::Result<()> {
    let result = match_exponential_to_uniform(1.0)?;
    println!("optimal ratio a = h/epsilon : {:.9}", result.ratio_a);
    println!("L1 distance at the optimum  : {:.9}", result.objective_value);
    println!("bisection iterations        : {}", result.iterations);

    println!("\nobjective g_eps(h) at eps = 1:");
    for h in [0.2, 0.4, 0.5, result.ratio_a, 0.7, 0.85, 1.0] {
        println!("  h = {h:<9.6} g = {:.6}", g_epsilon(h, 1.0));
    }

    println!("\nbandwidth translations:");
    for epsilon in [0.5, 1.0, 2.0] {
        let m = match_exponential_to_uniform(epsilon)?;
        println!(
            "  uniform eps = {epsilon:<4} -> exponential h = {:.4} (and back: eps = {:.4})",
            m.h,
            implied_abc_epsilon(m.h, 0.0)?
        );
    }
    Ok(())
}
