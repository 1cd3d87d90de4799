//! The surrogate-era rule for the loss scaling denominator:
//! `delta = max(min_theta E(Delta_theta), min_i Delta^(i))`, plus the
//! uniform-kernel threshold it implicitly corresponds to.
//!
//! Run: `cargo run --example delta_selection`

use abc_gbi::calibration::{implied_abc_epsilon, minimize_field_mean, select_delta_thomas};
use abc_gbi::{example1_analytic_field, make_example1_model, ParameterBox, RngStream};

fn main() -> abc_gbi::Result<()> {
    let model = make_example1_model();
    let field = example1_analytic_field(Default::default());
    let bounds = ParameterBox::new(vec![0.0], vec![10.0])?;

    let (arg_min, min_mean) = minimize_field_mean(&field, &bounds, 2001)?;
    println!(
        "min_theta E(Delta) = {min_mean:.4} at theta = {:.4}",
        arg_min.values()[0]
    );

    // discrepancies recorded while "running the algorithm": prior draws
    let mut rng = RngStream::from_seed(5).rng();
    let mut recorded = Vec::new();
    for _ in 0..200 {
        let theta = model.sample_prior(&mut rng);
        recorded.push(model.draw_discrepancy(&theta, &mut rng)?);
    }
    let min_recorded = recorded.iter().copied().fold(f64::INFINITY, f64::min);
    println!("min recorded discrepancy over 200 queries = {min_recorded:.4}");

    let delta = select_delta_thomas(&field, &bounds, 2001, &recorded)?;
    println!("selected delta = {delta:.4}  (w = 1/delta = {:.2})", 1.0 / delta);
    println!(
        "implied uniform-ABC threshold: eps = {:.4} (with Delta0 = 0) / {:.4} (Delta0 = 0.1)",
        implied_abc_epsilon(delta, 0.0)?,
        implied_abc_epsilon(delta, 0.1)?
    );
    Ok(())
}
