//! Evaluate the whole family of approximate posteriors for the built-in
//! heteroscedastic Gaussian model on one grid and compare them pairwise.
//!
//! Run: `cargo run --release --example example1_posteriors`

use abc_gbi::grid::{distance, evaluate_on_grid, DistanceMetric, GridSpec};
use abc_gbi::{
    example1_analytic_field, make_example1_model, LossKind, LossSpec, ParameterBox, RngStream,
    WeightFunction,
};

fn main() -> abc_gbi::Result<()> {
    let model = make_example1_model();
    let field = example1_analytic_field(Default::default());
    let h = 0.2;
    let grid = GridSpec::vertices(ParameterBox::new(vec![0.0], vec![10.0])?, vec![1001])?;
    let seed = RngStream::from_seed(7);

    let losses: Vec<(&str, LossSpec)> = vec![
        (
            "ABC Monte Carlo (uniform)",
            LossSpec::new(LossKind::AbcMc)
                .with_weight(WeightFunction::uniform_onesided(h)?)
                .with_n_sim(20_000),
        ),
        (
            "closed form: uniform",
            LossSpec::new(LossKind::CfUniform).with_weight(WeightFunction::uniform_onesided(h)?),
        ),
        (
            "closed form: exponential",
            LossSpec::new(LossKind::CfExponential)
                .with_weight(WeightFunction::exponential_onesided(h)?),
        ),
        (
            "closed form: exp (const var)",
            LossSpec::new(LossKind::CfExponentialConstVar)
                .with_weight(WeightFunction::exponential_onesided(h)?),
        ),
        (
            "closed form: gaussian",
            LossSpec::new(LossKind::CfGaussian).with_weight(WeightFunction::gaussian(h, 0.0)?),
        ),
    ];

    let mut posteriors = Vec::new();
    println!("{:<30} {:>8} {:>8} {:>8}", "posterior", "mean", "sd", "mode");
    for (name, loss) in &losses {
        let posterior = evaluate_on_grid(&model, loss, Some(&field), &grid, seed)?.normalize()?;
        let s = posterior.summarize()?;
        println!(
            "{name:<30} {:>8.4} {:>8.4} {:>8.4}",
            s.mean[0], s.sd[0], s.mode.values()[0]
        );
        posteriors.push((*name, posterior));
    }

    println!("\npairwise total variation:");
    for i in 0..posteriors.len() {
        for j in (i + 1)..posteriors.len() {
            let tv = distance(&posteriors[i].1, &posteriors[j].1, DistanceMetric::TotalVariation)?;
            println!("  {:<30} vs {:<30} {tv:.4}", posteriors[i].0, posteriors[j].0);
        }
    }
    Ok(())
}
