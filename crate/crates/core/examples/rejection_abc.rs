//! Plain rejection ABC on the heteroscedastic Gaussian model, checked
//! against the grid-evaluated ABC posterior.
//!
//! Run: `cargo run --release --example rejection_abc`

use abc_gbi::grid::{distance, evaluate_on_grid, histogram_grid, DistanceMetric, GridSpec};
use abc_gbi::samplers::rejection_abc;
use abc_gbi::{make_example1_model, LossKind, LossSpec, ParameterBox, RngStream, WeightFunction};

fn main() -> abc_gbi::Result<()> {
    let model = make_example1_model();
    let h = 0.2;
    let weight = WeightFunction::uniform_onesided(h)?;
    let chain = rejection_abc(&model, &weight, 500_000, RngStream::from_seed(11))?;
    println!(
        "accepted {} of {} prior draws (rate {:.4})",
        chain.draws.len(),
        chain.stats.proposed,
        chain.acceptance_rate
    );

    let cells = GridSpec::cells(ParameterBox::new(vec![0.0], vec![10.0])?, vec![150])?;
    let hist = histogram_grid(&chain.draws, &cells)?;
    let summary = hist.summarize()?;
    println!(
        "posterior mean {:.4}, sd {:.4}, mode {:.4}",
        summary.mean[0],
        summary.sd[0],
        summary.mode.values()[0]
    );

    let loss = LossSpec::new(LossKind::AbcMc)
        .with_weight(weight)
        .with_n_sim(20_000);
    let grid = evaluate_on_grid(&model, &loss, None, &cells, RngStream::from_seed(0))?.normalize()?;
    let tv = distance(&hist, &grid, DistanceMetric::TotalVariation)?;
    println!("total variation against the grid ABC posterior: {tv:.4}");
    Ok(())
}
