//! The weight-function families and how a discrepancy transformation maps
//! one family into another: an Exponential weight on `log Delta` is the
//! power-law weight on `Delta`, a Gaussian weight on `log Delta` is the
//! log-Gaussian error model.
//!
//! Run: `cargo run --example weight_transforms`

use abc_gbi::weights::{eval_log_weight, log_weight_normalizer, transform_weight, WeightMass};
use abc_gbi::{MonotoneMap, WeightFunction};

fn main() -> abc_gbi::Result<()> {
    let h = 0.5;
    let families = vec![
        WeightFunction::uniform_symmetric(h)?,
        WeightFunction::uniform_onesided(h)?,
        WeightFunction::exponential_symmetric(h)?,
        WeightFunction::exponential_onesided(h)?,
        WeightFunction::gaussian(h, 0.0)?,
        WeightFunction::power_law(h)?,
        WeightFunction::log_gaussian(h, 0.0)?,
    ];
    println!("{:<22} {:>9} {:>9} {:>9}   normalizer", "family (h = 0.5)", "K(0.1)", "K(0.5)", "K(2.0)");
    for w in &families {
        let mut row = format!("{:<22}", w.family_name());
        for r in [0.1, 0.5, 2.0] {
            let value = eval_log_weight(w, r)?.exp();
            row.push_str(&format!(" {value:>9.4}"));
        }
        let mass = match log_weight_normalizer(w) {
            WeightMass::Log(v) => format!("log mass {v:.1}"),
            WeightMass::NonIntegrable => "non-integrable".into(),
            WeightMass::Unknown => "unknown".into(),
        };
        println!("{row}   {mass}");
    }

    println!("\nlog-scale correspondences (weights placed on log Delta):");
    let exp_on_log = transform_weight(&WeightFunction::exponential_onesided(h)?, &MonotoneMap::log());
    let power = WeightFunction::power_law(h)?;
    let gauss_on_log = transform_weight(&WeightFunction::gaussian(h, 0.0)?, &MonotoneMap::log());
    let log_gauss = WeightFunction::log_gaussian(h, 0.0)?;
    println!("{:>6} {:>14} {:>14} {:>14} {:>14}", "r", "exp(log D)", "power-law", "gauss(log D)", "log-gaussian");
    for r in [0.2, 0.5, 1.0, 2.0, 5.0] {
        println!(
            "{r:>6.1} {:>14.6} {:>14.6} {:>14.6} {:>14.6}",
            eval_log_weight(&exp_on_log, r)?,
            eval_log_weight(&power, r)?,
            eval_log_weight(&gauss_on_log, r)?,
            eval_log_weight(&log_gauss, r)?,
        );
    }
    println!("(each pair differs by a constant in r, so the posteriors coincide)");
    Ok(())
}
