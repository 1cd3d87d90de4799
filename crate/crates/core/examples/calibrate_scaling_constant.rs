//! Translate a uniform-kernel ABC threshold into the scaling constant `w`
//! of the expected-discrepancy generalized posterior, using the reported
//! discrepancy moments of a day-care transmission study (m* = 1.1,
//! sd* = 0.11, ABC threshold 1.0).
//!
//! Run: `cargo run --example calibrate_scaling_constant`

use abc_gbi::calibration::{calibrate_w, Delta0Rule, MomentSource};
use abc_gbi::{ParameterPoint, RngStream};

fn main() -> abc_gbi::Result<()> {
    let moments = || MomentSource::Direct {
        m_star: 1.1,
        sd_star: 0.11,
    };
    let theta = ParameterPoint::scalar(0.0);
    let rule = Delta0Rule::default();
    let seed = RngStream::from_seed(0);

    let report = calibrate_w(moments(), 1.0, &theta, rule, seed)?;
    println!("threshold eps = 1.0 (the study's ABC baseline):");
    println!("  delta0   = {:.4}", report.delta0);
    println!("  eps - d0 = {:.4}", report.epsilon_std);
    println!("  h        = {:.4}", report.h);
    println!("  w = 1/h  = {:.2}", report.w);

    println!("\nalternative threshold rules:");
    for (label, epsilon) in [
        ("eps = m* (surrogate-ABC default)", 1.1),
        ("eps = m* - sd* (conservative)", 1.1 - 0.11),
    ] {
        let r = calibrate_w(moments(), epsilon, &theta, rule, seed)?;
        println!(
            "  {label:<34} w = {:>6.2}   (w * sd* = {:.3})",
            r.w,
            r.w * 0.11
        );
    }
    Ok(())
}
