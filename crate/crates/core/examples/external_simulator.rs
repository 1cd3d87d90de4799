//! Drive a simulator written in another language over the one-line JSON
//! subprocess protocol: the child reads `{"theta": [...], "seed": n}` and
//! prints `{"data": [...]}`.
//!
//! Run: `cargo run --example external_simulator` (needs python3 on PATH)

use std::time::Duration;

use abc_gbi::cli::{external_model, named_discrepancy, ExternalProtocol, ExternalSimulator};
use abc_gbi::samplers::rejection_abc;
use abc_gbi::{Dataset, ParameterBox, ParameterPoint, RngStream, WeightFunction};

const SIMULATOR: &str = r#"
import sys, json, random
req = json.loads(sys.stdin.readline())
rng = random.Random(req["seed"])
theta = req["theta"][0]
print(json.dumps({"data": [theta + rng.gauss(0, 0.3)]}))
"#;

fn main() -> abc_gbi::Result<()> {
    let simulator = ExternalSimulator::new(
        vec!["python3".into(), "-c".into(), SIMULATOR.into()],
        ExternalProtocol::Stdin,
        Duration::from_secs(30),
    )?;

    // one call, by hand
    let reply = simulator.run(&ParameterPoint::scalar(2.0), 42)?;
    println!("simulate(theta = 2.0, seed = 42) -> {:?}", reply.values());
    let again = simulator.run(&ParameterPoint::scalar(2.0), 42)?;
    println!("same seed again                  -> {:?}", again.values());

    // wrapped as a model and pushed through rejection ABC
    let (model, _error_slot) = external_model(
        simulator,
        Dataset::scalar(2.0),
        ParameterBox::new(vec![0.0], vec![5.0])?,
        named_discrepancy("abs")?,
    );
    let chain = rejection_abc(
        &model,
        &WeightFunction::uniform_onesided(0.3)?,
        2_000,
        RngStream::from_seed(1),
    )?;
    let mean =
        chain.draws.iter().map(|p| p.values()[0]).sum::<f64>() / chain.draws.len() as f64;
    println!(
        "rejection ABC through the subprocess: {} accepted, posterior mean {mean:.3}",
        chain.draws.len()
    );
    Ok(())
}
