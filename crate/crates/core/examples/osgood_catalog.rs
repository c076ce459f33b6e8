//! Classify the built-in drifts by whether `∫_a^∞ ds / b(s)` is finite.
//!
//! ```text
//! cargo run --example osgood_catalog
//! ```

use osgoodlab::drift::{osgood_integral, DriftSpec, OsgoodOptions};

fn main() -> osgoodlab::Result<()> {
    let catalog = [
        DriftSpec::power(1.0),
        DriftSpec::power(0.5),
        DriftSpec::linear(1.0),
        DriftSpec::linear_log(),
        DriftSpec::log_power(2.0),
        DriftSpec::exponential(),
        DriftSpec::constant(1.0),
    ];
    let opts = OsgoodOptions::default();
    println!("{:<16} {:<14} {:>22}", "drift", "class", "integral from 1");
    for d in &catalog {
        let r = osgood_integral(d, 1.0, &opts)?;
        let value = r.integral_value.map_or("-".to_string(), |v| format!("{v:.12}"));
        println!("{:<16} {:<14} {:>22}", d.id(), r.classification, value);
    }

    // Truncations are Lipschitz, so they never satisfy the condition.
    let t = DriftSpec::power(1.0).truncate(1e4)?;
    println!("{} at 1e6 = {}", t.id(), t.eval(1e6)?);
    Ok(())
}
