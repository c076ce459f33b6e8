//! Riesz-colored noise driving the fractional heat equation on a truncated
//! line: the variance ratio and increment exponent against `1 - β/α`.

use osgoodlab::analysis::verify_colored;
use osgoodlab::noise::RieszParams;

fn main() -> osgoodlab::Result<()> {
    let r = RieszParams::new(0.5, 1, 1.5)?;
    let (h, k) = r.implied_bifbm();
    println!("implied bifBm: H = {h}, K = {k:.4}, HK = {:.4}", r.exponent() / 2.0);

    let v = verify_colored(1.5, 0.5, 8.0, 128, 2000, 5)?;
    println!(
        "Var g(2)/Var g(1) = {:.4} ± {:.4} (target {:.4})",
        v.ratio, v.ratio_stderr, v.ratio_target
    );
    println!(
        "time increment slope = {:.3} ± {:.3} (target {:.3})",
        v.slope.slope, v.slope.stderr, v.slope_target
    );

    // β must stay below α; this is rejected before anything is built.
    println!("{}", RieszParams::new(1.6, 1, 1.5).unwrap_err());
    Ok(())
}
