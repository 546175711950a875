//! Checks the explicit-constant oracle bounds on a small grid.

use qhrom_sim::oracles::bounds::{catalog, verify_bound};
use qhrom_sim::state::norm::NormOptions;

fn main() -> qhrom_sim::Result<()> {
    let opts = NormOptions::default();
    for spec in catalog(&[4, 8, 16], &[1, 2]) {
        let r = verify_bound(&spec, &opts)?;
        println!(
            "{:<18} N={:<3} t={} measured={:.6} {} {:.6} {} ({} columns, {:.1}s)",
            r.id,
            r.n,
            r.t,
            r.measured,
            r.relation,
            r.bound,
            if r.pass { "PASS" } else { "FAIL" },
            r.columns,
            r.seconds
        );
    }
    Ok(())
}
