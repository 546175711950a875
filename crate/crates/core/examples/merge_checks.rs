//! Partial-isometry witnesses, the closed-form equivalence of the merge map,
//! and the decay of its commuting norms.

use std::time::Duration;

use qhrom_sim::merge_checks::{
    commuting_trend, partial_isometry_witness, s_equivalence_exhaustive, CommutingPair, Witness,
};
use qhrom_sim::relations::Dim;
use qhrom_sim::state::norm::NormOptions;

fn main() -> qhrom_sim::Result<()> {
    let opts = NormOptions { max_time: Duration::from_secs(120), ..NormOptions::default() };
    for w in Witness::ALL {
        let r = partial_isometry_witness(w, Dim::new(8)?, 1, &opts)?;
        println!("{:<12} residual={:.2e} columns={} reps={} {:.1}s", r.witness, r.residual, r.columns, r.representatives, r.seconds);
    }
    let eq = s_equivalence_exhaustive(Dim::new(4)?, 1)?;
    println!("S equivalence N=4: {} inputs, max discrepancy {:.2e}, {:.1}s", eq.inputs, eq.max_discrepancy, eq.seconds);
    for pair in CommutingPair::ALL {
        let r = commuting_trend(pair, &[4, 8, 16], 1, &opts)?;
        for p in &r.points {
            println!("{:<22} N={:<3} {:?} {} {:.1}s", r.id, p.n, p.measured, p.status, p.seconds);
        }
        println!("{:<22} monotone={} slope={:?} pass={}", r.id, r.monotone, r.slope, r.pass);
    }
    Ok(())
}
