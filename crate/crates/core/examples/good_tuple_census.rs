//! Sampled good-tuple fraction at N = 64 against 1 − 22t²/N, and exhaustive
//! decodability of every good tuple at N = 4.

use qhrom_sim::decoder::soundness_suite;
use qhrom_sim::good_tuples::{census, CensusMode, RelQuad, RightZRule};
use qhrom_sim::relations::{Dim, Relation};

fn main() -> qhrom_sim::Result<()> {
    let one = |x: u8, y: u8| Relation::from_pairs([(x, y)]);
    let q = RelQuad::new(one(3, 9), one(12, 40), one(7, 7), one(50, 21))?;
    let mode = CensusMode::Sampled { seed: 0, samples: 100_000 };
    let r = census(Dim::new(64)?, &q, 1, mode, RightZRule::Mirrored)?;
    println!("good fraction {:.5} ± {:.5} (3σ), bound {:.5}, pass {}", r.fraction, r.three_sigma, r.bound, r.pass);

    for rule in [RightZRule::Mirrored, RightZRule::AsPrinted] {
        let s = soundness_suite(Dim::new(4)?, 1, rule)?;
        println!(
            "{rule:?}: {} good tuples over {} quadruples, {} undecodable, {} deletion mismatches",
            s.good_tuples, s.quads, s.undecodable, s.deletion_failures
        );
    }
    Ok(())
}
