//! Trace distances along the hybrid chain for the identity adversary at t = 1,
//! and the per-sample coupling of the last two hybrids.

use qhrom_sim::experiments::adversary::{AdversaryKind, AdversarySpec};
use qhrom_sim::experiments::hybrids::{coupled_gap, distance_curve, CurveParams, MonteCarlo};

fn main() -> qhrom_sim::Result<()> {
    let cp = CurveParams { monte_carlo: MonteCarlo { samples: 2000, seed: 0 }, ..CurveParams::default() };
    for (i, j, grid) in [(1, 2, &[2usize, 4, 8][..]), (2, 3, &[4, 8][..]), (3, 4, &[2, 4][..])] {
        let c = distance_curve(i, j, grid, &cp)?;
        for p in &c.points {
            match p.td {
                Some(td) => println!("TD(H{i}, H{j}) N={:<2} {td:.6} ± {:.1e}", p.n, p.td_error),
                None => println!("TD(H{i}, H{j}) N={:<2} {}", p.n, p.status),
            }
        }
    }
    let adv = AdversarySpec::builtin(AdversaryKind::Random, 8, 1, 1, 0);
    let r = coupled_gap(8, &adv, 100, 0)?;
    println!("H6/H7 coupling at N=8: max Frobenius gap {:.2e}", r.max_frobenius_gap);
    Ok(())
}
