//! The O₁†, O₂, O₁† script recovers x ⊕ k from O₂ = U X^k U and falls to
//! chance against the full construction.

use qhrom_sim::experiments::attack::{attack_insecure_variant, AttackParams};

fn main() -> qhrom_sim::Result<()> {
    for n in [4, 8, 16] {
        let r = attack_insecure_variant(&AttackParams { n, trials: 1000, seed: 0, key_bits: None })?;
        println!(
            "N={n:<2} insecure {:.3}  full {:.3} (chance {:.4}, 3σ {:.4})  pass {}",
            r.insecure_success,
            r.full_success,
            r.chance,
            3.0 * r.sigma,
            r.pass
        );
    }
    Ok(())
}
