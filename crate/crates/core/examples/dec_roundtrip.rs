//! Exhaustive dec/enc round trip at N = 4 over merged relations of total size ≤ 3.

use qhrom_sim::decoder::roundtrip_suite;
use qhrom_sim::relations::Dim;

fn main() -> qhrom_sim::Result<()> {
    let r = roundtrip_suite(Dim::new(4)?, 3)?;
    println!("inputs {} supported {} enc failures {}", r.inputs, r.supported, r.enc_failures);
    println!(
        "valid outputs {}: image {}, decode to bottom {}, decode elsewhere {}, failures {}",
        r.outputs, r.image, r.outside_to_bottom, r.outside_to_other, r.dec_failures
    );
    println!("pass {} ({:.2}s)", r.pass, r.seconds);
    Ok(())
}
