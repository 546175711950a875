//! Randomized cross-module properties at sizes beyond the exhaustive suites.

use proptest::prelude::*;

use qhrom_sim::decoder::{dec, enc, robust_probe};
use qhrom_sim::good_tuples::{is_good, GoodTuple, RelQuad};
use qhrom_sim::relations::{KeyTriple, Relation};

const N: u8 = 16;

fn relation(max: usize) -> impl Strategy<Value = Relation> {
    prop::collection::vec((0..N, 0..N), 0..=max).prop_map(Relation::from_pairs)
}

fn keys() -> impl Strategy<Value = KeyTriple> {
    (0..N, 0..N, 0..N).prop_map(|(a, b, c)| KeyTriple::new(a, b, c))
}

fn distinct(len: usize) -> impl Strategy<Value = Vec<u8>> {
    Just((0..N).collect::<Vec<u8>>()).prop_shuffle().prop_map(move |v| v[..len].to_vec())
}

proptest! {
    #[test]
    fn enc_inverts_dec_on_its_support(l in relation(4), r in relation(4), k in keys()) {
        if let Some(d) = dec(&l, &r, k) {
            prop_assert_eq!(enc(&d).unwrap(), (l, r, k));
        }
    }

    #[test]
    fn good_tuples_are_robustly_decodable(
        l1 in relation(2), l2 in relation(2), r1 in relation(2), r2 in relation(2),
        k in keys(), zl in distinct(2), zr in distinct(2),
    ) {
        let Ok(q) = RelQuad::new(l1, l2, r1, r2) else { return Ok(()) };
        let t = GoodTuple::new(k, &zl[..q.l2.len()], &zr[..q.r2.len()]);
        if is_good(&q, &t).unwrap() {
            let report = robust_probe(&q, &t).unwrap();
            prop_assert!(report.robust(), "{:?}", report);
        }
    }
}
