use std::collections::BTreeMap;

use muench_core::algebra::{check_gl_laws, enumerate_frames, random_frame, Element, Frame, Sampling};
use muench_core::muench::{
    eval_single, eval_vector, eval_vector_enumerated, finite_level_boxbox, realize,
    reflexive_induction_check, soundness_suite, stabilize, transfinite_reflexive_induction_check,
    Mode, OracleUniverse,
};
use muench_core::ordinals::{Ordinal, OrdinalGrid};
use muench_core::syntax::parse_formula;
use proptest::prelude::*;

fn grid(s: &str) -> OrdinalGrid {
    OrdinalGrid::parse(s).unwrap()
}

/// `box(x)` read straight off the relation.
fn naive_box(f: &Frame, x: Element) -> Element {
    let mut bits = 0u16;
    for w in 0..f.worlds() {
        if (0..f.worlds()).all(|v| !f.sees(w, v) || x.contains(v)) {
            bits |= 1 << w;
        }
    }
    f.element(bits).unwrap()
}

fn frame(max: usize) -> impl Strategy<Value = Frame> {
    (any::<u64>(), 1..=max).prop_map(|(seed, n)| random_frame(seed, n).unwrap())
}

fn with_universe(max: usize) -> impl Strategy<Value = (Frame, OracleUniverse)> {
    frame(max).prop_flat_map(|f| {
        let size = f.algebra_size() as u16;
        let full = Just(OracleUniverse::full(&f));
        let picked = prop::collection::vec(0..size, 1..5).prop_map({
            let f = f.clone();
            move |bits| {
                let elems = bits.into_iter().map(|b| f.element(b).unwrap()).collect();
                OracleUniverse::new(&f, elems).unwrap()
            }
        });
        (Just(f), prop_oneof![1 => full, 3 => picked])
    })
}

#[test]
fn labelled_poset_counts() {
    let counts: Vec<usize> = (1..=4).map(|n| enumerate_frames(n).unwrap().len()).collect();
    assert_eq!(counts, vec![1, 3, 19, 219]);
}

#[test]
fn two_chain_tables() {
    let f = Frame::chain(2).unwrap();
    let p = eval_single(&f, &grid("0,1,2"), &OracleUniverse::full(&f)).unwrap();
    assert_eq!(p.table(0), &[1, 3, 1, 3]);
    assert_eq!(p.table(1), &[3, 3, 3, 3]);
    assert_eq!(p.table(2), &[3, 3, 3, 3]);
    assert_eq!(p.consistency(0).bits(), 0b10);
    assert_eq!(p.consistency(1).bits(), 0b00);
    assert_eq!(stabilize(&p), Some(Ordinal::one()));
}

#[test]
fn edgeless_frames_stabilize_at_zero() {
    let f = Frame::new(3, &[]).unwrap();
    let p = eval_single(&f, &grid("0,1,2"), &OracleUniverse::full(&f)).unwrap();
    assert!(p.table(0).iter().all(|&v| v == 0b111));
    assert_eq!(stabilize(&p), Some(Ordinal::zero()));
}

#[test]
fn chain_with_only_top_as_oracle() {
    let f = Frame::chain(3).unwrap();
    let u = OracleUniverse::new(&f, vec![f.top()]).unwrap();
    let p = eval_single(&f, &grid("0,1,2"), &u).unwrap();
    assert_eq!(p.apply(1, f.bottom()).bits(), 0b011);
    assert_eq!(p.apply(2, f.bottom()).bits(), 0b111);
}

#[test]
fn realized_lob_instance_is_top() {
    let f = Frame::chain(4).unwrap();
    let p = eval_vector(&f, &grid("0,1"), &OracleUniverse::full(&f), None).unwrap();
    let lob = parse_formula("[1]([1]p -> p) -> [1]p").unwrap();
    for bits in 0..16 {
        let v = BTreeMap::from([("p".to_string(), f.element(bits).unwrap())]);
        assert!(realize(&p, &lob, &v, None).unwrap().is_top());
    }
    let black = parse_formula("#p").unwrap();
    let v = BTreeMap::from([("p".to_string(), f.bottom())]);
    assert!(realize(&p, &black, &v, None).is_err());
    assert!(realize(&p, &black, &v, Some(&Ordinal::one())).is_ok());
}

proptest! {
    #[test]
    fn random_frames_are_gl(f in frame(8)) {
        prop_assert!(f.is_transitive());
        prop_assert!(f.is_irreflexive());
        let back = Frame::from_json(&serde_json::to_string(&f.to_file()).unwrap()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn box_matches_relation(f in frame(7), a in any::<u16>(), b in any::<u16>()) {
        let m = f.algebra_size() as u16;
        let x = f.element(a % m).unwrap();
        let y = f.element(b % m).unwrap();
        prop_assert_eq!(f.box_op(x), naive_box(&f, x));
        prop_assert_eq!(f.box_op(x & y), f.box_op(x) & f.box_op(y));
        prop_assert!(f.box_op(x & y).le(f.box_op(x)));
        prop_assert!(f.box_op(f.box_op(x).implies(x)).le(f.box_op(x)));
        prop_assert!(f.box_op(x).le(f.box_op(f.box_op(x))));
        prop_assert_eq!(f.diamond_op(x), !f.box_op(!x));
    }

    #[test]
    fn gl_laws_hold_on_random_frames(f in frame(6), seed in any::<u64>()) {
        let r = check_gl_laws(&f, Sampling::auto(&f, 500, seed));
        prop_assert!(r.holds(), "{:?}", r.violations);
    }

    #[test]
    fn level_zero_is_box((f, u) in with_universe(6), len in 1usize..4) {
        let g = grid("0,1,2,3");
        let s = eval_single(&f, &g, &u).unwrap();
        let v = eval_vector(&f, &g, &u, Some(len)).unwrap();
        for x in f.elements() {
            prop_assert_eq!(s.apply(0, x), f.box_op(x));
            prop_assert_eq!(v.apply(0, x), f.box_op(x));
        }
    }

    #[test]
    fn levels_grow((f, u) in with_universe(5)) {
        let g = grid("0,1,2,w");
        for p in [eval_single(&f, &g, &u).unwrap(), eval_vector(&f, &g, &u, None).unwrap()] {
            for z in 1..p.levels() {
                for x in f.elements() {
                    prop_assert!(p.apply(z - 1, x).le(p.apply(z, x)));
                }
            }
        }
    }

    #[test]
    fn length_one_vectors_are_single((f, u) in with_universe(5)) {
        let g = grid("0,1,2");
        let s = eval_single(&f, &g, &u).unwrap();
        let v = eval_vector(&f, &g, &u, Some(1)).unwrap();
        for z in 0..3 {
            prop_assert_eq!(s.table(z), v.table(z));
        }
    }

    #[test]
    fn meet_closure_matches_enumeration((f, u) in with_universe(3), len in 1usize..4) {
        let g = grid("0,1,2");
        let fast = eval_vector(&f, &g, &u, Some(len)).unwrap();
        let slow = eval_vector_enumerated(&f, &g, &u, len).unwrap();
        for z in 0..3 {
            prop_assert_eq!(fast.table(z), slow[z].as_slice());
        }
    }

    #[test]
    fn single_matches_boxbox((f, u) in with_universe(4)) {
        let p = eval_single(&f, &grid("0,1,2,3"), &u).unwrap();
        for n in 0..4 {
            prop_assert_eq!(finite_level_boxbox(&f, n, &u).unwrap(), p.table(n));
        }
    }

    #[test]
    fn saturated_vector_suite_passes((f, u) in with_universe(4)) {
        let p = eval_vector(&f, &grid("0,1,2,w"), &u, None).unwrap();
        prop_assert!(p.is_saturated());
        let r = soundness_suite(&p, Sampling::Exhaustive);
        prop_assert!(r.passed(), "{:?}", r.asserted_failures());
        prop_assert_eq!(r.mode, Mode::Vector);
    }

    #[test]
    fn single_definitional_laws_pass((f, u) in with_universe(4)) {
        let p = eval_single(&f, &grid("0,1,2"), &u).unwrap();
        let r = soundness_suite(&p, Sampling::Exhaustive);
        prop_assert!(r.passed(), "{:?}", r.asserted_failures());
    }

    #[test]
    fn induction_never_fails(f in frame(5), raw in prop::collection::vec(any::<u16>(), 4)) {
        let g = grid("0,1,2,3");
        let m = f.algebra_size() as u16;
        let phi: Vec<Element> = raw.iter().map(|b| f.element(b % m).unwrap()).collect();
        prop_assert!(reflexive_induction_check(&f, &g, &phi).unwrap().holds());
        prop_assert!(transfinite_reflexive_induction_check(&f, &g, &phi).unwrap().holds());
    }
}
