use std::collections::BTreeMap;

use muench_core::ordinals::Ordinal;
use muench_core::proofkit::is_tautology;
use muench_core::syntax::{abstract_atoms, parse_formula, print_formula, Formula, ModalLabel};
use proptest::prelude::*;

fn label() -> impl Strategy<Value = ModalLabel> {
    prop_oneof![
        4 => (0u64..3).prop_map(|n| ModalLabel::Ord(Ordinal::finite(n))),
        1 => Just(ModalLabel::Ord(Ordinal::omega())),
        1 => Just(ModalLabel::BlackSquare),
    ]
}

fn formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        prop::sample::select(vec!["p", "q", "r"]).prop_map(Formula::atom),
        Just(Formula::Top),
        Just(Formula::Bot),
    ];
    leaf.prop_recursive(6, 48, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::imp(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::iff(a, b)),
            (label(), inner.clone()).prop_map(|(l, a)| Formula::boxed(l, a)),
            (label(), inner).prop_map(|(l, a)| Formula::diamond(l, a)),
        ]
    })
}

fn substitute(f: &Formula, table: &BTreeMap<String, Formula>) -> Formula {
    let rec = |g: &Formula| Box::new(substitute(g, table));
    match f {
        Formula::Atom(a) => table.get(a).cloned().unwrap_or_else(|| f.clone()),
        Formula::Top | Formula::Bot => f.clone(),
        Formula::Not(a) => Formula::Not(rec(a)),
        Formula::And(a, b) => Formula::And(rec(a), rec(b)),
        Formula::Or(a, b) => Formula::Or(rec(a), rec(b)),
        Formula::Imp(a, b) => Formula::Imp(rec(a), rec(b)),
        Formula::Iff(a, b) => Formula::Iff(rec(a), rec(b)),
        Formula::Box(l, a) => Formula::Box(l.clone(), rec(a)),
    }
}

fn has_box(f: &Formula) -> bool {
    let mut seen = false;
    f.for_each_label(&mut |_| seen = true);
    seen
}

fn eval(f: &Formula, v: &BTreeMap<String, bool>) -> bool {
    match f {
        Formula::Atom(a) => v[a],
        Formula::Top => true,
        Formula::Bot => false,
        Formula::Not(a) => !eval(a, v),
        Formula::And(a, b) => eval(a, v) && eval(b, v),
        Formula::Or(a, b) => eval(a, v) || eval(b, v),
        Formula::Imp(a, b) => !eval(a, v) || eval(b, v),
        Formula::Iff(a, b) => eval(a, v) == eval(b, v),
        Formula::Box(..) => unreachable!("skeletons are box-free"),
    }
}

/// Truth-table check by plain recursion over every assignment.
fn naive_tautology(f: &Formula) -> bool {
    let skel = abstract_atoms(f).skeleton;
    let atoms: Vec<String> = skel.atoms().into_iter().collect();
    (0u32..1 << atoms.len()).all(|bits| {
        let v = atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), bits >> i & 1 == 1))
            .collect();
        eval(&skel, &v)
    })
}

#[test]
fn fixed_parses() {
    let f = parse_formula("[1]<0>T -> #p").unwrap();
    assert_eq!(print_formula(&f), "[1]<0>T -> [#]p");
    assert_eq!(
        parse_formula("<w+1>p").unwrap(),
        Formula::diamond(Ordinal::omega().succ(), Formula::atom("p"))
    );
    assert!(parse_formula("p ->").is_err());
    assert!(parse_formula("[x]p").is_err());
}

#[test]
fn tautology_examples() {
    for (text, expected) in [
        ("p -> p", true),
        ("[0]p -> [0]p", true),
        ("[0]p -> [1]p", false),
        ("(p -> q) -> (~q -> ~p)", true),
        ("p | ~p", true),
        ("<0>p <-> ~[0]~p", true),
        ("p -> q", false),
    ] {
        let f = parse_formula(text).unwrap();
        assert_eq!(is_tautology(&f).unwrap(), expected, "{text}");
    }
}

proptest! {
    #[test]
    fn print_parse_round_trip(f in formula()) {
        let text = print_formula(&f);
        prop_assert_eq!(parse_formula(&text).unwrap(), f);
    }

    #[test]
    fn abstraction_reconstructs(f in formula()) {
        let abs = abstract_atoms(&f);
        prop_assert!(!has_box(&abs.skeleton));
        let table: BTreeMap<String, Formula> = abs.table.iter().cloned().collect();
        prop_assert_eq!(table.len(), abs.table.len());
        for name in table.keys() {
            prop_assert!(!f.atoms().contains(name));
        }
        for (_, boxed) in &abs.table {
            prop_assert!(boxed.as_box().is_some());
        }
        prop_assert_eq!(substitute(&abs.skeleton, &table), f);
    }

    #[test]
    fn tautology_matches_naive(f in formula()) {
        prop_assert_eq!(is_tautology(&f).unwrap(), naive_tautology(&f));
    }

    #[test]
    fn excluded_middle_instances(f in formula()) {
        prop_assert!(is_tautology(&Formula::or(f.clone(), Formula::not(f.clone()))).unwrap());
        prop_assert!(is_tautology(&Formula::imp(f.clone(), f)).unwrap());
    }
}
