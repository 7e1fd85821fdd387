use muench_core::ordinals::Ordinal;
use muench_core::proofkit::{
    check_proof, conservativity_scan, derive_blacksquare_lob, derive_box_disjunction,
    derive_cons_absorption, derive_cons_provable, parse_proof, print_proof, proof_labels,
    AxiomSystem, Justification, LineFault, Proof, ProofParseError,
};
use muench_core::syntax::{parse_formula, Formula, ModalLabel};
use proptest::prelude::*;

fn ord(s: &str) -> Ordinal {
    Ordinal::parse(s).unwrap()
}

fn f(s: &str) -> Formula {
    parse_formula(s).unwrap()
}

fn samples() -> Vec<Proof> {
    let mut out = vec![
        derive_cons_provable(&ord("1"), &ord("0")).unwrap(),
        derive_cons_provable(&ord("w"), &ord("2")).unwrap(),
        derive_cons_absorption(&ord("2"), &ord("1"), &f("p & [0]q")).unwrap(),
        derive_box_disjunction(&ord("2"), &ord("1"), &f("p"), &f("q")).unwrap(),
        derive_blacksquare_lob(&f("p -> [0]q")).unwrap(),
    ];
    out.push(derive_box_disjunction(&ord("w+1"), &ord("w"), &f("<1>p"), &f("~q")).unwrap());
    out
}

#[test]
fn derived_proofs_check_and_round_trip() {
    for p in samples() {
        check_proof(&p).unwrap();
        let text = print_proof(&p);
        let back = parse_proof(&text).unwrap();
        assert_eq!(back, p);
        check_proof(&back).unwrap();
    }
}

#[test]
fn derived_labels_stay_below_parameters() {
    let p = derive_cons_absorption(&ord("3"), &ord("1"), &f("[2]p")).unwrap();
    assert!(conservativity_scan(&p, &ord("4")).unwrap());
    assert!(proof_labels(&p).iter().all(|l| *l <= ord("3")));
    let q = derive_blacksquare_lob(&f("p")).unwrap();
    assert!(conservativity_scan(&q, &ord("0")).is_err());
}

#[test]
fn constructor_preconditions() {
    assert!(derive_cons_provable(&ord("0"), &ord("0")).is_err());
    assert!(derive_cons_absorption(&ord("1"), &ord("2"), &f("p")).is_err());
    assert!(derive_box_disjunction(&ord("1"), &ord("0"), &f("p"), &f("q")).is_err());
    assert!(derive_box_disjunction(&ord("1"), &ord("2"), &f("p"), &f("q")).is_err());
    assert!(derive_cons_absorption(&ord("2"), &ord("1"), &f("#p")).is_err());
    assert!(derive_blacksquare_lob(&f("[1]p")).is_err());
}

#[test]
fn hand_written_faults() {
    let bad_index = "1: p -> p ; taut\n2: p ; mp 1 7\n";
    let e = check_proof(&parse_proof(bad_index).unwrap()).unwrap_err();
    assert_eq!(e.line, 2);
    assert!(matches!(e.fault, LineFault::BadIndex { .. }));

    let not_taut = "1: p -> q ; taut\n";
    let e = check_proof(&parse_proof(not_taut).unwrap()).unwrap_err();
    assert_eq!((e.line, e.fault), (1, LineFault::NotTautology));

    let order = "1: <1>p -> [0]<1>p ; intro 1 0\n";
    let e = check_proof(&parse_proof(order).unwrap()).unwrap_err();
    assert!(matches!(e.fault, LineFault::LabelOrder { .. }));

    let lob = "1: [1]([1]p -> p) -> [1]p ; lob 1\n2: [0]([0]p -> p) -> [0]p ; lob 0\n";
    check_proof(&parse_proof(lob).unwrap()).unwrap();

    let mixed = "system: glp 2\n1: [#]p -> [#]p ; taut\n";
    assert!(check_proof(&parse_proof(mixed).unwrap()).is_err());

    assert_eq!(parse_proof("// nothing\n\n"), Err(ProofParseError::Empty));
    assert!(matches!(
        parse_proof("2: p -> p ; taut\n"),
        Err(ProofParseError::Line { line: 1, .. })
    ));
}

#[test]
fn empty_proof_is_rejected() {
    let p = Proof::new(AxiomSystem::Glp { cap: ord("1") }, vec![]);
    let e = check_proof(&p).unwrap_err();
    assert_eq!((e.line, e.fault), (0, LineFault::Empty));
}

fn mutate(j: &Justification, a: usize, b: usize) -> Justification {
    match j {
        Justification::MP(..) => Justification::MP(a, b),
        Justification::Nec(l, _) => Justification::Nec(l.clone(), a),
        Justification::AxDistrib(_) => Justification::AxDistrib(Ordinal::finite(b as u64 % 3)),
        Justification::AxLob(o) => Justification::AxTrans(o.clone()),
        Justification::AxIntrospect(x, y) => Justification::AxIntrospect(y.clone(), x.clone()),
        Justification::AxDiaMono(x, y) => Justification::AxDiaMono(y.clone(), x.clone()),
        Justification::BSq2 => Justification::BSq3,
        _ => Justification::Nec(ModalLabel::Ord(Ordinal::zero()), a),
    }
}

proptest! {
    #[test]
    fn prefixes_of_proofs_are_proofs(which in 0usize..6, cut in 1usize..200) {
        let mut p = samples().swap_remove(which);
        p.lines.truncate(cut.min(p.len()));
        prop_assert!(check_proof(&p).is_ok());
    }

    #[test]
    fn a_single_fault_is_reported_where_it_is(
        which in 0usize..6,
        line in 0usize..200,
        a in 0usize..40,
        b in 0usize..40,
    ) {
        let mut p = samples().swap_remove(which);
        let k = line % p.len();
        let j = mutate(&p.lines[k].justification, a, b);
        p.lines[k].justification = j;
        if let Err(e) = check_proof(&p) {
            prop_assert_eq!(e.line, k + 1);
        }
    }

    #[test]
    fn replaced_formulas_fail_or_still_check(
        which in 0usize..6,
        line in 0usize..200,
        text in prop::sample::select(vec!["p", "T", "[0]p -> p", "<1>T", "[#]p"]),
    ) {
        let mut p = samples().swap_remove(which);
        let k = line % p.len();
        p.lines[k].formula = f(text);
        if let Err(e) = check_proof(&p) {
            prop_assert!(e.line > k);
        }
    }
}
