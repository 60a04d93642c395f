//! The canonical text form must capture every bundle exactly: parsing the
//! serialized form reproduces the original structure, and declaration order
//! in the source never matters.

use fairadapt_core::fixtures::{
    random_conflict_bundle, random_full_bundle, supermarket_bundle, Rng,
};
use fairadapt_dsl::{parse_model, serialize};

#[test]
fn supermarket_survives_a_text_round_trip() {
    let bundle = supermarket_bundle();
    let text = serialize(&bundle);
    let parsed = parse_model(&text, "supermarket.frm").expect("canonical text parses");
    assert!(parsed.warnings.is_empty(), "{:?}", parsed.warnings);
    assert_eq!(parsed.bundle, bundle);
}

#[test]
fn serialization_is_a_fixed_point() {
    let bundle = supermarket_bundle();
    let once = serialize(&bundle);
    let parsed = parse_model(&once, "supermarket.frm").unwrap();
    assert_eq!(serialize(&parsed.bundle), once);
}

#[test]
fn empty_model_round_trips_with_a_warning() {
    let text = serialize(&Default::default());
    assert_eq!(text, "# fairadapt model\n");
    let parsed = parse_model(&text, "empty.frm").expect("empty model is valid");
    assert_eq!(parsed.bundle, Default::default());
    assert_eq!(parsed.warnings.len(), 1);
    assert_eq!(parsed.warnings[0].code, "W001");
}

#[test]
fn declaration_order_does_not_change_the_model() {
    let text = serialize(&supermarket_bundle());
    let chunks: Vec<&str> = text.split("\n\n").collect();
    let reversed: Vec<&str> = chunks.iter().rev().copied().collect();
    let shuffled = reversed.join("\n\n");
    let a = parse_model(&text, "a.frm").unwrap().bundle;
    let b = parse_model(&shuffled, "b.frm").unwrap().bundle;
    assert_eq!(a, b);
}

#[test]
fn random_tree_models_survive_a_text_round_trip() {
    let mut rng = Rng::new(0x5eed_0001);
    for case in 0..250 {
        let bundle = random_full_bundle(&mut rng);
        let text = serialize(&bundle);
        let parsed = parse_model(&text, "fuzz.frm")
            .unwrap_or_else(|d| panic!("case {case} failed to parse: {d:?}\n{text}"));
        assert_eq!(parsed.bundle, bundle, "case {case} changed under round-trip:\n{text}");
    }
}

#[test]
fn random_flat_models_survive_a_text_round_trip() {
    let mut rng = Rng::new(0x5eed_0002);
    for case in 0..250 {
        let frs = 1 + rng.below(12);
        let ops = 1 + rng.below(24);
        let resources = 1 + rng.below(6);
        let bundle = random_conflict_bundle(&mut rng, frs, ops, resources);
        let text = serialize(&bundle);
        let parsed = parse_model(&text, "fuzz.frm")
            .unwrap_or_else(|d| panic!("case {case} failed to parse: {d:?}\n{text}"));
        assert_eq!(parsed.bundle, bundle, "case {case} changed under round-trip:\n{text}");
    }
}
