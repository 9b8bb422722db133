use mopo::fitness::text_bleu;
use serde::Deserialize;

#[derive(Deserialize)]
struct Case {
    candidate: String,
    reference: String,
    bleu: f64,
}

#[test]
fn matches_reference_implementation() {
    let cases: Vec<Case> = serde_json::from_str(include_str!("data/bleu_oracle.json")).unwrap();
    assert_eq!(cases.len(), 100);
    for c in &cases {
        let got: f64 = text_bleu(&c.candidate, &c.reference).unwrap();
        assert!((got - c.bleu).abs() <= 1e-9, "{:?} vs {:?}: {got} != {}", c.candidate, c.reference, c.bleu);
    }
}
