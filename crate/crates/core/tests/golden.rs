//! Golden-file test for the normalization pipeline: 50 curated raw lines and
//! their expected token sequences, derived independently and frozen. Any
//! change to tokenization must update [`valence::preprocess::VERSION`] and
//! regenerate the expected file deliberately.

use valence::preprocess::preprocess;

const INPUT: &str = include_str!("data/golden_input.txt");
const EXPECTED: &str = include_str!("data/golden_expected.txt");

#[test]
fn normalization_matches_frozen_golden_file() {
    let inputs: Vec<&str> = INPUT.lines().collect();
    let expected: Vec<&str> = EXPECTED.lines().collect();
    assert_eq!(inputs.len(), 50);
    assert_eq!(expected.len(), 50);
    for (line, (raw, want)) in inputs.iter().zip(&expected).enumerate() {
        let got = preprocess(raw).join(" ");
        assert_eq!(
            &got,
            want,
            "line {}: input {raw:?} tokenized as {got:?}, frozen output is {want:?}",
            line + 1
        );
    }
}
