//! Small hand-checked instances used across tests, benches and docs.

use crate::setcover::{parse_instance, SetCoverInstance};

/// Five sets, four elements, optimum 2 (`{s1, s2}`).
pub const FIVE_BY_FOUR_JSON: &str = r#"{
  "sets": ["s1", "s2", "s3", "s4", "s5"],
  "universe": ["u1", "u2", "u3", "u4"],
  "edges": [["s1","u1"], ["s1","u2"], ["s1","u3"], ["s2","u4"],
            ["s3","u3"], ["s3","u2"], ["s4","u3"], ["s5","u4"]]
}"#;

pub fn five_by_four() -> SetCoverInstance {
    parse_instance(FIVE_BY_FOUR_JSON).expect("fixture parses")
}

/// One set covering one element.
pub fn one_by_one() -> SetCoverInstance {
    SetCoverInstance::from_masks(1, &[1]).expect("fixture parses")
}

/// `m` elements with pairwise disjoint singleton neighborhoods over `m` sets.
pub fn disjoint_singletons(m: usize) -> SetCoverInstance {
    let masks: Vec<u64> = (0..m).map(|i| 1 << i).collect();
    SetCoverInstance::from_masks(m, &masks).expect("fixture parses")
}
