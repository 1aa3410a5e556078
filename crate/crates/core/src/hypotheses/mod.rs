//! Decision trees (with abort leaves), DNF formulas, and their exact metrics.
//!
//! Distances exclude aborted mass: an atom where the hypothesis outputs `⊥`
//! never counts as an error, and the remaining error mass is *not*
//! renormalized. A tree that aborts everywhere therefore has distance 0.

mod dnf;
mod random;
mod restrict;
mod tree;

use num_rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::construction::{BooleanFunction, ExplicitDistribution, LabeledDistribution};
use crate::error::{Error, Result};
use crate::generator::GeneratorSpec;
use crate::par::{self, Exec};
use crate::ratio;

pub use dnf::{Dnf, Literal, Term};
pub use random::{random_dnf, random_tree};
pub use restrict::{restrict_dnf, restrict_tree};
pub use tree::{DecisionTree, Leaf, LeafPath};

/// Common interface of trees and DNFs for the metrics below.
pub trait Classifier: Sync {
    fn classify(&self, x: &BitString) -> Result<Leaf>;
    /// Depth for trees, width for DNFs.
    fn cost(&self, x: &BitString) -> Result<usize>;
    fn size(&self) -> usize;
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceResult {
    #[serde(with = "leaf_serde")]
    pub label: Leaf,
    /// Depth (trees) or width (DNFs).
    pub cost: usize,
    /// Per block position; empty unless a block shape was given.
    pub per_position: Vec<usize>,
}

mod leaf_serde {
    use super::Leaf;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(l: &Leaf, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(match l {
            Leaf::Zero => "0",
            Leaf::One => "1",
            Leaf::Abort => "bot",
        })
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Leaf, D::Error> {
        match String::deserialize(d)?.as_str() {
            "0" => Ok(Leaf::Zero),
            "1" => Ok(Leaf::One),
            "bot" => Ok(Leaf::Abort),
            other => Err(serde::de::Error::custom(format!("bad label {other:?}"))),
        }
    }
}

/// A submitted hypothesis: JSON objects are trees, JSON arrays are DNFs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Hypothesis {
    Tree(DecisionTree),
    Dnf(Dnf),
}

impl Hypothesis {
    pub fn kind(&self) -> &'static str {
        match self {
            Hypothesis::Tree(_) => "tree",
            Hypothesis::Dnf(_) => "dnf",
        }
    }

    pub fn max_var(&self) -> Option<usize> {
        match self {
            Hypothesis::Tree(t) => t.max_var(),
            Hypothesis::Dnf(f) => f.max_var(),
        }
    }

    pub fn trace(&self, x: &BitString, shape: Option<(usize, usize)>) -> Result<TraceResult> {
        match self {
            Hypothesis::Tree(t) => t.trace(x, shape),
            Hypothesis::Dnf(f) => f.trace(x, shape),
        }
    }
}

impl Classifier for Hypothesis {
    fn classify(&self, x: &BitString) -> Result<Leaf> {
        match self {
            Hypothesis::Tree(t) => t.classify(x),
            Hypothesis::Dnf(f) => f.classify(x),
        }
    }

    fn cost(&self, x: &BitString) -> Result<usize> {
        match self {
            Hypothesis::Tree(t) => t.cost(x),
            Hypothesis::Dnf(f) => f.cost(x),
        }
    }

    fn size(&self) -> usize {
        match self {
            Hypothesis::Tree(t) => t.size(),
            Hypothesis::Dnf(f) => f.size(),
        }
    }
}

/// Numerator (over `target.denominator`) of the non-abort disagreement mass.
pub fn error_weight<C: Classifier + ?Sized>(h: &C, target: &LabeledDistribution) -> Result<u128> {
    let mut total = 0;
    for ((x, &w), &label) in target.atoms.iter().zip(&target.weights).zip(&target.labels) {
        if h.classify(x)?.bit().is_some_and(|b| b != label) {
            total += w;
        }
    }
    Ok(total)
}

/// Numerator of the mass where `h` aborts.
pub fn abort_weight<C: Classifier + ?Sized>(h: &C, target: &LabeledDistribution) -> Result<u128> {
    let mut total = 0;
    for (x, &w) in target.atoms.iter().zip(&target.weights) {
        if h.classify(x)? == Leaf::Abort {
            total += w;
        }
    }
    Ok(total)
}

/// Numerator of the expected cost (depth or width).
pub fn cost_weight<C: Classifier + ?Sized>(h: &C, target: &LabeledDistribution) -> Result<u128> {
    let mut total = 0;
    for (x, &w) in target.atoms.iter().zip(&target.weights) {
        total += w * h.cost(x)? as u128;
    }
    Ok(total)
}

pub fn dist_labeled<C: Classifier + ?Sized>(h: &C, target: &LabeledDistribution) -> Result<BigRational> {
    Ok(target.to_rational(error_weight(h, target)?))
}

/// `Pr_{x~dist}[h(x) != f(x) and h(x) != ⊥]`, exactly.
pub fn dist_exact<C: Classifier + ?Sized>(h: &C, f: &dyn BooleanFunction, dist: &ExplicitDistribution) -> Result<BigRational> {
    dist_labeled(h, &LabeledDistribution::new(f, dist)?)
}

fn unlabeled(dist: &ExplicitDistribution) -> LabeledDistribution {
    LabeledDistribution {
        arity: dist.arity(),
        atoms: dist.atoms().to_vec(),
        weights: dist.weights().to_vec(),
        denominator: dist.denominator(),
        labels: vec![false; dist.len()],
    }
}

pub fn avg_depth(t: &DecisionTree, dist: &ExplicitDistribution) -> Result<BigRational> {
    let u = unlabeled(dist);
    Ok(u.to_rational(cost_weight(t, &u)?))
}

pub fn avg_width(f: &Dnf, dist: &ExplicitDistribution) -> Result<BigRational> {
    let u = unlabeled(dist);
    Ok(u.to_rational(cost_weight(f, &u)?))
}

pub fn abort_prob(t: &DecisionTree, dist: &ExplicitDistribution) -> Result<BigRational> {
    let u = unlabeled(dist);
    Ok(u.to_rational(abort_weight(t, &u)?))
}

/// For each leaf (in [`DecisionTree::leaves`] order), the mass reaching it,
/// as a numerator over `dist.denominator()`.
pub fn leaf_reach_weights(t: &DecisionTree, dist: &ExplicitDistribution) -> Vec<(LeafPath, u128)> {
    t.leaves()
        .into_iter()
        .map(|leaf| {
            let w = dist
                .atoms()
                .iter()
                .zip(dist.weights())
                .filter(|(x, _)| leaf.assignments.iter().all(|&(v, b)| v < x.len() && x.get(v) == b))
                .map(|(_, &w)| w)
                .sum();
            (leaf, w)
        })
        .collect()
}

/// Monte-Carlo disagreement estimate with a two-sided Hoeffding radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub radius: f64,
    pub delta: f64,
    pub samples: u64,
    pub aborted: u64,
    pub seed: u64,
}

impl McEstimate {
    pub fn contains(&self, value: f64) -> bool {
        (self.estimate - value).abs() <= self.radius
    }
}

pub const MC_DELTA: f64 = 0.01;
const MC_CHUNK: u64 = 8192;

pub fn hoeffding_radius(samples: u64, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * samples as f64)).sqrt()
}

/// Draws `samples` generator outputs and counts non-abort disagreements,
/// divided by the total sample count (matching [`dist_exact`]).
///
/// Samples are produced in fixed-size chunks, chunk `c` on ChaCha stream `c`
/// of `seed`, so the result does not depend on the execution mode.
pub fn dist_mc<C: Classifier + ?Sized>(
    h: &C,
    f: &dyn BooleanFunction,
    gen: &GeneratorSpec,
    samples: u64,
    seed: u64,
    exec: Exec,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be at least 1".into()));
    }
    if gen.output_bits != f.arity() {
        return Err(Error::ArityMismatch {
            expected: f.arity(),
            found: gen.output_bits,
        });
    }
    let chunks = samples.div_ceil(MC_CHUNK);
    let counts = par::map_range(exec, 0..chunks, |c| -> Result<(u64, u64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c);
        let n = MC_CHUNK.min(samples - c * MC_CHUNK);
        let (mut wrong, mut aborted) = (0, 0);
        for _ in 0..n {
            let y = gen.sample(&mut rng);
            match h.classify(&y)?.bit() {
                None => aborted += 1,
                Some(b) => wrong += u64::from(b != f.eval(&y)?),
            }
        }
        Ok((wrong, aborted))
    });
    let (mut wrong, mut aborted) = (0, 0);
    for c in counts {
        let (w, a) = c?;
        wrong += w;
        aborted += a;
    }
    Ok(McEstimate {
        estimate: wrong as f64 / samples as f64,
        radius: hoeffding_radius(samples, MC_DELTA),
        delta: MC_DELTA,
        samples,
        aborted,
        seed,
    })
}

/// `Σ pmf · cost` as an exact rational over any labeled distribution.
pub fn avg_cost_labeled<C: Classifier + ?Sized>(h: &C, target: &LabeledDistribution) -> Result<BigRational> {
    Ok(target.to_rational(cost_weight(h, target)?))
}

/// True iff `weight/denom <= 2^{-len/2}`, i.e. `weight^2 · 2^len <= denom^2`.
pub fn within_half_exponent(weight: u128, denom: u128, len: usize) -> bool {
    ratio::le_pow2(&ratio::ratio(weight, denom), -(len as i64), 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplification::{amplified_pair, amplify_dist};
    use crate::construction::{build_dist, build_gamma};
    use crate::fixtures;
    use crate::generator::build_generator;

    #[test]
    fn distance_examples() {
        let inst = fixtures::five_by_four();
        let g = build_gamma(&inst).unwrap();
        let d = build_dist(&inst).unwrap();
        assert_eq!(dist_exact(&DecisionTree::constant(false), &g, &d).unwrap(), ratio::ratio(1, 2));
        assert_eq!(dist_exact(&DecisionTree::abort(), &g, &d).unwrap(), ratio::int(0));
        // s1 then s2 computes Γ exactly on the support.
        let cover = DecisionTree::node(0, DecisionTree::node(1, DecisionTree::constant(false), DecisionTree::constant(true)), DecisionTree::constant(true));
        assert_eq!(dist_exact(&cover, &g, &d).unwrap(), ratio::int(0));
        let bad_arity = DecisionTree::node(7, DecisionTree::constant(false), DecisionTree::constant(true));
        assert!(dist_exact(&bad_arity, &g, &d).is_err());
    }

    #[test]
    fn depth_width_abort_examples() {
        let inst = fixtures::one_by_one();
        let (_, amp) = amplified_pair(&inst, 2, false).unwrap();
        let d = amp.to_explicit(20).unwrap();
        assert_eq!(avg_depth(&DecisionTree::constant(true), &d).unwrap(), ratio::int(0));
        let one = DecisionTree::node(0, DecisionTree::constant(false), DecisionTree::constant(true));
        assert_eq!(avg_depth(&one, &d).unwrap(), ratio::int(1));
        let full = DecisionTree::complete(&[0, 1], &|_| Leaf::Zero);
        assert_eq!(avg_depth(&full, &d).unwrap(), ratio::int(2));

        assert_eq!(avg_width(&Dnf::falsum(), &d).unwrap(), ratio::int(0));
        let base = build_dist(&fixtures::five_by_four()).unwrap();
        let zero_term = Dnf::from_signed(&[vec![-1, -2, -3, -4, -5]]).unwrap();
        assert_eq!(avg_width(&zero_term, &base).unwrap(), ratio::ratio(5, 2));

        assert_eq!(abort_prob(&one, &d).unwrap(), ratio::int(0));
        assert_eq!(abort_prob(&DecisionTree::abort(), &d).unwrap(), ratio::int(1));
        // Abort exactly on the zero string of the base distribution.
        let t = DecisionTree::node(0, DecisionTree::node(1, DecisionTree::abort(), DecisionTree::constant(true)), DecisionTree::constant(true));
        assert_eq!(abort_prob(&t, &base).unwrap(), ratio::ratio(1, 2));
    }

    #[test]
    fn negated_cover_conjunction_width() {
        // ¬x_{s1} ∧ ¬x_{s2} accepts 0^n only (the pair is a cover): width 2 on mass 1/2.
        let inst = fixtures::five_by_four();
        let f = Dnf::from_signed(&[vec![-1, -2]]).unwrap();
        let d = build_dist(&inst).unwrap();
        let mut expected = ratio::int(0);
        for (i, x) in d.atoms().iter().enumerate() {
            if !x.get(0) && !x.get(1) {
                expected += d.probability(i) * ratio::int(2);
            }
        }
        assert_eq!(avg_width(&f, &d).unwrap(), expected);
        assert_eq!(expected, ratio::int(1));
        assert_eq!(dist_exact(&f, &build_gamma(&inst).unwrap().negate(), &d).unwrap(), ratio::int(0));
    }

    #[test]
    fn leaf_reach_decays() {
        let inst = fixtures::five_by_four();
        let d = amplify_dist(&build_dist(&inst).unwrap(), 2, false).unwrap().to_explicit(20).unwrap();
        let t = DecisionTree::complete(&[0, 1, 2, 4], &|_| Leaf::Zero);
        let reach = leaf_reach_weights(&t, &d);
        assert_eq!(reach.iter().map(|(_, w)| w).sum::<u128>(), d.denominator());
        for (leaf, w) in reach {
            assert!(within_half_exponent(w, d.denominator(), leaf.assignments.len()));
        }
    }

    #[test]
    fn monte_carlo_is_deterministic_and_calibrated() {
        let inst = fixtures::five_by_four();
        let (f, _) = amplified_pair(&inst, 2, false).unwrap();
        let g = build_generator(&inst, 2).unwrap();
        let h = DecisionTree::constant(false);
        let a = dist_mc(&h, &f, &g, 20_000, 3, Exec::Sequential).unwrap();
        let b = dist_mc(&h, &f, &g, 20_000, 3, Exec::Parallel).unwrap();
        assert_eq!(a, b);
        assert!(a.contains(0.5));
        let exact = dist_mc(&Hypothesis::Tree(DecisionTree::complete(&(0..10).collect::<Vec<_>>(), &|v| {
            Leaf::from_bool((0..5).any(|i| v[2 * i] ^ v[2 * i + 1]))
        })), &f, &g, 5_000, 1, Exec::Parallel)
        .unwrap();
        assert_eq!(exact.estimate, 0.0);
        assert!(dist_mc(&h, &f, &g, 0, 1, Exec::Sequential).is_err());
        let other = build_generator(&fixtures::one_by_one(), 2).unwrap();
        assert!(dist_mc(&h, &f, &other, 10, 1, Exec::Sequential).is_err());
    }

    #[test]
    fn hypothesis_json_is_untagged() {
        let t: Hypothesis = serde_json::from_str(r#"{"leaf":"bot"}"#).unwrap();
        assert_eq!(t, Hypothesis::Tree(DecisionTree::abort()));
        let f: Hypothesis = serde_json::from_str("[[1,-2]]").unwrap();
        assert_eq!(f.kind(), "dnf");
        assert_eq!(serde_json::to_string(&f).unwrap(), "[[1,-2]]");
    }

    #[test]
    fn symmetric_without_aborts() {
        let inst = fixtures::five_by_four();
        let g = build_gamma(&inst).unwrap();
        let d = build_dist(&inst).unwrap();
        let t = DecisionTree::node(2, DecisionTree::constant(false), DecisionTree::constant(true));
        // Distance from t to Γ equals distance from Γ's tree form to t's labels.
        let forward = dist_exact(&t, &g, &d).unwrap();
        let t_as_fn = LabeledDistribution {
            labels: d.atoms().iter().map(|x| t.eval(x).unwrap() == Leaf::One).collect(),
            ..unlabeled(&d)
        };
        let gamma_tree = DecisionTree::node(0, DecisionTree::node(1, DecisionTree::constant(false), DecisionTree::constant(true)), DecisionTree::constant(true));
        assert_eq!(dist_labeled(&gamma_tree, &t_as_fn).unwrap(), forward);
        assert_eq!(dist_labeled(&t, &t_as_fn).unwrap(), ratio::int(0));
    }
}
