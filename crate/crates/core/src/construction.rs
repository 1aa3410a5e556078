//! The base partial function `Γ` (and its negation) and the base distribution `D`.
//!
//! `Γ` is `0` at the all-zeros string and `1` at each universe element's
//! encoding; `D` puts mass `1/2` on the zero string and spreads the rest
//! uniformly over the elements. Both are only defined on that support.

use std::collections::HashMap;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::ratio;
use crate::setcover::SetCoverInstance;

/// Anything that maps bit strings to bits, possibly only on a subset.
pub trait BooleanFunction: Send + Sync {
    fn arity(&self) -> usize;
    /// Errors with [`Error::OffSupport`] outside the domain of definition.
    fn eval(&self, x: &BitString) -> Result<bool>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Negated,
    Amplified { ell: usize },
    XorComposed { m: usize },
}

#[derive(Clone, Debug)]
pub struct PartialFunctionTable {
    arity: usize,
    support: Vec<BitString>,
    values: Vec<bool>,
    history: Vec<Transform>,
    index: HashMap<BitString, usize>,
}

impl PartialEq for PartialFunctionTable {
    fn eq(&self, other: &Self) -> bool {
        self.arity == other.arity
            && self.support == other.support
            && self.values == other.values
            && self.history == other.history
    }
}

impl PartialFunctionTable {
    pub fn new(arity: usize, support: Vec<BitString>, values: Vec<bool>, history: Vec<Transform>) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::Malformed(format!(
                "{} support points but {} values",
                support.len(),
                values.len()
            )));
        }
        let mut index = HashMap::with_capacity(support.len());
        for (i, x) in support.iter().enumerate() {
            if x.len() != arity {
                return Err(Error::ArityMismatch {
                    expected: arity,
                    found: x.len(),
                });
            }
            if index.insert(x.clone(), i).is_some() {
                return Err(Error::Malformed(format!("support point {x} repeated")));
            }
        }
        Ok(PartialFunctionTable {
            arity,
            support,
            values,
            history,
            index,
        })
    }

    pub fn support(&self) -> &[BitString] {
        &self.support
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    /// Transformations applied since construction; empty for a plain table.
    pub fn history(&self) -> &[Transform] {
        &self.history
    }

    pub fn is_negated(&self) -> bool {
        self.history.last() == Some(&Transform::Negated)
    }

    pub fn contains(&self, x: &BitString) -> bool {
        self.index.contains_key(x)
    }

    /// Flips every value. Negating twice restores the original table, history included.
    pub fn negate(&self) -> PartialFunctionTable {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = !*v);
        if out.is_negated() {
            out.history.pop();
        } else {
            out.history.push(Transform::Negated);
        }
        out
    }

    /// JSON list of `[bitstring, bit]` pairs in support order.
    pub fn to_export_json(&self) -> String {
        let rows: Vec<(String, u8)> = self
            .support
            .iter()
            .zip(&self.values)
            .map(|(x, &v)| (x.to_string(), v as u8))
            .collect();
        serde_json::to_string(&rows).expect("rows serialize")
    }
}

impl BooleanFunction for PartialFunctionTable {
    fn arity(&self) -> usize {
        self.arity
    }

    fn eval(&self, x: &BitString) -> Result<bool> {
        self.index
            .get(x)
            .map(|&i| self.values[i])
            .ok_or_else(|| Error::OffSupport(x.clone()))
    }
}

/// Exact pmf over an explicit list of atoms. Probabilities are integer weights
/// over one shared denominator, so sums and comparisons stay exact and cheap.
#[derive(Clone, Debug)]
pub struct ExplicitDistribution {
    arity: usize,
    atoms: Vec<BitString>,
    weights: Vec<u128>,
    denominator: u128,
    index: HashMap<BitString, usize>,
}

impl PartialEq for ExplicitDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.arity == other.arity
            && self.atoms == other.atoms
            && self.weights == other.weights
            && self.denominator == other.denominator
    }
}

impl ExplicitDistribution {
    pub fn new(arity: usize, atoms: Vec<BitString>, weights: Vec<u128>, denominator: u128) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::Malformed("atom and weight counts differ".into()));
        }
        if weights.contains(&0) {
            return Err(Error::Malformed("atom with zero probability".into()));
        }
        let total = weights
            .iter()
            .try_fold(0u128, |acc, &w| acc.checked_add(w))
            .ok_or(Error::Overflow("distribution weights"))?;
        if total != denominator {
            return Err(Error::Malformed(format!(
                "weights sum to {total}, expected {denominator}"
            )));
        }
        let mut index = HashMap::with_capacity(atoms.len());
        for (i, x) in atoms.iter().enumerate() {
            if x.len() != arity {
                return Err(Error::ArityMismatch {
                    expected: arity,
                    found: x.len(),
                });
            }
            if index.insert(x.clone(), i).is_some() {
                return Err(Error::Malformed(format!("atom {x} repeated")));
            }
        }
        Ok(ExplicitDistribution {
            arity,
            atoms,
            weights,
            denominator,
            index,
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn atoms(&self) -> &[BitString] {
        &self.atoms
    }

    pub fn weights(&self) -> &[u128] {
        &self.weights
    }

    pub fn denominator(&self) -> u128 {
        self.denominator
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn probability(&self, i: usize) -> BigRational {
        ratio::ratio(self.weights[i], self.denominator)
    }

    /// Probability of `x`; zero off the atom list.
    pub fn pmf(&self, x: &BitString) -> BigRational {
        ratio::ratio(self.weight_of(x), self.denominator)
    }

    pub fn weight_of(&self, x: &BitString) -> u128 {
        self.index.get(x).map_or(0, |&i| self.weights[i])
    }

    /// Sum of all atom probabilities (always exactly 1 by construction).
    pub fn total(&self) -> BigRational {
        ratio::ratio(self.weights.iter().sum(), self.denominator)
    }

    /// JSON list of `[bitstring, "p/q"]` pairs in atom order.
    pub fn to_export_json(&self) -> String {
        let rows: Vec<(String, String)> = (0..self.len())
            .map(|i| (self.atoms[i].to_string(), ratio::to_string(&self.probability(i))))
            .collect();
        serde_json::to_string(&rows).expect("rows serialize")
    }
}

/// Atoms of a distribution paired with the target's value on each.
///
/// This is the form every exact metric and oracle works on.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDistribution {
    pub arity: usize,
    pub atoms: Vec<BitString>,
    pub weights: Vec<u128>,
    pub denominator: u128,
    pub labels: Vec<bool>,
}

impl LabeledDistribution {
    pub fn new(f: &dyn BooleanFunction, dist: &ExplicitDistribution) -> Result<Self> {
        if f.arity() != dist.arity() {
            return Err(Error::ArityMismatch {
                expected: f.arity(),
                found: dist.arity(),
            });
        }
        let labels = dist.atoms().iter().map(|x| f.eval(x)).collect::<Result<Vec<_>>>()?;
        Ok(LabeledDistribution {
            arity: dist.arity(),
            atoms: dist.atoms().to_vec(),
            weights: dist.weights().to_vec(),
            denominator: dist.denominator(),
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn to_rational(&self, weight: u128) -> BigRational {
        ratio::ratio(weight, self.denominator)
    }

    /// Copy with atom `i`'s label flipped (mutation testing).
    pub fn with_flipped_label(&self, i: usize) -> Result<Self> {
        if i >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                bound: self.len(),
            });
        }
        let mut out = self.clone();
        out.labels[i] = !out.labels[i];
        Ok(out)
    }

    /// Mass of atoms labeled `value`.
    pub fn label_mass(&self, value: bool) -> u128 {
        self.weights
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| l == value)
            .map(|(w, _)| w)
            .sum()
    }
}

/// `Γ` for an instance whose element encodings are distinct and nonzero.
pub fn build_gamma(inst: &SetCoverInstance) -> Result<PartialFunctionTable> {
    let n = inst.n();
    let mut support = vec![BitString::zeros(n)];
    let mut values = vec![false];
    for (u, nb) in inst.universe_ids().iter().zip(inst.neighborhoods()) {
        if nb.is_zero() {
            return Err(Error::UncoverableElement(u.clone()));
        }
        support.push(nb.clone());
        values.push(true);
    }
    PartialFunctionTable::new(n, support, values, Vec::new())
        .map_err(|e| Error::Malformed(format!("{e}; normalize the instance first")))
}

/// `D`: mass `1/2` at the zero string and `1/(2|U|)` per element.
pub fn build_dist(inst: &SetCoverInstance) -> Result<ExplicitDistribution> {
    let n = inst.n();
    let m = inst.universe_len() as u128;
    let mut atoms = vec![BitString::zeros(n)];
    let mut weights = vec![m];
    for nb in inst.neighborhoods() {
        atoms.push(nb.clone());
        weights.push(1);
    }
    ExplicitDistribution::new(n, atoms, weights, 2 * m)
        .map_err(|e| Error::Malformed(format!("{e}; normalize the instance first")))
}

fn check_subset(inst: &SetCoverInstance, c: &[usize]) -> Result<BitString> {
    let mut mask = BitString::zeros(inst.n());
    for &s in c {
        if s >= inst.n() {
            return Err(Error::IndexOutOfRange {
                index: s,
                bound: inst.n(),
            });
        }
        mask.set(s, true);
    }
    Ok(mask)
}

/// Does the monotone OR of the variables in `c` agree with `Γ` on its support?
pub fn disjunction_consistency(inst: &SetCoverInstance, c: &[usize]) -> Result<bool> {
    let mask = check_subset(inst, c)?;
    let gamma = build_gamma(inst)?;
    Ok(gamma
        .support()
        .iter()
        .zip(gamma.values())
        .all(|(x, &v)| x.intersects(&mask) == v))
}

/// Does the AND of the negated variables in `c` agree with `Γ̄` on its support?
pub fn conjunction_consistency(inst: &SetCoverInstance, c: &[usize]) -> Result<bool> {
    let mask = check_subset(inst, c)?;
    let neg = build_gamma(inst)?.negate();
    Ok(neg
        .support()
        .iter()
        .zip(neg.values())
        .all(|(x, &v)| !x.intersects(&mask) == v))
}
