use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bits::BitString;
use crate::error::{Error, Result};

use super::{Classifier, Leaf, TraceResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Literal { var, positive: true }
    }

    pub fn neg(var: usize) -> Self {
        Literal { var, positive: false }
    }

    /// 1-based signed form: `x3` is `3`, `¬x3` is `-3` (for variable index 2).
    pub fn signed(self) -> i64 {
        let v = self.var as i64 + 1;
        if self.positive {
            v
        } else {
            -v
        }
    }

    pub fn from_signed(s: i64) -> Result<Self> {
        if s == 0 {
            return Err(Error::Malformed("literal 0 is not allowed".into()));
        }
        Ok(Literal {
            var: (s.unsigned_abs() - 1) as usize,
            positive: s > 0,
        })
    }
}

/// Conjunction of literals over distinct variables, kept sorted by variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term(Vec<Literal>);

impl Term {
    pub fn new(mut literals: Vec<Literal>) -> Result<Self> {
        literals.sort();
        if literals.windows(2).any(|w| w[0].var == w[1].var) {
            return Err(Error::Malformed("term mentions a variable twice".into()));
        }
        Ok(Term(literals))
    }

    pub fn literals(&self) -> &[Literal] {
        &self.0
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }

    pub fn accepts(&self, x: &BitString) -> Result<bool> {
        for l in &self.0 {
            if l.var >= x.len() {
                return Err(Error::IndexOutOfRange {
                    index: l.var,
                    bound: x.len(),
                });
            }
        }
        Ok(self.0.iter().all(|l| x.get(l.var) == l.positive))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Dnf {
    terms: Vec<Term>,
}

impl Dnf {
    pub fn new(terms: Vec<Term>) -> Self {
        Dnf { terms }
    }

    /// The empty disjunction (constant 0).
    pub fn falsum() -> Self {
        Dnf::default()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn size(&self) -> usize {
        self.terms.len()
    }

    pub fn max_var(&self) -> Option<usize> {
        self.terms.iter().flat_map(|t| t.0.iter().map(|l| l.var)).max()
    }

    pub fn eval(&self, x: &BitString) -> Result<bool> {
        for t in &self.terms {
            if t.accepts(x)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Index of the narrowest accepting term, lowest index on ties.
    pub fn min_accepting_term(&self, x: &BitString) -> Result<Option<usize>> {
        let mut best: Option<usize> = None;
        for (i, t) in self.terms.iter().enumerate() {
            if t.accepts(x)? && best.is_none_or(|b| t.width() < self.terms[b].width()) {
                best = Some(i);
            }
        }
        Ok(best)
    }

    /// Width of the narrowest accepting term (0 when rejected); with a block
    /// shape `(n, ℓ)`, per-position literal counts of that term.
    pub fn trace(&self, x: &BitString, shape: Option<(usize, usize)>) -> Result<TraceResult> {
        if let Some((n, ell)) = shape {
            if n * ell != x.len() {
                return Err(Error::ArityMismatch {
                    expected: n * ell,
                    found: x.len(),
                });
            }
        }
        let mut per_position = vec![0; shape.map_or(0, |(_, ell)| ell)];
        match self.min_accepting_term(x)? {
            None => Ok(TraceResult {
                label: Leaf::Zero,
                cost: 0,
                per_position,
            }),
            Some(i) => {
                let t = &self.terms[i];
                if let Some((_, ell)) = shape {
                    for l in t.literals() {
                        per_position[l.var % ell] += 1;
                    }
                }
                Ok(TraceResult {
                    label: Leaf::One,
                    cost: t.width(),
                    per_position,
                })
            }
        }
    }

    /// Signed 1-based literal lists.
    pub fn to_signed(&self) -> Vec<Vec<i64>> {
        self.terms
            .iter()
            .map(|t| t.literals().iter().map(|l| l.signed()).collect())
            .collect()
    }

    pub fn from_signed(terms: &[Vec<i64>]) -> Result<Self> {
        terms
            .iter()
            .map(|t| t.iter().map(|&s| Literal::from_signed(s)).collect::<Result<Vec<_>>>().and_then(Term::new))
            .collect::<Result<Vec<_>>>()
            .map(Dnf::new)
    }

    /// Variables mentioned anywhere.
    pub fn variables(&self) -> BTreeSet<usize> {
        self.terms.iter().flat_map(|t| t.0.iter().map(|l| l.var)).collect()
    }
}

impl fmt::Display for Dnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|t| {
                if t.0.is_empty() {
                    "1".to_string()
                } else {
                    t.0.iter()
                        .map(|l| format!("{}x{}", if l.positive { "" } else { "!" }, l.var))
                        .collect::<Vec<_>>()
                        .join("&")
                }
            })
            .collect();
        f.write_str(&parts.join(" | "))
    }
}

impl Serialize for Dnf {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_signed().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Dnf {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<Vec<i64>>::deserialize(d)?;
        Dnf::from_signed(&raw).map_err(serde::de::Error::custom)
    }
}

impl Classifier for Dnf {
    fn classify(&self, x: &BitString) -> Result<Leaf> {
        self.eval(x).map(Leaf::from_bool)
    }

    fn cost(&self, x: &BitString) -> Result<usize> {
        Ok(self.trace(x, None)?.cost)
    }

    fn size(&self) -> usize {
        Dnf::size(self)
    }
}
