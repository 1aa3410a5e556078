use std::collections::HashSet;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

use crate::bits::BitString;
use crate::error::{Error, Result};

use super::{Classifier, TraceResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Leaf {
    Zero,
    One,
    Abort,
}

impl Leaf {
    pub fn from_bool(b: bool) -> Leaf {
        if b {
            Leaf::One
        } else {
            Leaf::Zero
        }
    }

    /// `None` for an abort.
    pub fn bit(self) -> Option<bool> {
        match self {
            Leaf::Zero => Some(false),
            Leaf::One => Some(true),
            Leaf::Abort => None,
        }
    }
}

/// Binary decision tree with `{0, 1, ⊥}` leaves; `lo` is the 0-branch.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum DecisionTree {
    Leaf(Leaf),
    Node {
        var: usize,
        lo: Box<DecisionTree>,
        hi: Box<DecisionTree>,
    },
}

/// A root-to-leaf path: queried variables with the values taken, then the label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafPath {
    pub assignments: Vec<(usize, bool)>,
    pub label: Leaf,
}

impl DecisionTree {
    pub fn leaf(label: Leaf) -> Self {
        DecisionTree::Leaf(label)
    }

    pub fn constant(value: bool) -> Self {
        DecisionTree::Leaf(Leaf::from_bool(value))
    }

    pub fn abort() -> Self {
        DecisionTree::Leaf(Leaf::Abort)
    }

    pub fn node(var: usize, lo: DecisionTree, hi: DecisionTree) -> Self {
        DecisionTree::Node {
            var,
            lo: Box::new(lo),
            hi: Box::new(hi),
        }
    }

    /// Complete tree querying `vars` in order on every path; leaves come from
    /// `label` applied to the values read (in `vars` order).
    pub fn complete(vars: &[usize], label: &dyn Fn(&[bool]) -> Leaf) -> Self {
        fn go(vars: &[usize], read: &mut Vec<bool>, label: &dyn Fn(&[bool]) -> Leaf) -> DecisionTree {
            match vars.split_first() {
                None => DecisionTree::leaf(label(read)),
                Some((&v, rest)) => {
                    read.push(false);
                    let lo = go(rest, read, label);
                    read.pop();
                    read.push(true);
                    let hi = go(rest, read, label);
                    read.pop();
                    DecisionTree::node(v, lo, hi)
                }
            }
        }
        go(vars, &mut Vec::with_capacity(vars.len()), label)
    }

    /// Number of leaves.
    pub fn size(&self) -> usize {
        match self {
            DecisionTree::Leaf(_) => 1,
            DecisionTree::Node { lo, hi, .. } => lo.size() + hi.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            DecisionTree::Leaf(_) => 0,
            DecisionTree::Node { lo, hi, .. } => 1 + lo.depth().max(hi.depth()),
        }
    }

    pub fn max_var(&self) -> Option<usize> {
        match self {
            DecisionTree::Leaf(_) => None,
            DecisionTree::Node { var, lo, hi } => Some(*var).max(lo.max_var()).max(hi.max_var()),
        }
    }

    pub fn has_abort(&self) -> bool {
        match self {
            DecisionTree::Leaf(l) => *l == Leaf::Abort,
            DecisionTree::Node { lo, hi, .. } => lo.has_abort() || hi.has_abort(),
        }
    }

    pub fn eval(&self, x: &BitString) -> Result<Leaf> {
        let mut t = self;
        loop {
            match t {
                DecisionTree::Leaf(l) => return Ok(*l),
                DecisionTree::Node { var, lo, hi } => {
                    if *var >= x.len() {
                        return Err(Error::IndexOutOfRange {
                            index: *var,
                            bound: x.len(),
                        });
                    }
                    t = if x.get(*var) { hi } else { lo };
                }
            }
        }
    }

    /// Leaf label, path length and (with a block shape `(n, ℓ)`) the number of
    /// queries at each block position.
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
        let mut cost = 0;
        let mut t = self;
        loop {
            match t {
                DecisionTree::Leaf(l) => {
                    return Ok(TraceResult {
                        label: *l,
                        cost,
                        per_position,
                    })
                }
                DecisionTree::Node { var, lo, hi } => {
                    if *var >= x.len() {
                        return Err(Error::IndexOutOfRange {
                            index: *var,
                            bound: x.len(),
                        });
                    }
                    cost += 1;
                    if let Some((_, ell)) = shape {
                        per_position[var % ell] += 1;
                    }
                    t = if x.get(*var) { hi } else { lo };
                }
            }
        }
    }

    pub fn leaves(&self) -> Vec<LeafPath> {
        fn go(t: &DecisionTree, path: &mut Vec<(usize, bool)>, out: &mut Vec<LeafPath>) {
            match t {
                DecisionTree::Leaf(l) => out.push(LeafPath {
                    assignments: path.clone(),
                    label: *l,
                }),
                DecisionTree::Node { var, lo, hi } => {
                    path.push((*var, false));
                    go(lo, path, out);
                    path.pop();
                    path.push((*var, true));
                    go(hi, path, out);
                    path.pop();
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    /// True iff no variable repeats on any root-to-leaf path.
    pub fn is_reduced(&self) -> bool {
        fn go(t: &DecisionTree, seen: &mut HashSet<usize>) -> bool {
            match t {
                DecisionTree::Leaf(_) => true,
                DecisionTree::Node { var, lo, hi } => {
                    if !seen.insert(*var) {
                        return false;
                    }
                    let ok = go(lo, seen) && go(hi, seen);
                    seen.remove(var);
                    ok
                }
            }
        }
        go(self, &mut HashSet::new())
    }

    /// Equivalent tree with repeated queries on a path replaced by the branch
    /// the earlier query already fixed.
    pub fn reduced(&self) -> DecisionTree {
        fn go(t: &DecisionTree, fixed: &mut Vec<(usize, bool)>) -> DecisionTree {
            match t {
                DecisionTree::Leaf(l) => DecisionTree::Leaf(*l),
                DecisionTree::Node { var, lo, hi } => {
                    if let Some(&(_, b)) = fixed.iter().find(|(v, _)| v == var) {
                        return go(if b { hi } else { lo }, fixed);
                    }
                    fixed.push((*var, false));
                    let l = go(lo, fixed);
                    fixed.pop();
                    fixed.push((*var, true));
                    let h = go(hi, fixed);
                    fixed.pop();
                    DecisionTree::node(*var, l, h)
                }
            }
        }
        go(self, &mut Vec::new())
    }

    fn to_value(&self) -> Value {
        match self {
            DecisionTree::Leaf(Leaf::Zero) => json!({ "leaf": 0 }),
            DecisionTree::Leaf(Leaf::One) => json!({ "leaf": 1 }),
            DecisionTree::Leaf(Leaf::Abort) => json!({ "leaf": "bot" }),
            DecisionTree::Node { var, lo, hi } => json!({ "var": var, "lo": lo.to_value(), "hi": hi.to_value() }),
        }
    }

    fn from_value(v: &Value) -> std::result::Result<DecisionTree, String> {
        let obj = v.as_object().ok_or("tree node must be an object")?;
        if let Some(leaf) = obj.get("leaf") {
            if obj.len() != 1 {
                return Err("leaf objects carry only \"leaf\"".into());
            }
            return match leaf {
                Value::Number(n) if n.as_u64() == Some(0) => Ok(DecisionTree::constant(false)),
                Value::Number(n) if n.as_u64() == Some(1) => Ok(DecisionTree::constant(true)),
                Value::String(s) if s == "bot" => Ok(DecisionTree::abort()),
                other => Err(format!("bad leaf label {other}")),
            };
        }
        if obj.len() != 3 {
            return Err("internal nodes carry exactly var, lo, hi".into());
        }
        let var = obj
            .get("var")
            .and_then(Value::as_u64)
            .ok_or("internal node needs an integer \"var\"")? as usize;
        let lo = Self::from_value(obj.get("lo").ok_or("missing \"lo\"")?)?;
        let hi = Self::from_value(obj.get("hi").ok_or("missing \"hi\"")?)?;
        Ok(DecisionTree::node(var, lo, hi))
    }
}

impl Serialize for DecisionTree {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_value().serialize(s)
    }
}

/// Parsing canonicalizes: repeated queries on a path are folded away.
impl<'de> Deserialize<'de> for DecisionTree {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        DecisionTree::from_value(&v)
            .map(|t| t.reduced())
            .map_err(serde::de::Error::custom)
    }
}

impl Classifier for DecisionTree {
    fn classify(&self, x: &BitString) -> Result<Leaf> {
        self.eval(x)
    }

    fn cost(&self, x: &BitString) -> Result<usize> {
        Ok(self.trace(x, None)?.cost)
    }

    fn size(&self) -> usize {
        DecisionTree::size(self)
    }
}
