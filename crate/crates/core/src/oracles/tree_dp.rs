//! Exact optimal decision trees by dynamic programming over atom sets.
//!
//! A subproblem is the set of distribution atoms consistent with a path
//! (as a bitset over atoms) plus the remaining budget. Each subproblem keeps
//! the Pareto frontier of `(error, abort, depth)` mass over all trees it can
//! still grow, so constrained objectives such as "least error with abort
//! mass below δ" are answered exactly instead of greedily.

use std::collections::HashMap;
use std::sync::Arc;

use num_rational::BigRational;

use crate::bits::BitString;
use crate::construction::LabeledDistribution;
use crate::error::{guard, Result};
use crate::hypotheses::{DecisionTree, Leaf};
use crate::par::{self, Exec};
use super::Guards;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Budget {
    /// Remaining depth.
    Depth(usize),
    /// Maximum number of leaves.
    Leaves(usize),
    /// Any reduced tree; splits must separate atoms, so recursion terminates.
    Unbounded,
}

impl Budget {
    fn key(self) -> usize {
        match self {
            Budget::Depth(b) | Budget::Leaves(b) => b,
            Budget::Unbounded => 0,
        }
    }

    /// Child budget pairs available for one split.
    fn splits(self) -> Vec<(Budget, Budget)> {
        match self {
            Budget::Depth(0) => vec![],
            Budget::Depth(b) => vec![(Budget::Depth(b - 1), Budget::Depth(b - 1))],
            Budget::Leaves(s) if s < 2 => vec![],
            Budget::Leaves(s) => (1..s).map(|l| (Budget::Leaves(l), Budget::Leaves(s - l))).collect(),
            Budget::Unbounded => vec![(Budget::Unbounded, Budget::Unbounded)],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum How {
    Leaf(Leaf),
    Split {
        var: usize,
        lo_budget: Budget,
        lo: usize,
        hi_budget: Budget,
        hi: usize,
    },
}

/// Masses are numerators over the target's denominator. `depth` is the
/// expected depth numerator; it is tracked only when requested.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Point {
    pub err: u128,
    pub abort: u128,
    pub depth: u128,
    how: How,
}

impl Point {
    fn dominates(&self, other: &Point) -> bool {
        self.err <= other.err && self.abort <= other.abort && self.depth <= other.depth
    }
}

/// Inserts keeping only non-dominated points; among equal points the earlier wins.
fn insert(front: &mut Vec<Point>, p: Point) {
    if front.iter().any(|q| q.dominates(&p)) {
        return;
    }
    front.retain(|q| !p.dominates(q));
    front.push(p);
}

pub(crate) struct Engine<'a> {
    target: &'a LabeledDistribution,
    allow_abort: bool,
    track_depth: bool,
    /// Per variable, the atoms with that bit set.
    ones: Vec<BitString>,
    memo: HashMap<(BitString, usize), Arc<Vec<Point>>>,
}

fn and(a: &BitString, b: &BitString) -> BitString {
    BitString::from_bools(a.iter().zip(b.iter()).map(|(x, y)| x && y))
}

fn and_not(a: &BitString, b: &BitString) -> BitString {
    BitString::from_bools(a.iter().zip(b.iter()).map(|(x, y)| x && !y))
}

impl<'a> Engine<'a> {
    pub(crate) fn new(target: &'a LabeledDistribution, allow_abort: bool, track_depth: bool) -> Self {
        let ones = (0..target.arity)
            .map(|v| BitString::from_bools(target.atoms.iter().map(|x| x.get(v))))
            .collect();
        Engine {
            target,
            allow_abort,
            track_depth,
            ones,
            memo: HashMap::new(),
        }
    }

    fn masses(&self, set: &BitString) -> (u128, u128) {
        let (mut m0, mut m1) = (0, 0);
        for i in set.ones_positions() {
            if self.target.labels[i] {
                m1 += self.target.weights[i];
            } else {
                m0 += self.target.weights[i];
            }
        }
        (m0, m1)
    }

    fn leaf_points(&self, set: &BitString) -> Vec<Point> {
        let (m0, m1) = self.masses(set);
        let mut front = Vec::new();
        let leaf = |err, abort, l| Point {
            err,
            abort,
            depth: 0,
            how: How::Leaf(l),
        };
        // Majority label; ties go to 0.
        if m1 > m0 {
            insert(&mut front, leaf(m0, 0, Leaf::One));
            insert(&mut front, leaf(m1, 0, Leaf::Zero));
        } else {
            insert(&mut front, leaf(m1, 0, Leaf::Zero));
            insert(&mut front, leaf(m0, 0, Leaf::One));
        }
        if self.allow_abort {
            insert(&mut front, leaf(0, m0 + m1, Leaf::Abort));
        }
        front
    }

    /// Split outcomes for `var`, or `None` when `var` does not separate `set`.
    fn children(&self, set: &BitString, var: usize) -> Option<(BitString, BitString)> {
        let hi = and(set, &self.ones[var]);
        if hi.is_zero() {
            return None;
        }
        let lo = and_not(set, &self.ones[var]);
        if lo.is_zero() {
            return None;
        }
        Some((lo, hi))
    }

    pub(crate) fn split_points(&mut self, set: &BitString, budget: Budget, var: usize) -> Vec<Point> {
        let mut front = Vec::new();
        let Some((lo_set, hi_set)) = self.children(set, var) else {
            return front;
        };
        let here = if self.track_depth {
            let (m0, m1) = self.masses(set);
            m0 + m1
        } else {
            0
        };
        for (lb, hb) in budget.splits() {
            let lo = self.frontier(&lo_set, lb);
            let hi = self.frontier(&hi_set, hb);
            for (li, a) in lo.iter().enumerate() {
                for (hi_i, b) in hi.iter().enumerate() {
                    insert(
                        &mut front,
                        Point {
                            err: a.err + b.err,
                            abort: a.abort + b.abort,
                            depth: a.depth + b.depth + here,
                            how: How::Split {
                                var,
                                lo_budget: lb,
                                lo: li,
                                hi_budget: hb,
                                hi: hi_i,
                            },
                        },
                    );
                }
            }
        }
        front
    }

    pub(crate) fn frontier(&mut self, set: &BitString, budget: Budget) -> Arc<Vec<Point>> {
        let key = (set.clone(), budget.key());
        if let Some(f) = self.memo.get(&key) {
            return f.clone();
        }
        let mut front = self.leaf_points(set);
        // A pure set is solved by a leaf; nothing can beat (0, 0, 0).
        let solved = front.iter().any(|p| p.err == 0 && p.abort == 0);
        if !solved && !budget.splits().is_empty() {
            for var in 0..self.target.arity {
                for p in self.split_points(set, budget, var) {
                    insert(&mut front, p);
                }
            }
        }
        let front = Arc::new(front);
        self.memo.insert(key, front.clone());
        front
    }

    pub(crate) fn build(&self, set: &BitString, point: &Point) -> DecisionTree {
        match point.how {
            How::Leaf(l) => DecisionTree::leaf(l),
            How::Split {
                var,
                lo_budget,
                lo,
                hi_budget,
                hi,
            } => {
                let (lo_set, hi_set) = self.children(set, var).expect("recorded split separates");
                let lo_pt = self.memo[&(lo_set.clone(), lo_budget.key())][lo];
                let hi_pt = self.memo[&(hi_set.clone(), hi_budget.key())][hi];
                DecisionTree::node(
                    var,
                    self.build(&lo_set, &lo_pt),
                    self.build(&hi_set, &hi_pt),
                )
            }
        }
    }
}

/// Root frontier with each point's tree, computed with one engine per root
/// variable so the variables can be explored in parallel. The merge order
/// (leaves, then variables ascending) matches the sequential order exactly.
pub(crate) fn root_frontier(
    target: &LabeledDistribution,
    budget: Budget,
    allow_abort: bool,
    track_depth: bool,
    exec: Exec,
) -> Vec<(Point, DecisionTree)> {
    let all = BitString::ones(target.len());
    let leaf_engine = Engine::new(target, allow_abort, track_depth);
    let mut front: Vec<(Point, Option<usize>)> = leaf_engine.leaf_points(&all).into_iter().map(|p| (p, None)).collect();
    let solved = front.iter().any(|(p, _)| p.err == 0 && p.abort == 0);
    let vars: Vec<usize> = if solved || budget.splits().is_empty() {
        Vec::new()
    } else {
        (0..target.arity).collect()
    };
    let per_var = par::map(exec, &vars, |&v| {
        let mut e = Engine::new(target, allow_abort, track_depth);
        let pts = e.split_points(&all, budget, v);
        (pts, e)
    });
    for (v, (pts, _)) in per_var.iter().enumerate() {
        for p in pts {
            if front.iter().any(|(q, _)| q.dominates(p)) {
                continue;
            }
            front.retain(|(q, _)| !p.dominates(q));
            front.push((*p, Some(v)));
        }
    }
    front
        .into_iter()
        .map(|(p, owner)| {
            let tree = match owner {
                None => leaf_engine.build(&all, &p),
                Some(v) => per_var[v].1.build(&all, &p),
            };
            (p, tree)
        })
        .collect()
}

/// Constraint on the abort mass of admissible trees.
#[derive(Clone, Debug, PartialEq)]
pub enum AbortBudget {
    AtMost(BigRational),
    Below(BigRational),
}

impl AbortBudget {
    fn admits(&self, mass: &BigRational) -> bool {
        match self {
            AbortBudget::AtMost(d) => mass <= d,
            AbortBudget::Below(d) => mass < d,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeOptimum {
    pub tree: DecisionTree,
    pub error: BigRational,
    pub abort: BigRational,
}

fn select(target: &LabeledDistribution, front: Vec<(Point, DecisionTree)>, abort: Option<&AbortBudget>) -> TreeOptimum {
    let best = front
        .into_iter()
        .filter(|(p, _)| abort.is_none_or(|a| a.admits(&target.to_rational(p.abort))))
        .min_by_key(|(p, _)| (p.err, p.abort, p.depth))
        .expect("the all-0 leaf never aborts");
    TreeOptimum {
        tree: best.1,
        error: target.to_rational(best.0.err),
        abort: target.to_rational(best.0.abort),
    }
}

/// Least-error tree of depth at most `depth_budget`; aborting leaves are
/// allowed when `abort` is given, within that abort mass.
pub fn opt_tree_dp(
    target: &LabeledDistribution,
    depth_budget: usize,
    abort: Option<&AbortBudget>,
    guards: &Guards,
    exec: Exec,
) -> Result<TreeOptimum> {
    guard("dp.max_vars", target.arity, guards.dp_max_vars)?;
    guard("dp.max_depth", depth_budget, guards.dp_max_depth)?;
    let front = root_frontier(target, Budget::Depth(depth_budget), abort.is_some(), false, exec);
    Ok(select(target, front, abort))
}

/// Least-error tree with at most `max_leaves` leaves.
pub fn opt_tree_by_size(
    target: &LabeledDistribution,
    max_leaves: usize,
    abort: Option<&AbortBudget>,
    guards: &Guards,
    exec: Exec,
) -> Result<TreeOptimum> {
    guard("size_dp.max_vars", target.arity, guards.dp_max_vars)?;
    guard("size_dp.max_leaves", max_leaves, guards.size_dp_max_leaves)?;
    if max_leaves == 0 {
        return Err(crate::error::Error::InvalidParameter("a tree has at least one leaf".into()));
    }
    let front = root_frontier(target, Budget::Leaves(max_leaves), abort.is_some(), false, exec);
    Ok(select(target, front, abort))
}

/// One Pareto-optimal tree over all reduced trees.
#[derive(Clone, Debug, PartialEq)]
pub struct FrontierPoint {
    pub error: BigRational,
    pub abort: BigRational,
    pub avg_depth: BigRational,
    pub tree: DecisionTree,
}

/// Pareto frontier of `(error, expected depth[, abort])` over every reduced tree.
pub fn depth_error_frontier(
    target: &LabeledDistribution,
    allow_abort: bool,
    guards: &Guards,
    exec: Exec,
) -> Result<Vec<FrontierPoint>> {
    guard("frontier.max_atoms", target.len(), guards.frontier_max_atoms)?;
    guard("frontier.max_vars", target.arity, guards.dp_max_vars)?;
    let mut out: Vec<FrontierPoint> = root_frontier(target, Budget::Unbounded, allow_abort, true, exec)
        .into_iter()
        .map(|(p, tree)| FrontierPoint {
            error: target.to_rational(p.err),
            abort: target.to_rational(p.abort),
            avg_depth: target.to_rational(p.depth),
            tree,
        })
        .collect();
    out.sort_by(|a, b| (&a.avg_depth, &a.error, &a.abort).cmp(&(&b.avg_depth, &b.error, &b.abort)));
    Ok(out)
}

/// Least error among frontier trees with expected depth `< depth_below`
/// (and abort mass `< abort_below` when given).
pub fn min_error_below_depth<'f>(
    frontier: &'f [FrontierPoint],
    depth_below: &BigRational,
    abort_below: Option<&BigRational>,
) -> Option<&'f FrontierPoint> {
    frontier
        .iter()
        .filter(|p| &p.avg_depth < depth_below && abort_below.is_none_or(|a| &p.abort < a))
        .min_by(|a, b| a.error.cmp(&b.error))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio;
    use crate::amplification::{amplified_target, base_target};
    use crate::fixtures;
    use crate::hypotheses::{abort_weight, cost_weight, error_weight};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_trees(vars: usize, depth: usize, allow_abort: bool) -> Vec<DecisionTree> {
        let mut leaves = vec![DecisionTree::constant(false), DecisionTree::constant(true)];
        if allow_abort {
            leaves.push(DecisionTree::abort());
        }
        if depth == 0 {
            return leaves;
        }
        let sub = brute_trees(vars, depth - 1, allow_abort);
        let mut out = leaves;
        for v in 0..vars {
            for a in &sub {
                for b in &sub {
                    out.push(DecisionTree::node(v, a.clone(), b.clone()));
                }
            }
        }
        out
    }

    /// Every tree with exactly `leaves` leaves (labels 0/1).
    fn trees_with_leaves(vars: usize, leaves: usize) -> Vec<DecisionTree> {
        if leaves == 1 {
            return vec![DecisionTree::constant(false), DecisionTree::constant(true)];
        }
        let mut out = Vec::new();
        for l in 1..leaves {
            let lo = trees_with_leaves(vars, l);
            let hi = trees_with_leaves(vars, leaves - l);
            for v in 0..vars {
                for a in &lo {
                    for b in &hi {
                        out.push(DecisionTree::node(v, a.clone(), b.clone()));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn one_by_one_examples() {
        let g = Guards::default();
        let base = base_target(&fixtures::one_by_one(), false).unwrap();
        assert_eq!(opt_tree_dp(&base, 0, None, &g, Exec::Sequential).unwrap().error, ratio::ratio(1, 2));
        let r = opt_tree_dp(&base, 1, None, &g, Exec::Sequential).unwrap();
        assert_eq!(r.error, ratio::int(0));
        assert_eq!(r.tree, DecisionTree::node(0, DecisionTree::constant(false), DecisionTree::constant(true)));
        let amp = amplified_target(&fixtures::one_by_one(), 2, false, 20).unwrap();
        assert!(opt_tree_dp(&amp, 1, None, &g, Exec::Sequential).unwrap().error > ratio::int(0));
        assert_eq!(opt_tree_dp(&amp, 2, None, &g, Exec::Parallel).unwrap().error, ratio::int(0));
        assert_eq!(opt_tree_dp(&base, 0, None, &g, Exec::Sequential).unwrap().tree, DecisionTree::constant(false));
    }

    #[test]
    fn guards_are_enforced() {
        let g = Guards { dp_max_depth: 2, ..Guards::default() };
        let base = base_target(&fixtures::five_by_four(), false).unwrap();
        assert!(opt_tree_dp(&base, 3, None, &g, Exec::Sequential).is_err());
    }

    #[test]
    fn abort_budget_is_respected_exactly() {
        let g = Guards::default();
        let base = base_target(&fixtures::five_by_four(), false).unwrap();
        // Depth 0: aborting everything is free of error but has mass 1.
        let r = opt_tree_dp(&base, 0, Some(&AbortBudget::AtMost(ratio::int(1))), &g, Exec::Sequential).unwrap();
        assert_eq!((r.error, r.abort), (ratio::int(0), ratio::int(1)));
        let r = opt_tree_dp(&base, 1, Some(&AbortBudget::Below(ratio::ratio(1, 2))), &g, Exec::Sequential).unwrap();
        assert!(r.abort < ratio::ratio(1, 2));
        assert_eq!(target_abort(&r.tree, &base), r.abort);
        assert_eq!(base.to_rational(error_weight(&r.tree, &base).unwrap()), r.error);
    }

    fn target_abort(t: &DecisionTree, target: &LabeledDistribution) -> BigRational {
        target.to_rational(abort_weight(t, target).unwrap())
    }

    #[test]
    fn dp_matches_brute_force_on_small_targets() {
        let g = Guards::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let vars = 3;
            let atoms: Vec<BitString> = BitString::all(vars).filter(|_| rng.random_bool(0.7)).collect();
            if atoms.is_empty() {
                continue;
            }
            let weights: Vec<u128> = atoms.iter().map(|_| rng.random_range(1..5)).collect();
            let target = LabeledDistribution {
                arity: vars,
                denominator: weights.iter().sum(),
                labels: atoms.iter().map(|_| rng.random()).collect(),
                atoms,
                weights,
            };
            let delta = ratio::ratio(rng.random_range(0..4), 8);
            for depth in 0..=2 {
                let trees = brute_trees(vars, depth, false);
                let best = trees.iter().map(|t| error_weight(t, &target).unwrap()).min().unwrap();
                let r = opt_tree_dp(&target, depth, None, &g, Exec::Parallel).unwrap();
                assert_eq!(r.error, target.to_rational(best));
                assert!(r.tree.depth() <= depth);

                let budget = AbortBudget::AtMost(delta.clone());
                let best_abort = brute_trees(vars, depth, true)
                    .iter()
                    .filter(|t| target_abort(t, &target) <= delta)
                    .map(|t| error_weight(t, &target).unwrap())
                    .min()
                    .unwrap();
                let r = opt_tree_dp(&target, depth, Some(&budget), &g, Exec::Sequential).unwrap();
                assert_eq!(r.error, target.to_rational(best_abort));
                assert!(r.abort <= delta);
            }
            for leaves in 1..=4 {
                let best = (1..=leaves)
                    .flat_map(|l| trees_with_leaves(vars, l))
                    .map(|t| error_weight(&t, &target).unwrap())
                    .min()
                    .unwrap();
                let r = opt_tree_by_size(&target, leaves, None, &g, Exec::Parallel).unwrap();
                assert_eq!(r.error, target.to_rational(best), "leaves {leaves}");
                assert!(r.tree.size() <= leaves);
            }
        }
    }

    #[test]
    fn frontier_points_are_achieved_by_their_trees() {
        let g = Guards::default();
        let base = base_target(&fixtures::five_by_four(), false).unwrap();
        for abort in [false, true] {
            let front = depth_error_frontier(&base, abort, &g, Exec::Parallel).unwrap();
            assert!(!front.is_empty());
            for p in &front {
                assert_eq!(base.to_rational(error_weight(&p.tree, &base).unwrap()), p.error);
                assert_eq!(base.to_rational(cost_weight(&p.tree, &base).unwrap()), p.avg_depth);
                assert_eq!(target_abort(&p.tree, &base), p.abort);
            }
            // An exact tree needs a cover on the zero path: depth mass >= 2 · 1/2.
            let exact = front.iter().filter(|p| p.error == ratio::int(0) && p.abort == ratio::int(0));
            assert!(exact.clone().all(|p| p.avg_depth >= ratio::int(1)));
            assert!(exact.count() > 0);
        }
    }

    #[test]
    fn modes_agree() {
        let g = Guards::default();
        let amp = amplified_target(&fixtures::five_by_four(), 2, false, 20).unwrap();
        for d in 0..=2 {
            let a = opt_tree_dp(&amp, d, None, &g, Exec::Sequential).unwrap();
            let b = opt_tree_dp(&amp, d, None, &g, Exec::Parallel).unwrap();
            assert_eq!(a, b);
        }
    }
}
