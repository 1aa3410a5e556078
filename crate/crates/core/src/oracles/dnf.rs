//! Exhaustive DNF oracles.

use std::collections::{HashMap, VecDeque};

use num_rational::BigRational;

use crate::construction::LabeledDistribution;
use crate::error::{guard, Error, Result};
use crate::hypotheses::{Dnf, Literal, Term};
use crate::par::{self, Exec};

use super::Guards;

/// Every term over `vars` variables with width at most `max_width`, ordered
/// by width, then variable set (lexicographic), then sign pattern (positive first).
fn all_terms(vars: usize, max_width: usize) -> Vec<Term> {
    fn subsets(vars: usize, w: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == w {
            out.push(cur.clone());
            return;
        }
        for v in start..vars {
            cur.push(v);
            subsets(vars, w, v + 1, cur, out);
            cur.pop();
        }
    }
    let mut terms = Vec::new();
    for w in 0..=max_width.min(vars) {
        let mut sets = Vec::new();
        subsets(vars, w, 0, &mut Vec::new(), &mut sets);
        for set in sets {
            for signs in 0..1u64 << w {
                let lits = set
                    .iter()
                    .enumerate()
                    .map(|(i, &var)| Literal {
                        var,
                        positive: (signs >> (w - 1 - i)) & 1 == 0,
                    })
                    .collect();
                terms.push(Term::new(lits).expect("distinct variables"));
            }
        }
    }
    terms
}

type Mask = Vec<u64>;

fn accept_mask(t: &Term, target: &LabeledDistribution) -> Mask {
    let mut m = vec![0u64; target.len().div_ceil(64)];
    for (i, x) in target.atoms.iter().enumerate() {
        if t.literals().iter().all(|l| x.get(l.var) == l.positive) {
            m[i / 64] |= 1 << (i % 64);
        }
    }
    m
}

struct Scorer {
    ones: Mask,
    weights: Vec<u128>,
    ones_total: u128,
}

impl Scorer {
    fn new(target: &LabeledDistribution) -> Self {
        let mut ones = vec![0u64; target.len().div_ceil(64)];
        for (i, &l) in target.labels.iter().enumerate() {
            if l {
                ones[i / 64] |= 1 << (i % 64);
            }
        }
        Scorer {
            ones,
            weights: target.weights.clone(),
            ones_total: target.label_mass(true),
        }
    }

    fn mass(&self, m: &Mask, label: bool) -> u128 {
        let mut total = 0;
        for (k, (&word, &ones)) in m.iter().zip(&self.ones).enumerate() {
            let mut bits = word & if label { ones } else { !ones };
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                total += self.weights[k * 64 + b];
                bits &= bits - 1;
            }
        }
        total
    }

    /// Disagreement mass of a DNF accepting exactly `m`.
    fn error(&self, m: &Mask) -> u128 {
        self.mass(m, false) + self.ones_total - self.mass(m, true)
    }

    /// `a` is at least as good as `b` inside any disjunction.
    fn dominates(&self, a: &Mask, b: &Mask) -> bool {
        a.iter().zip(b).zip(&self.ones).all(|((&x, &y), &o)| {
            // accepts every 1-atom `b` accepts and no 0-atom `b` rejects
            (y & o) & !x == 0 && (x & !o) & !y == 0
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DnfOptimum {
    pub dnf: Dnf,
    pub error: BigRational,
}

/// Minimum disagreement over all DNFs with at most `max_terms` terms of
/// width at most `max_width`.
///
/// Terms with identical accepted atom sets are merged (first in canonical
/// order kept) and terms that another term dominates are dropped; neither
/// step changes the minimum. The search is branch and bound over term
/// tuples, bounded by the 0-label mass already accepted.
pub fn min_dist_dnf(
    target: &LabeledDistribution,
    max_terms: usize,
    max_width: usize,
    guards: &Guards,
    exec: Exec,
) -> Result<DnfOptimum> {
    guard("dnf.max_vars", target.arity, guards.dnf_max_vars)?;
    guard("dnf.max_terms", max_terms, guards.dnf_max_terms)?;
    if max_width > target.arity {
        return Err(Error::InvalidParameter(format!(
            "width cap {max_width} exceeds arity {}",
            target.arity
        )));
    }
    let scorer = Scorer::new(target);
    let mut seen: HashMap<Mask, ()> = HashMap::new();
    let mut cands: Vec<(Term, Mask)> = Vec::new();
    for t in all_terms(target.arity, max_width) {
        let m = accept_mask(&t, target);
        if seen.insert(m.clone(), ()).is_none() {
            cands.push((t, m));
        }
    }
    let keep: Vec<bool> = par::map(exec, &(0..cands.len()).collect::<Vec<_>>(), |&i| {
        !cands
            .iter()
            .enumerate()
            .any(|(j, (_, m))| j != i && scorer.dominates(m, &cands[i].1))
    });
    let cands: Vec<(Term, Mask)> = cands.into_iter().zip(keep).filter(|(_, k)| *k).map(|(c, _)| c).collect();

    // (error, chosen indices)
    let empty = vec![0u64; target.len().div_ceil(64)];
    let mut best: (u128, Vec<usize>) = (scorer.error(&empty), Vec::new());
    if max_terms >= 1 {
        for (i, (_, m)) in cands.iter().enumerate() {
            let e = scorer.error(m);
            if e < best.0 {
                best = (e, vec![i]);
            }
        }
    }
    if max_terms >= 2 && best.0 > 0 {
        let bound = best.0;
        let firsts: Vec<usize> = (0..cands.len()).collect();
        let per_first = par::map(exec, &firsts, |&i| {
            let mut local: Option<(u128, Vec<usize>)> = None;
            let mut chosen = vec![i];
            extend(&scorer, &cands, &cands[i].1, &mut chosen, max_terms, bound, &mut local);
            local
        });
        for (e, idx) in per_first.into_iter().flatten() {
            if (e, idx.len(), &idx) < (best.0, best.1.len(), &best.1) {
                best = (e, idx);
            }
        }
    }
    let dnf = Dnf::new(best.1.iter().map(|&i| cands[i].0.clone()).collect());
    Ok(DnfOptimum {
        dnf,
        error: target.to_rational(best.0),
    })
}

fn extend(
    scorer: &Scorer,
    cands: &[(Term, Mask)],
    union: &Mask,
    chosen: &mut Vec<usize>,
    max_terms: usize,
    bound: u128,
    best: &mut Option<(u128, Vec<usize>)>,
) {
    if chosen.len() == max_terms {
        return;
    }
    let start = *chosen.last().expect("nonempty") + 1;
    for k in start..cands.len() {
        let u: Mask = union.iter().zip(&cands[k].1).map(|(a, b)| a | b).collect();
        let limit = best.as_ref().map_or(bound, |b| b.0);
        if scorer.mass(&u, false) >= limit {
            continue;
        }
        chosen.push(k);
        let e = scorer.error(&u);
        if e < limit {
            *best = Some((e, chosen.clone()));
        }
        if e > 0 {
            extend(scorer, cands, &u, chosen, max_terms, bound, best);
        }
        chosen.pop();
    }
}

/// One Pareto-optimal DNF behaviour on a target: disagreement versus
/// expected width (width of the narrowest accepting term, 0 if rejected).
#[derive(Clone, Debug, PartialEq)]
pub struct WidthPoint {
    pub error: BigRational,
    pub avg_width: BigRational,
    pub dnf: Dnf,
}

/// Pareto frontier of `(error, expected width)` over every DNF on the
/// target's variables.
///
/// A DNF acts on the support only through, for each atom, the width of its
/// narrowest accepting term; the reachable per-atom width vectors are the
/// closure of single-term vectors under pointwise minimum, so they are
/// enumerated exactly.
pub fn width_error_frontier(target: &LabeledDistribution, guards: &Guards) -> Result<Vec<WidthPoint>> {
    guard("width_frontier.max_vars", target.arity, guards.dnf_max_vars)?;
    guard("width_frontier.max_atoms", target.len(), guards.frontier_max_atoms)?;
    const NONE: u8 = u8::MAX;
    let atoms = target.len();
    let mut by_accept: HashMap<u64, usize> = HashMap::new();
    let mut gens: Vec<(Term, Vec<u8>)> = Vec::new();
    for t in all_terms(target.arity, target.arity) {
        let acc = accept_mask(&t, target)[0];
        if acc == 0 || by_accept.contains_key(&acc) {
            // all_terms is width-ordered, so the first term per set is narrowest
            continue;
        }
        by_accept.insert(acc, gens.len());
        let vec = (0..atoms).map(|i| if acc >> i & 1 == 1 { t.width() as u8 } else { NONE }).collect();
        gens.push((t, vec));
    }

    let start = vec![NONE; atoms];
    let mut states: HashMap<Vec<u8>, Vec<usize>> = HashMap::from([(start.clone(), Vec::new())]);
    let mut order = vec![start.clone()];
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        let terms = states[&s].clone();
        for (g, (_, v)) in gens.iter().enumerate() {
            let next: Vec<u8> = s.iter().zip(v).map(|(&a, &b)| a.min(b)).collect();
            if !states.contains_key(&next) {
                let mut t = terms.clone();
                t.push(g);
                states.insert(next.clone(), t);
                order.push(next.clone());
                queue.push_back(next);
            }
        }
    }

    let mut front: Vec<(u128, u128, &Vec<u8>)> = Vec::new();
    for s in &order {
        let (mut err, mut width) = (0u128, 0u128);
        for ((&w, &label), &min_width) in target.weights.iter().zip(&target.labels).zip(s.iter()) {
            let accepted = min_width != NONE;
            if accepted != label {
                err += w;
            }
            if accepted {
                width += w * min_width as u128;
            }
        }
        if front.iter().any(|&(e, w, _)| e <= err && w <= width) {
            continue;
        }
        front.retain(|&(e, w, _)| !(err <= e && width <= w));
        front.push((err, width, s));
    }
    front.sort_by_key(|&(e, w, _)| (w, e));
    Ok(front
        .into_iter()
        .map(|(e, w, s)| WidthPoint {
            error: target.to_rational(e),
            avg_width: target.to_rational(w),
            dnf: Dnf::new(states[s].iter().map(|&g| gens[g].0.clone()).collect()),
        })
        .collect())
}
