//! Junta certificates and the brute-force junta learner.

use std::collections::HashMap;

use crate::construction::LabeledDistribution;
use crate::error::{guard, Error, Result};
use crate::hypotheses::{DecisionTree, Dnf, Leaf, Literal, Term};
use crate::par::{self, Exec};
use crate::setcover::SetCoverInstance;

/// The `kℓ` amplified variables belonging to the sets of `cover`, ascending.
pub fn junta_variables(cover: &[usize], ell: usize) -> Vec<usize> {
    let mut vars: Vec<usize> = cover.iter().flat_map(|&i| (0..ell).map(move |p| i * ell + p)).collect();
    vars.sort_unstable();
    vars.dedup();
    vars
}

fn check_cover(inst: &SetCoverInstance, cover: &[usize]) -> Result<()> {
    if let Some(&bad) = cover.iter().find(|&&i| i >= inst.n()) {
        return Err(Error::IndexOutOfRange { index: bad, bound: inst.n() });
    }
    Ok(())
}

/// Complete tree over the cover's blocks computing `OR_i parity(block i)`
/// (negated when `negated`). When `cover` is a set cover this equals the
/// amplified function on its support.
pub fn junta_tree(inst: &SetCoverInstance, cover: &[usize], ell: usize, negated: bool) -> Result<DecisionTree> {
    check_cover(inst, cover)?;
    let vars = junta_variables(cover, ell);
    let label = |bits: &[bool]| {
        let mut any = false;
        for block in bits.chunks(ell) {
            any |= block.iter().fold(false, |a, &b| a ^ b);
        }
        Leaf::from_bool(any != negated)
    };
    Ok(DecisionTree::complete(&vars, &label))
}

/// The negated certificate as a DNF: every block of the cover has even
/// parity. It has `2^{(ℓ-1)k}` terms, each of width `kℓ`.
pub fn junta_dnf(inst: &SetCoverInstance, cover: &[usize], ell: usize) -> Result<Dnf> {
    check_cover(inst, cover)?;
    let mut blocks: Vec<usize> = cover.to_vec();
    blocks.sort_unstable();
    blocks.dedup();
    let even: Vec<u64> = (0..1u64 << ell).filter(|a| a.count_ones() % 2 == 0).collect();
    let mut terms = vec![Vec::new()];
    for &b in &blocks {
        let mut next = Vec::with_capacity(terms.len() * even.len());
        for lits in &terms {
            for &a in &even {
                let mut l: Vec<Literal> = lits.clone();
                l.extend((0..ell).map(|p| Literal {
                    var: b * ell + p,
                    positive: a >> p & 1 == 1,
                }));
                next.push(l);
            }
        }
        terms = next;
    }
    terms.into_iter().map(Term::new).collect::<Result<Vec<_>>>().map(Dnf::new)
}

/// A consistent relevant-variable set with its induced truth table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JuntaFit {
    pub vars: Vec<usize>,
    /// Indexed little-endian by the values of `vars`; patterns that no support
    /// atom exhibits are 0.
    pub table: Vec<bool>,
}

fn k_subsets(v: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > v {
        return out;
    }
    loop {
        out.push(cur.clone());
        // advance to the next subset in lexicographic order
        let Some(i) = (0..k).rev().find(|&i| cur[i] < v - k + i) else {
            return out;
        };
        cur[i] += 1;
        for t in i + 1..k {
            cur[t] = cur[t - 1] + 1;
        }
    }
}

fn fit(target: &LabeledDistribution, vars: &[usize]) -> Option<JuntaFit> {
    let mut seen: HashMap<usize, bool> = HashMap::new();
    for (x, &label) in target.atoms.iter().zip(&target.labels) {
        let key = vars.iter().enumerate().fold(0usize, |acc, (p, &v)| acc | (x.get(v) as usize) << p);
        if *seen.entry(key).or_insert(label) != label {
            return None;
        }
    }
    let mut table = vec![false; 1 << vars.len()];
    for (k, l) in seen {
        table[k] = l;
    }
    Some(JuntaFit {
        vars: vars.to_vec(),
        table,
    })
}

/// First `k`-subset of variables, in lexicographic order, on which the
/// target's label is a function of the projection; `None` if there is none.
pub fn junta_learner(target: &LabeledDistribution, k: usize, guards: &super::Guards, exec: Exec) -> Result<Option<JuntaFit>> {
    guard("junta.max_vars", target.arity, guards.junta_max_vars)?;
    guard("junta.max_k", k, guards.junta_max_k)?;
    let subsets = k_subsets(target.arity, k);
    Ok(par::find_first(exec, 0..subsets.len() as u64, |i| fit(target, &subsets[i as usize])))
}
