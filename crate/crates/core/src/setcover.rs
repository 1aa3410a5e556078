//! Set-Cover / Hitting-Set instances as bipartite graphs `(S, U, E)`.
//!
//! Each universe element is stored as its neighborhood: a bit string over
//! `S` with bit `s` set when `(s, u) ∈ E`. That bit string is exactly the
//! element's encoding in the hard-function construction.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{guard, Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetCoverInstance {
    sets: Vec<String>,
    universe: Vec<String>,
    neighborhoods: Vec<BitString>,
}

/// JSON wire form: `{"sets": [...], "universe": [...], "edges": [[s, u], ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    pub sets: Vec<String>,
    pub universe: Vec<String>,
    pub edges: Vec<(String, String)>,
}

/// Yes/no thresholds of a gapped Set-Cover question.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapParams {
    pub k: usize,
    pub k_prime: usize,
}

impl GapParams {
    pub fn new(k: usize, k_prime: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("gap k must be at least 1".into()));
        }
        if k_prime < k {
            return Err(Error::InvalidParameter(format!(
                "gap k' = {k_prime} is below k = {k}"
            )));
        }
        Ok(GapParams { k, k_prime })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationNote {
    /// `(removed, kept)` pairs of universe elements with equal neighborhoods.
    pub removed_duplicates: Vec<(String, String)>,
    /// `(new_set, source_set)` pairs appended by replication.
    pub replicated_sets: Vec<(String, String)>,
}

impl NormalizationNote {
    pub fn is_empty(&self) -> bool {
        self.removed_duplicates.is_empty() && self.replicated_sets.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaddingNote {
    /// Fresh set adjacent only to the dummy elements, if any were added.
    pub pad_set: Option<String>,
    /// `(dummy, source)` pairs; each dummy's neighborhood is its source's plus the pad set.
    pub dummies: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverSolution {
    pub size: usize,
    pub witness: Vec<usize>,
}

pub(crate) fn ceil_log2(x: usize) -> usize {
    if x <= 1 {
        0
    } else {
        (usize::BITS - (x - 1).leading_zeros()) as usize
    }
}

fn fresh_id(taken: &HashSet<String>, base: &str) -> String {
    (2..)
        .map(|k| format!("{base}#{k}"))
        .find(|id| !taken.contains(id))
        .expect("unbounded id space")
}

impl SetCoverInstance {
    /// Builds an instance from per-element neighborhoods, checking every invariant
    /// that does not depend on normalization.
    pub fn new(sets: Vec<String>, universe: Vec<String>, neighborhoods: Vec<BitString>) -> Result<Self> {
        if universe.len() != neighborhoods.len() {
            return Err(Error::Malformed(format!(
                "{} universe elements but {} neighborhoods",
                universe.len(),
                neighborhoods.len()
            )));
        }
        if universe.is_empty() {
            return Err(Error::Malformed("empty universe".into()));
        }
        let mut seen = HashSet::new();
        for id in sets.iter().chain(&universe) {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateVertex(id.clone()));
            }
        }
        for (u, nb) in universe.iter().zip(&neighborhoods) {
            if nb.len() != sets.len() {
                return Err(Error::ArityMismatch {
                    expected: sets.len(),
                    found: nb.len(),
                });
            }
            if nb.is_zero() {
                return Err(Error::UncoverableElement(u.clone()));
            }
        }
        Ok(SetCoverInstance {
            sets,
            universe,
            neighborhoods,
        })
    }

    /// Instance on sets `s1..sn` and elements `u1..` with the given neighborhood masks
    /// (bit `i` of a mask is set `s{i+1}`).
    pub fn from_masks(n: usize, masks: &[u64]) -> Result<Self> {
        let sets = (1..=n).map(|i| format!("s{i}")).collect();
        let universe = (1..=masks.len()).map(|i| format!("u{i}")).collect();
        let nbs = masks.iter().map(|&m| BitString::from_u64(m, n)).collect();
        Self::new(sets, universe, nbs)
    }

    pub fn from_document(doc: &InstanceDocument) -> Result<Self> {
        let mut set_index = HashMap::new();
        let mut universe_index = HashMap::new();
        for (i, s) in doc.sets.iter().enumerate() {
            if set_index.insert(s.as_str(), i).is_some() {
                return Err(Error::DuplicateVertex(s.clone()));
            }
        }
        for (i, u) in doc.universe.iter().enumerate() {
            if set_index.contains_key(u.as_str()) || universe_index.insert(u.as_str(), i).is_some() {
                return Err(Error::DuplicateVertex(u.clone()));
            }
        }
        let mut nbs = vec![BitString::zeros(doc.sets.len()); doc.universe.len()];
        for (s, u) in &doc.edges {
            let si = *set_index
                .get(s.as_str())
                .ok_or_else(|| Error::UnknownVertex(s.clone()))?;
            let ui = *universe_index
                .get(u.as_str())
                .ok_or_else(|| Error::UnknownVertex(u.clone()))?;
            nbs[ui].set(si, true);
        }
        Self::new(doc.sets.clone(), doc.universe.clone(), nbs)
    }

    pub fn to_document(&self) -> InstanceDocument {
        let mut edges: Vec<(String, String)> = self
            .universe
            .iter()
            .zip(&self.neighborhoods)
            .flat_map(|(u, nb)| nb.ones_positions().map(move |s| (self.sets[s].clone(), u.clone())))
            .collect();
        edges.sort();
        InstanceDocument {
            sets: self.sets.clone(),
            universe: self.universe.clone(),
            edges,
        }
    }

    /// Canonical JSON: document order for vertices, edges sorted.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("instance documents always serialize")
    }

    pub fn n(&self) -> usize {
        self.sets.len()
    }

    pub fn universe_len(&self) -> usize {
        self.universe.len()
    }

    /// `N = |S| + |U|`.
    pub fn total_vertices(&self) -> usize {
        self.sets.len() + self.universe.len()
    }

    pub fn set_ids(&self) -> &[String] {
        &self.sets
    }

    pub fn universe_ids(&self) -> &[String] {
        &self.universe
    }

    pub fn neighborhoods(&self) -> &[BitString] {
        &self.neighborhoods
    }

    pub fn neighborhood(&self, u: usize) -> &BitString {
        &self.neighborhoods[u]
    }

    /// Elements adjacent to set `s`, as a bit string over `U`.
    pub fn coverage(&self, s: usize) -> BitString {
        BitString::from_bools(self.neighborhoods.iter().map(|nb| nb.get(s)))
    }

    pub fn resolve_sets<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|name| {
                let name = name.as_ref();
                self.sets
                    .iter()
                    .position(|s| s == name)
                    .ok_or_else(|| Error::UnknownSet(name.to_string()))
            })
            .collect()
    }

    pub fn set_names(&self, cover: &[usize]) -> Vec<String> {
        cover.iter().map(|&s| self.sets[s].clone()).collect()
    }

    pub fn is_normalized(&self) -> bool {
        let distinct: HashSet<&BitString> = self.neighborhoods.iter().collect();
        distinct.len() == self.neighborhoods.len() && ceil_log2(self.universe.len()) < self.n()
    }

    /// True iff every element has a neighbor in `cover`.
    pub fn is_cover(&self, cover: &[usize]) -> Result<bool> {
        let mut mask = BitString::zeros(self.n());
        for &s in cover {
            if s >= self.n() {
                return Err(Error::IndexOutOfRange {
                    index: s,
                    bound: self.n(),
                });
            }
            mask.set(s, true);
        }
        Ok(self.covered_by_mask(&mask))
    }

    pub(crate) fn covered_by_mask(&self, mask: &BitString) -> bool {
        self.neighborhoods.iter().all(|nb| nb.intersects(mask))
    }

    /// Drops elements whose neighborhood repeats an earlier one, then replicates
    /// sets round-robin until `1 + ceil(log2 |U|) <= n`. Optimum is unchanged.
    pub fn normalize(&self) -> (SetCoverInstance, NormalizationNote) {
        let mut note = NormalizationNote::default();
        let mut first_seen: HashMap<&BitString, usize> = HashMap::new();
        let mut universe = Vec::new();
        let mut nbs = Vec::new();
        for (i, nb) in self.neighborhoods.iter().enumerate() {
            match first_seen.get(nb) {
                Some(&kept) => note
                    .removed_duplicates
                    .push((self.universe[i].clone(), self.universe[kept].clone())),
                None => {
                    first_seen.insert(nb, i);
                    universe.push(self.universe[i].clone());
                    nbs.push(nb.clone());
                }
            }
        }
        let mut sets = self.sets.clone();
        let mut taken: HashSet<String> = sets.iter().chain(&universe).cloned().collect();
        let original = self.n();
        let mut next = 0;
        while 1 + ceil_log2(universe.len()) > sets.len() {
            let source = next % original;
            next += 1;
            let id = fresh_id(&taken, &self.sets[source]);
            taken.insert(id.clone());
            note.replicated_sets.push((id.clone(), self.sets[source].clone()));
            sets.push(id);
            for nb in &mut nbs {
                let bit = nb.get(source);
                nb.push(bit);
            }
        }
        let inst = SetCoverInstance {
            sets,
            universe,
            neighborhoods: nbs,
        };
        (inst, note)
    }

    /// Pads `U` to the next power of two without changing the optimum: one fresh
    /// set is added, and each dummy element copies an existing neighborhood plus
    /// that set. Any cover of the original elements also covers every dummy.
    pub fn pad_universe_to_power_of_two(&self) -> (SetCoverInstance, PaddingNote) {
        let target = self.universe.len().next_power_of_two();
        let missing = target - self.universe.len();
        if missing == 0 {
            return (self.clone(), PaddingNote::default());
        }
        let mut taken: HashSet<String> = self.sets.iter().chain(&self.universe).cloned().collect();
        let pad = if taken.contains("pad") {
            fresh_id(&taken, "pad")
        } else {
            "pad".to_string()
        };
        taken.insert(pad.clone());
        let mut sets = self.sets.clone();
        sets.push(pad.clone());
        let mut universe = self.universe.clone();
        let mut nbs: Vec<BitString> = self
            .neighborhoods
            .iter()
            .map(|nb| {
                let mut nb = nb.clone();
                nb.push(false);
                nb
            })
            .collect();
        let mut note = PaddingNote {
            pad_set: Some(pad),
            dummies: Vec::new(),
        };
        for source in 0..missing {
            let base = format!("{}+pad", self.universe[source]);
            let id = if taken.contains(&base) {
                fresh_id(&taken, &base)
            } else {
                base
            };
            taken.insert(id.clone());
            let mut nb = nbs[source].clone();
            let last = nb.len() - 1;
            nb.set(last, true);
            note.dummies.push((id.clone(), self.universe[source].clone()));
            universe.push(id);
            nbs.push(nb);
        }
        let inst = SetCoverInstance {
            sets,
            universe,
            neighborhoods: nbs,
        };
        (inst, note)
    }

    /// Greedy cover: repeatedly take the set covering the most uncovered
    /// elements, lowest index on ties. Returned sorted.
    pub fn greedy_cover(&self) -> Vec<usize> {
        let coverage: Vec<BitString> = (0..self.n()).map(|s| self.coverage(s)).collect();
        let mut uncovered = BitString::ones(self.universe.len());
        let mut chosen = Vec::new();
        while !uncovered.is_zero() {
            let (best, gain) = coverage
                .iter()
                .enumerate()
                .map(|(s, cov)| (s, cov.ones_positions().filter(|&u| uncovered.get(u)).count()))
                .fold((0, 0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            debug_assert!(gain > 0, "instance invariant guarantees coverability");
            chosen.push(best);
            for u in coverage[best].ones_positions() {
                uncovered.set(u, false);
            }
        }
        chosen.sort_unstable();
        chosen
    }

    /// Minimum cover size with the lexicographically least minimum cover as witness.
    pub fn exact_opt(&self, max_sets: usize) -> Result<CoverSolution> {
        guard("exact_opt.max_sets", self.n(), max_sets)?;
        let solver = ExactSolver::new(self);
        let size = solver.optimum(self.greedy_cover().len());
        let witness = solver
            .lex_least(size)
            .expect("a cover of optimal size exists");
        Ok(CoverSolution { size, witness })
    }

    /// Transposed graph read as a Set-Cover instance: sets become elements and
    /// elements become sets. Its optimum is the hitting-set optimum of `self`.
    pub fn to_hitting_set(&self) -> Result<SetCoverInstance> {
        let nbs = (0..self.n()).map(|s| self.coverage(s)).collect();
        SetCoverInstance::new(self.universe.clone(), self.sets.clone(), nbs)
    }
}

struct ExactSolver {
    n: usize,
    universe: usize,
    coverage: Vec<BitString>,
    /// `suffix[i]` = union of coverage of sets `i..n`.
    suffix: Vec<BitString>,
    /// For each element, the sets adjacent to it.
    options: Vec<Vec<usize>>,
}

impl ExactSolver {
    fn new(inst: &SetCoverInstance) -> Self {
        let n = inst.n();
        let universe = inst.universe_len();
        let coverage: Vec<BitString> = (0..n).map(|s| inst.coverage(s)).collect();
        let mut suffix = vec![BitString::zeros(universe); n + 1];
        for i in (0..n).rev() {
            let mut acc = suffix[i + 1].clone();
            for u in coverage[i].ones_positions() {
                acc.set(u, true);
            }
            suffix[i] = acc;
        }
        let options = inst
            .neighborhoods()
            .iter()
            .map(|nb| nb.ones_positions().collect())
            .collect();
        ExactSolver {
            n,
            universe,
            coverage,
            suffix,
            options,
        }
    }

    fn gain(&self, s: usize, uncovered: &BitString) -> usize {
        self.coverage[s].ones_positions().filter(|&u| uncovered.get(u)).count()
    }

    fn lower_bound(&self, uncovered: &BitString) -> usize {
        let left = uncovered.count_ones();
        if left == 0 {
            return 0;
        }
        let best = (0..self.n).map(|s| self.gain(s, uncovered)).max().unwrap_or(0).max(1);
        left.div_ceil(best)
    }

    fn optimum(&self, upper: usize) -> usize {
        let mut best = upper;
        let uncovered = BitString::ones(self.universe);
        self.branch(&uncovered, 0, &mut best);
        best
    }

    // Branch on the uncovered element with the fewest options.
    fn branch(&self, uncovered: &BitString, depth: usize, best: &mut usize) {
        if uncovered.is_zero() {
            *best = (*best).min(depth);
            return;
        }
        if depth + self.lower_bound(uncovered) >= *best {
            return;
        }
        let pivot = uncovered
            .ones_positions()
            .min_by_key(|&u| (self.options[u].len(), u))
            .expect("nonzero");
        for &s in &self.options[pivot] {
            let mut next = uncovered.clone();
            for u in self.coverage[s].ones_positions() {
                next.set(u, false);
            }
            self.branch(&next, depth + 1, best);
        }
    }

    fn lex_least(&self, size: usize) -> Option<Vec<usize>> {
        let mut chosen = Vec::with_capacity(size);
        let uncovered = BitString::ones(self.universe);
        self.lex_search(0, size, &uncovered, &mut chosen)
            .then_some(chosen)
    }

    fn lex_search(&self, start: usize, size: usize, uncovered: &BitString, chosen: &mut Vec<usize>) -> bool {
        if uncovered.is_zero() {
            // Pad with the smallest unused indices to reach exactly `size`.
            let mut used: BTreeSet<usize> = chosen.iter().copied().collect();
            let mut i = 0;
            while used.len() < size {
                used.insert(i);
                i += 1;
            }
            *chosen = used.into_iter().collect();
            return true;
        }
        if chosen.len() == size {
            return false;
        }
        for s in start..self.n {
            if self.n - s < size - chosen.len() {
                break;
            }
            // Remaining elements must be reachable from sets s.. onward.
            if uncovered.ones_positions().any(|u| !self.suffix[s].get(u)) {
                break;
            }
            if self.gain(s, uncovered) == 0 {
                continue;
            }
            let mut next = uncovered.clone();
            for u in self.coverage[s].ones_positions() {
                next.set(u, false);
            }
            chosen.push(s);
            if self.lex_search(s + 1, size, &next, chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }
}

/// Parses the JSON instance format. No normalization is applied.
pub fn parse_instance(text: &str) -> Result<SetCoverInstance> {
    let doc: InstanceDocument = serde_json::from_str(text)?;
    SetCoverInstance::from_document(&doc)
}
