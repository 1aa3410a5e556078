use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};

use super::{DecisionTree, Dnf, Leaf, Literal, Term};

enum Slot {
    Leaf(Leaf),
    Node(usize, usize, usize),
}

fn random_label<R: Rng>(rng: &mut R, abort_rate: f64) -> Leaf {
    if abort_rate > 0.0 && rng.random_bool(abort_rate) {
        Leaf::Abort
    } else {
        Leaf::from_bool(rng.random())
    }
}

/// Random reduced tree with exactly `size` leaves over `vars` variables: grow
/// by splitting a uniformly random leaf on a variable unused along its path.
/// Each leaf is `⊥` with probability `abort_rate`, else a fair bit.
pub fn random_tree<R: Rng>(rng: &mut R, vars: usize, size: usize, abort_rate: f64) -> Result<DecisionTree> {
    if size == 0 || (vars < 64 && size as u128 > 1u128 << vars) {
        return Err(Error::InvalidParameter(format!("no reduced tree over {vars} variables has {size} leaves")));
    }
    let mut slots = vec![Slot::Leaf(random_label(rng, abort_rate))];
    // (slot index, variables used on its path)
    let mut open: Vec<(usize, Vec<usize>)> = vec![(0, Vec::new())];
    let mut leaves = 1;
    while leaves < size {
        let splittable: Vec<usize> = (0..open.len()).filter(|&i| open[i].1.len() < vars).collect();
        let pick = splittable[rng.random_range(0..splittable.len())];
        let (slot, used) = open.swap_remove(pick);
        let free: Vec<usize> = (0..vars).filter(|v| !used.contains(v)).collect();
        let var = free[rng.random_range(0..free.len())];
        let lo = slots.len();
        slots.push(Slot::Leaf(random_label(rng, abort_rate)));
        slots.push(Slot::Leaf(random_label(rng, abort_rate)));
        slots[slot] = Slot::Node(var, lo, lo + 1);
        let mut path = used;
        path.push(var);
        open.push((lo, path.clone()));
        open.push((lo + 1, path));
        leaves += 1;
    }
    fn build(slots: &[Slot], i: usize) -> DecisionTree {
        match slots[i] {
            Slot::Leaf(l) => DecisionTree::leaf(l),
            Slot::Node(v, lo, hi) => DecisionTree::node(v, build(slots, lo), build(slots, hi)),
        }
    }
    Ok(build(&slots, 0))
}

/// Random DNF with `terms` terms; each term has a uniform width in
/// `1..=max_width` over distinct random variables with random signs.
pub fn random_dnf<R: Rng>(rng: &mut R, vars: usize, terms: usize, max_width: usize) -> Result<Dnf> {
    if max_width == 0 || max_width > vars {
        return Err(Error::InvalidParameter(format!("term width cap {max_width} invalid for {vars} variables")));
    }
    let mut out = Vec::with_capacity(terms);
    for _ in 0..terms {
        let w = rng.random_range(1..=max_width);
        let lits = sample(rng, vars, w)
            .into_iter()
            .map(|var| Literal { var, positive: rng.random() })
            .collect();
        out.push(Term::new(lits)?);
    }
    Ok(Dnf::new(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_trees_have_requested_size_and_are_reduced() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for size in 1..=16 {
            let t = random_tree(&mut rng, 4, size, 0.2).unwrap();
            assert_eq!(t.size(), size);
            assert!(t.is_reduced());
            assert!(t.max_var().is_none_or(|v| v < 4));
        }
        assert!(random_tree(&mut rng, 3, 9, 0.0).is_err());
        assert!(!random_tree(&mut rng, 4, 8, 0.0).unwrap().has_abort());
    }

    #[test]
    fn random_dnfs_respect_caps() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_dnf(&mut rng, 6, 5, 3).unwrap();
        assert_eq!(f.size(), 5);
        assert!(f.terms().iter().all(|t| (1..=3).contains(&t.width())));
        assert!(random_dnf(&mut rng, 2, 1, 3).is_err());
    }
}
