use crate::bits::BitString;
use crate::error::{Error, Result};

use super::{DecisionTree, Dnf, Literal, Term};

fn check_shape(z: &BitString, n: usize, ell: usize, j: usize) -> Result<()> {
    if ell == 0 || j >= ell {
        return Err(Error::IndexOutOfRange { index: j, bound: ell });
    }
    if z.len() != n * (ell - 1) {
        return Err(Error::ArityMismatch {
            expected: n * (ell - 1),
            found: z.len(),
        });
    }
    Ok(())
}

fn z_bit(z: &BitString, ell: usize, block: usize, pos: usize, j: usize) -> bool {
    z.get(block * (ell - 1) + if pos < j { pos } else { pos - 1 })
}

fn block_parities(z: &BitString, n: usize, ell: usize) -> Vec<bool> {
    (0..n)
        .map(|i| (0..ell - 1).fold(false, |acc, q| acc ^ z.get(i * (ell - 1) + q)))
        .collect()
}

/// The tree computing `x ↦ T(par_complete(z, x, j))` over `n` variables.
///
/// Queries off position `j` are answered by `z` and contracted away. A query
/// of position `j` in block `i` reads `x_i ⊕ parity(z_i)`, so it becomes a
/// query of `x_i` with children swapped when that parity is 1. The depth on
/// `x` is therefore the number of position-`j` queries `T` makes on the
/// completed input.
pub fn restrict_tree(t: &DecisionTree, n: usize, ell: usize, z: &BitString, j: usize) -> Result<DecisionTree> {
    check_shape(z, n, ell, j)?;
    let parity = block_parities(z, n, ell);
    fn go(t: &DecisionTree, n: usize, ell: usize, z: &BitString, j: usize, parity: &[bool]) -> Result<DecisionTree> {
        match t {
            DecisionTree::Leaf(l) => Ok(DecisionTree::leaf(*l)),
            DecisionTree::Node { var, lo, hi } => {
                if *var >= n * ell {
                    return Err(Error::IndexOutOfRange { index: *var, bound: n * ell });
                }
                let (block, pos) = (var / ell, var % ell);
                if pos != j {
                    let next = if z_bit(z, ell, block, pos, j) { hi } else { lo };
                    return go(next, n, ell, z, j, parity);
                }
                let l = go(lo, n, ell, z, j, parity)?;
                let h = go(hi, n, ell, z, j, parity)?;
                Ok(if parity[block] {
                    DecisionTree::node(block, h, l)
                } else {
                    DecisionTree::node(block, l, h)
                })
            }
        }
    }
    go(t, n, ell, z, j, &parity)
}

/// The DNF computing `x ↦ F(par_complete(z, x, j))` over `n` variables.
///
/// Literals off position `j` are fixed by `z`: a false one deletes its term,
/// a true one is dropped. A literal on position `j` of block `i` becomes a
/// literal on `x_i`, negated when `z_i` has odd parity.
pub fn restrict_dnf(f: &Dnf, n: usize, ell: usize, z: &BitString, j: usize) -> Result<Dnf> {
    check_shape(z, n, ell, j)?;
    let parity = block_parities(z, n, ell);
    let mut terms = Vec::new();
    'terms: for t in f.terms() {
        let mut lits = Vec::new();
        for l in t.literals() {
            if l.var >= n * ell {
                return Err(Error::IndexOutOfRange { index: l.var, bound: n * ell });
            }
            let (block, pos) = (l.var / ell, l.var % ell);
            if pos != j {
                if z_bit(z, ell, block, pos, j) != l.positive {
                    continue 'terms;
                }
            } else {
                lits.push(Literal {
                    var: block,
                    positive: l.positive ^ parity[block],
                });
            }
        }
        terms.push(Term::new(lits)?);
    }
    Ok(Dnf::new(terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplification::par_complete;
    use crate::hypotheses::{random_dnf, random_tree, Leaf};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn position_j_only_tree_keeps_shape() {
        // n = 2, ℓ = 2, j = 0: the tree reads variables 0 and 2 only.
        let t = DecisionTree::node(0, DecisionTree::node(2, DecisionTree::constant(false), DecisionTree::constant(true)), DecisionTree::abort());
        let z: BitString = "10".parse().unwrap();
        let r = restrict_tree(&t, 2, 2, &z, 0).unwrap();
        // Block 0 has odd z parity, so its children swap.
        let want = DecisionTree::node(0, DecisionTree::abort(), DecisionTree::node(1, DecisionTree::constant(false), DecisionTree::constant(true)));
        assert_eq!(r, want);
        assert_eq!(restrict_tree(&DecisionTree::constant(true), 2, 2, &z, 1).unwrap(), DecisionTree::constant(true));
        assert!(restrict_tree(&t, 2, 2, &z, 2).is_err());
    }

    #[test]
    fn junta_tree_restricts_to_identity() {
        // Γ_⊕2 of the one-set instance is x0 XOR x1; restrict at j = 0, z = 0.
        let t = DecisionTree::complete(&[0, 1], &|v| Leaf::from_bool(v[0] ^ v[1]));
        let r = restrict_tree(&t, 1, 2, &BitString::zeros(1), 0).unwrap();
        assert_eq!(r, DecisionTree::node(0, DecisionTree::constant(false), DecisionTree::constant(true)));
    }

    proptest! {
        #[test]
        fn restriction_commutes_with_completion(seed in any::<u64>(), n in 1usize..4, ell in 2usize..4, zv in any::<u64>(), j in 0usize..3) {
            let j = j % ell;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let vars = n * ell;
            let size = 1 + (seed as usize % 12).min((1 << vars) - 1);
            let t = random_tree(&mut rng, vars, size, 0.2).unwrap();
            let f = random_dnf(&mut rng, vars, 1 + seed as usize % 4, vars.min(3)).unwrap();
            let z = BitString::from_u64(zv, n * (ell - 1));
            let rt = restrict_tree(&t, n, ell, &z, j).unwrap();
            let rf = restrict_dnf(&f, n, ell, &z, j).unwrap();
            prop_assert!(rt.is_reduced());
            for x in BitString::all(n) {
                let y = par_complete(&z, &x, j).unwrap();
                let full = t.trace(&y, Some((n, ell))).unwrap();
                let small = rt.trace(&x, None).unwrap();
                prop_assert_eq!(full.label, small.label);
                prop_assert_eq!(small.cost, full.per_position[j]);
                prop_assert_eq!(rf.eval(&x).unwrap(), f.eval(&y).unwrap());
                let fw = f.trace(&y, Some((n, ell))).unwrap();
                prop_assert!(rf.trace(&x, None).unwrap().cost <= fw.per_position[j]);
            }
        }
    }
}
