//! Blockwise parity amplification of `Γ` and `D`.
//!
//! An amplified input `y` has `n` blocks of `ℓ` bits; variable `i·ℓ + p` is
//! position `p` of block `i` (all indices 0-based). The amplified function is
//! the base function of the blockwise parities, and the amplified
//! distribution draws `x ~ D` and then each block uniformly among strings of
//! parity `x_i`.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::circuit::{Circuit, Gate, GateKind, Wire};
use crate::construction::{
    build_dist, build_gamma, BooleanFunction, ExplicitDistribution, LabeledDistribution, PartialFunctionTable,
    Transform,
};
use crate::error::{guard, Error, Result};
use crate::par::{self, Exec};
use crate::ratio;
use crate::setcover::SetCoverInstance;

fn check_ell(ell: usize, allow_ell_one: bool) -> Result<()> {
    match ell {
        0 => Err(Error::InvalidParameter("ell must be positive".into())),
        1 if !allow_ell_one => Err(Error::InvalidParameter(
            "ell = 1 requires the explicit override; the distance bounds assume ell >= 2".into(),
        )),
        _ => Ok(()),
    }
}

/// XOR of each `ℓ`-bit block.
pub fn blockwise_par(y: &BitString, n: usize, ell: usize) -> Result<BitString> {
    if ell == 0 || y.len() != n * ell {
        return Err(Error::ArityMismatch {
            expected: n * ell,
            found: y.len(),
        });
    }
    Ok(BitString::from_bools(
        (0..n).map(|i| (0..ell).fold(false, |acc, p| acc ^ y.get(i * ell + p))),
    ))
}

/// Inserts into each block, at position `j`, the bit that makes its parity `x_i`.
/// The other `ℓ - 1` positions of block `i` copy `z[i·(ℓ-1) ..]` in order.
pub fn par_complete(z: &BitString, x: &BitString, j: usize) -> Result<BitString> {
    let n = x.len();
    if n == 0 {
        return Err(Error::InvalidParameter("empty parity string".into()));
    }
    if !z.len().is_multiple_of(n) {
        return Err(Error::ArityMismatch {
            expected: n * (z.len() / n + 1),
            found: z.len(),
        });
    }
    let ell = z.len() / n + 1;
    if j >= ell {
        return Err(Error::IndexOutOfRange { index: j, bound: ell });
    }
    let mut y = BitString::zeros(n * ell);
    for i in 0..n {
        let mut parity = false;
        for q in 0..ell {
            if q == j {
                continue;
            }
            let bit = z.get(i * (ell - 1) + if q < j { q } else { q - 1 });
            parity ^= bit;
            y.set(i * ell + q, bit);
        }
        y.set(i * ell + j, parity ^ x.get(i));
    }
    Ok(y)
}

/// Inverse of [`par_complete`] for fixed `j`: drops position `j` of every block.
pub fn strip_position(y: &BitString, n: usize, ell: usize, j: usize) -> BitString {
    BitString::from_bools((0..n).flat_map(|i| (0..ell).filter(move |&q| q != j).map(move |q| y.get(i * ell + q))))
}

#[derive(Clone, Debug, PartialEq)]
pub struct AmplifiedFunction {
    base: PartialFunctionTable,
    n: usize,
    ell: usize,
}

impl AmplifiedFunction {
    pub fn base(&self) -> &PartialFunctionTable {
        &self.base
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn history(&self) -> Vec<Transform> {
        let mut h = self.base.history().to_vec();
        h.push(Transform::Amplified { ell: self.ell });
        h
    }

    /// Negation commutes with amplification, so this negates the base.
    pub fn negate(&self) -> AmplifiedFunction {
        AmplifiedFunction {
            base: self.base.negate(),
            ..self.clone()
        }
    }

    pub fn contains(&self, y: &BitString) -> bool {
        blockwise_par(y, self.n, self.ell).is_ok_and(|x| self.base.contains(&x))
    }
}

impl BooleanFunction for AmplifiedFunction {
    fn arity(&self) -> usize {
        self.n * self.ell
    }

    fn eval(&self, y: &BitString) -> Result<bool> {
        let x = blockwise_par(y, self.n, self.ell)?;
        self.base.eval(&x).map_err(|_| Error::OffSupport(y.clone()))
    }
}

pub fn amplify_function(base: &PartialFunctionTable, ell: usize, allow_ell_one: bool) -> Result<AmplifiedFunction> {
    check_ell(ell, allow_ell_one)?;
    Ok(AmplifiedFunction {
        base: base.clone(),
        n: base.arity(),
        ell,
    })
}

/// Closed-form amplified distribution: `pmf(y) = D(BlockwisePar(y)) · 2^{-n(ℓ-1)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplifiedDistribution {
    base: ExplicitDistribution,
    n: usize,
    ell: usize,
}

impl AmplifiedDistribution {
    pub fn base(&self) -> &ExplicitDistribution {
        &self.base
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn arity(&self) -> usize {
        self.n * self.ell
    }

    /// Free bits per sample: `n(ℓ-1)`.
    pub fn free_bits(&self) -> usize {
        self.n * (self.ell - 1)
    }

    /// Shared denominator of [`weight_of`](Self::weight_of).
    pub fn denominator(&self) -> Result<u128> {
        1u128
            .checked_shl(self.free_bits() as u32)
            .filter(|_| self.free_bits() < 128)
            .and_then(|p| p.checked_mul(self.base.denominator()))
            .ok_or(Error::Overflow("amplified denominator"))
    }

    /// Numerator of `pmf(y)` over [`denominator`](Self::denominator).
    pub fn weight_of(&self, y: &BitString) -> u128 {
        blockwise_par(y, self.n, self.ell).map_or(0, |x| self.base.weight_of(&x))
    }

    pub fn pmf(&self, y: &BitString) -> Result<BigRational> {
        Ok(ratio::ratio(self.weight_of(y), self.denominator()?))
    }

    /// All atoms listed explicitly, grouped by base atom then by free bits.
    pub fn to_explicit(&self, max_bits: usize) -> Result<ExplicitDistribution> {
        guard("amplified.max_bits", self.arity(), max_bits)?;
        let denom = self.denominator()?;
        let zs = 1u64 << self.free_bits();
        let mut atoms = Vec::with_capacity(self.base.len() * zs as usize);
        let mut weights = Vec::with_capacity(atoms.capacity());
        for (x, &w) in self.base.atoms().iter().zip(self.base.weights()) {
            for z in 0..zs {
                atoms.push(par_complete(&BitString::from_u64(z, self.free_bits()), x, 0)?);
                weights.push(w);
            }
        }
        ExplicitDistribution::new(self.arity(), atoms, weights, denom)
    }
}

pub fn amplify_dist(base: &ExplicitDistribution, ell: usize, allow_ell_one: bool) -> Result<AmplifiedDistribution> {
    check_ell(ell, allow_ell_one)?;
    Ok(AmplifiedDistribution {
        base: base.clone(),
        n: base.arity(),
        ell,
    })
}

/// Sums the pmf of "draw `z` uniformly, `x ~ D`, output `par_complete(z, x, j)`"
/// over every `(z, x)` pair and compares it to the closed form on all `2^{nℓ}`
/// strings, exactly.
pub fn pmf_equivalence_check(amp: &AmplifiedDistribution, j: usize, max_bits: usize, exec: Exec) -> Result<bool> {
    equivalence_against(amp, j, max_bits, exec, &|y| amp.weight_of(y))
}

fn equivalence_against(
    amp: &AmplifiedDistribution,
    j: usize,
    max_bits: usize,
    exec: Exec,
    closed: &(dyn Fn(&BitString) -> u128 + Sync),
) -> Result<bool> {
    guard("equivalence.max_bits", amp.arity(), max_bits)?;
    if j >= amp.ell {
        return Err(Error::IndexOutOfRange { index: j, bound: amp.ell });
    }
    amp.denominator()?;
    let free = amp.free_bits();
    let base = amp.base();
    let idx: Vec<usize> = (0..base.len()).collect();
    let parts = par::map(exec, &idx, |&a| {
        let x = &base.atoms()[a];
        (0..1u64 << free)
            .map(|z| {
                let y = par_complete(&BitString::from_u64(z, free), x, j).expect("shapes checked");
                (y.to_u64(), base.weights()[a])
            })
            .collect::<Vec<_>>()
    });
    let mut dj = vec![0u128; 1 << amp.arity()];
    for (y, w) in parts.into_iter().flatten() {
        dj[y as usize] += w;
    }
    let bits = amp.arity();
    Ok(par::find_first(exec, 0..1u64 << bits, |y| {
        (closed(&BitString::from_u64(y, bits)) != dj[y as usize]).then_some(y)
    })
    .is_none())
}

/// Outcome of the exact uniform-likeness check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformLikeness {
    /// Number of `(block, R, r, b)` cases (nonempty `R`) with positive conditioning mass.
    pub cases: usize,
    /// Largest `Pr[(y_i)_R = r | ⊕y_i = b]^2 · 2^{|R|}`; at most 1 iff the bound holds.
    #[serde(with = "ratio::serde_ratio")]
    pub worst: BigRational,
    pub holds: bool,
}

/// Checks `Pr[(y_i)_R = r | ⊕y_i = b] <= 2^{-|R|/2}` for every block `i`,
/// position set `R`, pattern `r` and parity `b`, in exact arithmetic.
pub fn uniform_likeness(amp: &AmplifiedDistribution, max_bits: usize) -> Result<UniformLikeness> {
    let explicit = amp.to_explicit(max_bits)?;
    let ell = amp.ell;
    let mut cases = 0;
    let mut worst = ratio::int(0);
    for i in 0..amp.n {
        let mut hist = vec![0u128; 1 << ell];
        for (y, &w) in explicit.atoms().iter().zip(explicit.weights()) {
            let v = (0..ell).fold(0usize, |acc, p| acc | (y.get(i * ell + p) as usize) << p);
            hist[v] += w;
        }
        for b in [0u32, 1] {
            let den: u128 = (0..1usize << ell)
                .filter(|v| v.count_ones() % 2 == b)
                .map(|v| hist[v])
                .sum();
            if den == 0 {
                continue;
            }
            for r_set in 1..1usize << ell {
                // Enumerate patterns r as submasks of the position set.
                let mut r = r_set;
                loop {
                    let num: u128 = (0..1usize << ell)
                        .filter(|&v| (v.count_ones() % 2 == b) && (v & r_set) == r)
                        .map(|v| hist[v])
                        .sum();
                    let lhs = ratio::ratio(num, den);
                    let scaled = &lhs * &lhs * ratio::int(1u128 << r_set.count_ones());
                    if scaled > worst {
                        worst = scaled;
                    }
                    cases += 1;
                    if r == 0 {
                        break;
                    }
                    r = (r - 1) & r_set;
                }
            }
        }
    }
    let holds = worst <= ratio::int(1);
    Ok(UniformLikeness { cases, worst, holds })
}

/// OR of `n` block XORs, plus a final NOT when `negated`.
///
/// Depth counts gates on the longest path: 2 for the plain circuit and 3
/// with the NOT. Conventions that count only the XOR and OR layers call the
/// same circuit depth-2.
pub fn emit_circuit(inst: &SetCoverInstance, ell: usize, negated: bool) -> Result<Circuit> {
    check_ell(ell, true)?;
    let n = inst.n();
    let mut gates: Vec<Gate> = (0..n)
        .map(|i| Gate {
            kind: GateKind::Xor,
            operands: (0..ell).map(|p| Wire::Input(i * ell + p)).collect(),
        })
        .collect();
    gates.push(Gate {
        kind: GateKind::Or,
        operands: (0..n).map(Wire::Gate).collect(),
    });
    if negated {
        gates.push(Gate {
            kind: GateKind::Not,
            operands: vec![Wire::Gate(n)],
        });
    }
    let out = gates.len() - 1;
    Circuit::new(n * ell, gates, out)
}

/// Amplified `Γ` (or `Γ̄`) labeled over the explicit amplified distribution.
pub fn amplified_target(
    inst: &SetCoverInstance,
    ell: usize,
    negated: bool,
    max_bits: usize,
) -> Result<LabeledDistribution> {
    let (f, d) = amplified_pair(inst, ell, negated)?;
    LabeledDistribution::new(&f, &d.to_explicit(max_bits)?)
}

pub fn amplified_pair(
    inst: &SetCoverInstance,
    ell: usize,
    negated: bool,
) -> Result<(AmplifiedFunction, AmplifiedDistribution)> {
    let mut gamma = build_gamma(inst)?;
    if negated {
        gamma = gamma.negate();
    }
    Ok((amplify_function(&gamma, ell, false)?, amplify_dist(&build_dist(inst)?, ell, false)?))
}

/// Base `Γ` (or `Γ̄`) labeled over `D`.
pub fn base_target(inst: &SetCoverInstance, negated: bool) -> Result<LabeledDistribution> {
    let mut gamma = build_gamma(inst)?;
    if negated {
        gamma = gamma.negate();
    }
    LabeledDistribution::new(&gamma, &build_dist(inst)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn blockwise_par_examples() {
        let y = bs("100010101100");
        assert_eq!(blockwise_par(&y, 4, 3).unwrap(), bs("1101"));
        assert_eq!(blockwise_par(&BitString::zeros(12), 4, 3).unwrap(), BitString::zeros(4));
        assert_eq!(blockwise_par(&bs("1011"), 4, 1).unwrap(), bs("1011"));
        assert!(blockwise_par(&bs("101"), 2, 2).is_err());
    }

    #[test]
    fn par_complete_worked_example() {
        // Completing at the middle position (index 1) of 3-bit blocks.
        let z = bs("10001110");
        let x = bs("1101");
        assert_eq!(par_complete(&z, &x, 1).unwrap(), bs("100010101100"));
        assert!(par_complete(&z, &x, 3).is_err());
    }

    #[test]
    fn par_complete_with_zero_z_places_single_ones() {
        let x = bs("1011");
        for j in 0..3 {
            let y = par_complete(&BitString::zeros(8), &x, j).unwrap();
            for i in 0..4 {
                for q in 0..3 {
                    assert_eq!(y.get(i * 3 + q), q == j && x.get(i));
                }
            }
        }
    }

    #[test]
    fn amplified_one_by_one() {
        let inst = fixtures::one_by_one();
        let (f, d) = amplified_pair(&inst, 2, false).unwrap();
        assert!(!f.eval(&bs("00")).unwrap());
        assert!(!f.eval(&bs("11")).unwrap());
        assert!(f.eval(&bs("01")).unwrap());
        assert!(f.eval(&bs("10")).unwrap());
        for y in ["00", "01", "10", "11"] {
            assert_eq!(d.pmf(&bs(y)).unwrap(), ratio::ratio(1, 4));
        }
        assert!(amplify_function(f.base(), 1, false).is_err());
        assert!(amplify_function(f.base(), 1, true).is_ok());
    }

    #[test]
    fn off_support_is_an_error() {
        let (f, _) = amplified_pair(&fixtures::five_by_four(), 2, false).unwrap();
        // Parities 11111 are not an encoding.
        assert!(matches!(f.eval(&BitString::from_u64(0b0101010101, 10)), Err(Error::OffSupport(_))));
    }

    #[test]
    fn negation_commutes_with_amplification() {
        let inst = fixtures::five_by_four();
        let g = build_gamma(&inst).unwrap();
        let a = amplify_function(&g, 2, false).unwrap().negate();
        let b = amplify_function(&g.negate(), 2, false).unwrap();
        let d = amplify_dist(&build_dist(&inst).unwrap(), 2, false).unwrap().to_explicit(20).unwrap();
        for y in d.atoms() {
            assert_eq!(a.eval(y).unwrap(), b.eval(y).unwrap());
        }
    }

    #[test]
    fn amplified_pmf_sums_and_pushes_forward() {
        for (inst, ell) in [(fixtures::one_by_one(), 2), (fixtures::five_by_four(), 2), (fixtures::five_by_four(), 4)] {
            let base = build_dist(&inst).unwrap();
            let amp = amplify_dist(&base, ell, false).unwrap();
            let e = amp.to_explicit(20).unwrap();
            assert_eq!(e.total(), ratio::int(1));
            let mut push = std::collections::HashMap::new();
            for (y, w) in e.atoms().iter().zip(e.weights()) {
                *push.entry(blockwise_par(y, amp.n(), ell).unwrap()).or_insert(0u128) += w;
            }
            for x in base.atoms() {
                assert_eq!(ratio::ratio(push[x], e.denominator()), base.pmf(x));
            }
            assert_eq!(push.len(), base.len());
        }
    }

    #[test]
    fn equivalence_examples() {
        for inst in [fixtures::one_by_one(), fixtures::five_by_four()] {
            let amp = amplify_dist(&build_dist(&inst).unwrap(), 2, false).unwrap();
            for j in 0..2 {
                for exec in [Exec::Sequential, Exec::Parallel] {
                    assert!(pmf_equivalence_check(&amp, j, 20, exec).unwrap());
                }
            }
        }
    }

    #[test]
    fn equivalence_detects_reweighted_atom() {
        let amp = amplify_dist(&build_dist(&fixtures::five_by_four()).unwrap(), 2, false).unwrap();
        let target = amp.to_explicit(20).unwrap().atoms()[3].clone();
        let perturbed = |y: &BitString| amp.weight_of(y) + u128::from(*y == target);
        assert!(!equivalence_against(&amp, 0, 20, Exec::Sequential, &perturbed).unwrap());
        assert!(pmf_equivalence_check(&amp, 0, 8, Exec::Sequential).is_err());
    }

    #[test]
    fn circuits_agree_with_amplified_functions() {
        let inst = fixtures::five_by_four();
        for negated in [false, true] {
            let c = emit_circuit(&inst, 2, negated).unwrap();
            assert_eq!(c.count(GateKind::Xor), 5);
            assert_eq!(c.count(GateKind::Or), 1);
            assert_eq!(c.count(GateKind::Not), negated as usize);
            assert_eq!(c.depth(), 2 + negated as usize);
            let target = amplified_target(&inst, 2, negated, 20).unwrap();
            assert_eq!(target.len(), 32 * 5);
            for (y, &l) in target.atoms.iter().zip(&target.labels) {
                assert_eq!(c.evaluate(y).unwrap(), l);
            }
        }
        let one = emit_circuit(&fixtures::one_by_one(), 2, false).unwrap();
        assert_eq!(one.to_netlist(), "inputs 2\ng0 = XOR x0 x1\ng1 = OR g0\noutput g1\n");
        let flipped = emit_circuit(&fixtures::one_by_one(), 2, true).unwrap();
        for y in BitString::all(2) {
            assert_ne!(one.evaluate(&y).unwrap(), flipped.evaluate(&y).unwrap());
        }
    }

    #[test]
    fn uniform_likeness_holds_and_is_tight_at_full_blocks() {
        let amp = amplify_dist(&build_dist(&fixtures::five_by_four()).unwrap(), 3, false).unwrap();
        let u = uniform_likeness(&amp, 16).unwrap();
        assert!(u.holds);
        // Partial R scores 2^{-|R|}; a full block with matching parity scores 2^{2-ℓ}.
        assert_eq!(u.worst, ratio::ratio(1, 2));
        let amp2 = amplify_dist(&build_dist(&fixtures::one_by_one()).unwrap(), 2, false).unwrap();
        let u2 = uniform_likeness(&amp2, 16).unwrap();
        assert!(u2.holds);
        assert_eq!(u2.worst, ratio::int(1));
    }

    proptest! {
        #[test]
        fn completion_has_requested_parities(n in 1usize..6, ell in 1usize..5, zv in any::<u64>(), xv in any::<u64>(), j in 0usize..5) {
            let j = j % ell;
            let z = BitString::from_u64(zv, n * (ell - 1));
            let x = BitString::from_u64(xv, n);
            let y = par_complete(&z, &x, j).unwrap();
            prop_assert_eq!(blockwise_par(&y, n, ell).unwrap(), x);
            prop_assert_eq!(strip_position(&y, n, ell, j), z);
        }
    }
}
