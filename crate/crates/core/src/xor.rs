//! `m`-fold XOR composition, its circuit, and the parameter bookkeeping of
//! the hardness-amplification step.
//!
//! The constant-factor guarantee of the first stage (1/800-far, abort budget
//! at least 0.34) is recorded, not simulated. Only the fully explicit bound
//! of the second stage is computed numerically.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::circuit::{Circuit, Gate, GateKind, Wire};
use crate::construction::{BooleanFunction, ExplicitDistribution, LabeledDistribution};
use crate::error::{guard, Error, Result};
use crate::hypotheses::{DecisionTree, Leaf};
use crate::par::{self, Exec};
use crate::ratio::{self, serde_ratio};
use crate::setcover::SetCoverInstance;

/// `f(x^(1)) ⊕ ... ⊕ f(x^(m))` on the concatenation of `m` inputs.
pub struct XorComposition<'a> {
    base: &'a dyn BooleanFunction,
    m: usize,
}

impl XorComposition<'_> {
    pub fn m(&self) -> usize {
        self.m
    }
}

impl BooleanFunction for XorComposition<'_> {
    fn arity(&self) -> usize {
        self.base.arity() * self.m
    }

    fn eval(&self, x: &BitString) -> Result<bool> {
        if x.len() != self.arity() {
            return Err(Error::ArityMismatch {
                expected: self.arity(),
                found: x.len(),
            });
        }
        let a = self.base.arity();
        let mut acc = false;
        for c in 0..self.m {
            acc ^= self.base.eval(&x.slice(c * a, (c + 1) * a))?;
        }
        Ok(acc)
    }
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        Err(Error::InvalidParameter("m must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Atom count of the `m`-fold product, guarded.
fn product_len(atoms: usize, m: usize, max_atoms: usize) -> Result<usize> {
    let len = u32::try_from(m)
        .ok()
        .and_then(|e| atoms.checked_pow(e))
        .unwrap_or(usize::MAX);
    guard("xor.max_product_atoms", len, max_atoms)?;
    Ok(len)
}

/// Index `i` of the product in mixed radix, first coordinate most significant.
fn coordinates(mut i: usize, atoms: usize, m: usize) -> Vec<usize> {
    let mut out = vec![0; m];
    for c in (0..m).rev() {
        out[c] = i % atoms;
        i /= atoms;
    }
    out
}

struct Product {
    atoms: Vec<BitString>,
    weights: Vec<u128>,
    denominator: u128,
    picks: Vec<Vec<usize>>,
}

fn product(dist: &ExplicitDistribution, m: usize, max_atoms: usize, exec: Exec) -> Result<Product> {
    check_m(m)?;
    let len = product_len(dist.len(), m, max_atoms)?;
    let denominator = u32::try_from(m)
        .ok()
        .and_then(|e| dist.denominator().checked_pow(e))
        .ok_or(Error::Overflow("product denominator"))?;
    let picks = par::map_range(exec, 0..len as u64, |i| coordinates(i as usize, dist.len(), m));
    let (atoms, weights) = picks
        .iter()
        .map(|pick| {
            let x = pick
                .iter()
                .fold(BitString::zeros(0), |acc, &p| acc.concat(&dist.atoms()[p]));
            let w: u128 = pick.iter().map(|&p| dist.weights()[p]).product();
            (x, w)
        })
        .unzip();
    Ok(Product {
        atoms,
        weights,
        denominator,
        picks,
    })
}

/// Composed function and product distribution. Atoms are ordered with the
/// first copy varying slowest; the pmf multiplies across copies.
pub fn xor_compose<'a>(
    f: &'a dyn BooleanFunction,
    dist: &ExplicitDistribution,
    m: usize,
    max_atoms: usize,
    exec: Exec,
) -> Result<(XorComposition<'a>, ExplicitDistribution)> {
    if f.arity() != dist.arity() {
        return Err(Error::ArityMismatch {
            expected: f.arity(),
            found: dist.arity(),
        });
    }
    let p = product(dist, m, max_atoms, exec)?;
    let d = ExplicitDistribution::new(dist.arity() * m, p.atoms, p.weights, p.denominator)?;
    Ok((XorComposition { base: f, m }, d))
}

/// The same composition on an already labeled target (labels XOR across copies).
pub fn xor_labeled(target: &LabeledDistribution, m: usize, max_atoms: usize, exec: Exec) -> Result<LabeledDistribution> {
    let dist = ExplicitDistribution::new(target.arity, target.atoms.clone(), target.weights.clone(), target.denominator)?;
    let p = product(&dist, m, max_atoms, exec)?;
    let labels = p
        .picks
        .iter()
        .map(|pick| pick.iter().fold(false, |acc, &i| acc ^ target.labels[i]))
        .collect();
    Ok(LabeledDistribution {
        arity: target.arity * m,
        atoms: p.atoms,
        weights: p.weights,
        denominator: p.denominator,
        labels,
    })
}

/// `m` copies of `base` on consecutive input blocks feeding one XOR gate.
/// For `m = 1` the fan-in-1 XOR is dropped and `base` is returned.
pub fn emit_xor_circuit(base: &Circuit, m: usize) -> Result<Circuit> {
    check_m(m)?;
    if m == 1 {
        return Ok(base.clone());
    }
    let mut gates: Vec<Gate> = Vec::with_capacity(m * base.gates().len() + 1);
    let outs: Vec<Wire> = (0..m)
        .map(|c| Wire::Gate(Circuit::append_shifted(&mut gates, base, c * base.inputs())))
        .collect();
    gates.push(Gate {
        kind: GateKind::Xor,
        operands: outs,
    });
    let out = gates.len() - 1;
    Circuit::new(base.inputs() * m, gates, out)
}

/// Depth-`kℓm` tree for the composed amplified function: it reads the
/// cover's blocks in every copy and outputs the XOR of the per-copy values.
/// With `cover` a set cover it has zero error on the product support.
pub fn xor_junta_tree(inst: &SetCoverInstance, cover: &[usize], ell: usize, m: usize) -> Result<DecisionTree> {
    check_m(m)?;
    if let Some(&bad) = cover.iter().find(|&&i| i >= inst.n()) {
        return Err(Error::IndexOutOfRange { index: bad, bound: inst.n() });
    }
    let per_copy = crate::oracles::junta_variables(cover, ell);
    let stride = inst.n() * ell;
    let vars: Vec<usize> = (0..m).flat_map(|c| per_copy.iter().map(move |v| c * stride + v)).collect();
    let label = |bits: &[bool]| {
        let mut acc = false;
        for copy in bits.chunks(per_copy.len().max(1)).take(m) {
            acc ^= copy.chunks(ell).any(|block| block.iter().fold(false, |a, &b| a ^ b));
        }
        Leaf::from_bool(acc)
    };
    Ok(DecisionTree::complete(&vars, &label))
}

/// `(1/2)(1 - (1 - 2ε + 6α ln(2/α) ε)^m)`: distance from every tree of depth
/// `αεdm` for an `f` that is `ε`-far from depth-`d` trees.
pub fn drucker_bound(eps: f64, alpha: f64, m: u64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside (0, 1)")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} outside (0, 1]")));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    let base = 1.0 - 2.0 * eps + drucker_c(alpha) * eps;
    Ok(0.5 * (1.0 - base.powf(m as f64)))
}

fn drucker_c(alpha: f64) -> f64 {
    6.0 * alpha * (2.0 / alpha).ln()
}

pub const ALPHA_TOLERANCE: f64 = 1e-12;

/// The root of `6α ln(2/α) = 1` in `(0, 1]`, by bisection.
///
/// The left side is concave, tends to 0 at 0 and exceeds 1 at 1, so the
/// root is unique.
pub fn canonical_alpha() -> Result<f64> {
    let g = |a: f64| drucker_c(a) - 1.0;
    let (mut lo, mut hi) = (f64::MIN_POSITIVE, 1.0);
    if g(lo) >= 0.0 || g(hi) <= 0.0 {
        return Err(Error::InvalidParameter("no sign change for alpha on (0, 1]".into()));
    }
    while hi - lo > 1e-16 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if mid == lo && mid == hi {
            break;
        }
    }
    let alpha = 0.5 * (lo + hi);
    if g(alpha).abs() > ALPHA_TOLERANCE {
        return Err(Error::InvalidParameter(format!("alpha residual {} too large", g(alpha))));
    }
    Ok(alpha)
}

/// Per-copy far-ness guaranteed by the first (constant-factor) stage.
pub const STAGE_ONE_FAR: (u128, u128) = (1, 800);
/// Abort budget the first stage needs: `δ ≥ 0.34`.
pub const STAGE_ONE_ABORT: (u128, u128) = (17, 50);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XorParams {
    #[serde(with = "serde_ratio")]
    pub eps: BigRational,
    #[serde(with = "serde_ratio")]
    pub gamma: BigRational,
    #[serde(with = "serde_ratio")]
    pub delta_abort: BigRational,
    /// First-stage guarantee, recorded rather than derived.
    #[serde(with = "serde_ratio")]
    pub stage_one_far: BigRational,
    pub c1: u64,
    pub c2: u64,
    pub m1: u64,
    pub m2: u64,
    pub m: u64,
    pub alpha: f64,
    /// `drucker_bound(1/800, alpha, m2)`.
    pub stage_two_far: f64,
}

fn ceil_ratio(r: &BigRational) -> Result<u64> {
    let (q, rem) = r.numer().div_rem(r.denom());
    let q = if rem.is_positive() { q + 1 } else { q };
    q.to_u64().ok_or(Error::Overflow("parameter does not fit in u64"))
}

/// `log2(1/gamma)`, exact when `1/gamma` is a power of two.
fn log2_inverse(gamma: &BigRational) -> f64 {
    let inv = gamma.recip();
    if inv.is_integer() {
        let k = inv.to_integer();
        let tz = k.trailing_zeros().unwrap_or(0);
        if k == BigInt::one() << tz {
            return tz as f64;
        }
    }
    ratio::to_f64(&inv).log2()
}

/// `m1 = ceil(c1/eps)`, `m2 = ceil(c2 log2(1/gamma))`, `m = m1 m2`.
pub fn amplification_params(eps: &BigRational, gamma: &BigRational, c1: u64, c2: u64) -> Result<XorParams> {
    let half = ratio::ratio(1, 2);
    if !(eps.is_positive() && eps < &BigRational::one()) {
        return Err(Error::InvalidParameter(format!("eps = {} outside (0, 1)", ratio::to_string(eps))));
    }
    if !(gamma.is_positive() && gamma < &half) {
        return Err(Error::InvalidParameter(format!("gamma = {} outside (0, 1/2)", ratio::to_string(gamma))));
    }
    if c1 == 0 || c2 == 0 {
        return Err(Error::InvalidParameter("c1 and c2 must be at least 1".into()));
    }
    let m1 = ceil_ratio(&(ratio::int(c1 as u128) / eps))?;
    let m2 = ((c2 as f64) * log2_inverse(gamma)).ceil().max(1.0) as u64;
    let m = m1.checked_mul(m2).ok_or(Error::Overflow("m = m1 m2"))?;
    let alpha = canonical_alpha()?;
    let stage_one_far = ratio::ratio(STAGE_ONE_FAR.0, STAGE_ONE_FAR.1);
    let stage_two_far = drucker_bound(ratio::to_f64(&stage_one_far), alpha, m2)?;
    Ok(XorParams {
        eps: eps.clone(),
        gamma: gamma.clone(),
        delta_abort: ratio::ratio(STAGE_ONE_ABORT.0, STAGE_ONE_ABORT.1),
        stage_one_far,
        c1,
        c2,
        m1,
        m2,
        m,
        alpha,
        stage_two_far,
    })
}

/// Smallest `m2` with `(1/2)(799/800)^{m2} <= gamma`, i.e. the second stage
/// reaching `1/2 - gamma` with every constant explicit. Computed in log space
/// so that `gamma = 2^{-N}` works for large `N`.
pub fn min_m2_for_gamma(gamma: &BigRational) -> Result<u64> {
    if !(gamma.is_positive() && gamma < &ratio::ratio(1, 2)) {
        return Err(Error::InvalidParameter(format!("gamma = {} outside (0, 1/2)", ratio::to_string(gamma))));
    }
    let need = (log2_inverse(gamma) - 1.0) * std::f64::consts::LN_2;
    let step = (800.0f64 / 799.0).ln();
    Ok(((need / step).ceil() as u64).max(1))
}
