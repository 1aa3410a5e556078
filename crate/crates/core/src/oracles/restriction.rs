//! Restriction search: turn a good approximator of the amplified target into
//! one for the base target by fixing every block position except one.

use num_rational::BigRational;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bits::BitString;
use crate::construction::LabeledDistribution;
use crate::error::{Error, Result};
use crate::hypotheses::{abort_weight, cost_weight, error_weight, restrict_dnf, restrict_tree, Classifier, DecisionTree, Dnf};
use crate::par::{self, Exec};
use crate::ratio;

use super::Guards;

/// Multipliers on (error, cost per position, abort) that the witness must meet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Slack {
    pub error: u32,
    pub cost: u32,
    /// `(numerator, denominator)` on the abort mass, for abort trees.
    pub abort: Option<(u32, u32)>,
}

impl Slack {
    pub const PLAIN: Slack = Slack {
        error: 2,
        cost: 2,
        abort: None,
    };
    pub const ABORT: Slack = Slack {
        error: 10,
        cost: 10,
        abort: Some((5, 4)),
    };
}

#[derive(Clone, Debug, PartialEq)]
pub struct Restriction<H> {
    pub z: BitString,
    pub restricted: H,
    pub error: BigRational,
    pub avg_cost: BigRational,
    pub abort: BigRational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RestrictionSearch<H> {
    /// Block position kept free (0-based).
    pub j: usize,
    /// `E[q_p]` for every position `p`: expected queries (or literals) there.
    pub expected_q: Vec<BigRational>,
    pub error_bound: BigRational,
    pub cost_bound: BigRational,
    pub abort_bound: Option<BigRational>,
    /// False when `z` was sampled because `n(ℓ-1)` exceeds the guard.
    pub exhaustive: bool,
    pub witness: Option<Restriction<H>>,
}

impl<H> RestrictionSearch<H> {
    pub fn found(&self) -> bool {
        self.witness.is_some()
    }
}

struct Problem<'a> {
    amplified: &'a LabeledDistribution,
    base: &'a LabeledDistribution,
    n: usize,
    ell: usize,
}

#[allow(clippy::too_many_arguments)]
fn search<H, R>(
    h: &H,
    p: &Problem,
    eps: &BigRational,
    cost: &BigRational,
    delta: Option<&BigRational>,
    slack: Slack,
    restrict: R,
    guards: &Guards,
    exec: Exec,
) -> Result<RestrictionSearch<H>>
where
    H: Classifier + PerPosition + Send,
    R: Fn(&BitString, usize) -> Result<H> + Sync + Send,
{
    let (n, ell) = (p.n, p.ell);
    if ell < 2 || p.amplified.arity != n * ell || p.base.arity != n {
        return Err(Error::InvalidParameter("targets do not match the (n, ell) block shape".into()));
    }
    let mut q = vec![0u128; ell];
    for (y, &w) in p.amplified.atoms.iter().zip(&p.amplified.weights) {
        for (pos, &c) in h.per_position(y, (n, ell))?.iter().enumerate() {
            q[pos] += w * c as u128;
        }
    }
    let j = (0..ell).min_by_key(|&pos| (q[pos], pos)).expect("ell >= 2");
    let expected_q: Vec<BigRational> = q.iter().map(|&w| p.amplified.to_rational(w)).collect();

    let error_bound = ratio::int(slack.error as u128) * eps;
    let cost_bound = ratio::ratio(slack.cost as u128, ell as u128) * cost;
    let abort_bound = match (slack.abort, delta) {
        (Some((a, b)), Some(d)) => Some(ratio::ratio(a as u128, b as u128) * d),
        _ => None,
    };

    let z_bits = n * (ell - 1);
    let exhaustive = z_bits <= guards.max_z_bits;
    let count = 1u64 << z_bits.min(guards.max_z_bits);
    let z_of = |i: u64| -> BitString {
        if exhaustive {
            BitString::from_u64(i, z_bits)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(i);
            BitString::from_bools((0..z_bits).map(|_| rng.next_u32() & 1 == 1))
        }
    };
    let check = |i: u64| -> Option<Result<Restriction<H>>> {
        let z = z_of(i);
        let attempt = || -> Result<Option<Restriction<H>>> {
            let t = restrict(&z, j)?;
            let error = p.base.to_rational(error_weight(&t, p.base)?);
            let avg_cost = p.base.to_rational(cost_weight(&t, p.base)?);
            let abort = p.base.to_rational(abort_weight(&t, p.base)?);
            let ok = error <= error_bound && avg_cost <= cost_bound && abort_bound.as_ref().is_none_or(|b| &abort <= b);
            Ok(ok.then(|| Restriction {
                z: z.clone(),
                restricted: t,
                error,
                avg_cost,
                abort,
            }))
        };
        attempt().transpose()
    };
    let witness = par::find_first(exec, 0..count, check).transpose()?;
    Ok(RestrictionSearch {
        j,
        expected_q,
        error_bound,
        cost_bound,
        abort_bound,
        exhaustive,
        witness,
    })
}

/// Hypotheses whose cost splits over block positions.
trait PerPosition {
    fn per_position(&self, y: &BitString, shape: (usize, usize)) -> Result<Vec<usize>>;
}

impl PerPosition for DecisionTree {
    fn per_position(&self, y: &BitString, shape: (usize, usize)) -> Result<Vec<usize>> {
        Ok(self.trace(y, Some(shape))?.per_position)
    }
}

impl PerPosition for Dnf {
    fn per_position(&self, y: &BitString, shape: (usize, usize)) -> Result<Vec<usize>> {
        Ok(self.trace(y, Some(shape))?.per_position)
    }
}

/// Search for `(j, z)` such that `T*(x) = T(par_complete(z, x, j))` has error
/// at most `2·eps` and expected depth at most `2d/ℓ` on the base target; with
/// `delta`, the abort-tree version with `(10·eps, 10d/ℓ, 5δ/4)`.
///
/// `j` minimizes the expected number of position-`j` queries (lowest on
/// ties); `z` is searched in increasing integer order and the first witness
/// is returned.
#[allow(clippy::too_many_arguments)]
pub fn find_restriction(
    t: &DecisionTree,
    amplified: &LabeledDistribution,
    base: &LabeledDistribution,
    ell: usize,
    eps: &BigRational,
    d: &BigRational,
    delta: Option<&BigRational>,
    guards: &Guards,
    exec: Exec,
) -> Result<RestrictionSearch<DecisionTree>> {
    let n = base.arity;
    let slack = if delta.is_some() { Slack::ABORT } else { Slack::PLAIN };
    let p = Problem { amplified, base, n, ell };
    search(t, &p, eps, d, delta, slack, |z, j| restrict_tree(t, n, ell, z, j), guards, exec)
}

/// DNF version: error at most `2·eps` and expected width at most `2w/ℓ`.
#[allow(clippy::too_many_arguments)]
pub fn find_dnf_restriction(
    f: &Dnf,
    amplified: &LabeledDistribution,
    base: &LabeledDistribution,
    ell: usize,
    eps: &BigRational,
    w: &BigRational,
    guards: &Guards,
    exec: Exec,
) -> Result<RestrictionSearch<Dnf>> {
    let n = base.arity;
    let p = Problem { amplified, base, n, ell };
    search(f, &p, eps, w, None, Slack::PLAIN, |z, j| restrict_dnf(f, n, ell, z, j), guards, exec)
}
