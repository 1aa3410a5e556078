//! One exact check per structural claim, each reduced to a single
//! `computed {>=,<=} threshold` comparison.

use std::collections::BTreeMap;

use num_rational::BigRational;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::amplification::{amplified_pair, amplified_target, amplify_dist, base_target, emit_circuit, pmf_equivalence_check, uniform_likeness};
use crate::construction::{build_dist, LabeledDistribution};
use crate::error::{Error, Result};
use crate::generator::build_generator;
use crate::hypotheses::{
    abort_weight, cost_weight, error_weight, random_dnf, random_tree, within_half_exponent, DecisionTree, Dnf, Hypothesis, Term,
};
use crate::par::Exec;
use crate::ratio;
use crate::setcover::SetCoverInstance;

use super::{
    depth_error_frontier, find_dnf_restriction, find_restriction, junta_dnf, junta_learner, junta_tree, junta_variables,
    min_dist_dnf, min_error_below_depth, opt_tree_by_size, opt_tree_dp, width_error_frontier, AbortBudget, ClaimId, Guards,
    OracleReport, Relation,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClaimParams {
    pub ell: usize,
    /// Random hypotheses per sampled claim; `None` uses the claim's default
    /// (1000 for the average-cost laws, 20 for restriction searches).
    pub samples: Option<usize>,
    pub seed: u64,
    /// Flip the label of this support atom before checking (mutation testing).
    pub flip_label: Option<usize>,
}

impl Default for ClaimParams {
    fn default() -> Self {
        ClaimParams {
            ell: 2,
            samples: None,
            seed: 0,
            flip_label: None,
        }
    }
}

struct Ctx<'a> {
    inst: SetCoverInstance,
    params: &'a ClaimParams,
    guards: &'a Guards,
    exec: Exec,
    opt: usize,
    cover: Vec<usize>,
    big_n: usize,
    info: BTreeMap<String, String>,
}

impl Ctx<'_> {
    fn mutate(&self, t: LabeledDistribution) -> Result<LabeledDistribution> {
        match self.params.flip_label {
            Some(i) => t.with_flipped_label(i),
            None => Ok(t),
        }
    }

    fn base(&self, negated: bool) -> Result<LabeledDistribution> {
        self.mutate(base_target(&self.inst, negated)?)
    }

    fn amp(&self, negated: bool) -> Result<LabeledDistribution> {
        self.mutate(amplified_target(&self.inst, self.params.ell, negated, self.guards.max_bits)?)
    }

    fn floor(&self, k: u128) -> BigRational {
        ratio::reciprocal(k, self.big_n)
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.params.seed)
    }

    fn report(&self, claim: ClaimId, computed: BigRational, threshold: BigRational, rel: Relation) -> OracleReport {
        OracleReport::new(claim, self.info.clone(), computed, threshold, rel)
    }

    fn failures(&self, claim: ClaimId, failed: usize) -> OracleReport {
        self.report(claim, ratio::int(failed as u128), ratio::int(0), Relation::AtMost)
    }
}

/// Runs the exact check for `claim` on `inst` (normalized first if needed).
pub fn verify_claim(
    claim: ClaimId,
    inst: &SetCoverInstance,
    params: &ClaimParams,
    guards: &Guards,
    exec: Exec,
) -> Result<OracleReport> {
    if claim.uses_ell() && params.ell < 2 {
        return Err(Error::InvalidParameter("claims on the amplified target need ell >= 2".into()));
    }
    let inst = if inst.is_normalized() { inst.clone() } else { inst.normalize().0 };
    let sol = inst.exact_opt(guards.max_sets)?;
    let mut info = BTreeMap::new();
    info.insert("n".into(), inst.n().to_string());
    info.insert("universe".into(), inst.universe_len().to_string());
    info.insert("N".into(), inst.total_vertices().to_string());
    info.insert("opt".into(), sol.size.to_string());
    if claim.uses_ell() {
        info.insert("ell".into(), params.ell.to_string());
    }
    if let Some(i) = params.flip_label {
        info.insert("flip_label".into(), i.to_string());
    }
    let cx = Ctx {
        big_n: inst.total_vertices(),
        inst,
        params,
        guards,
        exec,
        opt: sol.size,
        cover: sol.witness,
        info,
    };
    match claim {
        ClaimId::DepthError | ClaimId::DepthErrorAbort => depth_error(&cx, claim),
        ClaimId::WidthError => width_error(&cx),
        ClaimId::TreeRestriction | ClaimId::TreeRestrictionAbort => tree_restriction(&cx, claim),
        ClaimId::DnfRestriction => dnf_restriction(&cx),
        ClaimId::TreeFarness | ClaimId::AbortFarness => tree_farness(&cx, claim),
        ClaimId::DnfFarness => dnf_farness(&cx),
        ClaimId::AvgDepthLaw => avg_depth_law(&cx),
        ClaimId::AvgWidthLaw => avg_width_law(&cx),
        ClaimId::JuntaCertificate => junta_certificate(&cx),
        ClaimId::DistEquivalence => dist_equivalence(&cx),
        ClaimId::GeneratorExactness => generator_exactness(&cx),
        ClaimId::UniformLike => uniform_like(&cx),
        ClaimId::JuntaLearning => junta_learning(&cx),
    }
}

/// Least error over every tree with expected depth `< opt/2` (and abort
/// mass `< 1/2`) on the base target, against `1/(2N)`.
fn depth_error(cx: &Ctx, claim: ClaimId) -> Result<OracleReport> {
    let abort = claim == ClaimId::DepthErrorAbort;
    let base = cx.base(false)?;
    let front = depth_error_frontier(&base, abort, cx.guards, cx.exec)?;
    let half = ratio::ratio(1, 2);
    let best = min_error_below_depth(&front, &ratio::ratio(cx.opt as u128, 2), abort.then_some(&half))
        .expect("a constant leaf has depth 0");
    Ok(cx
        .report(claim, best.error.clone(), cx.floor(2), Relation::AtLeast)
        .with_witness(Some(Hypothesis::Tree(best.tree.clone())))
        .with_note(format!("{} Pareto-optimal trees enumerated", front.len())))
}

fn width_error(cx: &Ctx) -> Result<OracleReport> {
    let base = cx.base(true)?;
    let front = width_error_frontier(&base, cx.guards)?;
    let limit = ratio::ratio(cx.opt as u128, 2);
    let best = front
        .iter()
        .filter(|p| p.avg_width < limit)
        .min_by(|a, b| a.error.cmp(&b.error))
        .expect("the empty DNF has width 0");
    Ok(cx
        .report(ClaimId::WidthError, best.error.clone(), cx.floor(2), Relation::AtLeast)
        .with_witness(Some(Hypothesis::Dnf(best.dnf.clone())))
        .with_note(format!("{} Pareto-optimal DNF behaviours enumerated", front.len())))
}

/// Tree families fed to the restriction search: certificate, constants,
/// depth-optimal trees and seeded random trees.
fn tree_family(cx: &Ctx, amp: &LabeledDistribution, aborts: bool) -> Result<Vec<DecisionTree>> {
    let ell = cx.params.ell;
    let vars = amp.arity;
    let mut out = vec![
        junta_tree(&cx.inst, &cx.cover, ell, false)?,
        DecisionTree::constant(false),
        DecisionTree::constant(true),
    ];
    let budget = aborts.then(|| AbortBudget::AtMost(ratio::ratio(1, 2)));
    for d in 0..=2.min(cx.guards.dp_max_depth) {
        if vars <= cx.guards.dp_max_vars {
            out.push(opt_tree_dp(amp, d, budget.as_ref(), cx.guards, cx.exec)?.tree);
        }
    }
    if aborts {
        out.push(DecisionTree::abort());
    }
    let mut rng = cx.rng();
    let max_size = if vars >= 5 { 16 } else { 1 << vars };
    for _ in 0..cx.params.samples.unwrap_or(20) {
        let size = rng.random_range(1..=max_size);
        out.push(random_tree(&mut rng, vars, size, if aborts { 0.25 } else { 0.0 })?);
    }
    Ok(out)
}

fn tree_restriction(cx: &Ctx, claim: ClaimId) -> Result<OracleReport> {
    let aborts = claim == ClaimId::TreeRestrictionAbort;
    let amp = cx.amp(false)?;
    let base = cx.base(false)?;
    let family = tree_family(cx, &amp, aborts)?;
    let mut failed = Vec::new();
    for t in &family {
        let eps = amp.to_rational(error_weight(t, &amp)?);
        let d = amp.to_rational(cost_weight(t, &amp)?);
        let delta = amp.to_rational(abort_weight(t, &amp)?);
        let r = find_restriction(t, &amp, &base, cx.params.ell, &eps, &d, aborts.then_some(&delta), cx.guards, cx.exec)?;
        if !r.found() {
            failed.push(t.clone());
        }
    }
    Ok(cx
        .failures(claim, failed.len())
        .with_witness(failed.first().cloned().map(Hypothesis::Tree))
        .with_note(format!("{} trees searched", family.len())))
}

fn dnf_restriction(cx: &Ctx) -> Result<OracleReport> {
    let ell = cx.params.ell;
    let amp = cx.amp(true)?;
    let base = cx.base(true)?;
    let mut family = vec![junta_dnf(&cx.inst, &cx.cover, ell)?, Dnf::falsum()];
    if amp.arity <= cx.guards.dnf_max_vars {
        for (terms, width) in [(1, 1), (1, 2), (2, 2)] {
            if terms <= cx.guards.dnf_max_terms {
                family.push(min_dist_dnf(&amp, terms, width, cx.guards, cx.exec)?.dnf);
            }
        }
    }
    let mut rng = cx.rng();
    for _ in 0..cx.params.samples.unwrap_or(20) {
        let terms = rng.random_range(1..=4);
        family.push(random_dnf(&mut rng, amp.arity, terms, amp.arity.min(3))?);
    }
    let mut failed = Vec::new();
    for f in &family {
        let eps = amp.to_rational(error_weight(f, &amp)?);
        let w = amp.to_rational(cost_weight(f, &amp)?);
        if !find_dnf_restriction(f, &amp, &base, ell, &eps, &w, cx.guards, cx.exec)?.found() {
            failed.push(f.clone());
        }
    }
    Ok(cx
        .failures(ClaimId::DnfRestriction, failed.len())
        .with_witness(failed.first().cloned().map(Hypothesis::Dnf))
        .with_note(format!("{} DNFs searched", family.len())))
}

/// Exact minimum error over all trees strictly below the size threshold.
fn tree_farness(cx: &Ctx, claim: ClaimId) -> Result<OracleReport> {
    let (div, floor, budget) = if claim == ClaimId::AbortFarness {
        (40, cx.floor(20), Some(AbortBudget::Below(ratio::ratio(2, 5))))
    } else {
        (8, cx.floor(4), None)
    };
    let exponent = (cx.opt * cx.params.ell) as u64;
    let max_size = ratio::largest_below_pow2(exponent, div) as usize;
    let amp = cx.amp(false)?;
    let best = opt_tree_by_size(&amp, max_size, budget.as_ref(), cx.guards, cx.exec)?;
    let mut r = cx
        .report(claim, best.error, floor, Relation::AtLeast)
        .with_witness(Some(Hypothesis::Tree(best.tree)))
        .with_note(format!("all trees with at most {max_size} leaves (threshold 2^({exponent}/{div}))"));
    r.parameters.insert("max_size".into(), max_size.to_string());
    Ok(r)
}

fn dnf_farness(cx: &Ctx) -> Result<OracleReport> {
    let exponent = (cx.opt * cx.params.ell) as u64;
    let max_terms = ratio::largest_below_pow2(exponent, 16) as usize;
    let amp = cx.amp(true)?;
    let best = min_dist_dnf(&amp, max_terms, amp.arity, cx.guards, cx.exec)?;
    let mut r = cx
        .report(ClaimId::DnfFarness, best.error, cx.floor(4), Relation::AtLeast)
        .with_witness(Some(Hypothesis::Dnf(best.dnf)))
        .with_note(format!("all DNFs with at most {max_terms} terms (threshold 2^({exponent}/16))"));
    r.parameters.insert("max_terms".into(), max_terms.to_string());
    Ok(r)
}

fn reach_weight(t: &LabeledDistribution, fixed: &[(usize, bool)]) -> u128 {
    t.atoms
        .iter()
        .zip(&t.weights)
        .filter(|(x, _)| fixed.iter().all(|&(v, b)| x.get(v) == b))
        .map(|(_, &w)| w)
        .sum()
}

/// Random trees: expected depth at most `2·log2(size)` and every leaf of
/// depth `|L|` reached with probability at most `2^{-|L|/2}`.
fn avg_depth_law(cx: &Ctx) -> Result<OracleReport> {
    let amp = cx.amp(false)?;
    let mut rng = cx.rng();
    let max_size = if amp.arity >= 6 { 64 } else { 1 << amp.arity };
    let count = cx.params.samples.unwrap_or(1000);
    let mut failed = Vec::new();
    for _ in 0..count {
        let size = rng.random_range(1..=max_size);
        let t = random_tree(&mut rng, amp.arity, size, 0.0)?;
        let depth = amp.to_rational(cost_weight(&t, &amp)?);
        let leaves_ok = t.leaves().iter().all(|l| {
            within_half_exponent(reach_weight(&amp, &l.assignments), amp.denominator, l.assignments.len())
        });
        if !leaves_ok || !ratio::le_log2_multiple(&depth, 2, t.size() as u64) {
            failed.push(t);
        }
    }
    Ok(cx
        .failures(ClaimId::AvgDepthLaw, failed.len())
        .with_witness(failed.first().cloned().map(Hypothesis::Tree))
        .with_note(format!("{count} random trees with 1..={max_size} leaves")))
}

/// Random DNFs biased towards the certificate's terms so that many come
/// within 1/4 of the negated target; those with at least 4 terms must have
/// expected width at most `4·log2(size)`. Every term `t` of every sample must
/// also be accepted with probability at most `2^{-|t|/2}`.
fn avg_width_law(cx: &Ctx) -> Result<OracleReport> {
    let amp = cx.amp(true)?;
    let cert = junta_dnf(&cx.inst, &cx.cover, cx.params.ell)?;
    let mut rng = cx.rng();
    let wanted = cx.params.samples.unwrap_or(1000);
    let attempts = 50 * wanted;
    let quarter = ratio::ratio(1, 4);
    let (mut qualifying, mut tried) = (0, 0);
    let mut failed = Vec::new();
    while qualifying < wanted && tried < attempts {
        tried += 1;
        let s = rng.random_range(4..=8);
        let mut terms = Vec::with_capacity(s);
        for _ in 0..s {
            if rng.random_bool(0.6) {
                let mut lits = cert.terms().choose(&mut rng).expect("certificate has terms").literals().to_vec();
                if rng.random_bool(0.3) {
                    lits.remove(rng.random_range(0..lits.len()));
                }
                terms.push(Term::new(lits)?);
            } else {
                let w = amp.arity.min(3);
                terms.extend(random_dnf(&mut rng, amp.arity, 1, w)?.terms().iter().cloned());
            }
        }
        let f = Dnf::new(terms);
        let terms_ok = f.terms().iter().all(|t| {
            let fixed: Vec<(usize, bool)> = t.literals().iter().map(|l| (l.var, l.positive)).collect();
            within_half_exponent(reach_weight(&amp, &fixed), amp.denominator, t.width())
        });
        let close = amp.to_rational(error_weight(&f, &amp)?) <= quarter;
        let mut ok = terms_ok;
        if close {
            qualifying += 1;
            let width = amp.to_rational(cost_weight(&f, &amp)?);
            ok &= ratio::le_log2_multiple(&width, 4, f.size() as u64);
        }
        if !ok {
            failed.push(f);
        }
    }
    let mut r = cx
        .failures(ClaimId::AvgWidthLaw, failed.len())
        .with_witness(failed.first().cloned().map(Hypothesis::Dnf))
        .with_note(format!("{qualifying} of {tried} sampled DNFs were within 1/4"));
    r.parameters.insert("qualifying".into(), qualifying.to_string());
    Ok(r)
}

/// The label is a function of the cover's `kℓ` variables on the support,
/// and the explicit certificate tree has zero error.
fn junta_certificate(cx: &Ctx) -> Result<OracleReport> {
    let amp = cx.amp(false)?;
    let vars = junta_variables(&cx.cover, cx.params.ell);
    let t = junta_tree(&cx.inst, &cx.cover, cx.params.ell, false)?;
    let mut failed = 0;
    let mut proj: BTreeMap<Vec<bool>, bool> = BTreeMap::new();
    for (y, &l) in amp.atoms.iter().zip(&amp.labels) {
        let key: Vec<bool> = vars.iter().map(|&v| y.get(v)).collect();
        if *proj.entry(key).or_insert(l) != l {
            failed += 1;
            break;
        }
    }
    let err = error_weight(&t, &amp)?;
    failed += usize::from(err > 0);
    let mut r = cx
        .failures(ClaimId::JuntaCertificate, failed)
        .with_witness(Some(Hypothesis::Tree(t)))
        .with_note(format!("certificate error {}", ratio::to_string(&amp.to_rational(err))));
    r.parameters.insert("cover".into(), format!("{:?}", cx.inst.set_names(&cx.cover)));
    Ok(r)
}

fn dist_equivalence(cx: &Ctx) -> Result<OracleReport> {
    let (_, dist) = amplified_pair(&cx.inst, cx.params.ell, false)?;
    let mut failed = 0;
    for j in 0..cx.params.ell {
        failed += usize::from(!pmf_equivalence_check(&dist, j, cx.guards.max_bits, cx.exec)?);
    }
    Ok(cx.failures(ClaimId::DistEquivalence, failed).with_note(format!("{} positions checked", cx.params.ell)))
}

/// On the universe-padded instance: the seed pushforward equals the
/// amplified pmf, and the circuit (plain and negated) reproduces every label.
fn generator_exactness(cx: &Ctx) -> Result<OracleReport> {
    let ell = cx.params.ell;
    let (padded, note) = cx.inst.pad_universe_to_power_of_two();
    let gen = build_generator(&padded, ell)?;
    let dist = amplify_dist(&build_dist(&padded)?, ell, false)?.to_explicit(cx.guards.max_bits)?;
    let mut failed = usize::from(!gen.matches(&dist, cx.guards.max_seed_bits, cx.exec)?);
    for negated in [false, true] {
        let circuit = emit_circuit(&padded, ell, negated)?;
        let mut target = amplified_target(&padded, ell, negated, cx.guards.max_bits)?;
        if let Some(i) = cx.params.flip_label {
            target = target.with_flipped_label(i)?;
        }
        for (y, &l) in target.atoms.iter().zip(&target.labels) {
            if circuit.evaluate(y)? != l {
                failed += 1;
                break;
            }
        }
    }
    let mut r = cx
        .failures(ClaimId::GeneratorExactness, failed)
        .with_note(format!("{} seed bits", gen.seed_bits));
    r.parameters.insert("padded_elements".into(), note.dummies.len().to_string());
    Ok(r)
}

fn uniform_like(cx: &Ctx) -> Result<OracleReport> {
    let (_, dist) = amplified_pair(&cx.inst, cx.params.ell, false)?;
    let u = uniform_likeness(&dist, cx.guards.max_bits)?;
    Ok(cx
        .report(ClaimId::UniformLike, u.worst, ratio::int(1), Relation::AtMost)
        .with_note(format!("{} conditional cases; value is max Pr^2 · 2^|R|", u.cases)))
}

/// For every `k <= n`: the learner finds a consistent `k`-junta iff
/// `opt <= k`, and what it returns is a set cover.
fn junta_learning(cx: &Ctx) -> Result<OracleReport> {
    let base = cx.base(false)?;
    let mut mismatches = 0;
    for k in 0..=cx.inst.n() {
        let found = junta_learner(&base, k, cx.guards, cx.exec)?;
        let cover_ok = found.as_ref().is_none_or(|f| cx.inst.is_cover(&f.vars).unwrap_or(false));
        if found.is_some() != (cx.opt <= k) || !cover_ok {
            mismatches += 1;
        }
    }
    Ok(cx
        .failures(ClaimId::JuntaLearning, mismatches)
        .with_note(format!("k = 0..={}", cx.inst.n())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn run(claim: ClaimId, inst: &SetCoverInstance, params: &ClaimParams) -> OracleReport {
        verify_claim(claim, inst, params, &Guards::default(), Exec::Parallel).unwrap()
    }

    #[test]
    fn every_claim_passes_on_the_sample_instance() {
        let inst = fixtures::five_by_four();
        let params = ClaimParams {
            samples: Some(30),
            ..ClaimParams::default()
        };
        // n = 5 exceeds the default DNF-variable and junta-size guards
        let guards = Guards {
            dnf_max_vars: 10,
            junta_max_k: 5,
            ..Guards::default()
        };
        for claim in ClaimId::ALL {
            let r = verify_claim(claim, &inst, &params, &guards, Exec::Parallel).unwrap_or_else(|e| panic!("{claim}: {e}"));
            assert!(r.pass, "{claim}: {}", r.to_json());
        }
    }

    #[test]
    fn tree_farness_on_sample_instance() {
        let r = run(ClaimId::TreeFarness, &fixtures::five_by_four(), &ClaimParams::default());
        assert_eq!(r.threshold, ratio::ratio(1, 36));
        assert_eq!(r.parameters["max_size"], "1");
        assert_eq!(r.computed, ratio::ratio(1, 2));
    }

    #[test]
    fn depth_error_on_one_by_one() {
        let r = run(ClaimId::DepthError, &fixtures::one_by_one(), &ClaimParams::default());
        assert!(r.pass);
        assert_eq!(r.computed, ratio::ratio(1, 2));
        assert_eq!(r.threshold, ratio::ratio(1, 4));
    }

    #[test]
    fn label_flip_is_detected() {
        let inst = fixtures::five_by_four();
        let params = ClaimParams {
            flip_label: Some(0),
            ..ClaimParams::default()
        };
        assert!(!run(ClaimId::JuntaCertificate, &inst, &params).pass);
        assert!(!run(ClaimId::GeneratorExactness, &inst, &params).pass);
    }

    #[test]
    fn wider_threshold_still_passes() {
        // opt·ℓ = 16, so every size s with s^8 < 2^16 (s <= 3) is admissible.
        let inst = fixtures::disjoint_singletons(4);
        let params = ClaimParams {
            ell: 4,
            ..ClaimParams::default()
        };
        let r = run(ClaimId::TreeFarness, &inst, &params);
        assert_eq!(r.parameters["max_size"], "3");
        assert!(r.pass, "{}", r.to_json());
    }

    #[test]
    fn rejects_small_ell() {
        let p = ClaimParams {
            ell: 1,
            ..ClaimParams::default()
        };
        assert!(verify_claim(ClaimId::TreeFarness, &fixtures::one_by_one(), &p, &Guards::default(), Exec::Sequential).is_err());
    }
}
