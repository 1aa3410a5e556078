//! Hard-instance bundles, verdicts on submitted hypotheses, and the grid
//! suite runner.
//!
//! A bundle directory holds `circuit.txt` (netlist), `generator.json` and
//! `bundle.json` (metadata). Metadata separates exact numbers from
//! quantities that hide unspecified constants, so nothing symbolic can be
//! read as a number by accident.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::amplification::{amplified_target, emit_circuit};
use crate::circuit::Circuit;
use crate::construction::LabeledDistribution;
use crate::error::{Error, Result};
use crate::generator::{build_generator, GeneratorSpec};
use crate::hypotheses::{dist_mc, error_weight, Classifier, Hypothesis, McEstimate};
use crate::oracles::{verify_claim, ClaimId, ClaimParams, Guards, OracleReport};
use crate::par::{self, Exec};
use crate::ratio::{self, serde_ratio};
use crate::setcover::{GapParams, InstanceDocument, PaddingNote, SetCoverInstance};
use crate::xor::{amplification_params, drucker_bound, emit_xor_circuit, min_m2_for_gamma, xor_labeled, XorParams};

pub const BUNDLE_FORMAT: &str = "dthard-bundle/1";
pub const CIRCUIT_FILE: &str = "circuit.txt";
pub const GENERATOR_FILE: &str = "generator.json";
pub const METADATA_FILE: &str = "bundle.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Construction,
    Estimation,
}

/// A metadata value, tagged by how much of it is actually known.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Quantity {
    /// An exact rational, `"p/q"`.
    Exact { value: String },
    /// `2^(numerator/denominator)`, exponent kept unreduced; `approx` is informative.
    PowerOfTwo {
        numerator: u64,
        denominator: u64,
        approx: f64,
    },
    /// An expression with unspecified constants; never a number.
    Symbolic {
        expr: String,
        parameters: BTreeMap<String, String>,
    },
}

impl Quantity {
    pub fn exact(r: &BigRational) -> Self {
        Quantity::Exact { value: ratio::to_string(r) }
    }

    pub fn pow2(numerator: u64, denominator: u64) -> Self {
        Quantity::PowerOfTwo {
            numerator,
            denominator,
            approx: (numerator as f64 / denominator as f64).exp2(),
        }
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(self, Quantity::Symbolic { .. })
    }

    /// The exact value, for [`Quantity::Exact`] only.
    pub fn as_exact(&self) -> Option<BigRational> {
        match self {
            Quantity::Exact { value } => ratio::parse(value).ok(),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YesCertificate {
    /// `k ℓ` relevant variables when `opt <= k`.
    pub junta_size: usize,
    /// Lexicographically least optimal cover, when it has at most `k` sets.
    pub cover: Option<Vec<String>>,
    /// Estimation only: depth `k ℓ m` of the exact tree.
    pub depth: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoCertificate {
    pub tree_size: Option<Quantity>,
    pub abort_tree_size: Option<Quantity>,
    /// Aborts must have mass strictly below this.
    pub abort_below: Option<Quantity>,
    pub dnf_size: Option<Quantity>,
    /// Estimation only: `δ`-abort depth `k'/20` on a single copy.
    pub abort_depth: Option<Quantity>,
    /// Estimation only: depth of every tree the composed target is far from.
    pub depth: Option<Quantity>,
    /// Estimation only: explicit parameters of the XOR stage.
    pub xor: Option<XorStage>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XorStage {
    /// Parameters for `eps = 1/(20N)` and `gamma = 2^{-N}`.
    pub params: XorParams,
    /// Second-stage length that reaches `1/2 - gamma` with explicit constants.
    pub explicit_m2: u64,
    /// `drucker_bound(1/800, alpha, m)` for this bundle's `m`.
    pub drucker_at_m: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Floors {
    /// `1/(4N)`.
    pub plain: Quantity,
    /// `1/(20N)`.
    pub abort: Quantity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleMetadata {
    pub format: String,
    pub problem: Problem,
    /// SHA-256 of the instance and generation parameters.
    pub instance_hash: String,
    /// The instance actually encoded (after universe padding).
    pub instance: InstanceDocument,
    pub padding: PaddingNote,
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub ell: usize,
    pub m: usize,
    pub negated: bool,
    pub gap: GapParams,
    /// `None` when the exact solver's guard was exceeded.
    pub opt: Option<usize>,
    pub yes: YesCertificate,
    pub no: NoCertificate,
    pub floors: Floors,
    #[serde(with = "serde_ratio")]
    pub eps: BigRational,
    /// Strictly-proper mode: hypotheses must have at most this many leaves/terms.
    pub strict_size: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HardInstanceBundle {
    pub circuit: Circuit,
    pub generator: GeneratorSpec,
    pub metadata: BundleMetadata,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstructionOptions {
    pub ell: usize,
    pub negated: bool,
    /// Defaults to `(opt, opt)`.
    pub gap: Option<GapParams>,
    pub strict_size: Option<u64>,
    /// Defaults to `1/(4N)`.
    #[serde(with = "opt_ratio")]
    pub eps: Option<BigRational>,
    pub allow_ell_one: bool,
}

impl Default for ConstructionOptions {
    fn default() -> Self {
        ConstructionOptions {
            ell: 2,
            negated: false,
            gap: None,
            strict_size: None,
            eps: None,
            allow_ell_one: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationOptions {
    pub m: usize,
    pub gap: Option<GapParams>,
    pub strict_size: Option<u64>,
    /// Defaults to `1/2 - 2^{-N}`.
    #[serde(with = "opt_ratio")]
    pub eps: Option<BigRational>,
    /// Constants standing in for the hidden factors of `m1` and `m2`.
    pub c1: u64,
    pub c2: u64,
}

impl Default for EstimationOptions {
    fn default() -> Self {
        EstimationOptions {
            m: 1,
            gap: None,
            strict_size: None,
            eps: None,
            c1: 1,
            c2: 1,
        }
    }
}

mod opt_ratio {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&crate::ratio::to_string(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigRational>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|t| crate::ratio::parse(&t).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[derive(Serialize)]
struct HashInput<'a> {
    format: &'a str,
    problem: Problem,
    instance: &'a InstanceDocument,
    ell: usize,
    m: usize,
    negated: bool,
    gap: GapParams,
    strict_size: Option<u64>,
    eps: String,
}

fn instance_hash(meta: &BundleMetadata) -> String {
    let input = HashInput {
        format: &meta.format,
        problem: meta.problem,
        instance: &meta.instance,
        ell: meta.ell,
        m: meta.m,
        negated: meta.negated,
        gap: meta.gap,
        strict_size: meta.strict_size,
        eps: ratio::to_string(&meta.eps),
    };
    let bytes = serde_json::to_vec(&input).expect("hash input serializes");
    hex::encode(Sha256::digest(bytes))
}

fn prepare(inst: &SetCoverInstance) -> Result<(SetCoverInstance, PaddingNote)> {
    if !inst.is_normalized() {
        return Err(Error::InvalidParameter("bundles need a normalized instance; normalize it first".into()));
    }
    Ok(inst.pad_universe_to_power_of_two())
}

struct Common {
    opt: Option<usize>,
    cover: Option<Vec<String>>,
    gap: GapParams,
}

fn common(inst: &SetCoverInstance, gap: Option<GapParams>, guards: &Guards) -> Result<Common> {
    let sol = inst.exact_opt(guards.max_sets).ok();
    let gap = match (gap, &sol) {
        (Some(g), _) => g,
        (None, Some(s)) => GapParams::new(s.size, s.size)?,
        (None, None) => {
            return Err(Error::InvalidParameter(
                "instance too large for the exact solver; pass the gap explicitly".into(),
            ))
        }
    };
    let cover = sol
        .as_ref()
        .filter(|s| s.size <= gap.k)
        .map(|s| inst.set_names(&s.witness));
    Ok(Common {
        opt: sol.map(|s| s.size),
        cover,
        gap,
    })
}

fn floors(big_n: usize) -> Floors {
    Floors {
        plain: Quantity::exact(&ratio::reciprocal(4, big_n)),
        abort: Quantity::exact(&ratio::reciprocal(20, big_n)),
    }
}

/// `2^{-N}` as an exact rational.
fn two_to_minus(n: usize) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << n)
}

/// Bundle for the construction problem: the amplified circuit (negated for
/// the DNF variant), its generator, and the yes/no thresholds.
///
/// Instances whose universe is not a power of two are padded first (the
/// optimum is unchanged); metadata describes the padded instance.
pub fn gen_construction(inst: &SetCoverInstance, opts: &ConstructionOptions, guards: &Guards) -> Result<HardInstanceBundle> {
    let ell = opts.ell;
    if ell == 0 || (ell == 1 && !opts.allow_ell_one) {
        return Err(Error::InvalidParameter("ell must be at least 2 (ell = 1 needs the override)".into()));
    }
    let (padded, padding) = prepare(inst)?;
    let c = common(&padded, opts.gap, guards)?;
    let kl = (c.gap.k_prime * ell) as u64;
    let big_n = padded.total_vertices();
    let no = if opts.negated {
        NoCertificate {
            tree_size: None,
            abort_tree_size: None,
            abort_below: None,
            dnf_size: Some(Quantity::pow2(kl, 16)),
            abort_depth: None,
            depth: None,
            xor: None,
        }
    } else {
        NoCertificate {
            tree_size: Some(Quantity::pow2(kl, 8)),
            abort_tree_size: Some(Quantity::pow2(kl, 40)),
            abort_below: Some(Quantity::exact(&ratio::ratio(2, 5))),
            dnf_size: None,
            abort_depth: None,
            depth: None,
            xor: None,
        }
    };
    let mut metadata = BundleMetadata {
        format: BUNDLE_FORMAT.into(),
        problem: Problem::Construction,
        instance_hash: String::new(),
        instance: padded.to_document(),
        padding,
        n: padded.n(),
        big_n,
        ell,
        m: 1,
        negated: opts.negated,
        gap: c.gap,
        opt: c.opt,
        yes: YesCertificate {
            junta_size: c.gap.k * ell,
            cover: c.cover,
            depth: None,
        },
        no,
        floors: floors(big_n),
        eps: opts.eps.clone().unwrap_or_else(|| ratio::reciprocal(4, big_n)),
        strict_size: opts.strict_size,
    };
    metadata.instance_hash = instance_hash(&metadata);
    Ok(HardInstanceBundle {
        circuit: emit_circuit(&padded, ell, opts.negated)?,
        generator: build_generator(&padded, ell)?,
        metadata,
    })
}

/// Bundle for the estimation problem: `ℓ = 2`, the `m`-fold XOR of the plain
/// amplified circuit, and `m` concatenated generator copies.
pub fn gen_estimation(inst: &SetCoverInstance, opts: &EstimationOptions, guards: &Guards) -> Result<HardInstanceBundle> {
    let (m, ell) = (opts.m, 2);
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    let (padded, padding) = prepare(inst)?;
    let c = common(&padded, opts.gap, guards)?;
    let big_n = padded.total_vertices();
    let gamma = two_to_minus(big_n);
    let params = amplification_params(&ratio::reciprocal(20, big_n), &gamma, opts.c1, opts.c2)?;
    let xor = XorStage {
        explicit_m2: min_m2_for_gamma(&gamma)?,
        drucker_at_m: drucker_bound(1.0 / 800.0, params.alpha, m as u64)?,
        params,
    };
    let symbolic = |expr: &str| Quantity::Symbolic {
        expr: expr.into(),
        parameters: BTreeMap::from([
            ("k_prime".to_string(), c.gap.k_prime.to_string()),
            ("m".to_string(), m.to_string()),
        ]),
    };
    let no = NoCertificate {
        tree_size: None,
        abort_tree_size: None,
        abort_below: Some(Quantity::exact(&ratio::ratio(2, 5))),
        dnf_size: None,
        abort_depth: Some(Quantity::exact(&ratio::ratio(c.gap.k_prime as u128, 20))),
        depth: Some(symbolic("c_depth * k_prime * m")),
        xor: Some(xor),
    };
    let mut metadata = BundleMetadata {
        format: BUNDLE_FORMAT.into(),
        problem: Problem::Estimation,
        instance_hash: String::new(),
        instance: padded.to_document(),
        padding,
        n: padded.n(),
        big_n,
        ell,
        m,
        negated: false,
        gap: c.gap,
        opt: c.opt,
        yes: YesCertificate {
            junta_size: c.gap.k * ell,
            cover: c.cover,
            depth: Some(c.gap.k * ell * m),
        },
        no,
        floors: floors(big_n),
        eps: opts
            .eps
            .clone()
            .unwrap_or_else(|| ratio::ratio(1, 2) - two_to_minus(big_n)),
        strict_size: opts.strict_size,
    };
    metadata.instance_hash = instance_hash(&metadata);
    Ok(HardInstanceBundle {
        circuit: emit_xor_circuit(&emit_circuit(&padded, ell, false)?, m)?,
        generator: build_generator(&padded, ell)?.repeat(m)?,
        metadata,
    })
}

impl HardInstanceBundle {
    pub fn instance(&self) -> Result<SetCoverInstance> {
        SetCoverInstance::from_document(&self.metadata.instance)
    }

    pub fn metadata_json(&self) -> String {
        serde_json::to_string_pretty(&self.metadata).expect("metadata serializes") + "\n"
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(CIRCUIT_FILE), self.circuit.to_netlist())?;
        fs::write(dir.join(GENERATOR_FILE), self.generator.to_json() + "\n")?;
        fs::write(dir.join(METADATA_FILE), self.metadata_json())?;
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<HardInstanceBundle> {
        let circuit = Circuit::parse_netlist(&fs::read_to_string(dir.join(CIRCUIT_FILE))?)?;
        let generator = GeneratorSpec::from_json(&fs::read_to_string(dir.join(GENERATOR_FILE))?)?;
        let metadata: BundleMetadata = serde_json::from_str(&fs::read_to_string(dir.join(METADATA_FILE))?)?;
        if metadata.format != BUNDLE_FORMAT {
            return Err(Error::Malformed(format!("unsupported bundle format {:?}", metadata.format)));
        }
        if circuit.inputs() != generator.output_bits {
            return Err(Error::ArityMismatch {
                expected: circuit.inputs(),
                found: generator.output_bits,
            });
        }
        Ok(HardInstanceBundle {
            circuit,
            generator,
            metadata,
        })
    }

    /// Regenerates the bundle from the embedded instance and parameters.
    /// Equality with `self` is the round-trip check. The embedded instance is
    /// already padded, so the recorded padding note is carried over.
    pub fn rederive(&self, guards: &Guards) -> Result<HardInstanceBundle> {
        let inst = self.instance()?;
        let md = &self.metadata;
        let mut out = match md.problem {
            Problem::Construction => gen_construction(
                &inst,
                &ConstructionOptions {
                    ell: md.ell,
                    negated: md.negated,
                    gap: Some(md.gap),
                    strict_size: md.strict_size,
                    eps: Some(md.eps.clone()),
                    allow_ell_one: md.ell == 1,
                },
                guards,
            ),
            Problem::Estimation => {
                let xor = md
                    .no
                    .xor
                    .as_ref()
                    .ok_or_else(|| Error::Malformed("estimation bundle without XOR parameters".into()))?;
                gen_estimation(
                    &inst,
                    &EstimationOptions {
                        m: md.m,
                        gap: Some(md.gap),
                        strict_size: md.strict_size,
                        eps: Some(md.eps.clone()),
                        c1: xor.params.c1,
                        c2: xor.params.c2,
                    },
                    guards,
                )
            }
        }?;
        out.metadata.padding = md.padding.clone();
        Ok(out)
    }

    /// The analytic target: amplified function labeled over its exact
    /// distribution, XOR-composed for estimation bundles.
    pub fn exact_target(&self, guards: &Guards, exec: Exec) -> Result<LabeledDistribution> {
        let md = &self.metadata;
        let base = amplified_target(&self.instance()?, md.ell, md.negated, guards.max_bits)?;
        match md.problem {
            Problem::Construction => Ok(base),
            Problem::Estimation => xor_labeled(&base, md.m, guards.max_product_atoms, exec),
        }
    }

    /// True iff every generator output over all seeds lands on the analytic
    /// support with the right count, and the circuit agrees with the analytic
    /// labels there.
    pub fn coherent(&self, guards: &Guards, exec: Exec) -> Result<bool> {
        let target = self.exact_target(guards, exec)?;
        let counts = self.generator.pushforward(guards.max_seed_bits, exec)?;
        if counts.len() != target.len() {
            return Ok(false);
        }
        let seeds = 1u128 << self.generator.seed_bits;
        for ((x, &w), &label) in target.atoms.iter().zip(&target.weights).zip(&target.labels) {
            let c = counts.get(x).copied().unwrap_or(0);
            if c.checked_mul(target.denominator) != w.checked_mul(seeds) || self.circuit.evaluate(x)? != label {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Mode {
    Exact,
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub problem: Problem,
    pub instance_hash: String,
    pub hypothesis: Hypothesis,
    pub mode: Mode,
    /// Exact mode.
    #[serde(with = "opt_ratio")]
    pub distance: Option<BigRational>,
    /// Monte-Carlo mode.
    pub estimate: Option<McEstimate>,
    #[serde(with = "serde_ratio")]
    pub eps: BigRational,
    pub size: usize,
    pub size_cap: Option<u64>,
    pub pass: bool,
}

/// Distance of `h` from the bundle's target and the pass/fail call.
///
/// Passes iff the distance (exact, or the Monte-Carlo point estimate) is at
/// most `eps` and, in strictly-proper mode, `h` has at most `s` leaves/terms.
pub fn adjudicate(bundle: &HardInstanceBundle, h: &Hypothesis, mode: Mode, guards: &Guards, exec: Exec) -> Result<Verdict> {
    let arity = bundle.circuit.inputs();
    if let Some(v) = h.max_var().filter(|&v| v >= arity) {
        return Err(Error::ArityMismatch {
            expected: arity,
            found: v + 1,
        });
    }
    let md = &bundle.metadata;
    let size = h.size();
    let size_ok = md.strict_size.is_none_or(|s| size as u64 <= s);
    let (distance, estimate, close) = match mode {
        Mode::Exact => {
            let target = bundle.exact_target(guards, exec)?;
            let d = target.to_rational(error_weight(h, &target)?);
            let close = d <= md.eps;
            (Some(d), None, close)
        }
        Mode::MonteCarlo { samples, seed } => {
            let est = dist_mc(h, &bundle.circuit, &bundle.generator, samples, seed, exec)?;
            let close = est.estimate <= ratio::to_f64(&md.eps);
            (None, Some(est), close)
        }
    };
    Ok(Verdict {
        problem: md.problem,
        instance_hash: md.instance_hash.clone(),
        hypothesis: h.clone(),
        mode,
        distance,
        estimate,
        eps: md.eps.clone(),
        size,
        size_cap: md.strict_size,
        pass: close && size_ok,
    })
}

/// Instance family for the suite: every normalized instance with at most
/// `max_n` sets and `max_universe` elements, up to reordering of the sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub max_n: usize,
    pub max_universe: usize,
    /// Block lengths for claims on the amplified target.
    pub ells: Vec<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            max_n: 4,
            max_universe: 4,
            ells: vec![2],
        }
    }
}

fn permute_mask(mask: u64, perm: &[usize]) -> u64 {
    perm.iter()
        .enumerate()
        .fold(0, |acc, (i, &p)| acc | ((mask >> i) & 1) << p)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn combinations(items: &[u64], k: usize, start: usize, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for i in start..items.len() {
        cur.push(items[i]);
        combinations(items, k, i + 1, cur, out);
        cur.pop();
    }
}

/// The grid's instances, ordered by `(n, |U|, element masks)`. Each is the
/// lexicographically least representative of its class under set reordering.
pub fn grid_instances(max_n: usize, max_universe: usize) -> Result<Vec<SetCoverInstance>> {
    if max_n > 6 {
        return Err(Error::GuardExceeded {
            guard: "grid.max_n",
            limit: 6,
            requested: max_n,
        });
    }
    let mut out = Vec::new();
    for n in 1..=max_n {
        let masks: Vec<u64> = (1..1u64 << n).collect();
        let perms = permutations(n);
        for u in 1..=max_universe {
            if 1 + crate::setcover::ceil_log2(u) > n {
                continue;
            }
            let mut combos = Vec::new();
            combinations(&masks, u, 0, &mut Vec::new(), &mut combos);
            for combo in combos {
                let canonical = perms
                    .iter()
                    .map(|p| {
                        let mut c: Vec<u64> = combo.iter().map(|&m| permute_mask(m, p)).collect();
                        c.sort_unstable();
                        c
                    })
                    .min()
                    .expect("at least one permutation");
                if canonical == combo {
                    out.push(SetCoverInstance::from_masks(n, &combo)?);
                }
            }
        }
    }
    Ok(out)
}

/// Runs every selected claim on every grid instance (and every `ell` for
/// claims on the amplified target). Reports come back in (claim, instance,
/// ell) order with a `grid_index` parameter, whatever the execution mode.
pub fn run_suite(
    selection: &[ClaimId],
    grid: &GridSpec,
    params: &ClaimParams,
    guards: &Guards,
    exec: Exec,
) -> Result<Vec<OracleReport>> {
    if selection.is_empty() {
        return Ok(Vec::new());
    }
    let instances = grid_instances(grid.max_n, grid.max_universe)?;
    let mut jobs = Vec::new();
    for &claim in selection {
        for i in 0..instances.len() {
            if claim.uses_ell() {
                jobs.extend(grid.ells.iter().map(|&ell| (claim, i, ell)));
            } else {
                jobs.push((claim, i, params.ell));
            }
        }
    }
    par::map(exec, &jobs, |&(claim, i, ell)| {
        let p = ClaimParams { ell, ..params.clone() };
        verify_claim(claim, &instances[i], &p, guards, Exec::Sequential).map(|mut r| {
            r.parameters.insert("grid_index".into(), i.to_string());
            r
        })
    })
    .into_iter()
    .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    /// Failed reports per claim.
    pub failures: BTreeMap<ClaimId, usize>,
}

impl SuiteSummary {
    pub fn of(reports: &[OracleReport]) -> Self {
        let mut failures = BTreeMap::new();
        for r in reports.iter().filter(|r| !r.pass) {
            *failures.entry(r.claim).or_insert(0) += 1;
        }
        let failed = failures.values().sum();
        SuiteSummary {
            total: reports.len(),
            passed: reports.len() - failed,
            failed,
            failures,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.failed == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::hypotheses::{DecisionTree, Dnf};
    use crate::oracles::junta_tree;
    use crate::xor::xor_junta_tree;

    fn tmp(name: &str) -> std::path::PathBuf {
        let d = std::env::temp_dir().join(format!("dthard-{name}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&d);
        d
    }

    #[test]
    fn sample_instance_dnf_bundle() {
        let g = Guards::default();
        let opts = ConstructionOptions {
            negated: true,
            gap: Some(GapParams::new(2, 2).unwrap()),
            ..Default::default()
        };
        let b = gen_construction(&fixtures::five_by_four(), &opts, &g).unwrap();
        let md = &b.metadata;
        assert_eq!(md.yes.junta_size, 4);
        assert_eq!(md.yes.cover.as_deref(), Some(&["s1".to_string(), "s2".to_string()][..]));
        assert!(matches!(md.no.dnf_size, Some(Quantity::PowerOfTwo { numerator: 4, denominator: 16, .. })));
        assert!(md.no.tree_size.is_none());
        assert_eq!(md.floors.plain.as_exact(), Some(ratio::ratio(1, 36)));
        assert_eq!(md.eps, ratio::ratio(1, 36));
        assert_eq!(b.circuit.inputs(), 10);
        assert!(b.coherent(&g, Exec::Parallel).unwrap());
        let again = gen_construction(&fixtures::five_by_four(), &opts, &g).unwrap();
        assert_eq!(again.metadata_json(), b.metadata_json());
        assert_eq!(again.circuit.to_netlist(), b.circuit.to_netlist());
    }

    #[test]
    fn ell_four_and_small_ell() {
        let g = Guards::default();
        let inst = fixtures::five_by_four();
        let b = gen_construction(&inst, &ConstructionOptions { ell: 4, ..Default::default() }, &g).unwrap();
        assert_eq!(b.circuit.inputs(), 20);
        let one = ConstructionOptions { ell: 1, ..Default::default() };
        assert!(gen_construction(&inst, &one, &g).is_err());
        let one = ConstructionOptions { allow_ell_one: true, ..one };
        assert!(gen_construction(&inst, &one, &g).is_ok());
    }

    #[test]
    fn bundles_round_trip_through_disk() {
        let g = Guards::default();
        let inst = fixtures::five_by_four();
        let bundles = [
            gen_construction(&inst, &ConstructionOptions::default(), &g).unwrap(),
            gen_estimation(&fixtures::one_by_one(), &EstimationOptions { m: 2, ..Default::default() }, &g).unwrap(),
        ];
        for (i, b) in bundles.iter().enumerate() {
            let dir = tmp(&format!("roundtrip{i}"));
            b.write_dir(&dir).unwrap();
            let back = HardInstanceBundle::read_dir(&dir).unwrap();
            assert_eq!(&back, b);
            assert_eq!(&back.rederive(&g).unwrap(), b);
            fs::remove_dir_all(&dir).unwrap();
        }
    }

    #[test]
    fn padding_is_recorded() {
        let inst = SetCoverInstance::from_masks(3, &[0b001, 0b010, 0b100]).unwrap();
        let b = gen_construction(&inst, &ConstructionOptions::default(), &Guards::default()).unwrap();
        assert_eq!(b.metadata.padding.dummies.len(), 1);
        assert_eq!(b.metadata.n, 4);
        assert_eq!(b.metadata.opt, Some(3));
        assert!(b.coherent(&Guards::default(), Exec::Sequential).unwrap());
    }

    #[test]
    fn estimation_bundle_one_by_one() {
        let g = Guards::default();
        let inst = fixtures::one_by_one();
        let b = gen_estimation(&inst, &EstimationOptions { m: 2, ..Default::default() }, &g).unwrap();
        let md = &b.metadata;
        assert_eq!(md.yes.depth, Some(4));
        assert!(md.no.depth.as_ref().unwrap().is_symbolic());
        assert_eq!(b.generator.seed_bits, 2 * build_generator(&inst, 2).unwrap().seed_bits);
        assert_eq!(md.eps, ratio::ratio(1, 2) - ratio::ratio(1, 4));
        assert!(b.coherent(&g, Exec::Parallel).unwrap());
        let t = xor_junta_tree(&inst, &[0], 2, 2).unwrap();
        let v = adjudicate(&b, &Hypothesis::Tree(t), Mode::Exact, &g, Exec::Sequential).unwrap();
        assert_eq!(v.distance, Some(ratio::int(0)));
        assert!(v.pass);

        let one = gen_estimation(&inst, &EstimationOptions::default(), &g).unwrap();
        let plain = gen_construction(&inst, &ConstructionOptions::default(), &g).unwrap();
        assert_eq!(one.circuit, plain.circuit);
        assert_eq!(one.generator, plain.generator);
    }

    #[test]
    fn verdicts() {
        let g = Guards::default();
        let inst = fixtures::five_by_four();
        let b = gen_construction(&inst, &ConstructionOptions::default(), &g).unwrap();
        let junta = Hypothesis::Tree(junta_tree(&inst, &[0, 1], 2, false).unwrap());
        let v = adjudicate(&b, &junta, Mode::Exact, &g, Exec::Parallel).unwrap();
        assert!(v.pass);
        assert_eq!(v.distance, Some(ratio::int(0)));

        for c in [false, true] {
            let v = adjudicate(&b, &Hypothesis::Tree(DecisionTree::constant(c)), Mode::Exact, &g, Exec::Parallel).unwrap();
            assert!(!v.pass);
            assert!(v.distance.unwrap() >= ratio::ratio(1, 2));
        }

        let strict = gen_construction(&inst, &ConstructionOptions { strict_size: Some(4), ..Default::default() }, &g).unwrap();
        let v = adjudicate(&strict, &junta, Mode::Exact, &g, Exec::Parallel).unwrap();
        assert_eq!(v.distance, Some(ratio::int(0)));
        assert!(!v.pass);

        let v = adjudicate(&b, &junta, Mode::MonteCarlo { samples: 5000, seed: 3 }, &g, Exec::Parallel).unwrap();
        assert_eq!(v.estimate.as_ref().unwrap().estimate, 0.0);
        assert!(v.pass);

        let wide = Hypothesis::Dnf(Dnf::from_signed(&[vec![11]]).unwrap());
        assert!(matches!(adjudicate(&b, &wide, Mode::Exact, &g, Exec::Sequential), Err(Error::ArityMismatch { .. })));
    }

    #[test]
    fn verdicts_survive_serialization() {
        let g = Guards::default();
        let inst = fixtures::five_by_four();
        let b = gen_construction(&inst, &ConstructionOptions::default(), &g).unwrap();
        let h = Hypothesis::Tree(DecisionTree::node(0, DecisionTree::constant(false), DecisionTree::constant(true)));
        let back: Hypothesis = serde_json::from_str(&serde_json::to_string(&h).unwrap()).unwrap();
        let a = adjudicate(&b, &h, Mode::Exact, &g, Exec::Sequential).unwrap();
        let c = adjudicate(&b, &back, Mode::Exact, &g, Exec::Sequential).unwrap();
        assert_eq!(a, c);
        let v: Verdict = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        assert_eq!(v, a);
    }

    #[test]
    fn grid_counts() {
        let all = grid_instances(4, 4).unwrap();
        assert!(all.iter().all(|i| i.is_normalized() && i.universe_len() <= 4 && i.n() <= 4));
        // n = 1: {1}; n = 2: {01}, {11}, {01,10}, {01,11}.
        assert_eq!(grid_instances(2, 4).unwrap().len(), 5);
        let mut seen = std::collections::HashSet::new();
        for i in &all {
            assert!(seen.insert(i.to_canonical_json()));
        }
        assert!(grid_instances(7, 2).is_err());
    }

    #[test]
    fn suite_reports_and_mutants() {
        let g = Guards::default();
        let grid = GridSpec {
            max_n: 2,
            max_universe: 2,
            ells: vec![2, 3],
        };
        let p = ClaimParams::default();
        assert!(run_suite(&[], &grid, &p, &g, Exec::Parallel).unwrap().is_empty());
        let sel = [ClaimId::JuntaCertificate, ClaimId::JuntaLearning];
        let seq = run_suite(&sel, &grid, &p, &g, Exec::Sequential).unwrap();
        let par = run_suite(&sel, &grid, &p, &g, Exec::Parallel).unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq.len(), 5 * 2 + 5);
        assert!(SuiteSummary::of(&seq).all_pass());
        let flipped = ClaimParams { flip_label: Some(0), ..p };
        let bad = run_suite(&[ClaimId::JuntaCertificate], &grid, &flipped, &g, Exec::Parallel).unwrap();
        assert!(!SuiteSummary::of(&bad).all_pass());
    }
}
