//! Exhaustive and dynamic-programming oracles that certify the reduction's
//! inequalities on small instances.
//!
//! Every oracle is exponential in some parameter, so each one checks an
//! explicit [`Guards`] limit before doing any work and fails with
//! [`Error::GuardExceeded`](crate::Error::GuardExceeded) instead of running away.
//! Oracles take a [`LabeledDistribution`](crate::construction::LabeledDistribution),
//! i.e. a function already evaluated on the support of a distribution.

mod claims;
mod dnf;
mod junta;
mod restriction;
mod tree_dp;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::hypotheses::Hypothesis;
use crate::ratio::serde_ratio;

pub use claims::{verify_claim, ClaimParams};
pub use dnf::{min_dist_dnf, width_error_frontier, DnfOptimum, WidthPoint};
pub use junta::{junta_dnf, junta_learner, junta_tree, junta_variables, JuntaFit};
pub use restriction::{find_dnf_restriction, find_restriction, Restriction, RestrictionSearch, Slack};
pub use tree_dp::{
    depth_error_frontier, min_error_below_depth, opt_tree_by_size, opt_tree_dp, AbortBudget, FrontierPoint, TreeOptimum,
};

/// Limits on every exponential oracle. Missing fields take the defaults.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Guards {
    pub dp_max_vars: usize,
    pub dp_max_depth: usize,
    pub size_dp_max_leaves: usize,
    /// Atoms of a target whose full tree/DNF frontier is enumerated.
    pub frontier_max_atoms: usize,
    pub dnf_max_vars: usize,
    pub dnf_max_terms: usize,
    pub junta_max_vars: usize,
    pub junta_max_k: usize,
    pub max_sets: usize,
    /// Arity of amplified distributions that are materialized atom by atom.
    pub max_bits: usize,
    pub max_seed_bits: usize,
    pub max_product_atoms: usize,
    /// Restriction strings searched exhaustively; above this, sampled.
    pub max_z_bits: usize,
}

impl Default for Guards {
    fn default() -> Self {
        Guards {
            dp_max_vars: 16,
            dp_max_depth: 6,
            size_dp_max_leaves: 8,
            frontier_max_atoms: 8,
            dnf_max_vars: 8,
            dnf_max_terms: 3,
            junta_max_vars: 20,
            junta_max_k: 4,
            max_sets: 30,
            max_bits: 20,
            max_seed_bits: 16,
            max_product_atoms: 1_000_000,
            max_z_bits: 16,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClaimId {
    DepthError,
    DepthErrorAbort,
    WidthError,
    TreeRestriction,
    TreeRestrictionAbort,
    DnfRestriction,
    TreeFarness,
    AbortFarness,
    DnfFarness,
    AvgDepthLaw,
    AvgWidthLaw,
    JuntaCertificate,
    DistEquivalence,
    GeneratorExactness,
    UniformLike,
    JuntaLearning,
}

impl ClaimId {
    pub const ALL: [ClaimId; 16] = [
        ClaimId::DepthError,
        ClaimId::DepthErrorAbort,
        ClaimId::WidthError,
        ClaimId::TreeRestriction,
        ClaimId::TreeRestrictionAbort,
        ClaimId::DnfRestriction,
        ClaimId::TreeFarness,
        ClaimId::AbortFarness,
        ClaimId::DnfFarness,
        ClaimId::AvgDepthLaw,
        ClaimId::AvgWidthLaw,
        ClaimId::JuntaCertificate,
        ClaimId::DistEquivalence,
        ClaimId::GeneratorExactness,
        ClaimId::UniformLike,
        ClaimId::JuntaLearning,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClaimId::DepthError => "depth-error",
            ClaimId::DepthErrorAbort => "depth-error-abort",
            ClaimId::WidthError => "width-error",
            ClaimId::TreeRestriction => "tree-restriction",
            ClaimId::TreeRestrictionAbort => "tree-restriction-abort",
            ClaimId::DnfRestriction => "dnf-restriction",
            ClaimId::TreeFarness => "tree-farness",
            ClaimId::AbortFarness => "abort-farness",
            ClaimId::DnfFarness => "dnf-farness",
            ClaimId::AvgDepthLaw => "avg-depth-law",
            ClaimId::AvgWidthLaw => "avg-width-law",
            ClaimId::JuntaCertificate => "junta-certificate",
            ClaimId::DistEquivalence => "dist-equivalence",
            ClaimId::GeneratorExactness => "generator-exactness",
            ClaimId::UniformLike => "uniform-like",
            ClaimId::JuntaLearning => "junta-learning",
        }
    }

    /// Claims stated for the amplified construction (they read `ell`).
    pub fn uses_ell(self) -> bool {
        !matches!(
            self,
            ClaimId::DepthError | ClaimId::DepthErrorAbort | ClaimId::WidthError | ClaimId::JuntaLearning
        )
    }
}

impl fmt::Display for ClaimId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClaimId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        ClaimId::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownClaim(s.to_string()))
    }
}

/// How `computed` must compare with `threshold` for the claim to hold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    AtLeast,
    AtMost,
}

impl Relation {
    pub fn holds(self, computed: &BigRational, threshold: &BigRational) -> bool {
        match self {
            Relation::AtLeast => computed >= threshold,
            Relation::AtMost => computed <= threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub claim: ClaimId,
    pub parameters: BTreeMap<String, String>,
    #[serde(with = "serde_ratio")]
    pub computed: BigRational,
    #[serde(with = "serde_ratio")]
    pub threshold: BigRational,
    pub relation: Relation,
    pub pass: bool,
    pub witness: Option<Hypothesis>,
    pub note: String,
}

impl OracleReport {
    pub(crate) fn new(
        claim: ClaimId,
        parameters: BTreeMap<String, String>,
        computed: BigRational,
        threshold: BigRational,
        relation: Relation,
    ) -> Self {
        let pass = relation.holds(&computed, &threshold);
        OracleReport {
            claim,
            parameters,
            computed,
            threshold,
            relation,
            pass,
            witness: None,
            note: String::new(),
        }
    }

    pub(crate) fn with_witness(mut self, w: Option<Hypothesis>) -> Self {
        self.witness = w;
        self
    }

    pub(crate) fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio;

    #[test]
    fn claim_ids_round_trip() {
        for c in ClaimId::ALL {
            assert_eq!(c.as_str().parse::<ClaimId>().unwrap(), c);
            assert_eq!(serde_json::to_string(&c).unwrap(), format!("\"{c}\""));
        }
        assert!(matches!("nope".parse::<ClaimId>(), Err(Error::UnknownClaim(_))));
    }

    #[test]
    fn verdict_follows_relation() {
        let r = OracleReport::new(
            ClaimId::TreeFarness,
            BTreeMap::new(),
            ratio::ratio(1, 4),
            ratio::ratio(1, 36),
            Relation::AtLeast,
        );
        assert!(r.pass);
        let json = r.to_json();
        assert!(json.contains("\"1/4\""));
        assert_eq!(serde_json::from_str::<OracleReport>(&json).unwrap(), r);
        assert!(!Relation::AtMost.holds(&ratio::int(1), &ratio::int(0)));
    }

    #[test]
    fn guards_fill_defaults() {
        let g: Guards = serde_json::from_str(r#"{"dp_max_depth": 3}"#).unwrap();
        assert_eq!(g.dp_max_depth, 3);
        assert_eq!(g.dp_max_vars, 16);
        assert!(serde_json::from_str::<Guards>(r#"{"bogus": 1}"#).is_err());
    }
}
