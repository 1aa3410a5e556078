//! Seed-to-sample generators for the amplified distribution and its products.
//!
//! One copy reads its seed as `[z: n(ℓ-1) bits | selector: 1 bit | index: log2|U| bits]`
//! and outputs `par_complete(z, x, 0)`, where `x` is the zero string when the
//! selector is 0 and the encoding of element `index` (little-endian) otherwise.
//! Every seed bit is used, so the uniform seed distribution pushes forward to
//! the amplified pmf exactly. That requires `|U|` to be a power of two; pad the
//! universe first (see [`SetCoverInstance::pad_universe_to_power_of_two`]).

use std::collections::HashMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::amplification::par_complete;
use crate::bits::BitString;
use crate::construction::ExplicitDistribution;
use crate::error::{guard, Error, Result};
use crate::par::{self, Exec};
use crate::setcover::SetCoverInstance;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub n: usize,
    pub ell: usize,
    /// Independent copies whose outputs are concatenated.
    pub copies: usize,
    /// Block position filled in by the parity completion.
    pub completion_position: usize,
    pub z_bits: usize,
    pub selector_bits: usize,
    pub index_bits: usize,
    pub seed_bits: usize,
    pub output_bits: usize,
    /// Element encodings in index order.
    pub universe: Vec<BitString>,
}

pub fn build_generator(inst: &SetCoverInstance, ell: usize) -> Result<GeneratorSpec> {
    if ell == 0 {
        return Err(Error::InvalidParameter("ell must be positive".into()));
    }
    if !inst.is_normalized() {
        return Err(Error::InvalidParameter("generator needs a normalized instance".into()));
    }
    let m = inst.universe_len();
    if !m.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(m));
    }
    let n = inst.n();
    let z_bits = n * (ell - 1);
    let index_bits = m.trailing_zeros() as usize;
    Ok(GeneratorSpec {
        n,
        ell,
        copies: 1,
        completion_position: 0,
        z_bits,
        selector_bits: 1,
        index_bits,
        seed_bits: z_bits + 1 + index_bits,
        output_bits: n * ell,
        universe: inst.neighborhoods().to_vec(),
    })
}

impl GeneratorSpec {
    pub fn seed_bits_per_copy(&self) -> usize {
        self.z_bits + self.selector_bits + self.index_bits
    }

    /// `m` concatenated copies of this generator.
    pub fn repeat(&self, m: usize) -> Result<GeneratorSpec> {
        if m == 0 {
            return Err(Error::InvalidParameter("copies must be positive".into()));
        }
        let copies = self.copies * m;
        Ok(GeneratorSpec {
            copies,
            seed_bits: copies * self.seed_bits_per_copy(),
            output_bits: copies * self.n * self.ell,
            ..self.clone()
        })
    }

    /// Checks internal consistency (used after deserialization).
    pub fn validate(&self) -> Result<()> {
        let bad = |why: &str| Err(Error::Malformed(format!("generator spec: {why}")));
        if self.n == 0 || self.ell == 0 || self.copies == 0 {
            return bad("n, ell and copies must be positive");
        }
        if self.completion_position >= self.ell {
            return bad("completion position outside the block");
        }
        if self.z_bits != self.n * (self.ell - 1) || self.selector_bits != 1 {
            return bad("seed layout does not match n and ell");
        }
        if self.universe.len() != 1 << self.index_bits {
            return bad("universe size must equal 2^index_bits");
        }
        if self.universe.iter().any(|u| u.len() != self.n || u.is_zero()) {
            return bad("encodings must be nonzero strings of length n");
        }
        if self.seed_bits != self.copies * self.seed_bits_per_copy() || self.output_bits != self.copies * self.n * self.ell {
            return bad("totals do not match the per-copy layout");
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<GeneratorSpec> {
        let spec: GeneratorSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn generate(&self, seed: &BitString) -> Result<BitString> {
        if seed.len() != self.seed_bits {
            return Err(Error::ArityMismatch {
                expected: self.seed_bits,
                found: seed.len(),
            });
        }
        let per = self.seed_bits_per_copy();
        let mut out = BitString::zeros(0);
        for c in 0..self.copies {
            let s = seed.slice(c * per, (c + 1) * per);
            let z = s.slice(0, self.z_bits);
            let x = if s.get(self.z_bits) {
                let idx = (0..self.index_bits).fold(0usize, |acc, b| acc | (s.get(self.z_bits + 1 + b) as usize) << b);
                self.universe[idx].clone()
            } else {
                BitString::zeros(self.n)
            };
            out = out.concat(&par_complete(&z, &x, self.completion_position)?);
        }
        Ok(out)
    }

    /// Output for a uniformly random seed drawn from `rng`.
    pub fn sample<R: RngCore>(&self, rng: &mut R) -> BitString {
        let mut seed = BitString::zeros(self.seed_bits);
        let mut word = 0u64;
        for i in 0..self.seed_bits {
            if i % 64 == 0 {
                word = rng.next_u64();
            }
            seed.set(i, (word >> (i % 64)) & 1 == 1);
        }
        self.generate(&seed).expect("seed has the right width")
    }

    /// Output counts over all `2^seed_bits` seeds.
    pub fn pushforward(&self, max_seed_bits: usize, exec: Exec) -> Result<HashMap<BitString, u128>> {
        guard("generator.max_seed_bits", self.seed_bits, max_seed_bits)?;
        let bits = self.seed_bits;
        let outs = par::map_range(exec, 0..1u64 << bits, |s| self.generate(&BitString::from_u64(s, bits)));
        let mut counts = HashMap::new();
        for y in outs {
            *counts.entry(y?).or_insert(0u128) += 1;
        }
        Ok(counts)
    }

    /// True iff the seed pushforward equals `dist` exactly.
    pub fn matches(&self, dist: &ExplicitDistribution, max_seed_bits: usize, exec: Exec) -> Result<bool> {
        let counts = self.pushforward(max_seed_bits, exec)?;
        if counts.len() != dist.len() {
            return Ok(false);
        }
        let seeds = 1u128 << self.seed_bits;
        Ok(dist.atoms().iter().zip(dist.weights()).all(|(y, &w)| {
            counts
                .get(y)
                .is_some_and(|&c| c.checked_mul(dist.denominator()) == w.checked_mul(seeds))
        }))
    }
}
