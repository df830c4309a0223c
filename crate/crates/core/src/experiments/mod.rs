//! Seeded set generators, the sharp-subset search, and the verification
//! suites behind the command-line runner.

pub mod acceptance;
mod suites;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::energy::strip_set;
use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::geometry::{norm_table, PointCodec};
use crate::pairs::{distance_set, SplitPointSet};

pub use suites::{run_suite, run_suite_on, CheckResult, RunReport, Skipped, Suite, REPORT_SCHEMA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    Full,
    Bernoulli,
    Product,
    Circles,
    Strip,
    SharpProduct,
}

impl Generator {
    pub const ALL: [Generator; 6] = [
        Generator::Full,
        Generator::Bernoulli,
        Generator::Product,
        Generator::Circles,
        Generator::Strip,
        Generator::SharpProduct,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Generator::Full => "full",
            Generator::Bernoulli => "bernoulli",
            Generator::Product => "product",
            Generator::Circles => "circles",
            Generator::Strip => "strip",
            Generator::SharpProduct => "sharp-product",
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Generator::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown generator {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
        })
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            _ => Err(Error::InvalidArgument(format!("unknown format {s:?}, expected json or csv"))),
        }
    }
}

/// Which of the two sets a generator should produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetRole {
    E,
    F,
}

impl SetRole {
    fn stream(self) -> u64 {
        match self {
            SetRole::E => 0,
            SetRole::F => 1,
        }
    }
}

/// Stream used for the first factor of product sets; shared by E and F so
/// that both roles see the same factor.
const FACTOR_STREAM: u64 = 2;

/// Everything that determines a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub q: u64,
    pub k: usize,
    pub l: usize,
    pub generator: Generator,
    pub density: f64,
    /// Strip length for the `strip` generator; `None` scans every length in
    /// the sharpness suite.
    pub strip_len: Option<u64>,
    pub seed: u64,
    pub constant_c: f64,
    /// Candidate evaluations for the sharp-subset search.
    pub search_budget: u64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            q: 7,
            k: 2,
            l: 2,
            generator: Generator::Bernoulli,
            density: 0.5,
            strip_len: None,
            seed: 0,
            constant_c: 1.0,
            search_budget: 10_000,
            out: None,
            format: OutputFormat::Json,
        }
    }
}

/// Largest q^k the sharp-subset search will scan.
pub const SEARCH_SPACE_LIMIT: u64 = 100_000;

impl ExperimentConfig {
    /// Checks the configuration and returns its field.
    pub fn validate(&self) -> Result<PrimeField> {
        let fld = PrimeField::new(self.q)?;
        if self.k == 0 || self.l == 0 {
            return Err(Error::Dimension(format!("k and l must be positive, got ({}, {})", self.k, self.l)));
        }
        PointCodec::new(self.q, self.k + self.l)?;
        if !(0.0..=1.0).contains(&self.density) {
            return Err(Error::InvalidArgument(format!("density {} is outside [0, 1]", self.density)));
        }
        if self.constant_c.is_nan() || self.constant_c <= 0.0 {
            return Err(Error::InvalidArgument(format!("constant C must be positive, got {}", self.constant_c)));
        }
        if let Some(len) = self.strip_len {
            if len == 0 || len > self.q {
                return Err(Error::InvalidArgument(format!("strip length must lie in 1..={}, got {len}", self.q)));
            }
        }
        match self.generator {
            Generator::Strip if self.k != 2 || self.l != 2 => {
                return Err(Error::Dimension("the strip generator builds F_q² × L and needs k = l = 2".into()))
            }
            Generator::Strip if self.strip_len.is_none() => {
                return Err(Error::InvalidArgument("the strip generator needs a strip length".into()))
            }
            Generator::SharpProduct => {
                if self.k % 2 == 0 {
                    return Err(Error::Dimension(format!("sharp-product needs odd k, got {}", self.k)));
                }
                if (self.q as u128).pow(self.k as u32) > SEARCH_SPACE_LIMIT as u128 {
                    return Err(Error::SizeGuard {
                        what: "sharp-subset search",
                        size: (self.q as u128).pow(self.k as u32),
                        limit: SEARCH_SPACE_LIMIT as u128,
                        advice: "lower q or k",
                    });
                }
            }
            _ => {}
        }
        Ok(fld)
    }
}

fn unit_interval(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Encoded points of a space of `size` points, each kept with probability
/// `density`.
///
/// The decision for point i uses the 64-bit word at position i of the
/// ChaCha8 stream (`seed`, `stream`), so the result does not depend on how
/// the work is split.
pub fn bernoulli_members(size: usize, density: f64, seed: u64, stream: u64) -> Vec<usize> {
    const CHUNK: usize = 4096;
    (0..size.div_ceil(CHUNK))
        .into_par_iter()
        .flat_map_iter(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            rng.set_word_pos(2 * (chunk * CHUNK) as u128);
            let start = chunk * CHUNK;
            (start..size.min(start + CHUNK)).filter(move |_| unit_interval(rng.next_u64()) < density)
        })
        .collect()
}

fn product_members(q: u64, l: usize, factor: &[usize]) -> Vec<usize> {
    let suffix = (q as usize).pow(l as u32);
    factor
        .iter()
        .flat_map(|&p| p * suffix..(p + 1) * suffix)
        .collect()
}

/// Builds E or F for a configuration.
pub fn generate_set(cfg: &ExperimentConfig, role: SetRole) -> Result<SplitPointSet> {
    let fld = cfg.validate()?;
    let (q, k, l) = (cfg.q, cfg.k, cfg.l);
    match cfg.generator {
        Generator::Full => SplitPointSet::full(&fld, k, l),
        Generator::Bernoulli => {
            let size = PointCodec::new(q, k + l)?.size();
            SplitPointSet::from_members(&fld, k, l, bernoulli_members(size, cfg.density, cfg.seed, role.stream()))
        }
        Generator::Product => {
            let prefixes = PointCodec::new(q, k)?.size();
            let factor = bernoulli_members(prefixes, cfg.density, cfg.seed, FACTOR_STREAM);
            SplitPointSet::from_members(&fld, k, l, product_members(q, l, &factor))
        }
        Generator::SharpProduct => {
            let found = search_sharp_subset(&fld, k, cfg.search_budget, cfg.seed)?;
            let codec = PointCodec::new(q, k)?;
            let factor: Vec<usize> = found.points.iter().map(|p| codec.encode(p)).collect();
            SplitPointSet::from_members(&fld, k, l, product_members(q, l, &factor))
        }
        Generator::Circles => circles_set(&fld, k, l, role),
        Generator::Strip => strip_set(&fld, cfg.strip_len.expect("validated")),
    }
}

/// E = {(x, 0) : ‖x‖ = 1} ⊂ F_q^k × F_q^l, and F = {(0, y) : ‖y‖ = 1}.
pub fn circles_set(fld: &PrimeField, k: usize, l: usize, role: SetRole) -> Result<SplitPointSet> {
    let suffix = (fld.q() as usize).pow(l as u32);
    let members = match role {
        SetRole::E => norm_table(fld, k)?
            .iter()
            .enumerate()
            .filter(|(_, &n)| n == 1)
            .map(|(i, _)| i * suffix)
            .collect(),
        SetRole::F => norm_table(fld, l)?
            .iter()
            .enumerate()
            .filter(|(_, &n)| n == 1)
            .map(|(i, _)| i)
            .collect(),
    };
    SplitPointSet::from_members(fld, k, l, members)
}

/// Result of [`search_sharp_subset`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharpSubset {
    pub q: u64,
    pub k: usize,
    pub points: Vec<Vec<u64>>,
    /// Δ(E₁), recomputed independently of the search.
    pub distances: Vec<u64>,
    /// Values of F_q that Δ(E₁) misses.
    pub missing: Vec<u64>,
    pub evaluations: u64,
    pub restarts: u64,
}

impl SharpSubset {
    pub fn size(&self) -> usize {
        self.points.len()
    }
}

/// Randomized greedy search for a large E₁ ⊂ F_q^k with Δ(E₁) ≠ F_q.
///
/// Each restart fixes a nonzero target distance t, seeds E₁ with a random
/// point, and scans the space in random order, keeping every candidate whose
/// distances to E₁ avoid t. Restarts continue until `budget` candidates have
/// been evaluated; the largest set found is returned. Sizes are
/// observational and carry no guarantee.
pub fn search_sharp_subset(fld: &PrimeField, k: usize, budget: u64, seed: u64) -> Result<SharpSubset> {
    if k % 2 == 0 {
        return Err(Error::Dimension(format!("search needs odd k, got {k}")));
    }
    let q = fld.q();
    let space = (q as u128).pow(k as u32);
    if space > SEARCH_SPACE_LIMIT as u128 {
        return Err(Error::SizeGuard {
            what: "sharp-subset search",
            size: space,
            limit: SEARCH_SPACE_LIMIT as u128,
            advice: "lower q or k",
        });
    }
    let codec = PointCodec::new(q, k)?;
    let norms = norm_table(fld, k)?;
    let all: Vec<Vec<u64>> = (0..codec.size()).map(|i| codec.decode(i)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Vec<usize> = vec![rng.gen_range(0..codec.size())];
    let mut evaluations = 0u64;
    let mut restarts = 0u64;
    let mut order: Vec<usize> = (0..codec.size()).collect();
    let mut diff = vec![0u64; k];

    // q = 2 has no nonzero target besides 1, which any two points may hit.
    while evaluations < budget && q > 2 {
        restarts += 1;
        let target = rng.gen_range(1..q) as u32;
        order.shuffle(&mut rng);
        let mut current = vec![order[0]];
        let mut taken = vec![false; codec.size()];
        taken[order[0]] = true;
        for &cand in &order[1..] {
            if evaluations >= budget {
                break;
            }
            evaluations += 1;
            if taken[cand] {
                continue;
            }
            let avoids = current.iter().all(|&m| {
                for (slot, (&a, &b)) in diff.iter_mut().zip(all[cand].iter().zip(&all[m])) {
                    *slot = fld.sub(a, b);
                }
                norms[codec.encode(&diff)] != target
            });
            if avoids {
                current.push(cand);
                taken[cand] = true;
            }
        }
        if current.len() > best.len() {
            best = current;
        }
    }

    best.sort_unstable();
    let points: Vec<Vec<u64>> = best.iter().map(|&i| all[i].clone()).collect();
    let distances = distance_set(fld, &points)?;
    let missing: Vec<u64> = (0..q).filter(|t| !distances.contains(t)).collect();
    debug_assert!(!missing.is_empty() || q == 2);
    Ok(SharpSubset {
        q,
        k,
        points,
        distances: distances.into_iter().collect(),
        missing,
        evaluations,
        restarts,
    })
}
