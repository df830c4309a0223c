use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use super::acceptance;
use super::{bernoulli_members, circles_set, generate_set, search_sharp_subset, ExperimentConfig, SetRole, SEARCH_SPACE_LIMIT};
use crate::energy::{
    circle_energy, energy_chain_check, remark_sharpness_scan, sphere_restricted_mass_all, theorem2_bound, CircleEnergy,
};
use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::geometry::{norm_fiber_sizes, PointCodec};
use crate::pairs::{
    b_set, cs_from_spectrum, discrepancy_from_spectrum, distance_set, mixed_zero_mass, pair_spectrum_fast,
    product_law_check, surjectivity_from_spectrum, PairSpectrum, SplitPointSet, SURJECTIVITY_CONSTANT,
};
use crate::spectral::{orthogonality_check, plancherel_gap, verify_kloosterman, DensityTable};

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Lemmas,
    Theorem1,
    Theorem2,
    Sharpness,
    Acceptance,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Lemmas, Suite::Theorem1, Suite::Theorem2, Suite::Sharpness, Suite::Acceptance];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Lemmas => "lemmas",
            Suite::Theorem1 => "theorem1",
            Suite::Theorem2 => "theorem2",
            Suite::Sharpness => "sharpness",
            Suite::Acceptance => "acceptance",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite {s:?}")))
    }
}

/// One verification inside a run. `paper_ref` names the library operation
/// that performed it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub paper_ref: String,
    pub pass: bool,
    pub payload: Value,
}

/// A check that did not apply to the configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub name: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub suite: Suite,
    pub config: ExperimentConfig,
    pub pass: bool,
    pub checks: Vec<CheckResult>,
    pub skipped: Vec<Skipped>,
    pub duration_ms: u64,
    /// Rows for CSV output.
    #[serde(skip)]
    pub csv: String,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }

    /// The first failing check, if any.
    pub fn first_failure(&self) -> Option<&CheckResult> {
        self.checks.iter().find(|c| !c.pass)
    }

    fn summary_csv(&self) -> String {
        let mut out = String::from("name,paper_ref,pass\n");
        for c in &self.checks {
            out.push_str(&format!("\"{}\",\"{}\",{}\n", c.name.replace('"', "'"), c.paper_ref, c.pass));
        }
        out
    }
}

#[derive(Default)]
struct Recorder {
    checks: Vec<CheckResult>,
    skipped: Vec<Skipped>,
}

impl Recorder {
    fn record<T: Serialize>(&mut self, name: impl Into<String>, op: &str, outcome: Result<(bool, T)>) {
        let (pass, payload) = match outcome {
            Ok((pass, body)) => (pass, serde_json::to_value(body).expect("payload is plain data")),
            Err(e) => (false, json!({ "error": e.to_string() })),
        };
        self.checks.push(CheckResult {
            name: name.into(),
            paper_ref: op.to_string(),
            pass,
            payload,
        });
    }

    fn skip(&mut self, name: impl Into<String>, reason: impl Into<String>) {
        self.skipped.push(Skipped {
            name: name.into(),
            reason: reason.into(),
        });
    }
}

/// Runs a suite. Configuration errors are returned; failures inside checks
/// are recorded in the report.
pub fn run_suite(suite: Suite, cfg: &ExperimentConfig) -> Result<RunReport> {
    run_suite_on(suite, cfg, None)
}

/// Like [`run_suite`], but with E and F supplied instead of generated. The
/// sets must live in F_q^{k+l} with the configured split.
pub fn run_suite_on(suite: Suite, cfg: &ExperimentConfig, sets: Option<(SplitPointSet, SplitPointSet)>) -> Result<RunReport> {
    let start = Instant::now();
    let fld = cfg.validate()?;
    let (e, f) = match sets {
        Some((e, f)) => {
            for s in [&e, &f] {
                if s.field() != &fld || s.k() != cfg.k || s.l() != cfg.l {
                    return Err(Error::Dimension(format!(
                        "supplied set lives in F_{}^({}+{}), configuration is F_{}^({}+{})",
                        s.field().q(),
                        s.k(),
                        s.l(),
                        cfg.q,
                        cfg.k,
                        cfg.l
                    )));
                }
            }
            (e, f)
        }
        None if suite == Suite::Sharpness || suite == Suite::Acceptance => {
            let empty = SplitPointSet::from_members(&fld, cfg.k, cfg.l, Vec::new())?;
            (empty.clone(), empty)
        }
        None => (generate_set(cfg, SetRole::E)?, generate_set(cfg, SetRole::F)?),
    };
    let mut rec = Recorder::default();
    let csv = match suite {
        Suite::Lemmas => lemmas(&fld, cfg, &e, &mut rec)?,
        Suite::Theorem1 => theorem1(cfg, &e, &f, &mut rec)?,
        Suite::Theorem2 => theorem2(cfg, &e, &f, &mut rec)?,
        Suite::Sharpness => {
            sharpness(&fld, cfg, &mut rec)?;
            None
        }
        Suite::Acceptance => {
            for outcome in acceptance::run_all() {
                rec.checks.push(outcome.into_check());
            }
            None
        }
    };
    let mut report = RunReport {
        schema: REPORT_SCHEMA,
        suite,
        config: cfg.clone(),
        pass: rec.checks.iter().all(|c| c.pass),
        checks: rec.checks,
        skipped: rec.skipped,
        duration_ms: start.elapsed().as_millis() as u64,
        csv: String::new(),
    };
    report.csv = csv.unwrap_or_else(|| report.summary_csv());
    Ok(report)
}

#[derive(Serialize)]
struct SphereCountPayload {
    d: usize,
    sizes: Vec<u64>,
    max_deviation: u64,
    allowed: u64,
}

/// | |S_t| − q^{d−1} | ≤ 2q^{d−2} for every t ≠ 0, in integers.
pub(crate) fn sphere_count_law(fld: &PrimeField, d: usize) -> Result<(bool, impl Serialize)> {
    if d < 2 {
        return Err(Error::Dimension("sphere count law needs d ≥ 2".into()));
    }
    let q = fld.q();
    let sizes = norm_fiber_sizes(fld, d)?;
    let centre = q.pow(d as u32 - 1);
    let allowed = 2 * q.pow(d as u32 - 2);
    let max_deviation = sizes[1..].iter().map(|&n| n.abs_diff(centre)).max().unwrap_or(0);
    Ok((
        max_deviation <= allowed,
        SphereCountPayload {
            d,
            sizes,
            max_deviation,
            allowed,
        },
    ))
}

fn lemmas(fld: &PrimeField, cfg: &ExperimentConfig, e: &SplitPointSet, rec: &mut Recorder) -> Result<Option<String>> {
    let q = fld.q();
    for d in 2..=(cfg.k + cfg.l).min(4) {
        rec.record(
            format!("orthogonality d={d}"),
            "spectral::orthogonality_check",
            orthogonality_check(fld, d).map(|r| (r.pass, r)),
        );
        let size = PointCodec::new(q, d)?.size();
        let members = bernoulli_members(size, cfg.density, cfg.seed, 16 + d as u64);
        let table = DensityTable::indicator(fld, d, &members)?;
        let gap = plancherel_gap(&table);
        let scale = (members.len().max(1) as f64) / size as f64;
        rec.record(
            format!("plancherel d={d}"),
            "spectral::plancherel_gap",
            Ok((gap <= 1e-9 * scale, json!({ "d": d, "support": members.len(), "gap": gap }))),
        );
        rec.record(
            format!("kloosterman d={d}"),
            "spectral::verify_kloosterman",
            verify_kloosterman(fld, d).map(|r| (r.pass, r)),
        );
        rec.record(
            format!("sphere counts d={d}"),
            "geometry::norm_fiber_sizes",
            sphere_count_law(fld, d),
        );
    }

    let mut circle_rows: Vec<CircleEnergy> = Vec::new();
    if fld.is_three_mod_four() {
        rec.record("so2 orbit", "field::so2_orbit_check", fld.so2_orbit_check().map(|r| (r.pass, r)));
        let energies: Result<Vec<CircleEnergy>> = (1..q).map(|a| circle_energy(fld, a)).collect();
        if let Ok(rows) = &energies {
            circle_rows = rows.clone();
        }
        rec.record(
            "circle energy",
            "energy::circle_energy",
            energies.map(|rows| (rows.iter().all(|r| r.pass), rows)),
        );
    } else {
        for name in ["so2 orbit", "circle energy"] {
            rec.skip(name, format!("requires q ≡ 3 mod 4, got q = {q}"));
        }
    }

    rec.record(
        "mixed zero mass",
        "pairs::mixed_zero_mass",
        mixed_zero_mass(e).map(|m| (m.holds && m.backends_agree, m)),
    );
    let fiber = SplitPointSet::from_members(fld, cfg.k, cfg.l, (0..e.suffix_size()).collect())?;
    rec.record(
        "mixed zero mass, single full fiber",
        "pairs::mixed_zero_mass",
        mixed_zero_mass(&fiber).map(|m| (m.saturated && m.backends_agree, m)),
    );
    if fld.is_three_mod_four() && cfg.k == 2 && cfg.l == 2 {
        rec.record(
            "sphere restricted mass",
            "energy::sphere_restricted_mass",
            sphere_restricted_mass_all(e).map(|all| (all.iter().all(|m| m.pass), all)),
        );
    } else {
        rec.skip("sphere restricted mass", "requires q ≡ 3 mod 4 and k = l = 2");
    }

    if circle_rows.is_empty() {
        return Ok(None);
    }
    let mut csv = format!("{}\n", CircleEnergy::CSV_HEADER);
    for row in &circle_rows {
        csv.push_str(&row.csv_row());
        csv.push('\n');
    }
    Ok(Some(csv))
}

#[derive(Serialize)]
struct SpectrumPayload<'a> {
    e_size: usize,
    f_size: usize,
    b_size: usize,
    spectrum: &'a PairSpectrum,
}

fn theorem1(cfg: &ExperimentConfig, e: &SplitPointSet, f: &SplitPointSet, rec: &mut Recorder) -> Result<Option<String>> {
    let spec = pair_spectrum_fast(e, f)?;
    rec.record(
        "pair spectrum",
        "pairs::pair_spectrum_fast",
        Ok((
            true,
            SpectrumPayload {
                e_size: e.len(),
                f_size: f.len(),
                b_size: b_set(&spec).len(),
                spectrum: &spec,
            },
        )),
    );
    rec.record(
        "discrepancy",
        "pairs::discrepancy_report",
        discrepancy_from_spectrum(e, f, &spec).map(|r| {
            let first_failure = r.cells.iter().find(|c| !c.pass).cloned();
            (
                r.pass,
                json!({
                    "max_ratio": r.max_ratio,
                    "e_size": r.e_size,
                    "f_size": r.f_size,
                    "counterexample": first_failure,
                    "cells": r.cells,
                }),
            )
        }),
    );
    if cfg.l >= cfg.k && cfg.k >= 2 {
        let check = surjectivity_from_spectrum(e, f, &spec, SURJECTIVITY_CONSTANT);
        rec.record("surjectivity", "pairs::theorem1_check", Ok((check.holds, check)));
    } else {
        rec.skip("surjectivity", format!("requires l ≥ k ≥ 2, got k={}, l={}", cfg.k, cfg.l));
    }
    if !e.is_empty() && !f.is_empty() {
        let cs = cs_from_spectrum(e, f, &spec);
        rec.record("cauchy-schwarz", "pairs::cs_lower_bound", Ok((cs.holds, cs)));
    } else {
        rec.skip("cauchy-schwarz", "empty set");
    }
    Ok(Some(spec.to_csv()))
}

fn theorem2(cfg: &ExperimentConfig, e: &SplitPointSet, f: &SplitPointSet, rec: &mut Recorder) -> Result<Option<String>> {
    rec.record(
        "energy chain",
        "energy::energy_chain_check",
        energy_chain_check(e, f).map(|r| (r.pass, r)),
    );
    rec.record(
        "three-branch lower bound",
        "energy::theorem2_bound",
        theorem2_bound(e, f, cfg.constant_c).map(|r| (r.holds, r)),
    );
    Ok(None)
}

fn sharpness(fld: &PrimeField, cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let (q, k, l) = (fld.q(), cfg.k, cfg.l);
    let circles = circles_set(fld, k, l, SetRole::E).and_then(|e| {
        let f = circles_set(fld, k, l, SetRole::F)?;
        let b = b_set(&pair_spectrum_fast(&e, &f)?);
        let expected: BTreeSet<(u64, u64)> = [(1, 1)].into();
        Ok((b == expected, json!({ "e_size": e.len(), "f_size": f.len(), "b_set": b })))
    });
    rec.record("circles example", "pairs::b_set", circles);

    if l >= 2 {
        let codec = PointCodec::new(q, k)?;
        let mut factor: Vec<Vec<u64>> = bernoulli_members(codec.size(), cfg.density, cfg.seed, 2)
            .into_iter()
            .map(|i| codec.decode(i))
            .collect();
        if factor.is_empty() {
            factor.push(vec![0; k]);
        }
        rec.record(
            "product law",
            "pairs::product_law_check",
            product_law_check(fld, k, l, &factor).map(|r| (r.holds, r)),
        );
    } else {
        rec.skip("product law", "requires l ≥ 2");
    }

    if fld.is_three_mod_four() {
        let lengths: Vec<u64> = match cfg.strip_len {
            Some(len) => vec![len],
            None => (1..=q).collect(),
        };
        let scans: Result<Vec<_>> = lengths.iter().map(|&len| remark_sharpness_scan(q, len)).collect();
        rec.record(
            "strip remark",
            "energy::remark_sharpness_scan",
            scans.map(|all| (all.iter().all(|s| s.holds), all)),
        );
    } else {
        rec.skip("strip remark", format!("requires q ≡ 3 mod 4, got q = {q}"));
    }

    let space = (q as u128).pow(k as u32);
    if k % 2 == 1 && space <= SEARCH_SPACE_LIMIT as u128 {
        let outcome = search_sharp_subset(fld, k, cfg.search_budget, cfg.seed).and_then(|found| {
            // independent recheck of the postcondition
            let distances = distance_set(fld, &found.points)?;
            let mut valid = distances.len() < q as usize;
            let product = if l >= 2 {
                let law = product_law_check(fld, k, l, &found.points)?;
                valid &= law.holds && law.b_size < (q * q) as usize;
                Some(law)
            } else {
                None
            };
            Ok((valid, json!({ "search": found, "product_law": product })))
        });
        rec.record("sharp subset search", "experiments::search_sharp_subset", outcome);
    } else {
        rec.skip("sharp subset search", "requires odd k and q^k ≤ 100000");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::Generator;

    fn strip_duration(report: &RunReport) -> String {
        let mut v = serde_json::to_value(report).unwrap();
        v["duration_ms"] = json!(0);
        v.to_string()
    }

    #[test]
    fn lemmas_q7_pass() {
        let cfg = ExperimentConfig::default();
        let report = run_suite(Suite::Lemmas, &cfg).unwrap();
        assert!(report.pass, "{:?}", report.first_failure());
        assert!(report.csv.starts_with("q,a,circle_size,energy,bound\n7,1,8,"));
        assert!(report.checks.iter().any(|c| c.paper_ref == "spectral::verify_kloosterman"));
    }

    #[test]
    fn lemmas_q5_skips_gated_checks() {
        let cfg = ExperimentConfig { q: 5, ..Default::default() };
        let report = run_suite(Suite::Lemmas, &cfg).unwrap();
        assert!(report.pass);
        assert_eq!(report.skipped.len(), 3);
    }

    #[test]
    fn theorem1_full_space_is_surjective() {
        let cfg = ExperimentConfig {
            q: 5,
            generator: Generator::Full,
            ..Default::default()
        };
        let report = run_suite(Suite::Theorem1, &cfg).unwrap();
        assert!(report.pass);
        let surj = report.checks.iter().find(|c| c.name == "surjectivity").unwrap();
        assert_eq!(surj.payload["surjective"], json!(true));
        assert_eq!(report.csv.lines().count(), 5);
    }

    #[test]
    fn theorem2_gate_fails_the_report() {
        let cfg = ExperimentConfig { q: 5, ..Default::default() };
        let report = run_suite(Suite::Theorem2, &cfg).unwrap();
        assert!(!report.pass);
        assert!(report.checks[0].payload["error"].as_str().unwrap().contains("3 mod 4"));
    }

    #[test]
    fn theorem2_small_bernoulli() {
        let cfg = ExperimentConfig {
            q: 3,
            density: 0.3,
            seed: 11,
            ..Default::default()
        };
        let report = run_suite(Suite::Theorem2, &cfg).unwrap();
        assert!(report.pass, "{:?}", report.first_failure());
    }

    #[test]
    fn sharpness_q7() {
        let cfg = ExperimentConfig {
            k: 3,
            l: 2,
            density: 0.2,
            search_budget: 3000,
            ..Default::default()
        };
        let report = run_suite(Suite::Sharpness, &cfg).unwrap();
        assert!(report.pass, "{:?}", report.first_failure());
        let circles = &report.checks[0];
        assert_eq!(circles.payload["b_set"], json!([[1, 1]]));
        assert_eq!(report.checks.len(), 4);
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = ExperimentConfig {
            q: 3,
            seed: 77,
            ..Default::default()
        };
        for suite in [Suite::Lemmas, Suite::Theorem1, Suite::Theorem2] {
            let a = run_suite(suite, &cfg).unwrap();
            let b = run_suite(suite, &cfg).unwrap();
            assert_eq!(strip_duration(&a), strip_duration(&b));
            assert_eq!(a.csv, b.csv);
        }
    }

    #[test]
    fn report_schema_fields() {
        let cfg = ExperimentConfig { q: 3, ..Default::default() };
        let v: Value = serde_json::from_str(&run_suite(Suite::Theorem1, &cfg).unwrap().to_json()).unwrap();
        assert_eq!(v["schema"], json!(1));
        for key in ["config", "checks", "duration_ms"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        for check in v["checks"].as_array().unwrap() {
            for key in ["name", "paper_ref", "pass", "payload"] {
                assert!(check.get(key).is_some());
            }
        }
        assert!("bogus".parse::<Suite>().is_err());
    }
}
