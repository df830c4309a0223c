//! Split point sets, the two-parameter pair spectrum s(a,b), and the
//! main-term/discrepancy decomposition of s(a,b).
//!
//! A point X ∈ F_q^{k+l} splits as X = (x', x'') with x' ∈ F_q^k and
//! x'' ∈ F_q^l. Because encoding is lexicographic, the encoded index of X is
//! `idx(x')·q^l + idx(x'')`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::geometry::{norm_fiber_sizes, norm_table, PointCodec, PointSetFile};
use crate::rational::{self, int_pow, Rational};
use crate::spectral::{indicator_spectrum, transform_axes, SpectralTable};

/// Largest |E|·|F| the quadratic double loops will visit.
pub const PAIR_LIMIT: u128 = 100_000_000;

/// Largest |E| and |F| for which the octuple count runs.
pub const OCTUPLE_LIMIT: usize = 60;

/// Constant in the surjectivity threshold |E||F| > C·q^{k+2l+1}.
pub const SURJECTIVITY_CONSTANT: u64 = 16;

/// A subset of F_q^{k+l} with its declared split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPointSet {
    field: PrimeField,
    k: usize,
    l: usize,
    codec: PointCodec,
    /// Sorted, distinct encoded points.
    members: Vec<usize>,
}

impl SplitPointSet {
    /// Builds the set from coordinate vectors; coordinates are reduced mod q
    /// and repeated points collapse.
    pub fn new<I>(fld: &PrimeField, k: usize, l: usize, points: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<u64>>,
    {
        let codec = Self::codec_for(fld, k, l)?;
        let mut members = Vec::new();
        for p in points {
            if p.len() != k + l {
                return Err(Error::Dimension(format!(
                    "point has {} coordinates, expected {}",
                    p.len(),
                    k + l
                )));
            }
            let reduced: Vec<u64> = p.iter().map(|&c| fld.reduce(c)).collect();
            members.push(codec.encode(&reduced));
        }
        members.sort_unstable();
        members.dedup();
        Ok(Self {
            field: fld.clone(),
            k,
            l,
            codec,
            members,
        })
    }

    /// Builds the set from encoded indices.
    pub fn from_members(fld: &PrimeField, k: usize, l: usize, mut members: Vec<usize>) -> Result<Self> {
        let codec = Self::codec_for(fld, k, l)?;
        if let Some(&bad) = members.iter().find(|&&m| m >= codec.size()) {
            return Err(Error::InvalidArgument(format!(
                "encoded point {bad} outside F_{}^{}",
                fld.q(),
                k + l
            )));
        }
        members.sort_unstable();
        members.dedup();
        Ok(Self {
            field: fld.clone(),
            k,
            l,
            codec,
            members,
        })
    }

    /// The whole space F_q^{k+l}.
    pub fn full(fld: &PrimeField, k: usize, l: usize) -> Result<Self> {
        let codec = Self::codec_for(fld, k, l)?;
        Self::from_members(fld, k, l, (0..codec.size()).collect())
    }

    pub fn from_file(file: &PointSetFile) -> Result<Self> {
        let (k, l) = file
            .split
            .ok_or_else(|| Error::InvalidArgument("point-set file lacks split=<k>,<l>".into()))?;
        let fld = PrimeField::new(file.q)?;
        Self::new(&fld, k, l, file.points.iter().cloned())
    }

    pub fn to_file(&self) -> PointSetFile {
        PointSetFile {
            q: self.field.q(),
            dims: self.dims(),
            split: Some((self.k, self.l)),
            points: self.points().collect(),
        }
    }

    fn codec_for(fld: &PrimeField, k: usize, l: usize) -> Result<PointCodec> {
        if k == 0 || l == 0 {
            return Err(Error::Dimension(format!("split ({k},{l}) needs k, l ≥ 1")));
        }
        PointCodec::new(fld.q(), k + l)
    }

    pub fn field(&self) -> &PrimeField {
        &self.field
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn dims(&self) -> usize {
        self.k + self.l
    }

    pub fn codec(&self) -> PointCodec {
        self.codec
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, point: &[u64]) -> bool {
        point.len() == self.dims() && self.members.binary_search(&self.codec.encode(point)).is_ok()
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<u64>> + '_ {
        self.members.iter().map(|&m| self.codec.decode(m))
    }

    /// q^l, the number of encoded suffixes.
    pub fn suffix_size(&self) -> usize {
        (self.field.q() as usize).pow(self.l as u32)
    }

    /// (idx(x'), idx(x'')) for an encoded point.
    #[inline]
    pub fn split_index(&self, idx: usize) -> (usize, usize) {
        let s = self.suffix_size();
        (idx / s, idx % s)
    }

    /// Ê on the whole of F_q^{k+l}.
    pub fn spectrum(&self) -> SpectralTable {
        indicator_spectrum(&self.field, self.dims(), &self.members).expect("size checked at construction")
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.field != other.field || self.k != other.k || self.l != other.l {
            return Err(Error::Dimension(format!(
                "sets live in different spaces: q={} ({},{}) vs q={} ({},{})",
                self.field.q(),
                self.k,
                self.l,
                other.field.q(),
                other.k,
                other.l
            )));
        }
        Ok(())
    }

    pub(crate) fn require_main_hypothesis(&self) -> Result<()> {
        if self.l >= self.k && self.k >= 2 {
            Ok(())
        } else {
            Err(Error::Hypothesis(format!(
                "requires l ≥ k ≥ 2, got k={}, l={}",
                self.k, self.l
            )))
        }
    }
}

/// Δ(E) = {‖x − y‖ : x, y ∈ E}.
pub fn distance_set(fld: &PrimeField, points: &[Vec<u64>]) -> Result<BTreeSet<u64>> {
    if points.is_empty() {
        return Err(Error::EmptySet);
    }
    let q = fld.q() as i64;
    let mut seen = vec![false; fld.q() as usize];
    for x in points {
        for y in points {
            let n = x
                .iter()
                .zip(y)
                .map(|(&a, &b)| {
                    let diff = a as i64 - b as i64;
                    diff * diff
                })
                .sum::<i64>()
                .rem_euclid(q);
            seen[n as usize] = true;
        }
    }
    Ok(seen
        .iter()
        .enumerate()
        .filter(|(_, &s)| s)
        .map(|(t, _)| t as u64)
        .collect())
}

/// The q×q matrix s(a,b).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairSpectrum {
    pub q: u64,
    /// Row-major, `counts[a·q + b]`.
    pub counts: Vec<u64>,
}

impl PairSpectrum {
    pub fn get(&self, a: u64, b: u64) -> u64 {
        self.counts[(a * self.q + b) as usize]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// q rows of q comma-separated integers; row a, column b holds s(a,b).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.counts.chunks(self.q as usize) {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

fn pair_guard(e: &SplitPointSet, f: &SplitPointSet) -> Result<()> {
    let pairs = e.len() as u128 * f.len() as u128;
    if pairs > PAIR_LIMIT {
        return Err(Error::SizeGuard {
            what: "pair enumeration",
            size: pairs,
            limit: PAIR_LIMIT,
            advice: "use pair_spectrum_fast",
        });
    }
    Ok(())
}

/// s(a,b) by visiting every (X, Y) ∈ E × F. The reference oracle.
pub fn pair_spectrum_naive(e: &SplitPointSet, f: &SplitPointSet) -> Result<PairSpectrum> {
    e.same_shape(f)?;
    pair_guard(e, f)?;
    let q = e.field.q();
    let k = e.k;
    let ys: Vec<Vec<i64>> = f.points().map(|p| p.into_iter().map(|c| c as i64).collect()).collect();
    let counts = e
        .points()
        .collect::<Vec<_>>()
        .par_iter()
        .fold(
            || vec![0u64; (q * q) as usize],
            |mut acc, x| {
                for y in &ys {
                    let (mut a, mut b) = (0i64, 0i64);
                    for (i, (&xi, &yi)) in x.iter().zip(y).enumerate() {
                        let diff = xi as i64 - yi;
                        if i < k {
                            a += diff * diff;
                        } else {
                            b += diff * diff;
                        }
                    }
                    let a = a.rem_euclid(q as i64) as u64;
                    let b = b.rem_euclid(q as i64) as u64;
                    acc[(a * q + b) as usize] += 1;
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; (q * q) as usize],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(PairSpectrum { q, counts })
}

/// c(u) = #{(X, Y) ∈ E × F : X − Y = u}, via spectral multiplication and
/// an inverse transform rounded to integers.
///
/// Fails with [`Error::PrecisionBreach`] if any value sits more than 10⁻³
/// from an integer.
pub fn difference_histogram(e: &SplitPointSet, f: &SplitPointSet) -> Result<Vec<u64>> {
    e.same_shape(f)?;
    let q = e.field.q() as usize;
    let d = e.dims();
    let size = e.codec.size();
    let conj: Vec<Complex64> = e.field.char_table().iter().map(|c| c.conj()).collect();
    let raw = |set: &SplitPointSet| {
        let mut buf = vec![Complex64::default(); size];
        for &m in &set.members {
            buf[m] = Complex64::new(1.0, 0.0);
        }
        transform_axes(q, d, &mut buf, &conj);
        buf
    };
    let e_hat = raw(e);
    let mut product: Vec<Complex64> = if e.members == f.members {
        e_hat.iter().map(|c| Complex64::new(c.norm_sqr(), 0.0)).collect()
    } else {
        let f_hat = raw(f);
        e_hat.iter().zip(&f_hat).map(|(a, b)| a * b.conj()).collect()
    };
    transform_axes(q, d, &mut product, e.field.char_table());
    let scale = 1.0 / size as f64;
    product
        .iter()
        .enumerate()
        .map(|(index, v)| {
            let x = v.re * scale;
            let rounded = x.round();
            let residue = (x - rounded).abs().max((v.im * scale).abs());
            if residue > 1e-3 || rounded < 0.0 {
                return Err(Error::PrecisionBreach { index, residue });
            }
            Ok(rounded as u64)
        })
        .collect()
}

/// s(a,b) aggregated from the difference histogram. Agrees exactly with
/// [`pair_spectrum_naive`].
pub fn pair_spectrum_fast(e: &SplitPointSet, f: &SplitPointSet) -> Result<PairSpectrum> {
    let diffs = difference_histogram(e, f)?;
    let q = e.field.q();
    let prefix_norms = norm_table(&e.field, e.k)?;
    let suffix_norms = norm_table(&e.field, e.l)?;
    let suffix = suffix_norms.len();
    let mut counts = vec![0u64; (q * q) as usize];
    for (u, &c) in diffs.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let a = prefix_norms[u / suffix] as u64;
        let b = suffix_norms[u % suffix] as u64;
        counts[(a * q + b) as usize] += c;
    }
    Ok(PairSpectrum { q, counts })
}

/// B_{k,l}(E,F) = {(a,b) : s(a,b) > 0}.
pub fn b_set(spec: &PairSpectrum) -> BTreeSet<(u64, u64)> {
    let q = spec.q;
    spec.counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, _)| (i as u64 / q, i as u64 % q))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscrepancyCell {
    pub a: u64,
    pub b: u64,
    pub s: u64,
    /// |E||F||S_a^{k−1}||S_b^{l−1}| q^{−k−l}.
    #[serde(serialize_with = "rational::serialize")]
    pub main_term: Rational,
    /// s − main_term.
    #[serde(serialize_with = "rational::serialize")]
    pub discrepancy: Rational,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscrepancyReport {
    pub q: u64,
    pub k: usize,
    pub l: usize,
    pub e_size: usize,
    pub f_size: usize,
    pub cells: Vec<DiscrepancyCell>,
    /// max over cells of |D| / bound (0 where the bound vanishes and D = 0).
    pub max_ratio: f64,
    pub pass: bool,
}

/// Relative slack allowed when comparing |D| against its float bound.
pub const DISCREPANCY_TOLERANCE: f64 = 1e-6;

/// Splits every s(a,b) into its main term and the discrepancy D, and checks
/// |D| against
/// 2q^{(k−1)/2}√(|E||F|)|S_b| + 2q^{(l−1)/2}√(|E||F|)|S_a| + 4q^{(k+l)/2−1}√(|E||F|).
pub fn discrepancy_report(e: &SplitPointSet, f: &SplitPointSet) -> Result<DiscrepancyReport> {
    let spec = pair_spectrum_fast(e, f)?;
    discrepancy_from_spectrum(e, f, &spec)
}

pub fn discrepancy_from_spectrum(
    e: &SplitPointSet,
    f: &SplitPointSet,
    spec: &PairSpectrum,
) -> Result<DiscrepancyReport> {
    e.same_shape(f)?;
    let fld = &e.field;
    let q = fld.q();
    let (k, l) = (e.k, e.l);
    let sa = norm_fiber_sizes(fld, k)?;
    let sb = norm_fiber_sizes(fld, l)?;
    let ef = e.len() as i128 * f.len() as i128;
    let root = (ef as f64).sqrt();
    let qf = q as f64;
    let denom = int_pow(q, (k + l) as u32);
    let mut cells = Vec::with_capacity((q * q) as usize);
    let mut max_ratio: f64 = 0.0;
    for a in 0..q {
        for b in 0..q {
            let s = spec.get(a, b);
            let main_term = Rational::new(ef * sa[a as usize] as i128 * sb[b as usize] as i128, denom);
            let discrepancy = Rational::from_integer(s as i128) - main_term;
            let bound = 2.0 * qf.powf((k as f64 - 1.0) / 2.0) * root * sb[b as usize] as f64
                + 2.0 * qf.powf((l as f64 - 1.0) / 2.0) * root * sa[a as usize] as f64
                + 4.0 * qf.powf((k + l) as f64 / 2.0 - 1.0) * root;
            let abs_d = rational::to_f64(&discrepancy).abs();
            let pass = abs_d <= bound * (1.0 + DISCREPANCY_TOLERANCE);
            let ratio = if bound > 0.0 {
                abs_d / bound
            } else if abs_d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            max_ratio = max_ratio.max(ratio);
            cells.push(DiscrepancyCell {
                a,
                b,
                s,
                main_term,
                discrepancy,
                bound,
                pass,
            });
        }
    }
    let pass = cells.iter().all(|c| c.pass);
    Ok(DiscrepancyReport {
        q,
        k,
        l,
        e_size: e.len(),
        f_size: f.len(),
        cells,
        max_ratio,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SurjectivityCheck {
    pub product: u128,
    /// C·q^{k+2l+1}.
    pub threshold: u128,
    pub threshold_met: bool,
    pub surjective: bool,
    /// threshold_met ⇒ surjective.
    pub holds: bool,
}

/// Checks that |E||F| > 16·q^{k+2l+1} forces B_{k,l}(E,F) = F_q × F_q.
pub fn theorem1_check(e: &SplitPointSet, f: &SplitPointSet) -> Result<SurjectivityCheck> {
    theorem1_check_with_constant(e, f, SURJECTIVITY_CONSTANT)
}

pub fn theorem1_check_with_constant(e: &SplitPointSet, f: &SplitPointSet, constant: u64) -> Result<SurjectivityCheck> {
    e.same_shape(f)?;
    e.require_main_hypothesis()?;
    let spec = pair_spectrum_fast(e, f)?;
    Ok(surjectivity_from_spectrum(e, f, &spec, constant))
}

pub(crate) fn surjectivity_from_spectrum(
    e: &SplitPointSet,
    f: &SplitPointSet,
    spec: &PairSpectrum,
    constant: u64,
) -> SurjectivityCheck {
    let q = e.field.q();
    let product = e.len() as u128 * f.len() as u128;
    let threshold = constant as u128 * (q as u128).pow((e.k + 2 * e.l + 1) as u32);
    let threshold_met = product > threshold;
    let surjective = spec.counts.iter().all(|&c| c > 0);
    SurjectivityCheck {
        product,
        threshold,
        threshold_met,
        surjective,
        holds: !threshold_met || surjective,
    }
}

/// Σ_{a,b} s(a,b)².
pub fn sum_s_squared(spec: &PairSpectrum) -> u128 {
    spec.counts.iter().map(|&c| c as u128 * c as u128).sum()
}

/// Σ s(a,b)² by counting octuples (x,y,z,w) ∈ E×F×E×F whose prefix and
/// suffix norms agree pairwise. Independent of the spectrum.
pub fn sum_s_squared_octuples(e: &SplitPointSet, f: &SplitPointSet) -> Result<u128> {
    e.same_shape(f)?;
    if e.len() > OCTUPLE_LIMIT || f.len() > OCTUPLE_LIMIT {
        return Err(Error::SizeGuard {
            what: "octuple count",
            size: e.len().max(f.len()) as u128,
            limit: OCTUPLE_LIMIT as u128,
            advice: "use sum_s_squared on a pair spectrum",
        });
    }
    let fld = &e.field;
    let k = e.k;
    let norm_pair = |x: &[u64], y: &[u64]| {
        let d: Vec<u64> = x.iter().zip(y).map(|(&a, &b)| fld.sub(a, b)).collect();
        (crate::geometry::norm(fld, &d[..k]), crate::geometry::norm(fld, &d[k..]))
    };
    let xs: Vec<Vec<u64>> = e.points().collect();
    let ys: Vec<Vec<u64>> = f.points().collect();
    let mut count = 0u128;
    for x in &xs {
        for y in &ys {
            let key = norm_pair(x, y);
            for z in &xs {
                for w in &ys {
                    if norm_pair(z, w) == key {
                        count += 1;
                    }
                }
            }
        }
    }
    Ok(count)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CauchySchwarzBound {
    /// |E|²|F|² / Σ s(a,b)².
    #[serde(serialize_with = "rational::serialize")]
    pub bound: Rational,
    pub b_size: usize,
    pub holds: bool,
}

/// |E|²|F|²/Σs² ≤ |B_{k,l}(E,F)|, with the cardinality reading of B.
pub fn cs_lower_bound(e: &SplitPointSet, f: &SplitPointSet) -> Result<CauchySchwarzBound> {
    if e.is_empty() || f.is_empty() {
        return Err(Error::EmptySet);
    }
    let spec = pair_spectrum_fast(e, f)?;
    Ok(cs_from_spectrum(e, f, &spec))
}

pub(crate) fn cs_from_spectrum(e: &SplitPointSet, f: &SplitPointSet, spec: &PairSpectrum) -> CauchySchwarzBound {
    let ef = e.len() as i128 * f.len() as i128;
    let bound = Rational::new(ef * ef, sum_s_squared(spec) as i128);
    let b_size = b_set(spec).len();
    CauchySchwarzBound {
        holds: bound <= Rational::from_integer(b_size as i128),
        bound,
        b_size,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixedZeroMass {
    /// Σ_{m'} |Ê(m',0)|² = q^{−k−2l} Σ_{x'} n(x')².
    #[serde(serialize_with = "rational::serialize")]
    pub exact: Rational,
    /// q^{−k−l}|E|.
    #[serde(serialize_with = "rational::serialize")]
    pub bound: Rational,
    /// The same sum read off the float spectrum.
    pub spectral: f64,
    pub holds: bool,
    pub saturated: bool,
    pub backends_agree: bool,
}

/// The mass of Ê on the slice m'' = 0, computed exactly from fiber counts
/// n(x') = #{x'' : (x', x'') ∈ E} and cross-checked against the spectrum.
pub fn mixed_zero_mass(e: &SplitPointSet) -> Result<MixedZeroMass> {
    let q = e.field.q();
    let (k, l) = (e.k, e.l);
    let prefixes = (q as usize).pow(k as u32);
    let mut fibers = vec![0i128; prefixes];
    for &m in &e.members {
        fibers[e.split_index(m).0] += 1;
    }
    let exact = Rational::new(fibers.iter().map(|n| n * n).sum(), int_pow(q, (k + 2 * l) as u32));
    let bound = Rational::new(e.len() as i128, int_pow(q, (k + l) as u32));
    let spec = e.spectrum();
    let stride = e.suffix_size();
    let spectral: f64 = (0..prefixes).map(|p| spec.coeffs[p * stride].norm_sqr()).sum();
    let exact_f = rational::to_f64(&exact);
    let backends_agree = (spectral - exact_f).abs() <= 1e-9 * exact_f.max(1e-300) + 1e-18;
    Ok(MixedZeroMass {
        holds: exact <= bound,
        saturated: exact == bound,
        exact,
        bound,
        spectral,
        backends_agree,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductLawReport {
    pub q: u64,
    pub k: usize,
    pub l: usize,
    pub factor_size: usize,
    pub distances: Vec<u64>,
    pub b_size: usize,
    pub holds: bool,
}

/// For E = E₁ × F_q^l, checks B_{k,l}(E,E) = Δ(E₁) × F_q exactly.
pub fn product_law_check(fld: &PrimeField, k: usize, l: usize, factor: &[Vec<u64>]) -> Result<ProductLawReport> {
    if l < 2 {
        return Err(Error::Dimension("product law needs l ≥ 2 so that Δ(F_q^l) = F_q".into()));
    }
    let suffix = (fld.q() as usize).pow(l as u32);
    let prefix_codec = PointCodec::new(fld.q(), k)?;
    let members: Vec<usize> = factor
        .iter()
        .flat_map(|p| {
            let base = prefix_codec.encode(p) * suffix;
            (0..suffix).map(move |s| base + s)
        })
        .collect();
    let e = SplitPointSet::from_members(fld, k, l, members)?;
    let b = b_set(&pair_spectrum_fast(&e, &e)?);
    let distances = distance_set(fld, factor)?;
    let expected: BTreeSet<(u64, u64)> = distances
        .iter()
        .flat_map(|&a| (0..fld.q()).map(move |b| (a, b)))
        .collect();
    Ok(ProductLawReport {
        q: fld.q(),
        k,
        l,
        factor_size: factor.len(),
        distances: distances.into_iter().collect(),
        b_size: b.len(),
        holds: b == expected,
    })
}
