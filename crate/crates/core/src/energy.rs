//! Rotation correlations and the energy chain bounding Σ s(a,b)² for
//! k = l = 2 over fields with q ≡ 3 mod 4.
//!
//! For rotations θ, φ the correlation
//! r_{θ,φ}^E(u', u'') = #{(X, Z) ∈ E² : x' − θz' = u', x'' − φz'' = u''}
//! satisfies Σ_{a,b} s(a,b)² ≤ Σ_{θ,φ} Σ_U r^E_{θ,φ}(U)·r^F_{θ,φ}(U), because
//! two nonzero plane vectors of equal norm differ by exactly one rotation.
//!
//! Frequencies are rotated by the transpose: the transform of r^E is
//! q⁴·Ê(m', m'')·conj(Ê(θᵀm', φᵀm'')), and θᵀ = θ⁻¹ on SO₂.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{PrimeField, Rotation};
use crate::geometry::{norm_table, PointCodec};
use crate::pairs::{b_set, distance_set, pair_spectrum_fast, sum_s_squared, PairSpectrum, SplitPointSet, PAIR_LIMIT};
use crate::rational::{self, int_pow, Rational};
use crate::spectral::{forward_transform, DensityTable, SpectralTable};

/// Index arithmetic on F_q², shared by every rotation pair.
struct Plane {
    q2: usize,
    /// `sub[x·q² + y]` = idx(x − y).
    sub: Vec<u32>,
}

impl Plane {
    fn new(fld: &PrimeField) -> Result<Self> {
        let codec = PointCodec::new(fld.q(), 2)?;
        let q2 = codec.size();
        let points: Vec<Vec<u64>> = (0..q2).map(|i| codec.decode(i)).collect();
        let mut sub = vec![0u32; q2 * q2];
        for (x, px) in points.iter().enumerate() {
            for (y, py) in points.iter().enumerate() {
                let diff = [fld.sub(px[0], py[0]), fld.sub(px[1], py[1])];
                sub[x * q2 + y] = codec.encode(&diff) as u32;
            }
        }
        Ok(Self { q2, sub })
    }

    /// idx ↦ idx(θ·v) over the plane.
    fn rotation_map(&self, fld: &PrimeField, r: &Rotation) -> Vec<u32> {
        let q = fld.q();
        (0..self.q2)
            .map(|i| {
                let v = [(i as u64) / q, (i as u64) % q];
                let w = r.apply(fld, v);
                (w[0] * q + w[1]) as u32
            })
            .collect()
    }
}

fn require_two_two(e: &SplitPointSet) -> Result<()> {
    if e.k() == 2 && e.l() == 2 {
        Ok(())
    } else {
        Err(Error::Hypothesis(format!(
            "rotation energy needs k = l = 2, got k={}, l={}",
            e.k(),
            e.l()
        )))
    }
}

fn require_same(e: &SplitPointSet, f: &SplitPointSet) -> Result<()> {
    if e.field() != f.field() || e.k() != f.k() || e.l() != f.l() {
        return Err(Error::Dimension("E and F live in different spaces".into()));
    }
    Ok(())
}

fn square_guard(e: &SplitPointSet) -> Result<()> {
    let pairs = (e.len() as u128).pow(2);
    if pairs > PAIR_LIMIT {
        return Err(Error::SizeGuard {
            what: "rotation correlation",
            size: pairs,
            limit: PAIR_LIMIT,
            advice: "shrink the set",
        });
    }
    Ok(())
}

/// r_{θ,φ}^E as a dense table over F_q² × F_q², indexed u'·q² + u''.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrelationTable {
    pub theta: Rotation,
    pub phi: Rotation,
    pub q: u64,
    pub counts: Vec<u32>,
}

impl CorrelationTable {
    /// Σ_U r(U); always |E|².
    pub fn mass(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }
}

fn split_members(e: &SplitPointSet) -> Vec<(u32, u32)> {
    e.members()
        .iter()
        .map(|&m| {
            let (p, s) = e.split_index(m);
            (p as u32, s as u32)
        })
        .collect()
}

fn correlation_counts(plane: &Plane, pts: &[(u32, u32)], rot_theta: &[u32], rot_phi: &[u32]) -> Vec<u32> {
    let q2 = plane.q2;
    let rotated: Vec<(usize, usize)> = pts
        .iter()
        .map(|&(p, s)| (rot_theta[p as usize] as usize, rot_phi[s as usize] as usize))
        .collect();
    let mut counts = vec![0u32; q2 * q2];
    for &(xp, xs) in pts {
        let row_p = &plane.sub[xp as usize * q2..(xp as usize + 1) * q2];
        let row_s = &plane.sub[xs as usize * q2..(xs as usize + 1) * q2];
        for &(zp, zs) in &rotated {
            let u = row_p[zp] as usize * q2 + row_s[zs] as usize;
            counts[u] += 1;
        }
    }
    counts
}

/// Counts r_{θ,φ}^E exactly by visiting every pair of E × E.
pub fn rotation_correlation(e: &SplitPointSet, theta: Rotation, phi: Rotation) -> Result<CorrelationTable> {
    require_two_two(e)?;
    square_guard(e)?;
    let fld = e.field();
    let plane = Plane::new(fld)?;
    let counts = correlation_counts(
        &plane,
        &split_members(e),
        &plane.rotation_map(fld, &theta),
        &plane.rotation_map(fld, &phi),
    );
    Ok(CorrelationTable {
        theta,
        phi,
        q: fld.q(),
        counts,
    })
}

/// Largest |r̂(M) − q⁴Ê(M)·conj(Ê(θᵀm', φᵀm''))| over all M.
fn fourier_deviation(
    fld: &PrimeField,
    plane: &Plane,
    counts: &[u32],
    e_hat: &SpectralTable,
    inv_theta: &[u32],
    inv_phi: &[u32],
) -> f64 {
    let values = counts.iter().map(|&c| Complex64::new(c as f64, 0.0)).collect();
    let table = DensityTable::from_values(fld, 4, values).expect("q⁴ entries");
    let r_hat = forward_transform(&table);
    let q4 = (fld.q() as f64).powi(4);
    let q2 = plane.q2;
    r_hat
        .coeffs
        .iter()
        .enumerate()
        .map(|(m, &lhs)| {
            let (mp, ms) = (m / q2, m % q2);
            let rotated = inv_theta[mp] as usize * q2 + inv_phi[ms] as usize;
            let rhs = e_hat.coeffs[m] * e_hat.coeffs[rotated].conj() * q4;
            (lhs - rhs).norm()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourierIdentityCheck {
    pub theta: Rotation,
    pub phi: Rotation,
    pub max_deviation: f64,
    pub pass: bool,
}

/// Tolerance on the correlation transform identity.
pub const FOURIER_IDENTITY_TOLERANCE: f64 = 1e-8;

/// Compares the transform of r_{θ,φ}^E with q⁴Ê(M)·conj(Ê(θᵀm', φᵀm'')).
pub fn correlation_fourier_check(e: &SplitPointSet, theta: Rotation, phi: Rotation) -> Result<FourierIdentityCheck> {
    let table = rotation_correlation(e, theta, phi)?;
    let fld = e.field();
    let plane = Plane::new(fld)?;
    let e_hat = e.spectrum();
    let max_deviation = fourier_deviation(
        fld,
        &plane,
        &table.counts,
        &e_hat,
        &plane.rotation_map(fld, &theta.inverse(fld)),
        &plane.rotation_map(fld, &phi.inverse(fld)),
    );
    Ok(FourierIdentityCheck {
        theta,
        phi,
        max_deviation,
        pass: max_deviation < FOURIER_IDENTITY_TOLERANCE,
    })
}

/// The rotation-summed energy q¹² Σ_M Σ_{θ,φ} A(M)·conj(A(θᵀm', φᵀm'')) with
/// A = Ê·conj(F̂), split by which halves of M vanish.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralSplit {
    /// m' = 0 and m'' = 0.
    pub zero: f64,
    /// m' ≠ 0 and m'' ≠ 0.
    pub nonzero: f64,
    /// Exactly one of m', m'' is zero.
    pub mixed: f64,
    /// Largest |imaginary part| among the three partial sums.
    pub imaginary_residue: f64,
}

impl SpectralSplit {
    pub fn total(&self) -> f64 {
        self.zero + self.nonzero + self.mixed
    }
}

fn spectral_split(
    fld: &PrimeField,
    plane: &Plane,
    e_hat: &SpectralTable,
    f_hat: &SpectralTable,
    inverse_maps: &[Vec<u32>],
) -> SpectralSplit {
    let q2 = plane.q2;
    let product: Vec<Complex64> = e_hat
        .coeffs
        .iter()
        .zip(&f_hat.coeffs)
        .map(|(a, b)| a * b.conj())
        .collect();
    let mut sums = [Complex64::default(); 3];
    for inv_theta in inverse_maps {
        for inv_phi in inverse_maps {
            for (m, &value) in product.iter().enumerate() {
                let (mp, ms) = (m / q2, m % q2);
                let rotated = inv_theta[mp] as usize * q2 + inv_phi[ms] as usize;
                let term = value * product[rotated].conj();
                let class = match (mp == 0, ms == 0) {
                    (true, true) => 0,
                    (false, false) => 1,
                    _ => 2,
                };
                sums[class] += term;
            }
        }
    }
    let scale = (fld.q() as f64).powi(12);
    SpectralSplit {
        zero: sums[0].re * scale,
        nonzero: sums[1].re * scale,
        mixed: sums[2].re * scale,
        imaginary_residue: sums.iter().map(|s| (s.im * scale).abs()).fold(0.0, f64::max),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub q: u64,
    pub e_size: usize,
    pub f_size: usize,
    pub rotations: usize,
    /// Σ_{a,b} s(a,b)².
    pub lhs: u128,
    /// Σ_{θ,φ} Σ_U r^E·r^F, counted exactly.
    pub rhs: u128,
    pub chain_holds: bool,
    /// rhs − lhs.
    pub gap: u128,
    /// Σ_{a,b} s(a,b)²·(w_a·w_b − 1) with w_0 = |SO₂| and w_t = 1 otherwise:
    /// octuples whose prefix (or suffix) differences both vanish are matched
    /// by every rotation.
    pub predicted_gap: u128,
    pub gap_explained: bool,
    /// Every correlation table had mass |E|² (resp. |F|²).
    pub masses_ok: bool,
    /// Σ_{θ,φ} (Σ r^E)(Σ r^F) / q⁴, from the exact tables.
    #[serde(serialize_with = "rational::serialize")]
    pub zero_term_exact: Rational,
    /// q⁻⁴|E|²|F|²|SO₂|².
    #[serde(serialize_with = "rational::serialize")]
    pub zero_term_formula: Rational,
    pub zero_term_matches: bool,
    pub split: SpectralSplit,
    /// |split.total − rhs| / rhs.
    pub fourier_route_relative_error: f64,
    pub fourier_route_agrees: bool,
    /// q⁴|E||F|, the bound on the m' ≠ 0 ≠ m'' piece.
    pub nonzero_bound: f64,
    pub nonzero_within_bound: bool,
    /// Largest correlation transform deviation over all rotation pairs and both sets.
    pub max_fourier_deviation: f64,
    pub fourier_identity_ok: bool,
    pub pass: bool,
}

/// Relative tolerance between the exact rhs and its spectral evaluation.
pub const FOURIER_ROUTE_TOLERANCE: f64 = 1e-6;

fn three_mod_four_two_two(e: &SplitPointSet, f: &SplitPointSet) -> Result<()> {
    require_same(e, f)?;
    e.field().require_three_mod_four()?;
    require_two_two(e)
}

/// Computes both sides of Σ s² ≤ Σ_{θ,φ,U} r^E·r^F exactly, plus the
/// spectral evaluation of the right side and its three-way split.
pub fn energy_chain_check(e: &SplitPointSet, f: &SplitPointSet) -> Result<EnergyReport> {
    three_mod_four_two_two(e, f)?;
    square_guard(e)?;
    square_guard(f)?;
    let fld = e.field();
    let q = fld.q();
    let plane = Plane::new(fld)?;
    let rotations = fld.enumerate_so2();
    let maps: Vec<Vec<u32>> = rotations.iter().map(|r| plane.rotation_map(fld, r)).collect();
    let inverse_maps: Vec<Vec<u32>> = rotations
        .iter()
        .map(|r| plane.rotation_map(fld, &r.inverse(fld)))
        .collect();
    let e_pts = split_members(e);
    let f_pts = split_members(f);
    let e_hat = e.spectrum();
    let f_hat = f.spectrum();

    let n = rotations.len();
    let per_pair: Vec<(u128, u64, u64, f64)> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (t, p) = (idx / n, idx % n);
            let re = correlation_counts(&plane, &e_pts, &maps[t], &maps[p]);
            let rf = correlation_counts(&plane, &f_pts, &maps[t], &maps[p]);
            let dot: u128 = re.iter().zip(&rf).map(|(&a, &b)| a as u128 * b as u128).sum();
            let mass_e = re.iter().map(|&c| c as u64).sum();
            let mass_f = rf.iter().map(|&c| c as u64).sum();
            let dev_e = fourier_deviation(fld, &plane, &re, &e_hat, &inverse_maps[t], &inverse_maps[p]);
            let dev_f = fourier_deviation(fld, &plane, &rf, &f_hat, &inverse_maps[t], &inverse_maps[p]);
            (dot, mass_e, mass_f, dev_e.max(dev_f))
        })
        .collect();

    let rhs: u128 = per_pair.iter().map(|p| p.0).sum();
    let (es, fs) = (e.len() as u64, f.len() as u64);
    let masses_ok = per_pair.iter().all(|p| p.1 == es * es && p.2 == fs * fs);
    let max_fourier_deviation = per_pair.iter().map(|p| p.3).fold(0.0, f64::max);
    let q4 = int_pow(q, 4);
    let zero_term_exact = per_pair
        .iter()
        .fold(Rational::from_integer(0), |acc, p| acc + Rational::new(p.1 as i128 * p.2 as i128, q4));
    let so2 = n as i128;
    let zero_term_formula = Rational::new((es as i128).pow(2) * (fs as i128).pow(2) * so2 * so2, q4);

    let spec = pair_spectrum_fast(e, f)?;
    let lhs = sum_s_squared(&spec);
    let predicted_gap = overcount(&spec, n as u128);
    let gap = rhs.saturating_sub(lhs);

    let split = spectral_split(fld, &plane, &e_hat, &f_hat, &inverse_maps);
    let fourier_route_relative_error = if rhs == 0 {
        split.total().abs()
    } else {
        (split.total() - rhs as f64).abs() / rhs as f64
    };
    let nonzero_bound = (q as f64).powi(4) * es as f64 * fs as f64;

    let mut report = EnergyReport {
        q,
        e_size: e.len(),
        f_size: f.len(),
        rotations: n,
        lhs,
        rhs,
        chain_holds: lhs <= rhs,
        gap,
        predicted_gap,
        gap_explained: lhs <= rhs && gap == predicted_gap,
        masses_ok,
        zero_term_matches: zero_term_exact == zero_term_formula
            && (split.zero - rational::to_f64(&zero_term_formula)).abs()
                <= 1e-9 * rational::to_f64(&zero_term_formula).max(1.0),
        zero_term_exact,
        zero_term_formula,
        split,
        fourier_route_relative_error,
        fourier_route_agrees: fourier_route_relative_error <= FOURIER_ROUTE_TOLERANCE,
        nonzero_bound,
        nonzero_within_bound: split.nonzero <= nonzero_bound * (1.0 + 1e-9),
        max_fourier_deviation,
        fourier_identity_ok: max_fourier_deviation < FOURIER_IDENTITY_TOLERANCE,
        pass: false,
    };
    report.pass = report.chain_holds
        && report.gap_explained
        && report.masses_ok
        && report.zero_term_matches
        && report.fourier_route_agrees
        && report.nonzero_within_bound
        && report.fourier_identity_ok;
    Ok(report)
}

fn overcount(spec: &PairSpectrum, so2: u128) -> u128 {
    let q = spec.q;
    let weight = |t: u64| if t == 0 { so2 } else { 1 };
    let mut total = 0u128;
    for a in 0..q {
        for b in 0..q {
            let s = spec.get(a, b) as u128;
            total += s * s * (weight(a) * weight(b) - 1);
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircleEnergy {
    pub q: u64,
    pub a: u64,
    pub circle_size: usize,
    /// #{(u, v, u', v') ∈ S_a⁴ : u + v = u' + v'}.
    pub energy: u64,
    /// 3|S_a|².
    pub bound: u64,
    pub pass: bool,
}

impl CircleEnergy {
    pub const CSV_HEADER: &'static str = "q,a,circle_size,energy,bound";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{}", self.q, self.a, self.circle_size, self.energy, self.bound)
    }
}

/// Additive energy of the circle S_a by brute force over all quadruples.
pub fn circle_energy(fld: &PrimeField, a: u64) -> Result<CircleEnergy> {
    fld.require_three_mod_four()?;
    let a = fld.reduce(a);
    if a == 0 {
        return Err(Error::InvalidArgument("circle of radius 0 is degenerate".into()));
    }
    let q = fld.q();
    let circle: Vec<[u64; 2]> = (0..q)
        .flat_map(|x| (0..q).map(move |y| [x, y]))
        .filter(|&v| fld.norm2(v) == a)
        .collect();
    let sum = |u: &[u64; 2], v: &[u64; 2]| [fld.add(u[0], v[0]), fld.add(u[1], v[1])];
    let mut energy = 0u64;
    for u in &circle {
        for v in &circle {
            let target = sum(u, v);
            for u2 in &circle {
                for v2 in &circle {
                    if sum(u2, v2) == target {
                        energy += 1;
                    }
                }
            }
        }
    }
    let n = circle.len() as u64;
    Ok(CircleEnergy {
        q,
        a,
        circle_size: circle.len(),
        energy,
        bound: 3 * n * n,
        pass: energy <= 3 * n * n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphereMass {
    pub a: u64,
    /// Σ_{‖m‖ = a} |Ê(m, 0)|².
    pub value: f64,
    /// √3·q⁻⁶·|E|^{3/2}.
    pub bound: f64,
    pub pass: bool,
}

/// Mass of Ê on the circle ‖m'‖ = a of the slice m'' = 0.
pub fn sphere_restricted_mass(e: &SplitPointSet, a: u64) -> Result<SphereMass> {
    let fld = e.field();
    fld.require_three_mod_four()?;
    require_two_two(e)?;
    let a = fld.reduce(a);
    if a == 0 {
        return Err(Error::InvalidArgument("radius must be nonzero".into()));
    }
    let spec = e.spectrum();
    Ok(sphere_mass_from_spectrum(e, &spec, a, &norm_table(fld, 2)?))
}

fn sphere_mass_from_spectrum(e: &SplitPointSet, spec: &SpectralTable, a: u64, plane_norms: &[u32]) -> SphereMass {
    let q = e.field().q() as f64;
    let stride = e.suffix_size();
    let value: f64 = plane_norms
        .iter()
        .enumerate()
        .filter(|(_, &n)| n as u64 == a)
        .map(|(mp, _)| spec.coeffs[mp * stride].norm_sqr())
        .sum();
    let bound = 3f64.sqrt() * q.powi(-6) * (e.len() as f64).powf(1.5);
    SphereMass {
        a,
        value,
        bound,
        pass: value <= bound * (1.0 + 1e-9),
    }
}

/// The lemma for every nonzero radius at once.
pub fn sphere_restricted_mass_all(e: &SplitPointSet) -> Result<Vec<SphereMass>> {
    let fld = e.field();
    fld.require_three_mod_four()?;
    require_two_two(e)?;
    let spec = e.spectrum();
    let norms = norm_table(fld, 2)?;
    Ok((1..fld.q())
        .map(|a| sphere_mass_from_spectrum(e, &spec, a, &norms))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem2Report {
    pub q: u64,
    pub constant_c: f64,
    /// |E||F| / (3q⁴).
    pub branch_plancherel: f64,
    /// (|E||F|)^{3/4} / (3Cq³).
    pub branch_mixed: f64,
    /// q⁴ / (3|SO₂|²).
    pub branch_zero: f64,
    pub min_bound: f64,
    pub observed_b: usize,
    /// |E|²|F|² / Σ s², exact.
    #[serde(serialize_with = "rational::serialize")]
    pub cs_bound: Rational,
    /// The spectral mixed term of the energy.
    pub mixed_term: f64,
    /// mixed_term / (q³(|E||F|)^{5/4}): the least C for which the mixed
    /// branch covers this instance.
    pub empirical_c: f64,
    /// C ≥ empirical_c, so the chain of estimates applies with this C.
    pub chain_applies: bool,
    /// chain_applies ⇒ min_bound ≤ observed_b.
    pub holds: bool,
}

/// Evaluates the three-branch lower bound on |B_{2,2}(E,F)| for the given C
/// and measures the C this instance actually needs.
pub fn theorem2_bound(e: &SplitPointSet, f: &SplitPointSet, constant_c: f64) -> Result<Theorem2Report> {
    three_mod_four_two_two(e, f)?;
    if constant_c.is_nan() || constant_c <= 0.0 {
        return Err(Error::InvalidArgument(format!("C must be positive, got {constant_c}")));
    }
    if e.is_empty() || f.is_empty() {
        return Err(Error::EmptySet);
    }
    let fld = e.field();
    let q = fld.q() as f64;
    let plane = Plane::new(fld)?;
    let rotations = fld.enumerate_so2();
    let inverse_maps: Vec<Vec<u32>> = rotations
        .iter()
        .map(|r| plane.rotation_map(fld, &r.inverse(fld)))
        .collect();
    let split = spectral_split(fld, &plane, &e.spectrum(), &f.spectrum(), &inverse_maps);
    let spec = pair_spectrum_fast(e, f)?;
    let observed_b = b_set(&spec).len();
    let ef = e.len() as f64 * f.len() as f64;
    let efi = e.len() as i128 * f.len() as i128;
    let cs_bound = Rational::new(efi * efi, sum_s_squared(&spec) as i128);

    let so2 = rotations.len() as f64;
    let branch_plancherel = ef / (3.0 * q.powi(4));
    let branch_mixed = ef.powf(0.75) / (3.0 * constant_c * q.powi(3));
    let branch_zero = q.powi(4) / (3.0 * so2 * so2);
    let min_bound = branch_plancherel.min(branch_mixed).min(branch_zero);
    let mixed_term = split.mixed.max(0.0);
    let empirical_c = mixed_term / (q.powi(3) * ef.powf(1.25));
    let chain_applies = constant_c >= empirical_c;
    Ok(Theorem2Report {
        q: fld.q(),
        constant_c,
        branch_plancherel,
        branch_mixed,
        branch_zero,
        min_bound,
        observed_b,
        cs_bound,
        mixed_term,
        empirical_c,
        chain_applies,
        holds: !chain_applies || min_bound <= observed_b as f64 * (1.0 + 1e-12),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StripReport {
    pub p: u64,
    pub strip_len: u64,
    pub e_size: usize,
    pub strip_distances: Vec<u64>,
    pub b_size: usize,
    /// B_{2,2}(E,E) = F_p × Δ(L).
    pub holds: bool,
}

/// E = F_p² × L with L = {(a, 0) : 0 ≤ a < strip_len}.
pub fn strip_set(fld: &PrimeField, strip_len: u64) -> Result<SplitPointSet> {
    let p = fld.q();
    if strip_len == 0 || strip_len > p {
        return Err(Error::InvalidArgument(format!(
            "strip length must lie in 1..={p}, got {strip_len}"
        )));
    }
    let members = (0..(p * p) as usize)
        .flat_map(|prefix| (0..strip_len).map(move |a| prefix * (p * p) as usize + (a * p) as usize))
        .collect();
    SplitPointSet::from_members(fld, 2, 2, members)
}

pub fn remark_sharpness_scan(p: u64, strip_len: u64) -> Result<StripReport> {
    let fld = PrimeField::new(p)?;
    fld.require_three_mod_four()?;
    let e = strip_set(&fld, strip_len)?;
    let b = b_set(&pair_spectrum_fast(&e, &e)?);
    let strip: Vec<Vec<u64>> = (0..strip_len).map(|a| vec![a, 0]).collect();
    let strip_distances = distance_set(&fld, &strip)?;
    let expected: std::collections::BTreeSet<(u64, u64)> = (0..p)
        .flat_map(|a| strip_distances.iter().map(move |&b| (a, b)))
        .collect();
    Ok(StripReport {
        p,
        strip_len,
        e_size: e.len(),
        strip_distances: strip_distances.into_iter().collect(),
        b_size: b.len(),
        holds: b == expected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairs::pair_spectrum_naive;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn field(q: u64) -> PrimeField {
        PrimeField::new(q).unwrap()
    }

    fn random_sized(fld: &PrimeField, n: usize, rng: &mut ChaCha8Rng) -> SplitPointSet {
        let size = (fld.q() as usize).pow(4);
        let members = rand::seq::index::sample(rng, size, n).into_vec();
        SplitPointSet::from_members(fld, 2, 2, members).unwrap()
    }

    fn point(fld: &PrimeField, p: Vec<u64>) -> SplitPointSet {
        SplitPointSet::new(fld, 2, 2, vec![p]).unwrap()
    }

    /// r_{θ,φ} straight from the definition, coordinates and all.
    fn correlation_by_definition(e: &SplitPointSet, theta: Rotation, phi: Rotation) -> Vec<u32> {
        let fld = e.field();
        let q = fld.q();
        let codec = PointCodec::new(q, 4).unwrap();
        let mut out = vec![0u32; codec.size()];
        for x in e.points() {
            for z in e.points() {
                let tz = theta.apply(fld, [z[0], z[1]]);
                let pz = phi.apply(fld, [z[2], z[3]]);
                let u = [fld.sub(x[0], tz[0]), fld.sub(x[1], tz[1]), fld.sub(x[2], pz[0]), fld.sub(x[3], pz[1])];
                out[codec.encode(&u)] += 1;
            }
        }
        out
    }

    #[test]
    fn correlation_single_point_identity() {
        let f7 = field(7);
        let e = point(&f7, vec![1, 2, 3, 4]);
        let r = rotation_correlation(&e, Rotation::IDENTITY, Rotation::IDENTITY).unwrap();
        assert_eq!(r.counts[0], 1);
        assert_eq!(r.mass(), 1);
    }

    #[test]
    fn correlation_matches_definition_and_mass() {
        let f7 = field(7);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let e = random_sized(&f7, 50, &mut rng);
        let rots = f7.enumerate_so2();
        let id = rotation_correlation(&e, Rotation::IDENTITY, Rotation::IDENTITY).unwrap();
        assert!(id.counts[0] as usize >= e.len());
        for _ in 0..6 {
            let theta = rots[rng.gen_range(0..rots.len())];
            let phi = rots[rng.gen_range(0..rots.len())];
            let r = rotation_correlation(&e, theta, phi).unwrap();
            assert_eq!(r.mass(), 2500);
            assert_eq!(r.counts, correlation_by_definition(&e, theta, phi));
        }
    }

    #[test]
    fn fourier_identity_single_point() {
        let f3 = field(3);
        let e = point(&f3, vec![0, 0, 0, 0]);
        for theta in f3.enumerate_so2() {
            let check = correlation_fourier_check(&e, theta, Rotation::IDENTITY).unwrap();
            assert!(check.pass);
        }
    }

    #[test]
    fn fourier_identity_q3_all_pairs() {
        let f3 = field(3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let e = random_sized(&f3, 30, &mut rng);
        for theta in f3.enumerate_so2() {
            for phi in f3.enumerate_so2() {
                let check = correlation_fourier_check(&e, theta, phi).unwrap();
                assert!(check.pass, "{theta:?} {phi:?}: {}", check.max_deviation);
            }
        }
    }

    #[test]
    fn fourier_identity_needs_the_transpose() {
        // With θ applied untransposed the identity breaks for a generic set.
        let f7 = field(7);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let e = random_sized(&f7, 40, &mut rng);
        let theta = Rotation::new(&f7, 0, 1).unwrap();
        let table = rotation_correlation(&e, theta, Rotation::IDENTITY).unwrap();
        let plane = Plane::new(&f7).unwrap();
        let e_hat = e.spectrum();
        let id = plane.rotation_map(&f7, &Rotation::IDENTITY);
        let untransposed = fourier_deviation(&f7, &plane, &table.counts, &e_hat, &plane.rotation_map(&f7, &theta), &id);
        let transposed =
            fourier_deviation(&f7, &plane, &table.counts, &e_hat, &plane.rotation_map(&f7, &theta.inverse(&f7)), &id);
        assert!(transposed < 1e-8);
        assert!(untransposed > 1e-3);
    }

    #[test]
    fn energy_chain_single_points() {
        for q in [3u64, 7, 11] {
            let fld = field(q);
            let e = point(&fld, vec![1, 0, 2, 1]);
            let f = point(&fld, vec![0, 2, 2, 2]);
            // both differences nonzero: exactly one rotation pair matches
            let report = energy_chain_check(&e, &f).unwrap();
            assert_eq!((report.lhs, report.rhs), (1, 1));
            assert!(report.pass, "{report:?}");
            // E = F: both differences vanish and every rotation pair matches
            let report = energy_chain_check(&e, &e).unwrap();
            assert_eq!(report.lhs, 1);
            assert_eq!(report.rhs, ((q + 1) * (q + 1)) as u128);
            assert!(report.pass, "{report:?}");
        }
    }

    #[test]
    fn energy_chain_gate() {
        let f5 = field(5);
        let e = point(&f5, vec![0, 0, 0, 0]);
        assert_eq!(energy_chain_check(&e, &e).unwrap_err(), Error::RequiresThreeModFour(5));
        let f7 = field(7);
        let e3 = SplitPointSet::new(&f7, 2, 3, vec![vec![0; 5]]).unwrap();
        assert!(matches!(energy_chain_check(&e3, &e3), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn energy_chain_random_q7() {
        let f7 = field(7);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..3 {
            let e = random_sized(&f7, 40, &mut rng);
            let f = random_sized(&f7, 40, &mut rng);
            let report = energy_chain_check(&e, &f).unwrap();
            assert!(report.pass, "{report:?}");
        }
    }

    /// Classifies every octuple (x, y, z, w) ∈ E×F×E×F by how many rotation
    /// pairs match it.
    fn octuple_weights(e: &SplitPointSet, f: &SplitPointSet) -> (u128, u128) {
        let fld = e.field();
        let rots = fld.enumerate_so2();
        let xs: Vec<Vec<u64>> = e.points().collect();
        let ys: Vec<Vec<u64>> = f.points().collect();
        let diff = |a: &[u64], b: &[u64]| [fld.sub(a[0], b[0]), fld.sub(a[1], b[1])];
        let (mut lhs, mut rhs) = (0u128, 0u128);
        for x in &xs {
            for y in &ys {
                for z in &xs {
                    for w in &ys {
                        let (d1, d2) = (diff(&x[..2], &y[..2]), diff(&z[..2], &w[..2]));
                        let (d3, d4) = (diff(&x[2..], &y[2..]), diff(&z[2..], &w[2..]));
                        if fld.norm2(d1) == fld.norm2(d2) && fld.norm2(d3) == fld.norm2(d4) {
                            lhs += 1;
                        }
                        let thetas = rots.iter().filter(|r| r.apply(fld, d2) == d1).count() as u128;
                        let phis = rots.iter().filter(|r| r.apply(fld, d4) == d3).count() as u128;
                        rhs += thetas * phis;
                    }
                }
            }
        }
        (lhs, rhs)
    }

    #[test]
    fn energy_gap_is_the_zero_difference_overcount() {
        let f3 = field(3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..8 {
            let e = random_sized(&f3, rng.gen_range(1..=10), &mut rng);
            let f = random_sized(&f3, rng.gen_range(1..=10), &mut rng);
            let report = energy_chain_check(&e, &f).unwrap();
            let (lhs, rhs) = octuple_weights(&e, &f);
            assert_eq!(report.lhs, lhs);
            assert_eq!(report.rhs, rhs);
            assert_eq!(report.gap, report.predicted_gap);
        }
    }

    #[test]
    fn circle_energy_examples() {
        let report = circle_energy(&field(3), 1).unwrap();
        assert_eq!(report.circle_size, 4);
        assert_eq!(report.energy, 36);
        assert_eq!(report.bound, 48);
        assert!(report.pass);
        assert_eq!(report.csv_row(), "3,1,4,36,48");
        let q7 = circle_energy(&field(7), 1).unwrap();
        assert!(q7.energy <= 192 && q7.pass);
        for a in 1..11 {
            assert!(circle_energy(&field(11), a).unwrap().pass);
        }
        assert!(circle_energy(&field(7), 0).is_err());
        assert!(circle_energy(&field(5), 1).is_err());
    }

    #[test]
    fn sphere_mass_examples() {
        let f3 = field(3);
        let one = point(&f3, vec![1, 1, 0, 2]);
        let m = sphere_restricted_mass(&one, 1).unwrap();
        assert!((m.value - 4.0 * 3f64.powi(-8)).abs() < 1e-15);
        assert!((m.bound - 3f64.sqrt() * 3f64.powi(-6)).abs() < 1e-15);
        assert!(m.pass);

        let empty = SplitPointSet::from_members(&f3, 2, 2, vec![]).unwrap();
        let m = sphere_restricted_mass(&empty, 2).unwrap();
        assert_eq!((m.value, m.bound), (0.0, 0.0));
        assert!(m.pass);

        let f7 = field(7);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let e = random_sized(&f7, rng.gen_range(1..2000), &mut rng);
            assert!(sphere_restricted_mass_all(&e).unwrap().iter().all(|m| m.pass));
        }
        assert!(sphere_restricted_mass(&one, 0).is_err());
    }

    #[test]
    fn theorem2_full_space() {
        let f7 = field(7);
        let full = SplitPointSet::full(&f7, 2, 2).unwrap();
        let report = theorem2_bound(&full, &full, 1.0).unwrap();
        assert_eq!(report.observed_b, 49);
        assert!(report.holds);
        assert!(report.cs_bound <= Rational::from_integer(49));
    }

    #[test]
    fn theorem2_dense_random() {
        let f7 = field(7);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let e = random_sized(&f7, 1500, &mut rng);
        let f = random_sized(&f7, 1800, &mut rng);
        let report = theorem2_bound(&e, &f, 10.0).unwrap();
        assert!(report.min_bound <= report.observed_b as f64);
        assert!(report.chain_applies && report.holds);
        assert!(theorem2_bound(&e, &f, 0.0).is_err());
    }

    #[test]
    fn strip_examples() {
        let r = remark_sharpness_scan(7, 1).unwrap();
        assert_eq!((r.b_size, r.e_size), (7, 49));
        assert!(r.holds);
        let r = remark_sharpness_scan(7, 3).unwrap();
        assert_eq!(r.strip_distances, vec![0, 1, 4]);
        assert_eq!(r.b_size, 21);
        let r = remark_sharpness_scan(11, 4).unwrap();
        assert_eq!(r.strip_distances, vec![0, 1, 4, 9]);
        assert_eq!(r.b_size, 44);
        assert!(r.holds);
        assert!(remark_sharpness_scan(7, 0).is_err());
        assert!(remark_sharpness_scan(5, 2).is_err());
    }

    #[test]
    fn strip_set_spectrum_agrees_with_naive() {
        let f3 = field(3);
        let e = strip_set(&f3, 2).unwrap();
        assert_eq!(pair_spectrum_fast(&e, &e).unwrap(), pair_spectrum_naive(&e, &e).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn chain_holds_q3(seed in any::<u64>(), ne in 1usize..40, nf in 1usize..40) {
            let f3 = field(3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e = random_sized(&f3, ne, &mut rng);
            let f = random_sized(&f3, nf, &mut rng);
            let report = energy_chain_check(&e, &f).unwrap();
            prop_assert!(report.pass);
        }
    }
}
