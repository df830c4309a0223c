//! Discrete Fourier analysis on F_q^d.
//!
//! Normalization: f̂(m) = q^{−d} Σ_x χ(−x·m) f(x), and the inverse carries no
//! factor, f(x) = Σ_m χ(x·m) f̂(m).
//!
//! Transforms run one axis at a time (d passes of direct q-point sums), which
//! costs O(d·q^{d+1}). [`forward_transform_direct`] evaluates the defining
//! sum and exists to cross-check the separable path on small inputs.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::geometry::{checked_space, norm_table, PointCodec};

/// A function F_q^d → ℂ stored densely by encoded point.
#[derive(Debug, Clone)]
pub struct DensityTable {
    pub field: PrimeField,
    pub d: usize,
    pub values: Vec<Complex64>,
}

/// Fourier coefficients f̂(m) by encoded frequency.
#[derive(Debug, Clone)]
pub struct SpectralTable {
    pub field: PrimeField,
    pub d: usize,
    pub coeffs: Vec<Complex64>,
}

impl DensityTable {
    pub fn zeros(fld: &PrimeField, d: usize) -> Result<Self> {
        let size = checked_space(fld.q(), d, "density table")?;
        Ok(Self {
            field: fld.clone(),
            d,
            values: vec![Complex64::new(0.0, 0.0); size],
        })
    }

    pub fn from_values(fld: &PrimeField, d: usize, values: Vec<Complex64>) -> Result<Self> {
        let size = checked_space(fld.q(), d, "density table")?;
        if values.len() != size {
            return Err(Error::Dimension(format!(
                "table has {} entries, F_{}^{} has {size}",
                values.len(),
                fld.q(),
                d
            )));
        }
        Ok(Self {
            field: fld.clone(),
            d,
            values,
        })
    }

    /// Indicator of a set of encoded points.
    pub fn indicator(fld: &PrimeField, d: usize, members: &[usize]) -> Result<Self> {
        let mut table = Self::zeros(fld, d)?;
        for &m in members {
            table.values[m] = Complex64::new(1.0, 0.0);
        }
        Ok(table)
    }

    pub fn codec(&self) -> PointCodec {
        PointCodec::new(self.field.q(), self.d).expect("table size already checked")
    }
}

impl SpectralTable {
    pub fn codec(&self) -> PointCodec {
        PointCodec::new(self.field.q(), self.d).expect("table size already checked")
    }

    /// f̂(m) for a frequency in coordinate form.
    pub fn at(&self, m: &[u64]) -> Complex64 {
        self.coeffs[self.codec().encode(m)]
    }
}

/// Applies the unnormalized q-point transform with kernel `twiddles[x·k mod q]`
/// along every axis, in place.
pub(crate) fn transform_axes(q: usize, d: usize, data: &mut [Complex64], twiddles: &[Complex64]) {
    debug_assert_eq!(data.len(), q.pow(d as u32));
    for axis in 0..d {
        let stride = q.pow((d - 1 - axis) as u32);
        let block = q * stride;
        data.par_chunks_mut(block).for_each_init(
            || (vec![Complex64::default(); q], vec![Complex64::default(); q]),
            |(line, out), chunk| {
                for inner in 0..stride {
                    for (x, slot) in line.iter_mut().enumerate() {
                        *slot = chunk[inner + x * stride];
                    }
                    for (k, o) in out.iter_mut().enumerate() {
                        let mut acc = Complex64::default();
                        let mut phase = 0usize;
                        for &v in line.iter() {
                            acc += v * twiddles[phase];
                            phase += k;
                            if phase >= q {
                                phase -= q;
                            }
                        }
                        *o = acc;
                    }
                    for (x, &v) in out.iter().enumerate() {
                        chunk[inner + x * stride] = v;
                    }
                }
            },
        );
    }
}

fn conj_table(fld: &PrimeField) -> Vec<Complex64> {
    fld.char_table().iter().map(|c| c.conj()).collect()
}

/// f ↦ f̂ via the separable transform.
pub fn forward_transform(f: &DensityTable) -> SpectralTable {
    let q = f.field.q() as usize;
    let mut coeffs = f.values.clone();
    transform_axes(q, f.d, &mut coeffs, &conj_table(&f.field));
    let scale = (q as f64).powi(-(f.d as i32));
    coeffs.iter_mut().for_each(|c| *c *= scale);
    SpectralTable {
        field: f.field.clone(),
        d: f.d,
        coeffs,
    }
}

/// Evaluates the defining sum for every m. O(q^{2d}); small inputs only.
pub fn forward_transform_direct(f: &DensityTable) -> SpectralTable {
    let fld = &f.field;
    let codec = f.codec();
    let scale = (fld.q() as f64).powi(-(f.d as i32));
    let points: Vec<Vec<u64>> = (0..codec.size()).map(|i| codec.decode(i)).collect();
    let coeffs = points
        .iter()
        .map(|m| {
            let sum: Complex64 = points
                .iter()
                .zip(&f.values)
                .map(|(x, &v)| {
                    let dot = x.iter().zip(m).fold(0, |acc, (&a, &b)| fld.add(acc, fld.mul(a, b)));
                    fld.chi(fld.neg(dot)) * v
                })
                .sum();
            sum * scale
        })
        .collect();
    SpectralTable {
        field: fld.clone(),
        d: f.d,
        coeffs,
    }
}

/// f̂ ↦ f.
pub fn inverse_transform(spec: &SpectralTable) -> DensityTable {
    let q = spec.field.q() as usize;
    let mut values = spec.coeffs.clone();
    transform_axes(q, spec.d, &mut values, spec.field.char_table());
    DensityTable {
        field: spec.field.clone(),
        d: spec.d,
        values,
    }
}

/// Fourier transform of the indicator of a set of encoded points.
pub fn indicator_spectrum(fld: &PrimeField, d: usize, members: &[usize]) -> Result<SpectralTable> {
    Ok(forward_transform(&DensityTable::indicator(fld, d, members)?))
}

/// |Σ_m |f̂(m)|² − q^{−d} Σ_x |f(x)|²|.
///
/// When f is a 0/1 indicator the right side is the exact q^{−d}·|support|.
pub fn plancherel_gap(f: &DensityTable) -> f64 {
    let spec = forward_transform(f);
    let lhs: f64 = spec.coeffs.iter().map(|c| c.norm_sqr()).sum();
    let scale = (f.field.q() as f64).powi(-(f.d as i32));
    let is_indicator = f
        .values
        .iter()
        .all(|v| v.im == 0.0 && (v.re == 0.0 || v.re == 1.0));
    let rhs = if is_indicator {
        f.values.iter().filter(|v| v.re == 1.0).count() as f64 * scale
    } else {
        f.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * scale
    };
    (lhs - rhs).abs()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrthogonalityReport {
    pub q: u64,
    pub d: usize,
    /// Σ_x χ(x·0), expected q^d.
    pub zero_frequency_sum: f64,
    /// max over m ≠ 0 of |Σ_x χ(x·m)|.
    pub max_nonzero_modulus: f64,
    pub pass: bool,
}

/// Checks Σ_x χ(x·m) = q^d·[m = 0] for every frequency of F_q^d.
pub fn orthogonality_check(fld: &PrimeField, d: usize) -> Result<OrthogonalityReport> {
    let size = checked_space(fld.q(), d, "orthogonality check")?;
    let mut sums = vec![Complex64::new(1.0, 0.0); size];
    transform_axes(fld.q() as usize, d, &mut sums, fld.char_table());
    let total = size as f64;
    let zero = sums[0];
    let max_nonzero_modulus = sums[1..].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let pass = (zero.re - total).abs() < 1e-8 * total
        && zero.im.abs() < 1e-8 * total
        && max_nonzero_modulus < 1e-8 * total;
    Ok(OrthogonalityReport {
        q: fld.q(),
        d,
        zero_frequency_sum: zero.re,
        max_nonzero_modulus,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KloostermanReport {
    pub q: u64,
    pub d: usize,
    /// 2·q^{−(d+1)/2}.
    pub bound: f64,
    /// max over t ≠ 0, m ≠ 0 of |Ŝ_t(m)| / bound.
    pub max_ratio: f64,
    pub argmax_t: u64,
    pub argmax_m: Vec<u64>,
    pub pass: bool,
}

/// Scans |Ŝ_t^{d−1}(m)| against 2q^{−(d+1)/2} over all t ≠ 0 and m ≠ 0.
pub fn verify_kloosterman(fld: &PrimeField, d: usize) -> Result<KloostermanReport> {
    if d == 0 {
        return Err(Error::Dimension("dimension must be at least 1".into()));
    }
    let q = fld.q();
    let norms = norm_table(fld, d)?;
    let codec = PointCodec::new(q, d)?;
    let bound = 2.0 * (q as f64).powf(-((d + 1) as f64) / 2.0);
    let per_t: Vec<(f64, u64, usize)> = (1..q)
        .map(|t| {
            let members: Vec<usize> = norms
                .iter()
                .enumerate()
                .filter(|(_, &n)| n as u64 == t)
                .map(|(i, _)| i)
                .collect();
            let spec = indicator_spectrum(fld, d, &members).expect("size checked");
            let (idx, modulus) = spec.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(i, c)| (i + 1, c.norm()))
                .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
            (modulus / bound, t, idx)
        })
        .collect();
    let (max_ratio, argmax_t, argmax_idx) = per_t
        .into_iter()
        .fold((f64::NEG_INFINITY, 0, 0), |best, cur| if cur.0 > best.0 { cur } else { best });
    let (max_ratio, argmax_m) = if argmax_t == 0 {
        (0.0, Vec::new())
    } else {
        (max_ratio, codec.decode(argmax_idx))
    };
    Ok(KloostermanReport {
        q,
        d,
        bound,
        max_ratio,
        argmax_t,
        argmax_m,
        pass: max_ratio <= 1.0 + 1e-9,
    })
}

/// Exact integer representation of q^d·Ê(m) for an indicator: the number of
/// support points at each phase −x·m.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExactPhaseHistogram {
    pub m: Vec<u64>,
    pub counts: Vec<u64>,
}

impl ExactPhaseHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// q^{−d} Σ_j counts[j]·χ(j).
    pub fn evaluate(&self, fld: &PrimeField) -> Complex64 {
        let sum: Complex64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(j, &c)| fld.chi(j as u64) * c as f64)
            .sum();
        sum * (fld.q() as f64).powi(-(self.m.len() as i32))
    }
}

pub fn exact_phase_histogram<'a, I>(fld: &PrimeField, points: I, m: &[u64]) -> Result<ExactPhaseHistogram>
where
    I: IntoIterator<Item = &'a [u64]>,
{
    let mut counts = vec![0u64; fld.q() as usize];
    for x in points {
        if x.len() != m.len() {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, frequency has {}",
                x.len(),
                m.len()
            )));
        }
        let dot = x
            .iter()
            .zip(m)
            .fold(0, |acc, (&a, &b)| fld.add(acc, fld.mul(fld.reduce(a), fld.reduce(b))));
        counts[fld.neg(dot) as usize] += 1;
    }
    Ok(ExactPhaseHistogram {
        m: m.to_vec(),
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn field(q: u64) -> PrimeField {
        PrimeField::new(q).unwrap()
    }

    struct SphereSpec;

    impl SphereSpec {
        fn unit(fld: &PrimeField) -> SpectralTable {
            let codec = PointCodec::new(fld.q(), 2).unwrap();
            let members: Vec<usize> = crate::geometry::enumerate_sphere(fld, 2, 1)
                .unwrap()
                .points
                .iter()
                .map(|p| codec.encode(&p.0))
                .collect();
            indicator_spectrum(fld, 2, &members).unwrap()
        }
    }

    fn random_table(fld: &PrimeField, d: usize, seed: u64) -> DensityTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let size = fld.q().pow(d as u32) as usize;
        let values = (0..size)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        DensityTable::from_values(fld, d, values).unwrap()
    }

    fn max_dev(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn zero_function_has_zero_spectrum() {
        let f = DensityTable::zeros(&field(5), 2).unwrap();
        assert!(forward_transform(&f).coeffs.iter().all(|c| c.norm() == 0.0));
        assert!(inverse_transform(&forward_transform(&f)).values.iter().all(|c| c.norm() == 0.0));
        assert_eq!(plancherel_gap(&f), 0.0);
    }

    #[test]
    fn delta_at_origin_is_flat() {
        let f3 = field(3);
        let spec = indicator_spectrum(&f3, 2, &[0]).unwrap();
        assert!(spec.coeffs.iter().all(|c| (c - Complex64::new(1.0 / 9.0, 0.0)).norm() < 1e-15));
        let back = inverse_transform(&spec);
        assert!((back.values[0].re - 1.0).abs() < 1e-12);
        assert!(back.values[1..].iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn unit_circle_coefficient_q3() {
        let f3 = field(3);
        let codec = PointCodec::new(3, 2).unwrap();
        let members: Vec<usize> = [[0, 1], [0, 2], [1, 0], [2, 0]].iter().map(|p| codec.encode(p)).collect();
        let spec = indicator_spectrum(&f3, 2, &members).unwrap();
        let c = spec.at(&[1, 0]);
        assert!((c.re - 1.0 / 9.0).abs() < 1e-14 && c.im.abs() < 1e-14);
    }

    #[test]
    fn separable_matches_direct() {
        for (q, d, seed) in [(3u64, 2usize, 1u64), (5, 2, 2), (3, 3, 3), (7, 2, 4)] {
            let f = random_table(&field(q), d, seed);
            let fast = forward_transform(&f);
            let slow = forward_transform_direct(&f);
            assert!(max_dev(&fast.coeffs, &slow.coeffs) < 1e-12, "q={q} d={d}");
        }
    }

    #[test]
    fn round_trip_f7_cubed() {
        let f = random_table(&field(7), 3, 7);
        let back = inverse_transform(&forward_transform(&f));
        assert!(max_dev(&back.values, &f.values) < 1e-9);
    }

    #[test]
    fn plancherel_indicator_exact() {
        let f3 = field(3);
        let f = DensityTable::indicator(&f3, 2, &[0, 2, 4, 7]).unwrap();
        assert!(plancherel_gap(&f) < 1e-10);
    }

    #[test]
    fn plancherel_random_complex() {
        let f = random_table(&field(7), 2, 99);
        let energy: f64 = f.values.iter().map(|v| v.norm_sqr()).sum();
        assert!(plancherel_gap(&f) < 1e-9 * energy);
    }

    #[test]
    fn plancherel_random_indicators() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for q in [3u64, 7, 11] {
            let fld = field(q);
            for d in 2..=4 {
                let size = q.pow(d as u32) as usize;
                for _ in 0..100 {
                    let density: f64 = rng.gen_range(0.05..0.95);
                    let members: Vec<usize> = (0..size).filter(|_| rng.gen_bool(density)).collect();
                    let f = DensityTable::indicator(&fld, d, &members).unwrap();
                    let scale = members.len().max(1) as f64 / size as f64;
                    assert!(plancherel_gap(&f) < 1e-9 * scale, "q={q} d={d}");
                }
            }
        }
    }

    #[test]
    fn orthogonality_examples() {
        let f3 = field(3);
        let one_dim = orthogonality_check(&f3, 1).unwrap();
        assert!(one_dim.max_nonzero_modulus < 1e-12);
        let two_dim = orthogonality_check(&f3, 2).unwrap();
        assert!((two_dim.zero_frequency_sum - 9.0).abs() < 1e-12);
        assert!(orthogonality_check(&field(7), 2).unwrap().pass);
        assert!(orthogonality_check(&field(11), 3).unwrap().pass);
    }

    #[test]
    fn kloosterman_q3_ratio() {
        let f3 = field(3);
        let bound = 2.0 * 3f64.powf(-1.5);
        let circle = SphereSpec::unit(&f3);
        // Ŝ_1(1,0) = 1/9
        assert!((circle.at(&[1, 0]).norm() / bound - 0.2887).abs() < 1e-4);
        // The scan maximum is |Ŝ_1(1,1)| = |Ŝ_2(1,0)| = 2/9, found by brute force
        // over both radii and all eight nonzero frequencies.
        let report = verify_kloosterman(&f3, 2).unwrap();
        assert!((report.max_ratio - (2.0 / 9.0) / bound).abs() < 1e-12);
        assert!(report.pass);
    }

    #[test]
    fn kloosterman_certificates() {
        for q in [3u64, 5, 7, 11, 13, 17, 19] {
            for d in 1..=3 {
                let report = verify_kloosterman(&field(q), d).unwrap();
                assert!(report.pass, "q={q} d={d} ratio={}", report.max_ratio);
            }
        }
        for q in [3u64, 5, 7] {
            assert!(verify_kloosterman(&field(q), 4).unwrap().pass);
        }
    }

    #[test]
    fn phase_histogram_examples() {
        let f5 = field(5);
        let origin = [0u64, 0];
        let h = exact_phase_histogram(&f5, [&origin[..]], &[3, 4]).unwrap();
        assert_eq!(h.counts, vec![1, 0, 0, 0, 0]);

        let f3 = field(3);
        let circle: Vec<[u64; 2]> = vec![[0, 1], [0, 2], [1, 0], [2, 0]];
        let h = exact_phase_histogram(&f3, circle.iter().map(|p| &p[..]), &[1, 0]).unwrap();
        assert_eq!(h.counts, vec![2, 1, 1]);
        assert_eq!(h.total(), 4);
        assert!((h.evaluate(&f3) - Complex64::new(1.0 / 9.0, 0.0)).norm() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn phase_histogram_agrees_with_float_backend(
            q in prop::sample::select(vec![3u64, 5, 7, 11]),
            seed in any::<u64>(),
            density in 0.05f64..0.9,
        ) {
            let fld = field(q);
            let d = 3;
            let codec = PointCodec::new(q, d).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let members: Vec<usize> = (0..codec.size()).filter(|_| rng.gen_bool(density)).collect();
            let spec = indicator_spectrum(&fld, d, &members).unwrap();
            let m: Vec<u64> = (0..d).map(|_| rng.gen_range(0..q)).collect();
            let points: Vec<Vec<u64>> = members.iter().map(|&i| codec.decode(i)).collect();
            let h = exact_phase_histogram(&fld, points.iter().map(|p| p.as_slice()), &m).unwrap();
            prop_assert_eq!(h.total(), members.len() as u64);
            let dev = (h.evaluate(&fld) - spec.at(&m)).norm();
            prop_assert!(dev < 1e-10 * (members.len().max(1) as f64));
        }

        #[test]
        fn round_trip_is_identity(
            q in prop::sample::select(vec![2u64, 3, 5, 7]),
            d in 1usize..=3,
            seed in any::<u64>(),
        ) {
            let f = random_table(&field(q), d, seed);
            let back = inverse_transform(&forward_transform(&f));
            prop_assert!(max_dev(&back.values, &f.values) < 1e-9);
        }
    }
}
