//! Points of F_q^d, the quadratic norm ‖x‖ = Σ xᵢ², and its level sets.
//!
//! Dense tables index points by their base-q encoding with the first
//! coordinate most significant, so encoded order is lexicographic order.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::PrimeField;

/// Largest ambient space (q^d) that dense kernels will enumerate.
pub const SPACE_LIMIT: u128 = 100_000_000;

/// A point of F_q^d in coordinate form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Vector(pub Vec<u64>);

impl Vector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[u64] {
        &self.0
    }
}

impl From<Vec<u64>> for Vector {
    fn from(v: Vec<u64>) -> Self {
        Vector(v)
    }
}

/// Bijection between F_q^d and `[0, q^d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PointCodec {
    q: u64,
    d: usize,
    size: usize,
}

impl PointCodec {
    /// Fails when q^d is beyond [`SPACE_LIMIT`].
    pub fn new(q: u64, d: usize) -> Result<Self> {
        let size = checked_space(q, d, "ambient space")?;
        Ok(Self { q, d, size })
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// q^d.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn encode(&self, coords: &[u64]) -> usize {
        debug_assert_eq!(coords.len(), self.d);
        coords
            .iter()
            .fold(0usize, |acc, &c| acc * self.q as usize + c as usize)
    }

    pub fn decode_into(&self, mut idx: usize, out: &mut [u64]) {
        let q = self.q as usize;
        for slot in out.iter_mut().rev() {
            *slot = (idx % q) as u64;
            idx /= q;
        }
    }

    pub fn decode(&self, idx: usize) -> Vec<u64> {
        let mut out = vec![0; self.d];
        self.decode_into(idx, &mut out);
        out
    }
}

pub(crate) fn checked_space(q: u64, d: usize, what: &'static str) -> Result<usize> {
    let size = (q as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if size > SPACE_LIMIT {
        return Err(Error::SizeGuard {
            what,
            size,
            limit: SPACE_LIMIT,
            advice: "use a smaller field or dimension, or the fiber-count path",
        });
    }
    Ok(size as usize)
}

/// ‖v‖ = Σ vᵢ² mod q.
pub fn norm(fld: &PrimeField, v: &[u64]) -> u64 {
    v.iter()
        .fold(0, |acc, &x| fld.add(acc, fld.mul(x % fld.q(), x % fld.q())))
}

/// ‖x‖ for every encoded point of F_q^d.
///
/// One pass: the encoded prefix `idx / q` is the same point with a leading
/// zero shifted in, which has the same norm.
pub fn norm_table(fld: &PrimeField, d: usize) -> Result<Vec<u32>> {
    let size = checked_space(fld.q(), d, "norm table")?;
    let q = fld.q() as usize;
    let squares: Vec<u32> = (0..fld.q()).map(|x| fld.mul(x, x) as u32).collect();
    let mut out = vec![0u32; size];
    for idx in 1..size {
        let s = out[idx / q] + squares[idx % q];
        out[idx] = if s >= q as u32 { s - q as u32 } else { s };
    }
    Ok(out)
}

/// The level set S_t^{d−1} = {x : ‖x‖ = t}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sphere {
    #[serde(skip)]
    pub field: PrimeField,
    pub d: usize,
    pub t: u64,
    pub points: Vec<Vector>,
}

impl Sphere {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn enumerate_sphere(fld: &PrimeField, d: usize, t: u64) -> Result<Sphere> {
    if d == 0 {
        return Err(Error::Dimension("sphere dimension must be at least 1".into()));
    }
    let codec = PointCodec::new(fld.q(), d).map_err(|e| match e {
        Error::SizeGuard { size, limit, .. } => Error::SizeGuard {
            what: "sphere enumeration",
            size,
            limit,
            advice: "use norm_fiber_sizes for cardinalities",
        },
        other => other,
    })?;
    let t = fld.reduce(t);
    let norms = norm_table(fld, d)?;
    let points = norms
        .iter()
        .enumerate()
        .filter(|(_, &n)| n as u64 == t)
        .map(|(idx, _)| Vector(codec.decode(idx)))
        .collect();
    Ok(Sphere {
        field: fld.clone(),
        d,
        t,
        points,
    })
}

/// |S_t^{d−1}| for every t, indexed by t.
pub fn norm_fiber_sizes(fld: &PrimeField, d: usize) -> Result<Vec<u64>> {
    let norms = norm_table(fld, d)?;
    let mut counts = vec![0u64; fld.q() as usize];
    for n in norms {
        counts[n as usize] += 1;
    }
    Ok(counts)
}

/// Contents of a point-set file.
///
/// ```text
/// # comment
/// q=7 dims=4 split=2,2
/// 0,1,2,3
/// 6,6,0,0
/// ```
///
/// The `split=<k>,<l>` token is optional; when present `k + l` must equal
/// `dims`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointSetFile {
    pub q: u64,
    pub dims: usize,
    pub split: Option<(usize, usize)>,
    pub points: Vec<Vec<u64>>,
}

impl PointSetFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut header: Option<Header> = None;
        let mut points = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line_no = no + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((q, dims, _)) = header else {
                header = Some(parse_header(line, line_no)?);
                continue;
            };
            let coords = line
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<u64>().map_err(|_| Error::Parse {
                        line: line_no,
                        msg: format!("bad coordinate {:?}", tok.trim()),
                    })
                })
                .collect::<Result<Vec<u64>>>()?;
            if coords.len() != dims {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected {dims} coordinates, found {}", coords.len()),
                });
            }
            if let Some(c) = coords.iter().find(|&&c| c >= q) {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("coordinate {c} is not a residue mod {q}"),
                });
            }
            points.push(coords);
        }
        let (q, dims, split) = header.ok_or(Error::Parse {
            line: 0,
            msg: "missing header line `q=<q> dims=<d>`".into(),
        })?;
        Ok(Self {
            q,
            dims,
            split,
            points,
        })
    }

    pub fn render(&self) -> String {
        let mut out = format!("q={} dims={}", self.q, self.dims);
        if let Some((k, l)) = self.split {
            let _ = write!(out, " split={k},{l}");
        }
        out.push('\n');
        for p in &self.points {
            let line: Vec<String> = p.iter().map(u64::to_string).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// (q, dims, split)
type Header = (u64, usize, Option<(usize, usize)>);

fn parse_header(line: &str, line_no: usize) -> Result<Header> {
    let bad = |msg: String| Error::Parse { line: line_no, msg };
    let (mut q, mut dims, mut split) = (None, None, None);
    for tok in line.split_whitespace() {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| bad(format!("header token {tok:?} is not key=value")))?;
        match key {
            "q" => q = Some(value.parse::<u64>().map_err(|_| bad(format!("bad q {value:?}")))?),
            "dims" => {
                dims = Some(
                    value
                        .parse::<usize>()
                        .map_err(|_| bad(format!("bad dims {value:?}")))?,
                )
            }
            "split" => {
                let (k, l) = value
                    .split_once(',')
                    .ok_or_else(|| bad(format!("bad split {value:?}")))?;
                let k = k.parse::<usize>().map_err(|_| bad(format!("bad split {value:?}")))?;
                let l = l.parse::<usize>().map_err(|_| bad(format!("bad split {value:?}")))?;
                split = Some((k, l));
            }
            other => return Err(bad(format!("unknown header key {other:?}"))),
        }
    }
    let q = q.ok_or_else(|| bad("header lacks q=".into()))?;
    let dims = dims.ok_or_else(|| bad("header lacks dims=".into()))?;
    if let Some((k, l)) = split {
        if k + l != dims {
            return Err(bad(format!("split {k},{l} does not add up to dims={dims}")));
        }
    }
    Ok((q, dims, split))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::is_prime;

    fn field(q: u64) -> PrimeField {
        PrimeField::new(q).unwrap()
    }

    fn brute_sphere_size(q: u64, d: usize, t: u64) -> u64 {
        let total = q.pow(d as u32);
        (0..total)
            .filter(|&i| {
                let mut i = i;
                let mut s = 0;
                for _ in 0..d {
                    s += (i % q) * (i % q);
                    i /= q;
                }
                s % q == t
            })
            .count() as u64
    }

    #[test]
    fn norm_examples() {
        assert_eq!(norm(&field(3), &[0, 0]), 0);
        assert_eq!(norm(&field(3), &[1, 1]), 2);
        assert_eq!(norm(&field(7), &[2, 3, 1]), 0);
    }

    #[test]
    fn codec_round_trip_is_lexicographic() {
        let codec = PointCodec::new(5, 3).unwrap();
        let mut prev: Option<Vec<u64>> = None;
        for idx in 0..codec.size() {
            let p = codec.decode(idx);
            assert_eq!(codec.encode(&p), idx);
            if let Some(prev) = prev {
                assert!(prev < p);
            }
            prev = Some(p);
        }
    }

    #[test]
    fn sphere_examples() {
        let f3 = field(3);
        let s = enumerate_sphere(&f3, 2, 1).unwrap();
        let pts: Vec<Vec<u64>> = s.points.iter().map(|v| v.0.clone()).collect();
        assert_eq!(pts, vec![vec![0, 1], vec![0, 2], vec![1, 0], vec![2, 0]]);
        let zero = enumerate_sphere(&f3, 2, 0).unwrap();
        assert_eq!(zero.points, vec![Vector(vec![0, 0])]);
        // direct scan of all 343 points of F_7^3
        assert_eq!(brute_sphere_size(7, 3, 1), 42);
        assert_eq!(enumerate_sphere(&field(7), 3, 1).unwrap().len(), 42);
    }

    #[test]
    fn sphere_guard() {
        let err = enumerate_sphere(&field(101), 5, 1).unwrap_err();
        assert!(matches!(err, Error::SizeGuard { .. }));
        assert!(err.to_string().contains("norm_fiber_sizes"));
    }

    #[test]
    fn fiber_examples() {
        assert_eq!(norm_fiber_sizes(&field(3), 1).unwrap(), vec![1, 2, 0]);
        assert_eq!(norm_fiber_sizes(&field(3), 2).unwrap(), vec![1, 4, 4]);
    }

    #[test]
    fn fibers_agree_with_brute_force_and_partition() {
        for q in [2u64, 3, 5, 7, 11] {
            for d in 1..=3 {
                let fibers = norm_fiber_sizes(&field(q), d).unwrap();
                assert_eq!(fibers.iter().sum::<u64>(), q.pow(d as u32));
                for t in 0..q {
                    assert_eq!(fibers[t as usize], brute_sphere_size(q, d, t));
                }
            }
        }
    }

    #[test]
    fn cardinality_law_with_constant_two() {
        for q in (3..=23).filter(|&q| is_prime(q)) {
            for d in 2..=4 {
                let fibers = norm_fiber_sizes(&field(q), d).unwrap();
                let main = q.pow(d as u32 - 1) as i64;
                let slack = 2 * q.pow(d as u32 - 2) as i64;
                for t in 1..q {
                    let size = fibers[t as usize] as i64;
                    assert!((size - main).abs() <= slack, "q={q} d={d} t={t} size={size}");
                }
            }
        }
    }

    #[test]
    fn circles_for_three_mod_four() {
        for q in [3u64, 7, 11, 19, 23] {
            let fibers = norm_fiber_sizes(&field(q), 2).unwrap();
            assert_eq!(fibers[0], 1);
            assert!(fibers[1..].iter().all(|&n| n == q + 1));
        }
    }

    #[test]
    fn sphere_members_have_the_right_norm() {
        let fld = field(7);
        for t in 0..7 {
            let s = enumerate_sphere(&fld, 3, t).unwrap();
            assert!(s.points.iter().all(|p| norm(&fld, &p.0) == t));
            let mut uniq = s.points.clone();
            uniq.dedup();
            assert_eq!(uniq.len(), s.len());
        }
    }

    #[test]
    fn point_file_round_trip() {
        let text = "# two points\nq=7 dims=4 split=2,2\n0,1,2,3\n6,6,0,0 # trailing\n\n";
        let file = PointSetFile::parse(text).unwrap();
        assert_eq!(file.q, 7);
        assert_eq!(file.split, Some((2, 2)));
        assert_eq!(file.points, vec![vec![0, 1, 2, 3], vec![6, 6, 0, 0]]);
        assert_eq!(PointSetFile::parse(&file.render()).unwrap(), file);
    }

    #[test]
    fn point_file_errors() {
        assert!(PointSetFile::parse("").is_err());
        assert!(PointSetFile::parse("q=7 dims=2\n1,2,3\n").is_err());
        assert!(PointSetFile::parse("q=7 dims=2\n1,9\n").is_err());
        assert!(PointSetFile::parse("q=7 dims=4 split=1,2\n").is_err());
        assert!(PointSetFile::parse("q=7 dims=2\n1,x\n").is_err());
        let err = PointSetFile::parse("q=7\n").unwrap_err();
        assert!(err.to_string().contains("dims"));
    }
}
