//! Prime-field arithmetic, the additive character, and the rotation group
//! SO₂(F_q).
//!
//! Scalars are plain `u64` residues in `[0, q)`. Every product is reduced
//! immediately; with `q < 10⁶` no intermediate ever exceeds 64 bits.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest modulus accepted. Primality is checked by trial division and the
/// character table is dense, so this is a desk-scale limit.
pub const MAX_MODULUS: u64 = 1_000_000;

#[derive(Debug)]
struct FieldInner {
    q: u64,
    chars: Vec<Complex64>,
}

/// The prime field F_q with a precomputed table of χ(t) = e^{2πit/q}.
///
/// Cloning is cheap; the character table is shared.
#[derive(Clone)]
pub struct PrimeField {
    inner: Arc<FieldInner>,
}

impl fmt::Debug for PrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PrimeField")
            .field("q", &self.q())
            .field("q_mod_4", &self.q_mod_4())
            .finish()
    }
}

impl PartialEq for PrimeField {
    fn eq(&self, other: &Self) -> bool {
        self.q() == other.q()
    }
}

impl Eq for PrimeField {}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

impl PrimeField {
    /// Builds F_q, rejecting composite or out-of-range moduli.
    pub fn new(q: u64) -> Result<Self> {
        if q < 2 {
            return Err(Error::ModulusTooSmall(q));
        }
        if q >= MAX_MODULUS {
            return Err(Error::ModulusTooLarge(q, MAX_MODULUS));
        }
        if !is_prime(q) {
            return Err(Error::NotPrime(q));
        }
        let step = std::f64::consts::TAU / q as f64;
        let chars = (0..q)
            .map(|t| Complex64::from_polar(1.0, step * t as f64))
            .collect();
        Ok(Self {
            inner: Arc::new(FieldInner { q, chars }),
        })
    }

    #[inline]
    pub fn q(&self) -> u64 {
        self.inner.q
    }

    /// `q mod 4`; 1 or 3 for odd q, 2 for q = 2.
    pub fn q_mod_4(&self) -> u64 {
        self.inner.q % 4
    }

    pub fn is_three_mod_four(&self) -> bool {
        self.q_mod_4() == 3
    }

    pub(crate) fn require_three_mod_four(&self) -> Result<()> {
        if self.is_three_mod_four() {
            Ok(())
        } else {
            Err(Error::RequiresThreeModFour(self.q()))
        }
    }

    /// χ(t) for a residue t.
    #[inline]
    pub fn chi(&self, t: u64) -> Complex64 {
        self.inner.chars[(t % self.inner.q) as usize]
    }

    /// The full table χ(0), …, χ(q−1).
    pub fn char_table(&self) -> &[Complex64] {
        &self.inner.chars
    }

    #[inline]
    pub fn reduce(&self, x: u64) -> u64 {
        x % self.inner.q
    }

    #[inline]
    pub fn reduce_signed(&self, x: i64) -> u64 {
        x.rem_euclid(self.inner.q as i64) as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.inner.q {
            s - self.inner.q
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.inner.q - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.inner.q - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        a * b % self.inner.q
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.inner.q;
        base %= self.inner.q;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Legendre symbol of t: 0, 1 or −1.
    pub fn quadratic_character(&self, t: u64) -> i8 {
        let q = self.q();
        let t = t % q;
        if t == 0 {
            return 0;
        }
        if q == 2 {
            return 1;
        }
        if self.pow(t, (q - 1) / 2) == 1 {
            1
        } else {
            -1
        }
    }

    /// All rotations (a, b) with a² + b² = 1, lexicographic in (a, b).
    pub fn enumerate_so2(&self) -> Vec<Rotation> {
        let q = self.q();
        let mut out = Vec::new();
        for a in 0..q {
            let a2 = self.mul(a, a);
            for b in 0..q {
                if self.add(a2, self.mul(b, b)) == 1 % q {
                    out.push(Rotation { a, b });
                }
            }
        }
        out
    }

    /// Brute-force check that, for q ≡ 3 mod 4, two nonzero vectors of F_q²
    /// share a norm exactly when one rotation maps the second onto the first,
    /// and that rotation is unique.
    pub fn so2_orbit_check(&self) -> Result<OrbitReport> {
        self.require_three_mod_four()?;
        let q = self.q();
        let rotations = self.enumerate_so2();
        let nonzero: Vec<[u64; 2]> = (0..q)
            .flat_map(|x| (0..q).map(move |y| [x, y]))
            .filter(|v| *v != [0, 0])
            .collect();
        let mut checked = 0u64;
        for &x in &nonzero {
            let nx = self.norm2(x);
            for &y in &nonzero {
                let matches = rotations
                    .iter()
                    .filter(|r| r.apply(self, y) == x)
                    .count();
                let expected = usize::from(nx == self.norm2(y));
                checked += 1;
                if matches != expected {
                    return Ok(OrbitReport {
                        q,
                        rotations: rotations.len(),
                        pairs_checked: checked,
                        pass: false,
                        counterexample: Some(OrbitCounterexample {
                            x,
                            y,
                            rotations_found: matches,
                        }),
                    });
                }
            }
        }
        Ok(OrbitReport {
            q,
            rotations: rotations.len(),
            pairs_checked: checked,
            pass: true,
            counterexample: None,
        })
    }

    #[inline]
    pub(crate) fn norm2(&self, v: [u64; 2]) -> u64 {
        self.add(self.mul(v[0], v[0]), self.mul(v[1], v[1]))
    }
}

/// The rotation with matrix rows (a, −b), (b, a).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Rotation {
    pub a: u64,
    pub b: u64,
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation { a: 1, b: 0 };

    /// Validates a² + b² = 1 in `fld`.
    pub fn new(fld: &PrimeField, a: u64, b: u64) -> Result<Self> {
        let (a, b) = (fld.reduce(a), fld.reduce(b));
        if fld.norm2([a, b]) != 1 % fld.q() {
            return Err(Error::InvalidArgument(format!(
                "({a}, {b}) is not a rotation mod {}",
                fld.q()
            )));
        }
        Ok(Self { a, b })
    }

    /// Matrix-vector product mod q.
    #[inline]
    pub fn apply(&self, fld: &PrimeField, v: [u64; 2]) -> [u64; 2] {
        let x = fld.sub(fld.mul(self.a, v[0]), fld.mul(self.b, v[1]));
        let y = fld.add(fld.mul(self.b, v[0]), fld.mul(self.a, v[1]));
        [x, y]
    }

    pub fn inverse(&self, fld: &PrimeField) -> Self {
        Self {
            a: self.a,
            b: fld.neg(self.b),
        }
    }

    pub fn compose(&self, fld: &PrimeField, other: &Rotation) -> Self {
        Self {
            a: fld.sub(fld.mul(self.a, other.a), fld.mul(self.b, other.b)),
            b: fld.add(fld.mul(self.b, other.a), fld.mul(self.a, other.b)),
        }
    }
}

/// Rotation group action check result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitReport {
    pub q: u64,
    pub rotations: usize,
    pub pairs_checked: u64,
    pub pass: bool,
    pub counterexample: Option<OrbitCounterexample>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitCounterexample {
    pub x: [u64; 2],
    pub y: [u64; 2],
    pub rotations_found: usize,
}
