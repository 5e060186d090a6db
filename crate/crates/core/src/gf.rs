//! Arithmetic in the prime field F_3 and in its extensions F_{3^k}.
//!
//! Extension elements are polynomials over F_3 of degree below `k`, reduced
//! modulo a fixed monic irreducible polynomial. [`irreducible_modulus`]
//! picks that polynomial deterministically, so every construction built on
//! top of this module is reproducible bit for bit.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use crate::error::{CapError, Result};

/// Largest supported extension degree.
pub const MAX_EXT_DEGREE: usize = 8;

/// An element of F_3.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct F3(u8);

impl F3 {
    pub const ZERO: F3 = F3(0);
    pub const ONE: F3 = F3(1);
    pub const TWO: F3 = F3(2);

    pub fn new(value: u8) -> Result<Self> {
        if value < 3 {
            Ok(F3(value))
        } else {
            Err(CapError::InvalidDigit(value))
        }
    }

    /// Reduces an arbitrary integer mod 3.
    pub fn reduce(value: i64) -> Self {
        F3(value.rem_euclid(3) as u8)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn inv(self) -> Result<Self> {
        // 1*1 = 1, 2*2 = 4 = 1
        match self.0 {
            0 => Err(CapError::ZeroInverse),
            v => Ok(F3(v)),
        }
    }
}

impl Add for F3 {
    type Output = F3;
    fn add(self, rhs: F3) -> F3 {
        F3((self.0 + rhs.0) % 3)
    }
}

impl Sub for F3 {
    type Output = F3;
    fn sub(self, rhs: F3) -> F3 {
        F3((self.0 + 3 - rhs.0) % 3)
    }
}

impl Mul for F3 {
    type Output = F3;
    fn mul(self, rhs: F3) -> F3 {
        F3((self.0 * rhs.0) % 3)
    }
}

impl Neg for F3 {
    type Output = F3;
    fn neg(self) -> F3 {
        F3((3 - self.0) % 3)
    }
}

impl fmt::Display for F3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Dense polynomials over F_3, lowest degree first, no trailing zeros.
mod poly {
    use super::F3;

    pub type Poly = Vec<F3>;

    pub fn trim(mut p: Poly) -> Poly {
        while p.last().is_some_and(|c| c.is_zero()) {
            p.pop();
        }
        p
    }

    pub fn degree(p: &[F3]) -> Option<usize> {
        p.iter().rposition(|c| !c.is_zero())
    }

    pub fn sub(a: &[F3], b: &[F3]) -> Poly {
        let len = a.len().max(b.len());
        let out = (0..len)
            .map(|i| {
                let x = a.get(i).copied().unwrap_or(F3::ZERO);
                let y = b.get(i).copied().unwrap_or(F3::ZERO);
                x - y
            })
            .collect();
        trim(out)
    }

    pub fn mul(a: &[F3], b: &[F3]) -> Poly {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![F3::ZERO; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = out[i + j] + x * y;
            }
        }
        trim(out)
    }

    /// Remainder of `a` modulo a nonzero `m`.
    pub fn rem(a: &[F3], m: &[F3]) -> Poly {
        let m = trim(m.to_vec());
        let dm = degree(&m).expect("division by zero polynomial");
        let lead_inv = m[dm].inv().expect("nonzero leading coefficient");
        let mut r = trim(a.to_vec());
        while let Some(dr) = degree(&r) {
            if dr < dm {
                break;
            }
            let factor = r[dr] * lead_inv;
            let shift = dr - dm;
            for (i, &c) in m.iter().enumerate() {
                r[i + shift] = r[i + shift] - factor * c;
            }
            r = trim(r);
        }
        r
    }

    pub fn gcd(a: &[F3], b: &[F3]) -> Poly {
        let mut x = trim(a.to_vec());
        let mut y = trim(b.to_vec());
        while !y.is_empty() {
            let r = rem(&x, &y);
            x = y;
            y = r;
        }
        x
    }

    pub fn mul_mod(a: &[F3], b: &[F3], m: &[F3]) -> Poly {
        rem(&mul(a, b), m)
    }

    /// `base^(3^times)` modulo `m`, by repeated Frobenius.
    pub fn frobenius_pow(base: &[F3], times: usize, m: &[F3]) -> Poly {
        let mut acc = rem(base, m);
        for _ in 0..times {
            let sq = mul_mod(&acc, &acc, m);
            acc = mul_mod(&sq, &acc, m);
        }
        acc
    }
}

/// Tests whether a monic polynomial over F_3 (coefficients lowest degree
/// first) is irreducible.
///
/// Uses the Ben-Or criterion: `f` of degree `k` is irreducible iff
/// `gcd(x^(3^i) - x, f) = 1` for every `1 <= i <= k/2`.
pub fn is_irreducible(poly: &[F3]) -> Result<bool> {
    let f = poly::trim(poly.to_vec());
    let k = match poly::degree(&f) {
        Some(k) if k >= 1 && f[k] == F3::ONE => k,
        _ => return Err(CapError::NotMonic),
    };
    if k == 1 {
        return Ok(true);
    }
    let x = vec![F3::ZERO, F3::ONE];
    for i in 1..=k / 2 {
        let xq = poly::frobenius_pow(&x, i, &f);
        let g = poly::gcd(&poly::sub(&xq, &x), &f);
        if poly::degree(&g).is_some_and(|d| d > 0) || g.is_empty() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A monic irreducible polynomial defining F_{3^k}.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExtModulus {
    degree: usize,
    /// Coefficients, x^0 first; length `degree + 1`, last entry 1.
    poly: Vec<F3>,
}

impl ExtModulus {
    /// Wraps `poly` (lowest degree first) after checking it is monic and
    /// irreducible.
    pub fn new(poly: Vec<F3>) -> Result<Self> {
        if !is_irreducible(&poly)? {
            return Err(CapError::InvalidParams(
                "modulus polynomial is reducible".into(),
            ));
        }
        let poly = poly::trim(poly);
        let degree = poly.len() - 1;
        if degree > MAX_EXT_DEGREE {
            return Err(CapError::DegreeOutOfRange(degree));
        }
        Ok(ExtModulus { degree, poly })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn poly(&self) -> &[F3] {
        &self.poly
    }

    /// Number of field elements, 3^k.
    pub fn order(&self) -> usize {
        3usize.pow(self.degree as u32)
    }
}

impl fmt::Display for ExtModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        for (power, c) in self.poly.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let coef = if c.value() == 1 && power > 0 {
                String::new()
            } else {
                c.to_string()
            };
            let term = match power {
                0 => coef,
                1 => format!("{coef}x"),
                _ => format!("{coef}x^{power}"),
            };
            terms.push(term);
        }
        write!(f, "{}", terms.join("+"))
    }
}

/// Candidate monic polynomial of degree `k` whose lower coefficients,
/// read from x^{k-1} down to x^0, spell `index` in base 3.
fn candidate_poly(k: usize, index: usize) -> Vec<F3> {
    let mut coeffs = vec![F3::ZERO; k + 1];
    coeffs[k] = F3::ONE;
    let mut rest = index;
    for c in coeffs.iter_mut().take(k) {
        *c = F3((rest % 3) as u8);
        rest /= 3;
    }
    coeffs
}

/// The monic irreducible polynomial of degree `k` whose coefficient word
/// (x^{k-1} .. x^0, base 3) is smallest.
pub fn irreducible_modulus(k: usize) -> Result<Arc<ExtModulus>> {
    if !(1..=MAX_EXT_DEGREE).contains(&k) {
        return Err(CapError::DegreeOutOfRange(k));
    }
    for index in 0..3usize.pow(k as u32) {
        let poly = candidate_poly(k, index);
        if is_irreducible(&poly)? {
            return Ok(Arc::new(ExtModulus { degree: k, poly }));
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

/// An element of F_{3^k}: a polynomial of degree < k modulo an [`ExtModulus`].
#[derive(Clone, Debug)]
pub struct ExtElement {
    coeffs: Vec<F3>,
    modulus: Arc<ExtModulus>,
}

impl PartialEq for ExtElement {
    fn eq(&self, other: &Self) -> bool {
        self.coeffs == other.coeffs && same_modulus(&self.modulus, &other.modulus)
    }
}

impl Eq for ExtElement {}

fn same_modulus(a: &Arc<ExtModulus>, b: &Arc<ExtModulus>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl ExtElement {
    /// Builds an element from `k` coefficients, x^0 first.
    pub fn from_coeffs(modulus: &Arc<ExtModulus>, coeffs: Vec<F3>) -> Result<Self> {
        if coeffs.len() != modulus.degree {
            return Err(CapError::LengthMismatch {
                expected: modulus.degree,
                found: coeffs.len(),
            });
        }
        Ok(ExtElement {
            coeffs,
            modulus: Arc::clone(modulus),
        })
    }

    pub fn zero(modulus: &Arc<ExtModulus>) -> Self {
        ExtElement {
            coeffs: vec![F3::ZERO; modulus.degree],
            modulus: Arc::clone(modulus),
        }
    }

    pub fn one(modulus: &Arc<ExtModulus>) -> Self {
        let mut e = Self::zero(modulus);
        e.coeffs[0] = F3::ONE;
        e
    }

    /// The class of `x`. In F_3 itself (modulus `x`) this is zero.
    pub fn generator(modulus: &Arc<ExtModulus>) -> Self {
        let x = [F3::ZERO, F3::ONE];
        Self::from_poly(modulus, &x)
    }

    fn from_poly(modulus: &Arc<ExtModulus>, p: &[F3]) -> Self {
        let r = poly::rem(p, &modulus.poly);
        let mut coeffs = vec![F3::ZERO; modulus.degree];
        coeffs[..r.len()].copy_from_slice(&r);
        ExtElement {
            coeffs,
            modulus: Arc::clone(modulus),
        }
    }

    /// Element whose coefficients c_{k-1} .. c_0 spell `index` in base 3.
    pub fn from_index(modulus: &Arc<ExtModulus>, index: usize) -> Result<Self> {
        if index >= modulus.order() {
            return Err(CapError::CodeOutOfRange {
                dim: modulus.degree,
                code: index as u64,
            });
        }
        let mut coeffs = vec![F3::ZERO; modulus.degree];
        let mut rest = index;
        for c in coeffs.iter_mut() {
            *c = F3((rest % 3) as u8);
            rest /= 3;
        }
        Ok(ExtElement {
            coeffs,
            modulus: Arc::clone(modulus),
        })
    }

    pub fn index(&self) -> usize {
        self.coeffs
            .iter()
            .rev()
            .fold(0, |acc, c| acc * 3 + c.value() as usize)
    }

    /// All field elements in increasing index order.
    pub fn all(modulus: &Arc<ExtModulus>) -> impl Iterator<Item = ExtElement> + '_ {
        (0..modulus.order()).map(move |i| Self::from_index(modulus, i).expect("index in range"))
    }

    pub fn coeffs(&self) -> &[F3] {
        &self.coeffs
    }

    pub fn modulus(&self) -> &Arc<ExtModulus> {
        &self.modulus
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    fn check(&self, other: &Self) -> Result<()> {
        if same_modulus(&self.modulus, &other.modulus) {
            Ok(())
        } else {
            Err(CapError::ModulusMismatch)
        }
    }

    /// Coordinates in F_3^k, highest-degree coefficient first.
    pub fn to_vector(&self) -> Vec<F3> {
        self.coeffs.iter().rev().copied().collect()
    }

    pub fn from_vector(modulus: &Arc<ExtModulus>, coords: &[F3]) -> Result<Self> {
        Self::from_coeffs(modulus, coords.iter().rev().copied().collect())
    }

    pub fn square(&self) -> Self {
        ext_mul(self, self).expect("same modulus")
    }

    pub fn pow(&self, mut exp: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(&self.modulus);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = ext_mul(&acc, &base).expect("same modulus");
            }
            base = base.square();
            exp >>= 1;
        }
        acc
    }
}

pub fn ext_add(a: &ExtElement, b: &ExtElement) -> Result<ExtElement> {
    a.check(b)?;
    let coeffs = a
        .coeffs
        .iter()
        .zip(&b.coeffs)
        .map(|(&x, &y)| x + y)
        .collect();
    Ok(ExtElement {
        coeffs,
        modulus: Arc::clone(&a.modulus),
    })
}

pub fn ext_mul(a: &ExtElement, b: &ExtElement) -> Result<ExtElement> {
    a.check(b)?;
    let product = poly::mul(&a.coeffs, &b.coeffs);
    Ok(ExtElement::from_poly(&a.modulus, &product))
}

/// Multiplicative inverse, computed as a^(3^k - 2).
pub fn ext_inv(a: &ExtElement) -> Result<ExtElement> {
    if a.is_zero() {
        return Err(CapError::ZeroInverse);
    }
    let order = a.modulus.order() as u64;
    Ok(a.pow(order - 2))
}

pub fn ext_to_vector(a: &ExtElement) -> Vec<F3> {
    a.to_vector()
}

pub fn ext_from_vector(modulus: &Arc<ExtModulus>, coords: &[F3]) -> Result<ExtElement> {
    ExtElement::from_vector(modulus, coords)
}

impl fmt::Display for ExtElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.to_vector() {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}
