//! Points, flats and affine maps of F_3^n.
//!
//! A point is stored both as its digit vector and as its integer code
//! `sum digits[i] * 3^(n-1-i)`, so the first coordinate is the most
//! significant digit and integer order on codes is lexicographic order on
//! ternary strings.

use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CapError, Result};
use crate::gf::F3;

/// Largest supported dimension.
pub const MAX_DIM: usize = 12;

/// 3^n as a `u32`.
pub fn pow3(n: usize) -> u32 {
    3u32.pow(n as u32)
}

fn check_dim(n: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&n) {
        Ok(())
    } else {
        Err(CapError::UnsupportedDimension(n))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Point {
    dim: u8,
    code: u32,
    digits: [u8; MAX_DIM],
}

/// Encodes a digit vector as its lexicographic integer code.
pub fn encode(digits: &[u8]) -> Result<u32> {
    Ok(Point::from_digits(digits)?.code)
}

/// Decodes the point of F_3^n with the given code.
pub fn decode(n: usize, code: u32) -> Result<Point> {
    Point::decode(n, code)
}

impl Point {
    pub fn from_digits(digits: &[u8]) -> Result<Self> {
        check_dim(digits.len())?;
        let mut out = [0u8; MAX_DIM];
        let mut code = 0u32;
        for (slot, &d) in out.iter_mut().zip(digits) {
            if d > 2 {
                return Err(CapError::InvalidDigit(d));
            }
            *slot = d;
            code = code * 3 + d as u32;
        }
        Ok(Point {
            dim: digits.len() as u8,
            code,
            digits: out,
        })
    }

    pub fn decode(n: usize, code: u32) -> Result<Self> {
        check_dim(n)?;
        if code >= pow3(n) {
            return Err(CapError::CodeOutOfRange {
                dim: n,
                code: code as u64,
            });
        }
        let mut digits = [0u8; MAX_DIM];
        let mut rest = code;
        for i in (0..n).rev() {
            digits[i] = (rest % 3) as u8;
            rest /= 3;
        }
        Ok(Point {
            dim: n as u8,
            code,
            digits,
        })
    }

    pub fn zero(n: usize) -> Self {
        Self::decode(n, 0).expect("valid dimension")
    }

    /// The standard basis vector e_i, with `i` counted from 1.
    pub fn basis(n: usize, i: usize) -> Self {
        assert!(
            (1..=n).contains(&i),
            "basis index {i} out of range for n = {n}"
        );
        let mut digits = vec![0u8; n];
        digits[i - 1] = 1;
        Self::from_digits(&digits).expect("valid digits")
    }

    fn from_digit_fn(n: usize, f: impl Fn(usize) -> u8) -> Self {
        let mut digits = [0u8; MAX_DIM];
        let mut code = 0u32;
        for (i, slot) in digits.iter_mut().enumerate().take(n) {
            *slot = f(i);
            code = code * 3 + *slot as u32;
        }
        Point {
            dim: n as u8,
            code,
            digits,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn code(&self) -> u32 {
        self.code
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits[..self.dim as usize]
    }

    pub fn is_zero(&self) -> bool {
        self.code == 0
    }

    pub fn scale(&self, c: F3) -> Point {
        Self::from_digit_fn(self.dim(), |i| (self.digits[i] * c.value()) % 3)
    }

    pub fn checked_add(&self, other: &Point) -> Result<Point> {
        same_dim(self, other)?;
        Ok(*self + *other)
    }

    /// Prepends `extra` zero coordinates.
    pub fn embed(&self, extra: usize) -> Result<Point> {
        let mut digits = vec![0u8; extra];
        digits.extend_from_slice(self.digits());
        Point::from_digits(&digits)
    }
}

fn same_dim(a: &Point, b: &Point) -> Result<()> {
    if a.dim == b.dim {
        Ok(())
    } else {
        Err(CapError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        })
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        assert_eq!(self.dim, rhs.dim, "point dimensions differ");
        Point::from_digit_fn(self.dim(), |i| (self.digits[i] + rhs.digits[i]) % 3)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        assert_eq!(self.dim, rhs.dim, "point dimensions differ");
        Point::from_digit_fn(self.dim(), |i| (self.digits[i] + 3 - rhs.digits[i]) % 3)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::from_digit_fn(self.dim(), |i| (3 - self.digits[i]) % 3)
    }
}

impl PartialOrd for Point {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Point {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.dim, self.code).cmp(&(other.dim, other.code))
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in self.digits() {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Point({self})")
    }
}

impl FromStr for Point {
    type Err = CapError;

    /// Parses the ternary string form, e.g. `"00111"`.
    fn from_str(s: &str) -> Result<Self> {
        let digits = s
            .bytes()
            .map(|b| match b {
                b'0'..=b'2' => Ok(b - b'0'),
                other => Err(CapError::InvalidDigit(other)),
            })
            .collect::<Result<Vec<u8>>>()?;
        Point::from_digits(&digits)
    }
}

/// A duplicate-free set of points of one dimension, sorted by code.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CapSet {
    dim: usize,
    points: Vec<Point>,
}

impl CapSet {
    /// Sorts `points`; duplicates and mixed dimensions are errors.
    pub fn new(dim: usize, points: impl IntoIterator<Item = Point>) -> Result<Self> {
        check_dim(dim)?;
        let mut points: Vec<Point> = points.into_iter().collect();
        for p in &points {
            if p.dim() != dim {
                return Err(CapError::DimensionMismatch {
                    expected: dim,
                    found: p.dim(),
                });
            }
        }
        points.sort();
        if let Some(w) = points.windows(2).find(|w| w[0] == w[1]) {
            return Err(CapError::DuplicatePoint(w[0].to_string()));
        }
        Ok(CapSet { dim, points })
    }

    pub fn empty(dim: usize) -> Result<Self> {
        Self::new(dim, [])
    }

    pub fn from_codes(dim: usize, codes: impl IntoIterator<Item = u32>) -> Result<Self> {
        let points = codes
            .into_iter()
            .map(|c| Point::decode(dim, c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(dim, points)
    }

    /// Parses a list of ternary strings.
    pub fn parse<S: AsRef<str>>(dim: usize, words: &[S]) -> Result<Self> {
        let points = words
            .iter()
            .map(|w| w.as_ref().parse())
            .collect::<Result<Vec<Point>>>()?;
        Self::new(dim, points)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }

    pub fn codes(&self) -> Vec<u32> {
        self.points.iter().map(|p| p.code).collect()
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.points.binary_search(p).is_ok()
    }

    /// The set with `p` added. Errors if `p` is already present.
    pub fn with(&self, p: Point) -> Result<Self> {
        Self::new(self.dim, self.points.iter().copied().chain([p]))
    }

    /// Coordinate-wise sum of all points.
    pub fn sum(&self) -> Point {
        self.points
            .iter()
            .fold(Point::zero(self.dim), |acc, &p| acc + p)
    }
}

impl fmt::Display for CapSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let words: Vec<String> = self.points.iter().map(|p| p.to_string()).collect();
        write!(f, "{{{}}}", words.join(", "))
    }
}

impl fmt::Debug for CapSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CapSet(n={}, {self})", self.dim)
    }
}

impl<'a> IntoIterator for &'a CapSet {
    type Item = &'a Point;
    type IntoIter = std::slice::Iter<'a, Point>;
    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

/// A dense matrix over F_3, entries stored as `u8` in row-major order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct F3Matrix {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

impl F3Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        F3Matrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(CapError::LengthMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            for &v in r {
                if v > 2 {
                    return Err(CapError::InvalidDigit(v));
                }
                data.push(v);
            }
        }
        Ok(F3Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Matrix whose columns are the given points.
    pub fn from_columns(cols: &[Point]) -> Self {
        let rows = cols.first().map_or(0, |p| p.dim());
        let mut m = Self::zeros(rows, cols.len());
        for (j, p) in cols.iter().enumerate() {
            for (i, &d) in p.digits().iter().enumerate() {
                m.set(i, j, d);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: u8) {
        self.data[r * self.cols + c] = v % 3;
    }

    pub fn row(&self, r: usize) -> &[u8] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn mul(&self, other: &F3Matrix) -> Result<F3Matrix> {
        if self.cols != other.rows {
            return Err(CapError::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = F3Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let s: u32 = (0..self.cols)
                    .map(|k| self.get(i, k) as u32 * other.get(k, j) as u32)
                    .sum();
                out.set(i, j, (s % 3) as u8);
            }
        }
        Ok(out)
    }

    /// `A * p` with `p` read as a column vector.
    pub fn mul_point(&self, p: &Point) -> Result<Point> {
        if self.cols != p.dim() || self.rows != p.dim() {
            return Err(CapError::DimensionMismatch {
                expected: self.cols,
                found: p.dim(),
            });
        }
        let d = p.digits();
        Ok(Point::from_digit_fn(self.rows, |i| {
            let s: u32 = self
                .row(i)
                .iter()
                .zip(d)
                .map(|(&a, &b)| a as u32 * b as u32)
                .sum();
            (s % 3) as u8
        }))
    }

    pub fn rank(&self) -> usize {
        rank_mod3(self)
    }

    pub fn is_invertible(&self) -> bool {
        self.rows == self.cols && self.rank() == self.rows
    }

    pub fn inverse(&self) -> Result<F3Matrix> {
        if self.rows != self.cols {
            return Err(CapError::NotInvertible);
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = F3Matrix::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| a.get(r, col) != 0)
                .ok_or(CapError::NotInvertible)?;
            a.swap_rows(col, pivot);
            inv.swap_rows(col, pivot);
            // pivot values 1 and 2 are their own inverses
            let s = a.get(col, col);
            a.scale_row(col, s);
            inv.scale_row(col, s);
            for r in 0..n {
                let f = a.get(r, col);
                if r != col && f != 0 {
                    let m = 3 - f;
                    a.add_row_multiple(r, col, m);
                    inv.add_row_multiple(r, col, m);
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    fn scale_row(&mut self, r: usize, s: u8) {
        for c in 0..self.cols {
            let v = self.get(r, c);
            self.set(r, c, v * s);
        }
    }

    /// row[dst] += m * row[src]
    fn add_row_multiple(&mut self, dst: usize, src: usize, m: u8) {
        for c in 0..self.cols {
            let v = self.get(dst, c) + m * self.get(src, c);
            self.set(dst, c, v);
        }
    }
}

impl fmt::Debug for F3Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = (0..self.rows)
            .map(|r| self.row(r).iter().map(|v| v.to_string()).collect())
            .collect();
        write!(f, "[{}]", rows.join(" "))
    }
}

/// Rank over F_3 by Gaussian elimination.
pub fn rank_mod3(m: &F3Matrix) -> usize {
    let mut a = m.clone();
    let mut rank = 0;
    for col in 0..a.cols {
        if rank == a.rows {
            break;
        }
        let Some(pivot) = (rank..a.rows).find(|&r| a.get(r, col) != 0) else {
            continue;
        };
        a.swap_rows(rank, pivot);
        let s = a.get(rank, col);
        a.scale_row(rank, s);
        for r in rank + 1..a.rows {
            let f = a.get(r, col);
            if f != 0 {
                a.add_row_multiple(r, rank, 3 - f);
            }
        }
        rank += 1;
    }
    rank
}

/// Rank of a list of vectors (as rows).
pub fn vector_rank(vectors: &[Point]) -> usize {
    let Some(first) = vectors.first() else {
        return 0;
    };
    let rows: Vec<&[u8]> = vectors.iter().map(|p| p.digits()).collect();
    let mut m = F3Matrix::zeros(rows.len(), first.dim());
    for (i, r) in rows.iter().enumerate() {
        for (j, &v) in r.iter().enumerate() {
            m.set(i, j, v);
        }
    }
    rank_mod3(&m)
}

/// True iff the differences from the first point are linearly independent.
pub fn affinely_independent(points: &[Point]) -> bool {
    let Some((&base, rest)) = points.split_first() else {
        return true;
    };
    if rest.len() > base.dim() {
        return false;
    }
    let diffs: Vec<Point> = rest.iter().map(|&p| p - base).collect();
    vector_rank(&diffs) == diffs.len()
}

/// The third point of the line through `a` and `b`: `-(a + b)`.
pub fn line_third_point(a: &Point, b: &Point) -> Result<Point> {
    same_dim(a, b)?;
    if a == b {
        return Err(CapError::CoincidentPoints);
    }
    Ok(-(*a + *b))
}

/// An affine subspace `base + span(basis)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Flat {
    base: Point,
    basis: Vec<Point>,
}

/// The affine span of `points`, based at the first point.
pub fn flat_span(points: &[Point]) -> Result<Flat> {
    let (&base, rest) = points
        .split_first()
        .ok_or_else(|| CapError::InvalidParams("affine span of an empty set".into()))?;
    let mut basis: Vec<Point> = Vec::new();
    for &p in rest {
        same_dim(&base, &p)?;
        let mut trial = basis.clone();
        trial.push(p - base);
        if vector_rank(&trial) == trial.len() {
            basis = trial;
        }
    }
    Ok(Flat { base, basis })
}

impl Flat {
    pub fn base(&self) -> Point {
        self.base
    }

    pub fn basis(&self) -> &[Point] {
        &self.basis
    }

    pub fn flat_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn contains(&self, p: &Point) -> Result<bool> {
        same_dim(&self.base, p)?;
        let mut trial = self.basis.clone();
        trial.push(*p - self.base);
        Ok(vector_rank(&trial) == self.basis.len())
    }

    /// All 3^k members, in code order.
    pub fn members(&self) -> Vec<Point> {
        let k = self.basis.len();
        let mut out: Vec<Point> = (0..pow3(k))
            .map(|idx| {
                let mut p = self.base;
                let mut rest = idx;
                for v in &self.basis {
                    let c = F3::new((rest % 3) as u8).expect("digit");
                    p = p + v.scale(c);
                    rest /= 3;
                }
                p
            })
            .collect();
        out.sort();
        out
    }
}

/// `x -> A x + b`.
#[derive(Clone, PartialEq, Eq)]
pub struct AffineMap {
    matrix: F3Matrix,
    translation: Point,
}

impl AffineMap {
    /// Builds an invertible affine map; singular matrices are rejected.
    pub fn new(matrix: F3Matrix, translation: Point) -> Result<Self> {
        if matrix.rows() != translation.dim() {
            return Err(CapError::DimensionMismatch {
                expected: matrix.rows(),
                found: translation.dim(),
            });
        }
        if !matrix.is_invertible() {
            return Err(CapError::NotInvertible);
        }
        Ok(AffineMap {
            matrix,
            translation,
        })
    }

    pub fn identity(n: usize) -> Self {
        AffineMap {
            matrix: F3Matrix::identity(n),
            translation: Point::zero(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.translation.dim()
    }

    pub fn matrix(&self) -> &F3Matrix {
        &self.matrix
    }

    pub fn translation(&self) -> Point {
        self.translation
    }

    pub fn apply(&self, p: &Point) -> Result<Point> {
        Ok(self.matrix.mul_point(p)? + self.translation)
    }

    pub fn apply_set(&self, s: &CapSet) -> Result<CapSet> {
        let image = s
            .iter()
            .map(|p| self.apply(p))
            .collect::<Result<Vec<_>>>()?;
        CapSet::new(s.dim(), image)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &AffineMap) -> Result<AffineMap> {
        let matrix = self.matrix.mul(&other.matrix)?;
        let translation = self.apply(&other.translation)?;
        Ok(AffineMap {
            matrix,
            translation,
        })
    }

    pub fn inverse(&self) -> Result<AffineMap> {
        let inv = self.matrix.inverse()?;
        let translation = -inv.mul_point(&self.translation)?;
        Ok(AffineMap {
            matrix: inv,
            translation,
        })
    }
}

impl fmt::Debug for AffineMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AffineMap(A={:?}, b={})", self.matrix, self.translation)
    }
}

pub fn apply_affine(t: &AffineMap, s: &CapSet) -> Result<CapSet> {
    if t.dim() != s.dim() {
        return Err(CapError::DimensionMismatch {
            expected: t.dim(),
            found: s.dim(),
        });
    }
    t.apply_set(s)
}

/// Extends an affinely independent list to a full affine basis by
/// appending the smallest-code points that keep it independent.
fn complete_frame(frame: &[Point], n: usize) -> Vec<Point> {
    let mut out = frame.to_vec();
    let mut code = 0;
    while out.len() < n + 1 {
        let p = Point::decode(n, code).expect("code in range");
        out.push(p);
        if !affinely_independent(&out) {
            out.pop();
        }
        code += 1;
    }
    out
}

/// An invertible affine map sending `src[i]` to `dst[i]` and fixing every
/// point of `fix`.
///
/// Short frames are completed to full affine bases deterministically; see
/// [`complete_frame`].
pub fn frame_map(src: &[Point], dst: &[Point], fix: &[Point]) -> Result<AffineMap> {
    let src: Vec<Point> = src.iter().chain(fix).copied().collect();
    let dst: Vec<Point> = dst.iter().chain(fix).copied().collect();
    if src.len() != dst.len() {
        return Err(CapError::LengthMismatch {
            expected: src.len(),
            found: dst.len(),
        });
    }
    let n = src
        .first()
        .ok_or_else(|| CapError::InvalidParams("empty frame".into()))?
        .dim();
    for p in src.iter().chain(&dst) {
        if p.dim() != n {
            return Err(CapError::DimensionMismatch {
                expected: n,
                found: p.dim(),
            });
        }
    }
    if src.len() > n + 1 || !affinely_independent(&src) || !affinely_independent(&dst) {
        return Err(CapError::AffinelyDependent);
    }
    let src = complete_frame(&src, n);
    let dst = complete_frame(&dst, n);
    let s = F3Matrix::from_columns(&src[1..].iter().map(|&p| p - src[0]).collect::<Vec<_>>());
    let d = F3Matrix::from_columns(&dst[1..].iter().map(|&p| p - dst[0]).collect::<Vec<_>>());
    let a = d.mul(&s.inverse()?)?;
    let b = dst[0] - a.mul_point(&src[0])?;
    AffineMap::new(a, b)
}

/// A uniformly random invertible affine map, deterministic in `seed`.
pub fn random_invertible(n: usize, seed: u64) -> Result<AffineMap> {
    check_dim(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut m = F3Matrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                m.set(r, c, rng.gen_range(0..3));
            }
        }
        if m.is_invertible() {
            let b = Point::decode(n, rng.gen_range(0..pow3(n)))?;
            return AffineMap::new(m, b);
        }
    }
}

/// Precomputed addition and negation on point codes of F_3^n.
///
/// Addition splits a code into a high and a low half and looks both up in
/// small tables, so the footprint stays near 3^n even at `MAX_DIM`. Up to
/// `FULL_TABLE_DIM` a direct 3^n x 3^n table is kept as well.
pub struct CodeSpace {
    dim: usize,
    size: u32,
    lo_size: u32,
    hi_size: u32,
    hi_of: Vec<u16>,
    lo_of: Vec<u16>,
    add_hi: Vec<u32>,
    add_lo: Vec<u32>,
    neg: Vec<u32>,
    full: Vec<u16>,
}

/// Largest dimension with a direct addition table (about 9.5 MB at 7).
pub const FULL_TABLE_DIM: usize = 7;

fn add_small(len: usize, a: u32, b: u32) -> u32 {
    let (mut a, mut b) = (a, b);
    let mut out = 0;
    let mut place = 1;
    for _ in 0..len {
        out += ((a % 3 + b % 3) % 3) * place;
        a /= 3;
        b /= 3;
        place *= 3;
    }
    out
}

impl CodeSpace {
    pub fn new(n: usize) -> Result<Self> {
        check_dim(n)?;
        let lo_len = n / 2;
        let hi_len = n - lo_len;
        let lo_size = pow3(lo_len);
        let hi_size = pow3(hi_len);
        let size = pow3(n);
        let mut add_lo = vec![0u32; (lo_size * lo_size) as usize];
        for a in 0..lo_size {
            for b in 0..lo_size {
                add_lo[(a * lo_size + b) as usize] = add_small(lo_len, a, b);
            }
        }
        let mut add_hi = vec![0u32; (hi_size * hi_size) as usize];
        for a in 0..hi_size {
            for b in 0..hi_size {
                add_hi[(a * hi_size + b) as usize] = add_small(hi_len, a, b) * lo_size;
            }
        }
        let hi_of = (0..size).map(|c| (c / lo_size) as u16).collect();
        let lo_of = (0..size).map(|c| (c % lo_size) as u16).collect();
        // -c = 2c = c + c
        let neg = (0..size).map(|c| add_small(n, c, c)).collect();
        let mut space = CodeSpace {
            dim: n,
            size,
            lo_size,
            hi_size,
            hi_of,
            lo_of,
            add_hi,
            add_lo,
            neg,
            full: Vec::new(),
        };
        if n <= FULL_TABLE_DIM {
            let mut full = Vec::with_capacity((size * size) as usize);
            for a in 0..size {
                full.extend((0..size).map(|b| space.add_split(a, b) as u16));
            }
            space.full = full;
        }
        Ok(space)
    }

    /// Shared table for dimension `n`, built on first use.
    pub fn shared(n: usize) -> Result<Arc<CodeSpace>> {
        static TABLES: [OnceLock<Arc<CodeSpace>>; MAX_DIM + 1] =
            [const { OnceLock::new() }; MAX_DIM + 1];
        check_dim(n)?;
        Ok(Arc::clone(TABLES[n].get_or_init(|| {
            Arc::new(CodeSpace::new(n).expect("valid dimension"))
        })))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of points, 3^n.
    pub fn size(&self) -> u32 {
        self.size
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        if self.full.is_empty() {
            self.add_split(a, b)
        } else {
            self.full[(a * self.size + b) as usize] as u32
        }
    }

    #[inline]
    fn add_split(&self, a: u32, b: u32) -> u32 {
        let hi = self.add_hi[(self.hi_of[a as usize] as u32 * self.hi_size
            + self.hi_of[b as usize] as u32) as usize];
        let lo = self.add_lo[(self.lo_of[a as usize] as u32 * self.lo_size
            + self.lo_of[b as usize] as u32) as usize];
        hi + lo
    }

    /// `-a`, which in characteristic 3 equals `2a`.
    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        self.neg[a as usize]
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }
}
