//! d-cap and Sidon predicates, plus an incremental Sidon-set builder.
//!
//! In F_3^n a set is a 2-cap exactly when it is a Sidon set, so the builder
//! only has to track pairwise sums: adding `p` to a Sidon set `C` keeps it
//! Sidon iff none of `p + c` (c in C) or `2p` is already a sum of two
//! members. The new sums cannot collide with each other when `p` is not a
//! member.

use std::collections::HashMap;
use std::sync::Arc;

use itertools::Itertools;

use crate::bits::CodeMask;
use crate::error::{CapError, Result};
use crate::rules::rule_for_order;
use crate::space::{affinely_independent, CapSet, CodeSpace, Point};

/// Largest set `is_d_cap` will enumerate subsets of.
pub const MAX_ENUMERATED_SET: usize = 50;
/// Largest subset size (`d + 2`) `is_d_cap` will enumerate.
pub const MAX_ENUMERATED_SUBSET: usize = 6;

/// The smallest affinely dependent subset of size at most `d + 2`, if any.
///
/// Subsets are tried by increasing size, then in index order.
pub fn find_violation(s: &CapSet, d: u32) -> Result<Option<Vec<Point>>> {
    if d == 0 {
        return Err(CapError::InvalidOrder(d));
    }
    let pts = s.points();
    let top = (d as usize + 2).min(pts.len());
    if top < pts.len() && (top > MAX_ENUMERATED_SUBSET || pts.len() > MAX_ENUMERATED_SET) {
        return Err(CapError::TooLarge(format!(
            "{} points with subsets of size {top}",
            pts.len()
        )));
    }
    if top == pts.len() && affinely_independent(pts) {
        return Ok(None);
    }
    for size in 3..=top {
        for subset in pts.iter().copied().combinations(size) {
            if !affinely_independent(&subset) {
                return Ok(Some(subset));
            }
        }
    }
    Ok(None)
}

/// True iff every subset of at most `d + 2` points is affinely independent.
pub fn is_d_cap(s: &CapSet, d: u32) -> Result<bool> {
    Ok(find_violation(s, d)?.is_none())
}

/// True iff all unordered pairwise sums, doubles included, are distinct.
pub fn is_sidon(s: &CapSet) -> bool {
    sidon_collision(s).is_none()
}

/// The points of the first repeated pairwise sum, sorted and deduplicated.
pub fn sidon_collision(s: &CapSet) -> Option<Vec<Point>> {
    let pts = s.points();
    let mut seen = HashMap::with_capacity(pts.len() * (pts.len() + 1) / 2);
    for (i, &a) in pts.iter().enumerate() {
        for &b in &pts[i..] {
            if let Some(&(c, e)) = seen.get(&(a + b).code()) {
                let mut involved: Vec<Point> = vec![a, b, c, e];
                involved.sort();
                involved.dedup();
                return Some(involved);
            }
            seen.insert((a + b).code(), (a, b));
        }
    }
    None
}

/// `is_sidon`, cross-checked against `is_d_cap(s, 2)`.
pub fn sidon_equiv_check(s: &CapSet) -> Result<bool> {
    let sidon = is_sidon(s);
    let cap = is_d_cap(s, 2)?;
    if sidon != cap {
        return Err(CapError::Inconsistent(format!(
            "is_sidon = {sidon} but is_d_cap(2) = {cap} for {s}"
        )));
    }
    Ok(sidon)
}

/// True iff no point of F_3^n can join the d-cap `s`.
pub fn is_complete(s: &CapSet, d: u32) -> Result<bool> {
    let is_cap = if d == 2 && s.len() > MAX_ENUMERATED_SET {
        is_sidon(s)
    } else {
        is_d_cap(s, d)?
    };
    if !is_cap {
        return Err(CapError::NotACap(d));
    }
    let rule = rule_for_order(d)?;
    let space = CodeSpace::shared(s.dim())?;
    Ok(rule.candidates_of(&space, &s.codes()).is_empty())
}

/// Codes that are a sum of two members (a = b allowed).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SumFingerprint {
    dim: usize,
    marks: CodeMask,
    count: usize,
}

impl SumFingerprint {
    pub fn new(dim: usize, size: u32) -> Self {
        SumFingerprint {
            dim,
            marks: CodeMask::empty(size),
            count: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_marked(&self, code: u32) -> bool {
        self.marks.contains(code)
    }

    fn mark(&mut self, code: u32) {
        debug_assert!(!self.marks.contains(code));
        self.marks.insert(code);
        self.count += 1;
    }

    fn unmark(&mut self, code: u32) {
        debug_assert!(self.marks.contains(code));
        self.marks.remove(code);
        self.count -= 1;
    }

    pub fn marked_count(&self) -> usize {
        self.count
    }
}

#[derive(Clone, Debug)]
struct UndoRecord {
    point: u32,
    marked: Vec<u32>,
}

/// Clears from `mask` every point that can no longer join `members` once
/// its last entry `p` has been added. `mask` must have been exact for
/// `members` without `p`.
pub(crate) fn sidon_forbid(space: &CodeSpace, members: &[u32], mask: &mut CodeMask) {
    let Some((&p, old)) = members.split_last() else {
        return;
    };
    mask.remove(p);
    for &x in members {
        let s = space.add(p, x);
        // 2q = s
        mask.remove(space.neg(s));
        // q + c = s
        for &c in old {
            mask.remove(space.sub(s, c));
        }
    }
    // q + p = t for every sum t of the enlarged set
    let neg_p = space.neg(p);
    for (i, &x) in members.iter().enumerate() {
        for &y in &members[i..] {
            mask.remove(space.add(space.add(x, y), neg_p));
        }
    }
}

/// A Sidon set grown one point at a time, with exact undo.
#[derive(Clone)]
pub struct CapBuilder {
    space: Arc<CodeSpace>,
    members: Vec<u32>,
    fingerprint: SumFingerprint,
    trail: Vec<UndoRecord>,
    masks: Vec<CodeMask>,
}

impl CapBuilder {
    pub fn new(n: usize) -> Result<Self> {
        let space = CodeSpace::shared(n)?;
        let size = space.size();
        Ok(CapBuilder {
            fingerprint: SumFingerprint::new(n, size),
            masks: vec![CodeMask::full(size)],
            space,
            members: Vec::new(),
            trail: Vec::new(),
        })
    }

    /// A builder holding `s`; fails if `s` is not Sidon.
    pub fn from_set(s: &CapSet) -> Result<Self> {
        let mut b = Self::new(s.dim())?;
        for p in s.iter() {
            if !b.try_add(p) {
                return Err(CapError::NotACap(2));
            }
        }
        Ok(b)
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Member codes in insertion order.
    pub fn member_codes(&self) -> &[u32] {
        &self.members
    }

    pub fn members(&self) -> CapSet {
        CapSet::from_codes(self.dim(), self.members.iter().copied()).expect("members form a set")
    }

    pub fn fingerprint(&self) -> &SumFingerprint {
        &self.fingerprint
    }

    pub fn try_add(&mut self, p: &Point) -> bool {
        assert_eq!(p.dim(), self.dim(), "point dimension differs from builder");
        self.try_add_code(p.code())
    }

    pub fn try_add_code(&mut self, p: u32) -> bool {
        if self.members.contains(&p) {
            return false;
        }
        let space = &self.space;
        let mut new_sums = Vec::with_capacity(self.members.len() + 1);
        new_sums.push(space.neg(p)); // 2p
        new_sums.extend(self.members.iter().map(|&c| space.add(p, c)));
        if new_sums.iter().any(|&s| self.fingerprint.is_marked(s)) {
            return false;
        }
        for &s in &new_sums {
            self.fingerprint.mark(s);
        }
        self.members.push(p);
        let mut mask = self.masks.last().expect("root mask").clone();
        sidon_forbid(space, &self.members, &mut mask);
        self.masks.push(mask);
        self.trail.push(UndoRecord {
            point: p,
            marked: new_sums,
        });
        true
    }

    /// Reverts the most recent successful add.
    pub fn undo(&mut self) -> Result<Point> {
        let record = self
            .trail
            .pop()
            .ok_or_else(|| CapError::InvalidParams("undo on an empty builder".into()))?;
        for &s in &record.marked {
            self.fingerprint.unmark(s);
        }
        self.members.pop();
        self.masks.pop();
        Point::decode(self.dim(), record.point)
    }

    /// Points `try_add` would currently accept, maintained incrementally.
    pub fn candidate_mask(&self) -> &CodeMask {
        self.masks.last().expect("root mask")
    }

    /// The same set, recomputed by probing the fingerprint for every point.
    pub fn candidate_mask_from_scratch(&self) -> CodeMask {
        let space = &self.space;
        let mut mask = CodeMask::empty(space.size());
        for q in 0..space.size() {
            if self.members.contains(&q) || self.fingerprint.is_marked(space.neg(q)) {
                continue;
            }
            if self
                .members
                .iter()
                .all(|&c| !self.fingerprint.is_marked(space.add(q, c)))
            {
                mask.insert(q);
            }
        }
        mask
    }
}

pub fn builder_new(n: usize) -> Result<CapBuilder> {
    CapBuilder::new(n)
}

pub fn builder_try_add(b: &mut CapBuilder, p: &Point) -> bool {
    b.try_add(p)
}

pub fn builder_undo(b: &mut CapBuilder) -> Result<Point> {
    b.undo()
}

pub fn candidate_mask(b: &CapBuilder) -> CodeMask {
    b.candidate_mask().clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{apply_affine, decode, pow3, random_invertible};
    use rand::seq::index::sample;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set(n: usize, words: &[&str]) -> CapSet {
        CapSet::parse(n, words).unwrap()
    }

    fn random_set(rng: &mut ChaCha8Rng, n: usize, k: usize) -> CapSet {
        let idx = sample(rng, pow3(n) as usize, k);
        CapSet::from_codes(n, idx.iter().map(|c| c as u32)).unwrap()
    }

    fn c1() -> CapSet {
        set(3, &["000", "100", "010", "001", "111"])
    }

    #[test]
    fn d_cap_examples() {
        assert!(is_d_cap(&c1(), 2).unwrap());
        assert!(!is_d_cap(&set(3, &["000", "100", "200"]), 1).unwrap());
        assert!(!is_d_cap(&c1(), 3).unwrap());
        assert_eq!(is_d_cap(&c1(), 0), Err(CapError::InvalidOrder(0)));
    }

    #[test]
    fn violation_is_smallest_subset() {
        let v = find_violation(&set(3, &["000", "100", "200"]), 1)
            .unwrap()
            .unwrap();
        let words: Vec<String> = v.iter().map(|p| p.to_string()).collect();
        assert_eq!(words, ["000", "100", "200"]);
        let v = find_violation(&set(2, &["00", "01", "10", "11"]), 2)
            .unwrap()
            .unwrap();
        assert_eq!(v.len(), 4);
    }

    #[test]
    fn enumeration_refuses_large_inputs() {
        let big = CapSet::from_codes(5, 0..60).unwrap();
        assert!(matches!(is_d_cap(&big, 2), Err(CapError::TooLarge(_))));
        let s = CapSet::from_codes(5, [0, 1, 3, 9, 27, 81, 13, 40]).unwrap();
        assert!(matches!(is_d_cap(&s, 5), Err(CapError::TooLarge(_))));
    }

    #[test]
    fn sidon_examples() {
        assert!(is_sidon(&set(2, &["00", "11", "21"])));
        assert!(!is_sidon(&set(3, &["000", "100", "200"])));
        let w13 = set(
            5,
            &[
                "00000", "00001", "00010", "00100", "00111", "01000", "01112", "02120", "02212",
                "10000", "10121", "20102", "22022",
            ],
        );
        assert!(is_sidon(&w13));
        assert!(sidon_equiv_check(&c1()).unwrap());
    }

    #[test]
    fn collisions_are_dependent_subsets() {
        let line = set(3, &["000", "100", "200"]);
        assert_eq!(sidon_collision(&line).unwrap(), line.points().to_vec());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut hits = 0;
        for _ in 0..300 {
            let size = rng.gen_range(3..12);
            let s = random_set(&mut rng, 4, size);
            let Some(c) = sidon_collision(&s) else {
                assert!(is_d_cap(&s, 2).unwrap());
                continue;
            };
            hits += 1;
            assert!((3..=4).contains(&c.len()));
            assert!(c.iter().all(|p| s.contains(p)));
            let sub = CapSet::new(4, c).unwrap();
            assert!(!is_d_cap(&sub, 2).unwrap());
        }
        assert!(hits > 50);
    }

    #[test]
    fn equivalence_exhaustive_f3_2() {
        let all: Vec<Point> = (0..9).map(|c| decode(2, c).unwrap()).collect();
        for k in 0..=4 {
            for subset in all.iter().copied().combinations(k) {
                let s = CapSet::new(2, subset).unwrap();
                sidon_equiv_check(&s).unwrap();
            }
        }
    }

    #[test]
    fn equivalence_random_f3_4() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let s = random_set(&mut rng, 4, 6);
            sidon_equiv_check(&s).unwrap();
        }
    }

    #[test]
    fn monotone_in_order_and_affine_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for i in 0..1000 {
            let n = 3 + i % 3;
            let k = rng.gen_range(3..=7);
            let s = random_set(&mut rng, n, k);
            for d in 2..=3 {
                if is_d_cap(&s, d).unwrap() {
                    assert!(is_d_cap(&s, d - 1).unwrap());
                }
            }
            let t = random_invertible(n, i as u64).unwrap();
            let image = apply_affine(&t, &s).unwrap();
            for d in 1..=3 {
                assert_eq!(is_d_cap(&s, d).unwrap(), is_d_cap(&image, d).unwrap());
            }
        }
    }

    #[test]
    fn subsets_of_caps_are_caps() {
        let w = c1();
        for k in 0..=w.len() {
            for sub in w.points().iter().copied().combinations(k) {
                let s = CapSet::new(3, sub).unwrap();
                assert!(is_d_cap(&s, 2).unwrap());
                assert!(is_sidon(&s));
            }
        }
    }

    #[test]
    fn builder_examples() {
        let mut b = builder_new(2).unwrap();
        assert!(builder_try_add(&mut b, &"00".parse().unwrap()));
        assert!(builder_try_add(&mut b, &"01".parse().unwrap()));
        assert!(!builder_try_add(&mut b, &"02".parse().unwrap()));
        assert!(!builder_try_add(&mut b, &"01".parse().unwrap()));
        assert!(builder_try_add(&mut b, &"10".parse().unwrap()));
        assert_eq!(builder_undo(&mut b).unwrap().to_string(), "10");
        assert_eq!(b.len(), 2);
        builder_undo(&mut b).unwrap();
        builder_undo(&mut b).unwrap();
        assert!(builder_undo(&mut b).is_err());
    }

    #[test]
    fn candidate_mask_examples() {
        let b = builder_new(3).unwrap();
        assert_eq!(candidate_mask(&b).count(), 27);
        let mut b = builder_new(2).unwrap();
        b.try_add(&"00".parse().unwrap());
        b.try_add(&"10".parse().unwrap());
        let mask = candidate_mask(&b);
        let expected: Vec<u32> = (0..9).filter(|&c| ![0, 3, 6].contains(&c)).collect();
        assert_eq!(mask.iter().collect::<Vec<_>>(), expected);
    }

    #[test]
    fn random_add_undo_stays_sidon() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut b = builder_new(4).unwrap();
        for _ in 0..500 {
            if b.is_empty() || rng.gen_bool(0.7) {
                let p = decode(4, rng.gen_range(0..81)).unwrap();
                let expect = !b.members().contains(&p) && is_sidon(&b.members().with(p).unwrap());
                assert_eq!(b.try_add(&p), expect);
            } else {
                b.undo().unwrap();
            }
            assert!(is_sidon(&b.members()));
            let k = b.len();
            assert_eq!(b.fingerprint().marked_count(), k * (k + 1) / 2);
            assert_eq!(b.candidate_mask(), &b.candidate_mask_from_scratch());
        }
    }

    #[test]
    fn incremental_mask_matches_probe_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let mut b = builder_new(4).unwrap();
            for _ in 0..rng.gen_range(0..9) {
                b.try_add(&decode(4, rng.gen_range(0..81)).unwrap());
            }
            let members = b.members();
            let oracle: Vec<u32> = (0..81)
                .filter(|&c| {
                    let p = decode(4, c).unwrap();
                    !members.contains(&p) && is_sidon(&members.with(p).unwrap())
                })
                .collect();
            assert_eq!(b.candidate_mask().iter().collect::<Vec<_>>(), oracle);
        }
    }

    #[test]
    fn acceptance_is_order_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let size = rng.gen_range(2..8);
            let s = random_set(&mut rng, 4, size);
            let mut order: Vec<Point> = s.points().to_vec();
            use rand::seq::SliceRandom;
            order.shuffle(&mut rng);
            let mut b = builder_new(4).unwrap();
            let all_accepted = order.iter().all(|p| b.try_add(p));
            assert_eq!(all_accepted, is_sidon(&s));
        }
    }

    #[test]
    fn completeness_examples() {
        assert!(is_complete(&c1(), 2).unwrap());
        let four = set(3, &["000", "100", "010", "001"]);
        assert!(!is_complete(&four, 2).unwrap());
        let line = set(3, &["000", "100", "200"]);
        assert_eq!(is_complete(&line, 2), Err(CapError::NotACap(2)));
    }
}
