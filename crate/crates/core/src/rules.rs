//! Per-order exclusion rules: which points stop being addable once a new
//! member joins a d-cap.

use itertools::Itertools;

use crate::bits::CodeMask;
use crate::error::{CapError, Result};
use crate::search::upper_bound_counting;
use crate::sidon::sidon_forbid;
use crate::space::{affinely_independent, CodeSpace, Point};

pub trait CapRule: Send + Sync {
    /// The cap order d.
    fn order(&self) -> u32;

    /// Clears from `mask` every point that can no longer join `members`,
    /// given that `mask` was exact before the last member was added.
    fn forbid(&self, space: &CodeSpace, members: &[u32], mask: &mut CodeMask);

    /// A cheap upper bound on the size of any d-cap in F_3^n, if one is known.
    fn size_bound(&self, _n: usize) -> Option<usize> {
        None
    }

    /// The exact candidate mask of `members`, built one member at a time.
    fn candidates_of(&self, space: &CodeSpace, members: &[u32]) -> CodeMask {
        let mut mask = CodeMask::full(space.size());
        for i in 1..=members.len() {
            self.forbid(space, &members[..i], &mut mask);
        }
        mask
    }
}

/// d = 1: no three collinear points.
pub struct LineRule;

impl CapRule for LineRule {
    fn order(&self) -> u32 {
        1
    }

    fn forbid(&self, space: &CodeSpace, members: &[u32], mask: &mut CodeMask) {
        let Some((&p, old)) = members.split_last() else {
            return;
        };
        mask.remove(p);
        for &c in old {
            mask.remove(space.neg(space.add(p, c)));
        }
    }
}

/// d = 2, checked through pairwise sums.
pub struct SidonRule;

impl CapRule for SidonRule {
    fn order(&self) -> u32 {
        2
    }

    fn forbid(&self, space: &CodeSpace, members: &[u32], mask: &mut CodeMask) {
        sidon_forbid(space, members, mask);
    }

    fn size_bound(&self, n: usize) -> Option<usize> {
        Some(upper_bound_counting(n))
    }
}

/// Any order, checked by affine independence of every small subset that
/// contains the new member. Only practical in small dimension.
pub struct FlatRule {
    pub order: u32,
}

impl CapRule for FlatRule {
    fn order(&self) -> u32 {
        self.order
    }

    fn forbid(&self, space: &CodeSpace, members: &[u32], mask: &mut CodeMask) {
        let Some((&p, old)) = members.split_last() else {
            return;
        };
        let n = space.dim();
        mask.remove(p);
        let p = Point::decode(n, p).expect("code in range");
        let old: Vec<Point> = old
            .iter()
            .map(|&c| Point::decode(n, c).expect("code in range"))
            .collect();
        let doomed: Vec<u32> = mask
            .iter()
            .filter(|&q| {
                let q = Point::decode(n, q).expect("code in range");
                (1..=self.order as usize).any(|t| {
                    old.iter().copied().combinations(t).any(|mut subset| {
                        subset.push(p);
                        subset.push(q);
                        !affinely_independent(&subset)
                    })
                })
            })
            .collect();
        for q in doomed {
            mask.remove(q);
        }
    }

    fn size_bound(&self, n: usize) -> Option<usize> {
        let basis = (n <= self.order as usize).then_some(n + 1);
        let counting = (self.order >= 2).then(|| upper_bound_counting(n));
        basis.into_iter().chain(counting).min()
    }
}

/// The fastest rule for order `d`.
pub fn rule_for_order(d: u32) -> Result<Box<dyn CapRule>> {
    match d {
        0 => Err(CapError::InvalidOrder(d)),
        1 => Ok(Box::new(LineRule)),
        2 => Ok(Box::new(SidonRule)),
        _ => Ok(Box::new(FlatRule { order: d })),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sidon::is_d_cap;
    use crate::space::{pow3, CapSet};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Probe oracle: q is a candidate iff members + q is a d-cap.
    fn probe(n: usize, d: u32, members: &[u32]) -> Vec<u32> {
        (0..pow3(n))
            .filter(|q| !members.contains(q))
            .filter(|&q| {
                let s = CapSet::from_codes(n, members.iter().copied().chain([q])).unwrap();
                is_d_cap(&s, d).unwrap()
            })
            .collect()
    }

    #[test]
    fn rules_match_probe_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for (n, d) in [(2, 1), (3, 1), (3, 2), (4, 2), (3, 3), (2, 3), (4, 3)] {
            let space = CodeSpace::new(n).unwrap();
            let rule = rule_for_order(d).unwrap();
            let flat = FlatRule { order: d };
            for _ in 0..20 {
                // grow a random cap through the rule itself
                let mut members = Vec::new();
                let mut mask = CodeMask::full(space.size());
                let target = rng.gen_range(0..6);
                while members.len() < target {
                    let cands: Vec<u32> = mask.iter().collect();
                    if cands.is_empty() {
                        break;
                    }
                    members.push(cands[rng.gen_range(0..cands.len())]);
                    rule.forbid(&space, &members, &mut mask);
                }
                let expected = probe(n, d, &members);
                assert_eq!(mask.iter().collect::<Vec<_>>(), expected, "n={n} d={d}");
                let generic = flat.candidates_of(&space, &members);
                assert_eq!(generic.iter().collect::<Vec<_>>(), expected);
            }
        }
    }

    #[test]
    fn size_bounds() {
        assert_eq!(SidonRule.size_bound(7), Some(47));
        assert_eq!(FlatRule { order: 3 }.size_bound(3), Some(4));
        assert_eq!(FlatRule { order: 3 }.size_bound(5), Some(16));
        assert_eq!(LineRule.size_bound(3), None);
        assert!(rule_for_order(0).is_err());
    }
}
