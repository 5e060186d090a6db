//! Search modes. Each mode turns a config into a plan: the root caps to walk
//! from, the lowest code children may take, and how ties are treated.

use std::collections::BTreeMap;

use super::engine::Policy;
use super::SearchConfig;
use crate::error::{CapError, Result};
use crate::space::{pow3, CapSet};

/// A subtree to search: caps containing `members` whose remaining points
/// all have code at least `min_child`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Root {
    pub members: Vec<u32>,
    pub min_child: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchPlan {
    pub roots: Vec<Root>,
    pub policy: Policy,
    /// Smallest cap size worth reporting.
    pub floor: usize,
}

pub trait SearchStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    fn summary(&self) -> &'static str;

    fn plan(&self, config: &SearchConfig) -> Result<SearchPlan>;
}

fn floor_of(config: &SearchConfig) -> usize {
    config.target.map_or(0, |t| t + 1)
}

/// Unreduced search from the empty cap.
pub struct Full;

impl SearchStrategy for Full {
    fn name(&self) -> &'static str {
        "full"
    }

    fn summary(&self) -> &'static str {
        "every cap of the space, no symmetry reduction"
    }

    fn plan(&self, config: &SearchConfig) -> Result<SearchPlan> {
        let (n, d) = (config.n, config.d);
        let max_n = match d {
            2 => 4,
            _ => 3,
        };
        if n > max_n {
            return Err(CapError::Infeasible(format!(
                "full search of order {d} is limited to n <= {max_n}; use prefix_reduced for larger n"
            )));
        }
        if config.seed.is_some() {
            return Err(CapError::InvalidParams(
                "full search takes no seed; use completion".into(),
            ));
        }
        Ok(SearchPlan {
            roots: vec![Root {
                members: Vec::new(),
                min_child: 0,
            }],
            policy: Policy::Improve,
            floor: floor_of(config),
        })
    }
}

/// Every maximum cap can be moved by an affine map so that its earliest
/// points are one of two fixed prefixes; only those subtrees are searched.
pub struct PrefixReduced;

/// The normalized prefixes for dimension `n`, as code lists.
pub fn normalized_prefixes(n: usize) -> Vec<Vec<u32>> {
    let e = |i: usize| pow3(n - i);
    match n {
        0 => vec![vec![0]],
        1 | 2 => vec![std::iter::once(0).chain((1..=n).rev().map(e)).collect()],
        3 => {
            let frame = vec![0, e(3), e(2), e(1)];
            let mut with_diag = frame.clone();
            with_diag.push(e(1) + e(2) + e(3));
            vec![with_diag, frame]
        }
        _ => {
            let frame = [0, e(n), e(n - 1), e(n - 2)];
            let diag = e(n - 2) + e(n - 1) + e(n);
            let mut p1 = frame.to_vec();
            p1.extend([diag, e(n - 3)]);
            let mut p2 = frame.to_vec();
            p2.push(e(n - 3));
            vec![p1, p2]
        }
    }
}

impl SearchStrategy for PrefixReduced {
    fn name(&self) -> &'static str {
        "prefix_reduced"
    }

    fn summary(&self) -> &'static str {
        "order-2 caps whose earliest points match a normalized prefix"
    }

    fn plan(&self, config: &SearchConfig) -> Result<SearchPlan> {
        if config.d != 2 {
            return Err(CapError::InvalidParams(format!(
                "prefix_reduced search needs d = 2, got {}",
                config.d
            )));
        }
        if config.seed.is_some() {
            return Err(CapError::InvalidParams(
                "prefix_reduced search takes no seed; use completion".into(),
            ));
        }
        let roots = normalized_prefixes(config.n)
            .into_iter()
            .map(|members| {
                let min_child = members.iter().max().map_or(0, |&m| m + 1);
                Root { members, min_child }
            })
            .collect();
        Ok(SearchPlan {
            roots,
            policy: Policy::Improve,
            floor: floor_of(config),
        })
    }
}

/// Every complete cap containing a seed.
pub struct Completion;

impl SearchStrategy for Completion {
    fn name(&self) -> &'static str {
        "completion"
    }

    fn summary(&self) -> &'static str {
        "complete caps containing a seed cap"
    }

    fn plan(&self, config: &SearchConfig) -> Result<SearchPlan> {
        let seed: &CapSet = config
            .seed
            .as_ref()
            .ok_or_else(|| CapError::InvalidParams("completion search needs a seed".into()))?;
        Ok(SearchPlan {
            roots: vec![Root {
                members: seed.codes(),
                min_child: 0,
            }],
            policy: Policy::KeepTies,
            floor: floor_of(config),
        })
    }
}

pub struct StrategyRegistry {
    strategies: BTreeMap<&'static str, Box<dyn SearchStrategy>>,
    aliases: BTreeMap<&'static str, &'static str>,
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(Full));
        r.register(Box::new(PrefixReduced));
        r.register(Box::new(Completion));
        r.alias("prefix", "prefix_reduced");
        r
    }
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        StrategyRegistry {
            strategies: BTreeMap::new(),
            aliases: BTreeMap::new(),
        }
    }

    /// Adds a strategy, replacing any with the same name.
    pub fn register(&mut self, s: Box<dyn SearchStrategy>) {
        self.strategies.insert(s.name(), s);
    }

    pub fn alias(&mut self, alias: &'static str, target: &'static str) {
        self.aliases.insert(alias, target);
    }

    pub fn get(&self, name: &str) -> Result<&dyn SearchStrategy> {
        let key = self.aliases.get(name).copied().unwrap_or(name);
        self.strategies
            .get(key)
            .map(|s| s.as_ref())
            .ok_or_else(|| CapError::UnknownStrategy {
                kind: "search mode",
                name: name.to_string(),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.strategies.keys().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefixes_in_five_dimensions() {
        // e5 = 1, e4 = 3, e3 = 9, e2 = 27, e3 + e4 + e5 = 13
        assert_eq!(
            normalized_prefixes(5),
            vec![vec![0, 1, 3, 9, 13, 27], vec![0, 1, 3, 9, 27]]
        );
        assert_eq!(normalized_prefixes(2), vec![vec![0, 1, 3]]);
        assert_eq!(normalized_prefixes(3)[0], vec![0, 1, 3, 9, 13]);
    }

    #[test]
    fn registry_resolves_aliases() {
        let r = StrategyRegistry::default();
        assert_eq!(r.get("prefix").unwrap().name(), "prefix_reduced");
        assert_eq!(r.names(), vec!["completion", "full", "prefix_reduced"]);
        assert!(matches!(
            r.get("annealing"),
            Err(CapError::UnknownStrategy { .. })
        ));
    }
}
