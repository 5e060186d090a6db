//! The JSON report written by `search` and `bounds`. Field order is fixed by
//! the struct and timing is left out, so equal results give equal bytes.

use serde::{Deserialize, Serialize};

use capsearch::search::{BoundRecord, ConfigEcho, SearchReport};
use capsearch::sidon::{is_d_cap, is_sidon};
use capsearch::space::CapSet;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub nodes_expanded: u64,
    pub complete_caps_visited: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub command: String,
    pub config: serde_json::Value,
    pub max_size: Option<usize>,
    pub witness: Vec<String>,
    pub counts: Option<Counts>,
    pub exhausted: Option<bool>,
    pub bound_records: Vec<BoundRecord>,
    pub tool_version: String,
}

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

impl ReportDocument {
    pub fn from_search(r: &SearchReport) -> Self {
        ReportDocument {
            command: "search".into(),
            config: serde_json::to_value(&r.config).expect("config serializes"),
            max_size: Some(r.max_size),
            witness: r.witness.iter().map(|p| p.to_string()).collect(),
            counts: Some(Counts {
                nodes_expanded: r.nodes_expanded,
                complete_caps_visited: r.complete_caps_visited,
            }),
            exhausted: Some(r.exhausted),
            bound_records: Vec::new(),
            tool_version: TOOL_VERSION.into(),
        }
    }

    pub fn from_bounds(n_max: usize, records: Vec<BoundRecord>) -> Self {
        ReportDocument {
            command: "bounds".into(),
            config: serde_json::json!({ "n_max": n_max, "d": 2 }),
            max_size: None,
            witness: Vec::new(),
            counts: None,
            exhausted: None,
            bound_records: records,
            tool_version: TOOL_VERSION.into(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn search_config(&self) -> Option<ConfigEcho> {
        serde_json::from_value(self.config.clone()).ok()
    }

    /// The witness as a point set, if it parses in dimension `n`.
    pub fn witness_set(&self, n: usize) -> Option<CapSet> {
        CapSet::parse(n, &self.witness).ok()
    }

    /// A search report whose witness is a valid cap of the stated size.
    pub fn witness_checks_out(&self) -> bool {
        let Some(config) = self.search_config() else {
            return false;
        };
        let Some(w) = self.witness_set(config.n) else {
            return false;
        };
        if Some(w.len()) != self.max_size {
            return false;
        }
        if w.is_empty() {
            return true;
        }
        if config.d == 2 {
            is_sidon(&w)
        } else {
            is_d_cap(&w, config.d).unwrap_or(false)
        }
    }
}
