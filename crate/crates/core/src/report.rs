//! Aggregation of score records into per-role tables.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::metrics::MetricId;
use crate::model::{QueryRecord, ScoreRecord, SrlRole};

pub const ALL_ROLES: &str = "ALL";

/// Column order of the role tables.
const ROLE_ORDER: [&str; 5] = ["ARG0", "V", "ARG1", "ARG2", "LOC"];

/// Unweighted means over one (metric, role) group. Contrastive and
/// consistency means cover only the `paired` records that carry them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub metric: MetricId,
    pub role: String,
    pub count: usize,
    pub paired: usize,
    pub direct: f64,
    pub relative: f64,
    pub contrastive: BTreeMap<String, f64>,
    pub consistency: BTreeMap<String, f64>,
}

#[derive(Default)]
struct Acc {
    count: usize,
    direct: f64,
    relative: f64,
    contrastive: BTreeMap<String, (f64, usize)>,
    consistency: BTreeMap<String, (f64, usize)>,
}

impl Acc {
    fn add(&mut self, r: &ScoreRecord) {
        self.count += 1;
        self.direct += r.direct;
        self.relative += r.relative;
        for (t, v) in &r.contrastive {
            let e = self.contrastive.entry(t.clone()).or_default();
            e.0 += v;
            e.1 += 1;
        }
        for (t, v) in &r.consistency {
            let e = self.consistency.entry(t.clone()).or_default();
            e.0 += f64::from(*v);
            e.1 += 1;
        }
    }

    fn finish(self, metric: MetricId, role: String) -> GroupStats {
        let n = self.count as f64;
        let mean = |m: BTreeMap<String, (f64, usize)>| -> BTreeMap<String, f64> {
            m.into_iter().map(|(t, (s, k))| (t, s / k as f64)).collect()
        };
        GroupStats {
            metric,
            role,
            count: self.count,
            paired: self.contrastive.values().map(|(_, k)| *k).max().unwrap_or(0),
            direct: self.direct / n,
            relative: self.relative / n,
            contrastive: mean(self.contrastive),
            consistency: mean(self.consistency),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub metrics: Vec<MetricId>,
    /// Role columns present in the records, ending with [`ALL_ROLES`].
    pub roles: Vec<String>,
    pub groups: Vec<GroupStats>,
}

fn threshold_order(keys: impl Iterator<Item = String>) -> Vec<String> {
    let mut keys: Vec<String> = keys.collect::<BTreeSet<_>>().into_iter().collect();
    keys.sort_by(|a, b| {
        let x: f64 = a.parse().unwrap_or(f64::INFINITY);
        let y: f64 = b.parse().unwrap_or(f64::INFINITY);
        x.total_cmp(&y).then_with(|| a.cmp(b))
    });
    keys
}

/// Groups records by metric and the masked role of their query. Records whose
/// query is not in `queries` count toward [`ALL_ROLES`] only.
pub fn aggregate(records: &[ScoreRecord], queries: &[QueryRecord]) -> Report {
    let role_of: HashMap<&str, &SrlRole> = queries
        .iter()
        .map(|q| (q.query_id.as_str(), &q.masked_role))
        .collect();
    let mut accs: BTreeMap<(MetricId, String), Acc> = BTreeMap::new();
    let mut seen_roles = BTreeSet::new();
    for r in records {
        if let Some(role) = role_of.get(r.query_id.as_str()) {
            let label = role.label().to_string();
            seen_roles.insert(label.clone());
            accs.entry((r.metric, label)).or_default().add(r);
        }
        accs.entry((r.metric, ALL_ROLES.to_string())).or_default().add(r);
    }
    let mut roles: Vec<String> = ROLE_ORDER
        .iter()
        .filter(|r| seen_roles.contains(**r))
        .map(|r| r.to_string())
        .collect();
    roles.extend(seen_roles.iter().filter(|r| !ROLE_ORDER.contains(&r.as_str())).cloned());
    roles.push(ALL_ROLES.to_string());

    let metrics: Vec<MetricId> = MetricId::ALL
        .into_iter()
        .filter(|m| accs.keys().any(|(k, _)| k == m))
        .collect();
    let mut groups = Vec::new();
    for m in &metrics {
        for role in &roles {
            if let Some(acc) = accs.remove(&(*m, role.clone())) {
                groups.push(acc.finish(*m, role.clone()));
            }
        }
    }
    Report {
        metrics,
        roles,
        groups,
    }
}

impl Report {
    pub fn group(&self, metric: MetricId, role: &str) -> Option<&GroupStats> {
        self.groups.iter().find(|g| g.metric == metric && g.role == role)
    }

    fn cs_keys(&self) -> Vec<String> {
        threshold_order(self.groups.iter().flat_map(|g| g.contrastive.keys().cloned()))
    }

    fn cons_keys(&self) -> Vec<String> {
        threshold_order(self.groups.iter().flat_map(|g| g.consistency.keys().cloned()))
    }

    /// Aligned text: an overview row per role with `R-*` columns at the lowest
    /// contrastive threshold, then one Direct / Rel Score / CS@t / Cons block
    /// per metric.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let cs_keys = self.cs_keys();
        let cons_keys = self.cons_keys();
        let cs0 = cs_keys.first();
        // consistency column follows the first metric in report order
        let cons_metric = self.metrics.first().copied();
        let cons_key = cons_keys.first();

        let mut header = vec![String::from("role")];
        for m in &self.metrics {
            header.push(format!("R-{}", m.short()));
            if Some(*m) == cons_metric {
                header.push("Cons".into());
            }
        }
        let mut rows = vec![header];
        for role in &self.roles {
            let mut row = vec![role.clone()];
            for m in &self.metrics {
                let g = self.group(*m, role);
                row.push(cell(g.and_then(|g| cs0.and_then(|k| g.contrastive.get(k)))));
                if Some(*m) == cons_metric {
                    row.push(cell(g.and_then(|g| cons_key.and_then(|k| g.consistency.get(k)))));
                }
            }
            rows.push(row);
        }
        match cs0 {
            Some(t) => {
                let _ = writeln!(out, "R-*: contrastive score at threshold {t}");
            }
            None => {
                let _ = writeln!(out, "R-*: no contrastive pairs");
            }
        }
        if let (Some(m), Some(t)) = (cons_metric, cons_key) {
            let _ = writeln!(out, "Cons: {m} consistency at threshold {t}");
        }
        out.push_str(&align(&rows));

        for m in &self.metrics {
            let _ = writeln!(out, "\n{m}");
            let mut header = vec![String::new()];
            header.extend(self.roles.iter().cloned());
            let mut rows = vec![header];
            let mut line = |label: String, f: &dyn Fn(&GroupStats) -> Option<String>| {
                let mut row = vec![label];
                for role in &self.roles {
                    row.push(self.group(*m, role).and_then(f).unwrap_or_else(|| "-".into()));
                }
                rows.push(row);
            };
            line("n".into(), &|g| Some(g.count.to_string()));
            line("Direct".into(), &|g| Some(cell(Some(&g.direct))));
            line("Rel Score".into(), &|g| Some(cell(Some(&g.relative))));
            for k in &cs_keys {
                line(format!("CS@{k}"), &|g| g.contrastive.get(k).map(|v| cell(Some(v))));
            }
            for k in &cons_keys {
                line(format!("Cons@{k}"), &|g| g.consistency.get(k).map(|v| cell(Some(v))));
            }
            out.push_str(&align(&rows));
        }
        out
    }

    /// One canonical JSON line per group.
    pub fn render_records(&self) -> String {
        crate::records::to_canonical_string(&self.groups)
    }
}

fn cell(v: Option<&f64>) -> String {
    match v {
        Some(v) => format!("{v:.4}"),
        None => "-".into(),
    }
}

fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (c, v) in row.iter().enumerate() {
            if c == 0 {
                let _ = write!(line, "{v:<w$}", w = widths[c]);
            } else {
                let _ = write!(line, "  {v:>w$}", w = widths[c]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}
