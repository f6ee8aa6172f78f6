use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Label column value for rows pooled over all gold labels.
pub const ALL_LABELS: &str = "All";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Comp,
    Suff,
    CompNorm,
    SuffNorm,
    CompAopc,
    SuffAopc,
    CompAopcNorm,
    SuffAopcNorm,
    Pha,
    PhaNorm,
}

impl Metric {
    pub const ALL: [Metric; 10] = [
        Metric::Comp,
        Metric::Suff,
        Metric::CompNorm,
        Metric::SuffNorm,
        Metric::CompAopc,
        Metric::SuffAopc,
        Metric::CompAopcNorm,
        Metric::SuffAopcNorm,
        Metric::Pha,
        Metric::PhaNorm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Comp => "comp",
            Metric::Suff => "suff",
            Metric::CompNorm => "comp_norm",
            Metric::SuffNorm => "suff_norm",
            Metric::CompAopc => "comp_aopc",
            Metric::SuffAopc => "suff_aopc",
            Metric::CompAopcNorm => "comp_aopc_norm",
            Metric::SuffAopcNorm => "suff_aopc_norm",
            Metric::Pha => "pha",
            Metric::PhaNorm => "pha_norm",
        }
    }

    /// Sufficiency drops are better when small; everything else when large.
    pub fn higher_is_better(self) -> bool {
        !matches!(self, Metric::Suff | Metric::SuffNorm | Metric::SuffAopc | Metric::SuffAopcNorm)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| format!("unknown metric '{s}'"))
    }
}

/// Scores of one perturbation unit (one selection of one instance).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitScores {
    pub instance_id: String,
    pub label: String,
    #[serde(rename = "type")]
    pub kind: String,
    pub level: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator: Option<String>,
    /// Annotators agreeing on the unit's interactions, when split by agreement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agreement: Option<usize>,
    pub values: BTreeMap<Metric, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub label: String,
    #[serde(rename = "type")]
    pub kind: String,
    pub level: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agreement: Option<usize>,
    pub metric: Metric,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub metric: Metric,
    pub level: String,
    #[serde(rename = "type")]
    pub kind: String,
    pub mean: f64,
    pub rank: usize,
    pub total: usize,
    /// `rank/total`.
    pub band: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub instance_id: String,
    pub unit: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    /// `annotations` or `explanations`.
    pub source: String,
    pub instances: usize,
    pub models: Vec<String>,
    pub cells: Vec<Cell>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub agreement_cells: Vec<Cell>,
    pub ranking: Vec<RankRow>,
    pub failures: Vec<Failure>,
}

type Key = (String, String, String, Option<usize>, Metric);

fn key_of(c: &Cell) -> Key {
    (c.label.clone(), c.kind.clone(), c.level.clone(), c.agreement, c.metric)
}

fn cell((label, kind, level, agreement, metric): Key, n: usize, mean: f64, std: f64) -> Cell {
    Cell { label, kind, level, agreement, metric, mean, std, n }
}

/// Mean and population std of every `(label, type, level, metric)` cell,
/// with each unit counted under its label and under [`ALL_LABELS`].
/// Units with an `agreement` value are pooled per agreement size.
pub fn aggregate(units: &[UnitScores]) -> Vec<Cell> {
    let mut groups: BTreeMap<Key, Vec<f64>> = BTreeMap::new();
    for u in units {
        for (&metric, &v) in &u.values {
            for label in [u.label.as_str(), ALL_LABELS] {
                groups
                    .entry((label.to_string(), u.kind.clone(), u.level.clone(), u.agreement, metric))
                    .or_default()
                    .push(v);
            }
        }
    }
    groups
        .into_iter()
        .map(|(key, vs)| {
            let n = vs.len() as f64;
            let mean = vs.iter().sum::<f64>() / n;
            let var = vs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            cell(key, vs.len(), mean, var.sqrt())
        })
        .collect()
}

/// Pools matching cells from several reports (e.g. one per model) as if
/// their records had been aggregated together.
pub fn pool_cells<'a>(cells: impl IntoIterator<Item = &'a Cell>) -> Vec<Cell> {
    let mut groups: BTreeMap<Key, Vec<&Cell>> = BTreeMap::new();
    for c in cells {
        groups.entry(key_of(c)).or_default().push(c);
    }
    groups
        .into_iter()
        .map(|(key, cs)| {
            let n: usize = cs.iter().map(|c| c.n).sum();
            let total = n as f64;
            let mean = cs.iter().map(|c| c.n as f64 * c.mean).sum::<f64>() / total;
            let var = cs
                .iter()
                .map(|c| c.n as f64 * (c.std * c.std + (c.mean - mean) * (c.mean - mean)))
                .sum::<f64>()
                / total;
            cell(key, n, mean, var.max(0.0).sqrt())
        })
        .collect()
}

/// Ranks the types of every `(metric, level)` on the all-label rows, best
/// first. Equal means share a rank.
pub fn rank_types(cells: &[Cell]) -> Vec<RankRow> {
    let mut groups: BTreeMap<(Metric, String), Vec<&Cell>> = BTreeMap::new();
    for c in cells.iter().filter(|c| c.label == ALL_LABELS && c.agreement.is_none()) {
        groups.entry((c.metric, c.level.clone())).or_default().push(c);
    }
    let mut rows = Vec::new();
    for ((metric, level), mut cs) in groups {
        cs.sort_by(|a, b| {
            let ord = a.mean.total_cmp(&b.mean);
            let ord = if metric.higher_is_better() { ord.reverse() } else { ord };
            ord.then_with(|| a.kind.cmp(&b.kind))
        });
        let total = cs.len();
        let mut rank = 0;
        for (i, c) in cs.iter().enumerate() {
            if i == 0 || c.mean != cs[i - 1].mean {
                rank = i + 1;
            }
            rows.push(RankRow {
                metric,
                level: level.clone(),
                kind: c.kind.clone(),
                mean: c.mean,
                rank,
                total,
                band: format!("{rank}/{total}"),
            });
        }
    }
    rows
}

impl EvalReport {
    pub fn new(dataset: String, source: &str, instances: usize, units: &[UnitScores], failures: Vec<Failure>) -> Self {
        let (split, plain): (Vec<UnitScores>, Vec<UnitScores>) =
            units.iter().cloned().partition(|u| u.agreement.is_some());
        let cells = aggregate(&plain);
        EvalReport {
            dataset,
            source: source.to_string(),
            instances,
            models: Vec::new(),
            ranking: rank_types(&cells),
            cells,
            agreement_cells: aggregate(&split),
            failures,
        }
    }

    /// Pools reports on the same dataset, typically one per model.
    pub fn merge(reports: &[EvalReport]) -> Option<EvalReport> {
        let first = reports.first()?;
        let cells = pool_cells(reports.iter().flat_map(|r| &r.cells));
        Some(EvalReport {
            dataset: first.dataset.clone(),
            source: first.source.clone(),
            instances: first.instances,
            models: reports.iter().flat_map(|r| r.models.iter().cloned()).collect(),
            ranking: rank_types(&cells),
            cells,
            agreement_cells: pool_cells(reports.iter().flat_map(|r| &r.agreement_cells)),
            failures: reports.iter().flat_map(|r| r.failures.iter().cloned()).collect(),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,label,type,level,metric,mean,std,n\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                self.dataset, c.label, c.kind, c.level, c.metric, c.mean, c.std, c.n
            );
        }
        out
    }

    pub fn agreement_csv(&self) -> String {
        let mut out = String::from("dataset,agreement,label,type,level,metric,mean,std,n\n");
        for c in &self.agreement_cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                self.dataset,
                c.agreement.unwrap_or(0),
                c.label,
                c.kind,
                c.level,
                c.metric,
                c.mean,
                c.std,
                c.n
            );
        }
        out
    }

    pub fn ranking_csv(&self) -> String {
        let mut out = String::from("dataset,metric,level,type,mean,rank,total,band\n");
        for r in &self.ranking {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                self.dataset, r.metric, r.level, r.kind, r.mean, r.rank, r.total, r.band
            );
        }
        out
    }

    /// One row per bar: facet by metric, bars by type, grouped by level.
    pub fn plot_csv(&self) -> String {
        let mut out = String::from("dataset,facet,x,group,y,err,n\n");
        for c in self.cells.iter().filter(|c| c.label == ALL_LABELS) {
            let _ = writeln!(out, "{},{},{},{},{},{},{}", self.dataset, c.metric, c.kind, c.level, c.mean, c.std, c.n);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(label: &str, kind: &str, vals: &[(Metric, f64)]) -> UnitScores {
        UnitScores {
            instance_id: "i".into(),
            label: label.into(),
            kind: kind.into(),
            level: "low".into(),
            annotator: None,
            agreement: None,
            values: vals.iter().copied().collect(),
        }
    }

    #[test]
    fn population_std() {
        let units = [unit("Neutral", "Synonym", &[(Metric::Comp, 1.0)]), unit("Entailment", "Synonym", &[(Metric::Comp, 3.0)])];
        let cells = aggregate(&units);
        let all = cells.iter().find(|c| c.label == ALL_LABELS).unwrap();
        assert_eq!((all.mean, all.std, all.n), (2.0, 1.0, 2));
        assert_eq!(cells.len(), 3);
    }

    #[test]
    fn pooling_matches_direct_aggregation() {
        let a = [unit("Neutral", "T", &[(Metric::Comp, 0.5)]), unit("Neutral", "T", &[(Metric::Comp, 0.1)])];
        let b = [unit("Neutral", "T", &[(Metric::Comp, 0.9)])];
        let both: Vec<UnitScores> = a.iter().chain(&b).cloned().collect();
        let direct = aggregate(&both);
        let pooled = pool_cells(aggregate(&a).iter().chain(aggregate(&b).iter()));
        for (d, p) in direct.iter().zip(&pooled) {
            assert_eq!(d.n, p.n);
            assert!((d.mean - p.mean).abs() < 1e-12);
            assert!((d.std - p.std).abs() < 1e-12);
        }
    }

    #[test]
    fn ranking_direction_and_ties() {
        let units = [
            unit("Neutral", "A", &[(Metric::Comp, 0.2), (Metric::Suff, 0.2)]),
            unit("Neutral", "B", &[(Metric::Comp, 0.5), (Metric::Suff, 0.5)]),
            unit("Neutral", "C", &[(Metric::Comp, 0.5), (Metric::Suff, 0.1)]),
        ];
        let rows = rank_types(&aggregate(&units));
        let get = |m: Metric, k: &str| rows.iter().find(|r| r.metric == m && r.kind == k).unwrap().band.clone();
        assert_eq!(get(Metric::Comp, "B"), "1/3");
        assert_eq!(get(Metric::Comp, "C"), "1/3");
        assert_eq!(get(Metric::Comp, "A"), "3/3");
        assert_eq!(get(Metric::Suff, "C"), "1/3");
        assert_eq!(get(Metric::Suff, "B"), "3/3");
    }
}
