//! The structured result document written by every command, and its plain
//! text rendering.
//!
//! Documents hold no wall-clock data unless asked to, so repeated runs with
//! the same inputs and seed serialize to identical bytes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::hypothesis::{MeanDifferenceCI, TestReport, Verdict};
use crate::sim::SimResult;

pub const FORMAT_VERSION: u32 = 1;

/// Echo of the options a command ran with.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_column: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_replace: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub group: String,
    pub model: String,
    /// Rendered tree with edge parameters, for nested fits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<String>,
    /// Dirichlet parameters, for flat fits.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alpha: Vec<f64>,
    pub means: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub log_likelihood: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeRankEntry {
    pub tree: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_likelihood: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aic: Option<f64>,
    pub n_parameters: usize,
    /// Why the tree was ruled out, if it was.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filtered: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub tool: String,
    pub version: String,
    pub format_version: u32,
    pub config: AnalysisConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub component_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fits: Vec<FittedModel>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tests: Vec<TestReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub intervals: Vec<MeanDifferenceCI>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tree_ranking: Vec<TreeRankEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Seconds since the Unix epoch; only set on request.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl ResultDocument {
    pub fn new(config: AnalysisConfig) -> Self {
        ResultDocument {
            tool: "dirtree".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            format_version: FORMAT_VERSION,
            config,
            component_names: Vec::new(),
            fits: Vec::new(),
            tests: Vec::new(),
            verdict: None,
            intervals: Vec::new(),
            tree_ranking: Vec::new(),
            simulation: None,
            correlation: None,
            notes: Vec::new(),
            timestamp: None,
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_text(&self) -> String {
        render_text(self)
    }
}

fn fmt_vec(v: &[f64], digits: usize) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.digits$}")).collect();
    format!("({})", parts.join(", "))
}

fn fmt_p(p: f64) -> String {
    if p < 1e-4 {
        format!("{p:.3e}")
    } else {
        format!("{p:.4}")
    }
}

pub fn render_text(doc: &ResultDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} : {}", doc.tool, doc.version, doc.config.command);
    if let Some(input) = &doc.config.input {
        let _ = writeln!(out, "input: {input}");
    }
    if !doc.component_names.is_empty() {
        let _ = writeln!(out, "components: {}", doc.component_names.join(", "));
    }

    for f in &doc.fits {
        let _ = writeln!(out, "\n[{} fit] group {} (n = {})", f.model, f.group, f.n);
        if let Some(t) = &f.tree {
            let _ = writeln!(out, "  tree: {t}");
        }
        if !f.alpha.is_empty() {
            let _ = writeln!(
                out,
                "  alpha: {}  precision: {:.4}",
                fmt_vec(&f.alpha, 4),
                f.alpha.iter().sum::<f64>()
            );
        }
        let _ = writeln!(out, "  means: {}", fmt_vec(&f.means, 4));
        let _ = writeln!(out, "  SEs:   {}", fmt_vec(&f.standard_errors, 4));
        let _ = writeln!(out, "  log-likelihood: {:.4}", f.log_likelihood);
    }

    for t in &doc.tests {
        let _ = writeln!(out, "\n[{}]", t.method);
        match t.df2 {
            Some(df2) => {
                let _ = writeln!(out, "  statistic: {:.4}  df: ({}, {})  p: {}", t.statistic, t.df, df2, fmt_p(t.p_value));
            }
            None => {
                let _ = writeln!(out, "  statistic: {:.4}  df: {}  p: {}", t.statistic, t.df, fmt_p(t.p_value));
            }
        }
        for s in &t.subtree_statistics {
            let _ = writeln!(
                out,
                "  {:<16} statistic: {:.4}  df: {}  p: {}",
                s.node,
                s.statistic,
                s.df,
                fmt_p(s.p_value)
            );
        }
        for (name, fits) in [("H0", &t.h0_fit), ("H1", &t.h1_fit)] {
            for f in fits.iter() {
                let _ = writeln!(out, "  {name} {}: alpha {}", f.label, fmt_vec(&f.alpha, 4));
            }
        }
    }
    if let Some(v) = doc.verdict {
        let _ = writeln!(out, "\nverdict: {v}");
    }

    if !doc.intervals.is_empty() {
        let level = doc.intervals[0].adjusted_level;
        let _ = writeln!(out, "\n[mean differences, per-interval level {level:.4}]");
        let _ = writeln!(out, "  {:<10} {:>8} {:>8} {:>8} {:>8}  interval", "component", "est 1", "est 2", "diff", "SE");
        for c in &doc.intervals {
            let _ = writeln!(
                out,
                "  {:<10} {:>8.4} {:>8.4} {:>8.4} {:>8.4}  ({:.4}, {:.4})",
                c.component, c.est_1, c.est_2, c.diff, c.se_diff, c.lower, c.upper
            );
        }
    }

    if !doc.tree_ranking.is_empty() {
        let _ = writeln!(out, "\n[tree ranking]");
        for (i, r) in doc.tree_ranking.iter().enumerate() {
            match (&r.filtered, r.log_likelihood) {
                (Some(why), _) => {
                    let _ = writeln!(out, "  -  {}  filtered: {why}", r.tree);
                }
                (None, Some(ll)) => {
                    let _ = writeln!(
                        out,
                        "  {:>2} {}  log-likelihood {:.4}  AIC {:.4}  params {}",
                        i + 1,
                        r.tree,
                        ll,
                        r.aic.unwrap_or(f64::NAN),
                        r.n_parameters
                    );
                }
                (None, None) => {
                    let _ = writeln!(out, "  -  {}  fit failed", r.tree);
                }
            }
        }
    }

    if let Some(s) = &doc.simulation {
        let _ = writeln!(
            out,
            "\n[simulation] replicates {}  level {}  seed {}",
            s.replicates, s.level, s.master_seed
        );
        for c in &s.categories {
            let _ = writeln!(
                out,
                "  {:<16} count {:>7}  rate {:.4}  MC SE {:.4}",
                c.category, c.count, c.rate, c.mc_se
            );
        }
        let _ = writeln!(out, "  failed replicates: {}", s.failed);
        if let Some(t) = s.wall_time_secs {
            let _ = writeln!(out, "  wall time: {t:.2} s");
        }
    }

    if let Some(m) = &doc.correlation {
        let _ = writeln!(out, "\n[correlation]");
        let _ = write!(out, "  {:>8}", "");
        for n in &doc.component_names {
            let _ = write!(out, " {n:>8}");
        }
        out.push('\n');
        for (i, row) in m.iter().enumerate() {
            let name = doc.component_names.get(i).map(String::as_str).unwrap_or("");
            let _ = write!(out, "  {name:>8}");
            for v in row {
                let _ = write!(out, " {v:>8.3}");
            }
            out.push('\n');
        }
    }

    for n in &doc.notes {
        let _ = writeln!(out, "\nnote: {n}");
    }
    if let Some(ts) = doc.timestamp {
        let _ = writeln!(out, "\ntimestamp: {ts}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesis::{FittedDirichlet, SubtreeStatistic, TestMethod};

    fn sample_doc() -> ResultDocument {
        let mut doc = ResultDocument::new(AnalysisConfig {
            command: "test".into(),
            input: Some("data.csv".into()),
            level: Some(0.95),
            seed: Some(7),
            ..Default::default()
        });
        doc.component_names = vec!["TQ".into(), "AQ1".into()];
        doc.tests.push(TestReport {
            method: TestMethod::TwoSampleNddLrt,
            statistic: 6.077,
            df: 3,
            df2: None,
            p_value: 0.1 + 0.2,
            h0_fit: vec![FittedDirichlet {
                label: "root WT".into(),
                alpha: vec![1.0 / 3.0, 2.5],
                log_likelihood: -1.234_567_890_123_456_7,
            }],
            h1_fit: Vec::new(),
            subtree_statistics: vec![SubtreeStatistic {
                node: "root".into(),
                statistic: 2.735,
                df: 1,
                p_value: 0.098,
            }],
        });
        doc
    }

    #[test]
    fn json_round_trip_is_exact() {
        let doc = sample_doc();
        let text = doc.to_json().unwrap();
        let back = ResultDocument::from_json(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.tests[0].p_value.to_bits(), (0.1f64 + 0.2).to_bits());
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn no_timestamp_by_default() {
        let text = sample_doc().to_json().unwrap();
        assert!(!text.contains("timestamp"));
        assert!(!text.contains("wall_time"));
    }

    #[test]
    fn text_mentions_subtrees() {
        let text = sample_doc().to_text();
        assert!(text.contains("two-sample nested Dirichlet LRT"));
        assert!(text.contains("root"));
        assert!(text.contains("6.0770"));
    }
}
