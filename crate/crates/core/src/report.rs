//! Result tables and the text/CSV artefacts written by the command line.
//!
//! The in-process analysis goes through [`ResultTable`] exactly as a
//! results file read back from disk does, so re-analysing `results.csv`
//! reproduces `anova.txt` byte for byte.

use std::fmt::Write as _;

use thiserror::Error;

use crate::experiments::ReplicationResult;
use crate::metrics::OutcomeVar;
use crate::stats::{
    anova_oneway, corrected_alpha, effect_size_label, format_alpha, tukey_hsd, AnovaResult, Group,
    StatsError, TukeyResult,
};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("results file has no `{0}` column")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    BadValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("results file has no data rows")]
    Empty,
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Rows of outcome values keyed by sweep level. Missing cells are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub level: f64,
    pub replication: Option<u32>,
    pub seed: Option<u64>,
    pub values: Vec<Option<f64>>,
}

impl ResultTable {
    pub fn from_results(results: &[ReplicationResult]) -> Self {
        ResultTable {
            columns: OutcomeVar::ALL.iter().map(|v| v.name().to_string()).collect(),
            rows: results
                .iter()
                .map(|r| Row {
                    level: r.level,
                    replication: Some(r.replication),
                    seed: Some(r.seed),
                    values: OutcomeVar::ALL.iter().map(|v| v.get(&r.outcomes)).collect(),
                })
                .collect(),
        }
    }

    /// Header `level,replication,seed,<outcomes...>`; floats at full
    /// round-trip precision, absent values as empty cells.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let mut header = vec!["level".to_string(), "replication".into(), "seed".into()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for r in &self.rows {
            let mut rec = vec![
                r.level.to_string(),
                r.replication.map(|x| x.to_string()).unwrap_or_default(),
                r.seed.map(|x| x.to_string()).unwrap_or_default(),
            ];
            rec.extend(r.values.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("ascii")
    }

    /// Reads any CSV with a `level` column; every other column except
    /// `replication` and `seed` is treated as an outcome.
    pub fn parse_csv(text: &str) -> Result<Self, ReportError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let find = |name: &str| header.iter().position(|h| h == name);
        let level_ix = find("level").ok_or_else(|| ReportError::MissingColumn("level".into()))?;
        let rep_ix = find("replication");
        let seed_ix = find("seed");
        let value_ix: Vec<usize> = (0..header.len())
            .filter(|i| *i != level_ix && Some(*i) != rep_ix && Some(*i) != seed_ix)
            .collect();

        let mut rows = Vec::new();
        for (n, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row_no = n + 2;
            let cell = |i: usize| rec.get(i).unwrap_or("");
            let num = |i: usize| -> Result<Option<f64>, ReportError> {
                let s = cell(i);
                if s.is_empty() {
                    return Ok(None);
                }
                s.parse::<f64>().map(Some).map_err(|_| ReportError::BadValue {
                    row: row_no,
                    column: header[i].clone(),
                    value: s.to_string(),
                })
            };
            let level = num(level_ix)?.ok_or_else(|| ReportError::BadValue {
                row: row_no,
                column: "level".into(),
                value: String::new(),
            })?;
            let int = |ix: Option<usize>| -> Result<Option<u64>, ReportError> {
                match ix.map(cell) {
                    None | Some("") => Ok(None),
                    Some(s) => s.parse().map(Some).map_err(|_| ReportError::BadValue {
                        row: row_no,
                        column: header[ix.expect("present")].clone(),
                        value: s.to_string(),
                    }),
                }
            };
            rows.push(Row {
                level,
                replication: int(rep_ix)?.map(|x| x as u32),
                seed: int(seed_ix)?,
                values: value_ix.iter().map(|&i| num(i)).collect::<Result<_, _>>()?,
            });
        }
        if rows.is_empty() {
            return Err(ReportError::Empty);
        }
        Ok(ResultTable {
            columns: value_ix.iter().map(|&i| header[i].clone()).collect(),
            rows,
        })
    }

    /// Distinct levels in first-appearance order.
    pub fn levels(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.level) {
                out.push(r.level);
            }
        }
        out
    }

    fn column(&self, name: &str) -> Result<usize, ReportError> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| ReportError::MissingColumn(name.into()))
    }

    /// One group per level holding the non-missing values of `column`;
    /// levels with no values are skipped.
    pub fn groups(&self, column: &str) -> Result<Vec<Group>, ReportError> {
        let ix = self.column(column)?;
        Ok(self
            .levels()
            .into_iter()
            .filter_map(|level| {
                let values: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| r.level == level)
                    .filter_map(|r| r.values[ix])
                    .collect();
                (!values.is_empty()).then(|| Group::new(level.to_string(), values))
            })
            .collect())
    }
}

/// Descriptives in the shape of the paper-style tables: one row per level,
/// a mean and SD column per variable, two decimals.
pub fn descriptives_csv(table: &ResultTable, vars: &[&str]) -> Result<String, ReportError> {
    let ixs: Vec<usize> = vars.iter().map(|v| table.column(v)).collect::<Result<_, _>>()?;
    let mut out = String::from("level,n");
    for v in vars {
        let _ = write!(out, ",{v}_mean,{v}_sd");
    }
    out.push('\n');
    for level in table.levels() {
        let rows: Vec<&Row> = table.rows.iter().filter(|r| r.level == level).collect();
        let _ = write!(out, "{level},{}", rows.len());
        for &ix in &ixs {
            let xs: Vec<f64> = rows.iter().filter_map(|r| r.values[ix]).collect();
            match crate::experiments::Moments::of(&xs) {
                Some(m) => {
                    let _ = write!(out, ",{:.2},{:.2}", m.mean, m.sd);
                }
                None => out.push_str(",,"),
            }
        }
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarAnalysis {
    pub var: String,
    pub outcome: Result<(AnovaResult, TukeyResult), StatsError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub levels: Vec<f64>,
    pub family_alpha: f64,
    pub corrected_alpha: f64,
    pub vars: Vec<VarAnalysis>,
}

impl Analysis {
    pub fn get(&self, var: &str) -> Option<&VarAnalysis> {
        self.vars.iter().find(|v| v.var == var)
    }
}

/// ANOVA plus Tukey HSD for each variable, post-hoc tests at
/// `family_alpha / vars.len()`.
///
/// Fails outright when the table has fewer than two levels; per-variable
/// problems (for instance zero within-group variance) are kept in the
/// result so the rest of the report is still produced.
pub fn analyze(table: &ResultTable, vars: &[&str], family_alpha: f64) -> Result<Analysis, ReportError> {
    let levels = table.levels();
    if levels.len() < 2 {
        return Err(StatsError::TooFewGroups(levels.len()).into());
    }
    let alpha = corrected_alpha(family_alpha, vars.len().max(1));
    let mut out = Vec::with_capacity(vars.len());
    for v in vars {
        let groups = table.groups(v)?;
        let outcome = anova_oneway(&groups).and_then(|a| Ok((a, tukey_hsd(&groups, alpha)?)));
        out.push(VarAnalysis {
            var: v.to_string(),
            outcome,
        });
    }
    Ok(Analysis {
        levels,
        family_alpha,
        corrected_alpha: alpha,
        vars: out,
    })
}

fn fmt_p(p: f64) -> String {
    if p >= 1e-4 {
        format!("{p:.4}")
    } else {
        format!("{p:.3e}")
    }
}

pub fn anova_text(a: &Analysis) -> String {
    let mut s = String::new();
    let levels: Vec<String> = a.levels.iter().map(f64::to_string).collect();
    let _ = writeln!(s, "One-way between-groups ANOVA");
    let _ = writeln!(s, "levels: {}", levels.join(", "));
    let _ = writeln!(
        s,
        "family alpha {} over {} dependent variables; corrected post-hoc alpha = {}",
        a.family_alpha,
        a.vars.len(),
        format_alpha(a.corrected_alpha)
    );
    for v in &a.vars {
        let _ = writeln!(s, "\n[{}]", v.var);
        match &v.outcome {
            Err(e) => {
                let _ = writeln!(s, "not analysed: {e}");
            }
            Ok((an, tk)) => {
                let _ = writeln!(
                    s,
                    "F({}, {}) = {:.2}, p = {}, eta^2 = {:.2} ({} effect)",
                    an.df_between,
                    an.df_within,
                    an.f,
                    fmt_p(an.p),
                    an.eta_squared,
                    effect_size_label(an.eta_squared).name()
                );
                let _ = writeln!(
                    s,
                    "SS between = {:.4}, SS within = {:.4}, SS total = {:.4}",
                    an.ss_between, an.ss_within, an.ss_total
                );
                let _ = writeln!(
                    s,
                    "Tukey HSD, n = {} per group, critical q({}, {}) = {:.4} at alpha {}",
                    tk.n_per_group,
                    tk.k,
                    tk.df_within,
                    tk.critical_q,
                    format_alpha(tk.corrected_alpha)
                );
                for p in &tk.pairs {
                    let _ = writeln!(
                        s,
                        "  {} vs {}: diff = {:.2}, q = {:.3}, p = {}{}",
                        p.a,
                        p.b,
                        p.mean_difference,
                        p.q,
                        fmt_p(p.p),
                        if p.significant { "  *" } else { "" }
                    );
                }
            }
        }
    }
    s
}
