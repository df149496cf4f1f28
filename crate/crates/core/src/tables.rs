//! Regeneration of the published tables, compared cell by cell against the
//! golden CSV files shipped in `golden/`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::ctransform::{c_transform, DelaySeq};
use crate::error::{Error, Result};
use crate::greedy::{greedy_from_partition, BSource, GreedyMode, PartitionSeq, Strictness};
use crate::mri::Scanner;

/// Budget used to mark the first row needing more fibers in the transform tables.
pub const TRANSFORM_TABLE_BUDGET: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TableId {
    #[serde(rename = "ct1")]
    Ct1,
    #[serde(rename = "ct2")]
    Ct2,
    #[serde(rename = "ct3")]
    Ct3,
    #[serde(rename = "greedy18")]
    Greedy18,
    #[serde(rename = "redundant1")]
    Redundant1,
    #[serde(rename = "redundant2")]
    Redundant2,
    #[serde(rename = "appG1")]
    AppG1,
    #[serde(rename = "appG2")]
    AppG2,
    #[serde(rename = "appG2p")]
    AppG2p,
    #[serde(rename = "appG3")]
    AppG3,
    #[serde(rename = "appG3p")]
    AppG3p,
}

/// What a table is built from.
enum Source {
    /// C-transform of `0..=rows` over the delays.
    Transform { d: &'static [u64], rows: u64 },
    /// Greedy delays of a composition.
    Greedy { parts: &'static [usize], mode: GreedyMode, strictness: Strictness },
    /// `B(d^l; i)` for `first_len <= l <= M`, `0 <= i <= k`.
    Grid { d: &'static [u64], k: u32, first_len: usize },
}

impl TableId {
    pub const ALL: [TableId; 11] = [
        TableId::Ct1,
        TableId::Ct2,
        TableId::Ct3,
        TableId::Greedy18,
        TableId::Redundant1,
        TableId::Redundant2,
        TableId::AppG1,
        TableId::AppG2,
        TableId::AppG2p,
        TableId::AppG3,
        TableId::AppG3p,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TableId::Ct1 => "ct1",
            TableId::Ct2 => "ct2",
            TableId::Ct3 => "ct3",
            TableId::Greedy18 => "greedy18",
            TableId::Redundant1 => "redundant1",
            TableId::Redundant2 => "redundant2",
            TableId::AppG1 => "appG1",
            TableId::AppG2 => "appG2",
            TableId::AppG2p => "appG2p",
            TableId::AppG3 => "appG3",
            TableId::AppG3p => "appG3p",
        }
    }

    pub fn golden(self) -> &'static str {
        match self {
            TableId::Ct1 => include_str!("../golden/ct1.csv"),
            TableId::Ct2 => include_str!("../golden/ct2.csv"),
            TableId::Ct3 => include_str!("../golden/ct3.csv"),
            TableId::Greedy18 => include_str!("../golden/greedy18.csv"),
            TableId::Redundant1 => include_str!("../golden/redundant1.csv"),
            TableId::Redundant2 => include_str!("../golden/redundant2.csv"),
            TableId::AppG1 => include_str!("../golden/appG1.csv"),
            TableId::AppG2 => include_str!("../golden/appG2.csv"),
            TableId::AppG2p => include_str!("../golden/appG2p.csv"),
            TableId::AppG3 => include_str!("../golden/appG3.csv"),
            TableId::AppG3p => include_str!("../golden/appG3p.csv"),
        }
    }

    fn source(self) -> Source {
        let recursive = GreedyMode::RecursiveB(BSource::Scan);
        match self {
            TableId::Ct1 => Source::Transform { d: &[1, 2, 3, 5, 6, 8], rows: 25 },
            TableId::Ct2 => Source::Transform { d: &[1, 2, 3, 4, 8, 12], rows: 17 },
            TableId::Ct3 => Source::Transform { d: &[1, 2, 3, 6, 10, 14], rows: 18 },
            TableId::Greedy18 => Source::Greedy {
                parts: &[3, 4, 2, 5, 1, 3],
                mode: GreedyMode::ClosedForm,
                strictness: Strictness::Strict,
            },
            TableId::Redundant1 => Source::Greedy {
                parts: &[1, 1, 1, 4, 2, 6, 3],
                mode: recursive,
                strictness: Strictness::Permissive,
            },
            TableId::Redundant2 => Source::Greedy {
                parts: &[2, 1, 1, 3, 2, 6, 3],
                mode: GreedyMode::ClosedForm,
                strictness: Strictness::Strict,
            },
            TableId::AppG1 => Source::Grid {
                d: &[1, 2, 3, 5, 12, 1, 1, 2, 4, 8, 16, 32],
                k: 5,
                first_len: 5,
            },
            TableId::AppG2 => Source::Grid {
                d: &[1, 2, 3, 5, 2, 8, 22, 44, 88],
                k: 8,
                first_len: 4,
            },
            TableId::AppG2p => Source::Grid {
                d: &[1, 2, 3, 5, 2, 9, 23, 45, 89],
                k: 8,
                first_len: 4,
            },
            TableId::AppG3 => Source::Grid {
                d: &[1, 2, 3, 5, 2, 8, 14, 28, 56],
                k: 5,
                first_len: 4,
            },
            TableId::AppG3p => Source::Grid {
                d: &[1, 2, 3, 5, 2, 9, 15, 29, 57],
                k: 5,
                first_len: 4,
            },
        }
    }

    /// The delay sequence the table is about.
    pub fn delays(self) -> Result<DelaySeq> {
        match self.source() {
            Source::Transform { d, .. } | Source::Grid { d, .. } => DelaySeq::new(d.to_vec()),
            Source::Greedy { parts, mode, strictness } => {
                let n = PartitionSeq::new(parts.to_vec())?;
                Ok(greedy_from_partition(&n, mode, strictness)?.delays)
            }
        }
    }
}

impl std::str::FromStr for TableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TableId::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidRange(format!("unknown table {s:?}")))
    }
}

/// A regenerated table. Cells are numeric except the row labels of greedy tables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub table: TableId,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// For transform tables: the first `x` whose transform has more than
    /// two ones, with that popcount.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub first_violation: Option<(u64, u32)>,
}

impl Table {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidRange(format!("writing CSV: {e}"));
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row).map_err(io)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::InvalidRange(format!("writing CSV: {e}")))?;
        Ok(String::from_utf8(bytes).expect("CSV of ASCII cells"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("table serializes")
    }

    /// Right-aligned columns; the first-violation row is marked with `*`.
    pub fn to_human(&self) -> String {
        let ncols = self.header.len();
        let mut widths = vec![0usize; ncols];
        for row in std::iter::once(&self.header).chain(&self.rows) {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let marked = self.first_violation.map(|(x, _)| x.to_string());
        let mut out = String::new();
        for row in std::iter::once(&self.header).chain(&self.rows) {
            let mark = if marked.as_deref() == row.first().map(String::as_str) { "*" } else { " " };
            out.push_str(mark);
            for (i, (w, cell)) in widths.iter().zip(row).enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{cell:>w$}", w = *w);
            }
            out.push('\n');
        }
        out
    }
}

/// Build a table from the library alone.
pub fn generate_table(id: TableId) -> Result<Table> {
    match id.source() {
        Source::Transform { d, rows } => {
            let d = DelaySeq::new(d.to_vec())?;
            let mut header = vec!["x".to_string()];
            header.extend((1..=d.len()).map(|i| format!("I{i}")));
            let mut out = Vec::new();
            let mut first_violation = None;
            for x in 0..=rows {
                let r = c_transform(x, &d)?;
                if first_violation.is_none() && r.popcount() > TRANSFORM_TABLE_BUDGET {
                    first_violation = Some((x, r.popcount()));
                }
                let mut row = vec![x.to_string()];
                row.extend(r.bits.iter().map(|b| b.to_string()));
                out.push(row);
            }
            Ok(Table { table: id, header, rows: out, first_violation })
        }
        Source::Greedy { .. } => {
            let d = id.delays()?;
            let mut header = vec!["i".to_string()];
            header.extend((1..=d.len()).map(|i| i.to_string()));
            let mut row = vec!["d_i".to_string()];
            row.extend(d.as_slice().iter().map(|v| v.to_string()));
            Ok(Table { table: id, header, rows: vec![row], first_violation: None })
        }
        Source::Grid { d, k, first_len } => {
            let d = DelaySeq::new(d.to_vec())?;
            let scanner = Scanner::default();
            let mut header = vec!["l\\i".to_string()];
            header.extend((0..=k).map(|i| i.to_string()));
            let mut out = Vec::new();
            for len in first_len..=d.len() {
                let values = scanner.scan_all_budgets(&d.prefix(len), k)?;
                let mut row = vec![len.to_string()];
                row.extend(values.iter().map(|v| v.to_string()));
                out.push(row);
            }
            Ok(Table { table: id, header, rows: out, first_violation: None })
        }
    }
}

fn parse_golden(id: TableId) -> Result<Vec<Vec<String>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(id.golden().as_bytes());
    reader
        .records()
        .map(|r| {
            r.map(|rec| rec.iter().map(|c| c.trim().to_string()).collect())
                .map_err(|e| Error::InvalidRange(format!("golden file {}: {e}", id.name())))
        })
        .collect()
}

/// Cell-level differences between a generated table and its golden file.
pub fn diff_against_golden(table: &Table) -> Result<Vec<String>> {
    let golden = parse_golden(table.table)?;
    let generated: Vec<&Vec<String>> = std::iter::once(&table.header).chain(&table.rows).collect();
    let mut diffs = Vec::new();
    if golden.len() != generated.len() {
        diffs.push(format!("{} rows expected, {} generated", golden.len(), generated.len()));
    }
    for (r, (want, got)) in golden.iter().zip(&generated).enumerate() {
        if want.len() != got.len() {
            diffs.push(format!("line {}: {} cells expected, {} generated", r + 1, want.len(), got.len()));
        }
        for (c, (w, g)) in want.iter().zip(got.iter()).enumerate() {
            if w != g {
                diffs.push(format!("line {} column {}: expected {w}, got {g}", r + 1, c + 1));
            }
        }
    }
    Ok(diffs)
}

/// Regenerate a table and require an exact match with its golden file.
pub fn reproduce_table(id: TableId) -> Result<Table> {
    let table = generate_table(id)?;
    let diffs = diff_against_golden(&table)?;
    if diffs.is_empty() {
        Ok(table)
    } else {
        Err(Error::GoldenMismatch {
            table: id.name().to_string(),
            diffs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_table_reproduces() {
        for id in TableId::ALL {
            reproduce_table(id).unwrap_or_else(|e| panic!("{}: {e}", id.name()));
        }
    }

    #[test]
    fn highlighted_rows() {
        let t = reproduce_table(TableId::Ct1).unwrap();
        assert_eq!(t.rows.len(), 26);
        assert_eq!(t.rows[12], ["12", "1", "0", "1", "0", "0", "1"]);
        assert_eq!(t.first_violation, Some((12, 3)));
        assert_eq!(generate_table(TableId::Ct2).unwrap().first_violation, Some((17, 3)));
        assert_eq!(generate_table(TableId::Ct3).unwrap().first_violation, Some((18, 3)));
    }

    #[test]
    fn grid_corners() {
        let g1 = generate_table(TableId::AppG1).unwrap();
        assert_eq!(g1.rows.last().unwrap()[6], "62");
        let last = |id| generate_table(id).unwrap().rows.last().unwrap().last().unwrap().clone();
        assert_eq!(last(TableId::AppG2), "174");
        assert_eq!(last(TableId::AppG2p), "178");
        assert_eq!(last(TableId::AppG3), "103");
        assert_eq!(last(TableId::AppG3p), "106");
    }

    #[test]
    fn mismatch_is_cell_level() {
        let mut t = generate_table(TableId::Greedy18).unwrap();
        t.rows[0][18] = "4521".into();
        let diffs = diff_against_golden(&t).unwrap();
        assert_eq!(diffs, vec!["line 2 column 19: expected 4520, got 4521".to_string()]);
    }

    #[test]
    fn output_is_deterministic() {
        for id in TableId::ALL {
            let a = generate_table(id).unwrap();
            let b = generate_table(id).unwrap();
            assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
            assert_eq!(a.to_json(), b.to_json());
        }
        let csv = generate_table(TableId::Greedy18).unwrap().to_csv().unwrap();
        assert_eq!(csv, TableId::Greedy18.golden());
        assert!("appG2p".parse::<TableId>().is_ok());
        assert!("nope".parse::<TableId>().is_err());
    }
}
