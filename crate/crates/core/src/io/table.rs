//! CSV input: one composition per row, an optional group column, `#`
//! comment lines.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::composition::{Composition, CompositionDataset, Group};
use crate::error::{Error, Result};

pub const DEFAULT_GROUP_COLUMN: &str = "group";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CsvOptions {
    /// Group label column. `None` uses `group` when present and otherwise
    /// reads a single group named `all`.
    pub group_column: Option<String>,
    /// Component columns in order; `None` takes every non-group column.
    pub components: Option<Vec<String>>,
    /// Keep only these groups, in this order.
    pub groups: Option<Vec<String>>,
    /// Replace exact zeros by this value before closure.
    pub zero_replace: Option<f64>,
}

pub fn read_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<CompositionDataset> {
    read_csv_from(File::open(path)?, options)
}

pub fn read_csv_from<R: Read>(reader: R, options: &CsvOptions) -> Result<CompositionDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| header.iter().position(|h| h == name);

    let group_idx = match &options.group_column {
        Some(name) => Some(find(name).ok_or_else(|| Error::MissingColumn(name.clone()))?),
        None => find(DEFAULT_GROUP_COLUMN),
    };
    let component_idx: Vec<usize> = match &options.components {
        Some(names) => names
            .iter()
            .map(|n| find(n).ok_or_else(|| Error::MissingColumn(n.clone())))
            .collect::<Result<_>>()?,
        None => (0..header.len()).filter(|&i| Some(i) != group_idx).collect(),
    };
    if component_idx.len() < 2 {
        return Err(Error::TooFewComponents(component_idx.len()));
    }
    let names: Vec<String> = component_idx.iter().map(|&i| header[i].clone()).collect();

    let mut groups: Vec<Group> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let row = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let at_row = |e: Error| Error::Row {
            row,
            source: Box::new(e),
        };
        let raw = component_idx
            .iter()
            .map(|&i| {
                let field = record.get(i).unwrap_or("");
                field.parse::<f64>().map_err(|_| {
                    at_row(Error::InvalidDataset(format!(
                        "column `{}`: cannot parse `{field}` as a number",
                        header[i]
                    )))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let composition = match options.zero_replace {
            Some(eps) => Composition::with_zero_replacement(raw, eps),
            None => Composition::new(raw),
        }
        .map_err(at_row)?;
        let label = match group_idx {
            Some(i) => {
                let l = record.get(i).unwrap_or("");
                if l.is_empty() {
                    return Err(at_row(Error::InvalidDataset("empty group label".into())));
                }
                l.to_string()
            }
            None => "all".to_string(),
        };
        match groups.iter_mut().find(|g| g.label == label) {
            Some(g) => g.observations.push(composition),
            None => groups.push(Group {
                label,
                observations: vec![composition],
            }),
        }
    }

    if let Some(wanted) = &options.groups {
        let mut selected = Vec::with_capacity(wanted.len());
        for w in wanted {
            let pos = groups
                .iter()
                .position(|g| &g.label == w)
                .ok_or_else(|| Error::EmptyGroup(w.clone()))?;
            selected.push(groups.remove(pos));
        }
        groups = selected;
    }
    if groups.is_empty() {
        return Err(Error::InvalidDataset("no observations".into()));
    }
    CompositionDataset::new(names, groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str, options: &CsvOptions) -> Result<CompositionDataset> {
        read_csv_from(text.as_bytes(), options)
    }

    const MAZE: &str = "group,TQ,AQ1,OQ,AQ2\n# two example rows\nWT,0.42,0.35,0.15,0.08\nAD,0.21,0.22,0.24,0.33\n";

    #[test]
    fn reads_groups_in_order_of_appearance() {
        let ds = read(MAZE, &CsvOptions::default()).unwrap();
        assert_eq!(ds.component_names(), &["TQ", "AQ1", "OQ", "AQ2"]);
        assert_eq!(ds.groups()[0].label, "WT");
        assert_eq!(ds.groups()[1].label, "AD");
        let wt = ds.groups()[0].observations[0].values();
        assert!((wt[0] - 0.42).abs() < 1e-15);
        let ad = ds.groups()[1].observations[0].values();
        assert!((ad[3] - 0.33).abs() < 1e-15);
    }

    #[test]
    fn group_selection_reorders() {
        let opts = CsvOptions {
            groups: Some(vec!["AD".into(), "WT".into()]),
            ..Default::default()
        };
        let ds = read(MAZE, &opts).unwrap();
        assert_eq!(ds.groups()[0].label, "AD");
        let missing = CsvOptions {
            groups: Some(vec!["KO".into()]),
            ..Default::default()
        };
        assert!(matches!(read(MAZE, &missing), Err(Error::EmptyGroup(_))));
    }

    #[test]
    fn unnormalized_row_reports_line() {
        let text = "group,a,b,c\nx,0.5,0.3,0.2\nx,0.4,0.3,0.2\n";
        match read(text, &CsvOptions::default()) {
            Err(Error::Row { row, source }) => {
                assert_eq!(row, 3);
                assert!(matches!(*source, Error::NotNormalized { .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zeros_rejected_unless_replaced() {
        let text = "a,b,c\n0.5,0.5,0\n0.2,0.3,0.5\n";
        match read(text, &CsvOptions::default()) {
            Err(Error::Row { row: 2, source }) => {
                assert!(matches!(*source, Error::ZeroComponent { index: 2, .. }))
            }
            other => panic!("unexpected {other:?}"),
        }
        let opts = CsvOptions {
            zero_replace: Some(1e-3),
            ..Default::default()
        };
        let ds = read(text, &opts).unwrap();
        assert_eq!(ds.groups()[0].label, "all");
        assert!(ds.groups()[0].observations[0].values()[2] > 0.0);
    }

    #[test]
    fn missing_columns() {
        let opts = CsvOptions {
            group_column: Some("genotype".into()),
            ..Default::default()
        };
        assert!(matches!(read(MAZE, &opts), Err(Error::MissingColumn(c)) if c == "genotype"));
        let opts = CsvOptions {
            components: Some(vec!["TQ".into(), "XQ".into()]),
            ..Default::default()
        };
        assert!(matches!(read(MAZE, &opts), Err(Error::MissingColumn(c)) if c == "XQ"));
    }

    #[test]
    fn bad_number_is_a_row_error() {
        let text = "a,b\n0.5,abc\n";
        assert!(matches!(read(text, &CsvOptions::default()), Err(Error::Row { row: 2, .. })));
    }
}
