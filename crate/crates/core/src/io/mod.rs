//! File formats: CSV input, the tree text format, SVG ternary diagrams and
//! the result document.

pub mod report;
pub mod svg;
pub mod table;
pub mod tree_format;

pub use report::{AnalysisConfig, ResultDocument};
pub use table::{read_csv, read_csv_from, CsvOptions};
pub use tree_format::{parse_tree, render_tree};
