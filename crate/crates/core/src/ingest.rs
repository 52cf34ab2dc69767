//! CSV ingestion into a typed, column-major table.
//!
//! Every column is either numeric (`f64`, possibly missing or non-finite)
//! or categorical (text). Kinds are inferred from the cells: a column is
//! numeric when every non-empty cell parses as a number, where `inf`,
//! `-inf` and `nan` (any case) count as numbers. The label column is
//! always categorical.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    pub index: usize,
}

/// Cell storage for one column. `None` is the missing marker.
#[derive(Debug, Clone)]
pub enum Column {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> ColumnKind {
        match self {
            Column::Numeric(_) => ColumnKind::Numeric,
            Column::Categorical(_) => ColumnKind::Categorical,
        }
    }

    pub fn as_numeric(&self) -> Option<&[Option<f64>]> {
        match self {
            Column::Numeric(v) => Some(v),
            Column::Categorical(_) => None,
        }
    }

    pub fn as_categorical(&self) -> Option<&[Option<String>]> {
        match self {
            Column::Categorical(v) => Some(v),
            Column::Numeric(_) => None,
        }
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match self {
            Column::Numeric(v) => v[row].is_none(),
            Column::Categorical(v) => v[row].is_none(),
        }
    }

    fn select(&self, rows: &[usize]) -> Column {
        match self {
            Column::Numeric(v) => Column::Numeric(rows.iter().map(|&r| v[r]).collect()),
            Column::Categorical(v) => {
                Column::Categorical(rows.iter().map(|&r| v[r].clone()).collect())
            }
        }
    }

    fn cell_text(&self, row: usize) -> String {
        match self {
            Column::Numeric(v) => v[row].map(|x| x.to_string()).unwrap_or_default(),
            Column::Categorical(v) => v[row].clone().unwrap_or_default(),
        }
    }
}

// NaN cells compare equal to NaN cells so that a reloaded table matches
// the one that was written.
impl PartialEq for Column {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Column::Numeric(a), Column::Numeric(b)) => {
                a.len() == b.len()
                    && a.iter().zip(b).all(|(x, y)| match (x, y) {
                        (Some(x), Some(y)) => x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()),
                        (None, None) => true,
                        _ => false,
                    })
            }
            (Column::Categorical(a), Column::Categorical(b)) => a == b,
            _ => false,
        }
    }
}

/// Rectangular table of typed columns with an optional target column.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    schema: Vec<ColumnSchema>,
    columns: Vec<Column>,
    row_count: usize,
    label_column: Option<String>,
}

impl RawTable {
    /// Builds a table from named columns. Fails on duplicate names, unequal
    /// column lengths, or a label name that is not one of the columns.
    pub fn new(columns: Vec<(String, Column)>, label_column: Option<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (name, _) in &columns {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        if let Some(label) = &label_column {
            if !seen.contains(label.as_str()) {
                return Err(Error::MissingLabelColumn(label.clone()));
            }
        }
        let row_count = columns.first().map_or(0, |(_, c)| c.len());
        if let Some((name, col)) = columns.iter().find(|(_, c)| c.len() != row_count) {
            return Err(Error::ColumnMismatch(format!(
                "column `{name}` has {} rows, expected {row_count}",
                col.len()
            )));
        }
        let schema = columns
            .iter()
            .enumerate()
            .map(|(index, (name, col))| ColumnSchema {
                name: name.clone(),
                kind: col.kind(),
                index,
            })
            .collect();
        Ok(RawTable {
            schema,
            columns: columns.into_iter().map(|(_, c)| c).collect(),
            row_count,
            label_column,
        })
    }

    pub fn schema(&self) -> &[ColumnSchema] {
        &self.schema
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn column_count(&self) -> usize {
        self.schema.len()
    }

    pub fn label_column(&self) -> Option<&str> {
        self.label_column.as_deref()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.column_index(name).map(|i| &self.columns[i])
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.schema.iter().map(|c| c.name.as_str())
    }

    /// Names of non-label columns, in table order.
    pub fn feature_names(&self) -> Vec<String> {
        self.schema
            .iter()
            .filter(|c| Some(c.name.as_str()) != self.label_column.as_deref())
            .map(|c| c.name.clone())
            .collect()
    }

    /// New table holding the given rows, in the given order. Indices may repeat.
    pub fn select_rows(&self, rows: &[usize]) -> RawTable {
        RawTable {
            schema: self.schema.clone(),
            columns: self.columns.iter().map(|c| c.select(rows)).collect(),
            row_count: rows.len(),
            label_column: self.label_column.clone(),
        }
    }

    pub(crate) fn into_parts(self) -> (Vec<ColumnSchema>, Vec<Column>, Option<String>) {
        (self.schema, self.columns, self.label_column)
    }

    pub fn row_text(&self, row: usize) -> Vec<String> {
        self.columns.iter().map(|c| c.cell_text(row)).collect()
    }
}

/// Options for [`load_csv`].
#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub label_column: Option<String>,
    pub delimiter: u8,
    /// Stop after this many data records.
    pub max_rows: Option<usize>,
    /// Keep only these columns (the label column is always kept).
    pub include: Option<Vec<String>>,
    pub exclude: Vec<String>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            label_column: None,
            delimiter: b',',
            max_rows: None,
            include: None,
            exclude: Vec::new(),
        }
    }
}

impl LoadOptions {
    pub fn with_label(label: impl Into<String>) -> Self {
        LoadOptions {
            label_column: Some(label.into()),
            ..Default::default()
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, options: &LoadOptions) -> Result<RawTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, options, path)
}

/// Reads CSV from any reader; `source` names the input in error messages.
pub fn read_csv<R: Read>(reader: R, options: &LoadOptions, source: &Path) -> Result<RawTable> {
    let csv_err = |e: csv::Error| match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(source, io),
            _ => unreachable!(),
        },
        _ => Error::Csv {
            path: source.to_path_buf(),
            message: e.to_string(),
        },
    };

    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);

    let mut records = rdr.records();
    let header = match records.next() {
        None => {
            return Err(Error::EmptyFile {
                path: source.to_path_buf(),
            })
        }
        Some(r) => r.map_err(csv_err)?,
    };
    let header: Vec<String> = header.iter().map(|h| h.trim().to_string()).collect();
    if header.len() == 1 && header[0].is_empty() {
        return Err(Error::EmptyFile {
            path: source.to_path_buf(),
        });
    }

    let mut seen = HashSet::new();
    for name in &header {
        if !seen.insert(name.as_str()) {
            return Err(Error::DuplicateColumn(name.clone()));
        }
    }
    if let Some(label) = &options.label_column {
        if !seen.contains(label.as_str()) {
            return Err(Error::MissingLabelColumn(label.clone()));
        }
    }
    for name in options.include.iter().flatten().chain(&options.exclude) {
        if !seen.contains(name.as_str()) {
            return Err(Error::MissingColumn(name.clone()));
        }
    }

    let keep: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, name)| {
            if Some(name.as_str()) == options.label_column.as_deref() {
                return true;
            }
            let included = options
                .include
                .as_ref()
                .is_none_or(|inc| inc.iter().any(|n| n == *name));
            included && !options.exclude.iter().any(|n| n == *name)
        })
        .map(|(i, _)| i)
        .collect();

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); keep.len()];
    let limit = options.max_rows.unwrap_or(usize::MAX);
    for (rows, record) in records.take(limit).enumerate() {
        let record = record.map_err(csv_err)?;
        if record.len() != header.len() {
            return Err(Error::RaggedRow {
                path: source.to_path_buf(),
                row: rows + 1,
                found: record.len(),
                expected: header.len(),
            });
        }
        for (slot, &src) in cells.iter_mut().zip(&keep) {
            slot.push(record[src].to_string());
        }
    }

    let columns = keep
        .iter()
        .zip(cells)
        .map(|(&src, text)| {
            let name = header[src].clone();
            let is_label = Some(name.as_str()) == options.label_column.as_deref();
            (name, typed_column(text, is_label))
        })
        .collect();
    RawTable::new(columns, options.label_column.clone())
}

/// Parses one cell as a number. Empty cells are not numbers.
pub fn parse_number(cell: &str) -> Option<f64> {
    let t = cell.trim();
    if t.is_empty() {
        return None;
    }
    t.parse::<f64>().ok()
}

fn is_empty_cell(cell: &str) -> bool {
    cell.trim().is_empty()
}

/// Kind rule for a column of raw text cells.
pub fn infer_kind<S: AsRef<str>>(cells: &[S], is_label: bool) -> ColumnKind {
    if is_label {
        return ColumnKind::Categorical;
    }
    let numeric = cells
        .iter()
        .map(AsRef::as_ref)
        .all(|c| is_empty_cell(c) || parse_number(c).is_some());
    if numeric {
        ColumnKind::Numeric
    } else {
        ColumnKind::Categorical
    }
}

fn typed_column(text: Vec<String>, is_label: bool) -> Column {
    match infer_kind(&text, is_label) {
        ColumnKind::Numeric => Column::Numeric(text.iter().map(|c| parse_number(c)).collect()),
        ColumnKind::Categorical => Column::Categorical(
            text.into_iter()
                .map(|c| if is_empty_cell(&c) { None } else { Some(c) })
                .collect(),
        ),
    }
}

/// Re-derives column kinds from the table's current cells.
pub fn infer_schema(table: &RawTable) -> Vec<ColumnSchema> {
    table
        .schema()
        .iter()
        .zip(table.columns())
        .map(|(col, cells)| {
            let is_label = Some(col.name.as_str()) == table.label_column();
            let kind = match cells {
                Column::Numeric(_) if !is_label => ColumnKind::Numeric,
                Column::Numeric(_) => ColumnKind::Categorical,
                Column::Categorical(v) => {
                    let text: Vec<&str> = v.iter().map(|c| c.as_deref().unwrap_or("")).collect();
                    infer_kind(&text, is_label)
                }
            };
            ColumnSchema {
                name: col.name.clone(),
                kind,
                index: col.index,
            }
        })
        .collect()
}

pub fn write_csv<W: Write>(table: &RawTable, writer: W, delimiter: u8) -> Result<(), csv::Error> {
    let mut wtr = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_writer(writer);
    wtr.write_record(table.column_names())?;
    for row in 0..table.row_count() {
        wtr.write_record(table.row_text(row))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_csv(table: &RawTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_csv(table, &mut buf, b',').map_err(|e| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    crate::io::write_atomic(path, &buf)
}
