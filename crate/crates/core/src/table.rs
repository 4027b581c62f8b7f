//! Tabular welding records: schema, loading, pruning and feature selection.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Role a column plays in the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    RowId,
    Categorical,
    Numeric,
    SensorSeries,
    TargetDiameter,
    TargetCarbody,
}

impl ColumnKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnKind::RowId => "row_id",
            ColumnKind::Categorical => "categorical",
            ColumnKind::Numeric => "numeric",
            ColumnKind::SensorSeries => "sensor_series",
            ColumnKind::TargetDiameter => "target_diameter",
            ColumnKind::TargetCarbody => "target_carbody",
        }
    }

    /// Columns that pruning and selection must never drop.
    pub fn is_protected(self) -> bool {
        matches!(
            self,
            ColumnKind::RowId | ColumnKind::TargetDiameter | ColumnKind::TargetCarbody
        )
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ColumnKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "row_id" => ColumnKind::RowId,
            "categorical" => ColumnKind::Categorical,
            "numeric" => ColumnKind::Numeric,
            "sensor_series" => ColumnKind::SensorSeries,
            "target_diameter" => ColumnKind::TargetDiameter,
            "target_carbody" => ColumnKind::TargetCarbody,
            other => return Err(Error::Schema(format!("unknown column kind {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    pub unit: Option<String>,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        ColumnSpec { name: name.into(), kind, unit: None }
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        self.unit = Some(unit.into());
        self
    }
}

/// Checks the column-level invariants of a schema.
pub fn validate_schema(columns: &[ColumnSpec]) -> Result<()> {
    let mut names = HashSet::new();
    for c in columns {
        if !names.insert(c.name.as_str()) {
            return Err(Error::Schema(format!("duplicate column name {:?}", c.name)));
        }
    }
    let count = |k: ColumnKind| columns.iter().filter(|c| c.kind == k).count();
    if count(ColumnKind::RowId) != 1 {
        return Err(Error::Schema(format!(
            "exactly one row_id column required, found {}",
            count(ColumnKind::RowId)
        )));
    }
    for k in [ColumnKind::TargetDiameter, ColumnKind::TargetCarbody] {
        if count(k) > 1 {
            return Err(Error::Schema(format!("at most one {k} column allowed")));
        }
    }
    Ok(())
}

/// Reads a schema file: one `name,kind[,unit]` line per column.
pub fn load_schema(path: &Path) -> Result<Vec<ColumnSpec>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file = path.display().to_string();
    let mut cols = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() < 2 || parts.len() > 3 || parts[0].is_empty() {
            return Err(Error::parse(&file, i + 1, "expected `name,kind[,unit]`"));
        }
        let kind = parts[1]
            .parse()
            .map_err(|e: Error| Error::parse(&file, i + 1, e.to_string()))?;
        let mut spec = ColumnSpec::new(parts[0], kind);
        if let Some(unit) = parts.get(2).filter(|u| !u.is_empty()) {
            spec.unit = Some(unit.to_string());
        }
        cols.push(spec);
    }
    validate_schema(&cols)?;
    Ok(cols)
}

pub fn write_schema(path: &Path, columns: &[ColumnSpec]) -> Result<()> {
    let mut out = String::new();
    for c in columns {
        out.push_str(&c.name);
        out.push(',');
        out.push_str(c.kind.as_str());
        if let Some(u) = &c.unit {
            out.push(',');
            out.push_str(u);
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Missing,
    Text(String),
    Real(f64),
    Series(Vec<f64>),
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Cell::Real(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_series(&self) -> Option<&[f64]> {
        match self {
            Cell::Series(s) => Some(s),
            _ => None,
        }
    }

    /// Text form used when writing CSV.
    pub fn render(&self) -> String {
        match self {
            Cell::Missing => String::new(),
            Cell::Text(s) => s.clone(),
            Cell::Real(x) => format!("{x}"),
            Cell::Series(v) => v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(";"),
        }
    }

    fn parse(raw: &str, kind: ColumnKind) -> std::result::Result<Cell, String> {
        let raw = raw.trim();
        if raw.is_empty() {
            return Ok(Cell::Missing);
        }
        match kind {
            ColumnKind::RowId | ColumnKind::Categorical | ColumnKind::TargetCarbody => {
                Ok(Cell::Text(raw.to_string()))
            }
            ColumnKind::Numeric | ColumnKind::TargetDiameter => parse_real(raw).map(Cell::Real),
            ColumnKind::SensorSeries => raw
                .split(';')
                .map(|p| parse_real(p.trim()))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(Cell::Series),
        }
    }
}

fn parse_real(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("non-numeric value {s:?}")),
    }
}

/// Columnar welding records. Each row holds one cell per column, in column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableDataset {
    columns: Vec<ColumnSpec>,
    rows: Vec<Vec<Cell>>,
}

impl TableDataset {
    pub fn new(columns: Vec<ColumnSpec>, rows: Vec<Vec<Cell>>) -> Result<Self> {
        validate_schema(&columns)?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(Error::Data(format!(
                    "row {i} has {} cells, expected {}",
                    row.len(),
                    columns.len()
                )));
            }
        }
        let ds = TableDataset { columns, rows };
        let id_col = ds.row_id_column();
        let mut seen = HashSet::new();
        for row in &ds.rows {
            let id = match &row[id_col] {
                Cell::Text(s) => s.clone(),
                _ => return Err(Error::Data("row with missing row id".into())),
            };
            if !seen.insert(id.clone()) {
                return Err(Error::DuplicateRowId(id));
            }
        }
        Ok(ds)
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column_of_kind(&self, kind: ColumnKind) -> Option<usize> {
        self.columns.iter().position(|c| c.kind == kind)
    }

    pub fn row_id_column(&self) -> usize {
        self.column_of_kind(ColumnKind::RowId).expect("schema validated")
    }

    pub fn row_id(&self, row: usize) -> &str {
        self.rows[row][self.row_id_column()]
            .as_text()
            .expect("row ids validated")
    }

    pub fn cell(&self, row: usize, column: &str) -> Option<&Cell> {
        self.column_index(column).map(|c| &self.rows[row][c])
    }

    /// Dataset with the same schema holding the given rows, in the given order.
    pub fn subset(&self, rows: &[usize]) -> TableDataset {
        TableDataset {
            columns: self.columns.clone(),
            rows: rows.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))
            .map_err(|e| csv_err(path, e))?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))
                .map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path.display().to_string(), 0, format!("{other:?}")),
    }
}

/// Loads a comma-delimited file whose header names the columns of `schema`.
///
/// Columns present in the file but absent from the schema are ignored.
pub fn load_table(path: &Path, schema: &[ColumnSpec]) -> Result<TableDataset> {
    validate_schema(schema)?;
    let file = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let mut positions = Vec::with_capacity(schema.len());
    for spec in schema {
        let pos = header
            .iter()
            .position(|h| h.trim() == spec.name)
            .ok_or_else(|| Error::MissingColumn(spec.name.clone()))?;
        positions.push(pos);
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        // header is line 1
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(&file, line, e.to_string()))?;
        let mut row = Vec::with_capacity(schema.len());
        for (spec, &pos) in schema.iter().zip(&positions) {
            let raw = rec.get(pos).unwrap_or("");
            let cell = Cell::parse(raw, spec.kind)
                .map_err(|m| Error::parse(&file, line, format!("column {:?}: {m}", spec.name)))?;
            row.push(cell);
        }
        rows.push(row);
    }
    TableDataset::new(schema.to_vec(), rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneReason {
    Empty,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrunedColumn {
    pub name: String,
    pub reason: PruneReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneReport {
    pub removed: Vec<PrunedColumn>,
}

fn prune_reason(ds: &TableDataset, col: usize) -> Option<PruneReason> {
    let mut values = ds.rows.iter().map(|r| &r[col]).filter(|c| !c.is_missing());
    let first = match values.next() {
        None => return Some(PruneReason::Empty),
        Some(c) => c,
    };
    values.all(|c| c == first).then_some(PruneReason::Constant)
}

/// Drops empty and constant columns. Row id and target columns are kept.
pub fn prune_columns(ds: &TableDataset) -> (TableDataset, PruneReport) {
    let mut keep = Vec::new();
    let mut report = PruneReport::default();
    for (i, spec) in ds.columns.iter().enumerate() {
        if !spec.kind.is_protected() {
            if let Some(reason) = prune_reason(ds, i) {
                report.removed.push(PrunedColumn { name: spec.name.clone(), reason });
                continue;
            }
        }
        keep.push(i);
    }
    (project(ds, &keep), report)
}

fn project(ds: &TableDataset, keep: &[usize]) -> TableDataset {
    TableDataset {
        columns: keep.iter().map(|&i| ds.columns[i].clone()).collect(),
        rows: ds
            .rows
            .iter()
            .map(|r| keep.iter().map(|&i| r[i].clone()).collect())
            .collect(),
    }
}

/// Projects onto `keep`, preserving the dataset's column order.
pub fn select_features(ds: &TableDataset, keep: &[&str]) -> Result<TableDataset> {
    let wanted: BTreeSet<&str> = keep.iter().copied().collect();
    for name in &wanted {
        if ds.column_index(name).is_none() {
            return Err(Error::MissingColumn(name.to_string()));
        }
    }
    for spec in &ds.columns {
        if spec.kind.is_protected() && !wanted.contains(spec.name.as_str()) {
            return Err(Error::InvalidArgument(format!(
                "cannot drop {} column {:?}",
                spec.kind, spec.name
            )));
        }
    }
    let idx: Vec<usize> = (0..ds.columns.len())
        .filter(|&i| wanted.contains(ds.columns[i].name.as_str()))
        .collect();
    Ok(project(ds, &idx))
}
