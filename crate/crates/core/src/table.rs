//! Mixed-type tables: schema, cells, CSV I/O and seeded splitting.
//!
//! Column layout is fixed by the [`Schema`]: the `M` features in declared
//! order, followed by the class label when the schema names a target.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::symbol::Symbol;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numerical,
    Categorical,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    pub kind: FeatureKind,
}

impl Feature {
    pub fn numerical(name: impl Into<String>) -> Self {
        Feature {
            name: name.into(),
            kind: FeatureKind::Numerical,
        }
    }

    pub fn categorical(name: impl Into<String>) -> Self {
        Feature {
            name: name.into(),
            kind: FeatureKind::Categorical,
        }
    }
}

/// On-disk form of a schema.
#[derive(Serialize, Deserialize)]
struct SchemaFile {
    features: Vec<Feature>,
    #[serde(default)]
    target: Option<String>,
}

/// Ordered feature declarations plus an optional categorical class label.
///
/// The target may be listed among the features (it must then be
/// categorical) or given only by name; either way it is stored apart from
/// the `M` distance features and occupies the last column of every row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SchemaFile", into = "SchemaFile")]
pub struct Schema {
    features: Vec<Feature>,
    target: Option<String>,
    numeric: Vec<usize>,
    categorical: Vec<usize>,
}

impl TryFrom<SchemaFile> for Schema {
    type Error = Error;

    fn try_from(file: SchemaFile) -> Result<Self> {
        Schema::new(file.features, file.target)
    }
}

impl From<Schema> for SchemaFile {
    fn from(schema: Schema) -> Self {
        SchemaFile {
            features: schema.features,
            target: schema.target,
        }
    }
}

impl Schema {
    pub fn new(features: Vec<Feature>, target: Option<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        for f in &features {
            if f.name.is_empty() {
                return Err(Error::InvalidSchema("empty feature name".into()));
            }
            if !seen.insert(f.name.as_str()) {
                return Err(Error::InvalidSchema(format!(
                    "duplicate feature `{}`",
                    f.name
                )));
            }
        }
        let mut features = features;
        if let Some(t) = &target {
            if t.is_empty() {
                return Err(Error::InvalidSchema("empty target name".into()));
            }
            if let Some(pos) = features.iter().position(|f| &f.name == t) {
                if features[pos].kind != FeatureKind::Categorical {
                    return Err(Error::InvalidSchema(format!(
                        "target `{t}` must be categorical"
                    )));
                }
                features.remove(pos);
            }
        }
        if features.is_empty() {
            return Err(Error::InvalidSchema("no features besides the target".into()));
        }
        let numeric = (0..features.len())
            .filter(|&i| features[i].kind == FeatureKind::Numerical)
            .collect();
        let categorical = (0..features.len())
            .filter(|&i| features[i].kind == FeatureKind::Categorical)
            .collect();
        Ok(Schema {
            features,
            target,
            numeric,
            categorical,
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("schema serializes")
    }

    /// The `M` distance features, excluding the target.
    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn feature_count(&self) -> usize {
        self.features.len()
    }

    pub fn target(&self) -> Option<&str> {
        self.target.as_deref()
    }

    pub fn target_index(&self) -> Option<usize> {
        self.target.as_ref().map(|_| self.features.len())
    }

    /// Number of columns in a row (features plus label).
    pub fn width(&self) -> usize {
        self.features.len() + usize::from(self.target.is_some())
    }

    pub fn numeric_features(&self) -> &[usize] {
        &self.numeric
    }

    pub fn categorical_features(&self) -> &[usize] {
        &self.categorical
    }

    pub fn column_name(&self, col: usize) -> &str {
        match self.features.get(col) {
            Some(f) => &f.name,
            None => self.target.as_deref().expect("column index out of range"),
        }
    }

    pub fn column_kind(&self, col: usize) -> FeatureKind {
        match self.features.get(col) {
            Some(f) => f.kind,
            None => FeatureKind::Categorical,
        }
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> + '_ {
        (0..self.width()).map(move |c| self.column_name(c))
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.column_names().position(|n| n == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Category(Symbol),
}

impl Cell {
    pub fn kind(&self) -> FeatureKind {
        match self {
            Cell::Float(_) => FeatureKind::Numerical,
            Cell::Category(_) => FeatureKind::Categorical,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Float(v) => Some(v),
            Cell::Category(_) => None,
        }
    }

    pub fn as_symbol(&self) -> Option<Symbol> {
        match *self {
            Cell::Category(s) => Some(s),
            Cell::Float(_) => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Category(Symbol::new(s))
    }
}

impl From<Symbol> for Cell {
    fn from(s: Symbol) -> Self {
        Cell::Category(s)
    }
}

pub type Row = Vec<Cell>;

/// One column pulled out of a table.
#[derive(Clone, Debug, PartialEq)]
pub enum Column {
    Numerical(Vec<f64>),
    Categorical(Vec<Symbol>),
}

pub(crate) fn check_row(schema: &Schema, row: &[Cell]) -> std::result::Result<(), (usize, &'static str)> {
    if row.len() != schema.width() {
        return Err((row.len(), "row has the wrong number of columns"));
    }
    for (c, cell) in row.iter().enumerate() {
        if cell.kind() != schema.column_kind(c) {
            return Err((c, "cell kind does not match column kind"));
        }
        if let Cell::Float(v) = cell {
            if !v.is_finite() {
                return Err((c, "non-finite numeric value"));
            }
        }
    }
    Ok(())
}

/// Immutable, schema-checked rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    schema: Arc<Schema>,
    rows: Vec<Row>,
}

impl Table {
    pub fn new(schema: impl Into<Arc<Schema>>, rows: Vec<Row>) -> Result<Self> {
        let schema = schema.into();
        for (r, row) in rows.iter().enumerate() {
            check_row(&schema, row).map_err(|(col, reason)| Error::BadCell {
                row: r,
                col,
                reason,
            })?;
        }
        Ok(Table { schema, rows })
    }

    /// A table with the same schema and different rows.
    pub fn with_rows(&self, rows: Vec<Row>) -> Result<Self> {
        Table::new(self.schema.clone(), rows)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn schema_arc(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[Cell] {
        &self.rows[i]
    }

    pub fn into_rows(self) -> Vec<Row> {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn ensure_non_empty(&self) -> Result<()> {
        if self.rows.is_empty() {
            Err(Error::EmptyTable)
        } else {
            Ok(())
        }
    }

    pub fn ensure_same_schema(&self, other: &Table) -> Result<()> {
        if Arc::ptr_eq(&self.schema, &other.schema) || *self.schema == *other.schema {
            Ok(())
        } else {
            Err(Error::SchemaMismatch("tables have different schemas".into()))
        }
    }

    pub fn column(&self, col: usize) -> Column {
        match self.schema.column_kind(col) {
            FeatureKind::Numerical => {
                Column::Numerical(self.rows.iter().map(|r| r[col].as_f64().unwrap()).collect())
            }
            FeatureKind::Categorical => Column::Categorical(
                self.rows
                    .iter()
                    .map(|r| r[col].as_symbol().unwrap())
                    .collect(),
            ),
        }
    }

    /// Values of a numerical column.
    ///
    /// Panics if `col` is not numerical.
    pub fn numeric_column(&self, col: usize) -> Vec<f64> {
        match self.column(col) {
            Column::Numerical(v) => v,
            Column::Categorical(_) => panic!("column {col} is categorical"),
        }
    }

    /// Values of a categorical column (including the label column).
    ///
    /// Panics if `col` is not categorical.
    pub fn category_column(&self, col: usize) -> Vec<Symbol> {
        match self.column(col) {
            Column::Categorical(v) => v,
            Column::Numerical(_) => panic!("column {col} is numerical"),
        }
    }

    pub fn labels(&self) -> Option<Vec<Symbol>> {
        self.schema.target_index().map(|t| self.category_column(t))
    }

    pub fn select(&self, indices: &[usize]) -> Table {
        Table {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn concat(&self, other: &Table) -> Result<Table> {
        self.ensure_same_schema(other)?;
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        Ok(Table {
            schema: self.schema.clone(),
            rows,
        })
    }
}

fn parse_numeric(raw: &str) -> Option<f64> {
    raw.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a headed CSV whose header is a permutation of the schema's column
/// names. Error rows are 1-based data record numbers.
pub fn read_csv<R: Read>(reader: R, schema: impl Into<Arc<Schema>>) -> Result<Table> {
    let schema = schema.into();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::None)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();

    let mut seen = HashSet::new();
    for name in &header {
        if schema.index_of(name).is_none() {
            return Err(Error::MissingColumn(name.clone()));
        }
        if !seen.insert(name.as_str()) {
            return Err(Error::SchemaMismatch(format!("duplicate header column `{name}`")));
        }
    }
    // position in the CSV record for each schema column
    let mut source = Vec::with_capacity(schema.width());
    for name in schema.column_names() {
        match header.iter().position(|h| h == name) {
            Some(p) => source.push(p),
            None => return Err(Error::MissingColumn(name.to_owned())),
        }
    }

    let mut rows = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row_no = r + 1;
        let mut row = Vec::with_capacity(schema.width());
        for (col, &pos) in source.iter().enumerate() {
            let raw = record.get(pos).unwrap_or("");
            let name = schema.column_name(col);
            if raw.is_empty() {
                return Err(Error::MissingValue {
                    row: row_no,
                    col: name.to_owned(),
                });
            }
            let cell = match schema.column_kind(col) {
                FeatureKind::Numerical => match parse_numeric(raw) {
                    Some(v) => Cell::Float(v),
                    None => {
                        return Err(Error::UnparsableNumeric {
                            row: row_no,
                            col: name.to_owned(),
                        })
                    }
                },
                FeatureKind::Categorical => Cell::Category(Symbol::new(raw)),
            };
            row.push(cell);
        }
        rows.push(row);
    }
    Ok(Table { schema, rows })
}

pub fn load_csv(path: impl AsRef<Path>, schema: impl Into<Arc<Schema>>) -> Result<Table> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(std::io::BufReader::new(file), schema)
}

/// Writes the header and rows in schema order. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_csv_to<W: Write>(table: &Table, writer: W) -> Result<()> {
    table.ensure_non_empty()?;
    let mut wtr = csv::WriterBuilder::new().from_writer(writer);
    wtr.write_record(table.schema().column_names())?;
    let mut fields: Vec<String> = Vec::with_capacity(table.schema().width());
    for row in table.rows() {
        fields.clear();
        fields.extend(row.iter().map(|c| match c {
            Cell::Float(v) => format!("{v}"),
            Cell::Category(s) => s.as_str().to_owned(),
        }));
        wtr.write_record(&fields)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn write_csv(table: &Table, path: impl AsRef<Path>) -> Result<()> {
    table.ensure_non_empty()?;
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(table, std::io::BufWriter::new(file))
}

/// Shuffles row indices with `seed` and cuts them into consecutive parts.
///
/// Part sizes are `floor(fraction * n)`; rows left over go to the first part.
pub fn split(table: &Table, fractions: &[f64], seed: u64) -> Result<Vec<Table>> {
    table.ensure_non_empty()?;
    if fractions.is_empty() || fractions.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
        return Err(Error::BadFractions);
    }
    if (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::BadFractions);
    }
    let n = table.len();
    let mut sizes: Vec<usize> = fractions
        .iter()
        .map(|f| (f * n as f64 + 1e-9).floor() as usize)
        .collect();
    let assigned: usize = sizes.iter().sum();
    sizes[0] += n.saturating_sub(assigned);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::seeded(seed));

    let mut parts = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for size in sizes {
        parts.push(table.select(&order[start..start + size]));
        start += size;
    }
    Ok(parts)
}
