//! In-memory relations loaded from CSV.
//!
//! A relation stores its columns as raw text plus a parsed numeric view for
//! numeric columns. Exactly one column is the time attribute; its values are
//! parsed once into [`TimeValue`]s.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::Read;
use std::ops::RangeInclusive;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Time,
    Dimension,
    Measure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueType {
    Text,
    Integer,
    Decimal,
    Date,
}

impl ValueType {
    pub fn is_numeric(self) -> bool {
        matches!(self, ValueType::Integer | ValueType::Decimal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub name: String,
    pub kind: AttributeKind,
    pub value_type: ValueType,
}

/// Optional override for schema inference of one column.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeHint {
    #[serde(default)]
    pub kind: Option<AttributeKind>,
    #[serde(default)]
    pub value_type: Option<ValueType>,
}

/// A value of the time attribute. Integers and dates never mix in one column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TimeValue {
    Int(i64),
    Date(NaiveDate),
}

impl TimeValue {
    pub fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        if let Ok(v) = text.parse::<i64>() {
            return Some(TimeValue::Int(v));
        }
        NaiveDate::parse_from_str(text, "%Y-%m-%d")
            .ok()
            .map(TimeValue::Date)
    }

    fn same_type(&self, other: &TimeValue) -> bool {
        matches!(
            (self, other),
            (TimeValue::Int(_), TimeValue::Int(_)) | (TimeValue::Date(_), TimeValue::Date(_))
        )
    }
}

impl fmt::Display for TimeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeValue::Int(v) => write!(f, "{v}"),
            TimeValue::Date(d) => write!(f, "{}", d.format("%Y-%m-%d")),
        }
    }
}

impl Serialize for TimeValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            TimeValue::Int(v) => s.serialize_i64(*v),
            TimeValue::Date(_) => s.collect_str(self),
        }
    }
}

impl<'de> Deserialize<'de> for TimeValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) => Ok(TimeValue::Int(v)),
            Raw::Text(t) => TimeValue::parse(&t)
                .ok_or_else(|| serde::de::Error::custom(format!("invalid time value {t:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Column {
    cells: Vec<String>,
    numeric: Option<Vec<f64>>,
}

impl Column {
    pub fn cells(&self) -> &[String] {
        &self.cells
    }

    /// Parsed values, present for integer and decimal columns.
    pub fn numeric(&self) -> Option<&[f64]> {
        self.numeric.as_deref()
    }
}

/// A named computed column, `expression` using `+ - * /` over columns and constants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedColumn {
    pub name: String,
    pub expression: String,
}

#[derive(Debug, Clone)]
pub struct Relation {
    schema: Vec<AttributeSchema>,
    columns: Vec<Column>,
    times: Vec<TimeValue>,
    time_index: usize,
}

impl Relation {
    /// Build a relation from already-split columns. Non-time columns are
    /// typed with the same inference rules as [`load_csv`].
    pub fn from_columns(
        time_attr: &str,
        times: Vec<TimeValue>,
        columns: Vec<(String, Vec<String>)>,
        hints: &HashMap<String, TypeHint>,
    ) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(first) = times.first() {
            if let Some(pos) = times.iter().position(|t| !t.same_type(first)) {
                return Err(Error::TimeParse {
                    row: pos + 1,
                    column: time_attr.to_string(),
                    value: times[pos].to_string(),
                });
            }
        }
        let time_type = match times[0] {
            TimeValue::Int(_) => ValueType::Integer,
            TimeValue::Date(_) => ValueType::Date,
        };
        let mut schema = vec![AttributeSchema {
            name: time_attr.to_string(),
            kind: AttributeKind::Time,
            value_type: time_type,
        }];
        let mut cols = vec![Column {
            cells: times.iter().map(ToString::to_string).collect(),
            numeric: None,
        }];
        for (name, cells) in columns {
            if cells.len() != times.len() {
                return Err(Error::InvalidParameter(format!(
                    "column {name:?} has {} cells, expected {}",
                    cells.len(),
                    times.len()
                )));
            }
            let hint = hints.get(&name).copied().unwrap_or_default();
            let (attr, column) = type_column(name, cells, hint)?;
            schema.push(attr);
            cols.push(column);
        }
        Ok(Relation {
            schema,
            columns: cols,
            times,
            time_index: 0,
        })
    }

    pub fn schema(&self) -> &[AttributeSchema] {
        &self.schema
    }

    pub fn row_count(&self) -> usize {
        self.times.len()
    }

    pub fn time_attr(&self) -> &str {
        &self.schema[self.time_index].name
    }

    pub fn times(&self) -> &[TimeValue] {
        &self.times
    }

    /// Sorted distinct time values; the grid every series is defined on.
    pub fn distinct_times(&self) -> Vec<TimeValue> {
        self.times
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn attribute(&self, name: &str) -> Result<(usize, &AttributeSchema)> {
        self.schema
            .iter()
            .enumerate()
            .find(|(_, a)| a.name == name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        let (idx, _) = self.attribute(name)?;
        Ok(&self.columns[idx])
    }

    pub fn column_at(&self, idx: usize) -> &Column {
        &self.columns[idx]
    }

    /// Keep only rows whose time value falls in `window`.
    pub fn restrict_to(&self, window: &RangeInclusive<TimeValue>) -> Result<Relation> {
        let keep: Vec<usize> = (0..self.row_count())
            .filter(|&r| window.contains(&self.times[r]))
            .collect();
        if keep.is_empty() {
            return Err(Error::EmptyWindow);
        }
        let columns = self
            .columns
            .iter()
            .map(|c| Column {
                cells: keep.iter().map(|&r| c.cells[r].clone()).collect(),
                numeric: c
                    .numeric
                    .as_ref()
                    .map(|v| keep.iter().map(|&r| v[r]).collect()),
            })
            .collect();
        Ok(Relation {
            schema: self.schema.clone(),
            columns,
            times: keep.iter().map(|&r| self.times[r]).collect(),
            time_index: self.time_index,
        })
    }

    /// Append computed measure columns.
    pub fn with_derived(mut self, derived: &[DerivedColumn]) -> Result<Relation> {
        for def in derived {
            if self.attribute(&def.name).is_ok() {
                return Err(Error::DerivedColumn {
                    name: def.name.clone(),
                    message: "a column with this name already exists".into(),
                });
            }
            let expr = Expr::parse(&def.expression).map_err(|message| Error::DerivedColumn {
                name: def.name.clone(),
                message,
            })?;
            let mut inputs = Vec::new();
            for col in expr.columns() {
                let (idx, attr) = self.attribute(col)?;
                if !attr.value_type.is_numeric() {
                    return Err(Error::DerivedColumn {
                        name: def.name.clone(),
                        message: format!("column {col:?} is not numeric"),
                    });
                }
                inputs.push((col.to_string(), idx));
            }
            let values: Vec<f64> = (0..self.row_count())
                .map(|r| {
                    expr.eval(&|name| {
                        inputs
                            .iter()
                            .find(|(n, _)| n == name)
                            .and_then(|(_, idx)| self.columns[*idx].numeric.as_ref())
                            .map_or(f64::NAN, |v| v[r])
                    })
                })
                .collect();
            self.schema.push(AttributeSchema {
                name: def.name.clone(),
                kind: AttributeKind::Measure,
                value_type: ValueType::Decimal,
            });
            self.columns.push(Column {
                cells: values.iter().map(ToString::to_string).collect(),
                numeric: Some(values),
            });
        }
        Ok(self)
    }
}

/// Parse a header-bearing CSV into a [`Relation`].
///
/// Row numbers in errors count data records from 1 (the header is not counted).
pub fn load_csv<R: Read>(
    source: R,
    time_attr: &str,
    hints: &HashMap<String, TypeHint>,
) -> Result<Relation> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(source);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Csv {
            row: 0,
            message: e.to_string(),
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(Error::EmptyInput);
    }
    let time_idx = headers
        .iter()
        .position(|h| h == time_attr)
        .ok_or_else(|| Error::UnknownAttribute(time_attr.to_string()))?;

    let mut raw: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Csv {
            row,
            message: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(Error::Csv {
                row,
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for (col, field) in raw.iter_mut().zip(record.iter()) {
            col.push(field.to_string());
        }
    }
    if raw[time_idx].is_empty() {
        return Err(Error::EmptyInput);
    }

    let mut times = Vec::with_capacity(raw[time_idx].len());
    for (i, cell) in raw[time_idx].iter().enumerate() {
        let t = TimeValue::parse(cell).ok_or_else(|| Error::TimeParse {
            row: i + 1,
            column: time_attr.to_string(),
            value: cell.clone(),
        })?;
        if let Some(first) = times.first() {
            if !t.same_type(first) {
                return Err(Error::TimeParse {
                    row: i + 1,
                    column: time_attr.to_string(),
                    value: cell.clone(),
                });
            }
        }
        times.push(t);
    }

    let mut raw_iter = raw.into_iter();
    let mut columns = Vec::with_capacity(headers.len());
    for (idx, name) in headers.iter().enumerate() {
        let cells = raw_iter.next().unwrap_or_default();
        if idx == time_idx {
            continue;
        }
        columns.push((name.clone(), cells));
    }
    // the time column is re-rendered from parsed values, keep original order of others
    let mut relation = Relation::from_columns(time_attr, times, columns, hints)?;
    if time_idx != 0 {
        let time_schema = relation.schema.remove(0);
        let time_col = relation.columns.remove(0);
        relation.schema.insert(time_idx, time_schema);
        relation.columns.insert(time_idx, time_col);
        relation.time_index = time_idx;
    }
    Ok(relation)
}

fn type_column(name: String, cells: Vec<String>, hint: TypeHint) -> Result<(AttributeSchema, Column)> {
    let parse_int = |c: &String| c.trim().parse::<i64>().ok();
    let parse_dec = |c: &String| c.trim().parse::<f64>().ok().filter(|v| v.is_finite());

    let value_type = match hint.value_type {
        Some(t) => t,
        None if hint.kind == Some(AttributeKind::Measure) => {
            if cells.iter().all(|c| parse_int(c).is_some()) {
                ValueType::Integer
            } else {
                ValueType::Decimal
            }
        }
        None if hint.kind == Some(AttributeKind::Dimension) => ValueType::Text,
        None => {
            if cells.iter().all(|c| parse_int(c).is_some()) {
                ValueType::Integer
            } else if cells.iter().all(|c| parse_dec(c).is_some()) {
                ValueType::Decimal
            } else {
                ValueType::Text
            }
        }
    };
    let kind = hint.kind.unwrap_or(if value_type.is_numeric() {
        AttributeKind::Measure
    } else {
        AttributeKind::Dimension
    });
    if kind == AttributeKind::Time {
        return Err(Error::InvalidParameter(format!(
            "column {name:?} cannot be hinted as a second time attribute"
        )));
    }

    let numeric = if value_type.is_numeric() {
        let mut values = Vec::with_capacity(cells.len());
        for (i, c) in cells.iter().enumerate() {
            match parse_dec(c) {
                Some(v) => values.push(v),
                None => {
                    return Err(Error::MeasureParse {
                        row: i + 1,
                        column: name,
                        value: c.clone(),
                    })
                }
            }
        }
        Some(values)
    } else {
        None
    };
    Ok((
        AttributeSchema {
            name,
            kind,
            value_type,
        },
        Column { cells, numeric },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<Relation> {
        load_csv(text.as_bytes(), "date", &HashMap::new())
    }

    #[test]
    fn loads_four_rows() {
        let rel = load("date,state,cases\n2020-01-01,NY,1\n2020-01-01,CA,2\n2020-01-02,NY,3\n2020-01-02,CA,5\n")
            .unwrap();
        assert_eq!(rel.row_count(), 4);
        assert_eq!(rel.time_attr(), "date");
        assert_eq!(rel.distinct_times().len(), 2);
        let (_, cases) = rel.attribute("cases").unwrap();
        assert_eq!(cases.kind, AttributeKind::Measure);
        assert_eq!(cases.value_type, ValueType::Integer);
        let (_, state) = rel.attribute("state").unwrap();
        assert_eq!(state.kind, AttributeKind::Dimension);
    }

    #[test]
    fn time_column_need_not_come_first() {
        let rel = load("state,date,cases\nNY,2020-01-01,1\nCA,2020-01-02,2\n").unwrap();
        assert_eq!(rel.time_attr(), "date");
        assert_eq!(rel.schema()[0].name, "state");
        assert_eq!(rel.column("state").unwrap().cells()[1], "CA");
    }

    #[test]
    fn declared_measure_rejects_text() {
        let mut hints = HashMap::new();
        hints.insert(
            "cases".to_string(),
            TypeHint {
                kind: Some(AttributeKind::Measure),
                value_type: None,
            },
        );
        let err = load_csv(
            "date,state,cases\n2020-01-01,NY,1\n2020-01-02,NY,lots\n".as_bytes(),
            "date",
            &hints,
        )
        .unwrap_err();
        match err {
            Error::MeasureParse { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "cases");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_time_value_names_cell() {
        let err = load("date,cases\n2020-01-01,1\nyesterday,2\n").unwrap_err();
        assert!(matches!(err, Error::TimeParse { row: 2, ref value, .. } if value == "yesterday"));
    }

    #[test]
    fn mixed_time_types_rejected() {
        assert!(matches!(
            load("date,cases\n2020-01-01,1\n7,2\n"),
            Err(Error::TimeParse { row: 2, .. })
        ));
    }

    #[test]
    fn ragged_row_is_reported() {
        let err = load("date,state,cases\n2020-01-01,NY,1\n2020-01-02,NY\n").unwrap_err();
        assert!(matches!(err, Error::Csv { row: 2, .. }), "{err:?}");
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(load(""), Err(Error::EmptyInput)));
        assert!(matches!(load("date,cases\n"), Err(Error::EmptyInput)));
    }

    #[test]
    fn unknown_time_attr() {
        assert!(matches!(
            load_csv("t,v\n1,2\n".as_bytes(), "date", &HashMap::new()),
            Err(Error::UnknownAttribute(_))
        ));
    }

    #[test]
    fn integer_time_and_quoted_fields() {
        let rel = load_csv(
            "t,name,v\n2,\"Smith, J\",1.5\n1,\"x\"\"y\",2\n".as_bytes(),
            "t",
            &HashMap::new(),
        )
        .unwrap();
        assert_eq!(rel.distinct_times(), vec![TimeValue::Int(1), TimeValue::Int(2)]);
        assert_eq!(rel.column("name").unwrap().cells()[0], "Smith, J");
        assert_eq!(rel.column("name").unwrap().cells()[1], "x\"y");
        assert_eq!(rel.column("v").unwrap().numeric().unwrap(), &[1.5, 2.0]);
    }

    #[test]
    fn window_restriction() {
        let rel = load_csv("t,v\n1,1\n2,2\n3,3\n".as_bytes(), "t", &HashMap::new()).unwrap();
        let w = rel
            .restrict_to(&(TimeValue::Int(2)..=TimeValue::Int(3)))
            .unwrap();
        assert_eq!(w.row_count(), 2);
        assert!(matches!(
            rel.restrict_to(&(TimeValue::Int(9)..=TimeValue::Int(10))),
            Err(Error::EmptyWindow)
        ));
    }

    #[test]
    fn derived_columns() {
        let rel = load_csv(
            "t,price,share\n1,2,10\n2,4,10\n".as_bytes(),
            "t",
            &HashMap::new(),
        )
        .unwrap()
        .with_derived(&[DerivedColumn {
            name: "cap".into(),
            expression: "price * share / 4".into(),
        }])
        .unwrap();
        assert_eq!(rel.column("cap").unwrap().numeric().unwrap(), &[5.0, 10.0]);
        assert_eq!(rel.attribute("cap").unwrap().1.kind, AttributeKind::Measure);
    }
}
