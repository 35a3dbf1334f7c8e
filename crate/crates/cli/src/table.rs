//! CSV output: a `#`-prefixed schema line, a header row, then data rows.
//! Floats are written with 17 significant digits so that files round-trip
//! and reruns can be compared byte for byte.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Empty,
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Float(x) => Some(*x),
            _ => None,
        }
    }

    fn render(&self, out: &mut String) {
        match self {
            Cell::Empty => {}
            Cell::Int(i) => {
                let _ = write!(out, "{i}");
            }
            Cell::Float(x) => out.push_str(&format_float(*x)),
            Cell::Text(s) => {
                if s.contains([',', '"', '\n']) {
                    out.push('"');
                    out.push_str(&s.replace('"', "\"\""));
                    out.push('"');
                } else {
                    out.push_str(s);
                }
            }
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Empty, Into::into)
    }
}

pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub schema: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(schema: impl Into<String>, columns: &[&'static str]) -> Self {
        Table {
            schema: schema.into(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    /// Append a row given as (column, value) pairs; unnamed columns stay empty.
    pub fn push(&mut self, fields: Vec<(&str, Cell)>) {
        let mut row = vec![Cell::Empty; self.columns.len()];
        for (name, value) in fields {
            let i = self
                .column(name)
                .unwrap_or_else(|| panic!("unknown column {name} in {}", self.schema));
            row[i] = value;
        }
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    pub fn get(&self, row: usize, name: &str) -> Option<&Cell> {
        self.column(name).map(|i| &self.rows[row][i])
    }

    /// Rows whose `name` column holds the text `value`.
    pub fn rows_where<'a>(
        &'a self,
        name: &str,
        value: &'a str,
    ) -> impl Iterator<Item = usize> + 'a {
        let i = self.column(name);
        (0..self.rows.len())
            .filter(move |r| matches!((i, i.map(|i| &self.rows[*r][i])), (Some(_), Some(Cell::Text(s))) if s == value))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {}", self.schema);
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                cell.render(&mut out);
            }
            out.push('\n');
        }
        out
    }
}
