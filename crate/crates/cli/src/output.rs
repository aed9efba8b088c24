//! JSON and CSV rendering.
//!
//! Floats are written with 17 significant digits so that identical inputs
//! give byte-identical output; exact rationals are strings `"p/q"`.

use serde::Serializer;
use serde_json::Number;

use liouville_core::exact::{self, Rational};

/// `v` in scientific notation with 17 significant digits; `null` if not finite.
pub fn float<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        let n: Number = format!("{v:.16e}").parse().expect("valid number literal");
        s.serialize_some(&n)
    } else {
        s.serialize_none()
    }
}

pub fn floats<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&Float(*x))?;
    }
    seq.end()
}

pub fn opt_float<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) => float(x, s),
        None => s.serialize_none(),
    }
}

/// An `f64` that serializes through [`float`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Float(pub f64);

impl serde::Serialize for Float {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        float(&self.0, s)
    }
}

pub fn rational(q: &Rational) -> String {
    exact::format_rational(q)
}

/// A big integer as a bare JSON number.
pub fn integer(n: &num_bigint::BigInt) -> Number {
    n.to_string().parse().expect("integers are valid numbers")
}

/// A CSV table: header plus rows of already formatted cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn csv_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}
