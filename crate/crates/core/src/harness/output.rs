//! CSV tables and PGM rasters.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::model::State;

/// Formats with 12 significant digits, dropping trailing zeros.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim(mantissa.to_string()), exp)
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// A schema-versioned CSV document built in memory.
#[derive(Clone, Debug)]
pub struct Csv {
    columns: usize,
    text: String,
}

impl Csv {
    /// `#schema=<name>/<version>`, then `#key=value` lines, then the header.
    pub fn new(schema: &str, version: u32, meta: &[(&str, String)], header: &[&str]) -> Self {
        let mut text = format!("#schema={schema}/{version}\n");
        for (k, v) in meta {
            let _ = writeln!(text, "#{k}={v}");
        }
        text.push_str(&header.join(","));
        text.push('\n');
        Csv {
            columns: header.len(),
            text,
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        assert_eq!(cells.len(), self.columns, "row width");
        let line: Vec<String> = cells.iter().map(Cell::render).collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

#[derive(Clone, Debug)]
pub enum Cell {
    F(f64),
    I(i64),
    U(usize),
    B(bool),
    S(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => fmt_num(*x),
            Cell::I(x) => x.to_string(),
            Cell::U(x) => x.to_string(),
            Cell::B(b) => b.to_string(),
            Cell::S(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

/// Writes to `path`, or to stdout when absent.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, bytes),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()
        }
    }
}

/// Gray level of state `k` in an `n`-state alphabet: `floor(255(1 - k/(n-1)))`.
pub fn gray(k: State, n: usize) -> u8 {
    (255.0 * (1.0 - k as f64 / (n - 1) as f64)).floor() as u8
}

/// Binary PGM with one row per sample time, latest first.
pub fn pgm(samples: &[Vec<State>], alphabet_size: usize) -> Vec<u8> {
    let width = samples.first().map_or(0, Vec::len);
    let mut out = format!("P5\n{} {}\n255\n", width, samples.len()).into_bytes();
    for row in samples.iter().rev() {
        out.extend(row.iter().map(|&k| gray(k, alphabet_size)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt_num(0.1 + 0.2), "0.3");
        assert_eq!(fmt_num(5.5), "5.5");
        assert_eq!(fmt_num(-5.0), "-5");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(123456.7890123456), "123456.789012");
        assert_eq!(fmt_num(2.5e-9), "2.5e-9");
        assert_eq!(fmt_num(1e15), "1e15");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(f64::NAN), "nan");
    }

    #[test]
    fn csv_layout() {
        let mut c = Csv::new("demo", 1, &[("seed", "3".into())], &["a", "b"]);
        c.row(&[Cell::F(0.5), Cell::B(true)]);
        assert_eq!(c.as_str(), "#schema=demo/1\n#seed=3\na,b\n0.5,true\n");
    }

    #[test]
    fn gray_levels() {
        assert_eq!(gray(0, 2), 255);
        assert_eq!(gray(1, 2), 0);
        assert_eq!(gray(1, 3), 127);
    }

    #[test]
    fn pgm_puts_latest_row_first() {
        let img = pgm(&[vec![0, 0], vec![1, 0]], 2);
        assert!(img.starts_with(b"P5\n2 2\n255\n"));
        assert_eq!(&img[img.len() - 4..], &[0, 255, 255, 255]);
    }
}
