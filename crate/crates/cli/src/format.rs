use std::path::Path;

use formation_core::{RealSpectrum, Vec2};

use crate::error::CliError;

/// Six significant digits, `%g` style: fixed notation for exponents in
/// `[-5, 6)`, scientific otherwise, trailing zeros removed.
pub fn sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim(mantissa.to_string()))
    }
}

fn trim(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.to_string()
    }
}

pub fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn complex(re: f64, im: f64) -> String {
    let im6 = sig6(im.abs());
    if im6 == "0" {
        sig6(re)
    } else if im < 0.0 {
        format!("{}-{im6}i", sig6(re))
    } else {
        format!("{}+{im6}i", sig6(re))
    }
}

pub fn spectrum_list(s: &RealSpectrum) -> String {
    let parts: Vec<String> = s.values().iter().map(|c| complex(c.re, c.im)).collect();
    format!("({})", parts.join(", "))
}

pub fn position_headers(n: usize) -> Vec<String> {
    (1..=n).flat_map(|i| [format!("x{i}"), format!("y{i}")]).collect()
}

pub fn eigen_headers(k: usize) -> Vec<String> {
    (1..=k).flat_map(|i| [format!("re{i}"), format!("im{i}")]).collect()
}

pub fn position_cells(x: &[Vec2<f64>]) -> Vec<String> {
    x.iter().flat_map(|p| [sig6(p.x), sig6(p.y)]).collect()
}

pub fn eigen_cells(s: &RealSpectrum) -> Vec<String> {
    s.values().iter().flat_map(|c| [sig6(c.re), sig6(c.im)]).collect()
}

/// A CSV table held in memory until written.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_csv()).map_err(|source| CliError::Write {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(-0.0), "0");
        assert_eq!(sig6(1.0), "1");
        assert_eq!(sig6(-0.52583249), "-0.525832");
        assert_eq!(sig6(17.2138999), "17.2139");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(1234567.0), "1.23457e6");
        assert_eq!(sig6(4.2e-16), "4.2e-16");
        assert_eq!(sig6(0.000123456789), "0.000123457");
        assert_eq!(sig6(9.9999996), "10");
        assert_eq!(sig6(-1e-300), "-1e-300");
    }

    #[test]
    fn complex_values() {
        assert_eq!(complex(-1.5, 0.0), "-1.5");
        assert_eq!(complex(-1.5, 2.0), "-1.5+2i");
        assert_eq!(complex(-1.5, -2.0), "-1.5-2i");
    }
}
