use std::fmt::Write as _;

use crate::acquisition::{LoopRecord, RecordKind};

/// Version written in the first column of every row.
pub const SCHEMA_VERSION: u32 = 1;

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `printf("%.12g")`.
pub fn format_g(v: f64) -> String {
    const P: i32 = 12;
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let x: i32 = exp.parse().expect("integer exponent");
    if (-4..P).contains(&x) {
        let fixed = format!("{:.*}", (P - 1 - x) as usize, v);
        strip_zeros(&fixed).to_string()
    } else {
        let sign = if x < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa), x.abs())
    }
}

/// Header for a `dim`-dimensional benchmark with `n_sources` sources; the
/// `b_i_j` columns are the upper triangle of `B`, row by row.
pub fn header(dim: usize, n_sources: usize) -> String {
    let mut h = String::from("schema,iter,source");
    for d in 1..=dim {
        write!(h, ",x{d}").unwrap();
    }
    h.push_str(",y,cost,cum_cost,ez,vz,rel_err,acq_value,lambda");
    for i in 1..=n_sources {
        for j in i..=n_sources {
            write!(h, ",b_{i}_{j}").unwrap();
        }
    }
    h.push_str(",final");
    h
}

/// Numeric fields of one CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub iter: usize,
    /// One-based source index.
    pub source: usize,
    pub x: Vec<f64>,
    pub y: f64,
    pub cost: f64,
    pub cum_cost: f64,
    pub ez: f64,
    pub vz: f64,
    pub rel_err: f64,
    pub acq_value: f64,
    pub lambda: f64,
    pub b_flat: Vec<f64>,
    pub is_final: bool,
}

impl Row {
    pub fn from_record(r: &LoopRecord, truth: f64) -> Self {
        Row {
            iter: if r.kind == RecordKind::Initial { 0 } else { r.iteration },
            source: r.source + 1,
            x: r.x.clone(),
            y: r.y,
            cost: r.cost,
            cum_cost: r.cum_cost,
            ez: r.ez,
            vz: r.vz,
            rel_err: (r.ez - truth) / truth,
            acq_value: r.acq_value,
            lambda: r.hyper.lengthscale,
            b_flat: r.hyper.b_flat(),
            is_final: false,
        }
    }

    pub fn to_line(&self) -> String {
        let mut s = format!("{SCHEMA_VERSION},{},{}", self.iter, self.source);
        let fixed = [self.y, self.cost, self.cum_cost, self.ez, self.vz, self.rel_err, self.acq_value, self.lambda];
        let nums = self.x.iter().chain(fixed.iter()).chain(self.b_flat.iter());
        for v in nums {
            s.push(',');
            s.push_str(&format_g(*v));
        }
        s.push_str(if self.is_final { ",1" } else { ",0" });
        s
    }
}

/// Full CSV text with LF line endings; the last row is flagged final.
pub fn render(dim: usize, n_sources: usize, rows: &[Row]) -> String {
    let mut out = header(dim, n_sources);
    out.push('\n');
    for (i, r) in rows.iter().enumerate() {
        let mut r = r.clone();
        r.is_final = i + 1 == rows.len();
        out.push_str(&r.to_line());
        out.push('\n');
    }
    out
}

/// Parses the numeric columns of a rendered CSV back into rows.
pub fn parse_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(|f| f.parse().unwrap_or(f64::NAN)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333333"),
            (123456.789, "123456.789"),
            (1e-5, "1e-05"),
            (1.5e-7, "1.5e-07"),
            (123456789012345.0, "1.23456789012e+14"),
            (999999999999.5, "1e+12"),
            (-2.5, "-2.5"),
            (0.0001234, "0.0001234"),
            (1e100, "1e+100"),
            (f64::NAN, "nan"),
            (f64::INFINITY, "inf"),
        ];
        for (v, s) in cases {
            assert_eq!(format_g(v), s, "{v}");
        }
    }

    #[test]
    fn header_layout() {
        assert_eq!(
            header(2, 2),
            "schema,iter,source,x1,x2,y,cost,cum_cost,ez,vz,rel_err,acq_value,lambda,b_1_1,b_1_2,b_2_2,final"
        );
    }
}
