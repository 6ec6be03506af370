//! Rate records and their CSV form.

use std::io::{self, Write};

use serde::Serialize;

use crate::bb84::RateComponents;
use crate::iterated::IteratedParams;
use crate::protocol::Protocol;

pub const CSV_HEADER: &str = "protocol,m1,m2,p,q,Q,q_tot,rate,i_xy,i_xe";

/// Significant digits written to CSV.
pub const CSV_DIGITS: usize = 12;

/// One evaluated parameter point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePoint {
    /// `bb84`, `sixstate`, or `iterated`.
    pub protocol: String,
    pub m1: usize,
    pub m2: usize,
    pub p: f64,
    pub q: f64,
    #[serde(rename = "Q")]
    pub big_q: Option<f64>,
    pub q_tot: Option<f64>,
    /// Unclamped rate per signal.
    pub rate: f64,
    pub i_xy: f64,
    pub i_xe: f64,
    pub runtime_ms: f64,
}

impl RatePoint {
    pub fn single(protocol: Protocol, m: usize, p: f64, q: f64, c: &RateComponents) -> Self {
        Self {
            protocol: protocol.name().to_string(),
            m1: m,
            m2: 1,
            p,
            q,
            big_q: None,
            q_tot: None,
            rate: c.rate,
            i_xy: c.i_xy,
            i_xe: c.i_xe,
            runtime_ms: 0.0,
        }
    }

    pub fn iterated(params: &IteratedParams, p: f64, c: &RateComponents) -> Self {
        Self {
            protocol: "iterated".to_string(),
            m1: params.m1,
            m2: params.m2,
            p,
            q: params.q,
            big_q: Some(params.big_q),
            q_tot: Some(params.q_tot()),
            rate: c.rate,
            i_xy: c.i_xy,
            i_xe: c.i_xe,
            runtime_ms: 0.0,
        }
    }

    pub fn with_runtime(mut self, ms: f64) -> Self {
        self.runtime_ms = ms;
        self
    }

    /// The key rate as plotted: negative rates mean no key.
    pub fn clamped_rate(&self) -> f64 {
        self.rate.max(0.0)
    }

    pub fn signals(&self) -> usize {
        self.m1 * self.m2
    }

    /// `|rate - (i_xy - i_xe)/signals|`.
    pub fn consistency_error(&self) -> f64 {
        (self.rate - (self.i_xy - self.i_xe) / self.signals() as f64).abs()
    }

    pub fn csv_row(&self) -> String {
        let opt = |x: Option<f64>| x.map(format_significant).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.protocol,
            self.m1,
            self.m2,
            format_significant(self.p),
            format_significant(self.q),
            opt(self.big_q),
            opt(self.q_tot),
            format_significant(self.rate),
            format_significant(self.i_xy),
            format_significant(self.i_xe),
        )
    }
}

/// Header and one line per point, in the given order.
pub fn write_csv<W: Write>(mut out: W, points: &[RatePoint]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for point in points {
        writeln!(out, "{}", point.csv_row())?;
    }
    Ok(())
}

/// `x` rounded to [`CSV_DIGITS`] significant digits, in plain notation when
/// the exponent is in `[-5, 12)` and scientific otherwise, without trailing zeros.
pub fn format_significant(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", CSV_DIGITS - 1, x);
    let (mantissa, exponent) = sci.split_once('e').expect("scientific format has an exponent");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if (-5..CSV_DIGITS as i32).contains(&exponent) {
        let decimals = (CSV_DIGITS as i32 - 1 - exponent).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exponent)
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn significant_formatting() {
        assert_eq!(format_significant(0.0), "0");
        assert_eq!(format_significant(1.0), "1");
        assert_eq!(format_significant(0.5), "0.5");
        assert_eq!(format_significant(0.1100278644), "0.1100278644");
        assert_eq!(format_significant(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_significant(-2.0 / 3.0), "-0.666666666667");
        assert_eq!(format_significant(4.65e-10), "4.65e-10");
        assert_eq!(format_significant(123456.0), "123456");
        assert_eq!(format_significant(1.5e13), "1.5e13");
    }

    #[test]
    fn row_layout() {
        let c = RateComponents { i_xy: 0.5, i_xe: 0.25, rate: 0.25 };
        let row = RatePoint::single(Protocol::Bb84, 1, 0.1, 0.0, &c).csv_row();
        assert_eq!(row, "bb84,1,1,0.1,0,,,0.25,0.5,0.25");
        let params = IteratedParams::new(2, 3, 0.1, 0.2).unwrap();
        let row = RatePoint::iterated(&params, 0.1, &c).csv_row();
        assert!(row.starts_with("iterated,2,3,0.1,0.1,0.2,0.26,"));
    }

    proptest! {
        #[test]
        fn round_trip_within_digits(x in -1e3f64..1e3) {
            let back: f64 = format_significant(x).parse().unwrap();
            prop_assert!((back - x).abs() <= 1e-11 * x.abs().max(1e-300));
        }
    }
}
