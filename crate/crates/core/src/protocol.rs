//! Protocol-level entry points shared by the command line and the tests.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::bb84::{rate_bb84_components, rate_bb84_opt_with_hint, RateComponents};
use crate::error::{Error, Result};
use crate::iterated::{rate_iterated_opt, IteratedParams};
use crate::optimizer::{find_threshold, RateProbe, ThresholdResult};
use crate::sixstate::{rate_sixstate_components, rate_sixstate_opt_with_hint, MAX_ERROR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Bb84,
    Sixstate,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Bb84 => "bb84",
            Protocol::Sixstate => "sixstate",
        }
    }

    /// Largest admissible bit error rate.
    pub fn max_error(self) -> f64 {
        match self {
            Protocol::Bb84 => 0.5,
            Protocol::Sixstate => MAX_ERROR,
        }
    }

    /// Bracket that contains the threshold for every supported blocklength.
    pub fn default_bracket(self) -> (f64, f64) {
        match self {
            Protocol::Bb84 => (0.05, 0.2),
            Protocol::Sixstate => (0.05, 0.25),
        }
    }

    pub fn components(self, m: usize, p: f64, q: f64) -> Result<RateComponents> {
        match self {
            Protocol::Bb84 => rate_bb84_components(m, p, q),
            Protocol::Sixstate => rate_sixstate_components(m, p, q),
        }
    }

    pub fn rate(self, m: usize, p: f64, q: f64) -> Result<f64> {
        Ok(self.components(m, p, q)?.rate)
    }

    /// Rate maximized over `q`, as `(q*, rate)`.
    pub fn optimized(self, m: usize, p: f64, hint: Option<f64>) -> Result<(f64, f64)> {
        let r = match self {
            Protocol::Bb84 => rate_bb84_opt_with_hint(m, p, hint)?,
            Protocol::Sixstate => rate_sixstate_opt_with_hint(m, p, hint)?,
        };
        Ok((r.argmax, r.value))
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bb84" => Ok(Protocol::Bb84),
            "sixstate" | "six-state" | "6-state" => Ok(Protocol::Sixstate),
            other => Err(Error::Domain(format!("unknown protocol '{other}'"))),
        }
    }
}

/// Fixed added noise or optimization over it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum NoiseChoice {
    Fixed(f64),
    Optimized,
}

impl FromStr for NoiseChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(NoiseChoice::Optimized);
        }
        s.parse::<f64>()
            .map(NoiseChoice::Fixed)
            .map_err(|_| Error::Domain(format!("noise '{s}' is neither a number nor 'auto'")))
    }
}

/// Bit-error threshold of one protocol at blocklength `m`.
///
/// With optimized noise each step starts from the previous optimum.
pub fn threshold(protocol: Protocol, m: usize, noise: NoiseChoice, p_lo: f64, p_hi: f64) -> Result<ThresholdResult> {
    let mut hint = None;
    find_threshold(
        |p| match noise {
            NoiseChoice::Fixed(q) => Ok(RateProbe {
                rate: protocol.rate(m, p, q)?,
                noise: vec![q],
            }),
            NoiseChoice::Optimized => {
                let (q, rate) = protocol.optimized(m, p, hint)?;
                hint = Some(q);
                Ok(RateProbe { rate, noise: vec![q] })
            }
        },
        p_lo,
        p_hi,
    )
}

/// Threshold of the twofold iterated scheme, optimized over `(q, Q)`.
pub fn iterated_threshold(m1: usize, m2: usize, p_lo: f64, p_hi: f64) -> Result<ThresholdResult> {
    IteratedParams::new(m1, m2, 0.0, 0.0)?;
    find_threshold(
        |p| {
            let r = rate_iterated_opt(m1, m2, p)?;
            Ok(RateProbe {
                rate: r.value,
                noise: vec![r.argmax.0, r.argmax.1],
            })
        },
        p_lo,
        p_hi,
    )
}
