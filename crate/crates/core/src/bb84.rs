//! BB84 with noisy preprocessing and an `m`-qubit repetition ("cat") code.
//!
//! Alice flips each sifted bit with probability `q`, then announces the
//! syndrome of the repetition code on blocks of `m` bits and keeps the first
//! bit of each block. The rate per signal is `(I(X:Y) - I(X:E)) / m`.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::combinatorics::{ln_pow, LnFactorial};
use crate::entropy::binary_entropy_unchecked;
use crate::error::{check_probability, Error, Result};
use crate::optimizer::{maximize_over_noise, maximize_over_noise_with_hint, OptimizationResult};
use crate::qubit::QubitDensity;
use crate::schur::{ConjugatePair, MAX_BLOCKLENGTH};

/// Joint distribution of bit flips `u` and phase flips `v` on the effective channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BitPhaseDistribution {
    pub p00: f64,
    pub p10: f64,
    pub p11: f64,
    pub p01: f64,
}

impl BitPhaseDistribution {
    /// `p_uv` with `u` the bit flip and `v` the phase flip.
    pub fn new(p00: f64, p10: f64, p11: f64, p01: f64) -> Result<Self> {
        for (name, x) in [("p00", p00), ("p10", p10), ("p11", p11), ("p01", p01)] {
            if x.is_nan() || x < 0.0 {
                return Err(Error::Domain(format!("{name} = {x} is negative")));
            }
        }
        let total = p00 + p10 + p11 + p01;
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("bit/phase probabilities sum to {total}")));
        }
        Ok(Self { p00, p10, p11, p01 })
    }

    /// The BB84 family `{1 - 2p + t, p - t, t, p - t}` with `t ∈ [0, p]`, `p ≤ ½`.
    pub fn bb84(p: f64, t: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&p) {
            return Err(Error::Domain(format!("p = {p} is not in [0, 1/2]")));
        }
        if !(0.0..=p).contains(&t) {
            return Err(Error::Domain(format!("t = {t} is not in [0, p]")));
        }
        Self::new(1.0 - 2.0 * p + t, p - t, t, p - t)
    }

    /// Independent bit and phase errors, `t = p²`.
    pub fn independent(p: f64) -> Result<Self> {
        Self::bb84(p, p * p)
    }

    pub fn get(&self, u: u8, v: u8) -> f64 {
        match (u & 1, v & 1) {
            (0, 0) => self.p00,
            (1, 0) => self.p10,
            (1, 1) => self.p11,
            _ => self.p01,
        }
    }

    /// Probability of a bit flip.
    pub fn bit_error(&self) -> f64 {
        self.p10 + self.p11
    }

    /// Probability of a phase flip.
    pub fn phase_error(&self) -> f64 {
        self.p01 + self.p11
    }
}

/// Blocklength and added-noise rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseParams {
    pub m: usize,
    pub q: f64,
}

impl NoiseParams {
    pub fn new(m: usize, q: f64) -> Result<Self> {
        check_blocklength(m)?;
        check_noise(q)?;
        Ok(Self { m, q })
    }

    pub fn effective_error(&self, p: f64) -> f64 {
        effective_error(p, self.q)
    }
}

/// Error rate after local randomization: `p(1-q) + (1-p)q`.
pub fn effective_error(p: f64, q: f64) -> f64 {
    p * (1.0 - q) + (1.0 - p) * q
}

pub(crate) fn check_blocklength(m: usize) -> Result<()> {
    if m == 0 || m > MAX_BLOCKLENGTH {
        return Err(Error::Domain(format!("blocklength {m} outside 1..={MAX_BLOCKLENGTH}")));
    }
    Ok(())
}

pub(crate) fn check_noise(q: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&q) {
        return Err(Error::Domain(format!("noise rate q = {q} is not in [0, 1/2]")));
    }
    Ok(())
}

pub(crate) fn check_bb84_error(p: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&p) {
        return Err(Error::Domain(format!("bit error rate p = {p} is not in [0, 1/2]")));
    }
    Ok(())
}

/// Probabilities of the logical bit `l` and relative-syndrome weight `s`
/// for one repetition block with i.i.d. flips at rate `p̃`.
///
/// `P̃(0, s) = p̃^s (1-p̃)^{m-s}` and `P̃(1, s) = p̃^{m-s} (1-p̃)^s` are the
/// probabilities of a single syndrome pattern; each weight `s` has
/// `C(m-1, s)` patterns. Values are stored as logarithms.
#[derive(Debug, Clone, PartialEq)]
pub struct SyndromeWeightTable {
    m: usize,
    p_tilde: f64,
    ln_entries: Vec<[f64; 2]>,
    ln_multiplicity: Vec<f64>,
}

impl SyndromeWeightTable {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p_tilde(&self) -> f64 {
        self.p_tilde
    }

    /// `P̃(l, s)` for one syndrome pattern of weight `s`.
    pub fn entry(&self, l: usize, s: usize) -> f64 {
        self.ln_entries[s][l].exp()
    }

    pub fn ln_entry(&self, l: usize, s: usize) -> f64 {
        self.ln_entries[s][l]
    }

    /// `ln C(m-1, s)`.
    pub fn ln_multiplicity(&self, s: usize) -> f64 {
        self.ln_multiplicity[s]
    }

    /// `P̃(l | s)`.
    pub fn conditional(&self, l: usize, s: usize) -> f64 {
        let [a, b] = self.ln_entries[s];
        let (own, other) = if l == 0 { (a, b) } else { (b, a) };
        if own == f64::NEG_INFINITY {
            return if other == f64::NEG_INFINITY { 0.5 } else { 0.0 };
        }
        1.0 / (1.0 + (other - own).exp())
    }

    /// Total probability of all patterns of weight `s`.
    pub fn weight_mass(&self, s: usize) -> f64 {
        let [a, b] = self.ln_entries[s];
        (self.ln_multiplicity[s] + a).exp() + (self.ln_multiplicity[s] + b).exp()
    }

    /// `Σ_{l,s} C(m-1, s) P̃(l, s)`.
    pub fn total_mass(&self) -> f64 {
        (0..self.m).map(|s| self.weight_mass(s)).sum()
    }
}

/// Syndrome table for blocklength `m` and effective error `p̃ ∈ [0, ½]`.
pub fn syndrome_table(m: usize, p_tilde: f64) -> Result<SyndromeWeightTable> {
    check_blocklength(m)?;
    if !(0.0..=1.0).contains(&p_tilde) {
        return Err(Error::Domain(format!("effective error {p_tilde} is not in [0, 1]")));
    }
    let lf = LnFactorial::new(m);
    let ln_p = p_tilde.ln();
    let ln_1p = (-p_tilde).ln_1p();
    let ln_entries = (0..m)
        .map(|s| {
            let (s_f, rest) = (s as f64, (m - s) as f64);
            [
                ln_pow(ln_p, s_f) + ln_pow(ln_1p, rest),
                ln_pow(ln_p, rest) + ln_pow(ln_1p, s_f),
            ]
        })
        .collect();
    let ln_multiplicity = (0..m).map(|s| lf.ln_binomial(m - 1, s)).collect();
    Ok(SyndromeWeightTable {
        m,
        p_tilde,
        ln_entries,
        ln_multiplicity,
    })
}

/// `I(X:Y) = 1 - Σ_s C(m-1,s) P̃(s) h(P̃(l|s))`, bits per block.
///
/// Depends on the channel only through `p̃`.
pub fn mutual_info_xy(m: usize, p_tilde: f64) -> Result<f64> {
    Ok(1.0 - equivocation_xy(m, p_tilde)?)
}

/// `H(X|Y) = 1 - I(X:Y)`, summed directly so that it keeps full relative
/// precision when it is tiny.
pub fn equivocation_xy(m: usize, p_tilde: f64) -> Result<f64> {
    let table = syndrome_table(m, p_tilde)?;
    Ok(equivocation_from_table(&table))
}

pub fn equivocation_from_table(table: &SyndromeWeightTable) -> f64 {
    let mut loss = 0.0;
    for s in 0..table.m() {
        let mass = table.weight_mass(s);
        if mass > 0.0 {
            loss += mass * binary_entropy_unchecked(table.conditional(1, s));
        }
    }
    loss.clamp(0.0, 1.0)
}

/// `ρ_pq = (1-q)[φ₊] + q[φ₋]` with `|φ±> = √(1-p)|0> ± √p|1>`.
pub fn eve_state(p: f64, q: f64) -> Result<QubitDensity> {
    QubitDensity::rho_pq(p, q)
}

/// `I(X:E) = S(½ρ^⊗m + ½(ZρZ)^⊗m) - m S(ρ)`, bits per block, for independent errors.
pub fn mutual_info_xe_bb84(m: usize, p: f64, q: f64) -> Result<f64> {
    Ok(1.0 - equivocation_xe_bb84(m, p, q)?)
}

/// `H(X|E) = 1 - I(X:E)`.
///
/// Evaluated as `χ / ln 2` where `χ` is the Holevo deficit of the two tensor
/// powers (see [`ConjugatePair`]): the same quantity written as a sum of
/// nonnegative block terms.
pub fn equivocation_xe_bb84(m: usize, p: f64, q: f64) -> Result<f64> {
    check_blocklength(m)?;
    check_bb84_error(p)?;
    check_noise(q)?;
    let rho = eve_state(p, q)?;
    let mut pair = ConjugatePair::new(&rho, m)?;
    let deficit = pair.deficit_nats(m, 0.5f64.ln(), 1.0)?;
    Ok((deficit / LN_2).clamp(0.0, 1.0))
}

/// Both mutual informations and the rate per signal at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateComponents {
    pub i_xy: f64,
    pub i_xe: f64,
    /// `(i_xy - i_xe) / signals`; may be negative.
    pub rate: f64,
}

impl RateComponents {
    /// From `H(X|Y)` and `H(X|E)`; the rate is formed from these directly,
    /// which avoids cancelling two numbers close to one.
    pub fn from_equivocations(h_xy: f64, h_xe: f64, signals: usize) -> Self {
        Self {
            i_xy: 1.0 - h_xy,
            i_xe: 1.0 - h_xe,
            rate: (h_xe - h_xy) / signals as f64,
        }
    }
}

pub fn rate_bb84_components(m: usize, p: f64, q: f64) -> Result<RateComponents> {
    check_probability("p", p)?;
    let h_xy = equivocation_xy(m, effective_error(p, q))?;
    let h_xe = equivocation_xe_bb84(m, p, q)?;
    Ok(RateComponents::from_equivocations(h_xy, h_xe, m))
}

/// Key rate per signal, unclamped.
pub fn rate_bb84(m: usize, p: f64, q: f64) -> Result<f64> {
    Ok(rate_bb84_components(m, p, q)?.rate)
}

/// `1 - 2h(p)`: the rate without preprocessing.
pub fn rate_bb84_plain(p: f64) -> f64 {
    1.0 - 2.0 * binary_entropy_unchecked(p)
}

/// Rate maximized over `q ∈ [0, ½]`.
pub fn rate_bb84_opt(m: usize, p: f64) -> Result<OptimizationResult> {
    check_blocklength(m)?;
    check_bb84_error(p)?;
    maximize_over_noise(|q| rate_bb84(m, p, q), 0.0, 0.5)
}

/// As [`rate_bb84_opt`], also trying `hint` (e.g. the optimum at a nearby `p`).
pub fn rate_bb84_opt_with_hint(m: usize, p: f64, hint: Option<f64>) -> Result<OptimizationResult> {
    check_blocklength(m)?;
    check_bb84_error(p)?;
    maximize_over_noise_with_hint(|q| rate_bb84(m, p, q), 0.0, 0.5, hint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schur::{mixture_entropy, WeightedQubitFamily};

    fn h(x: f64) -> f64 {
        binary_entropy_unchecked(x)
    }

    #[test]
    fn distribution_family() {
        let d = BitPhaseDistribution::bb84(0.1, 0.01).unwrap();
        assert!((d.bit_error() - 0.1).abs() < 1e-15 && (d.phase_error() - 0.1).abs() < 1e-15);
        assert!(BitPhaseDistribution::bb84(0.1, 0.2).is_err());
        assert!(BitPhaseDistribution::bb84(0.6, 0.0).is_err());
        assert!(BitPhaseDistribution::new(0.5, 0.5, 0.1, 0.0).is_err());
        assert_eq!(d.get(1, 1), 0.01);
    }

    #[test]
    fn syndrome_table_examples() {
        let t = syndrome_table(1, 0.2).unwrap();
        assert!((t.entry(0, 0) - 0.8).abs() < 1e-15 && (t.entry(1, 0) - 0.2).abs() < 1e-15);

        let pt = 0.13;
        let t = syndrome_table(2, pt).unwrap();
        assert!((t.entry(0, 0) - (1.0 - pt) * (1.0 - pt)).abs() < 1e-15);
        assert!((t.entry(0, 1) - pt * (1.0 - pt)).abs() < 1e-15);
        assert!((t.entry(1, 0) - pt * pt).abs() < 1e-15);
        assert!((t.entry(1, 1) - pt * (1.0 - pt)).abs() < 1e-15);

        let t = syndrome_table(9, 0.5).unwrap();
        for s in 0..9 {
            assert!((t.conditional(1, s) - 0.5).abs() < 1e-15);
        }
        assert!(syndrome_table(0, 0.1).is_err());
        assert!(syndrome_table(3, 1.2).is_err());
    }

    #[test]
    fn syndrome_table_normalized() {
        for m in [1usize, 2, 5, 17, 100, 501, 1024] {
            for pt in [0.0, 1e-5, 0.07, 0.3, 0.5] {
                let t = syndrome_table(m, pt).unwrap();
                assert!((t.total_mass() - 1.0).abs() < 1e-12, "m = {m}, p̃ = {pt}");
            }
        }
    }

    #[test]
    fn mutual_info_xy_examples() {
        assert_eq!(mutual_info_xy(7, 0.0).unwrap(), 1.0);
        for pt in [0.01, 0.11, 0.3, 0.5] {
            assert!((mutual_info_xy(1, pt).unwrap() - (1.0 - h(pt))).abs() < 1e-14);
        }
        assert!(mutual_info_xy(6, 0.5).unwrap().abs() < 1e-14);
    }

    #[test]
    fn syndrome_information_gain() {
        // Knowing the syndrome can only help: I ≥ 1 - h(marginal logical error).
        for m in [2usize, 3, 8, 40] {
            for pt in [0.02, 0.1, 0.25, 0.4] {
                let t = syndrome_table(m, pt).unwrap();
                let marginal: f64 = (0..m).map(|s| (t.ln_multiplicity(s) + t.ln_entry(1, s)).exp()).sum();
                assert!(mutual_info_xy(m, pt).unwrap() >= 1.0 - h(marginal) - 1e-12);
            }
        }
    }

    #[test]
    fn xe_trivial_limits() {
        for m in [1usize, 2, 7, 30] {
            assert!(mutual_info_xe_bb84(m, 0.12, 0.5).unwrap().abs() < 1e-10);
            assert!(mutual_info_xe_bb84(m, 0.0, 0.2).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn xe_matches_mixture_entropy() {
        for &(m, p, q) in &[(1usize, 0.1, 0.0), (3, 0.08, 0.1), (10, 0.12, 0.2), (50, 0.125, 0.05)] {
            let rho = eve_state(p, q).unwrap();
            let fam = WeightedQubitFamily::new(vec![(0.5, rho), (0.5, rho.z_conjugate())]).unwrap();
            let direct = mixture_entropy(&fam, m).unwrap() - m as f64 * rho.entropy();
            let got = mutual_info_xe_bb84(m, p, q).unwrap();
            assert!((got - direct).abs() < 1e-9, "m = {m}: {got} vs {direct}");
        }
    }

    #[test]
    fn single_block_closed_form() {
        for p in [0.0, 0.02, 0.05, 0.11, 0.2, 0.5] {
            let r = rate_bb84(1, p, 0.0).unwrap();
            assert!((r - rate_bb84_plain(p)).abs() < 1e-12, "p = {p}");
        }
    }

    #[test]
    fn perfect_channel() {
        for m in [1usize, 2, 5, 64] {
            assert!((rate_bb84(m, 0.0, 0.0).unwrap() - 1.0 / m as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn full_randomization_kills_the_key() {
        for m in [1usize, 2, 3, 8, 16, 33, 64] {
            for p in [0.01, 0.1, 0.2] {
                assert!(rate_bb84(m, p, 0.5).unwrap().abs() < 1e-9, "m = {m}, p = {p}");
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(rate_bb84(0, 0.1, 0.0).is_err());
        assert!(rate_bb84(2, 0.6, 0.0).is_err());
        assert!(rate_bb84(2, 0.1, 0.7).is_err());
        assert!(rate_bb84(2, f64::NAN, 0.1).is_err());
    }

    #[test]
    fn optimized_noise_examples() {
        let r = rate_bb84_opt(1, 0.0).unwrap();
        assert_eq!(r.argmax, 0.0);
        assert!((r.value - 1.0).abs() < 1e-12);
        let r = rate_bb84_opt(3, 0.0).unwrap();
        assert!((r.value - 1.0 / 3.0).abs() < 1e-12);

        let r = rate_bb84_opt(1, 0.12).unwrap();
        assert!(r.argmax > 0.0 && r.value > 0.0);
        assert!(r.value > rate_bb84(1, 0.12, 0.0).unwrap());
    }
}
