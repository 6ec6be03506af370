//! Twofold iterated preprocessing for BB84.
//!
//! Alice adds noise `q` to `m2` blocks of `m1` bits, announces the inner
//! repetition syndromes, adds noise `Q` to the `m2` inner key bits, and
//! announces the outer syndrome. One key bit is kept per `m1 * m2` signals.

use std::f64::consts::LN_2;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::bb84::{
    check_bb84_error, check_noise, effective_error, eve_state, syndrome_table, RateComponents, SyndromeWeightTable,
};
use crate::combinatorics::{binomial_f64, ln_pow, LnFactorial};
use crate::entropy::{binary_entropy_unchecked, symmetric_eigenvalues};
use crate::error::{Error, Result};
use crate::optimizer::{maximize_over_noise_2d, Optimization2dResult};
use crate::qubit::QubitDensity;
use crate::schur::{block_structure, mixture_block, ConjugatePair, WeightedQubitFamily};

/// Largest `m1 * m2` accepted (total dimension `2^13`).
pub const MAX_TOTAL_QUBITS: usize = 13;

/// Default cap on the number of compressed syndrome classes.
pub const DEFAULT_CLASS_BUDGET: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IteratedParams {
    pub m1: usize,
    pub m2: usize,
    pub q: f64,
    /// Second-round noise rate `Q`.
    pub big_q: f64,
}

impl IteratedParams {
    pub fn new(m1: usize, m2: usize, q: f64, big_q: f64) -> Result<Self> {
        if m1 == 0 || m2 == 0 {
            return Err(Error::Domain(format!("blocklengths must be positive, got {m1}x{m2}")));
        }
        let total = m1.saturating_mul(m2);
        if total > MAX_TOTAL_QUBITS {
            return Err(Error::DimensionCap {
                dimension: 1usize.checked_shl(total as u32).unwrap_or(usize::MAX),
                cap: 1 << MAX_TOTAL_QUBITS,
            });
        }
        check_noise(q)?;
        check_noise(big_q)?;
        Ok(Self { m1, m2, q, big_q })
    }

    pub fn signals(&self) -> usize {
        self.m1 * self.m2
    }

    /// Total flip probability of one inner key bit from added noise, `q(1-Q) + (1-q)Q`.
    pub fn q_tot(&self) -> f64 {
        self.q * (1.0 - self.big_q) + (1.0 - self.q) * self.big_q
    }
}

/// One compressed class of syndromes `(s₁ … s_{m2}, S⃗)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyndromeClass {
    /// Weight `S` of the outer syndrome.
    pub outer_weight: usize,
    /// Number of blocks with inner weight `s`, among blocks whose key bit equals `L`.
    pub same: Vec<usize>,
    /// The same counts among blocks whose key bit is flipped relative to `L`.
    pub flipped: Vec<usize>,
    /// Number of syndrome patterns in the class.
    pub multiplicity: f64,
    /// Probability of one pattern jointly with `L = 0` and `L = 1`.
    pub probability: [f64; 2],
}

impl SyndromeClass {
    pub fn mass(&self) -> f64 {
        self.multiplicity * (self.probability[0] + self.probability[1])
    }
}

/// Joint law of the final key-bit error `L` and all announced syndromes.
#[derive(Debug, Clone, PartialEq)]
pub struct IteratedSyndromeDistribution {
    pub params: IteratedParams,
    pub p: f64,
    pub classes: Vec<SyndromeClass>,
}

impl IteratedSyndromeDistribution {
    pub fn total_mass(&self) -> f64 {
        self.classes.iter().map(SyndromeClass::mass).sum()
    }

    /// `H(L | syndromes)` in bits.
    pub fn equivocation(&self) -> f64 {
        let mut total = 0.0;
        for c in &self.classes {
            let both = c.probability[0] + c.probability[1];
            if both > 0.0 {
                total += c.multiplicity * both * binary_entropy_unchecked(c.probability[1] / both);
            }
        }
        total.clamp(0.0, 1.0)
    }
}

/// All count vectors of length `bins` summing to `n`, in lexicographic order.
pub(crate) fn compositions(n: usize, bins: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, bins: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if bins == 1 {
            prefix.push(n);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=n {
            prefix.push(first);
            rec(n - first, bins - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if bins == 0 {
        if n == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(n, bins, &mut Vec::with_capacity(bins), &mut out);
    out
}

fn multinomial(lf: &LnFactorial, counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    (lf.ln_factorial(n) - counts.iter().map(|&c| lf.ln_factorial(c)).sum::<f64>()).exp()
}

/// Number of compressed classes for the given blocklengths.
pub fn class_count(m1: usize, m2: usize) -> u128 {
    let multisets = |n: usize| -> u128 {
        // C(n + m1 - 1, m1 - 1)
        let (top, k) = ((n + m1 - 1) as u128, (m1 - 1) as u128);
        let mut acc: u128 = 1;
        for i in 0..k {
            acc = acc * (top - i) / (i + 1);
        }
        acc
    };
    (0..m2).map(|s| multisets(m2 - s) * multisets(s)).sum()
}

/// Probability of one inner pattern of weight `s` jointly with inner key bit `b'`
/// after the second-round flip: `Σ_{b ⊕ F = b'} P̃(b, s) Q_F`.
fn flipped_block_probability(table: &SyndromeWeightTable, big_q: f64, b_prime: usize, s: usize) -> f64 {
    let mut total = 0.0;
    for b in 0..2 {
        for flip in 0..2 {
            if b ^ flip == b_prime {
                let q_f = if flip == 1 { big_q } else { 1.0 - big_q };
                total += table.entry(b, s) * q_f;
            }
        }
    }
    total
}

/// Build the compressed syndrome distribution by composing the inner
/// syndrome table, the second-round flips, and the outer repetition code.
pub fn iterated_syndrome_distribution(params: &IteratedParams, p: f64) -> Result<IteratedSyndromeDistribution> {
    iterated_syndrome_distribution_with_budget(params, p, DEFAULT_CLASS_BUDGET)
}

pub fn iterated_syndrome_distribution_with_budget(
    params: &IteratedParams,
    p: f64,
    budget: u128,
) -> Result<IteratedSyndromeDistribution> {
    check_bb84_error(p)?;
    let (m1, m2) = (params.m1, params.m2);
    let required = class_count(m1, m2);
    if required > budget {
        return Err(Error::Budget { required, budget });
    }
    let table = syndrome_table(m1, effective_error(p, params.q))?;
    let block: Vec<[f64; 2]> = (0..m1)
        .map(|s| {
            [
                flipped_block_probability(&table, params.big_q, 0, s),
                flipped_block_probability(&table, params.big_q, 1, s),
            ]
        })
        .collect();
    let inner_patterns: Vec<f64> = (0..m1).map(|s| binomial_f64(m1 - 1, s)).collect();
    let lf = LnFactorial::new(m2);

    let mut classes = Vec::with_capacity(required as usize);
    for outer in 0..m2 {
        let outer_patterns = binomial_f64(m2 - 1, outer);
        let same_sets = compositions(m2 - outer, m1);
        let flipped_sets = compositions(outer, m1);
        for same in &same_sets {
            for flipped in &flipped_sets {
                let mut multiplicity = outer_patterns * multinomial(&lf, same) * multinomial(&lf, flipped);
                let mut probability = [1.0, 1.0];
                for (s, (&a, &b)) in same.iter().zip(flipped).enumerate() {
                    multiplicity *= inner_patterns[s].powi((a + b) as i32);
                    // L = 0: "same" blocks carry b' = 0, flipped ones b' = 1
                    probability[0] *= block[s][0].powi(a as i32) * block[s][1].powi(b as i32);
                    probability[1] *= block[s][1].powi(a as i32) * block[s][0].powi(b as i32);
                }
                classes.push(SyndromeClass {
                    outer_weight: outer,
                    same: same.clone(),
                    flipped: flipped.clone(),
                    multiplicity,
                    probability,
                });
            }
        }
    }
    Ok(IteratedSyndromeDistribution {
        params: *params,
        p,
        classes,
    })
}

/// Probability of one pattern of a class with `L = 0`, written directly as a
/// product over blocks of `(1-p̃)^{m1-s} p̃^s (1-Q) + (1-p̃)^s p̃^{m1-s} Q` and its mirror.
pub fn class_probability_product(params: &IteratedParams, p: f64, same: &[usize], flipped: &[usize]) -> f64 {
    let pt = effective_error(p, params.q);
    let m1 = params.m1 as i32;
    let big_q = params.big_q;
    let mut total = 1.0;
    for s in 0..params.m1 {
        let si = s as i32;
        let keep = (1.0 - pt).powi(m1 - si) * pt.powi(si);
        let swap = (1.0 - pt).powi(si) * pt.powi(m1 - si);
        total *= (keep * (1.0 - big_q) + swap * big_q).powi(same[s] as i32);
        total *= (swap * (1.0 - big_q) + keep * big_q).powi(flipped[s] as i32);
    }
    total
}

/// `H(X|Y) = 1 - I(X:Y)` per super-block.
pub fn equivocation_xy_iterated(params: &IteratedParams, p: f64) -> Result<f64> {
    Ok(iterated_syndrome_distribution(params, p)?.equivocation())
}

/// `I(X:Y)` per super-block.
pub fn mutual_info_xy_iterated(params: &IteratedParams, p: f64) -> Result<f64> {
    Ok(1.0 - equivocation_xy_iterated(params, p)?)
}

/// `A = (1-Q) ρ^⊗m1 + Q (ZρZ)^⊗m1` as Schur blocks of `m1` qubits: `(two_j, ln N_Y, A_j)`.
fn inner_blocks(rho: &QubitDensity, m1: usize, big_q: f64) -> Result<Vec<(usize, f64, DMatrix<f64>)>> {
    let mut terms = Vec::new();
    if big_q < 1.0 {
        terms.push((1.0 - big_q, *rho));
    }
    if big_q > 0.0 {
        terms.push((big_q, rho.z_conjugate()));
    }
    let family = WeightedQubitFamily::new(terms)?;
    let structure = block_structure(m1)?;
    structure
        .blocks()
        .iter()
        .map(|b| Ok((b.two_j, b.ln_multiplicity, mixture_block(&family, m1, b.two_j)?)))
        .collect()
}

fn parity_conjugate(a: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, k| if (i + k) % 2 == 0 { a[(i, k)] } else { -a[(i, k)] })
}

fn kron_all(factors: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let mut acc = DMatrix::from_element(1, 1, 1.0);
    for f in factors {
        acc = acc.kronecker(*f);
    }
    acc
}

/// `-Σ λ ln λ` over the positive part of a spectrum, in nats.
fn nats(values: &[f64]) -> f64 {
    values.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

/// `H(X|E) = 1 - I(X:E)` per super-block.
///
/// `A^⊗m2` and its Z-conjugate are block diagonal over tuples of inner
/// spins `(j₁ … j_{m2})`; each tuple block is a Kronecker product of inner
/// blocks and tuples that are permutations of each other contribute equally.
/// The Holevo deficit `2 S(½X_t) - S(½X_t + ½Y_t)` is evaluated per multiset
/// of spins with dense eigendecompositions of dimension `Π (2jᵢ + 1)`.
pub fn equivocation_xe_iterated(params: &IteratedParams, p: f64) -> Result<f64> {
    check_bb84_error(p)?;
    let rho = eve_state(p, params.q)?;
    let (m1, m2) = (params.m1, params.m2);
    if m1 == 1 {
        // A is a single qubit, (1-Q)ρ + QZρZ.
        let (a, b) = rho.real_entries()?;
        let mixed = QubitDensity::real(a, b * (1.0 - 2.0 * params.big_q))?;
        let mut pair = ConjugatePair::new(&mixed, m2)?;
        return Ok((pair.deficit_nats(m2, 0.5f64.ln(), 1.0)? / LN_2).clamp(0.0, 1.0));
    }
    let blocks = inner_blocks(&rho, m1, params.big_q)?;
    let spectra: Vec<Vec<f64>> = blocks
        .iter()
        .map(|(_, _, a)| symmetric_eigenvalues(a))
        .collect::<Result<_>>()?;
    let conjugates: Vec<DMatrix<f64>> = blocks.iter().map(|(_, _, a)| parity_conjugate(a)).collect();
    let lf = LnFactorial::new(m2);

    let mut total = 0.0;
    for counts in compositions(m2, blocks.len()) {
        let mut ln_mult = lf.ln_factorial(m2);
        let mut tuple = Vec::with_capacity(m2);
        for (b, &c) in counts.iter().enumerate() {
            ln_mult += ln_pow(blocks[b].1, c as f64) - lf.ln_factorial(c);
            tuple.extend(std::iter::repeat_n(b, c));
        }
        // S(½X_t) from products of inner eigenvalues
        let mut products = vec![0.5];
        for &b in &tuple {
            products = products
                .iter()
                .flat_map(|&x| spectra[b].iter().map(move |&y| x * y.max(0.0)))
                .collect();
        }
        let half = nats(&products);
        let x = kron_all(&tuple.iter().map(|&b| &blocks[b].2).collect::<Vec<_>>());
        let y = kron_all(&tuple.iter().map(|&b| &conjugates[b]).collect::<Vec<_>>());
        let mix = (x + y) * 0.5;
        let mixed = nats(&symmetric_eigenvalues(&mix)?);
        let deficit = (2.0 * half - mixed).max(0.0);
        total += ln_mult.exp() * deficit;
    }
    Ok((total / LN_2).clamp(0.0, 1.0))
}

/// `I(X:E)` per super-block.
pub fn mutual_info_xe_iterated(params: &IteratedParams, p: f64) -> Result<f64> {
    Ok(1.0 - equivocation_xe_iterated(params, p)?)
}

pub fn rate_iterated_components(params: &IteratedParams, p: f64) -> Result<RateComponents> {
    let h_xy = equivocation_xy_iterated(params, p)?;
    let h_xe = equivocation_xe_iterated(params, p)?;
    Ok(RateComponents::from_equivocations(h_xy, h_xe, params.signals()))
}

/// Key rate per signal, unclamped.
pub fn rate_iterated(params: &IteratedParams, p: f64) -> Result<f64> {
    Ok(rate_iterated_components(params, p)?.rate)
}

/// Rate maximized over `(q, Q) ∈ [0, ½]²`.
pub fn rate_iterated_opt(m1: usize, m2: usize, p: f64) -> Result<Optimization2dResult> {
    IteratedParams::new(m1, m2, 0.0, 0.0)?;
    check_bb84_error(p)?;
    maximize_over_noise_2d(|q, big_q| rate_iterated(&IteratedParams::new(m1, m2, q, big_q)?, p), 0.0, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bb84::{mutual_info_xe_bb84, mutual_info_xy, rate_bb84};

    #[test]
    fn params_validation() {
        assert!(IteratedParams::new(3, 3, 0.1, 0.2).is_ok());
        assert!(matches!(IteratedParams::new(4, 4, 0.1, 0.2), Err(Error::DimensionCap { .. })));
        assert!(IteratedParams::new(0, 3, 0.1, 0.2).is_err());
        assert!(IteratedParams::new(2, 2, 0.6, 0.2).is_err());
        let p = IteratedParams::new(2, 2, 0.1, 0.2).unwrap();
        assert!((p.q_tot() - (0.1 * 0.8 + 0.9 * 0.2)).abs() < 1e-15);
    }

    #[test]
    fn compositions_enumerate_multisets() {
        assert_eq!(compositions(2, 2), vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(compositions(0, 3), vec![vec![0, 0, 0]]);
        for (m1, m2) in [(1usize, 5usize), (2, 3), (3, 3), (4, 3), (6, 2)] {
            let direct: usize = (0..m2).map(|s| compositions(m2 - s, m1).len() * compositions(s, m1).len()).sum();
            assert_eq!(class_count(m1, m2), direct as u128);
        }
    }

    #[test]
    fn distribution_is_normalized() {
        for (m1, m2) in [(1usize, 1usize), (1, 4), (2, 2), (3, 2), (2, 3), (3, 3), (2, 6), (6, 2), (13, 1)] {
            let params = IteratedParams::new(m1, m2, 0.13, 0.21).unwrap();
            let d = iterated_syndrome_distribution(&params, 0.11).unwrap();
            assert!((d.total_mass() - 1.0).abs() < 1e-12, "{m1}x{m2}");
        }
    }

    #[test]
    fn closed_form_product_matches_composition() {
        let params = IteratedParams::new(2, 2, 0.07, 0.19).unwrap();
        let d = iterated_syndrome_distribution(&params, 0.12).unwrap();
        for c in &d.classes {
            let closed = class_probability_product(&params, 0.12, &c.same, &c.flipped);
            assert!((closed - c.probability[0]).abs() < 1e-12);
            let mirror = class_probability_product(&params, 0.12, &c.flipped, &c.same);
            assert!((mirror - c.probability[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn budget_guard() {
        let params = IteratedParams::new(3, 3, 0.1, 0.1).unwrap();
        let e = iterated_syndrome_distribution_with_budget(&params, 0.1, 5).unwrap_err();
        assert!(matches!(e, Error::Budget { .. }));
    }

    #[test]
    fn single_outer_block_is_single_round() {
        for m1 in [1usize, 2, 5] {
            let params = IteratedParams::new(m1, 1, 0.08, 0.0).unwrap();
            let d = iterated_syndrome_distribution(&params, 0.1).unwrap();
            let t = syndrome_table(m1, effective_error(0.1, 0.08)).unwrap();
            assert_eq!(d.classes.len(), m1);
            for c in &d.classes {
                let s = c.same.iter().position(|&x| x == 1).unwrap();
                assert!((c.probability[0] - t.entry(0, s)).abs() < 1e-15);
                assert!((c.probability[1] - t.entry(1, s)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn single_inner_bit_composes_channels() {
        let (p, big_q) = (0.1, 0.17);
        let params = IteratedParams::new(1, 4, 0.0, big_q).unwrap();
        let combined = effective_error(p, big_q);
        let got = mutual_info_xy_iterated(&params, p).unwrap();
        assert!((got - mutual_info_xy(4, combined).unwrap()).abs() < 1e-14);
        let xe = mutual_info_xe_iterated(&params, p).unwrap();
        assert!((xe - mutual_info_xe_bb84(4, p, big_q).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn full_noise_limits() {
        let params = IteratedParams::new(2, 3, 0.5, 0.5).unwrap();
        assert!(mutual_info_xy_iterated(&params, 0.1).unwrap().abs() < 1e-14);
        for (m1, m2) in [(2usize, 2usize), (3, 3)] {
            let params = IteratedParams::new(m1, m2, 0.1, 0.5).unwrap();
            assert!(mutual_info_xe_iterated(&params, 0.1).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn reductions_to_single_round() {
        for p in [0.02, 0.09, 0.13] {
            for noise in [0.0, 0.1, 0.3] {
                let one = IteratedParams::new(3, 1, noise, 0.0).unwrap();
                assert!((rate_iterated(&one, p).unwrap() - rate_bb84(3, p, noise).unwrap()).abs() < 1e-10);
                let other = IteratedParams::new(1, 3, 0.0, noise).unwrap();
                assert!((rate_iterated(&other, p).unwrap() - rate_bb84(3, p, noise).unwrap()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn inner_block_route_matches_qubit_route_for_one_outer_block() {
        // m2 = 1: I(X:E) equals the single-round value with the two noises composed on X only.
        let params = IteratedParams::new(4, 1, 0.12, 0.0).unwrap();
        let xe = mutual_info_xe_iterated(&params, 0.11).unwrap();
        assert!((xe - mutual_info_xe_bb84(4, 0.11, 0.12).unwrap()).abs() < 1e-10);
    }
}
