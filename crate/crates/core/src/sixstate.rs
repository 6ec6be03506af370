//! 6-state protocol with noisy preprocessing and the repetition code.
//!
//! Parameter estimation in all three bases fixes the bit/phase error
//! distribution to `{1 - 3p/2, p/2, p/2, p/2}`. Conditioned on a bit error
//! the phase is uniformly random; without one it flips with probability
//! `p' = p / (2(1-p))`.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::bb84::{
    check_blocklength, check_noise, effective_error, equivocation_xy, BitPhaseDistribution, RateComponents,
};
use crate::combinatorics::{ln_pow, LnFactorial};
use crate::entropy::{binary_entropy_unchecked, shannon_entropy, ProbabilityVector};
use crate::error::{Error, Result};
use crate::optimizer::{maximize_over_noise, maximize_over_noise_with_hint, OptimizationResult};
use crate::qubit::QubitDensity;
use crate::schur::ConjugatePair;

/// Largest accepted bit error rate (the channel needs `p < 2/3`).
pub const MAX_ERROR: f64 = 0.66;

/// Deficit terms whose a-priori bound is below this are skipped.
pub const TERM_CUTOFF: f64 = 1e-20;

/// Repetition-code probabilities without added noise below `-NEGATIVE_MASS_TOLERANCE` are an error; above it they are clipped to zero.
const NEGATIVE_MASS_TOLERANCE: f64 = 1e-12;

pub(crate) fn check_sixstate_error(p: f64) -> Result<()> {
    if !(0.0..=MAX_ERROR).contains(&p) {
        return Err(Error::Domain(format!("bit error rate p = {p} is not in [0, {MAX_ERROR}]")));
    }
    Ok(())
}

/// The depolarizing channel fixed by 6-state parameter estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SixStateChannel {
    pub p: f64,
}

impl SixStateChannel {
    pub fn new(p: f64) -> Result<Self> {
        check_sixstate_error(p)?;
        Ok(Self { p })
    }

    /// Phase-flip probability given no bit flip, `p / (2(1-p))`.
    pub fn p_prime(&self) -> f64 {
        self.p / (2.0 * (1.0 - self.p))
    }

    /// `p(v | u)`.
    pub fn phase_given_bit(&self, v: u8, u: u8) -> f64 {
        match (u & 1, v & 1) {
            (0, 0) => 1.0 - self.p_prime(),
            (0, _) => self.p_prime(),
            _ => 0.5,
        }
    }

    pub fn distribution(&self) -> BitPhaseDistribution {
        let p = self.p;
        BitPhaseDistribution {
            p00: 1.0 - 1.5 * p,
            p10: 0.5 * p,
            p11: 0.5 * p,
            p01: 0.5 * p,
        }
    }
}

/// Eve's conditional qubit states: `σ` after a bit error, `γ` without one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SixStateEveStates {
    /// `(1-q)[+] + q[-]`
    pub sigma: QubitDensity,
    /// `(1-q)[φ'₊] + q[φ'₋]` with `|φ'±> = √p'|0> ± √(1-p')|1>`
    pub gamma: QubitDensity,
}

impl SixStateEveStates {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        let channel = SixStateChannel::new(p)?;
        check_noise(q)?;
        Ok(Self {
            sigma: QubitDensity::sigma(q)?,
            gamma: QubitDensity::gamma(channel.p_prime(), q)?,
        })
    }
}

/// `H(X|E)` with a bound on the contribution of skipped terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivocationEstimate {
    pub value: f64,
    /// Upper bound on the total of all skipped terms.
    pub discarded: f64,
}

/// `H(X|E) = 1 - I(X:E)` for the 6-state protocol, in bits per block.
///
/// With `u` bit errors in the block, the `u` affected qubits carry `σ` and
/// the rest `γ`. Splitting the `σ` part over its eigenbasis leaves, for each
/// number `k` of `[+]` outcomes, a mixture of `γ^⊗(m-u)` and `(ZγZ)^⊗(m-u)`
/// with weights `a_k = (1-q)^k q^{u-k}/2` and `b_k = q^k (1-q)^{u-k}/2`:
///
/// `H(X|E) = Σ_u B(u) Σ_k C(u,k) χ(a_k, b_k) / ln 2`
///
/// with `B(u)` binomial in `p` and `χ` the Holevo deficit of the pair. Terms
/// whose bound `B(u) C(u,k) (a+b) h(b/(a+b))` is below `1e-20` are skipped.
pub fn equivocation_xe_sixstate_detailed(m: usize, p: f64, q: f64) -> Result<EquivocationEstimate> {
    check_blocklength(m)?;
    let states = SixStateEveStates::new(p, q)?;
    let mut pair = ConjugatePair::new(&states.gamma, m)?;
    let lf = LnFactorial::new(m + 1);
    let ln_p = p.ln();
    let ln_1p = (-p).ln_1p();
    let ln_q = q.ln();
    let ln_1q = (-q).ln_1p();
    // Ratio of the smaller to the larger weight only depends on |u - 2k|.
    let ln_rho = ln_q - ln_1q;

    let mut nats = 0.0;
    let mut discarded = 0.0;
    for u in 0..=m {
        let ln_bu = lf.ln_binomial(m, u) + ln_pow(ln_p, u as f64) + ln_pow(ln_1p, (m - u) as f64);
        if ln_bu == f64::NEG_INFINITY {
            continue;
        }
        let n = m - u;
        for k in 0..=u / 2 {
            let mirror = if 2 * k == u { 1.0 } else { 2.0 };
            let d = u - 2 * k;
            // a_k ≤ b_k for k ≤ u/2 since q ≤ ½
            let ln_big = 0.5f64.ln() + ln_pow(ln_q, k as f64) + ln_pow(ln_1q, d as f64 + k as f64);
            let ratio = if d == 0 { 1.0 } else { ln_pow(ln_rho, d as f64).exp() };
            if ratio == 0.0 || ln_big == f64::NEG_INFINITY {
                continue;
            }
            let ln_weight = ln_bu + lf.ln_binomial(u, k) + ln_big;
            let total = ln_weight.exp() * (1.0 + ratio);
            let bound = mirror * total * binary_entropy_unchecked(ratio / (1.0 + ratio)) * LN_2;
            if bound < TERM_CUTOFF {
                discarded += bound;
                continue;
            }
            nats += mirror * pair.deficit_nats(n, ln_weight, ratio)?;
        }
    }
    Ok(EquivocationEstimate {
        value: (nats / LN_2).clamp(0.0, 1.0),
        discarded: discarded / LN_2,
    })
}

pub fn equivocation_xe_sixstate(m: usize, p: f64, q: f64) -> Result<f64> {
    Ok(equivocation_xe_sixstate_detailed(m, p, q)?.value)
}

/// `I(X:E)` in bits per block.
pub fn mutual_info_xe_sixstate(m: usize, p: f64, q: f64) -> Result<f64> {
    Ok(1.0 - equivocation_xe_sixstate(m, p, q)?)
}

pub fn rate_sixstate_components(m: usize, p: f64, q: f64) -> Result<RateComponents> {
    check_sixstate_error(p)?;
    check_noise(q)?;
    let p_tilde = effective_error(p, q);
    let h_xy = equivocation_xy(m, p_tilde)?;
    let h_xe = equivocation_xe_sixstate(m, p, q)?;
    Ok(RateComponents::from_equivocations(h_xy, h_xe, m))
}

/// Key rate per signal, unclamped.
pub fn rate_sixstate(m: usize, p: f64, q: f64) -> Result<f64> {
    Ok(rate_sixstate_components(m, p, q)?.rate)
}

/// Closed form for `m = 1`:
/// `1 - h(p̃) - Σ_u p_u [h(p_{v|u}) - h(½(1 + √(1 - 16 p_{1|u}(1-p_{1|u}) q(1-q))))]`.
pub fn rate_sixstate_single(p: f64, q: f64) -> Result<f64> {
    let channel = SixStateChannel::new(p)?;
    check_noise(q)?;
    let h = binary_entropy_unchecked;
    let mut rate = 1.0 - h(effective_error(p, q));
    for (u, weight) in [(0u8, 1.0 - p), (1u8, p)] {
        let flip = channel.phase_given_bit(1, u);
        let dephased = 0.5 * (1.0 + (1.0 - 16.0 * flip * (1.0 - flip) * q * (1.0 - q)).max(0.0).sqrt());
        rate -= weight * (h(flip) - h(dephased));
    }
    Ok(rate)
}

/// Rate maximized over `q ∈ [0, ½]`.
pub fn rate_sixstate_opt(m: usize, p: f64) -> Result<OptimizationResult> {
    check_blocklength(m)?;
    check_sixstate_error(p)?;
    maximize_over_noise(|q| rate_sixstate(m, p, q), 0.0, 0.5)
}

/// As [`rate_sixstate_opt`], also trying `hint` (e.g. the optimum at a nearby `p`).
pub fn rate_sixstate_opt_with_hint(m: usize, p: f64, hint: Option<f64>) -> Result<OptimizationResult> {
    check_blocklength(m)?;
    check_sixstate_error(p)?;
    maximize_over_noise_with_hint(|q| rate_sixstate(m, p, q), 0.0, 0.5, hint)
}

/// Joint law of the logical bit and phase flips `(l_x, l_z)` and the syndrome weight `s`
/// for the repetition code without added noise.
///
/// Entry `[s][2 l_x + l_z]` is the probability of one syndrome pattern of
/// weight `s`; each weight has `C(m-1, s)` patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct LoTable {
    m: usize,
    entries: Vec<[f64; 4]>,
    ln_multiplicity: Vec<f64>,
}

impl LoTable {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn entry(&self, lx: usize, lz: usize, s: usize) -> f64 {
        self.entries[s][2 * lx + lz]
    }

    pub fn multiplicity(&self, s: usize) -> f64 {
        self.ln_multiplicity[s].exp()
    }

    pub fn total_mass(&self) -> f64 {
        (0..self.m)
            .map(|s| self.multiplicity(s) * self.entries[s].iter().sum::<f64>())
            .sum()
    }
}

/// `P(l_x, l_z, s) = ½[p^{e₁}(1-p)^{e₀} + δ_{0,e₁}(-1)^{l_z}(1-2p)^{e₀}]`
/// with `e₁ = l_x(m-2s) + s` and `e₀ = (1-l_x)(m-2s) + s`.
pub fn lo_table(m: usize, p: f64) -> Result<LoTable> {
    check_blocklength(m)?;
    check_sixstate_error(p)?;
    let lf = LnFactorial::new(m);
    let ln_p = p.ln();
    let ln_1p = (-p).ln_1p();
    let mut entries = Vec::with_capacity(m);
    for s in 0..m {
        let mut row = [0.0; 4];
        for lx in 0..2usize {
            let (e1, e0) = if lx == 0 { (s, m - s) } else { (m - s, s) };
            let base = (ln_pow(ln_p, e1 as f64) + ln_pow(ln_1p, e0 as f64)).exp();
            for lz in 0..2usize {
                let mut v = base;
                if e1 == 0 {
                    let c = (1.0 - 2.0 * p).powi(e0 as i32);
                    v += if lz == 0 { c } else { -c };
                }
                v *= 0.5;
                if v < 0.0 {
                    if v < -NEGATIVE_MASS_TOLERANCE {
                        return Err(Error::Numerical(format!("negative probability {v:e} in syndrome law")));
                    }
                    v = 0.0;
                }
                row[2 * lx + lz] = v;
            }
        }
        entries.push(row);
    }
    let ln_multiplicity = (0..m).map(|s| lf.ln_binomial(m - 1, s)).collect();
    Ok(LoTable {
        m,
        entries,
        ln_multiplicity,
    })
}

/// Rate of the repetition code without added noise, `(1/m)[1 - Σ_s P(s) H(l_x, l_z | s)]`.
pub fn lo_rate(m: usize, p: f64) -> Result<f64> {
    let table = lo_table(m, p)?;
    let mut loss = 0.0;
    for s in 0..m {
        let row = table.entries[s];
        let total: f64 = row.iter().sum();
        if total <= 0.0 {
            continue;
        }
        let conditional = ProbabilityVector::new(row.iter().map(|x| x / total).collect())?;
        loss += table.multiplicity(s) * total * shannon_entropy(&conditional);
    }
    Ok((1.0 - loss) / m as f64)
}
