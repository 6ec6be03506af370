//! Comparisons of the production routines against [`crate::oracle`].

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bb84::{mutual_info_xe_bb84, mutual_info_xy, syndrome_table, BitPhaseDistribution};
use crate::error::Result;
use crate::iterated::{iterated_syndrome_distribution, mutual_info_xe_iterated, mutual_info_xy_iterated, IteratedParams};
use crate::oracle::{
    dense_mixture_entropy, enumerate_xy, eve_mutual_info, independent_error_check, iterated_enumeration_check,
    CatCodeBasis,
};
use crate::qubit::QubitDensity;
use crate::schur::{block_structure, mixture_entropy, WeightedQubitFamily, MAX_BLOCKLENGTH};
use crate::sixstate::{lo_table, mutual_info_xe_sixstate, SixStateChannel};

/// Result of one family of comparisons.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub cases: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
}

impl CheckOutcome {
    fn from_deviations(name: &str, tolerance: f64, deviations: Vec<f64>) -> Self {
        let max_deviation = deviations
            .iter()
            .copied()
            .fold(0.0, |a: f64, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) });
        Self {
            name: name.to_string(),
            cases: deviations.len(),
            max_deviation,
            tolerance,
        }
    }

    pub fn passed(&self) -> bool {
        self.max_deviation <= self.tolerance
    }
}

/// A random two-term real qubit family with weights summing to one.
pub fn random_real_family(rng: &mut impl Rng) -> Result<WeightedQubitFamily> {
    let state = |rng: &mut dyn rand::RngCore| -> Result<QubitDensity> {
        let a: f64 = rng.gen();
        let b = rng.gen_range(-1.0..=1.0) * (a * (1.0 - a)).sqrt();
        QubitDensity::real(a, b)
    };
    let w: f64 = rng.gen_range(0.05..0.95);
    let first = state(rng)?;
    let second = state(rng)?;
    WeightedQubitFamily::new(vec![(w, first), (1.0 - w, second)])
}

/// Block-diagonal mixture entropy against the dense construction.
pub fn check_schur_entropy(max_m: usize, families_per_m: usize, seed: u64) -> Result<CheckOutcome> {
    let cases: Vec<(usize, u64)> = (1..=max_m)
        .flat_map(|m| (0..families_per_m as u64).map(move |k| (m, k)))
        .collect();
    let deviations = cases
        .par_iter()
        .map(|&(m, k)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((m as u64) << 32) ^ k);
            let family = random_real_family(&mut rng)?;
            Ok((mixture_entropy(&family, m)? - dense_mixture_entropy(&family, m)?).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CheckOutcome::from_deviations("schur entropy vs dense", 1e-9, deviations))
}

pub fn check_xy_enumeration() -> Result<CheckOutcome> {
    let mut deviations = Vec::new();
    for m in 1..=6 {
        for pt in [0.0, 0.01, 0.07, 0.13, 0.25, 0.4, 0.5] {
            deviations.push((mutual_info_xy(m, pt)? - enumerate_xy(m, pt)?).abs());
        }
    }
    Ok(CheckOutcome::from_deviations("I(X:Y) vs enumeration", 1e-12, deviations))
}

pub fn check_eve_bb84() -> Result<CheckOutcome> {
    let cases: Vec<(usize, f64, f64)> = (1..=4)
        .flat_map(|m| [0.0, 0.03, 0.11, 0.2].into_iter().flat_map(move |p| [0.0, 0.1, 0.35].map(move |q| (m, p, q))))
        .collect();
    let deviations = cases
        .par_iter()
        .map(|&(m, p, q)| {
            let dense = eve_mutual_info(m, &BitPhaseDistribution::independent(p)?, q)?;
            Ok((mutual_info_xe_bb84(m, p, q)? - dense).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CheckOutcome::from_deviations("BB84 I(X:E) vs dense", 1e-9, deviations))
}

pub fn check_eve_sixstate() -> Result<CheckOutcome> {
    let cases: Vec<(usize, f64, f64)> = (1..=4)
        .flat_map(|m| [0.02, 0.1, 0.15, 0.3].into_iter().flat_map(move |p| [0.0, 0.1, 0.35].map(move |q| (m, p, q))))
        .collect();
    let deviations = cases
        .par_iter()
        .map(|&(m, p, q)| {
            let dense = eve_mutual_info(m, &SixStateChannel::new(p)?.distribution(), q)?;
            Ok((mutual_info_xe_sixstate(m, p, q)? - dense).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CheckOutcome::from_deviations("6-state I(X:E) vs dense", 1e-9, deviations))
}

/// Compressed iterated `I(X:Y)` and block `I(X:E)` against raw enumeration and dense states.
pub fn check_iterated(shapes: &[(usize, usize)]) -> Result<Vec<CheckOutcome>> {
    let points = [(0.05, 0.0, 0.0), (0.11, 0.2, 0.1), (0.13, 0.07, 0.31)];
    let cases: Vec<(usize, usize, f64, f64, f64)> = shapes
        .iter()
        .flat_map(|&(m1, m2)| points.iter().map(move |&(p, q, big_q)| (m1, m2, p, q, big_q)))
        .collect();
    let pairs = cases
        .par_iter()
        .map(|&(m1, m2, p, q, big_q)| {
            let params = IteratedParams::new(m1, m2, q, big_q)?;
            let oracle = iterated_enumeration_check(m1, m2, p, q, big_q)?;
            Ok((
                (mutual_info_xy_iterated(&params, p)? - oracle.i_xy).abs(),
                (mutual_info_xe_iterated(&params, p)? - oracle.i_xe).abs(),
            ))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let (xy, xe): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(vec![
        CheckOutcome::from_deviations("iterated I(X:Y) vs enumeration", 1e-9, xy),
        CheckOutcome::from_deviations("iterated I(X:E) vs dense", 1e-9, xe),
    ])
}

/// Largest gain in `I(X:E)` from correlated errors over the independent case.
pub fn check_independent_errors() -> Result<CheckOutcome> {
    let cases: Vec<(usize, f64, f64)> = (1..=3)
        .flat_map(|m| [0.0, 0.05, 0.1, 0.2].into_iter().flat_map(move |p| [0.0, 0.05, 0.3].map(move |q| (m, p, q))))
        .collect();
    let deviations = cases
        .par_iter()
        .map(|&(m, p, q)| {
            let grid: Vec<f64> = (0..=20).map(|k| p * k as f64 / 20.0).collect();
            independent_error_check(m, p, q, &grid).map(|v| v.max(0.0))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CheckOutcome::from_deviations("independent-error maximality", 1e-9, deviations))
}

/// `Σ N_Y (2j+1) = 2^m`, counted as the number of blocklengths that fail.
pub fn check_block_completeness(max_m: usize) -> Result<CheckOutcome> {
    let failures = (1..=max_m.min(MAX_BLOCKLENGTH))
        .into_par_iter()
        .map(|m| Ok(if block_structure(m)?.total_dimension() == BigUint::from(1u8) << m { 0.0 } else { 1.0 }))
        .collect::<Result<Vec<f64>>>()?;
    Ok(CheckOutcome::from_deviations("block completeness", 0.0, failures))
}

pub fn check_cat_code(max_m: usize) -> Result<CheckOutcome> {
    let failures = (1..=max_m.min(64))
        .map(|m| Ok(if CatCodeBasis::new(m)?.is_dual() { 0.0 } else { 1.0 }))
        .collect::<Result<Vec<f64>>>()?;
    Ok(CheckOutcome::from_deviations("cat code duality", 0.0, failures))
}

/// Total masses of the syndrome, 6-state, and iterated distributions.
pub fn check_normalizations() -> Result<CheckOutcome> {
    let mut deviations = Vec::new();
    for m in [1usize, 2, 3, 5, 8, 13, 50, 101, 256, 400, 501, 777, 1024] {
        for pt in [0.0, 0.01, 0.1, 0.2, 0.35, 0.5] {
            deviations.push((syndrome_table(m, pt)?.total_mass() - 1.0).abs());
        }
    }
    for m in [1usize, 2, 3, 4, 5, 7, 9, 12, 25, 60, 125, 500] {
        for p in [0.0, 0.05, 0.14, 0.3, 0.5, 0.66] {
            deviations.push((lo_table(m, p)?.total_mass() - 1.0).abs());
        }
    }
    for (m1, m2) in [(1usize, 5usize), (2, 2), (2, 3), (3, 2), (3, 3), (4, 3), (2, 6), (6, 2), (13, 1), (1, 13)] {
        let params = IteratedParams::new(m1, m2, 0.12, 0.27)?;
        deviations.push((iterated_syndrome_distribution(&params, 0.1)?.total_mass() - 1.0).abs());
    }
    Ok(CheckOutcome::from_deviations("distribution normalization", 1e-12, deviations))
}

/// Every check used by `validate`.
pub fn run_suite(seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut out = vec![
        check_schur_entropy(10, 12, seed)?,
        check_xy_enumeration()?,
        check_eve_bb84()?,
        check_eve_sixstate()?,
    ];
    out.extend(check_iterated(&[(2, 2), (3, 2), (2, 3), (3, 3)])?);
    out.push(check_independent_errors()?);
    out.push(check_block_completeness(MAX_BLOCKLENGTH)?);
    out.push(check_cat_code(64)?);
    out.push(check_normalizations()?);
    Ok(out)
}
