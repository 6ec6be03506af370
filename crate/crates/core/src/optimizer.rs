//! Maximization of key rates over added noise, and threshold bisection.
//!
//! Grid points are evaluated in parallel; results are collected in grid order
//! so the outcome does not depend on the number of threads.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Points on the coarse one-dimensional grid.
pub const GRID_POINTS: usize = 51;

/// Points per axis on the coarse two-dimensional grid.
pub const GRID_POINTS_2D: usize = 21;

/// Golden-section stopping width in one dimension.
pub const NOISE_TOLERANCE: f64 = 1e-6;

/// Golden-section stopping width in two dimensions.
pub const NOISE_TOLERANCE_2D: f64 = 1e-5;

/// Bisection stopping width for thresholds.
pub const THRESHOLD_TOLERANCE: f64 = 1e-5;

/// Rates at or below this count as "no key" during threshold search.
pub const POSITIVE_RATE: f64 = 1e-12;

/// Grid values closer than this are treated as ties; the smaller noise wins.
const TIE: f64 = 1e-14;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub argmax: f64,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Optimization2dResult {
    pub argmax: (f64, f64),
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

fn check_box(lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::Domain(format!("invalid search interval [{lo}, {hi}]")));
    }
    Ok(())
}

fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let step = (hi - lo) / (points - 1) as f64;
    (0..points)
        .map(|i| if i + 1 == points { hi } else { lo + step * i as f64 })
        .collect()
}

/// Index of the best value; later entries must beat earlier ones by more than [`TIE`].
fn best_index(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] + TIE {
            best = i;
        }
    }
    best
}

/// Golden-section search for a maximum on `[a, b]`, returning the best point seen.
fn golden<F>(f: &mut F, mut a: f64, mut b: f64, tol: f64, evaluations: &mut usize) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    *evaluations += 2;
    let mut best = if fd > fc { (d, fd) } else { (c, fc) };
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
            *evaluations += 1;
            if fc > best.1 || (fc == best.1 && c < best.0) {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
            *evaluations += 1;
            if fd > best.1 {
                best = (d, fd);
            }
        }
    }
    Ok(best)
}

/// Maximize `f` over `[lo, hi]`: 51-point grid, then golden-section search in
/// the best cell and its neighbours down to a width of `1e-6`.
///
/// The returned value is never below the best grid value; if refinement
/// fails to improve on it the grid point is returned with `converged = false`.
pub fn maximize_over_noise<F>(f: F, lo: f64, hi: f64) -> Result<OptimizationResult>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    maximize_over_noise_with_hint(f, lo, hi, None)
}

/// As [`maximize_over_noise`], with an extra candidate point (for example the
/// optimum at a neighbouring parameter) evaluated alongside the grid.
pub fn maximize_over_noise_with_hint<F>(f: F, lo: f64, hi: f64, hint: Option<f64>) -> Result<OptimizationResult>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    check_box(lo, hi)?;
    if lo == hi {
        return Ok(OptimizationResult {
            argmax: lo,
            value: f(lo)?,
            evaluations: 1,
            converged: true,
        });
    }
    let points = grid(lo, hi, GRID_POINTS);
    let values: Vec<f64> = points.par_iter().map(|&q| f(q)).collect::<Result<_>>()?;
    let mut evaluations = points.len();
    let best = best_index(&values);
    let (mut arg, mut value) = (points[best], values[best]);

    if let Some(h) = hint.filter(|h| (lo..=hi).contains(h)) {
        let v = f(h)?;
        evaluations += 1;
        if v > value + TIE || (v >= value - TIE && h < arg) {
            arg = h;
            value = v;
        }
    }

    let a = points[best.saturating_sub(1)];
    let b = points[(best + 1).min(points.len() - 1)];
    let mut g = |q: f64| f(q);
    let (g_arg, g_value) = golden(&mut g, a, b, NOISE_TOLERANCE, &mut evaluations)?;
    let converged = g_value >= values[best] - 1e-12 * values[best].abs().max(1.0);
    if g_value > value {
        arg = g_arg;
        value = g_value;
    }
    Ok(OptimizationResult {
        argmax: arg,
        value,
        evaluations,
        converged,
    })
}

/// Maximize `f(q, Q)` over `[lo, hi]²`: 21x21 grid, then alternating
/// golden-section searches along each coordinate to a width of `1e-5`.
pub fn maximize_over_noise_2d<F>(f: F, lo: f64, hi: f64) -> Result<Optimization2dResult>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    check_box(lo, hi)?;
    let axis = grid(lo, hi, GRID_POINTS_2D);
    let pairs: Vec<(f64, f64)> = axis
        .iter()
        .flat_map(|&q| axis.iter().map(move |&big_q| (q, big_q)))
        .collect();
    let values: Vec<f64> = pairs.par_iter().map(|&(q, bq)| f(q, bq)).collect::<Result<_>>()?;
    let mut evaluations = pairs.len();
    let best = best_index(&values);
    let grid_value = values[best];
    let (mut x, mut y) = pairs[best];
    let mut value = grid_value;
    let half = if axis.len() > 1 { axis[1] - axis[0] } else { 0.0 };

    let mut converged = false;
    for _ in 0..50 {
        let (px, py) = (x, y);
        let mut fx = |t: f64| f(t, y);
        let (nx, vx) = golden(&mut fx, (x - half).max(lo), (x + half).min(hi), NOISE_TOLERANCE_2D, &mut evaluations)?;
        if vx > value {
            x = nx;
            value = vx;
        }
        let mut fy = |t: f64| f(x, t);
        let (ny, vy) = golden(&mut fy, (y - half).max(lo), (y + half).min(hi), NOISE_TOLERANCE_2D, &mut evaluations)?;
        if vy > value {
            y = ny;
            value = vy;
        }
        if (x - px).abs() <= NOISE_TOLERANCE_2D && (y - py).abs() <= NOISE_TOLERANCE_2D {
            converged = true;
            break;
        }
    }
    Ok(Optimization2dResult {
        argmax: (x, y),
        value,
        evaluations,
        converged,
    })
}

/// One evaluation of an optimized rate during threshold search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateProbe {
    pub rate: f64,
    /// Optimal noise parameters at this error rate (`[q]` or `[q, Q]`), empty if fixed.
    pub noise: Vec<f64>,
}

impl RateProbe {
    pub fn fixed(rate: f64) -> Self {
        Self { rate, noise: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdResult {
    /// Midpoint of the final bracket.
    pub p_max: f64,
    /// Half-width of the final bracket.
    pub width: f64,
    /// Noise parameters at the largest error rate found with positive rate.
    pub noise_at_threshold: Vec<f64>,
    pub evaluations: usize,
}

impl ThresholdResult {
    pub fn q_at_threshold(&self) -> Option<f64> {
        self.noise_at_threshold.first().copied()
    }
}

/// Bisection for the largest `p` with positive rate.
///
/// Requires `rate(p_lo) > 1e-12 ≥ rate(p_hi)`. Stops when the bracket is at
/// most `1e-5` wide; `rate(p_max - width) > 0 ≥ rate(p_max + width)` holds
/// for the returned result.
pub fn find_threshold<F>(rate: F, p_lo: f64, p_hi: f64) -> Result<ThresholdResult>
where
    F: FnMut(f64) -> Result<RateProbe>,
{
    find_threshold_with_tolerance(rate, p_lo, p_hi, THRESHOLD_TOLERANCE)
}

pub fn find_threshold_with_tolerance<F>(mut rate: F, p_lo: f64, p_hi: f64, tol: f64) -> Result<ThresholdResult>
where
    F: FnMut(f64) -> Result<RateProbe>,
{
    if p_lo.is_nan() || p_hi.is_nan() || p_lo >= p_hi || tol.is_nan() || tol <= 0.0 {
        return Err(Error::Domain(format!("invalid bisection interval [{p_lo}, {p_hi}]")));
    }
    let low = rate(p_lo)?;
    let high = rate(p_hi)?;
    if low.rate.is_nan() || low.rate <= POSITIVE_RATE || high.rate > POSITIVE_RATE {
        return Err(Error::InvalidBracket {
            lo: p_lo,
            hi: p_hi,
            rate_lo: low.rate,
            rate_hi: high.rate,
        });
    }
    let (mut lo, mut hi) = (p_lo, p_hi);
    let mut noise = low.noise;
    let mut evaluations = 2;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let probe = rate(mid)?;
        evaluations += 1;
        if probe.rate > POSITIVE_RATE {
            lo = mid;
            noise = probe.noise;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdResult {
        p_max: 0.5 * (lo + hi),
        width: 0.5 * (hi - lo),
        noise_at_threshold: noise,
        evaluations,
    })
}
