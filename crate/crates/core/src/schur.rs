//! Block-diagonal entropy of permutation-invariant qubit mixtures.
//!
//! For real qubit states `ρᵢ`, the operator `Σᵢ wᵢ ρᵢ^⊗m` is block diagonal in
//! the Schur basis of `(C²)^⊗m`: one `(2j+1)`-dimensional block per spin `j`,
//! repeated `N_Y(j)` times. Each block of `ρᵢ^⊗m` is `D_j(θᵢ) ϱ_j D_j(θᵢ)ᵀ`,
//! where `ϱ_j` is diagonal in powers of the eigenvalues of `ρᵢ` and `D_j` is
//! the spin-j image of the real rotation that diagonalizes `ρᵢ`.
//!
//! Spins are carried as the integer `two_j = 2j`. Inside a block, index
//! `i = j + k ∈ 0..=two_j` counts the ones of the Weyl tableau; `i = 0` carries
//! the largest diagonal entry `λ₁^{2j}`.
//!
//! Two routes evaluate a block entropy:
//!
//! * [`mixture_entropy_full_blocks`] builds every block densely from
//!   [`wigner_block`] and [`diagonal_block`].
//! * [`mixture_entropy`] keeps only the diagonal entries that are not
//!   negligible (`μᵢ/μ₀ ≥ 1e-18`), writes the block as `B Bᵀ` with a thin `B`,
//!   and diagonalizes the small Gram matrix `Bᵀ B`. The Gram entries only
//!   need a corner of `D_j(θ' - θ)`, computed from a short Dicke-basis sum.
//!   This is what makes blocklengths in the hundreds cheap.

use std::collections::HashMap;
use std::f64::consts::LN_2;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::combinatorics::{binomial_exact, ln_pow, LnFactorial};
use crate::entropy::{spectrum_entropy, symmetric_eigenvalues};
use crate::error::{Error, Result};
use crate::qubit::QubitDensity;

/// Largest blocklength accepted by [`block_structure`].
pub const MAX_BLOCKLENGTH: usize = 1024;

/// Diagonal entries below this fraction of the block maximum are dropped on the fast path.
pub const SIGNIFICANCE_CUTOFF: f64 = 1e-18;

/// Blocks whose total mass is below this are skipped on the fast path.
pub const PRUNE_MASS: f64 = 1e-24;

/// One irreducible block: spin `two_j / 2`, `multiplicity` copies of dimension `two_j + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchurBlock {
    pub two_j: usize,
    pub multiplicity: BigUint,
    pub ln_multiplicity: f64,
}

impl SchurBlock {
    pub fn dimension(&self) -> usize {
        self.two_j + 1
    }
}

/// Multiplicities and dimensions of the Schur decomposition of `m` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct SchurBlockStructure {
    m: usize,
    blocks: Vec<SchurBlock>,
}

impl SchurBlockStructure {
    pub fn m(&self) -> usize {
        self.m
    }

    /// Blocks in ascending `two_j`.
    pub fn blocks(&self) -> &[SchurBlock] {
        &self.blocks
    }

    /// `Σ N_Y(j) (2j + 1)`, which equals `2^m`.
    pub fn total_dimension(&self) -> BigUint {
        self.blocks
            .iter()
            .map(|b| &b.multiplicity * BigUint::from(b.dimension()))
            .sum()
    }
}

/// Hook-length multiplicity `N_Y(j) = C(m, m/2 - j) (2j+1) / (m/2 + j + 1)`, exactly.
pub fn multiplicity_exact(m: usize, two_j: usize) -> BigUint {
    assert!(two_j <= m && (m - two_j).is_multiple_of(2), "invalid spin {two_j}/2 for m = {m}");
    let lower = ((m - two_j) / 2) as u64;
    let upper = ((m + two_j) / 2 + 1) as u64;
    let numerator = binomial_exact(m as u64, lower) * BigUint::from(two_j as u64 + 1);
    let upper = BigUint::from(upper);
    debug_assert!((&numerator % &upper).is_zero());
    numerator / upper
}

/// `ln N_Y(j)` from a log-factorial table covering `m + 1`.
#[inline]
pub fn ln_multiplicity(lf: &LnFactorial, m: usize, two_j: usize) -> f64 {
    let lower = (m - two_j) / 2;
    let upper = (m + two_j) / 2 + 1;
    lf.ln_binomial(m, lower) + ((two_j + 1) as f64).ln() - (upper as f64).ln()
}

/// Schur block structure of `m` qubits, `1 ≤ m ≤ 1024`.
pub fn block_structure(m: usize) -> Result<SchurBlockStructure> {
    if m == 0 || m > MAX_BLOCKLENGTH {
        return Err(Error::Domain(format!("blocklength {m} outside 1..={MAX_BLOCKLENGTH}")));
    }
    let lf = LnFactorial::new(m + 1);
    let blocks = (m % 2..=m)
        .step_by(2)
        .map(|two_j| SchurBlock {
            two_j,
            multiplicity: multiplicity_exact(m, two_j),
            ln_multiplicity: ln_multiplicity(&lf, m, two_j),
        })
        .collect();
    Ok(SchurBlockStructure { m, blocks })
}

/// Angle `θ` of the real rotation `R(θ) = [[cos θ/2, -sin θ/2], [sin θ/2, cos θ/2]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationAngle(pub f64);

impl RotationAngle {
    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn matrix(self) -> DMatrix<f64> {
        let (s, c) = (0.5 * self.0).sin_cos();
        DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
    }
}

/// The angle with `R(θ)ᵀ ρ R(θ)` diagonal, larger eigenvalue first, `θ ∈ (-π, π]`.
///
/// A degenerate state gets `θ = 0`.
pub fn rotation_angle(rho: &QubitDensity) -> Result<RotationAngle> {
    let (a, b) = rho.real_entries()?;
    let d = 1.0 - a;
    if b == 0.0 && a == d {
        return Ok(RotationAngle(0.0));
    }
    let mut theta = (2.0 * b).atan2(a - d);
    if theta <= -std::f64::consts::PI {
        theta += 2.0 * std::f64::consts::PI;
    }
    Ok(RotationAngle(theta))
}

/// Spin-j image of `R(θ)` in the basis `i = 0..=two_j`, by dense matrix exponential.
///
/// The generator is the antisymmetric tridiagonal matrix with
/// `G[i+1, i] = √((i+1)(two_j - i)) = -G[i, i+1]`; the block is `exp(θ/2 · G)`.
pub fn wigner_block(two_j: usize, theta: RotationAngle) -> DMatrix<f64> {
    let n = two_j + 1;
    if theta.0 == 0.0 || n == 1 {
        return DMatrix::identity(n, n);
    }
    let mut g = DMatrix::zeros(n, n);
    for i in 0..two_j {
        let amp = (((i + 1) * (two_j - i)) as f64).sqrt() * 0.5 * theta.0;
        g[(i + 1, i)] = amp;
        g[(i, i + 1)] = -amp;
    }
    g.exp()
}

/// Top-left corners of `D_j(β)` for increasing spin, sharing one recursion.
///
/// Writing the symmetric state `|n>` of `N+1` qubits as
/// `√((N+1-n)/(N+1)) |n>|0> + √(n/(N+1)) |n-1>|1>` and applying `R^⊗N ⊗ R` gives
///
/// `(N+1) D_{N+1}[r, n] = √((N+1-r)(N+1-n)) c D_N[r, n] - √((N+1-r) n) s D_N[r, n-1]`
/// `                    + √(r (N+1-n)) s D_N[r-1, n] + √(r n) c D_N[r-1, n-1]`
///
/// with `c = cos β/2`, `s = sin β/2`. Every step is a contraction and only
/// reads the corner of the previous one, so a `K x K` corner at spin `N/2`
/// costs `O(N K²)`.
#[derive(Debug, Clone)]
pub struct WignerCornerLadder {
    cos: f64,
    sin: f64,
    size: usize,
    two_j: usize,
    corner: DMatrix<f64>,
    scratch: DMatrix<f64>,
}

impl WignerCornerLadder {
    /// Start at spin 0 with corners of at most `size x size`.
    pub fn new(beta: f64, size: usize) -> Self {
        let (sin, cos) = (0.5 * beta).sin_cos();
        let size = size.max(1);
        let mut corner = DMatrix::zeros(size, size);
        corner[(0, 0)] = 1.0;
        Self {
            cos,
            sin,
            size,
            two_j: 0,
            corner,
            scratch: DMatrix::zeros(size, size),
        }
    }

    pub fn two_j(&self) -> usize {
        self.two_j
    }

    pub fn size(&self) -> usize {
        self.size
    }

    fn step(&mut self) {
        let n = self.two_j;
        let live = (n + 2).min(self.size);
        let (c, s) = (self.cos, self.sin);
        let scale = 1.0 / (n + 1) as f64;
        let old = &self.corner;
        let new = &mut self.scratch;
        let get = |r: usize, col: usize| if r <= n && col <= n { old[(r, col)] } else { 0.0 };
        for col in 0..live {
            let keep_col = ((n + 1 - col) as f64).sqrt();
            let flip_col = (col as f64).sqrt();
            for r in 0..live {
                let keep_row = ((n + 1 - r) as f64).sqrt();
                let flip_row = (r as f64).sqrt();
                let mut v = keep_row * keep_col * c * get(r, col);
                if col > 0 {
                    v -= keep_row * flip_col * s * get(r, col - 1);
                }
                if r > 0 {
                    v += flip_row * keep_col * s * get(r - 1, col);
                    if col > 0 {
                        v += flip_row * flip_col * c * get(r - 1, col - 1);
                    }
                }
                new[(r, col)] = v * scale;
            }
        }
        std::mem::swap(&mut self.corner, &mut self.scratch);
        self.two_j += 1;
    }

    /// Advance to spin `two_j / 2`; panics if that is below the current spin.
    pub fn advance_to(&mut self, two_j: usize) {
        assert!(two_j >= self.two_j, "ladder cannot move down");
        while self.two_j < two_j {
            self.step();
        }
    }

    /// Current corner restricted to `rows x cols`.
    pub fn corner(&self, rows: usize, cols: usize) -> DMatrix<f64> {
        let live = (self.two_j + 1).min(self.size);
        self.corner.view((0, 0), (rows.min(live), cols.min(live))).into_owned()
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.corner[(row, col)]
    }
}

/// Top-left `rows x cols` corner of `wigner_block(two_j, β)` without forming the block.
pub fn wigner_corner(two_j: usize, beta: f64, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut ladder = WignerCornerLadder::new(beta, rows.max(cols).min(two_j + 1));
    ladder.advance_to(two_j);
    ladder.corner(rows, cols)
}

/// Diagonal block of `diag(λ₁, λ₂)^⊗m` for spin `two_j / 2`.
///
/// Entry `i` is `λ₁^{two_j - i} λ₂^{i} (λ₁λ₂)^{(m - two_j)/2}`.
pub fn diagonal_block(two_j: usize, lambda1: f64, lambda2: f64, m: usize) -> Result<DVector<f64>> {
    if two_j > m || !(m - two_j).is_multiple_of(2) {
        return Err(Error::Domain(format!("spin {two_j}/2 is not a block of {m} qubits")));
    }
    if lambda2 < 0.0 || lambda1 < lambda2 {
        return Err(Error::Domain(format!("need λ₁ ≥ λ₂ ≥ 0, got ({lambda1}, {lambda2})")));
    }
    let pairs = ((m - two_j) / 2) as i32;
    let shared = (lambda1 * lambda2).powi(pairs);
    Ok(DVector::from_fn(two_j + 1, |i, _| {
        lambda1.powi((two_j - i) as i32) * lambda2.powi(i as i32) * shared
    }))
}

/// Weighted list of real qubit states whose tensor powers are mixed.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedQubitFamily {
    terms: Vec<(f64, QubitDensity)>,
}

impl WeightedQubitFamily {
    pub fn new(terms: Vec<(f64, QubitDensity)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Domain("empty qubit family".into()));
        }
        let mut total = 0.0;
        for (w, rho) in &terms {
            if !w.is_finite() || *w <= 0.0 {
                return Err(Error::Domain(format!("family weight {w} is not positive")));
            }
            if !rho.is_real() {
                return Err(Error::ComplexState);
            }
            total += w;
        }
        if total > 1.0 + 1e-12 {
            return Err(Error::Domain(format!("family weights sum to {total} > 1")));
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[(f64, QubitDensity)] {
        &self.terms
    }

    pub fn total_weight(&self) -> f64 {
        self.terms.iter().map(|(w, _)| w).sum()
    }
}

/// Spectral data of one real qubit state.
#[derive(Debug, Clone, Copy)]
struct StateSpectrum {
    theta: f64,
    lambda1: f64,
    lambda2: f64,
    ln_lambda1: f64,
    /// `ln λ₁ + ln λ₂`
    ln_product: f64,
    /// `ln(λ₂ / λ₁)`, `-inf` for a pure state, `0` for the maximally mixed state.
    ln_ratio: f64,
}

impl StateSpectrum {
    fn new(rho: &QubitDensity) -> Result<Self> {
        let theta = rotation_angle(rho)?.0;
        let (l1, l2) = rho.eigenvalues();
        let l2 = l2.max(0.0);
        let ln_lambda1 = l1.ln();
        let ln_lambda2 = if l2 > 0.0 { l2.ln() } else { f64::NEG_INFINITY };
        let ln_ratio = if l2 >= l1 { 0.0 } else { ln_lambda2 - ln_lambda1 };
        Ok(Self {
            theta,
            lambda1: l1,
            lambda2: l2,
            ln_lambda1,
            ln_product: ln_lambda1 + ln_lambda2,
            ln_ratio,
        })
    }

    /// Number of diagonal entries `μᵢ/μ₀ = (λ₂/λ₁)^i` above the cutoff, capped at the block dimension.
    fn significant(&self, two_j: usize) -> usize {
        let dim = two_j + 1;
        if self.ln_ratio == f64::NEG_INFINITY {
            return 1;
        }
        if self.ln_ratio >= -1e-300 {
            return dim;
        }
        let k = (SIGNIFICANCE_CUTOFF.ln() / self.ln_ratio).floor();
        if k >= dim as f64 {
            dim
        } else {
            k as usize + 1
        }
    }

    /// Normalized diagonal `μᵢ/μ₀` for `i < count`.
    fn normalized_diagonal(&self, count: usize) -> Vec<f64> {
        (0..count).map(|i| ln_pow(self.ln_ratio, i as f64).exp()).collect()
    }

    fn normalized_trace(&self, two_j: usize) -> f64 {
        (0..self.significant(two_j)).map(|i| ln_pow(self.ln_ratio, i as f64).exp()).sum()
    }

    /// `ln μ₀` for the block of `n` qubits at spin `two_j / 2`, i.e. `ln(λ₁^{two_j} (λ₁λ₂)^{(n-two_j)/2})`.
    fn ln_block_scale(&self, n: usize, two_j: usize) -> f64 {
        ln_pow(self.ln_product, ((n - two_j) / 2) as f64) + ln_pow(self.ln_lambda1, two_j as f64)
    }
}

/// `-Σ e ln e` (nats) and `Σ e` over a Gram spectrum, clipping round-off negatives.
fn gram_spectrum_entropy(gram: &DMatrix<f64>) -> Result<(f64, f64)> {
    let values = symmetric_eigenvalues(gram)?;
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    let mut entropy = 0.0;
    let mut trace = 0.0;
    for e in values {
        if e < -1e-9 * top.max(1e-300) {
            return Err(Error::Numerical(format!("Gram eigenvalue {e:e} is negative (top {top:e})")));
        }
        if e > 0.0 {
            entropy -= e * e.ln();
            trace += e;
        }
    }
    Ok((entropy, trace))
}

/// Entropy (nats) of one spin block of `Σᵢ wᵢ ρᵢ^⊗m`, times its multiplicity.
fn block_entropy_nats(
    terms: &[(f64, StateSpectrum)],
    m: usize,
    two_j: usize,
    ln_mult: f64,
    ladders: &mut HashMap<(usize, usize), WignerCornerLadder>,
) -> Result<f64> {
    struct Active {
        index: usize,
        ln_scale: f64,
        diag: Vec<f64>,
    }
    let mut active = Vec::with_capacity(terms.len());
    for (index, (w, spectrum)) in terms.iter().enumerate() {
        let ln_scale = w.ln() + spectrum.ln_block_scale(m, two_j);
        if ln_scale == f64::NEG_INFINITY {
            continue;
        }
        let k = spectrum.significant(two_j);
        active.push(Active {
            index,
            ln_scale,
            diag: spectrum.normalized_diagonal(k),
        });
    }
    if active.is_empty() {
        return Ok(0.0);
    }
    let s0 = active.iter().map(|a| a.ln_scale).fold(f64::NEG_INFINITY, f64::max);
    let mass: f64 = active
        .iter()
        .map(|a| (ln_mult + a.ln_scale).exp() * a.diag.iter().sum::<f64>())
        .sum();
    if mass < PRUNE_MASS {
        return Ok(0.0);
    }
    let sizes: Vec<usize> = active.iter().map(|a| a.diag.len()).collect();
    let offsets: Vec<usize> = sizes
        .iter()
        .scan(0, |acc, &s| {
            let o = *acc;
            *acc += s;
            Some(o)
        })
        .collect();
    let total: usize = sizes.iter().sum();
    let root: Vec<Vec<f64>> = active
        .iter()
        .map(|a| {
            let w = (a.ln_scale - s0).exp();
            a.diag.iter().map(|mu| (w * mu).sqrt()).collect()
        })
        .collect();
    let mut gram = DMatrix::zeros(total, total);
    for (x, ax) in active.iter().enumerate() {
        for i in 0..sizes[x] {
            gram[(offsets[x] + i, offsets[x] + i)] = root[x][i] * root[x][i];
        }
        for (y, ay) in active.iter().enumerate().skip(x + 1) {
            let ladder = ladders.entry((ax.index, ay.index)).or_insert_with(|| {
                let (sx, sy) = (&terms[ax.index].1, &terms[ay.index].1);
                let size = sx.significant(m).max(sy.significant(m));
                WignerCornerLadder::new(sy.theta - sx.theta, size)
            });
            ladder.advance_to(two_j);
            for i in 0..sizes[x] {
                for k in 0..sizes[y] {
                    let v = root[x][i] * ladder.entry(i, k) * root[y][k];
                    gram[(offsets[x] + i, offsets[y] + k)] = v;
                    gram[(offsets[y] + k, offsets[x] + i)] = v;
                }
            }
        }
    }
    let (entropy, trace) = gram_spectrum_entropy(&gram)?;
    Ok((ln_mult + s0).exp() * (entropy - s0 * trace))
}

fn spectra(family: &WeightedQubitFamily) -> Result<Vec<(f64, StateSpectrum)>> {
    family
        .terms
        .iter()
        .map(|(w, rho)| Ok((*w, StateSpectrum::new(rho)?)))
        .collect()
}

/// `S(Σᵢ wᵢ ρᵢ^⊗m)` in bits, block by block on the Gram fast path.
pub fn mixture_entropy(family: &WeightedQubitFamily, m: usize) -> Result<f64> {
    if m == 0 || m > MAX_BLOCKLENGTH {
        return Err(Error::Domain(format!("blocklength {m} outside 1..={MAX_BLOCKLENGTH}")));
    }
    let terms = spectra(family)?;
    let lf = LnFactorial::new(m + 1);
    let mut ladders = HashMap::new();
    let mut nats = 0.0;
    for two_j in (m % 2..=m).step_by(2) {
        nats += block_entropy_nats(&terms, m, two_j, ln_multiplicity(&lf, m, two_j), &mut ladders)?;
    }
    Ok(nats / LN_2)
}

/// Dense block `Σᵢ wᵢ D_j(θᵢ) ϱ_j(ρᵢ) D_j(θᵢ)ᵀ` for spin `two_j / 2` of `m` qubits.
pub fn mixture_block(family: &WeightedQubitFamily, m: usize, two_j: usize) -> Result<DMatrix<f64>> {
    let dim = two_j + 1;
    let mut block = DMatrix::zeros(dim, dim);
    for (w, rho) in &family.terms {
        let theta = rotation_angle(rho)?;
        let (l1, l2) = rho.eigenvalues();
        let diag = diagonal_block(two_j, l1, l2.max(0.0), m)?;
        let d = wigner_block(two_j, theta);
        block += (&d * DMatrix::from_diagonal(&diag) * d.transpose()) * *w;
    }
    Ok(block)
}

/// `S(Σᵢ wᵢ ρᵢ^⊗m)` in bits from fully assembled dense blocks.
///
/// Cost is `O(Σ_j (2j+1)³)`; intended for moderate `m` and for checking [`mixture_entropy`].
pub fn mixture_entropy_full_blocks(family: &WeightedQubitFamily, m: usize) -> Result<f64> {
    let structure = block_structure(m)?;
    let mut total = 0.0;
    for block in structure.blocks() {
        let b = mixture_block(family, m, block.two_j)?;
        let values = symmetric_eigenvalues(&b)?;
        let s = spectrum_entropy(&values)?;
        let mult = block.multiplicity.to_f64().unwrap_or(f64::INFINITY);
        if s != 0.0 {
            total += mult * s;
        }
    }
    Ok(total)
}

/// Per-spin data for [`ConjugatePair`].
#[derive(Debug, Clone)]
struct PairBlock {
    diag: Vec<f64>,
    /// `-Σ μ ln μ` over the normalized diagonal.
    entropy: f64,
    trace: f64,
    /// `√(μₐ μ_b) · D_j(-2θ)[a, b]`
    coupling: DMatrix<f64>,
}

/// Holevo deficits of `ρ^⊗n` against `(ZρZ)^⊗n` for a fixed real qubit state.
///
/// For weights `a ≥ b > 0` the deficit is
/// `S(a ρ^⊗n) + S(b (ZρZ)^⊗n) - S(a ρ^⊗n + b (ZρZ)^⊗n) ≥ 0`.
/// It vanishes when `b = 0` or when the two tensor powers are orthogonal,
/// and equals `(a+b) h(b/(a+b))` when `ρ` is diagonal. Every mutual information with Eve in this
/// crate reduces to sums of these deficits, which are sums of nonnegative
/// block terms and so stay well conditioned at large `n`.
///
/// Block data are cached by spin and by ratio `b/a`; an instance is meant to
/// live for one rate evaluation.
#[derive(Debug)]
pub struct ConjugatePair {
    spectrum: StateSpectrum,
    lf: LnFactorial,
    ladder: WignerCornerLadder,
    blocks: HashMap<usize, PairBlock>,
    deficits: HashMap<(usize, u64), f64>,
}

impl ConjugatePair {
    /// Prepare for blocklengths up to `max_n`.
    pub fn new(rho: &QubitDensity, max_n: usize) -> Result<Self> {
        if max_n > MAX_BLOCKLENGTH {
            return Err(Error::Domain(format!("blocklength {max_n} exceeds {MAX_BLOCKLENGTH}")));
        }
        let spectrum = StateSpectrum::new(rho)?;
        Ok(Self {
            spectrum,
            lf: LnFactorial::new(max_n + 1),
            ladder: WignerCornerLadder::new(-2.0 * spectrum.theta, spectrum.significant(max_n)),
            blocks: HashMap::new(),
            deficits: HashMap::new(),
        })
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        (self.spectrum.lambda1, self.spectrum.lambda2)
    }

    fn block(&mut self, two_j: usize) -> &PairBlock {
        let spectrum = self.spectrum;
        let ladder = &mut self.ladder;
        self.blocks.entry(two_j).or_insert_with(|| {
            let k = spectrum.significant(two_j);
            let diag = spectrum.normalized_diagonal(k);
            if ladder.two_j() > two_j {
                *ladder = WignerCornerLadder::new(-2.0 * spectrum.theta, ladder.size());
            }
            ladder.advance_to(two_j);
            let corner = ladder.corner(k, k);
            let root: Vec<f64> = diag.iter().map(|x| x.sqrt()).collect();
            let coupling = DMatrix::from_fn(k, k, |a, b| root[a] * corner[(a, b)] * root[b]);
            let entropy = diag.iter().map(|&x| if x > 0.0 { -x * x.ln() } else { 0.0 }).sum();
            let trace = diag.iter().sum();
            PairBlock {
                diag,
                entropy,
                trace,
                coupling,
            }
        })
    }

    /// Normalized block deficit `(1+r)Ĥ - r ln r T̂ - Ŝ(Ĝ + r Ĝ')` in nats, `0 ≤ r ≤ 1`.
    fn block_deficit(&mut self, two_j: usize, ratio: f64) -> Result<f64> {
        let key = (two_j, ratio.to_bits());
        if let Some(&v) = self.deficits.get(&key) {
            return Ok(v);
        }
        let value = if ratio == 0.0 {
            0.0
        } else {
            let block = self.block(two_j);
            let k = block.diag.len();
            let sr = ratio.sqrt();
            let mut gram = DMatrix::zeros(2 * k, 2 * k);
            for a in 0..k {
                gram[(a, a)] = block.diag[a];
                gram[(k + a, k + a)] = ratio * block.diag[a];
                for b in 0..k {
                    let v = sr * block.coupling[(a, b)];
                    gram[(a, k + b)] = v;
                    gram[(k + b, a)] = v;
                }
            }
            let (mixed, _) = gram_spectrum_entropy(&gram)?;
            let d = (1.0 + ratio) * block.entropy - ratio * ratio.ln() * block.trace - mixed;
            d.max(0.0)
        };
        self.deficits.insert(key, value);
        Ok(value)
    }

    /// Holevo deficit in nats for weights `(a, b)` given as `ln max(a, b)` and `ratio = min/max`.
    ///
    /// Callers that sweep many weight pairs should pass bit-identical ratios
    /// for equal values so the per-block cache is reused.
    pub fn deficit_nats(&mut self, n: usize, ln_weight: f64, ratio: f64) -> Result<f64> {
        if n > self.lf.max().saturating_sub(1) {
            return Err(Error::Domain(format!("blocklength {n} exceeds prepared maximum")));
        }
        if !(0.0..=1.0).contains(&ratio) {
            return Err(Error::Domain(format!("weight ratio {ratio} outside [0, 1]")));
        }
        if ratio == 0.0 || ln_weight == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for two_j in (n % 2..=n).step_by(2) {
            let ln_scale = ln_weight + self.spectrum.ln_block_scale(n, two_j);
            if ln_scale == f64::NEG_INFINITY {
                continue;
            }
            let ln_mass = ln_multiplicity(&self.lf, n, two_j) + ln_scale;
            let trace = self.spectrum.normalized_trace(two_j);
            if ln_mass.exp() * (1.0 + ratio) * trace < PRUNE_MASS {
                continue;
            }
            total += ln_mass.exp() * self.block_deficit(two_j, ratio)?;
        }
        Ok(total)
    }

    /// Deficit in bits for explicit weights `a, b ≥ 0`.
    pub fn deficit_bits(&mut self, n: usize, a: f64, b: f64) -> Result<f64> {
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        if lo <= 0.0 {
            return Ok(0.0);
        }
        Ok(self.deficit_nats(n, hi.ln(), lo / hi)? / LN_2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::von_neumann_entropy_real;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_real_state(rng: &mut ChaCha8Rng) -> QubitDensity {
        let a: f64 = rng.gen_range(0.0..1.0);
        let bound = (a * (1.0 - a)).sqrt();
        let b = rng.gen_range(-bound..bound);
        QubitDensity::real(a, b).unwrap()
    }

    /// Dense `Σ wᵢ ρᵢ^⊗m`, independent of the block machinery.
    fn dense_mixture(family: &WeightedQubitFamily, m: usize) -> DMatrix<f64> {
        let dim = 1 << m;
        let mut total = DMatrix::zeros(dim, dim);
        for (w, rho) in family.terms() {
            let r = rho.to_real_matrix().unwrap();
            let mut acc = DMatrix::from_element(1, 1, 1.0);
            for _ in 0..m {
                acc = acc.kronecker(&r);
            }
            total += acc * *w;
        }
        total
    }

    #[test]
    fn block_structure_examples() {
        let s1 = block_structure(1).unwrap();
        assert_eq!(s1.blocks().len(), 1);
        assert_eq!(s1.blocks()[0].two_j, 1);
        assert_eq!(s1.blocks()[0].multiplicity, BigUint::from(1u32));

        let s4 = block_structure(4).unwrap();
        let got: Vec<(usize, u32, usize)> = s4
            .blocks()
            .iter()
            .map(|b| (b.two_j, b.multiplicity.to_u32().unwrap(), b.dimension()))
            .collect();
        assert_eq!(got, vec![(0, 2, 1), (2, 3, 3), (4, 1, 5)]);
        assert!(block_structure(0).is_err());
        assert!(block_structure(1025).is_err());
    }

    #[test]
    fn block_structure_is_complete() {
        for m in [1usize, 2, 3, 10, 64, 257, 1024] {
            let s = block_structure(m).unwrap();
            assert_eq!(s.total_dimension(), BigUint::from(1u8) << m, "m = {m}");
            for b in s.blocks() {
                let exact: f64 = b.multiplicity.to_f64().unwrap();
                if exact.is_finite() && exact > 0.0 {
                    assert!((exact.ln() - b.ln_multiplicity).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn rotation_angle_examples() {
        let diag = QubitDensity::real(0.7, 0.0).unwrap();
        assert_eq!(rotation_angle(&diag).unwrap().0, 0.0);
        let mixed = QubitDensity::real(0.5, 0.0).unwrap();
        assert_eq!(rotation_angle(&mixed).unwrap().0, 0.0);

        let rho = QubitDensity::rho_pq(0.1, 0.05).unwrap();
        let theta = rotation_angle(&rho).unwrap();
        let z = rotation_angle(&rho.z_conjugate()).unwrap();
        assert!((theta.0 + z.0).abs() < 1e-15);

        // R(θ)ᵀ ρ R(θ) is diagonal with the larger eigenvalue first.
        let r = theta.matrix();
        let d = r.transpose() * rho.to_real_matrix().unwrap() * &r;
        assert!(d[(0, 1)].abs() < 1e-14);
        let (l1, l2) = rho.eigenvalues();
        assert!((d[(0, 0)] - l1).abs() < 1e-14 && (d[(1, 1)] - l2).abs() < 1e-14);

        // Matches the eigenvector eigh returns, up to sign.
        let e = crate::entropy::eigh(
            &crate::entropy::HermitianOperator::from_real(rho.to_real_matrix().unwrap()).unwrap(),
        )
        .unwrap();
        let v = e.eigenvectors.column(0);
        let dot = (v[0].re * r[(0, 0)] + v[1].re * r[(1, 0)]).abs();
        assert!((dot - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rotation_angle_rejects_complex() {
        use nalgebra::{Complex, Matrix2};
        let m = Matrix2::new(
            Complex::new(0.5, 0.0),
            Complex::new(0.0, -0.3),
            Complex::new(0.0, 0.3),
            Complex::new(0.5, 0.0),
        );
        let rho = QubitDensity::new(m).unwrap();
        assert_eq!(rotation_angle(&rho), Err(Error::ComplexState));
    }

    #[test]
    fn wigner_block_basics() {
        assert_eq!(wigner_block(4, RotationAngle(0.0)), DMatrix::identity(5, 5));
        let theta = RotationAngle(0.83);
        let d = wigner_block(1, theta);
        assert!((d - theta.matrix()).amax() < 1e-14);
        for two_j in [2usize, 5, 12] {
            let a = wigner_block(two_j, RotationAngle(0.4));
            let b = wigner_block(two_j, RotationAngle(-1.1));
            let ab = wigner_block(two_j, RotationAngle(-0.7));
            assert!((&a * &b - ab).amax() < 1e-9);
        }
    }

    #[test]
    fn wigner_block_is_tensor_image() {
        // For two qubits, the spin-1 block of R⊗R in the basis (|00>, (|01>+|10>)/√2, |11>).
        let theta = RotationAngle(1.3);
        let r = theta.matrix();
        let rr = r.kronecker(&r);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let basis = DMatrix::from_row_slice(4, 3, &[1.0, 0.0, 0.0, 0.0, h, 0.0, 0.0, h, 0.0, 0.0, 0.0, 1.0]);
        let restricted = basis.transpose() * rr * &basis;
        assert!((restricted - wigner_block(2, theta)).amax() < 1e-13);
    }

    #[test]
    fn wigner_block_orthogonal_at_large_spin() {
        for two_j in [64usize, 800] {
            let d = wigner_block(two_j, RotationAngle(1.0));
            let err = (d.transpose() * &d - DMatrix::identity(two_j + 1, two_j + 1)).amax();
            assert!(err <= 1e-10, "two_j = {two_j}: {err:e}");
        }
    }

    #[test]
    fn corner_matches_dense_exponential() {
        let mut worst = 0.0f64;
        for two_j in [1usize, 2, 7, 30, 101, 400] {
            for beta in [0.0, 0.3, -1.2, 2.9, -3.1, 5.5, -6.0] {
                let k = 40.min(two_j + 1);
                let dense = wigner_block(two_j, RotationAngle(beta));
                let corner = wigner_corner(two_j, beta, k, k);
                let err = (dense.view((0, 0), (k, k)) - &corner).amax();
                worst = worst.max(err);
                assert!(err < 1e-11, "two_j = {two_j}, β = {beta}: {err:e}");
            }
        }
        assert!(worst.is_finite());
    }

    #[test]
    fn diagonal_block_examples() {
        let d = diagonal_block(1, 0.7, 0.3, 1).unwrap();
        assert_eq!(d.as_slice(), &[0.7, 0.3]);
        let (a, b) = (0.8, 0.2);
        let d = diagonal_block(2, a, b, 2).unwrap();
        assert!((d[0] - a * a).abs() < 1e-15 && (d[1] - a * b).abs() < 1e-15 && (d[2] - b * b).abs() < 1e-15);
        let d = diagonal_block(0, a, b, 2).unwrap();
        assert!((d[0] - a * b).abs() < 1e-15);
        assert!(diagonal_block(1, a, b, 2).is_err());
        assert!(diagonal_block(0, 0.2, 0.8, 2).is_err());

        // Trace of the reassembled operator is (λ₁ + λ₂)^m.
        let s = block_structure(7).unwrap();
        let (l1, l2) = (0.65, 0.3);
        let total: f64 = s
            .blocks()
            .iter()
            .map(|b| b.multiplicity.to_f64().unwrap() * diagonal_block(b.two_j, l1, l2, 7).unwrap().sum())
            .sum();
        assert!((total - (l1 + l2).powi(7)).abs() < 1e-14);
    }

    #[test]
    fn single_term_is_additive() {
        let rho = QubitDensity::rho_pq(0.12, 0.2).unwrap();
        let fam = WeightedQubitFamily::new(vec![(1.0, rho)]).unwrap();
        for m in [1usize, 2, 5, 40, 300] {
            let s = mixture_entropy(&fam, m).unwrap();
            assert!((s - m as f64 * rho.entropy()).abs() < 1e-10 * m as f64, "m = {m}");
        }
    }

    #[test]
    fn diagonal_pair_collapses() {
        let rho = QubitDensity::rho_pq(0.2, 0.5).unwrap();
        let fam = WeightedQubitFamily::new(vec![(0.5, rho), (0.5, rho.z_conjugate())]).unwrap();
        for m in [1usize, 3, 8, 50] {
            let s = mixture_entropy(&fam, m).unwrap();
            assert!((s - m as f64 * rho.entropy()).abs() < 1e-10, "m = {m}");
        }
    }

    #[test]
    fn matches_dense_for_random_families() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for m in 1..=8 {
            for _ in 0..6 {
                let w: f64 = rng.gen_range(0.05..0.95);
                let fam = WeightedQubitFamily::new(vec![
                    (w, random_real_state(&mut rng)),
                    (1.0 - w, random_real_state(&mut rng)),
                ])
                .unwrap();
                let dense = von_neumann_entropy_real(&dense_mixture(&fam, m)).unwrap();
                let fast = mixture_entropy(&fam, m).unwrap();
                let full = mixture_entropy_full_blocks(&fam, m).unwrap();
                assert!((dense - fast).abs() < 1e-9, "m = {m}: {dense} vs {fast}");
                assert!((dense - full).abs() < 1e-9, "m = {m}: {dense} vs {full}");
            }
        }
    }

    #[test]
    fn fast_path_matches_full_blocks_at_moderate_m() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for m in [20usize, 41, 80] {
            for _ in 0..3 {
                let fam = WeightedQubitFamily::new(vec![
                    (0.3, random_real_state(&mut rng)),
                    (0.45, random_real_state(&mut rng)),
                    (0.25, random_real_state(&mut rng)),
                ])
                .unwrap();
                let fast = mixture_entropy(&fam, m).unwrap();
                let full = mixture_entropy_full_blocks(&fam, m).unwrap();
                assert!((fast - full).abs() < 1e-8, "m = {m}: {fast} vs {full}");
            }
        }
    }

    #[test]
    fn z_conjugation_flips_angle() {
        let rho = QubitDensity::rho_pq(0.15, 0.1).unwrap();
        let theta = rotation_angle(&rho).unwrap();
        let (l1, l2) = rho.eigenvalues();
        for (m, two_j) in [(5usize, 3usize), (6, 4), (9, 9)] {
            let diag = DMatrix::from_diagonal(&diagonal_block(two_j, l1, l2, m).unwrap());
            let d = wigner_block(two_j, theta);
            let block = &d * &diag * d.transpose();
            let parity = DMatrix::from_fn(two_j + 1, two_j + 1, |i, k| {
                if i == k {
                    if i % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                } else {
                    0.0
                }
            });
            let conj = &parity * &block * &parity;
            let dm = wigner_block(two_j, RotationAngle(-theta.0));
            let direct = &dm * &diag * dm.transpose();
            assert!((conj - direct).amax() < 1e-10);
        }
    }

    #[test]
    fn trace_is_preserved() {
        let rho = QubitDensity::rho_pq(0.3, 0.2).unwrap();
        let sigma = QubitDensity::real(0.4, 0.1).unwrap();
        let fam = WeightedQubitFamily::new(vec![(0.6, rho), (0.3, sigma)]).unwrap();
        let m = 9;
        let s = block_structure(m).unwrap();
        let total: f64 = s
            .blocks()
            .iter()
            .map(|b| b.multiplicity.to_f64().unwrap() * mixture_block(&fam, m, b.two_j).unwrap().trace())
            .sum();
        assert!((total - 0.9).abs() < 1e-10);
    }

    #[test]
    fn conjugate_pair_matches_entropy_difference() {
        let rho = QubitDensity::rho_pq(0.11, 0.23).unwrap();
        let mut pair = ConjugatePair::new(&rho, 64).unwrap();
        for &(n, a, b) in &[(1usize, 0.5, 0.5), (6, 0.3, 0.1), (9, 0.02, 0.4), (40, 0.5, 0.5)] {
            let fam_a = WeightedQubitFamily::new(vec![(a, rho)]).unwrap();
            let fam_b = WeightedQubitFamily::new(vec![(b, rho.z_conjugate())]).unwrap();
            let fam = WeightedQubitFamily::new(vec![(a, rho), (b, rho.z_conjugate())]).unwrap();
            let expected = mixture_entropy(&fam_a, n).unwrap() + mixture_entropy(&fam_b, n).unwrap()
                - mixture_entropy(&fam, n).unwrap();
            let got = pair.deficit_bits(n, a, b).unwrap();
            assert!((got - expected).abs() < 1e-10, "n = {n}: {got} vs {expected}");
        }
    }

    #[test]
    fn conjugate_pair_limits() {
        let (a, b) = (0.3, 0.1);
        // [+] and [-] have orthogonal tensor powers.
        let plus = QubitDensity::sigma(0.0).unwrap();
        let mut pair = ConjugatePair::new(&plus, 8).unwrap();
        for n in 1..=8 {
            assert!(pair.deficit_bits(n, a, b).unwrap().abs() < 1e-12);
        }
        // A diagonal state is its own Z conjugate.
        let diag = QubitDensity::real(0.8, 0.0).unwrap();
        let mut pair = ConjugatePair::new(&diag, 8).unwrap();
        let expected = (a + b) * crate::entropy::binary_entropy_unchecked(b / (a + b));
        for n in 1..=8 {
            let got = pair.deficit_bits(n, a, b).unwrap();
            assert!((got - expected).abs() < 1e-12, "n = {n}: {got} vs {expected}");
        }
    }
}
