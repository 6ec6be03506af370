//! Single-qubit density operators used throughout the rate formulas.

use nalgebra::{Complex, DMatrix, Matrix2};

use crate::entropy::binary_entropy_unchecked;
use crate::error::{Error, Result};

const STATE_TOLERANCE: f64 = 1e-12;

/// A 2x2 positive unit-trace operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitDensity {
    m: Matrix2<Complex<f64>>,
}

impl QubitDensity {
    pub fn new(m: Matrix2<Complex<f64>>) -> Result<Self> {
        let herm = (m[(0, 1)] - m[(1, 0)].conj()).norm() <= STATE_TOLERANCE
            && m[(0, 0)].im.abs() <= STATE_TOLERANCE
            && m[(1, 1)].im.abs() <= STATE_TOLERANCE;
        if !herm {
            return Err(Error::Domain("qubit operator is not Hermitian".into()));
        }
        let tr = m[(0, 0)].re + m[(1, 1)].re;
        if (tr - 1.0).abs() > STATE_TOLERANCE {
            return Err(Error::Domain(format!("qubit operator has trace {tr}")));
        }
        let s = Self { m };
        let (_, l2) = s.eigenvalues();
        if l2 < -STATE_TOLERANCE {
            return Err(Error::Domain(format!("qubit operator has negative eigenvalue {l2:e}")));
        }
        Ok(s)
    }

    /// Real symmetric state `[[a, b], [b, 1 - a]]`.
    pub fn real(a: f64, b: f64) -> Result<Self> {
        Self::new(Matrix2::new(
            Complex::new(a, 0.0),
            Complex::new(b, 0.0),
            Complex::new(b, 0.0),
            Complex::new(1.0 - a, 0.0),
        ))
    }

    /// `(1-w)|ψ><ψ| + w|ψ'><ψ'|` with `ψ = (α, β)`, `ψ' = (α, -β)` real amplitudes.
    fn dephased_pure(alpha: f64, beta: f64, w: f64) -> Result<Self> {
        Self::real(alpha * alpha, (1.0 - 2.0 * w) * alpha * beta)
    }

    /// `ρ_pq = (1-q)[φ₊] + q[φ₋]`, `|φ±> = √(1-p)|0> ± √p|1>`.
    pub fn rho_pq(p: f64, q: f64) -> Result<Self> {
        crate::error::check_probability("p", p)?;
        crate::error::check_probability("q", q)?;
        Self::dephased_pure((1.0 - p).sqrt(), p.sqrt(), q)
    }

    /// `σ = (1-q)[+] + q[-]`.
    pub fn sigma(q: f64) -> Result<Self> {
        crate::error::check_probability("q", q)?;
        Self::dephased_pure(std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2, q)
    }

    /// `γ = (1-q)[φ'₊] + q[φ'₋]`, `|φ'±> = √p'|0> ± √(1-p')|1>`.
    pub fn gamma(p_prime: f64, q: f64) -> Result<Self> {
        crate::error::check_probability("p'", p_prime)?;
        crate::error::check_probability("q", q)?;
        Self::dephased_pure(p_prime.sqrt(), (1.0 - p_prime).sqrt(), q)
    }

    pub fn matrix(&self) -> &Matrix2<Complex<f64>> {
        &self.m
    }

    pub fn is_real(&self) -> bool {
        self.m.iter().all(|z| z.im.abs() <= STATE_TOLERANCE)
    }

    /// Entries `(ρ₀₀, ρ₀₁)` of a real state.
    pub fn real_entries(&self) -> Result<(f64, f64)> {
        if !self.is_real() {
            return Err(Error::ComplexState);
        }
        Ok((self.m[(0, 0)].re, self.m[(0, 1)].re))
    }

    /// `ZρZ`.
    pub fn z_conjugate(&self) -> Self {
        let mut m = self.m;
        m[(0, 1)] = -m[(0, 1)];
        m[(1, 0)] = -m[(1, 0)];
        Self { m }
    }

    /// Eigenvalues `(λ₁, λ₂)` with `λ₁ ≥ λ₂`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let a = self.m[(0, 0)].re;
        let d = self.m[(1, 1)].re;
        let off = self.m[(0, 1)].norm();
        let half_gap = (0.25 * (a - d) * (a - d) + off * off).sqrt();
        let mid = 0.5 * (a + d);
        (mid + half_gap, mid - half_gap)
    }

    /// Entropy in bits.
    pub fn entropy(&self) -> f64 {
        let (l1, _) = self.eigenvalues();
        binary_entropy_unchecked(l1.clamp(0.0, 1.0))
    }

    pub fn to_real_matrix(&self) -> Result<DMatrix<f64>> {
        if !self.is_real() {
            return Err(Error::ComplexState);
        }
        Ok(DMatrix::from_fn(2, 2, |i, j| self.m[(i, j)].re))
    }

    pub fn to_complex_matrix(&self) -> DMatrix<Complex<f64>> {
        DMatrix::from_fn(2, 2, |i, j| self.m[(i, j)])
    }
}

/// `h(½(1 + √(1 - 16 p(1-p) q(1-q))))`, the entropy of `ρ_pq`.
pub fn dephased_entropy(p: f64, q: f64) -> f64 {
    let disc = (1.0 - 16.0 * p * (1.0 - p) * q * (1.0 - q)).max(0.0).sqrt();
    binary_entropy_unchecked(0.5 * (1.0 + disc))
}
