//! Scalar entropies and dense Hermitian eigendecomposition.
//!
//! All entropies are in bits. Operators may be subnormalized (trace below
//! one); their entropy is `-Σ λ log₂ λ` over the eigenvalues, without
//! renormalization.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigenvalues in `[-NEGATIVE_EIGENVALUE_TOLERANCE, 0)` are treated as zero.
pub const NEGATIVE_EIGENVALUE_TOLERANCE: f64 = 1e-10;

/// Tolerance on `A - A†` when accepting an operator as Hermitian.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

const PROBABILITY_SLACK: f64 = 1e-12;

/// `-x log₂ x` with `0 log 0 = 0`.
#[inline]
pub fn xlog2x_neg(x: f64) -> f64 {
    if x > 0.0 {
        -x * x.log2()
    } else {
        0.0
    }
}

/// Binary entropy `h(x) = -x log₂ x - (1-x) log₂ (1-x)`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if x.is_nan() || !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&x) {
        return Err(Error::Domain(format!("binary entropy argument {x} outside [0, 1]")));
    }
    Ok(binary_entropy_unchecked(x.clamp(0.0, 1.0)))
}

/// Binary entropy without the domain check; the argument must lie in `[0, 1]`.
#[inline]
pub fn binary_entropy_unchecked(x: f64) -> f64 {
    xlog2x_neg(x) + xlog2x_neg(1.0 - x)
}

/// A vector of nonnegative weights summing to at most one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if let Some(bad) = entries.iter().find(|x| x.is_nan() || **x < 0.0) {
            return Err(Error::Domain(format!("negative probability {bad}")));
        }
        let total: f64 = entries.iter().sum();
        if total > 1.0 + PROBABILITY_SLACK {
            return Err(Error::Domain(format!("probabilities sum to {total} > 1")));
        }
        Ok(Self(entries))
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Shannon entropy `-Σ pᵢ log₂ pᵢ`, evaluated as given (no renormalization).
pub fn shannon_entropy(p: &ProbabilityVector) -> f64 {
    p.0.iter().map(|&x| xlog2x_neg(x)).sum()
}

/// A dense Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: DMatrix<Complex<f64>>,
}

impl HermitianOperator {
    pub fn new(matrix: DMatrix<Complex<f64>>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::Domain(format!(
                "operator must be square and nonempty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let n = matrix.nrows();
        for i in 0..n {
            for j in 0..=i {
                let d = matrix[(i, j)] - matrix[(j, i)].conj();
                if d.norm() > HERMITIAN_TOLERANCE {
                    return Err(Error::Domain(format!(
                        "operator is not Hermitian at ({i}, {j}): deviation {:e}",
                        d.norm()
                    )));
                }
            }
        }
        Ok(Self { matrix })
    }

    pub fn from_real(matrix: DMatrix<f64>) -> Result<Self> {
        Self::new(matrix.map(|x| Complex::new(x, 0.0)))
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex<f64>> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    /// Real part, when every imaginary entry vanishes.
    pub fn as_real(&self) -> Option<DMatrix<f64>> {
        if self.matrix.iter().all(|z| z.im == 0.0) {
            Some(self.matrix.map(|z| z.re))
        } else {
            None
        }
    }
}

/// Eigen-decomposition `A = V diag(λ) V†`, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<Complex<f64>>,
}

fn iteration_cap(n: usize) -> usize {
    1000 * n.max(8)
}

/// Dense Hermitian eigendecomposition, sorted by descending eigenvalue.
pub fn eigh(a: &HermitianOperator) -> Result<Eigh> {
    let n = a.dimension();
    let (values, vectors) = match a.as_real() {
        Some(real) => {
            let eig = nalgebra::SymmetricEigen::try_new(real, f64::EPSILON, iteration_cap(n))
                .ok_or_else(|| Error::Numerical("symmetric eigen-solver did not converge".into()))?;
            (eig.eigenvalues, eig.eigenvectors.map(|x| Complex::new(x, 0.0)))
        }
        None => {
            let eig = nalgebra::SymmetricEigen::try_new(a.matrix.clone(), f64::EPSILON, iteration_cap(n))
                .ok_or_else(|| Error::Numerical("Hermitian eigen-solver did not converge".into()))?;
            (eig.eigenvalues, eig.eigenvectors)
        }
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| values[i]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &vectors.column(src));
    }
    Ok(Eigh {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues of a real symmetric matrix, descending.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    if n == 1 {
        return Ok(vec![a[(0, 0)]]);
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite matrix entry".into()));
    }
    // eigenvalues only; skips accumulating the eigenvector rotations
    let mut values: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|x, y| y.total_cmp(x));
    Ok(values)
}

/// `-Σ λ log₂ λ` over a spectrum, clipping `[-1e-10, 0)` to zero.
///
/// The spectrum is summed in descending order so that results are
/// reproducible for identical input.
pub fn spectrum_entropy(eigenvalues: &[f64]) -> Result<f64> {
    let mut sorted: Vec<f64> = eigenvalues.to_vec();
    sorted.sort_by(|x, y| y.total_cmp(x));
    let mut total = 0.0;
    for &lambda in &sorted {
        if lambda.is_nan() {
            return Err(Error::Numerical("NaN eigenvalue".into()));
        }
        if lambda < -NEGATIVE_EIGENVALUE_TOLERANCE {
            return Err(Error::Numerical(format!(
                "eigenvalue {lambda:e} below -{NEGATIVE_EIGENVALUE_TOLERANCE:e}; operator is not positive"
            )));
        }
        total += xlog2x_neg(lambda);
    }
    Ok(total)
}

/// Von Neumann entropy in bits of a positive (possibly subnormalized) operator.
pub fn von_neumann_entropy(a: &HermitianOperator) -> Result<f64> {
    match a.as_real() {
        Some(real) => von_neumann_entropy_real(&real),
        None => spectrum_entropy(eigh(a)?.eigenvalues.as_slice()),
    }
}

/// Von Neumann entropy of a real symmetric operator (no Hermiticity check).
pub fn von_neumann_entropy_real(a: &DMatrix<f64>) -> Result<f64> {
    spectrum_entropy(&symmetric_eigenvalues(a)?)
}

/// Kronecker product of real matrices.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}
