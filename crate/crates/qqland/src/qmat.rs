//! Dense complex linear-algebra kernels: Kronecker products, partial traces,
//! Hermitian eigendecomposition, and spectral propagators.
//!
//! Everything here is an immutable value and every operation is a pure
//! function, so the kernels can be shared freely across threads.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Max-abs deviation from m = m† accepted before an input is rejected as
/// non-Hermitian. Inputs inside the tolerance are symmetrized before use.
pub const HERMITICITY_TOL: f64 = 1e-9;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum QmatError {
    #[error("entry count {found} does not match {rows}x{cols}")]
    EntryCount {
        rows: usize,
        cols: usize,
        found: usize,
    },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("product dimension {a}x{b} overflows")]
    SizeOverflow { a: usize, b: usize },
    #[error("matrix dimension {found} does not equal {dim_a}x{dim_b}")]
    BadFactorization {
        found: usize,
        dim_a: usize,
        dim_b: usize,
    },
    #[error("matrix deviates from Hermitian by {deviation:.3e} (tolerance {tolerance:.1e})")]
    NotHermitian { deviation: f64, tolerance: f64 },
    #[error("eigensolver did not converge within {0} iterations")]
    NoConvergence(usize),
}

/// Dense row-major complex matrix, the universal numeric carrier.
///
/// Entries are guaranteed finite: constructors reject NaN and infinity, and
/// `set` asserts the same, so downstream numerics never have to re-check.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from a row-major entry list.
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self, QmatError> {
        if entries.len() != rows * cols {
            return Err(QmatError::EntryCount {
                rows,
                cols,
                found: entries.len(),
            });
        }
        for (k, z) in entries.iter().enumerate() {
            if !z.is_finite() {
                return Err(QmatError::NonFinite {
                    row: k.checked_div(cols).unwrap_or(0),
                    col: k.checked_rem(cols).unwrap_or(0),
                });
            }
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a square matrix with the given diagonal.
    pub fn from_diag(diag: &[Complex64]) -> Result<Self, QmatError> {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in diag.iter().enumerate() {
            if !z.is_finite() {
                return Err(QmatError::NonFinite { row: i, col: i });
            }
            m.entries[i * n + i] = z;
        }
        Ok(m)
    }

    /// Builds a matrix from real row-major entries.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self, QmatError> {
        Self::new(
            rows,
            cols,
            entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    /// Entry-wise constructor; the closure is called in row-major order.
    /// Finiteness is the caller's responsibility here, unlike [`Self::new`].
    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Complex64,
    ) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self {
            rows,
            cols,
            entries,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        assert!(value.is_finite(), "matrix entries must stay finite");
        self.entries[row * self.cols + col] = value;
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square(), "trace of a non-square matrix");
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            entries,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            entries,
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|z| z * s).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul dimension mismatch: {}x{} times {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.entries[i * self.cols + k];
                let brow = &other.entries[k * other.cols..(k + 1) * other.cols];
                let orow = &mut out.entries[i * other.cols..(i + 1) * other.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += aik * b;
                }
            }
        }
        out
    }

    /// Tr(self · other) without forming the product.
    pub fn trace_product(&self, other: &Self) -> Complex64 {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self.entries[i * self.cols + k] * other.entries[k * other.cols + i];
            }
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Max-abs deviation of m − m†; zero iff exactly Hermitian.
    pub fn hermiticity_deviation(&self) -> f64 {
        assert!(self.is_square(), "Hermiticity of a non-square matrix");
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    /// (m + m†)/2; exact Hermitian output.
    pub fn symmetrized(&self) -> Self {
        assert!(self.is_square());
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self.get(i, j) + self.get(j, i).conj()) * 0.5
        })
    }
}

/// Eigendecomposition of a Hermitian matrix: real eigenvalues sorted
/// ascending, matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

/// Selects which factor of a composite A⊗B index is traced out or kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Kronecker product with the left factor outermost: entry
/// ((i·b.rows + k), (j·b.cols + l)) = a(i,j)·b(k,l).
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, QmatError> {
    let rows = a
        .rows
        .checked_mul(b.rows)
        .ok_or(QmatError::SizeOverflow {
            a: a.rows,
            b: b.rows,
        })?;
    let cols = a
        .cols
        .checked_mul(b.cols)
        .ok_or(QmatError::SizeOverflow {
            a: a.cols,
            b: b.cols,
        })?;
    rows.checked_mul(cols).ok_or(QmatError::SizeOverflow {
        a: rows,
        b: cols,
    })?;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a.get(i, j);
            for k in 0..b.rows {
                let orow = (i * b.rows + k) * cols + j * b.cols;
                let brow = k * b.cols;
                for l in 0..b.cols {
                    out.entries[orow + l] = aij * b.entries[brow + l];
                }
            }
        }
    }
    Ok(out)
}

/// Partial trace of an operator on the composite space A⊗B.
///
/// `which = A` sums out A and returns the dimB×dimB block
/// (n, m) = Σ_a ⟨a,n|M|a,m⟩; `which = B` does the analogous reduction onto A.
pub fn partial_trace(
    m: &ComplexMatrix,
    dim_a: usize,
    dim_b: usize,
    which: Subsystem,
) -> Result<ComplexMatrix, QmatError> {
    if !m.is_square() {
        return Err(QmatError::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let dim = dim_a.checked_mul(dim_b).ok_or(QmatError::SizeOverflow {
        a: dim_a,
        b: dim_b,
    })?;
    if m.rows != dim {
        return Err(QmatError::BadFactorization {
            found: m.rows,
            dim_a,
            dim_b,
        });
    }
    let out = match which {
        Subsystem::A => ComplexMatrix::from_fn(dim_b, dim_b, |n, mm| {
            (0..dim_a).map(|a| m.get(a * dim_b + n, a * dim_b + mm)).sum()
        }),
        Subsystem::B => ComplexMatrix::from_fn(dim_a, dim_a, |a, b| {
            (0..dim_b).map(|n| m.get(a * dim_b + n, b * dim_b + n)).sum()
        }),
    };
    Ok(out)
}

/// Hermitian eigendecomposition.
///
/// Rejects inputs whose deviation from m = m† exceeds [`HERMITICITY_TOL`];
/// anything inside the tolerance is symmetrized first, which absorbs the
/// accumulation error of Kronecker assembly.
pub fn eigh(m: &ComplexMatrix) -> Result<HermitianEig, QmatError> {
    if !m.is_square() {
        return Err(QmatError::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let deviation = m.hermiticity_deviation();
    if deviation > HERMITICITY_TOL {
        return Err(QmatError::NotHermitian {
            deviation,
            tolerance: HERMITICITY_TOL,
        });
    }
    let n = m.rows;
    if n == 0 {
        return Ok(HermitianEig {
            eigenvalues: Vec::new(),
            eigenvectors: ComplexMatrix::zeros(0, 0),
        });
    }
    let sym = m.symmetrized();
    let na = nalgebra::DMatrix::from_fn(n, n, |i, j| sym.get(i, j));
    let max_iters = 400 * n * n + 1_000;
    let eig = nalgebra::SymmetricEigen::try_new(na, f64::EPSILON, max_iters)
        .ok_or(QmatError::NoConvergence(max_iters))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors =
        ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors,
    })
}

/// Unitary propagator U = exp(−i·h·t/ħ) of a constant Hermitian generator,
/// computed spectrally as V·exp(−iΛt/ħ)·V†. Exact unitarity up to eigensolver
/// accuracy; negative t propagates backwards.
pub fn propagator(h: &ComplexMatrix, t: f64, hbar: f64) -> Result<ComplexMatrix, QmatError> {
    let eig = eigh(h)?;
    Ok(propagator_from_eig(&eig, t, hbar))
}

/// Propagator from an already-computed eigendecomposition, so one
/// decomposition serves many durations.
pub fn propagator_from_eig(eig: &HermitianEig, t: f64, hbar: f64) -> ComplexMatrix {
    assert!(t.is_finite(), "propagation time must be finite");
    assert!(
        hbar.is_finite() && hbar != 0.0,
        "hbar must be finite and nonzero"
    );
    let n = eig.eigenvalues.len();
    let v = &eig.eigenvectors;
    let phases: Vec<Complex64> = eig
        .eigenvalues
        .iter()
        .map(|&lambda| (Complex64::new(0.0, -lambda * t / hbar)).exp())
        .collect();
    // U[i][j] = Σ_k V[i][k]·e^{−iλ_k t/ħ}·conj(V[j][k])
    let mut out = ComplexMatrix::zeros(n, n);
    for (k, &phase) in phases.iter().enumerate() {
        for i in 0..n {
            let left = v.get(i, k) * phase;
            let orow = &mut out.entries[i * n..(i + 1) * n];
            for (j, o) in orow.iter_mut().enumerate() {
                *o += left * v.get(j, k).conj();
            }
        }
    }
    out
}

/// Matrix of independent standard complex normal entries from a seeded
/// generator; the raw material for Hilbert–Schmidt state sampling.
pub(crate) fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Seeded random Hermitian matrix (symmetrized complex Ginibre), deterministic
/// for a fixed seed. Test and verification input generator.
pub fn random_hermitian(dim: usize, seed: u64) -> ComplexMatrix {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    ginibre(dim, dim, &mut rng).symmetrized()
}
