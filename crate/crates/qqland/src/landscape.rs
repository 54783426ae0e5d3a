//! The control landscape core: composite Hamiltonians, the objective
//! J = Tr[U(ρ_A⊗ρ_B)U†(O_A⊗I_B)], the effective controller observable
//! O_B = Tr_A[U†(O_A⊗I_B)U(ρ_A⊗I_B)], and the exact optimum set.
//!
//! Because J is linear in ρ_B, J = Tr(ρ_B·O_B) and the global extrema are the
//! extreme eigenvalues of O_B; every optimizer is a mixture over the matching
//! eigenspace. Composite indices are A-major throughout: (a, n) ↦ a·dimB + n.

use std::sync::OnceLock;

use num_complex::Complex64;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qmat::{
    self, eigh, kron, partial_trace, propagator_from_eig, ComplexMatrix, HermitianEig, QmatError,
    Subsystem,
};

/// Max-abs tolerance for the Hermiticity, trace, and positivity checks on
/// validated states and observables.
pub const VALIDATION_TOL: f64 = 1e-9;

/// Reject a computed landscape observable whose deviation from Hermiticity
/// exceeds this; smaller asymmetry is symmetrized away and recorded.
pub const ASYMMETRY_TOL: f64 = 1e-8;

/// Reject objective values whose imaginary residue exceeds this; a residue
/// that large means a non-Hermitian input slipped through validation.
pub const IMAGINARY_TOL: f64 = 1e-8;

/// Default relative tolerance for grouping near-degenerate eigenvalues into
/// one optimal eigenspace.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Error, Debug)]
pub enum LandscapeError {
    #[error(transparent)]
    Kernel(#[from] QmatError),
    #[error("{block} is {rows}x{cols}, expected {expected}x{expected}")]
    BlockShape {
        block: String,
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("{block} deviates from Hermitian by {deviation:.3e} (tolerance 1e-9)")]
    BlockNotHermitian { block: String, deviation: f64 },
    #[error("state deviates from Hermitian by {deviation:.3e} (tolerance 1e-9)")]
    NotHermitian { deviation: f64 },
    #[error("state trace {trace} is not 1 within 1e-9")]
    TraceNotOne { trace: Complex64 },
    #[error("state eigenvalue {min_eigenvalue:.3e} is below -1e-9")]
    NotPositive { min_eigenvalue: f64 },
    #[error("composite dimension {dim_a}x{dim_b} overflows")]
    DimensionOverflow { dim_a: usize, dim_b: usize },
    #[error("{what} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        found: usize,
        expected: usize,
    },
    #[error("objective imaginary residue {residue:.3e} exceeds 1e-8")]
    ImaginaryResidue { residue: f64 },
    #[error("landscape observable asymmetry {asymmetry:.3e} exceeds 1e-8")]
    ExcessAsymmetry { asymmetry: f64 },
    #[error("mixing weights sum to {sum}, expected 1 within 1e-12")]
    WeightSum { sum: f64 },
    #[error("negative mixing weight {weight} at index {index}")]
    NegativeWeight { index: usize, weight: f64 },
    #[error("cannot mix an empty list of states")]
    EmptyMix,
    #[error("list lengths differ: {states} states, {weights} weights")]
    MixLengths { states: usize, weights: usize },
    #[error("duration must be finite")]
    NonFiniteDuration,
    #[error("state vector has zero norm")]
    ZeroVector,
}

/// Optimization direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Maximize,
    Minimize,
}

/// Validated quantum state: Hermitian, positive semidefinite, unit trace
/// (each within 1e-9). Stored symmetrized.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self, LandscapeError> {
        if !matrix.is_square() {
            return Err(QmatError::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            }
            .into());
        }
        let deviation = matrix.hermiticity_deviation();
        if deviation > VALIDATION_TOL {
            return Err(LandscapeError::NotHermitian { deviation });
        }
        let trace = matrix.trace();
        if (trace - Complex64::new(1.0, 0.0)).norm() > VALIDATION_TOL {
            return Err(LandscapeError::TraceNotOne { trace });
        }
        let sym = matrix.symmetrized();
        let eig = eigh(&sym)?;
        let min_eigenvalue = eig.eigenvalues.first().copied().unwrap_or(0.0);
        if min_eigenvalue < -VALIDATION_TOL {
            return Err(LandscapeError::NotPositive { min_eigenvalue });
        }
        Ok(Self { matrix: sym })
    }

    /// Pure state |ψ⟩⟨ψ| from amplitudes, normalized here.
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self, LandscapeError> {
        let norm_sqr: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if norm_sqr <= 0.0 || !norm_sqr.is_finite() {
            return Err(LandscapeError::ZeroVector);
        }
        let scale = norm_sqr.recip();
        let dim = amplitudes.len();
        let matrix = ComplexMatrix::from_fn(dim, dim, |i, j| {
            amplitudes[i] * amplitudes[j].conj() * scale
        });
        Self::new(matrix)
    }

    /// The computational basis state |k⟩⟨k|.
    pub fn basis_state(dim: usize, k: usize) -> Self {
        assert!(k < dim, "basis index {k} out of range for dimension {dim}");
        let mut m = ComplexMatrix::zeros(dim, dim);
        m.set(k, k, Complex64::new(1.0, 0.0));
        Self { matrix: m }
    }

    /// I/dim.
    pub fn maximally_mixed(dim: usize) -> Self {
        assert!(dim >= 1);
        Self {
            matrix: ComplexMatrix::identity(dim).scale(Complex64::new(1.0 / dim as f64, 0.0)),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

/// Validated Hermitian observable. Stored symmetrized.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    matrix: ComplexMatrix,
}

impl Observable {
    pub fn new(matrix: ComplexMatrix) -> Result<Self, LandscapeError> {
        if !matrix.is_square() {
            return Err(QmatError::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            }
            .into());
        }
        let deviation = matrix.hermiticity_deviation();
        if deviation > VALIDATION_TOL {
            return Err(LandscapeError::NotHermitian { deviation });
        }
        Ok(Self {
            matrix: matrix.symmetrized(),
        })
    }

    /// The projector |k⟩⟨k| as an observable (e.g. excited-state population).
    pub fn basis_projector(dim: usize, k: usize) -> Self {
        assert!(k < dim, "basis index {k} out of range for dimension {dim}");
        let mut m = ComplexMatrix::zeros(dim, dim);
        m.set(k, k, Complex64::new(1.0, 0.0));
        Self { matrix: m }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

/// Composite Hamiltonian H = H_A⁰⊗I_B + I_A⊗H_B⁰ + Σ_k H_A^k⊗H_B^k.
///
/// Blocks are validated Hermitian (within 1e-9) and stored symmetrized, which
/// makes the assembled matrix Hermitian to the last bit. The assembled
/// eigendecomposition is computed once on demand and cached, so duration
/// sweeps pay one decomposition and many diagonal-phase propagators.
#[derive(Debug, Clone)]
pub struct BipartiteHamiltonian {
    dim_a: usize,
    dim_b: usize,
    h_a0: ComplexMatrix,
    h_b0: ComplexMatrix,
    couplings: Vec<(ComplexMatrix, ComplexMatrix)>,
    eig: OnceLock<HermitianEig>,
}

fn check_block(
    block: &ComplexMatrix,
    name: impl Into<String>,
    expected: usize,
) -> Result<ComplexMatrix, LandscapeError> {
    if !block.is_square() || block.rows() != expected {
        return Err(LandscapeError::BlockShape {
            block: name.into(),
            rows: block.rows(),
            cols: block.cols(),
            expected,
        });
    }
    let deviation = block.hermiticity_deviation();
    if deviation > VALIDATION_TOL {
        return Err(LandscapeError::BlockNotHermitian {
            block: name.into(),
            deviation,
        });
    }
    Ok(block.symmetrized())
}

impl BipartiteHamiltonian {
    /// Dimensions are read off the uncoupled blocks; every coupling pair must
    /// match them.
    pub fn new(
        h_a0: ComplexMatrix,
        h_b0: ComplexMatrix,
        couplings: Vec<(ComplexMatrix, ComplexMatrix)>,
    ) -> Result<Self, LandscapeError> {
        let dim_a = h_a0.rows();
        let dim_b = h_b0.rows();
        if dim_a == 0 || dim_b == 0 {
            return Err(LandscapeError::BlockShape {
                block: (if dim_a == 0 { "hA0" } else { "hB0" }).into(),
                rows: 0,
                cols: 0,
                expected: 1,
            });
        }
        let dim = dim_a
            .checked_mul(dim_b)
            .and_then(|d| d.checked_mul(d))
            .ok_or(LandscapeError::DimensionOverflow { dim_a, dim_b })?;
        let _ = dim;
        let h_a0 = check_block(&h_a0, "hA0", dim_a)?;
        let h_b0 = check_block(&h_b0, "hB0", dim_b)?;
        let couplings = couplings
            .iter()
            .enumerate()
            .map(|(k, (a, b))| {
                Ok((
                    check_block(a, format!("couplings[{k}].hA"), dim_a)?,
                    check_block(b, format!("couplings[{k}].hB"), dim_b)?,
                ))
            })
            .collect::<Result<Vec<_>, LandscapeError>>()?;
        Ok(Self {
            dim_a,
            dim_b,
            h_a0,
            h_b0,
            couplings,
            eig: OnceLock::new(),
        })
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    /// Composite dimension dimA·dimB.
    pub fn dim(&self) -> usize {
        self.dim_a * self.dim_b
    }

    pub fn h_a0(&self) -> &ComplexMatrix {
        &self.h_a0
    }

    pub fn h_b0(&self) -> &ComplexMatrix {
        &self.h_b0
    }

    pub fn couplings(&self) -> &[(ComplexMatrix, ComplexMatrix)] {
        &self.couplings
    }

    /// The full composite matrix, A factor outermost.
    pub fn assemble(&self) -> ComplexMatrix {
        let eye_a = ComplexMatrix::identity(self.dim_a);
        let eye_b = ComplexMatrix::identity(self.dim_b);
        let mut h = kron(&self.h_a0, &eye_b)
            .expect("dimensions pre-checked")
            .add(&kron(&eye_a, &self.h_b0).expect("dimensions pre-checked"));
        for (ha, hb) in &self.couplings {
            h = h.add(&kron(ha, hb).expect("dimensions pre-checked"));
        }
        h
    }

    /// Cached eigendecomposition of the assembled matrix. A race may compute
    /// it twice; both computations agree and one is dropped.
    pub fn eig(&self) -> Result<&HermitianEig, LandscapeError> {
        if self.eig.get().is_none() {
            let eig = eigh(&self.assemble())?;
            let _ = self.eig.set(eig);
        }
        Ok(self.eig.get().expect("cache populated above"))
    }

    /// U(t) = exp(−iHt), ħ = 1 convention.
    pub fn propagator(&self, t: f64) -> Result<ComplexMatrix, LandscapeError> {
        if !t.is_finite() {
            return Err(LandscapeError::NonFiniteDuration);
        }
        Ok(propagator_from_eig(self.eig()?, t, 1.0))
    }
}

/// What a landscape observable was computed from, plus the asymmetry that was
/// symmetrized away.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub rho_a: DensityMatrix,
    pub o_a: Observable,
    pub hamiltonian: ComplexMatrix,
    pub asymmetry: f64,
}

/// O_B with its eigendecomposition: the whole landscape in one operator,
/// since J(ρ_B) = Tr(ρ_B·O_B).
#[derive(Debug, Clone)]
pub struct LandscapeObservable {
    matrix: ComplexMatrix,
    eig: HermitianEig,
    duration: f64,
    provenance: Provenance,
}

impl LandscapeObservable {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn eig(&self) -> &HermitianEig {
        &self.eig
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }
}

/// The exact optimum of the landscape in the chosen direction.
#[derive(Debug, Clone)]
pub struct OptimalSolution {
    /// The optimal objective value, an extreme eigenvalue of O_B.
    pub objective: f64,
    /// Columns spanning the (near-)degenerate optimal eigenspace.
    pub eigenspace: ComplexMatrix,
    /// The first eigenspace column as a pure state.
    pub representative: DensityMatrix,
    pub degeneracy: usize,
    pub sense: Sense,
}

fn check_dims(
    h: &BipartiteHamiltonian,
    rho_a: &DensityMatrix,
    o_a: &Observable,
) -> Result<(), LandscapeError> {
    if rho_a.dim() != h.dim_a() {
        return Err(LandscapeError::DimensionMismatch {
            what: "rhoA",
            found: rho_a.dim(),
            expected: h.dim_a(),
        });
    }
    if o_a.dim() != h.dim_a() {
        return Err(LandscapeError::DimensionMismatch {
            what: "oA",
            found: o_a.dim(),
            expected: h.dim_a(),
        });
    }
    Ok(())
}

/// J = Tr[U(ρ_A⊗ρ_B)U†(O_A⊗I_B)], evaluated as Tr(Tr_B[UρU†]·O_A).
///
/// The imaginary residue of the trace is checked (≤ 1e-8) and discarded.
pub fn evaluate_jq(
    h: &BipartiteHamiltonian,
    rho_a: &DensityMatrix,
    rho_b: &DensityMatrix,
    o_a: &Observable,
    t: f64,
) -> Result<f64, LandscapeError> {
    check_dims(h, rho_a, o_a)?;
    if rho_b.dim() != h.dim_b() {
        return Err(LandscapeError::DimensionMismatch {
            what: "rhoB",
            found: rho_b.dim(),
            expected: h.dim_b(),
        });
    }
    let u = h.propagator(t)?;
    let joint = kron(rho_a.matrix(), rho_b.matrix()).expect("dimensions pre-checked");
    let evolved = u.matmul(&joint).matmul(&u.adjoint());
    let reduced = partial_trace(&evolved, h.dim_a(), h.dim_b(), Subsystem::B)?;
    let j = reduced.trace_product(o_a.matrix());
    if j.im.abs() > IMAGINARY_TOL {
        return Err(LandscapeError::ImaginaryResidue { residue: j.im });
    }
    Ok(j.re)
}

/// Heisenberg picture of the lifted observable: U†(O_A⊗I_B)U. Shared by the
/// landscape-observable construction and the entangled solver's gradient.
pub(crate) fn heisenberg_observable(
    h: &BipartiteHamiltonian,
    o_a: &Observable,
    t: f64,
) -> Result<ComplexMatrix, LandscapeError> {
    let u = h.propagator(t)?;
    let lifted = kron(o_a.matrix(), &ComplexMatrix::identity(h.dim_b()))
        .expect("dimensions pre-checked");
    Ok(u.adjoint().matmul(&lifted).matmul(&u))
}

/// O_B = Tr_A[U†(O_A⊗I_B)U(ρ_A⊗I_B)], symmetrized, with eigendecomposition.
///
/// The raw partial trace is Hermitian up to floating-point accumulation; its
/// asymmetry is recorded in the provenance and rejected above 1e-8.
pub fn landscape_observable(
    h: &BipartiteHamiltonian,
    rho_a: &DensityMatrix,
    o_a: &Observable,
    t: f64,
) -> Result<LandscapeObservable, LandscapeError> {
    check_dims(h, rho_a, o_a)?;
    let g = heisenberg_observable(h, o_a, t)?;
    let lifted_rho = kron(rho_a.matrix(), &ComplexMatrix::identity(h.dim_b()))
        .expect("dimensions pre-checked");
    let raw = partial_trace(&g.matmul(&lifted_rho), h.dim_a(), h.dim_b(), Subsystem::A)?;
    let asymmetry = raw.hermiticity_deviation();
    if asymmetry > ASYMMETRY_TOL {
        return Err(LandscapeError::ExcessAsymmetry { asymmetry });
    }
    let matrix = raw.symmetrized();
    let eig = eigh(&matrix)?;
    Ok(LandscapeObservable {
        matrix,
        eig,
        duration: t,
        provenance: Provenance {
            rho_a: rho_a.clone(),
            o_a: o_a.clone(),
            hamiltonian: h.assemble(),
            asymmetry,
        },
    })
}

/// (min, max) attainable objective: the extreme eigenvalues of O_B.
pub fn jq_bounds(ob: &LandscapeObservable) -> (f64, f64) {
    let evals = &ob.eig().eigenvalues;
    (
        evals.first().copied().unwrap_or(0.0),
        evals.last().copied().unwrap_or(0.0),
    )
}

/// The exact global optimum and its full eigenspace.
///
/// Eigenvalues within `degeneracy_tol·max(1, |λ*|)` of the extreme one count
/// as degenerate; every mixture over the returned eigenspace attains the
/// objective.
pub fn optimal_state(
    ob: &LandscapeObservable,
    sense: Sense,
    degeneracy_tol: f64,
) -> OptimalSolution {
    assert!(
        degeneracy_tol > 0.0,
        "degeneracy tolerance must be positive"
    );
    let evals = &ob.eig().eigenvalues;
    let n = evals.len();
    assert!(n > 0, "empty landscape observable");
    let objective = match sense {
        Sense::Maximize => evals[n - 1],
        Sense::Minimize => evals[0],
    };
    let threshold = degeneracy_tol * objective.abs().max(1.0);
    let selected: Vec<usize> = (0..n)
        .filter(|&i| (evals[i] - objective).abs() <= threshold)
        .collect();
    let degeneracy = selected.len();
    let v = &ob.eig().eigenvectors;
    let eigenspace = ComplexMatrix::from_fn(n, degeneracy, |i, j| v.get(i, selected[j]));
    let first = selected[0];
    let norm = (0..n)
        .map(|i| v.get(i, first).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let column: Vec<Complex64> = (0..n).map(|i| v.get(i, first) / norm).collect();
    let representative = DensityMatrix::new(ComplexMatrix::from_fn(n, n, |i, j| {
        column[i] * column[j].conj()
    }))
    .expect("unit eigenvector yields a valid pure state");
    OptimalSolution {
        objective,
        eigenspace,
        representative,
        degeneracy,
        sense,
    }
}

/// Convex combination Σ_k w_k ρ_k, revalidated.
pub fn mix_states(
    states: &[DensityMatrix],
    weights: &[f64],
) -> Result<DensityMatrix, LandscapeError> {
    if states.is_empty() {
        return Err(LandscapeError::EmptyMix);
    }
    if states.len() != weights.len() {
        return Err(LandscapeError::MixLengths {
            states: states.len(),
            weights: weights.len(),
        });
    }
    for (index, &weight) in weights.iter().enumerate() {
        if weight.is_nan() || weight < 0.0 {
            return Err(LandscapeError::NegativeWeight { index, weight });
        }
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(LandscapeError::WeightSum { sum });
    }
    let dim = states[0].dim();
    for s in states {
        if s.dim() != dim {
            return Err(LandscapeError::DimensionMismatch {
                what: "mixed state",
                found: s.dim(),
                expected: dim,
            });
        }
    }
    let mut acc = ComplexMatrix::zeros(dim, dim);
    for (s, &w) in states.iter().zip(weights) {
        acc = acc.add(&s.matrix().scale(Complex64::new(w, 0.0)));
    }
    DensityMatrix::new(acc)
}

/// Hilbert–Schmidt random state G·G†/Tr(G·G†) with G complex Ginibre,
/// bit-reproducible for a fixed seed.
pub fn random_density(dim: usize, seed: u64) -> DensityMatrix {
    assert!(dim >= 1, "dimension must be at least 1");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let g = qmat::ginibre(dim, dim, &mut rng);
    let gram = g.matmul(&g.adjoint());
    let trace = gram.trace().re;
    let rho = gram.scale(Complex64::new(trace.recip(), 0.0));
    DensityMatrix::new(rho).expect("normalized Gram matrix is a valid state")
}
