//! The joint-input variant: optimize J(ρ) = Tr[UρU†(O_A⊗I_B)] over all
//! composite states whose A marginal is pinned, {ρ ⪰ 0, Tr_B ρ = ρ_A}.
//!
//! J is still linear in ρ and the feasible set is convex and compact, so
//! projected gradient ascent with an exact projection converges to the global
//! optimum; every accepted iterate improves the objective. The projection
//! onto the feasible set is computed by Dykstra's alternating method between
//! the marginal-matching affine subspace and the positive cone. A slower
//! dual-ascent projection with a built-in optimality certificate is kept as
//! an independent cross-check.

use num_complex::Complex64;
use thiserror::Error;

use crate::landscape::{
    heisenberg_observable, BipartiteHamiltonian, DensityMatrix, LandscapeError, Observable, Sense,
};
use crate::qmat::{eigh, kron, partial_trace, ComplexMatrix, QmatError, Subsystem};

/// Dykstra tolerance used inside the gradient loop. Tight enough that the
/// inexactness of each projection stays below the 1e-12 monotonicity budget.
pub const INNER_PROJECTION_TOL: f64 = 1e-12;

/// Cycle cap for the inner projections.
pub const INNER_PROJECTION_CYCLES: usize = 100_000;

#[derive(Error, Debug)]
pub enum SolverError {
    #[error(transparent)]
    Kernel(#[from] QmatError),
    #[error(transparent)]
    Landscape(#[from] LandscapeError),
    #[error(
        "projection stalled after {cycles} cycles: marginal residual {marginal_residual:.3e}, last change {change:.3e}"
    )]
    ProjectionStalled {
        cycles: usize,
        marginal_residual: f64,
        change: f64,
    },
    #[error(
        "dual ascent stalled after {iterations} iterations: marginal residual {marginal_residual:.3e}"
    )]
    DualStalled {
        iterations: usize,
        marginal_residual: f64,
    },
    #[error("step size must be positive and finite, got {step}")]
    BadStep { step: f64 },
}

/// A landscape problem whose input is a joint state with pinned A marginal.
#[derive(Debug, Clone)]
pub struct EntangledProblem {
    hamiltonian: BipartiteHamiltonian,
    rho_a: DensityMatrix,
    o_a: Observable,
    duration: f64,
    sense: Sense,
}

impl EntangledProblem {
    pub fn new(
        hamiltonian: BipartiteHamiltonian,
        rho_a: DensityMatrix,
        o_a: Observable,
        duration: f64,
        sense: Sense,
    ) -> Result<Self, LandscapeError> {
        if rho_a.dim() != hamiltonian.dim_a() {
            return Err(LandscapeError::DimensionMismatch {
                what: "rhoA",
                found: rho_a.dim(),
                expected: hamiltonian.dim_a(),
            });
        }
        if o_a.dim() != hamiltonian.dim_a() {
            return Err(LandscapeError::DimensionMismatch {
                what: "oA",
                found: o_a.dim(),
                expected: hamiltonian.dim_a(),
            });
        }
        if !duration.is_finite() {
            return Err(LandscapeError::NonFiniteDuration);
        }
        Ok(Self {
            hamiltonian,
            rho_a,
            o_a,
            duration,
            sense,
        })
    }

    pub fn hamiltonian(&self) -> &BipartiteHamiltonian {
        &self.hamiltonian
    }

    pub fn rho_a(&self) -> &DensityMatrix {
        &self.rho_a
    }

    pub fn o_a(&self) -> &Observable {
        &self.o_a
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }
}

/// What the solver found. `objective_history` holds the initial value and
/// one entry per iteration; it is monotone within 1e-12 per step.
#[derive(Debug, Clone)]
pub struct SolverReport {
    pub objective: f64,
    pub state: DensityMatrix,
    pub iterations: usize,
    /// Frobenius norm of Tr_B(ρ) − ρ_A at the final iterate.
    pub constraint_residual: f64,
    pub objective_history: Vec<f64>,
    pub converged: bool,
}

/// The (constant) gradient of J: the Heisenberg-picture lifted observable
/// U†(O_A⊗I_B)U, so J(ρ) = Tr(ρ·G).
pub fn gradient_operator(problem: &EntangledProblem) -> Result<ComplexMatrix, SolverError> {
    Ok(heisenberg_observable(
        problem.hamiltonian(),
        problem.o_a(),
        problem.duration(),
    )?)
}

fn marginal_gap(
    m: &ComplexMatrix,
    target: &ComplexMatrix,
    dim_b: usize,
) -> Result<f64, SolverError> {
    let marginal = partial_trace(m, target.rows(), dim_b, Subsystem::B)?;
    Ok(marginal.max_abs_diff(target))
}

fn project_marginal_raw(
    m: &ComplexMatrix,
    target: &ComplexMatrix,
    dim_b: usize,
) -> Result<ComplexMatrix, SolverError> {
    let marginal = partial_trace(m, target.rows(), dim_b, Subsystem::B)?;
    let deficit = target
        .sub(&marginal)
        .scale(Complex64::new((dim_b as f64).recip(), 0.0));
    let shift = kron(&deficit, &ComplexMatrix::identity(dim_b))?;
    Ok(m.add(&shift))
}

/// Frobenius-orthogonal projection onto {X : Tr_B X = ρ_A}: shift by the
/// marginal deficit spread evenly over B, m + ((ρ_A − Tr_B m)/dimB)⊗I_B.
pub fn project_marginal(
    m: &ComplexMatrix,
    rho_a: &DensityMatrix,
    dim_b: usize,
) -> Result<ComplexMatrix, SolverError> {
    project_marginal_raw(m, rho_a.matrix(), dim_b)
}

/// Eigenvalues of ρ_A at or below this count as kernel directions when the
/// projections compress onto the marginal's support.
const SUPPORT_RANK_TOL: f64 = 1e-12;

/// How a pinned marginal shapes the feasible set {X ⪰ 0, Tr_B X = ρ_A}.
///
/// Positivity forces ker(ρ_A)⊗C^dimB into ker(X), so when ρ_A is singular
/// the whole feasible set lives in the support subspace and the projection
/// factors exactly through it: P(m) = V·P'(V†mV)·V† with V the support
/// isometry. Working in the compressed space also restores a strictly
/// feasible point, which keeps Dykstra's rate linear and the projection dual
/// attained; at the boundary both degrade badly.
struct MarginalGeometry {
    /// Support isometry W⊗I_B, absent when ρ_A has full rank.
    isometry: Option<ComplexMatrix>,
    /// ρ_A compressed onto its support (or the original matrix).
    target: ComplexMatrix,
}

fn support_geometry(
    rho_a: &DensityMatrix,
    dim_b: usize,
) -> Result<MarginalGeometry, SolverError> {
    let dim_a = rho_a.dim();
    let eig = eigh(rho_a.matrix())?;
    let support: Vec<usize> = (0..dim_a)
        .filter(|&k| eig.eigenvalues[k] > SUPPORT_RANK_TOL)
        .collect();
    if support.len() == dim_a {
        return Ok(MarginalGeometry {
            isometry: None,
            target: rho_a.matrix().clone(),
        });
    }
    let w = ComplexMatrix::from_fn(dim_a, support.len(), |i, j| {
        eig.eigenvectors.get(i, support[j])
    });
    let isometry = kron(&w, &ComplexMatrix::identity(dim_b))?;
    let lambdas: Vec<Complex64> = support
        .iter()
        .map(|&k| Complex64::new(eig.eigenvalues[k], 0.0))
        .collect();
    let target = ComplexMatrix::from_diag(&lambdas)?;
    Ok(MarginalGeometry {
        isometry: Some(isometry),
        target,
    })
}

fn check_joint_dims(
    m: &ComplexMatrix,
    dim_a: usize,
    dim_b: usize,
) -> Result<(), SolverError> {
    let dim = dim_a
        .checked_mul(dim_b)
        .ok_or(QmatError::SizeOverflow { a: dim_a, b: dim_b })?;
    if !m.is_square() || m.rows() != dim {
        return Err(QmatError::BadFactorization {
            found: m.rows(),
            dim_a,
            dim_b,
        }
        .into());
    }
    Ok(())
}

/// Frobenius-orthogonal projection onto the positive cone: clip negative
/// eigenvalues to zero. The reconstruction accumulates one eigenvector dyad
/// at a time in a fixed order, which keeps it Hermitian to the last bit.
pub fn project_psd(m: &ComplexMatrix) -> Result<ComplexMatrix, SolverError> {
    let eig = eigh(m)?;
    let n = m.rows();
    let kept: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] > 0.0).collect();
    let v = &eig.eigenvectors;
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        // Form the dyad before scaling: v_i·conj(v_j) commutes bitwise with
        // its (j, i) twin, so the output is Hermitian to the last bit.
        kept.iter()
            .map(|&k| eig.eigenvalues[k] * (v.get(i, k) * v.get(j, k).conj()))
            .sum()
    }))
}

/// Dykstra's alternating projection onto the feasible set, the intersection
/// of the marginal-matching subspace with the positive cone.
///
/// Each cycle projects onto the affine set and then the cone, carrying the
/// usual correction terms so the limit is the Frobenius projection rather
/// than just some feasible point. Returns the cone-side iterate, which is
/// positive by construction and marginal-feasible within `tol`. Errors with
/// the residuals if `max_cycles` pass without settling.
pub fn dykstra_project(
    m: &ComplexMatrix,
    rho_a: &DensityMatrix,
    dim_b: usize,
    max_cycles: usize,
    tol: f64,
) -> Result<ComplexMatrix, SolverError> {
    assert!(tol > 0.0, "projection tolerance must be positive");
    check_joint_dims(m, rho_a.dim(), dim_b)?;
    let geometry = support_geometry(rho_a, dim_b)?;
    match &geometry.isometry {
        None => dykstra_core(m, &geometry.target, dim_b, max_cycles, tol),
        Some(v) => {
            let compressed = v.adjoint().matmul(m).matmul(v);
            let projected = dykstra_core(&compressed, &geometry.target, dim_b, max_cycles, tol)?;
            Ok(v.matmul(&projected).matmul(&v.adjoint()))
        }
    }
}

fn dykstra_core(
    m: &ComplexMatrix,
    target: &ComplexMatrix,
    dim_b: usize,
    max_cycles: usize,
    tol: f64,
) -> Result<ComplexMatrix, SolverError> {
    let dim = m.rows();
    let mut x = m.clone();
    let mut p = ComplexMatrix::zeros(dim, dim);
    let mut q = ComplexMatrix::zeros(dim, dim);
    let mut prev: Option<ComplexMatrix> = None;
    let mut change = f64::INFINITY;
    let mut marginal_residual = f64::INFINITY;
    for _cycle in 0..max_cycles {
        let y = project_marginal_raw(&x.add(&p), target, dim_b)?;
        p = x.add(&p).sub(&y);
        let z = project_psd(&y.add(&q))?;
        q = y.add(&q).sub(&z);
        marginal_residual = marginal_gap(&z, target, dim_b)?;
        change = match &prev {
            Some(last) => z.max_abs_diff(last),
            None => f64::INFINITY,
        };
        if change <= tol && marginal_residual <= tol {
            return Ok(z);
        }
        prev = Some(z.clone());
        x = z;
    }
    Err(SolverError::ProjectionStalled {
        cycles: max_cycles,
        marginal_residual,
        change,
    })
}

/// Reference projection onto the feasible set by accelerated ascent on the
/// dual of the projection QP.
///
/// For the multiplier Y of the marginal constraint, the inner minimizer is
/// X(Y) = Π₊(C + Y⊗I_B) and the dual gradient is ρ_A − Tr_B X(Y), with
/// Lipschitz constant dimB. The returned X(Y) is positive with exact
/// complementary slackness by construction, so once its marginal gap drops
/// below `tol` the full optimality system is certified and X(Y) is the
/// Frobenius projection. A singular ρ_A is first compressed onto its
/// support, which restores the strictly feasible point that dual attainment
/// needs.
///
/// Deliberately independent of [`dykstra_project`] so the two can check each
/// other.
pub fn reference_intersection_projection(
    c: &ComplexMatrix,
    rho_a: &DensityMatrix,
    dim_b: usize,
    tol: f64,
    max_iters: usize,
) -> Result<ComplexMatrix, SolverError> {
    assert!(tol > 0.0, "projection tolerance must be positive");
    check_joint_dims(c, rho_a.dim(), dim_b)?;
    let geometry = support_geometry(rho_a, dim_b)?;
    match &geometry.isometry {
        None => reference_core(c, &geometry.target, dim_b, tol, max_iters),
        Some(v) => {
            let compressed = v.adjoint().matmul(c).matmul(v);
            let projected = reference_core(&compressed, &geometry.target, dim_b, tol, max_iters)?;
            Ok(v.matmul(&projected).matmul(&v.adjoint()))
        }
    }
}

fn reference_core(
    c: &ComplexMatrix,
    target: &ComplexMatrix,
    dim_b: usize,
    tol: f64,
    max_iters: usize,
) -> Result<ComplexMatrix, SolverError> {
    let dim_a = target.rows();
    let eye_b = ComplexMatrix::identity(dim_b);
    let alpha = Complex64::new((dim_b as f64).recip(), 0.0);
    let mut y = ComplexMatrix::zeros(dim_a, dim_a);
    let mut t = 1.0f64;
    let mut w = y.clone();
    let mut marginal_residual = f64::INFINITY;
    for _ in 0..max_iters {
        let x = project_psd(&c.add(&kron(&w, &eye_b)?))?;
        let grad = target.sub(&partial_trace(&x, dim_a, dim_b, Subsystem::B)?);
        marginal_residual = grad.max_abs();
        if marginal_residual <= tol {
            return Ok(x);
        }
        let y_next = w.add(&grad.scale(alpha));
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = Complex64::new((t - 1.0) / t_next, 0.0);
        w = y_next.add(&y_next.sub(&y).scale(momentum));
        y = y_next;
        t = t_next;
    }
    Err(SolverError::DualStalled {
        iterations: max_iters,
        marginal_residual,
    })
}

/// Projected gradient ascent (or descent) from ρ_A⊗I_B/dimB.
///
/// The objective is linear, so each exactly-projected step cannot decrease
/// it regardless of step size; `step` defaults to the reciprocal spectral
/// radius of the gradient, which keeps candidate states at the scale of the
/// feasible set. Stops once an iterate moves less than `tol` in max-abs
/// norm. Exhausting `max_iters` yields a report with `converged = false`,
/// not an error.
pub fn optimize_entangled(
    problem: &EntangledProblem,
    step: Option<f64>,
    max_iters: usize,
    tol: f64,
) -> Result<SolverReport, SolverError> {
    assert!(tol > 0.0, "solver tolerance must be positive");
    let g = gradient_operator(problem)?;
    let dim_b = problem.hamiltonian().dim_b();
    let step = match step {
        Some(s) if s.is_finite() && s > 0.0 => s,
        Some(s) => return Err(SolverError::BadStep { step: s }),
        None => {
            let radius = eigh(&g)?
                .eigenvalues
                .iter()
                .fold(0.0f64, |m, &l| m.max(l.abs()));
            if radius > 1e-14 {
                radius.recip()
            } else {
                1.0
            }
        }
    };
    let signed = match problem.sense() {
        Sense::Maximize => step,
        Sense::Minimize => -step,
    };
    let uniform_b = ComplexMatrix::identity(dim_b)
        .scale(Complex64::new((dim_b as f64).recip(), 0.0));
    let mut rho = kron(problem.rho_a().matrix(), &uniform_b)?;
    let mut objective_history = vec![rho.trace_product(&g).re];
    let mut iterations = 0;
    let mut converged = false;
    let shift = g.scale(Complex64::new(signed, 0.0));
    for _ in 0..max_iters {
        let next = dykstra_project(
            &rho.add(&shift),
            problem.rho_a(),
            dim_b,
            INNER_PROJECTION_CYCLES,
            INNER_PROJECTION_TOL,
        )?;
        iterations += 1;
        let change = next.max_abs_diff(&rho);
        rho = next;
        objective_history.push(rho.trace_product(&g).re);
        if change <= tol {
            converged = true;
            break;
        }
    }
    let final_marginal = partial_trace(&rho, problem.rho_a().dim(), dim_b, Subsystem::B)?;
    let constraint_residual = final_marginal.sub(problem.rho_a().matrix()).frobenius_norm();
    let objective = *objective_history.last().expect("history is never empty");
    let state = DensityMatrix::new(rho)?;
    Ok(SolverReport {
        objective,
        state,
        iterations,
        constraint_residual,
        objective_history,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::{
        evaluate_jq, landscape_observable, optimal_state, random_density, DEGENERACY_TOL,
    };
    use crate::qmat::{self, random_hermitian};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_problem(
        dim_a: usize,
        dim_b: usize,
        rho_a: DensityMatrix,
        sense: Sense,
        seed: u64,
    ) -> EntangledProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut herm = |d: usize| qmat::ginibre(d, d, &mut rng).symmetrized();
        let h = BipartiteHamiltonian::new(
            herm(dim_a),
            herm(dim_b),
            vec![(herm(dim_a), herm(dim_b))],
        )
        .unwrap();
        let g = qmat::ginibre(dim_a, dim_a, &mut rng);
        let gram = g.matmul(&g.adjoint());
        let top = eigh(&gram).unwrap().eigenvalues[dim_a - 1];
        let o_a = Observable::new(gram.scale(c(top.recip(), 0.0))).unwrap();
        EntangledProblem::new(h, rho_a, o_a, 1.8, sense).unwrap()
    }

    /// A direction tangent to the marginal constraint: Tr_B D = 0.
    fn marginal_free_direction(dim_a: usize, dim_b: usize, seed: u64) -> ComplexMatrix {
        let r = random_hermitian(dim_a * dim_b, seed);
        let marginal = partial_trace(&r, dim_a, dim_b, Subsystem::B).unwrap();
        let lift = kron(
            &marginal.scale(c((dim_b as f64).recip(), 0.0)),
            &ComplexMatrix::identity(dim_b),
        )
        .unwrap();
        r.sub(&lift)
    }

    #[test]
    fn marginal_projection_is_the_orthogonal_one() {
        let rho_a = random_density(2, 5);
        let m = random_hermitian(6, 6);
        let projected = project_marginal(&m, &rho_a, 3).unwrap();
        let marginal = partial_trace(&projected, 2, 3, Subsystem::B).unwrap();
        assert!(marginal.max_abs_diff(rho_a.matrix()) <= 1e-14);
        // The residual m − P(m) must be orthogonal to every feasible
        // direction, which is exactly what makes P the closest point.
        let residual = m.sub(&projected);
        for seed in 0..6u64 {
            let d = marginal_free_direction(2, 3, 60 + seed);
            assert!(residual.trace_product(&d).norm() <= 1e-12);
        }
        let again = project_marginal(&projected, &rho_a, 3).unwrap();
        assert!(again.max_abs_diff(&projected) <= 1e-14);
    }

    #[test]
    fn feasible_states_are_fixed_by_both_projections() {
        let rho_a = random_density(2, 11);
        let rho_b = random_density(3, 12);
        let joint = kron(rho_a.matrix(), rho_b.matrix()).unwrap();
        assert!(project_marginal(&joint, &rho_a, 3)
            .unwrap()
            .max_abs_diff(&joint) <= 1e-14);
        assert!(project_psd(&joint).unwrap().max_abs_diff(&joint) <= 1e-13);
        let projected = dykstra_project(&joint, &rho_a, 3, 1_000, 1e-12).unwrap();
        assert!(projected.max_abs_diff(&joint) <= 1e-11);
    }

    #[test]
    fn psd_projection_clips_negative_levels() {
        let m = ComplexMatrix::from_diag(&[c(1.0, 0.0), c(-0.3, 0.0)]).unwrap();
        let p = project_psd(&m).unwrap();
        let expect = ComplexMatrix::from_diag(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(p.max_abs_diff(&expect) <= 1e-14);
        // Roundoff-scale negatives are absorbed silently.
        let tiny = ComplexMatrix::from_diag(&[c(1.0, 0.0), c(-1e-13, 0.0)]).unwrap();
        let p = project_psd(&tiny).unwrap();
        assert!(eigh(&p).unwrap().eigenvalues[0] >= 0.0);
        // General case: the output is positive and Hermitian to the bit.
        let m = random_hermitian(5, 33);
        let p = project_psd(&m).unwrap();
        assert_eq!(p.hermiticity_deviation(), 0.0);
        assert!(eigh(&p).unwrap().eigenvalues[0] >= -1e-12);
    }

    #[test]
    fn dykstra_matches_the_dual_reference() {
        // Near-feasible inputs, the regime the gradient loop produces: both
        // methods run at tight tolerance and must land on the same point.
        for (dim_a, dim_b, seed) in [(2, 2, 1u64), (2, 3, 2), (3, 2, 3)] {
            let rho_a = random_density(dim_a, seed);
            let rho_b = random_density(dim_b, 50 + seed);
            let feasible = kron(rho_a.matrix(), rho_b.matrix()).unwrap();
            let noise = random_hermitian(dim_a * dim_b, 40 + seed);
            let m = feasible.add(&noise.scale(c(0.25 / noise.max_abs(), 0.0)));
            let fast = dykstra_project(&m, &rho_a, dim_b, 200_000, 1e-11).unwrap();
            let slow =
                reference_intersection_projection(&m, &rho_a, dim_b, 1e-9, 2_000_000).unwrap();
            assert!(
                fast.max_abs_diff(&slow) <= 1e-7,
                "projection mismatch {:.3e} at dims ({dim_a},{dim_b})",
                fast.max_abs_diff(&slow)
            );
            assert!(marginal_gap(&fast, rho_a.matrix(), dim_b).unwrap() <= 1e-10);
            assert!(eigh(&fast).unwrap().eigenvalues[0] >= -1e-12);
        }
        // A far, generic input grinds the alternating scheme down to a slow
        // linear rate, so compare at a matching coarser tolerance.
        let rho_a = random_density(2, 9);
        let m = random_hermitian(6, 77);
        let fast = dykstra_project(&m, &rho_a, 3, 400_000, 3e-8).unwrap();
        let slow = reference_intersection_projection(&m, &rho_a, 3, 1e-9, 2_000_000).unwrap();
        assert!(
            fast.max_abs_diff(&slow) <= 1e-4,
            "far-input mismatch {:.3e}",
            fast.max_abs_diff(&slow)
        );
    }

    #[test]
    fn gradient_operator_reproduces_the_product_landscape() {
        let rho_a = random_density(2, 71);
        let problem = random_problem(2, 3, rho_a.clone(), Sense::Maximize, 70);
        let g = gradient_operator(&problem).unwrap();
        for seed in 0..5u64 {
            let rho_b = random_density(3, 80 + seed);
            let joint = kron(rho_a.matrix(), rho_b.matrix()).unwrap();
            let via_g = joint.trace_product(&g).re;
            let direct = evaluate_jq(
                problem.hamiltonian(),
                &rho_a,
                &rho_b,
                problem.o_a(),
                problem.duration(),
            )
            .unwrap();
            assert!((via_g - direct).abs() <= 1e-11);
        }
    }

    #[test]
    fn pure_marginal_collapses_to_the_product_optimum() {
        // A pure A marginal admits only product inputs ρ_A⊗ρ_B, so the
        // joint optimum must coincide with the landscape-observable one.
        let rho_a = DensityMatrix::basis_state(2, 0);
        let problem = random_problem(2, 3, rho_a.clone(), Sense::Maximize, 91);
        let report = optimize_entangled(&problem, None, 20_000, 1e-8).unwrap();
        assert!(report.converged);
        let ob = landscape_observable(
            problem.hamiltonian(),
            &rho_a,
            problem.o_a(),
            problem.duration(),
        )
        .unwrap();
        let separable = optimal_state(&ob, Sense::Maximize, DEGENERACY_TOL);
        assert!(
            (report.objective - separable.objective).abs() <= 1e-6,
            "joint {} vs product {}",
            report.objective,
            separable.objective
        );
        // The final state factorizes over the pure marginal.
        let b_side = partial_trace(report.state.matrix(), 2, 3, Subsystem::A).unwrap();
        let product = kron(rho_a.matrix(), &b_side).unwrap();
        assert!(report.state.matrix().max_abs_diff(&product) <= 1e-6);
    }

    #[test]
    fn mixed_marginal_dominates_every_product_input() {
        let rho_a = DensityMatrix::maximally_mixed(2);
        for sense in [Sense::Maximize, Sense::Minimize] {
            let problem = random_problem(2, 3, rho_a.clone(), sense, 17);
            let report = optimize_entangled(&problem, None, 20_000, 1e-8).unwrap();
            assert!(report.converged);
            for seed in 0..50u64 {
                let rho_b = random_density(3, 300 + seed);
                let j = evaluate_jq(
                    problem.hamiltonian(),
                    &rho_a,
                    &rho_b,
                    problem.o_a(),
                    problem.duration(),
                )
                .unwrap();
                match sense {
                    Sense::Maximize => assert!(report.objective >= j - 1e-8),
                    Sense::Minimize => assert!(report.objective <= j + 1e-8),
                }
            }
        }
    }

    #[test]
    fn history_is_monotone_and_the_marginal_is_kept() {
        for (sense, seed) in [(Sense::Maximize, 5u64), (Sense::Minimize, 6u64)] {
            let rho_a = random_density(2, seed);
            let problem = random_problem(2, 3, rho_a.clone(), sense, 120 + seed);
            let report = optimize_entangled(&problem, None, 20_000, 1e-8).unwrap();
            assert!(report.converged);
            assert!(report.constraint_residual <= 1e-8);
            assert_eq!(report.objective_history.len(), report.iterations + 1);
            assert_eq!(report.objective, *report.objective_history.last().unwrap());
            for pair in report.objective_history.windows(2) {
                match sense {
                    Sense::Maximize => assert!(pair[1] >= pair[0] - 1e-12),
                    Sense::Minimize => assert!(pair[1] <= pair[0] + 1e-12),
                }
            }
            // The returned state validates as a density matrix by type, and
            // its A marginal is the pinned one.
            let marginal =
                partial_trace(report.state.matrix(), 2, 3, Subsystem::B).unwrap();
            assert!(marginal.max_abs_diff(rho_a.matrix()) <= 1e-8);
        }
    }

    #[test]
    fn exhausted_iteration_budget_is_flagged_not_fatal() {
        let rho_a = random_density(2, 9);
        let problem = random_problem(2, 2, rho_a, Sense::Maximize, 140);
        let report = optimize_entangled(&problem, Some(1e-3), 1, 1e-12).unwrap();
        assert!(!report.converged);
        assert_eq!(report.iterations, 1);
        assert_eq!(report.objective_history.len(), 2);
        assert!(matches!(
            optimize_entangled(&problem, Some(-0.5), 10, 1e-8),
            Err(SolverError::BadStep { .. })
        ));
    }

    #[test]
    fn trivial_controller_dimension_returns_immediately() {
        let rho_a = random_density(3, 13);
        let problem = random_problem(3, 1, rho_a.clone(), Sense::Maximize, 150);
        let report = optimize_entangled(&problem, None, 100, 1e-8).unwrap();
        assert!(report.converged);
        assert!(report.state.matrix().max_abs_diff(rho_a.matrix()) <= 1e-9);
    }

    #[test]
    fn solver_is_deterministic() {
        let rho_a = random_density(2, 3);
        let problem = random_problem(2, 3, rho_a, Sense::Maximize, 160);
        let a = optimize_entangled(&problem, None, 5_000, 1e-8).unwrap();
        let b = optimize_entangled(&problem, None, 5_000, 1e-8).unwrap();
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        assert_eq!(a.iterations, b.iterations);
        assert!(a.state.matrix().max_abs_diff(b.state.matrix()) == 0.0);
    }

    #[test]
    fn random_rng_helper_is_well_behaved() {
        // Guards the test helper itself: directions really are marginal-free.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..3 {
            let d = marginal_free_direction(2, 3, rng.random());
            let marginal = partial_trace(&d, 2, 3, Subsystem::B).unwrap();
            assert!(marginal.max_abs() <= 1e-12);
        }
    }
}
