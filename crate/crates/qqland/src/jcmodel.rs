//! Case study: a two-level atom exchanging one excitation with a truncated
//! field mode (rotating-wave coupling), the worked example where the
//! landscape observable is known in closed form.
//!
//! With the atom prepared in |g⟩ and the excited-state projector as the
//! target, each initial |g,n⟩ evolves inside the closed two-level block
//! {|g,n⟩, |e,n−1⟩}, so the truncation is exact and O_B is diagonal with
//!
//! ⟨n|O_B|n⟩ = Ω²n/(Δ²+Ω²n) · sin²[(T/2)√(Δ²+Ω²n)],   ⟨0|O_B|0⟩ = 0,
//!
//! where Δ = ν−ω. The module builds the truncated Hamiltonian, evaluates
//! that diagonal, checks it against the numeric landscape observable, and
//! runs duration sweeps on the analytic fast path with periodic numeric
//! spot checks.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::landscape::{
    jq_bounds, landscape_observable, optimal_state, BipartiteHamiltonian, DensityMatrix,
    LandscapeError, Observable, Sense, DEGENERACY_TOL,
};
use crate::qmat::ComplexMatrix;

/// Numeric-vs-analytic agreement demanded by the sweep's spot checks.
pub const SPOT_CHECK_TOL: f64 = 1e-8;

/// Every how many grid points the sweep re-derives its values numerically.
pub const SPOT_CHECK_STRIDE: usize = 50;

#[derive(Error, Debug)]
pub enum JCError {
    #[error(transparent)]
    Landscape(#[from] LandscapeError),
    #[error("invalid parameters: {reason}")]
    BadParams { reason: String },
    #[error("invalid sweep grid: {reason}")]
    BadGrid { reason: String },
    #[error("numeric spot check failed at T={t}: deviation {deviation:.3e}")]
    SpotCheck { t: f64, deviation: f64 },
}

/// Atom-field parameters: atomic frequency ω, field frequency ν, coupling
/// strength Ω, and the number of retained field levels |0⟩..|nB−1⟩.
/// All angular frequencies, ħ = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JCParams {
    pub omega: f64,
    pub nu: f64,
    #[serde(rename = "Omega")]
    pub rabi: f64,
    #[serde(rename = "nB")]
    pub n_b: usize,
}

impl JCParams {
    /// Δ = ν − ω.
    pub fn detuning(&self) -> f64 {
        self.nu - self.omega
    }

    pub fn validate(&self) -> Result<(), JCError> {
        if !(self.omega.is_finite() && self.nu.is_finite() && self.rabi.is_finite()) {
            return Err(JCError::BadParams {
                reason: "frequencies and coupling must be finite".into(),
            });
        }
        if self.n_b < 1 {
            return Err(JCError::BadParams {
                reason: "at least one field level must be retained".into(),
            });
        }
        Ok(())
    }
}

/// One duration sweep: at each T the attainable bounds over field states and
/// the number level that attains the maximum.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub params: JCParams,
    pub times: Vec<f64>,
    pub j_max: Vec<f64>,
    pub j_min: Vec<f64>,
    pub argmax_level: Vec<usize>,
}

/// The truncated atom-field Hamiltonian
/// (ω/2)σ_z ⊗ I + I ⊗ ν a†a + (Ω/2)(σ₊a + σ₋a†),
/// basis order |g⟩, |e⟩ on the atom and |0⟩..|nB−1⟩ on the field.
///
/// The exchange coupling is carried as the two Hermitian product pairs
/// ((Ω/2)σ_x, x_q) and ((Ω/2)σ_y, p_q) with the quadratures x_q = (a+a†)/2
/// and p_q = (a−a†)/(2i): the rotating terms add up and the counter-rotating
/// ones cancel, entry by entry, without rounding.
pub fn build_jc(params: &JCParams) -> Result<BipartiteHamiltonian, JCError> {
    params.validate()?;
    let n_b = params.n_b;
    let half_omega = params.omega / 2.0;
    let h_a0 = ComplexMatrix::from_diag(&[
        Complex64::new(-half_omega, 0.0),
        Complex64::new(half_omega, 0.0),
    ])
    .expect("2x2 diagonal");
    let mode_levels: Vec<Complex64> = (0..n_b)
        .map(|n| Complex64::new(params.nu * n as f64, 0.0))
        .collect();
    let h_b0 = ComplexMatrix::from_diag(&mode_levels).expect("diagonal of retained levels");
    let half_rabi = Complex64::new(params.rabi / 2.0, 0.0);
    let sigma_x = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])
        .expect("4 entries")
        .scale(half_rabi);
    let sigma_y = ComplexMatrix::new(
        2,
        2,
        vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, 0.0),
        ],
    )
    .expect("4 entries")
    .scale(half_rabi);
    let mut x_q = ComplexMatrix::zeros(n_b, n_b);
    let mut p_q = ComplexMatrix::zeros(n_b, n_b);
    for n in 1..n_b {
        let half_root = (n as f64).sqrt() / 2.0;
        x_q.set(n - 1, n, Complex64::new(half_root, 0.0));
        x_q.set(n, n - 1, Complex64::new(half_root, 0.0));
        p_q.set(n - 1, n, Complex64::new(0.0, -half_root));
        p_q.set(n, n - 1, Complex64::new(0.0, half_root));
    }
    Ok(BipartiteHamiltonian::new(
        h_a0,
        h_b0,
        vec![(sigma_x, x_q), (sigma_y, p_q)],
    )?)
}

/// ⟨n|O_B|n⟩ for the |g⟩-prepared atom and excited-state target: the
/// transfer weight Ω²n/(Δ²+Ω²n) times sin²[(t/2)√(Δ²+Ω²n)]. Level 0 (and
/// any level with Ω = 0) cannot excite the atom and yields 0 exactly; on
/// resonance the weight is 1 for every n ≥ 1.
pub fn analytic_ob_diag(params: &JCParams, t: f64, n: usize) -> f64 {
    let strength = params.rabi * params.rabi * n as f64;
    if strength == 0.0 {
        return 0.0;
    }
    let delta = params.detuning();
    let rabi_sqr = delta * delta + strength;
    let weight = strength / rabi_sqr;
    let half_angle = 0.5 * t * rabi_sqr.sqrt();
    weight * half_angle.sin().powi(2)
}

fn ground_atom() -> DensityMatrix {
    DensityMatrix::basis_state(2, 0)
}

fn excited_projector() -> Observable {
    Observable::basis_projector(2, 1)
}

/// Max deviation between the numeric landscape observable and its closed
/// form: the larger of the diagonal error and the largest off-diagonal
/// magnitude.
pub fn verify_against_numeric(params: &JCParams, t: f64) -> Result<f64, JCError> {
    let h = build_jc(params)?;
    let ob = landscape_observable(&h, &ground_atom(), &excited_projector(), t)?;
    let analytic: Vec<Complex64> = (0..params.n_b)
        .map(|n| Complex64::new(analytic_ob_diag(params, t, n), 0.0))
        .collect();
    let expected = ComplexMatrix::from_diag(&analytic).expect("diagonal of retained levels");
    Ok(ob.matrix().max_abs_diff(&expected))
}

/// Analytic bounds and maximizing level at one duration. Ties resolve to
/// the smallest level.
fn analytic_point(params: &JCParams, t: f64) -> (f64, f64, usize) {
    let mut j_max = f64::NEG_INFINITY;
    let mut j_min = f64::INFINITY;
    let mut argmax = 0usize;
    for n in 0..params.n_b {
        let value = analytic_ob_diag(params, t, n);
        if value > j_max {
            j_max = value;
            argmax = n;
        }
        j_min = j_min.min(value);
    }
    (j_min, j_max, argmax)
}

/// Duration sweep over a uniform grid including both endpoints.
///
/// Values come from the closed form; every [`SPOT_CHECK_STRIDE`]-th point is
/// re-derived through the full numeric pipeline (propagation, partial trace,
/// eigendecomposition) and must agree within [`SPOT_CHECK_TOL`], including
/// the maximizing level compared by value. `steps` is the number of grid
/// points; a single step collapses the grid to `t_start`.
pub fn sweep(
    params: &JCParams,
    t_start: f64,
    t_end: f64,
    steps: usize,
) -> Result<SweepResult, JCError> {
    params.validate()?;
    if !(t_start.is_finite() && t_end.is_finite()) {
        return Err(JCError::BadGrid {
            reason: "grid endpoints must be finite".into(),
        });
    }
    if t_end < t_start {
        return Err(JCError::BadGrid {
            reason: format!("grid runs backwards: {t_start} > {t_end}"),
        });
    }
    if steps < 1 {
        return Err(JCError::BadGrid {
            reason: "grid needs at least one point".into(),
        });
    }
    let times: Vec<f64> = if steps == 1 {
        vec![t_start]
    } else {
        let h = (t_end - t_start) / (steps - 1) as f64;
        (0..steps)
            .map(|i| {
                if i == steps - 1 {
                    t_end
                } else {
                    t_start + h * i as f64
                }
            })
            .collect()
    };
    let hamiltonian = build_jc(params)?;
    let rho_a = ground_atom();
    let o_a = excited_projector();
    let mut j_max = Vec::with_capacity(steps);
    let mut j_min = Vec::with_capacity(steps);
    let mut argmax_level = Vec::with_capacity(steps);
    for (i, &t) in times.iter().enumerate() {
        let (lo, hi, level) = analytic_point(params, t);
        if i % SPOT_CHECK_STRIDE == 0 {
            let ob = landscape_observable(&hamiltonian, &rho_a, &o_a, t)?;
            let (num_lo, num_hi) = jq_bounds(&ob);
            let solution = optimal_state(&ob, Sense::Maximize, DEGENERACY_TOL);
            let numeric_level = (0..params.n_b)
                .max_by(|&a, &b| {
                    let pa = solution.representative.matrix().get(a, a).re;
                    let pb = solution.representative.matrix().get(b, b).re;
                    pa.total_cmp(&pb)
                })
                .expect("at least one level");
            let deviation = (num_lo - lo)
                .abs()
                .max((num_hi - hi).abs())
                .max((analytic_ob_diag(params, t, numeric_level) - hi).abs());
            if deviation > SPOT_CHECK_TOL {
                return Err(JCError::SpotCheck { t, deviation });
            }
        }
        j_max.push(hi);
        j_min.push(lo);
        argmax_level.push(level);
    }
    Ok(SweepResult {
        params: *params,
        times,
        j_max,
        j_min,
        argmax_level,
    })
}
