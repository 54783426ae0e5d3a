//! Property batteries behind the verify task.
//!
//! Every check is a pure function of the spec and seed, so a verify run is
//! reproducible and its JSON report is byte-stable. The same batteries are
//! reused by the integration tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::GridSpec;
use crate::jcmodel::{analytic_ob_diag, sweep, JCParams, SPOT_CHECK_TOL};
use crate::landscape::{
    evaluate_jq, jq_bounds, landscape_observable, mix_states, optimal_state, random_density,
    BipartiteHamiltonian, DensityMatrix, LandscapeObservable, Observable, Sense, DEGENERACY_TOL,
};
use crate::qmat::{
    eigh, kron, partial_trace, propagator, random_hermitian, ComplexMatrix, Subsystem,
};

/// One named check: what it measured and whether it stayed in tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// The whole battery; `passed` is the conjunction.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub properties: Vec<PropertyReport>,
}

impl VerifyReport {
    fn collect(properties: Vec<PropertyReport>) -> Self {
        VerifyReport {
            passed: properties.iter().all(|p| p.passed),
            properties,
        }
    }
}

fn property(name: &str, check: impl FnOnce() -> Result<String, String>) -> PropertyReport {
    match check() {
        Ok(detail) => PropertyReport {
            name: name.into(),
            passed: true,
            detail,
        },
        Err(detail) => PropertyReport {
            name: name.into(),
            passed: false,
            detail,
        },
    }
}

/// Decorrelate sub-seeds drawn from one battery seed.
fn mix_seed(seed: u64, k: u64) -> u64 {
    seed ^ k.wrapping_mul(0x9e37_79b9_7f4a_7c15).rotate_left(17)
}

/// A seeded bipartite problem: random Hermitian blocks, a random full-rank
/// marginal, a random observable. Deterministic in (dims, couplings, seed).
pub fn random_system(
    dim_a: usize,
    dim_b: usize,
    n_couplings: usize,
    seed: u64,
) -> (BipartiteHamiltonian, DensityMatrix, Observable) {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0xb17a));
    let h_a0 = random_hermitian(dim_a, rng.random());
    let h_b0 = random_hermitian(dim_b, rng.random());
    let mut couplings = Vec::with_capacity(n_couplings);
    for _ in 0..n_couplings {
        let a = random_hermitian(dim_a, rng.random());
        let b = random_hermitian(dim_b, rng.random());
        couplings.push((a, b));
    }
    let hamiltonian = BipartiteHamiltonian::new(h_a0, h_b0, couplings)
        .expect("random Hermitian blocks form a valid Hamiltonian");
    let rho_a = random_density(dim_a, rng.random());
    let o_a = Observable::new(random_hermitian(dim_a, rng.random()))
        .expect("a random Hermitian matrix is an observable");
    (hamiltonian, rho_a, o_a)
}

fn check_unitarity(dims: &[usize], seed: u64) -> Result<String, String> {
    let mut worst = 0.0f64;
    for (k, &dim) in dims.iter().enumerate() {
        let h = random_hermitian(dim, mix_seed(seed, k as u64 + 1));
        let u = propagator(&h, 1.3, 1.0).map_err(|e| e.to_string())?;
        let defect = u
            .adjoint()
            .matmul(&u)
            .max_abs_diff(&ComplexMatrix::identity(dim));
        worst = worst.max(defect);
    }
    if worst <= 1e-10 {
        Ok(format!("max unitarity defect {worst:.3e} over dims {dims:?}"))
    } else {
        Err(format!("unitarity defect {worst:.3e} exceeds 1e-10"))
    }
}

fn check_eigh(dims: &[usize], seed: u64) -> Result<String, String> {
    let mut worst = 0.0f64;
    for (k, &dim) in dims.iter().enumerate() {
        let h = random_hermitian(dim, mix_seed(seed, 100 + k as u64));
        let eig = eigh(&h).map_err(|e| e.to_string())?;
        if eig.eigenvalues.windows(2).any(|w| w[0] > w[1]) {
            return Err("eigenvalues are not ascending".into());
        }
        let v = &eig.eigenvectors;
        let rebuilt = ComplexMatrix::from_fn(dim, dim, |i, j| {
            (0..dim)
                .map(|m| eig.eigenvalues[m] * (v.get(i, m) * v.get(j, m).conj()))
                .sum()
        });
        let scale = h.max_abs().max(1.0);
        let residual = h.max_abs_diff(&rebuilt) / scale;
        let ortho = v
            .adjoint()
            .matmul(v)
            .max_abs_diff(&ComplexMatrix::identity(dim));
        worst = worst.max(residual).max(ortho);
    }
    if worst <= 1e-10 {
        Ok(format!(
            "max reconstruction/orthonormality defect {worst:.3e} over dims {dims:?}"
        ))
    } else {
        Err(format!("decomposition defect {worst:.3e} exceeds 1e-10"))
    }
}

fn check_tensor_algebra(dim_a: usize, dim_b: usize, seed: u64) -> Result<String, String> {
    let a = random_hermitian(dim_a, mix_seed(seed, 201));
    let b = random_hermitian(dim_b, mix_seed(seed, 202));
    let joint = kron(&a, &b).map_err(|e| e.to_string())?;
    let trace_dev = (joint.trace() - a.trace() * b.trace()).norm();
    let on_a = partial_trace(&joint, dim_a, dim_b, Subsystem::B).map_err(|e| e.to_string())?;
    let on_b = partial_trace(&joint, dim_a, dim_b, Subsystem::A).map_err(|e| e.to_string())?;
    let dev_a = on_a.max_abs_diff(&a.scale(b.trace()));
    let dev_b = on_b.max_abs_diff(&b.scale(a.trace()));
    let worst = trace_dev.max(dev_a).max(dev_b);
    if worst <= 1e-10 {
        Ok(format!("max product/reduction defect {worst:.3e}"))
    } else {
        Err(format!("tensor algebra defect {worst:.3e} exceeds 1e-10"))
    }
}

fn kernel_properties(dims: &[usize], tensor_dims: (usize, usize), seed: u64) -> Vec<PropertyReport> {
    vec![
        property("kernel.propagator_unitary", || check_unitarity(dims, seed)),
        property("kernel.eigh_reconstruction", || check_eigh(dims, seed)),
        property("kernel.tensor_algebra", || {
            check_tensor_algebra(tensor_dims.0, tensor_dims.1, seed)
        }),
    ]
}

fn check_objective_matches_spectrum(
    h: &BipartiteHamiltonian,
    rho_a: &DensityMatrix,
    o_a: &Observable,
    ob: &LandscapeObservable,
    t: f64,
    seed: u64,
) -> Result<String, String> {
    let mut worst = 0.0f64;
    for k in 0..20u64 {
        let rho_b = random_density(h.dim_b(), mix_seed(seed, 300 + k));
        let direct = evaluate_jq(h, rho_a, &rho_b, o_a, t).map_err(|e| e.to_string())?;
        let via_ob = ob.matrix().trace_product(rho_b.matrix()).re;
        let dev = (direct - via_ob).abs() / direct.abs().max(1.0);
        worst = worst.max(dev);
    }
    if worst <= 1e-11 {
        Ok(format!("max relative mismatch {worst:.3e} over 20 states"))
    } else {
        Err(format!(
            "objective disagrees with the landscape operator by {worst:.3e}"
        ))
    }
}

fn check_linearity(
    h: &BipartiteHamiltonian,
    rho_a: &DensityMatrix,
    o_a: &Observable,
    t: f64,
    seed: u64,
) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 400));
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let p = random_density(h.dim_b(), rng.random());
        let q = random_density(h.dim_b(), rng.random());
        let w: f64 = rng.random_range(0.05..0.95);
        let blend = mix_states(&[p.clone(), q.clone()], &[w, 1.0 - w]).map_err(|e| e.to_string())?;
        let jp = evaluate_jq(h, rho_a, &p, o_a, t).map_err(|e| e.to_string())?;
        let jq = evaluate_jq(h, rho_a, &q, o_a, t).map_err(|e| e.to_string())?;
        let jb = evaluate_jq(h, rho_a, &blend, o_a, t).map_err(|e| e.to_string())?;
        let expected = w * jp + (1.0 - w) * jq;
        let dev = (jb - expected).abs() / expected.abs().max(1.0);
        worst = worst.max(dev);
    }
    if worst <= 1e-12 {
        Ok(format!("max relative defect {worst:.3e} over 20 blends"))
    } else {
        Err(format!("linearity defect {worst:.3e} exceeds 1e-12"))
    }
}

fn check_level_set_closure(
    h: &BipartiteHamiltonian,
    rho_a: &DensityMatrix,
    o_a: &Observable,
    t: f64,
    seed: u64,
) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 500));
    let dim_b = h.dim_b();
    let mm = DensityMatrix::maximally_mixed(dim_b);
    let j_mm = evaluate_jq(h, rho_a, &mm, o_a, t).map_err(|e| e.to_string())?;
    let mut tested = 0usize;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        if tested >= 10 {
            break;
        }
        let p = random_density(dim_b, rng.random());
        let q = random_density(dim_b, rng.random());
        let jp = evaluate_jq(h, rho_a, &p, o_a, t).map_err(|e| e.to_string())?;
        let jq = evaluate_jq(h, rho_a, &q, o_a, t).map_err(|e| e.to_string())?;
        // Pull both samples toward I/d until they sit on one level set.
        if (jq - j_mm).abs() < 1e-3 {
            continue;
        }
        let alpha = 0.3;
        let beta = alpha * (jp - j_mm) / (jq - j_mm);
        if !(0.05..=0.95).contains(&beta) {
            continue;
        }
        let r1 = mix_states(&[p, mm.clone()], &[alpha, 1.0 - alpha]).map_err(|e| e.to_string())?;
        let r2 = mix_states(&[q, mm.clone()], &[beta, 1.0 - beta]).map_err(|e| e.to_string())?;
        let j1 = evaluate_jq(h, rho_a, &r1, o_a, t).map_err(|e| e.to_string())?;
        let j2 = evaluate_jq(h, rho_a, &r2, o_a, t).map_err(|e| e.to_string())?;
        let blend = mix_states(&[r1, r2], &[0.4, 0.6]).map_err(|e| e.to_string())?;
        let jb = evaluate_jq(h, rho_a, &blend, o_a, t).map_err(|e| e.to_string())?;
        let scale = j1.abs().max(1.0);
        let dev = ((jb - (0.4 * j1 + 0.6 * j2)).abs() / scale).max((j1 - j2).abs() / scale);
        worst = worst.max(dev);
        tested += 1;
    }
    if tested == 0 {
        return Err("could not construct matched level-set pairs".into());
    }
    if worst <= 1e-12 {
        Ok(format!(
            "max level drift {worst:.3e} over {tested} matched pairs"
        ))
    } else {
        Err(format!("mixing left a level set by {worst:.3e}"))
    }
}

fn check_global_optimality(
    h: &BipartiteHamiltonian,
    rho_a: &DensityMatrix,
    o_a: &Observable,
    ob: &LandscapeObservable,
    t: f64,
    seed: u64,
) -> Result<String, String> {
    let (j_min, j_max) = jq_bounds(ob);
    let scale = j_min.abs().max(j_max.abs()).max(1.0);
    for sense in [Sense::Maximize, Sense::Minimize] {
        let solution = optimal_state(ob, sense, DEGENERACY_TOL);
        let attained =
            evaluate_jq(h, rho_a, &solution.representative, o_a, t).map_err(|e| e.to_string())?;
        let dev = (attained - solution.objective).abs();
        if dev > 1e-10 * scale {
            return Err(format!(
                "optimal state misses its eigenvalue by {dev:.3e}"
            ));
        }
    }
    let mut worst = 0.0f64;
    for k in 0..100u64 {
        let rho_b = random_density(h.dim_b(), mix_seed(seed, 600 + k));
        let j = evaluate_jq(h, rho_a, &rho_b, o_a, t).map_err(|e| e.to_string())?;
        worst = worst.max(j - j_max).max(j_min - j);
    }
    if worst <= 1e-10 * scale {
        Ok(format!(
            "extremes attained; 100 samples stay inside the bounds (max excess {worst:.3e})"
        ))
    } else {
        Err(format!("a sample escaped the spectral bounds by {worst:.3e}"))
    }
}

fn check_spectral_window(o_a: &Observable, ob: &LandscapeObservable) -> Result<String, String> {
    let (j_min, j_max) = jq_bounds(ob);
    let atom = eigh(o_a.matrix()).map_err(|e| e.to_string())?;
    let lo = atom.eigenvalues.first().copied().unwrap_or(0.0);
    let hi = atom.eigenvalues.last().copied().unwrap_or(0.0);
    let scale = lo.abs().max(hi.abs()).max(1.0);
    let excess = (lo - j_min).max(j_max - hi);
    if excess <= 1e-8 * scale {
        Ok(format!(
            "landscape spectrum [{j_min:.6e}, {j_max:.6e}] inside the observable range [{lo:.6e}, {hi:.6e}]"
        ))
    } else {
        Err(format!(
            "landscape spectrum escapes the observable range by {excess:.3e}"
        ))
    }
}

/// The battery for explicit-matrix problems: kernel algebra at the problem's
/// dimensions, then the structural laws the landscape operator must satisfy.
pub fn generic_battery(
    h: &BipartiteHamiltonian,
    rho_a: &DensityMatrix,
    o_a: &Observable,
    t: f64,
    seed: u64,
) -> VerifyReport {
    let dims = [h.dim_a(), h.dim_b(), h.dim()];
    let mut properties = kernel_properties(&dims, (h.dim_a(), h.dim_b()), seed);
    let ob = match landscape_observable(h, rho_a, o_a, t) {
        Ok(ob) => ob,
        Err(e) => {
            properties.push(property("landscape.operator_construction", || {
                Err(e.to_string())
            }));
            return VerifyReport::collect(properties);
        }
    };
    let asymmetry = ob.provenance().asymmetry;
    properties.push(property("landscape.operator_construction", || {
        Ok(format!("Hermitian within {asymmetry:.3e} before symmetrization"))
    }));
    properties.push(property("landscape.objective_matches_spectrum", || {
        check_objective_matches_spectrum(h, rho_a, o_a, &ob, t, seed)
    }));
    properties.push(property("landscape.linearity", || {
        check_linearity(h, rho_a, o_a, t, seed)
    }));
    properties.push(property("landscape.level_set_closure", || {
        check_level_set_closure(h, rho_a, o_a, t, seed)
    }));
    properties.push(property("landscape.global_optimality", || {
        check_global_optimality(h, rho_a, o_a, &ob, t, seed)
    }));
    properties.push(property("landscape.spectral_window", || {
        check_spectral_window(o_a, &ob)
    }));
    VerifyReport::collect(properties)
}

fn analytic_bounds(params: &JCParams, t: f64) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for n in 0..params.n_b {
        let j = analytic_ob_diag(params, t, n);
        lo = lo.min(j);
        hi = hi.max(j);
    }
    (lo, hi)
}

fn check_analytic_agreement(params: &JCParams, grid: &GridSpec, seed: u64) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 700));
    let (lo, hi) = if grid.t_end > grid.t_start {
        (grid.t_start, grid.t_end)
    } else {
        (0.0, 100.0)
    };
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let t = rng.random_range(lo..=hi);
        let dev = crate::jcmodel::verify_against_numeric(params, t).map_err(|e| e.to_string())?;
        worst = worst.max(dev);
    }
    if worst <= SPOT_CHECK_TOL {
        Ok(format!("max entrywise deviation {worst:.3e} over 20 durations"))
    } else {
        Err(format!(
            "closed form and numeric operator disagree by {worst:.3e}"
        ))
    }
}

fn check_numeric_bounds(params: &JCParams, grid: &GridSpec) -> Result<String, String> {
    let h = crate::jcmodel::build_jc(params).map_err(|e| e.to_string())?;
    let rho_a = DensityMatrix::basis_state(2, 0);
    let o_a = Observable::basis_projector(2, 1);
    let mut worst = 0.0f64;
    for k in 0..5 {
        let t = grid.t_start + (grid.t_end - grid.t_start) * k as f64 / 4.0;
        let ob = landscape_observable(&h, &rho_a, &o_a, t).map_err(|e| e.to_string())?;
        let (num_lo, num_hi) = jq_bounds(&ob);
        let (ana_lo, ana_hi) = analytic_bounds(params, t);
        worst = worst.max((num_lo - ana_lo).abs()).max((num_hi - ana_hi).abs());
    }
    if worst <= SPOT_CHECK_TOL {
        Ok(format!("max bound deviation {worst:.3e} at 5 durations"))
    } else {
        Err(format!("numeric bounds drift from the closed form by {worst:.3e}"))
    }
}

/// The battery for the atom-field case study: kernel algebra at its
/// dimensions, closed form against the numeric pipeline, and the structure
/// of the population-transfer landscape over a duration sweep.
pub fn jc_battery(params: &JCParams, grid: GridSpec, seed: u64) -> VerifyReport {
    let dims = [2, params.n_b, 2 * params.n_b];
    let mut properties = kernel_properties(&dims, (2, params.n_b), seed);
    properties.push(property("jc.analytic_agreement", || {
        check_analytic_agreement(params, &grid, seed)
    }));
    properties.push(property("jc.numeric_bounds", || {
        check_numeric_bounds(params, &grid)
    }));
    let swept = match sweep(params, grid.t_start, grid.t_end, grid.steps) {
        Ok(s) => s,
        Err(e) => {
            properties.push(property("jc.sweep_integrity", || Err(e.to_string())));
            return VerifyReport::collect(properties);
        }
    };
    properties.push(property("jc.sweep_integrity", || {
        Ok(format!(
            "{} grid points, numeric spot checks within {SPOT_CHECK_TOL:.0e}",
            swept.times.len()
        ))
    }));
    properties.push(property("jc.floor_pinned_at_zero", || {
        let floor = swept.j_min.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        if floor <= 1e-10 {
            Ok(format!("max |j_min| {floor:.3e} across the sweep"))
        } else {
            Err(format!("lower bound leaves zero by {floor:.3e}"))
        }
    }));
    properties.push(property("jc.transfer_cap", || {
        let delta_sqr = params.detuning() * params.detuning();
        let mut cap = 0.0f64;
        for n in 0..params.n_b {
            let strength = params.rabi * params.rabi * n as f64;
            if strength > 0.0 {
                cap = cap.max(strength / (delta_sqr + strength));
            }
        }
        let peak = swept.j_max.iter().fold(0.0f64, |m, &v| m.max(v));
        if peak <= cap + 1e-9 {
            Ok(format!("peak transfer {peak:.9} under cap {cap:.9}"))
        } else {
            Err(format!("transfer {peak:.9} exceeds the cap {cap:.9}"))
        }
    }));
    properties.push(property("jc.argmax_level_jumps", || {
        let jumps = swept
            .argmax_level
            .windows(2)
            .filter(|w| w[0] != w[1])
            .count();
        let expect_jumps = params.detuning() != 0.0
            && params.rabi != 0.0
            && params.n_b >= 2
            && grid.t_end - grid.t_start >= 50.0;
        if expect_jumps && jumps == 0 {
            Err("no optimal-level crossings over a long off-resonant sweep".into())
        } else {
            Ok(format!("{jumps} optimal-level crossings"))
        }
    }));
    VerifyReport::collect(properties)
}
