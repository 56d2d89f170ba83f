//! Constrained derivative-free minimization of the variational energy over
//! the trial parameters, via a Nelder-Mead simplex in a transformed
//! (unconstrained) coordinate space, with seeded multi-start.
//!
//! Parameter transform: `m = e^(u1)`, `n = e^(u2)`, `p = sigmoid(u3)` (clipped
//! to the `(0, 1]` closure at `1 - 1e-12`), `q = e^(u4)`. Infeasible or
//! non-normalizable probes receive `+inf` so the simplex retreats; nothing is
//! ever clamped. After each restart converges, the winner is polished by the
//! exact scaling step `(n, q) -> (lambda n, lambda q)` with
//! `lambda = -V/(2T)`, which is optimal within the family's scaling orbit and
//! drives the virial residual toward zero.

use crate::energy::{expectation_reduced_params, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::numerics::QuadratureSpec;
use crate::potential::AngularKernel;
use crate::trial::{orthogonality_constant, OrthogonalityInputs, StateKind, TrialParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Simplex and restart policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// convergence threshold on the simplex diameter in transformed space
    pub simplex_size_tolerance: f64,
    /// convergence threshold on the objective spread across vertices (a.u.)
    pub objective_spread_tolerance: f64,
    pub restarts: usize,
    pub seed: u64,
    /// objective quadrature tolerance during the search
    pub search_tolerance: f64,
    /// quadrature tolerance for the final re-evaluation of the winner
    pub final_tolerance: f64,
    /// additional caller-supplied starting points
    pub initial_guesses: Vec<TrialParams>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iterations: 5000,
            simplex_size_tolerance: 1e-9,
            objective_spread_tolerance: 1e-12,
            restarts: 8,
            seed: 0x5eed,
            search_tolerance: 1e-8,
            final_tolerance: 1e-12,
            initial_guesses: Vec::new(),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || self.restarts == 0 {
            return Err(Error::Config("iteration and restart counts must be positive".into()));
        }
        if !(self.simplex_size_tolerance > 0.0) || !(self.objective_spread_tolerance > 0.0) {
            return Err(Error::Config("optimizer tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of one [`optimize_state`] call.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub kind: StateKind,
    pub alpha: f64,
    pub best_params: TrialParams,
    pub best_energy: EnergyBreakdown,
    /// orthogonality constant at the optimum (second even family only)
    pub a: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// per-parameter flags `[m, n, p, q]`: optimum within 1e-6 of a
    /// constraint boundary (`p` near 0 or 1, `q` near 0, `m`/`n` near 0)
    pub boundary_active: [bool; 4],
    /// best objective of every restart, in restart order
    pub restart_energies: Vec<f64>,
}

// ---------------------------------------------------------------------------
// parameter transform
// ---------------------------------------------------------------------------

const P_CLIP: f64 = 1.0 - 1e-12;

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

fn safe_exp(v: f64) -> f64 {
    v.clamp(-700.0, 700.0).exp()
}

/// Map parameters to unconstrained coordinates. `p` is clipped into the open
/// interval before the logit; the round trip is the identity to 1e-12.
pub fn transform(params: &TrialParams) -> Result<[f64; 4]> {
    params.validate()?;
    let p = params.p.min(P_CLIP);
    Ok([
        params.m.ln(),
        params.n.ln(),
        (p / (1.0 - p)).ln(),
        params.q.max(f64::MIN_POSITIVE).ln(),
    ])
}

/// Inverse of [`transform`]. `u3 -> +inf` reaches the `p = 1` boundary.
pub fn untransform(u: &[f64; 4]) -> TrialParams {
    TrialParams {
        m: safe_exp(u[0]),
        n: safe_exp(u[1]),
        p: sigmoid(u[2]).min(1.0),
        q: safe_exp(u[3]),
    }
}

// ---------------------------------------------------------------------------
// Nelder-Mead
// ---------------------------------------------------------------------------

/// Plain Nelder-Mead result on the transformed coordinates.
#[derive(Debug, Clone)]
pub struct SimplexOutcome {
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Standard Nelder-Mead with reflection/expansion/contraction/shrink
/// coefficients 1, 2, 0.5, 0.5. Deterministic for a given starting simplex.
pub fn minimize<F>(
    objective: F,
    start: &[f64],
    config: &OptimizerConfig,
) -> Result<SimplexOutcome>
where
    F: Fn(&[f64]) -> f64,
{
    config.validate()?;
    let dim = start.len();
    if dim == 0 {
        return Err(Error::Optimization("empty parameter vector".into()));
    }
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(start.to_vec());
    for i in 0..dim {
        let mut v = start.to_vec();
        let step = if v[i].abs() > 1e-10 { 0.1 * v[i].abs() } else { 0.25 };
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| objective(p)).collect();
    if !values.iter().any(|v| v.is_finite()) {
        return Err(Error::Optimization(
            "objective not finite at any initial simplex vertex".into(),
        ));
    }

    let mut iterations = 0usize;
    let mut converged = false;
    while iterations < config.max_iterations {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];

        // convergence: simplex diameter or objective spread
        let diameter = simplex
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[best])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0f64, f64::max);
        let spread = values[worst] - values[best];
        if diameter < config.simplex_size_tolerance
            || (spread.is_finite() && spread.abs() < config.objective_spread_tolerance)
        {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; dim];
        for &i in order.iter().take(dim) {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x;
            }
        }
        for c in centroid.iter_mut() {
            *c /= dim as f64;
        }

        let blend = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let reflected = blend(1.0);
        let f_reflected = objective(&reflected);
        if f_reflected < values[best] {
            let expanded = blend(2.0);
            let f_expanded = objective(&expanded);
            if f_expanded < f_reflected {
                simplex[worst] = expanded;
                values[worst] = f_expanded;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_reflected;
            }
        } else if f_reflected < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = f_reflected;
        } else {
            let contracted = blend(-0.5);
            let f_contracted = objective(&contracted);
            if f_contracted < values[worst] {
                simplex[worst] = contracted;
                values[worst] = f_contracted;
            } else {
                // shrink toward the best vertex
                let best_point = simplex[best].clone();
                for (i, vertex) in simplex.iter_mut().enumerate() {
                    if i == best {
                        continue;
                    }
                    for (x, b) in vertex.iter_mut().zip(&best_point) {
                        *x = b + 0.5 * (*x - b);
                    }
                    values[i] = objective(vertex);
                }
            }
        }
        iterations += 1;
    }

    let best = (0..=dim)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("non-empty simplex");
    Ok(SimplexOutcome {
        best_point: simplex[best].clone(),
        best_value: values[best],
        iterations,
        converged,
    })
}

// ---------------------------------------------------------------------------
// variational objective and the full optimization workflow
// ---------------------------------------------------------------------------

fn orthogonality_for(
    ground: &TrialParams,
    params2: &TrialParams,
    alpha: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let inputs = OrthogonalityInputs::new(*ground, *params2, alpha)?;
    orthogonality_constant(&inputs, spec)
}

/// Full variational energy of a parameter set; `Err` means infeasible.
fn evaluate_energy(
    kind: StateKind,
    params: &TrialParams,
    alpha: f64,
    kernel: &AngularKernel,
    ground: Option<&TrialParams>,
    spec: &QuadratureSpec,
) -> Result<EnergyBreakdown> {
    params.validate()?;
    let a = match kind {
        StateKind::Excited => {
            let g = ground.ok_or_else(|| {
                Error::Optimization("excited optimization requires a ground result".into())
            })?;
            Some(orthogonality_for(g, params, alpha, spec)?)
        }
        _ => None,
    };
    expectation_reduced_params(kind, params, a, alpha, kernel, spec)
}

fn restart_seeds(
    kind: StateKind,
    alpha: f64,
    config: &OptimizerConfig,
) -> Vec<TrialParams> {
    let nu = std::f64::consts::PI / alpha;
    let mut seeds = Vec::with_capacity(config.restarts + config.initial_guesses.len());
    seeds.extend(config.initial_guesses.iter().copied());
    // physics-informed start: the planar surface-state profile scaled by alpha
    seeds.push(TrialParams {
        m: 1.0,
        n: 0.25 * nu,
        p: (0.99 * nu).min(1.0),
        q: 0.01,
    });
    let mut rng = ChaCha8Rng::seed_from_u64(
        config.seed ^ (kind.index() as u64) << 56 ^ alpha.to_bits().rotate_left(17),
    );
    while seeds.len() < config.restarts + config.initial_guesses.len() {
        let log_uniform = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| -> f64 {
            (rng.gen_range(lo.ln()..hi.ln())).exp()
        };
        seeds.push(TrialParams {
            m: log_uniform(&mut rng, 0.3, 3.0),
            n: log_uniform(&mut rng, 0.02, 1.0),
            p: rng.gen_range(0.2..1.0),
            q: log_uniform(&mut rng, 1e-3, 0.5),
        });
    }
    seeds
}

/// Restarts whose best objectives agree within this margin (a.u.) are treated
/// as ties; among ties the earliest restart wins. This keeps the reported
/// optimum on the physics-informed branch when several boundary approaches
/// reach the same energy to well below every quoted tolerance.
const TIE_EPSILON: f64 = 1e-6;

/// Minimize the variational energy of one trial family at a fixed opening
/// angle. For the second even family (`Excited`), the ground parameters must
/// be supplied and the orthogonality constant is recomputed at every
/// objective call.
pub fn optimize_state(
    kind: StateKind,
    alpha: f64,
    kernel: &AngularKernel,
    config: &OptimizerConfig,
    ground: Option<&OptimizationResult>,
) -> Result<OptimizationResult> {
    config.validate()?;
    if kind == StateKind::Excited && ground.is_none() {
        return Err(Error::Optimization(
            "excited optimization requires the ground-state result for the same alpha".into(),
        ));
    }
    if let Some(g) = ground {
        if (g.alpha - alpha).abs() > 1e-12 {
            return Err(Error::Optimization(format!(
                "ground result is for alpha={}, requested alpha={alpha}",
                g.alpha
            )));
        }
    }
    let ground_params = ground.map(|g| g.best_params);
    let search_spec = QuadratureSpec::with_tolerance(config.search_tolerance);
    let final_spec = QuadratureSpec::with_tolerance(config.final_tolerance);

    let objective = |u: &[f64]| -> f64 {
        let params = untransform(&[u[0], u[1], u[2], u[3]]);
        match evaluate_energy(
            kind,
            &params,
            alpha,
            kernel,
            ground_params.as_ref(),
            &search_spec,
        ) {
            Ok(b) if b.total.is_finite() => b.total,
            _ => f64::INFINITY,
        }
    };

    let seeds = restart_seeds(kind, alpha, config);
    let mut restart_energies = Vec::with_capacity(seeds.len());
    let mut candidates: Vec<(usize, TrialParams, f64, usize, bool)> = Vec::new();
    let mut total_iterations = 0usize;
    for (index, seed) in seeds.iter().enumerate() {
        let start = match transform(seed) {
            Ok(u) => u,
            Err(_) => {
                restart_energies.push(f64::INFINITY);
                continue;
            }
        };
        let outcome = match minimize(objective, &start, config) {
            Ok(o) => o,
            Err(_) => {
                restart_energies.push(f64::INFINITY);
                continue;
            }
        };
        total_iterations += outcome.iterations;
        let params = untransform(&[
            outcome.best_point[0],
            outcome.best_point[1],
            outcome.best_point[2],
            outcome.best_point[3],
        ]);
        restart_energies.push(outcome.best_value);
        candidates.push((
            index,
            params,
            outcome.best_value,
            outcome.iterations,
            outcome.converged,
        ));
    }
    if candidates.is_empty() {
        return Err(Error::Optimization(format!(
            "all {} restarts failed to produce a finite objective for {kind:?} at alpha={alpha}",
            seeds.len()
        )));
    }

    // argmin with deterministic tie-breaking by restart order
    let min_value = candidates
        .iter()
        .map(|c| c.2)
        .fold(f64::INFINITY, f64::min);
    let chosen = candidates
        .iter()
        .find(|c| c.2 <= min_value + TIE_EPSILON)
        .expect("at least one candidate");
    let (_, mut best_params, _, _, converged) = *chosen;

    // exact scaling polish: lambda* = -V/(2T) minimizes the energy along the
    // (n, q) scaling orbit and certifies the virial identity
    let mut best_energy = evaluate_energy(
        kind,
        &best_params,
        alpha,
        kernel,
        ground_params.as_ref(),
        &final_spec,
    )?;
    if best_energy.kinetic > 0.0 && best_energy.potential < 0.0 {
        let lambda = -best_energy.potential / (2.0 * best_energy.kinetic);
        let scaled = TrialParams {
            m: best_params.m,
            n: best_params.n * lambda,
            p: best_params.p,
            q: best_params.q * lambda,
        };
        if scaled.validate().is_ok() {
            if let Ok(b) = evaluate_energy(
                kind,
                &scaled,
                alpha,
                kernel,
                ground_params.as_ref(),
                &final_spec,
            ) {
                if b.total <= best_energy.total + 1e-14 {
                    best_params = scaled;
                    best_energy = b;
                }
            }
        }
    }

    let a = match kind {
        StateKind::Excited => Some(orthogonality_for(
            ground_params.as_ref().expect("checked above"),
            &best_params,
            alpha,
            &final_spec,
        )?),
        _ => None,
    };

    let boundary_active = [
        best_params.m <= 1e-6,
        best_params.n <= 1e-6,
        best_params.p <= 1e-6 || best_params.p >= 1.0 - 1e-6,
        best_params.q <= 1e-6,
    ];

    Ok(OptimizationResult {
        kind,
        alpha,
        best_params,
        best_energy,
        a,
        iterations: total_iterations,
        converged,
        boundary_active,
        restart_energies,
    })
}
