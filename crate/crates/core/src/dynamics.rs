//! Negative-gradient flow of the torsion energy on invariant 3-forms.
//!
//! The state is the coefficient vector c(t) of Ω(t) in the model's invariant
//! basis, evolving by ċ = Q_ν(c), the negative L²-gradient of 𝒟_ν. Along any
//! trajectory,
//!
//! ```text
//! dℋ/dt = −(5/9) 𝒟_ν,      d²ℋ/dt² = (5/9) ‖Q_ν‖²_{L²},
//! ```
//!
//! so ℋ is convex decreasing and ℋ(t) ≥ ℋ(0) − (5/9)𝒟_ν(0)·t. Shrinking
//! solitons Q(Ω) = μ₀Ω with μ₀ < 0 evolve by pure scaling,
//! Ω(t) = (1 + (2μ₀/3)t)^{3/2} Ω(0), and vanish at T_max = −3/(2μ₀).
//!
//! Integration uses the Dormand–Prince embedded RK5(4) pair with standard
//! proportional step control on a weighted RMS error norm. Steps are clamped
//! to land exactly on requested sample times so that trajectories can be
//! compared pointwise. If a trial state leaves the positive cone the step is
//! halved until either it fits or the step size underflows, in which case
//! the trajectory terminates with a `PositivityLost` status.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::decompose::decompose3;
use crate::error::Error;
use crate::form::PForm;
use crate::homogeneous::{EnergyReport, HomogeneousModel, InvariantFamily};
use crate::structure::{metric_from_form, PositiveThreeForm};

/// Residual above which a state is not accepted as (numerically) a soliton.
pub const SOLITON_RESIDUAL_TOL: f64 = 1e-8;

/// Collinearity factors smaller than this (relative to the flow-field scale)
/// are classified as steady rather than shrinking.
pub const SOLITON_STEADY_TOL: f64 = 1e-8;

/// Why a trajectory stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedTEnd,
    PositivityLost,
    StepUnderflow,
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::ReachedTEnd => "reached_t_end",
            Termination::PositivityLost => "positivity_lost",
            Termination::StepUnderflow => "step_underflow",
        }
    }
}

/// Per-sample diagnostics recorded along a trajectory.
#[derive(Debug, Clone)]
pub struct Monitor {
    pub energy: EnergyReport,
    pub tau0_sq: f64,
    pub tau1_sq: f64,
    pub tau2_sq: f64,
    pub tau3_sq: f64,
    /// ‖Q_ν‖²_{L²} at the sample.
    pub q_norm2: f64,
}

/// A computed trajectory: one entry per accepted step (including t = 0).
#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub monitors: Vec<Monitor>,
    pub termination: Termination,
}

impl FlowTrajectory {
    /// State recorded at exactly this time value (bitwise match; sample
    /// times passed through `FlowOptions::forced_times` are hit exactly).
    pub fn state_at(&self, t: f64) -> Option<&[f64]> {
        self.times
            .iter()
            .position(|&s| s == t)
            .map(|i| self.states[i].as_slice())
    }

    pub fn monitor_at(&self, t: f64) -> Option<&Monitor> {
        self.times
            .iter()
            .position(|&s| s == t)
            .map(|i| &self.monitors[i])
    }
}

/// Integration controls.
#[derive(Debug, Clone)]
pub struct FlowOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Times in (0, t_end) the integrator must land on exactly; they are
    /// merged with t_end and deduplicated.
    pub forced_times: Vec<f64>,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 200_000,
            forced_times: Vec::new(),
        }
    }
}

// Dormand–Prince RK5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 35.0 / 384.0 - 5179.0 / 57600.0;
const E3: f64 = 500.0 / 1113.0 - 7571.0 / 16695.0;
const E4: f64 = 125.0 / 192.0 - 393.0 / 640.0;
const E5: f64 = -2187.0 / 6784.0 + 92097.0 / 339200.0;
const E6: f64 = 11.0 / 84.0 - 187.0 / 2100.0;
const E7: f64 = -1.0 / 40.0;

enum StageOutcome {
    Value(DVector<f64>),
    LeftCone,
}

fn eval_rhs(
    model: &HomogeneousModel,
    nu: [f64; 4],
    y: &DVector<f64>,
) -> Result<StageOutcome, Error> {
    match model.gradient_q(y.as_slice(), nu) {
        Ok(q) => Ok(StageOutcome::Value(DVector::from_vec(q))),
        Err(Error::NotPositive { .. }) | Err(Error::DegenerateBasis { .. }) => {
            Ok(StageOutcome::LeftCone)
        }
        Err(e) => Err(e),
    }
}

fn monitor_state(
    model: &HomogeneousModel,
    nu: [f64; 4],
    y: &DVector<f64>,
    q: &DVector<f64>,
) -> Result<Monitor, Error> {
    let ctx = metric_from_form(&model.three_form(y.as_slice())?)?;
    let (energy, t) = model.energies_with_ctx(&ctx, nu)?;
    let gram = model.invariant_gram(&ctx);
    let q_norm2 = (&gram * q).dot(q);
    Ok(Monitor {
        energy,
        tau0_sq: t.tau0_sq,
        tau1_sq: t.tau1_sq,
        tau2_sq: t.tau2_sq,
        tau3_sq: t.tau3_sq,
        q_norm2,
    })
}

/// Integrate the flow from `start` over [0, t_end].
pub fn flow(
    model: &HomogeneousModel,
    start: &[f64],
    nu: [f64; 4],
    t_end: f64,
    opts: &FlowOptions,
) -> Result<FlowTrajectory, Error> {
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::Domain {
            context: format!("flow horizon must be a finite t_end ≥ 0, got {t_end}"),
        });
    }
    let mut targets: Vec<f64> = opts
        .forced_times
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t < t_end)
        .collect();
    targets.push(t_end);
    targets.sort_by(|a, b| a.partial_cmp(b).expect("finite sample times"));
    targets.dedup();

    let mut y = DVector::from_column_slice(start);
    let mut t = 0.0f64;
    let mut k1 = match eval_rhs(model, nu, &y)? {
        StageOutcome::Value(v) => v,
        StageOutcome::LeftCone => {
            // surface the positivity error for the start state itself
            model.gradient_q(start, nu)?;
            unreachable!("gradient_q failed above");
        }
    };

    let mut times = vec![0.0];
    let mut states = vec![y.as_slice().to_vec()];
    let mut monitors = vec![monitor_state(model, nu, &y, &k1)?];

    if t_end == 0.0 {
        return Ok(FlowTrajectory {
            times,
            states,
            monitors,
            termination: Termination::ReachedTEnd,
        });
    }

    let h_min = 1e-13 * t_end.max(1.0);
    let k1_scale = k1.amax().max(1e-12);
    let mut h = (0.01 * (1.0 + y.amax()) / k1_scale)
        .min(targets[0])
        .min(t_end / 10.0)
        .max(h_min);
    let mut target_idx = 0usize;
    let mut termination = None;

    for _ in 0..opts.max_steps {
        if target_idx >= targets.len() {
            termination = Some(Termination::ReachedTEnd);
            break;
        }
        let next_target = targets[target_idx];
        let clamped = h >= next_target - t;
        let h_eff = if clamped { next_target - t } else { h };

        // Dormand–Prince stages; a positivity failure rejects the step.
        let trial = |y_trial: &DVector<f64>| eval_rhs(model, nu, y_trial);
        let mut left_cone = false;
        let mut stages: Vec<DVector<f64>> = Vec::with_capacity(7);
        stages.push(k1.clone());
        let combos: [&[f64]; 5] = [
            &[A21],
            &[A31, A32],
            &[A41, A42, A43],
            &[A51, A52, A53, A54],
            &[A61, A62, A63, A64, A65],
        ];
        for weights in combos {
            let mut y_trial = y.clone();
            for (w, k) in weights.iter().zip(&stages) {
                y_trial += k * (h_eff * w);
            }
            match trial(&y_trial)? {
                StageOutcome::Value(k) => stages.push(k),
                StageOutcome::LeftCone => {
                    left_cone = true;
                    break;
                }
            }
        }
        let y5 = if left_cone {
            None
        } else {
            Some(
                &y + (&stages[0] * B1 + &stages[2] * B3 + &stages[3] * B4 + &stages[4] * B5
                    + &stages[5] * B6)
                    * h_eff,
            )
        };
        let k7 = match &y5 {
            Some(y5) => match trial(y5)? {
                StageOutcome::Value(k) => Some(k),
                StageOutcome::LeftCone => None,
            },
            None => None,
        };

        if y5.is_none() || k7.is_none() {
            // left the positive cone: halve and retry
            h = 0.5 * h_eff;
            if h < h_min {
                termination = Some(Termination::PositivityLost);
                break;
            }
            continue;
        }
        let y5 = y5.expect("checked above");
        let k7 = k7.expect("checked above");

        let err_vec = (&stages[0] * E1
            + &stages[2] * E3
            + &stages[3] * E4
            + &stages[4] * E5
            + &stages[5] * E6
            + &k7 * E7)
            * h_eff;
        let mut err_acc = 0.0;
        for i in 0..y.len() {
            let scale = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
            let e = err_vec[i] / scale;
            err_acc += e * e;
        }
        let err = (err_acc / y.len() as f64).sqrt();

        let factor = if err == 0.0 {
            5.0
        } else if err.is_finite() {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            0.2
        };

        if err.is_finite() && err <= 1.0 {
            t = if clamped { next_target } else { t + h_eff };
            y = y5;
            k1 = k7;
            times.push(t);
            states.push(y.as_slice().to_vec());
            monitors.push(monitor_state(model, nu, &y, &k1)?);
            if clamped {
                target_idx += 1;
            }
        }

        h = h_eff * factor;
        if h < h_min {
            termination = Some(Termination::StepUnderflow);
            break;
        }
    }

    Ok(FlowTrajectory {
        times,
        states,
        monitors,
        termination: termination.unwrap_or(Termination::StepUnderflow),
    })
}

/// Write a trajectory as CSV. One row per sample; the `termination` column
/// repeats the trajectory's final status so the schema stays fixed.
pub fn write_csv<W: std::io::Write>(traj: &FlowTrajectory, out: &mut W) -> std::io::Result<()> {
    let n = traj.states.first().map_or(0, Vec::len);
    let mut header = String::from("t");
    for i in 0..n {
        header.push_str(&format!(", c{i}"));
    }
    header.push_str(
        ", D0, D1, D2, D3, D_nu, H, S, C, Ct, Qnorm2, tau0sq, tau1sq, tau2sq, tau3sq, termination",
    );
    writeln!(out, "{header}")?;
    let label = traj.termination.label();
    for ((t, state), m) in traj.times.iter().zip(&traj.states).zip(&traj.monitors) {
        let mut row = format!("{t}");
        for c in state {
            row.push_str(&format!(", {c}"));
        }
        let e = &m.energy;
        for v in [
            e.d0, e.d1, e.d2, e.d3, e.d_nu, e.h, e.s, e.c, e.ct, m.q_norm2, m.tau0_sq, m.tau1_sq,
            m.tau2_sq, m.tau3_sq,
        ] {
            row.push_str(&format!(", {v}"));
        }
        row.push_str(&format!(", {label}"));
        writeln!(out, "{row}")?;
    }
    Ok(())
}

/// Extinction time of a soliton with collinearity factor `mu0`: finite for
/// shrinking solitons, infinite for steady ones.
pub fn extinction_time(mu0: f64) -> f64 {
    if mu0 < 0.0 {
        -1.5 / mu0
    } else {
        f64::INFINITY
    }
}

/// Closed-form scale factor of a soliton trajectory: a soliton start Ω₀ with
/// Q(Ω₀) = μ₀Ω₀ evolves as Ω(t) = scale(t)·Ω₀ with
/// scale(t) = (1 + (2μ₀/3)t)^{3/2}. Errors for t at or beyond the extinction
/// time.
pub fn soliton_scale(mu0: f64, t: f64) -> Result<f64, Error> {
    let base = 1.0 + 2.0 / 3.0 * mu0 * t;
    if base <= 0.0 {
        return Err(Error::Domain {
            context: format!(
                "time {t} is at or beyond the extinction time {}",
                extinction_time(mu0)
            ),
        });
    }
    Ok(base.powf(1.5))
}

/// Soliton classification of one state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolitonClass {
    Steady,
    Shrinking,
    NotSoliton,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolitonReport {
    /// L² collinearity factor ⟨Q,Ω⟩/⟨Ω,Ω⟩.
    pub mu_hat: f64,
    /// ‖Q − μ̂Ω‖ / ‖Q‖ in L².
    pub residual_rel: f64,
    pub classification: SolitonClass,
    /// Finite extinction time for shrinking solitons; absent otherwise.
    pub t_max: Option<f64>,
    /// Present when the state is rejected or unusual (e.g. positive μ̂).
    pub diagnostic: Option<String>,
}

/// Test whether the flow field at `coeffs` is collinear with the form.
pub fn soliton_check(
    model: &HomogeneousModel,
    coeffs: &[f64],
    nu: [f64; 4],
) -> Result<SolitonReport, Error> {
    let q = DVector::from_vec(model.gradient_q(coeffs, nu)?);
    let c = DVector::from_column_slice(coeffs);
    let ctx = metric_from_form(&model.three_form(coeffs)?)?;
    let gram = model.invariant_gram(&ctx);
    let qq = (&gram * &q).dot(&q);
    let cc = (&gram * &c).dot(&c);
    let qc = (&gram * &q).dot(&c);
    let mu_hat = qc / cc;
    let resid = &q - &c * mu_hat;
    let residual_rel = if qq > 0.0 {
        ((&gram * &resid).dot(&resid) / qq).sqrt()
    } else {
        0.0
    };
    let q_scale = (qq / cc).sqrt();
    let report = if residual_rel > SOLITON_RESIDUAL_TOL {
        SolitonReport {
            mu_hat,
            residual_rel,
            classification: SolitonClass::NotSoliton,
            t_max: None,
            diagnostic: Some(format!(
                "flow field is not collinear with the form (relative residual {residual_rel:.3e})"
            )),
        }
    } else if mu_hat.abs() <= SOLITON_STEADY_TOL * q_scale.max(1.0) {
        SolitonReport {
            mu_hat,
            residual_rel,
            classification: SolitonClass::Steady,
            t_max: None,
            diagnostic: None,
        }
    } else if mu_hat < 0.0 {
        SolitonReport {
            mu_hat,
            residual_rel,
            classification: SolitonClass::Shrinking,
            t_max: Some(extinction_time(mu_hat)),
            diagnostic: None,
        }
    } else {
        SolitonReport {
            mu_hat,
            residual_rel,
            classification: SolitonClass::NotSoliton,
            t_max: None,
            diagnostic: Some(format!(
                "collinearity factor is positive ({mu_hat:.6e}); \
                 the energy only admits steady or shrinking solitons"
            )),
        }
    };
    Ok(report)
}

/// Result of the constrained critical-point search.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalPoint {
    pub params: Vec<f64>,
    /// Raw Lagrange multiplier divided by the family's presentation scale.
    pub multiplier: f64,
    pub raw_multiplier: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Gradients of (𝒟_ν, ℋ) in family parameters by central differences with
/// one Richardson extrapolation; both functionals share the same evaluations.
fn family_gradients(
    fam: &InvariantFamily,
    params: &[f64],
    nu: [f64; 4],
) -> Result<(DVector<f64>, DVector<f64>), Error> {
    let k = params.len();
    let scale = 1.0 + params.iter().fold(0.0f64, |m, p| m.max(p.abs()));
    let h = 1e-5 * scale;
    let eval = |p: &[f64]| -> Result<(f64, f64), Error> {
        let r = fam.model.energies(&fam.coefficients(p)?, nu)?;
        Ok((r.d_nu, r.h))
    };
    let mut gd = DVector::zeros(k);
    let mut gh = DVector::zeros(k);
    let mut work = params.to_vec();
    for i in 0..k {
        let base = params[i];
        let mut central = |step: f64| -> Result<(f64, f64), Error> {
            work[i] = base + step;
            let plus = eval(&work)?;
            work[i] = base - step;
            let minus = eval(&work)?;
            work[i] = base;
            Ok((
                (plus.0 - minus.0) / (2.0 * step),
                (plus.1 - minus.1) / (2.0 * step),
            ))
        };
        let d1 = central(h)?;
        let d2 = central(0.5 * h)?;
        gd[i] = (4.0 * d2.0 - d1.0) / 3.0;
        gh[i] = (4.0 * d2.1 - d1.1) / 3.0;
    }
    Ok((gd, gh))
}

/// Newton search for a critical point of 𝒟_ν on the level set ℋ = 1 inside a
/// parameter family: solves ∇𝒟_ν = μ∇ℋ, ℋ = 1 for (params, μ).
pub fn constrained_critical(
    fam: &InvariantFamily,
    start_params: &[f64],
    nu: [f64; 4],
) -> Result<CriticalPoint, Error> {
    let k = fam.param_dim();
    if start_params.len() != k {
        return Err(Error::Dimension {
            context: format!("expected {k} parameters, got {}", start_params.len()),
        });
    }
    let residual = |p: &[f64], mu: f64| -> Result<(DVector<f64>, f64), Error> {
        let (gd, gh) = family_gradients(fam, p, nu)?;
        let h_val = fam.model.energies(&fam.coefficients(p)?, nu)?.h;
        let mut f = DVector::zeros(k + 1);
        for i in 0..k {
            f[i] = gd[i] - mu * gh[i];
        }
        f[k] = h_val - 1.0;
        Ok((f, gd.amax().max(1.0)))
    };

    let mut p = start_params.to_vec();
    // initialize μ by least squares of ∇𝒟 against ∇ℋ
    let (gd0, gh0) = family_gradients(fam, &p, nu)?;
    let mut mu = gd0.dot(&gh0) / gh0.dot(&gh0).max(1e-300);

    let (mut f, mut fscale) = residual(&p, mu)?;
    let mut last_step = f64::INFINITY;
    for iter in 0..100 {
        if f.amax() <= 1e-10 * fscale {
            return Ok(CriticalPoint {
                params: p,
                multiplier: mu / fam.lagrange_scale,
                raw_multiplier: mu,
                iterations: iter,
                residual: f.amax(),
            });
        }
        // Jacobian by central differences in (params, μ); the μ-column is
        // analytic: ∂F/∂μ = (−∇ℋ; 0).
        let mut jac = DMatrix::zeros(k + 1, k + 1);
        for j in 0..k {
            let hj = 1e-6 * (1.0 + p[j].abs());
            let mut pp = p.clone();
            pp[j] += hj;
            let (fp, _) = residual(&pp, mu)?;
            pp[j] = p[j] - hj;
            let (fm, _) = residual(&pp, mu)?;
            for i in 0..k + 1 {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * hj);
            }
        }
        let (_, gh) = family_gradients(fam, &p, nu)?;
        for i in 0..k {
            jac[(i, k)] = -gh[i];
        }
        let delta = jac.lu().solve(&f).ok_or(Error::NoConvergence {
            iterations: iter,
            last_step,
        })?;
        // backtrack if the full step leaves the admissible region
        let mut lambda = 1.0f64;
        let mut moved = false;
        for _ in 0..8 {
            let cand: Vec<f64> = (0..k).map(|i| p[i] - lambda * delta[i]).collect();
            let cand_mu = mu - lambda * delta[k];
            match residual(&cand, cand_mu) {
                Ok((fc, sc)) => {
                    p = cand;
                    mu = cand_mu;
                    f = fc;
                    fscale = sc;
                    last_step = lambda * delta.amax();
                    moved = true;
                    break;
                }
                Err(_) => lambda *= 0.5,
            }
        }
        if !moved {
            return Err(Error::NoConvergence {
                iterations: iter,
                last_step,
            });
        }
        if last_step <= 1e-12 * (1.0 + p.iter().fold(0.0f64, |m, x| m.max(x.abs()))) {
            return Ok(CriticalPoint {
                params: p,
                multiplier: mu / fam.lagrange_scale,
                raw_multiplier: mu,
                iterations: 100,
                residual: f.amax(),
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: 100,
        last_step,
    })
}

/// Uniform sample grid 0 < t ≤ t_end with n intervals.
pub fn uniform_grid(t_end: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|j| t_end * j as f64 / n as f64).collect()
}

/// Result of comparing a flow against its parabolic rescaling.
#[derive(Debug, Clone, Serialize)]
pub struct RescalingReport {
    pub lambda: f64,
    pub max_rel_deviation: f64,
}

/// Verify the scaling symmetry of the flow: if t ↦ Ω(t) is a trajectory then
/// so is t ↦ λ·Ω(λ^{−2/3} t). Runs both flows with matched sample grids and
/// returns the worst relative state deviation.
pub fn rescaling_check(
    model: &HomogeneousModel,
    start: &[f64],
    nu: [f64; 4],
    t_end: f64,
    lambda: f64,
    samples: usize,
) -> Result<RescalingReport, Error> {
    let base_grid = uniform_grid(t_end, samples);
    let mut opts = FlowOptions {
        forced_times: base_grid.clone(),
        ..FlowOptions::default()
    };
    let base = flow(model, start, nu, t_end, &opts)?;

    let time_scale = lambda.powf(2.0 / 3.0);
    let scaled_grid: Vec<f64> = base_grid.iter().map(|t| t * time_scale).collect();
    let scaled_start: Vec<f64> = start.iter().map(|c| c * lambda).collect();
    opts.forced_times = scaled_grid.clone();
    let scaled = flow(model, &scaled_start, nu, t_end * time_scale, &opts)?;

    let mut worst = 0.0f64;
    for (tb, ts) in base_grid.iter().zip(&scaled_grid) {
        let (Some(sb), Some(ss)) = (base.state_at(*tb), scaled.state_at(*ts)) else {
            return Err(Error::Domain {
                context: format!("trajectory did not reach sample time {tb}"),
            });
        };
        let scale = sb.iter().fold(0.0f64, |m, c| m.max(c.abs())) * lambda;
        for (b, s) in sb.iter().zip(ss) {
            worst = worst.max((lambda * b - s).abs() / scale.max(1e-300));
        }
    }
    Ok(RescalingReport {
        lambda,
        max_rel_deviation: worst,
    })
}

/// Finite-difference validation of the monotonicity structure along a flow.
#[derive(Debug, Clone, Serialize)]
pub struct HitchinReport {
    /// Worst relative error of the discrete dℋ/dt against −(5/9)𝒟_ν.
    pub max_first_derivative_rel_err: f64,
    /// Worst relative error of the discrete d²ℋ/dt² against (5/9)‖Q‖².
    pub max_second_derivative_rel_err: f64,
    /// ℋ(t) ≥ ℋ(0) − (5/9)𝒟_ν(0)·t at every sample.
    pub lower_bound_ok: bool,
}

/// Run a flow sampled on a uniform grid and compare discrete time derivatives
/// of ℋ with their closed forms, using five-point central stencils at
/// interior grid points.
pub fn hitchin_derivative_check(
    model: &HomogeneousModel,
    start: &[f64],
    nu: [f64; 4],
    t_end: f64,
    samples: usize,
) -> Result<HitchinReport, Error> {
    assert!(samples >= 5, "need at least five samples for the stencils");
    let grid = uniform_grid(t_end, samples);
    // The stencils difference across steps of size t_end/samples, which
    // amplifies integration error by ~1/Δt; integrate well below the
    // stencils' own truncation so the comparison measures the identities,
    // not the integrator.
    let opts = FlowOptions {
        rtol: 1e-12,
        atol: 1e-14,
        forced_times: grid.clone(),
        ..FlowOptions::default()
    };
    let traj = flow(model, start, nu, t_end, &opts)?;
    if traj.termination != Termination::ReachedTEnd {
        return Err(Error::Domain {
            context: format!(
                "flow terminated early ({}) before the derivative check window",
                traj.termination.label()
            ),
        });
    }
    // gather (H, D_nu, ‖Q‖²) on the uniform grid including t = 0
    let mut hs = Vec::with_capacity(samples + 1);
    let mut ds = Vec::with_capacity(samples + 1);
    let mut qs = Vec::with_capacity(samples + 1);
    let m0 = &traj.monitors[0];
    hs.push(m0.energy.h);
    ds.push(m0.energy.d_nu);
    qs.push(m0.q_norm2);
    for t in &grid {
        let m = traj.monitor_at(*t).ok_or_else(|| Error::Domain {
            context: format!("missing sample at forced time {t}"),
        })?;
        hs.push(m.energy.h);
        ds.push(m.energy.d_nu);
        qs.push(m.q_norm2);
    }
    let dt = t_end / samples as f64;
    let n = hs.len();
    let d1_scale = ds.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let q_scale = qs.iter().fold(0.0f64, |m, q| m.max(q.abs()));
    let mut worst1 = 0.0f64;
    let mut worst2 = 0.0f64;
    for j in 2..n - 2 {
        let d1 = (hs[j - 2] - 8.0 * hs[j - 1] + 8.0 * hs[j + 1] - hs[j + 2]) / (12.0 * dt);
        let target1 = -(5.0 / 9.0) * ds[j];
        let denom1 = target1.abs().max(5.0 / 9.0 * 1e-8 * d1_scale).max(1e-300);
        worst1 = worst1.max((d1 - target1).abs() / denom1);

        let d2 = (-hs[j - 2] + 16.0 * hs[j - 1] - 30.0 * hs[j] + 16.0 * hs[j + 1] - hs[j + 2])
            / (12.0 * dt * dt);
        let target2 = 5.0 / 9.0 * qs[j];
        let denom2 = target2.abs().max(5.0 / 9.0 * 1e-8 * q_scale).max(1e-300);
        worst2 = worst2.max((d2 - target2).abs() / denom2);
    }
    let slack = 1e-9 * hs[0].abs();
    let mut lower_bound_ok = true;
    for (j, h_val) in hs.iter().enumerate() {
        let t = dt * j as f64;
        if *h_val < hs[0] - (5.0 / 9.0) * ds[0] * t - slack {
            lower_bound_ok = false;
        }
    }
    Ok(HitchinReport {
        max_first_derivative_rel_err: worst1,
        max_second_derivative_rel_err: worst2,
        lower_bound_ok,
    })
}

/// Pointwise type decomposition of a 3-form velocity at a positive form:
/// v = 3fΩ + ⋆(α∧Ω) + γ with f scalar, α a 1-form and γ in Λ³₂₇.
#[derive(Debug, Clone)]
pub struct DeformationForms {
    pub scalar_part: f64,
    pub vector_part: PForm,
    pub traceless_part: PForm,
}

pub fn deformation_forms(
    ctx: &PositiveThreeForm,
    velocity: &PForm,
) -> Result<DeformationForms, Error> {
    let dec = decompose3(ctx, velocity)?;
    let f = ctx.inner(velocity, ctx.omega())? / 21.0;
    // α from the Λ³₇ part: ⋆(α∧Ω) with α = Σ aᵢeⁱ
    let mut cols = Vec::with_capacity(7);
    for i in 0..7 {
        let mut e = PForm::zero(1);
        e.coeffs_mut()[i] = 1.0;
        cols.push(ctx.hodge(&e.wedge(ctx.omega())?));
    }
    let n = cols.len();
    let mut gram = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    for i in 0..n {
        for j in i..n {
            let v = ctx.inner(&cols[i], &cols[j])?;
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
        rhs[i] = ctx.inner(&cols[i], &dec.part7)?;
    }
    let alpha = gram.lu().solve(&rhs).ok_or_else(|| Error::Dimension {
        context: "singular system for the vector part of a deformation".to_string(),
    })?;
    Ok(DeformationForms {
        scalar_part: f,
        vector_part: PForm::new(1, alpha.as_slice().to_vec())?,
        traceless_part: dec.part27,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{squashed_family, squashed_s7};
    use crate::standard::standard_form;

    const NU: [f64; 4] = [7.0, 84.0, 1.0, 1.0];

    #[test]
    fn integrator_solves_a_linear_problem_exactly_enough() {
        // dℋ/dt structure aside, validate the raw stepper on ẏ = Qy with a
        // known solution by flowing the soliton itself (pure scaling).
        let fam = squashed_family();
        let c0 = fam.coefficients(&[1.0, 1.0]).unwrap();
        let t_end = 0.5 * 1.0 / 80.0;
        let grid = uniform_grid(t_end, 8);
        let opts = FlowOptions {
            forced_times: grid.clone(),
            ..FlowOptions::default()
        };
        let traj = flow(&fam.model, &c0, NU, t_end, &opts).unwrap();
        assert_eq!(traj.termination, Termination::ReachedTEnd);
        for t in &grid {
            let s = soliton_scale(-120.0, *t).unwrap();
            let state = traj.state_at(*t).unwrap();
            for (c, c_start) in state.iter().zip(&c0) {
                assert!(
                    (c - s * c_start).abs() < 1e-7 * s,
                    "t={t}: {c} vs {}",
                    s * c_start
                );
            }
        }
    }

    #[test]
    fn soliton_report_for_squashed_critical_point() {
        let fam = squashed_family();
        let c = fam.coefficients(&[1.0, 1.0]).unwrap();
        let rep = soliton_check(&fam.model, &c, NU).unwrap();
        assert_eq!(rep.classification, SolitonClass::Shrinking);
        assert!((rep.mu_hat + 120.0).abs() < 1e-6);
        assert!(rep.residual_rel < 1e-8);
        let t_max = rep.t_max.unwrap();
        assert!((t_max - 1.0 / 80.0).abs() < 1e-9);
    }

    #[test]
    fn generic_squashed_point_is_not_a_soliton() {
        let fam = squashed_family();
        let c = fam.coefficients(&[1.2, 0.9]).unwrap();
        let rep = soliton_check(&fam.model, &c, NU).unwrap();
        assert_eq!(rep.classification, SolitonClass::NotSoliton);
        assert!(rep.diagnostic.is_some());
    }

    #[test]
    fn newton_finds_the_round_point() {
        let fam = squashed_family();
        let cp = constrained_critical(&fam, &[2.0, 0.5], NU).unwrap();
        assert!((cp.params[0] - 1.0).abs() < 1e-8, "a = {}", cp.params[0]);
        assert!((cp.params[1] - 1.0).abs() < 1e-8, "b = {}", cp.params[1]);
        assert!((cp.multiplier - 6.0).abs() < 1e-8, "mu = {}", cp.multiplier);
    }

    #[test]
    fn soliton_scale_domain_error_at_extinction() {
        assert!(soliton_scale(-120.0, 1.0 / 80.0).is_err());
        assert!(soliton_scale(-120.0, 0.9 / 80.0).is_ok());
        assert_eq!(extinction_time(0.0), f64::INFINITY);
    }

    #[test]
    fn csv_has_fixed_header_and_is_deterministic() {
        let fam = squashed_family();
        let c0 = fam.coefficients(&[1.0, 1.0]).unwrap();
        let opts = FlowOptions::default();
        let run = || {
            let traj = flow(&fam.model, &c0, NU, 1e-3, &opts).unwrap();
            let mut buf = Vec::new();
            write_csv(&traj, &mut buf).unwrap();
            String::from_utf8(buf).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
        let header = a.lines().next().unwrap();
        assert_eq!(
            header,
            "t, c0, c1, D0, D1, D2, D3, D_nu, H, S, C, Ct, Qnorm2, tau0sq, tau1sq, tau2sq, \
             tau3sq, termination"
        );
        assert!(a.lines().nth(1).unwrap().ends_with("reached_t_end"));
    }

    #[test]
    fn deformation_forms_reconstruct_the_velocity() {
        let ctx = crate::structure::metric_from_form(&standard_form()).unwrap();
        let v = PForm::monomial(&[1, 2, 4])
            .add_scaled(&PForm::monomial(&[3, 5, 6]), -0.7)
            .add_scaled(&standard_form(), 0.3);
        let d = deformation_forms(&ctx, &v).unwrap();
        let alpha_wedge = d.vector_part.wedge(ctx.omega()).unwrap();
        let rebuilt = ctx
            .omega()
            .scale(3.0 * d.scalar_part)
            .add(&ctx.hodge(&alpha_wedge))
            .add(&d.traceless_part);
        assert!(rebuilt.sub(&v).max_abs() < 1e-10);
    }

    #[test]
    fn flow_from_collapsing_start_reports_positivity_loss() {
        let m = squashed_s7();
        // b → 0 along the flow for this strongly squashed start; integrate
        // past the collapse and expect a clean positivity termination
        let fam = squashed_family();
        let c0 = fam.coefficients(&[1.0, 1.0]).unwrap();
        let traj = flow(&m, &c0, NU, 0.2, &FlowOptions::default()).unwrap();
        assert_eq!(traj.termination, Termination::PositivityLost);
        let last = traj.times.last().unwrap();
        assert!(*last < 0.2, "collapsed before t_end, got {last}");
        assert!(*last > 0.011, "should get close to 1/80, got {last}");
    }
}
