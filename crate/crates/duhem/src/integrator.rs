//! Fixed-step integration of the branch dynamics in the input domain.
//!
//! Rate independence lets the switched ODE be rewritten per monotone input
//! stretch as `dg/du = f_branch(u, g)`, which removes the input rate from
//! the numerics entirely. Everything here integrates that equation with
//! classical RK4 on a uniform grid: deterministic, replayable, and exact
//! across input reparameterizations that share the grid. Time is recovered
//! afterwards by inverting the piecewise-linear input.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{Branch, CurveSpec, DuhemModel};
use crate::signals::{monotone_partition, InputSignal, SweepDirection};

/// Outputs beyond this magnitude count as divergence. Models failing the
/// convergence conditions genuinely blow up; the bound converts overflow
/// into a verdict.
pub const DIVERGENCE_SENTINEL: f64 = 1e9;

/// A branch solution sampled against the instantaneous input value:
/// `samples[i] = (upsilon_i, gamma_i)` with `upsilon` strictly monotone in
/// either direction (a single sample for an empty sweep).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchTrajectory {
    pub branch: Branch,
    pub samples: Vec<(f64, f64)>,
    /// Signed grid spacing actually used.
    pub step: f64,
}

impl BranchTrajectory {
    pub fn start(&self) -> (f64, f64) {
        self.samples[0]
    }

    pub fn end(&self) -> (f64, f64) {
        self.samples[self.samples.len() - 1]
    }

    pub fn upsilon_range(&self) -> (f64, f64) {
        let a = self.samples[0].0;
        let b = self.samples[self.samples.len() - 1].0;
        (a.min(b), a.max(b))
    }

    /// Linear interpolation of the sampled solution at `upsilon` (clamped to
    /// the sampled range).
    pub fn value_at(&self, upsilon: f64) -> f64 {
        let s = &self.samples;
        if s.len() == 1 {
            return s[0].1;
        }
        let ascending = s[s.len() - 1].0 >= s[0].0;
        let idx = if ascending {
            s.partition_point(|&(u, _)| u <= upsilon)
        } else {
            s.partition_point(|&(u, _)| u >= upsilon)
        };
        if idx == 0 {
            return s[0].1;
        }
        if idx == s.len() {
            return s[s.len() - 1].1;
        }
        let (u0, g0) = s[idx - 1];
        let (u1, g1) = s[idx];
        if u1 == u0 {
            return g0;
        }
        g0 + (g1 - g0) * (upsilon - u0) / (u1 - u0)
    }
}

/// Branch tag for a time-domain sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchLabel {
    Rising,
    Falling,
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSample {
    pub t: f64,
    pub u: f64,
    pub y: f64,
    /// Branch active on the segment that produced this sample; the first
    /// sample carries the first segment's branch.
    pub branch: BranchLabel,
}

/// A time-domain solution `(t, u(t), y(t))` with strictly increasing times.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TimeTrajectory {
    pub samples: Vec<TimeSample>,
}

impl TimeTrajectory {
    pub fn final_output(&self) -> Option<f64> {
        self.samples.last().map(|s| s.y)
    }

    /// Output sampled at time `t` by linear interpolation.
    pub fn output_at(&self, t: f64) -> Option<f64> {
        let s = &self.samples;
        if s.is_empty() || t < s[0].t || t > s[s.len() - 1].t {
            return None;
        }
        let idx = s.partition_point(|sample| sample.t <= t);
        if idx == 0 {
            return Some(s[0].y);
        }
        if idx == s.len() {
            return Some(s[s.len() - 1].y);
        }
        let a = s[idx - 1];
        let b = s[idx];
        Some(a.y + (b.y - a.y) * (t - a.t) / (b.t - a.t))
    }
}

#[derive(Debug, Error)]
pub enum IntegratorError {
    #[error("state left the finite range at upsilon = {upsilon} (branch {})", branch.index())]
    NonFiniteState {
        branch: Branch,
        upsilon: f64,
        partial: BranchTrajectory,
    },
}

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("state left the finite range at t = {t}")]
    NonFinite { t: f64, partial: TimeTrajectory },
}

/// Search direction for [`extend_to_crossing`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

/// A located intersection between an integrated solution and a target curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub upsilon: f64,
    pub gamma: f64,
}

fn rk4_step(model: &DuhemModel, branch: Branch, upsilon: f64, gamma: f64, du: f64) -> f64 {
    let k1 = model.eval_field(branch, upsilon, gamma);
    let k2 = model.eval_field(branch, upsilon + 0.5 * du, gamma + 0.5 * du * k1);
    let k3 = model.eval_field(branch, upsilon + 0.5 * du, gamma + 0.5 * du * k2);
    let k4 = model.eval_field(branch, upsilon + du, gamma + du * k3);
    gamma + du * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
}

fn state_ok(gamma: f64) -> bool {
    gamma.is_finite() && gamma.abs() <= DIVERGENCE_SENTINEL
}

/// Integrates `dg/du = f_branch(u, g)` from `(upsilon_from, gamma_0)` to
/// `upsilon_to` (either direction) with RK4 on a uniform grid of spacing at
/// most `h`. The final sample lands exactly on `upsilon_to`.
pub fn sweep(
    model: &DuhemModel,
    branch: Branch,
    upsilon_from: f64,
    upsilon_to: f64,
    gamma_0: f64,
    h: f64,
) -> Result<BranchTrajectory, IntegratorError> {
    assert!(h > 0.0, "step must be positive");
    let span = upsilon_to - upsilon_from;
    if span == 0.0 {
        return Ok(BranchTrajectory {
            branch,
            samples: vec![(upsilon_from, gamma_0)],
            step: 0.0,
        });
    }
    let steps = (span.abs() / h).ceil() as usize;
    let du = span / steps as f64;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push((upsilon_from, gamma_0));
    let mut gamma = gamma_0;
    for i in 0..steps {
        let u = upsilon_from + i as f64 * du;
        let u_next = if i + 1 == steps {
            upsilon_to
        } else {
            upsilon_from + (i + 1) as f64 * du
        };
        gamma = rk4_step(model, branch, u, gamma, u_next - u);
        if !state_ok(gamma) {
            return Err(IntegratorError::NonFiniteState {
                branch,
                upsilon: u_next,
                partial: BranchTrajectory {
                    branch,
                    samples,
                    step: du,
                },
            });
        }
        samples.push((u_next, gamma));
    }
    Ok(BranchTrajectory {
        branch,
        samples,
        step: du,
    })
}

/// Runs the full switched dynamics for input `signal` over `[0, horizon]`:
/// the signal splits into monotone sweeps, each sweep integrates its branch
/// in the input domain chaining the final output into the next sweep, and
/// samples map back to time through the piecewise-linear input.
pub fn simulate(
    model: &DuhemModel,
    signal: &InputSignal,
    y_0: f64,
    horizon: f64,
    h: f64,
) -> Result<TimeTrajectory, SimulationError> {
    assert!(horizon > 0.0, "horizon must be positive");
    let sweeps = monotone_partition(signal, horizon);
    let mut samples: Vec<TimeSample> = Vec::new();
    let mut y = y_0;

    let first_label = label_of(sweeps[0].direction);
    samples.push(TimeSample {
        t: sweeps[0].t_start,
        u: sweeps[0].upsilon_start,
        y,
        branch: first_label,
    });

    for segment in &sweeps {
        match segment.direction {
            SweepDirection::Stationary => {
                // zero input slope: output holds whichever branch applies
                samples.push(TimeSample {
                    t: segment.t_end,
                    u: segment.upsilon_end,
                    y,
                    branch: BranchLabel::Stationary,
                });
            }
            SweepDirection::Increasing | SweepDirection::Decreasing => {
                let branch = if segment.direction == SweepDirection::Increasing {
                    Branch::Rising
                } else {
                    Branch::Falling
                };
                let label = label_of(segment.direction);
                let result = sweep(
                    model,
                    branch,
                    segment.upsilon_start,
                    segment.upsilon_end,
                    y,
                    h,
                );
                let (trajectory, failed_at) = match result {
                    Ok(t) => (t, None),
                    Err(IntegratorError::NonFiniteState {
                        upsilon, partial, ..
                    }) => (partial, Some(upsilon)),
                };
                for &(u, g) in trajectory.samples.iter().skip(1) {
                    samples.push(TimeSample {
                        t: signal.time_of_level(segment, u),
                        u,
                        y: g,
                        branch: label,
                    });
                }
                if let Some(upsilon) = failed_at {
                    let t = signal.time_of_level(segment, upsilon);
                    return Err(SimulationError::NonFinite {
                        t,
                        partial: TimeTrajectory { samples },
                    });
                }
                y = trajectory.end().1;
            }
        }
    }
    Ok(TimeTrajectory { samples })
}

fn label_of(direction: SweepDirection) -> BranchLabel {
    match direction {
        SweepDirection::Increasing => BranchLabel::Rising,
        SweepDirection::Decreasing => BranchLabel::Falling,
        SweepDirection::Stationary => BranchLabel::Stationary,
    }
}

/// Steps used to re-integrate the bracketing interval before bisecting a
/// crossing, bounding the discretization error of its location.
const REFINE_SUBDIVISIONS: usize = 64;
const CROSSING_TOL_UPSILON: f64 = 1e-8;

/// Integrates the branch dynamics from `(upsilon_start, gamma_start)` toward
/// `upsilon_limit`, watching `g(u) = gamma(u) - target(u)`. The first sign
/// change is refined by bisection on the re-integrated bracketing step and
/// returned; `None` means the limit was reached without a crossing.
pub fn extend_to_crossing(
    model: &DuhemModel,
    branch: Branch,
    upsilon_start: f64,
    gamma_start: f64,
    target: &CurveSpec,
    direction: Direction,
    upsilon_limit: f64,
    h: f64,
) -> Result<Option<Crossing>, IntegratorError> {
    assert!(h > 0.0, "step must be positive");
    match direction {
        Direction::Forward => assert!(
            upsilon_limit > upsilon_start,
            "limit must lie beyond the start in the search direction"
        ),
        Direction::Backward => assert!(
            upsilon_limit < upsilon_start,
            "limit must lie beyond the start in the search direction"
        ),
    }
    let residual_start = gamma_start - target.eval(upsilon_start);
    if residual_start == 0.0 {
        return Ok(Some(Crossing {
            upsilon: upsilon_start,
            gamma: gamma_start,
        }));
    }

    let span = upsilon_limit - upsilon_start;
    let steps = (span.abs() / h).ceil() as usize;
    let du = span / steps as f64;
    let mut u = upsilon_start;
    let mut gamma = gamma_start;
    let mut residual = residual_start;
    for i in 0..steps {
        let u_next = if i + 1 == steps {
            upsilon_limit
        } else {
            upsilon_start + (i + 1) as f64 * du
        };
        let gamma_next = rk4_step(model, branch, u, gamma, u_next - u);
        if !state_ok(gamma_next) {
            return Err(IntegratorError::NonFiniteState {
                branch,
                upsilon: u_next,
                partial: BranchTrajectory {
                    branch,
                    samples: vec![(upsilon_start, gamma_start), (u, gamma)],
                    step: du,
                },
            });
        }
        let residual_next = gamma_next - target.eval(u_next);
        if residual_next == 0.0 {
            return Ok(Some(Crossing {
                upsilon: u_next,
                gamma: gamma_next,
            }));
        }
        if residual * residual_next < 0.0 {
            return Ok(Some(refine_crossing(model, branch, target, u, gamma, u_next)));
        }
        u = u_next;
        gamma = gamma_next;
        residual = residual_next;
    }
    Ok(None)
}

/// Re-integrates `[u_lo, u_hi]` at a finer step, locates the sign-changing
/// subinterval, and bisects on upsilon inside it.
fn refine_crossing(
    model: &DuhemModel,
    branch: Branch,
    target: &CurveSpec,
    u_lo: f64,
    gamma_lo: f64,
    u_hi: f64,
) -> Crossing {
    let fine = (u_hi - u_lo) / REFINE_SUBDIVISIONS as f64;
    let mut a = u_lo;
    let mut gamma_a = gamma_lo;
    let mut residual_a = gamma_a - target.eval(a);
    let mut b = u_hi;
    for i in 0..REFINE_SUBDIVISIONS {
        let next = if i + 1 == REFINE_SUBDIVISIONS {
            u_hi
        } else {
            u_lo + (i + 1) as f64 * fine
        };
        let gamma_next = rk4_step(model, branch, a, gamma_a, next - a);
        let residual_next = gamma_next - target.eval(next);
        if residual_a * residual_next <= 0.0 {
            b = next;
            break;
        }
        a = next;
        gamma_a = gamma_next;
        residual_a = residual_next;
    }
    // bisection on upsilon; each probe integrates a single short RK4 step
    // from the live left anchor, so the state stays consistent
    while (b - a).abs() > CROSSING_TOL_UPSILON {
        let mid = 0.5 * (a + b);
        let gamma_mid = rk4_step(model, branch, a, gamma_a, mid - a);
        let residual_mid = gamma_mid - target.eval(mid);
        if residual_a * residual_mid <= 0.0 {
            b = mid;
        } else {
            a = mid;
            gamma_a = gamma_mid;
            residual_a = residual_mid;
        }
    }
    let upsilon = 0.5 * (a + b);
    let gamma = rk4_step(model, branch, a, gamma_a, upsilon - a);
    Crossing { upsilon, gamma }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::CurveSpec;
    use crate::signals::{build_periodic_input, PeriodicInputSpec};

    fn constant_field(k: f64) -> DuhemModel {
        // beta = zeta = 0 makes both branches the constant alpha
        DuhemModel::bouc_wen(k, 0.0, 0.0, 1.0).unwrap()
    }

    fn relaxation_toward(m: f64) -> DuhemModel {
        DuhemModel::curve_chasing(
            CurveSpec::polynomial(&[m]),
            CurveSpec::polynomial(&[-m]),
            1.0,
        )
        .unwrap()
    }

    fn cubic_default() -> DuhemModel {
        let c1 = CurveSpec::polynomial(&[0.0, 1.0, 0.0, 0.04]);
        let c2 = c1.negated();
        DuhemModel::curve_chasing(c1, c2, 1.0).unwrap()
    }

    #[test]
    fn sweep_constant_field_is_exact() {
        let m = constant_field(2.5);
        let traj = sweep(&m, Branch::Rising, -1.0, 3.0, 0.25, 0.1).unwrap();
        let (u_end, g_end) = traj.end();
        assert_eq!(u_end, 3.0);
        assert!((g_end - (0.25 + 2.5 * 4.0)).abs() < 1e-12);
        for w in traj.samples.windows(2) {
            assert!(w[1].0 > w[0].0);
        }
    }

    #[test]
    fn sweep_linear_ode_matches_closed_form() {
        // dg/du = m - g has solution m + (g0 - m) exp(-(u - u0))
        let target = 2.0;
        let m = relaxation_toward(target);
        let g0 = -1.0;
        let traj = sweep(&m, Branch::Rising, 0.0, 2.0, g0, 0.01).unwrap();
        let exact = target + (g0 - target) * (-2.0f64).exp();
        assert!((traj.end().1 - exact).abs() < 1e-9);
    }

    #[test]
    fn sweep_empty_span_returns_initial_state() {
        let m = constant_field(1.0);
        let traj = sweep(&m, Branch::Falling, 0.7, 0.7, 0.3, 0.1).unwrap();
        assert_eq!(traj.samples, vec![(0.7, 0.3)]);
    }

    #[test]
    fn sweep_backward_direction() {
        let m = constant_field(1.0);
        let traj = sweep(&m, Branch::Rising, 2.0, -1.0, 0.0, 0.1).unwrap();
        assert_eq!(traj.end().0, -1.0);
        assert!((traj.end().1 - (-3.0)).abs() < 1e-12);
        for w in traj.samples.windows(2) {
            assert!(w[1].0 < w[0].0);
        }
    }

    #[test]
    fn sweep_divergence_reports_partial_trajectory() {
        // dg/du = g starting huge: overflows the sentinel quickly
        let m = DuhemModel::bouc_wen(0.0, -1.0, 0.0, 1.0).unwrap();
        let err = sweep(&m, Branch::Rising, 0.0, 100.0, 1e8, 0.5).unwrap_err();
        match err {
            IntegratorError::NonFiniteState {
                upsilon, partial, ..
            } => {
                assert!(upsilon > 0.0);
                assert!(!partial.samples.is_empty());
                assert!(partial.samples.iter().all(|&(_, g)| g.abs() <= 1e9));
            }
        }
    }

    #[test]
    fn trajectory_interpolation() {
        let m = relaxation_toward(1.0);
        let traj = sweep(&m, Branch::Rising, 0.0, 1.0, 0.0, 0.25).unwrap();
        for &(u, g) in &traj.samples {
            assert_eq!(traj.value_at(u), g);
        }
        let mid = traj.value_at(0.125);
        assert!(mid > traj.value_at(0.0) && mid < traj.value_at(0.25));
    }

    #[test]
    fn simulate_constant_input_holds_initial_output() {
        let m = cubic_default();
        let s = crate::signals::InputSignal::new(vec![(0.0, 0.5), (1.0, 0.5)]).unwrap();
        let traj = simulate(&m, &s, 0.3, 5.0, 0.01).unwrap();
        assert!(traj.samples.iter().all(|sample| sample.y == 0.3));
        assert!(traj
            .samples
            .iter()
            .all(|sample| sample.branch == BranchLabel::Stationary));
    }

    #[test]
    fn simulate_times_strictly_increase_and_match_input() {
        let m = DuhemModel::bouc_wen(1.0, 1.0, 2.0, 1.0).unwrap();
        let s = build_periodic_input(&PeriodicInputSpec {
            upsilon_min: -1.0,
            upsilon_max: 1.0,
            period: 2.0,
            t_peak: 1.0,
        })
        .unwrap();
        let traj = simulate(&m, &s, 0.0, 4.0, 0.01).unwrap();
        for w in traj.samples.windows(2) {
            assert!(w[1].t > w[0].t);
        }
        for sample in &traj.samples {
            assert!((s.value_at(sample.t) - sample.u).abs() < 1e-12);
        }
        assert_eq!(traj.samples[traj.samples.len() - 1].t, 4.0);
    }

    #[test]
    fn simulate_divergent_model_fails_with_time() {
        let m = DuhemModel::bouc_wen(0.1, 0.1, -0.2, 1.0).unwrap();
        let s = build_periodic_input(&PeriodicInputSpec {
            upsilon_min: -1.0,
            upsilon_max: 1.0,
            period: 2.0,
            t_peak: 1.0,
        })
        .unwrap();
        match simulate(&m, &s, 0.1, 400.0, 0.001) {
            Err(SimulationError::NonFinite { t, partial }) => {
                assert!(t > 0.0 && t < 400.0);
                assert!(!partial.samples.is_empty());
            }
            Ok(_) => panic!("divergent Bouc-Wen finished without tripping the sentinel"),
        }
    }

    #[test]
    fn crossing_starting_on_target_is_trivial() {
        let m = cubic_default();
        let c2 = m.level_curve(Branch::Falling).unwrap().clone();
        let gamma = c2.eval(1.5);
        let crossing = extend_to_crossing(
            &m,
            Branch::Rising,
            1.5,
            gamma,
            &c2,
            Direction::Forward,
            5.0,
            0.01,
        )
        .unwrap()
        .expect("starts on the curve");
        assert_eq!(crossing.upsilon, 1.5);
        assert_eq!(crossing.gamma, gamma);
    }

    #[test]
    fn backward_extension_crosses_falling_level_curve() {
        // branch-1 solution seeded on c1 at -2, extended backward, meets c2
        let m = cubic_default();
        let c1 = m.level_curve(Branch::Rising).unwrap().clone();
        let c2 = m.level_curve(Branch::Falling).unwrap().clone();
        let u_a = -2.0;
        let crossing = extend_to_crossing(
            &m,
            Branch::Rising,
            u_a,
            c1.eval(u_a),
            &c2,
            Direction::Backward,
            -30.0,
            0.005,
        )
        .unwrap()
        .expect("crossing guaranteed under the slope hypotheses");
        assert!(crossing.upsilon < u_a);
        assert!((crossing.gamma - c2.eval(crossing.upsilon)).abs() < 1e-6);

        // independent oracle: brute scan at a tenth of the step
        let oracle = extend_to_crossing(
            &m,
            Branch::Rising,
            u_a,
            c1.eval(u_a),
            &c2,
            Direction::Backward,
            -30.0,
            0.0005,
        )
        .unwrap()
        .unwrap();
        assert!((crossing.upsilon - oracle.upsilon).abs() < 1e-4);
    }

    #[test]
    fn forward_extension_from_below_crosses_falling_curve() {
        let m = cubic_default();
        let c1 = m.level_curve(Branch::Rising).unwrap().clone();
        let c2 = m.level_curve(Branch::Falling).unwrap().clone();
        let u_a = -2.0;
        let crossing = extend_to_crossing(
            &m,
            Branch::Rising,
            u_a,
            c1.eval(u_a),
            &c2,
            Direction::Forward,
            30.0,
            0.005,
        )
        .unwrap()
        .expect("rising solution must meet the decreasing curve");
        assert!(crossing.upsilon > u_a);
    }

    #[test]
    fn no_crossing_when_limit_reached() {
        let m = constant_field(0.0); // flat solution at gamma = 0
        let target = CurveSpec::polynomial(&[5.0]);
        let out = extend_to_crossing(
            &m,
            Branch::Rising,
            0.0,
            0.0,
            &target,
            Direction::Forward,
            10.0,
            0.1,
        )
        .unwrap();
        assert!(out.is_none());
    }
}
