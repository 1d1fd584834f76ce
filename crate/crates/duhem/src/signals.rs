//! Piecewise-linear input signals and the operators acting on them.
//!
//! Inputs are stored as breakpoint lists `(t, u)`. The Duhem operator is
//! rate-independent, so only the sequence of extrema matters and linear
//! interpolation between breakpoints loses nothing. Signals evaluate as
//! constants outside their breakpoint span (clamp semantics), which is also
//! what the right-continuation operator produces.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("signal needs at least 2 breakpoints, got {0}")]
    TooFewBreakpoints(usize),
    #[error("breakpoint times must be strictly increasing (violated at index {0})")]
    NonIncreasingTimes(usize),
    #[error("breakpoint {0} is not finite")]
    NonFiniteBreakpoint(usize),
    #[error("periodic signal must span exactly one period: span {span}, period {period}")]
    PeriodMismatch { span: f64, period: f64 },
    #[error("periodic signal must end at its starting value: first {first}, last {last}")]
    EndpointMismatch { first: f64, last: f64 },
    #[error("shift offset {tau} outside [0, {max}] for a non-periodic signal")]
    ShiftOutOfRange { tau: f64, max: f64 },
    #[error("continuation time {tau} outside [0, {max}]")]
    ContinueOutOfRange { tau: f64, max: f64 },
    #[error("periodic input spec requires min < max, got [{min}, {max}]")]
    EmptyRange { min: f64, max: f64 },
    #[error("peak time {t_peak} must lie strictly inside (0, {period})")]
    PeakOutsidePeriod { t_peak: f64, period: f64 },
}

/// An absolutely continuous scalar input, represented by linear interpolation
/// between breakpoints. Periodic signals carry their period `T` and satisfy
/// `last time - first time == T` with matching endpoint values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSignal {
    breakpoints: Vec<(f64, f64)>,
    period: Option<f64>,
}

/// A simple periodic drive: one minimum and one maximum per period, with the
/// signal starting at the minimum and peaking at `t_peak`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicInputSpec {
    pub upsilon_min: f64,
    pub upsilon_max: f64,
    pub period: f64,
    pub t_peak: f64,
}

/// Direction of a monotone sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepDirection {
    Increasing,
    Decreasing,
    Stationary,
}

/// A maximal time interval on which the signal is monotone (or constant).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneSweep {
    pub direction: SweepDirection,
    pub t_start: f64,
    pub t_end: f64,
    pub upsilon_start: f64,
    pub upsilon_end: f64,
}

impl InputSignal {
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self, SignalError> {
        Self::build(breakpoints, None)
    }

    pub fn periodic(breakpoints: Vec<(f64, f64)>, period: f64) -> Result<Self, SignalError> {
        Self::build(breakpoints, Some(period))
    }

    fn build(breakpoints: Vec<(f64, f64)>, period: Option<f64>) -> Result<Self, SignalError> {
        if breakpoints.len() < 2 {
            return Err(SignalError::TooFewBreakpoints(breakpoints.len()));
        }
        for (i, &(t, v)) in breakpoints.iter().enumerate() {
            if !t.is_finite() || !v.is_finite() {
                return Err(SignalError::NonFiniteBreakpoint(i));
            }
        }
        for i in 1..breakpoints.len() {
            if breakpoints[i].0 <= breakpoints[i - 1].0 {
                return Err(SignalError::NonIncreasingTimes(i));
            }
        }
        if let Some(t_period) = period {
            let first = breakpoints[0];
            let last = breakpoints[breakpoints.len() - 1];
            let span = last.0 - first.0;
            if span != t_period {
                return Err(SignalError::PeriodMismatch {
                    span,
                    period: t_period,
                });
            }
            if first.1 != last.1 {
                return Err(SignalError::EndpointMismatch {
                    first: first.1,
                    last: last.1,
                });
            }
        }
        Ok(Self {
            breakpoints,
            period,
        })
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn is_periodic(&self) -> bool {
        self.period.is_some()
    }

    fn t_first(&self) -> f64 {
        self.breakpoints[0].0
    }

    fn t_last(&self) -> f64 {
        self.breakpoints[self.breakpoints.len() - 1].0
    }

    /// Signal value at time `t`. Outside the breakpoint span a non-periodic
    /// signal holds its nearest endpoint value; a periodic signal wraps.
    pub fn value_at(&self, t: f64) -> f64 {
        let t = match self.period {
            Some(period) => {
                let local = (t - self.t_first()).rem_euclid(period);
                self.t_first() + local
            }
            None => t,
        };
        let pts = &self.breakpoints;
        if t <= pts[0].0 {
            return pts[0].1;
        }
        if t >= pts[pts.len() - 1].0 {
            return pts[pts.len() - 1].1;
        }
        // partition_point: first index with breakpoint time > t
        let hi = pts.partition_point(|&(bt, _)| bt <= t);
        let (t0, v0) = pts[hi - 1];
        let (t1, v1) = pts[hi];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Breakpoints restricted to the window `[t0, t1]`, unrolled over periods
    /// for periodic signals, with interpolated points inserted at the window
    /// edges. Times are strictly increasing and cover the whole window.
    pub fn breakpoints_in(&self, t0: f64, t1: f64) -> Vec<(f64, f64)> {
        assert!(t1 >= t0, "empty breakpoint window");
        let mut out: Vec<(f64, f64)> = vec![(t0, self.value_at(t0))];
        match self.period {
            Some(period) => {
                let base = self.t_first();
                let mut cycle = ((t0 - base) / period).floor();
                'outer: loop {
                    let offset = base + cycle * period - base;
                    for &(bt, bv) in &self.breakpoints {
                        let t = bt + offset;
                        if t >= t1 {
                            break 'outer;
                        }
                        if t > out[out.len() - 1].0 {
                            out.push((t, bv));
                        }
                    }
                    cycle += 1.0;
                }
            }
            None => {
                for &(bt, bv) in &self.breakpoints {
                    if bt > t0 && bt < t1 {
                        out.push((bt, bv));
                    }
                }
            }
        }
        if t1 > out[out.len() - 1].0 {
            out.push((t1, self.value_at(t1)));
        }
        out
    }

    /// Inverts the signal on one of its monotone sweeps: the unique `t` in
    /// `[sweep.t_start, sweep.t_end]` with `value_at(t) == upsilon`.
    pub fn time_of_level(&self, sweep: &MonotoneSweep, upsilon: f64) -> f64 {
        if sweep.direction == SweepDirection::Stationary {
            return sweep.t_start;
        }
        let pts = self.breakpoints_in(sweep.t_start, sweep.t_end);
        let rising = sweep.direction == SweepDirection::Increasing;
        for w in pts.windows(2) {
            let (t0, v0) = w[0];
            let (t1, v1) = w[1];
            let inside = if rising {
                upsilon >= v0 && upsilon <= v1
            } else {
                upsilon <= v0 && upsilon >= v1
            };
            if inside {
                if v1 == v0 {
                    return t0;
                }
                return t0 + (t1 - t0) * (upsilon - v0) / (v1 - v0);
            }
        }
        // upsilon at (or a rounding hair beyond) the sweep edge
        let first = pts[0].1;
        if (upsilon - first).abs() <= (upsilon - pts[pts.len() - 1].1).abs() {
            sweep.t_start
        } else {
            sweep.t_end
        }
    }
}

/// Right-shift: the returned signal `v` satisfies `v(t) = s(t + tau)`.
///
/// Periodic signals shift phase and stay periodic; non-periodic signals
/// require `tau` inside their breakpoint span and are re-based to start at
/// time zero.
pub fn shift_signal(s: &InputSignal, tau: f64) -> Result<InputSignal, SignalError> {
    if tau == 0.0 {
        return Ok(s.clone());
    }
    match s.period {
        Some(period) => {
            let base = s.t_first();
            let phase = tau.rem_euclid(period);
            if phase == 0.0 {
                let pts = s
                    .breakpoints
                    .iter()
                    .map(|&(t, v)| (t - base, v))
                    .collect::<Vec<_>>();
                return InputSignal::periodic(pts, period);
            }
            let cut = base + phase;
            let mut pts: Vec<(f64, f64)> = vec![(0.0, s.value_at(cut))];
            // one cycle of breakpoints starting at the cut; the wrap point
            // at t = base + period is represented by t = base
            for &(t, v) in &s.breakpoints {
                if t > cut && t < base + period {
                    pts.push((t - cut, v));
                }
            }
            for &(t, v) in &s.breakpoints {
                if t >= base && t < cut {
                    pts.push((t - cut + period, v));
                }
            }
            pts.push((period, s.value_at(cut)));
            InputSignal::periodic(pts, period)
        }
        None => {
            let max = s.t_last() - s.t_first();
            if !(0.0..=max).contains(&tau) {
                return Err(SignalError::ShiftOutOfRange { tau, max });
            }
            let cut = s.t_first() + tau;
            let mut pts: Vec<(f64, f64)> = vec![(0.0, s.value_at(cut))];
            for &(t, v) in &s.breakpoints {
                if t > cut {
                    pts.push((t - cut, v));
                }
            }
            if pts.len() < 2 {
                // shift consumed the whole domain: constant tail, kept over
                // the original span so the signal still has two breakpoints
                pts.push((max, pts[0].1));
            }
            InputSignal::new(pts)
        }
    }
}

/// Right-continuation: the returned signal `v` satisfies `v(t) = s(t)` for
/// `t <= tau` and `v(t) = s(tau)` afterwards. The result is non-periodic.
pub fn continue_signal(s: &InputSignal, tau: f64) -> Result<InputSignal, SignalError> {
    let max = if s.is_periodic() {
        f64::INFINITY
    } else {
        s.t_last()
    };
    if !tau.is_finite() || tau < 0.0 || tau > max {
        return Err(SignalError::ContinueOutOfRange { tau, max });
    }
    let mut pts: Vec<(f64, f64)> = s
        .breakpoints_in(s.t_first().min(0.0), tau)
        .into_iter()
        .filter(|&(t, _)| t <= tau)
        .collect();
    if pts.last().map(|&(t, _)| t) != Some(tau) {
        pts.push((tau, s.value_at(tau)));
    }
    if pts.len() < 2 {
        let span = match s.period {
            Some(period) => period,
            None => s.t_last() - s.t_first(),
        };
        let v = pts[0].1;
        pts.push((pts[0].0 + span, v));
    }
    InputSignal::new(pts)
}

/// Splits `[0, horizon]` into maximal monotone sweeps. Runs of segments with
/// the same direction merge; stationary stretches stay explicit so the
/// zero-slope case of the switched dynamics is represented faithfully.
pub fn monotone_partition(s: &InputSignal, horizon: f64) -> Vec<MonotoneSweep> {
    assert!(horizon > 0.0, "horizon must be positive");
    let pts = s.breakpoints_in(0.0, horizon);
    let mut sweeps: Vec<MonotoneSweep> = Vec::new();
    for w in pts.windows(2) {
        let (t0, v0) = w[0];
        let (t1, v1) = w[1];
        let direction = if v1 > v0 {
            SweepDirection::Increasing
        } else if v1 < v0 {
            SweepDirection::Decreasing
        } else {
            SweepDirection::Stationary
        };
        match sweeps.last_mut() {
            Some(prev) if prev.direction == direction => {
                prev.t_end = t1;
                prev.upsilon_end = v1;
            }
            _ => sweeps.push(MonotoneSweep {
                direction,
                t_start: t0,
                t_end: t1,
                upsilon_start: v0,
                upsilon_end: v1,
            }),
        }
    }
    if sweeps.is_empty() {
        // window degenerated to a single point list; treat as constant
        sweeps.push(MonotoneSweep {
            direction: SweepDirection::Stationary,
            t_start: 0.0,
            t_end: horizon,
            upsilon_start: s.value_at(0.0),
            upsilon_end: s.value_at(horizon),
        });
    }
    sweeps
}

/// Builds the triangle drive of a [`PeriodicInputSpec`]: rise from the
/// minimum to the maximum over `[0, t_peak]`, fall back over `[t_peak, T]`.
pub fn build_periodic_input(spec: &PeriodicInputSpec) -> Result<InputSignal, SignalError> {
    if !(spec.upsilon_min < spec.upsilon_max) {
        return Err(SignalError::EmptyRange {
            min: spec.upsilon_min,
            max: spec.upsilon_max,
        });
    }
    if !(spec.t_peak > 0.0 && spec.t_peak < spec.period) {
        return Err(SignalError::PeakOutsidePeriod {
            t_peak: spec.t_peak,
            period: spec.period,
        });
    }
    InputSignal::periodic(
        vec![
            (0.0, spec.upsilon_min),
            (spec.t_peak, spec.upsilon_max),
            (spec.period, spec.upsilon_min),
        ],
        spec.period,
    )
}
