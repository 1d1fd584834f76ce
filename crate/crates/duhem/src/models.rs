//! The Duhem model families and the sampled condition checkers.
//!
//! A model is the pair of vector fields `(f1, f2)` driving the switched
//! dynamics: branch 1 applies while the input rises, branch 2 while it
//! falls. Two closed families cover every configuration this crate accepts:
//!
//! * **Bouc-Wen**: `f1 = alpha - beta*|g|^n - zeta*g*|g|^(n-1)` and
//!   `f2 = alpha - beta*|g|^n + zeta*g*|g|^(n-1)`, the classical
//!   displacement/restoring-force model.
//! * **Curve-chasing**: `f1 = k*(c1(u) - g)` and `f2 = k*(g - c2(u))`, which
//!   makes `c1`/`c2` the zero level sets of the two fields. Trajectories
//!   relax toward the level curve of their active branch, which is the
//!   mechanism behind butterfly and multi-loop orbits.
//!
//! Keeping the families closed (instead of accepting arbitrary closures)
//! keeps configurations declarative and gives the level sets and their
//! derivatives in closed form.
//!
//! The monotonicity and well-posedness checkers below evaluate sign
//! conditions on deterministic sample grids. They are sampled certificates,
//! not proofs: a `Holds` verdict means no violation was found on the grid.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("Bouc-Wen exponent must satisfy n >= 1, got {0}")]
    ExponentTooSmall(f64),
    #[error("curve-chasing gain must be positive, got {0}")]
    NonPositiveGain(f64),
    #[error("no sign change over bracket [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
}

/// Which vector field is active: branch 1 (`Rising`) while the input
/// increases, branch 2 (`Falling`) while it decreases. Zero input slope is
/// assigned to branch 1; with zero slope the output is constant either way,
/// so the choice is observationally irrelevant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    Rising,
    Falling,
}

impl Branch {
    /// Conventional index: 1 for the rising field, 2 for the falling one.
    pub fn index(self) -> u8 {
        match self {
            Branch::Rising => 1,
            Branch::Falling => 2,
        }
    }
}

/// One sinusoidal term `amplitude * sin(angular_frequency * u + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidTerm {
    pub amplitude: f64,
    pub angular_frequency: f64,
    pub phase: f64,
}

/// A scalar curve `u -> sum_j poly[j]*u^j + sum_i A_i*sin(w_i*u + phi_i)`,
/// with its derivative available in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CurveSpec {
    #[serde(default)]
    pub poly: Vec<f64>,
    #[serde(default)]
    pub sinusoids: Vec<SinusoidTerm>,
}

impl CurveSpec {
    pub fn polynomial(coefficients: &[f64]) -> Self {
        Self {
            poly: coefficients.to_vec(),
            sinusoids: Vec::new(),
        }
    }

    pub fn sinusoid(amplitude: f64, angular_frequency: f64, phase: f64) -> Self {
        Self {
            poly: Vec::new(),
            sinusoids: vec![SinusoidTerm {
                amplitude,
                angular_frequency,
                phase,
            }],
        }
    }

    pub fn eval(&self, upsilon: f64) -> f64 {
        let mut value = 0.0;
        for &a in self.poly.iter().rev() {
            value = value * upsilon + a;
        }
        for s in &self.sinusoids {
            value += s.amplitude * (s.angular_frequency * upsilon + s.phase).sin();
        }
        value
    }

    pub fn derivative(&self, upsilon: f64) -> f64 {
        let mut value = 0.0;
        for (j, &a) in self.poly.iter().enumerate().skip(1) {
            value += j as f64 * a * upsilon.powi(j as i32 - 1);
        }
        for s in &self.sinusoids {
            value +=
                s.amplitude * s.angular_frequency * (s.angular_frequency * upsilon + s.phase).cos();
        }
        value
    }

    /// The curve with its sign flipped everywhere.
    pub fn negated(&self) -> Self {
        Self {
            poly: self.poly.iter().map(|a| -a).collect(),
            sinusoids: self
                .sinusoids
                .iter()
                .map(|s| SinusoidTerm {
                    amplitude: -s.amplitude,
                    ..*s
                })
                .collect(),
        }
    }

    /// Sampled bound `max |dc/du|` over `[lo, hi]`, the slope constant used
    /// by the invariance and crossing arguments.
    pub fn max_abs_derivative(&self, lo: f64, hi: f64, samples: usize) -> f64 {
        crate::uniform_grid(lo, hi, samples.max(2))
            .into_iter()
            .map(|u| self.derivative(u).abs())
            .fold(0.0, f64::max)
    }
}

/// A Duhem model: the closed pair of branch fields `(f1, f2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DuhemModel {
    BoucWen {
        alpha: f64,
        beta: f64,
        zeta: f64,
        n: f64,
    },
    CurveChasing {
        c1: CurveSpec,
        c2: CurveSpec,
        gain: f64,
    },
}

/// `g |g|^(n-1)` without the `0^0` pitfall at `g = 0`.
fn signed_pow(gamma: f64, n: f64) -> f64 {
    if gamma == 0.0 {
        0.0
    } else {
        gamma.signum() * gamma.abs().powf(n)
    }
}

impl DuhemModel {
    pub fn bouc_wen(alpha: f64, beta: f64, zeta: f64, n: f64) -> Result<Self, ModelError> {
        let m = DuhemModel::BoucWen {
            alpha,
            beta,
            zeta,
            n,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn curve_chasing(c1: CurveSpec, c2: CurveSpec, gain: f64) -> Result<Self, ModelError> {
        let m = DuhemModel::CurveChasing { c1, c2, gain };
        m.validate()?;
        Ok(m)
    }

    /// Checks the family invariants (`n >= 1`, `gain > 0`). Deserialized
    /// models must pass through here before use.
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            DuhemModel::BoucWen { n, .. } => {
                if !(*n >= 1.0) {
                    return Err(ModelError::ExponentTooSmall(*n));
                }
            }
            DuhemModel::CurveChasing { gain, .. } => {
                if !(*gain > 0.0) {
                    return Err(ModelError::NonPositiveGain(*gain));
                }
            }
        }
        Ok(())
    }

    /// Evaluates the selected branch field at `(upsilon, gamma)`.
    pub fn eval_field(&self, branch: Branch, upsilon: f64, gamma: f64) -> f64 {
        match self {
            DuhemModel::BoucWen {
                alpha,
                beta,
                zeta,
                n,
            } => {
                let magnitude = gamma.abs().powf(*n);
                let signed = signed_pow(gamma, *n);
                match branch {
                    Branch::Rising => alpha - beta * magnitude - zeta * signed,
                    Branch::Falling => alpha - beta * magnitude + zeta * signed,
                }
            }
            DuhemModel::CurveChasing { c1, c2, gain } => match branch {
                Branch::Rising => gain * (c1.eval(upsilon) - gamma),
                Branch::Falling => gain * (gamma - c2.eval(upsilon)),
            },
        }
    }

    /// The analytic level-set curve of a branch, when the family has one.
    pub fn level_curve(&self, branch: Branch) -> Option<&CurveSpec> {
        match self {
            DuhemModel::CurveChasing { c1, c2, .. } => Some(match branch {
                Branch::Rising => c1,
                Branch::Falling => c2,
            }),
            DuhemModel::BoucWen { .. } => None,
        }
    }
}

/// Mode selector for [`check_output_monotonicity`]: the non-strict pair of
/// inequalities certifying convergence, their strict versions certifying a
/// unique limit, or the reversed pair certifying divergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonotonicityMode {
    Convergent,
    StrictlyConvergent,
    Divergent,
}

/// Outcome of a sampled sign-condition check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MonotonicityVerdict {
    Holds,
    Violated {
        branch: u8,
        upsilon: f64,
        gamma_1: f64,
        gamma_2: f64,
        product: f64,
    },
}

impl MonotonicityVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, MonotonicityVerdict::Holds)
    }
}

/// Sampled one-sided slope bounds for the existence/uniqueness inequalities,
/// with the pair realizing the worst quotient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellPosednessReport {
    pub lambda_1: f64,
    pub lambda_2: f64,
    pub satisfied: bool,
    pub worst_witness: Option<(f64, f64, f64)>,
}

/// Sampled anhysteresis curve `gamma = alpha(upsilon)` (the locus
/// `f1 = f2`), with the bisection parameters that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnhysteresisCurve {
    pub samples: Vec<(f64, f64)>,
    pub bracket_half_width: f64,
    pub tolerance: f64,
}

/// Verdict of [`boucwen_classify`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoucWenClass {
    ConvergenceCertified,
    DivergenceCertified,
    Indeterminate,
}

const BISECTION_MAX_ITER: usize = 200;

/// Bisection on the residual: stops once `|f(mid)| <= tol` or after the
/// iteration cap (by which point the bracket is far narrower than f64).
fn bisect(
    f: impl Fn(f64) -> f64,
    bracket: (f64, f64),
    tol: f64,
) -> Result<f64, ModelError> {
    let (mut lo, mut hi) = bracket;
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo.abs() <= tol {
        return Ok(lo);
    }
    if f_hi.abs() <= tol {
        return Ok(hi);
    }
    if f_lo * f_hi > 0.0 {
        return Err(ModelError::NoSignChange { lo, hi, f_lo, f_hi });
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..BISECTION_MAX_ITER {
        mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid.abs() <= tol {
            return Ok(mid);
        }
        if f_lo * f_mid <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    Ok(mid)
}

/// The anhysteresis value `alpha(upsilon)`: the root of
/// `f1(upsilon, .) - f2(upsilon, .)` inside `bracket`, found by bisection.
pub fn anhysteresis_at(
    model: &DuhemModel,
    upsilon: f64,
    bracket: (f64, f64),
    tol: f64,
) -> Result<f64, ModelError> {
    bisect(
        |gamma| {
            model.eval_field(Branch::Rising, upsilon, gamma)
                - model.eval_field(Branch::Falling, upsilon, gamma)
        },
        bracket,
        tol,
    )
}

/// Samples the anhysteresis curve over `n` uniformly spaced inputs.
pub fn anhysteresis_curve(
    model: &DuhemModel,
    upsilon_lo: f64,
    upsilon_hi: f64,
    n: usize,
    bracket_half_width: f64,
    tol: f64,
) -> AnhysteresisCurve {
    let samples = crate::uniform_grid(upsilon_lo, upsilon_hi, n.max(2))
        .into_iter()
        .filter_map(|u| {
            anhysteresis_at(model, u, (-bracket_half_width, bracket_half_width), tol)
                .ok()
                .map(|a| (u, a))
        })
        .collect();
    AnhysteresisCurve {
        samples,
        bracket_half_width,
        tolerance: tol,
    }
}

/// The zero-level value `c_branch(upsilon)` of the selected branch field.
/// Curve-chasing models answer analytically; Bouc-Wen falls back to
/// bisection inside `bracket`.
pub fn zero_level_at(
    model: &DuhemModel,
    branch: Branch,
    upsilon: f64,
    bracket: (f64, f64),
    tol: f64,
) -> Result<f64, ModelError> {
    if let Some(curve) = model.level_curve(branch) {
        return Ok(curve.eval(upsilon));
    }
    bisect(
        |gamma| model.eval_field(branch, upsilon, gamma),
        bracket,
        tol,
    )
}

/// Evaluates the selected monotonicity-in-gamma sign condition over every
/// input sample and every pair of distinct output samples. Returns the first
/// violating witness, if any. A sampled certificate, not a proof.
pub fn check_output_monotonicity(
    model: &DuhemModel,
    mode: MonotonicityMode,
    upsilon_grid: &[f64],
    gamma_grid: &[f64],
) -> MonotonicityVerdict {
    assert!(!upsilon_grid.is_empty(), "empty input grid");
    assert!(
        gamma_grid.len() >= 2,
        "output grid needs at least 2 distinct values"
    );
    let ok = |branch: Branch, product: f64| -> bool {
        match (mode, branch) {
            (MonotonicityMode::Convergent, Branch::Rising) => product <= 0.0,
            (MonotonicityMode::Convergent, Branch::Falling) => product >= 0.0,
            (MonotonicityMode::StrictlyConvergent, Branch::Rising) => product < 0.0,
            (MonotonicityMode::StrictlyConvergent, Branch::Falling) => product > 0.0,
            (MonotonicityMode::Divergent, Branch::Rising) => product > 0.0,
            (MonotonicityMode::Divergent, Branch::Falling) => product < 0.0,
        }
    };
    for &upsilon in upsilon_grid {
        for (i, &gamma_1) in gamma_grid.iter().enumerate() {
            for &gamma_2 in &gamma_grid[i + 1..] {
                if gamma_1 == gamma_2 {
                    continue;
                }
                for branch in [Branch::Rising, Branch::Falling] {
                    let product = (model.eval_field(branch, upsilon, gamma_1)
                        - model.eval_field(branch, upsilon, gamma_2))
                        * (gamma_1 - gamma_2);
                    if !ok(branch, product) {
                        return MonotonicityVerdict::Violated {
                            branch: branch.index(),
                            upsilon,
                            gamma_1,
                            gamma_2,
                            product,
                        };
                    }
                }
            }
        }
    }
    MonotonicityVerdict::Holds
}

/// Estimates the smallest one-sided Lipschitz constants `lambda_1`,
/// `lambda_2 >= 0` satisfying the existence/uniqueness inequalities on the
/// sampled grid.
pub fn check_wellposedness(
    model: &DuhemModel,
    upsilon_grid: &[f64],
    gamma_grid: &[f64],
) -> WellPosednessReport {
    assert!(!upsilon_grid.is_empty(), "empty input grid");
    assert!(!gamma_grid.is_empty(), "empty output grid");
    let mut lambda_1 = 0.0f64;
    let mut lambda_2 = 0.0f64;
    let mut worst: Option<(f64, f64, f64)> = None;
    let mut worst_value = f64::NEG_INFINITY;
    for &upsilon in upsilon_grid {
        for (i, &gamma_1) in gamma_grid.iter().enumerate() {
            for &gamma_2 in &gamma_grid[i + 1..] {
                let dg = gamma_1 - gamma_2;
                if dg == 0.0 {
                    continue;
                }
                let q1 = (model.eval_field(Branch::Rising, upsilon, gamma_1)
                    - model.eval_field(Branch::Rising, upsilon, gamma_2))
                    / dg;
                let q2 = (model.eval_field(Branch::Falling, upsilon, gamma_1)
                    - model.eval_field(Branch::Falling, upsilon, gamma_2))
                    / dg;
                lambda_1 = lambda_1.max(q1);
                lambda_2 = lambda_2.max(-q2);
                let severity = q1.max(-q2);
                if severity > worst_value {
                    worst_value = severity;
                    worst = Some((upsilon, gamma_1, gamma_2));
                }
            }
        }
    }
    let satisfied = lambda_1.is_finite() && lambda_2.is_finite();
    WellPosednessReport {
        lambda_1,
        lambda_2,
        satisfied,
        worst_witness: worst,
    }
}

/// Classifies a Bouc-Wen parameter triple against the accommodation
/// inequalities: convergence is certified when `beta + zeta >= 0` and
/// `beta - zeta <= 0`, divergence when both are strictly reversed.
pub fn boucwen_classify(
    _alpha: f64,
    beta: f64,
    zeta: f64,
    n: f64,
) -> Result<BoucWenClass, ModelError> {
    if !(n >= 1.0) {
        return Err(ModelError::ExponentTooSmall(n));
    }
    let class = if beta + zeta >= 0.0 && beta - zeta <= 0.0 {
        BoucWenClass::ConvergenceCertified
    } else if beta + zeta < 0.0 && beta - zeta > 0.0 {
        BoucWenClass::DivergenceCertified
    } else {
        BoucWenClass::Indeterminate
    };
    Ok(class)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uniform_grid;
    use proptest::prelude::*;

    fn cubic_default() -> DuhemModel {
        let c1 = CurveSpec::polynomial(&[0.0, 1.0, 0.0, 0.04]);
        let c2 = c1.negated();
        DuhemModel::curve_chasing(c1, c2, 1.0).unwrap()
    }

    #[test]
    fn curve_spec_eval_and_derivative() {
        let c = CurveSpec::polynomial(&[1.0, 2.0, 0.0, 0.5]);
        assert_eq!(c.eval(0.0), 1.0);
        assert_eq!(c.eval(2.0), 1.0 + 4.0 + 4.0);
        assert_eq!(c.derivative(2.0), 2.0 + 1.5 * 4.0);

        let s = CurveSpec::sinusoid(10.0, 6.0 * std::f64::consts::PI, std::f64::consts::PI / 8.0);
        assert!((s.eval(0.0) - 10.0 * (std::f64::consts::PI / 8.0).sin()).abs() < 1e-12);
        // derivative against central difference
        let h = 1e-6;
        let fd = (s.eval(0.3 + h) - s.eval(0.3 - h)) / (2.0 * h);
        assert!((s.derivative(0.3) - fd).abs() < 1e-4);
    }

    #[test]
    fn eval_field_examples() {
        let bw = DuhemModel::bouc_wen(1.0, 1.0, 2.0, 1.0).unwrap();
        assert_eq!(bw.eval_field(Branch::Rising, 0.3, 0.0), 1.0);
        assert_eq!(bw.eval_field(Branch::Rising, -7.0, 0.0), 1.0);

        let cc = cubic_default();
        assert_eq!(cc.eval_field(Branch::Rising, 0.0, 0.0), 0.0);

        let bw_div = DuhemModel::bouc_wen(0.1, 0.1, -0.2, 1.0).unwrap();
        let f2 = bw_div.eval_field(Branch::Falling, 42.0, 1.0);
        assert!((f2 - (0.1 - 0.1 - 0.2)).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert_eq!(
            DuhemModel::bouc_wen(1.0, 1.0, 1.0, 0.5),
            Err(ModelError::ExponentTooSmall(0.5))
        );
        assert_eq!(
            DuhemModel::curve_chasing(CurveSpec::default(), CurveSpec::default(), 0.0),
            Err(ModelError::NonPositiveGain(0.0))
        );
        assert!(boucwen_classify(1.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn anhysteresis_boucwen_is_zero() {
        // f1 - f2 = -2*zeta*g|g|^(n-1) vanishes only at g = 0
        let bw = DuhemModel::bouc_wen(1.0, 1.0, 2.0, 1.0).unwrap();
        for u in uniform_grid(-2.0, 2.0, 9) {
            let a = anhysteresis_at(&bw, u, (-3.0, 3.0), 1e-10).unwrap();
            assert!(a.abs() < 1e-9, "alpha({u}) = {a}");
        }
    }

    #[test]
    fn anhysteresis_curve_chasing_is_curve_midpoint() {
        let c1 = CurveSpec::polynomial(&[0.5, 1.0, 0.0, 0.04]);
        let c2 = CurveSpec::polynomial(&[-0.2, -1.0, 0.0, -0.04]);
        let m = DuhemModel::curve_chasing(c1.clone(), c2.clone(), 2.0).unwrap();
        for u in uniform_grid(-3.0, 3.0, 13) {
            let expected = 0.5 * (c1.eval(u) + c2.eval(u));
            let a = anhysteresis_at(&m, u, (-20.0, 20.0), 1e-12).unwrap();
            assert!((a - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn anhysteresis_symmetric_curves_is_zero() {
        let m = cubic_default();
        for u in uniform_grid(-5.0, 5.0, 11) {
            let a = anhysteresis_at(&m, u, (-20.0, 20.0), 1e-12).unwrap();
            assert!(a.abs() < 1e-10);
        }
    }

    #[test]
    fn anhysteresis_reports_missing_sign_change() {
        let bw = DuhemModel::bouc_wen(1.0, 1.0, 2.0, 1.0).unwrap();
        let err = anhysteresis_at(&bw, 0.0, (1.0, 3.0), 1e-10).unwrap_err();
        match err {
            ModelError::NoSignChange { f_lo, f_hi, .. } => {
                assert!(f_lo < 0.0 && f_hi < 0.0);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn zero_level_examples() {
        let cc = cubic_default();
        for u in uniform_grid(-5.0, 5.0, 11) {
            let c1 = zero_level_at(&cc, Branch::Rising, u, (-99.0, 99.0), 1e-10).unwrap();
            assert_eq!(c1, u + 0.04 * u * u * u);
            assert_eq!(cc.eval_field(Branch::Rising, u, c1), 0.0);
            let c2 = zero_level_at(&cc, Branch::Falling, u, (-99.0, 99.0), 1e-10).unwrap();
            assert_eq!(cc.eval_field(Branch::Falling, u, c2), 0.0);
        }

        // multiloop falling curve: -8 sin(6*pi*u - pi/8)
        let c2 = CurveSpec::sinusoid(-8.0, 6.0 * std::f64::consts::PI, -std::f64::consts::PI / 8.0);
        let m = DuhemModel::curve_chasing(
            CurveSpec::sinusoid(10.0, 6.0 * std::f64::consts::PI, std::f64::consts::PI / 8.0),
            c2,
            1.0,
        )
        .unwrap();
        let got = zero_level_at(&m, Branch::Falling, 0.25, (-99.0, 99.0), 1e-10).unwrap();
        let expected =
            -8.0 * (6.0 * std::f64::consts::PI * 0.25 - std::f64::consts::PI / 8.0).sin();
        assert!((got - expected).abs() < 1e-12);

        // Bouc-Wen branch 1 root of 1 - |g| - 2g: g = 1/3
        let bw = DuhemModel::bouc_wen(1.0, 1.0, 2.0, 1.0).unwrap();
        let root = zero_level_at(&bw, Branch::Rising, 0.0, (0.0, 2.0), 1e-12).unwrap();
        assert!((root - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn monotonicity_examples() {
        let u = uniform_grid(-2.0, 2.0, 9);
        let g = uniform_grid(-3.0, 3.0, 9);

        let cc = cubic_default();
        assert!(check_output_monotonicity(&cc, MonotonicityMode::StrictlyConvergent, &u, &g)
            .holds());

        let bw = DuhemModel::bouc_wen(1.0, 1.0, 2.0, 1.0).unwrap();
        assert!(check_output_monotonicity(&bw, MonotonicityMode::Convergent, &u, &g).holds());

        let bw_div = DuhemModel::bouc_wen(0.1, 0.1, -0.2, 1.0).unwrap();
        assert!(check_output_monotonicity(&bw_div, MonotonicityMode::Divergent, &u, &g).holds());
        // and it fails the convergent check, with a witness
        match check_output_monotonicity(&bw_div, MonotonicityMode::Convergent, &u, &g) {
            MonotonicityVerdict::Violated { branch, .. } => assert_eq!(branch, 1),
            MonotonicityVerdict::Holds => panic!("divergent model passed the convergent check"),
        }
    }

    #[test]
    fn wellposedness_examples() {
        let u = uniform_grid(-1.0, 1.0, 5);
        let g = uniform_grid(-3.0, 3.0, 9);

        let cc = cubic_default();
        let report = check_wellposedness(&cc, &u, &g);
        assert!(report.satisfied);
        assert_eq!(report.lambda_1, 0.0);
        assert_eq!(report.lambda_2, 0.0);

        let bw = DuhemModel::bouc_wen(1.0, 1.0, 2.0, 1.0).unwrap();
        let report = check_wellposedness(&bw, &u, &g);
        assert!(report.satisfied);
        assert!(report.lambda_1.is_finite() && report.lambda_2.is_finite());

        // single-gamma grid: no pairs, trivially satisfied
        let report = check_wellposedness(&bw, &u, &[0.5]);
        assert!(report.satisfied);
        assert_eq!(report.lambda_1, 0.0);
        assert_eq!(report.lambda_2, 0.0);
        assert!(report.worst_witness.is_none());
    }

    #[test]
    fn classifier_examples() {
        assert_eq!(
            boucwen_classify(1.0, 1.0, 2.0, 1.0).unwrap(),
            BoucWenClass::ConvergenceCertified
        );
        assert_eq!(
            boucwen_classify(0.1, 0.1, -0.2, 1.0).unwrap(),
            BoucWenClass::DivergenceCertified
        );
        assert_eq!(
            boucwen_classify(1.0, 2.0, 1.0, 1.0).unwrap(),
            BoucWenClass::Indeterminate
        );
        assert_eq!(
            boucwen_classify(0.0, 0.0, 0.0, 1.0).unwrap(),
            BoucWenClass::ConvergenceCertified
        );
    }

    #[test]
    fn curve_chasing_sign_regions() {
        // above c1 the rising field is negative, below it positive;
        // above c2 the falling field is positive, below it negative
        let m = cubic_default();
        for u in uniform_grid(-5.0, 5.0, 11) {
            let c1 = m.level_curve(Branch::Rising).unwrap().eval(u);
            let c2 = m.level_curve(Branch::Falling).unwrap().eval(u);
            for delta in [0.1, 1.0, 10.0] {
                assert!(m.eval_field(Branch::Rising, u, c1 + delta) < 0.0);
                assert!(m.eval_field(Branch::Rising, u, c1 - delta) > 0.0);
                assert!(m.eval_field(Branch::Falling, u, c2 + delta) > 0.0);
                assert!(m.eval_field(Branch::Falling, u, c2 - delta) < 0.0);
            }
        }
    }

    #[test]
    fn anhysteresis_residual_within_tolerance() {
        let tol = 1e-10;
        for model in [
            DuhemModel::bouc_wen(1.0, 1.0, 2.0, 1.0).unwrap(),
            cubic_default(),
        ] {
            for u in uniform_grid(-2.0, 2.0, 9) {
                let a = anhysteresis_at(&model, u, (-30.0, 30.0), tol).unwrap();
                let residual = model.eval_field(Branch::Rising, u, a)
                    - model.eval_field(Branch::Falling, u, a);
                assert!(residual.abs() <= tol);
            }
        }
    }

    proptest! {
        /// Strict output monotonicity holds for every curve-chasing model
        /// with positive gain, whatever the curves are.
        #[test]
        fn strict_monotonicity_any_curve_chasing(
            a in proptest::collection::vec(-3.0f64..3.0, 1..4),
            b in proptest::collection::vec(-3.0f64..3.0, 1..4),
            gain in 0.01f64..10.0,
        ) {
            let m = DuhemModel::curve_chasing(
                CurveSpec::polynomial(&a),
                CurveSpec::polynomial(&b),
                gain,
            )
            .unwrap();
            let u = uniform_grid(-2.0, 2.0, 5);
            let g = uniform_grid(-4.0, 4.0, 7);
            prop_assert!(
                check_output_monotonicity(&m, MonotonicityMode::StrictlyConvergent, &u, &g)
                    .holds()
            );
        }

        /// The Bouc-Wen classifier is invariant under positive scaling of
        /// (beta, zeta): both inequality systems are homogeneous.
        #[test]
        fn classifier_scaling_invariance(
            beta in -3.0f64..3.0,
            zeta in -3.0f64..3.0,
            scale in 0.01f64..100.0,
        ) {
            let base = boucwen_classify(1.0, beta, zeta, 1.0).unwrap();
            let scaled = boucwen_classify(1.0, scale * beta, scale * zeta, 1.0).unwrap();
            prop_assert_eq!(base, scaled);
        }
    }
}
