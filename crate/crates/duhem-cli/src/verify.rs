//! Verification suites: numerical checks of the sequence, invariance,
//! crossing, and butterfly-construction claims, runnable by id.
//!
//! Each suite runs against a canonical builtin setup unless a config
//! provides a model and drive. Reports list every check with parameters and
//! a witness on failure; the process exit code reflects the aggregate.

use serde::Serialize;

use duhem::{
    check_output_monotonicity, construct_butterfly, extend_to_crossing, iterate_sequences,
    sweep, uniform_grid, verify_invariance, verify_sequence_lemmas, AccommodationStatus, Branch,
    CrossingDirection, CurveSpec, DuhemModel, MonotonicityMode,
};

use crate::config::{ConfigError, Resolved};

#[derive(Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub details: String,
}

#[derive(Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

pub const SUITES: &[&str] = &[
    "lemma1", "lemma2", "lemma3", "lemma4", "lemma5", "lemma6", "prop1", "prop2", "prop3", "all",
];

/// Model plus drive window a suite runs against.
struct Setup {
    model: DuhemModel,
    upsilon_min: f64,
    upsilon_max: f64,
    h: f64,
    tol: f64,
    max_iter: usize,
}

fn cubic_setup() -> Setup {
    let c1 = CurveSpec::polynomial(&[0.0, 1.0, 0.0, 0.04]);
    let c2 = c1.negated();
    Setup {
        model: DuhemModel::curve_chasing(c1, c2, 1.0).expect("valid"),
        upsilon_min: -5.0,
        upsilon_max: 5.0,
        h: 0.005,
        tol: 1e-8,
        max_iter: 500,
    }
}

fn boucwen_setup() -> Setup {
    Setup {
        model: DuhemModel::bouc_wen(1.0, 1.0, 2.0, 1.0).expect("valid"),
        upsilon_min: -1.0,
        upsilon_max: 1.0,
        h: 0.001,
        tol: 1e-8,
        max_iter: 500,
    }
}

fn divergent_setup() -> Setup {
    Setup {
        model: DuhemModel::bouc_wen(0.1, 0.1, -0.2, 1.0).expect("valid"),
        upsilon_min: -1.0,
        upsilon_max: 1.0,
        h: 0.001,
        tol: 1e-8,
        max_iter: 300,
    }
}

fn setup_from(resolved: Option<&Resolved>, fallback: fn() -> Setup) -> Setup {
    match resolved {
        Some(r) => match r.drive {
            Some((lo, hi)) => Setup {
                model: r.model.clone(),
                upsilon_min: lo,
                upsilon_max: hi,
                h: r.h,
                tol: r.tol,
                max_iter: r.max_iter,
            },
            None => fallback(),
        },
        None => fallback(),
    }
}

fn check(name: &str, passed: bool, details: String) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed,
        details,
    }
}

/// Solutions from ordered initial conditions stay ordered, both branches.
fn run_lemma1(setup: &Setup) -> Vec<CheckResult> {
    let starts = uniform_grid(-3.0, 3.0, 10);
    let mut checks = Vec::new();
    for branch in [Branch::Rising, Branch::Falling] {
        let (from, to) = match branch {
            Branch::Rising => (setup.upsilon_min, setup.upsilon_max),
            Branch::Falling => (setup.upsilon_max, setup.upsilon_min),
        };
        let mut worst: f64 = 0.0;
        let mut ok = true;
        let mut trajectories = Vec::new();
        for &g in &starts {
            match sweep(&setup.model, branch, from, to, g, setup.h) {
                Ok(t) => trajectories.push(t),
                Err(e) => {
                    checks.push(check(
                        &format!("ordering_branch_{}", branch.index()),
                        false,
                        format!("sweep from {g} diverged: {e}"),
                    ));
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        for pair in trajectories.windows(2) {
            for (a, b) in pair[0].samples.iter().zip(&pair[1].samples) {
                worst = worst.max(a.1 - b.1);
            }
        }
        checks.push(check(
            &format!("ordering_branch_{}", branch.index()),
            worst <= 1e-9,
            format!("10 ordered starts, worst inversion {worst:.3e} (tolerance 1e-9)"),
        ));
    }
    checks
}

fn record_for(setup: &Setup, gamma_0: f64) -> duhem::AccommodationRecord {
    iterate_sequences(
        &setup.model,
        setup.upsilon_min,
        setup.upsilon_max,
        gamma_0,
        setup.tol,
        setup.max_iter,
        setup.h,
    )
}

/// Both return sequences drift monotonically in the same direction.
fn run_lemma2(setup: &Setup) -> Vec<CheckResult> {
    let record = record_for(setup, -2.0);
    if record.gamma_sequence.len() < 3 {
        return vec![check(
            "sequences_monotone_same_direction",
            true,
            "converged in under 3 cycles; monotonicity trivial".into(),
        )];
    }
    let report = verify_sequence_lemmas(&record);
    vec![check(
        "sequences_monotone_same_direction",
        report.monotone_same_direction.passed,
        report
            .monotone_same_direction
            .witness
            .unwrap_or_else(|| format!("{} cycles checked", record.iterations)),
    )]
}

/// Once consecutive entries agree, they keep agreeing.
fn run_lemma3(setup: &Setup) -> Vec<CheckResult> {
    let record = record_for(setup, -2.0);
    if record.gamma_sequence.len() < 3 {
        return vec![check(
            "sequences_settle_after_equality",
            true,
            "converged in under 3 cycles; settling trivial".into(),
        )];
    }
    let report = verify_sequence_lemmas(&record);
    vec![check(
        "sequences_settle_after_equality",
        report.settles_after_equality.passed,
        report
            .settles_after_equality
            .witness
            .unwrap_or_else(|| format!("{} cycles checked", record.iterations)),
    )]
}

/// If one sequence is unbounded so is the other, both strictly monotone.
fn run_lemma4(setup: &Setup) -> Vec<CheckResult> {
    let record = record_for(setup, 0.1);
    let diverged = matches!(record.outcome, AccommodationStatus::Diverged { .. });
    if !diverged {
        return vec![check(
            "joint_unboundedness",
            false,
            format!("expected divergence, got {:?}", record.outcome),
        )];
    }
    let report = verify_sequence_lemmas(&record);
    vec![check(
        "joint_unboundedness",
        report.joint_unboundedness.passed,
        report
            .joint_unboundedness
            .witness
            .unwrap_or_else(|| format!("diverged after {} cycles", record.iterations)),
    )]
}

/// Positive invariance of the region below each level curve.
fn run_lemma5(setup: &Setup) -> Vec<CheckResult> {
    let mut checks = Vec::new();
    let rising = verify_invariance(
        &setup.model,
        Branch::Rising,
        setup.upsilon_min + 2.0,
        setup.upsilon_max,
        setup.h,
    );
    checks.push(match rising {
        Ok(r) => check(
            "invariance_below_rising_curve",
            r.passed,
            format!(
                "{} seeds, worst overshoot {:.3e} at upsilon = {}",
                r.seeds_checked, r.worst_violation, r.worst_upsilon
            ),
        ),
        Err(e) => check("invariance_below_rising_curve", false, e.to_string()),
    });
    let falling = verify_invariance(
        &setup.model,
        Branch::Falling,
        setup.upsilon_max - 2.0,
        setup.upsilon_min,
        setup.h,
    );
    checks.push(match falling {
        Ok(r) => check(
            "invariance_below_falling_curve",
            r.passed,
            format!(
                "{} seeds, worst overshoot {:.3e} at upsilon = {}",
                r.seeds_checked, r.worst_violation, r.worst_upsilon
            ),
        ),
        Err(e) => check("invariance_below_falling_curve", false, e.to_string()),
    });
    checks
}

/// Extended solutions intersect the opposite level curve on both sides.
fn run_lemma6(setup: &Setup, seed_upsilon: f64) -> Vec<CheckResult> {
    let mut checks = Vec::new();
    let (c1, c2) = match (&setup.model).level_curve(Branch::Rising).zip(
        setup.model.level_curve(Branch::Falling),
    ) {
        Some((a, b)) => (a.clone(), b.clone()),
        None => {
            return vec![check(
                "backward_crossing",
                false,
                "suite needs a curve-chasing model with analytic level curves".into(),
            )]
        }
    };

    let ua = seed_upsilon;
    let backward = extend_to_crossing(
        &setup.model,
        Branch::Rising,
        ua,
        c1.eval(ua),
        &c2,
        CrossingDirection::Backward,
        ua - 50.0,
        setup.h,
    );
    checks.push(match backward {
        Ok(Some(x)) => check(
            "backward_crossing",
            x.upsilon < ua,
            format!("rising solution from upsilon = {ua} meets c2 at {}", x.upsilon),
        ),
        Ok(None) => check("backward_crossing", false, "no crossing in span".into()),
        Err(e) => check("backward_crossing", false, e.to_string()),
    });

    let ub = -seed_upsilon;
    let forward = extend_to_crossing(
        &setup.model,
        Branch::Falling,
        ub,
        c2.eval(ub),
        &c1,
        CrossingDirection::Forward,
        ub + 50.0,
        setup.h,
    );
    checks.push(match forward {
        Ok(Some(x)) => check(
            "forward_crossing_mirror",
            x.upsilon > ub,
            format!("falling solution from upsilon = {ub} meets c1 at {}", x.upsilon),
        ),
        Ok(None) => check("forward_crossing_mirror", false, "no crossing in span".into()),
        Err(e) => check("forward_crossing_mirror", false, e.to_string()),
    });
    checks
}

/// Non-strict monotonicity conditions imply accommodation from any start.
fn run_prop1(setup: &Setup) -> Vec<CheckResult> {
    let mut checks = Vec::new();
    let u = uniform_grid(setup.upsilon_min, setup.upsilon_max, 64);
    let amp = 3.0 * setup.upsilon_min.abs().max(setup.upsilon_max.abs()).max(1.0);
    let g = uniform_grid(-amp, amp, 64);
    let verdict = check_output_monotonicity(&setup.model, MonotonicityMode::Convergent, &u, &g);
    checks.push(check(
        "convergence_conditions",
        verdict.holds(),
        format!("{verdict:?}"),
    ));
    for gamma_0 in [-2.0, 0.0, 3.0] {
        let record = record_for(setup, gamma_0);
        checks.push(check(
            &format!("accommodates_from_{gamma_0}"),
            record.converged(),
            format!("{:?} after {} cycles", record.outcome, record.iterations),
        ));
    }
    checks
}

/// Strict monotonicity gives a unique limit across starts.
fn run_prop2(setup: &Setup) -> Vec<CheckResult> {
    let mut checks = Vec::new();
    let u = uniform_grid(setup.upsilon_min, setup.upsilon_max, 64);
    let amp = 3.0 * setup.upsilon_min.abs().max(setup.upsilon_max.abs()).max(1.0);
    let g = uniform_grid(-amp, amp, 64);
    let verdict =
        check_output_monotonicity(&setup.model, MonotonicityMode::StrictlyConvergent, &u, &g);
    checks.push(check(
        "strict_convergence_conditions",
        verdict.holds(),
        format!("{verdict:?}"),
    ));
    let mut limits = Vec::new();
    for gamma_0 in [-6.0, 8.0] {
        match record_for(setup, gamma_0).outcome {
            AccommodationStatus::Converged { gamma_star, .. } => limits.push(gamma_star),
            other => {
                checks.push(check(
                    "unique_limit",
                    false,
                    format!("start {gamma_0} did not converge: {other:?}"),
                ));
                return checks;
            }
        }
    }
    let gap = (limits[0] - limits[1]).abs();
    checks.push(check(
        "unique_limit",
        gap <= 10.0 * setup.tol,
        format!("limits differ by {gap:.3e} (allowance {:.1e})", 10.0 * setup.tol),
    ));
    checks
}

/// The constructive butterfly search completes with the proper ordering.
fn run_prop3(setup: &Setup, seed_upsilon: f64) -> Vec<CheckResult> {
    match construct_butterfly(&setup.model, seed_upsilon, 0.5, setup.h) {
        Ok(c) => {
            let ordered = c.upsilon_min < c.upsilon_a_plus
                && c.upsilon_a_plus < c.upsilon_x
                && c.upsilon_x < c.upsilon_a_minus
                && c.upsilon_a_minus < c.upsilon_max;
            vec![
                check(
                    "construction_ordering",
                    ordered,
                    format!(
                        "{} < {} < {} < {} < {}",
                        c.upsilon_min, c.upsilon_a_plus, c.upsilon_x, c.upsilon_a_minus,
                        c.upsilon_max
                    ),
                ),
                check(
                    "crossing_residual",
                    c.crossing_residual <= 1e-6,
                    format!("residual {:.3e}", c.crossing_residual),
                ),
            ]
        }
        Err(e) => vec![check("construction", false, e.to_string())],
    }
}

/// Runs the named suite. `resolved` overrides the builtin setup where the
/// suite can use it; `seed_upsilon` feeds the crossing and butterfly seeds.
pub fn run_suite(
    suite: &str,
    resolved: Option<&Resolved>,
    seed_upsilon: Option<f64>,
) -> Result<SuiteReport, ConfigError> {
    let seed = seed_upsilon.unwrap_or(-2.0);
    let checks = match suite {
        "lemma1" => {
            let mut all = run_lemma1(&setup_from(resolved, boucwen_setup));
            all.extend(run_lemma1(&setup_from(resolved, cubic_setup)));
            all
        }
        "lemma2" => run_lemma2(&setup_from(resolved, boucwen_setup)),
        "lemma3" => run_lemma3(&setup_from(resolved, boucwen_setup)),
        "lemma4" => run_lemma4(&setup_from(resolved, divergent_setup)),
        "lemma5" => run_lemma5(&setup_from(resolved, cubic_setup)),
        "lemma6" => run_lemma6(&setup_from(resolved, cubic_setup), seed),
        "prop1" => run_prop1(&setup_from(resolved, boucwen_setup)),
        "prop2" => run_prop2(&setup_from(resolved, cubic_setup)),
        "prop3" => run_prop3(&setup_from(resolved, cubic_setup), seed),
        "all" => {
            let mut all = Vec::new();
            for id in SUITES.iter().filter(|&&s| s != "all") {
                let report = run_suite(id, resolved, seed_upsilon)?;
                for mut c in report.checks {
                    c.name = format!("{id}.{}", c.name);
                    all.push(c);
                }
            }
            all
        }
        other => {
            return Err(ConfigError::Invalid(format!(
                "unknown suite {other:?}; available: {}",
                SUITES.join(", ")
            )))
        }
    };
    let passed = checks.iter().all(|c| c.passed);
    Ok(SuiteReport {
        suite: suite.to_string(),
        passed,
        checks,
    })
}

pub fn report_to_json(report: &SuiteReport) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    text
}
