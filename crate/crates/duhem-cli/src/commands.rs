//! Subcommand implementations. Each one turns a resolved config into output
//! bytes plus an outcome; the binary maps outcomes to exit codes and writes
//! the bytes. Identical configs produce identical bytes.

use serde::Serialize;

use duhem::{
    boucwen_classify, check_output_monotonicity, check_wellposedness, classify_loop,
    decompose_lobes, find_periodic_orbit, iterate_sequences, self_intersections, simulate,
    uniform_grid, verify_sequence_lemmas, AccommodationRecord, BoucWenClass, BranchLabel,
    DuhemModel, LoopClass, MonotonicityVerdict, SequenceLemmaReport, SimulationError,
    TimeTrajectory, WellPosednessReport,
};

use crate::config::{ConfigError, Resolved};
use crate::svg;

/// How a command finished. Divergence still produces (truncated) output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Clean,
    Diverged { t: f64 },
}

pub struct CommandOutput {
    pub bytes: String,
    pub outcome: Outcome,
}

fn branch_cell(label: BranchLabel) -> &'static str {
    match label {
        BranchLabel::Rising => "1",
        BranchLabel::Falling => "2",
        BranchLabel::Stationary => "stationary",
    }
}

fn trajectory_csv(trajectory: &TimeTrajectory) -> String {
    let mut out = String::from("step,t,u,y,branch\n");
    for (step, s) in trajectory.samples.iter().enumerate() {
        out.push_str(&format!(
            "{step},{},{},{},{}\n",
            s.t,
            s.u,
            s.y,
            branch_cell(s.branch)
        ));
    }
    out
}

/// Runs the time-domain simulation and renders it as CSV. A divergent run
/// yields the trajectory up to the sentinel and a `Diverged` outcome.
pub fn cmd_simulate(resolved: &Resolved) -> CommandOutput {
    match simulate(
        &resolved.model,
        &resolved.signal,
        resolved.y0,
        resolved.horizon,
        resolved.h,
    ) {
        Ok(trajectory) => CommandOutput {
            bytes: trajectory_csv(&trajectory),
            outcome: Outcome::Clean,
        },
        Err(SimulationError::NonFinite { t, partial }) => CommandOutput {
            bytes: trajectory_csv(&partial),
            outcome: Outcome::Diverged { t },
        },
    }
}

#[derive(Serialize)]
struct MonotonicityChecks {
    convergent: MonotonicityVerdict,
    strictly_convergent: MonotonicityVerdict,
    divergent: MonotonicityVerdict,
}

#[derive(Serialize)]
struct ModelChecks {
    #[serde(skip_serializing_if = "Option::is_none")]
    bouc_wen_class: Option<BoucWenClass>,
    wellposedness: WellPosednessReport,
    monotonicity: MonotonicityChecks,
}

#[derive(Serialize)]
struct LobeSummary {
    signed_area: f64,
    orientation: duhem::LobeOrientation,
}

#[derive(Serialize)]
struct OrbitReport {
    closure_residual: f64,
    loop_class: LoopClass,
    interior_intersections: usize,
    lobes: Vec<LobeSummary>,
}

#[derive(Serialize)]
struct AnalyzeReport {
    model_checks: ModelChecks,
    accommodation: AccommodationRecord,
    #[serde(skip_serializing_if = "Option::is_none")]
    sequence_lemmas: Option<SequenceLemmaReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    orbit: Option<OrbitReport>,
}

const CHECK_GRID_POINTS: usize = 64;

fn gamma_check_box(upsilon_min: f64, upsilon_max: f64) -> (f64, f64) {
    let amp = 3.0 * upsilon_min.abs().max(upsilon_max.abs()).max(1.0);
    (-amp, amp)
}

/// Runs the accommodation analysis and condition checkers, producing a JSON
/// report. Divergence is reported in the record and flagged in the outcome.
pub fn cmd_analyze(resolved: &Resolved) -> Result<CommandOutput, ConfigError> {
    let (upsilon_min, upsilon_max) = resolved.drive.ok_or_else(|| {
        ConfigError::Invalid(
            "analyze needs a simple periodic input (input type \"periodic\")".into(),
        )
    })?;

    let upsilon_grid = uniform_grid(upsilon_min, upsilon_max, CHECK_GRID_POINTS);
    let (g_lo, g_hi) = gamma_check_box(upsilon_min, upsilon_max);
    let gamma_grid = uniform_grid(g_lo, g_hi, CHECK_GRID_POINTS);

    let bouc_wen_class = match &resolved.model {
        DuhemModel::BoucWen {
            alpha,
            beta,
            zeta,
            n,
        } => Some(boucwen_classify(*alpha, *beta, *zeta, *n)?),
        DuhemModel::CurveChasing { .. } => None,
    };
    let model_checks = ModelChecks {
        bouc_wen_class,
        wellposedness: check_wellposedness(&resolved.model, &upsilon_grid, &gamma_grid),
        monotonicity: MonotonicityChecks {
            convergent: check_output_monotonicity(
                &resolved.model,
                duhem::MonotonicityMode::Convergent,
                &upsilon_grid,
                &gamma_grid,
            ),
            strictly_convergent: check_output_monotonicity(
                &resolved.model,
                duhem::MonotonicityMode::StrictlyConvergent,
                &upsilon_grid,
                &gamma_grid,
            ),
            divergent: check_output_monotonicity(
                &resolved.model,
                duhem::MonotonicityMode::Divergent,
                &upsilon_grid,
                &gamma_grid,
            ),
        },
    };

    let record = iterate_sequences(
        &resolved.model,
        upsilon_min,
        upsilon_max,
        resolved.y0,
        resolved.tol,
        resolved.max_iter,
        resolved.h,
    );
    let sequence_lemmas = if record.gamma_sequence.len() >= 3 {
        Some(verify_sequence_lemmas(&record))
    } else {
        None
    };

    let orbit = if record.converged() {
        let orbit = find_periodic_orbit(
            &resolved.model,
            upsilon_min,
            upsilon_max,
            resolved.y0,
            resolved.tol,
            resolved.max_iter,
            resolved.h,
        )
        .expect("iteration already converged");
        let loop_class = classify_loop(&orbit);
        let span = upsilon_max - upsilon_min;
        let xs = self_intersections(&orbit, 1e-6 * span).unwrap_or_default();
        let lobes = decompose_lobes(&orbit, &xs)
            .map(|lobes| {
                lobes
                    .into_iter()
                    .map(|l| LobeSummary {
                        signed_area: l.signed_area,
                        orientation: l.orientation,
                    })
                    .collect()
            })
            .unwrap_or_default();
        Some(OrbitReport {
            closure_residual: orbit.closure_residual,
            loop_class,
            interior_intersections: xs.len(),
            lobes,
        })
    } else {
        None
    };

    let outcome = match record.outcome {
        duhem::AccommodationStatus::Diverged { at_iteration } => Outcome::Diverged {
            t: at_iteration as f64 * resolved.signal.period().unwrap_or(0.0),
        },
        _ => Outcome::Clean,
    };

    let report = AnalyzeReport {
        model_checks,
        accommodation: record,
        sequence_lemmas,
        orbit,
    };
    let mut bytes = serde_json::to_string_pretty(&report).expect("report serializes");
    bytes.push('\n');
    Ok(CommandOutput { bytes, outcome })
}

/// Simulates and renders the phase plot as SVG. The plot of a divergent run
/// shows the trajectory up to the sentinel.
pub fn cmd_plot(resolved: &Resolved) -> CommandOutput {
    let (trajectory, outcome) = match simulate(
        &resolved.model,
        &resolved.signal,
        resolved.y0,
        resolved.horizon,
        resolved.h,
    ) {
        Ok(trajectory) => (trajectory, Outcome::Clean),
        Err(SimulationError::NonFinite { t, partial }) => (partial, Outcome::Diverged { t }),
    };
    CommandOutput {
        bytes: svg::phase_plot(&resolved.model, &trajectory, resolved.y0),
        outcome,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_config, resolve, Overrides};

    fn resolved_from(text: &str) -> Resolved {
        resolve(&parse_config(text).unwrap(), &Overrides::default()).unwrap()
    }

    fn boucwen_config() -> Resolved {
        resolved_from(
            r#"{
                "model": {"type": "bouc_wen", "alpha": 1.0, "beta": 1.0, "zeta": 2.0, "n": 1.0},
                "input": {"type": "periodic", "upsilon_min": -1.0, "upsilon_max": 1.0, "period": 2.0, "t_peak": 1.0},
                "y0": 0.0,
                "numerics": {"horizon": 4.0}
            }"#,
        )
    }

    #[test]
    fn simulate_csv_shape() {
        let out = cmd_simulate(&boucwen_config());
        assert_eq!(out.outcome, Outcome::Clean);
        let mut lines = out.bytes.lines();
        assert_eq!(lines.next(), Some("step,t,u,y,branch"));
        let first = lines.next().unwrap();
        assert!(first.starts_with("0,0,-1,0,1"), "got {first}");
        // one row per sample, indices contiguous
        for (i, line) in out.bytes.lines().skip(1).enumerate() {
            assert!(line.starts_with(&format!("{i},")));
        }
    }

    #[test]
    fn simulate_constant_input_keeps_y0() {
        let resolved = resolved_from(
            r#"{
                "model": {"type": "bouc_wen", "alpha": 1.0, "beta": 1.0, "zeta": 2.0, "n": 1.0},
                "input": {"type": "breakpoints", "points": [[0.0, 0.5], [2.0, 0.5]]},
                "y0": 0.7
            }"#,
        );
        let out = cmd_simulate(&resolved);
        assert_eq!(out.outcome, Outcome::Clean);
        for line in out.bytes.lines().skip(1) {
            let y = line.split(',').nth(3).unwrap();
            assert_eq!(y, "0.7");
        }
    }

    #[test]
    fn simulate_divergent_model_truncates() {
        let resolved = resolved_from(
            r#"{
                "model": {"type": "bouc_wen", "alpha": 0.1, "beta": 0.1, "zeta": -0.2, "n": 1.0},
                "input": {"type": "periodic", "upsilon_min": -1.0, "upsilon_max": 1.0, "period": 2.0, "t_peak": 1.0},
                "y0": 0.1,
                "numerics": {"horizon": 200.0}
            }"#,
        );
        let out = cmd_simulate(&resolved);
        match out.outcome {
            Outcome::Diverged { t } => assert!(t > 0.0 && t < 200.0),
            Outcome::Clean => panic!("expected divergence"),
        }
        let last = out.bytes.lines().last().unwrap();
        let y: f64 = last.split(',').nth(3).unwrap().parse().unwrap();
        assert!(y.abs() <= 1e9);
    }

    #[test]
    fn analyze_reports_convergence_and_simple_loop() {
        let out = cmd_analyze(&boucwen_config()).unwrap();
        assert_eq!(out.outcome, Outcome::Clean);
        let v: serde_json::Value = serde_json::from_str(&out.bytes).unwrap();
        assert_eq!(
            v["model_checks"]["bouc_wen_class"],
            "convergence_certified"
        );
        assert_eq!(v["accommodation"]["outcome"]["status"], "converged");
        let class = v["orbit"]["loop_class"].as_str().unwrap();
        assert!(class.starts_with("simple_"), "loop class {class}");
        assert_eq!(v["orbit"]["interior_intersections"], 0);
    }

    #[test]
    fn analyze_requires_periodic_input() {
        let resolved = resolved_from(
            r#"{
                "model": {"type": "bouc_wen", "alpha": 1.0, "beta": 1.0, "zeta": 2.0, "n": 1.0},
                "input": {"type": "breakpoints", "points": [[0.0, -1.0], [1.0, 1.0]]},
                "y0": 0.0
            }"#,
        );
        assert!(matches!(
            cmd_analyze(&resolved),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn plot_emits_svg() {
        let out = cmd_plot(&boucwen_config());
        assert_eq!(out.outcome, Outcome::Clean);
        assert!(out.bytes.starts_with("<svg"));
        assert!(out.bytes.ends_with("</svg>\n"));
    }

    #[test]
    fn outputs_are_deterministic() {
        let resolved = boucwen_config();
        assert_eq!(cmd_simulate(&resolved).bytes, cmd_simulate(&resolved).bytes);
        assert_eq!(
            cmd_analyze(&resolved).unwrap().bytes,
            cmd_analyze(&resolved).unwrap().bytes
        );
        assert_eq!(cmd_plot(&resolved).bytes, cmd_plot(&resolved).bytes);
    }
}
