//! Scenario orchestration: each resolved config runs one named experiment,
//! writes its artifacts under `output_dir/<config_hash>/`, and closes with a
//! manifest plus a row per verdict in the stable check schema.

use crate::checks;
use crate::config::{RunConfig, Scenario};
use crate::error::{Error, Result};
use crate::evolution::{evolve, EquationVariant};
use crate::field::SpectralField;
use crate::fit::{fit_decay, DecayModel};
use crate::forcing::{make_annulus_force, make_band_field, verify_assumption_a};
use crate::multiplier::riesz_perp;
use crate::norms::l2_norm;
use crate::report::{CheckReport, Manifest, RunWriter};
use crate::stability::{
    energy_inequality_check, fourier_splitting_check, generalized_energy_check, run_stability,
    support_k_min, ENERGY_RATIO_TOL,
};
use crate::steady::{residual, steady_state_iteration, Route};
use serde::Serialize;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Slack floor for the generalized energy inequalities on report runs.
pub const GEN_SLACK_TOL: f64 = 1e-8;
/// Slack floor for the lattice-exact tail and splitting bounds.
pub const LATTICE_SLACK_TOL: f64 = 1e-12;
/// Decay target for the perturbation norms relative to `||w0||_2`.
pub const DECAY_TARGET: f64 = 1e-3;
/// Ceiling for the rest-control perturbation norm.
pub const REST_CONTROL_TOL: f64 = 1e-9;
/// Ceiling for the disagreement between the perturbation leg and the full
/// solve minus the steady state.
pub const DUAL_LEG_TOL: f64 = 1e-5;
/// Relative agreement required between the two steady-state routes.
pub const ROUTE_AGREEMENT_TOL: f64 = 1e-4;
/// Pairwise relative agreement required across steady initializations.
pub const UNIQUENESS_TOL: f64 = 1e-6;
/// The stationary residual must fall below `1e-8 * kappa * k_max`.
pub const RESIDUAL_FACTOR: f64 = 1e-8;
/// Allowed relative error of the fitted decay rate against the spectral gap.
pub const RATE_MATCH_TOL: f64 = 0.05;
/// Seeds drawn for the semigroup decay envelopes in `verify`.
pub const ENVELOPE_SEEDS: u64 = 50;
/// Coefficients above this fraction of a checkpoint's peak count as support.
const SUPPORT_REL_TOL: f64 = 1e-6;

#[derive(Debug)]
pub struct ScenarioOutcome {
    pub config_hash: String,
    pub run_dir: PathBuf,
    pub reports: Vec<CheckReport>,
    pub manifest: Manifest,
    pub all_passed: bool,
}

pub fn run_scenario(config: &RunConfig) -> Result<ScenarioOutcome> {
    match config.scenario {
        Scenario::Steady => run_steady(config),
        Scenario::Evolve => run_evolve(config),
        Scenario::Stability => run_stability_scenario(config),
        Scenario::Decay => run_decay(config),
        Scenario::Verify => run_verify(config),
        Scenario::Sweep => run_sweep(config),
    }
}

fn writer_for(config: &RunConfig) -> Result<RunWriter> {
    let mut w = RunWriter::create(
        &config.output_dir,
        &config.config_hash,
        config.scenario.name(),
        config.defaulted.clone(),
    )?;
    w.write_text("canonical_config.txt", &config.canonical_string())?;
    Ok(w)
}

/// Write the verdict rows (aggregate stream plus one file per check) and
/// close the run directory.
fn finish(
    mut writer: RunWriter,
    config: &RunConfig,
    reports: Vec<CheckReport>,
) -> Result<ScenarioOutcome> {
    if !reports.is_empty() {
        writer.write_ndjson("checks.ndjson", &reports)?;
        for r in &reports {
            writer.write_json(&format!("reports/{}.json", r.check_id), r)?;
        }
    }
    let run_dir = writer.dir().to_path_buf();
    let manifest = writer.finish()?;
    let all_passed = reports.iter().all(|r| r.pass);
    Ok(ScenarioOutcome {
        config_hash: config.config_hash.clone(),
        run_dir,
        reports,
        manifest,
        all_passed,
    })
}

fn report(check_id: String, config: &RunConfig, slack: f64, observed: f64, pass: bool) -> CheckReport {
    CheckReport {
        check_id,
        config_hash: config.config_hash.clone(),
        slack_min: slack,
        constant_observed: observed,
        pass,
    }
}

fn route_tag(route: Route) -> &'static str {
    match route {
        Route::Direct => "direct",
        Route::TimeIntegral => "time_integral",
    }
}

/// Largest |k| inside the dealias mask (the corner of the retained square).
fn k_max_of(config: &RunConfig) -> f64 {
    config.grid.dealias_cutoff_k() * std::f64::consts::SQRT_2
}

/// Solve for the steady state on one route and record its trace, snapshot,
/// residual verdict, and contraction verdict.
fn solve_steady_route(
    config: &RunConfig,
    f: &SpectralField,
    theta0: &SpectralField,
    route: Route,
    writer: &mut RunWriter,
    reports: &mut Vec<CheckReport>,
) -> Result<SpectralField> {
    let (theta, trace) = steady_state_iteration(f, &config.steady.params, theta0, route)?;
    let tag = route_tag(route);
    writer.write_ndjson(&format!("trace_{tag}.ndjson"), &trace.records)?;
    writer.write_spectral_snapshot(&format!("theta_{tag}.sqgf"), &theta)?;

    let res = residual(&theta, f, config.kappa, config.alpha);
    let bound = RESIDUAL_FACTOR * config.kappa * k_max_of(config);
    let rows: Vec<(f64, f64, f64)> = trace
        .records
        .iter()
        .map(|r| (r.i as f64, r.residual, bound))
        .collect();
    writer.write_csv(&format!("residual_{tag}.csv"), &rows)?;
    reports.push(report(
        format!("steady_residual_{tag}"),
        config,
        bound - res,
        res,
        res < bound,
    ));

    let max_ratio = trace
        .records
        .iter()
        .filter_map(|r| r.ratio)
        .fold(0.0_f64, f64::max);
    reports.push(report(
        format!("steady_contraction_{tag}"),
        config,
        1.0 - max_ratio,
        max_ratio,
        trace.converged && max_ratio < 1.0,
    ));
    Ok(theta)
}

fn run_steady(config: &RunConfig) -> Result<ScenarioOutcome> {
    let grid = config.grid;
    let f = make_annulus_force(&config.force, grid, config.alpha)?;
    verify_assumption_a(&f, config.force.rho0)?;
    let mut writer = writer_for(config)?;
    writer.write_spectral_snapshot("force.sqgf", &f)?;

    let mut reports = Vec::new();
    let zeros = SpectralField::zeros(grid);
    let mut thetas: Vec<SpectralField> = Vec::new();
    for route in config.steady.route.routes() {
        thetas.push(solve_steady_route(
            config,
            &f,
            &zeros,
            route,
            &mut writer,
            &mut reports,
        )?);
    }

    if thetas.len() == 2 {
        let scale = l2_norm(&thetas[0]);
        let rel = l2_norm(&thetas[0].sub(&thetas[1])) / scale;
        reports.push(report(
            "route_agreement".into(),
            config,
            ROUTE_AGREEMENT_TOL - rel,
            rel,
            rel <= ROUTE_AGREEMENT_TOL,
        ));
    }

    if config.steady.uniqueness_seeds > 0 {
        let base = &thetas[0];
        let scale = l2_norm(base);
        let mut solutions = vec![base.clone()];
        for s in 0..config.steady.uniqueness_seeds {
            let seed = config.force.seed.wrapping_add(1000 + s as u64);
            let mut init = make_band_field(grid, 1.0, 8.0, seed);
            let n = l2_norm(&init);
            if n > 0.0 {
                init.scale(scale / n);
            }
            let (th, _) =
                steady_state_iteration(&f, &config.steady.params, &init, Route::Direct)?;
            solutions.push(th);
        }
        let mut worst = 0.0_f64;
        for i in 0..solutions.len() {
            for j in (i + 1)..solutions.len() {
                worst = worst.max(l2_norm(&solutions[i].sub(&solutions[j])) / scale);
            }
        }
        reports.push(report(
            "steady_uniqueness".into(),
            config,
            UNIQUENESS_TOL - worst,
            worst,
            worst <= UNIQUENESS_TOL,
        ));
    }

    finish(writer, config, reports)
}

fn run_evolve(config: &RunConfig) -> Result<ScenarioOutcome> {
    let grid = config.grid;
    let f = make_annulus_force(&config.force, grid, config.alpha)?;
    let initial = if config.evolve.initial_l2 > 0.0 {
        let (lo, hi) = config.evolve.initial_band;
        let mut w = make_band_field(grid, lo, hi, config.evolve.initial_seed);
        let n = l2_norm(&w);
        if n == 0.0 {
            return Err(Error::validation(
                "evolve.initial_band",
                "contains no lattice mode",
            ));
        }
        w.scale(config.evolve.initial_l2 / n);
        w
    } else {
        SpectralField::zeros(grid)
    };

    let mut writer = writer_for(config)?;
    let traj = evolve(
        EquationVariant::FullSqg { force: f },
        config.solver,
        &initial,
        config.evolve.checkpoint_stride,
    )?;
    writer.write_ndjson("monitors.ndjson", &traj.monitors)?;
    writer.write_spectral_snapshot("theta_final.sqgf", &traj.final_state)?;
    if config.evolve.checkpoint_stride.is_some() {
        for (i, cp) in traj.checkpoints.iter().enumerate() {
            writer.write_spectral_snapshot(&format!("checkpoints/cp_{i:05}.sqgf"), &cp.state)?;
        }
    }

    let linf_max = traj.monitors.iter().map(|m| m.linf).fold(0.0_f64, f64::max);
    let reports = vec![report(
        "evolve_linf_bounded".into(),
        config,
        if linf_max.is_finite() { 1.0 } else { -1.0 },
        linf_max,
        linf_max.is_finite(),
    )];
    finish(writer, config, reports)
}

fn run_stability_scenario(config: &RunConfig) -> Result<ScenarioOutcome> {
    let grid = config.grid;
    let f = make_annulus_force(&config.force, grid, config.alpha)?;
    let mut writer = writer_for(config)?;
    let mut reports = Vec::new();

    let zeros = SpectralField::zeros(grid);
    let route = config.steady.route.routes()[0];
    let theta = solve_steady_route(config, &f, &zeros, route, &mut writer, &mut reports)?;

    let w0 = if config.stability.w0_l2 > 0.0 {
        let (lo, hi) = config.stability.w0_band;
        let mut w = make_band_field(grid, lo, hi, config.stability.w0_seed);
        let n = l2_norm(&w);
        if n == 0.0 {
            return Err(Error::validation(
                "stability.w0_band",
                "contains no lattice mode",
            ));
        }
        w.scale(config.stability.w0_l2 / n);
        w
    } else {
        SpectralField::zeros(grid)
    };

    let traj = run_stability(
        &theta,
        &w0,
        &f,
        config.solver,
        Some(config.stability.checkpoint_stride),
        config.stability.checkpoint_t_max,
    )?;
    writer.write_ndjson("stability.ndjson", &traj.records)?;

    let energy = energy_inequality_check(&traj);
    writer.write_json("energy_inequality.json", &energy)?;
    let w0_sq = traj.w0_l2 * traj.w0_l2;
    let energy_rows: Vec<(f64, f64, f64)> = traj
        .records
        .iter()
        .map(|r| (r.t, r.w_l2 * r.w_l2 + traj.kappa * r.diss_cum, w0_sq))
        .collect();
    writer.write_csv("energy_inequality.csv", &energy_rows)?;
    reports.push(report(
        "energy_inequality".into(),
        config,
        1.0 + ENERGY_RATIO_TOL - energy.max_ratio,
        energy.max_ratio,
        energy.pass,
    ));
    reports.push(report(
        "smallness_hypothesis".into(),
        config,
        energy.kappa_half - energy.grad_theta_l2,
        energy.grad_theta_l2 / energy.kappa_half,
        energy.hypothesis_satisfied,
    ));

    let gen = generalized_energy_check(&traj, &config.stability.splitting)?;
    writer.write_json("generalized_energy.json", &gen)?;
    let tail_rows: Vec<(f64, f64, f64)> =
        gen.tail_rows.iter().map(|r| (r.t, r.lhs, r.rhs)).collect();
    writer.write_csv("tail_bound.csv", &tail_rows)?;
    reports.push(report(
        "generalized_energy_low".into(),
        config,
        gen.low_min_slack,
        gen.low_min_slack,
        gen.low_min_slack >= -GEN_SLACK_TOL,
    ));
    reports.push(report(
        "generalized_energy_high".into(),
        config,
        gen.high_min_slack,
        gen.high_min_slack,
        gen.high_min_slack >= -GEN_SLACK_TOL,
    ));
    reports.push(report(
        "high_band_tail_bound".into(),
        config,
        gen.tail_min_slack,
        gen.tail_min_slack,
        gen.tail_min_slack >= -LATTICE_SLACK_TOL,
    ));

    let last = traj
        .records
        .last()
        .ok_or_else(|| Error::Other("stability run produced no records".into()))?;
    if traj.w0_l2 > 0.0 {
        let ratio = last.w_l2 / traj.w0_l2;
        reports.push(report(
            "perturbation_decay".into(),
            config,
            DECAY_TARGET - ratio,
            ratio,
            ratio < DECAY_TARGET,
        ));
        let split_ratio = last.low_l2.max(last.high_l2) / traj.w0_l2;
        reports.push(report(
            "split_norm_decay".into(),
            config,
            DECAY_TARGET - split_ratio,
            split_ratio,
            split_ratio < DECAY_TARGET,
        ));
    } else {
        let w_max = traj.records.iter().map(|r| r.w_l2).fold(0.0_f64, f64::max);
        reports.push(report(
            "rest_control".into(),
            config,
            REST_CONTROL_TOL - w_max,
            w_max,
            w_max <= REST_CONTROL_TOL,
        ));
    }
    reports.push(report(
        "dual_leg_consistency".into(),
        config,
        DUAL_LEG_TOL - traj.max_cross_check,
        traj.max_cross_check,
        traj.max_cross_check <= DUAL_LEG_TOL,
    ));

    finish(writer, config, reports)
}

fn run_decay(config: &RunConfig) -> Result<ScenarioOutcome> {
    let grid = config.grid;
    let f = make_annulus_force(&config.force, grid, config.alpha)?;
    let mut writer = writer_for(config)?;
    let mut reports = Vec::new();

    let zeros = SpectralField::zeros(grid);
    let route = config.steady.route.routes()[0];
    let theta = solve_steady_route(config, &f, &zeros, route, &mut writer, &mut reports)?;
    let u = riesz_perp(&theta);

    let traj = evolve(
        EquationVariant::BetaEquation {
            velocity: u.clone(),
            force: f.clone(),
        },
        config.solver,
        &zeros,
        Some(config.decay.checkpoint_stride),
    )?;
    writer.write_ndjson("beta.ndjson", &traj.monitors)?;

    let splitting = fourier_splitting_check(
        &traj,
        &u,
        &f,
        config.force.rho0,
        config.alpha,
        &config.stability.splitting,
        config.decay.weighted_window,
    )?;
    writer.write_json("fourier_splitting.json", &splitting)?;
    let split_rows: Vec<(f64, f64, f64)> = splitting
        .splitting_rows
        .iter()
        .map(|r| (r.t, r.shell_bound, r.dissipation))
        .collect();
    writer.write_csv("splitting.csv", &split_rows)?;
    let start_weighted = splitting.weighted_rows.first().map_or(0.0, |r| r.1);
    let weighted_rows: Vec<(f64, f64, f64)> = splitting
        .weighted_rows
        .iter()
        .map(|&(t, v)| (t, v, start_weighted))
        .collect();
    writer.write_csv("weighted_decay.csv", &weighted_rows)?;

    reports.push(report(
        "fourier_splitting_lattice".into(),
        config,
        splitting.splitting_min_slack,
        splitting.splitting_min_slack,
        splitting.splitting_min_slack >= -LATTICE_SLACK_TOL,
    ));
    reports.push(report(
        "spectral_amplitude_bound".into(),
        config,
        if splitting.c_hat_sup.is_finite() { 1.0 } else { -1.0 },
        splitting.c_hat_sup,
        splitting.c_hat_sup.is_finite(),
    ));
    let weighted_margin = start_weighted - splitting.weighted_sup;
    reports.push(report(
        "weighted_decay_sup_at_start".into(),
        config,
        weighted_margin,
        splitting.weighted_sup_t,
        splitting.sup_at_window_start,
    ));

    let series: Vec<(f64, f64)> = traj.monitors.iter().map(|m| (m.t, m.l2)).collect();
    let exp_fit = fit_decay(&series, DecayModel::Exponential, config.decay.fit_window)?;
    writer.write_json("decay_fit.json", &exp_fit)?;
    let fit_rows: Vec<(f64, f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t >= config.decay.fit_window.0 && *t <= config.decay.fit_window.1)
        .map(|&(t, v)| (t, v, exp_fit.eval(t)))
        .collect();
    writer.write_csv("beta_fit.csv", &fit_rows)?;

    let k_min = support_k_min(&traj.checkpoints, SUPPORT_REL_TOL).ok_or_else(|| {
        Error::Other("beta trajectory has no nonzero checkpoint for the support floor".into())
    })?;
    let predicted = config.kappa * k_min.powf(config.alpha);
    let rel_err = (exp_fit.rate - predicted).abs() / predicted;
    reports.push(report(
        "exp_rate_spectral_gap".into(),
        config,
        RATE_MATCH_TOL - rel_err,
        exp_fit.rate / predicted,
        rel_err <= RATE_MATCH_TOL,
    ));

    finish(writer, config, reports)
}

fn run_verify(config: &RunConfig) -> Result<ScenarioOutcome> {
    let writer = writer_for(config)?;
    let reports = checks::verify_reports(
        config.grid,
        config.verify.n_fields,
        ENVELOPE_SEEDS,
        config.verify.seed_base,
        &config.config_hash,
    )?;
    finish(writer, config, reports)
}

#[derive(Debug, Clone, Serialize)]
struct SweepRow {
    index: usize,
    config_hash: String,
    scenario: String,
    kappa: f64,
    alpha: f64,
    target_x_norm: Option<f64>,
    seed: u64,
    n_reports: usize,
    all_passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn run_sweep(config: &RunConfig) -> Result<ScenarioOutcome> {
    let subs = config.expand_sweep()?;
    let writer = writer_for(config)?;

    let n_workers = config.sweep.workers.min(subs.len()).max(1);
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<(SweepRow, Option<Error>)>>> =
        (0..subs.len()).map(|_| Mutex::new(None)).collect();

    std::thread::scope(|scope| {
        for _ in 0..n_workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= subs.len() {
                    break;
                }
                let sub = &subs[i];
                let (row, err) = match run_scenario(sub) {
                    Ok(out) => (
                        SweepRow {
                            index: i,
                            config_hash: sub.config_hash.clone(),
                            scenario: sub.scenario.name().into(),
                            kappa: sub.kappa,
                            alpha: sub.alpha,
                            target_x_norm: sub.force.target_x_norm,
                            seed: sub.force.seed,
                            n_reports: out.reports.len(),
                            all_passed: out.all_passed,
                            error: None,
                        },
                        None,
                    ),
                    Err(e) => (
                        SweepRow {
                            index: i,
                            config_hash: sub.config_hash.clone(),
                            scenario: sub.scenario.name().into(),
                            kappa: sub.kappa,
                            alpha: sub.alpha,
                            target_x_norm: sub.force.target_x_norm,
                            seed: sub.force.seed,
                            n_reports: 0,
                            all_passed: false,
                            error: Some(e.to_string()),
                        },
                        Some(e),
                    ),
                };
                *slots[i].lock().unwrap() = Some((row, err));
            });
        }
    });

    let mut rows = Vec::with_capacity(subs.len());
    let mut first_error: Option<Error> = None;
    for slot in slots {
        let (row, err) = slot
            .into_inner()
            .unwrap()
            .expect("every sweep slot is filled before the scope ends");
        if first_error.is_none() {
            first_error = err;
        }
        rows.push(row);
    }

    let mut writer = writer;
    writer.write_ndjson("sweep_summary.ndjson", &rows)?;
    let reports: Vec<CheckReport> = rows
        .iter()
        .map(|r| CheckReport {
            check_id: format!("sweep_{:03}_{}", r.index, &r.config_hash[..8]),
            config_hash: config.config_hash.clone(),
            slack_min: if r.all_passed { 1.0 } else { -1.0 },
            constant_observed: r.n_reports as f64,
            pass: r.all_passed,
        })
        .collect();
    let outcome = finish(writer, config, reports)?;
    if let Some(e) = first_error {
        return Err(e);
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config_with_overrides;
    use crate::config::Overrides;

    fn base_config(n: usize, scenario: &str, extra: &str) -> String {
        format!(
            r#"
scenario = "{scenario}"

[grid]
n = {n}

[physics]
kappa = 1.0
alpha = 1.0

[force]
rho0 = 5.0
rho1 = 10.0
target_x_norm = 0.05

{extra}
"#
        )
    }

    fn run_in_temp(text: &str) -> (tempfile::TempDir, ScenarioOutcome) {
        let tmp = tempfile::tempdir().unwrap();
        let over = Overrides {
            output_dir: Some(tmp.path().to_path_buf()),
            ..Default::default()
        };
        let config = parse_config_with_overrides(text, &over).unwrap();
        let out = run_scenario(&config).unwrap();
        (tmp, out)
    }

    #[test]
    fn steady_scenario_writes_trace_snapshot_and_verdicts() {
        let text = base_config(
            32,
            "steady",
            "[steady]\nroute = \"both\"\nuniqueness_seeds = 2\n",
        );
        let (_tmp, out) = run_in_temp(&text);
        assert!(out.all_passed, "reports: {:#?}", out.reports);
        let names: Vec<&str> = out
            .manifest
            .artifacts
            .iter()
            .map(|a| a.name.as_str())
            .collect();
        for expected in [
            "trace_direct.ndjson",
            "trace_time_integral.ndjson",
            "theta_direct.sqgf",
            "theta_time_integral.sqgf",
            "residual_direct.csv",
            "checks.ndjson",
            "force.sqgf",
            "canonical_config.txt",
        ] {
            assert!(
                names.contains(&expected),
                "missing artifact {expected}, have {names:?}"
            );
        }
        let ids: Vec<&str> = out.reports.iter().map(|r| r.check_id.as_str()).collect();
        assert!(ids.contains(&"route_agreement"));
        assert!(ids.contains(&"steady_uniqueness"));
        assert!(ids.contains(&"steady_residual_direct"));
        assert!(ids.contains(&"steady_contraction_time_integral"));
    }

    #[test]
    fn stability_scenario_emits_all_inequality_verdicts() {
        let text = base_config(
            32,
            "stability",
            "[solver]\nt_final = 6.0\n\n[stability]\nw0_l2 = 0.05\ncheckpoint_t_max = 6.0\n",
        );
        let (_tmp, out) = run_in_temp(&text);
        let ids: Vec<&str> = out.reports.iter().map(|r| r.check_id.as_str()).collect();
        for expected in [
            "energy_inequality",
            "smallness_hypothesis",
            "generalized_energy_low",
            "generalized_energy_high",
            "high_band_tail_bound",
            "dual_leg_consistency",
        ] {
            assert!(ids.contains(&expected), "missing verdict {expected}");
        }
        for r in &out.reports {
            if r.check_id != "perturbation_decay" && r.check_id != "split_norm_decay" {
                assert!(r.pass, "{} failed: {:?}", r.check_id, r);
            }
        }
        let names: Vec<&str> = out
            .manifest
            .artifacts
            .iter()
            .map(|a| a.name.as_str())
            .collect();
        assert!(names.contains(&"stability.ndjson"));
        assert!(names.contains(&"energy_inequality.csv"));
        assert!(names.contains(&"tail_bound.csv"));
    }

    #[test]
    fn rest_control_stability_run_passes_the_fixed_point_certificate() {
        let text = base_config(
            32,
            "stability",
            "[solver]\nt_final = 2.0\n\n[stability]\nw0_l2 = 0.0\ncheckpoint_t_max = 2.0\n",
        );
        let (_tmp, out) = run_in_temp(&text);
        let rest = out
            .reports
            .iter()
            .find(|r| r.check_id == "rest_control")
            .expect("rest control verdict present");
        assert!(rest.pass, "rest control failed: {rest:?}");
        assert!(out.all_passed, "reports: {:#?}", out.reports);
    }

    #[test]
    fn verify_scenario_meets_the_report_floor() {
        let text = base_config(64, "verify", "[verify]\nn_fields = 10\n");
        let tmp = tempfile::tempdir().unwrap();
        let over = Overrides {
            output_dir: Some(tmp.path().to_path_buf()),
            ..Default::default()
        };
        let config = parse_config_with_overrides(&text, &over).unwrap();
        let out = run_scenario(&config).unwrap();
        assert!(out.all_passed, "reports: {:#?}", out.reports);
        assert!(out.reports.len() >= 12);
        let report_files = out
            .manifest
            .artifacts
            .iter()
            .filter(|a| a.name.starts_with("reports/"))
            .count();
        assert!(
            report_files >= 12,
            "manifest lists {report_files} report files"
        );
    }

    #[test]
    fn sweep_runs_every_point_and_reduces_deterministically() {
        let text = base_config(
            16,
            "sweep",
            "[force]\nrho0 = 2.0\nrho1 = 4.0\ntarget_x_norm = 0.02\n\n[sweep]\nrun = \"steady\"\ntarget_x_norm = [0.01, 0.02]\nseeds = [1, 2]\nworkers = 2\n",
        );
        // base_config already has a [force] section; rebuild without the clash
        let text = text.replace(
            "[force]\nrho0 = 5.0\nrho1 = 10.0\ntarget_x_norm = 0.05\n\n[force]",
            "[force]",
        );
        let (tmp, out) = run_scenario_sweep(&text);
        assert_eq!(out.reports.len(), 4);
        assert!(out.all_passed, "reports: {:#?}", out.reports);
        let summary = std::fs::read_to_string(
            tmp.path().join(&out.config_hash).join("sweep_summary.ndjson"),
        )
        .unwrap();
        let rows: Vec<serde_json::Value> = summary
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(rows.len(), 4);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row["index"].as_u64().unwrap() as usize, i);
            assert!(row["all_passed"].as_bool().unwrap());
            let sub_hash = row["config_hash"].as_str().unwrap();
            assert!(
                tmp.path().join(sub_hash).join("manifest.json").exists(),
                "sub-run {sub_hash} missing its own manifest"
            );
        }
    }

    fn run_scenario_sweep(text: &str) -> (tempfile::TempDir, ScenarioOutcome) {
        let tmp = tempfile::tempdir().unwrap();
        let over = Overrides {
            output_dir: Some(tmp.path().to_path_buf()),
            ..Default::default()
        };
        let config = parse_config_with_overrides(text, &over).unwrap();
        let out = run_scenario(&config).unwrap();
        (tmp, out)
    }

    #[test]
    fn scenario_reruns_are_byte_identical() {
        let text = base_config(16, "steady", "");
        let text = text.replace("rho0 = 5.0\nrho1 = 10.0", "rho0 = 2.0\nrho1 = 4.0");
        let tmp_a = tempfile::tempdir().unwrap();
        let tmp_b = tempfile::tempdir().unwrap();
        let mut bytes = Vec::new();
        for tmp in [&tmp_a, &tmp_b] {
            let over = Overrides {
                output_dir: Some(tmp.path().to_path_buf()),
                ..Default::default()
            };
            let config = parse_config_with_overrides(&text, &over).unwrap();
            let out = run_scenario(&config).unwrap();
            let dir = tmp.path().join(&out.config_hash);
            let trace = std::fs::read(dir.join("trace_direct.ndjson")).unwrap();
            let checks = std::fs::read(dir.join("checks.ndjson")).unwrap();
            let manifest = std::fs::read(dir.join("manifest.json")).unwrap();
            bytes.push((trace, checks, manifest));
        }
        assert_eq!(bytes[0].0, bytes[1].0, "trace NDJSON differs across reruns");
        assert_eq!(bytes[0].1, bytes[1].1, "checks NDJSON differs across reruns");
        assert_eq!(bytes[0].2, bytes[1].2, "manifest differs across reruns");
    }
}
