//! One function per command. Each returns a JSON result and a flat table;
//! model-dependent defaults are written back into the resolved config.

use rayon::prelude::*;
use serde_json::{json, Value};

use rm_hopf::closures::{base_covariance, full_covariance, predation_covariance, ClosureKind};
use rm_hopf::lna::{
    closure_w22_gap, default_sweep_grid, integrate_psd, psd_sweep, solve_lyapunov, spectral_scale,
    ssf_pipeline, uniform_grid, IntegrationGrid, PsdSweep, SsfOutcome, SsfReport,
};
use rm_hopf::matrix::{factorize_covariance, SymMatrix2};
use rm_hopf::model::{
    classify_regime, equilibria, jacobian_at_k3, predation_intensity, require_coexistence,
    EquilibriumKind, ModelParams, RegimeLabel,
};
use rm_hopf::sim::{ensemble_run, Coordinates, EnsembleRun, PsdEstimate};

use crate::config::{
    Command, FrequencyGrid, IntegrationBlock, KGrid, RunConfig, DEFAULT_SWEEP_POINTS,
};
use crate::error::CliError;
use crate::output::{Cell, Table};

pub struct Outcome {
    pub result: Value,
    pub table: Table,
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("result types serialize")
}

fn sym(w: &SymMatrix2, prefix: &str) -> Value {
    json!({
        format!("{prefix}11"): w.q11,
        format!("{prefix}12"): w.q12,
        format!("{prefix}22"): w.q22,
    })
}

pub fn run(cfg: &mut RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.params()?;
    match cfg.command {
        Command::Equilibria => Ok(equilibria_cmd(&params)),
        Command::Regime => Ok(regime_cmd(&params)),
        Command::Jacobian => jacobian_cmd(&params),
        Command::Covariance => covariance_cmd(&params, cfg.closure()),
        Command::Lyapunov => lyapunov_cmd(&params, cfg.closure()),
        Command::Psd => psd_cmd(&params, cfg),
        Command::Ellipse => ellipse_cmd(&params, cfg),
        Command::Precursor => precursor_cmd(&params, cfg),
        Command::Simulate => simulate_cmd(cfg),
        Command::CompareClosures => compare_cmd(&params, cfg),
        Command::SweepK => sweep_cmd(&params, cfg),
    }
}

fn kind_name(kind: EquilibriumKind) -> &'static str {
    match kind {
        EquilibriumKind::Origin => "Origin",
        EquilibriumKind::PreyOnly => "PreyOnly",
        EquilibriumKind::Coexistence => "Coexistence",
    }
}

fn equilibria_cmd(params: &ModelParams) -> Outcome {
    let eqs = equilibria(params);
    let mut table = Table::new(&["kind", "N", "P"]);
    for eq in &eqs {
        table.push(vec![kind_name(eq.kind).into(), eq.state.n.into(), eq.state.p.into()]);
    }
    let list: Vec<Value> = eqs
        .iter()
        .map(|eq| json!({"kind": kind_name(eq.kind), "N": eq.state.n, "P": eq.state.p}))
        .collect();
    Outcome {
        result: json!({
            "equilibria": list,
            "coexistence_feasible": params.coexistence_feasible(),
        }),
        table,
    }
}

fn regime_cmd(params: &ModelParams) -> Outcome {
    let r = classify_regime(params);
    let mut table = Table::new(&["label", "hopf_k", "margin"]);
    table.push(vec![r.label.as_str().into(), r.hopf_k.into(), r.margin.into()]);
    Outcome {
        result: to_value(&r),
        table,
    }
}

fn jacobian_cmd(params: &ModelParams) -> Result<Outcome, CliError> {
    let k3 = require_coexistence(params)?;
    let j = jacobian_at_k3(params)?;
    let eig = j.eigenvalues();
    let mut table = Table::new(&[
        "a11", "a12", "a21", "a22", "trace", "det", "eig1_re", "eig1_im", "eig2_re", "eig2_im",
    ]);
    table.push(vec![
        j.a11.into(),
        j.a12.into(),
        j.a21.into(),
        j.a22.into(),
        j.trace().into(),
        j.det().into(),
        eig[0].re.into(),
        eig[0].im.into(),
        eig[1].re.into(),
        eig[1].im.into(),
    ]);
    Ok(Outcome {
        result: json!({
            "k3": {"N": k3.n, "P": k3.p},
            "a11": j.a11, "a12": j.a12, "a21": j.a21, "a22": j.a22,
            "trace": j.trace(),
            "det": j.det(),
            "hurwitz": j.is_hurwitz(),
            "eigenvalues": eig.iter().map(|z| json!({"re": z.re, "im": z.im})).collect::<Vec<_>>(),
        }),
        table,
    })
}

fn covariance_cmd(params: &ModelParams, closure: ClosureKind) -> Result<Outcome, CliError> {
    let k3 = require_coexistence(params)?;
    let base = base_covariance(params, k3);
    let pred = predation_covariance(params, k3, closure);
    let full = full_covariance(params, k3, closure);
    let b = factorize_covariance(&full)?;
    let mut table = Table::new(&["term", "q11", "q12", "q22"]);
    for (name, m) in [("base", base), ("predation", pred), ("full", full)] {
        table.push(vec![name.into(), m.q11.into(), m.q12.into(), m.q22.into()]);
    }
    Ok(Outcome {
        result: json!({
            "closure": closure,
            "k3": {"N": k3.n, "P": k3.p},
            "f_pred": predation_intensity(params, k3),
            "base": sym(&base, "q"),
            "predation": sym(&pred, "q"),
            "full": sym(&full, "q"),
            "factor": {"b11": b.a11, "b12": b.a12, "b21": b.a21, "b22": b.a22},
        }),
        table,
    })
}

fn lyapunov_cmd(params: &ModelParams, closure: ClosureKind) -> Result<Outcome, CliError> {
    let k3 = require_coexistence(params)?;
    let j = jacobian_at_k3(params)?;
    let d = full_covariance(params, k3, closure);
    let sol = solve_lyapunov(&j, &d)?;
    let w = sol.w;
    let mut table = Table::new(&["w11", "w12", "w22", "residual_norm"]);
    table.push(vec![w.q11.into(), w.q12.into(), w.q22.into(), sol.residual_norm.into()]);
    Ok(Outcome {
        result: json!({
            "closure": closure,
            "w11": w.q11, "w12": w.q12, "w22": w.q22,
            "residual_norm": sol.residual_norm,
            "d_star": sym(&d, "q"),
        }),
        table,
    })
}

fn psd_cmd(params: &ModelParams, cfg: &mut RunConfig) -> Result<Outcome, CliError> {
    let closure = cfg.closure();
    let k3 = require_coexistence(params)?;
    let j = jacobian_at_k3(params)?;
    let d = full_covariance(params, k3, closure);
    let grid = *cfg.frequency_grid.get_or_insert_with(|| {
        let g = default_sweep_grid(&j);
        FrequencyGrid {
            omega_min: g[0],
            omega_max: g[g.len() - 1],
            points: g.len(),
        }
    });
    let igrid = *cfg.integration_grid.get_or_insert_with(|| {
        let g = IntegrationGrid::default_for(&j);
        IntegrationBlock {
            omega_max: g.omega_max,
            points: g.points,
        }
    });
    let sweep = psd_sweep(&j, &d, &uniform_grid(grid.omega_min, grid.omega_max, grid.points))?;
    let w = solve_lyapunov(&j, &d)?.w;
    let integrated = integrate_psd(
        &j,
        &d,
        &IntegrationGrid {
            omega_max: igrid.omega_max,
            points: igrid.points,
        },
    )?;
    let rel = |a: f64, b: f64| if b == 0.0 { (a - b).abs() } else { ((a - b) / b).abs() };
    let max_rel = rel(integrated.q11, w.q11)
        .max(rel(integrated.q12, w.q12))
        .max(rel(integrated.q22, w.q22));

    let mut table = Table::new(&["omega", "S_NN", "S_PP", "Re_S_NP", "Im_S_NP"]);
    let samples: Vec<Value> = sweep
        .samples
        .iter()
        .map(|s| {
            let np = s.s_np();
            table.push(vec![s.omega.into(), s.s_nn().into(), s.s_pp().into(), np.re.into(), np.im.into()]);
            json!({"omega": s.omega, "S_NN": s.s_nn(), "S_PP": s.s_pp(), "Re_S_NP": np.re, "Im_S_NP": np.im})
        })
        .collect();
    Ok(Outcome {
        result: json!({
            "closure": closure,
            "spectral_scale": spectral_scale(&j),
            "peak_nn": to_value(&sweep.peak_nn),
            "peak_pp": to_value(&sweep.peak_pp),
            "integral_check": {
                "integrated": sym(&integrated, "w"),
                "lyapunov": sym(&w, "w"),
                "max_relative_error": max_rel,
            },
            "samples": samples,
        }),
        table,
    })
}

fn require_defined(outcome: SsfOutcome) -> Result<SsfReport, CliError> {
    match outcome {
        SsfOutcome::Defined(r) => Ok(*r),
        SsfOutcome::NotDefined { trace, det, .. } => {
            Err(rm_hopf::Error::NotHurwitz { trace, det }.into())
        }
    }
}

fn ellipse_cmd(params: &ModelParams, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let report = require_defined(ssf_pipeline(params, cfg.closure(), cfg.p(), cfg.d_sep)?)?;
    let g = report.ellipse;
    let mut table = Table::new(&["lambda_plus", "lambda_minus", "ell_plus", "ell_minus", "theta", "p", "chi2"]);
    table.push(vec![
        g.lambda_plus.into(),
        g.lambda_minus.into(),
        g.ell_plus.into(),
        g.ell_minus.into(),
        g.theta.into(),
        g.p.into(),
        g.chi2.into(),
    ]);
    let mut result = to_value(&g);
    result["closure"] = to_value(&report.closure);
    result["w"] = sym(&report.lyapunov.w, "w");
    Ok(Outcome { result, table })
}

const PRECURSOR_HEADER: [&str; 9] = [
    "status", "regime", "pi_p", "d_sep", "d_sep_source", "ell_plus", "theta", "trace", "det",
];

fn precursor_cmd(params: &ModelParams, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let outcome = ssf_pipeline(params, cfg.closure(), cfg.p(), cfg.d_sep)?;
    let mut table = Table::new(&PRECURSOR_HEADER);
    match &outcome {
        SsfOutcome::Defined(r) => {
            let source = match to_value(&r.precursor.d_sep_source) {
                Value::String(s) => s,
                _ => String::new(),
            };
            table.push(vec![
                "defined".into(),
                r.precursor.regime.label.as_str().into(),
                r.precursor.pi_p.into(),
                r.precursor.d_sep.into(),
                Cell::Text(source),
                r.ellipse.ell_plus.into(),
                r.ellipse.theta.into(),
                r.jacobian.trace().into(),
                r.jacobian.det().into(),
            ]);
        }
        SsfOutcome::NotDefined { trace, det, regime, .. } => {
            table.push(vec![
                "not_defined".into(),
                regime.label.as_str().into(),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                (*trace).into(),
                (*det).into(),
            ]);
        }
    }
    Ok(Outcome {
        result: to_value(&outcome),
        table,
    })
}

fn psd_estimate_value(psd: &PsdEstimate) -> Value {
    json!({
        "segment_count": psd.segment_count,
        "sample_interval": psd.sample_interval,
        "omega": psd.omega_grid,
        "S_NN": psd.s_nn,
        "S_PP": psd.s_pp,
        "Re_S_NP": psd.s_np.iter().map(|z| z.re).collect::<Vec<_>>(),
        "Im_S_NP": psd.s_np.iter().map(|z| z.im).collect::<Vec<_>>(),
    })
}

fn run_value(run: &EnsembleRun) -> Value {
    json!({
        "stats": run.stats.map(|s| json!({
            "sample_mean": s.sample_mean,
            "sample_cov": sym(&s.sample_cov, "w"),
            "n_samples": s.n_samples,
            "replicates_used": s.replicates_used,
            "n_replicates": s.n_replicates,
            "survival_fraction": s.survival_fraction,
            "mean_absorption_time": s.mean_absorption_time,
            "survival_conditioned": s.survival_conditioned,
        })),
        "extinction": to_value(&run.extinction),
        "total_steps": run.trajectories.iter().map(|t| t.steps).sum::<u64>(),
        "total_redraws": run.total_redraws,
        "total_clamps": run.total_clamps,
        "psd": run.psd.as_ref().map(psd_estimate_value),
    })
}

/// Stationary covariance predicted by the LNA, when defined.
fn lna_reference(params: &ModelParams, closure: ClosureKind) -> Value {
    match ssf_pipeline(params, closure, 0.95, None) {
        Ok(SsfOutcome::Defined(r)) => sym(&r.lyapunov.w, "w"),
        _ => Value::Null,
    }
}

fn simulate_cmd(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let closure = cfg.closure();
    let (sim, welch) = cfg
        .sim_config(closure)?
        .expect("resolved simulate config has a simulation block");
    let run = ensemble_run(&sim, welch.as_ref())?;
    let mut table = Table::new(&["t", "N", "P"]);
    let first = &run.trajectories[0];
    let offset = match first.coordinates {
        Coordinates::Deviation => require_coexistence(&sim.params)?,
        Coordinates::Density => Default::default(),
    };
    for (t, s) in first.times.iter().zip(&first.states) {
        table.push(vec![(*t).into(), (s.n + offset.n).into(), (s.p + offset.p).into()]);
    }
    let mut result = run_value(&run);
    result["coordinates"] = to_value(&first.coordinates);
    result["lna_reference"] = lna_reference(&sim.params, closure);
    Ok(Outcome { result, table })
}

const COMPARED: [&str; 9] = [
    "w11", "w12", "w22", "lambda_plus", "lambda_minus", "ell_plus", "ell_minus", "theta", "pi_p",
];

fn compared_values(r: &SsfReport) -> [f64; 9] {
    let w = r.lyapunov.w;
    let g = r.ellipse;
    [w.q11, w.q12, w.q22, g.lambda_plus, g.lambda_minus, g.ell_plus, g.ell_minus, g.theta, r.precursor.pi_p]
}

fn compare_cmd(params: &ModelParams, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let [a, b] = cfg
        .closures
        .expect("resolved compare-closures config has a closure pair");
    let oa = ssf_pipeline(params, a, cfg.p(), cfg.d_sep)?;
    let ob = ssf_pipeline(params, b, cfg.p(), cfg.d_sep)?;
    let mut table = Table::new(&["quantity", a.name(), b.name(), "delta"]);
    let mut delta = Value::Null;
    if let (Some(ra), Some(rb)) = (oa.report(), ob.report()) {
        let (va, vb) = (compared_values(ra), compared_values(rb));
        let mut d = serde_json::Map::new();
        for (i, name) in COMPARED.iter().enumerate() {
            table.push(vec![(*name).into(), va[i].into(), vb[i].into(), (vb[i] - va[i]).into()]);
            d.insert(name.to_string(), json!(vb[i] - va[i]));
        }
        delta = Value::Object(d);
    } else {
        for name in COMPARED {
            table.push(vec![name.into(), Cell::Empty, Cell::Empty, Cell::Empty]);
        }
    }

    // Bernoulli and split share drift and all of D* except q12.
    let predicted = match (a, b) {
        (ClosureKind::BernoulliCoupled, ClosureKind::SplitDiagonal) => closure_w22_gap(params).ok(),
        (ClosureKind::SplitDiagonal, ClosureKind::BernoulliCoupled) => closure_w22_gap(params).ok().map(|g| -g),
        _ => None,
    }
    .filter(|_| delta != Value::Null);

    let mut simulation = Value::Null;
    if cfg.simulation.is_some() {
        let mut runs = Vec::new();
        for closure in [a, b] {
            let (sim, welch) = cfg.sim_config(closure)?.expect("simulation block present");
            runs.push(ensemble_run(&sim, welch.as_ref())?);
        }
        let cov = |r: &EnsembleRun| r.stats.map(|s| s.sample_cov);
        if let (Some(ca), Some(cb)) = (cov(&runs[0]), cov(&runs[1])) {
            for (name, x, y) in [
                ("sim_w11", ca.q11, cb.q11),
                ("sim_w12", ca.q12, cb.q12),
                ("sim_w22", ca.q22, cb.q22),
            ] {
                table.push(vec![name.into(), x.into(), y.into(), (y - x).into()]);
            }
        }
        simulation = json!({a.name(): run_value(&runs[0]), b.name(): run_value(&runs[1])});
    }

    Ok(Outcome {
        result: json!({
            "closures": [a, b],
            a.name(): to_value(&oa),
            b.name(): to_value(&ob),
            "delta": delta,
            "predicted_delta_w22": predicted,
            "simulation": simulation,
        }),
        table,
    })
}

const SWEEP_HEADER: [&str; 14] = [
    "k", "regime", "status", "trace", "det", "w11", "w12", "w22", "peak_omega", "peak_height",
    "ell_plus", "ell_minus", "theta", "pi_p",
];

struct SweepRow {
    k: f64,
    regime: RegimeLabel,
    trace_det: Option<(f64, f64)>,
    defined: Option<(SsfReport, PsdSweep)>,
}

fn sweep_point(params: &ModelParams, k: f64, cfg: &RunConfig) -> Result<SweepRow, CliError> {
    let p = params.with_k(k)?;
    let regime = classify_regime(&p).label;
    if !p.coexistence_feasible() {
        return Ok(SweepRow { k, regime, trace_det: None, defined: None });
    }
    let j = jacobian_at_k3(&p)?;
    let defined = match ssf_pipeline(&p, cfg.closure(), cfg.p(), cfg.d_sep)? {
        SsfOutcome::Defined(r) => {
            let sweep = psd_sweep(&j, &r.d_star, &default_sweep_grid(&j))?;
            Some((*r, sweep))
        }
        SsfOutcome::NotDefined { .. } => None,
    };
    Ok(SweepRow {
        k,
        regime,
        trace_det: Some((j.trace(), j.det())),
        defined,
    })
}

fn sweep_cmd(params: &ModelParams, cfg: &mut RunConfig) -> Result<Outcome, CliError> {
    let grid = match cfg.k_grid {
        Some(g) => g,
        None => {
            let k_h = rm_hopf::model::hopf_threshold(params)?;
            let k_feasible = params.c() / (params.m() - params.c());
            let g = KGrid {
                k_min: k_feasible + 0.1 * (k_h - k_feasible),
                k_max: k_h,
                points: DEFAULT_SWEEP_POINTS,
            };
            cfg.k_grid = Some(g);
            g
        }
    };
    let ks = uniform_grid(grid.k_min, grid.k_max, grid.points);
    let rows = ks
        .par_iter()
        .map(|&k| sweep_point(params, k, cfg))
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(&SWEEP_HEADER);
    let mut json_rows = Vec::with_capacity(rows.len());
    for row in &rows {
        let (trace, det) = row.trace_det.unzip();
        let status = if row.defined.is_some() { "defined" } else { "not_defined" };
        let mut cells: Vec<Cell> = vec![
            row.k.into(),
            row.regime.as_str().into(),
            status.into(),
            trace.into(),
            det.into(),
        ];
        let values: Option<[f64; 9]> = row.defined.as_ref().map(|(r, s)| {
            let w = r.lyapunov.w;
            let g = r.ellipse;
            [w.q11, w.q12, w.q22, s.peak_nn.omega, s.peak_nn.height, g.ell_plus, g.ell_minus, g.theta, r.precursor.pi_p]
        });
        cells.extend((0..9).map(|i| Cell::from(values.map(|v| v[i]))));
        table.push(cells);

        let mut obj = serde_json::Map::new();
        obj.insert("k".into(), json!(row.k));
        obj.insert("regime".into(), json!(row.regime.as_str()));
        obj.insert("status".into(), json!(status));
        if row.defined.is_none() {
            obj.insert("message".into(), json!(rm_hopf::lna::NOT_DEFINED_MESSAGE));
        }
        obj.insert("trace".into(), json!(trace));
        obj.insert("det".into(), json!(det));
        for (i, name) in SWEEP_HEADER[5..].iter().enumerate() {
            obj.insert(name.to_string(), json!(values.map(|v| v[i])));
        }
        json_rows.push(Value::Object(obj));
    }
    Ok(Outcome {
        result: json!({
            "closure": cfg.closure(),
            "hopf_k": classify_regime(params).hopf_k,
            "rows": json_rows,
        }),
        table,
    })
}
