use std::path::Path;

use latdisp::critical::{degenerate_catalog, find_critical_points, predicted_decay, velocity_bound};
use latdisp::decay::{decay_sweep, fit_exponents, DecaySample};
use latdisp::lattice::LatticeField;
use latdisp::newton::{adaptedness, case_catalog, newton_polygon, NewtonError, NewtonPolygon, TaylorSeries2, Q};
use latdisp::nls::{
    evolve, graded_times, linear_strichartz_experiment, picard_solve, random_profile, small_data_experiment,
    strichartz_norm, Method, Trajectory,
};
use latdisp::oscillatory::green_points;
use latdisp::symbol::{PhaseSpec, TorusPoint};
use serde_json::{json, Value};
use std::f64::consts::PI;

use crate::config::*;
use crate::error::CliError;
use crate::output::{num, Run};

pub fn rational(q: &Q) -> String {
    q.to_string()
}

fn check_dim(d: usize) -> Result<(), CliError> {
    if d == 1 || d == 2 {
        Ok(())
    } else {
        Err(CliError::Validation(format!("dim must be 1 or 2, got {d}")))
    }
}

fn box_points(d: usize, r: i64) -> Vec<Vec<i64>> {
    match d {
        1 => (-r..=r).map(|x| vec![x]).collect(),
        _ => (-r..=r).flat_map(|a| (-r..=r).map(move |b| vec![a, b])).collect(),
    }
}

pub fn green(cfg: &GreenConfig, out: &Path) -> Result<Value, CliError> {
    check_dim(cfg.dim)?;
    let pts = if cfg.x.is_empty() {
        if cfg.radius < 0 {
            return Err(CliError::Validation("radius must be ≥ 0".into()));
        }
        box_points(cfg.dim, cfg.radius)
    } else {
        cfg.x.clone()
    };
    if let Some(p) = pts.iter().find(|p| p.len() != cfg.dim) {
        return Err(CliError::Validation(format!("point {p:?} does not have dimension {}", cfg.dim)));
    }
    let mut run = Run::new("green", out, cfg)?;
    let mut rows = Vec::new();
    for &t in &cfg.t.0 {
        let (vals, n) = green_points(&pts, t, cfg.gamma, &cfg.quadrature)?;
        for (p, v) in pts.iter().zip(vals) {
            let x: Vec<String> = p.iter().map(|c| c.to_string()).collect();
            rows.push(vec![num(t), x.join(" "), num(v.re), num(v.im), num(v.norm()), n.to_string()]);
        }
    }
    run.csv("green.csv", &["t", "x", "re", "im", "abs", "grid_n"], &rows)?;
    run.finish()
}

fn gamma_tag(g: f64) -> String {
    format!("{g}")
}

pub fn decay_fit(cfg: &DecayFitConfig, out: &Path) -> Result<Value, CliError> {
    check_dim(cfg.dim)?;
    if cfg.gamma.is_empty() {
        return Err(CliError::Validation("gamma list is empty".into()));
    }
    let mut run = Run::new("decay-fit", out, cfg)?;
    let mut fits = Vec::new();
    for &gamma in &cfg.gamma {
        let samples: Vec<DecaySample> =
            decay_sweep(&cfg.t.0, gamma, cfg.dim, &cfg.sup).into_iter().collect::<Result<_, _>>()?;
        let rows: Vec<Vec<String>> = samples
            .iter()
            .map(|s| {
                let x: Vec<String> = s.argmax_x.iter().map(|c| c.to_string()).collect();
                let method = serde_json::to_value(s.method).ok().and_then(|v| v.as_str().map(String::from));
                vec![num(s.t), num(s.sup_abs), x.join(" "), method.unwrap_or_default()]
            })
            .collect();
        let name = format!("decay_d{}_gamma{}.csv", cfg.dim, gamma_tag(gamma));
        run.csv(&name, &["t", "sup_abs", "argmax_x", "method"], &rows)?;
        let pred = predicted_decay(cfg.dim, gamma)?;
        let fit = fit_exponents(&samples);
        let entry = match fit {
            Ok(f) => json!({
                "gamma": gamma,
                "dim": cfg.dim,
                "csv": name,
                "beta_hat": f.beta_hat,
                "p_hat": f.p_hat,
                "c_hat": f.c_hat,
                "residual": f.residual,
                "residuals": f.residuals,
                "predicted": { "beta": rational(&pred.beta), "p": pred.p },
            }),
            Err(e) => json!({
                "gamma": gamma,
                "dim": cfg.dim,
                "csv": name,
                "fit_error": e.to_string(),
                "predicted": { "beta": rational(&pred.beta), "p": pred.p },
            }),
        };
        fits.push(entry);
    }
    run.json("fit.json", &json!({ "fits": fits }))?;
    run.finish()
}

pub fn critical_points(cfg: &CriticalConfig, out: &Path) -> Result<Value, CliError> {
    check_dim(cfg.dim)?;
    let v = if cfg.v.is_empty() { vec![0.0; cfg.dim] } else { cfg.v.clone() };
    let spec = PhaseSpec::new(cfg.dim, cfg.gamma, v)?;
    if !(cfg.tol > 0.0) {
        return Err(CliError::Validation("tol must be positive".into()));
    }
    let mut run = Run::new("critical-points", out, cfg)?;
    let search = find_critical_points(&spec, cfg.seed_grid_n, cfg.tol);
    let mut report = json!({
        "velocity_bound": velocity_bound(cfg.dim, cfg.gamma),
        "points": search.points,
        "stalls": search.stalls.len(),
        "predicted_decay": {
            "beta": rational(&predicted_decay(cfg.dim, cfg.gamma)?.beta),
            "p": predicted_decay(cfg.dim, cfg.gamma)?.p,
        },
    });
    if cfg.catalog {
        if cfg.dim != 2 {
            return Err(CliError::Validation("the degenerate catalog is two-dimensional".into()));
        }
        let cat = degenerate_catalog(cfg.gamma);
        report["catalog"] =
            serde_json::to_value(cat.points(cfg.curve_samples)).map_err(|e| CliError::Config(e.to_string()))?;
    }
    run.json("critical.json", &report)?;
    run.finish()
}

fn polygon_json(p: &NewtonPolygon) -> Value {
    let mut v = serde_json::to_value(p).unwrap_or(Value::Null);
    v["distance"] = Value::String(rational(&p.distance));
    v
}

pub fn preset_point(gamma: f64, preset: Preset, index: usize) -> Result<TorusPoint, CliError> {
    let cat = degenerate_catalog(gamma);
    let pick = |v: Vec<TorusPoint>, what: &str| {
        let n = v.len();
        v.into_iter()
            .nth(index.min(n.saturating_sub(1)))
            .ok_or_else(|| CliError::Validation(format!("{what} is empty for γ = {gamma}")))
    };
    match preset {
        Preset::SpecialPoint => Ok(TorusPoint::new(vec![PI / 2.0, PI / 2.0])?),
        Preset::ECurve => pick(cat.e_curve(9), "E curve"),
        Preset::Sigma2 => pick(cat.sigma2.clone(), "Σ₂"),
        Preset::DCurve => pick(cat.d_curve(9), "D curve"),
    }
}

pub fn newton(cfg: &NewtonConfig, out: &Path) -> Result<Value, CliError> {
    let mut run = Run::new("newton", out, cfg)?;
    let report = if let Some(map) = &cfg.series {
        let s = TaylorSeries2::from_map(cfg.order, map)?;
        let p = newton_polygon(&s)?;
        let mut r = json!({ "polygon": polygon_json(&p) });
        match adaptedness(&s, &p) {
            Ok(a) => {
                r["adapted"] = json!(true);
                r["m_pr"] = json!(a.m_pr);
                r["nu"] = json!(a.nu);
                r["index"] = json!({ "beta": rational(&a.index.0), "nu": a.index.1 });
                r["principal_part"] = json!(a.principal_part.to_map());
            }
            Err(e @ NewtonError::NotAdapted { .. }) => {
                r["adapted"] = json!(false);
                r["obstruction"] = json!(e.to_string());
            }
            Err(e) => return Err(e.into()),
        }
        r
    } else {
        let xi = match cfg.preset {
            Some(p) => preset_point(cfg.gamma, p, cfg.curve_index)?,
            None if cfg.xi.len() == 2 => TorusPoint::new(cfg.xi.clone())?,
            None => return Err(CliError::Validation("newton needs a preset, a 2-d xi or a series".into())),
        };
        let c = case_catalog(cfg.gamma, &xi)?;
        let stages: Vec<Value> = c
            .stages
            .iter()
            .map(|s| json!({ "label": s.label, "polygon": polygon_json(&s.polygon), "obstruction": s.obstruction }))
            .collect();
        json!({
            "gamma": cfg.gamma,
            "kind": c.kind,
            "xi": c.xi.coords(),
            "velocity": c.velocity,
            "changes": c.changes,
            "polygon": polygon_json(&c.polygon),
            "adapted": c.report.adapted,
            "m_pr": c.report.m_pr,
            "nu": c.report.nu,
            "index": { "beta": rational(&c.report.index.0), "nu": c.report.index.1 },
            "principal_part": c.report.principal_part.to_map(),
            "claims": c.claims,
            "stages": stages,
        })
    };
    run.json("polygon.json", &report)?;
    run.finish()
}

fn initial_data(cfg: &SolveConfig) -> Result<LatticeField, CliError> {
    check_dim(cfg.dim)?;
    if !(cfg.data.epsilon >= 0.0 && cfg.data.epsilon.is_finite()) {
        return Err(CliError::Validation("epsilon must be finite and ≥ 0".into()));
    }
    Ok(match cfg.data.kind {
        DataKind::Delta => LatticeField::delta(cfg.dim, cfg.data.epsilon),
        DataKind::Random => random_profile(cfg.dim, cfg.data.radius, cfg.data.epsilon, cfg.data.seed),
    })
}

fn norm_rows(traj: &Trajectory) -> Vec<Vec<String>> {
    traj.times.iter().zip(&traj.norms).map(|(&t, n)| vec![num(t), num(n.l2), num(n.linf)]).collect()
}

pub fn solve(cfg: &SolveConfig, out: &Path) -> Result<Value, CliError> {
    let f = initial_data(cfg)?;
    cfg.solver.validate()?;
    let mut run = Run::new("solve", out, cfg)?;
    let (traj, picard) = match cfg.solver.method {
        Method::Strang => (evolve(&f, cfg.gamma, &cfg.solver)?, None),
        Method::Picard => {
            let o = picard_solve(&f, cfg.gamma, &cfg.solver)?;
            let info = json!({
                "residuals": o.residuals,
                "ratios": o.ratios(),
                "converged": o.converged,
                "non_contraction": o.non_contraction,
            });
            (o.trajectory, Some(info))
        }
    };
    run.csv("norms.csv", &["t", "l2", "linf"], &norm_rows(&traj))?;
    let snaps: Vec<Value> = traj
        .snapshots
        .iter()
        .map(|s| json!({ "t": s.t, "dim": s.field.d, "radius": s.field.radius, "values": s.field.to_interleaved() }))
        .collect();
    run.json("snapshots.json", &json!({ "snapshots": snaps }))?;
    let m0 = traj.norms[0].l2;
    let drift = traj.norms.iter().fold(0.0f64, |m, r| m.max((r.l2 - m0).abs()));
    let mut summary = json!({
        "grid_n": traj.grid_n,
        "leak_max": traj.leak_max,
        "mass_drift": if m0 > 0.0 { drift / m0 } else { 0.0 },
        "steps": traj.times.len() - 1,
    });
    if cfg.dim == 2 {
        summary["strichartz_norm"] = json!(strichartz_norm(&traj, cfg.gamma)?);
    }
    if let Some(p) = picard {
        summary["picard"] = p;
    }
    run.json("summary.json", &summary)?;
    run.finish()
}

pub fn strichartz(cfg: &StrichartzConfig, out: &Path) -> Result<Value, CliError> {
    let mut run = Run::new("strichartz", out, cfg)?;
    match cfg.mode {
        StrichartzMode::SmallData => {
            let r = small_data_experiment(cfg.epsilon, cfg.s, cfg.gamma, cfg.t_final, &cfg.small_data)?;
            run.json("small_data.json", &r)?;
        }
        StrichartzMode::Linear => {
            let l = &cfg.linear;
            if l.horizons.is_empty() || l.samples == 0 {
                return Err(CliError::Validation("linear experiment needs horizons and samples".into()));
            }
            if !(l.h0 > 0.0 && l.t_switch >= l.h0 && l.growth > 1.0) {
                return Err(CliError::Validation("need h0 > 0, t_switch ≥ h0, growth > 1".into()));
            }
            let t_end = l.horizons.iter().cloned().fold(0.0, f64::max);
            let times = graded_times(l.h0, l.t_switch, l.growth, t_end, &l.horizons);
            let r = linear_strichartz_experiment(cfg.gamma, l.samples, l.radius, &l.horizons, &times, l.seed);
            run.json("linear_strichartz.json", &r)?;
        }
    }
    run.finish()
}
