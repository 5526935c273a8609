//! Acceptance suite. Runs every criterion in order and prints one PASS/FAIL line
//! per criterion; exits nonzero if any fails.
//!
//! `cargo test -p latdisp --test acceptance -- 4 7` runs a subset.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use latdisp::critical::{
    degenerate_catalog, find_critical_points, predicted_decay, vdc_order_1d, velocity_bound, CatalogKind,
    DecayPrediction,
};
use latdisp::decay::{decay_sweep, fit_exponents, geometric_times, sup_green, SupConfig};
use latdisp::lattice::LatticeField;
use latdisp::newton::{case_catalog, Face, Q};
use latdisp::nls::{
    evolve, graded_times, linear_strichartz_experiment, picard_solve, random_profile, small_data_experiment,
    SmallDataConfig, SolverConfig,
};
use latdisp::oscillatory::{green_points, linear_propagate, propagation_grid, QuadratureConfig};
use latdisp::symbol::{phase_gradient, phase_hessian, phase_value, PhaseSpec, TorusPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Check {
    pass: bool,
    detail: String,
}

impl Check {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

/// Collects sub-checks; the criterion passes only if all of them do.
#[derive(Default)]
struct Report {
    pass: bool,
    lines: Vec<String>,
    started: bool,
}

impl Report {
    fn check(&mut self, ok: bool, line: String) {
        if !self.started {
            self.pass = true;
            self.started = true;
        }
        self.pass &= ok;
        self.lines.push(format!("{} {line}", if ok { "ok " } else { "BAD" }));
    }

    fn finish(self) -> Check {
        Check::new(self.started && self.pass, self.lines.join("\n      "))
    }
}

fn pt(a: f64, b: f64) -> TorusPoint {
    TorusPoint::new(vec![a, b]).unwrap()
}

fn one_dim_exponents() -> Check {
    let ts = geometric_times(10.0, 1e4, 16);
    let mut r = Report::default();
    for (gamma, want) in [(0.0, 0.25), (-8.0, 0.25), (1.0, 1.0 / 3.0), (-4.0, 1.0 / 3.0)] {
        let samples: Result<Vec<_>, _> = decay_sweep(&ts, gamma, 1, &SupConfig::default()).into_iter().collect();
        match samples.map_err(|e| e.to_string()).and_then(|s| fit_exponents(&s).map_err(|e| e.to_string())) {
            Ok(fit) => r.check(
                (fit.beta_hat - want).abs() <= 0.04,
                format!("γ={gamma}: β̂={:.4} (target {want:.4} ± 0.04, p̂={})", fit.beta_hat, fit.p_hat),
            ),
            Err(e) => r.check(false, format!("γ={gamma}: {e}")),
        }
    }
    r.finish()
}

fn two_dim_exponents() -> Check {
    let ts = geometric_times(10.0, 500.0, 8);
    let mut r = Report::default();
    for (gamma, want, tol) in [(0.0, 0.5, 0.08), (-16.0, 0.5, 0.08), (1.0, 0.75, 0.10)] {
        let t0 = Instant::now();
        let samples: Result<Vec<_>, _> = decay_sweep(&ts, gamma, 2, &SupConfig::default()).into_iter().collect();
        match samples.map_err(|e| e.to_string()).and_then(|s| fit_exponents(&s).map_err(|e| e.to_string())) {
            Ok(fit) => r.check(
                (fit.beta_hat - want).abs() <= tol,
                format!(
                    "γ={gamma}: β̂={:.4} (target {want} ± {tol}, p̂={}) in {:.0} s",
                    fit.beta_hat,
                    fit.p_hat,
                    t0.elapsed().as_secs_f64()
                ),
            ),
            Err(e) => r.check(false, format!("γ={gamma}: {e}")),
        }
    }
    r.finish()
}

fn log_factor() -> Check {
    let stat = |gamma: f64, t: f64| -> Result<f64, String> {
        let s = sup_green(t, gamma, 2, &SupConfig::default()).map_err(|e| e.to_string())?;
        Ok(t.sqrt() * s.sup_abs)
    };
    let ratio = |gamma: f64| -> Result<(f64, f64, f64), String> {
        let (a, b) = (stat(gamma, 50.0)?, stat(gamma, 500.0)?);
        Ok((a, b, b / a))
    };
    let r_log = 500f64.ln() / 50f64.ln();
    let mut r = Report::default();
    for (gamma, lo, hi) in [(-8.0, 0.7 * r_log, 1.4 * r_log), (0.0, 0.85, 1.15)] {
        match ratio(gamma) {
            Ok((a, b, g)) => r.check(
                (lo..=hi).contains(&g),
                format!("γ={gamma}: √t·sup|G| = {a:.5} → {b:.5}, growth {g:.4} in [{lo:.3}, {hi:.3}]"),
            ),
            Err(e) => r.check(false, format!("γ={gamma}: {e}")),
        }
    }
    r.finish()
}

fn newton_fixtures() -> Check {
    let t0 = Instant::now();
    let mut r = Report::default();
    let e_point = degenerate_catalog(1.0).points(9).into_iter().find(|p| p.kind == CatalogKind::ECurve).map(|p| p.xi);
    let d_point = degenerate_catalog(-8.0).points(9).into_iter().find(|p| p.kind == CatalogKind::DCurve).map(|p| p.xi);
    let run = |gamma: f64, xi: Option<TorusPoint>| {
        xi.ok_or_else(|| "no catalog sample".to_string())
            .and_then(|xi| case_catalog(gamma, &xi).map_err(|e| e.to_string()))
    };

    match run(1.0, Some(pt(PI / 2.0, PI / 2.0))) {
        Ok(c) => r.check(
            c.report.distance == Q::new(4, 3) && c.report.m_pr == Some(1),
            format!("special point γ=1: d={} m={:?}", c.report.distance, c.report.m_pr),
        ),
        Err(e) => r.check(false, format!("special point γ=1: {e}")),
    }
    match run(1.0, e_point) {
        Ok(c) => r.check(c.report.distance == Q::new(6, 5), format!("E-curve γ=1: d={}", c.report.distance)),
        Err(e) => r.check(false, format!("E-curve γ=1: {e}")),
    }
    match run(-8.0, Some(pt(0.0, PI))) {
        Ok(c) => r.check(
            c.report.principal_face == Face::Vertex { point: (2, 2) } && c.report.nu == 1,
            format!("γ=−8 at (0, π): face {:?} ν={}", c.report.principal_face, c.report.nu),
        ),
        Err(e) => r.check(false, format!("γ=−8 at (0, π): {e}")),
    }
    match run(0.0, Some(pt(0.0, 0.0))) {
        Ok(c) => r.check(
            c.report.distance == Q::from_integer(2)
                && c.report.nu == 0
                && matches!(c.report.principal_face, Face::CompactEdge { .. }),
            format!("quartic circle γ=0: d={} ν={}", c.report.distance, c.report.nu),
        ),
        Err(e) => r.check(false, format!("quartic circle γ=0: {e}")),
    }
    match run(-8.0, d_point) {
        Ok(c) => r.check(
            matches!(c.report.principal_face, Face::UnboundedEdge { .. }) && c.report.nu == 0,
            format!("D-curve γ=−8: face {:?} ν={}", c.report.principal_face, c.report.nu),
        ),
        Err(e) => r.check(false, format!("D-curve γ=−8: {e}")),
    }
    let secs = t0.elapsed().as_secs_f64();
    r.check(secs < 1.0, format!("runtime {secs:.3} s < 1 s"));
    r.finish()
}

const CATALOG_GAMMAS: [f64; 8] = [-20.0, -16.0, -12.0, -8.0, -4.0, 0.0, 1.0, 5.0];

fn local_to_global() -> Check {
    let mut r = Report::default();
    for gamma in CATALOG_GAMMAS {
        let table = predicted_decay(2, gamma).unwrap();
        let mut worst: Option<(DecayPrediction, CatalogKind)> = None;
        let mut error = None;
        for p in degenerate_catalog(gamma).points(9) {
            match case_catalog(gamma, &p.xi) {
                Ok(c) => {
                    let idx = DecayPrediction { beta: c.report.index.0, p: c.report.index.1 };
                    if worst.map_or(true, |(w, _)| idx < w) {
                        worst = Some((idx, p.kind));
                    }
                }
                Err(e) => error = Some(format!("{:?} at {:?}: {e}", p.kind, p.xi.coords())),
            }
        }
        match (worst, error) {
            (_, Some(e)) => r.check(false, format!("γ={gamma}: {e}")),
            (Some((w, kind)), None) => {
                r.check(w == table, format!("γ={gamma}: catalog minimum {w} from {kind:?}, table {table}"))
            }
            (None, None) => r.check(false, format!("γ={gamma}: empty catalog")),
        }
    }
    r.finish()
}

fn critical_residuals() -> Check {
    let mut r = Report::default();
    let mut worst_det: f64 = 0.0;
    let mut bad = Vec::new();
    let mut count = 0;
    for gamma in CATALOG_GAMMAS {
        for p in degenerate_catalog(gamma).points(9) {
            count += 1;
            let claimed = if p.kind == CatalogKind::Sigma2 { 2 } else { 1 };
            let h = phase_hessian(gamma, &p.xi);
            let det = h.determinant.abs().max(h.matrix_determinant().abs());
            worst_det = worst_det.max(det);
            if det >= 1e-10 || h.corank != claimed || p.corank != claimed {
                bad.push(format!("γ={gamma} {:?} {:?}: det {det:.2e} corank {}", p.kind, p.xi.coords(), h.corank));
            }
        }
    }
    r.check(bad.is_empty(), format!("{count} catalog points, max |det| {worst_det:.2e} {}", bad.join("; ")));

    let found = find_critical_points(&PhaseSpec::at_rest(2, 0.0).unwrap(), 24, 1e-10);
    let corners = [pt(0.0, 0.0), pt(0.0, PI), pt(PI, 0.0), pt(PI, PI)];
    let hit = corners.iter().all(|c| found.points.iter().any(|p| p.xi.torus_distance(c) < 1e-6));
    let only = found.points.iter().all(|p| corners.iter().any(|c| p.xi.torus_distance(c) < 1e-6));
    r.check(
        hit && only && found.points.len() == 4,
        format!(
            "v=0, γ=0: {} critical points, corners {}",
            found.points.len(),
            if hit && only { "exact" } else { "wrong" }
        ),
    );

    let mut nonempty = Vec::new();
    for gamma in [-8.0, 0.0, 1.0] {
        let c = velocity_bound(2, gamma);
        for k in 0..8 {
            let th = 2.0 * PI * k as f64 / 8.0 + 0.1;
            let v = vec![1.001 * c * th.cos(), 1.001 * c * th.sin()];
            let spec = PhaseSpec::new(2, gamma, v).unwrap();
            if !find_critical_points(&spec, 24, 1e-10).points.is_empty() {
                nonempty.push(format!("γ={gamma} θ={th:.2}"));
            }
        }
    }
    r.check(nonempty.is_empty(), format!("|v| > 𝐜: 24 velocities, nonempty at [{}]", nonempty.join(", ")));

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let h = 1e-5;
    let (mut eg, mut eh): (f64, f64) = (0.0, 0.0);
    for _ in 0..1000 {
        let gamma = rng.gen_range(-20.0..8.0);
        let v = vec![rng.gen_range(-40.0..40.0), rng.gen_range(-40.0..40.0)];
        let spec = PhaseSpec::new(2, gamma, v).unwrap();
        let x = [rng.gen_range(-PI..PI), rng.gen_range(-PI..PI)];
        let at = |dx: [f64; 2]| pt(x[0] + dx[0], x[1] + dx[1]);
        let g = phase_gradient(&spec, &at([0.0, 0.0])).unwrap();
        let hess = phase_hessian(gamma, &at([0.0, 0.0]));
        for j in 0..2 {
            let mut e = [0.0; 2];
            e[j] = h;
            let plus = phase_value(&spec, &at(e)).unwrap();
            let minus = phase_value(&spec, &at([-e[0], -e[1]])).unwrap();
            let fd = (plus - minus) / (2.0 * h);
            eg = eg.max((fd - g[j]).abs() / (1.0 + g[j].abs()));
            let gp = phase_gradient(&spec, &at(e)).unwrap();
            let gm = phase_gradient(&spec, &at([-e[0], -e[1]])).unwrap();
            for i in 0..2 {
                let fd = (gp[i] - gm[i]) / (2.0 * h);
                let exact = hess.entry(i, j);
                eh = eh.max((fd - exact).abs() / (1.0 + exact.abs()));
            }
        }
    }
    r.check(eg < 1e-6 && eh < 1e-6, format!("1000 points: gradient err {eg:.2e}, Hessian err {eh:.2e} (< 1e-6)"));
    r.finish()
}

/// Smallest 3^a 5^b ≥ n; odd, so the extracted box is the whole torus.
fn odd_smooth(n: usize) -> usize {
    let mut best = usize::MAX;
    let mut p3 = 1;
    while p3 < 3 * n {
        let mut p = p3;
        while p < n {
            p *= 5;
        }
        best = best.min(p);
        p3 *= 3;
    }
    best
}

fn oracle_equivalence() -> Check {
    let cfg = QuadratureConfig::default();
    let mut r = Report::default();
    for d in [1usize, 2] {
        let pts: Vec<Vec<i64>> = match d {
            1 => (-20..=20).map(|a| vec![a]).collect(),
            _ => (-20..=20).flat_map(|a| (-20..=20).map(move |b| vec![a, b])).collect(),
        };
        let mut worst: f64 = 0.0;
        let mut failure = None;
        for gamma in [0.0, -8.0, 1.0] {
            for t in [1.0, 10.0, 100.0] {
                let n = propagation_grid(d, gamma, t, 0);
                let res = green_points(&pts, t, gamma, &cfg).map_err(|e| e.to_string()).and_then(|(vals, _)| {
                    let u = linear_propagate(&LatticeField::delta(d, 1.0), t, gamma, n).map_err(|e| e.to_string())?;
                    Ok(pts.iter().zip(&vals).map(|(p, v)| (u.get(p).unwrap() - v).norm()).fold(0.0, f64::max))
                });
                match res {
                    Ok(e) => worst = worst.max(e),
                    Err(e) => failure = Some(format!("γ={gamma} t={t}: {e}")),
                }
            }
        }
        match failure {
            Some(e) => r.check(false, format!("d={d}: {e}")),
            None => r.check(worst < 1e-8, format!("d={d}: max |G − e^{{itL}}δ₀| on |x|∞ ≤ 20 = {worst:.2e}")),
        }
    }
    let mut worst: f64 = 0.0;
    for d in [1usize, 2] {
        for (k, gamma) in [0.0, -8.0, 1.0].into_iter().enumerate() {
            let f = random_profile(d, 8, 1.0, 100 + k as u64);
            for t in [1.0, 10.0, 100.0] {
                let n = odd_smooth(propagation_grid(d, gamma, t, 8));
                let u = linear_propagate(&f, t, gamma, n).unwrap();
                worst = worst.max((u.l2_norm() - f.l2_norm()).abs() / f.l2_norm());
            }
        }
    }
    r.check(worst < 1e-12, format!("Plancherel: max relative ℓ² change {worst:.2e}"));
    r.finish()
}

fn linear_strichartz() -> Check {
    let times = graded_times(0.02, 4.0, std::f64::consts::SQRT_2, 128.0, &[64.0]);
    let rep = linear_strichartz_experiment(0.0, 50, 8, &[64.0, 128.0], &times, 7);
    let (a, b) = (rep.max_norms[0], rep.max_norms[1]);
    let growth = b / a - 1.0;
    Check::new(
        growth < 0.10,
        format!(
            "max ‖e^{{itL}}f‖_{{L⁴ℓ^∞}}: T=64 {a:.5}, T=128 {b:.5}, growth {:.2}% over {} times",
            100.0 * growth,
            rep.times
        ),
    )
}

fn small_data() -> Check {
    let (gamma, s, eps, t_final) = (0.0, 5.0, 1e-2, 50.0);
    let mut r = Report::default();
    let cfg = |picard: bool| SmallDataConfig {
        solver: SolverConfig { picard_max_iter: 2, ..SolverConfig::default() },
        profiles: 0,
        picard,
        ..SmallDataConfig::default()
    };
    let runs = [
        ("T=50", small_data_experiment(eps, s, gamma, t_final, &cfg(true))),
        ("T=100", small_data_experiment(eps, s, gamma, 2.0 * t_final, &cfg(false))),
        ("ε/2", small_data_experiment(eps / 2.0, s, gamma, t_final, &cfg(false))),
    ];
    let mut ratios = Vec::new();
    for (label, rep) in &runs {
        match rep {
            Ok(rep) => {
                let run = &rep.runs[0];
                r.check(run.mass_drift < 1e-10, format!("{label}: mass drift {:.2e}", run.mass_drift));
                ratios.push(run.strichartz_over_eps);
            }
            Err(e) => r.check(false, format!("{label}: {e}")),
        }
    }
    if let Ok(rep) = &runs[0].1 {
        let ok = !rep.picard_ratios.is_empty() && rep.picard_ratios.iter().all(|&q| q < 0.5);
        r.check(
            ok,
            format!("Picard residuals [{}], ratios [{}] (< 1/2)", sci(&rep.picard_residuals), sci(&rep.picard_ratios)),
        );
    }
    if ratios.len() == 3 {
        for (label, other) in [("T→2T", ratios[1]), ("ε→ε/2", ratios[2])] {
            let change = (other / ratios[0] - 1.0).abs();
            r.check(
                change <= 0.10,
                format!("{label}: strichartz/ε {:.6} → {other:.6} ({:.2}%)", ratios[0], 100.0 * change),
            );
        }
    }

    // dt-halving of the Strang–Picard gap at T=1. At this ε the gap is O(ε^{2s−1}) and sits at
    // rounding level, so the factor is not expected to land in [3, 5]; see tests/nls.rs for ε = 0.3
    let f = LatticeField::delta(2, eps);
    let gap = |dt: f64| -> Result<f64, String> {
        let c = SolverConfig { s, dt, t_final: 1.0, picard_max_iter: 4, picard_tol: 1e-30, ..SolverConfig::default() };
        let a = evolve(&f, gamma, &c).map_err(|e| e.to_string())?;
        let b = picard_solve(&f, gamma, &c).map_err(|e| e.to_string())?;
        let (ua, ub) = (a.final_field().unwrap(), b.trajectory.final_field().unwrap());
        Ok(ua.values.iter().zip(&ub.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max))
    };
    match (gap(0.02), gap(0.01)) {
        (Ok(a), Ok(b)) => {
            let factor = a / b;
            r.check(
                (3.0..=5.0).contains(&factor),
                format!("Strang–Picard gap at T=1: {a:.3e} (dt=0.02) → {b:.3e} (dt=0.01), factor {factor:.3}"),
            );
        }
        (Err(e), _) | (_, Err(e)) => r.check(false, format!("Strang–Picard gap: {e}")),
    }
    r.finish()
}

fn sci(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(", ")
}

fn vdc_orders() -> Check {
    let mut r = Report::default();
    for (gamma, want) in [(0.0, 4), (-8.0, 4), (1.0, 3), (-4.0, 3), (7.0, 3)] {
        let o = vdc_order_1d(gamma, 4096);
        r.check(
            o.k == want && o.minimax > 0.0,
            format!("γ={gamma}: k={} (want {want}), M={:.4} > resolution {:.4}", o.k, o.minimax, o.resolution),
        );
    }
    r.finish()
}

type Criterion = (u32, &'static str, Option<f64>, fn() -> Check);

const CRITERIA: [Criterion; 10] = [
    (1, "exponent table d=1", Some(300.0), one_dim_exponents),
    (2, "exponent table d=2", Some(1800.0), two_dim_exponents),
    (3, "log factor at γ=−8", None, log_factor),
    (4, "Newton polygon fixtures", None, newton_fixtures),
    (5, "local-to-global consistency", None, local_to_global),
    (6, "critical-point residuals", None, critical_residuals),
    (7, "oracle equivalence", None, oracle_equivalence),
    (8, "linear Strichartz bound", Some(600.0), linear_strichartz),
    (9, "small-data globality", None, small_data),
    (10, "van der Corput orders d=1", Some(60.0), vdc_orders),
];

fn main() -> ExitCode {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, name, limit, run) in CRITERIA {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let t0 = Instant::now();
        let check = run();
        let secs = t0.elapsed().as_secs_f64();
        let in_time = limit.map_or(true, |l| secs < l);
        let pass = check.pass && in_time;
        let budget = limit.map(|l| format!(" (limit {l:.0} s)")).unwrap_or_default();
        println!("{} criterion {id:>2} {name} [{secs:.1} s{budget}]", if pass { "PASS" } else { "FAIL" });
        println!("      {}", check.detail);
        if !pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
