//! Critical points of φ(v, ·), the degenerate set catalog in two dimensions, the
//! decay exponent table and the one-dimensional van der Corput order.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::symbol::{
    dispersion_gradient, omega_sq, phase_derivs_1d, phase_gradient, phase_hessian, PhaseSpec, SymbolError, TorusPoint,
};

/// 𝐜 = √d (16d + 2|γ|); no critical points exist for |v| > 𝐜.
pub fn velocity_bound(d: usize, gamma: f64) -> f64 {
    (d as f64).sqrt() * (16.0 * d as f64 + 2.0 * gamma.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointRecord {
    pub xi: TorusPoint,
    pub gradient_residual: f64,
    pub corank: usize,
    pub velocity: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonStall {
    pub seed: Vec<f64>,
    pub last: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalSearch {
    pub points: Vec<CriticalPointRecord>,
    pub stalls: Vec<NewtonStall>,
}

const NEWTON_STEPS: usize = 50;
const DEDUP_DIST: f64 = 1e-6;

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton on ∇φ = 0. Runs the full step budget unless the step itself
/// vanishes, so degenerate roots (linear convergence) still land well inside
/// the deduplication radius.
fn newton_from(spec: &PhaseSpec, seed: &[f64]) -> (Vec<f64>, f64) {
    let d = spec.d;
    let mut x = seed.to_vec();
    let grad = |x: &[f64]| phase_gradient(spec, &TorusPoint::new(x.to_vec()).unwrap()).unwrap();
    let mut g = grad(&x);
    let mut mu = 1e-12;
    for _ in 0..NEWTON_STEPS {
        let h = phase_hessian(spec.gamma, &TorusPoint::new(x.clone()).unwrap());
        let scale = 1.0 + sup(&h.matrix);
        let mut accepted = false;
        for _ in 0..30 {
            let step = solve_damped(&h.matrix, d, &g, mu * scale);
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a - s).collect();
            let gt = grad(&trial);
            if sup(&gt) < sup(&g) || sup(&step) < 1e-15 {
                let tiny = sup(&step) < 1e-15;
                x = trial;
                g = gt;
                mu = (mu * 0.1).max(1e-14);
                accepted = true;
                if tiny {
                    return (x, sup(&g));
                }
                break;
            }
            mu *= 10.0;
        }
        if !accepted || sup(&g) == 0.0 {
            break;
        }
    }
    (x, sup(&g))
}

fn solve_damped(h: &[f64], d: usize, g: &[f64], mu: f64) -> Vec<f64> {
    if d == 1 {
        let a = h[0];
        // Levenberg–Marquardt normal equations keep the sign of the Newton step
        return vec![a * g[0] / (a * a + mu * mu)];
    }
    // (HᵀH + μ²I) s = Hᵀ g, H symmetric
    let (a, b, c) = (h[0], h[1], h[3]);
    let m00 = a * a + b * b + mu * mu;
    let m01 = a * b + b * c;
    let m11 = b * b + c * c + mu * mu;
    let r0 = a * g[0] + b * g[1];
    let r1 = b * g[0] + c * g[1];
    let det = m00 * m11 - m01 * m01;
    if det == 0.0 {
        return vec![0.0, 0.0];
    }
    vec![(m11 * r0 - m01 * r1) / det, (m00 * r1 - m01 * r0) / det]
}

pub fn find_critical_points(spec: &PhaseSpec, seed_grid_n: usize, tol: f64) -> CriticalSearch {
    let d = spec.d;
    let n = seed_grid_n.max(1);
    let total = n.pow(d as u32);
    let seeds: Vec<Vec<f64>> = (0..total)
        .map(|i| {
            let mut idx = i;
            let mut s = vec![0.0; d];
            for c in s.iter_mut().rev() {
                *c = -PI + 2.0 * PI * (idx % n) as f64 / n as f64;
                idx /= n;
            }
            s
        })
        .collect();
    let outcomes: Vec<(Vec<f64>, Vec<f64>, f64)> = seeds
        .par_iter()
        .map(|s| {
            let (x, r) = newton_from(spec, s);
            (s.clone(), x, r)
        })
        .collect();
    let mut found: Vec<CriticalPointRecord> = Vec::new();
    let mut stalls = Vec::new();
    for (seed, x, r) in outcomes {
        if !(r < tol) {
            stalls.push(NewtonStall { seed, last: x, residual: r });
            continue;
        }
        let xi = TorusPoint::new(x).unwrap();
        if let Some(existing) = found.iter_mut().find(|p| p.xi.torus_distance(&xi) < DEDUP_DIST) {
            if r < existing.gradient_residual {
                existing.gradient_residual = r;
                existing.xi = xi;
            }
            continue;
        }
        let corank = phase_hessian(spec.gamma, &xi).corank;
        found.push(CriticalPointRecord { xi, gradient_residual: r, corank, velocity: spec.v.clone() });
    }
    found.sort_by(|a, b| {
        a.xi.coords().iter().zip(b.xi.coords()).fold(Ordering::Equal, |o, (x, y)| o.then(x.total_cmp(y)))
    });
    CriticalSearch { points: found, stalls }
}

/// Which branch of the degenerate set a catalog point was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CatalogKind {
    Sigma2,
    Special,
    DCurve,
    ECurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogPoint {
    pub kind: CatalogKind,
    pub xi: TorusPoint,
    /// v₀ = −∇ψ(ξ₀), the velocity for which ξ₀ is critical.
    pub velocity: Vec<f64>,
    pub det_residual: f64,
    pub corank: usize,
}

/// Degenerate critical points of the two-dimensional phase in [0, π]².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerateCatalog {
    pub gamma: f64,
    pub sigma2: Vec<TorusPoint>,
    pub special: TorusPoint,
}

const COS_GUARD: f64 = 1e-3;
const OVERLAP: f64 = 1e-6;

fn point(a: f64, b: f64) -> TorusPoint {
    TorusPoint::new(vec![a, b]).unwrap()
}

/// Fold a torus point into [0, π]² using ξ_j ↦ |ξ_j|.
pub fn fold_quadrant(xi: &TorusPoint) -> TorusPoint {
    let c = xi.coords();
    let f = |x: f64| if x == -PI { PI } else { x.abs() };
    TorusPoint::new(c.iter().map(|&x| f(x)).collect()).unwrap()
}

/// First-quadrant representative that keeps ±π at +π.
fn quadrant_coords(xi: &TorusPoint) -> (f64, f64) {
    let c = fold_quadrant(xi);
    (c.coords()[0], c.coords()[1])
}

impl DegenerateCatalog {
    pub fn d_nonempty(&self) -> bool {
        (-16.0..=0.0).contains(&self.gamma)
    }

    fn is_overlap(&self, p: &TorusPoint) -> bool {
        self.sigma2.iter().chain(std::iter::once(&self.special)).any(|q| q.torus_distance(p) < OVERLAP)
    }

    /// Samples of D_γ = {2ω² + γ = 0}, i.e. cos ξ₁ + cos ξ₂ = (8+γ)/4, uniform in cos ξ₁.
    /// Endpoints included; a degenerate curve (γ ∈ {0, −16}) yields its single point.
    pub fn d_curve(&self, samples: usize) -> Vec<TorusPoint> {
        if !self.d_nonempty() {
            return Vec::new();
        }
        let sigma = (8.0 + self.gamma) / 4.0;
        let lo = (-1.0f64).max(sigma - 1.0);
        let hi = 1.0f64.min(sigma + 1.0);
        if hi - lo < 1e-14 || samples < 2 {
            return vec![point(lo.clamp(-1.0, 1.0).acos(), (sigma - lo).clamp(-1.0, 1.0).acos())];
        }
        (0..samples)
            .map(|i| {
                let c1 = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
                point(c1.clamp(-1.0, 1.0).acos(), (sigma - c1).clamp(-1.0, 1.0).acos())
            })
            .collect()
    }

    /// Samples of E_γ = {Σ_j (8cos ξ_j − 4sec ξ_j) = 8 + γ} ∖ {(π/2, π/2)}.
    ///
    /// For fixed ξ₁ the equation is the quadratic 8y² − Ky − 4 = 0 in y = cos ξ₂,
    /// K = 8 + γ − 8cos ξ₁ + 4sec ξ₁; admissible roots are polished by Newton in ξ₂.
    pub fn e_curve(&self, samples: usize) -> Vec<TorusPoint> {
        let mut out = Vec::new();
        for i in 0..samples {
            let x1 = PI * (i as f64 + 0.5) / samples as f64;
            let c1 = x1.cos();
            if c1.abs() < COS_GUARD {
                continue;
            }
            let k = 8.0 + self.gamma - 8.0 * c1 + 4.0 / c1;
            let disc = (k * k + 128.0).sqrt();
            for y in [(k + disc) / 16.0, (k - disc) / 16.0] {
                if y.abs() > 1.0 || y.abs() < COS_GUARD {
                    continue;
                }
                let x2 = self.polish_e(x1, y.acos());
                let p = point(x1, x2);
                if !self.is_overlap(&p) {
                    out.push(p);
                }
            }
        }
        out
    }

    fn polish_e(&self, x1: f64, mut x2: f64) -> f64 {
        let c1 = x1.cos();
        for _ in 0..8 {
            let (s2, c2) = x2.sin_cos();
            let f = 8.0 * c1 - 4.0 / c1 + 8.0 * c2 - 4.0 / c2 - (8.0 + self.gamma);
            let df = -8.0 * s2 - 4.0 * s2 / (c2 * c2);
            if df == 0.0 || f == 0.0 {
                break;
            }
            let next = x2 - f / df;
            if !(0.0..=PI).contains(&next) {
                break;
            }
            x2 = next;
        }
        x2
    }

    /// Residual of the E_γ equation at ξ.
    pub fn e_residual(&self, xi: &TorusPoint) -> f64 {
        let lhs: f64 = xi.coords().iter().map(|x| 8.0 * x.cos() - 4.0 / x.cos()).sum();
        (lhs - 8.0 - self.gamma).abs()
    }

    /// Residual of the D_γ equation 2ω² + γ = 0 at ξ.
    pub fn d_residual(&self, xi: &TorusPoint) -> f64 {
        (2.0 * omega_sq(xi) + self.gamma).abs()
    }

    /// Every catalog point with its critical velocity, corank and det residual.
    /// Curve samples that coincide with Σ₂ or (π/2, π/2) are dropped.
    pub fn points(&self, curve_samples: usize) -> Vec<CatalogPoint> {
        let mut tagged: Vec<(CatalogKind, TorusPoint)> = Vec::new();
        tagged.extend(self.sigma2.iter().map(|p| (CatalogKind::Sigma2, p.clone())));
        tagged.push((CatalogKind::Special, self.special.clone()));
        tagged.extend(
            self.d_curve(curve_samples).into_iter().filter(|p| !self.is_overlap(p)).map(|p| (CatalogKind::DCurve, p)),
        );
        // E_{−8} contains the line D_{−8}; those samples are D points
        tagged.extend(
            self.e_curve(curve_samples)
                .into_iter()
                .filter(|p| !(self.d_nonempty() && self.d_residual(p) < 1e-9))
                .map(|p| (CatalogKind::ECurve, p)),
        );
        tagged
            .into_iter()
            .map(|(kind, xi)| {
                let h = phase_hessian(self.gamma, &xi);
                CatalogPoint {
                    kind,
                    velocity: dispersion_gradient(self.gamma, &xi).iter().map(|g| -g).collect(),
                    det_residual: h.determinant.abs().max(h.matrix_determinant().abs()),
                    corank: h.corank,
                    xi,
                }
            })
            .collect()
    }

    /// Candidate worst-case velocities: images of catalog velocities under the
    /// lattice symmetries (sign flips and coordinate swap), plus v = 0.
    pub fn candidate_velocities(&self, curve_samples: usize) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = vec![vec![0.0, 0.0]];
        for p in self.points(curve_samples) {
            let v = &p.velocity;
            for (a, b) in [(v[0], v[1]), (v[1], v[0])] {
                for (sa, sb) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    let w = vec![sa * a, sb * b];
                    if !out.iter().any(|u| (u[0] - w[0]).abs() < 1e-9 && (u[1] - w[1]).abs() < 1e-9) {
                        out.push(w);
                    }
                }
            }
        }
        out
    }
}

pub fn degenerate_catalog(gamma: f64) -> DegenerateCatalog {
    let sigma2 = if gamma == 0.0 {
        vec![point(0.0, 0.0)]
    } else if gamma == -8.0 {
        vec![point(0.0, PI), point(PI, 0.0)]
    } else if gamma == -16.0 {
        vec![point(PI, PI)]
    } else {
        Vec::new()
    };
    DegenerateCatalog { gamma, sigma2, special: point(PI / 2.0, PI / 2.0) }
}

/// Is ξ (folded to the first quadrant) one of the catalog's defining sets?
pub fn classify(gamma: f64, xi: &TorusPoint, tol: f64) -> Option<CatalogKind> {
    let cat = degenerate_catalog(gamma);
    let (a, b) = quadrant_coords(xi);
    let q = point(a, b);
    if cat.sigma2.iter().any(|s| s.torus_distance(&q) < tol) {
        return Some(CatalogKind::Sigma2);
    }
    if cat.special.torus_distance(&q) < tol {
        return Some(CatalogKind::Special);
    }
    if cat.d_nonempty() && cat.d_residual(&q) < tol {
        return Some(CatalogKind::DCurve);
    }
    if a.cos().abs() > COS_GUARD * 1e-3 && b.cos().abs() > COS_GUARD * 1e-3 && cat.e_residual(&q) < tol {
        return Some(CatalogKind::ECurve);
    }
    None
}

/// Decay pair (β, p) of |G| ≲ (1+|t|)^{−β} log^p(2+|t|).
///
/// Ordered by decay speed: `a < b` means a decays more slowly (smaller β, or
/// equal β with the log factor), so the minimum of a set is its worst rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DecayPrediction {
    pub beta: Ratio<i64>,
    pub p: u8,
}

impl DecayPrediction {
    pub fn new(num: i64, den: i64, p: u8) -> Self {
        Self { beta: Ratio::new(num, den), p }
    }

    pub fn beta_f64(&self) -> f64 {
        *self.beta.numer() as f64 / *self.beta.denom() as f64
    }
}

impl Ord for DecayPrediction {
    fn cmp(&self, other: &Self) -> Ordering {
        self.beta.cmp(&other.beta).then(other.p.cmp(&self.p))
    }
}

impl PartialOrd for DecayPrediction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for DecayPrediction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.beta, self.p)
    }
}

/// Tabulated decay pair (β, p) of sup_x|G(x, t)| by dimension and γ.
pub fn predicted_decay(d: usize, gamma: f64) -> Result<DecayPrediction, SymbolError> {
    match d {
        1 if gamma == 0.0 || gamma == -8.0 => Ok(DecayPrediction::new(1, 4, 0)),
        1 => Ok(DecayPrediction::new(1, 3, 0)),
        2 if gamma == -8.0 => Ok(DecayPrediction::new(1, 2, 1)),
        2 if gamma == 0.0 || gamma == -16.0 => Ok(DecayPrediction::new(1, 2, 0)),
        2 => Ok(DecayPrediction::new(3, 4, 0)),
        _ => Err(SymbolError::InvalidDimension(d)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VdcOrder {
    /// Smallest k with max_{j≤k}|φ^{(j)}| certified positive on the grid; 0 if none up to 4.
    pub k: usize,
    /// Sampled minimax at that k.
    pub minimax: f64,
    /// Grid-resolution bound the minimax had to exceed.
    pub resolution: f64,
}

/// Sampled minimax of max_{j≤k}|φ^{(j)}(u)| over (u, v) ∈ [−π, π) × [−𝐜, 𝐜].
///
/// A sampled value only proves positivity if it exceeds what a true zero could
/// produce at the nearest grid node: Lip_u·h_u/2 + Lip_v·h_v/2, with the
/// Lipschitz constants taken from sup bounds of the next derivative.
pub fn vdc_order_1d(gamma: f64, grid_n: usize) -> VdcOrder {
    let n = grid_n.max(2);
    let c = velocity_bound(1, gamma);
    let hu = 2.0 * PI / n as f64;
    let hv = 2.0 * c / (n - 1) as f64;
    let g = (4.0 + gamma).abs();
    // bounds on |φ''|, |φ'''|, |φ⁗|, |φ⁽⁵⁾|
    let lip = [24.0 + 2.0 * g, 2.0 * (g + 16.0), 96.0 + 2.0 * g, 128.0 + 2.0 * g];
    let mins: Vec<[f64; 4]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let u = -PI + hu * i as f64;
            let (p1, d2, d3, d4) = phase_derivs_1d(gamma, 0.0, u);
            let mut best = [f64::INFINITY; 4];
            for j in 0..n {
                let v = -c + hv * j as f64;
                let a1 = (p1 + v).abs();
                let m1 = a1;
                let m2 = m1.max(d2.abs());
                let m3 = m2.max(d3.abs());
                let m4 = m3.max(d4.abs());
                for (b, m) in best.iter_mut().zip([m1, m2, m3, m4]) {
                    *b = b.min(m);
                }
            }
            best
        })
        .collect();
    let mut last = VdcOrder { k: 0, minimax: 0.0, resolution: 0.0 };
    for k in 1..=4 {
        let m = mins.iter().fold(f64::INFINITY, |a, b| a.min(b[k - 1]));
        let lip_u = lip[..k].iter().cloned().fold(0.0, f64::max);
        let res = lip_u * hu / 2.0 + hv / 2.0;
        last = VdcOrder { k, minimax: m, resolution: res };
        if m > res {
            return last;
        }
    }
    VdcOrder { k: 0, ..last }
}
