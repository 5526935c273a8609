//! Measurement of sup_x |G(x, t)| over time sweeps and fits of (β, p).

use num_complex::{Complex, Complex32, Complex64};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::critical::degenerate_catalog;
use crate::oscillatory::{green_points, tail_margin, QuadratureConfig, QuadratureError};
use crate::spectral::{axis_table, smooth_even_size};
use crate::symbol::max_group_speed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecayError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("dimension must be 1 or 2, got {0}")]
    BadDimension(usize),
    #[error("time must be finite and nonnegative, got {0}")]
    InvalidTime(f64),
    #[error("fit needs ≥ 5 samples over ≥ 1.5 decades, got {samples} over {decades:.2}")]
    InsufficientSpan { samples: usize, decades: f64 },
    #[error("full grid of {entries} entries exceeds the limit {limit}")]
    GridTooLarge { entries: u128, limit: u128 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SupMethod {
    FullGrid,
    CandidateVelocity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SupStrategy {
    FullGrid,
    CandidateVelocity,
    /// Full grid while N^d ≤ `full_grid_limit`, candidate velocities beyond.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SupConfig {
    pub strategy: SupStrategy,
    /// Half-width of the lattice box searched around each x = round(v₀t).
    pub window: i64,
    /// Samples per degenerate curve when collecting candidate velocities.
    pub curve_samples: usize,
    /// Bytes available for the intermediate array of the two-dimensional full grid.
    pub memory_budget: usize,
    pub full_grid_limit: u64,
    pub quadrature: QuadratureConfig,
}

impl Default for SupConfig {
    fn default() -> Self {
        Self {
            strategy: SupStrategy::Auto,
            window: 3,
            curve_samples: 24,
            memory_budget: 2 << 30,
            full_grid_limit: 1 << 31,
            quadrature: QuadratureConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySample {
    pub t: f64,
    pub sup_abs: f64,
    /// Maximizer, reported in the closed positive cone (|G| is even in every coordinate).
    pub argmax_x: Vec<i64>,
    pub method: SupMethod,
}

/// Torus size for the full-grid sup: covers the light cone plus the Airy tail.
pub fn full_grid_size(d: usize, gamma: f64, t: f64) -> usize {
    let reach = max_group_speed(d, gamma) * t.abs() + tail_margin(t);
    smooth_even_size(2 * reach.ceil() as usize + 2)
}

pub fn sup_green(t: f64, gamma: f64, d: usize, cfg: &SupConfig) -> Result<DecaySample, DecayError> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(DecayError::InvalidTime(t));
    }
    if d != 1 && d != 2 {
        return Err(DecayError::BadDimension(d));
    }
    let n = full_grid_size(d, gamma, t);
    let entries = (n as u128).pow(d as u32);
    let method = match cfg.strategy {
        SupStrategy::FullGrid => SupMethod::FullGrid,
        SupStrategy::CandidateVelocity => SupMethod::CandidateVelocity,
        SupStrategy::Auto if entries <= cfg.full_grid_limit as u128 => SupMethod::FullGrid,
        SupStrategy::Auto => SupMethod::CandidateVelocity,
    };
    match method {
        SupMethod::FullGrid if d == 1 => Ok(full_grid_1d(t, gamma, n)),
        SupMethod::FullGrid => {
            if entries > cfg.full_grid_limit as u128 {
                return Err(DecayError::GridTooLarge { entries, limit: cfg.full_grid_limit as u128 });
            }
            Ok(full_grid_2d(t, gamma, n, cfg.memory_budget))
        }
        SupMethod::CandidateVelocity => candidate_sup(t, gamma, d, cfg),
    }
}

fn cis(x: f64) -> Complex64 {
    let (s, c) = x.sin_cos();
    Complex64::new(c, s)
}

fn full_grid_1d(t: f64, gamma: f64, n: usize) -> DecaySample {
    let a = axis_table(n);
    let mut data: Vec<Complex64> = a.iter().map(|&w| cis(t * w * (w + gamma))).collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut data);
    let (x, v) = data[..=n / 2].iter().enumerate().map(|(i, z)| (i, z.norm())).fold((0, -1.0), |best, cur| {
        if cur.1 > best.1 {
            cur
        } else {
            best
        }
    });
    DecaySample { t, sup_abs: v / n as f64, argmax_x: vec![x as i64], method: SupMethod::FullGrid }
}

const ROW_BLOCK: usize = 64;

/// sup |G| over the N×N torus using evenness in both coordinates: frequencies
/// and positions are restricted to [0, N/2], and the half-transformed array is
/// held in single precision, in column chunks that fit `budget` bytes.
fn full_grid_2d(t: f64, gamma: f64, n: usize, budget: usize) -> DecaySample {
    let m = n / 2 + 1;
    let a = axis_table(n);
    let mut planner = FftPlanner::new();
    let plan = planner.plan_fft_inverse(n);
    let width = (budget / (m * std::mem::size_of::<Complex32>())).clamp(1, m);
    let mut best = (-1.0f64, 0usize, 0usize);
    let mut c0 = 0;
    while c0 < m {
        let c1 = (c0 + width).min(m);
        let w = c1 - c0;
        // ht[(x₂ − c0)·m + k₁]
        let mut ht = vec![Complex32::new(0.0, 0.0); w * m];
        for b0 in (0..m).step_by(ROW_BLOCK) {
            let b1 = (b0 + ROW_BLOCK).min(m);
            let rows: Vec<Vec<Complex32>> = (b0..b1)
                .into_par_iter()
                .map(|k1| {
                    let mut row = vec![Complex64::new(0.0, 0.0); n];
                    for k2 in 0..m {
                        let s = a[k1] + a[k2];
                        row[k2] = cis(t * s * (s + gamma));
                    }
                    for k2 in m..n {
                        row[k2] = row[n - k2];
                    }
                    plan.process(&mut row);
                    row[c0..c1].iter().map(|z| Complex::new(z.re as f32, z.im as f32)).collect()
                })
                .collect();
            for (r, k1) in rows.iter().zip(b0..b1) {
                for (j, z) in r.iter().enumerate() {
                    ht[j * m + k1] = *z;
                }
            }
        }
        let col_best = ht
            .par_chunks(m)
            .enumerate()
            .map(|(j, col)| {
                let mut buf = vec![Complex64::new(0.0, 0.0); n];
                for k in 0..m {
                    buf[k] = Complex64::new(col[k].re as f64, col[k].im as f64);
                }
                for k in m..n {
                    buf[k] = buf[n - k];
                }
                plan.process(&mut buf);
                let (x1, v) = buf[..m].iter().enumerate().map(|(i, z)| (i, z.norm())).fold((0, -1.0), |b, cur| {
                    if cur.1 > b.1 {
                        cur
                    } else {
                        b
                    }
                });
                (v, x1, c0 + j)
            })
            .reduce(|| (-1.0, 0, 0), |p, q| if q.0 > p.0 || (q.0 == p.0 && (q.2, q.1) < (p.2, p.1)) { q } else { p });
        if col_best.0 > best.0 {
            best = col_best;
        }
        c0 = c1;
    }
    let scale = 1.0 / (n as f64 * n as f64);
    DecaySample {
        t,
        sup_abs: best.0 * scale,
        argmax_x: vec![best.1 as i64, best.2 as i64],
        method: SupMethod::FullGrid,
    }
}

/// Velocities of degenerate critical points in one dimension: v₀ = −ψ′(u) at the
/// inflection points ψ″(u) = 0, with cos u a root of 16c² − 2(4+γ)c − 8, plus v₀ = 0.
pub fn candidate_velocities_1d(gamma: f64) -> Vec<f64> {
    let g = 4.0 + gamma;
    let disc = (4.0 * g * g + 512.0).sqrt();
    let mut out = vec![0.0];
    for c in [(2.0 * g + disc) / 32.0, (2.0 * g - disc) / 32.0] {
        if c.abs() <= 1.0 {
            let s = (1.0 - c * c).sqrt();
            let v = (2.0 * s * (g - 4.0 * c)).abs();
            for w in [v, -v] {
                if !out.iter().any(|u: &f64| (u - w).abs() < 1e-12) {
                    out.push(w);
                }
            }
        }
    }
    out
}

fn candidate_sup(t: f64, gamma: f64, d: usize, cfg: &SupConfig) -> Result<DecaySample, DecayError> {
    let vels: Vec<Vec<f64>> = if d == 1 {
        candidate_velocities_1d(gamma).into_iter().map(|v| vec![v]).collect()
    } else {
        degenerate_catalog(gamma).candidate_velocities(cfg.curve_samples)
    };
    let w = cfg.window;
    let mut pts: Vec<Vec<i64>> = Vec::new();
    for v in &vels {
        let centre: Vec<i64> = v.iter().map(|c| (c * t).round().abs() as i64).collect();
        let offsets: Vec<Vec<i64>> = if d == 1 {
            (-w..=w).map(|a| vec![a]).collect()
        } else {
            (-w..=w).flat_map(|a| (-w..=w).map(move |b| vec![a, b])).collect()
        };
        for o in offsets {
            let p: Vec<i64> = centre.iter().zip(&o).map(|(c, o)| (c + o).abs()).collect();
            pts.push(p);
        }
    }
    pts.sort();
    pts.dedup();
    let (vals, _) = green_points(&pts, t, gamma, &cfg.quadrature)?;
    let (i, v) =
        vals.iter().enumerate().map(|(i, z)| (i, z.norm())).fold((0, -1.0), |b, cur| if cur.1 > b.1 { cur } else { b });
    Ok(DecaySample { t, sup_abs: v, argmax_x: pts[i].clone(), method: SupMethod::CandidateVelocity })
}

/// One entry per requested time; failures are kept in place.
pub fn decay_sweep(t_list: &[f64], gamma: f64, d: usize, cfg: &SupConfig) -> Vec<Result<DecaySample, DecayError>> {
    let heavy = d == 2 && cfg.strategy != SupStrategy::CandidateVelocity;
    if heavy {
        // each full-grid evaluation is already parallel and memory-bound
        t_list.iter().map(|&t| sup_green(t, gamma, d, cfg)).collect()
    } else {
        t_list.par_iter().map(|&t| sup_green(t, gamma, d, cfg)).collect()
    }
}

/// Geometric time list from `t0` to `t1` with `count` points.
pub fn geometric_times(t0: f64, t1: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![t0];
    }
    let r = (t1 / t0).ln() / (count - 1) as f64;
    (0..count).map(|k| if k + 1 == count { t1 } else { t0 * (r * k as f64).exp() }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFitResult {
    pub beta_hat: f64,
    pub p_hat: u8,
    pub c_hat: f64,
    /// RMS log-model error of the selected model.
    pub residual: f64,
    /// RMS errors of the p = 0 and p = 1 models.
    pub residuals: [f64; 2],
    pub samples: Vec<DecaySample>,
}

/// Least squares of log sup|G| ≈ log C − β log(1+t) + p log log(2+t) for p ∈ {0, 1};
/// p = 1 is chosen only when it lowers the RMS error by more than 5%.
pub fn fit_exponents(samples: &[DecaySample]) -> Result<DecayFitResult, DecayError> {
    let ts: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let tmin = ts.iter().cloned().fold(f64::INFINITY, f64::min);
    let tmax = ts.iter().cloned().fold(0.0, f64::max);
    let decades = if tmin > 0.0 { (tmax / tmin).log10() } else { 0.0 };
    if samples.len() < 5 || decades < 1.5 {
        return Err(DecayError::InsufficientSpan { samples: samples.len(), decades });
    }
    let fit = |p: f64| {
        let xs: Vec<f64> = ts.iter().map(|t| (1.0 + t).ln()).collect();
        let ys: Vec<f64> = samples.iter().map(|s| s.sup_abs.ln() - p * (2.0 + s.t).ln().ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let slope = sxy / sxx;
        let icpt = my - slope * mx;
        let rms = (xs.iter().zip(&ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum::<f64>() / n).sqrt();
        (-slope, icpt.exp(), rms)
    };
    let f0 = fit(0.0);
    let f1 = fit(1.0);
    let pick_one = f1.2 < 0.95 * f0.2;
    let (beta_hat, c_hat, residual) = if pick_one { f1 } else { f0 };
    Ok(DecayFitResult {
        beta_hat,
        p_hat: u8::from(pick_one),
        c_hat,
        residual,
        residuals: [f0.2, f1.2],
        samples: samples.to_vec(),
    })
}
