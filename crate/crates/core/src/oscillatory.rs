//! The Green function G(x, t) = (2π)^{−d} ∫ e^{ix·ξ + itψ(ξ)} dξ and the linear
//! propagator e^{itL}, both on the torus.
//!
//! `green_point` and `green_points` evaluate the trapezoid sum directly (no FFT),
//! folded onto [0, π]^d since the integrand is even in every ξ_j. They serve as the
//! independent oracle for the FFT-based `linear_propagate`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::LatticeField;
use crate::spectral::{self, TorusFft};
use crate::symbol::{axis_symbol, max_group_speed};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("invalid quadrature config: {0}")]
    InvalidConfig(String),
    #[error("no convergence before grid cap: last grid {n}, successive difference {diff:.3e}")]
    NonConvergence { n: usize, diff: f64 },
    #[error("grid of {grid_n} points cannot hold a field of radius {radius}")]
    GridTooSmall { grid_n: usize, radius: usize },
    #[error("points must share dimension 1 or 2")]
    BadDimension,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub base_n: usize,
    /// Grid points per unit of (1+|t|)·L, L = |x|_∞/|t| + sup|∂_j ψ|.
    pub oversample: f64,
    pub tol: f64,
    pub max_n: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { base_n: 64, oversample: 2.0, tol: 1e-11, max_n: 1 << 16 }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<(), QuadratureError> {
        let bad = |m: &str| Err(QuadratureError::InvalidConfig(m.to_string()));
        if self.base_n < 16 || !self.base_n.is_power_of_two() {
            return bad("base_n must be a power of two ≥ 16");
        }
        if !(self.oversample >= 1.0) {
            return bad("oversample must be ≥ 1");
        }
        if !(self.tol > 0.0 && self.tol <= 1e-2) {
            return bad("tol must lie in (0, 1e-2]");
        }
        if self.max_n < self.base_n {
            return bad("max_n below base_n");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenValue {
    pub value: Complex64,
    /// Grid size per axis at which the doubling test passed.
    pub grid_n: usize,
}

/// Starting grid N = max(base_n, ⌈oversample·(1+|t|)·L⌉), rounded up to even.
pub fn initial_grid(xmax: u64, t: f64, d: usize, gamma: f64, cfg: &QuadratureConfig) -> usize {
    let l = if t != 0.0 { xmax as f64 / t.abs() + max_group_speed(d, gamma) } else { xmax as f64 + 1.0 };
    let n = (cfg.oversample * (1.0 + t.abs()) * l).ceil() as usize;
    let n = n.max(cfg.base_n);
    n + n % 2
}

#[derive(Clone, Copy, Default)]
struct Kahan {
    sum: Complex64,
    c: Complex64,
}

impl Kahan {
    #[inline]
    fn add(&mut self, x: Complex64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
}

fn pairwise_sum(parts: &[Vec<Complex64>]) -> Vec<Complex64> {
    match parts.len() {
        0 => Vec::new(),
        1 => parts[0].clone(),
        len => {
            let (a, b) = parts.split_at(len / 2);
            let (a, b) = (pairwise_sum(a), pairwise_sum(b));
            a.iter().zip(&b).map(|(x, y)| x + y).collect()
        }
    }
}

/// Folded trapezoid weights on k = 0..=N/2 (N even): 1 at the ends, 2 inside.
fn fold_weight(k: usize, n: usize) -> f64 {
    if k == 0 || 2 * k == n {
        1.0
    } else {
        2.0
    }
}

const ROW_BLOCK: usize = 64;

/// Trapezoid values of G on the product set u1 × u2 of absolute coordinates
/// (d = 2) or on u1 (d = 1, `u2` ignored). Row-major in (u1, u2).
fn trapezoid_product(u1: &[u64], u2: &[u64], d: usize, n: usize, t: f64, gamma: f64) -> Vec<Complex64> {
    let half = n / 2;
    let xi = |k: usize| 2.0 * PI * k as f64 / n as f64;
    let a: Vec<f64> = (0..=half).map(|k| axis_symbol(xi(k))).collect();
    let cis = |w: f64| {
        let (s, c) = (t * w * (w + gamma)).sin_cos();
        Complex64::new(c, s)
    };
    let weighted_cos = |u: &[u64]| -> Vec<Vec<f64>> {
        u.iter().map(|&x| (0..=half).map(|k| fold_weight(k, n) * (x as f64 * xi(k)).cos()).collect()).collect()
    };
    let c1 = weighted_cos(u1);
    if d == 1 {
        return c1
            .iter()
            .map(|wc| {
                let mut acc = Kahan::default();
                for k in 0..=half {
                    acc.add(cis(a[k]) * wc[k]);
                }
                acc.sum / n as f64
            })
            .collect();
    }
    let c2 = weighted_cos(u2);
    let m = u1.len() * u2.len();
    let blocks: Vec<usize> = (0..=half).step_by(ROW_BLOCK).collect();
    let partials: Vec<Vec<Complex64>> = blocks
        .par_iter()
        .map(|&start| {
            let mut acc = vec![Kahan::default(); m];
            let mut row = vec![Complex64::new(0.0, 0.0); half + 1];
            let mut inner = vec![Complex64::new(0.0, 0.0); u2.len()];
            for k1 in start..(start + ROW_BLOCK).min(half + 1) {
                for (k2, z) in row.iter_mut().enumerate() {
                    *z = cis(a[k1] + a[k2]);
                }
                for (s, wc) in inner.iter_mut().zip(&c2) {
                    let mut r = Kahan::default();
                    for (z, w) in row.iter().zip(wc) {
                        r.add(z * w);
                    }
                    *s = r.sum;
                }
                for (i, wc1) in c1.iter().enumerate() {
                    let w = wc1[k1];
                    for (j, s) in inner.iter().enumerate() {
                        acc[i * u2.len() + j].add(s * w);
                    }
                }
            }
            acc.into_iter().map(|k| k.sum).collect()
        })
        .collect();
    let scale = 1.0 / (n as f64 * n as f64);
    pairwise_sum(&partials).into_iter().map(|z| z * scale).collect()
}

fn trapezoid_points(points: &[Vec<i64>], d: usize, n: usize, t: f64, gamma: f64) -> Vec<Complex64> {
    let mut u1: Vec<u64> = points.iter().map(|p| p[0].unsigned_abs()).collect();
    u1.sort_unstable();
    u1.dedup();
    let mut u2: Vec<u64> = if d == 2 { points.iter().map(|p| p[1].unsigned_abs()).collect() } else { vec![0] };
    u2.sort_unstable();
    u2.dedup();
    let table = trapezoid_product(&u1, &u2, d, n, t, gamma);
    points
        .iter()
        .map(|p| {
            let i = u1.binary_search(&p[0].unsigned_abs()).unwrap();
            let j = if d == 2 { u2.binary_search(&p[1].unsigned_abs()).unwrap() } else { 0 };
            table[i * u2.len() + j]
        })
        .collect()
}

/// G at many lattice points sharing one t, with a common doubling test.
/// Returns the values from the finest grid and that grid size.
pub fn green_points(
    points: &[Vec<i64>],
    t: f64,
    gamma: f64,
    cfg: &QuadratureConfig,
) -> Result<(Vec<Complex64>, usize), QuadratureError> {
    cfg.validate()?;
    if points.is_empty() {
        return Ok((Vec::new(), cfg.base_n));
    }
    let d = points[0].len();
    if !(d == 1 || d == 2) || points.iter().any(|p| p.len() != d) {
        return Err(QuadratureError::BadDimension);
    }
    let xmax = points.iter().flat_map(|p| p.iter()).map(|x| x.unsigned_abs()).max().unwrap_or(0);
    let mut n = initial_grid(xmax, t, d, gamma, cfg);
    if n > cfg.max_n {
        return Err(QuadratureError::NonConvergence { n, diff: f64::INFINITY });
    }
    let mut prev = trapezoid_points(points, d, n, t, gamma);
    loop {
        let next_n = 2 * n;
        if next_n > cfg.max_n {
            return Err(QuadratureError::NonConvergence { n, diff: f64::NAN });
        }
        let next = trapezoid_points(points, d, next_n, t, gamma);
        let diff = prev.iter().zip(&next).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if diff < cfg.tol {
            return Ok((next, next_n));
        }
        prev = next;
        n = next_n;
    }
}

pub fn green_point(x: &[i64], t: f64, gamma: f64, cfg: &QuadratureConfig) -> Result<GreenValue, QuadratureError> {
    let (v, grid_n) = green_points(&[x.to_vec()], t, gamma, cfg)?;
    Ok(GreenValue { value: v[0], grid_n })
}

/// I(x/t, t) = ∫_{𝕋^d} e^{it((x/t)·ξ + ψ)} dξ = (2π)^d G(x, t).
pub fn i_of_v(x: &[i64], t: f64, gamma: f64, cfg: &QuadratureConfig) -> Result<Complex64, QuadratureError> {
    let g = green_point(x, t, gamma, cfg)?;
    Ok(g.value * (2.0 * PI).powi(x.len() as i32))
}

/// e^{itL} f on a grid_n^d torus. The result covers the box of radius ⌊(grid_n−1)/2⌋.
pub fn linear_propagate(f: &LatticeField, t: f64, gamma: f64, grid_n: usize) -> Result<LatticeField, QuadratureError> {
    if grid_n < 2 * f.radius + 1 {
        return Err(QuadratureError::GridTooSmall { grid_n, radius: f.radius });
    }
    let fft = TorusFft::new(grid_n, f.d);
    let mut data = spectral::embed(f, grid_n);
    fft.forward(&mut data);
    let mult = spectral::dispersion_multiplier(grid_n, f.d, gamma, t);
    let scale = 1.0 / fft.len() as f64;
    data.par_iter_mut().zip(mult.par_iter()).for_each(|(z, m)| *z *= m * scale);
    fft.inverse(&mut data);
    Ok(spectral::extract(&data, grid_n, f.d))
}

/// G(·, t) on the whole torus in standard layout (aliased sum Σ_j G(x + jN)).
pub fn green_torus(n: usize, d: usize, t: f64, gamma: f64) -> Vec<Complex64> {
    let fft = TorusFft::new(n, d);
    let mut data = spectral::dispersion_multiplier(n, d, gamma, t);
    fft.inverse(&mut data);
    let scale = 1.0 / fft.len() as f64;
    data.par_iter_mut().for_each(|z| *z *= scale);
    data
}

/// A smooth FFT size whose torus holds everything e^{itL} can move out of a box
/// of radius `radius` by time t, with an Airy-scale tail margin.
pub fn propagation_grid(d: usize, gamma: f64, t: f64, radius: usize) -> usize {
    let reach = radius as f64 + max_group_speed(d, gamma) * t.abs() + tail_margin(t);
    spectral::smooth_size(2 * reach.ceil() as usize + 1)
}

/// Distance beyond the light cone after which G is negligible at double precision.
pub fn tail_margin(t: f64) -> f64 {
    32.0 + 12.0 * (1.0 + t.abs()).cbrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(QuadratureConfig::default().validate().is_ok());
        let mut c = QuadratureConfig::default();
        c.base_n = 48;
        assert!(c.validate().is_err());
        c = QuadratureConfig { tol: 0.5, ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn identity_at_time_zero() {
        let cfg = QuadratureConfig::default();
        for g in [0.0, -8.0, 1.0] {
            let v = green_point(&[0, 0], 0.0, g, &cfg).unwrap();
            assert!((v.value - Complex64::new(1.0, 0.0)).norm() < 1e-14);
            let w = green_point(&[3, 0], 0.0, g, &cfg).unwrap();
            assert!(w.value.norm() < 1e-14);
        }
        let i = i_of_v(&[0, 0], 0.0, 0.0, &cfg).unwrap();
        assert!((i.re - 4.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn one_dim_matches_bessel_free_case() {
        // γ arbitrary, t small: compare with a direct high-resolution sum
        let cfg = QuadratureConfig::default();
        let v = green_point(&[2], 0.7, 1.0, &cfg).unwrap();
        let n = 4096;
        let mut s = Complex64::new(0.0, 0.0);
        for k in 0..n {
            let xi = 2.0 * PI * k as f64 / n as f64;
            let w = axis_symbol(xi);
            s += Complex64::from_polar(1.0, 2.0 * xi + 0.7 * w * (w + 1.0));
        }
        assert!((v.value - s / n as f64).norm() < 1e-12);
    }

    #[test]
    fn propagate_rejects_small_grid() {
        let f = LatticeField::zeros(2, 5);
        assert!(matches!(linear_propagate(&f, 1.0, 0.0, 10), Err(QuadratureError::GridTooSmall { .. })));
    }

    #[test]
    fn propagate_identity_at_zero() {
        let mut f = LatticeField::zeros(2, 2);
        f.set(&[1, -2], Complex64::new(0.3, -0.1));
        f.set(&[0, 0], Complex64::new(1.0, 0.0));
        let g = linear_propagate(&f, 0.0, 1.0, 5).unwrap();
        for (a, b) in g.values.iter().zip(&f.values) {
            assert!((a - b).norm() < 1e-14);
        }
    }
}
