//! The lattice symbol ω², the phase φ(v, ξ) = v·ξ + ω⁴ + γω² and its derivatives.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymbolError {
    #[error("dimension must be 1 or 2, got {0}")]
    InvalidDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

/// Parameters of the phase φ(v, ξ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpec {
    pub d: usize,
    pub gamma: f64,
    pub v: Vec<f64>,
}

impl PhaseSpec {
    pub fn new(d: usize, gamma: f64, v: Vec<f64>) -> Result<Self, SymbolError> {
        if d != 1 && d != 2 {
            return Err(SymbolError::InvalidDimension(d));
        }
        if v.len() != d {
            return Err(SymbolError::DimensionMismatch { expected: d, got: v.len() });
        }
        if !gamma.is_finite() {
            return Err(SymbolError::NonFinite("gamma"));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(SymbolError::NonFinite("v"));
        }
        Ok(Self { d, gamma, v })
    }

    /// Phase with zero velocity, i.e. the dispersion relation ψ = ω⁴ + γω².
    pub fn at_rest(d: usize, gamma: f64) -> Result<Self, SymbolError> {
        Self::new(d, gamma, vec![0.0; d])
    }
}

/// Wrap an angle to [−π, π).
pub fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI {
        -PI
    } else {
        y
    }
}

/// A point of the torus [−π, π)^d, stored wrapped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    xi: Vec<f64>,
}

impl TorusPoint {
    pub fn new(xi: Vec<f64>) -> Result<Self, SymbolError> {
        if xi.is_empty() || xi.len() > 2 {
            return Err(SymbolError::InvalidDimension(xi.len()));
        }
        if xi.iter().any(|x| !x.is_finite()) {
            return Err(SymbolError::NonFinite("xi"));
        }
        Ok(Self { xi: xi.into_iter().map(wrap_angle).collect() })
    }

    pub fn dim(&self) -> usize {
        self.xi.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.xi
    }

    /// Distance on the torus (max norm of the wrapped difference).
    pub fn torus_distance(&self, other: &TorusPoint) -> f64 {
        self.xi.iter().zip(&other.xi).map(|(a, b)| wrap_angle(a - b).abs()).fold(0.0, f64::max)
    }
}

/// 2 − 2cos ξ written as 4 sin²(ξ/2), which keeps relative accuracy near 0.
#[inline]
pub fn axis_symbol(xi: f64) -> f64 {
    let s = (0.5 * xi).sin();
    4.0 * s * s
}

pub fn omega_sq(xi: &TorusPoint) -> f64 {
    xi.coords().iter().map(|&x| axis_symbol(x)).sum()
}

/// ψ(ξ) = ω⁴ + γω² as a function of ω².
#[inline]
pub fn dispersion(omega2: f64, gamma: f64) -> f64 {
    omega2 * (omega2 + gamma)
}

fn check_dim(spec: &PhaseSpec, xi: &TorusPoint) -> Result<(), SymbolError> {
    if spec.d != xi.dim() {
        return Err(SymbolError::DimensionMismatch { expected: spec.d, got: xi.dim() });
    }
    Ok(())
}

pub fn phase_value(spec: &PhaseSpec, xi: &TorusPoint) -> Result<f64, SymbolError> {
    check_dim(spec, xi)?;
    let w = omega_sq(xi);
    let vx: f64 = spec.v.iter().zip(xi.coords()).map(|(v, x)| v * x).sum();
    Ok(vx + dispersion(w, spec.gamma))
}

pub fn phase_gradient(spec: &PhaseSpec, xi: &TorusPoint) -> Result<Vec<f64>, SymbolError> {
    check_dim(spec, xi)?;
    let a = 4.0 * omega_sq(xi) + 2.0 * spec.gamma;
    Ok(xi.coords().iter().zip(&spec.v).map(|(x, v)| a * x.sin() + v).collect())
}

/// Gradient of ψ alone; the velocity that makes ξ critical is its negative.
pub fn dispersion_gradient(gamma: f64, xi: &TorusPoint) -> Vec<f64> {
    let a = 4.0 * omega_sq(xi) + 2.0 * gamma;
    xi.coords().iter().map(|x| a * x.sin()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianReport {
    /// Row-major d×d matrix.
    pub matrix: Vec<f64>,
    pub d: usize,
    /// Closed-form determinant.
    pub determinant: f64,
    pub eigenvalues: Vec<f64>,
    pub corank: usize,
    pub tolerance: f64,
}

impl HessianReport {
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.d + j]
    }

    pub fn matrix_determinant(&self) -> f64 {
        match self.d {
            1 => self.matrix[0],
            _ => self.matrix[0] * self.matrix[3] - self.matrix[1] * self.matrix[2],
        }
    }
}

pub const CORANK_TOL: f64 = 1e-9;

/// Closed-form Hessian determinant: (4ω²+2γ)^{d−1}[(4ω²+2γ)Πc + 8Σ s_j² Π_{l≠j} c_l],
/// with the factored form −64(c₁+c₂)²(1−2c₁c₂) at γ = −8 in two dimensions.
pub fn hessian_determinant(gamma: f64, xi: &TorusPoint) -> f64 {
    let a = 4.0 * omega_sq(xi) + 2.0 * gamma;
    let c: Vec<f64> = xi.coords().iter().map(|x| x.cos()).collect();
    let s: Vec<f64> = xi.coords().iter().map(|x| x.sin()).collect();
    match xi.dim() {
        1 => a * c[0] + 8.0 * s[0] * s[0],
        _ => {
            if gamma == -8.0 {
                let sum = c[0] + c[1];
                -64.0 * sum * sum * (1.0 - 2.0 * c[0] * c[1])
            } else {
                a * (a * c[0] * c[1] + 8.0 * (s[0] * s[0] * c[1] + s[1] * s[1] * c[0]))
            }
        }
    }
}

fn symmetric_eigenvalues(m: &[f64], d: usize) -> Vec<f64> {
    if d == 1 {
        return vec![m[0]];
    }
    let (a, b, c) = (m[0], m[1], m[3]);
    let mean = 0.5 * (a + c);
    let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    vec![mean - r, mean + r]
}

pub fn phase_hessian(gamma: f64, xi: &TorusPoint) -> HessianReport {
    let d = xi.dim();
    let a = 4.0 * omega_sq(xi) + 2.0 * gamma;
    let c: Vec<f64> = xi.coords().iter().map(|x| x.cos()).collect();
    let s: Vec<f64> = xi.coords().iter().map(|x| x.sin()).collect();
    let mut matrix = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            matrix[i * d + j] = if i == j { a * c[i] + 8.0 * s[i] * s[i] } else { 8.0 * s[i] * s[j] };
        }
    }
    let eigenvalues = symmetric_eigenvalues(&matrix, d);
    let spectral = eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let threshold = CORANK_TOL * (1.0 + spectral);
    let corank = eigenvalues.iter().filter(|l| l.abs() <= threshold).count();
    HessianReport { matrix, d, determinant: hessian_determinant(gamma, xi), eigenvalues, corank, tolerance: CORANK_TOL }
}

/// (φ′, φ″, φ‴, φ⁗) of the one-dimensional phase at u.
pub fn phase_derivs_1d(gamma: f64, v: f64, u: f64) -> (f64, f64, f64, f64) {
    let (s, c) = u.sin_cos();
    let g = 4.0 + gamma;
    (
        2.0 * s * (g - 4.0 * c) + v,
        -16.0 * c * c + 2.0 * g * c + 8.0,
        2.0 * s * (-g + 16.0 * c),
        64.0 * c * c - 2.0 * g * c - 32.0,
    )
}

/// sup over the torus of max_j |∂_j ψ|, the largest group speed along an axis.
///
/// ∂_j ψ = (4ω² + 2γ) sin ξ_j; the remaining coordinate only enters through ω²
/// and is extremal at a_2 ∈ {0, 4}, so a one-dimensional scan plus golden-section
/// refinement suffices.
pub fn max_group_speed(d: usize, gamma: f64) -> f64 {
    let offsets: &[f64] = if d == 1 { &[0.0] } else { &[0.0, 4.0] };
    let f = |x: f64| {
        offsets.iter().map(|o| ((4.0 * (axis_symbol(x) + o) + 2.0 * gamma) * x.sin()).abs()).fold(0.0, f64::max)
    };
    let n = 4096;
    let h = PI / n as f64;
    let mut best = 0.0;
    let mut best_i = 0;
    for i in 0..=n {
        let val = f(i as f64 * h);
        if val > best {
            best = val;
            best_i = i;
        }
    }
    let (mut lo, mut hi) = ((best_i as f64 - 1.0) * h, (best_i as f64 + 1.0) * h);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let m1 = hi - r * (hi - lo);
        let m2 = lo + r * (hi - lo);
        if f(m1) > f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    best.max(f(0.5 * (lo + hi)))
}
