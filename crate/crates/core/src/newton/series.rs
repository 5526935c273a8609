//! Truncated bivariate power series Σ c_ij x₁^i x₂^j, i + j ≤ order.

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::NewtonError;
use crate::symbol::{PhaseSpec, TorusPoint};

pub const PRUNE_REL: f64 = 1e-12;
pub const SNAP_TOL: f64 = 1e-9;
pub const SNAP_MAX_DEN: i64 = 96;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorSeries2 {
    order: usize,
    /// Triangular layout, see `slot`.
    coeffs: Vec<f64>,
}

#[inline]
fn slot(i: usize, j: usize) -> usize {
    let k = i + j;
    k * (k + 1) / 2 + j
}

impl TaylorSeries2 {
    pub fn zero(order: usize) -> Self {
        Self { order, coeffs: vec![0.0; (order + 1) * (order + 2) / 2] }
    }

    pub fn constant(order: usize, c: f64) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c;
        s
    }

    /// The coordinate x₁ (`which` = 0) or x₂ (`which` = 1).
    pub fn variable(order: usize, which: usize) -> Self {
        let mut s = Self::zero(order);
        if order >= 1 {
            if which == 0 {
                s.set(1, 0, 1.0);
            } else {
                s.set(0, 1, 1.0);
            }
        }
        s
    }

    pub fn from_terms(order: usize, terms: &[((usize, usize), f64)]) -> Self {
        let mut s = Self::zero(order);
        for &((i, j), c) in terms {
            if i + j <= order {
                s.coeffs[slot(i, j)] += c;
            }
        }
        s
    }

    /// Univariate series Σ a_k x^k placed on coordinate `which`.
    pub fn univariate(order: usize, which: usize, a: &[f64]) -> Self {
        let mut s = Self::zero(order);
        for (k, &c) in a.iter().enumerate().take(order + 1) {
            if which == 0 {
                s.set(k, 0, c);
            } else {
                s.set(0, k, c);
            }
        }
        s
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        if i + j > self.order {
            0.0
        } else {
            self.coeffs[slot(i, j)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, c: f64) {
        assert!(i + j <= self.order, "term ({i},{j}) beyond order {}", self.order);
        self.coeffs[slot(i, j)] = c;
    }

    pub fn terms(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        (0..=self.order).flat_map(move |k| (0..=k).map(move |j| ((k - j, j), self.coeffs[slot(k - j, j)])))
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn truncate(&self, order: usize) -> Self {
        let mut s = Self::zero(order);
        for ((i, j), c) in self.terms() {
            if i + j <= order {
                s.set(i, j, c);
            }
        }
        s
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order.min(other.order);
        let mut s = Self::zero(order);
        for k in 0..s.coeffs.len() {
            s.coeffs[k] = self.coeffs[k] + other.coeffs[k];
        }
        s
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { order: self.order, coeffs: self.coeffs.iter().map(|x| x * c).collect() }
    }

    pub fn add_constant(&self, c: f64) -> Self {
        let mut s = self.clone();
        s.coeffs[0] += c;
        s
    }

    /// Product truncated at the smaller order.
    pub fn mul(&self, other: &Self) -> Self {
        let order = self.order.min(other.order);
        let mut s = Self::zero(order);
        for ((i1, j1), a) in self.terms() {
            if a == 0.0 || i1 + j1 > order {
                continue;
            }
            for ((i2, j2), b) in other.terms() {
                if i1 + j1 + i2 + j2 > order {
                    break;
                }
                if b != 0.0 {
                    s.coeffs[slot(i1 + i2, j1 + j2)] += a * b;
                }
            }
        }
        s
    }

    pub fn without_constant(&self) -> Self {
        let mut s = self.clone();
        s.coeffs[0] = 0.0;
        s
    }

    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        self.terms().map(|((i, j), c)| c * x1.powi(i as i32) * x2.powi(j as i32)).sum()
    }

    /// ∂/∂x₁ and ∂/∂x₂ evaluated at (x1, x2).
    pub fn eval_gradient(&self, x1: f64, x2: f64) -> (f64, f64) {
        let mut g = (0.0, 0.0);
        for ((i, j), c) in self.terms() {
            if c == 0.0 {
                continue;
            }
            if i > 0 {
                g.0 += c * i as f64 * x1.powi(i as i32 - 1) * x2.powi(j as i32);
            }
            if j > 0 {
                g.1 += c * j as f64 * x1.powi(i as i32) * x2.powi(j as i32 - 1);
            }
        }
        g
    }

    /// Substitute x₁ = p1(y), x₂ = p2(y). Exact up to the output order when both
    /// substitutions vanish at the origin; otherwise exact only for polynomial
    /// inputs of degree ≤ order.
    pub fn compose(&self, p1: &Self, p2: &Self) -> Self {
        let order = self.order;
        let p1 = p1.truncate(order);
        let p2 = p2.truncate(order);
        let powers = |p: &Self| {
            let mut v = vec![Self::constant(order, 1.0)];
            for k in 1..=order {
                let next = v[k - 1].mul(p);
                v.push(next);
            }
            v
        };
        let pw1 = powers(&p1);
        let pw2 = powers(&p2);
        let mut out = Self::zero(order);
        for ((i, j), c) in self.terms() {
            if c == 0.0 {
                continue;
            }
            let term = pw1[i].mul(&pw2[j]).scale(c);
            out = out.add(&term);
        }
        out
    }

    /// Coefficients after zero-pruning (relative `PRUNE_REL`) and snapping to
    /// rationals with denominator ≤ `SNAP_MAX_DEN` when within `SNAP_TOL`.
    pub fn cleaned(&self) -> CleanSeries {
        let max = self.max_abs();
        let mut terms = BTreeMap::new();
        for ((i, j), c) in self.terms() {
            if c.abs() <= PRUNE_REL * max || c == 0.0 {
                continue;
            }
            match snap(c) {
                Some(r) if *r.numer() == 0 => {}
                Some(r) => {
                    terms.insert((i, j), CleanCoeff { value: ratio_value(&r), exact: Some(r) });
                }
                None => {
                    terms.insert((i, j), CleanCoeff { value: c, exact: None });
                }
            }
        }
        CleanSeries { order: self.order, terms }
    }

    /// Taylor support after cleaning, constant term excluded.
    pub fn support(&self) -> Vec<(usize, usize)> {
        self.cleaned().terms.keys().filter(|&&(i, j)| i + j > 0).cloned().collect()
    }

    /// Keys "i,j" → coefficient, the interchange format of the CLI.
    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.terms().filter(|(_, c)| *c != 0.0).map(|((i, j), c)| (format!("{i},{j}"), c)).collect()
    }

    pub fn from_map(order: usize, map: &BTreeMap<String, f64>) -> Result<Self, NewtonError> {
        let mut s = Self::zero(order);
        for (k, &c) in map {
            let parts: Vec<&str> = k.split(',').map(str::trim).collect();
            let parse = |p: &str| p.parse::<usize>().map_err(|_| NewtonError::BadTermKey(k.clone()));
            if parts.len() != 2 {
                return Err(NewtonError::BadTermKey(k.clone()));
            }
            let (i, j) = (parse(parts[0])?, parse(parts[1])?);
            if i + j > order {
                return Err(NewtonError::TermBeyondOrder { i, j, order });
            }
            s.set(i, j, c);
        }
        Ok(s)
    }

    /// Smallest total degree with a nonzero (cleaned) coefficient, constant excluded.
    pub fn lowest_degree(&self) -> Option<usize> {
        self.support().iter().map(|(i, j)| i + j).min()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanCoeff {
    pub value: f64,
    pub exact: Option<Ratio<i64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanSeries {
    pub order: usize,
    pub terms: BTreeMap<(usize, usize), CleanCoeff>,
}

impl CleanSeries {
    pub fn to_series(&self) -> TaylorSeries2 {
        let mut s = TaylorSeries2::zero(self.order);
        for (&(i, j), c) in &self.terms {
            s.set(i, j, c.value);
        }
        s
    }
}

fn ratio_value(r: &Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Nearest p/q with q ≤ `SNAP_MAX_DEN` within `SNAP_TOL`, smallest q first.
pub fn snap(c: f64) -> Option<Ratio<i64>> {
    if !c.is_finite() || c.abs() > 1e12 {
        return None;
    }
    for q in 1..=SNAP_MAX_DEN {
        let p = (c * q as f64).round();
        if (c - p / q as f64).abs() <= SNAP_TOL {
            return Some(Ratio::new(p as i64, q));
        }
    }
    None
}

/// Series of 2 − 2cos(x₀ + δ) in δ up to `order`.
fn axis_series(order: usize, which: usize, x0: f64) -> TaylorSeries2 {
    let (s, c) = x0.sin_cos();
    let mut a = vec![0.0; order + 1];
    let mut fact = 1.0;
    for (k, ak) in a.iter_mut().enumerate() {
        if k > 0 {
            fact *= k as f64;
        }
        // d^k/dδ^k cos(x₀+δ) at 0 cycles through c, −s, −c, s
        let deriv = match k % 4 {
            0 => c,
            1 => -s,
            2 => -c,
            _ => s,
        };
        *ak = -2.0 * deriv / fact;
    }
    a[0] += 2.0;
    TaylorSeries2::univariate(order, which, &a)
}

/// ω²(ξ₀ + δ) as a series in δ.
pub fn expand_symbol(xi0: &TorusPoint, order: usize) -> TaylorSeries2 {
    let c = xi0.coords();
    axis_series(order, 0, c[0]).add(&axis_series(order, 1, c[1]))
}

/// φ(v, ξ₀ + δ) as a truncated series in δ (two dimensions only).
pub fn expand_phase(spec: &PhaseSpec, xi0: &TorusPoint, order: usize) -> Result<TaylorSeries2, NewtonError> {
    if spec.d != 2 || xi0.dim() != 2 {
        return Err(NewtonError::TwoDimensionalOnly);
    }
    if !(4..=12).contains(&order) {
        return Err(NewtonError::InvalidOrder(order));
    }
    let w = expand_symbol(xi0, order);
    let psi = w.mul(&w).add(&w.scale(spec.gamma));
    let c = xi0.coords();
    let lin = TaylorSeries2::from_terms(
        order,
        &[((0, 0), spec.v[0] * c[0] + spec.v[1] * c[1]), ((1, 0), spec.v[0]), ((0, 1), spec.v[1])],
    );
    Ok(psi.add(&lin))
}
