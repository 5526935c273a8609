//! Newton polyhedra of the phase at degenerate critical points in two dimensions.

mod catalog;
mod polygon;
mod roots;
mod series;

pub use catalog::{case_catalog, CaseReport, Stage};
pub use polygon::{
    adaptedness, face_part, max_order_on_circle, newton_polygon, nondegeneracy_check, polygon_from_support,
    principal_part, AdaptednessReport, Edge, Face, NewtonPolygon, RayDirection, Q,
};
pub use roots::{complex_roots, real_root_multiplicities};
pub use series::{expand_phase, expand_symbol, snap, CleanCoeff, CleanSeries, TaylorSeries2};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NewtonError {
    #[error("Newton polygons are implemented for two dimensions only")]
    TwoDimensionalOnly,
    #[error("expansion order {0} outside 4..=12")]
    InvalidOrder(usize),
    #[error("series has no nonconstant terms")]
    EmptySupport,
    #[error("coordinate change is singular")]
    SingularLinearPart,
    #[error("shear must vanish at the origin")]
    ShearOffset,
    #[error("polynomial is not quasi-homogeneous")]
    NotQuasiHomogeneous,
    #[error("supporting line passes through the origin")]
    LineThroughOrigin,
    #[error("coordinates not adapted: m = {m_pr} exceeds d = {distance} on the line with weights {kappa:?}")]
    NotAdapted { kappa: (Q, Q), distance: Q, m_pr: usize },
    #[error("no catalogued case for point {xi:?} at gamma = {gamma}")]
    CaseNotCovered { gamma: f64, xi: Vec<f64> },
    #[error("polygon changed between orders {low} and {high}")]
    UnstableExpansion { low: usize, high: usize },
    #[error("nonvanishing claim failed: {0}")]
    ClaimFailed(String),
    #[error("bad term key {0:?}, expected \"i,j\"")]
    BadTermKey(String),
    #[error("term ({i},{j}) exceeds order {order}")]
    TermBeyondOrder { i: usize, j: usize, order: usize },
    #[error(transparent)]
    Symbol(#[from] crate::symbol::SymbolError),
}

/// Changes of variables x = P(y) applied to a series in x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoordinateChange {
    /// x = M y + offset, M row-major.
    Linear { matrix: [[f64; 2]; 2], offset: [f64; 2] },
    /// y₂ = x₂ − h(x₁) with h(x₁) = Σ_k coeffs[k] x₁^k and h(0) = 0.
    Shear { coeffs: Vec<f64> },
    /// w₁ = b₁ z₁² + 2 b₂ z₂, w₂ = z₁.
    Quadratic { b1: f64, b2: f64 },
}

impl CoordinateChange {
    pub fn linear(matrix: [[f64; 2]; 2]) -> Self {
        CoordinateChange::Linear { matrix, offset: [0.0, 0.0] }
    }

    /// The substitution (x₁(y), x₂(y)) as series in y.
    fn substitution(&self, order: usize) -> Result<(TaylorSeries2, TaylorSeries2), NewtonError> {
        match self {
            CoordinateChange::Linear { matrix: m, offset } => {
                let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
                let size = m.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs()));
                if !det.is_finite() || det.abs() <= 1e-12 * size.max(1.0).powi(2) {
                    return Err(NewtonError::SingularLinearPart);
                }
                let row = |r: usize| {
                    TaylorSeries2::from_terms(order, &[((0, 0), offset[r]), ((1, 0), m[r][0]), ((0, 1), m[r][1])])
                };
                Ok((row(0), row(1)))
            }
            CoordinateChange::Shear { coeffs } => {
                if coeffs.first().is_some_and(|c| *c != 0.0) {
                    return Err(NewtonError::ShearOffset);
                }
                let h = TaylorSeries2::univariate(order, 0, coeffs);
                Ok((TaylorSeries2::variable(order, 0), TaylorSeries2::variable(order, 1).add(&h)))
            }
            CoordinateChange::Quadratic { b1, b2 } => {
                if *b2 == 0.0 || !b2.is_finite() || !b1.is_finite() {
                    return Err(NewtonError::SingularLinearPart);
                }
                // z₁ = w₂, z₂ = (w₁ − b₁ w₂²)/(2b₂)
                let z2 = TaylorSeries2::from_terms(order, &[((1, 0), 0.5 / b2), ((0, 2), -b1 * 0.5 / b2)]);
                Ok((TaylorSeries2::variable(order, 1), z2))
            }
        }
    }
}

/// Rewrite `series` in the new coordinates. Exact up to the series order for
/// changes fixing the origin.
pub fn apply_change(series: &TaylorSeries2, change: &CoordinateChange) -> Result<TaylorSeries2, NewtonError> {
    let (p1, p2) = change.substitution(series.order())?;
    Ok(series.compose(&p1, &p2))
}
