//! Adapted coordinates for every class of degenerate critical point in two dimensions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::polygon::{adaptedness, newton_polygon, AdaptednessReport, NewtonPolygon};
use super::series::{expand_phase, expand_symbol, TaylorSeries2};
use super::{apply_change, CoordinateChange, NewtonError};
use crate::critical::{classify, fold_quadrant, CatalogKind};
use crate::symbol::{dispersion_gradient, PhaseSpec, TorusPoint};

const CLASSIFY_TOL: f64 = 1e-8;
const CLAIM_TOL: f64 = 1e-8;
const ORDERS: (usize, usize) = (8, 10);

/// An intermediate coordinate system examined on the way to adapted ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub label: String,
    pub polygon: NewtonPolygon,
    /// `None` when the coordinates are adapted, otherwise the reason they are not.
    pub obstruction: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub kind: CatalogKind,
    /// Representative in [0, π]².
    pub xi: TorusPoint,
    pub velocity: Vec<f64>,
    pub changes: Vec<CoordinateChange>,
    pub polygon: NewtonPolygon,
    pub report: AdaptednessReport,
    /// Named coefficients whose nonvanishing the route relies on.
    pub claims: Vec<(String, f64)>,
    pub stages: Vec<Stage>,
}

struct Route {
    changes: Vec<CoordinateChange>,
    series: TaylorSeries2,
    claims: Vec<(String, f64)>,
    stages: Vec<Stage>,
}

fn stage(label: &str, series: &TaylorSeries2) -> Result<Stage, NewtonError> {
    let polygon = newton_polygon(series)?;
    let obstruction = match adaptedness(series, &polygon) {
        Ok(_) => None,
        Err(e @ NewtonError::NotAdapted { .. }) => Some(e.to_string()),
        Err(e) => return Err(e),
    };
    Ok(Stage { label: label.to_string(), polygon, obstruction })
}

fn apply_all(series: &TaylorSeries2, changes: &[CoordinateChange]) -> Result<TaylorSeries2, NewtonError> {
    changes.iter().try_fold(series.clone(), |s, c| apply_change(&s, c))
}

fn nonzero(claims: &[(String, f64)]) -> Result<(), NewtonError> {
    for (name, v) in claims {
        if !(v.abs() > CLAIM_TOL) {
            return Err(NewtonError::ClaimFailed(format!("{name} = {v:e}")));
        }
    }
    Ok(())
}

/// Unit tangent frame [[t₁, −t₂], [t₂, t₁]]/|t| with t_j = tan ξ_j.
fn tangent_frame(xi: &[f64]) -> ([[f64; 2]; 2], f64) {
    let (t1, t2) = (xi[0].tan(), xi[1].tan());
    let n = t1.hypot(t2);
    ([[t1 / n, -t2 / n], [t2 / n, t1 / n]], n)
}

fn route(kind: CatalogKind, gamma: f64, xi: &TorusPoint, order: usize) -> Result<Route, NewtonError> {
    let c = xi.coords();
    let velocity: Vec<f64> = dispersion_gradient(gamma, xi).iter().map(|g| -g).collect();
    let spec = PhaseSpec::new(2, gamma, velocity)?;
    let phase = expand_phase(&spec, xi, order)?.without_constant();
    let mut stages = Vec::new();
    let mut claims = Vec::new();
    let changes = match kind {
        CatalogKind::Sigma2 if gamma == -8.0 => {
            // y₁ = δ₁ + δ₂, y₂ = δ₁ − δ₂
            vec![CoordinateChange::linear([[0.5, 0.5], [0.5, -0.5]])]
        }
        CatalogKind::Sigma2 => Vec::new(),
        CatalogKind::Special => {
            // 2u₁ = δ₁ + δ₂, 2u₂ = δ₁ − δ₂
            vec![CoordinateChange::linear([[1.0, 1.0], [1.0, -1.0]])]
        }
        CatalogKind::ECurve => {
            let (frame, n) = tangent_frame(c);
            let changes = vec![CoordinateChange::linear(frame)];
            let s = apply_all(&phase, &changes)?;
            let (c1, c2) = (c[0].cos(), c[1].cos());
            let a2_formula = -4.0 * c1 * c2 * n.powi(4) / (n * n);
            claims.push(("a1".to_string(), s.coeff(3, 0)));
            claims.push(("a2".to_string(), s.coeff(0, 2)));
            let rel = (s.coeff(0, 2) - a2_formula).abs() / a2_formula.abs().max(1e-300);
            if rel > 1e-8 {
                return Err(NewtonError::ClaimFailed(format!(
                    "a2 = {} differs from −4c₁c₂|t|² = {a2_formula}",
                    s.coeff(0, 2)
                )));
            }
            changes
        }
        CatalogKind::DCurve if gamma == -8.0 => {
            // the curve cos ξ₁ + cos ξ₂ = 0 is the straight line ξ₁ + ξ₂ = π
            let (frame, _) = tangent_frame(c);
            let changes = vec![CoordinateChange::linear(frame)];
            let s = apply_all(&phase, &changes)?;
            claims.push(("a2".to_string(), s.coeff(0, 2)));
            changes
        }
        CatalogKind::DCurve => {
            let (s1, s2) = (c[0].sin(), c[1].sin());
            let (c1, c2) = (c[0].cos(), c[1].cos());
            let eigen = CoordinateChange::linear([[s2, s1], [-s1, s2]]);
            let b1 = s2 * s2 * c1 + s1 * s1 * c2;
            let b2 = s1 * s1 + s2 * s2;
            claims.push(("b1".to_string(), b1));
            claims.push(("b2".to_string(), b2));
            let z = apply_change(&phase, &eigen)?;
            stages.push(stage("eigenvector frame", &z)?);
            stages.push(stage("quadratic substitution", &apply_change(&z, &CoordinateChange::Quadratic { b1, b2 })?)?);
            // straighten the curve {ω² + γ/2 = 0}: y₂ = z₂ − h(z₁)
            let g = apply_change(&expand_symbol(xi, order).add_constant(gamma / 2.0), &eigen)?;
            let h = implicit_branch(&g, order)?;
            vec![eigen, CoordinateChange::Shear { coeffs: h }]
        }
    };
    nonzero(&claims)?;
    let series = apply_all(&phase, &changes)?;
    Ok(Route { changes, series, claims, stages })
}

/// Power series h with g(z₁, h(z₁)) = 0, g(0) = 0, ∂₁g(0) = 0, ∂₂g(0) ≠ 0.
fn implicit_branch(g: &TaylorSeries2, order: usize) -> Result<Vec<f64>, NewtonError> {
    let g01 = g.coeff(0, 1);
    if g01.abs() < CLAIM_TOL {
        return Err(NewtonError::ClaimFailed(format!("transversal derivative {g01:e}")));
    }
    let mut h = vec![0.0; order + 1];
    for _ in 0..=order {
        let r = g.compose(&TaylorSeries2::variable(order, 0), &TaylorSeries2::univariate(order, 0, &h));
        for (k, hk) in h.iter_mut().enumerate().skip(1) {
            *hk -= r.coeff(k, 0) / g01;
        }
    }
    Ok(h)
}

fn same_geometry(a: &NewtonPolygon, b: &NewtonPolygon) -> bool {
    a.vertices == b.vertices && a.distance == b.distance && a.principal_face == b.principal_face
}

/// Adapted coordinates and decay index for a degenerate critical point ξ₀ of
/// φ(v₀, ·) with v₀ = −∇ψ(ξ₀). The expansion is repeated at orders 8 and 10
/// and must give the same polygon.
pub fn case_catalog(gamma: f64, xi0: &TorusPoint) -> Result<CaseReport, NewtonError> {
    if xi0.dim() != 2 {
        return Err(NewtonError::TwoDimensionalOnly);
    }
    let xi = fold_quadrant(xi0);
    let kind = classify(gamma, &xi, CLASSIFY_TOL)
        .ok_or_else(|| NewtonError::CaseNotCovered { gamma, xi: xi0.coords().to_vec() })?;
    // snap catalogued exact points
    let xi = snap_point(&xi);
    let low = route(kind, gamma, &xi, ORDERS.0)?;
    let high = route(kind, gamma, &xi, ORDERS.1)?;
    let p_low = newton_polygon(&low.series)?;
    let p_high = newton_polygon(&high.series)?;
    if !same_geometry(&p_low, &p_high) {
        return Err(NewtonError::UnstableExpansion { low: ORDERS.0, high: ORDERS.1 });
    }
    let report = adaptedness(&high.series, &p_high)?;
    Ok(CaseReport {
        kind,
        velocity: dispersion_gradient(gamma, &xi).iter().map(|g| -g).collect(),
        xi,
        changes: high.changes,
        polygon: p_high,
        report,
        claims: high.claims,
        stages: high.stages,
    })
}

fn snap_point(xi: &TorusPoint) -> TorusPoint {
    let snapped = xi
        .coords()
        .iter()
        .map(|&x| {
            for target in [0.0, PI / 2.0, PI] {
                if (x - target).abs() < CLASSIFY_TOL {
                    return target;
                }
            }
            x
        })
        .collect();
    TorusPoint::new(snapped).unwrap_or_else(|_| xi.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newton::{Face, Q};

    fn pt(a: f64, b: f64) -> TorusPoint {
        TorusPoint::new(vec![a, b]).unwrap()
    }

    #[test]
    fn origin_at_zero_gamma() {
        let r = case_catalog(0.0, &pt(0.0, 0.0)).unwrap();
        assert_eq!(r.report.index, (Q::new(1, 2), 0));
        assert!(matches!(r.polygon.principal_face, Face::CompactEdge { .. }));
    }

    #[test]
    fn corner_at_minus_eight() {
        let r = case_catalog(-8.0, &pt(0.0, PI)).unwrap();
        assert_eq!(r.polygon.principal_face, Face::Vertex { point: (2, 2) });
        assert_eq!(r.report.index, (Q::new(1, 2), 1));
    }

    #[test]
    fn special_point() {
        let r = case_catalog(1.0, &pt(PI / 2.0, PI / 2.0)).unwrap();
        assert_eq!(r.report.index, (Q::new(3, 4), 0));
        assert_eq!(r.report.m_pr, Some(1));
        let r = case_catalog(-8.0, &pt(PI / 2.0, PI / 2.0)).unwrap();
        assert_eq!(r.report.index, (Q::new(1, 2), 0));
    }

    #[test]
    fn outside_catalog() {
        assert!(matches!(case_catalog(1.0, &pt(0.4, 1.9)), Err(NewtonError::CaseNotCovered { .. })));
    }
}
