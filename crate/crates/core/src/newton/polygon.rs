//! Newton polygon of a bivariate series, principal parts and adaptedness.

use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::roots::real_root_multiplicities;
use super::series::TaylorSeries2;
use super::NewtonError;

pub type Q = Ratio<i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RayDirection {
    /// {(i₀, j) : j ≥ j₀}
    Up,
    /// {(i, j₀) : i ≥ i₀}
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Edge {
    Compact { from: (i64, i64), to: (i64, i64) },
    Unbounded { from: (i64, i64), direction: RayDirection },
}

impl Edge {
    /// Weights (κ₁, κ₂) of the supporting line κ₁ i + κ₂ j = 1.
    pub fn kappa(&self) -> Result<(Q, Q), NewtonError> {
        match *self {
            Edge::Compact { from: (a1, b1), to: (a2, b2) } => {
                let (n1, n2) = (b1 - b2, a2 - a1);
                let c = n1 * a1 + n2 * b1;
                Ok((Q::new(n1, c), Q::new(n2, c)))
            }
            Edge::Unbounded { from: (i0, _), direction: RayDirection::Up } if i0 > 0 => Ok((Q::new(1, i0), Q::zero())),
            Edge::Unbounded { from: (_, j0), direction: RayDirection::Right } if j0 > 0 => {
                Ok((Q::zero(), Q::new(1, j0)))
            }
            _ => Err(NewtonError::LineThroughOrigin),
        }
    }

    fn contains(&self, p: (Q, Q)) -> bool {
        match *self {
            Edge::Compact { from, to } => {
                let (f0, f1) = (Q::from_integer(from.0), Q::from_integer(from.1));
                let (t0, t1) = (Q::from_integer(to.0), Q::from_integer(to.1));
                let cross = (t0 - f0) * (p.1 - f1) - (t1 - f1) * (p.0 - f0);
                cross.is_zero() && p.0 >= f0 && p.0 <= t0
            }
            Edge::Unbounded { from, direction: RayDirection::Up } => {
                p.0 == Q::from_integer(from.0) && p.1 >= Q::from_integer(from.1)
            }
            Edge::Unbounded { from, direction: RayDirection::Right } => {
                p.1 == Q::from_integer(from.1) && p.0 >= Q::from_integer(from.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Face {
    Vertex { point: (i64, i64) },
    CompactEdge { edge: Edge },
    UnboundedEdge { edge: Edge },
}

impl Face {
    pub fn dim(&self) -> u8 {
        match self {
            Face::Vertex { .. } => 0,
            _ => 1,
        }
    }

    pub fn is_compact(&self) -> bool {
        !matches!(self, Face::UnboundedEdge { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewtonPolygon {
    pub support: Vec<(usize, usize)>,
    pub vertices: Vec<(i64, i64)>,
    /// Vertical ray, compact edges left to right, horizontal ray.
    pub edges: Vec<Edge>,
    pub distance: Q,
    pub principal_face: Face,
    /// Codimension 2 − dim of the principal face.
    pub k0: u8,
}

impl NewtonPolygon {
    pub fn distance_f64(&self) -> f64 {
        *self.distance.numer() as f64 / *self.distance.denom() as f64
    }

    pub fn compact_faces(&self) -> Vec<Face> {
        let mut out: Vec<Face> = self.vertices.iter().map(|&p| Face::Vertex { point: p }).collect();
        out.extend(
            self.edges
                .iter()
                .filter(|e| matches!(e, Edge::Compact { .. }))
                .map(|e| Face::CompactEdge { edge: e.clone() }),
        );
        out
    }
}

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Newton polygon of the cleaned support; the constant term never enters.
pub fn newton_polygon(series: &TaylorSeries2) -> Result<NewtonPolygon, NewtonError> {
    polygon_from_support(series.support())
}

pub fn polygon_from_support(support: Vec<(usize, usize)>) -> Result<NewtonPolygon, NewtonError> {
    let support: Vec<(usize, usize)> = support.into_iter().filter(|&(i, j)| i + j > 0).collect();
    if support.is_empty() {
        return Err(NewtonError::EmptySupport);
    }
    // staircase of minimal points, i increasing and j strictly decreasing
    let mut pts: Vec<(i64, i64)> = support.iter().map(|&(i, j)| (i as i64, j as i64)).collect();
    pts.sort();
    let mut stair: Vec<(i64, i64)> = Vec::new();
    for p in pts {
        if stair.last().map_or(true, |q| p.1 < q.1) {
            stair.push(p);
        }
    }
    // lower convex chain
    let mut hull: Vec<(i64, i64)> = Vec::new();
    for p in stair {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let first = hull[0];
    let last = *hull.last().unwrap();
    let mut edges = vec![Edge::Unbounded { from: first, direction: RayDirection::Up }];
    for w in hull.windows(2) {
        edges.push(Edge::Compact { from: w[0], to: w[1] });
    }
    edges.push(Edge::Unbounded { from: last, direction: RayDirection::Right });

    let distance = diagonal_hit(&edges).ok_or(NewtonError::EmptySupport)?;
    let hit = (distance, distance);
    let principal_face =
        if let Some(&v) = hull.iter().find(|v| Q::from_integer(v.0) == distance && Q::from_integer(v.1) == distance) {
            Face::Vertex { point: v }
        } else if let Some(e) = edges.iter().find(|e| matches!(e, Edge::Compact { .. }) && e.contains(hit)) {
            Face::CompactEdge { edge: e.clone() }
        } else {
            let e = edges.iter().find(|e| e.contains(hit)).ok_or(NewtonError::EmptySupport)?;
            Face::UnboundedEdge { edge: e.clone() }
        };
    let k0 = 2 - principal_face.dim();
    Ok(NewtonPolygon { support, vertices: hull, edges, distance, principal_face, k0 })
}

fn diagonal_hit(edges: &[Edge]) -> Option<Q> {
    for e in edges {
        match *e {
            Edge::Unbounded { from: (i0, j0), direction: RayDirection::Up } if i0 >= j0 => {
                return Some(Q::from_integer(i0));
            }
            Edge::Unbounded { from: (i0, j0), direction: RayDirection::Right } if j0 >= i0 => {
                return Some(Q::from_integer(j0));
            }
            Edge::Compact { from: (a1, b1), to: (a2, b2) } => {
                let den = (a2 - a1) - (b2 - b1);
                let s = Q::new(b1 - a1, den);
                if s >= Q::zero() && s <= Q::one() {
                    return Some(Q::from_integer(a1) + s * Q::from_integer(a2 - a1));
                }
            }
            _ => {}
        }
    }
    None
}

fn on_face(face: &Face, i: usize, j: usize) -> Result<bool, NewtonError> {
    Ok(match face {
        Face::Vertex { point } => (i as i64, j as i64) == *point,
        Face::CompactEdge { edge } | Face::UnboundedEdge { edge } => {
            let (k1, k2) = edge.kappa()?;
            k1 * Q::from_integer(i as i64) + k2 * Q::from_integer(j as i64) == Q::one()
        }
    })
}

/// Restriction of the cleaned series to the exponents on `face`.
pub fn face_part(series: &TaylorSeries2, face: &Face) -> Result<TaylorSeries2, NewtonError> {
    let clean = series.cleaned();
    let mut out = TaylorSeries2::zero(series.order());
    for (&(i, j), c) in &clean.terms {
        if i + j > 0 && on_face(face, i, j)? {
            out.set(i, j, c.value);
        }
    }
    Ok(out)
}

pub fn principal_part(series: &TaylorSeries2, polygon: &NewtonPolygon) -> Result<TaylorSeries2, NewtonError> {
    face_part(series, &polygon.principal_face)
}

/// Maximal vanishing order of a quasi-homogeneous polynomial on the unit circle.
pub fn max_order_on_circle(p: &TaylorSeries2) -> Result<usize, NewtonError> {
    let clean = p.cleaned();
    let pts: Vec<(i64, i64)> = clean.terms.keys().map(|&(i, j)| (i as i64, j as i64)).collect();
    if pts.is_empty() {
        return Err(NewtonError::EmptySupport);
    }
    if pts.len() > 2 {
        let (a, b) = (pts[0], pts[1]);
        if pts[2..].iter().any(|&c| cross(a, b, c) != 0) {
            return Err(NewtonError::NotQuasiHomogeneous);
        }
    }
    if pts.len() == 2 || pts.len() > 2 {
        // the line must avoid the origin and have nonnegative weights
        let (a, b) = (pts[0], pts[1]);
        let (n1, n2) = (b.1 - a.1, a.0 - b.0);
        let c = n1 * a.0 + n2 * a.1;
        if c == 0 || (n1 as i128 * c as i128) < 0 || (n2 as i128 * c as i128) < 0 {
            return Err(NewtonError::NotQuasiHomogeneous);
        }
    }
    let jmax = pts.iter().map(|p| p.1).max().unwrap() as usize;
    let mut best = 0;
    // points with x₁ ≠ 0 lie on orbits through (±1, s)
    for sign in [1.0, -1.0] {
        let mut c = vec![0.0; jmax + 1];
        for (&(i, j), v) in &clean.terms {
            c[j] += v.value * if i % 2 == 1 { sign } else { 1.0 };
        }
        for (_, m) in real_root_multiplicities(&c) {
            best = best.max(m);
        }
    }
    // the axis points (0, ±1)
    let imin = pts.iter().map(|p| p.0).min().unwrap() as usize;
    Ok(best.max(imin))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptednessReport {
    pub distance: Q,
    pub principal_face: Face,
    pub principal_part: TaylorSeries2,
    /// Vanishing order on the circle, for compact principal faces.
    pub m_pr: Option<usize>,
    pub adapted: bool,
    pub nu: u8,
    /// Decay index (1/d_S, ν).
    pub index: (Q, u8),
}

/// Adaptedness trichotomy on the principal face.
pub fn adaptedness(series: &TaylorSeries2, polygon: &NewtonPolygon) -> Result<AdaptednessReport, NewtonError> {
    let pr = principal_part(series, polygon)?;
    let d = polygon.distance;
    let two = Q::from_integer(2);
    let (m_pr, adapted, nu) = match &polygon.principal_face {
        Face::Vertex { .. } => {
            let m = max_order_on_circle(&pr)?;
            (Some(m), true, u8::from(d >= two))
        }
        Face::UnboundedEdge { .. } => (None, true, 0),
        Face::CompactEdge { edge } => {
            let m = max_order_on_circle(&pr)?;
            let mq = Q::from_integer(m as i64);
            if mq > d {
                return Err(NewtonError::NotAdapted { kappa: edge.kappa()?, distance: d, m_pr: m });
            }
            (Some(m), true, u8::from(mq == d && d >= two))
        }
    };
    Ok(AdaptednessReport {
        distance: d,
        principal_face: polygon.principal_face.clone(),
        principal_part: pr,
        m_pr,
        adapted,
        nu,
        index: (d.recip(), nu),
    })
}

/// ∇S_P ≠ 0 on (ℝ∖{0})² for every compact face, by a scan of the unit circle.
pub fn nondegeneracy_check(
    series: &TaylorSeries2,
    polygon: &NewtonPolygon,
    samples: usize,
) -> Result<bool, NewtonError> {
    let samples = samples.max(64);
    for face in polygon.compact_faces() {
        let sp = face_part(series, &face)?;
        let scale: f64 = sp.terms().map(|((i, j), c)| c.abs() * (i + j) as f64).sum();
        if scale == 0.0 {
            continue;
        }
        let g = |th: f64| {
            let (s, c) = th.sin_cos();
            let (a, b) = sp.eval_gradient(c, s);
            a.hypot(b) / scale
        };
        let h = 2.0 * std::f64::consts::PI / samples as f64;
        let vals: Vec<f64> = (0..samples).map(|k| g(k as f64 * h)).collect();
        for k in 0..samples {
            let (l, m, r) = (vals[(k + samples - 1) % samples], vals[k], vals[(k + 1) % samples]);
            if m > l || m > r {
                continue;
            }
            let (th, v) = golden_min(&g, (k as f64 - 1.0) * h, (k as f64 + 1.0) * h);
            let off_axis = th.sin().abs() > 1e-6 && th.cos().abs() > 1e-6;
            if v < 1e-9 && off_axis {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn golden_min(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(terms: &[((usize, usize), f64)]) -> TaylorSeries2 {
        TaylorSeries2::from_terms(10, terms)
    }

    #[test]
    fn quartic_circle() {
        let s = poly(&[((4, 0), 1.0), ((2, 2), 2.0), ((0, 4), 1.0)]);
        let p = newton_polygon(&s).unwrap();
        assert_eq!(p.distance, Q::from_integer(2));
        assert!(matches!(p.principal_face, Face::CompactEdge { .. }));
        assert_eq!(p.vertices, vec![(0, 4), (4, 0)]);
        let r = adaptedness(&s, &p).unwrap();
        assert_eq!(r.m_pr, Some(0));
        assert_eq!(r.index, (Q::new(1, 2), 0));
    }

    #[test]
    fn cusp_edge() {
        let s = poly(&[((3, 0), 1.5), ((0, 2), -2.0), ((2, 1), 0.3), ((0, 3), 1.0)]);
        let p = newton_polygon(&s).unwrap();
        assert_eq!(p.distance, Q::new(6, 5));
        let r = adaptedness(&s, &p).unwrap();
        assert_eq!(r.m_pr, Some(1));
        assert_eq!(r.index, (Q::new(5, 6), 0));
    }

    #[test]
    fn vertex_face() {
        let s = poly(&[((2, 2), 1.0), ((6, 0), 3.0), ((0, 6), -1.0)]);
        let p = newton_polygon(&s).unwrap();
        assert_eq!(p.principal_face, Face::Vertex { point: (2, 2) });
        assert_eq!(p.k0, 2);
        let r = adaptedness(&s, &p).unwrap();
        assert_eq!(r.index, (Q::new(1, 2), 1));
    }

    #[test]
    fn unbounded_face() {
        let s = poly(&[((0, 2), 4.0), ((3, 2), 1.0), ((1, 3), 1.0)]);
        let p = newton_polygon(&s).unwrap();
        assert!(matches!(p.principal_face, Face::UnboundedEdge { .. }));
        assert_eq!(p.k0, 1);
        let r = adaptedness(&s, &p).unwrap();
        assert_eq!(r.index, (Q::new(1, 2), 0));
    }

    #[test]
    fn perfect_square_not_adapted() {
        // (z₁² + 2z₂)²: edge (4,0)–(0,2), d = 4/3 < m = 2
        let s = poly(&[((4, 0), 1.0), ((2, 1), 4.0), ((0, 2), 4.0)]);
        let p = newton_polygon(&s).unwrap();
        assert_eq!(p.distance, Q::new(4, 3));
        match adaptedness(&s, &p) {
            Err(NewtonError::NotAdapted { kappa, m_pr, .. }) => {
                assert_eq!(m_pr, 2);
                assert_eq!(kappa, (Q::new(1, 4), Q::new(1, 2)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn max_order_examples() {
        assert_eq!(max_order_on_circle(&poly(&[((2, 2), 1.0)])).unwrap(), 2);
        assert_eq!(max_order_on_circle(&poly(&[((2, 0), 16.0), ((1, 2), -18.0)])).unwrap(), 1);
        assert_eq!(max_order_on_circle(&poly(&[((2, 0), 1.0), ((1, 1), -2.0), ((0, 2), 1.0)])).unwrap(), 2);
        assert!(max_order_on_circle(&poly(&[((2, 0), 1.0), ((1, 1), 1.0), ((0, 3), 1.0)])).is_err());
    }

    #[test]
    fn nondegeneracy() {
        let good = poly(&[((4, 0), 1.0), ((2, 2), 2.0), ((0, 4), 1.0)]);
        assert!(nondegeneracy_check(&good, &newton_polygon(&good).unwrap(), 720).unwrap());
        let bad = poly(&[((4, 0), 1.0), ((2, 1), 4.0), ((0, 2), 4.0)]);
        assert!(!nondegeneracy_check(&bad, &newton_polygon(&bad).unwrap(), 720).unwrap());
    }
}
