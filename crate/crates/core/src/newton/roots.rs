//! Real roots of univariate polynomials with multiplicities.

use num_complex::Complex64;

/// Horner evaluation of Σ c_k z^k.
fn eval(c: &[f64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, &a)| a * k as f64).collect()
}

/// All complex roots of Σ c_k z^k (c_n ≠ 0) by Aberth iteration.
pub fn complex_roots(c: &[f64]) -> Vec<Complex64> {
    let n = c.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let lead = c[n];
    let monic: Vec<f64> = c.iter().map(|a| a / lead).collect();
    let dc = derivative(&monic);
    let bound = 1.0 + monic[..n].iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(0.5 * bound, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4))
        .collect();
    for _ in 0..2000 {
        let mut biggest = 0.0f64;
        for k in 0..n {
            let p = eval(&monic, z[k]);
            if p == Complex64::new(0.0, 0.0) {
                continue;
            }
            let ratio = p / eval(&dc, z[k]);
            let repulse: Complex64 = (0..n).filter(|&j| j != k).map(|j| 1.0 / (z[k] - z[j])).sum();
            let w = ratio / (1.0 - ratio * repulse);
            if w.is_finite() {
                z[k] -= w;
                biggest = biggest.max(w.norm() / (1.0 + z[k].norm()));
            } else {
                z[k] += Complex64::new(1e-7, 1e-7);
                biggest = 1.0;
            }
        }
        if biggest < 1e-15 {
            break;
        }
    }
    z
}

/// Largest m such that p, p', …, p^{(m−1)} all vanish at x within a relative tolerance.
fn vanishing_order(c: &[f64], x: f64, tol: f64) -> usize {
    let mut poly = c.to_vec();
    let mut m = 0;
    while !poly.is_empty() {
        let scale: f64 = poly.iter().enumerate().map(|(k, a)| a.abs() * x.abs().powi(k as i32)).sum::<f64>();
        let v = eval(&poly, Complex64::new(x, 0.0)).re;
        if scale == 0.0 || v.abs() > tol * scale {
            break;
        }
        m += 1;
        poly = derivative(&poly);
    }
    m
}

/// Distinct real roots with multiplicities, for coefficients c_0..c_n.
///
/// The exact root 0 is read off from trailing zero coefficients; other roots
/// come from clustered Aberth roots whose multiplicity is confirmed by
/// derivative tests.
pub fn real_root_multiplicities(c: &[f64]) -> Vec<(f64, usize)> {
    let mut hi = c.len();
    while hi > 0 && c[hi - 1] == 0.0 {
        hi -= 1;
    }
    if hi == 0 {
        return Vec::new();
    }
    let c = &c[..hi];
    let zeros = c.iter().take_while(|a| **a == 0.0).count();
    let rest = &c[zeros..];
    let mut out = Vec::new();
    if zeros > 0 {
        out.push((0.0, zeros));
    }
    let roots = complex_roots(rest);
    let mut used = vec![false; roots.len()];
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut cluster = vec![roots[i]];
        for j in i + 1..roots.len() {
            if !used[j] && (roots[j] - roots[i]).norm() < 1e-4 * (1.0 + roots[i].norm()) {
                used[j] = true;
                cluster.push(roots[j]);
            }
        }
        let centre: Complex64 = cluster.iter().sum::<Complex64>() / cluster.len() as f64;
        if centre.im.abs() > 1e-6 * (1.0 + centre.norm()) {
            continue;
        }
        let m = vanishing_order(rest, centre.re, 1e-7).min(cluster.len()).max(1);
        out.push((centre.re, m));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_roots(roots: &[f64], lead: f64) -> Vec<f64> {
        let mut c = vec![lead];
        for &r in roots {
            let mut next = vec![0.0; c.len() + 1];
            for (k, a) in c.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= r * a;
            }
            c = next;
        }
        c
    }

    #[test]
    fn simple_and_multiple_roots() {
        let c = from_roots(&[1.0, 1.0, -2.0, 0.5, 0.5, 0.5], 3.0);
        let r = real_root_multiplicities(&c);
        let mults: Vec<usize> = r.iter().map(|x| x.1).collect();
        assert_eq!(mults, vec![1, 3, 2]);
        assert!((r[0].0 + 2.0).abs() < 1e-9);
    }

    #[test]
    fn no_real_roots() {
        // (1 + s²)²
        assert!(real_root_multiplicities(&[1.0, 0.0, 2.0, 0.0, 1.0]).is_empty());
    }

    #[test]
    fn zero_roots_counted_exactly() {
        // s³(s − 2)
        let r = real_root_multiplicities(&[0.0, 0.0, 0.0, -2.0, 1.0]);
        assert_eq!(r, vec![(0.0, 3), (r[1].0, 1)]);
        assert!((r[1].0 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn irrational_double_root() {
        let b = 2f64.sqrt();
        // (b s² + 1.3)² has no real roots; (b s² − 1.3)² has two double roots
        let c = [1.69, 0.0, -2.6 * b, 0.0, b * b];
        let r = real_root_multiplicities(&c);
        assert_eq!(r.len(), 2);
        assert!(r.iter().all(|x| x.1 == 2));
    }
}
