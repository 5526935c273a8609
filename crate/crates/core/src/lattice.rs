//! Complex fields on a finite box [−R, R]^d of the lattice.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("dimension must be 1 or 2, got {0}")]
    InvalidDimension(usize),
    #[error("expected {expected} values for radius {radius}, got {got}")]
    LengthMismatch { expected: usize, radius: usize, got: usize },
    #[error("non-finite entry at index {0}")]
    NonFinite(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeField {
    pub d: usize,
    pub radius: usize,
    /// Row-major, first coordinate slowest, x_j = index_j − R.
    pub values: Vec<Complex64>,
}

impl LatticeField {
    pub fn new(d: usize, radius: usize, values: Vec<Complex64>) -> Result<Self, FieldError> {
        if d != 1 && d != 2 {
            return Err(FieldError::InvalidDimension(d));
        }
        let expected = (2 * radius + 1).pow(d as u32);
        if values.len() != expected {
            return Err(FieldError::LengthMismatch { expected, radius, got: values.len() });
        }
        if let Some(i) = values.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(FieldError::NonFinite(i));
        }
        Ok(Self { d, radius, values })
    }

    pub fn zeros(d: usize, radius: usize) -> Self {
        Self { d, radius, values: vec![Complex64::new(0.0, 0.0); (2 * radius + 1).pow(d as u32)] }
    }

    /// Kronecker delta at the origin, scaled by `amplitude`.
    pub fn delta(d: usize, amplitude: f64) -> Self {
        Self { d, radius: 0, values: vec![Complex64::new(amplitude, 0.0)] }
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn index_of(&self, x: &[i64]) -> Option<usize> {
        if x.len() != self.d {
            return None;
        }
        let r = self.radius as i64;
        let mut idx = 0usize;
        for &xj in x {
            if xj < -r || xj > r {
                return None;
            }
            idx = idx * self.side() + (xj + r) as usize;
        }
        Some(idx)
    }

    pub fn point_of(&self, mut idx: usize) -> Vec<i64> {
        let side = self.side();
        let mut x = vec![0i64; self.d];
        for j in (0..self.d).rev() {
            x[j] = (idx % side) as i64 - self.radius as i64;
            idx /= side;
        }
        x
    }

    pub fn get(&self, x: &[i64]) -> Option<Complex64> {
        self.index_of(x).map(|i| self.values[i])
    }

    pub fn set(&mut self, x: &[i64], value: Complex64) -> bool {
        match self.index_of(x) {
            Some(i) => {
                self.values[i] = value;
                true
            }
            None => false,
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// ℓ^r norm; r = ∞ gives the sup norm.
    pub fn lr_norm(&self, r: f64) -> f64 {
        lr_norm(&self.values, r)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { d: self.d, radius: self.radius, values: self.values.iter().map(|z| z * c).collect() }
    }

    pub fn conj(&self) -> Self {
        Self { d: self.d, radius: self.radius, values: self.values.iter().map(|z| z.conj()).collect() }
    }

    /// Largest modulus and where it sits.
    pub fn argmax(&self) -> (Vec<i64>, f64) {
        let (i, m) =
            self.values
                .iter()
                .enumerate()
                .fold((0, -1.0), |(bi, bm), (i, z)| if z.norm() > bm { (i, z.norm()) } else { (bi, bm) });
        (self.point_of(i), m.max(0.0))
    }

    /// Values as [re, im, re, im, ...].
    pub fn to_interleaved(&self) -> Vec<f64> {
        self.values.iter().flat_map(|z| [z.re, z.im]).collect()
    }
}

pub fn lr_norm(values: &[Complex64], r: f64) -> f64 {
    if r.is_infinite() {
        return values.iter().fold(0.0, |m, z| m.max(z.norm()));
    }
    if r == 2.0 {
        return values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    }
    values.iter().map(|z| z.norm().powf(r)).sum::<f64>().powf(1.0 / r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_round_trip() {
        let f = LatticeField::zeros(2, 3);
        for i in 0..f.values.len() {
            assert_eq!(f.index_of(&f.point_of(i)), Some(i));
        }
        assert_eq!(f.index_of(&[4, 0]), None);
        assert_eq!(f.point_of(0), vec![-3, -3]);
    }

    #[test]
    fn rejects_bad_length() {
        assert!(LatticeField::new(2, 1, vec![Complex64::new(0.0, 0.0); 8]).is_err());
        assert!(LatticeField::new(1, 1, vec![Complex64::new(f64::NAN, 0.0); 3]).is_err());
    }

    #[test]
    fn norms() {
        let mut f = LatticeField::zeros(1, 2);
        f.set(&[1], Complex64::new(3.0, 4.0));
        f.set(&[-2], Complex64::new(0.0, 1.0));
        assert!((f.l2_norm() - 26f64.sqrt()).abs() < 1e-15);
        assert_eq!(f.sup_norm(), 5.0);
        assert!((f.lr_norm(1.0) - 6.0).abs() < 1e-15);
        assert_eq!(f.argmax(), (vec![1], 5.0));
    }
}
