//! FFT plumbing on the discrete torus (ℤ/N)^d.
//!
//! Two-dimensional spectra are held transposed: a forward transform runs the
//! rows, transposes, and runs the rows again without transposing back. Every
//! multiplier used here depends on ξ through the swap-symmetric ψ, so it can be
//! applied in either layout, and the inverse transform restores the original one.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::lattice::LatticeField;
use crate::symbol::axis_symbol;

pub struct TorusFft {
    n: usize,
    d: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

const ROWS_PER_TASK: usize = 16;

impl TorusFft {
    pub fn new(n: usize, d: usize) -> Self {
        assert!(n > 0 && (d == 1 || d == 2));
        let mut planner = FftPlanner::new();
        Self { n, d, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn rows(&self, plan: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
        let n = self.n;
        let scratch_len = plan.get_inplace_scratch_len();
        data.par_chunks_mut(n * ROWS_PER_TASK).for_each_init(
            || vec![Complex64::new(0.0, 0.0); scratch_len],
            |scratch, chunk| plan.process_with_scratch(chunk, scratch),
        );
    }

    /// Unnormalized forward DFT, Σ_x f(x) e^{−2πi k·x/N}.
    pub fn forward(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.len());
        self.rows(&self.fwd, data);
        if self.d == 2 {
            transpose_square(data, self.n);
            self.rows(&self.fwd, data);
        }
    }

    /// Unnormalized inverse DFT, Σ_k F(k) e^{+2πi k·x/N}.
    pub fn inverse(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.len());
        self.rows(&self.inv, data);
        if self.d == 2 {
            transpose_square(data, self.n);
            self.rows(&self.inv, data);
        }
    }

    pub fn one_dim_inverse(&self) -> &Arc<dyn Fft<f64>> {
        &self.inv
    }
}

/// Transforms of fields on the N×N torus (N even) that are even in each
/// coordinate. Only the quadrant [0, N/2]² is stored, as an M×M array with
/// M = N/2 + 1; each pass extends a row evenly to length N and keeps the first
/// M outputs. Spectra are held transposed, as for [`TorusFft`].
pub struct EvenTorusFft {
    n: usize,
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl EvenTorusFft {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2 && n % 2 == 0);
        let mut planner = FftPlanner::new();
        Self { n, m: n / 2 + 1, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored points per axis, N/2 + 1.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.m * self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    fn rows(&self, plan: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
        let (n, m) = (self.n, self.m);
        let scratch_len = plan.get_inplace_scratch_len();
        data.par_chunks_mut(m).for_each_init(
            || (vec![Complex64::new(0.0, 0.0); n], vec![Complex64::new(0.0, 0.0); scratch_len]),
            |(buf, scratch), row| {
                buf[..m].copy_from_slice(row);
                for k in m..n {
                    buf[k] = buf[n - k];
                }
                plan.process_with_scratch(buf, scratch);
                row.copy_from_slice(&buf[..m]);
            },
        );
    }

    /// Unnormalized forward DFT over the full torus, restricted to the quadrant.
    pub fn forward(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.len());
        self.rows(&self.fwd, data);
        transpose_square(data, self.m);
        self.rows(&self.fwd, data);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.len());
        self.rows(&self.inv, data);
        transpose_square(data, self.m);
        self.rows(&self.inv, data);
    }

    /// Number of torus points each stored index stands for along one axis.
    pub fn axis_weight(&self, i: usize) -> f64 {
        if i == 0 || 2 * i == self.n {
            1.0
        } else {
            2.0
        }
    }

    /// e^{itψ} on the stored quadrant of frequencies.
    pub fn multiplier(&self, gamma: f64, t: f64) -> Vec<Complex64> {
        let a = axis_table(self.n);
        let m = self.m;
        let mut out = vec![Complex64::new(0.0, 0.0); m * m];
        out.par_chunks_mut(m).enumerate().for_each(|(k1, row)| {
            for (k2, z) in row.iter_mut().enumerate() {
                let w = a[k1] + a[k2];
                let (s, c) = (t * w * (w + gamma)).sin_cos();
                *z = Complex64::new(c, s);
            }
        });
        out
    }

    /// Quadrant of an even box field. Requires N ≥ 2R + 1.
    pub fn embed(&self, field: &LatticeField) -> Vec<Complex64> {
        assert!(field.d == 2 && self.n > 2 * field.radius);
        let (m, r, side) = (self.m, field.radius, field.side());
        let mut out = vec![Complex64::new(0.0, 0.0); m * m];
        for i in 0..=r {
            for j in 0..=r {
                out[i * m + j] = field.values[(i + r) * side + (j + r)];
            }
        }
        out
    }

    /// The box of radius N/2 − 1, unfolded from the quadrant.
    pub fn extract(&self, data: &[Complex64]) -> LatticeField {
        let r = torus_radius(self.n);
        let side = 2 * r + 1;
        let mut values = Vec::with_capacity(side * side);
        for i in 0..side {
            let a = (i as i64 - r as i64).unsigned_abs() as usize;
            for j in 0..side {
                let b = (j as i64 - r as i64).unsigned_abs() as usize;
                values.push(data[a * self.m + b]);
            }
        }
        LatticeField { d: 2, radius: r, values }
    }
}

/// Whether a two-dimensional box field is even in each coordinate.
pub fn is_even_field(f: &LatticeField) -> bool {
    if f.d != 2 {
        return false;
    }
    let (r, side) = (f.radius, f.side());
    (0..side).all(|i| {
        (0..side).all(|j| {
            let v = f.values[i * side + j];
            v == f.values[(2 * r - i) * side + j] && v == f.values[i * side + (2 * r - j)]
        })
    })
}

/// In-place transpose of an n×n row-major matrix, blocked for cache reuse.
pub fn transpose_square(data: &mut [Complex64], n: usize) {
    const B: usize = 32;
    for bi in (0..n).step_by(B) {
        for bj in (bi..n).step_by(B) {
            for i in bi..(bi + B).min(n) {
                let jstart = if bi == bj { i + 1 } else { bj };
                for j in jstart..(bj + B).min(n) {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

/// 2 − 2cos(2πk/N) for k = 0..N.
pub fn axis_table(n: usize) -> Vec<f64> {
    (0..n).map(|k| axis_symbol(2.0 * PI * k as f64 / n as f64)).collect()
}

/// The multiplier e^{itψ(ξ_k)} on the full N^d frequency grid.
pub fn dispersion_multiplier(n: usize, d: usize, gamma: f64, t: f64) -> Vec<Complex64> {
    let a = axis_table(n);
    let cis = |w: f64| {
        let (s, c) = (t * w * (w + gamma)).sin_cos();
        Complex64::new(c, s)
    };
    if d == 1 {
        return a.iter().map(|&w| cis(w)).collect();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(k1, row)| {
        // a is symmetric under k ↦ n − k
        for k2 in 0..=n / 2 {
            row[k2] = cis(a[k1] + a[k2]);
        }
        for k2 in n / 2 + 1..n {
            row[k2] = row[n - k2];
        }
    });
    out
}

/// Place a box field onto the torus, x ↦ x mod N. Requires N ≥ 2R+1.
pub fn embed(field: &LatticeField, n: usize) -> Vec<Complex64> {
    assert!(n > 2 * field.radius);
    let mut out = vec![Complex64::new(0.0, 0.0); n.pow(field.d as u32)];
    let r = field.radius as i64;
    let wrap = |x: i64| x.rem_euclid(n as i64) as usize;
    match field.d {
        1 => {
            for (i, z) in field.values.iter().enumerate() {
                out[wrap(i as i64 - r)] = *z;
            }
        }
        _ => {
            let side = field.side();
            for i in 0..side {
                for j in 0..side {
                    out[wrap(i as i64 - r) * n + wrap(j as i64 - r)] = field.values[i * side + j];
                }
            }
        }
    }
    out
}

/// Largest box radius that fits on the torus without wrapping: ⌊(N−1)/2⌋.
/// For even N the layer x_j = −N/2 is left out.
pub fn torus_radius(n: usize) -> usize {
    (n - 1) / 2
}

/// Read the box of radius ⌊(N−1)/2⌋ back from a torus array.
pub fn extract(data: &[Complex64], n: usize, d: usize) -> LatticeField {
    let r = torus_radius(n);
    let side = 2 * r + 1;
    let wrap = |x: i64| x.rem_euclid(n as i64) as usize;
    let values = match d {
        1 => (0..side).map(|i| data[wrap(i as i64 - r as i64)]).collect(),
        _ => {
            let mut v = Vec::with_capacity(side * side);
            for i in 0..side {
                let row = wrap(i as i64 - r as i64) * n;
                for j in 0..side {
                    v.push(data[row + wrap(j as i64 - r as i64)]);
                }
            }
            v
        }
    };
    LatticeField { d, radius: r, values }
}

/// Smallest 2^a 3^b 5^c ≥ `min`.
pub fn smooth_size(min: usize) -> usize {
    let mut best = usize::MAX;
    let mut p2 = 1usize;
    while p2 < 2 * min.max(1) {
        let mut p3 = p2;
        while p3 < 2 * min.max(1) {
            let mut p5 = p3;
            while p5 < min {
                p5 *= 5;
            }
            best = best.min(p5);
            p3 *= 3;
        }
        p2 *= 2;
    }
    best
}

/// Smallest even 2^a 3^b 5^c ≥ `min`.
pub fn smooth_even_size(min: usize) -> usize {
    2 * smooth_size(min.div_ceil(2))
}
