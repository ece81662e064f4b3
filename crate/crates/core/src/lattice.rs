//! Uniform rectangular grids with a zero (Dirichlet) boundary layer.

use crate::exec::{for_each_chunk_mut, sum_range, Execution};

pub const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub lo: Vec<f64>,
    pub n: Vec<usize>,
    pub h: f64,
    strides: Vec<usize>,
    boundary: Vec<bool>,
}

impl Grid {
    pub fn new(lo: Vec<f64>, n: Vec<usize>, h: f64) -> Self {
        assert_eq!(lo.len(), n.len());
        assert!(n.iter().all(|&k| k >= 3), "each axis needs an interior point");
        let dims = n.len();
        let mut strides = vec![1; dims];
        for a in (0..dims.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * n[a + 1];
        }
        let len: usize = n.iter().product();
        let boundary = (0..len)
            .map(|i| (0..dims).any(|a| {
                let k = (i / strides[a]) % n[a];
                k == 0 || k == n[a] - 1
            }))
            .collect();
        Grid { lo, n, h, strides, boundary }
    }

    /// Smallest grid with nodes on `h`·ℤ covering `bounds` plus one boundary layer.
    pub fn covering(bounds: &[(f64, f64)], h: f64) -> Self {
        let mut lo = Vec::with_capacity(bounds.len());
        let mut n = Vec::with_capacity(bounds.len());
        for &(a, b) in bounds {
            let ka = (a / h).floor() as i64 - 1;
            let kb = (b / h).ceil() as i64 + 1;
            lo.push(ka as f64 * h);
            n.push((kb - ka + 1).max(3) as usize);
        }
        Grid::new(lo, n, h)
    }

    pub fn dims(&self) -> usize {
        self.n.len()
    }

    pub fn len(&self) -> usize {
        self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundary.is_empty()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }

    pub fn index(&self, i: usize, axis: usize) -> usize {
        (i / self.strides[axis]) % self.n[axis]
    }

    pub fn coord(&self, axis: usize, k: usize) -> f64 {
        self.lo[axis] + k as f64 * self.h
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        (0..self.dims()).map(|a| self.coord(a, self.index(i, a))).collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dims() as i32)
    }

    /// Values of `∏_a f(a, x_a)` on the grid, zero on the boundary layer.
    pub fn separable<F: Fn(usize, f64) -> f64>(&self, f: F) -> Vec<f64> {
        let factors: Vec<Vec<f64>> =
            (0..self.dims()).map(|a| (0..self.n[a]).map(|k| f(a, self.coord(a, k))).collect()).collect();
        (0..self.len())
            .map(|i| {
                if self.boundary[i] {
                    0.0
                } else {
                    (0..self.dims()).map(|a| factors[a][self.index(i, a)]).product()
                }
            })
            .collect()
    }

    pub fn sample<F: Fn(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len()).map(|i| if self.boundary[i] { 0.0 } else { f(&self.point(i)) }).collect()
    }

    /// `Σ u v` (no cell volume).
    pub fn dot(&self, u: &[f64], v: &[f64], exec: Execution) -> f64 {
        sum_range(exec, u.len(), |i| u[i] * v[i])
    }

    /// Largest magnitude on nodes adjacent to the boundary layer.
    pub fn edge_max(&self, u: &[f64]) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.len() {
            if self.boundary[i] {
                continue;
            }
            let near = (0..self.dims()).any(|a| {
                let k = self.index(i, a);
                k == 1 || k + 2 == self.n[a]
            });
            if near {
                m = m.max(u[i].abs());
            }
        }
        m
    }

    /// `[¼, ½, ¼]` along every axis; removes the grid-scale (Nyquist) mode.
    pub fn smooth(&self, u: &[f64]) -> Vec<f64> {
        let mut cur = u.to_vec();
        for a in 0..self.dims() {
            let s = self.strides[a];
            let prev = cur.clone();
            for (i, v) in cur.iter_mut().enumerate() {
                if !self.boundary[i] {
                    *v = 0.25 * prev[i - s] + 0.5 * prev[i] + 0.25 * prev[i + s];
                }
            }
        }
        cur
    }

    /// Multilinear interpolation at `x`; zero outside.
    pub fn interpolate(&self, u: &[f64], x: &[f64]) -> f64 {
        let dims = self.dims();
        let mut base = 0usize;
        let mut frac = vec![0.0; dims];
        for a in 0..dims {
            let s = (x[a] - self.lo[a]) / self.h;
            if s < 0.0 || s > (self.n[a] - 1) as f64 {
                return 0.0;
            }
            let k = (s.floor() as usize).min(self.n[a] - 2);
            frac[a] = s - k as f64;
            base += k * self.strides[a];
        }
        let mut total = 0.0;
        for corner in 0..(1usize << dims) {
            let mut w = 1.0;
            let mut idx = base;
            for (a, fa) in frac.iter().enumerate() {
                if corner >> a & 1 == 1 {
                    w *= fa;
                    idx += self.strides[a];
                } else {
                    w *= 1.0 - fa;
                }
            }
            if w != 0.0 {
                total += w * u[idx];
            }
        }
        total
    }

    /// Applies `f(global_index)` to every interior node of `out`, in parallel chunks;
    /// boundary nodes are set to zero.
    pub fn update_interior<F>(&self, exec: Execution, out: &mut [f64], f: F)
    where
        F: Fn(usize, f64) -> f64 + Sync + Send,
    {
        let boundary = &self.boundary;
        for_each_chunk_mut(exec, out, CHUNK, |c, chunk| {
            let base = c * CHUNK;
            for (j, slot) in chunk.iter_mut().enumerate() {
                let i = base + j;
                *slot = if boundary[i] { 0.0 } else { f(i, *slot) };
            }
        });
    }
}
