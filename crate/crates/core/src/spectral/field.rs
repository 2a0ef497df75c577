use num_complex::Complex64;

use super::grid::{WaveGrid, Wavevector};
use crate::error::{Error, Result};

/// Complex Fourier coefficients of a 3-component velocity field.
///
/// Storage is component-major: all x coefficients, then y, then z. Within a
/// component, wavevectors are ordered lexicographically over wrapped axis
/// indices (`0..M` then `-M..0`), with `kz` varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: WaveGrid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: WaveGrid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); 3 * grid.mode_count()],
        }
    }

    pub fn from_fn(grid: WaveGrid, mut f: impl FnMut(Wavevector) -> [Complex64; 3]) -> Self {
        let mut out = Self::zeros(grid);
        let count = grid.mode_count();
        for i in 0..count {
            let v = f(grid.wavevector(i));
            for (c, val) in v.into_iter().enumerate() {
                out.coeffs[c * count + i] = val;
            }
        }
        out
    }

    pub fn from_coeffs(grid: WaveGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 3 * grid.mode_count() {
            return Err(Error::InvalidGrid(format!(
                "expected {} coefficients, got {}",
                3 * grid.mode_count(),
                coeffs.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    #[inline]
    pub fn grid(&self) -> &WaveGrid {
        &self.grid
    }

    /// Replace the grid metadata while keeping the same band (e.g. to set the resolved set).
    pub fn with_grid(mut self, grid: WaveGrid) -> Result<Self> {
        if grid.half_width() != self.grid.half_width() {
            return Err(Error::GridMismatch {
                left: self.grid.half_width(),
                right: grid.half_width(),
            });
        }
        self.grid = grid;
        Ok(self)
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    #[inline]
    pub fn component(&self, c: usize) -> &[Complex64] {
        let n = self.grid.mode_count();
        &self.coeffs[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let n = self.grid.mode_count();
        &mut self.coeffs[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn at_index(&self, index: usize) -> [Complex64; 3] {
        let n = self.grid.mode_count();
        [
            self.coeffs[index],
            self.coeffs[n + index],
            self.coeffs[2 * n + index],
        ]
    }

    #[inline]
    pub fn set_index(&mut self, index: usize, v: [Complex64; 3]) {
        let n = self.grid.mode_count();
        self.coeffs[index] = v[0];
        self.coeffs[n + index] = v[1];
        self.coeffs[2 * n + index] = v[2];
    }

    /// Coefficient vector at `k`, or `None` if `k` is outside the band.
    pub fn get(&self, k: Wavevector) -> Option<[Complex64; 3]> {
        self.grid.index_of(k).map(|i| self.at_index(i))
    }

    /// Set the coefficient vector at `k`. Returns `false` if `k` is outside the band.
    pub fn set(&mut self, k: Wavevector, v: [Complex64; 3]) -> bool {
        match self.grid.index_of(k) {
            Some(i) => {
                self.set_index(i, v);
                true
            }
            None => false,
        }
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid.half_width() != other.grid.half_width() {
            return Err(Error::GridMismatch {
                left: self.grid.half_width(),
                right: other.grid.half_width(),
            });
        }
        Ok(())
    }

    pub fn scale(&mut self, a: f64) {
        self.coeffs.iter_mut().for_each(|c| *c *= a);
    }

    pub fn scaled(mut self, a: f64) -> Self {
        self.scale(a);
        self
    }

    /// `self += a * other`. Panics if the bands differ.
    pub fn add_scaled(&mut self, a: f64, other: &Self) {
        assert_eq!(self.coeffs.len(), other.coeffs.len(), "grid mismatch");
        self.coeffs
            .iter_mut()
            .zip(&other.coeffs)
            .for_each(|(x, y)| *x += y * a);
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// Largest componentwise difference modulus against `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Mode-sum energy `Σ_k |u_k|²` over the whole band.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Largest `|u(-k) - conj(u(k))|` over wavevectors whose negation is in the band.
    pub fn reality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, k) in self.grid.wavevectors() {
            if let Some(j) = self.grid.index_of([-k[0], -k[1], -k[2]]) {
                let a = self.at_index(i);
                let b = self.at_index(j);
                for c in 0..3 {
                    worst = worst.max((b[c] - a[c].conj()).norm());
                }
            }
        }
        worst
    }

    /// Largest `|k · u_k|` over the band.
    pub fn divergence_defect(&self) -> f64 {
        self.grid
            .wavevectors()
            .map(|(i, k)| {
                let u = self.at_index(i);
                (u[0] * k[0] as f64 + u[1] * k[1] as f64 + u[2] * k[2] as f64).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Copy onto another band: coefficients shared by both bands are kept,
    /// new modes are zero, modes outside the target band are dropped.
    pub fn embed(&self, target: WaveGrid) -> Self {
        let mut out = Self::zeros(target);
        let src = self.grid;
        let shared = src.half_width().min(target.half_width()) as i64;
        let src_count = src.mode_count();
        let dst_count = target.mode_count();
        for kx in -shared..shared {
            for ky in -shared..shared {
                for kz in -shared..shared {
                    let k = [kx, ky, kz];
                    let (Some(i), Some(j)) = (src.index_of(k), target.index_of(k)) else {
                        continue;
                    };
                    for c in 0..3 {
                        out.coeffs[c * dst_count + j] = self.coeffs[c * src_count + i];
                    }
                }
            }
        }
        out
    }
}
