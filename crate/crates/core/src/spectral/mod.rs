//! Fourier-space velocity fields on periodic boxes, the incompressibility
//! projector, and the dealiased triad convolutions `C` and `D`.
//!
//! With `A_k = I - k kᵀ/|k|²`,
//!
//! ```text
//! C_k(v, w) = -i Σ_{p+q=k} (k·v_p) A_k w_q        D(v, w) = C(v, w) + C(w, v)
//! ```
//!
//! where `p`, `q` and `k` all range over the band `[-M, M-1]³`. The sum is
//! evaluated as `-i A_k k·(v ⊗ w)_k` with the product formed on a zero-padded
//! grid, which is exact for any `v`, solenoidal or not.

mod field;
mod grid;
mod transform;

use num_complex::Complex64;

pub use field::SpectralField;
pub use grid::{fft_friendly_size, make_wavegrid, WaveGrid, Wavevector};
pub use transform::{Combination, PhysicalField, SpectralEngine, SymTerm, SymmetricTensor};

use crate::error::{Error, Result};

/// The Taylor-Green vortex
/// `u = (sin x cos y cos z, -cos x sin y cos z, 0)` in Fourier form.
///
/// Nonzero only at the eight corners `(±1, ±1, ±1)`, so the band needs `M ≥ 2`.
pub fn taylor_green(grid: WaveGrid) -> Result<SpectralField> {
    if grid.half_width() < 2 {
        return Err(Error::InvalidGrid(
            "Taylor-Green modes (±1, ±1, ±1) need half-width >= 2".into(),
        ));
    }
    let mut field = SpectralField::zeros(grid);
    for sx in [-1i64, 1] {
        for sy in [-1i64, 1] {
            for sz in [-1i64, 1] {
                // sin(a) = (e^{ia} - e^{-ia}) / 2i, cos(a) = (e^{ia} + e^{-ia}) / 2
                let ux = Complex64::new(0.0, -(sx as f64) / 8.0);
                let uy = Complex64::new(0.0, sy as f64 / 8.0);
                field.set([sx, sy, sz], [ux, uy, Complex64::new(0.0, 0.0)]);
            }
        }
    }
    Ok(field)
}

/// Apply `A_k = I - k kᵀ/|k|²` mode by mode; the `k = 0` coefficient is zeroed.
pub fn project_incompressible(field: &SpectralField) -> SpectralField {
    let grid = *field.grid();
    let mut out = SpectralField::zeros(grid);
    for (i, k) in grid.wavevectors() {
        out.set_index(i, project_mode(k, field.at_index(i)));
    }
    out
}

#[inline]
pub(crate) fn project_mode(k: Wavevector, u: [Complex64; 3]) -> [Complex64; 3] {
    let kf = k.map(|c| c as f64);
    let k2 = kf[0] * kf[0] + kf[1] * kf[1] + kf[2] * kf[2];
    if k2 == 0.0 {
        return [Complex64::new(0.0, 0.0); 3];
    }
    let ku = (u[0] * kf[0] + u[1] * kf[1] + u[2] * kf[2]) / k2;
    [u[0] - ku * kf[0], u[1] - ku * kf[1], u[2] - ku * kf[2]]
}

/// Dealiased `C(v, w)` over the full band.
pub fn convolve(v: &SpectralField, w: &SpectralField) -> Result<SpectralField> {
    v.check_same_grid(w)?;
    let grid = *v.grid();
    let m = grid.half_width();
    let mut engine = SpectralEngine::new(grid);
    let pv = engine.to_physical(v, m);
    if v.coeffs() == w.coeffs() {
        return Ok(engine.symmetric_divergence(&[SymTerm::new(0.5, &[(1.0, &pv)], &[(1.0, &pv)])], m));
    }
    let pw = engine.to_physical(w, m);
    Ok(engine.convolve_pair(&pv, &pw, m))
}

/// Dealiased `D(v, w) = C(v, w) + C(w, v)`; symmetric in its arguments by construction.
pub fn dconvolve(v: &SpectralField, w: &SpectralField) -> Result<SpectralField> {
    v.check_same_grid(w)?;
    let grid = *v.grid();
    let m = grid.half_width();
    let mut engine = SpectralEngine::new(grid);
    let pv = engine.to_physical(v, m);
    let pw = engine.to_physical(w, m);
    Ok(engine.symmetric_divergence(&[SymTerm::new(1.0, &[(1.0, &pv)], &[(1.0, &pw)])], m))
}

/// Keep modes in the resolved set `F = [-N, N-1]³`, zero the rest.
pub fn restrict_hat(field: &SpectralField) -> Result<SpectralField> {
    restrict(field, true)
}

/// Keep modes outside the resolved set, zero those in `F`.
pub fn restrict_tilde(field: &SpectralField) -> Result<SpectralField> {
    restrict(field, false)
}

fn restrict(field: &SpectralField, keep_resolved: bool) -> Result<SpectralField> {
    let grid = *field.grid();
    let n = grid.resolved_half_width().ok_or(Error::ResolvedSetMissing)?;
    let mut out = field.clone();
    let count = grid.mode_count();
    let zero = Complex64::new(0.0, 0.0);
    for (i, k) in grid.wavevectors() {
        let resolved = k.iter().all(|&c| grid::in_band(c, n));
        if resolved != keep_resolved {
            for c in 0..3 {
                out.coeffs_mut()[c * count + i] = zero;
            }
        }
    }
    Ok(out)
}

/// Vorticity coefficients `i k × u_k`.
pub fn curl(field: &SpectralField) -> SpectralField {
    let grid = *field.grid();
    let mut out = SpectralField::zeros(grid);
    for (i, k) in grid.wavevectors() {
        let u = field.at_index(i);
        let kf = k.map(|c| c as f64);
        let cross = [
            u[2] * kf[1] - u[1] * kf[2],
            u[0] * kf[2] - u[2] * kf[0],
            u[1] * kf[0] - u[0] * kf[1],
        ];
        out.set_index(i, cross.map(|c| Complex64::new(-c.im, c.re)));
    }
    out
}


#[cfg(test)]
mod tests {
    use super::testing::*;
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn taylor_green_coefficients() {
        let grid = make_wavegrid(2, None).unwrap();
        let tg = taylor_green(grid).unwrap();
        let corner = tg.get([1, 1, 1]).unwrap();
        assert_eq!(corner, [c(0.0, -0.125), c(0.0, 0.125), c(0.0, 0.0)]);
        let nonzero = grid
            .wavevectors()
            .filter(|&(i, _)| tg.at_index(i).iter().any(|x| x.norm() > 0.0))
            .count();
        assert_eq!(nonzero, 8);
        assert!((tg.energy() - 0.25).abs() < 1e-15);
        assert_eq!(tg.divergence_defect(), 0.0);
        assert_eq!(tg.reality_defect(), 0.0);
        assert!(tg.component(2).iter().all(|x| x.norm() == 0.0));
        assert!(taylor_green(make_wavegrid(1, None).unwrap()).is_err());
    }

    #[test]
    fn taylor_green_matches_physical_formula() {
        let grid = make_wavegrid(2, None).unwrap();
        let tg = taylor_green(grid).unwrap();
        let x = [0.3, 1.1, -2.0];
        let mut u = [c(0.0, 0.0); 3];
        for (i, k) in grid.wavevectors() {
            let ph = Complex64::from_polar(1.0, k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2]);
            let v = tg.at_index(i);
            for j in 0..3 {
                u[j] += v[j] * ph;
            }
        }
        let expect = [
            x[0].sin() * x[1].cos() * x[2].cos(),
            -x[0].cos() * x[1].sin() * x[2].cos(),
            0.0,
        ];
        for j in 0..3 {
            assert!((u[j] - c(expect[j], 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn projector_cases() {
        let grid = make_wavegrid(2, None).unwrap();
        let mut f = SpectralField::zeros(grid);
        f.set([1, 0, 0], [c(1.0, 2.0), c(3.0, 0.0), c(0.0, -1.0)]);
        f.set([1, 1, 0], [c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        f.set([0, 0, 0], [c(5.0, 0.0); 3]);
        let p = project_incompressible(&f);
        assert_eq!(p.get([1, 0, 0]).unwrap(), [c(0.0, 0.0), c(3.0, 0.0), c(0.0, -1.0)]);
        assert!(p.get([1, 1, 0]).unwrap().iter().all(|x| x.norm() < 1e-15));
        assert_eq!(p.get([0, 0, 0]).unwrap(), [c(0.0, 0.0); 3]);

        let r = random_field(grid, 3);
        assert!(project_incompressible(&r).max_abs_diff(&r) < 1e-13);
        let raw = SpectralField::from_fn(grid, |k| {
            let s = (k[0] + 2 * k[1] + 3 * k[2]) as f64;
            [c(s.sin(), 1.0), c(s.cos(), -0.5), c(0.3, s)]
        });
        let once = project_incompressible(&raw);
        let twice = project_incompressible(&once);
        assert!(twice.max_abs_diff(&once) < 1e-13);
        assert!(once.divergence_defect() <= 1e-12 * once.max_abs());
    }

    #[test]
    fn convolution_matches_direct_sum() {
        for m in [2usize, 3] {
            let grid = make_wavegrid(m as i64, None).unwrap();
            let v = random_field(grid, 10 + m as u64);
            let w = random_field(grid, 20 + m as u64);
            let fast = convolve(&v, &w).unwrap();
            let slow = direct_convolve(&v, &w);
            assert!(fast.max_abs_diff(&slow) <= 1e-12 * slow.max_abs());
            let fast = convolve(&v, &v).unwrap();
            let slow = direct_convolve(&v, &v);
            assert!(fast.max_abs_diff(&slow) <= 1e-12 * slow.max_abs());
        }
    }

    #[test]
    fn convolution_with_zero_vanishes() {
        let grid = make_wavegrid(2, None).unwrap();
        let v = random_field(grid, 1);
        let z = SpectralField::zeros(grid);
        assert_eq!(convolve(&v, &z).unwrap().max_abs(), 0.0);
        assert_eq!(convolve(&z, &v).unwrap().max_abs(), 0.0);
        assert_eq!(dconvolve(&v, &z).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn convolution_output_properties() {
        let grid = make_wavegrid(3, None).unwrap();
        let v = random_field(grid, 5);
        let w = random_field(grid, 6);
        let out = convolve(&v, &w).unwrap();
        let scale = out.max_abs();
        assert!(out.divergence_defect() <= 1e-12 * scale);
        assert!(out.reality_defect() <= 1e-13 * scale.max(1.0));
        assert_eq!(out.get([0, 0, 0]).unwrap(), [c(0.0, 0.0); 3]);
        let d = dconvolve(&v, &w).unwrap();
        assert!(d.reality_defect() <= 1e-13 * d.max_abs().max(1.0));
    }

    #[test]
    fn dconvolve_is_symmetric_and_doubles_square() {
        let grid = make_wavegrid(2, None).unwrap();
        let v = random_field(grid, 7);
        let w = random_field(grid, 8);
        let a = dconvolve(&v, &w).unwrap();
        let b = dconvolve(&w, &v).unwrap();
        assert!(a.max_abs_diff(&b) <= 1e-14 * a.max_abs());
        let vv = dconvolve(&v, &v).unwrap();
        let cv = convolve(&v, &v).unwrap().scaled(2.0);
        assert!(vv.max_abs_diff(&cv) <= 1e-13 * cv.max_abs());
        let cvw = convolve(&v, &w).unwrap();
        let cwv = convolve(&w, &v).unwrap();
        let mut sum = cvw.clone();
        sum.add_scaled(1.0, &cwv);
        assert!(a.max_abs_diff(&sum) <= 1e-13 * sum.max_abs());
    }

    #[test]
    fn taylor_green_nonlinearity_conserves_energy() {
        let grid = make_wavegrid(2, None).unwrap();
        let tg = taylor_green(grid).unwrap();
        let r = convolve(&tg, &tg).unwrap();
        let flux: f64 = grid
            .wavevectors()
            .map(|(i, _)| {
                let a = r.at_index(i);
                let u = tg.at_index(i);
                (0..3).map(|c| 2.0 * (a[c] * u[c].conj()).re).sum::<f64>()
            })
            .sum();
        assert!(flux.abs() <= 1e-12);
        assert!(r.max_abs() > 1e-3);
    }

    #[test]
    fn restriction_partitions_the_band() {
        let grid = make_wavegrid(4, Some(2)).unwrap();
        let x = random_field(grid, 9);
        let hat = restrict_hat(&x).unwrap();
        let tilde = restrict_tilde(&x).unwrap();
        let mut sum = hat.clone();
        sum.add_scaled(1.0, &tilde);
        assert_eq!(sum, x);
        assert_eq!(restrict_hat(&tilde).unwrap().max_abs(), 0.0);
        let tg = taylor_green(grid).unwrap();
        assert_eq!(restrict_tilde(&tg).unwrap().max_abs(), 0.0);
        assert!(restrict_hat(&x.clone().with_grid(grid.without_resolved()).unwrap()).is_err());
    }

    #[test]
    fn curl_of_single_mode() {
        let grid = make_wavegrid(2, None).unwrap();
        let mut f = SpectralField::zeros(grid);
        f.set([1, 0, 0], [c(0.0, 0.0), c(0.5, -0.25), c(0.0, 0.0)]);
        let w = curl(&f);
        let v = w.get([1, 0, 0]).unwrap();
        // i k × u with k = x̂, u = c ŷ gives i c ẑ
        assert_eq!(v[2], c(0.25, 0.5));
        assert_eq!(v[0], c(0.0, 0.0));
    }
}
