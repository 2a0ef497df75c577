#![allow(dead_code)]

use mz_euler::spectral::{SpectralField, WaveGrid, Wavevector};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn zero() -> C {
    C::new(0.0, 0.0)
}

fn in_band(k: Wavevector, b: i64) -> bool {
    k.iter().all(|&c| -b <= c && c < b)
}

fn solenoidal(k: Wavevector, v: [C; 3]) -> [C; 3] {
    let kf = k.map(|c| c as f64);
    let k2: f64 = kf.iter().map(|c| c * c).sum();
    if k2 == 0.0 {
        return [zero(); 3];
    }
    let kv = (v[0] * kf[0] + v[1] * kf[1] + v[2] * kf[2]) / k2;
    [v[0] - kv * kf[0], v[1] - kv * kf[1], v[2] - kv * kf[2]]
}

/// Random divergence-free field with `u(-k) = conj(u(k))`, nonzero only on
/// wavevectors inside `[-support, support-1]³` whose negation is also there.
pub fn random_field(grid: WaveGrid, support: usize, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = support as i64;
    let mut f = SpectralField::zeros(grid);
    for kx in -s..s {
        for ky in -s..s {
            for kz in -s..s {
                let k = [kx, ky, kz];
                let neg = [-kx, -ky, -kz];
                if !in_band(neg, s) || k == [0, 0, 0] || neg < k {
                    continue;
                }
                let v: [C; 3] = std::array::from_fn(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                let v = solenoidal(k, v);
                f.set(k, v);
                f.set(neg, v.map(|c| c.conj()));
            }
        }
    }
    f
}

/// `C_k(v, w) = -i A_k Σ_{p+q=k} (k·v_p) w_q` by explicit summation over the band.
pub fn direct_c(v: &SpectralField, w: &SpectralField) -> SpectralField {
    let grid = *v.grid();
    let modes: Vec<(Wavevector, [C; 3], [C; 3])> = grid
        .wavevectors()
        .map(|(i, k)| (k, v.at_index(i), w.at_index(i)))
        .collect();
    let nonzero_v: Vec<_> = modes.iter().filter(|m| m.1.iter().any(|c| c.norm() > 0.0)).collect();
    let mut out = SpectralField::zeros(grid);
    for (ik, k) in grid.wavevectors() {
        let mut acc = [zero(); 3];
        for (p, vp, _) in &nonzero_v {
            let q = [k[0] - p[0], k[1] - p[1], k[2] - p[2]];
            let Some(iq) = grid.index_of(q) else { continue };
            let kv = vp[0] * k[0] as f64 + vp[1] * k[1] as f64 + vp[2] * k[2] as f64;
            let wq = modes[iq].2;
            for c in 0..3 {
                acc[c] += kv * wq[c];
            }
        }
        let a = solenoidal(k, acc);
        out.set_index(ik, a.map(|c| C::new(c.im, -c.re)));
    }
    out
}

pub fn direct_d(v: &SpectralField, w: &SpectralField) -> SpectralField {
    let mut out = direct_c(v, w);
    out.add_scaled(1.0, &direct_c(w, v));
    out
}

/// Keep (`resolved = true`) or drop the modes inside `[-n, n-1]³`.
pub fn restrict(f: &SpectralField, n: usize, resolved: bool) -> SpectralField {
    let grid = *f.grid();
    let mut out = SpectralField::zeros(grid);
    for (i, k) in grid.wavevectors() {
        if in_band(k, n as i64) == resolved {
            out.set_index(i, f.at_index(i));
        }
    }
    out
}

pub fn max_abs(f: &SpectralField) -> f64 {
    f.coeffs().iter().fold(0.0, |m, c| m.max(c.norm()))
}

/// `max |a - b| / max |b|`, or the absolute difference when `b` vanishes.
pub fn rel_err(a: &SpectralField, b: &SpectralField) -> f64 {
    let diff = a
        .coeffs()
        .iter()
        .zip(b.coeffs())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
    let scale = max_abs(b);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Energy flux `Σ 2 Re(r_k · conj(u_k))`.
pub fn flux(r: &SpectralField, u: &SpectralField) -> f64 {
    r.coeffs().iter().zip(u.coeffs()).map(|(a, b)| 2.0 * (a * b.conj()).re).sum()
}
