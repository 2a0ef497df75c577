//! Zero-padded 3D transforms between a band of Fourier modes and a padded
//! physical grid, plus the pointwise products and projected divergence that
//! make up the dealiased convolution.
//!
//! Transforms are pruned: only lines that can hold nonzero data are
//! transformed on the way in, and only lines that feed the requested output
//! band are transformed on the way out. Each pass runs batched 1D FFTs along
//! the contiguous axis and then rotates the array so the next axis becomes
//! contiguous. Physical data therefore lives in `[y][z][x]` order; callers
//! only ever combine physical arrays pointwise, so the layout is opaque.
//!
//! A Hermitian engine assumes conjugate-symmetric spectra. Its physical
//! fields are real, the x pass is a real transform over `kx >= 0`, and the
//! unpaired `-B` planes of a band are ignored on input and zero on output.

use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use super::field::SpectralField;
use super::grid::{band_wavenumbers, wrap_index, WaveGrid};

type C = Complex64;

const TILE: usize = 16;

/// Velocity-like field sampled on the padded physical grid.
///
/// Real and imaginary parts are stored separately; fields from a Hermitian
/// engine have no imaginary part.
#[derive(Debug, Clone)]
pub struct PhysicalField {
    re: [Vec<f64>; 3],
    im: Option<[Vec<f64>; 3]>,
}

impl PhysicalField {
    pub fn zeros(points: usize, real: bool) -> Self {
        let zero = || std::array::from_fn(|_| vec![0.0; points]);
        Self {
            re: zero(),
            im: (!real).then(zero),
        }
    }

    pub fn len(&self) -> usize {
        self.re[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.re[0].is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_none()
    }

    #[inline]
    pub fn re(&self, c: usize) -> &[f64] {
        &self.re[c]
    }

    #[inline]
    pub fn im(&self, c: usize) -> Option<&[f64]> {
        self.im.as_ref().map(|im| im[c].as_slice())
    }

    #[inline]
    pub fn value(&self, c: usize, p: usize) -> C {
        C::new(self.re[c][p], self.im.as_ref().map_or(0.0, |im| im[c][p]))
    }

    /// `Σ w_i f_i` over fields sampled on the same grid.
    pub fn combine(terms: &[(f64, &PhysicalField)]) -> Self {
        let len = terms[0].1.len();
        let real = terms.iter().all(|(_, f)| f.is_real());
        let mut out = Self::zeros(len, real);
        for &(w, f) in terms {
            assert_eq!(f.len(), len);
            for c in 0..3 {
                out.re[c].iter_mut().zip(&f.re[c]).for_each(|(d, s)| *d += s * w);
                if let (Some(dst), Some(src)) = (out.im.as_mut(), f.im.as_ref()) {
                    dst[c].iter_mut().zip(&src[c]).for_each(|(d, s)| *d += s * w);
                }
            }
        }
        out
    }

    /// Largest pointwise Euclidean norm `sqrt(|f_x|² + |f_y|² + |f_z|²)`.
    pub fn max_norm(&self) -> f64 {
        (0..self.len())
            .map(|p| (0..3).map(|c| self.value(c, p).norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    fn into_buffers(self) -> impl Iterator<Item = Vec<f64>> {
        self.re.into_iter().chain(self.im.into_iter().flatten())
    }
}

/// Symmetric rank-2 tensor on the padded grid, components `xx, xy, xz, yy, yz, zz`.
#[derive(Debug, Clone)]
pub struct SymmetricTensor {
    re: [Vec<f64>; 6],
    im: Option<[Vec<f64>; 6]>,
}

#[inline]
fn sym_slot(j: usize, l: usize) -> usize {
    match (j.min(l), j.max(l)) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        _ => 5,
    }
}

/// Linear combination `Σ c_i f_i` of physical fields.
pub type Combination<'a> = &'a [(f64, &'a PhysicalField)];

/// `weight · (a ⊗ b + b ⊗ a)` with `a`, `b` given as combinations.
///
/// Its projected divergence is `weight · D(a, b)`; with `a = b` and weight ½ it is `C(a, a)`.
#[derive(Clone, Copy)]
pub struct SymTerm<'a> {
    pub weight: f64,
    pub left: Combination<'a>,
    pub right: Combination<'a>,
}

impl<'a> SymTerm<'a> {
    pub fn new(weight: f64, left: Combination<'a>, right: Combination<'a>) -> Self {
        Self { weight, left, right }
    }

    fn is_real(&self) -> bool {
        self.left.iter().chain(self.right).all(|(_, f)| f.is_real())
    }
}

const CHUNK: usize = 256;

/// One chunk of a vector-valued combination, split into real and imaginary parts.
struct Split {
    re: [[f64; CHUNK]; 3],
    im: [[f64; CHUNK]; 3],
    real: bool,
}

impl Split {
    fn new() -> Self {
        Self {
            re: [[0.0; CHUNK]; 3],
            im: [[0.0; CHUNK]; 3],
            real: true,
        }
    }

    fn gather(&mut self, comb: Combination<'_>, p0: usize, len: usize) {
        self.real = comb.iter().all(|(_, f)| f.is_real());
        for c in 0..3 {
            let re = &mut self.re[c][..len];
            re.fill(0.0);
            for &(w, f) in comb {
                for (r, s) in re.iter_mut().zip(&f.re[c][p0..p0 + len]) {
                    *r += s * w;
                }
            }
            if self.real {
                continue;
            }
            let im = &mut self.im[c][..len];
            im.fill(0.0);
            for &(w, f) in comb {
                if let Some(src) = &f.im {
                    for (i, s) in im.iter_mut().zip(&src[c][p0..p0 + len]) {
                        *i += s * w;
                    }
                }
            }
        }
    }
}

/// `acc += w (a_j b_l + a_l b_j)` for one tensor slot of real chunks.
#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn sym_product_real(acc: &mut [f64; CHUNK], w: f64, a: &Split, b: &Split, j: usize, l: usize, len: usize) {
    let (aj, al, bj, bl) = (&a.re[j][..len], &a.re[l][..len], &b.re[j][..len], &b.re[l][..len]);
    let s = &mut acc[..len];
    for p in 0..len {
        s[p] += w * (aj[p] * bl[p] + al[p] * bj[p]);
    }
}

/// Complex version of [`sym_product_real`].
#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn sym_product(
    acc_re: &mut [f64; CHUNK],
    acc_im: &mut [f64; CHUNK],
    w: f64,
    a: &Split,
    b: &Split,
    j: usize,
    l: usize,
    len: usize,
) {
    let (ajr, aji, alr, ali) = (&a.re[j][..len], &a.im[j][..len], &a.re[l][..len], &a.im[l][..len]);
    let (bjr, bji, blr, bli) = (&b.re[j][..len], &b.im[j][..len], &b.re[l][..len], &b.im[l][..len]);
    let (sr, si) = (&mut acc_re[..len], &mut acc_im[..len]);
    for p in 0..len {
        let re = ajr[p] * blr[p] - aji[p] * bli[p] + alr[p] * bjr[p] - ali[p] * bji[p];
        let im = ajr[p] * bli[p] + aji[p] * blr[p] + alr[p] * bji[p] + ali[p] * bjr[p];
        sr[p] += w * re;
        si[p] += w * im;
    }
}

const SLOTS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

impl SymmetricTensor {
    pub fn zeros(points: usize, real: bool) -> Self {
        let zero = || std::array::from_fn(|_| vec![0.0; points]);
        Self {
            re: zero(),
            im: (!real).then(zero),
        }
    }

    pub fn len(&self) -> usize {
        self.re[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.re[0].is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_none()
    }

    /// `S += w (v ⊗ u + u ⊗ v)`, the tensor whose projected divergence is `D(v, u)`.
    pub fn add_sym(&mut self, w: f64, v: &PhysicalField, u: &PhysicalField) {
        self.accumulate(&[SymTerm::new(w, &[(1.0, v)], &[(1.0, u)])], false);
    }

    /// `S += w (v ⊗ v)`, the tensor whose projected divergence is `C(v, v)`.
    pub fn add_square(&mut self, w: f64, v: &PhysicalField) {
        self.add_sym(0.5 * w, v, v);
    }

    /// Add (or with `overwrite`, assign) the sum of `terms` in one cache-blocked pass.
    ///
    /// # Panics
    /// If a complex input meets a real tensor, or sizes disagree.
    pub fn accumulate(&mut self, terms: &[SymTerm<'_>], overwrite: bool) {
        let len = self.len();
        for t in terms {
            assert!(!t.left.is_empty() && !t.right.is_empty(), "empty combination");
            for (_, f) in t.left.iter().chain(t.right) {
                assert_eq!(f.len(), len, "physical field size mismatch");
            }
            assert!(t.is_real() || !self.is_real(), "complex input for a real tensor");
        }
        let mut a = Box::new(Split::new());
        let mut b = Box::new(Split::new());
        let mut acc_re = Box::new([[0.0f64; CHUNK]; 6]);
        let mut acc_im = Box::new([[0.0f64; CHUNK]; 6]);
        for p0 in (0..len).step_by(CHUNK) {
            let n = CHUNK.min(len - p0);
            for s in acc_re.iter_mut().chain(acc_im.iter_mut()) {
                s[..n].fill(0.0);
            }
            for t in terms {
                a.gather(t.left, p0, n);
                let same = std::ptr::eq(t.left, t.right);
                if !same {
                    b.gather(t.right, p0, n);
                }
                let rb: &Split = if same { &a } else { &b };
                // diagonal slots count the product twice: (a ⊗ b + b ⊗ a)_jj = 2 a_j b_j
                if a.real && rb.real {
                    for (slot, &(j, l)) in SLOTS.iter().enumerate() {
                        sym_product_real(&mut acc_re[slot], t.weight, &a, rb, j, l, n);
                    }
                } else {
                    for (slot, &(j, l)) in SLOTS.iter().enumerate() {
                        sym_product(&mut acc_re[slot], &mut acc_im[slot], t.weight, &a, rb, j, l, n);
                    }
                }
            }
            let parts = std::iter::once((&mut self.re, &acc_re)).chain(self.im.as_mut().map(|im| (im, &acc_im)));
            for (dst, acc) in parts {
                for (slot, d) in dst.iter_mut().enumerate() {
                    let d = &mut d[p0..p0 + n];
                    if overwrite {
                        d.copy_from_slice(&acc[slot][..n]);
                    } else {
                        d.iter_mut().zip(&acc[slot][..n]).for_each(|(x, y)| *x += y);
                    }
                }
            }
        }
    }
}

/// Cached FFT plans and staging buffers for one grid.
///
/// Not shareable across threads while in use; create one per evaluation context.
pub struct SpectralEngine {
    grid: WaveGrid,
    hermitian: bool,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    scratch: Vec<C>,
    stage_a: Vec<C>,
    stage_b: Vec<C>,
    spec: Vec<Vec<C>>,
    pool: Vec<Vec<f64>>,
    transforms: u64,
}

impl std::fmt::Debug for SpectralEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralEngine")
            .field("grid", &self.grid)
            .field("hermitian", &self.hermitian)
            .field("transforms", &self.transforms)
            .finish()
    }
}

/// Axis bookkeeping for a band of half-width `b` inside a grid.
///
/// Entries follow [`band_wavenumbers`]: `0..b` first, then `-b..0`, so the
/// first `b` entries are the non-negative wavenumbers and entry `b` is `-b`.
struct Band {
    /// Storage index in the spectral cube along one axis.
    store: Vec<usize>,
    /// Position along a padded physical axis.
    pos: Vec<usize>,
}

impl Band {
    fn new(b: usize, half_width: usize, padded: usize) -> Self {
        let ks = band_wavenumbers(b);
        Self {
            store: ks
                .iter()
                .map(|&k| wrap_index(k, half_width).expect("band exceeds grid"))
                .collect(),
            pos: ks.iter().map(|&k| k.rem_euclid(padded as i64) as usize).collect(),
        }
    }

    fn len(&self) -> usize {
        self.store.len()
    }
}

impl SpectralEngine {
    /// Engine for arbitrary complex spectra.
    pub fn new(grid: WaveGrid) -> Self {
        Self::build(grid, false)
    }

    /// Engine for conjugate-symmetric spectra with real physical fields.
    pub fn hermitian(grid: WaveGrid) -> Self {
        Self::build(grid, true)
    }

    fn build(grid: WaveGrid, hermitian: bool) -> Self {
        let l = grid.padded_points();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(l);
        let inv = planner.plan_fft_inverse(l);
        let mut real_planner = RealFftPlanner::new();
        let r2c = real_planner.plan_fft_forward(l);
        let c2r = real_planner.plan_fft_inverse(l);
        let scratch_len = [
            fwd.get_inplace_scratch_len(),
            inv.get_inplace_scratch_len(),
            r2c.get_scratch_len(),
            c2r.get_scratch_len(),
        ]
        .into_iter()
        .max()
        .unwrap_or(0);
        Self {
            grid,
            hermitian,
            fwd,
            inv,
            r2c,
            c2r,
            scratch: vec![C::new(0.0, 0.0); scratch_len],
            stage_a: Vec::new(),
            stage_b: Vec::new(),
            spec: Vec::new(),
            pool: Vec::new(),
            transforms: 0,
        }
    }

    #[inline]
    pub fn grid(&self) -> &WaveGrid {
        &self.grid
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Number of physical grid points, `padded_points³`.
    #[inline]
    pub fn points(&self) -> usize {
        let l = self.grid.padded_points();
        l * l * l
    }

    /// Scalar 3D transforms performed so far.
    pub fn transform_count(&self) -> u64 {
        self.transforms
    }

    fn check_band(&self, band: usize) {
        assert!(
            band >= 1 && band <= self.grid.half_width(),
            "band {band} outside grid half-width {}",
            self.grid.half_width()
        );
    }

    fn buffer(&mut self) -> Vec<f64> {
        let mut v = self.pool.pop().unwrap_or_default();
        v.clear();
        v.resize(self.points(), 0.0);
        v
    }

    /// Synthesize `u(x) = Σ_k u_k e^{ik·x}` on the padded grid.
    ///
    /// Only coefficients with every component of `k` in `[-band, band-1]` are
    /// read; the caller guarantees the rest are zero.
    pub fn to_physical(&mut self, field: &SpectralField, band: usize) -> PhysicalField {
        assert_eq!(field.grid().half_width(), self.grid.half_width());
        let re: [Vec<f64>; 3] = std::array::from_fn(|_| self.buffer());
        let mut out = PhysicalField { re, im: None };
        if self.hermitian {
            for c in 0..3 {
                let mut dst = std::mem::take(&mut out.re[c]);
                self.inverse_real(field.component(c), band, &mut dst);
                out.re[c] = dst;
            }
        } else {
            let mut im: [Vec<f64>; 3] = std::array::from_fn(|_| self.buffer());
            let mut line = Vec::new();
            for (c, (re, im)) in out.re.iter_mut().zip(im.iter_mut()).enumerate() {
                self.inverse_scalar(field.component(c), band, &mut line);
                for ((r, i), z) in re.iter_mut().zip(im.iter_mut()).zip(&line) {
                    *r = z.re;
                    *i = z.im;
                }
            }
            out.im = Some(im);
        }
        out
    }

    /// Hand a physical field's storage back for reuse by later transforms.
    pub fn recycle(&mut self, field: PhysicalField) {
        self.pool.extend(field.into_buffers());
    }

    /// Projected divergence `-i A_k Σ_j k_j S_jl(k)` restricted to the band
    /// `[-out_band, out_band-1]³` (zero elsewhere). Consumes the tensor's storage.
    pub fn project_divergence(&mut self, tensor: SymmetricTensor, out_band: usize) -> SpectralField {
        assert_eq!(tensor.len(), self.points());
        let count = self.grid.mode_count();
        let mut spec = std::mem::take(&mut self.spec);
        spec.resize_with(6, Vec::new);
        let SymmetricTensor { re, im } = tensor;
        match im {
            Some(im) if !self.hermitian || im.iter().any(|v| v.iter().any(|x| *x != 0.0)) => {
                let mut buf = std::mem::take(&mut self.stage_b);
                let mut line = Vec::new();
                for ((s, r), i) in spec.iter_mut().zip(re).zip(im) {
                    s.resize(count, C::new(0.0, 0.0));
                    line.clear();
                    line.extend(r.iter().zip(&i).map(|(&a, &b)| C::new(a, b)));
                    std::mem::swap(&mut line, &mut buf);
                    self.forward_scalar(&mut buf, out_band, s);
                    std::mem::swap(&mut line, &mut buf);
                    self.pool.push(r);
                    self.pool.push(i);
                }
                self.stage_b = buf;
            }
            im => {
                for (s, mut r) in spec.iter_mut().zip(re) {
                    s.resize(count, C::new(0.0, 0.0));
                    if self.hermitian {
                        self.forward_real(&mut r, out_band, s);
                    } else {
                        let mut z: Vec<C> = r.iter().map(|&a| C::new(a, 0.0)).collect();
                        self.forward_scalar(&mut z, out_band, s);
                    }
                    self.pool.push(r);
                }
                self.pool.extend(im.into_iter().flatten());
            }
        }
        let mut out = SpectralField::zeros(self.grid);
        self.assemble_projected(&spec, sym_slot, out_band, &mut out);
        self.spec = spec;
        out
    }

    /// Projected divergence of `Σ terms`, i.e. `Σ w D(a, b)`, restricted to `out_band`.
    pub fn symmetric_divergence(&mut self, terms: &[SymTerm<'_>], out_band: usize) -> SpectralField {
        let real = terms.iter().all(SymTerm::is_real);
        let re = std::array::from_fn(|_| self.buffer());
        let im = (!real).then(|| std::array::from_fn(|_| self.buffer()));
        let mut tensor = SymmetricTensor { re, im };
        tensor.accumulate(terms, true);
        self.project_divergence(tensor, out_band)
    }

    /// `C(v, w)` for a general (non-symmetric) pair, via the full 9-component tensor `v ⊗ w`.
    pub fn convolve_pair(&mut self, v: &PhysicalField, w: &PhysicalField, out_band: usize) -> SpectralField {
        let count = self.grid.mode_count();
        let points = self.points();
        let mut spec: Vec<Vec<C>> = (0..9).map(|_| vec![C::new(0.0, 0.0); count]).collect();
        let mut prod = vec![C::new(0.0, 0.0); points];
        for j in 0..3 {
            for l in 0..3 {
                for (p, d) in prod.iter_mut().enumerate() {
                    *d = v.value(j, p) * w.value(l, p);
                }
                self.forward_scalar(&mut prod, out_band, &mut spec[3 * j + l]);
            }
        }
        let mut out = SpectralField::zeros(self.grid);
        self.assemble_projected(&spec, |j, l| 3 * j + l, out_band, &mut out);
        out
    }

    fn assemble_projected(
        &self,
        spec: &[Vec<C>],
        slot: impl Fn(usize, usize) -> usize,
        out_band: usize,
        out: &mut SpectralField,
    ) {
        let count = self.grid.mode_count();
        let n = self.grid.modes_per_dim();
        let band = Band::new(out_band, self.grid.half_width(), self.grid.padded_points());
        let ks = band_wavenumbers(out_band);
        let coeffs = out.coeffs_mut();
        for (bx, &ix) in band.store.iter().enumerate() {
            for (by, &iy) in band.store.iter().enumerate() {
                for (bz, &iz) in band.store.iter().enumerate() {
                    let k = [ks[bx] as f64, ks[by] as f64, ks[bz] as f64];
                    let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                    if k2 == 0.0 {
                        continue;
                    }
                    let idx = (ix * n + iy) * n + iz;
                    let mut a = [C::new(0.0, 0.0); 3];
                    for (l, al) in a.iter_mut().enumerate() {
                        for (j, kj) in k.iter().enumerate() {
                            *al += spec[slot(j, l)][idx] * kj;
                        }
                    }
                    let ka = (a[0] * k[0] + a[1] * k[1] + a[2] * k[2]) / k2;
                    for l in 0..3 {
                        let p = a[l] - ka * k[l];
                        // -i * p
                        coeffs[l * count + idx] = C::new(p.im, -p.re);
                    }
                }
            }
        }
    }

    fn inverse_scalar(&mut self, spec: &[C], band: usize, out: &mut Vec<C>) {
        self.check_band(band);
        self.transforms += 1;
        let n = self.grid.modes_per_dim();
        let l = self.grid.padded_points();
        let b = Band::new(band, self.grid.half_width(), l);
        let nb = b.len();

        // [bx][by][pz]
        let a_len = nb * nb * l;
        self.stage_a.clear();
        self.stage_a.resize(a_len, C::new(0.0, 0.0));
        for bx in 0..nb {
            for by in 0..nb {
                let line = &mut self.stage_a[(bx * nb + by) * l..][..l];
                let base = (b.store[bx] * n + b.store[by]) * n;
                for bz in 0..nb {
                    line[b.pos[bz]] = spec[base + b.store[bz]];
                }
            }
        }
        self.inv.process_with_scratch(&mut self.stage_a, &mut self.scratch);

        // [pz][bx][py]
        let b_len = l * nb * l;
        self.stage_b.clear();
        self.stage_b.resize(b_len, C::new(0.0, 0.0));
        let row_off: Vec<usize> = (0..nb * nb)
            .map(|r| (r / nb) * l + b.pos[r % nb])
            .collect();
        let col_off: Vec<usize> = (0..l).map(|c| c * nb * l).collect();
        let identity: Vec<usize> = (0..l).collect();
        transpose(&self.stage_a, l, &row_off, &identity, &col_off, &mut self.stage_b, 1.0);
        self.inv.process_with_scratch(&mut self.stage_b, &mut self.scratch);

        // [py][pz][px]
        out.clear();
        out.resize(l * l * l, C::new(0.0, 0.0));
        let row_off: Vec<usize> = (0..l * nb).map(|r| (r / nb) * l + b.pos[r % nb]).collect();
        let col_off: Vec<usize> = (0..l).map(|c| c * l * l).collect();
        transpose(&self.stage_b, l, &row_off, &identity, &col_off, out, 1.0);
        self.inv.process_with_scratch(out, &mut self.scratch);
    }

    /// Real synthesis of a conjugate-symmetric band; only `kx >= 0` is read.
    fn inverse_real(&mut self, spec: &[C], band: usize, out: &mut [f64]) {
        self.check_band(band);
        self.transforms += 1;
        let n = self.grid.modes_per_dim();
        let l = self.grid.padded_points();
        let h = l / 2 + 1;
        let b = Band::new(band, self.grid.half_width(), l);
        let nb = b.len();
        let nh = band;

        // [bx >= 0][by][pz], skipping the unpaired -band planes
        self.stage_a.clear();
        self.stage_a.resize(nh * nb * l, C::new(0.0, 0.0));
        for bx in 0..nh {
            for by in (0..nb).filter(|&i| i != band) {
                let line = &mut self.stage_a[(bx * nb + by) * l..][..l];
                let base = (b.store[bx] * n + b.store[by]) * n;
                for bz in (0..nb).filter(|&i| i != band) {
                    line[b.pos[bz]] = spec[base + b.store[bz]];
                }
            }
        }
        self.inv.process_with_scratch(&mut self.stage_a, &mut self.scratch);

        // [pz][bx][py]
        self.stage_b.clear();
        self.stage_b.resize(l * nh * l, C::new(0.0, 0.0));
        let row_off: Vec<usize> = (0..nh * nb).map(|r| (r / nb) * l + b.pos[r % nb]).collect();
        let col_off: Vec<usize> = (0..l).map(|c| c * nh * l).collect();
        let identity: Vec<usize> = (0..l).collect();
        transpose(&self.stage_a, l, &row_off, &identity, &col_off, &mut self.stage_b, 1.0);
        self.inv.process_with_scratch(&mut self.stage_b, &mut self.scratch);

        // [py][pz][kx half spectrum]
        self.stage_a.clear();
        self.stage_a.resize(l * l * h, C::new(0.0, 0.0));
        let row_off: Vec<usize> = (0..l * nh).map(|r| (r / nh) * h + r % nh).collect();
        let col_off: Vec<usize> = (0..l).map(|c| c * l * h).collect();
        transpose(&self.stage_b, l, &row_off, &identity, &col_off, &mut self.stage_a, 1.0);
        for (src, dst) in self.stage_a.chunks_exact_mut(h).zip(out.chunks_exact_mut(l)) {
            src[0].im = 0.0;
            if l.is_multiple_of(2) {
                src[h - 1].im = 0.0;
            }
            self.c2r
                .process_with_scratch(src, dst, &mut self.scratch)
                .expect("half spectrum has real end points");
        }
    }

    /// Analyze physical data (destroyed) into `spec`, keeping only the band.
    fn forward_scalar(&mut self, phys: &mut [C], band: usize, spec: &mut [C]) {
        self.check_band(band);
        self.transforms += 1;
        let n = self.grid.modes_per_dim();
        let l = self.grid.padded_points();
        let b = Band::new(band, self.grid.half_width(), l);
        let nb = b.len();

        // phys is [py][pz][px]; transform along x
        self.fwd.process_with_scratch(phys, &mut self.scratch);

        // -> [bx][py][pz]
        self.stage_b.clear();
        self.stage_b.resize(nb * l * l, C::new(0.0, 0.0));
        let identity: Vec<usize> = (0..l * l).collect();
        let col_off: Vec<usize> = (0..nb).map(|c| c * l * l).collect();
        transpose(phys, l, &identity, &b.pos, &col_off, &mut self.stage_b, 1.0);
        self.fwd.process_with_scratch(&mut self.stage_b, &mut self.scratch);

        // -> [bz][bx][py]
        self.stage_a.clear();
        self.stage_a.resize(nb * nb * l, C::new(0.0, 0.0));
        let col_off: Vec<usize> = (0..nb).map(|c| c * nb * l).collect();
        transpose(&self.stage_b, l, &identity[..nb * l], &b.pos, &col_off, &mut self.stage_a, 1.0);
        self.fwd.process_with_scratch(&mut self.stage_a, &mut self.scratch);

        // -> spectral [ix][iy][iz]
        spec.iter_mut().for_each(|c| *c = C::new(0.0, 0.0));
        let row_off: Vec<usize> = (0..nb * nb)
            .map(|r| b.store[r % nb] * n * n + b.store[r / nb])
            .collect();
        let col_off: Vec<usize> = (0..nb).map(|c| b.store[c] * n).collect();
        let norm = 1.0 / (l * l * l) as f64;
        transpose(&self.stage_a, l, &row_off, &b.pos, &col_off, spec, norm);
    }

    /// Real analysis (input destroyed): `kx >= 0` is transformed, `kx < 0` is
    /// filled by conjugate symmetry, and the unpaired planes are left zero.
    fn forward_real(&mut self, phys: &mut [f64], band: usize, spec: &mut [C]) {
        self.check_band(band);
        self.transforms += 1;
        let n = self.grid.modes_per_dim();
        let l = self.grid.padded_points();
        let h = l / 2 + 1;
        let b = Band::new(band, self.grid.half_width(), l);
        let nb = b.len();
        let nh = band;

        // [py][pz][kx half spectrum]
        self.stage_a.clear();
        self.stage_a.resize(l * l * h, C::new(0.0, 0.0));
        for (src, dst) in phys.chunks_exact_mut(l).zip(self.stage_a.chunks_exact_mut(h)) {
            self.r2c
                .process_with_scratch(src, dst, &mut self.scratch)
                .expect("buffer lengths match the plan");
        }

        // -> [bx >= 0][py][pz]
        self.stage_b.clear();
        self.stage_b.resize(nh * l * l, C::new(0.0, 0.0));
        let identity: Vec<usize> = (0..l * l).collect();
        let col_off: Vec<usize> = (0..nh).map(|c| c * l * l).collect();
        transpose(&self.stage_a, h, &identity, &b.pos[..nh], &col_off, &mut self.stage_b, 1.0);
        self.fwd.process_with_scratch(&mut self.stage_b, &mut self.scratch);

        // -> [bz][bx][py]
        self.stage_a.clear();
        self.stage_a.resize(nb * nh * l, C::new(0.0, 0.0));
        let col_off: Vec<usize> = (0..nb).map(|c| c * nh * l).collect();
        transpose(&self.stage_b, l, &identity[..nh * l], &b.pos, &col_off, &mut self.stage_a, 1.0);
        self.fwd.process_with_scratch(&mut self.stage_a, &mut self.scratch);

        // -> spectral [ix >= 0][iy][iz]
        spec.iter_mut().for_each(|c| *c = C::new(0.0, 0.0));
        let row_off: Vec<usize> = (0..nb * nh)
            .map(|r| b.store[r % nh] * n * n + b.store[r / nh])
            .collect();
        let col_off: Vec<usize> = (0..nb).map(|c| b.store[c] * n).collect();
        let norm = 1.0 / (l * l * l) as f64;
        transpose(&self.stage_a, l, &row_off, &b.pos, &col_off, spec, norm);

        // unpaired planes, then kx < 0 by symmetry
        let unpaired = band;
        for bx in 0..nh {
            for by in 0..nb {
                for bz in 0..nb {
                    if by == unpaired || bz == unpaired {
                        spec[(b.store[bx] * n + b.store[by]) * n + b.store[bz]] = C::new(0.0, 0.0);
                    }
                }
            }
        }
        let mirror = |i: usize| if i == 0 { 0 } else { nb - i };
        for bx in nh + 1..nb {
            for by in (0..nb).filter(|&i| i != unpaired) {
                for bz in (0..nb).filter(|&i| i != unpaired) {
                    let src = (b.store[mirror(bx)] * n + b.store[mirror(by)]) * n + b.store[mirror(bz)];
                    spec[(b.store[bx] * n + b.store[by]) * n + b.store[bz]] = spec[src].conj();
                }
            }
        }
    }
}

/// `dst[col_off[c] + row_off[r]] = scale * src[r * row_len + col_pos[c]]`, tiled.
fn transpose(
    src: &[C],
    row_len: usize,
    row_off: &[usize],
    col_pos: &[usize],
    col_off: &[usize],
    dst: &mut [C],
    scale: f64,
) {
    let rows = row_off.len();
    let cols = col_pos.len();
    debug_assert_eq!(cols, col_off.len());
    for r0 in (0..rows).step_by(TILE) {
        let r1 = (r0 + TILE).min(rows);
        for c0 in (0..cols).step_by(TILE) {
            let c1 = (c0 + TILE).min(cols);
            for c in c0..c1 {
                let co = col_off[c];
                let cp = col_pos[c];
                for r in r0..r1 {
                    dst[co + row_off[r]] = src[r * row_len + cp] * scale;
                }
            }
        }
    }
}
