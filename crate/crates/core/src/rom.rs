//! Markov and memory terms of the renormalized reduced model for Euler.
//!
//! Writing `H = Ĉ(û, û)` and `T = C̃(û, û)`, with hat and tilde the restrictions
//! to the resolved set `F = [-N, N-1]³` and to its complement inside the
//! working band `[-2N, 2N-1]³`:
//!
//! ```text
//! R⁰ = H
//! R¹ = D̂(û, T)
//! R² = D̂(û, D̃(H - T, û)) - D̂(T, T)
//! R³ = D̂(û, D̃(û, D̂(û, H - 2T) + D̃(û, T - 2H)) + D̃(T, T - H) + D̃(H, H))
//!      + 3 D̂(T, D̃(û, T - H))
//! R⁴ = D̂(û, D̃(û, D̂(H, H - 2T) + 3D̂(T, T) + D̃(H, 2T - 3H) - D̃(T, T)
//!                  + D̂(û, D̂(û, H - 3T) + D̃(û, 3T - 5H))
//!                  + D̃(û, D̂(û, 5T - 3H) + D̃(û, 3H - T)))
//!          + D̃(H, D̂(û, 3H - 5T) + D̃(û, T - 3H))
//!          + D̃(T, D̂(û, 3T - H) + D̃(û, 5H - 3T)))
//!      - 4 D̂(T, D̃(H, H - T) + D̃(T, T) + D̃(û, D̂(û, H - 2T) + D̃(û, T - 2H)))
//!      - 3 D̂(D̃(û, H), D̃(û, H - 2T)) - 3 D̂(D̃(û, T), D̃(û, T))
//! ```
//!
//! Every term is evaluated on the working grid of half-width `M = 2N`.
//! Shared inner convolutions are computed once, linear combinations are taken
//! in physical space, and the outermost hatted divergences of all requested
//! orders are folded into a single transform.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Combination, PhysicalField, SpectralEngine, SpectralField, SymTerm, WaveGrid};

/// Highest memory order implemented.
pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ansatz {
    /// `α_i(t) = a_i t⁻ⁱ`: the weight of `Rⁱ` is the constant `a_i`.
    Algebraic,
    /// `α_i(t) = a'_i`: the weight of `Rⁱ` is `a'_i tⁱ`.
    Constant,
}

impl Ansatz {
    pub fn as_str(&self) -> &'static str {
        match self {
            Ansatz::Algebraic => "algebraic",
            Ansatz::Constant => "constant",
        }
    }
}

impl fmt::Display for Ansatz {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Ansatz {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "algebraic" => Ok(Ansatz::Algebraic),
            "constant" => Ok(Ansatz::Constant),
            other => Err(Error::InvalidConfig(format!(
                "unknown ansatz {other:?} (expected algebraic or constant)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RomConfig {
    pub resolved_half_width: usize,
    pub order: usize,
    pub ansatz: Ansatz,
    /// `a_1..a_n` (algebraic) or `a'_1..a'_n` (constant).
    pub coeffs: Vec<f64>,
}

impl RomConfig {
    pub fn new(resolved_half_width: usize, order: usize, ansatz: Ansatz, coeffs: Vec<f64>) -> Result<Self> {
        let cfg = Self {
            resolved_half_width,
            order,
            ansatz,
            coeffs,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The Markov model: no memory terms.
    pub fn markov(resolved_half_width: usize) -> Self {
        Self {
            resolved_half_width,
            order: 0,
            ansatz: Ansatz::Algebraic,
            coeffs: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolved_half_width == 0 {
            return Err(Error::InvalidConfig("resolved half-width must be at least 1".into()));
        }
        if self.order > MAX_ORDER {
            return Err(Error::InvalidConfig(format!(
                "order {} exceeds the maximum of {MAX_ORDER}",
                self.order
            )));
        }
        if self.coeffs.len() != self.order {
            return Err(Error::InvalidConfig(format!(
                "order {} needs {} coefficients, got {}",
                self.order,
                self.order,
                self.coeffs.len()
            )));
        }
        if let Some(c) = self.coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig(format!("non-finite coefficient {c}")));
        }
        Ok(())
    }

    /// Effective weights `α_i(t) tⁱ` of `R¹..Rⁿ` at time `t`.
    pub fn weights(&self, t: f64) -> Result<Vec<f64>> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeTime(t));
        }
        self.validate()?;
        Ok(match self.ansatz {
            Ansatz::Algebraic => self.coeffs.clone(),
            Ansatz::Constant => self
                .coeffs
                .iter()
                .zip(1..)
                .map(|(a, i)| a * t.powi(i))
                .collect(),
        })
    }
}

/// How the resolved set and the working band treat their lowest wavenumber plane.
///
/// On a box `[-N, N-1]` the plane at `-N` has no conjugate partner, so a real
/// velocity field cannot populate it and triad sums over the box lose the
/// symmetry that makes the Euler nonlinearity energy conserving.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Truncation {
    /// Resolved set `[-(N-1), N-1]³` inside the working band `[-(2N-1), 2N-1]³`:
    /// the unpaired planes are held at zero. Conserves energy and reality.
    #[default]
    Symmetric,
    /// Resolved set `[-N, N-1]³` inside the working band `[-2N, 2N-1]³`, every mode kept.
    FullBox,
}

impl Truncation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Truncation::Symmetric => "symmetric",
            Truncation::FullBox => "full-box",
        }
    }

    /// Lowest wavenumber kept along an axis of half-width `n`.
    pub fn lowest(&self, n: usize) -> i64 {
        match self {
            Truncation::Symmetric => -(n as i64) + 1,
            Truncation::FullBox => -(n as i64),
        }
    }

    /// Whether `k` is kept on a band of half-width `n`.
    pub fn keeps(&self, k: [i64; 3], n: usize) -> bool {
        let lo = self.lowest(n);
        k.iter().all(|&c| lo <= c && c < n as i64)
    }
}

impl fmt::Display for Truncation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Truncation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" => Ok(Truncation::Symmetric),
            "full-box" => Ok(Truncation::FullBox),
            other => Err(Error::InvalidConfig(format!(
                "unknown truncation {other:?} (expected symmetric or full-box)"
            ))),
        }
    }
}

/// Storage-order mask of wavevectors kept on a band of half-width `n`.
/// Symmetric truncation keeps only conjugate pairs, so real transforms suffice
/// for conjugate-symmetric inputs.
fn engine_for(grid: WaveGrid, truncation: Truncation) -> SpectralEngine {
    match truncation {
        Truncation::Symmetric => SpectralEngine::hermitian(grid),
        Truncation::FullBox => SpectralEngine::new(grid),
    }
}

fn band_mask(grid: &WaveGrid, n: usize, truncation: Truncation) -> Vec<bool> {
    grid.wavevectors().map(|(_, k)| truncation.keeps(k, n)).collect()
}

/// Evaluates memory terms for one resolution, caching FFT plans and buffers.
pub struct RomOperator {
    resolved: usize,
    truncation: Truncation,
    work: WaveGrid,
    compact: WaveGrid,
    hat_mask: Vec<bool>,
    tilde_mask: Vec<bool>,
    engine: SpectralEngine,
}

impl fmt::Debug for RomOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RomOperator")
            .field("resolved", &self.resolved)
            .field("truncation", &self.truncation)
            .field("work", &self.work)
            .finish()
    }
}

enum Output<'a> {
    Separate,
    Combined(&'a [f64]),
}

impl RomOperator {
    /// Operator with the default [`Truncation::Symmetric`].
    pub fn new(resolved_half_width: usize) -> Result<Self> {
        Self::with_truncation(resolved_half_width, Truncation::default())
    }

    pub fn with_truncation(resolved_half_width: usize, truncation: Truncation) -> Result<Self> {
        if resolved_half_width == 0 {
            return Err(Error::InvalidGrid("resolved half-width must be at least 1".into()));
        }
        let n = resolved_half_width;
        let work = WaveGrid::new(2 * n, Some(n))?;
        let compact = WaveGrid::new(n, Some(n))?;
        let hat_mask = band_mask(&work, n, truncation);
        let tilde_mask = band_mask(&work, 2 * n, truncation)
            .into_iter()
            .zip(&hat_mask)
            .map(|(in_band, &resolved)| in_band && !resolved)
            .collect();
        Ok(Self {
            resolved: n,
            truncation,
            work,
            compact,
            hat_mask,
            tilde_mask,
            engine: engine_for(work, truncation),
        })
    }

    /// Full-box operator matching a field on its compact or working grid.
    pub fn for_field(u_hat: &SpectralField) -> Result<Self> {
        let g = u_hat.grid();
        let n = g.resolved_half_width().ok_or(Error::ResolvedSetMissing)?;
        if g.half_width() != 2 * n && g.half_width() != n {
            return Err(Error::InvalidGrid(format!(
                "field half-width {} is neither N = {n} nor 2N",
                g.half_width()
            )));
        }
        Self::with_truncation(n, Truncation::FullBox)
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn resolved_half_width(&self) -> usize {
        self.resolved
    }

    /// Working grid `[-2N, 2N-1]³` with resolved set `F`.
    pub fn working_grid(&self) -> WaveGrid {
        self.work
    }

    /// Grid holding `F` alone, the natural state space of the reduced model.
    pub fn compact_grid(&self) -> WaveGrid {
        self.compact
    }

    /// Scalar 3D transforms performed so far.
    pub fn transform_count(&self) -> u64 {
        self.engine.transform_count()
    }

    /// Embed the input in the working grid, checking it vanishes outside `F`.
    fn lift(&self, u: &SpectralField) -> Result<SpectralField> {
        let g = u.grid();
        let lifted = if g.half_width() == self.resolved {
            u.embed(self.work)
        } else if g.half_width() == self.work.half_width() {
            u.clone().with_grid(self.work)?
        } else {
            return Err(Error::GridMismatch {
                left: g.half_width(),
                right: self.work.half_width(),
            });
        };
        let count = self.work.mode_count();
        let mut worst: f64 = 0.0;
        for c in 0..3 {
            for (v, &inside) in lifted.coeffs()[c * count..(c + 1) * count].iter().zip(&self.hat_mask) {
                if !inside {
                    worst = worst.max(v.norm());
                }
            }
        }
        if worst > 0.0 {
            return Err(Error::SupportViolation { magnitude: worst });
        }
        Ok(lifted)
    }

    /// Restrict any field containing `F` to the resolved modes kept by the
    /// truncation, returned on the compact grid.
    pub fn project_resolved(&self, u: &SpectralField) -> SpectralField {
        let mut out = u.embed(self.compact);
        let count = self.compact.mode_count();
        let keep: Vec<bool> = self
            .compact
            .wavevectors()
            .map(|(_, k)| self.truncation.keeps(k, self.resolved))
            .collect();
        for c in 0..3 {
            for (v, &k) in out.coeffs_mut()[c * count..(c + 1) * count].iter_mut().zip(&keep) {
                if !k {
                    *v = Default::default();
                }
            }
        }
        out
    }

    /// Return a working-grid result in the shape of the caller's input.
    fn lower(&self, like: &SpectralField, r: SpectralField) -> SpectralField {
        if like.grid().half_width() == self.resolved {
            r.embed(self.compact)
        } else {
            r
        }
    }

    fn hat(&self, f: &SpectralField) -> SpectralField {
        self.masked(f, &self.hat_mask)
    }

    fn tilde(&self, f: &SpectralField) -> SpectralField {
        self.masked(f, &self.tilde_mask)
    }

    fn masked(&self, f: &SpectralField, mask: &[bool]) -> SpectralField {
        let mut out = f.clone();
        let count = self.work.mode_count();
        let coeffs = out.coeffs_mut();
        for c in 0..3 {
            for (v, &keep) in coeffs[c * count..(c + 1) * count].iter_mut().zip(mask) {
                if !keep {
                    *v = Default::default();
                }
            }
        }
        out
    }

    fn divergence(&mut self, terms: &[SymTerm<'_>], band: usize) -> SpectralField {
        self.engine.symmetric_divergence(terms, band)
    }

    fn phys(&mut self, f: &SpectralField, band: usize) -> PhysicalField {
        self.engine.to_physical(f, band)
    }

    /// Core evaluation on a working-grid field supported on `F`.
    ///
    /// `Separate` returns `[R⁰, .., R^order]`; `Combined(w)` returns the single
    /// field `R⁰ + Σ w_i Rⁱ`.
    fn evaluate(&mut self, u: &SpectralField, order: usize, output: Output<'_>) -> Vec<SpectralField> {
        assert!(order <= MAX_ORDER);
        let n = self.resolved;
        let m = 2 * n;
        let mut results = Vec::new();

        let up = self.phys(u, n);
        let cuu = self.divergence(&[SymTerm::new(0.5, &[(1.0, &up)], &[(1.0, &up)])], m);
        let h = self.hat(&cuu);
        let t = self.tilde(&cuu);
        drop(cuu);
        if order == 0 {
            self.engine.recycle(up);
            return vec![h];
        }

        let tp = self.phys(&t, m);
        let a2 = self.divergence(&[SymTerm::new(1.0, &[(1.0, &up)], &[(1.0, &tp)])], m);
        let r1 = self.hat(&a2);
        if order == 1 {
            self.engine.recycle(up);
            self.engine.recycle(tp);
            return match output {
                Output::Separate => vec![h, r1],
                Output::Combined(w) => {
                    let mut rhs = h;
                    rhs.add_scaled(w[0], &r1);
                    vec![rhs]
                }
            };
        }

        let hp = self.phys(&h, n);
        let a1 = self.divergence(&[SymTerm::new(1.0, &[(1.0, &up)], &[(1.0, &hp)])], m);
        let ha1 = self.phys(&self.hat(&a1), n);
        let ta1 = self.phys(&self.tilde(&a1), m);
        let ha2 = self.phys(&r1, n);
        let ta2 = self.phys(&self.tilde(&a2), m);
        drop(a1);
        drop(a2);

        // D̃(H - T, û) = D̃(û, H) - D̃(û, T)
        let x2a: &[(f64, &PhysicalField)] = &[(1.0, &ta1), (-1.0, &ta2)];
        let u1: &[(f64, &PhysicalField)] = &[(1.0, &up)];
        let t1: &[(f64, &PhysicalField)] = &[(1.0, &tp)];
        let h1: &[(f64, &PhysicalField)] = &[(1.0, &hp)];
        let outer2 = [SymTerm::new(1.0, u1, x2a), SymTerm::new(-1.0, t1, t1)];

        let mut y3p = None;
        let mut x4p = None;
        if order >= 3 {
            // D̂(û, H - 2T) + D̃(û, T - 2H), plus the B terms D(H,H) + D(T,T) - D(H,T)
            let p3: &[(f64, &PhysicalField)] = &[(1.0, &ha1), (-2.0, &ha2), (1.0, &ta2), (-2.0, &ta1)];
            let y3 = self.divergence(
                &[
                    SymTerm::new(1.0, u1, p3),
                    SymTerm::new(1.0, h1, h1),
                    SymTerm::new(1.0, t1, t1),
                    SymTerm::new(-1.0, h1, t1),
                ],
                m,
            );
            let y3 = self.tilde(&y3);
            let y3phys = self.phys(&y3, m);

            if order >= 4 {
                let s2: &[(f64, &PhysicalField)] = &[(1.0, &ha1), (-3.0, &ha2), (3.0, &ta2), (-5.0, &ta1)];
                let s3: &[(f64, &PhysicalField)] = &[(5.0, &ha2), (-3.0, &ha1), (3.0, &ta1), (-1.0, &ta2)];
                let s4: &[(f64, &PhysicalField)] = &[(3.0, &ha1), (-5.0, &ha2), (1.0, &ta2), (-3.0, &ta1)];
                let s5: &[(f64, &PhysicalField)] = &[(3.0, &ha2), (-1.0, &ha1), (5.0, &ta1), (-3.0, &ta2)];
                let hat_part = self.divergence(
                    &[
                        SymTerm::new(1.0, h1, h1),
                        SymTerm::new(3.0, t1, t1),
                        SymTerm::new(-2.0, h1, t1),
                        SymTerm::new(1.0, u1, s2),
                    ],
                    n,
                );
                let tilde_part = self.divergence(
                    &[
                        SymTerm::new(-3.0, h1, h1),
                        SymTerm::new(-1.0, t1, t1),
                        SymTerm::new(2.0, h1, t1),
                        SymTerm::new(1.0, u1, s3),
                    ],
                    m,
                );
                let mut v = self.hat(&hat_part);
                v.add_scaled(1.0, &self.tilde(&tilde_part));
                drop((hat_part, tilde_part));
                let vp = self.phys(&v, m);
                let x4 = self.divergence(
                    &[
                        SymTerm::new(1.0, u1, &[(1.0, &vp)]),
                        SymTerm::new(1.0, h1, s4),
                        SymTerm::new(1.0, t1, s5),
                    ],
                    m,
                );
                self.engine.recycle(vp);
                x4p = Some(self.phys(&self.tilde(&x4), m));
            }
            y3p = Some(y3phys);
        }

        let y3c: Vec<(f64, &PhysicalField)> = y3p.iter().map(|f| (1.0, f)).collect();
        let x4c: Vec<(f64, &PhysicalField)> = x4p.iter().map(|f| (1.0, f)).collect();
        let ta1c: &[(f64, &PhysicalField)] = &[(1.0, &ta1)];
        let ta2c: &[(f64, &PhysicalField)] = &[(1.0, &ta2)];
        let ta1m2: &[(f64, &PhysicalField)] = &[(1.0, &ta1), (-2.0, &ta2)];
        let mut outers: Vec<Vec<SymTerm<'_>>> = vec![outer2.to_vec()];
        if order >= 3 {
            outers.push(vec![SymTerm::new(1.0, u1, &y3c), SymTerm::new(-3.0, t1, x2a)]);
        }
        if order >= 4 {
            outers.push(vec![
                SymTerm::new(1.0, u1, &x4c),
                SymTerm::new(-4.0, t1, &y3c),
                SymTerm::new(-3.0, ta1c, ta1m2),
                SymTerm::new(-3.0, ta2c, ta2c),
            ]);
        }

        match output {
            Output::Separate => {
                results.push(h);
                results.push(r1);
                for terms in &outers {
                    let r = self.divergence(terms, n);
                    results.push(self.hat(&r));
                }
            }
            Output::Combined(w) => {
                // D(a, b) + D(a, c) = D(a, b + c): merge terms sharing a left factor
                let mut merged: Vec<(Combination<'_>, Vec<(f64, &PhysicalField)>)> = Vec::new();
                for (terms, wi) in outers.iter().zip(&w[1..]) {
                    for t in terms {
                        let scaled = t.right.iter().map(|&(c, f)| (c * t.weight * wi, f));
                        match merged.iter_mut().find(|(left, _)| std::ptr::eq(*left, t.left)) {
                            Some((_, right)) => right.extend(scaled),
                            None => merged.push((t.left, scaled.collect())),
                        }
                    }
                }
                let all: Vec<SymTerm<'_>> = merged
                    .iter()
                    .map(|(left, right)| SymTerm::new(1.0, left, right))
                    .collect();
                let mut rhs = self.divergence(&all, n);
                rhs = self.hat(&rhs);
                rhs.add_scaled(1.0, &h);
                rhs.add_scaled(w[0], &r1);
                results.push(rhs);
            }
        }
        drop(outers);
        for f in [up, tp, hp, ha1, ta1, ha2, ta2].into_iter().chain(y3p).chain(x4p) {
            self.engine.recycle(f);
        }
        results
    }

    /// `[R⁰, .., R^order]` for `û` given on the compact or the working grid.
    pub fn terms(&mut self, u_hat: &SpectralField, order: usize) -> Result<Vec<SpectralField>> {
        if order > MAX_ORDER {
            return Err(Error::InvalidConfig(format!("order {order} exceeds {MAX_ORDER}")));
        }
        let u = self.lift(u_hat)?;
        Ok(self
            .evaluate(&u, order, Output::Separate)
            .into_iter()
            .map(|r| self.lower(u_hat, r))
            .collect())
    }

    /// A single term `R^order`.
    pub fn term(&mut self, u_hat: &SpectralField, order: usize) -> Result<SpectralField> {
        Ok(self.terms(u_hat, order)?.pop().expect("at least one term"))
    }

    /// `R⁰ + Σ α_i(t) tⁱ Rⁱ`.
    pub fn renormalized_rhs(&mut self, u_hat: &SpectralField, t: f64, cfg: &RomConfig) -> Result<SpectralField> {
        let w = cfg.weights(t)?;
        if cfg.resolved_half_width != self.resolved {
            return Err(Error::InvalidConfig(format!(
                "config resolution {} does not match operator resolution {}",
                cfg.resolved_half_width, self.resolved
            )));
        }
        let u = self.lift(u_hat)?;
        let r = self.evaluate(&u, cfg.order, Output::Combined(&w)).pop().expect("one result");
        Ok(self.lower(u_hat, r))
    }

    /// Right-hand side for a state held on the compact grid; weights already include `tⁱ`.
    pub fn compact_rhs(&mut self, u: &SpectralField, weights: &[f64]) -> SpectralField {
        assert_eq!(u.grid().half_width(), self.resolved, "state must live on the compact grid");
        assert!(weights.len() <= MAX_ORDER);
        let lifted = u.embed(self.work);
        let r = self
            .evaluate(&lifted, weights.len(), Output::Combined(weights))
            .pop()
            .expect("one result");
        r.embed(self.compact)
    }
}

/// The Euler nonlinearity `C(u, u)` on a full band, as used by truth runs.
pub struct MarkovOperator {
    grid: WaveGrid,
    truncation: Truncation,
    mask: Vec<bool>,
    engine: SpectralEngine,
}

impl fmt::Debug for MarkovOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MarkovOperator")
            .field("grid", &self.grid)
            .field("truncation", &self.truncation)
            .finish()
    }
}

impl MarkovOperator {
    /// Operator with the default [`Truncation::Symmetric`]: the `-M` planes stay zero.
    pub fn new(grid: WaveGrid) -> Self {
        Self::with_truncation(grid, Truncation::default())
    }

    pub fn with_truncation(grid: WaveGrid, truncation: Truncation) -> Self {
        Self {
            grid,
            truncation,
            mask: band_mask(&grid, grid.half_width(), truncation),
            engine: engine_for(grid, truncation),
        }
    }

    pub fn grid(&self) -> WaveGrid {
        self.grid
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn rhs(&mut self, u: &SpectralField) -> SpectralField {
        assert_eq!(u.grid().half_width(), self.grid.half_width());
        let m = self.grid.half_width();
        let up = self.engine.to_physical(u, m);
        let mut r = self
            .engine
            .symmetric_divergence(&[SymTerm::new(0.5, &[(1.0, &up)], &[(1.0, &up)])], m);
        self.engine.recycle(up);
        if self.truncation == Truncation::Symmetric {
            let count = self.grid.mode_count();
            for c in 0..3 {
                for (v, &keep) in r.coeffs_mut()[c * count..(c + 1) * count].iter_mut().zip(&self.mask) {
                    if !keep {
                        *v = Default::default();
                    }
                }
            }
        }
        r.with_grid(*u.grid()).expect("same band")
    }
}

/// `R⁰ = Ĉ(û, û)`.
pub fn markov_term(u_hat: &SpectralField) -> Result<SpectralField> {
    RomOperator::for_field(u_hat)?.term(u_hat, 0)
}

/// `R¹ = D̂(û, C̃(û, û))`, the t-model term.
pub fn t_model_term(u_hat: &SpectralField) -> Result<SpectralField> {
    RomOperator::for_field(u_hat)?.term(u_hat, 1)
}

pub fn second_order_term(u_hat: &SpectralField) -> Result<SpectralField> {
    RomOperator::for_field(u_hat)?.term(u_hat, 2)
}

pub fn third_order_term(u_hat: &SpectralField) -> Result<SpectralField> {
    RomOperator::for_field(u_hat)?.term(u_hat, 3)
}

pub fn fourth_order_term(u_hat: &SpectralField) -> Result<SpectralField> {
    RomOperator::for_field(u_hat)?.term(u_hat, 4)
}

/// One-shot `R⁰ + Σ α_i(t) tⁱ Rⁱ`.
pub fn renormalized_rhs(u_hat: &SpectralField, t: f64, cfg: &RomConfig) -> Result<SpectralField> {
    RomOperator::for_field(u_hat)?.renormalized_rhs(u_hat, t, cfg)
}
