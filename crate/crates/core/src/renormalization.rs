//! Truth energy derivatives, the resolved time window, least-squares fits of
//! renormalization coefficients, and power-law scaling regressions.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rom::{Ansatz, MarkovOperator, RomOperator, Truncation, MAX_ORDER};
use crate::spectral::{SpectralField, Wavevector};

/// Rate of change of the energy in mode `k`: `2 Re(R_k · conj(u_k))`.
pub fn mode_energy_derivative(field: &SpectralField, rhs_term: &SpectralField, k: Wavevector) -> Result<f64> {
    field.check_same_grid(rhs_term)?;
    let i = field
        .grid()
        .index_of(k)
        .ok_or_else(|| Error::InvalidGrid(format!("wavevector {k:?} outside the band")))?;
    Ok(dot_re(field.at_index(i), rhs_term.at_index(i)))
}

/// `Σ_k 2 Re(R_k · conj(u_k))` over the whole band.
pub fn energy_flux(field: &SpectralField, rhs_term: &SpectralField) -> Result<f64> {
    field.check_same_grid(rhs_term)?;
    Ok(field
        .coeffs()
        .iter()
        .zip(rhs_term.coeffs())
        .map(|(u, r)| 2.0 * (r * u.conj()).re)
        .sum())
}

#[inline]
fn dot_re(u: [num_complex::Complex64; 3], r: [num_complex::Complex64; 3]) -> f64 {
    2.0 * (0..3).map(|c| (r[c] * u[c].conj()).re).sum::<f64>()
}

/// Bounds on `|ΔE_F|` defining the resolved window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowBounds {
    pub floor: f64,
    pub ceiling: f64,
}

impl Default for WindowBounds {
    fn default() -> Self {
        Self {
            floor: 1e-16,
            ceiling: 1e-10,
        }
    }
}

impl WindowBounds {
    pub fn contains(&self, flux: f64) -> bool {
        self.floor < flux.abs() && flux.abs() < self.ceiling
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowReport {
    /// Every snapshot time with its `ΔE_F`.
    pub flux: Vec<(f64, f64)>,
    /// Indices (into the snapshot sequence) of times inside the window.
    pub selected: Vec<usize>,
}

impl WindowReport {
    pub fn times(&self) -> Vec<f64> {
        self.selected.iter().map(|&i| self.flux[i].0).collect()
    }
}

fn check_truth_half_width(m: usize) -> Result<usize> {
    if m < 2 || !m.is_multiple_of(2) {
        return Err(Error::InvalidGrid(format!(
            "truth half-width {m} must be even and at least 2"
        )));
    }
    Ok(m / 2)
}

fn check_snapshot(field: &SpectralField, m: usize) -> Result<()> {
    if field.grid().half_width() != m {
        return Err(Error::GridMismatch {
            left: field.grid().half_width(),
            right: m,
        });
    }
    Ok(())
}

/// First-order flux estimates for truth snapshots of half-width `M`.
#[derive(Debug)]
pub struct FluxProbe {
    m: usize,
    inner: RomOperator,
    outer: Option<(RomOperator, Vec<bool>)>,
}

impl FluxProbe {
    pub fn new(m: usize, truncation: Truncation) -> Result<Self> {
        let n = check_truth_half_width(m)?;
        Ok(Self {
            m,
            inner: RomOperator::with_truncation(n, truncation)?,
            outer: None,
        })
    }

    /// `ΔE_F(t) = t Σ_{k∈F'} 2 Re(R¹_k(û) · conj(û_k))` with `F' = [-M/2, M/2-1]³`.
    pub fn resolved_flux(&mut self, t: f64, field: &SpectralField) -> Result<f64> {
        check_snapshot(field, self.m)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        let u = self.inner.project_resolved(field);
        Ok(t * energy_flux(&u, &self.inner.term(&u, 1)?)?)
    }

    /// `ΔE_G(t) = t Σ_{k∈G} 2 Re(R¹_k(u) · conj(u_k))`, with the t-model evaluated on
    /// the full field over a working band `2M` and `G` the full band minus `F'`.
    pub fn outflow(&mut self, t: f64, field: &SpectralField) -> Result<f64> {
        check_snapshot(field, self.m)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        let truncation = self.inner.truncation();
        let n = self.m / 2;
        if self.outer.is_none() {
            let op = RomOperator::with_truncation(self.m, truncation)?;
            let outside = op.compact_grid().wavevectors().map(|(_, k)| !truncation.keeps(k, n)).collect();
            self.outer = Some((op, outside));
        }
        let (op, outside) = self.outer.as_mut().expect("initialized above");
        let u = op.project_resolved(field);
        let r1 = op.term(&u, 1)?;
        let sum: f64 = outside
            .iter()
            .enumerate()
            .filter(|(_, &o)| o)
            .map(|(i, _)| dot_re(u.at_index(i), r1.at_index(i)))
            .sum();
        Ok(t * sum)
    }
}

/// Snapshots whose first-order outflow `|ΔE_F|` from `F' = [-M/2, M/2-1]³` lies within `bounds`.
pub fn resolved_window<I>(snapshots: I, m: usize, bounds: WindowBounds, truncation: Truncation) -> Result<WindowReport>
where
    I: IntoIterator<Item = Result<(f64, SpectralField)>>,
{
    let mut probe = FluxProbe::new(m, truncation)?;
    let mut flux = Vec::new();
    let mut selected = Vec::new();
    for (i, snap) in snapshots.into_iter().enumerate() {
        let (t, field) = snap?;
        let de = probe.resolved_flux(t, &field)?;
        if bounds.contains(de) {
            selected.push(i);
        }
        flux.push((t, de));
    }
    if selected.is_empty() {
        return Err(Error::EmptyWindow);
    }
    Ok(WindowReport { flux, selected })
}

/// `ΔE_G` for every snapshot; see [`FluxProbe::outflow`].
pub fn outflow_check<I>(snapshots: I, m: usize, truncation: Truncation) -> Result<Vec<(f64, f64)>>
where
    I: IntoIterator<Item = Result<(f64, SpectralField)>>,
{
    let mut probe = FluxProbe::new(m, truncation)?;
    snapshots
        .into_iter()
        .map(|snap| {
            let (t, field) = snap?;
            Ok((t, probe.outflow(t, &field)?))
        })
        .collect()
}

/// Per-snapshot, per-mode energy derivatives over a resolved set `F_N`.
///
/// `exact` comes from the full field under the full model; `terms[i]` from
/// `Rⁱ` of the restricted field, `i = 0..=order`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyDerivativeTable {
    pub resolved_half_width: usize,
    pub order: usize,
    pub times: Vec<f64>,
    pub modes: Vec<Wavevector>,
    /// `exact[s * modes + j]`
    pub exact: Vec<f64>,
    /// `terms[(s * modes + j) * (order + 1) + i]`
    pub terms: Vec<f64>,
}

impl EnergyDerivativeTable {
    pub fn new(resolved_half_width: usize, order: usize, modes: Vec<Wavevector>) -> Self {
        Self {
            resolved_half_width,
            order,
            times: Vec::new(),
            modes,
            exact: Vec::new(),
            terms: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.exact.len()
    }

    /// Append one snapshot: `exact[j]` and `terms[i][j]` over the table's modes.
    pub fn push(&mut self, t: f64, exact: &[f64], terms: &[Vec<f64>]) -> Result<()> {
        let m = self.modes.len();
        if exact.len() != m || terms.len() != self.order + 1 || terms.iter().any(|c| c.len() != m) {
            return Err(Error::InsufficientData(format!(
                "snapshot rows must have {m} modes and {} term columns",
                self.order + 1
            )));
        }
        self.times.push(t);
        self.exact.extend_from_slice(exact);
        for j in 0..m {
            for column in terms {
                self.terms.push(column[j]);
            }
        }
        Ok(())
    }

    #[inline]
    pub fn term(&self, snapshot: usize, mode: usize, i: usize) -> f64 {
        self.terms[(snapshot * self.modes.len() + mode) * (self.order + 1) + i]
    }

    #[inline]
    pub fn exact_at(&self, snapshot: usize, mode: usize) -> f64 {
        self.exact[snapshot * self.modes.len() + mode]
    }
}

/// Accumulates energy-derivative tables for several resolutions one truth
/// snapshot at a time, so trajectories never have to be held in memory.
#[derive(Debug)]
pub struct TableBuilder {
    order: usize,
    truncation: Truncation,
    ops: Vec<RomOperator>,
    tables: Vec<EnergyDerivativeTable>,
    markov: Option<MarkovOperator>,
}

impl TableBuilder {
    pub fn new(ns: &[usize], order: usize, truncation: Truncation) -> Result<Self> {
        if order == 0 || order > MAX_ORDER {
            return Err(Error::InvalidConfig(format!("order {order} must lie in 1..={MAX_ORDER}")));
        }
        let ops = ns
            .iter()
            .map(|&n| RomOperator::with_truncation(n, truncation))
            .collect::<Result<Vec<_>>>()?;
        let tables = ops
            .iter()
            .map(|op| {
                let n = op.resolved_half_width();
                let modes = op
                    .compact_grid()
                    .wavevectors()
                    .map(|(_, k)| k)
                    .filter(|&k| truncation.keeps(k, n))
                    .collect();
                EnergyDerivativeTable::new(n, order, modes)
            })
            .collect();
        Ok(Self {
            order,
            truncation,
            ops,
            tables,
            markov: None,
        })
    }

    pub fn add(&mut self, t: f64, field: &SpectralField) -> Result<()> {
        let m = field.grid().half_width();
        if let Some(op) = self.ops.iter().find(|op| 2 * op.resolved_half_width() > m) {
            return Err(Error::InvalidGrid(format!(
                "truth half-width {m} is smaller than 2N = {}",
                2 * op.resolved_half_width()
            )));
        }
        let truncation = self.truncation;
        let full = self
            .markov
            .get_or_insert_with(|| MarkovOperator::with_truncation(*field.grid(), truncation));
        if full.grid().half_width() != m {
            return Err(Error::GridMismatch {
                left: m,
                right: full.grid().half_width(),
            });
        }
        let rhs = full.rhs(field);
        for (op, table) in self.ops.iter_mut().zip(self.tables.iter_mut()) {
            let u = op.project_resolved(field);
            let terms = op.terms(&u, self.order)?;
            let mut exact = Vec::with_capacity(table.modes.len());
            let mut cols = vec![Vec::with_capacity(table.modes.len()); self.order + 1];
            for &k in &table.modes {
                let i = field.grid().index_of(k).expect("F inside the truth band");
                exact.push(dot_re(field.at_index(i), rhs.at_index(i)));
                let j = u.grid().index_of(k).expect("F on the compact grid");
                let ur = u.at_index(j);
                for (col, r) in cols.iter_mut().zip(&terms) {
                    col.push(dot_re(ur, r.at_index(j)));
                }
            }
            table.push(t, &exact, &cols)?;
        }
        Ok(())
    }

    pub fn snapshots(&self) -> usize {
        self.tables.first().map_or(0, |t| t.times.len())
    }

    pub fn finish(self) -> Vec<EnergyDerivativeTable> {
        self.tables
    }
}

/// Build one table per resolution from truth snapshots (already filtered to the window).
pub fn build_tables<I>(snapshots: I, ns: &[usize], order: usize, truncation: Truncation) -> Result<Vec<EnergyDerivativeTable>>
where
    I: IntoIterator<Item = Result<(f64, SpectralField)>>,
{
    let mut builder = TableBuilder::new(ns, order, truncation)?;
    for snap in snapshots {
        let (t, field) = snap?;
        builder.add(t, &field)?;
    }
    Ok(builder.finish())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFit {
    pub resolved_half_width: usize,
    pub order: usize,
    pub ansatz: Ansatz,
    pub coeffs: Vec<f64>,
    /// `Σ (ΔE_k - ΔE⁰_k - Σ a_i x_i)²` at the optimum.
    pub residual: f64,
    /// Condition number of the column-normalized regressor matrix.
    pub condition: f64,
}

/// Largest acceptable condition number of the column-normalized regressors.
pub const MAX_CONDITION: f64 = 1e12;

/// Regressors for column `i` (1-based) of row `(s, j)`.
fn regressor(table: &EnergyDerivativeTable, ansatz: Ansatz, s: usize, j: usize, i: usize) -> f64 {
    let x = table.term(s, j, i);
    match ansatz {
        Ansatz::Algebraic => x,
        Ansatz::Constant => x * table.times[s].powi(i as i32),
    }
}

/// The least-squares cost at coefficients `a`.
pub fn fit_cost(table: &EnergyDerivativeTable, ansatz: Ansatz, a: &[f64]) -> f64 {
    let mut cost = 0.0;
    for s in 0..table.times.len() {
        for j in 0..table.modes.len() {
            let mut r = table.exact_at(s, j) - table.term(s, j, 0);
            for (i, ai) in a.iter().enumerate() {
                r -= ai * regressor(table, ansatz, s, j, i + 1);
            }
            cost += r * r;
        }
    }
    cost
}

/// Minimize `Σ_{t,k} (ΔE_k - ΔE⁰_k - Σ_{i≤n} a_i x_ik)²` by SVD of the
/// column-normalized regressor matrix; `n` may be below the table's order.
pub fn fit_coefficients(table: &EnergyDerivativeTable, ansatz: Ansatz, n: usize) -> Result<CoefficientFit> {
    if n == 0 || n > table.order {
        return Err(Error::InvalidConfig(format!(
            "fit order {n} must lie in 1..={}",
            table.order
        )));
    }
    let rows = table.rows();
    if rows < n {
        return Err(Error::InsufficientData(format!("{rows} rows cannot determine {n} coefficients")));
    }
    let mut a = DMatrix::<f64>::zeros(rows, n);
    let mut y = DVector::<f64>::zeros(rows);
    let modes = table.modes.len();
    for s in 0..table.times.len() {
        for j in 0..modes {
            let r = s * modes + j;
            y[r] = table.exact_at(s, j) - table.term(s, j, 0);
            for i in 0..n {
                a[(r, i)] = regressor(table, ansatz, s, j, i + 1);
            }
        }
    }
    let mut scales = vec![0.0; n];
    for (i, scale) in scales.iter_mut().enumerate() {
        let norm = a.column(i).norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::RankDeficient {
                condition: f64::INFINITY,
            });
        }
        *scale = norm;
        a.column_mut(i).scale_mut(1.0 / norm);
    }
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let (smax, smin) = sv.iter().fold((0.0f64, f64::INFINITY), |(hi, lo), &v| (hi.max(v), lo.min(v)));
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition.is_nan() || condition > MAX_CONDITION {
        return Err(Error::RankDeficient { condition });
    }
    let x = svd
        .solve(&y, 0.0)
        .map_err(|e| Error::InsufficientData(e.to_string()))?;
    let coeffs: Vec<f64> = x.iter().zip(&scales).map(|(v, s)| v / s).collect();
    let resid = &y - &a * &x;
    Ok(CoefficientFit {
        resolved_half_width: table.resolved_half_width,
        order: n,
        ansatz,
        coeffs,
        residual: resid.norm_squared(),
        condition,
    })
}

/// Power law `a_i(N) ≈ β N^γ` for one coefficient index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingLaw {
    /// 1-based coefficient index.
    pub index: usize,
    pub beta: f64,
    pub gamma: f64,
    pub r2: f64,
}

/// Fits and laws for one `(n, ansatz)` across resolutions.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub order: usize,
    pub ansatz: Ansatz,
    pub fits: Vec<CoefficientFit>,
    pub laws: Vec<ScalingLaw>,
}

/// Regress `log|a_i|` on `log N` for each coefficient index.
///
/// Needs at least two distinct `N` and a fixed sign per index.
pub fn fit_scaling_laws(coeffs_by_n: &BTreeMap<usize, Vec<f64>>) -> Result<Vec<ScalingLaw>> {
    if coeffs_by_n.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "scaling regression needs at least two resolutions, got {}",
            coeffs_by_n.len()
        )));
    }
    let width = coeffs_by_n.values().next().map(Vec::len).unwrap_or(0);
    if width == 0 || coeffs_by_n.values().any(|c| c.len() != width) {
        return Err(Error::InsufficientData("coefficient vectors differ in length".into()));
    }
    if coeffs_by_n.keys().any(|&n| n == 0) {
        return Err(Error::InsufficientData("resolution 0 has no logarithm".into()));
    }
    (0..width)
        .map(|i| {
            let values: Vec<f64> = coeffs_by_n.values().map(|c| c[i]).collect();
            let sign = values[0].signum();
            if values.iter().any(|v| *v == 0.0 || !v.is_finite() || v.signum() != sign) {
                return Err(Error::SignChange { index: i + 1 });
            }
            let xs: Vec<f64> = coeffs_by_n.keys().map(|&n| (n as f64).ln()).collect();
            let ys: Vec<f64> = values.iter().map(|v| v.abs().ln()).collect();
            let (intercept, slope, r2) = linear_fit(&xs, &ys);
            Ok(ScalingLaw {
                index: i + 1,
                beta: sign * intercept.exp(),
                gamma: slope,
                r2,
            })
        })
        .collect()
}

/// Ordinary least-squares line `y ≈ a + b x`, returning `(a, b, r²)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (intercept, slope, r2.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_wavegrid;
    use num_complex::Complex64;

    fn synthetic(order: usize, truth: &[f64], ansatz: Ansatz) -> EnergyDerivativeTable {
        let modes: Vec<Wavevector> = (0..40).map(|j| [j, 0, 0]).collect();
        let mut table = EnergyDerivativeTable::new(4, order, modes);
        for s in 0..6 {
            let t = 0.5 + 0.25 * s as f64;
            let cols: Vec<Vec<f64>> = (0..=order)
                .map(|i| (0..40).map(|j| ((j * 7 + s * 3 + i * 11) as f64 * 0.37).sin() * (i + 1) as f64).collect())
                .collect();
            let exact: Vec<f64> = (0..40)
                .map(|j| {
                    cols[0][j]
                        + truth
                            .iter()
                            .enumerate()
                            .map(|(i, a)| {
                                let w = match ansatz {
                                    Ansatz::Algebraic => 1.0,
                                    Ansatz::Constant => t.powi(i as i32 + 1),
                                };
                                a * w * cols[i + 1][j]
                            })
                            .sum::<f64>()
                })
                .collect();
            table.push(t, &exact, &cols).unwrap();
        }
        table
    }

    #[test]
    fn energy_derivative_of_simple_terms() {
        let g = make_wavegrid(2, None).unwrap();
        let u = SpectralField::from_fn(g, |k| [Complex64::new(k[0] as f64, 1.0), Complex64::new(0.5, -0.2), Complex64::new(0.0, 0.3)]);
        let rotated = SpectralField::from_fn(g, |k| u.get(k).unwrap().map(|c| c * Complex64::i()));
        assert!(mode_energy_derivative(&u, &rotated, [1, 0, 0]).unwrap().abs() < 1e-15);
        let e = mode_energy_derivative(&u, &u, [1, 0, 0]).unwrap();
        let v = u.get([1, 0, 0]).unwrap();
        let norm2: f64 = v.iter().map(|c| c.norm_sqr()).sum();
        assert!((e - 2.0 * norm2).abs() < 1e-14);
        assert!(mode_energy_derivative(&u, &u, [5, 0, 0]).is_err());
    }

    #[test]
    fn exact_recovery_single_term() {
        let table = synthetic(1, &[3.0], Ansatz::Algebraic);
        let fit = fit_coefficients(&table, Ansatz::Algebraic, 1).unwrap();
        assert!((fit.coeffs[0] - 3.0).abs() < 1e-12);
        assert!(fit.residual <= 1e-20);
    }

    #[test]
    fn exact_recovery_two_terms() {
        let truth = [2.448, -2.341];
        let table = synthetic(2, &truth, Ansatz::Algebraic);
        let fit = fit_coefficients(&table, Ansatz::Algebraic, 2).unwrap();
        for (a, b) in fit.coeffs.iter().zip(truth) {
            assert!(((a - b) / b).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_ansatz_uses_time_powers() {
        let truth = [0.5, -0.1, 0.02];
        let table = synthetic(3, &truth, Ansatz::Constant);
        let fit = fit_coefficients(&table, Ansatz::Constant, 3).unwrap();
        for (a, b) in fit.coeffs.iter().zip(truth) {
            assert!(((a - b) / b).abs() < 1e-10);
        }
    }

    #[test]
    fn fit_is_a_minimum() {
        let mut table = synthetic(2, &[1.0, -0.5], Ansatz::Algebraic);
        // perturb the truth so the residual is nonzero
        for (i, e) in table.exact.iter_mut().enumerate() {
            *e += 0.01 * ((i as f64) * 1.3).cos();
        }
        let fit = fit_coefficients(&table, Ansatz::Algebraic, 2).unwrap();
        let best = fit_cost(&table, Ansatz::Algebraic, &fit.coeffs);
        assert!((best - fit.residual).abs() <= 1e-12 * best.max(1.0));
        for i in 0..2 {
            for f in [0.99, 1.01] {
                let mut a = fit.coeffs.clone();
                a[i] *= f;
                assert!(fit_cost(&table, Ansatz::Algebraic, &a) >= best);
            }
        }
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let modes: Vec<Wavevector> = (0..10).map(|j| [j, 0, 0]).collect();
        let mut table = EnergyDerivativeTable::new(4, 2, modes);
        let col: Vec<f64> = (0..10).map(|j| j as f64 + 1.0).collect();
        table
            .push(1.0, &col, &[vec![0.0; 10], col.clone(), col.iter().map(|v| 2.0 * v).collect()])
            .unwrap();
        assert!(matches!(
            fit_coefficients(&table, Ansatz::Algebraic, 2),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn scaling_law_recovery() {
        let coeffs: BTreeMap<usize, Vec<f64>> = [4usize, 6, 8, 10, 12]
            .iter()
            .map(|&n| (n, vec![1.591 * (n as f64).powf(-1.077)]))
            .collect();
        let law = fit_scaling_laws(&coeffs).unwrap()[0];
        assert!((law.beta - 1.591).abs() < 1e-12);
        assert!((law.gamma + 1.077).abs() < 1e-12);
        assert!((law.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_law_negative_prefactor_and_two_points() {
        let coeffs: BTreeMap<usize, Vec<f64>> = [(4, vec![-0.3]), (8, vec![-0.1])].into_iter().collect();
        let law = fit_scaling_laws(&coeffs).unwrap()[0];
        assert!(law.beta < 0.0);
        assert_eq!(law.r2, 1.0);
        assert!((law.beta * 8f64.powf(law.gamma) + 0.1).abs() < 1e-14);
    }

    #[test]
    fn scaling_law_rejects_sign_change_and_single_point() {
        let mixed: BTreeMap<usize, Vec<f64>> = [(4, vec![0.1, 0.3]), (8, vec![0.05, -0.1])].into_iter().collect();
        assert!(matches!(fit_scaling_laws(&mixed), Err(Error::SignChange { index: 2 })));
        let single: BTreeMap<usize, Vec<f64>> = [(4, vec![0.1])].into_iter().collect();
        assert!(fit_scaling_laws(&single).is_err());
    }

    #[test]
    fn window_bounds_use_magnitude() {
        let b = WindowBounds::default();
        assert!(b.contains(-1e-12));
        assert!(b.contains(1e-12));
        assert!(!b.contains(0.0));
        assert!(!b.contains(-1e-6));
    }
}
