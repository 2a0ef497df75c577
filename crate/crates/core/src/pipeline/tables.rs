//! CSV tables. Every real number is written with 17 significant digits so
//! that reading it back reproduces the same `f64`.

use std::path::Path;

use crate::diagnostics::{DecaySlopes, DiagnosticSeries, Maxima};
use crate::error::{Error, Result};
use crate::renormalization::{CoefficientFit, ScalingLaw};
use crate::rom::{Ansatz, MAX_ORDER};

pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_real).unwrap_or_default()
}

fn table_error(path: &Path, reason: impl Into<String>) -> Error {
    Error::InvalidTable {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn write_rows(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

struct Table {
    header: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

fn read_rows(path: &Path) -> Result<Table> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r.records().collect::<std::result::Result<_, _>>()?;
    Ok(Table { header, rows })
}

impl Table {
    fn column(&self, path: &Path, names: &[&str]) -> Result<usize> {
        self.header
            .iter()
            .position(|h| names.contains(&h.as_str()))
            .ok_or_else(|| table_error(path, format!("missing column {}", names[0])))
    }
}

fn parse<T: std::str::FromStr>(path: &Path, row: &csv::StringRecord, col: usize) -> Result<T> {
    let cell = row.get(col).unwrap_or("");
    cell.trim()
        .parse()
        .map_err(|_| table_error(path, format!("cannot parse {cell:?} in column {col}")))
}

fn parse_opt(path: &Path, row: &csv::StringRecord, col: usize) -> Result<Option<f64>> {
    match row.get(col).map(str::trim) {
        None | Some("") => Ok(None),
        Some(_) => parse(path, row, col).map(Some),
    }
}

fn coeff_name(ansatz: Ansatz, i: usize) -> String {
    match ansatz {
        Ansatz::Algebraic => format!("a_{i}"),
        Ansatz::Constant => format!("a'_{i}"),
    }
}

/// One row per `(N, n)`: `N,n,ansatz,a_1..a_4,residual,condition`. Constant-ansatz
/// files name the coefficient columns `a'_i`; unused columns are empty.
pub fn write_coefficients(path: &Path, ansatz: Ansatz, fits: &[CoefficientFit]) -> Result<()> {
    let mut header: Vec<String> = ["N", "n", "ansatz"].map(String::from).to_vec();
    header.extend((1..=MAX_ORDER).map(|i| coeff_name(ansatz, i)));
    header.extend(["residual", "condition"].map(String::from));
    let rows = fits.iter().map(|f| {
        let mut row = vec![
            f.resolved_half_width.to_string(),
            f.order.to_string(),
            f.ansatz.to_string(),
        ];
        row.extend((0..MAX_ORDER).map(|i| fmt_opt(f.coeffs.get(i).copied())));
        row.push(fmt_real(f.residual));
        row.push(fmt_real(f.condition));
        row
    });
    write_rows(path, &header, rows)
}

pub fn read_coefficients(path: &Path) -> Result<Vec<CoefficientFit>> {
    let table = read_rows(path)?;
    let cn = table.column(path, &["N"])?;
    let co = table.column(path, &["n"])?;
    let ca = table.column(path, &["ansatz"])?;
    let cr = table.column(path, &["residual"])?;
    let cc = table.column(path, &["condition"])?;
    let coeff_cols = (1..=MAX_ORDER)
        .map(|i| {
            table.column(
                path,
                &[&coeff_name(Ansatz::Algebraic, i), &coeff_name(Ansatz::Constant, i)],
            )
        })
        .collect::<Result<Vec<_>>>()?;
    table
        .rows
        .iter()
        .map(|row| {
            let order: usize = parse(path, row, co)?;
            if order == 0 || order > MAX_ORDER {
                return Err(table_error(path, format!("order {order} out of range")));
            }
            let coeffs = coeff_cols[..order]
                .iter()
                .map(|&c| parse(path, row, c))
                .collect::<Result<Vec<f64>>>()?;
            let ansatz: String = parse(path, row, ca)?;
            Ok(CoefficientFit {
                resolved_half_width: parse(path, row, cn)?,
                order,
                ansatz: ansatz.parse()?,
                coeffs,
                residual: parse(path, row, cr)?,
                condition: parse(path, row, cc)?,
            })
        })
        .collect()
}

/// A scaling law tagged with the model it belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LawRow {
    pub order: usize,
    pub ansatz: Ansatz,
    pub law: ScalingLaw,
}

/// `n,ansatz,i,beta,gamma,r2`.
pub fn write_laws(path: &Path, laws: &[LawRow]) -> Result<()> {
    let header = ["n", "ansatz", "i", "beta", "gamma", "r2"].map(String::from);
    let rows = laws.iter().map(|r| {
        vec![
            r.order.to_string(),
            r.ansatz.to_string(),
            r.law.index.to_string(),
            fmt_real(r.law.beta),
            fmt_real(r.law.gamma),
            fmt_real(r.law.r2),
        ]
    });
    write_rows(path, &header, rows)
}

pub fn read_laws(path: &Path) -> Result<Vec<LawRow>> {
    let table = read_rows(path)?;
    let cols = ["n", "ansatz", "i", "beta", "gamma", "r2"]
        .iter()
        .map(|c| table.column(path, &[c]))
        .collect::<Result<Vec<_>>>()?;
    table
        .rows
        .iter()
        .map(|row| {
            let ansatz: String = parse(path, row, cols[1])?;
            Ok(LawRow {
                order: parse(path, row, cols[0])?,
                ansatz: ansatz.parse()?,
                law: ScalingLaw {
                    index: parse(path, row, cols[2])?,
                    beta: parse(path, row, cols[3])?,
                    gamma: parse(path, row, cols[4])?,
                    r2: parse(path, row, cols[5])?,
                },
            })
        })
        .collect()
}

/// Coefficients `β_i N^γ_i`, `i = 1..=order`, for one model from a set of laws.
pub fn coefficients_from_laws(laws: &[LawRow], n: usize, order: usize, ansatz: Ansatz) -> Result<Vec<f64>> {
    (1..=order)
        .map(|i| {
            laws.iter()
                .find(|r| r.order == order && r.ansatz == ansatz && r.law.index == i)
                .map(|r| r.law.beta * (n as f64).powf(r.law.gamma))
                .ok_or_else(|| Error::InsufficientData(format!("no {ansatz} law for term {i} of order {order}")))
        })
        .collect()
}

/// Header names of the diagnostic series CSV; `e` is the mode-sum enstrophy.
pub const SERIES_HEADER: [&str; 4] = ["t", "E", "e", "maxvort"];

pub fn write_series(path: &Path, series: &DiagnosticSeries) -> Result<()> {
    let header = SERIES_HEADER.map(String::from);
    let rows = (0..series.len()).map(|i| {
        vec![
            fmt_real(series.times[i]),
            fmt_real(series.energy[i]),
            fmt_real(series.enstrophy[i]),
            fmt_real(series.max_vorticity[i]),
        ]
    });
    write_rows(path, &header, rows)
}

pub fn read_series(path: &Path) -> Result<DiagnosticSeries> {
    let table = read_rows(path)?;
    let cols = SERIES_HEADER
        .iter()
        .map(|c| table.column(path, &[c]))
        .collect::<Result<Vec<_>>>()?;
    let mut s = DiagnosticSeries::new(path.display().to_string());
    for row in &table.rows {
        s.push(
            parse(path, row, cols[0])?,
            parse(path, row, cols[1])?,
            parse(path, row, cols[2])?,
            parse(path, row, cols[3])?,
        );
    }
    Ok(s)
}

/// Label of an analyzed run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunLabel {
    pub resolved_half_width: usize,
    pub order: usize,
}

/// `N,order,initial_rate,second_rate`; absent rates are empty cells.
pub fn write_slopes(path: &Path, rows: &[(RunLabel, DecaySlopes)]) -> Result<()> {
    let header = ["N", "order", "initial_rate", "second_rate"].map(String::from);
    let rows = rows.iter().map(|(l, s)| {
        vec![
            l.resolved_half_width.to_string(),
            l.order.to_string(),
            fmt_opt(s.initial_rate),
            fmt_opt(s.second_rate),
        ]
    });
    write_rows(path, &header, rows)
}

pub fn read_slopes(path: &Path) -> Result<Vec<(RunLabel, DecaySlopes)>> {
    let table = read_rows(path)?;
    table
        .rows
        .iter()
        .map(|row| {
            Ok((
                RunLabel {
                    resolved_half_width: parse(path, row, 0)?,
                    order: parse(path, row, 1)?,
                },
                DecaySlopes {
                    initial_rate: parse_opt(path, row, 2)?,
                    second_rate: parse_opt(path, row, 3)?,
                },
            ))
        })
        .collect()
}

/// `N,order,max_enstrophy,enstrophy_time,max_vorticity,vorticity_time`.
pub fn write_maxima(path: &Path, rows: &[(RunLabel, Maxima)]) -> Result<()> {
    let header = [
        "N",
        "order",
        "max_enstrophy",
        "enstrophy_time",
        "max_vorticity",
        "vorticity_time",
    ]
    .map(String::from);
    let rows = rows.iter().map(|(l, m)| {
        vec![
            l.resolved_half_width.to_string(),
            l.order.to_string(),
            fmt_real(m.max_enstrophy),
            fmt_real(m.enstrophy_time),
            fmt_real(m.max_vorticity),
            fmt_real(m.vorticity_time),
        ]
    });
    write_rows(path, &header, rows)
}

/// `t,dE_F,selected` for every truth snapshot examined by a fit.
pub fn write_window(path: &Path, flux: &[(f64, f64)], selected: &[bool]) -> Result<()> {
    let header = ["t", "dE_F", "selected"].map(String::from);
    let rows = flux
        .iter()
        .zip(selected)
        .map(|(&(t, de), &s)| vec![fmt_real(t), fmt_real(de), u8::from(s).to_string()]);
    write_rows(path, &header, rows)
}
