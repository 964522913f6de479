//! Log-quadratic baseline model on five-year age groups.
//!
//! Structural form, evaluated with externally supplied coefficients:
//!
//! ```text
//! log10(m_x) = a_x + b_x * h + c_x * h^2 + v_x * k,    h = log10(5q0)
//! ```
//!
//! With no adult input `k = 0`; otherwise `k` is found by root-finding so
//! that the schedule's 45q15 matches the supplied value. Death rates
//! convert to death probabilities through the standard life-table relation
//! `nqx = n*m / (1 + (n - nax)*m)` with `nax = n/2`, except `a0 = 0.1` for
//! the infant group and `1.5` for ages 1-4.
//!
//! Coefficients are not re-derived here; they load from a CSV with columns
//! `sex,age_group_start,n,a,b,c,v` (base-10 logarithm convention). For
//! demonstrations and tests without the published table,
//! [`fit_demo_coefficients`] estimates a table of the same structural form
//! from any corpus.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lifetable::{clamp_probability, Corpus, Sex, AGE_GROUPS};
use crate::linalg::{ols_fit, svd, DenseMatrix};
use crate::validation::{FiveYearBaseline, FIVE_YEAR_GROUPS};

/// Coefficients for one age group.
#[derive(Debug, Clone, PartialEq)]
pub struct LogQuadRow {
    pub age_start: usize,
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub v: f64,
}

/// Per-sex coefficient tables, validated to tile ages 0-109 contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct LogQuadCoefficients {
    rows: BTreeMap<Sex, Vec<LogQuadRow>>,
}

/// One predicted cell: the death probability for `[age_start, age_start+n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiveYearCell {
    pub age_start: usize,
    pub n: usize,
    pub q: f64,
}

impl LogQuadCoefficients {
    pub fn new(mut rows_by_sex: BTreeMap<Sex, Vec<LogQuadRow>>) -> Result<Self> {
        for (sex, rows) in rows_by_sex.iter_mut() {
            rows.sort_by_key(|r| r.age_start);
            rows.retain(|r| r.age_start < AGE_GROUPS);
            let mut next = 0usize;
            for row in rows.iter() {
                if row.age_start != next {
                    return Err(Error::argument(format!(
                        "{sex} coefficient rows do not tile the ages: expected group start {next}, got {}",
                        row.age_start
                    )));
                }
                if row.n == 0 {
                    return Err(Error::argument(format!(
                        "{sex} group at age {next} has width 0"
                    )));
                }
                next += row.n;
            }
            if next != AGE_GROUPS {
                return Err(Error::argument(format!(
                    "{sex} coefficient rows cover ages 0-{} but must cover 0-{}",
                    next.saturating_sub(1),
                    AGE_GROUPS - 1
                )));
            }
        }
        Ok(LogQuadCoefficients { rows: rows_by_sex })
    }

    pub fn rows(&self, sex: Sex) -> Result<&[LogQuadRow]> {
        self.rows
            .get(&sex)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::argument(format!("no {sex} coefficients loaded")))
    }

    pub fn has_sex(&self, sex: Sex) -> bool {
        self.rows.contains_key(&sex)
    }
}

/// Parse the coefficient CSV (header `sex,age_group_start,n,a,b,c,v`;
/// `#` starts a comment line).
pub fn load_logquad_csv(text: &str) -> Result<LogQuadCoefficients> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::parse("empty coefficient file"))?;
    let expected = "sex,age_group_start,n,a,b,c,v";
    if header.replace(' ', "") != expected {
        return Err(Error::parse(format!(
            "coefficient header must be {expected:?}, got {header:?}"
        )));
    }
    let mut rows_by_sex: BTreeMap<Sex, Vec<LogQuadRow>> = BTreeMap::new();
    for (idx, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 7 {
            return Err(Error::parse(format!(
                "coefficient row {} has {} fields, expected 7",
                idx + 2,
                fields.len()
            )));
        }
        let sex: Sex = fields[0].parse()?;
        let parse_num = |what: &str, s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::parse(format!("bad {what} value {s:?} in row {}", idx + 2)))
        };
        rows_by_sex.entry(sex).or_default().push(LogQuadRow {
            age_start: parse_num("age_group_start", fields[1])? as usize,
            n: parse_num("n", fields[2])? as usize,
            a: parse_num("a", fields[3])?,
            b: parse_num("b", fields[4])?,
            c: parse_num("c", fields[5])?,
            v: parse_num("v", fields[6])?,
        });
    }
    LogQuadCoefficients::new(rows_by_sex)
}

/// Load coefficients from a file path.
pub fn load_logquad_file(path: &Path) -> Result<LogQuadCoefficients> {
    load_logquad_csv(&std::fs::read_to_string(path)?)
}

fn schedule_at(rows: &[LogQuadRow], h: f64, k: f64) -> Vec<FiveYearCell> {
    rows.iter()
        .map(|row| {
            let log_m = row.a + row.b * h + row.c * h * h + row.v * k;
            let m = 10f64.powf(log_m);
            let n = row.n as f64;
            let nax = match (row.age_start, row.n) {
                (0, 1) => 0.1,
                (1, 4) => 1.5,
                _ => n / 2.0,
            };
            let q = clamp_probability(n * m / (1.0 + (n - nax) * m));
            FiveYearCell {
                age_start: row.age_start,
                n: row.n,
                q,
            }
        })
        .collect()
}

/// 45q15 of a cell schedule; the cells must tile [15, 60) exactly.
fn adult_aggregate(cells: &[FiveYearCell]) -> Result<f64> {
    let mut survival = 1.0;
    let mut covered = 15usize;
    for cell in cells {
        if cell.age_start < 15 || cell.age_start >= 60 {
            continue;
        }
        if cell.age_start != covered {
            return Err(Error::argument(format!(
                "age groups do not tile [15, 60): gap at {covered}"
            )));
        }
        survival *= 1.0 - cell.q;
        covered += cell.n;
    }
    if covered != 60 {
        return Err(Error::argument("age groups do not reach age 60"));
    }
    Ok(1.0 - survival)
}

/// Predict the baseline's native age-group schedule.
///
/// With `q45` supplied, `k` is chosen by bisection (initial bracket
/// [-10, 10], geometrically expanded when needed) so the schedule's 45q15
/// matches the input within 1e-8.
pub fn logquad_predict(
    q5: f64,
    q45: Option<f64>,
    sex: Sex,
    coeffs: &LogQuadCoefficients,
) -> Result<Vec<FiveYearCell>> {
    if !(q5 > 0.0 && q5 < 1.0) {
        return Err(Error::argument(format!("5q0 must be in (0, 1), got {q5}")));
    }
    let rows = coeffs.rows(sex)?;
    let h = q5.log10();
    let k = match q45 {
        None => 0.0,
        Some(target) => {
            if !(target > 0.0 && target < 1.0) {
                return Err(Error::argument(format!(
                    "45q15 must be in (0, 1), got {target}"
                )));
            }
            solve_k(rows, h, target)?
        }
    };
    Ok(schedule_at(rows, h, k))
}

const K_TOL: f64 = 1e-8;

fn solve_k(rows: &[LogQuadRow], h: f64, target: f64) -> Result<f64> {
    let f = |k: f64| -> Result<f64> { Ok(adult_aggregate(&schedule_at(rows, h, k))? - target) };

    let (mut lo, mut hi) = (-10.0f64, 10.0f64);
    let mut f_lo = f(lo)?;
    let mut f_hi = f(hi)?;
    // Expand geometrically until the root is bracketed.
    let mut expansions = 0;
    while f_lo.signum() == f_hi.signum() {
        expansions += 1;
        if expansions > 20 {
            return Err(Error::numeric(format!(
                "no sign change for k in [{lo}, {hi}] while matching 45q15 = {target}"
            )));
        }
        lo *= 2.0;
        hi *= 2.0;
        f_lo = f(lo)?;
        f_hi = f(hi)?;
    }

    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid)?;
        if f_mid.abs() <= K_TOL || (hi - lo) < 1e-14 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::numeric(format!(
        "bisection for k did not reach tolerance {K_TOL} in [{lo}, {hi}]"
    )))
}

/// Convert a native cell schedule to the 22 standard five-year groups,
/// merging sub-five-year cells (e.g. ages 0 and 1-4) by survival products.
pub fn to_standard_five_year(cells: &[FiveYearCell]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(FIVE_YEAR_GROUPS);
    for g in 0..FIVE_YEAR_GROUPS {
        let (start, end) = (5 * g, 5 * g + 5);
        let members: Vec<&FiveYearCell> = cells
            .iter()
            .filter(|c| c.age_start >= start && c.age_start < end)
            .collect();
        let mut covered = start;
        for cell in &members {
            if cell.age_start != covered {
                return Err(Error::argument(format!(
                    "age groups do not tile [{start}, {end}): gap at {covered}"
                )));
            }
            covered += cell.n;
        }
        if covered != end {
            return Err(Error::argument(format!(
                "age groups do not tile [{start}, {end}): stop at {covered}"
            )));
        }
        if members.len() == 1 {
            out.push(members[0].q);
        } else {
            let survival: f64 = members.iter().map(|c| 1.0 - c.q).product();
            out.push(1.0 - survival);
        }
    }
    Ok(out)
}

/// The baseline model: coefficient table plus the conversion to standard
/// groups, usable anywhere a [`FiveYearBaseline`] is expected.
#[derive(Debug, Clone, PartialEq)]
pub struct LogQuadModel {
    pub coefficients: LogQuadCoefficients,
}

impl LogQuadModel {
    pub fn new(coefficients: LogQuadCoefficients) -> Self {
        LogQuadModel { coefficients }
    }
}

impl FiveYearBaseline for LogQuadModel {
    fn predict_five_year(&self, sex: Sex, q5: f64, q45: Option<f64>) -> Result<Vec<f64>> {
        to_standard_five_year(&logquad_predict(q5, q45, sex, &self.coefficients)?)
    }
}

/// Estimate a coefficient table of the baseline's structural form from a
/// pair of corpora, for demonstrations and tests when the published table
/// is not at hand. Age groups are 0, 1-4, then five-year groups; `v_x` is
/// the first left singular vector of the quadratic fit's residuals, sign-
/// normalized to be non-negative on adult ages.
pub fn fit_demo_coefficients(corpus_f: &Corpus, corpus_m: &Corpus) -> Result<LogQuadCoefficients> {
    let mut rows_by_sex = BTreeMap::new();
    for corpus in [corpus_f, corpus_m] {
        let sex = corpus.uniform_sex()?;
        rows_by_sex.insert(sex, fit_demo_sex(corpus)?);
    }
    LogQuadCoefficients::new(rows_by_sex)
}

fn demo_groups() -> Vec<(usize, usize)> {
    let mut groups = vec![(0usize, 1usize), (1, 4)];
    groups.extend((1..FIVE_YEAR_GROUPS).map(|g| (5 * g, 5)));
    groups
}

fn fit_demo_sex(corpus: &Corpus) -> Result<Vec<LogQuadRow>> {
    let groups = demo_groups();
    let l = corpus.len();

    // log10 death rates per group, from the group death probabilities via
    // the same nax convention used at prediction time.
    let mut log_m = vec![vec![0.0; l]; groups.len()];
    let mut hs = vec![0.0; l];
    for (col, schedule) in corpus.schedules.iter().enumerate() {
        hs[col] = schedule.child_mortality().log10();
        for (g, &(start, n)) in groups.iter().enumerate() {
            let survival: f64 = schedule.qx()[start..start + n]
                .iter()
                .map(|q| 1.0 - q)
                .product();
            let q = 1.0 - survival;
            let nf = n as f64;
            let nax = match (start, n) {
                (0, 1) => 0.1,
                (1, 4) => 1.5,
                _ => nf / 2.0,
            };
            // Invert q = n m / (1 + (n - nax) m).
            let m = q / (nf - (nf - nax) * q);
            log_m[g][col] = m.max(1e-12).log10();
        }
    }

    let design = DenseMatrix::from_fn(l, 2, |r, c| if c == 0 { hs[r] } else { hs[r] * hs[r] })?;
    let mut rows = Vec::with_capacity(groups.len());
    let mut residuals = DenseMatrix::zeros(groups.len(), l);
    for (g, &(start, n)) in groups.iter().enumerate() {
        let fit = ols_fit(&design, &log_m[g], true)?;
        for col in 0..l {
            let fitted = fit.coefficients[0]
                + fit.coefficients[1] * hs[col]
                + fit.coefficients[2] * hs[col] * hs[col];
            residuals.set(g, col, log_m[g][col] - fitted);
        }
        rows.push(LogQuadRow {
            age_start: start,
            n,
            a: fit.coefficients[0],
            b: fit.coefficients[1],
            c: fit.coefficients[2],
            v: 0.0,
        });
    }

    // First left singular vector of the residuals is the correction shape.
    let factors = svd(&residuals, 1)?;
    let mut v: Vec<f64> = (0..groups.len()).map(|g| factors.u.get(g, 0)).collect();
    let adult_mass: f64 = (4..12).map(|g| v[g]).sum();
    if adult_mass < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    for (row, vx) in rows.iter_mut().zip(v) {
        row.v = vx;
    }
    Ok(rows)
}
