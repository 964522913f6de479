//! Parser for HMD-style 1x1 period life-table text.
//!
//! The format is whitespace-delimited columns with a header line naming at
//! least `Year`, `Age`, and `qx`. A title line (and anything else before the
//! header) is ignored. Ages run "0".."109" plus a terminal "110+" row that
//! is discarded. Missing cells are marked "." in the source data; any year
//! with a non-numeric or missing qx for ages 0-109 is skipped and reported
//! rather than imputed, because the calibration matrix needs complete
//! columns.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lifetable::{MortalitySchedule, Sex, AGE_GROUPS};

/// A year that could not be turned into a complete schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedYear {
    pub population_code: String,
    pub sex: Sex,
    pub year: i32,
    pub reason: String,
}

/// Parse output: complete schedules in ascending year order plus
/// diagnostics for every skipped year.
#[derive(Debug, Clone)]
pub struct ParsedLifeTables {
    pub schedules: Vec<MortalitySchedule>,
    pub skipped: Vec<SkippedYear>,
}

struct YearAccum {
    qx: Vec<Option<f64>>,
    problem: Option<String>,
}

impl YearAccum {
    fn new() -> Self {
        YearAccum {
            qx: vec![None; AGE_GROUPS],
            problem: None,
        }
    }
}

/// Parse one sex's life-table text into per-year schedules.
pub fn parse_hmd_lifetable(
    text: &str,
    sex: Sex,
    population_code: &str,
) -> Result<ParsedLifeTables> {
    let mut lines = text.lines();
    let header = find_header(&mut lines)?;

    let mut years: BTreeMap<i32, YearAccum> = BTreeMap::new();
    let mut skipped = Vec::new();

    for line in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let needed = header.year.max(header.age).max(header.qx);
        if tokens.len() <= needed {
            // Short row: attribute to its year when possible.
            if let Some(year) = tokens.get(header.year).and_then(|t| t.parse::<i32>().ok()) {
                years
                    .entry(year)
                    .or_insert_with(YearAccum::new)
                    .problem
                    .get_or_insert_with(|| "truncated row".to_owned());
            }
            continue;
        }

        let year: i32 = match tokens[header.year].parse() {
            Ok(y) => y,
            Err(_) => {
                skipped.push(SkippedYear {
                    population_code: population_code.to_owned(),
                    sex,
                    year: 0,
                    reason: format!("unparseable year token {:?}", tokens[header.year]),
                });
                continue;
            }
        };
        let accum = years.entry(year).or_insert_with(YearAccum::new);

        let age_token = tokens[header.age];
        if age_token == "110+" {
            continue; // terminal open interval, discarded by rule
        }
        let age: usize = match age_token.parse() {
            Ok(a) if a < AGE_GROUPS => a,
            Ok(_) => continue, // ages beyond 109 other than "110+" (not expected)
            Err(_) => {
                accum
                    .problem
                    .get_or_insert_with(|| format!("unparseable age token {age_token:?}"));
                continue;
            }
        };

        match tokens[header.qx].parse::<f64>() {
            Ok(q) if q.is_finite() => accum.qx[age] = Some(q),
            _ => {
                accum.problem.get_or_insert_with(|| {
                    format!("non-numeric qx {:?} at age {age}", tokens[header.qx])
                });
            }
        }
    }

    let mut schedules = Vec::new();
    for (year, accum) in years {
        if let Some(reason) = accum.problem {
            skipped.push(SkippedYear {
                population_code: population_code.to_owned(),
                sex,
                year,
                reason,
            });
            continue;
        }
        let missing = accum.qx.iter().filter(|q| q.is_none()).count();
        if missing > 0 {
            skipped.push(SkippedYear {
                population_code: population_code.to_owned(),
                sex,
                year,
                reason: format!(
                    "only {} of {AGE_GROUPS} age rows present",
                    AGE_GROUPS - missing
                ),
            });
            continue;
        }
        let qx: Vec<f64> = accum.qx.into_iter().map(|q| q.unwrap()).collect();
        match MortalitySchedule::new(sex, population_code, year, qx) {
            Ok(s) => schedules.push(s),
            Err(e) => skipped.push(SkippedYear {
                population_code: population_code.to_owned(),
                sex,
                year,
                reason: e.to_string(),
            }),
        }
    }

    Ok(ParsedLifeTables { schedules, skipped })
}

struct HeaderIndex {
    year: usize,
    age: usize,
    qx: usize,
}

fn find_header<'a>(lines: &mut impl Iterator<Item = &'a str>) -> Result<HeaderIndex> {
    for line in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let find = |name: &str| tokens.iter().position(|t| *t == name);
        if let (Some(year), Some(age), Some(qx)) = (find("Year"), find("Age"), find("qx")) {
            return Ok(HeaderIndex { year, age, qx });
        }
    }
    Err(Error::parse(
        "no header line containing columns Year, Age, qx".to_owned(),
    ))
}
