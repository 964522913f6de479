//! Deterministic synthetic life-table corpus.
//!
//! Every command and test in the crate can run without a real archive.
//! Schedules are generated as exact linear combinations of four fixed
//! age-varying basis curves on the logit scale:
//!
//! 1. a constant (all-ones) curve, so that level shifts — and the
//!    calibration offset itself — stay inside the component span,
//! 2. a Gompertz–Makeham reference shape with an infant-decline term,
//! 3. a child-mortality loading concentrated below age ~10,
//! 4. an adult-mortality loading covering ages ~15–60.
//!
//! The combination weights vary over a small (level x adult-excess) grid.
//! Because the logit matrix is exactly rank four, a four-component
//! calibration reproduces every schedule to machine precision, which the
//! self-consistency and offset-neutrality tests rely on.

use crate::lifetable::{expit, Corpus, MortalitySchedule, Sex, AGE_GROUPS};

/// Grid size: levels of overall mortality.
const N_LEVELS: usize = 12;
/// Grid size: levels of adult excess mortality.
const N_ADULT: usize = 8;

struct SexParams {
    makeham: f64,
    gompertz_scale: f64,
    gompertz_rate: f64,
    infant_scale: f64,
    infant_decay: f64,
}

fn params(sex: Sex) -> SexParams {
    match sex {
        Sex::Female => SexParams {
            makeham: 3.0e-4,
            gompertz_scale: 1.1e-4,
            gompertz_rate: 0.0827,
            infant_scale: 0.030,
            infant_decay: 1.8,
        },
        Sex::Male => SexParams {
            makeham: 4.0e-4,
            gompertz_scale: 1.35e-4,
            gompertz_rate: 0.0850,
            infant_scale: 0.038,
            infant_decay: 1.75,
        },
    }
}

/// The four logit-scale basis curves for one sex.
pub fn basis(sex: Sex) -> [Vec<f64>; 4] {
    let p = params(sex);
    let ones = vec![1.0; AGE_GROUPS];
    let reference: Vec<f64> = (0..AGE_GROUPS)
        .map(|a| {
            let age = a as f64;
            let hazard = p.makeham
                + p.gompertz_scale * (p.gompertz_rate * age).exp()
                + p.infant_scale * (-age / p.infant_decay).exp();
            let q = 1.0 - (-hazard).exp();
            (q / (1.0 - q)).ln()
        })
        .collect();
    let child: Vec<f64> = (0..AGE_GROUPS).map(|a| (-(a as f64) / 3.0).exp()).collect();
    let adult: Vec<f64> = (0..AGE_GROUPS)
        .map(|a| {
            let age = a as f64;
            expit((age - 14.5) / 2.0) * expit((57.5 - age) / 3.0)
        })
        .collect();
    [ones, reference, child, adult]
}

/// Combination weights for one grid cell: (level, reference, child, adult).
fn grid_weights(level_idx: usize, adult_idx: usize) -> [f64; 4] {
    let t = -1.0 + 2.4 * level_idx as f64 / (N_LEVELS - 1) as f64;
    let v = -0.4 + 1.0 * adult_idx as f64 / (N_ADULT - 1) as f64;
    // The child loading is quadratic in the level so the four weight
    // vectors span four dimensions over the grid.
    let u = 0.3 * t * t + 0.15 * t;
    [t, 1.0, u, v]
}

fn schedule_for(sex: Sex, level_idx: usize, adult_idx: usize, year: i32) -> MortalitySchedule {
    let basis = basis(sex);
    let w = grid_weights(level_idx, adult_idx);
    let qx: Vec<f64> = (0..AGE_GROUPS)
        .map(|a| {
            let y =
                w[0] * basis[0][a] + w[1] * basis[1][a] + w[2] * basis[2][a] + w[3] * basis[3][a];
            expit(y)
        })
        .collect();
    MortalitySchedule::new(sex, "SYN", year, qx).expect("synthetic schedule is valid")
}

/// The bundled corpus for one sex: N_LEVELS x N_ADULT schedules labeled
/// with consecutive years from 1900.
pub fn corpus(sex: Sex) -> Corpus {
    let mut schedules = Vec::with_capacity(N_LEVELS * N_ADULT);
    for level in 0..N_LEVELS {
        for adult in 0..N_ADULT {
            let year = 1900 + (level * N_ADULT + adult) as i32;
            schedules.push(schedule_for(sex, level, adult, year));
        }
    }
    Corpus::new(schedules, format!("synthetic {sex} corpus"))
}

/// Both sexes of the bundled corpus.
pub fn corpora() -> (Corpus, Corpus) {
    (corpus(Sex::Female), corpus(Sex::Male))
}

/// Render a corpus in the HMD 1x1 life-table text format, including a
/// terminal "110+" row per year. Only the qx column carries the schedule;
/// the remaining life-table columns are derived from it.
pub fn hmd_text(corpus: &Corpus, title: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!("{title}\n\n"));
    out.push_str("  Year          Age         mx           qx           ax           lx           dx           Lx           Tx           ex\n");
    for schedule in &corpus.schedules {
        let qx = schedule.qx();
        // Survivorship columns from a radix of 100,000.
        let mut l = 100_000.0f64;
        let mut rows: Vec<(f64, f64, f64)> = Vec::with_capacity(AGE_GROUPS);
        for &q in qx {
            let d = l * q;
            rows.push((l, d, l - 0.5 * d));
            l -= d;
        }
        let t_total: f64 = rows.iter().map(|r| r.2).sum::<f64>() + l * 1.4;
        let mut t_remaining = t_total;
        for (age, &q) in qx.iter().enumerate() {
            let (lx, dx, big_l) = rows[age];
            let m = if q < 1.0 { -(1.0 - q).ln() } else { 1.0 };
            let e = if lx > 0.0 { t_remaining / lx } else { 0.0 };
            out.push_str(&format!(
                "  {:>4}     {:>7}     {:>9.5}   {:>10.8}   {:>4.2}   {:>8.0}   {:>8.0}   {:>9.0}   {:>10.0}   {:>6.2}\n",
                schedule.year, age, m, q, 0.5, lx, dx, big_l, t_remaining, e
            ));
            t_remaining -= big_l;
        }
        out.push_str(&format!(
            "  {:>4}     {:>7}     {:>9.5}   {:>10.8}   {:>4.2}   {:>8.0}   {:>8.0}   {:>9.0}   {:>10.0}   {:>6.2}\n",
            schedule.year,
            "110+",
            0.71,
            1.0,
            1.4,
            l,
            l,
            l * 1.4,
            l * 1.4,
            1.4
        ));
    }
    out
}
