//! A synthetic ACS-like microdata generator.
//!
//! Rows are drawn from a fixed product distribution over race, sex, tenure
//! and age, with income drawn from a logistic model in which every one of
//! those attributes matters. The raw file carries ages in years and incomes
//! in dollars, and goes through the same binning as a real extract.

use std::io::Write;
use std::sync::Arc;

use da_core::mechanisms::seeded_rng;
use da_core::tabular::{read_csv, Attribute, Binning, Dataset, Schema};
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::error::{Error, Result};

/// Row count of the bundled dataset.
pub const BUNDLED_ROWS: usize = 10_000;
/// Seed of the bundled dataset.
pub const BUNDLED_SEED: u64 = 1;

const RACE_WEIGHTS: [f64; 9] = [0.60, 0.12, 0.01, 0.06, 0.01, 0.07, 0.04, 0.05, 0.04];
const RACE_EFFECT: [f64; 9] = [0.5, -1.0, -0.7, 0.9, -0.4, -0.6, 0.0, 0.3, -0.3];
const AGE_WEIGHTS: [f64; 5] = [0.22, 0.24, 0.24, 0.19, 0.11];
const AGE_EFFECT: [f64; 5] = [-2.2, -0.1, 0.6, 0.7, -0.6];
const OWNER_RATE: f64 = 0.65;
const OWNER_EFFECT: f64 = 0.9;
const MALE_EFFECT: f64 = 0.5;
const INTERCEPT: f64 = -1.0;
/// Ages span [18, 93): five brackets of fifteen years.
const AGE_LO: u32 = 18;
const AGE_SPAN: u32 = 15;

/// RACE (9 values, the only quasi-identifier), SEX, OWNERSHP, AGE bracket
/// and the binary INCTOT > 50 000 flag: 360 cells, n_Q = 9.
pub fn acs_schema() -> Arc<Schema> {
    let race: Vec<String> = (1..=9).map(|r| r.to_string()).collect();
    let age: Vec<String> = (0..5).map(|b| b.to_string()).collect();
    Arc::new(
        Schema::new(vec![
            Attribute::categorical("RACE", race).quasi_identifier(),
            Attribute::categorical("SEX", ["1", "2"]),
            Attribute::categorical("OWNERSHP", ["1", "2"]),
            Attribute::categorical("AGE", age),
            Attribute::categorical("INCTOT", ["0", "1"]),
        ])
        .expect("static schema is valid"),
    )
}

/// One raw record: RACE, SEX, OWNERSHP codes, age in years, income in dollars.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawRecord {
    pub race: u32,
    pub sex: u32,
    pub ownershp: u32,
    pub age: u32,
    pub inctot: u32,
}

pub fn generate_raw(rows: usize, seed: u64) -> Vec<RawRecord> {
    let mut rng = seeded_rng(seed);
    let race = WeightedIndex::new(RACE_WEIGHTS).expect("positive weights");
    let age = WeightedIndex::new(AGE_WEIGHTS).expect("positive weights");
    (0..rows)
        .map(|_| {
            let r = race.sample(&mut rng);
            let male = rng.gen_bool(0.5);
            let owner = rng.gen_bool(OWNER_RATE);
            let a = age.sample(&mut rng);
            let z = INTERCEPT
                + RACE_EFFECT[r]
                + AGE_EFFECT[a]
                + if owner { OWNER_EFFECT } else { 0.0 }
                + if male { MALE_EFFECT } else { 0.0 };
            let high = rng.gen_bool(1.0 / (1.0 + (-z).exp()));
            let years = AGE_LO + AGE_SPAN * a as u32 + rng.gen_range(0..AGE_SPAN);
            let dollars = if high {
                rng.gen_range(50_001..200_000)
            } else {
                rng.gen_range(0..=50_000)
            };
            RawRecord {
                race: r as u32 + 1,
                sex: if male { 1 } else { 2 },
                ownershp: if owner { 1 } else { 2 },
                age: years,
                inctot: dollars,
            }
        })
        .collect()
}

pub fn write_raw_csv<W: Write>(records: &[RawRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["RACE", "SEX", "OWNERSHP", "AGE", "INCTOT"])?;
    for r in records {
        w.write_record([
            r.race.to_string(),
            r.sex.to_string(),
            r.ownershp.to_string(),
            r.age.to_string(),
            r.inctot.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// The raw CSV of `rows` records under `seed`.
pub fn synthetic_csv(rows: usize, seed: u64) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_raw_csv(&generate_raw(rows, seed), &mut buf)?;
    Ok(buf)
}

/// Generates, writes and re-reads through the default binning, so the
/// result is exactly what loading the CSV would give.
pub fn synthetic_dataset(rows: usize, seed: u64) -> Result<Dataset> {
    let csv = synthetic_csv(rows, seed)?;
    Ok(read_csv(csv.as_slice(), acs_schema(), Some(&Binning::acs_default()))?)
}

pub fn bundled_dataset() -> Result<Dataset> {
    synthetic_dataset(BUNDLED_ROWS, BUNDLED_SEED)
}
