//! Plain-text artifacts: CSV tables and key-value report blocks.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! parsed file reproduces the in-memory values bit for bit.

use std::fmt::Write as _;

use crate::dynamics::JeResult;
use crate::engines::RunReport;
use crate::error::{Error, Result};
use crate::mapping::GapProfile;
use crate::model::{gibbs_reference, AnnealSchedule, CostDiagonal};
use crate::scalar::Real;

pub const RUN_HEADER: &str = "step,t,beta,overlap_gibbs,gs_prob,norm_drift";
pub const FINAL_HEADER: &str = "index,energy,probability,gibbs_probability";
pub const REFERENCE_HEADER: &str = "step,t,beta,gibbs_gs_prob";
pub const GAP_HEADER: &str = "t,beta,lambda0,lambda1,gap";
pub const WORK_HEADER: &str = "sample_index,work_exponent,exp_work";

fn num<T: Real>(x: T) -> f64 {
    x.as_f64()
}

pub fn run_csv<T: Real>(report: &RunReport<T>) -> String {
    let mut out = format!("{RUN_HEADER}\n");
    for r in &report.per_step {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.step,
            num(r.t),
            num(r.beta),
            num(r.overlap_gibbs),
            num(r.gs_prob),
            num(r.norm_drift)
        );
    }
    out
}

/// Final distribution next to the Gibbs distribution at `beta_final`.
pub fn final_csv<T: Real>(report: &RunReport<T>, cost: &CostDiagonal<T>, beta_final: T) -> String {
    let gibbs = gibbs_reference(cost, beta_final);
    let mut out = format!("{FINAL_HEADER}\n");
    for (i, (&p, &e)) in report.final_distribution.iter().zip(cost.energies()).enumerate() {
        let _ = writeln!(out, "{i},{},{},{}", num(e), num(p), num(gibbs.probabilities[i]));
    }
    out
}

/// Instantaneous Gibbs weight of the ground state(s) along the schedule.
pub fn reference_csv<T: Real>(cost: &CostDiagonal<T>, schedule: &AnnealSchedule<T>) -> String {
    let ground = cost.ground_indices();
    let mut out = format!("{REFERENCE_HEADER}\n");
    for k in 0..=schedule.n_steps() {
        let g = gibbs_reference(cost, schedule.beta(k));
        let _ = writeln!(
            out,
            "{k},{},{},{}",
            num(schedule.time(k)),
            num(schedule.beta(k)),
            num(g.probability_on(&ground))
        );
    }
    out
}

pub fn gap_csv<T: Real>(profile: &GapProfile<T>) -> String {
    let mut out = format!("{GAP_HEADER}\n");
    for p in &profile.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            num(p.t),
            num(p.beta),
            num(p.lambda0),
            num(p.lambda1),
            num(p.gap)
        );
    }
    out
}

pub fn work_csv<T: Real>(work_exponents: &[T]) -> String {
    let mut out = format!("{WORK_HEADER}\n");
    for (i, &w) in work_exponents.iter().enumerate() {
        let _ = writeln!(out, "{i},{},{}", num(w), num(w.exp()));
    }
    out
}

pub fn je_report<T: Real>(je: &JeResult<T>) -> String {
    format!(
        "lhs = {}\nrhs = {}\nstderr = {}\nn_samples = {}\n",
        num(je.lhs_estimate),
        num(je.rhs_exact),
        num(je.std_error),
        je.n_samples
    )
}

/// A parsed CSV table of numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Config("empty csv".into()))?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Config(format!("csv row {}: {e}", n + 1)))?;
            if row.len() != header.len() {
                return Err(Error::Config(format!(
                    "csv row {} has {} cells, header has {}",
                    n + 1,
                    row.len(),
                    header.len()
                )));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("csv has no column `{name}`")))?;
        Ok(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn all_finite(&self) -> bool {
        self.rows.iter().flatten().all(|x| x.is_finite())
    }
}

/// Parses `key = value` lines.
pub fn parse_kv(text: &str) -> Result<Vec<(String, f64)>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (k, v) = l
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("malformed line `{l}`")))?;
            let v = v
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("`{l}`: {e}")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

pub fn kv_get(pairs: &[(String, f64)], key: &str) -> Result<f64> {
    pairs
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::Config(format!("missing key `{key}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn work_csv_round_trips_exactly(works in proptest::collection::vec(-50.0f64..50.0, 1..40)) {
            let table = Table::parse(&work_csv(&works)).unwrap();
            prop_assert_eq!(table.column("work_exponent").unwrap(), works.clone());
            prop_assert!(table.all_finite());
        }
    }

    #[test]
    fn je_report_parses_back() {
        let je = JeResult {
            lhs_estimate: 1.25_f64,
            rhs_exact: 1.2500000000001,
            std_error: 0.0,
            n_samples: 0,
        };
        let kv = parse_kv(&je_report(&je)).unwrap();
        assert_eq!(kv_get(&kv, "lhs").unwrap(), 1.25);
        assert_eq!(kv_get(&kv, "rhs").unwrap(), 1.2500000000001);
        assert_eq!(kv_get(&kv, "n_samples").unwrap(), 0.0);
    }

    #[test]
    fn table_rejects_ragged_rows() {
        assert!(Table::parse("a,b\n1,2\n3\n").is_err());
    }
}
