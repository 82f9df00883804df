//! Result tables and their CSV/JSON renderings.
//!
//! CSV output is deterministic: rows keep input order and floats are printed
//! with fixed six-decimal formatting, so identical configurations produce
//! byte-identical files. JSON keeps full float precision.

use serde::Serialize;

use crate::de_engine::SweepOutcome;
use crate::potential::PotentialCurve;
use crate::presets::TableRow;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.6}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_else(|| "--".into())
}

/// `family,states,rate,m,L,kind,value,tol` rows for a sweep.
pub fn threshold_csv(outcomes: &[SweepOutcome]) -> String {
    let mut out = String::from("family,states,rate,m,L,kind,value,tol\n");
    for cell in outcomes {
        let (value, tol) = match &cell.outcome {
            Ok(r) => (fmt_f64(r.value), fmt_f64(r.tolerance)),
            Err(_) => ("--".into(), "--".into()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            cell.family,
            cell.states,
            fmt_f64(cell.rate),
            cell.m,
            cell.chain_length,
            cell.kind,
            value,
            tol
        ));
    }
    out
}

#[derive(Serialize)]
struct SweepRecord<'a> {
    label: &'a str,
    family: &'a str,
    states: usize,
    rate: f64,
    m: usize,
    #[serde(rename = "L")]
    chain_length: usize,
    kind: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bracket: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
}

/// Full-precision JSON rendering of a sweep.
pub fn threshold_json(outcomes: &[SweepOutcome]) -> crate::Result<String> {
    let records: Vec<SweepRecord> = outcomes
        .iter()
        .map(|cell| {
            let (value, tolerance, bracket, error) = match &cell.outcome {
                Ok(r) => (
                    Some(r.value),
                    Some(r.tolerance),
                    Some((r.bracket_lo, r.bracket_hi)),
                    None,
                ),
                Err(e) => (None, None, None, Some(e.as_str())),
            };
            SweepRecord {
                label: &cell.label,
                family: &cell.family,
                states: cell.states,
                rate: cell.rate,
                m: cell.m,
                chain_length: cell.chain_length,
                kind: cell.kind.as_str(),
                value,
                tolerance,
                bracket,
                error,
            }
        })
        .collect();
    Ok(serde_json::to_string_pretty(&records)?)
}

/// One assembled row of a table reproduction: computed values next to the
/// published ones with absolute deviations.
#[derive(Clone, Debug, Serialize)]
pub struct ReproducedRow {
    pub key: String,
    pub ensemble: String,
    pub rate_label: String,
    pub states: usize,
    pub rho2_label: String,
    pub bp: Option<f64>,
    pub paper_bp: Option<f64>,
    pub map: Option<f64>,
    pub paper_map: Option<f64>,
    /// Per coupling memory: `(m, computed, paper)`.
    pub sc: Vec<(usize, Option<f64>, Option<f64>)>,
    pub errors: Vec<String>,
}

impl ReproducedRow {
    pub fn new(row: &TableRow) -> Self {
        ReproducedRow {
            key: row.key(),
            ensemble: row.ensemble.to_string(),
            rate_label: row.rate_label.to_string(),
            states: row.states,
            rho2_label: row.rho2_label.to_string(),
            bp: None,
            paper_bp: row.paper_bp,
            map: None,
            paper_map: row.paper_map,
            sc: row.paper_sc.iter().map(|&(m, v)| (m, None, Some(v))).collect(),
            errors: Vec::new(),
        }
    }

    pub fn max_deviation(&self) -> Option<f64> {
        let mut dev: Option<f64> = None;
        let mut push = |c: Option<f64>, p: Option<f64>| {
            if let (Some(c), Some(p)) = (c, p) {
                let d = (c - p).abs();
                dev = Some(dev.map_or(d, |x: f64| x.max(d)));
            }
        };
        push(self.bp, self.paper_bp);
        push(self.map, self.paper_map);
        for &(_, c, p) in &self.sc {
            push(c, p);
        }
        dev
    }
}

fn dev(c: Option<f64>, p: Option<f64>) -> String {
    match (c, p) {
        (Some(c), Some(p)) => fmt_f64((c - p).abs()),
        _ => "--".into(),
    }
}

/// Wide CSV mirroring a published table's layout: computed, published and
/// deviation columns for BP, MAP and each listed coupling memory.
pub fn reproduce_csv(rows: &[ReproducedRow]) -> String {
    let ms: Vec<usize> = rows
        .first()
        .map(|r| r.sc.iter().map(|&(m, _, _)| m).collect())
        .unwrap_or_default();
    let mut header = String::from("ensemble,rate,states,rho2,eps_bp,paper_bp,dev_bp,eps_map,paper_map,dev_map");
    for m in &ms {
        header.push_str(&format!(",eps_sc{m},paper_sc{m},dev_sc{m}"));
    }
    header.push_str(",status\n");
    let mut out = header;
    for r in rows {
        let mut line = format!(
            "{},{},{},{},{},{},{},{},{},{}",
            r.ensemble,
            r.rate_label,
            r.states,
            r.rho2_label,
            fmt_opt(r.bp),
            fmt_opt(r.paper_bp),
            dev(r.bp, r.paper_bp),
            fmt_opt(r.map),
            fmt_opt(r.paper_map),
            dev(r.map, r.paper_map),
        );
        for &(_, c, p) in &r.sc {
            line.push_str(&format!(",{},{},{}", fmt_opt(c), fmt_opt(p), dev(c, p)));
        }
        if r.errors.is_empty() {
            line.push_str(",ok");
        } else {
            line.push_str(&format!(",error: {}", r.errors.join(" | ").replace(',', ";")));
        }
        line.push('\n');
        out.push_str(&line);
    }
    out
}

pub fn reproduce_json(rows: &[ReproducedRow]) -> crate::Result<String> {
    Ok(serde_json::to_string_pretty(rows)?)
}

/// `(x, U)` CSV of a potential curve.
pub fn potential_csv(curve: &PotentialCurve) -> String {
    let mut out = String::from("x,U\n");
    for &(x, u) in &curve.samples {
        out.push_str(&format!("{},{}\n", fmt_f64(x), fmt_f64(u)));
    }
    out
}

/// `(p..., f...)` CSV of transfer-function evaluations.
pub fn transfer_csv(n: usize, rows: &[(Vec<f64>, Vec<f64>)]) -> String {
    let mut header: Vec<String> = (1..=n).map(|l| format!("p{l}")).collect();
    header.extend((1..=n).map(|l| format!("f{l}")));
    let mut out = header.join(",");
    out.push('\n');
    for (p, f) in rows {
        let cells: Vec<String> = p.iter().chain(f).map(|&x| fmt_f64(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_floats_use_six_decimals() {
        assert_eq!(fmt_f64(0.5), "0.500000");
        assert_eq!(fmt_f64(0.4993), "0.499300");
        assert_eq!(fmt_f64(1.0 / 3.0), "0.333333");
    }

    #[test]
    fn transfer_csv_layout() {
        let rows = vec![(vec![0.5, 0.5], vec![0.25, 0.75])];
        let csv = transfer_csv(2, &rows);
        assert_eq!(
            csv,
            "p1,p2,f1,f2\n0.500000,0.500000,0.250000,0.750000\n"
        );
    }
}
