//! Per-run trajectories and their CSV form.
//!
//! Columns: `seed,k,x_1..x_n,feasible,f_obs,best_feasible,acq_value,wall_ms`.
//! `k = 0` marks initial-design rows. Missing values are empty fields;
//! `feasible` is `1` or `0`.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub seed: u64,
    pub k: usize,
    pub x: Vec<f64>,
    pub feasible: bool,
    pub f_obs: Option<f64>,
    /// Best feasible objective over all rows up to and including this one.
    pub best_feasible: Option<f64>,
    /// Acquisition value at the chosen point; absent for the initial design.
    pub acq_value: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
}

fn header(dim: usize) -> Vec<String> {
    let mut h = vec!["seed".to_string(), "k".to_string()];
    h.extend((1..=dim).map(|i| format!("x_{i}")));
    h.extend(["feasible", "f_obs", "best_feasible", "acq_value", "wall_ms"].map(String::from));
    h
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_f64(s: &str, line: u64, col: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| Error::Format(format!("line {line}: column {col}: not a number: {s:?}")))
}

fn parse_opt(s: &str, line: u64, col: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_f64(s, line, col).map(Some)
    }
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, |r| r.x.len())
    }

    /// Acquisition-phase rows (`k ≥ 1`).
    pub fn acquired(&self) -> impl Iterator<Item = &TrajectoryRow> {
        self.rows.iter().filter(|r| r.k > 0)
    }

    pub fn budget(&self) -> usize {
        self.rows.iter().map(|r| r.k).max().unwrap_or(0)
    }

    /// Best feasible value after each iteration `0..=budget`.
    pub fn best_by_iteration(&self) -> Vec<Option<f64>> {
        let mut out = vec![None; self.budget() + 1];
        for r in &self.rows {
            out[r.k] = r.best_feasible;
        }
        for k in 1..out.len() {
            if out[k].is_none() {
                out[k] = out[k - 1];
            }
        }
        out
    }

    pub fn final_best(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.best_feasible)
    }

    /// Fraction of acquisition-phase evaluations that were feasible.
    pub fn ratio_of_feasible(&self) -> Option<f64> {
        let n = self.acquired().count();
        (n > 0).then(|| self.acquired().filter(|r| r.feasible).count() as f64 / n as f64)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(header(self.dim()))?;
        for r in &self.rows {
            let mut rec = vec![r.seed.to_string(), r.k.to_string()];
            rec.extend(r.x.iter().map(|v| v.to_string()));
            rec.push(if r.feasible { "1".into() } else { "0".into() });
            rec.push(opt(r.f_obs));
            rec.push(opt(r.best_feasible));
            rec.push(opt(r.acq_value));
            rec.push(r.wall_ms.to_string());
            out.write_record(rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let head: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
        if head.len() < 8 {
            return Err(Error::Format(format!("header has {} columns, need at least 8", head.len())));
        }
        let dim = head.len() - 7;
        if head != header(dim) {
            return Err(Error::Format(format!("unexpected header {head:?}")));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let field = |i: usize| rec.get(i).unwrap_or("");
            let seed = field(0).parse().map_err(|_| Error::Format(format!("line {line}: bad seed {:?}", field(0))))?;
            let k = field(1).parse().map_err(|_| Error::Format(format!("line {line}: bad k {:?}", field(1))))?;
            let x = (0..dim).map(|d| parse_f64(field(2 + d), line, &head[2 + d])).collect::<Result<Vec<_>>>()?;
            let feasible = match field(2 + dim) {
                "1" => true,
                "0" => false,
                other => return Err(Error::Format(format!("line {line}: feasible must be 0 or 1, got {other:?}"))),
            };
            rows.push(TrajectoryRow {
                seed,
                k,
                x,
                feasible,
                f_obs: parse_opt(field(3 + dim), line, "f_obs")?,
                best_feasible: parse_opt(field(4 + dim), line, "best_feasible")?,
                acq_value: parse_opt(field(5 + dim), line, "acq_value")?,
                wall_ms: parse_f64(field(6 + dim), line, "wall_ms")?,
            });
        }
        Ok(Self { rows })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}
