use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::C64;
use crate::csvio;
use crate::error::{Result, SleError};

/// Which Loewner equation a path or map belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Chordal,
    Radial,
    #[serde(rename = "wholeplane", alias = "whole-plane")]
    WholePlane,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Chordal => "chordal",
            Kind::Radial => "radial",
            Kind::WholePlane => "wholeplane",
        }
    }

    /// Boundary point carrying the driving value `lambda`.
    pub fn boundary_point(self, lambda: f64) -> C64 {
        match self {
            Kind::Chordal => C64::new(lambda, 0.0),
            _ => C64::from_polar(1.0, lambda),
        }
    }
}

impl std::str::FromStr for Kind {
    type Err = SleError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chordal" => Ok(Kind::Chordal),
            "radial" => Ok(Kind::Radial),
            "wholeplane" | "whole-plane" => Ok(Kind::WholePlane),
            _ => Err(SleError::InvalidInput(format!("unknown kind {s:?}"))),
        }
    }
}

/// Driving function sampled on a uniform capacity-time grid
/// `t0, t0 + dt, ..., t0 + (n - 1) dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivingPath {
    pub kind: Kind,
    pub t0: f64,
    pub dt: f64,
    pub lambda: Vec<f64>,
    pub q: Option<Vec<f64>>,
}

impl DrivingPath {
    /// Builds a path and checks its invariants.
    pub fn new(kind: Kind, t0: f64, dt: f64, lambda: Vec<f64>, q: Option<Vec<f64>>) -> Result<Self> {
        let p = DrivingPath { kind, t0, dt, lambda, q };
        p.validate()?;
        Ok(p)
    }

    /// Constant driving `value` on `steps` steps of size `dt`.
    pub fn constant(kind: Kind, t0: f64, dt: f64, steps: usize, value: f64) -> Result<Self> {
        Self::new(kind, t0, dt, vec![value; steps + 1], None)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(SleError::InvalidInput(format!("dt must be positive and finite, got {}", self.dt)));
        }
        if !self.t0.is_finite() {
            return Err(SleError::InvalidInput("t0 must be finite".into()));
        }
        if self.lambda.len() < 2 {
            return Err(SleError::InvalidInput("driving needs at least two samples".into()));
        }
        if let Some(i) = self.lambda.iter().position(|x| !x.is_finite()) {
            return Err(SleError::InvalidInput(format!("lambda[{i}] is not finite")));
        }
        if let Some(q) = &self.q {
            if self.kind == Kind::Chordal {
                return Err(SleError::InvalidInput("a chordal driving carries no force point".into()));
            }
            if q.len() != self.lambda.len() {
                return Err(SleError::InvalidInput("lambda and q lengths differ".into()));
            }
            for (i, (l, q)) in self.lambda.iter().zip(q).enumerate() {
                let z = l - q;
                if !(z > 0.0 && z < 2.0 * PI) {
                    return Err(SleError::InvalidInput(format!(
                        "lambda - q = {z} outside (0, 2π) at sample {i}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Number of steps (samples minus one).
    pub fn steps(&self) -> usize {
        self.lambda.len() - 1
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.steps())
    }

    /// Grid index of time `t`, if `t` lies on the grid (to 1e-9 steps).
    pub fn grid_index(&self, t: f64) -> Result<usize> {
        let x = (t - self.t0) / self.dt;
        let k = x.round();
        if (x - k).abs() > 1e-9 || k < 0.0 || k > self.steps() as f64 {
            return Err(SleError::InvalidInput(format!(
                "time {t} is not a grid point of [{}, {}] with step {}",
                self.t0,
                self.t_end(),
                self.dt
            )));
        }
        Ok(k as usize)
    }

    /// Prefix covering the first `steps` steps.
    pub fn prefix(&self, steps: usize) -> Result<Self> {
        if steps == 0 || steps > self.steps() {
            return Err(SleError::InvalidInput(format!("prefix of {steps} steps out of range")));
        }
        Ok(DrivingPath {
            kind: self.kind,
            t0: self.t0,
            dt: self.dt,
            lambda: self.lambda[..=steps].to_vec(),
            q: self.q.as_ref().map(|q| q[..=steps].to_vec()),
        })
    }

    pub fn write_csv<W: Write>(&self, out: W, comment: Option<&str>) -> Result<()> {
        let rows = (0..self.lambda.len()).map(|k| {
            let mut r = vec![self.time(k), self.lambda[k]];
            if let Some(q) = &self.q {
                r.push(q[k]);
            }
            r
        });
        let header: &[&str] = if self.q.is_some() { &["t", "lambda", "q"] } else { &["t", "lambda"] };
        csvio::write_table(out, comment, header, rows)
    }

    /// Reads the `(t, lambda[, q])` schema. The grid must be uniform.
    pub fn read_csv<R: Read>(kind: Kind, input: R) -> Result<Self> {
        let (header, rows) = csvio::read_table(input)?;
        let it = csvio::column(&header, "t")?;
        let il = csvio::column(&header, "lambda")?;
        let iq = header.iter().position(|h| h == "q");
        if rows.len() < 2 {
            return Err(SleError::InvalidInput("driving needs at least two samples".into()));
        }
        let t: Vec<f64> = rows.iter().map(|r| r[it]).collect();
        let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
        for (k, tk) in t.iter().enumerate() {
            if (tk - (t[0] + k as f64 * dt)).abs() > 1e-9 * (1.0 + tk.abs()) {
                return Err(SleError::InvalidInput("driving grid is not uniform".into()));
            }
        }
        Self::new(
            kind,
            t[0],
            dt,
            rows.iter().map(|r| r[il]).collect(),
            iq.map(|i| rows.iter().map(|r| r[i]).collect()),
        )
    }
}

/// A sampled Loewner trace, `points[k]` at capacity time `t0 + k dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub kind: Kind,
    pub t0: f64,
    pub dt: f64,
    pub points: Vec<C64>,
}

impl Trace {
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn write_csv<W: Write>(&self, out: W, comment: Option<&str>) -> Result<()> {
        let rows = self
            .points
            .iter()
            .enumerate()
            .map(|(k, z)| vec![self.time(k), z.re, z.im]);
        csvio::write_table(out, comment, &["t", "re", "im"], rows)
    }

    /// Reads the `(t, re, im)` schema; only the points are kept, with the
    /// grid reconstructed from the first and last `t`.
    pub fn read_csv<R: Read>(kind: Kind, input: R) -> Result<Self> {
        let (header, rows) = csvio::read_table(input)?;
        let it = csvio::column(&header, "t")?;
        let ire = csvio::column(&header, "re")?;
        let iim = csvio::column(&header, "im")?;
        if rows.len() < 2 {
            return Err(SleError::InvalidInput("trace needs at least two points".into()));
        }
        let t0 = rows[0][it];
        let dt = (rows[rows.len() - 1][it] - t0) / (rows.len() - 1) as f64;
        Ok(Trace {
            kind,
            t0,
            dt,
            points: rows.iter().map(|r| C64::new(r[ire], r[iim])).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_paths() {
        assert!(DrivingPath::new(Kind::Chordal, 0.0, 0.1, vec![0.0], None).is_err());
        assert!(DrivingPath::new(Kind::Chordal, 0.0, 0.0, vec![0.0, 0.0], None).is_err());
        assert!(DrivingPath::new(Kind::Radial, 0.0, 0.1, vec![0.0, 0.0], Some(vec![0.1, -0.1])).is_err());
        assert!(DrivingPath::new(Kind::Radial, 0.0, 0.1, vec![0.0, 0.0], Some(vec![-1.0, -1.0])).is_ok());
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let p = DrivingPath::new(Kind::Radial, -2.0, 0.25, vec![0.1, 0.2, 1.0 / 3.0], Some(vec![-1.0, -2.0, -3.0]))
            .unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf, Some("hello")).unwrap();
        let back = DrivingPath::read_csv(Kind::Radial, buf.as_slice()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn grid_index_checks_alignment() {
        let p = DrivingPath::constant(Kind::Chordal, 0.0, 0.1, 10, 0.0).unwrap();
        assert_eq!(p.grid_index(0.5).unwrap(), 5);
        assert!(p.grid_index(0.55).is_err());
        assert!(p.grid_index(1.5).is_err());
    }
}
