use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use super::GridSpec;
use crate::error::{Error, Result};
use crate::io::fmt_real;

/// Bookkeeping recorded while solving.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    /// Largest one-step increase of `max_i v_i`.
    pub max_principle_slack: f64,
    pub steps: usize,
    /// Wall-clock seconds; not part of the persisted surface.
    pub runtime_secs: f64,
}

/// Discrete `v(t_n, x_i)`, stored one time level per row.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSurface {
    pub grid: GridSpec,
    pub kappa: f64,
    /// Recorded time levels, ascending, always including `0` and the horizon.
    pub times: Vec<f64>,
    /// `values[n][i] = v(times[n], x_i)`.
    pub values: Vec<Vec<f64>>,
    pub theta_fingerprint: String,
    pub psi_fingerprint: String,
    pub diagnostics: SolveDiagnostics,
}

impl ValueSurface {
    pub fn horizon(&self) -> f64 {
        self.grid.horizon
    }

    pub fn initial(&self) -> &[f64] {
        &self.values[0]
    }

    pub fn terminal(&self) -> &[f64] {
        self.values.last().expect("surface has at least one level")
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Linear interpolation in `x` at a stored level, constant beyond the grid.
    pub fn interpolate_level(&self, level: usize, x: f64) -> f64 {
        let row = &self.values[level];
        let s = (x - self.grid.x_min) / self.grid.dx();
        let n = row.len();
        if !(s > 0.0) {
            return row[0];
        }
        if s >= (n - 1) as f64 {
            return row[n - 1];
        }
        let i = s.floor() as usize;
        let w = s - i as f64;
        if w == 0.0 {
            row[i]
        } else {
            row[i] * (1.0 - w) + row[i + 1] * w
        }
    }

    /// Values at every node at time `t`, interpolated linearly between stored levels.
    pub fn slice_at(&self, t: f64) -> Result<Vec<f64>> {
        let (lo, w) = self.locate(t)?;
        if w == 0.0 {
            return Ok(self.values[lo].clone());
        }
        Ok(self.values[lo].iter().zip(&self.values[lo + 1]).map(|(a, b)| a * (1.0 - w) + b * w).collect())
    }

    /// Level index and weight of the next level for time `t`.
    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let horizon = self.horizon();
        let slack = 1e-12 * horizon.max(1.0);
        if !(t >= -slack && t <= horizon + slack) {
            return Err(Error::OutOfHorizon { t, horizon });
        }
        let t = t.clamp(0.0, horizon);
        let k = self.times.partition_point(|&s| s <= t);
        let lo = k.saturating_sub(1);
        if lo + 1 >= self.times.len() || self.times[lo] == t {
            return Ok((lo, 0.0));
        }
        let (t0, t1) = (self.times[lo], self.times[lo + 1]);
        Ok((lo, (t - t0) / (t1 - t0)))
    }

    /// Bilinear interpolation in `(t, x)`.
    pub fn evaluate(&self, t: f64, x: f64) -> Result<f64> {
        let (lo, w) = self.locate(t)?;
        if w == 0.0 {
            return Ok(self.interpolate_level(lo, x));
        }
        Ok(self.interpolate_level(lo, x) * (1.0 - w) + self.interpolate_level(lo + 1, x) * w)
    }

    /// Writes `# key=value` metadata lines followed by `t,x,v` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = std::io::BufWriter::new(out);
        let g = &self.grid;
        writeln!(out, "# x_min={}", fmt_real(g.x_min))?;
        writeln!(out, "# x_max={}", fmt_real(g.x_max))?;
        writeln!(out, "# nx={}", g.nx)?;
        writeln!(out, "# horizon={}", fmt_real(g.horizon))?;
        writeln!(out, "# dt={}", fmt_real(g.dt))?;
        writeln!(out, "# nt={}", g.nt)?;
        writeln!(out, "# kappa={}", fmt_real(self.kappa))?;
        writeln!(out, "# theta_fingerprint={}", self.theta_fingerprint)?;
        writeln!(out, "# psi_fingerprint={}", self.psi_fingerprint)?;
        writeln!(out, "# max_principle_slack={}", fmt_real(self.diagnostics.max_principle_slack))?;
        writeln!(out, "# steps={}", self.diagnostics.steps)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "v"])?;
        for (t, row) in self.times.iter().zip(&self.values) {
            for (i, v) in row.iter().enumerate() {
                w.write_record([fmt_real(*t), fmt_real(g.x(i)), fmt_real(*v)])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = BufReader::new(input);
        let mut meta = std::collections::BTreeMap::new();
        let mut line = String::new();
        let mut header = None;
        loop {
            line.clear();
            if reader.read_line(&mut line)? == 0 {
                break;
            }
            match line.trim_end().strip_prefix("# ") {
                Some(kv) => {
                    let (k, v) =
                        kv.split_once('=').ok_or_else(|| Error::Format(format!("bad metadata line {kv:?}")))?;
                    meta.insert(k.to_string(), v.to_string());
                }
                None => {
                    header = Some(line.trim_end().to_string());
                    break;
                }
            }
        }
        if header.as_deref() != Some("t,x,v") {
            return Err(Error::Format(format!("expected header t,x,v, found {header:?}")));
        }
        let get = |k: &str| meta.get(k).cloned().ok_or_else(|| Error::Format(format!("missing metadata {k}")));
        let real =
            |k: &str| -> Result<f64> { get(k)?.parse().map_err(|_| Error::Format(format!("bad number for {k}"))) };
        let count =
            |k: &str| -> Result<usize> { get(k)?.parse().map_err(|_| Error::Format(format!("bad count for {k}"))) };
        let grid = GridSpec {
            x_min: real("x_min")?,
            x_max: real("x_max")?,
            nx: count("nx")?,
            horizon: real("horizon")?,
            dt: real("dt")?,
            nt: count("nt")?,
        };
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
        let mut times: Vec<f64> = Vec::new();
        let mut values: Vec<Vec<f64>> = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |j: usize| -> Result<f64> {
                rec.get(j).and_then(|s| s.parse().ok()).ok_or_else(|| Error::Format(format!("bad row {rec:?}")))
            };
            let (t, v) = (parse(0)?, parse(2)?);
            if times.last() != Some(&t) {
                times.push(t);
                values.push(Vec::with_capacity(grid.nx));
            }
            values.last_mut().unwrap().push(v);
        }
        if values.is_empty() || values.iter().any(|r| r.len() != grid.nx) {
            return Err(Error::Format("every time level must hold nx values".into()));
        }
        Ok(Self {
            grid,
            kappa: real("kappa")?,
            times,
            values,
            theta_fingerprint: get("theta_fingerprint")?,
            psi_fingerprint: get("psi_fingerprint")?,
            diagnostics: SolveDiagnostics {
                max_principle_slack: real("max_principle_slack")?,
                steps: count("steps")?,
                runtime_secs: 0.0,
            },
        })
    }
}
