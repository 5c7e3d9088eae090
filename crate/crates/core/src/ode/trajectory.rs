use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Continuous extension of one accepted step on `[t0, t0 + h]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSegment {
    pub t0: f64,
    pub h: f64,
    pub coeffs: [Vec<f64>; 5],
}

impl DenseSegment {
    fn eval(&self, t: f64) -> Vec<f64> {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let [c1, c2, c3, c4, c5] = &self.coeffs;
        (0..c1.len())
            .map(|i| c1[i] + th * (c2[i] + th1 * (c3[i] + th * (c4[i] + th1 * c5[i]))))
            .collect()
    }
}

/// Accepted steps of an integration together with their dense output.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    segments: Vec<DenseSegment>,
    pub rejected: usize,
}

impl Trajectory {
    pub(crate) fn start(t0: f64, x0: Vec<f64>) -> Self {
        Self {
            times: vec![t0],
            states: vec![x0],
            segments: Vec::new(),
            rejected: 0,
        }
    }

    pub(crate) fn push(&mut self, t: f64, x: Vec<f64>, seg: DenseSegment) {
        self.times.push(t);
        self.states.push(x);
        self.segments.push(seg);
    }

    /// Builds a node-only trajectory (e.g. read back from CSV); sampling
    /// between nodes is linear.
    pub fn from_nodes(times: Vec<f64>, states: Vec<Vec<f64>>) -> Result<Self> {
        if times.is_empty() || times.len() != states.len() {
            return Err(Error::InvalidInput(
                "trajectory needs matching, non-empty times and states".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "times must be strictly increasing".into(),
            ));
        }
        let dim = states[0].len();
        if states
            .iter()
            .any(|s| s.len() != dim || s.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::InvalidInput(
                "states must be finite and of equal length".into(),
            ));
        }
        Ok(Self {
            times,
            states,
            segments: Vec::new(),
            rejected: 0,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn accepted(&self) -> usize {
        self.times.len() - 1
    }

    pub fn t0(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("non-empty")
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("non-empty")
    }

    /// State at `t`: exact at stored nodes, dense output elsewhere.
    pub fn sample(&self, t: f64) -> Result<Vec<f64>> {
        let (t0, t1) = (self.t0(), self.t_end());
        if !(t >= t0 && t <= t1) {
            return Err(Error::OutOfRange { t, t0, t1 });
        }
        let i = self.times.partition_point(|&s| s < t);
        if self.times[i] == t {
            return Ok(self.states[i].clone());
        }
        // t lies strictly inside (times[i-1], times[i])
        if self.segments.len() == self.accepted() {
            Ok(self.segments[i - 1].eval(t))
        } else {
            let (ta, tb) = (self.times[i - 1], self.times[i]);
            let w = (t - ta) / (tb - ta);
            Ok(self.states[i - 1]
                .iter()
                .zip(&self.states[i])
                .map(|(a, b)| a + w * (b - a))
                .collect())
        }
    }

    /// `n >= 2` equally spaced sample times covering the whole span.
    pub fn uniform_times(&self, n: usize) -> Vec<f64> {
        uniform_grid(self.t0(), self.t_end(), n)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        for j in 1..=self.dim() / 2 {
            header.push(format!("x{j}"));
            header.push(format!("y{j}"));
        }
        wtr.write_record(&header)?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let row = std::iter::once(t)
                .chain(s.iter())
                .map(|v| format!("{v:.16e}"));
            wtr.write_record(row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    /// Reads the node table written by [`Trajectory::write_csv`].
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers()?.clone();
        if header.get(0) != Some("t") || header.len() < 3 || header.len() % 2 == 0 {
            return Err(Error::InvalidInput(
                "expected header t,x1,y1[,x2,y2,...]".into(),
            ));
        }
        let mut times = Vec::new();
        let mut states = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let vals = rec
                .iter()
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::InvalidInput(format!("bad number {s:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            times.push(vals[0]);
            states.push(vals[1..].to_vec());
        }
        Self::from_nodes(times, states)
    }

    pub fn read_csv_file(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

pub fn uniform_grid(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| {
            if i == n - 1 {
                t1
            } else {
                t0 + (t1 - t0) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_is_exact() {
        let tr = Trajectory::from_nodes(
            vec![0.0, 0.1, 1.0 / 3.0],
            vec![
                vec![1.0, 2.0, 3.0, 4.0],
                vec![std::f64::consts::PI, -1e-300, 5.0, 6.0],
                vec![7.0, 8.0, 9.0, 1e300],
            ],
        )
        .unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x1,y1,x2,y2\n"));
        let back = Trajectory::read_csv(&buf[..]).unwrap();
        assert_eq!(back.times(), tr.times());
        assert_eq!(back.states(), tr.states());
    }

    #[test]
    fn node_only_sampling_is_linear() {
        let tr =
            Trajectory::from_nodes(vec![0.0, 2.0], vec![vec![0.0, 0.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(tr.sample(0.5).unwrap(), vec![0.5, 1.0]);
        assert!(tr.sample(2.5).is_err());
    }

    #[test]
    fn rejects_non_increasing_times() {
        assert!(Trajectory::from_nodes(vec![0.0, 0.0], vec![vec![1.0, 1.0]; 2]).is_err());
    }

    #[test]
    fn grid_endpoints_exact() {
        let g = uniform_grid(0.0, 3.0, 50);
        assert_eq!(g.len(), 50);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[49], 3.0);
    }
}
