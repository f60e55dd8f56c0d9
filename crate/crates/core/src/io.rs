//! CSV and JSON forms of grid data.
//!
//! CSV: a header line `# mongeo v1, n=<n>, m=<m>, T=<T>` followed by `m + 1` rows of
//! `n + 1` comma-separated values, each written with 17 significant digits so that a
//! write/read cycle reproduces every double bit for bit. A single map or profile uses
//! `m = 0`.
//!
//! JSON: the envelope `{"n": .., "m": .., "T": .., "values": [[..], ..]}`.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{SpaceGrid, TimeGrid};
use crate::map::MonotoneMap;
use crate::path::{PathGrid, VelocityField};

const MAGIC: &str = "# mongeo v1";

/// Raw table of nodal values with its grid metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct GridData {
    pub n: usize,
    pub m: usize,
    pub horizon: f64,
    pub values: Array2<f64>,
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    n: usize,
    m: usize,
    #[serde(rename = "T")]
    horizon: f64,
    values: Vec<Vec<f64>>,
}

impl GridData {
    pub fn new(n: usize, m: usize, horizon: f64, values: Array2<f64>) -> Result<Self> {
        if values.dim() != (m + 1, n + 1) {
            return Err(Error::Shape(format!(
                "table has shape {:?}, header says ({}, {})",
                values.dim(),
                m + 1,
                n + 1
            )));
        }
        if n == 0 {
            return Err(Error::Shape("need at least 2 space nodes".into()));
        }
        Ok(Self { n, m, horizon, values })
    }

    pub fn from_map(map: &MonotoneMap) -> Self {
        Self::from_row(map.values())
    }

    /// A single row, e.g. an initial velocity profile.
    pub fn from_row(row: &[f64]) -> Self {
        let values = Array2::from_shape_vec((1, row.len()), row.to_vec()).expect("one row");
        Self { n: row.len() - 1, m: 0, horizon: 0.0, values }
    }

    pub fn from_path(path: &PathGrid) -> Self {
        let t = path.tgrid();
        Self { n: path.sgrid().cells(), m: t.steps(), horizon: t.horizon(), values: path.values().clone() }
    }

    pub fn from_velocity(v: &VelocityField) -> Self {
        let t = v.tgrid();
        Self { n: v.sgrid().cells(), m: t.steps(), horizon: t.horizon(), values: v.values().clone() }
    }

    fn grids(&self) -> Result<(TimeGrid, SpaceGrid)> {
        Ok((TimeGrid::new(self.m, self.horizon)?, SpaceGrid::new(self.n)?))
    }

    pub fn to_path(&self) -> Result<PathGrid> {
        let (t, s) = self.grids()?;
        PathGrid::new(t, s, self.values.clone())
    }

    pub fn to_velocity(&self) -> Result<VelocityField> {
        let (t, s) = self.grids()?;
        VelocityField::new(t, s, self.values.clone())
    }

    /// A single-row table as a map; multi-row tables must use [`GridData::to_path`].
    pub fn to_map(&self) -> Result<MonotoneMap> {
        MonotoneMap::new(self.single_row()?)
    }

    pub fn single_row(&self) -> Result<Vec<f64>> {
        if self.values.nrows() != 1 {
            return Err(Error::Shape(format!("expected a single row, found {}", self.values.nrows())));
        }
        Ok(self.values.row(0).to_vec())
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{MAGIC}, n={}, m={}, T={}\n", self.n, self.m, self.horizon);
        for row in self.values.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty file".into()))?;
        let (n, m, horizon) = parse_header(header)?;
        let mut data = Vec::with_capacity((m + 1) * (n + 1));
        let mut rows = 0;
        for (k, line) in lines.enumerate() {
            let before = data.len();
            for (j, field) in line.split(',').enumerate() {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("row {k}, column {j}: cannot read {:?}", field.trim())))?;
                data.push(v);
            }
            if data.len() - before != n + 1 {
                return Err(Error::Parse(format!("row {k} has {} values, expected {}", data.len() - before, n + 1)));
            }
            rows += 1;
        }
        if rows != m + 1 {
            return Err(Error::Parse(format!("found {rows} rows, header says {}", m + 1)));
        }
        let values = Array2::from_shape_vec((m + 1, n + 1), data).expect("shape checked");
        Self::new(n, m, horizon, values)
    }

    pub fn to_json(&self) -> String {
        let env = Envelope {
            n: self.n,
            m: self.m,
            horizon: self.horizon,
            values: self.values.rows().into_iter().map(|r| r.to_vec()).collect(),
        };
        serde_json::to_string(&env).expect("finite values serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let env: Envelope = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let rows = env.values.len();
        if rows != env.m + 1 || env.values.iter().any(|r| r.len() != env.n + 1) {
            return Err(Error::Parse(format!("values do not match n = {}, m = {}", env.n, env.m)));
        }
        let data: Vec<f64> = env.values.into_iter().flatten().collect();
        let values = Array2::from_shape_vec((rows, env.n + 1), data).expect("shape checked");
        Self::new(env.n, env.m, env.horizon, values)
    }
}

fn parse_header(line: &str) -> Result<(usize, usize, f64)> {
    let rest = line
        .trim()
        .strip_prefix(MAGIC)
        .ok_or_else(|| Error::Parse(format!("missing header {MAGIC:?}")))?;
    let mut n = None;
    let mut m = None;
    let mut t = None;
    for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part.split_once('=').ok_or_else(|| Error::Parse(format!("bad header field {part:?}")))?;
        let bad = || Error::Parse(format!("bad header value {part:?}"));
        match key.trim() {
            "n" => n = Some(value.trim().parse::<usize>().map_err(|_| bad())?),
            "m" => m = Some(value.trim().parse::<usize>().map_err(|_| bad())?),
            "T" => t = Some(value.trim().parse::<f64>().map_err(|_| bad())?),
            _ => return Err(Error::Parse(format!("unknown header field {key:?}"))),
        }
    }
    match (n, m, t) {
        (Some(n), Some(m), Some(t)) => Ok((n, m, t)),
        _ => Err(Error::Parse("header needs n, m and T".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_layout() {
        let map = MonotoneMap::new(vec![0.0, 0.25, 1.0]).unwrap();
        let csv = GridData::from_map(&map).to_csv();
        assert_eq!(
            csv,
            "# mongeo v1, n=2, m=0, T=0\n0.0000000000000000e0,2.5000000000000000e-1,1.0000000000000000e0\n"
        );
        assert_eq!(GridData::from_csv(&csv).unwrap().to_map().unwrap(), map);
    }

    #[test]
    fn path_round_trip() {
        let path = PathGrid::from_fn(TimeGrid::new(3, 0.3).unwrap(), SpaceGrid::new(7).unwrap(), |t, x| {
            x + t * x * (1.0 - x) / 3.0
        })
        .unwrap();
        let data = GridData::from_path(&path);
        assert_eq!(GridData::from_csv(&data.to_csv()).unwrap().to_path().unwrap(), path);
        assert_eq!(GridData::from_json(&data.to_json()).unwrap().to_path().unwrap(), path);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(GridData::from_csv(""), Err(Error::Parse(_))));
        assert!(matches!(GridData::from_csv("0,1\n"), Err(Error::Parse(_))));
        assert!(matches!(GridData::from_csv("# mongeo v1, n=1, m=0, T=0\n0,1,2\n"), Err(Error::Parse(_))));
        assert!(matches!(GridData::from_csv("# mongeo v1, n=1, m=1, T=1\n0,1\n"), Err(Error::Parse(_))));
        let bad = GridData::from_csv("# mongeo v1, n=3, m=0, T=0\n0,0.5,0.4,1\n").unwrap();
        assert!(matches!(bad.to_map(), Err(Error::MonotonicityViolation { row: 0, node: 1, .. })));
    }

    proptest! {
        #[test]
        fn csv_and_json_are_bit_exact(
            rows in 1usize..4,
            cols in 2usize..9,
            seed in proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 36),
            horizon in 0.0f64..10.0,
        ) {
            let values = Array2::from_shape_fn((rows, cols), |(k, j)| seed[(k * cols + j) % seed.len()]);
            let data = GridData::new(cols - 1, rows - 1, horizon, values).unwrap();
            let back = GridData::from_csv(&data.to_csv()).unwrap();
            prop_assert_eq!(back.horizon.to_bits(), horizon.to_bits());
            for (a, b) in back.values.iter().zip(data.values.iter()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
            let back = GridData::from_json(&data.to_json()).unwrap();
            for (a, b) in back.values.iter().zip(data.values.iter()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
