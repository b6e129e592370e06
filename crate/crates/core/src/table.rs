//! Dense per-node tables of class vectors.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// One length-`cols` row per node, stored row-major.
///
/// Used for base predictions, one-hot label rows, diffused errors and the
/// final prediction matrix alike.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTable {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl PredictionTable {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        PredictionTable {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(rows * cols, data.len(), "table data length"));
        }
        Ok(PredictionTable { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::dim(cols, r.len(), "table row length"));
            }
            data.extend_from_slice(r);
        }
        Ok(PredictionTable {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, u: usize) -> &[f64] {
        &self.data[u * self.cols..(u + 1) * self.cols]
    }

    pub fn row_mut(&mut self, u: usize) -> &mut [f64] {
        &mut self.data[u * self.cols..(u + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Largest absolute elementwise difference.
    pub fn linf_distance(&self, other: &PredictionTable) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs())))
    }

    pub fn check_same_shape(&self, other: &PredictionTable) -> Result<()> {
        if self.rows != other.rows {
            return Err(Error::dim(self.rows, other.rows, "table rows"));
        }
        if self.cols != other.cols {
            return Err(Error::dim(self.cols, other.cols, "table columns"));
        }
        Ok(())
    }

    /// Index of the largest entry of row `u`, ties broken by lowest index.
    pub fn argmax(&self, u: usize) -> usize {
        argmax(self.row(u))
    }

    /// `<node_id>\t<c_1>,...,<c_C>` per row.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (u, row) in self.iter_rows().enumerate() {
            write!(w, "{u}\t")?;
            for (i, x) in row.iter().enumerate() {
                if i > 0 {
                    w.write_all(b",")?;
                }
                write!(w, "{x:?}")?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(reader: R, origin: &Path) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(origin, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message,
            };
            let (id, values) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected `<node_id>\\t<values>`".into()))?;
            let id: usize = id
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("bad node id {id:?}")))?;
            if id != rows.len() {
                return Err(parse_err(format!(
                    "rows must be ordered by node id (expected {}, found {id})",
                    rows.len()
                )));
            }
            let row = values
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| parse_err(format!("bad value: {e}")))?;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in values.iter().enumerate().skip(1) {
        if x > values[best] {
            best = i;
        }
    }
    best
}
