//! Pearson correlation over entity time series: the quantity that turns
//! a set of traffic traces into edge weights.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Pearson correlation coefficient of two equal-length samples, clamped
/// to `[-1, 1]` to absorb floating-point overshoot.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData(
            "pearson needs at least 2 samples".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        cov += da * db;
        vx += da * da;
        vy += db * db;
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::UndefinedStatistic(
            "zero variance in pearson input".into(),
        ));
    }
    Ok((cov / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}

/// Dense symmetric Pearson matrix over a canonically ordered entity set.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    entities: Vec<String>,
    values: Vec<f64>, // row-major n*n
}

impl CorrelationMatrix {
    pub fn from_parts(entities: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = entities.len();
        if values.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "matrix needs {}x{} values, got {}",
                n,
                n,
                values.len()
            )));
        }
        let m = CorrelationMatrix { entities, values };
        for i in 0..n {
            if m.get(i, i) != 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "diagonal entry for {} must be 1",
                    m.entities[i]
                )));
            }
            for j in 0..i {
                let v = m.get(i, j);
                if !(-1.0..=1.0).contains(&v) || v != m.get(j, i) {
                    return Err(Error::InvalidArgument(format!(
                        "entry ({i},{j}) must be symmetric and within [-1, 1]"
                    )));
                }
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.entities.len()
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.entities.len() + j]
    }

    /// CSV form: header `id,<e0>,<e1>,...`, then one row per entity.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "id,{}", self.entities.join(","))?;
        for (i, id) in self.entities.iter().enumerate() {
            let row: Vec<String> = (0..self.n()).map(|j| self.get(i, j).to_string()).collect();
            writeln!(out, "{},{}", id, row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(source: R) -> Result<Self> {
        let mut lines = source.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Schema("empty matrix file".into()))??;
        let mut cols = header.trim_end_matches('\r').split(',');
        if cols.next() != Some("id") {
            return Err(Error::Schema("matrix header must start with 'id'".into()));
        }
        let entities: Vec<String> = cols.map(str::to_string).collect();
        let n = entities.len();
        let mut values = vec![0.0; n * n];
        let mut row = 0;
        for line in lines {
            let line = line?;
            let text = line.trim_end_matches('\r');
            if text.is_empty() {
                continue;
            }
            let fields: Vec<&str> = text.split(',').collect();
            if fields.len() != n + 1 {
                return Err(Error::Schema(format!("matrix row {row}: wrong width")));
            }
            if row >= n || fields[0] != entities[row] {
                return Err(Error::Schema(format!(
                    "matrix row order must match header (row {row})"
                )));
            }
            for (j, f) in fields[1..].iter().enumerate() {
                values[row * n + j] = f
                    .parse()
                    .map_err(|_| Error::Schema(format!("matrix row {row}: bad value {f:?}")))?;
            }
            row += 1;
        }
        if row != n {
            return Err(Error::Schema(format!("matrix has {row} rows, expected {n}")));
        }
        CorrelationMatrix::from_parts(entities, values)
    }
}

/// Full Pearson matrix over a series collection, entities in lexicographic
/// id order. Zero-variance entities are excluded up front with a warning;
/// keeping them would poison the edge ranking downstream.
pub fn correlation_matrix(series: &BTreeMap<String, TimeSeries>) -> Result<CorrelationMatrix> {
    let mut kept: Vec<&TimeSeries> = Vec::new();
    for ts in series.values() {
        let mean = ts.values.iter().sum::<f64>() / ts.len() as f64;
        if ts.values.iter().all(|v| *v == mean) {
            log::warn!(
                "excluding zero-variance entity {:?} from correlation matrix",
                ts.entity_id
            );
            continue;
        }
        kept.push(ts);
    }
    if kept.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "correlation matrix needs at least 2 entities with variance, got {}",
            kept.len()
        )));
    }
    let first = kept[0];
    for ts in &kept {
        if ts.bin_width != first.bin_width || ts.t0 != first.t0 || ts.len() != first.len() {
            return Err(Error::InvalidArgument(format!(
                "series {:?} does not share the common span and bin width",
                ts.entity_id
            )));
        }
    }

    let n = kept.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let computed: Vec<((usize, usize), f64)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let r = pearson(&kept[i].values, &kept[j].values)
                .expect("variance checked before matrix assembly");
            ((i, j), r)
        })
        .collect();

    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
    }
    for ((i, j), r) in computed {
        values[i * n + j] = r;
        values[j * n + i] = r;
    }
    CorrelationMatrix::from_parts(kept.iter().map(|ts| ts.entity_id.clone()).collect(), values)
}
