//! File formats: complex matrices and problem files as JSON, sampled
//! solutions as CSV.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::delay::DelaySpec;
use crate::error::{Error, Result};
use crate::fourier::{node, SampledFunction, TrigPolynomial};
use crate::linalg::{CMatrix, CVector};
use crate::symbol::ProblemSpec;

/// Row-major complex matrix `{"re": [[...]], "im": [[...]]}`; `im` may be omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<CMatrix> {
        let rows = self.re.len();
        let cols = self.re.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("empty matrix"));
        }
        if self.re.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged matrix rows"));
        }
        if let Some(im) = &self.im {
            if im.len() != rows || im.iter().any(|r| r.len() != cols) {
                return Err(Error::invalid("real and imaginary parts differ in shape"));
            }
        }
        Ok(CMatrix::from_fn(rows, cols, |i, j| {
            let im = self.im.as_ref().map_or(0.0, |m| m[i][j]);
            Complex64::new(self.re[i][j], im)
        }))
    }

    pub fn from_matrix(m: &CMatrix) -> Self {
        let part = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        MatrixJson {
            re: part(|z| z.re),
            im: Some(part(|z| z.im)),
        }
    }
}

/// A problem file: the equation plus its forcing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub n: usize,
    pub dim: usize,
    #[serde(rename = "A")]
    pub a: MatrixJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay: Option<DelaySpec>,
    pub forcing: TrigPolynomial,
}

impl ProblemFile {
    pub fn new(problem: &ProblemSpec, forcing: TrigPolynomial) -> Self {
        ProblemFile {
            n: problem.order(),
            dim: problem.dim(),
            a: MatrixJson::from_matrix(problem.a()),
            delay: Some(problem.delay().clone()),
            forcing,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("problem file: {e}")))
    }

    /// Validated problem and forcing.
    pub fn into_parts(self) -> Result<(ProblemSpec, TrigPolynomial)> {
        let delay = self.delay.unwrap_or_else(|| DelaySpec::zero(self.dim));
        let problem = ProblemSpec::new(self.n, self.a.to_matrix()?, delay)?;
        if problem.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: problem.dim(),
            });
        }
        if self.forcing.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: self.forcing.dim(),
            });
        }
        Ok((problem, self.forcing))
    }
}

/// Writes `t,re_u1,im_u1,...,re_ud,im_ud` rows at the nodes `t_m = 2πm/M`,
/// 17 significant digits.
pub fn write_samples_csv<W: Write + ?Sized>(
    out: &mut W,
    samples: &SampledFunction,
) -> std::io::Result<()> {
    let mut header = String::from("t");
    for i in 1..=samples.dim() {
        header.push_str(&format!(",re_u{i},im_u{i}"));
    }
    writeln!(out, "{header}")?;
    let grid = samples.grid();
    for (m, v) in samples.samples().iter().enumerate() {
        let mut line = format!("{:.16e}", node(m, grid));
        for z in v.iter() {
            line.push_str(&format!(",{:.16e},{:.16e}", z.re, z.im));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Reads a solution CSV back into samples; the node column is checked against the uniform grid.
pub fn read_samples_csv<R: BufRead>(input: R) -> Result<SampledFunction> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::invalid("empty CSV"))?
        .map_err(|e| Error::invalid(e.to_string()))?;
    let columns = header.split(',').count();
    if columns < 3 || columns % 2 == 0 {
        return Err(Error::invalid(format!("unexpected CSV header `{header}`")));
    }
    let dim = (columns - 1) / 2;
    let mut rows = Vec::new();
    for line in lines {
        let line = line.map_err(|e| Error::invalid(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields = line
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::invalid(format!("bad CSV field `{s}`: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if fields.len() != columns {
            return Err(Error::invalid(format!(
                "row with {} fields, expected {columns}",
                fields.len()
            )));
        }
        rows.push(fields);
    }
    let grid = rows.len();
    let mut samples = Vec::with_capacity(grid);
    for (m, row) in rows.iter().enumerate() {
        if (row[0] - node(m, grid)).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "row {m} is not on the uniform grid of {grid} nodes"
            )));
        }
        samples.push(CVector::from_iterator(
            dim,
            row[1..].chunks(2).map(|p| Complex64::new(p[0], p[1])),
        ));
    }
    SampledFunction::new(dim, samples)
}
