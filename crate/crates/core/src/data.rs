//! Dataset containers, standardization and CSV ingestion.
//!
//! The design matrix is stored column-major: the solver works column by
//! column (gradients are column dot products, sparse updates touch only the
//! columns of the active set).

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, ShapeBuilder};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    y: Array1<f64>,
    column_means: Array1<f64>,
    column_scales: Array1<f64>,
    y_mean: f64,
    y_scale: f64,
    standardized: bool,
    names: Option<Vec<String>>,
}

/// Controls [`standardize_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StandardizeOptions {
    /// Scale the response to unit sample variance (it is always centered).
    pub scale_response: bool,
}

impl Default for StandardizeOptions {
    fn default() -> Self {
        Self {
            scale_response: true,
        }
    }
}

impl Dataset {
    /// Builds an unstandardized dataset. The matrix is copied into
    /// column-major layout.
    pub fn new(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        let (n, p) = x.dim();
        if n == 0 || p == 0 {
            return Err(Error::EmptyData);
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: y.len(),
            });
        }
        Ok(Self {
            x: to_column_major(x.view()),
            y,
            column_means: Array1::zeros(p),
            column_scales: Array1::ones(p),
            y_mean: 0.0,
            y_scale: 1.0,
            standardized: false,
            names: None,
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                found: names.len(),
            });
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView1<'_, f64> {
        self.y.view()
    }

    pub fn n_samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn column_means(&self) -> ArrayView1<'_, f64> {
        self.column_means.view()
    }

    pub fn column_scales(&self) -> ArrayView1<'_, f64> {
        self.column_scales.view()
    }

    pub fn y_mean(&self) -> f64 {
        self.y_mean
    }

    pub fn y_scale(&self) -> f64 {
        self.y_scale
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Rows `rows` (in the given order) as a new unstandardized dataset that
    /// keeps the raw-scale mapping of `self`.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        if rows.is_empty() {
            return Err(Error::EmptyData);
        }
        let x = self.x.select(Axis(0), rows);
        let y = self.y.select(Axis(0), rows);
        Ok(Dataset {
            x: to_column_major(x.view()),
            y,
            column_means: self.column_means.clone(),
            column_scales: self.column_scales.clone(),
            y_mean: self.y_mean,
            y_scale: self.y_scale,
            standardized: false,
            names: self.names.clone(),
        })
    }

    /// Appends rows, used for contamination experiments.
    pub fn append_rows(&self, x_rows: ArrayView2<'_, f64>, y_rows: ArrayView1<'_, f64>) -> Result<Dataset> {
        if x_rows.ncols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                found: x_rows.ncols(),
            });
        }
        if x_rows.nrows() != y_rows.len() {
            return Err(Error::DimensionMismatch {
                expected: x_rows.nrows(),
                found: y_rows.len(),
            });
        }
        let x = ndarray::concatenate(Axis(0), &[self.x.view(), x_rows])
            .expect("column counts checked above");
        let y = ndarray::concatenate(Axis(0), &[self.y.view(), y_rows])
            .expect("1-d concatenation");
        let mut out = Dataset::new(x, y)?;
        out.column_means = self.column_means.clone();
        out.column_scales = self.column_scales.clone();
        out.y_mean = self.y_mean;
        out.y_scale = self.y_scale;
        out.names = self.names.clone();
        Ok(out)
    }

    /// Maps standardized-scale coefficients back to the raw scale of the
    /// data this dataset was derived from.
    pub fn to_raw_scale(&self, coef: &Coefficients) -> Coefficients {
        let beta = Array1::from_iter(
            coef.beta
                .iter()
                .zip(self.column_scales.iter())
                .map(|(b, s)| b * self.y_scale / s),
        );
        let intercept = self.y_mean + self.y_scale * coef.intercept
            - beta
                .iter()
                .zip(self.column_means.iter())
                .map(|(b, m)| b * m)
                .sum::<f64>();
        Coefficients::with_intercept(beta, intercept)
    }

    /// Maps a raw-scale design row onto this dataset's standardized scale.
    pub fn standardize_row(&self, row: ArrayView1<'_, f64>) -> Array1<f64> {
        Array1::from_iter(
            row.iter()
                .zip(self.column_means.iter().zip(self.column_scales.iter()))
                .map(|(v, (m, s))| (v - m) / s),
        )
    }

    /// Maps a raw-scale response onto this dataset's standardized scale.
    pub fn standardize_response(&self, y: f64) -> f64 {
        (y - self.y_mean) / self.y_scale
    }

    pub fn predict(&self, coef: &Coefficients) -> Array1<f64> {
        predict(self.x.view(), coef)
    }
}

pub(crate) fn to_column_major(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = Array2::zeros(x.dim().f());
    out.assign(&x);
    out
}

pub fn predict(x: ArrayView2<'_, f64>, coef: &Coefficients) -> Array1<f64> {
    let mut out = Array1::from_elem(x.nrows(), coef.intercept);
    for &j in &coef.support {
        out.scaled_add(coef.beta[j], &x.column(j));
    }
    out
}

/// Estimated coefficient vector. `support` always equals the set of exactly
/// nonzero entries of `beta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficients {
    #[serde(serialize_with = "serialize_array")]
    beta: Array1<f64>,
    intercept: f64,
    support: Vec<usize>,
}

impl Coefficients {
    pub fn new(beta: Array1<f64>) -> Self {
        Self::with_intercept(beta, 0.0)
    }

    pub fn with_intercept(beta: Array1<f64>, intercept: f64) -> Self {
        let support = beta
            .iter()
            .enumerate()
            .filter(|(_, b)| b.abs() > 0.0)
            .map(|(j, _)| j)
            .collect();
        Self {
            beta,
            intercept,
            support,
        }
    }

    pub fn zeros(p: usize) -> Self {
        Self::new(Array1::zeros(p))
    }

    pub fn beta(&self) -> ArrayView1<'_, f64> {
        self.beta.view()
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    pub fn into_beta(self) -> Array1<f64> {
        self.beta
    }
}

pub(crate) fn serialize_array<S: serde::Serializer>(a: &Array1<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(a.iter())
}

fn mean_and_sd(v: ArrayView1<'_, f64>) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.sum() / n;
    let ss = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Centers and scales every column and the response (sample SD, `1/(n-1)`).
pub fn standardize(raw: &Dataset) -> Result<Dataset> {
    standardize_with(raw, StandardizeOptions::default())
}

pub fn standardize_with(raw: &Dataset, opts: StandardizeOptions) -> Result<Dataset> {
    let n = raw.n_samples();
    if n < 2 {
        return Err(Error::EmptyData);
    }
    let p = raw.n_features();
    let mut x = raw.x.clone();
    let mut means = Array1::zeros(p);
    let mut scales = Array1::ones(p);
    for (j, mut col) in x.axis_iter_mut(Axis(1)).enumerate() {
        let (m, sd) = mean_and_sd(col.view());
        // relative test so columns of huge magnitude with rounding noise
        // still count as constant
        if !(sd > 1e-12 * m.abs().max(1.0)) {
            return Err(Error::ConstantColumn(j));
        }
        col.mapv_inplace(|v| (v - m) / sd);
        means[j] = m;
        scales[j] = sd;
    }
    let (ym, ysd) = mean_and_sd(raw.y.view());
    let ysd = if opts.scale_response && ysd > 0.0 { ysd } else { 1.0 };
    let y = raw.y.mapv(|v| (v - ym) / ysd);

    // compose with any earlier transform so coefficients map to the
    // original raw scale
    let column_means = &raw.column_means + &(&raw.column_scales * &means);
    let column_scales = &raw.column_scales * &scales;
    Ok(Dataset {
        x,
        y,
        column_means,
        column_scales,
        y_mean: raw.y_mean + raw.y_scale * ym,
        y_scale: raw.y_scale * ysd,
        standardized: true,
        names: raw.names.clone(),
    })
}

/// Which CSV column holds the response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResponseColumn {
    Name(String),
    Index(usize),
}

impl std::str::FromStr for ResponseColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => ResponseColumn::Index(i),
            Err(_) => ResponseColumn::Name(s.to_string()),
        })
    }
}

/// Reads a comma-delimited numeric file. A first row containing any
/// non-numeric cell is treated as a header. Row and column numbers in
/// errors are 1-based file positions.
pub fn read_csv(path: impl AsRef<Path>, response: &ResponseColumn) -> Result<Dataset> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let text = std::fs::read_to_string(path).map_err(io_err)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());

    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|_| Error::Parse { row: i + 1, col: 1 })?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        records.push(rec);
    }
    if records.is_empty() {
        return Err(Error::EmptyData);
    }

    let header: Option<Vec<String>> = if records[0].iter().any(|c| c.parse::<f64>().is_err()) {
        Some(records[0].iter().map(str::to_string).collect())
    } else {
        None
    };
    let first_data = usize::from(header.is_some());
    let width = records[0].len();

    let resp_idx = match response {
        ResponseColumn::Index(i) if *i < width => *i,
        ResponseColumn::Index(i) => return Err(Error::MissingColumn(i.to_string())),
        ResponseColumn::Name(name) => header
            .as_ref()
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| Error::MissingColumn(name.clone()))?,
    };

    let rows = &records[first_data..];
    let n = rows.len();
    if n == 0 || width < 2 {
        return Err(Error::EmptyData);
    }
    let p = width - 1;
    let mut x = Array2::zeros((n, p).f());
    let mut y = Array1::zeros(n);
    for (i, rec) in rows.iter().enumerate() {
        let file_row = i + first_data + 1;
        if rec.len() != width {
            return Err(Error::Parse {
                row: file_row,
                col: rec.len().min(width) + 1,
            });
        }
        let mut jx = 0;
        for (c, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row: file_row,
                col: c + 1,
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    row: file_row,
                    col: c + 1,
                });
            }
            if c == resp_idx {
                y[i] = v;
            } else {
                x[[i, jx]] = v;
                jx += 1;
            }
        }
    }

    let mut data = Dataset::new(x, y)?;
    if let Some(h) = header {
        let names = h
            .into_iter()
            .enumerate()
            .filter(|(c, _)| *c != resp_idx)
            .map(|(_, s)| s)
            .collect();
        data = data.with_names(names)?;
    }
    Ok(data)
}
