//! Regression mean functions and the datasets they act on.
//!
//! A [`Dataset`] holds sampled locations, covariates and a response vector
//! recorded on either the raw (multiplicative) or log (additive) scale.
//! A [`ModelSpec`] names a mean function g(x; theta) together with its
//! analytic gradient; both reject infeasible parameters instead of clamping,
//! leaving feasibility control to the optimizer.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{BufRead, BufReader, Write as _};
use std::path::Path;

use crate::error::{Error, Result};

/// Scale of the response vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scale {
    /// Raw multiplicative-model response z, strictly positive.
    Raw,
    /// Log-transformed response y = log z.
    Log,
}

/// Sampled locations, covariates and responses.
#[derive(Debug, Clone)]
pub struct Dataset {
    locations: Array2<f64>,
    covariates: Array2<f64>,
    response: Array1<f64>,
    scale: Scale,
}

impl Dataset {
    pub fn new(
        locations: Array2<f64>,
        covariates: Array2<f64>,
        response: Array1<f64>,
        scale: Scale,
    ) -> Result<Self> {
        let n = response.len();
        if n == 0 {
            return Err(Error::InvalidInput("dataset must have at least one row".into()));
        }
        if locations.nrows() != n {
            return Err(Error::DimensionMismatch {
                context: "location rows",
                expected: n,
                found: locations.nrows(),
            });
        }
        if covariates.nrows() != n {
            return Err(Error::DimensionMismatch {
                context: "covariate rows",
                expected: n,
                found: covariates.nrows(),
            });
        }
        if scale == Scale::Raw {
            if let Some(row) = response.iter().position(|&z| !(z > 0.0)) {
                return Err(Error::InvalidInput(format!(
                    "raw-scale response must be strictly positive; row {row} has z = {}",
                    response[row]
                )));
            }
        }
        Ok(Self { locations, covariates, response, scale })
    }

    pub fn n(&self) -> usize {
        self.response.len()
    }

    pub fn locations(&self) -> &Array2<f64> {
        &self.locations
    }

    pub fn covariates(&self) -> &Array2<f64> {
        &self.covariates
    }

    pub fn response(&self) -> &Array1<f64> {
        &self.response
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    /// Log-transform a raw-scale dataset (y = log z). Positivity is a
    /// construction invariant of raw datasets, so this cannot fail.
    pub fn to_log_scale(&self) -> Result<Dataset> {
        match self.scale {
            Scale::Log => Ok(self.clone()),
            Scale::Raw => Dataset::new(
                self.locations.clone(),
                self.covariates.clone(),
                self.response.mapv(f64::ln),
                Scale::Log,
            ),
        }
    }

    /// Same rows with a different covariate matrix (e.g. a polynomial
    /// expansion of the coordinates).
    pub fn with_covariates(&self, covariates: Array2<f64>) -> Result<Dataset> {
        Dataset::new(self.locations.clone(), covariates, self.response.clone(), self.scale)
    }

    /// Same rows with a different response vector.
    pub fn with_response(&self, response: Array1<f64>, scale: Scale) -> Result<Dataset> {
        Dataset::new(self.locations.clone(), self.covariates.clone(), response, scale)
    }

    /// Reads the CSV layout `s1,s2,x1..xk,response`.
    pub fn from_csv(path: impl AsRef<Path>, scale: Scale) -> Result<Self> {
        let path = path.as_ref();
        let display = path.display().to_string();
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: display.clone(),
            source,
        })?;
        let mut lines = BufReader::new(file).lines().enumerate();
        let header = match lines.next() {
            Some((_, Ok(h))) => h,
            Some((_, Err(source))) => return Err(Error::Io { path: display, source }),
            None => {
                return Err(Error::Parse {
                    path: display,
                    line: 1,
                    message: "empty file".into(),
                })
            }
        };
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.len() < 4 || cols[0] != "s1" || cols[1] != "s2" || *cols.last().unwrap() != "response" {
            return Err(Error::Parse {
                path: display,
                line: 1,
                message: format!("expected header s1,s2,x1..xk,response, got `{}`", header.trim()),
            });
        }
        let k = cols.len() - 3;
        let mut locations = Vec::new();
        let mut covariates = Vec::new();
        let mut response = Vec::new();
        for (idx, line) in lines {
            let line = line.map_err(|source| Error::Io { path: display.clone(), source })?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != cols.len() {
                return Err(Error::Parse {
                    path: display,
                    line: idx + 1,
                    message: format!("expected {} fields, got {}", cols.len(), fields.len()),
                });
            }
            let parse = |s: &str, line: usize| -> Result<f64> {
                s.trim().parse::<f64>().map_err(|e| Error::Parse {
                    path: display.clone(),
                    line,
                    message: format!("`{s}`: {e}"),
                })
            };
            locations.push(parse(fields[0], idx + 1)?);
            locations.push(parse(fields[1], idx + 1)?);
            for f in &fields[2..2 + k] {
                covariates.push(parse(f, idx + 1)?);
            }
            response.push(parse(fields[cols.len() - 1], idx + 1)?);
        }
        let n = response.len();
        if n == 0 {
            return Err(Error::Parse {
                path: display,
                line: 2,
                message: "no data rows".into(),
            });
        }
        let locations = Array2::from_shape_vec((n, 2), locations)
            .expect("location buffer shape");
        let covariates = Array2::from_shape_vec((n, k), covariates)
            .expect("covariate buffer shape");
        Dataset::new(locations, covariates, Array1::from_vec(response), scale)
    }

    /// Writes the CSV layout read by [`Dataset::from_csv`].
    pub fn to_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let display = path.display().to_string();
        let mut out = String::new();
        out.push_str("s1,s2");
        for j in 0..self.covariates.ncols() {
            out.push_str(&format!(",x{}", j + 1));
        }
        out.push_str(",response\n");
        for i in 0..self.n() {
            out.push_str(&format!("{},{}", self.locations[[i, 0]], self.locations[[i, 1]]));
            for j in 0..self.covariates.ncols() {
                out.push_str(&format!(",{}", self.covariates[[i, j]]));
            }
            out.push_str(&format!(",{}\n", self.response[i]));
        }
        let mut file = std::fs::File::create(path).map_err(|source| Error::Io {
            path: display.clone(),
            source,
        })?;
        file.write_all(out.as_bytes())
            .map_err(|source| Error::Io { path: display, source })
    }

    /// Reads whitespace-separated `x y z` triples. The x,y columns become both
    /// the locations and the covariates; z is the response.
    pub fn from_xyz(path: impl AsRef<Path>, scale: Scale) -> Result<Self> {
        let path = path.as_ref();
        let display = path.display().to_string();
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: display.clone(),
            source,
        })?;
        let mut xy = Vec::new();
        let mut z = Vec::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| Error::Io { path: display.clone(), source })?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    path: display,
                    line: idx + 1,
                    message: format!("expected 3 columns, got {}", fields.len()),
                });
            }
            for (c, f) in fields.iter().enumerate() {
                let v = f.parse::<f64>().map_err(|e| Error::Parse {
                    path: display.clone(),
                    line: idx + 1,
                    message: format!("`{f}`: {e}"),
                })?;
                if c < 2 {
                    xy.push(v);
                } else {
                    z.push(v);
                }
            }
        }
        let n = z.len();
        if n == 0 {
            return Err(Error::Parse {
                path: display,
                line: 1,
                message: "no data rows".into(),
            });
        }
        let xy = Array2::from_shape_vec((n, 2), xy).expect("xyz buffer shape");
        Dataset::new(xy.clone(), xy, Array1::from_vec(z), scale)
    }
}

/// Mean-function families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    /// g(x; theta) = log(x' theta); feasible iff x' theta > 0 on every row.
    LogLinear,
    /// g(x; theta) = 1 / (1 + theta_1 exp(-theta_{2..p}' x)).
    Logistic,
    /// g((x,y); theta) = theta_1 + theta_2 x + theta_3 y + theta_4 x^2
    ///                 + theta_5 y^2 + theta_6 xy.
    PolynomialSurface2D,
    /// g(x; theta) = x' theta.
    LinearAdditive,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModelKind::LogLinear => "loglinear",
            ModelKind::Logistic => "logistic",
            ModelKind::PolynomialSurface2D => "surface2d",
            ModelKind::LinearAdditive => "linear",
        };
        f.write_str(s)
    }
}

/// A mean function together with its parameter count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Number of parameters p.
    pub dimension: usize,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, dimension: usize) -> Result<Self> {
        match kind {
            ModelKind::PolynomialSurface2D if dimension != 6 => Err(Error::InvalidInput(
                format!("surface2d has exactly 6 parameters, got {dimension}"),
            )),
            ModelKind::Logistic if dimension < 2 => Err(Error::InvalidInput(
                "logistic needs at least 2 parameters".into(),
            )),
            _ if dimension == 0 => Err(Error::InvalidInput("model needs at least 1 parameter".into())),
            _ => Ok(Self { kind, dimension }),
        }
    }

    pub fn log_linear(p: usize) -> Self {
        Self::new(ModelKind::LogLinear, p).expect("valid dimension")
    }

    pub fn logistic(p: usize) -> Self {
        Self::new(ModelKind::Logistic, p).expect("valid dimension")
    }

    pub fn polynomial_surface_2d() -> Self {
        Self::new(ModelKind::PolynomialSurface2D, 6).expect("valid dimension")
    }

    pub fn linear_additive(p: usize) -> Self {
        Self::new(ModelKind::LinearAdditive, p).expect("valid dimension")
    }

    /// Covariate columns the dataset must carry for this model.
    pub fn covariate_dim(&self) -> usize {
        match self.kind {
            ModelKind::LogLinear | ModelKind::LinearAdditive => self.dimension,
            ModelKind::Logistic => self.dimension - 1,
            ModelKind::PolynomialSurface2D => 2,
        }
    }

    fn kind_name(&self) -> &'static str {
        match self.kind {
            ModelKind::LogLinear => "LogLinear",
            ModelKind::Logistic => "Logistic",
            ModelKind::PolynomialSurface2D => "PolynomialSurface2D",
            ModelKind::LinearAdditive => "LinearAdditive",
        }
    }

    fn check_shapes(&self, data: &Dataset, theta: ArrayView1<f64>) -> Result<()> {
        if theta.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                context: "parameter vector",
                expected: self.dimension,
                found: theta.len(),
            });
        }
        if data.covariates().ncols() != self.covariate_dim() {
            return Err(Error::DimensionMismatch {
                context: "covariate columns",
                expected: self.covariate_dim(),
                found: data.covariates().ncols(),
            });
        }
        Ok(())
    }

    /// Returns true when theta lies in the feasibility domain for every row.
    pub fn is_feasible(&self, data: &Dataset, theta: ArrayView1<f64>) -> bool {
        self.evaluate(data, theta).is_ok()
    }

    /// Evaluates g(x(s_i); theta) for each row, in row order.
    pub fn evaluate(&self, data: &Dataset, theta: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check_shapes(data, theta)?;
        let x = data.covariates();
        let n = data.n();
        let mut g = Array1::zeros(n);
        match self.kind {
            ModelKind::LinearAdditive => {
                g = x.dot(&theta);
            }
            ModelKind::LogLinear => {
                let lin = x.dot(&theta);
                for (row, &t) in lin.iter().enumerate() {
                    if !(t > 0.0) {
                        return Err(Error::InfeasibleParameter { model: self.kind_name(), row });
                    }
                    g[row] = t.ln();
                }
            }
            ModelKind::Logistic => {
                let theta1 = theta[0];
                let rest = theta.slice(ndarray::s![1..]);
                let w = x.dot(&rest);
                for (row, &wi) in w.iter().enumerate() {
                    let den = 1.0 + theta1 * (-wi).exp();
                    if den == 0.0 || den.is_nan() {
                        return Err(Error::InfeasibleParameter { model: self.kind_name(), row });
                    }
                    g[row] = 1.0 / den;
                }
            }
            ModelKind::PolynomialSurface2D => {
                for row in 0..n {
                    let (u, v) = (x[[row, 0]], x[[row, 1]]);
                    g[row] = theta[0]
                        + theta[1] * u
                        + theta[2] * v
                        + theta[3] * u * u
                        + theta[4] * v * v
                        + theta[5] * u * v;
                }
            }
        }
        Ok(g)
    }

    /// Analytic Jacobian of the mean function: row i, column k holds
    /// dg(x(s_i); theta)/d theta_k.
    pub fn gradient(&self, data: &Dataset, theta: ArrayView1<f64>) -> Result<Array2<f64>> {
        self.check_shapes(data, theta)?;
        let x = data.covariates();
        let n = data.n();
        let p = self.dimension;
        let mut jac = Array2::zeros((n, p));
        match self.kind {
            ModelKind::LinearAdditive => {
                jac.assign(x);
            }
            ModelKind::LogLinear => {
                let lin = x.dot(&theta);
                for row in 0..n {
                    let t = lin[row];
                    if !(t > 0.0) {
                        return Err(Error::InfeasibleParameter { model: self.kind_name(), row });
                    }
                    for k in 0..p {
                        jac[[row, k]] = x[[row, k]] / t;
                    }
                }
            }
            ModelKind::Logistic => {
                let theta1 = theta[0];
                let rest = theta.slice(ndarray::s![1..]);
                let w = x.dot(&rest);
                for row in 0..n {
                    let e = (-w[row]).exp();
                    let den = 1.0 + theta1 * e;
                    if den == 0.0 || den.is_nan() {
                        return Err(Error::InfeasibleParameter { model: self.kind_name(), row });
                    }
                    let gi = 1.0 / den;
                    // q = e / (1 + theta1 e) written to stay finite when e overflows.
                    let q = 1.0 / (w[row].exp() + theta1);
                    jac[[row, 0]] = -q * gi;
                    for k in 1..p {
                        jac[[row, k]] = theta1 * x[[row, k - 1]] * q * gi;
                    }
                }
            }
            ModelKind::PolynomialSurface2D => {
                for row in 0..n {
                    let (u, v) = (x[[row, 0]], x[[row, 1]]);
                    jac[[row, 0]] = 1.0;
                    jac[[row, 1]] = u;
                    jac[[row, 2]] = v;
                    jac[[row, 3]] = u * u;
                    jac[[row, 4]] = v * v;
                    jac[[row, 5]] = u * v;
                }
            }
        }
        Ok(jac)
    }
}

/// Second-order polynomial design (1, x, y, x^2, y^2, xy) built from
/// two-column coordinates. Feeds the log-linear route of the surface fits.
pub fn polynomial_design(xy: &Array2<f64>) -> Result<Array2<f64>> {
    if xy.ncols() != 2 {
        return Err(Error::DimensionMismatch {
            context: "polynomial design coordinates",
            expected: 2,
            found: xy.ncols(),
        });
    }
    let n = xy.nrows();
    let mut design = Array2::zeros((n, 6));
    for i in 0..n {
        let (u, v) = (xy[[i, 0]], xy[[i, 1]]);
        design[[i, 0]] = 1.0;
        design[[i, 1]] = u;
        design[[i, 2]] = v;
        design[[i, 3]] = u * u;
        design[[i, 4]] = v * v;
        design[[i, 5]] = u * v;
    }
    Ok(design)
}
