//! Weighted nonlinear least squares and the characterization fit models.

mod lm;
mod models;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use lm::{finite_difference_gradient, least_squares, FitOptions, Model};
pub use models::{
    fit_beta, fit_ramsey, fit_rb, fit_t1, fit_tuning_curve, rb_fidelity, BetaModel, ExpDecay,
    RamseyFringe, RbDecay, TuningCurve, TuningCurveExact, TuningOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

/// Samples `(x, y[, σ])` with axis labels.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DataSeries {
    pub points: Vec<DataPoint>,
    #[serde(default)]
    pub x_unit: String,
    #[serde(default)]
    pub y_unit: String,
}

impl DataSeries {
    pub fn from_xy(x: &[f64], y: &[f64]) -> Self {
        Self {
            points: x
                .iter()
                .zip(y)
                .map(|(&x, &y)| DataPoint { x, y, sigma: None })
                .collect(),
            ..Self::default()
        }
    }

    pub fn from_xy_sigma(x: &[f64], y: &[f64], sigma: &[f64]) -> Self {
        Self {
            points: x
                .iter()
                .zip(y)
                .zip(sigma)
                .map(|((&x, &y), &s)| DataPoint {
                    x,
                    y,
                    sigma: Some(s),
                })
                .collect(),
            ..Self::default()
        }
    }

    pub fn with_units(mut self, x_unit: &str, y_unit: &str) -> Self {
        self.x_unit = x_unit.into();
        self.y_unit = y_unit.into();
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.y).collect()
    }

    /// Per-point weights `1/σ`, or `None` when the series carries no σ.
    pub fn weights(&self) -> Result<Option<Vec<f64>>> {
        let with_sigma = self.points.iter().filter(|p| p.sigma.is_some()).count();
        if with_sigma == 0 {
            return Ok(None);
        }
        if with_sigma != self.points.len() {
            return Err(Error::invalid(
                "sigma",
                "must be given for every point or for none",
            ));
        }
        Ok(Some(
            self.points
                .iter()
                .map(|p| 1.0 / p.sigma.unwrap_or(1.0))
                .collect(),
        ))
    }

    /// Checks finiteness, σ > 0 and the minimum point count.
    pub fn validate(&self, min_points: usize) -> Result<()> {
        if self.points.len() < min_points {
            return Err(Error::invalid(
                "data",
                format!(
                    "need at least {min_points} points, got {}",
                    self.points.len()
                ),
            ));
        }
        for (i, p) in self.points.iter().enumerate() {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(Error::invalid(
                    format!("points[{i}]"),
                    "x and y must be finite",
                ));
            }
            if let Some(s) = p.sigma {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(Error::invalid(
                        format!("points[{i}].sigma"),
                        format!("must be > 0, got {s}"),
                    ));
                }
            }
        }
        self.weights()?;
        Ok(())
    }

    /// Parses `x,y[,sigma]` CSV text. A header row is recognized when its
    /// first field is not numeric.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut series = DataSeries::default();
        let mut columns = None;
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::invalid("csv", e.to_string()))?;
            if record.iter().all(str::is_empty) {
                continue;
            }
            if line == 0 && record.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
                let header: Vec<&str> = record.iter().collect();
                series.x_unit = header.first().copied().unwrap_or_default().to_string();
                series.y_unit = header.get(1).copied().unwrap_or_default().to_string();
                continue;
            }
            let n = record.len();
            if !(2..=3).contains(&n) {
                return Err(Error::invalid(
                    format!("csv line {}", line + 1),
                    format!("expected 2 or 3 columns (x, y[, sigma]), got {n}"),
                ));
            }
            if *columns.get_or_insert(n) != n {
                return Err(Error::invalid(
                    format!("csv line {}", line + 1),
                    "inconsistent column count",
                ));
            }
            let parse = |i: usize| -> Result<f64> {
                record[i].parse::<f64>().map_err(|_| {
                    Error::invalid(
                        format!("csv line {} column {}", line + 1, i + 1),
                        format!("not a number: {:?}", &record[i]),
                    )
                })
            };
            series.points.push(DataPoint {
                x: parse(0)?,
                y: parse(1)?,
                sigma: if n == 3 { Some(parse(2)?) } else { None },
            });
        }
        if series.points.is_empty() {
            return Err(Error::Empty("csv contains no data rows".into()));
        }
        Ok(series)
    }
}

/// Fitted parameters with 1σ standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub params: IndexMap<String, f64>,
    pub std_errors: IndexMap<String, f64>,
    /// Quantities computed from the parameters (e.g. gate fidelity).
    #[serde(skip_serializing_if = "IndexMap::is_empty")]
    pub derived: IndexMap<String, f64>,
    /// Euclidean norm of the (weighted) residual vector.
    pub residual_norm: f64,
    /// Largest cosine between the residual vector and a Jacobian column.
    pub gradient_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// `y − model(x)` per data point, unweighted.
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

impl FitResult {
    /// Value of a named parameter or derived quantity.
    pub fn get(&self, name: &str) -> Option<f64> {
        self.params
            .get(name)
            .or_else(|| self.derived.get(name))
            .copied()
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.std_errors.get(name).copied()
    }

    pub(crate) fn swap_params(&mut self, a: &str, b: &str) {
        for map in [&mut self.params, &mut self.std_errors] {
            let (va, vb) = (map[a], map[b]);
            map[a] = vb;
            map[b] = va;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_with_header_and_sigma() {
        let text = "t_us,signal,sigma\n0,1.0,0.01\n1,0.9,0.01\n# comment\n2,0.8,0.02\n";
        let s = DataSeries::from_csv(text).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.x_unit, "t_us");
        assert_eq!(s.points[2].sigma, Some(0.02));
        assert_eq!(s.weights().unwrap().unwrap()[2], 50.0);
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(DataSeries::from_csv(""), Err(Error::Empty(_))));
        assert!(matches!(
            DataSeries::from_csv("x,y\n"),
            Err(Error::Empty(_))
        ));
        assert!(DataSeries::from_csv("1,2\n3,4,5\n").is_err());
        assert!(DataSeries::from_csv("1,2,3,4\n").is_err());
        assert!(DataSeries::from_csv("1,abc\n").is_err());
    }

    #[test]
    fn validation() {
        let s = DataSeries::from_xy_sigma(&[0.0, 1.0], &[1.0, 2.0], &[0.1, 0.0]);
        assert!(s.validate(2).is_err());
        let s = DataSeries::from_xy(&[0.0, f64::NAN], &[1.0, 2.0]);
        assert!(s.validate(2).is_err());
        let s = DataSeries::from_xy(&[0.0], &[1.0]);
        assert!(s.validate(2).is_err());
        let mut s = DataSeries::from_xy(&[0.0, 1.0], &[1.0, 2.0]);
        s.points[0].sigma = Some(1.0);
        assert!(s.weights().is_err());
    }
}
