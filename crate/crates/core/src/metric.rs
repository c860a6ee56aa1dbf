//! Node locations. Either points in Euclidean space or an explicit distance
//! matrix; both answer `distance(i, j)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack allowed when validating matrix symmetry and the triangle
/// inequality.
const MATRIX_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MetricSpace {
    Euclidean { dim: usize, points: Vec<Vec<f64>> },
    Matrix { d: Vec<Vec<f64>> },
}

impl MetricSpace {
    pub fn euclidean(dim: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        let space = MetricSpace::Euclidean { dim, points };
        space.validate(true)?;
        Ok(space)
    }

    /// Builds a matrix space, checking the triangle inequality in O(n³).
    pub fn matrix(d: Vec<Vec<f64>>) -> Result<Self> {
        let space = MetricSpace::Matrix { d };
        space.validate(true)?;
        Ok(space)
    }

    /// Builds a matrix space without the cubic triangle check. Symmetry,
    /// zero diagonal and nonnegativity are still enforced.
    pub fn matrix_unchecked_triangle(d: Vec<Vec<f64>>) -> Result<Self> {
        let space = MetricSpace::Matrix { d };
        space.validate(false)?;
        Ok(space)
    }

    pub fn len(&self) -> usize {
        match self {
            MetricSpace::Euclidean { points, .. } => points.len(),
            MetricSpace::Matrix { d } => d.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn distance(&self, i: usize, j: usize) -> Result<f64> {
        let len = self.len();
        for index in [i, j] {
            if index >= len {
                return Err(Error::NodeOutOfRange { index, len });
            }
        }
        Ok(self.distance_unchecked(i, j))
    }

    pub(crate) fn distance_unchecked(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        match self {
            MetricSpace::Euclidean { points, .. } => points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            MetricSpace::Matrix { d } => d[i][j],
        }
    }

    pub fn validate(&self, check_triangle: bool) -> Result<()> {
        match self {
            MetricSpace::Euclidean { dim, points } => {
                if *dim == 0 {
                    return Err(Error::InvalidMetric("dimension must be positive".into()));
                }
                for (i, p) in points.iter().enumerate() {
                    if p.len() != *dim {
                        return Err(Error::InvalidMetric(format!(
                            "point {i} has {} coordinates, expected {dim}",
                            p.len()
                        )));
                    }
                    if p.iter().any(|x| !x.is_finite()) {
                        return Err(Error::InvalidMetric(format!("point {i} is not finite")));
                    }
                }
                Ok(())
            }
            MetricSpace::Matrix { d } => validate_matrix(d, check_triangle),
        }
    }
}

fn validate_matrix(d: &[Vec<f64>], check_triangle: bool) -> Result<()> {
    let n = d.len();
    for (i, row) in d.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidMetric(format!(
                "row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        if row[i] != 0.0 {
            return Err(Error::InvalidMetric(format!("d({i},{i}) must be 0")));
        }
        for (j, &x) in row.iter().enumerate() {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::InvalidMetric(format!(
                    "d({i},{j}) = {x} is not a finite nonnegative distance"
                )));
            }
            let y = d[j][i];
            if (x - y).abs() > MATRIX_TOLERANCE * x.max(y).max(1.0) {
                return Err(Error::InvalidMetric(format!(
                    "asymmetric: d({i},{j}) = {x} but d({j},{i}) = {y}"
                )));
            }
        }
    }
    if check_triangle {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let via = d[i][k] + d[k][j];
                    if d[i][j] > via + MATRIX_TOLERANCE * via.max(1.0) {
                        return Err(Error::InvalidMetric(format!(
                            "triangle inequality violated: d({i},{j}) > d({i},{k}) + d({k},{j})"
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}
