use std::collections::HashSet;

use nalgebra::DMatrix;

use super::FactorError;

pub const INTERCEPT: &str = "intercept";

/// Dummy levels for skin type; type 1 is the base case.
pub const SKIN_TYPE_DUMMIES: [&str; 5] = [
    "skin_type_2",
    "skin_type_3",
    "skin_type_4",
    "skin_type_5",
    "skin_type_6",
];

/// Named regressor columns over `n` observations.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    names: Vec<String>,
    x: DMatrix<f64>,
}

impl DesignMatrix {
    /// Builds a design from named columns, taken as given (no intercept added).
    pub fn new(columns: Vec<(String, Vec<f64>)>) -> Result<Self, FactorError> {
        let p = columns.len();
        if p == 0 {
            return Err(FactorError::InvalidDesign("design has no columns".into()));
        }
        let n = columns[0].1.len();
        if n <= p {
            return Err(FactorError::TooFewObservations { n, p });
        }
        let mut seen = HashSet::new();
        for (name, col) in &columns {
            if !seen.insert(name.as_str()) {
                return Err(FactorError::SingularDesign {
                    columns: vec![name.clone(), name.clone()],
                    condition: f64::INFINITY,
                });
            }
            if col.len() != n {
                return Err(FactorError::InvalidDesign(format!(
                    "column {name} has {} rows, expected {n}",
                    col.len()
                )));
            }
            if let Some(v) = col.iter().find(|v| !v.is_finite()) {
                return Err(FactorError::InvalidDesign(format!(
                    "column {name} holds non-finite value {v}"
                )));
            }
            if name != INTERCEPT && col.iter().all(|&v| v == col[0]) {
                return Err(FactorError::ConstantColumn(name.clone()));
            }
        }
        let x = DMatrix::from_fn(n, p, |i, j| columns[j].1[i]);
        Ok(Self {
            names: columns.into_iter().map(|(name, _)| name).collect(),
            x,
        })
    }

    /// Prepends an all-ones `intercept` column to the given regressors.
    pub fn with_intercept(regressors: Vec<(String, Vec<f64>)>) -> Result<Self, FactorError> {
        let n = regressors.first().map_or(0, |(_, c)| c.len());
        let mut cols = Vec::with_capacity(regressors.len() + 1);
        cols.push((INTERCEPT.to_string(), vec![1.0; n]));
        cols.extend(regressors);
        Self::new(cols)
    }

    /// Intercept-only design over `n` observations.
    pub fn intercept_only(n: usize) -> Result<Self, FactorError> {
        Self::new(vec![(INTERCEPT.to_string(), vec![1.0; n])])
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_obs(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.x.ncols()
    }

    pub fn has_intercept(&self) -> bool {
        self.names.iter().any(|n| n == INTERCEPT)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.x.column(j).iter().copied().collect()
    }

    /// Same columns with rows reordered: row `i` of the result is row `order[i]`.
    pub fn permute_rows(&self, order: &[usize]) -> Self {
        Self {
            names: self.names.clone(),
            x: DMatrix::from_fn(order.len(), self.n_cols(), |i, j| self.x[(order[i], j)]),
        }
    }
}
