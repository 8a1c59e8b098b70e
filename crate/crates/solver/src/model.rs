use std::fmt;

use crate::error::SolverError;

/// Index of a column in an [`LpModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        })
    }
}

/// A sparse constraint row `sum(coef * x) <sense> rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * x[v.0]).sum()
    }

    /// Amount by which `x` violates this row (zero when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let a = self.activity(x);
        match self.sense {
            Sense::Le => (a - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - a).max(0.0),
            Sense::Eq => (a - self.rhs).abs(),
        }
    }

    pub(crate) fn range(&self) -> (f64, f64) {
        match self.sense {
            Sense::Le => (f64::NEG_INFINITY, self.rhs),
            Sense::Ge => (self.rhs, f64::INFINITY),
            Sense::Eq => (self.rhs, self.rhs),
        }
    }
}

/// A maximisation LP with box bounds on every variable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LpModel {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Row>,
    pub names: Vec<String>,
}

impl LpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, obj: f64) -> VarId {
        self.objective.push(obj);
        self.lower.push(lower);
        self.upper.push(upper);
        self.names.push(name.into());
        VarId(self.objective.len() - 1)
    }

    pub fn add_row(&mut self, terms: Vec<(VarId, f64)>, sense: Sense, rhs: f64) -> usize {
        self.rows.push(Row { terms, sense, rhs });
        self.rows.len() - 1
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation(x));
        let bounds = (0..self.num_vars())
            .map(|j| (self.lower[j] - x[j]).max(x[j] - self.upper[j]).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let n = self.num_vars();
        for len in [self.lower.len(), self.upper.len()] {
            if len != n {
                return Err(SolverError::BoundLength { got: len, expected: n });
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(SolverError::NonFinite("objective".into()));
        }
        for j in 0..n {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(SolverError::NonFinite(format!("bounds of variable {j}")));
            }
            if lo > hi {
                return Err(SolverError::InvertedBounds { var: j, lower: lo, upper: hi });
            }
        }
        for (r, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(SolverError::NonFinite(format!("right-hand side of row {r}")));
            }
            for &(v, c) in &row.terms {
                if v.0 >= n {
                    return Err(SolverError::UnknownVariable { row: r, var: v.0, num_vars: n });
                }
                if !c.is_finite() {
                    return Err(SolverError::NonFinite(format!("row {r}")));
                }
            }
        }
        Ok(())
    }

    fn var_name(&self, j: usize) -> String {
        match self.names.get(j) {
            Some(s) if !s.is_empty() => s.clone(),
            _ => format!("x{j}"),
        }
    }
}

/// Human-readable LP-style dump, for debugging only.
impl fmt::Display for LpModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "maximize")?;
        write!(f, "  obj:")?;
        for (j, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                write!(f, " {:+} {}", c, self.var_name(j))?;
            }
        }
        writeln!(f)?;
        writeln!(f, "subject to")?;
        for (r, row) in self.rows.iter().enumerate() {
            write!(f, "  r{r}:")?;
            for &(v, c) in &row.terms {
                write!(f, " {:+} {}", c, self.var_name(v.0))?;
            }
            writeln!(f, " {} {}", row.sense, row.rhs)?;
        }
        writeln!(f, "bounds")?;
        for j in 0..self.num_vars() {
            writeln!(f, "  {} <= {} <= {}", self.lower[j], self.var_name(j), self.upper[j])?;
        }
        writeln!(f, "end")
    }
}
