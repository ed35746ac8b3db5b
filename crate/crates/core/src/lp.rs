//! Minimal linear-program container used by the dispatch stage.
//!
//! Problems are always maximizations over bounded continuous variables. The
//! container can be written in CPLEX LP text form for debugging and is solved
//! with `microlp`'s simplex, which is deterministic for identical input.

use std::fmt::Write as _;

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Var {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("LP solver failure: {0}")]
    Solver(String),
}

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub title: String,
    pub vars: Vec<Var>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub objective: f64,
    values: Vec<f64>,
}

impl LpSolution {
    pub fn value(&self, v: VarId) -> f64 {
        self.values[v.0]
    }
}

impl LinearProgram {
    pub fn new(title: impl Into<String>) -> Self {
        LinearProgram { title: title.into(), ..Default::default() }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, objective: f64) -> VarId {
        debug_assert!(lower <= upper, "inverted bounds");
        self.vars.push(Var { name: name.into(), lower, upper, objective });
        VarId(self.vars.len() - 1)
    }

    pub fn add_row(&mut self, name: impl Into<String>, terms: Vec<(VarId, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(Row { name: name.into(), terms, sense, rhs });
    }

    pub fn var(&self, v: VarId) -> &Var {
        &self.vars[v.0]
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        let mut p = Problem::new(OptimizationDirection::Maximize);
        let handles: Vec<_> = self
            .vars
            .iter()
            .map(|v| p.add_var(v.objective, (v.lower, v.upper)))
            .collect();
        for row in &self.rows {
            let terms: Vec<_> = row.terms.iter().map(|&(v, c)| (handles[v.0], c)).collect();
            let op = match row.sense {
                Sense::Le => ComparisonOp::Le,
                Sense::Ge => ComparisonOp::Ge,
                Sense::Eq => ComparisonOp::Eq,
            };
            p.add_constraint(terms.as_slice(), op, row.rhs);
        }
        let outcome = p.solve().map_err(|e| match e {
            microlp::Error::Infeasible => LpError::Infeasible,
            microlp::Error::Unbounded => LpError::Unbounded,
            other => LpError::Solver(other.to_string()),
        })?;
        let solution = outcome
            .into_solution()
            .map_err(|_| LpError::Solver("solve interrupted".into()))?;
        let values = handles.iter().map(|&h| solution.var_value(h)).collect();
        Ok(LpSolution { objective: solution.objective(), values })
    }

    /// Rows and bounds violated at `point` by more than `tol`.
    pub fn violations(&self, point: &[f64], tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        for (v, x) in self.vars.iter().zip(point) {
            if *x < v.lower - tol || *x > v.upper + tol {
                out.push(format!("bounds of {}", v.name));
            }
        }
        for row in &self.rows {
            let lhs: f64 = row.terms.iter().map(|&(v, c)| c * point[v.0]).sum();
            let bad = match row.sense {
                Sense::Le => lhs > row.rhs + tol,
                Sense::Ge => lhs < row.rhs - tol,
                Sense::Eq => (lhs - row.rhs).abs() > tol,
            };
            if bad {
                out.push(row.name.clone());
            }
        }
        out
    }

    /// CPLEX LP text form.
    pub fn to_lp_format(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "\\ {}", self.title);
        s.push_str("Maximize\n obj:");
        let mut any = false;
        for v in self.vars.iter().filter(|v| v.objective != 0.0) {
            push_term(&mut s, v.objective, &v.name, !any);
            any = true;
        }
        if !any {
            s.push_str(" 0");
        }
        s.push_str("\nSubject To\n");
        for row in &self.rows {
            let _ = write!(s, " {}:", row.name);
            for (i, &(v, c)) in row.terms.iter().enumerate() {
                push_term(&mut s, c, &self.vars[v.0].name, i == 0);
            }
            let op = match row.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            let _ = writeln!(s, " {op} {}", row.rhs);
        }
        s.push_str("Bounds\n");
        for v in &self.vars {
            if v.upper.is_infinite() {
                let _ = writeln!(s, " {} >= {}", v.name, v.lower);
            } else {
                let _ = writeln!(s, " {} <= {} <= {}", v.lower, v.name, v.upper);
            }
        }
        s.push_str("End\n");
        s
    }
}

fn push_term(s: &mut String, coeff: f64, name: &str, first: bool) {
    if coeff < 0.0 {
        let _ = write!(s, " - {} {}", -coeff, name);
    } else if first {
        let _ = write!(s, " {coeff} {name}");
    } else {
        let _ = write!(s, " + {coeff} {name}");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_maximization() {
        // max 3x + 2y  s.t. x + y <= 4, x + 3y <= 6, x <= 3
        let mut lp = LinearProgram::new("toy");
        let x = lp.add_var("x", 0.0, 3.0, 3.0);
        let y = lp.add_var("y", 0.0, f64::INFINITY, 2.0);
        lp.add_row("c1", vec![(x, 1.0), (y, 1.0)], Sense::Le, 4.0);
        lp.add_row("c2", vec![(x, 1.0), (y, 3.0)], Sense::Le, 6.0);
        let sol = lp.solve().unwrap();
        assert!((sol.objective - 11.0).abs() < 1e-9);
        assert!((sol.value(x) - 3.0).abs() < 1e-9);
        assert!((sol.value(y) - 1.0).abs() < 1e-9);
        assert!(lp.violations(&[3.0, 1.0], 1e-9).is_empty());
        assert_eq!(lp.violations(&[3.0, 2.0], 1e-9), vec!["c1".to_string(), "c2".to_string()]);
    }

    #[test]
    fn infeasible_detected() {
        let mut lp = LinearProgram::new("bad");
        let x = lp.add_var("x", 0.0, 1.0, 1.0);
        lp.add_row("need", vec![(x, 1.0)], Sense::Ge, 2.0);
        assert_eq!(lp.solve().unwrap_err(), LpError::Infeasible);
    }

    #[test]
    fn lp_text_format() {
        let mut lp = LinearProgram::new("fmt");
        let x = lp.add_var("x", 0.0, 5.0, 2.0);
        let y = lp.add_var("y", 0.0, f64::INFINITY, 0.0);
        lp.add_row("r", vec![(x, 1.0), (y, -0.5)], Sense::Ge, 0.0);
        let text = lp.to_lp_format();
        assert!(text.contains("Maximize\n obj: 2 x\n"));
        assert!(text.contains(" r: 1 x - 0.5 y >= 0\n"));
        assert!(text.contains(" 0 <= x <= 5\n"));
        assert!(text.contains(" y >= 0\n"));
        assert!(text.ends_with("End\n"));
    }
}
