//! Stochastic CNF formulas with the alternating convention: variables with an
//! odd 1-based index are set by the player, even ones by a fair coin.
//!
//! Text format (DIMACS-like):
//!
//! ```text
//! c comment
//! p scnf 4 2 odd-det
//! 1 -2 0
//! 3 0
//! ```

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    /// 0-based variable index.
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Self { var, negated: false }
    }

    pub fn neg(var: usize) -> Self {
        Self { var, negated: true }
    }

    pub fn negate(self) -> Self {
        Self {
            var: self.var,
            negated: !self.negated,
        }
    }

    /// `3` is `x3`, `-3` is `¬x3`; variables are 1-based in this form.
    pub fn from_dimacs(code: i64) -> Option<Self> {
        if code == 0 {
            return None;
        }
        let var = code.unsigned_abs() as usize - 1;
        Some(Self {
            var,
            negated: code < 0,
        })
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.var as i64 + 1;
        if self.negated {
            -v
        } else {
            v
        }
    }

    pub fn eval(self, assignment: u64) -> bool {
        let bit = assignment >> self.var & 1 == 1;
        bit != self.negated
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "¬x{}", self.var + 1)
        } else {
            write!(f, "x{}", self.var + 1)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Clause {
    pub literals: Vec<Literal>,
}

impl Clause {
    pub fn new(literals: Vec<Literal>) -> Self {
        Self { literals }
    }

    pub fn unit(l: Literal) -> Self {
        Self { literals: vec![l] }
    }

    pub fn pair(a: Literal, b: Literal) -> Self {
        Self {
            literals: vec![a, b],
        }
    }

    pub fn satisfied(&self, assignment: u64) -> bool {
        self.literals.iter().any(|l| l.eval(assignment))
    }

    pub fn mentions(&self, var: usize) -> bool {
        self.literals.iter().any(|l| l.var == var)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormulaError {
    #[error("variable count {0} is odd")]
    OddVariableCount(usize),
    #[error("neither x{} nor x{} occurs in any clause", .var + 1, .var + 2)]
    Coverage { var: usize },
    #[error("clause {clause} has {width} literals, at most {max} allowed")]
    ClauseWidth { clause: usize, width: usize, max: usize },
    #[error("clause {clause} is empty")]
    EmptyClause { clause: usize },
    #[error("clause {clause} mentions variable {} beyond the declared count", .var + 1)]
    VariableOutOfRange { clause: usize, var: usize },
    #[error("x{} occurs in {count} clauses, bound is {bound}", .var + 1)]
    OccurrenceBound { var: usize, count: usize, bound: usize },
    #[error("{0} variables is too many for exhaustive evaluation")]
    TooManyVariables(usize),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Largest variable count accepted by the exhaustive game evaluator.
pub const MAX_GAME_VARIABLES: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Formula {
    pub num_vars: usize,
    pub clauses: Vec<Clause>,
}

impl Formula {
    pub fn new(num_vars: usize, clauses: Vec<Clause>) -> Self {
        Self { num_vars, clauses }
    }

    /// Player-controlled variable (odd 1-based index).
    pub fn is_deterministic(var: usize) -> bool {
        var % 2 == 0
    }

    /// Number of clauses mentioning `var`.
    pub fn occurrences(&self, var: usize) -> usize {
        self.clauses.iter().filter(|c| c.mentions(var)).count()
    }

    pub fn max_occurrence(&self) -> usize {
        (0..self.num_vars)
            .map(|v| self.occurrences(v))
            .max()
            .unwrap_or(0)
    }

    pub fn satisfied_count(&self, assignment: u64) -> usize {
        self.clauses.iter().filter(|c| c.satisfied(assignment)).count()
    }

    fn check_clauses(&self, max_width: usize) -> Result<(), FormulaError> {
        for (i, c) in self.clauses.iter().enumerate() {
            if c.literals.is_empty() {
                return Err(FormulaError::EmptyClause { clause: i });
            }
            if c.literals.len() > max_width {
                return Err(FormulaError::ClauseWidth {
                    clause: i,
                    width: c.literals.len(),
                    max: max_width,
                });
            }
            if let Some(l) = c.literals.iter().find(|l| l.var >= self.num_vars) {
                return Err(FormulaError::VariableOutOfRange { clause: i, var: l.var });
            }
        }
        Ok(())
    }

    fn check_bound(&self, bound: Option<usize>) -> Result<(), FormulaError> {
        if let Some(bound) = bound {
            for var in 0..self.num_vars {
                let count = self.occurrences(var);
                if count > bound {
                    return Err(FormulaError::OccurrenceBound { var, count, bound });
                }
            }
        }
        Ok(())
    }

    /// Checks the S2SAT requirements: even variable count, clauses of one or
    /// two literals, and for every consecutive pair one of them occurs.
    pub fn check_s2sat(&self, occurrence_bound: Option<usize>) -> Result<(), FormulaError> {
        if self.num_vars % 2 == 1 {
            return Err(FormulaError::OddVariableCount(self.num_vars));
        }
        self.check_clauses(2)?;
        for var in 0..self.num_vars.saturating_sub(1) {
            if self.occurrences(var) == 0 && self.occurrences(var + 1) == 0 {
                return Err(FormulaError::Coverage { var });
            }
        }
        self.check_bound(occurrence_bound)
    }

    pub fn check_s3sat(&self, occurrence_bound: Option<usize>) -> Result<(), FormulaError> {
        self.check_clauses(3)?;
        self.check_bound(occurrence_bound)
    }

    pub fn parse_dimacs(text: &str) -> Result<Formula, FormulaError> {
        let mut header: Option<(usize, usize)> = None;
        let mut clauses = Vec::new();
        let mut current = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            let perr = |message: String| FormulaError::Parse {
                line: line_no,
                message,
            };
            if let Some(rest) = line.strip_prefix('p') {
                if header.is_some() {
                    return Err(perr("duplicate header".into()));
                }
                let fields: Vec<&str> = rest.split_whitespace().collect();
                if fields.len() < 3 || !matches!(fields[0], "scnf" | "cnf") {
                    return Err(perr("expected `p scnf <vars> <clauses>`".into()));
                }
                if let Some(flag) = fields.get(3) {
                    if *flag != "odd-det" {
                        return Err(perr(format!("unknown convention flag {flag:?}")));
                    }
                }
                let vars = fields[1].parse().map_err(|_| perr("bad variable count".into()))?;
                let count = fields[2].parse().map_err(|_| perr("bad clause count".into()))?;
                header = Some((vars, count));
                continue;
            }
            let Some((vars, _)) = header else {
                return Err(perr("clause before header".into()));
            };
            for tok in line.split_whitespace() {
                let code: i64 = tok
                    .parse()
                    .map_err(|_| perr(format!("bad literal {tok:?}")))?;
                match Literal::from_dimacs(code) {
                    None => clauses.push(Clause::new(std::mem::take(&mut current))),
                    Some(l) if l.var >= vars => {
                        return Err(perr(format!("literal {code} exceeds {vars} variables")))
                    }
                    Some(l) => current.push(l),
                }
            }
        }
        let Some((vars, count)) = header else {
            return Err(FormulaError::Parse {
                line: 0,
                message: "missing header".into(),
            });
        };
        if !current.is_empty() {
            clauses.push(Clause::new(current));
        }
        if clauses.len() != count {
            return Err(FormulaError::Parse {
                line: 0,
                message: format!("header declares {count} clauses, found {}", clauses.len()),
            });
        }
        Ok(Formula::new(vars, clauses))
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p scnf {} {} odd-det\n", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            for l in &c.literals {
                out.push_str(&l.to_dimacs().to_string());
                out.push(' ');
            }
            out.push_str("0\n");
        }
        out
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .clauses
            .iter()
            .map(|c| {
                let lits: Vec<String> = c.literals.iter().map(|l| l.to_string()).collect();
                format!("({})", lits.join(" ∨ "))
            })
            .collect();
        write!(f, "n={} {}", self.num_vars, parts.join(" ∧ "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimacs_round_trip() {
        let text = "c tiny\np scnf 4 2 odd-det\n1 -2 0\n3 0\n";
        let f = Formula::parse_dimacs(text).unwrap();
        assert_eq!(f.num_vars, 4);
        assert_eq!(
            f.clauses,
            vec![
                Clause::pair(Literal::pos(0), Literal::neg(1)),
                Clause::unit(Literal::pos(2))
            ]
        );
        assert_eq!(Formula::parse_dimacs(&f.to_dimacs()).unwrap(), f);
    }

    #[test]
    fn parse_errors_carry_lines() {
        assert!(matches!(
            Formula::parse_dimacs("1 0\n"),
            Err(FormulaError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            Formula::parse_dimacs("p scnf 2 1\n5 0\n"),
            Err(FormulaError::Parse { line: 2, .. })
        ));
        assert!(Formula::parse_dimacs("p scnf 2 2\n1 0\n").is_err());
    }

    #[test]
    fn s2sat_checks() {
        let ok = Formula::new(2, vec![Clause::unit(Literal::pos(0))]);
        assert!(ok.check_s2sat(None).is_ok());
        assert_eq!(
            Formula::new(3, vec![]).check_s2sat(None),
            Err(FormulaError::OddVariableCount(3))
        );
        let uncovered = Formula::new(4, vec![Clause::unit(Literal::pos(0))]);
        assert_eq!(uncovered.check_s2sat(None), Err(FormulaError::Coverage { var: 1 }));
        let wide = Formula::new(
            4,
            vec![Clause::new(vec![Literal::pos(0), Literal::pos(1), Literal::pos(2)])],
        );
        assert!(matches!(wide.check_s2sat(None), Err(FormulaError::ClauseWidth { .. })));
        let twice = Formula::new(
            2,
            vec![Clause::unit(Literal::pos(0)), Clause::unit(Literal::neg(0))],
        );
        assert!(matches!(
            twice.check_s2sat(Some(1)),
            Err(FormulaError::OccurrenceBound { var: 0, count: 2, bound: 1 })
        ));
    }

    #[test]
    fn literal_evaluation() {
        assert!(Literal::pos(1).eval(0b10));
        assert!(!Literal::neg(1).eval(0b10));
        assert_eq!(Literal::from_dimacs(-3), Some(Literal::neg(2)));
        assert_eq!(Literal::neg(2).to_dimacs(), -3);
    }
}
