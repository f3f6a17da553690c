use num::Zero;

use crate::formula::{Formula, FormulaError, MAX_GAME_VARIABLES};
use crate::rational::{ratio, Rational};

/// Expected satisfied-clause count of the optimal online assignment, with no
/// S2SAT well-formedness requirement.
pub fn game_value(formula: &Formula) -> Result<Rational, FormulaError> {
    formula.check_s3sat(None).or_else(|e| match e {
        FormulaError::ClauseWidth { .. } => Ok(()),
        other => Err(other),
    })?;
    if formula.num_vars > MAX_GAME_VARIABLES {
        return Err(FormulaError::TooManyVariables(formula.num_vars));
    }
    // Clauses become decided once their largest variable is set.
    let mut decided_at: Vec<Vec<usize>> = vec![Vec::new(); formula.num_vars + 1];
    for (i, c) in formula.clauses.iter().enumerate() {
        if let Some(v) = c.literals.iter().map(|l| l.var).max() {
            decided_at[v].push(i);
        }
    }
    let half = ratio(1, 2);
    fn go(
        formula: &Formula,
        decided_at: &[Vec<usize>],
        half: &Rational,
        var: usize,
        assignment: u64,
    ) -> Rational {
        if var == formula.num_vars {
            return Rational::zero();
        }
        let branch = |bit: bool| {
            let a = if bit { assignment | 1 << var } else { assignment };
            let now = decided_at[var]
                .iter()
                .filter(|&&c| formula.clauses[c].satisfied(a))
                .count();
            Rational::from_integer(now.into()) + go(formula, decided_at, half, var + 1, a)
        };
        let t = branch(true);
        let f = branch(false);
        if Formula::is_deterministic(var) {
            t.max(f)
        } else {
            (t + f) * half
        }
    }
    Ok(go(formula, &decided_at, &half, 0, 0))
}

/// [`game_value`] restricted to well-formed S2SAT formulas.
pub fn s2sat_value(formula: &Formula) -> Result<Rational, FormulaError> {
    formula.check_s2sat(None)?;
    game_value(formula)
}
