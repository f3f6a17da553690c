//! CPLEX LP text format, readable by most external solvers.

use std::fmt::Write;

use super::simplex::{LinearProgram, Sense};

fn term(out: &mut String, first: &mut bool, coef: f64, name: &str) {
    if coef < 0.0 {
        out.push_str(" -");
    } else if !*first {
        out.push_str(" +");
    }
    let mag = coef.abs();
    if mag == 1.0 {
        let _ = write!(out, " {name}");
    } else {
        let _ = write!(out, " {mag:e} {name}");
    }
    *first = false;
}

pub fn to_lp_format(lp: &LinearProgram) -> String {
    let mut out = String::from("Maximize\n obj:");
    let mut first = true;
    for (j, &c) in lp.objective.iter().enumerate() {
        if c != 0.0 {
            term(&mut out, &mut first, c, &lp.var_names[j]);
        }
    }
    if first {
        out.push_str(" 0");
    }
    out.push_str("\nSubject To\n");
    for row in &lp.rows {
        let _ = write!(out, " {}:", row.name);
        let mut first = true;
        for &(j, a) in &row.coeffs {
            term(&mut out, &mut first, a, &lp.var_names[j]);
        }
        if first {
            out.push_str(" 0");
        }
        let sense = match row.sense {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        };
        let _ = writeln!(out, " {sense} {:e}", row.rhs);
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_rows_and_objective() {
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x".into(), 2.0);
        let y = lp.add_var("y".into(), -1.0);
        lp.add_row("r1".into(), vec![(x, 1.0), (y, -3.0)], Sense::Le, 4.0);
        let text = to_lp_format(&lp);
        assert!(text.starts_with("Maximize\n obj: 2e0 x - y\n"));
        assert!(text.contains(" r1: x - 3e0 y <= 4e0\n"));
        assert!(text.ends_with("End\n"));
    }
}
