//! TOML problem files.
//!
//! ```toml
//! name = "circle"
//! sense = "minimize"            # or "maximize"
//! objective = "(x - 1)^2 + y"
//!
//! [[variables]]
//! name = "x"
//! lo = -2
//! hi = 2
//! integer = false               # optional
//!
//! [[constraints]]
//! expr = "x^2 + y^2"
//! sense = "<="                  # "<=", ">=" or "="
//! rhs = 1
//!
//! [[groups]]                    # optional: keep these variables in one term
//! vars = ["x", "y"]
//! ```

use serde::Deserialize;

use super::expr::parse_expr_with_vars;
use super::{ProblemError, ProblemSpec};
use crate::milp::{ConstraintSense, ObjectiveSense, VarId};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileVar {
    name: String,
    lo: f64,
    hi: f64,
    #[serde(default)]
    integer: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRow {
    expr: String,
    sense: String,
    rhs: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileGroup {
    vars: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    sense: Option<String>,
    objective: String,
    variables: Vec<FileVar>,
    #[serde(default)]
    constraints: Vec<FileRow>,
    #[serde(default)]
    groups: Vec<FileGroup>,
}

/// Parses the TOML problem format.
pub fn parse_problem(text: &str) -> Result<ProblemSpec, ProblemError> {
    let file: ProblemFile = toml::from_str(text).map_err(|e| ProblemError::Syntax {
        line: e.span().map(|s| line_of(text, s.start)),
        msg: e.message().to_string(),
    })?;
    let sense = match file
        .sense
        .as_deref()
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        None | Some("min") | Some("minimize") => ObjectiveSense::Minimize,
        Some("max") | Some("maximize") => ObjectiveSense::Maximize,
        Some(other) => {
            return Err(ProblemError::Syntax {
                line: None,
                msg: format!("unknown objective sense `{other}`"),
            })
        }
    };
    let mut p = ProblemSpec::new(file.name.unwrap_or_else(|| "problem".into()), sense);
    for v in &file.variables {
        if p.var_by_name(&v.name).is_some() {
            return Err(ProblemError::DuplicateVariable(v.name.clone()));
        }
        p.add_variable(v.name.clone(), v.lo, v.hi, v.integer);
    }
    let names = p.var_names();
    let mut groups: Vec<Vec<VarId>> = Vec::new();
    for g in &file.groups {
        let ids = g
            .vars
            .iter()
            .map(|n| {
                p.var_by_name(n)
                    .ok_or_else(|| ProblemError::UnknownVariable(n.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        groups.push(ids);
    }
    let objective =
        parse_expr_with_vars(&file.objective, &names).map_err(|source| ProblemError::Expr {
            context: "objective".into(),
            source,
        })?;
    p.set_objective_expr(&objective, &groups)?;
    for (i, row) in file.constraints.iter().enumerate() {
        let sense = match row.sense.as_str() {
            "<=" | "<" => ConstraintSense::Le,
            ">=" | ">" => ConstraintSense::Ge,
            "=" | "==" => ConstraintSense::Eq,
            other => {
                return Err(ProblemError::Syntax {
                    line: None,
                    msg: format!("constraint {i}: unknown sense `{other}`"),
                })
            }
        };
        let e = parse_expr_with_vars(&row.expr, &names).map_err(|source| ProblemError::Expr {
            context: format!("constraint {i}"),
            source,
        })?;
        p.add_constraint_expr(&e, sense, row.rhs, &groups)?;
    }
    p.validate()?;
    Ok(p)
}

fn line_of(text: &str, byte: usize) -> usize {
    text[..byte.min(text.len())].matches('\n').count() + 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::ParseErrorKind;

    const CIRCLE: &str = r#"
name = "circle"
objective = "(x - 1)^2 + y"

[[variables]]
name = "x"
lo = -2
hi = 2

[[variables]]
name = "y"
lo = -2
hi = 2
integer = true

[[constraints]]
expr = "x^2 + y^2"
sense = "<="
rhs = 1
"#;

    #[test]
    fn reads_a_problem() {
        let p = parse_problem(CIRCLE).unwrap();
        assert_eq!(p.name, "circle");
        assert_eq!(p.variables.len(), 2);
        assert!(p.variables[1].integer);
        // (x-1)^2 in the objective, x^2 and y^2 on the row
        assert_eq!(p.nonlinear_terms.len(), 3);
        assert_eq!(p.linear_constraints.len(), 1);
        assert_eq!(p.objective_value(&[0.0, 1.0]).unwrap(), 2.0);
    }

    #[test]
    fn expression_errors_have_positions() {
        let bad = CIRCLE.replace("(x - 1)^2 + y", "sin(x");
        match parse_problem(&bad).unwrap_err() {
            ProblemError::Expr { context, source } => {
                assert_eq!(context, "objective");
                assert_eq!(source.pos, 5);
                assert_eq!(source.kind, ParseErrorKind::UnbalancedParen);
            }
            e => panic!("{e:?}"),
        }
        let bad = CIRCLE.replace("(x - 1)^2 + y", "x + w");
        assert!(matches!(
            parse_problem(&bad),
            Err(ProblemError::Expr { .. })
        ));
    }

    #[test]
    fn toml_errors_have_lines() {
        let err =
            parse_problem("objective = \"x\"\n[[variables]]\nname = \"x\"\nlo = \n").unwrap_err();
        assert!(
            matches!(err, ProblemError::Syntax { line: Some(4), .. }),
            "{err:?}"
        );
    }
}
