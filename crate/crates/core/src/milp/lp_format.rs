//! Reader and writer for the CPLEX LP text format (the subset with
//! objective, rows, bounds, generals and binaries).

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::model::{
    merge_terms, ConstraintSense, LinearConstraint, LpProblem, ObjectiveSense, VarId,
};

const WRAP: usize = 78;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpFormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing objective section")]
    MissingObjective,
}

fn valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
        && !is_keyword(&s.to_ascii_lowercase())
        && !matches!(s.to_ascii_lowercase().as_str(), "inf" | "infinity" | "free")
}

fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

struct Wrapper {
    out: String,
    line_len: usize,
}

impl Wrapper {
    fn start(&mut self, head: &str) {
        self.out.push_str(head);
        self.line_len = head.len();
    }
    fn push(&mut self, piece: &str) {
        if self.line_len + 1 + piece.len() > WRAP && self.line_len > 0 {
            self.out.push_str("\n   ");
            self.line_len = 3;
        }
        self.out.push(' ');
        self.out.push_str(piece);
        self.line_len += 1 + piece.len();
    }
    fn end(&mut self) {
        self.out.push('\n');
        self.line_len = 0;
    }
}

fn push_terms(w: &mut Wrapper, terms: &[(VarId, f64)], names: &[String]) {
    for (i, &(v, c)) in terms.iter().enumerate() {
        let sign = if c < 0.0 { "-" } else { "+" };
        let mag = fmt_num(c.abs());
        let piece = if i == 0 && c >= 0.0 {
            format!("{mag} {}", names[v.0])
        } else {
            format!("{sign} {mag} {}", names[v.0])
        };
        w.push(&piece);
    }
}

/// Renders `problem` as LP text. Names that are not valid LP identifiers (or
/// repeat) are replaced by `x<index>` / `c<index>`.
pub fn write_lp(problem: &LpProblem) -> String {
    let mut seen = HashMap::new();
    let names: Vec<String> = problem
        .vars
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let name = if valid_name(&v.name) && !seen.contains_key(&v.name) {
                v.name.clone()
            } else {
                format!("x{j}")
            };
            seen.insert(name.clone(), ());
            name
        })
        .collect();
    let mut w = Wrapper {
        out: String::new(),
        line_len: 0,
    };
    w.out.push_str(match problem.sense {
        ObjectiveSense::Minimize => "Minimize\n",
        ObjectiveSense::Maximize => "Maximize\n",
    });
    w.start(" obj:");
    let terms = merge_terms(&problem.objective.terms);
    push_terms(&mut w, &terms, &names);
    let k = problem.objective.constant;
    if k != 0.0 || terms.is_empty() {
        let sign = if k < 0.0 { "-" } else { "+" };
        w.push(&format!("{sign} {}", fmt_num(k.abs())));
    }
    w.end();

    w.out.push_str("Subject To\n");
    let mut row_names = HashMap::new();
    for (i, row) in problem.rows.iter().enumerate() {
        let name = match &row.name {
            Some(n) if valid_name(n) && !row_names.contains_key(n) && !seen.contains_key(n) => {
                n.clone()
            }
            _ => format!("c{i}"),
        };
        row_names.insert(name.clone(), ());
        w.start(&format!(" {name}:"));
        let terms = merge_terms(&row.coeffs);
        if terms.is_empty() {
            // an empty row still needs a left-hand side
            w.push(&format!("0 {}", names.first().map_or("x0", |s| s.as_str())));
        }
        push_terms(&mut w, &terms, &names);
        w.push(&format!("{} {}", row.sense, fmt_num(row.rhs)));
        w.end();
    }

    w.out.push_str("Bounds\n");
    for (j, v) in problem.vars.iter().enumerate() {
        let name = &names[j];
        if v.lo == f64::NEG_INFINITY && v.hi == f64::INFINITY {
            let _ = writeln!(w.out, " {name} free");
        } else if v.lo == v.hi {
            let _ = writeln!(w.out, " {name} = {}", fmt_num(v.lo));
        } else {
            let _ = writeln!(w.out, " {} <= {name} <= {}", fmt_num(v.lo), fmt_num(v.hi));
        }
    }
    for (head, pick) in [("Generals", false), ("Binaries", true)] {
        let list: Vec<&String> = problem
            .vars
            .iter()
            .zip(&names)
            .filter(|(v, _)| v.integer && ((v.lo == 0.0 && v.hi == 1.0) == pick))
            .map(|(_, n)| n)
            .collect();
        if !list.is_empty() {
            let _ = writeln!(w.out, "{head}");
            w.start("");
            for n in list {
                w.push(n);
            }
            w.end();
        }
    }
    w.out.push_str("End\n");
    w.out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Colon,
    Cmp(ConstraintSense),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    Objective,
    Rows,
    Bounds,
    Generals,
    Binaries,
    End,
}

fn is_keyword(s: &str) -> bool {
    section_of(s).is_some() || s == "subject" || s == "such"
}

fn section_of(s: &str) -> Option<Section> {
    Some(match s {
        "minimize" | "minimise" | "minimum" | "min" | "maximize" | "maximise" | "maximum"
        | "max" => Section::Objective,
        "st" | "s.t." => Section::Rows,
        "bounds" | "bound" => Section::Bounds,
        "generals" | "general" | "gen" | "integers" => Section::Generals,
        "binaries" | "binary" | "bin" => Section::Binaries,
        "end" => Section::End,
        _ => return None,
    })
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, LpFormatError> {
    let mut out = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let body = raw.split('\\').next().unwrap_or("");
        let chars: Vec<char> = body.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c.is_whitespace() {
                i += 1;
            } else if c == '+' {
                out.push((Tok::Plus, line));
                i += 1;
            } else if c == '-' {
                out.push((Tok::Minus, line));
                i += 1;
            } else if c == ':' {
                out.push((Tok::Colon, line));
                i += 1;
            } else if c == '<' || c == '>' || c == '=' {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '=' || chars[j] == '<' || chars[j] == '>') {
                    j += 1;
                }
                let s: String = chars[i..j].iter().collect();
                let sense = match s.as_str() {
                    "<" | "<=" | "=<" => ConstraintSense::Le,
                    ">" | ">=" | "=>" => ConstraintSense::Ge,
                    "=" | "==" => ConstraintSense::Eq,
                    _ => {
                        return Err(LpFormatError::Syntax {
                            line,
                            msg: format!("unknown operator `{s}`"),
                        })
                    }
                };
                out.push((Tok::Cmp(sense), line));
                i = j;
            } else if c.is_ascii_digit() || c == '.' {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let s: String = chars[i..j].iter().collect();
                let v = s.parse::<f64>().map_err(|_| LpFormatError::Syntax {
                    line,
                    msg: format!("bad number `{s}`"),
                })?;
                out.push((Tok::Num(v), line));
                i = j;
            } else if c.is_alphabetic() || c == '_' {
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || "_.[]".contains(chars[j])) {
                    j += 1;
                }
                out.push((Tok::Ident(chars[i..j].iter().collect()), line));
                i = j;
            } else {
                return Err(LpFormatError::Syntax {
                    line,
                    msg: format!("unexpected character `{c}`"),
                });
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    problem: LpProblem,
    index: HashMap<String, VarId>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }
    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.0)
    }
    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or(self.toks.last())
            .map_or(0, |t| t.1)
    }
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, LpFormatError> {
        Err(LpFormatError::Syntax {
            line: self.line(),
            msg: msg.into(),
        })
    }

    /// Section keyword at the cursor, consuming it.
    fn section_here(&mut self) -> Option<(Section, Option<ObjectiveSense>)> {
        let Some(Tok::Ident(s)) = self.peek() else {
            return None;
        };
        let low = s.to_ascii_lowercase();
        if low == "subject" || low == "such" {
            if let Some(Tok::Ident(t)) = self.peek_at(1) {
                let t = t.to_ascii_lowercase();
                if t == "to" || t == "that" {
                    self.pos += 2;
                    return Some((Section::Rows, None));
                }
            }
            return None;
        }
        let sec = section_of(&low)?;
        let sense = match sec {
            Section::Objective if low.starts_with("min") => Some(ObjectiveSense::Minimize),
            Section::Objective => Some(ObjectiveSense::Maximize),
            _ => None,
        };
        self.pos += 1;
        Some((sec, sense))
    }

    fn at_section(&mut self) -> bool {
        let save = self.pos;
        let hit = self.section_here().is_some();
        self.pos = save;
        hit
    }

    fn var(&mut self, name: &str) -> VarId {
        if let Some(&v) = self.index.get(name) {
            return v;
        }
        let v = self.problem.add_var(name, 0.0, f64::INFINITY, false);
        self.index.insert(name.to_string(), v);
        v
    }

    fn opt_label(&mut self) -> Option<String> {
        if let (Some(Tok::Ident(s)), Some(Tok::Colon)) = (self.peek(), self.peek_at(1)) {
            let s = s.clone();
            self.pos += 2;
            Some(s)
        } else {
            None
        }
    }

    /// Linear terms and constants up to a comparison, section or label.
    fn expr(&mut self) -> Result<(Vec<(VarId, f64)>, f64), LpFormatError> {
        let mut terms = Vec::new();
        let mut constant = 0.0;
        loop {
            if self.peek().is_none()
                || matches!(self.peek(), Some(Tok::Cmp(_)))
                || self.at_section()
            {
                break;
            }
            if let (Some(Tok::Ident(_)), Some(Tok::Colon)) = (self.peek(), self.peek_at(1)) {
                break;
            }
            let mut sign = 1.0;
            while let Some(t) = self.peek() {
                match t {
                    Tok::Plus => self.pos += 1,
                    Tok::Minus => {
                        sign = -sign;
                        self.pos += 1
                    }
                    _ => break,
                }
            }
            match self.peek().cloned() {
                Some(Tok::Num(v)) => {
                    self.pos += 1;
                    if let Some(Tok::Ident(name)) = self.peek().cloned() {
                        if !self.at_section() && !matches!(self.peek_at(1), Some(Tok::Colon)) {
                            self.pos += 1;
                            let id = self.var(&name);
                            terms.push((id, sign * v));
                            continue;
                        }
                    }
                    constant += sign * v;
                }
                Some(Tok::Ident(name)) => {
                    self.pos += 1;
                    let id = self.var(&name);
                    terms.push((id, sign));
                }
                _ => return self.err("expected a term"),
            }
        }
        Ok((terms, constant))
    }

    fn signed_number(&mut self) -> Result<f64, LpFormatError> {
        let mut sign = 1.0;
        loop {
            match self.peek().cloned() {
                Some(Tok::Plus) => self.pos += 1,
                Some(Tok::Minus) => {
                    sign = -sign;
                    self.pos += 1
                }
                Some(Tok::Num(v)) => {
                    self.pos += 1;
                    return Ok(sign * v);
                }
                Some(Tok::Ident(s))
                    if matches!(s.to_ascii_lowercase().as_str(), "inf" | "infinity") =>
                {
                    self.pos += 1;
                    return Ok(sign * f64::INFINITY);
                }
                _ => return self.err("expected a number"),
            }
        }
    }

    fn is_number_start(&self) -> bool {
        match self.peek() {
            Some(Tok::Num(_)) | Some(Tok::Plus) | Some(Tok::Minus) => true,
            Some(Tok::Ident(s)) => matches!(s.to_ascii_lowercase().as_str(), "inf" | "infinity"),
            _ => false,
        }
    }

    fn bound_line(&mut self) -> Result<(), LpFormatError> {
        // forms: x free | lo <= x [<= hi] | x <= hi | x >= lo | x = v
        if self.is_number_start() {
            let lo = self.signed_number()?;
            let Some(Tok::Cmp(c1)) = self.peek().cloned() else {
                return self.err("expected a comparison in bound");
            };
            self.pos += 1;
            let Some(Tok::Ident(name)) = self.peek().cloned() else {
                return self.err("expected a variable in bound");
            };
            self.pos += 1;
            let v = self.var(&name);
            self.apply_bound(v, c1, lo, true);
            if let Some(Tok::Cmp(c2)) = self.peek().cloned() {
                self.pos += 1;
                let hi = self.signed_number()?;
                self.apply_bound(v, c2, hi, false);
            }
            return Ok(());
        }
        let Some(Tok::Ident(name)) = self.peek().cloned() else {
            return self.err("expected a bound");
        };
        self.pos += 1;
        let v = self.var(&name);
        match self.peek().cloned() {
            Some(Tok::Ident(s)) if s.eq_ignore_ascii_case("free") => {
                self.pos += 1;
                self.problem.vars[v.0].lo = f64::NEG_INFINITY;
                self.problem.vars[v.0].hi = f64::INFINITY;
            }
            Some(Tok::Cmp(c)) => {
                self.pos += 1;
                let b = self.signed_number()?;
                self.apply_bound(v, c, b, false);
            }
            _ => return self.err("expected `free` or a comparison"),
        }
        Ok(())
    }

    /// `num_first`: the number is on the left (`b <= x` means a lower bound).
    fn apply_bound(&mut self, v: VarId, c: ConstraintSense, b: f64, num_first: bool) {
        let var = &mut self.problem.vars[v.0];
        match (c, num_first) {
            (ConstraintSense::Eq, _) => {
                var.lo = b;
                var.hi = b;
            }
            (ConstraintSense::Le, true) | (ConstraintSense::Ge, false) => var.lo = b,
            (ConstraintSense::Ge, true) | (ConstraintSense::Le, false) => var.hi = b,
        }
    }
}

/// Parses LP text. Variables are numbered in order of first appearance and
/// default to `[0, +inf)`.
pub fn parse_lp(text: &str) -> Result<LpProblem, LpFormatError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
        problem: LpProblem::new(ObjectiveSense::Minimize),
        index: HashMap::new(),
    };
    match p.section_here() {
        Some((Section::Objective, Some(sense))) => p.problem.sense = sense,
        _ => return Err(LpFormatError::MissingObjective),
    }
    let mut section = Section::Objective;
    loop {
        if p.peek().is_none() {
            break;
        }
        if let Some((s, _)) = p.section_here() {
            if s == Section::Objective {
                return p.err("duplicate objective section");
            }
            section = s;
            if s == Section::End {
                break;
            }
            continue;
        }
        match section {
            Section::Objective => {
                p.opt_label();
                let (terms, constant) = p.expr()?;
                p.problem.objective.terms.extend(terms);
                p.problem.objective.constant += constant;
            }
            Section::Rows => {
                let name = p.opt_label();
                let (terms, constant) = p.expr()?;
                let Some(Tok::Cmp(sense)) = p.peek().cloned() else {
                    return p.err("expected a comparison in row");
                };
                p.pos += 1;
                let rhs = p.signed_number()? - constant;
                let mut row = LinearConstraint::new(terms, sense, rhs);
                row.name = name;
                p.problem.add_row(row);
            }
            Section::Bounds => p.bound_line()?,
            Section::Generals | Section::Binaries => {
                let Some(Tok::Ident(name)) = p.peek().cloned() else {
                    return p.err("expected a variable name");
                };
                p.pos += 1;
                let v = p.var(&name);
                let var = &mut p.problem.vars[v.0];
                var.integer = true;
                if section == Section::Binaries {
                    var.lo = 0.0;
                    var.hi = 1.0;
                }
            }
            Section::End => break,
        }
    }
    Ok(p.problem)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_a_small_model() {
        let text = "\\ comment line\n\
            Maximize\n obj: 3 x + 2 y - z + 1.5\n\
            Subject To\n c1: x + y <= 4\n c2: x + 3 y >= -2e1\n  -x + z = 0\n\
            Bounds\n x <= 10\n -5 <= y <= 5\n z free\n\
            Generals\n x\nBinaries\n b\nEnd\n";
        let p = parse_lp(text).unwrap();
        assert_eq!(p.sense, ObjectiveSense::Maximize);
        assert_eq!(p.vars.len(), 4);
        assert_eq!(p.objective.constant, 1.5);
        assert_eq!(
            p.objective.terms,
            vec![(VarId(0), 3.0), (VarId(1), 2.0), (VarId(2), -1.0)]
        );
        assert_eq!(p.rows.len(), 3);
        assert_eq!(p.rows[1].rhs, -20.0);
        assert_eq!(p.rows[1].name.as_deref(), Some("c2"));
        assert_eq!(p.rows[2].sense, ConstraintSense::Eq);
        assert_eq!(
            (p.vars[0].lo, p.vars[0].hi, p.vars[0].integer),
            (0.0, 10.0, true)
        );
        assert_eq!((p.vars[1].lo, p.vars[1].hi), (-5.0, 5.0));
        assert_eq!(p.vars[2].lo, f64::NEG_INFINITY);
        assert_eq!(
            (p.vars[3].lo, p.vars[3].hi, p.vars[3].integer),
            (0.0, 1.0, true)
        );
    }

    #[test]
    fn write_then_read() {
        let mut p = LpProblem::new(ObjectiveSense::Minimize);
        let a = p.add_var("a", -1.0, 2.5, false);
        let b = p.add_binary("b");
        let c = p.add_var("c", 0.0, 7.0, true);
        let f = p.add_var("f", f64::NEG_INFINITY, f64::INFINITY, false);
        p.objective.add_term(a, 1e-7);
        p.objective.add_term(c, -3.25);
        p.objective.constant = -4.0;
        p.add_row(
            LinearConstraint::new(
                vec![(a, 1.0), (b, -2.0), (f, 0.1)],
                ConstraintSense::Ge,
                -1.0,
            )
            .named("r"),
        );
        p.add_row(LinearConstraint::new(
            vec![(c, 1.0), (f, 1.0)],
            ConstraintSense::Eq,
            3.0,
        ));
        let text = write_lp(&p);
        let q = parse_lp(&text).unwrap();
        assert_eq!(q.sense, p.sense);
        assert_eq!(q.objective.constant, -4.0);
        let by_name =
            |prob: &LpProblem, n: &str| prob.vars.iter().position(|v| v.name == n).unwrap();
        for v in &p.vars {
            let w = &q.vars[by_name(&q, &v.name)];
            assert_eq!((v.lo, v.hi, v.integer), (w.lo, w.hi, w.integer));
        }
        assert_eq!(q.rows.len(), 2);
        assert_eq!(q.rows[0].name.as_deref(), Some("r"));
        assert_eq!(q.rows[1].rhs, 3.0);
    }

    #[test]
    fn long_rows_wrap() {
        let mut p = LpProblem::new(ObjectiveSense::Minimize);
        let vars: Vec<_> = (0..60)
            .map(|i| p.add_var(format!("variable_{i}"), 0.0, 1.0, false))
            .collect();
        p.add_row(LinearConstraint::new(
            vars.iter().map(|&v| (v, 1.5)).collect(),
            ConstraintSense::Le,
            10.0,
        ));
        let text = write_lp(&p);
        assert!(text.lines().all(|l| l.len() <= WRAP + 20));
        let q = parse_lp(&text).unwrap();
        assert_eq!(q.rows[0].coeffs.len(), 60);
    }

    #[test]
    fn reports_line_numbers() {
        let err = parse_lp("Minimize\n obj: x\nSubject To\n c: x + y\nEnd").unwrap_err();
        assert!(
            matches!(err, LpFormatError::Syntax { line: 5, .. }),
            "{err:?}"
        );
        assert_eq!(
            parse_lp("Subject To\n x <= 1"),
            Err(LpFormatError::MissingObjective)
        );
    }
}
