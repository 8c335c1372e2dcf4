use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlanStep {
    pub name: String,
    pub args: Vec<String>,
}

impl PlanStep {
    pub fn new<S: Into<String>>(name: &str, args: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.to_ascii_lowercase(),
            args: args.into_iter().map(|a| a.into().to_ascii_lowercase()).collect(),
        }
    }
}

impl fmt::Display for PlanStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
}

impl Plan {
    pub fn new(steps: Vec<PlanStep>) -> Self {
        Self { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// VAL-style plan file: one step per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&s.to_string());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct PlanParseError {
    pub line: usize,
    pub message: String,
}

fn valid_symbol(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

/// Parses a single `(name arg ...)` line (comment already stripped).
pub(crate) fn parse_step(line: &str) -> Result<PlanStep, String> {
    let t = line.trim();
    let inner = t.strip_prefix('(').ok_or_else(|| format!("expected '(' at start of step, found {t:?}"))?;
    let inner = inner.strip_suffix(')').ok_or_else(|| format!("unterminated step {t:?}"))?;
    if inner.contains(['(', ')']) {
        return Err(format!("nested parentheses in step {t:?}"));
    }
    let mut words = inner.split_whitespace();
    let name = words.next().ok_or_else(|| "empty step".to_string())?;
    if !valid_symbol(name) {
        return Err(format!("invalid action name {name:?}"));
    }
    let args: Vec<&str> = words.collect();
    if let Some(bad) = args.iter().find(|a| !valid_symbol(a)) {
        return Err(format!("invalid argument {bad:?}"));
    }
    Ok(PlanStep::new(name, args))
}

fn strip_comment(line: &str) -> &str {
    line.split_once(';').map_or(line, |(head, _)| head)
}

/// Parses a plan file. Blank lines and `;` comments (including a trailing
/// `; cost = N`) are ignored.
pub fn parse_plan(text: &str) -> Result<Plan, PlanParseError> {
    let mut steps = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let step = parse_step(line).map_err(|message| PlanParseError { line: i + 1, message })?;
        steps.push(step);
    }
    Ok(Plan { steps })
}

/// Whether a line looks like a single plan step.
pub(crate) fn is_step_line(line: &str) -> bool {
    let l = strip_comment(line).trim();
    !l.is_empty() && parse_step(l).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_steps() {
        let p = parse_plan("(pick-up b1)\n(stack b1 b2)").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.steps[1], PlanStep::new("stack", ["b1", "b2"]));
    }

    #[test]
    fn empty_and_comments() {
        assert!(parse_plan("").unwrap().is_empty());
        let p = parse_plan("; header\n\n(Pick-Up B1)  ; inline\n; cost = 1 (unit cost)\n").unwrap();
        assert_eq!(p.steps, vec![PlanStep::new("pick-up", ["b1"])]);
    }

    #[test]
    fn syntax_error_line() {
        let e = parse_plan("(move a b").unwrap_err();
        assert_eq!(e.line, 1);
        let e = parse_plan("(a)\n\nmove a b").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(parse_plan("((a))").is_err());
        assert!(parse_plan("()").is_err());
    }

    #[test]
    fn text_roundtrip() {
        let p = parse_plan("(unstack b1 b2)\n(put-down b1)\n").unwrap();
        assert_eq!(parse_plan(&p.to_text()).unwrap(), p);
    }
}
