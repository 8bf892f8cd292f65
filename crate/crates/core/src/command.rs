//! The QoS command vector: a compact per-query string that binds one entry
//! to each schema parameter, in schema order.
//!
//! Grammar, with whitespace insignificant everywhere:
//!
//! ```text
//! command  = "(" entry { "," entry } ")"
//! entry    = objective | constraint
//! objective  = "w" "=" number          ; weight, must be >= 0
//! constraint = op number               ; op in { "=", "<", "<=", ">", ">=" }
//! number   = ["-"] digits ["." digits] ["/" digits ["." digits]] ["%"]
//! ```
//!
//! A fraction divides numerator by denominator and a trailing percent sign
//! divides by one hundred, so `w=3/5` and `>60%` both read naturally. At
//! least one entry must be an objective.

use std::fmt;

use thiserror::Error;

use crate::calculus::DecisionVector;
use crate::model::{ParameterSchema, Sense};

/// Absolute tolerance used by equality constraints.
pub const EQ_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintOp {
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
}

impl ConstraintOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ConstraintOp::Eq => "=",
            ConstraintOp::Lt => "<",
            ConstraintOp::Le => "<=",
            ConstraintOp::Gt => ">",
            ConstraintOp::Ge => ">=",
        }
    }

    fn holds(self, x: f64, bound: f64) -> bool {
        match self {
            ConstraintOp::Eq => (x - bound).abs() <= EQ_TOLERANCE,
            ConstraintOp::Lt => x < bound,
            ConstraintOp::Le => x <= bound,
            ConstraintOp::Gt => x > bound,
            ConstraintOp::Ge => x >= bound,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CommandEntry {
    /// Bounds the decision value of the parameter at this position.
    Constraint { op: ConstraintOp, bound: f64 },
    /// Weights the decision value of the parameter at this position in the
    /// ranking score.
    Objective { weight: f64 },
}

/// A parsed command, validated against a schema: one entry per parameter and
/// at least one objective among them.
#[derive(Debug, Clone, PartialEq)]
pub struct QosCommand {
    entries: Vec<CommandEntry>,
}

impl QosCommand {
    /// Builds a command from entries, enforcing the same rules as parsing.
    pub fn from_entries(
        entries: Vec<CommandEntry>,
        schema: &ParameterSchema,
    ) -> Result<Self, CommandError> {
        if entries.len() != schema.arity() {
            return Err(CommandError::ArityMismatch {
                expected: schema.arity(),
                got: entries.len(),
            });
        }
        let mut has_objective = false;
        for (i, entry) in entries.iter().enumerate() {
            match entry {
                CommandEntry::Objective { weight } => {
                    if !weight.is_finite() || *weight < 0.0 {
                        return Err(CommandError::InvalidWeight { index: i, weight: *weight });
                    }
                    has_objective = true;
                }
                CommandEntry::Constraint { bound, .. } => {
                    if !bound.is_finite() {
                        return Err(CommandError::InvalidBound { index: i, bound: *bound });
                    }
                }
            }
        }
        if !has_objective {
            return Err(CommandError::NoObjective);
        }
        Ok(QosCommand { entries })
    }

    pub fn entries(&self) -> &[CommandEntry] {
        &self.entries
    }

    /// Zero-based positions of the objective entries.
    pub fn objective_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().enumerate().filter_map(|(i, e)| {
            matches!(e, CommandEntry::Objective { .. }).then_some(i)
        })
    }

    /// Canonical text form; parsing it yields back an equal command.
    pub fn render(&self) -> String {
        let mut out = String::from("(");
        for (i, entry) in self.entries.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            match entry {
                CommandEntry::Constraint { op, bound } => {
                    out.push_str(op.symbol());
                    out.push_str(&format_number(*bound));
                }
                CommandEntry::Objective { weight } => {
                    out.push_str("w=");
                    out.push_str(&format_number(*weight));
                }
            }
        }
        out.push(')');
        out
    }
}

impl fmt::Display for QosCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

fn format_number(v: f64) -> String {
    // Shortest representation that round-trips; integral values print bare.
    format!("{v}")
}

/// Parses a command string against a schema. Entries bind positionally to
/// schema parameters, so the entry count must equal the schema arity.
pub fn parse_command(text: &str, schema: &ParameterSchema) -> Result<QosCommand, CommandError> {
    let mut p = Parser { text: text.as_bytes(), pos: 0 };
    p.skip_ws();
    p.expect(b'(')?;
    let mut entries = Vec::new();
    loop {
        entries.push(p.entry()?);
        p.skip_ws();
        match p.peek() {
            Some(b',') => {
                p.pos += 1;
            }
            Some(b')') => {
                p.pos += 1;
                break;
            }
            other => {
                return Err(p.syntax(match other {
                    Some(_) => "expected `,` or `)`",
                    None => "unterminated command, expected `)`",
                }))
            }
        }
    }
    p.skip_ws();
    if p.peek().is_some() {
        return Err(p.syntax("trailing input after `)`"));
    }
    QosCommand::from_entries(entries, schema)
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), CommandError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(match c {
                b'(' => "expected `(`",
                b'=' => "expected `=`",
                _ => "unexpected character",
            }))
        }
    }

    fn syntax(&self, message: &str) -> CommandError {
        CommandError::Syntax { column: self.pos + 1, message: message.into() }
    }

    fn entry(&mut self) -> Result<CommandEntry, CommandError> {
        self.skip_ws();
        match self.peek() {
            Some(b'w') => {
                self.pos += 1;
                self.skip_ws();
                self.expect(b'=')?;
                let weight = self.number()?;
                Ok(CommandEntry::Objective { weight })
            }
            Some(b'=') => {
                self.pos += 1;
                let bound = self.number()?;
                Ok(CommandEntry::Constraint { op: ConstraintOp::Eq, bound })
            }
            Some(c @ (b'<' | b'>')) => {
                self.pos += 1;
                let op = if self.peek() == Some(b'=') {
                    self.pos += 1;
                    if c == b'<' {
                        ConstraintOp::Le
                    } else {
                        ConstraintOp::Ge
                    }
                } else if c == b'<' {
                    ConstraintOp::Lt
                } else {
                    ConstraintOp::Gt
                };
                let bound = self.number()?;
                Ok(CommandEntry::Constraint { op, bound })
            }
            Some(_) => Err(self.syntax("expected an operator (`=`, `<`, `<=`, `>`, `>=`) or `w=`")),
            None => Err(self.syntax("unterminated command, expected an entry")),
        }
    }

    fn number(&mut self) -> Result<f64, CommandError> {
        self.skip_ws();
        let mut v = self.decimal()?;
        self.skip_ws();
        if self.peek() == Some(b'/') {
            self.pos += 1;
            self.skip_ws();
            let denom = self.decimal()?;
            if denom == 0.0 {
                return Err(self.syntax("division by zero in fraction"));
            }
            v /= denom;
            self.skip_ws();
        }
        if self.peek() == Some(b'%') {
            self.pos += 1;
            v /= 100.0;
        }
        Ok(v)
    }

    fn decimal(&mut self) -> Result<f64, CommandError> {
        let start = self.pos;
        if self.peek() == Some(b'-') {
            self.pos += 1;
        }
        let digits_start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.peek() == Some(b'.') {
            self.pos += 1;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        let token = &self.text[start..self.pos];
        if self.pos == digits_start || token == b"-" || token == b"." || token == b"-." {
            return Err(self.syntax("expected a number"));
        }
        std::str::from_utf8(token)
            .ok()
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or_else(|| self.syntax("expected a number"))
    }
}

/// Whether every constraint entry holds for the decision vector.
pub fn check_constraints(command: &QosCommand, decision: &DecisionVector) -> bool {
    debug_assert_eq!(command.entries.len(), decision.x.len());
    command
        .entries
        .iter()
        .zip(&decision.x)
        .all(|(entry, &x)| match entry {
            CommandEntry::Constraint { op, bound } => op.holds(x, *bound),
            CommandEntry::Objective { .. } => true,
        })
}

/// Weighted ranking score, lower is better. Higher-better decision values
/// enter with a negated sign so that improving any objective always lowers
/// the score.
pub fn score(command: &QosCommand, decision: &DecisionVector, schema: &ParameterSchema) -> f64 {
    debug_assert_eq!(command.entries.len(), schema.arity());
    let mut total = 0.0;
    for ((entry, decl), &x) in command.entries.iter().zip(schema.params()).zip(&decision.x) {
        if let CommandEntry::Objective { weight } = entry {
            let sign = match decl.decision_sense() {
                Sense::LowerBetter => 1.0,
                Sense::HigherBetter => -1.0,
            };
            total += weight * sign * x;
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CommandError {
    #[error("column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("command has {got} entries but the schema declares {expected} parameters")]
    ArityMismatch { expected: usize, got: usize },
    #[error("command declares no objective; at least one `w=` entry is required")]
    NoObjective,
    #[error("entry {index}: weight {weight} must be a non-negative finite number")]
    InvalidWeight { index: usize, weight: f64 },
    #[error("entry {index}: bound {bound} must be finite")]
    InvalidBound { index: usize, bound: f64 },
}
