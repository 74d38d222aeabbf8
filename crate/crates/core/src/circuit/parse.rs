use std::collections::BTreeSet;

use thiserror::Error;

use super::{
    Angle, Axis, Basis, Circuit, CircuitError, GateKind, InitState, Operation, QubitDecl, QubitId, Validation,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnknownQubit(String),
    DuplicateQubit(String),
    Syntax(String),
    UseAfterMeasure(String),
    ControllerNotMeasured(String),
    /// Any other structural rule (use before init, double init, bad output).
    Invalid(String),
}

/// Parse failure with a 1-based source position.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{line}:{column}: {}", describe(.kind))]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

fn describe(kind: &ParseErrorKind) -> String {
    match kind {
        ParseErrorKind::UnknownQubit(q) => format!("unknown qubit `{q}`"),
        ParseErrorKind::DuplicateQubit(q) => format!("qubit `{q}` declared twice"),
        ParseErrorKind::Syntax(msg) => format!("syntax error: {msg}"),
        ParseErrorKind::UseAfterMeasure(q) => format!("qubit `{q}` used after measurement"),
        ParseErrorKind::ControllerNotMeasured(q) => format!("controller `{q}` not measured earlier"),
        ParseErrorKind::Invalid(msg) => msg.clone(),
    }
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let content = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in content.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token { text: &content[s..i], column: s + 1 });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token { text: &content[s..], column: s + 1 });
    }
    out
}

struct Parser {
    line: usize,
    qubits: Vec<QubitDecl>,
    declared: BTreeSet<String>,
    ops: Vec<Operation>,
    /// (line, column) of each op's keyword.
    spans: Vec<(usize, usize)>,
    outputs: Vec<QubitId>,
    output_spans: Vec<(usize, usize)>,
}

impl Parser {
    fn err(&self, column: usize, kind: ParseErrorKind) -> ParseError {
        ParseError { line: self.line, column, kind }
    }

    fn syntax(&self, column: usize, msg: impl Into<String>) -> ParseError {
        self.err(column, ParseErrorKind::Syntax(msg.into()))
    }

    fn qubit(&self, tok: &Token) -> Result<QubitId, ParseError> {
        if !QubitId::is_valid_name(tok.text) {
            return Err(self.syntax(tok.column, format!("invalid qubit name `{}`", tok.text)));
        }
        if !self.declared.contains(tok.text) {
            return Err(self.err(tok.column, ParseErrorKind::UnknownQubit(tok.text.to_string())));
        }
        Ok(QubitId::new(tok.text))
    }

    fn declare(&mut self, tok: &Token, input: bool) -> Result<(), ParseError> {
        if !QubitId::is_valid_name(tok.text) {
            return Err(self.syntax(tok.column, format!("invalid qubit name `{}`", tok.text)));
        }
        if !self.declared.insert(tok.text.to_string()) {
            return Err(self.err(tok.column, ParseErrorKind::DuplicateQubit(tok.text.to_string())));
        }
        self.qubits.push(QubitDecl { id: QubitId::new(tok.text), input });
        Ok(())
    }

    fn arity(&self, toks: &[Token], n: usize) -> Result<(), ParseError> {
        if toks.len() != n {
            let col = toks.get(n).map_or(toks[0].column, |t| t.column);
            return Err(
                self.syntax(col, format!("`{}` takes {} argument(s), got {}", toks[0].text, n - 1, toks.len() - 1))
            );
        }
        Ok(())
    }

    fn statement(&mut self, toks: &[Token]) -> Result<(), ParseError> {
        let head = &toks[0];
        let span = (self.line, head.column);
        let op = match head.text {
            "qubit" | "input" => {
                self.arity(toks, 2)?;
                return self.declare(&toks[1], head.text == "input");
            }
            "output" => {
                self.arity(toks, 2)?;
                let q = self.qubit(&toks[1])?;
                self.outputs.push(q);
                self.output_spans.push((self.line, toks[1].column));
                return Ok(());
            }
            "init" => {
                self.arity(toks, 3)?;
                let qubit = self.qubit(&toks[1])?;
                let state = parse_state(toks[2].text).ok_or_else(|| {
                    self.syntax(
                        toks[2].column,
                        format!("unknown init state `{}` (expected |0>, |+>, |A>, |Y>)", toks[2].text),
                    )
                })?;
                Operation::Init { qubit, state }
            }
            "h" | "s" | "v" | "t" => {
                self.arity(toks, 2)?;
                let kind = match head.text {
                    "h" => GateKind::H,
                    "s" => GateKind::S,
                    "v" => GateKind::V,
                    _ => GateKind::T,
                };
                Operation::Gate { kind, qubit: self.qubit(&toks[1])? }
            }
            "rz" | "rx" => {
                self.arity(toks, 3)?;
                let qubit = self.qubit(&toks[1])?;
                let angle = parse_angle(toks[2].text).ok_or_else(|| {
                    self.syntax(toks[2].column, format!("bad angle `{}` (expected <num>/<den>pi)", toks[2].text))
                })?;
                let axis = if head.text == "rz" { Axis::Z } else { Axis::X };
                Operation::Rotation { axis, angle, qubit }
            }
            "cnot" => {
                self.arity(toks, 3)?;
                Operation::Cnot { control: self.qubit(&toks[1])?, target: self.qubit(&toks[2])? }
            }
            "measure" => {
                self.arity(toks, 3)?;
                let qubit = self.qubit(&toks[1])?;
                let basis = parse_basis(toks[2].text)
                    .ok_or_else(|| self.syntax(toks[2].column, format!("unknown basis `{}`", toks[2].text)))?;
                Operation::Measure { qubit, basis }
            }
            "smeasure" => {
                self.arity(toks, 5)?;
                let qubit = self.qubit(&toks[1])?;
                let ctrl = self.keyed(&toks[2], "ctrl")?;
                let controller = self.qubit(&Token { text: ctrl, column: toks[2].column + 5 })?;
                let zero = self.keyed(&toks[3], "zero")?;
                let one = self.keyed(&toks[4], "one")?;
                let basis_if_zero =
                    parse_basis(zero).ok_or_else(|| self.syntax(toks[3].column, format!("unknown basis `{zero}`")))?;
                let basis_if_one =
                    parse_basis(one).ok_or_else(|| self.syntax(toks[4].column, format!("unknown basis `{one}`")))?;
                Operation::SelectiveMeasure { qubit, controller, basis_if_zero, basis_if_one }
            }
            other => return Err(self.syntax(head.column, format!("unknown statement `{other}`"))),
        };
        self.ops.push(op);
        self.spans.push(span);
        Ok(())
    }

    fn keyed<'t>(&self, tok: &Token<'t>, key: &str) -> Result<&'t str, ParseError> {
        tok.text
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .ok_or_else(|| self.syntax(tok.column, format!("expected `{key}=...`, got `{}`", tok.text)))
    }
}

fn parse_state(s: &str) -> Option<InitState> {
    match s {
        "|0>" => Some(InitState::Zero),
        "|+>" => Some(InitState::Plus),
        "|A>" => Some(InitState::A),
        "|Y>" => Some(InitState::Y),
        _ => None,
    }
}

fn parse_basis(s: &str) -> Option<Basis> {
    match s {
        "Z" => Some(Basis::Z),
        "X" => Some(Basis::X),
        _ => None,
    }
}

fn parse_angle(s: &str) -> Option<Angle> {
    let body = s.strip_suffix("pi")?;
    let (num, den) = body.split_once('/')?;
    let num: i64 = num.parse().ok()?;
    let den: i64 = den.parse().ok()?;
    if den <= 0 {
        return None;
    }
    Some(Angle::new(num, den))
}

/// Parses the line-based `.qc` format into a strictly validated circuit.
pub fn parse_circuit(text: &str) -> Result<Circuit, ParseError> {
    parse_circuit_with(text, Validation::Strict)
}

pub fn parse_circuit_with(text: &str, mode: Validation) -> Result<Circuit, ParseError> {
    let mut p = Parser {
        line: 0,
        qubits: Vec::new(),
        declared: BTreeSet::new(),
        ops: Vec::new(),
        spans: Vec::new(),
        outputs: Vec::new(),
        output_spans: Vec::new(),
    };
    for (i, raw) in text.lines().enumerate() {
        p.line = i + 1;
        let toks = tokenize(raw);
        if toks.is_empty() {
            continue;
        }
        p.statement(&toks)?;
    }
    let Parser { qubits, ops, spans, outputs, output_spans, .. } = p;
    let output_pos = |q: &QubitId| outputs.iter().rposition(|o| o == q).map(|i| output_spans[i]).unwrap_or((1, 1));
    Circuit::with_validation(qubits, ops, outputs.clone(), mode).map_err(|e| {
        let (line, column) = match e.op_index() {
            Some(i) => spans[i],
            None => match &e {
                CircuitError::OutputMeasured(q) | CircuitError::DuplicateOutput(q) | CircuitError::UnknownOutput(q) => {
                    output_pos(q)
                }
                _ => (1, 1),
            },
        };
        let kind = match &e {
            CircuitError::UseAfterMeasure { qubit, .. } => ParseErrorKind::UseAfterMeasure(qubit.to_string()),
            CircuitError::ControllerNotMeasured { controller, .. } => {
                ParseErrorKind::ControllerNotMeasured(controller.to_string())
            }
            CircuitError::UnknownQubit { qubit, .. } => ParseErrorKind::UnknownQubit(qubit.to_string()),
            CircuitError::DuplicateQubit(q) => ParseErrorKind::DuplicateQubit(q.to_string()),
            other => ParseErrorKind::Invalid(other.to_string()),
        };
        ParseError { line, column, kind }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_program() {
        let c = parse_circuit("qubit q0\ninit q0 |+>\nt q0\nmeasure q0 Z").unwrap();
        assert_eq!(c.qubits().len(), 1);
        assert_eq!(c.ops().len(), 3);
        assert_eq!(c.ops()[1], Operation::Gate { kind: GateKind::T, qubit: "q0".into() });
    }

    #[test]
    fn duplicate_qubit_reports_position() {
        let e = parse_circuit("qubit a\nqubit a").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DuplicateQubit("a".into()));
        assert_eq!((e.line, e.column), (2, 7));
    }

    #[test]
    fn unknown_qubit() {
        let e = parse_circuit("qubit a\ncnot a b").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownQubit("b".into()));
        assert_eq!((e.line, e.column), (2, 8));
    }

    #[test]
    fn use_after_measure_points_at_op_line() {
        let e = parse_circuit("input a\nmeasure a X\n\n# comment\nh a\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UseAfterMeasure("a".into()));
        assert_eq!(e.line, 5);
    }

    #[test]
    fn controller_not_measured() {
        let src = "qubit a\nqubit b\ninit a |0>\ninit b |0>\nsmeasure b ctrl=a zero=Z one=X\n";
        let e = parse_circuit(src).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::ControllerNotMeasured("a".into()));
        assert_eq!(e.line, 5);
    }

    #[test]
    fn syntax_errors() {
        let cases = [
            "qubit q\ninit q |1>",
            "qubit q\nrz q 0.25",
            "qubit q\nrz q 1/0pi",
            "qubit q\ntoffoli q",
            "qubit q\ninit q |0>\nmeasure q Y",
            "qubit q\ninit q |0>\nh q q",
            "qubit 9q",
            "input q\nsmeasure q ctl=q zero=Z one=X",
        ];
        for src in cases {
            let e = parse_circuit(src).unwrap_err();
            assert!(matches!(e.kind, ParseErrorKind::Syntax(_)), "{src:?} -> {e}");
        }
    }

    #[test]
    fn angles_and_comments() {
        let c = parse_circuit("input q # data\nrz q -2/8pi\nrx q 1/1pi # flip\n").unwrap();
        assert_eq!(c.ops()[0], Operation::Rotation { axis: Axis::Z, angle: Angle::new(-1, 4), qubit: "q".into() });
        assert_eq!(c.ops()[1], Operation::Rotation { axis: Axis::X, angle: Angle::PI, qubit: "q".into() });
    }

    #[test]
    fn outputs_must_be_unmeasured() {
        let e = parse_circuit("input q\nmeasure q Z\noutput q\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(matches!(e.kind, ParseErrorKind::Invalid(_)));
    }
}
