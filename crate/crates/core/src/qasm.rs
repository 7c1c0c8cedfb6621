//! OpenQASM 2.0 subset: a single `qreg`, gates `rx ry rz cx h sx swap`, and
//! angles written as decimal literals.

use std::fmt::Write as _;

use crate::circuit::{GateInstance, GateKind, ParamCircuit};
use crate::error::{Error, Result};

pub const HEADER: &str = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\n";

/// Angle argument of a gate statement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleArg {
    Value(f64),
    /// `p[k]`: slot `k` of a symbolic parameter vector.
    Symbol(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateStatement {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub arg: Option<AngleArg>,
}

/// Formats one gate statement without the trailing `;`.
pub fn format_gate(kind: GateKind, qubits: &[usize], arg: Option<AngleArg>, reg: &str) -> String {
    let mut s = String::from(kind.qasm_name());
    match arg {
        Some(AngleArg::Value(v)) => write!(s, "({v})").unwrap(),
        Some(AngleArg::Symbol(k)) => write!(s, "(p[{k}])").unwrap(),
        None => {}
    }
    s.push(' ');
    let ops: Vec<String> = qubits.iter().map(|q| format!("{reg}[{q}]")).collect();
    s.push_str(&ops.join(","));
    s
}

pub fn export_qasm(circuit: &ParamCircuit, params: &[f64]) -> Result<String> {
    if params.len() != circuit.num_params() {
        return Err(Error::ParamLength {
            expected: circuit.num_params(),
            got: params.len(),
        });
    }
    let mut out = String::from(HEADER);
    writeln!(out, "qreg q[{}];", circuit.num_qubits()).unwrap();
    for g in circuit.gates() {
        let arg = match g.param {
            Some(p) => {
                let v = params[p];
                if !v.is_finite() {
                    return Err(Error::InvalidGate(format!("non-finite angle {v}")));
                }
                Some(AngleArg::Value(v))
            }
            None => None,
        };
        writeln!(out, "{};", format_gate(g.kind, &g.qubits, arg, "q")).unwrap();
    }
    Ok(out)
}

/// Parses a program into a circuit with one fresh parameter slot per rotation,
/// returned together with the bound angles.
pub fn parse_qasm(text: &str) -> Result<(ParamCircuit, Vec<f64>)> {
    let mut reg: Option<(String, usize)> = None;
    let mut circuit: Option<ParamCircuit> = None;
    let mut angles = Vec::new();
    let mut saw_header = false;

    for (line_no, stmt) in statements(text) {
        let err = |msg: String| Error::Qasm { line: line_no, msg };
        if let Some(rest) = stmt.strip_prefix("OPENQASM") {
            if rest.trim() != "2.0" {
                return Err(err(format!("unsupported version `{}`", rest.trim())));
            }
            saw_header = true;
            continue;
        }
        if !saw_header {
            return Err(err("missing `OPENQASM 2.0;` header".into()));
        }
        if stmt.starts_with("include") {
            continue;
        }
        if let Some(rest) = stmt.strip_prefix("qreg") {
            if reg.is_some() {
                return Err(err("only one quantum register is supported".into()));
            }
            let (name, size) = parse_indexed(rest.trim()).ok_or_else(|| err(format!("bad qreg `{stmt}`")))?;
            if size == 0 {
                return Err(err("empty register".into()));
            }
            circuit = Some(ParamCircuit::new(size));
            reg = Some((name.to_string(), size));
            continue;
        }
        let (reg_name, width) = reg.as_ref().ok_or_else(|| err("gate before qreg declaration".into()))?;
        let g = parse_gate_statement(&stmt, reg_name, *width).map_err(|e| match e {
            Error::Qasm { msg, .. } => Error::Qasm { line: line_no, msg },
            other => other,
        })?;
        let c = circuit.as_mut().expect("register declared");
        match g.arg {
            Some(AngleArg::Value(v)) => {
                c.push_rotation(g.kind, g.qubits[0])?;
                angles.push(v);
            }
            Some(AngleArg::Symbol(_)) => {
                return Err(err("symbolic angles are not allowed in programs".into()));
            }
            None => c.push(GateInstance {
                kind: g.kind,
                qubits: g.qubits,
                param: None,
            })?,
        }
    }
    match circuit {
        Some(c) => Ok((c, angles)),
        None => Err(Error::Qasm {
            line: 0,
            msg: "no qreg declaration".into(),
        }),
    }
}

/// Parses `name(arg)? r[i],r[j]` against a register of `width` qubits.
pub fn parse_gate_statement(stmt: &str, reg: &str, width: usize) -> Result<GateStatement> {
    let err = |msg: String| Error::Qasm { line: 0, msg };
    let stmt = stmt.trim();
    let name_end = stmt
        .find(|c: char| c == '(' || c.is_whitespace())
        .ok_or_else(|| err(format!("malformed statement `{stmt}`")))?;
    let name = &stmt[..name_end];
    let kind = GateKind::from_qasm_name(name).ok_or_else(|| Error::UnsupportedGate(name.to_string()))?;
    let mut rest = stmt[name_end..].trim_start();

    let arg = if let Some(r) = rest.strip_prefix('(') {
        let close = r.find(')').ok_or_else(|| err(format!("unclosed argument in `{stmt}`")))?;
        let text = r[..close].trim();
        rest = r[close + 1..].trim_start();
        Some(parse_angle(text).ok_or_else(|| err(format!("bad angle `{text}`")))?)
    } else {
        None
    };
    if kind.is_parameterized() != arg.is_some() {
        return Err(err(format!("`{name}` takes {} argument", if kind.is_parameterized() { "one" } else { "no" })));
    }

    let mut qubits = Vec::new();
    for op in rest.split(',') {
        let (r, idx) = parse_indexed(op.trim()).ok_or_else(|| err(format!("bad operand `{}`", op.trim())))?;
        if r != reg {
            return Err(err(format!("unknown register `{r}`")));
        }
        if idx >= width {
            return Err(Error::QubitOutOfRange { index: idx, width });
        }
        qubits.push(idx);
    }
    if qubits.len() != kind.arity() {
        return Err(err(format!("`{name}` expects {} operand(s)", kind.arity())));
    }
    if qubits.len() == 2 && qubits[0] == qubits[1] {
        return Err(err(format!("repeated operand in `{stmt}`")));
    }
    Ok(GateStatement { kind, qubits, arg })
}

fn parse_angle(text: &str) -> Option<AngleArg> {
    if let Some((name, k)) = parse_indexed(text) {
        return (name == "p").then_some(AngleArg::Symbol(k));
    }
    let v: f64 = text.parse().ok()?;
    v.is_finite().then_some(AngleArg::Value(v))
}

/// `name[k]` → (name, k).
fn parse_indexed(text: &str) -> Option<(&str, usize)> {
    let open = text.find('[')?;
    let close = text.strip_suffix(']')?;
    let name = text[..open].trim();
    if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
        return None;
    }
    let idx = close[open + 1..].trim().parse().ok()?;
    Some((name, idx))
}

/// Splits source into `;`-terminated statements with comments removed,
/// tagging each with the line where it starts.
fn statements(text: &str) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut start_line = 0;
    for (i, line) in text.lines().enumerate() {
        let code = line.split("//").next().unwrap_or("");
        for ch in code.chars() {
            if current.trim().is_empty() && !ch.is_whitespace() {
                start_line = i + 1;
            }
            if ch == ';' {
                out.push((start_line, current.trim().to_string()));
                current.clear();
            } else {
                current.push(ch);
            }
        }
        current.push(' ');
    }
    if !current.trim().is_empty() {
        out.push((start_line, current.trim().to_string()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_circuit_exports_header_only() {
        let text = export_qasm(&ParamCircuit::new(2), &[]).unwrap();
        assert_eq!(text, format!("{HEADER}qreg q[2];\n"));
    }

    #[test]
    fn rx_line() {
        let mut c = ParamCircuit::new(1);
        c.rx(0);
        let text = export_qasm(&c, &[0.5]).unwrap();
        assert!(text.lines().any(|l| l == "rx(0.5) q[0];"));
    }

    #[test]
    fn parse_all_gates() {
        let src = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[3];\n\
                   rx(0.1) q[0]; ry(-2) q[1];\nrz(3.5) q[2]; // trailing\ncx q[0],q[2];\nh q[1];\nsx q[0];\nswap q[1], q[2];\n";
        let (c, a) = parse_qasm(src).unwrap();
        assert_eq!(c.len(), 7);
        assert_eq!(a, vec![0.1, -2.0, 3.5]);
        assert_eq!(c.gates()[3], GateInstance::cnot(0, 2));
    }

    #[test]
    fn parse_errors() {
        let base = "OPENQASM 2.0;\nqreg q[2];\n";
        assert!(matches!(
            parse_qasm(&format!("{base}u3(1,2,3) q[0];")),
            Err(Error::UnsupportedGate(_))
        ));
        assert!(matches!(
            parse_qasm(&format!("{base}cx q[0],q[2];")),
            Err(Error::QubitOutOfRange { index: 2, width: 2 })
        ));
        assert!(matches!(parse_qasm(&format!("{base}rx q[0];")), Err(Error::Qasm { line: 3, .. })));
        assert!(parse_qasm(&format!("{base}rx(abc) q[0];")).is_err());
        assert!(parse_qasm(&format!("{base}cx q[0];")).is_err());
        assert!(parse_qasm(&format!("{base}h r[0];")).is_err());
        assert!(parse_qasm("qreg q[2];").is_err());
        assert!(parse_qasm(&format!("{base}qreg r[2];")).is_err());
    }

    #[test]
    fn symbolic_statement() {
        let g = parse_gate_statement("ry(p[4]) q[1]", "q", 2).unwrap();
        assert_eq!(g.arg, Some(AngleArg::Symbol(4)));
        assert_eq!(format_gate(g.kind, &g.qubits, g.arg, "q"), "ry(p[4]) q[1]");
    }
}
