//! Boolean circuits over AND/OR/NOT/XOR gates and their netlist text form.
//!
//! ```text
//! inputs 4
//! g0 = XOR x0 x1
//! g1 = XOR x2 x3
//! g2 = OR g0 g1
//! output g2
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::construction::BooleanFunction;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    And,
    Or,
    Not,
    Xor,
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GateKind::And => "AND",
            GateKind::Or => "OR",
            GateKind::Not => "NOT",
            GateKind::Xor => "XOR",
        })
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "AND" => Ok(GateKind::And),
            "OR" => Ok(GateKind::Or),
            "NOT" => Ok(GateKind::Not),
            "XOR" => Ok(GateKind::Xor),
            _ => Err(Error::Malformed(format!("unknown gate kind {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Wire {
    Input(usize),
    Gate(usize),
}

impl fmt::Display for Wire {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Wire::Input(i) => write!(f, "x{i}"),
            Wire::Gate(g) => write!(f, "g{g}"),
        }
    }
}

impl FromStr for Wire {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Malformed(format!("bad operand {s:?}"));
        let (tag, rest) = s.split_at(s.len().min(1));
        let idx: usize = rest.parse().map_err(|_| bad())?;
        match tag {
            "x" => Ok(Wire::Input(idx)),
            "g" => Ok(Wire::Gate(idx)),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub operands: Vec<Wire>,
}

/// Gates are topologically ordered: operands refer to inputs or earlier gates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    inputs: usize,
    gates: Vec<Gate>,
    output: usize,
}

impl Circuit {
    pub fn new(inputs: usize, gates: Vec<Gate>, output: usize) -> Result<Self> {
        for (g, gate) in gates.iter().enumerate() {
            if gate.operands.is_empty() {
                return Err(Error::Malformed(format!("gate g{g} has no operands")));
            }
            if gate.kind == GateKind::Not && gate.operands.len() != 1 {
                return Err(Error::Malformed(format!("NOT gate g{g} needs exactly one operand")));
            }
            for w in &gate.operands {
                match *w {
                    Wire::Input(i) if i >= inputs => {
                        return Err(Error::IndexOutOfRange { index: i, bound: inputs })
                    }
                    Wire::Gate(h) if h >= g => {
                        return Err(Error::Malformed(format!(
                            "gate g{g} reads g{h}, which is not an earlier gate"
                        )))
                    }
                    _ => {}
                }
            }
        }
        if output >= gates.len() {
            return Err(Error::Malformed(format!("output g{output} does not exist")));
        }
        Ok(Circuit { inputs, gates, output })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn output(&self) -> usize {
        self.output
    }

    pub fn count(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind == kind).count()
    }

    /// Longest input-to-output path measured in gates.
    pub fn depth(&self) -> usize {
        let mut depth = vec![0usize; self.gates.len()];
        for (g, gate) in self.gates.iter().enumerate() {
            depth[g] = 1 + gate
                .operands
                .iter()
                .map(|w| match *w {
                    Wire::Input(_) => 0,
                    Wire::Gate(h) => depth[h],
                })
                .max()
                .unwrap_or(0);
        }
        depth[self.output]
    }

    pub fn evaluate(&self, x: &BitString) -> Result<bool> {
        if x.len() != self.inputs {
            return Err(Error::ArityMismatch {
                expected: self.inputs,
                found: x.len(),
            });
        }
        let mut val = vec![false; self.output + 1];
        for g in 0..=self.output {
            let gate = &self.gates[g];
            let mut bits = gate.operands.iter().map(|w| match *w {
                Wire::Input(i) => x.get(i),
                Wire::Gate(h) => val[h],
            });
            val[g] = match gate.kind {
                GateKind::And => bits.all(|b| b),
                GateKind::Or => bits.any(|b| b),
                GateKind::Not => !bits.next().expect("validated arity"),
                GateKind::Xor => bits.fold(false, |a, b| a ^ b),
            };
        }
        Ok(val[self.output])
    }

    /// Appends a copy of `other` reading inputs shifted by `offset`; returns the
    /// index of the copied output gate.
    pub(crate) fn append_shifted(gates: &mut Vec<Gate>, other: &Circuit, offset: usize) -> usize {
        let base = gates.len();
        for gate in &other.gates {
            let operands = gate
                .operands
                .iter()
                .map(|w| match *w {
                    Wire::Input(i) => Wire::Input(i + offset),
                    Wire::Gate(h) => Wire::Gate(h + base),
                })
                .collect();
            gates.push(Gate {
                kind: gate.kind,
                operands,
            });
        }
        base + other.output
    }

    pub fn to_netlist(&self) -> String {
        self.to_string()
    }

    pub fn parse_netlist(text: &str) -> Result<Circuit> {
        text.parse()
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "inputs {}", self.inputs)?;
        for (g, gate) in self.gates.iter().enumerate() {
            write!(f, "g{g} = {}", gate.kind)?;
            for w in &gate.operands {
                write!(f, " {w}")?;
            }
            writeln!(f)?;
        }
        writeln!(f, "output g{}", self.output)
    }
}

impl FromStr for Circuit {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Malformed("empty netlist".into()))?;
        let inputs = header
            .strip_prefix("inputs ")
            .and_then(|k| k.trim().parse().ok())
            .ok_or_else(|| Error::Malformed(format!("bad header {header:?}")))?;
        let mut gates = Vec::new();
        let mut output = None;
        for line in lines {
            if output.is_some() {
                return Err(Error::Malformed(format!("content after output line: {line:?}")));
            }
            if let Some(rest) = line.strip_prefix("output ") {
                match rest.trim().parse()? {
                    Wire::Gate(g) => output = Some(g),
                    Wire::Input(_) => return Err(Error::Malformed("output must be a gate".into())),
                }
                continue;
            }
            let (lhs, rhs) = line
                .split_once('=')
                .ok_or_else(|| Error::Malformed(format!("bad gate line {line:?}")))?;
            if lhs.trim() != format!("g{}", gates.len()) {
                return Err(Error::Malformed(format!("gates must be numbered in order: {line:?}")));
            }
            let mut parts = rhs.split_whitespace();
            let kind = parts
                .next()
                .ok_or_else(|| Error::Malformed(format!("missing gate kind: {line:?}")))?
                .parse()?;
            let operands = parts.map(str::parse).collect::<Result<Vec<Wire>>>()?;
            gates.push(Gate { kind, operands });
        }
        let output = output.ok_or_else(|| Error::Malformed("missing output line".into()))?;
        Circuit::new(inputs, gates, output)
    }
}

impl BooleanFunction for Circuit {
    fn arity(&self) -> usize {
        self.inputs
    }

    fn eval(&self, x: &BitString) -> Result<bool> {
        self.evaluate(x)
    }
}
