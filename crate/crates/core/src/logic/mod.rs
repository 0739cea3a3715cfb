//! Boolean expressions compiled onto single-layer attribute-slot networks.
//!
//! Each atom owns a binary input slot with a positive and a negative line.
//! A conjunction of literals is one threshold neuron listening to those
//! lines, and a disjunction of conjunctions is the output slot, active when
//! any hidden neuron fires. NOT never needs an inhibitory weight because
//! the negative line already carries it.

mod dnf;
mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub use dnf::{to_dnf, Dnf, Literal, MAX_ATOMS};
pub use parse::parse_expr;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown token {token:?} at position {position}")]
    UnknownToken { position: usize, token: char },
    #[error("expression has {0} atoms, at most {MAX_ATOMS} are supported")]
    TooManyAtoms(usize),
    #[error("assignment has no value for atom {0:?}")]
    MissingAtom(String),
}

impl LogicError {
    /// Character offset the error refers to, for parse errors.
    pub fn position(&self) -> Option<usize> {
        match self {
            Self::Syntax { position, .. } | Self::UnknownToken { position, .. } => Some(*position),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BoolExpr {
    Atom(String),
    Not(Box<BoolExpr>),
    And(Vec<BoolExpr>),
    Or(Vec<BoolExpr>),
}

pub type Assignment = BTreeMap<String, bool>;

impl BoolExpr {
    pub fn atom(name: &str) -> Self {
        Self::Atom(name.to_string())
    }

    pub fn not(e: BoolExpr) -> Self {
        Self::Not(Box::new(e))
    }

    /// Atom names in sorted order.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Self::Atom(a) => {
                out.insert(a.clone());
            }
            Self::Not(e) => e.collect_atoms(out),
            Self::And(es) | Self::Or(es) => es.iter().for_each(|e| e.collect_atoms(out)),
        }
    }

    pub fn eval(&self, assignment: &Assignment) -> Result<bool, LogicError> {
        Ok(match self {
            Self::Atom(a) => *assignment.get(a).ok_or_else(|| LogicError::MissingAtom(a.clone()))?,
            Self::Not(e) => !e.eval(assignment)?,
            Self::And(es) => {
                let mut v = true;
                for e in es {
                    v &= e.eval(assignment)?;
                }
                v
            }
            Self::Or(es) => {
                let mut v = false;
                for e in es {
                    v |= e.eval(assignment)?;
                }
                v
            }
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Self::Or(_) => 0,
            Self::And(_) => 1,
            Self::Not(_) | Self::Atom(_) => 2,
        }
    }
}

impl fmt::Display for BoolExpr {
    /// Minimal parenthesization that re-parses to the same tree. Operands of
    /// the same n-ary operator are parenthesized so nesting survives.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn operand(f: &mut fmt::Formatter<'_>, e: &BoolExpr, parent: u8) -> fmt::Result {
            if e.precedence() <= parent {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Self::Atom(a) => write!(f, "{a}"),
            Self::Not(e) => {
                f.write_str("!")?;
                operand(f, e, 1)
            }
            Self::And(es) | Self::Or(es) => {
                let (p, sep) = if matches!(self, Self::And(_)) { (1, " & ") } else { (0, " | ") };
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    operand(f, e, p)?;
                }
                Ok(())
            }
        }
    }
}

/// Every assignment over `atoms`, in binary counting order with the first
/// atom as the most significant bit.
pub fn assignments(atoms: &[String]) -> impl Iterator<Item = Assignment> + '_ {
    let n = atoms.len();
    (0..1u64 << n).map(move |bits| {
        atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), bits >> (n - 1 - i) & 1 == 1))
            .collect()
    })
}

/// A hidden threshold neuron: fires iff at least `threshold` of its lines
/// are active.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HiddenUnit {
    pub lines: Vec<usize>,
    pub threshold: usize,
}

/// Single-layer network. Input slot `i` belongs to `atoms[i]` and owns line
/// `2i` (atom true) and line `2i + 1` (atom false). All weights are +1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotNetwork {
    pub atoms: Vec<String>,
    pub hidden: Vec<HiddenUnit>,
}

impl SlotNetwork {
    pub fn line(&self, lit: &Literal) -> usize {
        let slot = self.atoms.binary_search(&lit.atom).expect("literal atom belongs to the network");
        2 * slot + usize::from(!lit.positive)
    }

    pub fn line_count(&self) -> usize {
        2 * self.atoms.len()
    }

    pub fn hidden_layers(&self) -> usize {
        1
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.hidden.iter().flat_map(|h| h.lines.iter().map(|_| 1.0))
    }

    /// One active line per slot, as in an attribute slot.
    pub fn input_lines(&self, assignment: &Assignment) -> Result<Vec<bool>, LogicError> {
        let mut lines = vec![false; self.line_count()];
        for (i, a) in self.atoms.iter().enumerate() {
            let v = *assignment.get(a).ok_or_else(|| LogicError::MissingAtom(a.clone()))?;
            lines[2 * i + usize::from(!v)] = true;
        }
        Ok(lines)
    }

    pub fn hidden_activity(&self, assignment: &Assignment) -> Result<Vec<bool>, LogicError> {
        let lines = self.input_lines(assignment)?;
        Ok(self
            .hidden
            .iter()
            .map(|h| h.lines.iter().filter(|&&l| lines[l]).count() >= h.threshold)
            .collect())
    }

    /// Text listing of slots and hidden units.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("slot_network atoms={} hidden={}\n", self.atoms.len(), self.hidden.len()));
        for (i, a) in self.atoms.iter().enumerate() {
            out.push_str(&format!("slot {i} {a} lines {}:{a} {}:!{a}\n", 2 * i, 2 * i + 1));
        }
        for (j, h) in self.hidden.iter().enumerate() {
            let lines: Vec<String> = h
                .lines
                .iter()
                .map(|&l| {
                    let a = &self.atoms[l / 2];
                    if l % 2 == 0 { format!("{l}:{a}") } else { format!("{l}:!{a}") }
                })
                .collect();
            out.push_str(&format!("hidden {j} threshold {} lines {}\n", h.threshold, lines.join(" ")));
        }
        let ids: Vec<String> = (0..self.hidden.len()).map(|j| j.to_string()).collect();
        out.push_str(&format!("output or {}\n", if ids.is_empty() { "-".to_string() } else { ids.join(" ") }));
        out
    }
}

/// One hidden neuron per conjunct. Atoms that occur only in dropped
/// conjuncts still get a slot so the network accepts the same assignments
/// as the source expression.
pub fn compile(dnf: &Dnf) -> SlotNetwork {
    let atoms: Vec<String> = dnf.atoms.iter().cloned().collect();
    let mut net = SlotNetwork { atoms, hidden: Vec::new() };
    net.hidden = dnf
        .conjuncts
        .iter()
        .map(|c| {
            let lines: Vec<usize> = c.iter().map(|l| net.line(l)).collect();
            HiddenUnit { threshold: lines.len(), lines }
        })
        .collect();
    net
}

pub fn eval_network(net: &SlotNetwork, assignment: &Assignment) -> Result<bool, LogicError> {
    Ok(net.hidden_activity(assignment)?.into_iter().any(|h| h))
}

pub const XOR_SOURCE: &str = "(x1 & !x2) | (!x1 & x2)";

pub fn xor_network() -> SlotNetwork {
    let expr = parse_expr(XOR_SOURCE).expect("xor source parses");
    compile(&to_dnf(&expr).expect("two atoms"))
}
