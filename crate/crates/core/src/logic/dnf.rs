use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use super::{Assignment, BoolExpr, LogicError};

/// Largest atom count [`to_dnf`] accepts; keeps exhaustive truth tables at
/// 65,536 rows.
pub const MAX_ATOMS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Literal {
    pub atom: String,
    pub positive: bool,
}

impl Ord for Literal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.atom.cmp(&other.atom).then(other.positive.cmp(&self.positive))
    }
}

impl PartialOrd for Literal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "!{}", self.atom)
        }
    }
}

type Conjunct = BTreeSet<Literal>;

/// Disjunction of conjunctions. Conjuncts keep first-occurrence order; an
/// empty conjunct is constant true and an empty disjunction constant false.
/// `atoms` lists every atom of the source expression, including ones that
/// vanished with contradictory conjuncts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dnf {
    pub atoms: BTreeSet<String>,
    pub conjuncts: Vec<Conjunct>,
}

impl Dnf {
    pub fn eval(&self, assignment: &Assignment) -> Result<bool, LogicError> {
        for a in &self.atoms {
            if !assignment.contains_key(a) {
                return Err(LogicError::MissingAtom(a.clone()));
            }
        }
        Ok(self.conjuncts.iter().any(|c| c.iter().all(|l| assignment[&l.atom] == l.positive)))
    }
}

impl fmt::Display for Dnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.conjuncts.is_empty() {
            return f.write_str("false");
        }
        let parts: Vec<String> = self
            .conjuncts
            .iter()
            .map(|c| {
                let lits: Vec<String> = c.iter().map(|l| l.to_string()).collect();
                if lits.is_empty() { "true".to_string() } else { format!("({})", lits.join(" & ")) }
            })
            .collect();
        f.write_str(&parts.join(" | "))
    }
}

fn push_unique(out: &mut Vec<Conjunct>, c: Conjunct) {
    if !out.contains(&c) {
        out.push(c);
    }
}

fn merge(a: &Conjunct, b: &Conjunct) -> Option<Conjunct> {
    let mut out = a.clone();
    for l in b {
        let opposite = Literal { atom: l.atom.clone(), positive: !l.positive };
        if out.contains(&opposite) {
            return None;
        }
        out.insert(l.clone());
    }
    Some(out)
}

fn expand(e: &BoolExpr, negated: bool) -> Vec<Conjunct> {
    match e {
        BoolExpr::Atom(a) => vec![Conjunct::from([Literal { atom: a.clone(), positive: !negated }])],
        BoolExpr::Not(inner) => expand(inner, !negated),
        BoolExpr::And(es) | BoolExpr::Or(es) => {
            let conjunctive = matches!(e, BoolExpr::And(_)) != negated;
            if conjunctive {
                let mut acc = vec![Conjunct::new()];
                for child in es {
                    let rhs = expand(child, negated);
                    let mut next = Vec::new();
                    for a in &acc {
                        for b in &rhs {
                            if let Some(c) = merge(a, b) {
                                push_unique(&mut next, c);
                            }
                        }
                    }
                    acc = next;
                }
                acc
            } else {
                let mut acc = Vec::new();
                for child in es {
                    for c in expand(child, negated) {
                        push_unique(&mut acc, c);
                    }
                }
                acc
            }
        }
    }
}

/// Naive distributive expansion with contradiction pruning.
pub fn to_dnf(expr: &BoolExpr) -> Result<Dnf, LogicError> {
    let atoms = expr.atoms();
    if atoms.len() > MAX_ATOMS {
        return Err(LogicError::TooManyAtoms(atoms.len()));
    }
    Ok(Dnf { atoms, conjuncts: expand(expr, false) })
}
