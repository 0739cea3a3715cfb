use super::{BoolExpr, LogicError};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    And,
    Or,
    Not,
    LParen,
    RParen,
    Ident(String),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, LogicError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let tok = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '&' => Tok::And,
            '|' => Tok::Or,
            '!' => Tok::Not,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(chars[start..i].iter().collect())));
                continue;
            }
            token => return Err(LogicError::UnknownToken { position: i, token }),
        };
        out.push((i, tok));
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn error(&self, message: &str) -> LogicError {
        LogicError::Syntax { position: self.offset(), message: message.to_string() }
    }

    fn chain(
        &mut self,
        op: Tok,
        build: fn(Vec<BoolExpr>) -> BoolExpr,
        operand: fn(&mut Self) -> Result<BoolExpr, LogicError>,
    ) -> Result<BoolExpr, LogicError> {
        let mut items = vec![operand(self)?];
        while self.peek() == Some(&op) {
            self.pos += 1;
            items.push(operand(self)?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { build(items) })
    }

    fn or(&mut self) -> Result<BoolExpr, LogicError> {
        self.chain(Tok::Or, BoolExpr::Or, Self::and)
    }

    fn and(&mut self) -> Result<BoolExpr, LogicError> {
        self.chain(Tok::And, BoolExpr::And, Self::unary)
    }

    fn unary(&mut self) -> Result<BoolExpr, LogicError> {
        match self.peek().cloned() {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(BoolExpr::not(self.unary()?))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.or()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                Ok(BoolExpr::Atom(name))
            }
            Some(_) => Err(self.error("expected an identifier, '!' or '('")),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

/// Parses `&`, `|`, `!`, parentheses and identifiers. NOT binds tighter
/// than AND, which binds tighter than OR. Error positions are character
/// offsets from 0.
pub fn parse_expr(text: &str) -> Result<BoolExpr, LogicError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, end: text.chars().count() };
    if p.toks.is_empty() {
        return Err(p.error("empty expression"));
    }
    let e = p.or()?;
    if p.pos < p.toks.len() {
        return Err(p.error("unexpected token"));
    }
    Ok(e)
}
