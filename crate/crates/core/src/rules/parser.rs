//! Recursive-descent parser for rule files.
//!
//! ```text
//! rule       := [ident ':'] cond '->' ident ['@' severity]
//! cond       := and_expr ('|' and_expr)*
//! and_expr   := term ('&' term)*
//! term       := ['!'] atom
//! atom       := '(' cond ')' | ident comparator level | ident
//! comparator := '>=' | '<=' | '=='
//! ```
//!
//! One rule per line, `#` starts a comment. Rules without an explicit id get `r<n>`, where `n`
//! is the 1-based position of the rule in the file.

use std::collections::HashSet;

use crate::model::OrdinalLevel;

use super::ast::{Comparator, Condition, RiskRule, RuleSet, Severity};
use super::RuleError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    And,
    Or,
    Not,
    LParen,
    RParen,
    Arrow,
    Cmp(Comparator),
    At,
    Colon,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    column: usize,
}

fn lex(line: &str, line_no: usize) -> Result<Vec<Token>, RuleError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        let two = chars.get(i + 1).copied();
        let single = |tok| Token { tok, column };
        match c {
            '#' => break,
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '&' => out.push(single(Tok::And)),
            '|' => out.push(single(Tok::Or)),
            '(' => out.push(single(Tok::LParen)),
            ')' => out.push(single(Tok::RParen)),
            '@' => out.push(single(Tok::At)),
            ':' => out.push(single(Tok::Colon)),
            '!' => out.push(single(Tok::Not)),
            '-' if two == Some('>') => {
                out.push(single(Tok::Arrow));
                i += 1;
            }
            '>' if two == Some('=') => {
                out.push(single(Tok::Cmp(Comparator::AtLeast)));
                i += 1;
            }
            '<' if two == Some('=') => {
                out.push(single(Tok::Cmp(Comparator::AtMost)));
                i += 1;
            }
            '=' if two == Some('=') => {
                out.push(single(Tok::Cmp(Comparator::Equal)));
                i += 1;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Ident(chars[start..i].iter().collect()),
                    column,
                });
                continue;
            }
            other => {
                return Err(RuleError::Parse {
                    line: line_no,
                    column,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    line: usize,
    end_column: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn column(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|t| t.column)
            .unwrap_or(self.end_column)
    }

    fn error(&self, message: impl Into<String>) -> RuleError {
        RuleError::Parse {
            line: self.line,
            column: self.column(),
            message: message.into(),
        }
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn ident(&mut self, what: &str) -> Result<String, RuleError> {
        match self.peek() {
            Some(Tok::Ident(_)) => match self.bump() {
                Some(Tok::Ident(s)) => Ok(s),
                _ => unreachable!(),
            },
            Some(_) => Err(self.error(format!("expected {what}"))),
            None => Err(self.error(format!("expected {what}, found end of line"))),
        }
    }

    fn rule(&mut self, default_id: String) -> Result<RiskRule, RuleError> {
        let id = match (self.tokens.first(), self.tokens.get(1)) {
            (
                Some(Token {
                    tok: Tok::Ident(id), ..
                }),
                Some(Token { tok: Tok::Colon, .. }),
            ) => {
                let id = id.clone();
                self.pos = 2;
                id
            }
            _ => default_id,
        };
        let condition = self.cond()?;
        match self.peek() {
            Some(Tok::Arrow) => {
                self.bump();
            }
            _ => return Err(self.error("expected `->`")),
        }
        let problem = self.ident("problem name")?;
        let mut severity = Severity::default();
        if self.peek() == Some(&Tok::At) {
            self.bump();
            let column = self.column();
            let name = self.ident("severity")?;
            severity = name.parse().map_err(|message| RuleError::Parse {
                line: self.line,
                column,
                message,
            })?;
        }
        if self.pos < self.tokens.len() {
            return Err(self.error("unexpected trailing input"));
        }
        Ok(RiskRule {
            id,
            condition,
            problem,
            severity,
        })
    }

    fn cond(&mut self) -> Result<Condition, RuleError> {
        let mut terms = vec![self.and_expr()?];
        while self.peek() == Some(&Tok::Or) {
            self.bump();
            terms.push(self.and_expr()?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Condition::Or(terms)
        })
    }

    fn and_expr(&mut self) -> Result<Condition, RuleError> {
        let mut terms = vec![self.term()?];
        while self.peek() == Some(&Tok::And) {
            self.bump();
            terms.push(self.term()?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Condition::And(terms)
        })
    }

    fn term(&mut self) -> Result<Condition, RuleError> {
        if self.peek() == Some(&Tok::Not) {
            self.bump();
            return Ok(Condition::not(self.atom()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Condition, RuleError> {
        match self.peek() {
            Some(Tok::LParen) => {
                self.bump();
                let inner = self.cond()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.error("expected `)`"));
                }
                self.bump();
                Ok(inner)
            }
            Some(Tok::Ident(_)) => {
                let factor = self.ident("factor")?;
                if let Some(Tok::Cmp(comparator)) = self.peek().cloned() {
                    self.bump();
                    let column = self.column();
                    let name = self.ident("level")?;
                    let level: OrdinalLevel =
                        name.parse().map_err(|_| RuleError::UnknownLevel {
                            line: self.line,
                            column,
                            level: name.clone(),
                        })?;
                    Ok(Condition::predicate(factor, comparator, level))
                } else {
                    Ok(Condition::Factor(factor))
                }
            }
            Some(_) => Err(self.error("expected factor or `(`")),
            None => Err(self.error("expected factor or `(`, found end of line")),
        }
    }
}

/// Parses a rule file. LF and CRLF line endings are accepted.
pub fn parse_rules(text: &str) -> Result<RuleSet, RuleError> {
    let mut rules: Vec<RiskRule> = Vec::new();
    let mut ids = HashSet::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let tokens = lex(line, line_no)?;
        if tokens.is_empty() {
            continue;
        }
        let mut parser = Parser {
            tokens,
            pos: 0,
            line: line_no,
            end_column: line.chars().count() + 1,
        };
        let rule = parser.rule(format!("r{}", rules.len() + 1))?;
        if !ids.insert(rule.id.clone()) {
            return Err(RuleError::DuplicateRuleId {
                id: rule.id,
                line: line_no,
            });
        }
        rules.push(rule);
    }
    Ok(RuleSet {
        rules,
        source: text.to_string(),
    })
}
