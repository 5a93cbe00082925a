//! Recursive-descent parser for the policy text grammar.

use super::{PolicyAst, PolicyError, PolicyLimits};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    And,
    Or,
    Word(String),
    LParen,
    RParen,
    Comma,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, PolicyError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = text[i..].chars().next().expect("in-bounds char");
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        match c {
            '(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            ',' => {
                toks.push((Tok::Comma, i));
                i += 1;
            }
            '"' => {
                return Err(PolicyError::Syntax {
                    pos: i,
                    msg: "unexpected '\"'".into(),
                })
            }
            _ => {
                let start = i;
                while i < bytes.len() {
                    let c = text[i..].chars().next().expect("in-bounds char");
                    if c.is_whitespace() || matches!(c, '(' | ')' | ',' | '"') {
                        break;
                    }
                    i += c.len_utf8();
                }
                let word = &text[start..i];
                toks.push((
                    match word {
                        "AND" => Tok::And,
                        "OR" => Tok::Or,
                        _ => Tok::Word(word.to_string()),
                    },
                    start,
                ));
            }
        }
    }
    Ok(toks)
}

/// A word like `2-of-` introduces a threshold gate when followed by a
/// parenthesized branch list.
fn threshold_count(word: &str) -> Option<usize> {
    let digits = word.strip_suffix("-of-")?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

struct Parser<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    end: usize,
    limits: &'a PolicyLimits,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t);
        self.pos += 1;
        t
    }

    fn err(&self, msg: impl Into<String>) -> PolicyError {
        PolicyError::Syntax {
            pos: self.here(),
            msg: msg.into(),
        }
    }

    /// `depth` counts bracket/threshold nesting (the only unbounded
    /// recursion), so deeply parenthesized input fails cleanly instead
    /// of overflowing the stack. AST depth is re-checked by
    /// `validate` after parsing.
    fn descend(&self, depth: usize) -> Result<usize, PolicyError> {
        if depth >= self.limits.max_depth {
            Err(PolicyError::TooDeep(self.limits.max_depth))
        } else {
            Ok(depth + 1)
        }
    }

    fn expr(&mut self, depth: usize) -> Result<PolicyAst, PolicyError> {
        let mut terms = vec![self.term(depth)?];
        while self.peek() == Some(&Tok::Or) {
            self.bump();
            terms.push(self.term(depth)?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().expect("one term")
        } else {
            PolicyAst::Or(terms)
        })
    }

    fn term(&mut self, depth: usize) -> Result<PolicyAst, PolicyError> {
        let mut factors = vec![self.factor(depth)?];
        while self.peek() == Some(&Tok::And) {
            self.bump();
            factors.push(self.factor(depth)?);
        }
        Ok(if factors.len() == 1 {
            factors.pop().expect("one factor")
        } else {
            PolicyAst::And(factors)
        })
    }

    fn factor(&mut self, depth: usize) -> Result<PolicyAst, PolicyError> {
        let at = self.here();
        match self.bump().cloned() {
            Some(Tok::LParen) => {
                let inner = self.expr(self.descend(depth)?)?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => Err(PolicyError::Syntax {
                        pos: self.toks.get(self.pos - 1).map(|(_, p)| *p).unwrap_or(self.end),
                        msg: "expected ')'".into(),
                    }),
                }
            }
            Some(Tok::Word(word)) => {
                if self.peek() == Some(&Tok::LParen) {
                    let Some(k) = threshold_count(&word) else {
                        return Err(self.err(format!(
                            "unexpected '(' after attribute {word:?} (thresholds are written K-of-(...))"
                        )));
                    };
                    self.bump(); // '('
                    let inner = self.descend(depth)?;
                    let mut children = vec![self.expr(inner)?];
                    while self.peek() == Some(&Tok::Comma) {
                        self.bump();
                        children.push(self.expr(inner)?);
                    }
                    if children.len() > self.limits.max_arity {
                        return Err(PolicyError::TooWide(self.limits.max_arity));
                    }
                    match self.bump() {
                        Some(Tok::RParen) => {}
                        _ => {
                            return Err(PolicyError::Syntax {
                                pos: self
                                    .toks
                                    .get(self.pos - 1)
                                    .map(|(_, p)| *p)
                                    .unwrap_or(self.end),
                                msg: "expected ')' or ',' in threshold branch list".into(),
                            })
                        }
                    }
                    if k == 0 || k > children.len() {
                        return Err(PolicyError::BadThreshold {
                            k,
                            arity: children.len(),
                        });
                    }
                    Ok(PolicyAst::Threshold { k, children })
                } else {
                    if !PolicyAst::valid_attribute(&word) {
                        return Err(PolicyError::Syntax {
                            pos: at,
                            msg: format!("invalid attribute {word:?}"),
                        });
                    }
                    Ok(PolicyAst::Leaf(word))
                }
            }
            Some(tok) => Err(PolicyError::Syntax {
                pos: at,
                msg: format!("unexpected {tok:?}, expected an attribute, a threshold or '('"),
            }),
            None => Err(PolicyError::Syntax {
                pos: self.end,
                msg: "unexpected end of policy".into(),
            }),
        }
    }
}

/// Parse policy text under the default [`PolicyLimits`].
pub fn parse_policy(text: &str) -> Result<PolicyAst, PolicyError> {
    parse_policy_with(text, &PolicyLimits::default())
}

/// Parse policy text, enforcing the given structural bounds.
pub fn parse_policy_with(text: &str, limits: &PolicyLimits) -> Result<PolicyAst, PolicyError> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(PolicyError::Empty);
    }
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        end: text.len(),
        limits,
    };
    let ast = p.expr(1)?;
    if p.pos != toks.len() {
        return Err(PolicyError::Syntax {
            pos: p.here(),
            msg: "trailing input after policy".into(),
        });
    }
    ast.validate(limits)?;
    Ok(ast)
}
