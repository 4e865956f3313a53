use std::fmt;
use std::rc::Rc;

use super::ast::{Expr, ExprKind, Name, Param, SourceSpan};
use super::lexer::{tokenize, Tok, Token};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub message: String,
    pub span: SourceSpan,
}

impl ParseError {
    pub(crate) fn new(message: impl Into<String>, span: SourceSpan) -> ParseError {
        ParseError { message: message.into(), span }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)
    }
}

/// Parses a whole program. Top-level expressions may be separated by `;`,
/// in which case the result is a `Block`.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    parse_source(src, 0)
}

/// Like [`parse`], tagging every span with `source`.
pub fn parse_source(src: &str, source: u32) -> Result<Expr, ParseError> {
    let tokens = tokenize(src, source)?;
    let mut parser = Parser { tokens, pos: 0 };
    let first = parser.expr()?;
    let mut exprs = vec![first];
    while parser.eat(&Tok::Semi) {
        if parser.at(&Tok::Eof) {
            break;
        }
        exprs.push(parser.expr()?);
    }
    if !parser.at(&Tok::Eof) {
        return Err(parser.unexpected("`;` or end of input"));
    }
    if exprs.len() == 1 {
        Ok(exprs.pop().unwrap())
    } else {
        let span = exprs[0].span.cover(exprs[exprs.len() - 1].span);
        Ok(Expr::with_span(ExprKind::Block(exprs), span))
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_second(&self) -> &Tok {
        let idx = (self.pos + 1).min(self.tokens.len() - 1);
        &self.tokens[idx].tok
    }

    fn at(&self, tok: &Tok) -> bool {
        &self.peek().tok == tok
    }

    fn advance(&mut self) -> Token {
        let token = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        token
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.at(tok) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        let token = self.peek();
        ParseError::new(format!("expected {wanted}, found {}", token.tok.describe()), token.span)
    }

    fn expect(&mut self, tok: Tok) -> Result<Token, ParseError> {
        if self.at(&tok) {
            Ok(self.advance())
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn ident(&mut self) -> Result<(Name, SourceSpan), ParseError> {
        match &self.peek().tok {
            Tok::Ident(name) => {
                let name: Name = name.as_str().into();
                let span = self.advance().span;
                Ok((name, span))
            }
            Tok::Function | Tok::Environment | Tok::Substitute | Tok::Eval | Tok::DelayedAssign => {
                let token = self.peek();
                Err(ParseError::new(
                    format!("reserved word {} cannot be used as an identifier", token.tok.describe()),
                    token.span,
                ))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        if matches!(self.peek().tok, Tok::Ident(_)) && self.peek_second() == &Tok::Arrow {
            let (name, span) = self.ident()?;
            self.advance();
            let rhs = self.expr()?;
            let span = span.cover(rhs.span);
            return Ok(Expr::with_span(ExprKind::Assign(name, Box::new(rhs)), span));
        }
        let lhs = self.concat()?;
        if self.at(&Tok::Arrow) {
            return Err(ParseError::new("left-hand side of `<-` must be an identifier", self.peek().span));
        }
        Ok(lhs)
    }

    fn concat(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.postfix()?;
        while self.eat(&Tok::Plus) {
            let rhs = self.postfix()?;
            let span = lhs.span.cover(rhs.span);
            lhs = Expr::with_span(ExprKind::Concat(Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut callee = self.primary()?;
        while self.eat(&Tok::LParen) {
            let mut args = Vec::new();
            if !self.at(&Tok::RParen) {
                args.push(self.expr()?);
                while self.eat(&Tok::Comma) {
                    args.push(self.expr()?);
                }
            }
            let close = self.expect(Tok::RParen)?;
            let span = callee.span.cover(close.span);
            callee = Expr::with_span(ExprKind::Call(Box::new(callee), args), span);
        }
        Ok(callee)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let start = self.peek().span;
        match self.peek().tok.clone() {
            Tok::Str(text) => {
                self.advance();
                Ok(Expr::with_span(ExprKind::Str(text), start))
            }
            Tok::Ident(_) => {
                let (name, span) = self.ident()?;
                Ok(Expr::with_span(ExprKind::Var(name), span))
            }
            Tok::LParen => {
                self.advance();
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::LBrace => {
                self.advance();
                let mut exprs = vec![self.expr()?];
                while self.eat(&Tok::Semi) {
                    if self.at(&Tok::RBrace) {
                        break;
                    }
                    exprs.push(self.expr()?);
                }
                let close = self.expect(Tok::RBrace)?;
                Ok(Expr::with_span(ExprKind::Block(exprs), start.cover(close.span)))
            }
            Tok::Function => {
                self.advance();
                self.expect(Tok::LParen)?;
                let mut params: Vec<Param> = Vec::new();
                if !self.at(&Tok::RParen) {
                    loop {
                        let (name, span) = self.ident()?;
                        if params.iter().any(|p| p.name == name) {
                            return Err(ParseError::new(format!("duplicate parameter `{name}`"), span));
                        }
                        let default = if self.eat(&Tok::Equals) { Some(self.expr()?) } else { None };
                        params.push(Param { name, default });
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                self.expect(Tok::RParen)?;
                let body = self.expr()?;
                let span = start.cover(body.span);
                Ok(Expr::with_span(ExprKind::Function(params.into(), Rc::new(body)), span))
            }
            Tok::Environment => {
                self.advance();
                self.expect(Tok::LParen)?;
                let close = self.expect(Tok::RParen)?;
                Ok(Expr::with_span(ExprKind::EnvCapture, start.cover(close.span)))
            }
            Tok::Substitute => {
                self.advance();
                self.expect(Tok::LParen)?;
                let (name, _) = self.ident()?;
                let close = self.expect(Tok::RParen)?;
                Ok(Expr::with_span(ExprKind::Substitute(name), start.cover(close.span)))
            }
            Tok::Eval => {
                self.advance();
                self.expect(Tok::LParen)?;
                let code = self.expr()?;
                self.expect(Tok::Comma)?;
                let env = self.expr()?;
                let close = self.expect(Tok::RParen)?;
                Ok(Expr::with_span(ExprKind::Eval(Box::new(code), Box::new(env)), start.cover(close.span)))
            }
            Tok::DelayedAssign => {
                self.advance();
                self.expect(Tok::LParen)?;
                let (name, _) = self.ident()?;
                self.expect(Tok::Comma)?;
                let code = self.expr()?;
                self.expect(Tok::Comma)?;
                let env = self.expr()?;
                let close = self.expect(Tok::RParen)?;
                Ok(Expr::with_span(
                    ExprKind::DelayedAssign(name, Box::new(code), Box::new(env)),
                    start.cover(close.span),
                ))
            }
            _ => Err(self.unexpected("expression")),
        }
    }
}
