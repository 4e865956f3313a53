use super::ast::SourceSpan;
use super::parser::ParseError;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Str(String),
    Ident(String),
    Function,
    Environment,
    Substitute,
    Eval,
    DelayedAssign,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Plus,
    Equals,
    Arrow,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Str(_) => "string".to_string(),
            Tok::Ident(name) => format!("identifier `{name}`"),
            Tok::Function => "`function`".to_string(),
            Tok::Environment => "`environment`".to_string(),
            Tok::Substitute => "`substitute`".to_string(),
            Tok::Eval => "`eval`".to_string(),
            Tok::DelayedAssign => "`delayedAssign`".to_string(),
            Tok::LParen => "`(`".to_string(),
            Tok::RParen => "`)`".to_string(),
            Tok::LBrace => "`{`".to_string(),
            Tok::RBrace => "`}`".to_string(),
            Tok::Comma => "`,`".to_string(),
            Tok::Semi => "`;`".to_string(),
            Tok::Plus => "`+`".to_string(),
            Tok::Equals => "`=`".to_string(),
            Tok::Arrow => "`<-`".to_string(),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: u32,
    column: u32,
    source: u32,
}

pub(crate) fn tokenize(src: &str, source: u32) -> Result<Vec<Token>, ParseError> {
    let mut lexer = Lexer { src, bytes: src.as_bytes(), pos: 0, line: 1, column: 1, source };
    let mut out = Vec::new();
    loop {
        let token = lexer.next_token()?;
        let done = token.tok == Tok::Eof;
        out.push(token);
        if done {
            return Ok(out);
        }
    }
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn mark(&self) -> SourceSpan {
        SourceSpan { source: self.source, start: self.pos, end: self.pos, line: self.line, column: self.column }
    }

    fn finish(&self, mark: SourceSpan) -> SourceSpan {
        SourceSpan { end: self.pos, ..mark }
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn next_token(&mut self) -> Result<Token, ParseError> {
        self.skip_trivia();
        let mark = self.mark();
        let Some(c) = self.bump() else {
            return Ok(Token { tok: Tok::Eof, span: mark });
        };
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            '+' => Tok::Plus,
            '=' => Tok::Equals,
            '<' => match (self.peek(), self.bytes.get(self.pos + 1)) {
                (Some('-'), _) => {
                    self.bump();
                    Tok::Arrow
                }
                (Some('<'), Some(b'-')) => {
                    self.bump();
                    self.bump();
                    return Err(ParseError::new("superassignment `<<-` is not supported", self.finish(mark)));
                }
                _ => return Err(ParseError::new("unexpected character `<`", self.finish(mark))),
            },
            '"' => Tok::Str(self.string_body(mark)?),
            c if c.is_ascii_alphabetic() || c == '_' => {
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
                        self.bump();
                    } else {
                        break;
                    }
                }
                match &self.src[mark.start..self.pos] {
                    "function" => Tok::Function,
                    "environment" => Tok::Environment,
                    "substitute" => Tok::Substitute,
                    "eval" => Tok::Eval,
                    "delayedAssign" => Tok::DelayedAssign,
                    word => Tok::Ident(word.to_string()),
                }
            }
            other => {
                return Err(ParseError::new(
                    format!("unexpected character `{}`", other.escape_default()),
                    self.finish(mark),
                ))
            }
        };
        Ok(Token { tok, span: self.finish(mark) })
    }

    fn string_body(&mut self, mark: SourceSpan) -> Result<String, ParseError> {
        let mut text = String::new();
        loop {
            let escape_mark = self.mark();
            match self.bump() {
                None => return Err(ParseError::new("unterminated string", self.finish(mark))),
                Some('"') => return Ok(text),
                Some('\\') => match self.bump() {
                    Some('"') => text.push('"'),
                    Some('\\') => text.push('\\'),
                    Some('n') => text.push('\n'),
                    Some('t') => text.push('\t'),
                    Some(other) => {
                        return Err(ParseError::new(
                            format!("unknown escape `\\{}`", other.escape_default()),
                            self.finish(escape_mark),
                        ))
                    }
                    None => return Err(ParseError::new("unterminated string", self.finish(mark))),
                },
                Some(c) => text.push(c),
            }
        }
    }
}
