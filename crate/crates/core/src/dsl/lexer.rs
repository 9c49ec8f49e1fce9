use std::fmt;

use crate::model::Loc;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Int(i64),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Semi,
    Colon,
    Assign,
    Dash,
    Op(&'static str),
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokenKind::Int(i) => write!(f, "integer `{i}`"),
            TokenKind::Str(s) => write!(f, "string {s:?}"),
            TokenKind::LBrace => f.write_str("`{`"),
            TokenKind::RBrace => f.write_str("`}`"),
            TokenKind::LParen => f.write_str("`(`"),
            TokenKind::RParen => f.write_str("`)`"),
            TokenKind::Comma => f.write_str("`,`"),
            TokenKind::Semi => f.write_str("`;`"),
            TokenKind::Colon => f.write_str("`:`"),
            TokenKind::Assign => f.write_str("`=`"),
            TokenKind::Dash => f.write_str("`-`"),
            TokenKind::Op(op) => write!(f, "`{op}`"),
            TokenKind::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexError {
    pub loc: Loc,
    pub message: String,
}

/// Output of [`tokenize`]: the tokens (ending in `Eof`) and the text of every
/// `//` comment that precedes the first token.
#[derive(Debug)]
pub struct Lexed {
    pub tokens: Vec<Token>,
    pub header: Vec<String>,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn loc(&self) -> Loc {
        Loc::new(self.line, self.col)
    }
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub fn tokenize(text: &str) -> Result<Lexed, LexError> {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut tokens = Vec::new();
    let mut header = Vec::new();

    while let Some(c) = cur.peek() {
        let loc = cur.loc();
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '/' && cur.peek2() == Some('/') {
            let mut comment = String::new();
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                comment.push(c);
                cur.bump();
            }
            if tokens.is_empty() {
                header.push(comment.trim_end().to_string());
            }
            continue;
        }
        let kind = if c.is_ascii_alphabetic() {
            let mut name = String::new();
            loop {
                while let Some(c) = cur.peek().filter(|c| is_word_char(*c)) {
                    name.push(c);
                    cur.bump();
                }
                // A hyphen continues the identifier only when glued to a word.
                if cur.peek() == Some('-') && cur.peek2().is_some_and(is_word_char) {
                    name.push('-');
                    cur.bump();
                } else {
                    break;
                }
            }
            TokenKind::Ident(name)
        } else if c.is_ascii_digit() || (c == '-' && cur.peek2().is_some_and(|d| d.is_ascii_digit())) {
            let mut digits = String::new();
            digits.push(c);
            cur.bump();
            while let Some(d) = cur.peek().filter(char::is_ascii_digit) {
                digits.push(d);
                cur.bump();
            }
            if cur.peek().is_some_and(is_word_char) {
                return Err(LexError {
                    loc: cur.loc(),
                    message: format!("unexpected character {:?} after number", cur.peek().unwrap()),
                });
            }
            match digits.parse::<i64>() {
                Ok(i) => TokenKind::Int(i),
                Err(_) => {
                    return Err(LexError {
                        loc,
                        message: format!("integer literal `{digits}` out of range"),
                    })
                }
            }
        } else if c == '"' {
            cur.bump();
            let mut s = String::new();
            loop {
                match cur.bump() {
                    None | Some('\n') => {
                        return Err(LexError {
                            loc,
                            message: "unterminated string literal".into(),
                        })
                    }
                    Some('"') => break,
                    Some('\\') => {
                        let esc_loc = cur.loc();
                        match cur.bump() {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            other => {
                                return Err(LexError {
                                    loc: esc_loc,
                                    message: format!("invalid escape {:?}", other.unwrap_or(' ')),
                                })
                            }
                        }
                    }
                    Some(c) => s.push(c),
                }
            }
            TokenKind::Str(s)
        } else {
            cur.bump();
            let next = cur.peek();
            let mut two = |op: &'static str| {
                cur.bump();
                TokenKind::Op(op)
            };
            match (c, next) {
                ('=', Some('=')) => two("=="),
                ('!', Some('=')) => two("!="),
                ('<', Some('=')) => two("<="),
                ('>', Some('=')) => two(">="),
                ('<', _) => TokenKind::Op("<"),
                ('>', _) => TokenKind::Op(">"),
                ('=', _) => TokenKind::Assign,
                ('{', _) => TokenKind::LBrace,
                ('}', _) => TokenKind::RBrace,
                ('(', _) => TokenKind::LParen,
                (')', _) => TokenKind::RParen,
                (',', _) => TokenKind::Comma,
                (';', _) => TokenKind::Semi,
                (':', _) => TokenKind::Colon,
                ('-', _) => TokenKind::Dash,
                _ => {
                    return Err(LexError {
                        loc,
                        message: format!("unexpected character {c:?}"),
                    })
                }
            }
        };
        tokens.push(Token { kind, loc });
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        loc: cur.loc(),
    });
    Ok(Lexed { tokens, header })
}
