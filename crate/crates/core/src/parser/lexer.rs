use super::ParseError;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keyword {
    Interface,
    Extends,
    Class,
    Implements,
    New,
    Newgroup,
    Acquire,
    In,
    Except,
    Joins,
    As,
    Leaves,
    SubtypeOf,
    If,
    Else,
    While,
    Skip,
    Return,
    True,
    False,
    Bool,
    Any,
    Group,
    This,
    Emptyset,
    Void,
}

const KEYWORDS: &[(&str, Keyword)] = &[
    ("interface", Keyword::Interface),
    ("extends", Keyword::Extends),
    ("class", Keyword::Class),
    ("implements", Keyword::Implements),
    ("new", Keyword::New),
    ("newgroup", Keyword::Newgroup),
    ("acquire", Keyword::Acquire),
    ("in", Keyword::In),
    ("except", Keyword::Except),
    ("joins", Keyword::Joins),
    ("as", Keyword::As),
    ("leaves", Keyword::Leaves),
    ("subtypeOf", Keyword::SubtypeOf),
    ("if", Keyword::If),
    ("else", Keyword::Else),
    ("while", Keyword::While),
    ("skip", Keyword::Skip),
    ("return", Keyword::Return),
    ("true", Keyword::True),
    ("false", Keyword::False),
    ("Bool", Keyword::Bool),
    ("Any", Keyword::Any),
    ("Group", Keyword::Group),
    ("this", Keyword::This),
    ("emptyset", Keyword::Emptyset),
    ("void", Keyword::Void),
];

impl Keyword {
    pub fn as_str(self) -> &'static str {
        KEYWORDS
            .iter()
            .find(|(_, k)| *k == self)
            .map(|(s, _)| *s)
            .unwrap_or("?")
    }

    fn lookup(word: &str) -> Option<Keyword> {
        KEYWORDS.iter().find(|(s, _)| *s == word).map(|(_, k)| *k)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident,
    Punct(char),
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Keyword(k) => write!(f, "`{}`", k.as_str()),
            TokenKind::Ident => f.write_str("identifier"),
            TokenKind::Punct(c) => write!(f, "`{c}`"),
            TokenKind::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub line: u32,
    pub col: u32,
}

const PUNCT: &str = "{}()<>,;.=";

pub fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = source.chars().peekable();
    let (mut line, mut col) = (1u32, 1u32);

    while let Some(&c) = chars.peek() {
        let (start_line, start_col) = (line, col);
        if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
        } else if c.is_whitespace() {
            chars.next();
            col += 1;
        } else if c == '/' {
            chars.next();
            col += 1;
            if chars.peek() != Some(&'/') {
                return Err(ParseError::new("unexpected `/`", vec!["`//`".into()], start_line, start_col));
            }
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
                col += 1;
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    word.push(c);
                    chars.next();
                    col += 1;
                } else {
                    break;
                }
            }
            let kind = match Keyword::lookup(&word) {
                Some(k) => TokenKind::Keyword(k),
                None => TokenKind::Ident,
            };
            tokens.push(Token {
                kind,
                lexeme: word,
                line: start_line,
                col: start_col,
            });
        } else if PUNCT.contains(c) {
            chars.next();
            col += 1;
            tokens.push(Token {
                kind: TokenKind::Punct(c),
                lexeme: c.to_string(),
                line: start_line,
                col: start_col,
            });
        } else {
            return Err(ParseError::new(
                format!("unexpected character `{c}`"),
                Vec::new(),
                start_line,
                start_col,
            ));
        }
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        lexeme: String::new(),
        line,
        col,
    });
    Ok(tokens)
}
