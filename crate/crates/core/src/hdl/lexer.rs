use super::ast::Anchor;
use super::HdlError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// `'0'` or `'1'`.
    Bit(char),
    /// Bare integer literal, only meaningful as a `:= 0` initializer.
    Int(String),
    LParen,
    RParen,
    Semi,
    Colon,
    Comma,
    /// `:=`
    VarAssign,
    /// `<=`
    SigAssign,
    Eq,
    Neq,
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub at: Anchor,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, HdlError> {
    let mut out = Vec::new();
    for (ln, line) in src.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let at = Anchor {
                line: ln as u32 + 1,
                column: i as u32 + 1,
            };
            let next = chars.get(i + 1).copied();
            let (tok, len) = match c {
                _ if c.is_whitespace() => {
                    i += 1;
                    continue;
                }
                '-' if next == Some('-') => break,
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                ';' => (Tok::Semi, 1),
                ',' => (Tok::Comma, 1),
                ':' if next == Some('=') => (Tok::VarAssign, 2),
                ':' => (Tok::Colon, 1),
                '<' if next == Some('=') => (Tok::SigAssign, 2),
                '/' if next == Some('=') => (Tok::Neq, 2),
                '=' => (Tok::Eq, 1),
                '\'' => match (next, chars.get(i + 2)) {
                    (Some(b @ ('0' | '1')), Some('\'')) => (Tok::Bit(b), 3),
                    _ => {
                        return Err(HdlError::Syntax {
                            at,
                            message: "character literals other than '0' and '1' are not supported"
                                .into(),
                        })
                    }
                },
                '"' => {
                    return Err(HdlError::Unsupported {
                        at,
                        feature: "string and bit-string literals".into(),
                    })
                }
                _ if c.is_ascii_digit() => {
                    let len = chars[i..]
                        .iter()
                        .take_while(|c| c.is_ascii_alphanumeric() || **c == '_')
                        .count();
                    (Tok::Int(chars[i..i + len].iter().collect()), len)
                }
                _ if c.is_ascii_alphabetic() => {
                    let len = chars[i..]
                        .iter()
                        .take_while(|c| c.is_ascii_alphanumeric() || **c == '_')
                        .count();
                    (Tok::Ident(chars[i..i + len].iter().collect()), len)
                }
                _ => {
                    return Err(HdlError::Syntax {
                        at,
                        message: format!("unexpected character `{c}`"),
                    })
                }
            };
            out.push(Token { tok, at });
            i += len;
        }
    }
    let eof_line = src.lines().count() as u32 + 1;
    out.push(Token {
        tok: Tok::Eof,
        at: Anchor {
            line: eof_line,
            column: 1,
        },
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_and_positions() {
        let toks = tokenize("  NQ1 <= not(Q1); -- comment\nif (CLK /= '1')").unwrap();
        let kinds: Vec<&Tok> = toks.iter().map(|t| &t.tok).collect();
        assert_eq!(kinds[0], &Tok::Ident("NQ1".into()));
        assert_eq!(toks[0].at, Anchor { line: 1, column: 3 });
        assert_eq!(kinds[1], &Tok::SigAssign);
        assert!(kinds.contains(&&Tok::Neq));
        assert!(kinds.contains(&&Tok::Bit('1')));
        assert_eq!(kinds.last().unwrap(), &&Tok::Eof);
    }
}
