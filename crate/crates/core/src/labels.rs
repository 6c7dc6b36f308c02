use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Outcome label of an observable, instrument or probe observable.
///
/// Product outcome spaces use tuple labels, rendered as `(x,y)`; the text
/// form parses back to the same structure.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OutcomeLabel {
    Atom(String),
    Tuple(Vec<OutcomeLabel>),
}

impl OutcomeLabel {
    pub fn atom(text: impl Into<String>) -> Self {
        OutcomeLabel::Atom(text.into())
    }

    pub fn pair(x: &OutcomeLabel, y: &OutcomeLabel) -> Self {
        OutcomeLabel::Tuple(vec![x.clone(), y.clone()])
    }

    pub fn tuple(items: impl IntoIterator<Item = OutcomeLabel>) -> Self {
        OutcomeLabel::Tuple(items.into_iter().collect())
    }

    /// Components of a tuple label.
    pub fn components(&self) -> Option<&[OutcomeLabel]> {
        match self {
            OutcomeLabel::Tuple(items) => Some(items),
            OutcomeLabel::Atom(_) => None,
        }
    }

    /// Parses the textual form: atoms are bare words, tuples are
    /// parenthesized comma-separated lists.
    pub fn parse(text: &str) -> Result<Self> {
        let mut parser = Parser {
            chars: text.chars().collect(),
            pos: 0,
        };
        let label = parser.label()?;
        if parser.pos != parser.chars.len() {
            return Err(Error::LabelSyntax(text.to_string()));
        }
        Ok(label)
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn label(&mut self) -> Result<OutcomeLabel> {
        self.skip_ws();
        if self.peek() == Some('(') {
            self.pos += 1;
            let mut items = vec![self.label()?];
            loop {
                self.skip_ws();
                match self.peek() {
                    Some(',') => {
                        self.pos += 1;
                        items.push(self.label()?);
                    }
                    Some(')') => {
                        self.pos += 1;
                        return Ok(OutcomeLabel::Tuple(items));
                    }
                    _ => return Err(self.error()),
                }
            }
        }
        let start = self.pos;
        while let Some(c) = self.peek() {
            if matches!(c, '(' | ')' | ',') {
                break;
            }
            self.pos += 1;
        }
        let word: String = self.chars[start..self.pos].iter().collect();
        let word = word.trim();
        if word.is_empty() {
            return Err(self.error());
        }
        Ok(OutcomeLabel::Atom(word.to_string()))
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn error(&self) -> Error {
        Error::LabelSyntax(self.chars.iter().collect())
    }
}

impl fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutcomeLabel::Atom(s) => f.write_str(s),
            OutcomeLabel::Tuple(items) => {
                f.write_str("(")?;
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl FromStr for OutcomeLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OutcomeLabel::parse(s)
    }
}

impl From<&str> for OutcomeLabel {
    fn from(s: &str) -> Self {
        OutcomeLabel::Atom(s.to_string())
    }
}

impl From<String> for OutcomeLabel {
    fn from(s: String) -> Self {
        OutcomeLabel::Atom(s)
    }
}

impl From<usize> for OutcomeLabel {
    fn from(k: usize) -> Self {
        OutcomeLabel::Atom(k.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn renders_nested_tuples() {
        let x = OutcomeLabel::from(0usize);
        let y = OutcomeLabel::from("b");
        let p = OutcomeLabel::pair(&OutcomeLabel::pair(&x, &y), &x);
        assert_eq!(p.to_string(), "((0,b),0)");
        assert_eq!(OutcomeLabel::parse("((0,b),0)").unwrap(), p);
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["", "(a", "a)", "(a,)", "a,b", "()"] {
            assert!(OutcomeLabel::parse(bad).is_err(), "{bad}");
        }
    }

    fn arb_label() -> impl Strategy<Value = OutcomeLabel> {
        let leaf = "[a-z0-9_]{1,4}".prop_map(OutcomeLabel::Atom);
        leaf.prop_recursive(3, 12, 3, |inner| {
            prop::collection::vec(inner, 1..4).prop_map(OutcomeLabel::Tuple)
        })
    }

    proptest! {
        #[test]
        fn display_parse_roundtrip(label in arb_label()) {
            prop_assert_eq!(OutcomeLabel::parse(&label.to_string()).unwrap(), label);
        }
    }
}
