//! Whitespace + punctuation tokenizer with character offsets.
//!
//! Offsets count Unicode scalar values, matching brat standoff offsets.

/// A word token and its `[start, end)` character offsets in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Splits on whitespace; every punctuation character becomes its own token.
///
/// `offset` is added to all reported positions, so a slice of a larger text
/// can be tokenized in place.
pub fn tokenize_with_offset(text: &str, offset: usize) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut current_start = 0;

    let flush = |current: &mut String, start: usize, end: usize, tokens: &mut Vec<Token>| {
        if !current.is_empty() {
            tokens.push(Token { text: std::mem::take(current), start, end });
        }
    };

    for (pos, ch) in text.chars().enumerate() {
        let pos = pos + offset;
        if ch.is_whitespace() {
            flush(&mut current, current_start, pos, &mut tokens);
        } else if is_punct(ch) {
            flush(&mut current, current_start, pos, &mut tokens);
            tokens.push(Token { text: ch.to_string(), start: pos, end: pos + 1 });
        } else {
            if current.is_empty() {
                current_start = pos;
            }
            current.push(ch);
        }
    }
    let end = offset + text.chars().count();
    flush(&mut current, current_start, end, &mut tokens);
    tokens
}

pub fn tokenize(text: &str) -> Vec<Token> {
    tokenize_with_offset(text, 0)
}

pub fn words(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.text).collect()
}

fn is_punct(ch: char) -> bool {
    ch.is_ascii_punctuation() || (!ch.is_alphanumeric() && !ch.is_whitespace() && !ch.is_control())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_punctuation_into_own_tokens() {
        let toks = words("[source: Islamabad] It's big.");
        assert_eq!(toks, vec!["[", "source", ":", "Islamabad", "]", "It", "'", "s", "big", "."]);
    }

    #[test]
    fn offsets_are_char_based() {
        let toks = tokenize("Two  women");
        assert_eq!(toks[0], Token { text: "Two".into(), start: 0, end: 3 });
        assert_eq!(toks[1], Token { text: "women".into(), start: 5, end: 10 });

        let toks = tokenize("café au");
        assert_eq!(toks[1].start, 5);
    }

    #[test]
    fn offset_shifts_positions() {
        let toks = tokenize_with_offset("a b", 10);
        assert_eq!((toks[1].start, toks[1].end), (12, 13));
    }

    #[test]
    fn empty_and_blank_text_have_no_tokens() {
        assert!(tokenize("").is_empty());
        assert!(tokenize(" \n\t").is_empty());
    }
}
