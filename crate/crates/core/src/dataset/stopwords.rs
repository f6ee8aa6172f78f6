//! Fixed English stopword list used to filter surface-match synonyms.

use std::collections::HashSet;
use std::sync::OnceLock;

const ENGLISH: &str = include_str!("stopwords_en.txt");

pub fn english() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| ENGLISH.lines().map(str::trim).filter(|w| !w.is_empty()).collect())
}

/// Case-insensitive membership test.
pub fn is_stopword(word: &str) -> bool {
    english().contains(word.to_lowercase().as_str())
}
