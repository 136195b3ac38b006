//! Rule-based sentence segmentation.
//!
//! A boundary is a run of terminal punctuation (`.`, `!`, `?`), optionally
//! followed by closing quotes or brackets, then whitespace, then an uppercase
//! letter or an ASCII digit. A period that ends one of [`ABBREVIATIONS`] never
//! opens a boundary, and since a boundary needs whitespace right after the
//! punctuation, decimal points (`3.14`) never split.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Abbreviations whose trailing period is not a sentence boundary.
pub const ABBREVIATIONS: &[&str] = &[
    "Dr.", "Mr.", "Mrs.", "Ms.", "Prof.", "St.", "vs.", "etc.", "e.g.", "i.e.", "Fig.", "No.", "U.S.",
];

const TERMINALS: [char; 3] = ['.', '!', '?'];

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '}' | '\u{2019}' | '\u{201D}' | '\u{00BB}')
}

fn is_opener(c: char) -> bool {
    matches!(c, '"' | '\'' | '(' | '[' | '{' | '\u{2018}' | '\u{201C}' | '\u{00AB}')
}

fn is_abbreviation(word: &str) -> bool {
    let word = word.trim_start_matches(is_opener);
    ABBREVIATIONS.iter().any(|abbr| abbr.eq_ignore_ascii_case(word))
}

/// Splits `text` into trimmed, nonempty sentences borrowed from the input.
///
/// Joining the result with single spaces and collapsing whitespace gives back
/// the whitespace-collapsed input.
pub fn segment(text: &str) -> Result<Vec<&str>> {
    if text.trim().is_empty() {
        return Err(Error::EmptyText);
    }
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let n = chars.len();
    let byte_at = |i: usize| if i < n { chars[i].0 } else { text.len() };

    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut word_start = 0usize;
    let mut i = 0usize;
    while i < n {
        let c = chars[i].1;
        if c.is_whitespace() {
            word_start = byte_at(i + 1);
            i += 1;
            continue;
        }
        if !TERMINALS.contains(&c) {
            i += 1;
            continue;
        }

        let mut j = i;
        let mut only_periods = true;
        while j < n && TERMINALS.contains(&chars[j].1) {
            only_periods &= chars[j].1 == '.';
            j += 1;
        }
        let punct_end = byte_at(j);
        while j < n && is_closer(chars[j].1) {
            j += 1;
        }
        let sentence_end = byte_at(j);
        let mut k = j;
        while k < n && chars[k].1.is_whitespace() {
            k += 1;
        }
        if k == j || k == n {
            i = j.max(i + 1);
            continue;
        }
        let next = chars[k].1;
        let opens_sentence = next.is_uppercase() || next.is_ascii_digit();
        let abbreviated = only_periods && is_abbreviation(&text[word_start..punct_end]);
        if opens_sentence && !abbreviated {
            let sentence = text[start..sentence_end].trim();
            if !sentence.is_empty() {
                sentences.push(sentence);
            }
            start = chars[k].0;
        }
        word_start = chars[k].0;
        i = k;
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        sentences.push(tail);
    }
    Ok(sentences)
}
