//! Small text utilities: lowercasing, word tokenization and span handling.
//!
//! Spans are expressed in `char` units (not bytes) so that offsets supplied in
//! data files mean the same thing regardless of the encoding width of the
//! preceding text.

/// Half-open character span `[start, end)` inside a sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    /// Byte range of this span in `text`. Positions past the end clamp to `text.len()`.
    pub fn byte_range(&self, text: &str) -> std::ops::Range<usize> {
        char_to_byte(text, self.start)..char_to_byte(text, self.end)
    }

    pub fn slice<'a>(&self, text: &'a str) -> &'a str {
        &text[self.byte_range(text)]
    }
}

pub fn char_to_byte(text: &str, char_idx: usize) -> usize {
    text.char_indices()
        .nth(char_idx)
        .map(|(b, _)| b)
        .unwrap_or(text.len())
}

/// Unicode default lowercasing; every case-insensitive comparison goes through here.
pub fn normalize(word: &str) -> String {
    word.to_lowercase()
}

pub fn eq_ignore_case(a: &str, b: &str) -> bool {
    a == b || normalize(a) == normalize(b)
}

/// Replace `span` of `text` with `replacement`.
pub fn replace_span(text: &str, span: Span, replacement: &str) -> String {
    let range = span.byte_range(text);
    let mut out = String::with_capacity(text.len() + replacement.len());
    out.push_str(&text[..range.start]);
    out.push_str(replacement);
    out.push_str(&text[range.end..]);
    out
}

/// First whole-token, case-insensitive occurrence of `word` in `text`.
///
/// A match is whole-token when the characters on either side (if any) are not
/// alphanumeric, so `compulsory` matches inside `compulsory.` but not inside
/// `noncompulsory`.
pub fn find_token(text: &str, word: &str) -> Option<Span> {
    let chars: Vec<char> = text.chars().collect();
    let wlen = word.chars().count();
    if wlen == 0 || wlen > chars.len() {
        return None;
    }
    let target = normalize(word);
    for start in 0..=chars.len() - wlen {
        let end = start + wlen;
        if start > 0 && chars[start - 1].is_alphanumeric() {
            continue;
        }
        if end < chars.len() && chars[end].is_alphanumeric() {
            continue;
        }
        let window: String = chars[start..end].iter().collect();
        if normalize(&window) == target {
            return Some(Span::new(start, end));
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    /// Character span in the source text.
    pub span: Span,
    pub is_word: bool,
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-')
}

/// Split `text` into word tokens and single-character punctuation tokens.
///
/// A word is a maximal run of alphanumeric characters, optionally joined by
/// internal apostrophes or hyphens (`don't`, `well-known`).
pub fn tokenize(text: &str) -> Vec<Token<'_>> {
    let indexed: Vec<(usize, char)> = text.char_indices().collect();
    let byte_at = |i: usize| indexed.get(i).map(|&(b, _)| b).unwrap_or(text.len());
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < indexed.len() {
        let c = indexed[i].1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_alphanumeric() {
            let start = i;
            i += 1;
            loop {
                match indexed.get(i) {
                    Some(&(_, c)) if c.is_alphanumeric() => i += 1,
                    Some(&(_, c))
                        if is_joiner(c)
                            && indexed
                                .get(i + 1)
                                .is_some_and(|&(_, n)| n.is_alphanumeric()) =>
                    {
                        i += 2
                    }
                    _ => break,
                }
            }
            tokens.push(Token {
                text: &text[byte_at(start)..byte_at(i)],
                span: Span::new(start, i),
                is_word: true,
            });
        } else {
            tokens.push(Token {
                text: &text[byte_at(i)..byte_at(i + 1)],
                span: Span::new(i, i + 1),
                is_word: false,
            });
            i += 1;
        }
    }
    tokens
}
