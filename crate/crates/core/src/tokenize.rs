//! Deterministic text-to-token pipeline shared by the BM25 index and the
//! mock embedder.
//!
//! Two modes: plain Unicode word segmentation, and a hybrid mode for
//! CJK-language corpora that emits overlapping character bigrams over
//! contiguous CJK runs while falling back to word segmentation everywhere
//! else.

use std::collections::HashSet;

use unicode_segmentation::UnicodeSegmentation;

/// Token stream shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenizerMode {
    /// Unicode word segmentation; punctuation is dropped.
    #[default]
    UnicodeWords,
    /// Contiguous CJK runs emit overlapping character bigrams (a lone CJK
    /// character emits itself); non-CJK spans behave like `UnicodeWords`.
    CjkBigramHybrid,
}

/// Tokenizer settings. Tokenization is a pure function of `(text, config)`.
#[derive(Debug, Clone, Default)]
pub struct TokenizerConfig {
    pub mode: TokenizerMode,
    pub lowercase: bool,
    /// Tokens to drop, applied after lowercasing.
    pub stopwords: Option<HashSet<String>>,
}

impl TokenizerConfig {
    pub fn new() -> Self {
        TokenizerConfig {
            mode: TokenizerMode::UnicodeWords,
            lowercase: true,
            stopwords: None,
        }
    }

    pub fn with_mode(mut self, mode: TokenizerMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_lowercase(mut self, lowercase: bool) -> Self {
        self.lowercase = lowercase;
        self
    }

    pub fn with_stopwords(mut self, stopwords: HashSet<String>) -> Self {
        self.stopwords = Some(stopwords);
        self
    }
}

/// Characters treated as CJK for bigram purposes: Han ideographs
/// (unified, extension A/B, compatibility), Hiragana, Katakana, and
/// Hangul syllables.
fn is_cjk(c: char) -> bool {
    matches!(c,
        '\u{4E00}'..='\u{9FFF}'     // CJK Unified Ideographs
        | '\u{3400}'..='\u{4DBF}'   // Extension A
        | '\u{20000}'..='\u{2A6DF}' // Extension B
        | '\u{F900}'..='\u{FAFF}'   // Compatibility Ideographs
        | '\u{3040}'..='\u{309F}'   // Hiragana
        | '\u{30A0}'..='\u{30FF}'   // Katakana
        | '\u{AC00}'..='\u{D7AF}'   // Hangul Syllables
    )
}

/// Tokenize `text` under `config`. Empty input yields an empty sequence;
/// no emitted token is empty.
pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<String> {
    let mut tokens = match config.mode {
        TokenizerMode::UnicodeWords => words(text, config.lowercase),
        TokenizerMode::CjkBigramHybrid => hybrid(text, config.lowercase),
    };
    if let Some(stop) = &config.stopwords {
        tokens.retain(|t| !stop.contains(t));
    }
    tokens
}

/// Word count used for corpus statistics: Unicode word segmentation,
/// unaffected by lowercasing or stopwords.
pub fn word_count(text: &str) -> usize {
    text.unicode_words().count()
}

fn words(text: &str, lowercase: bool) -> Vec<String> {
    text.unicode_words()
        .map(|w| {
            if lowercase {
                w.to_lowercase()
            } else {
                w.to_string()
            }
        })
        .collect()
}

fn hybrid(text: &str, lowercase: bool) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut span_start = 0;
    let mut cjk_run: Vec<char> = Vec::new();

    let flush_run = |run: &mut Vec<char>, out: &mut Vec<String>| {
        match run.len() {
            0 => {}
            1 => out.push(run[0].to_string()),
            _ => {
                for pair in run.windows(2) {
                    out.push(pair.iter().collect());
                }
            }
        }
        run.clear();
    };

    for (idx, c) in text.char_indices() {
        if is_cjk(c) {
            if span_start < idx {
                tokens.extend(words(&text[span_start..idx], lowercase));
            }
            cjk_run.push(c);
            span_start = idx + c.len_utf8();
        } else if !cjk_run.is_empty() {
            flush_run(&mut cjk_run, &mut tokens);
        }
    }
    flush_run(&mut cjk_run, &mut tokens);
    if span_start < text.len() {
        tokens.extend(words(&text[span_start..], lowercase));
    }
    tokens
}
