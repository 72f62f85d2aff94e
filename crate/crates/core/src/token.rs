//! Shared tokenizer for report text, code, and summaries.
//!
//! One deterministic tokenizer is used everywhere so that metric scores and
//! chunk accounting agree on what a "token" is. The rules are:
//!
//! - split on Unicode whitespace (case is preserved),
//! - every non-alphanumeric, non-underscore character becomes its own token,
//! - in [`Mode::Code`], each line break additionally yields a `"\n"` token so
//!   chunk boundaries can snap to line ends.

/// Token emitted for a line break in [`Mode::Code`].
pub const NEWLINE_TOKEN: &str = "\n";

/// Whether line breaks are kept as tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Whitespace (including newlines) only separates tokens.
    Text,
    /// Line breaks are preserved as `"\n"` tokens.
    Code,
}

/// Tokenize natural-language text. Whitespace is dropped.
pub fn tokenize_text(input: &str) -> Vec<String> {
    tokenize(input, Mode::Text)
}

/// Tokenize code. Line breaks become `"\n"` tokens.
pub fn tokenize_code(input: &str) -> Vec<String> {
    tokenize(input, Mode::Code)
}

pub fn tokenize(input: &str, mode: Mode) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    let mut chars = input.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '\r' || c == '\n' {
            if c == '\r' && chars.peek() == Some(&'\n') {
                chars.next();
            }
            flush(&mut word, &mut tokens);
            if mode == Mode::Code {
                tokens.push(NEWLINE_TOKEN.to_string());
            }
        } else if c.is_whitespace() {
            flush(&mut word, &mut tokens);
        } else if is_word_char(c) {
            word.push(c);
        } else {
            flush(&mut word, &mut tokens);
            tokens.push(c.to_string());
        }
    }
    flush(&mut word, &mut tokens);
    tokens
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn flush(word: &mut String, tokens: &mut Vec<String>) {
    if !word.is_empty() {
        tokens.push(std::mem::take(word));
    }
}

/// Render tokens back to text.
///
/// Words are space-separated; single-character punctuation tokens attach to
/// the preceding token; `"\n"` tokens become line breaks. Re-tokenizing the
/// result yields the original sequence, which is what the corpus files rely
/// on for their round-trip guarantee.
pub fn detokenize(tokens: &[String]) -> String {
    let mut out = String::new();
    for tok in tokens {
        if tok == NEWLINE_TOKEN {
            while out.ends_with(' ') {
                out.pop();
            }
            out.push('\n');
        } else if is_punct_token(tok) {
            out.push_str(tok);
        } else {
            if !out.is_empty() && !out.ends_with('\n') {
                out.push(' ');
            }
            out.push_str(tok);
        }
    }
    out
}

fn is_punct_token(tok: &str) -> bool {
    let mut chars = tok.chars();
    matches!((chars.next(), chars.next()), (Some(c), None) if !is_word_char(c))
}

/// Lowercase a token sequence (metric scoring uses lowercased tokens).
pub fn lowercase(tokens: &[String]) -> Vec<String> {
    tokens.iter().map(|t| t.to_lowercase()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn splits_words_on_whitespace() {
        assert_eq!(tokenize_text("App crashes on save"), toks(&["App", "crashes", "on", "save"]));
    }

    #[test]
    fn splits_off_punctuation() {
        assert_eq!(tokenize_text("int x=0;"), toks(&["int", "x", "=", "0", ";"]));
        assert_eq!(
            tokenize_text("App crashes on save. Steps follow."),
            toks(&["App", "crashes", "on", "save", ".", "Steps", "follow", "."])
        );
    }

    #[test]
    fn preserves_case_and_underscores() {
        assert_eq!(tokenize_text("My_Var Foo"), toks(&["My_Var", "Foo"]));
    }

    #[test]
    fn code_mode_keeps_newlines() {
        assert_eq!(
            tokenize_code("int x;\nreturn x;\r\n"),
            toks(&["int", "x", ";", "\n", "return", "x", ";", "\n"])
        );
        assert_eq!(tokenize_text("int x;\nreturn x;"), toks(&["int", "x", ";", "return", "x", ";"]));
    }

    #[test]
    fn blank_lines_yield_consecutive_newline_tokens() {
        assert_eq!(tokenize_code("a\n\nb"), toks(&["a", "\n", "\n", "b"]));
    }

    #[test]
    fn empty_input_yields_no_tokens() {
        assert!(tokenize_text("").is_empty());
        assert!(tokenize_text("   \t ").is_empty());
    }

    #[test]
    fn detokenize_attaches_punctuation() {
        let t = toks(&["App", "crashes", "on", "save", ".", "Steps", "follow", "."]);
        assert_eq!(detokenize(&t), "App crashes on save. Steps follow.");
    }

    #[test]
    fn detokenize_renders_newlines() {
        let t = toks(&["int", "x", ";", "\n", "return", "x", ";"]);
        assert_eq!(detokenize(&t), "int x;\nreturn x;");
    }

    #[test]
    fn lowercase_maps_tokens() {
        assert_eq!(lowercase(&toks(&["App", "SAVE", "."])), toks(&["app", "save", "."]));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // detokenize is a right inverse of tokenize on tokenizer output
            #[test]
            fn text_round_trip(s in "\\PC{0,80}") {
                let tokens = tokenize_text(&s);
                prop_assert_eq!(tokenize_text(&detokenize(&tokens)), tokens);
            }

            #[test]
            fn code_round_trip(s in "[ -~\\n]{0,120}") {
                let tokens = tokenize_code(&s);
                prop_assert_eq!(tokenize_code(&detokenize(&tokens)), tokens);
            }

            #[test]
            fn tokens_never_contain_whitespace(s in "\\PC{0,80}") {
                for t in tokenize_text(&s) {
                    prop_assert!(!t.chars().any(char::is_whitespace));
                }
            }
        }
    }
}
