//! Minimal HTML cleaner for issue-tracker pages.
//!
//! Strips markup, decodes entities, drops `<script>`/`<style>` wholesale, and
//! lifts `<pre>`/`<code>` regions out as code blocks.

/// Result of cleaning one HTML document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanedHtml {
    /// Visible text with markup removed.
    pub text: String,
    /// Contents of `<pre>`/`<code>` regions, in document order.
    pub code_blocks: Vec<String>,
}

pub fn clean_html(input: &str) -> CleanedHtml {
    let mut text = String::new();
    let mut code_blocks = Vec::new();
    let mut rest = input;

    while let Some(lt) = rest.find('<') {
        text.push_str(&decode_entities(&rest[..lt]));
        rest = &rest[lt..];

        // a '<' not opening a tag is literal text (common in inline code)
        if !is_tag_start(rest) {
            text.push('<');
            rest = &rest[1..];
            continue;
        }
        if rest.starts_with("<!--") {
            rest = skip_past(rest, "-->");
            continue;
        }
        let Some(tag_end) = rest.find('>') else {
            // dangling '<' at end of input, treat as text
            text.push_str(&decode_entities(rest));
            rest = "";
            break;
        };
        let tag = &rest[1..tag_end];
        let name = tag_name(tag);
        rest = &rest[tag_end + 1..];

        // every tag or removed region acts as a word separator
        text.push(' ');
        match name.as_str() {
            "script" | "style" => {
                rest = skip_past_close_tag(rest, &name);
            }
            "pre" | "code" => {
                let (inner, after) = take_until_close_tag(rest, &name);
                let block = decode_entities(&strip_tags(inner));
                if !block.trim().is_empty() {
                    code_blocks.push(block);
                }
                rest = after;
            }
            _ => {}
        }
    }
    text.push_str(&decode_entities(rest));

    CleanedHtml { text, code_blocks }
}

fn is_tag_start(s: &str) -> bool {
    matches!(s[1..].chars().next(), Some(c) if c.is_ascii_alphabetic() || c == '/' || c == '!')
}

fn tag_name(tag: &str) -> String {
    tag.trim_start_matches('/')
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_ascii_lowercase()
}

fn skip_past<'a>(s: &'a str, marker: &str) -> &'a str {
    match s.find(marker) {
        Some(i) => &s[i + marker.len()..],
        None => "",
    }
}

fn find_close_tag(s: &str, name: &str) -> Option<(usize, usize)> {
    let lower = s.to_ascii_lowercase();
    let mut from = 0;
    while let Some(i) = lower[from..].find("</") {
        let start = from + i;
        if let Some(tail) = lower[start + 2..].strip_prefix(name) {
            if let Some(gt) = tail.find('>') {
                if tail[..gt].trim().is_empty() {
                    return Some((start, start + 2 + name.len() + gt + 1));
                }
            }
        }
        from = start + 2;
    }
    None
}

fn skip_past_close_tag<'a>(s: &'a str, name: &str) -> &'a str {
    match find_close_tag(s, name) {
        Some((_, end)) => &s[end..],
        None => "",
    }
}

fn take_until_close_tag<'a>(s: &'a str, name: &str) -> (&'a str, &'a str) {
    match find_close_tag(s, name) {
        Some((start, end)) => (&s[..start], &s[end..]),
        None => (s, ""),
    }
}

fn strip_tags(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(lt) = rest.find('<') {
        out.push_str(&rest[..lt]);
        rest = &rest[lt..];
        if is_tag_start(rest) {
            match rest.find('>') {
                Some(gt) => rest = &rest[gt + 1..],
                None => return out,
            }
        } else {
            out.push('<');
            rest = &rest[1..];
        }
    }
    out.push_str(rest);
    out
}

pub fn decode_entities(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        // entity names are short; anything else is a bare ampersand
        let Some(semi) = rest.find(';').filter(|i| *i <= 12) else {
            out.push('&');
            rest = &rest[1..];
            continue;
        };
        let entity = &rest[1..semi];
        match decode_entity(entity) {
            Some(c) => {
                out.push(c);
                rest = &rest[semi + 1..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

fn decode_entity(entity: &str) -> Option<char> {
    match entity {
        "amp" => Some('&'),
        "lt" => Some('<'),
        "gt" => Some('>'),
        "quot" => Some('"'),
        "apos" => Some('\''),
        "nbsp" => Some(' '),
        _ => {
            let code = entity.strip_prefix('#')?;
            let value = if let Some(hex) = code.strip_prefix('x').or_else(|| code.strip_prefix('X'))
            {
                u32::from_str_radix(hex, 16).ok()?
            } else {
                code.parse().ok()?
            };
            char::from_u32(value)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_simple_markup() {
        let cleaned = clean_html("<p>App <b>crashes</b> on save</p>");
        assert_eq!(cleaned.text.split_whitespace().collect::<Vec<_>>(), ["App", "crashes", "on", "save"]);
        assert!(cleaned.code_blocks.is_empty());
    }

    #[test]
    fn extracts_pre_regions() {
        let cleaned = clean_html("text <pre>int x=0;</pre> more");
        assert_eq!(cleaned.text.split_whitespace().collect::<Vec<_>>(), ["text", "more"]);
        assert_eq!(cleaned.code_blocks, vec!["int x=0;".to_string()]);
    }

    #[test]
    fn nested_pre_code_yields_one_block() {
        let cleaned = clean_html("<pre><code>a < b</code></pre>");
        assert_eq!(cleaned.code_blocks.len(), 1);
        assert_eq!(cleaned.code_blocks[0].trim(), "a < b");
    }

    #[test]
    fn drops_script_and_style_wholesale() {
        let cleaned = clean_html("a<script>var x = 'hidden';</script>b<style>p{}</style>c");
        assert_eq!(cleaned.text.split_whitespace().collect::<Vec<_>>(), ["a", "b", "c"]);
        assert!(cleaned.code_blocks.is_empty());
    }

    #[test]
    fn decodes_entities() {
        let cleaned = clean_html("x &amp; y &lt;z&gt; &#65; &#x42;");
        assert_eq!(cleaned.text.split_whitespace().collect::<Vec<_>>(), ["x", "&", "y", "<z>", "A", "B"]);
    }

    #[test]
    fn ignores_comments_and_unknown_entities() {
        let cleaned = clean_html("a <!-- hidden <b> --> b &unknown; c");
        assert_eq!(cleaned.text.split_whitespace().collect::<Vec<_>>(), ["a", "b", "&unknown;", "c"]);
    }

    #[test]
    fn entities_inside_code_blocks_are_decoded() {
        let cleaned = clean_html("<code>if (a &lt; b)</code>");
        assert_eq!(cleaned.code_blocks, vec!["if (a < b)".to_string()]);
    }

    #[test]
    fn unterminated_script_swallows_rest() {
        let cleaned = clean_html("visible<script>everything after");
        assert_eq!(cleaned.text.trim(), "visible");
    }
}
