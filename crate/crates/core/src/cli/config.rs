//! Flat `key=value` configuration files; `#` starts a comment.

use crate::error::{Error, Result};

/// One assignment with the byte offset of its key in the file.
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub offset: usize,
}

pub fn parse_config(text: &str) -> Result<Vec<Entry>> {
    let mut out: Vec<Entry> = Vec::new();
    let mut line_start = 0;
    for raw in text.split_inclusive('\n') {
        let line = raw.split('#').next().unwrap_or("");
        let lead = line.len() - line.trim_start().len();
        let body = line.trim();
        if !body.is_empty() {
            let offset = line_start + lead;
            let Some((k, v)) = body.split_once('=') else {
                return Err(Error::Parse {
                    offset: offset + body.len(),
                    message: format!("config line `{body}` has no '='"),
                    expected: vec!["=".into()],
                });
            };
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(Error::Parse { offset, message: "empty config key".into(), expected: vec!["key".into()] });
            }
            let value = v.trim().trim_matches('"').to_string();
            // Later assignments win.
            out.retain(|e| e.key != key);
            out.push(Entry { key, value, offset });
        }
        line_start += raw.len();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_blanks_and_overrides() {
        let text = "# header\nhurst = 0.4\n\n p = \"x^2\" # poly\nhurst=0.45\n";
        let e = parse_config(text).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].key, "p");
        assert_eq!(e[0].value, "x^2");
        assert_eq!(e[1].value, "0.45");
        assert_eq!(&text[e[0].offset..e[0].offset + 1], "p");
    }

    #[test]
    fn missing_equals() {
        match parse_config("hurst 0.4\n").unwrap_err() {
            Error::Parse { offset, .. } => assert_eq!(offset, 9),
            other => panic!("{other}"),
        }
    }
}
