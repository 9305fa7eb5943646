//! Escaping and number formatting shared by the text formats.

/// Escapes backslash, space, tab, CR and LF so that a token can be used as
/// a space- or tab-delimited field.
pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            ' ' => out.push_str("\\s"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape(s: &str) -> Option<String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        out.push(match chars.next()? {
            '\\' => '\\',
            's' => ' ',
            't' => '\t',
            'n' => '\n',
            'r' => '\r',
            _ => return None,
        });
    }
    Some(out)
}

/// Nine significant digits in exponent form, e.g. `-1.25000000e-3`.
pub fn real9(v: f64) -> String {
    format!("{v:.8e}")
}

pub fn hex(v: u64) -> String {
    format!("{v:016x}")
}

pub fn parse_hex(s: &str) -> Option<u64> {
    if s.len() != 16 {
        return None;
    }
    u64::from_str_radix(s, 16).ok()
}

/// Parses `key=value` pairs separated by spaces.
pub fn header_fields(line: &str) -> Vec<(&str, &str)> {
    line.split(' ')
        .filter_map(|kv| kv.split_once('='))
        .collect()
}

pub fn header_value<'a>(fields: &[(&'a str, &'a str)], key: &str) -> Option<&'a str> {
    fields.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escape_round_trip() {
        for s in ["", "ID:x", "LIT:a b", "LIT:\t\n\r\\s", "LIT:\\", "é ü"] {
            let e = escape(s);
            assert!(!e.contains([' ', '\t', '\n', '\r']));
            assert_eq!(unescape(&e).as_deref(), Some(s));
        }
        assert_eq!(unescape("bad\\q"), None);
        assert_eq!(unescape("bad\\"), None);
    }

    #[test]
    fn reals_keep_nine_digits() {
        assert_eq!(real9(0.0), "0.00000000e0");
        assert_eq!(real9(-1.0 / 3.0), "-3.33333333e-1");
        let v = 123.456789123;
        let back: f64 = real9(v).parse().unwrap();
        assert!((back - v).abs() / v < 1e-8);
        assert_eq!(hex(255), "00000000000000ff");
        assert_eq!(parse_hex("00000000000000ff"), Some(255));
    }
}
