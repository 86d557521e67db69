//! Line-oriented `key value...` text dialect shared by model, label and
//! config files. Blank lines and `#` comments are ignored. Floats are
//! written with 17 significant digits so they parse back to the same bits.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Default)]
pub struct Writer {
    buf: String,
}

impl Writer {
    pub fn new() -> Self {
        Writer::default()
    }

    pub fn line(&mut self, tokens: &[&str]) {
        self.buf.push_str(&tokens.join(" "));
        self.buf.push('\n');
    }

    pub fn floats(&mut self, key: &str, values: &[f64]) {
        self.buf.push_str(key);
        for v in values {
            self.buf.push(' ');
            self.buf.push_str(&fmt_f64(*v));
        }
        self.buf.push('\n');
    }

    pub fn into_string(self) -> String {
        self.buf
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        fs::write(path, &self.buf).map_err(|e| Error::io(path, e))
    }
}

pub struct Reader {
    source: PathBuf,
    lines: Vec<(usize, String)>,
    pos: usize,
}

impl Reader {
    pub fn open(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Reader::from_text(path, &text))
    }

    pub fn from_text(source: &Path, text: &str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .map(|(i, l)| (i, l.to_string()))
            .collect();
        Reader {
            source: source.to_path_buf(),
            lines,
            pos: 0,
        }
    }

    pub fn error(&self, reason: impl Into<String>) -> Error {
        let line = self
            .lines
            .get(self.pos.saturating_sub(1))
            .map_or(0, |(n, _)| *n);
        Error::parse(format!("{}:{line}", self.source.display()), reason)
    }

    fn next_line(&mut self) -> Result<(String, String)> {
        let (_, line) = self
            .lines
            .get(self.pos)
            .ok_or_else(|| Error::parse(self.source.display().to_string(), "unexpected end of file"))?;
        let line = line.clone();
        self.pos += 1;
        let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((&line, ""));
        Ok((key.to_string(), rest.trim().to_string()))
    }

    pub fn peek_key(&self) -> Option<&str> {
        self.lines
            .get(self.pos)
            .map(|(_, l)| l.split_whitespace().next().unwrap_or(""))
    }

    /// Rest of the next line, which must start with `key`.
    pub fn value(&mut self, key: &str) -> Result<String> {
        let (k, v) = self.next_line()?;
        if k != key {
            return Err(self.error(format!("expected {key:?}, found {k:?}")));
        }
        Ok(v)
    }

    pub fn parsed<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.value(key)?;
        v.parse()
            .map_err(|_| self.error(format!("cannot parse {key} value {v:?}")))
    }

    pub fn floats(&mut self, key: &str, count: usize) -> Result<Vec<f64>> {
        let v = self.value(key)?;
        let out: Vec<f64> = v
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| self.error(format!("bad float in {key}: {e}")))?;
        if out.len() != count {
            return Err(self.error(format!("{key} has {} values, expected {count}", out.len())));
        }
        Ok(out)
    }

    pub fn expect_header(&mut self, magic: &str, version: &str) -> Result<()> {
        let v = self.value(magic)?;
        if v != version {
            return Err(self.error(format!("unsupported {magic} version {v}")));
        }
        Ok(())
    }

    pub fn expect_end(&self) -> Result<()> {
        match self.lines.get(self.pos) {
            Some((n, _)) => Err(Error::parse(
                format!("{}:{n}", self.source.display()),
                "trailing content",
            )),
            None => Ok(()),
        }
    }

    /// Every remaining line as a `(key, value)` pair.
    pub fn entries(&mut self) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        while self.pos < self.lines.len() {
            out.push(self.next_line()?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reads_keys_and_reports_lines() {
        let text = "# header\nmagic 1\n\nname  hello world\ncount 3\n";
        let mut r = Reader::from_text(Path::new("t"), text);
        r.expect_header("magic", "1").unwrap();
        assert_eq!(r.value("name").unwrap(), "hello world");
        let err = r.value("dims").unwrap_err().to_string();
        assert!(err.contains("t:5"), "{err}");
    }

    proptest! {
        #[test]
        fn floats_roundtrip_bitwise(v in proptest::num::f64::ANY) {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            if v.is_nan() {
                prop_assert!(back.is_nan());
            } else {
                prop_assert_eq!(back.to_bits(), v.to_bits());
            }
        }
    }
}
