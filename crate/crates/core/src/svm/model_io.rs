//! Text model format:
//!
//! ```text
//! # svm-model v1
//! C <value>
//! bias <value>
//! alpha <i> <value>
//! label <i> <+1|-1>
//! ```

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::SvmModel;

pub(crate) const SVM_HEADER: &str = "# svm-model v1";

impl<T: Scalar> SvmModel<T> {
    /// Appends the `C`, `bias`, `alpha` and `label` lines.
    pub fn write_body(&self, out: &mut String) {
        let _ = writeln!(out, "C {}", self.c);
        let _ = writeln!(out, "bias {}", self.bias);
        for (i, a) in self.alphas.iter().enumerate() {
            let _ = writeln!(out, "alpha {i} {a}");
        }
        for (i, y) in self.labels.iter().enumerate() {
            let _ = writeln!(out, "label {i} {y:+}");
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{SVM_HEADER}\n");
        self.write_body(&mut out);
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.find(|(_, l)| !l.trim().is_empty()) {
            Some((_, l)) if l.trim() == SVM_HEADER => {}
            _ => return Err(Error::Invalid(format!("missing `{SVM_HEADER}` header"))),
        }
        Self::parse_body(lines.map(|(n, l)| (n + 1, l)), &mut |_, _| Ok(false))
    }

    /// Parses model lines; `extra` may claim lines the SVM format does not
    /// know (returning `Ok(true)`).
    pub(crate) fn parse_body<'a>(
        lines: impl Iterator<Item = (usize, &'a str)>,
        extra: &mut dyn FnMut(usize, &[&str]) -> Result<bool>,
    ) -> Result<Self> {
        let mut c = None;
        let mut bias = None;
        let mut alphas: Vec<Option<T>> = Vec::new();
        let mut labels: Vec<Option<i8>> = Vec::new();
        fn put<V>(v: &mut Vec<Option<V>>, i: usize, x: V) {
            if v.len() <= i {
                v.resize_with(i + 1, || None);
            }
            v[i] = Some(x);
        }
        for (lineno, line) in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() || fields[0].starts_with('#') {
                continue;
            }
            let bad = || Error::Invalid(format!("model line {lineno}: cannot parse `{line}`"));
            let num = |s: &str| s.parse::<T>().map_err(|_| bad());
            match fields[..] {
                ["C", v] => c = Some(num(v)?),
                ["bias", v] => bias = Some(num(v)?),
                ["alpha", i, v] => put(&mut alphas, i.parse().map_err(|_| bad())?, num(v)?),
                ["label", i, v] => {
                    let y: i8 = v.trim_start_matches('+').parse().map_err(|_| bad())?;
                    put(&mut labels, i.parse().map_err(|_| bad())?, y)
                }
                _ => {
                    if !extra(lineno, &fields)? {
                        return Err(bad());
                    }
                }
            }
        }
        let missing = |what: &str| Error::Invalid(format!("model lacks {what}"));
        let alphas: Vec<T> = alphas.into_iter().collect::<Option<_>>().ok_or_else(|| missing("some alpha lines"))?;
        let labels: Vec<i8> = labels.into_iter().collect::<Option<_>>().ok_or_else(|| missing("some label lines"))?;
        if alphas.len() != labels.len() {
            return Err(Error::Invalid(format!(
                "{} alphas but {} labels",
                alphas.len(),
                labels.len()
            )));
        }
        Ok(SvmModel {
            alphas,
            bias: bias.ok_or_else(|| missing("a bias line"))?,
            labels,
            c: c.ok_or_else(|| missing("a C line"))?,
            objective: T::nan(),
            iterations: 0,
            converged: true,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let m = SvmModel {
            alphas: vec![0.5, 0.0, 1.0 / 3.0],
            bias: -0.125,
            labels: vec![1, -1, -1],
            c: 2.0,
            objective: 1.0,
            iterations: 4,
            converged: true,
        };
        let text = m.to_text();
        assert!(text.starts_with("# svm-model v1\nC 2\nbias -0.125\nalpha 0 0.5\n"));
        let back = SvmModel::<f64>::from_text(&text).unwrap();
        assert_eq!(back.alphas, m.alphas);
        assert_eq!(back.labels, m.labels);
        assert_eq!(back.bias, m.bias);
        assert_eq!(back.c, m.c);
    }

    #[test]
    fn malformed_models() {
        assert!(SvmModel::<f64>::from_text("C 1\n").is_err());
        assert!(SvmModel::<f64>::from_text("# svm-model v1\nC 1\nbias 0\nalpha 1 0.5\nlabel 1 +1\n").is_err());
        assert!(SvmModel::<f64>::from_text("# svm-model v1\nC 1\nbias 0\nweird 3\n").is_err());
    }
}
