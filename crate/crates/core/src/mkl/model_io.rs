//! MKL model file: the SVM format plus `p <value>` and
//! `beta <spec> <value>` lines.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::scalar::Scalar;
use crate::svm::SvmModel;

use super::MklModel;

const MKL_HEADER: &str = "# mkl-model v1";

impl<T: Scalar> MklModel<T> {
    pub fn to_text(&self) -> String {
        let mut out = format!("{MKL_HEADER}\n");
        let _ = writeln!(out, "p {}", self.p);
        for (s, b) in self.specs.iter().zip(&self.betas) {
            let _ = writeln!(out, "beta {s} {b}");
        }
        self.svm.write_body(&mut out);
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.find(|(_, l)| !l.trim().is_empty()) {
            Some((_, l)) if l.trim() == MKL_HEADER => {}
            _ => return Err(Error::Invalid(format!("missing `{MKL_HEADER}` header"))),
        }
        let mut p = None;
        let mut specs = Vec::new();
        let mut betas = Vec::new();
        let svm = SvmModel::parse_body(lines.map(|(n, l)| (n + 1, l)), &mut |lineno, fields| {
            let bad = || Error::Invalid(format!("model line {lineno}: cannot parse `{}`", fields.join(" ")));
            match fields {
                ["p", v] => p = Some(v.parse::<T>().map_err(|_| bad())?),
                ["beta", s, v] => {
                    specs.push(s.parse::<KernelSpec<T>>().map_err(|_| bad())?);
                    betas.push(v.parse::<T>().map_err(|_| bad())?);
                }
                _ => return Ok(false),
            }
            Ok(true)
        })?;
        if specs.is_empty() {
            return Err(Error::Invalid("MKL model lists no kernels".into()));
        }
        Ok(MklModel {
            specs,
            betas,
            p: p.ok_or_else(|| Error::Invalid("MKL model lacks a p line".into()))?,
            svm,
            weight_norms: Vec::new(),
            trace: Vec::new(),
            converged: true,
        })
    }
}
