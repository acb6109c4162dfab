use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelFamily;

/// A classifier pipeline compared by the benchmark.
///
/// Text forms: `single_kernel:v<f>[:<family>]`,
/// `concat_single_kernel[:<family>]`, `mkl_lp:<p>`, `heuristic_mkl`.
/// Without a family the single-kernel baselines choose it by CV.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Method {
    SingleKernel { view: usize, family: Option<KernelFamily> },
    ConcatSingleKernel { family: Option<KernelFamily> },
    MklLp { p: f64 },
    HeuristicMkl,
}

impl Method {
    pub fn uses_mkl_bank(&self) -> bool {
        matches!(self, Method::MklLp { .. } | Method::HeuristicMkl)
    }
}

fn parse_family(s: &str) -> Result<KernelFamily> {
    match s {
        "linear" => Ok(KernelFamily::Linear),
        "rbf" => Ok(KernelFamily::Rbf),
        "chi2" => Ok(KernelFamily::Chi2),
        _ => Err(Error::Invalid(format!("unknown kernel family `{s}`"))),
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::SingleKernel { view, family: None } => write!(f, "single_kernel:v{view}"),
            Method::SingleKernel { view, family: Some(k) } => write!(f, "single_kernel:v{view}:{k}"),
            Method::ConcatSingleKernel { family: None } => f.write_str("concat_single_kernel"),
            Method::ConcatSingleKernel { family: Some(k) } => write!(f, "concat_single_kernel:{k}"),
            Method::MklLp { p } => write!(f, "mkl_lp:{p}"),
            Method::HeuristicMkl => f.write_str("heuristic_mkl"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Invalid(format!("unknown method `{s}`"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts[..] {
            ["heuristic_mkl"] => Ok(Method::HeuristicMkl),
            ["mkl_lp", p] => {
                let p: f64 = p.parse().map_err(|_| bad())?;
                if !(p >= 1.0 && p.is_finite()) {
                    return Err(Error::Invalid(format!("p must be >= 1, got {p}")));
                }
                Ok(Method::MklLp { p })
            }
            ["concat_single_kernel"] => Ok(Method::ConcatSingleKernel { family: None }),
            ["concat_single_kernel", k] => Ok(Method::ConcatSingleKernel {
                family: Some(parse_family(k)?),
            }),
            ["single_kernel", v, ref rest @ ..] if rest.len() <= 1 => {
                let view = v.strip_prefix('v').and_then(|v| v.parse().ok()).ok_or_else(bad)?;
                let family = rest.first().map(|k| parse_family(k)).transpose()?;
                Ok(Method::SingleKernel { view, family })
            }
            _ => Err(bad()),
        }
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_forms_round_trip() {
        for s in [
            "single_kernel:v0",
            "single_kernel:v3:chi2",
            "concat_single_kernel",
            "concat_single_kernel:rbf",
            "mkl_lp:1.25",
            "mkl_lp:2",
            "heuristic_mkl",
        ] {
            let m: Method = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
        for s in ["mkl_lp:0.5", "single_kernel", "single_kernel:x1", "concat_single_kernel:poly", "svm"] {
            assert!(s.parse::<Method>().is_err(), "{s}");
        }
        let json = serde_json::to_string(&Method::MklLp { p: 2.0 }).unwrap();
        assert_eq!(json, "\"mkl_lp:2\"");
    }
}
