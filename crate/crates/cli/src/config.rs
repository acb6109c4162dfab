//! `key = value` run configuration with `[section]` headers.
//!
//! ```text
//! [dataset]
//! images = data/images        # <class>/<image> tree, for extract and codebook
//! labels = data/labels.csv
//! views = data/moments.csv, data/bag.csv
//!
//! [features]
//! descriptors = moments, bag
//! patch = 16
//! step = 16
//! codebook = data/codebook.txt
//! codebook_size = 1024
//! codebook_seed = 1
//! codebook_iterations = 20
//!
//! [kernels]
//! rbf_gammas = 10, 1, 0.1, 0.01
//! chi2_gammas = 3, 2, 1, 0.5
//! scale = variance
//!
//! [svm]
//! c_grid = 0.1, 1, 2, 3, 4, 5
//! tol = 1e-3
//! cv_folds = 5
//!
//! [mkl]
//! p = 1, 1.25, 2
//! tol_beta = 1e-4
//! max_outer = 100
//!
//! [benchmark]
//! methods = heuristic_mkl, mkl_lp:2
//! fractions = 0.05, 0.1
//! repetitions = 20
//! seed = 0
//!
//! [output]
//! dir = out
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hmkl::harness::{Method, PipelineSettings};
use hmkl::kernels::HilbertScale;
use sha2::{Digest, Sha256};

use crate::error::CliError;

const SECTIONS: [&str; 7] = ["dataset", "features", "kernels", "svm", "mkl", "benchmark", "output"];

const KEYS: [(&str, &[&str]); 7] = [
    ("dataset", &["images", "labels", "views"]),
    (
        "features",
        &["descriptors", "patch", "step", "codebook", "codebook_size", "codebook_seed", "codebook_iterations"],
    ),
    ("kernels", &["rbf_gammas", "chi2_gammas", "scale"]),
    ("svm", &["c_grid", "tol", "cv_folds"]),
    ("mkl", &["p", "tol_beta", "max_outer"]),
    ("benchmark", &["methods", "fractions", "repetitions", "seed"]),
    ("output", &["dir"]),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Descriptor {
    Moments,
    Bag,
}

impl Descriptor {
    pub fn name(self) -> &'static str {
        match self {
            Descriptor::Moments => "moments",
            Descriptor::Bag => "bag",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Raw text, echoed into reports.
    pub text: String,
    pub hash: String,
    pub images: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub views: Vec<PathBuf>,
    pub descriptors: Vec<Descriptor>,
    pub patch: usize,
    pub step: usize,
    pub codebook: Option<PathBuf>,
    pub codebook_size: usize,
    pub codebook_seed: u64,
    pub codebook_iterations: usize,
    pub settings: PipelineSettings<f64>,
    pub p_values: Vec<f64>,
    pub methods: Option<Vec<Method>>,
    pub fractions: Vec<f64>,
    pub repetitions: usize,
    pub seed: u64,
    pub output: PathBuf,
}

type Entries = BTreeMap<(String, String), (usize, String)>;

fn parse_entries(text: &str, path: &Path) -> Result<Entries, CliError> {
    let bad = |line: usize, msg: String| CliError::Validation(format!("{}:{line}: {msg}", path.display()));
    let mut section = String::new();
    let mut entries = Entries::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return Err(bad(n + 1, format!("unknown section `[{name}]`")));
            }
            section = name.to_string();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(bad(n + 1, format!("expected `key = value`, got `{line}`")));
        };
        if section.is_empty() {
            return Err(bad(n + 1, "entry before any `[section]` header".into()));
        }
        let key = key.trim().to_string();
        let known = KEYS.iter().find(|(s, _)| *s == section).map_or(&[][..], |(_, k)| *k);
        if !known.contains(&key.as_str()) {
            return Err(bad(n + 1, format!("unknown key `{key}` in [{section}]")));
        }
        if entries
            .insert((section.clone(), key.clone()), (n + 1, value.trim().to_string()))
            .is_some()
        {
            return Err(bad(n + 1, format!("duplicate key `{key}` in [{section}]")));
        }
    }
    Ok(entries)
}

struct Reader<'a> {
    entries: &'a Entries,
    path: &'a Path,
    base: &'a Path,
}

impl Reader<'_> {
    fn raw(&self, section: &str, key: &str) -> Option<&(usize, String)> {
        self.entries.get(&(section.to_string(), key.to_string()))
    }

    fn err(&self, line: usize, key: &str, msg: impl std::fmt::Display) -> CliError {
        CliError::Validation(format!("{}:{line}: `{key}`: {msg}", self.path.display()))
    }

    fn one<T: FromStr>(&self, section: &str, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(section, key) {
            None => Ok(default),
            Some((line, v)) => v.parse().map_err(|e| self.err(*line, key, e)),
        }
    }

    fn list<T: FromStr>(&self, section: &str, key: &str, default: Vec<T>) -> Result<Vec<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let Some((line, v)) = self.raw(section, key) else {
            return Ok(default);
        };
        let items: Vec<T> = v
            .split(',')
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|e| self.err(*line, key, e)))
            .collect::<Result<_, _>>()?;
        if items.is_empty() {
            return Err(self.err(*line, key, "list is empty"));
        }
        Ok(items)
    }

    fn path(&self, section: &str, key: &str) -> Option<PathBuf> {
        self.raw(section, key).map(|(_, v)| self.base.join(v))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let entries = parse_entries(text, path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let r = Reader {
            entries: &entries,
            path,
            base,
        };
        let defaults = PipelineSettings::<f64>::default();

        let descriptors = r
            .list::<String>("features", "descriptors", vec!["moments".into(), "bag".into()])?
            .into_iter()
            .map(|d| match d.as_str() {
                "moments" => Ok(Descriptor::Moments),
                "bag" => Ok(Descriptor::Bag),
                _ => Err(CliError::Validation(format!("unknown descriptor `{d}` (moments, bag)"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let scale = match r.one::<String>("kernels", "scale", "variance".into())?.as_str() {
            "variance" => HilbertScale::Variance,
            "std" => HilbertScale::StdDev,
            other => return Err(CliError::Validation(format!("unknown kernel scale `{other}` (variance, std)"))),
        };
        let settings = PipelineSettings {
            rbf_gammas: r.list("kernels", "rbf_gammas", defaults.rbf_gammas.clone())?,
            chi2_gammas: r.list("kernels", "chi2_gammas", defaults.chi2_gammas.clone())?,
            c_grid: r.list("svm", "c_grid", defaults.c_grid.clone())?,
            cv_folds: r.one("svm", "cv_folds", defaults.cv_folds)?,
            scale,
            tol_beta: r.one("mkl", "tol_beta", defaults.tol_beta)?,
            max_outer: r.one("mkl", "max_outer", defaults.max_outer)?,
            svm_tol: r.one("svm", "tol", defaults.svm_tol)?,
        };
        settings.validate().map_err(|e| CliError::Validation(e.to_string()))?;

        let methods = match r.raw("benchmark", "methods") {
            None => None,
            Some(_) => Some(r.list::<Method>("benchmark", "methods", Vec::new())?),
        };
        let config = Self {
            text: text.to_string(),
            hash: Sha256::digest(text.as_bytes())
                .iter()
                .take(8)
                .map(|b| format!("{b:02x}"))
                .collect(),
            images: r.path("dataset", "images"),
            labels: r.path("dataset", "labels"),
            views: match r.raw("dataset", "views") {
                None => Vec::new(),
                Some(_) => r
                    .list::<String>("dataset", "views", Vec::new())?
                    .into_iter()
                    .map(|v| base.join(v))
                    .collect(),
            },
            descriptors,
            patch: r.one("features", "patch", 16)?,
            step: r.one("features", "step", 16)?,
            codebook: r.path("features", "codebook"),
            codebook_size: r.one("features", "codebook_size", 1024)?,
            codebook_seed: r.one("features", "codebook_seed", 1)?,
            codebook_iterations: r.one("features", "codebook_iterations", 20)?,
            settings,
            p_values: r.list("mkl", "p", vec![1.0, 1.25, 2.0])?,
            methods,
            fractions: r.list("benchmark", "fractions", vec![0.05, 0.1, 0.2, 0.5, 0.8])?,
            repetitions: r.one("benchmark", "repetitions", 20)?,
            seed: r.one("benchmark", "seed", 0)?,
            output: r.path("output", "dir").unwrap_or_else(|| base.join("out")),
        };
        config.check_values()?;
        Ok(config)
    }

    fn check_values(&self) -> Result<(), CliError> {
        let invalid = |m: String| Err(CliError::Validation(m));
        if self.patch == 0 || self.step == 0 {
            return invalid("patch and step must be positive".into());
        }
        if self.codebook_size == 0 || self.codebook_iterations == 0 {
            return invalid("codebook_size and codebook_iterations must be positive".into());
        }
        for &p in &self.p_values {
            check_p(p)?;
        }
        if let Some(f) = self.fractions.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
            return invalid(format!("train fraction {f} is outside (0, 1)"));
        }
        if self.repetitions == 0 {
            return invalid("repetitions must be at least 1".into());
        }
        Ok(())
    }

    /// Benchmark methods: the configured list, or by default one
    /// single-kernel baseline per view, the concatenated baseline, MKL for
    /// every configured p and the heuristic.
    pub fn benchmark_methods(&self, n_views: usize) -> Vec<Method> {
        if let Some(m) = &self.methods {
            return m.clone();
        }
        let mut out: Vec<Method> = (0..n_views)
            .map(|view| Method::SingleKernel { view, family: None })
            .collect();
        out.push(Method::ConcatSingleKernel { family: None });
        out.extend(self.p_values.iter().map(|&p| Method::MklLp { p }));
        out.push(Method::HeuristicMkl);
        out
    }

    pub fn require_images(&self) -> Result<&Path, CliError> {
        let dir = self
            .images
            .as_deref()
            .ok_or_else(|| CliError::Validation("config lacks `images` in [dataset]".into()))?;
        if !dir.is_dir() {
            return Err(CliError::Validation(format!("image folder {} does not exist", dir.display())));
        }
        Ok(dir)
    }

    /// Label file and view files, all of which must exist.
    pub fn require_table(&self) -> Result<(&Path, &[PathBuf]), CliError> {
        let labels = self
            .labels
            .as_deref()
            .ok_or_else(|| CliError::Validation("config lacks `labels` in [dataset]".into()))?;
        if self.views.is_empty() {
            return Err(CliError::Validation("config lacks `views` in [dataset]".into()));
        }
        for p in std::iter::once(labels).chain(self.views.iter().map(|v| v.as_path())) {
            if !p.is_file() {
                return Err(CliError::Validation(format!("file {} does not exist", p.display())));
            }
        }
        Ok((labels, &self.views))
    }
}

pub fn check_p(p: f64) -> Result<(), CliError> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("p must be a finite value ≥ 1, got {p}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, CliError> {
        RunConfig::parse(text, Path::new("/tmp/run.conf"))
    }

    #[test]
    fn defaults_and_paths() {
        let c = parse("[dataset]\nlabels = l.csv\nviews = a.csv, b.csv\n").unwrap();
        assert_eq!(c.labels.as_deref(), Some(Path::new("/tmp/l.csv")));
        assert_eq!(c.views, vec![PathBuf::from("/tmp/a.csv"), PathBuf::from("/tmp/b.csv")]);
        assert_eq!(c.settings, PipelineSettings::default());
        assert_eq!(c.output, PathBuf::from("/tmp/out"));
        assert_eq!(c.benchmark_methods(2).len(), 2 + 1 + 3 + 1);
    }

    #[test]
    fn values_and_comments() {
        let c = parse(
            "# run\n[svm]\nc_grid = 1, 10  # two\n[mkl]\np = 2\n[benchmark]\nmethods = heuristic_mkl, mkl_lp:2\nseed = 9\n",
        )
        .unwrap();
        assert_eq!(c.settings.c_grid, vec![1.0, 10.0]);
        assert_eq!(c.p_values, vec![2.0]);
        assert_eq!(c.seed, 9);
        assert_eq!(c.benchmark_methods(4), vec![Method::HeuristicMkl, Method::MklLp { p: 2.0 }]);
        assert_eq!(c.hash.len(), 16);
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in [
            "key = 1\n",
            "[nope]\n",
            "[svm]\nc_grid\n",
            "[svm]\ngamma = 1\n",
            "[svm]\nc_grid = 1\nc_grid = 2\n",
            "[svm]\nc_grid = x\n",
            "[svm]\nc_grid = ,\n",
            "[mkl]\np = 0.5\n",
            "[benchmark]\nfractions = 1.5\n",
            "[benchmark]\nmethods = svm\n",
            "[kernels]\nscale = other\n",
        ] {
            assert!(matches!(parse(bad), Err(CliError::Validation(_))), "{bad}");
        }
    }
}
