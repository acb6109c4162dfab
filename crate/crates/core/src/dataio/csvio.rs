//! CSV file formats: view files (`id,v0,…`), label files (`id,label`) and
//! split manifests (`id,role` under a `# seed=… fraction=…` comment).
//!
//! Lines starting with `#` are comments. Values are written with the
//! shortest round-trip representation, so write → read is bit-exact.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{FeatureTable, SplitManifest};

#[derive(Clone, Debug, PartialEq)]
pub struct ViewFile<T> {
    pub ids: Vec<String>,
    pub values: Array2<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabelFile {
    pub ids: Vec<String>,
    /// Class name per sample.
    pub labels: Vec<String>,
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::parse(path, line, e.to_string())
}

fn check_field(path: &Path, line: usize, s: &str) -> Result<()> {
    if s.contains([',', '"', '\n', '\r']) {
        return Err(Error::parse(
            path,
            line,
            format!("field `{s}` contains a reserved character"),
        ));
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

fn write_comments(out: &mut impl Write, comments: &[String]) -> std::io::Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    Ok(())
}

pub fn read_view_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<ViewFile<T>> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.get(0) != Some("id") || header.len() < 2 {
        return Err(Error::parse(path, 1, "header must be `id,v0,v1,...`"));
    }
    for (j, name) in header.iter().skip(1).enumerate() {
        if name != format!("v{j}") {
            return Err(Error::parse(
                path,
                1,
                format!("header column {} is `{name}`, expected `v{j}`", j + 1),
            ));
        }
    }
    let dim = header.len() - 1;
    let mut ids = Vec::new();
    let mut flat = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let row = row + 1;
        if rec.len() != dim + 1 {
            return Err(Error::parse(
                path,
                line,
                format!("row {row} has {} values, expected {dim}", rec.len() - 1),
            ));
        }
        ids.push(rec[0].to_string());
        for field in rec.iter().skip(1) {
            let v: T = field.parse().map_err(|_| {
                Error::parse(path, line, format!("row {row}: `{field}` is not a number"))
            })?;
            if !v.is_finite() {
                return Err(Error::parse(
                    path,
                    line,
                    format!("row {row}: non-finite value `{field}`"),
                ));
            }
            flat.push(v);
        }
    }
    let values = Array2::from_shape_vec((ids.len(), dim), flat)
        .map_err(|e| Error::Dimension(e.to_string()))?;
    Ok(ViewFile { ids, values })
}

pub fn write_view_csv<T: Scalar>(
    path: impl AsRef<Path>,
    ids: &[String],
    values: &Array2<T>,
    comments: &[String],
) -> Result<()> {
    let path = path.as_ref();
    if ids.len() != values.nrows() {
        return Err(Error::Dimension(format!(
            "{} ids for {} rows",
            ids.len(),
            values.nrows()
        )));
    }
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    write_comments(&mut out, comments).map_err(io)?;
    let header: Vec<String> = (0..values.ncols()).map(|j| format!("v{j}")).collect();
    writeln!(out, "id,{}", header.join(",")).map_err(io)?;
    for (i, (id, row)) in ids.iter().zip(values.rows()).enumerate() {
        check_field(path, i + 2, id)?;
        write!(out, "{id}").map_err(io)?;
        for v in row {
            write!(out, ",{v}").map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelFile> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != ["id", "label"] {
        return Err(Error::parse(path, 1, "header must be `id,label`"));
    }
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 2 || rec[1].is_empty() {
            return Err(Error::parse(
                path,
                line,
                format!("row {} must hold `id,label`", row + 1),
            ));
        }
        ids.push(rec[0].to_string());
        labels.push(rec[1].to_string());
    }
    Ok(LabelFile { ids, labels })
}

pub fn write_labels(
    path: impl AsRef<Path>,
    ids: &[String],
    labels: &[String],
    comments: &[String],
) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    write_comments(&mut out, comments).map_err(io)?;
    writeln!(out, "id,label").map_err(io)?;
    for (i, (id, label)) in ids.iter().zip(labels).enumerate() {
        check_field(path, i + 2, id)?;
        check_field(path, i + 2, label)?;
        writeln!(out, "{id},{label}").map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Loads and cross-validates view files against a label file. Rows follow
/// the label file's order; class indices are assigned by first appearance.
pub fn load_feature_table<T: Scalar, P: AsRef<Path>>(
    view_paths: &[P],
    label_path: impl AsRef<Path>,
) -> Result<FeatureTable<T>> {
    let label_path = label_path.as_ref();
    let label_file = read_labels(label_path)?;
    let mut class_names: Vec<String> = Vec::new();
    let mut labels = Vec::with_capacity(label_file.ids.len());
    for name in &label_file.labels {
        let idx = match class_names.iter().position(|c| c == name) {
            Some(i) => i,
            None => {
                class_names.push(name.clone());
                class_names.len() - 1
            }
        };
        labels.push(idx);
    }
    let mut views = Vec::with_capacity(view_paths.len());
    let mut view_names = Vec::with_capacity(view_paths.len());
    for vp in view_paths {
        let vp = vp.as_ref();
        let view: ViewFile<T> = read_view_csv(vp)?;
        let mut row_of: HashMap<&str, usize> = HashMap::with_capacity(view.ids.len());
        for (r, id) in view.ids.iter().enumerate() {
            if row_of.insert(id.as_str(), r).is_some() {
                return Err(Error::Invalid(format!(
                    "{}: duplicate sample id `{id}`",
                    vp.display()
                )));
            }
        }
        if let Some(id) = view
            .ids
            .iter()
            .find(|id| !label_file.ids.iter().any(|l| l == *id))
        {
            return Err(Error::Invalid(format!(
                "{}: unknown sample id `{id}` (absent from {})",
                vp.display(),
                label_path.display()
            )));
        }
        let mut order = Vec::with_capacity(label_file.ids.len());
        for id in &label_file.ids {
            match row_of.get(id.as_str()) {
                Some(&r) => order.push(r),
                None => {
                    return Err(Error::Invalid(format!(
                        "{}: sample id `{id}` listed in {} is missing",
                        vp.display(),
                        label_path.display()
                    )))
                }
            }
        }
        views.push(view.values.select(ndarray::Axis(0), &order));
        view_names.push(
            vp.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| format!("view{}", views.len() - 1)),
        );
    }
    FeatureTable::new(label_file.ids, labels, class_names, views, view_names)
}

pub fn write_split_manifest<T: Scalar>(
    path: impl AsRef<Path>,
    manifest: &SplitManifest,
    table: &FeatureTable<T>,
    comments: &[String],
) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    write_comments(&mut out, comments).map_err(io)?;
    writeln!(
        out,
        "# seed={} fraction={}",
        manifest.seed, manifest.train_fraction
    )
    .map_err(io)?;
    writeln!(out, "id,role").map_err(io)?;
    let mut role = vec![""; table.n_samples()];
    manifest.train_indices.iter().for_each(|&i| role[i] = "train");
    manifest.test_indices.iter().for_each(|&i| role[i] = "test");
    for (id, r) in table.sample_ids().iter().zip(role) {
        writeln!(out, "{id},{r}").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_split_manifest<T: Scalar>(
    path: impl AsRef<Path>,
    table: &FeatureTable<T>,
) -> Result<SplitManifest> {
    let path: PathBuf = path.as_ref().to_path_buf();
    let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
    let mut seed = None;
    let mut fraction = None;
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(&path, e))?;
        let Some(comment) = line.strip_prefix('#') else { break };
        for kv in comment.split_whitespace() {
            match kv.split_once('=') {
                Some(("seed", v)) => {
                    seed = Some(v.parse::<u64>().map_err(|_| {
                        Error::parse(&path, n + 1, format!("bad seed `{v}`"))
                    })?)
                }
                Some(("fraction", v)) => {
                    fraction = Some(v.parse::<f64>().map_err(|_| {
                        Error::parse(&path, n + 1, format!("bad fraction `{v}`"))
                    })?)
                }
                _ => {}
            }
        }
    }
    let (Some(seed), Some(fraction)) = (seed, fraction) else {
        return Err(Error::parse(&path, 1, "missing `# seed=<u64> fraction=<p>` line"));
    };
    let index: HashMap<&str, usize> = table
        .sample_ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut rdr = reader(&path)?;
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut seen = vec![false; table.n_samples()];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(&path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let id = rec.get(0).unwrap_or_default();
        let &i = index
            .get(id)
            .ok_or_else(|| Error::parse(&path, line, format!("unknown sample id `{id}`")))?;
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::parse(&path, line, format!("sample `{id}` listed twice")));
        }
        match rec.get(1) {
            Some("train") => train.push(i),
            Some("test") => test.push(i),
            other => {
                return Err(Error::parse(
                    &path,
                    line,
                    format!("role `{}` is not train/test", other.unwrap_or_default()),
                ))
            }
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(Error::Invalid(format!(
            "{}: sample `{}` has no role",
            path.display(),
            table.sample_ids()[i]
        )));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitManifest {
        seed,
        train_fraction: fraction,
        train_indices: train,
        test_indices: test,
    })
}
