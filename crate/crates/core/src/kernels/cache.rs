//! Binary Gram cache: a text header line `gram <rows> <cols> <spec> <hash>`
//! followed by little-endian `f64` values in row-major order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{GramMatrix, KernelSpec};

pub fn write_gram<T: Scalar>(
    path: impl AsRef<Path>,
    gram: &GramMatrix<T>,
    spec: &str,
    table_hash: &str,
) -> Result<()> {
    let path = path.as_ref();
    if spec.contains(char::is_whitespace) || table_hash.contains(char::is_whitespace) {
        return Err(Error::Invalid("cache key fields must not contain whitespace".into()));
    }
    let io = |e| Error::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(out, "gram {} {} {spec} {table_hash}", gram.nrows(), gram.ncols()).map_err(io)?;
    for v in gram.values().iter() {
        out.write_all(&v.as_f64().to_le_bytes()).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Returns the matrix with the spec string and table hash from its header.
pub fn read_gram<T: Scalar>(path: impl AsRef<Path>) -> Result<(GramMatrix<T>, String, String)> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut rdr = BufReader::new(File::open(path).map_err(io)?);
    let mut header = String::new();
    rdr.read_line(&mut header).map_err(io)?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [tag, rows, cols, spec, hash] = fields[..] else {
        return Err(Error::parse(path, 1, "expected `gram <rows> <cols> <spec> <hash>`"));
    };
    let dims = rows.parse::<usize>().ok().zip(cols.parse::<usize>().ok());
    let (Some((rows, cols)), "gram") = (dims, tag) else {
        return Err(Error::parse(path, 1, "expected `gram <rows> <cols> <spec> <hash>`"));
    };
    let mut bytes = Vec::with_capacity(rows * cols * 8);
    rdr.read_to_end(&mut bytes).map_err(io)?;
    if bytes.len() != rows * cols * 8 {
        return Err(Error::parse(
            path,
            2,
            format!("payload has {} bytes, expected {}", bytes.len(), rows * cols * 8),
        ));
    }
    let flat: Vec<T> = bytes
        .chunks_exact(8)
        .map(|c| T::of(f64::from_le_bytes(c.try_into().expect("8-byte chunk"))))
        .collect();
    let values = Array2::from_shape_vec((rows, cols), flat).map_err(|e| Error::Dimension(e.to_string()))?;
    Ok((GramMatrix::new(values)?, spec.to_string(), hash.to_string()))
}

/// Directory of cached Gram matrices keyed by (table hash, kernel spec).
#[derive(Clone, Debug)]
pub struct GramCache {
    dir: PathBuf,
}

impl GramCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self { dir })
    }

    pub fn path_for<T: Scalar>(&self, spec: &KernelSpec<T>, table_hash: &str) -> PathBuf {
        let key: String = Sha256::digest(format!("{table_hash}\0{spec}").as_bytes())
            .iter()
            .take(16)
            .map(|b| format!("{b:02x}"))
            .collect();
        self.dir.join(format!("{key}.gram"))
    }

    pub fn get_or_compute<T: Scalar>(
        &self,
        spec: &KernelSpec<T>,
        table_hash: &str,
        compute: impl FnOnce() -> Result<GramMatrix<T>>,
    ) -> Result<GramMatrix<T>> {
        let path = self.path_for(spec, table_hash);
        let spec_str = spec.to_string();
        if path.exists() {
            match read_gram::<T>(&path) {
                Ok((g, s, h)) if s == spec_str && h == table_hash => return Ok(g),
                Ok(_) => log::warn!("{}: cache key collision, recomputing", path.display()),
                Err(e) => log::warn!("ignoring unreadable cache entry: {e}"),
            }
        }
        let gram = compute()?;
        let tmp = path.with_extension("gram.tmp");
        write_gram(&tmp, &gram, &spec_str, table_hash)?;
        std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        Ok(gram)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use std::cell::Cell;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = GramMatrix::new(array![[1.0, 0.1 + 0.2], [1.0 / 3.0, 1e-300]]).unwrap();
        let p = dir.path().join("a.gram");
        write_gram(&p, &g, "v0:rbf:0.1", "abc").unwrap();
        let (back, spec, hash) = read_gram::<f64>(&p).unwrap();
        assert_eq!(back, g);
        assert_eq!((spec.as_str(), hash.as_str()), ("v0:rbf:0.1", "abc"));
        let raw = std::fs::read(&p).unwrap();
        assert!(raw.starts_with(b"gram 2 2 v0:rbf:0.1 abc\n"));
        assert_eq!(raw.len(), "gram 2 2 v0:rbf:0.1 abc\n".len() + 32);
    }

    #[test]
    fn cache_serves_second_request() {
        let dir = tempfile::tempdir().unwrap();
        let cache = GramCache::new(dir.path()).unwrap();
        let spec = KernelSpec::<f64>::linear(0);
        let calls = Cell::new(0);
        let make = || {
            calls.set(calls.get() + 1);
            GramMatrix::new(array![[2.0]])
        };
        let a = cache.get_or_compute(&spec, "h1", make).unwrap();
        let b = cache.get_or_compute(&spec, "h1", make).unwrap();
        assert_eq!(a, b);
        assert_eq!(calls.get(), 1);
        cache.get_or_compute(&spec, "h2", make).unwrap();
        assert_eq!(calls.get(), 2);
    }

    #[test]
    fn truncated_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.gram");
        std::fs::write(&p, b"gram 2 2 v0:linear h\n\0\0\0").unwrap();
        assert!(read_gram::<f64>(&p).is_err());
    }
}
