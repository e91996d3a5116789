use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::failure::{Failure, Failures};

/// Writes through a temporary file in the target directory, then renames,
/// so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| Failure::input(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

pub fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))
}

/// Either writes to `path` or prints to stdout.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::compute(format!("stdout: {e}")))
        }
    }
}

/// Maps `f` over `items` on `jobs` threads (all cores when `None`),
/// keeping input order. Fails with every item error if any item fails.
pub fn par_map<T, U, F>(jobs: Option<usize>, items: &[T], f: F) -> Result<Vec<U>, Failures>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> Result<U, Failure> + Sync + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Failure::compute(format!("thread pool: {e}")))?;
    let results: Vec<Result<U, Failure>> = pool.install(|| items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect());
    let mut ok = Vec::with_capacity(results.len());
    let mut errs = Vec::new();
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => errs.push(e),
        }
    }
    if errs.is_empty() {
        Ok(ok)
    } else {
        Err(Failures(errs))
    }
}

/// File stem used to name outputs derived from `path`.
pub fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "sample".into(), |s| s.to_string_lossy().into_owned())
}

/// Output paths `dir/<stem><suffix>` for each input; duplicate stems are
/// rejected rather than silently overwritten.
pub fn derived_paths(dir: &Path, inputs: &[PathBuf], suffix: &str) -> Result<Vec<PathBuf>, Failure> {
    let mut seen = std::collections::BTreeMap::new();
    let mut out = Vec::with_capacity(inputs.len());
    for p in inputs {
        let s = stem(p);
        if let Some(prev) = seen.insert(s.clone(), p.clone()) {
            return Err(Failure::input(format!(
                "{} and {} would both write {s}{suffix}",
                prev.display(),
                p.display()
            )));
        }
        out.push(dir.join(format!("{s}{suffix}")));
    }
    Ok(out)
}
