//! File access with the path attached to every error.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use seriation::duplication::{AssignmentMatrix, DuplicationCounts};
use seriation::{io, Permutation, SeriationError, Similarity};

/// A core error, optionally tied to the file it came from.
#[derive(Debug)]
pub struct CliError {
    pub path: Option<PathBuf>,
    pub error: SeriationError,
}

impl CliError {
    pub fn at(path: &Path, error: SeriationError) -> Self {
        Self { path: Some(path.to_path_buf()), error }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        SeriationError::InvalidArgument(message.into()).into()
    }

    /// 1 for i/o, 2 for malformed input, 3 for a disconnected matrix, 4 otherwise.
    pub fn exit_code(&self) -> i32 {
        fn code(e: &SeriationError) -> i32 {
            match e {
                SeriationError::Io(_) => 1,
                SeriationError::Parse { .. } => 2,
                SeriationError::Disconnected { .. } => 3,
                SeriationError::Round { source, .. } => code(source),
                _ => 4,
            }
        }
        code(&self.error)
    }
}

impl From<SeriationError> for CliError {
    fn from(error: SeriationError) -> Self {
        Self { path: None, error }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.path {
            Some(p) => write!(f, "{}: {}", p.display(), self.error),
            None => write!(f, "{}", self.error),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::at(path, e.into()))
}

/// Creates `path` and hands a buffered writer to `f`.
pub fn write_with<F>(path: &Path, f: F) -> CliResult<()>
where
    F: FnOnce(&mut BufWriter<File>) -> seriation::Result<()>,
{
    let run = || -> seriation::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        f(&mut w)?;
        w.flush()?;
        Ok(())
    };
    run().map_err(|e| CliError::at(path, e))
}

pub fn read_similarity(path: &Path) -> CliResult<Similarity> {
    io::read_similarity(open(path)?).map_err(|e| CliError::at(path, e))
}

pub fn read_permutation(path: &Path) -> CliResult<Permutation> {
    io::read_permutation(open(path)?).map_err(|e| CliError::at(path, e))
}

pub fn read_counts(path: &Path) -> CliResult<DuplicationCounts> {
    io::read_counts(open(path)?).map_err(|e| CliError::at(path, e))
}

pub fn read_assignment(path: &Path) -> CliResult<AssignmentMatrix> {
    io::read_assignment(open(path)?).map_err(|e| CliError::at(path, e))
}

pub fn write_similarity(path: &Path, a: &Similarity) -> CliResult<()> {
    write_with(path, |w| io::write_similarity(w, a))
}

pub fn write_permutation(path: &Path, p: &Permutation) -> CliResult<()> {
    write_with(path, |w| io::write_permutation(w, p))
}

pub fn write_counts(path: &Path, c: &DuplicationCounts) -> CliResult<()> {
    write_with(path, |w| io::write_counts(w, c))
}

pub fn write_assignment(path: &Path, z: &AssignmentMatrix) -> CliResult<()> {
    write_with(path, |w| io::write_assignment(w, z))
}

/// Maps a csv error to a parse error carrying its 1-based line.
pub fn csv_error(e: csv::Error) -> SeriationError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    let message = e.to_string();
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e.into(),
        _ => SeriationError::Parse { line, message },
    }
}

/// Writes serializable records with a header row.
pub fn write_csv<R: serde::Serialize>(path: &Path, rows: &[R]) -> CliResult<()> {
    write_with(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        for r in rows {
            out.serialize(r).map_err(csv_error)?;
        }
        out.flush()?;
        Ok(())
    })
}

pub fn read_csv<R: serde::de::DeserializeOwned>(path: &Path) -> CliResult<Vec<R>> {
    let mut rd = csv::Reader::from_reader(open(path)?);
    rd.deserialize().collect::<Result<Vec<R>, _>>().map_err(|e| CliError::at(path, csv_error(e)))
}

/// `base` with `suffix` appended to its file name.
pub fn sidecar(base: &Path, suffix: &str) -> PathBuf {
    let mut s = base.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}
