//! CSV artifacts: a `#` provenance line, a header row, then records.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `# avglab <version> seed=<seed> config=<hash>`.
pub fn header_line(seed: u64, hash: &str) -> String {
    format!("# avglab {VERSION} seed={seed} config={hash}")
}

pub struct CsvSink {
    inner: csv::Writer<Box<dyn Write>>,
}

impl CsvSink {
    /// Opens `path`, or stdout when `None`, and writes the provenance line.
    pub fn open(path: Option<&Path>, seed: u64, hash: &str) -> io::Result<Self> {
        let mut w: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout())),
        };
        writeln!(w, "{}", header_line(seed, hash))?;
        Ok(CsvSink { inner: csv::Writer::from_writer(w) })
    }

    pub fn header(&mut self, cols: &[&str]) -> io::Result<()> {
        self.inner.write_record(cols).map_err(io::Error::other)
    }

    pub fn row<I, S>(&mut self, fields: I) -> io::Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner.write_record(fields).map_err(io::Error::other)
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> io::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    std::fs::write(path, text + "\n")
}

/// Shortest round-trip form of a float.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}
