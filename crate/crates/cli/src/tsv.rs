use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rivw_core::Error;

/// Tab-separated output with `#` preamble lines and a header row.
pub struct Tsv {
    path: PathBuf,
    w: BufWriter<File>,
}

impl Tsv {
    pub fn create(path: &Path, preamble: &[String], header: &[&str]) -> anyhow::Result<Self> {
        let file = File::create(path).map_err(|e| io(path, e))?;
        let mut t = Tsv {
            path: path.to_path_buf(),
            w: BufWriter::new(file),
        };
        for line in preamble {
            writeln!(t.w, "# {line}").map_err(|e| io(path, e))?;
        }
        t.row(header)?;
        Ok(t)
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) -> anyhow::Result<()> {
        let line: Vec<&str> = fields.iter().map(AsRef::as_ref).collect();
        writeln!(self.w, "{}", line.join("\t")).map_err(|e| io(&self.path, e))?;
        Ok(())
    }

    pub fn finish(mut self) -> anyhow::Result<()> {
        self.w.flush().map_err(|e| io(&self.path, e))?;
        Ok(())
    }
}

fn io(path: &Path, e: std::io::Error) -> anyhow::Error {
    Error::io(path, e).into()
}

pub fn num(x: f64) -> String {
    if x.is_nan() {
        "NA".to_string()
    } else {
        x.to_string()
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), num)
}
