use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::Context;
use serde::Serialize;

use crate::args::Format;

pub struct Output {
    pub format: Format,
    pub path: Option<PathBuf>,
}

impl Output {
    fn writer(&self) -> anyhow::Result<Box<dyn Write>> {
        Ok(match &self.path {
            Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
            None => Box::new(io::stdout().lock()),
        })
    }

    pub fn json<T: Serialize>(&self, value: &T) -> anyhow::Result<()> {
        let mut w = self.writer()?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    /// Writes a header and serialized rows.
    pub fn csv_rows<R: Serialize>(&self, header: &[&str], rows: impl IntoIterator<Item = R>) -> anyhow::Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(self.writer()?);
        w.write_record(header)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn with_writer(&self, f: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>) -> anyhow::Result<()> {
        let mut w = self.writer()?;
        f(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// JSON, or CSV through `csv`.
    pub fn emit<T: Serialize>(&self, value: &T, csv: impl FnOnce(&Output) -> anyhow::Result<()>) -> anyhow::Result<()> {
        match self.format {
            Format::Json => self.json(value),
            Format::Csv => csv(self),
        }
    }
}
