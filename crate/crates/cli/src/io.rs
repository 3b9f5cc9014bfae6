use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use defect_sr::search::Candidate;
use serde::Serialize;

use crate::Invalid;

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never observe a partial file.
pub fn write_atomic<F>(path: &Path, fill: F) -> anyhow::Result<()>
where
    F: FnOnce(&mut dyn Write) -> anyhow::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

pub fn write_ndjson<T: Serialize>(path: &Path, records: &[T]) -> anyhow::Result<()> {
    write_atomic(path, |w| {
        for r in records {
            serde_json::to_writer(&mut *w, r)?;
            writeln!(w)?;
        }
        Ok(())
    })
}

pub fn format_consts(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(";")
}

pub fn parse_consts(text: &str) -> anyhow::Result<Vec<f64>> {
    text.split([';', ','])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Invalid(format!("bad constant `{s}`")).into())
        })
        .collect()
}

pub const FRONT_HEADER: [&str; 5] = ["expression", "const_values", "mae", "mse", "complexity"];

/// Formula table with columns expression, const_values, mae, mse, complexity.
pub fn write_candidates(path: &Path, rows: &[Candidate]) -> anyhow::Result<()> {
    write_atomic(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(FRONT_HEADER)?;
        for c in rows {
            out.write_record([
                c.expression(),
                format_consts(&c.const_values),
                format!("{:?}", c.mae),
                format!("{:?}", c.mse),
                c.complexity.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    })
}

pub struct FrontRow {
    pub expression: String,
    pub const_values: Vec<f64>,
    pub mae: f64,
}

pub fn read_front(path: &Path) -> anyhow::Result<Vec<FrontRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Invalid(format!("{}: {e}", path.display())))?;
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != FRONT_HEADER {
        return Err(Invalid(format!("{}: unexpected front header", path.display())).into());
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Invalid(format!("{}: {e}", path.display())))?;
        rows.push(FrontRow {
            expression: rec[0].to_string(),
            const_values: parse_consts(&rec[1])?,
            mae: rec[2]
                .parse()
                .map_err(|_| Invalid(format!("{}: bad mae `{}`", path.display(), &rec[2])))?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consts_round_trip() {
        let v = vec![4.895, -0.1, 1e-300, 3.0];
        assert_eq!(parse_consts(&format_consts(&v)).unwrap(), v);
        assert!(parse_consts("").unwrap().is_empty());
        assert!(parse_consts("1;x").is_err());
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.txt");
        write_atomic(&p, |w| Ok(write!(w, "one")?)).unwrap();
        write_atomic(&p, |w| Ok(write!(w, "two")?)).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        let failed = write_atomic(&p, |_| anyhow::bail!("boom"));
        assert!(failed.is_err());
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
