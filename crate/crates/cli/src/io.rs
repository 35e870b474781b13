use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use gslope::nalgebra::DMatrix;
use serde::Serialize;

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))
}

fn parse_field<T: std::str::FromStr>(path: &Path, row: usize, col: usize, field: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    field.parse().map_err(|e| {
        anyhow::anyhow!(
            "{}: row {}, column {}: {:?}: {e}",
            path.display(),
            row + 1,
            col + 1,
            field
        )
    })
}

/// Numeric table with a header row; rows are observations.
pub fn read_matrix(path: &Path) -> Result<(Vec<String>, DMatrix<f64>)> {
    let mut rdr = reader(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let mut values = Vec::new();
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: malformed row {}", path.display(), i + 1))?;
        if rec.len() != header.len() {
            bail!(
                "{}: row {} has {} fields, expected {}",
                path.display(),
                i + 1,
                rec.len(),
                header.len()
            );
        }
        for (j, field) in rec.iter().enumerate() {
            values.push(parse_field::<f64>(path, i, j, field)?);
        }
        rows += 1;
    }
    if rows == 0 {
        bail!("{}: no data rows", path.display());
    }
    Ok((
        header,
        DMatrix::from_row_slice(rows, values.len() / rows, &values),
    ))
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let (_, m) = read_matrix(path)?;
    if m.ncols() != 1 {
        bail!(
            "{}: expected a single column, found {}",
            path.display(),
            m.ncols()
        );
    }
    Ok(m.column(0).iter().copied().collect())
}

/// Two-column table of integer keys and values, in file order.
pub fn read_pairs<K, V>(path: &Path) -> Result<Vec<(K, V)>>
where
    K: std::str::FromStr,
    K::Err: std::fmt::Display,
    V: std::str::FromStr,
    V::Err: std::fmt::Display,
{
    let mut rdr = reader(path)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: malformed row {}", path.display(), i + 1))?;
        if rec.len() != 2 {
            bail!(
                "{}: row {} must have exactly two fields",
                path.display(),
                i + 1
            );
        }
        out.push((
            parse_field(path, i, 0, &rec[0])?,
            parse_field(path, i, 1, &rec[1])?,
        ));
    }
    Ok(out)
}

/// Genotype table: header of SNP identifiers, one row per individual.
pub fn read_genotypes(path: &Path) -> Result<(Vec<String>, Vec<Vec<u8>>)> {
    let mut rdr = reader(path)?;
    let ids: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: malformed row {}", path.display(), i + 1))?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, f)| parse_field::<u8>(path, i, j, f))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((ids, rows))
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(io::BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

/// Pretty JSON with object keys in sorted order.
pub fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    // serde_json's Value map is ordered by key
    let value = serde_json::to_value(value)?;
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, &value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn write_csv<T: Serialize>(rows: &[T], out: Option<&Path>) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink(out)?);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
