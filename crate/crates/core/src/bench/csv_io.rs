use std::path::Path;

use crate::data::{Dataset, Example};
use crate::error::{Error, Result};

/// Column names and missing-value policy for [`load_csv`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvSchema {
    pub sensitive_column: String,
    pub label_column: String,
    /// Skip rows with an empty cell instead of failing.
    pub drop_missing: bool,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            sensitive_column: "sensitive".into(),
            label_column: "label".into(),
            drop_missing: false,
        }
    }
}

/// Header order of a table, so a dataset can be written back in its
/// original layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvLayout {
    pub header: Vec<String>,
    pub sensitive_index: usize,
    pub label_index: usize,
}

impl CsvLayout {
    /// `x0, …, x{d−1}, sensitive, label`.
    pub fn standard(dimension: usize) -> Self {
        let mut header: Vec<String> = (0..dimension).map(|j| format!("x{j}")).collect();
        header.push("sensitive".into());
        header.push("label".into());
        CsvLayout {
            header,
            sensitive_index: dimension,
            label_index: dimension + 1,
        }
    }

    pub fn dimension(&self) -> usize {
        self.header.len() - 2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCsv {
    pub data: Dataset,
    pub layout: CsvLayout,
    /// Rows skipped for missing cells.
    pub dropped_rows: usize,
}

fn schema_error(row: Option<usize>, message: impl Into<String>) -> Error {
    Error::Schema {
        row,
        message: message.into(),
    }
}

fn layout_from_header(header: &csv::StringRecord, schema: &CsvSchema) -> Result<CsvLayout> {
    let names: Vec<String> = header.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| -> Result<usize> {
        let hits: Vec<usize> = names
            .iter()
            .enumerate()
            .filter(|(_, n)| *n == name)
            .map(|(i, _)| i)
            .collect();
        match hits.as_slice() {
            [i] => Ok(*i),
            [] => Err(schema_error(Some(1), format!("missing `{name}` column"))),
            _ => Err(schema_error(Some(1), format!("duplicate `{name}` column"))),
        }
    };
    let sensitive_index = find(&schema.sensitive_column)?;
    let label_index = find(&schema.label_column)?;
    if names.len() < 3 {
        return Err(schema_error(Some(1), "no feature columns"));
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
        return Err(schema_error(Some(1), format!("duplicate column `{dup}`")));
    }
    Ok(CsvLayout {
        header: names,
        sensitive_index,
        label_index,
    })
}

fn parse_bit(cell: &str, row: usize, column: &str) -> Result<bool> {
    match cell.parse::<f64>() {
        Ok(0.0) => Ok(false),
        Ok(1.0) => Ok(true),
        Ok(v) => Err(schema_error(Some(row), format!("`{column}` must be 0 or 1, found {v}"))),
        Err(_) => Err(Error::Parse {
            row,
            column: column.into(),
            message: format!("`{cell}` is not a number"),
        }),
    }
}

/// Loads a headed, comma-separated table. Rows are numbered by file line,
/// the header being line 1.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<LoadedCsv> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

/// [`load_csv`] on any reader.
pub fn read_csv(reader: impl std::io::Read, schema: &CsvSchema) -> Result<LoadedCsv> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| schema_error(Some(1), e.to_string()))?.clone();
    let layout = layout_from_header(&header, schema)?;
    let mut examples = Vec::new();
    let mut dropped_rows = 0;
    let mut record = csv::StringRecord::new();
    let mut fallback_line = 1;
    loop {
        fallback_line += 1;
        let more = rdr.read_record(&mut record).map_err(|e| {
            let row = e.position().map_or(fallback_line, |p| p.line() as usize);
            schema_error(Some(row), e.to_string())
        })?;
        if !more {
            break;
        }
        let row = record.position().map_or(fallback_line, |p| p.line() as usize);
        if record.len() != layout.header.len() {
            return Err(schema_error(
                Some(row),
                format!("expected {} fields, found {}", layout.header.len(), record.len()),
            ));
        }
        let cells: Vec<&str> = record.iter().map(str::trim).collect();
        if let Some(j) = cells.iter().position(|c| c.is_empty()) {
            if schema.drop_missing {
                dropped_rows += 1;
                continue;
            }
            return Err(Error::Parse {
                row,
                column: layout.header[j].clone(),
                message: "missing value".into(),
            });
        }
        let mut features = Vec::with_capacity(layout.dimension());
        for (j, cell) in cells.iter().enumerate() {
            if j == layout.sensitive_index || j == layout.label_index {
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => features.push(v),
                _ => {
                    return Err(Error::Parse {
                        row,
                        column: layout.header[j].clone(),
                        message: format!("`{cell}` is not a finite number"),
                    })
                }
            }
        }
        let sensitive = parse_bit(
            cells[layout.sensitive_index],
            row,
            &layout.header[layout.sensitive_index],
        )?;
        let target = parse_bit(cells[layout.label_index], row, &layout.header[layout.label_index])?;
        examples.push(Example::new(features, sensitive, target));
    }
    let data = Dataset::new(layout.dimension(), examples)?;
    Ok(LoadedCsv {
        data,
        layout,
        dropped_rows,
    })
}

/// Writes `data` in `layout`'s column order. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_csv(path: &Path, data: &Dataset, layout: &CsvLayout) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(file, data, layout).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// [`write_csv`] on any writer.
pub fn write_csv_to(writer: impl std::io::Write, data: &Dataset, layout: &CsvLayout) -> Result<()> {
    if layout.dimension() != data.dimension() {
        return Err(Error::DimensionMismatch {
            expected: layout.dimension(),
            found: data.dimension(),
        });
    }
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io("<output>", source),
        other => schema_error(None, format!("{other:?}")),
    };
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(&layout.header).map_err(io)?;
    let mut fields = vec![String::new(); layout.header.len()];
    for e in data.examples() {
        let mut features = e.features.iter();
        for (j, field) in fields.iter_mut().enumerate() {
            *field = if j == layout.sensitive_index {
                u8::from(e.sensitive).to_string()
            } else if j == layout.label_index {
                u8::from(e.target).to_string()
            } else {
                format!("{:?}", features.next().copied().unwrap_or(f64::NAN))
            };
        }
        w.write_record(&fields).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}
