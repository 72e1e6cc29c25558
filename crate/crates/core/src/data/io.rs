use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::record::{Arm, DispositionEvidence, DispositionReason, EventTime, SubjectRecord};
use super::schema::{CovariateKind, CovariateSchema, CovariateValue};
use super::{DataError, TrialDataset};

/// Reads a comma-delimited trial file laid out according to `schema`.
pub fn load_dataset(path: impl AsRef<Path>, schema: &CovariateSchema) -> Result<TrialDataset, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
    read_dataset(file, schema)
}

pub fn read_dataset<R: Read>(reader: R, schema: &CovariateSchema) -> Result<TrialDataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let expected = schema.column_names();
    let found: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if found != expected {
        return Err(DataError::Header { expected, found });
    }

    let mut subjects = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        subjects.push(parse_row(&row, row_no, schema, &expected)?);
    }
    TrialDataset::new(schema.clone(), subjects)
}

fn parse_row(
    row: &csv::StringRecord,
    row_no: usize,
    schema: &CovariateSchema,
    columns: &[String],
) -> Result<SubjectRecord, DataError> {
    let malformed = |col: usize, message: String| DataError::Malformed {
        row: row_no,
        column: columns[col].clone(),
        message,
    };
    let cell = |col: usize| row.get(col).unwrap_or("");

    let number = |col: usize| -> Result<Option<f64>, DataError> {
        let text = cell(col);
        if text.is_empty() {
            return Ok(None);
        }
        let v: f64 = text.parse().map_err(|_| malformed(col, format!("`{text}` is not a number")))?;
        if !v.is_finite() {
            return Err(malformed(col, format!("`{text}` is not finite")));
        }
        Ok(Some(v))
    };
    let flag = |col: usize| -> Result<bool, DataError> {
        match cell(col).to_ascii_lowercase().as_str() {
            "" | "0" | "false" => Ok(false),
            "1" | "true" => Ok(true),
            other => Err(malformed(col, format!("`{other}` is not a boolean flag"))),
        }
    };
    let event_time = |col: usize| -> Result<EventTime, DataError> {
        if cell(col).eq_ignore_ascii_case("none") {
            return Ok(EventTime::Never);
        }
        Ok(EventTime::from_option(number(col)?))
    };

    let mut col = 0;
    let id = cell(col).to_string();
    if id.is_empty() {
        return Err(malformed(col, "empty id".into()));
    }
    col += 1;
    let arm = match cell(col) {
        "0" => Arm::Reference,
        "1" => Arm::Experimental,
        other => return Err(malformed(col, format!("treatment must be 0 or 1, got `{other}`"))),
    };
    col += 1;

    let mut x = Vec::with_capacity(schema.covariates().len());
    for cov in schema.covariates() {
        let value = match &cov.kind {
            CovariateKind::Continuous => match number(col)? {
                Some(v) => CovariateValue::Continuous(v),
                None => return Err(malformed(col, "baseline covariate is missing".into())),
            },
            CovariateKind::Categorical { levels } => {
                let text = cell(col);
                match levels.iter().position(|l| l == text) {
                    Some(level) => CovariateValue::Level(level),
                    None => {
                        return Err(DataError::UnknownLevel {
                            row: row_no,
                            column: cov.name.clone(),
                            value: text.to_string(),
                        })
                    }
                }
            }
        };
        x.push(value);
        col += 1;
    }

    let mut z = Vec::with_capacity(schema.visits().len());
    for _ in schema.visits() {
        z.push(number(col)?);
        col += 1;
    }
    let y = number(col)?;
    let d_ae = event_time(col + 1)?;
    let d_loe = event_time(col + 2)?;
    let d_admin = event_time(col + 3)?;
    col += 4;
    let recorded_reason: DispositionReason = cell(col).parse().map_err(|e: String| malformed(col, e))?;
    let ae_flag = flag(col + 1)?;
    let efficacy_no_improvement_flag = flag(col + 2)?;

    Ok(SubjectRecord {
        id,
        arm,
        x,
        z,
        y,
        d_ae,
        d_loe,
        d_admin,
        evidence: DispositionEvidence { recorded_reason, ae_flag, efficacy_no_improvement_flag },
    })
}

pub fn write_dataset(ds: &TrialDataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
    write_dataset_to(ds, file)
}

/// Writes `ds` in the layout read by [`read_dataset`]. Floats use the
/// shortest representation that parses back to the same value.
pub fn write_dataset_to<W: Write>(ds: &TrialDataset, writer: W) -> Result<(), DataError> {
    let schema = ds.schema();
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(schema.column_names())?;
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    let time = |t: EventTime| t.finite().map(|v| v.to_string()).unwrap_or_else(|| "none".to_string());
    let flag = |b: bool| if b { "1" } else { "0" }.to_string();
    for s in ds.subjects() {
        let mut rec = vec![s.id.clone(), s.arm.index().to_string()];
        for (cov, v) in schema.covariates().iter().zip(&s.x) {
            rec.push(match (&cov.kind, v) {
                (CovariateKind::Categorical { levels }, CovariateValue::Level(l)) => levels[*l].clone(),
                (_, CovariateValue::Continuous(v)) => v.to_string(),
                (_, CovariateValue::Level(l)) => l.to_string(),
            });
        }
        rec.extend(s.z.iter().map(|z| opt(*z)));
        rec.push(opt(s.y));
        rec.push(time(s.d_ae));
        rec.push(time(s.d_loe));
        rec.push(time(s.d_admin));
        rec.push(s.evidence.recorded_reason.to_string());
        rec.push(flag(s.evidence.ae_flag));
        rec.push(flag(s.evidence.efficacy_no_improvement_flag));
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|source| DataError::Io { path: "<writer>".into(), source })?;
    Ok(())
}
