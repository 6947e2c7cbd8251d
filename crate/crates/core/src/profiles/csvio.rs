use std::io::{Read, Write};

use chrono::{Duration, NaiveDateTime};

use super::{ProfileError, TimeSeries, Unit};

/// Timestamp layout used for every CSV this crate writes.
pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

/// Longest run of missing samples that is filled by linear interpolation.
const MAX_GAP_MINUTES: i64 = 120;

fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    let s = raw.trim().trim_end_matches('Z');
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

fn csv_error(line: u64, reason: impl Into<String>) -> ProfileError {
    ProfileError::Csv { line, reason: reason.into() }
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn from_csv(e: csv::Error) -> ProfileError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => ProfileError::Io(io),
        kind => csv_error(line, format!("{kind:?}")),
    }
}

fn check_header(reader: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<(), ProfileError> {
    let header = reader.headers().map_err(from_csv)?;
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != expected {
        return Err(csv_error(1, format!("expected header `{}`, got `{}`", expected.join(","), got.join(","))));
    }
    Ok(())
}

/// Reads a `timestamp,ghi_wm2` record into a uniform W/m² series.
///
/// The step is the spacing of the first two rows. Later rows must stay on
/// that grid in increasing order. A run of missing samples (skipped
/// timestamps or empty values) is filled by linear interpolation when it
/// spans at most two hours; longer runs, or gaps at either end, are errors.
pub fn read_irradiance_csv(input: impl Read) -> Result<TimeSeries, ProfileError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    check_header(&mut reader, &["timestamp", "ghi_wm2"])?;
    let mut rows: Vec<(u64, NaiveDateTime, Option<f64>)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(from_csv)?;
        let line = line_of(&record);
        let t = parse_timestamp(&record[0]).ok_or_else(|| csv_error(line, format!("bad timestamp `{}`", &record[0])))?;
        let value = match record[1].trim() {
            "" => None,
            raw => {
                let v: f64 = raw.parse().map_err(|_| csv_error(line, format!("bad irradiance `{raw}`")))?;
                if !v.is_finite() {
                    return Err(csv_error(line, "irradiance is not finite"));
                }
                if v < 0.0 {
                    return Err(csv_error(line, format!("negative irradiance {v}")));
                }
                Some(v)
            }
        };
        rows.push((line, t, value));
    }
    if rows.len() < 2 {
        return Err(csv_error(1, "need at least two rows to infer the step"));
    }
    let start = rows[0].1;
    let step = rows[1].1 - start;
    let step_minutes = step.num_minutes();
    if step_minutes <= 0 || step != Duration::minutes(step_minutes) {
        return Err(csv_error(rows[1].0, "step must be a positive whole number of minutes"));
    }

    let mut slots: Vec<Option<f64>> = Vec::new();
    let mut prev = start - step;
    for &(line, t, value) in &rows {
        if t <= prev {
            return Err(csv_error(line, "timestamps must be strictly increasing"));
        }
        let offset = (t - start).num_minutes();
        if t - start != Duration::minutes(offset) || offset % step_minutes != 0 {
            return Err(csv_error(line, format!("timestamp is off the {step_minutes}-minute grid")));
        }
        let index = (offset / step_minutes) as usize;
        slots.resize(index, None);
        slots.push(value);
        prev = t;
    }

    let mut values = vec![0.0; slots.len()];
    let mut last_known: Option<usize> = None;
    for i in 0..slots.len() {
        let Some(v) = slots[i] else { continue };
        if let Some(k) = last_known {
            let missing = i - k - 1;
            if missing as i64 * step_minutes > MAX_GAP_MINUTES {
                let from = start + step * (k as i32 + 1);
                return Err(ProfileError::InvalidData {
                    index: k + 1,
                    reason: format!("gap of {} min starting {} exceeds {MAX_GAP_MINUTES} min", missing as i64 * step_minutes, from.format(TIMESTAMP_FORMAT)),
                });
            }
            for (g, slot) in values.iter_mut().enumerate().take(i).skip(k + 1) {
                let w = (g - k) as f64 / (i - k) as f64;
                let a = values_at(&slots, k);
                *slot = a + (v - a) * w;
            }
        } else if i > 0 {
            return Err(ProfileError::InvalidData { index: 0, reason: "series starts with a missing value".into() });
        }
        values[i] = v;
        last_known = Some(i);
    }
    if last_known != Some(slots.len() - 1) {
        return Err(ProfileError::InvalidData { index: slots.len() - 1, reason: "series ends with a missing value".into() });
    }
    TimeSeries::new(start, step_minutes as u32, Unit::WattPerSquareMetre, values)
}

fn values_at(slots: &[Option<f64>], i: usize) -> f64 {
    slots[i].expect("interpolation anchor is a known sample")
}

/// Writes `timestamp,value,unit` rows. Floats use the shortest exact
/// representation, so reading the file back yields identical values.
pub fn write_series_csv(series: &TimeSeries, out: impl Write) -> Result<(), ProfileError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["timestamp", "value", "unit"]).map_err(from_csv)?;
    for (i, v) in series.values().iter().enumerate() {
        w.write_record([series.timestamp(i).format(TIMESTAMP_FORMAT).to_string(), format!("{v}"), series.unit().tag().to_string()])
            .map_err(from_csv)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the format produced by [`write_series_csv`]. Rows must be gap-free.
pub fn read_series_csv(input: impl Read) -> Result<TimeSeries, ProfileError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    check_header(&mut reader, &["timestamp", "value", "unit"])?;
    let mut start = None;
    let mut step: Option<Duration> = None;
    let mut prev: Option<NaiveDateTime> = None;
    let mut unit = None;
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(from_csv)?;
        let line = line_of(&record);
        let t = parse_timestamp(&record[0]).ok_or_else(|| csv_error(line, format!("bad timestamp `{}`", &record[0])))?;
        let v: f64 = record[1].parse().map_err(|_| csv_error(line, format!("bad value `{}`", &record[1])))?;
        let u = Unit::from_tag(&record[2]).ok_or_else(|| csv_error(line, format!("unknown unit `{}`", &record[2])))?;
        if *unit.get_or_insert(u) != u {
            return Err(csv_error(line, "unit changes within the file"));
        }
        match (prev, step) {
            (None, _) => start = Some(t),
            (Some(p), None) => step = Some(t - p),
            (Some(p), Some(s)) if t - p != s => return Err(csv_error(line, "rows are not uniformly spaced")),
            _ => {}
        }
        prev = Some(t);
        values.push(v);
    }
    let start = start.ok_or_else(|| csv_error(1, "no data rows"))?;
    let step_minutes = match step {
        None => return Err(csv_error(2, "need at least two rows to infer the step")),
        Some(s) if s.num_minutes() > 0 && s == Duration::minutes(s.num_minutes()) => s.num_minutes() as u32,
        Some(_) => return Err(csv_error(2, "step must be a positive whole number of minutes")),
    };
    TimeSeries::new(start, step_minutes, unit.unwrap_or(Unit::Dimensionless), values)
}
