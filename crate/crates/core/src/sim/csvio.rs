use std::io::{Read, Write};

use chrono::{NaiveDate, NaiveDateTime};

use crate::pms::PmsState;
use crate::profiles::TIMESTAMP_FORMAT;

use super::{DailySoc, SimError, SimulationReport, StateCount, StepRecord};

const LEAD: [&str; 5] = ["timestamp", "state", "p_load_kw", "p_pv_kw", "p_curt_kw"];
const TAIL: [&str; 5] = ["p_bess_kw", "soc", "fuel_l", "shed_kw", "spill_kw"];

fn from_csv(e: csv::Error) -> SimError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => SimError::Io(io),
        other => SimError::Csv { line, reason: format!("{other:?}") },
    }
}

/// Step records with columns `timestamp, state, p_load_kw, p_pv_kw,
/// p_curt_kw, <unit>_kw…, p_bess_kw, soc, fuel_l, shed_kw, spill_kw`.
/// Floats use the shortest exact representation.
pub fn write_records_csv(records: &[StepRecord], unit_ids: &[String], out: impl Write) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = LEAD.iter().map(|s| s.to_string()).collect();
    header.extend(unit_ids.iter().map(|id| format!("{id}_kw")));
    header.extend(TAIL.iter().map(|s| s.to_string()));
    w.write_record(&header).map_err(from_csv)?;
    for r in records {
        if r.p_dg.len() != unit_ids.len() {
            return Err(SimError::InvalidArgument(format!("record has {} units, header {}", r.p_dg.len(), unit_ids.len())));
        }
        let mut row = vec![
            r.timestamp.format(TIMESTAMP_FORMAT).to_string(),
            r.state.to_string(),
            format!("{}", r.p_load),
            format!("{}", r.p_pv),
            format!("{}", r.p_curt),
        ];
        row.extend(r.p_dg.iter().map(|p| format!("{p}")));
        row.extend([r.p_bess, r.soc, r.fuel_l, r.shed, r.spill].iter().map(|v| format!("{v}")));
        w.write_record(&row).map_err(from_csv)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads [`write_records_csv`] output; returns the unit ids and records.
pub fn read_records_csv(input: impl Read) -> Result<(Vec<String>, Vec<StepRecord>), SimError> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers().map_err(from_csv)?.clone();
    let n = header.len();
    let names: Vec<&str> = header.iter().collect();
    let bad_header = || SimError::Csv { line: 1, reason: format!("unexpected header `{}`", names.join(",")) };
    if n < LEAD.len() + TAIL.len() || names[..LEAD.len()] != LEAD || names[n - TAIL.len()..] != TAIL {
        return Err(bad_header());
    }
    let mut ids = Vec::new();
    for name in &names[LEAD.len()..n - TAIL.len()] {
        ids.push(name.strip_suffix("_kw").ok_or_else(bad_header)?.to_string());
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(from_csv)?;
        let line = row.position().map_or(0, |p| p.line());
        let err = |what: &str| SimError::Csv { line, reason: format!("bad {what}") };
        let num = |i: usize| row[i].parse::<f64>().map_err(|_| err(names[i]));
        let timestamp = NaiveDateTime::parse_from_str(&row[0], TIMESTAMP_FORMAT).map_err(|_| err("timestamp"))?;
        let state = PmsState(row[1].parse().map_err(|_| err("state"))?);
        let p_dg = (LEAD.len()..n - TAIL.len()).map(num).collect::<Result<Vec<_>, _>>()?;
        let k = n - TAIL.len();
        records.push(StepRecord {
            timestamp,
            state,
            p_load: num(2)?,
            p_pv: num(3)?,
            p_curt: num(4)?,
            p_dg,
            p_bess: num(k)?,
            soc: num(k + 1)?,
            fuel_l: num(k + 2)?,
            shed: num(k + 3)?,
            spill: num(k + 4)?,
        });
    }
    Ok((ids, records))
}

/// `state,label,count` rows for every table state.
pub fn write_occupancy_csv(report: &SimulationReport, out: impl Write) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["state", "label", "count"]).map_err(from_csv)?;
    for c in &report.state_occupancy {
        w.write_record([c.state.to_string(), c.label.clone(), c.count.to_string()]).map_err(from_csv)?;
    }
    w.flush()?;
    Ok(())
}

fn check_header(reader: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<(), SimError> {
    let header = reader.headers().map_err(from_csv)?;
    if header.iter().ne(expected.iter().copied()) {
        let got: Vec<&str> = header.iter().collect();
        return Err(SimError::Csv { line: 1, reason: format!("expected header `{}`, got `{}`", expected.join(","), got.join(",")) });
    }
    Ok(())
}

/// Reads the format of [`write_occupancy_csv`].
pub fn read_occupancy_csv(input: impl Read) -> Result<Vec<StateCount>, SimError> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(&mut reader, &["state", "label", "count"])?;
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(from_csv)?;
        let line = row.position().map_or(0, |p| p.line());
        let err = |i: usize| SimError::Csv { line, reason: format!("bad value `{}`", &row[i]) };
        let state = PmsState(row[0].parse().map_err(|_| err(0))?);
        let count = row[2].parse().map_err(|_| err(2))?;
        out.push(StateCount { state, label: row[1].to_string(), count });
    }
    Ok(out)
}

/// `date,soc_min,soc_mean,soc_max` rows.
pub fn write_daily_soc_csv(days: &[DailySoc], out: impl Write) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", "soc_min", "soc_mean", "soc_max"]).map_err(from_csv)?;
    for d in days {
        w.write_record([d.date.format("%Y-%m-%d").to_string(), format!("{}", d.min), format!("{}", d.mean), format!("{}", d.max)])
            .map_err(from_csv)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the format of [`write_daily_soc_csv`].
pub fn read_daily_soc_csv(input: impl Read) -> Result<Vec<DailySoc>, SimError> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(&mut reader, &["date", "soc_min", "soc_mean", "soc_max"])?;
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(from_csv)?;
        let line = row.position().map_or(0, |p| p.line());
        let num = |i: usize| row[i].parse::<f64>().map_err(|_| SimError::Csv { line, reason: format!("bad value `{}`", &row[i]) });
        let date = NaiveDate::parse_from_str(&row[0], "%Y-%m-%d").map_err(|_| SimError::Csv { line, reason: format!("bad date `{}`", &row[0]) })?;
        out.push(DailySoc { date, min: num(1)?, mean: num(2)?, max: num(3)? });
    }
    Ok(out)
}
