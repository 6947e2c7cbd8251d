use std::io::{Read, Write};

use chrono::{Duration, NaiveDateTime};

use crate::profiles::TIMESTAMP_FORMAT;

use super::{DispatchSchedule, SizingError};

const LEAD: [&str; 2] = ["timestamp", "hours"];
const TAIL: [&str; 5] = ["p_ch_kw", "p_dis_kw", "soc_start_kwh", "soc_end_kwh", "p_curt_kw"];

fn csv_err(line: u64, reason: impl Into<String>) -> SizingError {
    SizingError::InvalidArgument(format!("schedule CSV line {line}: {}", reason.into()))
}

fn from_csv(e: csv::Error) -> SizingError {
    let line = e.position().map_or(0, |p| p.line());
    csv_err(line, e.to_string())
}

/// Schedule rows with columns `timestamp, hours, <class>_kw, <class>_on …,
/// p_ch_kw, p_dis_kw, soc_start_kwh, soc_end_kwh, p_curt_kw`. The first row
/// is stamped `start`. Floats use the shortest exact representation.
pub fn write_schedule_csv(
    schedule: &DispatchSchedule,
    class_names: &[String],
    start: NaiveDateTime,
    out: impl Write,
) -> Result<(), SizingError> {
    if class_names.len() != schedule.p_dg.len() {
        return Err(SizingError::InvalidArgument(format!(
            "{} class names for {} diesel classes",
            class_names.len(),
            schedule.p_dg.len()
        )));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = LEAD.iter().map(|s| s.to_string()).collect();
    for name in class_names {
        header.push(format!("{name}_kw"));
        header.push(format!("{name}_on"));
    }
    header.extend(TAIL.iter().map(|s| s.to_string()));
    w.write_record(&header).map_err(from_csv)?;
    let step = Duration::milliseconds((schedule.step_hours * 3_600_000.0).round() as i64);
    for t in 0..schedule.len() {
        let mut row = vec![(start + step * t as i32).format(TIMESTAMP_FORMAT).to_string(), format!("{}", schedule.step_hours)];
        for s in 0..class_names.len() {
            row.push(format!("{}", schedule.p_dg[s][t]));
            row.push(schedule.on_count[s][t].to_string());
        }
        for v in [schedule.p_ch[t], schedule.p_dis[t], schedule.soc_kwh[t], schedule.soc_kwh[t + 1], schedule.p_curt[t]] {
            row.push(format!("{v}"));
        }
        w.write_record(&row).map_err(from_csv)?;
    }
    w.flush().map_err(|e| SizingError::InvalidArgument(e.to_string()))?;
    Ok(())
}

/// Reads the format of [`write_schedule_csv`]; returns the start timestamp,
/// the class names and the schedule.
pub fn read_schedule_csv(input: impl Read) -> Result<(NaiveDateTime, Vec<String>, DispatchSchedule), SizingError> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers().map_err(from_csv)?.clone();
    let names: Vec<&str> = header.iter().collect();
    let n = names.len();
    let bad_header = || csv_err(1, format!("unexpected header `{}`", names.join(",")));
    if n < LEAD.len() + TAIL.len() || names[..LEAD.len()] != LEAD || names[n - TAIL.len()..] != TAIL || (n - LEAD.len() - TAIL.len()) % 2 != 0 {
        return Err(bad_header());
    }
    let mut classes = Vec::new();
    for pair in names[LEAD.len()..n - TAIL.len()].chunks(2) {
        let name = pair[0].strip_suffix("_kw").ok_or_else(bad_header)?;
        if pair[1].strip_suffix("_on") != Some(name) {
            return Err(bad_header());
        }
        classes.push(name.to_string());
    }
    let k = classes.len();
    let mut start = None;
    let mut sch = DispatchSchedule {
        step_hours: 0.0,
        p_dg: vec![Vec::new(); k],
        on_count: vec![Vec::new(); k],
        p_ch: Vec::new(),
        p_dis: Vec::new(),
        soc_kwh: Vec::new(),
        p_curt: Vec::new(),
    };
    for row in reader.records() {
        let row = row.map_err(from_csv)?;
        let line = row.position().map_or(0, |p| p.line());
        let num = |i: usize| row[i].parse::<f64>().map_err(|_| csv_err(line, format!("bad {} `{}`", names[i], &row[i])));
        let t = NaiveDateTime::parse_from_str(&row[0], TIMESTAMP_FORMAT).map_err(|_| csv_err(line, format!("bad timestamp `{}`", &row[0])))?;
        start.get_or_insert(t);
        let hours = num(1)?;
        if sch.p_ch.is_empty() {
            sch.step_hours = hours;
        } else if hours != sch.step_hours {
            return Err(csv_err(line, "step length changes within the file"));
        }
        for s in 0..k {
            sch.p_dg[s].push(num(2 + 2 * s)?);
            let on = &row[3 + 2 * s];
            sch.on_count[s].push(on.parse().map_err(|_| csv_err(line, format!("bad {} `{on}`", names[3 + 2 * s])))?);
        }
        let base = n - TAIL.len();
        sch.p_ch.push(num(base)?);
        sch.p_dis.push(num(base + 1)?);
        let (soc_start, soc_end) = (num(base + 2)?, num(base + 3)?);
        match sch.soc_kwh.last() {
            None => sch.soc_kwh.push(soc_start),
            Some(&prev) if prev != soc_start => return Err(csv_err(line, "soc_start_kwh differs from the previous soc_end_kwh")),
            Some(_) => {}
        }
        sch.soc_kwh.push(soc_end);
        sch.p_curt.push(num(base + 4)?);
    }
    let start = start.ok_or_else(|| csv_err(1, "no data rows"))?;
    Ok((start, classes, sch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn schedule() -> DispatchSchedule {
        DispatchSchedule {
            step_hours: 0.5,
            p_dg: vec![vec![100.0, 0.1 + 0.2], vec![0.0, 250.0]],
            on_count: vec![vec![1, 1], vec![0, 2]],
            p_ch: vec![0.0, 12.5],
            p_dis: vec![3.0, 0.0],
            soc_kwh: vec![40.0, 1.0 / 3.0, 40.0],
            p_curt: vec![0.0, 7.25],
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let start = NaiveDate::from_ymd_opt(2021, 6, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let names = vec!["A".to_string(), "B".to_string()];
        let mut buf = Vec::new();
        write_schedule_csv(&schedule(), &names, start, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("timestamp,hours,A_kw,A_on,B_kw,B_on,p_ch_kw,p_dis_kw,soc_start_kwh,soc_end_kwh,p_curt_kw\n"));
        assert!(text.contains("2021-06-01T00:30:00,"));
        let (t0, got_names, got) = read_schedule_csv(buf.as_slice()).unwrap();
        assert_eq!(t0, start);
        assert_eq!(got_names, names);
        assert_eq!(got, schedule());
    }

    #[test]
    fn broken_soc_chain_is_rejected() {
        let text = "timestamp,hours,p_ch_kw,p_dis_kw,soc_start_kwh,soc_end_kwh,p_curt_kw\n\
                    2021-06-01T00:00:00,1,0,0,10,10,0\n\
                    2021-06-01T01:00:00,1,0,0,11,11,0\n";
        let err = read_schedule_csv(text.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }
}
