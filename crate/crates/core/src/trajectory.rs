//! Delimited-text storage for simulated intensity series.

use std::path::Path;

use crate::error::{Error, Result};
use crate::simulate::IntensitySeries;
use crate::track::{format_time, parse_time};

pub const TRAJECTORY_HEADER: [&str; 6] = ["storm_id", "member_id", "time", "v_mps", "lat", "lon"];

pub fn format_trajectories(set: &[IntensitySeries]) -> String {
    let mut s = TRAJECTORY_HEADER.join(",");
    s.push('\n');
    for t in set {
        for i in 0..t.len() {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                t.storm_id,
                t.member_id,
                format_time(&t.times[i]),
                t.v[i],
                t.lat[i],
                t.lon[i]
            ));
        }
    }
    s
}

pub fn save_trajectories(set: &[IntensitySeries], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_trajectories(set)).map_err(|e| Error::io(path, e))
}

/// Parses trajectories, grouping consecutive rows with the same storm and
/// member into one series.
pub fn parse_trajectories(text: &str) -> Result<Vec<IntensitySeries>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().collect::<Vec<_>>() != TRAJECTORY_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("header must be exactly {}", TRAJECTORY_HEADER.join(",")),
        });
    }
    let mut out: Vec<IntensitySeries> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let perr = |message: String| Error::Parse { line, message };
        let rec = rec.map_err(|e| perr(e.to_string()))?;
        let num = |k: usize| -> Result<f64> {
            rec[k]
                .parse::<f64>()
                .map_err(|_| perr(format!("field {}: cannot parse {:?}", TRAJECTORY_HEADER[k], &rec[k])))
        };
        let member: usize = rec[1]
            .parse()
            .map_err(|_| perr(format!("field member_id: cannot parse {:?}", &rec[1])))?;
        let time = parse_time(&rec[2]).map_err(perr)?;
        let (v, lat, lon) = (num(3)?, num(4)?, num(5)?);
        if !v.is_finite() {
            return Err(perr("field v_mps: not finite".into()));
        }
        let same = out
            .last()
            .is_some_and(|s| s.storm_id == rec[0] && s.member_id == member);
        if !same {
            out.push(IntensitySeries {
                storm_id: rec[0].to_string(),
                member_id: member,
                times: Vec::new(),
                v: Vec::new(),
                lat: Vec::new(),
                lon: Vec::new(),
            });
        }
        let s = out.last_mut().expect("pushed");
        if s.times.last().is_some_and(|t| *t >= time) {
            return Err(perr("non-monotone time within a trajectory".into()));
        }
        s.times.push(time);
        s.v.push(v);
        s.lat.push(lat);
        s.lon.push(lon);
    }
    Ok(out)
}

pub fn load_trajectories(path: impl AsRef<Path>) -> Result<Vec<IntensitySeries>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trajectories(&text)
}
