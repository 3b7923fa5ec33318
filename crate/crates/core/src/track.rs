//! Storm tracks: types, validation and the delimited-text track file.

use std::collections::HashMap;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, TimeDelta, Utc};

use crate::error::{Error, Result};

/// Observation cadence of the track archive.
pub const CADENCE_HOURS: i64 = 6;

/// Header of the track file, in order.
pub const TRACK_HEADER: [&str; 13] = [
    "storm_id",
    "time",
    "lat",
    "lon",
    "v_obs",
    "vp",
    "chi",
    "shear",
    "h_m",
    "gamma",
    "u_t",
    "z_override",
    "over_land",
];

pub fn cadence() -> TimeDelta {
    TimeDelta::hours(CADENCE_HOURS)
}

/// One observation along a storm track.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackPoint {
    pub time: DateTime<Utc>,
    pub lat: f64,
    pub lon: f64,
    /// Observed intensity, m/s.
    pub v_obs: f64,
    /// Potential intensity, m/s.
    pub vp: f64,
    /// Entropy deficit, J/(kg K).
    pub chi: f64,
    /// Vertical wind shear magnitude, m/s.
    pub shear: f64,
    /// Mixed-layer depth, units as supplied by the feature pipeline.
    pub h_m: Option<f64>,
    /// Sub-mixed-layer stratification, units as supplied.
    pub gamma: Option<f64>,
    /// Translation speed, m/s.
    pub u_t: Option<f64>,
    /// Dimensionless ocean heat content; bypasses the h_m/gamma/u_t formula.
    pub z_override: Option<f64>,
    pub over_land: bool,
    /// Set when the spacing to the previous point is not one cadence step.
    /// Derived from the times, never read from file.
    pub gap_before: bool,
}

impl TrackPoint {
    /// A plausible open-ocean point, handy as a base for struct-update syntax.
    pub fn example() -> Self {
        TrackPoint {
            time: DateTime::<Utc>::from_timestamp(1_600_000_000 - 1_600_000_000 % 21600, 0)
                .expect("valid timestamp"),
            lat: 20.0,
            lon: 140.0,
            v_obs: 30.0,
            vp: 70.0,
            chi: 1.0,
            shear: 5.0,
            h_m: Some(50.0),
            gamma: Some(1.0),
            u_t: Some(5.0),
            z_override: None,
            over_land: false,
            gap_before: false,
        }
    }

    /// Checks the per-point invariants. `what` names the point in messages.
    pub fn validate(&self, what: &str) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::Validation(format!("{what}: {field} {msg}")));
        for (name, x) in [
            ("lat", self.lat),
            ("lon", self.lon),
            ("v_obs", self.v_obs),
            ("vp", self.vp),
            ("chi", self.chi),
            ("shear", self.shear),
        ] {
            if !x.is_finite() {
                return bad(name, format!("must be finite, got {x}"));
            }
        }
        if !(-90.0..=90.0).contains(&self.lat) {
            return bad("lat", format!("out of range: {}", self.lat));
        }
        if self.v_obs < 0.0 {
            return bad("v_obs", format!("must be >= 0, got {}", self.v_obs));
        }
        if self.vp < 0.0 {
            return bad("vp", format!("must be >= 0, got {}", self.vp));
        }
        if self.shear < 0.0 {
            return bad("shear", format!("must be >= 0, got {}", self.shear));
        }
        if let Some(u) = self.u_t {
            if !(u.is_finite() && u >= 0.0) {
                return bad("u_t", format!("must be >= 0, got {u}"));
            }
        }
        match self.z_override {
            Some(z) => {
                if !(z.is_finite() && z >= 0.0) {
                    return bad("z_override", format!("must be >= 0, got {z}"));
                }
            }
            None => {
                match self.h_m {
                    Some(h) if h.is_finite() && h > 0.0 => {}
                    Some(h) => return bad("h_m", format!("must be > 0, got {h}")),
                    None => return bad("h_m", "is required when z_override is empty".into()),
                }
                match self.gamma {
                    Some(g) if g.is_finite() && g > 0.0 => {}
                    Some(g) => return bad("gamma", format!("must be > 0, got {g}")),
                    None => return bad("gamma", "is required when z_override is empty".into()),
                }
                if self.u_t.is_none() {
                    return bad("u_t", "is required when z_override is empty".into());
                }
            }
        }
        Ok(())
    }
}

/// Time-ordered observations of a single storm.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackSeries {
    pub storm_id: String,
    pub points: Vec<TrackPoint>,
}

impl TrackSeries {
    /// Validates the series and recomputes gap flags.
    pub fn new(storm_id: impl Into<String>, mut points: Vec<TrackPoint>) -> Result<Self> {
        let storm_id = storm_id.into();
        if points.len() < 2 {
            return Err(Error::Validation(format!(
                "storm {storm_id}: at least 2 points required, got {}",
                points.len()
            )));
        }
        for (i, p) in points.iter().enumerate() {
            p.validate(&format!("storm {storm_id} point {i}"))?;
        }
        points[0].gap_before = false;
        for i in 1..points.len() {
            let dt = points[i].time - points[i - 1].time;
            if dt <= TimeDelta::zero() {
                return Err(Error::Validation(format!(
                    "storm {storm_id}: non-monotone times at point {i} ({} after {})",
                    points[i].time,
                    points[i - 1].time
                )));
            }
            points[i].gap_before = dt != cadence();
        }
        Ok(TrackSeries { storm_id, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// True if points `start..=start + steps` exist and contain no cadence gap.
    pub fn window_is_contiguous(&self, start: usize, steps: usize) -> bool {
        let end = start + steps;
        end < self.points.len() && !self.points[start + 1..=end].iter().any(|p| p.gap_before)
    }

    /// Hours since the first point, as a float.
    pub fn hours_since_start(&self, i: usize) -> f64 {
        (self.points[i].time - self.points[0].time).num_seconds() as f64 / 3600.0
    }
}

pub(crate) fn parse_time(s: &str) -> std::result::Result<DateTime<Utc>, String> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(t.and_utc());
        }
    }
    Err(format!("cannot parse time {s:?} as ISO-8601"))
}

pub fn format_time(t: &DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

fn parse_f64(field: &str, s: &str) -> std::result::Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| format!("field {field}: cannot parse {s:?} as a number"))
}

fn parse_opt(field: &str, s: &str) -> std::result::Result<Option<f64>, String> {
    if s.trim().is_empty() {
        Ok(None)
    } else {
        parse_f64(field, s).map(Some)
    }
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "t" | "yes" => Ok(true),
        "false" | "0" | "f" | "no" | "" => Ok(false),
        other => Err(format!("field over_land: cannot parse {other:?} as a boolean")),
    }
}

/// Parses track-file text. Rows are grouped by storm id (first-appearance
/// order) and time-sorted within each storm.
pub fn parse_tracks(text: &str) -> Result<Vec<TrackSeries>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    let got: Vec<&str> = header.iter().collect();
    for col in TRACK_HEADER {
        if !got.contains(&col) {
            return Err(Error::Parse {
                line: 1,
                message: format!("missing required column {col}"),
            });
        }
    }
    if got != TRACK_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("header must be exactly {}", TRACK_HEADER.join(",")),
        });
    }

    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, Vec<(usize, TrackPoint)>> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let perr = |message: String| Error::Parse { line, message };
        let f = |i: usize| rec.get(i).unwrap_or("");
        let storm_id = f(0).to_string();
        if storm_id.is_empty() {
            return Err(perr("empty storm_id".into()));
        }
        let point = TrackPoint {
            time: parse_time(f(1)).map_err(perr)?,
            lat: parse_f64("lat", f(2)).map_err(perr)?,
            lon: parse_f64("lon", f(3)).map_err(perr)?,
            v_obs: parse_f64("v_obs", f(4)).map_err(perr)?,
            vp: parse_f64("vp", f(5)).map_err(perr)?,
            chi: parse_f64("chi", f(6)).map_err(perr)?,
            shear: parse_f64("shear", f(7)).map_err(perr)?,
            h_m: parse_opt("h_m", f(8)).map_err(perr)?,
            gamma: parse_opt("gamma", f(9)).map_err(perr)?,
            u_t: parse_opt("u_t", f(10)).map_err(perr)?,
            z_override: parse_opt("z_override", f(11)).map_err(perr)?,
            over_land: parse_bool(f(12)).map_err(perr)?,
            gap_before: false,
        };
        point
            .validate(&format!("line {line} (storm {storm_id})"))?;
        if !rows.contains_key(&storm_id) {
            order.push(storm_id.clone());
        }
        rows.entry(storm_id).or_default().push((line, point));
    }
    if order.is_empty() {
        return Err(Error::Validation("track file contains no rows".into()));
    }

    order
        .into_iter()
        .map(|id| {
            let mut pts = rows.remove(&id).unwrap_or_default();
            pts.sort_by_key(|(_, p)| p.time);
            for w in pts.windows(2) {
                if w[0].1.time == w[1].1.time {
                    return Err(Error::Validation(format!(
                        "storm {id}: non-monotone times (duplicate {} on lines {} and {})",
                        format_time(&w[1].1.time),
                        w[0].0,
                        w[1].0
                    )));
                }
            }
            TrackSeries::new(id, pts.into_iter().map(|(_, p)| p).collect())
        })
        .collect()
}

pub fn load_tracks(path: impl AsRef<Path>) -> Result<Vec<TrackSeries>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tracks(&text)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Renders tracks in the track-file format. Floats use the shortest
/// representation that round-trips exactly.
pub fn format_tracks(tracks: &[TrackSeries]) -> String {
    let mut out = TRACK_HEADER.join(",");
    out.push('\n');
    for s in tracks {
        for p in &s.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                s.storm_id,
                format_time(&p.time),
                p.lat,
                p.lon,
                p.v_obs,
                p.vp,
                p.chi,
                p.shear,
                opt(p.h_m),
                opt(p.gamma),
                opt(p.u_t),
                opt(p.z_override),
                p.over_land
            ));
        }
    }
    out
}

pub fn save_tracks(tracks: &[TrackSeries], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_tracks(tracks)).map_err(|e| Error::io(path, e))
}
