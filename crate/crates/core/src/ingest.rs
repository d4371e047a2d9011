//! Parsing, validation and per-second alignment of raw sensor logs.
//!
//! A record on disk is three files sharing a record id:
//!
//! * `<id>.sensors.csv` with header
//!   `time,acc_x,acc_y,acc_z,lacc_x,...,gyr_z` (19 columns),
//! * `<id>.gps.csv` with header `time,lat,lon` (optional),
//! * `<id>.meta.json` with the record id, activity label and volunteer fields.
//!
//! Timestamps are `YYYYMMDD HH:MM:SS` (UTC); ISO-8601 is accepted as a fallback.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum number of aligned samples for a record to be analysed.
pub const MIN_ALIGNED_SAMPLES: usize = 30;
/// Largest tolerated hole between consecutive aligned samples, in seconds.
pub const MAX_GAP_SECONDS: i64 = 5;
/// Allowed disagreement between the start/end of different series, in seconds.
pub const SPAN_TOLERANCE_SECONDS: i64 = 2;

pub const TIME_FORMAT: &str = "%Y%m%d %H:%M:%S";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: malformed timestamp `{value}`")]
    MalformedTimestamp { row: usize, value: String },
    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    MalformedValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column `{column}`: non-finite value")]
    NonFiniteValue { row: usize, column: String },
    #[error("{what}: {len} samples, need at least {min}")]
    TooShort {
        what: String,
        len: usize,
        min: usize,
    },
    #[error("{channel}: gap of {seconds} s after t={after}")]
    GapTooLarge {
        channel: String,
        after: i64,
        seconds: i64,
    },
    #[error("series do not cover the same time span (start spread {start} s, end spread {end} s)")]
    SpanMismatch { start: i64, end: i64 },
    #[error("series `{0}` has mismatched timestamp/value lengths")]
    LengthMismatch(String),
    #[error("series `{0}` timestamps are not in order")]
    Unordered(String),
    #[error("series must share timestamps to be written as one table")]
    MisalignedSeries,
    #[error("invalid GPS point at row {row}: {reason}")]
    InvalidGps { row: usize, reason: String },
    #[error("invalid volunteer profile: {0}")]
    InvalidVolunteer(String),
    #[error("unknown {kind} `{value}`")]
    UnknownName { kind: &'static str, value: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub type Result<T, E = IngestError> = std::result::Result<T, E>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sensor {
    Accelerometer,
    LinearAcceleration,
    Gravity,
    Magnetic,
    Orientation,
    Gyroscope,
}

impl Sensor {
    pub const ALL: [Sensor; 6] = [
        Sensor::Accelerometer,
        Sensor::LinearAcceleration,
        Sensor::Gravity,
        Sensor::Magnetic,
        Sensor::Orientation,
        Sensor::Gyroscope,
    ];

    /// Column prefix used in the sensor CSV header.
    pub fn prefix(self) -> &'static str {
        match self {
            Sensor::Accelerometer => "acc",
            Sensor::LinearAcceleration => "lacc",
            Sensor::Gravity => "grav",
            Sensor::Magnetic => "mag",
            Sensor::Orientation => "ori",
            Sensor::Gyroscope => "gyr",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Sensor::Accelerometer | Sensor::LinearAcceleration | Sensor::Gravity => "m/s^2",
            Sensor::Magnetic => "mT",
            Sensor::Orientation => "deg",
            Sensor::Gyroscope => "rad/s",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn suffix(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

/// One (sensor, axis) combination. Ordering is the canonical column order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Channel {
    pub sensor: Sensor,
    pub axis: Axis,
}

impl Channel {
    pub const fn new(sensor: Sensor, axis: Axis) -> Self {
        Channel { sensor, axis }
    }

    /// All 18 channels in canonical order (sensor, then axis).
    pub fn all() -> impl Iterator<Item = Channel> {
        Sensor::ALL
            .into_iter()
            .flat_map(|s| Axis::ALL.into_iter().map(move |a| Channel::new(s, a)))
    }

    pub fn column_name(self) -> String {
        format!("{}_{}", self.sensor.prefix(), self.axis.suffix())
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.sensor.prefix(), self.axis.suffix())
    }
}

impl FromStr for Channel {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self> {
        Channel::all()
            .find(|c| c.column_name() == s)
            .ok_or_else(|| IngestError::UnknownName {
                kind: "channel",
                value: s.to_string(),
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activity {
    Biking,
    #[serde(rename = "ebike")]
    EBikeRiding,
    Walking,
    Running,
}

impl Activity {
    pub const ALL: [Activity; 4] = [
        Activity::Biking,
        Activity::EBikeRiding,
        Activity::Walking,
        Activity::Running,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Activity::Biking => "biking",
            Activity::EBikeRiding => "ebike",
            Activity::Walking => "walking",
            Activity::Running => "running",
        }
    }

    /// Human-readable name for report tables.
    pub fn title(self) -> &'static str {
        match self {
            Activity::Biking => "Biking",
            Activity::EBikeRiding => "E-Bike riding",
            Activity::Walking => "Walking",
            Activity::Running => "Running",
        }
    }
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Activity {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self> {
        Activity::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| IngestError::UnknownName {
                kind: "activity",
                value: s.to_string(),
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sex {
    Male,
    Female,
}

impl Sex {
    pub fn as_str(self) -> &'static str {
        match self {
            Sex::Male => "male",
            Sex::Female => "female",
        }
    }
}

impl fmt::Display for Sex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sex {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "male" => Ok(Sex::Male),
            "female" => Ok(Sex::Female),
            _ => Err(IngestError::UnknownName {
                kind: "sex",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolunteerProfile {
    pub volunteer_id: String,
    pub sex: Sex,
    /// Centimetres.
    pub height: f64,
    /// Kilograms.
    pub weight: f64,
}

impl VolunteerProfile {
    pub fn validate(&self) -> Result<()> {
        if !(100.0..=250.0).contains(&self.height) {
            return Err(IngestError::InvalidVolunteer(format!(
                "height {} cm outside [100, 250]",
                self.height
            )));
        }
        if !(30.0..=200.0).contains(&self.weight) {
            return Err(IngestError::InvalidVolunteer(format!(
                "weight {} kg outside [30, 200]",
                self.weight
            )));
        }
        Ok(())
    }
}

/// Sidecar metadata for one record (`<id>.meta.json`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub record_id: String,
    pub label: Activity,
    pub volunteer: VolunteerProfile,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpsPoint {
    /// Degrees, [-90, 90].
    pub lat: f64,
    /// Degrees, [-180, 180].
    pub lon: f64,
    /// Epoch seconds.
    pub timestamp: f64,
}

impl GpsPoint {
    pub fn new(lat: f64, lon: f64, timestamp: f64) -> Self {
        GpsPoint {
            lat,
            lon,
            timestamp,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if !self.lat.is_finite() || !(-90.0..=90.0).contains(&self.lat) {
            return Err(format!("latitude {} out of range", self.lat));
        }
        if !self.lon.is_finite() || !(-180.0..=180.0).contains(&self.lon) {
            return Err(format!("longitude {} out of range", self.lon));
        }
        if !self.timestamp.is_finite() {
            return Err("non-finite timestamp".into());
        }
        Ok(())
    }
}

/// One sensor axis sampled over time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorAxisSeries {
    pub channel: Channel,
    /// Epoch seconds, nondecreasing.
    pub timestamps: Vec<i64>,
    pub values: Vec<f64>,
}

impl SensorAxisSeries {
    pub fn new(channel: Channel, timestamps: Vec<i64>, values: Vec<f64>) -> Result<Self> {
        let s = SensorAxisSeries {
            channel,
            timestamps,
            values,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn validate(&self) -> Result<()> {
        let name = self.channel.column_name();
        if self.timestamps.len() != self.values.len() {
            return Err(IngestError::LengthMismatch(name));
        }
        if self.values.len() < 2 {
            return Err(IngestError::TooShort {
                what: name,
                len: self.values.len(),
                min: 2,
            });
        }
        if self.timestamps.windows(2).any(|w| w[1] < w[0]) {
            return Err(IngestError::Unordered(name));
        }
        if let Some(row) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(IngestError::NonFiniteValue { row, column: name });
        }
        Ok(())
    }

    fn start(&self) -> i64 {
        self.timestamps[0]
    }

    fn end(&self) -> i64 {
        self.timestamps[self.timestamps.len() - 1]
    }
}

/// One labelled movement session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivityRecord {
    pub record_id: String,
    pub label: Activity,
    pub volunteer: VolunteerProfile,
    series: BTreeMap<Channel, SensorAxisSeries>,
    pub gps: Option<Vec<GpsPoint>>,
}

impl ActivityRecord {
    /// Builds a record, requiring all 18 channels. Parsed records may be
    /// shorter than [`MIN_ALIGNED_SAMPLES`]; [`align_series`] enforces that.
    pub fn new(
        meta: RecordMeta,
        series: impl IntoIterator<Item = SensorAxisSeries>,
        gps: Option<Vec<GpsPoint>>,
    ) -> Result<Self> {
        meta.volunteer.validate()?;
        let mut map = BTreeMap::new();
        for s in series {
            s.validate()?;
            map.insert(s.channel, s);
        }
        if let Some(missing) = Channel::all().find(|c| !map.contains_key(c)) {
            return Err(IngestError::MissingColumn(missing.column_name()));
        }
        if let Some(track) = &gps {
            for (row, p) in track.iter().enumerate() {
                p.validate()
                    .map_err(|reason| IngestError::InvalidGps { row, reason })?;
            }
        }
        Ok(ActivityRecord {
            record_id: meta.record_id,
            label: meta.label,
            volunteer: meta.volunteer,
            series: map,
            gps,
        })
    }

    pub fn meta(&self) -> RecordMeta {
        RecordMeta {
            record_id: self.record_id.clone(),
            label: self.label,
            volunteer: self.volunteer.clone(),
        }
    }

    pub fn series(&self, channel: Channel) -> &SensorAxisSeries {
        &self.series[&channel]
    }

    pub fn values(&self, sensor: Sensor, axis: Axis) -> &[f64] {
        &self.series(Channel::new(sensor, axis)).values
    }

    /// Series in canonical channel order.
    pub fn iter_series(&self) -> impl Iterator<Item = &SensorAxisSeries> {
        self.series.values()
    }
}

/// How samples sharing one second are collapsed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignPolicy {
    #[default]
    MeanPerSecond,
    FirstPerSecond,
}

pub fn parse_timestamp(text: &str) -> Option<i64> {
    let text = text.trim();
    if let Ok(t) = NaiveDateTime::parse_from_str(text, TIME_FORMAT) {
        return Some(t.and_utc().timestamp());
    }
    if let Ok(t) = DateTime::parse_from_rfc3339(text) {
        return Some(t.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(text, fmt) {
            return Some(t.and_utc().timestamp());
        }
    }
    None
}

pub fn format_timestamp(epoch: i64) -> String {
    DateTime::from_timestamp(epoch, 0)
        .map(|t| t.format(TIME_FORMAT).to_string())
        .unwrap_or_else(|| epoch.to_string())
}

fn parse_number(row: usize, column: &str, text: &str) -> Result<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| IngestError::MalformedValue {
            row,
            column: column.to_string(),
            value: text.to_string(),
        })?;
    if !v.is_finite() {
        return Err(IngestError::NonFiniteValue {
            row,
            column: column.to_string(),
        });
    }
    Ok(v)
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
}

/// Parses a sensor CSV into a record. Rows are stably sorted by time; nothing
/// is collapsed here.
pub fn parse_activity_csv(text: &str, meta: RecordMeta) -> Result<ActivityRecord> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let time_col = column_index(&headers, "time")?;
    let channels: Vec<Channel> = Channel::all().collect();
    let cols = channels
        .iter()
        .map(|c| column_index(&headers, &c.column_name()))
        .collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<(i64, Vec<f64>)> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let raw_time = rec.get(time_col).unwrap_or("");
        let t = parse_timestamp(raw_time).ok_or_else(|| IngestError::MalformedTimestamp {
            row,
            value: raw_time.to_string(),
        })?;
        let values = channels
            .iter()
            .zip(&cols)
            .map(|(c, &col)| parse_number(row, &c.column_name(), rec.get(col).unwrap_or("")))
            .collect::<Result<Vec<_>>>()?;
        rows.push((t, values));
    }
    if rows.len() < 2 {
        return Err(IngestError::TooShort {
            what: meta.record_id.clone(),
            len: rows.len(),
            min: 2,
        });
    }
    rows.sort_by_key(|(t, _)| *t);

    let timestamps: Vec<i64> = rows.iter().map(|(t, _)| *t).collect();
    let series = channels.iter().enumerate().map(|(k, &c)| SensorAxisSeries {
        channel: c,
        timestamps: timestamps.clone(),
        values: rows.iter().map(|(_, v)| v[k]).collect(),
    });
    ActivityRecord::new(meta, series, None)
}

/// Writes the sensor CSV for a record whose series share timestamps.
pub fn write_activity_csv(record: &ActivityRecord) -> Result<String> {
    let first = record.iter_series().next().expect("18 series");
    let timestamps = &first.timestamps;
    if record.iter_series().any(|s| &s.timestamps != timestamps) {
        return Err(IngestError::MisalignedSeries);
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["time".to_string()];
    header.extend(Channel::all().map(Channel::column_name));
    writer.write_record(&header)?;
    for (i, &t) in timestamps.iter().enumerate() {
        let mut row = vec![format_timestamp(t)];
        row.extend(record.iter_series().map(|s| s.values[i].to_string()));
        writer.write_record(&row)?;
    }
    Ok(csv_into_string(writer))
}

fn csv_into_string(writer: csv::Writer<Vec<u8>>) -> String {
    let bytes = writer.into_inner().expect("in-memory writer");
    String::from_utf8(bytes).expect("csv output is utf-8")
}

pub fn parse_gps_csv(text: &str) -> Result<Vec<GpsPoint>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let (tc, latc, lonc) = (
        column_index(&headers, "time")?,
        column_index(&headers, "lat")?,
        column_index(&headers, "lon")?,
    );
    let mut points = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let raw_time = rec.get(tc).unwrap_or("");
        let t = parse_timestamp(raw_time).ok_or_else(|| IngestError::MalformedTimestamp {
            row,
            value: raw_time.to_string(),
        })?;
        let p = GpsPoint::new(
            parse_number(row, "lat", rec.get(latc).unwrap_or(""))?,
            parse_number(row, "lon", rec.get(lonc).unwrap_or(""))?,
            t as f64,
        );
        p.validate()
            .map_err(|reason| IngestError::InvalidGps { row, reason })?;
        points.push(p);
    }
    points.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    Ok(points)
}

pub fn write_gps_csv(track: &[GpsPoint]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["time", "lat", "lon"])?;
    for p in track {
        writer.write_record([
            format_timestamp(p.timestamp.floor() as i64),
            p.lat.to_string(),
            p.lon.to_string(),
        ])?;
    }
    Ok(csv_into_string(writer))
}

/// Collapses samples sharing one second. No length or gap checks.
pub fn align_axis_series(series: &SensorAxisSeries, policy: AlignPolicy) -> SensorAxisSeries {
    let mut order: Vec<usize> = (0..series.len()).collect();
    order.sort_by_key(|&i| series.timestamps[i]);

    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let t = series.timestamps[order[i]];
        let mut j = i;
        let mut sum = 0.0;
        while j < order.len() && series.timestamps[order[j]] == t {
            sum += series.values[order[j]];
            j += 1;
        }
        let v = match policy {
            AlignPolicy::MeanPerSecond => sum / (j - i) as f64,
            AlignPolicy::FirstPerSecond => series.values[order[i]],
        };
        timestamps.push(t);
        values.push(v);
        i = j;
    }
    SensorAxisSeries {
        channel: series.channel,
        timestamps,
        values,
    }
}

/// Aligns every series onto a strictly increasing 1 Hz grid and checks the
/// analysis preconditions (length, gaps, common span).
pub fn align_series(record: &ActivityRecord, policy: AlignPolicy) -> Result<ActivityRecord> {
    let mut aligned = BTreeMap::new();
    for s in record.iter_series() {
        let a = align_axis_series(s, policy);
        if a.len() < MIN_ALIGNED_SAMPLES {
            return Err(IngestError::TooShort {
                what: a.channel.column_name(),
                len: a.len(),
                min: MIN_ALIGNED_SAMPLES,
            });
        }
        if let Some(w) = a
            .timestamps
            .windows(2)
            .find(|w| w[1] - w[0] > MAX_GAP_SECONDS)
        {
            return Err(IngestError::GapTooLarge {
                channel: a.channel.column_name(),
                after: w[0],
                seconds: w[1] - w[0],
            });
        }
        aligned.insert(a.channel, a);
    }
    let spread = |f: fn(&SensorAxisSeries) -> i64| {
        let it = aligned.values().map(f);
        it.clone().max().unwrap_or(0) - it.min().unwrap_or(0)
    };
    let (start, end) = (spread(SensorAxisSeries::start), spread(SensorAxisSeries::end));
    if start > SPAN_TOLERANCE_SECONDS || end > SPAN_TOLERANCE_SECONDS {
        return Err(IngestError::SpanMismatch { start, end });
    }

    let gps = record.gps.as_ref().map(|track| {
        let mut track = track.clone();
        track.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        track.dedup_by(|b, a| a.timestamp == b.timestamp);
        track
    });
    Ok(ActivityRecord {
        record_id: record.record_id.clone(),
        label: record.label,
        volunteer: record.volunteer.clone(),
        series: aligned,
        gps,
    })
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_string(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn sensors_path(dir: &Path, record_id: &str) -> PathBuf {
    dir.join(format!("{record_id}.sensors.csv"))
}

pub fn gps_path(dir: &Path, record_id: &str) -> PathBuf {
    dir.join(format!("{record_id}.gps.csv"))
}

pub fn meta_path(dir: &Path, record_id: &str) -> PathBuf {
    dir.join(format!("{record_id}.meta.json"))
}

/// Record ids present in `dir` (by their metadata sidecar), sorted.
pub fn list_records(dir: &Path) -> Result<Vec<String>> {
    let entries = fs::read_dir(dir).map_err(|source| IngestError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut ids = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| IngestError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(id) = name.strip_suffix(".meta.json") {
            ids.push(id.to_string());
        }
    }
    ids.sort();
    Ok(ids)
}

/// Loads one record triple (the GPS file is optional); not aligned.
pub fn read_record(dir: &Path, record_id: &str) -> Result<ActivityRecord> {
    let meta: RecordMeta = serde_json::from_str(&read_to_string(&meta_path(dir, record_id))?)?;
    let mut record = parse_activity_csv(&read_to_string(&sensors_path(dir, record_id))?, meta)?;
    let gps_file = gps_path(dir, record_id);
    if gps_file.exists() {
        record.gps = Some(parse_gps_csv(&read_to_string(&gps_file)?)?);
    }
    Ok(record)
}

pub fn write_record(dir: &Path, record: &ActivityRecord) -> Result<()> {
    let id = &record.record_id;
    let meta = serde_json::to_string_pretty(&record.meta())?;
    write_string(&meta_path(dir, id), &(meta + "\n"))?;
    write_string(&sensors_path(dir, id), &write_activity_csv(record)?)?;
    if let Some(track) = &record.gps {
        write_string(&gps_path(dir, id), &write_gps_csv(track)?)?;
    }
    Ok(())
}
