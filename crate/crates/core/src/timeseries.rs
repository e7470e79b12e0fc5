//! Hourly price and outdoor-temperature series, episode windows and the
//! exponentially smoothed reference price.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Duration, NaiveDate, NaiveDateTime, Timelike};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

/// Seasonal evaluation case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    Winter,
    Spring,
    Summer,
}

impl Case {
    pub const ALL: [Case; 3] = [Case::Winter, Case::Spring, Case::Summer];

    pub fn as_str(self) -> &'static str {
        match self {
            Case::Winter => "winter",
            Case::Spring => "spring",
            Case::Summer => "summer",
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "winter" | "1" | "case1" => Ok(Case::Winter),
            "spring" | "2" | "case2" => Ok(Case::Spring),
            "summer" | "3" | "case3" => Ok(Case::Summer),
            other => Err(Error::Invalid(format!(
                "unknown case `{other}` (expected winter, spring or summer)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub timestamp: NaiveDateTime,
    /// Currency per MWh.
    pub price: f64,
    /// Degrees Celsius.
    pub outdoor_temp: f64,
}

/// Validated hourly series: finite values, strictly increasing timestamps
/// spaced exactly one hour apart.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTemperatureSeries {
    records: Vec<Record>,
}

impl PriceTemperatureSeries {
    pub fn new(records: Vec<Record>) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            if !r.price.is_finite() || !r.outdoor_temp.is_finite() {
                return Err(Error::Invalid(format!("non-finite value at record {i}")));
            }
        }
        for pair in records.windows(2) {
            if pair[1].timestamp - pair[0].timestamp != Duration::hours(1) {
                return Err(Error::NonUniformSpacing {
                    prev: pair[0].timestamp.format(TIMESTAMP_FORMAT).to_string(),
                    next: pair[1].timestamp.format(TIMESTAMP_FORMAT).to_string(),
                });
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn start(&self) -> Option<NaiveDateTime> {
        self.records.first().map(|r| r.timestamp)
    }

    /// Index of the record at `ts`, if covered.
    pub fn index_of(&self, ts: NaiveDateTime) -> Option<usize> {
        let start = self.start()?;
        let offset = ts - start;
        if offset < Duration::zero() || offset.num_seconds() % 3600 != 0 {
            return None;
        }
        let idx = offset.num_hours() as usize;
        (idx < self.records.len()).then_some(idx)
    }

    pub fn write_csv(&self, path: &Path, columns: &ColumnMap) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
        w.write_record([&columns.timestamp, &columns.price, &columns.temperature])?;
        for r in &self.records {
            w.write_record([
                r.timestamp.format(TIMESTAMP_FORMAT).to_string(),
                r.price.to_string(),
                r.outdoor_temp.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::Invalid(format!("{}: {kind:?}", path.display())),
    }
}

/// Names of the CSV columns holding each field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMap {
    pub timestamp: String,
    pub price: String,
    pub temperature: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            timestamp: "time".into(),
            price: "price actual".into(),
            temperature: "temp".into(),
        }
    }
}

fn is_missing(field: &str) -> bool {
    matches!(
        field.trim().to_ascii_lowercase().as_str(),
        "" | "nan" | "na" | "n/a" | "null" | "none"
    )
}

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.naive_utc());
    }
    for fmt in ["%Y-%m-%d %H:%M:%S%:z", "%Y-%m-%d %H:%M:%S%#z"] {
        if let Ok(dt) = DateTime::parse_from_str(s, fmt) {
            return Some(dt.naive_utc());
        }
    }
    for fmt in [TIMESTAMP_FORMAT, "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt);
        }
    }
    None
}

/// Loads an hourly series from a comma-separated file with a header row.
///
/// Rows with a missing price or temperature are dropped; the remaining rows
/// must then be spaced exactly one hour apart. Timestamps carrying a UTC
/// offset are converted to UTC.
pub fn load_csv(path: &Path, columns: &ColumnMap) -> Result<PriceTemperatureSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_io(path, e))?;
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let (ti, pi, xi) = (
        find(&columns.timestamp)?,
        find(&columns.price)?,
        find(&columns.temperature)?,
    );

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::MalformedRow {
                line,
                reason: e.to_string(),
            }
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| row.get(i).unwrap_or("");
        let timestamp = parse_timestamp(field(ti)).ok_or_else(|| Error::MalformedRow {
            line,
            reason: format!("unparseable timestamp `{}`", field(ti)),
        })?;
        if is_missing(field(pi)) || is_missing(field(xi)) {
            log::debug!("dropping line {line}: missing value");
            continue;
        }
        let number = |i: usize, what: &str| -> Result<f64> {
            field(i).trim().parse::<f64>().map_err(|_| Error::MalformedRow {
                line,
                reason: format!("unparseable {what} `{}`", field(i)),
            })
        };
        let price = number(pi, "price")?;
        let outdoor_temp = number(xi, "temperature")?;
        if !price.is_finite() || !outdoor_temp.is_finite() {
            continue;
        }
        records.push(Record {
            timestamp,
            price,
            outdoor_temp,
        });
    }
    PriceTemperatureSeries::new(records)
}

/// Date range used for one seasonal case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseRange {
    #[serde(with = "ts_format")]
    pub start: NaiveDateTime,
    /// Exclusive.
    #[serde(with = "ts_format")]
    pub end: NaiveDateTime,
    /// Start of the fixed evaluation window.
    #[serde(with = "ts_format")]
    pub eval_start: NaiveDateTime,
}

impl CaseRange {
    pub fn hours(&self) -> i64 {
        (self.end - self.start).num_hours()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaseRanges {
    pub winter: CaseRange,
    pub spring: CaseRange,
    pub summer: CaseRange,
}

fn at_midnight(y: i32, m: u32, d: u32) -> NaiveDateTime {
    NaiveDate::from_ymd_opt(y, m, d)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid calendar date")
}

impl Default for CaseRanges {
    fn default() -> Self {
        Self {
            winter: CaseRange {
                start: at_midnight(2018, 1, 8),
                end: at_midnight(2018, 2, 5),
                eval_start: at_midnight(2018, 1, 22),
            },
            spring: CaseRange {
                start: at_midnight(2018, 4, 2),
                end: at_midnight(2018, 4, 30),
                eval_start: at_midnight(2018, 4, 16),
            },
            summer: CaseRange {
                start: at_midnight(2018, 7, 2),
                end: at_midnight(2018, 7, 30),
                eval_start: at_midnight(2018, 7, 16),
            },
        }
    }
}

impl CaseRanges {
    pub fn get(&self, case: Case) -> &CaseRange {
        match case {
            Case::Winter => &self.winter,
            Case::Spring => &self.spring,
            Case::Summer => &self.summer,
        }
    }
}

pub(crate) mod ts_format {
    use chrono::NaiveDateTime;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &NaiveDateTime, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&ts.format(super::TIMESTAMP_FORMAT).to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveDateTime, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_timestamp(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("bad timestamp `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowMode {
    Train,
    Eval,
}

/// Contiguous slice of a series used for one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeWindow {
    pub case: Case,
    #[serde(with = "ts_format")]
    pub start: NaiveDateTime,
    /// Currency per MWh.
    pub prices: Vec<f64>,
    pub outdoor_temps: Vec<f64>,
}

impl EpisodeWindow {
    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    /// First `len` steps of this window.
    pub fn truncated(&self, len: usize) -> EpisodeWindow {
        let len = len.min(self.len());
        EpisodeWindow {
            case: self.case,
            start: self.start,
            prices: self.prices[..len].to_vec(),
            outdoor_temps: self.outdoor_temps[..len].to_vec(),
        }
    }
}

/// Draws fixed-length windows from the configured case ranges.
#[derive(Debug, Clone)]
pub struct WindowSampler {
    pub ranges: CaseRanges,
    pub length: usize,
}

impl WindowSampler {
    pub fn new(ranges: CaseRanges, length: usize) -> Self {
        Self { ranges, length }
    }

    /// Train mode draws a uniformly random start inside the case range; eval
    /// mode returns the case's fixed evaluation window.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        series: &PriceTemperatureSeries,
        case: Case,
        mode: WindowMode,
        rng: &mut R,
    ) -> Result<EpisodeWindow> {
        let range = self.ranges.get(case);
        let len = self.length as i64;
        if range.hours() < len {
            return Err(Error::SeriesTooShort(format!(
                "{case} range spans {} hours, window needs {len}",
                range.hours()
            )));
        }
        let start = match mode {
            WindowMode::Eval => return self.eval_window(series, case),
            WindowMode::Train => {
                let slots = (range.hours() - len + 1) as u64;
                range.start + Duration::hours(rng.random_range(0..slots) as i64)
            }
        };
        self.slice(series, case, start)
    }

    /// The case's fixed evaluation window.
    pub fn eval_window(&self, series: &PriceTemperatureSeries, case: Case) -> Result<EpisodeWindow> {
        self.slice(series, case, self.ranges.get(case).eval_start)
    }

    pub fn slice(
        &self,
        series: &PriceTemperatureSeries,
        case: Case,
        start: NaiveDateTime,
    ) -> Result<EpisodeWindow> {
        let i0 = series.index_of(start).ok_or_else(|| {
            Error::SeriesTooShort(format!(
                "series does not cover {case} window start {}",
                start.format(TIMESTAMP_FORMAT)
            ))
        })?;
        let i1 = i0 + self.length;
        if i1 > series.len() {
            return Err(Error::SeriesTooShort(format!(
                "series ends before {case} window starting {} completes",
                start.format(TIMESTAMP_FORMAT)
            )));
        }
        let recs = &series.records()[i0..i1];
        Ok(EpisodeWindow {
            case,
            start,
            prices: recs.iter().map(|r| r.price).collect(),
            outdoor_temps: recs.iter().map(|r| r.outdoor_temp).collect(),
        })
    }
}

/// Exponentially smoothed reference price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceAverage {
    pub p_bar: f64,
    pub eta: f64,
}

impl PriceAverage {
    pub fn new(p_bar: f64, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::Invalid(format!("eta must lie in (0, 1], got {eta}")));
        }
        if !p_bar.is_finite() {
            return Err(Error::Invalid("initial average price must be finite".into()));
        }
        Ok(Self { p_bar, eta })
    }

    pub fn update(self, p: f64) -> Self {
        Self {
            p_bar: (1.0 - self.eta) * self.p_bar + self.eta * p,
            eta: self.eta,
        }
    }
}

/// Shape of a synthetic series: daily sinusoids plus bounded uniform noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthProfile {
    pub price_mean: f64,
    pub price_amplitude: f64,
    /// Hour of day with the lowest price.
    pub price_trough_hour: f64,
    pub price_noise: f64,
    pub temp_mean: f64,
    pub temp_amplitude: f64,
    pub temp_trough_hour: f64,
    pub temp_noise: f64,
}

impl Default for SynthProfile {
    fn default() -> Self {
        Self::for_case(Case::Spring)
    }
}

impl SynthProfile {
    pub fn for_case(case: Case) -> Self {
        let (price_mean, price_amplitude, temp_mean, temp_amplitude) = match case {
            Case::Winter => (62.0, 14.0, 1.0, 5.0),
            Case::Spring => (45.0, 12.0, 17.0, 6.0),
            Case::Summer => (60.0, 10.0, 29.0, 5.0),
        };
        Self {
            price_mean,
            price_amplitude,
            price_trough_hour: 4.0,
            price_noise: 3.0,
            temp_mean,
            temp_amplitude,
            temp_trough_hour: 5.0,
            temp_noise: 1.0,
        }
    }

    pub fn without_noise(mut self) -> Self {
        self.price_noise = 0.0;
        self.temp_noise = 0.0;
        self
    }

    /// Strict upper bound on every generated temperature.
    pub fn temp_ceiling(&self) -> f64 {
        self.temp_mean + self.temp_amplitude + self.temp_noise + 1e-9
    }

    pub fn price_at(&self, hour_of_day: f64) -> f64 {
        daily_wave(
            self.price_mean,
            self.price_amplitude,
            self.price_trough_hour,
            hour_of_day,
        )
    }

    pub fn temp_at(&self, hour_of_day: f64) -> f64 {
        daily_wave(
            self.temp_mean,
            self.temp_amplitude,
            self.temp_trough_hour,
            hour_of_day,
        )
    }
}

fn daily_wave(mean: f64, amplitude: f64, trough_hour: f64, hour: f64) -> f64 {
    mean - amplitude * (2.0 * std::f64::consts::PI * (hour - trough_hour) / 24.0).cos()
}

/// Synthetic series for `case`, starting at the case's default range start.
pub fn synth_series(case: Case, length: usize, seed: u64) -> Result<PriceTemperatureSeries> {
    let start = CaseRanges::default().get(case).start;
    synth_series_with(&SynthProfile::for_case(case), start, length, seed)
}

pub fn synth_series_with(
    profile: &SynthProfile,
    start: NaiveDateTime,
    length: usize,
    seed: u64,
) -> Result<PriceTemperatureSeries> {
    if length < 96 {
        return Err(Error::SeriesTooShort(format!(
            "synthetic series needs at least 96 hours, got {length}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise = |amp: f64| {
        let u: f64 = rng.random_range(-1.0..=1.0);
        amp * u
    };
    let records = (0..length)
        .map(|h| {
            let timestamp = start + Duration::hours(h as i64);
            let hod = timestamp.hour() as f64;
            Record {
                timestamp,
                price: profile.price_at(hod) + noise(profile.price_noise),
                outdoor_temp: profile.temp_at(hod) + noise(profile.temp_noise),
            }
        })
        .collect();
    PriceTemperatureSeries::new(records)
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn cols(ts: &str, p: &str, t: &str) -> ColumnMap {
        ColumnMap {
            timestamp: ts.into(),
            price: p.into(),
            temperature: t.into(),
        }
    }

    #[test]
    fn loads_well_formed_file() {
        let f = write_tmp(
            "time,price,temp\n\
             2018-01-01 00:00:00,50.5,3.0\n\
             2018-01-01 01:00:00,48.0,2.5\n\
             2018-01-01 02:00:00,47.25,2.0\n\
             2018-01-01 03:00:00,46.0,1.5\n",
        );
        let s = load_csv(f.path(), &cols("time", "price", "temp")).unwrap();
        assert_eq!(s.len(), 4);
        let prices: Vec<f64> = s.records().iter().map(|r| r.price).collect();
        assert_eq!(prices, vec![50.5, 48.0, 47.25, 46.0]);
        assert_eq!(s.records()[3].outdoor_temp, 1.5);
    }

    #[test]
    fn dropped_nan_row_leaves_gap() {
        let f = write_tmp(
            "time,price,temp\n\
             2018-01-01 00:00:00,50,3\n\
             2018-01-01 01:00:00,51,3\n\
             2018-01-01 02:00:00,NaN,3\n\
             2018-01-01 03:00:00,52,3\n\
             2018-01-01 04:00:00,53,3\n",
        );
        let err = load_csv(f.path(), &cols("time", "price", "temp")).unwrap_err();
        assert!(matches!(err, Error::NonUniformSpacing { .. }), "{err}");
        assert!(err.to_string().contains("non-uniform spacing"));
    }

    #[test]
    fn trailing_missing_row_is_dropped() {
        let f = write_tmp(
            "time,price,temp\n\
             2018-01-01 00:00:00,50,3\n\
             2018-01-01 01:00:00,51,\n",
        );
        let s = load_csv(f.path(), &cols("time", "price", "temp")).unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn mapped_column_names_with_offsets() {
        // Kaggle-style header, extra columns and +01:00 offsets.
        let f = write_tmp(
            "time,generation solar,price actual,temp\n\
             2015-01-01 00:00:00+01:00,100,65.41,-1.5\n\
             2015-01-01 01:00:00+01:00,101,64.92,-2.0\n\
             2015-01-01 02:00:00+01:00,102,64.48,-2.25\n",
        );
        let s = load_csv(f.path(), &ColumnMap::default()).unwrap();
        let want = [(65.41, -1.5), (64.92, -2.0), (64.48, -2.25)];
        for (r, (p, t)) in s.records().iter().zip(want) {
            assert_eq!(r.price, p);
            assert_eq!(r.outdoor_temp, t);
        }
        assert_eq!(
            s.start().unwrap(),
            parse_timestamp("2014-12-31 23:00:00").unwrap()
        );
    }

    #[test]
    fn missing_file_and_bad_rows() {
        let err = load_csv(Path::new("/nonexistent/x.csv"), &ColumnMap::default()).unwrap_err();
        assert!(matches!(err, Error::NotFound(_)), "{err}");

        let f = write_tmp("time,price,temp\n2018-01-01 00:00:00,50,3\nyesterday,51,3\n");
        match load_csv(f.path(), &cols("time", "price", "temp")).unwrap_err() {
            Error::MalformedRow { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }

        let f = write_tmp("time,price,temp\n2018-01-01 00:00:00,fifty,3\n");
        assert!(matches!(
            load_csv(f.path(), &cols("time", "price", "temp")).unwrap_err(),
            Error::MalformedRow { line: 2, .. }
        ));

        let f = write_tmp("time,cost,temp\n2018-01-01 00:00:00,50,3\n");
        assert!(matches!(
            load_csv(f.path(), &cols("time", "price", "temp")).unwrap_err(),
            Error::MissingColumn(_)
        ));
    }

    #[test]
    fn price_average_examples() {
        let s = PriceAverage::new(50.0, 0.2).unwrap().update(60.0);
        assert!((s.p_bar - 52.0).abs() < 1e-12);
        for eta in [0.01, 0.2, 0.5, 1.0] {
            let s = PriceAverage::new(37.5, eta).unwrap().update(37.5);
            assert_eq!(s.p_bar, 37.5);
        }
        let mut s = PriceAverage::new(0.0, 0.2).unwrap();
        let mut prev = s.p_bar;
        for k in 1..=200 {
            s = s.update(30.0);
            assert!(s.p_bar > prev || s.p_bar == 30.0);
            assert!(s.p_bar <= 30.0);
            // closed form 30 * (1 - 0.8^k)
            let expect = 30.0 * (1.0 - 0.8f64.powi(k));
            assert!((s.p_bar - expect).abs() < 1e-9);
            prev = s.p_bar;
        }
        assert!(PriceAverage::new(1.0, 0.0).is_err());
        assert!(PriceAverage::new(1.0, 1.5).is_err());
    }

    #[test]
    fn synth_is_seeded_and_respects_ceiling() {
        let a = synth_series(Case::Winter, 24 * 28, 9).unwrap();
        let b = synth_series(Case::Winter, 24 * 28, 9).unwrap();
        assert_eq!(a, b);
        let c = synth_series(Case::Winter, 24 * 28, 10).unwrap();
        assert_ne!(a, c);
        let ceiling = SynthProfile::for_case(Case::Winter).temp_ceiling();
        assert!(a.records().iter().all(|r| r.outdoor_temp < ceiling));
        assert!(synth_series(Case::Winter, 95, 1).is_err());
    }

    #[test]
    fn noiseless_synth_is_exact_sinusoid() {
        let p = SynthProfile::for_case(Case::Spring).without_noise();
        let start = at_midnight(2018, 4, 2);
        let s = synth_series_with(&p, start, 96, 3).unwrap();
        for (h, r) in s.records().iter().enumerate() {
            let hod = (h % 24) as f64;
            let ang = 2.0 * std::f64::consts::PI * (hod - p.price_trough_hour) / 24.0;
            assert_eq!(r.price, p.price_mean - p.price_amplitude * ang.cos());
            let ang = 2.0 * std::f64::consts::PI * (hod - p.temp_trough_hour) / 24.0;
            assert_eq!(r.outdoor_temp, p.temp_mean - p.temp_amplitude * ang.cos());
        }
        // trough at the configured hour
        assert!((s.records()[4].price - (p.price_mean - p.price_amplitude)).abs() < 1e-12);
    }
}
