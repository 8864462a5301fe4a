//! Price CSV ingestion.

use std::path::Path;

use chrono::{Datelike, NaiveDate};
use storage_core::Series;

use crate::error::{CliError, CliResult};

/// A loaded price file: the normalized series, the row dates as written,
/// and any warnings raised while validating.
#[derive(Debug, Clone)]
pub struct PriceData {
    pub series: Series,
    pub dates: Vec<String>,
    pub warnings: Vec<String>,
}

/// Accepts `YYYY-MM-DD` and `YYYY-MM` (taken as the first of the month).
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(&format!("{s}-01"), "%Y-%m-%d"))
        .ok()
}

fn expected_successor(prev: NaiveDate, frequency: u32) -> Option<NaiveDate> {
    match frequency {
        1 => prev.with_year(prev.year() + 1),
        12 => prev.checked_add_months(chrono::Months::new(1)),
        52 => prev.checked_add_days(chrono::Days::new(7)),
        _ => None,
    }
}

pub fn load_prices(path: &Path, frequency: u32) -> CliResult<PriceData> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_prices(&text, path, frequency)
}

pub fn parse_prices(text: &str, path: &Path, frequency: u32) -> CliResult<PriceData> {
    let data_err = |line: usize, message: String| CliError::Data { path: path.to_path_buf(), line, message };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| data_err(1, "empty file".into()))?;
    let columns: Vec<String> = header.split(',').map(|c| c.trim().to_ascii_lowercase()).collect();
    if columns != ["date", "price"] {
        return Err(data_err(1, format!("expected header `date,price`, got `{}`", header.trim())));
    }

    let mut dates = Vec::new();
    let mut raw = Vec::new();
    let mut warnings = Vec::new();
    let mut previous: Option<NaiveDate> = None;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [date_text, price_text] = fields[..] else {
            return Err(data_err(lineno, format!("expected 2 fields, got {}", fields.len())));
        };
        let date = parse_date(date_text).ok_or_else(|| data_err(lineno, format!("invalid date `{date_text}`")))?;
        let price: f64 = price_text
            .parse()
            .ok()
            .filter(|p: &f64| p.is_finite())
            .ok_or_else(|| data_err(lineno, format!("invalid price `{price_text}`")))?;
        if let Some(prev) = previous {
            if date <= prev {
                return Err(data_err(lineno, format!("date {date_text} is not after the previous row")));
            }
            if expected_successor(prev, frequency).is_some_and(|next| date > next) {
                warnings.push(format!("line {lineno}: gap before {date_text}"));
            }
        }
        if price <= 0.0 {
            warnings.push(format!("line {lineno}: non-positive price {price_text}"));
        }
        previous = Some(date);
        dates.push(date_text.to_string());
        raw.push(price);
    }
    if raw.is_empty() {
        return Err(data_err(1, "no price rows".into()));
    }
    let series = Series::normalized(raw, frequency)
        .map_err(|e| data_err(1, e.to_string()))?;
    Ok(PriceData { series, dates, warnings })
}

/// Synthetic calendar for simulated paths: consecutive periods starting
/// in January 2000.
pub fn synthetic_dates(len: usize, frequency: u32) -> Vec<String> {
    let start = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
    let mut out = Vec::with_capacity(len);
    let mut d = start;
    for _ in 0..len {
        out.push(match frequency {
            12 => d.format("%Y-%m").to_string(),
            _ => d.format("%Y-%m-%d").to_string(),
        });
        d = expected_successor(d, frequency).unwrap_or(d + chrono::Days::new(1));
    }
    out
}
