use std::path::Path;

use serde::Serialize;

use super::MaterialError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TempUnit {
    F,
    C,
    K,
}

impl TempUnit {
    pub fn to_kelvin(self, t: f64) -> f64 {
        match self {
            TempUnit::F => fahrenheit_to_kelvin(t),
            TempUnit::C => celsius_to_kelvin(t),
            TempUnit::K => t,
        }
    }
}

pub fn fahrenheit_to_kelvin(f: f64) -> f64 {
    (f - 32.0) * 5.0 / 9.0 + 273.15
}

pub fn kelvin_to_fahrenheit(k: f64) -> f64 {
    (k - 273.15) * 9.0 / 5.0 + 32.0
}

pub fn celsius_to_kelvin(c: f64) -> f64 {
    c + 273.15
}

/// Oven log converted to kelvin.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureLog {
    /// (time s, temperature K), time non-decreasing.
    pub samples: Vec<(f64, f64)>,
    pub source_unit: TempUnit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogSummary {
    pub mean_k: f64,
    pub std_k: f64,
    pub duration_s: f64,
    pub delta_t_mean_k: f64,
}

/// CSV with header `time_s,temp,<F|C|K>`.
pub fn parse_temperature_log(text: &str) -> Result<TemperatureLog, MaterialError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(MaterialError::Parse { line: 1, msg: "empty file".into() })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let unit = match cols.as_slice() {
        ["time_s", "temp", u] => match *u {
            "F" => TempUnit::F,
            "C" => TempUnit::C,
            "K" => TempUnit::K,
            other => return Err(MaterialError::Parse { line: 1, msg: format!("unknown unit `{other}`") }),
        },
        _ => return Err(MaterialError::Parse { line: 1, msg: format!("expected header `time_s,temp,<F|C|K>`, got `{header}`") }),
    };
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for (i, line) in lines {
        let vals: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| MaterialError::Parse { line: i + 1, msg: format!("bad row `{line}`") })?;
        if vals.len() < 2 {
            return Err(MaterialError::Parse { line: i + 1, msg: "row needs time and temperature".into() });
        }
        if let Some(&(t_prev, _)) = samples.last() {
            if vals[0] < t_prev {
                return Err(MaterialError::Parse { line: i + 1, msg: "time goes backwards".into() });
            }
        }
        samples.push((vals[0], unit.to_kelvin(vals[1])));
    }
    if samples.is_empty() {
        return Err(MaterialError::Parse { line: 2, msg: "log has no samples".into() });
    }
    Ok(TemperatureLog { samples, source_unit: unit })
}

impl TemperatureLog {
    /// Time-weighted statistics by the trapezoidal rule.
    pub fn summarize(&self, ambient_k: f64) -> LogSummary {
        let s = &self.samples;
        let duration = s.last().unwrap().0 - s[0].0;
        let (mean, var) = if duration > 0.0 {
            let mut m = 0.0;
            let mut m2 = 0.0;
            for w in s.windows(2) {
                let dt = w[1].0 - w[0].0;
                m += 0.5 * (w[0].1 + w[1].1) * dt;
                m2 += 0.5 * (w[0].1 * w[0].1 + w[1].1 * w[1].1) * dt;
            }
            let mean = m / duration;
            (mean, (m2 / duration - mean * mean).max(0.0))
        } else {
            let n = s.len() as f64;
            let mean = s.iter().map(|p| p.1).sum::<f64>() / n;
            (mean, s.iter().map(|p| (p.1 - mean).powi(2)).sum::<f64>() / n)
        };
        LogSummary { mean_k: mean, std_k: var.sqrt(), duration_s: duration, delta_t_mean_k: mean - ambient_k }
    }
}

/// Read a log file and summarize it against `ambient_k`.
pub fn ingest_temperature_log(path: &Path, ambient_k: f64) -> Result<LogSummary, MaterialError> {
    let text = std::fs::read_to_string(path).map_err(|e| MaterialError::Io(format!("{}: {e}", path.display())))?;
    Ok(parse_temperature_log(&text)?.summarize(ambient_k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_oven_log() {
        let log = parse_temperature_log("time_s,temp,F\n0,270\n60,270\n120,270\n").unwrap();
        let s = log.summarize(fahrenheit_to_kelvin(72.0));
        assert!((s.delta_t_mean_k - 110.0).abs() < 1e-9);
        assert!(s.std_k < 1e-6);
        assert_eq!(s.duration_s, 120.0);
    }

    #[test]
    fn single_sample() {
        let s = parse_temperature_log("time_s,temp,K\n5,400\n").unwrap().summarize(300.0);
        assert_eq!((s.std_k, s.duration_s, s.mean_k), (0.0, 0.0, 400.0));
    }

    #[test]
    fn two_plateaus() {
        let s = parse_temperature_log("time_s,temp,K\n0,400\n10,400\n10,410\n20,410\n").unwrap().summarize(0.0);
        assert!((s.mean_k - 405.0).abs() < 1e-12);
        assert!((s.std_k - 5.0).abs() < 1e-9);
    }

    #[test]
    fn malformed_logs() {
        assert!(parse_temperature_log("").is_err());
        assert!(parse_temperature_log("time_s,temp,F\n").is_err());
        assert!(parse_temperature_log("time_s,temp,F\n10,1\n5,1\n").is_err());
        assert!(parse_temperature_log("time_s,temp,R\n0,1\n").is_err());
    }
}
