//! Exterior climate time series and its interpolation.

use thiserror::Error;

pub const CLIMATE_HEADER: [&str; 5] = ["time_h", "theta_ext_C", "phi_ext", "rain_kg_m2_s", "swr_W_m2"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClimateError {
    #[error("climate row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("climate file: {0}")]
    Format(String),
}

/// Exterior conditions at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClimateSample {
    pub theta: f64,
    pub phi: f64,
    pub rain: f64,
    pub swr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClimateSeries {
    times: Vec<f64>,
    samples: Vec<ClimateSample>,
}

impl ClimateSeries {
    /// Builds a series from times in seconds. Row numbers in errors count
    /// the first sample as row 2, matching the CSV layout.
    pub fn new(times: Vec<f64>, samples: Vec<ClimateSample>) -> Result<Self, ClimateError> {
        if times.len() != samples.len() {
            return Err(ClimateError::Format(format!(
                "{} times but {} samples",
                times.len(),
                samples.len()
            )));
        }
        if times.is_empty() {
            return Err(ClimateError::Format("no data rows".into()));
        }
        for (i, (t, s)) in times.iter().zip(&samples).enumerate() {
            let row = i + 2;
            let bad = |message: String| Err(ClimateError::Row { row, message });
            if !(t.is_finite() && s.theta.is_finite() && s.phi.is_finite() && s.rain.is_finite() && s.swr.is_finite()) {
                return bad("non-finite value".into());
            }
            if i > 0 && *t <= times[i - 1] {
                return bad(format!("time {} h does not increase", t / 3600.0));
            }
            if !(0.0..=1.0).contains(&s.phi) {
                return bad(format!("relative humidity {} outside [0, 1]", s.phi));
            }
            if s.rain < 0.0 {
                return bad(format!("negative rain flux {}", s.rain));
            }
            if s.swr < 0.0 {
                return bad(format!("negative solar flux {}", s.swr));
            }
        }
        Ok(Self { times, samples })
    }

    /// Constant conditions for all times.
    pub fn constant(sample: ClimateSample) -> Result<Self, ClimateError> {
        Self::new(vec![0.0], vec![sample])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn samples(&self) -> &[ClimateSample] {
        &self.samples
    }

    /// Piecewise-linear in time, holding the end values outside the record.
    pub fn sample(&self, t: f64) -> ClimateSample {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.samples[0];
        }
        if t >= self.times[n - 1] {
            return self.samples[n - 1];
        }
        let j = self.times.partition_point(|&x| x <= t) - 1;
        let s = (t - self.times[j]) / (self.times[j + 1] - self.times[j]);
        let (a, b) = (self.samples[j], self.samples[j + 1]);
        let lerp = |x: f64, y: f64| x + s * (y - x);
        ClimateSample {
            theta: lerp(a.theta, b.theta),
            phi: lerp(a.phi, b.phi),
            rain: lerp(a.rain, b.rain),
            swr: lerp(a.swr, b.swr),
        }
    }
}

/// Parses the climate CSV; hours are converted to seconds.
pub fn load_climate(text: &str) -> Result<ClimateSeries, ClimateError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| ClimateError::Format(e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if headers != CLIMATE_HEADER {
        return Err(ClimateError::Format(format!(
            "expected header `{}`, found `{}`",
            CLIMATE_HEADER.join(","),
            headers.join(",")
        )));
    }
    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| ClimateError::Row { row, message: e.to_string() })?;
        let mut values = [0.0; 5];
        for (k, v) in values.iter_mut().enumerate() {
            let field = record.get(k).unwrap_or("");
            *v = field.parse().map_err(|_| ClimateError::Row {
                row,
                message: format!("invalid {} `{field}`", CLIMATE_HEADER[k]),
            })?;
        }
        times.push(values[0] * 3600.0);
        samples.push(ClimateSample { theta: values[1], phi: values[2], rain: values[3], swr: values[4] });
    }
    ClimateSeries::new(times, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO: &str = "time_h,theta_ext_C,phi_ext,rain_kg_m2_s,swr_W_m2\n1,10,0.5,0,0\n2,20,0.7,1e-4,100\n";

    #[test]
    fn loads_two_rows() {
        let s = load_climate(TWO).unwrap();
        assert_eq!(s.times(), &[3600.0, 7200.0]);
        assert_eq!(s.samples()[1].theta, 20.0);
    }

    #[test]
    fn humidity_out_of_range_names_row() {
        let text = TWO.replace("0.7", "1.2");
        match load_climate(&text).unwrap_err() {
            ClimateError::Row { row, .. } => assert_eq!(row, 3),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn non_monotone_time_is_rejected() {
        let text = TWO.replace("\n2,", "\n1,");
        assert!(matches!(load_climate(&text), Err(ClimateError::Row { row: 3, .. })));
        let text = TWO.replace("1e-4", "x");
        assert!(matches!(load_climate(&text), Err(ClimateError::Row { row: 3, .. })));
    }

    #[test]
    fn sampling() {
        let s = load_climate(TWO).unwrap();
        assert_eq!(s.sample(3600.0).theta, 10.0);
        assert_eq!(s.sample(7200.0).swr, 100.0);
        assert_eq!(s.sample(5400.0).theta, 15.0);
        assert_eq!(s.sample(0.0).theta, 10.0);
        assert_eq!(s.sample(1e9).phi, 0.7);
    }
}
