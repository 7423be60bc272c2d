use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{Boundary, RateScaling};

pub const CSV_HEADER: [&str; 16] = [
    "experiment_id",
    "figure_tag",
    "boundary",
    "L",
    "K",
    "h",
    "Du",
    "Dv",
    "Dw",
    "k_value",
    "scaling",
    "estimator",
    "mean",
    "std_error",
    "n_trials",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Estimator {
    Formula,
    Mc,
    Oracle,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::Formula => "formula",
            Estimator::Mc => "mc",
            Estimator::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "formula" => Ok(Estimator::Formula),
            "mc" => Ok(Estimator::Mc),
            "oracle" => Ok(Estimator::Oracle),
            other => Err(Error::Parse(format!("unknown estimator {other:?}"))),
        }
    }
}

/// One CSV row: a parameter point and one estimate of its mean time.
///
/// Rates that do not apply to the experiment are `None`. An oracle row with
/// `mean = None` marks a point whose state space exceeds the solver cap.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub experiment_id: String,
    pub figure_tag: String,
    pub boundary: Boundary,
    pub length: f64,
    pub compartments: usize,
    pub du: Option<f64>,
    pub dv: Option<f64>,
    pub dw: Option<f64>,
    pub k_value: Option<f64>,
    pub scaling: Option<RateScaling>,
    pub estimator: Estimator,
    pub mean: Option<f64>,
    pub std_error: Option<f64>,
    pub n_trials: Option<u64>,
    pub seed: Option<u64>,
}

impl ExperimentRecord {
    pub fn h(&self) -> f64 {
        self.length / self.compartments as f64
    }

    fn fields(&self) -> [String; 16] {
        let real = |x: Option<f64>| x.map(format_real).unwrap_or_default();
        [
            self.experiment_id.clone(),
            self.figure_tag.clone(),
            self.boundary.as_str().to_string(),
            format_real(self.length),
            self.compartments.to_string(),
            format_real(self.h()),
            real(self.du),
            real(self.dv),
            real(self.dw),
            real(self.k_value),
            self.scaling
                .map(|s| s.as_str().to_string())
                .unwrap_or_default(),
            self.estimator.as_str().to_string(),
            real(self.mean),
            real(self.std_error),
            self.n_trials.map(|n| n.to_string()).unwrap_or_default(),
            self.seed.map(|n| n.to_string()).unwrap_or_default(),
        ]
    }

    fn from_fields(row: &csv::StringRecord) -> Result<Self> {
        if row.len() != CSV_HEADER.len() {
            return Err(Error::Parse(format!(
                "expected {} fields, found {}",
                CSV_HEADER.len(),
                row.len()
            )));
        }
        fn opt<T: FromStr>(s: &str, name: &str) -> Result<Option<T>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse()
                    .map(Some)
                    .map_err(|_| Error::Parse(format!("bad {name} value {s:?}")))
            }
        }
        fn req<T: FromStr>(s: &str, name: &str) -> Result<T> {
            opt(s, name)?.ok_or_else(|| Error::Parse(format!("missing {name}")))
        }
        Ok(Self {
            experiment_id: row[0].to_string(),
            figure_tag: row[1].to_string(),
            boundary: row[2].parse()?,
            length: req(&row[3], "L")?,
            compartments: req(&row[4], "K")?,
            du: opt(&row[6], "Du")?,
            dv: opt(&row[7], "Dv")?,
            dw: opt(&row[8], "Dw")?,
            k_value: opt(&row[9], "k_value")?,
            scaling: if row[10].is_empty() {
                None
            } else {
                Some(row[10].parse()?)
            },
            estimator: row[11].parse()?,
            mean: opt(&row[12], "mean")?,
            std_error: opt(&row[13], "std_error")?,
            n_trials: opt(&row[14], "n_trials")?,
            seed: opt(&row[15], "seed")?,
        })
    }
}

/// Formats a real with 9 significant digits, `%g` style.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa.to_string()),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn write_records<W: Write>(out: W, records: &[ExperimentRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn write_records_to(path: &Path, records: &[ExperimentRecord]) -> Result<()> {
    let mut buf = Vec::new();
    write_records(&mut buf, records)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<ExperimentRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Parse(format!(
            "unexpected CSV header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    r.records()
        .map(|row| ExperimentRecord::from_fields(&row?))
        .collect()
}

pub fn read_records_from(path: &Path) -> Result<Vec<ExperimentRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_records(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentRecord {
        ExperimentRecord {
            experiment_id: "fig1-0001".into(),
            figure_tag: "fig1".into(),
            boundary: Boundary::Reflective,
            length: 1.0,
            compartments: 3,
            du: Some(1.0),
            dv: Some(2.0),
            dw: None,
            k_value: None,
            scaling: None,
            estimator: Estimator::Mc,
            mean: Some(0.123456789123),
            std_error: Some(1.5e-7),
            n_trials: Some(10_000),
            seed: Some(20240601),
        }
    }

    #[test]
    fn real_formatting() {
        assert_eq!(format_real(0.0), "0");
        assert_eq!(format_real(1.0), "1");
        assert_eq!(format_real(0.390857799123), "0.390857799");
        assert_eq!(format_real(1.0 / 3.0), "0.333333333");
        assert_eq!(format_real(123456789.4), "123456789");
        assert_eq!(format_real(1234567891.0), "1.23456789e+09");
        assert_eq!(format_real(1.5e-7), "1.5e-07");
        assert_eq!(format_real(-2.5e-3), "-0.0025");
        assert_eq!(format_real(0.01), "0.01");
    }

    #[test]
    fn header_and_round_trip() {
        let mut buf = Vec::new();
        let mut absent = sample();
        absent.estimator = Estimator::Oracle;
        absent.mean = None;
        absent.std_error = None;
        absent.n_trials = None;
        absent.seed = None;
        write_records(&mut buf, &[sample(), absent.clone()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "experiment_id,figure_tag,boundary,L,K,h,Du,Dv,Dw,k_value,scaling,estimator,mean,std_error,n_trials,seed"
        );
        assert_eq!(
            lines.next().unwrap(),
            "fig1-0001,fig1,reflective,1,3,0.333333333,1,2,,,,mc,0.123456789,1.5e-07,10000,20240601"
        );
        assert_eq!(
            lines.next().unwrap(),
            "fig1-0001,fig1,reflective,1,3,0.333333333,1,2,,,,oracle,,,,"
        );
        let back = read_records(buf.as_slice()).unwrap();
        assert_eq!(back[1], absent);
        assert_eq!(back[0].mean, Some(0.123456789));
    }

    #[test]
    fn rejects_wrong_header() {
        assert!(read_records("a,b\n1,2\n".as_bytes()).is_err());
    }
}
