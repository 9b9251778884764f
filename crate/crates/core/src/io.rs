// Copyright 2026 fqnv Contributors
// SPDX-License-Identifier: Apache-2.0

//! CSV tables and atomic file output.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fitting::FwhmPoint;
use crate::units::Spectrum;

pub const SPECTRUM_HEADER: [&str; 3] = ["frequency_mhz", "excitation", "switching_prob"];
pub const SWEEP_HEADER: [&str; 3] = ["axis_value", "frequency_mhz", "excitation"];
pub const FWHM_HEADER: [&str; 3] = ["lambda", "fwhm", "converged"];

/// Scientific notation with 17 significant digits, enough to round-trip any f64.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

pub fn write_spectrum_csv(w: impl Write, spec: &Spectrum) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let x = spec.frequencies();
    match &spec.signal {
        Some(sig) => {
            out.write_record(SPECTRUM_HEADER).map_err(csv_err)?;
            for ((w, v), s) in x.iter().zip(&spec.values).zip(&sig.values) {
                out.write_record([fmt_real(*w), fmt_real(*v), fmt_real(*s)]).map_err(csv_err)?;
            }
        }
        None => {
            out.write_record(&SPECTRUM_HEADER[..2]).map_err(csv_err)?;
            for (w, v) in x.iter().zip(&spec.values) {
                out.write_record([fmt_real(*w), fmt_real(*v)]).map_err(csv_err)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Columns of a spectrum CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumTable {
    pub frequencies: Vec<f64>,
    pub excitation: Vec<f64>,
    pub switching: Option<Vec<f64>>,
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r)
}

/// Reads a spectrum CSV; lines starting with `#` are skipped.
pub fn read_spectrum_csv(r: impl Read) -> Result<SpectrumTable> {
    let mut rdr = reader(r);
    let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    let with_signal = match header.len() {
        2 if header == SPECTRUM_HEADER[..2] => false,
        3 if header == SPECTRUM_HEADER => true,
        _ => return Err(Error::Config(format!("unexpected spectrum header {header:?}"))),
    };
    let mut t = SpectrumTable {
        frequencies: Vec::new(),
        excitation: Vec::new(),
        switching: with_signal.then(Vec::new),
    };
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let num = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Config(format!("row {}: bad number in column {}", line + 2, k + 1)))
        };
        t.frequencies.push(num(0)?);
        t.excitation.push(num(1)?);
        if let Some(s) = t.switching.as_mut() {
            s.push(num(2)?);
        }
    }
    Ok(t)
}

/// Long-format sweep rows `(axis_value, frequency, excitation)`.
pub fn write_sweep_csv(w: impl Write, rows: &[(f64, f64, f64)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SWEEP_HEADER).map_err(csv_err)?;
    for (a, f, v) in rows {
        out.write_record([fmt_real(*a), fmt_real(*f), fmt_real(*v)]).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// FWHM table; a failed point has an empty `fwhm` cell.
pub fn write_fwhm_csv(w: impl Write, points: &[FwhmPoint]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(FWHM_HEADER).map_err(csv_err)?;
    for p in points {
        let fwhm = p.fwhm.map(|f| fmt_real(f.0)).unwrap_or_default();
        out.write_record([fmt_real(p.lambda.0), fwhm, p.converged.to_string()]).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Column names of a CSV file, skipping `#` comment lines.
pub fn read_header(path: &Path) -> Result<Vec<String>> {
    let mut rdr = reader(std::fs::File::open(path)?);
    Ok(rdr.headers().map_err(csv_err)?.iter().map(str::to_owned).collect())
}

/// Write to a temporary sibling, then rename over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::Config(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    Ok(result?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thom::thom_spectrum;
    use crate::units::{apply_signal_map, Freq, FrequencyGrid, SignalMap, SystemParams};

    fn spectrum() -> Spectrum {
        let p = SystemParams::reference_device();
        thom_spectrum(&p, &FrequencyGrid::centered(p.omega_nv, 30.0, 61).unwrap()).unwrap()
    }

    #[test]
    fn spectrum_round_trip_is_exact() {
        let s = spectrum();
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("frequency_mhz,excitation\n"));
        let t = read_spectrum_csv(buf.as_slice()).unwrap();
        assert_eq!(t.frequencies, s.frequencies());
        assert_eq!(t.excitation, s.values);
        assert!(t.switching.is_none());
    }

    #[test]
    fn signal_column_written_after_mapping() {
        let s = apply_signal_map(&spectrum(), SignalMap::new(2.0, 1.0).unwrap());
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &s).unwrap();
        assert!(buf.starts_with(b"frequency_mhz,excitation,switching_prob\n"));
        let t = read_spectrum_csv(buf.as_slice()).unwrap();
        assert_eq!(t.switching.unwrap(), s.signal.unwrap().values);
    }

    #[test]
    fn values_carry_twelve_significant_digits() {
        let v = fmt_real(2878.123456789012);
        let mantissa = v.split('e').next().unwrap().replace('.', "");
        assert!(mantissa.len() >= 12);
        assert_eq!(v.parse::<f64>().unwrap(), 2878.123456789012);
    }

    #[test]
    fn comment_lines_skipped() {
        let t = read_spectrum_csv("# config_sha256=ab\nfrequency_mhz,excitation\n1,2\n".as_bytes()).unwrap();
        assert_eq!(t.frequencies, vec![1.0]);
        assert_eq!(t.excitation, vec![2.0]);
    }

    #[test]
    fn malformed_header_rejected() {
        let r = read_spectrum_csv("freq,value\n1,2\n".as_bytes());
        assert!(matches!(r, Err(Error::Config(_))));
        let r = read_spectrum_csv("frequency_mhz,excitation\n1,x\n".as_bytes());
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn fwhm_table_marks_failures() {
        let pts = [
            FwhmPoint { lambda: Freq(1.0), fwhm: Some(Freq(0.5)), converged: true, error: None },
            FwhmPoint { lambda: Freq(5.0), fwhm: None, converged: false, error: Some("x".into()) },
        ];
        let mut buf = Vec::new();
        write_fwhm_csv(&mut buf, &pts).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "lambda,fwhm,converged");
        assert!(lines[2].ends_with(",,false"));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = std::env::temp_dir().join(format!("fqnv-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("out.csv");
        atomic_write(&path, b"one").unwrap();
        atomic_write(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(&dir).unwrap().count(), 1);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
