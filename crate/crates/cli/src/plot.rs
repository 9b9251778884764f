// Copyright 2026 fqnv Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use clap::ValueEnum;
use fqnv::io::{read_header, FWHM_HEADER, SPECTRUM_HEADER, SWEEP_HEADER};
use fqnv::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    Spectrum,
    Heatmap,
    Fwhm,
}

fn expect(header: &[String], want: &[&str]) -> Result<()> {
    if header.iter().map(String::as_str).eq(want.iter().copied()) {
        Ok(())
    } else {
        Err(Error::Config(format!("CSV header {header:?} does not match {want:?}")))
    }
}

/// Gnuplot script for `csv`, which it references by file name.
pub fn script(csv: &Path, kind: PlotKind, provenance_comment: &str) -> Result<String> {
    let header = read_header(csv)?;
    let name = csv
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .ok_or_else(|| Error::Config(format!("not a file: {}", csv.display())))?;
    let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "plot".into());
    let mut s = String::from(provenance_comment);
    s.push_str("set datafile separator ','\nset datafile commentschars '#'\nset key autotitle columnhead\n");
    s.push_str(&format!("set terminal pngcairo size 900,600\nset output '{stem}.png'\n"));
    match kind {
        PlotKind::Spectrum => {
            let with_signal = header.len() == 3;
            expect(&header, if with_signal { &SPECTRUM_HEADER[..] } else { &SPECTRUM_HEADER[..2] })?;
            s.push_str("set xlabel 'frequency (MHz)'\nset ylabel 'qubit excitation'\nset grid\n");
            if with_signal {
                s.push_str("set y2label 'switching probability'\nset y2tics\nset ytics nomirror\n");
                s.push_str(&format!(
                    "plot '{name}' using 1:2 with lines title 'excitation', \\\n     '{name}' using 1:3 axes x1y2 with lines title 'switching'\n"
                ));
            } else {
                s.push_str(&format!("plot '{name}' using 1:2 with lines title 'excitation'\n"));
            }
        }
        PlotKind::Heatmap => {
            expect(&header, &SWEEP_HEADER)?;
            s.push_str("set xlabel 'frequency (MHz)'\nset ylabel 'power (lambda) or detuning'\nset cblabel 'qubit excitation'\n");
            s.push_str("set view map\n");
            s.push_str(&format!("plot '{name}' using 2:1:3 with image title 'excitation'\n"));
        }
        PlotKind::Fwhm => {
            expect(&header, &FWHM_HEADER)?;
            s.push_str("set xlabel 'drive amplitude lambda (MHz)'\nset ylabel 'middle-peak FWHM (MHz)'\nset grid\n");
            s.push_str(&format!("plot '{name}' using 1:2 with linespoints pt 7 title 'FWHM'\n"));
        }
    }
    Ok(s)
}
