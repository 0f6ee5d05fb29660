//! gnuplot script emission for finished run directories.
//!
//! The script is self-contained: it renders a log-scale two-panel
//! distribution figure and a growth figure with oscillator A as circles
//! and B as crosses, or the classical energy/variance figures, from the
//! CSVs sitting next to it.

use std::path::Path;

use crate::error::CliError;

const QUANTUM_SCRIPT: &str = r#"# Generated by ratchet; run with: gnuplot plots.gp
set datafile separator ','
set terminal pngcairo size 1200,480 enhanced

set output 'distributions.png'
set multiplot layout 1,2
set logscale y
set xlabel 'n'
set ylabel 'P(n)'
set title 'Oscillator A'
plot 'dist_final.csv' skip 1 using 1:2 with points pt 6 lc rgb 'navy' title 'p_a'
set title 'Oscillator B'
plot 'dist_final.csv' skip 1 using 1:3 with points pt 2 lc rgb 'dark-red' title 'p_b'
unset multiplot
unset logscale y

set output 'growth.png'
set xlabel 'encounter'
set ylabel 'mean excitation'
set title 'Average excitation level'
plot 'growth.csv' skip 1 using 1:2 with points pt 6 lc rgb 'navy' title 'A', \
     'growth.csv' skip 1 using 1:3 with points pt 2 lc rgb 'dark-red' title 'B'
"#;

const CLASSICAL_SCRIPT: &str = r#"# Generated by ratchet; run with: gnuplot plots.gp
set datafile separator ','
set terminal pngcairo size 1200,480 enhanced

set output 'classical.png'
set multiplot layout 1,2
set xlabel 'toggle'
set logscale y
set ylabel 'mean E'
set title 'Mean energy'
plot 'classical.csv' skip 1 using 1:4 with points pt 6 lc rgb 'navy' title 'mean E'
unset logscale y
set ylabel 'var(log E)'
set title 'Log-energy variance'
plot 'classical.csv' skip 1 using 1:3 with points pt 2 lc rgb 'dark-red' title 'var log E'
unset multiplot
"#;

const SERIES_SCRIPT: &str = r#"# Generated by ratchet; run with: gnuplot plots.gp
set datafile separator ','
set terminal pngcairo size 800,480 enhanced

set output 'shorttime.png'
set logscale xy
set xlabel 't'
set ylabel 'energy gain'
set title 'Exact vs quadratic short-time law'
plot 'series.csv' skip 1 using 1:2 with points pt 6 lc rgb 'navy' title 'exact', \
     'series.csv' skip 1 using 1:3 with lines lc rgb 'dark-red' title 'c_2 t^2'
"#;

/// Write `plots.gp` matching whichever result CSVs exist in `dir`.
pub fn emit_plot_script(dir: &Path) -> Result<(), CliError> {
    if !dir.is_dir() {
        return Err(CliError::Validation(format!(
            "{} is not a directory",
            dir.display()
        )));
    }
    let script = if dir.join("growth.csv").is_file() && dir.join("dist_final.csv").is_file() {
        QUANTUM_SCRIPT
    } else if dir.join("classical.csv").is_file() {
        CLASSICAL_SCRIPT
    } else if dir.join("series.csv").is_file() {
        SERIES_SCRIPT
    } else {
        return Err(CliError::Validation(format!(
            "{} holds no plottable result CSVs",
            dir.display()
        )));
    };
    std::fs::write(dir.join("plots.gp"), script)?;
    Ok(())
}
