use std::fmt::Write as _;
use std::path::Path;

use crate::harness::ExperimentRecord;

use super::config::ExperimentKind;
use super::experiments::ExperimentOutput;

pub const CSV_HEADER: &str = "alpha,delta,seed,defect_J,defect_T,residual_sq,bregman_noisy,psi,bound,violation";

/// Records in the given order, floats with 17 significant digits.
pub fn format_csv(records: &[ExperimentRecord]) -> String {
    let mut out = String::with_capacity(64 + 200 * records.len());
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.alpha, r.delta, r.seed, r.defect_j, r.defect_t, r.residual_sq, r.bregman_noisy, r.psi, r.bound, r.violation
        );
    }
    out
}

/// One line per check plus any notes.
pub fn report(output: &ExperimentOutput) -> String {
    let mut s = format!("experiment: {}\n", output.experiment);
    for c in &output.checks {
        let _ = writeln!(s, "[{}] {}", if c.passed { "PASS" } else { "FAIL" }, c.detail);
    }
    for n in &output.notes {
        let _ = writeln!(s, "note: {n}");
    }
    let failed = output.checks.iter().filter(|c| !c.passed).count();
    let _ = writeln!(s, "{} checks, {} failed", output.checks.len(), failed);
    s
}

/// Gnuplot script for the noisy distance against the splitting bound.
pub fn plot_script(csv: &Path, experiment: ExperimentKind) -> String {
    let csv = csv.display();
    format!(
        "# gnuplot script for {experiment}\n\
         set datafile separator ','\n\
         set key autotitle columnhead\n\
         set logscale xy\n\
         set xlabel 'alpha'\n\
         set ylabel 'value'\n\
         set terminal pngcairo size 900,600\n\
         set output '{experiment}.png'\n\
         plot '{csv}' using 1:7 with points title 'bregman_noisy', \\\n\
         \x20    '{csv}' using 1:9 with points title 'bound', \\\n\
         \x20    '{csv}' using 1:4 with linespoints title 'defect_J'\n"
    )
}
