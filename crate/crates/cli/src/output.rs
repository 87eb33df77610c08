//! CSV and plain-PGM writers. Floats use `Display`, which prints the
//! shortest decimal that parses back to the same value.

use polaron_nm::{AveragedState64, BlpResult64, DistinguishabilityTrace64, Method, Trajectory};
use std::fmt::Write as _;

pub const TRACE_HEADER: &str = "method,t,Px,Py,Pz,ax,ay,az,D";
pub const SUMMARY_HEADER: &str = "method,N,tau_d,intervals";

pub fn trace_rows(out: &mut String, method: Method, traj: &Trajectory<f64, AveragedState64>, d: &DistinguishabilityTrace64) {
    for (k, s) in traj.states.iter().enumerate() {
        let [px, py, pz, ax, ay, az] = s.as_array();
        let _ = writeln!(out, "{},{},{px},{py},{pz},{ax},{ay},{az},{}", method.label(), traj.time(k), d.d[k]);
    }
}

/// Growth intervals as `start:end` pairs joined by `;`.
pub fn intervals(blp: &BlpResult64) -> String {
    blp.growth_intervals.iter().map(|(a, b)| format!("{a}:{b}")).collect::<Vec<_>>().join(";")
}

pub fn summary_row(out: &mut String, method: Method, blp: Option<&BlpResult64>, tau_d: Option<f64>) {
    let n = blp.map(|b| b.measure.to_string()).unwrap_or_default();
    let iv = blp.map(intervals).unwrap_or_default();
    let tau = tau_d.map(|t| t.to_string()).unwrap_or_default();
    let _ = writeln!(out, "{},{n},{tau},{iv}", method.label());
}

/// Grid rows in row-major order, `NaN` for failed cells.
pub fn grid_csv(names: [&str; 2], quantity: &str, a1: &[f64], a2: &[f64], values: &[f64]) -> String {
    let mut out = format!("{},{},{quantity}\n", names[0], names[1]);
    for (i, x) in a1.iter().enumerate() {
        for (j, y) in a2.iter().enumerate() {
            let _ = writeln!(out, "{x},{y},{}", values[i * a2.len() + j]);
        }
    }
    out
}

/// Plain (P2) graymap, one pixel row per axis-1 value. Finite values are
/// mapped linearly onto 0..=255, NaN cells are drawn mid-gray.
pub fn heatmap_pgm(rows: usize, cols: usize, values: &[f64], label: &str) -> String {
    const MAX: u32 = 255;
    const FAILED: u32 = 128;
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    let mut out = format!("P2\n# {label} from {lo} (black) to {hi} (white), failed cells gray\n{cols} {rows}\n{MAX}\n");
    for r in 0..rows {
        let line: Vec<String> = (0..cols)
            .map(|c| {
                let v = values[r * cols + c];
                let level = if !v.is_finite() {
                    FAILED
                } else if hi > lo {
                    ((v - lo) / (hi - lo) * MAX as f64).round() as u32
                } else {
                    0
                };
                level.to_string()
            })
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_layout() {
        let pgm = heatmap_pgm(2, 3, &[0.0, 1.0, 2.0, f64::NAN, 4.0, 4.0], "x");
        let lines: Vec<&str> = pgm.lines().collect();
        assert_eq!(lines[0], "P2");
        assert_eq!(lines[2], "3 2");
        assert_eq!(lines[3], "255");
        assert_eq!(lines[4], "0 64 128");
        assert_eq!(lines[5], "128 255 255");
    }

    #[test]
    fn grid_is_row_major() {
        let csv = grid_csv(["a", "b"], "v", &[1.0, 2.0], &[10.0, 20.0], &[1.0, 2.0, 3.0, f64::NAN]);
        assert_eq!(csv, "a,b,v\n1,10,1\n1,20,2\n2,10,3\n2,20,NaN\n");
    }
}
