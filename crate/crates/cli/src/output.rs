//! Artifact writers: convergence table, elevation samples, plot script.
//!
//! All numeric output uses nine significant digits with `.` as the decimal
//! separator, independent of locale, so downstream tooling can diff runs
//! byte for byte (timing columns excepted — wall-clock time is the one
//! quantity a rerun cannot reproduce).

use cutplate::verify::{rate_between, ErrorReport, LevelReport, LevelSolution, Slopes};
use cutplate::Point;

/// Column header of `convergence.csv`.
pub const CSV_HEADER: &str = "level,h,n_dofs,errL2,errH1,errH2b,errEnergy,\
                              rateL2,rateH1,rateH2b,rateEnergy,cond_estimate,solve_seconds";

fn sig9(x: f64) -> String {
    format!("{x:.8e}")
}

/// Render the convergence table.
///
/// One row per level; the rate columns compare a level against its
/// predecessor and stay empty on the first row.
///
/// # Arguments
///
/// * `reports` - Per-level measurements in level order.
pub fn convergence_csv(reports: &[LevelReport]) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (i, r) in reports.iter().enumerate() {
        let rate = |pick: &dyn Fn(&ErrorReport) -> f64| -> String {
            if i == 0 {
                String::new()
            } else {
                sig9(rate_between(pick(&reports[i - 1].errors), pick(&r.errors)))
            }
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.level,
            sig9(r.h),
            r.n_dofs,
            sig9(r.errors.l2),
            sig9(r.errors.h1),
            sig9(r.errors.h2b),
            sig9(r.errors.energy),
            rate(&|e| e.l2),
            rate(&|e| e.h1),
            rate(&|e| e.h2b),
            rate(&|e| e.energy),
            sig9(r.cond_estimate),
            sig9(r.solve_seconds),
        ));
    }
    out
}

/// Sample the solved deflection on the level's node grid.
///
/// Rows are `x y value` with a blank line after each grid row (the gnuplot
/// `splot` grid convention); nodes outside the active mesh sample as `NaN`.
///
/// # Arguments
///
/// * `sol` - A solved level.
pub fn solution_grid(sol: &LevelSolution) -> String {
    let mesh = &sol.geo.mesh;
    let mut out = String::new();
    for iy in 0..=mesh.ny {
        for ix in 0..=mesh.nx {
            let p = Point::new(
                mesh.origin.x + ix as f64 * mesh.h,
                mesh.origin.y + iy as f64 * mesh.h,
            );
            let v = cutplate::verify::evaluate_at(&sol.geo, &sol.u, p).unwrap_or(f64::NAN);
            out.push_str(&format!("{} {} {}\n", sig9(p.x), sig9(p.y), sig9(v)));
        }
        out.push('\n');
    }
    out
}

/// Render a gnuplot script plotting the four normalized errors against `h`
/// on log-log axes with reference slopes 2, 3, and 4.
///
/// The reference lines anchor at the finest level so they track the data.
///
/// # Arguments
///
/// * `reports` - Per-level measurements in level order.
pub fn plot_script(reports: &[LevelReport]) -> String {
    let last = reports.last().expect("at least one level");
    let offset = 1.5;
    let c4 = offset * last.errors.l2 / last.h.powi(4);
    let c3 = offset * last.errors.h1 / last.h.powi(3);
    let c2 = offset * last.errors.h2b / last.h.powi(2);
    format!(
        "# Normalized errors versus cell size h (log-log) with reference\n\
         # slopes 2, 3, and 4.  Run:  gnuplot -p plot.gp\n\
         set datafile separator ','\n\
         set datafile missing 'NaN'\n\
         set logscale xy\n\
         set xlabel 'h'\n\
         set ylabel 'relative error'\n\
         set key bottom right\n\
         plot 'convergence.csv' every ::1 using 2:4 with linespoints lw 2 title 'L2', \\\n\
         \x20    '' every ::1 using 2:5 with linespoints lw 2 title 'H1', \\\n\
         \x20    '' every ::1 using 2:6 with linespoints lw 2 title 'broken H2', \\\n\
         \x20    '' every ::1 using 2:7 with linespoints lw 2 title 'energy', \\\n\
         \x20    {c4} * x**4 with lines dashtype 2 title 'h^4', \\\n\
         \x20    {c3} * x**3 with lines dashtype 2 title 'h^3', \\\n\
         \x20    {c2} * x**2 with lines dashtype 2 title 'h^2'\n",
        c4 = sig9(c4),
        c3 = sig9(c3),
        c2 = sig9(c2),
    )
}

/// One per-level progress line (stdout and `run.log`).
pub fn level_line(r: &LevelReport) -> String {
    format!(
        "level {}: h = {}, dofs = {}, errL2 = {}, cond ~ {:.3e}, backward error = {:.3e}, solve = {:.3} s",
        r.level,
        sig9(r.h),
        r.n_dofs,
        sig9(r.errors.l2),
        r.cond_estimate,
        r.rel_residual,
        r.solve_seconds,
    )
}

/// The fitted-slope summary line.
pub fn slopes_line(s: &Slopes) -> String {
    format!(
        "fitted slopes: L2 = {:.3}, H1 = {:.3}, H2b = {:.3}, energy = {:.3}",
        s.l2, s.h1, s.h2b, s.energy
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(level: usize, h: f64, err: f64) -> LevelReport {
        LevelReport {
            level,
            h,
            n_dofs: 100 * (level + 1),
            errors: ErrorReport { l2: err, h1: err * 10.0, h2b: err * 100.0, energy: err * 50.0 },
            cond_estimate: 1e6,
            rel_residual: 1e-15,
            solve_seconds: 0.5,
            center_value: 0.62,
        }
    }

    #[test]
    fn csv_has_one_row_per_level_and_empty_first_rates() {
        let reports = [report(0, 0.125, 1e-3), report(1, 0.0625, 6.25e-5)];
        let csv = convergence_csv(&reports);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("level,h,n_dofs,errL2"));
        // First data row: the four rate cells are empty.
        let first: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(first.len(), 13);
        assert_eq!(&first[7..11], &["", "", "", ""]);
        // Second data row: the errors drop by 2^4, so rateL2 is 4.
        let second: Vec<&str> = lines[2].split(',').collect();
        let rate: f64 = second[7].parse().unwrap();
        assert!((rate - 4.0).abs() < 1e-12);
    }

    #[test]
    fn csv_uses_nine_significant_digits() {
        let csv = convergence_csv(&[report(0, 0.125, 1.0 / 3.0)]);
        assert!(csv.contains("1.25000000e-1"));
        assert!(csv.contains("3.33333333e-1"));
    }

    #[test]
    fn plot_script_anchors_reference_lines_at_the_finest_level() {
        let reports = [report(0, 0.125, 1e-3), report(1, 0.0625, 6.25e-5)];
        let gp = plot_script(&reports);
        assert!(gp.contains("set logscale xy"));
        assert!(gp.contains("x**4"));
        assert!(gp.contains("x**3"));
        assert!(gp.contains("x**2"));
        // Anchor constant for the L2 reference line: 1.5 * err / h^4.
        let c4 = 1.5 * 6.25e-5 / 0.0625f64.powi(4);
        assert!(gp.contains(&format!("{c4:.8e}")));
    }
}
