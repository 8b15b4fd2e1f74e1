//! CSV reports. Every float is printed with 17 significant digits.
//! Scalar summaries follow the rows as `# name,value` footer lines.

use std::fmt::Write;

use minmorph_core::{DistortionReport, JacobianField, VolumeSchedule};

use crate::io::fmt_f64;

fn footer(out: &mut String, name: &str, value: f64) {
    writeln!(out, "# {name},{}", fmt_f64(value)).unwrap();
}

/// `simplex,source_measure,image_measure,jacobian`, one row per simplex.
pub fn jacobian_csv(field: &JacobianField) -> String {
    let mut out = String::from("simplex,source_measure,image_measure,jacobian\n");
    for (i, (j, w)) in field.values.iter().zip(&field.weights).enumerate() {
        writeln!(out, "{i},{},{},{}", fmt_f64(*w), fmt_f64(j * w), fmt_f64(*j)).unwrap();
    }
    out
}

/// `phi,phi_min,gap`.
pub fn map_distortion_csv(phi: f64, phi_min: f64) -> String {
    format!("phi,phi_min,gap\n{},{},{}\n", fmt_f64(phi), fmt_f64(phi_min), fmt_f64(phi - phi_min))
}

/// `t,vol,epsilon,max_jac_dev` per sample, with `phi_total` and
/// `phi_lower_bound` footers.
pub fn morph_distortion_csv(report: &DistortionReport) -> String {
    let mut out = String::from("t,vol,epsilon,max_jac_dev\n");
    for s in &report.per_time {
        writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(s.t),
            fmt_f64(s.volume),
            fmt_f64(s.epsilon),
            fmt_f64(s.max_jacobian_deviation)
        )
        .unwrap();
    }
    footer(&mut out, "phi_total", report.phi_total);
    footer(&mut out, "phi_lower_bound", report.phi_lower_bound);
    out
}

/// Extra footers for the `schedule` report.
pub struct ScheduleExtras {
    pub psi: f64,
    /// Value, gradient norm and convergence flag of the brute-force check.
    pub brute_force: Option<(f64, f64, bool)>,
}

/// `t,phi` on `times`, with a `psi` footer.
pub fn schedule_csv(schedule: &VolumeSchedule, times: &[f64], extras: &ScheduleExtras) -> String {
    let mut out = String::from("t,phi\n");
    for &t in times {
        writeln!(out, "{},{}", fmt_f64(t), fmt_f64(schedule.value_at(t))).unwrap();
    }
    footer(&mut out, "psi", extras.psi);
    if let Some((value, grad, converged)) = extras.brute_force {
        footer(&mut out, "psi_brute_force", value);
        footer(&mut out, "brute_force_grad_norm", grad);
        writeln!(out, "# brute_force_converged,{converged}").unwrap();
    }
    out
}

/// Reads the value of a `# name,value` footer line.
pub fn footer_value(csv: &str, name: &str) -> Option<f64> {
    let prefix = format!("# {name},");
    csv.lines().find_map(|l| l.strip_prefix(&prefix)).and_then(|v| v.trim().parse().ok())
}

#[cfg(test)]
mod tests {
    use super::*;
    use minmorph_core::morph::optimal_schedule;

    #[test]
    fn map_row_and_footer_lookup() {
        let csv = map_distortion_csv(2.0, 0.5);
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.ends_with(&format!("{}\n", fmt_f64(1.5))));
        let sched = optimal_schedule(1.0, 4.0).unwrap();
        let csv = schedule_csv(&sched, &[0.0, 0.5, 1.0], &ScheduleExtras { psi: 4.0, brute_force: None });
        assert_eq!(footer_value(&csv, "psi"), Some(4.0));
        assert_eq!(footer_value(&csv, "missing"), None);
        // sqrt(phi) linear: phi(1/2) = 1.5^2.
        assert!(csv.contains(&format!("{},{}", fmt_f64(0.5), fmt_f64(2.25))));
    }

    #[test]
    fn jacobian_rows_reconstruct_image_measures() {
        let field = JacobianField { values: vec![2.0, 0.5], weights: vec![1.5, 4.0] };
        let csv = jacobian_csv(&field);
        let rows: Vec<Vec<f64>> =
            csv.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
        assert_eq!(rows, vec![vec![0.0, 1.5, 3.0, 2.0], vec![1.0, 4.0, 2.0, 0.5]]);
    }
}
