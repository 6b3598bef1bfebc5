//! Text and CSV renderers. Every number goes through [`fmt_num`] so files are
//! byte-stable for identical inputs.

use smcga_core::ga::GaReport;
use smcga_core::sim::SimResult;
use smcga_core::{SmcGains, Vector3};
use std::fmt::Write;

pub const TRACE_HEADER: &str = "t,q1,q2,q3,qd1,qd2,qd3,e1,e2,e3,s1,s2,s3,tau1,tau2,tau3,V";
pub const HISTORY_HEADER: &str = "generation,best_fitness,mean_fitness";

/// Formats `x` with 9 significant digits, like C's `%.9g`.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    } else {
        format!(
            "{}e{}{:02}",
            trim_fraction(mantissa),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn push_vec(line: &mut String, v: &Vector3<f64>) {
    for x in v.iter() {
        line.push(',');
        line.push_str(&fmt_num(*x));
    }
}

pub fn trace_csv(result: &SimResult) -> String {
    let mut out = String::with_capacity(result.rows.len() * 200);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &result.rows {
        out.push_str(&fmt_num(r.t));
        for v in [&r.q, &r.q_ref, &r.e, &r.s, &r.tau] {
            push_vec(&mut out, v);
        }
        out.push(',');
        out.push_str(&fmt_num(r.lyapunov));
        out.push('\n');
    }
    out
}

pub fn summary_text(result: &SimResult) -> String {
    let m = &result.metrics;
    let mut out = String::new();
    let _ = writeln!(out, "rows = {}", result.rows.len());
    let _ = writeln!(out, "ise = {}", fmt_num(m.ise));
    let _ = writeln!(
        out,
        "e_max_window_start = {}",
        fmt_num(m.e_max_window_start)
    );
    for j in 0..3 {
        let value = m.e_max.map_or("n/a".to_string(), |e| fmt_num(e[j]));
        let _ = writeln!(out, "e_max{} = {value}", j + 1);
    }
    let _ = writeln!(
        out,
        "lyapunov_violation_fraction = {}",
        fmt_num(m.sliding.lyapunov_violation_fraction)
    );
    for j in 0..3 {
        let value = m.sliding.reaching_residual_median[j].map_or("n/a".to_string(), fmt_num);
        let _ = writeln!(out, "reaching_residual_median{} = {value}", j + 1);
    }
    let _ = writeln!(out, "min_abs_mass_det = {}", fmt_num(m.min_abs_mass_det));
    let _ = writeln!(out, "mass_det_sign_changes = {}", m.mass_det_sign_changes);
    let _ = writeln!(out, "max_mass_cond = {}", fmt_num(m.max_mass_cond));
    out
}

pub fn history_csv(report: &GaReport) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for (g, h) in report.history.iter().enumerate() {
        let _ = writeln!(
            out,
            "{g},{},{}",
            fmt_num(h.best_fitness),
            fmt_num(h.mean_fitness)
        );
    }
    out
}

/// A config fragment that `--gains PATH` can load back. Values use the
/// shortest exact representation.
pub fn gains_fragment(gains: &SmcGains, report: &GaReport) -> String {
    let values: Vec<String> = gains.to_array().iter().map(|g| g.to_string()).collect();
    format!(
        "# c1..c6, lambda1..lambda3\n# best_fitness = {}, generations_used = {}, converged = {}\ngains = {}\n",
        fmt_num(report.best.fitness.unwrap_or(f64::NAN)),
        report.generations_used,
        report.converged,
        values.join(",")
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(0.1), "0.1");
        assert_eq!(fmt_num(2.0 / 3.0), "0.666666667");
        assert_eq!(fmt_num(356.400569), "356.400569");
        assert_eq!(fmt_num(65071.75), "65071.75");
        assert_eq!(fmt_num(-39.47841760435743), "-39.4784176");
        assert_eq!(fmt_num(123456789.4), "123456789");
        assert_eq!(fmt_num(1234567890.0), "1.23456789e+09");
        assert_eq!(fmt_num(1.5e-5), "1.5e-05");
        assert_eq!(fmt_num(1.5e-4), "0.00015");
        assert_eq!(fmt_num(9.9999999996), "10");
        assert_eq!(fmt_num(1e9), "1e+09");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
    }
}
