use std::fmt::Write;

use super::model::{MilpModel, Sense, VarKind};

/// Fixed-point decimal rounded to 12 significant digits, trailing zeros trimmed.
pub(crate) fn format_number(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return match x {
            f64::INFINITY => "+inf".into(),
            f64::NEG_INFINITY => "-inf".into(),
            _ => "0".into(),
        };
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    let scale = 10f64.powi(magnitude - 11);
    let rounded = if magnitude > 11 {
        (x / scale).round() * scale
    } else {
        x
    };
    let mut s = format!("{rounded:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

fn write_terms(out: &mut String, model: &MilpModel, terms: impl Iterator<Item = (usize, f64)>) {
    for (k, (j, a)) in terms.enumerate() {
        if k > 0 && k % 6 == 0 {
            out.push_str("\n   ");
        }
        let sign = if a < 0.0 { '-' } else { '+' };
        let _ = write!(
            out,
            " {sign} {} {}",
            format_number(a.abs()),
            model.vars[j].name
        );
    }
}

/// Render a model in CPLEX LP text format.
pub fn write_lp(model: &MilpModel) -> String {
    let mut out = String::from("\\ transmission switching model\nMinimize\n obj:");
    let costs = model
        .vars
        .iter()
        .enumerate()
        .filter(|(_, v)| v.cost != 0.0)
        .map(|(j, v)| (j, v.cost));
    write_terms(&mut out, model, costs);
    out.push_str("\nSubject To\n");
    for row in &model.rows {
        let _ = write!(out, " {}:", row.name);
        write_terms(&mut out, model, row.terms.iter().copied());
        let op = match row.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", format_number(row.rhs));
    }
    out.push_str("Bounds\n");
    for v in &model.vars {
        if v.lower == v.upper {
            let _ = writeln!(out, " {} = {}", v.name, format_number(v.lower));
        } else if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
            let _ = writeln!(out, " {} free", v.name);
        } else {
            let _ = writeln!(
                out,
                " {} <= {} <= {}",
                format_number(v.lower),
                v.name,
                format_number(v.upper)
            );
        }
    }
    out.push_str("Binaries\n");
    for v in model.vars.iter().filter(|v| v.kind == VarKind::Binary) {
        let _ = writeln!(out, " {}", v.name);
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(10.0), "10");
        assert_eq!(format_number(-2.5), "-2.5");
        assert_eq!(format_number(std::f64::consts::PI), "3.14159265359");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_number(314.159265358979), "314.159265359");
        assert_eq!(format_number(1234567890123456.0), "1234567890120000");
        assert_eq!(format_number(f64::INFINITY), "+inf");
    }
}
