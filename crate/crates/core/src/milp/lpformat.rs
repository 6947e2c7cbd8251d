//! Debug dump of a [`MilpModel`] as plain text.
//!
//! Grammar (one item per line, `#` starts a comment):
//!
//! ```text
//! model    := "minimize" NL obj "subject to" NL row* "bounds" NL bound* sections "end"
//! obj      := "  obj:" terms [ "+ " offset ] NL
//! row      := "  " name ":" terms rel rhs NL
//! terms    := ( " " sign " " coeff " " var )*
//! rel      := "<=" | "=" | ">="
//! bound    := "  " lo " <= " var " <= " hi NL      (lo/hi may be -inf / +inf)
//! sections := [ "binary" NL ( "  " var NL )* ] [ "general" NL ( "  " var NL )* ]
//! ```
//!
//! Names are emitted verbatim; the format is for reading, not a
//! compatibility promise.

use std::fmt::Write;

use super::model::{Integrality, MilpModel};

fn terms(out: &mut String, model: &MilpModel, coeffs: impl Iterator<Item = (usize, f64)>) {
    let mut any = false;
    for (j, a) in coeffs {
        if a == 0.0 {
            continue;
        }
        any = true;
        let sign = if a < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {}", a.abs(), model.var_label(j));
    }
    if !any {
        out.push_str(" 0");
    }
}

fn bound(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

pub(super) fn write(model: &MilpModel) -> String {
    let mut out = String::new();
    out.push_str("minimize\n  obj:");
    terms(&mut out, model, model.objective.iter().copied().enumerate());
    if model.objective_offset != 0.0 {
        let _ = write!(out, " + {}", model.objective_offset);
    }
    out.push_str("\nsubject to\n");
    for (i, c) in model.constraints.iter().enumerate() {
        let _ = write!(out, "  {}:", model.row_label(i));
        terms(&mut out, model, c.coeffs.iter().copied());
        let _ = writeln!(out, " {} {}", c.relation, c.rhs);
    }
    out.push_str("bounds\n");
    for j in 0..model.num_vars() {
        let _ = writeln!(out, "  {} <= {} <= {}", bound(model.lower[j]), model.var_label(j), bound(model.upper[j]));
    }
    for (kind, title) in [(Integrality::Binary, "binary"), (Integrality::Integer, "general")] {
        let vars: Vec<usize> = (0..model.num_vars()).filter(|&j| model.integrality[j] == kind).collect();
        if !vars.is_empty() {
            let _ = writeln!(out, "{title}");
            for j in vars {
                let _ = writeln!(out, "  {}", model.var_label(j));
            }
        }
    }
    out.push_str("end\n");
    out
}
