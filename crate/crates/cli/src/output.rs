//! CSV emission. Comma-separated, `.` decimal, header row, LF endings; floats
//! carry 17 significant digits so a re-read is bitwise identical.

use std::time::{SystemTime, UNIX_EPOCH};

use fracint::field::SolutionField;

pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![])
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, String> {
    let bytes = w.into_inner().map_err(|e| e.to_string())?;
    String::from_utf8(bytes).map_err(|e| e.to_string())
}

/// `x,t,value` (1D) or `x,y,t,value` (2D), level by level.
pub fn field_csv(field: &SolutionField) -> Result<String, String> {
    let mut w = writer();
    let two_d = field.coords(0).1.is_some();
    let header: &[&str] = if two_d { &["x", "y", "t", "value"] } else { &["x", "t", "value"] };
    w.write_record(header).map_err(|e| e.to_string())?;
    for (n, &t) in field.times.iter().enumerate() {
        for p in 0..field.points() {
            let (x, y) = field.coords(p);
            let mut rec = vec![float(x)];
            if let Some(y) = y {
                rec.push(float(y));
            }
            rec.push(float(t));
            rec.push(float(field.value(p, n)));
            w.write_record(&rec).map_err(|e| e.to_string())?;
        }
    }
    finish(w)
}

/// Scheme contrast: one row per (scheme, rung), ready for log-log axes.
pub fn compare_csv(reports: &[fracint::analysis::ConvergenceReport]) -> Result<String, String> {
    let mut w = writer();
    w.write_record(["scheme", "rung", "dt", "error", "order"]).map_err(|e| e.to_string())?;
    let opt = |v: Option<f64>| v.map(float).unwrap_or_default();
    for r in reports {
        for rung in &r.rungs {
            w.write_record([
                r.spec.scheme.tag().to_string(),
                rung.rung.label(),
                float(rung.dt),
                opt(rung.linf),
                opt(rung.linf_order),
            ])
            .map_err(|e| e.to_string())?;
        }
    }
    finish(w)
}

/// The one line that differs between otherwise identical runs.
pub fn timestamp_line() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    format!("# generated at unix time {secs}\n")
}

pub fn with_header(body: String, timestamp: bool) -> String {
    if timestamp {
        timestamp_line() + &body
    } else {
        body
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            let s = float(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
    }
}
