//! CSV output of measure results and approximation traces.
//!
//! Floats are written in Rust's shortest round-trip form, so the output is
//! deterministic for equal inputs.

use crate::approx::{ApproxStep, BoundInterval};
use crate::dft::Valuation;
use crate::measures::MeasureResult;

pub const RESULT_HEADER: [&str; 6] = ["measure", "time", "value", "complement", "lower", "upper"];
pub const TRACE_HEADER: [&str; 6] = [
    "measure",
    "iteration",
    "elapsed_s",
    "states_explored",
    "lower",
    "upper",
];

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("writing to memory cannot fail");
    String::from_utf8(bytes).expect("csv output is UTF-8")
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn result_row(r: &MeasureResult) -> [String; 6] {
    [
        r.name.clone(),
        opt(r.time),
        num(r.value),
        opt(r.complement),
        String::new(),
        String::new(),
    ]
}

/// Exact results: the bound columns stay empty.
pub fn results_csv(results: &[MeasureResult]) -> String {
    let mut w = writer();
    w.write_record(RESULT_HEADER).unwrap();
    for r in results {
        w.write_record(result_row(r)).unwrap();
    }
    finish(w)
}

/// A certified interval; `value` is its midpoint. Probabilities get a
/// complement of the midpoint.
pub fn interval_csv(
    measure: &str,
    time: Option<f64>,
    probability: bool,
    interval: &BoundInterval,
) -> String {
    let mid = if interval.upper.is_finite() {
        0.5 * (interval.lower + interval.upper)
    } else {
        f64::INFINITY
    };
    let mut w = writer();
    w.write_record(RESULT_HEADER).unwrap();
    w.write_record([
        measure.to_string(),
        opt(time),
        num(mid),
        if probability { num(1.0 - mid) } else { String::new() },
        num(interval.lower),
        num(interval.upper),
    ])
    .unwrap();
    finish(w)
}

/// One row per refinement round.
pub fn trace_csv(measure: &str, trace: &[ApproxStep]) -> String {
    let mut w = writer();
    w.write_record(TRACE_HEADER).unwrap();
    for s in trace {
        w.write_record([
            measure.to_string(),
            s.iteration.to_string(),
            num(s.elapsed.as_secs_f64()),
            s.states_explored.to_string(),
            num(s.lower),
            num(s.upper),
        ])
        .unwrap();
    }
    finish(w)
}

/// Parameter columns (in `params` order) followed by the result columns.
pub fn sweep_csv(params: &[String], rows: &[(Valuation, MeasureResult)]) -> String {
    let mut w = writer();
    let header: Vec<&str> = params
        .iter()
        .map(|p| p.as_str())
        .chain(RESULT_HEADER)
        .collect();
    w.write_record(&header).unwrap();
    for (v, r) in rows {
        let mut rec: Vec<String> = params.iter().map(|p| opt(v.get(p).copied())).collect();
        rec.extend(result_row(r));
        w.write_record(&rec).unwrap();
    }
    finish(w)
}
