use std::io::Write;

use proptest::prelude::*;
use schottky_mem::device::{IvSample, IvTrace};
use schottky_mem::trace::{TimeSeriesTrace, TraceMeta, TraceRecord};
use schottky_mem_cli::config::Format;
use schottky_mem_cli::error::CliError;
use schottky_mem_cli::io::{ingest_trace, read_trace, Table};

fn parse(text: &str) -> Result<TimeSeriesTrace, CliError> {
    read_trace(text.as_bytes(), TraceMeta::default())
}

fn input_message(r: Result<TimeSeriesTrace, CliError>) -> String {
    match r {
        Err(CliError::Input(m)) => m,
        other => panic!("expected an input error, got {other:?}"),
    }
}

#[test]
fn three_rows_give_three_records() {
    let t = parse("t_s,v_V,i_A\n1,0.3,1e-9\n2,0.3,8e-10\n3,0.3,7e-10\n").unwrap();
    assert_eq!(t.len(), 3);
    assert_eq!(t.records()[1], TraceRecord { t: 2.0, v: 0.3, i: 8e-10 });
}

#[test]
fn spaces_around_fields_are_accepted() {
    let t = parse("t_s, v_V, i_A\n1, 0.3, 1e-9\n").unwrap();
    assert_eq!(t.len(), 1);
}

#[test]
fn nan_current_is_rejected_at_its_line() {
    let m = input_message(parse("t_s,v_V,i_A\n1,0.3,1e-9\n2,0.3,NaN\n"));
    assert!(m.contains("line 3"), "{m}");
}

#[test]
fn malformed_number_reports_line() {
    let m = input_message(parse("t_s,v_V,i_A\n1,0.3,1e-9\n2,0.3,1e-9\n3,abc,1e-9\n"));
    assert!(m.contains("line 4") && m.contains("v_V"), "{m}");
}

#[test]
fn short_row_reports_line() {
    let m = input_message(parse("t_s,v_V,i_A\n1,0.3\n"));
    assert!(m.contains("line 2"), "{m}");
}

#[test]
fn empty_inputs_are_rejected() {
    assert!(input_message(parse("")).contains("empty"));
    assert!(input_message(parse("t_s,v_V,i_A\n")).contains("empty"));
}

#[test]
fn wrong_header_is_rejected() {
    let m = input_message(parse("time,v,i\n1,0.3,1e-9\n"));
    assert!(m.contains("line 1"), "{m}");
}

#[test]
fn non_monotone_time_is_a_validation_error() {
    let m = input_message(parse("t_s,v_V,i_A\n1,0.3,1e-9\n3,0.3,1e-9\n2,0.3,1e-9\n"));
    assert!(m.contains("line 4") && m.contains("does not increase"), "{m}");
}

#[test]
fn missing_file_is_io_error() {
    let err = ingest_trace(std::path::Path::new("/nonexistent/trace.csv")).unwrap_err();
    assert!(matches!(err, CliError::Io(_)));
    assert_eq!(err.exit_code(), 4);
}

#[test]
fn file_errors_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::File::create(&path).unwrap().write_all(b"t_s,v_V,i_A\n1,0.3,inf\n").unwrap();
    let err = ingest_trace(&path).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("bad.csv") && err.to_string().contains("line 2"));
}

#[test]
fn device_trace_reads_back_through_first_columns() {
    let s = |t: f64, v: f64| IvSample { t, v, i: v * 1e-9, i_center: 1.0, i_edge: 2.0, n_center: 3.0, n_edge: 4.0 };
    let iv = IvTrace { samples: vec![s(0.0, 0.0), s(0.1, 0.152), s(0.2, 0.304)], meta: TraceMeta::default() };
    let table = Table::from_iv(&iv);
    assert_eq!(table.columns.len(), 7);
    let mut buf = Vec::new();
    table.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t_s,v_V,i_A,i_center_A,i_edge_A,n_center_per_m3,n_edge_per_m3\n"));
    let back = parse(&text).unwrap();
    assert_eq!(back.records(), iv.to_time_series().unwrap().records());
}

#[test]
fn json_tables_keep_columns_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mut t = Table::new(&["a", "b"]);
    t.push(vec![1.0, 0.1 + 0.2]);
    let name = t.write(dir.path(), "tab", Format::Json).unwrap();
    assert_eq!(name, "tab.json");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join(name)).unwrap()).unwrap();
    assert_eq!(v["columns"][1], "b");
    assert_eq!(v["rows"][0][1].as_f64().unwrap(), 0.1 + 0.2);
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
        -1e3..1e3f64,
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
        Just(5e-324),
    ]
}

proptest! {
    #[test]
    fn export_then_ingest_is_bitwise_lossless(
        steps in prop::collection::vec((1e-12..1e3f64, finite(), finite()), 1..40),
        t0 in -1e6..1e6f64,
    ) {
        let mut t = t0;
        let mut records = Vec::new();
        for (dt, v, i) in steps {
            let next = t + dt;
            prop_assume!(next > t);
            t = next;
            records.push(TraceRecord { t, v, i });
        }
        let trace = TimeSeriesTrace::from_records(records, TraceMeta::default()).unwrap();
        let mut buf = Vec::new();
        Table::from_trace(&trace).write_csv(&mut buf).unwrap();
        let back = parse(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(back.len(), trace.len());
        for (a, b) in back.records().iter().zip(trace.records()) {
            prop_assert_eq!(a.t.to_bits(), b.t.to_bits());
            prop_assert_eq!(a.v.to_bits(), b.v.to_bits());
            prop_assert_eq!(a.i.to_bits(), b.i.to_bits());
        }
    }
}
