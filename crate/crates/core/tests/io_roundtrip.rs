use eestim::estimators::EstimationTrace;
use eestim::io::{
    format_edge_list, format_state, parse_edge_list, parse_state, read_state, read_trace_file, write_state,
    write_trace_file,
};
use eestim::{BinaryState, Encoding, Error, Layout};
use proptest::prelude::*;

fn layouts() -> impl Strategy<Value = (Encoding, Layout)> {
    prop_oneof![
        (1usize..6, 1usize..6).prop_map(|(rows, cols)| (Encoding::Spin, Layout::Grid { rows, cols })),
        (1usize..12).prop_map(|len| (Encoding::Spin, Layout::Chain { len })),
        (2usize..6).prop_map(|nodes| (Encoding::Tie, Layout::Digraph { nodes })),
    ]
}

proptest! {
    #[test]
    fn states_survive_a_round_trip((enc, layout) in layouts(), code in any::<u64>(), crlf in any::<bool>()) {
        let code = code & ((1u64 << layout.len()) - 1);
        let x = BinaryState::from_code(enc, layout, code);
        let mut text = format_state(&x);
        if crlf {
            text = text.replace('\n', "\r\n");
        }
        prop_assert_eq!(parse_state(&text).unwrap(), x);
    }

    #[test]
    fn edge_lists_survive_a_round_trip(nodes in 2usize..7, code in any::<u64>()) {
        let layout = Layout::Digraph { nodes };
        let x = BinaryState::from_code(Encoding::Tie, layout, code & ((1u64 << layout.len()) - 1));
        prop_assert_eq!(parse_edge_list(&format_edge_list(&x).unwrap()).unwrap(), x);
    }

    #[test]
    fn traces_survive_a_round_trip(rows in prop::collection::vec((prop::collection::vec(-1e3f64..1e3, 3), any::<u32>()), 1..20)) {
        let mut trace = EstimationTrace::new(3);
        for (v, acc) in &rows {
            let d: Vec<f64> = v.iter().map(|x| x.round()).collect();
            trace.push(v, &d, *acc as u64);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        write_trace_file(&path, &trace).unwrap();
        prop_assert_eq!(read_trace_file(&path).unwrap(), trace);
    }
}

#[test]
fn trace_header_has_two_columns_per_parameter_plus_two() {
    let mut trace = EstimationTrace::new(4);
    trace.push(&[0.1, 0.2, 0.3, 0.4], &[1.0, -1.0, 0.0, 2.0], 1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    write_trace_file(&path, &trace).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 2 * 4 + 2);
}

#[test]
fn state_files_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.txt");
    let x = BinaryState::new(Encoding::Spin, Layout::Grid { rows: 2, cols: 3 }, vec![1, -1, 1, 1, 1, -1]).unwrap();
    write_state(&path, &x).unwrap();
    assert_eq!(read_state(&path).unwrap(), x);
}

#[test]
fn malformed_files_report_the_line() {
    let err = parse_state("spin 2 2\n1 -1\n1 0\n").unwrap_err();
    assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    let err = parse_edge_list("3\r\n0 1\r\n2 2\r\n").unwrap_err();
    assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
}
