//! Activation files written by an independent encoder parse to the exact
//! values, and re-encode to the same bytes.

use lace::ingest::{encode_lact, parse_lact, read_lact, write_lact};

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/layer7.lact");
const UNLABELED: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/unlabeled.lact");

#[test]
fn fixture_parses_bit_identically() {
    let set = read_lact(FIXTURE).unwrap();
    assert_eq!((set.n(), set.d(), set.layer), (3, 4, Some(7)));
    assert_eq!(set.labels, Some(vec![0, 1, 2]));
    let expected: [f32; 12] = [
        0.5, -1.25, 3.0, 0.0, 1e-3, 7.0, -2.5, 0.125, 65504.0, -0.0, 1.5e-7, 42.0,
    ];
    for (got, want) in set.values.data().iter().zip(expected) {
        assert_eq!((*got as f32).to_bits(), want.to_bits());
    }
    let bytes = std::fs::read(FIXTURE).unwrap();
    assert_eq!(encode_lact(&set).unwrap(), bytes);
}

#[test]
fn unlabeled_fixture_has_no_labels() {
    let set = read_lact(UNLABELED).unwrap();
    assert_eq!(set.labels, None);
    assert_eq!(set.values.data(), &[1.0, 2.0, 3.0, 4.0]);
}

#[test]
fn file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("copy.lact");
    let set = read_lact(FIXTURE).unwrap();
    write_lact(&path, &set).unwrap();
    assert_eq!(read_lact(&path).unwrap(), set);
    assert_eq!(parse_lact(&std::fs::read(&path).unwrap()).unwrap(), set);
}
