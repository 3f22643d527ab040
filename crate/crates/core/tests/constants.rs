//! The published language constants must not drift from the golden file.

#[test]
fn published_constants_match_golden_file() {
    let golden = include_str!("../constants.txt");
    assert_eq!(sublab::codec::published_constants(), golden);
}

#[test]
fn fingerprint_tracks_the_constants() {
    let fp = sublab::enumerator::fingerprint();
    assert_eq!(fp.len(), 64);
    assert_eq!(fp, sublab::enumerator::fingerprint());
}
