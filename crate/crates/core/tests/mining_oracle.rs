//! Batch-hard mining against an exhaustive scan of every valid triplet.

mod support;

#[test]
fn batch_hard_equals_exhaustive_scan() {
    let nonempty = support::oracle::run_cases().unwrap();
    assert!(nonempty > 200);
}
