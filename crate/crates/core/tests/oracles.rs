mod common;

#[test]
fn table_operations_match_brute_force() {
    let mut r = common::rng(7);
    for _ in 0..200 {
        common::check_table(&mut r).unwrap();
    }
}

#[test]
fn forecasts_match_exact_least_squares() {
    let mut r = common::rng(8);
    for _ in 0..50 {
        common::check_forecast(&mut r).unwrap();
    }
}

#[test]
fn anomalies_match_integer_z_scores() {
    let mut r = common::rng(9);
    for _ in 0..200 {
        common::check_anomalies(&mut r).unwrap();
    }
}

#[test]
fn sig6_rounds_to_six_significant_digits() {
    assert_eq!(common::sig6(2.4), "2.4");
    assert_eq!(common::sig6(1234567.0), "1234570");
    assert_eq!(common::sig6(0.000123456789), "0.000123457");
    assert_eq!(common::sig6(-98.7654321), "-98.7654");
}
