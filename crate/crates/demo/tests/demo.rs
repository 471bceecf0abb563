use detsum_demo::{character_sums_value, det_distribution_value, sharpness_value};

#[test]
fn distribution_counts_every_pair() {
    let v = det_distribution_value("7", "1", "3", 40, 25, 9).unwrap();
    let counts: u64 = v["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(counts, 1000);
    assert_eq!(v["labels"].as_array().unwrap().len(), 7);
    assert_eq!(v, det_distribution_value("7", "1", "3", 40, 25, 9).unwrap());
    assert!(det_distribution_value("7", "0", "1", 4, 4, 0).is_err());
    assert!(det_distribution_value("7", "1", "1", 10_000, 4, 0).is_err());
    assert!(det_distribution_value("31", "1", "1", 4, 4, 0).is_err());
}

#[test]
fn sharpness_misses_zero() {
    let v = sharpness_value("5", "2").unwrap();
    assert_eq!(v["zero_missing"], true);
    assert_eq!(v["e"].as_array().unwrap().len(), 10);
    assert_eq!(v["h_size"], 20);
    assert!(sharpness_value("5", "1").is_err());
}

#[test]
fn character_sums_lie_on_expected_circles() {
    let v = character_sums_value("9").unwrap();
    let r = v["sqrt_q"].as_f64().unwrap();
    for z in v["gauss"].as_array().unwrap() {
        let (x, y) = (z[0].as_f64().unwrap(), z[1].as_f64().unwrap());
        assert!(((x * x + y * y).sqrt() - r).abs() < 1e-9);
    }
    for z in v["kloosterman"].as_array().unwrap() {
        let (x, y) = (z[0].as_f64().unwrap(), z[1].as_f64().unwrap());
        assert!((x * x + y * y).sqrt() <= 2.0 * r + 1e-9);
    }
    assert_eq!(v["g1_matches_prediction"], true);
}
