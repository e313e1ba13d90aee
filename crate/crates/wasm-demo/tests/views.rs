use kwise_wasm::{curve, family, net_view, walk, CURVE_NS, FAMILIES};

#[test]
fn every_listed_family_builds() {
    for name in FAMILIES {
        assert!(family(name, 64).is_ok(), "{name}");
    }
    assert!(family("H", 32).is_err());
    assert!(family("nonsense", 64).is_err());
}

#[test]
fn walks_are_reproducible_unit_step_paths() {
    let a = walk("H", 256, 5).unwrap();
    assert_eq!(a, walk("H", 256, 5).unwrap());
    assert_eq!(a.len(), 257);
    assert_eq!(a[0], 0);
    assert!(a.windows(2).all(|w| (w[1] - w[0]).abs() == 1));
    assert_ne!(
        walk("4-wise", 256, 5).unwrap(),
        walk("4-wise", 256, 6).unwrap()
    );
}

#[test]
fn curve_has_one_point_per_size() {
    let c = curve("full", &CURVE_NS[..3], 1, 200, 1).unwrap();
    assert_eq!(c.len(), 3);
    // E sup|S_t| / sqrt(n) sits near sqrt(pi/2) for independent signs.
    assert!(c.iter().all(|&v| v > 0.8 && v < 1.6), "{c:?}");
    assert!(curve("full", &[], 1, 200, 1).is_err());
    assert!(curve("full", &[16, 32], 1, 200, 1).is_err());
}

#[test]
fn net_view_of_identity_stream() {
    let v = net_view("identity", 16, 0).unwrap();
    assert_eq!(v.norm_sq, 16);
    assert_eq!(v.levels.len(), 10);
    assert_eq!(v.levels[0], vec![0]);
    assert_eq!(v.levels[9], (0..=16).collect::<Vec<_>>());
    assert_eq!(v.prefix_norms_sq, (0..=16).collect::<Vec<u64>>());
    assert!(net_view("identity", 12, 0).is_err());
    let json = serde_json::to_value(&v).unwrap();
    assert_eq!(json["levels"][0][0], 0);
}
