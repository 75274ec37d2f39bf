use std::path::PathBuf;

use cp_bures::io::{map_to_json, parse_map, read_map, MapFile};
use cp_bures::random::{random_cp_map, seeded};
use cp_bures::{bures_intertwiner, CMat, CpMap, Error};
use proptest::prelude::*;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

#[test]
fn fixtures_parse_to_the_expected_maps() {
    let e11 = read_map(&fixture("corner_e11.json")).unwrap();
    assert_eq!(e11.choi(), CpMap::conjugation(&CMat::unit(2, 2, 0, 0)).unwrap().choi());
    let e12 = read_map(&fixture("corner_e12.json")).unwrap();
    assert_eq!(e12.choi(), CpMap::conjugation(&CMat::unit(2, 2, 0, 1)).unwrap().choi());
    let id = read_map(&fixture("identity_2.json")).unwrap();
    assert_eq!(id.choi(), CpMap::identity(2).choi());

    let p = read_map(&fixture("classical_state_10.json")).unwrap();
    assert_eq!((p.dim_in(), p.dim_out()), (2, 1));
    let half = read_map(&fixture("classical_state_half.json")).unwrap();
    assert!((half.apply(&CMat::identity(2)).unwrap()[(0, 0)].re - 1.0).abs() < 1e-15);
}

#[test]
fn transpose_gap_fixture_value() {
    let phi1 = read_map(&fixture("transpose_gap_phi1.json")).unwrap();
    let phi2 = read_map(&fixture("transpose_gap_phi2.json")).unwrap();
    let beta = bures_intertwiner(&phi1, &phi2, 1e-8).unwrap().value;
    assert!((beta * beta - (5.0 - 2f64.sqrt() - 6f64.sqrt())).abs() < 1e-6);
}

#[test]
fn negative_choi_fixture_names_the_eigenvalue() {
    match read_map(&fixture("negative_choi.json")) {
        Err(Error::NotPsd(v)) => assert!((v + 0.1).abs() < 1e-12),
        other => panic!("expected NotPsd, got {other:?}"),
    }
}

#[test]
fn missing_file_is_a_parse_error() {
    assert!(matches!(read_map(&fixture("no_such_map.json")), Err(Error::Parse(_))));
}

#[test]
fn schema_violations() {
    for text in [
        "[]",
        r#"{"dim_in": 2}"#,
        r#"{"dim_in": 2, "dim_out": 2, "kraus": []}"#,
        r#"{"dim_in": 2, "kraus": [[[[1,0]]]]}"#,
        r#"{"choi": [[[1,0],[0,0],[0,0]],[[0,0],[1,0],[0,0]],[[0,0],[0,0],[1,0]]]}"#,
        r#"{"kraus": [[[[1,0,3]]]]}"#,
    ] {
        assert!(parse_map(text).is_err(), "accepted {text}");
    }
    assert!(matches!(
        parse_map(r#"{"choi": [[[1,0],[1,0]],[[0,0],[1,0]]], "dim_in": 1, "dim_out": 2}"#),
        Err(Error::NonHermitian(_))
    ));
}

#[test]
fn kraus_form_round_trip() {
    let mut rng = seeded(51);
    let phi = random_cp_map(&mut rng, 3, 2, 2);
    let text = serde_json::to_string(&MapFile::kraus_form(&phi)).unwrap();
    let back = parse_map(&text).unwrap();
    assert!((back.choi() - phi.choi()).max_abs() < 1e-13);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn choi_form_round_trips_bit_for_bit(seed in any::<u64>(), n in 1usize..=3, m in 1usize..=3, r in 1usize..=3) {
        let mut rng = seeded(seed);
        let phi = random_cp_map(&mut rng, n, m, r);
        let back = parse_map(&map_to_json(&phi)).unwrap();
        prop_assert_eq!(back.choi(), phi.choi());
        prop_assert_eq!(back.dim_in(), n);
        prop_assert_eq!(back.dim_out(), m);
    }
}
