//! Every shipped definition file parses and behaves as documented.

use std::path::PathBuf;

use adiclab::smooth::parse_map;
use adiclab::symbolic::{parse_system, PointSpec};

fn data(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name);
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn all_shipped_sets_parse_with_expected_dimensions() {
    let cases = [
        ("cantor3.set", 2f64.ln() / 3f64.ln()),
        ("goldenmean2.set", ((1.0 + 5f64.sqrt()) / 2.0).ln() / 2f64.ln()),
        ("fullshift2.set", 1.0),
        ("fullshift3.set", 1.0),
        ("zeroplus3.set", 0.0),
    ];
    for (file, dim) in cases {
        let sys = parse_system(&data(file)).unwrap();
        let (_, d) = sys.entropy_exact().unwrap();
        assert!((d - dim).abs() < 1e-10, "{file}: dimension {d}, expected {dim}");
    }
}

#[test]
fn all_shipped_maps_parse_and_evaluate() {
    for file in [
        "identity.map",
        "double_shift.map",
        "scale_third.map",
        "square.map",
        "logistic.map",
        "moebius.map",
    ] {
        let f = parse_map(&data(file)).unwrap();
        let (v, d) = f.eval(0.5).unwrap();
        assert!(v.is_finite() && d.is_finite() && d != 0.0, "{file}");
    }
}

#[test]
fn shipped_point_examples_are_admissible() {
    let cantor = parse_system(&data("cantor3.set")).unwrap();
    assert!(cantor.is_admissible(&PointSpec::parse("0:0").unwrap()));
    assert!(cantor.is_admissible(&PointSpec::parse(":02").unwrap()));
    assert!(!cantor.is_admissible(&PointSpec::parse(":1").unwrap()));
    let zp = parse_system(&data("zeroplus3.set")).unwrap();
    assert!(zp.is_admissible(&PointSpec::parse("001:0").unwrap()));
    assert!(!zp.is_admissible(&PointSpec::parse("011:0").unwrap()));
}
