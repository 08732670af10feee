use ness_core::quasifree::{FormFactor, TemperaturePair};
use ness_core::validator::{reference_b_limit, build_reference_instance, check_support_and_smoothness, validate};

#[test]
fn admissible_grid_passes() {
    let temps = TemperaturePair::new(2.0, 1.0).unwrap();
    for i in 0..10 {
        let v = 0.05 + 0.9 * i as f64 / 9.0;
        for j in 0..10 {
            let b = reference_b_limit(v) * (0.05 + 0.9 * j as f64 / 9.0);
            let inst = build_reference_instance(v, b, temps).unwrap();
            let report = validate(&inst).unwrap();
            assert!(report.all_passed, "v={v}, b={b}: {report:?}");
            assert!((report.coupling.min_delta0.unwrap() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn shrinking_the_support_keeps_a_pass() {
    let inst = build_reference_instance(0.25, 0.1, TemperaturePair::new(2.0, 1.0).unwrap()).unwrap();
    assert!(check_support_and_smoothness(&inst).unwrap().passed);
    let [(a, b), (c, d)] = [inst.form_factor.support()[0], inst.form_factor.support()[1]];
    for shrink in [0.1, 0.3, 0.45] {
        let (wl, wr) = ((b - a) * shrink, (d - c) * shrink);
        let mut smaller = inst.clone();
        smaller.form_factor = FormFactor::bump(&[(a + wl, b - wl), (c + wr, d - wr)]).unwrap();
        assert!(check_support_and_smoothness(&smaller).unwrap().passed);
    }
}

#[test]
fn report_json_is_byte_identical() {
    let temps = TemperaturePair::new(1.5, 0.7).unwrap();
    let a = serde_json::to_string(&validate(&build_reference_instance(0.4, 0.08, temps).unwrap()).unwrap()).unwrap();
    let b = serde_json::to_string(&validate(&build_reference_instance(0.4, 0.08, temps).unwrap()).unwrap()).unwrap();
    assert_eq!(a, b);
    assert!(a.starts_with("{\"support_and_smoothness\":"));
}
