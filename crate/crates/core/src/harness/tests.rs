use super::*;
use crate::flow::{almost_kahler_initial, scf_tendency};
use crate::samples::{ConformallyFlat, KahlerPotential, RandomHermitian, SpherePair};

fn jet_input<const N: usize, S: AnalyticStructure<N>>(s: &S, name: &str) -> Input<'static, f64, N> {
    let x: [f64; N] = std::array::from_fn(|i| SAMPLE_POINT[i] + 0.1 * i as f64);
    Input::Jet { name: name.into(), jet: s.jet(&x).unwrap() }
}

fn by_name<'a>(r: &'a [IdentityReport], id: Identity) -> &'a IdentityReport {
    r.iter().find(|x| x.identity == id.name()).unwrap()
}

#[test]
fn presets_satisfy_every_identity_quickly() {
    let t0 = std::time::Instant::now();
    let r = verify_presets().unwrap();
    assert_eq!(r.len(), 21);
    for x in &r {
        assert!(x.pass, "{x:?}");
    }
    assert!(t0.elapsed().as_secs_f64() < 1.0);
    assert_eq!(conventions_check().unwrap().len(), 7);
}

#[test]
fn almost_kahler_jets_satisfy_every_identity() {
    let tol = crate::tol::DEFAULT.identity_exact;
    for r in check_all(&jet_input(&ExactPerturbation::<4>::random(11, 3, 0.3), "ak4"), tol).unwrap() {
        assert!(r.pass, "{r:?}");
    }
    for r in check_all(&jet_input(&ExactPerturbation::<6>::random(12, 2, 0.2), "ak6"), tol).unwrap() {
        assert!(r.pass, "{r:?}");
    }
    for r in check_all(&jet_input(&KahlerPotential::<4>::random(13, 2, 0.2), "kahler"), tol).unwrap() {
        assert!(r.pass, "{r:?}");
    }
}

#[test]
fn closedness_hypothesis_is_visible_on_hermitian_jets() {
    let r = check_all(&jet_input(&RandomHermitian::<4>::random(14, 2, 0.3), "herm"), 1e-9).unwrap();
    for id in Identity::ALL {
        let x = by_name(&r, id);
        // the general identities close; the ones assuming dω = 0 must not
        assert_eq!(x.pass, !id.needs_closed(), "{x:?}");
    }
    assert!(by_name(&r, Identity::FlowConsistency).sup > 1e-3);
}

#[test]
fn corrupted_variation_is_rejected() {
    let jet = ExactPerturbation::<4>::random(3, 2, 0.2).jet(&[0.1, 0.2, 0.3, 0.4]).unwrap();
    let l = jet.lifted();
    let (dg, k) = hermitian::scf_rhs(&l);
    let (a, b) = variation_residuals(&l.g.g, &l.j, &dg, &k);
    assert!(a < 1e-12 && b < 1e-12);
    // a J-commuting piece breaks JK + KJ = 0
    let bad = mat::add(&k, &mat::scale(1e-3, &l.j));
    let (a, _) = variation_residuals(&l.g.g, &l.j, &dg, &bad);
    assert!(a > 1e-4);
    // a J-anti-invariant metric change breaks the form condition
    let e: Mat<f64, 4> = std::array::from_fn(|r| std::array::from_fn(|c| if r == c { [1.0, -1.0, 0.5, 0.2][r] } else { 0.0 }));
    let anti = mat::scale(0.5, &mat::sub(&e, &mat::congruence(&l.j, &e)));
    let (_, b) = variation_residuals(&l.g.g, &l.j, &mat::add(&dg, &mat::scale(1e-3, &anti)), &k);
    assert!(b > 1e-5);
}

#[test]
fn static_detection() {
    // S² × S² with round factors is Kähler-Einstein
    let s = static_residuals(&jet_input(&SpherePair, "s2xs2")).unwrap();
    assert!(s.p_minus_lambda_omega < 1e-9 && s.ric_anti < 1e-9, "{s:?}");
    assert!(s.lambda.abs() > 0.1);
    assert!(s.wplus_defect.unwrap() < 1e-9);

    let s = static_residuals(&jet_input(&ConformallyFlat::<4>::random(2, 2, 0.2), "cf")).unwrap();
    assert!(s.ric_anti > 1e-4 || s.p_minus_lambda_omega > 1e-4);

    let x: [f64; 4] = std::array::from_fn(|i| SAMPLE_POINT[i]);
    let (l, st) = homogeneous::kodaira_thurston_preset::<f64>();
    let kt = static_residuals::<f64, 4>(&Input::Jet { name: "kt".into(), jet: preset_jet(l, st, &x).unwrap() }).unwrap();
    assert!(kt.ric_anti > 0.1);

    let (l, st) = homogeneous::iwasawa_preset::<f64>();
    let jet = preset_jet(l, st, &SAMPLE_POINT).unwrap();
    assert!(matches!(wplus_defect(&jet), Err(Error::WrongDimension(6))));
    assert!(static_residuals(&Input::Jet { name: "iw".into(), jet }).unwrap().wplus_defect.is_none());
}

#[test]
fn lambda_scales_inversely() {
    let jet = SpherePair.jet(&[0.2, -0.1, 0.4, 0.3]).unwrap();
    for c in [0.5, 2.0, 7.0] {
        let (a, b) = lambda_scaling(&jet, c).unwrap();
        assert!((b * c - a).abs() < 1e-10 * a.abs(), "{a} {b} {c}");
    }
}

#[test]
fn grid_residuals_converge_or_vanish() {
    let rows = verify_grid(12, 4, 0.1, 5).unwrap();
    for r in &rows {
        assert!(r.pass, "{r:?}");
    }
    // the closedness-dependent identities see the truncation error of dω
    let fc = by_name(&rows, Identity::FlowConsistency);
    assert!(fc.sup > 1e-12 && fc.order.unwrap() > 3.5);
}

#[test]
fn grid_tendency_compatibility_is_truncation_small() {
    let sp = grid::GridSpec::new(4, 8, 4).unwrap();
    let s = almost_kahler_initial::<f64, 4>(sp, 0.1, 2, 3).unwrap();
    let k = scf_tendency::<f64, 4>(&s).unwrap();
    let r = check_variation_compat::<f64, 4>(&k, &s, 1e-2);
    assert!(r.pass && r.sup.is_finite() && r.l2 <= r.sup * (2.0 * std::f64::consts::PI).powi(2));
}

#[test]
fn grid_static_residuals_of_flat_data_vanish() {
    let sp = grid::GridSpec::new(4, 8, 4).unwrap();
    let s = GridState::<f64>::flat::<4>(sp);
    let r = static_residuals::<f64, 4>(&Input::Grid { name: "flat".into(), state: &s }).unwrap();
    assert!(r.p_minus_lambda_omega < 1e-12 && r.ric_anti < 1e-12);
}

#[test]
fn report_csv_has_fixed_columns() {
    let mut r = IdentityReport::new("weitzenbock", "x", 1e-12, 2e-12, 1e-9);
    assert!(r.pass);
    r.order = Some(4.02);
    let mut buf = Vec::new();
    write_reports(&mut buf, &[r]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], REPORT_COLUMNS.join(","));
    assert_eq!(lines[1].split(',').count(), REPORT_COLUMNS.len());
    assert!(lines[1].contains("4.0200"));
    assert!(!IdentityReport::new("a", "b", f64::NAN, 0.0, 1.0).pass);
}
