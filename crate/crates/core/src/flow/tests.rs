use super::*;
use crate::homogeneous::{kodaira_thurston_preset, ExpCoordinates};
use crate::samples::ExactPerturbation;

fn spec(m: usize) -> GridSpec {
    GridSpec::new(4, m, 4).unwrap()
}

fn max_diff(a: &GridField<f64>, b: &GridField<f64>) -> f64 {
    a.data.iter().zip(&b.data).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn flat_structure_is_a_fixed_point() {
    let s = GridState::<f64>::flat::<4>(spec(8));
    let k = scf_tendency::<f64, 4>(&s).unwrap();
    assert_eq!(k.dg.max_abs(), 0.0);
    assert_eq!(k.dj.max_abs(), 0.0);
    let k = ahcf_tendency::<f64, 4>(&s).unwrap();
    assert!(k.dg.max_abs() < 1e-14 && k.dj.max_abs() < 1e-14);
    let next = rk4_step::<f64, 4>(&s, 0.01, FlowKind::Scf).unwrap();
    assert_eq!(next.g, s.g);
    assert_eq!(next.j, s.j);

    let settings = FlowSettings { t_end: 0.1, monitor_every: 2, ..Default::default() };
    let tr = run::<f64, 4>(s, &settings, |_, _, _| Ok(())).unwrap();
    assert!(tr.blow_up.is_none());
    assert!((tr.final_state.t - 0.1).abs() < 1e-14);
    for m in &tr.monitors {
        for v in [m.sup_rm, m.sup_dj2, m.domega_inf, m.j2_inf, m.compat, m.l2_ric, m.static_p, m.static_ric, m.lambda] {
            assert!(v.abs() <= 1e-12, "{m:?}");
        }
    }
}

#[test]
fn kahler_data_has_vanishing_j_tendency() {
    let s = kahler_initial::<f64, 4>(spec(8), 0.1, 2, 3).unwrap();
    let (dw, j2, c) = s.drifts::<4>();
    assert!(dw < 1e-13 && j2 < 1e-14 && c < 1e-13);
    let k = scf_tendency::<f64, 4>(&s).unwrap();
    assert!(k.dj.max_abs() < 1e-12, "{}", k.dj.max_abs());
    assert!(k.dg.max_abs() > 1e-3);
    // DJ = 0 so the metric moves by −2Ric alone
    let gather = JetGather::new(s.spec());
    for p in [0, 1000, 4095] {
        let jet = point_jet::<f64, 4>(&gather, &s, p, &Tolerances::default()).unwrap();
        let ric = jet.lifted().curvature().ric;
        let want = mat::scale(-2.0, &ric);
        assert!(mat::max_abs(&mat::sub(&k.dg.mat_at::<4>(p), &want)) < 1e-12);
    }
}

#[test]
fn tendency_satisfies_pointwise_invariants() {
    let s = almost_kahler_initial::<f64, 4>(spec(8), 0.1, 3, 3).unwrap();
    let k = scf_tendency::<f64, 4>(&s).unwrap();
    for p in 0..s.spec().npts() {
        let j = s.j.mat_at::<4>(p);
        let dj = k.dj.mat_at::<4>(p);
        assert!(hermitian::anticommutator_defect(&j, &dj) < 1e-13);
        let dg = k.dg.mat_at::<4>(p);
        assert!(mat::max_abs(&mat::skew(&dg)) < 1e-13);
    }
}

/// FD tendency against the exact tendency of the same analytic data.
fn tendency_error(m: usize) -> f64 {
    let src = ExactPerturbation::<4>::random(5, 2, 0.1);
    let sp = spec(m);
    let s = GridState::<f64>::from_analytic(sp, &src);
    let k = scf_tendency::<f64, 4>(&s).unwrap();
    let mut err: f64 = 0.0;
    for p in (0..sp.npts()).step_by(37) {
        let jet = src.jet(&sp.coords::<4>(p)).unwrap();
        let (dg, dj) = hermitian::scf_rhs(&jet.lifted());
        err = err.max(mat::max_abs(&mat::sub(&k.dg.mat_at::<4>(p), &dg)));
        err = err.max(mat::max_abs(&mat::sub(&k.dj.mat_at::<4>(p), &dj)));
    }
    err
}

#[test]
fn tendency_converges_at_fourth_order() {
    let e8 = tendency_error(8);
    let e16 = tendency_error(16);
    let order = (e8 / e16).log2();
    assert!(order > 3.5, "{e8:e} {e16:e} order {order}");
}

#[test]
fn grid_matches_kodaira_thurston_away_from_the_seam() {
    // exponential coordinates give polynomial fields of degree two, which the
    // stencils differentiate exactly; only the periodic wrap is wrong
    let (l, st) = kodaira_thurston_preset::<f64>();
    let exp = ExpCoordinates::new(l, st).unwrap();
    let sp = spec(12);
    let s = GridState::<f64>::from_analytic(sp, &exp);
    let k = scf_tendency::<f64, 4>(&s).unwrap();
    let mut checked = 0;
    for p in 0..sp.npts() {
        let idx = sp.multi_index(p);
        if idx.iter().any(|&i| !(4..8).contains(&i)) {
            continue;
        }
        let jet = exp.jet(&sp.coords::<4>(p)).unwrap();
        let (dg, dj) = hermitian::scf_rhs(&jet.lifted());
        let scale = mat::max_abs(&dg).max(mat::max_abs(&dj)).max(1.0);
        assert!(mat::max_abs(&mat::sub(&k.dg.mat_at::<4>(p), &dg)) < 1e-10 * scale);
        assert!(mat::max_abs(&mat::sub(&k.dj.mat_at::<4>(p), &dj)) < 1e-10 * scale);
        checked += 1;
    }
    assert_eq!(checked, 256);
}

#[test]
fn rk4_is_exact_on_cubic_in_time_tendencies() {
    let sp = spec(8);
    let s = almost_kahler_initial::<f64, 4>(sp, 0.1, 1, 2).unwrap();
    let a = scf_tendency::<f64, 4>(&s).unwrap();
    // K(t) = A·(1 + t + t² + t³) integrates to A·(t + t²/2 + t³/3 + t⁴/4)
    let poly = |t: f64| 1.0 + t + t * t + t * t * t;
    let f = |x: &GridState<f64>| -> Result<Tendency<f64>> {
        let c = poly(x.t);
        Ok(Tendency { dg: a.dg.scaled(c), dj: a.dj.scaled(c), domega: a.domega.scaled(c) })
    };
    let dt = 0.3;
    let next = rk4_step_with(&s, dt, None, f).unwrap();
    let w = dt + dt * dt / 2.0 + dt.powi(3) / 3.0 + dt.powi(4) / 4.0;
    let mut want = s.g.clone();
    want.axpy(w, &a.dg);
    assert!(max_diff(&next.g, &want) < 1e-15);
    let mut want = s.j.clone();
    want.axpy(w, &a.dj);
    assert!(max_diff(&next.j, &want) < 1e-15);
    assert!(rk4_step_with(&s, 0.0, None, f).is_err());
}

#[test]
fn rk4_self_convergence_is_fourth_order() {
    let s0 = almost_kahler_initial::<f64, 4>(spec(8), 0.1, 1, 2).unwrap();
    let go = |n: usize| {
        let mut s = s0.clone();
        for _ in 0..n {
            s = rk4_step::<f64, 4>(&s, 0.4 / n as f64, FlowKind::Scf).unwrap();
        }
        s
    };
    let r = go(32);
    let e1 = max_diff(&go(4).g, &r.g);
    let e2 = max_diff(&go(8).g, &r.g);
    let order = (e1 / e2).log2();
    assert!(order > 3.5 && order < 4.6, "{e1:e} {e2:e} {order}");
}

#[test]
fn projection_is_a_retraction() {
    let sp = spec(8);
    let s = almost_kahler_initial::<f64, 4>(sp, 0.1, 4, 2).unwrap();
    let p = project_compatible::<f64, 4>(&s).unwrap();
    assert!(max_diff(&p.g, &s.g) < 1e-13 && max_diff(&p.j, &s.j) < 1e-13);

    let mut bad = s.clone();
    for (i, v) in bad.j.data.iter_mut().enumerate() {
        *v += 1e-6 * ((i * 7919 % 13) as f64 / 13.0 - 0.5);
    }
    for (i, v) in bad.g.data.iter_mut().enumerate() {
        *v += 1e-6 * ((i * 104729 % 17) as f64 / 17.0 - 0.5);
    }
    // keep g symmetric
    let gm: Vec<Mat<f64, 4>> = (0..sp.npts()).map(|p| mat::sym(&bad.g.mat_at::<4>(p))).collect();
    bad.g = GridField::from_mats(sp, FORM, &gm);
    let (_, j2, c) = bad.drifts::<4>();
    assert!(j2 > 1e-7 && c > 1e-7);
    let once = project_compatible::<f64, 4>(&bad).unwrap();
    let (_, j2, c) = once.drifts::<4>();
    assert!(j2 < 1e-12 && c < 1e-12, "{j2:e} {c:e}");
    let twice = project_compatible::<f64, 4>(&once).unwrap();
    assert!(max_diff(&once.g, &twice.g) < 1e-12 && max_diff(&once.j, &twice.j) < 1e-12);
}

#[test]
fn guard_ends_run_on_curvature_threshold() {
    let s = almost_kahler_initial::<f64, 4>(spec(8), 0.3, 1, 3).unwrap();
    let settings = FlowSettings { t_end: 1.0, blow_up: 0.5, ..Default::default() };
    let tr = run::<f64, 4>(s, &settings, |_, _, _| Ok(())).unwrap();
    assert!(matches!(tr.blow_up, Some(Error::BlowUpDetected { .. })));
    let last = tr.monitors.last().unwrap();
    assert!(last.sup_rm > 0.5 && last.is_finite());
}

#[test]
fn degenerate_metric_becomes_blow_up() {
    let sp = spec(8);
    let mut s = GridState::<f64>::flat::<4>(sp);
    let z = mat::scale(1e-12, &mat::identity::<f64, 4>());
    s.g.set_mat(100, &z);
    let e = tendency_with_stats::<f64, 4>(&s, FlowKind::Scf, true).unwrap_err();
    assert!(matches!(guard_error(e, 0, 0.0), Ok(Error::BlowUpDetected { .. })));
}

#[test]
fn settings_are_validated() {
    let s = GridState::<f64>::flat::<4>(spec(8));
    let bad = FlowSettings { cfl: 0.0, ..Default::default() };
    assert!(matches!(run::<f64, 4>(s, &bad, |_, _, _| Ok(())), Err(Error::Config(_))));
    let st = FlowSettings::default();
    let h = 0.5;
    assert_eq!(st.step_size(h, 0.0, 0.0), 0.1 * h * h);
    assert_eq!(st.step_size(h, 3.0, 1.0), 0.1 * h * h / 4.0);
}

#[test]
fn single_precision_runs() {
    let s = almost_kahler_initial::<f32, 4>(spec(8), 0.1, 1, 2).map_err(|e| e.to_string()).unwrap();
    let k = scf_tendency::<f32, 4>(&s).unwrap();
    let s64 = almost_kahler_initial::<f64, 4>(spec(8), 0.1, 1, 2).unwrap();
    let k64 = scf_tendency::<f64, 4>(&s64).unwrap();
    let err = k.dj.data.iter().zip(&k64.dj.data).map(|(a, b)| (*a as f64 - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-3, "{err}");
}
