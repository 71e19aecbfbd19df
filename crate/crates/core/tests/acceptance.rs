//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line (written
//! straight to stderr, so it shows without `--nocapture`) and then asserts.
//! Criteria run one at a time so the timing bounds are not skewed by each
//! other on small machines.

use std::io::Write;
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use akflow::config::{parse_config, RunConfig};
use akflow::driver::{self, EXIT_BLOW_UP};
use akflow::flow::{self, FlowKind, FlowSettings, GridState};
use akflow::grid::{GridSpec, JetGather};
use akflow::harness::{self, Identity, Input};
use akflow::hermitian;
use akflow::homogeneous::{self, ExpCoordinates, InvariantGeometry, Preset};
use akflow::mat::{self, Mat};
use akflow::monitor::{self, MonitorRecord};
use akflow::samples::{AnalyticStructure, ConformallyFlat, ExactPerturbation, SpherePair};
use akflow::Tolerances;

static SERIAL: Mutex<()> = Mutex::new(());

fn verdict(n: usize, ok: bool, detail: &str) {
    let line = format!("acceptance {n}: {} | {detail}\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "acceptance {n} failed: {detail}");
}

fn spec(m: usize) -> GridSpec {
    GridSpec::new(4, m, 4).unwrap()
}

fn diff<const N: usize>(a: &Mat<f64, N>, b: &Mat<f64, N>) -> f64 {
    mat::max_abs(&mat::sub(a, b))
}

#[test]
fn criterion_1_identities_on_homogeneous_data() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let reports = harness::verify_presets().unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let wanted = [
        Identity::Weitzenbock,
        Identity::PDecomposition,
        Identity::P11Split,
        Identity::DjxRelation,
        Identity::TraceIdentity,
    ];
    let rows: Vec<_> = reports.iter().filter(|r| wanted.iter().any(|w| w.name() == r.identity)).collect();
    let worst = rows.iter().map(|r| r.sup).fold(0.0, f64::max);
    let inputs: std::collections::BTreeSet<_> = rows.iter().map(|r| r.input.as_str()).collect();
    let ok = rows.len() == 15 && inputs.len() == 3 && worst <= 1e-9 && secs < 1.0;
    verdict(1, ok, &format!("{} residuals on {:?}, worst {worst:.2e} (bound 1e-9), {secs:.3} s", rows.len(), inputs));
}

/// Sup of the flow-consistency residual on sampled almost Kähler data.
fn consistency_residual(m: usize) -> (f64, f64) {
    let src = ExactPerturbation::<4>::random(5, 2, 0.1);
    let t0 = Instant::now();
    let s = GridState::<f64>::from_analytic(spec(m), &src);
    let r = harness::check::<f64, 4>(Identity::FlowConsistency, &Input::Grid { name: format!("m={m}"), state: &s }, 0.0).unwrap();
    (r.sup, t0.elapsed().as_secs_f64())
}

#[test]
fn criterion_2_flow_consistency() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let exact = harness::verify_presets().unwrap();
    let exact_worst = exact
        .iter()
        .filter(|r| r.identity == Identity::FlowConsistency.name())
        .map(|r| r.sup)
        .fold(0.0, f64::max);
    let ms = [12usize, 16, 24];
    let res: Vec<(f64, f64)> = ms.iter().map(|&m| consistency_residual(m)).collect();
    let orders: Vec<f64> =
        (0..2).map(|i| (res[i].0 / res[i + 1].0).ln() / (ms[i + 1] as f64 / ms[i] as f64).ln()).collect();
    let slowest = res.iter().map(|r| r.1).fold(0.0, f64::max);
    let ok = exact_worst <= 1e-9 && orders.iter().all(|o| *o >= 3.5) && slowest < 120.0;
    verdict(
        2,
        ok,
        &format!(
            "homogeneous worst {exact_worst:.2e}; grid sup {:.3e} / {:.3e} / {:.3e} at m = 12/16/24, orders {:.3}, {:.3}; slowest resolution {slowest:.1} s",
            res[0].0, res[1].0, res[2].0, orders[0], orders[1]
        ),
    );
}

/// Sup over the grid of `|B¹|`, `|B²|`, `|𝒩|`, `|ℛ|`.
fn quadratic_sups(s: &GridState<f64>) -> [f64; 4] {
    let gather = JetGather::new(s.spec());
    let tol = Tolerances { almost_complex: flow::J_DRIFT_GUARD, ..Tolerances::default() };
    let mut out = [0.0f64; 4];
    for p in 0..s.spec().npts() {
        let l = flow::point_jet::<f64, 4>(&gather, s, p, &tol).unwrap().lifted();
        let q = l.quadratic();
        let r = hermitian::script_r(&l.curvature().ric, &l.j, &l.g.ginv);
        for (o, m) in out.iter_mut().zip([&q.b1, &q.b2, &q.script_n, &r]) {
            *o = o.max(mat::max_abs(m));
        }
    }
    out
}

#[test]
fn criterion_3_kahler_reduction() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let s0 = flow::kahler_initial::<f64, 4>(spec(16), 0.1, 1, 3).unwrap();
    let j0 = s0.j.clone();
    let settings = FlowSettings { t_end: 0.5, monitor_every: 1, max_steps: 100_000, ..Default::default() };
    let mut j_drift = 0.0f64;
    let tr = flow::run::<f64, 4>(s0, &settings, |_, s, _| {
        let d = s.j.data.iter().zip(&j0.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        j_drift = j_drift.max(d);
        Ok(())
    })
    .unwrap();
    let q = quadratic_sups(&tr.final_state);
    let tail: Vec<&MonitorRecord> = tr.monitors.iter().filter(|m| m.t >= 0.25).collect();
    let decreasing = tail.len() >= 2 && tail.windows(2).all(|w| w[1].l2_ric <= w[0].l2_ric);
    let secs = t0.elapsed().as_secs_f64();
    let ok = tr.blow_up.is_none()
        && (tr.final_state.t - 0.5).abs() < 1e-12
        && j_drift <= 1e-8
        && q.iter().all(|v| *v <= 1e-8)
        && decreasing
        && secs < 600.0;
    verdict(
        3,
        ok,
        &format!(
            "{} steps to t = {:.3}; sup|J - J0| {j_drift:.3e} (bound 1e-8); sup |B1| {:.2e} |B2| {:.2e} |N| {:.2e} |R| {:.2e} (bound 1e-8); L2 Ric decreasing over final half: {decreasing} ({:.6e} -> {:.6e}); {secs:.0} s",
            tr.steps,
            tr.final_state.t,
            q[0],
            q[1],
            q[2],
            q[3],
            tail.first().map_or(f64::NAN, |m| m.l2_ric),
            tail.last().map_or(f64::NAN, |m| m.l2_ric),
        ),
    );
}

/// Worst `(‖dω‖∞, ‖J² + 1‖∞, compat)` over all monitors of a fixed-step run.
fn conservation_run(m: usize, dt: f64, steps: usize) -> ([f64; 3], f64) {
    let s0 = flow::almost_kahler_initial::<f64, 4>(spec(m), 0.1, 1, 3).unwrap();
    let settings = FlowSettings {
        t_end: dt * steps as f64,
        max_steps: steps,
        monitor_every: 50,
        fixed_dt: Some(dt),
        projection: false,
        ..Default::default()
    };
    let tr = flow::run::<f64, 4>(s0, &settings, |_, _, _| Ok(())).unwrap();
    assert!(tr.blow_up.is_none(), "{:?}", tr.blow_up);
    assert_eq!(tr.steps, steps);
    let mut w = [0.0f64; 3];
    for r in &tr.monitors {
        w[0] = w[0].max(r.domega_inf);
        w[1] = w[1].max(r.j2_inf);
        w[2] = w[2].max(r.compat);
    }
    (w, tr.final_state.t)
}

#[test]
fn criterion_4_conservation() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    // fixed step 0.1·h² at m = 16; the refinement partner doubles h and dt
    let dt16 = 0.1 * spec(16).h().powi(2);
    let (fine, t_fine) = conservation_run(16, dt16, 500);
    let secs = t0.elapsed().as_secs_f64();
    let (coarse, t_coarse) = conservation_run(8, 2.0 * dt16, 250);
    let ratios: Vec<f64> = (0..3).map(|i| coarse[i] / fine[i]).collect();
    let ok = fine.iter().all(|v| *v <= 1e-6) && ratios.iter().all(|r| *r >= 8.0) && secs < 900.0;
    verdict(
        4,
        ok,
        &format!(
            "m = 16, 500 steps to t = {t_fine:.3}: |dω| {:.3e}, |J²+1| {:.3e}, compat {:.3e} (bound 1e-6); m = 8, 250 steps to t = {t_coarse:.3}: {:.3e}, {:.3e}, {:.3e}; ratios {:.1}, {:.1}, {:.1} (need >= 8); m = 16 run {secs:.0} s",
            fine[0], fine[1], fine[2], coarse[0], coarse[1], coarse[2], ratios[0], ratios[1], ratios[2]
        ),
    );
}

#[test]
fn criterion_5_cross_engine() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let (l, s) = homogeneous::kodaira_thurston_preset::<f64>();
    let geo = InvariantGeometry::new(&l, &s).unwrap();
    let (dg1, dj1) = geo.scf_rhs();
    let jet = ExpCoordinates::new(l.clone(), s.clone()).unwrap().jet(&[0.0; 4]).unwrap();
    let (dg0, dj0) = hermitian::scf_rhs(&jet.lifted());
    let rhs = diff(&dg0, &dg1).max(diff(&dj0, &dj1));
    let tr = homogeneous::ode_run(&s, &l, 1e-3, 5.0, 100, 1e6).unwrap();
    let mut inv = 0.0f64;
    for st in &tr.states {
        let (a, b, c) = st.defects(&l);
        inv = inv.max(a).max(b).max(c);
    }
    let secs = t0.elapsed().as_secs_f64();
    let end = tr.states.last().unwrap().t;
    let ok = rhs <= 1e-10 && inv <= 1e-10 && (end - 5.0).abs() < 1e-9 && tr.blow_up.is_none() && secs < 1.0;
    verdict(
        5,
        ok,
        &format!("rhs difference {rhs:.2e} (bound 1e-10); worst invariant defect over [0, {end:.1}] {inv:.2e} (bound 1e-10); {secs:.3} s"),
    );
}

#[test]
fn criterion_6_static_detection() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let flat = GridState::<f64>::flat::<4>(spec(8));
    let fr = harness::static_residuals::<f64, 4>(&Input::Grid { name: "flat".into(), state: &flat }).unwrap();
    let flat_ok = fr.lambda == 0.0
        && fr.p_minus_lambda_omega <= 1e-13
        && fr.ric_anti <= 1e-13
        && fr.wplus_defect.is_some_and(|w| w <= 1e-13);

    let x = [0.3, -0.2, 0.5, 0.1];
    let (l, s) = homogeneous::kodaira_thurston_preset::<f64>();
    let kt_jet = ExpCoordinates::new(l, s).unwrap().jet(&x).unwrap();
    let kt = harness::static_residuals(&Input::Jet { name: Preset::KodairaThurston.name().into(), jet: kt_jet }).unwrap();
    let kt_ok = kt.p_minus_lambda_omega > 1e-8;

    let ke = harness::static_residuals(&Input::Jet { name: "s2xs2".into(), jet: SpherePair.jet(&x).unwrap() }).unwrap();
    let ke_ok = ke.ric_anti <= 1e-12;

    let mut wplus = 0.0f64;
    for seed in 0..3 {
        let cf = ConformallyFlat::<4>::random(seed, 2, 0.2);
        wplus = wplus.max(harness::wplus_defect(&cf.jet(&x).unwrap()).unwrap());
    }
    let cf_ok = wplus <= 1e-10;
    verdict(
        6,
        flat_ok && kt_ok && ke_ok && cf_ok,
        &format!(
            "flat torus λ = {:.1e}, |P-λω| {:.1e}, |Ric^-J| {:.1e}, W+ {:.1e} [{}]; Kodaira-Thurston |P-λω| = {:.2e} (need > 0) [{}], |Ric^-J| = {:.3}; Kähler-Einstein |Ric^-J| {:.1e} [{}]; conformally flat W+ defect {wplus:.1e} [{}]",
            fr.lambda,
            fr.p_minus_lambda_omega,
            fr.ric_anti,
            fr.wplus_defect.unwrap_or(f64::NAN),
            flag(flat_ok),
            kt.p_minus_lambda_omega,
            flag(kt_ok),
            kt.ric_anti,
            ke.ric_anti,
            flag(ke_ok),
            flag(cf_ok),
        ),
    );
}

fn flag(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "not met"
    }
}

fn cfg(dir: &Path, text: &str) -> RunConfig {
    let mut c = parse_config(text, &[]).unwrap();
    c.output = dir.to_path_buf();
    c
}

#[test]
fn criterion_7_blow_up_guard() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let tmp = tempfile::tempdir().unwrap();
    let c = cfg(tmp.path(), "m = 8\namplitude = 0.6\nblow_up = 5.0\nt_end = 1.0\nmonitor_every = 1");
    let r = driver::execute(&c);
    let code = driver::exit_code(&r);
    let o = r.unwrap();
    let text = std::fs::read_to_string(tmp.path().join("monitors.csv")).unwrap();
    let rows = monitor::read_csv(&text).unwrap();
    let finite = rows.iter().all(|m| m.values().iter().all(|v| v.is_finite()));
    let last = rows.last().unwrap().sup_rm;
    let ok = code == EXIT_BLOW_UP && o.blow_up.is_some() && last > c.blow_up && finite;
    verdict(
        7,
        ok,
        &format!(
            "exit code {code}; {:?}; final sup|Rm| {last:.3} vs threshold {}; {} records, all finite: {finite}",
            o.blow_up.unwrap_or_default(),
            c.blow_up,
            rows.len()
        ),
    );
}

#[test]
fn criterion_8_determinism() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let tmp = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for n in [1usize, 4, 8] {
        let dir = tmp.path().join(format!("threads{n}"));
        let c = cfg(&dir, "m = 8\nseed = 7\nt_end = 0.5\nmonitor_every = 1");
        let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
        let o = pool.install(|| driver::execute(&c)).unwrap();
        assert_eq!(o.exit_code(), 0);
        files.push(std::fs::read(dir.join("monitors.csv")).unwrap());
    }
    let ok = files.windows(2).all(|w| w[0] == w[1]) && !files[0].is_empty();
    verdict(8, ok, &format!("monitors.csv with 1/4/8 workers: {} bytes each, identical: {ok}", files[0].len()));
}

#[test]
fn flow_kind_is_symplectic_by_default() {
    // the acceptance runs above rely on the default flow
    assert_eq!(FlowSettings::default().kind, FlowKind::Scf);
    assert_eq!(RunConfig::default().mode, akflow::config::Mode::Scf);
}
