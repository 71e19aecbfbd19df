use akflow::config::{parse_config, InitKind, RunConfig};
use akflow::grid;
use akflow::harness::{self, Identity, Input};
use akflow::hermitian::{self, standard_j};
use akflow::mat::{self, Mat};
use akflow::samples::{AnalyticStructure, ExactPerturbation, RandomHermitian};
use akflow::tensor;
use akflow::Tolerances;
use proptest::prelude::*;

fn mat4() -> impl Strategy<Value = Mat<f64, 4>> {
    prop::array::uniform4(prop::array::uniform4(-1.0f64..1.0))
}

fn point() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-3.0f64..3.0)
}

/// `A J₀ A⁻¹` for a well-conditioned `A = 1 + ½B`.
fn conjugated_j(b: &Mat<f64, 4>) -> Option<Mat<f64, 4>> {
    let a = mat::add(&mat::identity(), &mat::scale(0.25, b));
    let ai = mat::inverse(&a)?;
    Some(mat::mul(&a, &mat::mul(&standard_j::<f64, 4>(), &ai)))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn j_split_is_a_projection(w in mat4(), b in mat4()) {
        let w = mat::skew(&w);
        let Some(j) = conjugated_j(&b) else { return Ok(()) };
        let (plus, minus) = tensor::j_split(&w, &j, &Tolerances { almost_complex: 1e-9, ..Default::default() }).unwrap();
        let tol = 1e-12 * (1.0 + mat::max_abs(&w)) * (1.0 + mat::max_abs(&j)).powi(2);
        prop_assert!(diff(&mat::add(&plus, &minus), &w) < 1e-15);
        prop_assert!(diff(&mat::congruence(&j, &plus), &plus) < tol);
        prop_assert!(diff(&mat::congruence(&j, &minus), &mat::scale(-1.0, &minus)) < tol);
    }

    #[test]
    fn induced_variations_are_inverse(seed in 0u64..1000, x in point()) {
        // the two maps are inverse on variations that keep J compatible
        let l = ExactPerturbation::<4>::random(seed, 2, 0.2).jet(&x).unwrap().lifted();
        let (dg, k) = hermitian::scf_rhs(&l);
        let dw = hermitian::induced_domega(&dg, &k, &l.g.g, &l.j);
        let back = hermitian::induced_dg(&dw, &k, &l.omega, &l.j);
        prop_assert!(diff(&back, &dg) < 1e-11 * (1.0 + mat::max_abs(&dg)));
    }

    #[test]
    fn general_identities_hold_on_hermitian_jets(seed in 0u64..10_000, x in point()) {
        let jet = RandomHermitian::<4>::random(seed, 2, 0.25).jet(&x).unwrap();
        let r = harness::check_all(&Input::Jet { name: "h".into(), jet }, 1e-9).unwrap();
        for rep in r {
            let id = Identity::ALL.iter().find(|i| i.name() == rep.identity).unwrap();
            if !id.needs_closed() {
                prop_assert!(rep.pass, "{:?}", rep);
            }
        }
    }

    #[test]
    fn almost_kahler_jets_pass_everything(seed in 0u64..10_000, x in point()) {
        let jet = ExactPerturbation::<4>::random(seed, 2, 0.25).jet(&x).unwrap();
        for rep in harness::check_all(&Input::Jet { name: "ak".into(), jet }, 1e-9).unwrap() {
            prop_assert!(rep.pass, "{:?}", rep);
        }
    }

    #[test]
    fn scf_variation_is_compatible(seed in 0u64..10_000, x in point()) {
        let jet = ExactPerturbation::<4>::random(seed, 3, 0.3).jet(&x).unwrap();
        let l = jet.lifted();
        let (dg, k) = hermitian::scf_rhs(&l);
        let (a, b) = harness::variation_residuals(&l.g.g, &l.j, &dg, &k);
        prop_assert!(a < 1e-10 && b < 1e-10, "{} {}", a, b);
    }

    #[test]
    fn lambda_has_degree_minus_one(seed in 0u64..10_000, c in 0.1f64..10.0) {
        let jet = ExactPerturbation::<4>::random(seed, 2, 0.3).jet(&[0.4, 0.1, -0.3, 1.0]).unwrap();
        let (a, b) = harness::lambda_scaling(&jet, c).unwrap();
        prop_assert!((b * c - a).abs() <= 1e-12 * (1.0 + a.abs()), "{} {} {}", a, b, c);
    }

    #[test]
    fn config_echo_round_trips(m in 8usize..=64, cfl in 0.01f64..1.0, seed in 0..=i64::MAX as u64, amp in 0.0f64..1.0, order in prop::sample::select(vec![2usize, 4]), kahler in any::<bool>()) {
        let c = RunConfig {
            m, cfl, seed, amplitude: amp, order,
            init: if kahler { InitKind::Kahler } else { InitKind::AlmostKahler },
            ..Default::default()
        };
        prop_assert_eq!(parse_config(&c.echo(), &[]).unwrap(), c);
    }

    #[test]
    fn reductions_ignore_thread_count(v in prop::collection::vec(-1e3f64..1e3, 1..5000)) {
        let sums: Vec<f64> = [1usize, 3].iter().map(|&n| {
            rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(|| grid::fixed_sum(&v))
        }).collect();
        prop_assert_eq!(sums[0].to_bits(), sums[1].to_bits());
    }
}

fn diff(a: &Mat<f64, 4>, b: &Mat<f64, 4>) -> f64 {
    mat::max_abs(&mat::sub(a, b))
}
