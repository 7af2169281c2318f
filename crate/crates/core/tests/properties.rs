use proptest::prelude::*;

use surfnse::cases::killing_field;
use surfnse::diagnostics::convergence_rates;
use surfnse::experiments::TauRule;
use surfnse::fe::P1Tet;
use surfnse::geometry::{cut_tetrahedron, projector};
use surfnse::sparse::CsrMatrix;
use surfnse::{CaseId, ManufacturedCase, Vec3};

fn unit_vector() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0f64, 0.0..std::f64::consts::TAU).prop_map(|(z, th)| {
        let r = (1.0 - z * z).sqrt();
        Vec3::new(r * th.cos(), r * th.sin(), z)
    })
}

fn reference_tet() -> [Vec3; 4] {
    [Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()]
}

proptest! {
    #[test]
    fn projector_is_orthogonal_projection(n in unit_vector(), v in prop::array::uniform3(-5.0..5.0f64)) {
        let p = projector(&n);
        let v = Vec3::from(v);
        prop_assert!((p * p - p).abs().max() < 1e-14);
        prop_assert!((p - p.transpose()).abs().max() < 1e-15);
        prop_assert!((p * n).norm() < 1e-14);
        prop_assert!(((p * v).dot(&v) - (p * v).norm_squared()).abs() < 1e-12);
    }

    #[test]
    fn cut_triangles_lie_on_zero_level(phi in prop::array::uniform4(-1.0..1.0f64)) {
        let pts = reference_tet();
        let tet = P1Tet::new(pts).unwrap();
        for tri in cut_tetrahedron(&pts, &phi) {
            for x in &tri {
                prop_assert!(tet.eval(&phi, x).abs() < 1e-12);
            }
            let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
            prop_assert!(n.dot(&tet.gradient(&phi)) >= 0.0);
        }
    }

    #[test]
    fn uniform_sign_gives_no_cut(phi in prop::array::uniform4(0.01..1.0f64), flip in any::<bool>()) {
        let phi = if flip { phi.map(|v| -v) } else { phi };
        prop_assert!(cut_tetrahedron(&reference_tet(), &phi).is_empty());
    }

    #[test]
    fn rates_recover_geometric_decay(c in 0.01..100.0f64, r in 0.5..4.0f64, n in 2usize..6) {
        let errors: Vec<f64> = (0..n).map(|k| c * f64::powf(2.0, -r * k as f64)).collect();
        for rate in convergence_rates(&errors) {
            prop_assert!((rate - r).abs() < 1e-10);
        }
    }

    #[test]
    fn bilinear_matches_transpose(
        entries in prop::collection::vec((0usize..6, 0usize..5, -3.0..3.0f64), 0..30),
        x in prop::collection::vec(-2.0..2.0f64, 6),
        y in prop::collection::vec(-2.0..2.0f64, 5),
    ) {
        let a = CsrMatrix::from_triplets(6, 5, entries);
        let lhs = a.bilinear(&x, &y);
        let rhs = a.transpose().bilinear(&y, &x);
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn tau_rule_round_trips(k in -8i32..8, t in 1e-3..1e6f64) {
        for rule in [TauRule::InversePower(k), TauRule::Fixed(t)] {
            prop_assert_eq!(rule.to_string().parse::<TauRule>().unwrap(), rule);
        }
    }

    #[test]
    fn case_velocities_are_tangential(x in unit_vector(), scale in 0.5..2.0f64, t in 0.0..3.0f64) {
        for id in CaseId::ALL {
            let u = ManufacturedCase::new(id).velocity(&(x * scale), t).unwrap();
            prop_assert!(u.dot(&x).abs() < 1e-12 * (1.0 + u.norm()));
        }
        prop_assert!(killing_field(&x).unwrap().dot(&x).abs() < 1e-14);
    }
}
