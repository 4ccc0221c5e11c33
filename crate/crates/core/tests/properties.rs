use lpdelay::algebra::{AlgebraElement, AlgebraSpec, Casimir, CoalgebraElement};
use lpdelay::history::Trajectory;
use lpdelay::linalg::Matrix;
use lpdelay::models::{rigid_body_delay_rhs, sphere_rhs, RigidBodyParams};
use lpdelay::report::R17;
use lpdelay::scalar::{dot3, fmt17, norm3};
use proptest::prelude::*;

fn coord() -> impl Strategy<Value = f64> {
    -10.0..10.0f64
}

fn vec3() -> impl Strategy<Value = [f64; 3]> {
    [coord(), coord(), coord()]
}

/// so(3) with a diagonal, positive Γ.
fn algebra(g: [f64; 3]) -> AlgebraSpec<f64> {
    let gamma = Matrix::from_fn(3, 3, |i, j| if i == j { g[i] } else { 0.0 });
    AlgebraSpec::so3(gamma, Casimir::ConstantOne).unwrap()
}

fn el(v: [f64; 3]) -> AlgebraElement<f64> {
    AlgebraElement(v.to_vec())
}

fn scale(v: &[f64]) -> f64 {
    v.iter().fold(1.0, |m, x| m.max(x.abs()))
}

proptest! {
    #[test]
    fn bracket_is_antisymmetric(x in vec3(), y in vec3()) {
        let g = AlgebraSpec::<f64>::so3_standard();
        let xy = g.bracket(&el(x), &el(y)).unwrap();
        let yx = g.bracket(&el(y), &el(x)).unwrap();
        for (a, b) in xy.0.iter().zip(&yx.0) {
            prop_assert!((a + b).abs() <= 1e-12 * scale(&x) * scale(&y));
        }
    }

    #[test]
    fn bracket_satisfies_jacobi(x in vec3(), y in vec3(), z in vec3()) {
        let g = AlgebraSpec::<f64>::so3_standard();
        let br = |a: [f64; 3], b: &AlgebraElement<f64>| g.bracket(&el(a), b).unwrap();
        let s1 = br(x, &g.bracket(&el(y), &el(z)).unwrap());
        let s2 = br(y, &g.bracket(&el(z), &el(x)).unwrap());
        let s3 = br(z, &g.bracket(&el(x), &el(y)).unwrap());
        let bound = 1e-12 * scale(&x) * scale(&y) * scale(&z);
        for i in 0..3 {
            prop_assert!((s1.0[i] + s2.0[i] + s3.0[i]).abs() <= bound);
        }
    }

    #[test]
    fn coadjoint_is_dual_to_bracket(x in vec3(), y in vec3(), mu in vec3()) {
        let g = AlgebraSpec::<f64>::so3_standard();
        let m = CoalgebraElement(mu.to_vec());
        let lhs = g.pairing(&g.coadjoint(&el(x), &m).unwrap(), &el(y)).unwrap();
        let rhs = g.pairing(&m, &g.bracket(&el(x), &el(y)).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale(&x) * scale(&y) * scale(&mu));
    }

    #[test]
    fn complement_projection_is_idempotent(
        x in vec3(),
        mu in vec3().prop_filter("away from the origin", |m| norm3(m) > 1e-3),
        gamma in [0.2..5.0f64, 0.2..5.0f64, 0.2..5.0f64],
    ) {
        let g = algebra(gamma);
        let m = CoalgebraElement(mu.to_vec());
        let once = g.project_complement(&el(x), &m).unwrap();
        let twice = g.project_complement(&once, &m).unwrap();
        for (a, b) in once.0.iter().zip(&twice.0) {
            prop_assert!((a - b).abs() <= 1e-10 * scale(&x));
        }
        // On so(3) the isotropy of μ is the line through μ itself; the
        // projection is Γ⁻¹-orthogonal to it.
        prop_assert!(g.gamma_inverse_inner(&once, &el(mu)).unwrap().abs() <= 1e-9 * scale(&x) * scale(&mu));
    }

    #[test]
    fn rigid_body_field_is_tangent_to_momentum_spheres(
        m in vec3(),
        md in vec3(),
        alpha in -2.0..2.0f64,
    ) {
        let p = RigidBodyParams::new([0.8, 0.5, 0.4], alpha, 0.3, 1.5);
        let f = rigid_body_delay_rhs(&m, &md, &p);
        let bound = 1e-12 * (1.0 + alpha.abs()) * scale(&m).powi(2) * scale(&md).powi(2) * 10.0;
        prop_assert!(dot3(&m, &f).abs() <= bound);
    }

    #[test]
    fn sphere_field_is_tangent(q in vec3(), qd in vec3()) {
        let f = sphere_rhs(&q, &qd);
        prop_assert!(dot3(&q, &f).abs() <= 1e-11 * scale(&q).powi(2) * scale(&qd).powi(2));
    }

    #[test]
    fn dense_output_reproduces_cubics(c in [coord(), coord(), coord(), coord()], t in 0.0..3.0f64) {
        let f = |t: f64| c[0] + t * (c[1] + t * (c[2] + t * c[3]));
        let df = |t: f64| c[1] + t * (2.0 * c[2] + 3.0 * t * c[3]);
        let mut traj = Trajectory::new(1);
        for i in 0..=12 {
            let ti = 0.25 * i as f64;
            traj.append(ti, &[f(ti)], &[df(ti)]).unwrap();
        }
        let (x, dx) = traj.sample(t).unwrap();
        prop_assert!((x[0] - f(t)).abs() <= 1e-10 * scale(&c));
        prop_assert!((dx[0] - df(t)).abs() <= 1e-9 * scale(&c));
    }

    #[test]
    fn seventeen_digits_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
        let json = serde_json::to_string(&R17(x)).unwrap();
        prop_assert_eq!(serde_json::from_str::<f64>(&json).unwrap(), x);
    }
}

#[test]
fn non_finite_numbers_serialize_as_null() {
    assert_eq!(serde_json::to_string(&R17(f64::NAN)).unwrap(), "null");
    assert_eq!(serde_json::to_string(&R17(f64::INFINITY)).unwrap(), "null");
}
