use lpdelay::scalar::fmt17;
use lpdelay_cli::config::{InitialSpec, ModelConfig, RunConfig};
use proptest::prelude::*;

fn rigid_text(i: [f64; 3], alpha: f64, tau: f64, m: f64, h: f64, eps: f64, comment: bool) -> String {
    let mut s = String::new();
    if comment {
        s.push_str("# generated\n\n");
    }
    s += &format!(
        "model = rigid_body\nI1 = {}\nI2 = {}\nI3 = {}\nalpha = {}\ntau = {}   # delay\nm = {}\nh = {}\nt_end = 1\neps = {}\ndirection = 0, 1, 1\n",
        fmt17(i[0]),
        fmt17(i[1]),
        fmt17(i[2]),
        fmt17(alpha),
        fmt17(tau),
        fmt17(m),
        fmt17(h),
        fmt17(eps)
    );
    s
}

proptest! {
    #[test]
    fn rigid_body_values_survive_the_text_format(
        i1 in 1.0..3.0f64,
        i2 in 0.1..0.99f64,
        i3 in 0.1..0.99f64,
        alpha in -1.0..1.0f64,
        tau in 0.01..5.0f64,
        m in 0.1..5.0f64,
        h in 1e-4..0.1f64,
        eps in 0.0..0.5f64,
        comment in any::<bool>(),
    ) {
        let cfg = RunConfig::parse(&rigid_text([i1, i2, i3], alpha, tau, m, h, eps, comment)).unwrap();
        let ModelConfig::RigidBody(p) = cfg.model else { panic!("wrong model") };
        prop_assert_eq!(p.inertia, [i1, i2, i3]);
        prop_assert_eq!((p.alpha, p.tau, p.m), (alpha, tau, m));
        prop_assert_eq!(cfg.h, h);
        match cfg.initial {
            InitialSpec::Perturbed { equilibrium, eps: e, direction } => {
                prop_assert_eq!(equilibrium, vec![m, 0.0, 0.0]);
                prop_assert_eq!(e, eps);
                prop_assert_eq!(direction, vec![0.0, 1.0, 1.0]);
            }
            other => prop_assert!(false, "unexpected initial {:?}", other),
        }
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_line(key in "[a-z]{3,8}_x", line in 0usize..5) {
        let base = rigid_text([0.8, 0.5, 0.4], 0.3, 0.5, 1.5, 0.01, 0.01, false);
        let mut lines: Vec<String> = base.lines().map(str::to_owned).collect();
        lines.insert(line, format!("{key} = 1"));
        let err = RunConfig::parse(&lines.join("\n")).unwrap_err().to_string();
        prop_assert!(err.contains(&key), "{}", err);
        prop_assert!(err.contains(&(line + 1).to_string()), "{}", err);
    }
}
