use fstefan::stepper::{run_pair, step};
use fstefan::{
    center_shift, excess_mass, l1_local_distance, reflect_two_to_one, run, FarField, Field,
    GraphKind, Grid1D, RunConfig, StefanGraph, Stencil,
};
use proptest::prelude::*;

fn graph_kind() -> impl Strategy<Value = GraphKind> {
    prop_oneof![
        Just(GraphKind::OnePhase),
        Just(GraphKind::TwoPhase),
        Just(GraphKind::TwoPhaseCentered)
    ]
}

fn graph() -> impl Strategy<Value = StefanGraph> {
    (
        graph_kind(),
        0.2..3.0f64,
        prop::array::uniform3(0.3..2.0f64),
    )
        .prop_map(|(kind, l, k)| StefanGraph::new(kind, l, k).unwrap())
}

fn stencil(dx: f64) -> impl Strategy<Value = Stencil> {
    prop_oneof![
        4 => (0.1..0.95f64, 2usize..80).prop_map(move |(s, r)| Stencil::fractional(s, dx, r).unwrap()),
        1 => Just(Stencil::local(dx).unwrap()),
    ]
}

/// Grid, stencil and a field with a random constant far field per side.
fn setup() -> impl Strategy<Value = (Field, Stencil)> {
    (5usize..50, prop_oneof![Just(0.05), Just(0.1), Just(0.25)]).prop_flat_map(|(n, dx)| {
        (
            prop::collection::vec(-2.0..3.0f64, n),
            -2.0..3.0f64,
            -2.0..3.0f64,
            stencil(dx),
        )
            .prop_map(move |(v, l, r, st)| {
                let grid = Grid1D::new(-0.5 * dx * (n - 1) as f64, dx, n).unwrap();
                (Field::new(grid, v, FarField::new(l, r)).unwrap(), st)
            })
    })
}

/// `a <= b` nodewise with the far field of `a`.
fn ordered_pair() -> impl Strategy<Value = (Field, Field, Stencil)> {
    setup().prop_flat_map(|(a, st)| {
        let n = a.values().len();
        (Just(a), prop::collection::vec(0.0..2.0f64, n), Just(st)).prop_map(|(a, bump, st)| {
            let b: Vec<f64> = a.values().iter().zip(&bump).map(|(x, d)| x + d).collect();
            let b = a.with_values(b, a.farfield());
            (a, b, st)
        })
    })
}

fn config(field: &Field, st: &Stencil, graph: StefanGraph, steps: usize) -> RunConfig {
    let probe = RunConfig::new(
        graph,
        st.clone(),
        *field.grid(),
        field.farfield(),
        1.0,
        vec![],
    );
    let t = probe.dt().unwrap() * steps as f64;
    RunConfig::new(
        graph,
        st.clone(),
        *field.grid(),
        field.farfield(),
        t,
        vec![t],
    )
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 128,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn phi_is_monotone_and_lipschitz(g in graph(), a in -5.0..5.0f64, d in 0.0..4.0f64) {
        let b = a + d;
        let (pa, pb) = (g.eval(a), g.eval(b));
        prop_assert!(pb >= pa);
        prop_assert!(pb - pa <= g.lipschitz_bound() * d * (1.0 + 1e-12) + 1e-15);
        let (lo, hi) = g.flat_interval();
        if a >= lo && a <= hi {
            prop_assert_eq!(pa, 0.0);
        }
    }

    #[test]
    fn reflection_maps_two_phase_steps_to_one_phase_steps(
        (field, st) in setup(), l in 0.2..3.0f64, k2 in 0.3..2.0f64,
    ) {
        // clip the data below L so that only the ice branch is active
        let clipped: Vec<f64> = field.values().iter().map(|h| h.min(l)).collect();
        let ff = field.farfield();
        let h = field.with_values(clipped, FarField::new(ff.left.min(l), ff.right.min(l)));
        let two = StefanGraph::new(GraphKind::TwoPhase, l, [1.0, 1.0, k2]).unwrap();
        let one = StefanGraph::new(GraphKind::OnePhase, l, [k2, 1.0, 1.0]).unwrap();
        let dt = 0.9 / (k2.max(1.0) * st.row_sum());
        let direct = step(&h, &st, &two, dt).unwrap();
        let via = reflect_two_to_one(&step(&reflect_two_to_one(&h, l), &st, &one, dt).unwrap(), l);
        for (a, b) in direct.values().iter().zip(via.values()) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{} vs {}", a, b);
        }
        let back = reflect_two_to_one(&reflect_two_to_one(&h, l), l);
        for (a, b) in back.values().iter().zip(h.values()) {
            prop_assert!((a - b).abs() <= 1e-15 * (1.0 + l));
        }
    }

    #[test]
    fn centered_graph_is_a_shift((field, st) in setup(), l in 0.2..3.0f64) {
        let two = StefanGraph::two_phase(l).unwrap();
        let centered = StefanGraph::two_phase_centered(l).unwrap();
        let dt = 0.9 / st.row_sum();
        let direct = step(&field, &st, &two, dt).unwrap();
        let shifted = step(&center_shift(&field, l), &st, &centered, dt).unwrap();
        for (a, b) in direct.values().iter().zip(shifted.values()) {
            prop_assert!((a - (b + 0.5 * l)).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn local_distance_is_a_metric((a, st) in setup(), seed in prop::collection::vec(-1.0..1.0f64, 2)) {
        let _ = st;
        let n = a.values().len();
        let b = a.with_values(a.values().iter().map(|v| v + seed[0]).collect(), a.farfield());
        let c = a.with_values((0..n).map(|i| a.values()[i] * seed[1]).collect(), a.farfield());
        let k = (a.grid().x_min(), a.grid().x_max());
        let d = |x: &Field, y: &Field| l1_local_distance(x, y, k).unwrap();
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
        prop_assert!(d(&a, &b) >= 0.0);
    }

    #[test]
    fn operator_is_self_adjoint((field, st) in setup(), w in prop::collection::vec(-1.0..1.0f64, 50)) {
        let v = field.values();
        let w = &w[..v.len()];
        let lv = st.apply(v, (0.0, 0.0));
        let lw = st.apply(w, (0.0, 0.0));
        let a: f64 = w.iter().zip(&lv).map(|(x, y)| x * y).sum();
        let b: f64 = v.iter().zip(&lw).map(|(x, y)| x * y).sum();
        let scale: f64 = st.row_sum() * v.iter().chain(w).map(|x| x.abs()).sum::<f64>();
        prop_assert!((a - b).abs() <= 1e-13 * scale, "{} vs {}", a, b);
    }

    #[test]
    fn operator_annihilates_constants(c in -3.0..3.0f64, n in 3usize..40, s in 0.1..0.95f64) {
        let st = Stencil::fractional(s, 0.1, 64).unwrap();
        let out = st.apply(&vec![c; n], (c, c));
        prop_assert!(out.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn comparison_and_contraction((a, b, st) in ordered_pair(), g in graph(), steps in 1usize..25) {
        let cfg = config(&a, &st, g, steps);
        let rep = run_pair(&cfg, &a, &b).unwrap();
        prop_assert!(rep.comparison_held());
        prop_assert!(rep.l1_contracted(1e-12));
        // and the reverse pairing: (b − a)⁺ > 0 but contraction still holds
        let rev = run_pair(&cfg, &b, &a).unwrap();
        prop_assert!(rev.l1_contracted(1e-12));
    }

    #[test]
    fn maximum_principle((field, st) in setup(), g in graph(), steps in 1usize..25) {
        let cfg = config(&field, &st, g, steps);
        let series = run(&cfg, &field).unwrap();
        let lo = field.min().min(field.farfield().min());
        let hi = field.max().max(field.farfield().max());
        for r in series.monitor_log() {
            prop_assert!(r.inf >= lo && r.sup <= hi, "{:?} outside [{}, {}]", r, lo, hi);
        }
    }

    #[test]
    fn mass_balance_closes((field, st) in setup(), g in graph(), steps in 1usize..25) {
        let cfg = config(&field, &st, g, steps);
        let series = run(&cfg, &field).unwrap();
        let scale = 1.0 + field.values().iter().map(|v| v.abs()).sum::<f64>() * field.grid().dx();
        prop_assert!(series.mass_drift() <= 1e-12 * scale * steps as f64, "{}", series.mass_drift());
        let e0 = excess_mass(&field, &field.farfield());
        prop_assert!((series.monitor_log()[0].excess_mass - e0).abs() <= 1e-15 * scale);
    }

    #[test]
    fn oversized_steps_are_refused((field, st) in setup(), g in graph(), f in 1.01..3.0f64) {
        let dt = f / (g.lipschitz_bound() * st.row_sum());
        prop_assert_eq!(step(&field, &st, &g, dt).unwrap_err().exit_code(), 3);
    }
}
