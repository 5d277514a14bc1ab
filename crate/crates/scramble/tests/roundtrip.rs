use proptest::prelude::*;
use scramble::config::{ExperimentConfig, Method};
use scramble::output::{body_checksum, Table};

fn method() -> impl Strategy<Value = Method> {
    prop_oneof![
        prop::sample::select(Method::SIMPLE.to_vec()),
        "[a-z][a-z0-9-]{0,12}".prop_map(Method::Figure),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn canonical_config_parses_back(
        method in method(),
        n in 1usize..5000,
        j in -5.0f64..5.0,
        hf in 0.0f64..5.0,
        k in 0.0f64..50.0,
        tau in 0.01f64..10.0,
        alpha in 0.0f64..4.0,
        dt in 1e-4f64..1.0,
        t_max in 0.0f64..1e4,
        seed in any::<u64>(),
        threads in 1usize..64,
    ) {
        let mut cfg = ExperimentConfig { method, ..Default::default() };
        cfg.physics.n = n;
        cfg.physics.j = j;
        cfg.physics.hf = hf;
        cfg.physics.k = k;
        cfg.physics.tau = tau;
        cfg.physics.alpha = alpha;
        cfg.numerics.dt = dt;
        cfg.numerics.t_max = t_max;
        cfg.numerics.seed = seed;
        cfg.numerics.thread_count = threads;
        let text = cfg.to_canonical();
        let back = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_canonical(), text);
    }

    #[test]
    fn csv_round_trip_is_exact(
        rows in prop::collection::vec(prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 3), 0..40),
        note in "[a-zA-Z0-9 =.]{0,30}",
    ) {
        let mut t = Table::new("t", &["a", "b", "c"]).meta("note", note.trim());
        for r in &rows {
            t.push_nums(r);
        }
        let csv = t.to_csv();
        let back = Table::from_csv("t", &csv).unwrap();
        prop_assert_eq!(back.to_csv(), csv.clone());
        for (i, col) in ["a", "b", "c"].iter().enumerate() {
            let vals = back.column(col).unwrap();
            for (v, r) in vals.iter().zip(&rows) {
                prop_assert_eq!(v.to_bits(), r[i].to_bits());
            }
        }
        prop_assert_eq!(body_checksum(&back.to_csv()), body_checksum(&csv));
    }
}
