use proptest::prelude::*;
use tvinpaint_cli::{generate_signal, load_signal, Generator, SignalFormat};

fn generator() -> impl Strategy<Value = Generator> {
    prop_oneof![
        (-10.0f64..10.0, -10.0f64..10.0, 0.0f64..1.0).prop_map(|(lo, hi, loc)| Generator::Step { lo, hi, loc }),
        (-10.0f64..10.0, -10.0f64..10.0).prop_map(|(lo, hi)| Generator::Ramp { lo, hi }),
        prop::collection::vec(-10.0f64..10.0, 1..8).prop_map(|levels| Generator::Piecewise { levels }),
        (1usize..20).prop_map(|pieces| Generator::Random { pieces }),
    ]
}

proptest! {
    #[test]
    fn generator_text_round_trips(g in generator()) {
        prop_assert_eq!(g.to_string().parse::<Generator>().unwrap(), g);
    }

    #[test]
    fn generated_signals_are_sized_and_seeded(g in generator(), samples in 2usize..400, seed in any::<u64>()) {
        let a = generate_signal(&g, samples, seed).unwrap();
        prop_assert_eq!(a.len(), samples);
        prop_assert!(a.iter().all(|v| v.is_finite()));
        prop_assert_eq!(a, generate_signal(&g, samples, seed).unwrap());
    }

    #[test]
    fn raw_float_files_load_exactly(values in prop::collection::vec(-1e6f64..1e6, 1..200)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.txt");
        let text: String = values.iter().map(|v| format!("{v:e}\n")).collect();
        std::fs::write(&path, text).unwrap();
        prop_assert_eq!(load_signal(&path, SignalFormat::RawFloats, false).unwrap(), values);
    }
}
