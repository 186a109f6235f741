mod common;

use proptest::prelude::*;
use seedqkd::seedqkd::{run_seed_protocol, KeyName};
use seedqkd::swap::{run_swap, SwapConfig};
use seedqkd::{SessionConfig, SessionSources};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn noiseless_seed_session_matches_plain_oracle(master in any::<u64>(), n in 1usize..200) {
        let s = run_seed_protocol(&SessionConfig::ideal(n), &mut SessionSources::derive(master, 0)).unwrap();
        let out = &s.reconciliation.bob_out;
        for k in 0..n {
            let expected = common::recover(
                s.alice.s[k].is_one(),
                s.alice.i[k].is_one(),
                s.bob.m[k].is_one(),
                s.round2.x[k].is_one(),
                s.round2.j[k].is_one(),
                s.bob.a[k].is_one(),
                s.round2.b[k].is_one(),
            );
            let got = KeyName::ALL.map(|name| out.get(name)[k].is_one());
            prop_assert_eq!(got, expected);
            prop_assert_eq!(expected, [
                s.bob.m[k].is_one(),
                s.alice.s[k].is_one(),
                s.alice.i[k].is_one(),
                s.round2.j[k].is_one(),
            ]);
        }
        prop_assert!(s.reconciliation.alice_out.all_verified());
    }

    #[test]
    fn noiseless_swap_always_agrees(master in any::<u64>(), n in 1usize..300, reuse in any::<bool>()) {
        let mut config = SwapConfig::ideal(n);
        config.reuse_states = reuse;
        let out = run_swap(&config, master, 0).unwrap();
        prop_assert_eq!(&out.alice_key, &out.bob_key);
        prop_assert_eq!(out.alice_key, out.central.common_key(&out.announcement));
    }
}
