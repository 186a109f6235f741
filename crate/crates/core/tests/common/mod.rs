//! Test-only oracles. Nothing here calls into the crate: the protocol
//! algebra is restated with plain `bool`s so that it can check the
//! implementation rather than echo it.

#![allow(dead_code)]

fn f(z: bool, x: bool, y: bool) -> bool {
    if z {
        y
    } else {
        x
    }
}

/// The four recovered bits `(key_m, key_s, key_i, key_j)` of one position,
/// given the receiver's two measurement results `a` and `b`. Sender-side
/// key_m is compared against `m`; receiver-side key_s, key_i, key_j against
/// `s`, `i`, `j`.
pub fn recover(s: bool, i: bool, m: bool, x: bool, j: bool, a: bool, b: bool) -> [bool; 4] {
    let t = s ^ x;
    let n = true ^ m ^ x;
    let y = i ^ j;
    let u = n ^ f(m, a, b ^ y);
    let v = n ^ f(m, b, a ^ y);
    let key_m = t ^ f(s, (true ^ i) ^ u, j ^ v);
    let l = s ^ key_m;
    let key_s = m ^ l;
    let key_i = f(l, a, b ^ y);
    let key_j = f(l, a ^ y, b);
    [key_m, key_s, key_i, key_j]
}

/// Distribution of the receiver's result for one pulse prepared as
/// `(basis, value)`, measured in `recv_basis`, with an intercept-resend
/// attacker in a uniformly random basis when `attacked`. Returns
/// `[(result, probability)]`.
pub fn measured(basis: bool, value: bool, recv_basis: bool, attacked: bool) -> Vec<(bool, f64)> {
    let mut out = Vec::new();
    if !attacked {
        if basis == recv_basis {
            out.push((value, 1.0));
        } else {
            out.push((false, 0.5));
            out.push((true, 0.5));
        }
        return out;
    }
    for eve_basis in [false, true] {
        let eve_outcomes: Vec<(bool, f64)> = if eve_basis == basis {
            vec![(value, 1.0)]
        } else {
            vec![(false, 0.5), (true, 0.5)]
        };
        for (resent, p_eve) in eve_outcomes {
            if eve_basis == recv_basis {
                out.push((resent, 0.5 * p_eve));
            } else {
                out.push((false, 0.5 * p_eve * 0.5));
                out.push((true, 0.5 * p_eve * 0.5));
            }
        }
    }
    out
}

/// Exact per-position error probability of each recovered key when every
/// pulse of both rounds is intercepted and resent in a random basis, with
/// `(s, i, m, x, j)` uniform.
pub fn seed_attack_error_rates() -> [f64; 4] {
    let mut err = [0.0; 4];
    for v in 0..32u32 {
        let bit = |k: u32| (v >> k) & 1 == 1;
        let (s, i, m, x, j) = (bit(0), bit(1), bit(2), bit(3), bit(4));
        let t = s ^ x;
        let n = true ^ m ^ x;
        for (a, pa) in measured(s, i, m, true) {
            for (b, pb) in measured(t, j, n, true) {
                let p = pa * pb / 32.0;
                let got = recover(s, i, m, x, j, a, b);
                for (slot, truth) in [m, s, i, j].into_iter().enumerate() {
                    if got[slot] != truth {
                        err[slot] += p;
                    }
                }
            }
        }
    }
    err
}

/// Exact error probability of a sifted BB84 position under full random
/// intercept-resend.
pub fn bb84_attack_error_rate() -> f64 {
    let mut err = 0.0;
    let mut kept = 0.0;
    for v in 0..8u32 {
        let bit = |k: u32| (v >> k) & 1 == 1;
        let (s, i, m) = (bit(0), bit(1), bit(2));
        if s != m {
            continue;
        }
        for (a, p) in measured(s, i, m, true) {
            kept += p / 8.0;
            if a != i {
                err += p / 8.0;
            }
        }
    }
    err / kept
}

pub fn three_sigma(p: f64, samples: usize) -> f64 {
    3.0 * (p * (1.0 - p) / samples as f64).sqrt()
}
