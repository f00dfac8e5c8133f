use super::*;
use crate::rng;
use proptest::prelude::*;
use rand::Rng;

fn weight(w: u64) -> u32 {
    w.count_ones()
}

#[test]
fn steane_pair_is_valid() {
    let pair = steane_css();
    assert_eq!(pair.n(), 7);
    assert_eq!(pair.c1().k(), 4);
    assert_eq!(pair.c2().k(), 3);
    assert_eq!(pair.key_bits(), 1);
    for g in pair.c1().generator_words() {
        assert!(pair.c1().contains_word(*g));
    }
    for w in pair.c2().codewords() {
        assert!(pair.c1().contains_word(w));
    }
}

#[test]
fn steane_codewords_split_into_two_cosets_of_eight() {
    let pair = steane_css();
    let words: Vec<u64> = pair.c1().codewords().collect();
    assert_eq!(words.len(), 16);
    let mut distinct = words.clone();
    distinct.sort_unstable();
    distinct.dedup();
    assert_eq!(distinct.len(), 16);
    // brute-force coset partition: v ~ v' iff v ⊕ v' ∈ C₂
    let c2: Vec<u64> = pair.c2().codewords().collect();
    let mut classes: Vec<Vec<u64>> = Vec::new();
    for &v in &words {
        match classes.iter_mut().find(|cls| c2.contains(&(cls[0] ^ v))) {
            Some(cls) => cls.push(v),
            None => classes.push(vec![v]),
        }
    }
    assert_eq!(classes.len(), 2);
    assert!(classes.iter().all(|c| c.len() == 8));
    for cls in &classes {
        let labels: Vec<Vec<u8>> = cls
            .iter()
            .map(|&v| coset_label(&pair, &unpack(v, 7)).unwrap())
            .collect();
        assert!(labels.windows(2).all(|w| w[0] == w[1]));
    }
}

#[test]
fn steane_corrects_every_single_flip() {
    let pair = steane_css();
    let mut ok = 0;
    for v in pair.c1().codewords() {
        for i in 0..7 {
            let received = unpack(v ^ (1 << i), 7);
            if decode_nearest(pair.c1(), &received).unwrap() == unpack(v, 7) {
                ok += 1;
            }
        }
        assert_eq!(decode_nearest(pair.c1(), &unpack(v, 7)).unwrap(), unpack(v, 7));
    }
    assert_eq!(ok, 112);
}

#[test]
fn steane_miscorrects_double_flips() {
    let pair = steane_css();
    for v in pair.c1().codewords() {
        for i in 0..7 {
            for j in (i + 1)..7 {
                let received = v ^ (1 << i) ^ (1 << j);
                let decoded = pack(&decode_nearest(pair.c1(), &unpack(received, 7)).unwrap()).unwrap();
                assert_ne!(decoded, v);
                assert!(pair.c1().contains_word(decoded));
            }
        }
    }
}

#[test]
fn decoder_matches_exhaustive_search() {
    // independent oracle: scan every codeword, keep minimum distance and
    // lexicographically smallest error pattern
    let mut r = rng::stream(2, 2);
    let pair = random_css(10, 5, 2, &mut r).unwrap();
    let code = pair.c1();
    let lex_key = |e: u64| e.reverse_bits() >> (64 - 10);
    for word in 0u64..1 << 10 {
        let best = code
            .codewords()
            .min_by_key(|&c| (weight(c ^ word), lex_key(c ^ word)))
            .unwrap();
        let got = pack(&decode_nearest(code, &unpack(word, 10)).unwrap()).unwrap();
        assert_eq!(got, best, "word {word:010b}");
    }
}

#[test]
fn syndrome_examples() {
    let pair = steane_css();
    let h = pair.c1().parity_check_rows();
    for v in pair.c1().codewords() {
        assert!(syndrome(pair.c1(), &unpack(v, 7)).unwrap().iter().all(|&b| b == 0));
        for i in 0..7 {
            let s = syndrome(pair.c1(), &unpack(v ^ (1 << i), 7)).unwrap();
            let column: Vec<u8> = h.iter().map(|row| row[i]).collect();
            assert_eq!(s, column);
        }
    }
    assert!(matches!(
        syndrome(pair.c1(), &[0, 1]),
        Err(QkdError::LengthMismatch { expected: 7, actual: 2 })
    ));
    assert!(matches!(
        syndrome(pair.c1(), &[0, 1, 2, 0, 0, 0, 0]),
        Err(QkdError::InvalidBit(2))
    ));
}

#[test]
fn coset_labels() {
    let pair = steane_css();
    assert_eq!(coset_label(&pair, &[0; 7]).unwrap(), vec![0]);
    for (i, row) in pair.coset_basis_rows().iter().enumerate() {
        let mut unit = vec![0u8; pair.key_bits()];
        unit[i] = 1;
        assert_eq!(coset_label(&pair, row).unwrap(), unit);
    }
    let v = pair.coset_basis_rows()[0].clone();
    let mut invariant = 0;
    for w in pair.c2().codewords() {
        let vw = xor_bits(&v, &unpack(w, 7)).unwrap();
        if coset_label(&pair, &vw).unwrap() == vec![1] {
            invariant += 1;
        }
    }
    assert_eq!(invariant, 8);
    assert!(matches!(
        coset_label(&pair, &[1, 0, 0, 0, 0, 0, 0]),
        Err(QkdError::NotInCode(_))
    ));
}

#[test]
fn reconciliation_agrees_on_correctable_errors() {
    let pair = steane_css();
    let mut r = rng::stream(4, 0);
    let u = vec![1, 0, 1, 1, 0, 0, 1];
    let rec = reconcile_and_extract(&pair, &u, &u, &mut r).unwrap();
    assert_eq!(rec.key_a, rec.key_b);
    for i in 0..7 {
        let mut bob = u.clone();
        bob[i] ^= 1;
        for _ in 0..10 {
            let rec = reconcile_and_extract(&pair, &u, &bob, &mut r).unwrap();
            assert_eq!(rec.key_a, rec.key_b, "flip at {i}");
        }
    }
    assert!(reconcile_and_extract(&pair, &u, &u[..6], &mut r).is_err());
}

#[test]
fn alice_key_is_balanced_over_masks() {
    let pair = steane_css();
    let u = pack(&[0, 1, 1, 0, 1, 0, 0]).unwrap();
    let mut ones = 0;
    for v in pair.c1().codewords() {
        let announced = unpack(u ^ v, 7);
        let key = recover_key(&pair, &unpack(u, 7), &announced).unwrap();
        assert_eq!(key, coset_label(&pair, &unpack(v, 7)).unwrap());
        ones += key[0] as usize;
    }
    assert_eq!(ones, 8);
}

// Exact key-agreement probability by enumerating all 128 error patterns:
// the keys agree iff the decoder's residual codeword lies in C₂, which
// includes some weight-3 patterns besides the correctable ones.
fn steane_exact_agreement(p: f64) -> f64 {
    let pair = steane_css();
    let c2: Vec<u64> = pair.c2().codewords().collect();
    let lex_key = |e: u64| e.reverse_bits() >> 57;
    (0u64..128)
        .filter(|&e| {
            let nearest = pair
                .c1()
                .codewords()
                .min_by_key(|&c| (weight(c ^ e), lex_key(c ^ e)))
                .unwrap();
            c2.contains(&nearest)
        })
        .map(|e| p.powi(weight(e) as i32) * (1.0 - p).powi(7 - weight(e) as i32))
        .sum()
}

#[test]
fn steane_agreement_rate_matches_enumeration() {
    let pair = steane_css();
    let trials = 100_000;
    for (s, p) in [0.01f64, 0.05, 0.11].into_iter().enumerate() {
        let mut r = rng::stream(31, s as u64);
        let (mut agree, mut decoded) = (0, 0);
        for _ in 0..trials {
            let u: Vec<u8> = (0..7).map(|_| r.random_bool(0.5) as u8).collect();
            let bob: Vec<u8> = u.iter().map(|&b| b ^ r.random_bool(p) as u8).collect();
            let rec = reconcile_and_extract(&pair, &u, &bob, &mut r).unwrap();
            agree += (rec.key_a == rec.key_b) as usize;
            let v = xor_bits(&u, &rec.announced).unwrap();
            let masked = xor_bits(&bob, &rec.announced).unwrap();
            decoded += (decode_nearest(pair.c1(), &masked).unwrap() == v) as usize;
        }
        let correctable = (1.0 - p).powi(7) + 7.0 * p * (1.0 - p).powi(6);
        let exact = steane_exact_agreement(p);
        assert!(exact > correctable);
        for (count, expected) in [(agree, exact), (decoded, correctable)] {
            let rate = count as f64 / trials as f64;
            let sigma = (expected * (1.0 - expected) / trials as f64).sqrt();
            assert!((rate - expected).abs() <= 3.0 * sigma, "p={p}: {rate} vs {expected}");
        }
    }
}

#[test]
fn sample_bound_values() {
    assert_eq!(sample_bound(100, 0.05, 0.0, SampleMode::Simple).unwrap(), 1.0);
    let expected = (-1000.0 * 0.0025 / (9.0 * 0.0475f64)).exp();
    assert!((sample_bound(1000, 0.05, 0.05, SampleMode::Simple).unwrap() - expected).abs() < 1e-15);
    for n in [10u64, 100, 1000, 12_345] {
        for (p, eps) in [(0.05, 0.05), (0.11, 0.02), (0.3, 0.1)] {
            let simple = sample_bound(n, p, eps, SampleMode::Simple).unwrap();
            let general = sample_bound(
                n,
                p,
                eps,
                SampleMode::General {
                    tested: n as f64 / 2.0,
                    total: 1.5 * n as f64,
                },
            )
            .unwrap();
            assert!((simple - general).abs() < 1e-12);
        }
    }
    assert!(sample_bound(10, 0.0, 0.1, SampleMode::Simple).is_err());
    assert!(sample_bound(10, 0.1, -0.1, SampleMode::Simple).is_err());
    assert!(sample_bound(
        10,
        0.1,
        0.1,
        SampleMode::General {
            tested: 5.0,
            total: 5.0
        }
    )
    .is_err());
}

#[test]
fn sample_bound_is_monotone() {
    let mut last = 1.0;
    for i in 1..50 {
        let b = sample_bound(500, 0.05, i as f64 * 0.01, SampleMode::Simple).unwrap();
        assert!(b < last);
        last = b;
    }
    let mut last = 1.0;
    for n in (10..2000).step_by(50) {
        let b = sample_bound(n, 0.05, 0.05, SampleMode::Simple).unwrap();
        assert!(b < last);
        last = b;
    }
}

#[test]
fn scramble_singleton_and_histogram() {
    let mut r = rng::stream(8, 8);
    let (p, perm) = scramble(&[42], &mut r);
    assert_eq!(p, vec![42]);
    assert_eq!(unscramble(&p, &perm).unwrap(), vec![42]);

    let draws = 100_000;
    let mut counts = std::collections::HashMap::new();
    for _ in 0..draws {
        let (p, _) = scramble(&[0, 1, 2], &mut r);
        *counts.entry(p).or_insert(0usize) += 1;
    }
    assert_eq!(counts.len(), 6);
    let expected = draws as f64 / 6.0;
    let chi2: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 5 degrees of freedom, p = 0.001 critical value
    assert!(chi2 < 20.515, "chi2 = {chi2}");
}

#[test]
fn permutation_validation() {
    assert!(Permutation::from_indices(vec![1, 0, 2]).is_ok());
    assert!(Permutation::from_indices(vec![1, 1, 2]).is_err());
    assert!(Permutation::from_indices(vec![0, 3]).is_err());
}

#[test]
fn codes_round_trip_through_json() {
    let pair = steane_css();
    let json = serde_json::to_string(&pair).unwrap();
    assert!(json.contains("\"generator\":[["));
    let back: CssPair = serde_json::from_str(&json).unwrap();
    assert_eq!(back, pair);
    let bad = json.replacen("\"k\":4", "\"k\":3", 1);
    assert!(serde_json::from_str::<CssPair>(&bad).is_err());
}

#[test]
fn invalid_codes_are_rejected() {
    assert!(BinaryCode::from_generator(3, vec![0b011, 0b011]).is_err());
    assert!(BinaryCode::from_generator(3, vec![0b1011]).is_err());
    let c1 = BinaryCode::from_generator(4, vec![0b0011]).unwrap();
    let c2 = BinaryCode::from_generator(4, vec![0b0101]).unwrap();
    assert!(CssPair::new(c1.clone(), c2).is_err());
    let same = CssPair::new(c1.clone(), c1);
    assert!(same.is_err());
    let mut r = rng::stream(0, 0);
    assert!(random_css(30, 5, 2, &mut r).is_err());
    assert!(random_css(8, 3, 3, &mut r).is_err());
}

#[test]
fn random_css_rate_trend() {
    // lower-rate random codes tolerate more flips: agreement at p = 0.05
    // should not get worse when C₁ shrinks
    let trials = 4000;
    let mut rates = Vec::new();
    for k1 in [14usize, 10, 6] {
        let mut r = rng::stream(77, k1 as u64);
        let mut agree = 0;
        for _ in 0..trials {
            let pair = random_css(16, k1, 1, &mut r).unwrap();
            let u: Vec<u8> = (0..16).map(|_| r.random_bool(0.5) as u8).collect();
            let bob: Vec<u8> = u.iter().map(|&b| b ^ r.random_bool(0.05) as u8).collect();
            let rec = reconcile_and_extract(&pair, &u, &bob, &mut r).unwrap();
            agree += (rec.key_a == rec.key_b) as usize;
        }
        rates.push(agree as f64 / trials as f64);
    }
    assert!(rates[0] < rates[2], "{rates:?}");
}

proptest! {
    #[test]
    fn syndrome_is_linear(a in 0u64..128, b in 0u64..128) {
        let pair = steane_css();
        let sa = syndrome(pair.c1(), &unpack(a, 7)).unwrap();
        let sb = syndrome(pair.c1(), &unpack(b, 7)).unwrap();
        let sab = syndrome(pair.c1(), &unpack(a ^ b, 7)).unwrap();
        prop_assert_eq!(sab, xor_bits(&sa, &sb).unwrap());
    }

    #[test]
    fn scramble_round_trips(words in proptest::collection::vec(any::<u16>(), 0..64), seed in any::<u64>()) {
        let mut r = rng::stream(seed, 0);
        let (p, perm) = scramble(&words, &mut r);
        prop_assert_eq!(unscramble(&p, &perm).unwrap(), words);
    }

    #[test]
    fn decoded_word_is_a_codeword(word in 0u64..128) {
        let pair = steane_css();
        let d = decode_nearest(pair.c1(), &unpack(word, 7)).unwrap();
        prop_assert!(pair.c1().contains_word(pack(&d).unwrap()));
        prop_assert!(weight(pack(&d).unwrap() ^ word) <= 1);
    }
}
