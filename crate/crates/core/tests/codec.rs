use std::collections::HashSet;

use polarnet::chain::path_rates;
use polarnet::channel::DiscreteChannel;
use polarnet::codec::{build_code, simulate, theorem1_check, transmit, CodeConfig, CompoundCodeSpec, InfoSelection, Role, Strategy};
use polarnet::error::Error;
use polarnet::estimator::Estimator;
use polarnet::polar::Thresholds;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn noiseless() -> DiscreteChannel {
    DiscreteChannel::independent_erasures(&[0.0, 0.0]).unwrap()
}

/// Y is the XOR erasure MAC, Z erases each input independently; both sum
/// rates are 1.5 and the target sits on both dominant faces.
fn erasure_pair(a: f64) -> (DiscreteChannel, DiscreteChannel, [f64; 2]) {
    let y = DiscreteChannel::xor_erasure(0.5).unwrap();
    let z = DiscreteChannel::independent_erasures(&[a, 0.5 - a]).unwrap();
    (y, z, [1.0 - a, 0.5 + a])
}

fn config(n: usize, levels: usize, good: f64) -> CodeConfig {
    let mut cfg = CodeConfig::new(n, levels);
    cfg.thresholds = Thresholds::new(good, 1.0 - good).unwrap();
    cfg
}

fn random_messages(spec: &CompoundCodeSpec, rng: &mut impl Rng) -> Vec<Vec<u8>> {
    spec.message_lengths().iter().map(|&l| (0..l).map(|_| rng.gen::<bool>() as u8).collect()).collect()
}

fn noiseless_round_trip(spec: &CompoundCodeSpec, msgs: &[Vec<u8>], rng: &mut impl Rng) {
    let ch = noiseless();
    let cw = spec.encode(msgs).unwrap();
    assert!(cw.iter().all(|c| c.len() == spec.total_length));
    for r in 0..2 {
        let y = transmit(&ch, &cw, rng);
        let dec = spec.sc_decode(r, &ch, &y).unwrap();
        for &j in &spec.decode_sets[r] {
            assert_eq!(dec[j], msgs[j], "receiver {r} user {j}");
        }
    }
}

fn exhaustive(spec: &CompoundCodeSpec) {
    let lens = spec.message_lengths();
    let total: usize = lens.iter().sum();
    assert!(total <= 20, "{total} message bits is too many to enumerate");
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut seen = HashSet::new();
    for word in 0u64..1 << total {
        let mut bit = 0;
        let msgs: Vec<Vec<u8>> = lens
            .iter()
            .map(|&l| {
                let m = (0..l).map(|i| (word >> (bit + i) & 1) as u8).collect();
                bit += l;
                m
            })
            .collect();
        noiseless_round_trip(spec, &msgs, &mut rng);
        assert!(seen.insert(spec.encode(&msgs).unwrap()), "two messages share a codeword");
    }
}

#[test]
fn noiseless_identity_exhaustive_at_n8() {
    let ch = noiseless();
    let plain = build_code(&ch, &ch, &[1.0, 1.0], &CodeConfig::new(8, 0)).unwrap();
    assert_eq!(plain.message_lengths(), vec![8, 8]);
    exhaustive(&plain);

    let (y, z, t) = erasure_pair(0.2);
    let spec = build_code(&y, &z, &t, &config(8, 1, 0.8)).unwrap();
    assert!(spec.message_lengths().iter().all(|&l| l > 0));
    exhaustive(&spec);

    let (y, z, t) = erasure_pair(0.4);
    let mut cfg = config(8, 1, 0.9);
    cfg.frozen_seed = Some(3);
    let seeded = build_code(&y, &z, &t, &cfg).unwrap();
    exhaustive(&seeded);
}

#[test]
fn noiseless_identity_at_n1024_two_levels() {
    let (y, z, t) = erasure_pair(0.4);
    let spec = build_code(&y, &z, &t, &CodeConfig::new(1024, 2)).unwrap();
    assert_eq!(spec.total_length, 4096);
    assert!(!spec.schedule.pairs.is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let msgs = random_messages(&spec, &mut rng);
        noiseless_round_trip(&spec, &msgs, &mut rng);
    }
}

#[test]
fn zero_messages_give_zero_codewords() {
    let (y, z, t) = erasure_pair(0.4);
    let spec = build_code(&y, &z, &t, &CodeConfig::new(64, 2)).unwrap();
    let zeros: Vec<Vec<u8>> = spec.message_lengths().iter().map(|&l| vec![0; l]).collect();
    assert!(spec.encode(&zeros).unwrap().iter().all(|c| c.iter().all(|&b| b == 0)));
}

#[test]
fn single_bit_flips_change_the_codeword() {
    let (y, z, t) = erasure_pair(0.4);
    let spec = build_code(&y, &z, &t, &CodeConfig::new(256, 2)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let msgs = random_messages(&spec, &mut rng);
    let base = spec.encode(&msgs).unwrap();
    for j in 0..2 {
        for i in 0..msgs[j].len() {
            let mut m = msgs.clone();
            m[j][i] ^= 1;
            let cw = spec.encode(&m).unwrap();
            assert_ne!(cw[j], base[j]);
            assert_eq!(cw[1 - j], base[1 - j]);
        }
    }
}

#[test]
fn wrong_message_length_is_a_size_error() {
    let (y, z, t) = erasure_pair(0.2);
    let spec = build_code(&y, &z, &t, &CodeConfig::new(64, 1)).unwrap();
    let mut msgs: Vec<Vec<u8>> = spec.message_lengths().iter().map(|&l| vec![0; l]).collect();
    msgs[0].push(1);
    assert!(matches!(spec.encode(&msgs), Err(Error::Size(_))));
    assert!(matches!(spec.encode(&msgs[..1]), Err(Error::Size(_))));
}

#[test]
fn roles_partition_every_aligned_variable() {
    let (y, z, t) = erasure_pair(0.4);
    let spec = build_code(&y, &z, &t, &CodeConfig::new(256, 3)).unwrap();
    for j in 0..2 {
        let counts = spec.role_counts(j);
        assert_eq!(counts.iter().map(|(_, c)| c).sum::<usize>(), spec.total_length);
        let info = counts.iter().find(|(r, _)| *r == Role::Info).map_or(0, |(_, c)| *c);
        assert_eq!(spec.rates[j], info as f64 / spec.total_length as f64);
        let minus = counts.iter().find(|(r, _)| *r == Role::FrozenMinus).map_or(0, |(_, c)| *c);
        assert_eq!(minus, spec.schedule.pairs.iter().filter(|p| p.user() == j).count());
    }
}

#[test]
fn identical_receivers_need_no_alignment() {
    let y = DiscreteChannel::xor_erasure(0.5).unwrap();
    let spec = build_code(&y, &y, &[0.8, 0.7], &CodeConfig::new(1024, 0)).unwrap();
    let prof = path_rates(&y, &spec.splits[0].path, &Estimator::default()).unwrap();
    for j in 0..2 {
        assert!(spec.roles[j].iter().all(|&r| r != Role::FrozenIncompatible));
        let good: Vec<usize> = (0..1024).filter(|&i| prof.per_index_mi[j][i] > 0.99).collect();
        assert_eq!(spec.info_positions(j).len(), good.len());
    }
    let rep = theorem1_check(&spec, 1e-9);
    for u in &rep.users {
        assert!(u.gap_ii >= 0.0);
        assert!((u.rate_y - u.rate_z).abs() < 1e-12);
    }
    assert!(theorem1_check(&spec, 1.0).holds());
    assert!(theorem1_check(&spec, 0.2).holds());
}

#[test]
fn any_code_passes_with_unit_epsilon() {
    let (y, z, t) = erasure_pair(0.2);
    for levels in 0..3 {
        let spec = build_code(&y, &z, &t, &CodeConfig::new(128, levels)).unwrap();
        assert!(theorem1_check(&spec, 1.0).holds());
    }
}

#[test]
fn alignment_improves_the_erasure_compound_code() {
    let (y, z, t) = erasure_pair(0.4);
    let reports: Vec<_> = (0..=4)
        .map(|levels| {
            let spec = build_code(&y, &z, &t, &CodeConfig::new(1024, levels)).unwrap();
            for j in 0..2 {
                let f = spec.schedule.incompatible_fraction(j);
                let mut halvings = 0;
                for (step, lvl) in spec.schedule.levels.iter().enumerate() {
                    if lvl.user == j {
                        halvings += 1;
                    }
                    assert_eq!(f[step + 1] * (1u64 << halvings), f[0], "user {j} level {}", step + 1);
                }
            }
            theorem1_check(&spec, 0.1)
        })
        .collect();
    for j in 0..2 {
        for w in reports.windows(2) {
            assert!(w[1].users[j].gap_ii <= w[0].users[j].gap_ii + 1e-12);
            assert!(w[1].users[j].jointly_good >= w[0].users[j].jointly_good);
        }
    }
    assert!((0..2).any(|j| reports[4].users[j].gap_ii < reports[0].users[j].gap_ii - 1e-3), "no user improved");
}

#[test]
fn unequal_sum_targets_are_dominated() {
    let y = DiscreteChannel::xor_erasure(0.4).unwrap();
    let z = DiscreteChannel::independent_erasures(&[0.2, 0.3]).unwrap();
    let target = [0.7, 0.6];
    let mut cfg = CodeConfig::new(256, 1);
    assert!(matches!(build_code(&y, &z, &target, &cfg), Err(Error::Precondition(_))));
    cfg.strategy = Strategy::UnequalSum;
    let spec = build_code(&y, &z, &target, &cfg).unwrap();
    for s in &spec.splits {
        assert_eq!(s.target.projected_from.as_deref(), Some(&target[..]));
        for j in 0..2 {
            assert!(s.target.target[j] >= target[j] - 1e-12, "{:?}", s.target.target);
        }
    }
    let zt = &spec.splits[1].target.target;
    assert!((zt[0] - 0.8).abs() < 1e-12 && (zt[1] - 0.7).abs() < 1e-12);
}

#[test]
fn targets_outside_the_region_are_rejected() {
    let (y, z, _) = erasure_pair(0.2);
    let mut cfg = CodeConfig::new(64, 0);
    cfg.strategy = Strategy::UnequalSum;
    assert!(matches!(build_code(&y, &z, &[1.0, 0.9], &cfg), Err(Error::Precondition(_))));
}

#[test]
fn erasure_code_with_margin_decodes_reliably() {
    let (y, z, t) = erasure_pair(0.2);
    let mut cfg = config(1024, 2, 0.999);
    cfg.info = InfoSelection::Margin { fraction: 0.9 };
    let spec = build_code(&y, &z, &t, &cfg).unwrap();
    let rec = simulate(&spec, [&y, &z], 500, 11).unwrap();
    assert!(rec.bler[0] < 0.02 && rec.bler[1] < 0.02, "{:?}", rec.bler);
    assert!(rec.bler_ci[0].0 <= rec.bler[0] && rec.bler[0] <= rec.bler_ci[0].1);
    let again = simulate(&spec, [&y, &z], 500, 11).unwrap();
    assert_eq!(rec, again);
}

#[test]
fn decoding_with_the_other_receivers_path_fails() {
    let (y, z, t) = erasure_pair(0.2);
    let spec = build_code(&y, &z, &t, &config(1024, 2, 0.999)).unwrap();
    assert_ne!(spec.splits[0].path, spec.splits[1].path);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut right, mut wrong) = (0, 0);
    for _ in 0..100 {
        let msgs = random_messages(&spec, &mut rng);
        let cw = spec.encode(&msgs).unwrap();
        let out = transmit(&y, &cw, &mut rng);
        right += (spec.sc_decode(0, &y, &out).unwrap() != msgs) as usize;
        wrong += (spec.sc_decode(1, &y, &out).unwrap() != msgs) as usize;
    }
    assert!(right <= 10, "{right} errors on the matched path");
    assert!(wrong >= 50, "only {wrong} errors on the mismatched path");
}

#[test]
fn partial_decode_sets_round_trip() {
    let (y, z, t) = erasure_pair(0.2);
    let mut cfg = CodeConfig::new(256, 1);
    cfg.decode_sets = Some([vec![0, 1], vec![1]]);
    cfg.strategy = Strategy::UnequalSum;
    let spec = build_code(&y, &z, &t, &cfg).unwrap();
    assert_eq!(spec.decode_sets, [vec![0, 1], vec![1]]);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..50 {
        let msgs = random_messages(&spec, &mut rng);
        noiseless_round_trip(&spec, &msgs, &mut rng);
    }
    cfg.decode_sets = Some([vec![0], vec![0]]);
    assert!(matches!(build_code(&y, &z, &t, &cfg), Err(Error::Config(_))));
}

#[test]
fn spec_json_round_trip() {
    let (y, z, t) = erasure_pair(0.4);
    let spec = build_code(&y, &z, &t, &CodeConfig::new(64, 2)).unwrap();
    let text = serde_json::to_string(&spec).unwrap();
    let back: CompoundCodeSpec = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string(&back).unwrap(), text);
    assert_eq!(back, spec);
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let msgs = random_messages(&spec, &mut rng);
    assert_eq!(back.encode(&msgs).unwrap(), spec.encode(&msgs).unwrap());
}
