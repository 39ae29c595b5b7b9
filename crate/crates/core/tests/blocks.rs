use mpsi_core::blocks::*;
use mpsi_core::circuit::{GateCounter, GateSink, PlainSink};
use mpsi_core::oracle::{is_sorted, popcount_oracle, same_multiset, sort_oracle, zero_one_vectors};
use mpsi_core::psi::unpack_bits;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn bus(v: u128, width: usize) -> Bus<bool> {
    Bus((0..width).map(|i| (v >> i) & 1 == 1).collect())
}

fn val(b: &Bus<bool>) -> u128 {
    unpack_bits(b.wires())
}

fn sink() -> PlainSink {
    PlainSink::new(Vec::new(), Vec::new())
}

fn buses(v: &[u128], width: usize) -> Vec<Bus<bool>> {
    v.iter().map(|&x| bus(x, width)).collect()
}

fn values(v: &[Bus<bool>]) -> Vec<u128> {
    v.iter().map(val).collect()
}

#[test]
fn comparators_exhaustive_width_3() {
    let mut s = sink();
    for x in 0..8u128 {
        for y in 0..8u128 {
            let (bx, by) = (bus(x, 3), bus(y, 3));
            assert_eq!(build_gt(&mut s, &bx, &by).unwrap(), x > y, "{x} > {y}");
            assert_eq!(build_eq(&mut s, &bx, &by).unwrap(), x == y, "{x} == {y}");
            for sel in [false, true] {
                let m = build_mux(&mut s, sel, &bx, &by).unwrap();
                assert_eq!(val(&m), if sel { x } else { y });
                let (a, b) = build_cond_swap(&mut s, sel, &bx, &by).unwrap();
                assert_eq!((val(&a), val(&b)), if sel { (y, x) } else { (x, y) });
            }
        }
        assert_eq!(build_nonzero(&mut s, &bus(x, 3)), x != 0);
    }
}

#[test]
fn two_sorter_exhaustive_width_4() {
    let mut s = sink();
    for x in 0..16u128 {
        for y in 0..16u128 {
            let (lo, hi) = build_2sorter(&mut s, &bus(x, 4), &bus(y, 4)).unwrap();
            assert_eq!((val(&lo), val(&hi)), (x.min(y), x.max(y)));
        }
    }
}

#[test]
fn dup_selection_exhaustive_width_3() {
    let mut s = sink();
    for a in 0..8u128 {
        for b in 0..8u128 {
            for c in 0..8u128 {
                let (out, m) = build_3dupselection(&mut s, &bus(a, 3), &bus(b, 3), &bus(c, 3)).unwrap();
                let hit = a == b || b == c;
                assert_eq!(m, hit);
                assert_eq!(val(&out), if hit { b } else { 0 });
            }
        }
    }
}

#[test]
fn merger_zero_one_principle() {
    for n in [1usize, 2, 4, 8] {
        for a in zero_one_vectors(n) {
            if !is_sorted(&a) {
                continue;
            }
            for b in zero_one_vectors(n) {
                if !is_sorted(&b) {
                    continue;
                }
                let out = build_bitonic_merger(&mut sink(), &buses(&a, 1), &buses(&b, 1)).unwrap();
                let all: Vec<u128> = a.iter().chain(&b).copied().collect();
                assert_eq!(values(&out), sort_oracle(&all), "a={a:?} b={b:?}");
            }
        }
    }
}

#[test]
fn merger_rejects_bad_shapes() {
    let two = buses(&[1, 2], 4);
    let three = buses(&[1, 2, 3], 4);
    assert_eq!(build_bitonic_merger(&mut sink(), &two, &three[..1]), Err(BlockError::LengthMismatch(2, 1)));
    assert!(build_bitonic_merger(&mut sink(), &three, &three).is_err());
}

#[test]
fn waksman_all_permutations_of_four() {
    let items = [10u128, 11, 12, 13];
    let mut count = 0;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let pi = [a, b, c, d];
                    let mut seen = pi.to_vec();
                    seen.sort();
                    seen.dedup();
                    if seen.len() != 4 {
                        continue;
                    }
                    count += 1;
                    let controls = route_waksman(&pi).unwrap();
                    assert_eq!(controls.len(), 5);
                    let plain = apply_waksman_plain(&items, &controls).unwrap();
                    let circuit = build_waksman(&mut sink(), &buses(&items, 4), &controls).unwrap();
                    for i in 0..4 {
                        assert_eq!(plain[pi[i]], items[i]);
                    }
                    assert_eq!(values(&circuit), plain);
                }
            }
        }
    }
    assert_eq!(count, 24);
}

#[test]
fn waksman_switch_counts() {
    for (n, expected) in [(2, 1), (4, 5), (8, 17), (16, 49)] {
        assert_eq!(waksman_switch_count(n), expected);
        let log = n.trailing_zeros() as usize;
        assert_eq!(waksman_switch_count(n), n * log - n + 1);
        let mut c = GateCounter::new();
        let v: Vec<_> = (0..n).map(|_| Bus((0..3).map(|_| c.garbler_input()).collect())).collect();
        let ctl: Vec<_> = (0..expected).map(|_| c.evaluator_input()).collect();
        build_waksman(&mut c, &v, &ctl).unwrap();
        assert_eq!(c.stats().and_count, 3 * expected as u64);
    }
}

#[test]
fn waksman_rejects_non_permutations() {
    assert_eq!(route_waksman(&[0, 0, 1, 2]), Err(BlockError::NotAPermutation(4)));
    assert!(route_waksman(&[0, 1, 2]).is_err());
    assert_eq!(
        apply_waksman_plain(&[1, 2, 3, 4], &[true]),
        Err(BlockError::ControlCount { expected: 5, got: 1 })
    );
}

#[test]
fn counter_matches_popcount() {
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    for n in [1usize, 2, 3, 16, 64, 255, 256] {
        for _ in 0..50 {
            let bits: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
            let out = build_counter(&mut sink(), &bits);
            assert_eq!(out.width(), counter_width(n));
            assert_eq!(val(&out) as u64, popcount_oracle(&bits));
        }
    }
    let all = vec![true; 256];
    assert_eq!(val(&build_counter(&mut sink(), &all)), 256);
}

proptest! {
    #[test]
    fn sort_matches_oracle(log in 0u32..6, seed in any::<u64>()) {
        let n = 1usize << log;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let v: Vec<u128> = (0..n).map(|_| if rng.gen_bool(0.3) { 0 } else { rng.gen_range(0..256) }).collect();
        let out = values(&build_compaction(&mut sink(), &buses(&v, 8)).unwrap());
        prop_assert_eq!(&out, &sort_oracle(&v));
        prop_assert!(same_multiset(&out, &v));
    }

    #[test]
    fn merger_matches_oracle(log in 0u32..6, seed in any::<u64>()) {
        let n = 1usize << log;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut a: Vec<u128> = (0..n).map(|_| rng.gen_range(0..1024)).collect();
        let mut b: Vec<u128> = (0..n).map(|_| rng.gen_range(0..1024)).collect();
        a.sort();
        b.sort();
        let out = values(&build_bitonic_merger(&mut sink(), &buses(&a, 10), &buses(&b, 10)).unwrap());
        let all: Vec<u128> = a.iter().chain(&b).copied().collect();
        prop_assert_eq!(out, sort_oracle(&all));
    }

    #[test]
    fn waksman_routes_random_permutations(log in 1u32..8, seed in any::<u64>()) {
        let n = 1usize << log;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut pi: Vec<usize> = (0..n).collect();
        pi.shuffle(&mut rng);
        let controls = route_waksman(&pi).unwrap();
        prop_assert_eq!(controls.len(), waksman_switch_count(n));
        let items: Vec<usize> = (0..n).collect();
        let out = apply_waksman_plain(&items, &controls).unwrap();
        for i in 0..n {
            prop_assert_eq!(out[pi[i]], i);
        }
    }
}
