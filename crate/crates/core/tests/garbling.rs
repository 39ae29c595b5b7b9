use mpsi_core::circuit::{random_circuit, Circuit};
use mpsi_core::garble::{decode_outputs, evaluate_with, garble_with, GarbledTables, Side, AND_TABLE_BYTES};
use mpsi_core::oracle::interpret_netlist;
use mpsi_core::par::Exec;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn netlist(c: &Circuit) -> String {
    let mut buf = Vec::new();
    c.write_netlist(&mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

fn garbled_run(c: &Circuit, g: &[bool], e: &[bool], seed: [u8; 16], exec: Exec) -> Vec<bool> {
    let gc = garble_with(c, seed, exec);
    let ga = gc.labels.encode(g, Side::Garbler).unwrap();
    let ea = gc.labels.encode(e, Side::Evaluator).unwrap();
    let tables = GarbledTables::from_bytes(&gc.tables.to_bytes()).unwrap();
    let out = evaluate_with(c, &tables, &ga, &ea, exec).unwrap();
    decode_outputs(&gc.decode, &out).unwrap()
}

#[test]
fn random_circuits_match_interpreter() {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    for _ in 0..200 {
        let (ng, ne) = (rng.gen_range(1..20), rng.gen_range(0..20));
        let c = random_circuit(&mut rng, ng, ne, 1000, 16);
        let g: Vec<bool> = (0..ng).map(|_| rng.gen()).collect();
        let e: Vec<bool> = (0..ne).map(|_| rng.gen()).collect();
        let expected = interpret_netlist(&netlist(&c), &g, &e).unwrap();
        assert_eq!(c.eval_plaintext(&g, &e).unwrap(), expected);
        assert_eq!(garbled_run(&c, &g, &e, rng.gen(), Exec::Sequential), expected);
    }
}

#[test]
fn strategies_produce_identical_material() {
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    // Wide enough that AND layers cross the parallel threshold.
    let c = random_circuit(&mut rng, 64, 64, 20_000, 64);
    let seed = rng.gen();
    let a = garble_with(&c, seed, Exec::Sequential);
    let b = garble_with(&c, seed, Exec::Parallel);
    assert_eq!(a.tables.0, b.tables.0);
    assert_eq!(a.decode, b.decode);
    assert_eq!(a.tables.byte_len(), AND_TABLE_BYTES * c.and_count());
    let g: Vec<bool> = (0..64).map(|_| rng.gen()).collect();
    let e: Vec<bool> = (0..64).map(|_| rng.gen()).collect();
    let expected = c.eval_plaintext(&g, &e).unwrap();
    assert_eq!(garbled_run(&c, &g, &e, seed, Exec::Parallel), expected);
    assert_eq!(garbled_run(&c, &g, &e, seed, Exec::Sequential), expected);
}

#[test]
fn truncated_tables_are_rejected() {
    let mut rng = ChaCha20Rng::seed_from_u64(13);
    let c = random_circuit(&mut rng, 4, 4, 200, 4);
    let gc = garble_with(&c, [1; 16], Exec::Sequential);
    let bytes = gc.tables.to_bytes();
    assert!(GarbledTables::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    let short = GarbledTables(gc.tables.0[..gc.tables.0.len() / 2].to_vec());
    let ga = gc.labels.encode(&[false; 4], Side::Garbler).unwrap();
    let ea = gc.labels.encode(&[false; 4], Side::Evaluator).unwrap();
    assert!(evaluate_with(&c, &short, &ga, &ea, Exec::Sequential).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn garbled_evaluation_equals_plaintext(seed in any::<u64>(), gates in 1usize..2000) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let c = random_circuit(&mut rng, 8, 8, gates, 8);
        let g: Vec<bool> = (0..8).map(|_| rng.gen()).collect();
        let e: Vec<bool> = (0..8).map(|_| rng.gen()).collect();
        let exec = if seed % 2 == 0 { Exec::Sequential } else { Exec::Parallel };
        prop_assert_eq!(garbled_run(&c, &g, &e, rng.gen(), exec), c.eval_plaintext(&g, &e).unwrap());
    }
}
