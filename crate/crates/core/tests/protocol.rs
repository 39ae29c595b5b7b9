use std::net::TcpListener;
use std::thread;
use std::time::Duration;

use mpsi_core::garble::AND_TABLE_BYTES;
use mpsi_core::net::config::SessionConfig;
use mpsi_core::net::frame::FrameType;
use mpsi_core::net::session::{connect_tcp, mem_network, run_local, run_party, PartyInput, SessionError};
use mpsi_core::oracle::intersect_oracle;
use mpsi_core::ot::OtBackend;
use mpsi_core::psi::{build_ex_scs, derive_layout, Mode, PsiParams};
use mpsi_core::Exec;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn inputs(sets: &[Vec<u128>]) -> Vec<PartyInput> {
    sets.iter().cloned().map(PartyInput::new).collect()
}

fn toy_sets() -> Vec<Vec<u128>> {
    vec![vec![1, 3, 5, 7], vec![3, 4, 5, 8], vec![3, 5, 9, 10]]
}

#[test]
fn three_party_example_both_backends() {
    let params = PsiParams::new(3, 4, 8, Mode::Both).unwrap();
    for backend in [OtBackend::Dealer, OtBackend::Real] {
        let reports = run_local(params, backend, &inputs(&toy_sets()), Exec::default(), Some(7)).unwrap();
        assert_eq!(reports.len(), 3);
        for r in &reports {
            assert_eq!(r.result.intersection.as_deref(), Some(&[3u128, 5][..]), "party {}", r.party_id);
            assert_eq!(r.result.cardinality, Some(2));
        }
    }
}

#[test]
fn two_party_session_matches_oracle() {
    let params = PsiParams::new(2, 8, 16, Mode::Intersection).unwrap();
    let sets = vec![vec![1, 2, 3, 4, 5, 6, 7, 8], vec![2, 4, 6, 8, 10, 12, 14, 16]];
    let reports = run_local(params, OtBackend::Real, &inputs(&sets), Exec::Sequential, None).unwrap();
    let expected: Vec<u128> = intersect_oracle(&sets).into_iter().collect();
    for r in reports {
        assert_eq!(r.result.intersection, Some(expected.clone()));
        assert_eq!(r.result.cardinality, None);
    }
}

#[test]
fn empty_intersection_and_cardinality_mode() {
    let params = PsiParams::new(3, 4, 8, Mode::Cardinality).unwrap();
    let sets = vec![vec![1, 2, 3, 4], vec![5, 6, 7, 8], vec![9, 10, 11, 12]];
    let reports = run_local(params, OtBackend::Dealer, &inputs(&sets), Exec::default(), Some(1)).unwrap();
    for r in reports {
        assert_eq!(r.result.intersection, None);
        assert_eq!(r.result.cardinality, Some(0));
    }
}

#[test]
fn garbled_table_traffic_is_exact() {
    let params = PsiParams::new(3, 8, 16, Mode::Both).unwrap();
    let sets: Vec<Vec<u128>> = (0..3).map(|p| (1..=8).map(|x| x + 2 * p as u128).collect()).collect();
    let reports = run_local(params, OtBackend::Real, &inputs(&sets), Exec::default(), Some(3)).unwrap();
    let and_count = build_ex_scs(&derive_layout(&params).unwrap()).unwrap().circuit.and_count();
    let (sent, _) = &reports[0].traffic[&2];
    assert_eq!(sent.payload(FrameType::GcChunk), (AND_TABLE_BYTES * and_count) as u64);
    let (_, received) = &reports[1].traffic[&1];
    assert_eq!(received.payload(FrameType::GcChunk), (AND_TABLE_BYTES * and_count) as u64);
    assert_eq!(reports[0].declared_sizes.len(), 3);
}

#[test]
fn config_mismatch_aborts_everyone() {
    let params = PsiParams::new(3, 4, 8, Mode::Both).unwrap();
    let base = SessionConfig::local(params, 1, OtBackend::Dealer);
    let sets = toy_sets();
    let outcomes: Vec<Result<_, SessionError>> = thread::scope(|scope| {
        let handles: Vec<_> = mem_network(3)
            .into_iter()
            .enumerate()
            .map(|(i, mut links)| {
                let mut cfg = base.for_party(i + 1);
                if i == 2 {
                    cfg.params.sigma = 9;
                }
                let input = PartyInput::new(sets[i].clone());
                scope.spawn(move || {
                    let mut rng = ChaCha20Rng::seed_from_u64(i as u64);
                    run_party(&cfg, &mut links, &input, &mut rng, Exec::default())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert!(outcomes.iter().all(Result::is_err));
    assert!(outcomes.iter().any(|o| matches!(o, Err(SessionError::HelloMismatch { .. }))));
}

#[test]
fn invalid_set_aborts_session() {
    let params = PsiParams::new(3, 4, 8, Mode::Both).unwrap();
    let mut sets = toy_sets();
    sets[2] = vec![3, 3, 9, 10];
    let err = run_local(params, OtBackend::Dealer, &inputs(&sets), Exec::default(), Some(1)).unwrap_err();
    assert!(matches!(err, SessionError::InvalidSet(_)), "{err}");
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

#[test]
fn tcp_loopback_session() {
    let params = PsiParams::new(3, 4, 8, Mode::Both).unwrap();
    let mut base = SessionConfig::local(params, 1, OtBackend::Real);
    for p in 1..=3 {
        base.roster.insert(p, format!("127.0.0.1:{}", free_port()));
    }
    let sets = toy_sets();
    let results: Vec<_> = thread::scope(|scope| {
        let handles: Vec<_> = (1..=3)
            .map(|party| {
                let cfg = base.for_party(party);
                let input = PartyInput::new(sets[party - 1].clone());
                scope.spawn(move || {
                    let mut links = connect_tcp(&cfg, input.declared_size, Duration::from_secs(20))?;
                    let mut rng = ChaCha20Rng::seed_from_u64(party as u64);
                    run_party(&cfg, &mut links, &input, &mut rng, Exec::default())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    for r in results {
        let r = r.unwrap();
        assert_eq!(r.result.intersection, Some(vec![3, 5]));
        assert_eq!(r.result.cardinality, Some(2));
    }
}
