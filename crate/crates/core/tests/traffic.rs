use flowtwin_core::traffic::{sample_traffic_matrix, TI_MAX_RANGE};
use flowtwin_core::*;

#[test]
fn rate_bounds_hold_for_many_seeds() {
    let topo = make_synthetic_topology(TopologyKind::RandomConnected, 5, (4000.0, 16000.0), 1).unwrap();
    for seed in 0..10_000u64 {
        let mut rng = stream_rng(seed, 0);
        let tm = sample_traffic_matrix(&topo, &mut rng);
        tm.validate_complete(5).unwrap();
        assert!(tm.ti_max >= TI_MAX_RANGE.0 && tm.ti_max <= TI_MAX_RANGE.1);
        for f in tm.flows() {
            assert!(f.avg_rate >= 0.1 * tm.ti_max * (1.0 - 1e-9) && f.avg_rate <= tm.ti_max * (1.0 + 1e-9));
            assert!(f.tos < 3);
            assert!((f.pkt_rate * f.avg_pkt_size - f.avg_rate).abs() <= 1e-9 * f.avg_rate);
        }
    }
}

#[test]
fn same_seed_same_matrix() {
    let topo = make_synthetic_topology(TopologyKind::Ring, 6, (4000.0, 16000.0), 1).unwrap();
    let a = sample_traffic_matrix(&topo, &mut stream_rng(9, 3));
    let b = sample_traffic_matrix(&topo, &mut stream_rng(9, 3));
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
    let c = sample_traffic_matrix(&topo, &mut stream_rng(9, 4));
    assert_ne!(a, c);
}
