use jncc_core::channel::{
    apply_full_bp_relay_rule, draw_realization, rayleigh_gain, transmit, ChannelConfig, InteruserModel,
    RelayDecodeRule,
};
use jncc_core::codes::{assemble, build_p2p_code, DegreeDistributions, Variant};
use jncc_core::decoder::BpConfig;
use jncc_core::topology::algorithm1_transmission_sets;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn rayleigh_power_has_unit_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 400_000;
    let mean = (0..n).map(|_| rayleigh_gain(&mut rng).powi(2)).sum::<f64>() / n as f64;
    assert!((mean - 1.0).abs() < 0.01, "{mean}");
}

#[test]
fn both_slots_of_a_node_see_one_gain() {
    let t = algorithm1_transmission_sets(5, 5).unwrap();
    let code = assemble(Variant::GlncOnly, &t, None, 200, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cfg = ChannelConfig::new(1e6);
    let info: Vec<Vec<u8>> = (0..5).map(|_| (0..200).map(|_| rng.random_range(0..2)).collect()).collect();
    let cw = code.encode(&info, &[]).unwrap();
    for _ in 0..20 {
        let real = draw_realization(&cfg, &t, &mut rng);
        let llr = transmit(&code, &cw, &real, &cfg, &mut rng);
        for node in 0..5 {
            let a2 = real.alpha_dest[node].powi(2);
            for slot in [node, 5 + node] {
                let cols = code.slot_columns[slot].clone();
                let n = cols.len() as f64;
                let est = llr[cols].iter().map(|l| l.abs()).sum::<f64>() / n / (4.0 * cfg.gamma);
                assert!((est - a2).abs() < 0.01 * a2 + 1e-3, "node {node} slot {slot}: {est} vs {a2}");
            }
        }
    }
}

#[test]
fn reciprocal_realization_is_symmetric_under_swap() {
    let t = algorithm1_transmission_sets(6, 6).unwrap();
    let mut cfg = ChannelConfig::new(3.0);
    cfg.interuser = InteruserModel::Rayleigh;
    cfg.reciprocal = true;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let real = draw_realization(&cfg, &t, &mut rng);
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(real.interuser[i][j], real.interuser[j][i]);
            }
        }
    }
}

#[test]
fn full_bp_rule_tracks_link_quality() {
    let t = algorithm1_transmission_sets(5, 5).unwrap();
    let p2p = build_p2p_code(&DegreeDistributions::regular(3, 6), 200, 100, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let words: Vec<Vec<u8>> = (0..5)
        .map(|_| p2p.encode(&(0..100).map(|_| rng.random_range(0..2)).collect::<Vec<u8>>()))
        .collect();
    let mut silent_at = |gamma: f64| {
        let mut cfg = ChannelConfig::new(gamma);
        cfg.interuser = InteruserModel::Gaussian;
        cfg.relay_rule = RelayDecodeRule::FullBp;
        let mut real = draw_realization(&cfg, &t, &mut rng);
        apply_full_bp_relay_rule(&mut real, &cfg, &t, &p2p, &words, &BpConfig::default(), &mut rng);
        real.silent_relays.iter().filter(|&&s| s).count()
    };
    assert_eq!(silent_at(20.0), 0);
    assert_eq!(silent_at(0.05), 5);
}
