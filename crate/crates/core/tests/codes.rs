use jncc_core::codes::{assemble, build_p2p_code, DegreeDistributions, Variant};
use jncc_core::diversity::{failing_patterns, verify_bec_diversity, ErasureDecoder};
use jncc_core::gf2::{peel_solve, BitVec};
use jncc_core::topology::algorithm1_transmission_sets;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn edge_fractions(h: &jncc_core::gf2::SparseMatrix) -> (Vec<(usize, f64)>, Vec<(usize, f64)>) {
    let e = h.nnz() as f64;
    let mut var = std::collections::BTreeMap::new();
    for c in 0..h.cols() {
        *var.entry(h.col(c).len()).or_insert(0.0) += h.col(c).len() as f64 / e;
    }
    let mut chk = std::collections::BTreeMap::new();
    for r in 0..h.rows() {
        *chk.entry(h.row(r).len()).or_insert(0.0) += h.row(r).len() as f64 / e;
    }
    (var.into_iter().collect(), chk.into_iter().collect())
}

#[test]
fn reference_code_has_requested_shape_and_profile() {
    let dd = DegreeDistributions::irregular_rate_6_7();
    let code = build_p2p_code(&dd, 707, 606, 1).unwrap();
    assert_eq!((code.h_p.rows(), code.h_p.cols()), (101, 707));
    assert_eq!(code.h_p.rank(), 101);
    let (var, chk) = edge_fractions(&code.h_sparse);
    for (d, f) in var {
        assert!((f - dd.lambda[&d]).abs() < 0.02, "lambda_{d}: {f}");
    }
    for (d, f) in chk {
        assert!((f - dd.rho[&d]).abs() < 0.02, "rho_{d}: {f}");
    }
}

#[test]
fn full_smarc_code_dimensions_and_diversity() {
    let t = algorithm1_transmission_sets(5, 5).unwrap();
    let p2p = build_p2p_code(&DegreeDistributions::irregular_rate_6_7(), 707, 606, 7).unwrap();
    let code = assemble(Variant::Smarc, &t, Some(&p2p), 606, 11).unwrap();
    assert_eq!((code.h.rows(), code.h.cols()), (4040, 7070));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let info: Vec<Vec<u8>> = (0..5).map(|_| (0..606).map(|_| rng.random_range(0..2)).collect()).collect();
    assert!(code.h.syndrome_is_zero(&code.encode(&info, &[]).unwrap().bits));
    let t0 = std::time::Instant::now();
    assert_eq!(verify_bec_diversity(&code, 3, ErasureDecoder::Peeling), 3);
    eprintln!("peeling sweep {:?}", t0.elapsed());
    let t0 = std::time::Instant::now();
    assert_eq!(verify_bec_diversity(&code, 3, ErasureDecoder::Gaussian), 3);
    eprintln!("gaussian sweep {:?}", t0.elapsed());
}

#[test]
fn identity_code_has_same_measured_order() {
    let t = algorithm1_transmission_sets(5, 5).unwrap();
    let p2p = build_p2p_code(&DegreeDistributions::regular(3, 6), 40, 20, 2).unwrap();
    let smarc = assemble(Variant::Smarc, &t, Some(&p2p), 20, 1).unwrap();
    let ident = assemble(Variant::Identity, &t, Some(&p2p), 20, 1).unwrap();
    assert_eq!(verify_bec_diversity(&ident, 3, ErasureDecoder::Gaussian), 3);
    assert_eq!(verify_bec_diversity(&smarc, 3, ErasureDecoder::Gaussian), 3);
}

#[test]
fn failing_patterns_are_cyclically_symmetric() {
    let t = algorithm1_transmission_sets(5, 5).unwrap();
    let p2p = build_p2p_code(&DegreeDistributions::regular(3, 6), 40, 20, 2).unwrap();
    let code = assemble(Variant::Identity, &t, Some(&p2p), 20, 1).unwrap();
    let fails = failing_patterns(&code, 3, ErasureDecoder::Gaussian);
    assert!(!fails.is_empty());
    for p in &fails {
        let mut shifted: Vec<usize> = p.iter().map(|&u| (u + 1) % 5).collect();
        shifted.sort_unstable();
        assert!(fails.contains(&shifted), "{p:?}");
    }
}

#[test]
fn one_unknown_source_is_peelable_from_relay_rows() {
    // Erase one member of a relay's transmission set; the relay's K rows plus
    // the known member and relay codeword leave a triangular system.
    let t = algorithm1_transmission_sets(5, 5).unwrap();
    let code = assemble(Variant::GlncOnly, &t, None, 16, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let info: Vec<Vec<u8>> = (0..5).map(|_| (0..16).map(|_| rng.random_range(0..2)).collect()).collect();
    let x = code.encode(&info, &[]).unwrap().bits;
    for (r, rel) in code.relays.iter().enumerate() {
        for unknown in 0..2 {
            let (u, _, block) = &rel.source_blocks[unknown];
            let a = block.to_dense();
            let mut rhs = BitVec::zeros(16);
            for row in 0..16 {
                let gr = code.glnc_row_range.start + 16 * r + row;
                let mut v = 0;
                for &c in code.h.row(gr) {
                    let c = c as usize;
                    if !code.slot_columns[*u].contains(&c) {
                        v ^= x[c];
                    }
                }
                rhs.set(row, v == 1);
            }
            let out = peel_solve(&a, &rhs);
            assert!(out.is_unique(), "relay {r} member {unknown}: {:?}", out.status);
            assert_eq!(out.solution.unwrap().to_bits(), info[*u]);
        }
    }
}

fn random_info(m_s: usize, k: usize, rng: &mut impl Rng) -> Vec<Vec<u8>> {
    (0..m_s).map(|_| (0..k).map(|_| rng.random_range(0..2)).collect()).collect()
}

#[test]
fn every_variant_encodes_codewords() {
    let t = algorithm1_transmission_sets(5, 5).unwrap();
    let p2p = build_p2p_code(&DegreeDistributions::regular(3, 6), 48, 24, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for variant in [Variant::Smarc, Variant::Identity, Variant::IdentityIrregular, Variant::GlncOnly, Variant::GlncOnlyIdentity] {
        let code = if variant.is_glnc_only() {
            assemble(variant, &t, None, 24, 3).unwrap()
        } else {
            assemble(variant, &t, Some(&p2p), 24, 3).unwrap()
        };
        for _ in 0..100 {
            let info = random_info(5, 24, &mut rng);
            let silent: Vec<bool> = (0..5).map(|_| rng.random_bool(0.2)).collect();
            let cw = code.encode(&info, &silent).unwrap();
            assert!(code.h.syndrome_is_zero(&cw.bits), "{variant}");
            for u in 0..5 {
                assert_eq!(&cw.bits[code.info_columns(u)], &info[u][..], "{variant}");
            }
        }
    }
}

#[test]
fn rate_is_slot_rate_times_network_rate() {
    for (m_s, m_r) in [(3, 3), (3, 4), (5, 5)] {
        let t = algorithm1_transmission_sets(m_s, m_r).unwrap();
        let p2p = build_p2p_code(&DegreeDistributions::regular(3, 6), 40, 20, 1).unwrap();
        let code = assemble(Variant::Identity, &t, Some(&p2p), 20, 1).unwrap();
        let expect = 0.5 * m_s as f64 / (m_s + m_r) as f64;
        assert!((code.rate() - expect).abs() < 1e-12);
    }
}

#[test]
fn random_quadrants_cover_both_halves_of_every_source() {
    for m in [4, 5, 6, 7, 8] {
        let t = algorithm1_transmission_sets(m, m).unwrap();
        let code = assemble(Variant::GlncOnly, &t, None, 16, 2).unwrap();
        for u in 0..m {
            let mut halves = [false; 2];
            for rel in &code.relays {
                for (src, kind, _) in &rel.source_blocks {
                    if *src == u {
                        halves[kind.expect("triangular blocks").random_half()] = true;
                    }
                }
            }
            assert_eq!(halves, [true, true], "m={m} source {u}");
        }
    }
}
