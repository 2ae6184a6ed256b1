//! Property tests for the structural invariants.

mod common;

use ncmap_core::matrix::Mat;
use ncmap_core::sequence::parse_w_file;
use ncmap_core::verify::shoelace_areas;
use ncmap_core::{
    compute_t_direct, compute_t_via_p, harmonic_schedule, orthogonality_defect,
    reference_coordinate_sequence, skew_block_diagonalize, MapParameters,
};
use proptest::prelude::*;

fn zero_sum_w() -> impl Strategy<Value = Mat> {
    (1usize..=4, 3usize..=20).prop_flat_map(|(n, m)| {
        proptest::collection::vec(-1.0f64..1.0, 2 * n * (m - 1)).prop_map(move |vals| {
            let mut w = Mat::zeros(2 * n, m);
            for i in 0..2 * n {
                let mut acc = 0.0;
                for j in 0..m - 1 {
                    let v = vals[i * (m - 1) + j];
                    w[(i, j)] = v;
                    acc += v;
                }
                w[(i, m - 1)] = -acc;
            }
            w
        })
    })
}

fn skew_matrix() -> impl Strategy<Value = Mat> {
    (2usize..=10).prop_flat_map(|p| {
        proptest::collection::vec(-2.0f64..2.0, p * (p - 1) / 2).prop_map(move |vals| {
            let mut c = Mat::zeros(p, p);
            let mut idx = 0;
            for i in 0..p {
                for j in (i + 1)..p {
                    c[(i, j)] = vals[idx];
                    c[(j, i)] = -vals[idx];
                    idx += 1;
                }
            }
            c
        })
    })
}

fn map_params() -> impl Strategy<Value = MapParameters> {
    (-1.0f64..1.5, -1.0f64..1.5)
        .prop_filter("alphas must not cancel", |(a1, a2)| (a1 + a2).abs() > 0.1)
        .prop_map(|(a1, a2)| MapParameters::new(a1, a2).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    // The compact form W P W^T agrees with the literal double sum whenever
    // the zero-sum condition holds.
    #[test]
    fn compact_form_equivalence(w in zero_sum_w(), params in map_params()) {
        let direct = compute_t_direct(&w, &params);
        let via_p = compute_t_via_p(&w, &params).unwrap();
        prop_assert!(direct.sub(&via_p).max_abs() <= 1e-9);
    }

    // The projected coefficient matrix is normal with symmetric part mu I.
    #[test]
    fn p_tilde_structure(params in map_params(), m in 3usize..24) {
        let pt = ncmap_core::build_p_tilde(&params, m).unwrap();
        let ptt = pt.transpose();
        prop_assert!(pt.matmul(&ptt).sub(&ptt.matmul(&pt)).max_abs() <= 1e-10);
        let q = pt.rows();
        let sym = pt.add(&ptt).scale(0.5);
        prop_assert!(sym.sub(&Mat::identity(q).scale(params.mu())).max_abs() <= 1e-12);
    }

    // Block diagonalization of skew matrices: orthogonal transform, faithful
    // reconstruction, descending deltas.
    #[test]
    fn skew_block_diagonalization(c in skew_matrix()) {
        let spec = skew_block_diagonalize(&c, 1e-10).unwrap();
        prop_assert!(orthogonality_defect(&spec.theta) <= 1e-9);
        prop_assert!(spec.reconstruction_residual(&c) <= 1e-8);
        let d = spec.deltas();
        for w in d.windows(2) {
            prop_assert!(w[0] >= w[1] - 1e-12);
        }
        prop_assert_eq!(spec.dim(), c.rows());
    }

    // Shoelace areas of the partial-sum polygons equal the two-point T(W).
    #[test]
    fn shoelace_identity(w in zero_sum_w()) {
        let areas = shoelace_areas(&w);
        let t = compute_t_direct(&w, &MapParameters::two_point());
        prop_assert!(areas.sub(&t).max_abs() <= 1e-10);
    }

    // Harmonic schedule: the printed formula, constant within each period.
    #[test]
    fn harmonic_schedule_shape(h0 in 0.01f64..2.0, m in 1usize..12, k in 0usize..200) {
        let s = harmonic_schedule(h0, m);
        let expect = h0 / ((k / m) as f64 + 1.0);
        prop_assert_eq!(s.h_at(k), expect);
        let period_start = (k / m) * m;
        prop_assert_eq!(s.h_at(k), s.h_at(period_start));
    }

    // W files round-trip bit for bit.
    #[test]
    fn w_file_roundtrip(n in 1usize..4, scale in 0.1f64..3.0) {
        let mut em = reference_coordinate_sequence(n);
        em.w = em.w.scale(scale);
        let text = em.to_w_file_string();
        let back = parse_w_file(&text).unwrap();
        prop_assert_eq!(back.w.data(), em.w.data());
        prop_assert_eq!(back.m, em.m);
        prop_assert_eq!(back.n, n);
    }
}
