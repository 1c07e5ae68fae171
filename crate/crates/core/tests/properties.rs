use std::collections::BTreeMap;

use jass_core::detectors::{
    jass_objective_matrix, jass_objective_matrix_difference, projected_correlation, window_statistic, DetectorParams,
    Projection,
};
use jass_core::harness::{sweep_thresholds, TrialRecord};
use jass_core::linalg::{frob_norm_sq, residual_project, pseudoinverse_tall, CMatrix, C64};
use jass_core::rng::{stream, Domain};
use jass_core::{statistic_jass_evd, DetectorKind, SyncSequence};
use proptest::prelude::*;

fn complex_matrix(rows: usize, cols: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), rows * cols).prop_map(move |v| {
        CMatrix::from_row_major(rows, cols, v.into_iter().map(|(re, im)| C64::new(re, im)).collect()).unwrap()
    })
}

fn sequence(len: usize) -> impl Strategy<Value = SyncSequence> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), len)
        .prop_filter_map("nonzero sequence", |v| {
            SyncSequence::new(v.into_iter().map(|(re, im)| C64::new(re, im)).collect()).ok()
        })
        .prop_filter("energy away from zero", |s| s.energy() > 1e-3)
}

/// (B, K, I_hat, window, sequence)
fn window_case() -> impl Strategy<Value = (usize, CMatrix, SyncSequence)> {
    (2usize..7, 2usize..10).prop_flat_map(|(b, k)| (1..b, complex_matrix(b, k), sequence(k)))
}

const NORMALIZED: [DetectorKind; 4] = [
    DetectorKind::Jass,
    DetectorKind::JassEvd,
    DetectorKind::Bajass,
    DetectorKind::Unmitigated,
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn normalized_statistics_are_bounded((i_hat, y, seq) in window_case(), exp in -30i32..30, seed in any::<u64>()) {
        let y = y.scale_real(10f64.powi(exp));
        let params = DetectorParams::new(i_hat, 3);
        for kind in NORMALIZED {
            let v = window_statistic(kind, &y, &seq, &params, &mut stream(seed, Domain::Detector, 0, 0)).unwrap();
            prop_assert!(v >= 0.0 && v <= seq.energy() * (1.0 + 1e-9), "{kind}: {v} vs {}", seq.energy());
        }
    }

    #[test]
    fn statistics_are_scale_invariant((i_hat, y, seq) in window_case(), scale in 1e-4f64..1e4, seed in any::<u64>()) {
        // with I_hat >= K the nulled subspace can swallow all of col(Y) and the
        // residual ratio is rounding noise over rounding noise
        prop_assume!(i_hat < y.cols());
        let params = DetectorParams::new(i_hat, 3);
        let scaled = y.scale_real(scale);
        for kind in NORMALIZED {
            let a = window_statistic(kind, &y, &seq, &params, &mut stream(seed, Domain::Detector, 0, 0)).unwrap();
            let b = window_statistic(kind, &scaled, &seq, &params, &mut stream(seed, Domain::Detector, 0, 0)).unwrap();
            // tolerance relative to the bound; statistics near zero carry absolute rounding
            prop_assert!((a - b).abs() <= 1e-9 * seq.energy().max(a.abs()), "{kind}: {a} vs {b}");
        }
    }

    #[test]
    fn psd_factorization_matches_difference((_i, y, seq) in window_case()) {
        let diff = jass_objective_matrix(&y, &seq).sub(&jass_objective_matrix_difference(&y, &seq)).unwrap();
        prop_assert!(frob_norm_sq(&diff).sqrt() <= 1e-9 * seq.energy() * frob_norm_sq(&y).max(1e-300));
    }

    #[test]
    fn residual_projection_is_idempotent(a in complex_matrix(6, 2), v in complex_matrix(6, 3)) {
        let pinv = pseudoinverse_tall(&a).unwrap();
        let once = residual_project(&a, &pinv, &v).unwrap();
        let twice = residual_project(&a, &pinv, &once).unwrap();
        let err = frob_norm_sq(&once.sub(&twice).unwrap()).sqrt();
        prop_assert!(err <= 1e-9 * frob_norm_sq(&v).sqrt().max(1e-300));
    }

    /// With the sequence fully inside the window and no noise, nulling any
    /// basis that contains col(J) but not h gives exactly the sequence energy.
    #[test]
    fn interference_nulling_recovers_sequence_energy(
        h in complex_matrix(8, 1),
        jam in complex_matrix(8, 2),
        w in complex_matrix(2, 10),
        seq in sequence(10),
    ) {
        let h = h.column(0);
        let mut y = jam.matmul(&w).unwrap();
        for r in 0..8 {
            for k in 0..10 {
                y.as_mut_slice()[r * 10 + k] += h[r] * seq.values()[k];
            }
        }
        let e = seq.energy();
        prop_assume!(frob_norm_sq(&jam) > 1e-6);
        let v = projected_correlation(&y, &seq, &jam, Projection::Pseudoinverse).unwrap();
        prop_assert!((v - e).abs() <= 1e-6 * e, "{v} vs {e}");
        // the exact-EVD detector finds such a basis itself
        let evd = statistic_jass_evd(&y, &seq, 2).unwrap();
        prop_assert!((evd - e).abs() <= 1e-6 * e, "{evd} vs {e}");
    }

    #[test]
    fn roc_sweep_is_monotone_and_partitions(
        traces in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 1..30), 1..40),
    ) {
        let records: Vec<TrialRecord> = traces
            .into_iter()
            .enumerate()
            .map(|(i, t)| TrialRecord {
                trial_index: i as u64,
                arrival: t.len() - 1,
                seq_energy: 1.0,
                traces: BTreeMap::from([(DetectorKind::Jass, t)]),
            })
            .collect();
        let grid: Vec<f64> = (0..=40).map(|i| i as f64 * 0.025).collect();
        let pts = sweep_thresholds(&records, DetectorKind::Jass, &grid).unwrap();
        for p in &pts {
            prop_assert!((0.0..=1.0).contains(&p.fpr) && (0.0..=1.0).contains(&p.fnr));
            prop_assert!(p.fpr + p.fnr <= 1.0 + 1e-12);
            prop_assert_eq!(p.ter, p.fpr + p.fnr);
        }
        for w in pts.windows(2) {
            prop_assert!(w[1].fpr <= w[0].fpr);
            prop_assert!(w[1].fnr >= w[0].fnr);
        }
    }
}
