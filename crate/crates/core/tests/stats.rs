use std::collections::BTreeMap;

use proptest::prelude::*;
use scalpemd::stats::{
    chance_level, cohort_summary, cohort_summary_with, evaluate, select_subjects, wilcoxon_signed_rank,
    wilcoxon_signed_rank_with, ChanceMethod,
    EvalResult, SdConvention, WilcoxonMode,
};
use scalpemd_testkit::published::{deltas, footers, overall, p_values, TABLE_CONFORMER, TABLE_EEGNET, TABLE_MDM};

fn mdm_all() -> Vec<f64> {
    overall(&TABLE_MDM, |r| r.all)
}

/// Two-sided p-value by flipping every sign pattern of the mid-ranked
/// differences; independent of the dynamic-programming count.
fn brute_force_p(x: &[f64], y: &[f64]) -> f64 {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    let n = d.len();
    let mut ranks = vec![0.0; n];
    for i in 0..n {
        let less = d.iter().filter(|e| e.abs() < d[i].abs()).count();
        let equal = d.iter().filter(|e| e.abs() == d[i].abs()).count();
        ranks[i] = less as f64 + (equal as f64 + 1.0) / 2.0;
    }
    let observed: f64 = (0..n).filter(|&i| d[i] > 0.0).map(|i| ranks[i]).sum();
    let (mut lo, mut hi) = (0u64, 0u64);
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if w <= observed + 1e-9 {
            lo += 1;
        }
        if w >= observed - 1e-9 {
            hi += 1;
        }
    }
    (2.0 * lo.min(hi) as f64 / (1u64 << n) as f64).min(1.0)
}

#[test]
fn table_footers_reproduced() {
    let cases = [
        (mdm_all(), footers::MDM_ALL),
        (overall(&TABLE_MDM, |r| r.mi21), footers::MDM_MI21),
        (overall(&TABLE_MDM, |r| r.feat21), footers::MDM_FEAT21),
        (overall(&TABLE_CONFORMER, |r| r.all), footers::CONFORMER_ALL),
        (overall(&TABLE_EEGNET, |r| r.all), footers::EEGNET_ALL),
    ];
    for (values, (mean, sd)) in cases {
        let s = cohort_summary(&values).unwrap();
        assert!((s.mean - mean).abs() <= 0.02, "mean {} vs {mean}", s.mean);
        assert!((s.sd - sd).abs() <= 0.02, "sd {} vs {sd}", s.sd);
    }
    // the population convention misses the first footer
    let pop = cohort_summary_with(&mdm_all(), SdConvention::Population).unwrap();
    assert!((pop.sd - footers::MDM_ALL.1).abs() > 0.1);
}

fn paired_cases() -> [(Vec<f64>, Vec<f64>, f64); 4] {
    [
        (mdm_all(), overall(&TABLE_MDM, |r| r.mi21), p_values::MDM_ALL_VS_MI21),
        (mdm_all(), overall(&TABLE_MDM, |r| r.feat21), p_values::MDM_ALL_VS_FEAT21),
        (mdm_all(), overall(&TABLE_CONFORMER, |r| r.all), p_values::MDM_VS_CONFORMER_ALL),
        (mdm_all(), overall(&TABLE_EEGNET, |r| r.all), p_values::MDM_VS_EEGNET_ALL),
    ]
}

#[test]
fn published_p_values_within_tolerance_in_both_modes() {
    for (x, y, published) in paired_cases() {
        for mode in [WilcoxonMode::NormalApprox, WilcoxonMode::Exact, WilcoxonMode::Auto] {
            let r = wilcoxon_signed_rank(&x, &y, mode).unwrap();
            assert!((r.p_value - published).abs() <= 0.003, "{mode}: {} vs {published}", r.p_value);
        }
        // the normal approximation lands on the printed digits
        let r = wilcoxon_signed_rank(&x, &y, WilcoxonMode::NormalApprox).unwrap();
        assert!((r.p_value - published).abs() <= 1e-4, "{} vs {published}", r.p_value);
    }
}

#[test]
fn decimal_tie_grouping_stays_within_tolerance() {
    // differences such as 2.15 arise from several subject pairs but differ
    // in the last bits; grouping them moves p without leaving the band
    for (x, y, published) in paired_cases() {
        for mode in [WilcoxonMode::NormalApprox, WilcoxonMode::Exact] {
            let r = wilcoxon_signed_rank_with(&x, &y, mode, 1e-9).unwrap();
            assert!((r.p_value - published).abs() <= 0.003, "{mode}: {} vs {published}", r.p_value);
        }
    }
}

#[test]
fn exact_mode_matches_sign_flip_enumeration() {
    for (x, y, _) in paired_cases() {
        let r = wilcoxon_signed_rank(&x, &y, WilcoxonMode::Exact).unwrap();
        let brute = brute_force_p(&x, &y);
        assert!((r.p_value - brute).abs() < 1e-12, "{} vs {brute}", r.p_value);
    }
}

#[test]
fn zero_differences_are_dropped() {
    // the first comparison contains one tied subject pair
    let (x, y, _) = &paired_cases()[0];
    let r = wilcoxon_signed_rank(x, y, WilcoxonMode::Exact).unwrap();
    assert_eq!(r.n_pairs + r.zero_dropped, 14);
    assert_eq!(r.n_pairs, 14 - x.iter().zip(y).filter(|(a, b)| a == b).count());
}

#[test]
fn published_deltas() {
    let mean = |v: Vec<f64>| cohort_summary(&v).unwrap().mean;
    let all = mean(mdm_all());
    let cases = [
        (all - mean(overall(&TABLE_MDM, |r| r.mi21)), deltas::MDM_ALL_TO_MI21),
        (all - mean(overall(&TABLE_MDM, |r| r.feat21)), deltas::MDM_ALL_TO_FEAT21),
        (all - mean(overall(&TABLE_CONFORMER, |r| r.all)), deltas::MDM_OVER_CONFORMER),
        (all - mean(overall(&TABLE_EEGNET, |r| r.all)), deltas::MDM_OVER_EEGNET),
    ];
    for (got, want) in cases {
        assert!((got - want).abs() <= 0.02, "{got} vs {want}");
    }
}

#[test]
fn first_row_overall_from_class_recalls() {
    let row = &TABLE_MDM[0];
    let [overall_pct, left_pct, right_pct] = row.all;
    let (n_left, n_right) = (56, 37);
    let correct_left = (left_pct / 100.0 * n_left as f64).round() as usize;
    let correct_right = (right_pct / 100.0 * n_right as f64).round() as usize;
    let r = EvalResult::from_counts(&[("left", correct_left, n_left), ("right", correct_right, n_right)]).unwrap();
    assert!((100.0 * r.per_class_recall["left"] - left_pct).abs() < 0.005);
    assert!((100.0 * r.per_class_recall["right"] - right_pct).abs() < 0.005);
    assert!((100.0 * r.overall - overall_pct).abs() <= 0.01);
    assert_eq!(r.n_test, 93);
}

#[test]
fn published_cohort_passes_selection() {
    let results: BTreeMap<String, EvalResult> = TABLE_MDM
        .iter()
        .map(|r| {
            let res = EvalResult {
                per_class_recall: BTreeMap::new(),
                support: BTreeMap::new(),
                overall: r.all[0] / 100.0,
                macro_overall: r.all[0] / 100.0,
                n_test: 93,
            };
            (format!("S{:03}", r.id), res)
        })
        .collect();
    let chance: BTreeMap<String, f64> = TABLE_MDM.iter().map(|r| (format!("S{:03}", r.id), r.chance / 100.0)).collect();
    assert_eq!(select_subjects(&results, &chance, 0.10).unwrap().len(), 14);
}

#[test]
fn binomial_chance_for_93_test_epochs() {
    let labels: Vec<&str> = (0..93).map(|i| if i % 2 == 0 { "left" } else { "right" }).collect();
    let c = chance_level(&labels, ChanceMethod::BinomialCi { alpha: 0.05 }).unwrap();
    assert!((c - 0.5853).abs() < 5e-5);
}

proptest! {
    #[test]
    fn exact_p_depends_only_on_signed_ranks(
        d in prop::collection::vec((1u32..1000, prop::bool::ANY), 5..14),
        shift in -50i32..50,
    ) {
        // x − y = ±m; an odd increasing map of the differences keeps signs
        // and the rank order of magnitudes
        let y: Vec<f64> = (0..d.len()).map(|i| f64::from(shift) + i as f64).collect();
        let x: Vec<f64> = d.iter().zip(&y).map(|((m, pos), b)| b + if *pos { *m as f64 } else { -(*m as f64) }).collect();
        let x2: Vec<f64> = d.iter().zip(&y).map(|((m, pos), b)| {
            let v = (*m as f64).powi(3) + 7.0 * *m as f64;
            b + if *pos { v } else { -v }
        }).collect();
        let p1 = wilcoxon_signed_rank(&x, &y, WilcoxonMode::Exact).unwrap().p_value;
        let p2 = wilcoxon_signed_rank(&x2, &y, WilcoxonMode::Exact).unwrap().p_value;
        prop_assert!((p1 - p2).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&p1));
    }

    #[test]
    fn support_weighted_overall_is_plain_accuracy(
        pairs in prop::collection::vec((0u8..3, 0u8..3), 1..200),
    ) {
        let names = ["a", "b", "c"];
        let pred: Vec<&str> = pairs.iter().map(|p| names[p.0 as usize]).collect();
        let truth: Vec<&str> = pairs.iter().map(|p| names[p.1 as usize]).collect();
        let r = evaluate(&pred, &truth).unwrap();
        let correct = pairs.iter().filter(|p| p.0 == p.1).count();
        prop_assert_eq!(r.overall, correct as f64 / pairs.len() as f64);
        let lo = r.per_class_recall.values().cloned().fold(f64::INFINITY, f64::min);
        let hi = r.per_class_recall.values().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(r.overall >= lo - 1e-12 && r.overall <= hi + 1e-12);
        prop_assert_eq!(r.support.values().sum::<usize>(), r.n_test);

        // macro accuracy ignores class names
        let relabel = |s: &&str| match *s { "a" => "z", "b" => "y", _ => "x" };
        let r2 = evaluate(
            &pred.iter().map(relabel).collect::<Vec<_>>(),
            &truth.iter().map(relabel).collect::<Vec<_>>(),
        ).unwrap();
        prop_assert!((r.macro_overall - r2.macro_overall).abs() < 1e-12);
    }

    #[test]
    fn raising_margin_never_adds_subjects(
        subjects in prop::collection::vec((0.0f64..1.0, 0.3f64..0.7), 0..30),
        m1 in 0.0f64..0.3,
        extra in 0.0f64..0.3,
    ) {
        let results: BTreeMap<String, EvalResult> = subjects.iter().enumerate().map(|(i, (o, _))| {
            (format!("S{i:03}"), EvalResult::from_counts(&[("x", (o * 100.0) as usize, 100)]).unwrap())
        }).collect();
        let chance: BTreeMap<String, f64> = subjects.iter().enumerate().map(|(i, (_, c))| (format!("S{i:03}"), *c)).collect();
        let a = select_subjects(&results, &chance, m1).unwrap();
        let b = select_subjects(&results, &chance, m1 + extra).unwrap();
        prop_assert!(b.iter().all(|s| a.contains(s)));
    }
}
