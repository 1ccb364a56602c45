use ndarray::Array2;
use proptest::prelude::*;

use cmpgraph::alerts::{threshold, window_mean_std, ThresholdConfig};
use cmpgraph::cmp::{znorm_distance, Cmp, CmpConfig};
use cmpgraph::detectors::ScoreSeries;
use cmpgraph::eval::{match_events, report, EvalConfig, Margins, SubjectOutcome};
use cmpgraph::gnn::{aggregate, Aggregation};
use cmpgraph::graphs::{build_stream, ContextGraph};
use cmpgraph::ingest::{dedupe, ws_distance, EventRecord};

fn histogram() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0u32..30, 24).prop_map(|v| {
        let mut h: Vec<f64> = v.into_iter().map(f64::from).collect();
        h[0] += 1.0;
        h
    })
}

fn naive_masked(scores: &[f64], cfg: &ThresholdConfig) -> Vec<usize> {
    let mut kept: Vec<f64> = Vec::new();
    let mut alerts = Vec::new();
    for (t, &s) in scores.iter().enumerate() {
        let mut alerted = false;
        if kept.len() >= cfg.min_fill {
            let (mean, std) = window_mean_std(&kept[kept.len().saturating_sub(cfg.window)..]);
            alerted = s > mean + cfg.n_std * std;
        }
        if alerted {
            alerts.push(t);
        }
        if !(alerted && cfg.mask_alerts) {
            kept.push(s);
        }
    }
    alerts
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ws_is_a_metric(a in histogram(), b in histogram(), c in histogram()) {
        let ab = ws_distance(&a, &b).unwrap();
        prop_assert_eq!(ws_distance(&a, &a).unwrap(), 0.0);
        prop_assert!((ab - ws_distance(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!(ab <= ws_distance(&a, &c).unwrap() + ws_distance(&c, &b).unwrap() + 1e-12);
        prop_assert!((0.0..=23.0 + 1e-12).contains(&ab));
    }

    #[test]
    fn ws_ignores_total_mass(a in histogram(), b in histogram(), k in 0.5f64..8.0) {
        let scaled: Vec<f64> = a.iter().map(|v| v * k).collect();
        prop_assert!((ws_distance(&a, &b).unwrap() - ws_distance(&scaled, &b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn znorm_distance_is_affine_invariant(
        a in prop::collection::vec(-10.0f64..10.0, 5),
        b in prop::collection::vec(-10.0f64..10.0, 5),
        k in 0.1f64..10.0,
        shift in -50.0f64..50.0,
    ) {
        let d = znorm_distance(&a, &b).unwrap();
        let moved: Vec<f64> = a.iter().map(|v| v * k + shift).collect();
        prop_assert!((d - znorm_distance(&moved, &b).unwrap()).abs() < 1e-8);
        prop_assert!(d <= 2.0 * 5f64.sqrt() + 1e-12);
    }

    #[test]
    fn cmp_is_symmetric_and_bounded(series in prop::collection::vec(0u32..12, 12..80)) {
        let series: Vec<f64> = series.into_iter().map(f64::from).collect();
        let cmp = Cmp::compute(vec!["f".into()], &[series], CmpConfig::default()).unwrap();
        let m = &cmp.matrices[0];
        prop_assert_eq!(m, &m.t().to_owned());
        prop_assert!(m.iter().all(|&v| (0.0..=cmp.max_distance()).contains(&v)));
    }

    #[test]
    fn graphs_reconstruct_cmp_rows(
        values in prop::collection::vec(0.0f64..3.0, 2 * 64),
        i_min in 1usize..4,
        history in prop::option::of(1usize..5),
    ) {
        let mats: Vec<Array2<f64>> = values
            .chunks(64)
            .map(|c| Array2::from_shape_vec((8, 8), c.to_vec()).unwrap())
            .collect();
        let cmp = Cmp::from_matrices(CmpConfig::default(), vec!["a".into(), "b".into()], mats).unwrap();
        let stream = build_stream(&cmp, i_min, history).unwrap();
        prop_assert_eq!(stream.context_indices(), (i_min..8).collect::<Vec<_>>());
        for g in &stream.graphs {
            let i = g.context_index;
            prop_assert_eq!(g.n_outer(), history.map_or(i, |h| h.min(i)));
            for (k, j) in (g.first_outer..i).enumerate() {
                for f in 0..2 {
                    prop_assert_eq!(g.outer_features[[k, f]], cmp.matrices[f][[i, j]]);
                }
            }
        }
    }

    #[test]
    fn aggregate_ignores_node_order(
        rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 1..12),
        seed in any::<u64>(),
    ) {
        let n = rows.len();
        let flat: Vec<f64> = rows.concat();
        let graph = ContextGraph {
            context_index: n,
            first_outer: 0,
            outer_features: Array2::from_shape_vec((n, 3), flat).unwrap(),
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| (i as u64).wrapping_mul(seed | 1).rotate_left(17));
        let permuted = ContextGraph {
            outer_features: graph.outer_features.select(ndarray::Axis(0), &order),
            ..graph.clone()
        };
        for agg in [Aggregation::Mean, Aggregation::Sum] {
            prop_assert_eq!(aggregate(&graph, agg), aggregate(&permuted, agg));
        }
    }

    #[test]
    fn threshold_matches_naive(
        scores in prop::collection::vec(-3.0f64..3.0, 1..120),
        window in 2usize..10,
        n_std in 0.01f64..2.5,
        fill in 1usize..10,
        mask in any::<bool>(),
    ) {
        let cfg = ThresholdConfig { window, n_std, min_fill: fill.min(window), mask_alerts: mask };
        let series = ScoreSeries::new("s", "d", (0..scores.len()).collect(), scores.clone()).unwrap();
        let alerts = threshold(&series, &cfg, 3).unwrap();
        prop_assert_eq!(alerts.context_indices(), naive_masked(&scores, &cfg));
        for a in &alerts.alerts {
            prop_assert_eq!(a.day_index, a.context_index * 3);
            prop_assert!(a.score > a.threshold);
        }
    }

    #[test]
    fn wider_margins_never_lower_recall(
        alerts in prop::collection::vec(0usize..200, 0..20),
        labels in prop::collection::vec(0usize..200, 1..8),
        before in 0usize..12,
        after in 0usize..12,
        extra in 0usize..6,
    ) {
        let narrow = Margins { before, after };
        let wide = Margins { before: before + extra, after: after + extra };
        let hits = |m| match_events(&alerts, &labels, m).into_iter().filter(|&b| b).count();
        prop_assert!(hits(wide) >= hits(narrow));

        let outcome = SubjectOutcome {
            subject_id: "s".into(),
            alert_days: alerts.clone(),
            label_days: labels.clone(),
            scored_days: 200,
        };
        let cfg = |margins| EvalConfig { margins, ..EvalConfig::default() };
        let rn = report(std::slice::from_ref(&outcome), &cfg(narrow)).unwrap();
        let rw = report(std::slice::from_ref(&outcome), &cfg(wide)).unwrap();
        prop_assert!(rw.recall_pct >= rn.recall_pct);
        prop_assert_eq!(rw.alert_rate_pct, rn.alert_rate_pct);
        prop_assert!((0.0..=100.0).contains(&rw.alert_rate_pct));
    }

    #[test]
    fn more_alerts_never_lower_recall(
        alerts in prop::collection::vec(0usize..200, 0..20),
        more in prop::collection::vec(0usize..200, 0..10),
        labels in prop::collection::vec(0usize..200, 1..8),
    ) {
        let all: Vec<usize> = alerts.iter().chain(&more).copied().collect();
        let hits = |a: &[usize]| match_events(a, &labels, Margins::default()).into_iter().filter(|&b| b).count();
        prop_assert!(hits(&all) >= hits(&alerts));
    }

    #[test]
    fn dedupe_keeps_spaced_events(
        gaps in prop::collection::vec((0i64..200, 0usize..3), 1..60),
        window in 0i64..120,
    ) {
        let locs = ["a", "b", "c"];
        let mut t = 0;
        let events: Vec<EventRecord> = gaps
            .iter()
            .map(|&(g, l)| {
                t += g;
                EventRecord::new("s", t, locs[l])
            })
            .collect();
        let kept = dedupe(&events, window).unwrap();
        prop_assert!(!kept.is_empty() && kept.len() <= events.len());
        for loc in locs {
            let times: Vec<i64> = kept.iter().filter(|e| e.location == loc).map(|e| e.timestamp).collect();
            prop_assert!(times.windows(2).all(|w| w[1] - w[0] > window));
        }
        prop_assert_eq!(dedupe(&events, 0).unwrap().len(), {
            let mut n = 0;
            let mut last: std::collections::HashMap<&str, i64> = Default::default();
            for e in &events {
                if last.get(e.location.as_str()).is_none_or(|&p| e.timestamp > p) {
                    n += 1;
                }
                last.insert(&e.location, e.timestamp);
            }
            n
        });
    }
}
