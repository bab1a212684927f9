mod common;

use proptest::prelude::*;

use subspace_assoc::analysis::{error_bound, neighborhood_size, AnalysisInput};
use subspace_assoc::graph::expander::is_expander;
use subspace_assoc::graph::synthetic::{overlap_limited_support, synthetic_memory};
use subspace_assoc::graph::{degree_distributions, NeuralGraph};
use subspace_assoc::harness::{parse_report, write_report, ExperimentConfig, ReportRow};
use subspace_assoc::learning::{learn_constraint, learning_step, prune, LearningConfig};
use subspace_assoc::linalg::exact_rank;
use subspace_assoc::patterns::{
    build_training_set, capacity_check, generate_generator_matrix, synthesize_pattern, ModelSpec, Pattern, SampleSize,
    TrainingSet,
};
use subspace_assoc::recall::{inject_noise, Decoder, RecallConfig, RecallVariant};
use subspace_assoc::seed::rng_from_seed;

fn random_graph(n: usize, m: usize, density: f64, seed: u64) -> Option<NeuralGraph> {
    use rand::Rng;
    let mut rng = rng_from_seed(seed);
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            (0..n)
                .map(|_| if rng.gen_bool(density) { rng.gen_range(-1.0..1.0) } else { 0.0 })
                .collect()
        })
        .collect();
    NeuralGraph::from_dense_rows(n, 5, &rows).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exact_rank_agrees_with_rational_elimination(
        rows in prop::collection::vec(prop::collection::vec(-4i64..5, 5), 1..7)
    ) {
        prop_assert_eq!(exact_rank(&rows), common::rational_rank(&rows));
    }

    #[test]
    fn training_sets_stay_in_range_and_subspace(
        n in 6usize..14, kfrac in 0.2f64..0.8, dstar in 1usize..4, seed in any::<u64>(), c in 1usize..40
    ) {
        let k = ((n as f64 * kfrac) as usize).max(1);
        let q = 1 + dstar as u32;
        let spec = ModelSpec::new(q, n, k).unwrap();
        let mut rng = rng_from_seed(seed);
        let Ok(g) = generate_generator_matrix(spec, 2, dstar, &mut rng) else { return Ok(()) };
        let Ok(set) = build_training_set(spec, &g, 2, SampleSize::Count(c), &mut rng) else { return Ok(()) };
        for p in set.patterns() {
            prop_assert!(p.as_slice().iter().all(|&v| v < q));
        }
        let rows: Vec<Vec<i64>> = set.patterns().iter().map(|p| p.as_slice().iter().map(|&v| v as i64).collect()).collect();
        prop_assert!(common::rational_rank(&rows) <= k);
    }

    #[test]
    fn capacity_means_no_rejection(n in 4usize..10, k in 1usize..6, dstar in 1usize..4, gamma in 2u32..4, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let upsilon = 2u32;
        let q = 1 + dstar as u32 * (gamma - 1) * (upsilon - 1);
        prop_assert!(capacity_check(dstar as u64, gamma as u64, upsilon as u64, q as u64));
        let spec = ModelSpec::new(q, n, k).unwrap();
        let mut rng = rng_from_seed(seed);
        let Ok(g) = generate_generator_matrix(spec, gamma, dstar, &mut rng) else { return Ok(()) };
        for code in 0..(1u32 << k) {
            let u: Vec<u32> = (0..k).map(|i| (code >> i) & 1).collect();
            prop_assert!(synthesize_pattern(&u, &g, q).unwrap().is_some());
        }
        let all = build_training_set(spec, &g, upsilon, SampleSize::All, &mut rng).unwrap();
        prop_assert_eq!(all.len(), 1usize << k);
    }

    #[test]
    fn guard_is_enforced(alpha in 0.0f64..2.0, eta in 0.0f64..2.0) {
        let r = learning_step(&[0.6, 0.8], &[1.0, 0.0], alpha, eta, 0.01);
        prop_assert_eq!(r.is_ok(), 2.0 * alpha * eta < 1.0);
    }

    #[test]
    fn pruned_vectors_have_no_small_entries(
        w in prop::collection::vec(-1.0f64..1.0, 1..30), theta in 0.0f64..0.3
    ) {
        if let Some(p) = prune(&w, theta) {
            let norm: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|&v| v == 0.0 || v.abs() >= theta * 0.5));
        }
    }

    #[test]
    fn degree_fractions_sum_to_one(n in 2usize..30, m in 1usize..20, density in 0.1f64..0.9, seed in any::<u64>()) {
        let Some(g) = random_graph(n, m, density, seed) else { return Ok(()) };
        let dd = degree_distributions(&g).unwrap();
        prop_assert!((dd.lambda.values().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!((dd.rho.values().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert_eq!(g.pattern_degrees().iter().sum::<usize>(), g.constraint_degrees().iter().sum::<usize>());
        prop_assert_eq!(g.edge_count(), g.weights().nnz());
    }

    #[test]
    fn probabilities_stay_in_unit_interval(
        degrees in prop::collection::vec(1usize..12, 5..40), m in 12usize..60, phi in 0.05f64..1.0, e0 in 0usize..40
    ) {
        let n = degrees.len();
        prop_assume!(e0 <= n);
        let edges: Vec<(usize, usize, f64)> = degrees.iter().enumerate()
            .flat_map(|(j, &d)| (0..d).map(move |i| (j, (j * 7 + i * 3) % m, 1.0)))
            .collect();
        let mut dedup = edges.clone();
        dedup.sort_by_key(|&(j, c, _)| (j, c));
        dedup.dedup_by_key(|e| (e.0, e.1));
        let Ok(g) = NeuralGraph::from_edges(n, m, 3, &dedup) else { return Ok(()) };
        let dd = degree_distributions(&g).unwrap();
        let r = error_bound(&AnalysisInput { dd, m: g.m(), n, phi, e0 }).unwrap();
        for v in [r.pe1, r.pe2, r.pb, r.pe_block, r.pe_bound] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(r.s >= 0.0 && r.s <= m as f64 + 1e-9);
    }

    #[test]
    fn closed_form_recursion(dbar in 0.5f64..20.0, m in 20usize..300) {
        prop_assume!(dbar <= m as f64);
        for e in 0..100 {
            let s = neighborhood_size(e, dbar, m);
            let next = s + dbar * (1.0 - s / m as f64);
            prop_assert!((neighborhood_size(e + 1, dbar, m) - next).abs() < 1e-9 * m as f64);
        }
    }

    #[test]
    fn report_round_trip(
        vals in prop::collection::vec((0usize..50, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0), 0..6)
    ) {
        let rows: Vec<ReportRow> = vals.iter().map(|&(e0, a, b, c)| ReportRow {
            scenario: "s".into(), n: 100, k: 50, m: 50, variant: "mv".into(), phi: 1.0,
            e0, trials: 10, per_first: a, per_final: b, bound: c, ci_halfwidth: a * b,
        }).collect();
        let mut buf = Vec::new();
        write_report(&rows, &mut buf).unwrap();
        prop_assert_eq!(parse_report(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn config_text_round_trip(n in 10usize..200, kfrac in 0.1f64..0.9, seed in any::<u64>(), phi in 0.1f64..1.0) {
        let cfg = ExperimentConfig { n, k: ((n as f64 * kfrac) as usize).max(1), seed, phi, ..ExperimentConfig::default() };
        let back = ExperimentConfig::parse(&cfg.to_text()).unwrap();
        prop_assert_eq!(back, ExperimentConfig { scenario: cfg.scenario_name(), ..cfg });
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn expansion_implies_distinct_neighborhoods(seed in any::<u64>(), beta in 0.51f64..0.9) {
        let mut rng = rng_from_seed(seed);
        let Some(s) = overlap_limited_support(12, 12, 3, 2, &mut rng) else { return Ok(()) };
        let edges: Vec<(usize, usize, f64)> = s.iter().enumerate()
            .flat_map(|(j, l)| l.iter().map(move |&c| (j, c, 1.0)))
            .collect();
        let g = NeuralGraph::from_edges(12, 12, 3, &edges).unwrap();
        // brute force over pairs and singletons
        let nb: Vec<Vec<usize>> = (0..12).map(|j| g.neighbors(j).collect()).collect();
        let mut brute = true;
        for a in 0..12 {
            for b in a + 1..12 {
                let mut u: Vec<usize> = nb[a].iter().chain(&nb[b]).copied().collect();
                u.sort_unstable();
                u.dedup();
                brute &= u.len() as f64 > beta * 6.0;
            }
        }
        let alpha = 2.0 / 12.0;
        prop_assert_eq!(is_expander(&g, alpha, beta).unwrap(), brute);
        if brute {
            for a in 0..12 {
                for b in a + 1..12 {
                    prop_assert_ne!(&nb[a], &nb[b]);
                }
            }
        }
    }

    #[test]
    fn recall_keeps_states_in_range_and_reports_convergence(seed in any::<u64>(), e0 in 0usize..8, v in 0usize..3) {
        let mut rng = rng_from_seed(seed);
        let s = overlap_limited_support(24, 24, 4, 1, &mut rng).unwrap();
        let mem = synthetic_memory(&s, 24, 2, &mut rng).unwrap();
        let variant = [RecallVariant::Wta, RecallVariant::Mv, RecallVariant::MvL1][v];
        let cfg = RecallConfig::new(variant, 0.6, 40);
        let dec = Decoder::new(&mem.graph, cfg).unwrap();
        let truth = &mem.patterns[seed as usize % mem.patterns.len()];
        let (noisy, _) = inject_noise(truth, e0, mem.spec.q, &mut rng).unwrap();
        let out = dec.recall(&noisy).unwrap();
        let again = dec.recall(&noisy).unwrap();
        prop_assert_eq!(&out, &again);
        prop_assert!(out.x_out.as_slice().iter().all(|&v| v < mem.spec.q));
        let residual = mem.graph.apply(out.x_out.as_slice());
        prop_assert_eq!(out.converged, residual.iter().all(|h| h.abs() <= 1e-9));
        if variant == RecallVariant::Wta {
            // one coordinate by one step per round until convergence
            let mut prev = noisy.clone();
            for t in 1..=out.iterations.min(10) {
                let step = dec.recall_with_tmax(&noisy, t).unwrap().x_out;
                let moved: Vec<i64> = step.as_slice().iter().zip(prev.as_slice())
                    .map(|(&a, &b)| a as i64 - b as i64).filter(|&d| d != 0).collect();
                let converged_before = mem.graph.apply(prev.as_slice()).iter().all(|h| h.abs() <= 1e-9);
                if !converged_before {
                    prop_assert!(moved.len() <= 1);
                    prop_assert!(moved.iter().all(|d| d.abs() == 1));
                }
                prev = step;
            }
        }
    }

    #[test]
    fn learned_constraints_meet_the_contract(seed in 0u64..1000) {
        // span{(1,0,1,0), (0,1,0,1)}
        let spec = ModelSpec::new(11, 4, 2).unwrap();
        let rows = [[0, 0, 0, 0], [1, 0, 1, 0], [0, 1, 0, 1], [1, 1, 1, 1], [2, 1, 2, 1]];
        let pats = rows.iter().map(|r| Pattern::new(r.to_vec(), 11).unwrap()).collect();
        let x = TrainingSet::new(spec, pats, 0).unwrap();
        let cfg = LearningConfig { alpha0: 0.95, eta: 0.45, theta0: 0.01, epsilon: 1e-4, max_passes: 30_000, m: 1 };
        let lc = learn_constraint(&x, &cfg, &mut rng_from_seed(seed)).unwrap();
        prop_assert!(lc.residual <= cfg.epsilon);
        prop_assert!(lc.w.0.iter().all(|&v| v == 0.0 || v.abs() >= lc.theta_final * 0.5));
        // held out: other members of the span
        for (a, b) in [(3.0, 1.0), (5.0, 7.0), (0.0, 9.0)] {
            let h = [a, b, a, b];
            let dotp: f64 = h.iter().zip(&lc.w.0).map(|(p, q)| p * q).sum();
            let nh = (2.0 * (a * a + b * b)).sqrt();
            prop_assert!(dotp.abs() / nh <= 1e-2);
        }
    }
}
