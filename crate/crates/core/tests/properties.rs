use std::collections::VecDeque;

use proptest::prelude::*;

use roe_kms::kms::{kms_to_trace, trace_to_kms};
use roe_kms::sample;
use roe_kms::space::{make_interval, make_squares, make_tree, SpaceRef};
use roe_kms::translation::{image_under, inverse, preimage_under, PointSet};
use roe_kms::tree::{branch_isometry, pushforward_state, Word};
use roe_kms::{
    band_decompose, compose, gibbs_state, kms_defect_criterion, kms_defect_direct, reassemble, PotentialRule,
};

fn space_for(kind: u8) -> SpaceRef {
    match kind % 4 {
        0 => make_interval(24).unwrap(),
        1 => make_squares(20).unwrap(),
        2 => make_tree(2, 4).unwrap(),
        _ => make_tree(3, 2).unwrap(),
    }
    .into_shared()
}

fn potential_for(kind: u8, s: &SpaceRef) -> roe_kms::Potential {
    let rule = match kind % 4 {
        0 => PotentialRule::LogLabel,
        1 => PotentialRule::LogSqrtLabel,
        _ => PotentialRule::WordLength,
    };
    rule.on(s).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composition_identity(kind in 0u8..4, seed in any::<u64>()) {
        let s = space_for(kind);
        let mut rng = sample::rng(seed);
        let f = sample::random_translation(&s, sample::ladder_radius(&mut rng), 0.8, &mut rng);
        let g = sample::random_translation(&s, sample::ladder_radius(&mut rng), 0.8, &mut rng);
        let a = sample::random_point_set(&s, 0.5, &mut rng);
        let b = sample::random_point_set(&s, 0.5, &mut rng);
        let lhs: PointSet = image_under(&f, &a).intersection(&image_under(&g, &b)).copied().collect();
        let inner: PointSet = image_under(&compose(&inverse(&g), &f).unwrap(), &a).intersection(&b).copied().collect();
        prop_assert_eq!(lhs, preimage_under(&inverse(&g), &inner));
    }

    #[test]
    fn inverse_is_involutive(kind in 0u8..4, seed in any::<u64>(), keep in 0.0f64..1.0) {
        let s = space_for(kind);
        let mut rng = sample::rng(seed);
        let f = sample::random_translation(&s, 3.0, keep, &mut rng);
        prop_assert_eq!(inverse(&inverse(&f)), f.clone());
        let id = compose(&inverse(&f), &f).unwrap();
        prop_assert!(id.pairs().all(|(x, y)| x == y));
        prop_assert_eq!(id.domain(), f.domain());
    }

    #[test]
    fn decomposition_reassembles(kind in 0u8..4, seed in any::<u64>(), density in 0.05f64..1.0) {
        let s = space_for(kind);
        let mut rng = sample::rng(seed);
        let a = sample::random_band_operator(&s, sample::ladder_radius(&mut rng), density, &mut rng);
        let terms = band_decompose(&a);
        prop_assert_eq!(reassemble(s.clone(), &terms).unwrap(), a.clone());
        for (_, f) in &terms {
            prop_assert!(f.displacement() <= a.propagation());
        }
    }

    #[test]
    fn propagation_is_subadditive(kind in 0u8..4, seed in any::<u64>()) {
        let s = space_for(kind);
        let mut rng = sample::rng(seed);
        let a = sample::random_band_operator(&s, sample::ladder_radius(&mut rng), 0.4, &mut rng);
        let b = sample::random_band_operator(&s, sample::ladder_radius(&mut rng), 0.4, &mut rng);
        let ab = a.multiply(&b).unwrap();
        prop_assert!(ab.propagation() <= a.propagation() + b.propagation());
        prop_assert!(a.add(&b).unwrap().propagation() <= a.propagation().max(b.propagation()));
        prop_assert_eq!(a.adjoint().propagation(), a.propagation());
    }

    #[test]
    fn trace_round_trip(kind in 0u8..4, seed in any::<u64>(), beta in -3.0f64..3.0) {
        let s = space_for(kind);
        let h = potential_for(kind, &s);
        let mut rng = sample::rng(seed);
        let tau = sample::random_weights(s.len(), &mut rng);
        let phi = trace_to_kms(&tau, &h, beta).unwrap();
        prop_assert!(kms_to_trace(&phi, &h, beta).unwrap().max_abs_diff(&tau) <= 1e-12);
        // only the uniform trace is a trace on a finite space; its image is KMS
        let fs = sample::translations(&s, 10, seed);
        let u = trace_to_kms(&roe_kms::DiagonalState::uniform(s.len()).unwrap(), &h, beta).unwrap();
        prop_assert!(kms_defect_criterion(&u, &h, beta, &fs).unwrap().max_defect() <= 1e-10);
    }

    #[test]
    fn direct_and_criterion_agree_on_gibbs(kind in 0u8..4, seed in any::<u64>(), beta in 0.0f64..2.5) {
        let s = space_for(kind);
        let h = potential_for(kind, &s);
        let g = gibbs_state(&s, &h, beta).unwrap();
        let pairs = sample::operator_pairs(&s, 15, seed);
        let fs = sample::translations(&s, 15, seed);
        prop_assert!(kms_defect_direct(&g, &h, beta, &pairs).unwrap().max_defect() <= 1e-10);
        prop_assert!(kms_defect_criterion(&g, &h, beta, &fs).unwrap().max_defect() <= 1e-10);

        // a non-KMS state fails both checks together on pairs of point swaps
        let u = roe_kms::DiagonalState::uniform(s.len()).unwrap();
        let swap = roe_kms::PartialTranslation::new(s.clone(), [(0, s.len() - 1)]).unwrap();
        let e = |x, y| roe_kms::BandOperator::matrix_unit(s.clone(), x, y).unwrap();
        let crit = kms_defect_criterion(&u, &h, beta, &[swap]).unwrap().max_defect();
        let direct = kms_defect_direct(&u, &h, beta, &[(e(s.len() - 1, 0), e(0, s.len() - 1))]).unwrap().max_defect();
        prop_assert_eq!(crit > 1e-10, direct > 1e-10);
    }

    #[test]
    fn pushforward_transports_defects(bits in 0u32..32, seed in any::<u64>()) {
        let t = make_tree(2, 6).unwrap().into_shared();
        let h = PotentialRule::WordLength.on(&t).unwrap();
        let mut rng = sample::rng(seed);
        let phi = sample::random_weights(t.len(), &mut rng);
        let y = Word::from_letters((0..5).map(|b| 1 + ((bits >> b) & 1) as u8).collect());
        let f = branch_isometry(&t, &y, &Word::repeat(2, 5)).unwrap();
        let moved = pushforward_state(&phi, &f).unwrap();
        // the pushed state is φ∘f and f preserves word length, so swaps transport through f⁻¹
        let swaps: Vec<_> = (0..t.len()).step_by(7).flat_map(|x| (0..t.len()).step_by(5).map(move |y| (x, y))).collect();
        let before: Vec<_> = swaps.iter().map(|&(x, y)| roe_kms::PartialTranslation::new(t.clone(), [(x, y)]).unwrap()).collect();
        let after: Vec<_> = swaps
            .iter()
            .map(|&(x, y)| roe_kms::PartialTranslation::new(t.clone(), [(f.preimage(x).unwrap(), f.preimage(y).unwrap())]).unwrap())
            .collect();
        for (a, b) in before.iter().zip(&after) {
            let da = kms_defect_criterion(&phi, &h, 1.0, std::slice::from_ref(a)).unwrap().max_defect();
            let db = kms_defect_criterion(&moved, &h, 1.0, std::slice::from_ref(b)).unwrap().max_defect();
            prop_assert!((da - db).abs() <= 1e-14);
        }
    }

    #[test]
    fn tree_distance_matches_bfs(n in 2usize..4, depth in 1usize..5, seed in any::<u64>()) {
        let t = make_tree(n, depth).unwrap();
        // adjacency from parent links: the parent of id > 0 is (id - 1) / n
        let mut adj = vec![Vec::new(); t.len()];
        for v in 1..t.len() {
            let p = (v - 1) / n;
            adj[v].push(p);
            adj[p].push(v);
        }
        let src = (seed as usize) % t.len();
        let mut dist = vec![usize::MAX; t.len()];
        dist[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for &w in &adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        for y in t.ids() {
            prop_assert_eq!(t.dist(src, y), dist[y] as f64);
        }
    }

    #[test]
    fn flows_compose(kind in 0u8..4, seed in any::<u64>(), s1 in -2.0f64..2.0, s2 in -2.0f64..2.0) {
        let s = space_for(kind);
        let h = potential_for(kind, &s);
        let mut rng = sample::rng(seed);
        let a = sample::random_band_operator(&s, 2.0, 0.5, &mut rng);
        let two = roe_kms::evolve(&roe_kms::evolve(&a, &h, s1).unwrap(), &h, s2).unwrap();
        let one = roe_kms::evolve(&a, &h, s1 + s2).unwrap();
        prop_assert!(two.max_abs_diff(&one).unwrap() <= 1e-12);
        let back = roe_kms::analytic_evolve(&roe_kms::analytic_evolve(&a, &h, s1).unwrap(), &h, -s1).unwrap();
        prop_assert!(back.max_abs_diff(&a).unwrap() <= 1e-9 * (1.0 + a.max_abs_entry()));
    }
}
