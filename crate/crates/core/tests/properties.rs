use proptest::prelude::*;

use rca_lab::analysis::{conjugate, kernel_witness, reflect, test_injective, test_surjective};
use rca_lab::entropy::{entropy_of, kl_of, tv_of};
use rca_lab::exact::{exact_window_marginal, ConeProblem};
use rca_lab::theory::{bootstrap_layout, check_noise_lemma, LemmaVariant};
use rca_lab::{apply_rule, Alphabet, CellSet, LocalRule, NoiseModel, TorusConfiguration};

fn law(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, len).prop_filter_map("all zero", |w| {
        let s: f64 = w.iter().sum();
        (s > 1e-9).then(|| w.iter().map(|x| x / s).collect())
    })
}

fn positive_law(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, len).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.iter().map(|x| x / s).collect()
    })
}

fn cell_set() -> impl Strategy<Value = CellSet> {
    (1usize..=2).prop_flat_map(|d| {
        prop::collection::vec(prop::collection::vec(-4i64..4, d), 1..6)
            .prop_map(move |cells| CellSet::new(d, cells).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn moore_neighbourhoods_compose(set in cell_set(), a in 0usize..3, b in 0usize..3) {
        prop_assert_eq!(set.moore(a).moore(b), set.moore(a + b));
        prop_assert!(set.is_subset(&set.moore(a)));
        prop_assert!(set.moore_boundary(a).is_disjoint(&set));
    }

    #[test]
    fn group_laws_hold(moduli in prop::collection::vec(2u32..5, 1..3), seed in any::<u64>()) {
        let g = Alphabet::new(moduli).unwrap();
        let k = g.size() as u64;
        let pick = |i: u64| ((seed.rotate_left(i as u32 * 7) ^ i) % k) as u32;
        let (x, y, z) = (pick(1), pick(2), pick(3));
        prop_assert_eq!(g.add(g.add(x, y), z), g.add(x, g.add(y, z)));
        prop_assert_eq!(g.add(x, y), g.add(y, x));
        prop_assert_eq!(g.add(x, g.zero()), x);
        prop_assert_eq!(g.add(x, g.neg(x)), g.zero());
        prop_assert_eq!(g.sub(x, y), g.add(x, g.neg(y)));
    }

    #[test]
    fn rules_commute_with_translation(code in 0u32..256, data in prop::collection::vec(0u32..2, 3..12), by in -5i64..5) {
        let rule = LocalRule::elementary(code).unwrap();
        let x = TorusConfiguration::ring(data);
        let lhs = apply_rule(&x.shift(&[by]), &rule).unwrap();
        let rhs = apply_rule(&x, &rule).unwrap().shift(&[by]);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn linear_rules_are_additive(
        m in 2u32..6,
        coeffs in prop::collection::vec(-3i64..4, 3),
        a in prop::collection::vec(0u32..6, 6),
        b in prop::collection::vec(0u32..6, 6),
    ) {
        let g = Alphabet::cyclic(m).unwrap();
        let terms: Vec<(Vec<i64>, i64)> = coeffs.iter().enumerate().map(|(i, &c)| (vec![i as i64 - 1], c)).collect();
        let rule = LocalRule::linear(g.clone(), &terms).unwrap();
        let a: Vec<u32> = a.iter().map(|s| s % m).collect();
        let b: Vec<u32> = b.iter().map(|s| s % m).collect();
        let sum: Vec<u32> = a.iter().zip(&b).map(|(&x, &y)| g.add(x, y)).collect();
        let fa = apply_rule(&TorusConfiguration::ring(a), &rule).unwrap();
        let fb = apply_rule(&TorusConfiguration::ring(b), &rule).unwrap();
        let fs = apply_rule(&TorusConfiguration::ring(sum), &rule).unwrap();
        let expect: Vec<u32> = fa.data().iter().zip(fb.data()).map(|(&x, &y)| g.add(x, y)).collect();
        prop_assert_eq!(fs.data(), &expect[..]);
    }

    #[test]
    fn pinsker_holds_for_random_laws(p in law(8), q in positive_law(8)) {
        let tv = tv_of(&p, &q);
        prop_assert!(tv <= (kl_of(&p, &q) / 2.0).sqrt() + 1e-12);
    }

    #[test]
    fn entropy_is_concave(p in law(6), q in law(6), lambda in 0.0f64..1.0) {
        let mix: Vec<f64> = p.iter().zip(&q).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
        let lhs = entropy_of(&mix);
        let rhs = lambda * entropy_of(&p) + (1.0 - lambda) * entropy_of(&q);
        prop_assert!(lhs >= rhs - 1e-12);
        prop_assert!(lhs <= 6f64.ln() + 1e-12);
    }

    #[test]
    fn noise_lemmas_hold(k in 2u32..4, q in positive_law(3), p in law(9), sites in 1usize..3) {
        let q: Vec<f64> = {
            let q = &q[..k as usize];
            let s: f64 = q.iter().sum();
            q.iter().map(|x| x / s).collect()
        };
        let noise = NoiseModel::additive(Alphabet::cyclic(k).unwrap(), q).unwrap();
        let len = (k as usize).pow(sites as u32);
        let joint: Vec<f64> = {
            let w = &p[..len.min(p.len())];
            let mut w = w.to_vec();
            w.resize(len, 0.0);
            let s: f64 = w.iter().sum();
            if s == 0.0 { vec![1.0 / len as f64; len] } else { w.iter().map(|x| x / s).collect() }
        };
        let scalar = joint[..k as usize].to_vec();
        let s: f64 = scalar.iter().sum();
        let scalar = if s == 0.0 { vec![1.0 / k as f64; k as usize] } else { scalar.iter().map(|x| x / s).collect() };
        for v in [LemmaVariant::Scalar(scalar), LemmaVariant::Joint { sites, law: joint }] {
            let r = check_noise_lemma(&v, &noise).unwrap();
            prop_assert!(r.ok, "{:?}", r);
        }
    }

    #[test]
    fn bootstrap_layouts_tile(n in 1usize..5, k in 1usize..4, r in 0usize..3, t in 0usize..4, d in 1usize..3) {
        let layout = bootstrap_layout(n, k, r, t, d).unwrap();
        prop_assert_eq!(layout.m, k * (n + 2 * r * t));
        prop_assert!(layout.verify().is_ok());
    }

    #[test]
    fn identity_chain_distance_never_grows(q in positive_law(3), init in prop::collection::vec(0u32..3, 2)) {
        let g = Alphabet::cyclic(3).unwrap();
        let rule = LocalRule::identity(g.clone(), 1).unwrap();
        let noise = NoiseModel::additive(g, q).unwrap();
        let mut last = f64::INFINITY;
        for t in 0..6 {
            let p = ConeProblem::from_configuration(rule.clone(), noise.clone(), CellSet::interval(0, 1), t, |c| init[c[0].rem_euclid(2) as usize]).unwrap();
            let d = exact_window_marginal(&p).unwrap().tv_to_uniform();
            prop_assert!(d <= last + 1e-12);
            last = d;
        }
    }
}

#[test]
fn classification_is_invariant_under_reflection_and_complement() {
    for code in 0..256 {
        let rule = LocalRule::elementary(code).unwrap();
        let s = test_surjective(&rule).unwrap();
        let i = test_injective(&rule).unwrap();
        for other in [reflect(&rule).unwrap(), conjugate(&rule, &[1, 0]).unwrap()] {
            assert_eq!(test_surjective(&other).unwrap(), s, "rule {code}");
            assert_eq!(test_injective(&other).unwrap(), i, "rule {code}");
        }
        // injective elementary rules are exactly the shifts, identity and their complements
        assert_eq!(
            i,
            [15, 51, 85, 170, 204, 240].contains(&code),
            "rule {code}"
        );
    }
}

#[test]
fn linear_rules_with_a_kernel_are_not_injective() {
    let witness = kernel_witness(&LocalRule::elementary(90).unwrap(), 6)
        .unwrap()
        .unwrap();
    assert!(witness.data().iter().any(|&s| s != 0));
    assert!(!test_injective(&LocalRule::elementary(90).unwrap()).unwrap());
    assert!(kernel_witness(&LocalRule::elementary(170).unwrap(), 8)
        .unwrap()
        .is_none());
}
