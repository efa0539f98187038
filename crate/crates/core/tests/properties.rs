use multdioph::cartan::{
    gamma_chart, gamma_chart_unchecked, separation, separation_bar, CartanVector, SigmaSlice,
};
use multdioph::dani::{r_hard, solve_r, PsiSpec};
use multdioph::dims::Dims;
use multdioph::experiments::wilson_interval;
use multdioph::lattice::{delta_flowed, MatrixY};
use multdioph::probe::pi_plus;
use proptest::prelude::*;

fn dims(m: usize, n: usize) -> Dims {
    Dims::new(m, n).unwrap()
}

proptest! {
    #[test]
    fn chart_image_is_traceless_with_unit_positive_block(
        s1 in 0.05f64..0.45,
        s2 in 0.05f64..0.45,
    ) {
        let d = dims(2, 2);
        let a = gamma_chart_unchecked(d, &[s1, s2]);
        let e = a.entries();
        prop_assert!((e.iter().sum::<f64>()).abs() < 1e-12);
        prop_assert!((e[..2].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!((e[2..].iter().sum::<f64>() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn chart_checked_agrees_with_unchecked_inside_j(
        s1 in 0.21f64..0.4,
        s2 in 0.21f64..0.4,
    ) {
        let slice = SigmaSlice::new(dims(2, 2), 0.2).unwrap();
        if slice.contains_chart_point(&[s1, s2]) {
            let a = gamma_chart(&slice, &[s1, s2]).unwrap();
            let b = gamma_chart_unchecked(dims(2, 2), &[s1, s2]);
            prop_assert!(a.sup_dist(&b) < 1e-12);
        }
    }

    #[test]
    fn hard_correspondence_solution_is_the_closed_form(
        c in 0.05f64..0.95,
        t in 0.5f64..40.0,
    ) {
        let d = dims(2, 1);
        let solved = solve_r(&PsiSpec::hard(c).unwrap(), d, t, 1e-13).unwrap();
        let exact = r_hard(d, c).unwrap();
        prop_assert!((solved - exact).abs() < 1e-10);
    }

    #[test]
    fn pi_plus_is_multiplicative_over_blocks(q1 in -9i64..9, q2 in -9i64..9) {
        prop_assert_eq!(pi_plus(&[q1, q2]), pi_plus(&[q1]) * pi_plus(&[q2]));
        prop_assert!(pi_plus(&[q1, q2]) >= 1.0);
    }

    #[test]
    fn wilson_interval_brackets_the_fraction(s in 0usize..50, extra in 1usize..50) {
        let n = s + extra;
        let (lo, hi) = wilson_interval(s, n);
        let f = s as f64 / n as f64;
        prop_assert!((0.0..=1.0).contains(&lo));
        prop_assert!((0.0..=1.0).contains(&hi));
        prop_assert!(lo <= f + 1e-12 && f <= hi + 1e-12);
    }

    #[test]
    fn shortest_vector_never_beats_minkowski(
        y00 in 0.0f64..1.0,
        y10 in 0.0f64..1.0,
        a0 in -2.0f64..2.0,
        a1 in -2.0f64..2.0,
    ) {
        let d = dims(2, 1);
        let y = MatrixY::new(d, vec![vec![y00], vec![y10]]).unwrap();
        let a = CartanVector::new(vec![a0, a1, -(a0 + a1)]).unwrap();
        if a.entries().iter().all(|x| x.abs() <= 3.0) {
            let r = delta_flowed(&y, &a, None).unwrap();
            prop_assert!(r.delta <= 1.0 + 1e-9);
            prop_assert!(r.delta > 0.0);
            prop_assert!(r.q.iter().any(|&v| v != 0) || r.p.iter().any(|&v| v != 0));
        }
    }

    #[test]
    fn separation_bar_is_at_most_separation(seed in 0u64..1000) {
        use rand::SeedableRng;
        use rand::Rng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<CartanVector> = (0..4)
            .map(|_| {
                let x = rng.gen_range(-1.0..1.0);
                let z = rng.gen_range(-1.0..1.0);
                CartanVector::new(vec![x, z, -(x + z)]).unwrap()
            })
            .collect();
        let sep = separation(&pts).unwrap();
        let bar = separation_bar(&pts).unwrap();
        prop_assert!(bar <= sep + 1e-12);
    }
}
