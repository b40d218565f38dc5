//! Small closed-form cases and the 20-atom Markov pencil end to end.

use linpencil::markov::{build_markov_pencil, numerical_range_section, thiele_step};
use linpencil::recurrence::{zeros_of_pn, zeros_of_qn};
use linpencil::{DiscreteMeasure, MarkovPencil, NodePlan, ThieleStep, C64};

fn twenty_atom() -> MarkovPencil {
    let mu = DiscreteMeasure::uniform(20, -1.0, 1.0).unwrap();
    let plan = NodePlan::from_pairs(NodePlan::ladder(24), (-1.0, 1.0)).unwrap();
    build_markov_pencil(&mu, &plan, 24).unwrap()
}

#[test]
fn two_atom_thiele_step() {
    let mu = DiscreteMeasure::new(vec![-1.0, 1.0], vec![0.5, 0.5], (-1.0, 1.0)).unwrap();
    let step = thiele_step(&mu, C64::new(0.0, 1.0)).unwrap();
    let ThieleStep::Continue {
        b_diag,
        a_diag,
        b_off,
        next,
    } = step
    else {
        panic!("two atoms cannot terminate");
    };
    assert!((b_diag - 2.0).abs() < 1e-13);
    assert!(a_diag.abs() < 1e-13);
    assert!((b_off - 1.0).abs() < 1e-13);
    assert_eq!(next.len(), 1);
    assert!(next.atoms()[0].abs() < 1e-13);
    assert!((next.weights()[0] - 1.0).abs() < 1e-13);
    // The one-atom tail closes the fraction.
    let last = thiele_step(&next, C64::new(0.0, 2.0)).unwrap();
    assert!(matches!(last, ThieleStep::Terminated { .. }));
    assert!((last.b_diag() - 1.0).abs() < 1e-13);
}

#[test]
fn two_atom_pencil_reproduces_cauchy_transform() {
    let mu = DiscreteMeasure::new(vec![-1.0, 1.0], vec![0.5, 0.5], (-1.0, 1.0)).unwrap();
    let plan = NodePlan::from_pairs(vec![C64::new(0.0, 1.0)], (-1.0, 1.0)).unwrap();
    let mp = build_markov_pencil(&mu, &plan, 4).unwrap();
    assert_eq!(mp.len(), 2);
    assert_eq!(mp.terminated_at(), Some(1));
    let z = C64::new(3.0, 0.0);
    for n in 2..=6 {
        assert!((mp.convergent(z, n).unwrap() - 0.375).norm() < 1e-14);
    }
}

#[test]
fn interpolation_at_the_nodes() {
    let mp = twenty_atom();
    for n in 1..=10 {
        let res = mp.interpolation_residuals(n).unwrap();
        assert_eq!(res.len(), 2 * n);
        assert!(res.iter().all(|&r| r < 1e-8), "n={n}: {res:?}");
    }
}

#[test]
fn zeros_inside_numerical_range() {
    let mp = twenty_atom();
    for n in 1..=10 {
        let (lo, hi) = numerical_range_section(&mp, n).unwrap();
        assert!(-1.0 <= lo && hi <= 1.0);
        for z in zeros_of_qn(mp.pencil(), n).unwrap() {
            assert!(z.im.abs() < 1e-10, "n={n} {z}");
            assert!(lo - 1e-10 <= z.re && z.re <= hi + 1e-10);
        }
        if n > 1 {
            for z in zeros_of_pn(mp.pencil(), n).unwrap() {
                assert!(lo - 1e-10 <= z.re && z.re <= hi + 1e-10);
            }
        }
    }
}

#[test]
fn converges_outside_the_interval() {
    let mp = twenty_atom();
    for z in [
        C64::new(2.0, 0.0),
        C64::new(2.0, 1.0),
        C64::new(-3.0, 0.0),
        C64::new(0.0, 5.0),
    ] {
        let phi = mp.phi(z).unwrap();
        let err = |n| (mp.convergent(z, n).unwrap() - phi).norm();
        assert!(err(12) < err(4));
        assert!(err(20) < 1e-10, "{z}: {}", err(20));
    }
}
