use cardfair::bounds::{
    divisible_ratio_exact, lower_achieved_exact, poc_esw_multi, poc_esw_single, poc_usw_multi, poc_usw_single,
    poc_usw_two, TOLERANCE,
};
use cardfair::generators::*;
use cardfair::oracle::empirical_poc;
use cardfair::rational::{ratio, Rational};
use cardfair::solvers::{opt_usw_cardinal_matching, opt_usw_unconstrained};
use cardfair::welfare::poc_ratio;
use cardfair::Instance;

/// Utilitarian ratio from the two polynomial solvers.
fn solver_ratio(inst: &Instance) -> Rational {
    let (_, opt) = opt_usw_unconstrained(inst);
    let (_, best) = opt_usw_cardinal_matching(inst).unwrap();
    poc_ratio(&opt, &best).unwrap()
}

#[test]
fn divisible_family_is_tight() {
    for (c, k, n) in [(2, 1, 4), (2, 2, 4), (2, 1, 5), (2, 3, 4)] {
        let inst = gen_usw_single_divisible(c, k, n).unwrap();
        let m = inst.m() as u64;
        let r = empirical_poc(&inst).unwrap().usw_ratio;
        assert_eq!(r, divisible_ratio_exact(c as u64, k as u64).unwrap());
        assert!((r.to_f64() - poc_usw_single(m, k as u64).unwrap()).abs() < TOLERANCE);
    }
    assert_eq!(empirical_poc(&gen_usw_single_divisible(2, 2, 4).unwrap()).unwrap().usw_ratio, ratio(3, 2));
}

#[test]
fn general_family_matches_its_formula() {
    // oracle scale
    for (m, k, n) in [(4, 1, 4), (5, 1, 5), (6, 2, 3), (7, 2, 4), (8, 3, 3)] {
        let inst = gen_usw_single_general(m, k, n).unwrap();
        let r = empirical_poc(&inst).unwrap().usw_ratio;
        assert_eq!(r, lower_achieved_exact(m as u64, k as u64).unwrap(), "m={m} k={k}");
    }
    let inst = gen_usw_single_general(50, 7, 8).unwrap();
    assert_eq!(solver_ratio(&inst), ratio(7, 4));
}

#[test]
fn general_family_is_within_one_of_upper_bound() {
    for m in 3..=60usize {
        for k in 1..=m - 2 {
            let t = cardfair::bounds::floor_s(m as u64, k as u64).max(1) as usize;
            let n = m.div_ceil(k).max(t + 1);
            let inst = gen_usw_single_general(m, k, n).unwrap();
            let r = solver_ratio(&inst);
            assert_eq!(r, lower_achieved_exact(m as u64, k as u64).unwrap(), "m={m} k={k}");
            assert!(r.to_f64() >= poc_usw_single(m as u64, k as u64).unwrap() - 1.0 - TOLERANCE);
        }
    }
}

#[test]
fn egalitarian_single_family_is_tight() {
    for (m, n, k) in [(4, 2, 2), (6, 3, 2), (5, 2, 3), (7, 3, 3), (8, 2, 4)] {
        let inst = gen_esw_single(m, n, k).unwrap();
        let r = empirical_poc(&inst).unwrap().esw_ratio;
        assert_eq!(r, poc_esw_single(m as u64, n as u64, k as u64).unwrap(), "m={m} n={n} k={k}");
    }
}

#[test]
fn two_agent_family_is_tight() {
    for pairs in [vec![(2, 1), (2, 1)], vec![(4, 2), (3, 2)], vec![(3, 2), (3, 3)], vec![(2, 1), (3, 2), (1, 1)]] {
        let inst = gen_usw_two(&pairs).unwrap();
        assert_eq!(empirical_poc(&inst).unwrap().usw_ratio, poc_usw_two(&pairs).unwrap());
    }
    assert_eq!(poc_usw_two(&[(4, 2), (3, 2)]).unwrap(), ratio(12, 7));
    assert_eq!(empirical_poc(&gen_usw_two(&[(2, 2), (1, 1)]).unwrap()).unwrap().usw_ratio, ratio(1, 1));
}

#[test]
fn equal_ratio_family_is_tight() {
    for (n, q, k) in [(2, 2, 1), (3, 2, 1), (2, 4, 2), (2, 2, 2)] {
        let inst = gen_usw_multi(n, q, k).unwrap();
        let r = empirical_poc(&inst).unwrap().usw_ratio;
        assert_eq!(r, ratio(q as i64, k as i64));
        assert_eq!(r, poc_usw_multi(&inst.pairs()).unwrap());
    }
}

#[test]
fn egalitarian_multi_family_is_tight() {
    let cases: Vec<(usize, Vec<(usize, usize)>)> = vec![
        (3, vec![(3, 1), (2, 1)]),
        (3, vec![(4, 2), (1, 1)]),
        (2, vec![(2, 2), (1, 1)]),
        (2, vec![(3, 2), (2, 1)]),
        (3, vec![(4, 2), (1, 1), (1, 1)]),
        // second regime, worst category has c = 0
        (5, vec![(5, 3), (3, 2)]),
        (4, vec![(5, 2), (1, 1)]),
    ];
    for (n, pairs) in cases {
        let inst = gen_esw_multi(n, &pairs).unwrap();
        let r = empirical_poc(&inst).unwrap().esw_ratio;
        assert_eq!(r, poc_esw_multi(n as u64, &pairs).unwrap(), "n={n} pairs={pairs:?}");
    }
}

#[test]
fn egalitarian_multi_regime_selection() {
    let p = cardfair::bounds::MultiCatBoundParams::new(5, &[(5, 3), (3, 2)]).unwrap();
    assert!(!p.first_regime());
    assert_eq!(p.c_values, vec![1, 0]);
    assert_eq!(p.worst_category(), 1);
    assert_eq!(poc_esw_multi(5, &[(5, 3), (3, 2)]).unwrap(), ratio(3, 2));
}
