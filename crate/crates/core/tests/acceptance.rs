//! Acceptance checks, one line per criterion. Run with
//! `cargo test -p cardfair --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cardfair::bounds::{
    poc_esw_multi, poc_esw_single, poc_usw_multi, poc_usw_single, poc_usw_single_lower_achieved, poc_usw_two,
};
use cardfair::generators::*;
use cardfair::oracle::{empirical_poc, opt_brute};
use cardfair::rational::{ratio, Rational};
use cardfair::reductions::*;
use cardfair::solvers::{greedy_reassign, keep_top_k, opt_usw_cardinal_matching, opt_usw_unconstrained};
use cardfair::sweep::fig2;
use cardfair::welfare::poc_ratio;
use cardfair::{esw, fuzz, usw, Allocation, CategorySpec, Instance, Objective};

const SQRT_TOL: f64 = 1e-9;
const CORPUS_SEED: u64 = 20_240_601;
const CORPUS_SIZE: usize = 1200;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant, what: &str) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took <= limit, || format!("{what} took {took:?}, limit {limit:?}"))
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

/// `(1 + s) / (1 + k s^2 / (m - 1))` with integer `s`.
fn divisible_value(s: i64, k: i64, m: i64) -> Rational {
    Rational::from(1 + s) / (Rational::one() + ratio(k * s * s, m - 1))
}

fn criterion_1() -> Outcome {
    let mut notes = Vec::new();
    for (c, k, n) in [(2usize, 1usize, 4usize), (2, 2, 4), (3, 1, 9)] {
        let start = Instant::now();
        let inst = gen_usw_single_divisible(c, k, n).map_err(err)?;
        let m = inst.m();
        let measured = if m <= 10 && (n as u128).pow(m as u32) <= 10_000_000 {
            empirical_poc(&inst).map_err(err)?.usw_ratio
        } else {
            let (_, opt) = opt_usw_unconstrained(&inst);
            let (_, best) = opt_usw_cardinal_matching(&inst).map_err(err)?;
            poc_ratio(&opt, &best).map_err(err)?
        };
        let closed = (1.0 + (1.0 + (m as f64 - 1.0) / k as f64).sqrt()) / 2.0;
        ensure((measured.to_f64() - closed).abs() <= SQRT_TOL, || {
            format!("(c={c},k={k},n={n}) ratio {measured} vs {closed}")
        })?;
        let exact = divisible_value(c as i64 - 1, k as i64, m as i64);
        ensure(measured == exact, || format!("(c={c},k={k},n={n}) ratio {measured} != {exact}"))?;
        ensure(
            (poc_usw_single(m as u64, k as u64).map_err(err)? - closed).abs() <= SQRT_TOL,
            || "library bound disagrees with closed form".into(),
        )?;
        within(Duration::from_secs(10), start, "case")?;
        notes.push(format!("({c},{k},{n})={measured}"));
    }
    Ok(notes.join(" "))
}

fn criterion_2() -> Outcome {
    let mut notes = Vec::new();
    for (m, n, k) in [(4usize, 2usize, 2usize), (6, 3, 2), (10, 3, 4)] {
        let inst = gen_esw_single(m, n, k).map_err(err)?;
        let expected = Rational::from((m - n + 1) as i64).max(Rational::from(k)) / Rational::from(k);
        ensure(expected == poc_esw_single(m as u64, n as u64, k as u64).map_err(err)?, || {
            "library bound disagrees".into()
        })?;
        let measured = if m <= 8 {
            empirical_poc(&inst).map_err(err)?.esw_ratio
        } else {
            // each agent on its own valued items is the egalitarian optimum,
            // and keep-top-k of it is a cardinal allocation attaining the bound
            let owners: Vec<usize> = (0..m).map(|g| g.min(n - 1)).collect();
            let opt_alloc = Allocation::from_owners(n, owners).map_err(err)?;
            let opt = esw(&inst, &opt_alloc).map_err(err)?;
            let kept = keep_top_k(&inst, &opt_alloc).map_err(err)?;
            let achieved = esw(&inst, &kept).map_err(err)?;
            // the last agent can hold at most k of its m - n + 1 items
            let ceiling = Rational::from(k) / Rational::from(m - n + 1);
            ensure(achieved == ceiling, || format!("keep-top-k esw {achieved} != {ceiling}"))?;
            poc_ratio(&opt, &achieved).map_err(err)?
        };
        ensure(measured == expected, || format!("(m={m},n={n},k={k}) {measured} != {expected}"))?;
        notes.push(format!("({m},{n},{k})={measured}"));
    }
    Ok(notes.join(" "))
}

fn criterion_3() -> Outcome {
    let mut notes = Vec::new();
    for (m1, k1, m2, k2) in [(2usize, 1usize, 2usize, 1usize), (4, 2, 3, 2)] {
        let start = Instant::now();
        let pairs = [(m1, k1), (m2, k2)];
        let inst = gen_usw_two(&pairs).map_err(err)?;
        let measured = empirical_poc(&inst).map_err(err)?.usw_ratio;
        let expected = Rational::from(2 * m1 * m2) / Rational::from(m2 * k1 + m1 * k2);
        ensure(measured == expected, || format!("{pairs:?}: {measured} != {expected}"))?;
        ensure(poc_usw_two(&pairs).map_err(err)? == expected, || "library bound disagrees".into())?;
        within(Duration::from_secs(5), start, "case")?;
        notes.push(format!("{pairs:?}={measured}"));
    }
    Ok(notes.join(" "))
}

fn criterion_4() -> Outcome {
    let inst = gen_usw_multi(3, 2, 1).map_err(err)?;
    let measured = empirical_poc(&inst).map_err(err)?.usw_ratio;
    ensure(measured == ratio(2, 1), || format!("ratio {measured} != 2"))?;
    ensure(poc_usw_multi(&inst.pairs()).map_err(err)? == ratio(2, 1), || "library bound disagrees".into())?;
    Ok(format!("ratio {measured}"))
}

fn criterion_5() -> Outcome {
    let mut notes = Vec::new();
    for (n, pairs, expected) in [
        (3usize, vec![(3usize, 1usize), (2, 1)], ratio(3, 1)),
        (3, vec![(4, 2), (1, 1)], ratio(3, 2)),
    ] {
        let inst = gen_esw_multi(n, &pairs).map_err(err)?;
        let measured = empirical_poc(&inst).map_err(err)?.esw_ratio;
        ensure(measured == expected, || format!("{pairs:?}: {measured} != {expected}"))?;
        ensure(poc_esw_multi(n as u64, &pairs).map_err(err)? == expected, || "library bound disagrees".into())?;
        notes.push(format!("{pairs:?}={measured}"));
    }
    Ok(notes.join(" "))
}

/// Fuzz corpus with, per instance, its oracle report.
struct Corpus {
    items: Vec<(Instance, cardfair::oracle::PocReport)>,
}

fn corpus() -> Result<Corpus, String> {
    let items = fuzz::corpus(CORPUS_SEED, CORPUS_SIZE)
        .into_iter()
        .map(|inst| {
            let r = empirical_poc(&inst).map_err(err)?;
            Ok((inst, r))
        })
        .collect::<Result<_, String>>()?;
    Ok(Corpus { items })
}

fn criterion_6(c: &Corpus, start: Instant) -> Outcome {
    let mut checks = 0usize;
    for (idx, (inst, r)) in c.items.iter().enumerate() {
        let n = inst.n() as u64;
        let pairs = inst.pairs();
        let fail = |what: &str| format!("instance {idx}: {what} (usw {} esw {})", r.usw_ratio, r.esw_ratio);
        if inst.h() == 1 {
            let (m, k) = (pairs[0].0 as u64, pairs[0].1 as u64);
            ensure(r.usw_ratio.to_f64() <= poc_usw_single(m, k).map_err(err)? + SQRT_TOL, || fail("usw single"))?;
            ensure(r.esw_ratio <= poc_esw_single(m, n, k).map_err(err)?, || fail("esw single"))?;
            checks += 2;
        } else {
            if n == 2 {
                ensure(r.usw_ratio <= poc_usw_two(&pairs).map_err(err)?, || fail("usw two"))?;
                checks += 1;
            }
            ensure(r.usw_ratio <= poc_usw_multi(&pairs).map_err(err)?, || fail("usw multi"))?;
            ensure(r.esw_ratio <= poc_esw_multi(n, &pairs).map_err(err)?, || fail("esw multi"))?;
            checks += 2;
        }
    }
    within(Duration::from_secs(300), start, "fuzz")?;
    Ok(format!("{} instances, {checks} bound checks, {:.2?} with oracle", c.items.len(), start.elapsed()))
}

fn criterion_7(c: &Corpus) -> Outcome {
    for (idx, (inst, r)) in c.items.iter().enumerate() {
        let (alloc, w) = opt_usw_cardinal_matching(inst).map_err(err)?;
        ensure(w == r.best_cardinal_usw, || format!("instance {idx}: matching {w} != oracle {}", r.best_cardinal_usw))?;
        ensure(usw(inst, &alloc).map_err(err)? == w, || format!("instance {idx}: witness value"))?;
        let (v, _) = opt_brute(inst, Objective::Usw, true).map_err(err)?;
        ensure(v == w, || format!("instance {idx}: pruned search {v} != {w}"))?;
    }
    Ok(format!("{} instances agree", c.items.len()))
}

fn criterion_8(c: &Corpus) -> Outcome {
    let mut count = 0;
    for (idx, (inst, r)) in c.items.iter().enumerate().filter(|(_, (i, _))| i.h() == 1) {
        let (m, k) = inst.pairs()[0];
        let (start, opt) = opt_usw_unconstrained(inst);
        ensure(opt == r.opt_usw, || format!("instance {idx}: unconstrained optimum"))?;
        let (end, _) = greedy_reassign(inst, &start, 0).map_err(err)?;
        let got = usw(inst, &end).map_err(err)?.to_f64();
        let need = opt.to_f64() * 2.0 / (1.0 + (1.0 + (m as f64 - 1.0) / k as f64).sqrt()) - SQRT_TOL;
        ensure(got >= need, || format!("instance {idx}: greedy {got} < {need}"))?;
        count += 1;
    }
    Ok(format!("{count} single-category instances"))
}

fn criterion_9() -> Outcome {
    let mut worst = 0f64;
    let mut cells = 0;
    for m in 3..=200u64 {
        for k in 1..=m - 2 {
            let gap = poc_usw_single(m, k).map_err(err)? - poc_usw_single_lower_achieved(m, k).map_err(err)?;
            ensure(gap >= -SQRT_TOL && gap <= 1.0 + SQRT_TOL, || format!("(m={m},k={k}) gap {gap}"))?;
            worst = worst.max(gap);
            cells += 1;
        }
    }
    let table = fig2(50).map_err(err)?;
    let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("fig2_m50.csv");
    let file = std::fs::File::create(&path).map_err(err)?;
    table.write_csv(file).map_err(err)?;
    let mut reader = csv::Reader::from_path(&path).map_err(err)?;
    let row = reader
        .records()
        .map(|r| r.map_err(err))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .find(|r| &r[0] == "7")
        .ok_or("no k=7 row")?;
    let upper: f64 = row[1].parse().map_err(err)?;
    let lower: f64 = row[2].parse().map_err(err)?;
    ensure((upper - 1.914214).abs() < 5e-7 && lower == 1.75, || format!("k=7 row ({upper}, {lower})"))?;
    Ok(format!("{cells} grid cells, max gap {worst:.6}; fig2 k=7 = ({upper}, {lower})"))
}

fn totals(inst: &Instance) -> Vec<Rational> {
    inst.utilities().iter().map(|r| r.iter().sum()).collect()
}

fn monotone(before: &Instance, after: &Instance, what: &str) -> Result<String, String> {
    let r0 = empirical_poc(before).map_err(err)?.usw_ratio;
    let r1 = empirical_poc(after).map_err(err)?.usw_ratio;
    ensure(r1 >= r0, || format!("{what}: ratio fell {r0} -> {r1}"))?;
    ensure(before.categories() == after.categories() && before.n() == after.n(), || {
        format!("{what}: shape changed")
    })?;
    Ok(format!("{what} {r0}->{r1}"))
}

fn criterion_10() -> Outcome {
    let mut notes = Vec::new();

    // merge: agent 0 over the cap in two categories
    let cats = vec![
        CategorySpec::contiguous(0, 0, 3, 2),
        CategorySpec::contiguous(1, 3, 3, 2),
        CategorySpec::contiguous(2, 6, 2, 1),
    ];
    let mut a0 = vec![ratio(1, 6); 6];
    a0.extend([ratio(0, 1), ratio(0, 1)]);
    let mut a1 = vec![ratio(0, 1); 8];
    a1[0] = ratio(1, 12);
    a1[3] = ratio(1, 12);
    a1[6] = ratio(5, 12);
    a1[7] = ratio(5, 12);
    let inst = Instance::new(2, cats, vec![a0, a1], true).map_err(err)?;
    let (opt, _) = opt_usw_unconstrained(&inst);
    let merged = reduce_merge_exceeded(&inst, &opt).map_err(err)?.instance;
    ensure(totals(&merged) == totals(&inst), || "merge changed totals".into())?;
    notes.push(monotone(&inst, &merged, "merge")?);

    // fold then perturb: agent 0 over the cap in C0, earning in C1
    let cats = vec![CategorySpec::contiguous(0, 0, 3, 2), CategorySpec::contiguous(1, 3, 3, 2)];
    let rows = vec![
        vec![ratio(4, 15), ratio(4, 15), ratio(4, 15), ratio(1, 5), ratio(0, 1), ratio(0, 1)],
        vec![ratio(0, 1), ratio(0, 1), ratio(1, 10), ratio(1, 10), ratio(2, 5), ratio(2, 5)],
    ];
    let inst = Instance::new(2, cats, rows, true).map_err(err)?;
    let (opt, _) = opt_usw_unconstrained(&inst);
    let zeroed = reduce_zero_nonexceeded(&inst, &opt).map_err(err)?.instance;
    ensure(totals(&zeroed) == totals(&inst), || "fold changed totals".into())?;
    notes.push(monotone(&inst, &zeroed, "fold")?);
    let eps = default_epsilon(&zeroed).ok_or("no positive utility")?;
    let forced = reduce_force_exceed(&zeroed, &opt, &eps).map_err(err)?.instance;
    ensure(totals(&forced) == totals(&zeroed), || "perturbation changed totals".into())?;
    notes.push(monotone(&zeroed, &forced, "perturb")?);

    // preprocessing, single category
    let rows = vec![
        vec![ratio(1, 3), ratio(1, 3), ratio(1, 3), ratio(0, 1)],
        vec![ratio(1, 10), ratio(1, 10), ratio(1, 10), ratio(7, 10)],
        vec![ratio(1, 5), ratio(1, 5), ratio(1, 5), ratio(2, 5)],
    ];
    let inst = Instance::single_category(3, 2, rows).map_err(err)?;
    let (opt, _) = opt_usw_unconstrained(&inst);
    let pre = preprocess_r_agents(&inst, &opt).map_err(err)?.instance;
    notes.push(monotone(&inst, &pre, "preprocess")?);

    Ok(notes.join(", "))
}

fn run(id: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(msg)
    });
    let took = start.elapsed();
    match outcome {
        Ok(detail) => {
            println!("PASS {id:>2} {name}: {detail} [{took:.2?}]");
            true
        }
        Err(why) => {
            println!("FAIL {id:>2} {name}: {why} [{took:.2?}]");
            false
        }
    }
}

fn main() -> ExitCode {
    let mut ok = true;
    ok &= run(1, "divisible single-category tightness", criterion_1);
    ok &= run(2, "egalitarian single-category tightness", criterion_2);
    ok &= run(3, "two-agent multi-category tightness", criterion_3);
    ok &= run(4, "equal-ratio multi-category tightness", criterion_4);
    ok &= run(5, "egalitarian multi-category tightness", criterion_5);

    let start = Instant::now();
    let corpus = catch_unwind(corpus).unwrap_or_else(|_| Err("corpus construction panicked".into()));
    match corpus {
        Ok(c) => {
            ok &= run(6, "upper-bound soundness fuzz", || criterion_6(&c, start));
            ok &= run(7, "matching equals oracle", || criterion_7(&c));
            ok &= run(8, "greedy guarantee", || criterion_8(&c));
        }
        Err(e) => {
            for (id, name) in [(6, "upper-bound soundness fuzz"), (7, "matching equals oracle"), (8, "greedy guarantee")] {
                println!("FAIL {id:>2} {name}: {e}");
            }
            ok = false;
        }
    }

    ok &= run(9, "gap property and fig2 curve", criterion_9);
    ok &= run(10, "reduction monotonicity", criterion_10);
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
