//! Acceptance suite: one test per criterion, exercising the whole stack at
//! desk scale with exact assertions. Run with
//! `cargo test -p tmtime --test acceptance -- --nocapture` for the summary
//! lines.

mod common;

use common::{all_unary_deterministic_q3, fixture, gen_machine, gen_word, word, GenCfg};
use num_bigint::BigUint;
use tmtime::decide::{
    bounds, crossing_budget, crs_set, decide, find_violation, multiplicity_bound_holds,
    verify_witness, DecideOptions, SearchStrategy, Verdict, Witness,
};
use tmtime::gadgets::{
    divisibility_machine, phase1_machine, rejection_gadget, stepcount_gadget, GadgetSpec,
};
use tmtime::machine::{canonically_equal, parse_machine, OneTapeNTM};
use tmtime::parts::cut_paste_check;
use tmtime::rng::SplitMix64;
use tmtime::sim::{
    brute_force_runs_in_time, check_input, crossing_sequences_upto, enumerate_computations,
    words_of_length,
};

#[test]
fn criterion_01_crossing_identity() {
    let mut rng = SplitMix64::new(0x01);
    let mut pairs = 0u64;
    let mut halted_total = 0u64;
    while pairs < 500 {
        let q = 3 + (rng.below(3)) as u16; // q in 3..=5
        let m = gen_machine(&mut rng, &GenCfg { q, ..GenCfg::default() });
        let w = gen_word(&mut rng, &m, 6);
        pairs += 1;
        for comp in enumerate_computations(&m, &w, 32).unwrap().take(64) {
            if !comp.halted {
                continue;
            }
            halted_total += 1;
            let map =
                crossing_sequences_upto(&m, &comp.input, &comp.choices, comp.steps()).unwrap();
            let total: u64 = map.values().map(|v| v.len() as u64).sum();
            assert_eq!(
                total,
                comp.steps(),
                "crossing identity failed on a halted computation"
            );
        }
    }
    assert!(halted_total >= 500, "only {halted_total} halted computations");
    println!("criterion 1: crossing identity exact on {pairs} pairs ({halted_total} halted computations)");
}

#[test]
fn criterion_02_splice_identity() {
    // hand-traced sweeps first
    let sweep = fixture("m_sweep.tm");
    let one = word(&sweep, "1");
    let two = word(&sweep, "11");
    let comp = enumerate_computations(&sweep, &word(&sweep, "111"), 20)
        .unwrap()
        .next()
        .unwrap();
    assert_eq!(
        cut_paste_check(&sweep, &one, &one, &one, &comp).unwrap(),
        (4, 1, 3)
    );
    let comp = enumerate_computations(&sweep, &word(&sweep, "1111"), 20)
        .unwrap()
        .next()
        .unwrap();
    assert_eq!(
        cut_paste_check(&sweep, &one, &two, &one, &comp).unwrap(),
        (5, 2, 3)
    );

    let mut rng = SplitMix64::new(0x02);
    let mut instances = 0u64;
    let mut attempts = 0u64;
    while instances < 200 {
        attempts += 1;
        assert!(attempts < 60_000, "splice corpus generation stalled");
        let m = gen_machine(&mut rng, &GenCfg::default());
        let w1 = gen_word(&mut rng, &m, 2);
        let wp = gen_word(&mut rng, &m, 2);
        let w2 = gen_word(&mut rng, &m, 2);
        if w1.is_empty() || wp.is_empty() {
            continue;
        }
        let input: Vec<_> = w1.iter().chain(wp.iter()).chain(w2.iter()).copied().collect();
        for comp in enumerate_computations(&m, &input, 24).unwrap().take(16) {
            if !comp.halted {
                continue;
            }
            match cut_paste_check(&m, &w1, &wp, &w2, &comp) {
                Ok((full, part, cut)) => {
                    assert_eq!(cut, full - part);
                    instances += 1;
                }
                Err(_) => {} // boundaries disagree; not an instance
            }
        }
    }
    println!("criterion 2: splice identity exact on {instances} instances");
}

#[test]
fn criterion_03_crossing_budget_closed_form() {
    // crossing_budget asserts the closed form and the cap internally; this
    // re-checks both explicitly over the whole required range
    for q in 2..=10u64 {
        for c in 1..=8u32 {
            let direct = crossing_budget(q, c);
            let qb = BigUint::from(q);
            let numer = qb.pow(c + 1) + BigUint::from(c as u64)
                - BigUint::from(c as u64 + 1) * &qb;
            let denom = (&qb - 1u32) * (&qb - 1u32);
            assert_eq!(direct, numer / denom, "closed form at q={q}, C={c}");
            assert!(
                direct <= BigUint::from(4u32) * qb.pow(c - 1),
                "cap at q={q}, C={c}"
            );
        }
    }
    assert_eq!(crossing_budget(2, 2), BigUint::from(4u32));
    assert_eq!(crossing_budget(3, 2), BigUint::from(5u32));
    println!("criterion 3: crossing budget closed form exact for q in 2..=10, C in 1..=8");
}

#[test]
fn criterion_04_multiplicity_bound() {
    let mut rng = SplitMix64::new(0x04);
    let mut samples = 0u64;
    while samples < 1000 {
        let q = 3 + rng.below(2) as u16;
        let m = gen_machine(&mut rng, &GenCfg { q, ..GenCfg::default() });
        let w = gen_word(&mut rng, &m, 5);
        let c = 1 + rng.below(3); // C in 1..=3
        let d = rng.below(4); // D in 0..=3
        let cap = c * w.len() as u64 + d;
        let comp = match enumerate_computations(&m, &w, cap).unwrap().next() {
            Some(c) => c,
            None => continue,
        };
        let t = rng.range_inclusive(0, comp.steps().min(cap));
        assert!(
            multiplicity_bound_holds(&m, &comp, t, c, d).unwrap(),
            "multiplicity bound failed"
        );
        samples += 1;
    }
    println!("criterion 4: multiplicity bound held on {samples} samples");
}

#[test]
fn criterion_05_witness_soundness() {
    let mut rng = SplitMix64::new(0x05);
    let mut machines: Vec<OneTapeNTM> = (0..56)
        .map(|_| {
            let q = 3 + rng.below(2) as u16;
            gen_machine(&mut rng, &GenCfg { q, ..GenCfg::default() })
        })
        .collect();
    // a quadratic wiper: long finite part computations surface part witnesses
    machines.push(
        parse_machine(
            "ntm v1\ninput 0 1\ntape 0 1 _\nblank _\nstart f\naccept a\nreject r\n\
             f 0 -> f 0 R\n\
             f 1 -> b 0 L\n\
             f _ -> a _ L\n\
             b 0 -> b 0 L\n\
             b 1 -> b 1 L\n\
             b _ -> f _ R\n",
        )
        .unwrap(),
    );
    let opts = DecideOptions {
        bound_override: Some((4, 4)),
        work_budget: 40_000_000,
        ..DecideOptions::default()
    };
    let mut verdicts = 0u64;
    let mut direct = 0u64;
    let mut part = 0u64;
    let mut expanded = 0u64;
    let mut search_hits = 0u64;
    for m in &machines {
        for c in [1u64, 2, 3] {
            for d in [0u64, 1, 3] {
                let rep = decide(m, c, d, &opts).expect("decide within budget");
                verdicts += 1;
                if rep.verdict == Verdict::Violates {
                    let w = rep.witness.as_ref().expect("violates carries a witness");
                    verify_witness(m, c, d, w).expect("witness must replay");
                    match w {
                        Witness::Direct(_) => direct += 1,
                        Witness::Part(pw) => {
                            part += 1;
                            if pw.expansion.is_some() {
                                expanded += 1;
                            }
                        }
                    }
                }
                if let Some(w) =
                    find_violation(m, c, d, SearchStrategy::Exhaustive, 30_000, 0, Some((4, 4)))
                        .unwrap()
                {
                    verify_witness(m, c, d, &w).expect("search witness must replay");
                    search_hits += 1;
                    // consistency: a found violation implies the verdict
                    assert_eq!(rep.verdict, Verdict::Violates);
                }
            }
        }
    }
    assert!(machines.len() >= 50);
    println!(
        "criterion 5: {} verdicts over {} machines, {direct} direct + {part} part witnesses \
         ({expanded} expanded), {search_hits} search hits, all replayed",
        verdicts,
        machines.len()
    );
}

#[test]
fn criterion_06_exactness_on_unary_corpus() {
    let corpus = all_unary_deterministic_q3();
    let mut checked = 0u64;
    for (c, d) in [(1u64, 0u64), (1, 1), (2, 1)] {
        for m in &corpus {
            let rep = decide(
                m,
                c,
                d,
                &DecideOptions {
                    bound_override: Some((6, 6)),
                    ..DecideOptions::default()
                },
            )
            .expect("decide within budget");
            let horizon = 6 + (c * 6 + d) * 6; // expansion length at the override
            let brute = brute_force_runs_in_time(m, c, d, horizon as usize).unwrap();
            assert_eq!(
                rep.verdict == Verdict::Violates,
                brute.is_some(),
                "disagreement at C={c} D={d} on machine:\n{}",
                m.to_text()
            );
            checked += 1;
        }
    }
    println!("criterion 6: decide agrees with brute force on {checked} unary instances");
}

#[test]
fn criterion_07_bounds_arithmetic() {
    let b = bounds(2, 2, 1, None).unwrap();
    assert_eq!(b.ell, BigUint::from(33u32));
    assert_eq!(b.r, BigUint::from(49u32));

    let b = bounds(50, 100, 1, None).unwrap();
    // independent route: repeated multiplication
    let mut p = BigUint::from(1u32);
    for _ in 0..100 {
        p *= 50u32;
    }
    assert_eq!(b.ell, BigUint::from(1u32) + BigUint::from(8u32) * &p);
    assert_eq!(b.r, BigUint::from(1u32) + BigUint::from(12u32) * &p);
    assert_eq!(b.ell.to_string().len(), 171);
    println!("criterion 7: bounds arithmetic exact, ell(50,100,1) has 171 digits");
}

#[test]
fn criterion_08_codec() {
    let mut rng = SplitMix64::new(0x08);
    let mut count = 0u64;
    let mut machines = Vec::new();
    while count < 200 {
        let q = 3 + rng.below(4) as u16;
        let m = gen_machine(&mut rng, &GenCfg { q, ..GenCfg::default() });
        let code = tmtime::codec::encode(&m).unwrap();
        // prefix shape: at least one zero, then a one
        assert_eq!(code.bit(0), Some(false));
        assert!(code.bits().iter().any(|&b| b));
        // round trip and padding invariance
        let back = tmtime::codec::decode(&code).unwrap();
        assert!(canonically_equal(&m, &back));
        let padded = code.pad_front(1 + (rng.below(40) as usize));
        assert!(canonically_equal(&m, &tmtime::codec::decode(&padded).unwrap()));
        machines.push((m, code));
        count += 1;
    }
    // composition codes decode to the composed machine
    for pair in machines.chunks(2).take(40) {
        if pair.len() < 2 {
            break;
        }
        let (m1, c1) = &pair[0];
        let (m2, c2) = &pair[1];
        let tuple = tmtime::codec::encode_composition(&[c1.clone(), c2.clone()]).unwrap();
        assert_eq!(tuple.bit(0), Some(false));
        let decoded = tmtime::codec::decode(&tuple).unwrap();
        let composed = tmtime::machine::compose(m1, m2).unwrap();
        assert!(canonically_equal(&decoded, &composed));
    }
    println!("criterion 8: codec round trip and padding invariance on {count} machines");
}

#[test]
fn criterion_09_gadgets() {
    // divisibility machines are exact for p in {2,3,5} on all lengths <= 4p
    for p in [2u64, 3, 5] {
        let m = divisibility_machine(p).unwrap();
        for n in 0..=(4 * p) {
            let w: Vec<_> = words_of_length(&m, n as usize).next().unwrap();
            let mut accepted = false;
            for comp in enumerate_computations(&m, &w, n + 2).unwrap() {
                assert!(comp.halted);
                accepted |= comp.final_config.state == m.accept_id();
            }
            assert_eq!(accepted, n % p == 0, "p={p}, n={n}");
        }
    }

    // behavioral biconditional on five tiny constructions
    let acc = fixture("m_acc.tm");
    let lp = fixture("m_loop.tm");
    let rej = parse_machine(
        "ntm v1\ninput 0 1\ntape 0 1 _\nblank _\nstart s\naccept a\nreject r\n\
         s 0 -> r 0 R\ns 1 -> r 1 R\ns _ -> r _ R\n",
    )
    .unwrap();
    struct Case<'a> {
        m: &'a OneTapeNTM,
        input: &'a str,
        mode: &'a str,
        c: u64,
        expect_runs: bool,
    }
    // nondeterministic subjects: one branch accepts / one branch loops
    let nd_accepts = parse_machine(
        "ntm v1\ninput 0 1\ntape 0 1 _\nblank _\nstart s\naccept a\nreject r\n\
         s 1 -> a 1 R\n\
         s 1 -> r 1 R\n\
         s 0 -> r 0 R\n\
         s _ -> r _ R\n",
    )
    .unwrap();
    let nd_slow = parse_machine(
        "ntm v1\ninput 0 1\ntape 0 1 _\nblank _\nstart s\naccept a\nreject r\n\
         s 1 -> a 1 R\n\
         s 1 -> s 1 L\n\
         s 0 -> a 0 R\n\
         s _ -> s _ R\n",
    )
    .unwrap();
    let cases = [
        Case { m: &acc, input: "1", mode: "reject", c: 2, expect_runs: false },
        Case { m: &rej, input: "1", mode: "reject", c: 2, expect_runs: true },
        Case { m: &rej, input: "11", mode: "reject", c: 3, expect_runs: true },
        // some branch accepts, so the rejection gadget must overrun
        Case { m: &nd_accepts, input: "1", mode: "reject", c: 2, expect_runs: false },
        Case { m: &lp, input: "1", mode: "count", c: 2, expect_runs: false },
        Case { m: &acc, input: "1", mode: "count", c: 2, expect_runs: true },
        // some branch exceeds T(1) = 2 steps, so the counter gadget overruns
        Case { m: &nd_slow, input: "1", mode: "count", c: 2, expect_runs: false },
    ];
    let mut built = 0;
    for case in &cases {
        let spec = GadgetSpec::new(1, 1, case.c, 1).unwrap();
        let w = case.m.parse_input_word(case.input).unwrap();
        let (g, man) = match case.mode {
            "reject" => rejection_gadget(case.m, &w, &spec).unwrap(),
            _ => stepcount_gadget(case.m, &w, &spec).unwrap(),
        };
        for mult in [1u64, 2] {
            let len = (man.stride * mult) as usize;
            for input in words_of_length(&g, len).take(2) {
                let v = check_input(&g, &input, case.c, 1).unwrap();
                assert_eq!(
                    v.is_none(),
                    case.expect_runs,
                    "{} gadget at length {len}",
                    case.mode
                );
            }
        }
        built += 1;
    }

    // phase-1 step counts stay at or below (C-1)n + 1 on accepted lengths
    for primes in [vec![2u64], vec![2, 3], vec![2, 3, 5]] {
        let passes = primes.len() as u64;
        let stride: u64 = primes.iter().product();
        let f = phase1_machine(&primes, true).unwrap();
        for mult in [1u64, 2] {
            let n = (stride * mult) as usize;
            let w: Vec<_> = words_of_length(&f, n).next().unwrap();
            let comp = enumerate_computations(&f, &w, 100_000)
                .unwrap()
                .next()
                .unwrap();
            assert!(comp.halted && comp.final_config.state == f.accept_id());
            assert!(
                comp.steps() <= passes * n as u64 + 1,
                "filter on n={n}: {} > {}",
                comp.steps(),
                passes * n as u64 + 1
            );
        }
    }
    println!("criterion 9: divisibility exact, {built} gadget biconditionals hold, filter within budget");
}

#[test]
fn criterion_10_known_machine_verdicts() {
    let over = |l, r| DecideOptions {
        bound_override: Some((l, r)),
        ..DecideOptions::default()
    };
    // M_ACC runs in 2n+1
    let acc = fixture("m_acc.tm");
    let rep = decide(&acc, 2, 1, &over(4, 4)).unwrap();
    assert_eq!(rep.verdict, Verdict::Runs);
    assert!(brute_force_runs_in_time(&acc, 2, 1, 8).unwrap().is_none());

    // M_SWEEP runs in n+1
    let sweep = fixture("m_sweep.tm");
    let rep = decide(&sweep, 1, 1, &over(4, 4)).unwrap();
    assert_eq!(rep.verdict, Verdict::Runs);
    assert!(brute_force_runs_in_time(&sweep, 1, 1, 8).unwrap().is_none());

    // M_LOOP violates every tested bound
    let lp = fixture("m_loop.tm");
    for c in [1u64, 2, 3] {
        for d in [0u64, 1, 3] {
            let rep = decide(&lp, c, d, &over(4, 4)).unwrap();
            assert_eq!(rep.verdict, Verdict::Violates, "loop at C={c} D={d}");
            verify_witness(&lp, c, d, rep.witness.as_ref().unwrap()).unwrap();
        }
    }

    // M_DOUBLE runs in 2n+2 and 2n+3 but not n+3
    let dbl = fixture("m_double.tm");
    for d in [2u64, 3] {
        let rep = decide(&dbl, 2, d, &over(4, 4)).unwrap();
        assert_eq!(rep.verdict, Verdict::Runs, "double at D={d}");
        assert!(brute_force_runs_in_time(&dbl, 2, d, 8).unwrap().is_none());
    }
    let rep = decide(&dbl, 1, 3, &over(4, 4)).unwrap();
    assert_eq!(rep.verdict, Verdict::Violates);
    match rep.witness.as_ref().unwrap() {
        Witness::Direct(v) => {
            assert_eq!((v.input.len(), v.steps, v.bound), (2, 6, 5));
        }
        other => panic!("expected a direct witness, got {other:?}"),
    }
    println!("criterion 10: all known-machine verdicts match hand analysis");
}

/// End-to-end coverage of the part-witness path, outside the criterion-5
/// corpus (q = 8): short inputs all meet n+1, but the crossing state entered
/// after reading a 1 pumps forever on a part of four zeros, so condition (b)
/// fires with an unbounded part time and the witness expands into a concrete
/// input that overruns its bound.
#[test]
fn part_witness_end_to_end() {
    let pump = parse_machine(
        "ntm v1\ninput 0 1\ntape 0 1 _\nblank _\nstart s\naccept a\nreject r\n\
         s 1 -> u0 1 R\n\
         s 0 -> a 0 R\n\
         s _ -> a _ R\n\
         u0 0 -> u1 0 R\n\
         u0 1 -> a 1 R\n\
         u0 _ -> a _ R\n\
         u1 0 -> u2 0 R\n\
         u1 1 -> a 1 R\n\
         u1 _ -> a _ R\n\
         u2 0 -> u3 0 R\n\
         u2 1 -> a 1 R\n\
         u2 _ -> a _ R\n\
         u3 0 -> v 0 L\n\
         u3 0 -> u0 0 R\n\
         u3 1 -> a 1 R\n\
         u3 _ -> a _ R\n\
         v 0 -> u3 0 R\n\
         v 1 -> a 1 R\n\
         v _ -> a _ R\n",
    )
    .unwrap();
    // every input of length at most 4 stays within n+1 steps
    assert!(brute_force_runs_in_time(&pump, 1, 1, 4).unwrap().is_none());
    let rep = decide(
        &pump,
        1,
        1,
        &DecideOptions {
            bound_override: Some((4, 4)),
            ..DecideOptions::default()
        },
    )
    .unwrap();
    assert_eq!(rep.verdict, Verdict::Violates);
    let w = rep.witness.as_ref().unwrap();
    match w {
        Witness::Part(pw) => {
            assert_eq!(pump.word_string(&pw.part_word), "0000");
            assert_eq!(pw.entry.crs.display(&pump), "(u0)");
            assert_eq!(pw.part_time, tmtime::parts::PartTime::Unbounded);
            let exp = pw.expansion.as_ref().expect("expansion fits the cap");
            assert_eq!(exp.exponent, 1 * 4 + 1); // C*r_eff + D
            assert!(exp.steps > exp.bound);
        }
        other => panic!("expected a part witness, got {other:?}"),
    }
    verify_witness(&pump, 1, 1, w).unwrap();
    // the expanded input really is a violation, independently of the witness
    let exp = match w {
        Witness::Part(pw) => pw.expansion.as_ref().unwrap(),
        _ => unreachable!(),
    };
    assert!(check_input(&pump, &exp.input, 1, 1).unwrap().is_some());
}

/// With C = 0 the default bounds ell = D+8 and r = D+12 are small enough to
/// run unmodified, so the verdict is exact and must agree with brute force
/// out to twice the input bound.
#[test]
fn exactness_at_default_bounds_for_constant_bounds() {
    let corpus = all_unary_deterministic_q3();
    let mut runs = 0u64;
    for d in [0u64, 1, 2] {
        for m in &corpus {
            let rep = decide(m, 0, d, &DecideOptions::default()).expect("default bounds feasible");
            assert!(rep.exact);
            let brute = brute_force_runs_in_time(m, 0, d, 2 * (d as usize + 8)).unwrap();
            assert_eq!(
                rep.verdict == Verdict::Violates,
                brute.is_some(),
                "exactness failed at D={d} on:\n{}",
                m.to_text()
            );
            runs += 1;
        }
    }
    println!("default-bounds exactness: {runs} instances agree with brute force");
}

#[test]
fn crs_set_matches_module_examples() {
    // sanity companions to the acceptance criteria, pinned from hand traces
    let acc = fixture("m_acc.tm");
    let entries = crs_set(&acc, 1, 2, 1).unwrap();
    let contents: Vec<String> = entries.iter().map(|e| e.crs.display(&acc)).collect();
    assert_eq!(contents, ["()", "(a)"]);

    let sweep = fixture("m_sweep.tm");
    let entries = crs_set(&sweep, 2, 2, 1).unwrap();
    let mut contents: Vec<String> = entries.iter().map(|e| e.crs.display(&sweep)).collect();
    contents.sort();
    assert_eq!(contents, ["()", "(s)", "(s,a)"]);
}
