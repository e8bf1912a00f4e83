//! Acceptance criteria 1 to 7, one pass/fail line each.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

mod common;

use std::sync::Arc;
use std::time::Instant;

use automaton_cbls::baseline::SoftRegularState;
use automaton_cbls::bench::{run_bench, summarize, BenchConfig, Summary};
use automaton_cbls::layered::{unroll, LayeredGraph};
use automaton_cbls::model::{
    rotating_instance, st_louis_instance, ConstraintState, Model, ModelState, ViolationMode, DAYS,
};
use automaton_cbls::search::{InitMode, SearchParams};
use automaton_cbls::segviol::SegmentationState;
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let a = fig1();
    let g = unroll(&a, 6).unwrap();
    let total = g.count_paths();
    // layer 4 of the figure is 0-based layer 3; states 3 and 5 are nodes 2 and 4
    let spot = (g.paths(3, 2).clone(), g.paths(3, 4).clone());
    let accepted = all_words(3, 6).filter(|w| accepts_from(&a, 0, w)).count();
    let mut per_node_ok = true;
    for layer in 0..=6 {
        for node in g.nodes(layer) {
            let completions = all_words(3, 6 - layer)
                .filter(|w| accepts_from(&a, node, w))
                .count();
            per_node_ok &= *g.paths(layer, node) == BigUint::from(completions);
        }
    }
    let elapsed = started.elapsed();
    let pass = total == BigUint::from(42u32)
        && spot == (BigUint::from(4u32), BigUint::from(2u32))
        && accepted == 42
        && per_node_ok
        && elapsed.as_secs_f64() < 1.0;
    outcome(
        pass,
        format!(
            "paths {total}, layer-4 counts {}/{}, enumeration {accepted} of 729, per-node counts {}, {:.1} ms",
            spot.0,
            spot.1,
            if per_node_ok { "match" } else { "differ" },
            elapsed.as_secs_f64() * 1e3
        ),
    )
}

fn fig2() -> Arc<LayeredGraph> {
    Arc::new(unroll(&fig1(), 6).unwrap())
}

fn criterion_2() -> Outcome {
    let g = fig2();
    let al = g.alphabet().clone();
    // draw 0 takes the first successor in target order, which is state 3
    let st0 = SegmentationState::with_tape(g.clone(), al.parse_word("xedexx").unwrap(), &[0; 6]);
    let seg_ok = st0.segments() == [(0, 1), (3, 5)] && st0.path()[3] == 2;
    let v0 = st0.violation();
    let mut with_e = st0.clone();
    with_e.set_value(2, al.symbol("e").unwrap());
    with_e.calc_segment(2);
    let mut with_x = st0.clone();
    with_x.set_value(2, al.symbol("x").unwrap());
    with_x.calc_segment(2);
    let (ve, vx) = (with_e.violation(), with_x.violation());
    outcome(
        v0 == 1 && seg_ok && ve == 3 && vx == 0,
        format!(
            "violation {v0}, segments {:?}, V3=e gives {ve}, V3=x gives {vx}",
            st0.segments()
        ),
    )
}

fn criterion_3() -> Outcome {
    let g = fig2();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let trials = 100_000;
    let mut to3 = 0usize;
    let mut to5 = 0usize;
    // the choice point: state 4 after <x, e>, facing `d` which it cannot read
    for _ in 0..trials {
        match g.pick_successor(2, 3, rng.gen()) {
            2 => to3 += 1,
            4 => to5 += 1,
            other => panic!("unexpected successor {other}"),
        }
    }
    let f3 = to3 as f64 / trials as f64;
    let f5 = to5 as f64 / trials as f64;
    let pass = (f3 - 4.0 / 6.0).abs() <= 0.01 && (f5 - 2.0 / 6.0).abs() <= 0.01;
    outcome(
        pass,
        format!("{trials} draws: state 3 {f3:.4} (4/6), state 5 {f5:.4} (2/6)"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let cases = 1000;
    let mut failures: Vec<String> = Vec::new();
    let mut counts = [0usize; 5];
    let record = |failures: &mut Vec<String>, tag: &str, ok: bool, what: String| {
        if !ok && failures.len() < 5 {
            failures.push(format!("({tag}) {what}"));
        }
    };

    // (a), (b), (d), (e) on arbitrary automata; (c) on deterministic ones
    while counts.iter().any(|&c| c < cases) {
        let dfa = counts[2] < cases && rng.gen_bool(0.5);
        let a = random_automaton(&mut rng, 5, dfa);
        let n = rng.gen_range(1..=8);
        let Ok(g) = unroll(&a, n) else { continue };
        let g = Arc::new(g);
        let k = a.alphabet().len();
        let w = random_word(&mut rng, k, n);
        let mut st = SegmentationState::new(g.clone(), w.clone(), rng.gen());

        let covered: usize = st.segments().iter().map(|&(s, e)| e - s + 1).sum();
        let summed: usize = st.violations().iter().map(|&v| v as usize).sum();
        record(
            &mut failures,
            "a",
            st.violation() == n - covered && st.violation() == summed,
            format!(
                "violation {} covered {covered} summed {summed}",
                st.violation()
            ),
        );
        counts[0] += 1;

        let hamming = brute_min_hamming(&a, &w).expect("language is not empty");
        record(
            &mut failures,
            "b",
            hamming <= st.violation(),
            format!("min hamming {hamming} > violation {}", st.violation()),
        );
        counts[1] += 1;

        if a.is_deterministic() {
            let accepted = accepts_from(&a, a.start(), &w);
            record(
                &mut failures,
                "c",
                (st.violation() == 0) == accepted,
                format!("violation {} accepted {accepted}", st.violation()),
            );
            counts[2] += 1;
        }

        let s = rng.gen_range(0..n);
        st.set_value(
            s,
            automaton_cbls::automaton::Symbol(rng.gen_range(0..k) as u16),
        );
        st.calc_segment(s);
        let scratch = SegmentationState::with_tape(g.clone(), st.values().to_vec(), st.draws());
        record(
            &mut failures,
            "d",
            scratch.snapshot() == st.snapshot(),
            format!("incremental from {s} differs from scratch"),
        );
        counts[3] += 1;

        let base = SoftRegularState::new(g.clone(), w.clone(), rng.gen());
        record(
            &mut failures,
            "e",
            base.violation() == hamming && base.validate().is_ok(),
            format!("baseline {} vs brute force {hamming}", base.violation()),
        );
        counts[4] += 1;
    }
    let pass = failures.is_empty();
    outcome(
        pass,
        format!(
            "cases a {} b {} c {} d {} e {}{}",
            counts[0],
            counts[1],
            counts[2],
            counts[3],
            counts[4],
            if pass {
                String::new()
            } else {
                format!(", failures: {failures:?}")
            }
        ),
    )
}

fn bench(
    model: &Model,
    mode: ViolationMode,
    init: InitMode,
    runs: usize,
    seed: u64,
) -> (Summary, f64) {
    let cfg = BenchConfig {
        runs,
        base_seed: seed,
        mode,
        params: SearchParams {
            init,
            max_iterations: 1_000_000,
            ..Default::default()
        },
        threads: None,
    };
    let started = Instant::now();
    let records = run_bench(model, &cfg).unwrap();
    (summarize(&records), started.elapsed().as_secs_f64())
}

fn avg_iterations(s: &Summary) -> f64 {
    s.iterations.map_or(f64::NAN, |x| x.avg)
}

fn criterion_5() -> Outcome {
    const TABLE3: [f64; 4] = [11.0, 34.0, 46.0, 72.0];
    let mut pass = true;
    let mut parts = Vec::new();
    for scale in 1..=4 {
        let m = Model::new(rotating_instance(scale), std::path::Path::new(".")).unwrap();
        let (s, wall) = bench(&m, ViolationMode::Segment, InitMode::Tiled, 100, 0);
        let avg = avg_iterations(&s);
        let ok = s.solved >= 99 && avg <= 10.0 * TABLE3[scale - 1] && (scale < 4 || wall < 60.0);
        pass &= ok;
        parts.push(format!(
            "tiled {scale}: {}/100, avg it {avg:.1} (limit {}), {wall:.1} s",
            s.solved,
            10.0 * TABLE3[scale - 1]
        ));
    }
    let mut hard: Vec<Model> = (5..=8)
        .map(|i| Model::new(rotating_instance(i), std::path::Path::new(".")).unwrap())
        .collect();
    hard.push(Model::new(st_louis_instance(), std::path::Path::new(".")).unwrap());
    for m in &hard {
        let (s, wall) = bench(m, ViolationMode::Segment, InitMode::Random, 100, 0);
        let ok = s.solved >= 90;
        pass &= ok;
        parts.push(format!(
            "random {}: {}/100, avg it {:.1}, {wall:.1} s",
            m.name(),
            s.solved,
            avg_iterations(&s)
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_6() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for scale in 2..=8 {
        let m = Model::new(rotating_instance(scale), std::path::Path::new(".")).unwrap();
        let (seg, _) = bench(&m, ViolationMode::Segment, InitMode::Tiled, 100, 0);
        let (ham, _) = bench(&m, ViolationMode::Hamming, InitMode::Tiled, 100, 0);
        let t = |s: &Summary| s.time_ms.map_or(f64::NAN, |x| x.avg);
        let faster = t(&seg) < t(&ham);
        let fewer = avg_iterations(&ham) <= avg_iterations(&seg);
        pass &= faster && fewer && seg.solved == 100 && ham.solved == 100;
        parts.push(format!(
            "scale {scale}: time {:.1} vs {:.1} ms [{}], iterations {:.1} vs {:.1} [{}]",
            t(&seg),
            t(&ham),
            if faster { "ok" } else { "FAIL" },
            avg_iterations(&seg),
            avg_iterations(&ham),
            if fewer { "ok" } else { "FAIL" },
        ));
    }
    outcome(pass, format!("segment vs hamming; {}", parts.join("; ")))
}

fn arcs_from_layer(g: &LayeredGraph, s: usize) -> u64 {
    (s..g.n())
        .map(|i| g.nodes(i).map(|f| g.arcs(i, f).len() as u64).sum::<u64>())
        .sum()
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut pass = true;
    let mut per_scale = Vec::new();
    for scale in 1..=4 {
        let mut probes = 0;
        let mut visits_ok = true;
        let mut relax_ok = true;
        let mut visit_sum = 0u64;
        let mut relax_sum = 0u64;
        let mut arcs = 0;
        for mode in [ViolationMode::Segment, ViolationMode::Hamming] {
            let m = Arc::new(
                Model::new(rotating_instance(scale), std::path::Path::new("."))
                    .unwrap()
                    .with_mode(mode),
            );
            let c = &m.constraints()[0];
            arcs = c.graph().num_arcs();
            let len = c.cells().len();
            let mut st = ModelState::new(m.clone(), m.initial_random(&mut rng), rng.gen()).unwrap();
            let mut done = 0;
            while done < 200 {
                let x = rng.gen_range(0..m.num_vars());
                let y = x % DAYS + DAYS * rng.gen_range(0..m.rows());
                if x == y || st.values()[x] == st.values()[y] {
                    continue;
                }
                let s = c
                    .cells()
                    .iter()
                    .position(|&cell| cell == x || cell == y)
                    .unwrap();
                let before = st.effort();
                let probe = st.probe_swap(x, y);
                let after = st.effort();
                match mode {
                    ViolationMode::Segment => {
                        let v = after.visits - before.visits;
                        visits_ok &= v == (len - s) as u64;
                        visit_sum += v;
                    }
                    ViolationMode::Hamming => {
                        let r = after.relaxations - before.relaxations;
                        relax_ok &= r == arcs_from_layer(c.graph(), s);
                        relax_sum += r;
                    }
                }
                if rng.gen_bool(0.5) {
                    st.commit(probe);
                }
                done += 1;
                probes += 1;
            }
            if let ConstraintState::Segment(_) = st.constraint_states()[0] {
                st.validate().unwrap();
            }
        }
        let half = (probes / 2) as f64;
        let mean_visits = visit_sum as f64 / half;
        let mean_relax = relax_sum as f64 / half;
        pass &= visits_ok && relax_ok && mean_relax > mean_visits;
        per_scale.push((scale, arcs, mean_visits, mean_relax, visits_ok, relax_ok));
    }
    // relaxations per probe rise with the arc count of the graph
    let growing = per_scale
        .windows(2)
        .all(|w| w[1].1 > w[0].1 && w[1].3 > w[0].3);
    pass &= growing;
    let text: Vec<String> = per_scale
        .iter()
        .map(|(s, a, mv, mr, v, h)| {
            format!(
                "scale {s}: visits==n-s+1 {v}, relaxations==suffix arcs {h}, {a} arcs, mean visits {mv:.1}, mean relaxations {mr:.1}"
            )
        })
        .collect();
    let text = format!("{}; relaxations grow with arcs {growing}", text.join("; "));
    outcome(pass, text)
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("1 path counts", criterion_1),
        ("2 worked example", criterion_2),
        ("3 sampling law", criterion_3),
        ("4 property suite", criterion_4),
        ("5 end-to-end solves", criterion_5),
        ("6 method comparison", criterion_6),
        ("7 complexity counters", criterion_7),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let started = Instant::now();
        let o = check();
        println!(
            "criterion {name}: {} ({:.1} s) {}",
            if o.pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
