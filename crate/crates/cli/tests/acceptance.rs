//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails if
//! any criterion fails. Run with `--nocapture` to see the report.

use std::collections::{BTreeMap, BTreeSet};
use std::process::Command;
use std::time::{Duration, Instant};

use minocc::bench::{self, BenchConfig, BenchRecord, MinerKind, CSV_HEADER};
use minocc::verify::{self, ConstraintMode, VerifyConfig};
use minocc::{
    dominates, generate_random_sequence, mine, mine_naive, minimal_occurrences, parse_sequence, ConstraintSet,
    MiningParams, MiningResult, Occurrence, Pattern, Threshold, TimedSequence,
};

const GOLDEN_TIME_LIMIT: Duration = Duration::from_secs(1);
const FUZZ_TRIALS: usize = 1000;
const FUZZ_TIME_LIMIT: Duration = Duration::from_secs(300);
const TREND_SEQUENCES: usize = 5;
// Each timing in the constraint trend is the best of this many runs.
const TIMING_REPEATS: usize = 9;
const SCALING_REPS: usize = 3;
const SCALING_MAX_PATTERN_LEN: usize = 4;
const SCALING_TIME_BUDGET_S: &str = "30";
// No per-length mean may fall below this fraction of an earlier one.
const SCALING_DIP_TOLERANCE: f64 = 0.5;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn seq(text: &str) -> TimedSequence {
    parse_sequence(text).unwrap()
}

fn pat(s: &TimedSequence, tokens: &str) -> Pattern {
    let tokens: Vec<String> = tokens.chars().map(String::from).collect();
    let refs: Vec<&str> = tokens.iter().map(String::as_str).collect();
    Pattern::from_tokens(s.alphabet(), &refs).unwrap()
}

fn occs(list: &[&[i64]]) -> Vec<Occurrence> {
    list.iter().map(|o| Occurrence::new(o.to_vec())).collect()
}

fn names(s: &TimedSequence, r: &MiningResult) -> BTreeSet<String> {
    r.patterns.iter().map(|m| m.pattern().tokens(s.alphabet()).concat()).collect()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn golden_frequent_set() -> Check {
    let s = seq("1 a\n2 b c\n3 a b c\n4 c\n5 b c\n");
    let expected: BTreeSet<String> = ["a", "b", "c", "ab", "ac", "bb", "bc", "cb", "cc", "acb", "acc", "bcc", "ccc"]
        .iter()
        .map(|p| p.to_string())
        .collect();
    let params = MiningParams::new(Threshold::Absolute(2));
    let (inc, t_inc) = timed(|| mine(&s, &params).unwrap());
    let (naive, t_naive) = timed(|| mine_naive(&s, &params).unwrap());
    let detail = format!("incremental {t_inc:?}, naive {t_naive:?}");
    if names(&s, &inc) != expected {
        return Err(format!("incremental found {:?}", names(&s, &inc)));
    }
    if names(&s, &naive) != expected {
        return Err(format!("naive found {:?}", names(&s, &naive)));
    }
    if t_inc >= GOLDEN_TIME_LIMIT || t_naive >= GOLDEN_TIME_LIMIT {
        return Err(format!("too slow: {detail}"));
    }
    Ok(format!("13 patterns from both miners; {detail}"))
}

fn golden_occurrence_sets() -> Check {
    let cases: [(&str, &str, Vec<Occurrence>); 4] = [
        ("1 a\n2 a\n3 a\n4 a\n", "aa", occs(&[&[1, 2], &[2, 3], &[3, 4]])),
        ("1 a\n2 a\n3 a\n4 a\n", "aaa", occs(&[&[1, 2, 3], &[2, 3, 4]])),
        ("1 a\n2 b c\n3 a c\n4 c\n5 d\n", "abc", occs(&[&[1, 2, 3]])),
        ("1 a\n2 b\n3 a\n4 b\n", "ab", occs(&[&[1, 2], &[3, 4]])),
    ];
    let c = ConstraintSet::default();
    let params = MiningParams::new(Threshold::Absolute(1));
    for (text, p, expected) in &cases {
        let s = seq(text);
        let p = pat(&s, p);
        let oracle = minimal_occurrences(&p, &s, &c).map_err(|e| e.to_string())?;
        let inc = mine(&s, &params).map_err(|e| e.to_string())?;
        let naive = mine_naive(&s, &params).map_err(|e| e.to_string())?;
        let got = [
            ("oracle", Some(oracle.occurrences())),
            ("incremental", inc.get(&p).map(|m| m.occurrences())),
            ("naive", naive.get(&p).map(|m| m.occurrences())),
        ];
        for (who, occ) in got {
            if occ != Some(expected.as_slice()) {
                return Err(format!("{who} on {p:?}: {occ:?}, expected {expected:?}"));
            }
        }
    }
    Ok("aa, aaa on aaaa; abc on a(bc)(ac)cd; ab on abab".into())
}

fn fuzz_config() -> VerifyConfig {
    VerifyConfig {
        trials: FUZZ_TRIALS,
        mode: ConstraintMode::Mixed,
        ..VerifyConfig::default()
    }
}

fn oracle_equivalence() -> Check {
    let (report, elapsed) = timed(|| verify::run(&fuzz_config()));
    let report = report.map_err(|e| e.to_string())?;
    if let Some(cx) = &report.counterexample {
        return Err(format!("trial {} failed: {}", cx.trial, cx.problem));
    }
    if report.trials < FUZZ_TRIALS {
        return Err(format!("only {} trials ran", report.trials));
    }
    if elapsed >= FUZZ_TIME_LIMIT {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!(
        "{} trials, {} patterns, {} occurrences, 0 mismatches, {:.1?}",
        report.trials, report.patterns_checked, report.occurrences_checked, elapsed
    ))
}

fn anti_monotonicity() -> Check {
    let cfg = fuzz_config();
    let (mut trials, mut checked) = (0, 0);
    for i in 0..cfg.trials {
        let case = verify::random_case(&cfg, i);
        if case.params.constraints != ConstraintSet::default() {
            continue;
        }
        trials += 1;
        let res = mine(&case.sequence, &case.params).map_err(|e| e.to_string())?;
        for set in &res.patterns {
            let Some(prefix) = set.pattern().prefix() else { continue };
            checked += 1;
            match res.support(&prefix) {
                Some(ps) if ps >= set.support() => {}
                other => {
                    return Err(format!(
                        "trial {i}: {:?} has support {} but its prefix has {other:?}",
                        set.pattern(),
                        set.support()
                    ))
                }
            }
        }
    }
    if trials == 0 {
        return Err("no unconstrained trials".into());
    }
    Ok(format!("{trials} unconstrained trials, {checked} prefix pairs, 0 violations"))
}

fn minimality_structure() -> Check {
    let cfg = fuzz_config();
    let mut sets = 0;
    for i in 0..cfg.trials {
        let case = verify::random_case(&cfg, i);
        let inc = mine(&case.sequence, &case.params).map_err(|e| e.to_string())?;
        let naive = mine_naive(&case.sequence, &case.params).map_err(|e| e.to_string())?;
        for set in inc.patterns.iter().chain(&naive.patterns) {
            sets += 1;
            let o = set.occurrences();
            let starts: BTreeSet<_> = o.iter().map(Occurrence::start).collect();
            let ends: BTreeSet<_> = o.iter().map(Occurrence::end).collect();
            if starts.len() != o.len() || ends.len() != o.len() {
                return Err(format!("trial {i}: {:?} repeats a start or end", set.pattern()));
            }
            for t in o {
                for u in o {
                    if dominates(t, u).unwrap() {
                        return Err(format!("trial {i}: {t:?} dominates {u:?} in {:?}", set.pattern()));
                    }
                }
            }
        }
    }
    Ok(format!("{sets} occurrence sets from both miners, 0 violations"))
}

fn incremental_vs_naive() -> Check {
    let cfg = BenchConfig {
        lengths: vec![20],
        reps: TREND_SEQUENCES,
        alphabet: 10,
        threshold: Threshold::Relative(0.10),
        max_pattern_len: 10,
        miners: vec![MinerKind::Incremental, MinerKind::Naive],
        ..BenchConfig::default()
    };
    let rows = bench::run_collect(&cfg).map_err(|e| e.to_string())?;
    if rows.iter().any(|r| r.censored) {
        return Err("a run was censored".into());
    }
    let of = |m: MinerKind| bench::mean_wall_time(rows.iter().filter(|r| r.miner == m)).unwrap();
    let (inc, naive) = (of(MinerKind::Incremental), of(MinerKind::Naive));
    let detail = format!("incremental mean {inc:.6} s, naive mean {naive:.6} s");
    if inc < naive {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn best_time(seq: &TimedSequence, params: &MiningParams) -> (f64, usize) {
    let mut best = f64::INFINITY;
    let mut count = 0;
    for _ in 0..TIMING_REPEATS {
        let (res, t) = timed(|| mine(seq, params).unwrap());
        best = best.min(t.as_secs_f64());
        count = res.len();
    }
    (best, count)
}

fn constraint_speedup() -> Check {
    let free = MiningParams::new(Threshold::Relative(0.10));
    let constrained = free
        .clone()
        .with_constraints(ConstraintSet::default().with_max_gap(7).with_min_gap(1).with_max_duration(20));
    let (mut t_free, mut t_con, mut n_free, mut n_con) = (vec![], vec![], 0, 0);
    for rep in 0..TREND_SEQUENCES {
        let s = generate_random_sequence(70, 7, bench::sequence_seed(0, 70, rep)).unwrap();
        let (t, n) = best_time(&s, &free);
        t_free.push(t);
        n_free += n;
        let (t, n) = best_time(&s, &constrained);
        t_con.push(t);
        n_con += n;
    }
    let (a, b) = (mean(&t_con), mean(&t_free));
    let detail = format!(
        "constrained mean {a:.6} s with {n_con} patterns, unconstrained mean {b:.6} s with {n_free} patterns"
    );
    if a <= b && n_con <= n_free {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scaling_harness() -> Check {
    let out = Command::new(env!("CARGO_BIN_EXE_minocc"))
        .args(["bench", "--lengths", "20..130:10", "--miners", "naive"])
        .args(["--reps", &SCALING_REPS.to_string()])
        .args(["--max-pattern-len", &SCALING_MAX_PATTERN_LEN.to_string()])
        .args(["--time-budget", SCALING_TIME_BUDGET_S])
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("bench exited with {}", out.status));
    }
    let text = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
    if text.lines().next() != Some(CSV_HEADER) {
        return Err("missing or wrong CSV header".into());
    }
    let rows: Vec<BenchRecord> = bench::read_records(text.as_bytes()).map_err(|e| e.to_string())?;
    let lengths: Vec<usize> = (20..=130).step_by(10).collect();
    if rows.len() != lengths.len() * SCALING_REPS || rows.iter().any(|r| r.miner != MinerKind::Naive) {
        return Err(format!("unexpected rows: {}", rows.len()));
    }
    let mut by_len: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in &rows {
        by_len.entry(r.sequence_length).or_default().push(r.wall_time_s);
    }
    if by_len.keys().copied().collect::<Vec<_>>() != lengths {
        return Err("lengths do not match the requested range".into());
    }
    let means: Vec<f64> = by_len.values().map(|v| mean(v)).collect();
    let third = means.len() / 3;
    let (first, last) = (mean(&means[..third]), mean(&means[means.len() - third..]));
    let censored = rows.iter().filter(|r| r.censored).count();
    let detail = format!(
        "{} rows, {censored} censored, first-third mean {first:.4} s, last-third mean {last:.4} s",
        rows.len()
    );
    if last <= first {
        return Err(detail);
    }
    let mut running_max: f64 = 0.0;
    for (len, m) in lengths.iter().zip(&means) {
        if *m < SCALING_DIP_TOLERANCE * running_max {
            return Err(format!("{detail}; mean at length {len} dips to {m:.4} s"));
        }
        running_max = running_max.max(*m);
    }
    Ok(detail)
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 8] = [
        ("golden frequent set", golden_frequent_set),
        ("golden occurrence sets", golden_occurrence_sets),
        ("oracle equivalence fuzzing", oracle_equivalence),
        ("backward anti-monotonicity", anti_monotonicity),
        ("minimality structure", minimality_structure),
        ("incremental vs naive trend", incremental_vs_naive),
        ("constraint speedup trend", constraint_speedup),
        ("scaling harness", scaling_harness),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(detail) => {
                println!("FAIL {}. {name}: {detail}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
