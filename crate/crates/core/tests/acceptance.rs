//! Acceptance suite. Prints one line per criterion and exits nonzero if any fails.
//!
//! Run with `cargo test -p nugget-core --test acceptance`.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{fixture, oracle, random_annotation, random_config, random_table, table_scorer, CountingScorer, CASE_STUDY};
use nugget_core::engine::evaluate_turn;
use nugget_core::io::{load_annotation, render_report, EvaluationReport, ReportFormat};
use nugget_core::model::{act_catalog, validate_annotation, validate_config, AnnotatedTurn, CandidateSet, ScoringConfig};
use nugget_core::perturbation::{enumerate_perturbations, PerturbationKind};
use nugget_core::scorer::{cached, ConstantScorer, ExecScorer, LengthScorer, Scorer, TableScorer};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let started = Instant::now();
    let mut nuggets = 0;
    for case in 0..1000 {
        let (turn, sets) = random_annotation(&mut rng, case);
        let cfg = random_config(&mut rng);
        let table = random_table(&mut rng, &turn, &sets, -1.0, 2.0);
        let ev = evaluate_turn(&turn, &sets, &cfg, &table_scorer(&table)).map_err(|e| format!("case {case}: {e}"))?;
        let expected = oracle(&turn, &sets, &cfg, &|t| table[t]);
        ensure!(ev.breakdowns.len() == expected.len(), "case {case}: breakdown count");
        for (b, o) in ev.breakdowns.iter().zip(&expected) {
            ensure!(b.nugget_id == o.id, "case {case}: order {} vs {}", b.nugget_id, o.id);
            ensure!((b.ns - o.ns).abs() <= 1e-9, "case {case} {}: ns {} vs {}", o.id, b.ns, o.ns);
            ensure!((b.d_phi - o.d_phi).abs() <= 1e-9, "case {case} {}: d_phi", o.id);
            nuggets += 1;
        }
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!("1000 instances, {nuggets} nuggets, {elapsed:.2?}"))
}

fn constant_fixed_point() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let constants = [0.0, 1.0, -1.0, 0.5, 1e-300, -3.75, 1e6, std::f64::consts::PI];
    let mut checked = 0;
    for case in 0..200 {
        let c = if case < constants.len() { constants[case] } else { rng.gen_range(-100.0..100.0) };
        let (turn, sets) = random_annotation(&mut rng, case);
        let cfg = random_config(&mut rng);
        let ev = evaluate_turn(&turn, &sets, &cfg, &ConstantScorer::new(c).unwrap()).map_err(|e| e.to_string())?;
        for b in &ev.breakdowns {
            ensure!(b.d_phi == 0.0, "c={c}: d_phi {}", b.d_phi);
            ensure!(b.md_diff.unwrap_or(0.0) == 0.0, "c={c}: md_diff {:?}", b.md_diff);
            ensure!(b.md_same.unwrap_or(0.0) == 0.0, "c={c}: md_same {:?}", b.md_same);
            ensure!(b.ns == 0.5, "c={c}: ns {}", b.ns);
            checked += 1;
        }
    }
    Ok(format!("{checked} breakdowns at NS = 0.5"))
}

fn case_study_replay() -> Outcome {
    let (turn, sets) = load_annotation(&fixture("case_study.json")).map_err(|e| e.to_string())?;
    ensure!(turn.nuggets.len() == 5, "nugget count {}", turn.nuggets.len());
    let first = sets.iter().find(|s| s.nugget_id == "n1").ok_or("no candidates for n1")?;
    ensure!(first.diff_candidates.len() == 8 && first.same_candidates.len() == 7, "n1 candidate counts");
    let cfg = ScoringConfig::default();
    ensure!((cfg.k, cfg.l, cfg.w_phi, cfg.w_diff, cfg.w_same) == (5, 3, 10.0, 5.0, 2.0), "default config");
    let scorer = TableScorer::from_file(&fixture("case_study_scores.json")).map_err(|e| e.to_string())?;
    let ev = evaluate_turn(&turn, &sets, &cfg, &scorer).map_err(|e| e.to_string())?;
    let hand = oracle(&turn, &sets, &cfg, &|t| scorer.score(&nugget_core::ScorerRequest::new("o", t)).unwrap());
    for ((b, (id, _, _, _, ns)), o) in ev.breakdowns.iter().zip(CASE_STUDY).zip(&hand) {
        ensure!(b.nugget_id == id, "order");
        ensure!(b.ns > 0.0 && b.ns < 1.0, "{id}: ns {} outside (0,1)", b.ns);
        ensure!((b.ns - ns).abs() <= 1e-9, "{id}: ns {} vs frozen {ns}", b.ns);
        ensure!((b.ns - o.ns).abs() <= 1e-9, "{id}: ns {} vs oracle {}", b.ns, o.ns);
    }
    let report = EvaluationReport::new(&ev, &turn, "2023-11-26T00:00:00Z");
    let md = render_report(&report, ReportFormat::Markdown).map_err(|e| e.to_string())?;
    ensure!(md.contains("| Nugget | NS(T, n) |"), "markdown header missing");
    let rows: Vec<&str> = md.lines().filter(|l| l.starts_with("| ") && !l.starts_with("| Nugget")).collect();
    ensure!(rows.len() == 5, "{} markdown rows", rows.len());
    for (row, (id, _, _, _, ns)) in rows.iter().zip(CASE_STUDY) {
        let cell = row.trim_end_matches('|').rsplit('|').next().unwrap_or("").trim();
        ensure!(cell.len() == 6 && cell.starts_with("0."), "{id}: NS cell {cell:?} is not 4-decimal");
        ensure!(cell == format!("{ns:.4}"), "{id}: NS cell {cell} vs {ns:.4}");
    }
    let summary: Vec<String> = ev.breakdowns.iter().map(|b| format!("{:.4}", b.ns)).collect();
    Ok(format!("NS = [{}]", summary.join(", ")))
}

fn monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let (mut strict, mut weak) = (0, 0);
    for case in 0..200 {
        let (turn, sets) = random_annotation(&mut rng, case);
        let cfg = ScoringConfig::default().with_k_l(rng.gen_range(1..=6), rng.gen_range(1..=6));
        let mut table = random_table(&mut rng, &turn, &sets, 0.0, 1.0);
        let before = evaluate_turn(&turn, &sets, &cfg, &table_scorer(&table)).map_err(|e| e.to_string())?;
        let plan = enumerate_perturbations(&turn, &sets).map_err(|e| e.to_string())?;
        let pool: Vec<_> = if case % 2 == 0 {
            plan.entries.iter().filter(|e| e.kind == PerturbationKind::Deletion).collect()
        } else {
            plan.entries.iter().collect()
        };
        let target = (*pool.choose(&mut rng).unwrap()).clone();
        let bump = rng.gen_range(0.001..0.5);
        *table.get_mut(&target.text).unwrap() += bump;
        let after = evaluate_turn(&turn, &sets, &cfg, &table_scorer(&table)).map_err(|e| e.to_string())?;
        let b = before.breakdown(&target.nugget_id).unwrap().ns;
        let a = after.breakdown(&target.nugget_id).unwrap().ns;
        let label = target.label();
        if target.kind == PerturbationKind::Deletion {
            ensure!(a < b, "case {case} {label}: +{bump} gave ns {b} -> {a}");
            strict += 1;
        } else {
            ensure!(a <= b, "case {case} {label}: +{bump} gave ns {b} -> {a}");
            weak += 1;
        }
        for other in &after.breakdowns {
            if other.nugget_id != target.nugget_id {
                let prev = before.breakdown(&other.nugget_id).unwrap();
                ensure!(other.ns.to_bits() == prev.ns.to_bits(), "case {case}: {label} moved {}", other.nugget_id);
            }
        }
    }
    Ok(format!("{strict} deletion (strict), {weak} substitution (weak)"))
}

fn top_k_insensitivity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let mut checked = 0;
    for case in 0..400 {
        let (turn, mut sets) = random_annotation(&mut rng, case);
        let cfg = random_config(&mut rng);
        let mut table = random_table(&mut rng, &turn, &sets, -1.0, 2.0);
        let before = evaluate_turn(&turn, &sets, &cfg, &table_scorer(&table)).map_err(|e| e.to_string())?;
        for si in 0..sets.len() {
            let b = before.breakdown(&sets[si].nugget_id).unwrap().clone();
            if b.effective_k != cfg.k {
                continue;
            }
            let threshold = b.selected_diff.last().unwrap().score;
            let act = turn.nugget(&b.nugget_id).unwrap().act.clone();
            let mut free: Vec<&str> = act_catalog()
                .iter()
                .map(|a| a.id)
                .filter(|a| *a != act && !sets[si].diff_candidates.iter().any(|d| d.act == *a))
                .collect();
            free.shuffle(&mut rng);
            let extra = rng.gen_range(1..=3).min(free.len());
            if extra == 0 {
                continue;
            }
            for (j, a) in free[..extra].iter().enumerate() {
                sets[si] = sets[si].clone().with_diff(*a, format!("{} below threshold {j}.", b.nugget_id));
            }
            let plan = enumerate_perturbations(&turn, &sets).map_err(|e| e.to_string())?;
            for e in plan.for_nugget(&b.nugget_id).filter(|e| e.kind == PerturbationKind::DiffSubstitution) {
                table.entry(e.text.clone()).or_insert_with(|| threshold - rng.gen_range(1e-9..1.0));
            }
            let after = evaluate_turn(&turn, &sets, &cfg, &table_scorer(&table)).map_err(|e| e.to_string())?;
            let a = after.breakdown(&b.nugget_id).unwrap();
            ensure!(a.effective_k == cfg.k, "case {case}: effective_k changed");
            ensure!(a.md_diff.map(f64::to_bits) == b.md_diff.map(f64::to_bits), "case {case}: md_diff changed");
            ensure!(a.ns.to_bits() == b.ns.to_bits(), "case {case}: ns {} -> {}", b.ns, a.ns);
            checked += 1;
            break;
        }
    }
    ensure!(checked >= 100, "only {checked} applicable instances");
    Ok(format!("{checked} nuggets bit-identical"))
}

fn config_gate() -> Outcome {
    let values = [-1.0, 0.0, 0.5, 1.0, 2.0, 3.0, 5.0, 7.5, 10.0, 20.0];
    let (mut rejected, mut accepted) = (0, 0);
    for &a in &values {
        for &b in &values {
            for &c in &values {
                let report = validate_config(&ScoringConfig::default().with_weights(a, b, c));
                if a >= b && b >= c && c >= 0.0 {
                    ensure!(report.ok, "({a}, {b}, {c}) rejected: {report}");
                    accepted += 1;
                } else {
                    ensure!(!report.ok, "({a}, {b}, {c}) accepted");
                    if !(a >= b && b >= c) {
                        ensure!(report.has_code(nugget_core::model::IssueCode::WeightOrder), "({a}, {b}, {c}) missing WEIGHT_ORDER");
                    }
                    rejected += 1;
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    for _ in 0..10_000 {
        let (a, b, c) = (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
        let ordered = a >= b && b >= c;
        ensure!(validate_config(&ScoringConfig::default().with_weights(a, b, c)).ok == ordered, "({a}, {b}, {c})");
    }
    let paper = ScoringConfig::default().with_weights(10.0, 5.0, 2.0);
    ensure!(validate_config(&paper).ok, "{{10, 5, 2}} rejected");
    for (a, b, c) in [(5.0, 10.0, 2.0), (10.0, 2.0, 5.0), (2.0, 5.0, 10.0), (2.0, 10.0, 5.0), (5.0, 2.0, 10.0)] {
        ensure!(!validate_config(&ScoringConfig::default().with_weights(a, b, c)).ok, "({a}, {b}, {c}) accepted");
    }
    Ok(format!("{rejected} rejected, {accepted} accepted on the grid; 10000 random triples"))
}

/// Random instance with two identical adjacent nuggets and a same candidate
/// repeating a diff candidate, so several perturbed texts coincide.
fn with_duplicates(rng: &mut ChaCha8Rng, tag: usize) -> (AnnotatedTurn, Vec<CandidateSet>) {
    let (turn, mut sets) = random_annotation(rng, tag);
    let mut parts: Vec<(String, String, String)> =
        turn.ordered_nuggets().iter().map(|n| (n.id.clone(), n.text.clone(), n.act.clone())).collect();
    let twin = parts[0].clone();
    parts.insert(1, ("twin".into(), twin.1, twin.2));
    sets.push(CandidateSet::new("twin"));
    for s in &mut sets {
        if let Some(d) = s.diff_candidates.first().cloned() {
            s.same_candidates.push(d.text);
        }
    }
    (AnnotatedTurn::from_parts(turn.turn_id, vec![], parts), sets)
}

fn cache_transparency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0007);
    let mut duplicates = 0;
    for case in 0..200 {
        let (turn, sets) = with_duplicates(&mut rng, case);
        let report = validate_annotation(&turn, &sets);
        ensure!(report.ok, "case {case}: {report}");
        let cfg = random_config(&mut rng);
        let table = random_table(&mut rng, &turn, &sets, -1.0, 2.0);
        let plan = enumerate_perturbations(&turn, &sets).map_err(|e| e.to_string())?;
        duplicates += plan.entries.len() + 1 - table.len();

        let plain = evaluate_turn(&turn, &sets, &cfg, &table_scorer(&table)).map_err(|e| e.to_string())?;
        let counting = cached(CountingScorer::new(table_scorer(&table)));
        let first = evaluate_turn(&turn, &sets, &cfg, &counting).map_err(|e| e.to_string())?;
        let second = evaluate_turn(&turn, &sets, &cfg, &counting).map_err(|e| e.to_string())?;
        for (x, y) in plain.breakdowns.iter().zip(&first.breakdowns).chain(plain.breakdowns.iter().zip(&second.breakdowns)) {
            ensure!(x.ns.to_bits() == y.ns.to_bits(), "case {case}: ns differs with cache");
        }
        ensure!(plain == first && plain == second, "case {case}: breakdowns differ with cache");
        let calls = counting.inner().calls_per_text();
        ensure!(calls.len() == table.len(), "case {case}: {} texts scored, {} unique", calls.len(), table.len());
        ensure!(calls.values().all(|&c| c == 1), "case {case}: a text was scored twice");
    }
    ensure!(duplicates > 0, "no duplicate texts generated");
    Ok(format!("200 instances, {duplicates} duplicate texts served from cache"))
}

fn exec_out_of_order() -> Outcome {
    let mock = env!("CARGO_BIN_EXE_nugget-mock-scorer");
    let spawn = |window: &str| {
        let argv: Vec<String> = [mock, "--rule", "length", "--window", window].iter().map(|s| s.to_string()).collect();
        ExecScorer::spawn(&argv, Duration::from_secs(10)).map_err(|e| e.to_string())
    };
    let in_order = spawn("1")?;
    let shuffled = spawn("7")?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0008);
    let mut cases = vec![load_annotation(&fixture("case_study.json")).map_err(|e| e.to_string())?];
    cases.extend((0..20).map(|i| random_annotation(&mut rng, i)));
    let cfg = ScoringConfig::default();
    for (turn, sets) in &cases {
        let render = |scorer: &dyn Scorer| -> Result<Vec<String>, String> {
            let ev = evaluate_turn(turn, sets, &cfg, scorer).map_err(|e| e.to_string())?;
            let mut report = EvaluationReport::new(&ev, turn, "2023-11-26T00:00:00Z");
            report.scorer = "mock".into();
            [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Markdown]
                .into_iter()
                .map(|f| render_report(&report, f).map_err(|e| e.to_string()))
                .collect()
        };
        let expected = render(&in_order)?;
        ensure!(render(&shuffled)? == expected, "{}: out-of-order report differs", turn.turn_id);
        ensure!(render(&LengthScorer::new())? == expected, "{}: in-process report differs", turn.turn_id);
    }
    Ok(format!("{} turns, identical reports", cases.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("constant-scorer fixed point", constant_fixed_point),
        ("case-study shape replay", case_study_replay),
        ("monotonicity", monotonicity),
        ("top-k insensitivity", top_k_insensitivity),
        ("config gate", config_gate),
        ("cache transparency", cache_transparency),
        ("exec protocol conformance", exec_out_of_order),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {name}: {why}");
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
