//! Acceptance checks. Runs without the libtest harness so every line shows up
//! in the output, pass or fail. Exits non-zero if any check fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use resilab_core::estimators::{smooth_update, SmoothingState};
use resilab_core::mechanisms::{
    build_payoff_matrix, find_msne, find_psne, wsm_select, ActionCandidate, PayoffMatrix2x2, WsmWeights,
};
use resilab_core::monitor::{should_intervene, AdrWindow, MonitorConfig, PhaseState};
use resilab_core::runner::{
    log_to_string, read_log_from, run_experiment, DecisionRecord, ExperimentConfig, ExperimentResult, UpdatePolicy,
};
use resilab_core::Decision;

const SMOOTHING_TOL: f64 = 1e-12;
const INDIFFERENCE_TOL: f64 = 1e-9;

/// Pinned from the first verified run of the default scenario (seed 0).
/// Both mechanisms steer the same way here, so they share the numbers.
struct Golden {
    first_dip: usize,
    recovered_start: usize,
    final_disruption_always: usize,
    final_disruption_human_only: usize,
}

const GOLDEN: Golden = Golden {
    first_dip: 106,
    recovered_start: 111,
    final_disruption_always: 24,
    final_disruption_human_only: 0,
};

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

fn timed(limit: Duration, check: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = check();
    let took = start.elapsed();
    if took > limit {
        out.pass = false;
    }
    out.detail = format!("{} [{:.3}s, limit {}s]", out.detail, took.as_secs_f64(), limit.as_secs());
    out
}

fn smoothing_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5300);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let e0 = rng.random_range(0.0..10.0);
        let d = rng.random_range(0.0..10.0);
        let alpha = rng.random_range(0.0..=1.0);
        let mut s = SmoothingState::seeded(e0, alpha).unwrap();
        for _ in 0..50 {
            s = smooth_update(s, d).unwrap();
        }
        let want = (1.0 - alpha).powi(50) * (e0 - d).abs();
        worst = worst.max(((s.estimate - d).abs() - want).abs());
    }
    outcome(worst <= SMOOTHING_TOL, format!("100 triples, n=50, worst error {worst:.2e} (tol {SMOOTHING_TOL:e})"))
}

fn random_candidate<R: Rng>(rng: &mut R, id: Decision) -> ActionCandidate {
    ActionCandidate {
        id,
        et_seconds: rng.random_range(0.1..50.0),
        ecf_grams: rng.random_range(0.001..5.0),
        nhi_required: u32::from(id == Decision::Human),
        nhi_remaining: rng.random_range(1..=200),
    }
}

/// Every pure pair where both players are best-responding.
fn brute_force_psne(m: &PayoffMatrix2x2) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        let row_best = (0..2).map(|k| m.r_payoffs[k][j]).fold(f64::NEG_INFINITY, f64::max);
        let col_best = (0..2).map(|l| m.g_payoffs[i][l]).fold(f64::NEG_INFINITY, f64::max);
        if m.r_payoffs[i][j] == row_best && m.g_payoffs[i][j] == col_best {
            out.push((i, j));
        }
    }
    out
}

fn nash_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4e45);
    let (mut mismatched, mut mixed, mut bad_mixed) = (0, 0, 0);
    for _ in 0..1000 {
        let cands = [
            random_candidate(&mut rng, Decision::Autonomous),
            random_candidate(&mut rng, Decision::Human),
        ];
        let eps = rng.random_range(0.0..=1.0);
        let a_mis = rng.random_range(0.1..2.0);
        let a_match = a_mis + rng.random_range(0.01..3.0);
        let m = build_payoff_matrix(&cands, eps, a_match, a_mis).unwrap();
        let mut got = find_psne(&m);
        let mut want = brute_force_psne(&m);
        got.sort();
        want.sort();
        if got != want {
            mismatched += 1;
        }
        if let Some(eq) = find_msne(&m) {
            mixed += 1;
            let (r, g) = (&m.r_payoffs, &m.g_payoffs);
            // p mixes the column player so the row player is indifferent, q the reverse
            let row0 = eq.p * r[0][0] + (1.0 - eq.p) * r[0][1];
            let row1 = eq.p * r[1][0] + (1.0 - eq.p) * r[1][1];
            let col0 = eq.q * g[0][0] + (1.0 - eq.q) * g[1][0];
            let col1 = eq.q * g[0][1] + (1.0 - eq.q) * g[1][1];
            if (row0 - row1).abs() > INDIFFERENCE_TOL || (col0 - col1).abs() > INDIFFERENCE_TOL {
                bad_mixed += 1;
            }
        }
    }
    outcome(
        mismatched == 0 && bad_mixed == 0,
        format!("1000 matrices, {mismatched} pure-set mismatches, {mixed} mixed equilibria, {bad_mixed} not indifferent (tol {INDIFFERENCE_TOL:e})"),
    )
}

fn wsm_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5753);
    let mut flips = 0;
    for _ in 0..500 {
        let cands = [
            random_candidate(&mut rng, Decision::Autonomous),
            random_candidate(&mut rng, Decision::Human),
        ];
        let eps = rng.random_range(0.0..=1.0);
        let w_r = rng.random_range(0.0..=1.0);
        let weights = WsmWeights {
            w_resilience: w_r,
            w_greenness: 1.0 - w_r,
        };
        let ai = if rng.random_bool(0.5) { Decision::Autonomous } else { Decision::Human };
        let base = wsm_select(&cands, eps, &weights, ai).unwrap().action;
        // (0, 100]: 1 - U[0,1) never hits zero
        let c = 100.0 * (1.0 - rng.random::<f64>());
        let et_scaled = cands.map(|x| ActionCandidate {
            et_seconds: x.et_seconds * c,
            ..x
        });
        let ecf_scaled = cands.map(|x| ActionCandidate {
            ecf_grams: x.ecf_grams * c,
            ..x
        });
        for scaled in [et_scaled, ecf_scaled] {
            if wsm_select(&scaled, eps, &weights, ai).unwrap().action != base {
                flips += 1;
            }
        }
    }
    outcome(flips == 0, format!("500 pairs, ET and ECF scaled, {flips} changed choices"))
}

fn adr_fidelity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xad12);
    let (mut adr_bad, mut trigger_bad) = (0, 0);
    for _ in 0..10_000 {
        let w = rng.random_range(1..=40);
        let len = rng.random_range(1..=120);
        let cfg = MonitorConfig {
            window_size: w,
            adr_threshold: rng.random_range(0.05..=1.0),
            warmup_iterations: 0,
            recovery_sustain: 1,
        };
        let mut window = AdrWindow::new(w).unwrap();
        let mut seen: Vec<u8> = Vec::with_capacity(len);
        for t in 0..len {
            let d = if rng.random_bool(0.6) { Decision::Autonomous } else { Decision::Human };
            seen.push(u8::from(d == Decision::Autonomous));
            let adr = window.record(d);
            // slots never written still count as zeros
            let tail = &seen[seen.len().saturating_sub(w)..];
            let naive = tail.iter().map(|&m| m as usize).sum::<usize>() as f64 / w as f64;
            if adr != naive {
                adr_bad += 1;
            }
            if should_intervene(adr, &cfg, t) != (naive < cfg.adr_threshold) {
                trigger_bad += 1;
            }
        }
    }
    outcome(
        adr_bad == 0 && trigger_bad == 0,
        format!("10000 sequences, {adr_bad} ratio mismatches, {trigger_bad} trigger mismatches"),
    )
}

fn scenario_config(mechanism: &str, policy: UpdatePolicy) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.mechanism.id = mechanism.into();
    c.update_policy = policy;
    c
}

struct ScenarioRuns {
    runs: Vec<(String, ExperimentResult)>,
}

fn scenario_runs() -> ScenarioRuns {
    let mut runs = Vec::new();
    for mech in ["game", "wsm"] {
        for (tag, policy) in [("always", UpdatePolicy::Always), ("human-only", UpdatePolicy::HumanOnly)] {
            let res = run_experiment(scenario_config(mech, policy)).expect("scenario runs");
            runs.push((format!("{mech}/{tag}"), res));
        }
    }
    ScenarioRuns { runs }
}

fn end_to_end(s: &ScenarioRuns) -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    let get = |name: &str| &s.runs.iter().find(|(n, _)| n == name).expect("run present").1;
    for mech in ["game", "wsm"] {
        let a = get(&format!("{mech}/always"));
        let h = get(&format!("{mech}/human-only"));
        let g = summary(&a.config);
        let onset = a.timeline.disruption_onset;
        let fix = a.timeline.fix_event;
        let w = a.config.monitor.window_size;
        let thr = a.config.monitor.adr_threshold;
        let adr = a.adr_series();

        let reached = adr[..onset].iter().any(|v| *v >= thr);
        let dip = (onset..fix).find(|&k| adr[k] < thr);
        let dipped = dip.is_some_and(|k| k < onset + 2 * w);
        let recovered = a
            .timeline
            .find(PhaseState::Recovered)
            .filter(|seg| seg.end <= fix)
            .map(|seg| seg.start);
        let fd_always = a.timeline.find(PhaseState::FinalDisruption).map(|seg| seg.len());
        let fd_human = h.timeline.find(PhaseState::FinalDisruption).map_or(0, |seg| seg.len());
        let ordered = fd_always.is_some_and(|n| fd_human < n);
        let golden = dip == Some(GOLDEN.first_dip)
            && recovered == Some(GOLDEN.recovered_start)
            && fd_always == Some(GOLDEN.final_disruption_always)
            && fd_human == GOLDEN.final_disruption_human_only;

        pass &= reached && dipped && recovered.is_some() && ordered && golden;
        notes.push(format!(
            "{mech}: {g} a={} b={} (dip {dip:?}) c={} (recovered at {recovered:?}) d={} (final {fd_always:?} vs {fd_human}) golden={}",
            ok(reached),
            ok(dipped),
            ok(recovered.is_some()),
            ok(ordered),
            ok(golden),
        ));
    }
    outcome(pass, notes.join("; "))
}

fn summary(c: &ExperimentConfig) -> String {
    let g = &c.dataset.generator;
    format!(
        "n={} classes={} noise={} beta={} seed={}",
        g.n,
        g.classes.len(),
        g.noise_sigma,
        c.disruptor.beta,
        c.seed
    )
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAIL"
    }
}

/// Human budget left before the iteration that produced `records[k]`.
fn budget_before(records: &[DecisionRecord], k: usize, max: u32) -> u32 {
    if k == 0 {
        max
    } else {
        records[k - 1].nhi_remaining
    }
}

fn budget_safety(s: &ScenarioRuns) -> Outcome {
    let mut runs: Vec<(String, ExperimentResult)> = Vec::new();
    // tight budgets so exhaustion actually happens
    for mech in ["game", "wsm", "none"] {
        for nhi_max in [0, 3, 15] {
            let mut c = scenario_config(mech, UpdatePolicy::Always);
            c.nhi_max = nhi_max;
            runs.push((format!("{mech}/nhi={nhi_max}"), run_experiment(c).expect("budget run")));
        }
    }
    let mut violations = 0;
    let mut exhausted_iterations = 0;
    for (_, r) in s.runs.iter().chain(runs.iter()) {
        let max = r.config.nhi_max;
        let mut prev = max;
        for (k, rec) in r.records.iter().enumerate() {
            if rec.nhi_remaining > prev || rec.nhi_remaining > max {
                violations += 1;
            }
            prev = rec.nhi_remaining;
            if budget_before(&r.records, k, max) == 0 {
                exhausted_iterations += 1;
                if rec.final_action == Decision::Human {
                    violations += 1;
                }
            }
        }
    }
    outcome(
        violations == 0 && exhausted_iterations > 0,
        format!(
            "{} runs, {exhausted_iterations} iterations with no budget left, {violations} violations",
            s.runs.len() + runs.len()
        ),
    )
}

fn log_determinism() -> Outcome {
    let mut pass = true;
    let mut sizes = Vec::new();
    for mech in ["game", "wsm"] {
        let mut c = scenario_config(mech, UpdatePolicy::Always);
        c.mechanism.selection = resilab_core::mechanisms::SelectionMode::Stochastic;
        let first = log_to_string(&run_experiment(c.clone()).unwrap().records);
        let second = run_experiment(c).unwrap().records;
        let identical = first == log_to_string(&second);
        let parsed = read_log_from(first.as_bytes()).unwrap();
        pass &= identical && parsed == second;
        sizes.push(format!("{mech}: {} bytes identical={} round-trip={}", first.len(), ok(identical), ok(parsed == second)));
    }
    outcome(pass, sizes.join("; "))
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let mut results = vec![
        ("1 smoothing exactness", timed(secs(1), smoothing_exactness)),
        ("2 nash oracle equivalence", timed(secs(5), nash_equivalence)),
        ("3 wsm argmax invariance", timed(secs(1), wsm_invariance)),
        ("4 adr window fidelity", timed(secs(2), adr_fidelity)),
    ];
    let mut scenario = None;
    let e2e = timed(secs(10), || end_to_end(scenario.insert(scenario_runs())));
    let scenario = scenario.expect("scenario ran");
    results.push(("5 seeded end-to-end scenario", e2e));
    results.push(("6 budget safety", budget_safety(&scenario)));
    results.push(("7 log determinism", log_determinism()));

    let mut failed = 0;
    for (name, out) in &results {
        println!("{} criterion {name}: {}", if out.pass { "PASS" } else { "FAIL" }, out.detail);
        failed += usize::from(!out.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
