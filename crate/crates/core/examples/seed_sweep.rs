//! Runs the default scenario over a range of seeds and reports how often the
//! dip, the recovery and the post-fix relapse all show up.
//!
//!     cargo run --release -p resilab-core --example seed_sweep -- 50

use resilab_core::monitor::PhaseState;
use resilab_core::runner::{run_experiment, ExperimentConfig, ExperimentResult, UpdatePolicy};

fn run(seed: u64, mechanism: &str, policy: UpdatePolicy) -> ExperimentResult {
    let mut c = ExperimentConfig::default();
    c.seed = seed;
    c.mechanism.id = mechanism.into();
    c.update_policy = policy;
    run_experiment(c).expect("default config runs")
}

fn main() {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let mut good = 0;
    for seed in 0..seeds {
        let mut line = format!("seed {seed:3}");
        let mut all = true;
        for mech in ["game", "wsm"] {
            let a = run(seed, mech, UpdatePolicy::Always);
            let h = run(seed, mech, UpdatePolicy::HumanOnly);
            let (onset, fix) = (a.timeline.disruption_onset, a.timeline.fix_event);
            let w = a.config.monitor.window_size;
            let thr = a.config.monitor.adr_threshold;
            let adr = a.adr_series();
            let dip = (onset..fix).find(|&k| adr[k] < thr);
            let recovered = a.timeline.find(PhaseState::Recovered).filter(|s| s.end <= fix).map(|s| s.start);
            let relapse = a.recovery.second.unwrap_or(0);
            let relapse_h = h.recovery.second.unwrap_or(0);
            let ok = adr[..onset].iter().any(|v| *v >= thr)
                && dip.is_some_and(|d| d < onset + 2 * w)
                && recovered.is_some()
                && relapse > relapse_h;
            all &= ok;
            line += &format!(
                "  {mech}: dip {dip:?} recovered {recovered:?} relapse {relapse} vs {relapse_h} {}",
                if ok { "ok" } else { "--" }
            );
        }
        good += u64::from(all);
        println!("{line}");
    }
    println!("{good}/{seeds} seeds show the full pattern");
}
