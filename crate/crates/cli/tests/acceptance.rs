//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use gleason_cli::{cmd_cj_verify, cmd_prbox_demo, cmd_upb, Report};
use gleason_core::boxes::{classical_bell_enumeration, classical_max_beta, is_nonsignalling, random_ns_box};
use gleason_core::hilbert::hermitian_deviation;
use gleason_core::operators::{evaluate_box, pr_operator};
use gleason_core::sample;
use gleason_core::synthesis::synthesize;
use gleason_core::witness::{
    certify_witness, descend, minimize_over_products, AlternatingOptions, ProductState, WitnessVerdict,
};
use gleason_core::Scenario;

/// Recorded from the first oracle-checked run at the default `|e>`.
const FROZEN_EPSILON: f64 = 0.081_441_346_456_3;

const SCENARIOS: [(usize, usize, usize); 4] = [(2, 2, 2), (2, 3, 2), (2, 2, 3), (3, 2, 2)];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn report_verdict(r: &Report) -> Verdict {
    let failed: Vec<&str> = r.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    let detail = r
        .checks
        .iter()
        .map(|c| format!("{}={:.3e}", c.name, c.value))
        .collect::<Vec<_>>()
        .join(" ");
    if failed.is_empty() {
        verdict(true, detail)
    } else {
        verdict(false, format!("failed [{}] {detail}", failed.join(", ")))
    }
}

fn criterion_1() -> Verdict {
    match cmd_prbox_demo(64, 0) {
        Ok(r) => report_verdict(&r),
        Err(e) => verdict(false, e.to_string()),
    }
}

fn criterion_2_and_3() -> (Verdict, Verdict) {
    let mut worst_round_trip = 0.0f64;
    let mut worst_trace = 0.0f64;
    let mut worst_herm = 0.0f64;
    let mut worst_dual = 0.0f64;
    let mut families = 0;
    for (n, m, r) in SCENARIOS {
        let s = Scenario::new(n, m, r).unwrap();
        for k in 0..50u64 {
            let b = random_ns_box(s, 100 + k);
            let model = match synthesize(&b, k) {
                Ok(model) => model,
                Err(e) => {
                    let msg = format!("({n},{m},{r}) box {k}: {e}");
                    return (verdict(false, msg.clone()), verdict(false, msg));
                }
            };
            worst_round_trip = worst_round_trip.max(model.evaluate().unwrap().max_abs_difference(&b));
            worst_trace = worst_trace.max((model.operator.trace() - 1.0).abs());
            worst_herm = worst_herm.max(hermitian_deviation(model.operator.matrix()));
            worst_dual = worst_dual.max(model.family.duality_error());
            families += 1;
        }
    }
    (
        verdict(
            worst_round_trip < 1e-9 && worst_trace < 1e-9 && worst_herm < 1e-12,
            format!("{families} boxes: round_trip={worst_round_trip:.3e} trace={worst_trace:.3e} hermitian={worst_herm:.3e}"),
        ),
        verdict(worst_dual < 1e-10, format!("{families} families: duality={worst_dual:.3e}")),
    )
}

fn criterion_4() -> Verdict {
    let mut worst = 0.0f64;
    for k in 0..100u64 {
        let (n, m, r) = SCENARIOS[(k % 4) as usize];
        let dims: Vec<usize> = (0..n).map(|i| 2 + (k as usize + i) % 2).collect();
        let mut rng = sample::rng_stream(4, k);
        let o = sample::unit_trace_hermitian(&mut rng, &dims);
        let mm = sample::measurement_model(&mut rng, &dims, m, r);
        let b = evaluate_box(&o, &mm).unwrap().correlations;
        worst = worst.max(is_nonsignalling(&b).max_violation);
    }
    verdict(worst < 1e-9, format!("100 pairs: max_violation={worst:.3e}"))
}

fn upb_verdict(theta: Option<f64>, grid: usize, frozen: bool) -> Verdict {
    let r = match cmd_upb(theta, 64, 0, Some(grid)) {
        Ok(r) => r,
        Err(e) => return verdict(false, e.to_string()),
    };
    let mut v = report_verdict(&r);
    if frozen {
        let eps = r.results["epsilon"].as_f64().unwrap();
        let drift = (eps - FROZEN_EPSILON).abs();
        v.pass &= drift < 1e-8;
        v.detail = format!("epsilon={eps:.10} frozen_drift={drift:.1e} {}", v.detail);
    }
    v
}

fn criterion_6() -> Verdict {
    let bound = classical_bell_enumeration();
    let beta = classical_max_beta();
    verdict(
        beta == 1.0 && bound.max_terms == 1,
        format!("classical_max_beta={beta} max_terms={} maximizers={}", bound.max_terms, bound.maximizers.len()),
    )
}

fn criterion_7() -> Verdict {
    match cmd_cj_verify(100, 0) {
        Ok(r) => report_verdict(&r),
        Err(e) => verdict(false, e.to_string()),
    }
}

fn criterion_8() -> Verdict {
    let mut worst_increase = f64::NEG_INFINITY;
    let mut worst_equivariance = 0.0f64;
    for k in 0..10u64 {
        let mut rng = sample::rng_stream(8, k);
        let w = sample::hermitian(&mut rng, &[2, 2, 2]);
        let start = ProductState::random(&mut rng, &[2, 2, 2]);
        let d = descend(&w, start, AlternatingOptions::default()).unwrap();
        for pair in d.history.windows(2) {
            worst_increase = worst_increase.max(pair[1] - pair[0]);
        }
        let (a, t) = (0.5 + k as f64, -1.0 + 0.3 * k as f64);
        let base = minimize_over_products(&w, 8, k).unwrap().value;
        let moved = minimize_over_products(&w.scaled(a).shifted(t), 8, k).unwrap().value;
        worst_equivariance = worst_equivariance.max((moved - (a * base + t)).abs());
    }
    let cert = certify_witness(&pr_operator(), 64, 0).unwrap();
    let recomputed = cert.minimization.argmin.expectation(&pr_operator()).unwrap();
    let self_verifying =
        cert.verdict == WitnessVerdict::Violated && recomputed < 0.0 && (recomputed - cert.minimization.value).abs() < 1e-10;
    verdict(
        worst_increase <= 1e-12 && worst_equivariance < 1e-10 && self_verifying,
        format!(
            "max_step_increase={worst_increase:.3e} equivariance={worst_equivariance:.3e} pr_product_min={recomputed:.6}"
        ),
    )
}

fn criterion_9() -> Verdict {
    let mut pass = true;
    let mut details = Vec::new();
    for theta in [PI / 8.0, PI / 4.0, 3.0 * PI / 8.0] {
        let v = upb_verdict(Some(theta), 80, false);
        pass &= v.pass;
        details.push(format!("θ={theta:.4}: {}", if v.pass { "ok" } else { v.detail.as_str() }));
    }
    verdict(pass, details.join("; "))
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, Verdict, Duration, Option<Duration>)> = Vec::new();
    let (v, t) = timed(criterion_1);
    results.push((1, v, t, Some(Duration::from_secs(1))));
    let ((v2, v3), t) = timed(criterion_2_and_3);
    results.push((2, v2, t, Some(Duration::from_secs(20))));
    results.push((3, v3, t, None));
    let (v, t) = timed(criterion_4);
    results.push((4, v, t, None));
    let (v, t) = timed(|| upb_verdict(None, 120, true));
    results.push((5, v, t, Some(Duration::from_secs(30))));
    let (v, t) = timed(criterion_6);
    results.push((6, v, t, Some(Duration::from_millis(100))));
    let (v, t) = timed(criterion_7);
    results.push((7, v, t, Some(Duration::from_secs(5))));
    let (v, t) = timed(criterion_8);
    results.push((8, v, t, None));
    let (v, t) = timed(criterion_9);
    results.push((9, v, t, None));

    let mut all = true;
    for (id, v, elapsed, budget) in results {
        let in_time = budget.is_none_or(|b| elapsed <= b);
        let pass = v.pass && in_time;
        all &= pass;
        let budget_note = budget.map_or(String::new(), |b| format!(" budget={:.1}s", b.as_secs_f64()));
        println!(
            "{} criterion {id}: {} [{:.2}s{budget_note}]",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
