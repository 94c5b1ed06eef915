//! End-to-end acceptance checks. Every criterion prints one PASS/FAIL line;
//! the test fails afterwards if any criterion missed its target.

mod common;

use std::f64::consts::FRAC_PI_4;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use witfam::estimation::ml_estimate;
use witfam::harness::{run_experiment_deltas, ClassKind, ExperimentConfig, HistogramReport};
use witfam::measurement::{born_probabilities, measure, Dataset};
use witfam::qcore::quantum_fidelity;
use witfam::schemes::SchemeId;
use witfam::states::{reference_state, StateClass, StateTag};
use witfam::witness::{criterion_s, family_unitary, preset_families};

const PAIRS: u64 = 10_000;
const DELTAS: [f64; 3] = [0.5, 1.0, 2.0];
/// 99.9% quantile of chi-squared with five degrees of freedom.
const CHI2_5_P001: f64 = 20.515;

struct Outcome {
    id: &'static str,
    pass: bool,
}

fn report(id: &'static str, pass: bool, detail: String, elapsed: Duration) -> Outcome {
    println!(
        "{} criterion {id}: {detail} [{:.1}s]",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    Outcome { id, pass }
}

fn sweep(
    scheme: SchemeId,
    class: ClassKind,
    param: Option<f64>,
    num_states: usize,
    seed: u64,
    deltas: &[f64],
) -> Vec<HistogramReport> {
    let cfg = ExperimentConfig {
        scheme,
        class,
        param,
        num_states,
        pairs_per_family: PAIRS,
        seed,
        ..Default::default()
    };
    run_experiment_deltas(&cfg, deltas, true).unwrap()
}

fn undetected(r: &HistogramReport) -> f64 {
    r.bin("tomo").unwrap().percent + r.bin("error").unwrap().percent
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let r = sweep(SchemeId::A, ClassKind::Werner, Some(1.0), 6000, 101, &[1.0]).remove(0);
    let counts: Vec<f64> = (1..=6)
        .map(|n| r.bin(&n.to_string()).unwrap().count as f64)
        .collect();
    let expected = 6000.0 / 6.0;
    let chi2: f64 = counts
        .iter()
        .map(|c| (c - expected).powi(2) / expected)
        .sum();
    let elapsed = t.elapsed();
    let pass = (r.mean_n - 3.5).abs() <= 0.1
        && chi2 < CHI2_5_P001
        && counts.iter().sum::<f64>() == 6000.0
        && elapsed.as_secs() < 60;
    report("1", pass, format!("scheme A singlet mean n = {:.3}, chi2 = {chi2:.2} (< {CHI2_5_P001}), counts {counts:?}", r.mean_n), elapsed)
}

struct Ensembles {
    pure: [HistogramReport; 3],
    mixed_a: HistogramReport,
    mixed_b: HistogramReport,
    mixed_c: Vec<HistogramReport>,
    mixed_bp: HistogramReport,
    mixed_cp: HistogramReport,
    pure_time: Duration,
    mixed_time: Duration,
    prime_time: Duration,
}

fn ensembles() -> Ensembles {
    let t = Instant::now();
    let pure = [SchemeId::A, SchemeId::B, SchemeId::C]
        .map(|s| sweep(s, ClassKind::GinibrePure, None, 2000, 202, &[1.0]).remove(0));
    let pure_time = t.elapsed();
    let t = Instant::now();
    let mixed_a = sweep(SchemeId::A, ClassKind::GinibreFull, None, 2000, 303, &[1.0]).remove(0);
    let mixed_b = sweep(SchemeId::B, ClassKind::GinibreFull, None, 2000, 303, &[1.0]).remove(0);
    let mixed_c = sweep(
        SchemeId::C,
        ClassKind::GinibreFull,
        None,
        2000,
        303,
        &DELTAS,
    );
    let mixed_time = t.elapsed();
    let t = Instant::now();
    let mixed_bp = sweep(
        SchemeId::Bprime,
        ClassKind::GinibreFull,
        None,
        2000,
        303,
        &[1.0],
    )
    .remove(0);
    let mixed_cp = sweep(
        SchemeId::Cprime,
        ClassKind::GinibreFull,
        None,
        2000,
        303,
        &[1.0],
    )
    .remove(0);
    let prime_time = t.elapsed();
    Ensembles {
        pure,
        mixed_a,
        mixed_b,
        mixed_c,
        mixed_bp,
        mixed_cp,
        pure_time,
        mixed_time,
        prime_time,
    }
}

fn criterion_2(e: &Ensembles) -> Outcome {
    let [a, b, c] = &e.pure;
    let within3 = c.detected_within(3);
    let (ua, ub, uc) = (undetected(a), undetected(b), undetected(c));
    let pass = within3 >= 90.0 && (ua - 2.0).abs() <= 2.0 && (ub - 2.0).abs() <= 2.0 && uc < 0.5;
    report(
        "2",
        pass,
        format!("pure: C within 3 = {within3:.2}%; undetected A {ua:.2}%, B {ub:.2}%, C {uc:.2}%; mean n A {:.2} B {:.2} C {:.2}", a.mean_n, b.mean_n, c.mean_n),
        e.pure_time,
    )
}

fn criterion_3(e: &Ensembles) -> Outcome {
    let (ua, ub) = (undetected(&e.mixed_a), undetected(&e.mixed_b));
    let uc: Vec<f64> = e.mixed_c.iter().map(undetected).collect();
    let at_default = uc[1];
    let pass = (ua - 67.0).abs() <= 5.0 && (ub - 67.0).abs() <= 5.0 && at_default <= 6.0;
    report(
        "3",
        pass,
        format!(
            "mixed: undetected A {ua:.2}%, B {ub:.2}%, C {at_default:.2}% at delta 1 (delta 0.5: {:.2}%, 1: {:.2}%, 2: {:.2}%)",
            uc[0], uc[1], uc[2]
        ),
        e.mixed_time,
    )
}

fn criterion_4(e: &Ensembles) -> Outcome {
    let ubp = undetected(&e.mixed_bp);
    let ucp = undetected(&e.mixed_cp);
    let uc = undetected(&e.mixed_c[1]);
    let pass = (ubp - 25.0).abs() <= 5.0 && (ucp - uc).abs() <= 3.0;
    report(
        "4",
        pass,
        format!(
            "undetected B' {ubp:.2}% (target 25 +- 5), C' {ucp:.2}% vs C {uc:.2}% (within 3 pp)"
        ),
        e.prime_time,
    )
}

/// Ideal-state signs of the criterion on selected families, checked over
/// independent sampling seeds.
fn criterion_5() -> Outcome {
    let t = Instant::now();
    let mu = 0.15;
    let cases: [(&str, StateTag, usize, bool); 5] = [
        ("rank2(0.15) family 3", StateTag::Rank2(mu), 3, false),
        ("rank2(0.15) family 4", StateTag::Rank2(mu), 4, false),
        ("rank2(0.15) family 2", StateTag::Rank2(mu), 2, true),
        ("werner(1) family 1", StateTag::Werner(1.0), 1, true),
        ("rank1(pi/4) family 2", StateTag::Rank1(FRAC_PI_4), 2, true),
    ];
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for (name, tag, fam, conclusive) in cases {
        let rho = reference_state(&StateClass::ideal(tag)).unwrap();
        let f = family_unitary(fam).unwrap();
        for _ in 0..100 {
            let rec = measure(&rho, &f, PAIRS, &mut rng).unwrap();
            if rec.criterion().conclusive != conclusive {
                failures.push(name);
                break;
            }
        }
    }
    // Family 2 on the rank-two state, against -(2 mu - 1)^2.
    let rho = reference_state(&StateClass::ideal(StateTag::Rank2(mu))).unwrap();
    let ideal = criterion_s(&born_probabilities(&rho, &family_unitary(2).unwrap()))
        .unwrap()
        .s_value;
    let oracle = -(2.0 * mu - 1.0f64).powi(2);
    if (ideal - oracle).abs() > 1e-12 {
        failures.push("rank2 family 2 ideal value");
    }
    report("5", failures.is_empty(), format!("sign pattern over 100 seeds each; family-2 ideal S = {ideal:.4} (oracle {oracle:.4}); mismatches {failures:?}"), t.elapsed())
}

fn criterion_6() -> Outcome {
    let t = Instant::now();
    let classes: [(&str, [StateTag; 5]); 3] = [
        ("rank1", [0.2, 0.5, 0.9, 1.2, 2.0].map(StateTag::Rank1)),
        ("rank2", [0.0, 0.15, 0.3, 0.7, 1.0].map(StateTag::Rank2)),
        ("werner", [0.4, 0.55, 0.7, 0.85, 1.0].map(StateTag::Werner)),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut means = Vec::new();
    for (name, tags) in classes {
        let mut total = 0.0;
        for tag in tags {
            let rho = reference_state(&StateClass::ideal(tag)).unwrap();
            for _ in 0..20 {
                let d = Dataset::from_records(
                    preset_families()
                        .iter()
                        .map(|f| measure(&rho, f, PAIRS, &mut rng).unwrap())
                        .collect(),
                )
                .unwrap();
                let est = ml_estimate(&d, 1e-3 / d.n_total() as f64, 20_000);
                total += quantum_fidelity(&est.estimate, &rho);
            }
        }
        means.push((name, total / 100.0));
    }
    let pass = means.iter().all(|(_, m)| *m >= 0.97);
    report(
        "6",
        pass,
        format!("mean tomography fidelity {means:.4?}"),
        t.elapsed(),
    )
}

fn criterion_7() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let ppt = common::ppt_concurrence_disagreements(10_000, &mut rng);
    let safety = common::separable_safety(10_000, &mut rng);
    let monotone = common::ml_monotonicity_violations(100, &mut rng);
    let (table, random) = common::waveplate_round_trips(200, &mut rng);
    let elapsed = t.elapsed();
    let pass = ppt == 0
        && safety.violations() == 0
        && monotone == 0
        && table == 0
        && random == 0
        && elapsed.as_secs() < 120;
    report(
        "7",
        pass,
        format!("PPT/concurrence disagreements {ppt}; separable violations {safety:?}; ML non-monotone {monotone}; wave-plate failures {table}+{random}"),
        elapsed,
    )
}

/// Cumulative detection curves ordered C >= B >= A, up to Monte Carlo noise.
fn dominance(e: &Ensembles) -> bool {
    let ordered = |lo: &HistogramReport, hi: &HistogramReport| {
        (1..=6).all(|n| hi.detected_within(n) >= lo.detected_within(n) - 2.0)
    };
    let [a, b, c] = &e.pure;
    let ok = ordered(a, b)
        && ordered(b, c)
        && ordered(&e.mixed_a, &e.mixed_b)
        && ordered(&e.mixed_b, &e.mixed_c[1]);
    println!(
        "{} ensemble dominance C >= B >= A at every n (2 pp slack)",
        if ok { "PASS" } else { "FAIL" }
    );
    ok
}

#[test]
fn acceptance_criteria() {
    let mut outcomes = vec![criterion_1()];
    let e = ensembles();
    outcomes.push(criterion_2(&e));
    outcomes.push(criterion_3(&e));
    outcomes.push(criterion_4(&e));
    outcomes.push(criterion_5());
    outcomes.push(criterion_6());
    outcomes.push(criterion_7());
    let dominance_ok = dominance(&e);
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    assert!(
        failed.is_empty() && dominance_ok,
        "failed criteria: {failed:?}, dominance {dominance_ok}"
    );
}
