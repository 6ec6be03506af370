//! Acceptance criteria, one test per criterion.
//!
//! Each test prints a single `criterion NN PASS|FAIL ...` line (visible with
//! `--nocapture`) and fails if the criterion is not met.

use std::time::Instant;

use catrate::bb84::{rate_bb84, syndrome_table};
use catrate::entropy::binary_entropy_unchecked as h;
use catrate::iterated::{iterated_syndrome_distribution, rate_iterated, IteratedParams};
use catrate::optimizer::find_threshold;
use catrate::optimizer::RateProbe;
use catrate::protocol::{iterated_threshold, threshold, NoiseChoice, Protocol};
use catrate::sixstate::{lo_rate, lo_table, rate_sixstate};
use catrate::validation::{
    check_block_completeness, check_eve_bb84, check_eve_sixstate, check_independent_errors, check_iterated,
    check_schur_entropy, check_xy_enumeration, CheckOutcome,
};

fn verdict(n: u32, name: &str, pass: bool, detail: String) {
    println!("criterion {n:02} {} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} ({name}) failed: {detail}");
}

fn summarize(checks: &[CheckOutcome]) -> (bool, String) {
    let pass = checks.iter().all(CheckOutcome::passed);
    let detail = checks
        .iter()
        .map(|c| format!("{} max {:.1e} (tol {:.0e}, {} cases)", c.name, c.max_deviation, c.tolerance, c.cases))
        .collect::<Vec<_>>()
        .join("; ");
    (pass, detail)
}

fn optimized(protocol: Protocol, m: usize) -> f64 {
    let (lo, hi) = protocol.default_bracket();
    threshold(protocol, m, NoiseChoice::Optimized, lo, hi).unwrap().p_max
}

#[test]
fn criterion_01_schur_entropy_matches_dense() {
    let start = Instant::now();
    let check = check_schur_entropy(10, 12, 0x5eed).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let pass = check.passed() && check.cases >= 100 && elapsed < 30.0;
    verdict(
        1,
        "block entropy vs dense",
        pass,
        format!("{} families, max |Δ| {:.2e}, {:.1} s", check.cases, check.max_deviation, elapsed),
    );
}

#[test]
fn criterion_02_mutual_informations_match_oracles() {
    let start = Instant::now();
    let mut checks = vec![check_xy_enumeration().unwrap(), check_eve_bb84().unwrap(), check_eve_sixstate().unwrap()];
    checks.extend(check_iterated(&[(2, 2), (3, 2), (2, 3), (3, 3)]).unwrap());
    let elapsed = start.elapsed().as_secs_f64();
    let (pass, detail) = summarize(&checks);
    verdict(2, "mutual informations vs oracles", pass && elapsed < 120.0, format!("{detail}; {elapsed:.1} s"));
}

#[test]
fn criterion_03_bb84_single_signal_thresholds() {
    let plain = threshold(Protocol::Bb84, 1, NoiseChoice::Fixed(0.0), 0.05, 0.2).unwrap().p_max;
    let noisy = optimized(Protocol::Bb84, 1);

    // Independent fine-grid scan of the single-signal closed form.
    let closed = |p: f64, q: f64| {
        let pt = p * (1.0 - q) + (1.0 - p) * q;
        1.0 - h(pt) - h(p) + h(0.5 * (1.0 + (1.0 - 16.0 * p * (1.0 - p) * q * (1.0 - q)).sqrt()))
    };
    let grid_best = |p: f64| (0..5000).map(|i| closed(p, 0.5 * i as f64 / 5000.0)).fold(f64::MIN, f64::max);
    let grid = find_threshold(|p| Ok(RateProbe::fixed(grid_best(p))), 0.05, 0.2).unwrap().p_max;

    let pass = (plain - 0.110028).abs() <= 1e-4 && noisy - plain >= 0.013 && (noisy - grid).abs() <= 1e-4;
    verdict(
        3,
        "BB84 m=1 thresholds",
        pass,
        format!("q=0: {plain:.6}, optimized: {noisy:.6} (grid scan {grid:.6}), gain {:.4}", noisy - plain),
    );
}

#[test]
fn criterion_04_bb84_m400_threshold() {
    let start = Instant::now();
    let t = threshold(Protocol::Bb84, 400, NoiseChoice::Optimized, 0.12, 0.135).unwrap();
    let pass = (t.p_max - 0.1292).abs() <= 0.0005;
    verdict(
        4,
        "BB84 m=400 threshold",
        pass,
        format!(
            "p_max {:.5} ± {:.0e}, q* {:.4}, {:.0} s",
            t.p_max,
            t.width,
            t.q_at_threshold().unwrap_or(f64::NAN),
            start.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_05_sixstate_single_signal_threshold() {
    let t = threshold(Protocol::Sixstate, 1, NoiseChoice::Optimized, 0.05, 0.25).unwrap();
    let pass = (t.p_max - 0.1411).abs() <= 0.0005;
    verdict(
        5,
        "6-state m=1 threshold",
        pass,
        format!("p_max {:.5}, q* {:.4}", t.p_max, t.q_at_threshold().unwrap_or(f64::NAN)),
    );
}

#[test]
fn criterion_06_sixstate_long_block_threshold() {
    let start = Instant::now();
    let m = 250;
    let t = threshold(Protocol::Sixstate, m, NoiseChoice::Optimized, 0.1445, 0.1475).unwrap();
    let pass = t.p_max >= 0.1454;
    verdict(
        6,
        "6-state long-block threshold",
        pass,
        format!(
            "m={m}: p_max {:.5} ± {:.0e}, q* {:.4}, direct optimization, {:.0} s",
            t.p_max,
            t.width,
            t.q_at_threshold().unwrap_or(f64::NAN),
            start.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_07_sixstate_without_noise() {
    let ms = [1usize, 3, 5, 7, 9];
    let thresholds: Vec<f64> = ms
        .iter()
        .map(|&m| find_threshold(|p| Ok(RateProbe::fixed(lo_rate(m, p)?)), 0.05, 0.3).unwrap().p_max)
        .collect();
    let best = ms[thresholds
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap()];
    let mut agreement = 0.0f64;
    for m in 1..=5 {
        for k in 0..=20 {
            let p = 0.3 * k as f64 / 20.0;
            agreement = agreement.max((rate_sixstate(m, p, 0.0).unwrap() - lo_rate(m, p).unwrap()).abs());
        }
    }
    let pass = best == 5 && agreement <= 1e-9;
    let listed: Vec<String> = ms.iter().zip(&thresholds).map(|(m, t)| format!("m={m}: {t:.5}")).collect();
    verdict(
        7,
        "6-state repetition code without noise",
        pass,
        format!("{}; best m={best}; max |Δ| vs q=0 rate {agreement:.1e}", listed.join(", ")),
    );
}

#[test]
fn criterion_08_thresholds_nondecreasing_in_m() {
    let ms = [1usize, 2, 4, 8, 16, 32, 64];
    let mut pass = true;
    let mut lines = Vec::new();
    for protocol in [Protocol::Bb84, Protocol::Sixstate] {
        let t: Vec<f64> = ms.iter().map(|&m| optimized(protocol, m)).collect();
        let worst = t.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        pass &= worst >= -1e-5;
        let listed: Vec<String> = t.iter().map(|x| format!("{x:.5}")).collect();
        lines.push(format!("{protocol} [{}] min step {worst:.1e}", listed.join(", ")));
    }
    verdict(8, "monotone thresholds", pass, lines.join("; "));
}

#[test]
fn criterion_09_iterated_improvement() {
    let iterated = iterated_threshold(3, 3, 0.05, 0.2).unwrap();
    let single = optimized(Protocol::Bb84, 9);
    let mut worst = 0.0f64;
    for p in [0.0, 0.03, 0.07, 0.11, 0.14] {
        for noise in [0.0, 0.1, 0.2, 0.35, 0.5] {
            for m in [2usize, 4] {
                let single_round = rate_bb84(m, p, noise).unwrap();
                let outer_only = rate_iterated(&IteratedParams::new(m, 1, noise, 0.0).unwrap(), p).unwrap();
                let inner_only = rate_iterated(&IteratedParams::new(1, m, 0.0, noise).unwrap(), p).unwrap();
                worst = worst.max((outer_only - single_round).abs()).max((inner_only - single_round).abs());
            }
        }
    }
    let pass = iterated.p_max - iterated.width > single + 1e-5 && worst <= 1e-10;
    verdict(
        9,
        "iterated preprocessing",
        pass,
        format!(
            "3x3 p_max {:.5} (q, Q) = {:?} vs m=9 {single:.5}; reduction max |Δ| {worst:.1e}",
            iterated.p_max, iterated.noise_at_threshold
        ),
    );
}

#[test]
fn criterion_10_structural_invariants() {
    let blocks = check_block_completeness(1024).unwrap();
    let mut mass = 0.0f64;
    for m in [1usize, 2, 7, 64, 333, 1024] {
        for pt in [0.0, 0.02, 0.13, 0.5] {
            mass = mass.max((syndrome_table(m, pt).unwrap().total_mass() - 1.0).abs());
        }
    }
    for m in [1usize, 2, 5, 9, 40, 250] {
        for p in [0.0, 0.1, 0.14, 0.4, 0.66] {
            mass = mass.max((lo_table(m, p).unwrap().total_mass() - 1.0).abs());
        }
    }
    for (m1, m2) in [(2usize, 2usize), (3, 3), (4, 3), (2, 6)] {
        let params = IteratedParams::new(m1, m2, 0.2, 0.1).unwrap();
        mass = mass.max((iterated_syndrome_distribution(&params, 0.12).unwrap().total_mass() - 1.0).abs());
    }
    let maximality = check_independent_errors().unwrap();
    let pass = blocks.passed() && blocks.cases == 1024 && mass <= 1e-12 && maximality.passed();
    verdict(
        10,
        "structural invariants",
        pass,
        format!(
            "block completeness failures {} of {}; max mass error {mass:.1e}; correlated-error gain {:.1e}",
            blocks.max_deviation, blocks.cases, maximality.max_deviation
        ),
    );
}
