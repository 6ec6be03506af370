mod args;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use catrate::iterated::{rate_iterated_components, rate_iterated_opt, IteratedParams};
use catrate::protocol::threshold;
use catrate::report::{format_significant, write_csv, RatePoint};
use catrate::validation::run_suite;
use catrate::{NoiseChoice, Protocol};
use clap::Parser;
use rayon::prelude::*;
use serde::Serialize;

use args::{Cli, Command, CurveArgs, IterateArgs, RateArgs, ScanArgs, SweepArgs, ThresholdArgs, ValidateArgs};

const THREADS_ENV: &str = "CATRATE_THREADS";

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl From<catrate::Error> for Failure {
    fn from(e: catrate::Error) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads(cli.threads).and_then(|()| match cli.command {
        Command::Rate(a) => cmd_rate(a),
        Command::Threshold(a) => cmd_threshold(a),
        Command::Curve(a) => cmd_curve(a),
        Command::ScanM(a) => cmd_scan_m(a),
        Command::Iterate(a) => cmd_iterate(a),
        Command::Validate(a) => cmd_validate(a),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(msg) => eprintln!("error: {msg}"),
                Failure::Numerical(msg) => eprintln!("failure: {msg}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn configure_threads(flag: Option<u16>) -> CliResult<()> {
    let n = match flag {
        Some(n) => Some(n as usize),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(n) if n > 0 => Some(n),
                _ => return Err(Failure::Usage(format!("{THREADS_ENV}='{v}' is not a positive integer"))),
            },
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Numerical(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn blocklength(m: u64) -> CliResult<usize> {
    usize::try_from(m).map_err(|_| Failure::Usage(format!("blocklength {m} too large")))
}

fn check_error_rate(protocol: Protocol, p: f64) -> CliResult<()> {
    let max = protocol.max_error();
    if !(0.0..=max).contains(&p) {
        return Err(Failure::Usage(format!("p = {p} is not in [0, {max}] for {protocol}")));
    }
    Ok(())
}

fn check_noise(noise: NoiseChoice) -> CliResult<()> {
    match noise {
        NoiseChoice::Fixed(q) if !(0.0..=0.5).contains(&q) => {
            Err(Failure::Usage(format!("noise rate {q} is not in [0, 0.5]")))
        }
        _ => Ok(()),
    }
}

fn print_json<T: Serialize>(value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Numerical(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Rate at one point, optimizing `q` if requested.
fn evaluate(protocol: Protocol, m: usize, p: f64, noise: NoiseChoice) -> CliResult<RatePoint> {
    let start = Instant::now();
    let q = match noise {
        NoiseChoice::Fixed(q) => q,
        NoiseChoice::Optimized => protocol.optimized(m, p, None)?.0,
    };
    let c = protocol.components(m, p, q)?;
    Ok(RatePoint::single(protocol, m, p, q, &c).with_runtime(elapsed_ms(start)))
}

#[derive(Serialize)]
struct RateOutput {
    protocol: Protocol,
    m: usize,
    p: f64,
    q: f64,
    q_optimized: bool,
    /// Key rate per signal, zero when no key can be extracted.
    rate: f64,
    raw_rate: f64,
    i_xy: f64,
    i_xe: f64,
    runtime_ms: f64,
}

fn cmd_rate(a: RateArgs) -> CliResult<()> {
    let m = blocklength(a.m)?;
    check_error_rate(a.protocol, a.p)?;
    check_noise(a.q)?;
    let point = evaluate(a.protocol, m, a.p, a.q)?;
    print_json(&RateOutput {
        protocol: a.protocol,
        m,
        p: a.p,
        q: point.q,
        q_optimized: a.q == NoiseChoice::Optimized,
        rate: point.clamped_rate(),
        raw_rate: point.rate,
        i_xy: point.i_xy,
        i_xe: point.i_xe,
        runtime_ms: point.runtime_ms,
    })
}

#[derive(Serialize)]
struct ThresholdOutput {
    protocol: Protocol,
    m: usize,
    q_optimized: bool,
    p_max: f64,
    width: f64,
    q_at_threshold: Option<f64>,
    evaluations: usize,
    runtime_ms: f64,
}

fn bracket(protocol: Protocol, lo: Option<f64>, hi: Option<f64>) -> CliResult<(f64, f64)> {
    let (d_lo, d_hi) = protocol.default_bracket();
    let (lo, hi) = (lo.unwrap_or(d_lo), hi.unwrap_or(d_hi));
    check_error_rate(protocol, lo)?;
    check_error_rate(protocol, hi)?;
    if lo >= hi {
        return Err(Failure::Usage(format!("empty bracket [{lo}, {hi}]")));
    }
    Ok((lo, hi))
}

fn cmd_threshold(a: ThresholdArgs) -> CliResult<()> {
    let m = blocklength(a.m)?;
    check_noise(a.q)?;
    let (lo, hi) = bracket(a.protocol, a.p_lo, a.p_hi)?;
    let start = Instant::now();
    let t = threshold(a.protocol, m, a.q, lo, hi)?;
    print_json(&ThresholdOutput {
        protocol: a.protocol,
        m,
        q_optimized: a.q == NoiseChoice::Optimized,
        p_max: t.p_max,
        width: t.width,
        q_at_threshold: t.q_at_threshold(),
        evaluations: t.evaluations,
        runtime_ms: elapsed_ms(start),
    })
}

fn sweep_points(s: &SweepArgs, max: f64) -> CliResult<Vec<f64>> {
    for p in [s.p_min, s.p_max] {
        if !(0.0..=max).contains(&p) {
            return Err(Failure::Usage(format!("p = {p} is not in [0, {max}]")));
        }
    }
    if s.p_min > s.p_max {
        return Err(Failure::Usage(format!("p-min {} exceeds p-max {}", s.p_min, s.p_max)));
    }
    let n = s.steps as usize;
    if n == 1 {
        return Ok(vec![s.p_min]);
    }
    Ok((0..n)
        .map(|i| s.p_min + (s.p_max - s.p_min) * i as f64 / (n - 1) as f64)
        .collect())
}

/// Rows ordered by `p`, then `m1`, then `m2`.
fn sort_rows(points: &mut [RatePoint]) {
    points.sort_by(|a, b| a.p.total_cmp(&b.p).then(a.m1.cmp(&b.m1)).then(a.m2.cmp(&b.m2)));
}

/// Writes the CSV, removing the file if anything goes wrong.
fn write_output(path: &Path, points: &[RatePoint]) -> CliResult<()> {
    let result = File::create(path).and_then(|f| {
        let mut w = BufWriter::new(f);
        write_csv(&mut w, points)?;
        w.flush()
    });
    result.map_err(|e| {
        let _ = fs::remove_file(path);
        Failure::Numerical(format!("writing {}: {e}", path.display()))
    })
}

fn cmd_curve(a: CurveArgs) -> CliResult<()> {
    check_noise(a.q)?;
    let ms = a.m.iter().map(|&m| blocklength(m)).collect::<CliResult<Vec<_>>>()?;
    let ps = sweep_points(&a.sweep, a.protocol.max_error())?;
    let cases: Vec<(f64, usize)> = ps.iter().flat_map(|&p| ms.iter().map(move |&m| (p, m))).collect();
    let mut points = cases
        .par_iter()
        .map(|&(p, m)| evaluate(a.protocol, m, p, a.q))
        .collect::<CliResult<Vec<_>>>()?;
    sort_rows(&mut points);
    write_output(&a.sweep.out, &points)
}

fn cmd_scan_m(a: ScanArgs) -> CliResult<()> {
    check_noise(a.q)?;
    let mut ms = a.m_list.iter().map(|&m| blocklength(m)).collect::<CliResult<Vec<_>>>()?;
    ms.sort_unstable();
    ms.dedup();
    let (lo, hi) = a.protocol.default_bracket();
    let mut points = ms
        .par_iter()
        .map(|&m| {
            let start = Instant::now();
            let t = threshold(a.protocol, m, a.q, lo, hi)?;
            let q = t.q_at_threshold().unwrap_or(0.0);
            let c = a.protocol.components(m, t.p_max, q)?;
            Ok(RatePoint::single(a.protocol, m, t.p_max, q, &c).with_runtime(elapsed_ms(start)))
        })
        .collect::<CliResult<Vec<_>>>()?;
    sort_rows(&mut points);
    for point in &points {
        eprintln!("m={} p_max={}", point.m1, format_significant(point.p));
    }
    write_output(&a.out, &points)
}

fn cmd_iterate(a: IterateArgs) -> CliResult<()> {
    let (m1, m2) = (blocklength(a.m1)?, blocklength(a.m2)?);
    check_noise(a.q)?;
    check_noise(a.big_q)?;
    let fixed = match (a.q, a.big_q) {
        (NoiseChoice::Fixed(q), NoiseChoice::Fixed(big_q)) => Some((q, big_q)),
        (NoiseChoice::Optimized, NoiseChoice::Optimized) => None,
        _ => return Err(Failure::Usage("--q and --Q must both be numbers or both be auto".into())),
    };
    IteratedParams::new(m1, m2, 0.0, 0.0)?;
    let ps = sweep_points(&a.sweep, 0.5)?;
    let mut points = ps
        .par_iter()
        .map(|&p| {
            let start = Instant::now();
            let (q, big_q) = match fixed {
                Some(pair) => pair,
                None => rate_iterated_opt(m1, m2, p)?.argmax,
            };
            let params = IteratedParams::new(m1, m2, q, big_q)?;
            let c = rate_iterated_components(&params, p)?;
            Ok(RatePoint::iterated(&params, p, &c).with_runtime(elapsed_ms(start)))
        })
        .collect::<CliResult<Vec<_>>>()?;
    sort_rows(&mut points);
    write_output(&a.sweep.out, &points)
}

fn cmd_validate(a: ValidateArgs) -> CliResult<()> {
    let start = Instant::now();
    let checks = run_suite(a.seed)?;
    println!("{:<34} {:>6} {:>14} {:>10}  status", "check", "cases", "max deviation", "tolerance");
    for c in &checks {
        println!(
            "{:<34} {:>6} {:>14.3e} {:>10.0e}  {}",
            c.name,
            c.cases,
            c.max_deviation,
            c.tolerance,
            if c.passed() { "ok" } else { "FAIL" }
        );
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    println!("{} checks, {failed} failed, {:.1} s", checks.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        return Err(Failure::Numerical(format!("{failed} validation checks failed")));
    }
    Ok(())
}
