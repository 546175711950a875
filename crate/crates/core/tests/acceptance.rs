//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Suites run through the same entry point as the binary. Criteria 7 and 8 stop
//! at their first definite failure; `qhrom-sim s-equivalence --suite trends` and
//! `qhrom-sim run-hybrids` print the full tables.

use std::time::{Duration, Instant};

use clap::Parser;

use qhrom_sim::cli::{execute, Cli};
use qhrom_sim::decoder::soundness_suite;
use qhrom_sim::experiments::adversary::{AdversaryKind, AdversarySpec};
use qhrom_sim::experiments::hybrids::{coupled_gap, distance_curve, CurveParams, MonteCarlo};
use qhrom_sim::good_tuples::RightZRule;
use qhrom_sim::merge_checks::{commuting_trend, CommutingPair};
use qhrom_sim::relations::Dim;
use qhrom_sim::report::{table, Verdict};
use qhrom_sim::state::norm::NormOptions;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

type Criterion = (&'static str, fn() -> Outcome);

/// Runs a subcommand in-process without writing report files.
fn suite(args: &[&str]) -> (Verdict, String, Duration) {
    let argv = ["qhrom-sim"].iter().chain(args).chain(&["--no-files"]);
    let cli = Cli::try_parse_from(argv).expect("acceptance arguments parse");
    let start = Instant::now();
    match execute(&cli.command, &cli.common) {
        Ok(out) => (out.verdict, table(&out.rows), start.elapsed()),
        Err(e) => (Verdict::Fail, format!("error: {e}\n"), start.elapsed()),
    }
}

fn timed_suite(args: &[&str], limit: Duration) -> Outcome {
    let (v, rows, took) = suite(args);
    let in_time = took < limit;
    let mut detail = format!("verdict {v:?}, {:.1} s (limit {} s)\n{rows}", took.as_secs_f64(), limit.as_secs());
    if !in_time {
        detail += "runtime limit exceeded\n";
    }
    Outcome::new(v == Verdict::Pass && in_time, detail)
}

fn plain_suite(args: &[&str]) -> Outcome {
    let (v, rows, took) = suite(args);
    Outcome::new(v == Verdict::Pass, format!("verdict {v:?}, {:.1} s\n{rows}", took.as_secs_f64()))
}

fn dec_enc_bijectivity() -> Outcome {
    timed_suite(&["dec-roundtrip", "--N", "4", "--max-size", "3", "--exhaustive"], Duration::from_secs(120))
}

fn good_tuple_soundness() -> Outcome {
    match soundness_suite(Dim::new(4).unwrap(), 1, RightZRule::Mirrored) {
        Ok(r) => Outcome::new(
            r.pass,
            format!(
                "{} quads, {} good tuples, {} deletions, {} undecodable, {} deletion mismatches\n",
                r.quads, r.good_tuples, r.deletions, r.undecodable, r.deletion_failures
            ),
        ),
        Err(e) => Outcome::new(false, format!("error: {e}\n")),
    }
}

fn census_bound() -> Outcome {
    plain_suite(&[
        "good-tuple-census",
        "--N",
        "64",
        "--t",
        "1",
        "--quads",
        "4",
        "--samples",
        "100000",
        "--seed",
        "0",
        "--skip-soundness",
    ])
}

fn explicit_norms() -> Outcome {
    timed_suite(&["verify-bounds", "--suite", "oracle", "--N-grid", "4,8,16", "--t", "1,2"], Duration::from_secs(600))
}

fn partial_isometries() -> Outcome {
    plain_suite(&["s-equivalence", "--suite", "witnesses", "--witness-N", "8", "--t", "1"])
}

fn s_equivalence() -> Outcome {
    plain_suite(&["s-equivalence", "--suite", "equivalence", "--N", "4", "--t", "1"])
}

fn commuting_trends() -> Outcome {
    let grid = [4, 8, 16];
    let opts = NormOptions { max_time: Duration::from_secs(600), ..NormOptions::default() };
    let mut detail = String::new();
    for pair in CommutingPair::ALL {
        let r = match commuting_trend(pair, &grid, 1, &opts) {
            Ok(r) => r,
            Err(e) => return Outcome::new(false, detail + &format!("{}: error: {e}\n", pair.id())),
        };
        let values: Vec<String> = r.points.iter().map(|p| p.measured.map_or(p.status.clone(), |v| format!("{v:.6}"))).collect();
        detail += &format!("{}: [{}], slope {:?}, monotone {}\n", r.id, values.join(", "), r.slope, r.monotone);
        if !r.pass {
            let complete = r.points.iter().all(|p| p.measured.is_some());
            let why = if complete { "definite failure" } else { "not computable within budget" };
            return Outcome::new(false, detail + &format!("{}: {why}; remaining pairs not run\n", r.id));
        }
    }
    Outcome::new(true, detail)
}

fn hybrid_chain() -> Outcome {
    let grid = [4, 8, 16];
    let mut detail = String::new();
    for kind in [AdversaryKind::Identity, AdversaryKind::Random] {
        for &n in &grid {
            let adv = AdversarySpec::builtin(kind, n, 1, 1, 0);
            match coupled_gap(n, &adv, 100, 0) {
                Ok(r) => {
                    detail += &format!("coupling 6-7 {kind:?} N={n}: max gap {:.1e}\n", r.max_frobenius_gap);
                    if !r.pass {
                        return Outcome::new(false, detail);
                    }
                }
                Err(e) => return Outcome::new(false, detail + &format!("coupling error: {e}\n")),
            }
        }
    }
    let runs = [(4, 5), (3, 4), (1, 2)];
    for kind in [AdversaryKind::Identity, AdversaryKind::Random] {
        let cp = CurveParams { adversary: kind, monte_carlo: MonteCarlo { samples: 10_000, seed: 0 }, ..CurveParams::default() };
        for (i, j) in runs {
            let mut values = Vec::new();
            for &n in &grid {
                let c = match distance_curve(i, j, &[n], &cp) {
                    Ok(c) => c,
                    Err(e) => return Outcome::new(false, detail + &format!("TD({i},{j}) {kind:?} N={n}: error: {e}\n")),
                };
                let p = &c.points[0];
                detail += &format!("TD({i},{j}) {kind:?} N={n}: {:?} ± {:.1e} ({})\n", p.td, p.td_error, p.status);
                let Some(td) = p.td else {
                    let definite = !p.status.starts_with("budget");
                    let why = if definite { "definite failure" } else { "not computable within budget" };
                    return Outcome::new(false, detail + &format!("{why}; remaining points not run\n"));
                };
                if values.last().is_some_and(|&prev| td >= prev) {
                    return Outcome::new(false, detail + "not decreasing; remaining points not run\n");
                }
                values.push(td);
            }
        }
    }
    Outcome::new(true, detail)
}

fn attack() -> Outcome {
    plain_suite(&["attack-demo", "--N-grid", "4,8,16", "--trials", "1000", "--seed", "0"])
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("dec/enc bijectivity", dec_enc_bijectivity),
        ("good-tuple soundness", good_tuple_soundness),
        ("census bound", census_bound),
        ("explicit-constant norms", explicit_norms),
        ("partial-isometry witnesses", partial_isometries),
        ("S equivalence", s_equivalence),
        ("commuting-norm trends", commuting_trends),
        ("hybrid chain", hybrid_chain),
        ("attack demo", attack),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let mark = if out.pass { "PASS" } else { "FAIL" };
        println!("criterion {} ({name}): {mark} [{:.1} s]", i + 1, start.elapsed().as_secs_f64());
        for line in out.detail.lines() {
            println!("    {line}");
        }
        if !out.pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
