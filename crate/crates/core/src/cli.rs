//! Command-line front end: argument parsing, suite dispatch and exit codes.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::decoder::{roundtrip_suite, soundness_suite};
use crate::error::{Error, Result};
use crate::experiments::adversary::{AdversaryKind, AdversarySpec};
use crate::experiments::attack::{attack_insecure_variant, AttackParams};
use crate::experiments::hybrids::{coupled_gap, distance_curve, CurvePoint, CurveParams, MonteCarlo};
use crate::good_tuples::{census, CensusMode, RelQuad, RightZRule};
use crate::merge_checks::{
    commuting_trend, partial_isometry_witness, s_equivalence_exhaustive, s_equivalence_sampled, CommutingPair, Witness,
};
use crate::oracles::bounds::{catalog, verify_bound, BoundSpec};
use crate::relations::{Dim, Relation};
use crate::report::{self, Check, Row, SuiteOutput, Verdict};
use crate::state::norm::NormOptions;

#[derive(Parser, Debug)]
#[command(name = "qhrom-sim", version, about = "Exact path-recording simulator and numerical verifier")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Directory for the JSON summary and CSV detail files.
    #[arg(long, global = true, default_value = "reports")]
    pub out_dir: PathBuf,
    /// Print the table only.
    #[arg(long, global = true)]
    pub no_files: bool,
    /// Wall-clock budget per norm computation, in seconds.
    #[arg(long, global = true, env = "QHROM_MAX_SECONDS", default_value_t = 600)]
    pub max_seconds: u64,
    /// Memory budget as a cap on labels held by one state or norm component.
    #[arg(long, global = true, env = "QHROM_MAX_LABELS", default_value_t = 4_000_000)]
    pub max_labels: usize,
    /// Keep wall-clock timings in the JSON summary (output is then not reproducible byte for byte).
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Explicit-constant oracle norm bounds on truncated bases.
    VerifyBounds(BoundsArgs),
    /// Trace distances between consecutive hybrids and the coupled H6/H7 check.
    RunHybrids(HybridArgs),
    /// Key recovery against U X^k U and the same script against the full construction.
    AttackDemo(AttackArgs),
    /// Exhaustive dec/enc round trip.
    DecRoundtrip(RoundtripArgs),
    /// Good-tuple fraction against 1 - 22t²/N, plus decodability of every good tuple at small N.
    GoodTupleCensus(CensusArgs),
    /// Merge isometry: stage composition, partial-isometry witnesses, commuting-norm trends.
    SEquivalence(EquivalenceArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::VerifyBounds(_) => "verify-bounds",
            Command::RunHybrids(_) => "run-hybrids",
            Command::AttackDemo(_) => "attack-demo",
            Command::DecRoundtrip(_) => "dec-roundtrip",
            Command::GoodTupleCensus(_) => "good-tuple-census",
            Command::SEquivalence(_) => "s-equivalence",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundSuite {
    /// ‖V^L−F^L‖, ‖V−F‖, ‖F^L†F^L−id‖ and the monogamy bound.
    Oracle,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct BoundsArgs {
    #[arg(long, value_enum, default_value = "oracle")]
    pub suite: BoundSuite,
    /// JSON list of bound specs; replaces the grid flags.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    #[arg(long = "N-grid", value_delimiter = ',', default_values_t = [4usize, 8, 16])]
    pub n_grid: Vec<usize>,
    #[arg(long = "t", value_delimiter = ',', default_values_t = [1usize, 2])]
    pub t: Vec<usize>,
    /// Haar samples for the monogamy bound.
    #[arg(long, default_value_t = 5)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct HybridArgs {
    #[arg(long = "N-grid", value_delimiter = ',', default_values_t = [4usize, 8, 16])]
    pub n_grid: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub t: usize,
    /// Hybrid pairs as i-j.
    #[arg(long, value_delimiter = ',', default_values_t = ["1-2".to_string(), "3-4".into(), "4-5".into(), "6-7".into()])]
    pub pairs: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = ["identity".to_string(), "random".into()])]
    pub adversary: Vec<String>,
    /// Ancilla dimension of the adversary.
    #[arg(long, default_value_t = 1)]
    pub b_dim: u16,
    /// Monte Carlo samples for sampled hybrids.
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    /// Samples for the coupled H6/H7 check.
    #[arg(long, default_value_t = 100)]
    pub coupling_samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct AttackArgs {
    #[arg(long = "N-grid", value_delimiter = ',', default_values_t = [4usize, 8, 16])]
    pub n_grid: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Restrict masks to the top bits of each value.
    #[arg(long)]
    pub key_bits: Option<u32>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RoundtripArgs {
    #[arg(long = "N", default_value_t = 4)]
    pub n: usize,
    /// Cap on |L| + |R|.
    #[arg(long, default_value_t = 3)]
    pub max_size: usize,
    /// Enumerate every input; this is the only mode.
    #[arg(long)]
    pub exhaustive: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RightRule {
    Mirrored,
    AsPrinted,
}

impl From<RightRule> for RightZRule {
    fn from(r: RightRule) -> Self {
        match r {
            RightRule::Mirrored => RightZRule::Mirrored,
            RightRule::AsPrinted => RightZRule::AsPrinted,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CensusArgs {
    #[arg(long = "N", default_value_t = 64)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub t: usize,
    /// Seeded random quadruples with every relation of size t, besides the all-zero one.
    #[arg(long, default_value_t = 4)]
    pub quads: usize,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    /// Count every tuple instead of sampling.
    #[arg(long)]
    pub exhaustive: bool,
    /// Largest universe an exhaustive census may enumerate.
    #[arg(long, default_value_t = 1 << 32)]
    pub census_budget: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "mirrored")]
    pub right_rule: RightRule,
    /// N for the exhaustive decodability check of good tuples.
    #[arg(long = "soundness-N", default_value_t = 4)]
    pub soundness_n: usize,
    #[arg(long, default_value_t = 1)]
    pub soundness_max_size: usize,
    #[arg(long)]
    pub skip_soundness: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MergeSuite {
    /// Stage composition against the closed form.
    Equivalence,
    /// M†M has spectrum in {0, 1}.
    Witnesses,
    /// Decay of the commuting norms.
    Trends,
    All,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EquivalenceArgs {
    #[arg(long, value_enum, default_value = "equivalence")]
    pub suite: MergeSuite,
    #[arg(long = "N", default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub t: usize,
    /// Sample inputs instead of enumerating them.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "witness-N", default_value_t = 8)]
    pub witness_n: usize,
    #[arg(long = "trend-N-grid", value_delimiter = ',', default_values_t = [4usize, 8, 16])]
    pub trend_grid: Vec<usize>,
}

fn check_grid(grid: &[usize]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("empty N grid".into()));
    }
    grid.iter().try_for_each(|&n| Dim::new(n).map(|_| ()))
}

fn parse_pair(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("hybrid pair {s:?} is not of the form i-j with 1 <= i, j <= 7"));
    let (a, b) = s.split_once('-').ok_or_else(bad)?;
    let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if !(1..=7).contains(&a) || !(1..=7).contains(&b) {
        return Err(bad());
    }
    Ok((a, b))
}

/// Rejects bad configurations before any computation starts.
pub fn validate(cmd: &Command) -> Result<()> {
    match cmd {
        Command::VerifyBounds(a) => {
            if a.catalog.is_none() {
                check_grid(&a.n_grid)?;
                if a.t.is_empty() || a.t.contains(&0) {
                    return Err(Error::Config("t values must be positive".into()));
                }
            }
        }
        Command::RunHybrids(a) => {
            check_grid(&a.n_grid)?;
            a.pairs.iter().try_for_each(|p| parse_pair(p).map(|_| ()))?;
            a.adversary.iter().try_for_each(|k| k.parse::<AdversaryKind>().map(|_| ()))?;
            if a.b_dim == 0 || a.samples == 0 {
                return Err(Error::Config("b-dim and samples must be positive".into()));
            }
        }
        Command::AttackDemo(a) => {
            check_grid(&a.n_grid)?;
            if a.trials == 0 {
                return Err(Error::Config("trials must be positive".into()));
            }
        }
        Command::DecRoundtrip(a) => {
            Dim::new(a.n)?;
        }
        Command::GoodTupleCensus(a) => {
            Dim::new(a.n)?;
            Dim::new(a.soundness_n)?;
            if a.samples == 0 && !a.exhaustive {
                return Err(Error::Config("samples must be positive".into()));
            }
        }
        Command::SEquivalence(a) => {
            Dim::new(a.n)?;
            Dim::new(a.witness_n)?;
            check_grid(&a.trend_grid)?;
        }
    }
    Ok(())
}

fn mark(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn norm_options(common: &Common) -> NormOptions {
    NormOptions {
        max_time: Duration::from_secs(common.max_seconds),
        max_component_labels: common.max_labels,
        ..NormOptions::default()
    }
}

fn verify_bounds(a: &BoundsArgs, common: &Common) -> Result<SuiteOutput> {
    let specs: Vec<BoundSpec> = match &a.catalog {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)
            .map_err(|e| Error::Config(format!("catalog {}: {e}", path.display())))?,
        None => catalog(&a.n_grid, &a.t)
            .into_iter()
            .map(|s| BoundSpec { samples: a.samples, seed: a.seed, ..s })
            .collect(),
    };
    let opts = norm_options(common);
    let (mut results, mut rows, mut checks) = (Vec::new(), Vec::new(), Vec::new());
    for spec in &specs {
        match verify_bound(spec, &opts) {
            Ok(r) => {
                rows.push(
                    Row::new("verify-bounds", r.id, r.n).t(r.t).measured(Some(r.measured)).bound(Some(r.bound)).verdict(mark(r.pass)),
                );
                checks.push(Check::done(r.pass));
                results.push(serde_json::to_value(&r)?);
            }
            Err(Error::Budget(msg)) => {
                rows.push(Row::new("verify-bounds", spec.kind.id(), spec.n).t(spec.t).verdict("BUDGET"));
                checks.push(Check { pass: false, complete: false });
                results.push(json!({"spec": spec, "status": format!("budget: {msg}")}));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(SuiteOutput { verdict: Verdict::combine(checks), results: json!({ "bounds": results }), rows })
}

fn run_hybrids(a: &HybridArgs, common: &Common) -> Result<SuiteOutput> {
    let (mut curves, mut couplings, mut rows, mut checks) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for kind in &a.adversary {
        let kind: AdversaryKind = kind.parse()?;
        let cp = CurveParams {
            t: a.t,
            adversary: kind,
            b_dim: a.b_dim,
            adversary_seed: a.seed,
            monte_carlo: MonteCarlo { samples: a.samples, seed: a.seed },
            max_labels: common.max_labels,
        };
        for pair in &a.pairs {
            let (i, j) = parse_pair(pair)?;
            let c = distance_curve(i, j, &a.n_grid, &cp)?;
            // a point outside the oracle's domain, or a rise among computed points, is a definite failure
            let undefined = |p: &CurvePoint| p.status.starts_with("precondition");
            let computed: Vec<f64> = c.points.iter().filter_map(|p| p.td).collect();
            let broken = c.points.iter().any(undefined) || computed.windows(2).any(|w| w[1] >= w[0]);
            let complete = broken || c.points.iter().all(|p| p.td.is_some());
            for p in &c.points {
                let verdict = match p.td {
                    Some(_) => format!("± {:.1e}", p.td_error),
                    None if undefined(p) => "PRECONDITION".into(),
                    None => "BUDGET".into(),
                };
                rows.push(Row::new("run-hybrids", format!("td-{i}-{j}-{kind:?}").to_lowercase(), p.n).t(a.t).measured(p.td).verdict(verdict));
            }
            rows.push(
                Row::new("run-hybrids", format!("trend-{i}-{j}-{kind:?}").to_lowercase(), 0)
                    .t(a.t)
                    .measured(c.slope)
                    .verdict(if complete { mark(c.pass) } else { "BUDGET" }),
            );
            checks.push(Check { pass: c.pass, complete });
            curves.push(c);
        }
        for &n in &a.n_grid {
            let adv = AdversarySpec::builtin(kind, n, a.t, a.b_dim, a.seed);
            let r = coupled_gap(n, &adv, a.coupling_samples, a.seed)?;
            rows.push(
                Row::new("run-hybrids", format!("coupling-6-7-{kind:?}").to_lowercase(), n)
                    .t(a.t)
                    .measured(Some(r.max_frobenius_gap))
                    .bound(Some(1e-9))
                    .verdict(mark(r.pass)),
            );
            checks.push(Check::done(r.pass));
            couplings.push(r);
        }
    }
    Ok(SuiteOutput { verdict: Verdict::combine(checks), results: json!({ "curves": curves, "couplings": couplings }), rows })
}

fn attack_demo(a: &AttackArgs) -> Result<SuiteOutput> {
    let (mut results, mut rows, mut checks) = (Vec::new(), Vec::new(), Vec::new());
    for &n in &a.n_grid {
        let r = attack_insecure_variant(&AttackParams { n, trials: a.trials, seed: a.seed, key_bits: a.key_bits })?;
        rows.push(Row::new("attack-demo", "insecure-success", n).measured(Some(r.insecure_success)).bound(Some(1.0)).verdict(mark(r.insecure_pass)));
        rows.push(
            Row::new("attack-demo", "full-success", n)
                .measured(Some(r.full_success))
                .bound(Some(r.chance))
                .verdict(format!("{} (3σ = {:.4})", mark(r.full_pass), 3.0 * r.sigma)),
        );
        checks.push(Check::done(r.pass));
        results.push(r);
    }
    Ok(SuiteOutput { verdict: Verdict::combine(checks), results: json!({ "attacks": results }), rows })
}

fn dec_roundtrip(a: &RoundtripArgs) -> Result<SuiteOutput> {
    let r = roundtrip_suite(Dim::new(a.n)?, a.max_size)?;
    let rows = vec![
        Row::new("dec-roundtrip", "enc-dec-failures", a.n).measured(Some(r.enc_failures as f64)).bound(Some(0.0)).verdict(mark(r.enc_failures == 0)),
        Row::new("dec-roundtrip", "image-vs-support", a.n)
            .measured(Some(r.image as f64))
            .bound(Some(r.supported as f64))
            .verdict(mark(r.image == r.supported)),
        Row::new("dec-roundtrip", "dec-enc-failures", a.n).measured(Some(r.dec_failures as f64)).bound(Some(0.0)).verdict(mark(r.dec_failures == 0)),
    ];
    Ok(SuiteOutput { verdict: Verdict::combine([Check::done(r.pass)]), results: serde_json::to_value(&r)?, rows })
}

/// The all-zero quadruple of size t, then `count` seeded random ones.
pub fn census_quads(dim: Dim, t: usize, count: usize, seed: u64) -> Result<Vec<RelQuad>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = dim.n();
    let mut out = Vec::with_capacity(count + 1);
    let zero = || Relation::from_pairs((0..t).map(|i| (i as u8, i as u8)));
    out.push(RelQuad::new(zero(), zero(), zero(), zero())?);
    while out.len() < count + 1 {
        let mut rel = || Relation::from_pairs((0..t).map(|_| (rng.random_range(0..n) as u8, rng.random_range(0..n) as u8)).collect::<Vec<_>>());
        if let Ok(q) = RelQuad::new(rel(), rel(), rel(), rel()) {
            out.push(q);
        }
    }
    Ok(out)
}

fn good_tuple_census(a: &CensusArgs) -> Result<SuiteOutput> {
    let dim = Dim::new(a.n)?;
    let mode = if a.exhaustive {
        CensusMode::Exhaustive { budget: a.census_budget }
    } else {
        CensusMode::Sampled { seed: a.seed, samples: a.samples }
    };
    let (mut censuses, mut rows, mut checks) = (Vec::new(), Vec::new(), Vec::new());
    for (i, q) in census_quads(dim, a.t, a.quads, a.seed)?.iter().enumerate() {
        match census(dim, q, a.t, mode, a.right_rule.into()) {
            Ok(r) => {
                rows.push(
                    Row::new("census", format!("quad-{i}"), a.n)
                        .t(a.t)
                        .measured(Some(r.fraction))
                        .bound(Some(r.bound))
                        .verdict(format!("{} (3σ = {:.4})", mark(r.pass), r.three_sigma)),
                );
                checks.push(Check::done(r.pass));
                censuses.push(json!({ "quad": q, "report": r }));
            }
            Err(Error::Budget(msg)) => {
                rows.push(Row::new("census", format!("quad-{i}"), a.n).t(a.t).verdict("BUDGET"));
                checks.push(Check { pass: false, complete: false });
                censuses.push(json!({ "quad": q, "status": format!("budget: {msg}") }));
            }
            Err(e) => return Err(e),
        }
    }
    let soundness = if a.skip_soundness {
        None
    } else {
        let s = soundness_suite(Dim::new(a.soundness_n)?, a.soundness_max_size, a.right_rule.into())?;
        rows.push(
            Row::new("soundness", "undecodable", s.n).t(s.max_size).measured(Some(s.undecodable as f64)).bound(Some(0.0)).verdict(mark(s.undecodable == 0)),
        );
        rows.push(
            Row::new("soundness", "deletion-failures", s.n)
                .t(s.max_size)
                .measured(Some(s.deletion_failures as f64))
                .bound(Some(0.0))
                .verdict(mark(s.deletion_failures == 0)),
        );
        checks.push(Check::done(s.pass));
        Some(s)
    };
    Ok(SuiteOutput { verdict: Verdict::combine(checks), results: json!({ "censuses": censuses, "soundness": soundness }), rows })
}

fn s_equivalence(a: &EquivalenceArgs, common: &Common) -> Result<SuiteOutput> {
    let opts = norm_options(common);
    let want = |s: MergeSuite| a.suite == s || a.suite == MergeSuite::All;
    let mut results = serde_json::Map::new();
    let (mut rows, mut checks) = (Vec::new(), Vec::new());
    if want(MergeSuite::Equivalence) {
        let dim = Dim::new(a.n)?;
        let r = match a.samples {
            Some(k) => s_equivalence_sampled(dim, a.t, k, a.seed)?,
            None => s_equivalence_exhaustive(dim, a.t)?,
        };
        rows.push(Row::new("s-equivalence", "max-discrepancy", a.n).t(a.t).measured(Some(r.max_discrepancy)).bound(Some(1e-10)).verdict(mark(r.pass)));
        checks.push(Check::done(r.pass));
        results.insert("equivalence".into(), serde_json::to_value(&r)?);
    }
    if want(MergeSuite::Witnesses) {
        let mut out = Vec::new();
        for w in Witness::ALL {
            match partial_isometry_witness(w, Dim::new(a.witness_n)?, a.t, &opts) {
                Ok(r) => {
                    rows.push(Row::new("witness", w.id(), a.witness_n).t(a.t).measured(Some(r.residual)).bound(Some(1e-9)).verdict(mark(r.pass)));
                    checks.push(Check::done(r.pass));
                    out.push(serde_json::to_value(&r)?);
                }
                Err(Error::Budget(msg)) => {
                    rows.push(Row::new("witness", w.id(), a.witness_n).t(a.t).verdict("BUDGET"));
                    checks.push(Check { pass: false, complete: false });
                    out.push(json!({"witness": w.id(), "status": format!("budget: {msg}")}));
                }
                Err(e) => return Err(e),
            }
        }
        results.insert("witnesses".into(), Value::Array(out));
    }
    if want(MergeSuite::Trends) {
        let mut out = Vec::new();
        for pair in CommutingPair::ALL {
            let r = commuting_trend(pair, &a.trend_grid, a.t, &opts)?;
            let complete = r.points.iter().all(|p| p.measured.is_some());
            for p in &r.points {
                let verdict = match (p.measured, p.column_lower_bound) {
                    (Some(_), _) => "ok".to_string(),
                    (None, Some(lb)) => format!("BUDGET (column norm {lb:.4})"),
                    (None, None) => "BUDGET".into(),
                };
                rows.push(Row::new("trend", r.id, p.n).t(a.t).measured(p.measured).verdict(verdict));
            }
            // a rise among the computed points fails the trend whatever the missing ones hold
            let computed: Vec<f64> = r.points.iter().filter_map(|p| p.measured).collect();
            let broken = computed.windows(2).any(|w| w[1] >= w[0]);
            let check = Check { pass: r.pass, complete: complete || broken };
            rows.push(
                Row::new("trend", format!("{}-slope", r.id), 0)
                    .t(a.t)
                    .measured(r.slope)
                    .verdict(if check.complete { mark(r.pass) } else { "BUDGET" }),
            );
            checks.push(check);
            out.push(r);
        }
        results.insert("trends".into(), serde_json::to_value(&out)?);
    }
    Ok(SuiteOutput { verdict: Verdict::combine(checks), results: Value::Object(results), rows })
}

/// Runs one parsed command and returns its suite output.
pub fn execute(cmd: &Command, common: &Common) -> Result<SuiteOutput> {
    validate(cmd)?;
    match cmd {
        Command::VerifyBounds(a) => verify_bounds(a, common),
        Command::RunHybrids(a) => run_hybrids(a, common),
        Command::AttackDemo(a) => attack_demo(a),
        Command::DecRoundtrip(a) => dec_roundtrip(a),
        Command::GoodTupleCensus(a) => good_tuple_census(a),
        Command::SEquivalence(a) => s_equivalence(a, common),
    }
}

/// Config block embedded in reports: the subcommand arguments and budgets.
pub fn config_value(cli: &Cli) -> Result<Value> {
    Ok(json!({
        "command": cli.command,
        "max_seconds": cli.common.max_seconds,
        "max_labels": cli.common.max_labels,
    }))
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = execute(&cli.command, &cli.common).and_then(|out| {
        print!("{}", report::table(&out.rows));
        if !cli.common.no_files {
            report::write_files(&cli.common.out_dir, cli.command.name(), &config_value(&cli)?, &out, cli.common.timings)?;
        }
        Ok(out.verdict)
    });
    match outcome {
        Ok(v) => {
            println!("{}: {v:?}", cli.command.name());
            v.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> std::result::Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("qhrom-sim").chain(args.iter().copied()))
    }

    #[test]
    fn flags_parse() {
        let c = parse(&["verify-bounds", "--suite", "oracle", "--N-grid", "4,8", "--t", "1"]).unwrap();
        let Command::VerifyBounds(a) = c.command else { panic!() };
        assert_eq!((a.n_grid, a.t), (vec![4, 8], vec![1]));
        let c = parse(&["dec-roundtrip", "--N", "4", "--max-size", "3", "--exhaustive"]).unwrap();
        assert!(matches!(c.command, Command::DecRoundtrip(RoundtripArgs { n: 4, max_size: 3, exhaustive: true })));
    }

    #[test]
    fn unknown_flag_is_a_usage_error() {
        assert_eq!(run(["qhrom-sim", "dec-roundtrip", "--bogus"]), 2);
        assert_eq!(run(["qhrom-sim", "no-such-command"]), 2);
    }

    #[test]
    fn bad_values_fail_validation() {
        let c = parse(&["run-hybrids", "--pairs", "1-9"]).unwrap();
        assert!(matches!(validate(&c.command), Err(Error::Config(_))));
        let c = parse(&["attack-demo", "--N-grid", "6"]).unwrap();
        assert_eq!(execute(&c.command, &c.common).err().unwrap().exit_code(), 2);
        let c = parse(&["run-hybrids", "--adversary", "sneaky"]).unwrap();
        assert!(validate(&c.command).is_err());
    }

    #[test]
    fn census_quads_are_valid_and_seeded() {
        let dim = Dim::new(16).unwrap();
        let a = census_quads(dim, 1, 3, 5).unwrap();
        assert_eq!(a, census_quads(dim, 1, 3, 5).unwrap());
        assert_eq!(a.len(), 4);
        assert!(a.iter().all(|q| q.max_size() == 1));
    }
}
