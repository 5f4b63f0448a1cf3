//! Command-line surface: argument parsing, command implementations that
//! return their output as text, and exit-code mapping. The `earac` binary is
//! a thin wrapper around [`run`].

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::codetree::{self, CodeTree};
use crate::error::{Error, Result};
use crate::exactnum::ExactValue;
use crate::montecarlo::{self, Targets};
use crate::optimizer;
use crate::session::{self, SessionConfig, TransportKind};

/// Environment variable supplying the default seed; `--seed` overrides it.
pub const SEED_ENV: &str = "EARAC_SEED";
pub const DEFAULT_SEED: u64 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

/// Digits after the point for table columns.
const TABLE_DIGITS: u32 = 5;
/// Digits after the point for `eval`, `bounds` and session summaries.
const DETAIL_DIGITS: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Aligned human-readable text.
    Table,
    Csv,
    /// Pretty-printed JSON with the same fields as the other formats.
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    /// The grouping rule (pairs first, then triples, layer by layer).
    Paper,
    /// Best mean advantage over the bits.
    OptAvg,
    /// Best worst-bit advantage.
    OptMin,
}

#[derive(Debug, Parser)]
#[command(name = "earac", version, about = "Entanglement-assisted random access codes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grouping-rule codes next to the published QRAC values.
    Table {
        #[arg(long, default_value_t = 15, value_parser = clap::value_parser!(u64).range(2..=200))]
        max_n: u64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Builds a tree and writes it in the tree file format.
    Build {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=10_000))]
        n: u64,
        #[arg(long, value_enum, default_value_t = Strategy::Paper)]
        strategy: Strategy,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact per-bit success probabilities of a tree file.
    Eval {
        tree: PathBuf,
        /// Also report the average over a shared random relabelling.
        #[arg(long)]
        sr: bool,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Monte Carlo estimate against the exact prediction.
    Simulate {
        tree: PathBuf,
        #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, env = SEED_ENV)]
        seed: Option<u64>,
        /// Single bit to estimate; all bits when omitted.
        #[arg(long)]
        target: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Upper and lower bounds for `n` bits and the achieved values.
    Bounds {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=10_000))]
        n: u64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Runs Alice, Bob and the broker as separate endpoints.
    DemoSession {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=64))]
        n: u64,
        /// Input bits such as `01101`; drawn from the seed when omitted.
        #[arg(long, value_parser = parse_bits)]
        bits: Option<Bits>,
        #[arg(long, default_value_t = 0)]
        target: usize,
        #[arg(long, default_value = "inproc", value_parser = parse_transport)]
        transport: TransportKind,
        #[arg(long, env = SEED_ENV)]
        seed: Option<u64>,
        /// Relabel bits with a shared random permutation derived from the seed.
        #[arg(long)]
        sr: bool,
        /// Also write the full wire transcript to this file.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
}

/// Input bits given on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bits(pub Vec<u8>);

fn parse_bits(text: &str) -> std::result::Result<Bits, String> {
    text.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(format!("bits must be 0 or 1, got {other:?}")),
        })
        .collect::<std::result::Result<Vec<u8>, String>>()
        .and_then(|b| {
            if b.is_empty() {
                Err("bits must not be empty".into())
            } else {
                Ok(Bits(b))
            }
        })
}

fn parse_transport(text: &str) -> std::result::Result<TransportKind, String> {
    text.parse().map_err(|e: Error| e.to_string())
}

/// Exit status for a library error.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Invariant(_) | Error::Protocol(_) => EXIT_INVARIANT,
        _ => EXIT_DATA,
    }
}

/// Parses `args` (including the program name), runs the command and writes
/// its output. Returns the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli.command) {
        Ok(outcome) => {
            let _ = out.write_all(outcome.text.as_bytes());
            if outcome.ok {
                EXIT_OK
            } else {
                let _ = writeln!(err, "earac: statistical check failed");
                EXIT_INVARIANT
            }
        }
        Err(e) => {
            let _ = writeln!(err, "earac: {e}");
            exit_code(&e)
        }
    }
}

/// Output of one command. `ok` is false only when a simulation check fails.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub ok: bool,
}

impl From<String> for Outcome {
    fn from(text: String) -> Self {
        Outcome { text, ok: true }
    }
}

pub fn execute(command: Command) -> Result<Outcome> {
    match command {
        Command::Table { max_n, format } => cmd_table(max_n as usize, format).map(Outcome::from),
        Command::Build { n, strategy, out } => {
            cmd_build(n as usize, strategy, out.as_deref()).map(Outcome::from)
        }
        Command::Eval { tree, sr, format } => cmd_eval(&tree, sr, format).map(Outcome::from),
        Command::Simulate {
            tree,
            trials,
            seed,
            target,
            format,
        } => cmd_simulate(&tree, trials, seed.unwrap_or(DEFAULT_SEED), target, format),
        Command::Bounds { n, format } => cmd_bounds(n, format).map(Outcome::from),
        Command::DemoSession {
            n,
            bits,
            target,
            transport,
            seed,
            sr,
            transcript,
        } => cmd_demo_session(
            n as usize,
            bits.map(|b| b.0),
            target,
            transport,
            seed.unwrap_or(DEFAULT_SEED),
            sr,
            transcript.as_deref(),
        )
        .map(Outcome::from),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    text
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Error::Invariant(format!("csv encoding: {e}")))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Invariant(format!("csv encoding: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Invariant(e.to_string()))
}

fn dec(v: &ExactValue, digits: u32) -> String {
    v.to_decimal_string(digits)
}

// ---- table ----------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Our value equals the published one.
    PaperMatch,
    /// The published value is not what the grouping rule gives; both shown.
    ErratumFlagged,
    /// Size not in the published table.
    NotInTable,
}

impl Provenance {
    fn label(self) -> &'static str {
        match self {
            Provenance::PaperMatch => "paper-match",
            Provenance::ErratumFlagged => "erratum-flagged",
            Provenance::NotInTable => "not-in-table",
        }
    }
}

/// Published QRAC success probabilities with shared randomness, quoted to
/// five decimals (numerical optimum, not re-derived here). `n = 2, 3` are
/// the exact values `½(1 + 1/√n)`.
pub fn qrac_value(n: usize) -> Option<ExactValue> {
    let published = |milli: i64| Some(ExactValue::ratio(milli, 100_000));
    match n {
        2 | 3 => Some(ExactValue::inv_sqrt(n as u64)?.half_plus_half()),
        4 => published(74148),
        5 => published(71358),
        6 => published(69405),
        7 => published(67864),
        8 => published(66663),
        9 => published(65689),
        10 => published(64820),
        11 => published(64105),
        12 => published(63487),
        15 => published(62036),
        _ => None,
    }
}

/// Published code values that disagree with the grouping rule.
pub fn printed_erratum(n: usize) -> Option<ExactValue> {
    match n {
        // (52 + √6)/80
        8 => Some(ExactValue::ratio(13, 20) + ExactValue::sqrt6() * ExactValue::ratio(1, 80)),
        // (60 + 3√2 + 8√3)/120
        11 => Some(
            ExactValue::ratio(1, 2)
                + ExactValue::sqrt2() * ExactValue::ratio(1, 40)
                + ExactValue::sqrt3() * ExactValue::ratio(1, 15),
        ),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub n: usize,
    pub qrac_p: Option<ExactValue>,
    /// Grouping-rule tree, averaged over shared random relabellings.
    pub earac_exact: ExactValue,
    /// `earac − qrac`, exact.
    pub delta_advantage: Option<ExactValue>,
    pub provenance: Provenance,
    pub printed: Option<ExactValue>,
    /// Best tree for the mean over bits.
    pub optimal: ExactValue,
}

impl TableRow {
    pub fn earac_decimal(&self) -> String {
        dec(&self.earac_exact, TABLE_DIGITS)
    }

    pub fn delta_decimal(&self) -> Option<String> {
        self.delta_advantage.as_ref().map(|d| dec(d, TABLE_DIGITS))
    }

    fn record(&self) -> TableRecord {
        TableRecord {
            n: self.n,
            qrac_p: self.qrac_p.as_ref().map(|q| dec(q, TABLE_DIGITS)),
            earac_exact: self.earac_exact.to_string(),
            earac_decimal: self.earac_decimal(),
            delta_advantage: self.delta_decimal(),
            provenance: self.provenance,
            printed_exact: self.printed.as_ref().map(ToString::to_string),
            printed_decimal: self.printed.as_ref().map(|p| dec(p, TABLE_DIGITS)),
            optimal_exact: self.optimal.to_string(),
            optimal_decimal: dec(&self.optimal, TABLE_DIGITS),
        }
    }
}

#[derive(Debug, Serialize)]
struct TableRecord {
    n: usize,
    qrac_p: Option<String>,
    earac_exact: String,
    earac_decimal: String,
    delta_advantage: Option<String>,
    provenance: Provenance,
    printed_exact: Option<String>,
    printed_decimal: Option<String>,
    optimal_exact: String,
    optimal_decimal: String,
}

/// Rows for `n = 2..=max_n`.
pub fn table_rows(max_n: usize) -> Result<Vec<TableRow>> {
    if max_n < 2 {
        return Err(Error::InvalidSize("the table starts at n = 2".into()));
    }
    let optimal = optimizer::DpTable::build(optimizer::Objective::Average, max_n)?;
    (2..=max_n)
        .map(|n| {
            let tree = codetree::build_paper_tree(n)?;
            let earac_exact = codetree::sr_average(&tree);
            let qrac_p = qrac_value(n);
            let printed = printed_erratum(n);
            let provenance = match (&qrac_p, &printed) {
                (None, _) => Provenance::NotInTable,
                (Some(_), Some(_)) => Provenance::ErratumFlagged,
                (Some(_), None) => Provenance::PaperMatch,
            };
            let delta_advantage = qrac_p.as_ref().map(|q| &earac_exact - q);
            Ok(TableRow {
                n,
                qrac_p,
                earac_exact,
                delta_advantage,
                provenance,
                printed,
                optimal: optimal.get(n).expect("built up to max_n").probability(),
            })
        })
        .collect()
}

pub fn cmd_table(max_n: usize, format: Format) -> Result<String> {
    let rows = table_rows(max_n)?;
    let records: Vec<TableRecord> = rows.iter().map(TableRow::record).collect();
    match format {
        Format::Json => Ok(to_json(&records)),
        Format::Csv => to_csv(&records),
        Format::Table => {
            let mut out = String::new();
            let width = records
                .iter()
                .map(|r| r.earac_exact.len())
                .max()
                .unwrap_or(0)
                .max("earac_exact".len());
            out.push_str(&format!(
                "{:>3}  {:>7}  {:<width$}  {:>7}  {:>7}  {}\n",
                "n", "qrac_p", "earac_exact", "earac", "delta", "provenance"
            ));
            for r in &records {
                out.push_str(&format!(
                    "{:>3}  {:>7}  {:<width$}  {:>7}  {:>7}  {}\n",
                    r.n,
                    r.qrac_p.as_deref().unwrap_or("-"),
                    r.earac_exact,
                    r.earac_decimal,
                    r.delta_advantage.as_deref().unwrap_or("-"),
                    r.provenance.label(),
                ));
            }
            for r in records.iter().filter(|r| r.printed_exact.is_some()) {
                out.push_str(&format!(
                    "n={}: printed {} ({}), grouping rule {} ({}), optimal {} ({})\n",
                    r.n,
                    r.printed_exact.as_deref().unwrap_or_default(),
                    r.printed_decimal.as_deref().unwrap_or_default(),
                    r.earac_exact,
                    r.earac_decimal,
                    r.optimal_exact,
                    r.optimal_decimal,
                ));
            }
            Ok(out)
        }
    }
}

// ---- build / eval ---------------------------------------------------------

pub fn build_tree(n: usize, strategy: Strategy) -> Result<CodeTree> {
    match strategy {
        Strategy::Paper => codetree::build_paper_tree(n),
        Strategy::OptAvg => Ok(optimizer::best_avg_tree(n)?.tree),
        Strategy::OptMin => Ok(optimizer::best_min_tree(n)?.tree),
    }
}

/// Writes the tree to `out`, or returns the file text when `out` is `None`.
pub fn cmd_build(n: usize, strategy: Strategy, out: Option<&Path>) -> Result<String> {
    let tree = build_tree(n, strategy)?;
    match out {
        Some(path) => {
            tree.save(path)?;
            Ok(format!("wrote {}: {tree}\n", path.display()))
        }
        None => Ok(tree.to_file_string()),
    }
}

#[derive(Debug, Serialize)]
struct BitRecord {
    bit: usize,
    k: u32,
    j: u32,
    exact: String,
    decimal: String,
}

#[derive(Debug, Serialize)]
struct EvalRecord {
    tree: String,
    n: usize,
    ebits: usize,
    bits: Vec<BitRecord>,
    min_exact: String,
    min_decimal: String,
    sr_average_exact: Option<String>,
    sr_average_decimal: Option<String>,
}

fn eval_record(tree: &CodeTree, with_sr: bool) -> Result<EvalRecord> {
    tree.validate()?;
    let bits = codetree::leaf_profiles(tree)
        .into_iter()
        .enumerate()
        .map(|(bit, profile)| {
            let p = codetree::exact_bit_probability(profile);
            BitRecord {
                bit,
                k: profile.k,
                j: profile.j,
                decimal: dec(&p, DETAIL_DIGITS),
                exact: p.to_string(),
            }
        })
        .collect();
    let min = codetree::min_probability(tree);
    let sr = with_sr.then(|| codetree::sr_average(tree));
    Ok(EvalRecord {
        tree: tree.to_string(),
        n: tree.leaf_count(),
        ebits: tree.ebit_count(),
        bits,
        min_decimal: dec(&min, DETAIL_DIGITS),
        min_exact: min.to_string(),
        sr_average_decimal: sr.as_ref().map(|v| dec(v, DETAIL_DIGITS)),
        sr_average_exact: sr.map(|v| v.to_string()),
    })
}

pub fn cmd_eval(tree_path: &Path, with_sr: bool, format: Format) -> Result<String> {
    let tree = CodeTree::load(tree_path)?;
    let record = eval_record(&tree, with_sr)?;
    match format {
        Format::Json => Ok(to_json(&record)),
        Format::Csv => to_csv(&record.bits),
        Format::Table => {
            let mut out = format!("tree {} (n={}, ebits={})\n", record.tree, record.n, record.ebits);
            let width = record
                .bits
                .iter()
                .map(|b| b.exact.len())
                .chain([record.min_exact.len(), "exact".len()])
                .chain(record.sr_average_exact.as_ref().map(String::len))
                .max()
                .unwrap_or(0);
            out.push_str(&format!("{:>10}  {:>2}  {:>2}  {:<width$}  decimal\n", "bit", "k", "j", "exact"));
            for b in &record.bits {
                out.push_str(&format!(
                    "{:>10}  {:>2}  {:>2}  {:<width$}  {}\n",
                    b.bit, b.k, b.j, b.exact, b.decimal
                ));
            }
            out.push_str(&format!("{:>10}  {:>2}  {:>2}  {:<width$}  {}\n", "min", "", "", record.min_exact, record.min_decimal));
            if let (Some(e), Some(d)) = (&record.sr_average_exact, &record.sr_average_decimal) {
                out.push_str(&format!("{:>10}  {:>2}  {:>2}  {:<width$}  {}\n", "sr_average", "", "", e, d));
            }
            Ok(out)
        }
    }
}

// ---- simulate -------------------------------------------------------------

/// Runs the estimate with one retry; `ok` is false when both runs fail.
pub fn cmd_simulate(
    tree_path: &Path,
    trials: u64,
    seed: u64,
    target: Option<usize>,
    format: Format,
) -> Result<Outcome> {
    let tree = CodeTree::load(tree_path)?;
    let targets = target.map_or(Targets::All, Targets::One);
    let report = montecarlo::estimate_with_retry(&tree, trials, seed, targets)?;
    let text = match format {
        Format::Json => to_json(&report),
        Format::Csv => {
            let mut rows = report.first.bits.clone();
            if let Some(retry) = &report.retry {
                rows.extend(retry.bits.iter().cloned());
            }
            to_csv(&rows)?
        }
        Format::Table => {
            let mut out = format!("tree {tree}\n");
            out.push_str(&report.first.to_table());
            if let Some(retry) = &report.retry {
                out.push_str("retry with derived seed\n");
                out.push_str(&retry.to_table());
            }
            out.push_str(if report.pass { "result pass\n" } else { "result FAIL\n" });
            out
        }
    };
    Ok(Outcome {
        text,
        ok: report.pass,
    })
}

// ---- bounds ---------------------------------------------------------------

#[derive(Debug, Serialize)]
struct BoundsRecord {
    n: u64,
    upper_exact: Option<String>,
    upper_decimal: String,
    smooth_size: u64,
    lower_exact: String,
    lower_decimal: String,
    best_average_exact: String,
    best_average_decimal: String,
    best_minimum_exact: String,
    best_minimum_decimal: String,
    ic_lhs: f64,
    ic_holds: bool,
}

pub fn cmd_bounds(n: u64, format: Format) -> Result<String> {
    let size = usize::try_from(n).map_err(|_| Error::InvalidSize(format!("n = {n} is too large")))?;
    let upper = optimizer::upper_bound(n)?;
    let lower = optimizer::lower_bound(n)?;
    let avg = optimizer::best_avg_tree(size)?.probability();
    let min = optimizer::best_min_tree(size)?.probability();
    let ic = optimizer::ic_check(n, avg.to_f64());
    let record = BoundsRecord {
        n,
        upper_exact: upper.exact.as_ref().map(ToString::to_string),
        upper_decimal: dec_prefix(&upper.decimal, DETAIL_DIGITS),
        smooth_size: optimizer::smallest_23_smooth_geq(n)?,
        lower_exact: lower.to_string(),
        lower_decimal: dec(&lower, DETAIL_DIGITS),
        best_average_exact: avg.to_string(),
        best_average_decimal: dec(&avg, DETAIL_DIGITS),
        best_minimum_exact: min.to_string(),
        best_minimum_decimal: dec(&min, DETAIL_DIGITS),
        ic_lhs: ic.lhs,
        ic_holds: ic.holds,
    };
    match format {
        Format::Json => Ok(to_json(&record)),
        Format::Csv => to_csv(&[record]),
        Format::Table => {
            let r = &record;
            let mut out = format!("n {}\n", r.n);
            out.push_str(&format!(
                "upper         {}{}\n",
                r.upper_decimal,
                r.upper_exact.as_ref().map(|e| format!("  = {e}")).unwrap_or_default()
            ));
            out.push_str(&format!(
                "lower         {}  = {}  (3-smooth size {})\n",
                r.lower_decimal, r.lower_exact, r.smooth_size
            ));
            out.push_str(&format!("best average  {}  = {}\n", r.best_average_decimal, r.best_average_exact));
            out.push_str(&format!("best minimum  {}  = {}\n", r.best_minimum_decimal, r.best_minimum_exact));
            out.push_str(&format!(
                "ic check      n(1-h(p)) = {:.6} at best average: {}\n",
                r.ic_lhs,
                if r.ic_holds { "holds" } else { "VIOLATED" }
            ));
            Ok(out)
        }
    }
}

/// Rounds a longer decimal rendering to `digits` places by exact integer
/// arithmetic on its digit string.
fn dec_prefix(decimal: &str, digits: u32) -> String {
    let value: ExactValue = match decimal.split_once('.') {
        Some((int, frac)) => {
            let den = num_bigint::BigInt::from(10u32).pow(frac.len() as u32);
            let num: num_bigint::BigInt = format!("{int}{frac}").parse().expect("decimal digits");
            ExactValue::rational(crate::exactnum::Rational::new(num, den))
        }
        None => decimal.parse().expect("integer"),
    };
    dec(&value, digits)
}

// ---- demo-session ---------------------------------------------------------

pub fn cmd_demo_session(
    n: usize,
    bits: Option<Vec<u8>>,
    target: usize,
    transport: TransportKind,
    seed: u64,
    sr: bool,
    transcript: Option<&Path>,
) -> Result<String> {
    let tree = codetree::build_paper_tree(n)?;
    let bits = match bits {
        Some(b) if b.len() == n => b,
        Some(b) => {
            return Err(Error::InvalidSize(format!("{} bits given for n = {n}", b.len())));
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| u8::from(rng.gen::<bool>())).collect()
        }
    };
    let config = SessionConfig {
        broker_seed: seed,
        sr_seed: sr.then_some(seed),
    };
    let result = session::run_session(&tree, &bits, target, transport, config)?;
    let text = result.to_transcript_text();
    if let Some(path) = transcript {
        std::fs::write(path, &text)?;
    }
    let classical = result.classical_bits();
    if classical != 1 {
        return Err(Error::Invariant(format!("{classical} classical bits crossed to Bob")));
    }
    let bit_text: String = bits.iter().map(|b| char::from(b'0' + b)).collect();
    let mut out = format!("tree {tree}\nbits {bit_text} target {target}\n");
    out.push_str(&text);
    out.push_str(&format!(
        "guess {} actual {} ({})\nclassical bits Alice->Bob: {classical}\n",
        result.guess,
        bits[target],
        if result.guess == bits[target] { "correct" } else { "wrong" },
    ));
    let p = montecarlo::exact_for(&tree, target)?;
    out.push_str(&format!("success probability for this bit {} = {p}\n", dec(&p, DETAIL_DIGITS)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("earac").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn rows_carry_flags_and_deltas() {
        let rows = table_rows(15).unwrap();
        let row = |n: usize| rows.iter().find(|r| r.n == n).unwrap();
        assert_eq!(row(6).delta_decimal().unwrap(), "0.01007");
        assert_eq!(row(12).delta_decimal().unwrap(), "0.00947");
        assert_eq!(row(2).delta_decimal().unwrap(), "0.00000");
        assert_eq!(row(8).provenance, Provenance::ErratumFlagged);
        assert_eq!(row(11).provenance, Provenance::ErratumFlagged);
        assert_eq!(row(13).provenance, Provenance::NotInTable);
        assert_eq!(row(5).provenance, Provenance::PaperMatch);
        assert_eq!(row(8).optimal, optimizer::upper_bound(8).unwrap().exact.unwrap());
        assert!(table_rows(1).is_err());
    }

    #[test]
    fn decimal_prefix_rounds() {
        assert_eq!(dec_prefix("0.72360679774997896964", 5), "0.72361");
        assert_eq!(dec_prefix("0.75000000000000000000", 3), "0.750");
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_args(&[]).0, EXIT_USAGE);
        assert_eq!(run_args(&["table", "--max-n", "1"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["build", "--n", "5", "--strategy", "best"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["demo-session", "--n", "3", "--bits", "012"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["demo-session", "--n", "3", "--transport", "udp"]).0, EXIT_USAGE);
        let (code, out, _) = run_args(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("demo-session"));
    }

    #[test]
    fn data_errors_exit_three() {
        let (code, _, err) = run_args(&["eval", "/nonexistent/tree.txt"]);
        assert_eq!(code, EXIT_DATA);
        assert!(err.starts_with("earac: "));
        assert_eq!(run_args(&["demo-session", "--n", "3", "--target", "3"]).0, EXIT_DATA);
        assert_eq!(run_args(&["demo-session", "--n", "3", "--bits", "01"]).0, EXIT_DATA);
    }

    #[test]
    fn invariant_errors_exit_four() {
        assert_eq!(exit_code(&Error::Invariant("x".into())), EXIT_INVARIANT);
        assert_eq!(exit_code(&Error::Protocol("x".into())), EXIT_INVARIANT);
        assert_eq!(exit_code(&Error::UnknownLeaf(3)), EXIT_DATA);
    }
}
