//! Command-line front end: `simulate`, `nogo`, `bands` and `slater-rank`.

pub mod error;
pub mod format;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use slaterflo::bands::{measure_origin, LatticeConfig, OriginMeasurement};
use slaterflo::linalg::CMatrix;
use slaterflo::multi::{generic_p1_study, DEFAULT_MAX_TERMS};
use slaterflo::nogo::{
    oracle_check_sampled, simulate_exact_branch, simulate_sampled, Circuit, OracleReport, Transcript, RNG_NAME,
};
use slaterflo::{Choice, Occupation};

pub use error::{CliError, CliResult};

/// Threshold for `--oracle-check`.
pub const ORACLE_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "slaterflo", version, about = "Slater-determinant simulation of fermionic linear optics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a circuit with sampled or forced outcomes on a superposition of determinants.
    Simulate {
        path: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Replay against the Fock-space oracle (at most 6 modes).
        #[arg(long)]
        oracle_check: bool,
        #[arg(long, default_value_t = DEFAULT_MAX_TERMS)]
        max_terms: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a circuit keeping a single determinant by exact branch selection.
    Nogo {
        path: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure the origin of a tight-binding Fermi sea and write a CSV profile.
    Bands {
        #[arg(long)]
        sites: usize,
        #[arg(long)]
        electrons: usize,
        /// 0, 1 or sample
        #[arg(long, default_value = "1")]
        outcome: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report w, its Pfaffian and the Slater number of a two-fermion state.
    SlaterRank {
        /// Two-electron state file.
        path: Option<PathBuf>,
        #[arg(long, num_args = 3, value_names = ["THETA", "PHI", "XI"], allow_negative_numbers = true)]
        angles: Option<Vec<f64>>,
        #[arg(long, default_value_t = 2)]
        electrons: usize,
    },
}

#[derive(Debug, Serialize)]
pub struct TranscriptDoc {
    pub command: &'static str,
    pub generator: &'static str,
    pub seed: Option<u64>,
    pub modes: usize,
    pub electrons: usize,
    pub steps: Vec<RowDoc>,
    pub cumulative_probability: f64,
    pub final_terms: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleDoc>,
}

#[derive(Debug, Serialize)]
pub struct RowDoc {
    pub step: usize,
    pub kind: &'static str,
    pub outcome: Option<String>,
    pub probability: Option<f64>,
    pub cumulative: f64,
    pub terms: usize,
}

#[derive(Debug, Serialize)]
pub struct OracleDoc {
    pub max_probability_deviation: f64,
    pub min_fidelity: f64,
    pub passed: bool,
}

fn transcript_doc(command: &'static str, circuit: &Circuit, t: &Transcript, final_terms: usize) -> TranscriptDoc {
    TranscriptDoc {
        command,
        generator: RNG_NAME,
        seed: t.seed,
        modes: circuit.modes,
        electrons: circuit.electrons,
        steps: t
            .records
            .iter()
            .map(|r| RowDoc {
                step: r.index,
                kind: r.kind,
                outcome: r.outcome.map(|o| o.to_string()),
                probability: r.probability,
                cumulative: r.cumulative,
                terms: r.terms,
            })
            .collect(),
        cumulative_probability: t.cumulative(),
        final_terms,
        oracle: None,
    }
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn load_circuit(path: &Path, err: &mut dyn Write) -> CliResult<Circuit> {
    let text = read(path)?;
    let mut warnings = Vec::new();
    let circuit = format::parse_circuit(&text, &mut warnings).map_err(|e| match e {
        CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
        other => other,
    })?;
    for w in warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    Ok(circuit)
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(CliError::from),
    }
}

fn to_json(doc: &TranscriptDoc) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(doc)? + "\n")
}

pub fn cmd_simulate(
    path: &Path,
    seed: u64,
    oracle_check: bool,
    max_terms: usize,
    out: Option<&Path>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CliResult<()> {
    let circuit = load_circuit(path, stderr)?;
    if oracle_check {
        let (t, sum, report) = oracle_check_sampled(&circuit, seed, max_terms)?;
        let mut doc = transcript_doc("simulate", &circuit, &t, sum.len());
        let passed = report.passes(ORACLE_TOL);
        doc.oracle = Some(OracleDoc {
            max_probability_deviation: report.max_probability_deviation,
            min_fidelity: report.min_fidelity,
            passed,
        });
        emit(&to_json(&doc)?, out, stdout)?;
        if !passed {
            let OracleReport {
                max_probability_deviation,
                min_fidelity,
                ..
            } = report;
            return Err(CliError::OracleCheckFailed {
                deviation: max_probability_deviation,
                fidelity: min_fidelity,
            });
        }
        Ok(())
    } else {
        let (t, sum) = simulate_sampled(&circuit, seed, max_terms)?;
        emit(&to_json(&transcript_doc("simulate", &circuit, &t, sum.len()))?, out, stdout)
    }
}

pub fn cmd_nogo(path: &Path, out: Option<&Path>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    let circuit = load_circuit(path, stderr)?;
    let (t, _) = simulate_exact_branch(&circuit)?;
    emit(&to_json(&transcript_doc("nogo", &circuit, &t, 1))?, out, stdout)
}

/// Shortest round-trip decimal, switching to exponent form for tiny magnitudes.
pub fn number(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-5 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn complex(z: slaterflo::C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{sign}{}i", number(z.re), number(z.im.abs()))
}

/// CSV text for an origin measurement. Comment lines start with `#`.
pub fn bands_csv(m: &OriginMeasurement) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# outcome = {}", m.outcome.label());
    let _ = writeln!(s, "# probability = {}", m.probability);
    s.push_str("x,density_before,density_after,orbital_re,orbital_im,closed_form\n");
    for r in &m.profile {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.x,
            number(r.density_before),
            number(r.density_after),
            number(r.orbital.re),
            number(r.orbital.im),
            number(r.closed_form)
        );
    }
    s
}

pub fn cmd_bands(
    sites: usize,
    electrons: usize,
    outcome: &str,
    seed: u64,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    let cfg = LatticeConfig::new(sites, electrons)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let choice = match outcome {
        "0" => Choice::Forced(Occupation::Empty),
        "1" => Choice::Forced(Occupation::Filled),
        "sample" => Choice::Sample(&mut rng),
        other => return Err(CliError::Parse(format!("--outcome must be 0, 1 or sample, got {other:?}"))),
    };
    let m = measure_origin(&cfg, choice)?;
    emit(&bands_csv(&m), out, stdout)
}

fn format_matrix(m: &CMatrix) -> String {
    let mut s = String::new();
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|z| format!("{:+.6}{:+.6}i", z.re, z.im)).collect();
        let _ = writeln!(s, "  [{}]", cells.join("  "));
    }
    s
}

pub fn cmd_slater_rank(
    path: Option<&Path>,
    angles: Option<&[f64]>,
    electrons: usize,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    let mut s = String::new();
    match (path, angles) {
        (None, Some(&[theta, phi, xi])) => {
            let study = generic_p1_study(theta, phi, xi, electrons)?;
            let n = electrons;
            let _ = writeln!(s, "w (modes 0, 1, {n}, {}):", n + 1);
            s.push_str(&format_matrix(study.w.matrix()));
            let _ = writeln!(s, "pfaffian = {}", complex(study.pfaffian));
            let _ = writeln!(s, "|pfaffian| = {}", number(study.pfaffian.norm()));
            let _ = writeln!(s, "closed_form = {}", number(study.closed_form));
            let _ = writeln!(s, "slater_number = {}", study.slater_number);
        }
        (Some(p), None) => {
            let state = format::parse_state(&read(p)?).map_err(|e| match e {
                CliError::Parse(m) => CliError::Parse(format!("{}: {m}", p.display())),
                other => other,
            })?;
            let w = state.two_fermion_w()?;
            s.push_str("w:\n");
            s.push_str(&format_matrix(w.matrix()));
            if w.dim() % 2 == 0 {
                let pf = w.pfaffian()?;
                let _ = writeln!(s, "pfaffian = {}", complex(pf));
                let _ = writeln!(s, "|pfaffian| = {}", number(pf.norm()));
            } else {
                s.push_str("pfaffian = n/a (odd dimension)\n");
            }
            let _ = writeln!(s, "slater_number = {}", w.slater_number());
        }
        _ => {
            return Err(CliError::Parse(
                "slater-rank needs either a state file or --angles THETA PHI XI".into(),
            ))
        }
    }
    emit(&s, None, stdout)
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = stdout.write_all(text.as_bytes());
            } else {
                let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
                let _ = writeln!(stderr, "error[ParseError]: {first}");
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Simulate {
            path,
            seed,
            oracle_check,
            max_terms,
            out,
        } => cmd_simulate(path, *seed, *oracle_check, *max_terms, out.as_deref(), stdout, stderr),
        Command::Nogo { path, out } => cmd_nogo(path, out.as_deref(), stdout, stderr),
        Command::Bands {
            sites,
            electrons,
            outcome,
            seed,
            out,
        } => cmd_bands(*sites, *electrons, outcome, *seed, out.as_deref(), stdout),
        Command::SlaterRank {
            path,
            angles,
            electrons,
        } => cmd_slater_rank(path.as_deref(), angles.as_deref(), *electrons, stdout),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            let _ = writeln!(stderr, "error[{}]: {message}", e.kind());
            e.exit_code()
        }
    }
}
