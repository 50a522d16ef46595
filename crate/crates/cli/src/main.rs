use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use hasse_core::algebra::{Field, Poly};
use hasse_core::hs::{integrate_derivations, verify_hs, xi_hs, HsDerivation};
use hasse_core::json::{
    coeff_table_to_json, ntable_to_json, subst_to_json, to_canonical_string, Document,
};
use hasse_core::report::Report;
use hasse_core::series::{Euler, RingCoeff, Series};
use hasse_core::subst::{eps_pullback_check, n_coefficients, SubstMap};
use hasse_core::verify::{self, Suite};

#[derive(Parser)]
#[command(name = "hs", version, about = "Hasse-Schmidt derivations, truncated series and substitution maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Input file, or inline JSON starting with `{`. Repeat for binary commands.
    #[arg(long = "in", value_name = "PATH|JSON")]
    inputs: Vec<String>,
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Read all coefficients in characteristic 0 (Q) or in F_p.
    #[arg(long = "char", value_name = "0|p")]
    characteristic: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

#[derive(Subcommand)]
enum Command {
    /// eps(D), or eps-bar with --bar, for an HS-derivation or a unit series.
    Eps {
        #[command(flatten)]
        common: Common,
        /// `total` or a 1-based variable index.
        #[arg(long, default_value = "total")]
        mode: String,
        #[arg(long)]
        bar: bool,
    },
    /// The HS-derivation (or unit) whose eps is the given series.
    EpsInverse {
        #[command(flatten)]
        common: Common,
    },
    /// First input composed with the second (D∘E, φ∘ψ, or the series product).
    Compose {
        #[command(flatten)]
        common: Common,
    },
    /// Inverse of an HS-derivation or unit series.
    Invert {
        #[command(flatten)]
        common: Common,
    },
    /// φ(a) for a substitution map φ and a polynomial series a.
    SubstApply {
        #[command(flatten)]
        common: Common,
    },
    /// φ•D for an HS-derivation, or φ•r / r•φ for a series.
    Act {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Side::Left)]
        side: Side,
    },
    /// The twisted substitution map φ^D.
    PhiD {
        #[command(flatten)]
        common: Common,
    },
    /// The coefficients N^{j,i}_{e,h} of φ and D, with the table C_e(φ,α).
    Ncoeffs {
        #[command(flatten)]
        common: Common,
    },
    /// Randomized identity suites, or checks on given inputs.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Random instances per identity (default 20), or random Leibniz
        /// pairs when checking inputs (default 50).
        #[arg(long)]
        cases: Option<usize>,
    },
    /// ξ(δ) over Δ × {0,1}.
    Xi {
        #[command(flatten)]
        common: Common,
    },
}

/// Failures that map to exit code 2.
struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

enum Output {
    Doc(Document),
    Value(Value, String),
    Report(Report),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(passed) => {
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(InputError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<bool, InputError> {
    let (common, output) = match command {
        Command::Eps { common, mode, bar } => {
            let docs = load(&common, 1)?;
            let out = eps(&docs[0], &mode, bar)?;
            (common, Output::Doc(out))
        }
        Command::EpsInverse { common } => {
            let docs = load(&common, 1)?;
            let out = match &docs[0] {
                Document::DerivationSeries(d) => Document::Hs(integrate_derivations(d)?),
                Document::ScalarSeries(s) => Document::ScalarSeries(s.eps_inverse()?),
                Document::OperatorSeries(s) => Document::OperatorSeries(s.eps_inverse()?),
                other => return Err(wrong(other, "a derivation, scalar or operator series")),
            };
            (common, Output::Doc(out))
        }
        Command::Compose { common } => {
            let docs = load(&common, 2)?;
            let out = match (&docs[0], &docs[1]) {
                (Document::Hs(d), Document::Hs(e)) => Document::Hs(d.compose(e)?),
                (Document::Subst(phi), Document::Subst(psi)) => Document::Subst(phi.compose(psi)?),
                (Document::ScalarSeries(a), Document::ScalarSeries(b)) => Document::ScalarSeries(a.mul(b)?),
                (Document::PolySeries(a), Document::PolySeries(b)) => Document::PolySeries(a.mul(b)?),
                (Document::OperatorSeries(a), Document::OperatorSeries(b)) => Document::OperatorSeries(a.mul(b)?),
                (a, _) => return Err(wrong(a, "two HS-derivations, two substitution maps or two series")),
            };
            (common, Output::Doc(out))
        }
        Command::Invert { common } => {
            let docs = load(&common, 1)?;
            let out = match &docs[0] {
                Document::Hs(d) => Document::Hs(d.inverse()),
                Document::ScalarSeries(s) => Document::ScalarSeries(s.inverse()?),
                Document::PolySeries(s) => Document::PolySeries(s.inverse()?),
                Document::OperatorSeries(s) => Document::OperatorSeries(s.inverse()?),
                other => return Err(wrong(other, "an HS-derivation or a unit series")),
            };
            (common, Output::Doc(out))
        }
        Command::SubstApply { common } => {
            let docs = load(&common, 2)?;
            let phi = as_subst(&docs[0])?;
            let out = match &docs[1] {
                Document::PolySeries(a) => Document::PolySeries(phi.apply(a)?),
                other => return Err(wrong(other, "a polynomial series")),
            };
            (common, Output::Doc(out))
        }
        Command::Act { common, side } => {
            let docs = load(&common, 2)?;
            let phi = as_subst(&docs[0])?;
            let out = act(phi, &docs[1], side)?;
            (common, Output::Doc(out))
        }
        Command::PhiD { common } => {
            let docs = load(&common, 2)?;
            let phi = as_subst(&docs[0])?;
            let d = as_hs(&docs[1])?;
            (common, Output::Doc(Document::Subst(phi.twisted(d)?)))
        }
        Command::Ncoeffs { common } => {
            let docs = load(&common, 2)?;
            let phi = as_subst(&docs[0])?;
            let d = as_hs(&docs[1])?;
            let table = n_coefficients(phi, d)?;
            let value = json!({
                "map": subst_to_json(phi),
                "C": coeff_table_to_json(phi),
                "N": ntable_to_json(&table),
            });
            let mut text = String::new();
            for (e, a, c) in phi.coeff_table() {
                text.push_str(&format!("C_{e}(phi,{a}) = {c}\n"));
            }
            for ((j, i, e, h), v) in &table.entries {
                text.push_str(&format!("N^{{{},{}}}_{{{e},{h}}} = {v}\n", j + 1, i + 1));
            }
            (common, Output::Value(value, text))
        }
        Command::Verify {
            common,
            suite,
            seed,
            jobs,
            cases,
        } => {
            let report = if common.inputs.is_empty() {
                let suite: Suite = suite.parse()?;
                let cases = cases.unwrap_or(verify::Config::default().cases);
                verify::run(suite, verify::Config { seed, cases, jobs })
            } else {
                verify_inputs(&common, seed, cases.unwrap_or(50))?
            };
            (common, Output::Report(report))
        }
        Command::Xi { common } => {
            let docs = load(&common, 1)?;
            let out = match &docs[0] {
                Document::DerivationSeries(d) => Document::Hs(xi_hs(d)?),
                Document::ScalarSeries(s) => Document::ScalarSeries(s.xi()?),
                Document::OperatorSeries(s) => Document::OperatorSeries(s.xi()?),
                other => return Err(wrong(other, "a series with zero constant term")),
            };
            (common, Output::Doc(out))
        }
    };
    emit(&common, output)
}

fn wrong(doc: &Document, expected: &str) -> InputError {
    InputError(format!("expected {expected}, got a {}", doc.kind()))
}

fn as_subst(doc: &Document) -> Result<&SubstMap, InputError> {
    match doc {
        Document::Subst(phi) => Ok(phi),
        other => Err(wrong(other, "a substitution map")),
    }
}

fn as_hs(doc: &Document) -> Result<&HsDerivation, InputError> {
    match doc {
        Document::Hs(d) => Ok(d),
        other => Err(wrong(other, "an HS-derivation")),
    }
}

fn load(common: &Common, count: usize) -> Result<Vec<Document>, InputError> {
    if common.inputs.len() != count {
        return Err(InputError(format!(
            "expected {count} --in argument(s), got {}",
            common.inputs.len()
        )));
    }
    let over = common
        .characteristic
        .map(Field::from_characteristic)
        .transpose()?;
    common
        .inputs
        .iter()
        .map(|src| {
            let text = if src.trim_start().starts_with('{') {
                src.clone()
            } else {
                fs::read_to_string(src).map_err(|e| InputError(format!("{src}: {e}")))?
            };
            let value: Value = serde_json::from_str(&text).map_err(|e| InputError(format!("{src}: {e}")))?;
            Document::from_json(&value, over).map_err(|e| InputError(format!("{src}: {e}")))
        })
        .collect()
}

fn parse_mode(mode: &str, p: usize) -> Result<Euler, InputError> {
    if mode == "total" {
        return Ok(Euler::Total);
    }
    let i: usize = mode
        .parse()
        .map_err(|_| InputError(format!("mode `{mode}` is neither `total` nor a variable index")))?;
    if i == 0 || i > p {
        return Err(InputError(format!("mode {i} is outside 1..={p}")));
    }
    Ok(Euler::Partial(i - 1))
}

fn eps(doc: &Document, mode: &str, bar: bool) -> Result<Document, InputError> {
    fn series<C: RingCoeff>(s: &Series<C>, mode: Euler, bar: bool) -> hasse_core::Result<Series<C>> {
        if bar {
            s.eps_bar(mode)
        } else {
            s.eps(mode)
        }
    }
    Ok(match doc {
        Document::Hs(d) => {
            let mode = parse_mode(mode, d.arity())?;
            Document::DerivationSeries(d.eps_from_images(mode, bar)?)
        }
        Document::ScalarSeries(s) => Document::ScalarSeries(series(s, parse_mode(mode, s.arity())?, bar)?),
        Document::PolySeries(s) => Document::PolySeries(series(s, parse_mode(mode, s.arity())?, bar)?),
        Document::OperatorSeries(s) => Document::OperatorSeries(series(s, parse_mode(mode, s.arity())?, bar)?),
        other => return Err(wrong(other, "an HS-derivation or a unit series")),
    })
}

fn act(phi: &SubstMap, doc: &Document, side: Side) -> Result<Document, InputError> {
    Ok(match (doc, side) {
        (Document::Hs(d), Side::Left) => Document::Hs(phi.act_on_hs(d)?),
        (Document::ScalarSeries(s), _) => {
            // coefficients C_e(φ,α) are polynomials, so scalars are promoted
            let ring = phi.ring();
            if s.field() != ring.field {
                return Err(InputError(format!("field mismatch: {} vs {}", s.field(), ring.field)));
            }
            let lifted = s.map_into(ring, |_, c| Poly::constant(ring, c.clone()));
            Document::PolySeries(phi.act_left(&lifted)?)
        }
        (Document::PolySeries(s), _) => Document::PolySeries(match side {
            Side::Left => phi.act_left(s)?,
            Side::Right => phi.act_right(s)?,
        }),
        (Document::OperatorSeries(s), _) => Document::OperatorSeries(match side {
            Side::Left => phi.act_left(s)?,
            Side::Right => phi.act_right(s)?,
        }),
        (Document::DerivationSeries(s), Side::Left) => Document::DerivationSeries(phi.act_left(s)?),
        (other, _) => return Err(wrong(other, "an HS-derivation or a series (derivations act on the left only)")),
    })
}

/// One HS-derivation or operator series: the HS-derivation checks. A
/// substitution map and an HS-derivation: the pullback formula for `r = D`.
fn verify_inputs(common: &Common, seed: u64, cases: usize) -> Result<Report, InputError> {
    let docs = load(common, common.inputs.len().clamp(1, 2))?;
    match docs.as_slice() {
        [Document::Hs(d)] => Ok(verify_hs(&d.as_operator_series(), cases, 4, seed)),
        [Document::OperatorSeries(r)] => Ok(verify_hs(r, cases, 4, seed)),
        [Document::Subst(phi), Document::Hs(d)] => Ok(eps_pullback_check(phi, d, &d.as_operator_series())?),
        [first, ..] => Err(wrong(first, "an HS-derivation, an operator series, or a substitution map and an HS-derivation")),
        [] => Err(InputError("no input".into())),
    }
}

fn text_of(doc: &Document) -> String {
    match doc {
        Document::Hs(d) => d.to_string(),
        Document::Subst(phi) => phi.to_string(),
        Document::Poly(f) => f.to_string(),
        Document::ScalarSeries(s) => s.to_string(),
        Document::PolySeries(s) => s.to_string(),
        Document::DerivationSeries(s) => s.to_string(),
        Document::OperatorSeries(s) => s.to_string(),
    }
}

fn emit(common: &Common, output: Output) -> Result<bool, InputError> {
    let (text, passed) = match (&output, common.format) {
        (Output::Doc(d), Format::Json) => (to_canonical_string(&d.to_json()), true),
        (Output::Doc(d), Format::Text) => (format!("{}\n", text_of(d)), true),
        (Output::Value(v, _), Format::Json) => (to_canonical_string(v), true),
        (Output::Value(_, t), Format::Text) => (t.clone(), true),
        (Output::Report(r), Format::Json) => (to_canonical_string(&r.to_json()), r.passed()),
        (Output::Report(r), Format::Text) => (r.to_text(), r.passed()),
    };
    match &common.out {
        Some(path) => fs::write(path, text).map_err(|e| InputError(format!("{}: {e}", path.display())))?,
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| InputError(format!("stdout: {e}")))?,
    }
    Ok(passed)
}
