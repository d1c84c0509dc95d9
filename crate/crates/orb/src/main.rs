use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use orbfl::base_rings::{ResidueField, Series, SeriesDto};
use orbfl::biquadratic_core::Side;
use orbfl::closed_forms::{verify_afl, verify_fl, FlReport, Regime, Verdict};
use orbfl::instance::{generate, Generated, InstanceSpec, DEFAULT_PREC};
use orbfl::lattice_engine::{enumerate_between, Lattice, LatticeDto, DEFAULT_GUARD};
use orbfl::linalg::Matrix;
use orbfl::orbital_integrals::{orbital_analytic, orbital_geometric, HeckeFunction};
use orbfl::quadratic_algebras::{AlgKind, QuadAlg};
use orbfl::reduction::{shift_pair, verify_orbit_reduction};

mod table;

#[derive(Parser)]
#[command(name = "orb", version, about = "Orbital integrals for biquadratic pairs over F_q((t))")]
struct Cli {
    /// Series precision for generated instances and parsed matrices.
    #[arg(long, global = true)]
    prec: Option<i32>,
    /// Largest quotient length any enumeration may visit.
    #[arg(long, global = true, default_value_t = DEFAULT_GUARD)]
    guard: usize,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Tsv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an instance file.
    Gen(GenArgs),
    /// Analytic orbital integral as a polynomial in u = -q^s.
    Analytic {
        instance: PathBuf,
        /// Hecke function `n,m1,m2,...` (unit when omitted).
        #[arg(long)]
        hecke: Option<HeckeFunction>,
    },
    /// Geometric orbital count.
    Geometric { instance: PathBuf },
    /// Compare brute force, closed form and geometric count.
    VerifyFl { instance: PathBuf },
    /// Compare the derivative at s = 0 with the predicted intersection number.
    VerifyAfl { instance: PathBuf },
    /// Emit the reduced pair over L.
    Reduce {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = SideArg::Analytic)]
        side: SideArg,
    },
    /// Compare the rank-4 orbital integral with the reduced rank-2 one.
    VerifyReduction { instance: PathBuf },
    /// Sweep instances and print one row each.
    Table(table::TableArgs),
    /// Print generator data for a quadratic algebra.
    Algebra {
        #[arg(long)]
        kind: AlgKind,
        #[arg(long)]
        q: u64,
        /// Use the nonsquare twist for the ramified generator.
        #[arg(long)]
        twisted: bool,
    },
    /// Enumerate lattices between two lattices.
    Lattices {
        #[arg(long)]
        q: u64,
        #[arg(long, num_args = 2, value_names = ["TOP", "BOT"])]
        between: Vec<PathBuf>,
        /// Matrix file (rows of series); may be repeated.
        #[arg(long)]
        stable_under: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    q: u64,
    #[arg(long)]
    regime: Regime,
    #[arg(long)]
    l_kind: AlgKind,
    #[arg(long, default_value_t = 0)]
    r: u32,
    #[arg(long)]
    v: Option<u32>,
    #[arg(long)]
    k1_kind: Option<AlgKind>,
    #[arg(long)]
    k2_kind: Option<AlgKind>,
    /// Write to this file instead of stdout.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Analytic,
    Geometric,
}

/// Overall result of a command, mapped to the exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Pass,
    Fail,
    Error,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Error => 2,
        }
    }
}

type CmdResult = Result<(String, Status), String>;

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize")
}

fn load(path: &Path) -> Result<Generated, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Generated::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn verdict_status(pass: bool) -> Status {
    if pass {
        Status::Pass
    } else {
        Status::Fail
    }
}

pub fn fl_tsv_header() -> &'static str {
    "q\tl_kind\tr\tv\tregime\tanalytic\tvalue_at_s0\tclosed_form\tgeometric\tverdicts"
}

pub fn fl_tsv_row(rep: &FlReport) -> String {
    let coeffs = |c: &[u64]| c.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
    let verdicts: Vec<String> = rep.verdicts.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!(
        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        rep.q,
        rep.l_kind,
        rep.r,
        rep.v,
        rep.regime.map_or("-".into(), |r| r.to_string()),
        coeffs(&rep.analytic.u_coeffs),
        rep.analytic.value_at_s0,
        rep.closed_form.as_ref().map_or("-".into(), |c| coeffs(&c.u_coeffs)),
        rep.geometric.map_or("-".into(), |g| g.to_string()),
        verdicts.join(";"),
    )
}

fn matrix_file(field: ResidueField, path: &Path) -> Result<Matrix<Series>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let rows: Vec<Vec<SeriesDto>> = serde_json::from_str(&text)
        .or_else(|_| serde_json::from_str::<LatticeDto>(&text).map(|d| d.basis))
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let rows = rows
        .iter()
        .map(|r| r.iter().map(|s| Series::from_dto(field, s)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(Matrix::from_rows(rows))
}

fn run(cli: &Cli) -> CmdResult {
    let guard = cli.guard;
    let tsv = cli.format == Some(Format::Tsv);
    match &cli.cmd {
        Cmd::Gen(a) => {
            let spec = InstanceSpec {
                q: a.q,
                k1_kind: a.k1_kind.unwrap_or(AlgKind::Unramified),
                k2_kind: a.k2_kind,
                regime: a.regime,
                l_kind: a.l_kind,
                r: a.r,
                v: a.v,
                seed: cli.seed,
                prec: cli.prec.unwrap_or(DEFAULT_PREC),
            };
            let g = generate(&spec).map_err(|e| e.to_string())?;
            let text = g.to_json();
            match &a.out {
                Some(p) => {
                    std::fs::write(p, text + "\n").map_err(|e| format!("{}: {e}", p.display()))?;
                    Ok((String::new(), Status::Pass))
                }
                None => Ok((text, Status::Pass)),
            }
        }
        Cmd::Analytic { instance, hecke } => {
            let g = load(instance)?;
            let f = hecke.clone().unwrap_or_else(HeckeFunction::unit);
            let p = orbital_analytic(&g.instance, &f, guard).map_err(|e| e.to_string())?;
            let d = p.to_dto();
            if tsv {
                let c: Vec<String> = d.u_coeffs.iter().map(u64::to_string).collect();
                let out = format!(
                    "u_coeffs\tu_shift\tvalue_at_s0\tafl_derivative\n{}\t{}\t{}\t{}",
                    c.join(","),
                    d.u_shift,
                    d.value_at_s0,
                    d.afl_derivative
                );
                Ok((out, Status::Pass))
            } else {
                Ok((json(&d), Status::Pass))
            }
        }
        Cmd::Geometric { instance } => {
            let g = load(instance)?;
            let n = orbital_geometric(&g.instance, &HeckeFunction::unit(), guard).map_err(|e| e.to_string())?;
            Ok((json(&serde_json::json!({ "geometric": n })), Status::Pass))
        }
        Cmd::VerifyFl { instance } => {
            let g = load(instance)?;
            let rep = verify_fl(&g.instance, Some(g.spec.regime), guard).map_err(|e| e.to_string())?;
            let status = verdict_status(rep.all_pass());
            let out = if tsv { format!("{}\n{}", fl_tsv_header(), fl_tsv_row(&rep)) } else { json(&rep) };
            Ok((out, status))
        }
        Cmd::VerifyAfl { instance } => {
            let g = load(instance)?;
            let rep = verify_afl(&g.instance, guard).map_err(|e| e.to_string())?;
            Ok((json(&rep), verdict_status(rep.verdict == Verdict::Pass)))
        }
        Cmd::Reduce { instance, side } => {
            let g = load(instance)?;
            let side = match side {
                SideArg::Analytic => Side::Analytic,
                SideArg::Geometric => Side::Geometric,
            };
            let red = shift_pair(&g.instance, side).map_err(|e| e.to_string())?;
            Ok((json(&red.to_dto()), Status::Pass))
        }
        Cmd::VerifyReduction { instance } => {
            let g = load(instance)?;
            let rep = verify_orbit_reduction(&g.instance, guard).map_err(|e| e.to_string())?;
            Ok((json(&rep), verdict_status(rep.passed)))
        }
        Cmd::Table(a) => table::run(a, cli.seed, cli.prec.unwrap_or(DEFAULT_PREC), guard),
        Cmd::Algebra { kind, q, twisted } => {
            let field = ResidueField::with_order(*q).map_err(|e| e.to_string())?;
            let prec = cli.prec.unwrap_or(DEFAULT_PREC);
            let alg = match kind {
                AlgKind::Ramified => QuadAlg::ramified(field, *twisted, prec),
                k => QuadAlg::of_kind(*k, field, prec),
            };
            let out = serde_json::json!({
                "field": field.to_dto(),
                "algebra": alg.to_dto(),
                "generator_trace": alg.gen_trace().to_string(),
                "generator_norm": alg.gen_norm().to_string(),
                "discriminant": alg.discriminant().to_string(),
            });
            Ok((json(&out), Status::Pass))
        }
        Cmd::Lattices { q, between, stable_under } => {
            let field = ResidueField::with_order(*q).map_err(|e| e.to_string())?;
            let lat = |p: &Path| -> Result<Lattice, String> {
                let m = matrix_file(field, p)?;
                orbfl::lattice_engine::hermite_form(&m).map_err(|e| format!("{}: {e}", p.display()))
            };
            let top = lat(&between[0])?;
            let bot = lat(&between[1])?;
            let cons =
                stable_under.iter().map(|p| matrix_file(field, p)).collect::<Result<Vec<_>, _>>()?;
            let found = enumerate_between(&top, &bot, &cons, guard).map_err(|e| e.to_string())?;
            let dtos: Vec<LatticeDto> = found.iter().map(Lattice::to_dto).collect();
            let out = serde_json::json!({ "count": dtos.len(), "lattices": dtos });
            Ok((json(&out), Status::Pass))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((out, status)) => {
            if !out.is_empty() {
                // a closed pipe downstream is not an error of ours
                let _ = writeln!(std::io::stdout().lock(), "{out}");
            }
            ExitCode::from(status.code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Status::Error.code())
        }
    }
}
