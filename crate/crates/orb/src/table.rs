use clap::Args;
use rayon::prelude::*;

use orbfl::closed_forms::{verify_fl, Regime};
use orbfl::instance::{generate, InstanceError, InstanceSpec};
use orbfl::quadratic_algebras::AlgKind;

use crate::{fl_tsv_header, fl_tsv_row, CmdResult, Status};

fn list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.split(',').filter(|p| !p.trim().is_empty()).map(|p| p.trim().parse::<T>().map_err(|e| e.to_string())).collect()
}

#[derive(Args)]
pub struct TableArgs {
    /// Comma-separated residue field sizes.
    #[arg(long, default_value = "3")]
    q: String,
    #[arg(long, default_value = "small_w")]
    regimes: String,
    #[arg(long, default_value = "unramified,ramified")]
    l_kinds: String,
    /// Conductors 0..=r_max (small_w and unit_w).
    #[arg(long, default_value_t = 2)]
    r_max: u32,
    /// Valuations 1..=v_max (uniformizer_w).
    #[arg(long, default_value_t = 3)]
    v_max: u32,
}

enum Row {
    Done(String, bool),
    Skipped,
    Error(String),
}

fn specs(a: &TableArgs, seed: u64, prec: i32) -> Result<Vec<InstanceSpec>, String> {
    let mut out = Vec::new();
    for q in list::<u64>(&a.q)? {
        for regime in list::<Regime>(&a.regimes)? {
            for l_kind in list::<AlgKind>(&a.l_kinds)? {
                let cases: Vec<(u32, Option<u32>)> = match regime {
                    Regime::UniformizerW => (1..=a.v_max).map(|v| (0, Some(v))).collect(),
                    _ => (0..=a.r_max).map(|r| (r, None)).collect(),
                };
                for (r, v) in cases {
                    let mut s = InstanceSpec::new(q, regime, l_kind, r, v, seed);
                    s.prec = prec;
                    out.push(s);
                }
            }
        }
    }
    Ok(out)
}

fn row(spec: &InstanceSpec, guard: usize) -> Row {
    let g = match generate(spec) {
        Ok(g) => g,
        Err(InstanceError::Orbit(e)) if e.is_guard() => return Row::Skipped,
        Err(e) => return Row::Error(e.to_string()),
    };
    match verify_fl(&g.instance, Some(spec.regime), guard) {
        Ok(rep) => Row::Done(fl_tsv_row(&rep), rep.all_pass()),
        Err(e) if e.is_guard() => Row::Skipped,
        Err(e) => Row::Error(e.to_string()),
    }
}

/// Rows are computed in parallel and printed in sweep order.
pub fn run(a: &TableArgs, seed: u64, prec: i32, guard: usize) -> CmdResult {
    let specs = specs(a, seed, prec)?;
    let rows: Vec<Row> = specs.par_iter().map(|s| row(s, guard)).collect();
    let mut out = vec![format!("{}\tstatus", fl_tsv_header())];
    let mut status = Status::Pass;
    for (s, r) in specs.iter().zip(rows) {
        let blank = |tag: String| {
            let v = s.v.map_or("-".into(), |v| v.to_string());
            format!("{}\t{}\t{}\t{v}\t{}\t-\t-\t-\t-\t-\t{tag}", s.q, s.l_kind, s.r, s.regime)
        };
        let line = match r {
            Row::Done(line, ok) => {
                if !ok {
                    status = status.max(Status::Fail);
                }
                format!("{line}\t{}", if ok { "PASS" } else { "FAIL" })
            }
            Row::Skipped => {
                status = Status::Error;
                blank("SKIPPED(guard)".into())
            }
            Row::Error(e) => {
                status = Status::Error;
                blank(format!("ERROR({})", e.replace('\t', " ")))
            }
        };
        out.push(line);
    }
    Ok((out.join("\n"), status))
}
