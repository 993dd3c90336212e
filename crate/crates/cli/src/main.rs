use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use k3lat_core::bundle::{verify_all, Bundle, Cell, Status, VerifyOptions};
use k3lat_core::classify::{classify_report, Verdict};
use k3lat_core::fibration::{FiberConfiguration, FibrationDoc, NeronSeveri, TrivialLattice};
use k3lat_core::isometry::{generated_by_minimal, is_isometric, minimum, short_vectors};
use k3lat_core::lattice::Lattice;
use k3lat_core::linalg::{int, int_json};
use k3lat_core::{Error, Result};

#[derive(Parser)]
#[command(name = "k3lat", version, about = "Lattices of elliptic K3 surfaces with symplectic group actions")]
struct Cli {
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    /// Directory with fibrations/, actions/, reference/ and catalog/.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trivial lattice of a fibration (file or bundled name).
    Trivial { config: String },
    /// Néron–Severi lattice of a fibration with torsion sections.
    Ns { config: String },
    /// Ω_G for one of the bundled groups.
    Omega {
        group: String,
        /// Skip the minimum computation.
        #[arg(long)]
        no_minimum: bool,
    },
    /// Every bundled cross-check.
    VerifyTable {
        /// Include catalog identifications that need optional data files.
        #[arg(long)]
        extended: bool,
        /// Skip minima and generation by minimal vectors.
        #[arg(long)]
        no_minima: bool,
    },
    /// Candidate Néron–Severi lattices for L² = 2d.
    Classify {
        group: String,
        d: u64,
        /// Search radius for representing 2d by Ω_G^⊥.
        #[arg(long = "box", default_value_t = 6)]
        radius: u32,
    },
    /// Isometry test between two definite lattices.
    Isometry { first: String, second: String },
    /// Vectors with |norm| ≤ bound, up to sign.
    Shortvec {
        lattice: String,
        #[arg(long, default_value_t = 4)]
        bound: u64,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Schema(_) | Error::NotSymmetric | Error::Degenerate | Error::ZeroScale | Error::Unknown(_) => 2,
        Error::WrongSignature(_) => 2,
        Error::Inconsistent(_) | Error::NonIntegralGlue(_) | Error::OddGlue(_) | Error::UndefinedContribution(_) => 3,
        Error::Indefinite => 4,
        Error::MissingCatalog(_) => 5,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn bundle(cli: &Cli) -> Result<Bundle> {
    Bundle::load(cli.data_dir.clone().unwrap_or_else(Bundle::default_dir))
}

fn emit(cli: &Cli, value: &Value, text: &str) {
    if cli.json {
        println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
    } else {
        print!("{text}");
    }
}

fn gram_json(l: &Lattice) -> Value {
    Value::Array(
        (0..l.rank()).map(|i| Value::Array(l.gram().row(i).iter().map(int_json).collect())).collect(),
    )
}

fn gram_text(l: &Lattice) -> String {
    let rows = l.gram_strings();
    let width = rows.iter().flatten().map(|s| s.chars().count()).max().unwrap_or(1);
    let lw = (0..l.rank()).map(|i| l.label(i).chars().count()).max().unwrap_or(0);
    let mut out = String::new();
    for (i, r) in rows.iter().enumerate() {
        out.push_str(&format!("{:>lw$} ", l.label(i)));
        out.push_str(&r.iter().map(|x| format!("{x:>width$}")).collect::<Vec<_>>().join(" "));
        out.push('\n');
    }
    out
}

/// A fibration document from a file path, else a bundled fibration by name.
fn load_fibration(cli: &Cli, arg: &str) -> Result<FibrationDoc> {
    let p = Path::new(arg);
    if p.is_file() {
        let s = std::fs::read_to_string(p).map_err(|e| Error::Schema(format!("{}: {e}", p.display())))?;
        return FibrationDoc::from_json_str(&s);
    }
    Ok(bundle(cli)?.fibration(arg)?.clone())
}

/// A lattice from a JSON file (bare Gram or an object with "gram"),
/// `omega:<group>`, `catalog:<name>[(k)]`, or an expression such as `U+A2(-1)`.
fn load_lattice(cli: &Cli, arg: &str) -> Result<Lattice> {
    let p = Path::new(arg);
    if p.is_file() {
        let s = std::fs::read_to_string(p).map_err(|e| Error::Schema(format!("{}: {e}", p.display())))?;
        let v: Value = serde_json::from_str(&s).map_err(|e| Error::Schema(format!("{}: {e}", p.display())))?;
        return match v.get("gram") {
            Some(g) => Lattice::from_json(g),
            None => Lattice::from_json(&v),
        };
    }
    if let Some(g) = arg.strip_prefix("omega:") {
        let b = bundle(cli)?;
        return Ok(b.omega(b.group(g)?)?.omega.lattice());
    }
    if let Some(rest) = arg.strip_prefix("catalog:") {
        let (name, scale) = match rest.split_once('(') {
            Some((n, k)) => {
                let k: i64 = k
                    .trim_end_matches(')')
                    .replace('−', "-")
                    .parse()
                    .map_err(|_| Error::Schema(format!("bad scale in {arg}")))?;
                (n, k)
            }
            None => (rest, 1),
        };
        let (_, l) = bundle(cli)?.catalog(&name.to_lowercase())?;
        return l.rescale(scale);
    }
    Lattice::from_expression(arg)
}

fn disc_string(l: &Lattice) -> String {
    l.discriminant_group().map(|d| d.group_string()).unwrap_or_else(|_| "degenerate".into())
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Trivial { config } => {
            let doc = load_fibration(cli, config)?;
            let conf = FiberConfiguration::from_doc(&doc)?;
            let tr = TrivialLattice::new(&conf);
            let l = &tr.lattice;
            let desc = tr.description();
            let value = json!({
                "name": doc.name,
                "description": desc,
                "rank": l.rank(),
                "det": l.det().to_string(),
                "disc_group": disc_string(l),
                "labels": (0..l.rank()).map(|i| l.label(i)).collect::<Vec<_>>(),
                "gram": gram_json(l),
            });
            let text = format!(
                "Tr = {desc}\nrank {}, det {}, disc {}\n{}",
                l.rank(),
                l.det(),
                disc_string(l),
                gram_text(l)
            );
            emit(cli, &value, &text);
        }
        Command::Ns { config } => {
            let doc = load_fibration(cli, config)?;
            let ns = NeronSeveri::build(&doc)?;
            let l = &ns.lattice;
            let value = json!({
                "name": doc.name,
                "trivial": ns.trivial.description(),
                "rank": l.rank(),
                "det": l.det().to_string(),
                "disc_group": disc_string(l),
                "index_over_trivial": ns.index.to_string(),
                "torsion_sections": ns.elements.iter().map(|e| e.name.clone()).collect::<Vec<_>>(),
                "labels": (0..l.rank()).map(|i| l.label(i)).collect::<Vec<_>>(),
                "gram": gram_json(l),
            });
            let text = format!(
                "Tr = {}\nNS: rank {}, det {}, disc {}, [NS:Tr] = {}\n{}",
                ns.trivial.description(),
                l.rank(),
                l.det(),
                disc_string(l),
                ns.index,
                gram_text(l)
            );
            emit(cli, &value, &text);
        }
        Command::Omega { group, no_minimum } => {
            let b = bundle(cli)?;
            let g = b.group(group)?;
            let omega = b.omega(g)?.omega.lattice();
            let det = omega.det();
            let (min, gen) = if *no_minimum {
                (None, None)
            } else {
                (Some(minimum(&omega)?), Some(generated_by_minimal(&omega)?))
            };
            let value = json!({
                "group": g.display,
                "rank": omega.rank(),
                "det": det.to_string(),
                "disc_group": disc_string(&omega),
                "minimum": min.as_ref().map(|m| m.to_string()),
                "generated_by_minimal": gen,
                "gram": gram_json(&omega),
            });
            let mut text =
                format!("{}: rank {}, det {}, disc {}", g.display, omega.rank(), det, disc_string(&omega));
            if let (Some(m), Some(gen)) = (&min, gen) {
                text.push_str(&format!(", minimum {m}, generated by minimal vectors: {gen}"));
            }
            text.push('\n');
            emit(cli, &value, &text);
        }
        Command::VerifyTable { extended, no_minima } => {
            let b = bundle(cli)?;
            let cells = verify_all(&b, VerifyOptions { minima: !no_minima, extended: *extended });
            return Ok(report_cells(cli, &cells, *extended));
        }
        Command::Classify { group, d, radius } => {
            let b = bundle(cli)?;
            let c = classify_report(&b, group, *d, *radius)?;
            let value = serde_json::to_value(&c).expect("serializable");
            let mut text = format!("{} with L² = {}: Ω rank {}, moduli dimension {}\n", c.group, 2 * d, c.omega_rank, c.moduli_dimension);
            // one line per distinct summary; the glue vectors are only in --json
            let mut lines: Vec<(String, usize)> = Vec::new();
            for x in &c.candidates {
                let verdict = match &x.verdict {
                    Verdict::Embeddable(r) => format!("embeddable ({r})"),
                    Verdict::NotEmbeddable(r) => format!("not embeddable ({r})"),
                    Verdict::Undetermined(r) => format!("undetermined ({r})"),
                };
                let line = format!("index {}: det {}, disc {}: {verdict}", x.index, x.det, x.disc_group);
                match lines.iter_mut().find(|(l, _)| *l == line) {
                    Some((_, n)) => *n += 1,
                    None => lines.push((line, 1)),
                }
            }
            for (line, n) in lines {
                let times = if n > 1 { format!(" [{n} glue classes]") } else { String::new() };
                text.push_str(&format!("  {line}{times}\n"));
            }
            if c.embeddable_indices().is_empty()
                && c.candidates.iter().all(|x| matches!(x.verdict, Verdict::NotEmbeddable(_)))
            {
                text.push_str("no embeddable candidate\n");
            }
            emit(cli, &value, &text);
        }
        Command::Isometry { first, second } => {
            let a = load_lattice(cli, first)?;
            let b = load_lattice(cli, second)?;
            let r = is_isometric(&a, &b)?;
            let verified = r.as_ref().map(|m| m.transpose().mul(b.gram()).mul(m) == *a.gram());
            let value = json!({
                "isometric": r.is_some(),
                "witness": r.as_ref().map(|m| (0..m.nrows()).map(|i| m.row(i).iter().map(int_json).collect::<Vec<_>>()).collect::<Vec<_>>()),
                "witness_verified": verified,
            });
            let text = match &r {
                Some(m) => format!(
                    "ISOMETRIC (witness Mᵀ·G₂·M = G₁ {})\n{}",
                    if verified == Some(true) { "verified" } else { "FAILED" },
                    m
                ),
                None => "NOT ISOMETRIC\n".to_string(),
            };
            emit(cli, &value, &text);
            if verified == Some(false) {
                return Ok(1);
            }
        }
        Command::Shortvec { lattice, bound } => {
            let l = load_lattice(cli, lattice)?;
            let sv = short_vectors(&l, &int(*bound as i64))?;
            let hist: serde_json::Map<String, Value> =
                sv.histogram().into_iter().map(|(k, v)| (k.to_string(), Value::from(v))).collect();
            let value = json!({
                "bound": bound,
                "count": sv.len(),
                "histogram": hist,
                "vectors": sv.vectors.iter().zip(&sv.norms).map(|(v, n)| json!({
                    "norm": int_json(n),
                    "coords": v.iter().map(int_json).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
            });
            let mut text = format!("{} vectors with |norm| ≤ {bound} (up to sign)\n", sv.len());
            for (k, v) in sv.histogram() {
                text.push_str(&format!("  norm {k}: {v}\n"));
            }
            emit(cli, &value, &text);
        }
    }
    Ok(0)
}

fn report_cells(cli: &Cli, cells: &[Cell], extended: bool) -> u8 {
    let count = |s: Status| cells.iter().filter(|c| c.status == s).count();
    let (pass, fail, skip, xfail) = (count(Status::Pass), count(Status::Fail), count(Status::Skip), count(Status::XFail));
    let missing = cells.iter().any(|c| c.status == Status::Skip && c.detail.contains("not bundled") && c.check == "named-extended");
    let value = json!({
        "cells": cells,
        "summary": {"pass": pass, "fail": fail, "skip": skip, "xfail": xfail},
    });
    let mut text = String::new();
    for c in cells {
        let tag = match c.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
            Status::XFail => "XFAIL",
        };
        text.push_str(&format!("{tag:<5} {:<18} {:<16} {}\n", c.row, c.check, c.detail));
    }
    text.push_str(&format!("{pass} passed, {fail} failed, {xfail} known errata, {skip} skipped\n"));
    emit(cli, &value, &text);
    if fail > 0 {
        1
    } else if extended && missing {
        5
    } else {
        0
    }
}
