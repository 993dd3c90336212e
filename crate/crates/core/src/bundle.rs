//! Bundled data: fibrations, base actions, reference Gram matrices and
//! catalog lattices, plus the table verification pipeline.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fibration::{parse_rational, ActionDoc, FibrationDoc, GramRef, NeronSeveri};
use crate::invariants::{
    action_on_discriminant, anti_isometric_glue, coinvariant_lattice, glued_invariant, invariant_sublattice,
    restrict_action, GroupAction, GluedInvariant,
};
use crate::isometry::{generated_by_minimal, is_isometric, minimum, short_vectors};
use crate::lattice::{DiscriminantGroup, Lattice, LatticeIsometry, Sublattice};
use crate::linalg::{int, Rat};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Expected {
    pub rank: usize,
    pub det: String,
    pub disc: Vec<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Named {
    pub catalog: String,
    pub scale: i64,
    #[serde(default)]
    pub extended: bool,
    pub display: String,
}

/// One group action on a bundled fibration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupEntry {
    pub key: String,
    pub display: String,
    pub fibration: String,
    #[serde(default)]
    pub translations: Vec<String>,
    #[serde(default)]
    pub involutions: Vec<String>,
    pub source: String,
    #[serde(default)]
    pub table_row: bool,
    #[serde(default)]
    pub aliases: Vec<String>,
    pub expected: Option<Expected>,
    #[serde(default)]
    pub omega_perp: Option<GramRef>,
    #[serde(default)]
    pub ns_invariant: Option<GramRef>,
    #[serde(default)]
    pub h2_invariant: Option<GramRef>,
    #[serde(default)]
    pub glued_index: Option<u64>,
    #[serde(default)]
    pub named: Option<Named>,
    /// Check name to a note on a known misprint in the stated value.
    #[serde(default)]
    pub errata: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct GroupsFile {
    groups: Vec<GroupEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CatalogDoc {
    pub name: String,
    pub source: String,
    pub gram: serde_json::Value,
}

/// All bundled documents, loaded from a data directory.
#[derive(Clone, Debug)]
pub struct Bundle {
    pub dir: PathBuf,
    pub fibrations: BTreeMap<String, FibrationDoc>,
    pub actions: BTreeMap<String, ActionDoc>,
    pub groups: Vec<GroupEntry>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

fn json_files(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::Schema(format!("{}: {e}", dir.display())))?;
    for e in entries.flatten() {
        let p = e.path();
        if p.extension().and_then(|x| x.to_str()) == Some("json") {
            let stem = p.file_stem().unwrap().to_string_lossy().to_string();
            out.push((stem, p));
        }
    }
    out.sort();
    Ok(out)
}

/// Canonical form of a group name: `(ℤ/2ℤ)²`, `Z/2^2` and `z2^2` all become `z2^2`.
pub fn normalize_group(name: &str) -> String {
    let mut s = String::new();
    for ch in name.chars() {
        match ch {
            'ℤ' => s.push('z'),
            '×' => s.push('x'),
            '²' => s.push_str("^2"),
            '³' => s.push_str("^3"),
            '⁴' => s.push_str("^4"),
            '/' | ' ' | '(' | ')' | '_' | ',' | '{' | '}' => {}
            c => s.extend(c.to_lowercase()),
        }
    }
    // drop the trailing z of "z2z"
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c == 'z' && i > 0 && chars[i - 1].is_ascii_digit() {
            continue;
        }
        out.push(c);
    }
    out.replace('*', "x")
}

impl Bundle {
    /// Default data directory: `$K3LAT_DATA`, else `data/` next to the workspace.
    pub fn default_dir() -> PathBuf {
        if let Ok(d) = std::env::var("K3LAT_DATA") {
            return PathBuf::from(d);
        }
        let local = PathBuf::from("data");
        if local.is_dir() {
            return local;
        }
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let mut fibrations = BTreeMap::new();
        for (stem, p) in json_files(&dir.join("fibrations"))? {
            let doc = FibrationDoc::from_json_str(&read(&p)?)
                .map_err(|e| Error::Schema(format!("{}: {e}", p.display())))?;
            if doc.source.trim().is_empty() {
                return Err(Error::Schema(format!("{}: missing source", p.display())));
            }
            fibrations.insert(stem, doc);
        }
        let mut actions = BTreeMap::new();
        for (stem, p) in json_files(&dir.join("actions"))? {
            let doc: ActionDoc = serde_json::from_str(&read(&p)?)
                .map_err(|e| Error::Schema(format!("{}: {e}", p.display())))?;
            if doc.source.trim().is_empty() {
                return Err(Error::Schema(format!("{}: missing source", p.display())));
            }
            actions.insert(stem, doc);
        }
        let gp = dir.join("reference").join("groups.json");
        let groups: GroupsFile =
            serde_json::from_str(&read(&gp)?).map_err(|e| Error::Schema(format!("{}: {e}", gp.display())))?;
        for g in &groups.groups {
            if g.source.trim().is_empty() {
                return Err(Error::Schema(format!("group {} has no source", g.key)));
            }
            if !fibrations.contains_key(&g.fibration) {
                return Err(Error::Schema(format!("group {} refers to unknown fibration {}", g.key, g.fibration)));
            }
            for a in &g.involutions {
                if !actions.contains_key(a) {
                    return Err(Error::Schema(format!("group {} refers to unknown action {a}", g.key)));
                }
            }
        }
        Ok(Bundle { dir, fibrations, actions, groups: groups.groups })
    }

    pub fn group(&self, name: &str) -> Result<&GroupEntry> {
        let want = normalize_group(name);
        self.groups
            .iter()
            .find(|g| {
                normalize_group(&g.key) == want
                    || normalize_group(&g.display) == want
                    || g.aliases.iter().any(|a| normalize_group(a) == want)
            })
            .ok_or_else(|| Error::Unknown(format!("group {name}")))
    }

    pub fn table_rows(&self) -> impl Iterator<Item = &GroupEntry> {
        self.groups.iter().filter(|g| g.table_row)
    }

    pub fn fibration(&self, name: &str) -> Result<&FibrationDoc> {
        self.fibrations.get(name).ok_or_else(|| Error::Unknown(format!("fibration {name}")))
    }

    pub fn ns(&self, fibration: &str) -> Result<NeronSeveri> {
        NeronSeveri::build(self.fibration(fibration)?)
    }

    /// The NS lattice with the generators of the group acting on it.
    pub fn action(&self, g: &GroupEntry) -> Result<(NeronSeveri, GroupAction)> {
        let ns = self.ns(&g.fibration)?;
        let mut gens: Vec<LatticeIsometry> = Vec::new();
        for t in &g.translations {
            gens.push(ns.translation_isometry(t)?);
        }
        for a in &g.involutions {
            let doc = &self.actions[a];
            if doc.fibration != g.fibration {
                return Err(Error::Inconsistent(format!("action {a} is defined on {}", doc.fibration)));
            }
            gens.push(ns.base_involution_isometry(doc)?);
        }
        let action = GroupAction::new(ns.lattice.clone(), gens, g.display.clone())?;
        Ok((ns, action))
    }

    pub fn omega(&self, g: &GroupEntry) -> Result<OmegaData> {
        let (ns, action) = self.action(g)?;
        let invariant = invariant_sublattice(&action);
        let omega = coinvariant_lattice(&action);
        Ok(OmegaData { ns, action, invariant, omega })
    }

    pub fn catalog(&self, name: &str) -> Result<(CatalogDoc, Lattice)> {
        let p = self.dir.join("catalog").join(format!("{name}.json"));
        if !p.exists() {
            return Err(Error::MissingCatalog(name.to_string()));
        }
        let doc: CatalogDoc =
            serde_json::from_str(&read(&p)?).map_err(|e| Error::Schema(format!("{}: {e}", p.display())))?;
        if doc.source.trim().is_empty() {
            return Err(Error::Schema(format!("{}: missing source", p.display())));
        }
        let l = Lattice::from_json(&doc.gram)?;
        Ok((doc, l))
    }

    /// Transcendental lattice of a fibration, if bundled and not marked as misprinted.
    pub fn transcendental(&self, fibration: &str) -> Result<Option<Lattice>> {
        match &self.fibration(fibration)?.transcendental {
            Some(r) if r.erratum.is_none() => Ok(Some(Lattice::from_json(&r.gram)?)),
            _ => Ok(None),
        }
    }

    /// Glue rows (NS ⊕ T coordinates) for the fibration: the bundled glue if
    /// it defines a valid overlattice, else an automatic anti-isometry.
    pub fn glue(&self, ns: &NeronSeveri, t: &Lattice) -> Result<(Vec<Vec<Rat>>, GlueOrigin)> {
        if let Some(entries) = &ns.doc.glue {
            let mut rows = Vec::new();
            let mut ok = true;
            for e in entries {
                let v = ns.parse_combination(&e.ns)?;
                let Some(mut c) = ns.ns_coordinates(&v) else {
                    ok = false;
                    break;
                };
                for x in &e.t {
                    c.push(parse_rational(x).ok_or_else(|| Error::Schema(format!("bad glue coordinate {x:?}")))?);
                }
                if c.len() != ns.lattice.rank() + t.rank() {
                    return Err(Error::Schema("glue row has the wrong length".into()));
                }
                rows.push(c);
            }
            if ok {
                let sum = ns.lattice.direct_sum(t);
                if let Ok(o) = crate::lattice::glue_overlattice(&sum, &rows) {
                    if o.lattice.det().magnitude() == &num_bigint::BigUint::from(1u32) {
                        return Ok((rows, GlueOrigin::Bundled));
                    }
                }
            }
        }
        let rows = anti_isometric_glue(&ns.lattice, t)
            .ok_or_else(|| Error::Inconsistent("discriminant forms of NS and T are not anti-isometric".into()))?;
        Ok((rows, GlueOrigin::Automatic))
    }

    pub fn glued(&self, g: &GroupEntry) -> Result<Option<(GluedInvariant, GlueOrigin)>> {
        let Some(t) = self.transcendental(&g.fibration)? else { return Ok(None) };
        let (ns, action) = self.action(g)?;
        let (glue, origin) = self.glue(&ns, &t)?;
        Ok(Some((glued_invariant(&action, &t, &glue)?, origin)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GlueOrigin {
    Bundled,
    Automatic,
}

pub struct OmegaData {
    pub ns: NeronSeveri,
    pub action: GroupAction,
    pub invariant: Sublattice,
    pub omega: Sublattice,
}

/// Rank, signature, parity and discriminant form agree.
pub fn same_genus_invariants(a: &Lattice, b: &Lattice) -> Result<std::result::Result<(), String>> {
    if a.rank() != b.rank() {
        return Ok(Err(format!("rank {} vs {}", a.rank(), b.rank())));
    }
    let (sa, sb) = (a.signature()?, b.signature()?);
    if sa != sb {
        return Ok(Err(format!("signature {sa:?} vs {sb:?}")));
    }
    if a.is_even() != b.is_even() {
        return Ok(Err("parity differs".into()));
    }
    let (da, db) = (DiscriminantGroup::of(a)?, DiscriminantGroup::of(b)?);
    if da.invariant_factors != db.invariant_factors {
        return Ok(Err(format!("discriminant group {} vs {}", da.group_string(), db.group_string())));
    }
    if !da.form().is_isometric(&db.form()) {
        return Ok(Err("discriminant forms are not isometric".into()));
    }
    Ok(Ok(()))
}

/// Whether disc(b) ≅ −disc(a), as for orthogonal complements in a unimodular lattice.
pub fn anti_isometric_forms(a: &Lattice, b: &Lattice) -> Result<bool> {
    let (da, db) = (DiscriminantGroup::of(a)?, DiscriminantGroup::of(b)?);
    Ok(da.invariant_factors == db.invariant_factors && da.form().is_isometric(&db.form().negate()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    Pass,
    Fail,
    Skip,
    /// Failed against a value documented as misprinted.
    XFail,
}

#[derive(Clone, Debug, Serialize)]
pub struct Cell {
    pub row: String,
    pub check: String,
    pub status: Status,
    pub detail: String,
}

fn cell(row: &str, check: &str, r: std::result::Result<String, String>) -> Cell {
    match r {
        Ok(detail) => Cell { row: row.into(), check: check.into(), status: Status::Pass, detail },
        Err(detail) => Cell { row: row.into(), check: check.into(), status: Status::Fail, detail },
    }
}

fn skip(row: &str, check: &str, detail: impl Into<String>) -> Cell {
    Cell { row: row.into(), check: check.into(), status: Status::Skip, detail: detail.into() }
}

/// Downgrades a failure against a documented misprint to XFail; a pass there
/// means the erratum no longer reproduces and is reported as a failure.
fn apply_erratum(mut c: Cell, note: Option<&String>) -> Cell {
    let Some(note) = note else { return c };
    match c.status {
        Status::Fail => {
            c.status = Status::XFail;
            c.detail = format!("{} (erratum: {note})", c.detail);
        }
        Status::Pass => {
            c.status = Status::Fail;
            c.detail = format!("{} (documented erratum did not reproduce: {note})", c.detail);
        }
        _ => {}
    }
    c
}

fn err_str(e: Error) -> String {
    e.to_string()
}

/// Which groups of checks to run.
#[derive(Clone, Copy, Debug, Default)]
pub struct VerifyOptions {
    /// Short-vector checks (minimum, generation by minimal vectors).
    pub minima: bool,
    /// Catalog identifications marked as extended.
    pub extended: bool,
}

/// Runs every check for one group entry.
pub fn verify_group(b: &Bundle, g: &GroupEntry, opts: VerifyOptions) -> Vec<Cell> {
    let row = g.key.as_str();
    let mut cells = Vec::new();
    let data = match b.omega(g) {
        Ok(d) => d,
        Err(e) => {
            cells.push(cell(row, "build", Err(err_str(e))));
            return cells;
        }
    };
    let omega = data.omega.lattice();
    let disc = match DiscriminantGroup::of(&omega) {
        Ok(d) => d,
        Err(e) => {
            cells.push(cell(row, "omega", Err(err_str(e))));
            return cells;
        }
    };
    let det_abs = omega.det().magnitude().clone();
    if let Some(exp) = &g.expected {
        let factors: Vec<BigInt> = exp.disc.iter().map(|&x| BigInt::from(x)).collect();
        let got = format!("rank {}, |det| {}, disc {}", omega.rank(), det_abs, disc.group_string());
        let ok = omega.rank() == exp.rank && det_abs.to_string() == exp.det && disc.invariant_factors == factors;
        cells.push(cell(row, "omega", if ok { Ok(got) } else { Err(format!("{got}; expected rank {}, |det| {}, disc {}", exp.rank, exp.det, crate::lattice::group_string(&factors))) }));
    }
    cells.push(cell(
        row,
        "omega-definite",
        match omega.definiteness() {
            Some(-1) if omega.is_even() => Ok("even, negative definite".into()),
            _ => Err("Ω is not even negative definite".into()),
        },
    ));
    // discriminant action
    let r = restrict_action(&data.action, &data.omega).and_then(|ra| {
        for (i, m) in ra.generators.iter().enumerate() {
            if !action_on_discriminant(&ra.lattice, m)?.is_identity() {
                return Ok(Err(format!("generator {i} acts nontrivially")));
            }
        }
        Ok(Ok(format!("{} generators act trivially", ra.generators.len())))
    });
    cells.push(cell(row, "disc-action", r.unwrap_or_else(|e| Err(err_str(e)))));
    if opts.minima {
        let r = (|| -> Result<std::result::Result<String, String>> {
            let no_roots = short_vectors(&omega, &int(2))?.is_empty();
            let m = minimum(&omega)?;
            let gen = generated_by_minimal(&omega)?;
            let msg = format!("no norm −2 vectors: {no_roots}, minimum {m}, generated by minimal vectors: {gen}");
            Ok(if no_roots && m == int(4) && gen { Ok(msg) } else { Err(msg) })
        })();
        cells.push(cell(row, "minimum", r.unwrap_or_else(|e| Err(err_str(e)))));
    }
    if let Some(rf) = &g.omega_perp {
        let r = Lattice::from_json(&rf.gram).and_then(|p| {
            let n = omega.rank();
            if p.rank() != 22 - n {
                return Ok(Err(format!("rank {} instead of {}", p.rank(), 22 - n)));
            }
            let sig = p.signature()?;
            if sig != (3, 19 - n) {
                return Ok(Err(format!("signature {sig:?}")));
            }
            if !p.is_even() {
                return Ok(Err("odd".into()));
            }
            Ok(if anti_isometric_forms(&omega, &p)? {
                Ok("rank, signature and discriminant form match".into())
            } else {
                Err("discriminant form is not anti-isometric to that of Ω".into())
            })
        });
        cells.push(cell(row, "omega-perp", r.unwrap_or_else(|e| Err(err_str(e)))));
    }
    if let Some(rf) = &g.ns_invariant {
        let r = Lattice::from_json(&rf.gram).and_then(|p| {
            Ok(same_genus_invariants(&data.invariant.lattice(), &p)?.map(|_| "rank, signature, parity and discriminant form match".to_string()))
        });
        cells.push(cell(row, "ns-invariant", r.unwrap_or_else(|e| Err(err_str(e)))));
    }
    if g.h2_invariant.is_some() || g.glued_index.is_some() {
        match b.glued(g) {
            Ok(Some((gl, origin))) => {
                let how = match origin {
                    GlueOrigin::Bundled => "bundled glue",
                    GlueOrigin::Automatic => "automatic glue",
                };
                if let Some(k) = g.glued_index {
                    let r = if gl.index == BigInt::from(k) {
                        Ok(format!("index {} ({how})", gl.index))
                    } else {
                        Err(format!("index {} instead of {k}", gl.index))
                    };
                    cells.push(cell(row, "glued-index", r));
                }
                if let Some(rf) = &g.h2_invariant {
                    let r = Lattice::from_json(&rf.gram).and_then(|p| {
                        Ok(same_genus_invariants(&gl.invariant.lattice(), &p)?.map(|_| "rank, signature, parity and discriminant form match".to_string()))
                    });
                    cells.push(cell(row, "h2-invariant", r.unwrap_or_else(|e| Err(err_str(e)))));
                }
            }
            Ok(None) => cells.push(skip(row, "h2-invariant", "no transcendental lattice bundled")),
            Err(e) => cells.push(cell(row, "h2-invariant", Err(err_str(e)))),
        }
    }
    if let Some(n) = &g.named {
        let check = if n.extended { "named-extended" } else { "named" };
        if n.extended && !opts.extended {
            cells.push(skip(row, check, format!("{} (extended suite not requested)", n.display)));
        } else {
            match b.catalog(&n.catalog) {
                Err(Error::MissingCatalog(c)) => cells.push(skip(row, check, format!("catalog file {c}.json not bundled"))),
                Err(e) => cells.push(cell(row, check, Err(err_str(e)))),
                Ok((_, l)) => {
                    let r = l.rescale(n.scale).and_then(|target| {
                        Ok(match is_isometric(&omega, &target)? {
                            Some(m) if m.transpose().mul(target.gram()).mul(&m) == *omega.gram() => {
                                Ok(format!("isometric to {} (witness verified)", n.display))
                            }
                            Some(_) => Err("witness failed verification".into()),
                            None => Err(format!("not isometric to {}", n.display)),
                        })
                    });
                    cells.push(cell(row, check, r.unwrap_or_else(|e| Err(err_str(e)))));
                }
            }
        }
    }
    cells.into_iter().map(|c| {
        let note = g.errata.get(&c.check);
        apply_erratum(c, note)
    }).collect()
}

/// Checks on one fibration document: K3 Euler number, torsion heights,
/// section classes, [NS : Tr] and the transcendental lattice.
pub fn verify_fibration(b: &Bundle, name: &str) -> Vec<Cell> {
    let row = format!("fibration {name}");
    let mut cells = Vec::new();
    let doc = match b.fibration(name) {
        Ok(d) => d,
        Err(e) => return vec![cell(&row, "load", Err(err_str(e)))],
    };
    let euler: u32 = doc
        .fibers
        .iter()
        .filter_map(|f| f.kind.parse::<crate::fibration::FiberType>().ok())
        .map(|t| t.euler_number())
        .sum();
    cells.push(cell(&row, "euler", if euler == 24 { Ok("24".into()) } else { Err(format!("{euler}")) }));
    let ns = match NeronSeveri::build(doc) {
        Ok(ns) => ns,
        Err(e) => {
            cells.push(cell(&row, "ns", Err(err_str(e))));
            return cells;
        }
    };
    let chi = Rat::from_integer(int(-ns.trivial.config.chi));
    let bad: Vec<String> = ns
        .elements
        .iter()
        .filter(|e| ns.trivial.lattice.product_rat(&e.class, &e.class) != chi)
        .map(|e| e.name.clone())
        .collect();
    cells.push(cell(
        &row,
        "sections",
        if bad.is_empty() {
            Ok(format!("{} torsion sections, height 0, self-intersection −2", ns.elements.len()))
        } else {
            Err(format!("bad sections {bad:?}"))
        },
    ));
    let ord: u32 = ns.generators.iter().map(|g| g.order).product();
    cells.push(cell(
        &row,
        "ns",
        Ok(format!(
            "rank {}, det {}, [NS:Tr] = {} = |MW| = {ord}, disc {}",
            ns.lattice.rank(),
            ns.lattice.det(),
            ns.index,
            ns.lattice.discriminant_group().map(|d| d.group_string()).unwrap_or_default()
        )),
    ));
    match &doc.transcendental {
        None => cells.push(skip(&row, "transcendental", "no transcendental lattice bundled")),
        Some(r) => {
            let res = Lattice::from_json(&r.gram).and_then(|t| {
                let rho = ns.lattice.rank();
                if t.rank() + rho != 22 {
                    return Ok(Err(format!("rank {} instead of {}", t.rank(), 22 - rho)));
                }
                let sig = t.signature()?;
                if sig != (2, 20 - rho) {
                    return Ok(Err(format!("signature {sig:?}")));
                }
                Ok(if t.is_even() && anti_isometric_forms(&ns.lattice, &t)? {
                    Ok("rank, signature and discriminant form match".into())
                } else {
                    Err("discriminant form is not anti-isometric to that of NS".into())
                })
            });
            let c = cell(&row, "transcendental", res.unwrap_or_else(|e| Err(err_str(e))));
            cells.push(apply_erratum(c, r.erratum.as_ref()));
        }
    }
    cells
}

/// Every check over the whole bundle.
pub fn verify_all(b: &Bundle, opts: VerifyOptions) -> Vec<Cell> {
    let mut cells = Vec::new();
    for name in b.fibrations.keys() {
        cells.extend(verify_fibration(b, name));
    }
    for g in &b.groups {
        cells.extend(verify_group(b, g, opts));
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_names_normalize() {
        assert_eq!(normalize_group("(ℤ/2ℤ)²"), "z2^2");
        assert_eq!(normalize_group("Z2^2"), "z2^2");
        assert_eq!(normalize_group("ℤ/2ℤ×ℤ/6ℤ"), "z2xz6");
        assert_eq!(normalize_group("Z/2xZ/6"), "z2xz6");
        assert_eq!(normalize_group("G_{2,4}"), "g24");
    }

    #[test]
    fn bundled_table_verifies() {
        let b = Bundle::load(Bundle::default_dir()).unwrap();
        let cells = verify_all(&b, VerifyOptions::default());
        let failed: Vec<_> = cells.iter().filter(|c| c.status == Status::Fail).collect();
        assert!(failed.is_empty(), "{failed:#?}");
        let xfail: Vec<_> = cells.iter().filter(|c| c.status == Status::XFail).map(|c| (c.row.as_str(), c.check.as_str())).collect();
        assert_eq!(
            xfail,
            vec![("fibration z2", "transcendental"), ("fibration z3xz3", "transcendental"), ("Z4^2", "glued-index")]
        );
    }

    #[test]
    fn corrected_z2_transcendental() {
        let b = Bundle::load(Bundle::default_dir()).unwrap();
        let ns = b.ns("z2").unwrap();
        let t = Lattice::from_expression("U+U+N").unwrap();
        assert!(anti_isometric_forms(&ns.lattice, &t).unwrap());
        assert!(!anti_isometric_forms(&ns.lattice, &Lattice::from_expression("N+U(2)^2").unwrap()).unwrap());
    }

    #[test]
    fn erratum_flips_status() {
        let note = "x".to_string();
        let fail = Cell { row: "r".into(), check: "c".into(), status: Status::Fail, detail: String::new() };
        assert_eq!(apply_erratum(fail.clone(), Some(&note)).status, Status::XFail);
        assert_eq!(apply_erratum(fail.clone(), None).status, Status::Fail);
        let pass = Cell { status: Status::Pass, ..fail };
        assert_eq!(apply_erratum(pass, Some(&note)).status, Status::Fail);
    }
}
