//! Elliptic fibrations: Kodaira fibers, trivial lattice, heights, torsion
//! sections, the Néron–Severi lattice and isometries induced by translations
//! and by automorphisms of the base.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Lattice, LatticeIsometry};
use crate::linalg::{
    hermite_normal_form, int, is_primitive_rows, rat, rat_int, rational_row_basis, rational_solve,
    to_int_vec, IntMatrix, Rat, RatMatrix,
};

/// Kodaira fiber types with a root-lattice description.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FiberType {
    I(u32),
    IStar(u32),
    IV,
    IVStar,
    IIIStar,
}

impl FromStr for FiberType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().replace('_', "");
        match t.as_str() {
            "IV" => return Ok(FiberType::IV),
            "IV*" => return Ok(FiberType::IVStar),
            "III*" => return Ok(FiberType::IIIStar),
            "II" | "III" | "II*" => {
                return Err(Error::Schema(format!("fiber type {s} is not supported")))
            }
            _ => {}
        }
        let bad = || Error::Schema(format!("unknown fiber type {s:?}"));
        let rest = t.strip_prefix('I').ok_or_else(bad)?;
        if let Some(n) = rest.strip_prefix('*').or_else(|| rest.strip_suffix('*')) {
            let n = if n.is_empty() { 0 } else { n.parse::<u32>().map_err(|_| bad())? };
            return Ok(FiberType::IStar(n));
        }
        let n = rest.parse::<u32>().map_err(|_| bad())?;
        if n == 0 {
            return Err(bad());
        }
        Ok(FiberType::I(n))
    }
}

impl fmt::Display for FiberType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FiberType::I(n) => write!(f, "I{n}"),
            FiberType::IStar(n) => write!(f, "I*{n}"),
            FiberType::IV => write!(f, "IV"),
            FiberType::IVStar => write!(f, "IV*"),
            FiberType::IIIStar => write!(f, "III*"),
        }
    }
}

impl FiberType {
    /// Number of irreducible components.
    pub fn components(&self) -> usize {
        match *self {
            FiberType::I(n) => n as usize,
            FiberType::IStar(n) => n as usize + 5,
            FiberType::IV => 3,
            FiberType::IVStar => 7,
            FiberType::IIIStar => 8,
        }
    }

    /// Root lattice spanned by the non-identity components, as (letter, rank).
    pub fn root_type(&self) -> Option<(char, u32)> {
        match *self {
            FiberType::I(1) => None,
            FiberType::I(n) => Some(('A', n - 1)),
            FiberType::IStar(n) => Some(('D', n + 4)),
            FiberType::IV => Some(('A', 2)),
            FiberType::IVStar => Some(('E', 6)),
            FiberType::IIIStar => Some(('E', 7)),
        }
    }

    pub fn euler_number(&self) -> u32 {
        match *self {
            FiberType::I(n) => n,
            FiberType::IStar(n) => n + 6,
            FiberType::IV => 4,
            FiberType::IVStar => 8,
            FiberType::IIIStar => 9,
        }
    }

    /// Multiplicity of each component in the fiber class; node 0 is C₀.
    pub fn multiplicities(&self) -> Vec<i64> {
        match *self {
            FiberType::I(n) => vec![1; n as usize],
            FiberType::IV => vec![1; 3],
            FiberType::IStar(n) => {
                let mut m = vec![1; 4];
                m.extend(std::iter::repeat(2).take(n as usize + 1));
                m
            }
            FiberType::IVStar => vec![1, 1, 1, 2, 2, 2, 3],
            FiberType::IIIStar => vec![1, 1, 2, 3, 2, 3, 4, 2],
        }
    }

    /// Intersection numbers between distinct components.
    pub fn edges(&self) -> Vec<(usize, usize, i64)> {
        match *self {
            FiberType::I(1) => vec![],
            FiberType::I(2) => vec![(0, 1, 2)],
            FiberType::I(n) => (0..n as usize).map(|i| (i, (i + 1) % n as usize, 1)).collect(),
            FiberType::IV => vec![(0, 1, 1), (1, 2, 1), (0, 2, 1)],
            FiberType::IStar(n) => {
                let n = n as usize;
                let last = 4 + n;
                let mut e = vec![(0, 4, 1), (1, 4, 1), (2, last, 1), (3, last, 1)];
                for k in 4..last {
                    e.push((k, k + 1, 1));
                }
                e
            }
            FiberType::IVStar => vec![(0, 3, 1), (1, 4, 1), (2, 5, 1), (3, 6, 1), (4, 6, 1), (5, 6, 1)],
            FiberType::IIIStar => {
                vec![(0, 2, 1), (2, 3, 1), (3, 6, 1), (6, 5, 1), (5, 4, 1), (4, 1, 1), (6, 7, 1)]
            }
        }
    }

    /// Intersection matrix of all components (including C₀).
    pub fn component_gram(&self) -> IntMatrix {
        let m = self.components();
        let mut g = IntMatrix::zeros(m, m);
        if m == 1 {
            return g;
        }
        for i in 0..m {
            g[(i, i)] = int(-2);
        }
        for (a, b, w) in self.edges() {
            g[(a, b)] = int(w);
            g[(b, a)] = int(w);
        }
        g
    }

    /// Components of multiplicity one, i.e. the ones a section can meet.
    pub fn simple_components(&self) -> Vec<usize> {
        self.multiplicities().iter().enumerate().filter(|(_, &m)| m == 1).map(|(i, _)| i).collect()
    }

    pub fn is_simple(&self, node: usize) -> bool {
        node < self.components() && self.multiplicities()[node] == 1
    }

    pub fn group_order(&self) -> u32 {
        self.simple_components().len() as u32
    }

    fn to_elem(&self, node: usize) -> u32 {
        match *self {
            FiberType::IStar(n) if n % 2 == 1 => [0, 2, 1, 3][node],
            _ => node as u32,
        }
    }

    fn from_elem(&self, e: u32) -> usize {
        match *self {
            FiberType::IStar(n) if n % 2 == 1 => [0, 2, 1, 3][e as usize],
            _ => e as usize,
        }
    }

    /// Group law on simple components (component group of the fiber).
    pub fn add(&self, a: usize, b: usize) -> usize {
        match *self {
            FiberType::IStar(n) if n % 2 == 0 => a ^ b,
            _ => {
                let h = self.group_order();
                self.from_elem((self.to_elem(a) + self.to_elem(b)) % h)
            }
        }
    }

    pub fn multiple(&self, k: u32, a: usize) -> usize {
        (0..k).fold(0, |acc, _| self.add(acc, a))
    }

    /// Permutation of components induced by translation by a section meeting
    /// the simple component `k`.
    pub fn translation(&self, k: usize) -> Vec<usize> {
        let m = self.components();
        let mut p: Vec<usize> = (0..m).collect();
        if k == 0 {
            return p;
        }
        match *self {
            FiberType::I(n) => {
                for (i, pi) in p.iter_mut().enumerate() {
                    *pi = (i + k) % n as usize;
                }
            }
            FiberType::IV => {
                for (i, pi) in p.iter_mut().enumerate() {
                    *pi = (i + k) % 3;
                }
            }
            FiberType::IStar(n) => {
                let odd = n % 2 == 1;
                let simple: [usize; 4] = match (k, odd) {
                    (1, _) => [1, 0, 3, 2],
                    (2, false) => [2, 3, 0, 1],
                    (3, false) => [3, 2, 1, 0],
                    (2, true) => [2, 3, 1, 0],
                    (3, true) => [3, 2, 0, 1],
                    _ => unreachable!("not a simple component"),
                };
                p[..4].copy_from_slice(&simple);
                if k != 1 {
                    let chain = n as usize + 1;
                    for i in 0..chain {
                        p[4 + i] = 4 + chain - 1 - i;
                    }
                }
            }
            FiberType::IVStar => {
                let rot = |i: usize| (i + k) % 3;
                for i in 0..3 {
                    p[i] = rot(i);
                    p[3 + i] = 3 + rot(i);
                }
            }
            FiberType::IIIStar => {
                p = vec![1, 0, 4, 5, 2, 3, 6, 7];
            }
        }
        p
    }

    /// Local height contribution for sections meeting simple components `i`, `j`.
    pub fn contribution(&self, i: usize, j: usize) -> Result<Rat> {
        if i == 0 || j == 0 {
            return Ok(Rat::zero());
        }
        let v = match *self {
            FiberType::I(n) => {
                let (a, b) = (i.min(j) as i64, i.max(j) as i64);
                rat(a * (n as i64 - b), n as i64)
            }
            FiberType::IV => {
                if i == j {
                    rat(2, 3)
                } else {
                    rat(1, 3)
                }
            }
            FiberType::IStar(n) => {
                let q = rat(n as i64, 4);
                if i == j {
                    if i == 1 {
                        rat(1, 1)
                    } else {
                        rat(1, 1) + q
                    }
                } else if i == 1 || j == 1 {
                    rat(1, 2)
                } else {
                    rat(1, 2) + q
                }
            }
            FiberType::IVStar => {
                if i == j {
                    rat(4, 3)
                } else {
                    rat(2, 3)
                }
            }
            FiberType::IIIStar => {
                if i == j {
                    rat(3, 2)
                } else {
                    return Err(Error::UndefinedContribution("III* off-diagonal".into()));
                }
            }
        };
        Ok(v)
    }
}

fn default_chi() -> i64 {
    2
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiberEntry {
    pub label: u32,
    #[serde(rename = "type")]
    pub kind: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SectionEntry {
    pub name: String,
    pub order: u32,
    #[serde(default)]
    pub meets: BTreeMap<String, usize>,
    #[serde(default)]
    pub meets_zero: i64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GramRef {
    pub gram: serde_json::Value,
    pub source: String,
    /// Known misprint in the source; the check still runs and is expected to fail.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub erratum: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GlueEntry {
    /// Linear combination in the trivial-lattice labels, e.g. `"1/4 C1^(1) + 1/2 C2^(1)"`.
    pub ns: String,
    /// Coordinates in the basis of the transcendental lattice.
    pub t: Vec<String>,
}

/// One fibration document: fibers and Mordell–Weil generators.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FibrationDoc {
    pub name: String,
    #[serde(default)]
    pub source: String,
    #[serde(default)]
    pub group: Option<String>,
    #[serde(default = "default_chi")]
    pub chi: i64,
    pub fibers: Vec<FiberEntry>,
    #[serde(default)]
    pub sections: Vec<SectionEntry>,
    #[serde(default)]
    pub transcendental: Option<GramRef>,
    #[serde(default)]
    pub preferred_basis: Option<Vec<String>>,
    #[serde(default)]
    pub glue: Option<Vec<GlueEntry>>,
}

impl FibrationDoc {
    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))
    }
}

/// Validated fiber list.
#[derive(Clone, Debug)]
pub struct FiberConfiguration {
    pub fibers: Vec<(u32, FiberType)>,
    pub chi: i64,
}

impl FiberConfiguration {
    pub fn from_doc(doc: &FibrationDoc) -> Result<Self> {
        let mut fibers = Vec::new();
        for f in &doc.fibers {
            if fibers.iter().any(|(l, _)| *l == f.label) {
                return Err(Error::Schema(format!("duplicate fiber label {}", f.label)));
            }
            fibers.push((f.label, f.kind.parse()?));
        }
        if doc.chi <= 0 {
            return Err(Error::Schema("chi must be positive".into()));
        }
        Ok(FiberConfiguration { fibers, chi: doc.chi })
    }

    pub fn euler_sum(&self) -> u32 {
        self.fibers.iter().map(|(_, t)| t.euler_number()).sum()
    }

    pub fn is_k3(&self) -> bool {
        self.chi == 2 && self.euler_sum() == 24
    }

    /// Reducible fibers with their position in the fiber list.
    pub fn reducible(&self) -> impl Iterator<Item = (usize, u32, FiberType)> + '_ {
        self.fibers.iter().enumerate().filter(|(_, (_, t))| t.components() > 1).map(|(i, (l, t))| (i, *l, *t))
    }

    pub fn index_of_label(&self, label: u32) -> Option<usize> {
        self.fibers.iter().position(|(l, _)| *l == label)
    }
}

/// ρ = r + 2 + Σ (m_v − 1).
pub fn picard_rank(config: &FiberConfiguration, mw_rank: u32) -> usize {
    mw_rank as usize + 2 + config.fibers.iter().map(|(_, t)| t.components() - 1).sum::<usize>()
}

/// Component met in each fiber (0 where the data is silent), validated.
pub fn section_pattern(config: &FiberConfiguration, s: &SectionEntry) -> Result<Vec<usize>> {
    let mut pattern = vec![0; config.fibers.len()];
    for (key, &node) in &s.meets {
        let label: u32 = key.trim().parse().map_err(|_| Error::Schema(format!("bad fiber label {key:?}")))?;
        let idx = config
            .index_of_label(label)
            .ok_or_else(|| Error::Schema(format!("section {} refers to unknown fiber {label}", s.name)))?;
        let t = config.fibers[idx].1;
        if !t.is_simple(node) {
            return Err(Error::Inconsistent(format!(
                "section {} meets component {node} of fiber {label} ({t}), which is not simple",
                s.name
            )));
        }
        pattern[idx] = node;
    }
    Ok(pattern)
}

/// The height pairing from intersection data; `pq` is P·Q (ignored when P = Q).
pub fn height_pairing(
    config: &FiberConfiguration,
    p: &[usize],
    p_zero: i64,
    q: &[usize],
    q_zero: i64,
    pq: i64,
    same: bool,
) -> Result<Rat> {
    let chi = Rat::from_integer(int(config.chi));
    let mut h = if same {
        Rat::from_integer(int(2)) * &chi + Rat::from_integer(int(2 * p_zero))
    } else {
        chi + Rat::from_integer(int(p_zero + q_zero - pq))
    };
    for (k, (_, t)) in config.fibers.iter().enumerate() {
        h -= t.contribution(p[k], q[k])?;
    }
    Ok(h)
}

/// Trivial lattice with its labeled basis F, s, Cᵢ⁽ʲ⁾.
#[derive(Clone, Debug)]
pub struct TrivialLattice {
    pub lattice: Lattice,
    /// First basis index of each fiber's components (None for irreducible fibers).
    pub offsets: Vec<Option<usize>>,
    pub config: FiberConfiguration,
}

pub fn component_label(node: usize, fiber: u32) -> String {
    format!("C{node}^({fiber})")
}

impl TrivialLattice {
    pub fn new(config: &FiberConfiguration) -> Self {
        let mut labels = vec!["F".to_string(), "s".to_string()];
        let mut offsets = vec![None; config.fibers.len()];
        let mut pos = 2;
        for (idx, label, t) in config.reducible() {
            offsets[idx] = Some(pos);
            for node in 1..t.components() {
                labels.push(component_label(node, label));
            }
            pos += t.components() - 1;
        }
        let n = pos;
        let mut g = IntMatrix::zeros(n, n);
        g[(0, 1)] = int(1);
        g[(1, 0)] = int(1);
        g[(1, 1)] = int(-config.chi);
        for (idx, _, t) in config.reducible() {
            let off = offsets[idx].unwrap();
            let cg = t.component_gram();
            for a in 1..t.components() {
                for b in 1..t.components() {
                    g[(off + a - 1, off + b - 1)] = cg[(a, b)].clone();
                }
            }
        }
        let lattice = Lattice::new(g).expect("symmetric").with_labels(labels);
        TrivialLattice { lattice, offsets, config: config.clone() }
    }

    pub fn rank(&self) -> usize {
        self.lattice.rank()
    }

    /// Decomposition such as `U⊕A3(-1)^6⊕D4(-1)`.
    pub fn description(&self) -> String {
        let mut counts: std::collections::BTreeMap<(char, u32), usize> = BTreeMap::new();
        for (_, _, t) in self.config.reducible() {
            if let Some(k) = t.root_type() {
                *counts.entry(k).or_default() += 1;
            }
        }
        let mut s = "U".to_string();
        for ((c, n), m) in counts {
            s.push_str(&format!("⊕{c}{n}(-1)"));
            if m > 1 {
                s.push_str(&format!("^{m}"));
            }
        }
        s
    }

    fn unit(&self, i: usize) -> Vec<Rat> {
        let mut v = vec![Rat::zero(); self.rank()];
        v[i] = Rat::one();
        v
    }

    /// Class of component `node` of the fiber at position `idx`, C₀ included.
    pub fn component_class(&self, idx: usize, node: usize) -> Vec<Rat> {
        let t = self.config.fibers[idx].1;
        let Some(off) = self.offsets[idx] else {
            return self.unit(0);
        };
        if node > 0 {
            return self.unit(off + node - 1);
        }
        let mult = t.multiplicities();
        let mut v = self.unit(0);
        for k in 1..t.components() {
            v[off + k - 1] = Rat::from_integer(int(-mult[k]));
        }
        v
    }

    /// Vector of intersection numbers of a section with the basis.
    pub fn section_intersections(&self, pattern: &[usize], meets_zero: i64) -> Vec<Rat> {
        let mut w = vec![Rat::zero(); self.rank()];
        w[0] = Rat::one();
        w[1] = Rat::from_integer(int(meets_zero));
        for (idx, &node) in pattern.iter().enumerate() {
            if let Some(off) = self.offsets[idx] {
                if node > 0 {
                    w[off + node - 1] = Rat::one();
                }
            }
        }
        w
    }

    /// The rational class of a torsion section in trivial-lattice coordinates.
    pub fn torsion_section_class(&self, pattern: &[usize], meets_zero: i64, order: u32) -> Result<Vec<Rat>> {
        if pattern.iter().all(|&c| c == 0) && meets_zero == -self.config.chi {
            return Ok(self.unit(1));
        }
        let w = self.section_intersections(pattern, meets_zero);
        let v = rational_solve(&self.lattice.gram().to_rat(), &w)
            .ok_or_else(|| Error::Inconsistent("section class has no solution".into()))?;
        let norm = self.lattice.product_rat(&v, &v);
        if norm != Rat::from_integer(int(-self.config.chi)) {
            return Err(Error::Inconsistent(format!("section class has self-intersection {norm}")));
        }
        let n = Rat::from_integer(int(order as i64));
        if v.iter().any(|x| !(x * &n).is_integer()) {
            return Err(Error::Inconsistent(format!("order {order} times the section class is not integral")));
        }
        Ok(v)
    }

    /// Parses a combination such as `2F + s - 1/4 C1^(5)` (sections are not
    /// allowed here since their classes are not part of the trivial lattice).
    pub fn parse_combination(&self, expr: &str) -> Result<Vec<Rat>> {
        parse_combination(expr, &|name| self.label_vector(name))
    }

    fn label_vector(&self, name: &str) -> Option<Vec<Rat>> {
        match name {
            "F" => return Some(self.unit(0)),
            "s" => return Some(self.unit(1)),
            _ => {}
        }
        let (node, fiber) = parse_component_label(name)?;
        let idx = self.config.index_of_label(fiber)?;
        let t = self.config.fibers[idx].1;
        (node < t.components()).then(|| self.component_class(idx, node))
    }
}

fn parse_component_label(name: &str) -> Option<(usize, u32)> {
    let rest = name.strip_prefix('C')?;
    let (node, fiber) = rest.split_once("^(")?;
    let fiber = fiber.strip_suffix(')')?;
    Some((node.parse().ok()?, fiber.parse().ok()?))
}

/// Parses `a` or `a/b`.
pub fn parse_rational(s: &str) -> Option<Rat> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().ok()?;
        let b: BigInt = b.trim().parse().ok()?;
        if b.is_zero() {
            return None;
        }
        Some(Rat::new(a, b))
    } else {
        Some(Rat::from_integer(s.parse().ok()?))
    }
}

/// Parses `c₁ x₁ ± c₂ x₂ …` where coefficients are optional integers or
/// fractions and names are resolved by `lookup`.
pub fn parse_combination(expr: &str, lookup: &dyn Fn(&str) -> Option<Vec<Rat>>) -> Result<Vec<Rat>> {
    let bad = |m: &str| Error::Schema(format!("cannot parse combination {expr:?}: {m}"));
    let mut terms: Vec<(bool, String)> = Vec::new();
    let mut cur = String::new();
    let mut neg = false;
    let mut depth = 0;
    for ch in expr.chars() {
        match ch {
            '(' => {
                depth += 1;
                cur.push(ch);
            }
            ')' => {
                depth -= 1;
                cur.push(ch);
            }
            '+' | '-' if depth == 0 => {
                if !cur.trim().is_empty() {
                    terms.push((neg, cur.trim().to_string()));
                }
                cur.clear();
                neg = ch == '-';
            }
            c if c.is_whitespace() => cur.push(' '),
            c => cur.push(c),
        }
    }
    if !cur.trim().is_empty() {
        terms.push((neg, cur.trim().to_string()));
    }
    if terms.is_empty() {
        return Err(bad("empty"));
    }
    let mut acc: Option<Vec<Rat>> = None;
    for (neg, term) in terms {
        // split leading coefficient
        let split = term.find(|c: char| c.is_ascii_alphabetic()).ok_or_else(|| bad("missing name"))?;
        let (coef, name) = term.split_at(split);
        let coef = coef.trim().trim_end_matches('*').trim();
        let mut c = if coef.is_empty() { Rat::one() } else { parse_rational(coef).ok_or_else(|| bad("coefficient"))? };
        if neg {
            c = -c;
        }
        let v = lookup(name.trim()).ok_or_else(|| Error::Unknown(name.trim().to_string()))?;
        let acc_v = acc.get_or_insert_with(|| vec![Rat::zero(); v.len()]);
        for (a, x) in acc_v.iter_mut().zip(&v) {
            *a += &c * x;
        }
    }
    Ok(acc.unwrap())
}

/// An element of the (torsion) Mordell–Weil group.
#[derive(Clone, Debug)]
pub struct MwElement {
    pub coeffs: Vec<u32>,
    pub name: String,
    pub pattern: Vec<usize>,
    /// Class in trivial-lattice coordinates.
    pub class: Vec<Rat>,
}

/// The Néron–Severi lattice of a fibration with finite Mordell–Weil group.
#[derive(Clone, Debug)]
pub struct NeronSeveri {
    pub doc: FibrationDoc,
    pub trivial: TrivialLattice,
    pub lattice: Lattice,
    /// NS basis rows in trivial-lattice coordinates.
    pub basis_tr: RatMatrix,
    pub generators: Vec<SectionEntry>,
    pub elements: Vec<MwElement>,
    pub index: BigInt,
}

fn prefix_of(name: &str) -> String {
    name.trim_end_matches(|c: char| c.is_ascii_digit()).to_string()
}

fn element_name(gens: &[SectionEntry], coeffs: &[u32]) -> String {
    let mut s = String::new();
    for (g, &c) in gens.iter().zip(coeffs) {
        if c > 0 {
            s.push_str(&format!("{}{}", prefix_of(&g.name), c));
        }
    }
    if s.is_empty() {
        "s".into()
    } else {
        s
    }
}

impl NeronSeveri {
    pub fn build(doc: &FibrationDoc) -> Result<Self> {
        let config = FiberConfiguration::from_doc(doc)?;
        let trivial = TrivialLattice::new(&config);
        let gens = doc.sections.clone();
        let mut gen_patterns = Vec::new();
        for g in &gens {
            if g.order == 0 {
                return Err(Error::Schema(format!("section {} has order 0", g.name)));
            }
            gen_patterns.push(section_pattern(&config, g)?);
        }
        // all coefficient tuples, lexicographic
        let mut tuples: Vec<Vec<u32>> = vec![vec![]];
        for g in &gens {
            tuples = tuples
                .into_iter()
                .flat_map(|t| (0..g.order).map(move |c| {
                    let mut t = t.clone();
                    t.push(c);
                    t
                }))
                .collect();
        }
        let mut elements = Vec::with_capacity(tuples.len());
        for coeffs in tuples {
            let mut pattern = vec![0usize; config.fibers.len()];
            for (gi, &c) in coeffs.iter().enumerate() {
                for (k, (_, t)) in config.fibers.iter().enumerate() {
                    pattern[k] = t.add(pattern[k], t.multiple(c, gen_patterns[gi][k]));
                }
            }
            let is_zero = coeffs.iter().all(|&c| c == 0);
            let name = element_name(&gens, &coeffs);
            let single = coeffs.iter().filter(|&&c| c > 0).count() == 1
                && coeffs.iter().zip(&gens).all(|(&c, _)| c <= 1);
            let meets_zero = if single {
                let gi = coeffs.iter().position(|&c| c == 1).unwrap();
                gens[gi].meets_zero
            } else {
                0
            };
            let class = if is_zero {
                trivial.torsion_section_class(&pattern, -config.chi, 1)?
            } else {
                let order = coeffs
                    .iter()
                    .zip(&gens)
                    .map(|(&c, g)| g.order / c.gcd(&g.order).max(1))
                    .fold(1u32, |a, b| a.lcm(&b));
                trivial
                    .torsion_section_class(&pattern, meets_zero, order)
                    .map_err(|e| Error::Inconsistent(format!("section {name}: {e}")))?
            };
            elements.push(MwElement { coeffs, name, pattern, class });
        }
        // heights of all torsion elements must vanish
        for e in &elements {
            if e.name == "s" {
                continue;
            }
            let mz = if gens.iter().any(|g| g.name == e.name) {
                gens.iter().find(|g| g.name == e.name).unwrap().meets_zero
            } else {
                0
            };
            let h = height_pairing(&config, &e.pattern, mz, &e.pattern, mz, 0, true)?;
            if !h.is_zero() {
                return Err(Error::Inconsistent(format!("torsion section {} has height {h}", e.name)));
            }
        }
        // NS = Tr + span of section classes
        let n = trivial.rank();
        let mut rows: Vec<Vec<Rat>> =
            (0..n).map(|i| (0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }).collect()).collect();
        rows.extend(elements.iter().map(|e| e.class.clone()));
        let hnf_basis = rational_row_basis(&RatMatrix::from_rows(&rows, n));
        let index_sq = Rat::one() / hnf_basis.det().abs();
        let index = index_sq.to_integer();
        let expected: u32 = gens.iter().map(|g| g.order).product();
        if !index_sq.is_integer() || index != int(expected as i64) {
            return Err(Error::Inconsistent(format!(
                "[NS : Tr] = {index_sq} but the declared group has order {expected}"
            )));
        }
        let mut ns = NeronSeveri {
            doc: doc.clone(),
            trivial,
            lattice: Lattice::new(IntMatrix::zeros(0, 0)).unwrap(),
            basis_tr: hnf_basis.clone(),
            generators: gens,
            elements,
            index,
        };
        let (basis, labels) = ns.choose_basis(&hnf_basis)?;
        let gram = basis.mul(&ns.trivial.lattice.gram().to_rat()).mul(&basis.transpose());
        let gram = gram.to_int().ok_or_else(|| Error::Inconsistent("NS Gram is not integral".into()))?;
        ns.lattice = Lattice::new(gram)?.with_labels(labels);
        ns.basis_tr = basis;
        if !ns.lattice.is_even() {
            return Err(Error::Inconsistent("NS is not even".into()));
        }
        let tr_det = ns.trivial.lattice.det();
        if tr_det != ns.lattice.det() * &ns.index * &ns.index {
            return Err(Error::Inconsistent("det(Tr) ≠ det(NS)·index²".into()));
        }
        Ok(ns)
    }

    /// Class (trivial-lattice coordinates) of a label: F, s, Cᵢ⁽ʲ⁾ or a section name.
    pub fn label_vector(&self, name: &str) -> Option<Vec<Rat>> {
        if let Some(v) = self.trivial.label_vector(name) {
            return Some(v);
        }
        self.element(name).map(|e| e.class.clone())
    }

    pub fn element(&self, name: &str) -> Option<&MwElement> {
        self.elements.iter().find(|e| e.name == name)
    }

    pub fn element_by_pattern(&self, pattern: &[usize]) -> Option<&MwElement> {
        self.elements.iter().find(|e| e.pattern == pattern)
    }

    pub fn parse_combination(&self, expr: &str) -> Result<Vec<Rat>> {
        parse_combination(expr, &|name| self.label_vector(name))
    }

    /// Coordinates in the NS basis of a vector given in trivial-lattice coordinates.
    pub fn ns_coordinates(&self, v: &[Rat]) -> Option<Vec<Rat>> {
        rational_solve(&self.basis_tr.transpose(), v)
    }

    pub fn ns_integral_coordinates(&self, v: &[Rat]) -> Option<Vec<BigInt>> {
        to_int_vec(&self.ns_coordinates(v)?)
    }

    fn choose_basis(&self, hnf: &RatMatrix) -> Result<(RatMatrix, Vec<String>)> {
        let n = hnf.nrows();
        let coords_in_hnf = |v: &[Rat]| -> Option<Vec<BigInt>> { to_int_vec(&rational_solve(&hnf.transpose(), v)?) };
        if let Some(pref) = &self.doc.preferred_basis {
            let mut rows = Vec::new();
            let mut coords = Vec::new();
            for name in pref {
                let v = self.label_vector(name).ok_or_else(|| Error::Unknown(name.clone()))?;
                coords.push(coords_in_hnf(&v).ok_or_else(|| Error::Inconsistent(format!("{name} is not in NS")))?);
                rows.push(v);
            }
            let m = IntMatrix::from_rows_with_cols(&coords, n);
            if rows.len() != n || !m.det().abs().is_one() {
                return Err(Error::Inconsistent("preferred basis is not a ℤ-basis of NS".into()));
            }
            return Ok((RatMatrix::from_rows(&rows, n), pref.clone()));
        }
        let mut cands: Vec<String> = vec!["F".into(), "s".into()];
        cands.extend(self.generators.iter().map(|g| g.name.clone()));
        for e in &self.elements {
            if !cands.contains(&e.name) {
                cands.push(e.name.clone());
            }
        }
        for l in self.trivial.lattice.labels().unwrap().iter().skip(2) {
            cands.push(l.clone());
        }
        let mut chosen: Vec<Vec<BigInt>> = Vec::new();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for name in cands {
            if chosen.len() == n {
                break;
            }
            let v = self.label_vector(&name).unwrap();
            let c = coords_in_hnf(&v).expect("generator lies in NS");
            let mut trial = chosen.clone();
            trial.push(c);
            let m = IntMatrix::from_rows_with_cols(&trial, n);
            if m.to_rat().rank() == trial.len() && is_primitive_rows(&m) {
                chosen = trial;
                rows.push(v);
                labels.push(name);
            }
        }
        if chosen.len() == n {
            return Ok((RatMatrix::from_rows(&rows, n), labels));
        }
        let labels = (1..=n).map(|i| format!("b{i}")).collect();
        Ok((hnf.clone(), labels))
    }

    /// Matrix (columns = images of NS basis vectors) of a linear map given by
    /// the images of the trivial-lattice basis vectors.
    fn transport(&self, images_tr: &RatMatrix) -> Result<IntMatrix> {
        let n = self.lattice.rank();
        let mut m = IntMatrix::zeros(n, n);
        for k in 0..n {
            let b = self.basis_tr.row_vec(k);
            let img: Vec<Rat> = (0..images_tr.ncols())
                .map(|c| b.iter().enumerate().map(|(i, bi)| bi * &images_tr[(i, c)]).sum())
                .collect();
            let coords = self
                .ns_integral_coordinates(&img)
                .ok_or_else(|| Error::Inconsistent(format!("image of {} is not in NS", self.lattice.label(k))))?;
            for (r, x) in coords.into_iter().enumerate() {
                m[(r, k)] = x;
            }
        }
        Ok(m)
    }

    /// Images of the trivial-lattice basis under a map that permutes fibers
    /// and components and sends s to `zero_image`.
    fn component_map(&self, zero_image: &[Rat], fiber_map: &[usize], comp_maps: &[Vec<usize>]) -> Result<RatMatrix> {
        let tr = &self.trivial;
        let n = tr.rank();
        let mut rows = vec![tr.unit(0), zero_image.to_vec()];
        for (idx, _, t) in tr.config.reducible() {
            let target = fiber_map[idx];
            if tr.config.fibers[target].1 != t {
                return Err(Error::Inconsistent("fiber map changes the fiber type".into()));
            }
            for node in 1..t.components() {
                rows.push(tr.component_class(target, comp_maps[idx][node]));
            }
        }
        Ok(RatMatrix::from_rows(&rows, n))
    }

    /// The isometry σ_t of translation by a Mordell–Weil element.
    pub fn translation_isometry(&self, name: &str) -> Result<LatticeIsometry> {
        let t = self.element(name).ok_or_else(|| Error::Unknown(name.to_string()))?;
        let cfg = &self.trivial.config;
        let fiber_map: Vec<usize> = (0..cfg.fibers.len()).collect();
        let comp_maps: Vec<Vec<usize>> =
            cfg.fibers.iter().enumerate().map(|(k, (_, ft))| ft.translation(t.pattern[k])).collect();
        let images = self.component_map(&t.class, &fiber_map, &comp_maps)?;
        let m = self.transport(&images)?;
        let iso = LatticeIsometry::new(&self.lattice, m)?;
        // σ_t(r) = r + t on every element of the group
        for r in &self.elements {
            let sum: Vec<u32> = r
                .coeffs
                .iter()
                .zip(&t.coeffs)
                .zip(&self.generators)
                .map(|((a, b), g)| (a + b) % g.order)
                .collect();
            let target = self.elements.iter().find(|e| e.coeffs == sum).unwrap();
            self.check_image(&iso, &r.class, &target.class, &format!("σ_{name}({})", r.name))?;
        }
        let order = t
            .coeffs
            .iter()
            .zip(&self.generators)
            .map(|(&c, g)| g.order / c.gcd(&g.order).max(1))
            .fold(1u32, |a, b| a.lcm(&b));
        if iso.order != order.max(1) {
            return Err(Error::Inconsistent(format!("σ_{name} has order {} instead of {order}", iso.order)));
        }
        Ok(iso)
    }

    fn check_image(&self, iso: &LatticeIsometry, from: &[Rat], to: &[Rat], what: &str) -> Result<()> {
        let x = self.ns_integral_coordinates(from).unwrap();
        let y = self.ns_integral_coordinates(to).unwrap();
        if iso.apply(&x) != y {
            return Err(Error::Inconsistent(format!("{what} does not match")));
        }
        Ok(())
    }

    /// An isometry given by a fiber permutation, component permutations and
    /// declared images of the Mordell–Weil generators.
    pub fn base_involution_isometry(&self, action: &ActionDoc) -> Result<LatticeIsometry> {
        let cfg = &self.trivial.config;
        let nf = cfg.fibers.len();
        let mut fiber_map: Vec<usize> = (0..nf).collect();
        for (k, &v) in &action.fiber_map {
            let from = parse_label(cfg, k)?;
            let to = cfg.index_of_label(v).ok_or_else(|| Error::Schema(format!("unknown fiber {v}")))?;
            fiber_map[from] = to;
        }
        let mut comp_maps: Vec<Vec<usize>> = cfg.fibers.iter().map(|(_, t)| (0..t.components()).collect()).collect();
        for (k, perm) in &action.component_maps {
            let from = parse_label(cfg, k)?;
            let m = cfg.fibers[from].1.components();
            let mut sorted = perm.clone();
            sorted.sort_unstable();
            if sorted != (0..m).collect::<Vec<_>>() {
                return Err(Error::Schema(format!("component map of fiber {k} is not a permutation")));
            }
            comp_maps[from] = perm.clone();
        }
        let zero = self
            .label_vector(action.zero_image.as_deref().unwrap_or("s"))
            .ok_or_else(|| Error::Unknown("zero section image".into()))?;
        let images = self.component_map(&zero, &fiber_map, &comp_maps)?;
        let m = self.transport(&images)?;
        let iso = LatticeIsometry::new(&self.lattice, m)?;
        for (from, to) in &action.section_images {
            let a = self.label_vector(from).ok_or_else(|| Error::Unknown(from.clone()))?;
            let b = self.label_vector(to).ok_or_else(|| Error::Unknown(to.clone()))?;
            self.check_image(&iso, &a, &b, &format!("{}({from}) = {to}", action.name))?;
        }
        Ok(iso)
    }
}

fn parse_label(cfg: &FiberConfiguration, key: &str) -> Result<usize> {
    let l: u32 = key.trim().parse().map_err(|_| Error::Schema(format!("bad fiber label {key:?}")))?;
    cfg.index_of_label(l).ok_or_else(|| Error::Schema(format!("unknown fiber {l}")))
}

/// Action of an automorphism of the base, entered as data.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ActionDoc {
    pub name: String,
    #[serde(default)]
    pub source: String,
    pub fibration: String,
    #[serde(default)]
    pub fiber_map: BTreeMap<String, u32>,
    #[serde(default)]
    pub component_maps: BTreeMap<String, Vec<usize>>,
    #[serde(default)]
    pub zero_image: Option<String>,
    #[serde(default)]
    pub section_images: BTreeMap<String, String>,
}

/// Canonical HNF of the row lattice spanned by rational rows (for equality tests).
pub fn rational_hnf(rows: &RatMatrix) -> (BigInt, IntMatrix) {
    let d = rows.denominator();
    let scaled = rows.scale(&rat_int(&d)).to_int().unwrap();
    (d, hermite_normal_form(&scaled))
}

pub fn positive(x: &BigInt) -> bool {
    x.is_positive()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn six_i4() -> FibrationDoc {
        let mut doc = FibrationDoc {
            name: "6I4".into(),
            source: String::new(),
            group: None,
            chi: 2,
            fibers: (1..=6).map(|l| FiberEntry { label: l, kind: "I4".into() }).collect(),
            sections: vec![],
            transcendental: None,
            preferred_basis: None,
            glue: None,
        };
        let pat = |v: [usize; 6]| v.iter().enumerate().map(|(i, &c)| ((i + 1).to_string(), c)).collect();
        doc.sections.push(SectionEntry { name: "t1".into(), order: 4, meets: pat([1, 1, 1, 1, 2, 0]), meets_zero: 0 });
        doc.sections.push(SectionEntry { name: "u1".into(), order: 4, meets: pat([2, 0, 3, 1, 1, 1]), meets_zero: 0 });
        doc
    }

    #[test]
    fn trivial_descriptions() {
        let doc = |fibers: &[&str]| FibrationDoc {
            name: "t".into(),
            source: String::new(),
            group: None,
            chi: 2,
            fibers: fibers.iter().enumerate().map(|(i, k)| FiberEntry { label: i as u32 + 1, kind: k.to_string() }).collect(),
            sections: vec![],
            transcendental: None,
            preferred_basis: None,
            glue: None,
        };
        let tr = |f: &[&str]| TrivialLattice::new(&FiberConfiguration::from_doc(&doc(f)).unwrap()).description();
        assert_eq!(tr(&[]), "U");
        assert_eq!(tr(&["I2", "I2", "I1", "IV*"]), "U⊕A1(-1)^2⊕E6(-1)");
        assert_eq!(tr(&["I*0", "I4"]), "U⊕A3(-1)⊕D4(-1)");
    }

    #[test]
    fn parse_types() {
        assert_eq!("I4".parse::<FiberType>().unwrap(), FiberType::I(4));
        assert_eq!("I*2".parse::<FiberType>().unwrap(), FiberType::IStar(2));
        assert_eq!("I0*".parse::<FiberType>().unwrap(), FiberType::IStar(0));
        assert_eq!("IV*".parse::<FiberType>().unwrap(), FiberType::IVStar);
        assert!("II".parse::<FiberType>().is_err());
        assert!("I0".parse::<FiberType>().is_err());
    }

    #[test]
    fn fiber_class_is_orthogonal_to_components() {
        let types = [
            FiberType::I(2),
            FiberType::I(5),
            FiberType::IV,
            FiberType::IStar(0),
            FiberType::IStar(3),
            FiberType::IVStar,
            FiberType::IIIStar,
        ];
        for t in types {
            let g = t.component_gram();
            let m: Vec<BigInt> = t.multiplicities().into_iter().map(int).collect();
            assert!(g.mul_vec(&m).iter().all(Zero::is_zero), "{t}");
            assert_eq!(t.simple_components().len() as u32, t.group_order());
        }
    }

    #[test]
    fn translations_are_diagram_automorphisms_and_respect_the_group_law() {
        let types = [FiberType::I(6), FiberType::IV, FiberType::IStar(2), FiberType::IStar(1), FiberType::IVStar, FiberType::IIIStar];
        for t in types {
            let g = t.component_gram();
            let simple = t.simple_components();
            for &k in &simple {
                let p = t.translation(k);
                assert_eq!(p[0], k, "{t}: translation by {k} sends C0 to C{k}");
                for a in 0..t.components() {
                    for b in 0..t.components() {
                        assert_eq!(g[(a, b)], g[(p[a], p[b])], "{t}");
                    }
                }
                for &j in &simple {
                    let q = t.translation(j);
                    let comp: Vec<usize> = (0..t.components()).map(|i| p[q[i]]).collect();
                    assert_eq!(comp, t.translation(t.add(k, j)), "{t}");
                }
            }
        }
    }

    #[test]
    fn trivial_lattice_examples() {
        let doc = six_i4();
        let cfg = FiberConfiguration::from_doc(&doc).unwrap();
        let tr = TrivialLattice::new(&cfg);
        assert_eq!(tr.rank(), 20);
        assert_eq!(tr.lattice.det(), int(-4096));
        let mut z2 = doc.clone();
        z2.fibers = (1..=16).map(|l| FiberEntry { label: l, kind: if l <= 8 { "I2" } else { "I1" }.into() }).collect();
        let cfg = FiberConfiguration::from_doc(&z2).unwrap();
        assert_eq!(TrivialLattice::new(&cfg).rank(), 10);
        assert!(cfg.is_k3());
        let mut empty = doc.clone();
        empty.fibers.clear();
        let cfg = FiberConfiguration::from_doc(&empty).unwrap();
        assert_eq!(TrivialLattice::new(&cfg).lattice.det(), int(-1));
    }

    #[test]
    fn picard_ranks() {
        let cfg = FiberConfiguration::from_doc(&six_i4()).unwrap();
        assert_eq!(picard_rank(&cfg, 0), 20);
        let mut d = six_i4();
        d.fibers = (1..=12).map(|l| FiberEntry { label: l, kind: "I2".into() }).collect();
        assert_eq!(picard_rank(&FiberConfiguration::from_doc(&d).unwrap(), 2), 16);
        d.fibers = (1..=24).map(|l| FiberEntry { label: l, kind: "I1".into() }).collect();
        assert_eq!(picard_rank(&FiberConfiguration::from_doc(&d).unwrap(), 0), 2);
    }

    #[test]
    fn heights() {
        let doc = six_i4();
        let cfg = FiberConfiguration::from_doc(&doc).unwrap();
        let t = section_pattern(&cfg, &doc.sections[0]).unwrap();
        let u = section_pattern(&cfg, &doc.sections[1]).unwrap();
        assert_eq!(height_pairing(&cfg, &t, 0, &t, 0, 0, true).unwrap(), Rat::zero());
        assert_eq!(height_pairing(&cfg, &t, 0, &u, 0, 0, false).unwrap(), Rat::zero());
        let zero = vec![0; 6];
        assert_eq!(height_pairing(&cfg, &zero, 1, &zero, 1, 0, true).unwrap(), rat(6, 1));
        assert!(FiberType::IIIStar.contribution(1, 1).is_ok());
        assert_eq!(FiberType::IStar(2).contribution(2, 3).unwrap(), rat(1, 1));
    }

    #[test]
    fn six_i4_neron_severi() {
        let ns = NeronSeveri::build(&six_i4()).unwrap();
        assert_eq!(ns.index, int(16));
        assert_eq!(ns.lattice.rank(), 20);
        assert_eq!(ns.lattice.det(), int(-16));
        let t1 = ns.element("t1").unwrap().class.clone();
        let expected = ns
            .trivial
            .parse_combination(
                "2F + s - 3/4 C1^(1) - 1/2 C2^(1) - 1/4 C3^(1) - 3/4 C1^(2) - 1/2 C2^(2) - 1/4 C3^(2) \
                 - 3/4 C1^(3) - 1/2 C2^(3) - 1/4 C3^(3) - 3/4 C1^(4) - 1/2 C2^(4) - 1/4 C3^(4) \
                 - 1/2 C1^(5) - C2^(5) - 1/2 C3^(5)",
            )
            .unwrap();
        assert_eq!(t1, expected);
        let s = ns.element("s").unwrap().class.clone();
        assert_eq!(s, ns.trivial.parse_combination("s").unwrap());
    }

    #[test]
    fn translations_on_six_i4() {
        let ns = NeronSeveri::build(&six_i4()).unwrap();
        let st = ns.translation_isometry("t1").unwrap();
        assert_eq!(st.order, 4);
        assert!(ns.translation_isometry("s").unwrap().is_identity());
        let su = ns.translation_isometry("u1").unwrap();
        assert_eq!(st.matrix.mul(&su.matrix), su.matrix.mul(&st.matrix));
        let f = ns.ns_integral_coordinates(&ns.trivial.parse_combination("F").unwrap()).unwrap();
        assert_eq!(st.apply(&f), f);
        let c = ns.ns_integral_coordinates(&ns.trivial.parse_combination("C1^(1)").unwrap()).unwrap();
        let c3 = ns.ns_integral_coordinates(&ns.trivial.parse_combination("C3^(1)").unwrap()).unwrap();
        assert_eq!(st.matrix.pow(2).mul_vec(&c), c3);
    }

    #[test]
    fn inconsistent_sections_are_rejected() {
        let mut doc = six_i4();
        doc.sections[0].meets.insert("6".into(), 1);
        assert!(matches!(NeronSeveri::build(&doc), Err(Error::Inconsistent(_))));
    }
}
