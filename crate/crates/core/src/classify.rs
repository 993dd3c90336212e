//! Candidate Néron–Severi lattices ℤL ⊕ Ω_G (L² = 2d) and their even
//! overlattices, embedding obstructions into the K3 lattice, and
//! representation of 2d by Ω_G^⊥.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::bundle::Bundle;
use crate::error::{Error, Result};
use crate::lattice::{glue_overlattice, DiscriminantGroup, FiniteQuadraticForm, Lattice, Sublattice};
use crate::linalg::{int, integral_coordinates, rat_int, IntMatrix, Rat};

/// The glue class (L/r, v/r).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GlueVector {
    pub r: u64,
    /// Integral vector of Ω in its own coordinates.
    #[serde(serialize_with = "crate::linalg::serialize_ints")]
    pub v: Vec<BigInt>,
}

#[derive(Clone, Debug)]
pub struct NSCandidate {
    pub group: String,
    pub d: u64,
    pub index_r: u64,
    /// Basis: the overlattice basis of ℤL ⊕ Ω (L first).
    pub lattice: Lattice,
    pub glue: Option<GlueVector>,
}

/// Discriminant classes x of Ω giving admissible glue (L/r, x), as (r, x),
/// ordered by r and then by coordinates. Distinct x give distinct overlattices.
pub fn glue_classes(omega: &Lattice, d: u64) -> Result<Vec<(u64, Vec<u64>)>> {
    glue_classes_in_form(&DiscriminantGroup::of(omega)?.form(), d)
}

/// Same as [`glue_classes`] for an abstract discriminant form.
pub fn glue_classes_in_form(form: &FiniteQuadraticForm, d: u64) -> Result<Vec<(u64, Vec<u64>)>> {
    if d == 0 {
        return Err(Error::Inconsistent("d must be positive".into()));
    }
    let two_d = 2 * d;
    let mut out = Vec::new();
    for x in form.elements() {
        let r = form.order_of(&x);
        if r == 1 || two_d % r != 0 {
            continue;
        }
        // L²/r² + q(x) ∈ 2ℤ
        let total = Rat::new(int(two_d as i64), int((r * r) as i64)) + form.q_of(&x);
        if total.is_integer() && total.to_integer().is_even() {
            out.push((r, x));
        }
    }
    out.sort();
    Ok(out)
}

/// Indices r of the even overlattices of ℤL ⊕ Ω in which Ω and L stay primitive.
pub fn candidate_indices(omega: &Lattice, d: u64) -> Result<BTreeSet<u64>> {
    candidate_indices_in_form(&DiscriminantGroup::of(omega)?.form(), d)
}

pub fn candidate_indices_in_form(form: &FiniteQuadraticForm, d: u64) -> Result<BTreeSet<u64>> {
    let mut s: BTreeSet<u64> = glue_classes_in_form(form, d)?.into_iter().map(|(r, _)| r).collect();
    s.insert(1);
    Ok(s)
}

/// Split lattice ⟨2d⟩ ⊕ Ω.
pub fn split_lattice(omega: &Lattice, d: u64) -> Lattice {
    Lattice::new(IntMatrix::diagonal(&[int(2 * d as i64)])).expect("nonzero").direct_sum(omega)
}

/// The split candidate and every overlattice from glue classes, deduplicated
/// by their Hermite bases.
pub fn even_overlattices(group: &str, d: u64, omega: &Lattice) -> Result<Vec<NSCandidate>> {
    if omega.definiteness() != Some(-1) || !omega.is_even() {
        return Err(Error::Inconsistent("Ω must be even and negative definite".into()));
    }
    let split = split_lattice(omega, d);
    let mut out = vec![NSCandidate { group: group.into(), d, index_r: 1, lattice: split.clone(), glue: None }];
    let disc = DiscriminantGroup::of(omega)?;
    let n = omega.rank();
    let mut seen = Vec::new();
    for (r, x) in glue_classes(omega, d)? {
        let mut lift = vec![Rat::zero(); n];
        for (c, g) in x.iter().zip(&disc.generator_lifts) {
            for (l, gi) in lift.iter_mut().zip(g) {
                *l += Rat::from_integer(int(*c as i64)) * gi;
            }
        }
        let rr = Rat::from_integer(int(r as i64));
        let v: Vec<BigInt> = lift
            .iter()
            .map(|y| {
                let z = y * &rr;
                debug_assert!(z.is_integer());
                z.to_integer()
            })
            .collect();
        let mut row = vec![Rat::one() / &rr];
        row.extend(lift);
        let over = glue_overlattice(&split, &[row])?;
        if over.index != int(r as i64) {
            return Err(Error::Inconsistent(format!("glue of order {r} gave index {}", over.index)));
        }
        if seen.contains(&over.basis) {
            continue;
        }
        check_candidate(&split, &over.basis, &over.lattice, d, r)?;
        seen.push(over.basis.clone());
        out.push(NSCandidate {
            group: group.into(),
            d,
            index_r: r,
            lattice: over.lattice,
            glue: Some(GlueVector { r, v }),
        });
    }
    Ok(out)
}

/// Determinant, parity and primitivity of Ω and L in a glued candidate.
fn check_candidate(split: &Lattice, basis: &crate::linalg::RatMatrix, l: &Lattice, d: u64, r: u64) -> Result<()> {
    let want = Rat::new(split.det(), int((r * r) as i64));
    if rat_int(&l.det()) != want {
        return Err(Error::Inconsistent(format!("det {} instead of {want}", l.det())));
    }
    if !l.is_even() {
        return Err(Error::Inconsistent("odd overlattice".into()));
    }
    let n = split.rank();
    let mut omega_rows = IntMatrix::zeros(n - 1, n);
    for i in 1..n {
        let mut e = vec![Rat::zero(); n];
        e[i] = Rat::one();
        let c = integral_coordinates(basis, &e).ok_or_else(|| Error::Inconsistent("Ω not in overlattice".into()))?;
        for (j, x) in c.into_iter().enumerate() {
            omega_rows[(i - 1, j)] = x;
        }
    }
    if !Sublattice::new(l.clone(), omega_rows)?.is_primitive() {
        return Err(Error::Inconsistent(format!("Ω not primitive in the index {r} candidate for d = {d}")));
    }
    Ok(())
}

/// Ω_G from the bundle, then every candidate for L² = 2d.
pub fn classify_ns(b: &Bundle, group: &str, d: u64) -> Result<Vec<NSCandidate>> {
    let g = b.group(group)?;
    let omega = b.omega(g)?.omega.lattice();
    even_overlattices(&g.display, d, &omega)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "reason", rename_all = "snake_case")]
pub enum Obstruction {
    Obstructed(String),
    Unobstructed,
}

/// Necessary condition for a primitive embedding into the K3 lattice: the
/// discriminant group needs at most 22 − rank generators.
pub fn embedding_obstruction(m: &Lattice) -> Result<Obstruction> {
    let sig = m.signature()?;
    if sig != (1, m.rank() - 1) {
        return Err(Error::WrongSignature(format!("signature {sig:?}, expected (1, {})", m.rank() - 1)));
    }
    if m.rank() > 22 {
        return Ok(Obstruction::Obstructed(format!("rank {} exceeds 22", m.rank())));
    }
    let disc = DiscriminantGroup::of(m)?;
    let room = 22 - m.rank();
    Ok(if disc.length() > room {
        Obstruction::Obstructed(format!(
            "discriminant group {} needs {} generators but the complement has rank {room}",
            disc.group_string(),
            disc.length()
        ))
    } else {
        Obstruction::Unobstructed
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Representation {
    /// Primitive vector x with xᵀGx = N.
    Found(#[serde(serialize_with = "crate::linalg::serialize_ints")] Vec<BigInt>),
    /// No primitive solution exists; the reason names the modulus.
    NotRepresented(String),
    NoneInBox,
}

fn norm_i64(g: &[Vec<i64>], x: &[i64]) -> i64 {
    let mut s = 0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            s += x[i] * g[i][j] * x[j];
        }
    }
    s
}

fn primes_of(n: &BigInt) -> Vec<u64> {
    let mut n = n.abs().to_u64().unwrap_or(0);
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Whether some x ≢ 0 mod p has xᵀGx ≡ N mod p.
fn solvable_mod_p(g: &[Vec<i64>], n: i64, p: u64) -> bool {
    let k = g.len();
    let p = p as i64;
    let mut x = vec![0i64; k];
    loop {
        let mut i = 0;
        while i < k {
            x[i] += 1;
            if x[i] < p {
                break;
            }
            x[i] = 0;
            i += 1;
        }
        if i == k {
            return false;
        }
        if (norm_i64(g, &x) - n).rem_euclid(p) == 0 {
            return true;
        }
    }
}

/// Closed-form solutions for 4p² + 2pq + 2q² + 14rs, in either block order.
fn zeta7_family(g: &[Vec<i64>], n: i64) -> Option<Vec<i64>> {
    let a = [[4, 1], [1, 2]];
    let u7 = [[0, 7], [7, 0]];
    let block = |off: usize, m: &[[i64; 2]; 2]| (0..2).all(|i| (0..2).all(|j| g[off + i][off + j] == m[i][j]));
    let cross_zero = (0..2).all(|i| (2..4).all(|j| g[i][j] == 0 && g[j][i] == 0));
    if g.len() != 4 || !cross_zero || n <= 0 || n % 2 != 0 {
        return None;
    }
    let d = n / 2;
    let k = d / 7;
    let (p, q, r, s) = match d % 7 {
        0 => (0, 0, 1, k),
        1 => (0, 1, 1, k),
        2 => (1, 0, 1, k),
        4 => (1, 1, 1, k),
        _ => return None,
    };
    if block(0, &a) && block(2, &u7) {
        Some(vec![p, q, r, s])
    } else if block(0, &u7) && block(2, &a) {
        Some(vec![r, s, p, q])
    } else {
        None
    }
}

/// Primitive representation of N by the Gram `gram` (rank ≤ 4): a definitive
/// negative from congruences mod the primes dividing 2·det, else a search of
/// the box [−box, box]ⁿ ordered by ℓ¹ size, else the ℤ/7 closed forms.
pub fn represent(gram: &IntMatrix, n: &BigInt, radius: u32) -> Result<Representation> {
    let k = gram.nrows();
    if k == 0 || k > 4 || !gram.is_symmetric() {
        return Err(Error::Inconsistent("represent needs a symmetric Gram of rank 1 to 4".into()));
    }
    let g: Vec<Vec<i64>> = (0..k)
        .map(|i| (0..k).map(|j| gram[(i, j)].to_i64().ok_or_else(|| Error::Inconsistent("entry too large".into()))).collect())
        .collect::<Result<_>>()?;
    let nn = n.to_i64().ok_or_else(|| Error::Inconsistent("target too large".into()))?;
    for p in primes_of(&(gram.det() * int(2))) {
        if p.pow(k as u32) <= 1_000_000 && !solvable_mod_p(&g, nn, p) {
            return Ok(Representation::NotRepresented(format!("no primitive solution mod {p}")));
        }
    }
    let b = radius as i64;
    let mut best: Option<(i64, Vec<i64>)> = None;
    let mut x = vec![-b; k];
    loop {
        if norm_i64(&g, &x) == nn && x.iter().fold(0i64, |a, &c| a.gcd(&c)) == 1 {
            let size: i64 = x.iter().map(|c| c.abs()).sum();
            // smallest ℓ¹ size, then larger coordinates first
            let key: Vec<i64> = x.iter().map(|c| -c).collect();
            if best.as_ref().map_or(true, |(s, y)| (size, &key) < (*s, &y.iter().map(|c| -c).collect::<Vec<_>>())) {
                best = Some((size, x.clone()));
            }
        }
        // odometer over the box
        let Some(i) = (0..k).rev().find(|&i| x[i] < b) else { break };
        x[i] += 1;
        for c in x.iter_mut().skip(i + 1) {
            *c = -b;
        }
    }
    if let Some((_, y)) = best.or_else(|| zeta7_family(&g, nn).map(|y| (0, y))) {
        return Ok(Representation::Found(y.into_iter().map(BigInt::from).collect()));
    }
    Ok(Representation::NoneInBox)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "reason", rename_all = "snake_case")]
pub enum Verdict {
    Embeddable(String),
    NotEmbeddable(String),
    /// Unobstructed but not decided.
    Undetermined(String),
}

#[derive(Clone, Debug, Serialize)]
pub struct CandidateReport {
    pub group: String,
    pub d: u64,
    pub index: u64,
    pub det: String,
    pub disc_group: String,
    pub glue: Option<GlueVector>,
    pub obstruction: Obstruction,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub group: String,
    pub d: u64,
    pub omega_rank: usize,
    /// 19 − rank Ω_G.
    pub moduli_dimension: i64,
    pub representation: Option<Representation>,
    pub candidates: Vec<CandidateReport>,
}

impl Classification {
    pub fn embeddable_indices(&self) -> BTreeSet<u64> {
        self.candidates.iter().filter(|c| matches!(c.verdict, Verdict::Embeddable(_))).map(|c| c.index).collect()
    }
}

/// Candidates with obstructions and, where Ω_G^⊥ has rank ≤ 4, a verdict from
/// representing 2d primitively by Ω_G^⊥: if no such vector exists nothing
/// embeds; if one exists, the primitive closure of ℤL ⊕ Ω_G is a candidate, so
/// a unique unobstructed index class embeds.
pub fn classify_report(b: &Bundle, group: &str, d: u64, radius: u32) -> Result<Classification> {
    let g = b.group(group)?;
    let omega = b.omega(g)?.omega.lattice();
    let cands = even_overlattices(&g.display, d, &omega)?;
    let perp = match &g.omega_perp {
        Some(r) => Some(Lattice::from_json(&r.gram)?),
        None => None,
    };
    let representation = match &perp {
        Some(p) if p.rank() <= 4 => Some(represent(p.gram(), &int(2 * d as i64), radius)?),
        _ => None,
    };
    let mut obstructions = Vec::new();
    for c in &cands {
        obstructions.push(embedding_obstruction(&c.lattice)?);
    }
    let open: BTreeSet<u64> = cands
        .iter()
        .zip(&obstructions)
        .filter(|(_, o)| **o == Obstruction::Unobstructed)
        .map(|(c, _)| c.index_r)
        .collect();
    let mut candidates = Vec::new();
    for (c, o) in cands.iter().zip(obstructions) {
        let verdict = match (&o, &representation) {
            (Obstruction::Obstructed(why), _) => Verdict::NotEmbeddable(why.clone()),
            (_, Some(Representation::NotRepresented(why))) => {
                Verdict::NotEmbeddable(format!("Ω^⊥ does not represent {}: {why}", 2 * d))
            }
            (_, Some(Representation::Found(x))) if open.len() == 1 => Verdict::Embeddable(format!(
                "L = {x:?} in Ω^⊥ and index {} is the only unobstructed class",
                c.index_r
            )),
            _ => Verdict::Undetermined("unobstructed; embedding not decided".into()),
        };
        let disc = DiscriminantGroup::of(&c.lattice)?;
        candidates.push(CandidateReport {
            group: c.group.clone(),
            d,
            index: c.index_r,
            det: c.lattice.det().to_string(),
            disc_group: disc.group_string(),
            glue: c.glue.clone(),
            obstruction: o,
            verdict,
        });
    }
    Ok(Classification {
        group: g.display.clone(),
        d,
        omega_rank: omega.rank(),
        moduli_dimension: 19 - omega.rank() as i64,
        representation,
        candidates,
    })
}

/// Index sets allowed by the case lists for each of the fourteen groups. These
/// follow from the discriminant group alone; the discriminant form can rule
/// out some of them.
pub fn expected_indices(group_key: &str, d: u64) -> Option<BTreeSet<u64>> {
    let two_d = 2 * d;
    let divides = |k: u64| two_d % k == 0;
    let set = |v: &[u64]| v.iter().copied().collect::<BTreeSet<u64>>();
    Some(match group_key {
        "Z2" => if divides(4) { set(&[1, 2]) } else { set(&[1]) },
        "Z3" | "Z5" | "Z7" => {
            let p: u64 = group_key[1..].parse().ok()?;
            if d % p == 0 { set(&[1, p]) } else { set(&[1]) }
        }
        "Z4" | "Z2^2" | "Z2^3" | "Z2xZ4" => if divides(4) { set(&[1, 2, 4]) } else { set(&[1, 2]) },
        "Z6" => if d % 3 == 0 { set(&[1, 2, 3, 6]) } else { set(&[1, 2]) },
        "Z8" | "Z2^4" | "Z4^2" => {
            if divides(8) { set(&[1, 2, 4, 8]) } else if divides(4) { set(&[1, 2, 4]) } else { set(&[1, 2]) }
        }
        "Z3^2" => if d % 9 == 0 { set(&[1, 3, 9]) } else if d % 3 == 0 { set(&[1, 3]) } else { set(&[1]) },
        "Z2xZ6" => (1..=12).filter(|k| 12 % k == 0 && divides(*k)).collect(),
        _ => return None,
    })
}
