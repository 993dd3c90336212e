//! Integral lattices given by Gram matrices, their discriminant forms,
//! sublattices and overlattices.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::linalg::{
    bilinear, hermite_normal_form, int, integer_kernel, rat_int, smith_normal_form, IntMatrix, Rat,
    RatMatrix,
};

/// A free ℤ-module with an integral symmetric bilinear form.
#[derive(Clone, PartialEq, Eq)]
pub struct Lattice {
    gram: IntMatrix,
    labels: Option<Vec<String>>,
}

impl fmt::Debug for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Lattice(rank {})\n{}", self.rank(), self.gram)
    }
}

impl Lattice {
    pub fn new(gram: IntMatrix) -> Result<Self> {
        if !gram.is_symmetric() {
            return Err(Error::NotSymmetric);
        }
        Ok(Lattice { gram, labels: None })
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let n = rows.len();
        Self::new(IntMatrix::from_rows_with_cols(rows, n))
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        assert_eq!(labels.len(), self.rank());
        self.labels = Some(labels);
        self
    }

    pub fn gram(&self) -> &IntMatrix {
        &self.gram
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => format!("e{}", i + 1),
        }
    }

    pub fn rank(&self) -> usize {
        self.gram.nrows()
    }

    pub fn det(&self) -> BigInt {
        self.gram.det()
    }

    pub fn is_even(&self) -> bool {
        (0..self.rank()).all(|i| self.gram[(i, i)].is_even())
    }

    pub fn is_nondegenerate(&self) -> bool {
        !self.det().is_zero()
    }

    pub fn norm(&self, v: &[BigInt]) -> BigInt {
        crate::linalg::bilinear_int(&self.gram, v, v)
    }

    pub fn product(&self, v: &[BigInt], w: &[BigInt]) -> BigInt {
        crate::linalg::bilinear_int(&self.gram, v, w)
    }

    pub fn product_rat(&self, v: &[Rat], w: &[Rat]) -> Rat {
        bilinear(&self.gram, v, w)
    }

    /// (positive, negative) inertia by congruence diagonalization over ℚ.
    pub fn signature(&self) -> Result<(usize, usize)> {
        let (p, n, z) = inertia(&self.gram);
        if z > 0 {
            return Err(Error::Degenerate);
        }
        Ok((p, n))
    }

    /// Positive definite, negative definite or neither.
    pub fn definiteness(&self) -> Option<i8> {
        let (p, n) = self.signature().ok()?;
        if n == 0 {
            Some(1)
        } else if p == 0 {
            Some(-1)
        } else {
            None
        }
    }

    pub fn discriminant_group(&self) -> Result<DiscriminantGroup> {
        DiscriminantGroup::of(self)
    }

    pub fn direct_sum(&self, other: &Lattice) -> Lattice {
        let labels = match (&self.labels, &other.labels) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).cloned().collect()),
            _ => None,
        };
        Lattice { gram: self.gram.block_diag(&other.gram), labels }
    }

    pub fn direct_sum_all(parts: &[Lattice]) -> Lattice {
        let mut acc = Lattice { gram: IntMatrix::zeros(0, 0), labels: None };
        for p in parts {
            acc = acc.direct_sum(p);
        }
        acc
    }

    pub fn rescale(&self, n: i64) -> Result<Lattice> {
        if n == 0 {
            return Err(Error::ZeroScale);
        }
        Ok(Lattice { gram: self.gram.scale(&int(n)), labels: self.labels.clone() })
    }

    pub fn negate(&self) -> Lattice {
        Lattice { gram: self.gram.neg(), labels: self.labels.clone() }
    }

    /// Same lattice in a new basis given by the rows of `t` (must be unimodular
    /// for the result to describe the same lattice).
    pub fn change_basis(&self, t: &IntMatrix) -> Lattice {
        Lattice { gram: t.mul(&self.gram).mul(&t.transpose()), labels: None }
    }

    pub fn sublattice(&self, basis: IntMatrix) -> Result<Sublattice> {
        Sublattice::new(self.clone(), basis)
    }

    pub fn whole(&self) -> Sublattice {
        Sublattice { ambient: self.clone(), basis: IntMatrix::identity(self.rank()) }
    }

    /// Gram entries as decimal strings.
    pub fn gram_strings(&self) -> Vec<Vec<String>> {
        self.gram.to_string_rows()
    }

    pub fn from_gram_strings(rows: &[Vec<String>]) -> Result<Lattice> {
        let n = rows.len();
        let mut parsed = Vec::with_capacity(n);
        for r in rows {
            if r.len() != n {
                return Err(Error::Schema("Gram matrix is not square".into()));
            }
            let mut row = Vec::with_capacity(n);
            for x in r {
                row.push(x.trim().parse::<BigInt>().map_err(|_| Error::Schema(format!("bad integer {x:?}")))?);
            }
            parsed.push(row);
        }
        Self::new(IntMatrix::from_rows_with_cols(&parsed, n))
    }

    /// Parses a Gram matrix given as a JSON array of arrays of integers or
    /// decimal strings, or a string accepted by [`Lattice::from_expression`].
    pub fn from_json(value: &serde_json::Value) -> Result<Lattice> {
        if let Some(expr) = value.as_str() {
            return Self::from_expression(expr);
        }
        let rows = value.as_array().ok_or_else(|| Error::Schema("gram must be an array".into()))?;
        let mut out = Vec::with_capacity(rows.len());
        for r in rows {
            let r = r.as_array().ok_or_else(|| Error::Schema("gram rows must be arrays".into()))?;
            let mut row = Vec::with_capacity(r.len());
            for x in r {
                let s = match x {
                    serde_json::Value::String(s) => s.clone(),
                    serde_json::Value::Number(n) => n.to_string(),
                    _ => return Err(Error::Schema(format!("bad Gram entry {x}"))),
                };
                row.push(s);
            }
            out.push(row);
        }
        Self::from_gram_strings(&out)
    }

    /// Direct sums of named lattices, e.g. `U+U(3)^2+A2(-1)^2` or `<-8>+U(2)^3`.
    ///
    /// `U` is the hyperbolic plane, `An`, `Dn`, `En` are the positive definite
    /// root lattices, `N` is the (negative definite) Nikulin lattice and `<k>`
    /// is the rank one lattice with Gram (k). `(k)` rescales, `^m` repeats.
    /// Terms may also be inline Gram matrices such as `[[4,1],[1,2]]`.
    pub fn from_expression(expr: &str) -> Result<Lattice> {
        let bad = |m: &str| Error::Schema(format!("bad lattice expression {expr:?}: {m}"));
        let cleaned: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
        let cleaned = cleaned.replace('⊕', "+");
        let mut parts = Vec::new();
        // split on '+' outside brackets
        let mut depth = 0i32;
        let mut cur = String::new();
        let mut terms = Vec::new();
        for ch in cleaned.chars() {
            match ch {
                '(' | '<' | '[' => depth += 1,
                ')' | '>' | ']' => depth -= 1,
                _ => {}
            }
            if ch == '+' && depth == 0 {
                terms.push(std::mem::take(&mut cur));
            } else {
                cur.push(ch);
            }
        }
        terms.push(cur);
        for term in terms {
            if term.is_empty() {
                return Err(bad("empty term"));
            }
            if term.starts_with('[') {
                let v: serde_json::Value = serde_json::from_str(&term).map_err(|_| bad("inline matrix"))?;
                parts.push(Self::from_json(&v)?);
                continue;
            }
            let (body, reps) = match term.rsplit_once('^') {
                Some((b, r)) if !r.contains(')') && !r.contains('>') => {
                    (b.to_string(), r.parse::<usize>().map_err(|_| bad("exponent"))?)
                }
                _ => (term.clone(), 1),
            };
            let (name, scale) = if body.ends_with(')') && !body.starts_with('<') {
                let open = body.find('(').ok_or_else(|| bad("unbalanced"))?;
                let k = body[open + 1..body.len() - 1].parse::<i64>().map_err(|_| bad("scale"))?;
                (body[..open].to_string(), k)
            } else {
                (body.clone(), 1)
            };
            let base = if let Some(inner) = name.strip_prefix('<').and_then(|x| x.strip_suffix('>')) {
                diagonal(&[inner.parse::<i64>().map_err(|_| bad("rank one entry"))?])
            } else if name == "U" {
                hyperbolic_plane()
            } else if name == "N" {
                nikulin_lattice()
            } else {
                let kind = &name[..1];
                let n: usize = name[1..].parse().map_err(|_| bad("root lattice rank"))?;
                match (kind, n) {
                    ("A", n) if n >= 1 => root_a(n).negate(),
                    ("D", n) if n >= 4 => root_d(n).negate(),
                    ("E", 6..=8) => root_e(n).negate(),
                    _ => return Err(bad("unknown name")),
                }
            };
            let l = base.rescale(scale)?;
            for _ in 0..reps {
                parts.push(l.clone());
            }
        }
        Ok(Lattice::direct_sum_all(&parts))
    }
}

/// Counts of positive, negative and zero diagonal entries after symmetric
/// Gaussian elimination.
pub fn inertia(gram: &IntMatrix) -> (usize, usize, usize) {
    let n = gram.nrows();
    let mut a = gram.to_rat();
    let (mut pos, mut neg, mut zero) = (0, 0, 0);
    let mut active: Vec<usize> = (0..n).collect();
    while !active.is_empty() {
        // find a nonzero diagonal pivot, or manufacture one
        let piv = active.iter().copied().find(|&i| !a[(i, i)].is_zero());
        let p = match piv {
            Some(p) => p,
            None => {
                let pair = active.iter().enumerate().find_map(|(k, &i)| {
                    active[k + 1..].iter().copied().find(|&j| !a[(i, j)].is_zero()).map(|j| (i, j))
                });
                match pair {
                    None => {
                        zero += active.len();
                        break;
                    }
                    Some((i, j)) => {
                        // e_i += e_j gives diagonal 2 a_ij + a_jj = 2 a_ij ≠ 0
                        for c in 0..n {
                            let v = a[(j, c)].clone();
                            a[(i, c)] += v;
                        }
                        for r in 0..n {
                            let v = a[(r, j)].clone();
                            a[(r, i)] += v;
                        }
                        i
                    }
                }
            }
        };
        let d = a[(p, p)].clone();
        if d.is_positive() {
            pos += 1;
        } else {
            neg += 1;
        }
        active.retain(|&i| i != p);
        for &i in &active {
            let f = &a[(i, p)] / &d;
            if f.is_zero() {
                continue;
            }
            for &j in &active {
                let v = &f * &a[(p, j)];
                a[(i, j)] -= v;
            }
        }
        for &i in &active {
            a[(i, p)] = Rat::zero();
            a[(p, i)] = Rat::zero();
        }
    }
    (pos, neg, zero)
}

fn mod2(x: &Rat) -> Rat {
    // representative in (-2, 0]
    let two = Rat::from_integer(int(2));
    let mut r = x - (x / &two).floor() * &two; // [0, 2)
    if !r.is_zero() {
        r -= &two;
    }
    r
}

fn mod1(x: &Rat) -> Rat {
    x - x.floor()
}

/// L∨/L together with its discriminant quadratic form.
#[derive(Clone, Debug)]
pub struct DiscriminantGroup {
    pub invariant_factors: Vec<BigInt>,
    /// Generator lifts in L∨, in the coordinates of the basis of L.
    pub generator_lifts: Vec<Vec<Rat>>,
    /// q(gᵢ) in (−2, 0].
    pub q_values: Vec<Rat>,
    /// b(gᵢ, gⱼ) in [0, 1).
    pub b_values: Vec<Vec<Rat>>,
    coord_map: IntMatrix,
}

impl DiscriminantGroup {
    pub fn of(l: &Lattice) -> Result<Self> {
        let g = l.gram();
        if g.det().is_zero() {
            return Err(Error::Degenerate);
        }
        let s = smith_normal_form(g);
        let diag = s.diagonal();
        let idx: Vec<usize> = (0..diag.len()).filter(|&i| !diag[i].is_one()).collect();
        let invariant_factors: Vec<BigInt> = idx.iter().map(|&i| diag[i].clone()).collect();
        let generator_lifts: Vec<Vec<Rat>> = idx
            .iter()
            .map(|&i| {
                let d = Rat::from_integer(diag[i].clone());
                s.v.col_vec(i).iter().map(|x| rat_int(x) / &d).collect()
            })
            .collect();
        let coord_map = s.u.select_rows(&idx).mul(g);
        let k = idx.len();
        let mut q_values = Vec::with_capacity(k);
        let mut b_values = vec![vec![Rat::zero(); k]; k];
        for i in 0..k {
            q_values.push(mod2(&bilinear(g, &generator_lifts[i], &generator_lifts[i])));
            for j in 0..k {
                b_values[i][j] = mod1(&bilinear(g, &generator_lifts[i], &generator_lifts[j]));
            }
        }
        Ok(DiscriminantGroup { invariant_factors, generator_lifts, q_values, b_values, coord_map })
    }

    pub fn order(&self) -> BigInt {
        self.invariant_factors.iter().product()
    }

    pub fn is_trivial(&self) -> bool {
        self.invariant_factors.is_empty()
    }

    /// Minimal number of generators.
    pub fn length(&self) -> usize {
        self.invariant_factors.len()
    }

    pub fn exponent(&self) -> BigInt {
        self.invariant_factors.last().cloned().unwrap_or_else(BigInt::one)
    }

    /// Coordinates of y ∈ L∨ (given in L coordinates) with respect to the
    /// generator lifts, reduced modulo the invariant factors.
    pub fn coordinates(&self, y: &[Rat]) -> Option<Vec<BigInt>> {
        let gy = (0..self.coord_map.nrows())
            .map(|i| self.coord_map.row(i).iter().zip(y).map(|(a, b)| rat_int(a) * b).sum::<Rat>())
            .collect::<Vec<_>>();
        gy.iter()
            .zip(&self.invariant_factors)
            .map(|(c, h)| c.is_integer().then(|| c.to_integer().mod_floor(h)))
            .collect()
    }

    /// Canonical string such as `(ℤ/2ℤ)^2⊕(ℤ/8ℤ)^2`.
    pub fn group_string(&self) -> String {
        group_string(&self.invariant_factors)
    }

    pub fn form(&self) -> FiniteQuadraticForm {
        FiniteQuadraticForm {
            orders: self.invariant_factors.iter().map(|h| h.to_u64().expect("small factor")).collect(),
            q: self.q_values.clone(),
            b: self.b_values.clone(),
        }
    }
}

/// Renders invariant factors as a direct sum of cyclic groups.
pub fn group_string(factors: &[BigInt]) -> String {
    if factors.is_empty() {
        return "0".to_string();
    }
    let mut parts = Vec::new();
    let mut i = 0;
    while i < factors.len() {
        let mut j = i;
        while j < factors.len() && factors[j] == factors[i] {
            j += 1;
        }
        let n = j - i;
        if n == 1 {
            parts.push(format!("ℤ/{}ℤ", factors[i]));
        } else {
            parts.push(format!("(ℤ/{}ℤ)^{}", factors[i], n));
        }
        i = j;
    }
    parts.join("⊕")
}

/// A finite quadratic form on ⊕ ℤ/hᵢ with q in ℚ/2ℤ and b in ℚ/ℤ.
#[derive(Clone, Debug)]
pub struct FiniteQuadraticForm {
    pub orders: Vec<u64>,
    pub q: Vec<Rat>,
    pub b: Vec<Vec<Rat>>,
}

impl FiniteQuadraticForm {
    pub fn size(&self) -> u64 {
        self.orders.iter().product()
    }

    pub fn negate(&self) -> Self {
        FiniteQuadraticForm {
            orders: self.orders.clone(),
            q: self.q.iter().map(|x| mod2(&-x)).collect(),
            b: self.b.iter().map(|r| r.iter().map(|x| mod1(&-x)).collect()).collect(),
        }
    }

    pub fn q_of(&self, x: &[u64]) -> Rat {
        let mut acc = Rat::zero();
        for i in 0..x.len() {
            if x[i] == 0 {
                continue;
            }
            let xi = Rat::from_integer(BigInt::from(x[i]));
            acc += &xi * &xi * &self.q[i];
            for j in i + 1..x.len() {
                if x[j] != 0 {
                    acc += Rat::from_integer(BigInt::from(2 * x[i] * x[j])) * &self.b[i][j];
                }
            }
        }
        mod2(&acc)
    }

    pub fn b_of(&self, x: &[u64], y: &[u64]) -> Rat {
        let mut acc = Rat::zero();
        for i in 0..x.len() {
            if x[i] == 0 {
                continue;
            }
            for j in 0..y.len() {
                if y[j] != 0 {
                    acc += Rat::from_integer(BigInt::from(x[i] * y[j])) * &self.b[i][j];
                }
            }
        }
        mod1(&acc)
    }

    pub fn order_of(&self, x: &[u64]) -> u64 {
        x.iter().zip(&self.orders).fold(1u64, |acc, (&xi, &h)| {
            let o = h / xi.gcd(&h).max(1);
            let o = if xi == 0 { 1 } else { o };
            acc.lcm(&o)
        })
    }

    /// All elements in lexicographic order of coordinates.
    pub fn elements(&self) -> Vec<Vec<u64>> {
        let mut out = vec![vec![]];
        for &h in &self.orders {
            let mut next = Vec::with_capacity(out.len() * h as usize);
            for e in &out {
                for a in 0..h {
                    let mut v = e.clone();
                    v.push(a);
                    next.push(v);
                }
            }
            out = next;
        }
        out
    }

    pub fn add(&self, x: &[u64], y: &[u64]) -> Vec<u64> {
        x.iter().zip(y).zip(&self.orders).map(|((a, b), h)| (a + b) % h).collect()
    }

    pub fn scale(&self, k: u64, x: &[u64]) -> Vec<u64> {
        x.iter().zip(&self.orders).map(|(a, h)| (a * (k % h)) % h).collect()
    }

    fn generator(&self, i: usize) -> Vec<u64> {
        let mut g = vec![0; self.orders.len()];
        g[i] = 1;
        g
    }

    /// An isometry to `other`, as images of the generators, if one exists.
    pub fn find_isometry(&self, other: &FiniteQuadraticForm) -> Option<Vec<Vec<u64>>> {
        if self.orders != other.orders {
            return None;
        }
        if self.orders.is_empty() {
            return Some(vec![]);
        }
        let mut hist_a: HashMap<(u64, Rat), usize> = HashMap::new();
        let mut hist_b: HashMap<(u64, Rat), usize> = HashMap::new();
        let elems_a = self.elements();
        let elems_b = other.elements();
        for e in &elems_a {
            *hist_a.entry((self.order_of(e), self.q_of(e))).or_default() += 1;
        }
        let mut annotated = Vec::with_capacity(elems_b.len());
        for e in elems_b {
            let key = (other.order_of(&e), other.q_of(&e));
            *hist_b.entry(key.clone()).or_default() += 1;
            annotated.push((key, e));
        }
        if hist_a != hist_b {
            return None;
        }
        let k = self.orders.len();
        let gens: Vec<Vec<u64>> = (0..k).map(|i| self.generator(i)).collect();
        let keys: Vec<(u64, Rat)> = gens.iter().map(|g| (self.order_of(g), self.q_of(g))).collect();
        let mut images: Vec<Vec<u64>> = Vec::with_capacity(k);
        fn rec(
            a: &FiniteQuadraticForm,
            b: &FiniteQuadraticForm,
            gens: &[Vec<u64>],
            keys: &[(u64, Rat)],
            cands: &[((u64, Rat), Vec<u64>)],
            images: &mut Vec<Vec<u64>>,
        ) -> bool {
            let i = images.len();
            if i == gens.len() {
                return true;
            }
            for (key, x) in cands {
                if key != &keys[i] {
                    continue;
                }
                if (0..i).any(|j| b.b_of(x, &images[j]) != a.b_of(&gens[i], &gens[j])) {
                    continue;
                }
                images.push(x.clone());
                if rec(a, b, gens, keys, cands, images) {
                    return true;
                }
                images.pop();
            }
            false
        }
        rec(self, other, &gens, &keys, &annotated, &mut images).then_some(images)
    }

    pub fn is_isometric(&self, other: &FiniteQuadraticForm) -> bool {
        self.find_isometry(other).is_some()
    }
}

/// A lattice given by basis rows in the coordinates of an ambient lattice.
#[derive(Clone, Debug)]
pub struct Sublattice {
    pub ambient: Lattice,
    pub basis: IntMatrix,
}

impl Sublattice {
    pub fn new(ambient: Lattice, basis: IntMatrix) -> Result<Self> {
        if basis.ncols() != ambient.rank() {
            return Err(Error::Inconsistent("basis width differs from ambient rank".into()));
        }
        if basis.to_rat().rank() != basis.nrows() {
            return Err(Error::Inconsistent("basis rows are linearly dependent".into()));
        }
        Ok(Sublattice { ambient, basis })
    }

    pub fn rank(&self) -> usize {
        self.basis.nrows()
    }

    pub fn gram(&self) -> IntMatrix {
        self.basis.mul(self.ambient.gram()).mul(&self.basis.transpose())
    }

    pub fn lattice(&self) -> Lattice {
        Lattice::new(self.gram()).expect("induced Gram is symmetric")
    }

    /// Primitive closure (ℚ-span ∩ ambient).
    pub fn saturate(&self) -> Sublattice {
        let basis = saturate_rows(&self.basis);
        Sublattice { ambient: self.ambient.clone(), basis }
    }

    pub fn is_primitive(&self) -> bool {
        crate::linalg::is_primitive_rows(&self.basis)
    }

    /// Index of this sublattice in its saturation.
    pub fn saturation_index(&self) -> BigInt {
        smith_normal_form(&self.basis).diagonal().iter().filter(|d| !d.is_zero()).product()
    }

    pub fn orthogonal_complement(&self) -> Sublattice {
        let m = self.basis.mul(self.ambient.gram());
        Sublattice { ambient: self.ambient.clone(), basis: integer_kernel(&m) }
    }

    /// Coordinates of an ambient vector in this basis, if it lies in the sublattice.
    pub fn coordinates_of(&self, v: &[BigInt]) -> Option<Vec<BigInt>> {
        crate::linalg::integral_coordinates(&self.basis.to_rat(), &crate::linalg::to_rat_vec(v))
    }

    pub fn contains(&self, v: &[BigInt]) -> bool {
        self.coordinates_of(v).is_some()
    }
}

/// Primitive closure of a row lattice in ℤⁿ.
pub fn saturate_rows(rows: &IntMatrix) -> IntMatrix {
    if rows.nrows() == 0 {
        return rows.clone();
    }
    let k = integer_kernel(rows);
    let sat = integer_kernel(&k);
    if sat.nrows() == 0 {
        return sat;
    }
    hermite_normal_form(&sat)
}

/// An even overlattice together with its basis in coordinates of the original lattice.
#[derive(Clone, Debug)]
pub struct Overlattice {
    pub lattice: Lattice,
    pub basis: RatMatrix,
    pub index: BigInt,
}

/// The overlattice generated by `l` and rational glue rows in L∨.
pub fn glue_overlattice(l: &Lattice, glue: &[Vec<Rat>]) -> Result<Overlattice> {
    let n = l.rank();
    let g = l.gram();
    for (k, v) in glue.iter().enumerate() {
        if v.len() != n {
            return Err(Error::Inconsistent("glue row has wrong length".into()));
        }
        for i in 0..n {
            let mut e = vec![Rat::zero(); n];
            e[i] = Rat::one();
            if !bilinear(g, v, &e).is_integer() {
                return Err(Error::NonIntegralGlue(format!("glue {k} with basis vector {i}")));
            }
        }
        for (k2, w) in glue.iter().enumerate().skip(k + 1) {
            if !bilinear(g, v, w).is_integer() {
                return Err(Error::NonIntegralGlue(format!("glue {k} with glue {k2}")));
            }
        }
        let nv = bilinear(g, v, v);
        if !nv.is_integer() || nv.to_integer().is_odd() {
            return Err(Error::OddGlue(format!("glue {k} has norm {nv}")));
        }
    }
    let mut rows: Vec<Vec<Rat>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }).collect())
        .collect();
    rows.extend(glue.iter().cloned());
    let gens = RatMatrix::from_rows(&rows, n);
    let basis = crate::linalg::rational_row_basis(&gens);
    let gram = basis.mul(&g.to_rat()).mul(&basis.transpose());
    let gram = gram.to_int().ok_or_else(|| Error::NonIntegralGlue("overlattice Gram".into()))?;
    let lattice = Lattice::new(gram)?;
    // index = 1 / |det basis|
    let db = basis.det().abs();
    let inv = Rat::one() / db;
    if !inv.is_integer() {
        return Err(Error::Inconsistent("overlattice index is not an integer".into()));
    }
    let index = inv.to_integer();
    debug_assert_eq!(&index * &index * lattice.det(), l.det());
    Ok(Overlattice { lattice, basis, index })
}

/// An isometry acting on column coordinates: `matrix · x` is the image of `x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeIsometry {
    pub matrix: IntMatrix,
    pub order: u32,
}

const MAX_ORDER: u32 = 66;

impl LatticeIsometry {
    /// Checks Mᵀ·G·M = G and finiteness of the order.
    pub fn new(l: &Lattice, matrix: IntMatrix) -> Result<Self> {
        let g = l.gram();
        if matrix.nrows() != l.rank() || matrix.ncols() != l.rank() {
            return Err(Error::Inconsistent("isometry has the wrong size".into()));
        }
        if &matrix.transpose().mul(g).mul(&matrix) != g {
            return Err(Error::Inconsistent("matrix does not preserve the form".into()));
        }
        let id = IntMatrix::identity(l.rank());
        let mut p = matrix.clone();
        for k in 1..=MAX_ORDER {
            if p == id {
                return Ok(LatticeIsometry { matrix, order: k });
            }
            p = p.mul(&matrix);
        }
        Err(Error::Inconsistent("isometry of infinite or very large order".into()))
    }

    pub fn identity(n: usize) -> Self {
        LatticeIsometry { matrix: IntMatrix::identity(n), order: 1 }
    }

    pub fn apply(&self, v: &[BigInt]) -> Vec<BigInt> {
        self.matrix.mul_vec(v)
    }

    pub fn compose(&self, l: &Lattice, other: &LatticeIsometry) -> Result<LatticeIsometry> {
        LatticeIsometry::new(l, self.matrix.mul(&other.matrix))
    }

    pub fn is_identity(&self) -> bool {
        self.matrix.is_identity()
    }
}

// Standard lattices. Root lattices are returned negative definite.

pub fn hyperbolic_plane() -> Lattice {
    Lattice::from_rows(&[vec![0, 1], vec![1, 0]]).unwrap()
}

pub fn diagonal(entries: &[i64]) -> Lattice {
    Lattice::new(IntMatrix::diagonal(entries)).unwrap()
}

pub fn root_a(n: usize) -> Lattice {
    let mut g = IntMatrix::zeros(n, n);
    for i in 0..n {
        g[(i, i)] = int(-2);
        if i + 1 < n {
            g[(i, i + 1)] = int(1);
            g[(i + 1, i)] = int(1);
        }
    }
    Lattice::new(g).unwrap()
}

pub fn root_d(n: usize) -> Lattice {
    assert!(n >= 4);
    let mut g = IntMatrix::zeros(n, n);
    for i in 0..n {
        g[(i, i)] = int(-2);
    }
    for i in 0..n - 2 {
        g[(i, i + 1)] = int(1);
        g[(i + 1, i)] = int(1);
    }
    g[(n - 1, n - 3)] = int(1);
    g[(n - 3, n - 1)] = int(1);
    Lattice::new(g).unwrap()
}

/// E₆, E₇, E₈ (negative definite), Bourbaki numbering.
pub fn root_e(n: usize) -> Lattice {
    assert!((6..=8).contains(&n));
    let mut g = IntMatrix::zeros(n, n);
    for i in 0..n {
        g[(i, i)] = int(-2);
    }
    let mut edges = vec![(0, 2), (1, 3), (2, 3)];
    for i in 3..n - 1 {
        edges.push((i, i + 1));
    }
    for (a, b) in edges {
        g[(a, b)] = int(1);
        g[(b, a)] = int(1);
    }
    Lattice::new(g).unwrap()
}

/// U³ ⊕ E₈(−1)².
pub fn k3_lattice() -> Lattice {
    let u = hyperbolic_plane();
    let e8 = root_e(8);
    Lattice::direct_sum_all(&[u.clone(), u.clone(), u, e8.clone(), e8])
}

/// The Nikulin lattice: A₁(−1)⁸ glued by half the sum of the roots.
pub fn nikulin_lattice() -> Lattice {
    let a1 = diagonal(&[-2; 8]);
    let half = vec![Rat::new(int(1), int(2)); 8];
    glue_overlattice(&a1, &[half]).expect("valid glue").lattice
}
