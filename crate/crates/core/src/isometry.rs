//! Definite lattices: LLL reduction, Fincke–Pohst enumeration, minima and
//! isometry testing by backtracking over short vectors.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::linalg::{hermite_normal_form, int, is_primitive_rows, rat_int, IntMatrix, Rat};

/// Positive definite copy of the Gram matrix, or an error for indefinite input.
fn positive_gram(l: &Lattice) -> Result<(IntMatrix, i8)> {
    match l.definiteness() {
        Some(1) => Ok((l.gram().clone(), 1)),
        Some(-1) => Ok((l.gram().neg(), -1)),
        _ => Err(Error::Indefinite),
    }
}

/// Exact LLL reduction (δ = 3/4) of the standard basis with respect to a
/// positive definite Gram matrix. Returns the transform T (rows) and T·G·Tᵀ.
pub fn lll(gram: &IntMatrix) -> (IntMatrix, IntMatrix) {
    let n = gram.nrows();
    let mut t = IntMatrix::identity(n);
    let mut g = gram.clone();
    if n <= 1 {
        return (t, g);
    }
    let delta = Rat::new(int(3), int(4));
    let (mut mu, mut bstar) = gso(&g);
    let mut k = 1;
    while k < n {
        for j in (0..k).rev() {
            let q = round(&mu[k][j]);
            if q.is_zero() {
                continue;
            }
            // b_k -= q b_j
            let mq = -&q;
            t.add_row_multiple(k, j, &mq);
            g.add_row_multiple(k, j, &mq);
            g.add_col_multiple(k, j, &mq);
            let qr = rat_int(&q);
            for l in 0..j {
                let d = &qr * &mu[j][l];
                mu[k][l] -= d;
            }
            mu[k][j] -= &qr;
        }
        let lhs = &bstar[k];
        let rhs = (&delta - &mu[k][k - 1] * &mu[k][k - 1]) * &bstar[k - 1];
        if *lhs >= rhs {
            k += 1;
        } else {
            t.swap_rows(k, k - 1);
            g.swap_rows(k, k - 1);
            g.swap_cols(k, k - 1);
            let (m2, b2) = gso(&g);
            mu = m2;
            bstar = b2;
            k = k.saturating_sub(1).max(1);
        }
    }
    (t, g)
}

fn round(x: &Rat) -> BigInt {
    (x + Rat::new(BigInt::one(), int(2))).floor().to_integer()
}

fn gso(g: &IntMatrix) -> (Vec<Vec<Rat>>, Vec<Rat>) {
    let n = g.nrows();
    let mut mu = vec![vec![Rat::zero(); n]; n];
    let mut b = vec![Rat::zero(); n];
    for i in 0..n {
        for j in 0..i {
            let mut s = rat_int(&g[(i, j)]);
            for l in 0..j {
                s -= &mu[j][l] * &mu[i][l] * &b[l];
            }
            mu[i][j] = s / &b[j];
        }
        let mut s = rat_int(&g[(i, i)]);
        for l in 0..i {
            s -= &mu[i][l] * &mu[i][l] * &b[l];
        }
        b[i] = s;
    }
    (mu, b)
}

/// Vectors with 0 < |q(v)| ≤ bound, one of each ±v pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShortVectorSet {
    pub bound: BigInt,
    pub vectors: Vec<Vec<BigInt>>,
    /// Norms with the sign of the lattice.
    pub norms: Vec<BigInt>,
}

impl ShortVectorSet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Number of vectors (counting ±v once) for each absolute norm.
    pub fn histogram(&self) -> BTreeMap<BigInt, usize> {
        let mut h = BTreeMap::new();
        for n in &self.norms {
            *h.entry(n.abs()).or_insert(0) += 1;
        }
        h
    }
}

/// Fincke–Pohst enumeration on a positive definite Gram matrix. Vectors are
/// returned with their absolute norms.
fn enumerate_positive(g: &IntMatrix, bound: &BigInt) -> Vec<(BigInt, Vec<BigInt>)> {
    let n = g.nrows();
    let mut out = Vec::new();
    if n == 0 || !bound.is_positive() {
        return out;
    }
    // q[i][i] = diagonal of the LDLᵀ, q[i][j] (j > i) = coefficients
    let (mu, b) = gso(g);
    let bound_r = rat_int(bound);
    let mut x = vec![BigInt::zero(); n];
    let mut rem = vec![Rat::zero(); n + 1];
    rem[n] = bound_r;
    let mut center = vec![Rat::zero(); n];
    let mut hi = vec![BigInt::zero(); n];
    let mut i = n - 1;
    // center_i = Σ_{j>i} mu[j][i] x_j
    let set_range = |i: usize, x: &mut Vec<BigInt>, center: &mut Vec<Rat>, hi: &mut Vec<BigInt>, rem: &Vec<Rat>| {
        let c: Rat = (i + 1..n).map(|j| &mu[j][i] * rat_int(&x[j])).sum();
        let r2 = &rem[i + 1] / &b[i];
        let rf = r2.floor().to_integer().sqrt() + 1;
        let within = |v: &BigInt| {
            let d = rat_int(v) + &c;
            &d * &d <= r2
        };
        let mut lo = (-&c - rat_int(&rf)).floor().to_integer();
        let mut up = (-&c + rat_int(&rf)).ceil().to_integer();
        while lo <= up && !within(&lo) {
            lo += 1;
        }
        while up >= lo && !within(&up) {
            up -= 1;
        }
        let top = (i + 1..n).all(|j| x[j].is_zero());
        if top && lo < BigInt::zero() {
            lo = BigInt::zero();
        }
        x[i] = lo;
        center[i] = c;
        hi[i] = up;
    };
    set_range(i, &mut x, &mut center, &mut hi, &rem);
    loop {
        if x[i] > hi[i] {
            if i == n - 1 {
                break;
            }
            i += 1;
            x[i] += 1;
            continue;
        }
        let d = rat_int(&x[i]) + &center[i];
        let used = &d * &d * &b[i];
        if used > rem[i + 1] {
            x[i] += 1;
            continue;
        }
        rem[i] = &rem[i + 1] - used;
        if i == 0 {
            if x.iter().any(|v| !v.is_zero()) {
                let norm = (rat_int(bound) - &rem[0]).to_integer();
                out.push((norm, x.clone()));
            }
            x[0] += 1;
            continue;
        }
        i -= 1;
        set_range(i, &mut x, &mut center, &mut hi, &rem);
    }
    out
}

fn canonical_sign(v: &mut [BigInt]) {
    if let Some(f) = v.iter().find(|x| !x.is_zero()) {
        if f.is_negative() {
            for x in v.iter_mut() {
                *x = -&*x;
            }
        }
    }
}

/// All vectors with 0 < |v²| ≤ bound up to sign, sorted by norm then coordinates.
pub fn short_vectors(l: &Lattice, bound: &BigInt) -> Result<ShortVectorSet> {
    let (g, sign) = positive_gram(l)?;
    let (t, red) = lll(&g);
    let tt = t.transpose();
    let mut found: Vec<(BigInt, Vec<BigInt>)> = enumerate_positive(&red, bound)
        .into_iter()
        .map(|(n, y)| {
            let mut v = tt.mul_vec(&y);
            canonical_sign(&mut v);
            (n, v)
        })
        .collect();
    found.sort();
    let s = int(sign as i64);
    Ok(ShortVectorSet {
        bound: bound.clone(),
        norms: found.iter().map(|(n, _)| n * &s).collect(),
        vectors: found.into_iter().map(|(_, v)| v).collect(),
    })
}

/// Smallest |v²| over nonzero v.
pub fn minimum(l: &Lattice) -> Result<BigInt> {
    let (g, _) = positive_gram(l)?;
    if g.nrows() == 0 {
        return Err(Error::Degenerate);
    }
    let (_, red) = lll(&g);
    let ub = (0..red.nrows()).map(|i| red[(i, i)].clone()).min().unwrap();
    let sv = enumerate_positive(&red, &ub);
    Ok(sv.into_iter().map(|(n, _)| n).min().unwrap_or(ub))
}

/// Whether the vectors of minimal norm span the whole lattice.
pub fn generated_by_minimal(l: &Lattice) -> Result<bool> {
    let m = minimum(l)?;
    let sv = short_vectors(l, &m)?;
    let rows = IntMatrix::from_rows_with_cols(&sv.vectors, l.rank());
    let h = hermite_normal_form(&rows);
    Ok(h.nrows() == l.rank() && h.det().abs().is_one())
}

struct Candidates {
    vecs: Vec<Vec<i128>>,
    /// G₂·v for each candidate.
    duals: Vec<Vec<i128>>,
}

fn to_i128(v: &[BigInt]) -> Result<Vec<i128>> {
    v.iter().map(|x| x.to_i128().ok_or_else(|| Error::Inconsistent("entry out of range".into()))).collect()
}

fn dot128(a: &[i128], b: &[i128]) -> i128 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A matrix M with Mᵀ·G₂·M = G₁ if the definite lattices are isometric.
pub fn is_isometric(l1: &Lattice, l2: &Lattice) -> Result<Option<IntMatrix>> {
    let (g1, s1) = positive_gram(l1)?;
    let (g2, s2) = positive_gram(l2)?;
    let n = g1.nrows();
    if n != g2.nrows() || s1 != s2 || g1.det() != g2.det() {
        return Ok(None);
    }
    if n == 0 {
        return Ok(Some(IntMatrix::zeros(0, 0)));
    }
    let p1 = Lattice::new(g1.clone())?;
    let p2 = Lattice::new(g2.clone())?;
    let m1 = minimum(&p1)?;
    if m1 != minimum(&p2)? {
        return Ok(None);
    }
    let hb = &m1 + int(4);
    let h1 = short_vectors(&p1, &hb)?;
    let h2 = short_vectors(&p2, &hb)?;
    if h1.histogram() != h2.histogram() {
        return Ok(None);
    }
    // a ℤ-basis (or at least a ℚ-basis) of L1 made of short vectors
    let (_, red) = lll(&g1);
    let cap = (0..n).map(|i| red[(i, i)].clone()).max().unwrap().max(m1.clone());
    let pool1 = if cap <= hb { h1.clone() } else { short_vectors(&p1, &cap)? };
    let mut chosen: Vec<Vec<BigInt>> = Vec::new();
    for v in &pool1.vectors {
        let mut trial = chosen.clone();
        trial.push(v.clone());
        if is_primitive_rows(&IntMatrix::from_rows_with_cols(&trial, n)) {
            chosen = trial;
            if chosen.len() == n {
                break;
            }
        }
    }
    if chosen.len() < n {
        chosen.clear();
        for v in &pool1.vectors {
            let mut trial = chosen.clone();
            trial.push(v.clone());
            if IntMatrix::from_rows_with_cols(&trial, n).to_rat().rank() == trial.len() {
                chosen = trial;
                if chosen.len() == n {
                    break;
                }
            }
        }
    }
    let maxnorm = chosen.iter().map(|v| bilin(&g1, v, v)).max().unwrap();
    let pool2 = if maxnorm <= hb { h2 } else { short_vectors(&p2, &maxnorm)? };
    let g2i: Vec<Vec<i128>> = (0..n).map(|i| to_i128(g2.row(i))).collect::<Result<_>>()?;
    // candidates per norm, both signs
    let mut by_norm: BTreeMap<BigInt, Candidates> = BTreeMap::new();
    for v in &pool2.vectors {
        let norm = bilin(&g2, v, v);
        let entry = by_norm.entry(norm).or_insert(Candidates { vecs: vec![], duals: vec![] });
        let vi = to_i128(v)?;
        for s in [1i128, -1] {
            let w: Vec<i128> = vi.iter().map(|x| s * x).collect();
            let d: Vec<i128> = g2i.iter().map(|row| dot128(row, &w)).collect();
            entry.vecs.push(w);
            entry.duals.push(d);
        }
    }
    let target: Vec<Vec<i128>> = (0..n)
        .map(|i| (0..n).map(|j| bilin(&g1, &chosen[i], &chosen[j]).to_i128().unwrap()).collect())
        .collect();
    let levels: Vec<&Candidates> = (0..n)
        .map(|i| by_norm.get(&BigInt::from(target[i][i])))
        .collect::<Option<Vec<_>>>()
        .map_or_else(Vec::new, |v| v);
    if levels.len() < n {
        return Ok(None);
    }
    let b = IntMatrix::from_rows_with_cols(&chosen, n).transpose().to_rat();
    let binv = b.inverse().expect("independent basis");
    let mut pick: Vec<usize> = vec![0; n];
    let mut found = None;
    search(&levels, &target, 0, &mut pick, &mut |pick| {
        let cols: Vec<Vec<BigInt>> =
            (0..n).map(|i| levels[i].vecs[pick[i]].iter().map(|&x| BigInt::from(x)).collect()).collect();
        let c = IntMatrix::from_rows_with_cols(&cols, n).transpose().to_rat();
        let Some(m) = c.mul(&binv).to_int() else { return false };
        if m.transpose().mul(&g2).mul(&m) == g1 {
            found = Some(m);
            true
        } else {
            false
        }
    });
    Ok(found)
}

fn bilin(g: &IntMatrix, a: &[BigInt], b: &[BigInt]) -> BigInt {
    crate::linalg::bilinear_int(g, a, b)
}

fn search(
    levels: &[&Candidates],
    target: &[Vec<i128>],
    depth: usize,
    pick: &mut Vec<usize>,
    accept: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    if depth == levels.len() {
        return accept(pick);
    }
    let cand = levels[depth];
    'outer: for idx in 0..cand.vecs.len() {
        for j in 0..depth {
            let prev = &levels[j].vecs[pick[j]];
            if dot128(&cand.duals[idx], prev) != target[depth][j] {
                continue 'outer;
            }
        }
        pick[depth] = idx;
        if search(levels, target, depth + 1, pick, accept) {
            return true;
        }
    }
    false
}

/// Exhaustive search over the box |xᵢ| ≤ r (used as an oracle in tests).
pub fn box_vectors(l: &Lattice, bound: &BigInt, r: i64) -> Vec<(BigInt, Vec<BigInt>)> {
    let n = l.rank();
    let mut out = Vec::new();
    let mut x = vec![-r; n];
    if n == 0 {
        return out;
    }
    loop {
        let v: Vec<BigInt> = x.iter().map(|&a| int(a)).collect();
        let nv = l.norm(&v).abs();
        if !nv.is_zero() && &nv <= bound {
            let mut c = v.clone();
            canonical_sign(&mut c);
            if c == v {
                out.push((nv, v));
            }
        }
        let mut k = 0;
        loop {
            if k == n {
                out.sort();
                return out;
            }
            x[k] += 1;
            if x[k] > r {
                x[k] = -r;
                k += 1;
            } else {
                break;
            }
        }
    }
}

/// Box radius sufficient for completeness: |xᵢ| ≤ √(bound·(G⁻¹)ᵢᵢ).
pub fn safe_box_radius(l: &Lattice, bound: &BigInt) -> Result<i64> {
    let (g, _) = positive_gram(l)?;
    let inv = g.to_rat().inverse().ok_or(Error::Degenerate)?;
    let mut r = 0i64;
    for i in 0..g.nrows() {
        let v = (&inv[(i, i)] * rat_int(bound)).ceil().to_integer();
        let s: BigInt = v.sqrt() + 1;
        r = r.max(s.to_i64().unwrap_or(i64::MAX));
    }
    Ok(r)
}

pub fn gcd_all(v: &[BigInt]) -> BigInt {
    v.iter().fold(BigInt::zero(), |a, b| a.gcd(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{diagonal, root_a, root_d, root_e};
    use proptest::prelude::*;

    #[test]
    fn lll_preserves_the_lattice() {
        let g = IntMatrix::from_rows(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
        let skew = IntMatrix::from_rows(&[vec![1, 7, 3], vec![0, 1, 5], vec![0, 0, 1]]);
        let gg = skew.mul(&g).mul(&skew.transpose());
        let (t, red) = lll(&gg);
        assert!(t.det().abs().is_one());
        assert_eq!(red, IntMatrix::identity(3));
    }

    #[test]
    fn a1_has_one_pair() {
        let sv = short_vectors(&root_a(1), &int(2)).unwrap();
        assert_eq!(sv.len(), 1);
        assert_eq!(sv.norms, vec![int(-2)]);
    }

    #[test]
    fn e8_counts() {
        let e8 = root_e(8);
        assert_eq!(short_vectors(&e8, &int(2)).unwrap().len(), 120);
        assert_eq!(short_vectors(&e8, &int(4)).unwrap().len(), 120 + 1080);
        let e8_2 = e8.rescale(2).unwrap();
        assert!(short_vectors(&e8_2, &int(2)).unwrap().is_empty());
        assert_eq!(minimum(&e8).unwrap(), int(2));
        assert_eq!(minimum(&e8_2).unwrap(), int(4));
        assert!(generated_by_minimal(&e8_2).unwrap());
    }

    #[test]
    fn minimal_vectors_may_not_generate() {
        let l = diagonal(&[-4, -8]);
        assert_eq!(minimum(&l).unwrap(), int(4));
        assert!(!generated_by_minimal(&l).unwrap());
    }

    #[test]
    fn indefinite_is_rejected() {
        let u = crate::lattice::hyperbolic_plane();
        assert_eq!(short_vectors(&u, &int(2)), Err(Error::Indefinite));
        assert!(matches!(is_isometric(&u, &u), Err(Error::Indefinite)));
    }

    #[test]
    fn isometry_witnesses() {
        let d4 = root_d(4);
        let m = is_isometric(&d4, &d4).unwrap().unwrap();
        assert_eq!(m.transpose().mul(d4.gram()).mul(&m), *d4.gram());
        // D4 in a scrambled basis
        let t = IntMatrix::from_rows(&[vec![1, 1, 0, 0], vec![0, 1, 0, 0], vec![0, 2, 1, 0], vec![1, 0, -1, 1]]);
        let other = d4.change_basis(&t);
        let m = is_isometric(&d4, &other).unwrap().unwrap();
        assert_eq!(m.transpose().mul(other.gram()).mul(&m), *d4.gram());
        assert!(is_isometric(&root_a(4), &root_d(4)).unwrap().is_none());
        assert!(is_isometric(&diagonal(&[-2, -6]), &diagonal(&[-3, -4])).unwrap().is_none());
    }

    #[test]
    fn e8_is_d8_plus() {
        // E8 as D8 glued by the half-spin vector
        let d8 = root_d(8);
        let e8 = root_e(8);
        let m = is_isometric(&e8.negate(), &e8.negate()).unwrap();
        assert!(m.is_some());
        assert!(is_isometric(&e8, &d8).unwrap().is_none());
    }

    fn arb_pd_gram() -> impl Strategy<Value = IntMatrix> {
        (1usize..=4)
            .prop_flat_map(|n| (Just(n), prop::collection::vec(-3i64..=3, n * n), prop::collection::vec(1i64..=3, n)))
            .prop_map(|(n, ent, diag)| {
                // G = AᵀA + D is positive definite
                let a = IntMatrix::from_flat(n, n, ent.into_iter().map(int).collect());
                let d = IntMatrix::diagonal(&diag);
                a.transpose().mul(&a).add(&d)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn enumeration_matches_box_search(g in arb_pd_gram(), bound in 1i64..=12) {
            let l = Lattice::new(g).unwrap();
            let b = int(bound);
            let r = safe_box_radius(&l, &b).unwrap();
            let expected = box_vectors(&l, &b, r);
            let sv = short_vectors(&l, &b).unwrap();
            let got: Vec<(BigInt, Vec<BigInt>)> = sv.norms.iter().map(|n| n.abs()).zip(sv.vectors.iter().cloned()).collect();
            prop_assert_eq!(got, expected);
        }

        #[test]
        fn self_isometry_always_found(g in arb_pd_gram()) {
            let l = Lattice::new(g).unwrap();
            let m = is_isometric(&l, &l).unwrap().unwrap();
            prop_assert_eq!(m.transpose().mul(l.gram()).mul(&m), l.gram().clone());
        }
    }
}
