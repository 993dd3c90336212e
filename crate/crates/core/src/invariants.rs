//! Invariant and coinvariant lattices of finite abelian groups of isometries,
//! and the induced action on discriminant groups.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lattice::{glue_overlattice, DiscriminantGroup, Lattice, LatticeIsometry, Sublattice};
use crate::linalg::{integer_kernel, rat_int, rational_solve, to_int_vec, to_rat_vec, IntMatrix, Rat, RatMatrix};

/// A lattice with a commuting set of isometries.
#[derive(Clone, Debug)]
pub struct GroupAction {
    pub lattice: Lattice,
    pub generators: Vec<LatticeIsometry>,
    pub group_name: String,
}

impl GroupAction {
    pub fn new(lattice: Lattice, generators: Vec<LatticeIsometry>, group_name: impl Into<String>) -> Result<Self> {
        for g in &generators {
            if g.matrix.nrows() != lattice.rank() {
                return Err(Error::Inconsistent("generator has the wrong size".into()));
            }
        }
        for (i, a) in generators.iter().enumerate() {
            for b in &generators[i + 1..] {
                if a.matrix.mul(&b.matrix) != b.matrix.mul(&a.matrix) {
                    return Err(Error::Inconsistent("generators do not commute".into()));
                }
            }
        }
        Ok(GroupAction { lattice, generators, group_name: group_name.into() })
    }

    pub fn trivial(lattice: Lattice) -> Self {
        GroupAction { lattice, generators: vec![], group_name: "1".into() }
    }

    /// Number of elements of the generated group.
    pub fn order(&self) -> usize {
        let mut seen: Vec<IntMatrix> = vec![IntMatrix::identity(self.lattice.rank())];
        let mut frontier = seen.clone();
        while let Some(m) = frontier.pop() {
            for g in &self.generators {
                let p = m.mul(&g.matrix);
                if !seen.contains(&p) {
                    seen.push(p.clone());
                    frontier.push(p);
                }
            }
        }
        seen.len()
    }
}

/// Lattice of vectors fixed by every generator.
pub fn invariant_sublattice(a: &GroupAction) -> Sublattice {
    let n = a.lattice.rank();
    let id = IntMatrix::identity(n);
    let mut stacked = IntMatrix::zeros(0, n);
    for g in &a.generators {
        stacked = stacked.vstack(&g.matrix.sub(&id));
    }
    let basis = integer_kernel(&stacked);
    Sublattice { ambient: a.lattice.clone(), basis }
}

/// Ω_G, the orthogonal complement of the invariant lattice.
pub fn coinvariant_lattice(a: &GroupAction) -> Sublattice {
    invariant_sublattice(a).orthogonal_complement()
}

/// Restriction of an isometry to a sublattice it preserves.
pub fn restrict(iso: &LatticeIsometry, sub: &Sublattice) -> Result<LatticeIsometry> {
    let k = sub.rank();
    let mut m = IntMatrix::zeros(k, k);
    for j in 0..k {
        let img = iso.apply(&sub.basis.row_vec(j));
        let c = sub
            .coordinates_of(&img)
            .ok_or_else(|| Error::Inconsistent("sublattice is not preserved".into()))?;
        for (i, x) in c.into_iter().enumerate() {
            m[(i, j)] = x;
        }
    }
    LatticeIsometry::new(&sub.lattice(), m)
}

/// Restriction of every generator to a preserved sublattice.
pub fn restrict_action(a: &GroupAction, sub: &Sublattice) -> Result<GroupAction> {
    let gens = a.generators.iter().map(|g| restrict(g, sub)).collect::<Result<Vec<_>>>()?;
    GroupAction::new(sub.lattice(), gens, a.group_name.clone())
}

/// Induced automorphism of L∨/L.
#[derive(Clone, Debug)]
pub struct DiscriminantAction {
    pub invariant_factors: Vec<BigInt>,
    /// Image of each generator in generator coordinates.
    pub images: Vec<Vec<BigInt>>,
}

impl DiscriminantAction {
    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, row)| {
            row.iter().enumerate().all(|(j, x)| if i == j { x.is_one() } else { x.is_zero() })
        })
    }
}

pub fn action_on_discriminant(l: &Lattice, m: &LatticeIsometry) -> Result<DiscriminantAction> {
    let disc = DiscriminantGroup::of(l)?;
    let mr = m.matrix.to_rat();
    let mut images = Vec::new();
    for g in &disc.generator_lifts {
        let img = mr.mul_vec(g);
        images.push(disc.coordinates(&img).ok_or_else(|| Error::Inconsistent("image is not in L∨".into()))?);
    }
    Ok(DiscriminantAction { invariant_factors: disc.invariant_factors.clone(), images })
}

/// Glue rows in coordinates of A ⊕ B identifying disc(A) with disc(B)
/// through an anti-isometry, so that the overlattice is unimodular.
pub fn anti_isometric_glue(a: &Lattice, b: &Lattice) -> Option<Vec<Vec<Rat>>> {
    let da = DiscriminantGroup::of(a).ok()?;
    let db = DiscriminantGroup::of(b).ok()?;
    let phi = da.form().find_isometry(&db.form().negate())?;
    let mut rows = Vec::new();
    for (i, img) in phi.iter().enumerate() {
        let mut row = da.generator_lifts[i].clone();
        let mut tail = vec![Rat::zero(); b.rank()];
        for (c, lift) in img.iter().zip(&db.generator_lifts) {
            for (t, x) in tail.iter_mut().zip(lift) {
                *t += Rat::from_integer(BigInt::from(*c)) * x;
            }
        }
        row.extend(tail);
        rows.push(row);
    }
    Some(rows)
}

/// Result of gluing NS and T_X and computing the invariant lattice there.
#[derive(Clone, Debug)]
pub struct GluedInvariant {
    pub ambient: Lattice,
    pub invariant: Sublattice,
    pub coinvariant: Sublattice,
    /// [H^G : NS^G ⊕ T].
    pub index: BigInt,
}

/// H²(X,ℤ)^G from the action on NS, the transcendental lattice and glue rows
/// (in NS ⊕ T coordinates); G acts trivially on T.
pub fn glued_invariant(a: &GroupAction, t: &Lattice, glue: &[Vec<Rat>]) -> Result<GluedInvariant> {
    let ns = &a.lattice;
    let sum = ns.direct_sum(t);
    let over = glue_overlattice(&sum, glue)?;
    let n = sum.rank();
    let basis = &over.basis;
    let ext = |m: &IntMatrix| -> IntMatrix {
        let mut e = IntMatrix::identity(n);
        for i in 0..ns.rank() {
            for j in 0..ns.rank() {
                e[(i, j)] = m[(i, j)].clone();
            }
        }
        e
    };
    let mut gens = Vec::new();
    for g in &a.generators {
        let e = ext(&g.matrix).to_rat();
        let mut m = IntMatrix::zeros(n, n);
        for k in 0..n {
            let img = e.mul_vec(&basis.row_vec(k));
            let c = rational_solve(&basis.transpose(), &img)
                .and_then(|c| to_int_vec(&c))
                .ok_or_else(|| Error::Inconsistent("action does not extend to the glued lattice".into()))?;
            for (i, x) in c.into_iter().enumerate() {
                m[(i, k)] = x;
            }
        }
        gens.push(LatticeIsometry::new(&over.lattice, m)?);
    }
    let action = GroupAction::new(over.lattice.clone(), gens, a.group_name.clone())?;
    let invariant = invariant_sublattice(&action);
    let coinvariant = invariant.orthogonal_complement();
    let ns_inv = invariant_sublattice(a).lattice().direct_sum(t);
    let ratio = Rat::new(ns_inv.det(), invariant.lattice().det());
    if !ratio.is_integer() || !ratio.is_positive() {
        return Err(Error::Inconsistent(format!("determinant ratio {ratio} is not a positive integer")));
    }
    let r = ratio.to_integer();
    let index = r.sqrt();
    if &index * &index != r {
        return Err(Error::Inconsistent(format!("determinant ratio {r} is not a square")));
    }
    Ok(GluedInvariant { ambient: over.lattice, invariant, coinvariant, index })
}

/// Coordinates in `basis` (rows, rational) of the integral vectors `vs`.
pub fn express_in(basis: &RatMatrix, vs: &[Vec<BigInt>]) -> Option<Vec<Vec<BigInt>>> {
    vs.iter().map(|v| to_int_vec(&rational_solve(&basis.transpose(), &to_rat_vec(v))?)).collect()
}

pub fn scale_rows(rows: &[Vec<Rat>], k: &BigInt) -> Vec<Vec<Rat>> {
    rows.iter().map(|r| r.iter().map(|x| x * rat_int(k)).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{root_a, root_e};
    use crate::linalg::int;

    fn neg_id(n: usize) -> IntMatrix {
        IntMatrix::identity(n).neg()
    }

    #[test]
    fn identity_action_fixes_everything() {
        let l = root_e(8);
        let a = GroupAction::new(l.clone(), vec![LatticeIsometry::identity(8)], "1").unwrap();
        assert_eq!(invariant_sublattice(&a).rank(), 8);
        assert_eq!(coinvariant_lattice(&a).rank(), 0);
        assert!(action_on_discriminant(&root_a(3), &LatticeIsometry::identity(3)).unwrap().is_identity());
    }

    #[test]
    fn negation_on_a3_is_not_identity_on_discriminant() {
        let l = root_a(3);
        let m = LatticeIsometry::new(&l, neg_id(3)).unwrap();
        let d = action_on_discriminant(&l, &m).unwrap();
        assert_eq!(d.invariant_factors, vec![int(4)]);
        assert!(!d.is_identity());
        assert_eq!(d.images[0], vec![int(3)]);
    }

    #[test]
    fn swap_on_two_copies() {
        // E8 ⊕ E8 with the swap: invariant is the diagonal E8(2), coinvariant E8(2)
        let l = root_e(8).direct_sum(&root_e(8));
        let mut m = IntMatrix::zeros(16, 16);
        for i in 0..8 {
            m[(i, i + 8)] = int(1);
            m[(i + 8, i)] = int(1);
        }
        let a = GroupAction::new(l.clone(), vec![LatticeIsometry::new(&l, m).unwrap()], "ℤ/2ℤ").unwrap();
        let inv = invariant_sublattice(&a);
        let co = coinvariant_lattice(&a);
        assert_eq!((inv.rank(), co.rank()), (8, 8));
        assert_eq!(co.lattice().det(), int(256));
        assert!(inv.is_primitive());
        assert!(inv.basis.mul(l.gram()).mul(&co.basis.transpose()).is_zero());
        assert_eq!(a.order(), 2);
        let r = restrict_action(&a, &co).unwrap();
        assert!(action_on_discriminant(&r.lattice, &r.generators[0]).unwrap().is_identity());
    }

    #[test]
    fn anti_isometric_glue_is_unimodular() {
        let a = root_a(2);
        let b = root_a(2).negate();
        let glue = anti_isometric_glue(&a, &b).unwrap();
        let over = glue_overlattice(&a.direct_sum(&b), &glue).unwrap();
        assert_eq!(over.lattice.det().abs(), int(1));
    }
}
