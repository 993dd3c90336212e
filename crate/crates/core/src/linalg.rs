//! Exact integer and rational matrices.
//!
//! Everything here works over `BigInt` / `BigRational`; there is no floating
//! point anywhere in the crate.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rat = BigRational;

pub fn int(v: i64) -> BigInt {
    BigInt::from(v)
}

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: &BigInt) -> Rat {
    Rat::from_integer(n.clone())
}

/// Dense integer matrix, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    /// Builds a matrix from rows. Panics on ragged input.
    pub fn from_rows<T: Clone + Into<BigInt>>(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        Self::from_rows_with_cols(rows, cols)
    }

    pub fn from_rows_with_cols<T: Clone + Into<BigInt>>(rows: &[Vec<T>], cols: usize) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged matrix rows");
            data.extend(r.iter().cloned().map(Into::into));
        }
        IntMatrix { rows: rows.len(), cols, data }
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<BigInt>) -> Self {
        assert_eq!(data.len(), rows * cols);
        IntMatrix { rows, cols, data }
    }

    pub fn diagonal<T: Clone + Into<BigInt>>(entries: &[T]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, e) in entries.iter().enumerate() {
            m[(i, i)] = e.clone().into();
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vec(&self, i: usize) -> Vec<BigInt> {
        self.row(i).to_vec()
    }

    pub fn col_vec(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn rows_vec(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|i| self.row_vec(i)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn add(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        IntMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        IntMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, k: &BigInt) -> IntMatrix {
        IntMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * k).collect() }
    }

    pub fn neg(&self) -> IntMatrix {
        self.scale(&int(-1))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        self.is_square() && *self == Self::identity(self.rows)
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn select_rows(&self, idx: &[usize]) -> IntMatrix {
        let rows: Vec<Vec<BigInt>> = idx.iter().map(|&i| self.row_vec(i)).collect();
        Self::from_rows_with_cols(&rows, self.cols)
    }

    pub fn vstack(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        IntMatrix { rows: self.rows + other.rows, cols: self.cols, data }
    }

    pub fn hstack(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.rows, other.rows);
        let mut out = Self::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self[(i, j)].clone();
            }
            for j in 0..other.cols {
                out[(i, self.cols + j)] = other[(i, j)].clone();
            }
        }
        out
    }

    /// Block-diagonal sum.
    pub fn block_diag(&self, other: &IntMatrix) -> IntMatrix {
        let mut out = Self::zeros(self.rows + other.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self[(i, j)].clone();
            }
        }
        for i in 0..other.rows {
            for j in 0..other.cols {
                out[(self.rows + i, self.cols + j)] = other[(i, j)].clone();
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> IntMatrix {
        assert!(self.is_square());
        let mut acc = Self::identity(self.rows);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> BigInt {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n {
            if a[(k, k)].is_zero() {
                let Some(p) = (k + 1..n).find(|&i| !a[(i, k)].is_zero()) else {
                    return BigInt::zero();
                };
                a.swap_rows(k, p);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &a[(i, j)] * &a[(k, k)] - &a[(i, k)] * &a[(k, j)];
                    a[(i, j)] = v / &prev;
                }
                a[(i, k)] = BigInt::zero();
            }
            prev = a[(k, k)].clone();
        }
        sign * a[(n - 1, n - 1)].clone()
    }

    pub fn rank(&self) -> usize {
        hermite_normal_form(self).nrows()
    }

    pub fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    pub fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + i, r * self.cols + j);
        }
    }

    /// row_dst += k * row_src
    pub fn add_row_multiple(&mut self, dst: usize, src: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for c in 0..self.cols {
            let v = &self.data[src * self.cols + c] * k;
            self.data[dst * self.cols + c] += v;
        }
    }

    /// col_dst += k * col_src
    pub fn add_col_multiple(&mut self, dst: usize, src: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for r in 0..self.rows {
            let v = &self.data[r * self.cols + src] * k;
            self.data[r * self.cols + dst] += v;
        }
    }

    pub fn negate_row(&mut self, i: usize) {
        for c in 0..self.cols {
            let v = -&self.data[i * self.cols + c];
            self.data[i * self.cols + c] = v;
        }
    }

    /// Replaces rows (i, j) by (a*ri + b*rj, c*ri + d*rj).
    fn combine_rows(&mut self, i: usize, j: usize, a: &BigInt, b: &BigInt, c: &BigInt, d: &BigInt) {
        for col in 0..self.cols {
            let x = self.data[i * self.cols + col].clone();
            let y = self.data[j * self.cols + col].clone();
            self.data[i * self.cols + col] = a * &x + b * &y;
            self.data[j * self.cols + col] = c * &x + d * &y;
        }
    }

    pub fn to_rat(&self) -> RatMatrix {
        RatMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(rat_int).collect() }
    }

    /// Entries as decimal strings, one inner vector per row.
    pub fn to_string_rows(&self) -> Vec<Vec<String>> {
        (0..self.rows).map(|i| self.row(i).iter().map(|x| x.to_string()).collect()).collect()
    }
}

impl Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.data.iter().map(|x| x.to_string().len()).max().unwrap_or(1);
        for i in 0..self.rows {
            write!(f, "[")?;
            for (j, x) in self.row(i).iter().enumerate() {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{:>w$}", x.to_string(), w = width)?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

/// Dense rational matrix, row-major, entries kept in lowest terms.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rat>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix { rows, cols, data: vec![Rat::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rat::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Rat>], cols: usize) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged matrix rows");
            data.extend(r.iter().cloned());
        }
        RatMatrix { rows: rows.len(), cols, data }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Rat] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vec(&self, i: usize) -> Vec<Rat> {
        self.row(i).to_vec()
    }

    pub fn col_vec(&self, j: usize) -> Vec<Rat> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn rows_vec(&self) -> Vec<Vec<Rat>> {
        (0..self.rows).map(|i| self.row_vec(i)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn sub(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        RatMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, k: &Rat) -> RatMatrix {
        RatMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * k).collect() }
    }

    pub fn is_integral(&self) -> bool {
        self.data.iter().all(|x| x.is_integer())
    }

    pub fn to_int(&self) -> Option<IntMatrix> {
        if !self.is_integral() {
            return None;
        }
        Some(IntMatrix::from_flat(self.rows, self.cols, self.data.iter().map(|x| x.to_integer()).collect()))
    }

    /// Least common multiple of all denominators.
    pub fn denominator(&self) -> BigInt {
        self.data.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
    }

    pub fn vstack(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        RatMatrix { rows: self.rows + other.rows, cols: self.cols, data }
    }

    pub fn det(&self) -> Rat {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut det = Rat::one();
        for k in 0..n {
            let Some(p) = (k..n).find(|&i| !a[(i, k)].is_zero()) else {
                return Rat::zero();
            };
            if p != k {
                for c in 0..n {
                    a.data.swap(k * n + c, p * n + c);
                }
                det = -det;
            }
            let pivot = a[(k, k)].clone();
            det *= &pivot;
            for i in k + 1..n {
                let f = &a[(i, k)] / &pivot;
                if f.is_zero() {
                    continue;
                }
                for c in k..n {
                    let v = &f * &a[(k, c)];
                    a[(i, c)] -= v;
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Option<RatMatrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = RatMatrix::identity(n);
        for k in 0..n {
            let p = (k..n).find(|&i| !a[(i, k)].is_zero())?;
            if p != k {
                for c in 0..n {
                    a.data.swap(k * n + c, p * n + c);
                    inv.data.swap(k * n + c, p * n + c);
                }
            }
            let pivot = a[(k, k)].clone();
            for c in 0..n {
                a[(k, c)] /= &pivot;
                inv[(k, c)] /= &pivot;
            }
            for i in 0..n {
                if i == k || a[(i, k)].is_zero() {
                    continue;
                }
                let f = a[(i, k)].clone();
                for c in 0..n {
                    let v = &f * &a[(k, c)];
                    a[(i, c)] -= v;
                    let w = &f * &inv[(k, c)];
                    inv[(i, c)] -= w;
                }
            }
        }
        Some(inv)
    }

    pub fn rank(&self) -> usize {
        let mut a = self.clone();
        let mut r = 0;
        for c in 0..self.cols {
            let Some(p) = (r..self.rows).find(|&i| !a[(i, c)].is_zero()) else { continue };
            for cc in 0..self.cols {
                a.data.swap(r * self.cols + cc, p * self.cols + cc);
            }
            let pivot = a[(r, c)].clone();
            for i in r + 1..self.rows {
                let f = &a[(i, c)] / &pivot;
                if f.is_zero() {
                    continue;
                }
                for cc in c..self.cols {
                    let v = &f * &a[(r, cc)];
                    a[(i, cc)] -= v;
                }
            }
            r += 1;
            if r == self.rows {
                break;
            }
        }
        r
    }
}

impl Index<(usize, usize)> for RatMatrix {
    type Output = Rat;
    fn index(&self, (i, j): (usize, usize)) -> &Rat {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RatMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rat {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            writeln!(f, "[{}]", row.join(" "))?;
        }
        Ok(())
    }
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).filter(|(x, _)| !x.is_zero()).map(|(x, y)| x * y).sum()
}

pub fn dot_int(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn to_rat_vec(v: &[BigInt]) -> Vec<Rat> {
    v.iter().map(rat_int).collect()
}

pub fn to_int_vec(v: &[Rat]) -> Option<Vec<BigInt>> {
    v.iter().map(|x| x.is_integer().then(|| x.to_integer())).collect()
}

/// `b·G·c` for rational vectors.
pub fn bilinear(gram: &IntMatrix, b: &[Rat], c: &[Rat]) -> Rat {
    let mut acc = Rat::zero();
    for (i, bi) in b.iter().enumerate() {
        if bi.is_zero() {
            continue;
        }
        let mut row = Rat::zero();
        for (j, cj) in c.iter().enumerate() {
            let g = &gram[(i, j)];
            if !g.is_zero() && !cj.is_zero() {
                row += cj * rat_int(g);
            }
        }
        acc += bi * row;
    }
    acc
}

pub fn bilinear_int(gram: &IntMatrix, b: &[BigInt], c: &[BigInt]) -> BigInt {
    let gc = gram.mul_vec(c);
    dot_int(b, &gc)
}

/// Result of a Smith normal form computation: `u * m * v == d`.
#[derive(Clone, Debug)]
pub struct Smith {
    pub u: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
}

impl Smith {
    /// Diagonal entries d₁ | d₂ | … (zeros included).
    pub fn diagonal(&self) -> Vec<BigInt> {
        let n = self.d.nrows().min(self.d.ncols());
        (0..n).map(|i| self.d[(i, i)].clone()).collect()
    }
}

fn nearest_quotient(a: &BigInt, b: &BigInt) -> BigInt {
    // floor remainder r has the sign of b, so r - b is the other candidate
    let (q, r) = a.div_mod_floor(b);
    if (&r * int(2)).abs() > b.abs() {
        q + 1
    } else {
        q
    }
}

/// Smith normal form with unimodular transforms.
///
/// Pivots on the entry of smallest absolute value in the active block.
pub fn smith_normal_form(m: &IntMatrix) -> Smith {
    let (r, c) = (m.nrows(), m.ncols());
    let mut a = m.clone();
    let mut u = IntMatrix::identity(r);
    let mut v = IntMatrix::identity(c);
    let mut t = 0;
    while t < r.min(c) {
        // smallest nonzero entry of the active block
        let mut best: Option<(usize, usize)> = None;
        for i in t..r {
            for j in t..c {
                if a[(i, j)].is_zero() {
                    continue;
                }
                if best.map_or(true, |(bi, bj)| a[(i, j)].abs() < a[(bi, bj)].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        a.swap_rows(t, pi);
        u.swap_rows(t, pi);
        a.swap_cols(t, pj);
        v.swap_cols(t, pj);

        let mut clean = true;
        for i in t + 1..r {
            if a[(i, t)].is_zero() {
                continue;
            }
            let q = nearest_quotient(&a[(i, t)], &a[(t, t)]);
            a.add_row_multiple(i, t, &-&q);
            u.add_row_multiple(i, t, &-&q);
            if !a[(i, t)].is_zero() {
                clean = false;
            }
        }
        for j in t + 1..c {
            if a[(t, j)].is_zero() {
                continue;
            }
            let q = nearest_quotient(&a[(t, j)], &a[(t, t)]);
            a.add_col_multiple(j, t, &-&q);
            v.add_col_multiple(j, t, &-&q);
            if !a[(t, j)].is_zero() {
                clean = false;
            }
        }
        if !clean {
            continue;
        }
        // divisibility of the remaining block
        let p = a[(t, t)].clone();
        let offender = (t + 1..r).find(|&i| (t + 1..c).any(|j| !a[(i, j)].is_multiple_of(&p)));
        if let Some(i) = offender {
            a.add_row_multiple(t, i, &BigInt::one());
            u.add_row_multiple(t, i, &BigInt::one());
            continue;
        }
        if a[(t, t)].is_negative() {
            a.negate_row(t);
            u.negate_row(t);
        }
        t += 1;
    }
    Smith { u, d: a, v }
}

/// Row-style Hermite normal form with transform: returns `(h, t)` with
/// `t * m == h`, `t` unimodular, `h` in echelon form with positive pivots and
/// entries above each pivot reduced into `[0, pivot)`. Zero rows of `h` are
/// kept at the bottom.
pub fn hermite_with_transform(m: &IntMatrix) -> (IntMatrix, IntMatrix, usize) {
    let (nr, nc) = (m.nrows(), m.ncols());
    let mut a = m.clone();
    let mut t = IntMatrix::identity(nr);
    let mut r = 0;
    for col in 0..nc {
        if r == nr {
            break;
        }
        let Some(p) = (r..nr).find(|&i| !a[(i, col)].is_zero()) else { continue };
        a.swap_rows(r, p);
        t.swap_rows(r, p);
        for i in r + 1..nr {
            if a[(i, col)].is_zero() {
                continue;
            }
            let x = a[(r, col)].clone();
            let y = a[(i, col)].clone();
            if y.is_multiple_of(&x) {
                let q = -(&y / &x);
                a.add_row_multiple(i, r, &q);
                t.add_row_multiple(i, r, &q);
                continue;
            }
            let e = x.extended_gcd(&y);
            let (g, s, w) = (e.gcd, e.x, e.y);
            let c = -(&y / &g);
            let d = &x / &g;
            a.combine_rows(r, i, &s, &w, &c, &d);
            t.combine_rows(r, i, &s, &w, &c, &d);
        }
        if a[(r, col)].is_negative() {
            a.negate_row(r);
            t.negate_row(r);
        }
        let p = a[(r, col)].clone();
        for k in 0..r {
            let q = a[(k, col)].div_floor(&p);
            if !q.is_zero() {
                a.add_row_multiple(k, r, &-&q);
                t.add_row_multiple(k, r, &-&q);
            }
        }
        r += 1;
    }
    (a, t, r)
}

/// Hermite normal form of the row lattice; only the nonzero rows are returned.
pub fn hermite_normal_form(m: &IntMatrix) -> IntMatrix {
    let (h, _, rank) = hermite_with_transform(m);
    h.select_rows(&(0..rank).collect::<Vec<_>>())
}

/// Saturated ℤ-basis (as rows) of `{x ∈ ℤⁿ : m·x = 0}`.
pub fn integer_kernel(m: &IntMatrix) -> IntMatrix {
    let n = m.ncols();
    if m.nrows() == 0 {
        return IntMatrix::identity(n);
    }
    let (_, t, rank) = hermite_with_transform(&m.transpose());
    let k = t.select_rows(&(rank..n).collect::<Vec<_>>());
    if k.nrows() == 0 {
        return k;
    }
    hermite_normal_form(&k)
}

/// Some solution of `a·x = b`, or `None` when `b` is not in the column space.
pub fn rational_solve(a: &RatMatrix, b: &[Rat]) -> Option<Vec<Rat>> {
    let (nr, nc) = (a.nrows(), a.ncols());
    assert_eq!(b.len(), nr);
    let mut m = a.clone();
    let mut rhs: Vec<Rat> = b.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..nc {
        if r == nr {
            break;
        }
        let Some(p) = (r..nr).find(|&i| !m[(i, c)].is_zero()) else { continue };
        if p != r {
            for cc in 0..nc {
                m.data.swap(r * nc + cc, p * nc + cc);
            }
            rhs.swap(r, p);
        }
        let pivot = m[(r, c)].clone();
        for cc in c..nc {
            m[(r, cc)] /= &pivot;
        }
        rhs[r] /= &pivot;
        for i in 0..nr {
            if i == r || m[(i, c)].is_zero() {
                continue;
            }
            let f = m[(i, c)].clone();
            for cc in c..nc {
                let v = &f * &m[(r, cc)];
                m[(i, cc)] -= v;
            }
            let v = &f * &rhs[r];
            rhs[i] -= v;
        }
        pivots.push(c);
        r += 1;
    }
    if rhs[r..].iter().any(|x| !x.is_zero()) {
        return None;
    }
    let mut x = vec![Rat::zero(); nc];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = rhs[i].clone();
    }
    Some(x)
}

/// Integer solution `y` of `y · basis = target`, where `basis` has linearly
/// independent rows; `None` if the target is outside the rational span or the
/// coefficients are not integral.
pub fn integral_coordinates(basis: &RatMatrix, target: &[Rat]) -> Option<Vec<BigInt>> {
    let y = rational_solve(&basis.transpose(), target)?;
    to_int_vec(&y)
}

/// Rational coefficients `y` with `y · basis = target`.
pub fn rational_coordinates(basis: &RatMatrix, target: &[Rat]) -> Option<Vec<Rat>> {
    rational_solve(&basis.transpose(), target)
}

/// Row lattice spanned by rational generators, as a basis of rational rows.
pub fn rational_row_basis(gens: &RatMatrix) -> RatMatrix {
    let den = gens.denominator();
    let scaled = gens.scale(&rat_int(&den)).to_int().expect("cleared denominators");
    let h = hermite_normal_form(&scaled);
    h.to_rat().scale(&Rat::new(BigInt::one(), den))
}

/// Product of the nonzero Smith invariants equals 1 and the rows are independent.
pub fn is_primitive_rows(m: &IntMatrix) -> bool {
    if m.nrows() == 0 {
        return true;
    }
    let diag = smith_normal_form(m).diagonal();
    diag.len() == m.nrows() && diag.iter().all(|d| d.is_one())
}

/// JSON number for an integer that fits in i64, else its decimal string.
pub fn int_json(x: &BigInt) -> serde_json::Value {
    use num_traits::ToPrimitive;
    match x.to_i64() {
        Some(v) => serde_json::Value::from(v),
        None => serde_json::Value::from(x.to_string()),
    }
}

/// `serialize_with` helper for integer vectors.
pub fn serialize_ints<S: serde::Serializer>(v: &[BigInt], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(int_json))
}

/// Least common multiple of a slice of integers (1 for an empty slice).
pub fn lcm_all<'a>(xs: impl IntoIterator<Item = &'a BigInt>) -> BigInt {
    xs.into_iter().fold(BigInt::one(), |acc, x| acc.lcm(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    fn check_smith(a: &IntMatrix) -> Smith {
        let s = smith_normal_form(a);
        assert_eq!(s.u.mul(a).mul(&s.v), s.d);
        assert!(s.u.det().abs().is_one());
        assert!(s.v.det().abs().is_one());
        let diag = s.diagonal();
        for w in diag.windows(2) {
            if !w[1].is_zero() {
                assert!(w[1].is_multiple_of(&w[0]));
            }
        }
        for i in 0..s.d.nrows() {
            for j in 0..s.d.ncols() {
                if i != j {
                    assert!(s.d[(i, j)].is_zero());
                }
            }
        }
        s
    }

    #[test]
    fn smith_examples() {
        assert_eq!(check_smith(&m(&[&[2, 0], &[0, 4]])).diagonal(), vec![int(2), int(4)]);
        assert_eq!(check_smith(&m(&[&[2, 1], &[1, 2]])).diagonal(), vec![int(1), int(3)]);
        assert_eq!(check_smith(&m(&[&[0, 0], &[0, 0]])).diagonal(), vec![int(0), int(0)]);
        assert_eq!(check_smith(&m(&[&[6, 4], &[4, 6]])).diagonal(), vec![int(2), int(10)]);
        check_smith(&m(&[&[1, 2, 3], &[4, 5, 6]]));
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(integer_kernel(&m(&[&[1, 1]])).rows_vec(), vec![vec![int(1), int(-1)]]);
        let k = integer_kernel(&m(&[&[2, 4]]));
        assert_eq!(k.nrows(), 1);
        let r = k.row_vec(0);
        assert!(r == vec![int(2), int(-1)] || r == vec![int(-2), int(1)]);
        assert_eq!(integer_kernel(&IntMatrix::identity(3)).nrows(), 0);
    }

    #[test]
    fn kernel_is_saturated() {
        let a = m(&[&[2, 4, 6, 8], &[1, 3, 5, 7]]);
        let k = integer_kernel(&a);
        assert_eq!(k.nrows(), 2);
        assert!(a.mul(&k.transpose()).is_zero());
        assert!(is_primitive_rows(&k));
    }

    #[test]
    fn rational_solve_examples() {
        let a = IntMatrix::diagonal(&[4, 4]).to_rat();
        assert_eq!(rational_solve(&a, &[rat(1, 1), rat(3, 1)]).unwrap(), vec![rat(1, 4), rat(3, 4)]);
        let a = m(&[&[0, 1], &[1, 0]]).to_rat();
        assert_eq!(rational_solve(&a, &[rat(1, 1), rat(0, 1)]).unwrap(), vec![rat(0, 1), rat(1, 1)]);
        let a = m(&[&[1], &[1]]).to_rat();
        assert!(rational_solve(&a, &[rat(1, 1), rat(2, 1)]).is_none());
    }

    #[test]
    fn determinants() {
        assert_eq!(m(&[&[0, 1], &[1, 0]]).det(), int(-1));
        assert_eq!(m(&[&[-2, 1, 0], &[1, -2, 1], &[0, 1, -2]]).det(), int(-4));
        assert_eq!(m(&[&[1, 2], &[2, 4]]).det(), int(0));
        let r = m(&[&[2, 1], &[1, 3]]).to_rat();
        assert_eq!(r.det(), rat(5, 1));
        assert_eq!(r.inverse().unwrap().mul(&r), RatMatrix::identity(2));
    }

    #[test]
    fn hermite_is_canonical() {
        let a = m(&[&[2, 0], &[0, 3]]);
        let b = m(&[&[2, 3], &[4, 3], &[0, 3]]);
        assert_eq!(hermite_normal_form(&a), m(&[&[2, 0], &[0, 3]]));
        assert_eq!(hermite_normal_form(&b), m(&[&[2, 0], &[0, 3]]));
    }

    #[test]
    fn smith_negative_ties() {
        assert_eq!(check_smith(&m(&[&[-2, -3], &[0, 7]])).diagonal(), vec![int(1), int(14)]);
        for (a, b) in [(-3, -2), (7, -2), (5, 3), (-5, 3), (4, -3)] {
            let r = int(a) - nearest_quotient(&int(a), &int(b)) * int(b);
            assert!((r * int(2)).abs() <= int(b).abs());
        }
    }

    #[test]
    fn smith_on_rank_20_gram() {
        let text = [
        "0 1 1 1 1 1 1 1 1 1 1 0 0 0 0 0 0 0 0 0",
        "1 -2 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0",
        "1 0 -2 0 0 0 0 0 0 0 0 1 0 0 0 0 1 0 0 0",
        "1 0 0 -2 0 0 0 0 0 0 0 0 0 1 0 0 0 0 0 0",
        "1 0 0 0 -2 0 0 0 0 0 0 0 0 0 1 0 1 0 0 0",
        "1 0 0 0 0 -2 0 0 0 0 0 0 1 0 0 0 0 1 0 0",
        "1 0 0 0 0 0 -2 0 0 0 0 0 0 0 0 1 0 1 0 1",
        "1 0 0 0 0 0 0 -2 0 0 0 0 0 1 0 0 0 0 1 0",
        "1 0 0 0 0 0 0 0 -2 0 0 0 0 0 0 0 0 0 1 0",
        "1 0 0 0 0 0 0 0 0 -2 0 0 0 0 1 0 0 0 0 0",
        "1 0 0 0 0 0 0 0 0 0 -2 0 0 0 0 1 0 0 0 0",
        "0 0 1 0 0 0 0 0 0 0 0 -2 1 0 0 0 0 0 0 0",
        "0 0 0 0 0 1 0 0 0 0 0 1 -2 1 0 0 0 0 0 0",
        "0 0 0 1 0 0 0 1 0 0 0 0 1 -2 1 0 0 0 0 0",
        "0 0 0 0 1 0 0 0 0 1 0 0 0 1 -2 1 0 0 0 0",
        "0 0 0 0 0 0 1 0 0 0 1 0 0 0 1 -2 0 0 0 0",
        "0 0 1 0 1 0 0 0 0 0 0 0 0 0 0 0 -2 1 0 0",
        "0 0 0 0 0 1 1 0 0 0 0 0 0 0 0 0 1 -2 1 0",
        "0 0 0 0 0 0 0 1 1 0 0 0 0 0 0 0 0 1 -2 0",
        "0 0 0 0 0 0 1 0 0 0 0 0 0 0 0 0 0 0 0 -2",
        ];
        let rows: Vec<Vec<i64>> =
            text.iter().map(|l| l.split_whitespace().map(|x| x.parse().unwrap()).collect()).collect();
        let g = IntMatrix::from_rows(&rows);
        let s = check_smith(&g);
        let prod = s.diagonal().iter().fold(BigInt::one(), |a, b| a * b);
        assert_eq!(prod.abs(), g.det().abs());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]

            #[test]
            fn smith_transforms_are_consistent(
                r in 1usize..5,
                c in 1usize..5,
                vals in proptest::collection::vec(-9i64..10, 16),
            ) {
                let rows: Vec<Vec<i64>> = (0..r).map(|i| vals[i * 4..i * 4 + c].to_vec()).collect();
                let a = IntMatrix::from_rows(&rows);
                check_smith(&a);
            }
        }
    }
}
