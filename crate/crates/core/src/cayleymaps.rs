//! Exact verification of equivariant Cayley-type maps over `Q` and `Q(ζ₃)`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fingroup::{FinGroup, SignedPerm};

type Q = BigRational;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CayleyError {
    #[error("matrix is singular at the requested point")]
    Singular,
    #[error("trace vanishes")]
    TraceZero,
    #[error("involution is not anti-multiplicative on basis pair ({0}, {1})")]
    NotInvolution(usize, usize),
    #[error("element is not invertible in the algebra")]
    SingularElement,
    #[error("matrix is not nilpotent")]
    NotNilpotent,
    #[error("matrix is not unipotent")]
    NotUnipotent,
    #[error("coordinate {0} equals -1")]
    Pole(usize),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("shape mismatch")]
    Shape,
}

fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Dense matrix of exact rationals.
#[derive(Clone, PartialEq, Eq)]
pub struct RatMat {
    rows: usize,
    cols: usize,
    data: Vec<Q>,
}

impl fmt::Debug for RatMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j).to_string()).collect::<Vec<_>>().join(" "))
            .collect();
        write!(f, "[{}]", rows.join("; "))
    }
}

impl RatMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMat { rows, cols, data: vec![Q::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Q::one());
        }
        m
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        RatMat { rows: r, cols: c, data: rows.iter().flat_map(|row| row.iter().map(|&x| q(x))).collect() }
    }

    pub fn from_rows(rows: Vec<Vec<Q>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        RatMat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Q {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Q) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn scale(&self, s: &Q) -> Self {
        RatMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn trace(&self) -> Q {
        (0..self.rows.min(self.cols)).fold(Q::zero(), |a, i| a + self.get(i, i))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut acc = Self::identity(self.rows);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Gauss-Jordan inverse; `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for c in 0..n {
            let piv = (c..n).find(|&r| !a.get(r, c).is_zero())?;
            if piv != c {
                for j in 0..n {
                    a.data.swap(piv * n + j, c * n + j);
                    inv.data.swap(piv * n + j, c * n + j);
                }
            }
            let p = a.get(c, c).clone();
            for j in 0..n {
                let x = a.get(c, j) / &p;
                a.set(c, j, x);
                let y = inv.get(c, j) / &p;
                inv.set(c, j, y);
            }
            for r in 0..n {
                if r == c || a.get(r, c).is_zero() {
                    continue;
                }
                let f = a.get(r, c).clone();
                for j in 0..n {
                    let x = a.get(r, j) - &f * a.get(c, j);
                    a.set(r, j, x);
                    let y = inv.get(r, j) - &f * inv.get(c, j);
                    inv.set(r, j, y);
                }
            }
        }
        Some(inv)
    }

    /// Whether `self = c · o` for some nonzero scalar `c`.
    pub fn proportional(&self, o: &RatMat) -> bool {
        proj_eq(&self.data, &o.data)
    }
}

impl<'a> Add<&'a RatMat> for &'a RatMat {
    type Output = RatMat;
    fn add(self, o: &RatMat) -> RatMat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        RatMat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect() }
    }
}

impl<'a> Sub<&'a RatMat> for &'a RatMat {
    type Output = RatMat;
    fn sub(self, o: &RatMat) -> RatMat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        RatMat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect() }
    }
}

impl Neg for &RatMat {
    type Output = RatMat;
    fn neg(self) -> RatMat {
        RatMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| -a).collect() }
    }
}

impl<'a> Mul<&'a RatMat> for &'a RatMat {
    type Output = RatMat;
    fn mul(self, o: &RatMat) -> RatMat {
        assert_eq!(self.cols, o.rows);
        let mut m = RatMat::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let v = m.get(i, j) + a * o.get(k, j);
                    m.set(i, j, v);
                }
            }
        }
        m
    }
}

/// Equality of two coordinate vectors up to a nonzero scalar.
pub fn proj_eq<T>(a: &[T], b: &[T]) -> bool
where
    T: Clone + PartialEq + Zero,
    for<'x> &'x T: Mul<&'x T, Output = T>,
{
    if a.len() != b.len() {
        return false;
    }
    let Some(k) = a.iter().position(|x| !x.is_zero()) else {
        return false;
    };
    if b[k].is_zero() {
        return false;
    }
    // a_i b_k = b_i a_k for all i
    a.iter().zip(b).all(|(ai, bi)| ai * &b[k] == bi * &a[k])
}

/// A point of projective space with exact rational coordinates.
#[derive(Clone, Debug)]
pub struct ProjPoint(pub Vec<Q>);

impl PartialEq for ProjPoint {
    fn eq(&self, o: &Self) -> bool {
        proj_eq(&self.0, &o.0)
    }
}

/// `(I - X)(I + X)^{-1}`.
pub fn classical_cayley(x: &RatMat) -> Result<RatMat, CayleyError> {
    let id = RatMat::identity(x.nrows());
    let inv = (&id + x).inverse().ok_or(CayleyError::Singular)?;
    Ok(&(&id - x) * &inv)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classical {
    /// `SO(n)`
    So(usize),
    /// `Sp(2n)`, given `n`
    Sp(usize),
}

/// Outcome of a seeded randomized verifier.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapReport {
    pub name: String,
    pub seed: u64,
    pub trials: usize,
    pub passed: usize,
    pub resampled: usize,
    /// number of passes per named check
    pub checks: BTreeMap<String, usize>,
    /// first failing inputs, one line each
    pub failures: Vec<String>,
}

impl MapReport {
    fn new(name: &str, seed: u64, trials: usize) -> Self {
        MapReport { name: name.into(), seed, trials, passed: 0, resampled: 0, checks: BTreeMap::new(), failures: vec![] }
    }

    pub fn ok(&self) -> bool {
        self.passed == self.trials && self.failures.is_empty()
    }

    /// Records the named checks of one trial.
    fn record(&mut self, input: impl fmt::Debug, results: &[(&str, bool)]) {
        let mut all = true;
        for (name, ok) in results {
            if *ok {
                *self.checks.entry((*name).to_string()).or_default() += 1;
            } else {
                all = false;
                if self.failures.len() < 8 {
                    self.failures.push(format!("{name} failed on {input:?}"));
                }
            }
        }
        if all {
            self.passed += 1;
        }
    }
}

const RESAMPLE_BUDGET: usize = 1000;

fn rand_q(rng: &mut ChaCha8Rng) -> Q {
    Q::new(BigInt::from(rng.gen_range(-5i64..=5)), BigInt::from(rng.gen_range(1i64..=4)))
}

fn rand_nonzero_q(rng: &mut ChaCha8Rng) -> Q {
    loop {
        let x = rand_q(rng);
        if !x.is_zero() {
            return x;
        }
    }
}

fn random_skew(n: usize, rng: &mut ChaCha8Rng) -> RatMat {
    let mut m = RatMat::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let x = rand_q(rng);
            m.set(j, i, -x.clone());
            m.set(i, j, x);
        }
    }
    m
}

/// `J_{2n} = [[0, I], [-I, 0]]`.
pub fn symplectic_form(n: usize) -> RatMat {
    let mut j = RatMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        j.set(i, n + i, Q::one());
        j.set(n + i, i, -Q::one());
    }
    j
}

/// `J S` with `S` symmetric satisfies `Y^T J = -J Y`.
fn random_hamiltonian(n: usize, rng: &mut ChaCha8Rng) -> RatMat {
    let mut s = RatMat::zeros(2 * n, 2 * n);
    for i in 0..2 * n {
        for j in i..2 * n {
            let x = rand_q(rng);
            s.set(i, j, x.clone());
            s.set(j, i, x);
        }
    }
    &symplectic_form(n) * &s
}

/// Lie algebra element and its Cayley image in the group, resampling on the singular locus.
fn sample_classical(kind: Classical, rng: &mut ChaCha8Rng, resampled: &mut usize) -> Option<(RatMat, RatMat)> {
    for _ in 0..RESAMPLE_BUDGET {
        let y = match kind {
            Classical::So(n) => random_skew(n, rng),
            Classical::Sp(n) => random_hamiltonian(n, rng),
        };
        match classical_cayley(&y) {
            Ok(x) => return Some((y, x)),
            Err(_) => *resampled += 1,
        }
    }
    None
}

fn in_group(kind: Classical, x: &RatMat) -> bool {
    match kind {
        Classical::So(n) => &x.transpose() * x == RatMat::identity(n),
        Classical::Sp(n) => {
            let j = symplectic_form(n);
            &(&x.transpose() * &j) * x == j
        }
    }
}

fn group_inverse(kind: Classical, g: &RatMat) -> RatMat {
    match kind {
        Classical::So(_) => g.transpose(),
        Classical::Sp(n) => {
            let j = symplectic_form(n);
            -&(&(&j * &g.transpose()) * &j)
        }
    }
}

/// Round trip, group membership, and conjugation equivariance of the Cayley transform.
pub fn verify_classical(kind: Classical, trials: usize, seed: u64) -> MapReport {
    let name = match kind {
        Classical::So(n) => format!("cayley SO({n})"),
        Classical::Sp(n) => format!("cayley Sp({})", 2 * n),
    };
    let mut rep = MapReport::new(&name, seed, trials);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = match kind {
        Classical::So(n) => n,
        Classical::Sp(n) => 2 * n,
    };
    // I ↦ 0 and 0 ↦ I
    let id = RatMat::identity(dim);
    let base = classical_cayley(&id).is_ok_and(|z| z.is_zero()) && classical_cayley(&RatMat::zeros(dim, dim)).is_ok_and(|x| x == id);
    for _ in 0..trials {
        let mut resampled = 0;
        let Some((y, x)) = sample_classical(kind, &mut rng, &mut resampled) else {
            rep.failures.push("resample budget exhausted".into());
            continue;
        };
        let Some((_, g)) = sample_classical(kind, &mut rng, &mut resampled) else {
            rep.failures.push("resample budget exhausted".into());
            continue;
        };
        rep.resampled += resampled;
        let round = classical_cayley(&x).map_or(false, |b| b == y);
        let member = in_group(kind, &x) && in_group(kind, &g);
        let gi = group_inverse(kind, &g);
        let conj = &(&g * &x) * &gi;
        let equi = classical_cayley(&conj).map_or(false, |l| l == &(&g * &y) * &gi);
        rep.record(&y, &[("round_trip", round), ("membership", member), ("equivariance", equi), ("base_point", base)]);
    }
    rep
}

/// `[a] ↦ (n / Tr a) a - I`.
pub fn pgl_map(a: &RatMat) -> Result<RatMat, CayleyError> {
    let n = a.nrows();
    let t = a.trace();
    if t.is_zero() {
        return Err(CayleyError::TraceZero);
    }
    Ok(&a.scale(&(q(n as i64) / t)) - &RatMat::identity(n))
}

/// `b ↦ [b + I]`.
pub fn pgl_inverse(b: &RatMat) -> RatMat {
    b + &RatMat::identity(b.nrows())
}

fn random_invertible(n: usize, rng: &mut ChaCha8Rng) -> (RatMat, RatMat) {
    loop {
        let rows: Vec<Vec<Q>> = (0..n).map(|_| (0..n).map(|_| rand_q(rng)).collect()).collect();
        let m = RatMat::from_rows(rows);
        if let Some(i) = m.inverse() {
            return (m, i);
        }
    }
}

pub fn verify_pgl(n: usize, trials: usize, seed: u64) -> MapReport {
    let mut rep = MapReport::new(&format!("cayley PGL({n})"), seed, trials);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = RatMat::identity(n);
    let base = pgl_map(&id).is_ok_and(|z| z.is_zero()) && pgl_inverse(&RatMat::zeros(n, n)).proportional(&id);
    for _ in 0..trials {
        let (a, _) = loop {
            let c = random_invertible(n, &mut rng);
            if !c.0.trace().is_zero() {
                break c;
            }
            rep.resampled += 1;
        };
        let (g, gi) = random_invertible(n, &mut rng);
        let b = pgl_map(&a).expect("trace is nonzero");
        let traceless = b.trace().is_zero();
        let round = pgl_inverse(&b).proportional(&a);
        let equi = pgl_map(&(&(&g * &a) * &gi)).map_or(false, |c| c == &(&g * &b) * &gi);
        rep.record(&a, &[("traceless", traceless), ("round_trip", round), ("equivariance", equi), ("base_point", base)]);
    }
    rep
}

/// Finite-dimensional unital algebra over `Q` with an involution, by structure constants.
#[derive(Clone, Debug)]
pub struct Algebra {
    dim: usize,
    /// `mult[i][j]` are the coordinates of `e_i e_j`
    mult: Vec<Vec<Vec<Q>>>,
    one: Vec<Q>,
    /// column `j` holds `ι(e_j)`
    involution: RatMat,
}

impl Algebra {
    /// Checks `(e_i e_j)^ι = e_j^ι e_i^ι` on all basis pairs.
    pub fn new(mult: Vec<Vec<Vec<Q>>>, one: Vec<Q>, involution: RatMat) -> Result<Self, CayleyError> {
        let dim = one.len();
        if mult.len() != dim || involution.nrows() != dim || involution.ncols() != dim {
            return Err(CayleyError::Shape);
        }
        let a = Algebra { dim, mult, one, involution };
        for i in 0..dim {
            for j in 0..dim {
                let (ei, ej) = (a.basis(i), a.basis(j));
                let lhs = a.iota(&a.mul(&ei, &ej));
                let rhs = a.mul(&a.iota(&ej), &a.iota(&ei));
                if lhs != rhs {
                    return Err(CayleyError::NotInvolution(i, j));
                }
            }
        }
        Ok(a)
    }

    /// `Mat_n` on the basis `E_{ij}` (index `i n + j`) with `X ↦ X^T` or `X ↦ J^{-1} X^T J`.
    pub fn matrix_algebra(n: usize, symplectic: bool) -> Result<Self, CayleyError> {
        let dim = n * n;
        let mut mult = vec![vec![vec![Q::zero(); dim]; dim]; dim];
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    mult[i * n + j][j * n + l][i * n + l] = Q::one();
                }
            }
        }
        let one = Self::flatten(&RatMat::identity(n));
        let mut inv = RatMat::zeros(dim, dim);
        for b in 0..dim {
            let mut e = RatMat::zeros(n, n);
            e.set(b / n, b % n, Q::one());
            let img = if symplectic { symplectic_adjoint(&e) } else { e.transpose() };
            for (k, v) in Self::flatten(&img).into_iter().enumerate() {
                inv.set(k, b, v);
            }
        }
        Self::new(mult, one, inv)
    }

    pub fn flatten(m: &RatMat) -> Vec<Q> {
        m.data.clone()
    }

    pub fn unflatten(v: &[Q], n: usize) -> RatMat {
        RatMat { rows: n, cols: n, data: v.to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn one(&self) -> &[Q] {
        &self.one
    }

    fn basis(&self, i: usize) -> Vec<Q> {
        let mut v = vec![Q::zero(); self.dim];
        v[i] = Q::one();
        v
    }

    pub fn mul(&self, x: &[Q], y: &[Q]) -> Vec<Q> {
        let mut out = vec![Q::zero(); self.dim];
        for (i, xi) in x.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            for (j, yj) in y.iter().enumerate() {
                if yj.is_zero() {
                    continue;
                }
                let c = xi * yj;
                for (k, m) in self.mult[i][j].iter().enumerate() {
                    if !m.is_zero() {
                        out[k] += &c * m;
                    }
                }
            }
        }
        out
    }

    pub fn iota(&self, x: &[Q]) -> Vec<Q> {
        (0..self.dim).map(|i| (0..self.dim).fold(Q::zero(), |a, j| a + self.involution.get(i, j) * &x[j])).collect()
    }

    /// Two-sided inverse via the left multiplication matrix.
    pub fn inverse(&self, x: &[Q]) -> Option<Vec<Q>> {
        let mut l = RatMat::zeros(self.dim, self.dim);
        for j in 0..self.dim {
            let col = self.mul(x, &self.basis(j));
            for (i, v) in col.into_iter().enumerate() {
                l.set(i, j, v);
            }
        }
        let li = l.inverse()?;
        Some((0..self.dim).map(|i| (0..self.dim).fold(Q::zero(), |a, j| a + li.get(i, j) * &self.one[j])).collect())
    }
}

/// `J^{-1} X^T J`.
pub fn symplectic_adjoint(x: &RatMat) -> RatMat {
    let j = symplectic_form(x.nrows() / 2);
    -&(&(&j * &x.transpose()) * &j)
}

/// `a ↦ (1 - a)(1 + a)^{-1}` in the algebra.
pub fn weil_map(alg: &Algebra, a: &[Q]) -> Result<Vec<Q>, CayleyError> {
    let plus: Vec<Q> = alg.one.iter().zip(a).map(|(x, y)| x + y).collect();
    let minus: Vec<Q> = alg.one.iter().zip(a).map(|(x, y)| x - y).collect();
    let inv = alg.inverse(&plus).ok_or(CayleyError::SingularElement)?;
    Ok(alg.mul(&minus, &inv))
}

/// Agreement with the matrix formula and `a^ι a = 1 ⇒ λ(a)^ι = -λ(a)` on group samples.
pub fn verify_weil(kind: Classical, trials: usize, seed: u64) -> Result<MapReport, CayleyError> {
    let (n, symp) = match kind {
        Classical::So(n) => (n, false),
        Classical::Sp(n) => (2 * n, true),
    };
    let alg = Algebra::matrix_algebra(n, symp)?;
    let mut rep = MapReport::new(&format!("weil {kind:?}"), seed, trials);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let mut resampled = 0;
        let Some((_, x)) = sample_classical(kind, &mut rng, &mut resampled) else {
            rep.failures.push("resample budget exhausted".into());
            continue;
        };
        rep.resampled += resampled;
        let a = Algebra::flatten(&x);
        let unitary = alg.mul(&alg.iota(&a), &a) == alg.one;
        let (agree, skew) = match (weil_map(&alg, &a), classical_cayley(&x)) {
            (Ok(w), Ok(c)) => {
                let neg: Vec<Q> = w.iter().map(|v| -v).collect();
                (Algebra::unflatten(&w, n) == c, alg.iota(&w) == neg)
            }
            _ => (false, false),
        };
        rep.record(&x, &[("unitary", unitary), ("agrees_with_matrix", agree), ("skew", skew)]);
    }
    Ok(rep)
}

fn is_nilpotent(y: &RatMat) -> bool {
    y.pow(y.nrows()).is_zero()
}

fn factorial(k: usize) -> Q {
    q((1..=k as i64).product())
}

/// `Σ_{k<n} y^k / k!` for nilpotent `y`.
pub fn unipotent_exp(y: &RatMat) -> Result<RatMat, CayleyError> {
    if !is_nilpotent(y) {
        return Err(CayleyError::NotNilpotent);
    }
    let n = y.nrows();
    let mut acc = RatMat::identity(n);
    let mut pw = RatMat::identity(n);
    for k in 1..n {
        pw = &pw * y;
        acc = &acc + &pw.scale(&(Q::one() / factorial(k)));
    }
    Ok(acc)
}

/// `Σ_{k<n} (-1)^{k+1} (x - I)^k / k` for unipotent `x`.
pub fn unipotent_log(x: &RatMat) -> Result<RatMat, CayleyError> {
    let n = x.nrows();
    let m = x - &RatMat::identity(n);
    if !is_nilpotent(&m) {
        return Err(CayleyError::NotUnipotent);
    }
    let mut acc = RatMat::zeros(n, n);
    let mut pw = RatMat::identity(n);
    for k in 1..n {
        pw = &pw * &m;
        let c = Q::new(BigInt::from(if k % 2 == 1 { 1 } else { -1 }), BigInt::from(k));
        acc = &acc + &pw.scale(&c);
    }
    Ok(acc)
}

pub fn verify_unipotent(n: usize, trials: usize, seed: u64) -> MapReport {
    let mut rep = MapReport::new(&format!("unipotent exp/log {n}x{n}"), seed, trials);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let mut y = RatMat::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                y.set(i, j, rand_q(&mut rng));
            }
        }
        let x = unipotent_exp(&y).expect("strictly upper triangular");
        let log_exp = unipotent_log(&x).map_or(false, |l| l == y);
        // a unipotent matrix not built from y
        let mut u = RatMat::identity(n);
        for i in 0..n {
            for j in i + 1..n {
                u.set(i, j, rand_q(&mut rng));
            }
        }
        let exp_log = unipotent_log(&u).and_then(|l| unipotent_exp(&l)).map_or(false, |e| e == u);
        rep.record(&y, &[("log_exp", log_exp), ("exp_log", exp_log)]);
    }
    rep
}

/// `t_i ↦ (1 - t_i) / (1 + t_i)`.
pub fn torus_sign_cayley(t: &[Q]) -> Result<Vec<Q>, CayleyError> {
    t.iter()
        .enumerate()
        .map(|(i, x)| {
            let d = Q::one() + x;
            if d.is_zero() {
                Err(CayleyError::Pole(i))
            } else {
                Ok((Q::one() - x) / d)
            }
        })
        .collect()
}

/// Multiplicative action: coordinate `i` goes to `w(i)`, inverted when the sign is negative.
pub fn act_torus(w: &SignedPerm, t: &[Q]) -> Vec<Q> {
    let mut out = vec![Q::zero(); t.len()];
    for (i, x) in t.iter().enumerate() {
        out[w.image(i)] = if w.sign(i) < 0 { x.recip() } else { x.clone() };
    }
    out
}

/// Linear signed-permutation action.
pub fn act_linear(w: &SignedPerm, v: &[Q]) -> Vec<Q> {
    let mut out = vec![Q::zero(); v.len()];
    for (i, x) in v.iter().enumerate() {
        out[w.image(i)] = if w.sign(i) < 0 { -x.clone() } else { x.clone() };
    }
    out
}

/// Equivariance and the involution property of the torus map under a signed-permutation group.
pub fn verify_torus(group: &Arc<FinGroup>, trials: usize, seed: u64) -> MapReport {
    let r = group.degree();
    let mut rep = MapReport::new(&format!("torus map over {}", group.label()), seed, trials);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = group.order();
    let ones = vec![Q::one(); r];
    let base = torus_sign_cayley(&ones).is_ok_and(|z| z.iter().all(|x| x.is_zero()))
        && torus_sign_cayley(&vec![Q::zero(); r]).is_ok_and(|t| t == ones);
    for _ in 0..trials {
        let t: Vec<Q> = loop {
            let t: Vec<Q> = (0..r).map(|_| rand_nonzero_q(&mut rng)).collect();
            if t.iter().all(|x| *x != -Q::one()) {
                break t;
            }
            rep.resampled += 1;
        };
        let w = group.element(rng.gen_range(0..order)).clone();
        let lhs = torus_sign_cayley(&act_torus(&w, &t));
        let rhs = torus_sign_cayley(&t).map(|m| act_linear(&w, &m));
        let equi = matches!((lhs, rhs), (Ok(a), Ok(b)) if a == b);
        let round = torus_sign_cayley(&t).and_then(|m| torus_sign_cayley(&m)).is_ok_and(|back| back == t);
        rep.record(&t, &[("equivariance", equi), ("round_trip", round), ("base_point", base)]);
    }
    rep
}

/// `u + v ζ` with `ζ² = -1 - ζ`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct QZeta {
    pub u: Q,
    pub v: Q,
}

impl QZeta {
    pub fn rational(u: Q) -> Self {
        QZeta { u, v: Q::zero() }
    }

    pub fn zeta() -> Self {
        QZeta { u: Q::zero(), v: Q::one() }
    }

    pub fn zeta2() -> Self {
        QZeta { u: -Q::one(), v: -Q::one() }
    }

    pub fn is_rational(&self) -> bool {
        self.v.is_zero()
    }

    pub fn norm(&self) -> Q {
        &self.u * &self.u - &self.u * &self.v + &self.v * &self.v
    }

    pub fn inv(&self) -> Option<Self> {
        let n = self.norm();
        if n.is_zero() {
            return None;
        }
        Some(QZeta { u: (&self.u - &self.v) / &n, v: -&self.v / &n })
    }

    pub fn div(&self, o: &Self) -> Option<Self> {
        o.inv().map(|i| self * &i)
    }
}

impl Zero for QZeta {
    fn zero() -> Self {
        QZeta { u: Q::zero(), v: Q::zero() }
    }
    fn is_zero(&self) -> bool {
        self.u.is_zero() && self.v.is_zero()
    }
}

impl Add for QZeta {
    type Output = QZeta;
    fn add(self, o: QZeta) -> QZeta {
        QZeta { u: self.u + o.u, v: self.v + o.v }
    }
}

impl<'a> Add<&'a QZeta> for &'a QZeta {
    type Output = QZeta;
    fn add(self, o: &QZeta) -> QZeta {
        QZeta { u: &self.u + &o.u, v: &self.v + &o.v }
    }
}

impl<'a> Sub<&'a QZeta> for &'a QZeta {
    type Output = QZeta;
    fn sub(self, o: &QZeta) -> QZeta {
        QZeta { u: &self.u - &o.u, v: &self.v - &o.v }
    }
}

impl Neg for &QZeta {
    type Output = QZeta;
    fn neg(self) -> QZeta {
        QZeta { u: -&self.u, v: -&self.v }
    }
}

impl<'a> Mul<&'a QZeta> for &'a QZeta {
    type Output = QZeta;
    fn mul(self, o: &QZeta) -> QZeta {
        let bd = &self.v * &o.v;
        QZeta { u: &self.u * &o.u - &bd, v: &self.u * &o.v + &self.v * &o.u - bd }
    }
}

type Diag = [QZeta; 3];

fn zq(x: &Q) -> QZeta {
    QZeta::rational(x.clone())
}

fn third() -> QZeta {
    zq(&Q::new(BigInt::one(), BigInt::from(3)))
}

fn degenerate(step: &str) -> CayleyError {
    CayleyError::Degenerate(step.into())
}

fn dv(a: &QZeta, b: &QZeta, step: &str) -> Result<QZeta, CayleyError> {
    a.div(b).ok_or_else(|| degenerate(step))
}

fn tr(x: &Diag) -> QZeta {
    &(&x[0] + &x[1]) + &x[2]
}

fn traceless(x: &Diag) -> Diag {
    let t = &tr(x) * &third();
    [&x[0] - &t, &x[1] - &t, &x[2] - &t]
}

/// `σ(diag(a_1, a_2, a_3)) = diag(a_{σ(1)}, a_{σ(2)}, a_{σ(3)})`.
pub fn sigma_act(s: &SignedPerm, x: &Diag) -> Diag {
    [x[s.image(0)].clone(), x[s.image(1)].clone(), x[s.image(2)].clone()]
}

/// Coordinates `(y_1, y_2)` of a traceless diagonal matrix in `D_1 = diag(1,ζ,ζ²)`, `D_2 = diag(1,ζ²,ζ)`.
fn d_coords(y: &Diag) -> [QZeta; 2] {
    let (z, z2) = (QZeta::zeta(), QZeta::zeta2());
    let a = &(&(&y[0] + &(&z2 * &y[1])) + &(&z * &y[2])) * &third();
    let b = &(&(&y[0] + &(&z * &y[1])) + &(&z2 * &y[2])) * &third();
    [a, b]
}

fn from_d(c0: &QZeta, c1: &QZeta, c2: &QZeta) -> Diag {
    // c0 I + c1 D_1 + c2 D_2
    let (z, z2) = (QZeta::zeta(), QZeta::zeta2());
    [
        &(c0 + c1) + c2,
        &(c0 + &(c1 * &z)) + &(c2 * &z2),
        &(c0 + &(c1 * &z2)) + &(c2 * &z),
    ]
}

/// Step map `T → P²_twisted`, inverse of `[a] ↦ diag(a_2/a_3, a_3/a_1, a_1/a_2)`.
fn torus_to_twisted(x: &Diag) -> Diag {
    [&x[0] * &x[2], x[0].clone(), QZeta::rational(Q::one())]
}

fn twisted_to_torus(a: &Diag) -> Result<Diag, CayleyError> {
    Ok([dv(&a[1], &a[2], "torus")?, dv(&a[2], &a[0], "torus")?, dv(&a[0], &a[1], "torus")?])
}

/// `φ([X]) = ([X - tr X/3], [X^{-1} - tr X^{-1}/3])`.
pub fn sl3_phi(x: &Diag) -> Result<(Diag, Diag), CayleyError> {
    let inv = [dv(&QZeta::rational(Q::one()), &x[0], "phi")?, dv(&QZeta::rational(Q::one()), &x[1], "phi")?, dv(&QZeta::rational(Q::one()), &x[2], "phi")?];
    let (y, z) = (traceless(x), traceless(&inv));
    if y.iter().all(|c| c.is_zero()) || z.iter().all(|c| c.is_zero()) {
        return Err(degenerate("phi"));
    }
    Ok((y, z))
}

/// `ψ([Y], [Z]) = [Y + α I]` where `α Z + β Y + γ I = -Y Z`.
pub fn sl3_psi(y: &Diag, z: &Diag) -> Result<Diag, CayleyError> {
    // solve the 3x3 system with columns Z, Y, 1 by Cramer's rule
    let one = QZeta::rational(Q::one());
    let rhs: Vec<QZeta> = (0..3).map(|i| -&(&y[i] * &z[i])).collect();
    let det3 = |c0: &[QZeta], c1: &[QZeta], c2: &[QZeta]| {
        let m = |i: usize, j: usize| match j {
            0 => &c0[i],
            1 => &c1[i],
            _ => &c2[i],
        };
        let t = |a: usize, b: usize, c: usize| &(m(0, a) * m(1, b)) * m(2, c);
        let pos = &(&t(0, 1, 2) + &t(1, 2, 0)) + &t(2, 0, 1);
        let neg = &(&t(2, 1, 0) + &t(0, 2, 1)) + &t(1, 0, 2);
        &pos - &neg
    };
    let ones = [one.clone(), one.clone(), one];
    let d = det3(z, y, &ones);
    let alpha = dv(&det3(&rhs, y, &ones), &d, "psi")?;
    Ok([&y[0] + &alpha, &y[1] + &alpha, &y[2] + &alpha])
}

/// Segre image `α_{ij} = y_i z_j`, ordered `(α_11, α_12, α_21, α_22)`.
pub fn segre(y: &Diag, z: &Diag) -> [QZeta; 4] {
    let (a, b) = (d_coords(y), d_coords(z));
    [&a[0] * &b[0], &a[0] * &b[1], &a[1] * &b[0], &a[1] * &b[1]]
}

pub fn on_quadric(p: &[QZeta; 4]) -> bool {
    &p[0] * &p[3] == &p[1] * &p[2]
}

/// Projection from `(0:0:1:0)`: `(α_11 : α_12 : α_22)`.
pub fn project(p: &[QZeta; 4]) -> Result<[QZeta; 3], CayleyError> {
    let out = [p[0].clone(), p[1].clone(), p[3].clone()];
    if out.iter().all(|c| c.is_zero()) {
        return Err(degenerate("projection centre"));
    }
    Ok(out)
}

/// Inverse of the projection: `(b_11 b_12 : b_12² : b_11 b_22 : b_12 b_22)`.
pub fn reembed(b: &[QZeta; 3]) -> Result<[QZeta; 4], CayleyError> {
    if b[1].is_zero() {
        return Err(degenerate("re-embedding"));
    }
    Ok([&b[0] * &b[1], &b[1] * &b[1], &b[0] * &b[2], &b[1] * &b[2]])
}

fn segre_inverse(p: &[QZeta; 4]) -> Result<(Diag, Diag), CayleyError> {
    let (ya, za) = if !p[0].is_zero() {
        ([p[0].clone(), p[2].clone()], [p[0].clone(), p[1].clone()])
    } else if !p[3].is_zero() {
        ([p[1].clone(), p[3].clone()], [p[2].clone(), p[3].clone()])
    } else {
        return Err(degenerate("segre inverse"));
    };
    let zero = QZeta::zero();
    Ok((from_d(&zero, &ya[0], &ya[1]), from_d(&zero, &za[0], &za[1])))
}

fn pgl_diag(x: &Diag) -> Result<Diag, CayleyError> {
    let t = tr(x);
    let s = dv(&zq(&q(3)), &t, "trace")?;
    let one = QZeta::rational(Q::one());
    Ok([&(&s * &x[0]) - &one, &(&s * &x[1]) - &one, &(&s * &x[2]) - &one])
}

/// Intermediate values of the composite `T ⇢ 𝔱`.
#[derive(Clone, Debug)]
pub struct Sl3Trace {
    pub twisted: Diag,
    pub pair: (Diag, Diag),
    pub quadric_point: [QZeta; 4],
    pub projected: [QZeta; 3],
    pub natural: Diag,
    pub lie: Diag,
}

/// The composite `T → P²_tw → (P(𝔱)×P(𝔱))_tw → Q → P(V_1 ⊕ V_2) ≅ P²_nat → 𝔱`.
pub fn sl3_forward(x: &Diag) -> Result<Sl3Trace, CayleyError> {
    let twisted = torus_to_twisted(x);
    let pair = sl3_phi(&twisted)?;
    let quadric_point = segre(&pair.0, &pair.1);
    let projected = project(&quadric_point)?;
    // D ≅ V_1 ⊕ V_2 by I ↦ D_12, D_1 ↦ D_22, D_2 ↦ D_11
    let natural = from_d(&projected[1], &projected[2], &projected[0]);
    let lie = pgl_diag(&natural)?;
    Ok(Sl3Trace { twisted, pair, quadric_point, projected, natural, lie })
}

/// Inverse chain `𝔱 ⇢ T`.
pub fn sl3_backward(y: &Diag) -> Result<Diag, CayleyError> {
    let one = QZeta::rational(Q::one());
    let natural = [&y[0] + &one, &y[1] + &one, &y[2] + &one];
    let c0 = &tr(&natural) * &third();
    let rest = traceless(&natural);
    let [c1, c2] = d_coords(&rest);
    let b = [c2, c0, c1];
    let p = reembed(&b)?;
    let (yy, zz) = segre_inverse(&p)?;
    let tw = sl3_psi(&yy, &zz)?;
    twisted_to_torus(&tw)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sl3Report {
    pub report: MapReport,
    /// samples on which the forward composite had rational output
    pub rational_outputs: usize,
    /// samples on which `φ ∘ ψ = id` held for an independent random pair
    pub phi_psi_identity: usize,
    pub zeta_basis_ok: bool,
}

fn diag_eq_proj(a: &Diag, b: &Diag) -> bool {
    proj_eq(a, b)
}

fn pair_eq_proj(a: &(Diag, Diag), b: &(Diag, Diag)) -> bool {
    proj_eq(&a.0, &b.0) && proj_eq(&a.1, &b.1)
}

/// Runs the four pipeline checks on one torus point.
pub fn sl3_check_point(x: &Diag) -> Result<Vec<(&'static str, bool)>, CayleyError> {
    let fwd = sl3_forward(x)?;
    let psi_phi = diag_eq_proj(&sl3_psi(&fwd.pair.0, &fwd.pair.1)?, &fwd.twisted);
    let quadric = on_quadric(&fwd.quadric_point);
    let stereo = proj_eq(&reembed(&fwd.projected)?, &fwd.quadric_point);
    let mut equi = true;
    for s in s3_elements() {
        let moved = sl3_forward(&sigma_act(&s, x))?;
        equi &= moved.lie == sigma_act(&s, &fwd.lie);
    }
    let round = sl3_backward(&fwd.lie)? == *x;
    let traceless_lie = tr(&fwd.lie).is_zero() && tr(&fwd.pair.0).is_zero() && tr(&fwd.pair.1).is_zero();
    Ok(vec![
        ("psi_phi_identity", psi_phi),
        ("quadric", quadric),
        ("stereographic_inverse", stereo),
        ("equivariance", equi),
        ("round_trip", round),
        ("traceless", traceless_lie),
    ])
}

fn s3_elements() -> Vec<SignedPerm> {
    let g = crate::fingroup::symmetric(3);
    g.elements().to_vec()
}

/// `D_1 D_2 = I` and the D-coordinates recover a traceless matrix.
pub fn zeta_basis_sanity() -> bool {
    let one = QZeta::rational(Q::one());
    let zero = QZeta::zero();
    let d1 = from_d(&zero, &one, &zero);
    let d2 = from_d(&zero, &zero, &one);
    let prod: Vec<QZeta> = (0..3).map(|i| &d1[i] * &d2[i]).collect();
    let sample = [zq(&q(2)), zq(&q(-5)), zq(&q(3))];
    let c = d_coords(&sample);
    prod.iter().all(|p| *p == one) && from_d(&zero, &c[0], &c[1]) == sample && tr(&d1).is_zero()
}

/// Seeded random points `diag(a_1, a_2, 1/(a_1 a_2))` through the full pipeline.
pub fn sl3_pipeline(trials: usize, seed: u64) -> Sl3Report {
    let mut rep = MapReport::new("SL3 torus pipeline", seed, trials);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rational_outputs = 0;
    let mut phi_psi_identity = 0;
    for _ in 0..trials {
        let mut done = false;
        for _ in 0..RESAMPLE_BUDGET {
            let a1 = rand_nonzero_q(&mut rng);
            let a2 = rand_nonzero_q(&mut rng);
            let a3 = (&a1 * &a2).recip();
            let x = [zq(&a1), zq(&a2), zq(&a3)];
            match sl3_check_point(&x) {
                Ok(results) => {
                    if sl3_forward(&x).map_or(false, |f| f.lie.iter().all(|c| c.is_rational())) {
                        rational_outputs += 1;
                    }
                    rep.record(&[a1, a2, a3], &results);
                    done = true;
                    break;
                }
                Err(CayleyError::Degenerate(_)) => rep.resampled += 1,
                Err(e) => {
                    rep.failures.push(format!("{e} on {a1}, {a2}"));
                    done = true;
                    break;
                }
            }
        }
        if !done {
            rep.failures.push("resample budget exhausted".into());
        }
        // φ ∘ ψ on an independent pair of traceless matrices
        let pair = loop {
            let y: Diag = traceless(&[zq(&rand_q(&mut rng)), zq(&rand_q(&mut rng)), zq(&rand_q(&mut rng))]);
            let z: Diag = traceless(&[zq(&rand_q(&mut rng)), zq(&rand_q(&mut rng)), zq(&rand_q(&mut rng))]);
            if let Ok(tw) = sl3_psi(&y, &z) {
                if let Ok(back) = sl3_phi(&tw) {
                    break Some(((y, z), back));
                }
            }
            rep.resampled += 1;
            if rep.resampled > RESAMPLE_BUDGET * trials.max(1) {
                break None;
            }
        };
        if let Some((orig, back)) = pair {
            if pair_eq_proj(&orig, &back) {
                phi_psi_identity += 1;
            }
        }
    }
    Sl3Report { report: rep, rational_outputs, phi_psi_identity, zeta_basis_ok: zeta_basis_sanity() }
}

/// `diag(ω, ω, ω)` with `ω = ζ`: a fixed point outside the generic locus.
pub fn sl3_fixed_point_is_degenerate() -> bool {
    let w = QZeta::zeta();
    matches!(sl3_forward(&[w.clone(), w.clone(), w]), Err(CayleyError::Degenerate(_)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cayley_identities() {
        for n in 2..5 {
            assert!(classical_cayley(&RatMat::identity(n)).unwrap().is_zero());
            assert_eq!(classical_cayley(&RatMat::zeros(n, n)).unwrap(), RatMat::identity(n));
            assert!(pgl_map(&RatMat::identity(n)).unwrap().is_zero());
            assert!(pgl_inverse(&RatMat::zeros(n, n)).proportional(&RatMat::identity(n)));
        }
        assert_eq!(classical_cayley(&(-&RatMat::identity(2))), Err(CayleyError::Singular));
        assert_eq!(pgl_map(&RatMat::from_i64(&[vec![1, 0], vec![0, -1]])), Err(CayleyError::TraceZero));
    }

    #[test]
    fn classical_verifiers() {
        assert!(verify_classical(Classical::So(4), 30, 1).ok());
        assert!(verify_classical(Classical::Sp(2), 30, 2).ok());
        assert!(verify_pgl(3, 30, 3).ok());
    }

    #[test]
    fn weil_agrees() {
        let r = verify_weil(Classical::So(2), 20, 4).unwrap();
        assert!(r.ok(), "{r:?}");
        let r = verify_weil(Classical::Sp(1), 20, 5).unwrap();
        assert!(r.ok(), "{r:?}");
        let alg = Algebra::matrix_algebra(2, false).unwrap();
        assert!(weil_map(&alg, alg.one()).unwrap().iter().all(|x| x.is_zero()));
    }

    #[test]
    fn identity_is_not_an_involution_on_mat2() {
        let alg = Algebra::matrix_algebra(2, false).unwrap();
        let bad = Algebra::new(alg.mult.clone(), alg.one.clone(), RatMat::identity(4));
        assert!(matches!(bad, Err(CayleyError::NotInvolution(_, _))));
    }

    #[test]
    fn unipotent_closed_form() {
        let y = RatMat::from_i64(&[vec![0, 1], vec![0, 0]]);
        let x = unipotent_exp(&y).unwrap();
        assert_eq!(x, RatMat::from_i64(&[vec![1, 1], vec![0, 1]]));
        assert_eq!(unipotent_log(&x).unwrap(), y);
        assert_eq!(unipotent_exp(&RatMat::zeros(3, 3)).unwrap(), RatMat::identity(3));
        assert_eq!(unipotent_exp(&RatMat::identity(2)), Err(CayleyError::NotNilpotent));
        assert!(verify_unipotent(5, 20, 6).ok());
    }

    #[test]
    fn torus_map() {
        let one = vec![Q::one(); 3];
        assert!(torus_sign_cayley(&one).unwrap().iter().all(|x| x.is_zero()));
        let t = vec![Q::new(BigInt::from(2), BigInt::from(3))];
        let inv = vec![t[0].recip()];
        assert_eq!(torus_sign_cayley(&inv).unwrap()[0], -torus_sign_cayley(&t).unwrap()[0].clone());
        assert_eq!(torus_sign_cayley(&[-Q::one()]), Err(CayleyError::Pole(0)));
        assert!(verify_torus(&crate::fingroup::weyl_d(4), 30, 7).ok());
    }

    #[test]
    fn qzeta_field() {
        let z = QZeta::zeta();
        let cube = &(&z * &z) * &z;
        assert_eq!(cube, QZeta::rational(Q::one()));
        assert_eq!(&z * &z, QZeta::zeta2());
        let x = QZeta { u: q(2), v: q(-3) };
        assert_eq!(&x * &x.inv().unwrap(), QZeta::rational(Q::one()));
    }

    #[test]
    fn sl3_pipeline_small() {
        assert!(zeta_basis_sanity());
        assert!(sl3_fixed_point_is_degenerate());
        let r = sl3_pipeline(20, 8);
        assert!(r.report.ok(), "{:?}", r.report);
    }
}
