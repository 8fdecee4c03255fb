//! Integral representations of signed-permutation groups and the root-datum catalog.
//!
//! Actions are stored on the group generators; matrices of other elements are
//! built from the enumeration words and memoized. Matrices act on coordinate
//! columns, so `action(gh) = action(g) * action(h)`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactla::{self, IntMat};
use crate::fingroup::{self, FinGroup, GroupError, SignedPerm, Subgroup};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LatticeError {
    #[error("bad catalog parameters: {0}")]
    BadParams(String),
    #[error("the lattice is not invariant under {0}")]
    NotInvariant(String),
    #[error("lattices live over different groups")]
    GroupMismatch,
    #[error("lattice has no ambient embedding")]
    NoEmbedding,
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Lattice basis inside `Q^degree`: the true vectors are the columns of `basis / denom`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Embedding {
    pub basis: IntMat,
    pub denom: BigInt,
}

impl Embedding {
    /// Basis rescaled to denominator `d`, which must be a multiple of `self.denom`.
    pub fn scaled_to(&self, d: &BigInt) -> IntMat {
        let (q, r) = d.div_rem(&self.denom);
        assert!(r.is_zero(), "denominator does not divide target");
        self.basis.scale(&q)
    }

    pub fn common_denom(a: &Embedding, b: &Embedding) -> BigInt {
        a.denom.lcm(&b.denom)
    }

    /// Actual coordinates of a basis vector as rationals.
    pub fn vector(&self, j: usize) -> Vec<BigRational> {
        (0..self.basis.nrows())
            .map(|i| BigRational::new(self.basis.get(i, j), self.denom.clone()))
            .collect()
    }
}

pub struct GLattice {
    name: String,
    group: Arc<FinGroup>,
    rank: usize,
    gen_action: Vec<IntMat>,
    embedding: Option<Embedding>,
    element_action: OnceLock<Vec<IntMat>>,
}

impl Clone for GLattice {
    fn clone(&self) -> Self {
        GLattice {
            name: self.name.clone(),
            group: self.group.clone(),
            rank: self.rank,
            gen_action: self.gen_action.clone(),
            embedding: self.embedding.clone(),
            element_action: OnceLock::new(),
        }
    }
}

impl fmt::Debug for GLattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GLattice({}, rank {}, over {})", self.name, self.rank, self.group.label())
    }
}

fn perm_matrix(p: &SignedPerm) -> IntMat {
    let n = p.degree();
    let mut m = IntMat::zeros(n, n);
    for i in 0..n {
        m.set_i64(p.image(i), i, p.sign(i) as i64);
    }
    m
}

impl GLattice {
    /// Lattice with explicit generator matrices; checks nothing beyond shapes.
    pub fn from_generator_matrices(name: impl Into<String>, group: Arc<FinGroup>, rank: usize, gen_action: Vec<IntMat>) -> Self {
        assert_eq!(gen_action.len(), group.generators().len(), "one matrix per generator");
        for m in &gen_action {
            assert_eq!((m.nrows(), m.ncols()), (rank, rank), "action shape");
        }
        GLattice { name: name.into(), group, rank, gen_action, embedding: None, element_action: OnceLock::new() }
    }

    /// Lattice spanned by the columns of `basis / denom`, acted on through the ambient signed permutations.
    pub fn from_embedding(name: impl Into<String>, group: Arc<FinGroup>, basis: IntMat, denom: BigInt) -> Result<Self, LatticeError> {
        let emb = Embedding { basis, denom };
        let rank = emb.basis.ncols();
        let ech = exactla::Echelon::new(&emb.basis);
        if ech.rank() != rank {
            return Err(LatticeError::BadParams("basis vectors are dependent".into()));
        }
        let mut gen_action = vec![];
        for g in group.generators() {
            let gb = perm_matrix(g).mul(&emb.basis);
            let a = ech.solve(&gb).ok_or_else(|| LatticeError::NotInvariant(g.to_string()))?;
            gen_action.push(a);
        }
        Ok(GLattice { name: name.into(), group, rank, gen_action, embedding: Some(emb), element_action: OnceLock::new() })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn group(&self) -> &Arc<FinGroup> {
        &self.group
    }

    pub fn embedding(&self) -> Option<&Embedding> {
        self.embedding.as_ref()
    }

    pub fn generator_actions(&self) -> &[IntMat] {
        &self.gen_action
    }

    /// Matrix of the group element with enumeration index `i`.
    pub fn action(&self, i: usize) -> &IntMat {
        let all = self.element_action.get_or_init(|| {
            let g = &self.group;
            let n = g.order();
            let mut out: Vec<IntMat> = Vec::with_capacity(n);
            out.push(IntMat::identity(self.rank));
            for k in 1..n {
                let (gen, parent) = g.word(k);
                let m = self.gen_action[gen].mul(&out[parent]);
                out.push(m);
            }
            out
        });
        &all[i]
    }

    /// Matrix of an arbitrary signed permutation preserving the embedded lattice.
    pub fn action_of_perm(&self, p: &SignedPerm) -> Result<IntMat, LatticeError> {
        let emb = self.embedding.as_ref().ok_or(LatticeError::NoEmbedding)?;
        let gb = perm_matrix(p).mul(&emb.basis);
        exactla::solve_integer(&emb.basis, &gb).ok_or_else(|| LatticeError::NotInvariant(p.to_string()))
    }

    /// Checks that the generator matrices define a homomorphism, by checking
    /// that the word-built matrices agree with every product in the table.
    pub fn verify_action(&self) -> bool {
        self.try_verify_action().expect("group enumeration exceeded its bound")
    }

    /// As `verify_action`, refusing groups beyond the closure bound.
    pub fn try_verify_action(&self) -> Result<bool, GroupError> {
        let g = &self.group;
        let n = g.try_order()?;
        for a in 0..n {
            for &k in &g.generator_indices() {
                let lhs = self.action(g.mul(k, a));
                let rhs = self.action(k).mul(self.action(a));
                if *lhs != rhs {
                    return Ok(false);
                }
            }
        }
        // relations hold iff the identity of the group acts trivially along every cycle
        Ok(self.action(0).is_identity())
    }

    /// Restriction to a subgroup, as a lattice over that subgroup regarded as a group.
    pub fn restrict(&self, s: &Subgroup) -> GLattice {
        assert!(Arc::ptr_eq(s.parent(), &self.group), "subgroup of a different group");
        let h = s.as_group(&format!("{}|sub{}", self.group.label(), s.order()));
        let gen_action = s.generators().iter().map(|&i| self.action(i).clone()).collect();
        GLattice {
            name: self.name.clone(),
            group: h,
            rank: self.rank,
            gen_action,
            embedding: self.embedding.clone(),
            element_action: OnceLock::new(),
        }
    }

    /// Restriction to the group generated by the given signed permutations, via the embedding.
    pub fn restrict_to_perms(&self, perms: &[SignedPerm], label: &str) -> Result<GLattice, LatticeError> {
        self.restrict_to(&FinGroup::lazy(self.group.degree(), perms.to_vec(), label))
    }

    /// Restriction to a group of signed permutations of the same degree.
    pub fn restrict_to(&self, h: &Arc<FinGroup>) -> Result<GLattice, LatticeError> {
        let h = h.clone();
        let gen_action = match &self.embedding {
            Some(_) => h.generators().iter().map(|p| self.action_of_perm(p)).collect::<Result<Vec<_>, _>>()?,
            None => h
                .generators()
                .iter()
                .map(|p| self.group.index_of(p).map(|i| self.action(i).clone()).ok_or(LatticeError::Group(GroupError::NotInGroup)))
                .collect::<Result<Vec<_>, _>>()?,
        };
        Ok(GLattice {
            name: self.name.clone(),
            group: h,
            rank: self.rank,
            gen_action,
            embedding: self.embedding.clone(),
            element_action: OnceLock::new(),
        })
    }

    /// Same lattice, transported to an isomorphic copy of the group given by matching generators.
    pub fn over_group(&self, group: Arc<FinGroup>) -> GLattice {
        assert_eq!(group.generators().len(), self.gen_action.len());
        GLattice {
            name: self.name.clone(),
            group,
            rank: self.rank,
            gen_action: self.gen_action.clone(),
            embedding: self.embedding.clone(),
            element_action: OnceLock::new(),
        }
    }

    /// Invariant sublattice spanned by the columns of `basis` (independent columns).
    pub fn sublattice(&self, name: &str, basis: &IntMat) -> Result<GLattice, LatticeError> {
        let ech = exactla::Echelon::new(basis);
        let k = basis.ncols();
        let mut gen_action = vec![];
        for (a, g) in self.gen_action.iter().zip(self.group.generators()) {
            let m = ech.solve(&a.mul(basis)).ok_or_else(|| LatticeError::NotInvariant(g.to_string()))?;
            gen_action.push(m);
        }
        let embedding = self.embedding.as_ref().map(|e| Embedding { basis: e.basis.mul(basis), denom: e.denom.clone() });
        Ok(GLattice { name: name.into(), group: self.group.clone(), rank: k, gen_action, embedding, element_action: OnceLock::new() })
    }

    /// Change of basis: the new basis vectors are the columns of the unimodular `p`.
    pub fn change_basis(&self, p: &IntMat) -> GLattice {
        let pinv = exactla::unimodular_inverse(p).expect("change of basis must be unimodular");
        let gen_action = self.gen_action.iter().map(|a| pinv.mul(a).mul(p)).collect();
        let embedding = self.embedding.as_ref().map(|e| Embedding { basis: e.basis.mul(p), denom: e.denom.clone() });
        GLattice {
            name: self.name.clone(),
            group: self.group.clone(),
            rank: self.rank,
            gen_action,
            embedding,
            element_action: OnceLock::new(),
        }
    }

    /// Whether this lattice and `o` span the same subgroup of the common ambient space.
    pub fn same_embedded_lattice(&self, o: &GLattice) -> Result<bool, LatticeError> {
        let (a, b) = match (&self.embedding, &o.embedding) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(LatticeError::NoEmbedding),
        };
        let d = Embedding::common_denom(a, b);
        Ok(exactla::same_span(&a.scaled_to(&d), &b.scaled_to(&d)))
    }

    /// Index of `sub` in `self` inside the common ambient space.
    pub fn embedded_index(&self, sub: &GLattice) -> Result<BigInt, LatticeError> {
        let (a, b) = match (&self.embedding, &sub.embedding) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(LatticeError::NoEmbedding),
        };
        let d = Embedding::common_denom(a, b);
        exactla::lattice_index(&a.scaled_to(&d), &b.scaled_to(&d))
            .ok_or_else(|| LatticeError::BadParams("not a sublattice".into()))
    }

    /// Matrix of the inclusion `sub ⊆ self` in the two bases.
    pub fn inclusion_matrix(&self, sub: &GLattice) -> Result<IntMat, LatticeError> {
        let (a, b) = match (&self.embedding, &sub.embedding) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(LatticeError::NoEmbedding),
        };
        let d = Embedding::common_denom(a, b);
        exactla::solve_integer(&a.scaled_to(&d), &b.scaled_to(&d)).ok_or_else(|| LatticeError::BadParams("not a sublattice".into()))
    }

    /// Stable identity used for caching.
    pub fn canonical_key(&self) -> String {
        let gens: Vec<String> = self.group.generators().iter().map(|g| format!("{:?}", g.0)).collect();
        let acts: Vec<String> = self.gen_action.iter().map(|m| format!("{m:?}")).collect();
        format!("{}|deg{}|{}|{}", self.name, self.group.degree(), gens.join(";"), acts.join(";"))
    }
}

/// An equivariant homomorphism given by a matrix `dst.rank x src.rank`.
#[derive(Clone, Debug)]
pub struct LatticeHom {
    pub matrix: IntMat,
}

impl LatticeHom {
    pub fn is_equivariant(&self, src: &GLattice, dst: &GLattice) -> bool {
        src.gen_action
            .iter()
            .zip(&dst.gen_action)
            .all(|(a, b)| self.matrix.mul(a) == b.mul(&self.matrix))
    }
}

/// The permutation lattice `Z[G/H]` on left cosets, ordered by least representative.
pub fn permutation_lattice(g: &Arc<FinGroup>, h: &Subgroup) -> GLattice {
    let n = g.order();
    let mut coset_of = vec![usize::MAX; n];
    let mut ncos = 0;
    for x in 0..n {
        if coset_of[x] != usize::MAX {
            continue;
        }
        for &m in h.members() {
            coset_of[g.mul(x, m)] = ncos;
        }
        ncos += 1;
    }
    let mut reps = vec![usize::MAX; ncos];
    for x in 0..n {
        if reps[coset_of[x]] == usize::MAX {
            reps[coset_of[x]] = x;
        }
    }
    let gen_action = g
        .generator_indices()
        .iter()
        .map(|&s| {
            let mut m = IntMat::zeros(ncos, ncos);
            for (j, &r) in reps.iter().enumerate() {
                m.set_i64(coset_of[g.mul(s, r)], j, 1);
            }
            m
        })
        .collect();
    GLattice::from_generator_matrices(format!("Z[G/H{}]", h.order()), g.clone(), ncos, gen_action)
}

/// Cosets of a permutation lattice: returns, for each basis vector, its least representative.
pub fn coset_representatives(g: &Arc<FinGroup>, h: &Subgroup) -> Vec<usize> {
    let n = g.order();
    let mut seen = vec![false; n];
    let mut reps = vec![];
    for x in 0..n {
        if seen[x] {
            continue;
        }
        for &m in h.members() {
            seen[g.mul(x, m)] = true;
        }
        reps.push(x);
    }
    reps
}

pub fn trivial_lattice(g: &Arc<FinGroup>) -> GLattice {
    let gen_action = g.generators().iter().map(|_| IntMat::identity(1)).collect();
    GLattice::from_generator_matrices("Z", g.clone(), 1, gen_action)
}

pub fn dual(l: &GLattice) -> GLattice {
    let gen_action: Vec<IntMat> = l
        .gen_action
        .iter()
        .map(|a| exactla::unimodular_inverse(a).expect("action matrices are unimodular").transpose())
        .collect();
    let embedding = l.embedding.as_ref().map(dual_embedding);
    GLattice {
        name: format!("{}*", l.name),
        group: l.group.clone(),
        rank: l.rank,
        gen_action,
        embedding,
        element_action: OnceLock::new(),
    }
}

/// Dual basis inside the real span, for the standard inner product.
fn dual_embedding(e: &Embedding) -> Embedding {
    // actual basis B/d; dual basis = (B/d) ((B/d)^T (B/d))^{-1} = d B (B^T B)^{-1}
    let b = &e.basis;
    let gram = b.transpose().mul(b);
    let inv = rational_inverse(&gram);
    let r = b.ncols();
    let n = b.nrows();
    let mut cols: Vec<Vec<BigRational>> = vec![vec![BigRational::zero(); n]; r];
    for j in 0..r {
        for i in 0..n {
            let mut acc = BigRational::zero();
            for k in 0..r {
                let bik = b.get(i, k);
                if !bik.is_zero() {
                    acc += BigRational::from_integer(bik) * &inv[k][j];
                }
            }
            cols[j][i] = acc * BigRational::from_integer(e.denom.clone());
        }
    }
    let mut den = BigInt::one();
    for c in &cols {
        for x in c {
            den = den.lcm(x.denom());
        }
    }
    let mut basis = IntMat::zeros(n, r);
    for j in 0..r {
        for i in 0..n {
            let v = &cols[j][i] * BigRational::from_integer(den.clone());
            basis.set(i, j, v.to_integer());
        }
    }
    Embedding { basis, denom: den }
}

pub fn rational_inverse(m: &IntMat) -> Vec<Vec<BigRational>> {
    let n = m.nrows();
    let mut a: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            let mut row: Vec<BigRational> = (0..n).map(|j| BigRational::from_integer(m.get(i, j))).collect();
            row.extend((0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&i| !a[i][c].is_zero()).expect("singular matrix");
        a.swap(p, c);
        let piv = a[c][c].clone();
        for x in a[c].iter_mut() {
            *x = &*x / &piv;
        }
        for i in 0..n {
            if i != c && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..2 * n {
                    let t = &f * &a[c][j];
                    a[i][j] -= t;
                }
            }
        }
    }
    a.into_iter().map(|row| row[n..].to_vec()).collect()
}

pub fn direct_sum(a: &GLattice, b: &GLattice) -> Result<GLattice, LatticeError> {
    if !Arc::ptr_eq(&a.group, &b.group) {
        return Err(LatticeError::GroupMismatch);
    }
    let gen_action = a.gen_action.iter().zip(&b.gen_action).map(|(x, y)| IntMat::block_diag(&[x, y])).collect();
    Ok(GLattice::from_generator_matrices(format!("{}+{}", a.name, b.name), a.group.clone(), a.rank + b.rank, gen_action))
}

pub fn direct_sum_all(parts: &[&GLattice]) -> Result<GLattice, LatticeError> {
    let mut acc = parts[0].clone();
    for p in &parts[1..] {
        acc = direct_sum(&acc, p)?;
    }
    Ok(acc)
}

pub fn tensor(a: &GLattice, b: &GLattice) -> Result<GLattice, LatticeError> {
    if !Arc::ptr_eq(&a.group, &b.group) {
        return Err(LatticeError::GroupMismatch);
    }
    let gen_action = a.gen_action.iter().zip(&b.gen_action).map(|(x, y)| x.kron(y)).collect();
    Ok(GLattice::from_generator_matrices(format!("{}(x){}", a.name, b.name), a.group.clone(), a.rank * b.rank, gen_action))
}

/// Basis (columns) of the fixed sublattice `L^S`.
pub fn fixed_sublattice(l: &GLattice, s: &Subgroup) -> IntMat {
    let r = l.rank();
    let id = IntMat::identity(r);
    let blocks: Vec<IntMat> = s.generators().iter().map(|&g| l.action(g).sub(&id)).collect();
    if blocks.is_empty() {
        return id;
    }
    let refs: Vec<&IntMat> = blocks.iter().collect();
    exactla::kernel_basis(&IntMat::vstack(&refs))
}

/// Fixed sublattice of the whole group, using only generator matrices.
pub fn fixed_by_group(l: &GLattice) -> IntMat {
    let r = l.rank();
    let id = IntMat::identity(r);
    if l.gen_action.is_empty() {
        return id;
    }
    let blocks: Vec<IntMat> = l.gen_action.iter().map(|a| a.sub(&id)).collect();
    let refs: Vec<&IntMat> = blocks.iter().collect();
    exactla::kernel_basis(&IntMat::vstack(&refs))
}

// ---------------------------------------------------------------------------
// catalog

fn a_basis_alpha(n: usize, scale: i64) -> Vec<Vec<i64>> {
    (0..n - 1)
        .map(|i| {
            let mut v = vec![0; n];
            v[i] = scale;
            v[i + 1] = -scale;
            v
        })
        .collect()
}

/// `n * ϖ_t` in ε-coordinates.
fn a_weight_scaled(n: usize, t: usize) -> Vec<i64> {
    (0..n).map(|j| if j < t { n as i64 - t as i64 } else { -(t as i64) }).collect()
}

fn check_n(n: usize, min: usize) -> Result<(), LatticeError> {
    if n < min {
        return Err(LatticeError::BadParams(format!("rank parameter {n} below {min}")));
    }
    Ok(())
}

/// Root lattice of type A: sum-zero vectors in `Z^n`.
pub fn za(n: usize) -> Result<GLattice, LatticeError> {
    check_n(n, 2)?;
    let cols = a_basis_alpha(n, n as i64);
    GLattice::from_embedding(format!("ZA({n})"), fingroup::symmetric(n), IntMat::from_cols(&cols, n), BigInt::from(n))
}

/// Weight lattice of type A, basis the fundamental weights.
pub fn lambda(n: usize) -> Result<GLattice, LatticeError> {
    check_n(n, 2)?;
    let cols: Vec<Vec<i64>> = (1..n).map(|t| a_weight_scaled(n, t)).collect();
    GLattice::from_embedding(format!("Lambda({n})"), fingroup::symmetric(n), IntMat::from_cols(&cols, n), BigInt::from(n))
}

/// `ZA + Z d ϖ_1`, basis `d ϖ_1, α_1 .. α_{n-2}`; the degenerate cases return the twins.
pub fn q(n: usize, d: usize) -> Result<GLattice, LatticeError> {
    check_n(n, 2)?;
    if d == 0 || n % d != 0 {
        return Err(LatticeError::BadParams(format!("{d} does not divide {n}")));
    }
    if d == n {
        return za(n);
    }
    if d == 1 {
        return lambda(n);
    }
    let mut cols = vec![a_weight_scaled(n, 1).iter().map(|x| x * d as i64).collect::<Vec<_>>()];
    cols.extend(a_basis_alpha(n, n as i64).into_iter().take(n - 2));
    GLattice::from_embedding(format!("Q({n},{d})"), fingroup::symmetric(n), IntMat::from_cols(&cols, n), BigInt::from(n))
}

/// Simple roots of type D, doubled.
fn d_roots2(n: usize) -> Vec<Vec<i64>> {
    let mut cols: Vec<Vec<i64>> = (0..n - 1)
        .map(|i| {
            let mut v = vec![0; n];
            v[i] = 2;
            v[i + 1] = -2;
            v
        })
        .collect();
    let mut last = vec![0; n];
    last[n - 2] = 2;
    last[n - 1] = 2;
    cols.push(last);
    cols
}

/// Fundamental weights of type D, doubled.
fn d_weights2(n: usize) -> Vec<Vec<i64>> {
    let mut cols: Vec<Vec<i64>> = (1..=n - 2).map(|i| (0..n).map(|j| if j < i { 2 } else { 0 }).collect()).collect();
    cols.push((0..n).map(|j| if j < n - 1 { 1 } else { -1 }).collect());
    cols.push(vec![1; n]);
    cols
}

pub fn zd(n: usize) -> Result<GLattice, LatticeError> {
    check_n(n, 3)?;
    GLattice::from_embedding(format!("ZD({n})"), fingroup::weyl_d(n), IntMat::from_cols(&d_roots2(n), n), BigInt::from(2))
}

pub fn lambda_d(n: usize) -> Result<GLattice, LatticeError> {
    check_n(n, 3)?;
    GLattice::from_embedding(format!("LambdaD({n})"), fingroup::weyl_d(n), IntMat::from_cols(&d_weights2(n), n), BigInt::from(2))
}

/// `ZD_n + Z ϖ_1 = Z^n` with the ε-basis.
pub fn x_lattice(n: usize) -> Result<GLattice, LatticeError> {
    check_n(n, 3)?;
    let cols: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 2 } else { 0 }).collect()).collect();
    GLattice::from_embedding(format!("X({n})"), fingroup::weyl_d(n), IntMat::from_cols(&cols, n), BigInt::from(2))
}

pub fn x2m(m: usize) -> Result<GLattice, LatticeError> {
    check_n(m, 2)?;
    Ok(x_lattice(2 * m)?.with_name(format!("X2m({m})")))
}

/// Doubled generators `α_1..α_n, ϖ_k` of `ZD_n + Z ϖ_k`.
pub fn d_intermediate_generators(n: usize, k: usize) -> IntMat {
    let mut cols = d_roots2(n);
    cols.push(d_weights2(n)[k - 1].clone());
    IntMat::from_cols(&cols, n)
}

/// Doubled basis `α_1..α_{2m-2}, γ, ε_{2m-2}+ε_{2m-1}`.
pub fn gamma_basis2(m: usize) -> IntMat {
    let n = 2 * m;
    let mut cols: Vec<Vec<i64>> = d_roots2(n).into_iter().take(n - 2).collect();
    cols.push((0..n).map(|j| if j < m { 1 } else { -1 }).collect());
    let mut v = vec![0; n];
    v[n - 3] = 2;
    v[n - 2] = 2;
    cols.push(v);
    IntMat::from_cols(&cols, n)
}

fn flip_last(b: &IntMat) -> IntMat {
    let mut out = b.clone();
    let last = b.nrows() - 1;
    for j in 0..b.ncols() {
        out.set(last, j, -b.get(last, j));
    }
    out
}

/// Basis of `ZD_{2m} + Z ϖ_k` with `k = 2m-1` (`odd_spin = true`) or `k = 2m`.
fn half_spin_basis(m: usize, odd_spin: bool) -> IntMat {
    let n = 2 * m;
    let k = if odd_spin { n - 1 } else { n };
    let gens = d_intermediate_generators(n, k);
    // the γ basis spans the ϖ_{2m-1} lattice for odd m and the ϖ_{2m} lattice for even m
    let natural_odd = m % 2 == 1;
    let cand = if natural_odd == odd_spin { gamma_basis2(m) } else { flip_last(&gamma_basis2(m)) };
    if exactla::same_span(&cand, &gens) {
        cand
    } else {
        exactla::column_span_basis(&gens)
    }
}

pub fn y2m(m: usize) -> Result<GLattice, LatticeError> {
    check_n(m, 2)?;
    let n = 2 * m;
    GLattice::from_embedding(format!("Y2m({m})"), fingroup::weyl_d(n), half_spin_basis(m, true), BigInt::from(2))
}

pub fn z2m(m: usize) -> Result<GLattice, LatticeError> {
    check_n(m, 2)?;
    let n = 2 * m;
    GLattice::from_embedding(format!("Z2m({m})"), fingroup::weyl_d(n), half_spin_basis(m, false), BigInt::from(2))
}

/// Character lattice of type G2: the A2 root lattice with an extra `-1`.
pub fn g2() -> GLattice {
    let cols = a_basis_alpha(3, 1);
    GLattice::from_embedding("G2", fingroup::sym3_times_sign(), IntMat::from_cols(&cols, 3), BigInt::one())
        .expect("G2 lattice is invariant")
}

/// Parses descriptors such as `Q:8:4`, `ZA:6`, `Y2m:3`, `G2`.
pub fn catalog_from_descriptor(s: &str) -> Result<GLattice, LatticeError> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |i: usize| -> Result<usize, LatticeError> {
        parts
            .get(i)
            .ok_or_else(|| LatticeError::BadParams(format!("{s}: missing parameter")))?
            .trim()
            .parse::<usize>()
            .map_err(|_| LatticeError::BadParams(format!("{s}: bad integer")))
    };
    let arity = |k: usize| -> Result<(), LatticeError> {
        if parts.len() != k + 1 {
            return Err(LatticeError::BadParams(format!("{s}: expected {k} parameter(s)")));
        }
        Ok(())
    };
    match parts[0] {
        "ZA" => {
            arity(1)?;
            za(num(1)?)
        }
        "Lambda" => {
            arity(1)?;
            lambda(num(1)?)
        }
        "Q" => {
            arity(2)?;
            q(num(1)?, num(2)?)
        }
        "ZD" => {
            arity(1)?;
            zd(num(1)?)
        }
        "LambdaD" => {
            arity(1)?;
            lambda_d(num(1)?)
        }
        "X2m" => {
            arity(1)?;
            x2m(num(1)?)
        }
        "Y2m" => {
            arity(1)?;
            y2m(num(1)?)
        }
        "Z2m" => {
            arity(1)?;
            z2m(num(1)?)
        }
        "G2" => {
            arity(0)?;
            Ok(g2())
        }
        other => Err(LatticeError::BadParams(format!("unknown lattice family {other}"))),
    }
}

/// Builds a lattice from the JSON lattice-spec format.
pub fn lattice_from_json(v: &serde_json::Value) -> Result<GLattice, LatticeError> {
    let bad = |m: &str| LatticeError::BadParams(m.to_string());
    if let Some(c) = v.get("catalog") {
        let name = c.get("name").and_then(|x| x.as_str()).ok_or_else(|| bad("catalog entry without name"))?;
        let num = |k: &str| c.get(k).and_then(|x| x.as_u64()).map(|x| x.to_string());
        let mut desc = name.to_string();
        for k in ["n", "m", "d"] {
            if let Some(x) = num(k) {
                desc.push(':');
                desc.push_str(&x);
            }
        }
        return catalog_from_descriptor(&desc);
    }
    let c = v.get("custom").ok_or_else(|| bad("expected catalog or custom"))?;
    let group = fingroup::group_from_json(c.get("group").ok_or_else(|| bad("custom lattice without group"))?)?;
    let rank = c.get("rank").and_then(|x| x.as_u64()).ok_or_else(|| bad("custom lattice without rank"))? as usize;
    let mats = c.get("generatorMatrices").and_then(|x| x.as_array()).ok_or_else(|| bad("missing generatorMatrices"))?;
    if mats.len() != group.generators().len() {
        return Err(bad("one matrix per group generator is required"));
    }
    let mut gen_action = vec![];
    for m in mats {
        let rows: Vec<Vec<i64>> = m
            .as_array()
            .ok_or_else(|| bad("matrix must be an array of rows"))?
            .iter()
            .map(|r| r.as_array().map(|r| r.iter().filter_map(|x| x.as_i64()).collect()).ok_or_else(|| bad("bad matrix row")))
            .collect::<Result<_, _>>()?;
        if rows.len() != rank || rows.iter().any(|r| r.len() != rank) {
            return Err(bad("matrix shape does not match rank"));
        }
        let mm = IntMat::from_rows(&rows);
        if exactla::unimodular_inverse(&mm).is_none() {
            return Err(bad("generator matrix is not unimodular"));
        }
        gen_action.push(mm);
    }
    let name = c.get("name").and_then(|x| x.as_str()).unwrap_or("custom");
    let l = GLattice::from_generator_matrices(name, group, rank, gen_action);
    if !l.try_verify_action()? {
        return Err(bad("generator matrices do not define an action"));
    }
    Ok(l)
}

/// Names and parameters of the catalog, for listings.
pub fn catalog_listing() -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([
        ("ZA", "ZA:n  root lattice of type A_{n-1}, Sym_n"),
        ("Lambda", "Lambda:n  weight lattice of type A_{n-1}, Sym_n"),
        ("Q", "Q:n:d  ZA + Z d w_1 for d | n, Sym_n"),
        ("ZD", "ZD:n  root lattice of type D_n, W(D_n)"),
        ("LambdaD", "LambdaD:n  weight lattice of type D_n, W(D_n)"),
        ("X2m", "X2m:m  ZD_2m + Z w_1, W(D_2m)"),
        ("Y2m", "Y2m:m  ZD_2m + Z w_{2m-1}, W(D_2m)"),
        ("Z2m", "Z2m:m  ZD_2m + Z w_2m, W(D_2m)"),
        ("G2", "G2  character lattice of G2, Sym3 x Sym2"),
    ])
}

/// Verifies that `cand` (columns, in the embedding scale of `l`) is a basis of `l`
/// permuted up to sign by every generator of `group_perms`.
pub fn verify_sign_permutation_basis(l: &GLattice, cand: &IntMat, cand_denom: &BigInt, perms: &[SignedPerm]) -> Result<bool, LatticeError> {
    let emb = l.embedding().ok_or(LatticeError::NoEmbedding)?;
    let d = emb.denom.lcm(cand_denom);
    let lb = emb.scaled_to(&d);
    let cb = Embedding { basis: cand.clone(), denom: cand_denom.clone() }.scaled_to(&d);
    if cb.ncols() != l.rank() || !exactla::same_span(&lb, &cb) {
        return Ok(false);
    }
    for p in perms {
        let img = perm_matrix(p).mul(&cb);
        for j in 0..cb.ncols() {
            let col = img.col(j);
            let hit = (0..cb.ncols()).any(|k| {
                let c = cb.col(k);
                col == c || col == c.neg()
            });
            if !hit {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_ranks() {
        assert_eq!(za(5).unwrap().rank(), 4);
        assert_eq!(lambda(5).unwrap().rank(), 4);
        assert_eq!(q(6, 2).unwrap().rank(), 5);
        assert_eq!(zd(4).unwrap().rank(), 4);
        assert_eq!(g2().rank(), 2);
    }

    #[test]
    fn degenerate_q_parameters() {
        assert!(q(6, 6).unwrap().same_embedded_lattice(&za(6).unwrap()).unwrap());
        assert!(q(6, 1).unwrap().same_embedded_lattice(&lambda(6).unwrap()).unwrap());
        assert!(q(6, 4).is_err());
    }

    #[test]
    fn actions_are_homomorphisms() {
        for l in [za(4).unwrap(), lambda(4).unwrap(), q(4, 2).unwrap(), g2(), zd(4).unwrap()] {
            assert!(l.verify_action(), "{}", l.name());
        }
    }

    #[test]
    fn dual_embedding_of_q() {
        // Q(n,d)* = Q(n,n/d)
        for (n, d) in [(4, 2), (6, 2), (6, 3), (8, 2), (8, 4)] {
            let a = dual(&q(n, d).unwrap());
            assert!(a.same_embedded_lattice(&q(n, n / d).unwrap()).unwrap(), "Q({n},{d})");
        }
        assert!(dual(&za(5).unwrap()).same_embedded_lattice(&lambda(5).unwrap()).unwrap());
    }

    #[test]
    fn permutation_lattice_ranks() {
        let g = fingroup::symmetric(4);
        let h = g.subgroup_generated(&[g.index_of(&SignedPerm::cycle(4, &[1, 2])).unwrap()]);
        let p = permutation_lattice(&g, &h);
        assert_eq!(p.rank(), 12);
        assert!(p.verify_action());
    }

    #[test]
    fn g2_sign_factor_acts_by_minus_one() {
        let l = g2();
        let flip = SignedPerm::sign_flip(3, &[1, 2, 3]);
        assert_eq!(l.action_of_perm(&flip).unwrap(), IntMat::identity(2).neg());
    }

    #[test]
    fn descriptors() {
        assert_eq!(catalog_from_descriptor("Q:8:4").unwrap().rank(), 7);
        assert_eq!(catalog_from_descriptor("Y2m:3").unwrap().rank(), 6);
        assert!(catalog_from_descriptor("Q:8").is_err());
        assert!(catalog_from_descriptor("W:3").is_err());
    }
}
