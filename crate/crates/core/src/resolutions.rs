//! Flasque and coflasque resolutions, flasqueness tests, the fixed-point
//! diagram for a cyclic extension, and mod-p permutation-module tests.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cohomology::{self, CohomError, Guard};
use crate::exactla::{self, AbelianInvariants, IntMat};
use crate::fingroup::{self, FinGroup, GroupError, SignedPerm, Subgroup};
use crate::glattice::{self, GLattice, LatticeError, LatticeHom};

pub const DEFAULT_SUBGROUP_GUARD: usize = 256;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ResolutionError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Cohom(#[from] CohomError),
    #[error("fixed-point hypothesis fails for subgroup {0}")]
    HypothesisFailed(String),
    #[error("bad inclusion: {0}")]
    BadInclusion(String),
    #[error("group of order {0} is not a {1}-group")]
    NotPGroup(usize, u64),
    #[error("acting group is not cyclic of order {0}")]
    NotCyclicOrderP(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResolutionKind {
    Coflasque,
    Flasque,
}

/// One summand `Z[G/H]` of a permutation lattice, with the vector its base coset maps to.
#[derive(Clone, Debug)]
pub struct PermSummand {
    pub stabilizer: Subgroup,
    pub image: IntMat,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct SummandInfo {
    pub stabilizer_order: usize,
    pub index: usize,
}

pub struct Resolution {
    pub kind: ResolutionKind,
    pub left: GLattice,
    pub middle: GLattice,
    pub right: GLattice,
    pub left_map: LatticeHom,
    pub right_map: LatticeHom,
    pub witness: Vec<SummandInfo>,
}

impl Resolution {
    /// Checks that the maps are equivariant, compose to zero, and that the sequence is exact.
    pub fn is_exact(&self) -> bool {
        let (f, g) = (&self.left_map.matrix, &self.right_map.matrix);
        if !self.left_map.is_equivariant(&self.left, &self.middle) || !self.right_map.is_equivariant(&self.middle, &self.right) {
            return false;
        }
        if !g.mul(f).is_zero() {
            return false;
        }
        // injective with saturated image equal to the kernel, and surjective
        let k = exactla::kernel_basis(g);
        exactla::rank(f) == f.ncols() && exactla::same_span(&k, f) && exactla::cokernel_invariants(g).is_trivial()
    }
}

/// Running construction of a permutation lattice mapping onto `l`.
struct PermCover<'a> {
    l: &'a GLattice,
    summands: Vec<(PermSummand, Vec<usize>, Vec<usize>)>,
}

fn coset_table(g: &Arc<FinGroup>, h: &Subgroup) -> (Vec<usize>, Vec<usize>) {
    let n = g.order();
    let mut coset_of = vec![usize::MAX; n];
    let mut reps = vec![];
    for x in 0..n {
        if coset_of[x] != usize::MAX {
            continue;
        }
        for &m in h.members() {
            coset_of[g.mul(x, m)] = reps.len();
        }
        reps.push(x);
    }
    (reps, coset_of)
}

/// Stabilizer of a vector under the lattice action.
pub fn stabilizer(l: &GLattice, x: &IntMat) -> Subgroup {
    let g = l.group();
    let members: Vec<usize> = (0..g.order()).filter(|&i| l.action(i).mul(x) == *x).collect();
    let gens = small_generating_set(g, &members);
    Subgroup::new(g.clone(), members, gens)
}

fn small_generating_set(g: &Arc<FinGroup>, members: &[usize]) -> Vec<usize> {
    let mut gens: Vec<usize> = vec![];
    let mut cur = g.trivial_subgroup();
    for &m in members {
        if !cur.contains(m) {
            gens.push(m);
            cur = g.subgroup_generated(&gens);
            if cur.order() == members.len() {
                break;
            }
        }
    }
    gens
}

impl<'a> PermCover<'a> {
    fn new(l: &'a GLattice) -> Self {
        PermCover { l, summands: vec![] }
    }

    fn push(&mut self, stab: Subgroup, image: IntMat) {
        let (reps, coset_of) = coset_table(self.l.group(), &stab);
        self.summands.push((PermSummand { stabilizer: stab, image }, reps, coset_of));
    }

    fn image_matrix(&self) -> IntMat {
        let mut cols: Vec<IntMat> = vec![];
        for (s, reps, _) in &self.summands {
            for &r in reps {
                cols.push(self.l.action(r).mul(&s.image));
            }
        }
        if cols.is_empty() {
            return IntMat::zeros(self.l.rank(), 0);
        }
        let refs: Vec<&IntMat> = cols.iter().collect();
        IntMat::hstack(&refs)
    }

    /// Image of `P^S`, spanned by images of orbit sums.
    fn fixed_image(&self, s: &Subgroup) -> IntMat {
        let g = self.l.group();
        let mut cols: Vec<IntMat> = vec![];
        for (sm, reps, coset_of) in &self.summands {
            let mut seen = vec![false; reps.len()];
            for c in 0..reps.len() {
                if seen[c] {
                    continue;
                }
                let mut acc = IntMat::zeros(self.l.rank(), 1);
                for &m in s.members() {
                    let d = coset_of[g.mul(m, reps[c])];
                    if !seen[d] {
                        seen[d] = true;
                        acc = acc.add(&self.l.action(reps[d]).mul(&sm.image));
                    }
                }
                cols.push(acc);
            }
        }
        if cols.is_empty() {
            return IntMat::zeros(self.l.rank(), 0);
        }
        let refs: Vec<&IntMat> = cols.iter().collect();
        IntMat::hstack(&refs)
    }

    /// Greedily adds orbit generators from `vectors` until the image contains them all.
    fn cover(&mut self, vectors: &IntMat, within: Option<&Subgroup>) {
        for j in 0..vectors.ncols() {
            let x = vectors.col(j);
            let img = match within {
                Some(s) => self.fixed_image(s),
                None => self.image_matrix(),
            };
            if img.ncols() > 0 && exactla::solve_integer(&img, &x).is_some() {
                continue;
            }
            let stab = stabilizer(self.l, &x);
            self.push(stab, x);
        }
    }

    fn middle(&self) -> GLattice {
        let g = self.l.group();
        let parts: Vec<GLattice> = self.summands.iter().map(|(s, _, _)| glattice::permutation_lattice(g, &s.stabilizer)).collect();
        let refs: Vec<&GLattice> = parts.iter().collect();
        glattice::direct_sum_all(&refs).expect("same group").with_name("P")
    }

    fn witness(&self) -> Vec<SummandInfo> {
        self.summands.iter().map(|(s, r, _)| SummandInfo { stabilizer_order: s.stabilizer.order(), index: r.len() }).collect()
    }
}

fn subgroup_reps(g: &Arc<FinGroup>, guard: usize) -> Result<Vec<Subgroup>, ResolutionError> {
    let subs = fingroup::all_subgroups(g, guard)?;
    Ok(fingroup::conjugacy_representatives(&subs))
}

/// Adds correction summands until `P^S → L^S` is onto for every subgroup class.
fn make_fixed_surjective(cover: &mut PermCover, subs: &[Subgroup]) {
    for s in subs {
        let fixed = glattice::fixed_sublattice(cover.l, s);
        cover.cover(&fixed, Some(s));
    }
}

fn finish_coflasque(l: &GLattice, cover: &PermCover) -> Resolution {
    let pi = cover.image_matrix();
    let middle = cover.middle();
    let k = exactla::kernel_basis(&pi);
    let left = middle.sublattice("R", &k).expect("kernel of an equivariant map is invariant");
    Resolution {
        kind: ResolutionKind::Coflasque,
        left,
        middle,
        right: l.clone(),
        left_map: LatticeHom { matrix: k },
        right_map: LatticeHom { matrix: pi },
        witness: cover.witness(),
    }
}

/// Coflasque resolution `0 → R → P → L → 0`.
pub fn coflasque_resolution(l: &GLattice) -> Result<Resolution, ResolutionError> {
    coflasque_resolution_guarded(l, DEFAULT_SUBGROUP_GUARD)
}

pub fn coflasque_resolution_guarded(l: &GLattice, guard: usize) -> Result<Resolution, ResolutionError> {
    let subs = subgroup_reps(l.group(), guard)?;
    let mut cover = PermCover::new(l);
    cover.cover(&IntMat::identity(l.rank()), None);
    make_fixed_surjective(&mut cover, &subs);
    Ok(finish_coflasque(l, &cover))
}

/// Flasque resolution `0 → L → P → F → 0`, the dual of a coflasque resolution of `L*`.
pub fn flasque_resolution(l: &GLattice) -> Result<Resolution, ResolutionError> {
    flasque_resolution_guarded(l, DEFAULT_SUBGROUP_GUARD)
}

pub fn flasque_resolution_guarded(l: &GLattice, guard: usize) -> Result<Resolution, ResolutionError> {
    let co = coflasque_resolution_guarded(&glattice::dual(l), guard)?;
    Ok(dualize(l, &co))
}

fn dualize(l: &GLattice, co: &Resolution) -> Resolution {
    Resolution {
        kind: ResolutionKind::Flasque,
        left: l.clone(),
        middle: glattice::dual(&co.middle).with_name("P"),
        right: glattice::dual(&co.left).with_name("F"),
        left_map: LatticeHom { matrix: co.right_map.matrix.transpose() },
        right_map: LatticeHom { matrix: co.left_map.matrix.transpose() },
        witness: co.witness.clone(),
    }
}

/// A representative of `ρ(L)`.
pub fn rho(l: &GLattice) -> Result<GLattice, ResolutionError> {
    Ok(flasque_resolution(l)?.right)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Failure {
    pub subgroup: String,
    pub order: usize,
    pub invariants: AbelianInvariants,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Flasqueness {
    pub is_flasque: bool,
    pub is_coflasque: bool,
    pub flasque_failure: Option<Failure>,
    pub coflasque_failure: Option<Failure>,
    pub subgroups_checked: usize,
}

/// Checks `Ĥ^{-1}(S, L) = 0` and `H^1(S, L) = 0` over all subgroups up to conjugacy.
pub fn flasqueness(l: &GLattice) -> Result<Flasqueness, ResolutionError> {
    flasqueness_guarded(l, DEFAULT_SUBGROUP_GUARD)
}

pub fn flasqueness_guarded(l: &GLattice, guard: usize) -> Result<Flasqueness, ResolutionError> {
    let subs = subgroup_reps(l.group(), guard)?;
    let mut out = Flasqueness { is_flasque: true, is_coflasque: true, flasque_failure: None, coflasque_failure: None, subgroups_checked: subs.len() };
    for s in &subs {
        if out.is_flasque {
            let h = cohomology::tate_minus_one(l, s);
            if !h.is_trivial() {
                out.is_flasque = false;
                out.flasque_failure = Some(Failure { subgroup: format!("{s:?}"), order: s.order(), invariants: h });
            }
        }
        if out.is_coflasque {
            let h = cohomology::tate(l, s, 1, Guard::default())?.invariants;
            if !h.is_trivial() {
                out.is_coflasque = false;
                out.coflasque_failure = Some(Failure { subgroup: format!("{s:?}"), order: s.order(), invariants: h });
            }
        }
    }
    Ok(out)
}

/// The hand-built coflasque resolution of `ZA_{2p-1}` over `Γ = ⟨(1..p), (p+1..2p)⟩`,
/// with middle term `Z[Γ/C_2] ⊕ Z[Γ/C_1] ⊕ Z[Γ] ⊕ Z`.
pub fn lambda2p_resolution(p: usize) -> Result<Resolution, ResolutionError> {
    let (za, _) = gamma_lattice(p, glattice::za(2 * p)?)?;
    let g = za.group().clone();
    let n = 2 * p;
    let r = n - 1;
    let unit = |i: usize| {
        let mut v = IntMat::zeros(r, 1);
        v.set_i64(i, 0, 1);
        v
    };
    let c1 = g.subgroup_generated(&[g.generator_indices()[0]]);
    let c2 = g.subgroup_generated(&[g.generator_indices()[1]]);
    // 2ϖ_p = Σ_{i<p} i(α_i + α_{2p-i}) + p α_p
    let mut two_w = IntMat::zeros(r, 1);
    for i in 1..p {
        two_w.set_i64(i - 1, 0, i as i64);
        two_w.set_i64(n - i - 1, 0, i as i64);
    }
    two_w.set_i64(p - 1, 0, p as i64);
    let mut cover = PermCover::new(&za);
    cover.push(c2, unit(0));
    cover.push(c1, unit(p));
    cover.push(g.trivial_subgroup(), unit(p - 1));
    cover.push(g.whole(), two_w);
    Ok(finish_coflasque(&za, &cover))
}

/// `Γ = ⟨(1..p), (p+1..2p)⟩` and a lattice of `Sym_{2p}` restricted to it.
pub fn gamma_lattice(p: usize, l: GLattice) -> Result<(GLattice, Arc<FinGroup>), ResolutionError> {
    let a: Vec<usize> = (1..=p).collect();
    let b: Vec<usize> = (p + 1..=2 * p).collect();
    let perms = vec![SignedPerm::cycle(2 * p, &a), SignedPerm::cycle(2 * p, &b)];
    let r = l.restrict_to_perms(&perms, &format!("Gamma{p}"))?;
    let g = r.group().clone();
    Ok((r, g))
}

/// `U(p) = ker(Z[Γ] ⊕ Z → Z)`, `1 ↦ 1`, `1 ↦ p`.
pub fn u_lattice(g: &Arc<FinGroup>, p: i64) -> GLattice {
    let reg = glattice::permutation_lattice(g, &g.trivial_subgroup());
    let z = glattice::trivial_lattice(g);
    let sum = glattice::direct_sum(&reg, &z).expect("same group");
    let n = g.order();
    let mut theta = IntMat::zeros(1, n + 1);
    for j in 0..n {
        theta.set_i64(0, j, 1);
    }
    theta.set_i64(0, n, p);
    let k = exactla::kernel_basis(&theta);
    sum.sublattice(&format!("U({p})"), &k).expect("kernel is invariant")
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub enum IsoVerdict {
    Found,
    Unverified,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct EquivlatReport {
    pub d: i64,
    pub subgroups_checked: usize,
    pub hypothesis_holds: bool,
    pub failing_subgroup: Option<String>,
    pub u_rank: usize,
    pub u_coflasque: bool,
    pub stably_permutation_witness: IsoVerdict,
    pub conclusion: String,
}

fn is_equivariant_map(m: &IntMat, src: &GLattice, dst: &GLattice) -> bool {
    LatticeHom { matrix: m.clone() }.is_equivariant(src, dst)
}

/// Checks whether `Y^S` maps onto `Y/X` for a subgroup `S`.
fn fixed_point_surjective(y: &GLattice, incl: &IntMat, s: &Subgroup) -> bool {
    let fixed = glattice::fixed_sublattice(y, s);
    let both = IntMat::hstack(&[&fixed, incl]);
    exactla::cokernel_invariants(&both).is_trivial()
}

/// Builds the fixed-point diagram for `0 → X → Y → Z/d → 0`.
pub fn equivlat_diagram(x: &GLattice, y: &GLattice, incl: &IntMat, d: i64, budget: usize) -> Result<EquivlatReport, ResolutionError> {
    if !Arc::ptr_eq(x.group(), y.group()) {
        return Err(LatticeError::GroupMismatch.into());
    }
    if !is_equivariant_map(incl, x, y) {
        return Err(ResolutionError::BadInclusion("map is not equivariant".into()));
    }
    if exactla::rank(incl) != x.rank() {
        return Err(ResolutionError::BadInclusion("map is not injective".into()));
    }
    if exactla::cokernel_invariants(incl) != AbelianInvariants::cyclic(d) {
        return Err(ResolutionError::BadInclusion(format!("cokernel is {} rather than Z/{d}", exactla::cokernel_invariants(incl))));
    }
    let id = IntMat::identity(y.rank());
    for a in y.generator_actions() {
        let moved = a.sub(&id);
        if moved.ncols() > 0 && exactla::solve_integer(incl, &moved).is_none() {
            return Err(ResolutionError::BadInclusion("action on the cokernel is not trivial".into()));
        }
    }
    let subs = subgroup_reps(y.group(), DEFAULT_SUBGROUP_GUARD)?;
    for s in &subs {
        if !fixed_point_surjective(y, incl, s) {
            return Err(ResolutionError::HypothesisFailed(format!("{s:?}")));
        }
    }
    // top row: coflasque resolution of X; middle row: extension to Y
    let mut cx = PermCover::new(x);
    cx.cover(&IntMat::identity(x.rank()), None);
    make_fixed_surjective(&mut cx, &subs);
    let px_count = cx.summands.len();
    let mut cy = PermCover::new(y);
    for (s, _, _) in &cx.summands {
        cy.push(s.stabilizer.clone(), incl.mul(&s.image));
    }
    cy.cover(&id, None);
    make_fixed_surjective(&mut cy, &subs);
    // Q is the part of the middle term beyond P; U = {q ∈ Q : π(q) ∈ X}
    let pi_y = cy.image_matrix();
    let p_rank: usize = cx.summands.iter().map(|(_, r, _)| r.len()).sum();
    let q_rank = pi_y.ncols() - p_rank;
    let pi_q = pi_y.col_range(p_rank, pi_y.ncols());
    let q_lat = {
        let g = y.group();
        let parts: Vec<GLattice> = cy.summands[px_count..].iter().map(|(s, _, _)| glattice::permutation_lattice(g, &s.stabilizer)).collect();
        let refs: Vec<&GLattice> = parts.iter().collect();
        if refs.is_empty() {
            None
        } else {
            Some(glattice::direct_sum_all(&refs).expect("same group").with_name("Q"))
        }
    };
    let (u_rank, u_coflasque, witness) = match q_lat {
        None => (0, true, IsoVerdict::Found),
        Some(q) => {
            // q ∈ U iff [π_Q q | incl] has an integer preimage: kernel of [π_Q | -incl], projected
            let m = IntMat::hstack(&[&pi_q, &incl.neg()]);
            let k = exactla::kernel_basis(&m);
            let ub = exactla::column_span_basis(&k.row_range(0, q_rank));
            let u = q.sublattice("U", &ub)?;
            let mut cof = true;
            for s in &subs {
                if !cohomology::tate(&u, s, 1, Guard::default())?.invariants.is_trivial() {
                    cof = false;
                }
            }
            let z = glattice::trivial_lattice(y.group());
            let a = glattice::direct_sum(&u, &z)?;
            let b = glattice::direct_sum(&q, &z)?;
            let w = match find_isomorphism(&a, &b, budget, 1) {
                Some(_) => IsoVerdict::Found,
                None => IsoVerdict::Unverified,
            };
            (u.rank(), cof, w)
        }
    };
    let conclusion = format!("{}* ~ {}*", x.name(), y.name());
    Ok(EquivlatReport {
        d,
        subgroups_checked: subs.len(),
        hypothesis_holds: true,
        failing_subgroup: None,
        u_rank,
        u_coflasque,
        stably_permutation_witness: witness,
        conclusion,
    })
}

/// Hypothesis check only: `Y^S → Z/d` onto for all subgroups. Returns the first failing subgroup.
pub fn equivlat_hypothesis(y: &GLattice, incl: &IntMat, guard: usize) -> Result<(usize, Option<Subgroup>), ResolutionError> {
    let subs = subgroup_reps(y.group(), guard)?;
    for s in &subs {
        if !fixed_point_surjective(y, incl, s) {
            return Ok((subs.len(), Some(s.clone())));
        }
    }
    Ok((subs.len(), None))
}

/// Basis of the equivariant homomorphisms `A → B` as `rank B × rank A` matrices.
pub fn equivariant_homs(a: &GLattice, b: &GLattice) -> Vec<IntMat> {
    let (m, n) = (b.rank(), a.rank());
    let blocks: Vec<IntMat> = a
        .generator_actions()
        .iter()
        .zip(b.generator_actions())
        .map(|(ga, gb)| {
            // vec(M A - B M) = (A^T ⊗ I - I ⊗ B) vec(M), column-major vec
            ga.transpose().kron(&IntMat::identity(m)).sub(&IntMat::identity(n).kron(gb))
        })
        .collect();
    let sys = if blocks.is_empty() {
        IntMat::zeros(0, m * n)
    } else {
        let refs: Vec<&IntMat> = blocks.iter().collect();
        IntMat::vstack(&refs)
    };
    let k = exactla::kernel_basis(&sys);
    (0..k.ncols())
        .map(|c| {
            let mut h = IntMat::zeros(m, n);
            for j in 0..n {
                for i in 0..m {
                    h.set(i, j, k.get(j * m + i, c));
                }
            }
            h
        })
        .collect()
}

/// Budgeted search for an equivariant unimodular map `A → B`.
pub fn find_isomorphism(a: &GLattice, b: &GLattice, budget: usize, seed: u64) -> Option<IntMat> {
    if a.rank() != b.rank() || a.rank() * a.rank() > 2500 {
        return None;
    }
    let basis = equivariant_homs(a, b);
    if basis.is_empty() {
        return None;
    }
    let unimodular = |m: &IntMat| exactla::determinant(m).abs().is_one();
    for h in &basis {
        if unimodular(h) {
            return Some(h.clone());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..budget {
        let mut acc = IntMat::zeros(b.rank(), a.rank());
        for h in &basis {
            let c: i64 = rng.gen_range(-1..=1);
            if c != 0 {
                acc = acc.add(&h.scale(&BigInt::from(c)));
            }
        }
        if unimodular(&acc) {
            return Some(acc);
        }
    }
    None
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub enum ModpVerdict {
    NotPermutation,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct FixedDim {
    pub subgroup_order: usize,
    pub generators: Vec<String>,
    pub dim: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ModpReport {
    pub p: u64,
    pub rank: usize,
    pub group_order: usize,
    pub fixed_dims: Vec<FixedDim>,
    /// multiplicities of `F_p[Γ/S]` (indexed like `fixed_dims`) matching every fixed-point dimension
    pub candidates: Vec<Vec<usize>>,
    pub system_solvable: bool,
    /// `dim M / (I M + M^Γ)`, which equals the number of non-trivial summands of a permutation module
    pub top_dim: usize,
    /// `dim M / I M`; the module is cyclic iff this is at most 1
    pub head_dim: usize,
    pub augmentation_quotient_dim: usize,
    pub verdict: ModpVerdict,
}

fn modp_rows(m: &IntMat, p: u64) -> Vec<Vec<u64>> {
    m.mod_p(p)
}

fn stacked_minus_identity(l: &GLattice, gens: &[usize]) -> IntMat {
    let id = IntMat::identity(l.rank());
    if gens.is_empty() {
        return IntMat::zeros(0, l.rank());
    }
    let blocks: Vec<IntMat> = gens.iter().map(|&g| l.action(g).sub(&id)).collect();
    let refs: Vec<&IntMat> = blocks.iter().collect();
    IntMat::vstack(&refs)
}

/// `dim (F_p L)^S`.
pub fn fixed_dim_mod_p(l: &GLattice, s: &Subgroup, p: u64) -> usize {
    let m = stacked_minus_identity(l, s.generators());
    if m.nrows() == 0 {
        return l.rank();
    }
    l.rank() - exactla::rank_mod_p(&modp_rows(&m, p), p)
}

fn hstack_cols_mod_p(parts: &[Vec<Vec<u64>>], rows: usize) -> Vec<Vec<u64>> {
    let mut out = vec![vec![]; rows];
    for part in parts {
        for (i, row) in part.iter().enumerate() {
            out[i].extend_from_slice(row);
        }
    }
    out
}

/// `(dim M/IM, dim M/(IM + M^Γ))` for `M = F_p L` over the whole group.
pub fn head_dims_mod_p(l: &GLattice, p: u64) -> (usize, usize) {
    let r = l.rank();
    let gens = l.group().generator_indices();
    let id = IntMat::identity(r);
    let im: Vec<Vec<Vec<u64>>> = gens.iter().map(|&g| l.action(g).sub(&id).mod_p(p)).collect();
    let im_cols = hstack_cols_mod_p(&im, r);
    let rank_im = if gens.is_empty() { 0 } else { exactla::rank_mod_p(&im_cols, p) };
    let stacked = stacked_minus_identity(l, &gens);
    let fixed: Vec<Vec<u64>> = if stacked.nrows() == 0 {
        (0..r).map(|i| (0..r).map(|j| u64::from(i == j)).collect()).collect()
    } else {
        exactla::kernel_mod_p(&stacked.mod_p(p), r, p)
    };
    // fixed vectors as columns
    let mut fcols = vec![vec![0u64; fixed.len()]; r];
    for (j, v) in fixed.iter().enumerate() {
        for i in 0..r {
            fcols[i][j] = v[i];
        }
    }
    let both = hstack_cols_mod_p(&[im_cols, fcols], r);
    let rank_both = exactla::rank_mod_p(&both, p);
    (r - rank_im, r - rank_both)
}

/// `dim I/I²` for the augmentation ideal of `F_p[G]`.
pub fn augmentation_quotient_dim(g: &Arc<FinGroup>, p: u64) -> usize {
    let n = g.order();
    let mut i2: Vec<Vec<u64>> = vec![];
    for a in 1..n {
        for b in 1..n {
            let mut v = vec![0u64; n];
            let ab = g.mul(a, b);
            v[ab] = (v[ab] + 1) % p;
            v[a] = (v[a] + p - 1) % p;
            v[b] = (v[b] + p - 1) % p;
            v[0] = (v[0] + 1) % p;
            i2.push(v);
        }
    }
    let rank_i2 = if i2.is_empty() { 0 } else { exactla::rank_mod_p(&i2, p) };
    (n - 1) - rank_i2
}

/// Orbit counts of `K` on `G/S`.
fn orbit_count(g: &Arc<FinGroup>, k: &Subgroup, s: &Subgroup) -> usize {
    let (reps, coset_of) = coset_table(g, s);
    let mut seen = vec![false; reps.len()];
    let mut count = 0;
    for c in 0..reps.len() {
        if seen[c] {
            continue;
        }
        count += 1;
        let mut stack = vec![c];
        seen[c] = true;
        while let Some(x) = stack.pop() {
            for &h in k.generators() {
                let y = coset_of[g.mul(h, reps[x])];
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
    }
    count
}

fn solve_nonneg(a: &[Vec<usize>], b: &[usize], bounds: &[usize]) -> Vec<Vec<usize>> {
    let n = bounds.len();
    let mut out = vec![];
    let mut cur = vec![0usize; n];
    fn rec(j: usize, a: &[Vec<usize>], b: &[usize], bounds: &[usize], cur: &mut Vec<usize>, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if acc.iter().zip(b).any(|(x, y)| x > y) {
            return;
        }
        if j == bounds.len() {
            if acc == b {
                out.push(cur.clone());
            }
            return;
        }
        for m in 0..=bounds[j] {
            cur[j] = m;
            for i in 0..b.len() {
                acc[i] += m * a[i][j];
            }
            rec(j + 1, a, b, bounds, cur, acc, out);
            for i in 0..b.len() {
                acc[i] -= m * a[i][j];
            }
        }
        cur[j] = 0;
    }
    let mut acc = vec![0usize; b.len()];
    rec(0, a, b, bounds, &mut cur, &mut acc, &mut out);
    out
}

/// Permutation-module tests for `F_p L` over a `p`-group.
pub fn modp_tests(l: &GLattice, p: u64) -> Result<ModpReport, ResolutionError> {
    let g = l.group();
    let order = g.try_order()?;
    match fingroup::prime_power(order as u64) {
        Some((q, _)) if q == p => {}
        _ if order == 1 => {}
        _ => return Err(ResolutionError::NotPGroup(order, p)),
    }
    let subs = subgroup_reps(g, DEFAULT_SUBGROUP_GUARD)?;
    let fixed_dims: Vec<FixedDim> = subs
        .iter()
        .map(|s| FixedDim {
            subgroup_order: s.order(),
            generators: s.generator_perms().iter().map(|x| x.to_string()).collect(),
            dim: fixed_dim_mod_p(l, s, p),
        })
        .collect();
    let a: Vec<Vec<usize>> = subs.iter().map(|k| subs.iter().map(|s| orbit_count(g, k, s)).collect()).collect();
    let b: Vec<usize> = fixed_dims.iter().map(|f| f.dim).collect();
    let bounds: Vec<usize> = subs.iter().map(|s| l.rank() / (order / s.order())).collect();
    let candidates = solve_nonneg(&a, &b, &bounds);
    let (head_dim, top_dim) = head_dims_mod_p(l, p);
    let whole = subs.iter().position(|s| s.order() == order).expect("whole group is a subgroup");
    let consistent: Vec<&Vec<usize>> = candidates
        .iter()
        .filter(|c| {
            let nontrivial: usize = c.iter().enumerate().filter(|(i, _)| *i != whole).map(|(_, m)| m).sum();
            nontrivial == top_dim
        })
        .collect();
    let verdict = if consistent.is_empty() { ModpVerdict::NotPermutation } else { ModpVerdict::Inconclusive };
    Ok(ModpReport {
        p,
        rank: l.rank(),
        group_order: order,
        system_solvable: !candidates.is_empty(),
        fixed_dims,
        candidates,
        top_dim,
        head_dim,
        augmentation_quotient_dim: augmentation_quotient_dim(g, p),
        verdict,
    })
}

/// Jordan block sizes of the generator of a cyclic group of order `p` acting on `F_p L`.
pub fn jordan_blocks(l: &GLattice, p: u64) -> Result<Vec<usize>, ResolutionError> {
    let g = l.group();
    if g.try_order()? as u64 != p || g.generator_indices().len() != 1 {
        return Err(ResolutionError::NotCyclicOrderP(p));
    }
    let r = l.rank();
    let n = l.action(g.generator_indices()[0]).sub(&IntMat::identity(r));
    let mut ranks = vec![r];
    let mut pw = IntMat::identity(r);
    for _ in 0..p {
        pw = pw.mul(&n);
        ranks.push(exactla::rank_mod_p(&pw.mod_p(p), p));
    }
    let at_least: Vec<usize> = (0..p as usize).map(|k| ranks[k] - ranks[k + 1]).collect();
    let mut sizes = vec![];
    for k in 0..p as usize {
        let exact = at_least[k] - at_least.get(k + 1).copied().unwrap_or(0);
        for _ in 0..exact {
            sizes.push(k + 1);
        }
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    Ok(sizes)
}

/// A cyclic group of order `p` is `p`-permutation on a module iff all Jordan blocks have size 1 or `p`.
pub fn jordan_permutation_verdict(blocks: &[usize], p: u64) -> bool {
    blocks.iter().all(|&b| b == 1 || b as u64 == p)
}

pub fn cyclic_order_p_group(degree: usize, cycle: &[usize]) -> Arc<FinGroup> {
    FinGroup::lazy(degree, vec![SignedPerm::cycle(degree, cycle)], "Cp")
}

pub fn is_zero_vec(v: &IntMat) -> bool {
    (0..v.nrows()).all(|i| v.get(i, 0).is_zero())
}
