//! Tate cohomology of lattices in degrees -1, 0, 1, 2 and the groups Ш¹, Ш².
//!
//! Degrees -1 and 0 come straight from the norm and the augmentation ideal.
//! Degree 1 solves the bar cocycle condition `f(gh) = f(g) + g f(h)` with `g`
//! running over generators, which already cuts out every 1-cocycle. Degree 2
//! uses the full normalized bar complex. A second route through Tate duality
//! and dimension shifting is kept alongside for cross-checks and larger groups.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactla::{self, AbelianInvariants, Echelon, IntMat};
use crate::fingroup::{FinGroup, Subgroup};
use crate::glattice::{self, GLattice};

pub const DEFAULT_SIZE_GUARD: usize = 2_000_000;
/// Largest dense coboundary matrix, in entries, the bar complex will allocate.
pub const DENSE_ENTRY_LIMIT: usize = 60_000_000;
/// Largest shifted lattice rank `rank(L)·|S|` the dimension-shift fallback will build.
pub const SHIFT_RANK_LIMIT: usize = 600;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CohomError {
    #[error("cochain size {coords} exceeds guard {limit}")]
    SizeGuard { coords: usize, limit: usize },
    #[error("coboundary matrix with {entries} entries exceeds the dense limit {limit}")]
    MatrixGuard { entries: usize, limit: usize },
    #[error("dimension shift of rank {rank} exceeds the limit {limit}")]
    ShiftGuard { rank: usize, limit: usize },
    #[error("unsupported degree {0}")]
    Degree(i32),
    #[error("subgroup does not belong to the lattice's group")]
    ForeignSubgroup,
}

impl CohomError {
    /// Whether the computation was refused for size.
    pub fn is_guard(&self) -> bool {
        matches!(self, CohomError::SizeGuard { .. } | CohomError::MatrixGuard { .. } | CohomError::ShiftGuard { .. })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct CohomResult {
    pub degree: i32,
    pub invariants: AbelianInvariants,
    pub method: String,
}

#[derive(Clone, Copy, Debug)]
pub struct Guard {
    pub limit: usize,
}

impl Default for Guard {
    fn default() -> Self {
        Guard { limit: DEFAULT_SIZE_GUARD }
    }
}

fn check_parent(l: &GLattice, s: &Subgroup) -> Result<(), CohomError> {
    if Arc::ptr_eq(l.group(), s.parent()) {
        Ok(())
    } else {
        Err(CohomError::ForeignSubgroup)
    }
}

/// `N_S = Σ_{s∈S} s` on `L`.
pub fn norm_matrix(l: &GLattice, s: &Subgroup) -> IntMat {
    let mut acc = IntMat::zeros(l.rank(), l.rank());
    for &m in s.members() {
        acc = acc.add(l.action(m));
    }
    acc
}

/// Columns spanning `I_S L`.
pub fn augmentation_span(l: &GLattice, s: &Subgroup) -> IntMat {
    let id = IntMat::identity(l.rank());
    let blocks: Vec<IntMat> = s.generators().iter().map(|&g| l.action(g).sub(&id)).collect();
    if blocks.is_empty() {
        return IntMat::zeros(l.rank(), 0);
    }
    let refs: Vec<&IntMat> = blocks.iter().collect();
    IntMat::hstack(&refs)
}

/// `Ĥ^{-1}(S, L) = Ker N_S / I_S L`.
pub fn tate_minus_one(l: &GLattice, s: &Subgroup) -> AbelianInvariants {
    let kern = exactla::kernel_basis(&norm_matrix(l, s));
    if kern.ncols() == 0 {
        return AbelianInvariants::trivial();
    }
    let aug = augmentation_span(l, s);
    exactla::quotient_invariants(&kern, &aug).expect("I_S L lies in the norm kernel")
}

/// `Ĥ^0(S, L) = L^S / N_S L`.
pub fn tate_zero(l: &GLattice, s: &Subgroup) -> AbelianInvariants {
    let fixed = glattice::fixed_sublattice(l, s);
    if fixed.ncols() == 0 {
        return AbelianInvariants::trivial();
    }
    let norm = norm_matrix(l, s);
    exactla::quotient_invariants(&fixed, &norm).expect("norms are invariant")
}

/// A finitely generated abelian group given as cocycles modulo coboundaries.
///
/// Cocycles are the kernel of `def`; `coords` gives invariant-factor coordinates.
pub struct Presentation {
    ech: Echelon,
    kernel: IntMat,
    u: IntMat,
    uinv: IntMat,
    moduli: Vec<BigInt>,
}

impl Presentation {
    /// `def`: matrix whose kernel is the cocycle space; `bounds`: columns spanning the coboundaries.
    pub fn new(def: &IntMat, bounds: &IntMat) -> Self {
        let ech = Echelon::with_inverse(def);
        let kernel = ech.kernel();
        let z = kernel.ncols();
        let rel = if bounds.ncols() == 0 { IntMat::zeros(z, 0) } else { ech.kernel_coords(bounds) };
        debug_assert_eq!(kernel.mul(&rel), *bounds);
        let (u, moduli) = if z == 0 {
            (IntMat::zeros(0, 0), vec![])
        } else {
            let snf = exactla::smith_normal_form(&rel);
            let mut moduli = snf.d.clone();
            moduli.resize(z, BigInt::zero());
            (snf.u, moduli)
        };
        let uinv = if z == 0 { IntMat::zeros(0, 0) } else { exactla::unimodular_inverse(&u).expect("unimodular") };
        Presentation { ech, kernel, u, uinv, moduli }
    }

    pub fn invariants(&self) -> AbelianInvariants {
        let torsion = self.moduli.iter().filter(|d| !d.is_zero() && !d.is_one()).cloned().collect();
        let free_rank = self.moduli.iter().filter(|d| d.is_zero()).count();
        AbelianInvariants { torsion, free_rank }
    }

    /// Indices of the components that are not killed.
    pub fn live(&self) -> Vec<usize> {
        (0..self.moduli.len()).filter(|&i| !self.moduli[i].is_one()).collect()
    }

    pub fn modulus(&self, i: usize) -> &BigInt {
        &self.moduli[i]
    }

    /// Cocycle representing the `i`-th component generator.
    pub fn generator(&self, i: usize) -> IntMat {
        self.kernel.mul(&self.uinv.col(i))
    }

    /// Whether `z` satisfies the cocycle condition.
    pub fn is_cocycle(&self, z: &IntMat) -> bool {
        z.is_zero() || (self.kernel.ncols() > 0 && exactla::solve_integer(&self.kernel, z).is_some())
    }

    /// Component coordinates of the class of the cocycle `z`, reduced.
    pub fn coords(&self, z: &IntMat) -> Vec<BigInt> {
        let y = self.ech.kernel_coords(z);
        let w = self.u.mul(&y);
        (0..self.moduli.len())
            .map(|i| {
                let v = w.get(i, 0);
                let d = &self.moduli[i];
                if d.is_zero() {
                    v
                } else {
                    num_integer::Integer::mod_floor(&v, d)
                }
            })
            .collect()
    }

    pub fn is_trivial_class(&self, z: &IntMat) -> bool {
        self.coords(z).iter().all(|c| c.is_zero())
    }
}

/// Kernel of a restriction map `H → ⊕ H_C`, given the images of the live generators.
///
/// `images[c][g]` are the live coordinates in target `c` of generator `g`.
fn kernel_of_restriction(source: &Presentation, targets: &[(&Presentation, Vec<Vec<BigInt>>)]) -> AbelianInvariants {
    let live = source.live();
    let t = live.len();
    if t == 0 {
        return AbelianInvariants::trivial();
    }
    let mut rows: Vec<Vec<BigInt>> = vec![];
    let mut mods: Vec<BigInt> = vec![];
    for (tp, imgs) in targets {
        for (k, &comp) in tp.live().iter().enumerate() {
            rows.push((0..t).map(|g| imgs[g][k].clone()).collect());
            mods.push(tp.modulus(comp).clone());
        }
    }
    let lam = if rows.is_empty() {
        IntMat::identity(t)
    } else {
        // {a : R a ∈ ⊕ e_j Z}
        let nr = rows.len();
        let mut m = IntMat::zeros(nr, t + nr);
        for (i, row) in rows.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                m.set(i, j, x.clone());
            }
            m.set(i, t + i, -mods[i].clone());
        }
        let k = exactla::kernel_basis(&m);
        exactla::column_span_basis(&k.row_range(0, t))
    };
    let mut rel = IntMat::zeros(t, t);
    for (j, &comp) in live.iter().enumerate() {
        rel.set(j, j, source.modulus(comp).clone());
    }
    exactla::quotient_invariants(&lam, &rel).expect("multiples of the moduli restrict to zero")
}

/// Values of 1-cocycles on generators.
///
/// Unknowns are `f(g_1), .., f(g_k)` stacked; `value[w]` expresses `f(w)` linearly.
pub struct GeneratorCocycles {
    pub rank: usize,
    pub gens: Vec<usize>,
    pub members: Vec<usize>,
    value: Vec<IntMat>,
    pos: Vec<usize>,
    pub pres: Presentation,
}

impl GeneratorCocycles {
    pub fn new(l: &GLattice, s: &Subgroup, guard: Guard) -> Result<Self, CohomError> {
        check_parent(l, s)?;
        let g = l.group();
        let r = l.rank();
        let gens: Vec<usize> = s.generators().to_vec();
        let k = gens.len();
        let coords = r * k * s.order();
        if coords > guard.limit {
            return Err(CohomError::SizeGuard { coords, limit: guard.limit });
        }
        let kr = r * k;
        let mut pos = vec![usize::MAX; g.order()];
        let mut value: Vec<IntMat> = vec![];
        let mut members = vec![];
        let e_block = |j: usize| {
            let mut m = IntMat::zeros(r, kr);
            for i in 0..r {
                m.set_i64(i, j * r + i, 1);
            }
            m
        };
        let eblocks: Vec<IntMat> = (0..k).map(e_block).collect();
        pos[0] = 0;
        value.push(IntMat::zeros(r, kr));
        members.push(0);
        let mut constraints: Vec<IntMat> = vec![];
        let mut head = 0;
        while head < members.len() {
            let w = members[head];
            for (j, &gj) in gens.iter().enumerate() {
                let x = g.mul(gj, w);
                let v = eblocks[j].add(&l.action(gj).mul(&value[pos[w]]));
                if pos[x] == usize::MAX {
                    pos[x] = members.len();
                    members.push(x);
                    value.push(v);
                } else {
                    let diff = value[pos[x]].sub(&v);
                    if !diff.is_zero() {
                        constraints.push(diff);
                    }
                }
            }
            head += 1;
        }
        let def = if constraints.is_empty() {
            IntMat::zeros(0, kr)
        } else {
            let refs: Vec<&IntMat> = constraints.iter().collect();
            IntMat::vstack(&refs)
        };
        let id = IntMat::identity(r);
        let bounds = if k == 0 {
            IntMat::zeros(0, r)
        } else {
            let blocks: Vec<IntMat> = gens.iter().map(|&gj| l.action(gj).sub(&id)).collect();
            let refs: Vec<&IntMat> = blocks.iter().collect();
            IntMat::vstack(&refs)
        };
        let pres = Presentation::new(&def, &bounds);
        Ok(GeneratorCocycles { rank: r, gens, members, value, pos, pres })
    }

    /// `f(w)` for the cocycle with generator values `x`.
    pub fn value_at(&self, w: usize, x: &IntMat) -> IntMat {
        self.value[self.pos[w]].mul(x)
    }

    /// Full normalized cochain (values on the non-identity members in sorted order).
    pub fn full_cochain(&self, x: &IntMat, sorted_members: &[usize]) -> IntMat {
        let parts: Vec<IntMat> = sorted_members.iter().filter(|&&m| m != 0).map(|&m| self.value_at(m, x)).collect();
        let refs: Vec<&IntMat> = parts.iter().collect();
        if refs.is_empty() {
            return IntMat::zeros(0, 1);
        }
        IntMat::vstack(&refs)
    }
}

/// Degree-1 cohomology of a cyclic group `⟨c⟩`: cocycles are the values `f(c)` killed by the norm.
fn cyclic_h1_presentation(l: &GLattice, c: &Subgroup) -> Presentation {
    let r = l.rank();
    let gen = c.generators().first().copied().unwrap_or(0);
    let norm = norm_matrix(l, c);
    let bounds = l.action(gen).sub(&IntMat::identity(r));
    Presentation::new(&norm, &bounds)
}

/// Normalized bar cochain complex up to a given degree.
pub struct CochainComplex {
    pub rank: usize,
    /// non-identity members, sorted
    pub nonid: Vec<usize>,
    pos: Vec<usize>,
    /// `d[k]: C^k → C^{k+1}`
    pub d: Vec<IntMat>,
}

impl CochainComplex {
    pub fn build(l: &GLattice, s: &Subgroup, top: usize, guard: Guard) -> Result<Self, CohomError> {
        check_parent(l, s)?;
        let r = l.rank();
        let g = l.group();
        let nonid: Vec<usize> = s.members().iter().copied().filter(|&m| m != 0).collect();
        let m = nonid.len();
        let coords = r * m.pow(top as u32);
        if coords > guard.limit {
            return Err(CohomError::SizeGuard { coords, limit: guard.limit });
        }
        let entries = coords.saturating_mul(r * m.pow(top as u32 - 1));
        if entries > DENSE_ENTRY_LIMIT {
            return Err(CohomError::MatrixGuard { entries, limit: DENSE_ENTRY_LIMIT });
        }
        let mut pos = vec![usize::MAX; g.order()];
        for (i, &x) in nonid.iter().enumerate() {
            pos[x] = i;
        }
        let acts: Vec<Vec<Vec<i64>>> = nonid
            .iter()
            .map(|&x| l.action(x).to_i64_rows().expect("action entries fit in i64"))
            .collect();
        let mut d = vec![];
        for k in 0..top {
            let rows = r * m.pow(k as u32 + 1);
            let cols = r * m.pow(k as u32);
            let mut data = vec![0i64; rows * cols];
            let mut tuple = vec![0usize; k + 1];
            for row_block in 0..m.pow(k as u32 + 1) {
                // decode tuple (g_1..g_{k+1})
                let mut t = row_block;
                for i in (0..=k).rev() {
                    tuple[i] = t % m;
                    t /= m;
                }
                let enc = |tup: &[usize]| tup.iter().fold(0usize, |a, &x| a * m + x);
                let mut add_block = |col_block: usize, mat: Option<&Vec<Vec<i64>>>, sign: i64| {
                    for a in 0..r {
                        let rr = row_block * r + a;
                        match mat {
                            Some(mm) => {
                                for b in 0..r {
                                    if mm[a][b] != 0 {
                                        data[rr * cols + col_block * r + b] += sign * mm[a][b];
                                    }
                                }
                            }
                            None => data[rr * cols + col_block * r + a] += sign,
                        }
                    }
                };
                if k == 0 {
                    // (d m)(g) = g m - m
                    add_block(0, Some(&acts[tuple[0]]), 1);
                    add_block(0, None, -1);
                    continue;
                }
                // g_1 f(g_2..)
                add_block(enc(&tuple[1..]), Some(&acts[tuple[0]]), 1);
                for i in 0..k {
                    let prod = g.mul(nonid[tuple[i]], nonid[tuple[i + 1]]);
                    if prod == 0 {
                        continue;
                    }
                    let mut tt: Vec<usize> = Vec::with_capacity(k);
                    tt.extend_from_slice(&tuple[..i]);
                    tt.push(pos[prod]);
                    tt.extend_from_slice(&tuple[i + 2..]);
                    let sign = if (i + 1) % 2 == 0 { 1 } else { -1 };
                    add_block(enc(&tt), None, sign);
                }
                let sign = if (k + 1) % 2 == 0 { 1 } else { -1 };
                add_block(enc(&tuple[..k]), None, sign);
            }
            d.push(IntMat::from_flat(rows, cols, data));
        }
        Ok(CochainComplex { rank: r, nonid, pos, d })
    }

    pub fn presentation(&self, degree: usize) -> Presentation {
        assert!(degree >= 1 && degree < self.d.len() + 1);
        Presentation::new(&self.d[degree], &self.d[degree - 1])
    }

    /// Restricts a degree-`k` cochain of `self` to the complex `small` of a subgroup.
    pub fn restrict_cochain(&self, z: &IntMat, small: &CochainComplex, k: usize) -> IntMat {
        let r = self.rank;
        let m = self.nonid.len();
        let ms = small.nonid.len();
        let mut out = IntMat::zeros(r * ms.pow(k as u32), 1);
        let mut tuple = vec![0usize; k];
        for blk in 0..ms.pow(k as u32) {
            let mut t = blk;
            for i in (0..k).rev() {
                tuple[i] = t % ms;
                t /= ms;
            }
            let big = tuple.iter().fold(0usize, |a, &x| a * m + self.pos[small.nonid[x]]);
            for a in 0..r {
                out.set(blk * r + a, 0, z.get(big * r + a, 0));
            }
        }
        out
    }

    /// Whether the degree-`k` cocycle `z` is a coboundary.
    pub fn is_coboundary(&self, z: &IntMat, k: usize) -> bool {
        if z.is_zero() {
            return true;
        }
        exactla::solve_integer(&self.d[k - 1], z).is_some()
    }
}

/// Tate cohomology `Ĥ^degree(S, L)` for degree in -1..=2.
pub fn tate(l: &GLattice, s: &Subgroup, degree: i32, guard: Guard) -> Result<CohomResult, CohomError> {
    check_parent(l, s)?;
    let (invariants, method) = match degree {
        -1 => (tate_minus_one(l, s), "norm kernel modulo augmentation"),
        0 => (tate_zero(l, s), "invariants modulo norms"),
        1 => (GeneratorCocycles::new(l, s, guard)?.pres.invariants(), "bar cocycles on generators"),
        2 => {
            if s.is_trivial() {
                (AbelianInvariants::trivial(), "trivial group")
            } else {
                (CochainComplex::build(l, s, 3, guard)?.presentation(2).invariants(), "normalized bar complex")
            }
        }
        d => return Err(CohomError::Degree(d)),
    };
    Ok(CohomResult { degree, invariants, method: method.into() })
}

/// Degree-1 and 2 cohomology from the literal normalized bar complex.
pub fn tate_bar(l: &GLattice, s: &Subgroup, degree: usize, guard: Guard) -> Result<AbelianInvariants, CohomError> {
    if !(1..=2).contains(&degree) {
        return Err(CohomError::Degree(degree as i32));
    }
    if s.is_trivial() {
        return Ok(AbelianInvariants::trivial());
    }
    Ok(CochainComplex::build(l, s, degree + 1, guard)?.presentation(degree).invariants())
}

/// `H^1(S, L)` through `Ĥ^{-1}(S, L*)`.
pub fn h1_via_dual(l: &GLattice, s: &Subgroup) -> AbelianInvariants {
    let d = glattice::dual(l);
    let sd = Subgroup::new(d.group().clone(), s.members().to_vec(), s.generators().to_vec());
    tate_minus_one(&d, &sd)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ShaResult {
    pub degree: usize,
    pub invariants: AbelianInvariants,
    pub method: String,
    pub cyclic_subgroups: usize,
}

/// `Ш^degree(S, L)`: classes restricting to zero on every cyclic subgroup.
pub fn sha(l: &GLattice, s: &Subgroup, degree: usize, guard: Guard) -> Result<ShaResult, CohomError> {
    check_parent(l, s)?;
    let cyclic = s.cyclic_subgroups();
    match degree {
        1 => {
            let gc = GeneratorCocycles::new(l, s, guard)?;
            let live = gc.pres.live();
            let gens: Vec<IntMat> = live.iter().map(|&i| gc.pres.generator(i)).collect();
            let mut targets = vec![];
            let pres_c: Vec<(usize, Presentation)> = cyclic
                .iter()
                .filter(|c| !c.is_trivial())
                .map(|c| (c.generators()[0], cyclic_h1_presentation(l, c)))
                .collect();
            for (cg, pc) in &pres_c {
                let live_c = pc.live();
                let imgs: Vec<Vec<BigInt>> = gens
                    .iter()
                    .map(|x| {
                        let v = gc.value_at(*cg, x);
                        let co = pc.coords(&v);
                        live_c.iter().map(|&i| co[i].clone()).collect()
                    })
                    .collect();
                targets.push((pc, imgs));
            }
            let inv = kernel_of_restriction(&gc.pres, &targets);
            Ok(ShaResult { degree, invariants: inv, method: "restriction of generator cocycles".into(), cyclic_subgroups: cyclic.len() })
        }
        2 => {
            if s.is_trivial() {
                return Ok(ShaResult { degree, invariants: AbelianInvariants::trivial(), method: "trivial group".into(), cyclic_subgroups: 1 });
            }
            let big = CochainComplex::build(l, s, 3, guard)?;
            let pres = big.presentation(2);
            let live = pres.live();
            let gens: Vec<IntMat> = live.iter().map(|&i| pres.generator(i)).collect();
            let mut smalls = vec![];
            for c in cyclic.iter().filter(|c| !c.is_trivial()) {
                let cc = CochainComplex::build(l, c, 3, guard)?;
                let pc = cc.presentation(2);
                smalls.push((cc, pc));
            }
            let mut targets = vec![];
            for (cc, pc) in &smalls {
                let live_c = pc.live();
                let imgs: Vec<Vec<BigInt>> = gens
                    .iter()
                    .map(|z| {
                        let rz = big.restrict_cochain(z, cc, 2);
                        let co = pc.coords(&rz);
                        live_c.iter().map(|&i| co[i].clone()).collect()
                    })
                    .collect();
                targets.push((pc, imgs));
            }
            let inv = kernel_of_restriction(&pres, &targets);
            Ok(ShaResult { degree, invariants: inv, method: "restriction of bar 2-cocycles".into(), cyclic_subgroups: cyclic.len() })
        }
        d => Err(CohomError::Degree(d as i32)),
    }
}

/// Restriction of a degree-`k` cocycle from `big` to `small`; returns whether it becomes a coboundary.
pub fn restriction_is_coboundary(l: &GLattice, big: &Subgroup, small: &Subgroup, k: usize, z: &IntMat, guard: Guard) -> Result<bool, CohomError> {
    let cb = CochainComplex::build(l, big, k + 1, guard)?;
    let cs = CochainComplex::build(l, small, k, guard)?;
    let rz = cb.restrict_cochain(z, &cs, k);
    Ok(cs.is_coboundary(&rz, k))
}

/// `Ш^1(S, M)` as the dual of `Ker N_S / (I_S M* + Σ_C Ker N_C)` on `M*`.
pub fn sha1_via_duality(l: &GLattice, s: &Subgroup) -> AbelianInvariants {
    let d = glattice::dual(l);
    let sd = Subgroup::new(d.group().clone(), s.members().to_vec(), s.generators().to_vec());
    sha1_dual_core(&d, &sd)
}

fn sha1_dual_core(mstar: &GLattice, s: &Subgroup) -> AbelianInvariants {
    let kern = exactla::kernel_basis(&norm_matrix(mstar, s));
    if kern.ncols() == 0 {
        return AbelianInvariants::trivial();
    }
    // the span is reduced after each subgroup to keep the matrix narrow
    let mut sub = exactla::column_span_basis(&augmentation_span(mstar, s));
    for c in s.cyclic_subgroups().iter().filter(|c| !c.is_trivial()) {
        let kc = exactla::kernel_basis(&norm_matrix(mstar, c));
        sub = exactla::column_span_basis(&IntMat::hstack(&[&sub, &kc]));
    }
    exactla::quotient_invariants(&kern, &sub).expect("cyclic norm kernels lie in the norm kernel")
}

/// Dual of the dimension-shifted lattice `Q = (Z[S] ⊗ L) / L`, as a lattice over `S`:
/// `Q* = {(φ_s) ∈ (L*)^S : Σ φ_s = 0}` with `g (e_s ⊗ φ) = e_{gs} ⊗ g φ`.
pub fn shifted_dual(l: &GLattice, s: &Subgroup) -> GLattice {
    let grp = l.group();
    let r = l.rank();
    let mem = s.members();
    let n = mem.len();
    let mut pos = vec![usize::MAX; grp.order()];
    for (i, &m) in mem.iter().enumerate() {
        pos[m] = i;
    }
    let h: Arc<FinGroup> = s.as_group("shift");
    let dual_act = |g: usize| exactla::unimodular_inverse(l.action(g)).expect("unimodular").transpose();
    let gen_action: Vec<IntMat> = s
        .generators()
        .iter()
        .map(|&g| {
            let a = dual_act(g);
            let mut m = IntMat::zeros(r * n, r * n);
            for (j, &x) in mem.iter().enumerate() {
                let i = pos[grp.mul(g, x)];
                for p in 0..r {
                    for q in 0..r {
                        let v = a.get(p, q);
                        if !v.is_zero() {
                            m.set(i * r + p, j * r + q, v);
                        }
                    }
                }
            }
            m
        })
        .collect();
    let p = GLattice::from_generator_matrices("P*", h, r * n, gen_action);
    let mut sum = IntMat::zeros(r, r * n);
    for j in 0..n {
        for a in 0..r {
            sum.set_i64(a, j * r + a, 1);
        }
    }
    let k = exactla::kernel_basis(&sum);
    p.sublattice("Q*", &k).expect("the kernel of the sum map is invariant")
}

/// `Ш²(S, L) ≅ Ш¹(S, Q)` with `Q` the dimension shift of `L`, computed by duality.
pub fn sha2_via_shift(l: &GLattice, s: &Subgroup) -> AbelianInvariants {
    if s.is_trivial() {
        return AbelianInvariants::trivial();
    }
    let qs = shifted_dual(l, s);
    let whole = qs.group().whole();
    sha1_dual_core(&qs, &whole)
}

/// `H²(S, L) ≅ H¹(S, Q) ≅ Ĥ^{-1}(S, Q*)^∨`.
pub fn h2_via_shift(l: &GLattice, s: &Subgroup) -> AbelianInvariants {
    if s.is_trivial() {
        return AbelianInvariants::trivial();
    }
    let qs = shifted_dual(l, s);
    let whole = qs.group().whole();
    tate_minus_one(&qs, &whole)
}

/// Subgroups of `S` whose order is a prime power, up to conjugacy in `S`.
pub fn prime_power_subgroups(subs: &[Subgroup]) -> Vec<Subgroup> {
    subs.iter().filter(|x| x.prime_power_order().is_some() && !x.is_trivial()).cloned().collect()
}

/// Degree-2 Ш by the bar complex when it fits the guard, otherwise by dimension shifting.
pub fn sha2_auto(l: &GLattice, s: &Subgroup, guard: Guard) -> Result<ShaResult, CohomError> {
    match sha(l, s, 2, guard) {
        Ok(r) => Ok(r),
        Err(e) if e.is_guard() && l.rank() * s.order() > SHIFT_RANK_LIMIT => {
            Err(CohomError::ShiftGuard { rank: l.rank() * s.order(), limit: SHIFT_RANK_LIMIT })
        }
        Err(e) if e.is_guard() => Ok(ShaResult {
            degree: 2,
            invariants: sha2_via_shift(l, s),
            method: "dimension shift and duality".into(),
            cyclic_subgroups: s.cyclic_subgroups().len(),
        }),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fingroup::{self, SignedPerm};
    use crate::glattice::{lambda, za};

    fn inv(orders: &[i64]) -> AbelianInvariants {
        AbelianInvariants::from_orders(orders)
    }

    #[test]
    fn cyclic_group_on_trivial_lattice() {
        // H^1(C_n, Z) = 0, H^2(C_n, Z) = Z/n, Ĥ^0 = Z/n, Ĥ^{-1} = 0
        let g = fingroup::FinGroup::lazy(3, vec![SignedPerm::cycle(3, &[1, 2, 3])], "C3");
        let l = glattice::trivial_lattice(&g);
        let s = g.whole();
        let gd = Guard::default();
        assert_eq!(tate(&l, &s, 1, gd).unwrap().invariants, inv(&[1]));
        assert_eq!(tate(&l, &s, 2, gd).unwrap().invariants, inv(&[3]));
        assert_eq!(tate(&l, &s, 0, gd).unwrap().invariants, inv(&[3]));
        assert_eq!(tate(&l, &s, -1, gd).unwrap().invariants, inv(&[1]));
    }

    #[test]
    fn bar_complex_squares_to_zero() {
        let l = za(4).unwrap();
        let s = l.group().whole();
        let c = CochainComplex::build(&l, &s, 3, Guard { limit: 10_000_000 }).unwrap();
        assert!(c.d[1].mul(&c.d[0]).is_zero());
        assert!(c.d[2].mul(&c.d[1]).is_zero());
    }

    #[test]
    fn generator_cocycles_match_full_bar() {
        let l = za(4).unwrap();
        for s in fingroup::all_subgroups(l.group(), 256).unwrap() {
            let a = tate(&l, &s, 1, Guard::default()).unwrap().invariants;
            let b = tate_bar(&l, &s, 1, Guard::default()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn klein_four_on_za4() {
        // orbits of V4 = {(12)(34), ...} on 4 letters: one orbit of size 4, so H^1 = Z/4
        let l = za(4).unwrap();
        let g = l.group();
        let a = g.index_of(&SignedPerm::parse_cycles("(1 2)(3 4)", 4).unwrap()).unwrap();
        let b = g.index_of(&SignedPerm::parse_cycles("(1 3)(2 4)", 4).unwrap()).unwrap();
        let s = g.subgroup_generated(&[a, b]);
        assert_eq!(tate(&l, &s, 1, Guard::default()).unwrap().invariants, inv(&[4]));
        assert_eq!(h1_via_dual(&l, &s), inv(&[4]));
    }

    #[test]
    fn h2_routes_agree_on_sym3() {
        for l in [za(3).unwrap(), lambda(3).unwrap()] {
            for s in fingroup::all_subgroups(l.group(), 256).unwrap() {
                let a = tate(&l, &s, 2, Guard::default()).unwrap().invariants;
                assert_eq!(a, h2_via_shift(&l, &s), "{:?}", s);
            }
        }
    }

    #[test]
    fn sha_of_cyclic_group_is_zero() {
        let l = za(4).unwrap();
        let g = l.group();
        let c = g.subgroup_generated(&[g.index_of(&SignedPerm::cycle(4, &[1, 2, 3, 4])).unwrap()]);
        assert!(sha(&l, &c, 1, Guard::default()).unwrap().invariants.is_trivial());
        assert!(sha(&l, &c, 2, Guard::default()).unwrap().invariants.is_trivial());
    }

    fn gamma9() -> (GLattice, Subgroup) {
        let l = lambda(6).unwrap();
        let g = l.group().clone();
        let s = g
            .subgroup_from_perms(&[SignedPerm::cycle(6, &[1, 2, 3]), SignedPerm::cycle(6, &[4, 5, 6])])
            .unwrap();
        (l, s)
    }

    #[test]
    fn lambda6_over_gamma() {
        let (l, s) = gamma9();
        let gd = Guard::default();
        assert!(tate(&l, &s, 1, gd).unwrap().invariants.is_trivial());
        assert_eq!(tate(&l, &s, 2, gd).unwrap().invariants, inv(&[3]));
        assert_eq!(h2_via_shift(&l, &s), inv(&[3]));
        assert!(sha(&l, &s, 2, gd).unwrap().invariants.is_trivial());
        assert!(sha2_via_shift(&l, &s).is_trivial());
    }

    #[test]
    fn h2_generator_survives_on_first_cycle() {
        let (l, s) = gamma9();
        let gd = Guard::default();
        let big = CochainComplex::build(&l, &s, 3, gd).unwrap();
        let pres = big.presentation(2);
        let z = pres.generator(pres.live()[0]);
        let g = l.group();
        let c1 = g.subgroup_generated(&[g.index_of(&SignedPerm::cycle(6, &[1, 2, 3])).unwrap()]);
        assert!(!restriction_is_coboundary(&l, &s, &c1, 2, &z, gd).unwrap());
        assert!(restriction_is_coboundary(&l, &s, &c1, 2, &big.d[1].mul(&IntMat::zeros(big.d[1].ncols(), 1)), gd).unwrap());
    }

    #[test]
    fn sha1_table_subgroup_za8() {
        let a = SignedPerm::parse_cycles("(1 2)(3 4)(5 6)", 8).unwrap();
        let b = SignedPerm::parse_cycles("(1 2)(5 6)(7 8)", 8).unwrap();
        let l = za(8).unwrap().restrict_to_perms(&[a, b], "table").unwrap();
        let s = l.group().whole();
        assert_eq!(sha(&l, &s, 1, Guard::default()).unwrap().invariants, inv(&[2]));
        assert_eq!(sha1_via_duality(&l, &s), inv(&[2]));
    }
}
