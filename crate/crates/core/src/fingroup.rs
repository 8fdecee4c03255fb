//! Finite groups of signed permutations.
//!
//! A signed permutation on `n` letters sends `e_i` to `±e_j`. Groups are given by
//! generators and enumerated on demand by breadth-first closure; element 0 of the
//! enumeration is the identity.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_CLOSURE_BOUND: usize = 10080;
pub const DEFAULT_SUBGROUP_GUARD: usize = 256;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GroupError {
    #[error("group closure exceeded {bound} elements")]
    ClosureBound { bound: usize },
    #[error("subgroup enumeration refused: group order {order} exceeds guard {guard}")]
    SubgroupBound { order: usize, guard: usize },
    #[error("malformed group descriptor: {0}")]
    BadDescriptor(String),
    #[error("element is not in the group")]
    NotInGroup,
}

/// Entry `i` is `±(j+1)` when `e_i ↦ ±e_j`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SignedPerm(pub Vec<i32>);

impl SignedPerm {
    pub fn identity(n: usize) -> Self {
        SignedPerm((1..=n as i32).collect())
    }

    pub fn from_images_signs(images: &[usize], signs: &[i32]) -> Result<Self, GroupError> {
        let n = images.len();
        if signs.len() != n {
            return Err(GroupError::BadDescriptor("images and signs differ in length".into()));
        }
        let mut seen = vec![false; n];
        let mut v = Vec::with_capacity(n);
        for (i, &im) in images.iter().enumerate() {
            if im >= n || seen[im] {
                return Err(GroupError::BadDescriptor("images are not a permutation".into()));
            }
            seen[im] = true;
            let s = match signs[i] {
                1 => 1,
                -1 => -1,
                _ => return Err(GroupError::BadDescriptor("signs must be ±1".into())),
            };
            v.push(s * (im as i32 + 1));
        }
        Ok(SignedPerm(v))
    }

    /// Parses 1-based cycle notation such as `(1 2 3)(4 5)`; `()` is the identity.
    pub fn parse_cycles(s: &str, n: usize) -> Result<Self, GroupError> {
        let mut img: Vec<usize> = (0..n).collect();
        let bad = || GroupError::BadDescriptor(format!("bad cycle notation {s:?}"));
        let mut rest = s.trim();
        let mut used = vec![false; n];
        while !rest.is_empty() {
            if !rest.starts_with('(') {
                return Err(bad());
            }
            let close = rest.find(')').ok_or_else(bad)?;
            let body = &rest[1..close];
            let pts: Vec<usize> = body
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<usize>().map_err(|_| bad()))
                .collect::<Result<_, _>>()?;
            for &p in &pts {
                if p == 0 || p > n || used[p - 1] {
                    return Err(bad());
                }
                used[p - 1] = true;
            }
            for k in 0..pts.len() {
                img[pts[k] - 1] = pts[(k + 1) % pts.len()] - 1;
            }
            rest = rest[close + 1..].trim_start();
        }
        Self::from_images_signs(&img, &vec![1; n])
    }

    /// The unsigned permutation of a cycle `(a_1 .. a_k)` on letters given 1-based.
    pub fn cycle(n: usize, pts: &[usize]) -> Self {
        let mut img: Vec<usize> = (0..n).collect();
        for k in 0..pts.len() {
            img[pts[k] - 1] = pts[(k + 1) % pts.len()] - 1;
        }
        Self::from_images_signs(&img, &vec![1; n]).expect("valid cycle")
    }

    /// Identity permutation with signs flipped on the given 1-based letters.
    pub fn sign_flip(n: usize, letters: &[usize]) -> Self {
        let mut v: Vec<i32> = (1..=n as i32).collect();
        for &l in letters {
            v[l - 1] = -v[l - 1];
        }
        SignedPerm(v)
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn image(&self, i: usize) -> usize {
        self.0[i].unsigned_abs() as usize - 1
    }

    pub fn sign(&self, i: usize) -> i32 {
        self.0[i].signum()
    }

    /// `self ∘ h`: apply `h` first.
    pub fn compose(&self, h: &SignedPerm) -> SignedPerm {
        SignedPerm(h.0.iter().map(|&x| x.signum() * self.0[x.unsigned_abs() as usize - 1]).collect())
    }

    pub fn inverse(&self) -> SignedPerm {
        let mut v = vec![0i32; self.0.len()];
        for (i, &x) in self.0.iter().enumerate() {
            v[x.unsigned_abs() as usize - 1] = x.signum() * (i as i32 + 1);
        }
        SignedPerm(v)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &x)| x == i as i32 + 1)
    }

    pub fn is_unsigned(&self) -> bool {
        self.0.iter().all(|&x| x > 0)
    }

    pub fn order(&self) -> usize {
        let mut k = 1;
        let mut p = self.clone();
        while !p.is_identity() {
            p = self.compose(&p);
            k += 1;
        }
        k
    }

    /// Sign of the underlying permutation.
    pub fn parity(&self) -> i32 {
        let n = self.0.len();
        let mut seen = vec![false; n];
        let mut s = 1;
        for i in 0..n {
            if seen[i] {
                continue;
            }
            let mut len = 0;
            let mut j = i;
            while !seen[j] {
                seen[j] = true;
                j = self.image(j);
                len += 1;
            }
            if len % 2 == 0 {
                s = -s;
            }
        }
        s
    }

    /// Number of negative signs.
    pub fn sign_count(&self) -> usize {
        self.0.iter().filter(|&&x| x < 0).count()
    }

    /// Disjoint union action: `self` on the first letters, `o` on the following ones.
    pub fn juxtapose(&self, o: &SignedPerm) -> SignedPerm {
        let n = self.0.len() as i32;
        let mut v = self.0.clone();
        v.extend(o.0.iter().map(|&x| x.signum() * (x.abs() + n)));
        SignedPerm(v)
    }
}

impl fmt::Debug for SignedPerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for SignedPerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.0.len();
        let mut seen = vec![false; n];
        let mut out = String::new();
        for i in 0..n {
            if seen[i] {
                continue;
            }
            let mut cyc = vec![];
            let mut j = i;
            while !seen[j] {
                seen[j] = true;
                cyc.push(j + 1);
                j = self.image(j);
            }
            if cyc.len() > 1 {
                let s: Vec<String> = cyc.iter().map(|x| x.to_string()).collect();
                out.push_str(&format!("({})", s.join(" ")));
            }
        }
        let neg: Vec<String> = (0..n).filter(|&i| self.0[i] < 0).map(|i| (i + 1).to_string()).collect();
        if !neg.is_empty() {
            out.push_str(&format!("[-{}]", neg.join(",")));
        }
        if out.is_empty() {
            out.push_str("()");
        }
        write!(f, "{out}")
    }
}

#[derive(Debug)]
pub struct Enumeration {
    pub elements: Vec<SignedPerm>,
    index: HashMap<SignedPerm, usize>,
    /// `elements[i] = gens[word[i].0] ∘ elements[word[i].1]` for `i > 0`.
    pub word: Vec<(usize, usize)>,
    inv: Vec<usize>,
    table: OnceLock<Vec<u32>>,
}

/// A finite group of signed permutations, enumerated lazily.
pub struct FinGroup {
    degree: usize,
    generators: Vec<SignedPerm>,
    label: String,
    bound: usize,
    enumeration: OnceLock<Result<Enumeration, GroupError>>,
}

impl fmt::Debug for FinGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FinGroup({}, degree {}, gens {:?})", self.label, self.degree, self.generators)
    }
}

const TABLE_LIMIT: usize = 1500;

impl FinGroup {
    /// Group from generators; nothing is enumerated yet.
    pub fn lazy(degree: usize, generators: Vec<SignedPerm>, label: impl Into<String>) -> Arc<FinGroup> {
        for g in &generators {
            assert_eq!(g.degree(), degree, "generator degree mismatch");
        }
        let generators: Vec<SignedPerm> = generators.into_iter().filter(|g| !g.is_identity()).collect();
        Arc::new(FinGroup {
            degree,
            generators,
            label: label.into(),
            bound: DEFAULT_CLOSURE_BOUND,
            enumeration: OnceLock::new(),
        })
    }

    pub fn with_bound(degree: usize, generators: Vec<SignedPerm>, label: impl Into<String>, bound: usize) -> Arc<FinGroup> {
        let g = Self::lazy(degree, generators, label);
        let mut g = Arc::try_unwrap(g).expect("fresh group");
        g.bound = bound;
        Arc::new(g)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn generators(&self) -> &[SignedPerm] {
        &self.generators
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn enumeration(&self) -> Result<&Enumeration, GroupError> {
        self.enumeration
            .get_or_init(|| enumerate(self.degree, &self.generators, self.bound))
            .as_ref()
            .map_err(|e| e.clone())
    }

    fn en(&self) -> &Enumeration {
        self.enumeration().expect("group enumeration exceeded its bound")
    }

    pub fn order(&self) -> usize {
        self.en().elements.len()
    }

    pub fn try_order(&self) -> Result<usize, GroupError> {
        Ok(self.enumeration()?.elements.len())
    }

    pub fn element(&self, i: usize) -> &SignedPerm {
        &self.en().elements[i]
    }

    pub fn elements(&self) -> &[SignedPerm] {
        &self.en().elements
    }

    pub fn index_of(&self, p: &SignedPerm) -> Option<usize> {
        self.en().index.get(p).copied()
    }

    pub fn generator_indices(&self) -> Vec<usize> {
        self.generators.iter().map(|g| self.index_of(g).expect("generator enumerated")).collect()
    }

    pub fn word(&self, i: usize) -> (usize, usize) {
        self.en().word[i]
    }

    pub fn inv(&self, i: usize) -> usize {
        self.en().inv[i]
    }

    pub fn mul(&self, i: usize, j: usize) -> usize {
        let en = self.en();
        let n = en.elements.len();
        if n <= TABLE_LIMIT {
            let t = en.table.get_or_init(|| {
                let mut t = vec![0u32; n * n];
                for a in 0..n {
                    for b in 0..n {
                        let c = en.elements[a].compose(&en.elements[b]);
                        t[a * n + b] = en.index[&c] as u32;
                    }
                }
                t
            });
            return t[i * n + j] as usize;
        }
        let c = en.elements[i].compose(&en.elements[j]);
        en.index[&c]
    }

    pub fn element_order(&self, i: usize) -> usize {
        self.element(i).order()
    }

    pub fn whole(self: &Arc<Self>) -> Subgroup {
        let members: Vec<usize> = (0..self.order()).collect();
        Subgroup::new(self.clone(), members, self.generator_indices())
    }

    pub fn trivial_subgroup(self: &Arc<Self>) -> Subgroup {
        Subgroup::new(self.clone(), vec![0], vec![])
    }

    /// Subgroup generated by the given elements of this group.
    pub fn subgroup_generated(self: &Arc<Self>, gens: &[usize]) -> Subgroup {
        let members = closure(self, &[0], gens);
        Subgroup::new(self.clone(), members, gens.to_vec())
    }

    pub fn subgroup_from_perms(self: &Arc<Self>, perms: &[SignedPerm]) -> Result<Subgroup, GroupError> {
        let idx: Vec<usize> = perms
            .iter()
            .map(|p| self.index_of(p).ok_or(GroupError::NotInGroup))
            .collect::<Result<_, _>>()?;
        Ok(self.subgroup_generated(&idx))
    }
}

fn enumerate(degree: usize, gens: &[SignedPerm], bound: usize) -> Result<Enumeration, GroupError> {
    let id = SignedPerm::identity(degree);
    let mut elements = vec![id.clone()];
    let mut index = HashMap::new();
    index.insert(id, 0);
    let mut word = vec![(usize::MAX, usize::MAX)];
    let mut q = VecDeque::from([0usize]);
    while let Some(i) = q.pop_front() {
        for (k, g) in gens.iter().enumerate() {
            let c = g.compose(&elements[i]);
            if !index.contains_key(&c) {
                if elements.len() >= bound {
                    return Err(GroupError::ClosureBound { bound });
                }
                index.insert(c.clone(), elements.len());
                q.push_back(elements.len());
                elements.push(c);
                word.push((k, i));
            }
        }
    }
    let inv = elements.iter().map(|e| index[&e.inverse()]).collect();
    Ok(Enumeration { elements, index, word, inv, table: OnceLock::new() })
}

/// Group enumerated from generators, failing beyond `bound` elements.
pub fn group_from_generators(degree: usize, gens: Vec<SignedPerm>, label: &str, bound: usize) -> Result<Arc<FinGroup>, GroupError> {
    let g = FinGroup::with_bound(degree, gens, label, bound);
    g.enumeration()?;
    Ok(g)
}

fn closure(g: &FinGroup, start: &[usize], gens: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; g.order()];
    let mut q: VecDeque<usize> = VecDeque::new();
    let mut out = vec![];
    for &s in start {
        if !seen[s] {
            seen[s] = true;
            out.push(s);
            q.push_back(s);
        }
    }
    if !seen[0] {
        seen[0] = true;
        out.push(0);
        q.push_back(0);
    }
    while let Some(x) = q.pop_front() {
        for &h in gens {
            let y = g.mul(h, x);
            if !seen[y] {
                seen[y] = true;
                out.push(y);
                q.push_back(y);
            }
        }
    }
    out.sort_unstable();
    out
}

/// A subgroup as a sorted member list of a parent group.
#[derive(Clone)]
pub struct Subgroup {
    parent: Arc<FinGroup>,
    members: Vec<usize>,
    gens: Vec<usize>,
    bits: Vec<u64>,
}

impl fmt::Debug for Subgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let gens: Vec<String> = self.gens.iter().map(|&i| self.parent.element(i).to_string()).collect();
        write!(f, "Subgroup(order {}, gens [{}])", self.members.len(), gens.join(", "))
    }
}

impl PartialEq for Subgroup {
    fn eq(&self, o: &Self) -> bool {
        Arc::ptr_eq(&self.parent, &o.parent) && self.members == o.members
    }
}

impl Subgroup {
    pub fn new(parent: Arc<FinGroup>, mut members: Vec<usize>, gens: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        let n = parent.order();
        let mut bits = vec![0u64; n.div_ceil(64)];
        for &m in &members {
            bits[m / 64] |= 1 << (m % 64);
        }
        let gens = gens.into_iter().filter(|&g| g != 0).collect();
        Subgroup { parent, members, gens, bits }
    }

    pub fn parent(&self) -> &Arc<FinGroup> {
        &self.parent
    }

    pub fn order(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn generators(&self) -> &[usize] {
        &self.gens
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn is_subgroup_of(&self, o: &Subgroup) -> bool {
        self.members.iter().all(|&m| o.contains(m))
    }

    pub fn is_trivial(&self) -> bool {
        self.members.len() == 1
    }

    pub fn is_cyclic(&self) -> bool {
        self.members.iter().any(|&m| self.parent.element_order(m) == self.order())
    }

    pub fn is_abelian(&self) -> bool {
        let g = &self.parent;
        self.gens.iter().all(|&a| self.gens.iter().all(|&b| g.mul(a, b) == g.mul(b, a)))
    }

    /// Whether the order is a power of a prime (the trivial group counts).
    pub fn prime_power_order(&self) -> Option<(u64, u32)> {
        prime_power(self.order() as u64)
    }

    pub fn perms(&self) -> Vec<SignedPerm> {
        self.members.iter().map(|&i| self.parent.element(i).clone()).collect()
    }

    pub fn generator_perms(&self) -> Vec<SignedPerm> {
        self.gens.iter().map(|&i| self.parent.element(i).clone()).collect()
    }

    /// The subgroup as a group in its own right.
    pub fn as_group(&self, label: &str) -> Arc<FinGroup> {
        FinGroup::with_bound(self.parent.degree(), self.generator_perms(), label, self.order().max(1))
    }

    pub fn conjugate(&self, g: usize) -> Subgroup {
        let p = &self.parent;
        let gi = p.inv(g);
        let conj = |x: usize| p.mul(p.mul(g, x), gi);
        Subgroup::new(p.clone(), self.members.iter().map(|&x| conj(x)).collect(), self.gens.iter().map(|&x| conj(x)).collect())
    }

    /// Cyclic subgroups, one generator each, in deterministic order.
    pub fn cyclic_subgroups(&self) -> Vec<Subgroup> {
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut out = vec![];
        for &m in &self.members {
            let c = self.parent.subgroup_generated(&[m]);
            if seen.insert(c.members.clone()) {
                out.push(c);
            }
        }
        sort_subgroups(&mut out);
        out
    }

    pub fn bitset(&self) -> &[u64] {
        &self.bits
    }
}

pub fn prime_power(n: u64) -> Option<(u64, u32)> {
    if n == 1 {
        return Some((1, 0));
    }
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            break;
        }
        p += 1;
    }
    if n % p != 0 {
        p = n;
    }
    let mut m = n;
    let mut e = 0;
    while m % p == 0 {
        m /= p;
        e += 1;
    }
    (m == 1).then_some((p, e))
}

fn sort_subgroups(v: &mut [Subgroup]) {
    v.sort_by(|a, b| a.order().cmp(&b.order()).then_with(|| a.members.cmp(&b.members)));
}

/// Every subgroup, sorted by order then member list.
pub fn all_subgroups(g: &Arc<FinGroup>, guard: usize) -> Result<Vec<Subgroup>, GroupError> {
    let order = g.try_order()?;
    if order > guard {
        return Err(GroupError::SubgroupBound { order, guard });
    }
    all_subgroups_of(&g.whole())
}

/// Every subgroup of a given subgroup.
pub fn all_subgroups_of(s: &Subgroup) -> Result<Vec<Subgroup>, GroupError> {
    let g = s.parent().clone();
    let cyclic = s.cyclic_subgroups();
    let cyc_gens: Vec<usize> = cyclic.iter().map(|c| c.gens.first().copied().unwrap_or(0)).collect();
    let mut found: HashSet<Vec<u64>> = HashSet::new();
    let mut list: Vec<Subgroup> = vec![];
    for c in cyclic {
        if found.insert(c.bits.clone()) {
            list.push(c);
        }
    }
    let mut i = 0;
    while i < list.len() {
        let h = list[i].clone();
        for &x in &cyc_gens {
            if x == 0 || h.contains(x) {
                continue;
            }
            let mut gens = h.gens.clone();
            gens.push(x);
            let members = closure(&g, &h.members, &gens);
            let j = Subgroup::new(g.clone(), members, gens);
            if found.insert(j.bits.clone()) {
                list.push(j);
            }
        }
        i += 1;
    }
    sort_subgroups(&mut list);
    Ok(list)
}

/// Representatives of the conjugacy classes (under the parent group) of a subgroup list.
pub fn conjugacy_representatives(subs: &[Subgroup]) -> Vec<Subgroup> {
    let mut covered: HashSet<Vec<u64>> = HashSet::new();
    let mut reps = vec![];
    for s in subs {
        if covered.contains(&s.bits) {
            continue;
        }
        let p = s.parent();
        for g in 0..p.order() {
            covered.insert(s.conjugate(g).bits);
        }
        reps.push(s.clone());
    }
    reps
}

/// Orbits of the underlying permutation action on letters `0..degree`.
pub fn orbits(s: &Subgroup) -> Vec<Vec<usize>> {
    orbits_of_perms(s.parent().degree(), &s.generator_perms())
}

pub fn orbits_of_perms(n: usize, gens: &[SignedPerm]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; n];
    let mut out = vec![];
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let mut orb = vec![i];
        seen[i] = true;
        let mut k = 0;
        while k < orb.len() {
            let x = orb[k];
            for g in gens {
                let y = g.image(x);
                if !seen[y] {
                    seen[y] = true;
                    orb.push(y);
                }
            }
            k += 1;
        }
        orb.sort_unstable();
        out.push(orb);
    }
    out
}

pub fn symmetric(n: usize) -> Arc<FinGroup> {
    FinGroup::lazy(n, symmetric_gens(n), format!("Sym{n}"))
}

pub fn symmetric_gens(n: usize) -> Vec<SignedPerm> {
    let mut gens = vec![];
    if n >= 2 {
        gens.push(SignedPerm::cycle(n, &[1, 2]));
    }
    if n >= 3 {
        gens.push(SignedPerm::cycle(n, &(1..=n).collect::<Vec<_>>()));
    }
    gens
}

/// Weyl group of type D: permutations with an even number of sign changes.
pub fn weyl_d(n: usize) -> Arc<FinGroup> {
    let mut gens = symmetric_gens(n);
    if n >= 2 {
        gens.push(SignedPerm::sign_flip(n, &[n - 1, n]));
    }
    FinGroup::lazy(n, gens, format!("W(D{n})"))
}

/// Direct product acting on the disjoint union of letters.
pub fn product(a: &FinGroup, b: &FinGroup) -> Arc<FinGroup> {
    let ia = SignedPerm::identity(a.degree());
    let ib = SignedPerm::identity(b.degree());
    let mut gens: Vec<SignedPerm> = a.generators().iter().map(|g| g.juxtapose(&ib)).collect();
    gens.extend(b.generators().iter().map(|g| ia.juxtapose(g)));
    FinGroup::lazy(a.degree() + b.degree(), gens, format!("{}x{}", a.label(), b.label()))
}

/// `Sym3 x Sym2` realized on three letters, the second factor acting by `-1`.
pub fn sym3_times_sign() -> Arc<FinGroup> {
    let mut gens = symmetric_gens(3);
    gens.push(SignedPerm::sign_flip(3, &[1, 2, 3]));
    FinGroup::lazy(3, gens, "Sym3xSym2")
}

/// Builds a group from a JSON descriptor.
pub fn group_from_json(v: &serde_json::Value) -> Result<Arc<FinGroup>, GroupError> {
    let bad = |m: &str| GroupError::BadDescriptor(m.to_string());
    let ty = v.get("type").and_then(|t| t.as_str()).ok_or_else(|| bad("missing type"))?;
    let deg = || {
        v.get("degree")
            .or_else(|| v.get("n"))
            .and_then(|d| d.as_u64())
            .map(|d| d as usize)
            .ok_or_else(|| bad("missing degree"))
    };
    match ty {
        "symmetric" => Ok(symmetric(deg()?)),
        "weylD" => Ok(weyl_d(deg()?)),
        "product" => {
            let f = v.get("factors").and_then(|f| f.as_array()).ok_or_else(|| bad("missing factors"))?;
            let mut it = f.iter();
            let first = group_from_json(it.next().ok_or_else(|| bad("empty product"))?)?;
            let mut acc = first;
            for x in it {
                acc = product(&acc, &*group_from_json(x)?);
            }
            Ok(acc)
        }
        "generators" => {
            let n = deg()?;
            let gens = v.get("gens").and_then(|g| g.as_array()).ok_or_else(|| bad("missing gens"))?;
            let mut out = vec![];
            for g in gens {
                out.push(perm_from_json(g, n)?);
            }
            Ok(FinGroup::lazy(n, out, "custom"))
        }
        other => Err(bad(&format!("unknown group type {other}"))),
    }
}

fn perm_from_json(g: &serde_json::Value, n: usize) -> Result<SignedPerm, GroupError> {
    let bad = |m: &str| GroupError::BadDescriptor(m.to_string());
    if let Some(s) = g.as_str() {
        return SignedPerm::parse_cycles(s, n);
    }
    let to_vec = |x: &serde_json::Value| -> Result<Vec<i64>, GroupError> {
        x.as_array()
            .ok_or_else(|| bad("expected array"))?
            .iter()
            .map(|y| y.as_i64().ok_or_else(|| bad("expected integer")))
            .collect()
    };
    let (images, signs) = if let Some(obj) = g.as_object() {
        let im = to_vec(obj.get("images").ok_or_else(|| bad("missing images"))?)?;
        let sg = match obj.get("signs") {
            Some(s) => to_vec(s)?,
            None => vec![1; im.len()],
        };
        (im, sg)
    } else {
        let arr = g.as_array().ok_or_else(|| bad("generator must be a string, object or array"))?;
        if arr.len() == 2 && arr[0].is_array() {
            (to_vec(&arr[0])?, to_vec(&arr[1])?)
        } else {
            let im = to_vec(g)?;
            let l = im.len();
            (im, vec![1; l])
        }
    };
    if images.len() != n {
        return Err(bad("generator degree mismatch"));
    }
    // images are 1-based in descriptors
    let im: Vec<usize> = images
        .iter()
        .map(|&x| if x >= 1 { Ok(x as usize - 1) } else { Err(bad("images are 1-based")) })
        .collect::<Result<_, _>>()?;
    let sg: Vec<i32> = signs.iter().map(|&s| s as i32).collect();
    SignedPerm::from_images_signs(&im, &sg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_orders() {
        for (n, o) in [(1, 1), (2, 2), (3, 6), (4, 24), (5, 120)] {
            assert_eq!(symmetric(n).order(), o);
        }
    }

    #[test]
    fn weyl_d4_order() {
        assert_eq!(weyl_d(4).order(), 192);
        assert_eq!(weyl_d(3).order(), 24);
    }

    #[test]
    fn closure_bound_is_reported() {
        let g = FinGroup::with_bound(8, symmetric_gens(8), "Sym8", 10080);
        assert_eq!(g.try_order(), Err(GroupError::ClosureBound { bound: 10080 }));
    }

    #[test]
    fn subgroup_counts_of_small_symmetric_groups() {
        // classical counts: Sym3 has 6 subgroups, Sym4 has 30
        assert_eq!(all_subgroups(&symmetric(3), 256).unwrap().len(), 6);
        assert_eq!(all_subgroups(&symmetric(4), 256).unwrap().len(), 30);
    }

    #[test]
    fn subgroup_guard() {
        let e = all_subgroups(&symmetric(6), 256).unwrap_err();
        assert_eq!(e, GroupError::SubgroupBound { order: 720, guard: 256 });
    }

    #[test]
    fn cycle_parsing_and_display() {
        let p = SignedPerm::parse_cycles("(1 2 3)(4 5)", 5).unwrap();
        assert_eq!(p.to_string(), "(1 2 3)(4 5)");
        assert_eq!(p.order(), 6);
        assert_eq!(p.compose(&p.inverse()), SignedPerm::identity(5));
    }

    #[test]
    fn identity_is_element_zero() {
        let g = weyl_d(4);
        assert!(g.element(0).is_identity());
        for i in 0..g.order() {
            assert_eq!(g.mul(0, i), i);
            assert_eq!(g.mul(i, g.inv(i)), 0);
        }
    }

    #[test]
    fn json_descriptors() {
        let v = serde_json::json!({"type":"product","factors":[{"type":"symmetric","degree":3},{"type":"symmetric","degree":2}]});
        assert_eq!(group_from_json(&v).unwrap().order(), 12);
        let v = serde_json::json!({"type":"generators","degree":4,"gens":[[[2,1,3,4],[1,1,-1,-1]]]});
        assert_eq!(group_from_json(&v).unwrap().order(), 2);
        let v = serde_json::json!({"type":"generators","degree":4,"gens":["(1 2 3 4)"]});
        assert_eq!(group_from_json(&v).unwrap().order(), 4);
    }

    #[test]
    fn orbits_of_klein_four() {
        let g = symmetric(4);
        let a = g.index_of(&SignedPerm::parse_cycles("(1 2)(3 4)", 4).unwrap()).unwrap();
        let s = g.subgroup_generated(&[a]);
        assert_eq!(orbits(&s), vec![vec![0, 1], vec![2, 3]]);
    }
}
