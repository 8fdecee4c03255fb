//! Exact integer matrices: Smith form, saturated kernels, integer solving.
//!
//! Entries are arbitrary precision. Small matrices are kept as `i64` and every
//! algorithm first runs with overflow-checked machine integers, retrying in
//! `BigInt` when a checked operation fails.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

mod engine {
    use std::cmp::Ordering;
    use std::fmt;

    use num_bigint::BigInt;
    use num_integer::Integer;
    use num_traits::{Signed, ToPrimitive};

    #[derive(Debug, Clone, Copy)]
    pub struct Overflow;

    pub type Ov<T> = Result<T, Overflow>;

    pub(crate) trait Scalar: Clone + PartialEq + fmt::Debug {
        fn s_zero() -> Self;
        fn s_one() -> Self;
        fn s_is_zero(&self) -> bool;
        fn is_neg(&self) -> bool;
        fn abs_cmp(&self, o: &Self) -> Ordering;
        fn neg(&self) -> Ov<Self>;
        fn add(&self, o: &Self) -> Ov<Self>;
        fn sub(&self, o: &Self) -> Ov<Self>;
        fn mul(&self, o: &Self) -> Ov<Self>;
        fn div_floor(&self, o: &Self) -> Ov<Self>;
        fn rem_euclid(&self, o: &Self) -> Ov<Self>;
        fn from_big(b: &BigInt) -> Option<Self>;
        fn to_big(&self) -> BigInt;
    }

    impl Scalar for i64 {
        fn s_zero() -> Self {
            0
        }
        fn s_one() -> Self {
            1
        }
        fn s_is_zero(&self) -> bool {
            *self == 0
        }
        fn is_neg(&self) -> bool {
            *self < 0
        }
        fn abs_cmp(&self, o: &Self) -> Ordering {
            self.unsigned_abs().cmp(&o.unsigned_abs())
        }
        fn neg(&self) -> Ov<Self> {
            self.checked_neg().ok_or(Overflow)
        }
        fn add(&self, o: &Self) -> Ov<Self> {
            self.checked_add(*o).ok_or(Overflow)
        }
        fn sub(&self, o: &Self) -> Ov<Self> {
            self.checked_sub(*o).ok_or(Overflow)
        }
        fn mul(&self, o: &Self) -> Ov<Self> {
            self.checked_mul(*o).ok_or(Overflow)
        }
        fn div_floor(&self, o: &Self) -> Ov<Self> {
            if *o == -1 {
                return self.neg();
            }
            Ok(Integer::div_floor(self, o))
        }
        fn rem_euclid(&self, o: &Self) -> Ov<Self> {
            self.checked_rem_euclid(*o).ok_or(Overflow)
        }
        fn from_big(b: &BigInt) -> Option<Self> {
            b.to_i64()
        }
        fn to_big(&self) -> BigInt {
            BigInt::from(*self)
        }
    }

    impl Scalar for BigInt {
        fn s_zero() -> Self {
            num_traits::Zero::zero()
        }
        fn s_one() -> Self {
            num_traits::One::one()
        }
        fn s_is_zero(&self) -> bool {
            num_traits::Zero::is_zero(self)
        }
        fn is_neg(&self) -> bool {
            self.is_negative()
        }
        fn abs_cmp(&self, o: &Self) -> Ordering {
            self.magnitude().cmp(o.magnitude())
        }
        fn neg(&self) -> Ov<Self> {
            Ok(-self)
        }
        fn add(&self, o: &Self) -> Ov<Self> {
            Ok(self + o)
        }
        fn sub(&self, o: &Self) -> Ov<Self> {
            Ok(self - o)
        }
        fn mul(&self, o: &Self) -> Ov<Self> {
            Ok(self * o)
        }
        fn div_floor(&self, o: &Self) -> Ov<Self> {
            Ok(Integer::div_floor(self, o))
        }
        fn rem_euclid(&self, o: &Self) -> Ov<Self> {
            Ok(self.mod_floor(&o.abs()))
        }
        fn from_big(b: &BigInt) -> Option<Self> {
            Some(b.clone())
        }
        fn to_big(&self) -> BigInt {
            self.clone()
        }
    }

    pub(crate) struct EchelonOut<T> {
        pub e: Vec<Vec<T>>,
        pub pivots: Vec<usize>,
        pub u: Option<Vec<Vec<T>>>,
        pub uinv: Option<Vec<Vec<T>>>,
        pub det_sign: i32,
    }

    fn axpy_rows<T: Scalar>(m: &mut [Vec<T>], dst: usize, q: &T, src: usize) -> Ov<()> {
        // m[dst] -= q * m[src]
        let (a, b) = if dst < src {
            let (lo, hi) = m.split_at_mut(src);
            (&mut lo[dst], &hi[0])
        } else {
            let (lo, hi) = m.split_at_mut(dst);
            (&mut hi[0], &lo[src])
        };
        for (x, y) in a.iter_mut().zip(b.iter()) {
            if !y.s_is_zero() {
                *x = x.sub(&q.mul(y)?)?;
            }
        }
        Ok(())
    }

    fn negate_row<T: Scalar>(m: &mut [Vec<T>], i: usize) -> Ov<()> {
        for x in m[i].iter_mut() {
            if !x.s_is_zero() {
                *x = x.neg()?;
            }
        }
        Ok(())
    }

    fn col_axpy<T: Scalar>(m: &mut [Vec<T>], dst: usize, q: &T, src: usize) -> Ov<()> {
        // column dst += q * column src
        for row in m.iter_mut() {
            if !row[src].s_is_zero() {
                let t = q.mul(&row[src])?;
                row[dst] = row[dst].add(&t)?;
            }
        }
        Ok(())
    }

    fn identity_rows<T: Scalar>(n: usize) -> Vec<Vec<T>> {
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { T::s_one() } else { T::s_zero() }).collect())
            .collect()
    }

    /// Row echelon form via unimodular row operations, `u * a = e`.
    pub(crate) fn echelon<T: Scalar>(mut a: Vec<Vec<T>>, ncols: usize, track_u: bool, track_uinv: bool) -> Ov<EchelonOut<T>> {
        let m = a.len();
        let mut u = if track_u { Some(identity_rows::<T>(m)) } else { None };
        let mut uinv = if track_uinv { Some(identity_rows::<T>(m)) } else { None };
        let mut pivots = Vec::new();
        let mut det_sign = 1;
        let mut r = 0;
        for c in 0..ncols {
            if r == m {
                break;
            }
            loop {
                let mut p: Option<usize> = None;
                let mut count = 0;
                for i in r..m {
                    if !a[i][c].s_is_zero() {
                        count += 1;
                        match p {
                            None => p = Some(i),
                            Some(q) => {
                                if a[i][c].abs_cmp(&a[q][c]) == Ordering::Less {
                                    p = Some(i)
                                }
                            }
                        }
                    }
                }
                let Some(p) = p else { break };
                if count == 1 {
                    if p != r {
                        a.swap(p, r);
                        if let Some(u) = u.as_mut() {
                            u.swap(p, r);
                        }
                        if let Some(w) = uinv.as_mut() {
                            for row in w.iter_mut() {
                                row.swap(p, r);
                            }
                        }
                        det_sign = -det_sign;
                    }
                    if a[r][c].is_neg() {
                        negate_row(&mut a, r)?;
                        if let Some(u) = u.as_mut() {
                            negate_row(u, r)?;
                        }
                        if let Some(w) = uinv.as_mut() {
                            for row in w.iter_mut() {
                                if !row[r].s_is_zero() {
                                    row[r] = row[r].neg()?;
                                }
                            }
                        }
                        det_sign = -det_sign;
                    }
                    pivots.push(c);
                    r += 1;
                    break;
                }
                let piv = a[p][c].clone();
                for i in r..m {
                    if i == p || a[i][c].s_is_zero() {
                        continue;
                    }
                    let q = a[i][c].div_floor(&piv)?;
                    axpy_rows(&mut a, i, &q, p)?;
                    if let Some(u) = u.as_mut() {
                        axpy_rows(u, i, &q, p)?;
                    }
                    if let Some(w) = uinv.as_mut() {
                        col_axpy(w, p, &q, i)?;
                    }
                }
            }
        }
        Ok(EchelonOut { e: a, pivots, u, uinv, det_sign })
    }

    pub(crate) fn smith<T: Scalar>(a: Vec<Vec<T>>, nrows: usize, ncols: usize, track: bool) -> Ov<(Vec<T>, Option<Vec<Vec<T>>>, Option<Vec<Vec<T>>>)> {
        let mut a = a;
        let mut u = if track { Some(identity_rows::<T>(nrows)) } else { None };
        let mut v = if track { Some(identity_rows::<T>(ncols)) } else { None };
        let mut diag = Vec::new();
        let mut t = 0;
        while t < nrows.min(ncols) {
            // minimal absolute value pivot, ties to lowest row then column
            let mut best: Option<(usize, usize)> = None;
            for i in t..nrows {
                for j in t..ncols {
                    if a[i][j].s_is_zero() {
                        continue;
                    }
                    match best {
                        None => best = Some((i, j)),
                        Some((bi, bj)) => {
                            if a[i][j].abs_cmp(&a[bi][bj]) == Ordering::Less {
                                best = Some((i, j));
                            }
                        }
                    }
                }
            }
            let Some((pi, pj)) = best else { break };
            if pi != t {
                a.swap(pi, t);
                if let Some(u) = u.as_mut() {
                    u.swap(pi, t);
                }
            }
            if pj != t {
                for row in a.iter_mut() {
                    row.swap(pj, t);
                }
                if let Some(v) = v.as_mut() {
                    for row in v.iter_mut() {
                        row.swap(pj, t);
                    }
                }
            }
            loop {
                let piv = a[t][t].clone();
                let mut dirty = false;
                for i in t + 1..nrows {
                    if a[i][t].s_is_zero() {
                        continue;
                    }
                    let q = a[i][t].div_floor(&piv)?;
                    axpy_rows(&mut a, i, &q, t)?;
                    if let Some(u) = u.as_mut() {
                        axpy_rows(u, i, &q, t)?;
                    }
                    if !a[i][t].s_is_zero() {
                        dirty = true;
                    }
                }
                for j in t + 1..ncols {
                    if a[t][j].s_is_zero() {
                        continue;
                    }
                    let q = a[t][j].div_floor(&piv)?.neg()?;
                    col_axpy(&mut a, j, &q, t)?;
                    if let Some(v) = v.as_mut() {
                        col_axpy(v, j, &q, t)?;
                    }
                    if !a[t][j].s_is_zero() {
                        dirty = true;
                    }
                }
                if dirty {
                    // bring the new smallest entry of row t / column t to the corner
                    let mut bi = (t, t, a[t][t].clone());
                    for i in t + 1..nrows {
                        if !a[i][t].s_is_zero() && a[i][t].abs_cmp(&bi.2) == Ordering::Less {
                            bi = (i, t, a[i][t].clone());
                        }
                    }
                    for j in t + 1..ncols {
                        if !a[t][j].s_is_zero() && a[t][j].abs_cmp(&bi.2) == Ordering::Less {
                            bi = (t, j, a[t][j].clone());
                        }
                    }
                    if bi.0 != t {
                        a.swap(bi.0, t);
                        if let Some(u) = u.as_mut() {
                            u.swap(bi.0, t);
                        }
                    }
                    if bi.1 != t {
                        for row in a.iter_mut() {
                            row.swap(bi.1, t);
                        }
                        if let Some(v) = v.as_mut() {
                            for row in v.iter_mut() {
                                row.swap(bi.1, t);
                            }
                        }
                    }
                    continue;
                }
                // divisibility of the remaining block
                let mut bad: Option<usize> = None;
                'scan: for i in t + 1..nrows {
                    for j in t + 1..ncols {
                        if !a[i][j].rem_euclid(&piv)?.s_is_zero() {
                            bad = Some(i);
                            break 'scan;
                        }
                    }
                }
                match bad {
                    Some(i) => {
                        let one = T::s_one().neg()?;
                        axpy_rows(&mut a, t, &one, i)?;
                        if let Some(u) = u.as_mut() {
                            axpy_rows(u, t, &one, i)?;
                        }
                    }
                    None => break,
                }
            }
            if a[t][t].is_neg() {
                negate_row(&mut a, t)?;
                if let Some(u) = u.as_mut() {
                    negate_row(u, t)?;
                }
            }
            diag.push(a[t][t].clone());
            t += 1;
        }
        Ok((diag, u, v))
    }

}

use engine::{echelon, smith, Scalar};


#[derive(Clone, PartialEq, Eq, Hash)]
enum Data {
    Small(Vec<i64>),
    Big(Vec<BigInt>),
}

/// Dense row-major integer matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMat {
    rows: usize,
    cols: usize,
    data: Data,
}

impl IntMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMat { rows, cols, data: Data::Small(vec![0; rows * cols]) }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set_i64(i, i, 1);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        IntMat { rows: r, cols: c, data: Data::Small(data) }
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<i64>) -> Self {
        assert_eq!(data.len(), rows * cols, "flat data shape");
        IntMat { rows, cols, data: Data::Small(data) }
    }

    /// Matrix with the given shape; `rows` may be empty when `r == 0`.
    pub fn from_rows_shaped(r: usize, c: usize, rows: &[Vec<i64>]) -> Self {
        if r == 0 {
            return Self::zeros(0, c);
        }
        let m = Self::from_rows(rows);
        assert_eq!((m.rows, m.cols), (r, c));
        m
    }

    pub fn from_big_rows(r: usize, c: usize, rows: &[Vec<BigInt>]) -> Self {
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend(row.iter().cloned());
        }
        assert_eq!(data.len(), r * c);
        Self::from_big_vec(r, c, data)
    }

    pub fn from_cols(c: &[Vec<i64>], nrows: usize) -> Self {
        let mut m = Self::zeros(nrows, c.len());
        for (j, col) in c.iter().enumerate() {
            for (i, x) in col.iter().enumerate() {
                m.set_i64(i, j, *x);
            }
        }
        m
    }

    fn from_big_vec(r: usize, c: usize, data: Vec<BigInt>) -> Self {
        let small: Option<Vec<i64>> = data.iter().map(|x| x.to_i64()).collect();
        match small {
            Some(s) => IntMat { rows: r, cols: c, data: Data::Small(s) },
            None => IntMat { rows: r, cols: c, data: Data::Big(data) },
        }
    }

    fn from_scalar_rows<T: Scalar>(r: usize, c: usize, rows: &[Vec<T>]) -> Self {
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            for x in row {
                data.push(x.to_big());
            }
        }
        Self::from_big_vec(r, c, data)
    }

    fn to_scalar_rows<T: Scalar>(&self) -> Option<Vec<Vec<T>>> {
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut row = Vec::with_capacity(self.cols);
            for j in 0..self.cols {
                row.push(T::from_big(&self.get(i, j))?);
            }
            out.push(row);
        }
        Some(out)
    }

    fn small_rows(&self) -> Option<Vec<Vec<i64>>> {
        match &self.data {
            Data::Small(_) if self.cols == 0 => Some(vec![Vec::new(); self.rows]),
            Data::Small(v) => Some(v.chunks(self.cols).map(|c| c.to_vec()).collect()),
            Data::Big(_) => None,
        }
    }

    fn big_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j)).collect()).collect()
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> BigInt {
        match &self.data {
            Data::Small(v) => BigInt::from(v[i * self.cols + j]),
            Data::Big(v) => v[i * self.cols + j].clone(),
        }
    }

    pub fn get_i64(&self, i: usize, j: usize) -> Option<i64> {
        match &self.data {
            Data::Small(v) => Some(v[i * self.cols + j]),
            Data::Big(v) => v[i * self.cols + j].to_i64(),
        }
    }

    pub fn set(&mut self, i: usize, j: usize, x: BigInt) {
        let k = i * self.cols + j;
        match &mut self.data {
            Data::Small(v) => match x.to_i64() {
                Some(s) => v[k] = s,
                None => {
                    let mut b: Vec<BigInt> = v.iter().map(|&y| BigInt::from(y)).collect();
                    b[k] = x;
                    self.data = Data::Big(b);
                }
            },
            Data::Big(v) => v[k] = x,
        }
    }

    pub fn set_i64(&mut self, i: usize, j: usize, x: i64) {
        let k = i * self.cols + j;
        match &mut self.data {
            Data::Small(v) => v[k] = x,
            Data::Big(v) => v[k] = BigInt::from(x),
        }
    }

    pub fn is_small(&self) -> bool {
        matches!(self.data, Data::Small(_))
    }

    pub fn is_zero(&self) -> bool {
        match &self.data {
            Data::Small(v) => v.iter().all(|&x| x == 0),
            Data::Big(v) => v.iter().all(|x| Zero::is_zero(x)),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols && *self == Self::identity(self.rows)
    }

    pub fn transpose(&self) -> Self {
        match &self.data {
            Data::Small(v) => {
                let mut out = vec![0i64; v.len()];
                for i in 0..self.rows {
                    for j in 0..self.cols {
                        out[j * self.rows + i] = v[i * self.cols + j];
                    }
                }
                IntMat { rows: self.cols, cols: self.rows, data: Data::Small(out) }
            }
            Data::Big(v) => {
                let mut out = vec![BigInt::zero(); v.len()];
                for i in 0..self.rows {
                    for j in 0..self.cols {
                        out[j * self.rows + i] = v[i * self.cols + j].clone();
                    }
                }
                IntMat { rows: self.cols, cols: self.rows, data: Data::Big(out) }
            }
        }
    }

    pub fn mul(&self, o: &IntMat) -> IntMat {
        assert_eq!(self.cols, o.rows, "shape mismatch in product");
        if let (Data::Small(a), Data::Small(b)) = (&self.data, &o.data) {
            let mut out = vec![0i64; self.rows * o.cols];
            let mut ok = true;
            'outer: for i in 0..self.rows {
                let mut acc = vec![0i128; o.cols];
                for k in 0..self.cols {
                    let x = a[i * self.cols + k];
                    if x == 0 {
                        continue;
                    }
                    let brow = &b[k * o.cols..(k + 1) * o.cols];
                    for (j, &y) in brow.iter().enumerate() {
                        if y != 0 {
                            match acc[j].checked_add(x as i128 * y as i128) {
                                Some(v) => acc[j] = v,
                                None => {
                                    ok = false;
                                    break 'outer;
                                }
                            }
                        }
                    }
                }
                for j in 0..o.cols {
                    match i64::try_from(acc[j]) {
                        Ok(v) => out[i * o.cols + j] = v,
                        Err(_) => {
                            ok = false;
                            break 'outer;
                        }
                    }
                }
            }
            if ok {
                return IntMat { rows: self.rows, cols: o.cols, data: Data::Small(out) };
            }
        }
        let a = self.big_rows();
        let b = o.big_rows();
        let mut out = vec![BigInt::zero(); self.rows * o.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                if Zero::is_zero(&a[i][k]) {
                    continue;
                }
                for j in 0..o.cols {
                    if !Zero::is_zero(&b[k][j]) {
                        out[i * o.cols + j] += &a[i][k] * &b[k][j];
                    }
                }
            }
        }
        Self::from_big_vec(self.rows, o.cols, out)
    }

    fn zip(&self, o: &IntMat, f: impl Fn(&BigInt, &BigInt) -> BigInt) -> IntMat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "shape mismatch");
        let data: Vec<BigInt> = (0..self.rows)
            .flat_map(|i| (0..self.cols).map(move |j| (i, j)))
            .map(|(i, j)| f(&self.get(i, j), &o.get(i, j)))
            .collect();
        Self::from_big_vec(self.rows, self.cols, data)
    }

    pub fn add(&self, o: &IntMat) -> IntMat {
        if let (Data::Small(a), Data::Small(b)) = (&self.data, &o.data) {
            assert_eq!((self.rows, self.cols), (o.rows, o.cols), "shape mismatch");
            let v: Option<Vec<i64>> = a.iter().zip(b).map(|(x, y)| x.checked_add(*y)).collect();
            if let Some(v) = v {
                return IntMat { rows: self.rows, cols: self.cols, data: Data::Small(v) };
            }
        }
        self.zip(o, |x, y| x + y)
    }

    pub fn sub(&self, o: &IntMat) -> IntMat {
        if let (Data::Small(a), Data::Small(b)) = (&self.data, &o.data) {
            assert_eq!((self.rows, self.cols), (o.rows, o.cols), "shape mismatch");
            let v: Option<Vec<i64>> = a.iter().zip(b).map(|(x, y)| x.checked_sub(*y)).collect();
            if let Some(v) = v {
                return IntMat { rows: self.rows, cols: self.cols, data: Data::Small(v) };
            }
        }
        self.zip(o, |x, y| x - y)
    }

    pub fn neg(&self) -> IntMat {
        self.scale(&BigInt::from(-1))
    }

    pub fn scale(&self, s: &BigInt) -> IntMat {
        let data: Vec<BigInt> = (0..self.rows)
            .flat_map(|i| (0..self.cols).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, j) * s)
            .collect();
        Self::from_big_vec(self.rows, self.cols, data)
    }

    pub fn col(&self, j: usize) -> IntMat {
        self.select_cols(&[j])
    }

    pub fn row(&self, i: usize) -> IntMat {
        self.select_rows(&[i])
    }

    pub fn select_cols(&self, js: &[usize]) -> IntMat {
        let mut m = IntMat::zeros(self.rows, js.len());
        for i in 0..self.rows {
            for (k, &j) in js.iter().enumerate() {
                m.set(i, k, self.get(i, j));
            }
        }
        m
    }

    pub fn select_rows(&self, is: &[usize]) -> IntMat {
        let mut m = IntMat::zeros(is.len(), self.cols);
        for (k, &i) in is.iter().enumerate() {
            for j in 0..self.cols {
                m.set(k, j, self.get(i, j));
            }
        }
        m
    }

    pub fn col_range(&self, a: usize, b: usize) -> IntMat {
        self.select_cols(&(a..b).collect::<Vec<_>>())
    }

    pub fn row_range(&self, a: usize, b: usize) -> IntMat {
        self.select_rows(&(a..b).collect::<Vec<_>>())
    }

    pub fn hstack(parts: &[&IntMat]) -> IntMat {
        let rows = parts.first().map_or(0, |p| p.rows);
        let cols: usize = parts.iter().map(|p| p.cols).sum();
        let mut m = IntMat::zeros(rows, cols);
        let mut off = 0;
        for p in parts {
            assert_eq!(p.rows, rows, "hstack shape");
            for i in 0..rows {
                for j in 0..p.cols {
                    m.set(i, off + j, p.get(i, j));
                }
            }
            off += p.cols;
        }
        m
    }

    pub fn vstack(parts: &[&IntMat]) -> IntMat {
        let cols = parts.first().map_or(0, |p| p.cols);
        let rows: usize = parts.iter().map(|p| p.rows).sum();
        let mut m = IntMat::zeros(rows, cols);
        let mut off = 0;
        for p in parts {
            assert_eq!(p.cols, cols, "vstack shape");
            for i in 0..p.rows {
                for j in 0..cols {
                    m.set(off + i, j, p.get(i, j));
                }
            }
            off += p.rows;
        }
        m
    }

    pub fn block_diag(parts: &[&IntMat]) -> IntMat {
        let rows: usize = parts.iter().map(|p| p.rows).sum();
        let cols: usize = parts.iter().map(|p| p.cols).sum();
        let mut m = IntMat::zeros(rows, cols);
        let (mut ro, mut co) = (0, 0);
        for p in parts {
            for i in 0..p.rows {
                for j in 0..p.cols {
                    m.set(ro + i, co + j, p.get(i, j));
                }
            }
            ro += p.rows;
            co += p.cols;
        }
        m
    }

    pub fn kron(&self, o: &IntMat) -> IntMat {
        let mut m = IntMat::zeros(self.rows * o.rows, self.cols * o.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if Zero::is_zero(&a) {
                    continue;
                }
                for k in 0..o.rows {
                    for l in 0..o.cols {
                        m.set(i * o.rows + k, j * o.cols + l, &a * o.get(k, l));
                    }
                }
            }
        }
        m
    }

    pub fn to_i64_rows(&self) -> Option<Vec<Vec<i64>>> {
        self.to_scalar_rows::<i64>()
    }

    /// Entries reduced modulo `p` into `0..p`.
    pub fn mod_p(&self, p: u64) -> Vec<Vec<u64>> {
        let pb = BigInt::from(p);
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self.get(i, j).mod_floor(&pb).to_u64().unwrap())
                    .collect()
            })
            .collect()
    }

    pub fn max_abs_bits(&self) -> u64 {
        let mut best = 0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                best = best.max(self.get(i, j).bits());
            }
        }
        best
    }
}

impl fmt::Debug for IntMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntMat{}x{}[", self.rows, self.cols)?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
        }
        write!(f, "]")
    }
}

impl fmt::Display for IntMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "[{}]", row.join(" "))?;
        }
        Ok(())
    }
}

impl Serialize for IntMat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<serde_json::Value>> = (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| match self.get_i64(i, j) {
                        Some(v) => serde_json::Value::from(v),
                        None => serde_json::Value::from(self.get(i, j).to_string()),
                    })
                    .collect()
            })
            .collect();
        let v = serde_json::json!({ "rows": self.rows, "cols": self.cols, "data": rows });
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntMat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let v = serde_json::Value::deserialize(d)?;
        let r = v["rows"].as_u64().ok_or_else(|| D::Error::custom("rows"))? as usize;
        let c = v["cols"].as_u64().ok_or_else(|| D::Error::custom("cols"))? as usize;
        let data = v["data"].as_array().ok_or_else(|| D::Error::custom("data"))?;
        let mut rows = Vec::new();
        for row in data {
            let row = row.as_array().ok_or_else(|| D::Error::custom("row"))?;
            let mut out = Vec::new();
            for x in row {
                let b = match x {
                    serde_json::Value::Number(n) => {
                        BigInt::from(n.as_i64().ok_or_else(|| D::Error::custom("entry"))?)
                    }
                    serde_json::Value::String(s) => {
                        s.parse::<BigInt>().map_err(|_| D::Error::custom("entry"))?
                    }
                    _ => return Err(D::Error::custom("entry")),
                };
                out.push(b);
            }
            if out.len() != c {
                return Err(D::Error::custom("ragged"));
            }
            rows.push(out);
        }
        if rows.len() != r {
            return Err(D::Error::custom("row count"));
        }
        Ok(IntMat::from_big_rows(r, c, &rows))
    }
}

/// `u * a * v = diag(d)` with `u`, `v` unimodular and `d[i] | d[i+1]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SmithForm {
    pub u: IntMat,
    pub v: IntMat,
    pub d: Vec<BigInt>,
    pub rank: usize,
}

/// Finite abelian group data: torsion coefficients above 1 in divisor chain order plus free rank.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AbelianInvariants {
    #[serde(with = "int_list")]
    pub torsion: Vec<BigInt>,
    pub free_rank: usize,
}

impl AbelianInvariants {
    pub fn trivial() -> Self {
        AbelianInvariants { torsion: vec![], free_rank: 0 }
    }

    pub fn cyclic(n: i64) -> Self {
        Self::from_orders(&[n])
    }

    /// Normalizes any list of cyclic orders into invariant factor form.
    pub fn from_orders(orders: &[i64]) -> Self {
        let mut m = IntMat::zeros(orders.len(), orders.len());
        for (i, &o) in orders.iter().enumerate() {
            m.set_i64(i, i, o);
        }
        cokernel_invariants(&m)
    }

    pub fn is_trivial(&self) -> bool {
        self.torsion.is_empty() && self.free_rank == 0
    }

    pub fn is_finite(&self) -> bool {
        self.free_rank == 0
    }

    pub fn order(&self) -> Option<BigInt> {
        if self.free_rank > 0 {
            return None;
        }
        Some(self.torsion.iter().fold(BigInt::one(), |a, b| a * b))
    }

    /// Whether the group contains an element of order `n`.
    pub fn has_element_of_order(&self, n: i64) -> bool {
        if n == 1 {
            return true;
        }
        if self.free_rank > 0 {
            return false;
        }
        let n = BigInt::from(n);
        // an element of order n exists iff n divides the exponent
        self.torsion.last().is_some_and(|e| (e % &n).is_zero())
    }
}

impl fmt::Display for AbelianInvariants {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.torsion.iter().map(|t| format!("Z/{t}")).collect();
        if self.free_rank > 0 {
            parts.push(if self.free_rank == 1 { "Z".into() } else { format!("Z^{}", self.free_rank) });
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// Integers as JSON numbers, falling back to decimal strings beyond `i64`.
mod int_list {
    use num_bigint::BigInt;
    use num_traits::ToPrimitive;
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Num {
        Small(i64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        let xs: Vec<Num> = v.iter().map(|x| x.to_i64().map_or_else(|| Num::Text(x.to_string()), Num::Small)).collect();
        xs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        let xs = Vec::<Num>::deserialize(d)?;
        xs.into_iter()
            .map(|x| match x {
                Num::Small(i) => Ok(BigInt::from(i)),
                Num::Text(t) => t.parse().map_err(D::Error::custom),
            })
            .collect()
    }
}

macro_rules! with_fallback {
    ($m:expr, |$rows:ident : $t:ident| $body:expr) => {{
        let fast = match $m.small_rows() {
            Some($rows) => {
                type $t = i64;
                ($body).ok()
            }
            None => None,
        };
        match fast {
            Some(x) => x,
            None => {
                let $rows = $m.big_rows();
                type $t = BigInt;
                ($body).expect("bigint arithmetic cannot overflow")
            }
        }
    }};
}

pub fn smith_normal_form(a: &IntMat) -> SmithForm {
    let (r, c) = (a.nrows(), a.ncols());
    let (d, u, v) = with_fallback!(a, |rows: T| smith::<T>(rows, r, c, true).map(|(d, u, v)| {
        let d: Vec<BigInt> = d.iter().map(|x| x.to_big()).collect();
        (d, IntMat::from_scalar_rows(r, r, &u.unwrap()), IntMat::from_scalar_rows(c, c, &v.unwrap()))
    }));
    let rank = d.len();
    SmithForm { u, v, d, rank }
}

/// Smith diagonal without transforms.
pub fn smith_diagonal(a: &IntMat) -> Vec<BigInt> {
    let (r, c) = (a.nrows(), a.ncols());
    with_fallback!(a, |rows: T| smith::<T>(rows, r, c, false)
        .map(|(d, _, _)| d.iter().map(|x| x.to_big()).collect::<Vec<BigInt>>()))
}

/// Reusable row echelon data for the transpose of a matrix `a`.
///
/// `u * a^T = e`, so the rows of `u` past the rank span the kernel of `a`.
#[derive(Clone, Debug)]
pub struct Echelon {
    nrows_a: usize,
    pivots: Vec<usize>,
    e: IntMat,
    u: IntMat,
    uinv: Option<IntMat>,
    det_sign: i32,
}

impl Echelon {
    pub fn new(a: &IntMat) -> Self {
        Self::build(a, false)
    }

    pub fn with_inverse(a: &IntMat) -> Self {
        Self::build(a, true)
    }

    fn build(a: &IntMat, inv: bool) -> Self {
        let at = a.transpose();
        let (m, n) = (at.nrows(), at.ncols());
        let (e, pivots, u, uinv, det_sign) = with_fallback!(at, |rows: T| echelon::<T>(rows, n, true, inv).map(|o| {
            (
                IntMat::from_scalar_rows(m, n, &o.e),
                o.pivots,
                IntMat::from_scalar_rows(m, m, &o.u.unwrap()),
                o.uinv.map(|w| IntMat::from_scalar_rows(m, m, &w)),
                o.det_sign,
            )
        }));
        Echelon { nrows_a: a.nrows(), pivots, e, u, uinv, det_sign }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Saturated kernel basis of `a` as columns.
    pub fn kernel(&self) -> IntMat {
        let n = self.u.nrows();
        self.u.row_range(self.rank(), n).transpose()
    }

    /// Coordinates of `x` (a vector in the kernel) with respect to `kernel()`.
    pub fn kernel_coords(&self, x: &IntMat) -> IntMat {
        let uinv = self.uinv.as_ref().expect("echelon built without inverse");
        // x = u^T y, so y = uinv^T x
        let y = uinv.transpose().mul(x);
        y.row_range(self.rank(), self.u.nrows())
    }

    /// Solves `a x = b` columnwise; `None` if some column has no integer solution.
    pub fn solve(&self, b: &IntMat) -> Option<IntMat> {
        assert_eq!(b.nrows(), self.nrows_a, "rhs shape");
        let n = self.u.nrows();
        let k = self.rank();
        let mut x = IntMat::zeros(n, b.ncols());
        for col in 0..b.ncols() {
            let mut rhs: Vec<BigInt> = (0..b.nrows()).map(|i| b.get(i, col)).collect();
            let mut y = vec![BigInt::zero(); k];
            for (t, &p) in self.pivots.iter().enumerate() {
                let piv = self.e.get(t, p);
                let (q, r) = rhs[p].div_mod_floor(&piv);
                if !r.is_zero() {
                    return None;
                }
                if !q.is_zero() {
                    for j in p..self.e.ncols() {
                        let ej = self.e.get(t, j);
                        if !ej.is_zero() {
                            rhs[j] -= &q * ej;
                        }
                    }
                }
                y[t] = q;
            }
            if rhs.iter().any(|v| !v.is_zero()) {
                return None;
            }
            for (t, yt) in y.iter().enumerate() {
                if yt.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let uj = self.u.get(t, j);
                    if !uj.is_zero() {
                        let cur = x.get(j, col);
                        x.set(j, col, cur + yt * uj);
                    }
                }
            }
        }
        Some(x)
    }

    /// Determinant of a square `a`.
    pub fn determinant(&self) -> BigInt {
        let n = self.u.nrows();
        if self.rank() < n {
            return BigInt::zero();
        }
        let mut d = BigInt::from(self.det_sign);
        for (t, &p) in self.pivots.iter().enumerate() {
            d *= self.e.get(t, p);
        }
        d
    }
}

/// Saturated basis (columns) of `{x : a x = 0}`.
pub fn kernel_basis(a: &IntMat) -> IntMat {
    Echelon::new(a).kernel()
}

/// Some integer `x` with `a x = b`, or `None`.
pub fn solve_integer(a: &IntMat, b: &IntMat) -> Option<IntMat> {
    Echelon::new(a).solve(b)
}

pub fn rank(a: &IntMat) -> usize {
    Echelon::new(a).rank()
}

pub fn determinant(a: &IntMat) -> BigInt {
    assert_eq!(a.nrows(), a.ncols(), "determinant of non-square matrix");
    if a.nrows() == 0 {
        return BigInt::one();
    }
    Echelon::new(a).determinant()
}

/// Invariants of `Z^m / (column span of a)`.
pub fn cokernel_invariants(a: &IntMat) -> AbelianInvariants {
    let m = a.nrows();
    if a.ncols() == 0 || m == 0 {
        return AbelianInvariants { torsion: vec![], free_rank: m };
    }
    // column operations preserve the span, so compress to rank columns first
    let ech = Echelon::new(a);
    let k = ech.rank();
    let compressed = ech.e.row_range(0, k);
    // then row operations on the m x k matrix bring it to a k x k block
    let rows_e = Echelon::new(&compressed);
    let block = rows_e.e.row_range(0, rows_e.rank()).transpose();
    let d = smith_diagonal(&block);
    let torsion: Vec<BigInt> = d.into_iter().filter(|x| !x.is_one()).collect();
    AbelianInvariants { torsion, free_rank: m - k }
}

/// Invariants of `span(sub) ⊆ span(sup)` quotient when `sup` has independent columns
/// and contains every column of `sub`.
pub fn quotient_invariants(sup: &IntMat, sub: &IntMat) -> Option<AbelianInvariants> {
    let coords = if sub.ncols() == 0 {
        IntMat::zeros(sup.ncols(), 0)
    } else {
        solve_integer(sup, sub)?
    };
    Some(cokernel_invariants(&coords))
}

/// Column basis of the lattice spanned by the columns of `a`.
pub fn column_span_basis(a: &IntMat) -> IntMat {
    let ech = Echelon::new(a);
    ech.e.row_range(0, ech.rank()).transpose()
}

/// Index `[span(sup) : span(sub)]` for lattices of equal rank, with `sub ⊆ sup`.
pub fn lattice_index(sup: &IntMat, sub: &IntMat) -> Option<BigInt> {
    let q = quotient_invariants(&column_span_basis(sup), &column_span_basis(sub))?;
    q.order()
}

/// Whether the columns of two matrices span the same lattice.
pub fn same_span(a: &IntMat, b: &IntMat) -> bool {
    let ea = Echelon::new(a);
    let eb = Echelon::new(b);
    ea.solve(b).is_some() && eb.solve(a).is_some()
}

/// Inverse of a unimodular matrix.
pub fn unimodular_inverse(a: &IntMat) -> Option<IntMat> {
    let n = a.nrows();
    if n != a.ncols() {
        return None;
    }
    let x = solve_integer(a, &IntMat::identity(n))?;
    Some(x)
}

/// Rank of a matrix over `F_p`.
pub fn rank_mod_p(a: &[Vec<u64>], p: u64) -> usize {
    let mut m: Vec<Vec<u64>> = a.to_vec();
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..rows).find(|&i| m[i][c] % p != 0) else { continue };
        m.swap(piv, r);
        let inv = mod_inverse(m[r][c] % p, p);
        for x in m[r].iter_mut() {
            *x = (*x % p) * inv % p;
        }
        for i in 0..rows {
            if i != r && m[i][c] % p != 0 {
                let f = m[i][c] % p;
                for j in 0..cols {
                    let sub = f * m[r][j] % p;
                    m[i][j] = (m[i][j] % p + p - sub) % p;
                }
            }
        }
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

/// Basis of the kernel of a matrix over `F_p`, as vectors.
pub fn kernel_mod_p(a: &[Vec<u64>], ncols: usize, p: u64) -> Vec<Vec<u64>> {
    let mut m: Vec<Vec<u64>> = a.iter().map(|r| r.iter().map(|x| x % p).collect()).collect();
    let rows = m.len();
    let mut pivcols = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(piv) = (r..rows).find(|&i| m[i][c] != 0) else { continue };
        m.swap(piv, r);
        let inv = mod_inverse(m[r][c], p);
        for x in m[r].iter_mut() {
            *x = *x * inv % p;
        }
        for i in 0..rows {
            if i != r && m[i][c] != 0 {
                let f = m[i][c];
                for j in 0..ncols {
                    let sub = f * m[r][j] % p;
                    m[i][j] = (m[i][j] + p - sub) % p;
                }
            }
        }
        pivcols.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    let free: Vec<usize> = (0..ncols).filter(|c| !pivcols.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![0u64; ncols];
            v[f] = 1;
            for (t, &pc) in pivcols.iter().enumerate() {
                v[pc] = (p - m[t][f]) % p;
            }
            v
        })
        .collect()
}

pub fn mod_inverse(a: u64, p: u64) -> u64 {
    let (mut t, mut nt, mut r, mut nr) = (0i128, 1i128, p as i128, a as i128);
    while nr != 0 {
        let q = r / nr;
        (t, nt) = (nt, t - q * nt);
        (r, nr) = (nr, r - q * nr);
    }
    assert_eq!(r, 1, "not invertible mod p");
    t.rem_euclid(p as i128) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Signed;

    fn m(rows: &[&[i64]]) -> IntMat {
        IntMat::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    #[test]
    fn snf_of_textbook_matrix() {
        // hand-computed: diag(2, 6, 12)
        let a = m(&[&[2, 4, 4], &[-6, 6, 12], &[10, -4, -16]]);
        let s = smith_normal_form(&a);
        assert_eq!(s.d, vec![BigInt::from(2), BigInt::from(6), BigInt::from(12)]);
        let prod = s.u.mul(&a).mul(&s.v);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { s.d[i].clone() } else { BigInt::zero() };
                assert_eq!(prod.get(i, j), want);
            }
        }
        assert!(determinant(&s.u).abs().is_one());
        assert!(determinant(&s.v).abs().is_one());
    }

    #[test]
    fn cokernel_of_diagonal() {
        let a = m(&[&[4, 0], &[0, 6]]);
        let inv = cokernel_invariants(&a);
        assert_eq!(inv.torsion, vec![BigInt::from(2), BigInt::from(12)]);
        assert_eq!(inv.free_rank, 0);
    }

    #[test]
    fn kernel_is_saturated() {
        let a = m(&[&[2, 4]]);
        let k = kernel_basis(&a);
        assert_eq!(k.ncols(), 1);
        let (x, y) = (k.get(0, 0), k.get(1, 0));
        assert_eq!(x.abs(), BigInt::from(2));
        assert_eq!(y.abs(), BigInt::one());
    }

    #[test]
    fn solve_respects_integrality() {
        let a = m(&[&[2, 0], &[0, 3]]);
        assert!(solve_integer(&a, &m(&[&[4], &[9]])).is_some());
        assert!(solve_integer(&a, &m(&[&[1], &[0]])).is_none());
    }

    #[test]
    fn overflow_falls_back_to_bigint() {
        let big = i64::MAX / 2;
        let a = m(&[&[big, big - 1], &[big - 1, big - 2]]);
        // det = big(big-2) - (big-1)^2 = -1
        assert_eq!(determinant(&a), BigInt::from(-1));
        let s = smith_normal_form(&a);
        assert_eq!(s.d, vec![BigInt::one(), BigInt::one()]);
    }

    #[test]
    fn kernel_coords_round_trip() {
        let a = m(&[&[1, 1, 1, 1], &[0, 1, 2, 3]]);
        let e = Echelon::with_inverse(&a);
        let k = e.kernel();
        let x = k.col(0).scale(&BigInt::from(3)).add(&k.col(1));
        let c = e.kernel_coords(&x);
        assert_eq!(k.mul(&c), x);
    }

    #[test]
    fn mod_p_rank_and_kernel() {
        let a = vec![vec![1, 2, 3], vec![2, 4, 6]];
        assert_eq!(rank_mod_p(&a, 5), 1);
        let k = kernel_mod_p(&a, 3, 5);
        assert_eq!(k.len(), 2);
        for v in &k {
            let s: u64 = v.iter().zip(&a[0]).map(|(x, y)| x * y).sum();
            assert_eq!(s % 5, 0);
        }
    }
}
