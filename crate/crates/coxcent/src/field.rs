//! Exact arithmetic in the real cyclotomic field `Q(θ)`, `θ = 2cos(π/N)`.
//!
//! Elements are stored as a common denominator over a vector of integer
//! numerators, one per power of `θ` below the degree of the minimal
//! polynomial. Entries of the geometric representation are algebraic
//! integers, so the denominator is almost always 1 and multiplication never
//! has to compute a gcd in the hot path.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Default bound on `N`.
pub const DEFAULT_MAX_N: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("field too large: N = {n} exceeds the bound {bound}")]
    TooLarge { n: u64, bound: u64 },
    #[error("bond label {0} is not a finite label >= 2")]
    InvalidLabel(u64),
    #[error("2cos(pi/{m}) does not lie in Q(2cos(pi/{n}))")]
    NotEmbedded { m: u64, n: u64 },
    #[error("division by zero")]
    DivisionByZero,
}

/// The field `Q(2cos(π/N))` together with an isolating interval for `θ`.
#[derive(Clone, Debug)]
pub struct FieldSpec {
    n: u64,
    /// Monic minimal polynomial, lowest degree first; `minpoly.len() = degree + 1`.
    minpoly: Vec<BigInt>,
    lo: BigRational,
    hi: BigRational,
    approx: f64,
}

/// An element of `Q(θ)` in canonical form: `den > 0`, `gcd(num..., den) = 1`,
/// and `num.len()` equals the field degree.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct FieldElement {
    num: Vec<BigInt>,
    den: BigInt,
}

fn gcd_u64(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

#[cfg(test)]
fn euler_phi(mut n: u64) -> u64 {
    let mut result = n;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            while n.is_multiple_of(p) {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

/// Integer polynomial helpers (lowest degree first).
fn poly_trim(p: &mut Vec<BigInt>) {
    while p.len() > 1 && p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

/// Multiply by `x^k - 1`.
fn poly_mul_xk_minus_1(p: &[BigInt], k: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); p.len() + k];
    for (i, c) in p.iter().enumerate() {
        out[i + k] += c;
        out[i] -= c;
    }
    out
}

/// Exact division by `x^k - 1`; the caller guarantees divisibility.
fn poly_div_xk_minus_1(p: &[BigInt], k: usize) -> Vec<BigInt> {
    // p = q (x^k - 1)  =>  q_i = q_{i-k} - p_i, processed from the low end.
    let deg = p.len() - 1;
    let qdeg = deg - k;
    let mut q = vec![BigInt::zero(); qdeg + 1];
    for i in 0..=qdeg {
        let prev = if i >= k { q[i - k].clone() } else { BigInt::zero() };
        q[i] = prev - &p[i];
    }
    q
}

fn mobius(mut n: u64) -> i32 {
    let mut result = 1;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            result = -result;
        }
        p += 1;
    }
    if n > 1 {
        result = -result;
    }
    result
}

/// The `n`-th cyclotomic polynomial via `Φ_n = Π_{d|n} (x^{n/d} - 1)^{μ(d)}`.
pub(crate) fn cyclotomic(n: u64) -> Vec<BigInt> {
    let mut num = vec![BigInt::one()];
    let mut dens = Vec::new();
    for d in 1..=n {
        if !n.is_multiple_of(d) {
            continue;
        }
        let k = (n / d) as usize;
        match mobius(d) {
            1 => num = poly_mul_xk_minus_1(&num, k),
            -1 => dens.push(k),
            _ => {}
        }
    }
    for k in dens {
        num = poly_div_xk_minus_1(&num, k);
    }
    poly_trim(&mut num);
    num
}

/// Vieta–Lucas polynomials `V_k` with `V_k(z + 1/z) = z^k + z^{-k}`.
fn vieta_lucas(k: usize) -> Vec<BigInt> {
    let mut prev = vec![BigInt::from(2)];
    if k == 0 {
        return prev;
    }
    let mut cur = vec![BigInt::zero(), BigInt::one()];
    for _ in 1..k {
        let mut next = vec![BigInt::zero(); cur.len() + 1];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Minimal polynomial of `2cos(π/n)`.
pub(crate) fn minpoly_2cos(n: u64) -> Vec<BigInt> {
    if n == 1 {
        return vec![BigInt::from(2), BigInt::one()];
    }
    let cyc = cyclotomic(2 * n);
    let d = (cyc.len() - 1) / 2;
    let mut out = vec![BigInt::zero(); d + 1];
    out[0] = cyc[d].clone();
    for k in 1..=d {
        let c = &cyc[d + k];
        if c.is_zero() {
            continue;
        }
        for (i, v) in vieta_lucas(k).iter().enumerate() {
            out[i] += c * v;
        }
    }
    out
}

/// Sign of `p(x)` by homogeneous integer evaluation (no gcds).
fn sign_at(p: &[BigInt], x: &BigRational) -> i32 {
    let (a, b) = (x.numer(), x.denom());
    let mut acc = BigInt::zero();
    let mut bpow = BigInt::one();
    for c in p.iter().rev() {
        acc = acc * a + c * &bpow;
        bpow *= b;
    }
    // acc = b^{deg} p(x) up to a positive factor b^{len-1-deg}
    sign_of(&acc)
}

#[cfg(test)]
fn rat_poly(p: &[BigInt]) -> Vec<BigRational> {
    p.iter().map(|c| BigRational::from_integer(c.clone())).collect()
}

#[cfg(test)]
fn rpoly_trim(p: &mut Vec<BigRational>) {
    while p.len() > 1 && p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

#[cfg(test)]
fn rpoly_deriv(p: &[BigRational]) -> Vec<BigRational> {
    if p.len() <= 1 {
        return vec![BigRational::zero()];
    }
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
        .collect()
}

#[cfg(test)]
fn rpoly_rem(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lead = b[db].clone();
    while r.len() > db && !(r.len() == 1 && r[0].is_zero()) {
        let dr = r.len() - 1;
        let q = &r[dr] / &lead;
        for (i, c) in b.iter().enumerate() {
            r[dr - db + i] = &r[dr - db + i] - &q * c;
        }
        r.pop();
        rpoly_trim(&mut r);
        if r.len() <= db {
            break;
        }
    }
    rpoly_trim(&mut r);
    r
}

fn reval(p: &[BigRational], x: &BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    for c in p.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Number of distinct real roots of `p` in `(lo, hi]` by Sturm's theorem.
#[cfg(test)]
fn sturm_count(p: &[BigInt], lo: &BigRational, hi: &BigRational) -> usize {
    let mut seq = vec![rat_poly(p)];
    seq.push(rpoly_deriv(&seq[0]));
    loop {
        let n = seq.len();
        let last = &seq[n - 1];
        if last.len() == 1 {
            break;
        }
        let r = rpoly_rem(&seq[n - 2], last);
        if r.len() == 1 && r[0].is_zero() {
            break;
        }
        seq.push(r.into_iter().map(|c| -c).collect());
    }
    let changes = |x: &BigRational| {
        let signs: Vec<i32> = seq
            .iter()
            .map(|q| {
                let v = reval(q, x);
                if v.is_positive() {
                    1
                } else if v.is_negative() {
                    -1
                } else {
                    0
                }
            })
            .filter(|s| *s != 0)
            .collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count()
    };
    changes(lo).saturating_sub(changes(hi))
}

fn rat_sign(x: &BigRational) -> i32 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

impl FieldSpec {
    /// Builds the field for a set of finite bond labels with the default bound.
    pub fn build<I: IntoIterator<Item = u64>>(labels: I) -> Result<Self, FieldError> {
        Self::build_with_bound(labels, DEFAULT_MAX_N)
    }

    /// Builds the field for a set of finite bond labels.
    ///
    /// Labels 2 and 3 have rational cosines and do not contribute to `N`.
    pub fn build_with_bound<I: IntoIterator<Item = u64>>(
        labels: I,
        bound: u64,
    ) -> Result<Self, FieldError> {
        let mut n: u64 = 1;
        for m in labels {
            if m < 2 {
                return Err(FieldError::InvalidLabel(m));
            }
            if m <= 3 {
                continue;
            }
            let g = gcd_u64(n, m);
            n = (n / g)
                .checked_mul(m)
                .ok_or(FieldError::TooLarge { n: u64::MAX, bound })?;
            if n > bound {
                return Err(FieldError::TooLarge { n, bound });
            }
        }
        Ok(Self::for_n(n))
    }

    /// The field `Q(2cos(π/n))`.
    pub fn for_n(n: u64) -> Self {
        assert!(n >= 1);
        let minpoly = minpoly_2cos(n);
        let approx = 2.0 * (std::f64::consts::PI / n as f64).cos();
        let degree = minpoly.len() - 1;
        if degree == 1 {
            // θ = -minpoly[0] exactly.
            let theta = BigRational::from_integer(-minpoly[0].clone());
            return FieldSpec {
                n,
                minpoly,
                lo: theta.clone(),
                hi: theta,
                approx,
            };
        }
        // The other roots are 2cos(jπ/n) with odd j >= 3, so a quarter of this gap isolates θ.
        let gap = approx - 2.0 * (3.0 * std::f64::consts::PI / n as f64).cos();
        let delta = gap / 4.0;
        let mut lo = BigRational::from_float(approx - delta).expect("finite");
        let mut hi = BigRational::from_float(approx + delta).expect("finite");
        let slo = sign_at(&minpoly, &lo);
        assert!(slo != 0 && slo != sign_at(&minpoly, &hi));
        let width_target = BigRational::new(BigInt::one(), BigInt::one() << 64u32);
        while &hi - &lo > width_target {
            let mid = (&lo + &hi) / BigRational::from_integer(BigInt::from(2));
            let s = sign_at(&minpoly, &mid);
            if s == 0 {
                lo = mid.clone();
                hi = mid;
                break;
            }
            if s == slo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        FieldSpec {
            n,
            minpoly,
            lo,
            hi,
            approx,
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.minpoly.len() - 1
    }

    /// Monic minimal polynomial of `θ`, lowest degree first.
    pub fn minpoly(&self) -> &[BigInt] {
        &self.minpoly
    }

    pub fn isolating_interval(&self) -> (BigRational, BigRational) {
        (self.lo.clone(), self.hi.clone())
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement {
            num: vec![BigInt::zero(); self.degree()],
            den: BigInt::one(),
        }
    }

    pub fn one(&self) -> FieldElement {
        self.from_int(1)
    }

    pub fn from_int(&self, k: i64) -> FieldElement {
        self.from_bigint(BigInt::from(k))
    }

    pub fn from_bigint(&self, k: BigInt) -> FieldElement {
        let mut e = self.zero();
        e.num[0] = k;
        e
    }

    pub fn from_rational(&self, q: &BigRational) -> FieldElement {
        let mut e = self.zero();
        e.num[0] = q.numer().clone();
        e.den = q.denom().clone();
        e.normalize();
        e
    }

    /// Element from rational coefficients of `1, θ, θ², …`; reduced mod minpoly.
    pub fn from_coeffs(&self, coeffs: &[BigRational]) -> FieldElement {
        let den = coeffs
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let mut num: Vec<BigInt> = coeffs
            .iter()
            .map(|c| c.numer() * (&den / c.denom()))
            .collect();
        self.reduce(&mut num);
        let mut e = FieldElement { num, den };
        e.normalize();
        e
    }

    pub fn theta(&self) -> FieldElement {
        if self.degree() == 1 {
            return self.from_bigint(-self.minpoly[0].clone());
        }
        let mut e = self.zero();
        e.num[1] = BigInt::one();
        e
    }

    fn reduce(&self, p: &mut Vec<BigInt>) {
        let d = self.degree();
        while p.len() > d {
            let k = p.len() - 1;
            let c = p.pop().expect("nonempty");
            if !c.is_zero() {
                for j in 0..d {
                    let m = &self.minpoly[j];
                    if !m.is_zero() {
                        p[k - d + j] -= &c * m;
                    }
                }
            }
        }
        p.resize(d, BigInt::zero());
    }

    pub fn mul(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        if b.is_rational() {
            return a.scale(&b.num[0], &b.den);
        }
        if a.is_rational() {
            return b.scale(&a.num[0], &a.den);
        }
        let d = self.degree();
        let mut prod = vec![BigInt::zero(); 2 * d - 1];
        for (i, x) in a.num.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.num.iter().enumerate() {
                if !y.is_zero() {
                    prod[i + j] += x * y;
                }
            }
        }
        self.reduce(&mut prod);
        let mut e = FieldElement {
            num: prod,
            den: &a.den * &b.den,
        };
        e.normalize();
        e
    }

    /// Multiplicative inverse by solving the linear system of multiplication by `a`.
    pub fn inv(&self, a: &FieldElement) -> Result<FieldElement, FieldError> {
        if a.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        let d = self.degree();
        // Column j = a·θ^j; solve M c = e_0 over Q.
        let mut cols = Vec::with_capacity(d);
        let mut basis = self.one();
        for _ in 0..d {
            cols.push(self.mul(a, &basis).coeffs());
            basis = self.mul(&basis, &self.theta_power_one());
        }
        let mut m: Vec<Vec<BigRational>> = (0..d)
            .map(|i| {
                let mut row: Vec<BigRational> = (0..d).map(|j| cols[j][i].clone()).collect();
                row.push(if i == 0 {
                    BigRational::one()
                } else {
                    BigRational::zero()
                });
                row
            })
            .collect();
        for col in 0..d {
            let piv = (col..d)
                .find(|&r| !m[r][col].is_zero())
                .ok_or(FieldError::DivisionByZero)?;
            m.swap(col, piv);
            let p = m[col][col].clone();
            for x in m[col].iter_mut() {
                *x = &*x / &p;
            }
            for r in 0..d {
                if r != col && !m[r][col].is_zero() {
                    let f = m[r][col].clone();
                    for c in 0..=d {
                        let v = &m[col][c] * &f;
                        m[r][c] = &m[r][c] - v;
                    }
                }
            }
        }
        let sol: Vec<BigRational> = (0..d).map(|r| m[r][d].clone()).collect();
        Ok(self.from_coeffs(&sol))
    }

    /// `θ` when the degree exceeds one, otherwise `1` (used as a basis step).
    fn theta_power_one(&self) -> FieldElement {
        if self.degree() == 1 {
            self.one()
        } else {
            self.theta()
        }
    }

    pub fn div(&self, a: &FieldElement, b: &FieldElement) -> Result<FieldElement, FieldError> {
        Ok(self.mul(a, &self.inv(b)?))
    }

    /// `2cos(π/m)` as an element of the field.
    pub fn embed_cos(&self, m: u64) -> Result<FieldElement, FieldError> {
        match m {
            0 => Err(FieldError::InvalidLabel(0)),
            1 => Ok(self.from_int(-2)),
            2 => Ok(self.zero()),
            3 => Ok(self.one()),
            _ if !self.n.is_multiple_of(m) => Err(FieldError::NotEmbedded { m, n: self.n }),
            _ => {
                // 2cos(kπ/N) = V_k(θ) with k = N/m.
                let k = (self.n / m) as usize;
                let v = vieta_lucas(k);
                let coeffs: Vec<BigRational> = v
                    .into_iter()
                    .map(BigRational::from_integer)
                    .collect();
                Ok(self.eval_poly_at_theta(&coeffs))
            }
        }
    }

    fn eval_poly_at_theta(&self, coeffs: &[BigRational]) -> FieldElement {
        let theta = self.theta();
        let mut acc = self.zero();
        for c in coeffs.iter().rev() {
            acc = self.mul(&acc, &theta);
            acc = &acc + &self.from_rational(c);
        }
        acc
    }

    /// Exact sign of `e` under the real embedding `θ ↦ 2cos(π/N)`.
    pub fn sign(&self, e: &FieldElement) -> i32 {
        if e.is_zero() {
            return 0;
        }
        if e.is_rational() || self.degree() == 1 {
            return self.sign_degree_one(e);
        }
        if let Some(s) = self.float_screen(e) {
            return s;
        }
        self.sign_by_bisection(e)
    }

    fn sign_degree_one(&self, e: &FieldElement) -> i32 {
        if e.is_rational() {
            return sign_of(&e.num[0]);
        }
        let theta = &self.lo;
        let v = reval(
            &e.num
                .iter()
                .map(|c| BigRational::from_integer(c.clone()))
                .collect::<Vec<_>>(),
            theta,
        );
        rat_sign(&v)
    }

    /// Floating-point evaluation with a deliberately generous error bound.
    fn float_screen(&self, e: &FieldElement) -> Option<i32> {
        let t = self.approx;
        let mut value = 0.0f64;
        let mut magnitude = 0.0f64;
        let mut power = 1.0f64;
        for c in &e.num {
            let cf = c.to_f64()?;
            if !cf.is_finite() {
                return None;
            }
            value += cf * power;
            magnitude += cf.abs() * power.abs();
            power *= t;
        }
        if !value.is_finite() || !magnitude.is_finite() {
            return None;
        }
        let bound = magnitude * 1e-9;
        if value > bound {
            Some(1)
        } else if value < -bound {
            Some(-1)
        } else {
            None
        }
    }

    fn sign_by_bisection(&self, e: &FieldElement) -> i32 {
        let coeffs: Vec<BigRational> = e
            .num
            .iter()
            .map(|c| BigRational::from_integer(c.clone()))
            .collect();
        let mut lo = self.lo.clone();
        let mut hi = self.hi.clone();
        let slo = sign_at(&self.minpoly, &lo);
        let two = BigRational::from_integer(BigInt::from(2));
        loop {
            let (a, b) = interval_eval(&coeffs, &lo, &hi);
            if a.is_positive() {
                return 1;
            }
            if b.is_negative() {
                return -1;
            }
            let mid = (&lo + &hi) / &two;
            let s = sign_at(&self.minpoly, &mid);
            if s == 0 {
                return rat_sign(&reval(&coeffs, &mid));
            }
            if s == slo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }

    /// Compares two elements under the real embedding.
    pub fn cmp(&self, a: &FieldElement, b: &FieldElement) -> Ordering {
        match self.sign(&(a - b)) {
            -1 => Ordering::Less,
            0 => Ordering::Equal,
            _ => Ordering::Greater,
        }
    }

    /// Floating-point approximation, for display only.
    pub fn to_f64(&self, e: &FieldElement) -> f64 {
        let t = if self.degree() == 1 {
            self.lo.to_f64().unwrap_or(self.approx)
        } else {
            self.approx
        };
        let mut v = 0.0;
        let mut p = 1.0;
        for c in &e.num {
            v += c.to_f64().unwrap_or(f64::NAN) * p;
            p *= t;
        }
        v / e.den.to_f64().unwrap_or(f64::NAN)
    }
}

fn sign_of(x: &BigInt) -> i32 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

/// Interval Horner evaluation of a polynomial over `[lo, hi]`, `lo ≤ hi`.
fn interval_eval(
    coeffs: &[BigRational],
    lo: &BigRational,
    hi: &BigRational,
) -> (BigRational, BigRational) {
    let mut a = BigRational::zero();
    let mut b = BigRational::zero();
    for c in coeffs.iter().rev() {
        let prods = [&a * lo, &a * hi, &b * lo, &b * hi];
        let mut mn = prods[0].clone();
        let mut mx = prods[0].clone();
        for p in &prods[1..] {
            if *p < mn {
                mn = p.clone();
            }
            if *p > mx {
                mx = p.clone();
            }
        }
        a = mn + c;
        b = mx + c;
    }
    (a, b)
}

impl FieldElement {
    fn normalize(&mut self) {
        if self.den.is_negative() {
            self.den = -self.den.clone();
            for c in self.num.iter_mut() {
                *c = -c.clone();
            }
        }
        if self.den.is_one() {
            return;
        }
        if self.num.iter().all(|c| c.is_zero()) {
            self.den = BigInt::one();
            return;
        }
        let mut g = self.den.clone();
        for c in &self.num {
            if !c.is_zero() {
                g = g.gcd(c);
                if g.is_one() {
                    return;
                }
            }
        }
        if !g.is_one() {
            self.den = &self.den / &g;
            for c in self.num.iter_mut() {
                *c = &*c / &g;
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.num.iter().all(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.den.is_one() && self.num[0].is_one() && self.num[1..].iter().all(|c| c.is_zero())
    }

    /// True when only the constant coefficient may be nonzero.
    pub fn is_rational(&self) -> bool {
        self.num[1..].iter().all(|c| c.is_zero())
    }

    /// True when the denominator is 1.
    pub fn is_integral(&self) -> bool {
        self.den.is_one()
    }

    /// Rational coefficients of `1, θ, θ², …`.
    pub fn coeffs(&self) -> Vec<BigRational> {
        self.num
            .iter()
            .map(|c| BigRational::new(c.clone(), self.den.clone()))
            .collect()
    }

    /// Multiply by the rational `p/q` (with `q > 0`).
    fn scale(&self, p: &BigInt, q: &BigInt) -> FieldElement {
        if p.is_zero() {
            return FieldElement {
                num: vec![BigInt::zero(); self.num.len()],
                den: BigInt::one(),
            };
        }
        if p.is_one() && q.is_one() {
            return self.clone();
        }
        let mut e = FieldElement {
            num: self.num.iter().map(|c| c * p).collect(),
            den: &self.den * q,
        };
        e.normalize();
        e
    }

    pub fn mul_int(&self, k: i64) -> FieldElement {
        self.scale(&BigInt::from(k), &BigInt::one())
    }

    /// Halve the element.
    pub fn half(&self) -> FieldElement {
        self.scale(&BigInt::one(), &BigInt::from(2))
    }

    pub fn add_assign_ref(&mut self, other: &FieldElement) {
        if self.den == other.den {
            for (a, b) in self.num.iter_mut().zip(&other.num) {
                if !b.is_zero() {
                    *a += b;
                }
            }
            if !self.den.is_one() {
                self.normalize();
            }
        } else {
            *self = &*self + other;
        }
    }

    pub fn sub_assign_ref(&mut self, other: &FieldElement) {
        if self.den == other.den {
            for (a, b) in self.num.iter_mut().zip(&other.num) {
                if !b.is_zero() {
                    *a -= b;
                }
            }
            if !self.den.is_one() {
                self.normalize();
            }
        } else {
            *self = &*self - other;
        }
    }

    pub fn neg_in_place(&mut self) {
        for c in self.num.iter_mut() {
            if !c.is_zero() {
                *c = -std::mem::take(c);
            }
        }
    }

    /// Rendering with `θ` written as `t`, e.g. `1/2 + 3t - t^2`.
    pub fn render(&self) -> String {
        let mut parts = Vec::new();
        for (i, q) in self.coeffs().iter().enumerate() {
            if q.is_zero() {
                continue;
            }
            let mag = q.abs();
            let coef = if i > 0 && mag.is_one() {
                String::new()
            } else {
                mag.to_string()
            };
            let var = match i {
                0 => String::new(),
                1 => "t".to_string(),
                _ => format!("t^{i}"),
            };
            let body = if coef.is_empty() {
                var
            } else if var.is_empty() {
                coef
            } else {
                format!("{coef}{var}")
            };
            parts.push((q.is_negative(), body));
        }
        if parts.is_empty() {
            return "0".to_string();
        }
        let mut s = String::new();
        for (k, (neg, body)) in parts.iter().enumerate() {
            if k == 0 {
                if *neg {
                    s.push('-');
                }
            } else {
                s.push_str(if *neg { " - " } else { " + " });
            }
            s.push_str(body);
        }
        s
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl std::ops::Add for &FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: &FieldElement) -> FieldElement {
        if self.den == rhs.den {
            let mut e = self.clone();
            e.add_assign_ref(rhs);
            return e;
        }
        let mut e = FieldElement {
            num: self
                .num
                .iter()
                .zip(&rhs.num)
                .map(|(a, b)| a * &rhs.den + b * &self.den)
                .collect(),
            den: &self.den * &rhs.den,
        };
        e.normalize();
        e
    }
}

impl std::ops::Sub for &FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: &FieldElement) -> FieldElement {
        if self.den == rhs.den {
            let mut e = self.clone();
            e.sub_assign_ref(rhs);
            return e;
        }
        let mut e = FieldElement {
            num: self
                .num
                .iter()
                .zip(&rhs.num)
                .map(|(a, b)| a * &rhs.den - b * &self.den)
                .collect(),
            den: &self.den * &rhs.den,
        };
        e.normalize();
        e
    }
}

impl std::ops::Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        let mut e = self.clone();
        e.neg_in_place();
        e
    }
}
