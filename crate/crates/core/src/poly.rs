//! Dense univariate polynomials over [`Scalar`] and quotients of them.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{q_to_f64, qi, Scalar, Q, DEFAULT_BITS};

/// Coefficients in ascending order: `coeffs[i]` multiplies `x^i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Poly {
    coeffs: Vec<Scalar>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Scalar>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(Scalar::is_zero) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Scalar::zero());
        }
        Poly { coeffs }
    }

    pub fn from_q(coeffs: Vec<Q>) -> Self {
        Poly::new(coeffs.into_iter().map(Scalar::Exact).collect())
    }

    pub fn constant(c: Scalar) -> Self {
        Poly::new(vec![c])
    }

    pub fn zero() -> Self {
        Poly::constant(Scalar::zero())
    }

    pub fn one() -> Self {
        Poly::constant(Scalar::one())
    }

    /// `slope * x + offset`
    pub fn affine(slope: Scalar, offset: Scalar) -> Self {
        Poly::new(vec![offset, slope])
    }

    pub fn x() -> Self {
        Poly::affine(Scalar::one(), Scalar::zero())
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_zero()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() == 1
    }

    pub fn is_exact(&self) -> bool {
        self.coeffs.iter().all(Scalar::is_exact)
    }

    pub fn exact_coeffs(&self) -> Option<Vec<Q>> {
        self.coeffs.iter().map(|c| c.as_exact().cloned()).collect()
    }

    pub fn coeff(&self, i: usize) -> Scalar {
        self.coeffs.get(i).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn eval(&self, x: &Scalar) -> Scalar {
        let mut acc = Scalar::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }

    pub fn eval_q(&self, x: &Q) -> Scalar {
        self.eval(&Scalar::Exact(x.clone()))
    }

    pub fn scale(&self, s: &Scalar) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() == 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * &Scalar::int(i as i64))
                .collect(),
        )
    }

    pub fn nth_derivative(&self, n: usize) -> Poly {
        (0..n).fold(self.clone(), |p, _| p.derivative())
    }

    pub fn antiderivative(&self) -> Poly {
        let mut out = vec![Scalar::zero()];
        for (i, c) in self.coeffs.iter().enumerate() {
            out.push(c / &Scalar::int(i as i64 + 1));
        }
        Poly::new(out)
    }

    pub fn integral(&self, a: &Scalar, b: &Scalar) -> Scalar {
        let f = self.antiderivative();
        &f.eval(b) - &f.eval(a)
    }

    /// `self(inner(x))`
    pub fn compose(&self, inner: &Poly) -> Poly {
        let mut acc = Poly::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * inner) + &Poly::constant(c.clone());
        }
        acc
    }

    /// `self(slope * x + offset)`
    pub fn compose_affine(&self, slope: &Scalar, offset: &Scalar) -> Poly {
        self.compose(&Poly::affine(slope.clone(), offset.clone()))
    }

    /// Slope and offset when the polynomial has degree at most one.
    pub fn as_affine(&self) -> Option<(Scalar, Scalar)> {
        (self.degree() <= 1).then(|| (self.coeff(1), self.coeff(0)))
    }

    /// Distinct real roots in the closed interval `[lo, hi]`, as exact values or
    /// enclosures of relative width about `2^-bits`. Requires exact coefficients.
    pub fn roots_in(&self, lo: &Q, hi: &Q, bits: u32) -> Result<Vec<Scalar>> {
        let p = self.exact_coeffs().ok_or(Error::InexactData)?;
        if is_zero_q(&p) {
            return Err(Error::RootIsolationFailure("zero polynomial".into()));
        }
        let mut roots = Vec::new();
        if eval_q(&p, lo).is_zero() {
            roots.push(Scalar::Exact(lo.clone()));
        }
        if lo < hi {
            let chain = sturm_chain(&p);
            isolate(&p, &chain, lo.clone(), hi.clone(), bits, &mut roots);
        }
        roots.sort_by(|a, b| a.lo().cmp(b.lo()));
        roots.dedup();
        Ok(roots)
    }

    /// Roots in `[lo, hi]` across which the polynomial changes sign.
    pub fn sign_changes_in(&self, lo: &Q, hi: &Q, bits: u32) -> Result<Vec<Scalar>> {
        let p = self.exact_coeffs().ok_or(Error::InexactData)?;
        let roots = self.roots_in(lo, hi, bits)?;
        Ok(roots
            .into_iter()
            .filter(|r| {
                let (u, v) = probe_points(r, lo, hi);
                let su = eval_q(&p, &u).signum();
                let sv = eval_q(&p, &v).signum();
                !su.is_zero() && !sv.is_zero() && su != sv
            })
            .collect())
    }

    /// Solve `self(x) = y` on `[lo, hi]` where `self` is strictly monotone there.
    pub fn solve_monotone(&self, y: &Scalar, lo: &Scalar, hi: &Scalar, bits: u32) -> Result<Scalar> {
        if let Some((s, t)) = self.as_affine() {
            return (y - &t).checked_div(&s);
        }
        let g = self - &Poly::constant(y.clone());
        if let (Some(gq), Some(l), Some(h)) = (g.exact_coeffs(), lo.as_exact(), hi.as_exact()) {
            let roots = Poly::from_q(gq).roots_in(l, h, bits)?;
            return match roots.len() {
                1 => Ok(roots.into_iter().next().unwrap()),
                n => Err(Error::RootIsolationFailure(format!("{n} roots on a monotone branch"))),
            };
        }
        // ball bisection on the sign of g
        let increasing = self.derivative().eval(&Scalar::Exact(lo.mid())).sign() != Some(Ordering::Less);
        let mut a = lo.lo().clone();
        let mut b = hi.hi().clone();
        for _ in 0..(bits + 8) {
            let mid = (&a + &b) / qi(2);
            match g.eval_q(&mid).sign() {
                Some(Ordering::Equal) => return Ok(Scalar::Exact(mid)),
                Some(o) => {
                    if (o == Ordering::Less) == increasing {
                        a = mid
                    } else {
                        b = mid
                    }
                }
                None => break,
            }
        }
        // widen by the ball uncertainty of g around the bracket
        let gl = g.eval_q(&a);
        let gh = g.eval_q(&b);
        if gl.sign().is_some() && gh.sign().is_some() && gl.sign() == gh.sign() {
            return Err(Error::RootIsolationFailure("no bracketing sign change".into()));
        }
        Ok(Scalar::ball(a, b, bits))
    }

    /// Enclosure of `sup |p|` on `[lo, hi]`.
    pub fn sup_abs(&self, lo: &Scalar, hi: &Scalar) -> Scalar {
        let mut best = self.eval(lo).abs().max(&self.eval(hi).abs());
        if self.degree() <= 1 {
            return best;
        }
        let d = self.derivative();
        if let (Some(l), Some(h)) = (lo.as_exact(), hi.as_exact()) {
            if let Ok(crit) = d.roots_in(l, h, DEFAULT_BITS) {
                for c in crit {
                    best = best.max(&self.eval(&c).abs());
                }
                return best;
            }
        }
        // subdivision bound for ball data
        let pieces = 32;
        let a = lo.lo().clone();
        let w = (hi.hi() - &a) / qi(pieces);
        for i in 0..pieces {
            let u = &a + &w * qi(i);
            let v = &u + &w;
            let e = self.eval(&Scalar::ball(u, v, DEFAULT_BITS)).abs();
            best = best.max(&Scalar::ball(best.lo().clone(), e.hi().clone().max(best.hi().clone()), DEFAULT_BITS));
        }
        best
    }

    /// `∫_lo^hi |p|`
    pub fn abs_integral(&self, lo: &Scalar, hi: &Scalar) -> Scalar {
        let f = self.antiderivative();
        let mut cuts = vec![lo.clone()];
        if let (Some(l), Some(h)) = (lo.as_exact(), hi.as_exact()) {
            if !self.is_zero() {
                if let Ok(rs) = self.sign_changes_in(l, h, DEFAULT_BITS) {
                    cuts.extend(rs);
                }
            }
        } else if !self.is_constant() {
            // Gauss-type fallback is unnecessary for the shipped maps; split the interval and bound each part.
            let pieces = 64;
            let a = lo.lo().clone();
            let w = (hi.hi() - &a) / qi(pieces);
            let mut total = Scalar::zero();
            for i in 0..pieces {
                let u = Scalar::Exact(&a + &w * qi(i));
                let v = Scalar::Exact(&a + &w * qi(i + 1));
                let part = (&f.eval(&v) - &f.eval(&u)).abs();
                let bound = &self.eval(&Scalar::ball(u.lo().clone(), v.lo().clone(), DEFAULT_BITS)).abs()
                    * &(&v - &u);
                total = &total + &Scalar::ball(part.lo().clone(), bound.hi().clone().max(part.hi().clone()), DEFAULT_BITS);
            }
            return total;
        }
        cuts.push(hi.clone());
        cuts.windows(2).map(|w| (&f.eval(&w[1]) - &f.eval(&w[0])).abs()).sum()
    }

    pub fn to_f64_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().map(Scalar::to_f64).collect()
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.to_f64_coeffs().iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

fn probe_points(r: &Scalar, lo: &Q, hi: &Q) -> (Q, Q) {
    // points just outside the root enclosure, clamped to the interval
    let eps = if r.is_exact() {
        let span = hi - lo;
        span / qi(1 << 20)
    } else {
        r.width()
    };
    let mut u = r.lo() - &eps;
    let mut v = r.hi() + &eps;
    if &u < lo {
        u = lo.clone();
    }
    if &v > hi {
        v = hi.clone();
    }
    (u, v)
}

fn is_zero_q(p: &[Q]) -> bool {
    p.iter().all(Zero::is_zero)
}

fn trim_q(mut p: Vec<Q>) -> Vec<Q> {
    while p.len() > 1 && p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    p
}

fn eval_q(p: &[Q], x: &Q) -> Q {
    p.iter().rev().fold(Q::zero(), |acc, c| acc * x + c)
}

fn deriv_q(p: &[Q]) -> Vec<Q> {
    if p.len() <= 1 {
        return vec![Q::zero()];
    }
    trim_q(p.iter().enumerate().skip(1).map(|(i, c)| c * qi(i as i64)).collect())
}

fn rem_q(a: &[Q], b: &[Q]) -> Vec<Q> {
    let b = trim_q(b.to_vec());
    let mut r = trim_q(a.to_vec());
    let db = b.len() - 1;
    let lead = b[db].clone();
    while r.len() > db && !is_zero_q(&r) {
        let shift = r.len() - 1 - db;
        let factor = r.last().unwrap() / &lead;
        for (i, c) in b.iter().enumerate() {
            r[i + shift] -= &factor * c;
        }
        r.pop();
        r = trim_q(r);
        if r.len() <= db {
            break;
        }
    }
    trim_q(r)
}

fn sturm_chain(p: &[Q]) -> Vec<Vec<Q>> {
    let mut chain = vec![trim_q(p.to_vec()), deriv_q(p)];
    loop {
        let n = chain.len();
        if is_zero_q(&chain[n - 1]) {
            chain.pop();
            break;
        }
        let r = rem_q(&chain[n - 2], &chain[n - 1]);
        if is_zero_q(&r) {
            break;
        }
        chain.push(r.into_iter().map(|c| -c).collect());
    }
    chain
}

fn variations(chain: &[Vec<Q>], x: &Q) -> usize {
    let mut count = 0;
    let mut last = 0i8;
    for p in chain {
        let v = eval_q(p, x);
        let s = if v.is_positive() {
            1
        } else if v.is_negative() {
            -1
        } else {
            0
        };
        if s != 0 {
            if last != 0 && s != last {
                count += 1;
            }
            last = s;
        }
    }
    count
}

/// Number of distinct roots in `(a, b]`.
fn count_roots(chain: &[Vec<Q>], a: &Q, b: &Q) -> usize {
    variations(chain, a).saturating_sub(variations(chain, b))
}

fn isolate(p: &[Q], chain: &[Vec<Q>], a: Q, b: Q, bits: u32, out: &mut Vec<Scalar>) {
    let n = count_roots(chain, &a, &b);
    if n == 0 {
        return;
    }
    if n == 1 {
        out.push(refine(p, chain, a, b, bits));
        return;
    }
    let mid = (&a + &b) / qi(2);
    isolate(p, chain, a, mid.clone(), bits, out);
    isolate(p, chain, mid, b, bits, out);
}

/// Shrink `(a, b]` containing exactly one root down to the target precision.
fn refine(p: &[Q], chain: &[Vec<Q>], mut a: Q, mut b: Q, bits: u32) -> Scalar {
    if eval_q(p, &b).is_zero() {
        return Scalar::Exact(b);
    }
    let scale = q_to_f64(&b.abs().max(a.abs())).max(1e-300);
    for _ in 0..(bits as usize + 64) {
        let mid = (&a + &b) / qi(2);
        if eval_q(p, &mid).is_zero() {
            return Scalar::Exact(mid);
        }
        if count_roots(chain, &a, &mid) == 1 {
            b = mid;
        } else {
            a = mid;
        }
        if q_to_f64(&(&b - &a)) <= scale * 2f64.powi(-(bits as i32)) {
            break;
        }
    }
    Scalar::ball(a, b, bits)
}

impl<'a> Add<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn add(self, rhs: &'a Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|i| &self.coeff(i) + &rhs.coeff(i)).collect())
    }
}

impl<'a> Sub<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn sub(self, rhs: &'a Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|i| &self.coeff(i) - &rhs.coeff(i)).collect())
    }
}

impl<'a> Mul<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn mul(self, rhs: &'a Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Scalar::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        Poly::new(out)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(i, c)| *i == 0 || !c.is_zero())
            .map(|(i, c)| match i {
                0 => format!("{c}"),
                1 => format!("({c})x"),
                _ => format!("({c})x^{i}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

/// `num / den` with polynomial numerator and denominator.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalFn {
    pub num: Poly,
    pub den: Poly,
}

impl RationalFn {
    pub fn new(num: Poly, den: Poly) -> Self {
        RationalFn { num, den }
    }

    pub fn poly(p: Poly) -> Self {
        RationalFn { num: p, den: Poly::one() }
    }

    pub fn constant(c: Scalar) -> Self {
        RationalFn::poly(Poly::constant(c))
    }

    pub fn eval(&self, x: &Scalar) -> Result<Scalar> {
        self.num.eval(x).checked_div(&self.den.eval(x))
    }

    pub fn derivative(&self) -> RationalFn {
        let n = &(&self.num.derivative() * &self.den) - &(&self.num * &self.den.derivative());
        RationalFn::new(n, &self.den * &self.den).simplified()
    }

    pub fn recip(&self) -> RationalFn {
        RationalFn::new(self.den.clone(), self.num.clone())
    }

    /// Divide through by a constant denominator so polynomial results stay polynomials.
    pub fn simplified(self) -> RationalFn {
        if self.den.is_constant() && !self.den.coeff(0).may_be_zero() {
            let inv = self.den.coeff(0).recip().expect("nonzero");
            return RationalFn::poly(self.num.scale(&inv));
        }
        self
    }

    /// The polynomial this function equals, when the denominator is constant.
    pub fn as_poly(&self) -> Option<Poly> {
        let s = self.clone().simplified();
        s.den.is_constant().then_some(s.num)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Exact identity test by cross-multiplication.
    pub fn same_as(&self, other: &RationalFn) -> bool {
        let lhs = &self.num * &other.den;
        let rhs = &other.num * &self.den;
        (&lhs - &rhs).is_zero()
    }

    pub fn compose(&self, inner: &Poly) -> RationalFn {
        RationalFn::new(self.num.compose(inner), self.den.compose(inner)).simplified()
    }

    /// Enclosure of `sup |f|` on `[lo, hi]` by interval evaluation, bisecting
    /// wherever the denominator enclosure still contains zero.
    pub fn sup_abs(&self, lo: &Q, hi: &Q) -> Result<Scalar> {
        if let Some(p) = self.as_poly() {
            return Ok(p.sup_abs(&Scalar::Exact(lo.clone()), &Scalar::Exact(hi.clone())));
        }
        let pieces = 64;
        let w = (hi - lo) / qi(pieces);
        let mut best = self.eval(&Scalar::Exact(lo.clone()))?.abs();
        let mut stack: Vec<(Q, Q, u32)> = (0..pieces).map(|i| (lo + &w * qi(i), lo + &w * qi(i + 1), 0)).collect();
        while let Some((u, v, depth)) = stack.pop() {
            let x = Scalar::ball(u.clone(), v.clone(), DEFAULT_BITS);
            let d = self.den.eval(&x);
            if d.may_be_zero() {
                if depth >= 24 {
                    return Err(Error::Undecidable(format!("denominator may vanish near {}", q_to_f64(&u))));
                }
                let m = (&u + &v) / qi(2);
                stack.push((u, m.clone(), depth + 1));
                stack.push((m, v, depth + 1));
                continue;
            }
            let e = self.num.eval(&x).checked_div(&d)?.abs();
            best = Scalar::ball(best.lo().clone(), best.hi().clone().max(e.hi().clone()), DEFAULT_BITS);
        }
        Ok(best)
    }
}

impl<'a> Add<&'a RationalFn> for &'a RationalFn {
    type Output = RationalFn;
    fn add(self, rhs: &'a RationalFn) -> RationalFn {
        if self.den == rhs.den {
            return RationalFn::new(&self.num + &rhs.num, self.den.clone()).simplified();
        }
        let n = &(&self.num * &rhs.den) + &(&rhs.num * &self.den);
        RationalFn::new(n, &self.den * &rhs.den).simplified()
    }
}

impl<'a> Mul<&'a RationalFn> for &'a RationalFn {
    type Output = RationalFn;
    fn mul(self, rhs: &'a RationalFn) -> RationalFn {
        RationalFn::new(&self.num * &rhs.num, &self.den * &rhs.den).simplified()
    }
}

impl One for RationalFn {
    fn one() -> Self {
        RationalFn::poly(Poly::one())
    }
}

impl Mul for RationalFn {
    type Output = RationalFn;
    fn mul(self, rhs: RationalFn) -> RationalFn {
        &self * &rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;

    fn p(c: &[(i64, i64)]) -> Poly {
        Poly::from_q(c.iter().map(|&(n, d)| q(n, d)).collect())
    }

    #[test]
    fn arithmetic_and_composition() {
        let a = p(&[(1, 1), (2, 1)]); // 1 + 2x
        let b = p(&[(0, 1), (0, 1), (1, 1)]); // x^2
        assert_eq!(&a * &b, p(&[(0, 1), (0, 1), (1, 1), (2, 1)]));
        assert_eq!(b.compose(&a), p(&[(1, 1), (4, 1), (4, 1)]));
        assert_eq!(b.derivative(), p(&[(0, 1), (2, 1)]));
        assert_eq!(b.integral(&Scalar::zero(), &Scalar::one()), Scalar::ratio(1, 3));
    }

    #[test]
    fn roots_exact_and_irrational() {
        // (x - 1/3)(x - 1/2)
        let r = p(&[(1, 6), (-5, 6), (1, 1)]);
        let roots = r.roots_in(&q(0, 1), &q(1, 1), 64).unwrap();
        assert_eq!(roots.len(), 2);
        assert!(roots[0].contains(&q(1, 3)));
        assert!(roots[1].contains(&q(1, 2)));
        let s = p(&[(-1, 2), (0, 1), (1, 1)]); // x^2 - 1/2
        let roots = s.roots_in(&q(0, 1), &q(1, 1), 80).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0].to_f64() - 0.5f64.sqrt()).abs() < 1e-15);
        // double root has no sign change
        let d = p(&[(1, 4), (-1, 1), (1, 1)]);
        assert_eq!(d.roots_in(&q(0, 1), &q(1, 1), 64).unwrap().len(), 1);
        assert!(d.sign_changes_in(&q(0, 1), &q(1, 1), 64).unwrap().is_empty());
    }

    #[test]
    fn abs_integral_and_sup() {
        let f = p(&[(-1, 2), (1, 1)]); // x - 1/2
        assert_eq!(f.abs_integral(&Scalar::zero(), &Scalar::one()), Scalar::ratio(1, 4));
        let g = p(&[(0, 1), (1, 1), (-1, 1)]); // x - x^2
        assert_eq!(g.sup_abs(&Scalar::zero(), &Scalar::one()), Scalar::ratio(1, 4));
    }

    #[test]
    fn monotone_solve() {
        let f = p(&[(0, 1), (0, 1), (1, 1)]);
        let x = f.solve_monotone(&Scalar::ratio(1, 4), &Scalar::zero(), &Scalar::one(), 64).unwrap();
        assert_eq!(x, Scalar::ratio(1, 2));
        let x = f.solve_monotone(&Scalar::ratio(1, 2), &Scalar::zero(), &Scalar::one(), 64).unwrap();
        assert!(x.contains(&q(7071067811865475, 10000000000000000)) || (x.to_f64() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rational_fn_identity() {
        let x = Poly::x();
        let f = RationalFn::new(Poly::one(), x.clone());
        let d = f.derivative(); // -1/x^2
        assert!(d.same_as(&RationalFn::new(p(&[(-1, 1)]), &x * &x)));
    }
}
