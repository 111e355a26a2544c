//! Piecewise-polynomial observables with jumps, their derivative decomposition
//! and the norms used for the transfer operator.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbits::{weight_along, OrbitTable, Tag};
use crate::poly::Poly;
use crate::scalar::Scalar;
use crate::weight::Weight;

/// A function on `[0,1]` that is polynomial between consecutive breakpoints.
///
/// `breakpoints` are interior and strictly increasing; `pieces[i]` lives on
/// `(breakpoints[i-1], breakpoints[i])` with `0` and `1` as outer ends.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseSmooth {
    breakpoints: Vec<Scalar>,
    pieces: Vec<Poly>,
}

fn decided(a: &Scalar, b: &Scalar) -> Result<Ordering> {
    if a == b {
        return Ok(Ordering::Equal);
    }
    a.try_cmp(b)
}

/// Sorted union of two breakpoint lists; structurally equal points are merged.
fn merge_points(a: &[Scalar], b: &[Scalar]) -> Result<Vec<Scalar>> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match decided(&a[i], &b[j])? {
            Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            Ordering::Greater => {
                out.push(b[j].clone());
                j += 1;
            }
            Ordering::Equal => {
                out.push(a[i].clone());
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    Ok(out)
}

impl PiecewiseSmooth {
    pub fn new(breakpoints: Vec<Scalar>, pieces: Vec<Poly>) -> Result<Self> {
        if pieces.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidObservable("need one more piece than interior breakpoints".into()));
        }
        let mut prev = Scalar::zero();
        for c in &breakpoints {
            if prev.try_cmp(c)? != Ordering::Less {
                return Err(Error::InvalidObservable(format!("breakpoint {c} out of order or outside (0,1)")));
            }
            prev = c.clone();
        }
        if breakpoints.last().is_some_and(|c| c.try_cmp(&Scalar::one()).ok() != Some(Ordering::Less)) {
            return Err(Error::InvalidObservable("breakpoints must lie in (0,1)".into()));
        }
        Ok(PiecewiseSmooth { breakpoints, pieces })
    }

    pub fn from_poly(p: Poly) -> Self {
        PiecewiseSmooth { breakpoints: Vec::new(), pieces: vec![p] }
    }

    pub fn constant(c: Scalar) -> Self {
        Self::from_poly(Poly::constant(c))
    }

    pub fn zero() -> Self {
        Self::constant(Scalar::zero())
    }

    /// `1` on `(a, b)` and `0` elsewhere, for `0 ≤ a < b ≤ 1`.
    pub fn indicator(a: &Scalar, b: &Scalar) -> Result<Self> {
        let mut bps = Vec::new();
        let mut pieces = Vec::new();
        if !a.is_zero() {
            bps.push(a.clone());
            pieces.push(Poly::zero());
        }
        pieces.push(Poly::one());
        if *b != Scalar::one() {
            bps.push(b.clone());
            pieces.push(Poly::zero());
        }
        Self::new(bps, pieces)
    }

    pub fn breakpoints(&self) -> &[Scalar] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Poly] {
        &self.pieces
    }

    /// Closure `[lo, hi]` of piece `i`.
    pub fn interval(&self, i: usize) -> (Scalar, Scalar) {
        let lo = if i == 0 { Scalar::zero() } else { self.breakpoints[i - 1].clone() };
        let hi = self.breakpoints.get(i).cloned().unwrap_or_else(Scalar::one);
        (lo, hi)
    }

    pub fn is_exact(&self) -> bool {
        self.breakpoints.iter().all(Scalar::is_exact) && self.pieces.iter().all(Poly::is_exact)
    }

    pub fn max_degree(&self) -> usize {
        self.pieces.iter().map(Poly::degree).max().unwrap_or(0)
    }

    /// Piece index for `x` approached from the left (`right = false`) or right.
    fn piece_for(&self, x: &Scalar, right: bool) -> Result<usize> {
        let mut idx = 0;
        for (i, c) in self.breakpoints.iter().enumerate() {
            match decided(x, c)? {
                Ordering::Greater => idx = i + 1,
                Ordering::Equal => return Ok(if right { i + 1 } else { i }),
                Ordering::Less => break,
            }
        }
        Ok(idx)
    }

    /// `h(x⁺)` or `h(x⁻)`; outside `[0,1]` the function is taken to be zero.
    pub fn eval_one_sided(&self, x: &Scalar, right: bool) -> Result<Scalar> {
        let zero = Scalar::zero();
        let one = Scalar::one();
        if (!right && decided(x, &zero)? != Ordering::Greater) || (right && decided(x, &one)? != Ordering::Less) {
            return Ok(Scalar::zero());
        }
        Ok(self.pieces[self.piece_for(x, right)?].eval(x))
    }

    /// `J(h, x) = h(x⁺) − h(x⁻)` for interior `x`.
    pub fn jump_at(&self, x: &Scalar) -> Result<Scalar> {
        if decided(x, &Scalar::zero())? != Ordering::Greater || decided(x, &Scalar::one())? != Ordering::Less {
            return Err(Error::OutOfDomain(x.to_string()));
        }
        Ok(&self.eval_one_sided(x, true)? - &self.eval_one_sided(x, false)?)
    }

    /// Jump with `h` extended by zero outside `[0,1]`.
    pub fn jump_extended(&self, x: &Scalar) -> Result<Scalar> {
        Ok(&self.eval_one_sided(x, true)? - &self.eval_one_sided(x, false)?)
    }

    /// Jump of `h·1_{(x,·)}` (`right`) or `h·1_{(·,x)}` at `x`: `h(x⁺)` or `−h(x⁻)`.
    pub fn jump_one_sided(&self, x: &Scalar, right: bool) -> Result<Scalar> {
        let v = self.eval_one_sided(x, right)?;
        Ok(if right { v } else { -v })
    }

    /// Merges adjacent pieces with identical polynomials.
    pub fn normalize(self) -> Self {
        let mut bps = Vec::new();
        let mut pieces: Vec<Poly> = vec![self.pieces[0].clone()];
        for (c, p) in self.breakpoints.into_iter().zip(self.pieces.into_iter().skip(1)) {
            if pieces.last() == Some(&p) {
                continue;
            }
            bps.push(c);
            pieces.push(p);
        }
        PiecewiseSmooth { breakpoints: bps, pieces }
    }

    /// Same function on a finer breakpoint set containing `points`.
    pub fn refine(&self, points: &[Scalar]) -> Result<Self> {
        let inner: Vec<Scalar> = points
            .iter()
            .filter(|p| !p.is_zero() && **p != Scalar::one())
            .cloned()
            .collect();
        let bps = merge_points(&self.breakpoints, &inner)?;
        let mut pieces = Vec::with_capacity(bps.len() + 1);
        // `k` counts own breakpoints at or left of the current piece start.
        let mut k = 0;
        for i in 0..=bps.len() {
            if i > 0 {
                while k < self.breakpoints.len() && decided(&self.breakpoints[k], &bps[i - 1])? != Ordering::Greater {
                    k += 1;
                }
            }
            pieces.push(self.pieces[k].clone());
        }
        Ok(PiecewiseSmooth { breakpoints: bps, pieces })
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&Poly, &Poly) -> Poly) -> Result<Self> {
        let bps = merge_points(&self.breakpoints, &other.breakpoints)?;
        let a = self.refine(&bps)?;
        let b = other.refine(&bps)?;
        let pieces = a.pieces.iter().zip(&b.pieces).map(|(p, q)| f(p, q)).collect();
        Ok(PiecewiseSmooth { breakpoints: bps, pieces }.normalize())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |p, q| p + q)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |p, q| p - q)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |p, q| p * q)
    }

    pub fn scale(&self, s: &Scalar) -> Self {
        PiecewiseSmooth { breakpoints: self.breakpoints.clone(), pieces: self.pieces.iter().map(|p| p.scale(s)).collect() }
            .normalize()
    }

    /// Absolutely continuous part `D_a h` of the derivative.
    pub fn derivative(&self) -> Self {
        PiecewiseSmooth { breakpoints: self.breakpoints.clone(), pieces: self.pieces.iter().map(Poly::derivative).collect() }
    }

    pub fn nth_derivative(&self, n: usize) -> Self {
        (0..n).fold(self.clone(), |h, _| h.derivative())
    }

    /// Interior jumps, in increasing order, including zero ones at breakpoints.
    pub fn jumps(&self) -> Result<Vec<(Scalar, Scalar)>> {
        self.breakpoints.iter().map(|c| Ok((c.clone(), self.jump_at(c)?))).collect()
    }

    /// `(D_a h, D_j h)` with jumps tagged when a table is given.
    pub fn decompose_derivative(&self, table: Option<&OrbitTable>) -> Result<(Self, JumpVector)> {
        let tagger = table.map(OrbitTable::tagger).transpose()?;
        let mut jumps = Vec::new();
        for (point, value) in self.jumps()? {
            if value.is_zero() {
                continue;
            }
            let tag = match &tagger {
                Some(t) => t.get(&point)?,
                None => None,
            };
            jumps.push(Jump { point, value, tag });
        }
        Ok((self.derivative(), JumpVector { jumps }))
    }

    pub fn l1_norm(&self) -> Scalar {
        (0..self.pieces.len())
            .map(|i| {
                let (lo, hi) = self.interval(i);
                self.pieces[i].abs_integral(&lo, &hi)
            })
            .sum()
    }

    pub fn linf_norm(&self) -> Scalar {
        (0..self.pieces.len()).fold(Scalar::zero(), |m, i| {
            let (lo, hi) = self.interval(i);
            m.max(&self.pieces[i].sup_abs(&lo, &hi))
        })
    }

    /// `Σ |J(h, x)|` over interior points.
    pub fn total_jump(&self) -> Result<Scalar> {
        Ok(self.jumps()?.iter().map(|(_, j)| j.abs()).sum())
    }

    pub fn bv_norm(&self) -> Result<Scalar> {
        Ok(&(&self.l1_norm() + &self.derivative().l1_norm()) + &self.total_jump()?)
    }

    /// `Σ_{t ≤ r} ‖D_a^t h‖_∞`
    pub fn cr_norm(&self, r: usize) -> Scalar {
        let mut h = self.clone();
        let mut total = Scalar::zero();
        for _ in 0..=r {
            total = &total + &h.linf_norm();
            h = h.derivative();
        }
        total
    }

    pub fn compute_norm(&self, kind: NormKind) -> Result<Scalar> {
        match kind {
            NormKind::L1 => Ok(self.l1_norm()),
            NormKind::Linf => Ok(self.linf_norm()),
            NormKind::Bv => self.bv_norm(),
            NormKind::Cr(r) => Ok(self.cr_norm(r)),
        }
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let i = self.breakpoints.iter().take_while(|c| c.to_f64() <= x).count();
        self.pieces[i].eval_f64(x)
    }

    pub fn to_spec(&self, table: Option<&OrbitTable>) -> Result<ObservableSpec> {
        let tagger = table.map(OrbitTable::tagger).transpose()?;
        let mut tags = Vec::new();
        if let Some(t) = &tagger {
            for c in &self.breakpoints {
                if let Some(Tag::Orbit { j, k }) = t.get(c)? {
                    tags.push(PointTag { point: c.clone(), orbit: [j, k] });
                }
            }
        }
        Ok(ObservableSpec {
            breakpoints: self.breakpoints.clone(),
            pieces: self.pieces.iter().map(|p| PieceSpec { coeffs: p.coeffs().to_vec() }).collect(),
            tags,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    L1,
    Linf,
    Bv,
    Cr(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Jump {
    pub point: Scalar,
    pub value: Scalar,
    pub tag: Option<Tag>,
}

/// Nonzero jumps of an observable; `tag = None` marks points outside the table.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct JumpVector {
    pub jumps: Vec<Jump>,
}

impl JumpVector {
    pub fn untagged(&self) -> impl Iterator<Item = &Jump> {
        self.jumps.iter().filter(|j| j.tag.is_none())
    }

    pub fn get(&self, x: &Scalar) -> Option<&Scalar> {
        self.jumps.iter().find(|j| &j.point == x).map(|j| &j.value)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceSpec {
    pub coeffs: Vec<Scalar>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointTag {
    pub point: Scalar,
    pub orbit: [usize; 2],
}

/// JSON form of an observable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableSpec {
    pub breakpoints: Vec<Scalar>,
    pub pieces: Vec<PieceSpec>,
    #[serde(default)]
    pub tags: Vec<PointTag>,
}

impl ObservableSpec {
    pub fn build(&self) -> Result<PiecewiseSmooth> {
        PiecewiseSmooth::new(self.breakpoints.clone(), self.pieces.iter().map(|p| Poly::new(p.coeffs.clone())).collect())
    }
}

/// Weights `ζ(j,k) = Λ̃^k / |φ_k(a_{j,0})|` for the jump part of the norm.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightScheme {
    pub lambda_tilde: Scalar,
    pub r: usize,
    /// `zeta[j][k]` for `k = 0..=depth`
    pub zeta: Vec<Vec<Scalar>>,
    pub depth: usize,
}

impl WeightScheme {
    pub fn new(table: &OrbitTable, weight: &Weight, lambda_tilde: Scalar, r: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::Precondition("r ≥ 1".into()));
        }
        let mut zeta = Vec::with_capacity(table.orbits.len());
        for j in 0..table.orbits.len() {
            let phi = weight_along(table, weight, j)?;
            let mut row = Vec::with_capacity(table.depth + 1);
            let mut prod = Scalar::one();
            let mut lt = Scalar::one();
            for k in 0..=table.depth {
                row.push(lt.checked_div(&prod.abs()).map_err(|_| Error::WeightVanishes)?);
                prod = &prod * &phi[k];
                lt = &lt * &lambda_tilde;
            }
            zeta.push(row);
        }
        Ok(WeightScheme { lambda_tilde, r, zeta, depth: table.depth })
    }

    /// `ζ ≡ 1`
    pub fn uniform(table: &OrbitTable, r: usize) -> Self {
        WeightScheme {
            lambda_tilde: Scalar::one(),
            r,
            zeta: vec![vec![Scalar::one(); table.depth + 1]; table.orbits.len()],
            depth: table.depth,
        }
    }

    pub fn zeta(&self, tag: Tag) -> Scalar {
        match tag {
            Tag::Orbit { j, k } => self.zeta[j][k].clone(),
            _ => Scalar::one(),
        }
    }

    /// `C = max(1, sup_{j,k} 1/ζ(j,k))`
    pub fn bv_constant(&self) -> Result<Scalar> {
        let mut c = Scalar::one();
        for z in self.zeta.iter().flatten() {
            c = c.max(&z.recip()?);
        }
        Ok(c)
    }
}

/// `Σ ζ(j,k)|J(h,a_{j,k})| + Σ |J(h,b)|` over interior jumps.
pub fn zeta_jump_norm(h: &PiecewiseSmooth, scheme: &WeightScheme, table: &OrbitTable) -> Result<Scalar> {
    let (_, jv) = h.decompose_derivative(Some(table))?;
    let mut total = Scalar::zero();
    for jump in &jv.jumps {
        let tag = jump.tag.ok_or_else(|| Error::UntaggedJump { point: jump.point.to_string(), value: jump.value.to_string() })?;
        total = &total + &(&scheme.zeta(tag) * &jump.value.abs());
    }
    Ok(total)
}

/// `Σ_{t ≤ r} ‖D_a^t h‖_{L¹} + Σ_{t < r} ‖D_a^t h‖_{J_ζ}`
pub fn custom_norm(h: &PiecewiseSmooth, scheme: &WeightScheme, table: &OrbitTable) -> Result<Scalar> {
    let mut total = Scalar::zero();
    let mut d = h.clone();
    for t in 0..=scheme.r {
        total = &total + &d.l1_norm();
        if t < scheme.r {
            total = &total + &zeta_jump_norm(&d, scheme, table)?;
        }
        d = d.derivative();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_core::builtins;
    use crate::orbits::discontinuity_orbits;
    use crate::scalar::q;

    fn half_step() -> PiecewiseSmooth {
        PiecewiseSmooth::indicator(&Scalar::ratio(1, 2), &Scalar::one()).unwrap()
    }

    fn tent_shape() -> PiecewiseSmooth {
        PiecewiseSmooth::new(
            vec![Scalar::ratio(1, 3)],
            vec![Poly::x(), Poly::affine(Scalar::int(-1), Scalar::one())],
        )
        .unwrap()
    }

    #[test]
    fn jumps_and_limits() {
        let h = half_step();
        assert_eq!(h.jump_at(&Scalar::ratio(1, 2)).unwrap(), Scalar::one());
        assert_eq!(h.jump_at(&Scalar::ratio(1, 4)).unwrap(), Scalar::zero());
        assert_eq!(h.jump_extended(&Scalar::one()).unwrap(), Scalar::int(-1));
        assert_eq!(h.jump_extended(&Scalar::zero()).unwrap(), Scalar::zero());
        assert!(h.jump_at(&Scalar::zero()).is_err());
        let x = PiecewiseSmooth::from_poly(Poly::x());
        assert_eq!(x.jump_at(&Scalar::ratio(2, 7)).unwrap(), Scalar::zero());
        let t = tent_shape();
        assert_eq!(t.jump_one_sided(&Scalar::ratio(1, 3), false).unwrap(), Scalar::ratio(-1, 3));
        assert_eq!(t.jump_one_sided(&Scalar::ratio(1, 3), true).unwrap(), Scalar::ratio(2, 3));
    }

    #[test]
    fn decomposition_examples() {
        let sq = PiecewiseSmooth::from_poly(Poly::from_q(vec![q(0, 1), q(0, 1), q(1, 1)]));
        let (da, dj) = sq.decompose_derivative(None).unwrap();
        assert_eq!(da, PiecewiseSmooth::from_poly(Poly::affine(Scalar::int(2), Scalar::zero())));
        assert!(dj.jumps.is_empty());

        let (da, dj) = half_step().decompose_derivative(None).unwrap();
        assert_eq!(da.normalize(), PiecewiseSmooth::zero());
        assert_eq!(dj.jumps.len(), 1);
        assert_eq!(dj.get(&Scalar::ratio(1, 2)), Some(&Scalar::one()));

        let (da, dj) = tent_shape().decompose_derivative(None).unwrap();
        assert_eq!(da.pieces(), &[Poly::one(), Poly::constant(Scalar::int(-1))]);
        assert_eq!(dj.get(&Scalar::ratio(1, 3)), Some(&Scalar::ratio(1, 3)));
    }

    #[test]
    fn norm_examples() {
        let h = half_step();
        assert_eq!(h.l1_norm(), Scalar::ratio(1, 2));
        assert_eq!(h.bv_norm().unwrap(), Scalar::ratio(3, 2));
        let one = PiecewiseSmooth::constant(Scalar::one());
        assert_eq!(one.l1_norm(), Scalar::one());
        assert_eq!(one.linf_norm(), Scalar::one());
        assert_eq!(one.derivative().l1_norm(), Scalar::zero());
        let x = PiecewiseSmooth::from_poly(Poly::x());
        assert_eq!(x.l1_norm(), Scalar::ratio(1, 2));
        assert_eq!(x.derivative().l1_norm(), Scalar::one());
        assert_eq!(x.cr_norm(1), Scalar::int(2));
        // |x - 1/2| integrates to 1/4
        let c = PiecewiseSmooth::from_poly(Poly::affine(Scalar::one(), Scalar::ratio(-1, 2)));
        assert_eq!(c.compute_norm(NormKind::L1).unwrap(), Scalar::ratio(1, 4));
    }

    #[test]
    fn arithmetic_and_normalization() {
        let a = half_step();
        let b = PiecewiseSmooth::indicator(&Scalar::zero(), &Scalar::ratio(1, 2)).unwrap();
        assert_eq!(a.add(&b).unwrap(), PiecewiseSmooth::constant(Scalar::one()));
        let d = a.sub(&b).unwrap();
        assert_eq!(d.jump_at(&Scalar::ratio(1, 2)).unwrap(), Scalar::int(2));
        let m = a.mul(&tent_shape()).unwrap();
        assert_eq!(m.breakpoints(), &[Scalar::ratio(1, 2)]);
        assert_eq!(m.scale(&Scalar::zero()), PiecewiseSmooth::zero());
    }

    #[test]
    fn custom_norm_examples() {
        let map = builtins::beta(q(3, 2)).unwrap();
        let table = discontinuity_orbits(&map, 12).unwrap();
        let w = Weight::inverse_derivative(&map);
        let scheme = WeightScheme::new(&table, &w, Scalar::ratio(4, 5), 2).unwrap();
        assert_eq!(custom_norm(&PiecewiseSmooth::constant(Scalar::one()), &scheme, &table).unwrap(), Scalar::one());
        let s1 = WeightScheme::new(&table, &w, Scalar::ratio(4, 5), 1).unwrap();
        let x = PiecewiseSmooth::from_poly(Poly::x());
        assert_eq!(custom_norm(&x, &s1, &table).unwrap(), Scalar::ratio(3, 2));

        // jump 1 at a_{0,k}: weight Λ̃^k / |φ_k(a_0)| with φ ≡ 2/3
        let a3 = table.orbits[0].points[3].clone();
        let step = PiecewiseSmooth::indicator(&a3, &Scalar::one()).unwrap();
        let expected = &Scalar::ratio(4, 5).pow(3) / &Scalar::ratio(2, 3).pow(3);
        assert_eq!(zeta_jump_norm(&step, &scheme, &table).unwrap(), expected);
        assert_eq!(scheme.zeta[0][0], Scalar::one());

        let stray = PiecewiseSmooth::indicator(&Scalar::ratio(1, 7), &Scalar::one()).unwrap();
        assert!(matches!(zeta_jump_norm(&stray, &scheme, &table), Err(Error::UntaggedJump { .. })));

        // uniform ζ, r = 1 reproduces the BV norm
        let u = WeightScheme::uniform(&table, 1);
        let h = PiecewiseSmooth::new(vec![a3], vec![Poly::x(), Poly::constant(Scalar::int(3))]).unwrap();
        assert_eq!(custom_norm(&h, &u, &table).unwrap(), h.bv_norm().unwrap());
    }

    #[test]
    fn json_round_trip() {
        let h = tent_shape();
        let s = serde_json::to_string(&h.to_spec(None).unwrap()).unwrap();
        let back: ObservableSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back.build().unwrap(), h);
    }

    #[test]
    fn rejects_bad_observables() {
        assert!(PiecewiseSmooth::new(vec![Scalar::ratio(1, 2)], vec![Poly::one()]).is_err());
        assert!(PiecewiseSmooth::new(vec![Scalar::one()], vec![Poly::one(), Poly::one()]).is_err());
        assert!(PiecewiseSmooth::new(
            vec![Scalar::ratio(1, 2), Scalar::ratio(1, 3)],
            vec![Poly::one(), Poly::one(), Poly::one()]
        )
        .is_err());
    }
}
