//! Piecewise monotone interval maps with polynomial branches.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{Poly, RationalFn};
use crate::scalar::{qi, Scalar, Q, DEFAULT_BITS};

/// Default bound on branch polynomial degree.
pub const DEFAULT_DEGREE_BOUND: usize = 8;
/// Default cap on the number of cells a refinement may produce.
pub const DEFAULT_CELL_BUDGET: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "-",
            Side::Right => "+",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub lo: Scalar,
    pub hi: Scalar,
    pub poly: Poly,
    /// +1 increasing, -1 decreasing
    pub orientation: i8,
    /// Exact `T(lo⁺)` and `T(hi⁻)` when known independently of the coefficients.
    pub endpoint_values: Option<(Scalar, Scalar)>,
}

impl Branch {
    /// Closed image interval `(min, max)`.
    pub fn image(&self) -> (Scalar, Scalar) {
        let a = self.eval_at(&self.lo);
        let b = self.eval_at(&self.hi);
        if self.orientation > 0 {
            (a, b)
        } else {
            (b, a)
        }
    }

    pub fn is_affine(&self) -> bool {
        self.poly.degree() <= 1
    }

    /// The branch polynomial at `x`, using the recorded endpoint values at `lo` and `hi`.
    pub fn eval_at(&self, x: &Scalar) -> Scalar {
        if let Some((a, b)) = &self.endpoint_values {
            if x == &self.lo {
                return a.clone();
            }
            if x == &self.hi {
                return b.clone();
            }
        }
        self.poly.eval(x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseMap {
    branches: Vec<Branch>,
    breakpoints: Vec<Scalar>,
    name: String,
}

/// One cell of `Ω_n` together with `T^n` restricted to it.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub lo: Scalar,
    pub hi: Scalar,
    pub word: Vec<usize>,
    /// `T^n` on the cell, as a single polynomial.
    pub iterate: Poly,
    /// `T^n(cell)` as an ordered pair.
    pub image: (Scalar, Scalar),
}

impl Cell {
    pub fn orientation(&self, map: &PiecewiseMap) -> i8 {
        self.word.iter().map(|&i| map.branches[i].orientation).product()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefinedPartition {
    pub level: usize,
    pub cells: Vec<Cell>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Preimage {
    pub x: Scalar,
    /// Set when `x` is a breakpoint reached from one side only.
    pub side: Option<Side>,
    pub branch: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expansion {
    pub c: Scalar,
    pub lambda: Scalar,
    /// `min |(T^n)'|` for `n = 1..=n_max`
    pub min_derivative: Vec<Scalar>,
}

fn lt(a: &Scalar, b: &Scalar) -> Result<bool> {
    Ok(a.try_cmp(b)? == Ordering::Less)
}

impl PiecewiseMap {
    /// Build a map from breakpoints `0 = c_0 < … < c_N = 1` and one polynomial per branch.
    pub fn new(breakpoints: Vec<Scalar>, polys: Vec<Poly>) -> Result<Self> {
        Self::with_degree_bound(breakpoints, polys, DEFAULT_DEGREE_BOUND)
    }

    pub fn with_degree_bound(breakpoints: Vec<Scalar>, polys: Vec<Poly>, degree_bound: usize) -> Result<Self> {
        if breakpoints.len() < 2 || polys.len() != breakpoints.len() - 1 {
            return Err(Error::InvalidMap("need N+1 breakpoints for N branches".into()));
        }
        if !breakpoints[0].is_zero() || breakpoints.last() != Some(&Scalar::one()) {
            return Err(Error::InvalidMap("breakpoints must start at 0 and end at 1".into()));
        }
        for w in breakpoints.windows(2) {
            if !lt(&w[0], &w[1]).map_err(|_| Error::InvalidMap("unordered breakpoints".into()))? {
                return Err(Error::InvalidMap(format!("breakpoints not increasing at {}", w[1])));
            }
        }
        let mut branches = Vec::with_capacity(polys.len());
        for (i, poly) in polys.into_iter().enumerate() {
            if poly.degree() > degree_bound {
                return Err(Error::InvalidMap(format!("branch {i} has degree {} > {degree_bound}", poly.degree())));
            }
            let lo = breakpoints[i].clone();
            let hi = breakpoints[i + 1].clone();
            let orientation = branch_orientation(&poly, &lo, &hi)
                .ok_or_else(|| Error::InvalidMap(format!("branch {i} is not strictly monotone on its closure")))?;
            let b = Branch { lo, hi, poly, orientation, endpoint_values: None };
            let (a, c) = b.image();
            if a.hi() < &qi(0) || c.lo() > &qi(1) {
                return Err(Error::InvalidMap(format!("branch {i} leaves [0,1]")));
            }
            branches.push(b);
        }
        for i in 1..branches.len() {
            let c = &breakpoints[i];
            let (l, r) = (&branches[i - 1].poly, &branches[i].poly);
            let same_value = l.eval(c) == r.eval(c) && l.eval(c).is_exact();
            let same_slope = l.derivative().eval(c) == r.derivative().eval(c) && l.derivative().eval(c).is_exact();
            if same_value && same_slope {
                return Err(Error::InvalidMap(format!("partition not maximal at breakpoint {c}")));
            }
        }
        Ok(PiecewiseMap { branches, breakpoints, name: "custom".into() })
    }

    /// Records exact values `T(lo⁺)` and `T(hi⁻)` for branch `i`; they must lie
    /// in the enclosures given by the coefficients.
    pub fn with_endpoint_values(mut self, i: usize, at_lo: Scalar, at_hi: Scalar) -> Result<Self> {
        let b = self.branches.get_mut(i).ok_or_else(|| Error::InvalidMap(format!("no branch {i}")))?;
        let mut redundant = true;
        for (x, v) in [(&b.lo, &at_lo), (&b.hi, &at_hi)] {
            let e = b.poly.eval(x);
            if v.lo() < e.lo() || v.hi() > e.hi() {
                return Err(Error::InvalidMap(format!("endpoint value {v} outside {e}")));
            }
            redundant &= &e == v;
        }
        if !redundant {
            b.endpoint_values = Some((at_lo, at_hi));
        }
        Ok(self)
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn breakpoints(&self) -> &[Scalar] {
        &self.breakpoints
    }

    pub fn is_exact(&self) -> bool {
        self.breakpoints.iter().all(Scalar::is_exact) && self.branches.iter().all(|b| b.poly.is_exact())
    }

    pub fn is_affine(&self) -> bool {
        self.branches.iter().all(Branch::is_affine)
    }

    pub fn is_breakpoint(&self, x: &Scalar) -> Result<bool> {
        for c in &self.breakpoints {
            match x.partial_cmp_decided(c) {
                Some(Ordering::Equal) => return Ok(true),
                None => return Err(Error::Undecidable(format!("{x} against breakpoint {c}"))),
                _ => {}
            }
        }
        Ok(false)
    }

    fn check_domain(x: &Scalar) -> Result<()> {
        if x.try_cmp(&Scalar::zero()).map_err(|_| Error::OutOfDomain(x.to_string()))? == Ordering::Less
            || x.try_cmp(&Scalar::one()).map_err(|_| Error::OutOfDomain(x.to_string()))? == Ordering::Greater
        {
            return Err(Error::OutOfDomain(x.to_string()));
        }
        Ok(())
    }

    /// Branch whose closure is approached from `side` at `x`.
    pub fn branch_at(&self, x: &Scalar, side: Side) -> Result<usize> {
        Self::check_domain(x)?;
        for (i, b) in self.branches.iter().enumerate() {
            let inside = match side {
                Side::Left => lt(&b.lo, x)? && x.try_cmp(&b.hi)? != Ordering::Greater,
                Side::Right => x.try_cmp(&b.lo)? != Ordering::Less && lt(x, &b.hi)?,
            };
            if inside {
                return Ok(i);
            }
        }
        Err(Error::NoAdjacentBranch { point: x.to_string(), side: format!("{side:?}").to_lowercase() })
    }

    /// Branch whose open domain contains `x`; fails on breakpoints.
    pub fn branch_containing(&self, x: &Scalar) -> Result<usize> {
        if self.is_breakpoint(x)? {
            return Err(Error::PointOnBoundary(x.to_string()));
        }
        self.branch_at(x, Side::Right)
    }

    pub fn evaluate_one_sided(&self, x: &Scalar, side: Side) -> Result<Scalar> {
        let i = self.branch_at(x, side)?;
        Ok(self.branches[i].eval_at(x))
    }

    /// `T(x)` for a point off the breakpoint set.
    pub fn evaluate(&self, x: &Scalar) -> Result<Scalar> {
        let i = self.branch_containing(x)?;
        Ok(self.branches[i].poly.eval(x))
    }

    pub fn derivative_one_sided(&self, x: &Scalar, side: Side, order: usize) -> Result<Scalar> {
        let i = self.branch_at(x, side)?;
        Ok(self.branches[i].poly.nth_derivative(order).eval(x))
    }

    /// All `x` with `y = T(x^-)` or `y = T(x^+)`.
    pub fn preimages(&self, y: &Scalar) -> Result<Vec<Preimage>> {
        Self::check_domain(y)?;
        let mut out = Vec::new();
        for (i, b) in self.branches.iter().enumerate() {
            let (ya, yb) = (b.eval_at(&b.lo), b.eval_at(&b.hi));
            if y == &ya || y == &yb {
                let (x, side) = if y == &ya { (b.lo.clone(), Side::Right) } else { (b.hi.clone(), Side::Left) };
                out.push(Preimage { x, side: Some(side), branch: i });
                continue;
            }
            let (a, c) = b.image();
            if lt(y, &a)? || lt(&c, y)? {
                continue;
            }
            let x = b.poly.solve_monotone(y, &b.lo, &b.hi, DEFAULT_BITS)?;
            let side = if x.partial_cmp_decided(&b.lo) == Some(Ordering::Equal) {
                Some(Side::Right)
            } else if x.partial_cmp_decided(&b.hi) == Some(Ordering::Equal) {
                Some(Side::Left)
            } else {
                None
            };
            out.push(Preimage { x, side, branch: i });
        }
        Ok(out)
    }

    pub fn refine_partition(&self, n: usize) -> Result<RefinedPartition> {
        self.refine_partition_with_budget(n, DEFAULT_CELL_BUDGET)
    }

    pub fn refine_partition_with_budget(&self, n: usize, budget: usize) -> Result<RefinedPartition> {
        if n == 0 {
            return Err(Error::Precondition("refinement level n >= 1".into()));
        }
        let mut cells: Vec<Cell> = self
            .branches
            .iter()
            .enumerate()
            .map(|(i, b)| Cell { lo: b.lo.clone(), hi: b.hi.clone(), word: vec![i], iterate: b.poly.clone(), image: b.image() })
            .collect();
        for _ in 1..n {
            let mut next = Vec::new();
            for cell in &cells {
                let orient = cell.orientation(self);
                let (ya, yb) = cell.image.clone();
                for (i, b) in self.branches.iter().enumerate() {
                    let lo = if lt(&ya, &b.lo)? { b.lo.clone() } else { ya.clone() };
                    let hi = if lt(&b.hi, &yb)? { b.hi.clone() } else { yb.clone() };
                    if !lt(&lo, &hi)? {
                        continue;
                    }
                    let x0 = cell.iterate.solve_monotone(&lo, &cell.lo, &cell.hi, DEFAULT_BITS)?;
                    let x1 = cell.iterate.solve_monotone(&hi, &cell.lo, &cell.hi, DEFAULT_BITS)?;
                    let (xl, xh) = if orient > 0 { (x0, x1) } else { (x1, x0) };
                    let mut word = cell.word.clone();
                    word.push(i);
                    let (ia, ib) = (b.eval_at(&lo), b.eval_at(&hi));
                    let image = if b.orientation > 0 { (ia, ib) } else { (ib, ia) };
                    next.push(Cell { lo: xl, hi: xh, word, iterate: b.poly.compose(&cell.iterate), image });
                    if next.len() > budget {
                        return Err(Error::DepthTooLarge { budget });
                    }
                }
            }
            next.sort_by(|a, b| a.lo.lo().cmp(b.lo.lo()));
            cells = next;
        }
        Ok(RefinedPartition { level: n, cells })
    }

    /// Enclosure of `sup_x ∏_{k<n} |f(T^k x)|` where `f` is given per branch.
    ///
    /// Cells of `Ω_n` are explored through their images, depth first, with
    /// branch-and-bound pruning. The lower end is a product of per-piece
    /// infima, the upper end a product of suprema; both agree when `f` is
    /// constant on each branch.
    pub fn sup_orbit_product(&self, factor: &[RationalFn], n: usize, budget: usize) -> Result<Scalar> {
        if factor.len() != self.branches.len() {
            return Err(Error::Precondition("one factor per branch".into()));
        }
        if n == 0 {
            return Ok(Scalar::one());
        }
        let mut fmax = Scalar::zero();
        for (b, f) in self.branches.iter().zip(factor) {
            fmax = fmax.max(&sup_abs_on(f, &b.lo, &b.hi)?);
        }
        let fmax_hi = Scalar::Exact(fmax.hi().clone());
        let mut search = ProductSearch {
            map: self,
            factor,
            fmax: fmax_hi,
            best_lo: Scalar::zero(),
            best_hi: Scalar::zero(),
            nodes: 0,
            budget,
        };
        search.visit(&Scalar::zero(), &Scalar::one(), n, Scalar::one(), Scalar::one(), true)?;
        let lo = search.best_lo.lo().clone();
        let hi = search.best_hi.hi().clone().max(search.best_lo.hi().clone());
        Ok(Scalar::ball(lo, hi, DEFAULT_BITS))
    }

    /// `inverse_derivative` factors `1/|T'|` per branch.
    pub fn inverse_derivative_factors(&self) -> Vec<RationalFn> {
        self.branches
            .iter()
            .map(|b| {
                let d = b.poly.derivative().scale(&Scalar::int(b.orientation as i64));
                RationalFn::new(Poly::one(), d).simplified()
            })
            .collect()
    }

    pub fn check_uniform_expansion(&self, n_max: usize) -> Result<Expansion> {
        if n_max == 0 {
            return Err(Error::Precondition("n_max >= 1".into()));
        }
        let inv = self.inverse_derivative_factors();
        let mut mins = Vec::with_capacity(n_max);
        for n in 1..=n_max {
            let sup = self.sup_orbit_product(&inv, n, DEFAULT_CELL_BUDGET)?;
            mins.push(sup.recip()?);
        }
        let last = mins.last().unwrap();
        if last.hi() <= &qi(1) {
            return Err(Error::NotExpanding { n: n_max, cell: format!("min |(T^n)'| = {last}") });
        }
        let lambda = last.recip()?.nth_root(n_max as u32)?;
        let mut c: Option<Scalar> = None;
        for (k, m) in mins.iter().enumerate() {
            let v = m * &lambda.pow(k as u32 + 1);
            c = Some(match c {
                None => v,
                Some(c) => c.min(&v),
            });
        }
        Ok(Expansion { c: c.unwrap(), lambda, min_derivative: mins })
    }
}

fn sup_abs_on(f: &RationalFn, lo: &Scalar, hi: &Scalar) -> Result<Scalar> {
    if let Some(p) = f.as_poly() {
        return Ok(p.sup_abs(lo, hi));
    }
    f.sup_abs(lo.lo(), hi.hi())
}

fn inf_abs_on(f: &RationalFn, lo: &Scalar, hi: &Scalar) -> Result<Scalar> {
    if let Some(p) = f.as_poly() {
        if p.is_constant() {
            return Ok(p.coeff(0).abs());
        }
        // inf |p| = 0 when p changes sign, else the minimum over endpoints and critical points
        let mut best = p.eval(lo).abs().min(&p.eval(hi).abs());
        if let (Some(l), Some(h)) = (lo.as_exact(), hi.as_exact()) {
            if !p.sign_changes_in(l, h, DEFAULT_BITS)?.is_empty() {
                return Ok(Scalar::zero());
            }
            for c in p.derivative().roots_in(l, h, DEFAULT_BITS)? {
                best = best.min(&p.eval(&c).abs());
            }
            return Ok(best);
        }
        return Ok(Scalar::zero());
    }
    // 1/|g|: inf is 1/sup|g|
    let recip = f.recip();
    if let Some(g) = recip.as_poly() {
        return g.sup_abs(lo, hi).recip();
    }
    Ok(Scalar::zero())
}

struct ProductSearch<'a> {
    map: &'a PiecewiseMap,
    factor: &'a [RationalFn],
    fmax: Scalar,
    best_lo: Scalar,
    best_hi: Scalar,
    nodes: usize,
    budget: usize,
}

impl ProductSearch<'_> {
    fn visit(&mut self, ya: &Scalar, yb: &Scalar, left: usize, acc_lo: Scalar, acc_hi: Scalar, certain: bool) -> Result<()> {
        if left == 0 {
            if certain && acc_lo.lo() > self.best_lo.lo() {
                self.best_lo = acc_lo;
            }
            if acc_hi.hi() > self.best_hi.hi() {
                self.best_hi = acc_hi;
            }
            return Ok(());
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::DepthTooLarge { budget: self.budget });
        }
        // order children by their factor so the best lower bound is found early
        let mut children = Vec::new();
        for (i, b) in self.map.branches.iter().enumerate() {
            let lo = if ya.partial_cmp_decided(&b.lo) == Some(Ordering::Less) { b.lo.clone() } else { ya.max(&b.lo) };
            let hi = if yb.partial_cmp_decided(&b.hi) == Some(Ordering::Greater) { b.hi.clone() } else { yb.min(&b.hi) };
            let nonempty = match lo.partial_cmp_decided(&hi) {
                Some(Ordering::Less) => Some(true),
                Some(_) => Some(false),
                None => None,
            };
            if nonempty == Some(false) {
                continue;
            }
            let f = &self.factor[i];
            let sup = sup_abs_on(f, &lo, &hi)?;
            let inf = inf_abs_on(f, &lo, &hi)?;
            let ia = b.eval_at(&lo);
            let ib = b.eval_at(&hi);
            let (na, nb) = if b.orientation > 0 { (ia, ib) } else { (ib, ia) };
            children.push((sup, inf, na, nb, nonempty == Some(true)));
        }
        children.sort_by(|a, b| b.0.hi().cmp(a.0.hi()));
        for (sup, inf, na, nb, sure) in children {
            let hi = &acc_hi * &sup;
            let bound = &hi * &self.fmax.pow(left as u32 - 1);
            if bound.hi() <= self.best_lo.lo() && self.best_lo.lo() > &qi(0) {
                continue;
            }
            let lo = &acc_lo * &inf;
            self.visit(&na, &nb, left - 1, lo, hi, certain && sure)?;
        }
        Ok(())
    }
}

/// Orientation of a branch if its derivative has constant nonzero sign on the closure.
fn branch_orientation(poly: &Poly, lo: &Scalar, hi: &Scalar) -> Option<i8> {
    let d = poly.derivative();
    let s_lo = d.eval(lo).sign()?;
    let s_hi = d.eval(hi).sign()?;
    if s_lo == Ordering::Equal || s_lo != s_hi {
        return None;
    }
    if d.degree() >= 1 {
        match (lo.as_exact(), hi.as_exact()) {
            (Some(l), Some(h)) => {
                if !d.roots_in(l, h, 64).ok()?.is_empty() {
                    return None;
                }
            }
            _ => {
                let e = d.eval(&Scalar::ball(lo.lo().clone(), hi.hi().clone(), DEFAULT_BITS));
                e.sign()?;
            }
        }
    }
    Some(if s_lo == Ordering::Greater { 1 } else { -1 })
}

/// Ready-made maps.
pub mod builtins {
    use super::*;

    /// `x ↦ 2x mod 1`
    pub fn doubling() -> PiecewiseMap {
        beta(qi(2)).expect("valid").named("doubling")
    }

    /// `x ↦ βx mod 1` for rational `β ∈ (1, 2]`.
    pub fn beta(beta: Q) -> Result<PiecewiseMap> {
        if beta <= qi(1) || beta > qi(2) {
            return Err(Error::InvalidMap("beta must lie in (1, 2]".into()));
        }
        let c = Scalar::Exact(qi(1) / &beta);
        let b = Scalar::Exact(beta.clone());
        let map = PiecewiseMap::new(
            vec![Scalar::zero(), c, Scalar::one()],
            vec![Poly::affine(b.clone(), Scalar::zero()), Poly::affine(b, Scalar::int(-1))],
        )?;
        Ok(map.named(format!("beta:{}", crate::scalar::fmt_q(&beta))))
    }

    /// `x ↦ 1 - |2x - 1|`
    pub fn tent() -> PiecewiseMap {
        PiecewiseMap::new(
            vec![Scalar::zero(), Scalar::ratio(1, 2), Scalar::one()],
            vec![Poly::affine(Scalar::int(2), Scalar::zero()), Poly::affine(Scalar::int(-2), Scalar::int(2))],
        )
        .expect("valid")
        .named("tent")
    }

    /// A rational two-branch Markov map: `[0,3/5) → [0,1)` and `[3/5,1] → [0,3/5]`.
    pub fn markov_golden_like() -> PiecewiseMap {
        PiecewiseMap::new(
            vec![Scalar::zero(), Scalar::ratio(3, 5), Scalar::one()],
            vec![
                Poly::affine(Scalar::ratio(5, 3), Scalar::zero()),
                Poly::affine(Scalar::ratio(3, 2), Scalar::ratio(-9, 10)),
            ],
        )
        .expect("valid")
        .named("markov")
    }

    /// The four-branch family `T_{m,ρ}`.
    pub fn example(m: i64, rho: Scalar) -> Result<PiecewiseMap> {
        if m < 4 {
            return Err(Error::InvalidMap("m must be at least 4".into()));
        }
        let mq = Scalar::int(m);
        let branch2 = mq.clone();
        let c = |k: i64| Scalar::ratio(m - k, m);
        let map = PiecewiseMap::new(
            vec![Scalar::zero(), c(3), c(2), c(1), Scalar::one()],
            vec![
                Poly::affine(Scalar::ratio(m, m - 3), Scalar::zero()),
                Poly::affine(mq.clone(), Scalar::int(-(m - 3))),
                Poly::affine(branch2, Scalar::int(-(m - 2))),
                Poly::affine(rho.clone(), -(&rho * &c(1))),
            ],
        )?
        .with_endpoint_values(3, Scalar::zero(), &rho / &mq)?;
        Ok(map.named(format!("example:{m}")))
    }
}

/// JSON map description.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapSpec {
    pub breakpoints: Vec<Scalar>,
    pub branches: Vec<BranchSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BranchSpec {
    pub coeffs: Vec<Scalar>,
    #[serde(default)]
    pub orientation: Option<i8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint_values: Option<(Scalar, Scalar)>,
}

impl MapSpec {
    pub fn build(&self) -> Result<PiecewiseMap> {
        let polys = self.branches.iter().map(|b| Poly::new(b.coeffs.clone())).collect();
        let mut map = PiecewiseMap::new(self.breakpoints.clone(), polys)?;
        for (i, spec) in self.branches.iter().enumerate() {
            if let Some((lo, hi)) = &spec.endpoint_values {
                map = map.with_endpoint_values(i, lo.clone(), hi.clone())?;
            }
        }
        for (i, (b, spec)) in map.branches().iter().zip(&self.branches).enumerate() {
            if let Some(o) = spec.orientation {
                if o != b.orientation {
                    return Err(Error::InvalidMap(format!("branch {i} declared orientation {o} but is {}", b.orientation)));
                }
            }
        }
        Ok(map)
    }

    pub fn from_map(map: &PiecewiseMap) -> Self {
        MapSpec {
            breakpoints: map.breakpoints().to_vec(),
            branches: map
                .branches()
                .iter()
                .map(|b| BranchSpec {
                    coeffs: b.poly.coeffs().to_vec(),
                    orientation: Some(b.orientation),
                    endpoint_values: b.endpoint_values.clone(),
                })
                .collect(),
        }
    }
}
