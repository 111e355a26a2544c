//! The weighted transfer operator `L h(y) = Σ_{T x = y} φ(x) h(x)` on
//! piecewise-polynomial observables, jump propagation along discontinuity
//! orbits, and the coefficients `A_{l,p,n}` of `D_a^p L^n`.

use std::cmp::Ordering;

use num_traits::One;

use crate::error::{Error, Result};
use crate::map_core::{Cell, PiecewiseMap, Side};
use crate::observables::PiecewiseSmooth;
use crate::orbits::OrbitTable;
use crate::poly::{Poly, RationalFn};
use crate::scalar::{qi, round_down, Scalar, Q, DEFAULT_BITS};
use crate::weight::Weight;

/// Largest polynomial degree allowed in a transferred observable.
pub const DEFAULT_DEGREE_BUDGET: usize = 16;

/// Relative tolerance for the interpolation fallback on non-affine branches.
const INTERPOLATION_TOL: f64 = 1e-9;
const INTERPOLATION_BITS: u32 = 96;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TransferConfig {
    pub degree_budget: usize,
    /// Node count for non-affine branches.
    pub interpolation_degree: usize,
}

impl Default for TransferConfig {
    fn default() -> Self {
        TransferConfig { degree_budget: DEFAULT_DEGREE_BUDGET, interpolation_degree: DEFAULT_DEGREE_BUDGET }
    }
}

/// A polynomial supported on `[lo, hi]`.
struct Contribution {
    lo: Scalar,
    hi: Scalar,
    poly: Poly,
}

fn cmp(a: &Scalar, b: &Scalar) -> Result<Ordering> {
    if a == b {
        return Ok(Ordering::Equal);
    }
    a.try_cmp(b)
}

/// Sorts and deduplicates; fails if two distinct points cannot be ordered.
///
/// Sorting by midpoint and checking neighbours suffices: decided order of
/// neighbours makes every non-adjacent pair disjoint too.
fn sorted_unique(mut points: Vec<Scalar>) -> Result<Vec<Scalar>> {
    points.sort_by_cached_key(|p| p.mid());
    let mut out: Vec<Scalar> = Vec::with_capacity(points.len());
    for p in points {
        match out.last() {
            Some(last) if cmp(last, &p)? == Ordering::Equal => {}
            _ => out.push(p),
        }
    }
    Ok(out)
}

/// Index of `x` in sorted `points`, which must contain it.
fn position(points: &[Scalar], x: &Scalar) -> Result<usize> {
    let (mut lo, mut hi) = (0, points.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        match cmp(&points[mid], x)? {
            Ordering::Equal => return Ok(mid),
            Ordering::Less => lo = mid + 1,
            Ordering::Greater => hi = mid,
        }
    }
    Err(Error::Undecidable(format!("{x} is not a partition point")))
}

fn assemble(contribs: Vec<Contribution>) -> Result<PiecewiseSmooth> {
    let mut all = vec![Scalar::zero(), Scalar::one()];
    for c in &contribs {
        all.push(c.lo.clone());
        all.push(c.hi.clone());
    }
    let points = sorted_unique(all)?;
    let mut pieces = vec![Poly::zero(); points.len() - 1];
    for c in &contribs {
        let (a, b) = (position(&points, &c.lo)?, position(&points, &c.hi)?);
        for piece in &mut pieces[a..b] {
            *piece = &*piece + &c.poly;
        }
    }
    let inner = points[1..points.len() - 1].to_vec();
    Ok(PiecewiseSmooth::new(inner, pieces)?.normalize())
}

/// Exact rational interpolation through `(nodes[i], values[i])` in Newton form.
fn interpolate(nodes: &[Q], values: &[Q]) -> Poly {
    let n = nodes.len();
    let mut dd: Vec<Q> = values.to_vec();
    for level in 1..n {
        for i in (level..n).rev() {
            dd[i] = (&dd[i] - &dd[i - 1]) / (&nodes[i] - &nodes[i - level]);
        }
    }
    let mut p = Poly::constant(Scalar::Exact(dd[n - 1].clone()));
    for i in (0..n - 1).rev() {
        let factor = Poly::affine(Scalar::one(), Scalar::Exact(-nodes[i].clone()));
        p = &(&p * &factor) + &Poly::constant(Scalar::Exact(dd[i].clone()));
    }
    p
}

fn chebyshev_nodes(lo: &Q, hi: &Q, count: usize) -> Vec<Q> {
    let mid = (lo + hi) / qi(2);
    let half = (hi - lo) / qi(2);
    (0..count)
        .map(|j| {
            let t = (std::f64::consts::PI * (2 * j + 1) as f64 / (2 * count) as f64).cos();
            let t = Q::new(((t * (1u64 << 40) as f64).round() as i64).into(), (1i64 << 40).into());
            &mid + &half * t
        })
        .collect()
}

/// Pushes `g` on `[x_lo, x_hi]` forward through the monotone polynomial `forward`.
fn push_forward(
    out: &mut Vec<Contribution>,
    x_lo: &Scalar,
    x_hi: &Scalar,
    forward: &Poly,
    orientation: i8,
    g: &RationalFn,
    cfg: &TransferConfig,
) -> Result<()> {
    let (a, b) = (forward.eval(x_lo), forward.eval(x_hi));
    let (lo, hi) = if orientation > 0 { (a, b) } else { (b, a) };
    if let (Some((s, t)), Some(gp)) = (forward.as_affine(), g.as_poly()) {
        let inv_s = s.recip()?;
        let poly = gp.compose_affine(&inv_s, &(-(&t * &inv_s)));
        if poly.degree() > cfg.degree_budget {
            return Err(Error::DegreeOverflow { degree: poly.degree(), budget: cfg.degree_budget });
        }
        out.push(Contribution { lo, hi, poly });
        return Ok(());
    }
    interpolate_forward(out, x_lo, x_hi, forward, orientation, g, cfg, 0)
}

/// Maximum number of bisections of a source interval before giving up.
const MAX_SPLITS: u32 = 8;

#[allow(clippy::too_many_arguments)]
fn interpolate_forward(
    out: &mut Vec<Contribution>,
    x_lo: &Scalar,
    x_hi: &Scalar,
    forward: &Poly,
    orientation: i8,
    g: &RationalFn,
    cfg: &TransferConfig,
    splits: u32,
) -> Result<()> {
    let (a, b) = (forward.eval(x_lo), forward.eval(x_hi));
    let (lo, hi) = if orientation > 0 { (a, b) } else { (b, a) };
    let (ylo, yhi) = (lo.mid(), hi.mid());
    let count = cfg.interpolation_degree + 1;
    let pullback = |y: &Q| -> Result<Scalar> {
        let x = forward.solve_monotone(&Scalar::Exact(y.clone()), x_lo, x_hi, INTERPOLATION_BITS)?;
        g.eval(&x)
    };
    let nodes = chebyshev_nodes(&ylo, &yhi, count);
    let values = nodes.iter().map(|y| pullback(y).map(|v| round_down(&v.mid(), INTERPOLATION_BITS))).collect::<Result<Vec<_>>>()?;
    let poly = interpolate(&nodes, &values);
    // a posteriori check between the nodes
    let mut err = Q::from_integer(0.into());
    let mut scale = Q::from_integer(0.into());
    for y in &chebyshev_nodes(&ylo, &yhi, 2 * count + 1) {
        let exact = pullback(y)?;
        let d = (&poly.eval_q(y) - &exact).abs();
        err = err.max(d.hi().clone());
        scale = scale.max(exact.abs().hi().clone());
    }
    let tol = Q::from_float(INTERPOLATION_TOL).unwrap_or_default() * (scale + Q::one());
    if err > tol {
        if splits >= MAX_SPLITS || !x_lo.is_exact() || !x_hi.is_exact() {
            return Err(Error::ApproximationError(format!(
                "interpolation error {} exceeds tolerance",
                crate::scalar::q_to_f64(&err)
            )));
        }
        let mid = Scalar::Exact((x_lo.mid() + x_hi.mid()) / qi(2));
        interpolate_forward(out, x_lo, &mid, forward, orientation, g, cfg, splits + 1)?;
        return interpolate_forward(out, &mid, x_hi, forward, orientation, g, cfg, splits + 1);
    }
    let mut coeffs = poly.coeffs().to_vec();
    let c0 = coeffs[0].mid();
    let radius = &err * qi(2);
    coeffs[0] = Scalar::ball(&c0 - &radius, &c0 + &radius, DEFAULT_BITS);
    out.push(Contribution { lo, hi, poly: Poly::new(coeffs) });
    Ok(())
}

/// `L_ψ h` for a per-branch weight `ψ`.
pub fn apply_weighted(map: &PiecewiseMap, psi: &[RationalFn], h: &PiecewiseSmooth, cfg: &TransferConfig) -> Result<PiecewiseSmooth> {
    let refined = h.refine(map.breakpoints())?;
    let mut out = Vec::new();
    for (i, piece) in refined.pieces().iter().enumerate() {
        let (lo, hi) = refined.interval(i);
        let b = map.branch_at(&lo, Side::Right)?;
        let branch = &map.branches()[b];
        let g = &psi[b] * &RationalFn::poly(piece.clone());
        push_forward(&mut out, &lo, &hi, &branch.poly, branch.orientation, &g, cfg)?;
    }
    assemble(out)
}

pub fn apply_transfer(map: &PiecewiseMap, weight: &Weight, h: &PiecewiseSmooth) -> Result<PiecewiseSmooth> {
    apply_weighted(map, &weight.per_branch, h, &TransferConfig::default())
}

/// `L^n h` by repeated application.
pub fn apply_transfer_n(map: &PiecewiseMap, weight: &Weight, h: &PiecewiseSmooth, n: usize) -> Result<PiecewiseSmooth> {
    (0..n).try_fold(h.clone(), |acc, _| apply_transfer(map, weight, &acc))
}

/// `φ_n = ∏_{k<n} φ∘T^k` restricted to a cell of `Ω_n`.
pub fn cell_weight(map: &PiecewiseMap, weight: &Weight, cell: &Cell) -> RationalFn {
    let mut iterate = Poly::x();
    let mut phi = RationalFn::one();
    for &b in &cell.word {
        phi = &phi * &weight.per_branch[b].compose(&iterate);
        iterate = map.branches()[b].poly.compose(&iterate);
    }
    phi
}

/// `Σ_ω (ψ_ω h)∘(T^n|_ω)^{-1}` over the cells of `Ω_n`, one weight per cell.
pub fn transfer_over_cells(
    map: &PiecewiseMap,
    cells: &[Cell],
    psi: &[RationalFn],
    h: &PiecewiseSmooth,
    cfg: &TransferConfig,
) -> Result<PiecewiseSmooth> {
    let mut ends: Vec<Scalar> = cells.iter().map(|c| c.lo.clone()).collect();
    ends.extend(cells.iter().map(|c| c.hi.clone()));
    let refined = h.refine(&sorted_unique(ends)?)?;
    let mut out = Vec::new();
    let mut c = 0;
    for (i, piece) in refined.pieces().iter().enumerate() {
        let (lo, hi) = refined.interval(i);
        while cmp(&cells[c].hi, &lo)? != Ordering::Greater {
            c += 1;
        }
        let cell = &cells[c];
        let g = &psi[c] * &RationalFn::poly(piece.clone());
        push_forward(&mut out, &lo, &hi, &cell.iterate, cell.orientation(map), &g, cfg)?;
    }
    assemble(out)
}

/// `L^n h` computed directly on `Ω_n` with the weight `φ_n`.
pub fn apply_transfer_n_direct(map: &PiecewiseMap, weight: &Weight, h: &PiecewiseSmooth, n: usize) -> Result<PiecewiseSmooth> {
    let part = map.refine_partition(n)?;
    let psi: Vec<RationalFn> = part.cells.iter().map(|c| cell_weight(map, weight, c)).collect();
    transfer_over_cells(map, &part.cells, &psi, h, &TransferConfig::default())
}

#[derive(Clone, Debug, PartialEq)]
pub struct JumpShiftRow {
    pub k: usize,
    /// `J(Lh, a_k)`
    pub lhs: Scalar,
    /// `γ_{k-1} φ(a_{k-1}) J(h, a_{k-1})`
    pub rhs: Scalar,
    pub residual: Scalar,
}

/// `J(h, a_{j,k})`, taken one-sided at `a_{j,0}`.
pub fn orbit_jump(h: &PiecewiseSmooth, table: &OrbitTable, j: usize, k: usize) -> Result<Scalar> {
    let o = &table.orbits[j];
    if k == 0 {
        h.jump_one_sided(&o.points[0], o.side == Side::Right)
    } else {
        h.jump_extended(&o.points[k])
    }
}

/// Checks `J(Lh, a_k) = γ_{k-1} φ(a_{k-1}) J(h, a_{k-1})` along orbit `j`.
pub fn verify_jump_shift(
    map: &PiecewiseMap,
    weight: &Weight,
    table: &OrbitTable,
    h: &PiecewiseSmooth,
    j: usize,
    ks: std::ops::RangeInclusive<usize>,
) -> Result<Vec<JumpShiftRow>> {
    let o = &table.orbits[j];
    let k0 = o.k0.ok_or(Error::TruncationTooShallow { depth: table.depth })?;
    if *ks.start() < k0 {
        return Err(Error::PreconditionK0 { k: *ks.start(), k0 });
    }
    if *ks.end() > o.depth() {
        return Err(Error::TruncationTooShallow { depth: o.depth() });
    }
    let lh = apply_transfer(map, weight, h)?;
    let mut rows = Vec::new();
    for k in ks {
        let lhs = orbit_jump(&lh, table, j, k)?;
        let b = o.branches[k - 1];
        let phi = weight.eval_on_branch(b, &o.points[k - 1])?;
        let gamma = Scalar::int(o.signs[k - 1] as i64);
        let rhs = &(&gamma * &phi) * &orbit_jump(h, table, j, k - 1)?;
        let residual = (&lhs - &rhs).abs();
        rows.push(JumpShiftRow { k, lhs, rhs, residual });
    }
    Ok(rows)
}

/// `A_{l,p,n}` on each cell of `Ω_n`, for `0 ≤ l ≤ p ≤ p_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistortionTable {
    pub n: usize,
    pub p_max: usize,
    pub cells: Vec<Cell>,
    /// `coeffs[c][p][l]`
    pub coeffs: Vec<Vec<Vec<RationalFn>>>,
}

impl DistortionTable {
    /// `max_ω ‖A_{l,p,n}‖_{L∞(ω)}`
    pub fn sup_norm(&self, l: usize, p: usize) -> Result<Scalar> {
        let mut best = Scalar::zero();
        for (cell, a) in self.cells.iter().zip(&self.coeffs) {
            best = best.max(&a[p][l].sup_abs(cell.lo.exact()?, cell.hi.exact()?)?);
        }
        Ok(best)
    }

    /// `max_l ‖A_{l,p,n}‖_∞`
    pub fn max_sup(&self, p: usize) -> Result<Scalar> {
        (0..=p).try_fold(Scalar::zero(), |m, l| Ok(m.max(&self.sup_norm(l, p)?)))
    }
}

fn log_derivative(f: &RationalFn) -> RationalFn {
    let d = f.derivative();
    RationalFn::new(&d.num * &f.den, &d.den * &f.num).simplified()
}

/// Builds `A_{l,p,n}` from `A_{0,0,n} = 1` by differentiating `D_a^p L^n h`.
pub fn distortion_coefficients(map: &PiecewiseMap, weight: &Weight, n: usize, p_max: usize) -> Result<DistortionTable> {
    let part = map.refine_partition(n)?;
    let mut coeffs = Vec::with_capacity(part.cells.len());
    for cell in &part.cells {
        let dinv = RationalFn::poly(cell.iterate.derivative()).recip();
        let ld = log_derivative(&cell_weight(map, weight, cell));
        let mut rows: Vec<Vec<RationalFn>> = vec![vec![RationalFn::one()]];
        for p in 0..p_max {
            let prev = &rows[p];
            let mut next = Vec::with_capacity(p + 2);
            for l in 0..=p + 1 {
                let mut acc = RationalFn::poly(Poly::zero());
                if l <= p {
                    acc = &acc + &prev[l].derivative();
                    acc = &acc + &(&prev[l] * &ld);
                }
                if l >= 1 {
                    acc = &acc + &prev[l - 1];
                }
                next.push(&acc * &dinv);
            }
            rows.push(next);
        }
        coeffs.push(rows);
    }
    let table = DistortionTable { n, p_max, cells: part.cells, coeffs };
    for (cell, a) in table.cells.iter().zip(&table.coeffs) {
        let d = RationalFn::poly(cell.iterate.derivative());
        for (p, row) in a.iter().enumerate() {
            let closed = (0..p).fold(RationalFn::one(), |acc, _| &acc * &d.recip());
            if !row[p].same_as(&closed) {
                return Err(Error::SolverFailure(format!("A_{{p,p,n}} differs from the closed form at p = {p}")));
            }
        }
    }
    Ok(table)
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityCheck {
    /// `‖lhs − rhs‖_∞`
    pub residual: Scalar,
    /// `max_l ‖A_{l,p,n}‖_∞`, when the check involves the coefficients.
    pub coefficient_bound: Option<Scalar>,
}

/// `D_a(L h) = L(φ'/(φ T') h) + L(D_a h / T')`, as `L_{φ'/T'} h + L_{φ/T'} D_a h`.
pub fn verify_derivative_identity(map: &PiecewiseMap, weight: &Weight, h: &PiecewiseSmooth) -> Result<IdentityCheck> {
    let cfg = TransferConfig::default();
    let lhs = apply_transfer(map, weight, h)?.derivative();
    let mut psi_a = Vec::new();
    let mut psi_b = Vec::new();
    for (b, phi) in map.branches().iter().zip(&weight.per_branch) {
        let inv_d = RationalFn::poly(b.poly.derivative()).recip();
        psi_a.push(&phi.derivative() * &inv_d);
        psi_b.push(phi * &inv_d);
    }
    let rhs = apply_weighted(map, &psi_a, h, &cfg)?.add(&apply_weighted(map, &psi_b, &h.derivative(), &cfg)?)?;
    Ok(IdentityCheck { residual: lhs.sub(&rhs)?.linf_norm(), coefficient_bound: None })
}

/// `D_a^p L^n h = Σ_{l ≤ p} L^n(A_{l,p,n} D_a^l h)`.
pub fn verify_super_da(map: &PiecewiseMap, weight: &Weight, h: &PiecewiseSmooth, n: usize, p: usize) -> Result<IdentityCheck> {
    let mut checks = super_da_checks(map, weight, h, n, p..=p)?;
    Ok(checks.pop().expect("one entry"))
}

/// Checks for every `p ≤ p_max`, sharing the distortion table and `L^n h`.
pub fn verify_super_da_upto(map: &PiecewiseMap, weight: &Weight, h: &PiecewiseSmooth, n: usize, p_max: usize) -> Result<Vec<IdentityCheck>> {
    super_da_checks(map, weight, h, n, 0..=p_max)
}

fn super_da_checks(
    map: &PiecewiseMap,
    weight: &Weight,
    h: &PiecewiseSmooth,
    n: usize,
    ps: std::ops::RangeInclusive<usize>,
) -> Result<Vec<IdentityCheck>> {
    let cfg = TransferConfig::default();
    let table = distortion_coefficients(map, weight, n, *ps.end())?;
    let ln = apply_transfer_n(map, weight, h, n)?;
    let phis: Vec<RationalFn> = table.cells.iter().map(|c| cell_weight(map, weight, c)).collect();
    let mut out = Vec::new();
    for p in ps {
        let mut rhs = PiecewiseSmooth::zero();
        for l in 0..=p {
            let psi: Vec<RationalFn> = phis.iter().zip(&table.coeffs).map(|(f, a)| f * &a[p][l]).collect();
            let term = transfer_over_cells(map, &table.cells, &psi, &h.nth_derivative(l), &cfg)?;
            rhs = rhs.add(&term)?;
        }
        let residual = ln.nth_derivative(p).sub(&rhs)?.linf_norm();
        out.push(IdentityCheck { residual, coefficient_bound: Some(table.max_sup(p)?) });
    }
    Ok(out)
}
