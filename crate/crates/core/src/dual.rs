//! Dual eigenvectors `ℓ_λ(h) = Σ_{k ≥ k0} λ^k α_k J(h, a_k)` for the
//! rank-one corrected operator `M = L − K`, with certificates on a grid of `λ`.
//!
//! Everything here runs on exact rationals; complex `λ` is `Complex<Q>`.

use num_complex::Complex;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::map_core::{PiecewiseMap, Side};
use crate::observables::PiecewiseSmooth;
use crate::orbits::{weight_along, OrbitTable};
use crate::poly::Poly;
use crate::scalar::{q, q_to_f64, qi, Scalar, Q};
use crate::transfer::{apply_transfer, apply_transfer_n, orbit_jump};
use crate::weight::Weight;

pub type CQ = Complex<Q>;

fn exact(s: &Scalar) -> Result<Q> {
    s.as_exact().cloned().ok_or(Error::InexactData)
}

fn modulus(z: &CQ) -> Result<Scalar> {
    Scalar::Exact(z.norm_sqr()).nth_root(2)
}

/// `α_{k0-1} = 1`, `α_k = γ_{k-1} α_{k-1} / φ(a_{k-1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaSequence {
    pub j: usize,
    pub k0: usize,
    /// `values[i] = α_{k0-1+i}` up to `α_K`
    pub values: Vec<Q>,
}

impl AlphaSequence {
    pub fn get(&self, k: usize) -> &Q {
        &self.values[k + 1 - self.k0]
    }

    pub fn depth(&self) -> usize {
        self.k0 + self.values.len() - 2
    }
}

pub fn alpha_sequence(table: &OrbitTable, weight: &Weight, j: usize) -> Result<AlphaSequence> {
    let o = &table.orbits[j];
    let k0 = o.k0.ok_or(Error::TruncationTooShallow { depth: table.depth })?;
    let phi = weight_along(table, weight, j)?.iter().map(exact).collect::<Result<Vec<_>>>()?;
    if let Some(k) = phi.iter().position(Zero::is_zero) {
        return Err(Error::ZeroWeight(k));
    }
    let mut values = vec![Q::one()];
    for k in k0..=o.depth() {
        let prev = values.last().expect("nonempty");
        values.push(prev * qi(o.signs[k - 1] as i64) / &phi[k - 1]);
    }
    // |α_k| = |φ_{k0-1}(a_0)| / |φ_k(a_0)|
    let prefix: Vec<Q> = std::iter::once(Q::one())
        .chain(phi.iter().scan(Q::one(), |acc, f| {
            *acc = &*acc * f;
            Some(acc.clone())
        }))
        .collect();
    for (i, a) in values.iter().enumerate() {
        let k = k0 - 1 + i;
        if a.abs() != prefix[k0 - 1].abs() / prefix[k].abs() {
            return Err(Error::SolverFailure(format!("modulus identity fails for α_{k}")));
        }
    }
    Ok(AlphaSequence { j, k0, values })
}

/// `ℓ_λ` truncated at depth `K`, with coefficients `λ^k α_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualFunctional {
    pub lambda: CQ,
    pub alpha: AlphaSequence,
    /// `coeffs[i] = λ^k α_k` for `k = k0 + i`
    pub coeffs: Vec<CQ>,
    /// Bound on `Σ_{k>K} |λ^k α_k|`.
    pub tail: Scalar,
    /// `false` when the tail relies on the estimated `Λ^inf` rather than `inf |φ|`.
    pub tail_rigorous: bool,
}

/// `inf |φ|` over branch closures for polynomial weights with exact data.
pub fn weight_inf_abs(map: &PiecewiseMap, weight: &Weight) -> Option<Q> {
    let mut best: Option<Q> = None;
    for (b, f) in map.branches().iter().zip(&weight.per_branch) {
        let p = f.as_poly()?;
        let (lo, hi) = (b.lo.as_exact()?, b.hi.as_exact()?);
        let mut cands = vec![p.eval_q(lo), p.eval_q(hi)];
        if p.degree() > 1 {
            for r in p.derivative().roots_in(lo, hi, 128).ok()? {
                cands.push(p.eval(&r));
            }
        }
        for c in cands {
            let v = c.abs().lo().clone();
            best = Some(match best {
                Some(b) if b <= v => b,
                _ => v,
            });
        }
    }
    best
}

impl DualFunctional {
    /// Requires `|λ| < lambda_inf`.
    pub fn new(
        map: &PiecewiseMap,
        weight: &Weight,
        alpha: AlphaSequence,
        lambda: CQ,
        lambda_inf: &Scalar,
    ) -> Result<Self> {
        let r2 = Scalar::Exact(lambda.norm_sqr());
        if r2.partial_cmp_decided(&lambda_inf.pow(2)) != Some(std::cmp::Ordering::Less) {
            return Err(Error::LambdaTooLarge(format!("|λ|² = {} is not below {}", Scalar::Exact(lambda.norm_sqr()), lambda_inf.pow(2))));
        }
        let mut coeffs = Vec::new();
        let mut pow = CQ::one();
        for _ in 0..alpha.k0 {
            pow = &pow * &lambda;
        }
        for k in alpha.k0..=alpha.depth() {
            coeffs.push(pow.scale(alpha.get(k).clone()));
            pow = &pow * &lambda;
        }
        let last = modulus(coeffs.last().expect("k0 ≤ K"))?;
        let abs_l = modulus(&lambda)?;
        let (ratio, tail_rigorous) = match weight_inf_abs(map, weight) {
            Some(m) if !m.is_zero() && abs_l.partial_cmp_decided(&Scalar::Exact(m.clone())) == Some(std::cmp::Ordering::Less) => {
                (abs_l.checked_div(&Scalar::Exact(m))?, true)
            }
            _ => (abs_l.checked_div(lambda_inf)?, false),
        };
        let tail = &last * &ratio.checked_div(&(&Scalar::one() - &ratio))?;
        Ok(DualFunctional { lambda, alpha, coeffs, tail, tail_rigorous })
    }

    pub fn coeff(&self, k: usize) -> &CQ {
        &self.coeffs[k - self.alpha.k0]
    }

    /// `Σ_{k0 ≤ k ≤ K} λ^k α_k J(h, a_k)` by point evaluation, without tag checks.
    fn sum(&self, h: &PiecewiseSmooth, table: &OrbitTable) -> Result<CQ> {
        Ok(self.dot(&orbit_profile(h, table, self.alpha.j, self.alpha.k0)?))
    }

    /// `Σ λ^k α_k J_k` for jumps `J_k`, `k = k0..=K`.
    fn dot(&self, jumps: &[Q]) -> CQ {
        let mut total = CQ::zero();
        for (c, jmp) in self.coeffs.iter().zip(jumps) {
            if !jmp.is_zero() {
                total += c.scale(jmp.clone());
            }
        }
        total
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EllValue {
    pub value: CQ,
    /// `2‖h‖_∞ Σ_{k>K} |λ^k α_k|`
    pub tail_bound: Scalar,
}

/// `ℓ_λ(h)`; every jump of `h` must sit on a tagged point.
pub fn ell_lambda(f: &DualFunctional, h: &PiecewiseSmooth, table: &OrbitTable) -> Result<EllValue> {
    let tagger = table.tagger()?;
    for (x, jmp) in h.jumps()? {
        if !jmp.is_zero() && tagger.get(&x)?.is_none() {
            return Err(Error::UntaggedJump { point: x.to_string(), value: jmp.to_string() });
        }
    }
    let tail_bound = &(&Scalar::int(2) * &h.linf_norm()) * &f.tail;
    Ok(EllValue { value: f.sum(h, table)?, tail_bound })
}

/// `J(h, a_{j,k})` for `k = k0..=K`.
fn orbit_profile(h: &PiecewiseSmooth, table: &OrbitTable, j: usize, k0: usize) -> Result<Vec<Q>> {
    (k0..=table.orbits[j].depth()).map(|k| Ok(exact(&orbit_jump(h, table, j, k)?)?.clone())).collect()
}

/// `h`-dependent parts of the dual residual, shared across the λ grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedResidual {
    h_jumps: Vec<Q>,
    /// Jumps of `Lh − Kh`.
    m_jumps: Vec<Q>,
    h_inf: Scalar,
    lh_inf: Scalar,
}

pub fn prepare_residual(
    map: &PiecewiseMap,
    weight: &Weight,
    table: &OrbitTable,
    data: &RankOneData,
    h: &PiecewiseSmooth,
) -> Result<PreparedResidual> {
    let lh = apply_transfer(map, weight, h)?;
    let m = lh.sub(&data.apply(h, table)?)?;
    Ok(PreparedResidual {
        h_jumps: orbit_profile(h, table, data.j, data.k0)?,
        m_jumps: orbit_profile(&m, table, data.j, data.k0)?,
        h_inf: h.linf_norm(),
        lh_inf: lh.linf_norm(),
    })
}

/// `h_K` with `J(h_K, a_{k0}) = 1` and no other jump on the orbit beyond `k0`.
#[derive(Clone, Debug, PartialEq)]
pub struct RankOneData {
    pub j: usize,
    pub k0: usize,
    pub h_k: PiecewiseSmooth,
    /// `a_{k0-1}`
    pub pivot: Scalar,
    /// `α_{k0}^{-1}`
    pub normalizer: Q,
    /// Support `[lo, hi]` of the bump that produced `h_K`.
    pub bump_support: (Scalar, Scalar),
}

impl RankOneData {
    /// `K h = α_{k0}^{-1} J(h, a_{k0-1}) h_K`
    pub fn apply(&self, h: &PiecewiseSmooth, table: &OrbitTable) -> Result<PiecewiseSmooth> {
        let c = &self.normalizer * exact(&orbit_jump(h, table, self.j, self.k0 - 1)?)?;
        Ok(self.h_k.scale(&Scalar::Exact(c)))
    }
}

/// Quadratic bump on `[lo, hi]` equal to 1 at `at` and vanishing to second order at the other end.
fn bump(lo: &Scalar, hi: &Scalar, at_lo: bool) -> Result<PiecewiseSmooth> {
    let (at, far) = if at_lo { (lo, hi) } else { (hi, lo) };
    let d = (at - far).recip()?;
    let lin = Poly::affine(d.clone(), -(&d * far));
    let sq = &lin * &lin;
    let mut bps = Vec::new();
    let mut pieces = Vec::new();
    if !lo.is_zero() {
        bps.push(lo.clone());
        pieces.push(Poly::zero());
    }
    pieces.push(sq);
    if *hi != Scalar::one() {
        bps.push(hi.clone());
        pieces.push(Poly::zero());
    }
    PiecewiseSmooth::new(bps, pieces)
}

pub fn construct_h_k(map: &PiecewiseMap, weight: &Weight, table: &OrbitTable, j: usize) -> Result<RankOneData> {
    if table.markov {
        return Err(Error::Precondition("a non-trivial discontinuity orbit".into()));
    }
    let o = &table.orbits[j];
    let k0 = o.k0.ok_or(Error::TruncationTooShallow { depth: table.depth })?;
    let alpha = alpha_sequence(table, weight, j)?;
    let a0 = &o.points[0];
    let cells = map.refine_partition(k0)?.cells;
    let cell = cells
        .iter()
        .find(|c| match o.side {
            Side::Right => &c.lo == a0,
            Side::Left => &c.hi == a0,
        })
        .ok_or(Error::NoGammaPreimage)?;
    let at_lo = o.side == Side::Right;
    let (mut lo, mut hi) = (cell.lo.clone(), cell.hi.clone());
    let mut retries = 0;
    loop {
        let h0 = bump(&lo, &hi, at_lo)?;
        let lk = apply_transfer_n(map, weight, &h0, k0)?;
        let jmp = exact(&lk.jump_extended(&o.points[k0])?)?;
        if !jmp.is_zero() {
            let h_k = lk.scale(&Scalar::Exact(jmp.recip()));
            for k in k0 + 1..=o.depth() {
                if !h_k.jump_extended(&o.points[k])?.is_zero() {
                    return Err(Error::SolverFailure(format!("h_K jumps at a_{k}")));
                }
            }
            return Ok(RankOneData {
                j,
                k0,
                h_k,
                pivot: o.points[k0 - 1].clone(),
                normalizer: alpha.get(k0).recip(),
                bump_support: (lo, hi),
            });
        }
        retries += 1;
        if retries > 64 {
            return Err(Error::NormalizationZero(retries));
        }
        let mid = Scalar::Exact((lo.mid() + hi.mid()) / qi(2));
        if at_lo {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// Largest `k` with `J(h, a_{j,k}) ≠ 0`.
pub fn jump_depth(h: &PiecewiseSmooth, table: &OrbitTable, j: usize) -> Result<Option<usize>> {
    let mut depth = None;
    for k in 0..=table.orbits[j].depth() {
        if !orbit_jump(h, table, j, k)?.is_zero() {
            depth = Some(k);
        }
    }
    Ok(depth)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualResidual {
    /// `|ℓ_λ(Lh − Kh) − λ ℓ_λ(h)|`
    pub residual: Scalar,
    pub exact_zero: bool,
    /// `2(‖Lh‖_∞ + |λ| ‖h‖_∞) Σ_{k>K} |λ^k α_k|`
    pub tail_bound: Scalar,
    pub verdict: bool,
}

pub fn dual_eigen_residual(
    map: &PiecewiseMap,
    weight: &Weight,
    table: &OrbitTable,
    data: &RankOneData,
    f: &DualFunctional,
    h: &PiecewiseSmooth,
) -> Result<DualResidual> {
    residual_from(f, &prepare_residual(map, weight, table, data, h)?)
}

pub fn residual_from(f: &DualFunctional, p: &PreparedResidual) -> Result<DualResidual> {
    let diff = f.dot(&p.m_jumps) - &f.lambda * f.dot(&p.h_jumps);
    let exact_zero = diff.is_zero();
    let residual = modulus(&diff)?;
    let abs_l = modulus(&f.lambda)?;
    let scale = &Scalar::int(2) * &(&p.lh_inf + &(&abs_l * &p.h_inf));
    let tail_bound = &scale * &f.tail;
    let verdict = exact_zero || residual.partial_cmp_decided(&tail_bound) != Some(std::cmp::Ordering::Greater);
    Ok(DualResidual { residual, exact_zero, tail_bound, verdict })
}

/// `count` radii `0.9 Λ i / count` on each of the rays `1, i, −1, −i`.
pub fn lambda_grid(lambda_inf: &Q, count: usize) -> Vec<CQ> {
    let rays = [CQ::new(qi(1), qi(0)), CQ::new(qi(0), qi(1)), CQ::new(qi(-1), qi(0)), CQ::new(qi(0), qi(-1))];
    let mut out = Vec::with_capacity(4 * count);
    for ray in &rays {
        for i in 1..=count {
            let r = q(9, 10) * lambda_inf * qi(i as i64) / qi(count as i64);
            out.push(ray.scale(r));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridEntry {
    pub lambda: String,
    pub modulus: f64,
    pub max_residual: f64,
    pub max_tail_bound: f64,
    pub exact_zero: usize,
    pub within_tail: usize,
    pub verdict: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificationReport {
    pub orbit: usize,
    pub k0: usize,
    pub depth: usize,
    pub lambda_inf_est: String,
    pub ell_of_h_k_nonzero: bool,
    pub tail_rigorous: bool,
    pub entries: Vec<GridEntry>,
    pub verdict: bool,
}

pub fn format_complex(z: &CQ) -> String {
    let re = Scalar::Exact(z.re.clone());
    if z.im.is_zero() {
        return re.to_string();
    }
    let sign = if z.im.is_negative() { "-" } else { "+" };
    format!("{re}{sign}{}i", Scalar::Exact(z.im.abs()))
}

/// Certifies `M* ℓ_λ = λ ℓ_λ` over the grid for every observable in `suite`.
pub fn certify_grid(
    map: &PiecewiseMap,
    weight: &Weight,
    table: &OrbitTable,
    j: usize,
    lambda_inf: &Scalar,
    suite: &[PiecewiseSmooth],
) -> Result<CertificationReport> {
    let alpha = alpha_sequence(table, weight, j)?;
    let data = construct_h_k(map, weight, table, j)?;
    let mut entries = Vec::new();
    let mut tail_rigorous = true;
    let mut hk_nonzero = true;
    let prepared = suite.iter().map(|h| prepare_residual(map, weight, table, &data, h)).collect::<Result<Vec<_>>>()?;
    for lambda in lambda_grid(lambda_inf.lo(), 8) {
        let f = DualFunctional::new(map, weight, alpha.clone(), lambda.clone(), lambda_inf)?;
        tail_rigorous &= f.tail_rigorous;
        let ell_hk = ell_lambda(&f, &data.h_k, table)?.value;
        hk_nonzero &= ell_hk == f.coeff(data.k0).clone() && !ell_hk.is_zero();
        let mut entry = GridEntry {
            lambda: format_complex(&lambda),
            modulus: modulus(&lambda)?.to_f64(),
            max_residual: 0.0,
            max_tail_bound: 0.0,
            exact_zero: 0,
            within_tail: 0,
            verdict: true,
        };
        for p in &prepared {
            let r = residual_from(&f, p)?;
            entry.max_residual = entry.max_residual.max(q_to_f64(r.residual.hi()));
            entry.max_tail_bound = entry.max_tail_bound.max(q_to_f64(r.tail_bound.hi()));
            if r.exact_zero {
                entry.exact_zero += 1;
            } else if r.verdict {
                entry.within_tail += 1;
            }
            entry.verdict &= r.verdict;
        }
        entries.push(entry);
    }
    let verdict = hk_nonzero && entries.iter().all(|e| e.verdict);
    Ok(CertificationReport {
        orbit: j,
        k0: alpha.k0,
        depth: table.depth,
        lambda_inf_est: lambda_inf.to_string(),
        ell_of_h_k_nonzero: hk_nonzero,
        tail_rigorous,
        entries,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_core::builtins;
    use crate::orbits::discontinuity_orbits;

    fn beta() -> (PiecewiseMap, Weight, OrbitTable) {
        let map = builtins::beta(q(3, 2)).unwrap();
        let w = Weight::inverse_derivative(&map);
        let t = discontinuity_orbits(&map, 16).unwrap();
        (map, w, t)
    }

    #[test]
    fn alpha_for_constant_weight() {
        let (_, w, t) = beta();
        let a = alpha_sequence(&t, &w, 0).unwrap();
        assert_eq!(a.k0, 1);
        assert_eq!(a.get(0), &Q::one());
        for k in 1..=16 {
            assert_eq!(a.get(k), &(q(3, 2).pow(k as i32)));
        }
    }

    #[test]
    fn h_k_jumps_once() {
        let (map, w, t) = beta();
        let d = construct_h_k(&map, &w, &t, 0).unwrap();
        let a = &t.orbits[0].points;
        assert_eq!(d.h_k.jump_at(&a[1]).unwrap(), Scalar::one());
        // a_0 = 1⁻ so the bump sits on the right branch
        assert_eq!(d.bump_support.1, Scalar::one());
        assert!(d.bump_support.0.partial_cmp_decided(&Scalar::ratio(2, 3)) != Some(std::cmp::Ordering::Less));
    }

    #[test]
    fn ell_values() {
        let (map, w, t) = beta();
        let alpha = alpha_sequence(&t, &w, 0).unwrap();
        let lam = CQ::new(q(1, 3), q(1, 5));
        let f = DualFunctional::new(&map, &w, alpha, lam.clone(), &Scalar::ratio(2, 3)).unwrap();
        assert!(f.tail_rigorous);
        let cont = PiecewiseSmooth::from_poly(Poly::x());
        assert!(ell_lambda(&f, &cont, &t).unwrap().value.is_zero());
        let d = construct_h_k(&map, &w, &t, 0).unwrap();
        assert_eq!(ell_lambda(&f, &d.h_k, &t).unwrap().value, &lam * q(3, 2));
        let a2 = t.orbits[0].points[2].clone();
        let step = PiecewiseSmooth::indicator(&a2, &Scalar::one()).unwrap();
        assert_eq!(ell_lambda(&f, &step, &t).unwrap().value, (&lam * &lam).scale(q(9, 4)));
        let stray = PiecewiseSmooth::indicator(&Scalar::ratio(1, 7), &Scalar::one()).unwrap();
        assert!(matches!(ell_lambda(&f, &stray, &t), Err(Error::UntaggedJump { .. })));
        assert!(matches!(
            DualFunctional::new(&map, &w, alpha_sequence(&t, &w, 0).unwrap(), CQ::new(q(2, 3), q(0, 1)), &Scalar::ratio(2, 3)),
            Err(Error::LambdaTooLarge(_))
        ));
    }

    #[test]
    fn residuals_vanish() {
        let (map, w, t) = beta();
        let d = construct_h_k(&map, &w, &t, 0).unwrap();
        let alpha = alpha_sequence(&t, &w, 0).unwrap();
        let a = &t.orbits[0].points;
        let h = PiecewiseSmooth::new(
            vec![a[3].clone(), a[1].clone(), a[2].clone()],
            vec![Poly::x(), Poly::one(), Poly::constant(Scalar::int(-2)), Poly::affine(Scalar::int(2), Scalar::zero())],
        )
        .unwrap();
        for lam in [CQ::new(q(1, 3), q(0, 1)), CQ::new(q(0, 1), q(0, 1)), CQ::new(q(-1, 4), q(1, 4))] {
            let f = DualFunctional::new(&map, &w, alpha.clone(), lam, &Scalar::ratio(2, 3)).unwrap();
            for g in [&h, &d.h_k, &PiecewiseSmooth::constant(Scalar::one())] {
                let r = dual_eigen_residual(&map, &w, &t, &d, &f, g).unwrap();
                assert!(r.exact_zero, "{:?}", r);
            }
        }
        // a jump at depth K leaves a residual controlled by the tail
        let deep = PiecewiseSmooth::indicator(&a[16], &Scalar::one()).unwrap();
        let f = DualFunctional::new(&map, &w, alpha, CQ::new(q(1, 2), q(0, 1)), &Scalar::ratio(2, 3)).unwrap();
        let r = dual_eigen_residual(&map, &w, &t, &d, &f, &deep).unwrap();
        assert!(!r.exact_zero && r.verdict);
    }

    #[test]
    fn grid_shape() {
        let g = lambda_grid(&q(2, 3), 8);
        assert_eq!(g.len(), 32);
        assert_eq!(g[7], CQ::new(q(3, 5), q(0, 1)));
        assert_eq!(g[8], CQ::new(q(0, 1), q(3, 40)));
        assert_eq!(format_complex(&g[31]), "0-3/5i");
    }
}
