//! Ulam discretization of the transfer operator: bin-averaged transition
//! masses, their dense eigenvalues and a projection consistency check.
//!
//! The eigenvalues computed here are a discretization spectrum. They are
//! plotted against the rigorous radii but prove nothing on their own.

use std::cmp::Ordering;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::bounds::bv_essential_radius;
use crate::error::{Error, Result};
use crate::map_core::PiecewiseMap;
use crate::observables::PiecewiseSmooth;
use crate::orbits::{discontinuity_orbits, lambda_overall};
use crate::poly::Poly;
use crate::scalar::{round_down, Scalar, Q, DEFAULT_BITS};
use crate::transfer::apply_transfer;
use crate::weight::{Weight, WeightMode};

/// Dyadic precision used when an inexact alignment point becomes a bin edge.
const EDGE_BITS: u32 = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinPolicy {
    Uniform,
    /// Branch endpoints and their images become bin edges.
    GammaAligned,
}

impl BinPolicy {
    pub fn parse(s: &str) -> Result<BinPolicy> {
        match s {
            "uniform" => Ok(BinPolicy::Uniform),
            "gamma" | "gamma-aligned" | "gamma_aligned" => Ok(BinPolicy::GammaAligned),
            _ => Err(Error::Parse(format!("unknown bin policy {s:?}; use uniform or gamma-aligned"))),
        }
    }
}

/// Transition masses between bins.
///
/// `rows[i]` lists `(j, m_ij)` with `m_ij = ∫_{B_j ∩ T⁻¹B_i} φ·|T'|`, sorted by
/// `j`. Dividing row `i` by `|B_i|` gives the operator on bin averages.
#[derive(Clone, Debug, PartialEq)]
pub struct UlamMatrix {
    pub policy: BinPolicy,
    /// `M + 1` increasing edges from `0` to `1`.
    pub edges: Vec<Q>,
    pub rows: Vec<Vec<(usize, Scalar)>>,
}

impl UlamMatrix {
    pub fn size(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn width(&self, i: usize) -> Q {
        &self.edges[i + 1] - &self.edges[i]
    }

    pub fn mass(&self, i: usize, j: usize) -> Scalar {
        match self.rows[i].binary_search_by(|(k, _)| k.cmp(&j)) {
            Ok(p) => self.rows[i][p].1.clone(),
            Err(_) => Scalar::zero(),
        }
    }

    pub fn is_exact(&self) -> bool {
        self.rows.iter().flatten().all(|(_, v)| v.is_exact())
    }

    /// `Σ_j m_ij`
    pub fn row_sums(&self) -> Vec<Scalar> {
        self.rows.iter().map(|r| r.iter().map(|(_, v)| v.clone()).sum()).collect()
    }

    /// `Σ_i m_ij`, equal to `∫_{B_j} φ·|T'|`.
    pub fn column_sums(&self) -> Vec<Scalar> {
        let mut out = vec![Scalar::zero(); self.size()];
        for row in &self.rows {
            for (j, v) in row {
                out[*j] = &out[*j] + v;
            }
        }
        out
    }

    /// Bin averages of `L h` when `h` has bin averages `c`.
    pub fn apply(&self, c: &[Scalar]) -> Result<Vec<Scalar>> {
        if c.len() != self.size() {
            return Err(Error::Precondition(format!("vector of length {}", self.size())));
        }
        (0..self.size())
            .map(|i| {
                let s: Scalar = self.rows[i].iter().map(|(j, m)| m * &c[*j]).sum();
                s.checked_div(&Scalar::from(self.width(i)))
            })
            .collect()
    }

    /// Operator matrix on bin averages in double precision.
    pub fn operator_f64(&self) -> DMatrix<f64> {
        let n = self.size();
        let mut a = DMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            let w = crate::scalar::q_to_f64(&self.width(i));
            for (j, m) in row {
                a[(i, *j)] = m.to_f64() / w;
            }
        }
        a
    }
}

pub fn bin_edges(map: &PiecewiseMap, m: usize, policy: BinPolicy) -> Result<Vec<Q>> {
    if m < 2 {
        return Err(Error::Precondition("at least 2 bins".into()));
    }
    let uniform = |lo: &Q, hi: &Q, k: usize| -> Vec<Q> {
        (0..=k).map(|t| lo + (hi - lo) * Q::from_integer((t as i64).into()) / Q::from_integer((k as i64).into())).collect()
    };
    match policy {
        BinPolicy::Uniform => Ok(uniform(&Q::zero(), &Q::from_integer(1.into()), m)),
        BinPolicy::GammaAligned => {
            let mut pts: Vec<Q> = Vec::new();
            let snap = |s: &Scalar| s.as_exact().cloned().unwrap_or_else(|| round_down(&s.mid(), EDGE_BITS));
            pts.extend(map.breakpoints().iter().map(snap));
            for b in map.branches() {
                pts.push(snap(&b.eval_at(&b.lo)));
                pts.push(snap(&b.eval_at(&b.hi)));
            }
            pts.retain(|p| !p.is_negative() && *p <= Q::from_integer(1.into()));
            pts.sort();
            pts.dedup();
            let segs = pts.len() - 1;
            if m < segs {
                return Err(Error::Precondition(format!("gamma-aligned bins need M >= {segs}")));
            }
            let lens: Vec<f64> = pts.windows(2).map(|w| crate::scalar::q_to_f64(&(&w[1] - &w[0]))).collect();
            let mut counts: Vec<usize> = lens.iter().map(|l| ((l * m as f64).round() as usize).max(1)).collect();
            // Fix the total by adjusting the longest (or most populated) segments.
            while counts.iter().sum::<usize>() > m {
                let i = (0..segs).filter(|&i| counts[i] > 1).max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a))).expect("M >= segments");
                counts[i] -= 1;
            }
            while counts.iter().sum::<usize>() < m {
                let i = (0..segs)
                    .max_by(|&a, &b| (lens[a] / counts[a] as f64).total_cmp(&(lens[b] / counts[b] as f64)).then(b.cmp(&a)))
                    .expect("nonempty");
                counts[i] += 1;
            }
            let mut edges = vec![pts[0].clone()];
            for (s, &k) in counts.iter().enumerate() {
                edges.extend(uniform(&pts[s], &pts[s + 1], k).into_iter().skip(1));
            }
            Ok(edges)
        }
    }
}

/// `φ·|T'|` on branch `i` as a polynomial.
fn density_on_branch(map: &PiecewiseMap, weight: &Weight, i: usize) -> Result<Poly> {
    let b = &map.branches()[i];
    if weight.mode == WeightMode::InverseDerivative {
        return Ok(Poly::one());
    }
    let phi = weight.on_branch(i).as_poly().ok_or_else(|| Error::Precondition("polynomial weight or 1/|T'|".into()))?;
    let d = b.poly.derivative();
    let signed = &phi * &d;
    Ok(if b.orientation < 0 { -&signed } else { signed })
}

fn cmp(a: &Scalar, b: &Scalar) -> Result<Ordering> {
    if a == b {
        return Ok(Ordering::Equal);
    }
    a.try_cmp(b)
}

pub fn ulam_matrix(map: &PiecewiseMap, weight: &Weight, m: usize, policy: BinPolicy) -> Result<UlamMatrix> {
    let edges = bin_edges(map, m, policy)?;
    for (i, w) in edges.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(Error::DegenerateBin(i));
        }
    }
    let mut rows: Vec<Vec<(usize, Scalar)>> = vec![Vec::new(); m];
    let edge_s: Vec<Scalar> = edges.iter().cloned().map(Scalar::from).collect();
    for (bi, b) in map.branches().iter().enumerate() {
        let g = density_on_branch(map, weight, bi)?;
        let (ya, yb) = (b.eval_at(&b.lo), b.eval_at(&b.hi));
        let (ymin, ymax) = if b.orientation > 0 { (ya.clone(), yb.clone()) } else { (yb.clone(), ya.clone()) };
        let solve = |y: &Scalar| -> Result<Scalar> {
            if y == &ya {
                Ok(b.lo.clone())
            } else if y == &yb {
                Ok(b.hi.clone())
            } else {
                b.poly.solve_monotone(y, &b.lo, &b.hi, DEFAULT_BITS)
            }
        };
        // Target bins met by the branch image.
        let first = edges.partition_point(|e| Scalar::from(e.clone()).try_cmp(&ymin).map(|o| o != Ordering::Greater).unwrap_or(false));
        let first = first.saturating_sub(1);
        for i in first..m {
            if cmp(&edge_s[i], &ymax)? != Ordering::Less {
                break;
            }
            let lo_y = if cmp(&edge_s[i], &ymin)? == Ordering::Greater { edge_s[i].clone() } else { ymin.clone() };
            let hi_y = if cmp(&edge_s[i + 1], &ymax)? == Ordering::Less { edge_s[i + 1].clone() } else { ymax.clone() };
            if cmp(&lo_y, &hi_y)? != Ordering::Less {
                continue;
            }
            let (mut p, mut q) = (solve(&lo_y)?, solve(&hi_y)?);
            if b.orientation < 0 {
                std::mem::swap(&mut p, &mut q);
            }
            let start = edges.partition_point(|e| Scalar::from(e.clone()).try_cmp(&p).map(|o| o != Ordering::Greater).unwrap_or(false));
            for j in start.saturating_sub(1)..m {
                if cmp(&edge_s[j], &q)? != Ordering::Less {
                    break;
                }
                let a = if cmp(&edge_s[j], &p)? == Ordering::Greater { edge_s[j].clone() } else { p.clone() };
                let c = if cmp(&edge_s[j + 1], &q)? == Ordering::Less { edge_s[j + 1].clone() } else { q.clone() };
                if cmp(&a, &c)? != Ordering::Less {
                    continue;
                }
                let v = g.integral(&a, &c);
                match rows[i].binary_search_by(|(k, _)| k.cmp(&j)) {
                    Ok(pos) => rows[i][pos].1 = &rows[i][pos].1 + &v,
                    Err(pos) => rows[i].insert(pos, (j, v)),
                }
            }
        }
    }
    Ok(UlamMatrix { policy, edges, rows })
}

/// Bin averages of `h`.
pub fn project(h: &PiecewiseSmooth, edges: &[Q]) -> Result<Vec<Scalar>> {
    let interior: Vec<Scalar> = edges[1..edges.len() - 1].iter().cloned().map(Scalar::from).collect();
    let r = h.refine(&interior)?;
    let mut out = Vec::with_capacity(edges.len() - 1);
    let mut acc = Scalar::zero();
    let mut bin = 0;
    for (k, piece) in r.pieces().iter().enumerate() {
        let (a, b) = r.interval(k);
        acc = &acc + &piece.integral(&a, &b);
        let edge = Scalar::from(edges[bin + 1].clone());
        if b == edge {
            out.push(acc.checked_div(&Scalar::from(&edges[bin + 1] - &edges[bin]))?);
            acc = Scalar::zero();
            bin += 1;
        }
    }
    if out.len() != edges.len() - 1 {
        return Err(Error::Precondition("refinement did not align with the bin edges".into()));
    }
    Ok(out)
}

/// `‖U Πh − Π L h‖_{L¹}` for one matrix.
pub fn projection_error(map: &PiecewiseMap, weight: &Weight, mat: &UlamMatrix, h: &PiecewiseSmooth) -> Result<Scalar> {
    let lhs = mat.apply(&project(h, &mat.edges)?)?;
    let rhs = project(&apply_transfer(map, weight, h)?, &mat.edges)?;
    Ok(lhs.iter().zip(&rhs).enumerate().map(|(i, (a, b))| &(a - b).abs() * &Scalar::from(mat.width(i))).sum())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConsistencyRow {
    pub m: usize,
    pub error: f64,
}

/// Projection errors over several `M` plus the least-squares log-log slope.
pub fn projection_consistency(
    map: &PiecewiseMap,
    weight: &Weight,
    h: &PiecewiseSmooth,
    ms: &[usize],
    policy: BinPolicy,
) -> Result<(Vec<ConsistencyRow>, f64)> {
    let mut rows = Vec::new();
    for &m in ms {
        let mat = ulam_matrix(map, weight, m, policy)?;
        rows.push(ConsistencyRow { m, error: projection_error(map, weight, &mat, h)?.to_f64() });
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| ((r.m as f64).ln(), r.error.ln())).collect();
    Ok((rows, loglog_slope(&pts)))
}

fn loglog_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenSpectrum {
    pub m: usize,
    /// Sorted by decreasing modulus, ties by argument.
    pub values: Vec<(f64, f64)>,
    /// `‖A − Q T Qᵀ‖_F / ‖A‖_F` for the computed Schur form.
    pub backward_error: f64,
    pub norm_1: f64,
}

impl EigenSpectrum {
    pub fn leading(&self) -> Option<Complex64> {
        self.values.first().map(|&(re, im)| Complex64::new(re, im))
    }

    pub fn moduli(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(|&(re, im)| re.hypot(im))
    }
}

pub fn eigen_spectrum(mat: &UlamMatrix) -> Result<EigenSpectrum> {
    let a = mat.operator_f64();
    let norm_1 = (0..a.ncols()).map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let schur = Schur::try_new(a.clone(), 1e-14, 10_000).ok_or_else(|| Error::SolverFailure("Schur iteration did not converge".into()))?;
    let eig = schur.complex_eigenvalues();
    let (qm, t) = schur.unpack();
    let recon = &qm * &t * qm.transpose();
    let an = a.norm();
    let backward_error = if an == 0.0 { 0.0 } else { (recon - &a).norm() / an };
    let mut values: Vec<(f64, f64)> = eig.iter().map(|z| (z.re, z.im)).collect();
    if values.iter().any(|(re, im)| !re.is_finite() || !im.is_finite()) {
        return Err(Error::SolverFailure("non-finite eigenvalue".into()));
    }
    values.sort_by(|x, y| {
        let (mx, my) = (x.0.hypot(x.1), y.0.hypot(y.1));
        my.total_cmp(&mx).then(x.1.atan2(x.0).total_cmp(&y.1.atan2(y.0)))
    });
    Ok(EigenSpectrum { m: mat.size(), values, backward_error, norm_1 })
}

/// CSV with columns `re,im,modulus,M`.
pub fn eigen_csv(spectra: &[EigenSpectrum]) -> String {
    let mut s = String::from("re,im,modulus,M\n");
    for sp in spectra {
        for &(re, im) in &sp.values {
            s.push_str(&format!("{re:.12e},{im:.12e},{:.12e},{}\n", re.hypot(im), sp.m));
        }
    }
    s
}

/// Rigorous radii next to the discretization spectrum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralReport {
    pub map: String,
    pub lambda_inf: Scalar,
    pub lambda_sup: Scalar,
    /// `sup|φ_n|^{1/n}` at the largest `n`.
    pub bv_radius: Scalar,
    pub n_max: usize,
    pub orbit_depth: usize,
    pub spectra: Vec<EigenSpectrum>,
}

pub fn spectral_report(
    map: &PiecewiseMap,
    weight: &Weight,
    ms: &[usize],
    n_range: std::ops::RangeInclusive<usize>,
    policy: BinPolicy,
) -> Result<SpectralReport> {
    let n_max = *n_range.end();
    let depth = 2 * n_max + 2;
    let table = discontinuity_orbits(map, depth)?;
    let (lambda_inf, lambda_sup) = lambda_overall(&table, weight, n_range.clone())?;
    let bv = bv_essential_radius(map, weight, n_range)?;
    let mut spectra = Vec::new();
    for &m in ms {
        spectra.push(eigen_spectrum(&ulam_matrix(map, weight, m, policy)?)?);
    }
    Ok(SpectralReport {
        map: map.name().to_string(),
        lambda_inf,
        lambda_sup,
        bv_radius: bv.eta().clone(),
        n_max,
        orbit_depth: depth,
        spectra,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_core::builtins;
    use crate::scalar::q;

    #[test]
    fn doubling_two_bins() {
        let d = builtins::doubling();
        let w = Weight::constant(&d, Scalar::ratio(1, 2));
        let u = ulam_matrix(&d, &w, 2, BinPolicy::Uniform).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(u.mass(i, j), Scalar::ratio(1, 4));
            }
        }
        let sp = eigen_spectrum(&u).unwrap();
        assert!((sp.leading().unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(sp.values[1].0.abs() < 1e-12);
    }

    #[test]
    fn leading_eigenvalue_one_for_doubling() {
        let d = builtins::doubling();
        let w = Weight::inverse_derivative(&d);
        for m in [3, 8, 17] {
            let sp = eigen_spectrum(&ulam_matrix(&d, &w, m, BinPolicy::Uniform).unwrap()).unwrap();
            assert!((sp.leading().unwrap().re - 1.0).abs() < 1e-10, "M = {m}");
            assert!(sp.backward_error < 1e-10);
        }
    }

    #[test]
    fn single_full_branch_permutes_bins() {
        // T(x) = 1 − x with φ = 1: bin i goes to bin M−1−i.
        let map = PiecewiseMap::new(vec![Scalar::zero(), Scalar::one()], vec![Poly::affine(Scalar::int(-1), Scalar::one())]).unwrap();
        let w = Weight::constant(&map, Scalar::one());
        let u = ulam_matrix(&map, &w, 4, BinPolicy::Uniform).unwrap();
        for i in 0..4 {
            assert_eq!(u.rows[i].len(), 1);
            assert_eq!(u.rows[i][0], (3 - i, Scalar::ratio(1, 4)));
        }
        let sp = eigen_spectrum(&u).unwrap();
        for z in sp.moduli() {
            assert!((z - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_aligned_rows_match_transfer_of_one() {
        let t10 = builtins::example(10, Scalar::ratio(8, 1)).unwrap();
        let w = Weight::inverse_derivative(&t10);
        let u = ulam_matrix(&t10, &w, 100, BinPolicy::GammaAligned).unwrap();
        for p in t10.breakpoints() {
            assert!(u.edges.contains(p.exact().unwrap()));
        }
        let l1 = apply_transfer(&t10, &w, &PiecewiseSmooth::constant(Scalar::one())).unwrap();
        let avg = project(&l1, &u.edges).unwrap();
        for (i, s) in u.row_sums().iter().enumerate() {
            assert_eq!(&s.checked_div(&Scalar::from(u.width(i))).unwrap(), &avg[i]);
        }
        for (j, c) in u.column_sums().iter().enumerate() {
            assert_eq!(c, &Scalar::from(u.width(j)));
        }
    }

    #[test]
    fn beta_cloud_inside_inverse_beta() {
        let b = builtins::beta(q(3, 2)).unwrap();
        let w = Weight::constant(&b, Scalar::ratio(2, 3));
        let sp = eigen_spectrum(&ulam_matrix(&b, &w, 128, BinPolicy::GammaAligned).unwrap()).unwrap();
        let lead = sp.leading().unwrap();
        assert!((lead.re - 1.0).abs() < 10.0 / (128f64).sqrt() && lead.im.abs() < 1e-9);
        // Zeros of 1 − Σ d_i w^i over the greedy digits of 1 in base 3/2 give
        // an isolated pair at |λ| ≈ 0.7327, above the essential radius 2/3.
        let second = sp.moduli().nth(1).unwrap();
        assert!(second > 2.0 / 3.0 && (second - 0.7327).abs() < 0.05, "second modulus {second}");
    }

    #[test]
    fn projection_error_decays_like_one_over_m() {
        let b = builtins::beta(q(3, 2)).unwrap();
        let w = Weight::inverse_derivative(&b);
        let h = PiecewiseSmooth::from_poly(Poly::new(vec![Scalar::zero(), Scalar::zero(), Scalar::one()]));
        let (rows, slope) = projection_consistency(&b, &w, &h, &[16, 64, 256], BinPolicy::Uniform).unwrap();
        assert!(rows.windows(2).all(|r| r[1].error < r[0].error));
        assert!((slope + 1.0).abs() < 0.2, "slope {slope}");
    }

    #[test]
    fn degenerate_bin_count_rejected() {
        let d = builtins::doubling();
        assert!(bin_edges(&d, 1, BinPolicy::Uniform).is_err());
    }

    #[test]
    fn csv_columns() {
        let sp = EigenSpectrum { m: 2, values: vec![(1.0, 0.0)], backward_error: 0.0, norm_1: 1.0 };
        let csv = eigen_csv(&[sp]);
        assert!(csv.starts_with("re,im,modulus,M\n1.000000000000e0,"));
    }
}
