//! Seeded random observables whose jumps sit on tagged points.

use num_traits::{One, Signed};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::observables::PiecewiseSmooth;
use crate::orbits::OrbitTable;
use crate::poly::Poly;
use crate::scalar::{Scalar, Q};

pub const DEFAULT_SEED: u64 = 2024;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteOptions {
    pub size: usize,
    pub max_jumps: usize,
    pub max_degree: usize,
    /// Orbit points `a_{j,k}` with `k ≤ jump_depth` are jump candidates.
    pub jump_depth: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { size: 20, max_jumps: 4, max_degree: 3, jump_depth: 12 }
    }
}

/// Interior exact points at which a suite member may jump.
pub fn jump_candidates(table: &OrbitTable, jump_depth: usize) -> Vec<Scalar> {
    let mut pts: Vec<Scalar> = Vec::new();
    let mut push = |x: &Scalar| {
        if let Some(v) = x.as_exact() {
            let interior = v.is_positive() && v < &Q::one();
            if interior && !pts.contains(x) {
                pts.push(x.clone());
            }
        }
    };
    table.gamma.iter().for_each(&mut push);
    table.finite_part.iter().for_each(&mut push);
    for o in &table.orbits {
        o.points.iter().take(jump_depth + 1).for_each(&mut push);
    }
    pts
}

fn random_coeff(rng: &mut impl Rng) -> Scalar {
    Scalar::ratio(rng.gen_range(-8..=8), rng.gen_range(1..=8))
}

fn random_poly(rng: &mut impl Rng, max_degree: usize) -> Poly {
    let d = rng.gen_range(0..=max_degree);
    Poly::new((0..=d).map(|_| random_coeff(rng)).collect())
}

pub fn random_suite(table: &OrbitTable, rng: &mut impl Rng, opts: &SuiteOptions) -> Result<Vec<PiecewiseSmooth>> {
    let candidates = jump_candidates(table, opts.jump_depth);
    let mut out = Vec::with_capacity(opts.size);
    for _ in 0..opts.size {
        let count = rng.gen_range(0..=opts.max_jumps.min(candidates.len()));
        let mut pts: Vec<Scalar> = candidates.choose_multiple(rng, count).cloned().collect();
        pts.sort_by_key(|a| a.mid());
        let pieces = (0..=pts.len()).map(|_| random_poly(rng, opts.max_degree)).collect();
        let h = PiecewiseSmooth::new(pts, pieces).map_err(|e| Error::InvalidObservable(format!("suite member: {e}")))?;
        out.push(h.normalize());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_core::builtins;
    use crate::orbits::discontinuity_orbits;
    use crate::scalar::q;

    #[test]
    fn same_seed_same_suite() {
        let b = builtins::beta(q(3, 2)).unwrap();
        let t = discontinuity_orbits(&b, 16).unwrap();
        let o = SuiteOptions::default();
        let s1 = random_suite(&t, &mut seeded_rng(7), &o).unwrap();
        let s2 = random_suite(&t, &mut seeded_rng(7), &o).unwrap();
        assert_eq!(s1, s2);
        let s3 = random_suite(&t, &mut seeded_rng(8), &o).unwrap();
        assert_ne!(s1, s3);
    }

    #[test]
    fn jumps_are_tagged() {
        let b = builtins::beta(q(3, 2)).unwrap();
        let t = discontinuity_orbits(&b, 16).unwrap();
        let tagger = t.tagger().unwrap();
        for h in random_suite(&t, &mut seeded_rng(1), &SuiteOptions::default()).unwrap() {
            for p in h.breakpoints() {
                assert!(tagger.get(p).unwrap().is_some());
            }
        }
    }
}
