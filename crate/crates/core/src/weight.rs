//! Weights `φ` for transfer operators, one rational function per branch.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map_core::{PiecewiseMap, Side};
use crate::poly::{Poly, RationalFn};
use crate::scalar::{Scalar, DEFAULT_BITS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    Constant,
    InverseDerivative,
    Custom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Weight {
    pub mode: WeightMode,
    /// `φ` restricted to each branch closure.
    pub per_branch: Vec<RationalFn>,
}

impl Weight {
    pub fn constant(map: &PiecewiseMap, c: Scalar) -> Weight {
        Weight { mode: WeightMode::Constant, per_branch: vec![RationalFn::constant(c); map.branches().len()] }
    }

    /// `φ = 1/|T'|`
    pub fn inverse_derivative(map: &PiecewiseMap) -> Weight {
        Weight { mode: WeightMode::InverseDerivative, per_branch: map.inverse_derivative_factors() }
    }

    pub fn custom(map: &PiecewiseMap, polys: Vec<Poly>) -> Result<Weight> {
        if polys.len() != map.branches().len() {
            return Err(Error::Precondition("one weight polynomial per branch".into()));
        }
        Ok(Weight { mode: WeightMode::Custom, per_branch: polys.into_iter().map(RationalFn::poly).collect() })
    }

    pub fn on_branch(&self, i: usize) -> &RationalFn {
        &self.per_branch[i]
    }

    pub fn eval_on_branch(&self, i: usize, x: &Scalar) -> Result<Scalar> {
        self.per_branch[i].eval(x)
    }

    pub fn value_one_sided(&self, map: &PiecewiseMap, x: &Scalar, side: Side) -> Result<Scalar> {
        let i = map.branch_at(x, side)?;
        self.eval_on_branch(i, x)
    }

    pub fn value(&self, map: &PiecewiseMap, x: &Scalar) -> Result<Scalar> {
        let i = map.branch_containing(x)?;
        self.eval_on_branch(i, x)
    }

    pub fn is_exact(&self) -> bool {
        self.per_branch.iter().all(|f| f.num.is_exact() && f.den.is_exact())
    }

    /// Fails with `WeightVanishes` if `φ` has a zero on some branch closure.
    pub fn check_nonvanishing(&self, map: &PiecewiseMap) -> Result<()> {
        for (b, f) in map.branches().iter().zip(&self.per_branch) {
            if f.num.is_zero() {
                return Err(Error::WeightVanishes);
            }
            if f.num.is_constant() {
                continue;
            }
            match (b.lo.as_exact(), b.hi.as_exact()) {
                (Some(lo), Some(hi)) => {
                    if !f.num.roots_in(lo, hi, DEFAULT_BITS)?.is_empty() {
                        return Err(Error::WeightVanishes);
                    }
                }
                _ => {
                    let enclosure = Scalar::ball(b.lo.lo().clone(), b.hi.hi().clone(), DEFAULT_BITS);
                    if f.num.eval(&enclosure).may_be_zero() {
                        return Err(Error::WeightVanishes);
                    }
                }
            }
        }
        Ok(())
    }

    /// `φ'/φ` on branch `i`.
    pub fn log_derivative(&self, i: usize) -> RationalFn {
        let f = &self.per_branch[i];
        let d = f.derivative();
        RationalFn::new(&d.num * &f.den, &d.den * &f.num).simplified()
    }

    /// `sup |φ|` over all branch closures.
    pub fn sup_abs(&self, map: &PiecewiseMap) -> Result<Scalar> {
        let mut best = Scalar::zero();
        for (b, f) in map.branches().iter().zip(&self.per_branch) {
            let s = match f.as_poly() {
                Some(p) => p.sup_abs(&b.lo, &b.hi),
                None => f.sup_abs(b.lo.lo(), b.hi.hi())?,
            };
            best = best.max(&s);
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_core::builtins;
    use crate::scalar::q;

    #[test]
    fn inverse_derivative_values() {
        let t = builtins::example(10, Scalar::int(8)).unwrap();
        let w = Weight::inverse_derivative(&t);
        assert_eq!(w.value_one_sided(&t, &Scalar::one(), Side::Left).unwrap(), Scalar::ratio(1, 8));
        assert_eq!(w.value(&t, &Scalar::ratio(3, 4)).unwrap(), Scalar::ratio(1, 10));
        let tent = builtins::tent();
        let w = Weight::inverse_derivative(&tent);
        assert_eq!(w.value(&tent, &Scalar::ratio(3, 4)).unwrap(), Scalar::ratio(1, 2));
        assert_eq!(Weight::inverse_derivative(&t).sup_abs(&t).unwrap(), Scalar::ratio(7, 10));
    }

    #[test]
    fn vanishing_detected() {
        let d = builtins::doubling();
        let w = Weight::custom(&d, vec![Poly::x(), Poly::one()]).unwrap();
        assert_eq!(w.check_nonvanishing(&d), Err(Error::WeightVanishes));
        let w = Weight::custom(&d, vec![Poly::affine(Scalar::one(), Scalar::one()), Poly::one()]).unwrap();
        assert!(w.check_nonvanishing(&d).is_ok());
        let ld = w.log_derivative(0);
        assert_eq!(ld.eval(&Scalar::zero()).unwrap(), Scalar::one());
        assert_eq!(ld.eval(&Scalar::Exact(q(1, 1))).unwrap(), Scalar::ratio(1, 2));
    }
}
