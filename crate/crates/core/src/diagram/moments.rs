use num::bigint::BigInt;
use num::rational::{BigRational, Ratio};
use num::traits::{One, ToPrimitive, Zero};
use std::fmt::Debug;
use std::ops::{Add, Mul};

use super::{enumerate_a, DiagramIndex};
use crate::chaos::hermite_monomials;
use crate::error::{Error, Result};

/// Total Hermite degree accepted by the Wick oracle.
pub const WICK_BUDGET: u32 = 24;

/// Commutative ring used for moment evaluation. Only + and * are needed,
/// so integer matrices (covariances over a common denominator) work as well
/// as rationals and floats.
pub trait MomentScalar: Clone + Debug + PartialEq + Zero + One + Add<Output = Self> + Mul<Output = Self> {
    fn from_i64(v: i64) -> Self;
    fn from_big(v: &BigInt) -> Self;
}

impl MomentScalar for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_big(v: &BigInt) -> Self {
        v.to_f64().unwrap_or(f64::NAN)
    }
}

impl MomentScalar for i128 {
    fn from_i64(v: i64) -> Self {
        v as i128
    }
    /// Panics if the value does not fit.
    fn from_big(v: &BigInt) -> Self {
        v.to_i128().expect("integer does not fit in i128")
    }
}

impl MomentScalar for Ratio<i128> {
    fn from_i64(v: i64) -> Self {
        Ratio::from_integer(v as i128)
    }
    fn from_big(v: &BigInt) -> Self {
        Ratio::from_integer(i128::from_big(v))
    }
}

impl MomentScalar for BigRational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_big(v: &BigInt) -> Self {
        BigRational::from_integer(v.clone())
    }
}

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |a, k| a * BigInt::from(k))
}

fn pow<T: MomentScalar>(x: &T, e: u32) -> T {
    let mut r = T::one();
    for _ in 0..e {
        r = r * x.clone();
    }
    r
}

/// The index set for one q together with the integer weights prod q! / prod k!.
#[derive(Debug, Clone)]
pub struct DiagramExpansion {
    pub q: Vec<u32>,
    pub terms: Vec<(DiagramIndex, BigInt)>,
}

impl DiagramExpansion {
    pub fn new(q: &[u32]) -> Self {
        let num: BigInt = q.iter().map(|&x| factorial(x)).product();
        let terms = enumerate_a(q)
            .map(|kappa| {
                let den: BigInt = kappa.upper().iter().map(|&k| factorial(k)).product();
                let w = &num / &den;
                (kappa, w)
            })
            .collect();
        DiagramExpansion { q: q.to_vec(), terms }
    }

    /// prod q_r! sum_kappa prod_{i<j} cov_ij^{k_ij} / k_ij!
    pub fn evaluate<T: MomentScalar>(&self, cov: &[Vec<T>]) -> T {
        let weights: Vec<T> = self.terms.iter().map(|(_, w)| T::from_big(w)).collect();
        self.evaluate_with(cov, &weights)
    }

    /// Same as `evaluate` with weights already converted, for repeated use.
    pub fn evaluate_with<T: MomentScalar>(&self, cov: &[Vec<T>], weights: &[T]) -> T {
        let mut total = T::zero();
        for ((kappa, _), w) in self.terms.iter().zip(weights) {
            let mut term = w.clone();
            for i in 0..kappa.n {
                for j in i + 1..kappa.n {
                    let k = kappa.k[i][j];
                    if k > 0 {
                        term = term * pow(&cov[i][j], k);
                    }
                }
            }
            total = total + term;
        }
        total
    }
}

/// E[prod H_{q_i}(Z_i)] by the diagram formula. Only off-diagonal entries are read.
pub fn joint_hermite_moment<T: MomentScalar>(q: &[u32], cov: &[Vec<T>]) -> T {
    DiagramExpansion::new(q).evaluate(cov)
}

/// Independent evaluation: expand each Wick power :Z_i^{q_i}: into monomials
/// (variance taken from the diagonal, so unit diagonal gives H_q) and take
/// Gaussian moments by the Isserlis recursion, memoized over exponent vectors.
#[derive(Debug, Clone)]
pub struct WickOracle<T: MomentScalar> {
    n: usize,
    max_q: Vec<u32>,
    strides: Vec<usize>,
    table: Vec<T>,
    monomials: Vec<Vec<Vec<(u32, T)>>>,
}

impl<T: MomentScalar> WickOracle<T> {
    pub fn new(cov: &[Vec<T>], max_q: &[u32]) -> Result<Self> {
        let n = max_q.len();
        let total: u32 = max_q.iter().sum();
        if total > WICK_BUDGET {
            return Err(Error::PairingBudget { total, budget: WICK_BUDGET });
        }
        if cov.len() != n || cov.iter().any(|r| r.len() != n) {
            return Err(Error::Invalid("covariance shape does not match q".into()));
        }
        let mut strides = vec![1usize; n];
        for i in 1..n {
            strides[i] = strides[i - 1] * (max_q[i - 1] as usize + 1);
        }
        let size = if n == 0 { 1 } else { strides[n - 1] * (max_q[n - 1] as usize + 1) };
        let mut table = vec![T::zero(); size];
        let mut m = vec![0u32; n];
        for idx in 0..size {
            let mut r = idx;
            for i in (0..n).rev() {
                m[i] = (r / strides[i]) as u32;
                r %= strides[i];
            }
            let Some(i) = m.iter().position(|&x| x > 0) else {
                table[idx] = T::one();
                continue;
            };
            if m.iter().sum::<u32>() % 2 == 1 {
                continue;
            }
            // pair one copy of Z_i with each remaining factor
            let mut acc = T::zero();
            for j in 0..n {
                let avail = if i == j { m[j] - 1 } else { m[j] };
                if avail == 0 || cov[i][j].is_zero() {
                    continue;
                }
                let sub = idx - strides[i] - strides[j];
                acc = acc + T::from_i64(avail as i64) * cov[i][j].clone() * table[sub].clone();
            }
            table[idx] = acc;
        }
        let monomials = (0..n)
            .map(|i| {
                (0..=max_q[i])
                    .map(|q| {
                        hermite_monomials(q)
                            .into_iter()
                            .map(|(p, c)| {
                                let k = (q - p) / 2;
                                let coef = T::from_big(&BigInt::from(c)) * pow(&cov[i][i], k);
                                (p, coef)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Ok(WickOracle { n, max_q: max_q.to_vec(), strides, table, monomials })
    }

    /// Gaussian moment E[prod Z_i^{m_i}].
    pub fn monomial_moment(&self, m: &[u32]) -> T {
        let idx: usize = m.iter().zip(&self.strides).map(|(&a, &s)| a as usize * s).sum();
        self.table[idx].clone()
    }

    pub fn hermite_moment(&self, q: &[u32]) -> Result<T> {
        if q.len() != self.n || q.iter().zip(&self.max_q).any(|(a, b)| a > b) {
            return Err(Error::Invalid("degree exceeds the oracle table".into()));
        }
        if q.iter().sum::<u32>() % 2 == 1 {
            return Ok(T::zero());
        }
        let lists: Vec<&Vec<(u32, T)>> = (0..self.n).map(|i| &self.monomials[i][q[i] as usize]).collect();
        let mut choice = vec![0usize; self.n];
        let mut total = T::zero();
        loop {
            let mut idx = 0;
            let mut coef = T::one();
            for i in 0..self.n {
                let (p, ref c) = lists[i][choice[i]];
                idx += p as usize * self.strides[i];
                coef = coef * c.clone();
            }
            total = total + coef * self.table[idx].clone();
            // mixed-radix increment
            let mut i = 0;
            loop {
                if i == self.n {
                    return Ok(total);
                }
                choice[i] += 1;
                if choice[i] < lists[i].len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
        }
    }
}

pub fn wick_oracle<T: MomentScalar>(q: &[u32], cov: &[Vec<T>]) -> Result<T> {
    WickOracle::new(cov, q)?.hermite_moment(q)
}
