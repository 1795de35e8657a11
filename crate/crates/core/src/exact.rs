//! Exact rational arithmetic for the gallery operators whose entries are
//! dyadic or integer-power rationals. Closed-form identities (orbit formulas,
//! norm conservation, Markov column sums) are checked exactly here and the
//! float-mode operators are validated against these routines.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn ratio(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// `2^{-k}`.
pub fn pow2_neg(k: usize) -> Rat {
    Rat::new(BigInt::one(), BigInt::from(2u8).pow(k as u32))
}

/// `c_n = prod_{k=1}^n (1 - 2^{-k})`, the escape coefficient of the
/// shift-with-feedback counterexample.
pub fn shift_feedback_product(n: usize) -> Rat {
    let mut c = Rat::one();
    for k in 1..=n {
        c *= Rat::one() - pow2_neg(k);
    }
    c
}

/// Float limit of the product above, multiplying factors until the remaining
/// tail is below `tol`. Serves as an independent oracle for the orbit limit.
pub fn shift_feedback_limit(tol: f64) -> f64 {
    let mut c = 1.0f64;
    let mut k = 1usize;
    loop {
        let term = 0.5f64.powi(k as i32);
        c *= 1.0 - term;
        // The remaining factors change the product by at most sum 2^{-j}.
        if term * 2.0 < tol {
            return c;
        }
        k += 1;
    }
}

/// Dense rational vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactVector(pub Vec<Rat>);

impl ExactVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![Rat::zero(); dim])
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[k] = Rat::one();
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0
            .iter()
            .map(|r| r.to_f64().expect("gallery entries stay representable"))
            .collect()
    }
}

/// Exact evolution of the Markov counterexample `T f = <h, f> e_0 + S M f`
/// on l1 with unit weights: `h_k = 2^{-k}`, `M = diag(1 - 2^{-k})`, `S` the
/// right shift. Truncated to `dim` coordinates with exact escaped-mass
/// accounting.
#[derive(Debug, Clone)]
pub struct ShiftFeedbackExact {
    pub dim: usize,
    h: Vec<Rat>,
    m: Vec<Rat>,
}

impl ShiftFeedbackExact {
    pub fn new(dim: usize) -> Self {
        let h: Vec<Rat> = (0..dim).map(pow2_neg).collect();
        let m: Vec<Rat> = h.iter().map(|hk| Rat::one() - hk).collect();
        Self { dim, h, m }
    }

    /// One exact step; returns the image and the escaped AL mass.
    pub fn step(&self, f: &ExactVector) -> (ExactVector, Rat) {
        assert_eq!(f.dim(), self.dim);
        let pairing: Rat = f
            .0
            .iter()
            .zip(&self.h)
            .map(|(x, h)| x * h)
            .fold(Rat::zero(), |a, b| a + b);
        let mut out = vec![Rat::zero(); self.dim];
        out[0] = pairing;
        for i in 1..self.dim {
            out[i] += &self.m[i - 1] * &f.0[i - 1];
        }
        let escaped = (&self.m[self.dim - 1] * &f.0[self.dim - 1]).abs();
        (ExactVector(out), escaped)
    }

    /// Closed-form orbit of `e_1`: `T^n e_1 = (1 - c_n) e_0 + c_n e_{n+1}`.
    pub fn orbit_formula_e1(&self, n: usize) -> ExactVector {
        assert!(n + 1 < self.dim, "formula only valid inside the truncation");
        let c_n = shift_feedback_product(n);
        let mut v = ExactVector::zeros(self.dim);
        v.0[0] = Rat::one() - &c_n;
        v.0[n + 1] = c_n;
        v
    }

    pub fn al_norm(&self, f: &ExactVector) -> Rat {
        f.0.iter().map(|x| x.abs()).fold(Rat::zero(), |a, b| a + b)
    }

    /// Exact column masses including escape; all equal 1 for a Markov
    /// operator.
    pub fn column_mass(&self, j: usize) -> Rat {
        let shift_part = if j + 1 < self.dim {
            self.m[j].clone()
        } else {
            Rat::zero()
        };
        let escape_part = if j + 1 < self.dim {
            Rat::zero()
        } else {
            self.m[j].clone()
        };
        &self.h[j] + shift_part + escape_part
    }
}

/// Exact evolution of the weighted-shift example on `l^p(mu)` with
/// `mu({0}) = 1`, `mu({k}) = k^{-p}` for integer `p >= 2`:
/// row 0 is `<psi - alpha, .>`, row 1 is zero, row `k >= 2` carries
/// `(k/(k-1)) f(k-1)`.
#[derive(Debug, Clone)]
pub struct WeightedShiftExact {
    pub dim: usize,
    pub p: u32,
    weights: Vec<Rat>,
    /// alpha coefficients against the measure: alpha_k = (k/(k+1))^{p-1}.
    alpha: Vec<Rat>,
}

impl WeightedShiftExact {
    pub fn new(dim: usize, p: u32) -> Self {
        assert!(p >= 2, "integer p >= 2 for the exact mode");
        let weights: Vec<Rat> = (0..dim)
            .map(|k| {
                if k == 0 {
                    Rat::one()
                } else {
                    Rat::new(BigInt::one(), BigInt::from(k).pow(p))
                }
            })
            .collect();
        let alpha: Vec<Rat> = (0..dim)
            .map(|k| {
                if k == 0 {
                    Rat::zero()
                } else {
                    // (k/(k+1))^{p-1}
                    Rat::new(BigInt::from(k).pow(p - 1), BigInt::from(k + 1).pow(p - 1))
                }
            })
            .collect();
        Self {
            dim,
            p,
            weights,
            alpha,
        }
    }

    pub fn weight(&self, k: usize) -> &Rat {
        &self.weights[k]
    }

    /// One exact step; returns the image and the escaped AL (l1) mass.
    pub fn step(&self, f: &ExactVector) -> (ExactVector, Rat) {
        assert_eq!(f.dim(), self.dim);
        let mut out = vec![Rat::zero(); self.dim];
        // (Tf)(0) = <psi - alpha, f> = sum_k (1 - alpha_k) f_k w_k
        out[0] = f
            .0
            .iter()
            .zip(&self.alpha)
            .zip(&self.weights)
            .map(|((x, a), w)| (Rat::one() - a) * x * w)
            .fold(Rat::zero(), |acc, v| acc + v);
        for k in 2..self.dim {
            out[k] = ratio(k as i64, k as i64 - 1) * &f.0[k - 1];
        }
        // The band entry (dim, dim-1) is cut off by the truncation.
        let n = self.dim;
        let escaped = (ratio(n as i64, n as i64 - 1)
            * &f.0[n - 1]
            * Rat::new(BigInt::one(), BigInt::from(n).pow(self.p)))
        .abs();
        (ExactVector(out), escaped)
    }

    /// `||f restricted to indices >= 1||_p^p`, exactly.
    pub fn tail_p_norm_pow(&self, f: &ExactVector) -> Rat {
        f.0.iter()
            .zip(&self.weights)
            .skip(1)
            .map(|(x, w)| {
                let mut pw = Rat::one();
                let ax = x.abs();
                for _ in 0..self.p {
                    pw *= &ax;
                }
                pw * w
            })
            .fold(Rat::zero(), |a, b| a + b)
    }

    /// `||f restricted to indices >= 1||_1`, exactly.
    pub fn tail_l1_norm(&self, f: &ExactVector) -> Rat {
        f.0.iter()
            .zip(&self.weights)
            .skip(1)
            .map(|(x, w)| x.abs() * w)
            .fold(Rat::zero(), |a, b| a + b)
    }

    /// Closed form `(T^n e_j)|_{>=1} = ((j+n)/j) e_{j+n}` plus the
    /// accumulated head coordinate.
    pub fn tail_formula(&self, j: usize, n: usize) -> Option<(usize, Rat)> {
        assert!(j >= 1);
        if j + n >= self.dim {
            return None;
        }
        Some((j + n, ratio((j + n) as i64, j as i64)))
    }
}
