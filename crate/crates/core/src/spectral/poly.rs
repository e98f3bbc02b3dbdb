use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An affine map x ↦ shift + scale·x.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub shift: f64,
    pub scale: f64,
}

impl Affine {
    pub const IDENTITY: Affine = Affine { shift: 0.0, scale: 1.0 };

    pub fn at(&self, x: f64) -> f64 {
        self.shift + self.scale * x
    }

    /// self ∘ inner
    pub fn after(&self, inner: Affine) -> Affine {
        Affine { shift: self.shift + self.scale * inner.shift, scale: self.scale * inner.scale }
    }

    /// x = u − a, the upper-barrier gap as a function of an eigenvalue a.
    pub fn upper_gap(u: f64) -> Affine {
        Affine { shift: u, scale: -1.0 }
    }

    /// x = a − ℓ
    pub fn lower_gap(l: f64) -> Affine {
        Affine { shift: -l, scale: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PolyTarget {
    /// x⁻²
    InverseSquare,
    /// exp(1/(2x))/x
    ExpHalfInverse,
    /// exp(1/(2x)), whose square is exp(1/x)
    SqrtExpInverse,
    /// eʸ
    Exp,
}

impl PolyTarget {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            PolyTarget::InverseSquare => x.powi(-2),
            PolyTarget::ExpHalfInverse => (0.5 / x).exp() / x,
            PolyTarget::SqrtExpInverse => (0.5 / x).exp(),
            PolyTarget::Exp => x.exp(),
        }
    }
}

/// Polynomial Σ c_k t^k in a variable t = operand(x), where x is the target's natural
/// argument (a barrier gap, or the exponent for [`PolyTarget::Exp`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixPolynomial {
    coeffs: Vec<f64>,
    operand: Affine,
    target: PolyTarget,
    /// lower end of the domain the accuracy guarantee covers
    gap: f64,
    accuracy: f64,
}

impl MatrixPolynomial {
    pub fn new(coeffs: Vec<f64>, operand: Affine, target: PolyTarget, gap: f64, accuracy: f64) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::arg("coefficients must be finite and nonempty"));
        }
        Ok(Self { coeffs, operand, target, gap, accuracy })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn operand(&self) -> Affine {
        self.operand
    }

    pub fn target(&self) -> PolyTarget {
        self.target
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }

    /// p̂(x)
    pub fn eval(&self, x: f64) -> f64 {
        let t = self.operand.at(x);
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    /// The affine map from an operator's eigenvalue a to the Horner variable t, when the
    /// natural argument is x = inner(a).
    pub fn variable_map(&self, inner: Affine) -> Affine {
        self.operand.after(inner)
    }

    /// p(T)·V by Horner, where T = shift·I + scale·op and (shift, scale) = variable_map(inner).
    pub fn apply_block<F>(&self, inner: Affine, mut op: F, v: &DMatrix<f64>) -> Result<DMatrix<f64>>
    where
        F: FnMut(&DMatrix<f64>) -> Result<DMatrix<f64>>,
    {
        let map = self.variable_map(inner);
        let mut acc = v * self.coeffs[self.degree()];
        for c in self.coeffs.iter().rev().skip(1) {
            let mut next = op(&acc)? * map.scale;
            next += &acc * map.shift;
            next += v * *c;
            acc = next;
        }
        Ok(acc)
    }
}

fn check_gap_eps(g: f64, eps: f64) -> Result<()> {
    if !(g > 0.0 && g < 1.0) {
        return Err(Error::arg(format!("gap {g} outside (0,1)")));
    }
    if !(eps > 0.0 && eps <= 0.1) {
        return Err(Error::arg(format!("accuracy {eps} outside (0, 0.1]")));
    }
    Ok(())
}

const MAX_DEGREE: usize = 200_000;

/// Truncated expansion of x⁻² around x = 1 in t = 1 − x. The degree is the smallest d
/// with (1−g)^{d+1}(d+2)/g² ≤ ε.
pub fn build_poly_inv_square(g: f64, eps: f64) -> Result<MatrixPolynomial> {
    check_gap_eps(g, eps)?;
    let d = (0..MAX_DEGREE)
        .find(|&d| (1.0 - g).powi(d as i32 + 1) * (d as f64 + 2.0) / (g * g) <= eps)
        .ok_or_else(|| Error::arg("gap too small for a representable degree"))?;
    let coeffs = (0..=d).map(|k| (k + 1) as f64).collect();
    MatrixPolynomial::new(coeffs, Affine { shift: 1.0, scale: -1.0 }, PolyTarget::InverseSquare, g, eps)
}

/// Truncated expansion of exp(1/(2x))/x around x = 1 in t = 1 − x. The degree is the
/// smallest d with 4(d+1)·e^{1/g}·g⁻²·(1−g/2)^d ≤ ε.
pub fn build_poly_exp_half_inv(g: f64, eps: f64) -> Result<MatrixPolynomial> {
    check_gap_eps(g, eps)?;
    let log_bound = |d: usize| {
        (4.0 * (d as f64 + 1.0)).ln() + 1.0 / g - 2.0 * g.ln() + d as f64 * (1.0 - g / 2.0).ln()
    };
    let d = (0..MAX_DEGREE)
        .find(|&d| log_bound(d) <= eps.ln())
        .ok_or_else(|| Error::arg("gap too small for a representable degree"))?;
    let e = exp_half_geometric(d);
    // multiply by 1/x = Σ t^k: running sums
    let mut coeffs = Vec::with_capacity(d + 1);
    let mut run = 0.0;
    for ek in e {
        run += ek;
        coeffs.push(run);
    }
    MatrixPolynomial::new(coeffs, Affine { shift: 1.0, scale: -1.0 }, PolyTarget::ExpHalfInverse, g, eps)
}

/// Truncated expansion of exp(1/(2x)) around x = 1 in t = 1 − x, used to read off the
/// barrier potential as a squared Frobenius norm. All coefficients are positive, so the
/// relative truncation error on (g, 1) peaks at x = g; the degree is the smallest d whose
/// error there is at most ε.
pub fn build_poly_exp_inv_half(g: f64, eps: f64) -> Result<MatrixPolynomial> {
    check_gap_eps(g, eps)?;
    let t = 1.0 - g;
    let target = (0.5 / g).exp();
    let mut d = 8;
    loop {
        let coeffs = exp_half_geometric(d);
        let p = MatrixPolynomial::new(coeffs, Affine { shift: 1.0, scale: -1.0 }, PolyTarget::SqrtExpInverse, g, eps)?;
        if (target - p.eval(g)) <= eps * target {
            // trim to the smallest passing degree
            let mut coeffs = p.coeffs;
            while coeffs.len() > 1 {
                let tail = coeffs[coeffs.len() - 1] * t.powi(coeffs.len() as i32 - 1);
                let sum: f64 = coeffs.iter().rev().fold(0.0, |a, c| a * t + c);
                if target - (sum - tail) <= eps * target {
                    coeffs.pop();
                } else {
                    break;
                }
            }
            return MatrixPolynomial::new(coeffs, Affine { shift: 1.0, scale: -1.0 }, PolyTarget::SqrtExpInverse, g, eps);
        }
        d *= 2;
        if d > MAX_DEGREE {
            return Err(Error::arg("gap too small for a representable degree"));
        }
    }
}

/// Coefficients of exp(1/(2(1−t))) = e^{1/2}·exp(½Σ_{k≥1} t^k) up to t^d.
fn exp_half_geometric(d: usize) -> Vec<f64> {
    // e_n = (1/n) Σ_{k=1}^{n} k·s_k·e_{n−k} with s_k = 1/2
    let mut e = vec![0.0; d + 1];
    e[0] = 1.0;
    for n in 1..=d {
        let s: f64 = (1..=n).map(|k| k as f64 * e[n - k]).sum();
        e[n] = 0.5 * s / n as f64;
    }
    let c = 0.5_f64.exp();
    e.iter_mut().for_each(|v| *v *= c);
    e
}

/// Taylor polynomial of eʸ for y ∈ [lo, hi], centered at the midpoint, with absolute error
/// at most tol·e^{hi} on the interval.
pub fn exp_taylor(lo: f64, hi: f64, tol: f64) -> Result<MatrixPolynomial> {
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() || !(tol > 0.0) {
        return Err(Error::arg("bad exponential range"));
    }
    let c = 0.5 * (lo + hi);
    let r = 0.5 * (hi - lo);
    // tail Σ_{k>d} r^k/k! ≤ term_{d+1}·(1 + r/(d+2) + …) ≤ term_{d+1}/(1 − r/(d+2)) once d+2 > r
    let mut term = 1.0;
    let mut coeffs = vec![c.exp()];
    let mut k = 0usize;
    loop {
        k += 1;
        term *= r / k as f64;
        let ratio = r / (k as f64 + 1.0);
        if ratio < 1.0 && c.exp() * term / (1.0 - ratio) <= tol * hi.exp() {
            break;
        }
        let prev = *coeffs.last().unwrap();
        coeffs.push(prev / k as f64);
        if k > MAX_DEGREE {
            return Err(Error::arg("exponential range too wide"));
        }
    }
    MatrixPolynomial::new(coeffs, Affine { shift: -c, scale: 1.0 }, PolyTarget::Exp, lo, tol)
}
