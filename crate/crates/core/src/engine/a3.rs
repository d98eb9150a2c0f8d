use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::homology::{monomials, QuadraticForm};
use crate::series::{ActionPolynomial, WaveVector};

/// Fit of one homogeneous block of `N` against `N_0^{deg/2}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeFit {
    pub degree: usize,
    /// `b_{deg/2}` for even degrees.
    pub b: Option<f64>,
    /// Coefficient 2-norm of what the fit leaves unexplained; the whole block
    /// for odd degrees.
    pub residual: f64,
    /// Scale the residual is measured against.
    pub scale: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct A3Report {
    pub fits: Vec<DegreeFit>,
    pub pass: bool,
}

impl A3Report {
    /// Fitted `b_j`, if degree `2j` was present.
    pub fn b(&self, j: usize) -> Option<f64> {
        self.fits.iter().find(|f| f.degree == 2 * j).and_then(|f| f.b)
    }

    /// The worst failing degree as an error value.
    pub fn violation(&self) -> Option<Error> {
        self.fits
            .iter()
            .filter(|f| !f.pass)
            .max_by(|a, b| (a.residual / a.scale.max(f64::MIN_POSITIVE)).total_cmp(&(b.residual / b.scale.max(f64::MIN_POSITIVE))))
            .map(|f| Error::A3Violation {
                degree: f.degree,
                residual: f.residual,
            })
    }
}

/// Checks `N = N_0 + Σ b_j N_0^j` degree by degree, each block measured
/// against its own norm.
pub fn verify_a3(n: &ActionPolynomial, omega: &QuadraticForm, tol: f64) -> A3Report {
    verify_a3_with_scales(n, omega, tol, &BTreeMap::new())
}

/// As [`verify_a3`], with a per-degree floor on the scale the residuals are
/// measured against. Blocks produced by cancellation carry roundoff of the
/// size of the terms that cancelled, which a floor from that data absorbs.
pub fn verify_a3_with_scales(
    n: &ActionPolynomial,
    omega: &QuadraticForm,
    tol: f64,
    scales: &BTreeMap<usize, f64>,
) -> A3Report {
    let d = omega.dim();
    let top = n.max_degree().unwrap_or(0);
    let mut fits = Vec::new();
    let mut n0_power = omega.n0(top);
    for deg in 2..=top {
        if deg > 2 && deg % 2 == 0 {
            n0_power = n0_power.mul(&omega.n0(top), top).expect("same dimension");
        }
        let block = n.degree_block(deg);
        let values: Vec<Complex64> = monomials(d, deg)
            .iter()
            .map(|m| block.get(&crate::series::Key::new(*m, WaveVector::zero())))
            .collect();
        // anything with k ≠ 0 is outside the family as well
        let oscillating: f64 = block
            .iter()
            .filter(|(k, _)| !k.k().is_zero())
            .map(|(_, c)| c.norm_sqr())
            .sum();
        let block_norm = (values.iter().map(|c| c.norm_sqr()).sum::<f64>() + oscillating).sqrt();
        let scale = block_norm.max(scales.get(&deg).copied().unwrap_or(0.0));
        let (b, residual) = if deg % 2 == 1 {
            (None, block_norm)
        } else {
            let target: Vec<Complex64> = monomials(d, deg)
                .iter()
                .map(|m| n0_power.get(&crate::series::Key::new(*m, WaveVector::zero())))
                .collect();
            let pp: f64 = target.iter().map(|c| c.norm_sqr()).sum();
            let beta: Complex64 = target.iter().zip(&values).map(|(p, v)| p.conj() * v).sum::<Complex64>() / pp;
            let fit_res: f64 = target.iter().zip(&values).map(|(p, v)| (v - beta * p).norm_sqr()).sum();
            // a non-real multiple is not a real b_j either
            let imag = beta.im * beta.im * pp;
            (Some(beta.re), (fit_res + imag + oscillating).sqrt())
        };
        if block_norm == 0.0 && scale == 0.0 {
            continue;
        }
        fits.push(DegreeFit {
            degree: deg,
            b,
            residual,
            scale,
            pass: residual <= tol * scale,
        });
    }
    let pass = fits.iter().all(|f| f.pass);
    A3Report { fits, pass }
}
