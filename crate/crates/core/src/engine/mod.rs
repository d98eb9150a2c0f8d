//! The degree-doubling normalization iteration and its supporting pieces:
//! normal-form profiles, iteration states, the single step, full runs,
//! instance construction, the order-by-order reference and the `B(N_0)`
//! structure check.

mod a3;
mod factory;
mod oracle;
mod run;
mod step;

pub use a3::{verify_a3, verify_a3_with_scales, A3Report, DegreeFit};
pub use factory::{make_instance, random_instance, FactoryInstance};
pub use oracle::{classical_oracle, OracleResult};
pub use run::{choose_scale_exponent, run, scale_hamiltonian, EngineOptions, Mode, RunReport, StepRecord};
pub use step::{newton_step, NewtonStepReport, StepContext, StepFlags, StepNorms};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homology::QuadraticForm;
use crate::schedule::normalized_degree;
use crate::series::{ActionPolynomial, TFSeries};

/// `N = N_0 + Σ_{j≥2} b_j N_0^j` with `N_0(I) = Iᵀ Ω I`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalFormProfile {
    pub omega: QuadraticForm,
    /// `b[0] = b_2`, `b[1] = b_3`, ...
    pub b: Vec<f64>,
}

impl NormalFormProfile {
    pub fn new(omega: QuadraticForm, b: Vec<f64>) -> Self {
        NormalFormProfile { omega, b }
    }

    /// `b_j` for `j ≥ 1`, with `b_1 = 1` and zero past the list.
    pub fn b_j(&self, j: usize) -> f64 {
        match j {
            0 => 0.0,
            1 => 1.0,
            _ => self.b.get(j - 2).copied().unwrap_or(0.0),
        }
    }

    /// `N` truncated at `cap`.
    pub fn normal_form(&self, cap: usize) -> Result<ActionPolynomial> {
        let n0 = self.omega.n0(cap);
        let mut out = n0.clone();
        let mut power = n0.clone();
        for j in 2..=cap / 2 {
            power = power.mul(&n0, cap)?;
            let bj = self.b_j(j);
            if bj != 0.0 {
                out = out.add(&power.scale_real(bj))?;
            }
        }
        Ok(out)
    }

    /// Multiplier `g_s` with `{N^{[s]}, F} = g_s {N_0, F}`: `g_{2j} = j b_j N_0^{j−1}`,
    /// odd ones vanish.
    pub fn g(&self, s: usize, cap: usize) -> Result<ActionPolynomial> {
        let d = self.omega.dim();
        if s % 2 == 1 || s == 0 {
            return Ok(TFSeries::zero(d, cap));
        }
        let j = s / 2;
        let bj = self.b_j(j);
        if bj == 0.0 {
            return Ok(TFSeries::zero(d, cap));
        }
        Ok(self.omega.n0(cap).pow(j as u32 - 1, cap)?.scale_real(j as f64 * bj))
    }
}

/// Where the normal-form terms of a step come from.
#[derive(Clone, Debug, PartialEq)]
pub enum Profile {
    /// Read them off the `k = 0` parts of the data and check the
    /// `B(N_0)` structure afterwards.
    Discover,
    /// Use the given multipliers `g_s` in the triangular system.
    Prescribed(NormalFormProfile),
}

/// `H_n = N_n + R̃_n` with `N_n` θ-independent of degrees `[2, m_n]` and
/// `R̃_n` of lowest degree above `m_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianState {
    pub n: usize,
    pub normal: ActionPolynomial,
    pub remainder: TFSeries,
    /// Per-degree coefficient scales of the data each normal-form block was
    /// extracted from; floors for the `B(N_0)` residuals.
    pub a3_scales: BTreeMap<usize, f64>,
    /// Largest coefficient seen so far in each degree of the iterates; the
    /// roundoff floor for the divisibility test.
    pub data_scales: BTreeMap<usize, f64>,
}

impl HamiltonianState {
    /// Initial state `n = 0` of a Hamiltonian whose quadratic part must be
    /// exactly `N_0` and which has no terms below degree 2.
    pub fn initial(h: &TFSeries, omega: &QuadraticForm) -> Result<Self> {
        let d = omega.dim();
        if h.dim() != d {
            return Err(Error::DimensionMismatch(h.dim(), d));
        }
        if let Some(lo) = h.min_degree() {
            if lo < 2 {
                return Err(Error::InvalidArgument(format!(
                    "Hamiltonian has a term of degree {lo}; expected lowest degree 2"
                )));
            }
        }
        let n0 = omega.n0(h.degree_cap());
        let quad = h.degree_block(2);
        let defect = quad.max_coeff_diff(&n0);
        if defect > 1e-12 * n0.max_abs() {
            return Err(Error::InvalidArgument(format!(
                "degree-2 part differs from N_0 = IᵀΩI by {defect:.3e}"
            )));
        }
        Ok(HamiltonianState {
            n: 0,
            normal: n0,
            remainder: h.project_degrees(3, usize::MAX),
            a3_scales: BTreeMap::new(),
            data_scales: degree_scales(h, &BTreeMap::new()),
        })
    }

    pub fn m(&self) -> usize {
        normalized_degree(self.n)
    }

    pub fn hamiltonian(&self) -> TFSeries {
        self.normal.add(&self.remainder).expect("same dimension")
    }

    pub fn dim(&self) -> usize {
        self.normal.dim()
    }
}

/// `prev` raised to the largest coefficient of each degree block of `h`.
pub(crate) fn degree_scales(h: &TFSeries, prev: &BTreeMap<usize, f64>) -> BTreeMap<usize, f64> {
    let mut out = prev.clone();
    for (key, c) in h.iter() {
        let e = out.entry(key.degree()).or_insert(0.0);
        *e = e.max(c.norm());
    }
    out
}

#[cfg(test)]
pub(crate) fn c64(re: f64) -> num_complex::Complex64 {
    num_complex::Complex64::new(re, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_normal_form_and_multipliers() {
        let omega = QuadraticForm::diagonal(&[1.0]).unwrap();
        let p = NormalFormProfile::new(omega, vec![0.1, 0.02]);
        let n = p.normal_form(8).unwrap();
        assert_eq!(n.coeff(&[2], &[0]), c64(1.0));
        assert_eq!(n.coeff(&[4], &[0]), c64(0.1));
        assert_eq!(n.coeff(&[6], &[0]), c64(0.02));
        assert!(n.coeff(&[8], &[0]).norm() == 0.0);
        assert_eq!(p.g(2, 8).unwrap(), TFSeries::constant(1, 8, c64(1.0)));
        assert_eq!(p.g(4, 8).unwrap().coeff(&[2], &[0]), c64(0.2));
        assert!((p.g(6, 8).unwrap().coeff(&[4], &[0]) - c64(0.06)).norm() < 1e-16);
        assert!(p.g(5, 8).unwrap().is_empty());
    }

    #[test]
    fn multipliers_reproduce_brackets() {
        use crate::random::{random_series, SeriesShape};
        use rand::SeedableRng;
        let omega = QuadraticForm::new(&[vec![1.0, 0.3], vec![0.3, -2.0]]).unwrap();
        let p = NormalFormProfile::new(omega.clone(), vec![0.1, -0.05]);
        let cap = 12;
        let shape = SeriesShape {
            min_degree: 2,
            max_degree: 3,
            max_mode: 2,
            terms: 3,
            amplitude: 1.0,
            zero_average: true,
        };
        let f = random_series(2, cap, &shape, &mut rand_chacha::ChaCha8Rng::seed_from_u64(5));
        let nf = p.normal_form(cap).unwrap();
        let bracket_n0 = omega.n0(cap).poisson_bracket(&f, cap).unwrap();
        for s in [4, 6] {
            let lhs = nf.degree_block(s).poisson_bracket(&f, cap).unwrap();
            let rhs = p.g(s, cap).unwrap().mul(&bracket_n0, cap).unwrap();
            assert!(lhs.max_coeff_diff(&rhs) < 1e-12 * lhs.max_abs());
        }
    }

    #[test]
    fn initial_state_validates() {
        let omega = QuadraticForm::diagonal(&[1.0, 2.0]).unwrap();
        let h = omega.n0(6);
        let s = HamiltonianState::initial(&h, &omega).unwrap();
        assert_eq!(s.m(), 2);
        assert!(s.remainder.is_empty());
        let bad = h.add(&TFSeries::monomial(2, 6, &[1, 0], &[1, 0], c64(1.0))).unwrap();
        assert!(HamiltonianState::initial(&bad, &omega).is_err());
        let wrong = h.scale_real(2.0);
        assert!(HamiltonianState::initial(&wrong, &omega).is_err());
    }
}
