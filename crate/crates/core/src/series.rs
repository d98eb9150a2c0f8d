//! Sparse truncated Taylor–Fourier series
//!
//! A series in `d` actions `I` and `d` angles `θ`,
//!
//! ```text
//! f(I, θ) = Σ_{j,k} f_{j,k} I^j e^{2πi⟨k,θ⟩},
//! ```
//!
//! stored as a sparse map from `(j, k)` to a complex coefficient. Every series
//! carries a degree cap `D`; products and brackets silently drop terms with
//! `|j|₁ > D`.
//!
//! Coefficients whose modulus falls below `1e-14` times the largest modulus in
//! the same homogeneous degree block are pruned after every operation. Pruning
//! per degree (rather than against the global maximum) keeps the algebra
//! covariant under the action scaling `I ↦ aI`, which multiplies each degree
//! block by a different power of `a`.
//!
//! Norms use the max-norm polydisc `|I_i| < ρ` for the actions and the ℓ¹ norm
//! of `k` in the Fourier weight `e^{2π|k|σ}`. Both choices dominate the
//! Euclidean-ball majorant, so any bound checked with this norm is sufficient.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::fmt;
use std::hash::BuildHasherDefault;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported number of degrees of freedom.
pub const MAX_DIM: usize = 6;

/// Relative prune threshold applied per degree block.
pub const PRUNE_REL: f64 = 1e-14;

const TWO_PI_I: Complex64 = Complex64::new(0.0, 2.0 * PI);

type Accumulator = HashMap<Key, Complex64, BuildHasherDefault<DefaultHasher>>;

/// Exponent vector `j` of the actions.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MultiDegree([u8; MAX_DIM]);

impl MultiDegree {
    pub fn new(exps: &[u32]) -> Self {
        assert!(exps.len() <= MAX_DIM, "too many exponents");
        let mut out = [0u8; MAX_DIM];
        for (o, &e) in out.iter_mut().zip(exps) {
            *o = u8::try_from(e).expect("exponent exceeds 255");
        }
        MultiDegree(out)
    }

    pub fn unit(i: usize) -> Self {
        let mut out = [0u8; MAX_DIM];
        out[i] = 1;
        MultiDegree(out)
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn get(&self, i: usize) -> u32 {
        self.0[i] as u32
    }

    pub fn to_vec(&self, dim: usize) -> Vec<u32> {
        self.0[..dim].iter().map(|&e| e as u32).collect()
    }

    fn plus(&self, other: &Self) -> Self {
        let mut out = self.0;
        for (o, &e) in out.iter_mut().zip(&other.0) {
            *o = o.checked_add(e).expect("exponent overflow");
        }
        MultiDegree(out)
    }
}

impl fmt::Debug for MultiDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "j{:?}", trimmed(&self.0.map(|e| e as i32)))
    }
}

/// Fourier mode `k` of the angles.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct WaveVector([i16; MAX_DIM]);

impl WaveVector {
    pub fn new(k: &[i32]) -> Self {
        assert!(k.len() <= MAX_DIM, "too many mode components");
        let mut out = [0i16; MAX_DIM];
        for (o, &c) in out.iter_mut().zip(k) {
            *o = i16::try_from(c).expect("mode component out of range");
        }
        WaveVector(out)
    }

    pub fn zero() -> Self {
        WaveVector([0; MAX_DIM])
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn l1(&self) -> usize {
        self.0.iter().map(|&c| c.unsigned_abs() as usize).sum()
    }

    pub fn get(&self, i: usize) -> i32 {
        self.0[i] as i32
    }

    pub fn to_vec(&self, dim: usize) -> Vec<i32> {
        self.0[..dim].iter().map(|&c| c as i32).collect()
    }

    pub fn neg(&self) -> Self {
        WaveVector(self.0.map(|c| -c))
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.0;
        for (o, &c) in out.iter_mut().zip(&other.0) {
            *o = o.checked_add(c).expect("mode overflow");
        }
        WaveVector(out)
    }
}

fn trimmed(v: &[i32]) -> Vec<i32> {
    let last = v.iter().rposition(|&c| c != 0).map_or(1, |p| p + 1);
    v[..last].to_vec()
}

impl fmt::Debug for WaveVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k{:?}", trimmed(&self.0.map(|c| c as i32)))
    }
}

impl fmt::Display for WaveVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = trimmed(&self.0.map(|c| c as i32))
            .iter()
            .map(|c| c.to_string())
            .collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Storage key; ordered by total degree first so iteration walks degree blocks.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Key {
    deg: u16,
    j: MultiDegree,
    k: WaveVector,
}

impl Key {
    pub fn new(j: MultiDegree, k: WaveVector) -> Self {
        Key {
            deg: j.total() as u16,
            j,
            k,
        }
    }

    pub fn degree(&self) -> usize {
        self.deg as usize
    }

    pub fn j(&self) -> MultiDegree {
        self.j
    }

    pub fn k(&self) -> WaveVector {
        self.k
    }
}

/// Action radius and angle strip width of the complex domain `D_ρ^d × T_σ^d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    rho: f64,
    sigma: f64,
}

impl DomainBox {
    pub fn new(rho: f64, sigma: f64) -> Result<Self> {
        if !(rho > 0.0 && sigma > 0.0 && rho.is_finite() && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "domain box needs rho > 0 and sigma > 0, got ({rho}, {sigma})"
            )));
        }
        Ok(DomainBox { rho, sigma })
    }

    /// Square box `ρ = σ`, the shape used by the iteration.
    pub fn square(r: f64) -> Result<Self> {
        Self::new(r, r)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Outcome of a real-symmetry check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetryCheck {
    pub symmetric: bool,
    pub worst_defect: f64,
}

/// Sparse truncated Taylor–Fourier series.
#[derive(Clone, Debug, PartialEq)]
pub struct TFSeries {
    dim: usize,
    cap: usize,
    coeffs: BTreeMap<Key, Complex64>,
}

/// A series whose keys all have `k = 0`: the θ-independent polynomials such as
/// the normal form and the multipliers `g_m`.
pub type ActionPolynomial = TFSeries;

impl TFSeries {
    /// Zero series. Panics when `dim` is outside `1..=MAX_DIM`.
    pub fn zero(dim: usize, cap: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} unsupported");
        TFSeries {
            dim,
            cap,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, cap: usize, c: Complex64) -> Self {
        Self::monomial(dim, cap, &vec![0; dim], &vec![0; dim], c)
    }

    /// Single term `c I^j e^{2πi⟨k,θ⟩}`; dropped if `|j|₁ > cap`.
    pub fn monomial(dim: usize, cap: usize, j: &[u32], k: &[i32], c: Complex64) -> Self {
        let mut s = Self::zero(dim, cap);
        assert_eq!(j.len(), dim);
        assert_eq!(k.len(), dim);
        s.add_term(MultiDegree::new(j), WaveVector::new(k), c);
        s
    }

    /// The coordinate function `I_i`.
    pub fn action(dim: usize, cap: usize, i: usize) -> Self {
        let mut s = Self::zero(dim, cap);
        s.add_term(MultiDegree::unit(i), WaveVector::zero(), Complex64::new(1.0, 0.0));
        s
    }

    /// Builds a series from `(j, k, c)` triples, summing repeated keys.
    pub fn from_terms<'a, I>(dim: usize, cap: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (&'a [u32], &'a [i32], Complex64)>,
    {
        let mut s = Self::zero(dim, cap);
        for (j, k, c) in terms {
            s.add_term(MultiDegree::new(j), WaveVector::new(k), c);
        }
        s.prune();
        s
    }

    /// Adds `c` to the coefficient of `(j, k)` in place. Terms above the cap
    /// are ignored. Exact zeros are removed; no relative pruning is applied.
    pub fn add_term(&mut self, j: MultiDegree, k: WaveVector, c: Complex64) {
        let key = Key::new(j, k);
        if key.degree() > self.cap {
            return;
        }
        let entry = self.coeffs.entry(key).or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
        if *entry == Complex64::new(0.0, 0.0) {
            self.coeffs.remove(&key);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree_cap(&self) -> usize {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, j: &[u32], k: &[i32]) -> Complex64 {
        self.get(&Key::new(MultiDegree::new(j), WaveVector::new(k)))
    }

    pub fn get(&self, key: &Key) -> Complex64 {
        self.coeffs
            .get(key)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Key, &Complex64)> {
        self.coeffs.iter()
    }

    pub fn min_degree(&self) -> Option<usize> {
        self.coeffs.keys().next().map(Key::degree)
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.coeffs.keys().next_back().map(Key::degree)
    }

    pub fn max_mode_l1(&self) -> usize {
        self.coeffs.keys().map(|k| k.k.l1()).max().unwrap_or(0)
    }

    /// True when every stored key has `k = 0`.
    pub fn is_action_only(&self) -> bool {
        self.coeffs.keys().all(|k| k.k.is_zero())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Euclidean norm of the coefficient vector.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Same series with a different cap; terms above the new cap are dropped.
    pub fn with_cap(&self, cap: usize) -> Self {
        TFSeries {
            dim: self.dim,
            cap,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(k, _)| k.degree() <= cap)
                .map(|(k, c)| (*k, *c))
                .collect(),
        }
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        Ok(())
    }

    fn from_accumulator(dim: usize, cap: usize, acc: Accumulator) -> Self {
        let mut s = TFSeries {
            dim,
            cap,
            coeffs: acc.into_iter().filter(|(k, _)| k.degree() <= cap).collect(),
        };
        s.prune();
        s
    }

    /// Drops exact zeros and coefficients below `PRUNE_REL` times the largest
    /// modulus of their degree block.
    pub fn prune(&mut self) {
        let mut block_max: BTreeMap<u16, f64> = BTreeMap::new();
        for (k, c) in &self.coeffs {
            let m = block_max.entry(k.deg).or_insert(0.0);
            *m = m.max(c.norm());
        }
        self.coeffs.retain(|k, c| {
            let n = c.norm();
            n > 0.0 && n >= PRUNE_REL * block_max[&k.deg]
        });
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = self.clone();
        out.cap = self.cap.max(other.cap);
        for (k, c) in &other.coeffs {
            *out.coeffs.entry(*k).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        out.prune();
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = TFSeries {
            dim: self.dim,
            cap: self.cap,
            coeffs: self.coeffs.iter().map(|(k, v)| (*k, v * c)).collect(),
        };
        out.prune();
        out
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    fn degree_sorted(&self) -> Vec<(Key, Complex64)> {
        self.coeffs.iter().map(|(k, c)| (*k, *c)).collect()
    }

    /// Cauchy product truncated at total degree `cap`.
    pub fn mul(&self, other: &Self, cap: usize) -> Result<Self> {
        self.check_dim(other)?;
        let rhs = other.degree_sorted();
        let mut acc = Accumulator::default();
        for (ka, ca) in &self.coeffs {
            let da = ka.degree();
            if da > cap {
                break;
            }
            for (kb, cb) in &rhs {
                if da + kb.degree() > cap {
                    break;
                }
                let key = Key::new(ka.j.plus(&kb.j), ka.k.plus(&kb.k));
                *acc.entry(key).or_insert(Complex64::new(0.0, 0.0)) += ca * cb;
            }
        }
        Ok(Self::from_accumulator(self.dim, cap, acc))
    }

    /// Integer power truncated at `cap`.
    pub fn pow(&self, e: u32, cap: usize) -> Result<Self> {
        let mut out = Self::constant(self.dim, cap, Complex64::new(1.0, 0.0));
        for _ in 0..e {
            out = out.mul(self, cap)?;
        }
        Ok(out)
    }

    /// Poisson bracket `{self, other} = Σ_i ∂_{I_i}self ∂_{θ_i}other − ∂_{θ_i}self ∂_{I_i}other`,
    /// truncated at `cap`.
    ///
    /// With this sign the flow of `F` is `İ = F_θ, θ̇ = −F_I` and
    /// `d/dt (G ∘ X_F^t) = {G, F} ∘ X_F^t`.
    ///
    /// Pairs with `key(self) < key(other)` and with `key(self) > key(other)` are
    /// summed separately, each in the order of the smaller key first, so
    /// `{g, f} = −{f, g}` bitwise and `{f, f} = 0` exactly.
    pub fn poisson_bracket(&self, other: &Self, cap: usize) -> Result<Self> {
        self.check_dim(other)?;
        let d = self.dim;
        let mut below = Accumulator::default();
        let mut above = Accumulator::default();
        Self::bracket_pass(&self.coeffs, &other.coeffs, d, cap, false, &mut below);
        Self::bracket_pass(&other.coeffs, &self.coeffs, d, cap, true, &mut above);
        for (key, c) in above {
            *below.entry(key).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        Ok(Self::from_accumulator(d, cap, below))
    }

    /// Adds `{x, y}` (or `{y, x}` when `swapped`) over pairs with `key(x) < key(y)`.
    fn bracket_pass(
        xs: &BTreeMap<Key, Complex64>,
        ys: &BTreeMap<Key, Complex64>,
        d: usize,
        cap: usize,
        swapped: bool,
        acc: &mut Accumulator,
    ) {
        for (kx, cx) in xs {
            let dx = kx.degree();
            if dx > cap + 1 {
                break;
            }
            for (ky, cy) in ys.range((std::ops::Bound::Excluded(*kx), std::ops::Bound::Unbounded)) {
                if dx + ky.degree() > cap + 1 {
                    break;
                }
                let (ka, kb, ca, cb) = if swapped { (ky, kx, cy, cx) } else { (kx, ky, cx, cy) };
                let prod = ca * cb * TWO_PI_I;
                let sum_j = ka.j.plus(&kb.j);
                let mode = ka.k.plus(&kb.k);
                for i in 0..d {
                    let weight = ka.j.get(i) as f64 * kb.k.get(i) as f64
                        - ka.k.get(i) as f64 * kb.j.get(i) as f64;
                    if weight == 0.0 {
                        continue;
                    }
                    let mut j = sum_j;
                    j.0[i] -= 1;
                    let key = Key::new(j, mode);
                    *acc.entry(key).or_insert(Complex64::new(0.0, 0.0)) += prod * weight;
                }
            }
        }
    }

    /// `∂f/∂θ_i`.
    pub fn d_theta(&self, i: usize) -> Self {
        let mut out = Self::zero(self.dim, self.cap);
        for (k, c) in &self.coeffs {
            let f = k.k.get(i);
            if f != 0 {
                out.coeffs.insert(*k, c * TWO_PI_I * f as f64);
            }
        }
        out.prune();
        out
    }

    /// `∂f/∂I_i`.
    pub fn d_action(&self, i: usize) -> Self {
        let mut out = Self::zero(self.dim, self.cap);
        for (k, c) in &self.coeffs {
            let e = k.j.get(i);
            if e > 0 {
                let mut j = k.j;
                j.0[i] -= 1;
                out.coeffs.insert(Key::new(j, k.k), c * e as f64);
            }
        }
        out.prune();
        out
    }

    /// Multiplication by `e^{2πi⟨k,θ⟩}`.
    pub fn shifted(&self, k: &WaveVector) -> Self {
        TFSeries {
            dim: self.dim,
            cap: self.cap,
            coeffs: self
                .coeffs
                .iter()
                .map(|(key, c)| (Key::new(key.j, key.k.plus(k)), *c))
                .collect(),
        }
    }

    /// Keeps exactly the keys with `lo ≤ |j|₁ ≤ hi`.
    pub fn project_degrees(&self, lo: usize, hi: usize) -> Self {
        self.filter(|k| (lo..=hi).contains(&k.degree()))
    }

    /// Homogeneous block of degree `deg`.
    pub fn degree_block(&self, deg: usize) -> Self {
        self.project_degrees(deg, deg)
    }

    /// θ-average: the `k = 0` part.
    pub fn mode_zero(&self) -> Self {
        self.filter(|k| k.k.is_zero())
    }

    /// Everything except the `k = 0` part.
    pub fn oscillating(&self) -> Self {
        self.filter(|k| !k.k.is_zero())
    }

    fn filter(&self, pred: impl Fn(&Key) -> bool) -> Self {
        TFSeries {
            dim: self.dim,
            cap: self.cap,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(k, _)| pred(k))
                .map(|(k, c)| (*k, *c))
                .collect(),
        }
    }

    /// Terms grouped by `(mode, degree)`.
    pub fn blocks(&self) -> BTreeMap<(WaveVector, usize), Vec<(MultiDegree, Complex64)>> {
        let mut out: BTreeMap<_, Vec<_>> = BTreeMap::new();
        for (k, c) in &self.coeffs {
            out.entry((k.k, k.degree())).or_default().push((k.j, *c));
        }
        out
    }

    /// Majorant norm `Σ |f_{j,k}| ρ^{|j|₁} e^{2π|k|₁σ}`.
    pub fn majorant_norm(&self, b: &DomainBox) -> f64 {
        self.coeffs
            .iter()
            .map(|(k, c)| {
                c.norm()
                    * b.rho.powi(k.degree() as i32)
                    * (2.0 * PI * k.k.l1() as f64 * b.sigma).exp()
            })
            .fold(0.0, |a, b| a + b)
    }

    /// Majorant norm of each degree block.
    pub fn majorant_by_degree(&self, b: &DomainBox) -> BTreeMap<usize, f64> {
        let mut out = BTreeMap::new();
        for (k, c) in &self.coeffs {
            *out.entry(k.degree()).or_insert(0.0) += c.norm()
                * b.rho.powi(k.degree() as i32)
                * (2.0 * PI * k.k.l1() as f64 * b.sigma).exp();
        }
        out
    }

    /// Compares `coeff(j, −k)` with `conj(coeff(j, k))` over all stored keys.
    pub fn check_real_symmetric(&self, tol: f64) -> SymmetryCheck {
        let mut worst: f64 = 0.0;
        for (k, c) in &self.coeffs {
            let partner = self.get(&Key::new(k.j, k.k.neg()));
            worst = worst.max((partner - c.conj()).norm());
        }
        SymmetryCheck {
            symmetric: worst <= tol,
            worst_defect: worst,
        }
    }

    /// Pointwise value at real actions and angles.
    pub fn evaluate(&self, actions: &[f64], angles: &[f64]) -> Complex64 {
        assert_eq!(actions.len(), self.dim);
        assert_eq!(angles.len(), self.dim);
        self.coeffs
            .iter()
            .map(|(k, c)| {
                let mut mono = 1.0;
                let mut phase = 0.0;
                for i in 0..self.dim {
                    mono *= actions[i].powi(k.j.get(i) as i32);
                    phase += k.k.get(i) as f64 * angles[i];
                }
                c * mono * Complex64::from_polar(1.0, 2.0 * PI * phase)
            })
            .sum()
    }

    /// Largest absolute coefficientwise difference.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, c) in &self.coeffs {
            worst = worst.max((c - other.get(k)).norm());
        }
        for (k, c) in &other.coeffs {
            if !self.coeffs.contains_key(k) {
                worst = worst.max(c.norm());
            }
        }
        worst
    }
}

/// One coefficient in plain form, as stored in files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub j: Vec<u32>,
    pub k: Vec<i32>,
    pub re: f64,
    pub im: f64,
}

impl TFSeries {
    /// Builds a series from plain terms, rejecting malformed indices.
    /// Repeated keys are summed.
    pub fn from_term_list(dim: usize, cap: usize, terms: &[Term]) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::Malformed(format!("unsupported dim {dim}")));
        }
        let mut s = TFSeries::zero(dim, cap);
        for (i, t) in terms.iter().enumerate() {
            if t.j.len() != dim || t.k.len() != dim {
                return Err(Error::Malformed(format!("term {i}: index length differs from dim {dim}")));
            }
            if t.j.iter().any(|&e| e > 255) || t.k.iter().any(|&c| c.unsigned_abs() > 32767) {
                return Err(Error::Malformed(format!("term {i}: index out of range")));
            }
            if !(t.re.is_finite() && t.im.is_finite()) {
                return Err(Error::Malformed(format!("term {i}: non-finite coefficient")));
            }
            let key = Key::new(MultiDegree::new(&t.j), WaveVector::new(&t.k));
            if key.degree() > cap {
                return Err(Error::Malformed(format!("term {i}: degree {} exceeds degree_cap {cap}", key.degree())));
            }
            *s.coeffs.entry(key).or_insert(Complex64::new(0.0, 0.0)) += Complex64::new(t.re, t.im);
        }
        s.coeffs.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        Ok(s)
    }

    /// Terms in key order.
    pub fn to_term_list(&self) -> Vec<Term> {
        self.coeffs
            .iter()
            .map(|(k, c)| Term {
                j: k.j.to_vec(self.dim),
                k: k.k.to_vec(self.dim),
                re: c.re,
                im: c.im,
            })
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct SeriesDoc {
    dim: usize,
    degree_cap: usize,
    terms: Vec<Term>,
}

impl Serialize for TFSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SeriesDoc {
            dim: self.dim,
            degree_cap: self.cap,
            terms: self.to_term_list(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TFSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = SeriesDoc::deserialize(d)?;
        if !(1..=MAX_DIM).contains(&doc.dim) {
            return Err(D::Error::custom(format!("unsupported dim {}", doc.dim)));
        }
        TFSeries::from_term_list(doc.dim, doc.degree_cap, &doc.terms).map_err(D::Error::custom)
    }
}
