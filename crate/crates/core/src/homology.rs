//! Homological equation `{N_0, F} = Q` for a quadratic, zero-frequency `N_0`.
//!
//! With `N_0(I) = Iᵀ Ω I` the bracket acts on a Fourier block `F̂_k(I)` as
//! multiplication by `4πi⟨Ωk, I⟩`. For `k ≠ 0` the linear form is nonzero
//! (`det Ω ≠ 0`), so the map is injective on each homogeneous degree block and
//! `F̂_k` is recovered by least-squares division; the residual measures how far
//! `Q̂_k` is from being divisible. The `k = 0` block is the kernel's image
//! complement and is handed back whole as the part absorbed into the normal form.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{ActionPolynomial, DomainBox, MultiDegree, TFSeries, WaveVector, MAX_DIM};

/// Default floor on `|det Ω|`.
pub const DEFAULT_DET_FLOOR: f64 = 1e-10;

/// Default relative divisibility tolerance.
pub const DEFAULT_DIVISIBILITY_TOL: f64 = 1e-9;

const SYMMETRY_TOL: f64 = 1e-12;

/// Symmetric nondegenerate matrix `Ω` of `N_0(I) = Iᵀ Ω I`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm {
    omega: DMatrix<f64>,
}

impl QuadraticForm {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        Self::with_det_floor(rows, DEFAULT_DET_FLOOR)
    }

    pub fn with_det_floor(rows: &[Vec<f64>], floor: f64) -> Result<Self> {
        let d = rows.len();
        if d == 0 || d > MAX_DIM {
            return Err(Error::InvalidArgument(format!("omega must be d×d with 1 ≤ d ≤ {MAX_DIM}")));
        }
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidArgument("omega is not square".into()));
        }
        let omega = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
        if omega.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("omega has non-finite entries".into()));
        }
        let asym = (&omega - omega.transpose()).amax();
        if asym > SYMMETRY_TOL {
            return Err(Error::InvalidArgument(format!("omega not symmetric (defect {asym:.3e})")));
        }
        let det = omega.determinant();
        if det.abs() <= floor {
            return Err(Error::InvalidArgument(format!("omega degenerate (det {det:.3e})")));
        }
        Ok(QuadraticForm { omega })
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = (0..diag.len())
            .map(|i| (0..diag.len()).map(|j| if i == j { diag[i] } else { 0.0 }).collect())
            .collect();
        Self::new(&rows)
    }

    pub fn dim(&self) -> usize {
        self.omega.nrows()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.omega[(i, j)]).collect())
            .collect()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.omega[(i, j)]
    }

    /// `Ωk` as a real vector.
    pub fn apply(&self, k: &WaveVector) -> Vec<f64> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.omega[(i, j)] * k.get(j) as f64).sum())
            .collect()
    }

    /// `N_0(I) = Iᵀ Ω I` as a series.
    pub fn n0(&self, cap: usize) -> ActionPolynomial {
        let d = self.dim();
        let mut s = TFSeries::zero(d, cap);
        for i in 0..d {
            for j in i..d {
                let c = if i == j { self.omega[(i, i)] } else { 2.0 * self.omega[(i, j)] };
                let mut e = vec![0u32; d];
                e[i] += 1;
                e[j] += 1;
                s.add_term(MultiDegree::new(&e), WaveVector::zero(), Complex64::new(c, 0.0));
            }
        }
        s
    }
}

impl Serialize for QuadraticForm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for QuadraticForm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        QuadraticForm::new(&rows).map_err(serde::de::Error::custom)
    }
}

/// The degree-one action polynomial `⟨Ωk, I⟩`.
pub fn linear_form(omega: &QuadraticForm, k: &WaveVector, cap: usize) -> ActionPolynomial {
    let d = omega.dim();
    let mut s = TFSeries::zero(d, cap);
    for (i, w) in omega.apply(k).into_iter().enumerate() {
        s.add_term(MultiDegree::unit(i), WaveVector::zero(), Complex64::new(w, 0.0));
    }
    s
}

/// All exponent vectors of total degree `deg` in `dim` variables, in a fixed order.
pub fn monomials(dim: usize, deg: usize) -> Vec<MultiDegree> {
    fn rec(dim: usize, left: usize, prefix: &mut Vec<u32>, out: &mut Vec<MultiDegree>) {
        if prefix.len() + 1 == dim {
            prefix.push(left as u32);
            out.push(MultiDegree::new(prefix));
            prefix.pop();
            return;
        }
        for e in (0..=left).rev() {
            prefix.push(e as u32);
            rec(dim, left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, deg, &mut Vec::with_capacity(dim), &mut out);
    out
}

struct Factor {
    rows: Vec<MultiDegree>,
    cols: Vec<MultiDegree>,
    row_index: HashMap<MultiDegree, usize>,
    a: DMatrix<f64>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
}

/// Least-squares division of homogeneous blocks by a fixed linear form, with
/// the orthogonal factorizations cached per degree.
struct Divider {
    dim: usize,
    w: Vec<f64>,
    cache: HashMap<usize, Factor>,
}

impl Divider {
    fn new(w: Vec<f64>) -> Result<Self> {
        if w.iter().all(|&x| x == 0.0) {
            return Err(Error::ZeroLinearForm);
        }
        Ok(Divider {
            dim: w.len(),
            w,
            cache: HashMap::new(),
        })
    }

    fn factor(&mut self, e: usize) -> &Factor {
        let (dim, w) = (self.dim, &self.w);
        self.cache.entry(e).or_insert_with(|| {
            let cols = monomials(dim, e);
            let rows = monomials(dim, e + 1);
            let row_index: HashMap<_, _> = rows.iter().enumerate().map(|(i, m)| (*m, i)).collect();
            let mut a = DMatrix::zeros(rows.len(), cols.len());
            for (c, m) in cols.iter().enumerate() {
                for (i, &wi) in w.iter().enumerate() {
                    if wi != 0.0 {
                        let mut e = m.to_vec(dim);
                        e[i] += 1;
                        a[(row_index[&MultiDegree::new(&e)], c)] = wi;
                    }
                }
            }
            let qr = a.clone().qr();
            Factor {
                q: qr.q(),
                r: qr.r(),
                rows,
                cols,
                row_index,
                a,
            }
        })
    }

    /// Divides a homogeneous block of degree `e + 1`; returns the quotient
    /// terms and the residual 2-norm.
    fn divide(&mut self, block: &[(MultiDegree, Complex64)], deg: usize) -> (Vec<(MultiDegree, Complex64)>, f64) {
        if deg == 0 {
            let norm = block.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>().sqrt();
            return (Vec::new(), norm);
        }
        let f = self.factor(deg - 1);
        let n = f.rows.len();
        let mut re = DVector::zeros(n);
        let mut im = DVector::zeros(n);
        for (m, c) in block {
            let i = f.row_index[m];
            re[i] = c.re;
            im[i] = c.im;
        }
        let solve = |b: &DVector<f64>| -> DVector<f64> {
            let y = f.q.transpose() * b;
            f.r.solve_upper_triangular(&y).expect("multiplication by a nonzero linear form is injective")
        };
        let (xr, xi) = (solve(&re), solve(&im));
        let res = (&re - &f.a * &xr).norm_squared() + (&im - &f.a * &xi).norm_squared();
        let quotient = f
            .cols
            .iter()
            .enumerate()
            .map(|(c, m)| (*m, Complex64::new(xr[c], xi[c])))
            .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
            .collect();
        (quotient, res.sqrt())
    }
}

fn linear_coefficients(v: &TFSeries) -> Result<Vec<f64>> {
    let d = v.dim();
    let mut w = vec![0.0; d];
    for (key, c) in v.iter() {
        if key.degree() != 1 || !key.k().is_zero() {
            return Err(Error::InvalidArgument("divisor must be a linear action form".into()));
        }
        if c.im.abs() > 0.0 {
            return Err(Error::InvalidArgument("divisor must have real coefficients".into()));
        }
        let i = (0..d).find(|&i| key.j().get(i) == 1).expect("degree-one key");
        w[i] = c.re;
    }
    Ok(w)
}

/// Divides a homogeneous polynomial (all keys sharing one mode) by a nonzero
/// linear form. The quotient minimizes the coefficient 2-norm of `p − v·q`,
/// which is returned as the residue.
pub fn divide_by_linear_form(p: &TFSeries, v: &TFSeries) -> Result<(TFSeries, f64)> {
    if p.dim() != v.dim() {
        return Err(Error::DimensionMismatch(p.dim(), v.dim()));
    }
    let mut div = Divider::new(linear_coefficients(v)?)?;
    let mut out = TFSeries::zero(p.dim(), p.degree_cap());
    let blocks = p.blocks();
    if blocks.len() > 1 {
        return Err(Error::InvalidArgument("dividend must be homogeneous with a single mode".into()));
    }
    let mut residue = 0.0;
    for ((k, deg), block) in blocks {
        let (q, r) = div.divide(&block, deg);
        for (m, c) in q {
            out.add_term(m, k, c);
        }
        residue = r;
    }
    out.prune();
    Ok((out, residue))
}

/// Controls for [`solve_homological_with`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomologyOptions {
    /// A block is divisible when `residue ≤ tol · max(‖block‖, reference)`.
    pub tol: f64,
    /// Raise [`Error::ObstructionDetected`] instead of recording and continuing.
    pub strict: bool,
    /// Absolute coefficient scale below which residues count as roundoff.
    pub reference: f64,
}

impl Default for HomologyOptions {
    fn default() -> Self {
        HomologyOptions {
            tol: DEFAULT_DIVISIBILITY_TOL,
            strict: true,
            reference: 0.0,
        }
    }
}

/// A solved homological equation.
#[derive(Clone, Debug)]
pub struct HomologySolution {
    /// Zero-average solution: no `k = 0` keys.
    pub f: TFSeries,
    /// The `k = 0` part of the right-hand side.
    pub absorbed: ActionPolynomial,
    /// Residual norm per mode (blocks of different degree combined in 2-norm).
    pub residues: BTreeMap<WaveVector, f64>,
    /// Largest residue relative to its divisibility threshold, if any block failed.
    pub worst_obstruction: Option<(WaveVector, usize, f64)>,
}

impl HomologySolution {
    pub fn max_residue(&self) -> f64 {
        self.residues.values().copied().fold(0.0, f64::max)
    }
}

/// Solves `{N_0, F} = Q` in strict mode with the given divisibility tolerance.
pub fn solve_homological(omega: &QuadraticForm, q: &TFSeries, tol: f64) -> Result<HomologySolution> {
    solve_homological_with(
        omega,
        q,
        &HomologyOptions {
            tol,
            ..HomologyOptions::default()
        },
    )
}

pub fn solve_homological_with(omega: &QuadraticForm, q: &TFSeries, opts: &HomologyOptions) -> Result<HomologySolution> {
    let d = omega.dim();
    if q.dim() != d {
        return Err(Error::DimensionMismatch(d, q.dim()));
    }
    let mut f = TFSeries::zero(d, q.degree_cap());
    let absorbed = q.mode_zero();
    let mut residues: BTreeMap<WaveVector, f64> = BTreeMap::new();
    let mut worst: Option<(WaveVector, usize, f64, f64)> = None;

    let mut dividers: BTreeMap<WaveVector, Divider> = BTreeMap::new();
    // 1 / (4πi) = −i / (4π)
    let inv = Complex64::new(0.0, -1.0 / (4.0 * PI));
    for ((k, deg), block) in q.blocks() {
        if k.is_zero() {
            continue;
        }
        let div = match dividers.entry(k) {
            std::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::btree_map::Entry::Vacant(e) => e.insert(Divider::new(omega.apply(&k))?),
        };
        let (quot, res) = div.divide(&block, deg);
        for (m, c) in quot {
            f.add_term(m, k, c * inv);
        }
        let r = residues.entry(k).or_insert(0.0);
        *r = r.hypot(res);

        let block_norm = block.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>().sqrt();
        let threshold = opts.tol * block_norm.max(opts.reference);
        if res > threshold {
            let ratio = res / threshold.max(f64::MIN_POSITIVE);
            if worst.is_none_or(|w| ratio > w.3) {
                worst = Some((k, deg, res, ratio));
            }
        }
    }
    f.prune();
    if opts.strict {
        if let Some((mode, degree, residue, _)) = worst {
            return Err(Error::ObstructionDetected { mode, degree, residue });
        }
    }
    Ok(HomologySolution {
        f,
        absorbed,
        residues,
        worst_obstruction: worst.map(|(k, d, r, _)| (k, d, r)),
    })
}

/// Empirical constant of the tame estimate: `|F|_{ρ−δ,σ−γ} · δ · γ^d / |Q|_{ρ,σ}`.
pub fn homological_norm_ratio(f: &TFSeries, q: &TFSeries, b: &DomainBox, delta: f64, gamma: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < b.rho() && gamma > 0.0 && gamma < b.sigma()) {
        return Err(Error::InvalidArgument("need 0 < delta < rho and 0 < gamma < sigma".into()));
    }
    let qn = q.majorant_norm(b);
    if qn == 0.0 {
        return Err(Error::InvalidArgument("right-hand side has zero norm".into()));
    }
    let inner = DomainBox::new(b.rho() - delta, b.sigma() - gamma)?;
    Ok(f.majorant_norm(&inner) * delta * gamma.powi(f.dim() as i32) / qn)
}
