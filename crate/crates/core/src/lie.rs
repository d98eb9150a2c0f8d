//! Time-one Hamiltonian flows as finite Lie series.
//!
//! For a generator `F` whose lowest degree is at least 2 every bracket
//! `{·, F}` raises the lowest degree by at least one, so under a degree cap the
//! exponential series `exp(ad_F) H = Σ (1/m!) ad_F^m H` terminates and the
//! pullback `H ∘ X_F^1` is exact through the cap.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::series::{DomainBox, MultiDegree, TFSeries, WaveVector};

fn check_generator(f: &TFSeries) -> Result<()> {
    match f.min_degree() {
        Some(d) if d < 2 => Err(Error::InvalidGenerator(format!(
            "generator has a term of degree {d}; lowest degree must be at least 2"
        ))),
        _ => Ok(()),
    }
}

/// `H ∘ X_F^1` through degree `cap`, computed as `Σ_m (1/m!) ad_F^m H` with
/// `ad_F H = {H, F}`.
pub fn lie_pullback(h: &TFSeries, f: &TFSeries, cap: usize) -> Result<TFSeries> {
    check_generator(f)?;
    if h.dim() != f.dim() {
        return Err(Error::DimensionMismatch(h.dim(), f.dim()));
    }
    let mut term = h.with_cap(cap);
    let mut sum = term.clone();
    if f.is_empty() {
        return Ok(sum);
    }
    for m in 1.. {
        term = term.poisson_bracket(f, cap)?.scale_real(1.0 / m as f64);
        if term.is_empty() {
            break;
        }
        sum = sum.add(&term)?;
    }
    Ok(sum)
}

/// A near-identity change of coordinates `(I, θ) ↦ (U(I, θ), θ + v(I, θ))`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordinateMap {
    u: Vec<TFSeries>,
    v: Vec<TFSeries>,
}

impl CoordinateMap {
    pub fn identity(dim: usize, cap: usize) -> Self {
        CoordinateMap {
            u: (0..dim).map(|i| TFSeries::action(dim, cap, i)).collect(),
            v: (0..dim).map(|_| TFSeries::zero(dim, cap)).collect(),
        }
    }

    /// Assembles a map from action images `U_j` and angle deviations `v_j`.
    pub fn from_parts(u: Vec<TFSeries>, v: Vec<TFSeries>) -> Result<Self> {
        let d = u.len();
        if v.len() != d || u.iter().chain(&v).any(|s| s.dim() != d) {
            return Err(Error::InvalidArgument("coordinate map components disagree on dimension".into()));
        }
        Ok(CoordinateMap { u, v })
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn actions(&self) -> &[TFSeries] {
        &self.u
    }

    pub fn angle_deviations(&self) -> &[TFSeries] {
        &self.v
    }

    /// `Σ_j |U_j − I_j| + |v_j|` in the majorant norm on `b`.
    pub fn deviation_norm(&self, b: &DomainBox) -> f64 {
        let d = self.dim();
        (0..d)
            .map(|j| {
                let cap = self.u[j].degree_cap();
                let du = self.u[j]
                    .sub(&TFSeries::action(d, cap, j))
                    .expect("same dimension");
                du.majorant_norm(b) + self.v[j].majorant_norm(b)
            })
            .sum()
    }

    /// Largest coefficient distance to the identity map over degrees `≤ max_deg`.
    pub fn distance_to_identity(&self, max_deg: usize) -> f64 {
        let d = self.dim();
        let id = CoordinateMap::identity(d, max_deg);
        self.u
            .iter()
            .zip(&id.u)
            .chain(self.v.iter().zip(&id.v))
            .map(|(a, b)| a.project_degrees(0, max_deg).max_coeff_diff(b))
            .fold(0.0, f64::max)
    }

    /// `self ∘ inner` by series substitution, truncated at `cap`.
    pub fn compose(&self, inner: &CoordinateMap, cap: usize) -> Result<CoordinateMap> {
        let mut sub = Substitution::new(inner, cap)?;
        let u = self.u.iter().map(|f| sub.apply(f)).collect::<Result<Vec<_>>>()?;
        let v = self
            .v
            .iter()
            .zip(&inner.v)
            .map(|(f, w)| sub.apply(f)?.add(w))
            .collect::<Result<Vec<_>>>()?;
        Ok(CoordinateMap { u, v })
    }

    /// `self ∘ X_F^1` through Lie series: `U_j ∘ X_F^1 = exp(ad_F) U_j` and
    /// `(θ_j + v_j) ∘ X_F^1 = θ_j + w_j + exp(ad_F) v_j`, where `w_j` is the
    /// angle deviation of the flow.
    pub fn then_flow(&self, f: &TFSeries, cap: usize) -> Result<CoordinateMap> {
        let flow = flow_coordinates(f, cap)?;
        let u = self
            .u
            .iter()
            .map(|s| lie_pullback(s, f, cap))
            .collect::<Result<Vec<_>>>()?;
        let v = self
            .v
            .iter()
            .zip(&flow.v)
            .map(|(s, w)| lie_pullback(s, f, cap)?.add(w))
            .collect::<Result<Vec<_>>>()?;
        Ok(CoordinateMap { u, v })
    }

    /// `f ∘ self`, truncated at `cap`.
    pub fn pull_back(&self, f: &TFSeries, cap: usize) -> Result<TFSeries> {
        Substitution::new(self, cap)?.apply(f)
    }
}

/// Evaluates series at `(U, θ + v)` with cached action powers.
struct Substitution<'a> {
    map: &'a CoordinateMap,
    cap: usize,
    powers: HashMap<MultiDegree, TFSeries>,
    // exp(±2πi v_i)^n keyed by (i, ±n)
    phases: HashMap<(usize, i32), TFSeries>,
}

impl<'a> Substitution<'a> {
    fn new(map: &'a CoordinateMap, cap: usize) -> Result<Self> {
        for s in map.u.iter().chain(&map.v) {
            if s.min_degree() == Some(0) {
                return Err(Error::InvalidArgument(
                    "substitution needs maps without degree-0 action or angle terms".into(),
                ));
            }
        }
        Ok(Substitution {
            map,
            cap,
            powers: HashMap::new(),
            phases: HashMap::new(),
        })
    }

    fn phase(&mut self, i: usize, n: i32) -> Result<TFSeries> {
        if let Some(p) = self.phases.get(&(i, n)) {
            return Ok(p.clone());
        }
        let d = self.map.dim();
        let p = if n == 0 {
            TFSeries::constant(d, self.cap, Complex64::new(1.0, 0.0))
        } else if n.abs() == 1 {
            let c = Complex64::new(0.0, 2.0 * PI * n as f64);
            exp_series(&self.map.v[i].scale(c), self.cap)?
        } else {
            let step = n.signum();
            self.phase(i, n - step)?.mul(&self.phase(i, step)?, self.cap)?
        };
        self.phases.insert((i, n), p.clone());
        Ok(p)
    }

    fn power(&mut self, j: MultiDegree) -> Result<TFSeries> {
        if let Some(p) = self.powers.get(&j) {
            return Ok(p.clone());
        }
        let d = self.map.dim();
        let p = match (0..d).find(|&i| j.get(i) > 0) {
            None => TFSeries::constant(d, self.cap, Complex64::new(1.0, 0.0)),
            Some(i) => {
                let mut lower = j.to_vec(d);
                lower[i] -= 1;
                self.power(MultiDegree::new(&lower))?.mul(&self.map.u[i], self.cap)?
            }
        };
        self.powers.insert(j, p.clone());
        Ok(p)
    }

    fn apply(&mut self, f: &TFSeries) -> Result<TFSeries> {
        let d = self.map.dim();
        if f.dim() != d {
            return Err(Error::DimensionMismatch(f.dim(), d));
        }
        let mut by_mode: BTreeMap<WaveVector, Vec<(MultiDegree, Complex64)>> = BTreeMap::new();
        for (key, c) in f.iter() {
            by_mode.entry(key.k()).or_default().push((key.j(), *c));
        }
        let mut out = TFSeries::zero(d, self.cap);
        for (k, terms) in by_mode {
            let mut poly = TFSeries::zero(d, self.cap);
            for (j, c) in terms {
                if j.total() > self.cap {
                    continue;
                }
                poly = poly.add(&self.power(j)?.scale(c))?;
            }
            if !k.is_zero() {
                for i in 0..d {
                    if k.get(i) != 0 {
                        poly = poly.mul(&self.phase(i, k.get(i))?, self.cap)?;
                    }
                }
                poly = poly.shifted(&k);
            }
            out = out.add(&poly)?;
        }
        Ok(out)
    }
}

/// `exp(w)` for a series without constant term.
fn exp_series(w: &TFSeries, cap: usize) -> Result<TFSeries> {
    let d = w.dim();
    let mut sum = TFSeries::constant(d, cap, Complex64::new(1.0, 0.0));
    let mut term = sum.clone();
    for m in 1.. {
        term = term.mul(w, cap)?.scale_real(1.0 / m as f64);
        if term.is_empty() {
            break;
        }
        sum = sum.add(&term)?;
    }
    Ok(sum)
}

/// The time-one map `X_F^1` as a coordinate map, truncated at `cap`.
///
/// `U_j = I_j ∘ X_F^1` is a plain Lie pullback. The angle deviation uses
/// `{θ_j, F} = −∂F/∂I_j`, so `v_j = Σ_{m≥1} (1/m!) ad_F^{m−1}(−∂F/∂I_j)`.
pub fn flow_coordinates(f: &TFSeries, cap: usize) -> Result<CoordinateMap> {
    check_generator(f)?;
    let d = f.dim();
    let mut u = Vec::with_capacity(d);
    let mut v = Vec::with_capacity(d);
    for j in 0..d {
        u.push(lie_pullback(&TFSeries::action(d, cap, j), f, cap)?);
        let mut term = f.d_action(j).neg().with_cap(cap);
        let mut sum = term.clone();
        for m in 2.. {
            if term.is_empty() {
                break;
            }
            term = term.poisson_bracket(f, cap)?.scale_real(1.0 / m as f64);
            sum = sum.add(&term)?;
        }
        v.push(sum);
    }
    Ok(CoordinateMap { u, v })
}

/// Single generator of `X_G^1 ∘ X_K^1` through double brackets:
/// `G + K + ½{G,K} + (1/12){G,{G,K}} + (1/12){K,{K,G}}`.
///
/// Exact only on degrees below the lowest triple-bracket degree.
pub fn cbd_combine(g: &TFSeries, k: &TFSeries, cap: usize) -> Result<TFSeries> {
    check_generator(g)?;
    check_generator(k)?;
    let gk = g.poisson_bracket(k, cap)?;
    let kg = gk.neg();
    let g_gk = g.poisson_bracket(&gk, cap)?;
    let k_kg = k.poisson_bracket(&kg, cap)?;
    g.with_cap(cap)
        .add(&k.with_cap(cap))?
        .add(&gk.scale_real(0.5))?
        .add(&g_gk.scale_real(1.0 / 12.0))?
        .add(&k_kg.scale_real(1.0 / 12.0))
}

/// Largest majorant norm (on `b`) among the canonical-relation defects
/// `{U_i,U_j}`, `{V_i,V_j}`, `{U_i,V_j} − δ_ij`, restricted to degrees
/// `≤ cap − 1`, where truncation at `cap` leaves them exact.
pub fn symplecticity_defect(map: &CoordinateMap, cap: usize, b: &DomainBox) -> Result<f64> {
    let d = map.dim();
    let exact = cap.saturating_sub(1);
    let (u, v) = (&map.u, &map.v);
    let mut worst: f64 = 0.0;
    let mut record = |s: TFSeries| {
        worst = worst.max(s.project_degrees(0, exact).majorant_norm(b));
    };
    for i in 0..d {
        for j in 0..d {
            // {U_i, θ_j + v_j} = ∂U_i/∂I_j + {U_i, v_j}
            let mut uv = u[i].d_action(j).add(&u[i].poisson_bracket(&v[j], cap)?)?;
            if i == j {
                uv = uv.sub(&TFSeries::constant(d, cap, Complex64::new(1.0, 0.0)))?;
            }
            record(uv);
            if i < j {
                record(u[i].poisson_bracket(&u[j], cap)?);
                // {θ_i + v_i, θ_j + v_j} = −∂v_j/∂I_i + ∂v_i/∂I_j + {v_i, v_j}
                let vv = v[i]
                    .d_action(j)
                    .sub(&v[j].d_action(i))?
                    .add(&v[i].poisson_bracket(&v[j], cap)?)?;
                record(vv);
            }
        }
    }
    Ok(worst)
}
