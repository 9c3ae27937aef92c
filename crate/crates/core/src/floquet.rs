//! Floquet–Bloch analysis of τ-periodic Hankel operators.
//!
//! The operator decomposes over the quasi-momentum k ∈ (−π/τ, π/τ] into
//! fibers on ℓ²(ℤ),
//!
//! [h(k)]_{nm} = conj(γ_n(k)) Σ̃_{n−m} γ_m(k),  γ_n(k) = Γ(½ + i(2πn/τ + k)),
//!
//! where Σ̃ are the Fourier coefficients of the measure Σ over one period.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt17;
use crate::linalg;
use crate::specfun::{beta_half_line, jacobi_dn, lattice_sech_sum, log_gamma, modulus_from_period, EllipticParams};
use crate::spectra::IdsCurve;

pub const DEFAULT_FIBER_SIZE: usize = 12;
pub const DEFAULT_FLAT_TOL: f64 = 1e-9;
pub const DEFAULT_DISCARD_FLOOR: f64 = 1e-10;
pub const FIBER_CONVERGENCE_TOL: f64 = 1e-10;
const EDGE_EPS: f64 = 1e-6;
const MAX_FIBER_SIZE: usize = 768;
const ALIASING_RATIO: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoeffKind {
    /// P̃_m of the symbol.
    Symbol,
    /// Σ̃_n of the measure.
    Measure,
}

/// Fourier coefficients c_m, m = −N_c..=N_c, of a real τ-periodic object.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierData {
    pub tau: f64,
    coeffs: Vec<Complex64>,
    pub kind: CoeffKind,
    /// Set when the outermost coefficient is not negligible.
    pub aliasing_warning: bool,
}

impl FourierData {
    /// Enforces c_{−m} = conj(c_m) by symmetric averaging.
    pub fn new(tau: f64, coeffs: Vec<Complex64>, kind: CoeffKind) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::Domain(format!("period must be positive, got {tau}")));
        }
        if coeffs.len() % 2 == 0 {
            return Err(Error::Domain("coefficient vector must have odd length 2N+1".into()));
        }
        let n = coeffs.len();
        let mut c = coeffs.clone();
        for j in 0..n {
            c[j] = 0.5 * (coeffs[j] + coeffs[n - 1 - j].conj());
        }
        let top = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let edge = c[0].norm().max(c[n - 1].norm());
        Ok(Self {
            tau,
            aliasing_warning: n > 1 && edge > ALIASING_RATIO * top,
            coeffs: c,
            kind,
        })
    }

    /// Σ̃_n of a period cell of atoms (offset, weight).
    pub fn from_cell(tau: f64, cell: &[(f64, f64)], n_c: usize) -> Result<Self> {
        let coeffs = (-(n_c as i64)..=n_c as i64)
            .map(|n| {
                cell.iter()
                    .map(|&(x, w)| Complex64::from_polar(w / tau, -2.0 * PI * n as f64 * x / tau))
                    .sum()
            })
            .collect();
        Self::new(tau, coeffs, CoeffKind::Measure)
    }

    /// Unit atoms at τn: Σ̃_n = 1/τ.
    pub fn single_band(tau: f64, n_c: usize) -> Result<Self> {
        Self::from_cell(tau, &[(0.0, 1.0)], n_c)
    }

    /// Atoms +1 at τn and −1 at τn + τ/2: Σ̃_n = (1 − (−1)ⁿ)/τ.
    pub fn flat_pair(tau: f64, n_c: usize) -> Result<Self> {
        let coeffs = (-(n_c as i64)..=n_c as i64)
            .map(|n| Complex64::new(if n % 2 == 0 { 0.0 } else { 2.0 / tau }, 0.0))
            .collect();
        Self::new(tau, coeffs, CoeffKind::Measure)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() / 2
    }

    /// c_m, zero beyond the stored range.
    pub fn coeff(&self, m: i64) -> Complex64 {
        let nc = self.order() as i64;
        if m.abs() > nc {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(m + nc) as usize]
        }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Σ |c_m| (1 + |m|)^{1/2} over the stored range.
    pub fn smoothness_sum(&self) -> f64 {
        let nc = self.order() as i64;
        (-nc..=nc)
            .map(|m| self.coeff(m).norm() * (1.0 + m.abs() as f64).sqrt())
            .sum()
    }
}

/// P̃_m = (1/τ) ∫_0^τ e^{−2πimξ/τ} P(ξ) dξ from uniform samples P(jτ/n),
/// by the periodic trapezoidal rule.
pub fn fourier_coeffs(samples: &[f64], tau: f64, n_c: usize) -> Result<FourierData> {
    let n = samples.len();
    if n < 4 * n_c.max(1) {
        return Err(Error::Domain(format!(
            "need at least {} samples for {n_c} coefficients, got {n}",
            4 * n_c.max(1)
        )));
    }
    let coeffs = (-(n_c as i64)..=n_c as i64)
        .map(|m| {
            samples
                .iter()
                .enumerate()
                .map(|(j, &p)| {
                    let phase = -2.0 * PI * ((m * j as i64).rem_euclid(n as i64)) as f64 / n as f64;
                    Complex64::from_polar(p, phase)
                })
                .sum::<Complex64>()
                / n as f64
        })
        .collect();
    FourierData::new(tau, coeffs, CoeffKind::Symbol)
}

fn gamma_shift(tau: f64, n: i64) -> Result<Complex64> {
    Ok(log_gamma(Complex64::new(1.0, -2.0 * PI * n as f64 / tau))?.exp())
}

/// Σ̃_n = P̃_n / Γ(1 − 2πin/τ).
pub fn sigma_tilde(p: &FourierData) -> Result<FourierData> {
    if p.kind != CoeffKind::Symbol {
        return Err(Error::Domain("sigma_tilde expects symbol coefficients".into()));
    }
    let nc = p.order() as i64;
    let coeffs = (-nc..=nc)
        .map(|n| Ok(p.coeff(n) / gamma_shift(p.tau, n)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(FourierData {
        tau: p.tau,
        coeffs,
        kind: CoeffKind::Measure,
        aliasing_warning: p.aliasing_warning,
    })
}

/// P̃_n = Σ̃_n Γ(1 − 2πin/τ).
pub fn symbol_tilde(s: &FourierData) -> Result<FourierData> {
    if s.kind != CoeffKind::Measure {
        return Err(Error::Domain("symbol_tilde expects measure coefficients".into()));
    }
    let nc = s.order() as i64;
    let coeffs = (-nc..=nc)
        .map(|n| Ok(s.coeff(n) * gamma_shift(s.tau, n)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(FourierData {
        tau: s.tau,
        coeffs,
        kind: CoeffKind::Symbol,
        aliasing_warning: s.aliasing_warning,
    })
}

fn as_measure(data: &FourierData) -> Result<FourierData> {
    match data.kind {
        CoeffKind::Measure => Ok(data.clone()),
        CoeffKind::Symbol => sigma_tilde(data),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiberRoute {
    /// conj(γ_n) Σ̃_{n−m} γ_m
    GammaProduct,
    /// B(½ − ia_n, ½ + ia_m) P̃_{n−m}
    Beta,
}

/// Hermitian fiber matrix, row-major, indices n = −N..=N.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberMatrix {
    pub size: usize,
    pub entries: Vec<Complex64>,
    /// Some Σ̃_{n−m} fell outside the stored coefficients and were taken as 0.
    pub truncated: bool,
}

impl FiberMatrix {
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.size + j]
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::herm_eigenvalues(&self.entries, self.size)
    }
}

pub fn fiber_matrix(data: &FourierData, k: f64, n_fib: usize, route: FiberRoute) -> Result<FiberMatrix> {
    let tau = data.tau;
    if k.abs() > PI / tau * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("quasi-momentum {k} outside [-pi/tau, pi/tau]")));
    }
    let size = 2 * n_fib + 1;
    let idx = |i: usize| i as i64 - n_fib as i64;
    let arg = |i: usize| 2.0 * PI * idx(i) as f64 / tau + k;
    let mut entries = vec![Complex64::new(0.0, 0.0); size * size];
    let truncated = 2 * n_fib > data.order();
    match route {
        FiberRoute::GammaProduct => {
            let s = as_measure(data)?;
            let gamma = (0..size)
                .map(|i| Ok(log_gamma(Complex64::new(0.5, arg(i)))?.exp()))
                .collect::<Result<Vec<_>>>()?;
            for i in 0..size {
                for j in i..size {
                    let v = gamma[i].conj() * s.coeff(idx(i) - idx(j)) * gamma[j];
                    entries[i * size + j] = v;
                }
            }
        }
        FiberRoute::Beta => {
            let p = match data.kind {
                CoeffKind::Symbol => data.clone(),
                CoeffKind::Measure => symbol_tilde(data)?,
            };
            for i in 0..size {
                for j in i..size {
                    let v = beta_half_line(arg(i), arg(j)) * p.coeff(idx(i) - idx(j));
                    entries[i * size + j] = v;
                }
            }
        }
    }
    for i in 0..size {
        entries[i * size + i].im = 0.0;
        for j in 0..i {
            entries[i * size + j] = entries[j * size + i].conj();
        }
    }
    Ok(FiberMatrix {
        size,
        entries,
        truncated,
    })
}

/// Smallest fiber size N (doubling from `start`) whose eigenvalues agree
/// with those at 2N to within 1e−10.
pub fn converged_fiber_size(data: &FourierData, k: f64, start: usize) -> Result<usize> {
    let mut n = start.max(1);
    let top = |n: usize| -> Result<Vec<f64>> {
        let mut e = fiber_matrix(data, k, n, FiberRoute::GammaProduct)?.eigenvalues()?;
        e.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
        Ok(e)
    };
    let mut current = top(n)?;
    while 2 * n <= MAX_FIBER_SIZE {
        let next = top(2 * n)?;
        let shift = current
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if shift < FIBER_CONVERGENCE_TOL {
            return Ok(n);
        }
        n *= 2;
        current = next;
    }
    Err(Error::Convergence {
        what: "fiber truncation doubling",
        iterations: n,
    })
}

/// E₀(k) = (1/τ) Σ_n π sech(π(2πn/τ + k)), the nonzero fiber eigenvalue of
/// the unit lattice.
pub fn single_band_e0(tau: f64, k: f64) -> f64 {
    PI / tau * lattice_sech_sum(tau, k, false)
}

/// (E_min, E_max) = (E₀(π/τ), E₀(0)).
pub fn single_band_edges(tau: f64) -> (f64, f64) {
    (single_band_e0(tau, PI / tau), single_band_e0(tau, 0.0))
}

/// E₀(k) through the Jacobi function: (K/π) dn(Kτk/π) with K'/K = τ/(2π).
pub fn single_band_e0_elliptic(params: &EllipticParams, tau: f64, k: f64) -> f64 {
    let kk = params.quarter_period;
    kk / PI * jacobi_dn(kk * tau * k / PI, params)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatPairReport {
    pub tau: f64,
    /// K k'/π², the constant √(F² − G²)/τ of the elliptic identity.
    pub estar: f64,
    /// K k'/π, the actual eigenvalue magnitude of the flat fibers.
    pub band_energy: f64,
    /// max_k |(F² − G²)/(Kτk'/π²)² − 1| on the 64-point k-grid.
    pub constancy_deviation: f64,
    /// max_k max |eig − (±band_energy)| over the nonzero fiber eigenvalues.
    pub fiber_deviation: f64,
    pub params: EllipticParamsReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticParamsReport {
    pub modulus: f64,
    pub complementary_modulus: f64,
    pub quarter_period: f64,
    pub complementary_quarter_period: f64,
    pub nome: f64,
}

impl From<&EllipticParams> for EllipticParamsReport {
    fn from(p: &EllipticParams) -> Self {
        Self {
            modulus: p.k,
            complementary_modulus: p.k_prime,
            quarter_period: p.quarter_period,
            complementary_quarter_period: p.complementary_quarter_period,
            nome: p.nome,
        }
    }
}

/// F(k)² − G(k)² with F, G the plain and alternating lattice sech sums.
pub fn flat_pair_invariant(tau: f64, k: f64) -> f64 {
    let f = lattice_sech_sum(tau, k, false);
    let g = lattice_sech_sum(tau, k, true);
    f * f - g * g
}

pub fn flat_pair_estar(tau: f64) -> Result<FlatPairReport> {
    let p = modulus_from_period(tau)?;
    let c = p.quarter_period * tau * p.k_prime / (PI * PI);
    let grid = midpoint_k_grid(tau, 64);
    let constancy_deviation = grid
        .iter()
        .map(|&k| (flat_pair_invariant(tau, k) / (c * c) - 1.0).abs())
        .fold(0.0, f64::max);
    let band_energy = p.quarter_period * p.k_prime / PI;
    let data = FourierData::flat_pair(tau, 4 * DEFAULT_FIBER_SIZE)?;
    let mut fiber_deviation = 0.0_f64;
    for &k in &grid {
        let e = fiber_matrix(&data, k, DEFAULT_FIBER_SIZE, FiberRoute::GammaProduct)?.eigenvalues()?;
        let n = e.len();
        fiber_deviation = fiber_deviation
            .max((e[0] + band_energy).abs())
            .max((e[n - 1] - band_energy).abs());
    }
    Ok(FlatPairReport {
        tau,
        estar: p.quarter_period * p.k_prime / (PI * PI),
        band_energy,
        constancy_deviation,
        fiber_deviation,
        params: (&p).into(),
    })
}

/// k_j = (j + ½) π/(τ n), j = 0..n.
pub fn midpoint_k_grid(tau: f64, n: usize) -> Vec<f64> {
    let h = PI / tau / n as f64;
    (0..n).map(|j| (j as f64 + 0.5) * h).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub values: Vec<f64>,
    pub flat: bool,
    /// Band range including the values extrapolated to k = 0 and k = π/τ.
    pub min: f64,
    pub max: f64,
    /// Branch values at k = ε and k = π/τ − ε.
    pub end_values: (f64, f64),
    pub sign: i8,
    /// Strictly monotone on the grid, or extrema only at the grid ends.
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandStructure {
    pub tau: f64,
    pub k_grid: Vec<f64>,
    pub bands: Vec<Band>,
    pub fiber_size: usize,
    /// (flat band, non-flat band) pairs whose ranges touch.
    pub tangencies: Vec<(usize, usize)>,
}

impl BandStructure {
    /// CSV with header "k,band_index,E,flat".
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,band_index,E,flat\n");
        for (b, band) in self.bands.iter().enumerate() {
            for (k, e) in self.k_grid.iter().zip(&band.values) {
                out.push_str(&format!("{},{b},{},{}\n", fmt17(*k), fmt17(*e), band.flat));
            }
        }
        out
    }

    /// {"tau": τ, "bands": [{"min", "max", "flat", "sign"}, ...]}.
    pub fn edges_json(&self) -> String {
        let bands: Vec<String> = self
            .bands
            .iter()
            .map(|b| {
                format!(
                    "{{\"min\": {}, \"max\": {}, \"flat\": {}, \"sign\": {}}}",
                    fmt17(b.min),
                    fmt17(b.max),
                    b.flat,
                    b.sign
                )
            })
            .collect();
        format!("{{\"tau\": {}, \"bands\": [{}]}}\n", fmt17(self.tau), bands.join(", "))
    }
}

fn split_branches(e: &[f64], floor: f64) -> (Vec<f64>, Vec<f64>) {
    let mut pos: Vec<f64> = e.iter().copied().filter(|&v| v > floor).collect();
    let mut neg: Vec<f64> = e.iter().copied().filter(|&v| v < -floor).collect();
    pos.sort_by(|a, b| b.total_cmp(a));
    neg.sort_by(|a, b| a.total_cmp(b));
    (pos, neg)
}

fn is_monotone(v: &[f64]) -> bool {
    let inc = v.windows(2).all(|w| w[1] > w[0]);
    let dec = v.windows(2).all(|w| w[1] < w[0]);
    if inc || dec || v.len() < 3 {
        return true;
    }
    let (imax, imin) = v.iter().enumerate().fold((0, 0), |(a, b), (i, &x)| {
        (if x > v[a] { i } else { a }, if x < v[b] { i } else { b })
    });
    let ends = |i: usize| i == 0 || i == v.len() - 1;
    ends(imax) && ends(imin)
}

/// Band functions on a midpoint k-grid of (0, π/τ).
///
/// Branches are matched by sorted order within each sign. Eigenvalues below
/// `discard_floor`·max|E| are treated as truncation noise; a branch is flat
/// when its spread is at most flat_tol·max(1, |mean|).
pub fn band_structure(
    data: &FourierData,
    k_count: usize,
    n_fib: usize,
    flat_tol: f64,
    discard_floor: f64,
) -> Result<BandStructure> {
    if k_count < 16 {
        return Err(Error::Domain(format!("k_count must be at least 16, got {k_count}")));
    }
    let tau = data.tau;
    let grid = midpoint_k_grid(tau, k_count);
    let mut ks = vec![EDGE_EPS];
    ks.extend_from_slice(&grid);
    ks.push(PI / tau - EDGE_EPS);
    let spectra = ks
        .par_iter()
        .map(|&k| fiber_matrix(data, k, n_fib, FiberRoute::GammaProduct)?.eigenvalues())
        .collect::<Result<Vec<_>>>()?;
    let top = spectra.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    let floor = discard_floor * top;
    let split: Vec<(Vec<f64>, Vec<f64>)> = spectra.iter().map(|e| split_branches(e, floor)).collect();
    let (np, nn) = (split[0].0.len(), split[0].1.len());
    for (j, (p, n)) in split.iter().enumerate() {
        if p.len() != np || n.len() != nn {
            return Err(Error::Resolution(format!(
                "branch count changes from ({np}, {nn}) to ({}, {}) at k = {}; increase the fiber size or k_count",
                p.len(),
                n.len(),
                ks[j]
            )));
        }
    }
    let mut bands = Vec::new();
    for (sign, count) in [(1i8, np), (-1i8, nn)] {
        for b in 0..count {
            let pick = |j: usize| if sign > 0 { split[j].0[b] } else { split[j].1[b] };
            let values: Vec<f64> = (1..=k_count).map(pick).collect();
            let end_values = (pick(0), pick(k_count + 1));
            let all = values.iter().copied().chain([end_values.0, end_values.1]);
            let (min, max) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let flat = max - min <= flat_tol * mean.abs().max(1.0);
            bands.push(Band {
                monotone: flat || is_monotone(&values),
                values,
                flat,
                min,
                max,
                end_values,
                sign,
            });
        }
    }
    let mut tangencies = Vec::new();
    for (i, f) in bands.iter().enumerate().filter(|(_, b)| b.flat) {
        for (j, b) in bands.iter().enumerate().filter(|(_, b)| !b.flat) {
            if f.max >= b.min && f.min <= b.max {
                tangencies.push((i, j));
            }
        }
    }
    Ok(BandStructure {
        tau,
        k_grid: grid,
        bands,
        fiber_size: n_fib,
        tangencies,
    })
}

/// Lebesgue measure of {k ∈ [0, L] : E(k) > λ} for the piecewise-linear
/// interpolant through (k_i, E_i).
fn superlevel_length(k: &[f64], e: &[f64], lambda: f64) -> f64 {
    let mut len = 0.0;
    for i in 0..k.len() - 1 {
        let (k0, k1, e0, e1) = (k[i], k[i + 1], e[i], e[i + 1]);
        let h = k1 - k0;
        len += match (e0 > lambda, e1 > lambda) {
            (true, true) => h,
            (false, false) => 0.0,
            (true, false) => h * (e0 - lambda) / (e0 - e1),
            (false, true) => h * (e1 - lambda) / (e1 - e0),
        };
    }
    len
}

/// ν((λ, ∞)) = (1/π) Σ_{non-flat} |{k ∈ (0, π/τ) : E_n(k) > λ}| + (1/τ) #{flat bands above λ}.
pub fn ids_from_bands(b: &BandStructure, lambdas: &[f64]) -> Result<IdsCurve> {
    crate::spectra::validate_lambda_grid(lambdas)?;
    let tau = b.tau;
    let mut k = vec![0.0];
    k.extend_from_slice(&b.k_grid);
    k.push(PI / tau);
    let values = lambdas
        .iter()
        .map(|&l| {
            b.bands
                .iter()
                .map(|band| {
                    if band.flat {
                        if band.values[0] > l {
                            1.0 / tau
                        } else {
                            0.0
                        }
                    } else {
                        let mut e = vec![band.end_values.0];
                        e.extend_from_slice(&band.values);
                        e.push(band.end_values.1);
                        superlevel_length(&k, &e, l) / PI
                    }
                })
                .sum()
        })
        .collect();
    Ok(IdsCurve {
        lambdas: lambdas.to_vec(),
        values,
        normalization: tau,
        scheme: "bands".into(),
        model: format!("periodic(tau={tau})"),
    })
}

/// Number N of bands entirely above λ, so that ν((λ, ∞)) = N/τ.
pub fn gap_labels(b: &BandStructure, lambda: f64) -> Result<usize> {
    for (i, band) in b.bands.iter().enumerate() {
        if lambda >= band.min && lambda <= band.max {
            return Err(Error::InsideBand {
                lambda,
                band: i,
                lo: band.min,
                hi: band.max,
            });
        }
    }
    Ok(b.bands.iter().filter(|band| band.min > lambda).count())
}
