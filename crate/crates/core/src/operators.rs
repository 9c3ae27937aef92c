//! Hankel kernels on L²(ℝ) and their finite sections.
//!
//! A Hankel kernel h(t) = P(log t)/t on the half-line becomes, after the
//! unitary change of variables t = eˣ,
//!
//! 𝐇(x, y) = P(log(eˣ + eʸ)) / (2 cosh((y − x)/2)).
//!
//! In the positive case 𝐇(x, y) = ∫ β(x − ξ) β(y − ξ) dΣ(ξ) with
//! β(ξ) = exp(−e^ξ) e^{ξ/2}.

use std::f64::consts::{E, PI};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::measures::{local_bound_constant, AtomicMeasure, Axis, DensityMeasure, Measure};

pub const DEFAULT_NODE_CAP: usize = 8192;
pub const DEFAULT_ATOM_CAP: usize = 8192;
/// Kernel entries with |x − y| beyond this are dropped (sech < 1e−17).
pub const TAIL_CUTOFF: f64 = 80.0;
/// β(u) is below 1e−17 for u < −BETA_LEFT_REACH or u > BETA_RIGHT_REACH.
pub const BETA_LEFT_REACH: f64 = 80.0;
pub const BETA_RIGHT_REACH: f64 = 5.0;
const GRAM_FLOOR: f64 = 1e-13;
const DENSITY_QUADRATURE_STEP: f64 = 0.01;

/// One period of a real symbol P.
#[derive(Debug, Clone, PartialEq)]
pub enum PeriodicSymbol {
    /// Samples at ξ = jτ/n, j = 0..n, linearly interpolated.
    Samples(Vec<f64>),
    /// Coefficients P̃_m for m = −N..=N, so that P(ξ) = Σ P̃_m e^{2πimξ/τ}.
    Fourier(Vec<Complex64>),
}

impl PeriodicSymbol {
    pub fn eval(&self, tau: f64, xi: f64) -> f64 {
        match self {
            PeriodicSymbol::Samples(v) => {
                let n = v.len();
                let u = (xi / tau).rem_euclid(1.0) * n as f64;
                let i = (u.floor() as usize).min(n - 1);
                let frac = u - i as f64;
                v[i] * (1.0 - frac) + v[(i + 1) % n] * frac
            }
            PeriodicSymbol::Fourier(c) => {
                let nc = (c.len() / 2) as i64;
                let w = 2.0 * PI * xi / tau;
                c.iter()
                    .enumerate()
                    .map(|(j, cm)| {
                        let m = j as i64 - nc;
                        (cm * Complex64::from_polar(1.0, m as f64 * w)).re
                    })
                    .sum()
            }
        }
    }

    fn probe_sup(&self, tau: f64) -> f64 {
        let n = match self {
            PeriodicSymbol::Samples(v) => return v.iter().fold(0.0, |a, x| a.max(x.abs())),
            PeriodicSymbol::Fourier(c) => 32 * c.len().max(1),
        };
        (0..n)
            .map(|j| self.eval(tau, tau * j as f64 / n as f64).abs())
            .fold(0.0, f64::max)
    }
}

/// Description of a Hankel operator.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    /// h(t) = 1/t.
    Carleman,
    /// h(t) = P(log t)/t with τ-periodic P, |P| ≤ bound.
    Periodic {
        symbol: PeriodicSymbol,
        tau: f64,
        bound: f64,
    },
    /// Positive operator with measure Σ on the line.
    PositiveFromMeasure { sigma: Measure },
    /// Σ κ(n) ⟨·, ψ_n⟩ ψ_n with ψ_n = β(· − τn), n = −N..=N.
    RkphSample { weights: Vec<f64>, tau: f64 },
}

impl KernelSpec {
    pub fn periodic(symbol: PeriodicSymbol, tau: f64, bound: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::Domain(format!("period must be positive, got {tau}")));
        }
        let sup = symbol.probe_sup(tau);
        if sup > bound * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "symbol sup {sup} exceeds the declared bound {bound}"
            )));
        }
        Ok(KernelSpec::Periodic { symbol, tau, bound })
    }

    /// P ≡ 0.
    pub fn zero() -> Self {
        KernelSpec::Periodic {
            symbol: PeriodicSymbol::Fourier(vec![Complex64::new(0.0, 0.0)]),
            tau: 1.0,
            bound: 0.0,
        }
    }

    pub fn positive(sigma: impl Into<Measure>) -> Result<Self> {
        let sigma = sigma.into();
        if sigma.axis() != Axis::Line {
            return Err(Error::InvalidMeasure(
                "positive kernels are parametrized by a Sigma measure on the line".into(),
            ));
        }
        Ok(KernelSpec::PositiveFromMeasure { sigma })
    }

    pub fn rkph(weights: Vec<f64>, tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::Domain(format!("period must be positive, got {tau}")));
        }
        if let Some(k) = weights.iter().find(|k| !(**k > 0.0) || !k.is_finite()) {
            return Err(Error::Domain(format!("rKPH weights must be positive, got {k}")));
        }
        Ok(KernelSpec::RkphSample { weights, tau })
    }

    /// A bound C_h ≥ sup_t |t h(t)|, so that the operator norm is at most πC_h.
    ///
    /// For measures this is C'(1 + 2/e), C' the unit-window bound of Σ.
    pub fn symbol_bound(&self) -> Result<f64> {
        Ok(match self {
            KernelSpec::Carleman => 1.0,
            KernelSpec::Periodic { bound, .. } => *bound,
            KernelSpec::PositiveFromMeasure { sigma } => {
                let unsigned = match sigma {
                    Measure::Atomic(m) if m.is_signed() => Measure::Atomic(
                        AtomicMeasure::new(
                            Axis::Line,
                            m.atoms().iter().map(|a| (a.position, a.weight.abs())),
                        )?,
                    ),
                    other => other.clone(),
                };
                local_bound_constant(&unsigned)? * (1.0 + 2.0 / E)
            }
            KernelSpec::RkphSample { weights, tau } => {
                let kmax = weights.iter().copied().fold(0.0, f64::max);
                let per_window = (1.0 / tau).ceil();
                kmax * per_window * (1.0 + 2.0 / E)
            }
        })
    }
}

pub fn beta_profile(xi: f64) -> f64 {
    (-xi.exp() + 0.5 * xi).exp()
}

/// ½ sech((a − b)/2) = ∫ β(x − a) β(x − b) dx.
pub fn gram_overlap(a: f64, b: f64) -> f64 {
    0.5 / (0.5 * (a - b)).cosh()
}

/// log(eˣ + eʸ) without overflow.
fn log_sum_exp(x: f64, y: f64) -> f64 {
    x.max(y) + (-(x - y).abs()).exp().ln_1p()
}

fn atomic_kernel(m: &AtomicMeasure, x: f64, y: f64) -> f64 {
    let lo = x.max(y) - BETA_RIGHT_REACH;
    let hi = x.min(y) + BETA_LEFT_REACH;
    if hi < lo {
        return 0.0;
    }
    m.in_window(lo, hi)
        .iter()
        .map(|a| a.weight * (beta_profile(x - a.position) * beta_profile(y - a.position)))
        .sum()
}

fn density_kernel(d: &DensityMeasure, x: f64, y: f64) -> f64 {
    let g = d.grid();
    let lo = (x.max(y) - BETA_RIGHT_REACH).max(g.start);
    let hi = (x.min(y) + BETA_LEFT_REACH).min(g.end());
    if hi <= lo {
        return 0.0;
    }
    // composite Simpson with an even number of panels
    let panels = (((hi - lo) / DENSITY_QUADRATURE_STEP).ceil() as usize).max(2);
    let panels = panels + panels % 2;
    let h = (hi - lo) / panels as f64;
    let f = |xi: f64| d.density_at(xi) * (beta_profile(x - xi) * beta_profile(y - xi));
    let mut s = f(lo) + f(hi);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(lo + h * i as f64);
    }
    s * h / 3.0
}

/// Pointwise kernel 𝐇(x, y).
pub fn hankel_kernel_xy(spec: &KernelSpec, x: f64, y: f64) -> Result<f64> {
    Ok(match spec {
        KernelSpec::Carleman => 0.5 / (0.5 * (x - y)).cosh(),
        KernelSpec::Periodic { symbol, tau, .. } => {
            symbol.eval(*tau, log_sum_exp(x, y)) / (2.0 * (0.5 * (y - x)).cosh())
        }
        KernelSpec::PositiveFromMeasure { sigma } => match sigma {
            Measure::Atomic(m) => atomic_kernel(m, x, y),
            Measure::Density(d) => density_kernel(d, x, y),
        },
        KernelSpec::RkphSample { .. } => {
            return Err(Error::Unsupported(
                "rKPH samples have no pointwise kernel here; use the window matrix".into(),
            ))
        }
    })
}

/// h(t) = ∫ exp(−t e^{−ξ}) e^{−ξ} dΣ(ξ) for atomic Σ.
pub fn laplace_kernel_check(sigma: &AtomicMeasure, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    if sigma.axis() != Axis::Line {
        return Err(Error::InvalidMeasure("expected a Sigma measure".into()));
    }
    Ok(sigma
        .atoms()
        .iter()
        .map(|a| a.weight * (-t * (-a.position).exp() - a.position).exp())
        .sum())
}

/// Uniform midpoint grid on [c − M, c + M).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridWindow {
    pub center: f64,
    pub half_width: f64,
    pub spacing: f64,
    pub nodes: usize,
}

impl GridWindow {
    /// When Δ does not divide 2M the grid covers ⌈2M/Δ⌉ cells, padded
    /// symmetrically around the center.
    pub fn new(half_width: f64, spacing: f64) -> Result<Self> {
        if !(half_width > 0.0) || !(spacing > 0.0) {
            return Err(Error::Domain(format!(
                "window needs M > 0 and spacing > 0, got M = {half_width}, spacing = {spacing}"
            )));
        }
        let nodes = (2.0 * half_width / spacing - 1e-9).ceil() as usize;
        if nodes < 2 {
            return Err(Error::Domain(format!(
                "window of half-width {half_width} with spacing {spacing} has fewer than 2 nodes"
            )));
        }
        Ok(Self {
            center: 0.0,
            half_width,
            spacing,
            nodes,
        })
    }

    pub fn shifted(self, s: f64) -> Self {
        Self {
            center: self.center + s,
            ..self
        }
    }

    pub fn node(&self, i: usize) -> f64 {
        self.center - 0.5 * self.nodes as f64 * self.spacing + (i as f64 + 0.5) * self.spacing
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.nodes).map(|i| self.node(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Scheme {
    /// Restriction of the kernel to the window.
    #[serde(rename = "a")]
    A,
    /// Restriction of the measure to the window.
    #[serde(rename = "b")]
    B,
}

impl Scheme {
    pub fn tag(self) -> &'static str {
        match self {
            Scheme::A => "a",
            Scheme::B => "b",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" => Ok(Scheme::A),
            "b" => Ok(Scheme::B),
            _ => Err(Error::Parse(format!("unknown scheme `{s}`, expected a or b"))),
        }
    }
}

/// Dense real symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricSection {
    dim: usize,
    data: Vec<f64>,
    pub scheme: Scheme,
    /// Half-width of the window the section represents.
    pub half_width: f64,
    /// Grid node or atom position of each row.
    pub labels: Vec<f64>,
}

impl SymmetricSection {
    pub fn from_row_major(data: Vec<f64>, dim: usize, scheme: Scheme, half_width: f64, labels: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::Domain(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        for i in 0..dim {
            for j in 0..i {
                if data[i * dim + j] != data[j * dim + i] {
                    return Err(Error::Domain(format!("matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self {
            dim,
            data,
            scheme,
            half_width,
            labels,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Tr A² = Σ a_ij².
    pub fn trace_of_square(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.trace_of_square().sqrt()
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::sym_eigenvalues(&self.data, self.dim)
    }
}

fn fill_symmetric(n: usize, entry: impl Fn(usize, usize) -> f64 + Sync) -> Vec<f64> {
    let mut data = vec![0.0; n * n];
    data.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
        for (j, v) in row.iter_mut().enumerate().take(i + 1) {
            *v = entry(i, j);
        }
    });
    for i in 0..n {
        for j in 0..i {
            data[j * n + i] = data[i * n + j];
        }
    }
    data
}

/// Nyström section A_ij = Δ 𝐇(x_i, x_j) on the midpoint grid.
pub fn nystrom_section(spec: &KernelSpec, window: &GridWindow, node_cap: usize) -> Result<SymmetricSection> {
    if window.nodes > node_cap {
        return Err(Error::Resource {
            what: "Nystrom nodes",
            requested: window.nodes,
            cap: node_cap,
        });
    }
    if matches!(spec, KernelSpec::RkphSample { .. }) {
        return Err(Error::Unsupported("rKPH samples use the window matrix".into()));
    }
    let x = window.nodes();
    let dx = window.spacing;
    let data = fill_symmetric(window.nodes, |i, j| {
        if (x[i] - x[j]).abs() > TAIL_CUTOFF {
            0.0
        } else {
            dx * hankel_kernel_xy(spec, x[i], x[j]).expect("pointwise kernel")
        }
    });
    SymmetricSection::from_row_major(data, window.nodes, Scheme::A, window.half_width, x)
}

/// Symmetric matrix with the same nonzero spectrum as W Γ: W^{1/2} Γ W^{1/2}
/// for nonnegative weights, Γ^{1/2} W Γ^{1/2} otherwise.
fn weighted_gram(gram: Vec<f64>, weights: &[f64]) -> Result<Vec<f64>> {
    let n = weights.len();
    if weights.iter().all(|&w| w >= 0.0) {
        let mut out = gram;
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] *= (weights[i] * weights[j]).sqrt();
            }
        }
        return Ok(out);
    }
    let (vals, vecs) = linalg::sym_eigen(&gram, n)?;
    let top = vals.iter().copied().fold(0.0, f64::max);
    let floor = GRAM_FLOOR * top;
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -floor {
        return Err(Error::Singular {
            condition: top / min.abs(),
        });
    }
    let roots: Vec<f64> = vals.iter().map(|&v| if v <= floor { 0.0 } else { v.sqrt() }).collect();
    // R = U diag(√λ) Uᵀ
    let mut r = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = (0..n).map(|k| vecs[i * n + k] * roots[k] * vecs[j * n + k]).sum();
            r[i * n + j] = v;
            r[j * n + i] = v;
        }
    }
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = (0..n).map(|k| r[i * n + k] * weights[k] * r[k * n + j]).sum();
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
    }
    Ok(out)
}

/// Scheme-(b) section of an atomic Σ restricted to [lo, hi): the Gram
/// matrix ½sech((ξ_i − ξ_j)/2) of the atoms weighted by their masses.
pub fn atom_section(sigma: &AtomicMeasure, lo: f64, hi: f64, atom_cap: usize) -> Result<SymmetricSection> {
    if sigma.axis() != Axis::Line {
        return Err(Error::InvalidMeasure("atom sections need a Sigma measure".into()));
    }
    let atoms = sigma.in_window(lo, hi);
    let n = atoms.len();
    if n > atom_cap {
        return Err(Error::Resource {
            what: "section atoms",
            requested: n,
            cap: atom_cap,
        });
    }
    let pos: Vec<f64> = atoms.iter().map(|a| a.position).collect();
    let w: Vec<f64> = atoms.iter().map(|a| a.weight).collect();
    let gram = fill_symmetric(n, |i, j| gram_overlap(pos[i], pos[j]));
    let data = weighted_gram(gram, &w)?;
    SymmetricSection::from_row_major(data, n, Scheme::B, 0.5 * (hi - lo), pos)
}

/// Scheme-(b) section of Σ on the window; densities are discretized on the
/// window grid as A_ij = Δ √(S_i S_j) ½sech((x_i − x_j)/2).
pub fn measure_section(sigma: &Measure, window: &GridWindow, cap: usize) -> Result<SymmetricSection> {
    let lo = window.center - window.half_width;
    let hi = window.center + window.half_width;
    match sigma {
        Measure::Atomic(m) => atom_section(m, lo, hi, cap),
        Measure::Density(d) => {
            if d.axis() != Axis::Line {
                return Err(Error::InvalidMeasure("measure sections need a Sigma measure".into()));
            }
            if window.nodes > cap {
                return Err(Error::Resource {
                    what: "Nystrom nodes",
                    requested: window.nodes,
                    cap,
                });
            }
            let x = window.nodes();
            let s: Vec<f64> = x.iter().map(|&xi| d.density_at(xi).sqrt()).collect();
            let dx = window.spacing;
            let data = fill_symmetric(window.nodes, |i, j| {
                if (x[i] - x[j]).abs() > TAIL_CUTOFF {
                    0.0
                } else {
                    dx * s[i] * s[j] * gram_overlap(x[i], x[j])
                }
            });
            SymmetricSection::from_row_major(data, window.nodes, Scheme::B, window.half_width, x)
        }
    }
}

/// Nyström factor B_{iℓ} = β(x_i − ξ_ℓ) for the atoms that reach the window.
pub(crate) struct NystromFactor {
    pub nodes: Vec<f64>,
    pub atoms: Vec<f64>,
    pub weights: Vec<f64>,
    /// row-major nodes × atoms
    pub b: Vec<f64>,
    pub spacing: f64,
}

pub(crate) fn nystrom_factor(sigma: &AtomicMeasure, window: &GridWindow, caps: (usize, usize)) -> Result<NystromFactor> {
    if sigma.axis() != Axis::Line {
        return Err(Error::InvalidMeasure("expected a Sigma measure".into()));
    }
    if window.nodes > caps.0 {
        return Err(Error::Resource {
            what: "Nystrom nodes",
            requested: window.nodes,
            cap: caps.0,
        });
    }
    let nodes = window.nodes();
    let lo = nodes[0] - BETA_RIGHT_REACH;
    let hi = nodes[nodes.len() - 1] + BETA_LEFT_REACH;
    let reach = sigma.in_window(lo, hi);
    if reach.len() > caps.1 {
        return Err(Error::Resource {
            what: "section atoms",
            requested: reach.len(),
            cap: caps.1,
        });
    }
    let atoms: Vec<f64> = reach.iter().map(|a| a.position).collect();
    let weights: Vec<f64> = reach.iter().map(|a| a.weight).collect();
    let m = atoms.len();
    let mut b = vec![0.0; nodes.len() * m];
    b.par_chunks_mut(m.max(1)).enumerate().for_each(|(i, row)| {
        for (l, v) in row.iter_mut().enumerate() {
            *v = beta_profile(nodes[i] - atoms[l]);
        }
    });
    Ok(NystromFactor {
        nodes,
        atoms,
        weights,
        b,
        spacing: window.spacing,
    })
}

/// Scheme-(a) section of an atomic Σ in compressed form. The Nyström matrix
/// Δ B W Bᵀ on the grid and the returned atoms × atoms matrix built from
/// Δ BᵀB share their nonzero spectrum.
pub fn compressed_nystrom_section(
    sigma: &AtomicMeasure,
    window: &GridWindow,
    node_cap: usize,
    atom_cap: usize,
) -> Result<SymmetricSection> {
    let f = nystrom_factor(sigma, window, (node_cap, atom_cap))?;
    let m = f.atoms.len();
    let mut g = linalg::gram_of_columns(&f.b, f.nodes.len(), m);
    g.iter_mut().for_each(|v| *v *= f.spacing);
    let data = weighted_gram(g, &f.weights)?;
    SymmetricSection::from_row_major(data, m, Scheme::A, window.half_width, f.atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn atoms(pairs: &[(f64, f64)]) -> AtomicMeasure {
        AtomicMeasure::new(Axis::Line, pairs.iter().copied()).unwrap()
    }

    fn signed(pairs: &[(f64, f64)]) -> AtomicMeasure {
        AtomicMeasure::new_signed(Axis::Line, pairs.iter().copied()).unwrap()
    }

    #[test]
    fn beta_values() {
        assert!((beta_profile(0.0) - (-1.0f64).exp()).abs() < 1e-16);
        let h = 1e-3;
        let norm: f64 = (0..45_000).map(|i| beta_profile(-40.0 + (i as f64 + 0.5) * h).powi(2)).sum::<f64>() * h;
        assert!((norm - 0.5).abs() < 1e-9, "{norm}");
        for i in 0..100 {
            let xi = -30.0 + 0.6 * i as f64;
            assert!(beta_profile(xi) <= (-0.5 * xi.abs()).exp());
        }
    }

    #[test]
    fn gram_overlap_values() {
        assert_eq!(gram_overlap(1.3, 1.3), 0.5);
        assert!((gram_overlap(0.0, 2.0) - 1.0 / (E + 1.0 / E)).abs() < 1e-16);
        assert!((gram_overlap(0.0, 2.0) - 0.324_027_136_831_942_7).abs() < 1e-15);
    }

    #[test]
    fn gram_overlap_against_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let a: f64 = rng.random_range(-5.0..5.0);
            let b: f64 = rng.random_range(-5.0..5.0);
            let lo = a.min(b) - 40.0;
            let hi = a.max(b) + 5.0;
            let h = 1e-3;
            let n = ((hi - lo) / h) as usize;
            let q: f64 = (0..n)
                .map(|i| {
                    let x = lo + (i as f64 + 0.5) * h;
                    beta_profile(x - a) * beta_profile(x - b)
                })
                .sum::<f64>()
                * h;
            assert!((q - gram_overlap(a, b)).abs() < 1e-8);
        }
    }

    #[test]
    fn carleman_kernel() {
        assert_eq!(hankel_kernel_xy(&KernelSpec::Carleman, 0.0, 0.0).unwrap(), 0.5);
        let p = KernelSpec::periodic(PeriodicSymbol::Samples(vec![1.0; 8]), 3.0, 1.0).unwrap();
        for (x, y) in [(0.0, 1.0), (-3.0, 7.5), (40.0, -2.0)] {
            let a = hankel_kernel_xy(&p, x, y).unwrap();
            let b = hankel_kernel_xy(&KernelSpec::Carleman, x, y).unwrap();
            assert!((a - b).abs() < 1e-16);
        }
    }

    #[test]
    fn kernel_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let coeffs = vec![
            Complex64::new(0.1, -0.2),
            Complex64::new(0.5, 0.0),
            Complex64::new(0.1, 0.2),
        ];
        let p = KernelSpec::periodic(PeriodicSymbol::Fourier(coeffs), 2.5, 1.0).unwrap();
        let s = KernelSpec::positive(AtomicMeasure::lattice(2.0, -50.0, 50.0)).unwrap();
        for _ in 0..1000 {
            let x: f64 = rng.random_range(-30.0..30.0);
            let y: f64 = rng.random_range(-30.0..30.0);
            for spec in [&KernelSpec::Carleman, &p, &s] {
                assert_eq!(hankel_kernel_xy(spec, x, y).unwrap(), hankel_kernel_xy(spec, y, x).unwrap());
            }
        }
    }

    #[test]
    fn positive_kernel_of_projection_atom() {
        let spec = KernelSpec::positive(atoms(&[(0.0, 2.0)])).unwrap();
        let v = hankel_kernel_xy(&spec, 0.0, 0.0).unwrap();
        assert!((v - 2.0 * (-2.0f64).exp()).abs() < 1e-16);
        // Laplace form: h(t) = 2 e^{−t}, 𝐇(x,y) = e^{(x+y)/2} h(eˣ + eʸ)
        for (x, y) in [(0.3, -0.4), (1.0, 1.0), (-2.0, 0.5)] {
            let lap = ((x + y) / 2.0f64).exp() * 2.0 * (-(x.exp() + y.exp())).exp();
            assert!((hankel_kernel_xy(&spec, x, y).unwrap() - lap).abs() < 1e-15);
        }
    }

    #[test]
    fn density_kernel_reproduces_carleman() {
        let grid = crate::measures::UniformGrid { start: -120.0, step: 0.5, n: 481 };
        let leb = DensityMeasure::from_fn(Axis::Line, grid, |_| 1.0).unwrap();
        let spec = KernelSpec::positive(leb).unwrap();
        for (x, y) in [(0.0, 0.0), (1.0, -2.0), (5.0, 9.0)] {
            let a = hankel_kernel_xy(&spec, x, y).unwrap();
            let b = 0.5 / (0.5 * (x - y)).cosh();
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn laplace_kernel_values() {
        let one = atoms(&[(0.0, 2.0)]);
        assert!((laplace_kernel_check(&one, 1.0).unwrap() - 2.0 / E).abs() < 1e-15);
        assert_eq!(laplace_kernel_check(&AtomicMeasure::empty(Axis::Line), 1.0).unwrap(), 0.0);
        assert!(laplace_kernel_check(&one, 0.0).is_err());
        let lat = AtomicMeasure::lattice(2.0 * PI, -30.5 * 2.0 * PI, 30.5 * 2.0 * PI);
        let spec = KernelSpec::positive(lat.clone()).unwrap();
        let bound = spec.symbol_bound().unwrap();
        for x in [-3.0, -0.5, 0.0, 1.2, 4.0] {
            let via_laplace = f64::exp(x) * laplace_kernel_check(&lat, 2.0 * f64::exp(x)).unwrap();
            let direct = hankel_kernel_xy(&spec, x, x).unwrap();
            assert!((via_laplace - direct).abs() < 1e-10);
        }
        for i in 0..200 {
            let t = 10f64.powf(-6.0 + 0.06 * i as f64);
            assert!(t * laplace_kernel_check(&lat, t).unwrap() <= bound);
        }
    }

    #[test]
    fn grid_window_layout() {
        let w = GridWindow::new(1.0, 0.5).unwrap();
        assert_eq!(w.nodes(), vec![-0.75, -0.25, 0.25, 0.75]);
        let p = GridWindow::new(1.0, 0.3).unwrap();
        assert_eq!(p.nodes, 7);
        assert!((p.node(0) + p.node(6)).abs() < 1e-15);
        assert!(GridWindow::new(0.1, 0.5).is_err());
    }

    #[test]
    fn nystrom_zero_symbol_and_cap() {
        let w = GridWindow::new(2.0, 0.1).unwrap();
        let a = nystrom_section(&KernelSpec::zero(), &w, DEFAULT_NODE_CAP).unwrap();
        assert!(a.as_row_major().iter().all(|&v| v == 0.0));
        assert!(matches!(
            nystrom_section(&KernelSpec::Carleman, &w, 10),
            Err(Error::Resource { .. })
        ));
    }

    #[test]
    fn carleman_nystrom_traces() {
        let w = GridWindow::new(40.0, 0.05).unwrap();
        let a = nystrom_section(&KernelSpec::Carleman, &w, DEFAULT_NODE_CAP).unwrap();
        let m2 = a.trace_of_square() / 80.0;
        assert!((m2 - 1.0).abs() < 0.02, "{m2}");
        assert!((a.trace() / 80.0 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn projection_atom_section() {
        let s = atom_section(&atoms(&[(0.0, 2.0)]), -1.0, 1.0, DEFAULT_ATOM_CAP).unwrap();
        assert_eq!(s.dim(), 1);
        assert_eq!(s.get(0, 0), 1.0);
        assert_eq!(s.eigenvalues().unwrap(), vec![1.0]);
    }

    #[test]
    fn distant_atoms_decouple() {
        let s = atom_section(&atoms(&[(-20.0, 2.0), (20.0, 2.0)]), -30.0, 30.0, DEFAULT_ATOM_CAP).unwrap();
        for e in s.eigenvalues().unwrap() {
            assert!((e - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn signed_pair_section() {
        let s = atom_section(&signed(&[(0.0, 1.0), (PI, -1.0)]), -5.0, 5.0, DEFAULT_ATOM_CAP).unwrap();
        let g = gram_overlap(0.0, PI);
        // W Γ has eigenvalues ±√(¼ − g²)
        let expected = (0.25 - g * g).sqrt();
        let e = s.eigenvalues().unwrap();
        assert!((e[0] + expected).abs() < 1e-14);
        assert!((e[1] - expected).abs() < 1e-14);
    }

    #[test]
    fn window_is_half_open() {
        let lat = AtomicMeasure::lattice(1.0, -10.0, 10.0);
        let s = atom_section(&lat, -3.0, 3.0, DEFAULT_ATOM_CAP).unwrap();
        assert_eq!(s.labels, vec![-3.0, -2.0, -1.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn compressed_matches_full_nystrom() {
        let lat = AtomicMeasure::lattice(2.0, -40.0, 60.0);
        let w = GridWindow::new(6.0, 0.1).unwrap();
        let full = nystrom_section(&KernelSpec::positive(lat.clone()).unwrap(), &w, DEFAULT_NODE_CAP).unwrap();
        let small = compressed_nystrom_section(&lat, &w, DEFAULT_NODE_CAP, DEFAULT_ATOM_CAP).unwrap();
        let mut a: Vec<f64> = full.eigenvalues().unwrap().into_iter().filter(|&e| e > 1e-10).collect();
        let mut b: Vec<f64> = small.eigenvalues().unwrap().into_iter().filter(|&e| e > 1e-10).collect();
        a.reverse();
        b.reverse();
        let top = a.len().min(b.len()).min(6);
        for k in 0..top {
            assert!((a[k] - b[k]).abs() < 1e-12, "{k}: {} vs {}", a[k], b[k]);
        }
    }

    #[test]
    fn translation_covariance() {
        let lat = AtomicMeasure::lattice(1.5, -30.0, 30.0);
        let s = 3.0;
        let a = atom_section(&lat, -9.0, 9.0, DEFAULT_ATOM_CAP).unwrap();
        let b = atom_section(&lat.shifted(s), -9.0 + s, 9.0 + s, DEFAULT_ATOM_CAP).unwrap();
        assert_eq!(a.as_row_major(), b.as_row_major());
    }

    #[test]
    fn nystrom_is_worker_independent() {
        let w = GridWindow::new(5.0, 0.1).unwrap();
        let spec = KernelSpec::positive(AtomicMeasure::lattice(1.0, -20.0, 100.0)).unwrap();
        let run = |k| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .unwrap()
                .install(|| nystrom_section(&spec, &w, DEFAULT_NODE_CAP).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]

            #[test]
            fn unsigned_atom_sections_are_psd(
                pts in prop::collection::vec((-10.0f64..10.0, 0.0f64..3.0), 1..40)
            ) {
                let m = AtomicMeasure::new(Axis::Line, pts).unwrap();
                let s = atom_section(&m, -10.0, 10.0, DEFAULT_ATOM_CAP).unwrap();
                let e = s.eigenvalues().unwrap();
                let norm = e.iter().fold(0.0f64, |a, x| a.max(x.abs()));
                prop_assert!(e.iter().all(|&x| x >= -1e-10 * norm.max(1e-300)));
            }

            #[test]
            fn nystrom_respects_norm_bound(
                c in prop::collection::vec(-1.0f64..1.0, 3),
                tau in 0.5f64..6.0
            ) {
                let coeffs = vec![
                    Complex64::new(c[1], -c[2]) * 0.25,
                    Complex64::new(c[0], 0.0) * 0.5,
                    Complex64::new(c[1], c[2]) * 0.25,
                ];
                let spec = KernelSpec::periodic(PeriodicSymbol::Fourier(coeffs), tau, 1.25).unwrap();
                let w = GridWindow::new(10.0, 0.05).unwrap();
                let e = nystrom_section(&spec, &w, DEFAULT_NODE_CAP).unwrap().eigenvalues().unwrap();
                let bound = 1.25 * PI + 0.05;
                prop_assert!(e.iter().all(|&x| x.abs() <= bound));
            }

            #[test]
            fn shifts_leave_the_section_unchanged(s in -20i32..20) {
                let lat = AtomicMeasure::lattice(0.75, -60.0, 60.0);
                let s = s as f64;
                let a = atom_section(&lat, -12.0, 12.0, DEFAULT_ATOM_CAP).unwrap();
                let b = atom_section(&lat.shifted(s), -12.0 + s, 12.0 + s, DEFAULT_ATOM_CAP).unwrap();
                prop_assert_eq!(a.as_row_major(), b.as_row_major());
            }
        }
    }
}
