//! Eigensolving, eigenvalue counting and integrated densities of states.
//!
//! The IDS ν of an ergodic operator is estimated through the counting form
//! ν̂((λ, ∞)) = #{eigenvalues of the window-M section above λ} / (2M).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt17;
use crate::linalg;
use crate::measures::{AtomicMeasure, Axis, Measure};
use crate::operators::{
    compressed_nystrom_section, gram_overlap, measure_section, nystrom_factor, nystrom_section, GridWindow,
    KernelSpec, Scheme, SymmetricSection, DEFAULT_ATOM_CAP, DEFAULT_NODE_CAP, TAIL_CUTOFF,
};

/// Residual contract for eigenvectors.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Extra half-width of the reference window used for Tr χ_M φ(𝐇) χ_M.
pub const REFERENCE_MARGIN: f64 = 40.0;
const MOMENT_BOUND_RTOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Ascending.
    pub values: Vec<f64>,
    /// Row-major; column k is the unit eigenvector of `values[k]`.
    pub vectors: Option<Vec<f64>>,
    /// max_k ‖A v_k − λ_k v_k‖ / ‖A‖ when vectors were computed.
    pub residual: Option<f64>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> Option<Vec<f64>> {
        let n = self.dim();
        self.vectors
            .as_ref()
            .map(|v| (0..n).map(|i| v[i * n + k]).collect())
    }

    pub fn count_above(&self, lambda: f64) -> usize {
        count_above(&self.values, lambda)
    }
}

pub fn eig_sym(a: &SymmetricSection, want_vectors: bool) -> Result<Spectrum> {
    let n = a.dim();
    if !want_vectors {
        return Ok(Spectrum {
            values: a.eigenvalues()?,
            vectors: None,
            residual: None,
        });
    }
    let (values, vectors) = linalg::sym_eigen(a.as_row_major(), n)?;
    let residual = linalg::eigen_residual(a.as_row_major(), n, &values, &vectors);
    if residual > RESIDUAL_TOL {
        return Err(Error::Convergence {
            what: "eigenvector residual",
            iterations: n,
        });
    }
    Ok(Spectrum {
        values,
        vectors: Some(vectors),
        residual: Some(residual),
    })
}

/// #{v ∈ sorted : v > λ}.
pub fn count_above(sorted: &[f64], lambda: f64) -> usize {
    sorted.len() - sorted.partition_point(|&v| v <= lambda)
}

/// Estimated ν((λ, ∞)) on a λ-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdsCurve {
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
    /// Window length the counts were divided by.
    pub normalization: f64,
    /// "a", "b", "bands", "closed-form" or "mc".
    pub scheme: String,
    pub model: String,
}

impl IdsCurve {
    pub fn from_eigenvalues(sorted: &[f64], normalization: f64, lambdas: &[f64], scheme: &str, model: &str) -> Self {
        Self {
            lambdas: lambdas.to_vec(),
            values: lambdas
                .iter()
                .map(|&l| count_above(sorted, l) as f64 / normalization)
                .collect(),
            normalization,
            scheme: scheme.into(),
            model: model.into(),
        }
    }

    /// Linear interpolation in λ; constant beyond the grid ends.
    pub fn at(&self, lambda: f64) -> f64 {
        let l = &self.lambdas;
        if lambda <= l[0] {
            return self.values[0];
        }
        if lambda >= l[l.len() - 1] {
            return self.values[l.len() - 1];
        }
        let j = l.partition_point(|&x| x <= lambda);
        let t = (lambda - l[j - 1]) / (l[j] - l[j - 1]);
        self.values[j - 1] * (1.0 - t) + self.values[j] * t
    }

    pub fn sup_distance(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.lambdas
            .iter()
            .zip(&self.values)
            .map(|(&l, &v)| (v - f(l)).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with header "lambda,ids,scheme,M".
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,ids,scheme,M\n");
        let m = fmt17(0.5 * self.normalization);
        for (l, v) in self.lambdas.iter().zip(&self.values) {
            out.push_str(&format!("{},{},{},{}\n", fmt17(*l), fmt17(*v), self.scheme, m));
        }
        out
    }
}

pub fn validate_lambda_grid(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::Domain("empty lambda grid".into()));
    }
    if lambdas.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(Error::Domain("lambda grid must be positive and finite".into()));
    }
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("lambda grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Geometric grid from 0.02πC_h to πC_h with 120 points.
pub fn default_lambda_grid(symbol_bound: f64) -> Vec<f64> {
    geometric_grid(0.02 * PI * symbol_bound, PI * symbol_bound, 120)
}

pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let r = (hi / lo).ln();
    (0..n).map(|i| lo * (r * i as f64 / (n - 1) as f64).exp()).collect()
}

pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn as_atomic(spec: &KernelSpec) -> Option<AtomicMeasure> {
    match spec {
        KernelSpec::PositiveFromMeasure {
            sigma: Measure::Atomic(m),
        } => Some(m.clone()),
        KernelSpec::RkphSample { weights, tau } => {
            let n = (weights.len() / 2) as f64;
            let pairs = weights
                .iter()
                .enumerate()
                .map(|(i, &k)| (tau * (i as f64 - n), k));
            Some(AtomicMeasure::new(Axis::Line, pairs).expect("positive weights"))
        }
        _ => None,
    }
}

fn lebesgue_section(window: &GridWindow) -> Result<SymmetricSection> {
    if window.nodes > DEFAULT_NODE_CAP {
        return Err(Error::Resource {
            what: "Nystrom nodes",
            requested: window.nodes,
            cap: DEFAULT_NODE_CAP,
        });
    }
    let x = window.nodes();
    let dx = window.spacing;
    let n = x.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if (x[i] - x[j]).abs() <= TAIL_CUTOFF {
                data[i * n + j] = dx * gram_overlap(x[i], x[j]);
            }
        }
    }
    SymmetricSection::from_row_major(data, n, Scheme::B, window.half_width, x)
}

/// Finite section of `spec` for a scheme. Scheme (a) of an atomic measure is
/// returned in compressed form (same nonzero spectrum).
pub fn section(spec: &KernelSpec, scheme: Scheme, half_width: f64, spacing: f64) -> Result<SymmetricSection> {
    let window = GridWindow::new(half_width, spacing)?;
    match scheme {
        Scheme::A => match as_atomic(spec) {
            Some(m) => compressed_nystrom_section(&m, &window, DEFAULT_NODE_CAP, DEFAULT_ATOM_CAP),
            None => nystrom_section(spec, &window, DEFAULT_NODE_CAP),
        },
        Scheme::B => match spec {
            // Σ is Lebesgue measure
            KernelSpec::Carleman => lebesgue_section(&window),
            KernelSpec::PositiveFromMeasure { sigma } => measure_section(sigma, &window, DEFAULT_ATOM_CAP),
            KernelSpec::RkphSample { .. } => {
                let m = as_atomic(spec).expect("rKPH sample");
                measure_section(&Measure::Atomic(m), &window, DEFAULT_ATOM_CAP)
            }
            KernelSpec::Periodic { .. } => Err(Error::Unsupported(
                "scheme b needs a measure; periodic symbols only support scheme a".into(),
            )),
        },
    }
}

pub fn ids_from_section(
    spec: &KernelSpec,
    scheme: Scheme,
    half_width: f64,
    spacing: f64,
    lambdas: &[f64],
) -> Result<IdsCurve> {
    validate_lambda_grid(lambdas)?;
    let a = section(spec, scheme, half_width, spacing)?;
    let e = a.eigenvalues()?;
    Ok(IdsCurve::from_eigenvalues(&e, 2.0 * half_width, lambdas, scheme.tag(), &model_name(spec)))
}

pub fn model_name(spec: &KernelSpec) -> String {
    match spec {
        KernelSpec::Carleman => "carleman".into(),
        KernelSpec::Periodic { tau, .. } => format!("periodic(tau={tau})"),
        KernelSpec::PositiveFromMeasure { sigma } => match sigma {
            Measure::Atomic(m) => format!("atomic({} atoms)", m.len()),
            Measure::Density(d) => format!("density({} nodes)", d.values().len()),
        },
        KernelSpec::RkphSample { weights, tau } => format!("rkph(tau={tau}, sites={})", weights.len()),
    }
}

/// ν_C((λ, ∞)) = (1/π²) arcsech(λ/π) for the Carleman operator.
pub fn carleman_ids(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    if lambda >= PI {
        return Ok(0.0);
    }
    Ok((PI / lambda).acosh() / (PI * PI))
}

/// Density −dν_C/dλ = 1/(π λ √(π² − λ²)).
pub fn carleman_density(lambda: f64) -> f64 {
    if lambda <= 0.0 || lambda >= PI {
        return 0.0;
    }
    1.0 / (PI * lambda * (PI * PI - lambda * lambda).sqrt())
}

/// Smooth compactly supported test function: 0 outside (lo, hi), 1 on
/// [plateau_lo, plateau_hi], C^∞ transitions in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothBump {
    pub lo: f64,
    pub plateau_lo: f64,
    pub plateau_hi: f64,
    pub hi: f64,
}

fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / u).exp();
    let b = (-1.0 / (1.0 - u)).exp();
    a / (a + b)
}

impl SmoothBump {
    pub fn new(lo: f64, plateau_lo: f64, plateau_hi: f64, hi: f64) -> Result<Self> {
        if !(0.0 < lo && lo < plateau_lo && plateau_lo <= plateau_hi && plateau_hi < hi) {
            return Err(Error::Domain(format!(
                "bump needs 0 < lo < plateau_lo <= plateau_hi < hi, got ({lo}, {plateau_lo}, {plateau_hi}, {hi})"
            )));
        }
        Ok(Self {
            lo,
            plateau_lo,
            plateau_hi,
            hi,
        })
    }

    /// Peak value 1 at the midpoint of [lo, hi].
    pub fn centered(lo: f64, hi: f64) -> Result<Self> {
        let mid = 0.5 * (lo + hi);
        Self::new(lo, mid, mid, hi)
    }

    pub fn eval(&self, x: f64) -> f64 {
        smooth_step((x - self.lo) / (self.plateau_lo - self.lo))
            * smooth_step((self.hi - x) / (self.hi - self.plateau_hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SzegoTriple {
    /// (1/2M) Tr φ(χ_M 𝐇 χ_M)
    pub t_a: f64,
    /// (1/2M) Tr χ_M φ(𝐇) χ_M
    pub t_proj: f64,
    /// (1/2M) Tr φ(𝐇^(M))
    pub t_b: f64,
}

impl SzegoTriple {
    pub fn max_pairwise_difference(&self) -> f64 {
        (self.t_a - self.t_proj)
            .abs()
            .max((self.t_a - self.t_b).abs())
            .max((self.t_proj - self.t_b).abs())
    }
}

/// Σ_{i inner} φ(A)_ii for A = C Cᵀ, C = Δ^{1/2} B W^{1/2}, through the
/// small matrix CᵀC = U Λ Uᵀ: φ(CCᵀ)_ii = Σ_k (CU)_{ik}² φ(λ_k)/λ_k.
fn factor_projection_trace(m: &AtomicMeasure, window: &GridWindow, inner: (f64, f64), phi: &SmoothBump) -> Result<f64> {
    let f = nystrom_factor(m, window, (DEFAULT_NODE_CAP, DEFAULT_ATOM_CAP))?;
    let (n, k) = (f.nodes.len(), f.atoms.len());
    if k == 0 {
        return Ok(0.0);
    }
    let scale: Vec<f64> = f.weights.iter().map(|w| (f.spacing * w).sqrt()).collect();
    let mut c = f.b.clone();
    for i in 0..n {
        for l in 0..k {
            c[i * k + l] *= scale[l];
        }
    }
    let g = linalg::gram_of_columns(&c, n, k);
    let (vals, vecs) = linalg::sym_eigen(&g, k)?;
    let top = vals.iter().copied().fold(0.0, f64::max);
    let ratio: Vec<f64> = vals
        .iter()
        .map(|&v| if v > 1e-14 * top { phi.eval(v) / v } else { 0.0 })
        .collect();
    let mut total = 0.0;
    for i in 0..n {
        if f.nodes[i] < inner.0 || f.nodes[i] >= inner.1 {
            continue;
        }
        for q in 0..k {
            if ratio[q] == 0.0 {
                continue;
            }
            let cu: f64 = (0..k).map(|l| c[i * k + l] * vecs[l * k + q]).sum();
            total += cu * cu * ratio[q];
        }
    }
    Ok(total)
}

fn full_projection_trace(a: &SymmetricSection, inner: (f64, f64), phi: &SmoothBump) -> Result<f64> {
    let n = a.dim();
    let (vals, vecs) = linalg::sym_eigen(a.as_row_major(), n)?;
    let f: Vec<f64> = vals.iter().map(|&v| phi.eval(v)).collect();
    let mut total = 0.0;
    for i in 0..n {
        if a.labels[i] < inner.0 || a.labels[i] >= inner.1 {
            continue;
        }
        total += (0..n).map(|k| vecs[i * n + k].powi(2) * f[k]).sum::<f64>();
    }
    Ok(total)
}

/// The three normalized traces of the Szegő comparison. The middle one is
/// computed on a reference section of half-width M + 40 and restricted to
/// the inner window. `spacing` should divide both 2M and 40.
pub fn szego_triple(spec: &KernelSpec, half_width: f64, spacing: f64, phi: &SmoothBump) -> Result<SzegoTriple> {
    let norm = 2.0 * half_width;
    let trace_phi = |a: &SymmetricSection| -> Result<f64> {
        Ok(a.eigenvalues()?.iter().map(|&v| phi.eval(v)).sum::<f64>())
    };
    let t_a = trace_phi(&section(spec, Scheme::A, half_width, spacing)?)? / norm;
    let t_b = trace_phi(&section(spec, Scheme::B, half_width, spacing)?)? / norm;
    let reference = GridWindow::new(half_width + REFERENCE_MARGIN, spacing)?;
    let inner = (-half_width, half_width);
    let proj = match as_atomic(spec) {
        Some(m) if !m.is_signed() => factor_projection_trace(&m, &reference, inner, phi)?,
        _ => {
            let a = nystrom_section(spec, &reference, DEFAULT_NODE_CAP)?;
            full_projection_trace(&a, inner, phi)?
        }
    };
    Ok(SzegoTriple {
        t_a,
        t_proj: proj / norm,
        t_b,
    })
}

/// Rate check of Szegő differences d(M) against c·M^{−1/2}, with c fitted at
/// the smallest M.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SzegoRate {
    pub c: f64,
    pub within_rate: bool,
    pub monotone: bool,
}

pub fn szego_rate(half_widths: &[f64], diffs: &[f64]) -> Result<SzegoRate> {
    if half_widths.len() != diffs.len() || half_widths.len() < 2 {
        return Err(Error::DegenerateFit("need at least two (M, d) pairs".into()));
    }
    if half_widths.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("half-widths must be strictly increasing".into()));
    }
    let c = diffs[0] * half_widths[0].sqrt();
    let slack = 1.0 + 1e-12;
    Ok(SzegoRate {
        c,
        within_rate: half_widths.iter().zip(diffs).all(|(&m, &d)| d <= c / m.sqrt() * slack),
        monotone: diffs.windows(2).all(|w| w[1] <= w[0] * slack),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    /// (1/2M) Tr of the scheme-(a) section; positive models only.
    pub m1: Option<f64>,
    /// (1/2M) Tr of its square.
    pub m2: f64,
    pub symbol_bound: f64,
    pub within_bounds: bool,
}

/// Normalized first and second moments of the scheme-(a) section, checked
/// against m2 ≤ C_h² and, for positive models, m1 ≤ C_h/2.
pub fn moment_check(spec: &KernelSpec, half_width: f64, spacing: f64) -> Result<MomentReport> {
    let a = section(spec, Scheme::A, half_width, spacing)?;
    let norm = 2.0 * half_width;
    let ch = spec.symbol_bound()?;
    let m2 = a.trace_of_square() / norm;
    let positive = match spec {
        KernelSpec::Carleman | KernelSpec::RkphSample { .. } => true,
        KernelSpec::PositiveFromMeasure { sigma } => !sigma.is_signed(),
        KernelSpec::Periodic { bound, .. } => *bound == 0.0,
    };
    let m1 = positive.then(|| a.trace() / norm);
    let slack = 1.0 + MOMENT_BOUND_RTOL;
    let within_bounds = m2 <= ch * ch * slack && m1.is_none_or(|m| m <= 0.5 * ch * slack);
    Ok(MomentReport {
        m1,
        m2,
        symbol_bound: ch,
        within_bounds,
    })
}

/// Ordinary least squares y ≈ slope·x + intercept.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::DegenerateFit(format!("need at least 2 paired points, got {n}")));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all abscissae coincide".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}
