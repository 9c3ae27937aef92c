//! Measures parametrizing positive Hankel operators.
//!
//! A positive operator is described either by σ on the half-line (its kernel
//! function is the Laplace transform of σ) or, after the change of variables
//! t = e^{−ξ}, by Σ on the whole line. Both are represented here as finite
//! atomic measures or as densities sampled on a uniform grid.

use std::f64::consts::E;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt17;

/// Which line a measure lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    /// σ on (0, ∞)
    #[serde(rename = "sigma")]
    HalfLine,
    /// Σ on ℝ
    #[serde(rename = "Sigma")]
    Line,
}

impl Axis {
    fn name(self) -> &'static str {
        match self {
            Axis::HalfLine => "sigma",
            Axis::Line => "Sigma",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub position: f64,
    pub weight: f64,
}

/// Finite sum of point masses in canonical form: positions strictly
/// increasing, coincident atoms merged, zero weights dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
    axis: Axis,
    signed: bool,
}

impl AtomicMeasure {
    pub fn new(axis: Axis, pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        Self::build(axis, pairs, false)
    }

    /// Signed atoms are only meaningful for sections and fiber data; every
    /// positivity-dependent operation rejects them.
    pub fn new_signed(axis: Axis, pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        Self::build(axis, pairs, true)
    }

    pub fn empty(axis: Axis) -> Self {
        Self {
            atoms: Vec::new(),
            axis,
            signed: false,
        }
    }

    fn build(axis: Axis, pairs: impl IntoIterator<Item = (f64, f64)>, signed: bool) -> Result<Self> {
        let mut atoms: Vec<Atom> = pairs
            .into_iter()
            .map(|(position, weight)| Atom { position, weight })
            .collect();
        for a in &atoms {
            if !a.position.is_finite() || !a.weight.is_finite() {
                return Err(Error::InvalidMeasure(format!(
                    "non-finite atom ({}, {})",
                    a.position, a.weight
                )));
            }
            if !signed && a.weight < 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "negative weight {} at {} in an unsigned measure",
                    a.weight, a.position
                )));
            }
            if axis == Axis::HalfLine && a.position <= 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "sigma atoms must sit in (0, inf), got position {}",
                    a.position
                )));
            }
        }
        atoms.sort_by(|a, b| a.position.total_cmp(&b.position));
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if last.position == a.position => last.weight += a.weight,
                _ => merged.push(a),
            }
        }
        merged.retain(|a| a.weight != 0.0);
        Ok(Self {
            atoms: merged,
            axis,
            signed,
        })
    }

    /// Σ on the line with one atom per cell of a τ-periodic pattern, covering
    /// [lo, hi). `cell` lists (offset, weight) pairs within [0, τ).
    pub fn periodic(tau: f64, cell: &[(f64, f64)], lo: f64, hi: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::Domain(format!("period must be positive, got {tau}")));
        }
        let signed = cell.iter().any(|&(_, w)| w < 0.0);
        let first = (lo / tau).floor() as i64 - 1;
        let last = (hi / tau).ceil() as i64 + 1;
        let mut pairs = Vec::new();
        for n in first..=last {
            for &(offset, w) in cell {
                let x = tau * n as f64 + offset;
                if x >= lo && x < hi {
                    pairs.push((x, w));
                }
            }
        }
        Self::build(Axis::Line, pairs, signed)
    }

    /// Unit atoms at τn inside [lo, hi).
    pub fn lattice(tau: f64, lo: f64, hi: f64) -> Self {
        Self::periodic(tau, &[(0.0, 1.0)], lo, hi).expect("positive period")
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// Atoms with position in the half-open window [lo, hi).
    pub fn in_window(&self, lo: f64, hi: f64) -> &[Atom] {
        let start = self.atoms.partition_point(|a| a.position < lo);
        let end = self.atoms.partition_point(|a| a.position < hi);
        &self.atoms[start..end]
    }

    pub fn shifted(&self, s: f64) -> Self {
        Self {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    position: a.position + s,
                    weight: a.weight,
                })
                .collect(),
            axis: self.axis,
            signed: self.signed,
        }
    }

    fn require(&self, axis: Axis, unsigned: bool) -> Result<()> {
        if self.axis != axis {
            return Err(Error::InvalidMeasure(format!(
                "expected a {} measure, got {}",
                axis.name(),
                self.axis.name()
            )));
        }
        if unsigned && self.signed {
            return Err(Error::InvalidMeasure(
                "operation requires a positive measure, got a signed one".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub n: usize,
}

impl UniformGrid {
    pub fn node(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn end(&self) -> f64 {
        self.node(self.n - 1)
    }
}

/// Density sampled on a uniform grid and interpolated linearly between
/// nodes; zero outside [first node, last node].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMeasure {
    grid: UniformGrid,
    values: Vec<f64>,
    axis: Axis,
}

impl DensityMeasure {
    pub fn new(axis: Axis, grid: UniformGrid, values: Vec<f64>) -> Result<Self> {
        if !(grid.step > 0.0) || grid.n < 2 {
            return Err(Error::InvalidMeasure(format!(
                "density grid needs step > 0 and at least 2 nodes, got {grid:?}"
            )));
        }
        if values.len() != grid.n {
            return Err(Error::InvalidMeasure(format!(
                "grid has {} nodes but {} values were given",
                grid.n,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidMeasure(format!(
                "density values must be finite and non-negative, got {v}"
            )));
        }
        if axis == Axis::HalfLine && grid.start <= 0.0 {
            return Err(Error::InvalidMeasure(
                "sigma density grids must start at t > 0".into(),
            ));
        }
        Ok(Self { grid, values, axis })
    }

    /// Samples `f` on the grid.
    pub fn from_fn(axis: Axis, grid: UniformGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..grid.n).map(|i| f(grid.node(i))).collect();
        Self::new(axis, grid, values)
    }

    pub fn grid(&self) -> UniformGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn density_at(&self, x: f64) -> f64 {
        let u = (x - self.grid.start) / self.grid.step;
        if u < 0.0 || u > (self.grid.n - 1) as f64 {
            return 0.0;
        }
        let i = (u.floor() as usize).min(self.grid.n - 2);
        let frac = u - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    /// Exact mass of [lo, hi) under the piecewise-linear density.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        let lo = lo.max(self.grid.start);
        let hi = hi.min(self.grid.end());
        if hi <= lo {
            return 0.0;
        }
        let h = self.grid.step;
        let first = ((lo - self.grid.start) / h).floor() as usize;
        let last = (((hi - self.grid.start) / h).ceil() as usize).min(self.grid.n - 1);
        let mut mass = 0.0;
        for i in first..last {
            let a = self.grid.node(i).max(lo);
            let b = self.grid.node(i + 1).min(hi);
            if b > a {
                mass += 0.5 * (b - a) * (self.density_at(a) + self.density_at(b));
            }
        }
        mass
    }

    pub fn total_mass(&self) -> f64 {
        self.mass_between(self.grid.start, self.grid.end())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    Atomic(AtomicMeasure),
    Density(DensityMeasure),
}

impl Measure {
    pub fn axis(&self) -> Axis {
        match self {
            Measure::Atomic(m) => m.axis(),
            Measure::Density(d) => d.axis(),
        }
    }

    pub fn is_signed(&self) -> bool {
        matches!(self, Measure::Atomic(m) if m.is_signed())
    }
}

impl From<AtomicMeasure> for Measure {
    fn from(m: AtomicMeasure) -> Self {
        Measure::Atomic(m)
    }
}

impl From<DensityMeasure> for Measure {
    fn from(d: DensityMeasure) -> Self {
        Measure::Density(d)
    }
}

fn resample(d: &DensityMeasure, axis: Axis, map: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<DensityMeasure> {
    let n = d.grid.n;
    let grid = UniformGrid {
        start: lo,
        step: (hi - lo) / (n - 1) as f64,
        n,
    };
    DensityMeasure::from_fn(axis, grid, |x| d.density_at(map(x)))
}

/// σ on the half-line ↦ Σ on the line under t = e^{−ξ}.
///
/// Atoms (t, w) go to (−ln t, w/t). A density s goes to S(ξ) = s(e^{−ξ}),
/// resampled on a uniform ξ-grid with the same node count.
pub fn push_forward(sigma: &Measure) -> Result<Measure> {
    if sigma.axis() != Axis::HalfLine {
        return Err(Error::InvalidMeasure("push_forward expects a sigma measure".into()));
    }
    match sigma {
        Measure::Atomic(m) => {
            let pairs = m.atoms.iter().map(|a| (-a.position.ln(), a.weight / a.position));
            Ok(AtomicMeasure::build(Axis::Line, pairs, m.signed)?.into())
        }
        Measure::Density(d) => {
            let (t0, t1) = (d.grid.start, d.grid.end());
            Ok(resample(d, Axis::Line, |xi| (-xi).exp(), -t1.ln(), -t0.ln())?.into())
        }
    }
}

/// Inverse of [`push_forward`].
pub fn pull_back(big_sigma: &Measure) -> Result<Measure> {
    if big_sigma.axis() != Axis::Line {
        return Err(Error::InvalidMeasure("pull_back expects a Sigma measure".into()));
    }
    match big_sigma {
        Measure::Atomic(m) => {
            let pairs = m.atoms.iter().map(|a| {
                let t = (-a.position).exp();
                (t, a.weight * t)
            });
            Ok(AtomicMeasure::build(Axis::HalfLine, pairs, m.signed)?.into())
        }
        Measure::Density(d) => {
            let (x0, x1) = (d.grid.start, d.grid.end());
            Ok(resample(d, Axis::HalfLine, |t| -t.ln(), (-x1).exp(), (-x0).exp())?.into())
        }
    }
}

/// sup_{a>0} σ((0, a))/a for an atomic σ.
///
/// σ((0, a))/a is of the form c/a between atoms, so the supremum is the
/// right limit at some atom: max_j (Σ_{i≤j} w_i)/t_j.
pub fn carleson_constant(sigma: &AtomicMeasure) -> Result<f64> {
    sigma.require(Axis::HalfLine, true)?;
    let mut cum = 0.0;
    let mut best = 0.0_f64;
    for a in &sigma.atoms {
        cum += a.weight;
        best = best.max(cum / a.position);
    }
    Ok(best)
}

/// sup_{n∈ℤ} e^n σ((0, e^{−n})), the Carleson ratio restricted to the
/// scales a = e^{−n}. This is the quantity the integer-window chain bounds by
/// local_bound/(1 − e^{−1}).
pub fn carleson_constant_integer_scales(sigma: &AtomicMeasure) -> Result<f64> {
    sigma.require(Axis::HalfLine, true)?;
    if sigma.is_empty() {
        return Ok(0.0);
    }
    let lo = (-sigma.atoms.last().unwrap().position.ln()).floor() as i64 - 1;
    let hi = (-sigma.atoms[0].position.ln()).ceil() as i64 + 1;
    let mut best = 0.0_f64;
    for n in lo..=hi {
        let a = (-(n as f64)).exp();
        let mass: f64 = sigma.atoms.iter().take_while(|x| x.position < a).map(|x| x.weight).sum();
        best = best.max(mass / a);
    }
    Ok(best)
}

/// max_n Σ([n − 1, n)) over all unit windows meeting the support.
pub fn local_bound_constant(big_sigma: &Measure) -> Result<f64> {
    match big_sigma {
        Measure::Atomic(m) => {
            m.require(Axis::Line, true)?;
            let mut best = 0.0_f64;
            let mut i = 0;
            while i < m.atoms.len() {
                let cell = m.atoms[i].position.floor();
                let mut mass = 0.0;
                while i < m.atoms.len() && m.atoms[i].position.floor() == cell {
                    mass += m.atoms[i].weight;
                    i += 1;
                }
                best = best.max(mass);
            }
            Ok(best)
        }
        Measure::Density(d) => {
            if d.axis != Axis::Line {
                return Err(Error::InvalidMeasure("local bound expects a Sigma measure".into()));
            }
            let first = d.grid.start.floor() as i64;
            let last = d.grid.end().floor() as i64;
            Ok((first..=last)
                .map(|n| d.mass_between(n as f64, n as f64 + 1.0))
                .fold(0.0, f64::max))
        }
    }
}

/// The two Appendix-A style comparisons between the Carleson constant of σ
/// and the unit-window bound of its push-forward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarlesonComparison {
    pub carleson: f64,
    pub carleson_integer_scales: f64,
    pub local_bound: f64,
}

impl CarlesonComparison {
    pub fn of(sigma: &AtomicMeasure) -> Result<Self> {
        let big = push_forward(&Measure::Atomic(sigma.clone()))?;
        Ok(Self {
            carleson: carleson_constant(sigma)?,
            carleson_integer_scales: carleson_constant_integer_scales(sigma)?,
            local_bound: local_bound_constant(&big)?,
        })
    }

    /// Σ([n−1, n)) ≤ e·C_σ.
    pub fn local_within_carleson(&self) -> bool {
        self.local_bound <= E * self.carleson * (1.0 + 1e-12)
    }

    /// C_σ ≤ C'_Σ / (1 − e^{−1}).
    pub fn carleson_within_local(&self) -> bool {
        self.carleson <= self.local_bound / (1.0 - 1.0 / E) * (1.0 + 1e-12)
    }

    /// C_σ ≤ e·C'_Σ / (1 − e^{−1}), valid for every scale a.
    pub fn carleson_within_scaled_local(&self) -> bool {
        self.carleson <= E * self.local_bound / (1.0 - 1.0 / E) * (1.0 + 1e-12)
    }

    /// Same bound restricted to the scales a = e^{−n}.
    pub fn integer_scales_within_local(&self) -> bool {
        self.carleson_integer_scales <= self.local_bound / (1.0 - 1.0 / E) * (1.0 + 1e-12)
    }
}

/// Random σ for the Carleson comparisons: 1..=max_atoms atoms with positions
/// log-uniform in [1e−3, 1e3] and weights uniform in (0, 1). Measure `index`
/// of a family is a pure function of (seed, index).
pub fn random_sigma(seed: u64, index: u64, max_atoms: usize) -> AtomicMeasure {
    let mut rng = ChaCha8Rng::seed_from_u64(crate::rkph::replica_seed(seed, index));
    let n = rng.random_range(1..=max_atoms.max(1));
    let pairs: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let e: f64 = rng.random_range(-3.0..3.0);
            (10f64.powf(e), rng.random_range(f64::MIN_POSITIVE..1.0))
        })
        .collect();
    AtomicMeasure::new(Axis::HalfLine, pairs).expect("positive finite atoms")
}

/// #(supp Σ ∩ [−M, M)) / (2M).
pub fn support_density(big_sigma: &AtomicMeasure, half_width: f64) -> f64 {
    big_sigma.in_window(-half_width, half_width).len() as f64 / (2.0 * half_width)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlaschkeReport {
    /// Σ_{ξ∈supp Σ} sech ξ
    pub sum: f64,
    /// Share of the sum carried by atoms with |ξ| ≤ R/2, R the largest |ξ|.
    pub inner_fraction: f64,
    /// Heuristic verdict that the partial sums have converged, i.e. the
    /// Blaschke-type condition holds and the kernel is infinite-dimensional.
    pub kernel_infinite: bool,
}

const BLASCHKE_CONVERGENCE_TOL: f64 = 1e-6;

/// Evaluates Σ sech ξ over the atoms and flags whether the partial sums
/// over growing windows have stabilized.
///
/// The flag compares the partial sum over |ξ| ≤ R/2 with the full sum over
/// |ξ| ≤ R. A finite window can only approximate the condition on an infinite
/// support, so the verdict is a proxy. Density inputs are rejected: absolutely
/// continuous parts force a trivial kernel.
pub fn blaschke_kernel_test(big_sigma: &Measure) -> Result<BlaschkeReport> {
    let m = match big_sigma {
        Measure::Atomic(m) => m,
        Measure::Density(_) => {
            return Err(Error::Unsupported(
                "the kernel test applies to pure point measures only".into(),
            ))
        }
    };
    m.require(Axis::Line, false)?;
    let reach = m.atoms.iter().map(|a| a.position.abs()).fold(0.0, f64::max);
    let (mut inner, mut total) = (0.0, 0.0);
    for a in &m.atoms {
        let s = 1.0 / a.position.cosh();
        total += s;
        if a.position.abs() <= 0.5 * reach {
            inner += s;
        }
    }
    let inner_fraction = if total > 0.0 { inner / total } else { 1.0 };
    Ok(BlaschkeReport {
        sum: total,
        inner_fraction,
        kernel_infinite: inner_fraction >= 1.0 - BLASCHKE_CONVERGENCE_TOL,
    })
}

/// One realization of the heavy-tailed construction: unit cells [m, m + 1),
/// each carrying x(m) equidistant atoms of weight 1/x(m), with x(m) = 2^k
/// drawn with probability 2^{−k}, k ≥ 1.
///
/// Cells are stored as counts; atoms are only materialized on request.
#[derive(Debug, Clone)]
pub struct HeavyTailCells {
    first_cell: i64,
    counts: Vec<u64>,
}

const HEAVY_TAIL_MAX_EXPONENT: u32 = 62;
const HEAVY_TAIL_EXACT_LIMIT: u64 = 1 << 16;

impl HeavyTailCells {
    /// Cells m ∈ [−half_cells, half_cells).
    pub fn sample(seed: u64, half_cells: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let counts = (0..2 * half_cells)
            .map(|_| {
                let k = (rng.random::<u64>().trailing_zeros() + 1).min(HEAVY_TAIL_MAX_EXPONENT);
                1_u64 << k
            })
            .collect();
        Self {
            first_cell: -(half_cells as i64),
            counts,
        }
    }

    pub fn half_cells(&self) -> usize {
        self.counts.len() / 2
    }

    fn cells(&self, half_width: usize) -> impl Iterator<Item = (i64, u64)> + '_ {
        let half_width = half_width.min(self.half_cells()) as i64;
        self.counts
            .iter()
            .enumerate()
            .map(move |(i, &x)| (self.first_cell + i as i64, x))
            .filter(move |&(m, _)| m >= -half_width && m < half_width)
    }

    /// Support density over [−M, M) for integer M.
    pub fn support_density(&self, half_width: usize) -> f64 {
        let atoms: f64 = self.cells(half_width).map(|(_, x)| x as f64).sum();
        atoms / (2 * half_width.min(self.half_cells())) as f64
    }

    /// Σ sech ξ over the atoms in cells [−M, M).
    pub fn blaschke_partial_sum(&self, half_width: usize) -> f64 {
        self.cells(half_width).map(|(m, x)| cell_sech_sum(m as f64, x)).sum()
    }

    /// Materializes the atoms in cells [−M, M).
    pub fn to_measure(&self, half_width: usize, cap: usize) -> Result<AtomicMeasure> {
        let total: u64 = self.cells(half_width).map(|(_, x)| x).sum();
        if total as usize > cap {
            return Err(Error::Resource {
                what: "heavy-tail atoms",
                requested: total as usize,
                cap,
            });
        }
        let pairs = self.cells(half_width).flat_map(|(m, x)| {
            (0..x).map(move |j| (m as f64 + j as f64 / x as f64, 1.0 / x as f64))
        });
        AtomicMeasure::new(Axis::Line, pairs)
    }
}

/// Σ_{j<x} sech(m + j/x); Euler–Maclaurin for very dense cells.
fn cell_sech_sum(m: f64, x: u64) -> f64 {
    let sech = |u: f64| 1.0 / u.cosh();
    if x <= HEAVY_TAIL_EXACT_LIMIT {
        return (0..x).map(|j| sech(m + j as f64 / x as f64)).sum();
    }
    let xf = x as f64;
    let (a, b) = (m, m + 1.0);
    // ∫_a^b sech = 2 atan((e^b − e^a)/(1 + e^{a+b})), rearranged to avoid overflow
    let ratio = if a >= 0.0 {
        ((-a).exp() - (-b).exp()) / ((-a - b).exp() + 1.0)
    } else {
        (b.exp() - a.exp()) / (1.0 + (a + b).exp())
    };
    let integral = 2.0 * ratio.atan();
    let dsech = |u: f64| -sech(u) * u.tanh();
    xf * integral + 0.5 * (sech(a) - sech(b)) + (dsech(b) - dsech(a)) / (12.0 * xf)
}

#[derive(Serialize, Deserialize)]
struct GridLiteral {
    start: f64,
    step: f64,
    n: usize,
}

#[derive(Deserialize)]
struct MeasureLiteral {
    axis: Axis,
    #[serde(default)]
    signed: bool,
    atoms: Option<Vec<[f64; 2]>>,
    grid: Option<GridLiteral>,
    values: Option<Vec<f64>>,
}

/// Parses the measure literal document:
/// `{"axis": "sigma"|"Sigma", "atoms": [[position, weight], ...]}` or
/// `{"axis": ..., "grid": {"start", "step", "n"}, "values": [...]}`.
pub fn parse_measure(text: &str) -> Result<Measure> {
    let lit: MeasureLiteral =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("measure literal: {e}")))?;
    match (lit.atoms, lit.grid, lit.values) {
        (Some(atoms), None, None) => {
            let pairs = atoms.into_iter().map(|[p, w]| (p, w));
            let m = if lit.signed {
                AtomicMeasure::new_signed(lit.axis, pairs)?
            } else {
                AtomicMeasure::new(lit.axis, pairs)?
            };
            Ok(m.into())
        }
        (None, Some(g), Some(values)) => Ok(DensityMeasure::new(
            lit.axis,
            UniformGrid {
                start: g.start,
                step: g.step,
                n: g.n,
            },
            values,
        )?
        .into()),
        _ => Err(Error::Parse(
            "measure literal needs either `atoms` or both `grid` and `values`".into(),
        )),
    }
}

/// Serializes a measure as a literal document, numbers at 17 significant digits.
pub fn format_measure(m: &Measure) -> String {
    match m {
        Measure::Atomic(a) => {
            let atoms: Vec<String> = a
                .atoms
                .iter()
                .map(|x| format!("[{}, {}]", fmt17(x.position), fmt17(x.weight)))
                .collect();
            let signed = if a.signed { ", \"signed\": true" } else { "" };
            format!(
                "{{\"axis\": \"{}\"{signed}, \"atoms\": [{}]}}\n",
                a.axis.name(),
                atoms.join(", ")
            )
        }
        Measure::Density(d) => {
            let values: Vec<String> = d.values.iter().map(|&v| fmt17(v)).collect();
            format!(
                "{{\"axis\": \"{}\", \"grid\": {{\"start\": {}, \"step\": {}, \"n\": {}}}, \"values\": [{}]}}\n",
                d.axis.name(),
                fmt17(d.grid.start),
                fmt17(d.grid.step),
                d.grid.n,
                values.join(", ")
            )
        }
    }
}
