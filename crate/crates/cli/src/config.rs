//! Serializable run configurations. Every run is fully described by a
//! [`RunConfig`]; measure files are inlined when the config is built.

use std::path::PathBuf;

use clap::{Args, Subcommand};
use hankel_core::operators::Scheme;
use hankel_core::rkph::DistributionSpec;
use serde::{Deserialize, Serialize};

const TWO_PI: f64 = std::f64::consts::TAU;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    /// CSV destination; inlined in the envelope when absent.
    pub out: Option<PathBuf>,
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "name", content = "options", rename_all = "kebab-case")]
pub enum Command {
    /// Counting IDS of the Carleman operator against its closed form.
    Carleman(CarlemanArgs),
    /// Floquet band functions of a periodic measure.
    Bands(BandsArgs),
    /// Flat-band constant of the alternating lattice.
    Flatband(FlatbandArgs),
    /// Counting IDS of a finite section.
    Ids(IdsArgs),
    /// Szegő comparison of the three normalized traces.
    Szego(SzegoArgs),
    /// Monte-Carlo IDS of the random model and its product-set spectrum.
    Rkph(RkphArgs),
    /// Double-log slope of the IDS at the top spectral edge.
    Lifshitz(LifshitzArgs),
    /// Wegner ratio of the averaged IDS density.
    Wegner(WegnerArgs),
    /// Mean inverse participation ratios across periods.
    Localize(LocalizeArgs),
    /// Carleson, integer-scale and local-bound constants.
    Carleson(CarlesonArgs),
    /// Built-in example suite.
    Selftest,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Carleman(_) => "carleman",
            Command::Bands(_) => "bands",
            Command::Flatband(_) => "flatband",
            Command::Ids(_) => "ids",
            Command::Szego(_) => "szego",
            Command::Rkph(_) => "rkph",
            Command::Lifshitz(_) => "lifshitz",
            Command::Wegner(_) => "wegner",
            Command::Localize(_) => "localize",
            Command::Carleson(_) => "carleson",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CarlemanArgs {
    /// Window half-width.
    #[arg(long = "M", default_value_t = 40.0)]
    pub m: f64,
    #[arg(long, default_value_t = 0.05)]
    pub dx: f64,
    #[arg(long, default_value = "a")]
    pub scheme: Scheme,
    #[arg(long, default_value_t = 120)]
    pub lambda_count: usize,
    /// Allowed sup distance to the closed form on λ ∈ [0.5, 2.8].
    #[arg(long, default_value_t = 0.01)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeriodicModel {
    /// Unit atoms at τn.
    Single,
    /// +1 at τn, −1 at τn + τ/2.
    Flat,
    /// Cell given by --cell.
    Cell,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BandsArgs {
    #[arg(long, default_value_t = TWO_PI)]
    pub tau: f64,
    #[arg(long, value_enum, default_value_t = PeriodicModel::Single)]
    pub model: PeriodicModel,
    /// Period cell as JSON pairs [[offset, weight], ...].
    #[arg(long)]
    pub cell: Option<String>,
    #[arg(long, default_value_t = 64)]
    pub k_count: usize,
    /// Fiber truncation N (matrix size 2N + 1).
    #[arg(long, default_value_t = 12)]
    pub fiber: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FlatbandArgs {
    #[arg(long, default_value_t = TWO_PI)]
    pub tau: f64,
    /// Allowed relative deviation of F² − G² from its constant.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SectionModel {
    Carleman,
    /// Unit atoms at τn.
    Lattice,
    /// +1 at τn, −1 at τn + τ/2.
    FlatPair,
    /// Measure given by --measure.
    Measure,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct IdsArgs {
    #[arg(long, value_enum, default_value_t = SectionModel::Measure)]
    pub model: SectionModel,
    /// Measure literal file.
    #[arg(long)]
    #[serde(skip)]
    pub measure: Option<PathBuf>,
    #[arg(skip)]
    pub measure_literal: Option<String>,
    #[arg(long, default_value_t = TWO_PI)]
    pub tau: f64,
    #[arg(long, default_value = "a")]
    pub scheme: Scheme,
    #[arg(long = "M", default_value_t = 40.0)]
    pub m: f64,
    #[arg(long, default_value_t = 0.05)]
    pub dx: f64,
    #[arg(long)]
    pub lambda_lo: Option<f64>,
    #[arg(long)]
    pub lambda_hi: Option<f64>,
    #[arg(long, default_value_t = 120)]
    pub lambda_count: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SzegoArgs {
    #[arg(long, value_enum, default_value_t = SectionModel::Carleman)]
    pub model: SectionModel,
    /// Lattice period; should divide every 2M.
    #[arg(long, default_value_t = 4.0)]
    pub tau: f64,
    /// Window half-widths, increasing.
    #[arg(long = "M", value_delimiter = ',', default_value = "10,20,40,80")]
    pub ms: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub dx: f64,
    /// Support of the test function φ.
    #[arg(long, default_value_t = 0.2)]
    pub phi_lo: f64,
    #[arg(long, default_value_t = 1.0)]
    pub phi_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RkphArgs {
    #[arg(long, default_value_t = TWO_PI)]
    pub tau: f64,
    /// Window n ∈ [−N, N].
    #[arg(long = "N", default_value_t = 256)]
    pub sites: usize,
    #[arg(long, default_value = "two-point:1,2,0.5", value_parser = parse_dist)]
    pub dist: DistributionSpec,
    #[arg(long = "R", default_value_t = 50)]
    pub replicas: usize,
    #[arg(long, default_value_t = 200)]
    pub lambda_count: usize,
    /// Edge tolerance of the product-set check.
    #[arg(long, default_value_t = 0.02)]
    pub edge_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct LifshitzArgs {
    #[arg(long, default_value_t = 4.0)]
    pub tau: f64,
    #[arg(long = "N", default_value_t = 256)]
    pub sites: usize,
    #[arg(long, default_value = "two-point:1,2,0.5", value_parser = parse_dist)]
    pub dist: DistributionSpec,
    #[arg(long = "R", default_value_t = 10_000)]
    pub replicas: usize,
    /// Grid points in the fit window.
    #[arg(long, default_value_t = 40)]
    pub points: usize,
    /// Fit window δ ∈ [fit_lo, fit_hi]·(σ_max − σ_min).
    #[arg(long, default_value_t = 0.02)]
    pub fit_lo: f64,
    #[arg(long, default_value_t = 0.2)]
    pub fit_hi: f64,
    /// Accepted slope range.
    #[arg(long, default_value_t = -0.9, allow_hyphen_values = true)]
    pub slope_min: f64,
    #[arg(long, default_value_t = -0.25, allow_hyphen_values = true)]
    pub slope_max: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct WegnerArgs {
    #[arg(long, default_value_t = 4.0)]
    pub tau: f64,
    #[arg(long = "N", default_value_t = 256)]
    pub sites: usize,
    #[arg(long, default_value = "uniform:1,2", value_parser = parse_dist)]
    pub dist: DistributionSpec,
    #[arg(long = "R", default_value_t = 200)]
    pub replicas: usize,
    #[arg(long, default_value_t = 101)]
    pub lambda_count: usize,
    #[arg(long, default_value_t = 0.1)]
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct LocalizeArgs {
    /// Periods to compare; the ratio is last over first.
    #[arg(long, value_delimiter = ',', default_value = "1,12")]
    pub tau: Vec<f64>,
    #[arg(long = "N", default_value_t = 256)]
    pub sites: usize,
    #[arg(long, default_value = "uniform:1,2", value_parser = parse_dist)]
    pub dist: DistributionSpec,
    #[arg(long = "R", default_value_t = 50)]
    pub replicas: usize,
    #[arg(long, default_value_t = 3.0)]
    pub min_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CarlesonArgs {
    /// Measure literal file; otherwise random measures are drawn.
    #[arg(long)]
    #[serde(skip)]
    pub measure: Option<PathBuf>,
    #[arg(skip)]
    pub measure_literal: Option<String>,
    #[arg(long, default_value_t = 200)]
    pub random: usize,
    #[arg(long, default_value_t = 20)]
    pub max_atoms: usize,
}

/// Either a JSON literal such as `{"kind": "Uniform", "lo": 1, "hi": 2}` or
/// the short forms `two-point:a,b,p`, `uniform:lo,hi` and `point:c`.
pub fn parse_dist(s: &str) -> Result<DistributionSpec, String> {
    let d = if s.trim_start().starts_with('{') {
        serde_json::from_str(s).map_err(|e| format!("distribution literal: {e}"))?
    } else {
        let (kind, rest) = s.split_once(':').ok_or_else(|| format!("malformed distribution `{s}`"))?;
        let v: Vec<f64> = rest
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| format!("distribution parameters `{rest}`: {e}"))?;
        match (kind, v.as_slice()) {
            ("two-point", &[a, b, p]) => DistributionSpec::TwoPoint { a, b, p },
            ("uniform", &[lo, hi]) => DistributionSpec::Uniform { lo, hi },
            ("point", &[value]) => DistributionSpec::PointMass { value },
            _ => return Err(format!("unknown distribution `{s}`")),
        }
    };
    d.validate().map_err(|e| e.to_string())?;
    Ok(d)
}
