//! Random Kronig–Penney–Hankel model Σ_n κ(n) ⟨·, ψ_n⟩ ψ_n with
//! ψ_n = β(· − τn) and i.i.d. positive weights κ(n).
//!
//! On the window n ∈ [−N, N] the operator has the nonzero spectrum of
//! K^{1/2} Γ K^{1/2}, Γ_{ij} = ½ sech(τ(i − j)/2).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::single_band_edges;
use crate::fmt17;
use crate::operators::{gram_overlap, Scheme, SymmetricSection, TAIL_CUTOFF};
use crate::spectra::{count_above, eig_sym, linear_fit, validate_lambda_grid, IdsCurve, Spectrum};

/// Law of the weights κ(n).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum DistributionSpec {
    /// κ = a with probability p, b otherwise.
    TwoPoint { a: f64, b: f64, p: f64 },
    Uniform { lo: f64, hi: f64 },
    PointMass { value: f64 },
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DistributionSpec::TwoPoint { a, b, p } => a > 0.0 && b > 0.0 && (0.0..=1.0).contains(&p) && a.is_finite() && b.is_finite(),
            DistributionSpec::Uniform { lo, hi } => lo > 0.0 && hi > lo && hi.is_finite(),
            DistributionSpec::PointMass { value } => value > 0.0 && value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "weight law must have compact support in (0, inf) and p in [0, 1], got {self:?}"
            )))
        }
    }

    /// Points of supp 𝐏₀ for discrete laws, the interval ends for Uniform.
    fn atoms(&self) -> Vec<f64> {
        match *self {
            DistributionSpec::TwoPoint { a, b, p } => {
                let mut v = Vec::new();
                if p > 0.0 {
                    v.push(a);
                }
                if p < 1.0 {
                    v.push(b);
                }
                v
            }
            DistributionSpec::Uniform { lo, hi } => vec![lo, hi],
            DistributionSpec::PointMass { value } => vec![value],
        }
    }

    pub fn kappa_min(&self) -> f64 {
        self.atoms().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn kappa_max(&self) -> f64 {
        self.atoms().into_iter().fold(0.0, f64::max)
    }

    /// Bound on the density of 𝐏₀, when it has one.
    pub fn density_bound(&self) -> Option<f64> {
        match *self {
            DistributionSpec::Uniform { lo, hi } => Some(1.0 / (hi - lo)),
            _ => None,
        }
    }

    fn draw(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            DistributionSpec::TwoPoint { a, b, p } => {
                if rng.random::<f64>() < p {
                    a
                } else {
                    b
                }
            }
            DistributionSpec::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            DistributionSpec::PointMass { value } => value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RkphConfig {
    pub tau: f64,
    /// Window n ∈ [−N, N].
    pub sites: usize,
    pub dist: DistributionSpec,
    pub replicas: usize,
    pub seed: u64,
    pub lambdas: Vec<f64>,
}

impl RkphConfig {
    pub fn validate(&self) -> Result<()> {
        self.dist.validate()?;
        if !(self.tau > 0.0) {
            return Err(Error::Domain(format!("period must be positive, got {}", self.tau)));
        }
        if self.sites < 1 || self.replicas < 1 {
            return Err(Error::Domain("need at least one site and one replica".into()));
        }
        validate_lambda_grid(&self.lambdas)
    }

    /// 2τN.
    pub fn window_length(&self) -> f64 {
        2.0 * self.tau * self.sites as f64
    }

    /// (2N + 1)/(2τN).
    pub fn total_mass(&self) -> f64 {
        (2 * self.sites + 1) as f64 / self.window_length()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the random stream of one replica.
pub fn replica_seed(seed: u64, replica: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ replica.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// κ(−N), …, κ(N) for one replica.
pub fn sample_weights(cfg: &RkphConfig, replica: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(replica_seed(cfg.seed, replica as u64));
    (0..2 * cfg.sites + 1).map(|_| cfg.dist.draw(&mut rng)).collect()
}

/// K^{1/2} Γ K^{1/2} with Γ_{ij} = ½ sech(τ(i − j)/2).
pub fn window_matrix(kappa: &[f64], tau: f64) -> Result<SymmetricSection> {
    if let Some(k) = kappa.iter().find(|k| !(**k > 0.0)) {
        return Err(Error::Domain(format!("weights must be positive, got {k}")));
    }
    let n = kappa.len();
    let half = (n / 2) as f64;
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let d = tau * (i as f64 - j as f64);
            if d.abs() <= TAIL_CUTOFF {
                data[i * n + j] = (kappa[i] * kappa[j]).sqrt() * gram_overlap(d, 0.0);
            }
        }
    }
    let labels = (0..n).map(|i| tau * (i as f64 - half)).collect();
    SymmetricSection::from_row_major(data, n, Scheme::B, tau * half, labels)
}

/// Spectrum of every replica, indexed by replica.
pub fn mc_spectra(cfg: &RkphConfig) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    (0..cfg.replicas)
        .into_par_iter()
        .map(|r| window_matrix(&sample_weights(cfg, r), cfg.tau)?.eigenvalues())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct McIds {
    pub mean: IdsCurve,
    pub stderr: Vec<f64>,
    pub per_replica: Vec<Vec<f64>>,
    /// (2N + 1)/(2τN).
    pub total_mass: f64,
    pub replicas: usize,
}

impl McIds {
    /// CSV with header "lambda,ids_mean,ids_stderr,replicas".
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,ids_mean,ids_stderr,replicas\n");
        for ((l, m), s) in self.mean.lambdas.iter().zip(&self.mean.values).zip(&self.stderr) {
            out.push_str(&format!("{},{},{},{}\n", fmt17(*l), fmt17(*m), fmt17(*s), self.replicas));
        }
        out
    }
}

/// Ensemble-averaged counting IDS from precomputed replica spectra.
pub fn ids_from_spectra(cfg: &RkphConfig, spectra: &[Vec<f64>]) -> McIds {
    let norm = cfg.window_length();
    let per_replica: Vec<Vec<f64>> = spectra
        .iter()
        .map(|e| cfg.lambdas.iter().map(|&l| count_above(e, l) as f64 / norm).collect())
        .collect();
    let r = per_replica.len() as f64;
    let g = cfg.lambdas.len();
    let mut mean = vec![0.0; g];
    let mut stderr = vec![0.0; g];
    for j in 0..g {
        // sequential sums in replica order keep the reduction deterministic
        let m = per_replica.iter().map(|c| c[j]).sum::<f64>() / r;
        mean[j] = m;
        if per_replica.len() > 1 {
            let var = per_replica.iter().map(|c| (c[j] - m).powi(2)).sum::<f64>() / (r - 1.0);
            stderr[j] = (var / r).sqrt();
        }
    }
    McIds {
        mean: IdsCurve {
            lambdas: cfg.lambdas.clone(),
            values: mean,
            normalization: norm,
            scheme: "mc".into(),
            model: format!("rkph(tau={}, sites={})", cfg.tau, cfg.sites),
        },
        stderr,
        per_replica,
        total_mass: cfg.total_mass(),
        replicas: spectra.len(),
    }
}

pub fn mc_ids(cfg: &RkphConfig) -> Result<McIds> {
    Ok(ids_from_spectra(cfg, &mc_spectra(cfg)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSupport {
    /// Disjoint, ascending.
    pub intervals: Vec<(f64, f64)>,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub e_min: f64,
    pub e_max: f64,
}

impl SpectrumSupport {
    pub fn contains(&self, lambda: f64, tol: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| lambda >= a - tol && lambda <= b + tol)
    }
}

/// supp 𝐏₀ · [E_min, E_max] as a union of disjoint intervals.
pub fn spectrum_support(dist: &DistributionSpec, tau: f64) -> Result<SpectrumSupport> {
    dist.validate()?;
    let (e_min, e_max) = single_band_edges(tau);
    let mut pieces: Vec<(f64, f64)> = match *dist {
        DistributionSpec::Uniform { lo, hi } => vec![(lo * e_min, hi * e_max)],
        _ => dist.atoms().iter().map(|&s| (s * e_min, s * e_max)).collect(),
    };
    pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    for (a, b) in pieces {
        match intervals.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => intervals.push((a, b)),
        }
    }
    Ok(SpectrumSupport {
        intervals,
        sigma_min: dist.kappa_min() * e_min,
        sigma_max: dist.kappa_max() * e_max,
        e_min,
        e_max,
    })
}

/// Least-squares slope of log(−log ν̂(edge − δ)) against log δ over the
/// grid points with δ in the fit window and 0 < ν̂ < 1.
pub fn lifshitz_slope(curve: &IdsCurve, edge: f64, fit_window: (f64, f64)) -> Result<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = curve
        .lambdas
        .iter()
        .zip(&curve.values)
        .filter_map(|(&l, &v)| {
            let d = edge - l;
            (d >= fit_window.0 && d <= fit_window.1 && v > 0.0 && v < 1.0).then(|| (d.ln(), (-v.ln()).ln()))
        })
        .unzip();
    if x.len() < 4 {
        return Err(Error::DegenerateFit(format!(
            "only {} usable points in the fit window {fit_window:?}",
            x.len()
        )));
    }
    Ok(linear_fit(&x, &y)?.0)
}

/// max_λ λ ρ(λ) / (ρ_max κ_max), ρ the finite-difference density of the
/// averaged curve.
///
/// The stencil is widened until the mean increment of the curve across it
/// is at least three times the largest standard error.
pub fn wegner_ratio(curve: &IdsCurve, stderr: &[f64], dist: &DistributionSpec) -> Result<f64> {
    let rho_max = dist
        .density_bound()
        .ok_or_else(|| Error::Unsupported(format!("{dist:?} has no density bound")))?;
    let l = &curve.lambdas;
    let v = &curve.values;
    let n = l.len();
    if n < 3 {
        return Err(Error::DegenerateFit("need at least 3 grid points".into()));
    }
    let noise = stderr.iter().copied().fold(0.0, f64::max);
    let span = (v[0] - v[n - 1]).abs();
    let mut stride = 1;
    while 2 * stride < n - 1 && noise > 0.0 && (span * stride as f64 / (n - 1) as f64) < 3.0 * noise {
        stride += 1;
    }
    let bound = rho_max * dist.kappa_max();
    let mut best = 0.0_f64;
    for i in stride..n - stride {
        let rho = -(v[i + stride] - v[i - stride]) / (l[i + stride] - l[i - stride]);
        best = best.max(l[i] * rho / bound);
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipationStats {
    pub mean_ipr: f64,
    pub per_vector: Vec<f64>,
}

/// IPR(v) = Σ v_i⁴ for every eigenvector.
pub fn participation_stats(spec: &Spectrum) -> Result<ParticipationStats> {
    let vectors = spec
        .vectors
        .as_ref()
        .ok_or_else(|| Error::Unsupported("participation ratios need eigenvectors".into()))?;
    let n = spec.dim();
    let per_vector: Vec<f64> = (0..n)
        .map(|k| (0..n).map(|i| vectors[i * n + k].powi(4)).sum())
        .collect();
    let mean_ipr = if n == 0 { 0.0 } else { per_vector.iter().sum::<f64>() / n as f64 };
    Ok(ParticipationStats { mean_ipr, per_vector })
}

/// Mean IPR over replicas, each averaged over its spectrum.
pub fn mean_ipr(cfg: &RkphConfig) -> Result<f64> {
    cfg.validate()?;
    let per: Vec<f64> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let a = window_matrix(&sample_weights(cfg, r), cfg.tau)?;
            Ok(participation_stats(&eig_sym(&a, true)?)?.mean_ipr)
        })
        .collect::<Result<_>>()?;
    Ok(per.iter().sum::<f64>() / per.len() as f64)
}

/// Run manifest {τ, N, dist, R, seed, κ_min, κ_max, σ_min, σ_max} as JSON.
pub fn manifest_json(cfg: &RkphConfig) -> Result<String> {
    let s = spectrum_support(&cfg.dist, cfg.tau)?;
    let dist = serde_json::to_string(&cfg.dist).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(format!(
        "{{\"tau\": {}, \"N\": {}, \"dist\": {dist}, \"R\": {}, \"seed\": {}, \"kappa_min\": {}, \"kappa_max\": {}, \"sigma_min\": {}, \"sigma_max\": {}}}\n",
        fmt17(cfg.tau),
        cfg.sites,
        cfg.replicas,
        cfg.seed,
        fmt17(cfg.dist.kappa_min()),
        fmt17(cfg.dist.kappa_max()),
        fmt17(s.sigma_min),
        fmt17(s.sigma_max),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::geometric_grid;
    use std::f64::consts::PI;

    fn cfg(dist: DistributionSpec, tau: f64, sites: usize, replicas: usize) -> RkphConfig {
        RkphConfig {
            tau,
            sites,
            dist,
            replicas,
            seed: 0,
            lambdas: geometric_grid(0.05, 3.0, 60),
        }
    }

    const TWO: DistributionSpec = DistributionSpec::TwoPoint { a: 1.0, b: 2.0, p: 0.5 };
    const UNI: DistributionSpec = DistributionSpec::Uniform { lo: 1.0, hi: 2.0 };

    #[test]
    fn sampling() {
        let c = cfg(DistributionSpec::PointMass { value: 1.5 }, 2.0, 10, 1);
        assert!(sample_weights(&c, 0).iter().all(|&k| k == 1.5));
        let mut big = cfg(TWO, 2.0, 50_000, 1);
        big.seed = 17;
        let w = sample_weights(&big, 3);
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        assert!((mean - 1.5).abs() < 0.01);
        assert_eq!(w, sample_weights(&big, 3));
        assert_ne!(w, sample_weights(&big, 4));
        let u = sample_weights(&cfg(UNI, 2.0, 1000, 1), 0);
        assert!(u.iter().all(|&k| (1.0..2.0).contains(&k)));
    }

    #[test]
    fn small_windows() {
        let one = window_matrix(&[3.0], 2.0).unwrap();
        assert_eq!(one.eigenvalues().unwrap(), vec![1.5]);
        let k = [1.0, 1.3, 2.0, 1.7, 1.1];
        let mut e = window_matrix(&k, 40.0).unwrap().eigenvalues().unwrap();
        e.sort_by(f64::total_cmp);
        let mut half: Vec<f64> = k.iter().map(|x| 0.5 * x).collect();
        half.sort_by(f64::total_cmp);
        for (a, b) in e.iter().zip(&half) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn point_mass_fills_the_band() {
        let tau = 2.0 * PI;
        let e = window_matrix(&vec![1.0; 801], tau).unwrap().eigenvalues().unwrap();
        let (lo, hi) = single_band_edges(tau);
        assert!(e[0] > lo - 1e-3 && e[0] < lo + 1e-3);
        assert!(e[800] <= hi + 1e-12 && e[800] > hi - 1e-4);
    }

    #[test]
    fn supports() {
        let tau = 2.0 * PI;
        let (lo, hi) = single_band_edges(tau);
        let p = spectrum_support(&DistributionSpec::PointMass { value: 1.0 }, tau).unwrap();
        assert_eq!(p.intervals, vec![(lo, hi)]);
        let t = spectrum_support(&TWO, tau).unwrap();
        assert_eq!(t.intervals, vec![(lo, hi), (2.0 * lo, 2.0 * hi)]);
        let u = spectrum_support(&UNI, tau).unwrap();
        assert_eq!(u.intervals, vec![(lo, 2.0 * hi)]);
        // union of s·[lo, hi] over a fine grid of s ∈ [1, 2] is connected
        let mut covered: Vec<(f64, f64)> = (0..=1000).map(|i| 1.0 + i as f64 / 1000.0).map(|s| (s * lo, s * hi)).collect();
        covered.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(covered.windows(2).all(|w| w[1].0 <= w[0].1));
        assert_eq!((u.sigma_min, u.sigma_max), (lo, 2.0 * hi));
    }

    #[test]
    fn synthetic_lifshitz_curves() {
        let edge = 2.0;
        let curve = |lo: f64, hi: f64, f: &dyn Fn(f64) -> f64| {
            let lambdas: Vec<f64> = geometric_grid(lo, hi, 50).iter().rev().map(|d| edge - d).collect();
            IdsCurve {
                values: lambdas.iter().map(|l| f(edge - l)).collect(),
                lambdas,
                normalization: 1.0,
                scheme: "synthetic".into(),
                model: "synthetic".into(),
            }
        };
        let lif = curve(0.01, 0.5, &|d| (-d.powf(-0.5)).exp());
        assert!((lifshitz_slope(&lif, edge, (0.01, 0.5)).unwrap() + 0.5).abs() < 1e-6);
        // a power law has slope 1/ln δ, which vanishes at the edge
        let vh = curve(1e-8, 1e-4, &|d| d * d);
        let s = lifshitz_slope(&vh, edge, (1e-8, 1e-4)).unwrap();
        assert!(s < 0.0 && s > -0.15, "{s}");
        assert!(lifshitz_slope(&lif, edge, (0.6, 0.7)).is_err());
    }

    #[test]
    fn synthetic_wegner_curves() {
        let dist = UNI;
        let c = dist.density_bound().unwrap() * dist.kappa_max();
        let lambdas = geometric_grid(0.1, 3.0, 400);
        let exact = IdsCurve {
            values: lambdas.iter().map(|l| 10.0 - c * l.ln()).collect(),
            lambdas: lambdas.clone(),
            normalization: 1.0,
            scheme: "synthetic".into(),
            model: "synthetic".into(),
        };
        let r = wegner_ratio(&exact, &vec![0.0; 400], &dist).unwrap();
        assert!((r - 1.0).abs() < 1e-4, "{r}");
        let zero = IdsCurve {
            values: vec![0.0; 400],
            ..exact.clone()
        };
        assert_eq!(wegner_ratio(&zero, &vec![0.0; 400], &dist).unwrap(), 0.0);
        assert!(wegner_ratio(&exact, &[], &TWO).is_err());
    }

    #[test]
    fn participation_extremes() {
        let basis = Spectrum {
            values: vec![1.0, 2.0],
            vectors: Some(vec![1.0, 0.0, 0.0, 1.0]),
            residual: Some(0.0),
        };
        assert_eq!(participation_stats(&basis).unwrap().mean_ipr, 1.0);
        let d = 4;
        let mut v = vec![0.0; d * d];
        for i in 0..d {
            v[i * d] = 0.5;
        }
        let flat = Spectrum {
            values: vec![0.0; d],
            vectors: Some(v),
            residual: None,
        };
        assert_eq!(participation_stats(&flat).unwrap().per_vector[0], 0.25);
    }

    #[test]
    fn mc_mass_and_worker_independence() {
        let c = cfg(TWO, 2.0 * PI, 32, 6);
        let run = |w| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .unwrap()
                .install(|| mc_ids(&c).unwrap())
        };
        let a = run(1);
        assert_eq!(a, run(4));
        assert_eq!(a.total_mass, 65.0 / (64.0 * 2.0 * PI));
        let low = IdsCurve::from_eigenvalues(&[], 1.0, &[1e-9], "x", "x");
        assert!(low.values[0] == 0.0);
        let spectra = mc_spectra(&RkphConfig { lambdas: vec![1e-9], ..c.clone() }).unwrap();
        let m = ids_from_spectra(&RkphConfig { lambdas: vec![1e-9], ..c.clone() }, &spectra);
        assert!((m.mean.values[0] - a.total_mass).abs() < 1e-15);
        assert!(a.to_csv().starts_with("lambda,ids_mean,ids_stderr,replicas\n"));
        let json = manifest_json(&c).unwrap();
        assert!(json.contains("\"kind\":\"TwoPoint\""));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]

            #[test]
            fn eigenvalues_scale_and_stay_in_range(
                k in prop::collection::vec(1.0f64..2.0, 1..60),
                tau in 2.0f64..8.0,
                c in 0.1f64..10.0
            ) {
                let e = window_matrix(&k, tau).unwrap().eigenvalues().unwrap();
                prop_assert_eq!(e.len(), k.len());
                prop_assert!(e.iter().all(|&v| v > 0.0));
                let (lo, hi) = single_band_edges(tau);
                let kmax = k.iter().copied().fold(0.0, f64::max);
                prop_assert!(e[e.len() - 1] <= kmax * hi * (1.0 + 1e-12));
                let kmin = k.iter().copied().fold(f64::INFINITY, f64::min);
                prop_assert!(e[0] >= kmin * lo * (1.0 - 1e-12));
                let scaled: Vec<f64> = k.iter().map(|x| x * c).collect();
                let f = window_matrix(&scaled, tau).unwrap().eigenvalues().unwrap();
                for (a, b) in e.iter().zip(&f) {
                    prop_assert!((a * c - b).abs() <= 1e-12 * b.abs().max(1.0));
                }
            }
        }
    }
}
