use std::collections::BTreeMap;
use std::f64::consts::{E, PI};
use std::fmt;

use hankel_core::floquet::{
    band_structure, flat_pair_estar, flat_pair_invariant, ids_from_bands, midpoint_k_grid, FourierData,
    DEFAULT_DISCARD_FLOOR, DEFAULT_FLAT_TOL,
};
use hankel_core::measures::{
    parse_measure, pull_back, push_forward, random_sigma, Axis, AtomicMeasure, CarlesonComparison, Measure,
};
use hankel_core::operators::{atom_section, gram_overlap, KernelSpec, DEFAULT_ATOM_CAP, TAIL_CUTOFF};
use hankel_core::rkph::{
    ids_from_spectra, lifshitz_slope, manifest_json, mc_ids, mc_spectra, mean_ipr, participation_stats,
    sample_weights, spectrum_support, wegner_ratio, DistributionSpec, RkphConfig,
};
use hankel_core::specfun::{elliptic_k, gamma_abs2_half_line};
use hankel_core::spectra::{
    carleman_ids, count_above, geometric_grid, ids_from_section, linear_grid, section, szego_rate,
    szego_triple, IdsCurve, SmoothBump, Spectrum, REFERENCE_MARGIN,
};
use hankel_core::{fmt17, Error};
use serde::Serialize;
use serde_json::Value;

use crate::config::*;
use crate::envelope::Check;

#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Usage(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Usage(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Res<T> = Result<T, Failure>;

#[derive(Debug, Default)]
pub struct Report {
    pub csv: Option<String>,
    pub outputs: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
}

impl Report {
    fn put(&mut self, key: &str, value: impl Serialize) {
        self.outputs
            .insert(key.into(), serde_json::to_value(value).expect("serializable output"));
    }

    fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, passed, detail));
    }
}

pub fn execute(config: &RunConfig) -> Res<Report> {
    let seed = config.seed;
    match &config.command {
        Command::Carleman(a) => carleman(a),
        Command::Bands(a) => bands(a),
        Command::Flatband(a) => flatband(a),
        Command::Ids(a) => ids(a),
        Command::Szego(a) => szego(a),
        Command::Rkph(a) => rkph(a, seed),
        Command::Lifshitz(a) => lifshitz(a, seed),
        Command::Wegner(a) => wegner(a, seed),
        Command::Localize(a) => localize(a, seed),
        Command::Carleson(a) => carleson(a, seed),
        Command::Selftest => Ok(selftest()),
    }
}

/// Atoms beyond this distance from a window never reach its sections.
fn lattice_margin(tau: f64) -> f64 {
    REFERENCE_MARGIN + TAIL_CUTOFF + 10.0 + tau
}

fn model_spec(model: SectionModel, tau: f64, half_width: f64, literal: Option<&str>) -> Res<KernelSpec> {
    let reach = half_width + lattice_margin(tau);
    Ok(match model {
        SectionModel::Carleman => KernelSpec::Carleman,
        SectionModel::Lattice => KernelSpec::positive(AtomicMeasure::lattice(tau, -reach, reach))?,
        SectionModel::FlatPair => {
            KernelSpec::positive(AtomicMeasure::periodic(tau, &[(0.0, 1.0), (0.5 * tau, -1.0)], -reach, reach)?)?
        }
        SectionModel::Measure => {
            let text = literal.ok_or_else(|| Failure::Usage("--model measure needs --measure <file>".into()))?;
            let m = parse_measure(text)?;
            let m = if m.axis() == Axis::HalfLine { push_forward(&m)? } else { m };
            KernelSpec::positive(m)?
        }
    })
}

fn positive_mass(eigenvalues: &[f64], normalization: f64) -> f64 {
    let top = eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    count_above(eigenvalues, DEFAULT_DISCARD_FLOOR * top) as f64 / normalization
}

fn carleman(a: &CarlemanArgs) -> Res<Report> {
    let mut r = Report::default();
    let norm = 2.0 * a.m;
    let s = section(&KernelSpec::Carleman, a.scheme, a.m, a.dx)?;
    let e = s.eigenvalues()?;
    let lambdas = geometric_grid(0.02 * PI, PI, a.lambda_count.max(2));
    let curve = IdsCurve::from_eigenvalues(&e, norm, &lambdas, a.scheme.tag(), "carleman");
    let top = e.last().copied().unwrap_or(0.0);
    let probe = linear_grid(0.5, 2.8, 231);
    let mut distance = 0.0_f64;
    for &l in &probe {
        distance = distance.max((count_above(&e, l) as f64 / norm - carleman_ids(l)?).abs());
    }
    r.put("dimension", s.dim());
    r.put("top_eigenvalue", top);
    r.put("closed_form_sup_distance", distance);
    r.put("m1", s.trace() / norm);
    r.put("m2", s.trace_of_square() / norm);
    r.check("top_eigenvalue_within_norm", top <= PI * (1.0 + 1e-12), format!("{} <= pi", fmt17(top)));
    r.check(
        "closed_form_distance",
        distance <= a.tol,
        format!("sup over [0.5, 2.8] = {} <= {}", fmt17(distance), a.tol),
    );
    r.csv = Some(curve.to_csv());
    Ok(r)
}

fn periodic_data(model: PeriodicModel, tau: f64, cell: Option<&str>, n_c: usize) -> Res<FourierData> {
    Ok(match model {
        PeriodicModel::Single => FourierData::single_band(tau, n_c)?,
        PeriodicModel::Flat => FourierData::flat_pair(tau, n_c)?,
        PeriodicModel::Cell => {
            let text = cell.ok_or_else(|| Failure::Usage("--model cell needs --cell".into()))?;
            let pairs: Vec<[f64; 2]> =
                serde_json::from_str(text).map_err(|e| Failure::Usage(format!("--cell: {e}")))?;
            let pairs: Vec<(f64, f64)> = pairs.into_iter().map(|[x, w]| (x, w)).collect();
            FourierData::from_cell(tau, &pairs, n_c)?
        }
    })
}

fn bands(a: &BandsArgs) -> Res<Report> {
    let mut r = Report::default();
    let data = periodic_data(a.model, a.tau, a.cell.as_deref(), 2 * a.fiber)?;
    let b = band_structure(&data, a.k_count, a.fiber, DEFAULT_FLAT_TOL, DEFAULT_DISCARD_FLOOR)?;
    let lowest = b
        .bands
        .iter()
        .filter(|band| band.sign > 0)
        .map(|band| band.min)
        .fold(f64::INFINITY, f64::min);
    if lowest.is_finite() {
        let mass = ids_from_bands(&b, &[0.5 * lowest])?.values[0];
        r.put("positive_mass", mass);
    }
    let edges: Value =
        serde_json::from_str(&b.edges_json()).map_err(|e| Failure::Usage(format!("edges: {e}")))?;
    r.put("edges", edges);
    r.put("tangencies", &b.tangencies);
    r.put("aliasing_warning", data.aliasing_warning);
    r.csv = Some(b.to_csv());
    Ok(r)
}

fn flatband(a: &FlatbandArgs) -> Res<Report> {
    let mut r = Report::default();
    let rep = flat_pair_estar(a.tau)?;
    let c = rep.estar * a.tau;
    let mut csv = String::from("k,invariant,relative_deviation\n");
    for k in midpoint_k_grid(a.tau, 64) {
        let v = flat_pair_invariant(a.tau, k);
        csv.push_str(&format!("{},{},{}\n", fmt17(k), fmt17(v), fmt17(v / (c * c) - 1.0)));
    }
    r.check(
        "invariant_constant",
        rep.constancy_deviation <= a.tol,
        format!("{} <= {}", fmt17(rep.constancy_deviation), a.tol),
    );
    r.check(
        "fiber_spectrum_flat",
        rep.fiber_deviation <= 1e-8,
        format!("max |eig -+ {}| = {}", fmt17(rep.band_energy), fmt17(rep.fiber_deviation)),
    );
    r.put("estar", rep.estar);
    r.put("band_energy", rep.band_energy);
    r.put("constancy_deviation", rep.constancy_deviation);
    r.put("fiber_deviation", rep.fiber_deviation);
    r.put("elliptic", rep.params);
    r.csv = Some(csv);
    Ok(r)
}

fn ids(a: &IdsArgs) -> Res<Report> {
    let mut r = Report::default();
    let spec = model_spec(a.model, a.tau, a.m, a.measure_literal.as_deref())?;
    let lambdas = match (a.lambda_lo, a.lambda_hi) {
        (None, None) => {
            let ch = spec.symbol_bound()?;
            geometric_grid(0.02 * PI * ch, PI * ch, a.lambda_count.max(2))
        }
        (Some(lo), Some(hi)) if lo > 0.0 && hi > lo => geometric_grid(lo, hi, a.lambda_count.max(2)),
        _ => return Err(Failure::Usage("--lambda-lo and --lambda-hi go together, 0 < lo < hi".into())),
    };
    let s = section(&spec, a.scheme, a.m, a.dx)?;
    let e = s.eigenvalues()?;
    let curve = ids_from_section(&spec, a.scheme, a.m, a.dx, &lambdas)?;
    r.put("dimension", s.dim());
    r.put("positive_mass", positive_mass(&e, 2.0 * a.m));
    r.put("eigenvalue_range", [e.first().copied().unwrap_or(0.0), e.last().copied().unwrap_or(0.0)]);
    r.csv = Some(curve.to_csv());
    Ok(r)
}

fn szego(a: &SzegoArgs) -> Res<Report> {
    let mut r = Report::default();
    if !matches!(a.model, SectionModel::Carleman | SectionModel::Lattice) {
        return Err(Failure::Usage("szego supports --model carleman or lattice".into()));
    }
    let phi = SmoothBump::centered(a.phi_lo, a.phi_hi)?;
    let mut csv = String::from("M,t_a,t_proj,t_b,max_difference\n");
    let mut diffs = Vec::new();
    for &m in &a.ms {
        let spec = model_spec(a.model, a.tau, m, None)?;
        let t = szego_triple(&spec, m, a.dx, &phi)?;
        let d = t.max_pairwise_difference();
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt17(m),
            fmt17(t.t_a),
            fmt17(t.t_proj),
            fmt17(t.t_b),
            fmt17(d)
        ));
        diffs.push(d);
    }
    let rate = szego_rate(&a.ms, &diffs)?;
    r.put("c", rate.c);
    r.put("max_difference", &diffs);
    r.check("within_rate", rate.within_rate, format!("d(M) <= {}/sqrt(M)", fmt17(rate.c)));
    r.check("monotone", rate.monotone, "d(M) non-increasing");
    r.csv = Some(csv);
    Ok(r)
}

fn manifest(cfg: &RkphConfig) -> Res<Value> {
    serde_json::from_str(&manifest_json(cfg)?).map_err(|e| Failure::Usage(format!("manifest: {e}")))
}

fn rkph(a: &RkphArgs, seed: u64) -> Res<Report> {
    let mut r = Report::default();
    let support = spectrum_support(&a.dist, a.tau)?;
    let cfg = RkphConfig {
        tau: a.tau,
        sites: a.sites,
        dist: a.dist,
        replicas: a.replicas,
        seed,
        lambdas: linear_grid(0.5 * support.sigma_min, 1.1 * support.sigma_max, a.lambda_count.max(2)),
    };
    let spectra = mc_spectra(&cfg)?;
    let mc = ids_from_spectra(&cfg, &spectra);
    let norm = cfg.window_length();
    let mass = spectra.iter().map(|e| count_above(e, 0.0) as f64 / norm).sum::<f64>() / spectra.len() as f64;
    let all = spectra.iter().flatten().copied();
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let gaps: Vec<(f64, f64)> = support
        .intervals
        .windows(2)
        .map(|w| (w[0].1 + a.edge_tol, w[1].0 - a.edge_tol))
        .filter(|g| g.1 > g.0)
        .collect();
    let in_gaps = spectra
        .iter()
        .flatten()
        .filter(|&&x| gaps.iter().any(|g| x > g.0 && x < g.1))
        .count();
    let outside = spectra
        .iter()
        .flatten()
        .filter(|&&x| !support.contains(x, a.edge_tol))
        .count();
    r.check(
        "total_mass",
        (mass - cfg.total_mass()).abs() <= 1e-12 * cfg.total_mass(),
        format!("{} vs (2N+1)/(2 tau N) = {}", fmt17(mass), fmt17(cfg.total_mass())),
    );
    r.check("gaps_empty", in_gaps == 0, format!("{in_gaps} eigenvalues in {gaps:?}"));
    r.check("within_support", outside == 0, format!("{outside} eigenvalues outside the support"));
    r.put("manifest", manifest(&cfg)?);
    r.put("support", &support.intervals);
    r.put("gaps", &gaps);
    r.put("eigenvalue_range", [lo, hi]);
    r.put("total_mass", mass);
    r.csv = Some(mc.to_csv());
    Ok(r)
}

fn lifshitz(a: &LifshitzArgs, seed: u64) -> Res<Report> {
    let mut r = Report::default();
    if !(0.0 < a.fit_lo && a.fit_lo < a.fit_hi) || a.points < 4 {
        return Err(Failure::Usage("need 0 < fit_lo < fit_hi and at least 4 points".into()));
    }
    let support = spectrum_support(&a.dist, a.tau)?;
    let edge = support.sigma_max;
    let width = edge - support.sigma_min;
    let window = (a.fit_lo * width, a.fit_hi * width);
    let deltas = geometric_grid(window.0, window.1, a.points);
    let cfg = RkphConfig {
        tau: a.tau,
        sites: a.sites,
        dist: a.dist,
        replicas: a.replicas,
        seed,
        lambdas: deltas.iter().rev().map(|d| edge - d).collect(),
    };
    let mc = mc_ids(&cfg)?;
    let slope = lifshitz_slope(&mc.mean, edge, (window.0 * (1.0 - 1e-9), window.1 * (1.0 + 1e-9)))?;
    r.check(
        "slope_in_range",
        slope >= a.slope_min && slope <= a.slope_max,
        format!("{} in [{}, {}]", fmt17(slope), a.slope_min, a.slope_max),
    );
    r.put("slope", slope);
    r.put("edge", edge);
    r.put("fit_window", [window.0, window.1]);
    r.put("manifest", manifest(&cfg)?);
    r.csv = Some(mc.to_csv());
    Ok(r)
}

fn wegner(a: &WegnerArgs, seed: u64) -> Res<Report> {
    let mut r = Report::default();
    let support = spectrum_support(&a.dist, a.tau)?;
    let cfg = RkphConfig {
        tau: a.tau,
        sites: a.sites,
        dist: a.dist,
        replicas: a.replicas,
        seed,
        lambdas: linear_grid(0.95 * support.sigma_min, 1.05 * support.sigma_max, a.lambda_count.max(3)),
    };
    let mc = mc_ids(&cfg)?;
    let ratio = wegner_ratio(&mc.mean, &mc.stderr, &a.dist)?;
    r.check("wegner_bound", ratio <= 1.0 + a.tol, format!("{} <= {}", fmt17(ratio), 1.0 + a.tol));
    r.put("ratio", ratio);
    r.put("manifest", manifest(&cfg)?);
    r.csv = Some(mc.to_csv());
    Ok(r)
}

fn localize(a: &LocalizeArgs, seed: u64) -> Res<Report> {
    let mut r = Report::default();
    if a.tau.is_empty() {
        return Err(Failure::Usage("--tau needs at least one period".into()));
    }
    let mut csv = String::from("tau,mean_ipr\n");
    let mut iprs = Vec::new();
    for &tau in &a.tau {
        let cfg = RkphConfig {
            tau,
            sites: a.sites,
            dist: a.dist,
            replicas: a.replicas,
            seed,
            lambdas: vec![1.0],
        };
        let v = mean_ipr(&cfg)?;
        csv.push_str(&format!("{},{}\n", fmt17(tau), fmt17(v)));
        iprs.push(v);
    }
    let ratio = iprs[iprs.len() - 1] / iprs[0];
    r.check("ipr_ratio", ratio >= a.min_ratio, format!("{} >= {}", fmt17(ratio), a.min_ratio));
    r.put("mean_ipr", &iprs);
    r.put("ratio", ratio);
    r.csv = Some(csv);
    Ok(r)
}

fn carleson(a: &CarlesonArgs, seed: u64) -> Res<Report> {
    let mut r = Report::default();
    let family: Vec<AtomicMeasure> = match &a.measure_literal {
        Some(text) => {
            let m = parse_measure(text)?;
            let m = if m.axis() == Axis::Line { pull_back(&m)? } else { m };
            match m {
                Measure::Atomic(m) => vec![m],
                Measure::Density(_) => {
                    return Err(Failure::Usage("carleson constants need an atomic measure".into()))
                }
            }
        }
        None => (0..a.random as u64).map(|i| random_sigma(seed, i, a.max_atoms)).collect(),
    };
    let mut csv = String::from("index,atoms,carleson,carleson_integer_scales,local_bound\n");
    let mut fails = [0usize; 4];
    let mut worst = 0.0_f64;
    for (i, m) in family.iter().enumerate() {
        let c = CarlesonComparison::of(m)?;
        csv.push_str(&format!(
            "{i},{},{},{},{}\n",
            m.len(),
            fmt17(c.carleson),
            fmt17(c.carleson_integer_scales),
            fmt17(c.local_bound)
        ));
        let flags = [
            c.local_within_carleson(),
            c.carleson_within_local(),
            c.integer_scales_within_local(),
            c.carleson_within_scaled_local(),
        ];
        for (f, ok) in fails.iter_mut().zip(flags) {
            *f += usize::from(!ok);
        }
        worst = worst.max(c.carleson * (1.0 - 1.0 / E) / c.local_bound);
    }
    let n = family.len();
    r.check("local_within_e_carleson", fails[0] == 0, format!("{} of {n} violate", fails[0]));
    r.check("carleson_within_local", fails[1] == 0, format!("{} of {n} violate", fails[1]));
    r.check("integer_scales_within_local", fails[2] == 0, format!("{} of {n} violate", fails[2]));
    r.check("carleson_within_e_local", fails[3] == 0, format!("{} of {n} violate", fails[3]));
    r.put("measures", n);
    r.put("max_carleson_over_local_bound", worst);
    r.csv = Some(csv);
    Ok(r)
}

fn selftest() -> Report {
    let mut r = Report::default();
    let mut case = |name: &str, ok: Result<bool, Error>| match ok {
        Ok(ok) => r.check(name, ok, ""),
        Err(e) => r.check(name, false, e.to_string()),
    };
    case("gamma_half", Ok((gamma_abs2_half_line(0.0) - PI).abs() < 1e-14));
    case("gram_diagonal", Ok(gram_overlap(1.3, 1.3) == 0.5));
    case(
        "projection_atom",
        (|| {
            let m = AtomicMeasure::new(Axis::Line, [(0.0, 2.0)])?;
            let e = atom_section(&m, -1.0, 1.0, DEFAULT_ATOM_CAP)?.eigenvalues()?;
            Ok(e.len() == 1 && (e[0] - 1.0).abs() < 1e-15)
        })(),
    );
    case(
        "single_site_window",
        hankel_core::rkph::window_matrix(&[3.0], 2.0)
            .and_then(|w| w.eigenvalues())
            .map(|e| (e[0] - 1.5).abs() < 1e-15),
    );
    let point = RkphConfig {
        tau: 1.0,
        sites: 8,
        dist: DistributionSpec::PointMass { value: 2.5 },
        replicas: 1,
        seed: 0,
        lambdas: vec![1.0],
    };
    case("point_mass_weights", Ok(sample_weights(&point, 0).iter().all(|&k| k == 2.5)));
    let two = RkphConfig {
        dist: DistributionSpec::TwoPoint { a: 1.0, b: 2.0, p: 0.5 },
        ..point.clone()
    };
    case("replica_determinism", Ok(sample_weights(&two, 3) == sample_weights(&two, 3)));
    let basis = Spectrum {
        values: vec![1.0, 2.0],
        vectors: Some(vec![1.0, 0.0, 0.0, 1.0]),
        residual: Some(0.0),
    };
    case("basis_ipr", participation_stats(&basis).map(|p| p.mean_ipr == 1.0));
    let uniform = Spectrum {
        values: vec![1.0],
        vectors: Some(vec![1.0]),
        residual: Some(0.0),
    };
    case("single_vector_ipr", participation_stats(&uniform).map(|p| p.mean_ipr == 1.0));
    let edge = 2.0;
    let deltas = geometric_grid(0.01, 0.5, 50);
    let lambdas: Vec<f64> = deltas.iter().rev().map(|d| edge - d).collect();
    let lif = IdsCurve {
        values: lambdas.iter().map(|l| (-(edge - l).powf(-0.5)).exp()).collect(),
        lambdas,
        normalization: 1.0,
        scheme: "synthetic".into(),
        model: "synthetic".into(),
    };
    case(
        "lifshitz_synthetic",
        lifshitz_slope(&lif, edge, (0.01, 0.5)).map(|s| (s + 0.5).abs() < 1e-6),
    );
    let dist = DistributionSpec::Uniform { lo: 1.0, hi: 2.0 };
    let c = 2.0;
    let grid = linear_grid(1.0, 3.0, 41);
    let exact = IdsCurve {
        values: grid.iter().map(|l| c * (3.0_f64 / l).ln()).collect(),
        lambdas: grid.clone(),
        normalization: 1.0,
        scheme: "synthetic".into(),
        model: "synthetic".into(),
    };
    case(
        "wegner_synthetic",
        wegner_ratio(&exact, &[0.0; 41], &dist).map(|w| (w - 1.0).abs() < 1e-3),
    );
    let zero = IdsCurve {
        values: vec![0.0; 41],
        ..exact
    };
    case("wegner_zero", wegner_ratio(&zero, &[0.0; 41], &dist).map(|w| w == 0.0));
    case(
        "push_forward_unit_atom",
        (|| {
            let m = AtomicMeasure::new(Axis::HalfLine, [(1.0, 0.7)])?;
            Ok(match push_forward(&m.into())? {
                Measure::Atomic(p) => p.atoms()[0].position == 0.0 && p.atoms()[0].weight == 0.7,
                Measure::Density(_) => false,
            })
        })(),
    );
    case("carleman_top_edge", carleman_ids(PI).map(|v| v == 0.0));
    case("elliptic_k_zero", elliptic_k(0.0).map(|k| (k - 0.5 * PI).abs() < 1e-15));
    r.put("cases", r.checks.len());
    r
}
