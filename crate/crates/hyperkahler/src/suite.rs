//! Randomized verification suites.
//!
//! Every trial draws its own seed from the suite seed and the trial index,
//! so trials run in parallel and the report stays byte-stable.

use std::fmt;
use std::str::FromStr;

use hyperkahler_core::exterior::{
    binomial, factorial, hodge_star, inner_product, volume_form, wedge, wedge_power, BasisIndex,
};
use hyperkahler_core::lefschetz::{self, composite_identity_report, hard_lefschetz_check, pairing_matrix};
use hyperkahler_core::linalg;
use hyperkahler_core::quaternionic::{HyperKahlerSpace, MAX_K};
use hyperkahler_core::reconstruct::{self, raw_metric, SymplecticTriple, Verdict};
use hyperkahler_core::torus::{self, lattice_harmonic_oracle, su2_holonomy_from_angles, tangent_model};
use hyperkahler_core::{Axis, KForm, MetricData, Orientation};
use nalgebra::DMatrix;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::num::Num;
use crate::report::{merge, CheckRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    ExteriorLaws,
    Quaternionic,
    LefschetzIdentities,
    ReconstructRoundtrip,
    TorusTheorem,
    All,
}

impl Suite {
    pub const PARTS: [Suite; 5] = [
        Suite::ExteriorLaws,
        Suite::Quaternionic,
        Suite::LefschetzIdentities,
        Suite::ReconstructRoundtrip,
        Suite::TorusTheorem,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::ExteriorLaws => "exterior-laws",
            Suite::Quaternionic => "quaternionic",
            Suite::LefschetzIdentities => "lefschetz-identities",
            Suite::ReconstructRoundtrip => "reconstruct-roundtrip",
            Suite::TorusTheorem => "torus-theorem",
            Suite::All => "all",
        }
    }

    fn stream(self) -> u64 {
        Suite::PARTS.iter().position(|&s| s == self).unwrap_or(5) as u64
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::PARTS
            .iter()
            .chain(&[Suite::All])
            .copied()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                format!(
                    "unknown suite `{s}`; expected one of exterior-laws, quaternionic, \
                     lefschetz-identities, reconstruct-roundtrip, torus-theorem, all"
                )
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    /// Relation residuals of an input triple.
    pub validation: Num,
    /// Symmetry gate on the reconstructed metric.
    pub symmetry: Num,
    /// Operator identities.
    pub identity: Num,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            validation: Num(1e-9),
            symmetry: Num(reconstruct::SYMMETRY_GATE),
            identity: Num(1e-9),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub suite: Suite,
    pub k: Vec<usize>,
    pub seed: u64,
    pub trials: usize,
    pub tolerances: Tolerances,
    /// Lattice size for the harmonic oracle; zero skips it.
    pub oracle_grid: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            suite: Suite::All,
            k: vec![1],
            seed: 0,
            trials: 20,
            tolerances: Tolerances::default(),
            oracle_grid: 6,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.k.is_empty() {
            return Err("at least one k is required".into());
        }
        if let Some(&k) = self.k.iter().find(|&&k| k == 0 || k > MAX_K) {
            return Err(format!("k = {k} outside 1..={MAX_K}"));
        }
        if self.oracle_grid != 0 && !(4..=10).contains(&self.oracle_grid) {
            return Err(format!("oracle grid {} outside 4..=10", self.oracle_grid));
        }
        Ok(())
    }
}

/// Seed of trial `trial` in suite `suite`: ChaCha stream per suite, one
/// word per trial.
pub fn trial_seed(seed: u64, suite: Suite, trial: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(suite.stream());
    rng.set_word_pos(2 * trial as u128);
    rng.next_u64()
}

pub fn run_suite(config: &SuiteConfig) -> Vec<CheckRecord> {
    let parts: Vec<Suite> = match config.suite {
        Suite::All => Suite::PARTS.to_vec(),
        s => vec![s],
    };
    let mut rows = Vec::new();
    for suite in parts {
        for &k in &config.k {
            rows.extend(run_part(config, suite, k));
        }
    }
    rows
}

fn run_part(config: &SuiteConfig, suite: Suite, k: usize) -> Vec<CheckRecord> {
    let tol = config.tolerances;
    let trial = |t: usize| -> Vec<CheckRecord> {
        let seed = trial_seed(config.seed, suite, t * MAX_K + k);
        let rows = match suite {
            Suite::ExteriorLaws => exterior_trial(k, seed),
            Suite::Quaternionic => quaternionic_trial(k, seed, &tol),
            Suite::LefschetzIdentities => lefschetz_trial(k, seed, &tol),
            Suite::ReconstructRoundtrip => reconstruct_trial(k, seed, &tol),
            Suite::TorusTheorem => torus_trial(k, seed, &tol),
            Suite::All => unreachable!(),
        };
        rows.unwrap_or_else(|e| vec![error_row(&format!("{suite}.error"), "p:linalg", &e)])
    };
    let per_trial: Vec<Vec<CheckRecord>> = (0..config.trials).into_par_iter().map(trial).collect();
    let mut rows: Vec<CheckRecord> = per_trial.into_iter().flatten().collect();
    match suite {
        Suite::ExteriorLaws => rows.push(double_star_all_blades(4 * k)),
        Suite::LefschetzIdentities => rows.extend(standard_identities(k)),
        Suite::TorusTheorem if k == 1 && config.oracle_grid != 0 => {
            rows.extend(oracle_rows(config.seed, config.oracle_grid))
        }
        _ => {}
    }
    let tag = format!("[k={k}]");
    merge(rows.into_iter().map(|mut r| {
        r.name.push_str(&tag);
        r
    }))
}

/// A failed row carrying the error text in its name.
fn error_row(name: &str, anchor: &'static str, e: &dyn fmt::Display) -> CheckRecord {
    CheckRecord::new(format!("{name} ({e})"), anchor, f64::INFINITY, 0.0)
}

type TrialResult = hyperkahler_core::Result<Vec<CheckRecord>>;

/// A random form: dense when the degree has at most 70 blades, else 16
/// random blades.
pub fn random_form(dim: usize, degree: usize, rng: &mut ChaCha8Rng) -> KForm {
    let count = binomial(dim, degree);
    if count <= 70 {
        let values: Vec<f64> = (0..count).map(|_| rng.random_range(-1.0..1.0)).collect();
        KForm::from_dense(dim, degree, &values).expect("degree within dimension")
    } else {
        let terms = (0..16).map(|_| {
            let r = rng.random_range(0..count);
            (BasisIndex::unrank(dim, degree, r), rng.random_range(-1.0..1.0))
        });
        KForm::from_terms(dim, degree, terms).expect("degree within dimension")
    }
}

fn random_metric(dim: usize, rng: &mut ChaCha8Rng) -> MetricData {
    let a = DMatrix::from_fn(dim, dim, |i, j| {
        let x: f64 = rng.random_range(-0.3..0.3);
        if i == j {
            1.0 + x
        } else {
            x
        }
    });
    MetricData::new(linalg::symmetrize(&(a.transpose() * &a)), Orientation::Positive)
        .expect("perturbed identity is positive definite")
}

/// `|β∧★α − ⟨β,α⟩ vol| / (|α| |β| vol)` on the top coefficient.
pub fn star_defining_residual(alpha: &KForm, beta: &KForm, metric: &MetricData) -> hyperkahler_core::Result<f64> {
    let full = BasisIndex::full(metric.dim());
    let lhs = wedge(beta, &hodge_star(alpha, metric)?)?.coeff(full);
    let vol = metric.volume_coefficient();
    let rhs = inner_product(beta, alpha, metric)? * vol;
    let scale = (inner_product(alpha, alpha, metric)? * inner_product(beta, beta, metric)?).sqrt() * vol.abs();
    Ok(if scale == 0.0 {
        (lhs - rhs).abs()
    } else {
        (lhs - rhs).abs() / scale
    })
}

fn relative_form_diff(a: &KForm, b: &KForm) -> hyperkahler_core::Result<f64> {
    let scale = a.norm_inf().max(b.norm_inf());
    let d = a.max_abs_diff(b)?;
    Ok(if scale == 0.0 { d } else { d / scale })
}

/// Graded anticommutativity, associativity and the star defining property
/// for random forms in dimension `4k`.
fn exterior_trial(k: usize, seed: u64) -> TrialResult {
    let dim = 4 * k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = rng.random_range(0..=dim);
    let q = rng.random_range(0..=dim - p);
    let r = rng.random_range(0..=dim - p - q);
    let (a, b, c) = (
        random_form(dim, p, &mut rng),
        random_form(dim, q, &mut rng),
        random_form(dim, r, &mut rng),
    );

    let ab = wedge(&a, &b)?;
    let ba = wedge(&b, &a)?;
    let sign = if p * q % 2 == 0 { 1.0 } else { -1.0 };
    let anti = ab.max_abs_diff(&ba.scale(sign))?;

    let left = wedge(&ab, &c)?;
    let right = wedge(&a, &wedge(&b, &c)?)?;
    let assoc = relative_form_diff(&left, &right)?;

    let metric = random_metric(dim, &mut rng);
    let beta = random_form(dim, p, &mut rng);
    let star = star_defining_residual(&a, &beta, &metric)?;

    Ok(vec![
        CheckRecord::new("exterior.anticommutativity", "p:linalg", anti, 0.0),
        CheckRecord::new("exterior.associativity", "p:linalg", assoc, 1e-12),
        CheckRecord::new("exterior.star_defining", "p:linalg", star, 1e-12),
    ])
}

/// `★★ = (−1)^{p(d−p)}` on every blade under the identity metric.
pub fn double_star_all_blades(dim: usize) -> CheckRecord {
    let metric = MetricData::identity(dim).expect("supported dimension");
    let mut worst = 0.0f64;
    for p in 0..=dim {
        let sign = if p * (dim - p) % 2 == 0 { 1.0 } else { -1.0 };
        for blade in BasisIndex::all_of_degree(dim, p) {
            let e = KForm::basis(dim, blade).expect("valid blade");
            let twice = hodge_star(&hodge_star(&e, &metric).expect("star"), &metric).expect("star");
            worst = worst.max(twice.max_abs_diff(&e.scale(sign)).expect("same degree"));
        }
    }
    CheckRecord::new("exterior.double_star_sign", "p:linalg", worst, 0.0)
}

/// `‖ω^n − n!·vol‖ / (n!·|vol|)` on the top coefficient.
pub fn volume_power_residual(space: &HyperKahlerSpace, axis: Axis) -> hyperkahler_core::Result<f64> {
    let n = space.n();
    let top = wedge_power(&space.kahler_form(axis)?, n)?;
    let vol = volume_form(&space.metric());
    let expected = vol.scale(factorial(n));
    relative_form_diff(&top, &expected)
}

fn quaternionic_trial(k: usize, seed: u64, tol: &Tolerances) -> TrialResult {
    let space = HyperKahlerSpace::random(k, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let rel = space.check_quaternionic(tol.identity.0);
    let mut volume = 0.0f64;
    for a in Axis::ALL {
        volume = volume.max(volume_power_residual(&space, a)?);
    }
    let (x, y, z): (f64, f64, f64) = (
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    let norm = (x * x + y * y + z * z).sqrt().max(1e-3);
    let u = space.unit_structure(x / norm, y / norm, z / norm)?;
    let id = DMatrix::<f64>::identity(space.dim(), space.dim());
    let unit = (&u * &u + &id).norm() / id.norm();
    Ok(vec![
        CheckRecord::new("quaternionic.relations", "e:quaternionic", rel.worst(), tol.identity.0),
        CheckRecord::new("quaternionic.volume_power", "p:linalg", volume, tol.identity.0),
        CheckRecord::new("quaternionic.unit_structure", "e:quaternionic", unit, tol.identity.0),
    ])
}

fn lefschetz_trial(k: usize, seed: u64, tol: &Tolerances) -> TrialResult {
    let space = HyperKahlerSpace::random(k, seed)?;
    let mut rows = Vec::new();
    let mut invertible = true;
    let mut skew = 0.0f64;
    let mut key = 0.0f64;
    let mut pairings = Vec::new();
    for a in Axis::ALL {
        invertible &= hard_lefschetz_check(&space, a, 1e-10)?.invertible;
        let p = pairing_matrix(&space, a)?.matrix;
        skew = skew.max(linalg::skew_residual(&p));
        key = key.max(lefschetz::key_identity_residual(&space, a)?);
        pairings.push(p);
    }
    let composite = composite_identity_report(&space)?;
    let worst = |xs: &[f64]| xs.iter().fold(0.0f64, |m, &x| m.max(x));
    rows.push(CheckRecord::flag("lefschetz.hard_lefschetz", "p:karshon", invertible));
    rows.push(CheckRecord::new("lefschetz.pairing_skew", "p:karshon", skew, 1e-12));
    rows.push(CheckRecord::new(
        "lefschetz.key_identity",
        "p:linalg",
        key,
        tol.identity.0,
    ));
    rows.push(CheckRecord::new(
        "lefschetz.composite",
        "p:linalg",
        worst(&composite.composite),
        1e-8,
    ));
    rows.push(CheckRecord::new(
        "lefschetz.anticommutation",
        "e:conds2",
        worst(&composite.anticommutation),
        1e-8,
    ));

    let triple = SymplecticTriple::from_bilinear([pairings[0].clone(), pairings[1].clone(), pairings[2].clone()])?;
    let rec = reconstruct::reconstruct(&triple, tol.validation.0)?;
    let dual = linalg::spd_inverse(space.gram()).expect("validated gram") * factorial(space.n() - 1);
    rows.push(CheckRecord::new(
        "lefschetz.pairing_metric",
        "p:linalg",
        linalg::relative_diff(&rec.metric.g, &dual),
        tol.symmetry.0,
    ));
    Ok(rows)
}

/// The identities on the standard space, where they hold exactly.
fn standard_identities(k: usize) -> Vec<CheckRecord> {
    let space = HyperKahlerSpace::standard(k).expect("supported k");
    let mut key = 0.0f64;
    for a in Axis::ALL {
        key = key.max(lefschetz::key_identity_residual(&space, a).expect("standard space"));
    }
    let composite = composite_identity_report(&space).expect("standard space");
    vec![
        CheckRecord::new("lefschetz.key_identity_standard", "p:linalg", key, 0.0),
        CheckRecord::new("lefschetz.composite_standard", "e:conds2", composite.worst(), 1e-12),
    ]
}

fn reconstruct_trial(k: usize, seed: u64, tol: &Tolerances) -> TrialResult {
    let space = HyperKahlerSpace::random(k, seed)?;
    let triple = SymplecticTriple::from_space(&space)?;
    let rec = reconstruct::reconstruct(&triple, tol.validation.0)?;
    let mut structures = 0.0f64;
    for a in Axis::ALL {
        structures = structures.max(linalg::relative_diff(rec.structures.structure(a), space.structure(a)));
    }
    let flipped_triple = triple.with_map(Axis::K, -triple.map(Axis::K));
    let flipped = reconstruct::reconstruct(&flipped_triple, tol.validation.0)?;
    let dim = space.dim();
    let flipped_ok = flipped.verdict == Verdict::PseudoHyperKahler { plus: 0, minus: dim };

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5851_f42d_4c95_7f2d);
    let noise = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
    let noise = &noise - noise.transpose();
    let perturbed = |eps: f64| {
        let w = triple.bilinear(Axis::J) + &noise * eps;
        let t = SymplecticTriple::from_bilinear([triple.bilinear(Axis::I), w, triple.bilinear(Axis::K)])?;
        raw_metric(&t).map(|(_, r)| r)
    };
    let (r1, r2) = (perturbed(1e-6)?, perturbed(2e-6)?);
    let slope = (r2 / r1 - 2.0).abs();

    Ok(vec![
        CheckRecord::new(
            "reconstruct.validation",
            "e:conds",
            rec.validation.worst(),
            tol.validation.0,
        ),
        CheckRecord::new(
            "reconstruct.metric",
            "p:hyper-kahler",
            linalg::relative_diff(&rec.metric.g, space.gram()),
            tol.symmetry.0,
        ),
        CheckRecord::new("reconstruct.structures", "p:hyper-kahler", structures, tol.symmetry.0),
        CheckRecord::flag("reconstruct.positive_definite", "e:posdef", rec.positivity.pass),
        CheckRecord::flag("reconstruct.flipped_signature", "p:hyper-kahler", flipped_ok),
        CheckRecord::new("reconstruct.perturbation_slope", "p:hyper-kahler", slope, 0.05),
    ])
}

/// Uniform angles in `[0, 2π)`; generic with probability one.
fn random_angles(count: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..count)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect()
}

fn torus_trial(k: usize, seed: u64, tol: &Tolerances) -> TrialResult {
    if k > torus::MAX_TORUS_K {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi = su2_holonomy_from_angles(&random_angles(4 * k, &mut rng))?;
    let model = tangent_model(&phi, k, 1.0)?;
    let report = torus::moduli_hyperkahler_check(&model, tol.validation.0)?;
    let rec = &report.reconstruction;
    Ok(vec![
        CheckRecord::flag("torus.tangent_dim", "e:tangent", model.dim() == model.rank() * 4 * k),
        CheckRecord::new("torus.l2_metric", "p:linalg", report.metric_residual, tol.symmetry.0),
        CheckRecord::flag("torus.positive_definite", "e:posdef", rec.positivity.pass),
        CheckRecord::new(
            "torus.quaternionic",
            "e:quaternionic",
            rec.structures.quaternionic.worst(),
            tol.identity.0,
        ),
        CheckRecord::flag("torus.verdict", "t:moduli", report.theorem_backed()),
    ])
}

/// Kernel dimension of the lattice Laplacian at one generic and the trivial
/// tuple against `4r`.
fn oracle_rows(seed: u64, grid: usize) -> Vec<CheckRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, Suite::TorusTheorem, usize::MAX >> 1));
    let mut rows = Vec::new();
    let trivial = su2_holonomy_from_angles(&[0.0; 4]).expect("identity tuple");
    let generic = loop {
        let phi = su2_holonomy_from_angles(&random_angles(4, &mut rng)).expect("diagonal tuple");
        if torus::check_lattice_resonance(&phi, grid).is_ok() {
            break phi;
        }
    };
    for (name, phi) in [("torus.oracle_trivial", trivial), ("torus.oracle_generic", generic)] {
        let expected = torus::invariant_subalgebra(&phi, torus::DEFAULT_RANK_TOL)
            .map(|inv| 4 * inv.rank())
            .unwrap_or(usize::MAX);
        let row = match lattice_harmonic_oracle(&phi, 1, grid) {
            Ok(r) => CheckRecord::new(name, "e:hodge", r.kernel_dim.abs_diff(expected) as f64, 0.0),
            Err(e) => error_row(name, "e:hodge", &e),
        };
        rows.push(row);
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::PARTS.iter().chain(&[Suite::All]) {
            assert_eq!(s.name().parse::<Suite>().unwrap(), *s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn trial_seeds_are_distinct_and_stable() {
        let a: Vec<u64> = (0..50).map(|t| trial_seed(7, Suite::Quaternionic, t)).collect();
        let b: Vec<u64> = (0..50).map(|t| trial_seed(7, Suite::Quaternionic, t)).collect();
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 50);
        assert_ne!(
            trial_seed(7, Suite::Quaternionic, 0),
            trial_seed(7, Suite::ExteriorLaws, 0)
        );
    }

    #[test]
    fn config_validation() {
        assert!(SuiteConfig::default().validate().is_ok());
        let bad = SuiteConfig {
            k: vec![5],
            ..SuiteConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn small_runs_pass() {
        for suite in Suite::PARTS {
            let config = SuiteConfig {
                suite,
                k: vec![1, 2],
                seed: 3,
                trials: 4,
                oracle_grid: 0,
                ..SuiteConfig::default()
            };
            let rows = run_suite(&config);
            assert!(!rows.is_empty());
            for r in &rows {
                assert!(r.pass, "{} residual {:?}", r.name, r.residual);
            }
        }
    }
}
