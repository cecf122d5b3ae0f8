//! Synthetic expensive black-box problems.
//!
//! Every objective is maximized; minimization test functions are negated
//! when registered. Each problem also carries a [`DurationModel`] giving the
//! simulated wall-clock cost of one evaluation.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::{BoxDomain, DesignPoint};
use crate::error::{Error, Result};

pub type ObjectiveFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Simulated seconds taken by one evaluation.
///
/// Every draw consumes exactly one standard-normal variate from the duration
/// stream, whether or not the model uses it, so two schedules that issue the
/// same number of evaluations see the same random stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DurationModel {
    Constant {
        seconds: f64,
    },
    /// `median · exp(sigma · z)`.
    LogNormal {
        median: f64,
        sigma: f64,
    },
    /// `base · (1 + slope · u_c) · exp(sigma · z)` where `u_c` is the
    /// normalized value of coordinate `coordinate`.
    InputDependent {
        base: f64,
        slope: f64,
        coordinate: usize,
        sigma: f64,
    },
    /// The `i`-th issued evaluation takes `seconds[i % len]`.
    Table {
        seconds: Vec<f64>,
    },
}

impl Default for DurationModel {
    fn default() -> Self {
        DurationModel::LogNormal {
            median: 10.0,
            sigma: 0.5,
        }
    }
}

impl DurationModel {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "duration {name} = {v} must be positive"
                )))
            }
        };
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "duration {name} = {v} must be >= 0"
                )))
            }
        };
        match self {
            DurationModel::Constant { seconds } => positive("seconds", *seconds),
            DurationModel::LogNormal { median, sigma } => {
                positive("median", *median)?;
                nonneg("sigma", *sigma)
            }
            DurationModel::InputDependent {
                base,
                slope,
                coordinate,
                sigma,
            } => {
                positive("base", *base)?;
                nonneg("slope", *slope)?;
                nonneg("sigma", *sigma)?;
                if *coordinate >= dim {
                    return Err(Error::invalid(format!(
                        "duration coordinate {coordinate} out of range for dimension {dim}"
                    )));
                }
                Ok(())
            }
            DurationModel::Table { seconds } => {
                if seconds.is_empty() {
                    return Err(Error::invalid("duration table is empty"));
                }
                seconds.iter().try_for_each(|s| positive("table entry", *s))
            }
        }
    }

    /// Draws the duration of the `issue_index`-th evaluation, at `point`.
    pub fn draw<R: Rng + ?Sized>(
        &self,
        point: &DesignPoint,
        issue_index: usize,
        rng: &mut R,
    ) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        match self {
            DurationModel::Constant { seconds } => *seconds,
            DurationModel::LogNormal { median, sigma } => median * (sigma * z).exp(),
            DurationModel::InputDependent {
                base,
                slope,
                coordinate,
                sigma,
            } => base * (1.0 + slope * point.coords()[*coordinate]) * (sigma * z).exp(),
            DurationModel::Table { seconds } => seconds[issue_index % seconds.len()],
        }
    }
}

/// A named black-box objective over a box domain.
#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub domain: BoxDomain,
    objective: ObjectiveFn,
    pub duration_model: DurationModel,
    pub known_optimum: Option<f64>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("duration_model", &self.duration_model)
            .field("known_optimum", &self.known_optimum)
            .finish_non_exhaustive()
    }
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        domain: BoxDomain,
        objective: ObjectiveFn,
        known_optimum: Option<f64>,
    ) -> Self {
        Self {
            name: name.into(),
            domain,
            objective,
            duration_model: DurationModel::default(),
            known_optimum,
        }
    }

    pub fn with_duration_model(mut self, model: DurationModel) -> Self {
        self.duration_model = model;
        self
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Objective at a point given in domain coordinates.
    pub fn evaluate_raw(&self, x: &[f64]) -> f64 {
        (self.objective)(x)
    }

    /// Objective at a normalized design point.
    pub fn evaluate(&self, p: &DesignPoint) -> f64 {
        (self.objective)(&self.domain.denormalize(p))
    }

    pub fn objective(&self) -> ObjectiveFn {
        Arc::clone(&self.objective)
    }

    /// The three stock duration models: constant, log-normal, and growing
    /// with the first coordinate.
    pub fn duration_presets() -> [DurationModel; 3] {
        [
            DurationModel::Constant { seconds: 10.0 },
            DurationModel::default(),
            DurationModel::InputDependent {
                base: 5.0,
                slope: 2.0,
                coordinate: 0,
                sigma: 0.25,
            },
        ]
    }
}

/// One component metric of a weighted figure of merit.
#[derive(Clone)]
pub struct Metric {
    pub name: String,
    pub f: ObjectiveFn,
}

impl fmt::Debug for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Metric")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

/// `FOM(x) = Σ α_i f_i(x)`.
#[derive(Debug, Clone)]
pub struct FomSpec {
    metrics: Vec<Metric>,
    weights: Vec<f64>,
}

impl FomSpec {
    pub fn new(metrics: Vec<Metric>, weights: Vec<f64>) -> Result<Self> {
        if metrics.len() != weights.len() {
            return Err(Error::invalid(format!(
                "{} metrics but {} weights",
                metrics.len(),
                weights.len()
            )));
        }
        if metrics.is_empty() {
            return Err(Error::invalid(
                "a figure of merit needs at least one metric",
            ));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
            return Err(Error::invalid(format!("weight {w} is not finite")));
        }
        Ok(Self { metrics, weights })
    }

    pub fn metrics(&self) -> &[Metric] {
        &self.metrics
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_objective(self) -> ObjectiveFn {
        Arc::new(move |x| fom_evaluate(&self, x))
    }
}

pub fn fom_evaluate(spec: &FomSpec, x: &[f64]) -> f64 {
    spec.metrics
        .iter()
        .zip(&spec.weights)
        .map(|(m, a)| a * (m.f)(x))
        .sum()
}

pub const BRANIN_MAX: f64 = -0.397_887_357_729_738;
pub const HARTMANN6_MAX: f64 = 3.322_368_011_391_339;

/// Branin-Hoo, to be minimized, on `[-5, 10] × [0, 15]`.
pub fn branin(x: &[f64]) -> f64 {
    use std::f64::consts::PI;
    let (x1, x2) = (x[0], x[1]);
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let t = 1.0 / (8.0 * PI);
    (x2 - b * x1 * x1 + c * x1 - 6.0).powi(2) + 10.0 * (1.0 - t) * x1.cos() + 10.0
}

const HARTMANN_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const HARTMANN_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
const HARTMANN_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];

/// Hartmann-6, to be minimized, on `[0, 1]^6`.
pub fn hartmann6(x: &[f64]) -> f64 {
    -HARTMANN_ALPHA
        .iter()
        .zip(HARTMANN_A.iter().zip(&HARTMANN_P))
        .map(|(alpha, (a, p))| {
            let inner: f64 = (0..6).map(|j| a[j] * (x[j] - p[j]).powi(2)).sum();
            alpha * (-inner).exp()
        })
        .sum::<f64>()
}

// Synthetic amplifier metrics on [0, 1]^10. They only mimic the shape of a
// sizing problem (competing gain, bandwidth and stability terms).

pub fn opamp_gain(x: &[f64]) -> f64 {
    use std::f64::consts::PI;
    60.0 + 15.0 * (PI * x[0]).sin() * (0.5 + 0.5 * x[1]) - 10.0 * (x[2] - 0.7).powi(2)
        + 5.0 * x[3] * (1.0 - x[4])
}

pub fn opamp_ugf(x: &[f64]) -> f64 {
    use std::f64::consts::PI;
    3.0 * (-4.0 * ((x[4] - 0.6).powi(2) + (x[5] - 0.4).powi(2))).exp()
        + 1.5 * x[6] * (1.0 - x[2])
        + 0.5 * (3.0 * PI * x[7]).cos() * x[8]
}

pub fn opamp_pm(x: &[f64]) -> f64 {
    use std::f64::consts::PI;
    60.0 + 25.0 * (1.0 - x[4]) * x[2] - 30.0 * (x[5] - 0.3).powi(2) - 8.0 * x[6] * x[6]
        + 5.0 * (2.0 * PI * x[9]).sin()
}

/// `1.2·GAIN + 10·UGF + 1.6·PM` over the synthetic amplifier metrics.
pub fn opamp_fom_spec() -> FomSpec {
    FomSpec::new(
        vec![
            Metric {
                name: "gain".into(),
                f: Arc::new(opamp_gain),
            },
            Metric {
                name: "ugf".into(),
                f: Arc::new(opamp_ugf),
            },
            Metric {
                name: "pm".into(),
                f: Arc::new(opamp_pm),
            },
        ],
        vec![1.2, 10.0, 1.6],
    )
    .expect("static spec")
}

/// A named metric usable as a component of a custom figure of merit.
pub fn metric_by_name(name: &str) -> Option<(ObjectiveFn, usize)> {
    let f: ObjectiveFn = match name {
        "gain" => Arc::new(opamp_gain),
        "ugf" => Arc::new(opamp_ugf),
        "pm" => Arc::new(opamp_pm),
        "neg_branin" => Arc::new(|x: &[f64]| -branin(x)),
        "neg_hartmann6" => Arc::new(|x: &[f64]| -hartmann6(x)),
        _ => return None,
    };
    let dim = match name {
        "neg_branin" => 2,
        "neg_hartmann6" => 6,
        _ => 10,
    };
    Some((f, dim))
}

pub fn builtin_problems() -> Vec<Problem> {
    vec![
        Problem::new(
            "branin",
            BoxDomain::new(vec![-5.0, 0.0], vec![10.0, 15.0]).expect("static"),
            Arc::new(|x: &[f64]| -branin(x)),
            Some(BRANIN_MAX),
        ),
        Problem::new(
            "hartmann6",
            BoxDomain::unit(6).expect("static"),
            Arc::new(|x: &[f64]| -hartmann6(x)),
            Some(HARTMANN6_MAX),
        ),
        Problem::new(
            "opamp_fom",
            BoxDomain::unit(10).expect("static"),
            opamp_fom_spec().into_objective(),
            None,
        ),
        Problem::new(
            "quadratic1d",
            BoxDomain::new(vec![-1.0], vec![2.0]).expect("static"),
            Arc::new(|x: &[f64]| 1.0 - (x[0] - 0.7).powi(2)),
            Some(1.0),
        ),
    ]
}

pub fn problem_by_name(name: &str) -> Result<Problem> {
    builtin_problems()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| {
            let names: Vec<_> = builtin_problems().into_iter().map(|p| p.name).collect();
            Error::invalid(format!(
                "unknown problem '{name}', expected one of {names:?}"
            ))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds;
    use approx::assert_relative_eq;

    #[test]
    fn branin_optimum_value() {
        let p = problem_by_name("branin").unwrap();
        assert_relative_eq!(
            p.evaluate_raw(&[std::f64::consts::PI, 2.275]),
            -0.397887,
            epsilon = 1e-5
        );
        for x in [[-std::f64::consts::PI, 12.275], [9.42478, 2.475]] {
            assert!((p.evaluate_raw(&x) - BRANIN_MAX).abs() < 1e-5);
        }
    }

    #[test]
    fn branin_optimum_survives_local_refinement() {
        // oracle: compass search from the published minimizer cannot improve
        // beyond rounding of the published value
        let f = |x: &[f64]| -branin(x);
        let mut x = [std::f64::consts::PI, 2.275];
        let mut fx = f(&x);
        let mut step = 1e-2;
        while step > 1e-10 {
            let mut moved = false;
            for i in 0..2 {
                for s in [step, -step] {
                    let mut c = x;
                    c[i] += s;
                    if f(&c) > fx {
                        x = c;
                        fx = f(&c);
                        moved = true;
                    }
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        assert!((fx - BRANIN_MAX).abs() < 1e-12, "{fx}");
    }

    #[test]
    fn hartmann_optimum_value() {
        let xstar = [0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573];
        assert!((-hartmann6(&xstar) - HARTMANN6_MAX).abs() < 1e-5);
    }

    #[test]
    fn known_optima_bound_random_points() {
        let mut rng = seeds::rng(2024);
        for p in builtin_problems()
            .into_iter()
            .filter(|p| p.known_optimum.is_some())
        {
            let opt = p.known_optimum.unwrap();
            for _ in 0..1_000_000 {
                let u = DesignPoint::clamped((0..p.dim()).map(|_| rng.random()).collect());
                assert!(p.evaluate(&u) <= opt + 1e-9, "{} exceeded optimum", p.name);
            }
        }
    }

    #[test]
    fn objectives_are_deterministic() {
        for p in builtin_problems() {
            let u = DesignPoint::clamped(vec![0.37; p.dim()]);
            assert_eq!(p.evaluate(&u).to_bits(), p.evaluate(&u).to_bits());
            assert!(p.evaluate(&u).is_finite());
        }
    }

    #[test]
    fn fom_composition_rules() {
        let zero = FomSpec::new(opamp_fom_spec().metrics().to_vec(), vec![0.0; 3]).unwrap();
        let x = [0.4; 10];
        assert_eq!(fom_evaluate(&zero, &x), 0.0);
        let single = FomSpec::new(vec![opamp_fom_spec().metrics()[0].clone()], vec![1.0]).unwrap();
        assert_eq!(fom_evaluate(&single, &x), opamp_gain(&x));
        let fom = opamp_fom_spec();
        assert_eq!(fom.weights(), &[1.2, 10.0, 1.6]);
        assert_relative_eq!(
            fom_evaluate(&fom, &x),
            1.2 * opamp_gain(&x) + 10.0 * opamp_ugf(&x) + 1.6 * opamp_pm(&x)
        );
        assert!(FomSpec::new(vec![], vec![1.0]).is_err());
    }

    #[test]
    fn duration_models() {
        let p = DesignPoint::clamped(vec![0.5, 0.5]);
        let mut rng = seeds::rng(1);
        let c = DurationModel::Constant { seconds: 3.0 };
        assert!((0..100).all(|i| c.draw(&p, i, &mut rng) == 3.0));
        let ln = DurationModel::LogNormal {
            median: 7.0,
            sigma: 0.0,
        };
        assert!((0..100).all(|i| ln.draw(&p, i, &mut rng) == 7.0));
        let t = DurationModel::Table {
            seconds: vec![1.0, 2.0],
        };
        assert_eq!(t.draw(&p, 3, &mut rng), 2.0);
        let dep = DurationModel::InputDependent {
            base: 1.0,
            slope: 4.0,
            coordinate: 1,
            sigma: 0.0,
        };
        assert_eq!(
            dep.draw(&DesignPoint::clamped(vec![0.0, 1.0]), 0, &mut rng),
            5.0
        );
        assert_eq!(
            dep.draw(&DesignPoint::clamped(vec![0.0, 0.0]), 0, &mut rng),
            1.0
        );
    }

    #[test]
    fn duration_draws_reproducible_and_positive() {
        let p = DesignPoint::clamped(vec![0.2; 3]);
        for m in Problem::duration_presets() {
            m.validate(3).unwrap();
            let a: Vec<f64> = {
                let mut r = seeds::rng(9);
                (0..50).map(|i| m.draw(&p, i, &mut r)).collect()
            };
            let b: Vec<f64> = {
                let mut r = seeds::rng(9);
                (0..50).map(|i| m.draw(&p, i, &mut r)).collect()
            };
            assert_eq!(a, b);
            assert!(a.iter().all(|d| *d > 0.0));
        }
    }

    #[test]
    fn duration_validation() {
        assert!(DurationModel::Constant { seconds: 0.0 }
            .validate(1)
            .is_err());
        assert!(DurationModel::Table { seconds: vec![] }
            .validate(1)
            .is_err());
        let dep = DurationModel::InputDependent {
            base: 1.0,
            slope: 1.0,
            coordinate: 2,
            sigma: 0.1,
        };
        assert!(dep.validate(2).is_err());
        assert!(dep.validate(3).is_ok());
    }

    #[test]
    fn unknown_problem_is_rejected() {
        assert!(problem_by_name("nope").is_err());
        assert_eq!(problem_by_name("hartmann6").unwrap().dim(), 6);
    }
}
