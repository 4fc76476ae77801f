//! Experiment configuration and its flat `key = value` text form.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use trendfilter::{KnotRule, SureDf};

/// A configuration problem tied to the offending field.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Experiment {
    LinregLeverage,
    LinregIndep,
    GlmPoisson,
    GlmLogistic,
    MultitestGauss,
    MultitestPoisson,
    TrendfilterGrid,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::LinregLeverage,
        Experiment::LinregIndep,
        Experiment::GlmPoisson,
        Experiment::GlmLogistic,
        Experiment::MultitestGauss,
        Experiment::MultitestPoisson,
        Experiment::TrendfilterGrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::LinregLeverage => "linreg_leverage",
            Experiment::LinregIndep => "linreg_indep",
            Experiment::GlmPoisson => "glm_poisson",
            Experiment::GlmLogistic => "glm_logistic",
            Experiment::MultitestGauss => "multitest_gauss",
            Experiment::MultitestPoisson => "multitest_poisson",
            Experiment::TrendfilterGrid => "trendfilter_grid",
        }
    }

    /// Methods that make sense for the experiment.
    pub fn supported_methods(self) -> &'static [Method] {
        match self {
            Experiment::MultitestGauss | Experiment::MultitestPoisson | Experiment::TrendfilterGrid => {
                &[Method::Fission, Method::FullTwice]
            }
            _ => &[Method::Fission, Method::Split, Method::FullTwice],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s.trim())
            .ok_or_else(|| ConfigError::new("experiment", format!("unknown experiment `{s}`")))
    }
}

/// How a method spends the data on selection and inference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Fission,
    Split,
    /// Negative control that selects and infers on the same data.
    FullTwice,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Fission => "fission",
            Method::Split => "split",
            Method::FullTwice => "full_twice",
        }
    }

    /// Index used to derive the method's random stream within a trial.
    pub(crate) fn stream(self) -> u64 {
        match self {
            Method::Fission => 1,
            Method::Split => 2,
            Method::FullTwice => 3,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "fission" => Ok(Method::Fission),
            "split" => Ok(Method::Split),
            "full_twice" => Ok(Method::FullTwice),
            other => Err(ConfigError::new("methods", format!("unknown method `{other}`"))),
        }
    }
}

/// Covariate layout of the GLM experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DesignKind {
    /// Fifteen ordinary rows plus one row scaled by the leverage factor.
    Leverage,
    /// Independent rows with block-Toeplitz correlated Gaussian columns.
    Gaussian,
}

impl DesignKind {
    pub fn name(self) -> &'static str {
        match self {
            DesignKind::Leverage => "leverage",
            DesignKind::Gaussian => "gaussian",
        }
    }
}

/// Whether the Gaussian noise level is given or estimated from the data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variance {
    Known,
    Estimated,
}

impl Variance {
    pub fn name(self) -> &'static str {
        match self {
            Variance::Known => "known",
            Variance::Estimated => "estimated",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Observations (time points for the trend experiment).
    pub n: usize,
    /// Covariates.
    pub p: usize,
    /// Signal strength `S_Δ`, the non-null mean for multiple testing.
    pub signal: f64,
    /// Leverage factor of the last row.
    pub gamma: f64,
    /// Correlation of neighbouring covariates within a Toeplitz block.
    pub rho: f64,
    /// Gaussian fission tuning.
    pub tau: f64,
    /// Thinning probability (Poisson) or flip probability (Bernoulli).
    pub fission_p: f64,
    /// Target FDR.
    pub q: f64,
    /// Miscoverage level of the intervals.
    pub alpha: f64,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    /// Gaussian noise standard deviation.
    pub sigma: f64,
    pub variance: Variance,
    pub design: DesignKind,
    /// Lasso cross-validation folds.
    pub folds: usize,
    /// Side length of the multiple-testing grid.
    pub grid: usize,
    /// Radius of the disc of non-nulls on the `[-100, 100]²` grid.
    pub radius: f64,
    /// Per-step probability of a new slope in the trend generator.
    pub p_knot: f64,
    /// Half-width of the uniform slope distribution.
    pub slope_range: f64,
    /// Trend filtering degree.
    pub degree: usize,
    pub knot_rule: KnotRule,
}

impl ExperimentConfig {
    /// Defaults that reproduce the published setup of each experiment.
    pub fn defaults(experiment: Experiment) -> Self {
        let base = ExperimentConfig {
            experiment,
            n: 16,
            p: 20,
            signal: 0.2,
            gamma: 4.0,
            rho: 0.0,
            tau: 1.0,
            fission_p: 0.5,
            q: 0.2,
            alpha: 0.2,
            trials: 500,
            seed: 1,
            methods: experiment.supported_methods().to_vec(),
            sigma: 1.0,
            variance: Variance::Known,
            design: DesignKind::Leverage,
            folds: 10,
            grid: 50,
            radius: 30.0,
            p_knot: 0.19,
            slope_range: 0.5,
            degree: 1,
            knot_rule: KnotRule::CvMin,
        };
        match experiment {
            Experiment::LinregLeverage => base,
            Experiment::LinregIndep => ExperimentConfig {
                n: 1000,
                p: 100,
                design: DesignKind::Gaussian,
                ..base
            },
            Experiment::GlmPoisson => ExperimentConfig { signal: 0.5, ..base },
            Experiment::GlmLogistic => ExperimentConfig {
                n: 1000,
                p: 100,
                fission_p: 0.2,
                design: DesignKind::Gaussian,
                ..base
            },
            Experiment::MultitestGauss => ExperimentConfig {
                signal: 2.0,
                tau: 0.5,
                trials: 250,
                ..base
            },
            Experiment::MultitestPoisson => ExperimentConfig {
                signal: 3.0,
                trials: 250,
                ..base
            },
            Experiment::TrendfilterGrid => ExperimentConfig {
                n: 200,
                sigma: 0.05,
                ..base
            },
        }
    }

    /// Parses the flat text form, starting from the experiment's defaults.
    ///
    /// Lines are `key = value`; blank lines and text after `#` are ignored.
    /// When `experiment` is given it must agree with the file's
    /// `experiment` key, if present.
    pub fn parse(text: &str, experiment: Option<Experiment>) -> Result<Self, ConfigError> {
        let mut pairs = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::new(format!("line {}", lineno + 1), format!("`{line}` is not key = value")))?;
            let key = k.trim().to_string();
            if pairs.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(ConfigError::new(key, "given more than once"));
            }
        }
        let from_file = pairs.remove("experiment").map(|s| s.parse::<Experiment>()).transpose()?;
        let experiment = match (experiment, from_file) {
            (Some(a), Some(b)) if a != b => {
                return Err(ConfigError::new("experiment", format!("file says `{b}` but `{a}` was requested")))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(ConfigError::new("experiment", "missing")),
        };
        let mut cfg = ExperimentConfig::defaults(experiment);
        for (key, value) in &pairs {
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
            value
                .parse()
                .map_err(|_| ConfigError::new(key, format!("cannot parse `{value}`")))
        }
        match key {
            "n" => self.n = num(key, value)?,
            "p" => self.p = num(key, value)?,
            "signal" => self.signal = num(key, value)?,
            "gamma" => self.gamma = num(key, value)?,
            "rho" => self.rho = num(key, value)?,
            "tau" => self.tau = num(key, value)?,
            "fission_p" => self.fission_p = num(key, value)?,
            "q" => self.q = num(key, value)?,
            "alpha" => self.alpha = num(key, value)?,
            "trials" => self.trials = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "sigma" => self.sigma = num(key, value)?,
            "folds" => self.folds = num(key, value)?,
            "grid" => self.grid = num(key, value)?,
            "radius" => self.radius = num(key, value)?,
            "p_knot" => self.p_knot = num(key, value)?,
            "slope_range" => self.slope_range = num(key, value)?,
            "degree" => self.degree = num(key, value)?,
            "methods" => {
                self.methods = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(str::parse)
                    .collect::<Result<_, _>>()?;
            }
            "variance" => {
                self.variance = match value {
                    "known" => Variance::Known,
                    "estimated" => Variance::Estimated,
                    other => return Err(ConfigError::new(key, format!("expected known or estimated, got `{other}`"))),
                }
            }
            "design" => {
                self.design = match value {
                    "leverage" => DesignKind::Leverage,
                    "gaussian" => DesignKind::Gaussian,
                    other => return Err(ConfigError::new(key, format!("expected leverage or gaussian, got `{other}`"))),
                }
            }
            "knot_rule" => {
                self.knot_rule = match value {
                    "cv_min" => KnotRule::CvMin,
                    "cv_1se" => KnotRule::Cv1se,
                    "sure" => KnotRule::Sure {
                        sigma2: None,
                        df: SureDf::Knots,
                    },
                    "sure_plus_one" => KnotRule::Sure {
                        sigma2: None,
                        df: SureDf::KnotsPlusOne,
                    },
                    other => return Err(ConfigError::new(key, format!("unknown knot rule `{other}`"))),
                }
            }
            other => return Err(ConfigError::new(other, "unknown key")),
        }
        Ok(())
    }

    /// Checks every field against its domain.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |ok: bool, field: &str, msg: &str| if ok { Ok(()) } else { Err(ConfigError::new(field, msg)) };
        let unit = |v: f64| v > 0.0 && v < 1.0;
        check(self.trials >= 1, "trials", "must be at least 1")?;
        check(unit(self.alpha), "alpha", "must lie in (0,1)")?;
        check(unit(self.q), "q", "must lie in (0,1)")?;
        check(self.tau > 0.0 && self.tau.is_finite(), "tau", "must be positive and finite")?;
        check(unit(self.fission_p), "fission_p", "must lie in (0,1)")?;
        check(self.sigma > 0.0 && self.sigma.is_finite(), "sigma", "must be positive and finite")?;
        check(self.signal.is_finite(), "signal", "must be finite")?;
        check(self.gamma.is_finite() && self.gamma >= 0.0, "gamma", "must be nonnegative")?;
        check(self.rho > -1.0 && self.rho < 1.0, "rho", "must lie in (-1,1)")?;
        check(!self.methods.is_empty(), "methods", "at least one method is required")?;
        for m in &self.methods {
            check(
                self.experiment.supported_methods().contains(m),
                "methods",
                &format!("`{m}` is not available for {}", self.experiment),
            )?;
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        check(seen.len() == self.methods.len(), "methods", "listed more than once")?;
        match self.experiment {
            Experiment::LinregLeverage | Experiment::LinregIndep | Experiment::GlmPoisson | Experiment::GlmLogistic => {
                check(self.folds >= 2, "folds", "must be at least 2")?;
                self.check_regression_shape()?;
            }
            Experiment::MultitestGauss | Experiment::MultitestPoisson => {
                check(self.grid >= 2, "grid", "must be at least 2")?;
                check(self.radius > 0.0, "radius", "must be positive")?;
                if self.experiment == Experiment::MultitestPoisson {
                    check(self.signal > 0.0, "signal", "Poisson mean must be positive")?;
                }
            }
            Experiment::TrendfilterGrid => {
                check(self.degree <= 3, "degree", "must be at most 3")?;
                check(self.n >= self.degree + 12, "n", "too short for the requested degree")?;
                check((0.0..=1.0).contains(&self.p_knot), "p_knot", "must lie in [0,1]")?;
                check(self.slope_range > 0.0, "slope_range", "must be positive")?;
            }
        }
        Ok(())
    }

    fn check_regression_shape(&self) -> Result<(), ConfigError> {
        let check = |ok: bool, field: &str, msg: &str| if ok { Ok(()) } else { Err(ConfigError::new(field, msg)) };
        let leverage = match self.experiment {
            Experiment::LinregLeverage => true,
            Experiment::LinregIndep | Experiment::GlmLogistic => false,
            _ => self.design == DesignKind::Leverage,
        };
        if leverage {
            check(self.p >= 18, "p", "the leverage setup needs at least 18 covariates")?;
            check(self.n >= 4, "n", "must be at least 4")?;
        } else {
            check(self.p >= 32, "p", "the independent setup needs at least 32 covariates")?;
            check(self.n >= 8, "n", "must be at least 8")?;
        }
        if self.variance == Variance::Estimated {
            check(
                matches!(self.experiment, Experiment::LinregLeverage | Experiment::LinregIndep),
                "variance",
                "estimated variance applies to the linear experiments only",
            )?;
            check(self.n > self.p + 1, "variance", "estimating the variance needs n > p + 1")?;
        }
        Ok(())
    }

    /// The configuration in its text form; parsing it reproduces `self`.
    pub fn to_text(&self) -> String {
        let rule = match self.knot_rule {
            KnotRule::CvMin => "cv_min",
            KnotRule::Cv1se => "cv_1se",
            KnotRule::Sure { df: SureDf::Knots, .. } => "sure",
            KnotRule::Sure { df: SureDf::KnotsPlusOne, .. } => "sure_plus_one",
        };
        let methods: Vec<&str> = self.methods.iter().map(|m| m.name()).collect();
        let lines = [
            ("experiment", self.experiment.name().to_string()),
            ("n", self.n.to_string()),
            ("p", self.p.to_string()),
            ("signal", self.signal.to_string()),
            ("gamma", self.gamma.to_string()),
            ("rho", self.rho.to_string()),
            ("tau", self.tau.to_string()),
            ("fission_p", self.fission_p.to_string()),
            ("q", self.q.to_string()),
            ("alpha", self.alpha.to_string()),
            ("trials", self.trials.to_string()),
            ("seed", self.seed.to_string()),
            ("methods", methods.join(",")),
            ("sigma", self.sigma.to_string()),
            ("variance", self.variance.name().to_string()),
            ("design", self.design.name().to_string()),
            ("folds", self.folds.to_string()),
            ("grid", self.grid.to_string()),
            ("radius", self.radius.to_string()),
            ("p_knot", self.p_knot.to_string()),
            ("slope_range", self.slope_range.to_string()),
            ("degree", self.degree.to_string()),
            ("knot_rule", rule.to_string()),
        ];
        lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
