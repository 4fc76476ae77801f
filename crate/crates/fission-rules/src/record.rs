//! Flat key-value serialization of rules.
//!
//! A record always carries a `tag` key naming the variant; the remaining keys
//! hold tuning parameters. Vectors and matrices are space-separated numbers,
//! matrices in row-major order. The text form joins `key=value` pairs with
//! commas, e.g. `tag=poisson_p1,p=0.5`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use numkit::Matrix;

use crate::conjugate::{BinomialProb, ExpFamSpec, MultinomialProbs, PoissonRate};
use crate::{BetaSide, Covariance, CpMode, FissionError, FissionRule};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Record {
    fields: BTreeMap<String, String>,
}

fn bad(msg: impl Into<String>) -> FissionError {
    FissionError::BadRecord(msg.into())
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

impl Record {
    pub fn new(tag: &str) -> Self {
        let mut r = Record::default();
        r.insert("tag", tag);
        r
    }

    pub fn insert(&mut self, key: &str, value: impl ToString) {
        self.fields.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.get(key).map(String::as_str)
    }

    pub fn tag(&self) -> Result<&str, FissionError> {
        self.get("tag").ok_or_else(|| bad("missing tag"))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.fields.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    fn req(&self, key: &str) -> Result<&str, FissionError> {
        self.get(key).ok_or_else(|| bad(format!("missing key `{key}`")))
    }

    fn num<T: FromStr>(&self, key: &str) -> Result<T, FissionError> {
        let raw = self.req(key)?;
        raw.trim()
            .parse()
            .map_err(|_| bad(format!("`{key}` has unparsable value `{raw}`")))
    }

    fn list(&self, key: &str) -> Result<Vec<f64>, FissionError> {
        let raw = self.req(key)?;
        raw.split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(format!("`{key}` has unparsable entry `{t}`"))))
            .collect()
    }

    fn put_cov(&mut self, prefix: &str, cov: &Covariance) {
        match cov {
            Covariance::Iso(v) => self.insert(&format!("{prefix}sigma2"), v),
            Covariance::Diag(d) => self.insert(&format!("{prefix}var"), join(d)),
            Covariance::Full { cov, .. } => self.insert(&format!("{prefix}cov"), join(cov.as_slice())),
        }
    }

    fn cov(&self, prefix: &str) -> Result<Covariance, FissionError> {
        let (iso, diag, full) = (
            format!("{prefix}sigma2"),
            format!("{prefix}var"),
            format!("{prefix}cov"),
        );
        if self.get(&iso).is_some() {
            return Ok(Covariance::Iso(self.num(&iso)?));
        }
        if self.get(&diag).is_some() {
            return Ok(Covariance::Diag(self.list(&diag)?));
        }
        let entries = self.list(&full)?;
        let n = (entries.len() as f64).sqrt().round() as usize;
        let m = Matrix::new(n, n, entries).map_err(|e| bad(format!("`{full}`: {e}")))?;
        Covariance::full(m)
    }

    fn mode(&self) -> Result<CpMode, FissionError> {
        match (self.get("draws"), self.get("scale")) {
            (Some(_), None) => Ok(CpMode::Draws(self.num("draws")?)),
            (None, Some(_)) => Ok(CpMode::Scale(self.num("scale")?)),
            _ => Err(bad("exactly one of `draws` or `scale` is required")),
        }
    }
}

impl fmt::Display for Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.fields.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for Record {
    type Err = FissionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut r = Record::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("`{part}` is not key=value")))?;
            r.insert(k.trim(), v.trim());
        }
        r.tag()?;
        Ok(r)
    }
}

impl<K: ToString, V: ToString> FromIterator<(K, V)> for Record {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        let mut r = Record::default();
        for (k, v) in iter {
            r.insert(&k.to_string(), v);
        }
        r
    }
}

fn spec_from_record(r: &Record) -> Result<Arc<dyn ExpFamSpec>, FissionError> {
    let family = r.req("family")?;
    let spec: Arc<dyn ExpFamSpec> = match family {
        "poisson_rate" => Arc::new(PoissonRate { scale: r.num("scale")? }),
        "binomial_prob" => Arc::new(BinomialProb {
            trials: r.num("trials")?,
            mirrored: r.num("mirrored")?,
        }),
        "multinomial_probs" => Arc::new(MultinomialProbs {
            trials: r.num("trials")?,
            dim: r.num("dim")?,
        }),
        other => return Err(bad(format!("unknown family `{other}`"))),
    };
    Ok(spec)
}

impl FissionRule {
    pub fn tag(&self) -> &'static str {
        match self {
            FissionRule::GaussP1 { .. } => "gauss_p1",
            FissionRule::GaussP2Cp { .. } => "gauss_p2_cp",
            FissionRule::GaussP2General { .. } => "gauss_p2_general",
            FissionRule::PoissonP1 { .. } => "poisson_p1",
            FissionRule::PoissonP2 { .. } => "poisson_p2",
            FissionRule::BernoulliP2 { .. } => "bernoulli_p2",
            FissionRule::BinomialP2 { .. } => "binomial_p2",
            FissionRule::NegBinomialP2 { .. } => "neg_binomial_p2",
            FissionRule::GammaCp { .. } => "gamma_cp",
            FissionRule::ExponentialCp { .. } => "exponential_cp",
            FissionRule::BetaCp { .. } => "beta_cp",
            FissionRule::DirichletCp { .. } => "dirichlet_cp",
            FissionRule::CategoricalP2 { .. } => "categorical_p2",
            FissionRule::ConjugateReversal { .. } => "conjugate",
        }
    }

    pub fn to_record(&self) -> Record {
        let mut r = Record::new(self.tag());
        match self {
            FissionRule::GaussP1 { tau, cov } | FissionRule::GaussP2Cp { tau, cov } => {
                r.insert("tau", tau);
                r.put_cov("", cov);
            }
            FissionRule::GaussP2General { cov, noise } => {
                r.put_cov("", cov);
                r.put_cov("noise_", noise);
            }
            FissionRule::PoissonP1 { p } | FissionRule::PoissonP2 { p } | FissionRule::BernoulliP2 { p } => {
                r.insert("p", p)
            }
            FissionRule::BinomialP2 { n, p } => {
                r.insert("n", n);
                r.insert("p", p);
            }
            FissionRule::NegBinomialP2 { r: size, p } => {
                r.insert("r", size);
                r.insert("p", p);
            }
            FissionRule::GammaCp { mode } | FissionRule::ExponentialCp { mode } => match mode {
                CpMode::Draws(b) => r.insert("draws", b),
                CpMode::Scale(t) => r.insert("scale", t),
            },
            FissionRule::BetaCp { trials, side } => {
                r.insert("trials", trials);
                r.insert(
                    "side",
                    match side {
                        BetaSide::Left => "left",
                        BetaSide::Right => "right",
                    },
                );
            }
            FissionRule::DirichletCp { trials } => r.insert("trials", trials),
            FissionRule::CategoricalP2 { p, weights } => {
                r.insert("p", p);
                r.insert("weights", join(weights));
            }
            FissionRule::ConjugateReversal { spec, draws } => {
                r.insert("family", spec.tag());
                r.insert("draws", draws);
                for (k, v) in spec.params() {
                    r.insert(k, v);
                }
            }
        }
        r
    }

    pub fn from_record(r: &Record) -> Result<Self, FissionError> {
        let rule = match r.tag()? {
            "gauss_p1" => FissionRule::GaussP1 {
                tau: r.num("tau")?,
                cov: r.cov("")?,
            },
            "gauss_p2_cp" => FissionRule::GaussP2Cp {
                tau: r.num("tau")?,
                cov: r.cov("")?,
            },
            "gauss_p2_general" => FissionRule::GaussP2General {
                cov: r.cov("")?,
                noise: r.cov("noise_")?,
            },
            "poisson_p1" => FissionRule::PoissonP1 { p: r.num("p")? },
            "poisson_p2" => FissionRule::PoissonP2 { p: r.num("p")? },
            "bernoulli_p2" => FissionRule::BernoulliP2 { p: r.num("p")? },
            "binomial_p2" => FissionRule::BinomialP2 {
                n: r.num("n")?,
                p: r.num("p")?,
            },
            "neg_binomial_p2" => FissionRule::NegBinomialP2 {
                r: r.num("r")?,
                p: r.num("p")?,
            },
            "gamma_cp" => FissionRule::GammaCp { mode: r.mode()? },
            "exponential_cp" => FissionRule::ExponentialCp { mode: r.mode()? },
            "beta_cp" => FissionRule::BetaCp {
                trials: r.num("trials")?,
                side: match r.req("side")? {
                    "left" => BetaSide::Left,
                    "right" => BetaSide::Right,
                    other => return Err(bad(format!("unknown side `{other}`"))),
                },
            },
            "dirichlet_cp" => FissionRule::DirichletCp {
                trials: r.num("trials")?,
            },
            "categorical_p2" => {
                let p = r.num("p")?;
                match r.get("weights") {
                    Some(_) => FissionRule::CategoricalP2 {
                        p,
                        weights: r.list("weights")?,
                    },
                    None => FissionRule::categorical_uniform(p, r.num("categories")?),
                }
            }
            "conjugate" => FissionRule::ConjugateReversal {
                spec: spec_from_record(r)?,
                draws: r.num("draws")?,
            },
            other => return Err(bad(format!("unknown tag `{other}`"))),
        };
        rule.validate()?;
        Ok(rule)
    }
}
