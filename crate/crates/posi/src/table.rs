use std::io::Write;

use crate::PosiError;

/// The quantity a confidence interval is meant to cover.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Target {
    /// Least-squares projection of the mean onto the selected columns.
    BetaStar,
    /// Kullback–Leibler projection of the true law onto the working GLM.
    BetaStarN,
    /// Projection of the regression function onto a selected basis.
    ProjectedMean,
    /// Average mean over a rejection set.
    MuBar,
    /// Mean of one selected observation.
    MuIndividual,
}

impl Target {
    pub fn label(self) -> &'static str {
        match self {
            Target::BetaStar => "beta_star",
            Target::BetaStarN => "beta_star_n",
            Target::ProjectedMean => "projected_mean",
            Target::MuBar => "mu_bar",
            Target::MuIndividual => "mu_individual",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn centered(center: f64, half_width: f64) -> Self {
        Interval {
            lower: center - half_width,
            upper: center + half_width,
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    /// Whether the interval lies strictly on one side of zero.
    pub fn excludes_zero(&self) -> bool {
        self.lower > 0.0 || self.upper < 0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CiRow {
    /// Index of the parameter in the caller's numbering.
    pub index: usize,
    pub estimate: f64,
    pub interval: Interval,
}

/// Confidence intervals for a set of parameters at a common level.
#[derive(Clone, Debug, PartialEq)]
pub struct CiTable {
    rows: Vec<CiRow>,
    level: f64,
    target: Target,
}

impl CiTable {
    pub fn new(target: Target, level: f64) -> Self {
        CiTable {
            rows: Vec::new(),
            level,
            target,
        }
    }

    pub fn push(&mut self, index: usize, estimate: f64, interval: Interval) -> Result<(), PosiError> {
        if !(interval.lower <= estimate && estimate <= interval.upper) {
            return Err(PosiError::InvalidArgument(format!(
                "estimate {estimate} outside [{}, {}]",
                interval.lower, interval.upper
            )));
        }
        self.rows.push(CiRow {
            index,
            estimate,
            interval,
        });
        Ok(())
    }

    pub(crate) fn symmetric(target: Target, alpha: f64, indices: &[usize], estimates: &[f64], half: &[f64]) -> Result<Self, PosiError> {
        let mut t = CiTable::new(target, 1.0 - alpha);
        for ((&i, &e), &h) in indices.iter().zip(estimates).zip(half) {
            t.push(i, e, Interval::centered(e, h))?;
        }
        Ok(t)
    }

    pub fn rows(&self) -> &[CiRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Nominal coverage `1 − α`.
    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn target(&self) -> Target {
        self.target
    }

    /// Writes `index,estimate,lower,upper,target,level` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), PosiError> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| PosiError::Csv(e.to_string());
        w.write_record(["index", "estimate", "lower", "upper", "target", "level"]).map_err(err)?;
        for r in &self.rows {
            w.write_record([
                r.index.to_string(),
                r.estimate.to_string(),
                r.interval.lower.to_string(),
                r.interval.upper.to_string(),
                self.target.label().to_string(),
                self.level.to_string(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| PosiError::Csv(e.to_string()))
    }
}
