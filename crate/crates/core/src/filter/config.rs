use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::background::default_shrinkage_grid;
use crate::{Error, Result};

/// Default reweighting stabilizer, ppm m.
pub const DEFAULT_EPSILON: f64 = 1e-2;
/// Default number of iterations.
pub const DEFAULT_ITERATIONS: usize = 30;
/// Albedo factors below this are raised to it where they divide or scale.
pub const DEFAULT_ALBEDO_FLOOR: f64 = 0.05;

/// How background covariances are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceMode {
    /// Population covariance of the signal-removed residuals.
    IterativeRemoval,
    /// Sample covariance shrunk toward its diagonal.
    RobustShrinkage,
}

/// The six named filter configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "rmf")]
    Rmf,
    #[serde(rename = "albedo-mf")]
    AlbedoMf,
    #[serde(rename = "iter-pos")]
    IterPos,
    #[serde(rename = "iter-pos-albedo")]
    IterPosAlbedo,
    #[serde(rename = "rwl1")]
    Rwl1,
    #[serde(rename = "albedo-rwl1")]
    AlbedoRwl1,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Rmf,
        Variant::AlbedoMf,
        Variant::IterPos,
        Variant::IterPosAlbedo,
        Variant::Rwl1,
        Variant::AlbedoRwl1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Rmf => "rmf",
            Variant::AlbedoMf => "albedo-mf",
            Variant::IterPos => "iter-pos",
            Variant::IterPosAlbedo => "iter-pos-albedo",
            Variant::Rwl1 => "rwl1",
            Variant::AlbedoRwl1 => "albedo-rwl1",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Variant::Rmf => "reference robust matched filter",
            Variant::AlbedoMf => "albedo-corrected matched filter",
            Variant::IterPos => "iterative, positivity only",
            Variant::IterPosAlbedo => "iterative, positivity and albedo correction",
            Variant::Rwl1 => "reweighted l1",
            Variant::AlbedoRwl1 => "albedo-corrected reweighted l1",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL.into_iter().find(|v| v.name() == s).ok_or_else(|| {
            let names: Vec<_> = Variant::ALL.iter().map(|v| v.name()).collect();
            Error::InvalidConfig(format!("unknown variant '{s}', expected one of {}", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    /// Reweighted l1 penalty; otherwise the weights are zero.
    pub use_sparsity: bool,
    /// Scale each pixel's signal by its albedo factor; otherwise `r = 1`.
    pub use_albedo: bool,
    /// Iterate statistics and estimates; otherwise one closed-form pass.
    pub iterative: bool,
    pub iterations: usize,
    /// Reweighting stabilizer, ppm m.
    pub epsilon: f64,
    pub covariance_mode: CovarianceMode,
    pub albedo_floor: f64,
    /// Candidates searched when `covariance_mode` is `RobustShrinkage`.
    pub shrinkage_grid: Vec<f64>,
}

impl FilterConfig {
    pub fn for_variant(variant: Variant) -> Self {
        let (iterative, use_albedo, use_sparsity) = match variant {
            Variant::Rmf => (false, false, false),
            Variant::AlbedoMf => (false, true, false),
            Variant::IterPos => (true, false, false),
            Variant::IterPosAlbedo => (true, true, false),
            Variant::Rwl1 => (true, false, true),
            Variant::AlbedoRwl1 => (true, true, true),
        };
        Self {
            use_sparsity,
            use_albedo,
            iterative,
            iterations: DEFAULT_ITERATIONS,
            epsilon: DEFAULT_EPSILON,
            covariance_mode: if iterative {
                CovarianceMode::IterativeRemoval
            } else {
                CovarianceMode::RobustShrinkage
            },
            albedo_floor: DEFAULT_ALBEDO_FLOOR,
            shrinkage_grid: default_shrinkage_grid(),
        }
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// The named variant this configuration matches, if any.
    pub fn variant(&self) -> Option<Variant> {
        Variant::ALL.into_iter().find(|v| {
            let c = FilterConfig::for_variant(*v);
            c.iterative == self.iterative && c.use_albedo == self.use_albedo && c.use_sparsity == self.use_sparsity
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.use_sparsity && !self.iterative {
            return bad("sparsity requires the iterative filter".into());
        }
        if self.iterations < 1 {
            return bad("iterations must be at least 1".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive and finite, got {}", self.epsilon));
        }
        if !(self.albedo_floor > 0.0 && self.albedo_floor.is_finite()) {
            return bad(format!("albedo floor must be positive, got {}", self.albedo_floor));
        }
        if self.covariance_mode == CovarianceMode::RobustShrinkage {
            if self.shrinkage_grid.is_empty() {
                return bad("empty shrinkage grid".into());
            }
            if let Some(l) = self.shrinkage_grid.iter().find(|l| !(0.0..=1.0).contains(*l)) {
                return bad(format!("shrinkage {l} outside [0, 1]"));
            }
        }
        Ok(())
    }
}
