use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result, SspgError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant,
    Polynomial,
}

/// Stepsize rule `mu_k`, indexed from `k = 1`.
///
/// `Constant` yields `min(mu0, clamp)`, `Polynomial` yields `min(mu0 / k^gamma, clamp)`.
/// The clamp defaults to `1 / (2 L_f)`, the largest step for which the
/// one-step recurrence holds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepsizeSchedule {
    pub kind: ScheduleKind,
    pub mu0: f64,
    pub gamma: f64,
    pub clamp: f64,
}

impl StepsizeSchedule {
    pub fn constant(mu: f64) -> Self {
        StepsizeSchedule {
            kind: ScheduleKind::Constant,
            mu0: mu,
            gamma: 1.0,
            clamp: f64::INFINITY,
        }
    }

    pub fn polynomial(mu0: f64, gamma: f64) -> Self {
        StepsizeSchedule {
            kind: ScheduleKind::Polynomial,
            mu0,
            gamma,
            clamp: f64::INFINITY,
        }
    }

    /// Clamp at `1 / (2 L_f)`.
    pub fn clamped_to_lipschitz(mut self, lipschitz: f64) -> Self {
        self.clamp = 1.0 / (2.0 * lipschitz);
        self
    }

    pub fn with_clamp(mut self, clamp: f64) -> Self {
        self.clamp = clamp;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.mu0 > 0.0 && self.mu0.is_finite(), || {
            format!("mu0 must be positive and finite, got {}", self.mu0)
        })?;
        ensure(self.clamp > 0.0, || {
            format!("clamp must be positive, got {}", self.clamp)
        })?;
        if self.kind == ScheduleKind::Polynomial {
            ensure(self.gamma > 0.0 && self.gamma <= 1.0, || {
                format!("gamma must lie in (0, 1], got {}", self.gamma)
            })?;
        }
        Ok(())
    }

    /// `mu_k` for `k >= 1`.
    pub fn stepsize(&self, k: u64) -> Result<f64> {
        if k == 0 {
            return Err(SspgError::InvalidArgument(
                "stepsize index starts at k = 1".into(),
            ));
        }
        Ok(self.at(k))
    }

    #[inline]
    pub(crate) fn at(&self, k: u64) -> f64 {
        let raw = match self.kind {
            ScheduleKind::Constant => self.mu0,
            ScheduleKind::Polynomial => self.mu0 / (k as f64).powf(self.gamma),
        };
        raw.min(self.clamp)
    }

    pub fn descriptor(&self) -> String {
        match self.kind {
            ScheduleKind::Constant => {
                format!("constant(mu0={:e},clamp={:e})", self.mu0, self.clamp)
            }
            ScheduleKind::Polynomial => format!(
                "polynomial(mu0={:e},gamma={},clamp={:e})",
                self.mu0, self.gamma, self.clamp
            ),
        }
    }
}

/// Free-function form of [`StepsizeSchedule::stepsize`].
pub fn stepsize(schedule: &StepsizeSchedule, k: u64) -> Result<f64> {
    schedule.stepsize(k)
}
