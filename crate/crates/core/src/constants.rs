use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// Problem constants entering the convergence bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    /// Per-component gradient Lipschitz constant `L_f`.
    pub lipschitz: f64,
    /// Strong convexity modulus `sigma_f` of the averaged `f`.
    pub strong_convexity: f64,
    /// `Sigma = 2 E |g_F(x*; xi)|^2`.
    pub sigma_noise: f64,
    /// Bound `S*_F` on `E |g_F(x*; xi)|^2`.
    pub subgrad_bound: f64,
    /// Linear regularity constant, for feasibility families.
    pub kappa: Option<f64>,
}

impl TheoryConstants {
    pub fn new(lipschitz: f64, strong_convexity: f64) -> Self {
        TheoryConstants {
            lipschitz,
            strong_convexity,
            sigma_noise: 0.0,
            subgrad_bound: 0.0,
            kappa: None,
        }
    }

    pub fn with_sigma_noise(mut self, sigma: f64) -> Self {
        self.sigma_noise = sigma;
        self.subgrad_bound = sigma / 2.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.lipschitz > 0.0, || "L_f must be positive".into())?;
        ensure(self.strong_convexity > 0.0, || {
            "sigma_f must be positive".into()
        })?;
        ensure(
            self.strong_convexity <= self.lipschitz * (1.0 + 1e-12),
            || {
                format!(
                    "sigma_f = {} exceeds L_f = {}",
                    self.strong_convexity, self.lipschitz
                )
            },
        )?;
        ensure(self.sigma_noise >= 0.0, || {
            "Sigma must be nonnegative".into()
        })?;
        if let Some(k) = self.kappa {
            ensure(k > 0.0 && k <= 1.0, || {
                format!("kappa must lie in (0, 1], got {k}")
            })?;
        }
        Ok(())
    }

    /// Largest stepsize covered by the recurrence, `1 / (2 L_f)`.
    pub fn max_stepsize(&self) -> f64 {
        1.0 / (2.0 * self.lipschitz)
    }
}
