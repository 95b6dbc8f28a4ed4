use serde::{Deserialize, Serialize};

/// How the per-step privacy cost is charged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AccountantMode {
    /// Every critic step is a full Gaussian mechanism: rho = 1 / (2 sigma^2).
    Strict,
    /// Heuristic amplification by sampling: rho = p^2 / (2 sigma^2).
    Subsampled,
}

impl AccountantMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AccountantMode::Strict => "strict",
            AccountantMode::Subsampled => "subsampled",
        }
    }
}

impl std::str::FromStr for AccountantMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(Self::Strict),
            "subsampled" => Ok(Self::Subsampled),
            other => Err(format!("unknown accountant mode {other:?} (expected strict|subsampled)")),
        }
    }
}

/// zCDP cost of one clipped Gaussian release with noise multiplier `sigma`.
pub fn step_rho(sigma: f64, sampling_rate: f64, mode: AccountantMode) -> f64 {
    let base = 1.0 / (2.0 * sigma * sigma);
    match mode {
        AccountantMode::Strict => base,
        AccountantMode::Subsampled => sampling_rate * sampling_rate * base,
    }
}

/// Converts a rho-zCDP guarantee into (epsilon, delta)-DP.
pub fn zcdp_to_epsilon(rho: f64, delta: f64) -> f64 {
    rho + 2.0 * (rho * (1.0 / delta).ln()).sqrt()
}

/// Epsilon after `steps` critic updates.
pub fn privacy_compose(steps: u64, sigma: f64, p: f64, mode: AccountantMode, delta: f64) -> f64 {
    zcdp_to_epsilon(steps as f64 * step_rho(sigma, p, mode), delta)
}

/// Running privacy spend of a training procedure.
///
/// `rho` is always `steps * step_rho(..)`, so the reported epsilon equals
/// [`privacy_compose`] for the same arguments bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyLedger {
    pub rho: f64,
    pub steps: u64,
    pub sigma: f64,
    pub clip_norm: f64,
    pub sampling_rate: f64,
    pub mode: AccountantMode,
    pub budget: f64,
    pub delta: f64,
}

impl PrivacyLedger {
    pub fn new(
        sigma: f64,
        clip_norm: f64,
        sampling_rate: f64,
        mode: AccountantMode,
        budget: f64,
        delta: f64,
    ) -> Self {
        Self {
            rho: 0.0,
            steps: 0,
            sigma,
            clip_norm,
            sampling_rate,
            mode,
            budget,
            delta,
        }
    }

    pub fn step_cost(&self) -> f64 {
        step_rho(self.sigma, self.sampling_rate, self.mode)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon_at(self.delta)
    }

    pub fn epsilon_at(&self, delta: f64) -> f64 {
        zcdp_to_epsilon(self.rho, delta)
    }

    pub fn epsilon_after(&self, steps: u64) -> f64 {
        privacy_compose(steps, self.sigma, self.sampling_rate, self.mode, self.delta)
    }

    /// Whether one more step keeps epsilon within budget.
    pub fn can_step(&self) -> bool {
        self.epsilon_after(self.steps + 1) <= self.budget
    }

    /// Largest step count whose epsilon stays within budget.
    pub fn step_cap(&self) -> u64 {
        let cost = self.step_cost();
        // closed form for rho, then settle rounding by probing neighbours
        let l = (1.0 / self.delta).ln();
        let s = (-(l.sqrt()) + (l + self.budget).sqrt()).max(0.0);
        let mut k = ((s * s) / cost).floor() as u64;
        while k > 0 && self.clone().with_steps(k).epsilon() > self.budget {
            k -= 1;
        }
        while self.clone().with_steps(k + 1).epsilon() <= self.budget {
            k += 1;
        }
        k
    }

    fn with_steps(mut self, steps: u64) -> Self {
        self.steps = steps;
        self.rho = steps as f64 * self.step_cost();
        self
    }

    /// Charges one step and returns the rho increment.
    pub fn record_step(&mut self) -> f64 {
        let before = self.rho;
        self.steps += 1;
        self.rho = self.steps as f64 * self.step_cost();
        self.rho - before
    }

    pub fn remaining(&self) -> f64 {
        (self.budget - self.epsilon()).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_steps_zero_epsilon() {
        assert_eq!(privacy_compose(0, 2.0, 1.0, AccountantMode::Strict, 1e-5), 0.0);
    }

    #[test]
    fn compose_examples() {
        let e200 = privacy_compose(200, 2.0, 1.0, AccountantMode::Strict, 1e-5);
        assert!((e200 - (25.0 + 2.0 * (25.0 * 1e5f64.ln()).sqrt())).abs() < 1e-12);
        assert!((e200 - 58.93).abs() < 0.01);
        let e8 = privacy_compose(8, 2.0, 1.0, AccountantMode::Strict, 1e-5);
        assert!((e8 - 7.79).abs() < 0.01);
        let e16 = privacy_compose(16, 2.0, 1.0, AccountantMode::Strict, 1e-5);
        assert!((e16 - 11.60).abs() < 0.01);
    }

    #[test]
    fn strict_step_increment() {
        let mut l = PrivacyLedger::new(2.0, 1.0, 0.1, AccountantMode::Strict, 10.0, 1e-5);
        assert_eq!(l.record_step(), 0.125);
        let mut s = PrivacyLedger::new(2.0, 1.0, 0.1, AccountantMode::Subsampled, 10.0, 1e-5);
        assert!((s.record_step() - 0.01 * 0.125).abs() < 1e-18);
    }

    #[test]
    fn step_cap_matches_iteration() {
        for (sigma, p, mode, budget) in [
            (2.0, 1.0, AccountantMode::Strict, 10.0),
            (1.1, 0.013, AccountantMode::Subsampled, 10.0),
            (0.7, 0.5, AccountantMode::Subsampled, 1.0),
            (5.0, 1.0, AccountantMode::Strict, 0.5),
        ] {
            let l = PrivacyLedger::new(sigma, 1.0, p, mode, budget, 1e-5);
            let mut k = 0;
            while privacy_compose(k + 1, sigma, p, mode, 1e-5) <= budget {
                k += 1;
            }
            assert_eq!(l.step_cap(), k);
        }
    }

    #[test]
    fn mode_parses() {
        assert_eq!("strict".parse::<AccountantMode>().unwrap(), AccountantMode::Strict);
        assert!("rdp".parse::<AccountantMode>().is_err());
    }
}
