use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Where each sub-interval of `[0, 1]` is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiemannRule {
    Left,
    /// `tau_k = k/m` for `k = 1..=m`.
    #[default]
    Right,
    Midpoint,
    Trapezoid,
}

impl std::str::FromStr for RiemannRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(RiemannRule::Left),
            "right" => Ok(RiemannRule::Right),
            "midpoint" => Ok(RiemannRule::Midpoint),
            "trapezoid" => Ok(RiemannRule::Trapezoid),
            other => Err(Error::InvalidParameter(format!("unknown Riemann rule '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RiemannConfig {
    steps: usize,
    rule: RiemannRule,
}

impl RiemannConfig {
    pub fn new(steps: usize, rule: RiemannRule) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidParameter("step count m must be at least 1".into()));
        }
        Ok(Self { steps, rule })
    }

    /// Right-endpoint sum with `steps` points.
    pub fn right(steps: usize) -> Result<Self> {
        Self::new(steps, RiemannRule::Right)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn rule(&self) -> RiemannRule {
        self.rule
    }

    pub fn with_steps(&self, steps: usize) -> Result<Self> {
        Self::new(steps, self.rule)
    }

    /// Sample positions in `[0, 1]` and their weights, in ascending order.
    pub fn nodes<T: Scalar>(&self) -> Vec<(T, T)> {
        let (nodes, m) = self.unit_nodes::<T>();
        nodes.into_iter().map(|(tau, w)| (tau, w / m)).collect()
    }

    /// Sample positions with weights scaled by `m` (so 1, or 1/2 at the
    /// trapezoid ends), and `m` itself. Summing with these weights and
    /// dividing once by `m` keeps constant integrands exact.
    pub(crate) fn unit_nodes<T: Scalar>(&self) -> (Vec<(T, T)>, T) {
        let m = T::from_usize_lossy(self.steps);
        let at = |k: usize| T::from_usize_lossy(k) / m;
        let one = T::one();
        let nodes = match self.rule {
            RiemannRule::Right => (1..=self.steps).map(|k| (at(k), one)).collect(),
            RiemannRule::Left => (0..self.steps).map(|k| (at(k), one)).collect(),
            RiemannRule::Midpoint => {
                let half = T::lit(0.5);
                (0..self.steps)
                    .map(|k| ((T::from_usize_lossy(k) + half) / m, one))
                    .collect()
            }
            RiemannRule::Trapezoid => (0..=self.steps)
                .map(|k| {
                    let weight = if k == 0 || k == self.steps { T::lit(0.5) } else { one };
                    (at(k), weight)
                })
                .collect(),
        };
        (nodes, m)
    }
}
