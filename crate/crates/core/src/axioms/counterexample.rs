use serde::{Deserialize, Serialize};

use crate::attribution::PathSpec;
use crate::error::{Error, Result};
use crate::fixtures::{build_fixture, FixtureId};
use crate::{Model64, Tensor64};

/// A symmetric model on which a given non-straightline path method must
/// break symmetry, with the expected direction of the break.
#[derive(Debug, Clone)]
pub struct SymmetryCounterexample {
    pub fixture: FixtureId,
    pub model: Model64,
    /// The path runs from zeros (baseline) to ones (input).
    pub baseline: Tensor64,
    pub input: Tensor64,
    /// Feature the path moves first on the chosen stretch.
    pub leading: usize,
    /// Feature that must receive the strictly larger attribution.
    pub larger: usize,
}

/// Summary of the construction, suitable for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleSummary {
    pub fixture: String,
    pub a: f64,
    pub b: f64,
    pub leading: usize,
    pub larger: usize,
}

impl SymmetryCounterexample {
    pub fn summary(&self) -> CounterexampleSummary {
        let (a, b) = match self.fixture {
            FixtureId::SymmetryCex { a, b, .. } => (a, b),
            _ => unreachable!("counterexamples are always symmetry_cex fixtures"),
        };
        CounterexampleSummary {
            fixture: self.fixture.to_string(),
            a,
            b,
            leading: self.leading,
            larger: self.larger,
        }
    }
}

/// Builds the symmetric function that `path` (taken from zeros to ones)
/// attributes asymmetrically.
///
/// The construction finds the first path vertex where some feature `i` is
/// strictly ahead of another feature `j`, then follows the path backward and
/// forward to where the two coordinates are level again. Their common values
/// there become `a` and `b` of `symmetry_cex(a, b, i, j, n)`: on that stretch
/// only `x_i` has reached the active region's far side while `x_j` still
/// climbs through it, so `x_j` collects the larger attribution.
pub fn build_appendix_a_counterexample(path: &PathSpec<f64>) -> Result<SymmetryCounterexample> {
    let n = match path {
        PathSpec::Straightline => return Err(Error::NoCounterexample),
        PathSpec::Polyline(waypoints) => match waypoints.first() {
            Some(w) => w.len(),
            None => return Err(Error::NoCounterexample),
        },
        PathSpec::AxisSequential(order) => order.len(),
    };
    if n < 2 {
        return Err(Error::NoCounterexample);
    }
    let baseline = Tensor64::zeros(vec![n]);
    let input = Tensor64::filled(vec![n], 1.0)?;
    let points = path.skeleton(&baseline, &input)?;

    let (k, i, j) = points
        .iter()
        .enumerate()
        .find_map(|(k, p)| {
            (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .find(|&(i, j)| p[i] > p[j])
                .map(|(i, j)| (k, i, j))
        })
        .ok_or(Error::NoCounterexample)?;

    let lead = |p: &Vec<f64>| p[i] - p[j];
    // Level point on the segment from `p` (lead <= 0) to `q` (lead > 0), or reversed.
    let level = |p: &Vec<f64>, q: &Vec<f64>| {
        let (dp, dq) = (lead(p), lead(q));
        let t = dp / (dp - dq);
        p[i] + t * (q[i] - p[i])
    };
    let back = (0..k).rev().find(|&v| lead(&points[v]) <= 0.0).ok_or(Error::NoCounterexample)?;
    let fwd = (k + 1..points.len())
        .find(|&v| lead(&points[v]) <= 0.0)
        .ok_or(Error::NoCounterexample)?;
    let a = level(&points[back], &points[back + 1]);
    let b = level(&points[fwd - 1], &points[fwd]);
    if !(0.0 <= a && a < b) {
        return Err(Error::NoCounterexample);
    }

    let fixture = FixtureId::SymmetryCex { a, b, i, j, n };
    let model = build_fixture(&fixture)?;
    Ok(SymmetryCounterexample {
        fixture,
        model,
        baseline,
        input,
        leading: i,
        larger: j,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::{path_integrated_gradients, BaselineSpec, RiemannConfig};

    fn polyline(points: &[&[f64]]) -> PathSpec<f64> {
        PathSpec::Polyline(points.iter().map(|p| Tensor64::from_f64s(p).unwrap()).collect())
    }

    #[test]
    fn corner_path_through_first_axis() {
        let path = polyline(&[&[1.0, 0.0]]);
        let cex = build_appendix_a_counterexample(&path).unwrap();
        assert_eq!(cex.fixture, FixtureId::SymmetryCex { a: 0.0, b: 1.0, i: 0, j: 1, n: 2 });
        assert_eq!(cex.larger, 1);
        let r = path_integrated_gradients(
            &cex.model,
            &cex.input,
            &BaselineSpec::Explicit(cex.baseline.clone()),
            &path,
            &RiemannConfig::right(1000).unwrap(),
        )
        .unwrap();
        assert!(r.values[1] - r.values[0] > 1e-3, "{:?}", r.values);
    }

    #[test]
    fn mirrored_corner_path() {
        let cex = build_appendix_a_counterexample(&polyline(&[&[0.0, 1.0]])).unwrap();
        assert_eq!((cex.leading, cex.larger), (1, 0));
    }

    #[test]
    fn interior_crossings_set_a_and_b() {
        // x1 leads between the level points (0.2, 0.2) and (0.6, 0.6)
        let path = polyline(&[&[0.2, 0.2], &[0.5, 0.3], &[0.6, 0.6]]);
        let cex = build_appendix_a_counterexample(&path).unwrap();
        match cex.fixture {
            FixtureId::SymmetryCex { a, b, i, j, .. } => {
                assert!((a - 0.2).abs() < 1e-12 && (b - 0.6).abs() < 1e-12);
                assert_eq!((i, j), (0, 1));
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn straightline_and_diagonal_paths_have_none() {
        let err = build_appendix_a_counterexample(&PathSpec::Straightline).unwrap_err();
        assert_eq!(err.to_string(), "no counterexample for straightline path");
        assert!(build_appendix_a_counterexample(&polyline(&[&[0.5, 0.5]])).is_err());
    }

    #[test]
    fn axis_sequential_paths_work() {
        let cex = build_appendix_a_counterexample(&PathSpec::AxisSequential(vec![2, 0, 1])).unwrap();
        assert_eq!((cex.leading, cex.larger), (2, 0));
    }
}
