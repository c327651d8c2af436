use crate::error::{Error, Result};
use crate::lti::ss::StateSpace;

pub const DEFAULT_LO: f64 = 1e-3;
pub const DEFAULT_HI: f64 = 1e4;
pub const DEFAULT_POINTS: usize = 400;

/// Ascending set of angular frequencies (rad/s) used for sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    points: Vec<f64>,
    lo: f64,
    hi: f64,
    log_points: usize,
}

impl FrequencyGrid {
    /// `count` log-spaced points on `[lo, hi]`, optionally preceded by `w = 0`.
    pub fn log_spaced(lo: f64, hi: f64, count: usize, include_zero: bool) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && hi.is_finite()) || count < 2 {
            return Err(Error::InvalidProblem(format!(
                "bad frequency range [{lo}, {hi}]"
            )));
        }
        let (l0, l1) = (lo.log10(), hi.log10());
        let mut points = Vec::with_capacity(count + 1);
        if include_zero {
            points.push(0.0);
        }
        for k in 0..count {
            points.push(10f64.powf(l0 + (l1 - l0) * k as f64 / (count - 1) as f64));
        }
        Ok(Self {
            points,
            lo,
            hi,
            log_points: count,
        })
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidProblem(
                "frequencies must be finite and >= 0".into(),
            ));
        }
        if points.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvalidProblem(
                "frequencies must be strictly ascending".into(),
            ));
        }
        let lo = points.iter().copied().find(|w| *w > 0.0).unwrap_or(0.0);
        let hi = points.last().copied().unwrap_or(0.0);
        let log_points = points.len();
        Ok(Self {
            points,
            lo,
            hi,
            log_points,
        })
    }

    /// 400 log-spaced points over `[1e-3, 1e4]` rad/s plus `w = 0`.
    pub fn standard() -> Self {
        Self::log_spaced(DEFAULT_LO, DEFAULT_HI, DEFAULT_POINTS, true).expect("static range")
    }

    /// The standard grid, widened (at the same density) so that every pole
    /// magnitude of `sys` lies at least two decades inside the range.
    pub fn covering(sys: &StateSpace) -> Self {
        let mags: Vec<f64> = sys
            .poles()
            .iter()
            .map(|p| p.norm())
            .filter(|m| m.is_finite() && *m > 0.0)
            .collect();
        let mut lo = DEFAULT_LO;
        let mut hi = DEFAULT_HI;
        if let Some(min) = mags.iter().copied().reduce(f64::min) {
            lo = lo.min(min * 1e-2);
        }
        if let Some(max) = mags.iter().copied().reduce(f64::max) {
            hi = hi.max(max * 1e2);
        }
        if lo == DEFAULT_LO && hi == DEFAULT_HI {
            return Self::standard();
        }
        let per_decade = DEFAULT_POINTS as f64 / (DEFAULT_HI / DEFAULT_LO).log10();
        let count = ((hi / lo).log10() * per_decade).ceil() as usize + 1;
        Self::log_spaced(lo, hi, count, true).expect("derived range")
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn decades(&self) -> f64 {
        if self.lo > 0.0 {
            (self.hi / self.lo).log10()
        } else {
            0.0
        }
    }

    pub fn density(&self) -> f64 {
        let d = self.decades();
        if d > 0.0 {
            self.log_points as f64 / d
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_grid_shape() {
        let g = FrequencyGrid::standard();
        assert_eq!(g.points().len(), 401);
        assert_eq!(g.points()[0], 0.0);
        assert!((g.points()[1] - 1e-3).abs() < 1e-15);
        assert!((g.points()[400] - 1e4).abs() < 1e-8);
        assert!(g.points().windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn rejects_unsorted_points() {
        assert!(FrequencyGrid::from_points(vec![1.0, 0.5]).is_err());
        assert!(FrequencyGrid::from_points(vec![-1.0, 0.5]).is_err());
        assert!(FrequencyGrid::from_points(vec![0.0, f64::NAN]).is_err());
    }
}
