use serde::{Deserialize, Serialize};

use super::{AnalyticsError, Result};

/// Plateau rule: the curve has plateaued at run `k` when the next `window`
/// runs (or all remaining runs, if fewer) add fewer than `threshold` new risks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlateauConfig {
    pub window: usize,
    pub threshold: usize,
}

impl Default for PlateauConfig {
    fn default() -> Self {
        Self { window: 5, threshold: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaturationCurve {
    /// Cumulative unique risks after runs 1..=n.
    pub counts: Vec<usize>,
    /// New unique risks contributed by each run.
    pub gains: Vec<usize>,
    /// 1-based run at which the curve plateaus, if it does.
    pub plateau_run: Option<usize>,
}

impl SaturationCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("run,cumulative_unique,new_unique\n");
        for (i, (c, g)) in self.counts.iter().zip(&self.gains).enumerate() {
            out.push_str(&format!("{},{c},{g}\n", i + 1));
        }
        out
    }
}

pub fn saturation_curve(counts: &[usize], cfg: PlateauConfig) -> Result<SaturationCurve> {
    if counts.is_empty() {
        return Err(AnalyticsError::Empty("cumulative counts"));
    }
    if cfg.window == 0 || cfg.threshold == 0 {
        return Err(AnalyticsError::Invalid("window and threshold must be positive".into()));
    }
    for (i, w) in counts.windows(2).enumerate() {
        if w[1] < w[0] {
            return Err(AnalyticsError::NonMonotone { index: i + 1, prev: w[0], next: w[1] });
        }
    }
    let gains = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| if i == 0 { c } else { c - counts[i - 1] })
        .collect();
    let last = counts.len() - 1;
    let plateau_run = (0..last)
        .find(|&k| counts[(k + cfg.window).min(last)] - counts[k] < cfg.threshold)
        .map(|k| k + 1);
    Ok(SaturationCurve {
        counts: counts.to_vec(),
        gains,
        plateau_run,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_plateaus_immediately() {
        let c = saturation_curve(&[5, 5, 5], PlateauConfig::default()).unwrap();
        assert_eq!(c.plateau_run, Some(1));
        assert_eq!(c.gains, vec![5, 0, 0]);
    }

    #[test]
    fn linear_never_plateaus() {
        let counts: Vec<usize> = (1..=30).collect();
        assert_eq!(saturation_curve(&counts, PlateauConfig::default()).unwrap().plateau_run, None);
    }

    #[test]
    fn plateau_where_growth_stops() {
        let counts = [4, 8, 12, 15, 17, 18, 18, 18, 18, 18, 18, 18];
        assert_eq!(saturation_curve(&counts, PlateauConfig::default()).unwrap().plateau_run, Some(6));
    }

    #[test]
    fn single_run_has_no_plateau() {
        assert_eq!(saturation_curve(&[3], PlateauConfig::default()).unwrap().plateau_run, None);
    }

    #[test]
    fn rejects_decrease() {
        assert_eq!(
            saturation_curve(&[3, 5, 4], PlateauConfig::default()).unwrap_err(),
            AnalyticsError::NonMonotone { index: 2, prev: 5, next: 4 }
        );
    }
}
