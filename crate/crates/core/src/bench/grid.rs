use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{confusion, f1, ConfusionMatrix};
use crate::detect::{train_ocsvm_with, OcsvmModel, SmoOptions};
use crate::error::{Error, Result};
use crate::simulator::HealthLabel;

/// Outcome of one `(ν, γ)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub nu: f64,
    pub gamma: f64,
    #[serde(flatten)]
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellOutcome {
    Scored {
        confusion: ConfusionMatrix,
        /// Absent when F1 is undefined for this cell.
        f1: Option<f64>,
        n_support: usize,
    },
    Failed {
        error: String,
    },
}

impl GridCell {
    pub fn f1(&self) -> Option<f64> {
        match self.outcome {
            CellOutcome::Scored { f1, .. } => f1,
            CellOutcome::Failed { .. } => None,
        }
    }

    pub fn confusion(&self) -> Option<ConfusionMatrix> {
        match self.outcome {
            CellOutcome::Scored { confusion, .. } => Some(confusion),
            CellOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub cells: Vec<GridCell>,
    /// Index into `cells` of the selected pair.
    pub best: Option<usize>,
}

impl GridReport {
    pub fn best_cell(&self) -> Option<&GridCell> {
        self.best.map(|i| &self.cells[i])
    }

    pub fn best_f1(&self) -> Option<f64> {
        self.best_cell().and_then(GridCell::f1)
    }
}

/// Label from a decision value: negative scores are flagged as damage.
pub fn classify(score: f64) -> HealthLabel {
    if score < 0.0 {
        HealthLabel::Damaged
    } else {
        HealthLabel::Healthy
    }
}

fn evaluate_pair(
    train: &[Vec<f64>],
    eval: &[Vec<f64>],
    labels: &[HealthLabel],
    nu: f64,
    gamma: f64,
    smo: &SmoOptions,
) -> Result<(OcsvmModel, ConfusionMatrix)> {
    let model = train_ocsvm_with(train, nu, gamma, smo)?;
    let preds: Vec<HealthLabel> = eval.iter().map(|x| classify(model.decision(x))).collect();
    let cm = confusion(labels, &preds)?;
    Ok((model, cm))
}

/// Trains on `train` for every `(ν, γ)` pair, scores `eval` and keeps the
/// pair of highest F1; ties go to the smaller ν, then the smaller γ.
/// A pair whose training fails is recorded as failed.
pub fn grid_search(
    train: &[Vec<f64>],
    eval: &[Vec<f64>],
    labels: &[HealthLabel],
    nu_grid: &[f64],
    gamma_grid: &[f64],
    smo: &SmoOptions,
) -> Result<GridReport> {
    if nu_grid.is_empty() || gamma_grid.is_empty() {
        return Err(Error::InvalidInput("hyperparameter grids must be non-empty".into()));
    }
    if eval.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} evaluation points but {} labels",
            eval.len(),
            labels.len()
        )));
    }
    let pairs: Vec<(f64, f64)> = nu_grid
        .iter()
        .flat_map(|&nu| gamma_grid.iter().map(move |&g| (nu, g)))
        .collect();
    let cells: Vec<GridCell> = pairs
        .par_iter()
        .map(|&(nu, gamma)| {
            let outcome = match evaluate_pair(train, eval, labels, nu, gamma, smo) {
                Ok((model, cm)) => CellOutcome::Scored {
                    confusion: cm,
                    f1: f1(&cm).ok(),
                    n_support: model.n_support(),
                },
                Err(e) => {
                    log::debug!("grid cell nu={nu} gamma={gamma} failed: {e}");
                    CellOutcome::Failed { error: e.to_string() }
                }
            };
            GridCell { nu, gamma, outcome }
        })
        .collect();
    let best = cells
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.f1().map(|f| (i, f, c.nu, c.gamma)))
        .min_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then(a.2.total_cmp(&b.2))
                .then(a.3.total_cmp(&b.3))
        })
        .map(|t| t.0);
    Ok(GridReport { cells, best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use aseshm_oracles as oracle;

    fn data() -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<HealthLabel>) {
        let mut rng = oracle::SplitMix::new(3);
        let mut gauss = |c: f64, n: usize| -> Vec<Vec<f64>> {
            (0..n).map(|_| vec![c + rng.normal(), rng.normal()]).collect()
        };
        let train = gauss(0.0, 60);
        let mut eval = gauss(0.0, 30);
        eval.extend(gauss(6.0, 10));
        let mut labels = vec![HealthLabel::Healthy; 30];
        labels.extend(vec![HealthLabel::Damaged; 10]);
        (train, eval, labels)
    }

    #[test]
    fn singleton_grid_reports_that_pair() {
        let (t, e, l) = data();
        let r = grid_search(&t, &e, &l, &[0.1], &[0.5], &SmoOptions::default()).unwrap();
        assert_eq!(r.cells.len(), 1);
        assert_eq!((r.cells[0].nu, r.cells[0].gamma), (0.1, 0.5));
        assert_eq!(r.best, Some(0));
        assert_eq!(r.cells[0].confusion().unwrap().total(), 40);
    }

    #[test]
    fn best_is_the_maximum_with_ordered_ties() {
        let (t, e, l) = data();
        let r = grid_search(&t, &e, &l, &[0.3, 0.05, 0.1], &[2.0, 0.2, 0.5], &SmoOptions::default()).unwrap();
        let best = r.best_cell().unwrap();
        for c in &r.cells {
            let f = c.f1().unwrap();
            assert!(f <= best.f1().unwrap());
            if f == best.f1().unwrap() {
                assert!(best.nu < c.nu || (best.nu == c.nu && best.gamma <= c.gamma));
            }
        }
        // the shifted blob is caught by the selected pair
        assert_eq!(best.confusion().unwrap().tp, 10);
    }

    #[test]
    fn failed_pairs_are_recorded_and_skipped() {
        let (t, e, l) = data();
        // nu * m < 1 cannot be trained
        let r = grid_search(&t, &e, &l, &[0.001, 0.1], &[0.5], &SmoOptions::default()).unwrap();
        assert!(matches!(r.cells[0].outcome, CellOutcome::Failed { .. }));
        assert_eq!(r.best, Some(1));
        assert!(grid_search(&t, &e, &l, &[], &[0.5], &SmoOptions::default()).is_err());
    }
}
