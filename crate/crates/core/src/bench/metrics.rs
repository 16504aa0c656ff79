use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::HealthLabel;

/// Binary confusion counts with damage as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tp: usize,
}

impl ConfusionMatrix {
    pub fn new(tn: usize, fp: usize, fn_: usize, tp: usize) -> Self {
        Self { tn, fp, fn_, tp }
    }

    pub fn total(&self) -> usize {
        self.tn + self.fp + self.fn_ + self.tp
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "actual,predicted_healthy,predicted_damaged")?;
        writeln!(out, "healthy,{},{}", self.tn, self.fp)?;
        writeln!(out, "damaged,{},{}", self.fn_, self.tp)?;
        Ok(())
    }
}

pub fn confusion(labels: &[HealthLabel], predictions: &[HealthLabel]) -> Result<ConfusionMatrix> {
    if labels.len() != predictions.len() {
        return Err(Error::InvalidInput(format!(
            "{} labels but {} predictions",
            labels.len(),
            predictions.len()
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (l, p) in labels.iter().zip(predictions) {
        match (l.is_damaged(), p.is_damaged()) {
            (false, false) => cm.tn += 1,
            (false, true) => cm.fp += 1,
            (true, false) => cm.fn_ += 1,
            (true, true) => cm.tp += 1,
        }
    }
    Ok(cm)
}

/// Parses textual labels before counting; unknown labels are rejected.
pub fn confusion_from_str(labels: &[&str], predictions: &[&str]) -> Result<ConfusionMatrix> {
    let parse = |v: &[&str]| v.iter().map(|s| HealthLabel::parse(s)).collect::<Result<Vec<_>>>();
    confusion(&parse(labels)?, &parse(predictions)?)
}

/// `2TP / (2TP + FP + FN)`.
pub fn f1(cm: &ConfusionMatrix) -> Result<f64> {
    let denom = 2 * cm.tp + cm.fp + cm.fn_;
    if denom == 0 {
        return Err(Error::Undefined("F1 with no positives predicted or present".into()));
    }
    Ok(2.0 * cm.tp as f64 / denom as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use aseshm_oracles as oracle;
    use HealthLabel::{Damaged as D, Healthy as H};

    fn flip(v: &[HealthLabel]) -> Vec<HealthLabel> {
        v.iter().map(|l| if l.is_damaged() { H } else { D }).collect()
    }

    #[test]
    fn perfect_predictions_have_no_errors() {
        let l = [H, D, D, H, H];
        let cm = confusion(&l, &l).unwrap();
        assert_eq!((cm.fp, cm.fn_, cm.tp, cm.tn), (0, 0, 2, 3));
        assert_eq!(f1(&cm).unwrap(), 1.0);
    }

    #[test]
    fn inverting_classes_swaps_cells() {
        let l = [H, D, D, H, H, D];
        let p = [D, D, H, H, D, D];
        let a = confusion(&l, &p).unwrap();
        let b = confusion(&flip(&l), &flip(&p)).unwrap();
        assert_eq!((a.tp, a.tn, a.fp, a.fn_), (b.tn, b.tp, b.fn_, b.fp));
        let c = confusion(&p, &l).unwrap();
        assert_eq!((a.fp, a.fn_), (c.fn_, c.fp));
    }

    #[test]
    fn matches_enumeration_on_random_pairs() {
        let mut rng = oracle::SplitMix::new(5);
        for _ in 0..10 {
            let n = 5 + (rng.next_u64() % 40) as usize;
            let draw = |rng: &mut oracle::SplitMix| if rng.uniform() < 0.4 { D } else { H };
            let l: Vec<_> = (0..n).map(|_| draw(&mut rng)).collect();
            let p: Vec<_> = (0..n).map(|_| draw(&mut rng)).collect();
            let mut counts = [[0usize; 2]; 2];
            for i in 0..n {
                counts[usize::from(l[i] == D)][usize::from(p[i] == D)] += 1;
            }
            let cm = confusion(&l, &p).unwrap();
            assert_eq!(cm, ConfusionMatrix::new(counts[0][0], counts[0][1], counts[1][0], counts[1][1]));
            assert_eq!(cm.total(), n);
        }
    }

    #[test]
    fn rejects_unknown_labels_and_length_mismatch() {
        assert!(confusion_from_str(&["healthy", "broken"], &["healthy", "healthy"]).is_err());
        assert!(confusion(&[H], &[H, D]).is_err());
        assert_eq!(
            confusion_from_str(&["damaged"], &["damaged"]).unwrap(),
            ConfusionMatrix::new(0, 0, 0, 1)
        );
    }

    #[test]
    fn f1_undefined_without_positives() {
        assert!(matches!(f1(&ConfusionMatrix::new(10, 0, 0, 0)), Err(Error::Undefined(_))));
        assert_eq!(f1(&ConfusionMatrix::new(10, 3, 0, 0)).unwrap(), 0.0);
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        ConfusionMatrix::new(4, 3, 2, 1).write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "actual,predicted_healthy,predicted_damaged\nhealthy,4,3\ndamaged,2,1\n"
        );
    }
}
