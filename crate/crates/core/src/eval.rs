//! Binary classification metrics: positive-class F1 and rank-based AUC.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Label, LabelVector, Split};

/// Confusion counts for the positive class (1).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn from_predictions(predicted: &[u8], truth: &[u8]) -> Result<Self> {
        if predicted.len() != truth.len() {
            return Err(Error::LengthMismatch(format!(
                "{} predictions for {} labels",
                predicted.len(),
                truth.len()
            )));
        }
        let mut c = Confusion::default();
        for (&p, &t) in predicted.iter().zip(truth) {
            match (p != 0, t != 0) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            0.0
        } else {
            2.0 * self.tp as f64 / denom as f64
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// `2TP / (2TP + FP + FN)`, 0 when nothing is positive on either side.
pub fn f1_score(predicted: &[u8], truth: &[u8]) -> Result<f64> {
    Ok(Confusion::from_predictions(predicted, truth)?.f1())
}

/// Area under the ROC curve via the Mann-Whitney U statistic with average
/// ranks for ties, i.e. `P(score+ > score-) + ½ P(score+ = score-)`.
pub fn auc(scores: &[f64], truth: &[u8]) -> Result<f64> {
    if scores.len() != truth.len() {
        return Err(Error::LengthMismatch(format!(
            "{} scores for {} labels",
            scores.len(),
            truth.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite {
            what: "AUC scores".into(),
        });
    }
    let n_pos = truth.iter().filter(|&&t| t != 0).count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::AucUndefined);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut pos_rank_sum = 0.0f64;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // ranks are 1-based; the tie block [start, end) shares the mean
        let rank = (start + end + 1) as f64 / 2.0;
        let pos_in_block = order[start..end].iter().filter(|&&i| truth[i] != 0).count();
        pos_rank_sum += rank * pos_in_block as f64;
        start = end;
    }
    let u = pos_rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Which held-out set to score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    Valid,
    Test,
}

/// F1, AUC and confusion counts on one subset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub f1: f64,
    /// `None` when the subset holds a single class.
    pub auc: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub n_eval: usize,
}

impl EvalResult {
    pub fn auc(&self) -> Result<f64> {
        self.auc.ok_or(Error::AucUndefined)
    }
}

/// Scores `probs` (N x C, class 1 = positive) on the chosen subset.
///
/// Hard predictions take the argmax (first index wins ties); AUC uses the
/// positive-class probability.
pub fn evaluate(probs: &Array2<f64>, labels: &LabelVector, split: &Split, subset: Subset) -> Result<EvalResult> {
    let nodes = match subset {
        Subset::Valid => &split.valid,
        Subset::Test => &split.test,
    };
    if nodes.is_empty() {
        return Err(Error::EmptySet(match subset {
            Subset::Valid => "valid",
            Subset::Test => "test",
        }));
    }
    if probs.nrows() != labels.len() || probs.ncols() < 2 {
        return Err(Error::ShapeMismatch(format!(
            "probabilities {:?} for {} labels",
            probs.dim(),
            labels.len()
        )));
    }
    let mut predicted = Vec::with_capacity(nodes.len());
    let mut truth = Vec::with_capacity(nodes.len());
    let mut scores = Vec::with_capacity(nodes.len());
    for &i in nodes {
        let class = match labels.get(i) {
            Label::Unknown => return Err(Error::UnknownLabel(i)),
            l => l.class().expect("known") as u8,
        };
        let row = probs.row(i);
        let mut best = 0;
        for c in 1..row.len() {
            if row[c] > row[best] {
                best = c;
            }
        }
        predicted.push(u8::from(best == 1));
        truth.push(class);
        scores.push(row[1]);
    }
    let conf = Confusion::from_predictions(&predicted, &truth)?;
    let auc = match auc(&scores, &truth) {
        Ok(v) => Some(v),
        Err(Error::AucUndefined) => None,
        Err(e) => return Err(e),
    };
    Ok(EvalResult {
        f1: conf.f1(),
        auc,
        tp: conf.tp,
        fp: conf.fp,
        fn_: conf.fn_,
        tn: conf.tn,
        n_eval: conf.total(),
    })
}
