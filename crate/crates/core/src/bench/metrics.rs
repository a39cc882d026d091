use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::constraints::ConstraintSet;
use crate::data::quantile_sorted;
use crate::error::{Error, Result};

/// Mean and sample standard deviation (zero for fewer than two values).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return MeanStd { mean: f64::NAN, std: f64::NAN };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        MeanStd { mean, std }
    }
}

impl std::fmt::Display for MeanStd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.3} ± {:.3}", self.mean, self.std)
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, 0.5)
}

/// Percentage of recourses the classifier accepts at `threshold`.
pub fn validity(scores: &[f64], threshold: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::Empty("recourse records"));
    }
    Ok(100.0 * scores.iter().filter(|&&s| s >= threshold).count() as f64 / scores.len() as f64)
}

/// Percentages respecting immutability and monotonicity, and respecting
/// every causal rule; causality is `None` without rules.
pub fn actionability_causality(pairs: &[(&[usize], &[usize])], cs: &ConstraintSet) -> (f64, Option<f64>) {
    if pairs.is_empty() {
        return (f64::NAN, None);
    }
    let n = pairs.len() as f64;
    let actionable = pairs
        .iter()
        .filter(|(x, c)| {
            (0..x.len()).all(|j| {
                !(cs.is_immutable(j) && c[j] != x[j]) && !(cs.is_monotone(j) && c[j] < x[j])
            })
        })
        .count();
    let causality = (!cs.rules().is_empty()).then(|| {
        100.0 * pairs.iter().filter(|(x, c)| cs.rules().iter().all(|r| r.holds(c, x))).count() as f64 / n
    });
    (100.0 * actionable as f64 / n, causality)
}

/// Negative log-likelihood under `p⁺`, in nats, per recourse.
pub fn nll(recourses: &[&[usize]], p_plus: &Circuit) -> Result<Vec<f64>> {
    recourses
        .iter()
        .map(|x| {
            let ll = p_plus.log_likelihood(x)?;
            if ll == f64::NEG_INFINITY {
                Err(Error::ZeroProbability("recourse has zero density under p⁺".into()))
            } else {
                Ok(-ll)
            }
        })
        .collect()
}

/// Inverse-MAD weights of the ordinal codes, MAD floored at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MadWeights {
    pub mad: Vec<f64>,
    pub ordered: Vec<bool>,
}

impl MadWeights {
    pub fn fit(train: &[Vec<usize>], ordered: &[bool]) -> Self {
        let d = ordered.len();
        let mad = (0..d)
            .map(|j| {
                let col: Vec<f64> = train.iter().map(|r| r[j] as f64).collect();
                let m = median(&col);
                let dev: Vec<f64> = col.iter().map(|v| (v - m).abs()).collect();
                let mad = median(&dev);
                if mad.is_nan() {
                    1.0
                } else {
                    mad.max(1.0)
                }
            })
            .collect();
        MadWeights { mad, ordered: ordered.to_vec() }
    }

    pub fn similarity(&self, factual: &[usize], recourse: &[usize]) -> f64 {
        (0..factual.len())
            .map(|j| {
                let diff = if self.ordered[j] {
                    factual[j].abs_diff(recourse[j]) as f64
                } else if factual[j] != recourse[j] {
                    1.0
                } else {
                    0.0
                };
                diff / self.mad[j]
            })
            .sum()
    }
}

/// Metrics over one set of recourses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub count: usize,
    pub validity: f64,
    pub actionability: f64,
    pub causality: Option<f64>,
    pub nll: MeanStd,
    pub similarity: MeanStd,
    pub sparsity: MeanStd,
    pub median_time: f64,
    pub mean_yhat: f64,
}

/// Everything needed to score one set of recourses.
pub struct MetricInputs<'a> {
    pub factuals: &'a [Vec<usize>],
    pub recourses: &'a [Vec<usize>],
    pub scores: &'a [f64],
    pub seconds: &'a [f64],
}

pub fn evaluate(
    inputs: &MetricInputs,
    threshold: f64,
    cs: &ConstraintSet,
    p_plus: &Circuit,
    mad: &MadWeights,
) -> Result<MetricsReport> {
    let pairs: Vec<(&[usize], &[usize])> = inputs
        .factuals
        .iter()
        .zip(inputs.recourses)
        .map(|(x, c)| (x.as_slice(), c.as_slice()))
        .collect();
    let (actionability, causality) = actionability_causality(&pairs, cs);
    let recourses: Vec<&[usize]> = inputs.recourses.iter().map(Vec::as_slice).collect();
    let similarity: Vec<f64> = pairs.iter().map(|(x, c)| mad.similarity(x, c)).collect();
    let sparsity: Vec<f64> = pairs.iter().map(|(x, c)| cs.mutable_distance(c, x) as f64).collect();
    Ok(MetricsReport {
        count: pairs.len(),
        validity: validity(inputs.scores, threshold)?,
        actionability,
        causality,
        nll: MeanStd::of(&nll(&recourses, p_plus)?),
        similarity: MeanStd::of(&similarity),
        sparsity: MeanStd::of(&sparsity),
        median_time: median(inputs.seconds),
        mean_yhat: inputs.scores.iter().sum::<f64>() / inputs.scores.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Node;
    use crate::constraints::CausalRule;

    #[test]
    fn counting_examples() {
        assert_eq!(validity(&[0.9; 10], 0.5).unwrap(), 100.0);
        assert_eq!(validity(&[0.1; 10], 0.5).unwrap(), 0.0);
        let mut s = vec![0.9; 93];
        s.extend(vec![0.2; 7]);
        assert_eq!(validity(&s, 0.5).unwrap(), 93.0);
        assert!(validity(&[], 0.5).is_err());
        assert_eq!(median(&[0.1, 0.9, 0.2]), 0.2);
        let ms = MeanStd::of(&[10.0, 14.0]);
        assert_eq!(ms.mean, 12.0);
        assert!((ms.std - 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn actionability_flags_immutable_changes() {
        let cs = ConstraintSet::new(vec![3, 3], &[true; 2], &[0], &[], vec![]).unwrap();
        let (a, c) = actionability_causality(&[(&[0, 0], &[1, 0]), (&[0, 0], &[0, 2])], &cs);
        assert_eq!(a, 50.0);
        assert_eq!(c, None);
        let cs = ConstraintSet::new(vec![3, 3], &[true; 2], &[], &[], vec![CausalRule { effect: 1, cause: 0 }]).unwrap();
        let (_, c) = actionability_causality(&[(&[0, 0], &[0, 1])], &cs);
        assert_eq!(c, Some(0.0));
    }

    #[test]
    fn similarity_examples() {
        let mad = MadWeights { mad: vec![1.0, 1.0], ordered: vec![true, false] };
        assert_eq!(mad.similarity(&[1, 1], &[1, 1]), 0.0);
        assert_eq!(mad.similarity(&[0, 1], &[2, 1]), 2.0);
        assert_eq!(mad.similarity(&[0, 1], &[0, 3]), 1.0);
        let fitted = MadWeights::fit(&[vec![0], vec![5], vec![10], vec![20], vec![30]], &[true]);
        assert_eq!(fitted.mad, vec![10.0]);
    }

    #[test]
    fn deterministic_mode_has_zero_nll() {
        let c = Circuit::new(vec![Node::Leaf { feature: 0, probs: vec![0.0, 1.0] }], 0, vec![2]).unwrap();
        assert_eq!(nll(&[&[1]], &c).unwrap(), vec![0.0]);
        assert!(nll(&[&[0]], &c).is_err());
    }
}
