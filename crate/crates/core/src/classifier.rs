use crate::error::{KisanError, Result};

/// Common prediction surface of every fitted classifier.
///
/// `posterior` is the unchecked hot path; `predict_proba` and
/// `predict_class` validate arity first.
pub trait Classifier {
    fn class_catalog(&self) -> &[String];

    fn arity(&self) -> usize;

    /// Probability (or normalized score) vector over `class_catalog`.
    fn posterior(&self, x: &[f64]) -> Vec<f64>;

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_arity(self.arity(), x)?;
        Ok(self.posterior(x))
    }

    /// Index into `class_catalog` of the argmax; ties go to the lower index.
    fn predict_class(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.predict_proba(x)?))
    }

    fn predict_label(&self, x: &[f64]) -> Result<&str> {
        let idx = self.predict_class(x)?;
        Ok(&self.class_catalog()[idx])
    }
}

pub(crate) fn check_arity(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(KisanError::ArityMismatch { expected, got: x.len() });
    }
    Ok(())
}

/// First index holding the maximum. Catalogs are sorted, so this is the
/// lexicographic tie-break.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Softmax with max-subtraction.
pub(crate) fn softmax_in_place(scores: &mut [f64]) {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
}
