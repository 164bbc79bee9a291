use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Tape, Tensor};

/// Numerically stable softmax of a single score vector.
pub fn softmax<T: Scalar>(z: &[T]) -> Vec<T> {
    let mut out = z.to_vec();
    crate::tensor::softmax_in_place(&mut out);
    out
}

/// Mean categorical cross-entropy `-(1/B) Σ ln ŷ[b, y_b]` of probability rows
/// `[batch, K]`. Probabilities are clamped to `[1e-12, 1]`.
pub fn cross_entropy<T: Scalar>(predicted: &Tensor<T>, labels: &[usize]) -> Result<T> {
    if predicted.rank() != 2 {
        return Err(Error::dim(format!(
            "expected [batch, classes], got {:?}",
            predicted.shape()
        )));
    }
    let mut tape = Tape::new();
    let p = tape.constant(predicted.clone());
    let l = tape.cross_entropy(p, labels)?;
    Ok(tape.value(l).data()[0])
}

/// Index of the largest entry; first one on ties.
pub fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}
