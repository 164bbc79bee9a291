//! Compares the tape's gradients with central differences for a small
//! convolution + pooling + dense + softmax cross-entropy chain in f64.
//!
//! `cargo run --release --example gradient_check`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wdtl::tensor::finite_diff_check;
use wdtl::{Tape, Tensor, Var};

fn random(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    let n = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    Tensor::from_f64(shape.to_vec(), &data).expect("shape matches data")
}

fn loss(tape: &mut Tape<f64>, p: &[Var]) -> wdtl::Result<Var> {
    let h = tape.conv1d(p[0], p[1], p[2], 2)?;
    let h = tape.relu(h)?;
    let h = tape.maxpool1d(h, 2, 2)?;
    let batch = tape.shape(h)[0];
    let width = tape.shape(h)[1] * tape.shape(h)[2];
    let h = tape.reshape(h, &[batch, width])?;
    let z = tape.dense(h, p[3], Some(p[4]))?;
    let probs = tape.softmax(z)?;
    tape.cross_entropy(probs, &[0, 2, 1])
}

fn main() -> wdtl::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    // x [3, 2, 30] -> conv 4@6/2 -> [3, 4, 13] -> pool -> [3, 4, 6] -> dense 24 -> 3
    let inputs = [
        random(&mut rng, &[3, 2, 30]),
        random(&mut rng, &[4, 2, 6]),
        random(&mut rng, &[4]),
        random(&mut rng, &[3, 24]),
        random(&mut rng, &[3]),
    ];
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t.clone())).collect();
    let l = loss(&mut tape, &vars)?;
    let grads = tape.backward(l)?;
    let analytic: Vec<f64> = vars.iter().flat_map(|v| grads.get(*v).unwrap_or(&[]).to_vec()).collect();
    let point: Vec<f64> = inputs.iter().flat_map(|t| t.data().to_vec()).collect();

    let report = finite_diff_check(&point, &analytic, 1e-5, |x| {
        let mut tape = Tape::new();
        let mut at = 0;
        let vars: Vec<Var> = inputs
            .iter()
            .map(|t| {
                let part = Tensor::from_f64(t.shape().to_vec(), &x[at..at + t.len()]).expect("same shape");
                at += t.len();
                tape.param(part)
            })
            .collect();
        let l = loss(&mut tape, &vars).expect("forward");
        tape.value(l).data()[0]
    });
    println!("loss {:.6}", tape.value(l).data()[0]);
    println!("{} coordinates, max abs error {:.2e}, max rel error {:.2e}", point.len(), report.max_abs_error, report.max_rel_error);
    let worst = report
        .entries
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.rel_error().total_cmp(&b.1.rel_error()))
        .map(|(i, e)| (i, e.analytic, e.numeric));
    if let Some((i, a, n)) = worst {
        println!("worst coordinate {i}: analytic {a:.8} numeric {n:.8}");
    }
    Ok(())
}
