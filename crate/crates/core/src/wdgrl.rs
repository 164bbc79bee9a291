//! Domain critic and the Wasserstein-1 estimate used for feature alignment.
//!
//! The critic `r_c(h) = w2 · relu(W1 h + b1) + b2` scores feature rows. Its
//! score gap between a source and a target batch is the empirical
//! Wasserstein-1 estimate `l_wd`, and the soft Lipschitz constraint is the
//! gradient penalty `l_grad = mean((‖∇_h r_c(h)‖ − 1)²)` evaluated on source,
//! target and interpolated rows.
//!
//! Because the critic has a single hidden layer, `∇_h r_c(h) = W1ᵀ (w2 ⊙ 1[W1 h + b1 > 0])`
//! is piecewise constant in `h`, so the parameter gradient of the penalty has a
//! closed form (the indicator contributes nothing almost everywhere). That is
//! what [`critic_objective`] evaluates; no higher-order tape is involved.

use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::nn::{glorot_uniform, Direction, Optimizer, OptimizerKind, Parameters, FEATURE_DIM, HIDDEN_UNITS};
use crate::scalar::{gemm, Scalar};
use crate::tensor::{Tape, Tensor, Var};

/// Default weight of the gradient penalty in the critic objective.
pub const DEFAULT_RHO: f64 = 10.0;

/// Critic parameters θ_c.
#[derive(Debug, Clone, PartialEq)]
pub struct Critic<T> {
    /// `[hidden, input]`
    pub w1: Tensor<T>,
    pub b1: Tensor<T>,
    /// `[1, hidden]`
    pub w2: Tensor<T>,
    pub b2: Tensor<T>,
}

/// Gradients of a critic scalar with respect to θ_c, same layout as [`Critic`].
#[derive(Debug, Clone, PartialEq)]
pub struct CriticGrads<T> {
    pub w1: Vec<T>,
    pub b1: Vec<T>,
    pub w2: Vec<T>,
    pub b2: Vec<T>,
}

impl<T: Scalar> CriticGrads<T> {
    fn zeros(input: usize, hidden: usize) -> Self {
        CriticGrads {
            w1: vec![T::zero(); hidden * input],
            b1: vec![T::zero(); hidden],
            w2: vec![T::zero(); hidden],
            b2: vec![T::zero()],
        }
    }

    pub fn into_vec(self) -> Vec<Vec<T>> {
        vec![self.w1, self.b1, self.w2, self.b2]
    }
}

impl<T: Scalar> Critic<T> {
    /// 896 → 128 → 1, zero-initialised.
    pub fn standard() -> Self {
        Self::zeros(FEATURE_DIM, HIDDEN_UNITS)
    }

    pub fn zeros(input: usize, hidden: usize) -> Self {
        Critic {
            w1: Tensor::zeros([hidden, input]),
            b1: Tensor::zeros([hidden]),
            w2: Tensor::zeros([1, hidden]),
            b2: Tensor::zeros([1]),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.shape()[1]
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.shape()[0]
    }

    pub fn init<R: Rng>(&mut self, rng: &mut R) {
        let (h, d) = (self.hidden_dim(), self.input_dim());
        self.w1 = glorot_uniform(rng, &[h, d], d, h);
        self.b1 = Tensor::zeros([h]);
        self.w2 = glorot_uniform(rng, &[1, h], h, 1);
        self.b2 = Tensor::zeros([1]);
    }

    fn check_width(&self, h: &Tensor<T>) -> Result<usize> {
        if h.rank() != 2 || h.shape()[1] != self.input_dim() {
            return Err(Error::dim(format!(
                "critic expects [batch, {}], got {:?}",
                self.input_dim(),
                h.shape()
            )));
        }
        Ok(h.shape()[0])
    }

    /// Pre-activations `Z = H W1ᵀ + b1`, `[rows, hidden]`.
    fn hidden(&self, h: &Tensor<T>, rows: usize) -> Vec<T> {
        let hid = self.hidden_dim();
        let mut z = vec![T::zero(); rows * hid];
        for row in z.chunks_exact_mut(hid) {
            row.copy_from_slice(self.b1.data());
        }
        gemm(
            h.data(),
            rows,
            self.input_dim(),
            false,
            self.w1.data(),
            hid,
            self.input_dim(),
            true,
            T::one(),
            T::one(),
            &mut z,
        );
        z
    }

    fn score_rows(&self, z: &[T]) -> Vec<T> {
        let w2 = self.w2.data();
        let b2 = self.b2.data()[0];
        z.chunks_exact(self.hidden_dim())
            .map(|row| {
                row.iter()
                    .zip(w2)
                    .fold(b2, |acc, (&zi, &wi)| acc + zi.max(T::zero()) * wi)
            })
            .collect()
    }

    /// One real score per feature row.
    pub fn scores(&self, h: &Tensor<T>) -> Result<Vec<T>> {
        let rows = self.check_width(h)?;
        Ok(self.score_rows(&self.hidden(h, rows)))
    }

    /// Records the critic on a tape, `h: [batch, input] -> [batch, 1]`.
    /// Returns the score node and `[w1, b1, w2, b2]` vars.
    pub fn forward(&self, tape: &mut Tape<T>, h: Var, trainable: bool) -> Result<(Var, Vec<Var>)> {
        let bind = |tape: &mut Tape<T>, t: &Tensor<T>| {
            if trainable {
                tape.param(t.clone())
            } else {
                tape.constant(t.clone())
            }
        };
        let w1 = bind(tape, &self.w1);
        let b1 = bind(tape, &self.b1);
        let w2 = bind(tape, &self.w2);
        let b2 = bind(tape, &self.b2);
        let z = tape.dense(h, w1, Some(b1))?;
        let a = tape.relu(z)?;
        let s = tape.dense(a, w2, Some(b2))?;
        Ok((s, vec![w1, b1, w2, b2]))
    }

    /// `∇_h r_c(h)` for every row, `[rows, input]`.
    pub fn input_gradients(&self, h: &Tensor<T>) -> Result<Tensor<T>> {
        let rows = self.check_width(h)?;
        let z = self.hidden(h, rows);
        let a = self.gated_output_weights(&z);
        let mut g = vec![T::zero(); rows * self.input_dim()];
        gemm(
            &a,
            rows,
            self.hidden_dim(),
            false,
            self.w1.data(),
            self.hidden_dim(),
            self.input_dim(),
            false,
            T::one(),
            T::zero(),
            &mut g,
        );
        Tensor::new([rows, self.input_dim()], g)
    }

    /// `A = w2 ⊙ 1[Z > 0]` row by row.
    fn gated_output_weights(&self, z: &[T]) -> Vec<T> {
        let w2 = self.w2.data();
        z.chunks_exact(self.hidden_dim())
            .flat_map(|row| {
                row.iter()
                    .zip(w2)
                    .map(|(&zi, &wi)| if zi > T::zero() { wi } else { T::zero() })
            })
            .collect()
    }
}

impl<T: Scalar> Parameters<T> for Critic<T> {
    fn named(&self) -> Vec<(&'static str, &Tensor<T>)> {
        vec![
            ("w1", &self.w1),
            ("b1", &self.b1),
            ("w2", &self.w2),
            ("b2", &self.b2),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }
}

fn mean<T: Scalar>(v: &[T]) -> T {
    v.iter().copied().sum::<T>() / T::from_f64(v.len() as f64)
}

/// `l_wd = mean(r_c(h_s)) − mean(r_c(h_t))` over minibatches.
pub fn empirical_wasserstein<T: Scalar>(
    h_s: &Tensor<T>,
    h_t: &Tensor<T>,
    critic: &Critic<T>,
) -> Result<T> {
    if h_s.shape()[0] == 0 || h_t.shape()[0] == 0 {
        return Err(Error::input("empirical Wasserstein needs non-empty batches"));
    }
    Ok(mean(&critic.scores(h_s)?) - mean(&critic.scores(h_t)?))
}

/// Straight-line points `ε_i h_s[i] + (1 − ε_i) h_t[i]` for given `ε`.
pub fn interpolates_with<T: Scalar>(h_s: &Tensor<T>, h_t: &Tensor<T>, eps: &[T]) -> Result<Tensor<T>> {
    if h_s.shape() != h_t.shape() || h_s.rank() != 2 {
        return Err(Error::dim(format!(
            "interpolation needs equal [batch, width] batches, got {:?} and {:?}",
            h_s.shape(),
            h_t.shape()
        )));
    }
    let (rows, width) = (h_s.shape()[0], h_s.shape()[1]);
    if eps.len() != rows {
        return Err(Error::dim(format!("{} mixing weights for {rows} pairs", eps.len())));
    }
    let mut out = Vec::with_capacity(rows * width);
    for ((s, t), &e) in h_s
        .data()
        .chunks_exact(width)
        .zip(h_t.data().chunks_exact(width))
        .zip(eps)
    {
        out.extend(s.iter().zip(t).map(|(&a, &b)| e * a + (T::one() - e) * b));
    }
    Tensor::new([rows, width], out)
}

/// Random straight-line points, one `ε ~ U(0, 1)` per index-paired row.
pub fn interpolates<T: Scalar, R: Rng>(
    h_s: &Tensor<T>,
    h_t: &Tensor<T>,
    rng: &mut R,
) -> Result<Tensor<T>> {
    let unit = Uniform::new(0.0f64, 1.0).expect("valid range");
    let eps: Vec<T> = (0..h_s.shape()[0])
        .map(|_| T::from_f64(unit.sample(rng)))
        .collect();
    interpolates_with(h_s, h_t, &eps)
}

/// Row concatenation `{h_s, h_t, h_r}`.
pub fn assemble_h<T: Scalar>(h_s: &Tensor<T>, h_t: &Tensor<T>, h_r: &Tensor<T>) -> Result<Tensor<T>> {
    let width = h_s.shape()[1];
    if [h_t, h_r].iter().any(|h| h.rank() != 2 || h.shape()[1] != width) {
        return Err(Error::dim("assembled batches must share their width"));
    }
    let rows = h_s.shape()[0] + h_t.shape()[0] + h_r.shape()[0];
    let mut data = Vec::with_capacity(rows * width);
    data.extend_from_slice(h_s.data());
    data.extend_from_slice(h_t.data());
    data.extend_from_slice(h_r.data());
    Tensor::new([rows, width], data)
}

/// `mean((‖∇_h r_c(h)‖₂ − 1)²)` over the rows of `h`.
pub fn gradient_penalty<T: Scalar>(h: &Tensor<T>, critic: &Critic<T>) -> Result<T> {
    let g = critic.input_gradients(h)?;
    let width = critic.input_dim();
    let terms: Vec<T> = g
        .data()
        .chunks_exact(width)
        .map(|row| {
            let norm = row.iter().map(|&v| v * v).sum::<T>().sqrt();
            (norm - T::one()).powi(2)
        })
        .collect();
    Ok(mean(&terms))
}

/// Value and θ_c-gradient of `l_wd − ρ·l_grad`.
#[derive(Debug, Clone)]
pub struct CriticObjective<T> {
    pub value: T,
    pub wasserstein: T,
    pub penalty: T,
    pub grads: CriticGrads<T>,
}

/// Critic objective on source rows `h_s`, target rows `h_t` and interpolates
/// `h_r`; the penalty is averaged over all three sets together.
pub fn critic_objective<T: Scalar>(
    h_s: &Tensor<T>,
    h_t: &Tensor<T>,
    h_r: &Tensor<T>,
    critic: &Critic<T>,
    rho: f64,
) -> Result<CriticObjective<T>> {
    if rho < 0.0 {
        return Err(Error::input(format!("penalty weight must be >= 0, got {rho}")));
    }
    let (ns, nt) = (h_s.shape()[0], h_t.shape()[0]);
    if ns == 0 || nt == 0 {
        return Err(Error::input("critic objective needs non-empty batches"));
    }
    let all = assemble_h(h_s, h_t, h_r)?;
    let rows = critic.check_width(&all)?;
    let (hid, inp) = (critic.hidden_dim(), critic.input_dim());
    let z = critic.hidden(&all, rows);
    let scores = critic.score_rows(&z);
    let wd = mean(&scores[..ns]) - mean(&scores[ns..ns + nt]);

    let mut grads = CriticGrads::zeros(inp, hid);
    let a = critic.gated_output_weights(&z);

    // l_wd: per-row weights c_i = +1/ns (source), −1/nt (target)
    let weights: Vec<T> = (0..ns + nt)
        .map(|i| {
            if i < ns {
                T::one() / T::from_f64(ns as f64)
            } else {
                -T::one() / T::from_f64(nt as f64)
            }
        })
        .collect();
    let mut ca = vec![T::zero(); (ns + nt) * hid];
    for (i, &c) in weights.iter().enumerate() {
        let zrow = &z[i * hid..(i + 1) * hid];
        let arow = &a[i * hid..(i + 1) * hid];
        for j in 0..hid {
            ca[i * hid + j] = c * arow[j];
            grads.w2[j] = grads.w2[j] + c * zrow[j].max(T::zero());
            grads.b1[j] = grads.b1[j] + c * arow[j];
        }
        grads.b2[0] = grads.b2[0] + c;
    }
    gemm(
        &ca,
        ns + nt,
        hid,
        true,
        &all.data()[..(ns + nt) * inp],
        ns + nt,
        inp,
        false,
        T::one(),
        T::zero(),
        &mut grads.w1,
    );

    // l_grad
    let mut g = vec![T::zero(); rows * inp];
    gemm(&a, rows, hid, false, critic.w1.data(), hid, inp, false, T::one(), T::zero(), &mut g);
    let n = T::from_f64(rows as f64);
    let mut penalty = T::zero();
    let two = T::from_f64(2.0);
    for row in g.chunks_exact_mut(inp) {
        let norm = row.iter().map(|&v| v * v).sum::<T>().sqrt();
        penalty = penalty + (norm - T::one()).powi(2);
        // row <- d/dG of (norm - 1)^2 / n; zero where the norm vanishes
        let coef = if norm > T::zero() {
            two * (norm - T::one()) / (norm * n)
        } else {
            T::zero()
        };
        for v in row.iter_mut() {
            *v = *v * coef;
        }
    }
    let penalty = penalty / n;

    if rho > 0.0 {
        let neg_rho = T::from_f64(-rho);
        // ∂/∂W1 = Aᵀ U
        gemm(&a, rows, hid, true, &g, rows, inp, false, neg_rho, T::one(), &mut grads.w1);
        // ∂/∂w2 = colsum(1[Z>0] ⊙ (U W1ᵀ))
        let mut v = vec![T::zero(); rows * hid];
        gemm(&g, rows, inp, false, critic.w1.data(), hid, inp, true, T::one(), T::zero(), &mut v);
        for (vrow, zrow) in v.chunks_exact(hid).zip(z.chunks_exact(hid)) {
            for j in 0..hid {
                if zrow[j] > T::zero() {
                    grads.w2[j] = grads.w2[j] + neg_rho * vrow[j];
                }
            }
        }
    }

    Ok(CriticObjective {
        value: wd - T::from_f64(rho) * penalty,
        wasserstein: wd,
        penalty,
        grads,
    })
}

/// Extractor-side objective `l_c + λ·l_wd` (penalty omitted).
pub fn combined_loss(classification: f64, wasserstein: f64, lambda: f64) -> Result<f64> {
    if lambda < 0.0 {
        return Err(Error::input(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(classification + lambda * wasserstein)
}

/// Ascends the critic objective on fixed batches `h_s`, `h_t` for `steps`
/// Adam steps with fresh interpolates each step. Returns the objective value
/// before every step followed by the final one.
pub fn fit_critic<T: Scalar, R: Rng>(
    critic: &mut Critic<T>,
    h_s: &Tensor<T>,
    h_t: &Tensor<T>,
    steps: usize,
    learning_rate: f64,
    rho: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut opt = Optimizer::<T>::new(OptimizerKind::Adam, learning_rate);
    let mut values = Vec::with_capacity(steps + 1);
    for _ in 0..steps {
        let h_r = interpolates(h_s, h_t, rng)?;
        let obj = critic_objective(h_s, h_t, &h_r, critic, rho)?;
        values.push(obj.value.as_f64());
        opt.step(&mut critic.tensors_mut(), &obj.grads.into_vec(), Direction::Ascent)?;
    }
    let h_r = interpolates(h_s, h_t, rng)?;
    values.push(critic_objective(h_s, h_t, &h_r, critic, rho)?.value.as_f64());
    Ok(values)
}

/// Exact Wasserstein-1 between two equal-size, equal-weight 1-D samples:
/// mean absolute difference of the sorted values.
pub fn w1_empirical_1d(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::input(format!(
            "exact 1-D W1 needs equal sample counts, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.is_empty() {
        return Err(Error::input("exact 1-D W1 needs at least one sample"));
    }
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}
