use num_complex::Complex64;

/// Recursive mixed-radix decimation-in-time FFT for any length.
///
/// The length is split into its prime factors; each stage combines `p`
/// interleaved sub-transforms with a direct size-`p` DFT, so prime factors
/// larger than the small radices degrade gracefully to `O(n·p)` work.
#[derive(Debug, Clone)]
pub struct FftPlan {
    len: usize,
    factors: Vec<usize>,
    /// `exp(-2πi k / len)` for `k in 0..len`.
    twiddles: Vec<Complex64>,
}

fn factorize(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    // radix 4 first keeps the stage count low for power-of-two parts
    while n % 4 == 0 {
        out.push(4);
        n /= 4;
    }
    let mut p = 2;
    while n > 1 {
        while n % p == 0 {
            out.push(p);
            n /= p;
        }
        p += 1;
        if p * p > n && n > 1 {
            out.push(n);
            break;
        }
    }
    out
}

impl FftPlan {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "FFT length must be positive");
        let twiddles = (0..len)
            .map(|k| {
                let theta = -2.0 * std::f64::consts::PI * k as f64 / len as f64;
                Complex64::new(theta.cos(), theta.sin())
            })
            .collect();
        FftPlan {
            len,
            factors: factorize(len),
            twiddles,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    /// Forward transform `X_k = Σ_t x_t e^{-2πi kt/n}`.
    pub fn forward(&self, input: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(input.len(), self.len, "input length differs from plan");
        let mut out = vec![Complex64::default(); self.len];
        self.recurse(input, 1, &mut out, &self.factors);
        out
    }

    pub fn forward_real(&self, input: &[f64]) -> Vec<Complex64> {
        let c: Vec<Complex64> = input.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&c)
    }

    /// Transforms `input[0], input[stride], ...` (n = out.len() points) into `out`.
    fn recurse(&self, input: &[Complex64], stride: usize, out: &mut [Complex64], factors: &[usize]) {
        let n = out.len();
        if n == 1 {
            out[0] = input[0];
            return;
        }
        let p = factors[0];
        let m = n / p;
        // sub-transform j lives in out[j*m .. (j+1)*m]
        for j in 0..p {
            self.recurse(&input[j * stride..], stride * p, &mut out[j * m..(j + 1) * m], &factors[1..]);
        }
        let tw_step = self.len / n;
        let mut scratch = vec![Complex64::default(); p];
        for k in 0..m {
            for (j, s) in scratch.iter_mut().enumerate() {
                *s = out[j * m + k] * self.twiddles[(j * k * tw_step) % self.len];
            }
            for q in 0..p {
                let mut acc = Complex64::default();
                for (j, &s) in scratch.iter().enumerate() {
                    // W_p^{jq} = W_len^{jq len/p}
                    acc += s * self.twiddles[(j * q * (self.len / p)) % self.len];
                }
                out[k + q * m] = acc;
            }
        }
    }
}
