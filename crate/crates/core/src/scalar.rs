//! Floating point element types the numeric core is generic over.
//!
//! Property and gradient tests run in `f64`; training defaults to `f32`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::Float;

pub trait Scalar:
    Float + Debug + Display + Default + Sum + Send + Sync + 'static
{
    const NAME: &'static str;

    fn from_f64(v: f64) -> Self;

    fn as_f64(self) -> f64;

    /// `C <- alpha * A * B + beta * C` for arbitrarily strided row/column
    /// layouts. `A` is `m x k`, `B` is `k x n`, `C` is `m x n`.
    ///
    /// # Safety
    /// The strides must address memory inside the given slices.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );
}

impl Scalar for f32 {
    const NAME: &'static str = "f32";

    fn from_f64(v: f64) -> Self {
        v as f32
    }

    fn as_f64(self) -> f64 {
        self as f64
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

impl Scalar for f64 {
    const NAME: &'static str = "f64";

    fn from_f64(v: f64) -> Self {
        v
    }

    fn as_f64(self) -> f64 {
        self
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

/// Dense row-major matrix product with optional transposes:
/// `c = alpha * op(a) * op(b) + beta * c`.
///
/// `a` is stored row-major as `a_rows x a_cols` before `op` is applied,
/// likewise `b`. `c` must hold `m * n` elements where `m`, `n` are the
/// dimensions after transposition.
#[allow(clippy::too_many_arguments)]
pub fn gemm<T: Scalar>(
    a: &[T],
    a_rows: usize,
    a_cols: usize,
    trans_a: bool,
    b: &[T],
    b_rows: usize,
    b_cols: usize,
    trans_b: bool,
    alpha: T,
    beta: T,
    c: &mut [T],
) {
    assert_eq!(a.len(), a_rows * a_cols, "gemm: lhs storage");
    assert_eq!(b.len(), b_rows * b_cols, "gemm: rhs storage");
    let (m, k, rsa, csa) = if trans_a {
        (a_cols, a_rows, 1, a_cols as isize)
    } else {
        (a_rows, a_cols, a_cols as isize, 1)
    };
    let (kb, n, rsb, csb) = if trans_b {
        (b_cols, b_rows, 1, b_cols as isize)
    } else {
        (b_rows, b_cols, b_cols as isize, 1)
    };
    assert_eq!(k, kb, "gemm: inner dimensions differ");
    assert_eq!(c.len(), m * n, "gemm: output storage");
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: lengths were checked above, strides stay within the slices.
    unsafe {
        T::gemm_raw(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        )
    }
}
