//! Scoped flush-to-zero for subnormal floats.
//!
//! Gradient-penalty coefficients and Adam moments decay into the subnormal
//! range during long runs, and subnormal arithmetic is several times slower
//! on x86. Training loops hold a [`FlushSubnormals`] guard so those values
//! are treated as zero.

#[cfg(target_arch = "x86_64")]
mod imp {
    use std::arch::asm;

    /// MXCSR flush-to-zero (bit 15) and denormals-are-zero (bit 6).
    const FTZ_DAZ: u32 = 0x8040;

    pub fn read() -> u32 {
        let mut v: u32 = 0;
        // SAFETY: stores the SSE control register into a local.
        unsafe { asm!("stmxcsr [{}]", in(reg) &mut v, options(nostack, preserves_flags)) };
        v
    }

    pub fn write(v: u32) {
        // SAFETY: loads a value previously read from MXCSR with only the
        // FTZ/DAZ bits changed; no exception masks are altered.
        unsafe { asm!("ldmxcsr [{}]", in(reg) &v, options(nostack, preserves_flags, readonly)) };
    }

    pub fn enable(v: u32) -> u32 {
        v | FTZ_DAZ
    }
}

#[cfg(not(target_arch = "x86_64"))]
mod imp {
    pub fn read() -> u32 {
        0
    }

    pub fn write(_: u32) {}

    pub fn enable(v: u32) -> u32 {
        v
    }
}

/// Enables flush-to-zero on the current thread until dropped.
pub struct FlushSubnormals {
    saved: u32,
}

impl FlushSubnormals {
    pub fn new() -> Self {
        let saved = imp::read();
        imp::write(imp::enable(saved));
        FlushSubnormals { saved }
    }
}

impl Default for FlushSubnormals {
    fn default() -> Self {
        Self::new()
    }
}

impl Drop for FlushSubnormals {
    fn drop(&mut self) {
        imp::write(self.saved);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn guard_flushes_and_restores() {
        let tiny = std::hint::black_box(f32::MIN_POSITIVE);
        let half = std::hint::black_box(0.5f32);
        assert!(tiny * half > 0.0);
        {
            let _g = FlushSubnormals::new();
            if cfg!(target_arch = "x86_64") {
                assert_eq!(std::hint::black_box(tiny) * std::hint::black_box(half), 0.0);
            }
        }
        assert!(std::hint::black_box(tiny) * std::hint::black_box(half) > 0.0);
    }
}
