//! Multiply-accumulate instrumentation for the propagation and learning kernels.

/// Sink for multiply-accumulate counts. `()` discards them.
pub trait Tally {
    fn add(&mut self, macs: u64);
}

impl Tally for () {
    #[inline(always)]
    fn add(&mut self, _macs: u64) {}
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MacCount(pub u64);

impl Tally for MacCount {
    #[inline]
    fn add(&mut self, macs: u64) {
        self.0 += macs;
    }
}
