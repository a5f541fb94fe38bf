use serde::Serialize;

/// Hook through which the encoder reports the arithmetic it performs.
///
/// The uncounted path uses [`NoTally`], which compiles to nothing.
pub trait OpTally {
    fn excitatory(&mut self, mults: u64, adds: u64);
    fn inhibition(&mut self, mults: u64, adds: u64);
    fn leak(&mut self, mults: u64);
    fn combine(&mut self, adds: u64);
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoTally;

impl OpTally for NoTally {
    #[inline(always)]
    fn excitatory(&mut self, _: u64, _: u64) {}
    #[inline(always)]
    fn inhibition(&mut self, _: u64, _: u64) {}
    #[inline(always)]
    fn leak(&mut self, _: u64) {}
    #[inline(always)]
    fn combine(&mut self, _: u64) {}
}

/// Multiplies and adds executed by one encoding, split by where they occur.
///
/// Accounting: the inhibition sum for neuron `i` is accumulated straight into
/// `b_i - u_i`, so each gathered term costs one multiply and one add. The
/// remaining per-neuron work is one add for `b_i - u_i`, one multiply by
/// `dt/tau` (the leak) and one add into `u_i`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OpCount {
    pub excitatory_mults: u64,
    pub excitatory_adds: u64,
    pub inhibition_mults: u64,
    pub inhibition_adds: u64,
    pub leak_mults: u64,
    pub combine_adds: u64,
}

impl OpCount {
    pub fn total(&self) -> u64 {
        self.excitatory_mults
            + self.excitatory_adds
            + self.inhibition_mults
            + self.inhibition_adds
            + self.leak_mults
            + self.combine_adds
    }

    /// Everything except the once-per-input excitatory projection.
    pub fn dynamics_total(&self) -> u64 {
        self.total() - self.excitatory_mults - self.excitatory_adds
    }
}

impl OpTally for OpCount {
    fn excitatory(&mut self, mults: u64, adds: u64) {
        self.excitatory_mults += mults;
        self.excitatory_adds += adds;
    }
    fn inhibition(&mut self, mults: u64, adds: u64) {
        self.inhibition_mults += mults;
        self.inhibition_adds += adds;
    }
    fn leak(&mut self, mults: u64) {
        self.leak_mults += mults;
    }
    fn combine(&mut self, adds: u64) {
        self.combine_adds += adds;
    }
}
