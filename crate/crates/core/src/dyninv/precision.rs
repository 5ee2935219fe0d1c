/// How many fractional bits a fixed-point run uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrecisionMode {
    /// Bits derived from the worst-case error growth of repeated Woodbury steps.
    Certified { kappa: f64, t_max: usize, eps: f64 },
    /// A caller-chosen number of bits.
    Empirical { bits: u32 },
}

impl PrecisionMode {
    pub fn bits(&self) -> u32 {
        match *self {
            PrecisionMode::Certified { kappa, t_max, eps } => certified_bits(kappa, t_max, eps),
            PrecisionMode::Empirical { bits } => bits,
        }
    }
}

/// `⌈27·log₂κ + log₂(t_max/ε) + 16⌉`.
pub fn certified_bits(kappa: f64, t_max: usize, eps: f64) -> u32 {
    assert!(kappa >= 1.0 && eps > 0.0, "need kappa >= 1 and eps > 0");
    let t = t_max.max(1) as f64;
    let b = 27.0 * kappa.log2() + (t / eps).log2() + 16.0;
    b.ceil().max(1.0) as u32
}
