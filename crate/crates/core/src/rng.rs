//! Seedable deterministic random number generation.
//!
//! Experiments must be reproducible bit-for-bit from a single 64-bit seed, and
//! changing one generator parameter (e.g. a perturbation scale) must not shift
//! any other draws. Each purpose therefore gets its own substream, derived from
//! the base seed and a fixed stream offset.

/// SplitMix64, used to expand seeds into generator state.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// Substream identifiers. Fixed offsets keep draw sequences independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Weights,
    Factors,
    InitPerturbation,
    Incoherence,
    Cyclic,
    InitFactors,
    Restart(u64),
}

impl Stream {
    fn offset(self) -> u64 {
        match self {
            Stream::Weights => 1,
            Stream::Factors => 2,
            Stream::InitPerturbation => 3,
            Stream::Incoherence => 4,
            Stream::Cyclic => 5,
            Stream::InitFactors => 6,
            Stream::Restart(attempt) => 0x100 + attempt,
        }
    }
}

/// xoshiro256++ with Box-Muller normal draws.
#[derive(Debug, Clone)]
pub struct StreamRng {
    s: [u64; 4],
    spare_normal: Option<f64>,
}

impl StreamRng {
    /// A generator for `stream` derived from the 64-bit `seed`.
    pub fn new(seed: u64, stream: Stream) -> Self {
        let mut sm = SplitMix64::new(
            seed ^ stream.offset().wrapping_mul(0xD1B5_4A32_D192_ED03),
        );
        let mut s = [0u64; 4];
        for slot in &mut s {
            *slot = sm.next_u64();
        }
        // xoshiro must not start from the all-zero state
        if s == [0, 0, 0, 0] {
            s[0] = 0x9E37_79B9_7F4A_7C15;
        }
        Self {
            s,
            spare_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[0]
            .wrapping_add(self.s[3])
            .rotate_left(23)
            .wrapping_add(self.s[0]);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw (Box-Muller; the paired draw is cached).
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // u1 in (0, 1] so the logarithm is finite
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(radius * theta.sin());
        radius * theta.cos()
    }

    /// A vector of standard normal draws.
    pub fn normal_vec(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.normal()).collect()
    }

    /// A unit vector drawn uniformly from the sphere in `R^len`.
    pub fn unit_sphere(&mut self, len: usize) -> Vec<f64> {
        loop {
            let v = self.normal_vec(len);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }
}
