//! Deterministic random streams.
//!
//! Every stochastic operation takes an explicit [`Stream`]. Streams are
//! derived from a master seed, a purpose label and integer indices, so a
//! whole experiment replays bit-identically from its seed, and parallel
//! workers get independent streams without sharing state.

/// Xoshiro256++ generator seeded through SplitMix64.
#[derive(Clone, Debug)]
pub struct Stream {
    s: [u64; 4],
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    h
}

impl Stream {
    pub fn from_seed(seed: u64) -> Self {
        let mut sm = seed;
        let mut s = [0u64; 4];
        for w in &mut s {
            *w = splitmix64(&mut sm);
        }
        Stream { s }
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = (self.s[0].wrapping_add(self.s[3]))
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

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn bit(&mut self) -> bool {
        self.next_u64() & 1 == 1
    }

    /// Standard normal draw (Box-Muller, two uniforms consumed per call).
    pub fn normal(&mut self) -> f64 {
        let u1 = loop {
            let u = self.uniform();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn range(&mut self, n: u64) -> u64 {
        // Lemire-style bounded draw with rejection; exact uniformity.
        assert!(n > 0);
        let threshold = n.wrapping_neg() % n;
        loop {
            let x = self.next_u64();
            let m = (x as u128).wrapping_mul(n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// Spawn `n` independent child streams, consuming `n` draws from self.
    pub fn split(&mut self, n: usize) -> Vec<Stream> {
        (0..n).map(|_| Stream::from_seed(self.next_u64())).collect()
    }
}

/// Root of the stream tree for one experiment.
#[derive(Clone, Copy, Debug)]
pub struct StreamKey {
    master: u64,
}

impl StreamKey {
    pub fn new(master_seed: u64) -> Self {
        StreamKey {
            master: master_seed,
        }
    }

    pub fn seed(&self) -> u64 {
        self.master
    }

    /// Stream for (label, indices); identical arguments give identical streams.
    pub fn stream(&self, label: &str, indices: &[u64]) -> Stream {
        let mut h = self.master ^ fnv1a(label.as_bytes());
        let mut acc = h;
        for &ix in indices {
            h = splitmix64(&mut acc) ^ ix.wrapping_mul(0x9e37_79b9_7f4a_7c15);
            acc ^= h;
        }
        let _ = splitmix64(&mut acc);
        Stream::from_seed(acc)
    }
}
