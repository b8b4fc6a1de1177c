//! Counter-based random source shared by the whole workspace.
//!
//! A SplitMix64 stream: the state advances by a fixed odd constant and the
//! output is a finalizing hash of the counter, so a stream is a pure function
//! of `(seed, draw index)`. Gaussian samples come from the Box-Muller
//! transform, drawn in pairs with the second value cached.

use faer::{Col, Mat};

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone)]
pub struct CounterRng {
    counter: u64,
    spare_gaussian: Option<f64>,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self {
            counter: seed,
            spare_gaussian: None,
        }
    }

    /// Derive an independent stream, e.g. one per repeat or per column swap.
    pub fn stream(seed: u64, stream: u64) -> Self {
        Self::new(seed ^ stream.wrapping_mul(0xA24B_AED4_963E_E407))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(GAMMA);
        let mut z = self.counter;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in (0, 1]; never returns 0 so `ln` below is safe.
    pub fn next_uniform(&mut self) -> f64 {
        (((self.next_u64() >> 11) + 1) as f64) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal sample via Box-Muller.
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare_gaussian.take() {
            return z;
        }
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare_gaussian = Some(radius * s);
        radius * c
    }

    /// Column-major standard Gaussian matrix.
    pub fn gaussian_mat(&mut self, nrows: usize, ncols: usize) -> Mat<f64> {
        let mut m = Mat::zeros(nrows, ncols);
        for j in 0..ncols {
            for i in 0..nrows {
                m[(i, j)] = self.next_gaussian();
            }
        }
        m
    }

    pub fn gaussian_col(&mut self, n: usize) -> Col<f64> {
        let mut c = Col::zeros(n);
        for i in 0..n {
            c[i] = self.next_gaussian();
        }
        c
    }

    /// Gaussian direction normalized to unit length.
    pub fn unit_col(&mut self, n: usize) -> Col<f64> {
        loop {
            let c = self.gaussian_col(n);
            let norm = c.norm_l2();
            if norm > 0.0 {
                return c / norm;
            }
        }
    }
}
