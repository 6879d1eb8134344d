use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{CorrelationSpec, TimeGrid};

/// A reproducible Gaussian stream identified by `(master_seed, stream_index)`.
///
/// Backed by ChaCha8 keyed by the master seed with the stream index selecting
/// one of its 2^64 independent streams, so path `i` never depends on how
/// many other paths exist or which worker simulates it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self { master_seed, stream_index }
    }

    pub fn source(&self) -> GaussianSource {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        GaussianSource { rng }
    }
}

/// Streams for one experiment cell: stream index = `cell << 32 | path`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamFamily {
    pub master_seed: u64,
    pub cell: u32,
}

impl StreamFamily {
    pub fn new(master_seed: u64, cell: u32) -> Self {
        Self { master_seed, cell }
    }

    pub fn stream(&self, path: usize) -> RngStream {
        debug_assert!(path < (1usize << 32));
        RngStream::new(self.master_seed, (u64::from(self.cell) << 32) | path as u64)
    }
}

/// Standard normal draws from one [`RngStream`].
#[derive(Debug, Clone)]
pub struct GaussianSource {
    rng: ChaCha8Rng,
}

impl GaussianSource {
    #[inline]
    pub fn next_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    #[inline]
    pub fn fill(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.rng.sample(StandardNormal);
        }
    }

    /// Substream cursor: 32-bit words consumed so far.
    pub fn cursor(&self) -> u128 {
        self.rng.get_word_pos()
    }
}

/// Produces the per-step driver increments `(dW, dZ, dW~)`.
///
/// Each step draws `d` normals for `W` followed by `l` for `Z`; every
/// simulator in the crate consumes increments through this type so that
/// runs sharing a stream are coupled pathwise.
#[derive(Debug, Clone)]
pub struct IncrementGenerator<'a> {
    spec: &'a CorrelationSpec,
    source: GaussianSource,
}

impl<'a> IncrementGenerator<'a> {
    pub fn new(spec: &'a CorrelationSpec, stream: RngStream) -> Self {
        Self { spec, source: stream.source() }
    }

    #[inline]
    pub fn next(&mut self, dt: f64, dw: &mut [f64], dz: &mut [f64], dw_tilde: &mut [f64]) {
        let scale = dt.sqrt();
        self.source.fill(dw);
        self.source.fill(dz);
        for v in dw.iter_mut() {
            *v *= scale;
        }
        for v in dz.iter_mut() {
            *v *= scale;
        }
        self.spec.mix(dw, dz, dw_tilde);
    }
}

/// Increments over a whole grid: `dw` is `n_steps x d`, `dw_tilde` is `n_steps x l`.
#[derive(Debug, Clone, PartialEq)]
pub struct Increments {
    pub dw: Vec<f64>,
    pub dw_tilde: Vec<f64>,
}

pub fn sample_increments(spec: &CorrelationSpec, grid: &TimeGrid, stream: RngStream) -> Increments {
    let (d, l, n) = (spec.slow_dim(), spec.fast_dim(), grid.n_steps());
    let mut gen = IncrementGenerator::new(spec, stream);
    let mut dw = vec![0.0; n * d];
    let mut dw_tilde = vec![0.0; n * l];
    let mut dz = vec![0.0; l];
    for k in 0..n {
        gen.next(grid.step(), &mut dw[k * d..(k + 1) * d], &mut dz, &mut dw_tilde[k * l..(k + 1) * l]);
    }
    Increments { dw, dw_tilde }
}
