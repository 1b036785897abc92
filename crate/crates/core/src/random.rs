//! Seeded random states.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::linalg::{self, Mat, C64};
use crate::qubit_core::{DensityMatrix, PureState, TwoQubitState};

pub type StreamRng = ChaCha8Rng;

/// Seed of the `stream`-th independent sub-stream of `master` (splitmix64 mix).
pub fn split_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_rng(master: u64, stream: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(split_seed(master, stream))
}

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random pure two-qubit state.
pub fn haar_state<R: Rng + ?Sized>(rng: &mut R) -> PureState {
    loop {
        let v: [C64; 4] = std::array::from_fn(|_| gaussian_c64(rng));
        if linalg::norm_sqr(&v) > 1e-300 {
            return PureState::normalized(v).expect("nonzero gaussian vector");
        }
    }
}

/// Hilbert-Schmidt random mixed state `G G^dag / tr(G G^dag)`.
pub fn hilbert_schmidt_state<R: Rng + ?Sized>(rng: &mut R) -> TwoQubitState {
    let g: Mat<4> = std::array::from_fn(|_| std::array::from_fn(|_| gaussian_c64(rng)));
    let m = linalg::matmul(&g, &linalg::adjoint(&g));
    let t = linalg::trace(&m).re;
    let mut m = linalg::scale(&m, 1.0 / t);
    // exact hermiticity after rounding
    for r in 0..4 {
        m[r][r].im = 0.0;
        for c in r + 1..4 {
            m[c][r] = m[r][c].conj();
        }
    }
    DensityMatrix::new(m).expect("Gram matrix is a state")
}

/// `(1 - eps)|psi><psi| + eps sigma` with `psi` Haar and `sigma` Hilbert-Schmidt.
pub fn near_pure_state<R: Rng + ?Sized>(rng: &mut R, eps: f64) -> Result<TwoQubitState> {
    let psi = haar_state(rng);
    let sigma = hilbert_schmidt_state(rng);
    DensityMatrix::from_pure(psi.amplitudes())?.mix(&sigma, eps)
}
