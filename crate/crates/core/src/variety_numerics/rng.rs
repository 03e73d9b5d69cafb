use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Stream reserved for frame search, disjoint from every sample index.
const FRAME_STREAM: u64 = u64::MAX;

/// Independent generator for sample `index` under `seed`.
///
/// Every sample owns a ChaCha stream, so its draws depend only on
/// `(seed, index)` and never on scheduling.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Seed of an independent sub-computation `tag` of a run seeded by `seed`
/// (SplitMix64 finalizer of the pair).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut x = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn frame_stream(seed: u64) -> ChaCha8Rng {
    substream(seed, FRAME_STREAM)
}

/// Standard complex Gaussian with `E|g|² = 2`.
pub fn complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
/// `diag(R)` folded back into `Q`.
pub fn haar_unitary(rng: &mut impl Rng, n: usize) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Affine coordinates of a Fubini-Study-uniform point of `P^n`.
pub fn sample_base(n: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    loop {
        let g: Vec<Complex64> = (0..=n).map(|_| complex_gaussian(rng)).collect();
        let norm = g.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if g[0].norm() >= 1e-6 * norm {
            return g[1..].iter().map(|x| x / g[0]).collect();
        }
    }
}
