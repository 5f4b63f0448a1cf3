//! Measurement directions and a correlation-level model of the singlet.
//!
//! Outcomes follow the labelling used throughout the crate: Alice's outcome
//! is 0 when she obtains the "+" vector of her basis, Bob's outcome is 1 when
//! he obtains "+". With those labels a shared pair measured along `a` and `b`
//! yields `P(A ⊕ B = 0) = ½(1 + a·b)`, and both marginals are uniform.
//!
//! The model samples the joint distribution directly (A uniform, then B
//! conditioned on A). It is a simulation device for the correlation law and
//! nothing more.

use rand::Rng;

use crate::error::{Error, Result};

const UNIT_TOLERANCE: f64 = 1e-12;

/// A unit vector on the Bloch sphere naming a measurement direction (the
/// "+" vector of a basis) or a pure qubit state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    x: f64,
    y: f64,
    z: f64,
}

impl BlochVector {
    pub const X: BlochVector = BlochVector { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: BlochVector = BlochVector { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: BlochVector = BlochVector { x: 0.0, y: 0.0, z: 1.0 };

    /// Normalizes `(x, y, z)`.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        let v = BlochVector {
            x: x / norm,
            y: y / norm,
            z: z / norm,
        };
        debug_assert!((v.norm_squared() - 1.0).abs() < UNIT_TOLERANCE);
        Ok(v)
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn components(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    fn norm_squared(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    /// Whether the components already have unit norm to within 1e-12.
    pub fn is_unit(x: f64, y: f64, z: f64) -> bool {
        ((x * x + y * y + z * z) - 1.0).abs() < UNIT_TOLERANCE
    }

    /// Inner product, clamped to `[-1, 1]`.
    pub fn dot(&self, other: &BlochVector) -> f64 {
        (self.x * other.x + self.y * other.y + self.z * other.z).clamp(-1.0, 1.0)
    }
}

impl std::ops::Neg for BlochVector {
    type Output = BlochVector;

    fn neg(self) -> BlochVector {
        BlochVector {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }
}

/// Free-function form of [`BlochVector::dot`].
pub fn dot(a: &BlochVector, b: &BlochVector) -> f64 {
    a.dot(b)
}

/// Outcomes of one shared pair: Alice's `A` (0 = "+") and Bob's `B`
/// (1 = "+").
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutcomePair {
    pub a_outcome: u8,
    pub b_outcome: u8,
}

fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    rng.gen::<f64>() < p
}

/// The outcome of a second measurement on a pair whose first outcome was
/// `first`: equal to it with probability `½(1 + a·b)`.
pub fn conditioned_outcome<R: Rng + ?Sized>(first: u8, a: &BlochVector, b: &BlochVector, rng: &mut R) -> u8 {
    let p_equal = 0.5 * (1.0 + a.dot(b));
    if bernoulli(rng, p_equal) {
        first
    } else {
        first ^ 1
    }
}

/// Samples both outcomes of a singlet measured along `a` (Alice) and `b`
/// (Bob).
pub fn correlate<R: Rng + ?Sized>(a: &BlochVector, b: &BlochVector, rng: &mut R) -> OutcomePair {
    let a_outcome = u8::from(rng.gen::<bool>());
    let b_outcome = conditioned_outcome(a_outcome, a, b, rng);
    OutcomePair {
        a_outcome,
        b_outcome,
    }
}

/// Measures a pure qubit state with Bloch vector `state` along `dir`.
/// Returns 1 for "+", which occurs with probability `½(1 + state·dir)`.
pub fn measure_state<R: Rng + ?Sized>(state: &BlochVector, dir: &BlochVector, rng: &mut R) -> u8 {
    u8::from(bernoulli(rng, 0.5 * (1.0 + state.dot(dir))))
}

/// One round of the steering reduction from a one-qubit code to an
/// entanglement-assisted one.
///
/// Alice measures her half of a singlet in the basis containing `codeword`.
/// Obtaining "+" collapses Bob's half onto the orthogonal state, so she sends
/// `flip = 1`; otherwise Bob already holds `codeword` and she sends 0. Bob
/// measures along `bob_dir` and XORs his "+"-outcome with `flip`.
///
/// Returns `(flip, outcome)`; `outcome ^ flip` is 1 with probability
/// `½(1 + codeword·bob_dir)`, matching a direct measurement of `codeword`.
pub fn steer_and_measure<R: Rng + ?Sized>(
    codeword: &BlochVector,
    bob_dir: &BlochVector,
    rng: &mut R,
) -> (u8, u8) {
    let pair = correlate(codeword, bob_dir, rng);
    (pair.a_outcome ^ 1, pair.b_outcome)
}

/// A supply of shared pairs that are measured lazily, one party at a time.
///
/// Both encoding and decoding address pairs by id; whichever request reaches
/// a pair first gets a uniform bit and the second gets a bit correlated with
/// it according to `P(equal) = ½(1 + a·b)`.
pub trait PairSource {
    fn measure(&mut self, pair: u32, axis: &BlochVector) -> Result<u8>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairState {
    Fresh,
    Half { axis: BlochVector, outcome: u8 },
    Done,
}

/// Lazily sampled singlets backed by one random stream.
#[derive(Debug)]
pub struct SingletPairs<R> {
    pairs: Vec<PairState>,
    rng: R,
}

impl<R: Rng> SingletPairs<R> {
    /// Creates pairs `0..count`.
    pub fn new(count: u32, rng: R) -> Self {
        SingletPairs {
            pairs: vec![PairState::Fresh; count as usize],
            rng,
        }
    }

    pub fn state(&self, pair: u32) -> Option<PairState> {
        self.pairs.get(pair as usize).copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Gives back the random stream, e.g. to keep drawing from it.
    pub fn into_rng(self) -> R {
        self.rng
    }
}

impl<R: Rng> PairSource for SingletPairs<R> {
    fn measure(&mut self, pair: u32, axis: &BlochVector) -> Result<u8> {
        let state = self
            .pairs
            .get_mut(pair as usize)
            .ok_or(Error::UnknownPair(pair))?;
        match *state {
            PairState::Fresh => {
                let outcome = u8::from(self.rng.gen::<bool>());
                *state = PairState::Half {
                    axis: *axis,
                    outcome,
                };
                Ok(outcome)
            }
            PairState::Half {
                axis: first_axis,
                outcome: first,
            } => {
                let outcome = conditioned_outcome(first, &first_axis, axis, &mut self.rng);
                *state = PairState::Done;
                Ok(outcome)
            }
            PairState::Done => Err(Error::PairExhausted(pair)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TRIALS: usize = 100_000;

    fn within_4_sigma(hits: usize, p: f64) -> bool {
        let p_hat = hits as f64 / TRIALS as f64;
        let sigma = (p * (1.0 - p) / TRIALS as f64).sqrt().max(1e-12);
        (p_hat - p).abs() < 4.0 * sigma
    }

    fn diag(x: f64, y: f64, z: f64) -> BlochVector {
        BlochVector::new(x, y, z).unwrap()
    }

    #[test]
    fn dot_examples() {
        assert_eq!(BlochVector::X.dot(&BlochVector::X), 1.0);
        assert!((diag(1.0, 1.0, 0.0).dot(&BlochVector::X) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((diag(1.0, 1.0, -1.0).dot(&BlochVector::Z) + 0.5773503).abs() < 1e-7);
    }

    #[test]
    fn construction_normalizes() {
        let v = diag(3.0, 4.0, 0.0);
        assert!(BlochVector::is_unit(v.x(), v.y(), v.z()));
        assert!(matches!(BlochVector::new(0.0, 0.0, 0.0), Err(Error::ZeroVector)));
        assert!(BlochVector::new(f64::NAN, 0.0, 1.0).is_err());
    }

    #[test]
    fn aligned_pairs_always_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let p = correlate(&BlochVector::Y, &BlochVector::Y, &mut rng);
            assert_eq!(p.a_outcome, p.b_outcome);
        }
    }

    #[test]
    fn correlation_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = diag(1.0, 1.0, 0.0);
        let equal = (0..TRIALS)
            .filter(|_| {
                let p = correlate(&a, &BlochVector::X, &mut rng);
                p.a_outcome == p.b_outcome
            })
            .count();
        assert!(within_4_sigma(equal, 0.8535534));

        let a = diag(1.0, 1.0, -1.0);
        let differ = (0..TRIALS)
            .filter(|_| {
                let p = correlate(&a, &BlochVector::Z, &mut rng);
                p.a_outcome != p.b_outcome
            })
            .count();
        assert!(within_4_sigma(differ, 0.7886751));
    }

    #[test]
    fn marginals_uniform_and_no_signaling() {
        let a = diag(1.0, -1.0, 1.0);
        for (seed, b) in [(3, BlochVector::X), (4, BlochVector::Z), (5, diag(0.3, 0.1, -0.9))] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (mut ones_a, mut ones_b) = (0, 0);
            for _ in 0..TRIALS {
                let p = correlate(&a, &b, &mut rng);
                ones_a += usize::from(p.a_outcome);
                ones_b += usize::from(p.b_outcome);
            }
            assert!(within_4_sigma(ones_a, 0.5));
            assert!(within_4_sigma(ones_b, 0.5));
        }
    }

    #[test]
    fn correlation_is_symmetric() {
        let a = diag(1.0, 1.0, 1.0);
        let b = diag(0.0, 1.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let count = |x: &BlochVector, y: &BlochVector, rng: &mut ChaCha8Rng| {
            (0..TRIALS)
                .filter(|_| {
                    let p = correlate(x, y, rng);
                    p.a_outcome == p.b_outcome
                })
                .count()
        };
        let ab = count(&a, &b, &mut rng) as f64 / TRIALS as f64;
        let ba = count(&b, &a, &mut rng) as f64 / TRIALS as f64;
        let p = 0.5 * (1.0 + a.dot(&b));
        let sigma = (2.0 * p * (1.0 - p) / TRIALS as f64).sqrt();
        assert!((ab - ba).abs() < 4.0 * sigma);
    }

    #[test]
    fn steering_matches_direct_measurement() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cases = [
            (BlochVector::X, BlochVector::X, 1.0),
            (diag(1.0, 1.0, 0.0), BlochVector::X, 0.8535534),
            (BlochVector::Y, BlochVector::X, 0.5),
        ];
        for (codeword, dir, p) in cases {
            let mut steered = 0;
            let mut flips = 0;
            let mut direct = 0;
            for _ in 0..TRIALS {
                let (flip, outcome) = steer_and_measure(&codeword, &dir, &mut rng);
                steered += usize::from(flip ^ outcome);
                flips += usize::from(flip);
                direct += usize::from(measure_state(&codeword, &dir, &mut rng));
            }
            assert!(within_4_sigma(steered, p), "steered {steered} vs {p}");
            assert!(within_4_sigma(direct, p), "direct {direct} vs {p}");
            assert!(within_4_sigma(flips, 0.5));
        }
    }

    #[test]
    fn steering_outcome_given_flip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let codeword = diag(1.0, 1.0, 0.0);
        let d = codeword.dot(&BlochVector::X);
        let mut counts = [[0usize; 2]; 2];
        for _ in 0..TRIALS {
            let (flip, outcome) = steer_and_measure(&codeword, &BlochVector::X, &mut rng);
            counts[flip as usize][outcome as usize] += 1;
        }
        for (flip, [minus, plus]) in counts.into_iter().enumerate() {
            let total = (minus + plus) as f64;
            let p = 0.5 * (1.0 + if flip == 0 { d } else { -d });
            let p_hat = plus as f64 / total;
            let sigma = (p * (1.0 - p) / total).sqrt();
            assert!((p_hat - p).abs() < 4.0 * sigma);
        }
    }

    #[test]
    fn singlet_pairs_lifecycle() {
        let mut pairs = SingletPairs::new(2, ChaCha8Rng::seed_from_u64(9));
        let first = pairs.measure(0, &BlochVector::X).unwrap();
        assert_eq!(
            pairs.state(0),
            Some(PairState::Half {
                axis: BlochVector::X,
                outcome: first
            })
        );
        assert_eq!(pairs.measure(0, &BlochVector::X).unwrap(), first);
        assert!(matches!(pairs.measure(0, &BlochVector::X), Err(Error::PairExhausted(0))));
        assert!(matches!(pairs.measure(7, &BlochVector::X), Err(Error::UnknownPair(7))));
    }
}
