use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Draws the `R × D` frequency matrix with i.i.d. `N(0, sigma²)` entries.
pub fn sample_frequencies(num_frequencies: usize, dim: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma is positive and finite");
    (0..num_frequencies * dim).map(|_| normal.sample(&mut rng)).collect()
}

/// `[cos(2π·B·l), sin(2π·B·l)]` for a row-major `R × D` matrix `B`.
pub fn rff_features(frequencies: &[f64], location: &[f64]) -> Vec<f64> {
    let dim = location.len();
    let r = frequencies.len() / dim;
    let mut out = vec![0.0; 2 * r];
    let (cos_part, sin_part) = out.split_at_mut(r);
    for (k, row) in frequencies.chunks_exact(dim).enumerate() {
        let arg: f64 = row.iter().zip(location).map(|(b, l)| b * l).sum();
        let (s, c) = (2.0 * PI * arg).sin_cos();
        cos_part[k] = c;
        sin_part[k] = s;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_maps_to_ones_then_zeros() {
        let b = sample_frequencies(6, 2, 0.02, 1);
        let g = rff_features(&b, &[0.0, 0.0]);
        assert_eq!(g, [vec![1.0; 6], vec![0.0; 6]].concat());
    }

    #[test]
    fn quarter_period() {
        let g = rff_features(&[1.0, 0.0], &[0.25, 123.0]);
        assert!(g[0].abs() < 1e-15);
        assert!((g[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn frequencies_are_seeded_with_requested_spread() {
        let a = sample_frequencies(5000, 2, 0.02, 9);
        assert_eq!(a, sample_frequencies(5000, 2, 0.02, 9));
        let var = a.iter().map(|x| x * x).sum::<f64>() / a.len() as f64;
        assert!((var.sqrt() - 0.02).abs() < 0.001);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn feature_norm_is_r(seed in any::<u64>(), x in -200.0f64..200.0, y in -200.0f64..200.0, r in 1usize..64) {
                let b = sample_frequencies(r, 2, 0.05, seed);
                let g = rff_features(&b, &[x, y]);
                let n2: f64 = g.iter().map(|v| v * v).sum();
                prop_assert!((n2 - r as f64).abs() < 1e-12 * r as f64);
            }
        }
    }
}
