use rand::seq::SliceRandom;

use super::manifest::{DatasetManifest, Split};
use super::vocab::CUISINES;
use super::DataError;
use crate::rng;

pub const DEFAULT_FRACTIONS: [f64; 3] = [0.70, 0.15, 0.15];

/// Split sizes for `n` items: floors of the exact shares, then the leftover
/// items go to the largest remainders (earlier split wins ties). Each size is
/// within 1 of its exact share.
pub fn split_sizes(n: usize, fractions: [f64; 3]) -> [usize; 3] {
    let exact = fractions.map(|f| f * n as f64);
    let mut sizes = exact.map(|e| e.floor() as usize);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    let assigned: usize = sizes.iter().sum();
    for &k in order.iter().cycle().take(n.saturating_sub(assigned)) {
        sizes[k] += 1;
    }
    sizes
}

/// Assigns every sample a split. Within each cuisine, samples are shuffled
/// with a seeded stream and cut into train/val/test by [`split_sizes`].
pub fn stratified_split(
    manifest: &DatasetManifest,
    fractions: [f64; 3],
    seed: u64,
) -> Result<DatasetManifest, DataError> {
    let sum: f64 = fractions.iter().sum();
    if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) || (sum - 1.0).abs() > 1e-9 {
        return Err(DataError::Fractions(fractions));
    }
    let mut out = manifest.clone();
    for cuisine in 0..CUISINES.len() {
        let mut idx: Vec<usize> = (0..out.samples.len())
            .filter(|&i| out.samples[i].cuisine == cuisine)
            .collect();
        idx.shuffle(&mut rng::substream(seed, rng::SPLIT, cuisine as u64));
        let [n_train, n_val, _] = split_sizes(idx.len(), fractions);
        for (rank, &i) in idx.iter().enumerate() {
            out.samples[i].split = Some(if rank < n_train {
                Split::Train
            } else if rank < n_train + n_val {
                Split::Val
            } else {
                Split::Test
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::manifest::Sample;
    use proptest::prelude::*;

    fn manifest(cuisines: &[usize]) -> DatasetManifest {
        DatasetManifest {
            samples: cuisines
                .iter()
                .enumerate()
                .map(|(i, &c)| Sample::new(format!("{i}.ppm"), c, vec![(0, 1.0)]).unwrap())
                .collect(),
            ..Default::default()
        }
    }

    fn counts(m: &DatasetManifest, cuisine: usize) -> [usize; 3] {
        let mut c = [0; 3];
        for s in m.samples.iter().filter(|s| s.cuisine == cuisine) {
            c[s.split.unwrap() as usize] += 1;
        }
        c
    }

    #[test]
    fn hundred_is_exact() {
        let m = stratified_split(&manifest(&[4; 100]), DEFAULT_FRACTIONS, 1).unwrap();
        assert_eq!(counts(&m, 4), [70, 15, 15]);
    }

    #[test]
    fn ten_rounds_to_seven_two_one() {
        // 7, 1.5, 1.5: one leftover, tie on remainder goes to val
        assert_eq!(split_sizes(10, DEFAULT_FRACTIONS), [7, 2, 1]);
        let m = stratified_split(&manifest(&[0; 10]), DEFAULT_FRACTIONS, 3).unwrap();
        assert_eq!(counts(&m, 0), [7, 2, 1]);
    }

    #[test]
    fn deterministic_per_seed() {
        let base = manifest(&(0..200).map(|i| i % 10).collect::<Vec<_>>());
        let a = stratified_split(&base, DEFAULT_FRACTIONS, 9).unwrap();
        let b = stratified_split(&base, DEFAULT_FRACTIONS, 9).unwrap();
        let c = stratified_split(&base, DEFAULT_FRACTIONS, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn bad_fractions() {
        assert!(stratified_split(&manifest(&[0]), [0.5, 0.2, 0.2], 0).is_err());
        assert!(stratified_split(&manifest(&[0]), [1.2, -0.1, -0.1], 0).is_err());
    }

    proptest! {
        #[test]
        fn preserves_samples_and_bounds_deviation(
            cuisines in prop::collection::vec(0usize..10, 0..300),
            seed in any::<u64>(),
        ) {
            let base = manifest(&cuisines);
            let m = stratified_split(&base, DEFAULT_FRACTIONS, seed).unwrap();
            prop_assert_eq!(m.samples.len(), base.samples.len());
            for (a, b) in m.samples.iter().zip(&base.samples) {
                prop_assert_eq!(&a.image, &b.image);
                prop_assert!(a.split.is_some());
            }
            for c in 0..10 {
                let n = cuisines.iter().filter(|&&x| x == c).count() as f64;
                let got = counts(&m, c);
                for k in 0..3 {
                    prop_assert!((got[k] as f64 - DEFAULT_FRACTIONS[k] * n).abs() <= 1.0 + 1e-9);
                }
            }
        }
    }
}
