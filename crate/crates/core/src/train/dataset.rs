use std::path::PathBuf;

use crate::data::{load_image, DataError, DatasetManifest, Image, Split};

/// Decoded, resized images of one split with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSet {
    pub images: Vec<Image>,
    pub cuisine: Vec<usize>,
    pub flavor: Vec<usize>,
    pub paths: Vec<PathBuf>,
}

impl ImageSet {
    /// Loads every sample of `split` (all samples for `None`) at
    /// `size × size`, decoding on up to `workers` threads.
    pub fn load(
        manifest: &DatasetManifest,
        split: Option<Split>,
        size: usize,
        workers: usize,
    ) -> Result<Self, DataError> {
        let samples = manifest.subset(split);
        let paths: Vec<PathBuf> = samples.iter().map(|s| manifest.resolve(s)).collect();
        let images = parallel_map(paths.len(), workers, |i| load_image(&paths[i], size))
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            images,
            cuisine: samples.iter().map(|s| s.cuisine).collect(),
            flavor: samples.iter().map(|s| s.flavor).collect(),
            paths,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

/// `(0..n).map(f)` computed on up to `workers` scoped threads over contiguous
/// chunks; the output order is always index order.
pub fn parallel_map<R: Send>(n: usize, workers: usize, f: impl Fn(usize) -> R + Sync) -> Vec<R> {
    let workers = workers.clamp(1, n.max(1));
    if workers == 1 {
        return (0..n).map(f).collect();
    }
    let chunk = n.div_ceil(workers);
    let f = &f;
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..n)
            .step_by(chunk)
            .map(|start| scope.spawn(move || (start..(start + chunk).min(n)).map(f).collect::<Vec<R>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}
