//! MNIST access for the image experiments.

use std::path::PathBuf;

use rand::seq::SliceRandom;

use super::config::Config;
use crate::data::{load_idx, ImageSet};
use crate::error::{Error, Result};
use crate::rng;

/// The 3000-digit subset shipped with the crate (300 per class).
pub fn bundled_mnist() -> Result<ImageSet> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
    load_idx(&dir.join("mnist-3000-images.idx3-ubyte"), &dir.join("mnist-3000-labels.idx1-ubyte"))
}

/// `data.images_path` and `data.labels_path` when both are set, otherwise
/// the bundled subset.
pub fn load_mnist(c: &Config) -> Result<ImageSet> {
    match (c.raw("data", "images_path"), c.raw("data", "labels_path")) {
        (Some(i), Some(l)) => load_idx(i.as_ref(), l.as_ref()),
        (None, None) => bundled_mnist(),
        _ => Err(Error::config("data.images_path and data.labels_path must be given together")),
    }
}

/// Disjoint stratified train and test images: for each class in order,
/// `train_per_class` then `test_per_class` from a seeded shuffle.
pub fn split_by_class(
    images: &ImageSet,
    classes: &[usize],
    train_per_class: usize,
    test_per_class: usize,
    seed: u64,
) -> Result<(ImageSet, ImageSet)> {
    let mut rng = rng::seeded(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for &c in classes {
        let mut members: Vec<usize> = (0..images.len()).filter(|&i| images.labels[i] == c).collect();
        if members.len() < train_per_class + test_per_class {
            return Err(Error::config(format!(
                "class {c} has {} images, {} requested",
                members.len(),
                train_per_class + test_per_class
            )));
        }
        members.shuffle(&mut rng);
        train.extend_from_slice(&members[..train_per_class]);
        test.extend_from_slice(&members[train_per_class..train_per_class + test_per_class]);
    }
    Ok((images.select(&train), images.select(&test)))
}
