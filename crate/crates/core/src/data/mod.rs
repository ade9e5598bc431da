//! Datasets, generators, IDX ingestion, label corruption and perturbations.

mod corrupt;
mod dataset;
mod idx;
mod images;
mod toy;

pub use corrupt::corrupt_labels;
pub use dataset::{subsample, width_sweep, Dataset, Provenance, Split};
pub use idx::{load_idx, load_idx_images, read_idx, write_idx, IdxArray};
pub use images::{perturb, perturb_with, ImageSet, Perturbation, PerturbationKind};
pub use toy::{gen_toy_regression, ToyRegression, ToyRegressionConfig};
