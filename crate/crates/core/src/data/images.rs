use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Provenance, Split};
use crate::error::{Error, Result};
use crate::rng;

/// Images of uniform size stored as unit-interval reals, row-major per
/// image with channels innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSet {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub pixels: Vec<f64>,
    pub labels: Vec<usize>,
}

impl ImageSet {
    pub fn new(height: usize, width: usize, channels: usize, pixels: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        let per = height * width * channels;
        if per == 0 {
            return Err(Error::config("image dimensions must be positive"));
        }
        if pixels.len() != per * labels.len() {
            return Err(Error::dim("image pixels", per * labels.len(), pixels.len()));
        }
        Ok(ImageSet {
            height,
            width,
            channels,
            pixels,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn pixels_per_image(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub fn image(&self, i: usize) -> &[f64] {
        let p = self.pixels_per_image();
        &self.pixels[i * p..(i + 1) * p]
    }

    /// One flattened image per row.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.len(), self.pixels_per_image(), &self.pixels)
    }

    pub fn select(&self, rows: &[usize]) -> ImageSet {
        let mut pixels = Vec::with_capacity(rows.len() * self.pixels_per_image());
        for &r in rows {
            pixels.extend_from_slice(self.image(r));
        }
        ImageSet {
            pixels,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            ..*self
        }
    }

    /// Average-pools non-overlapping `factor × factor` blocks.
    pub fn downsample(&self, factor: usize) -> Result<ImageSet> {
        if factor == 0 || self.height % factor != 0 || self.width % factor != 0 {
            return Err(Error::config(format!("cannot downsample {}x{} by {factor}", self.height, self.width)));
        }
        let (h, w, c) = (self.height / factor, self.width / factor, self.channels);
        let norm = (factor * factor) as f64;
        let mut pixels = Vec::with_capacity(self.len() * h * w * c);
        for i in 0..self.len() {
            let img = self.image(i);
            for r in 0..h {
                for q in 0..w {
                    for ch in 0..c {
                        let mut s = 0.0;
                        for dr in 0..factor {
                            for dq in 0..factor {
                                s += img[((r * factor + dr) * self.width + q * factor + dq) * c + ch];
                            }
                        }
                        pixels.push(s / norm);
                    }
                }
            }
        }
        ImageSet::new(h, w, c, pixels, self.labels.clone())
    }

    /// Classification dataset over the labels present in `classes`,
    /// relabelled `0..classes.len()` in the given order.
    pub fn to_dataset(&self, classes: &[usize], split: Split, provenance: Provenance) -> Result<Dataset> {
        let rows: Vec<usize> = (0..self.len()).filter(|&i| classes.contains(&self.labels[i])).collect();
        let subset = self.select(&rows);
        let labels = subset
            .labels
            .iter()
            .map(|l| classes.iter().position(|c| c == l).unwrap())
            .collect();
        Dataset::classification(subset.to_matrix(), labels, classes.len(), split, provenance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PerturbationKind {
    /// Additive `N(0, (step·level)²)` pixel noise, clipped to [0, 1].
    GaussianNoise,
    /// Pad `2·level` zeros on each side, crop back at a random offset.
    Translate,
}

impl std::str::FromStr for PerturbationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian_noise" | "gaussian-noise" | "noise" => Ok(PerturbationKind::GaussianNoise),
            "translate" | "translation" => Ok(PerturbationKind::Translate),
            other => Err(Error::config(format!("unknown perturbation kind '{other}'"))),
        }
    }
}

impl PerturbationKind {
    pub fn tag(&self) -> &'static str {
        match self {
            PerturbationKind::GaussianNoise => "gaussian_noise",
            PerturbationKind::Translate => "translate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub kind: PerturbationKind,
    /// Noise standard deviation per intensity level.
    pub noise_step: f64,
    /// Zero padding per side per intensity level.
    pub shift_step: usize,
}

impl Perturbation {
    pub fn new(kind: PerturbationKind) -> Self {
        Perturbation {
            kind,
            noise_step: 0.04,
            shift_step: 2,
        }
    }
}

pub fn perturb(images: &ImageSet, kind: PerturbationKind, level: usize, seed: u64) -> Result<ImageSet> {
    perturb_with(images, &Perturbation::new(kind), level, seed)
}

/// Applies a perturbation at intensity `level` (0 = identity, 1..=5 standard).
pub fn perturb_with(images: &ImageSet, p: &Perturbation, level: usize, seed: u64) -> Result<ImageSet> {
    if level > 5 {
        return Err(Error::config(format!("perturbation level {level} outside 0..=5")));
    }
    if level == 0 {
        return Ok(images.clone());
    }
    let mut rng = rng::seeded(seed);
    let mut out = images.clone();
    match p.kind {
        PerturbationKind::GaussianNoise => {
            let sigma = p.noise_step * level as f64;
            if sigma > 0.0 {
                let normal = Normal::new(0.0, sigma).map_err(|e| Error::config(e.to_string()))?;
                for v in out.pixels.iter_mut() {
                    *v = (*v + normal.sample(&mut rng)).clamp(0.0, 1.0);
                }
            }
        }
        PerturbationKind::Translate => {
            let pad = p.shift_step * level;
            let (h, w, c) = (images.height, images.width, images.channels);
            for i in 0..images.len() {
                // Offset into the padded canvas; pad means no shift.
                let oy = rng.random_range(0..=2 * pad) as isize - pad as isize;
                let ox = rng.random_range(0..=2 * pad) as isize - pad as isize;
                let src = images.image(i);
                let p0 = i * images.pixels_per_image();
                for r in 0..h {
                    for q in 0..w {
                        let (sr, sq) = (r as isize + oy, q as isize + ox);
                        for ch in 0..c {
                            out.pixels[p0 + (r * w + q) * c + ch] =
                                if sr >= 0 && sq >= 0 && (sr as usize) < h && (sq as usize) < w {
                                    src[(sr as usize * w + sq as usize) * c + ch]
                                } else {
                                    0.0
                                };
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}
