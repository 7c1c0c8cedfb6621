use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng};

/// Side length of the centre crop taken from every image.
pub const CROP: usize = 24;
/// Images are average-pooled to a `POOL × POOL` grid.
pub const POOL: usize = 4;
/// Points per synthetic task.
pub const SYNTHETIC_POINTS: usize = 1500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

/// Labelled samples split 2/3 : 1/6 : 1/6 into train, validation and test.
/// Features are min-max rescaled to `[0, π]` with bounds fitted on the
/// training split (other splits are clamped into range).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub num_features: usize,
    pub num_classes: usize,
    pub train: Vec<Sample>,
    pub validation: Vec<Sample>,
    pub test: Vec<Sample>,
}

impl Dataset {
    /// Shuffles with `seed`, splits and rescales.
    pub fn from_samples(name: impl Into<String>, mut samples: Vec<Sample>, num_classes: usize, seed: u64) -> Result<Self> {
        let name = name.into();
        if samples.len() < 3 {
            return Err(Error::Dataset(format!("{name}: need at least 3 samples, got {}", samples.len())));
        }
        let num_features = samples[0].features.len();
        if num_features == 0 {
            return Err(Error::Dataset(format!("{name}: samples have no features")));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.features.len() != num_features {
                return Err(Error::Dataset(format!("{name}: sample {i} has {} features, expected {num_features}", s.features.len())));
            }
            if s.label >= num_classes {
                return Err(Error::Dataset(format!("{name}: label {} out of range for {num_classes} classes", s.label)));
            }
            if s.features.iter().any(|f| !f.is_finite()) {
                return Err(Error::Dataset(format!("{name}: sample {i} has a non-finite feature")));
            }
        }
        samples.shuffle(&mut stream_rng(derive_seed(seed, "split"), 0));
        let n = samples.len();
        let n_train = n * 2 / 3;
        let n_val = n / 6;
        let test = samples.split_off(n_train + n_val);
        let validation = samples.split_off(n_train);
        let mut ds = Dataset {
            name,
            num_features,
            num_classes,
            train: samples,
            validation,
            test,
        };
        ds.rescale();
        Ok(ds)
    }

    fn rescale(&mut self) {
        let mut lo = vec![f64::INFINITY; self.num_features];
        let mut hi = vec![f64::NEG_INFINITY; self.num_features];
        for s in &self.train {
            for (j, &f) in s.features.iter().enumerate() {
                lo[j] = lo[j].min(f);
                hi[j] = hi[j].max(f);
            }
        }
        for s in self.train.iter_mut().chain(&mut self.validation).chain(&mut self.test) {
            for (j, f) in s.features.iter_mut().enumerate() {
                let span = hi[j] - lo[j];
                *f = if span > 0.0 { ((*f - lo[j]) / span).clamp(0.0, 1.0) * PI } else { 0.0 };
            }
        }
    }

    pub fn split(&self, split: Split) -> &[Sample] {
        match split {
            Split::Train => &self.train,
            Split::Validation => &self.validation,
            Split::Test => &self.test,
        }
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SyntheticKind {
    Blobs,
    Circles,
    Moons,
}

impl SyntheticKind {
    pub const ALL: [SyntheticKind; 3] = [SyntheticKind::Blobs, SyntheticKind::Circles, SyntheticKind::Moons];

    pub fn name(self) -> &'static str {
        match self {
            SyntheticKind::Blobs => "blobs",
            SyntheticKind::Circles => "circles",
            SyntheticKind::Moons => "moons",
        }
    }
}

/// Two-feature synthetic task. Level `L` in 1..=3 has `L + 1` balanced classes
/// and more noise at higher levels.
pub fn synthetic(kind: SyntheticKind, level: usize, seed: u64) -> Result<Dataset> {
    if !(1..=3).contains(&level) {
        return Err(Error::Dataset(format!("difficulty level {level} outside 1..=3")));
    }
    let classes = level + 1;
    let mut rng = stream_rng(derive_seed(seed, kind.name()), level as u64);
    let sigma = match kind {
        SyntheticKind::Blobs => [0.3, 0.35, 0.4][level - 1],
        SyntheticKind::Circles => [0.08, 0.1, 0.12][level - 1],
        SyntheticKind::Moons => [0.1, 0.15, 0.2][level - 1],
    };
    let noise = Normal::new(0.0, sigma).expect("positive sigma");
    let samples = (0..SYNTHETIC_POINTS)
        .map(|i| {
            let c = i % classes;
            let (x, y) = match kind {
                SyntheticKind::Blobs => {
                    let a = TAU * c as f64 / classes as f64;
                    (a.cos(), a.sin())
                }
                SyntheticKind::Circles => {
                    let r = 0.5 * (c + 1) as f64;
                    let a = rng.random::<f64>() * TAU;
                    (r * a.cos(), r * a.sin())
                }
                SyntheticKind::Moons => {
                    let t = rng.random::<f64>() * PI;
                    let shift = 2.0 * (c / 2) as f64;
                    if c % 2 == 0 {
                        (t.cos() + shift, t.sin())
                    } else {
                        (1.0 - t.cos() + shift, 0.5 - t.sin())
                    }
                }
            };
            Sample {
                features: vec![x + noise.sample(&mut rng), y + noise.sample(&mut rng)],
                label: c,
            }
        })
        .collect();
    Dataset::from_samples(format!("{}:{level}", kind.name()), samples, classes, seed)
}

/// CSV with a header row, feature columns `f0..fk` and a final `label` column.
pub fn load_csv(path: impl AsRef<Path>, seed: u64) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))?;
    let headers = reader.headers().map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))?.clone();
    let n = headers.len();
    if n < 2 || &headers[n - 1] != "label" {
        return Err(Error::Dataset(format!("{}: last column must be `label`", path.display())));
    }
    for (j, h) in headers.iter().take(n - 1).enumerate() {
        if h != format!("f{j}") {
            return Err(Error::Dataset(format!("{}: column {j} should be `f{j}`, found `{h}`", path.display())));
        }
    }
    let mut samples = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))?;
        let bad = |what: &str| Error::Dataset(format!("{}: row {}: bad {what}", path.display(), row + 1));
        let features = record
            .iter()
            .take(n - 1)
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad("feature")))
            .collect::<Result<Vec<_>>>()?;
        let label = record[n - 1].trim().parse::<usize>().map_err(|_| bad("label"))?;
        samples.push(Sample { features, label });
    }
    let num_classes = samples.iter().map(|s| s.label + 1).max().unwrap_or(0);
    let name = path.file_stem().map_or("csv".into(), |s| s.to_string_lossy().into_owned());
    Dataset::from_samples(name, samples, num_classes, seed)
}

/// Centre-crops a grayscale image to 24×24 and average-pools it to 4×4,
/// giving 16 features in `[0, 1]`, row-major.
pub fn pool_image(pixels: &[u8], width: usize, height: usize) -> Result<Vec<f64>> {
    if width < CROP || height < CROP || pixels.len() != width * height {
        return Err(Error::Dataset(format!("image {width}×{height} is smaller than {CROP}×{CROP}")));
    }
    let (x0, y0) = ((width - CROP) / 2, (height - CROP) / 2);
    let cell = CROP / POOL;
    let mut out = Vec::with_capacity(POOL * POOL);
    for py in 0..POOL {
        for px in 0..POOL {
            let mut sum = 0.0;
            for y in 0..cell {
                for x in 0..cell {
                    sum += pixels[(y0 + py * cell + y) * width + x0 + px * cell + x] as f64;
                }
            }
            out.push(sum / (cell * cell) as f64 / 255.0);
        }
    }
    Ok(out)
}

/// Directory of grayscale PGM/PNG images plus `labels.csv` (`file,label`).
/// With a non-empty `classes` list only those labels are kept and relabelled
/// by position, so `[3, 6]` becomes a two-class task with 3 → 0 and 6 → 1.
pub fn load_image_dir(dir: impl AsRef<Path>, classes: &[usize], seed: u64) -> Result<Dataset> {
    let dir = dir.as_ref();
    let labels_path = dir.join("labels.csv");
    let mut reader = csv::Reader::from_path(&labels_path).map_err(|e| Error::Dataset(format!("{}: {e}", labels_path.display())))?;
    let mut wanted: Vec<(PathBuf, usize)> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Dataset(format!("{}: {e}", labels_path.display())))?;
        if record.len() < 2 {
            return Err(Error::Dataset(format!("{}: row {} needs file and label", labels_path.display(), row + 1)));
        }
        let label: usize = record[1]
            .trim()
            .parse()
            .map_err(|_| Error::Dataset(format!("{}: row {}: bad label", labels_path.display(), row + 1)))?;
        let label = if classes.is_empty() {
            label
        } else {
            match classes.iter().position(|&c| c == label) {
                Some(l) => l,
                None => continue,
            }
        };
        wanted.push((dir.join(record[0].trim()), label));
    }
    let samples = wanted
        .par_iter()
        .map(|(path, label)| {
            let img = image::open(path)
                .map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))?
                .to_luma8();
            let (w, h) = img.dimensions();
            Ok(Sample {
                features: pool_image(img.as_raw(), w as usize, h as usize)?,
                label: *label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let num_classes = if classes.is_empty() {
        samples.iter().map(|s| s.label + 1).max().unwrap_or(0)
    } else {
        classes.len()
    };
    let name = dir.file_name().map_or("images".into(), |s| s.to_string_lossy().into_owned());
    Dataset::from_samples(name, samples, num_classes, seed)
}

/// Where a dataset comes from: `blobs:L`, `circles:L`, `moons:L`, `csv:PATH`,
/// `images:DIR` or `images:DIR:C1,C2,...`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum DatasetSpec {
    Synthetic { kind: SyntheticKind, level: usize },
    Csv { path: PathBuf },
    Images { dir: PathBuf, classes: Vec<usize> },
}

impl DatasetSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let (head, rest) = text
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("dataset `{text}` should look like `blobs:1`, `csv:PATH` or `images:DIR`")))?;
        let kind = match head {
            "blobs" => Some(SyntheticKind::Blobs),
            "circles" => Some(SyntheticKind::Circles),
            "moons" => Some(SyntheticKind::Moons),
            _ => None,
        };
        if let Some(kind) = kind {
            let level = rest
                .parse()
                .map_err(|_| Error::Config(format!("bad difficulty level `{rest}`")))?;
            return Ok(DatasetSpec::Synthetic { kind, level });
        }
        match head {
            "csv" => Ok(DatasetSpec::Csv { path: rest.into() }),
            "images" => {
                if let Some((dir, list)) = rest.rsplit_once(':') {
                    let parsed: std::result::Result<Vec<usize>, _> = list.split(',').map(|c| c.trim().parse()).collect();
                    if let Ok(classes) = parsed {
                        return Ok(DatasetSpec::Images { dir: dir.into(), classes });
                    }
                }
                Ok(DatasetSpec::Images {
                    dir: rest.into(),
                    classes: Vec::new(),
                })
            }
            _ => Err(Error::Config(format!("unknown dataset source `{head}`"))),
        }
    }
}

pub fn load_dataset(spec: &DatasetSpec, seed: u64) -> Result<Dataset> {
    match spec {
        DatasetSpec::Synthetic { kind, level } => synthetic(*kind, *level, seed),
        DatasetSpec::Csv { path } => load_csv(path, seed),
        DatasetSpec::Images { dir, classes } => load_image_dir(dir, classes, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_sizes_and_range() {
        for kind in SyntheticKind::ALL {
            for level in 1..=3 {
                let d = synthetic(kind, level, 3).unwrap();
                assert_eq!((d.train.len(), d.validation.len(), d.test.len()), (1000, 250, 250));
                assert_eq!(d.num_classes, level + 1);
                assert!(d
                    .train
                    .iter()
                    .chain(&d.test)
                    .all(|s| s.features.iter().all(|&f| (0.0..=PI).contains(&f))));
            }
        }
        assert_eq!(synthetic(SyntheticKind::Moons, 2, 9).unwrap(), synthetic(SyntheticKind::Moons, 2, 9).unwrap());
        assert!(synthetic(SyntheticKind::Blobs, 4, 0).is_err());
    }

    #[test]
    fn pooling_a_28_pixel_image() {
        let mut px = vec![0u8; 28 * 28];
        // Fill the top-left 6×6 cell of the crop (rows/cols 2..8) with white.
        for y in 2..8 {
            for x in 2..8 {
                px[y * 28 + x] = 255;
            }
        }
        let f = pool_image(&px, 28, 28).unwrap();
        assert_eq!(f.len(), 16);
        assert_eq!(f[0], 1.0);
        assert!(f[1..].iter().all(|&v| v == 0.0));
        assert!(pool_image(&px[..20 * 20], 20, 20).is_err());
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(
            DatasetSpec::parse("blobs:1").unwrap(),
            DatasetSpec::Synthetic {
                kind: SyntheticKind::Blobs,
                level: 1
            }
        );
        assert_eq!(
            DatasetSpec::parse("images:data/mnist:3,6").unwrap(),
            DatasetSpec::Images {
                dir: "data/mnist".into(),
                classes: vec![3, 6]
            }
        );
        assert_eq!(
            DatasetSpec::parse("images:data").unwrap(),
            DatasetSpec::Images {
                dir: "data".into(),
                classes: vec![]
            }
        );
        assert!(DatasetSpec::parse("spiral:1").is_err());
        assert!(DatasetSpec::parse("blobs").is_err());
    }
}
