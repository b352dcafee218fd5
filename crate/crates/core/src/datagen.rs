//! Synthetic two-class problems where only two of D features carry the
//! label, and stratified train/validation splitting.
//!
//! Class 0 is "blue", class 1 is "red". Noise features are uniform on
//! `[-σ√3, σ√3]`, i.e. they have variance σ² and the same distribution in
//! both classes. The two informative features sit at random positions,
//! recorded in [`SyntheticDataset::relevant_dims`].

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, invalid, EspaError, Result};
use crate::linalg::Matrix;
use crate::model::{FeatureMatrix, LabelMatrix};
use crate::rng::{self, purpose, ChaCha8Rng};

/// Features with their label probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledData {
    pub x: FeatureMatrix,
    pub pi: LabelMatrix,
}

impl LabelledData {
    pub fn new(x: FeatureMatrix, pi: LabelMatrix) -> Result<Self> {
        check_dim("label columns", x.len(), pi.len())?;
        Ok(Self { x, pi })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            x: self.x.select_samples(idx),
            pi: self.pi.select_samples(idx),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub data: LabelledData,
    /// Positions of the two informative features.
    pub relevant_dims: [usize; 2],
    pub sigma: f64,
    pub seed: u64,
}

pub fn class_names() -> Vec<String> {
    vec![String::from("blue"), String::from("red")]
}

fn check_common(d: usize, t: usize, sigma: f64) -> Result<()> {
    if d < 2 {
        return Err(invalid("D", format!("need at least 2 features, got {d}")));
    }
    if t < 4 {
        return Err(invalid("T", format!("need at least 4 samples, got {t}")));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(invalid("sigma", format!("must be positive, got {sigma}")));
    }
    Ok(())
}

/// Shared skeleton. Informative coordinates come in mirrored pairs `p, -p`
/// drawn from `half(class, rng)`, so every class has sample mean exactly 0
/// in both informative features (up to one unpaired sample for odd class
/// sizes). Sample order is shuffled; noise fills the other features.
fn generate(
    d: usize,
    t: usize,
    sigma: f64,
    blue_fraction: f64,
    seed: u64,
    mut half: impl FnMut(usize, &mut ChaCha8Rng) -> [f64; 2],
) -> Result<SyntheticDataset> {
    if !(blue_fraction > 0.0 && blue_fraction < 1.0) {
        return Err(invalid("blue_fraction", format!("must lie in (0, 1), got {blue_fraction}")));
    }
    let n_blue = libm::round(blue_fraction * t as f64) as usize;
    if n_blue == 0 || n_blue >= t {
        return Err(invalid(
            "blue_fraction",
            format!("gives {n_blue} blue samples out of {t}"),
        ));
    }
    let mut rng = rng::stream(seed, &[purpose::DATA]);
    let dims = index::sample(&mut rng, d, 2);
    let relevant_dims = [dims.index(0), dims.index(1)];
    let mut points: Vec<(usize, [f64; 2])> = Vec::with_capacity(t);
    for (class, size) in [(0, n_blue), (1, t - n_blue)] {
        for i in 0..size {
            if i % 2 == 1 {
                let [a, b] = points.last().unwrap().1;
                points.push((class, [-a, -b]));
            } else {
                points.push((class, half(class, &mut rng)));
            }
        }
    }
    points.shuffle(&mut rng);
    let half_width = sigma * libm::sqrt(3.0);
    let mut x = Matrix::zeros(d, t);
    let mut labels = Vec::with_capacity(t);
    for (col, &(class, [a, b])) in points.iter().enumerate() {
        let sample = x.col_mut(col);
        for v in sample.iter_mut() {
            *v = rng.random_range(-half_width..half_width);
        }
        sample[relevant_dims[0]] = a;
        sample[relevant_dims[1]] = b;
        labels.push(class);
    }
    let data = LabelledData::new(
        FeatureMatrix::new(x)?,
        LabelMatrix::from_indices(&labels, class_names())?,
    )?;
    Ok(SyntheticDataset {
        data,
        relevant_dims,
        sigma,
        seed,
    })
}

/// Gaussian "sandwich": blue ~ N(0, σ²I) in the informative plane, red an
/// even mixture of N(±3σu, σ²I) with `u = (1, 1)/√2`. Both classes have
/// zero marginal means in every feature.
pub fn toy1(d: usize, t: usize, sigma: f64, blue_fraction: f64, seed: u64) -> Result<SyntheticDataset> {
    check_common(d, t, sigma)?;
    let offset = 3.0 * sigma / libm::sqrt(2.0);
    generate(d, t, sigma, blue_fraction, seed, |class, rng| {
        let z0: f64 = StandardNormal.sample(rng);
        let z1: f64 = StandardNormal.sample(rng);
        // the mirrored partner of a red sample falls in the other group
        let shift = if class == 0 { 0.0 } else { offset };
        [shift + sigma * z0, shift + sigma * z1]
    })
}

/// Disk inside an annulus: blue uniform on the disk of radius σ, red
/// uniform on the annulus between 2σ and 3σ. No linear rule separates them.
pub fn toy2(d: usize, t: usize, sigma: f64, seed: u64) -> Result<SyntheticDataset> {
    check_common(d, t, sigma)?;
    generate(d, t, sigma, 0.5, seed, |class, rng| {
        let (r_in, r_out) = if class == 0 {
            (0.0, sigma)
        } else {
            (2.0 * sigma, 3.0 * sigma)
        };
        // area-uniform radius
        let u: f64 = rng.random();
        let r = libm::sqrt(r_in * r_in + u * (r_out * r_out - r_in * r_in));
        let angle = rng.random::<f64>() * 2.0 * core::f64::consts::PI;
        [r * libm::cos(angle), r * libm::sin(angle)]
    })
}

/// Random split without replacement, stratified by most probable class.
///
/// The training part gets `round(train_fraction · T)` samples, shared
/// among classes by largest remainder; every class must land in both
/// parts. Both parts keep the original sample order.
pub fn split(
    data: &LabelledData,
    train_fraction: f64,
    seed: u64,
) -> Result<(LabelledData, LabelledData)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(invalid(
            "train_fraction",
            format!("must lie in (0, 1), got {train_fraction}"),
        ));
    }
    let labels = data.pi.hard_labels();
    let m = data.pi.n_classes();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (t, &l) in labels.iter().enumerate() {
        by_class[l].push(t);
    }
    for (class, members) in by_class.iter().enumerate() {
        if members.len() < 2 {
            return Err(EspaError::StratificationFailed {
                class,
                count: members.len(),
            });
        }
    }
    let total = libm::round(train_fraction * data.len() as f64) as usize;
    let quotas: Vec<f64> = by_class
        .iter()
        .map(|c| train_fraction * c.len() as f64)
        .collect();
    let mut take: Vec<usize> = quotas.iter().map(|&q| libm::floor(q) as usize).collect();
    let mut order: Vec<usize> = (0..m).collect();
    // largest remainder first, ties to the lower class index
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - libm::floor(quotas[a]);
        let rb = quotas[b] - libm::floor(quotas[b]);
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut remaining = total.saturating_sub(take.iter().sum());
    for &c in order.iter().cycle().take(m * 2) {
        if remaining == 0 {
            break;
        }
        if take[c] < by_class[c].len() {
            take[c] += 1;
            remaining -= 1;
        }
    }
    let mut rng = rng::stream(seed, &[purpose::SPLIT]);
    let mut train = Vec::new();
    let mut valid = Vec::new();
    for (class, members) in by_class.iter_mut().enumerate() {
        let n_train = take[class].clamp(1, members.len() - 1);
        members.shuffle(&mut rng);
        train.extend_from_slice(&members[..n_train]);
        valid.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    valid.sort_unstable();
    Ok((data.select(&train), data.select(&valid)))
}
