//! Data generators for the benchmark studies: the three Gaussian three-sample
//! settings with dimension padding, the multiway triangle, the multilevel
//! nested Gaussians, and a registry of base dependence simulations used by
//! the rotated three-sample construction.
//!
//! Every generator is a deterministic function of its seed.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::encoding::{make_blocks, BlockStructure, KSampleData};
use crate::error::{Error, Result};
use crate::matrix::DataMatrix;
use crate::rng::{derive_seed, stream_rng};

/// Mean placement for the Gaussian three-sample settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaussianSetting {
    /// All three groups share the origin mean (the null).
    NoneDifferent,
    /// Two groups at the origin, the third shifted to (0, ε).
    OneDifferent,
    /// Means at the vertices of an equilateral triangle centred at the origin.
    AllDifferent,
}

impl GaussianSetting {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "none-diff" => Ok(Self::NoneDifferent),
            "one-diff" => Ok(Self::OneDifferent),
            "all-diff" => Ok(Self::AllDifferent),
            other => Err(Error::UnknownSimulation(other.to_string())),
        }
    }
}

/// The first-two-coordinate means of the three groups for a setting.
pub fn three_sample_means(setting: GaussianSetting, epsilon: f64) -> [[f64; 2]; 3] {
    let e = epsilon;
    match setting {
        GaussianSetting::NoneDifferent => [[0.0, 0.0]; 3],
        GaussianSetting::OneDifferent => [[0.0, 0.0], [0.0, 0.0], [0.0, e]],
        GaussianSetting::AllDifferent => {
            let s3 = 3f64.sqrt();
            [
                [0.0, s3 / 3.0 * e],
                [-e / 2.0, -s3 / 6.0 * e],
                [e / 2.0, -s3 / 6.0 * e],
            ]
        }
    }
}

fn gaussian_group(
    rng: &mut ChaCha8Rng,
    mean: [f64; 2],
    p: usize,
    n: usize,
) -> DataMatrix {
    let mut values = Array2::zeros((n, p));
    for i in 0..n {
        for j in 0..p {
            let shift = if j < 2 { mean[j] } else { 0.0 };
            values[[i, j]] = rng.sample::<f64, _>(StandardNormal) + shift;
        }
    }
    DataMatrix::new(values).expect("generated values are finite")
}

/// Three p-dimensional Gaussian groups with identity covariance. The setting
/// places the means in the first two coordinates; coordinates beyond the
/// second are uninformative standard normal padding.
pub fn gaussian_three_sample(
    setting: GaussianSetting,
    epsilon: f64,
    p: usize,
    n_per_group: usize,
    seed: u64,
) -> Result<KSampleData> {
    if p < 2 {
        return Err(Error::InvalidInput(format!(
            "gaussian settings need p >= 2, got {p}"
        )));
    }
    if n_per_group == 0 {
        return Err(Error::InvalidInput("group size must be positive".into()));
    }
    let means = three_sample_means(setting, epsilon);
    let mut rng = stream_rng(seed, 0);
    let groups = means
        .iter()
        .map(|&mean| gaussian_group(&mut rng, mean, p, n_per_group))
        .collect();
    KSampleData::new(groups)
}

/// Means of the multiway triangle: one group at the origin, two at distance
/// `c` from it, separated horizontally by ε.
pub fn multiway_means(epsilon: f64, c: f64) -> Result<[[f64; 2]; 3]> {
    if !(c > 0.0) {
        return Err(Error::Geometry(format!("c must be positive, got {c}")));
    }
    if !(0.0..=2.0 * c).contains(&epsilon) {
        return Err(Error::Geometry(format!(
            "need 0 <= epsilon <= 2c for a real triangle, got epsilon={epsilon}, c={c}"
        )));
    }
    let drop = (c * c - (epsilon / 2.0) * (epsilon / 2.0)).sqrt();
    Ok([
        [0.0, 0.0],
        [-epsilon / 2.0, -drop],
        [epsilon / 2.0, -drop],
    ])
}

/// Three Gaussian groups on the multiway triangle plus the two-way membership
/// pattern of the label encoding.
#[derive(Debug, Clone)]
pub struct MultiwaySample {
    pub data: KSampleData,
    pub memberships: Vec<Vec<usize>>,
}

pub fn multiway_gaussian(
    epsilon: f64,
    c: f64,
    p: usize,
    n_per_group: usize,
    seed: u64,
) -> Result<MultiwaySample> {
    if p < 2 {
        return Err(Error::InvalidInput(format!(
            "multiway setting needs p >= 2, got {p}"
        )));
    }
    let means = multiway_means(epsilon, c)?;
    let mut rng = stream_rng(seed, 0);
    let groups = means
        .iter()
        .map(|&mean| gaussian_group(&mut rng, mean, p, n_per_group))
        .collect();
    Ok(MultiwaySample {
        data: KSampleData::new(groups)?,
        memberships: vec![vec![0, 2], vec![0, 1], vec![1, 2]],
    })
}

/// Two-group nested Gaussian sample with its block structure: subject means
/// drawn around each group centre, repeat observations with variance 0.1
/// around each subject mean, blocks = subjects.
#[derive(Debug, Clone)]
pub struct MultilevelSample {
    pub data: KSampleData,
    pub blocks: BlockStructure,
}

pub fn multilevel_gaussian(
    epsilon: f64,
    n_means: usize,
    n_per_mean: usize,
    seed: u64,
) -> Result<MultilevelSample> {
    if n_means == 0 {
        return Err(Error::InvalidInput("need at least one subject mean".into()));
    }
    if n_per_mean < 2 {
        return Err(Error::InvalidInput(
            "multilevel blocks need at least 2 repeats per mean".into(),
        ));
    }
    let obs_sd = 0.1f64.sqrt();
    let mut rng = stream_rng(seed, 0);
    let mut groups = Vec::with_capacity(2);
    for g in 0..2 {
        let centre = [g as f64 * epsilon, 0.0];
        let mut values = Array2::zeros((n_means * n_per_mean, 2));
        for s in 0..n_means {
            let mean = [
                centre[0] + rng.sample::<f64, _>(StandardNormal),
                centre[1] + rng.sample::<f64, _>(StandardNormal),
            ];
            for r in 0..n_per_mean {
                for j in 0..2 {
                    values[[s * n_per_mean + r, j]] =
                        mean[j] + obs_sd * rng.sample::<f64, _>(StandardNormal);
                }
            }
        }
        groups.push(DataMatrix::new(values)?);
    }
    Ok(MultilevelSample {
        data: KSampleData::new(groups)?,
        blocks: make_blocks(2 * n_means, n_per_mean)?,
    })
}

/// Rotation angle in degrees, normalized into [0°, 360°).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationAngle {
    degrees: f64,
}

impl RotationAngle {
    pub fn degrees(d: f64) -> Self {
        Self {
            degrees: d.rem_euclid(360.0),
        }
    }

    pub fn value(&self) -> f64 {
        self.degrees
    }
}

/// Rotate every row in the plane spanned by the first and last coordinates;
/// all middle coordinates are untouched.
pub fn rotate(z: &DataMatrix, angle: RotationAngle) -> Result<DataMatrix> {
    let p = z.dim();
    if p < 2 {
        return Err(Error::InvalidInput(format!(
            "rotation needs at least 2 coordinates, got {p}"
        )));
    }
    let theta = angle.value().to_radians();
    let (sin, cos) = theta.sin_cos();
    let mut values = z.values().clone();
    for i in 0..z.n() {
        let a = values[[i, 0]];
        let b = values[[i, p - 1]];
        values[[i, 0]] = cos * a - sin * b;
        values[[i, p - 1]] = sin * a + cos * b;
    }
    DataMatrix::new(values)
}

/// Registered base dependence simulations. Each draws n samples of
/// Z = [X|Y] with X of dimension p and a scalar Y.
pub fn registry() -> &'static [&'static str] {
    &[
        "linear",
        "quadratic",
        "cubic",
        "spiral",
        "circle",
        "sine",
        "w-shape",
        "independence-null",
    ]
}

fn decreasing_weights(p: usize) -> Vec<f64> {
    (1..=p).map(|i| 1.0 / i as f64).collect()
}

/// Draw n samples of Z = [X|Y] from a registered base simulation.
///
/// - `linear`, `quadratic`, `cubic`: X ~ Uniform(−1,1)^p, response built from
///   wᵀX with w_i = 1/i plus κ·N(0,1) noise.
/// - `spiral`: latent U ~ Uniform(0,5), X₁ = U·cos(πU), Y = U·sin(πU) + κ·N.
/// - `circle`: latent angle, X₁ = cos(πU), Y = sin(πU) + κ·N with noise on
///   the Y coordinate only.
/// - `sine`: X₁ ~ Uniform(−1,1), Y = sin(4π·X₁) + κ·N.
/// - `w-shape`: X₁ ~ Uniform(−1,1), Y = 4(X₁² − 1/2)² + κ·N.
/// - `independence-null`: X and Y independent standard normal.
///
/// Curve simulations place the signal in (X₁, Y); X coordinates beyond the
/// first are uninformative standard normal padding.
pub fn base_simulation(
    sim_id: &str,
    n: usize,
    p: usize,
    kappa: f64,
    seed: u64,
) -> Result<DataMatrix> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidInput(
            "simulation needs n >= 1 and p >= 1".into(),
        ));
    }
    let mut rng = stream_rng(seed, 0);
    let mut z = Array2::zeros((n, p + 1));
    let normal = |rng: &mut ChaCha8Rng| rng.sample::<f64, _>(StandardNormal);

    match sim_id {
        "linear" | "quadratic" | "cubic" => {
            let w = decreasing_weights(p);
            for i in 0..n {
                let mut wx = 0.0;
                for j in 0..p {
                    let x: f64 = rng.random_range(-1.0..1.0);
                    z[[i, j]] = x;
                    wx += w[j] * x;
                }
                let signal = match sim_id {
                    "linear" => wx,
                    "quadratic" => wx * wx,
                    _ => {
                        let t = wx - 1.0 / 3.0;
                        128.0 * t * t * t + 48.0 * t * t - 12.0 * t
                    }
                };
                z[[i, p]] = signal + kappa * normal(&mut rng);
            }
        }
        "spiral" => {
            for i in 0..n {
                let u: f64 = rng.random_range(0.0..5.0);
                z[[i, 0]] = u * (std::f64::consts::PI * u).cos();
                for j in 1..p {
                    z[[i, j]] = normal(&mut rng);
                }
                z[[i, p]] = u * (std::f64::consts::PI * u).sin() + kappa * normal(&mut rng);
            }
        }
        "circle" => {
            for i in 0..n {
                let u: f64 = rng.random_range(-1.0..1.0);
                z[[i, 0]] = (std::f64::consts::PI * u).cos();
                for j in 1..p {
                    z[[i, j]] = normal(&mut rng);
                }
                // anisotropic: noise perturbs only the Y coordinate
                z[[i, p]] = (std::f64::consts::PI * u).sin() + kappa * normal(&mut rng);
            }
        }
        "sine" => {
            for i in 0..n {
                let t: f64 = rng.random_range(-1.0..1.0);
                z[[i, 0]] = t;
                for j in 1..p {
                    z[[i, j]] = normal(&mut rng);
                }
                z[[i, p]] = (4.0 * std::f64::consts::PI * t).sin() + kappa * normal(&mut rng);
            }
        }
        "w-shape" => {
            for i in 0..n {
                let t: f64 = rng.random_range(-1.0..1.0);
                z[[i, 0]] = t;
                for j in 1..p {
                    z[[i, j]] = normal(&mut rng);
                }
                let s = t * t - 0.5;
                z[[i, p]] = 4.0 * s * s + kappa * normal(&mut rng);
            }
        }
        "independence-null" => {
            for i in 0..n {
                for j in 0..=p {
                    z[[i, j]] = normal(&mut rng);
                }
            }
        }
        other => return Err(Error::UnknownSimulation(other.to_string())),
    }
    DataMatrix::new(z)
}

/// Rotated three-sample construction: three independent draws from the base
/// simulation, the second rotated by +θ and the third by −θ in the plane of
/// the first and last coordinates.
pub fn rotated_three_sample(
    sim_id: &str,
    theta_degrees: f64,
    n: usize,
    p: usize,
    kappa: f64,
    seed: u64,
) -> Result<KSampleData> {
    let z1 = base_simulation(sim_id, n, p, kappa, derive_seed(seed, 0))?;
    let z2 = base_simulation(sim_id, n, p, kappa, derive_seed(seed, 1))?;
    let z3 = base_simulation(sim_id, n, p, kappa, derive_seed(seed, 2))?;
    let g2 = rotate(&z2, RotationAngle::degrees(theta_degrees))?;
    let g3 = rotate(&z3, RotationAngle::degrees(-theta_degrees))?;
    KSampleData::new(vec![z1, g2, g3])
}
