use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::constfit::Dataset;
use crate::error::{Error, Result};
use crate::materials::Kernel;

/// Default synthetic domain in Å.
pub const DEFAULT_DOMAIN: (f64, f64) = (0.5, 15.0);

/// Per-site formation energy of the MoS2 Mo/S vacancy pair as a function of
/// their distance `x` (Å):
/// `4.895 + (cos(0.5)·cos(8 − 2x) − 1)·x²·e^(−x)`.
pub fn paper_kernel_eq5(x: f64) -> f64 {
    4.895 + (0.5f64.cos() * (8.0 - 2.0 * x).cos() - 1.0) * x * x * (-x).exp()
}

/// Prefix form of [`paper_kernel_eq5`] and its constants.
pub const EQ5_EXPRESSION: &str = "add C0 mul sub mul cos C1 cos sub C2 mul C3 x C4 div mul x x exp x";
pub const EQ5_CONSTANTS: [f64; 5] = [4.895, 0.5, 8.0, 2.0, 1.0];

/// Oscillatory-decay interaction `A·(2kr·cos 2kr − sin 2kr) / r⁴`.
pub fn rkky_kernel(r: f64, amplitude: f64, k: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidConfig(format!("rkky kernel needs r > 0 (got {r})")));
    }
    let q = 2.0 * k * r;
    Ok(amplitude * (q * q.cos() - q.sin()) / r.powi(4))
}

/// Prefix form of [`rkky_kernel`] with constants `[A, 2k, π/2]`; the sine is
/// written as a shifted cosine since the grammar has no sine.
pub const RKKY_EXPRESSION: &str = "div mul C0 sub mul mul C1 x cos mul C1 x cos sub mul C1 x C2 mul mul x x mul x x";

pub fn rkky_constants(amplitude: f64, k: f64) -> Vec<f64> {
    vec![amplitude, 2.0 * k, std::f64::consts::FRAC_PI_2]
}

/// A named closed-form kernel with sampling noise.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec {
    pub name: String,
    pub kernel: Kernel,
    pub noise_sigma: f64,
}

/// Names accepted by [`kernel_by_name`].
pub const BUILTIN_KERNELS: [&str; 4] = ["eq5", "rkky", "x2", "x2exp"];

impl KernelSpec {
    pub fn new(name: &str, expression: &str, consts: Vec<f64>, domain: (f64, f64)) -> Result<Self> {
        Ok(KernelSpec {
            name: name.to_string(),
            kernel: Kernel::from_text(expression, consts, domain)?,
            noise_sigma: 0.0,
        })
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma;
        self
    }

    pub fn with_domain(self, domain: (f64, f64)) -> Result<Self> {
        let k = &self.kernel;
        Ok(KernelSpec {
            kernel: Kernel::new(k.tree().clone(), k.const_values().to_vec(), domain)?,
            ..self
        })
    }

    pub fn eval(&self, x: f64) -> Option<f64> {
        self.kernel.eval(x)
    }

    pub fn domain(&self) -> (f64, f64) {
        self.kernel.domain()
    }
}

/// Built-in kernels on the default domain.
pub fn kernel_by_name(name: &str) -> Result<KernelSpec> {
    let d = DEFAULT_DOMAIN;
    match name {
        "eq5" => KernelSpec::new(name, EQ5_EXPRESSION, EQ5_CONSTANTS.to_vec(), d),
        "rkky" => KernelSpec::new(name, RKKY_EXPRESSION, rkky_constants(1.0, 1.0), d),
        "x2" => KernelSpec::new(name, "mul x x", vec![], d),
        "x2exp" => KernelSpec::new(name, "div mul x x exp x", vec![], d),
        _ => Err(Error::UnknownKernel {
            name: name.to_string(),
            available: BUILTIN_KERNELS.join(", "),
        }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Grid {
    /// Evenly spaced, both ends included.
    Uniform,
    /// Independent uniform draws.
    Random,
}

/// Samples `n` points `(x, f(x) + noise)` from the kernel's domain.
pub fn sample_dataset<R: Rng + ?Sized>(spec: &KernelSpec, n: usize, grid: Grid, rng: &mut R) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidConfig("number of samples must be at least 1".into()));
    }
    if !(spec.noise_sigma >= 0.0) || !spec.noise_sigma.is_finite() {
        return Err(Error::InvalidConfig(
            "noise sigma must be finite and non-negative".into(),
        ));
    }
    let (lo, hi) = spec.domain();
    let xs: Vec<f64> = match grid {
        Grid::Uniform if n == 1 => vec![lo],
        Grid::Uniform => (0..n)
            .map(|i| {
                if i + 1 == n {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
        Grid::Random => (0..n).map(|_| rng.random_range(lo..=hi)).collect(),
    };
    let noise = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");
    let mut ys = Vec::with_capacity(n);
    for &x in &xs {
        let y = spec
            .eval(x)
            .ok_or_else(|| Error::InvalidDataset(format!("kernel `{}` undefined at x={x}", spec.name)))?;
        ys.push(if spec.noise_sigma > 0.0 {
            y + noise.sample(rng)
        } else {
            y
        });
    }
    Dataset::univariate(xs, ys, "r", "y")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use std::f64::consts::PI;

    #[test]
    fn eq5_tree_matches_closed_form() {
        let spec = kernel_by_name("eq5").unwrap();
        for i in 0..=300 {
            let x = i as f64 * 0.1;
            let (a, b) = (spec.eval(x).unwrap(), paper_kernel_eq5(x));
            assert!((a - b).abs() <= 1e-14 * b.abs(), "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn rkky_values() {
        // 2·(π/2)·cos π − sin π = −π
        let v = rkky_kernel(PI / 2.0, 1.0, 1.0).unwrap();
        assert!((v - (-PI / (PI / 2.0).powi(4))).abs() < 1e-15);
        assert_eq!(rkky_kernel(3.0, 2.0, 0.0).unwrap(), 0.0);
        assert!(rkky_kernel(0.0, 1.0, 1.0).is_err());
        assert!(rkky_kernel(-1.0, 1.0, 1.0).is_err());
        assert!(rkky_kernel(1e4, 1.0, 1.0).unwrap().abs() < 1e-11);
        let spec = kernel_by_name("rkky").unwrap();
        for r in [0.5, 1.0, 2.7, 9.9, 15.0] {
            let exact = rkky_kernel(r, 1.0, 1.0).unwrap();
            assert!(
                (spec.eval(r).unwrap() - exact).abs() < 1e-12 * exact.abs().max(1e-3),
                "r={r}"
            );
        }
    }

    #[test]
    fn builtins_pass_predicates() {
        for name in BUILTIN_KERNELS {
            let spec = kernel_by_name(name).unwrap();
            spec.kernel.check_predicates().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        let err = kernel_by_name("sinc").unwrap_err().to_string();
        assert!(err.contains("eq5") && err.contains("rkky"), "{err}");
    }

    #[test]
    fn noiseless_samples_are_exact() {
        let spec = kernel_by_name("eq5").unwrap();
        for grid in [Grid::Uniform, Grid::Random] {
            let d = sample_dataset(&spec, 50, grid, &mut seeded(3)).unwrap();
            assert_eq!(d.len(), 50);
            for (row, y) in d.rows().zip(d.y()) {
                assert_eq!(*y, spec.eval(row[0]).unwrap());
                assert!(row[0] >= 0.5 && row[0] <= 15.0);
            }
        }
        let one = sample_dataset(&spec, 1, Grid::Uniform, &mut seeded(3)).unwrap();
        assert_eq!(one.len(), 1);
        assert!(sample_dataset(&spec, 0, Grid::Uniform, &mut seeded(3)).is_err());
    }

    #[test]
    fn noise_has_the_requested_spread() {
        let spec = kernel_by_name("x2exp").unwrap().with_noise(0.1);
        let d = sample_dataset(&spec, 10_000, Grid::Random, &mut seeded(11)).unwrap();
        let res: Vec<f64> = d.rows().zip(d.y()).map(|(r, y)| y - spec.eval(r[0]).unwrap()).collect();
        let m = res.iter().sum::<f64>() / res.len() as f64;
        let sd = (res.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (res.len() - 1) as f64).sqrt();
        assert!((0.09..=0.11).contains(&sd), "sd={sd}");
    }

    #[test]
    fn sampling_is_seeded() {
        let spec = kernel_by_name("rkky").unwrap().with_noise(0.01);
        let a = sample_dataset(&spec, 20, Grid::Random, &mut seeded(5)).unwrap();
        let b = sample_dataset(&spec, 20, Grid::Random, &mut seeded(5)).unwrap();
        assert_eq!(a, b);
    }
}
