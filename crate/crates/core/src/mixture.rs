//! Mixture configuration: species masses, pairwise cross sections and the
//! bracket weights built from them.

use std::f64::consts::PI;
use std::fmt;

use crate::{Error, Result, Vec3};

/// Masses of the `I` species in the mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesSet {
    masses: Vec<f64>,
    total_mass: f64,
}

impl SpeciesSet {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::invalid("masses", "at least one species is required"));
        }
        if let Some(m) = masses.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(Error::invalid(
                "masses",
                format!("mass {m} is not a positive finite number"),
            ));
        }
        let total_mass = masses.iter().sum();
        Ok(Self { masses, total_mass })
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn max_mass(&self) -> f64 {
        self.masses.iter().copied().fold(f64::MIN, f64::max)
    }

    pub fn min_mass(&self) -> f64 {
        self.masses.iter().copied().fold(f64::MAX, f64::min)
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i < self.masses.len() {
            Ok(())
        } else {
            Err(Error::SpeciesIndex {
                index: i,
                count: self.masses.len(),
            })
        }
    }

    pub fn mass(&self, i: usize) -> Result<f64> {
        self.check_index(i)?;
        Ok(self.masses[i])
    }

    /// `m_i / sum_j m_j`, the coefficient of `|v|^2` inside the bracket.
    #[inline]
    pub(crate) fn bracket_weight(&self, i: usize) -> f64 {
        self.masses[i] / self.total_mass
    }

    /// Squared bracket `1 + (m_i / sum m) |v|^2` without index checking.
    #[inline]
    pub(crate) fn bracket_sq_unchecked(&self, v: &Vec3, i: usize) -> f64 {
        1.0 + self.bracket_weight(i) * v.norm_squared()
    }

    /// The mixture bracket `<v>_i = sqrt(1 + (m_i / sum_j m_j) |v|^2)`.
    pub fn bracket(&self, v: &Vec3, i: usize) -> Result<f64> {
        self.check_index(i)?;
        Ok(self.bracket_sq_unchecked(v, i).sqrt())
    }

    /// Two-body mass fraction `r_ij = m_i / (m_i + m_j)`.
    pub fn mass_fraction(&self, i: usize, j: usize) -> Result<f64> {
        self.check_index(i)?;
        self.check_index(j)?;
        Ok(self.masses[i] / (self.masses[i] + self.masses[j]))
    }
}

/// Shape of the angular part `b(tau)`, `tau = sigma . u_hat`.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelShape {
    Constant(f64),
    /// Piecewise-linear table on a strictly increasing grid spanning `[-1, 1]`.
    Tabulated {
        tau: Vec<f64>,
        values: Vec<f64>,
    },
}

/// Angular kernel together with its `L^1(d sigma)` and `L^inf` norms.
///
/// Tabulated kernels are integrated with the composite trapezoidal rule,
/// which is exact for the piecewise-linear interpolant that
/// [`AngularKernel::eval`] and the sampler use.
#[derive(Debug, Clone)]
pub struct AngularKernel {
    shape: KernelShape,
    l1_norm: f64,
    sup_norm: f64,
    // cumulative tau-mass at each grid node, tabulated kernels only
    cumulative: Vec<f64>,
}

impl PartialEq for AngularKernel {
    fn eq(&self, other: &Self) -> bool {
        self.shape == other.shape
    }
}

const GRID_EDGE_TOL: f64 = 1e-12;

impl AngularKernel {
    pub fn constant(value: f64) -> Result<Self> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::invalid(
                "kernel value",
                format!("{value} is not a finite non-negative number"),
            ));
        }
        Ok(Self {
            shape: KernelShape::Constant(value),
            l1_norm: 4.0 * PI * value,
            sup_norm: value,
            cumulative: Vec::new(),
        })
    }

    /// Constant kernel with unit `L^1(d sigma)` norm, `b = 1/(4 pi)`.
    pub fn normalized_constant() -> Self {
        Self::constant(1.0 / (4.0 * PI)).expect("positive constant")
    }

    pub fn tabulated(tau: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if tau.len() < 2 || tau.len() != values.len() {
            return Err(Error::invalid(
                "kernel table",
                "needs at least two (tau, b) pairs with matching lengths",
            ));
        }
        if tau.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(
                "kernel table",
                "tau grid must be strictly increasing",
            ));
        }
        if (tau[0] + 1.0).abs() > GRID_EDGE_TOL || (tau[tau.len() - 1] - 1.0).abs() > GRID_EDGE_TOL
        {
            return Err(Error::invalid(
                "kernel table",
                "tau grid must cover [-1, 1]",
            ));
        }
        if values.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(Error::invalid(
                "kernel table",
                "values must be finite and non-negative",
            ));
        }
        let mut cumulative = Vec::with_capacity(tau.len());
        cumulative.push(0.0);
        let mut acc = 0.0;
        for k in 0..tau.len() - 1 {
            acc += 0.5 * (tau[k + 1] - tau[k]) * (values[k] + values[k + 1]);
            cumulative.push(acc);
        }
        let sup_norm = values.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            l1_norm: 2.0 * PI * acc,
            sup_norm,
            shape: KernelShape::Tabulated { tau, values },
            cumulative,
        })
    }

    pub fn shape(&self) -> &KernelShape {
        &self.shape
    }

    /// `||b||_{L^1(d sigma)} = 2 pi * int_{-1}^{1} b(tau) d tau`.
    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.shape, KernelShape::Constant(_))
    }

    /// Kernel value at `tau`, clamped to `[-1, 1]`.
    pub fn eval(&self, tau: f64) -> f64 {
        match &self.shape {
            KernelShape::Constant(c) => *c,
            KernelShape::Tabulated { tau: grid, values } => {
                let t = tau.clamp(-1.0, 1.0);
                let k = segment_index(grid, t);
                let w = (t - grid[k]) / (grid[k + 1] - grid[k]);
                values[k] + w * (values[k + 1] - values[k])
            }
        }
    }

    /// Inverse of the `tau`-marginal CDF, `u01` in `[0, 1)`. Exact for the
    /// piecewise-linear density (the per-segment CDF is quadratic).
    pub(crate) fn tau_quantile(&self, u01: f64) -> Result<f64> {
        match &self.shape {
            KernelShape::Constant(c) => {
                if *c <= 0.0 {
                    return Err(Error::DegenerateKernel);
                }
                Ok(2.0 * u01 - 1.0)
            }
            KernelShape::Tabulated { tau, values } => {
                let total = *self.cumulative.last().expect("non-empty table");
                if total <= 0.0 {
                    return Err(Error::DegenerateKernel);
                }
                let target = u01 * total;
                // first node whose cumulative mass exceeds the target
                let k = self
                    .cumulative
                    .partition_point(|c| *c <= target)
                    .clamp(1, tau.len() - 1)
                    - 1;
                let h = tau[k + 1] - tau[k];
                let b0 = values[k];
                let slope = (values[k + 1] - b0) / h;
                let rem = (target - self.cumulative[k]).max(0.0);
                let denom = b0 + (b0 * b0 + 2.0 * slope * rem).max(0.0).sqrt();
                let x = if denom > 0.0 { 2.0 * rem / denom } else { 0.0 };
                Ok((tau[k] + x.min(h)).clamp(-1.0, 1.0))
            }
        }
    }
}

fn segment_index(grid: &[f64], t: f64) -> usize {
    grid.partition_point(|g| *g <= t).clamp(1, grid.len() - 1) - 1
}

/// Pairwise hard-potential exponents `gamma_ij` and angular kernels `b_ij`.
#[derive(Debug, Clone)]
pub struct CrossSection {
    gamma: Vec<Vec<f64>>,
    kernels: Vec<Vec<AngularKernel>>,
    gamma_bar: f64,
}

impl CrossSection {
    /// Shape checks only; symmetry and range are reported by [`CrossSection::validate`].
    pub fn new(gamma: Vec<Vec<f64>>, kernels: Vec<Vec<AngularKernel>>) -> Result<Self> {
        let n = gamma.len();
        if n == 0 {
            return Err(Error::invalid("cross_section", "empty gamma matrix"));
        }
        if gamma.iter().any(|row| row.len() != n) {
            return Err(Error::invalid(
                "cross_section.gamma",
                "matrix must be square",
            ));
        }
        if kernels.len() != n || kernels.iter().any(|row| row.len() != n) {
            return Err(Error::invalid(
                "cross_section.kernels",
                "kernel matrix must match gamma",
            ));
        }
        if gamma.iter().flatten().any(|g| !g.is_finite()) {
            return Err(Error::invalid(
                "cross_section.gamma",
                "entries must be finite",
            ));
        }
        let gamma_bar = gamma.iter().flatten().copied().fold(f64::MIN, f64::max);
        Ok(Self {
            gamma,
            kernels,
            gamma_bar,
        })
    }

    /// Same exponent and kernel for every pair.
    pub fn uniform(species_count: usize, gamma: f64, kernel: AngularKernel) -> Result<Self> {
        Self::new(
            vec![vec![gamma; species_count]; species_count],
            vec![vec![kernel; species_count]; species_count],
        )
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    pub fn gamma(&self, i: usize, j: usize) -> f64 {
        self.gamma[i][j]
    }

    pub fn kernel(&self, i: usize, j: usize) -> &AngularKernel {
        &self.kernels[i][j]
    }

    pub fn gamma_matrix(&self) -> &[Vec<f64>] {
        &self.gamma
    }

    /// `max_ij gamma_ij`.
    pub fn gamma_bar(&self) -> f64 {
        self.gamma_bar
    }

    pub fn gamma_min(&self) -> f64 {
        self.gamma
            .iter()
            .flatten()
            .copied()
            .fold(f64::MAX, f64::min)
    }

    pub fn validate(&self, species: &SpeciesSet) -> ValidationReport {
        let mut violations = Vec::new();
        let n = self.len();
        if n != species.len() {
            violations.push(Violation::SizeMismatch {
                species: species.len(),
                cross_section: n,
            });
        }
        for i in 0..n {
            for j in 0..n {
                let g = self.gamma[i][j];
                if !(g > 0.0 && g <= 1.0) {
                    violations.push(Violation::GammaOutOfRange { i, j, value: g });
                }
                if self.kernels[i][j].l1_norm() <= 0.0 {
                    violations.push(Violation::DegenerateKernel { i, j });
                }
                if j > i {
                    if self.gamma[i][j] != self.gamma[j][i] {
                        violations.push(Violation::AsymmetricGamma {
                            i,
                            j,
                            gamma_ij: self.gamma[i][j],
                            gamma_ji: self.gamma[j][i],
                        });
                    }
                    if self.kernels[i][j] != self.kernels[j][i] {
                        violations.push(Violation::AsymmetricKernel { i, j });
                    }
                }
            }
        }
        ValidationReport { violations }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    SizeMismatch {
        species: usize,
        cross_section: usize,
    },
    GammaOutOfRange {
        i: usize,
        j: usize,
        value: f64,
    },
    AsymmetricGamma {
        i: usize,
        j: usize,
        gamma_ij: f64,
        gamma_ji: f64,
    },
    AsymmetricKernel {
        i: usize,
        j: usize,
    },
    DegenerateKernel {
        i: usize,
        j: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SizeMismatch { species, cross_section } => write!(
                f,
                "cross section is {cross_section}x{cross_section} but the mixture has {species} species"
            ),
            Violation::GammaOutOfRange { i, j, value } => {
                write!(f, "gamma[{i}][{j}] = {value} is outside (0, 1]")
            }
            Violation::AsymmetricGamma { i, j, gamma_ij, gamma_ji } => write!(
                f,
                "gamma is not symmetric for pair ({i},{j}): {gamma_ij} vs {gamma_ji}"
            ),
            Violation::AsymmetricKernel { i, j } => {
                write!(f, "angular kernels differ for pair ({i},{j}) and ({j},{i})")
            }
            Violation::DegenerateKernel { i, j } => {
                write!(f, "angular kernel for pair ({i},{j}) has zero L1 norm")
            }
        }
    }
}

/// Every violated structural assumption; empty when the configuration is admissible.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}
