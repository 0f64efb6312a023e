//! Moments, entropy and the auxiliary inequalities used by the moment bounds.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::mixture::SpeciesSet;
use crate::{Error, Result, Vec3};

/// Exponents above this make `exp` overflow soon after; refuse them.
pub const EXP_OVERFLOW_GUARD: f64 = 700.0;

/// Equal-weight particle representation of the species densities.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    species: SpeciesSet,
    velocities: Vec<Vec<Vec3>>,
    weight: f64,
}

impl ParticleEnsemble {
    pub fn new(species: SpeciesSet, velocities: Vec<Vec<Vec3>>, weight: f64) -> Result<Self> {
        if velocities.len() != species.len() {
            return Err(Error::invalid(
                "velocities",
                "one velocity array per species is required",
            ));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::invalid(
                "weight",
                format!("{weight} must be positive"),
            ));
        }
        if velocities
            .iter()
            .flatten()
            .any(|v| !v.iter().all(|c| c.is_finite()))
        {
            return Err(Error::invalid(
                "velocities",
                "every velocity must be finite",
            ));
        }
        Ok(Self {
            species,
            velocities,
            weight,
        })
    }

    pub fn species(&self) -> &SpeciesSet {
        &self.species
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn velocities(&self, i: usize) -> &[Vec3] {
        &self.velocities[i]
    }

    pub(crate) fn velocities_mut(&mut self) -> &mut [Vec<Vec3>] {
        &mut self.velocities
    }

    pub fn counts(&self) -> Vec<usize> {
        self.velocities.iter().map(Vec::len).collect()
    }

    pub fn total_count(&self) -> usize {
        self.velocities.iter().map(Vec::len).sum()
    }

    pub fn m0_per_species(&self) -> Vec<f64> {
        self.velocities
            .iter()
            .map(|vs| self.weight * vs.len() as f64)
            .collect()
    }

    /// `sum_i m_i int v f_i`.
    pub fn momentum(&self) -> Vec3 {
        let mut p = Vec3::zeros();
        for (i, vs) in self.velocities.iter().enumerate() {
            let s: Vec3 = vs.iter().sum();
            p += s * self.species.masses()[i];
        }
        p * self.weight
    }

    /// `w sum |m_i v|`, the scale against which momentum drift is measured.
    pub fn momentum_scale(&self) -> f64 {
        let mut acc = 0.0;
        for (i, vs) in self.velocities.iter().enumerate() {
            acc += self.species.masses()[i] * vs.iter().map(|v| v.norm()).sum::<f64>();
        }
        acc * self.weight
    }

    /// Standard error of [`Self::momentum`] viewed as a sum of independent particles.
    pub fn momentum_stderr(&self) -> f64 {
        let mut var = 0.0;
        for (i, vs) in self.velocities.iter().enumerate() {
            let n = vs.len();
            if n < 2 {
                continue;
            }
            let m = self.species.masses()[i];
            let mean: Vec3 = vs.iter().sum::<Vec3>() / n as f64;
            let ss: f64 = vs.iter().map(|v| (v - mean).norm_squared()).sum();
            var += m * m * ss * n as f64 / (n - 1) as f64;
        }
        self.weight * var.sqrt()
    }

    pub fn poly_moment(&self, q: f64) -> Result<f64> {
        check_order(q)?;
        Ok(self.weight
            * (0..self.species.len())
                .map(|i| self.raw_species_sum(i, q))
                .sum::<f64>())
    }

    /// Contribution `int f_i <v>_i^q` of one species.
    pub fn poly_moment_species(&self, i: usize, q: f64) -> Result<f64> {
        check_order(q)?;
        self.species.check_index(i)?;
        Ok(self.weight * self.raw_species_sum(i, q))
    }

    fn raw_species_sum(&self, i: usize, q: f64) -> f64 {
        let a = self.species.bracket_weight(i);
        let h = q / 2.0;
        if q == 0.0 {
            return self.velocities[i].len() as f64;
        }
        self.velocities[i]
            .iter()
            .map(|v| (1.0 + a * v.norm_squared()).powf(h))
            .sum()
    }

    /// `w sum_i sum_p exp(alpha <v_p>_i^s)`.
    pub fn exp_moment(&self, alpha: f64, s: f64) -> Result<f64> {
        if !(alpha > 0.0) {
            return Err(Error::invalid("alpha", format!("{alpha} must be positive")));
        }
        if !(s > 0.0 && s <= 2.0) {
            return Err(Error::invalid("s", format!("{s} is outside (0, 2]")));
        }
        let mut total = 0.0;
        for (i, vs) in self.velocities.iter().enumerate() {
            let a = self.species.bracket_weight(i);
            for (p, v) in vs.iter().enumerate() {
                let x = alpha * (1.0 + a * v.norm_squared()).powf(s / 2.0);
                if x > EXP_OVERFLOW_GUARD {
                    return Err(Error::ExpOverflow {
                        species: i,
                        particle: p,
                        exponent: x,
                    });
                }
                total += x.exp();
            }
        }
        Ok(self.weight * total)
    }

    /// Taylor partial sum `sum_{k<=n} alpha^k m_{sk} / k!`.
    pub fn exp_partial_sum(&self, alpha: f64, s: f64, n: u32) -> Result<f64> {
        let mut total = 0.0;
        let mut coef = 1.0;
        for k in 0..=n {
            if k > 0 {
                coef *= alpha / k as f64;
            }
            total += coef * self.poly_moment(s * k as f64)?;
        }
        Ok(total)
    }

    /// Histogram estimate of `sum_i int f_i log f_i` on the cube `[-L, L]^3`.
    pub fn entropy(&self, bins_per_axis: usize, box_halfwidth: f64) -> Result<EntropyEstimate> {
        let mut scratch = Vec::new();
        self.entropy_with(bins_per_axis, box_halfwidth, &mut scratch, |i| {
            Box::new(self.velocities[i].iter().copied())
        })
    }

    /// Entropy of a resample given by per-species particle indices.
    pub fn entropy_of_resample(
        &self,
        bins_per_axis: usize,
        box_halfwidth: f64,
        indices: &[Vec<usize>],
    ) -> Result<EntropyEstimate> {
        let mut scratch = Vec::new();
        self.entropy_with(bins_per_axis, box_halfwidth, &mut scratch, |i| {
            let vs = &self.velocities[i];
            Box::new(indices[i].iter().map(move |&p| vs[p]))
        })
    }

    fn entropy_with<'a>(
        &'a self,
        bins: usize,
        half: f64,
        counts: &mut Vec<u32>,
        particles: impl Fn(usize) -> Box<dyn Iterator<Item = Vec3> + 'a>,
    ) -> Result<EntropyEstimate> {
        if bins < 8 {
            return Err(Error::invalid(
                "bins_per_axis",
                format!("{bins} is below 8"),
            ));
        }
        if !(half > 0.0) {
            return Err(Error::invalid(
                "box_halfwidth",
                format!("{half} must be positive"),
            ));
        }
        let total = self.total_count();
        if total == 0 {
            return Err(Error::EmptyEnsemble);
        }
        let h = 2.0 * half / bins as f64;
        let vol = h * h * h;
        let mut inside = 0usize;
        let mut eta = 0.0;
        for i in 0..self.species.len() {
            counts.clear();
            counts.resize(bins * bins * bins, 0);
            for v in particles(i) {
                let cell = |c: f64| {
                    let x = ((c + half) / h).floor();
                    (x >= 0.0 && x < bins as f64).then_some(x as usize)
                };
                if let (Some(a), Some(b), Some(c)) = (cell(v.x), cell(v.y), cell(v.z)) {
                    counts[(a * bins + b) * bins + c] += 1;
                    inside += 1;
                }
            }
            for &c in counts.iter().filter(|c| **c > 0) {
                let mass = self.weight * c as f64;
                eta += mass * (mass / vol).ln();
            }
        }
        Ok(EntropyEstimate {
            value: eta,
            coverage: inside as f64 / total as f64,
        })
    }

    /// Diagnostic snapshot at time `t`.
    pub fn record(&self, t: f64, spec: &DiagnosticSpec) -> Result<MomentRecord> {
        let mut mk = Vec::with_capacity(spec.moment_orders.len());
        for &k in &spec.moment_orders {
            mk.push((k, self.poly_moment(k)?));
        }
        let exp_moment = match spec.exp_moment {
            Some(ExpMomentParams { alpha, s }) => Some((alpha, s, self.exp_moment(alpha, s)?)),
            None => None,
        };
        let entropy = match spec.entropy {
            Some(g) => Some(self.entropy(g.bins_per_axis, g.box_halfwidth)?.value),
            None => None,
        };
        Ok(MomentRecord {
            time: t,
            m0_per_species: self.m0_per_species(),
            momentum: self.momentum(),
            m2: self.poly_moment(2.0)?,
            mk,
            exp_moment,
            entropy,
        })
    }
}

fn check_order(q: f64) -> Result<()> {
    if q >= 0.0 && q.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            "q",
            format!("{q} must be a finite non-negative order"),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyEstimate {
    pub value: f64,
    /// Fraction of particles that fell inside the histogram box.
    pub coverage: f64,
}

impl EntropyEstimate {
    /// Whether the box held at least 99.9% of the particles.
    pub fn covers(&self) -> bool {
        self.coverage >= 0.999
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpMomentParams {
    pub alpha: f64,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyGrid {
    pub bins_per_axis: usize,
    pub box_halfwidth: f64,
}

/// Which diagnostics a [`MomentRecord`] carries.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DiagnosticSpec {
    pub moment_orders: Vec<f64>,
    pub exp_moment: Option<ExpMomentParams>,
    pub entropy: Option<EntropyGrid>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRecord {
    pub time: f64,
    pub m0_per_species: Vec<f64>,
    #[serde(serialize_with = "serialize_vec3")]
    pub momentum: Vec3,
    pub m2: f64,
    /// `(k, m_k)` in the requested order.
    pub mk: Vec<(f64, f64)>,
    pub exp_moment: Option<(f64, f64, f64)>,
    pub entropy: Option<f64>,
}

fn serialize_vec3<S: serde::Serializer>(v: &Vec3, s: S) -> std::result::Result<S::Ok, S::Error> {
    [v.x, v.y, v.z].serialize(s)
}

impl MomentRecord {
    pub fn moment(&self, k: f64) -> Option<f64> {
        self.mk.iter().find(|(q, _)| *q == k).map(|(_, m)| *m)
    }

    pub fn csv_header(species_count: usize, spec: &DiagnosticSpec) -> String {
        let mut h = String::from("t");
        for i in 0..species_count {
            let _ = write!(h, ",m0_{i}");
        }
        h.push_str(",px,py,pz,m2");
        for k in &spec.moment_orders {
            let _ = write!(h, ",mk_{k}");
        }
        if let Some(e) = spec.exp_moment {
            let _ = write!(h, ",exp_a{}_s{}", e.alpha, e.s);
        }
        if spec.entropy.is_some() {
            h.push_str(",entropy");
        }
        h
    }

    /// One CSV line; floats use shortest round-trip formatting.
    pub fn csv_row(&self) -> String {
        let mut row = String::new();
        let mut push = |x: f64| {
            if !row.is_empty() {
                row.push(',');
            }
            row.push_str(&fmt_f64(x));
        };
        push(self.time);
        self.m0_per_species.iter().for_each(|m| push(*m));
        [self.momentum.x, self.momentum.y, self.momentum.z, self.m2]
            .into_iter()
            .for_each(&mut push);
        self.mk.iter().for_each(|(_, m)| push(*m));
        if let Some((_, _, e)) = self.exp_moment {
            push(e);
        }
        if let Some(e) = self.entropy {
            push(e);
        }
        row
    }
}

/// Shortest decimal that parses back to `x`, switching to exponent
/// notation for very small and very large magnitudes.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Outcome of evaluating both sides of an inequality `lhs <= rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl InequalityCheck {
    fn new(lhs: f64, rhs: f64, slack: f64) -> Self {
        Self {
            lhs,
            rhs,
            holds: lhs <= rhs * (1.0 + 1e-12) + slack,
        }
    }
}

/// `(I C0)^(-lambda/k) m_k^(1 + lambda/k)`, a lower bound for `m_{k+lambda}`.
pub fn jensen_lower_bound(
    m_k: f64,
    m0_cap: f64,
    species_count: usize,
    k: f64,
    lambda: f64,
) -> Result<f64> {
    if !(m_k > 0.0 && m0_cap > 0.0 && species_count > 0) {
        return Err(Error::invalid(
            "jensen",
            "moment, cap and species count must be positive",
        ));
    }
    if !(k >= 1.0) {
        return Err(Error::invalid("k", format!("{k} is below 1")));
    }
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::invalid(
            "lambda",
            format!("{lambda} is outside (0, 1]"),
        ));
    }
    let e = lambda / k;
    Ok((species_count as f64 * m0_cap).powf(-e) * m_k.powf(1.0 + e))
}

/// `m_k <= I m_{k1}^alpha m_{k2}^(1-alpha)` with `k = alpha k1 + (1-alpha) k2`.
pub fn interpolation_check(
    ensemble: &ParticleEnsemble,
    k1: f64,
    k2: f64,
    alpha: f64,
) -> Result<InequalityCheck> {
    check_interpolation_args(k1, k2, alpha)?;
    let k = alpha * k1 + (1.0 - alpha) * k2;
    let lhs = ensemble.poly_moment(k)?;
    let rhs = ensemble.species().len() as f64
        * ensemble.poly_moment(k1)?.powf(alpha)
        * ensemble.poly_moment(k2)?.powf(1.0 - alpha);
    Ok(InequalityCheck::new(lhs, rhs, 0.0))
}

/// Per-species form of [`interpolation_check`], which holds with constant 1.
pub fn interpolation_check_species(
    ensemble: &ParticleEnsemble,
    i: usize,
    k1: f64,
    k2: f64,
    alpha: f64,
) -> Result<InequalityCheck> {
    check_interpolation_args(k1, k2, alpha)?;
    let k = alpha * k1 + (1.0 - alpha) * k2;
    let lhs = ensemble.poly_moment_species(i, k)?;
    let rhs = ensemble.poly_moment_species(i, k1)?.powf(alpha)
        * ensemble.poly_moment_species(i, k2)?.powf(1.0 - alpha);
    Ok(InequalityCheck::new(lhs, rhs, 0.0))
}

fn check_interpolation_args(k1: f64, k2: f64, alpha: f64) -> Result<()> {
    if !(k1 > 0.0 && k1 <= k2 && k2.is_finite()) {
        return Err(Error::invalid(
            "k1, k2",
            format!("need 0 < k1 <= k2, got {k1}, {k2}"),
        ));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(
            "alpha",
            format!("{alpha} is outside (0, 1)"),
        ));
    }
    Ok(())
}

/// `k (k-1) ... (k-l+1) / l!` for real `k`.
pub fn generalized_binomial(k: f64, l: u32) -> f64 {
    (0..l).fold(1.0, |acc, n| acc * (k - n as f64) / (n + 1) as f64)
}

/// `(x+y)^p - x^p - y^p <= sum_{n=1}^{floor((p+1)/2)} C(p,n) (x^n y^(p-n) + x^(p-n) y^n)`.
pub fn poly_inequality_i(x: f64, y: f64, p: f64) -> Result<InequalityCheck> {
    if !(x > 0.0 && y > 0.0 && p > 1.0 && p.is_finite()) {
        return Err(Error::invalid("x, y, p", "need x, y > 0 and p > 1"));
    }
    // (x+y)^p - hi^p = hi^p ((1 + lo/hi)^p - 1), formed without cancellation
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    let lhs = hi.powf(p) * (p * (lo / hi).ln_1p()).exp_m1() - lo.powf(p);
    let np = ((p + 1.0) / 2.0).floor() as u32;
    let rhs: f64 = (1..=np)
        .map(|n| {
            let n_f = n as f64;
            generalized_binomial(p, n)
                * (x.powf(n_f) * y.powf(p - n_f) + x.powf(p - n_f) * y.powf(n_f))
        })
        .sum();
    // lhs is a difference of terms of size (x+y)^p
    let slack = 8.0 * f64::EPSILON * (x + y).powf(p);
    Ok(InequalityCheck::new(lhs, rhs, slack))
}

/// `x^a y^(p-a) + x^(p-a) y^a <= x^b y^(p-b) + x^(p-b) y^b` for `b + 1 <= a <= (p+1)/2`, `b >= 0`.
pub fn poly_inequality_ii(x: f64, y: f64, a: f64, b: f64, p: f64) -> Result<InequalityCheck> {
    if !(x >= 0.0 && y >= 0.0) {
        return Err(Error::invalid("x, y", "must be non-negative"));
    }
    if !(b >= 0.0 && b + 1.0 <= a && a <= (p + 1.0) / 2.0) {
        return Err(Error::invalid(
            "a, b, p",
            format!("need 0 <= b, b + 1 <= a <= (p+1)/2, got a={a} b={b} p={p}"),
        ));
    }
    let lhs = x.powf(a) * y.powf(p - a) + x.powf(p - a) * y.powf(a);
    let rhs = x.powf(b) * y.powf(p - b) + x.powf(p - b) * y.powf(b);
    Ok(InequalityCheck::new(lhs, rhs, 0.0))
}
