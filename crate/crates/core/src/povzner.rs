//! Angular-averaging (Povzner) constants and the moment threshold `k*`.

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use crate::collision::{energy_identity, uniform_sphere, CollisionInput};
use crate::mixture::{AngularKernel, CrossSection, SpeciesSet};
use crate::stats::Welford;
use crate::{Error, Result};

/// Default spacing of the `k` grid searched for `k*`.
pub const DEFAULT_GRID_STEP: f64 = 0.5;
/// No pair threshold is reported above this order.
pub const KSTAR_CAP: f64 = 1e4;
/// A candidate `k` must hold up to `HORIZON_FACTOR * k`.
pub const HORIZON_FACTOR: f64 = 100.0;

/// The four pieces of the closed form for `n > 2`; it equals
/// `2 c_tilde + c_bar - c_hat / 2 + c_check`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PovznerComponents {
    pub c_tilde: f64,
    pub c_bar: f64,
    pub c_hat: f64,
    pub c_check: f64,
}

/// Normalized bounded-kernel Povzner constant for a fixed mass fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PovznerConstants {
    r: f64,
    r_lo: f64,
    r_hi: f64,
}

impl PovznerConstants {
    /// Orders `n` at or below this value use the pure power branch.
    pub const BRANCH_POINT: f64 = 2.0;

    pub fn new(r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::invalid("r", format!("{r} is outside (0, 1)")));
        }
        // 1 - r is exact for r >= 1/2, so deriving both halves from r_hi makes
        // r and fl(1 - r) produce bit-identical constants.
        let r_hi = if r >= 0.5 { r } else { 1.0 - r };
        Ok(Self {
            r,
            r_lo: 1.0 - r_hi,
            r_hi,
        })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn components(&self, n: f64) -> PovznerComponents {
        let (lo, hi) = (self.r_lo, self.r_hi);
        let ln_q = (-lo).ln_1p();
        let pow_q = |e: f64| (e * ln_q).exp();
        let hi2 = hi * hi;
        PovznerComponents {
            c_tilde: hi.powf(n),
            c_bar: -2.0 * hi2 / (lo * lo) * pow_q(n),
            c_hat: 2.0 * hi2 / lo * n * pow_q(n - 1.0),
            c_check: 2.0 * hi2 / (lo * lo * lo) * (-((n + 1.0) * ln_q).exp_m1()) / (n + 1.0),
        }
    }

    /// `C_inf_n(r)`; `n` must exceed 1.
    pub fn evaluate(&self, n: f64) -> Result<f64> {
        if !(n > 1.0) || !n.is_finite() {
            return Err(Error::invalid(
                "n",
                format!("{n} must be a finite number above 1"),
            ));
        }
        Ok(self.evaluate_unchecked(n))
    }

    fn evaluate_unchecked(&self, n: f64) -> f64 {
        if n <= Self::BRANCH_POINT {
            return 2.0 * self.r_hi.powf(n);
        }
        let c = self.components(n);
        2.0 * c.c_tilde + c.c_bar - 0.5 * c.c_hat + c.c_check
    }
}

pub fn povzner_renormalized(n: f64, r: f64) -> Result<f64> {
    PovznerConstants::new(r)?.evaluate(n)
}

/// `4 pi ||b||_inf C_inf_n(r)`.
pub fn povzner_linf(n: f64, r: f64, b_sup: f64) -> Result<f64> {
    if !(b_sup >= 0.0) {
        return Err(Error::invalid("b_sup", format!("{b_sup} is negative")));
    }
    Ok(4.0 * PI * b_sup * povzner_renormalized(n, r)?)
}

/// Monte Carlo estimate of `int_{S^2} (<v'>_i^k + <v'_*>_j^k) b(sigma.u_hat) d sigma`
/// with its standard error. Directions are drawn uniformly and weighted by `4 pi b`.
pub fn angular_average_mc<R: Rng + ?Sized>(
    k: f64,
    input: &CollisionInput,
    kernel: &AngularKernel,
    species: &SpeciesSet,
    samples: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    Ok(angular_average_mc_orders(&[k], input, kernel, species, samples, rng)?[0])
}

/// [`angular_average_mc`] for several orders sharing the same direction samples.
pub fn angular_average_mc_orders<R: Rng + ?Sized>(
    ks: &[f64],
    input: &CollisionInput,
    kernel: &AngularKernel,
    species: &SpeciesSet,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<(f64, f64)>> {
    if samples < 1000 {
        return Err(Error::invalid(
            "samples",
            format!("{samples} is below the minimum of 1000"),
        ));
    }
    if let Some(k) = ks.iter().find(|k| !(**k >= 2.0)) {
        return Err(Error::invalid("k", format!("{k} is below 2")));
    }
    let terms = energy_identity(input, species)?;
    let u_norm = terms.u.norm();
    let u_hat = if u_norm > 0.0 {
        terms.u / u_norm
    } else {
        terms.u
    };
    let halves: Vec<f64> = ks.iter().map(|k| k / 2.0).collect();
    let mut acc = vec![Welford::default(); ks.len()];
    for _ in 0..samples {
        let sigma = uniform_sphere(rng);
        let w = 4.0 * PI * kernel.eval(sigma.dot(&u_hat));
        let (a, b) = terms.recompose(&sigma);
        for (h, slot) in halves.iter().zip(acc.iter_mut()) {
            slot.push(w * (a.powf(*h) + b.powf(*h)));
        }
    }
    Ok(acc.iter().map(|w| (w.mean(), w.stderr())).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KStarPair {
    pub k: f64,
    /// Largest grid order checked when confirming `k`.
    pub horizon: f64,
}

/// Smallest grid order `k = 2 + m * grid_step` above which the Povzner
/// constant stays below `||b||_L1` for every grid order up to `100 k`.
///
/// Constant kernels use the equivalent normalized test `C_inf < 1`.
pub fn find_kstar_pair(r: f64, kernel: &AngularKernel, grid_step: f64) -> Result<KStarPair> {
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(Error::invalid(
            "grid_step",
            format!("{grid_step} must be positive"),
        ));
    }
    let pc = PovznerConstants::new(r)?;
    if kernel.l1_norm() <= 0.0 {
        return Err(Error::DegenerateKernel);
    }
    let threshold = if kernel.is_constant() {
        1.0
    } else {
        kernel.l1_norm() / (4.0 * PI * kernel.sup_norm())
    };
    let grid = |m: u64| 2.0 + m as f64 * grid_step;
    let mut candidate = 1u64;
    let mut m = 1u64;
    loop {
        let k = grid(m);
        if pc.evaluate_unchecked(k / 2.0) >= threshold {
            candidate = m + 1;
            if grid(candidate) > KSTAR_CAP {
                return Err(Error::KStarNotFound { r, cap: KSTAR_CAP });
            }
        } else if k >= HORIZON_FACTOR * grid(candidate) {
            let k_star = grid(candidate);
            return Ok(KStarPair {
                k: k_star,
                horizon: k,
            });
        }
        m += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KStarSummary {
    #[serde(rename = "pairs")]
    pub k_star_pairs: Vec<Vec<f64>>,
    pub k_bar: f64,
    pub gamma_bar: f64,
    pub k_star: f64,
    pub grid_step: f64,
    pub horizon: f64,
}

pub fn kstar_global(
    species: &SpeciesSet,
    cross_section: &CrossSection,
    grid_step: f64,
) -> Result<KStarSummary> {
    let n = species.len();
    if cross_section.len() != n {
        return Err(Error::invalid(
            "cross_section",
            "size does not match the species set",
        ));
    }
    let mut pairs = vec![vec![0.0; n]; n];
    let mut horizon: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            // the constant depends on min(r, 1-r) only; forming it from the
            // lighter mass keeps (i, j) and (j, i) bit-identical
            let (mi, mj) = (species.mass(i)?, species.mass(j)?);
            let r_lo = mi.min(mj) / (mi + mj);
            let found = find_kstar_pair(r_lo, cross_section.kernel(i, j), grid_step)?;
            pairs[i][j] = found.k;
            horizon = horizon.max(found.horizon);
        }
    }
    let k_bar = pairs.iter().flatten().copied().fold(f64::MIN, f64::max);
    let gamma_bar = cross_section.gamma_bar();
    Ok(KStarSummary {
        k_star_pairs: pairs,
        k_bar,
        gamma_bar,
        k_star: k_bar.max(2.0 + 2.0 * gamma_bar),
        grid_step,
        horizon,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub r: f64,
    pub n: f64,
    pub c_inf: f64,
}

/// `C_inf_n(r)` over the product grid, `r` outermost.
pub fn povzner_scan(r_grid: &[f64], n_grid: &[f64]) -> Result<Vec<ScanRow>> {
    if r_grid.is_empty() || n_grid.is_empty() {
        return Err(Error::invalid("grid", "r and n grids must be non-empty"));
    }
    let mut rows = Vec::with_capacity(r_grid.len() * n_grid.len());
    for &r in r_grid {
        let pc = PovznerConstants::new(r)?;
        for &n in n_grid {
            rows.push(ScanRow {
                r,
                n,
                c_inf: pc.evaluate(n)?,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::CollisionInput;
    use crate::Vec3;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn closed_form_values() {
        assert_eq!(povzner_renormalized(2.0, 0.5).unwrap(), 0.5);
        assert_relative_eq!(
            povzner_renormalized(3.0, 0.5).unwrap(),
            0.5625,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            povzner_renormalized(3.0, 0.9).unwrap(),
            2.9565,
            epsilon = 1e-12
        );
        assert_eq!(povzner_linf(3.0, 0.5, 0.0).unwrap(), 0.0);
        assert_relative_eq!(
            povzner_linf(3.0, 0.5, 1.0 / (4.0 * PI)).unwrap(),
            0.5625,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            povzner_linf(2.0, 0.5, 1.0).unwrap(),
            2.0 * PI,
            epsilon = 1e-14
        );
        assert!(povzner_renormalized(1.0, 0.5).is_err());
        assert!(povzner_renormalized(3.0, 1.0).is_err());
    }

    #[test]
    fn half_mass_fraction_specialization() {
        for n in [2.5, 3.0, 4.0, 7.5, 20.0, 100.0] {
            let special = 4.0 / (n + 1.0) - 0.5f64.powf(n) * (n + 2.0 / (n + 1.0));
            assert_relative_eq!(
                povzner_renormalized(n, 0.5).unwrap(),
                special,
                max_relative = 1e-13
            );
        }
        for n in [1.1, 1.5, 2.0] {
            assert_eq!(povzner_renormalized(n, 0.5).unwrap(), 2.0 * 0.5f64.powf(n));
        }
    }

    #[test]
    fn components_assemble() {
        let pc = PovznerConstants::new(0.3).unwrap();
        let c = pc.components(5.0);
        assert_relative_eq!(
            pc.evaluate(5.0).unwrap(),
            2.0 * c.c_tilde + c.c_bar - 0.5 * c.c_hat + c.c_check,
            epsilon = 1e-15
        );
        assert!(c.c_bar < 0.0 && c.c_hat > 0.0 && c.c_check > 0.0);
    }

    #[test]
    fn tail_decays_like_inverse_order() {
        // only the last term survives: n C -> 2 r_hi^2 / r_lo^3
        for r in [0.1, 0.3, 0.5] {
            let (lo, hi) = (r, 1.0f64 - r);
            let lim = 2.0 * hi * hi / lo.powi(3);
            let n = 1e6;
            assert_relative_eq!(
                n * povzner_renormalized(n, r).unwrap(),
                lim,
                max_relative = 1e-5
            );
        }
    }

    #[test]
    fn power_branch_underestimates_exact_average_at_n2() {
        // equal masses, exact sphere average of <v'>^4 + <v'_*>^4 for uniform sigma
        // is E^2/2 + 2 lambda^2/3, which exceeds the branch value E^2/2
        let s = SpeciesSet::new(vec![1.0, 1.0]).unwrap();
        let inp = CollisionInput::new(Vec3::new(2.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), 0, 1);
        let t = energy_identity(&inp, &s).unwrap();
        let exact = t.e * t.e / 2.0 + 2.0 * t.lambda * t.lambda / 3.0;
        let bound = povzner_renormalized(2.0, 0.5).unwrap() * t.e * t.e;
        assert!(exact > bound);
    }

    #[test]
    fn mc_reproduces_energy_at_k2_and_degenerate_case() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let s = SpeciesSet::new(vec![1.0, 3.0]).unwrap();
        let k = AngularKernel::normalized_constant();
        let inp = CollisionInput::new(Vec3::new(1.0, -2.0, 0.5), Vec3::new(0.3, 0.1, 0.0), 0, 1);
        let e = energy_identity(&inp, &s).unwrap().e;
        let (est, se) = angular_average_mc(2.0, &inp, &k, &s, 10_000, &mut rng).unwrap();
        assert!((est - e).abs() <= 3.0 * se + 1e-12 * e);

        let v = Vec3::new(0.7, 0.2, -1.0);
        let same = CollisionInput::new(v, v, 0, 1);
        let (est, se) = angular_average_mc(5.0, &same, &k, &s, 1000, &mut rng).unwrap();
        let exact = s.bracket(&v, 0).unwrap().powf(5.0) + s.bracket(&v, 1).unwrap().powf(5.0);
        assert_eq!(se, 0.0);
        assert_relative_eq!(est, exact, max_relative = 1e-14);
        assert!(angular_average_mc(2.0, &inp, &k, &s, 10, &mut rng).is_err());
    }

    #[test]
    fn mc_respects_bound_for_k6() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = SpeciesSet::new(vec![1.0, 3.0]).unwrap();
        let k = AngularKernel::normalized_constant();
        let bound = povzner_linf(3.0, 0.25, 1.0 / (4.0 * PI)).unwrap();
        for _ in 0..20 {
            let inp = CollisionInput::new(
                uniform_sphere(&mut rng) * 3.0,
                uniform_sphere(&mut rng),
                0,
                1,
            );
            let e = energy_identity(&inp, &s).unwrap().e;
            let (est, se) = angular_average_mc(6.0, &inp, &k, &s, 20_000, &mut rng).unwrap();
            assert!(est - 3.0 * se <= bound * e.powi(3));
        }
    }

    #[test]
    fn kstar_examples() {
        let k = AngularKernel::normalized_constant();
        let half = find_kstar_pair(0.5, &k, 0.5).unwrap();
        assert!(half.k <= 4.0);
        assert_eq!(half.horizon, 100.0 * half.k);
        assert!(find_kstar_pair(0.9, &k, 0.5).unwrap().k > 6.0);
        assert_eq!(find_kstar_pair(0.3, &k, 0.5), find_kstar_pair(0.7, &k, 0.5));
        assert!(matches!(
            find_kstar_pair(0.995, &k, 0.5),
            Err(Error::KStarNotFound { .. })
        ));
        assert!(find_kstar_pair(0.5, &k, 0.0).is_err());
    }

    #[test]
    fn tabulated_constant_matches_constant_kernel() {
        let c = 1.0 / (4.0 * PI);
        let tab = AngularKernel::tabulated(vec![-1.0, 0.0, 1.0], vec![c; 3]).unwrap();
        let cst = AngularKernel::constant(c).unwrap();
        for r in [0.5, 0.6, 0.75] {
            assert_eq!(
                find_kstar_pair(r, &tab, 0.5).unwrap().k,
                find_kstar_pair(r, &cst, 0.5).unwrap().k
            );
        }
    }

    #[test]
    fn kstar_global_assembly() {
        let k = AngularKernel::normalized_constant();
        let one = SpeciesSet::new(vec![2.0]).unwrap();
        let cs = CrossSection::uniform(1, 1.0, k.clone()).unwrap();
        let sum = kstar_global(&one, &cs, 0.5).unwrap();
        assert_eq!(sum.k_star, sum.k_bar.max(4.0));

        let eq = SpeciesSet::new(vec![1.0, 1.0]).unwrap();
        let cs = CrossSection::uniform(2, 1.0, k.clone()).unwrap();
        let sum = kstar_global(&eq, &cs, 0.5).unwrap();
        assert!(sum
            .k_star_pairs
            .iter()
            .flatten()
            .all(|x| *x == sum.k_star_pairs[0][0]));

        let s19 = SpeciesSet::new(vec![1.0, 9.0]).unwrap();
        let sum = kstar_global(&s19, &cs, 0.5).unwrap();
        assert_eq!(sum.k_bar, sum.k_star_pairs[0][1]);
        assert!(sum.k_star_pairs[0][1] > sum.k_star_pairs[0][0]);
        assert_eq!(sum.k_star, sum.k_bar);
    }

    #[test]
    fn scan_shapes() {
        let ns: Vec<f64> = (6..=100).map(|k| k as f64 * 0.5).collect();
        let rows = povzner_scan(&[0.5], &ns).unwrap();
        assert!(rows.windows(2).all(|w| w[1].c_inf < w[0].c_inf));

        let rs: Vec<f64> = (1..100).map(|k| k as f64 / 100.0).collect();
        let rows = povzner_scan(&rs, &[10.0]).unwrap();
        let below: Vec<usize> = (0..rows.len()).filter(|&k| rows[k].c_inf < 1.0).collect();
        assert!(!below.is_empty());
        assert_eq!(below.len(), below[below.len() - 1] - below[0] + 1);
        assert!(rows[below[0]].r < 0.5 && rows[*below.last().unwrap()].r > 0.5);
        assert!(povzner_scan(&[], &[3.0]).is_err());
    }

    proptest! {
        #[test]
        fn symmetric_in_mass_fraction(n in 1.01f64..60.0, r in 0.5f64..0.999) {
            prop_assert_eq!(povzner_renormalized(n, r).unwrap(), povzner_renormalized(n, 1.0 - r).unwrap());
        }

        #[test]
        fn positive(n in 1.01f64..400.0, r in 0.01f64..0.99) {
            prop_assert!(povzner_renormalized(n, r).unwrap() > 0.0);
        }
    }
}
