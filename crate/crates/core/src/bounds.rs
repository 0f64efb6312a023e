//! Explicit constants of the moment differential inequality
//! `m_k' <= -A_k m_k^(1 + gamma_bar/k) + B_k m_k` and the envelopes that follow from it.
//!
//! Envelope values overflow `f64` quickly once `c_lb` is small, so every
//! envelope also has a natural-log variant.

use serde::{Deserialize, Serialize};

use crate::mixture::{CrossSection, SpeciesSet};
use crate::moments::{generalized_binomial, ParticleEnsemble};
use crate::povzner::{povzner_linf, KStarSummary};
use crate::{Error, Result, Vec3};

/// Characterization constants of the invariant set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaConstants {
    pub c0: f64,
    #[serde(rename = "C0")]
    pub big_c0: f64,
    pub c2: f64,
    #[serde(rename = "C2")]
    pub big_c2: f64,
    #[serde(rename = "C2eps")]
    pub c2eps: f64,
    pub eps: f64,
    #[serde(rename = "C_kstar")]
    pub c_kstar: f64,
}

impl OmegaConstants {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.c0,
            self.big_c0,
            self.c2,
            self.big_c2,
            self.c2eps,
            self.eps,
            self.c_kstar,
        ];
        if all.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::invalid(
                "omega_constants",
                "every constant must be positive and finite",
            ));
        }
        if self.c0 > self.big_c0 || self.c2 > self.big_c2 {
            return Err(Error::invalid(
                "omega_constants",
                "need c0 <= C0 and c2 <= C2",
            ));
        }
        if !(self.big_c0 < self.c2) {
            return Err(Error::invalid("omega_constants", "need C0 < c2"));
        }
        Ok(())
    }
}

/// Mass-weighted bounds `c <= sum m_i int f_i <= C`, `c <= sum m_i int f_i |v|^2 <= C`,
/// `sum m_i int f_i |v|^(2+eps) <= B` feeding the collision-frequency lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBoundHypotheses {
    pub c: f64,
    #[serde(rename = "C")]
    pub big_c: f64,
    #[serde(rename = "B")]
    pub big_b: f64,
    pub eps: f64,
}

impl LowerBoundHypotheses {
    /// Translate bracket-moment bounds into mass-weighted ones using
    /// `m_i |v|^2 = sum m (<v>_i^2 - 1)`.
    pub fn from_omega(species: &SpeciesSet, omega: &OmegaConstants) -> Result<Self> {
        omega.validate()?;
        let total = species.total_mass();
        let (m_lo, m_hi) = (species.min_mass(), species.max_mass());
        let c = (m_lo * omega.c0).min(total * (omega.c2 - omega.big_c0));
        let big_c = (m_hi * omega.big_c0).max(total * (omega.big_c2 - omega.c0));
        let big_b = total.powf(1.0 + omega.eps / 2.0) * m_lo.powf(-omega.eps / 2.0) * omega.c2eps;
        Ok(Self {
            c,
            big_c,
            big_b,
            eps: omega.eps,
        })
    }
}

/// `min_ij min{1, 2^(1 - gamma_ij)}`.
pub fn c_tilde(cross_section: &CrossSection) -> f64 {
    cross_section
        .gamma_matrix()
        .iter()
        .flatten()
        .map(|g| 2f64.powf(1.0 - g).min(1.0))
        .fold(f64::MAX, f64::min)
}

/// Closed-form constant of the collision-frequency lower bound.
pub fn compute_clb(
    species: &SpeciesSet,
    cross_section: &CrossSection,
    c: f64,
    big_c: f64,
    big_b: f64,
    eps: f64,
) -> Result<f64> {
    if !(c > 0.0 && c <= big_c) {
        return Err(Error::invalid(
            "c, C",
            format!("need 0 < c <= C, got c={c} C={big_c}"),
        ));
    }
    if !(big_b > 0.0 && eps > 0.0) {
        return Err(Error::invalid("B, eps", "must be positive"));
    }
    let ct = c_tilde(cross_section);
    let gb = cross_section.gamma_bar();
    let g_min = cross_section.gamma_min();
    let ratio = 2.0 * big_c / (ct * c);
    let inner = 2f64.powf(2.0 + eps)
        * (big_c.max(big_b) / c)
        * (1.0 + ratio.powf(2.0 / gb)).powf((2.0 + eps) / 2.0);
    let tail = (1.0 + species.max_mass() / species.total_mass() * ratio * ratio).powf(-gb / 2.0);
    Ok(c / 2.0 * ct * inner.powf((g_min - 2.0) / eps) * tail)
}

pub fn compute_clb_from(
    species: &SpeciesSet,
    cross_section: &CrossSection,
    h: &LowerBoundHypotheses,
) -> Result<f64> {
    compute_clb(species, cross_section, h.c, h.big_c, h.big_b, h.eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// The zero-momentum hypothesis failed; `holds` is not meaningful.
    pub skipped: bool,
}

/// Compare `sum_i m_i int f_i(w) |v - w|^gamma_ij dw` with `c_lb <v>_j^gamma_bar`.
pub fn lower_bound_check(
    ensemble: &ParticleEnsemble,
    v: &Vec3,
    j: usize,
    c_lb: f64,
    cross_section: &CrossSection,
) -> Result<LowerBoundCheck> {
    let species = ensemble.species();
    let rhs = c_lb * species.bracket(v, j)?.powf(cross_section.gamma_bar());
    let skipped = ensemble.momentum().norm() > 5.0 * ensemble.momentum_stderr();
    let w = ensemble.weight();
    let (mut sum, mut sum_sq, mut n) = (0.0, 0.0, 0usize);
    for i in 0..species.len() {
        let g = cross_section.gamma(i, j);
        let m = species.masses()[i];
        for x in ensemble.velocities(i) {
            let t = m * (v - x).norm().powf(g);
            sum += t;
            sum_sq += t * t;
            n += 1;
        }
    }
    let lhs = w * sum;
    // standard error of the discrete sum
    let se = if n > 1 {
        let mean = sum / n as f64;
        w * ((sum_sq - n as f64 * mean * mean).max(0.0) * n as f64 / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(LowerBoundCheck {
        lhs,
        rhs,
        holds: !skipped && lhs >= rhs - 3.0 * se,
        skipped,
    })
}

/// Pointwise upper bounds on `|v - v_*|^gamma_ij`: returns
/// `(lhs, sum form, product form)`, each form to be `>= lhs`.
pub fn relative_speed_upper_bounds(
    v: &Vec3,
    v_star: &Vec3,
    i: usize,
    j: usize,
    species: &SpeciesSet,
    cross_section: &CrossSection,
) -> Result<(f64, f64, f64)> {
    let g = cross_section.gamma(i, j);
    let factor = (species.total_mass() / (species.mass(i)? * species.mass(j)?).sqrt()).powf(g);
    let a = species.bracket(v, i)?.powf(g);
    let b = species.bracket(v_star, j)?.powf(g);
    Ok((
        (v - v_star).norm().powf(g),
        factor * (a + b),
        factor * a * b,
    ))
}

/// Constants of the moment inequality at order `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdiConstants {
    pub k: f64,
    pub a_k: f64,
    pub b_k: f64,
    pub c_lb: f64,
    pub gamma_bar: f64,
}

impl OdiConstants {
    /// `c = gamma_bar / k` in the Bernoulli comparison `y' = -A y^(1+c) + B y`.
    pub fn exponent(&self) -> f64 {
        self.gamma_bar / self.k
    }
}

/// Smallest Povzner margin `min_ij (||b_ij|| - C^ij_{k/2})`.
fn povzner_margin(k: f64, species: &SpeciesSet, cross_section: &CrossSection) -> Result<f64> {
    let mut margin = f64::MAX;
    for i in 0..species.len() {
        for j in 0..species.len() {
            let kernel = cross_section.kernel(i, j);
            let c = povzner_linf(k / 2.0, species.mass_fraction(i, j)?, kernel.sup_norm())?;
            margin = margin.min(kernel.l1_norm() - c);
        }
    }
    Ok(margin)
}

fn check_sizes(species: &SpeciesSet, cross_section: &CrossSection) -> Result<()> {
    if species.len() != cross_section.len() {
        return Err(Error::invalid(
            "cross_section",
            "size does not match the species set",
        ));
    }
    Ok(())
}

pub fn compute_ak_bk(
    k: f64,
    kstar: &KStarSummary,
    omega: &OmegaConstants,
    c_lb: f64,
    species: &SpeciesSet,
    cross_section: &CrossSection,
) -> Result<OdiConstants> {
    check_sizes(species, cross_section)?;
    if !(k >= kstar.k_star) {
        return Err(Error::BelowKStar {
            k,
            k_star: kstar.k_star,
        });
    }
    if !(c_lb > 0.0) {
        return Err(Error::invalid("c_lb", format!("{c_lb} must be positive")));
    }
    let gb = cross_section.gamma_bar();
    let margin = povzner_margin(k, species, cross_section)?;
    if !(margin > 0.0) {
        return Err(Error::invalid(
            "k",
            format!("Povzner margin {margin} is not positive at k = {k}"),
        ));
    }
    let n = species.len() as f64;
    let a_k = margin * c_lb / species.max_mass() * (n * omega.big_c0).powf(-gb / k);

    let total = species.total_mass();
    let mut worst: f64 = 0.0;
    for i in 0..species.len() {
        for j in 0..species.len() {
            let mi = species.masses()[i];
            let mj = species.masses()[j];
            let c = povzner_linf(
                k / 2.0,
                species.mass_fraction(i, j)?,
                cross_section.kernel(i, j).sup_norm(),
            )?;
            worst = worst.max((total / (mi * mj).sqrt()).powf(cross_section.gamma(i, j)) * c);
        }
    }
    let l_max = ((k + 1.0) / 2.0).floor() as u32;
    let binom: f64 = (1..=l_max).map(|l| generalized_binomial(k, l)).sum();
    Ok(OdiConstants {
        k,
        a_k,
        b_k: 2.0 * omega.big_c2 * worst * binom,
        c_lb,
        gamma_bar: gb,
    })
}

/// The exponential-moment variant `(K1, K2)`: no `(I C0)` factor in the
/// coercive constant, and `K2 = max (sum m / sqrt(m_i m_j))^gamma_ij / 2`.
pub fn compute_k1_k2(
    k: f64,
    kstar: &KStarSummary,
    c_lb: f64,
    species: &SpeciesSet,
    cross_section: &CrossSection,
) -> Result<(f64, f64)> {
    check_sizes(species, cross_section)?;
    if !(k >= kstar.k_star) {
        return Err(Error::BelowKStar {
            k,
            k_star: kstar.k_star,
        });
    }
    let k1 = povzner_margin(k, species, cross_section)? * c_lb / species.max_mass();
    let total = species.total_mass();
    let mut k2: f64 = 0.0;
    for i in 0..species.len() {
        for j in 0..species.len() {
            let f = total / (species.masses()[i] * species.masses()[j]).sqrt();
            k2 = k2.max(f.powf(cross_section.gamma(i, j)));
        }
    }
    Ok((k1, 0.5 * k2))
}

/// Solution of `y' = -a y^(1+c) + b y`, `y(0) = y0`.
pub fn bernoulli_solution(a: f64, b: f64, c: f64, y0: f64, t: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && c > 0.0 && y0 > 0.0 && t >= 0.0) {
        return Err(Error::invalid(
            "a, b, c, y0, t",
            "need a, b, c, y0 > 0 and t >= 0",
        ));
    }
    if t == 0.0 {
        return Ok(y0);
    }
    let x = -c * b * t;
    let decay = x.exp();
    let grow = -x.exp_m1();
    Ok((a / b * grow + y0.powf(-c) * decay).powf(-1.0 / c))
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("t", format!("{t} must be positive")))
    }
}

/// `ln E = -(k / gamma_bar) ln(A_k / B_k)`, the equilibrium level of the comparison ODE.
pub fn ln_equilibrium_level(consts: &OdiConstants) -> f64 {
    -(consts.a_k / consts.b_k).ln() / consts.exponent()
}

pub fn ln_generation_envelope(k: f64, consts: &OdiConstants, t: f64) -> Result<f64> {
    check_time(t)?;
    check_order(k, consts)?;
    let c = consts.exponent();
    Ok(ln_equilibrium_level(consts) - (-(-c * consts.b_k * t).exp_m1()).ln() / c)
}

/// `(A_k/B_k)^(-k/gamma_bar) (1 - exp(-gamma_bar B_k t / k))^(-k/gamma_bar)`.
pub fn generation_envelope(k: f64, consts: &OdiConstants, t: f64) -> Result<f64> {
    Ok(ln_generation_envelope(k, consts, t)?.exp())
}

/// `ln` of the constant in the split form `B max{1, t^(-k/gamma_bar)}`.
pub fn ln_generation_power_constant(consts: &OdiConstants) -> f64 {
    let c = consts.exponent();
    let cb = c * consts.b_k;
    // 1 - e^{-x} >= x e^{-x/2} handles t <= 1, monotonicity handles t >= 1
    let small_t = -cb.ln() / c + consts.b_k / 2.0;
    let large_t = -(-(-cb).exp_m1()).ln() / c;
    ln_equilibrium_level(consts) + small_t.max(large_t)
}

pub fn ln_generation_envelope_power(k: f64, consts: &OdiConstants, t: f64) -> Result<f64> {
    check_time(t)?;
    check_order(k, consts)?;
    Ok(ln_generation_power_constant(consts) + (-t.ln() / consts.exponent()).max(0.0))
}

pub fn generation_envelope_power(k: f64, consts: &OdiConstants, t: f64) -> Result<f64> {
    Ok(ln_generation_envelope_power(k, consts, t)?.exp())
}

fn check_order(k: f64, consts: &OdiConstants) -> Result<()> {
    if k == consts.k {
        Ok(())
    } else {
        Err(Error::invalid(
            "k",
            format!("constants were assembled for k = {}, not {k}", consts.k),
        ))
    }
}

/// `max{(A_k/B_k)^(-k/gamma_bar), m_k(0)}`.
pub fn propagation_envelope(consts: &OdiConstants, mk0: f64) -> Result<f64> {
    if !(mk0 >= 0.0) {
        return Err(Error::invalid("mk0", format!("{mk0} is negative")));
    }
    Ok(ln_equilibrium_level(consts).exp().max(mk0))
}

pub fn ln_propagation_envelope(consts: &OdiConstants, mk0: f64) -> Result<f64> {
    if !(mk0 >= 0.0) {
        return Err(Error::invalid("mk0", format!("{mk0} is negative")));
    }
    Ok(ln_equilibrium_level(consts).max(mk0.ln()))
}

/// `x* + max L` for `L(x) = -A x^(1+c) + B x`, `c = gamma_bar / k*`, with `x*` the positive root.
pub fn omega_cap_constant(a: f64, b: f64, gamma_bar: f64, k_star: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && gamma_bar > 0.0 && k_star > 0.0) {
        return Err(Error::invalid(
            "A, B, gamma_bar, k_star",
            "must all be positive",
        ));
    }
    let c = gamma_bar / k_star;
    let x_root = (b / a).powf(1.0 / c);
    let x_max = (b / (a * (1.0 + c))).powf(1.0 / c);
    Ok(x_root + ode_map(a, b, c, x_max))
}

/// `L(x) = -A x^(1+c) + B x`.
pub fn ode_map(a: f64, b: f64, c: f64, x: f64) -> f64 {
    -a * x.powf(1.0 + c) + b * x
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmegaCondition {
    pub name: &'static str,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmegaReport {
    pub conditions: Vec<OmegaCondition>,
}

impl OmegaReport {
    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }

    pub fn condition(&self, name: &str) -> Option<&OmegaCondition> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

fn condition(
    name: &'static str,
    value: f64,
    lower: Option<f64>,
    upper: Option<f64>,
) -> OmegaCondition {
    let pass = lower.is_none_or(|l| value >= l) && upper.is_none_or(|u| value <= u);
    OmegaCondition {
        name,
        value,
        lower,
        upper,
        pass,
    }
}

/// Measure each defining condition of the invariant set on an ensemble.
/// The momentum condition allows five standard errors of the momentum estimator.
pub fn check_omega(
    ensemble: &ParticleEnsemble,
    omega: &OmegaConstants,
    k_star: f64,
) -> Result<OmegaReport> {
    let m0 = ensemble.poly_moment(0.0)?;
    let m2 = ensemble.poly_moment(2.0)?;
    let m2e = ensemble.poly_moment(2.0 + omega.eps)?;
    let mks = ensemble.poly_moment(k_star)?;
    let p = ensemble.momentum().norm();
    let tol = 5.0 * ensemble.momentum_stderr();
    Ok(OmegaReport {
        conditions: vec![
            condition("m0", m0, Some(omega.c0), Some(omega.big_c0)),
            condition("m2", m2, Some(omega.c2), Some(omega.big_c2)),
            condition("m2_eps", m2e, None, Some(omega.c2eps)),
            condition("m_kstar", mks, None, Some(omega.c_kstar)),
            condition("momentum", p, None, Some(tol)),
        ],
    })
}

/// Tightest constants of the invariant set that a set of measured moments
/// satisfies, widened by `slack` (e.g. `0.05` for 5%).
pub fn omega_from_measurements(
    m0: (f64, f64),
    m2: (f64, f64),
    m2eps_max: f64,
    eps: f64,
    mkstar_max: f64,
    slack: f64,
) -> OmegaConstants {
    OmegaConstants {
        c0: m0.0 * (1.0 - slack),
        big_c0: m0.1 * (1.0 + slack),
        c2: m2.0 * (1.0 - slack),
        big_c2: m2.1 * (1.0 + slack),
        c2eps: m2eps_max * (1.0 + slack),
        eps,
        c_kstar: mkstar_max * (1.0 + slack),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::AngularKernel;
    use crate::povzner::kstar_global;
    use crate::stats::normal_vec3;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mix() -> (SpeciesSet, CrossSection) {
        let s = SpeciesSet::new(vec![1.0, 1.2]).unwrap();
        let cs = CrossSection::uniform(2, 1.0, AngularKernel::normalized_constant()).unwrap();
        (s, cs)
    }

    fn omega() -> OmegaConstants {
        OmegaConstants {
            c0: 0.9,
            big_c0: 1.1,
            c2: 2.0,
            big_c2: 3.0,
            c2eps: 5.0,
            eps: 1.0,
            c_kstar: 20.0,
        }
    }

    fn gaussian(seed: u64, n: usize) -> ParticleEnsemble {
        let (s, _) = mix();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vs: Vec<Vec<Vec3>> = s
            .masses()
            .iter()
            .map(|m| {
                let sd = (1.0 / m).sqrt();
                (0..n).map(|_| normal_vec3(&mut rng, sd)).collect()
            })
            .collect();
        let p: Vec3 = vs[0].iter().sum::<Vec3>() * 1.0 + vs[1].iter().sum::<Vec3>() * 1.2;
        let shift = p / (2.2 * n as f64);
        vs.iter_mut().flatten().for_each(|v| *v -= shift);
        ParticleEnsemble::new(s, vs, 0.5 / n as f64).unwrap()
    }

    #[test]
    fn clb_golden_and_shape() {
        let s = SpeciesSet::new(vec![1.0]).unwrap();
        let cs = CrossSection::uniform(1, 1.0, AngularKernel::normalized_constant()).unwrap();
        assert_eq!(c_tilde(&cs), 1.0);
        // c = C = B = 1, eps = 1: (1/2) (8 * 5^{3/2})^{-1} / sqrt(5)
        let golden = 0.5 / (8.0 * 5f64.powf(1.5)) / 5f64.sqrt();
        assert_relative_eq!(
            compute_clb(&s, &cs, 1.0, 1.0, 1.0, 1.0).unwrap(),
            golden,
            max_relative = 1e-14
        );
        assert_relative_eq!(golden, 0.0025, max_relative = 1e-12);
        let mut prev = f64::MAX;
        for k in 0..=90 {
            let big_c = 1.0 + k as f64 * 0.1;
            let v = compute_clb(&s, &cs, 1.0, big_c, 1.0, 1.0).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert!(compute_clb(&s, &cs, 2.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn c_tilde_uses_softer_exponents() {
        let k = AngularKernel::normalized_constant();
        let cs =
            CrossSection::new(vec![vec![0.5, 1.0], vec![1.0, 1.0]], vec![vec![k; 2]; 2]).unwrap();
        assert_eq!(c_tilde(&cs), 1.0);
    }

    #[test]
    fn ak_bk_properties() {
        let (s, cs) = mix();
        let ks = kstar_global(&s, &cs, 0.5).unwrap();
        assert_eq!(ks.k_star, 4.0);
        let om = omega();
        let c_lb = 1e-3;
        for k in [4.0, 4.5, 6.0, 10.0, 40.0] {
            let c = compute_ak_bk(k, &ks, &om, c_lb, &s, &cs).unwrap();
            assert!(c.a_k > 0.0 && c.b_k > 0.0);
        }
        assert!(matches!(
            compute_ak_bk(3.5, &ks, &om, c_lb, &s, &cs),
            Err(Error::BelowKStar { .. })
        ));
        let base = compute_ak_bk(6.0, &ks, &om, c_lb, &s, &cs).unwrap();
        let doubled = compute_ak_bk(
            6.0,
            &ks,
            &OmegaConstants { big_c2: 6.0, ..om },
            c_lb,
            &s,
            &cs,
        )
        .unwrap();
        assert_eq!(doubled.b_k, 2.0 * base.b_k);
        assert_eq!(doubled.a_k, base.a_k);

        let (k1, k2) = compute_k1_k2(6.0, &ks, c_lb, &s, &cs).unwrap();
        assert_relative_eq!(
            k1 * (2.0 * om.big_c0).powf(-1.0 / 6.0),
            base.a_k,
            max_relative = 1e-14
        );
        assert_relative_eq!(k2, 0.5 * 2.2 / 1.0, max_relative = 1e-14);
    }

    #[test]
    fn bernoulli_examples() {
        assert_eq!(bernoulli_solution(1.0, 2.0, 0.5, 3.7, 0.0).unwrap(), 3.7);
        let (a, b, c): (f64, f64, f64) = (2.0, 0.5, 0.25);
        let lim = (a / b).powf(-1.0 / c);
        let y = bernoulli_solution(a, b, c, 10.0, 1e6 / (c * b)).unwrap();
        assert_relative_eq!(y, lim, max_relative = 1e-9);
        assert!(bernoulli_solution(0.0, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn bernoulli_satisfies_ode() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let (a, b, c, y0) = (
                rng.random_range(0.1..2.0),
                rng.random_range(0.1..2.0),
                rng.random_range(0.1..1.0),
                rng.random_range(0.1..5.0),
            );
            let h = 1e-5;
            for n in 1..40 {
                let t = n as f64 * 0.25;
                let y = |t| bernoulli_solution(a, b, c, y0, t).unwrap();
                let d = (y(t + h) - y(t - h)) / (2.0 * h);
                let res = d + a * y(t).powf(1.0 + c) - b * y(t);
                assert!(res.abs() < 1e-7 * (1.0 + y(t)), "residual {res}");
            }
        }
    }

    fn sample_consts() -> OdiConstants {
        OdiConstants {
            k: 6.0,
            a_k: 0.3,
            b_k: 1.7,
            c_lb: 1.0,
            gamma_bar: 1.0,
        }
    }

    #[test]
    fn generation_envelope_shape() {
        let c = sample_consts();
        let level = (c.a_k / c.b_k).powf(-c.k / c.gamma_bar);
        assert_relative_eq!(
            generation_envelope(6.0, &c, 1e4).unwrap(),
            level,
            max_relative = 1e-12
        );
        let mut prev = f64::MAX;
        for n in 1..200 {
            let t = n as f64 * 0.05;
            let g = generation_envelope(6.0, &c, t).unwrap();
            assert!(g < prev);
            prev = g;
            // dropping the initial datum only enlarges the bound
            let y = bernoulli_solution(c.a_k, c.b_k, c.exponent(), 1e12, t).unwrap();
            assert!(g >= y * (1.0 - 1e-12));
            let p = generation_envelope_power(6.0, &c, t).unwrap();
            assert!(p >= g * (1.0 - 1e-12), "t = {t}: {p} < {g}");
        }
        assert!(generation_envelope(6.0, &c, 0.0).is_err());
        assert!(generation_envelope(8.0, &c, 1.0).is_err());
    }

    #[test]
    fn propagation_envelope_examples() {
        let c = sample_consts();
        let level = (c.a_k / c.b_k).powf(-c.k / c.gamma_bar);
        assert_relative_eq!(
            propagation_envelope(&c, 0.0).unwrap(),
            level,
            max_relative = 1e-12
        );
        assert_eq!(propagation_envelope(&c, 1e30).unwrap(), 1e30 * (1.0 + 0.0));
        for y0 in [1.0, level / 2.0, level * 3.0] {
            let env = propagation_envelope(&c, y0).unwrap();
            for n in 0..100 {
                let y = bernoulli_solution(c.a_k, c.b_k, c.exponent(), y0, n as f64 * 0.1).unwrap();
                assert!(y <= env * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn omega_cap_examples() {
        assert_relative_eq!(
            omega_cap_constant(1.0, 1.0, 1.0, 1.0).unwrap(),
            1.25,
            epsilon = 1e-15
        );
        let (a, b, g, k): (f64, f64, f64, f64) = (0.7, 2.3, 1.0, 4.5);
        let c = g / k;
        let x_root = (b / a).powf(1.0 / c);
        assert!(ode_map(a, b, c, x_root).abs() < 1e-12 * b * x_root);
        let x_max = (b / (a * (1.0 + c))).powf(1.0 / c);
        let top = ode_map(a, b, c, x_max);
        for n in 0..=1000 {
            assert!(ode_map(a, b, c, x_root * n as f64 / 1000.0) <= top * (1.0 + 1e-12));
        }
        assert!(omega_cap_constant(a, b, g, k).unwrap() >= x_root);
    }

    #[test]
    fn omega_membership() {
        let e = gaussian(1, 20_000);
        let m0 = e.poly_moment(0.0).unwrap();
        let m2 = e.poly_moment(2.0).unwrap();
        let om = OmegaConstants {
            c0: 0.9 * m0,
            big_c0: 1.1 * m0,
            c2: 0.9 * m2,
            big_c2: 1.1 * m2,
            c2eps: 1.1 * e.poly_moment(3.0).unwrap(),
            eps: 1.0,
            c_kstar: 1.1 * e.poly_moment(4.0).unwrap(),
        };
        om.validate().unwrap();
        assert!(check_omega(&e, &om, 4.0).unwrap().all_pass());

        let (s, _) = mix();
        let drifted: Vec<Vec<Vec3>> = (0..2)
            .map(|i| e.velocities(i).iter().map(|v| v + Vec3::x()).collect())
            .collect();
        let d = ParticleEnsemble::new(s.clone(), drifted, e.weight()).unwrap();
        let rep = check_omega(&d, &om, 4.0).unwrap();
        assert!(!rep.condition("momentum").unwrap().pass);

        let empty = ParticleEnsemble::new(s, vec![vec![], vec![]], 1.0).unwrap();
        assert!(
            !check_omega(&empty, &om, 4.0)
                .unwrap()
                .condition("m0")
                .unwrap()
                .pass
        );
    }

    #[test]
    fn lower_bound_holds_on_gaussian() {
        let e = gaussian(2, 5000);
        let (s, cs) = mix();
        let m0 = e.poly_moment(0.0).unwrap();
        let m2 = e.poly_moment(2.0).unwrap();
        let om = omega_from_measurements(
            (m0, m0),
            (m2, m2),
            e.poly_moment(3.0).unwrap(),
            1.0,
            1.0,
            0.05,
        );
        let h = LowerBoundHypotheses::from_omega(&s, &om).unwrap();
        let c_lb = compute_clb_from(&s, &cs, &h).unwrap();
        let c = lower_bound_check(&e, &Vec3::zeros(), 0, c_lb, &cs).unwrap();
        assert_eq!(c.rhs, c_lb);
        assert!(c.holds);
        for speed in [1.0, 10.0, 100.0] {
            let c = lower_bound_check(&e, &Vec3::new(0.0, speed, 0.0), 1, c_lb, &cs).unwrap();
            assert!(c.holds && !c.skipped);
        }
        let drifted: Vec<Vec<Vec3>> = (0..2)
            .map(|i| e.velocities(i).iter().map(|v| v + Vec3::x()).collect())
            .collect();
        let d = ParticleEnsemble::new(s, drifted, e.weight()).unwrap();
        let c = lower_bound_check(&d, &Vec3::zeros(), 0, c_lb, &cs).unwrap();
        assert!(c.skipped && !c.holds);
    }

    #[test]
    fn lower_bound_hypotheses_hold_on_ensemble() {
        let e = gaussian(3, 5000);
        let s = e.species().clone();
        let m0 = e.poly_moment(0.0).unwrap();
        let m2 = e.poly_moment(2.0).unwrap();
        let om = omega_from_measurements(
            (m0, m0),
            (m2, m2),
            e.poly_moment(3.0).unwrap(),
            1.0,
            1.0,
            0.01,
        );
        let h = LowerBoundHypotheses::from_omega(&s, &om).unwrap();
        let w = e.weight();
        let mut mass = 0.0;
        let mut energy = 0.0;
        let mut third = 0.0;
        for i in 0..2 {
            let m = s.masses()[i];
            for v in e.velocities(i) {
                mass += w * m;
                energy += w * m * v.norm_squared();
                third += w * m * v.norm().powi(3);
            }
        }
        assert!(h.c <= mass && mass <= h.big_c);
        assert!(h.c <= energy && energy <= h.big_c);
        assert!(third <= h.big_b);
    }

    #[test]
    fn relative_speed_bounds_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10_000 {
            let s = SpeciesSet::new(vec![
                rng.random_range(0.1..10.0),
                rng.random_range(0.1..10.0),
            ])
            .unwrap();
            let g = rng.random_range(0.05..1.0);
            let cs = CrossSection::uniform(2, g, AngularKernel::normalized_constant()).unwrap();
            let v = normal_vec3(&mut rng, 5.0);
            let w = normal_vec3(&mut rng, 1.0);
            let (lhs, sum, prod) = relative_speed_upper_bounds(&v, &w, 0, 1, &s, &cs).unwrap();
            assert!(lhs <= sum && lhs <= prod);
        }
    }
}
