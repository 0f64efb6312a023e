//! Binary elastic collisions between species of unequal mass.

use std::f64::consts::PI;

use rand::Rng;

use crate::mixture::{AngularKernel, SpeciesSet};
use crate::{Error, Result, Vec3};

const SIGMA_UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionInput {
    pub v: Vec3,
    pub v_star: Vec3,
    pub i: usize,
    pub j: usize,
}

impl CollisionInput {
    pub fn new(v: Vec3, v_star: Vec3, i: usize, j: usize) -> Self {
        Self { v, v_star, i, j }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionOutput {
    pub v_prime: Vec3,
    pub v_star_prime: Vec3,
}

/// Decomposition of the pre-collision bracket energy `E` used by the
/// angular-averaging estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyIdentityTerms {
    pub e: f64,
    pub p: f64,
    pub q: f64,
    pub lambda: f64,
    pub s: f64,
    pub r: f64,
    pub v_cm: Vec3,
    pub u: Vec3,
    /// Unit vector along `v_cm`, zero when `v_cm = 0` (then `lambda = 0`).
    pub v_cm_hat: Vec3,
}

impl EnergyIdentityTerms {
    /// Post-collision squared brackets `(p + lambda sigma.V_hat, q - lambda sigma.V_hat)`.
    pub fn recompose(&self, sigma: &Vec3) -> (f64, f64) {
        let t = self.lambda * sigma.dot(&self.v_cm_hat);
        (self.p + t, self.q - t)
    }

    pub fn r_lo(&self) -> f64 {
        self.r.min(1.0 - self.r)
    }

    pub fn r_hi(&self) -> f64 {
        self.r.max(1.0 - self.r)
    }
}

pub fn center_and_relative(input: &CollisionInput, species: &SpeciesSet) -> Result<(Vec3, Vec3)> {
    let mi = species.mass(input.i)?;
    let mj = species.mass(input.j)?;
    Ok(cm_rel(&input.v, &input.v_star, mi, mj))
}

#[inline]
fn cm_rel(v: &Vec3, vs: &Vec3, mi: f64, mj: f64) -> (Vec3, Vec3) {
    ((v * mi + vs * mj) / (mi + mj), v - vs)
}

/// Post-collision velocities for scattering direction `sigma`.
///
/// When `v = v_star` both outputs equal the common velocity whatever `sigma` is.
pub fn collide(
    input: &CollisionInput,
    sigma: &Vec3,
    species: &SpeciesSet,
) -> Result<CollisionOutput> {
    let norm = sigma.norm();
    if !((norm - 1.0).abs() <= SIGMA_UNIT_TOL) {
        return Err(Error::NonUnitSigma { norm });
    }
    let mi = species.mass(input.i)?;
    let mj = species.mass(input.j)?;
    let (v_prime, v_star_prime) = collide_raw(&input.v, &input.v_star, mi, mj, sigma);
    Ok(CollisionOutput {
        v_prime,
        v_star_prime,
    })
}

/// Unchecked kernel of [`collide`] used by the particle simulator.
#[inline]
pub(crate) fn collide_raw(v: &Vec3, vs: &Vec3, mi: f64, mj: f64, sigma: &Vec3) -> (Vec3, Vec3) {
    let (vcm, u) = cm_rel(v, vs, mi, mj);
    let g = u.norm();
    let r = mi / (mi + mj);
    let dir = sigma * g;
    (vcm + dir * (1.0 - r), vcm - dir * r)
}

pub fn energy_identity(
    input: &CollisionInput,
    species: &SpeciesSet,
) -> Result<EnergyIdentityTerms> {
    let mi = species.mass(input.i)?;
    let mj = species.mass(input.j)?;
    let total = species.total_mass();
    let (v_cm, u) = cm_rel(&input.v, &input.v_star, mi, mj);
    let r = mi / (mi + mj);
    let e = species.bracket_sq_unchecked(&input.v, input.i)
        + species.bracket_sq_unchecked(&input.v_star, input.j);
    // sE - 1 and (1-s)E - 1, formed directly to avoid cancellation
    let se_m1 = mi * mj / ((mi + mj) * total) * u.norm_squared();
    let ose_m1 = (mi + mj) / total * v_cm.norm_squared();
    let se = 1.0 + se_m1;
    let ose = 1.0 + ose_m1;
    let p = r * ose + (1.0 - r) * se;
    let q = e - p;
    let lambda = 2.0 * (r * (1.0 - r) * se_m1 * ose_m1).sqrt();
    let vn = v_cm.norm();
    let v_cm_hat = if vn > 0.0 { v_cm / vn } else { Vec3::zeros() };
    Ok(EnergyIdentityTerms {
        e,
        p,
        q,
        lambda,
        s: se / e,
        r,
        v_cm,
        u,
        v_cm_hat,
    })
}

/// Absolute momentum and kinetic-energy defects of a proposed collision.
pub fn conservation_residuals(
    input: &CollisionInput,
    output: &CollisionOutput,
    species: &SpeciesSet,
) -> Result<(f64, f64)> {
    let mi = species.mass(input.i)?;
    let mj = species.mass(input.j)?;
    let dp = (output.v_prime * mi + output.v_star_prime * mj) - (input.v * mi + input.v_star * mj);
    let de = mi * output.v_prime.norm_squared() + mj * output.v_star_prime.norm_squared()
        - mi * input.v.norm_squared()
        - mj * input.v_star.norm_squared();
    Ok((dp.norm(), de.abs()))
}

/// Uniform direction on the unit sphere.
pub fn uniform_sphere<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi = 2.0 * PI * rng.random::<f64>();
    let rho = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(rho * phi.cos(), rho * phi.sin(), z)
}

/// Orthonormal pair spanning the plane perpendicular to the unit vector `n`.
fn perpendicular_frame(n: &Vec3) -> (Vec3, Vec3) {
    let helper = if n.x.abs() < 0.9 {
        Vec3::x()
    } else {
        Vec3::y()
    };
    let e1 = n.cross(&helper).normalize();
    let e2 = n.cross(&e1);
    (e1, e2)
}

/// Draw `sigma` with density `b(sigma . u_hat) / ||b||_L1` on the sphere.
///
/// A zero `u_hat` (coincident velocities) yields a uniform direction.
pub fn sample_sigma<R: Rng + ?Sized>(
    rng: &mut R,
    u_hat: &Vec3,
    kernel: &AngularKernel,
) -> Result<Vec3> {
    if kernel.l1_norm() <= 0.0 {
        return Err(Error::DegenerateKernel);
    }
    if u_hat.norm_squared() == 0.0 || kernel.is_constant() {
        return Ok(uniform_sphere(rng));
    }
    let tau = kernel.tau_quantile(rng.random::<f64>())?;
    let phi = 2.0 * PI * rng.random::<f64>();
    let (e1, e2) = perpendicular_frame(u_hat);
    let rho = (1.0 - tau * tau).max(0.0).sqrt();
    let s = u_hat * tau + (e1 * phi.cos() + e2 * phi.sin()) * rho;
    Ok(s.normalize())
}
