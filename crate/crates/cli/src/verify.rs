//! Randomized self-checks of the collision law and the auxiliary inequalities.

use boltzmix::collision::{collide, energy_identity, uniform_sphere};
use boltzmix::moments::{
    interpolation_check, jensen_lower_bound, poly_inequality_i, poly_inequality_ii,
};
use boltzmix::stats::normal_vec3;
use boltzmix::{CollisionInput, ParticleEnsemble, SpeciesSet, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const CONSERVATION_TOL: f64 = 1e-10;
pub const RELATIVE_SPEED_TOL: f64 = 1e-12;

#[derive(Debug, Serialize)]
pub struct CollisionSuite {
    pub momentum_max: f64,
    pub energy_max: f64,
    pub identity_max: f64,
    pub relative_speed_max: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct InequalitySuite {
    pub poly_i_violations: usize,
    pub poly_ii_violations: usize,
    pub interpolation_violations: usize,
    pub jensen_violations: usize,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub cases: usize,
    pub seed: u64,
    pub collision: CollisionSuite,
    pub inequalities: InequalitySuite,
    pub pass: bool,
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}

fn bracket_sq(v: &Vec3, m: f64, total: f64) -> f64 {
    1.0 + m * v.norm_squared() / total
}

pub fn run(cases: usize, seed: u64) -> boltzmix::Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let collision = collision_suite(cases, &mut rng)?;
    let inequalities = inequality_suite(cases, &mut rng)?;
    Ok(VerifyReport {
        cases,
        seed,
        pass: collision.pass && inequalities.pass,
        collision,
        inequalities,
    })
}

fn collision_suite(cases: usize, rng: &mut ChaCha8Rng) -> boltzmix::Result<CollisionSuite> {
    let (mut dp_max, mut de_max, mut id_max, mut du_max) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..cases {
        let masses: Vec<f64> = (0..3).map(|_| log_uniform(rng, 0.1, 10.0)).collect();
        let total: f64 = masses.iter().sum();
        let species = SpeciesSet::new(masses.clone())?;
        let (i, j) = (rng.random_range(0..3), rng.random_range(0..3));
        let (mi, mj) = (masses[i], masses[j]);
        let input = CollisionInput::new(normal_vec3(rng, 1.0), normal_vec3(rng, 1.0), i, j);
        let sigma = uniform_sphere(rng);
        let out = collide(&input, &sigma, &species)?;
        let (v, vs, vp, vsp) = (input.v, input.v_star, out.v_prime, out.v_star_prime);

        let dp = (vp * mi + vsp * mj - v * mi - vs * mj).norm() / (mi * v.norm() + mj * vs.norm());
        let e = bracket_sq(&v, mi, total) + bracket_sq(&vs, mj, total);
        let (a, b) = (bracket_sq(&vp, mi, total), bracket_sq(&vsp, mj, total));
        let (ra, rb) = energy_identity(&input, &species)?.recompose(&sigma);
        let u = (v - vs).norm();
        dp_max = dp_max.max(dp);
        de_max = de_max.max((a + b - e).abs() / e);
        id_max = id_max.max((ra - a).abs().max((rb - b).abs()) / e);
        du_max = du_max.max(((vp - vsp).norm() - u).abs() / u);
    }
    Ok(CollisionSuite {
        momentum_max: dp_max,
        energy_max: de_max,
        identity_max: id_max,
        relative_speed_max: du_max,
        pass: dp_max < CONSERVATION_TOL
            && de_max < CONSERVATION_TOL
            && id_max < CONSERVATION_TOL
            && du_max < RELATIVE_SPEED_TOL,
    })
}

fn random_ensemble(rng: &mut ChaCha8Rng) -> boltzmix::Result<ParticleEnsemble> {
    let n = rng.random_range(1..=3);
    let masses: Vec<f64> = (0..n).map(|_| log_uniform(rng, 0.1, 10.0)).collect();
    let vel: Vec<Vec<Vec3>> = (0..n)
        .map(|_| {
            let sd = log_uniform(rng, 0.1, 10.0);
            (0..rng.random_range(1..8))
                .map(|_| normal_vec3(rng, sd))
                .collect()
        })
        .collect();
    ParticleEnsemble::new(SpeciesSet::new(masses)?, vel, log_uniform(rng, 0.01, 10.0))
}

fn inequality_suite(cases: usize, rng: &mut ChaCha8Rng) -> boltzmix::Result<InequalitySuite> {
    let (mut p1, mut p2, mut interp, mut jensen) = (0, 0, 0, 0);
    for _ in 0..cases {
        let (x, y) = (log_uniform(rng, 1e-3, 1e3), log_uniform(rng, 1e-3, 1e3));
        let p = rng.random_range(1.01..20.0);
        p1 += usize::from(!poly_inequality_i(x, y, p)?.holds);

        let p: f64 = rng.random_range(1.0..20.0);
        let top = (p + 1.0) / 2.0;
        let b = rng.random_range(0.0..=top - 1.0);
        let a = rng.random_range(b + 1.0..=top);
        p2 += usize::from(!poly_inequality_ii(x, y, a, b, p)?.holds);

        let e = random_ensemble(rng)?;
        let k1 = rng.random_range(0.1..10.0);
        let k2 = k1 + rng.random_range(0.0..10.0);
        interp +=
            usize::from(!interpolation_check(&e, k1, k2, rng.random_range(0.01..0.99))?.holds);

        let k = rng.random_range(1.0..10.0);
        let lambda = rng.random_range(0.01..=1.0);
        let c0 = e.m0_per_species().into_iter().fold(0.0, f64::max);
        let bound = jensen_lower_bound(e.poly_moment(k)?, c0, e.species().len(), k, lambda)?;
        jensen += usize::from(e.poly_moment(k + lambda)? < bound * (1.0 - 1e-12));
    }
    Ok(InequalitySuite {
        poly_i_violations: p1,
        poly_ii_violations: p2,
        interpolation_violations: interp,
        jensen_violations: jensen,
        pass: p1 + p2 + interp + jensen == 0,
    })
}
