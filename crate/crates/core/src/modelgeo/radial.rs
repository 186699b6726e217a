// Per-mode radial boundary value problems on the unit ball.
//
// A mode u = f(r) Y_k with Δ_{S^{n-1}} Y_k = −k(k+n−2) Y_k is written as
// f = r^k g, which removes the r^k growth and the k(k+n−2)/r² term. In
// t = ln r the profile g satisfies
//
//     g_tt + D(t) g_t + E(t) g = 0,
//
// with D = 2k+n−2 + rP, E = rkP, P = (n−2)c'/(2c) for Δ_{cg}-harmonic modes,
// and D = 2k+n−2, E = −r²q for (−Δ + q)u = 0. The Steklov eigenvalue is
// σ_k = k + g_t(0)/g(0).

use super::ModelError;
use crate::profile::RadialProfile;
use crate::symcalc;
use nalgebra::{Matrix4, Vector4};

/// Time-stepping scheme for the radial system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// Classical explicit fourth-order Runge–Kutta.
    Rk4,
    /// Two-stage Gauss–Legendre collocation (implicit, order 4).
    GaussLegendre,
}

/// Node distribution in t = ln r.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialGrid {
    /// Uniform in ln r.
    Logarithmic,
    /// Smoothly non-uniform in ln r, `t(u) = t₀(1 − u + (β/π) sin πu)`.
    Stretched,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeOptions {
    /// Relative tolerance between successive step halvings.
    pub tol: f64,
    pub integrator: Integrator,
    pub grid: RadialGrid,
    /// Frobenius start radius.
    pub start_radius: f64,
    /// Upper bound on the t-step.
    pub max_step: f64,
    /// Upper bound on `step · D`, the stiffness number of the fast mode.
    pub stiffness: f64,
    pub max_refinements: usize,
    /// Relative size of |f(1)| below which the solve is rejected as close to
    /// a Dirichlet eigenvalue.
    pub dirichlet_threshold: f64,
}

impl Default for ModeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            integrator: Integrator::Rk4,
            grid: RadialGrid::Logarithmic,
            start_radius: 1e-4,
            max_step: 0.01,
            stiffness: 0.5,
            max_refinements: 6,
            dirichlet_threshold: 1e-8,
        }
    }
}

impl ModeOptions {
    /// Same problem, different scheme at half the step: the independent
    /// cross-check used by the tests.
    pub fn dual(&self) -> Self {
        Self {
            integrator: match self.integrator {
                Integrator::Rk4 => Integrator::GaussLegendre,
                Integrator::GaussLegendre => Integrator::Rk4,
            },
            max_step: self.max_step / 2.0,
            stiffness: self.stiffness / 2.0,
            ..*self
        }
    }
}

/// Potentials for the Schrödinger mode problem. Evaluation may fail when the
/// potential is itself derived numerically.
pub trait RadialPotential: Sync {
    fn eval(&self, r: f64) -> Result<f64, ModelError>;
}

impl<P: RadialProfile + ?Sized> RadialPotential for P {
    fn eval(&self, r: f64) -> Result<f64, ModelError> {
        Ok(self.value(r))
    }
}

/// `−q_c` for a conformal profile, the potential in `Λ_{g,−q_c}`.
pub struct NegatedSchrodinger<'a> {
    pub profile: &'a dyn RadialProfile,
    pub n: usize,
}

impl RadialPotential for NegatedSchrodinger<'_> {
    fn eval(&self, r: f64) -> Result<f64, ModelError> {
        Ok(-symcalc::schrodinger_potential_at(self.profile, self.n, r.min(1.0))?)
    }
}

pub(crate) trait ModeEquation: Sync {
    fn k(&self) -> usize;
    /// (D, E) at radius r.
    fn coefficients(&self, r: f64) -> Result<(f64, f64), ModelError>;
    /// (g, dg/dr) at the start radius.
    fn frobenius(&self, r0: f64) -> Result<(f64, f64), ModelError>;
}

pub(crate) struct ConformalMode<'a> {
    pub profile: &'a dyn RadialProfile,
    pub n: usize,
    pub k: usize,
}

impl ConformalMode<'_> {
    fn p(&self, r: f64) -> Result<(f64, f64), ModelError> {
        let c = self.profile.value(r);
        if !(c > 0.0) {
            return Err(ModelError::NonPositiveProfile { r, value: c });
        }
        let c1 = self.profile.d1(r);
        let c2 = self.profile.d2(r);
        let half = (self.n as f64 - 2.0) / 2.0;
        Ok((half * c1 / c, half * (c2 / c - c1 * c1 / (c * c))))
    }
}

impl ModeEquation for ConformalMode<'_> {
    fn k(&self) -> usize {
        self.k
    }

    fn coefficients(&self, r: f64) -> Result<(f64, f64), ModelError> {
        let (p, _) = self.p(r)?;
        let k = self.k as f64;
        Ok((2.0 * k + self.n as f64 - 2.0 + r * p, r * k * p))
    }

    fn frobenius(&self, r0: f64) -> Result<(f64, f64), ModelError> {
        let (p0, p1) = self.p(0.0)?;
        let k = self.k as f64;
        let n = self.n as f64;
        let a1 = -p0 * k / (2.0 * k + n - 1.0);
        let a2 = -(p0 * a1 + k * (p1 + p0 * a1)) / (2.0 * (2.0 * k + n));
        Ok((1.0 + a1 * r0 + a2 * r0 * r0, a1 + 2.0 * a2 * r0))
    }
}

pub(crate) struct PotentialMode<'a> {
    pub potential: &'a dyn RadialPotential,
    pub n: usize,
    pub k: usize,
}

impl ModeEquation for PotentialMode<'_> {
    fn k(&self) -> usize {
        self.k
    }

    fn coefficients(&self, r: f64) -> Result<(f64, f64), ModelError> {
        let q = self.potential.eval(r)?;
        Ok((2.0 * self.k as f64 + self.n as f64 - 2.0, -r * r * q))
    }

    fn frobenius(&self, r0: f64) -> Result<(f64, f64), ModelError> {
        let q0 = self.potential.eval(r0)?;
        let m = 2.0 * (2.0 * self.k as f64 + self.n as f64);
        Ok((1.0 + q0 * r0 * r0 / m, 2.0 * q0 * r0 / m))
    }
}

const STRETCH: f64 = 0.5;

struct Mapping {
    t0: f64,
    grid: RadialGrid,
}

impl Mapping {
    // (t, dt/du) at u ∈ [0, 1].
    fn at(&self, u: f64) -> (f64, f64) {
        let span = -self.t0;
        match self.grid {
            RadialGrid::Logarithmic => (self.t0 + span * u, span),
            RadialGrid::Stretched => {
                let pi = std::f64::consts::PI;
                let phi = u - STRETCH / pi * (pi * u).sin();
                let dphi = 1.0 - STRETCH * (pi * u).cos();
                (self.t0 + span * phi, span * dphi)
            }
        }
    }

    fn max_rate(&self) -> f64 {
        let span = -self.t0;
        match self.grid {
            RadialGrid::Logarithmic => span,
            RadialGrid::Stretched => span * (1.0 + STRETCH),
        }
    }
}

struct Trajectory {
    g: f64,
    gt: f64,
    max_f: f64,
}

// dy/du = s(u) [[0, 1], [−E, −D]] y
fn system_matrix(
    eq: &dyn ModeEquation,
    map: &Mapping,
    u: f64,
) -> Result<[[f64; 2]; 2], ModelError> {
    let (t, s) = map.at(u);
    let (d, e) = eq.coefficients(t.exp())?;
    Ok([[0.0, s], [-s * e, -s * d]])
}

fn apply(m: &[[f64; 2]; 2], y: [f64; 2]) -> [f64; 2] {
    [
        m[0][0] * y[0] + m[0][1] * y[1],
        m[1][0] * y[0] + m[1][1] * y[1],
    ]
}

fn integrate(
    eq: &dyn ModeEquation,
    opts: &ModeOptions,
    steps: usize,
) -> Result<Trajectory, ModelError> {
    let r0 = opts.start_radius;
    let map = Mapping {
        t0: r0.ln(),
        grid: opts.grid,
    };
    let (g0, gr0) = eq.frobenius(r0)?;
    let mut y = [g0, r0 * gr0];
    let k = eq.k() as f64;
    let h = 1.0 / steps as f64;
    let mut max_f = (map.t0 * k).exp() * g0.abs();
    let sqrt3 = 3f64.sqrt();
    for i in 0..steps {
        let u = i as f64 * h;
        y = match opts.integrator {
            Integrator::Rk4 => {
                let m0 = system_matrix(eq, &map, u)?;
                let mh = system_matrix(eq, &map, u + 0.5 * h)?;
                let m1 = system_matrix(eq, &map, u + h)?;
                let k1 = apply(&m0, y);
                let k2 = apply(&mh, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
                let k3 = apply(&mh, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
                let k4 = apply(&m1, [y[0] + h * k3[0], y[1] + h * k3[1]]);
                [
                    y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                    y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
                ]
            }
            Integrator::GaussLegendre => {
                let c1 = 0.5 - sqrt3 / 6.0;
                let c2 = 0.5 + sqrt3 / 6.0;
                let (a11, a12, a21, a22) = (0.25, 0.25 - sqrt3 / 6.0, 0.25 + sqrt3 / 6.0, 0.25);
                let m1 = system_matrix(eq, &map, u + c1 * h)?;
                let m2 = system_matrix(eq, &map, u + c2 * h)?;
                // Stage equations K_i = M_i (y + h Σ_j a_ij K_j).
                let mut lhs = Matrix4::<f64>::identity();
                for r in 0..2 {
                    for c in 0..2 {
                        lhs[(r, c)] -= h * a11 * m1[r][c];
                        lhs[(r, 2 + c)] -= h * a12 * m1[r][c];
                        lhs[(2 + r, c)] -= h * a21 * m2[r][c];
                        lhs[(2 + r, 2 + c)] -= h * a22 * m2[r][c];
                    }
                }
                let r1 = apply(&m1, y);
                let r2 = apply(&m2, y);
                let rhs = Vector4::new(r1[0], r1[1], r2[0], r2[1]);
                let kk = lhs.lu().solve(&rhs).ok_or(ModelError::NonConvergent {
                    k: eq.k(),
                    change: f64::NAN,
                })?;
                [
                    y[0] + 0.5 * h * (kk[0] + kk[2]),
                    y[1] + 0.5 * h * (kk[1] + kk[3]),
                ]
            }
        };
        let (t, _) = map.at(u + h);
        max_f = max_f.max((t * k).exp() * y[0].abs());
        if !y[0].is_finite() || !y[1].is_finite() {
            return Err(ModelError::NonConvergent {
                k: eq.k(),
                change: f64::INFINITY,
            });
        }
    }
    Ok(Trajectory {
        g: y[0],
        gt: y[1],
        max_f,
    })
}

fn eigenvalue(eq: &dyn ModeEquation, opts: &ModeOptions, steps: usize) -> Result<f64, ModelError> {
    let tr = integrate(eq, opts, steps)?;
    if tr.g.abs() < opts.dirichlet_threshold * tr.max_f {
        return Err(ModelError::DirichletProximity {
            k: eq.k(),
            ratio: tr.g.abs() / tr.max_f,
        });
    }
    Ok(eq.k() as f64 + tr.gt / tr.g)
}

/// Initial number of u-steps so that the t-step respects both the step cap
/// and the stiffness bound.
fn initial_steps(eq: &dyn ModeEquation, opts: &ModeOptions) -> usize {
    let map = Mapping {
        t0: opts.start_radius.ln(),
        grid: opts.grid,
    };
    let d = 2.0 * eq.k() as f64 + 2.0;
    let h_t = opts.max_step.min(opts.stiffness / d);
    (map.max_rate() / h_t).ceil() as usize
}

/// Solves one mode to the requested tolerance by step halving.
pub(crate) fn solve(eq: &dyn ModeEquation, opts: &ModeOptions) -> Result<f64, ModelError> {
    let mut steps = initial_steps(eq, opts);
    let mut coarse = eigenvalue(eq, opts, steps)?;
    let mut change = f64::INFINITY;
    for _ in 0..opts.max_refinements {
        steps *= 2;
        let fine = eigenvalue(eq, opts, steps)?;
        change = (fine - coarse).abs();
        if change <= opts.tol * fine.abs().max(1.0) {
            return Ok(fine);
        }
        coarse = fine;
    }
    Err(ModelError::NonConvergent { k: eq.k(), change })
}
