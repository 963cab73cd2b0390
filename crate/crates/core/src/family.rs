//! Random circle homeomorphisms `α ↦ f_α` over a uniform noise box.
//!
//! Every family is evaluated through a degree-one lift `F_α : ℝ → ℝ` with
//! `F_α(t + 1) = F_α(t) + 1`; circle evaluation is the projection of the
//! lift. Inverses are closed form where available and otherwise found by
//! bisection on the monotone lift.

use crate::circle::{wrap, Point};
use crate::error::{Error, Result};
use crate::scalar::Real;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Iteration cap for the bisection inverse.
pub const BISECTION_MAX_ITER: usize = 80;
/// Target bracket width for the bisection inverse.
pub const BISECTION_TARGET: f64 = 1e-13;

/// Uniform distribution on a product of closed intervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct NoiseModel<T: Real> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Real> NoiseModel<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Parameter("noise box bounds differ in length".into()));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Parameter(format!(
                    "noise box coordinate {i} is degenerate: [{lo}, {hi}]"
                )));
            }
        }
        Ok(NoiseModel { lower, upper })
    }

    /// `[lo, hi]^dim`
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        NoiseModel {
            lower: vec![T::lit(lo); dim],
            upper: vec![T::lit(hi); dim],
        }
    }

    /// Zero-dimensional model used by noise-independent families.
    pub fn trivial() -> Self {
        NoiseModel {
            lower: Vec::new(),
            upper: Vec::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, alpha: &[T]) -> bool {
        alpha.len() == self.dimension()
            && alpha
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(a, (lo, hi))| *a >= *lo && *a <= *hi)
    }

    /// Draws one noise point.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        let mut out = Vec::with_capacity(self.dimension());
        self.sample_into(rng, &mut out);
        out
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<T>) {
        for (lo, hi) in self.lower.iter().zip(&self.upper) {
            let u: f64 = rng.gen();
            out.push(*lo + (*hi - *lo) * T::lit(u));
        }
    }

    /// All `2^d` corners of the box.
    pub fn corners(&self) -> Vec<Vec<T>> {
        let d = self.dimension();
        (0..(1usize << d))
            .map(|mask| {
                (0..d)
                    .map(|i| {
                        if mask >> i & 1 == 1 {
                            self.upper[i]
                        } else {
                            self.lower[i]
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Box corners, the centre, and `n_random` seeded uniform draws.
    pub fn probe_points(&self, n_random: usize, seed: u64) -> Vec<Vec<T>> {
        let mut pts = self.corners();
        if self.dimension() > 0 {
            pts.push(
                self.lower
                    .iter()
                    .zip(&self.upper)
                    .map(|(lo, hi)| (*lo + *hi) / T::lit(2.0))
                    .collect(),
            );
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..n_random {
            pts.push(self.sample(&mut rng));
        }
        pts
    }

    /// `n`-fold product box, used by [`Family::iterate`].
    pub fn power(&self, n: usize) -> Self {
        NoiseModel {
            lower: self.lower.repeat(n),
            upper: self.upper.repeat(n),
        }
    }

    pub fn to_f64(&self) -> NoiseModel<f64> {
        NoiseModel {
            lower: self.lower.iter().map(|x| x.as_f64()).collect(),
            upper: self.upper.iter().map(|x| x.as_f64()).collect(),
        }
    }
}

/// Sign of the noise term in the mirrored-noise example.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

/// Serializable family descriptor (config files and report echoes).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    /// `g_{k,l}(x) = x + sin(2πkx)/(2πk) + l/k`, noise-independent.
    Canonical { k: u32, l: u32 },
    /// `x + sin(2πkx)/(2πk) + l/k + r·α[coordinate]` on `[-1,1]²`.
    Example1 {
        k: u32,
        l: u32,
        r: f64,
        #[serde(default)]
        coordinate: usize,
    },
    /// `x + sin(2πkx)/(2πk) + l/k ± r·α` on `[-1,1]`.
    Example2 { k: u32, l: u32, r: f64, sign: Sign },
    /// `x + c + ε·sin(2π(x + α))` on `[0,1]`.
    Example3 { epsilon: f64, c: f64 },
    /// `x + offset + Σ coefficients[i]·α[i]` on the given box.
    RandomRotation {
        offset: f64,
        coefficients: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Mirror { of: Box<FamilySpec> },
    Factor { of: Box<FamilySpec>, m: u32 },
    RotateConjugate { of: Box<FamilySpec>, c: f64 },
    Iterate { of: Box<FamilySpec>, n: u32 },
    /// Looked up in a [`Registry`].
    Registered {
        name: String,
        #[serde(default)]
        params: Vec<f64>,
    },
}

/// User-supplied lift, the extension point for families outside the built-ins.
pub trait LiftMap<T: Real>: Send + Sync {
    /// Degree-one lift `F_α(t)`; must be strictly increasing in `t`.
    fn lift(&self, alpha: &[T], t: T) -> T;

    /// Closed-form inverse lift, if known.
    fn inverse_lift(&self, _alpha: &[T], _y: T) -> Option<T> {
        None
    }
}

impl<T: Real, F> LiftMap<T> for F
where
    F: Fn(&[T], T) -> T + Send + Sync,
{
    fn lift(&self, alpha: &[T], t: T) -> T {
        self(alpha, t)
    }
}

type ShiftFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;

#[derive(Clone)]
enum Shift<T: Real> {
    Linear { offset: T, coefficients: Vec<T> },
    Func(ShiftFn<T>),
}

impl<T: Real> Shift<T> {
    fn eval(&self, alpha: &[T]) -> T {
        match self {
            Shift::Linear {
                offset,
                coefficients,
            } => coefficients
                .iter()
                .zip(alpha)
                .fold(*offset, |acc, (c, a)| acc + *c * *a),
            Shift::Func(f) => f(alpha),
        }
    }
}

#[derive(Clone)]
enum Kind<T: Real> {
    Sine {
        k: u32,
        rot: T,
        amp: T,
        coord: usize,
    },
    Phase {
        eps: T,
        c: T,
    },
    Rotation(Shift<T>),
    Mirror(Box<Family<T>>),
    Factor(Box<Family<T>>, u32),
    RotateConjugate(Box<Family<T>>, T),
    Iterate(Box<Family<T>>, u32),
    Custom(Arc<dyn LiftMap<T>>),
}

/// A random circle homeomorphism `𝐟 = (f_α)_{α∈Δ}`.
#[derive(Clone)]
pub struct Family<T: Real> {
    noise: NoiseModel<T>,
    kind: Kind<T>,
    spec: FamilySpec,
    noise_independent: bool,
}

impl<T: Real> fmt::Debug for Family<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Family")
            .field("spec", &self.spec)
            .field("noise", &self.noise)
            .finish()
    }
}

fn two_pi<T: Real>() -> T {
    T::TAU()
}

fn check_kl(k: u32, l: u32) -> Result<()> {
    if k == 0 {
        return Err(Error::Parameter("k must be positive".into()));
    }
    if l >= k {
        return Err(Error::Parameter(format!("l = {l} must lie in 0..{k}")));
    }
    Ok(())
}

fn check_r(r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Parameter(format!("noise amplitude r = {r} must be positive")));
    }
    Ok(())
}

impl<T: Real> Family<T> {
    /// The deterministic target map `g_{k,l}`. Not a valid classification input.
    pub fn canonical(k: u32, l: u32) -> Result<Self> {
        check_kl(k, l)?;
        Ok(Family {
            noise: NoiseModel::trivial(),
            kind: Kind::Sine {
                k,
                rot: T::lit(l as f64 / k as f64),
                amp: T::zero(),
                coord: 0,
            },
            spec: FamilySpec::Canonical { k, l },
            noise_independent: true,
        })
    }

    /// Independent-noise example reading noise coordinate 0 of `[-1,1]²`.
    pub fn example1(k: u32, l: u32, r: f64) -> Result<Self> {
        Self::example1_on(k, l, r, 0)
    }

    /// Independent-noise example reading the given coordinate of `[-1,1]²`.
    pub fn example1_on(k: u32, l: u32, r: f64, coordinate: usize) -> Result<Self> {
        check_kl(k, l)?;
        check_r(r)?;
        if coordinate > 1 {
            return Err(Error::Parameter("example1 noise coordinate must be 0 or 1".into()));
        }
        Ok(Family {
            noise: NoiseModel::cube(2, -1.0, 1.0),
            kind: Kind::Sine {
                k,
                rot: T::lit(l as f64 / k as f64),
                amp: T::lit(r),
                coord: coordinate,
            },
            spec: FamilySpec::Example1 {
                k,
                l,
                r,
                coordinate,
            },
            noise_independent: false,
        })
    }

    /// Mirrored-noise example on `[-1,1]`.
    pub fn example2(k: u32, l: u32, r: f64, sign: Sign) -> Result<Self> {
        check_kl(k, l)?;
        check_r(r)?;
        let amp = match sign {
            Sign::Plus => r,
            Sign::Minus => -r,
        };
        Ok(Family {
            noise: NoiseModel::cube(1, -1.0, 1.0),
            kind: Kind::Sine {
                k,
                rot: T::lit(l as f64 / k as f64),
                amp: T::lit(amp),
                coord: 0,
            },
            spec: FamilySpec::Example2 { k, l, r, sign },
            noise_independent: false,
        })
    }

    /// Random-phase example `x + c + ε·sin(2π(x + α))` on `[0,1]`.
    pub fn example3(epsilon: f64, c: f64) -> Result<Self> {
        let max_eps = 1.0 / std::f64::consts::TAU;
        if !(epsilon > 0.0) || epsilon > max_eps * (1.0 + 1e-12) {
            return Err(Error::Parameter(format!(
                "epsilon = {epsilon} must lie in (0, 1/2π]"
            )));
        }
        if !(0.0..1.0).contains(&c) {
            return Err(Error::Parameter(format!("c = {c} must lie in [0, 1)")));
        }
        Ok(Family {
            noise: NoiseModel::cube(1, 0.0, 1.0),
            kind: Kind::Phase {
                eps: T::lit(epsilon),
                c: T::lit(c),
            },
            spec: FamilySpec::Example3 { epsilon, c },
            noise_independent: false,
        })
    }

    /// Random rotation with shift `s(α) = offset + Σ coefficients[i]·α[i]`.
    pub fn random_rotation(noise: NoiseModel<T>, offset: f64, coefficients: Vec<f64>) -> Self {
        let independent = coefficients.iter().all(|c| *c == 0.0);
        let spec = FamilySpec::RandomRotation {
            offset,
            coefficients: coefficients.clone(),
            lower: noise.lower.iter().map(|x| x.as_f64()).collect(),
            upper: noise.upper.iter().map(|x| x.as_f64()).collect(),
        };
        Family {
            noise,
            kind: Kind::Rotation(Shift::Linear {
                offset: T::lit(offset),
                coefficients: coefficients.into_iter().map(T::lit).collect(),
            }),
            spec,
            noise_independent: independent,
        }
    }

    /// Random rotation with an arbitrary continuous shift map.
    pub fn random_rotation_fn<F>(noise: NoiseModel<T>, name: &str, shift: F) -> Self
    where
        F: Fn(&[T]) -> T + Send + Sync + 'static,
    {
        Family {
            noise,
            kind: Kind::Rotation(Shift::Func(Arc::new(shift))),
            spec: FamilySpec::Registered {
                name: name.to_string(),
                params: Vec::new(),
            },
            noise_independent: false,
        }
    }

    /// Family defined by a user lift (see [`LiftMap`]).
    pub fn custom<L>(noise: NoiseModel<T>, name: &str, params: Vec<f64>, lift: L) -> Self
    where
        L: LiftMap<T> + 'static,
    {
        Family {
            noise,
            kind: Kind::Custom(Arc::new(lift)),
            spec: FamilySpec::Registered {
                name: name.to_string(),
                params,
            },
            noise_independent: false,
        }
    }

    /// `α ↦ (x ↦ −f_α(−x))`.
    pub fn mirror(&self) -> Self {
        Family {
            noise: self.noise.clone(),
            spec: FamilySpec::Mirror {
                of: Box::new(self.spec.clone()),
            },
            noise_independent: self.noise_independent,
            kind: Kind::Mirror(Box::new(self.clone())),
        }
    }

    /// `α ↦ R_c ∘ f_α ∘ R_{−c}`.
    pub fn rotate_conjugate(&self, c: Point<T>) -> Self {
        Family {
            noise: self.noise.clone(),
            spec: FamilySpec::RotateConjugate {
                of: Box::new(self.spec.clone()),
                c: c.value().as_f64(),
            },
            noise_independent: self.noise_independent,
            kind: Kind::RotateConjugate(Box::new(self.clone()), c.value()),
        }
    }

    /// Quotient family `z_m(f_α)` defined by `z_m(f)(m·x) = m·f(x)`.
    ///
    /// Fails if some sampled `f_α` does not commute with `τ_m` to `1e-9`.
    pub fn factor(&self, m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::Parameter("factor order must be positive".into()));
        }
        if m == 1 {
            return Ok(self.clone());
        }
        let err = self.commutation_defect(m, 128, 16, 0x5eed_f00d);
        let tol = T::lit(1e-9).max(T::epsilon() * T::lit(64.0));
        if err > tol {
            return Err(Error::Precondition(format!(
                "τ_{m} does not commute with the family (defect {err})"
            )));
        }
        Ok(self.factor_unchecked(m))
    }

    pub(crate) fn factor_unchecked(&self, m: u32) -> Self {
        Family {
            noise: self.noise.clone(),
            spec: FamilySpec::Factor {
                of: Box::new(self.spec.clone()),
                m,
            },
            noise_independent: self.noise_independent,
            kind: Kind::Factor(Box::new(self.clone()), m),
        }
    }

    /// The `n`-step family `f_{(α_0..α_{n-1})} = f_{α_{n-1}} ∘ … ∘ f_{α_0}` over `Δⁿ`.
    pub fn iterate(&self, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("iterate count must be positive".into()));
        }
        Ok(Family {
            noise: self.noise.power(n as usize),
            spec: FamilySpec::Iterate {
                of: Box::new(self.spec.clone()),
                n,
            },
            noise_independent: self.noise_independent,
            kind: Kind::Iterate(Box::new(self.clone()), n),
        })
    }

    /// Largest sampled `dist(f_α(x + 1/m), f_α(x) + 1/m)`.
    pub fn commutation_defect(&self, m: u32, grid: usize, n_alpha: usize, seed: u64) -> T {
        let step = T::one() / T::lit(m as f64);
        let mut worst = T::zero();
        for alpha in self.noise.probe_points(n_alpha, seed) {
            for j in 0..grid {
                let x = Point::new(T::from_count(j) / T::from_count(grid));
                let lhs = self.eval_raw(&alpha, x.shift(step));
                let rhs = self.eval_raw(&alpha, x).shift(step);
                worst = worst.max(lhs.dist(rhs));
            }
        }
        worst
    }

    pub fn noise(&self) -> &NoiseModel<T> {
        &self.noise
    }

    pub fn spec(&self) -> &FamilySpec {
        &self.spec
    }

    /// True for constant-in-α families, which cannot satisfy non-degeneracy.
    pub fn is_noise_independent(&self) -> bool {
        self.noise_independent
    }

    /// Degree-one lift `F_α(t)`.
    pub fn lift(&self, alpha: &[T], t: T) -> T {
        match &self.kind {
            Kind::Sine { k, rot, amp, coord } => {
                let kk = T::lit(*k as f64);
                let w = two_pi::<T>() * kk;
                let noise = if *amp == T::zero() {
                    T::zero()
                } else {
                    *amp * alpha[*coord]
                };
                t + (w * t).sin() / w + *rot + noise
            }
            Kind::Phase { eps, c } => t + *c + *eps * (two_pi::<T>() * (t + alpha[0])).sin(),
            Kind::Rotation(s) => t + s.eval(alpha),
            Kind::Mirror(inner) => -inner.lift(alpha, -t),
            Kind::Factor(inner, m) => {
                let mm = T::lit(*m as f64);
                mm * inner.lift(alpha, t / mm)
            }
            Kind::RotateConjugate(inner, c) => inner.lift(alpha, t - *c) + *c,
            Kind::Iterate(inner, n) => {
                let d = inner.noise.dimension();
                let mut y = t;
                for i in 0..*n as usize {
                    y = inner.lift(&alpha[i * d..(i + 1) * d], y);
                }
                y
            }
            Kind::Custom(map) => map.lift(alpha, t),
        }
    }

    /// Closed-form inverse lift, when every layer has one.
    pub fn inverse_lift_closed(&self, alpha: &[T], y: T) -> Option<T> {
        match &self.kind {
            Kind::Rotation(s) => Some(y - s.eval(alpha)),
            Kind::Mirror(inner) => inner.inverse_lift_closed(alpha, -y).map(|t| -t),
            Kind::Factor(inner, m) => {
                let mm = T::lit(*m as f64);
                inner.inverse_lift_closed(alpha, y / mm).map(|t| mm * t)
            }
            Kind::RotateConjugate(inner, c) => {
                inner.inverse_lift_closed(alpha, y - *c).map(|t| t + *c)
            }
            Kind::Iterate(inner, n) => {
                let d = inner.noise.dimension();
                let mut t = y;
                for i in (0..*n as usize).rev() {
                    t = inner.inverse_lift_closed(&alpha[i * d..(i + 1) * d], t)?;
                }
                Some(t)
            }
            Kind::Custom(map) => map.inverse_lift(alpha, y),
            Kind::Sine { .. } | Kind::Phase { .. } => None,
        }
    }

    pub fn has_closed_inverse(&self) -> bool {
        let probe: Vec<T> = self
            .noise
            .lower
            .iter()
            .zip(&self.noise.upper)
            .map(|(a, b)| (*a + *b) / T::lit(2.0))
            .collect();
        self.inverse_lift_closed(&probe, T::zero()).is_some()
    }

    fn check_alpha(&self, alpha: &[T]) -> Result<()> {
        if self.noise.dimension() == 0 || self.noise.contains(alpha) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "{:?} not in box {:?}..{:?}",
                alpha, self.noise.lower, self.noise.upper
            )))
        }
    }

    /// `f_α(x)`, with the noise point validated against the box.
    pub fn eval(&self, alpha: &[T], x: Point<T>) -> Result<Point<T>> {
        self.check_alpha(alpha)?;
        Ok(self.eval_raw(alpha, x))
    }

    /// `f_α(x)` without validating `α`; callers guarantee `α` lies in the box.
    #[inline]
    pub fn eval_raw(&self, alpha: &[T], x: Point<T>) -> Point<T> {
        Point::new(self.lift(alpha, x.value()))
    }

    /// `f_α⁻¹(y)`, validated.
    pub fn eval_inverse(&self, alpha: &[T], y: Point<T>) -> Result<Point<T>> {
        self.check_alpha(alpha)?;
        self.eval_inverse_raw(alpha, y)
    }

    /// `f_α⁻¹(y)` without validating `α`.
    pub fn eval_inverse_raw(&self, alpha: &[T], y: Point<T>) -> Result<Point<T>> {
        if let Some(t) = self.inverse_lift_closed(alpha, y.value()) {
            return Ok(Point::new(t));
        }
        self.bisect_inverse(alpha, y)
    }

    fn bisect_inverse(&self, alpha: &[T], y: Point<T>) -> Result<Point<T>> {
        // Solve F(t) = Y for t in [0, 1], where Y is the lift of y in [F(0), F(0) + 1).
        let base = self.lift(alpha, T::zero());
        let target = base + wrap(y.value() - base);
        let (mut lo, mut hi) = (T::zero(), T::one());
        let tol = T::lit(BISECTION_TARGET).max(T::epsilon() * T::lit(4.0));
        for _ in 0..BISECTION_MAX_ITER {
            let mid = (lo + hi) / T::lit(2.0);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.lift(alpha, mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if hi - lo > tol {
            return Err(Error::Numeric(format!(
                "bisection inverse did not converge (bracket {})",
                hi - lo
            )));
        }
        if self.lift(alpha, hi) == target {
            // near a critical point the lift is flat in floating point; take
            // the middle of the plateau rather than its left edge
            let left = hi;
            let (mut a, mut b) = (hi, T::one());
            for _ in 0..BISECTION_MAX_ITER {
                let mid = (a + b) / T::lit(2.0);
                if mid <= a || mid >= b {
                    break;
                }
                if self.lift(alpha, mid) > target {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            return Ok(Point::new((left + a) / T::lit(2.0)));
        }
        let f_lo = (self.lift(alpha, lo) - target).abs();
        let f_hi = (self.lift(alpha, hi) - target).abs();
        Ok(Point::new(if f_lo <= f_hi { lo } else { hi }))
    }

    /// `s(α) = f_α(0)`: the shift of a random rotation.
    pub fn shift_at(&self, alpha: &[T]) -> Point<T> {
        self.eval_raw(alpha, Point::zero())
    }

    /// Builds a family from its descriptor; `Registered` entries need `registry`.
    pub fn from_spec(spec: &FamilySpec, registry: Option<&Registry<T>>) -> Result<Self> {
        match spec {
            FamilySpec::Canonical { k, l } => Self::canonical(*k, *l),
            FamilySpec::Example1 {
                k,
                l,
                r,
                coordinate,
            } => Self::example1_on(*k, *l, *r, *coordinate),
            FamilySpec::Example2 { k, l, r, sign } => Self::example2(*k, *l, *r, *sign),
            FamilySpec::Example3 { epsilon, c } => Self::example3(*epsilon, *c),
            FamilySpec::RandomRotation {
                offset,
                coefficients,
                lower,
                upper,
            } => {
                let noise = NoiseModel::new(
                    lower.iter().map(|x| T::lit(*x)).collect(),
                    upper.iter().map(|x| T::lit(*x)).collect(),
                )?;
                if coefficients.len() > noise.dimension() {
                    return Err(Error::Parameter(
                        "more rotation coefficients than noise coordinates".into(),
                    ));
                }
                Ok(Self::random_rotation(noise, *offset, coefficients.clone()))
            }
            FamilySpec::Mirror { of } => Ok(Self::from_spec(of, registry)?.mirror()),
            FamilySpec::Factor { of, m } => Self::from_spec(of, registry)?.factor(*m),
            FamilySpec::RotateConjugate { of, c } => {
                Ok(Self::from_spec(of, registry)?.rotate_conjugate(Point::from_f64(*c)))
            }
            FamilySpec::Iterate { of, n } => Self::from_spec(of, registry)?.iterate(*n),
            FamilySpec::Registered { name, params } => registry
                .ok_or_else(|| Error::Parameter(format!("no registry for family '{name}'")))?
                .build(name, params),
        }
    }
}

type Constructor<T> = Box<dyn Fn(&[f64]) -> Result<Family<T>> + Send + Sync>;

/// Name → constructor table for user families referenced from configs.
pub struct Registry<T: Real> {
    entries: BTreeMap<String, Constructor<T>>,
}

impl<T: Real> Default for Registry<T> {
    fn default() -> Self {
        Registry {
            entries: BTreeMap::new(),
        }
    }
}

impl<T: Real> Registry<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register<F>(&mut self, name: &str, ctor: F)
    where
        F: Fn(&[f64]) -> Result<Family<T>> + Send + Sync + 'static,
    {
        self.entries.insert(name.to_string(), Box::new(ctor));
    }

    pub fn build(&self, name: &str, params: &[f64]) -> Result<Family<T>> {
        let ctor = self
            .entries
            .get(name)
            .ok_or_else(|| Error::Parameter(format!("unknown family '{name}'")))?;
        ctor(params)
    }
}

/// Outcome of [`validate_family`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationStatus {
    Pass,
    Warn,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub status: ValidationStatus,
    pub findings: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.status != ValidationStatus::Fail
    }
}

/// Heuristic check of the random-circle-homeomorphism conditions on sampled grids.
///
/// Checks orientation (strictly increasing lift), degree one and continuity
/// in `α`, and flags constant-in-`α` families. Non-degeneracy can only be
/// refuted for the constant case; a pass is not a proof.
pub fn validate_family<T: Real>(fam: &Family<T>, n_samples: usize) -> ValidationReport {
    const GRID: usize = 256;
    let mut findings = Vec::new();
    let mut fail = false;
    let mut warn = false;
    let alphas = fam.noise().probe_points(n_samples, 0x0a11_da7e);
    let deg_tol = T::lit(1e-9).max(T::epsilon() * T::lit(64.0));

    let mut orientation_bad = false;
    let mut degree_bad = false;
    for alpha in &alphas {
        let mut prev = fam.lift(alpha, T::zero());
        for j in 1..=GRID {
            let t = T::from_count(j) / T::from_count(GRID);
            let v = fam.lift(alpha, t);
            if !(v > prev) {
                orientation_bad = true;
            }
            prev = v;
        }
        for j in 0..16 {
            let t = T::from_count(j) / T::lit(16.0);
            let jump = fam.lift(alpha, t + T::one()) - fam.lift(alpha, t) - T::one();
            if jump.abs() > deg_tol {
                degree_bad = true;
            }
        }
    }
    if orientation_bad {
        fail = true;
        findings.push("orientation: lift is not strictly increasing on the sample grid".into());
    }
    if degree_bad {
        fail = true;
        findings.push("degree: F(t+1) - F(t) differs from 1".into());
    }

    // continuity in α: a small move in the box must move f_α by a small amount
    let d = fam.noise().dimension();
    if d > 0 {
        let mut worst = T::zero();
        for alpha in &alphas {
            let mut moved = alpha.clone();
            for i in 0..d {
                let width = fam.noise().upper[i] - fam.noise().lower[i];
                let step = width * T::lit(1e-7);
                moved[i] = if moved[i] + step <= fam.noise().upper[i] {
                    moved[i] + step
                } else {
                    moved[i] - step
                };
            }
            for j in 0..32 {
                let x = Point::new(T::from_count(j) / T::lit(32.0));
                worst = worst.max(fam.eval_raw(alpha, x).dist(fam.eval_raw(&moved, x)));
            }
        }
        if worst > T::lit(1e-3) {
            fail = true;
            findings.push(format!("continuity: jump of {worst} under a 1e-7 noise move"));
        }
    }

    let mut spread = T::zero();
    if let Some(a0) = alphas.first() {
        for alpha in &alphas[1..] {
            for j in 0..32 {
                let x = Point::new(T::from_count(j) / T::lit(32.0));
                spread = spread.max(fam.eval_raw(a0, x).dist(fam.eval_raw(alpha, x)));
            }
        }
    }
    if fam.is_noise_independent() || spread <= T::lit(1e-14) {
        warn = true;
        findings.push(
            "noise-independent: every f_α is the same map, so non-degeneracy (ii) cannot hold"
                .into(),
        );
    }

    let status = if fail {
        ValidationStatus::Fail
    } else if warn {
        ValidationStatus::Warn
    } else {
        ValidationStatus::Pass
    };
    ValidationReport { status, findings }
}
