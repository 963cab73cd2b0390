//! Cocycle iteration over noise windows, pullback limits and contraction diagnostics.

mod perturb;
mod window;

pub use perturb::{perturb_sequence, Orientation};
pub use window::{derive_seed, mix64, NoiseWindow};

use crate::circle::{Arc, Point};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::scalar::Real;
use serde::{Deserialize, Serialize};

/// Default Cauchy-gap tolerance for declaring a pullback converged.
pub const PULLBACK_TOL: f64 = 1e-9;

// Terms inspected by the convergence test.
const TAIL: usize = 8;

/// `φ(n, ω)(x)`: `f_{α_{n-1}} ∘ … ∘ f_{α_0}` for `n > 0` and
/// `f_{α_n}⁻¹ ∘ … ∘ f_{α_{-1}}⁻¹` for `n < 0`.
pub fn cocycle<T: Real>(
    fam: &Family<T>,
    window: &NoiseWindow<T>,
    n: i64,
    x: Point<T>,
) -> Result<Point<T>> {
    if n >= 0 {
        window.require(0, n)?;
        let mut y = x;
        for i in 0..n {
            y = fam.eval_raw(window.alpha(i)?, y);
        }
        Ok(y)
    } else {
        window.require(n, 0)?;
        let mut y = x;
        for i in 1..=(-n) {
            y = fam.eval_inverse_raw(window.alpha(-i)?, y)?;
        }
        Ok(y)
    }
}

/// Forward orbit `x_t` for `t = start ..= start + len`, with `x_start = x`.
pub fn forward_orbit<T: Real>(
    fam: &Family<T>,
    window: &NoiseWindow<T>,
    start: i64,
    x: Point<T>,
    len: usize,
) -> Result<Vec<Point<T>>> {
    window.require(start, start + len as i64)?;
    let mut out = Vec::with_capacity(len + 1);
    let mut y = x;
    out.push(y);
    for t in start..start + len as i64 {
        y = fam.eval_raw(window.alpha(t)?, y);
        out.push(y);
    }
    Ok(out)
}

/// Backward orbit ending at time `end` with `x_end = x`, returned in
/// increasing time order for `t = end - len ..= end`.
pub fn backward_orbit<T: Real>(
    fam: &Family<T>,
    window: &NoiseWindow<T>,
    end: i64,
    x: Point<T>,
    len: usize,
) -> Result<Vec<Point<T>>> {
    window.require(end - len as i64, end)?;
    let mut out = vec![x; len + 1];
    let mut y = x;
    for j in (0..len).rev() {
        let t = end - (len - j) as i64;
        y = fam.eval_inverse_raw(window.alpha(t)?, y)?;
        out[j] = y;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

/// Terms of `φ(n, θ^{-n}ω)(x_{-n})` (forward) or `φ(-n, θ^nω)(x_n)` (backward).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PullbackSequence<T: Real> {
    pub direction: Direction,
    pub terms: Vec<Point<T>>,
    pub limit: Point<T>,
    pub converged: bool,
    /// Largest distance to the limit over the last `TAIL` terms.
    pub gap: T,
}

impl<T: Real> PullbackSequence<T> {
    fn from_terms(direction: Direction, terms: Vec<Point<T>>, tol: T) -> Self {
        let limit = *terms.last().expect("at least one term");
        let gap = terms
            .iter()
            .rev()
            .take(TAIL)
            .map(|t| t.dist(limit))
            .fold(T::zero(), |a, b| a.max(b));
        let converged = terms.len() >= 2 && gap < tol;
        PullbackSequence {
            direction,
            terms,
            limit,
            converged,
            gap,
        }
    }

    /// Orientation in which the terms approach the limit, judged from the first term.
    pub fn orientation(&self) -> Option<Orientation> {
        let first = self.terms[0];
        if first == self.limit {
            None
        } else if first.dplus(self.limit) <= T::lit(0.5) {
            Some(Orientation::Anticlockwise)
        } else {
            Some(Orientation::Clockwise)
        }
    }

    /// Checks `term_{n+1} ∈ [term_n, limit]` (anticlockwise) or
    /// `term_{n+1} ∈ [limit, term_n]` (clockwise) with exact arc membership.
    /// Returns the first offending `n`.
    pub fn check_monotone(&self, orientation: Orientation) -> std::result::Result<(), usize> {
        for n in 0..self.terms.len().saturating_sub(1) {
            let arc = match orientation {
                Orientation::Anticlockwise => Arc::new(self.terms[n], self.limit),
                Orientation::Clockwise => Arc::new(self.limit, self.terms[n]),
            };
            if !arc.contains(self.terms[n + 1]) {
                return Err(n);
            }
        }
        Ok(())
    }

    /// Checks `term_{n+1} ∈ ]term_n, limit[` for every term farther than
    /// `floor` from the limit. Below `floor` consecutive terms may coincide
    /// in floating point.
    pub fn check_strict(&self, orientation: Orientation, floor: T) -> std::result::Result<(), usize> {
        for n in 0..self.terms.len().saturating_sub(1) {
            if self.terms[n + 1].dist(self.limit) <= floor {
                break;
            }
            let arc = match orientation {
                Orientation::Anticlockwise => Arc::new(self.terms[n], self.limit),
                Orientation::Clockwise => Arc::new(self.limit, self.terms[n]),
            };
            if !arc.contains_open(self.terms[n + 1]) {
                return Err(n);
            }
        }
        Ok(())
    }

    /// Rows `(n, value, gap-to-limit)`.
    pub fn rows(&self) -> Vec<(usize, T, T)> {
        self.terms
            .iter()
            .enumerate()
            .map(|(n, t)| (n, t.value(), t.dist(self.limit)))
            .collect()
    }
}

/// `u_n = φ(n, θ^{-n}ω)(x(-n))` for `n = 0..=n_max`.
pub fn pullback_forward<T: Real>(
    fam: &Family<T>,
    window: &NoiseWindow<T>,
    x_of_index: impl Fn(i64) -> Point<T>,
    n_max: usize,
) -> Result<PullbackSequence<T>> {
    window.require(-(n_max as i64), 0)?;
    let alphas: Vec<&[T]> = (1..=n_max as i64)
        .map(|j| window.alpha(-j))
        .collect::<Result<_>>()?;
    let mut terms = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut y = x_of_index(-(n as i64));
        for j in (0..n).rev() {
            y = fam.eval_raw(alphas[j], y);
        }
        terms.push(y);
    }
    Ok(PullbackSequence::from_terms(
        Direction::Forward,
        terms,
        T::lit(PULLBACK_TOL),
    ))
}

/// `u_{-n} = φ(-n, θ^nω)(x(n))` for `n = 0..=n_max`.
pub fn pullback_backward<T: Real>(
    fam: &Family<T>,
    window: &NoiseWindow<T>,
    x_of_index: impl Fn(i64) -> Point<T>,
    n_max: usize,
) -> Result<PullbackSequence<T>> {
    window.require(0, n_max as i64)?;
    let alphas: Vec<&[T]> = (0..n_max as i64)
        .map(|j| window.alpha(j))
        .collect::<Result<_>>()?;
    let mut terms = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut y = x_of_index(n as i64);
        for j in (0..n).rev() {
            y = fam.eval_inverse_raw(alphas[j], y)?;
        }
        terms.push(y);
    }
    Ok(PullbackSequence::from_terms(
        Direction::Backward,
        terms,
        T::lit(PULLBACK_TOL),
    ))
}

/// Clusters of a point cloud on the circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ClusterReport<T: Real> {
    pub centers: Vec<Point<T>>,
    pub diameters: Vec<T>,
    pub max_diameter: T,
    /// Length of the smallest arc containing every point.
    pub hull_length: T,
}

impl<T: Real> ClusterReport<T> {
    pub fn count(&self) -> usize {
        self.centers.len()
    }
}

/// Splits points into clusters separated by circular gaps of at least `gap`.
pub fn cluster_points<T: Real>(points: &[Point<T>], gap: T) -> ClusterReport<T> {
    let mut v: Vec<T> = points.iter().map(|p| p.value()).collect();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = v.len();
    if n == 0 {
        return ClusterReport {
            centers: Vec::new(),
            diameters: Vec::new(),
            max_diameter: T::zero(),
            hull_length: T::zero(),
        };
    }
    // gaps[i] is the anticlockwise gap from v[i] to v[i+1 mod n]
    let gaps: Vec<T> = (0..n)
        .map(|i| {
            if n == 1 {
                T::one()
            } else {
                Point::new(v[i]).dplus(Point::new(v[(i + 1) % n]))
            }
        })
        .collect();
    let max_gap = gaps.iter().copied().fold(T::zero(), T::max);
    let cuts: Vec<usize> = (0..n).filter(|&i| gaps[i] >= gap).collect();
    let mut centers = Vec::new();
    let mut diameters = Vec::new();
    if cuts.is_empty() {
        let start = Point::new(v[0]);
        centers.push(start.shift(T::one() / T::lit(2.0)));
        diameters.push(T::one() - max_gap);
    } else {
        for (c, &cut) in cuts.iter().enumerate() {
            let first = (cut + 1) % n;
            let last = cuts[(c + 1) % cuts.len()];
            let a = Point::new(v[first]);
            let b = Point::new(v[last]);
            let d = a.dplus(b);
            centers.push(a.shift(d / T::lit(2.0)));
            diameters.push(d);
        }
        // order clusters by center for reproducible output
        let mut idx: Vec<usize> = (0..centers.len()).collect();
        idx.sort_by(|&i, &j| centers[i].partial_cmp(&centers[j]).expect("finite"));
        centers = idx.iter().map(|&i| centers[i]).collect();
        diameters = idx.iter().map(|&i| diameters[i]).collect();
    }
    let max_diameter = diameters.iter().copied().fold(T::zero(), T::max);
    ClusterReport {
        centers,
        diameters,
        max_diameter,
        hull_length: if n == 1 { T::zero() } else { T::one() - max_gap },
    }
}

/// Pushes a uniform grid through `φ(n_max, θ^{-n_max}ω)` and clusters the
/// images with gap threshold `1/(4·grid_size)`.
pub fn pullback_grid_clusters<T: Real>(
    fam: &Family<T>,
    window: &NoiseWindow<T>,
    grid_size: usize,
    n_max: usize,
) -> Result<ClusterReport<T>> {
    let images = pullback_grid(fam, window, grid_size, n_max)?;
    Ok(cluster_points(
        &images,
        T::one() / T::from_count(4 * grid_size),
    ))
}

/// Images of the grid `j / grid_size` under `φ(n_max, θ^{-n_max}ω)`.
pub fn pullback_grid<T: Real>(
    fam: &Family<T>,
    window: &NoiseWindow<T>,
    grid_size: usize,
    n_max: usize,
) -> Result<Vec<Point<T>>> {
    if grid_size < 8 {
        return Err(Error::Parameter(format!(
            "grid_size = {grid_size} must be at least 8"
        )));
    }
    window.require(-(n_max as i64), 0)?;
    let alphas: Vec<&[T]> = (-(n_max as i64)..0)
        .map(|t| window.alpha(t))
        .collect::<Result<_>>()?;
    Ok((0..grid_size)
        .map(|j| {
            let mut x = Point::new(T::from_count(j) / T::from_count(grid_size));
            for a in &alphas {
                x = fam.eval_raw(a, x);
            }
            x
        })
        .collect())
}

/// Diameters below this are treated as underflow by [`contraction_rate`].
pub const DIAMETER_FLOOR: f64 = 1e-15;

/// Least-squares slope of `log diam φ(n, ω)(I)` against `n`, where `I` is the
/// arc complementary to the `exclusion_radius`-neighbourhood of the repeller
/// estimate `r(ω)` (backward pullback limit of `[0]`).
///
/// The fit stops at the first diameter below [`DIAMETER_FLOOR`].
pub fn contraction_rate<T: Real>(
    fam: &Family<T>,
    window: &NoiseWindow<T>,
    n_max: usize,
    exclusion_radius: T,
) -> Result<T> {
    if !(exclusion_radius > T::zero() && exclusion_radius < T::lit(0.5)) {
        return Err(Error::Parameter("exclusion radius must lie in (0, 1/2)".into()));
    }
    let back = pullback_backward(fam, window, |_| Point::zero(), n_max)?;
    let r = back.limit;
    let mut lo = r.shift(exclusion_radius);
    let mut hi = r.shift(-exclusion_radius);
    let mut samples: Vec<(T, T)> = Vec::with_capacity(n_max + 1);
    let floor = T::lit(DIAMETER_FLOOR);
    for n in 0..=n_max {
        let d = lo.dplus(hi);
        if d < floor {
            break;
        }
        samples.push((T::from_count(n), d.ln()));
        if n < n_max {
            let a = window.alpha(n as i64)?;
            lo = fam.eval_raw(a, lo);
            hi = fam.eval_raw(a, hi);
        }
    }
    Ok(ls_slope(&samples))
}

fn ls_slope<T: Real>(pts: &[(T, T)]) -> T {
    if pts.len() < 2 {
        return T::zero();
    }
    let n = T::from_count(pts.len());
    let mx = pts.iter().fold(T::zero(), |a, p| a + p.0) / n;
    let my = pts.iter().fold(T::zero(), |a, p| a + p.1) / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (x, y) in pts {
        sxy = sxy + (*x - mx) * (*y - my);
        sxx = sxx + (*x - mx) * (*x - mx);
    }
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::NoiseModel;

    type F = Family<f64>;

    fn p(x: f64) -> Point<f64> {
        Point::from_f64(x)
    }

    fn rotation() -> F {
        F::random_rotation(NoiseModel::cube(1, -1.0, 1.0), 0.0, vec![0.3])
    }

    #[test]
    fn cocycle_basics() {
        let fam = F::example3(0.1, 0.2).unwrap();
        let w = NoiseWindow::symmetric(fam.noise(), 1, 20);
        assert_eq!(cocycle(&fam, &w, 0, p(0.3)).unwrap(), p(0.3));
        let y = cocycle(&fam, &w, 7, p(0.3)).unwrap();
        let back = cocycle(&fam, &w.shift(7), -7, y).unwrap();
        assert!(back.dist(p(0.3)) < 1e-9);
        let rot = rotation();
        let w = NoiseWindow::symmetric(rot.noise(), 2, 4);
        let s = |i| 0.3 * w.alpha(i).unwrap()[0];
        let got = cocycle(&rot, &w, 2, p(0.0)).unwrap();
        assert!(got.dist(p(s(0) + s(1))) < 1e-15);
        assert!(matches!(cocycle(&rot, &w, 5, p(0.0)), Err(Error::Index { .. })));
    }

    #[test]
    fn orbits_agree_with_cocycle() {
        let fam = F::example3(0.1, 0.7).unwrap();
        let w = NoiseWindow::symmetric(fam.noise(), 9, 30);
        let fwd = forward_orbit(&fam, &w, -5, p(0.1), 10).unwrap();
        assert_eq!(fwd[10], cocycle(&fam, &w.shift(-5), 10, p(0.1)).unwrap());
        let bwd = backward_orbit(&fam, &w, 4, p(0.6), 6).unwrap();
        for t in 0..6 {
            let step = fam.eval_raw(w.alpha(-2 + t as i64).unwrap(), bwd[t]);
            assert!(step.dist(bwd[t + 1]) < 1e-12);
        }
    }

    #[test]
    fn rotation_pullback_never_converges() {
        let rot = rotation();
        let w = NoiseWindow::symmetric(rot.noise(), 4, 64);
        let seq = pullback_forward(&rot, &w, |_| p(0.1), 64).unwrap();
        assert!(!seq.converged);
        let one = pullback_backward(&rot, &w, |_| p(0.1), 0).unwrap();
        assert_eq!(one.terms.len(), 1);
        assert!(!one.converged);
    }

    #[test]
    fn constant_window_finds_fixed_point() {
        let fam = F::example2(1, 0, 0.1, crate::family::Sign::Plus).unwrap();
        let star = [0.5];
        let w = NoiseWindow::constant(&star, -80, 80);
        let seq = pullback_forward(&fam, &w, |_| p(0.2), 80).unwrap();
        // fixed point of x + sin(2πx)/2π + 0.05: sin(2πx) = -0.1π near x = 1/2
        let want = 0.5 + (0.1 * std::f64::consts::PI).asin() / std::f64::consts::TAU;
        assert!(seq.converged);
        assert!(seq.limit.dist(p(want)) < 1e-9, "{:?}", seq.limit);
    }

    #[test]
    fn clusters_of_synthetic_clouds() {
        let pts: Vec<_> = [0.1, 0.1001, 0.6, 0.6002, 0.995, 0.0005].iter().map(|x| p(*x)).collect();
        let c = cluster_points(&pts, 0.01);
        assert_eq!(c.count(), 3);
        assert!(c.max_diameter < 0.011);
        let grid: Vec<_> = (0..16).map(|j| p(j as f64 / 16.0)).collect();
        let c = cluster_points(&grid, 1.0 / 64.0);
        assert_eq!(c.count(), 16);
        assert!((c.hull_length - 15.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn rotation_keeps_grid_diameter() {
        let rot = rotation();
        let w = NoiseWindow::symmetric(rot.noise(), 5, 50);
        let c = pullback_grid_clusters(&rot, &w, 64, 50).unwrap();
        assert_eq!(c.count(), 64);
        assert!((c.hull_length - 63.0 / 64.0).abs() < 1e-12);
        assert!(pullback_grid_clusters(&rot, &w, 4, 10).is_err());
    }

    #[test]
    fn rotation_rate_is_zero() {
        let rot = rotation();
        let w = NoiseWindow::symmetric(rot.noise(), 6, 100);
        let rate = contraction_rate(&rot, &w, 100, 0.05).unwrap();
        assert!(rate.abs() < 1e-12, "{rate}");
    }

    #[test]
    fn synchronizing_rate_is_negative() {
        let fam = F::example3(1.0 / std::f64::consts::TAU, 0.0).unwrap();
        let w = NoiseWindow::symmetric(fam.noise(), 8, 200);
        let rate = contraction_rate(&fam, &w, 200, 0.01).unwrap();
        assert!(rate < -0.001, "{rate}");
    }
}
