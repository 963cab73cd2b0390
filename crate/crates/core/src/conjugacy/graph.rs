use super::PiecewiseCircleMap;
use crate::circle::Point;
use crate::dynamics::{derive_seed, NoiseWindow};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::scalar::Real;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Circle homeomorphism of either orientation: `inner` for `+1`, `-inner` for `-1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct OrientedCircleMap<T: Real> {
    pub orientation: i8,
    pub inner: PiecewiseCircleMap<T>,
}

impl<T: Real> OrientedCircleMap<T> {
    pub fn eval(&self, x: Point<T>) -> Point<T> {
        let y = self.inner.eval(x);
        if self.orientation < 0 {
            -y
        } else {
            y
        }
    }

    pub fn inverse(&self, y: Point<T>) -> Point<T> {
        if self.orientation < 0 {
            self.inner.inverse(-y)
        } else {
            self.inner.inverse(y)
        }
    }
}

/// Paired factor attractors `(A_F(ω⁻), A_G(ω⁻))` over shared windows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AttractorCloud<T: Real> {
    pub points: Vec<(Point<T>, Point<T>)>,
    pub windows: usize,
    /// Windows dropped because a pullback had not converged.
    pub skipped: usize,
}

/// Pullback attractor of `fam` at time 0 from two starts at time `-n_pull`.
fn pullback_attractor<T: Real>(fam: &Family<T>, w: &NoiseWindow<T>, n_pull: usize) -> Result<Option<Point<T>>> {
    let mut a = Point::zero();
    let mut b = Point::from_f64(0.5);
    for t in -(n_pull as i64)..0 {
        let alpha = w.alpha(t)?;
        a = fam.eval_raw(alpha, a);
        b = fam.eval_raw(alpha, b);
    }
    Ok((a.dist(b) < T::lit(1e-10)).then_some(a))
}

/// Factor attractors of `fam_f` and `fam_g` by `τ_m`, driven by the same
/// noise, on `n_windows` windows with seeds derived from `seed`.
pub fn coupled_attractor_graph<T: Real>(
    fam_f: &Family<T>,
    fam_g: &Family<T>,
    m: u32,
    n_windows: usize,
    n_pull: usize,
    seed: u64,
) -> Result<AttractorCloud<T>> {
    if fam_f.noise() != fam_g.noise() {
        return Err(Error::Usage("families are driven by different noise models".into()));
    }
    let ff = fam_f.factor(m)?;
    let fg = fam_g.factor(m)?;
    let found: Vec<Option<(Point<T>, Point<T>)>> = (0..n_windows)
        .into_par_iter()
        .map(|j| -> Result<_> {
            let w = NoiseWindow::generate(fam_f.noise(), derive_seed(seed, 0xc100 + j as u64), n_pull, 0);
            let a = pullback_attractor(&ff, &w, n_pull)?;
            let b = pullback_attractor(&fg, &w, n_pull)?;
            Ok(a.zip(b))
        })
        .collect::<Result<_>>()?;
    let skipped = found.iter().filter(|p| p.is_none()).count();
    Ok(AttractorCloud {
        points: found.into_iter().flatten().collect(),
        windows: n_windows,
        skipped,
    })
}

/// Outcome of [`graph_homeomorphism_test`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", tag = "result", rename_all = "snake_case")]
pub enum GraphTest<T: Real> {
    Curve {
        orientation: i8,
        map: OrientedCircleMap<T>,
        fit_residual: T,
    },
    NotACurve {
        fit_residual: T,
        winding: T,
    },
}

impl<T: Real> GraphTest<T> {
    pub fn fit_residual(&self) -> T {
        match self {
            GraphTest::Curve { fit_residual, .. } | GraphTest::NotACurve { fit_residual, .. } => *fit_residual,
        }
    }
}

/// Tests whether a point cloud on the torus lies on the graph of a circle
/// homeomorphism.
///
/// Points are sorted by `x`. The `y` steps between neighbours must wind
/// exactly once in one direction, and no step may go backwards by more than
/// `fit_tol`.
pub fn graph_homeomorphism_test<T: Real>(cloud: &[(Point<T>, Point<T>)], fit_tol: f64) -> Result<GraphTest<T>> {
    if cloud.len() < 100 {
        return Err(Error::Precondition(format!(
            "graph test needs at least 100 points, got {}",
            cloud.len()
        )));
    }
    let mut pts = cloud.to_vec();
    pts.sort_by(|a, b| a.0.value().partial_cmp(&b.0.value()).expect("finite"));
    let n = pts.len();
    let steps: Vec<T> = (0..n).map(|j| pts[j].1.signed_offset(pts[(j + 1) % n].1)).collect();
    let winding = steps.iter().fold(T::zero(), |a, s| a + *s);
    let o = winding.round();
    if o.abs() != T::one() {
        let spread = steps.iter().fold(T::zero(), |a, s| a.max(s.abs()));
        return Ok(GraphTest::NotACurve {
            fit_residual: spread,
            winding,
        });
    }
    let fit = steps.iter().fold(T::zero(), |a, s| a.max(-*s * o));
    if fit >= T::lit(fit_tol) {
        return Ok(GraphTest::NotACurve {
            fit_residual: fit,
            winding,
        });
    }
    let orientation: i8 = if o > T::zero() { 1 } else { -1 };
    let mut nodes: Vec<(Point<T>, Point<T>)> = Vec::with_capacity(n);
    for (x, y) in pts {
        let y = if orientation < 0 { -y } else { y };
        match nodes.last() {
            Some(last) if last.0.dplus(x) <= T::zero() || last.1.signed_offset(y) <= T::zero() => {}
            _ => nodes.push((x, y)),
        }
    }
    while nodes.len() > 1 && PiecewiseCircleMap::new(&nodes).is_err() {
        nodes.pop();
    }
    Ok(GraphTest::Curve {
        orientation,
        map: OrientedCircleMap {
            orientation,
            inner: PiecewiseCircleMap::new(&nodes)?,
        },
        fit_residual: fit,
    })
}

/// A lift `κ` of a factor conjugacy, `z_m(κ) = K`, with its rotational offset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LiftedConjugacy<T: Real> {
    /// `κ` already includes `τ_m^offset`.
    pub kappa: OrientedCircleMap<T>,
    pub offset: u32,
    pub residual: T,
    /// Residual of every offset, for the record.
    pub residuals: Vec<T>,
}

/// Lifts a factor conjugacy `K` to `κ` with `z_m(κ) = K` and tests the `m`
/// rotational offsets `τ_m^i ∘ κ` for `κ ∘ f_α = g_α ∘ κ` over a grid and
/// sampled `α`. Returns the best offset with residual below `tol`.
///
/// An orientation-reversing `K` is refused for `m ≥ 3`.
pub fn lift_factor_conjugacy<T: Real>(
    fam_f: &Family<T>,
    fam_g: &Family<T>,
    m: u32,
    k_map: &OrientedCircleMap<T>,
    grid: usize,
    tol: f64,
    n_alpha: usize,
) -> Result<Option<LiftedConjugacy<T>>> {
    if m == 0 {
        return Err(Error::Parameter("factor order must be positive".into()));
    }
    if m >= 3 && k_map.orientation < 0 {
        return Ok(None);
    }
    let grid = grid.max(16);
    let mf = T::lit(m as f64);
    let o = T::lit(k_map.orientation as f64);
    let xs: Vec<Point<T>> = (0..=grid)
        .map(|j| Point::new(T::from_count(j) / T::from_count(grid)))
        .collect();
    let k0 = k_map.eval(Point::zero());
    let branch = T::lit(k0.sector(m) as f64);
    let mut lifted = Vec::with_capacity(grid + 1);
    lifted.push(k0.value());
    let mut prev = k0;
    for x in &xs[1..] {
        // K(m·x) along the grid, unwrapped
        let y = k_map.eval(Point::new(mf * x.value()));
        let step = prev.signed_offset(y);
        if step * o < T::lit(-1e-12) || step.abs() > T::lit(0.25) {
            return Err(Error::Numeric(format!(
                "branch tracking jumped by {step} at x = {}; refine the grid",
                x.value()
            )));
        }
        lifted.push(*lifted.last().expect("nonempty") + step);
        prev = y;
    }
    let total = lifted[grid] - lifted[0];
    if (total - o * mf).abs() > T::lit(1e-6) {
        return Err(Error::Numeric(format!(
            "lifted factor map has degree {total}, expected {}",
            o * mf
        )));
    }
    // κ̃(x) = (K̃(m x) + j) / m; store o·κ̃ so the inner map increases
    let mut nodes: Vec<(Point<T>, Point<T>)> = Vec::with_capacity(grid);
    for j in 0..grid {
        let v = Point::new(o * (lifted[j] + branch) / mf);
        match nodes.last() {
            Some(last) if last.1.signed_offset(v) <= T::zero() => {}
            _ => nodes.push((xs[j], v)),
        }
    }
    let inner = PiecewiseCircleMap::new(&nodes)?;
    let base = OrientedCircleMap {
        orientation: k_map.orientation,
        inner,
    };
    let probes = fam_f.noise().probe_points(n_alpha, 0x11f7);
    let residuals: Vec<T> = (0..m)
        .into_par_iter()
        .map(|i| {
            let shift = T::lit(i as f64) / mf;
            let mut worst = T::zero();
            for a in &probes {
                for x in &xs[..grid] {
                    let lhs = base.eval(fam_f.eval_raw(a, *x)).shift(shift);
                    let rhs = fam_g.eval_raw(a, base.eval(*x).shift(shift));
                    worst = worst.max(lhs.dist(rhs));
                }
            }
            worst
        })
        .collect();
    let (best, res) = residuals
        .iter()
        .enumerate()
        .fold((0, T::infinity()), |acc, (i, r)| if *r < acc.1 { (i, *r) } else { acc });
    if res >= T::lit(tol) {
        return Ok(None);
    }
    // fold τ_m^best into κ
    let shift = T::lit(best as f64) / mf;
    let shifted: Vec<(Point<T>, Point<T>)> = base
        .inner
        .nodes()
        .into_iter()
        .map(|(x, y)| (x, if base.orientation < 0 { y.shift(-shift) } else { y.shift(shift) }))
        .collect();
    Ok(Some(LiftedConjugacy {
        kappa: OrientedCircleMap {
            orientation: base.orientation,
            inner: PiecewiseCircleMap::new(&shifted)?,
        },
        offset: best as u32,
        residual: res,
        residuals,
    }))
}
