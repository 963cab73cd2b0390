//! Explicit random conjugacies `h_ω` to the canonical maps `g_{k,l}`, their
//! residuals, and the coupled-attractor test for deterministic conjugacy of
//! factor systems.

mod anchors;
mod graph;
mod pwl;

pub use anchors::{
    anchor_epsilon, anchor_sequences, boundary_anchor, AnchorCase, AnchorParams, AnchorSequences,
};
pub use graph::{
    coupled_attractor_graph, graph_homeomorphism_test, lift_factor_conjugacy, AttractorCloud,
    GraphTest, LiftedConjugacy, OrientedCircleMap,
};
pub use pwl::PiecewiseCircleMap;

use crate::circle::{Arc, Point};
use crate::dynamics::NoiseWindow;
use crate::error::{Error, Result};
use crate::family::Family;
use crate::scalar::Real;
use crate::structure::MinimalStructure;
use anchors::push_to;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConjugacyParams {
    /// Largest `|n|` of pullback interval stored.
    pub n_h: usize,
    /// Interior sample points per pullback interval.
    pub n_sub: usize,
    /// Levels stop once consecutive nodes come closer than this in either coordinate.
    pub gap_floor: f64,
    pub anchors: AnchorParams,
}

impl Default for ConjugacyParams {
    fn default() -> Self {
        ConjugacyParams {
            n_h: 40,
            n_sub: 8,
            gap_floor: 1e-14,
            anchors: AnchorParams::default(),
        }
    }
}

/// `h_ω` and `h_{θω}` for one window.
#[derive(Clone, Debug)]
pub struct Conjugacy<T: Real> {
    pub k: u32,
    pub l: u32,
    pub h0: PiecewiseCircleMap<T>,
    pub h1: PiecewiseCircleMap<T>,
    /// Per component of `h0`: stored levels `(u_min, u_max, v_min, v_max)`.
    pub levels: Vec<(i64, i64, i64, i64)>,
    pub anchors: AnchorSequences<T>,
}

/// Conjugacy summary for export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyReport {
    pub target: (u32, u32),
    pub seed: u64,
    pub half_width: usize,
    pub node_count: usize,
    pub residual_sup: f64,
    /// `(N, residual)` pairs on matched seeds.
    pub trend: Vec<(usize, f64)>,
}

/// Map on the right-hand side of the conjugacy equation.
#[derive(Clone, Copy)]
pub enum Target<'a, T: Real> {
    Canonical { k: u32, l: u32 },
    Family(&'a Family<T>),
}

fn canonical_step<T: Real>(k: u32, l: u32, y: Point<T>) -> Point<T> {
    let kk = T::lit(k as f64);
    let tau = T::lit(std::f64::consts::TAU);
    let t = y.value();
    Point::new(t + (tau * kk * t).sin() / (tau * kk) + T::lit(l as f64) / kk)
}

/// `sup_x dist(h_{θω}(f_{α_0}(x)), g(h_ω(x)))` over `grid` equally spaced points.
pub fn conjugation_residual<T: Real>(
    fam: &Family<T>,
    target: Target<'_, T>,
    window: &NoiseWindow<T>,
    h0: &PiecewiseCircleMap<T>,
    h1: &PiecewiseCircleMap<T>,
    grid: usize,
) -> Result<T> {
    let a0 = window.alpha(0)?;
    let mut worst = T::zero();
    for j in 0..grid.max(1) {
        let x = Point::new(T::from_count(j) / T::from_count(grid.max(1)));
        let lhs = h1.eval(fam.eval_raw(a0, x));
        let y = h0.eval(x);
        let rhs = match target {
            Target::Canonical { k, l } => canonical_step(k, l, y),
            Target::Family(g) => g.eval_raw(a0, y),
        };
        worst = worst.max(lhs.dist(rhs));
    }
    Ok(worst)
}

struct Side<'a, T: Real> {
    fam: &'a Family<T>,
    window: &'a NoiseWindow<T>,
    anchors: &'a AnchorSequences<T>,
    g: Family<T>,
    n_sub: usize,
    floor: T,
}

#[derive(Clone, Copy, PartialEq)]
enum Travel {
    Anticlockwise,
    Clockwise,
}

fn advances<T: Real>(prev: Point<T>, node: Point<T>, limit: Point<T>, travel: Travel, floor: T) -> bool {
    match travel {
        Travel::Anticlockwise => {
            Arc::new(prev, limit).contains_open(node)
                && prev.dplus(node) > floor
                && node.dplus(limit) > floor
        }
        Travel::Clockwise => {
            Arc::new(limit, prev).contains_open(node)
                && node.dplus(prev) > floor
                && limit.dplus(node) > floor
        }
    }
}

impl<'a, T: Real> Side<'a, T> {
    /// Nodes of level `n` with `t = 0 .. n_sub` over `n_sub + 1`, in order of
    /// increasing `t`. `upper` selects the clockwise (`v`) family.
    fn level(&self, i: usize, s: i64, n: i64, base_vals: &[Point<T>], upper: bool) -> Result<Vec<(Point<T>, Point<T>)>> {
        let c = self.anchors.class_of(i, s);
        let m = s - n;
        let (x0, prev) = if upper {
            (self.anchors.v_at(c, m)?, self.anchors.v_at(c, m - 1)?)
        } else {
            (self.anchors.u_at(c, m)?, self.anchors.u_at(c, m - 1)?)
        };
        let end = self.fam.eval_raw(self.window.alpha(m - 1)?, prev);
        let len = if upper { end.dplus(x0) } else { x0.dplus(end) };
        let mut out = Vec::with_capacity(self.n_sub + 1);
        for (j, val) in base_vals.iter().enumerate() {
            let t = T::from_count(j) / T::from_count(self.n_sub + 1);
            let at_base = if upper { x0.shift(-t * len) } else { x0.shift(t * len) };
            out.push((push_to(self.fam, self.window, m, s, at_base)?, *val));
        }
        Ok(out)
    }

    /// Nodes travelling from level 0 toward `limit` through levels `n = 0, ±1, …`.
    #[allow(clippy::too_many_arguments)]
    fn travel(
        &self,
        i: usize,
        s: i64,
        base_vals: &[Point<T>],
        upper: bool,
        forward: bool,
        limit: (Point<T>, Point<T>),
        n_h: i64,
    ) -> Result<(Vec<(Point<T>, Point<T>)>, i64)> {
        let travel = match (upper, forward) {
            (false, true) | (true, false) => Travel::Anticlockwise,
            _ => Travel::Clockwise,
        };
        let mut vals = base_vals.to_vec();
        let mut out: Vec<(Point<T>, Point<T>)> = Vec::new();
        let mut last_level = if forward { -1 } else { 0 };
        let mut n: i64 = if forward { 0 } else { -1 };
        loop {
            if n.abs() > n_h {
                break;
            }
            let m = s - n;
            if m - 1 < self.anchors.lo || m > self.anchors.hi {
                break;
            }
            if forward {
                if n > 0 {
                    for v in vals.iter_mut() {
                        *v = canonical_step(self.anchors.k, 0, *v);
                    }
                }
            } else {
                for v in vals.iter_mut() {
                    *v = self.g.eval_inverse_raw(&[], *v)?;
                }
            }
            let mut nodes = self.level(i, s, n, &vals, upper)?;
            if !forward {
                nodes.reverse();
            }
            let mut complete = true;
            for node in nodes {
                let ok = match out.last() {
                    None => true,
                    Some(prev) => {
                        advances(prev.0, node.0, limit.0, travel, self.floor)
                            && advances(prev.1, node.1, limit.1, travel, self.floor)
                    }
                };
                let ok = ok
                    && advances_limit(node.0, limit.0, travel, self.floor)
                    && advances_limit(node.1, limit.1, travel, self.floor);
                if !ok {
                    complete = false;
                    break;
                }
                out.push(node);
            }
            if !complete {
                break;
            }
            last_level = n;
            n += if forward { 1 } else { -1 };
        }
        Ok((out, last_level))
    }
}

fn advances_limit<T: Real>(node: Point<T>, limit: Point<T>, travel: Travel, floor: T) -> bool {
    match travel {
        Travel::Anticlockwise => node.dplus(limit) > floor && node.dplus(limit) < T::lit(0.999_999),
        Travel::Clockwise => limit.dplus(node) > floor && limit.dplus(node) < T::lit(0.999_999),
    }
}

/// `h` at `θ^s ω` from anchors computed once on the window.
fn build_h<T: Real>(
    fam: &Family<T>,
    window: &NoiseWindow<T>,
    anchors: &AnchorSequences<T>,
    s: i64,
    params: &ConjugacyParams,
) -> Result<(PiecewiseCircleMap<T>, Vec<(i64, i64, i64, i64)>)> {
    let k = anchors.k as usize;
    let kf = T::lit(k as f64);
    let side = Side {
        fam,
        window,
        anchors,
        g: Family::canonical(anchors.k, 0)?,
        n_sub: params.n_sub.max(1),
        floor: T::lit(params.gap_floor),
    };
    let n_h = params.n_h as i64;
    let mut nodes = Vec::new();
    let mut levels = Vec::with_capacity(k);
    for i in 0..k {
        let fi = T::lit(i as f64);
        let r_prev = (anchors.repeller((i + k - 1) % k, s)?, Point::new(fi / kf));
        let a = (anchors.attractor(i, s)?, Point::new((fi + fi + T::one()) / (kf + kf)));
        let r = (anchors.repeller(i, s)?, Point::new((fi + T::one()) / kf));
        let four = T::lit(4.0);
        let cu = Point::new((four * fi + T::one()) / (four * kf));
        let cv = Point::new((four * fi + T::lit(3.0)) / (four * kf));
        let du = cu.dplus(canonical_step(anchors.k, 0, cu));
        let dv = canonical_step(anchors.k, 0, cv).dplus(cv);
        let steps = side.n_sub + 1;
        let u_vals: Vec<Point<T>> = (0..steps)
            .map(|j| cu.shift(T::from_count(j) / T::from_count(steps) * du))
            .collect();
        let v_vals: Vec<Point<T>> = (0..steps)
            .map(|j| cv.shift(-(T::from_count(j) / T::from_count(steps)) * dv))
            .collect();
        let (u_up, u_hi) = side.travel(i, s, &u_vals, false, true, a, n_h)?;
        let (u_down, u_lo) = side.travel(i, s, &u_vals, false, false, r_prev, n_h)?;
        let (v_up, v_hi) = side.travel(i, s, &v_vals, true, true, a, n_h)?;
        let (v_down, v_lo) = side.travel(i, s, &v_vals, true, false, r, n_h)?;
        if u_hi < 1 || v_hi < 1 || u_lo > -1 || v_lo > -1 {
            return Err(Error::Construction(format!(
                "component {i}: pullback intervals collapse before two levels (u {u_lo}..{u_hi}, v {v_lo}..{v_hi}); increase n_max"
            )));
        }
        nodes.push(r_prev);
        nodes.extend(u_down.into_iter().rev());
        nodes.extend(u_up);
        nodes.push(a);
        nodes.extend(v_up.into_iter().rev());
        nodes.extend(v_down);
        levels.push((u_lo, u_hi, v_lo, v_hi));
    }
    Ok((PiecewiseCircleMap::new(&nodes)?, levels))
}

/// Builds `h_ω` and `h_{θω}` conjugating `fam` to `g_{k,l}` on `window`.
pub fn build_conjugacy<T: Real>(
    fam: &Family<T>,
    structure: &MinimalStructure<T>,
    window: &NoiseWindow<T>,
    params: &ConjugacyParams,
) -> Result<Conjugacy<T>> {
    let anchors = anchor_sequences(fam, structure, window, &params.anchors)?;
    let (h0, levels) = build_h(fam, window, &anchors, 0, params)?;
    let (h1, _) = build_h(fam, window, &anchors, 1, params)?;
    Ok(Conjugacy {
        k: anchors.k,
        l: anchors.l,
        h0,
        h1,
        levels,
        anchors,
    })
}

/// Residual of the conjugacy against its own target on a symmetric window
/// of half-width `n` for each `n` in `half_widths`.
pub fn residual_trend<T: Real>(
    fam: &Family<T>,
    structure: &MinimalStructure<T>,
    seed: u64,
    half_widths: &[usize],
    params: &ConjugacyParams,
    grid: usize,
) -> Result<Vec<(usize, T)>> {
    half_widths
        .iter()
        .map(|&n| {
            let w = NoiseWindow::symmetric(fam.noise(), seed, n);
            let c = build_conjugacy(fam, structure, &w, params)?;
            let r = conjugation_residual(
                fam,
                Target::Canonical { k: c.k, l: c.l },
                &w,
                &c.h0,
                &c.h1,
                grid,
            )?;
            Ok((n, r))
        })
        .collect()
}
