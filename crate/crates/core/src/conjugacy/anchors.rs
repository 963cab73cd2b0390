use crate::circle::Point;
use crate::dynamics::{derive_seed, perturb_sequence, NoiseWindow, Orientation};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::scalar::Real;
use crate::structure::{AntonovCase, MinimalStructure};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorCase {
    /// Minimal set is a union of `k` arcs; anchors are its boundary points.
    NonMinimal,
    /// Whole circle minimal and contractive; anchors come from `ε`-arcs
    /// around the attractor.
    Contractive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnchorParams {
    /// Two orbits count as converged once closer than this.
    pub agree_tol: f64,
    /// Steps with `dist(f_n(x_n), x_{n+1})` at most this are treated as exact.
    pub perturb_tol: f64,
    /// Probe windows for the `ε` of the contractive case.
    pub eps_windows: usize,
}

impl Default for AnchorParams {
    fn default() -> Self {
        AnchorParams {
            agree_tol: 1e-12,
            perturb_tol: 1e-12,
            eps_windows: 32,
        }
    }
}

/// Perturbed anchor sequences on one noise window.
///
/// `u[c][m - lo]` is the anticlockwise perturbation at time `m` of the class
/// whose component label at time 0 is `c` (label `c + m·l` at time `m`);
/// `v` is the clockwise analogue. `attractors[m - lo][i]` and
/// `repellers[m - lo][i]` are indexed by component label.
#[derive(Clone, Debug)]
pub struct AnchorSequences<T: Real> {
    pub case: AnchorCase,
    pub k: u32,
    pub l: u32,
    pub lo: i64,
    pub hi: i64,
    pub u: Vec<Vec<Point<T>>>,
    pub v: Vec<Vec<Point<T>>>,
    /// `u` and `v` before perturbation.
    pub raw_u: Vec<Vec<Point<T>>>,
    pub raw_v: Vec<Vec<Point<T>>>,
    pub attractors: Vec<Vec<Point<T>>>,
    pub repellers: Vec<Vec<Point<T>>>,
    pub epsilon: Option<T>,
}

impl<T: Real> AnchorSequences<T> {
    fn at(&self, seq: &[Vec<Point<T>>], c: usize, m: i64) -> Result<Point<T>> {
        if m < self.lo || m > self.hi {
            return Err(Error::Index {
                index: m,
                lo: self.lo,
                hi: self.hi + 1,
            });
        }
        Ok(seq[c][(m - self.lo) as usize])
    }

    pub fn u_at(&self, c: usize, m: i64) -> Result<Point<T>> {
        self.at(&self.u, c, m)
    }

    pub fn v_at(&self, c: usize, m: i64) -> Result<Point<T>> {
        self.at(&self.v, c, m)
    }

    /// `a_i(θ^m ω)`.
    pub fn attractor(&self, i: usize, m: i64) -> Result<Point<T>> {
        self.check(m)?;
        Ok(self.attractors[(m - self.lo) as usize][i % self.k as usize])
    }

    /// `r_i(θ^m ω)`.
    pub fn repeller(&self, i: usize, m: i64) -> Result<Point<T>> {
        self.check(m)?;
        Ok(self.repellers[(m - self.lo) as usize][i % self.k as usize])
    }

    fn check(&self, m: i64) -> Result<()> {
        if m < self.lo || m > self.hi {
            return Err(Error::Index {
                index: m,
                lo: self.lo,
                hi: self.hi + 1,
            });
        }
        Ok(())
    }

    /// Class index of component label `i` at time `s`.
    pub fn class_of(&self, i: usize, s: i64) -> usize {
        let k = self.k as i64;
        (i as i64 - s * self.l as i64).rem_euclid(k) as usize
    }

    /// Strict two-sided sequence `ũ^i_n(θ^s ω)` for `n` in `levels`, built
    /// from the perturbed anchors by the cocycle. Returns `(n, point)` pairs.
    pub fn strict_u(
        &self,
        fam: &Family<T>,
        window: &NoiseWindow<T>,
        i: usize,
        s: i64,
        levels: std::ops::RangeInclusive<i64>,
    ) -> Result<Vec<(i64, Point<T>)>> {
        let c = self.class_of(i, s);
        levels
            .map(|n| Ok((n, push_to(fam, window, s - n, s, self.u_at(c, s - n)?)?)))
            .collect()
    }

    /// Clockwise counterpart of [`strict_u`](Self::strict_u).
    pub fn strict_v(
        &self,
        fam: &Family<T>,
        window: &NoiseWindow<T>,
        i: usize,
        s: i64,
        levels: std::ops::RangeInclusive<i64>,
    ) -> Result<Vec<(i64, Point<T>)>> {
        let c = self.class_of(i, s);
        levels
            .map(|n| Ok((n, push_to(fam, window, s - n, s, self.v_at(c, s - n)?)?)))
            .collect()
    }
}

/// Moves `x` from time `from` to time `to` along the cocycle.
pub(crate) fn push_to<T: Real>(
    fam: &Family<T>,
    window: &NoiseWindow<T>,
    from: i64,
    to: i64,
    x: Point<T>,
) -> Result<Point<T>> {
    let mut y = x;
    if from <= to {
        for t in from..to {
            y = fam.eval_raw(window.alpha(t)?, y);
        }
    } else {
        for t in (to..from).rev() {
            y = fam.eval_inverse_raw(window.alpha(t)?, y)?;
        }
    }
    Ok(y)
}

/// Forward orbits over the whole window, one row per start, times `lo..=hi`.
fn forward_rows<T: Real>(
    fam: &Family<T>,
    window: &NoiseWindow<T>,
    starts: &[Point<T>],
) -> Result<Vec<Vec<Point<T>>>> {
    let (lo, hi) = window.span();
    starts
        .iter()
        .map(|x| {
            let mut row = Vec::with_capacity((hi - lo + 1) as usize);
            let mut y = *x;
            row.push(y);
            for t in lo..hi {
                y = fam.eval_raw(window.alpha(t)?, y);
                row.push(y);
            }
            Ok(row)
        })
        .collect()
}

fn backward_rows<T: Real>(
    fam: &Family<T>,
    window: &NoiseWindow<T>,
    starts: &[Point<T>],
) -> Result<Vec<Vec<Point<T>>>> {
    let (lo, hi) = window.span();
    let len = (hi - lo + 1) as usize;
    starts
        .iter()
        .map(|x| {
            let mut row = vec![*x; len];
            let mut y = *x;
            for t in (lo..hi).rev() {
                y = fam.eval_inverse_raw(window.alpha(t)?, y)?;
                row[(t - lo) as usize] = y;
            }
            Ok(row)
        })
        .collect()
}

/// First index from which the two rows agree to `tol` until the end.
fn agree_from<T: Real>(a: &[Point<T>], b: &[Point<T>], tol: T) -> Option<usize> {
    let last_bad = (0..a.len()).rev().find(|&j| a[j].dist(b[j]) > tol);
    match last_bad {
        None => Some(0),
        Some(j) if j + 1 < a.len() => Some(j + 1),
        _ => None,
    }
}

/// Last index up to which the two rows agree to `tol` from the start.
fn agree_until<T: Real>(a: &[Point<T>], b: &[Point<T>], tol: T) -> Option<usize> {
    match (0..a.len()).find(|&j| a[j].dist(b[j]) > tol) {
        None => Some(a.len() - 1),
        Some(0) => None,
        Some(j) => Some(j - 1),
    }
}

/// Attractor and repeller of a contractive family along the window, with
/// the time range on which each has converged.
pub(crate) struct RandomFixedPoints<T: Real> {
    pub attractor: Vec<Point<T>>,
    pub repeller: Vec<Point<T>>,
    /// Attractor converged on `[a_from, hi]`; repeller on `[lo, r_until]`.
    pub a_from: i64,
    pub r_until: i64,
}

fn first_agreeing<T: Real>(rows: &[Vec<Point<T>>], tol: T, forward: bool) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for a in 0..rows.len() {
        for b in a + 1..rows.len() {
            let cand = if forward {
                agree_from(&rows[a], &rows[b], tol)
            } else {
                agree_until(&rows[a], &rows[b], tol)
            };
            if let Some(j) = cand {
                let better = match best {
                    None => true,
                    Some((_, bj)) => (forward && j < bj) || (!forward && j > bj),
                };
                if better {
                    best = Some((a, j));
                }
            }
        }
    }
    best
}

pub(crate) fn random_fixed_points<T: Real>(
    fam: &Family<T>,
    window: &NoiseWindow<T>,
    tol: T,
) -> Result<RandomFixedPoints<T>> {
    let (lo, _) = window.span();
    let starts: Vec<Point<T>> = [0.0, 1.0 / 3.0, 2.0 / 3.0].iter().map(|x| Point::from_f64(*x)).collect();
    let fwd = forward_rows(fam, window, &starts)?;
    let bwd = backward_rows(fam, window, &starts)?;
    let (ra, ja) = first_agreeing(&fwd, tol, true).ok_or_else(|| {
        Error::Construction("forward orbits never synchronise on this window; increase n_max (the window half-width)".into())
    })?;
    let (rr, jr) = first_agreeing(&bwd, tol, false).ok_or_else(|| {
        Error::Construction("backward orbits never synchronise on this window; increase n_max (the window half-width)".into())
    })?;
    Ok(RandomFixedPoints {
        attractor: fwd[ra].clone(),
        repeller: bwd[rr].clone(),
        a_from: lo + ja as i64,
        r_until: lo + jr as i64,
    })
}

/// `ε` for the contractive case: half the median of `d₊(r₀, a₀)` over
/// probe windows derived from `seed`.
pub fn anchor_epsilon<T: Real>(
    fam: &Family<T>,
    seed: u64,
    half_width: usize,
    n_windows: usize,
    tol: T,
) -> Result<T> {
    let mut d: Vec<T> = (0..n_windows.max(1))
        .into_par_iter()
        .map(|j| -> Result<T> {
            let w = NoiseWindow::symmetric(fam.noise(), derive_seed(seed, 0xe000 + j as u64), half_width);
            let fp = random_fixed_points(fam, &w, tol)?;
            let (lo, _) = w.span();
            let at0 = (-lo) as usize;
            Ok(fp.repeller[at0].dplus(fp.attractor[at0]))
        })
        .collect::<Result<_>>()?;
    d.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    Ok(d[d.len() / 2] / T::lit(2.0))
}

/// Anchor sequences of `fam` on `window`: boundary anchors of the minimal
/// arcs, or `ε`-arc anchors for a contractive minimal family, perturbed so
/// that the pulled-back sequences are strictly monotone.
pub fn anchor_sequences<T: Real>(
    fam: &Family<T>,
    structure: &MinimalStructure<T>,
    window: &NoiseWindow<T>,
    params: &AnchorParams,
) -> Result<AnchorSequences<T>> {
    if fam.is_noise_independent() {
        return Err(Error::Genericity(
            "the maps do not depend on the noise, so every anchor sequence is an exact orbit and the family is degenerate".into(),
        ));
    }
    let tol = T::lit(params.agree_tol);
    let ptol = T::lit(params.perturb_tol);
    let (wlo, whi) = window.span();
    if whi - wlo < 8 || wlo > -2 || whi < 2 {
        return Err(Error::Construction(format!(
            "window [{wlo}, {whi}) is too short for anchor sequences; increase n_max (the window half-width)"
        )));
    }
    if structure.whole_circle {
        if structure.antonov_case != AntonovCase::Contractive {
            return Err(Error::Precondition(format!(
                "explicit conjugacy needs a contractive family without symmetry (case is {:?})",
                structure.antonov_case
            )));
        }
        contractive_anchors(fam, window, params, tol, ptol)
    } else {
        nonminimal_anchors(fam, structure, window, tol, ptol)
    }
}

fn perturb_on<T: Real>(
    fam: &Family<T>,
    window: &NoiseWindow<T>,
    lo: i64,
    xs: &[Point<T>],
    orientation: Orientation,
    tol: T,
) -> Result<Vec<Point<T>>> {
    // xs covers lo..=hi with hi < window end, so every α used exists
    let alphas: Vec<&[T]> = (0..xs.len())
        .map(|j| window.alpha(lo + j as i64))
        .collect::<Result<_>>()?;
    perturb_sequence(|n, x| fam.eval_raw(alphas[n], x), xs, None, orientation, tol)
}

fn nonminimal_anchors<T: Real>(
    fam: &Family<T>,
    s: &MinimalStructure<T>,
    window: &NoiseWindow<T>,
    tol: T,
    ptol: T,
) -> Result<AnchorSequences<T>> {
    let k = s.k as usize;
    let l = s.l as i64;
    let (wlo, whi) = window.span();
    let label = |c: usize, m: i64| (c as i64 + m * l).rem_euclid(k as i64) as usize;

    // attractor of class c: forward orbits of both boundary points of its
    // component at the window start
    let mut a_from = wlo;
    let mut att_rows = vec![Vec::new(); k];
    for c in 0..k {
        let g = &s.components[label(c, wlo)];
        let rows = forward_rows(fam, window, &[g.start, g.end])?;
        let j = agree_from(&rows[0], &rows[1], tol).ok_or_else(|| {
            Error::Construction("attractor orbits never meet on this window; increase n_max (the window half-width)".into())
        })?;
        a_from = a_from.max(wlo + j as i64);
        att_rows[c] = rows[0].clone();
    }
    // repeller of class c at the window end sits in the gap after its component
    let mut r_until = whi;
    let mut rep_rows = vec![Vec::new(); k];
    for c in 0..k {
        let i = label(c, whi);
        let gap_start = s.components[i].end;
        let gap_end = s.components[(i + 1) % k].start;
        let rows = backward_rows(fam, window, &[gap_start, gap_end])?;
        let j = agree_until(&rows[0], &rows[1], tol).ok_or_else(|| {
            Error::Construction("repeller orbits never meet on this window; increase n_max (the window half-width)".into())
        })?;
        r_until = r_until.min(wlo + j as i64);
        rep_rows[c] = rows[0].clone();
    }
    let (lo, hi) = (wlo, whi - 1);
    let len = (hi - lo + 1) as usize;
    let mut u = Vec::with_capacity(k);
    let mut v = Vec::with_capacity(k);
    let mut raw_u = Vec::with_capacity(k);
    let mut raw_v = Vec::with_capacity(k);
    for c in 0..k {
        let xs: Vec<Point<T>> = (lo..=hi).map(|m| s.components[label(c, m)].start).collect();
        let ys: Vec<Point<T>> = (lo..=hi).map(|m| s.components[label(c, m)].end).collect();
        u.push(perturb_on(fam, window, lo, &xs, Orientation::Anticlockwise, ptol)?);
        v.push(perturb_on(fam, window, lo, &ys, Orientation::Clockwise, ptol)?);
        raw_u.push(xs);
        raw_v.push(ys);
    }
    let mut attractors = vec![vec![Point::zero(); k]; len];
    let mut repellers = vec![vec![Point::zero(); k]; len];
    for m in lo..=hi {
        let j = (m - wlo) as usize;
        for c in 0..k {
            // row c started with label(c, wlo) at wlo, so at m it carries label(c, m)
            attractors[(m - lo) as usize][label(c, m)] = att_rows[c][j];
            // backward row c carries label(c, whi) at whi; the gap index
            // moves back by l per step
            let shift = (whi - m) * l;
            let lab = (label(c, whi) as i64 - shift).rem_euclid(k as i64) as usize;
            repellers[(m - lo) as usize][lab] = rep_rows[c][j];
        }
    }
    trim(
        AnchorSequences {
            case: AnchorCase::NonMinimal,
            k: s.k,
            l: s.l,
            lo,
            hi,
            u,
            v,
            raw_u,
            raw_v,
            attractors,
            repellers,
            epsilon: None,
        },
        a_from,
        r_until,
    )
}

/// Restricts the anchors to the times where attractor and repeller have converged.
fn trim<T: Real>(mut a: AnchorSequences<T>, a_from: i64, r_until: i64) -> Result<AnchorSequences<T>> {
    let lo = a.lo.max(a_from);
    let hi = a.hi.min(r_until);
    if lo > -1 || hi < 2 {
        return Err(Error::Construction(format!(
            "random fixed points converge only on [{lo}, {hi}], which misses times 0 and 1; increase n_max (the window half-width)"
        )));
    }
    let cut = |rows: &mut Vec<Point<T>>| {
        let from = (lo - a.lo) as usize;
        let to = (hi - a.lo) as usize;
        *rows = rows[from..=to].to_vec();
    };
    a.u.iter_mut().for_each(cut);
    a.v.iter_mut().for_each(cut);
    a.raw_u.iter_mut().for_each(cut);
    a.raw_v.iter_mut().for_each(cut);
    let from = (lo - a.lo) as usize;
    let to = (hi - a.lo) as usize;
    a.attractors = a.attractors[from..=to].to_vec();
    a.repellers = a.repellers[from..=to].to_vec();
    a.lo = lo;
    a.hi = hi;
    Ok(a)
}

fn contractive_anchors<T: Real>(
    fam: &Family<T>,
    window: &NoiseWindow<T>,
    params: &AnchorParams,
    tol: T,
    ptol: T,
) -> Result<AnchorSequences<T>> {
    let (wlo, whi) = window.span();
    let half = ((whi - wlo) / 2).max(8) as usize;
    let eps = anchor_epsilon(fam, window.seed(), half, params.eps_windows, tol)?;
    let fp = random_fixed_points(fam, window, tol)?;
    let (lo, hi) = (fp.a_from.max(wlo), whi - 1);
    if lo > -1 {
        return Err(Error::Construction(
            "attractor has not converged by time 0; increase n_max (the window half-width)".into(),
        ));
    }
    let a = |m: i64| fp.attractor[(m - wlo) as usize];
    let len = (hi - lo + 1) as usize;
    // U_m: left end of the intersection of ε-arcs pulled back from the future
    let mut us = vec![Point::zero(); len];
    let mut vs = vec![Point::zero(); len];
    us[len - 1] = a(hi).shift(-eps);
    vs[len - 1] = a(hi).shift(eps);
    for m in (lo..hi).rev() {
        let j = (m - lo) as usize;
        let alpha = window.alpha(m)?;
        let own_u = a(m).shift(-eps);
        let back_u = fam.eval_inverse_raw(alpha, us[j + 1])?;
        us[j] = if back_u.dplus(a(m)) < own_u.dplus(a(m)) { back_u } else { own_u };
        let own_v = a(m).shift(eps);
        let back_v = fam.eval_inverse_raw(alpha, vs[j + 1])?;
        vs[j] = if a(m).dplus(back_v) < a(m).dplus(own_v) { back_v } else { own_v };
    }
    let u = vec![perturb_on(fam, window, lo, &us, Orientation::Anticlockwise, ptol)?];
    let v = vec![perturb_on(fam, window, lo, &vs, Orientation::Clockwise, ptol)?];
    let attractors = (lo..=hi).map(|m| vec![a(m)]).collect();
    let repellers = (lo..=hi)
        .map(|m| vec![fp.repeller[(m - wlo) as usize]])
        .collect();
    trim(
        AnchorSequences {
            case: AnchorCase::Contractive,
            k: 1,
            l: 0,
            lo,
            hi,
            u,
            v,
            raw_u: vec![us],
            raw_v: vec![vs],
            attractors,
            repellers,
            epsilon: Some(eps),
        },
        lo,
        fp.r_until,
    )
}

/// Raw (unperturbed) anchor of the forward pullback for label `i` at time
/// `-n`: `∂₋G_{i - n l}` in the non-minimal case.
pub fn boundary_anchor<T: Real>(structure: &MinimalStructure<T>, i: usize, n: i64, upper: bool) -> Point<T> {
    let k = structure.k as i64;
    let j = (i as i64 - n * structure.l as i64).rem_euclid(k) as usize;
    let g = &structure.components[j];
    if upper {
        g.end
    } else {
        g.start
    }
}
