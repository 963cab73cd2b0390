//! Topological invariants of a random circle homeomorphism: minimal-set
//! components `G_i`, the counts `k, l, p, q`, rotational symmetry order and
//! the contraction trichotomy for minimal families.

use crate::circle::{Arc, Point};
use crate::dynamics::{derive_seed, pullback_grid_clusters, NoiseWindow};
use crate::error::{Error, Result};
use crate::family::{validate_family, Family, ValidationStatus};
use crate::scalar::Real;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Monte Carlo and detection knobs for [`estimate_minimal_structure`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McParams {
    pub seed: u64,
    pub n_bins: usize,
    pub n_samples: usize,
    pub n_burn: usize,
    pub n_chains: usize,
    /// Empty-bin run length that separates two components.
    pub gap_min: usize,
    /// Random noise probes (on top of box corners and centre).
    pub n_alpha: usize,
    pub m_max: u32,
    pub symmetry_grid: usize,
    pub symmetry_tol: f64,
    pub antonov: AntonovParams,
}

impl Default for McParams {
    fn default() -> Self {
        McParams {
            seed: 0,
            n_bins: 2048,
            n_samples: 200_000,
            n_burn: 1_000,
            n_chains: 16,
            gap_min: 3,
            n_alpha: 32,
            m_max: 12,
            symmetry_grid: 256,
            symmetry_tol: 1e-9,
            antonov: AntonovParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AntonovParams {
    pub n_windows: usize,
    pub n_max: usize,
    pub grid: usize,
    pub rotation_tol: f64,
}

impl Default for AntonovParams {
    fn default() -> Self {
        AntonovParams {
            n_windows: 8,
            n_max: 300,
            grid: 64,
            rotation_tol: 1e-10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AntonovCase {
    Contractive,
    SymmetricLiftContractive,
    Rotation,
    NotMinimal,
}

/// Estimated minimal-set structure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MinimalStructure<T: Real> {
    pub whole_circle: bool,
    /// `G_0 .. G_{k-1}`, anticlockwise by midpoint.
    pub components: Vec<Arc<T>>,
    pub k: u32,
    pub l: u32,
    pub p: u32,
    pub q: u32,
    pub total_gap_measure: T,
    pub symmetry_order: u32,
    pub antonov_case: AntonovCase,
}

impl<T: Real> MinimalStructure<T> {
    /// Gaps `H_i = [∂₊G_i, ∂₋G_{i+1}]`; empty for the whole circle.
    pub fn gaps(&self) -> Vec<Arc<T>> {
        if self.whole_circle {
            return Vec::new();
        }
        let k = self.components.len();
        (0..k)
            .map(|i| Arc::new(self.components[i].end, self.components[(i + 1) % k].start))
            .collect()
    }

    /// `L_i = ⋃_j H_{i+jp}`.
    pub fn gap_union(&self, i: usize) -> Vec<Arc<T>> {
        let gaps = self.gaps();
        if gaps.is_empty() {
            return gaps;
        }
        let k = self.k as usize;
        (0..self.q as usize)
            .map(|j| gaps[(i + j * self.p as usize) % k])
            .collect()
    }

    /// Index of the component containing `x`, if any.
    pub fn component_of(&self, x: Point<T>) -> Option<usize> {
        self.components.iter().position(|c| c.contains(x))
    }
}

pub fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Occupancy counts of long forward orbits started from `n_chains` evenly
/// spaced points, burn-in discarded. Chains run in parallel with seeds
/// derived from `seed` and are merged in chain order.
pub fn estimate_stationary_histogram<T: Real>(
    fam: &Family<T>,
    seed: u64,
    n_burn: usize,
    n_samples: usize,
    n_bins: usize,
    n_chains: usize,
) -> Result<Vec<u64>> {
    if n_bins < 64 {
        return Err(Error::Parameter(format!("n_bins = {n_bins} must be at least 64")));
    }
    let n_chains = n_chains.max(1);
    let per_chain = n_samples.div_ceil(n_chains);
    let partial: Vec<Vec<u64>> = (0..n_chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, c as u64));
            let mut counts = vec![0u64; n_bins];
            let mut alpha = Vec::with_capacity(fam.noise().dimension());
            let mut x = Point::new(T::from_count(c) / T::from_count(n_chains));
            for step in 0..n_burn + per_chain {
                alpha.clear();
                fam.noise().sample_into(&mut rng, &mut alpha);
                x = fam.eval_raw(&alpha, x);
                if step >= n_burn {
                    let b = (x.value() * T::from_count(n_bins)).to_usize().unwrap_or(0);
                    counts[b.min(n_bins - 1)] += 1;
                }
            }
            counts
        })
        .collect();
    let mut total = vec![0u64; n_bins];
    for counts in &partial {
        for (t, c) in total.iter_mut().zip(counts) {
            *t += c;
        }
    }
    Ok(total)
}

/// Runs of at least `gap_min` empty bins, as `(first_bin, length)`, cyclically.
fn empty_runs(counts: &[u64], gap_min: usize) -> Vec<(usize, usize)> {
    let n = counts.len();
    let Some(anchor) = counts.iter().position(|c| *c > 0) else {
        return Vec::new();
    };
    let mut runs = Vec::new();
    let mut i = 0;
    while i < n {
        let b = (anchor + i) % n;
        if counts[b] == 0 {
            let start = b;
            let mut len = 0;
            while i < n && counts[(anchor + i) % n] == 0 {
                len += 1;
                i += 1;
            }
            if len >= gap_min {
                runs.push((start, len));
            }
        } else {
            i += 1;
        }
    }
    runs
}

/// Components read off a histogram: the arcs between empty runs.
pub fn components_from_histogram<T: Real>(counts: &[u64], gap_min: usize) -> Vec<Arc<T>> {
    let n = counts.len();
    let runs = empty_runs(counts, gap_min);
    if runs.is_empty() {
        return vec![Arc::whole()];
    }
    let bin = |b: usize| Point::new(T::from_count(b) / T::from_count(n));
    let mut comps: Vec<Arc<T>> = (0..runs.len())
        .map(|r| {
            let (s, len) = runs[r];
            let next = runs[(r + 1) % runs.len()].0;
            Arc::new(bin((s + len) % n), bin(next))
        })
        .collect();
    comps.sort_by(|a, b| a.midpoint().partial_cmp(&b.midpoint()).expect("finite"));
    comps
}

fn nearest_component<T: Real>(comps: &[Arc<T>], x: Point<T>) -> usize {
    if let Some(i) = comps.iter().position(|c| c.contains(x)) {
        return i;
    }
    let mut best = (0, T::infinity());
    for (i, c) in comps.iter().enumerate() {
        let d = x.dist(c.start).min(x.dist(c.end));
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

/// Rotation index `l` from component midpoints and probe images.
fn rotation_index<T: Real>(fam: &Family<T>, comps: &[Arc<T>], probes: &[Vec<T>]) -> Result<u32> {
    let k = comps.len();
    let mut l: Option<usize> = None;
    for (i, c) in comps.iter().enumerate() {
        for a in probes {
            let j = nearest_component(comps, fam.eval_raw(a, c.midpoint()));
            let li = (j + k - i) % k;
            match l {
                None => l = Some(li),
                Some(prev) if prev != li => {
                    return Err(Error::Structural(format!(
                        "inconsistent rotation index ({prev} vs {li}); refine n_bins or check the family"
                    )))
                }
                _ => {}
            }
        }
    }
    Ok(l.unwrap_or(0) as u32)
}

fn overlaps<T: Real>(a: &Arc<T>, b: &Arc<T>) -> bool {
    a.contains(b.start) || a.contains(b.end) || b.contains(a.start)
}

/// Merges overlapping arcs; `None` once they cover the circle.
fn merge_arcs<T: Real>(mut arcs: Vec<Arc<T>>) -> Option<Vec<Arc<T>>> {
    'scan: loop {
        if arcs.iter().any(|a| a.whole) {
            return None;
        }
        for i in 0..arcs.len() {
            for j in i + 1..arcs.len() {
                if overlaps(&arcs[i], &arcs[j]) {
                    arcs[i] = arcs[i].hull_near(&arcs[j]);
                    arcs.remove(j);
                    continue 'scan;
                }
            }
        }
        break;
    }
    arcs.sort_by(|a, b| a.midpoint().value().partial_cmp(&b.midpoint().value()).expect("finite"));
    Some(arcs)
}

/// Grows each arc by the probe images of the arcs mapped into it, merging
/// arcs that meet, until the union is forward-invariant under the probes;
/// then dilates by `delta` and grows again. `None` when the arcs fill the
/// circle. Pullbacks anchored at the boundary are then monotone.
pub fn refine_invariant<T: Real>(
    fam: &Family<T>,
    comps: &[Arc<T>],
    probes: &[Vec<T>],
    delta: T,
) -> Option<Vec<Arc<T>>> {
    let grow = |mut cur: Vec<Arc<T>>| -> Option<Vec<Arc<T>>> {
        for _ in 0..500 {
            let mut changed = false;
            for i in 0..cur.len() {
                for a in probes {
                    let img = Arc::new(fam.eval_raw(a, cur[i].start), fam.eval_raw(a, cur[i].end));
                    let target = nearest_component(&cur, fam.eval_raw(a, cur[i].midpoint()));
                    let grown = cur[target].hull_near(&img);
                    if grown.whole {
                        return None;
                    }
                    if grown.start != cur[target].start || grown.end != cur[target].end {
                        cur[target] = grown;
                        changed = true;
                    }
                }
            }
            let before = cur.len();
            cur = merge_arcs(cur)?;
            if !changed && cur.len() == before {
                break;
            }
        }
        Some(cur)
    };
    let cur = grow(comps.to_vec())?;
    let dilated = merge_arcs(cur.iter().map(|c| c.dilate(delta)).collect())?;
    grow(dilated)
}

/// Largest `m ≤ m_max` such that `τ_m` and every `τ_d` with `d | m` commute
/// with all sampled `f_α` to within `tol`; 1 if none.
pub fn detect_rotational_symmetry<T: Real>(
    fam: &Family<T>,
    m_max: u32,
    grid: usize,
    n_alpha: usize,
    tol: f64,
) -> Result<u32> {
    if m_max < 2 {
        return Err(Error::Parameter("m_max must be at least 2".into()));
    }
    let tol = T::lit(tol);
    let passes: Vec<bool> = (0..=m_max)
        .into_par_iter()
        .map(|m| m >= 2 && fam.commutation_defect(m, grid, n_alpha, 0x5a11_0c4d) < tol)
        .collect();
    let ok = |m: u32| (2..=m).filter(|d| m % d == 0).all(|d| passes[d as usize]);
    Ok((2..=m_max).rev().find(|&m| ok(m)).unwrap_or(1))
}

/// Whether a user-supplied candidate symmetry commutes with every sampled `f_α`.
pub fn commutes_with<T: Real>(
    fam: &Family<T>,
    tau: impl Fn(Point<T>) -> Point<T>,
    grid: usize,
    n_alpha: usize,
    tol: f64,
) -> bool {
    let tol = T::lit(tol);
    fam.noise().probe_points(n_alpha, 0x5a11_0c4d).iter().all(|a| {
        (0..grid).all(|j| {
            let x = Point::new(T::from_count(j) / T::from_count(grid));
            fam.eval_raw(a, tau(x)).dist(tau(fam.eval_raw(a, x))) < tol
        })
    })
}

/// True when every sampled `f_α` is a rigid rotation.
pub fn is_random_rotation<T: Real>(fam: &Family<T>, n_alpha: usize, tol: f64) -> bool {
    let tol = T::lit(tol);
    fam.noise().probe_points(n_alpha, 0x0707).iter().all(|a| {
        let s0 = fam.eval_raw(a, Point::zero());
        (1..64).all(|j| {
            let x = Point::new(T::from_count(j) / T::lit(64.0));
            fam.eval_raw(a, x).dist(x + s0) < tol
        })
    })
}

/// Contraction trichotomy for a family whose minimal set is the whole circle.
///
/// `rotation` if every sampled map is a rigid rotation; otherwise the factor
/// by the symmetry order must collapse a pullback grid to one cluster on
/// every probe window.
pub fn classify_antonov<T: Real>(
    fam: &Family<T>,
    structure: &MinimalStructure<T>,
    params: &AntonovParams,
    seed: u64,
) -> Result<AntonovCase> {
    if !structure.whole_circle {
        return Err(Error::Precondition(
            "contraction trichotomy needs a minimal (whole-circle) family".into(),
        ));
    }
    if is_random_rotation(fam, 16, params.rotation_tol) {
        return Ok(AntonovCase::Rotation);
    }
    let m = structure.symmetry_order;
    let factor = fam.factor_unchecked(m);
    let collapsed: Vec<bool> = (0..params.n_windows)
        .into_par_iter()
        .map(|w| -> Result<bool> {
            let win = NoiseWindow::generate(
                factor.noise(),
                derive_seed(seed, 0xa000 + w as u64),
                params.n_max,
                0,
            );
            Ok(pullback_grid_clusters(&factor, &win, params.grid, params.n_max)?.count() == 1)
        })
        .collect::<Result<_>>()?;
    if collapsed.iter().all(|c| *c) {
        Ok(if m >= 2 {
            AntonovCase::SymmetricLiftContractive
        } else {
            AntonovCase::Contractive
        })
    } else {
        Err(Error::Inconclusive(format!(
            "factor by τ_{m} did not collapse to one cluster on {} of {} windows within {} steps",
            collapsed.iter().filter(|c| !**c).count(),
            params.n_windows,
            params.n_max
        )))
    }
}

/// Full structure estimate: histogram components, `k, l, p, q`, symmetry
/// order and the contraction case.
pub fn estimate_minimal_structure<T: Real>(
    fam: &Family<T>,
    params: &McParams,
) -> Result<MinimalStructure<T>> {
    let report = validate_family(fam, 8);
    if report.status == ValidationStatus::Fail {
        return Err(Error::Precondition(format!(
            "family failed validation: {}",
            report.findings.join("; ")
        )));
    }
    let probes = fam.noise().probe_points(params.n_alpha, derive_seed(params.seed, 0xbeef));
    let hist = |samples: usize| {
        estimate_stationary_histogram(
            fam,
            params.seed,
            params.n_burn,
            samples,
            params.n_bins,
            params.n_chains,
        )
    };
    let mut counts = hist(params.n_samples)?;
    let gap_bins = |c: &[u64]| -> usize { empty_runs(c, params.gap_min).iter().map(|r| r.1).sum() };
    let g = gap_bins(&counts);
    if g > 0 && g < 4 * params.gap_min {
        log::info!("tiny gap total ({g} bins); re-running with 4x samples");
        counts = hist(4 * params.n_samples)?;
    }
    let raw = components_from_histogram::<T>(&counts, params.gap_min);
    let bin = T::one() / T::from_count(params.n_bins);
    let refined = if raw.len() == 1 && raw[0].whole {
        None
    } else {
        let r = refine_invariant(fam, &raw, &probes, bin * T::lit(1e-3));
        if r.is_none() {
            log::info!("probe images fill the histogram gaps; treating the minimal set as the whole circle");
        }
        r
    };
    let Some(components) = refined else {
        let mut s = MinimalStructure {
            whole_circle: true,
            components: vec![Arc::whole()],
            k: 1,
            l: 0,
            p: 1,
            q: 1,
            total_gap_measure: T::zero(),
            symmetry_order: detect_rotational_symmetry(
                fam,
                params.m_max,
                params.symmetry_grid,
                16,
                params.symmetry_tol,
            )?,
            antonov_case: AntonovCase::NotMinimal,
        };
        s.antonov_case = classify_antonov(fam, &s, &params.antonov, params.seed)?;
        return Ok(s);
    };
    let k = components.len() as u32;
    let l = rotation_index(fam, &components, &probes)?;
    let covered = components.iter().fold(T::zero(), |acc, c| acc + c.lebesgue());
    let p = gcd(k, l);
    Ok(MinimalStructure {
        whole_circle: false,
        components,
        k,
        l,
        p,
        q: k / p,
        total_gap_measure: (T::one() - covered).max(T::zero()),
        symmetry_order: 1,
        antonov_case: AntonovCase::NotMinimal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::NoiseModel;

    type F = Family<f64>;

    fn p(x: f64) -> Point<f64> {
        Point::from_f64(x)
    }

    fn quick() -> McParams {
        McParams {
            n_samples: 50_000,
            n_bins: 1024,
            ..McParams::default()
        }
    }

    #[test]
    fn gcd_values() {
        assert_eq!(gcd(4, 0), 4);
        assert_eq!(gcd(6, 4), 2);
        assert_eq!(gcd(3, 1), 1);
    }

    #[test]
    fn histogram_components_synthetic() {
        let mut counts = vec![0u64; 100];
        for b in 10..20 {
            counts[b] = 5;
        }
        for b in 60..70 {
            counts[b] = 5;
        }
        counts[40] = 1; // isolated bin separated by runs >= 3 becomes its own component
        let comps = components_from_histogram::<f64>(&counts, 3);
        assert_eq!(comps.len(), 3);
        assert!(comps[0].contains(p(0.15)));
        assert!(!comps[0].contains(p(0.3)));
        let full = vec![1u64; 100];
        assert!(components_from_histogram::<f64>(&full, 3)[0].whole);
        // gaps shorter than gap_min do not split
        let mut c = vec![1u64; 100];
        c[50] = 0;
        c[51] = 0;
        assert!(components_from_histogram::<f64>(&c, 3)[0].whole);
    }

    #[test]
    fn wrapping_component() {
        let mut counts = vec![0u64; 64];
        for b in (0..4).chain(60..64) {
            counts[b] = 3;
        }
        let comps = components_from_histogram::<f64>(&counts, 3);
        assert_eq!(comps.len(), 1);
        assert!(comps[0].contains(p(0.99)) && comps[0].contains(p(0.01)));
        assert!(!comps[0].contains(p(0.5)));
    }

    #[test]
    fn rotation_histogram_is_full() {
        let fam = F::random_rotation(NoiseModel::cube(1, -1.0, 1.0), 0.0, vec![0.3]);
        let h = estimate_stationary_histogram(&fam, 1, 100, 100_000, 256, 8).unwrap();
        assert!(h.iter().all(|c| *c > 0));
        assert!(estimate_stationary_histogram(&fam, 1, 10, 10, 32, 1).is_err());
    }

    #[test]
    fn symmetry_orders() {
        let f = F::example1(3, 1, 0.2).unwrap();
        assert_eq!(detect_rotational_symmetry(&f, 12, 128, 8, 1e-9).unwrap(), 3);
        let e3 = F::example3(0.1, 0.2).unwrap();
        assert_eq!(detect_rotational_symmetry(&e3, 12, 128, 8, 1e-9).unwrap(), 1);
        let rot = F::random_rotation(NoiseModel::cube(1, -1.0, 1.0), 0.0, vec![0.3]);
        assert_eq!(detect_rotational_symmetry(&rot, 12, 64, 8, 1e-9).unwrap(), 12);
        let moved = f.rotate_conjugate(p(0.123));
        assert_eq!(detect_rotational_symmetry(&moved, 12, 128, 8, 1e-9).unwrap(), 3);
        let tau = |x: Point<f64>| x.shift(1.0 / 3.0);
        assert!(commutes_with(&f, tau, 64, 4, 1e-9));
        assert!(!commutes_with(&e3, tau, 64, 4, 1e-9));
    }

    #[test]
    fn structure_of_two_arcs() {
        let s = estimate_minimal_structure(&F::example1(2, 1, 0.05).unwrap(), &quick()).unwrap();
        assert!(!s.whole_circle);
        assert_eq!((s.k, s.l, s.p, s.q), (2, 1, 1, 2));
        assert_eq!(s.component_of(p(0.25)), Some(0));
        assert_eq!(s.component_of(p(0.75)), Some(1));
        assert_eq!(s.component_of(p(0.0)), None);
        assert_eq!(s.component_of(p(0.5)), None);
        assert_eq!(s.symmetry_order, 1);
        assert_eq!(s.gaps().len(), 2);
    }

    #[test]
    fn two_minimal_sets() {
        let s = estimate_minimal_structure(&F::example1(2, 0, 0.05).unwrap(), &quick()).unwrap();
        assert_eq!((s.k, s.l, s.p, s.q), (2, 0, 2, 1));
        assert_eq!(s.gap_union(0).len(), 1);
    }

    #[test]
    fn minimal_families() {
        let s = estimate_minimal_structure(&F::example3(1.0 / std::f64::consts::TAU, 0.1).unwrap(), &quick())
            .unwrap();
        assert!(s.whole_circle);
        assert_eq!((s.k, s.symmetry_order), (1, 1));
        assert_eq!(s.antonov_case, AntonovCase::Contractive);
        let s = estimate_minimal_structure(&F::example1(2, 1, 0.2).unwrap(), &quick()).unwrap();
        assert!(s.whole_circle);
        assert_eq!(s.symmetry_order, 2);
        assert_eq!(s.antonov_case, AntonovCase::SymmetricLiftContractive);
        let rot = F::random_rotation(NoiseModel::cube(1, -1.0, 1.0), 0.0, vec![0.3]);
        let s = estimate_minimal_structure(&rot, &quick()).unwrap();
        assert_eq!(s.antonov_case, AntonovCase::Rotation);
    }

    #[test]
    fn invalid_family_is_rejected() {
        let bad = F::custom(NoiseModel::cube(1, 0.0, 1.0), "dec", vec![], |a: &[f64], t: f64| a[0] - t);
        assert!(matches!(
            estimate_minimal_structure(&bad, &quick()),
            Err(Error::Precondition(_))
        ));
    }
}
