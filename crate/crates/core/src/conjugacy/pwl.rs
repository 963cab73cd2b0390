use crate::circle::{wrap, Point};
use crate::error::{Error, Result};
use crate::scalar::Real;
use serde::{Deserialize, Serialize};

/// Orientation-preserving circle homeomorphism, piecewise linear on lifts
/// between nodes.
///
/// Nodes are kept as lifted coordinates: `xs` and `ys` strictly increasing,
/// each spanning less than one turn. The closing segment runs from the last
/// node to the first node plus one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PiecewiseCircleMap<T: Real> {
    xs: Vec<T>,
    ys: Vec<T>,
}

impl<T: Real> PiecewiseCircleMap<T> {
    /// Nodes in anticlockwise order, starting anywhere. Both coordinates must
    /// advance strictly and wind less than once.
    pub fn new(nodes: &[(Point<T>, Point<T>)]) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Construction("piecewise map needs at least one node".into()));
        }
        let mut xs = Vec::with_capacity(nodes.len());
        let mut ys = Vec::with_capacity(nodes.len());
        xs.push(nodes[0].0.value());
        ys.push(nodes[0].1.value());
        for (j, w) in nodes.windows(2).enumerate() {
            let dx = w[0].0.dplus(w[1].0);
            let dy = w[0].1.dplus(w[1].1);
            if dx <= T::zero() || dy <= T::zero() {
                return Err(Error::Construction(format!(
                    "node {} does not advance strictly (dx = {dx}, dy = {dy}); increase n_max",
                    j + 1
                )));
            }
            xs.push(xs[j] + dx);
            ys.push(ys[j] + dy);
        }
        let last = nodes.len() - 1;
        if xs[last] - xs[0] >= T::one() || ys[last] - ys[0] >= T::one() {
            return Err(Error::Construction(
                "nodes wind more than once around the circle; increase n_max".into(),
            ));
        }
        Ok(PiecewiseCircleMap { xs, ys })
    }

    pub fn identity() -> Self {
        PiecewiseCircleMap {
            xs: vec![T::zero()],
            ys: vec![T::zero()],
        }
    }

    /// `x ↦ x + c`.
    pub fn rotation(c: T) -> Self {
        PiecewiseCircleMap {
            xs: vec![T::zero()],
            ys: vec![wrap(c)],
        }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn nodes(&self) -> Vec<(Point<T>, Point<T>)> {
        self.xs
            .iter()
            .zip(&self.ys)
            .map(|(x, y)| (Point::new(*x), Point::new(*y)))
            .collect()
    }

    /// Lifted node coordinates, both strictly increasing.
    pub fn lifted_nodes(&self) -> (&[T], &[T]) {
        (&self.xs, &self.ys)
    }

    fn interpolate(from: &[T], to: &[T], x: T) -> T {
        let t = from[0] + wrap(x - from[0]);
        // index of the last node at or before t
        let j = from.partition_point(|v| *v <= t) - 1;
        let (x0, y0) = (from[j], to[j]);
        let (x1, y1) = if j + 1 < from.len() {
            (from[j + 1], to[j + 1])
        } else {
            (from[0] + T::one(), to[0] + T::one())
        };
        if x1 <= x0 {
            return y0;
        }
        y0 + (y1 - y0) * (t - x0) / (x1 - x0)
    }

    pub fn eval(&self, x: Point<T>) -> Point<T> {
        Point::new(Self::interpolate(&self.xs, &self.ys, x.value()))
    }

    pub fn inverse(&self, y: Point<T>) -> Point<T> {
        Point::new(Self::interpolate(&self.ys, &self.xs, y.value()))
    }

    /// The inverse map as a node list.
    pub fn inverted(&self) -> Self {
        PiecewiseCircleMap {
            xs: self.ys.clone(),
            ys: self.xs.clone(),
        }
    }
}
