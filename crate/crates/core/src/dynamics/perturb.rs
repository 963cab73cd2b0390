use crate::circle::{Arc, Point};
use crate::error::{Error, Result};
use crate::scalar::Real;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Anticlockwise,
    Clockwise,
}

/// Anticlockwise or clockwise perturbation of `(x_n)` by the maps `f_n`.
///
/// `f(n, x)` evaluates `f_n` for `n` indexing `xs`. An index `n` is generic
/// (in `P`) when `dist(f_n(x_n), x_{n+1}) > tol`; the first and last indices
/// are treated as generic since their neighbours lie outside the window.
/// Generic indices keep `y_n = x_n`; the others take the midpoint of
/// `[x_n, f_{n-1}(y_{n-1})]` (anticlockwise) or `[f_{n-1}(y_{n-1}), x_n]`
/// (clockwise).
///
/// With `attractors = Some(a)`, the hypothesis `f_{n-1}(x_{n-1}) ∈ [x_n, a_n[`
/// (resp. `]a_n, x_n]`) is checked up to `tol` and a violation is reported
/// with its index.
pub fn perturb_sequence<T, F>(
    f: F,
    xs: &[Point<T>],
    attractors: Option<&[Point<T>]>,
    orientation: Orientation,
    tol: T,
) -> Result<Vec<Point<T>>>
where
    T: Real,
    F: Fn(usize, Point<T>) -> Point<T>,
{
    let len = xs.len();
    if len == 0 {
        return Ok(Vec::new());
    }
    if let Some(a) = attractors {
        if a.len() != len {
            return Err(Error::Parameter("attractor sequence length differs".into()));
        }
        for n in 1..len {
            let img = f(n - 1, xs[n - 1]);
            let ok = match orientation {
                Orientation::Anticlockwise => Arc::new(xs[n], a[n]).contains_left_closed(img),
                Orientation::Clockwise => Arc::new(a[n], xs[n]).contains_right_closed(img),
            };
            if !ok && img.dist(xs[n]) > tol {
                return Err(Error::Precondition(format!(
                    "f_{{n-1}}(x_{{n-1}}) leaves the arc between x_n and a_n at n = {n}"
                )));
            }
        }
    }
    let generic: Vec<bool> = (0..len)
        .map(|n| n == 0 || n + 1 == len || f(n, xs[n]).dist(xs[n + 1]) > tol)
        .collect();
    if len > 2 && !generic[1..len - 1].iter().any(|g| *g) {
        return Err(Error::Genericity(
            "every step maps x_n exactly onto x_{n+1}; the family violates non-degeneracy".into(),
        ));
    }
    let mut ys = Vec::with_capacity(len);
    ys.push(xs[0]);
    for n in 1..len {
        if generic[n] {
            ys.push(xs[n]);
            continue;
        }
        let img = f(n - 1, ys[n - 1]);
        // an image a rounding error behind x_n would turn a zero-length arc into a full turn
        let behind = match orientation {
            Orientation::Anticlockwise => img.dplus(xs[n]),
            Orientation::Clockwise => xs[n].dplus(img),
        };
        if behind <= tol {
            ys.push(xs[n]);
            continue;
        }
        let arc = match orientation {
            Orientation::Anticlockwise => Arc::new(xs[n], img),
            Orientation::Clockwise => Arc::new(img, xs[n]),
        };
        ys.push(arc.midpoint());
    }
    Ok(ys)
}
