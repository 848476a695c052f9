//! Internal deterministic minimizers: golden-section line search, a
//! box-clamped Nelder-Mead simplex, and dense-grid multistart search.
//!
//! These back the exact inner minimizations of the augmented-Lagrangian
//! outer loop and the GP hyperparameter search. None of them use
//! randomness, so every caller is reproducible by construction.

/// Golden-section minimization of `f` on `[lo, hi]` to interval width `tol`.
///
/// Returns the midpoint of the final bracket. Assumes `f` is continuous;
/// for multimodal functions the caller is expected to bracket a single
/// basin first (see [`grid_then_refine_1d`]).
pub(crate) fn golden_section<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Dense 1D grid scan followed by golden-section refinement of the best cell.
pub(crate) fn grid_then_refine_1d<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    grid: usize,
    tol: f64,
) -> f64 {
    debug_assert!(grid >= 3);
    let step = (hi - lo) / (grid - 1) as f64;
    let mut best_i = 0usize;
    let mut best_v = f64::INFINITY;
    for i in 0..grid {
        let x = lo + step * i as f64;
        let v = f(x);
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let a = (lo + step * (best_i as f64 - 1.0)).max(lo);
    let b = (lo + step * (best_i as f64 + 1.0)).min(hi);
    golden_section(f, a, b, tol)
}

/// Box-clamped Nelder-Mead. Points outside `[lower, upper]` are projected
/// back onto the box before evaluation, which keeps the simplex feasible
/// without penalty terms.
pub(crate) fn nelder_mead_box<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    scale: f64,
    max_iter: usize,
    tol: f64,
) -> (Vec<f64>, f64) {
    let d = x0.len();
    let clamp = |x: &mut [f64]| {
        for j in 0..d {
            x[j] = x[j].clamp(lower[j], upper[j]);
        }
    };

    // Initial simplex: x0 plus one perturbed vertex per coordinate.
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    let mut start = x0.to_vec();
    clamp(&mut start);
    simplex.push(start.clone());
    for j in 0..d {
        let mut v = start.clone();
        let h = scale * (upper[j] - lower[j]).max(1e-12);
        v[j] = if v[j] + h <= upper[j] { v[j] + h } else { v[j] - h };
        clamp(&mut v);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    for _ in 0..max_iter {
        // Order best to worst.
        let mut idx: Vec<usize> = (0..=d).collect();
        idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
        let reordered: Vec<Vec<f64>> = idx.iter().map(|&i| simplex[i].clone()).collect();
        let revalues: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
        simplex = reordered;
        values = revalues;

        let spread = (values[d] - values[0]).abs();
        let width: f64 = (0..d)
            .map(|j| {
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for v in &simplex {
                    lo = lo.min(v[j]);
                    hi = hi.max(v[j]);
                }
                hi - lo
            })
            .fold(0.0f64, f64::max);
        if spread <= tol && width <= tol {
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; d];
        for v in simplex.iter().take(d) {
            for j in 0..d {
                centroid[j] += v[j] / d as f64;
            }
        }

        let blend = |alpha: f64| -> Vec<f64> {
            let mut x: Vec<f64> = (0..d)
                .map(|j| centroid[j] + alpha * (centroid[j] - simplex[d][j]))
                .collect();
            clamp(&mut x);
            x
        };

        let xr = blend(1.0);
        let fr = f(&xr);
        if fr < values[0] {
            let xe = blend(2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[d] = xe;
                values[d] = fe;
            } else {
                simplex[d] = xr;
                values[d] = fr;
            }
        } else if fr < values[d - 1] {
            simplex[d] = xr;
            values[d] = fr;
        } else {
            let xc = blend(if fr < values[d] { 0.5 } else { -0.5 });
            let fc = f(&xc);
            if fc < values[d].min(fr) {
                simplex[d] = xc;
                values[d] = fc;
            } else {
                // Shrink toward the best vertex.
                let anchor = simplex[0].clone();
                for i in 1..=d {
                    for (j, v) in simplex[i].iter_mut().enumerate() {
                        *v = anchor[j] + 0.5 * (*v - anchor[j]);
                    }
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..=d {
        if values[i] < values[best] {
            best = i;
        }
    }
    (simplex[best].clone(), values[best])
}

/// Dense grid scan over a box followed by Nelder-Mead refinement from the
/// best few grid cells (plus any extra caller-supplied starts).
pub(crate) fn grid_multistart_minimize<F: Fn(&[f64]) -> f64>(
    f: F,
    lower: &[f64],
    upper: &[f64],
    grid_per_dim: usize,
    extra_starts: &[Vec<f64>],
) -> (Vec<f64>, f64) {
    let d = lower.len();
    debug_assert!(d >= 1 && grid_per_dim >= 2);

    // Scan the full grid, keeping the best handful of cells as starts.
    const KEEP: usize = 4;
    let mut best: Vec<(f64, Vec<f64>)> = Vec::new();
    let total = grid_per_dim.pow(d as u32);
    let mut x = vec![0.0; d];
    for flat in 0..total {
        let mut rem = flat;
        for j in 0..d {
            let i = rem % grid_per_dim;
            rem /= grid_per_dim;
            x[j] = lower[j] + (upper[j] - lower[j]) * i as f64 / (grid_per_dim - 1) as f64;
        }
        let v = f(&x);
        if best.len() < KEEP {
            best.push((v, x.clone()));
            best.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        } else if v < best[KEEP - 1].0 {
            best[KEEP - 1] = (v, x.clone());
            best.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        }
    }

    let cell = 1.0 / (grid_per_dim - 1) as f64;
    let mut winner: Option<(Vec<f64>, f64)> = None;
    let starts = best
        .iter()
        .map(|(_, x)| x.clone())
        .chain(extra_starts.iter().cloned());
    for s in starts {
        let (x, v) = nelder_mead_box(&f, &s, lower, upper, cell, 400, 1e-12);
        match &winner {
            Some((_, wv)) if *wv <= v => {}
            _ => winner = Some((x, v)),
        }
    }
    winner.expect("at least one start")
}
