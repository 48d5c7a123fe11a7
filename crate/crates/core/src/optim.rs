//! Bounded derivative-free local search used by the fitters.
//!
//! A deterministic Nelder-Mead simplex operating on coordinates scaled to the
//! unit box. Candidate points are clamped to the box, so iterates never leave
//! the bounds. Objectives may return `f64::INFINITY` to mark infeasible
//! points.

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Stop when the spread of objective values across the simplex drops
    /// below `ftol * (1 + |f_best|)`.
    pub ftol: f64,
    /// Stop when the simplex diameter, measured per coordinate as a fraction
    /// of the bound range, drops below this.
    pub xtol: f64,
    pub max_evals: u64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            ftol: 1e-10,
            xtol: 1e-8,
            max_evals: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evaluations: u64,
    pub converged: bool,
}

/// Minimize `f` over the box `[lo_i, hi_i]` starting from `start` (clamped
/// into the box). Fully deterministic for fixed inputs.
pub fn minimize_bounded<F>(
    mut f: F,
    start: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: &SimplexOptions,
) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = start.len();
    assert!(dim > 0 && lo.len() == dim && hi.len() == dim);
    for d in 0..dim {
        assert!(lo[d] < hi[d], "empty bound on axis {d}");
    }

    let unmap = |u: &[f64]| -> Vec<f64> {
        (0..dim).map(|d| lo[d] + u[d] * (hi[d] - lo[d])).collect()
    };
    let mut evals = 0u64;
    let mut eval = |u: &[f64], evals: &mut u64| -> f64 {
        *evals += 1;
        let v = f(&unmap(u));
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    // Initial simplex in unit coordinates: the start plus one vertex per
    // axis, stepping towards whichever side has room.
    let u0: Vec<f64> = (0..dim)
        .map(|d| ((start[d] - lo[d]) / (hi[d] - lo[d])).clamp(0.0, 1.0))
        .collect();
    let step = 0.1;
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(u0.clone());
    for d in 0..dim {
        let mut v = u0.clone();
        v[d] = if v[d] + step <= 1.0 {
            v[d] + step
        } else {
            v[d] - step
        };
        simplex.push(v);
    }
    let mut fv: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();

    let clamp = |v: &mut Vec<f64>| {
        for x in v.iter_mut() {
            *x = x.clamp(0.0, 1.0);
        }
    };

    let mut converged = false;
    loop {
        // Order vertices best..worst; total_cmp keeps the order total even
        // with infinities.
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&i, &j| fv[i].total_cmp(&fv[j]).then(i.cmp(&j)));
        let reordered: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let refv: Vec<f64> = order.iter().map(|&i| fv[i]).collect();
        simplex = reordered;
        fv = refv;

        let f_best = fv[0];
        let f_worst = fv[dim];
        if f_best.is_finite() {
            let fspread = f_worst - f_best;
            let xspread = (0..dim)
                .map(|d| {
                    let lo_d = simplex.iter().map(|v| v[d]).fold(f64::INFINITY, f64::min);
                    let hi_d = simplex
                        .iter()
                        .map(|v| v[d])
                        .fold(f64::NEG_INFINITY, f64::max);
                    hi_d - lo_d
                })
                .fold(0.0, f64::max);
            if fspread <= opts.ftol * (1.0 + f_best.abs()) || xspread <= opts.xtol {
                converged = true;
                break;
            }
        }
        if evals >= opts.max_evals {
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; dim];
        for v in simplex.iter().take(dim) {
            for d in 0..dim {
                centroid[d] += v[d] / dim as f64;
            }
        }

        let worst = simplex[dim].clone();
        let mut reflected: Vec<f64> = (0..dim)
            .map(|d| centroid[d] + (centroid[d] - worst[d]))
            .collect();
        clamp(&mut reflected);
        let f_r = eval(&reflected, &mut evals);

        if f_r < fv[0] {
            // Try expanding past the reflection.
            let mut expanded: Vec<f64> = (0..dim)
                .map(|d| centroid[d] + 2.0 * (centroid[d] - worst[d]))
                .collect();
            clamp(&mut expanded);
            let f_e = eval(&expanded, &mut evals);
            if f_e < f_r {
                simplex[dim] = expanded;
                fv[dim] = f_e;
            } else {
                simplex[dim] = reflected;
                fv[dim] = f_r;
            }
        } else if f_r < fv[dim - 1] {
            simplex[dim] = reflected;
            fv[dim] = f_r;
        } else {
            // Contract towards the better of worst/reflected.
            let (anchor, f_anchor) = if f_r < fv[dim] {
                (reflected.clone(), f_r)
            } else {
                (worst.clone(), fv[dim])
            };
            let mut contracted: Vec<f64> = (0..dim)
                .map(|d| centroid[d] + 0.5 * (anchor[d] - centroid[d]))
                .collect();
            clamp(&mut contracted);
            let f_c = eval(&contracted, &mut evals);
            if f_c < f_anchor {
                simplex[dim] = contracted;
                fv[dim] = f_c;
            } else {
                // Shrink everything towards the best vertex.
                for i in 1..=dim {
                    let best = simplex[0].clone();
                    for d in 0..dim {
                        simplex[i][d] = best[d] + 0.5 * (simplex[i][d] - best[d]);
                    }
                    clamp(&mut simplex[i]);
                    fv[i] = eval(&simplex[i], &mut evals);
                }
            }
        }

        if evals >= opts.max_evals {
            break;
        }
    }

    let mut order: Vec<usize> = (0..=dim).collect();
    order.sort_by(|&i, &j| fv[i].total_cmp(&fv[j]).then(i.cmp(&j)));
    let best = order[0];
    SimplexResult {
        x: unmap(&simplex[best]),
        fx: fv[best],
        evaluations: evals,
        converged,
    }
}
