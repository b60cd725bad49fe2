//! Local polishing of a grid minimizer: coordinate descent that moves mass
//! between two cells of one conditional row, keeping the row marginal fixed.

/// Minimizes `objective` starting from `table` (row-major `nx × ny`) and
/// returns the final objective value. Each move shifts `q_x(x)·step` between
/// two columns of row `x`; a move is kept only on strict improvement.
pub(crate) fn coordinate_descent<F>(
    table: &mut [f64],
    ny: usize,
    q_x: &[f64],
    step: f64,
    max_sweeps: usize,
    mut objective: F,
) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    let mut best = objective(table);
    for _ in 0..max_sweeps {
        let mut improved = false;
        for (x, &qx) in q_x.iter().enumerate() {
            if qx <= 0.0 {
                continue;
            }
            let delta = qx * step;
            for from in 0..ny {
                for to in 0..ny {
                    if from == to || table[x * ny + from] < delta - 1e-15 {
                        continue;
                    }
                    let (a, b) = (table[x * ny + from], table[x * ny + to]);
                    table[x * ny + from] = (a - delta).max(0.0);
                    table[x * ny + to] = b + delta;
                    let v = objective(table);
                    if v < best - 1e-15 {
                        best = v;
                        improved = true;
                    } else {
                        table[x * ny + from] = a;
                        table[x * ny + to] = b;
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
    best
}
