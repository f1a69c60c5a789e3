//! Least squares over the probability simplex, solved exactly by a primal
//! active-set method. Sizes here are K×K with K the number of topics.

/// Minimizes `½ xᵀGx − hᵀx` subject to `x ≥ 0`, `Σx = 1`.
///
/// `gram` is the K×K row-major Gram matrix of the anchor rows and `h` the
/// inner products of the target row with each anchor, so this is
/// `argmin ‖target − Σ x_k anchor_k‖²` over the simplex.
pub fn simplex_least_squares(gram: &[f64], h: &[f64]) -> Vec<f64> {
    let k = h.len();
    assert_eq!(gram.len(), k * k);
    if k == 1 {
        return vec![1.0];
    }
    let scale = (0..k).map(|i| gram[i * k + i].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tol = 1e-13 * scale;

    let mut x = vec![1.0 / k as f64; k];
    let mut free = vec![true; k];

    for _ in 0..(50 * k + 100) {
        let f_idx: Vec<usize> = (0..k).filter(|&i| free[i]).collect();
        let target = solve_equality_qp(gram, h, &f_idx, k);

        let blocking = f_idx
            .iter()
            .zip(&target)
            .filter(|(_, &t)| t < 0.0)
            .map(|(&i, &t)| (i, x[i] / (x[i] - t)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

        match blocking {
            None => {
                for (&i, &t) in f_idx.iter().zip(&target) {
                    x[i] = t;
                }
                // Multiplier of the sum constraint: gradient on any free coordinate.
                let grad: Vec<f64> = (0..k).map(|i| (0..k).map(|j| gram[i * k + j] * x[j]).sum::<f64>() - h[i]).collect();
                let nu = f_idx.iter().map(|&i| grad[i]).sum::<f64>() / f_idx.len() as f64;
                let entering = (0..k)
                    .filter(|&i| !free[i])
                    .map(|i| (i, grad[i] - nu))
                    .filter(|&(_, mu)| mu < -tol)
                    .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                match entering {
                    Some((i, _)) => free[i] = true,
                    None => break,
                }
            }
            Some((leaving, step)) => {
                let step = step.clamp(0.0, 1.0);
                for (&i, &t) in f_idx.iter().zip(&target) {
                    x[i] += step * (t - x[i]);
                }
                x[leaving] = 0.0;
                free[leaving] = false;
                for &i in &f_idx {
                    if x[i] <= 0.0 {
                        x[i] = 0.0;
                        free[i] = false;
                    }
                }
            }
        }
    }

    for v in &mut x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let s: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= s);
    x
}

/// Minimizer of the objective restricted to coordinates `free` with their
/// sum fixed at one (other coordinates zero). Solves the KKT system
/// `[G_FF 1; 1ᵀ 0] [x; −ν] = [h_F; 1]`.
fn solve_equality_qp(gram: &[f64], h: &[f64], free: &[usize], k: usize) -> Vec<f64> {
    let n = free.len();
    let m = n + 1;
    let system = |ridge: f64| {
        let mut a = vec![0.0; m * m];
        let mut b = vec![0.0; m];
        for (r, &i) in free.iter().enumerate() {
            for (c, &j) in free.iter().enumerate() {
                a[r * m + c] = gram[i * k + j];
            }
            a[r * m + r] += ridge;
            a[r * m + n] = 1.0;
            a[n * m + r] = 1.0;
            b[r] = h[i];
        }
        b[n] = 1.0;
        (a, b)
    };
    let (a, b) = system(0.0);
    let sol = solve_dense(a, b, m)
        .or_else(|| {
            // affinely dependent anchors
            let ridge = 1e-12 * (0..k).map(|i| gram[i * k + i]).fold(1e-300, f64::max);
            let (a, b) = system(ridge);
            solve_dense(a, b, m)
        })
        .unwrap_or_else(|| vec![1.0 / n as f64; m]);
    sol[..n].to_vec()
}

/// Gaussian elimination with partial pivoting. `None` if singular.
pub(crate) fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    let norm = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..n {
        let pivot = (col..n).max_by(|&r1, &r2| a[r1 * n + col].abs().total_cmp(&a[r2 * n + col].abs()))?;
        if a[pivot * n + col].abs() <= 1e-15 * norm {
            return None;
        }
        if pivot != col {
            for c in 0..n {
                a.swap(col * n + c, pivot * n + c);
            }
            b.swap(col, pivot);
        }
        for r in (col + 1)..n {
            let f = a[r * n + col] / a[col * n + col];
            if f != 0.0 {
                for c in col..n {
                    a[r * n + c] -= f * a[col * n + c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = ((r + 1)..n).map(|c| a[r * n + c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r * n + r];
    }
    Some(x)
}
