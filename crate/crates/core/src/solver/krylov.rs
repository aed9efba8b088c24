//! Restarted GMRES for the Newton correction equation.

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    /// `‖b − Ax‖₂ / ‖b‖₂` as tracked by the Arnoldi recurrence.
    pub relative_residual: f64,
    pub iterations: usize,
}

/// Solves `A x = b` from `x = 0` with restarted GMRES(m).
pub fn gmres(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    rel_tol: f64,
    restart: usize,
    max_iterations: usize,
) -> GmresOutcome {
    let n = b.len();
    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return GmresOutcome {
            x,
            relative_residual: 0.0,
            iterations: 0,
        };
    }
    let mut iterations = 0;
    let mut rel = 1.0;
    while iterations < max_iterations {
        let ax = apply(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        rel = beta / b_norm;
        if rel <= rel_tol {
            break;
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        // Hessenberg columns after Givens rotations
        let mut h: Vec<Vec<f64>> = Vec::new();
        let mut cs: Vec<f64> = Vec::new();
        let mut sn: Vec<f64> = Vec::new();
        let mut g = vec![beta];
        for j in 0..restart {
            if iterations >= max_iterations {
                break;
            }
            iterations += 1;
            let mut w = apply(&basis[j]);
            let mut col = Vec::with_capacity(j + 2);
            // modified Gram–Schmidt
            for v in &basis {
                let hij = dot(&w, v);
                for (wk, vk) in w.iter_mut().zip(v) {
                    *wk -= hij * vk;
                }
                col.push(hij);
            }
            let w_norm = norm(&w);
            col.push(w_norm);
            for i in 0..j {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let denom = col[j].hypot(col[j + 1]);
            let (c, s) = if denom == 0.0 {
                (1.0, 0.0)
            } else {
                (col[j] / denom, col[j + 1] / denom)
            };
            col[j] = denom;
            col[j + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            g.push(-s * g[j]);
            g[j] *= c;
            h.push(col);
            rel = g[j + 1].abs() / b_norm;
            if rel <= rel_tol || w_norm == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / w_norm).collect());
        }
        // back substitution on the triangular system
        let m = h.len();
        let mut y = vec![0.0; m];
        for i in (0..m).rev() {
            let mut s = g[i];
            for (k, yk) in y.iter().enumerate().take(m).skip(i + 1) {
                s -= h[k][i] * yk;
            }
            y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
        }
        for (yi, v) in y.iter().zip(&basis) {
            for (xk, vk) in x.iter_mut().zip(v) {
                *xk += yi * vk;
            }
        }
        if rel <= rel_tol {
            break;
        }
    }
    GmresOutcome {
        x,
        relative_residual: rel,
        iterations,
    }
}
