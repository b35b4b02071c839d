use crate::field::Fp;

/// Solves `A x = b` over `F_p` by Gauss-Jordan elimination. Returns some
/// solution (free variables set to zero) or `None` if the system is
/// inconsistent.
pub fn solve(mut a: Vec<Vec<Fp>>, mut b: Vec<Fp>, unknowns: usize) -> Option<Vec<Fp>> {
    let rows = a.len();
    let modulus = b.first()?.modulus();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..unknowns {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        b.swap(r, p);
        let inv = a[r][c].inv().ok()?;
        for v in a[r].iter_mut() {
            *v *= inv;
        }
        b[r] *= inv;
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c];
                for k in c..unknowns {
                    let s = a[r][k];
                    a[i][k] -= f * s;
                }
                let s = b[r];
                b[i] -= f * s;
            }
        }
        pivots.push(c);
        r += 1;
    }
    if b[r..].iter().any(|v| !v.is_zero()) {
        return None;
    }
    let mut x = vec![Fp::zero(modulus); unknowns];
    for (row, &c) in pivots.iter().enumerate() {
        x[c] = b[row];
    }
    Some(x)
}
