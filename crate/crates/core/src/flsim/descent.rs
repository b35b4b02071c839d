//! Runtime check of the distance bound between the aggregated update and the
//! true gradient.

use crate::Real;

fn dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<T>()
        .sqrt()
}

fn norm<T: Real>(a: &[T]) -> T {
    a.iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// `3 ||u_0 - g|| + 2 ||g|| - ||u - g||` for the exact gradient `g`.
pub fn descent_slack<T: Real>(u: &[T], u0: &[T], grad: &[T]) -> T {
    T::of(3.0) * dist(u0, grad) + T::of(2.0) * norm(grad) - dist(u, grad)
}

/// Quantization allowance `3 ||u_0|| / q`; the slack must stay above its
/// negation.
pub fn descent_tolerance<T: Real>(u0: &[T], q: u64) -> T {
    T::of(3.0) * norm(u0) / T::of(q as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_update_has_positive_slack() {
        let u0 = [1.0f64, 2.0];
        let g = [0.5, -1.0];
        let s = descent_slack(&u0, &u0, &g);
        let expect = 2.0 * dist(&u0, &g) + 2.0 * norm(&g);
        assert!((s - expect).abs() < 1e-12);
    }
}
