//! Small dense helpers shared by the reference solver and certification.

use crate::Vector;

/// Minimises ‖base + Σ_j c_j dirs_j‖ over c ∈ [0, upper]^J by exact cyclic
/// coordinate descent. Intended for the handful of active constraints at a
/// candidate point.
pub(crate) fn bounded_least_squares(base: &Vector, dirs: &[Vector], upper: f64) -> Vec<f64> {
    let mut coef = vec![0.0; dirs.len()];
    if dirs.is_empty() {
        return coef;
    }
    let mut residual = base.clone();
    let norms: Vec<f64> = dirs.iter().map(|d| d.norm_squared()).collect();
    for _sweep in 0..10_000 {
        let mut moved = 0.0f64;
        for (j, d) in dirs.iter().enumerate() {
            if norms[j] == 0.0 {
                continue;
            }
            let next = (coef[j] - d.dot(&residual) / norms[j]).clamp(0.0, upper);
            let delta = next - coef[j];
            if delta != 0.0 {
                residual.axpy(delta, d, 1.0);
                coef[j] = next;
                moved = moved.max(delta.abs() * norms[j].sqrt());
            }
        }
        if moved <= 1e-15 * (1.0 + base.norm()) {
            break;
        }
    }
    coef
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector;

    #[test]
    fn one_dimensional_interior() {
        let c = bounded_least_squares(&vector(&[1.0]), &[vector(&[-4.0 * 2f64.sqrt() * 2.0])], 1.0);
        assert!((c[0] - 1.0 / (8.0 * 2f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn clamps_to_bounds() {
        let c = bounded_least_squares(&vector(&[1.0, 0.0]), &[vector(&[1.0, 0.0])], 1.0);
        assert_eq!(c, vec![0.0]);
        let c = bounded_least_squares(&vector(&[-5.0, 0.0]), &[vector(&[1.0, 0.0])], 1.0);
        assert_eq!(c, vec![1.0]);
    }

    #[test]
    fn two_directions() {
        // base = -(1,1), dirs e1, e2 → c = (1, 1), residual 0
        let c = bounded_least_squares(
            &vector(&[-1.0, -1.0]),
            &[vector(&[1.0, 0.0]), vector(&[0.0, 1.0])],
            f64::INFINITY,
        );
        assert!((c[0] - 1.0).abs() < 1e-12 && (c[1] - 1.0).abs() < 1e-12);
    }
}
