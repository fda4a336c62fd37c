//! Initial conditions used by the reference experiments.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::spectral::{Field, PeriodicGrid};

fn require_2d(grid: &PeriodicGrid) -> Result<()> {
    if grid.dim() == 2 {
        Ok(())
    } else {
        Err(Error::InvalidGrid(format!(
            "initial condition needs a 2-D grid, got dim = {}",
            grid.dim()
        )))
    }
}

/// `0.05 sin(x) sin(y)`.
pub fn ic_sine(grid: &Arc<PeriodicGrid>) -> Result<Field> {
    require_2d(grid)?;
    Field::from_fn(grid.clone(), |x, y| 0.05 * x.sin() * y.sin())
}

/// `0.25` inside the closed disk `(x-π)² + (y-π)² ≤ 1.2`, `-0.25` outside.
pub fn ic_disk(grid: &Arc<PeriodicGrid>) -> Result<Field> {
    require_2d(grid)?;
    Field::from_fn(grid.clone(), |x, y| {
        let r2 = (x - PI).powi(2) + (y - PI).powi(2);
        let chi = if r2 <= 1.2 { 1.0 } else { 0.0 };
        0.5 * (chi - 0.5)
    })
}

/// Centres `(x_i, y_i)` and radii `r_i` of the seven circles.
pub const SEVEN_CIRCLES: [(f64, f64, f64); 7] = [
    (PI / 2.0, PI / 2.0, PI / 5.0),
    (PI / 4.0, 3.0 * PI / 4.0, 2.0 * PI / 15.0),
    (PI / 2.0, 5.0 * PI / 4.0, 2.0 * PI / 15.0),
    (PI, PI / 4.0, PI / 10.0),
    (3.0 * PI / 2.0, PI / 4.0, PI / 10.0),
    (PI, PI, PI / 4.0),
    (3.0 * PI / 2.0, 3.0 * PI / 2.0, PI / 4.0),
];

/// Smoothed indicator profile: `2 e^{-ε²/s²}` for `s < 0`, else `0`.
pub fn circle_profile(s: f64, epsilon: f64) -> f64 {
    if s < 0.0 {
        2.0 * (-(epsilon * epsilon) / (s * s)).exp()
    } else {
        0.0
    }
}

/// `-1 + Σ_i f₀(|x - c_i| - r_i)` over the seven circles.
pub fn ic_seven_circles(grid: &Arc<PeriodicGrid>, epsilon: f64) -> Result<Field> {
    require_2d(grid)?;
    Field::from_fn(grid.clone(), |x, y| {
        -1.0 + SEVEN_CIRCLES
            .iter()
            .map(|&(cx, cy, r)| {
                let d = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
                circle_profile(d - r, epsilon)
            })
            .sum::<f64>()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;

    #[test]
    fn sine_values() {
        let g = make_grid(64, 2.0 * PI, 2).unwrap();
        let u = ic_sine(&g).unwrap();
        // node (16, 16) is (π/2, π/2)
        assert!((u.values()[16 * 64 + 16] - 0.05).abs() < 1e-16);
        assert!((u.max_abs() - 0.05).abs() < 1e-16);
        assert!(u.mean().abs() < 1e-15);
        assert!(ic_sine(&make_grid(64, 2.0 * PI, 1).unwrap()).is_err());
    }

    #[test]
    fn disk_values() {
        let g = make_grid(64, 2.0 * PI, 2).unwrap();
        let u = ic_disk(&g).unwrap();
        assert_eq!(u.values()[32 * 64 + 32], 0.25);
        assert_eq!(u.values()[0], -0.25);
        assert_eq!(u.max_abs(), 0.25);
    }

    #[test]
    fn seven_circles_values() {
        let g = make_grid(64, 2.0 * PI, 2).unwrap();
        let u = ic_seven_circles(&g, 0.1).unwrap();
        let centre = u.values()[16 * 64 + 16];
        let expected = -1.0 + 2.0 * (-0.01 / (PI / 5.0).powi(2)).exp();
        assert!((centre - expected).abs() < 1e-14);
        assert!((expected - 0.949_97).abs() < 1e-5);

        let probe = -1.0
            + SEVEN_CIRCLES
                .iter()
                .map(|&(cx, cy, r)| {
                    let (x, y) = (2.0 * PI - 0.01, 0.01);
                    circle_profile(((x - cx).powi(2) + (y - cy).powi(2)).sqrt() - r, 0.1)
                })
                .sum::<f64>();
        assert_eq!(probe, -1.0);
    }

    #[test]
    fn profile_vanishes_continuously() {
        for s in [1e-2, 1e-3] {
            let inside = circle_profile(-s, 0.1);
            assert!(inside <= 2.0 * (-0.01 / (s * s)).exp());
            assert_eq!(circle_profile(s, 0.1), 0.0);
        }
        assert!(circle_profile(-1e-2, 0.1) < 1e-40);
    }
}
