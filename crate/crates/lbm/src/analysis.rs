//! Observables measured on scalar and vector fields.
//!
//! These run on plain fields so they apply equally to in-memory simulation
//! state and to snapshots read back from disk. Periodic quantities use
//! minimal-image coordinates relative to the field dimensions.

use crate::field::{ScalarField, VectorField};

/// Sum over all nodes.
pub fn total(field: &ScalarField) -> f64 {
    field.sum()
}

/// Mean over a rectangular window, clamped to the field.
/// `x0..x1` and `y0..y1` are half-open index ranges.
pub fn window_mean(field: &ScalarField, x0: usize, x1: usize, y0: usize, y1: usize) -> f64 {
    let x1 = x1.min(field.nx());
    let y1 = y1.min(field.ny());
    if x0 >= x1 || y0 >= y1 {
        return f64::NAN;
    }
    let mut s = 0.0;
    for y in y0..y1 {
        for x in x0..x1 {
            s += field.get(x, y);
        }
    }
    s / ((x1 - x0) * (y1 - y0)) as f64
}

/// Mean over the row of nodes adjacent to the given wall, `depth` nodes deep.
pub fn band_mean(field: &ScalarField, edge: crate::bc::BoundaryEdge, depth: usize) -> f64 {
    use crate::bc::BoundaryEdge::*;
    let (nx, ny) = (field.nx(), field.ny());
    let d = depth.max(1);
    match edge {
        Top => window_mean(field, 0, nx, ny - d.min(ny), ny),
        Bottom => window_mean(field, 0, nx, 0, d.min(ny)),
        Left => window_mean(field, 0, d.min(nx), 0, ny),
        Right => window_mean(field, nx - d.min(nx), nx, 0, ny),
    }
}

/// Location of the maximum value, ties broken toward smaller y then smaller x.
pub fn argmax(field: &ScalarField) -> (usize, usize) {
    let mut best = f64::NEG_INFINITY;
    let mut at = (0, 0);
    for y in 0..field.ny() {
        for x in 0..field.nx() {
            let v = field.get(x, y);
            if v > best {
                best = v;
                at = (x, y);
            }
        }
    }
    at
}

/// Subcell peak location: the argmax refined along each axis by fitting a
/// parabola through the three values around it (periodic neighbours).
/// Returns (x, y, peak_value_estimate).
pub fn peak_subcell(field: &ScalarField) -> (f64, f64, f64) {
    let (ix, iy) = argmax(field);
    let (nx, ny) = (field.nx(), field.ny());
    let center = field.get(ix, iy);
    let refine = |m: f64, c: f64, p: f64| -> (f64, f64) {
        let denom = m - 2.0 * c + p;
        if denom.abs() < 1e-300 {
            return (0.0, c);
        }
        let d = 0.5 * (m - p) / denom;
        let d = d.clamp(-0.5, 0.5);
        (d, c - 0.25 * (m - p) * d)
    };
    let (dx, vx) = refine(
        field.get((ix + nx - 1) % nx, iy),
        center,
        field.get((ix + 1) % nx, iy),
    );
    let (dy, vy) = refine(
        field.get(ix, (iy + ny - 1) % ny),
        center,
        field.get(ix, (iy + 1) % ny),
    );
    (ix as f64 + dx, iy as f64 + dy, vx.max(vy).max(center))
}

/// Minimal-image displacement from `a` to `b` on a periodic axis of size `n`.
pub fn periodic_delta(a: f64, b: f64, n: usize) -> f64 {
    let n = n as f64;
    let mut d = (b - a) % n;
    if d > n / 2.0 {
        d -= n;
    } else if d < -n / 2.0 {
        d += n;
    }
    d
}

/// Second moment of the field about a point, per axis, using minimal-image
/// offsets. Returns (var_x, var_y) weighted by the field values.
/// Negative values are clipped to zero weight so the estimate stays usable
/// on fields with small undershoots.
pub fn second_moment_about(field: &ScalarField, cx: f64, cy: f64) -> (f64, f64) {
    let (nx, ny) = (field.nx(), field.ny());
    let mut w = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for y in 0..ny {
        let dy = periodic_delta(cy, y as f64, ny);
        for x in 0..nx {
            let v = field.get(x, y).max(0.0);
            let dx = periodic_delta(cx, x as f64, nx);
            w += v;
            sxx += v * dx * dx;
            syy += v * dy * dy;
        }
    }
    if w <= 0.0 {
        return (f64::NAN, f64::NAN);
    }
    (sxx / w, syy / w)
}

/// Horizontal extent of the region where the field exceeds `level`, measured
/// on the middle row as the average of the two outward crossings from the
/// row's maximum. Crossings are located by linear interpolation; if the
/// whole row is above the level the extent is the full row. Returns the
/// half-width (radius), or NaN when the maximum is below the level.
pub fn front_radius_x(field: &ScalarField, level: f64) -> f64 {
    let (nx, ny) = (field.nx(), field.ny());
    let row = ny / 2;
    let mut ix = 0;
    let mut best = f64::NEG_INFINITY;
    for x in 0..nx {
        let v = field.get(x, row);
        if v > best {
            best = v;
            ix = x;
        }
    }
    if best < level {
        return f64::NAN;
    }
    let cross = |step: i64| -> f64 {
        let mut prev = best;
        for k in 1..nx as i64 {
            let x = (ix as i64 + step * k).rem_euclid(nx as i64) as usize;
            let v = field.get(x, row);
            if v < level {
                // linear interpolation between the node above and below level
                let t = (prev - level) / (prev - v);
                return (k - 1) as f64 + t;
            }
            prev = v;
        }
        (nx - 1) as f64
    };
    0.5 * (cross(1) + cross(-1))
}

/// x-velocity profile along the vertical centerline, bottom to top.
pub fn centerline_ux(u: &VectorField) -> Vec<f64> {
    let x = u.nx() / 2;
    (0..u.ny()).map(|y| u.get(x, y).0).collect()
}

/// Ordinary least-squares line through (x, y) samples.
/// Returns (slope, intercept); None with fewer than two distinct x values.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Largest speed anywhere in the field.
pub fn max_speed(u: &VectorField) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..u.x_plane().len() {
        let vx = u.x_plane()[j];
        let vy = u.y_plane()[j];
        m = m.max((vx * vx + vy * vy).sqrt());
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_breaks_ties_toward_low_y_then_low_x() {
        let mut f = ScalarField::new(5, 5);
        f.set(3, 1, 2.0);
        f.set(1, 3, 2.0);
        assert_eq!(argmax(&f), (3, 1));
        let mut g = ScalarField::new(5, 5);
        g.set(4, 2, 2.0);
        g.set(1, 2, 2.0);
        assert_eq!(argmax(&g), (1, 2));
    }

    #[test]
    fn subcell_peak_recovers_gaussian_center() {
        let f = ScalarField::from_fn(32, 32, |x, y| {
            let dx = x as f64 - 13.3;
            let dy = y as f64 - 20.7;
            (-(dx * dx + dy * dy) / (2.0 * 9.0)).exp()
        });
        let (px, py, pv) = peak_subcell(&f);
        assert!((px - 13.3).abs() < 0.05, "px = {px}");
        assert!((py - 20.7).abs() < 0.05, "py = {py}");
        assert!(pv >= f.get(13, 21));
    }

    #[test]
    fn subcell_peak_wraps_across_the_periodic_seam() {
        let f = ScalarField::from_fn(16, 16, |x, y| {
            let dx = periodic_delta(15.6, x as f64, 16);
            let dy = periodic_delta(0.2, y as f64, 16);
            (-(dx * dx + dy * dy) / 8.0).exp()
        });
        let (px, py, _) = peak_subcell(&f);
        assert!(periodic_delta(px, 15.6, 16).abs() < 0.1, "px = {px}");
        assert!(periodic_delta(py, 0.2, 16).abs() < 0.1, "py = {py}");
    }

    #[test]
    fn periodic_delta_picks_the_short_way_round() {
        assert_eq!(periodic_delta(1.0, 99.0, 100), -2.0);
        assert_eq!(periodic_delta(99.0, 1.0, 100), 2.0);
        assert_eq!(periodic_delta(10.0, 30.0, 100), 20.0);
    }

    #[test]
    fn second_moment_matches_gaussian_variance() {
        let sigma2 = 16.0;
        let f = ScalarField::from_fn(100, 100, |x, y| {
            let dx = x as f64 - 50.0;
            let dy = y as f64 - 50.0;
            (-(dx * dx + dy * dy) / (2.0 * sigma2)).exp()
        });
        let (vx, vy) = second_moment_about(&f, 50.0, 50.0);
        assert!((vx - sigma2).abs() / sigma2 < 0.01, "vx = {vx}");
        assert!((vy - sigma2).abs() / sigma2 < 0.01, "vy = {vy}");
    }

    #[test]
    fn front_radius_finds_level_crossing() {
        // phi = 1 inside radius 20 of the row center, smooth ramp outside.
        let f = ScalarField::from_fn(128, 8, |x, _| {
            let d = (x as f64 - 64.0).abs();
            1.0 / (1.0 + ((d - 20.0) / 2.0).exp())
        });
        let r = front_radius_x(&f, 0.5);
        assert!((r - 20.0).abs() < 0.5, "r = {r}");
    }

    #[test]
    fn band_means_cover_the_right_edges() {
        let f = ScalarField::from_fn(4, 3, |x, y| (10 * y + x) as f64);
        use crate::bc::BoundaryEdge::*;
        assert_eq!(band_mean(&f, Bottom, 1), 1.5);
        assert_eq!(band_mean(&f, Top, 1), 21.5);
        assert_eq!(band_mean(&f, Left, 1), 10.0);
        assert_eq!(band_mean(&f, Right, 1), 13.0);
    }

    #[test]
    fn window_mean_clamps_and_rejects_empty() {
        let f = ScalarField::constant(4, 4, 2.0);
        assert_eq!(window_mean(&f, 0, 10, 0, 10), 2.0);
        assert!(window_mean(&f, 2, 2, 0, 4).is_nan());
    }

    #[test]
    fn linear_fit_recovers_an_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.25).collect();
        let (slope, intercept) = linear_fit(&xs, &ys).unwrap();
        assert!((slope - 2.5).abs() < 1e-12);
        assert!((intercept + 1.25).abs() < 1e-12);
    }

    #[test]
    fn linear_fit_rejects_degenerate_input() {
        assert!(linear_fit(&[1.0], &[2.0]).is_none());
        assert!(linear_fit(&[3.0, 3.0], &[1.0, 2.0]).is_none());
        assert!(linear_fit(&[1.0, 2.0], &[1.0]).is_none());
    }
}
