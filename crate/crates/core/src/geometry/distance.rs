use crate::Vec3;

/// Closest points between segments `[p0, p1]` and `[q0, q1]`.
///
/// Returns `(u, v, distance)` with `u, v ∈ [0, 1]` the segment parameters of
/// the closest pair.
pub fn segment_segment(p0: &Vec3, p1: &Vec3, q0: &Vec3, q1: &Vec3) -> (f64, f64, f64) {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    let eps = 1e-300;

    let (s, t) = if a <= eps && e <= eps {
        (0.0, 0.0)
    } else if a <= eps {
        (0.0, (f / e).clamp(0.0, 1.0))
    } else {
        let c = d1.dot(&r);
        if e <= eps {
            ((-c / a).clamp(0.0, 1.0), 0.0)
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s = if denom > 1e-14 * a * e {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t = (b * s + f) / e;
            if t < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            }
            (s, t)
        }
    };
    let dist = ((p0 + d1 * s) - (q0 + d2 * t)).norm();
    (s, t, dist)
}

/// Distance from `x` to the segment `[a, b]`.
pub fn point_segment(x: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let d = b - a;
    let len2 = d.dot(&d);
    let u = if len2 > 0.0 {
        ((x - a).dot(&d) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (x - (a + d * u)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn skew_segments() {
        let (s, t, d) = segment_segment(
            &Vec3::new(-1.0, 0.0, 0.0),
            &Vec3::new(1.0, 0.0, 0.0),
            &Vec3::new(0.0, -1.0, 0.5),
            &Vec3::new(0.0, 1.0, 0.5),
        );
        assert_relative_eq!(d, 0.5, epsilon = 1e-15);
        assert_relative_eq!(s, 0.5, epsilon = 1e-15);
        assert_relative_eq!(t, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn parallel_and_endpoint_cases() {
        let (_, _, d) = segment_segment(
            &Vec3::zeros(),
            &Vec3::new(1.0, 0.0, 0.0),
            &Vec3::new(2.0, 1.0, 0.0),
            &Vec3::new(3.0, 1.0, 0.0),
        );
        assert_relative_eq!(d, 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(
            point_segment(&Vec3::new(0.5, 2.0, 0.0), &Vec3::zeros(), &Vec3::new(1.0, 0.0, 0.0)),
            2.0
        );
    }
}
