use std::f64::consts::{FRAC_PI_2, PI};

use super::{dist, shoelace, Point};
use crate::error::{Error, Result};

/// Parametric description of a computational domain. All shapes are centered
/// at the origin and mirror-symmetric about the y axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShapeSpec {
    Disk {
        radius: f64,
    },
    Rectangle {
        width: f64,
        height: f64,
    },
    /// Two equal disks joined by a straight neck of length `neck_length`
    /// measured between the points where the neck meets the lobes.
    Dumbbell {
        lobe_radius: f64,
        neck_half_width: f64,
        neck_length: f64,
    },
    /// The curve `(x^2 + y^2 - 1)^3 = x^2 y^3` scaled linearly by `scale`.
    Heart {
        scale: f64,
    },
}

const HEART_FINE_SAMPLES: usize = 4096;

impl ShapeSpec {
    /// A heart whose enclosed area equals `area`.
    pub fn heart_with_area(area: f64) -> Result<Self> {
        if !(area > 0.0) || !area.is_finite() {
            return Err(Error::InvalidShape("heart area must be positive".into()));
        }
        Ok(ShapeSpec::Heart {
            scale: (area / unit_heart_area()).sqrt(),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ShapeSpec::Disk { .. } => "disk",
            ShapeSpec::Rectangle { .. } => "rectangle",
            ShapeSpec::Dumbbell { .. } => "dumbbell",
            ShapeSpec::Heart { .. } => "heart",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let params: Vec<(&str, f64)> = match *self {
            ShapeSpec::Disk { radius } => vec![("radius", radius)],
            ShapeSpec::Rectangle { width, height } => vec![("width", width), ("height", height)],
            ShapeSpec::Dumbbell {
                lobe_radius,
                neck_half_width,
                neck_length,
            } => vec![
                ("lobe_radius", lobe_radius),
                ("neck_half_width", neck_half_width),
                ("neck_length", neck_length),
            ],
            ShapeSpec::Heart { scale } => vec![("scale", scale)],
        };
        for (name, v) in params {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidShape(format!(
                    "{} parameter {name} must be positive and finite, got {v}",
                    self.name()
                )));
            }
        }
        if let ShapeSpec::Dumbbell {
            lobe_radius,
            neck_half_width,
            ..
        } = *self
        {
            if neck_half_width >= lobe_radius {
                return Err(Error::InvalidShape(format!(
                    "dumbbell neck_half_width {neck_half_width} must be smaller than lobe_radius {lobe_radius}"
                )));
            }
        }
        Ok(())
    }

    /// Smallest feature length the mesh size must resolve.
    pub fn min_feature(&self) -> f64 {
        match *self {
            ShapeSpec::Disk { radius } => radius,
            ShapeSpec::Rectangle { width, height } => width.min(height),
            ShapeSpec::Dumbbell {
                lobe_radius,
                neck_half_width,
                neck_length,
            } => lobe_radius.min(neck_length).min(2.0 * neck_half_width),
            ShapeSpec::Heart { scale } => scale,
        }
    }

    /// Exact area of the continuous shape.
    pub fn analytic_area(&self) -> f64 {
        match *self {
            ShapeSpec::Disk { radius } => PI * radius * radius,
            ShapeSpec::Rectangle { width, height } => width * height,
            ShapeSpec::Dumbbell {
                lobe_radius,
                neck_half_width,
                neck_length,
            } => 2.0 * PI * lobe_radius * lobe_radius + 2.0 * neck_half_width * neck_length,
            ShapeSpec::Heart { scale } => scale * scale * unit_heart_area(),
        }
    }

    /// Centers of the dumbbell lobes, `None` for other shapes.
    pub fn lobe_centers(&self) -> Option<[Point; 2]> {
        match *self {
            ShapeSpec::Dumbbell {
                lobe_radius,
                neck_half_width,
                neck_length,
            } => {
                let c = 0.5 * neck_length + (lobe_radius.powi(2) - neck_half_width.powi(2)).sqrt();
                Some([[-c, 0.0], [c, 0.0]])
            }
            _ => None,
        }
    }

    /// Counter-clockwise boundary polygon with consecutive vertices at most
    /// `h` apart (chord length).
    pub fn boundary_polygon(&self, h: f64) -> Vec<Point> {
        match *self {
            ShapeSpec::Disk { radius } => arc([0.0, 0.0], radius, 0.0, 2.0 * PI, h, false),
            ShapeSpec::Rectangle { width, height } => {
                let (a, b) = (0.5 * width, 0.5 * height);
                let corners = [[-a, -b], [a, -b], [a, b], [-a, b]];
                let mut out = Vec::new();
                for k in 0..4 {
                    segment(&mut out, corners[k], corners[(k + 1) % 4], h);
                }
                out
            }
            ShapeSpec::Dumbbell {
                lobe_radius,
                neck_half_width,
                neck_length,
            } => {
                let [left, right] = self.lobe_centers().unwrap();
                let phi0 = (neck_half_width / lobe_radius).asin();
                let l2 = 0.5 * neck_length;
                let mut out = arc(right, lobe_radius, -PI + phi0, PI - phi0, h, true);
                out.pop();
                segment(&mut out, [l2, neck_half_width], [-l2, neck_half_width], h);
                let mut lobe = arc(left, lobe_radius, phi0, 2.0 * PI - phi0, h, true);
                lobe.pop();
                out.extend(lobe);
                segment(&mut out, [-l2, -neck_half_width], [l2, -neck_half_width], h);
                out
            }
            ShapeSpec::Heart { scale } => heart_polygon(scale, h),
        }
    }
}

/// Points on a circular arc from angle `t0` to `t1` (counter-clockwise). The
/// closing point is included only when `include_end` is set.
fn arc(center: Point, r: f64, t0: f64, t1: f64, h: f64, include_end: bool) -> Vec<Point> {
    let span = t1 - t0;
    // chord 2 r sin(dt/2) <= h
    let max_dt = 2.0 * (0.5 * h / r).min(1.0).asin();
    let n = (span / max_dt).ceil().max(3.0) as usize;
    let last = if include_end { n } else { n - 1 };
    (0..=last)
        .map(|k| {
            let t = t0 + span * k as f64 / n as f64;
            [center[0] + r * t.cos(), center[1] + r * t.sin()]
        })
        .collect()
}

/// Appends `a` and the interior subdivision points of segment `ab` (not `b`).
fn segment(out: &mut Vec<Point>, a: Point, b: Point, h: f64) {
    let n = (dist(a, b) / h).ceil().max(1.0) as usize;
    for k in 0..n {
        let s = k as f64 / n as f64;
        out.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
    }
}

/// Polar radius of the unit heart along direction `phi`. The curve is
/// star-shaped about the origin, so the root is unique.
fn heart_radius(phi: f64) -> f64 {
    let c = phi.cos().powi(2) * phi.sin().powi(3);
    let g = |r: f64| (r * r - 1.0).powi(3) - c * r.powi(5);
    let (mut lo, mut hi) = if c >= 0.0 { (1.0, 2.0) } else { (0.0, 1.0) };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn heart_point(phi: f64, scale: f64) -> Point {
    let r = scale * heart_radius(phi);
    [r * phi.cos(), r * phi.sin()]
}

pub(crate) fn unit_heart_area() -> f64 {
    use std::sync::OnceLock;
    static AREA: OnceLock<f64> = OnceLock::new();
    *AREA.get_or_init(|| {
        let n = 1 << 16;
        let poly: Vec<Point> = (0..n)
            .map(|k| heart_point(-FRAC_PI_2 + 2.0 * PI * k as f64 / n as f64, 1.0))
            .collect();
        shoelace(&poly)
    })
}

/// Right half sampled uniformly in arc length from the bottom tip to the top
/// dip, then mirrored so the polygon is exactly symmetric.
fn heart_polygon(scale: f64, h: f64) -> Vec<Point> {
    let m = HEART_FINE_SAMPLES;
    let phis: Vec<f64> = (0..=m)
        .map(|k| -FRAC_PI_2 + PI * k as f64 / m as f64)
        .collect();
    let fine: Vec<Point> = phis.iter().map(|&p| heart_point(p, scale)).collect();
    let mut cum = vec![0.0; m + 1];
    for k in 1..=m {
        cum[k] = cum[k - 1] + dist(fine[k - 1], fine[k]);
    }
    let total = cum[m];
    // the fine polyline underestimates arc length; pad the count slightly
    let n = ((1.02 * total / h).ceil() as usize).max(4);
    let mut right = Vec::with_capacity(n + 1);
    let mut seg = 0;
    for k in 0..=n {
        let s = total * k as f64 / n as f64;
        while seg + 1 < m && cum[seg + 1] < s {
            seg += 1;
        }
        let w = if cum[seg + 1] > cum[seg] {
            ((s - cum[seg]) / (cum[seg + 1] - cum[seg])).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let phi = if k == 0 {
            -FRAC_PI_2
        } else if k == n {
            FRAC_PI_2
        } else {
            phis[seg] + w * (phis[seg + 1] - phis[seg])
        };
        right.push(heart_point(phi, scale));
    }
    // exact symmetry axis points
    right[0][0] = 0.0;
    right[n][0] = 0.0;
    let mut out = right.clone();
    out.extend(right[1..n].iter().rev().map(|p| [-p[0], p[1]]));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heart_radius_solves_the_curve() {
        for k in 0..50 {
            let phi = -PI + 2.0 * PI * k as f64 / 50.0;
            let [x, y] = heart_point(phi, 1.0);
            let lhs = (x * x + y * y - 1.0).powi(3);
            let rhs = x * x * y.powi(3);
            assert!((lhs - rhs).abs() < 1e-12, "phi={phi}");
        }
    }

    #[test]
    fn heart_with_area_scales() {
        let s = ShapeSpec::heart_with_area(18.85).unwrap();
        assert!((s.analytic_area() - 18.85).abs() < 1e-9);
        let poly = s.boundary_polygon(0.05);
        assert!((shoelace(&poly) - 18.85).abs() / 18.85 < 1e-3);
    }

    #[test]
    fn polygons_respect_spacing_and_orientation() {
        let shapes = [
            ShapeSpec::Disk { radius: 2.0 },
            ShapeSpec::Rectangle {
                width: 5.0,
                height: 4.0,
            },
            ShapeSpec::Dumbbell {
                lobe_radius: 1.0,
                neck_half_width: 0.2,
                neck_length: 1.0,
            },
            ShapeSpec::Heart { scale: 2.0 },
        ];
        for s in shapes {
            let h = 0.1;
            let poly = s.boundary_polygon(h);
            assert!(shoelace(&poly) > 0.0, "{s:?}");
            for i in 0..poly.len() {
                let d = dist(poly[i], poly[(i + 1) % poly.len()]);
                assert!(d <= h * (1.0 + 1e-9) && d > 0.2 * h, "{s:?} edge {i}: {d}");
            }
        }
    }

    #[test]
    fn validation() {
        assert!(ShapeSpec::Disk { radius: -1.0 }.validate().is_err());
        assert!(ShapeSpec::Dumbbell {
            lobe_radius: 1.0,
            neck_half_width: 1.0,
            neck_length: 1.0
        }
        .validate()
        .is_err());
        assert!(ShapeSpec::Rectangle {
            width: 1.0,
            height: f64::NAN
        }
        .validate()
        .is_err());
    }
}
