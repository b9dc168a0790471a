//! Small geometric helpers shared by the map, graph and planners.

use std::f64::consts::PI;

pub use nalgebra::{Point3, Vector3};

pub type Point = Point3<f64>;

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = angle % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Axis-aligned box in world coordinates (meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn new(min: Point, max: Point) -> Self {
        Self { min, max }
    }

    pub fn centered(center: Point, half: Vector3<f64>) -> Self {
        Self {
            min: center - half,
            max: center + half,
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    /// Intersection box, `None` when the boxes are disjoint.
    pub fn intersection(&self, other: &Aabb) -> Option<Aabb> {
        let mut min = Point::origin();
        let mut max = Point::origin();
        for i in 0..3 {
            min[i] = self.min[i].max(other.min[i]);
            max[i] = self.max[i].min(other.max[i]);
            if min[i] > max[i] {
                return None;
            }
        }
        Some(Aabb { min, max })
    }

    pub fn center(&self) -> Point {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn extent(&self) -> Vector3<f64> {
        self.max - self.min
    }

    /// Distance from `p` to the closest point of the box (0 inside).
    pub fn distance_to(&self, p: &Point) -> f64 {
        let mut d2 = 0.0;
        for i in 0..3 {
            let d = (self.min[i] - p[i]).max(0.0).max(p[i] - self.max[i]);
            d2 += d * d;
        }
        d2.sqrt()
    }
}

/// Arc length of a polyline.
pub fn polyline_length(points: &[Point]) -> f64 {
    points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((wrap_angle(-5.0 * PI) - PI).abs() < 1e-9);
        for k in -20..20 {
            let a = wrap_angle(k as f64 * 0.77);
            assert!(a > -PI && a <= PI);
        }
    }

    #[test]
    fn box_intersection() {
        let a = Aabb::new(Point::new(0.0, 0.0, 0.0), Point::new(2.0, 2.0, 2.0));
        let b = Aabb::new(Point::new(1.0, 1.0, 1.0), Point::new(3.0, 3.0, 3.0));
        let c = Aabb::new(Point::new(5.0, 0.0, 0.0), Point::new(6.0, 1.0, 1.0));
        let i = a.intersection(&b).unwrap();
        assert_eq!(i.min, Point::new(1.0, 1.0, 1.0));
        assert_eq!(i.max, Point::new(2.0, 2.0, 2.0));
        assert!(a.intersection(&c).is_none());
        assert_eq!(a.distance_to(&Point::new(1.0, 1.0, 1.0)), 0.0);
        assert!((a.distance_to(&Point::new(3.0, 1.0, 1.0)) - 1.0).abs() < 1e-12);
    }
}
