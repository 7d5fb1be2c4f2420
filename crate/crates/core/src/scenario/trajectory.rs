use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::{wrap_degrees, Point3, Pose};

pub const DEFAULT_SPEED_KMH: f64 = 3.0;
/// Heading excursion either side of facing the BS.
pub const ROTATION_AMPLITUDE_DEG: f64 = 90.0;

fn default_speed() -> f64 {
    DEFAULT_SPEED_KMH
}
fn default_spot() -> Point3 {
    Point3::new(3.0, 0.0, 0.0)
}
fn default_period() -> f64 {
    8.0
}
fn default_horizontal_range() -> f64 {
    5.0
}
fn default_horizontal_extent() -> f64 {
    8.0
}
fn default_vertical_start() -> f64 {
    2.0
}
fn default_vertical_end() -> f64 {
    10.0
}
fn default_circle_center() -> f64 {
    6.0
}
fn default_circle_radius() -> f64 {
    3.0
}

/// UE motion in room coordinates (BS at the origin looking along +x).
/// Headings are relative to facing the BS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Trajectory {
    FixedRotation {
        #[serde(default = "default_spot")]
        spot_m: Point3,
        #[serde(default = "default_period")]
        period_s: f64,
        /// Fraction of a period already elapsed at time zero.
        #[serde(default)]
        phase: f64,
    },
    /// Ping-pong across the room at `range_m` from the BS.
    Horizontal {
        #[serde(default = "default_speed")]
        speed_kmh: f64,
        #[serde(default = "default_horizontal_range")]
        range_m: f64,
        #[serde(default = "default_horizontal_extent")]
        extent_m: f64,
    },
    /// Ping-pong radially away from the BS.
    Vertical {
        #[serde(default = "default_speed")]
        speed_kmh: f64,
        #[serde(default = "default_vertical_start")]
        start_m: f64,
        #[serde(default = "default_vertical_end")]
        end_m: f64,
    },
    /// Circle starting at the point nearest the BS.
    Circled {
        #[serde(default = "default_speed")]
        speed_kmh: f64,
        #[serde(default = "default_circle_center")]
        center_m: f64,
        #[serde(default = "default_circle_radius")]
        radius_m: f64,
    },
}

impl Default for Trajectory {
    fn default() -> Self {
        Trajectory::FixedRotation {
            spot_m: default_spot(),
            period_s: default_period(),
            phase: 0.0,
        }
    }
}

/// Triangle wave with period 1: 0 at 0, +1 at 1/4, 0 at 1/2, -1 at 3/4.
fn triangle(u: f64) -> f64 {
    let u = u.rem_euclid(1.0);
    if u < 0.25 {
        4.0 * u
    } else if u < 0.75 {
        2.0 - 4.0 * u
    } else {
        4.0 * u - 4.0
    }
}

/// Distance along a back-and-forth segment of `length` after travelling `s`.
fn ping_pong(s: f64, length: f64) -> f64 {
    if length <= 0.0 {
        return 0.0;
    }
    let s = s.rem_euclid(2.0 * length);
    if s <= length {
        s
    } else {
        2.0 * length - s
    }
}

impl Trajectory {
    pub fn validate(&self) -> Result<(), String> {
        let speed_ok = |v: f64| v >= 0.0 && v.is_finite();
        match *self {
            Trajectory::FixedRotation {
                period_s, phase, ..
            } => {
                if !(period_s > 0.0 && period_s.is_finite()) {
                    return Err("period_s must be positive".into());
                }
                if !phase.is_finite() {
                    return Err("phase must be finite".into());
                }
            }
            Trajectory::Horizontal {
                speed_kmh,
                range_m,
                extent_m,
            } => {
                if !speed_ok(speed_kmh) {
                    return Err("speed_kmh must be >= 0".into());
                }
                if !(range_m > 0.0) || !(extent_m >= 0.0) {
                    return Err("range_m must be positive and extent_m non-negative".into());
                }
            }
            Trajectory::Vertical {
                speed_kmh,
                start_m,
                end_m,
            } => {
                if !speed_ok(speed_kmh) {
                    return Err("speed_kmh must be >= 0".into());
                }
                if !(start_m > 0.0 && end_m > 0.0) {
                    return Err("start_m and end_m must be positive".into());
                }
            }
            Trajectory::Circled {
                speed_kmh,
                center_m,
                radius_m,
            } => {
                if !speed_ok(speed_kmh) {
                    return Err("speed_kmh must be >= 0".into());
                }
                if !(radius_m >= 0.0 && center_m - radius_m > 0.0) {
                    return Err("circle must stay in front of the BS".into());
                }
            }
        }
        Ok(())
    }
}

/// Pose at `time` seconds. The heading is relative to facing the BS; see
/// [`facing_pose`] for the global form.
pub fn trajectory_position(t: &Trajectory, time: f64) -> Pose {
    match *t {
        Trajectory::FixedRotation {
            spot_m,
            period_s,
            phase,
        } => Pose {
            position: spot_m,
            heading_deg: ROTATION_AMPLITUDE_DEG * triangle(time / period_s + phase),
        },
        Trajectory::Horizontal {
            speed_kmh,
            range_m,
            extent_m,
        } => {
            let s = ping_pong(speed_kmh / 3.6 * time, extent_m);
            Pose {
                position: Point3::new(range_m, -extent_m / 2.0 + s, 0.0),
                heading_deg: 0.0,
            }
        }
        Trajectory::Vertical {
            speed_kmh,
            start_m,
            end_m,
        } => {
            let length = (end_m - start_m).abs();
            let s = ping_pong(speed_kmh / 3.6 * time, length);
            Pose {
                position: Point3::new(start_m + s * (end_m - start_m).signum(), 0.0, 0.0),
                heading_deg: 0.0,
            }
        }
        Trajectory::Circled {
            speed_kmh,
            center_m,
            radius_m,
        } => {
            let phi = if radius_m > 0.0 {
                (speed_kmh / 3.6 * time / radius_m).rem_euclid(2.0 * PI)
            } else {
                0.0
            };
            Pose {
                position: Point3::new(center_m - radius_m * phi.cos(), radius_m * phi.sin(), 0.0),
                heading_deg: 0.0,
            }
        }
    }
}

/// Converts a BS-relative heading into a global azimuth, after moving the
/// UE by `offset`.
pub fn facing_pose(relative: &Pose, offset: &Point3, bs_center: &Point3) -> Pose {
    let position = relative.position.offset(offset);
    Pose {
        position,
        heading_deg: wrap_degrees(position.azimuth_to(bs_center) + relative.heading_deg),
    }
}
