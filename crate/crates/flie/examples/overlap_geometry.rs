//! The footprint arithmetic behind every sideways and upward step: how
//! far the camera can move so consecutive views still overlap by the
//! configured margins, and how many sweep headings tile a half or full
//! circle at a given field of view.

use flie::planner::{footprint_stride, PlannerParams};

fn main() {
    let p = PlannerParams::default();
    println!("fov horizontal {:.1} deg, vertical {:.1} deg, standoff {} m", p.alpha.to_degrees(), p.beta.to_degrees(), p.d_safety);
    println!("overlap margins: horizontal {}, vertical {}", p.gamma_h, p.gamma_v);
    println!();

    let oh = footprint_stride(p.alpha, p.d_safety, p.gamma_h);
    let ov = footprint_stride(p.beta, p.d_safety, p.gamma_v);
    println!("lateral stride  {oh:.4} m");
    println!("vertical stride {ov:.4} m");
    println!();

    // More overlap means shorter hops; zero margin walks a full footprint.
    println!("lateral stride vs overlap margin:");
    for gamma in [0.0, 0.25, 0.5, 0.75, 0.9] {
        println!("  margin {gamma:.2} -> {:.4} m", footprint_stride(p.alpha, p.d_safety, gamma));
    }
    println!();

    // Sweep cardinality: half circle at half-fov spacing, full circle at
    // full-fov spacing. The two counts agree at every field of view.
    println!("sweep headings vs fov:");
    for deg in [40.0f64, 60.0, 86.0, 100.0, 120.0] {
        let a = deg.to_radians();
        let half = (std::f64::consts::PI / (0.5 * a)).round() as usize;
        let full = (2.0 * std::f64::consts::PI / a).round() as usize;
        println!("  fov {deg:>5.1} deg -> half-circle {half}, full-circle {full}");
    }
}
