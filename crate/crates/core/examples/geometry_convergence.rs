//! Area of the discrete sphere and accuracy of the reconstructed normals
//! on successive refinement levels.

use std::f64::consts::PI;

use surfnse::assembly::{Discretization, SURFACE_QUAD_DEGREE};

fn main() -> surfnse::Result<()> {
    let exact = 4.0 * PI;
    let mut prev: Option<(f64, f64)> = None;
    println!("level  active_tets  area_err    normal_err  order(area)  order(normal)");
    for level in 1..=4 {
        let d = Discretization::sphere(level, SURFACE_QUAD_DEGREE)?;
        let area_err = (d.surface.area() - exact).abs();
        let normal_err = d
            .surface
            .triangles
            .iter()
            .flat_map(|t| t.quad.iter())
            .map(|q| (q.normal - q.point.normalize()).norm())
            .fold(0.0, f64::max);
        let orders = prev.map(|(a, n)| ((a / area_err).log2(), (n / normal_err).log2()));
        match orders {
            Some((oa, on)) => println!(
                "{level:>5}  {:>11}  {area_err:.3e}  {normal_err:.3e}  {oa:>11.2}  {on:>13.2}",
                d.active.active_tets.len()
            ),
            None => println!("{level:>5}  {:>11}  {area_err:.3e}  {normal_err:.3e}", d.active.active_tets.len()),
        }
        prev = Some((area_err, normal_err));
    }
    Ok(())
}
