//! Structured paths and mesh distances on the Fubini-type reference metric.

use krf::local_model::{fubini_type_derivative, fubini_type_profile};
use krf::metric::{
    distance_upper, path_length, radial_length, sphere_diameter_upper, DistanceMode, DistanceQuery, MeshOptions,
    PathSpec, Segment, SlicePoint,
};
use krf::{Grid, Phase, RadialProfile};
use std::f64::consts::PI;

fn main() -> krf::Result<()> {
    let grid = Grid::new(-16.0, 16.0, 1025)?;
    let (b, k) = (2.0, 1);
    let prof = RadialProfile::from_fn(
        grid,
        |r| fubini_type_profile(b, k, r),
        |r| fubini_type_derivative(b, k, r),
        Phase::OrbifoldY,
        0.0,
    );
    println!("radial length on [-2, 2]: {:.6}", radial_length(&prof, -2.0, 2.0)?);
    println!("sphere diameter bound at rho = 0: {:.6}", sphere_diameter_upper(&prof, 0.0, k)?);
    let path = PathSpec {
        segments: vec![
            Segment::Radial { rho_a: -2.0, rho_b: 0.0 },
            Segment::Horizontal { rho: 0.0, angle: PI / 2.0 },
            Segment::Hopf { rho: 0.0, angle: PI },
            Segment::Radial { rho_a: 0.0, rho_b: 2.0 },
        ],
        quotient_k: k,
    };
    println!("structured path: {:.6}", path_length(&prof, &path)?);
    let p = SlicePoint { rho: -2.0, theta: 0.0 };
    let q = SlicePoint { rho: 2.0, theta: PI / 2.0 };
    let opts = MeshOptions { angular: 129, row_stride: 8 };
    for mode in [DistanceMode::LowerBound, DistanceMode::UpperBound, DistanceMode::Completion] {
        let d = distance_upper(&prof, DistanceQuery { p, q, mode }, k, opts)?;
        println!("{mode:?}: {:.6} (slack {:.4})", d.value, d.slack);
    }
    Ok(())
}
