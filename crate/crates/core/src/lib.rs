//! Trace finite elements for the incompressible Navier-Stokes equations on a
//! closed surface embedded in a tetrahedral background mesh.
//!
//! The velocity and pressure are continuous piecewise linears on the strip
//! of background tetrahedra cut by the surface. Tangentiality of the velocity
//! is imposed weakly by a penalty on its normal component, both unknowns get
//! a volume normal-derivative stabilization, and time is discretized by a
//! semi-implicit BDF2 scheme with an extrapolated, skew-symmetrized
//! convection term.
//!
//! ```no_run
//! use surfnse::{CaseId, Discretization, NonlinearForm, SolverParams, Simulation};
//!
//! let params = SolverParams::for_level(2, CaseId::Exact1);
//! let disc = Discretization::sphere(params.level, 4)?;
//! let mut sim = Simulation::new(&disc, params)?;
//! let trajectory = sim.run()?;
//! println!("{} steps", trajectory.len());
//! # Ok::<(), surfnse::Error>(())
//! ```

pub mod assembly;
pub mod cases;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod fe;
pub mod geometry;
pub mod mesh;
pub mod quadrature;
pub mod solver;
pub mod sparse;
pub mod time;
pub mod vtk;

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

pub use assembly::{Discretization, NonlinearForm, SolverParams};
pub use cases::{CaseId, ManufacturedCase};
pub use error::{Error, Result};
pub use mesh::BackgroundMesh;
pub use solver::SolverBackend;
pub use time::{Simulation, StepRecord};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SURFNSE_THREADS";

/// Size the global thread pool from `SURFNSE_THREADS` if it is set. Has no
/// effect once the pool is running.
pub fn configure_threads() {
    let Some(n) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    else {
        return;
    };
    if rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .is_err()
    {
        log::debug!("thread pool already initialized; {THREADS_ENV}={n} ignored");
    }
}
