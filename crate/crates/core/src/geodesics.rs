//! World lines of field modes co-propagating with the drive pulse.
//!
//! In the retarded frame a mode crossing the crystal obeys
//!
//!   dx⁰/dx¹ = n + (α/n) S(u),   u = ζ(x⁰ − n x¹),
//!
//! with S the drive shape in its co-moving argument: sech u for the
//! half-cycle pulse and −u sech u for the single-cycle pulse. Both flows have
//! first integrals —
//!
//!   half-cycle:    A x¹ − sinh u = C₁,      C₁ = −sinh(ζℓ),
//!   single-cycle:  A x¹ + Chi(|u|) = C₂,    C₂ = Chi(|ζℓ|),
//!
//! with A = αζ/n and ℓ the launch time at the entrance face — so every ray
//! can be written in closed form and the direct integration checked against
//! it. Distances are in units of the crystal length; `zeta` carries all of
//! Γ L / c₀.

use thiserror::Error;

use crate::numerics::{chi, chi_inverse, integrate_scalar_ode, NumericsError, OdeOptions};

#[derive(Debug, Clone, Error)]
pub enum GeodesicsError {
    #[error("single-cycle ray hit the u = 0 branch point at x1 = {z_tilde}")]
    BranchSingularity { z_tilde: f64 },
    #[error("ray density needs at least two world lines")]
    EmptyBundle,
    #[error("propagation grid must increase strictly (violated at index {index})")]
    NonMonotonicGrid { index: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Dimensionless parameters of the ray picture.
#[derive(Debug, Clone, Copy)]
pub struct RayParams {
    /// Perturbation amplitude α = d E₀.
    pub alpha: f64,
    /// Refractive index.
    pub n: f64,
    /// Crystal thickness ζ = Γ L / c₀.
    pub zeta: f64,
}

impl RayParams {
    pub fn new(alpha: f64, n: f64, zeta: f64) -> Self {
        RayParams { alpha, n, zeta }
    }

    /// Build from the conventional dimensionless groups α/n² and nζ.
    pub fn from_groups(alpha_over_n2: f64, n_zeta: f64, n: f64) -> Self {
        RayParams { alpha: alpha_over_n2 * n * n, n, zeta: n_zeta / n }
    }

    /// Signed strength A = αζ/n: the total drift of sinh u (half-cycle) or
    /// −Chi|u| (single-cycle) across the crystal.
    pub fn strength(&self) -> f64 {
        self.alpha * self.zeta / self.n
    }
}

/// Drive shape in the co-moving argument u = ζ(x⁰ − n x¹).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RayShape {
    HalfCycle,
    SingleCycle,
}

impl RayShape {
    pub fn shape(&self, u: f64) -> f64 {
        match self {
            RayShape::HalfCycle => u.cosh().recip(),
            RayShape::SingleCycle => -u / u.cosh(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct WorldLine {
    pub shape: RayShape,
    /// Entrance-face crossing time ℓ = x⁰(0).
    pub launch: f64,
    /// Conserved constant of the flow (C₁ or C₂ above).
    pub constant: f64,
    /// (x¹, x⁰) samples along the propagation grid.
    pub points: Vec<(f64, f64)>,
}

impl WorldLine {
    /// Co-moving argument u = ζ(x⁰ − n x¹) at a sampled point.
    pub fn u_at(&self, index: usize, params: &RayParams) -> f64 {
        let (z, x0) = self.points[index];
        params.zeta * (x0 - params.n * z)
    }
}

/// Conserved launch constant for a ray entering at time ℓ.
pub fn launch_constant(
    shape: RayShape,
    params: &RayParams,
    ell: f64,
) -> Result<f64, GeodesicsError> {
    let u0 = params.zeta * ell;
    match shape {
        RayShape::HalfCycle => Ok(-u0.sinh()),
        RayShape::SingleCycle => {
            if u0 == 0.0 {
                // Chi diverges at zero argument: the ray sits exactly on the
                // node of the single-cycle drive.
                return Err(GeodesicsError::BranchSingularity { z_tilde: 0.0 });
            }
            Ok(chi(u0.abs()))
        }
    }
}

fn check_grid(z_grid: &[f64]) -> Result<(), GeodesicsError> {
    for i in 1..z_grid.len() {
        if !(z_grid[i] > z_grid[i - 1]) {
            return Err(GeodesicsError::NonMonotonicGrid { index: i });
        }
    }
    Ok(())
}

/// World line from the closed first integral of the flow.
pub fn worldline_implicit(
    shape: RayShape,
    params: &RayParams,
    ell: f64,
    z_grid: &[f64],
) -> Result<WorldLine, GeodesicsError> {
    check_grid(z_grid)?;
    let constant = launch_constant(shape, params, ell)?;
    let a = params.strength();
    let u0 = params.zeta * ell;
    let mut points = Vec::with_capacity(z_grid.len());
    for &z in z_grid {
        let u = match shape {
            RayShape::HalfCycle => (a * z - constant).asinh(),
            RayShape::SingleCycle => {
                // An unsolvable inversion means |u| fell below representable
                // range — the ray is numerically on the branch point.
                let magnitude = chi_inverse(constant - a * z)
                    .map_err(|_| GeodesicsError::BranchSingularity { z_tilde: z })?;
                if !(magnitude > 0.0) || !magnitude.is_finite() {
                    return Err(GeodesicsError::BranchSingularity { z_tilde: z });
                }
                // |u| never reaches zero at finite depth, so the ray keeps
                // the sign it was launched with.
                magnitude.copysign(u0)
            }
        };
        points.push((z, params.n * z + u / params.zeta));
    }
    Ok(WorldLine { shape, launch: ell, constant, points })
}

/// World line by direct integration of dx⁰/dx¹ = n + (α/n) S(u), launched
/// from x⁰(0) = ℓ and sampled exactly on the grid.
pub fn worldline_ode(
    shape: RayShape,
    params: &RayParams,
    ell: f64,
    z_grid: &[f64],
) -> Result<WorldLine, GeodesicsError> {
    check_grid(z_grid)?;
    let constant = launch_constant(shape, params, ell)?;
    let slope = params.alpha / params.n;
    let rhs = |z: f64, x0: f64| {
        params.n + slope * shape.shape(params.zeta * (x0 - params.n * z))
    };
    let opts = OdeOptions { rtol: 1e-12, atol: 1e-14, ..Default::default() };

    let mut points = Vec::with_capacity(z_grid.len());
    let mut z = 0.0;
    let mut x0 = ell;
    for &z_next in z_grid {
        if z_next != z {
            let path = integrate_scalar_ode(rhs, z, x0, z_next, &opts)?;
            let &(zf, xf) = path.last().expect("integration returns at least the start");
            z = zf;
            x0 = xf;
        }
        points.push((z, x0));
    }
    Ok(WorldLine { shape, launch: ell, constant, points })
}

/// Bundle of rays on a midpoint launch grid over `ell_range`. For symmetric
/// ranges an even `count` keeps single-cycle rays off the ℓ = 0 node; an odd
/// count puts one launch exactly on it, which is a branch point.
pub fn worldline_bundle(
    shape: RayShape,
    params: &RayParams,
    ell_range: (f64, f64),
    count: usize,
    z_grid: &[f64],
) -> Result<Vec<WorldLine>, GeodesicsError> {
    let (lo, hi) = ell_range;
    let step = (hi - lo) / count as f64;
    (0..count)
        .map(|j| worldline_implicit(shape, params, lo + (j as f64 + 0.5) * step, z_grid))
        .collect()
}

/// Projected density of world lines at the exit face, normalized so that an
/// undriven crystal gives one.
///
/// Rays launched Δℓ apart leave with retarded times u/ζ; compression of that
/// spacing is the local change in the flow of time, so the density of a pair
/// is ζΔℓ/Δu. Returned per adjacent pair as (mean launch time, density).
pub fn ray_density(
    bundle: &[WorldLine],
    params: &RayParams,
) -> Result<Vec<(f64, f64)>, GeodesicsError> {
    if bundle.len() < 2 {
        return Err(GeodesicsError::EmptyBundle);
    }
    let exit_u: Vec<f64> = bundle
        .iter()
        .map(|line| line.u_at(line.points.len() - 1, params))
        .collect();
    Ok(bundle
        .windows(2)
        .zip(exit_u.windows(2))
        .map(|(lines, us)| {
            let dl = lines[1].launch - lines[0].launch;
            let mid = 0.5 * (lines[0].launch + lines[1].launch);
            (mid, params.zeta * dl / (us[1] - us[0]))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference_params() -> RayParams {
        // α/n² = 0.49 and nζ = 12 at n = 3: A = 5.88.
        RayParams::from_groups(0.49, 12.0, 3.0)
    }

    fn unit_grid(steps: usize) -> Vec<f64> {
        (0..=steps).map(|i| i as f64 / steps as f64).collect()
    }

    #[test]
    fn group_construction_reproduces_the_strength() {
        let p = reference_params();
        assert_relative_eq!(p.alpha, 0.49 * 9.0, max_relative = 1e-14);
        assert_relative_eq!(p.zeta, 4.0, max_relative = 1e-14);
        assert_relative_eq!(p.strength(), 5.88, max_relative = 1e-12);
    }

    #[test]
    fn undriven_rays_are_straight_with_slope_n() {
        let params = RayParams::new(0.0, 3.0, 4.0);
        let grid = unit_grid(20);
        for shape in [RayShape::HalfCycle, RayShape::SingleCycle] {
            for method in [worldline_implicit, worldline_ode] {
                let line = method(shape, &params, 0.7, &grid).unwrap();
                for &(z, x0) in &line.points {
                    assert!(
                        (x0 - (0.7 + 3.0 * z)).abs() <= 1e-12,
                        "{shape:?} at {z}: {x0}"
                    );
                }
            }
        }
    }

    #[test]
    fn thin_crystal_limit_has_slope_n_plus_alpha_over_n() {
        // ζ → 0 with the ray launched on the pulse peak: S(u) stays at
        // S(0) = 1 and the slope saturates at n + α/n.
        let params = RayParams::new(2.1, 3.0, 1e-3);
        let grid = unit_grid(4);
        let line = worldline_ode(RayShape::HalfCycle, &params, 0.0, &grid).unwrap();
        let (z0, x0) = line.points[0];
        let (z1, x1) = *line.points.last().unwrap();
        let slope = (x1 - x0) / (z1 - z0);
        assert_relative_eq!(slope, 3.0 + 2.1 / 3.0, max_relative = 1e-4);
    }

    #[test]
    fn direct_integration_matches_the_first_integrals() {
        let params = reference_params();
        let grid = unit_grid(50);
        for shape in [RayShape::HalfCycle, RayShape::SingleCycle] {
            for k in 0..10 {
                // u₀ from −6 to 6, offset off the node.
                let ell = (-6.0 + 12.0 * (k as f64 + 0.5) / 10.0) / params.zeta;
                let implicit = worldline_implicit(shape, &params, ell, &grid).unwrap();
                let ode = worldline_ode(shape, &params, ell, &grid).unwrap();
                assert_eq!(implicit.constant, ode.constant);
                for (a, b) in implicit.points.iter().zip(&ode.points) {
                    assert!(
                        (a.1 - b.1).abs() <= 1e-6,
                        "{shape:?} ell={ell}: implicit {} vs ode {}",
                        a.1,
                        b.1
                    );
                }
            }
        }
    }

    #[test]
    fn integrated_rays_satisfy_the_conservation_laws() {
        let params = reference_params();
        let a = params.strength();
        let grid = unit_grid(40);

        let line = worldline_ode(RayShape::HalfCycle, &params, 0.3, &grid).unwrap();
        for (i, &(z, _)) in line.points.iter().enumerate() {
            let u = line.u_at(i, &params);
            let residual = a * z - u.sinh() - line.constant;
            assert!(residual.abs() < 1e-8, "z = {z}: residual {residual}");
        }

        let line = worldline_ode(RayShape::SingleCycle, &params, -0.4, &grid).unwrap();
        for (i, &(z, _)) in line.points.iter().enumerate() {
            let u = line.u_at(i, &params);
            let residual = a * z + chi(u.abs()) - line.constant;
            assert!(residual.abs() < 1e-6, "z = {z}: residual {residual}");
        }
    }

    #[test]
    fn single_cycle_rays_keep_their_branch() {
        let params = reference_params();
        let grid = unit_grid(30);
        for ell in [-0.9, -0.05, 0.05, 0.9] {
            let line = worldline_implicit(RayShape::SingleCycle, &params, ell, &grid).unwrap();
            for i in 0..line.points.len() {
                let u = line.u_at(i, &params);
                assert_eq!(u.signum(), ell.signum(), "ray crossed the node");
            }
        }
        assert!(matches!(
            worldline_implicit(RayShape::SingleCycle, &params, 0.0, &grid),
            Err(GeodesicsError::BranchSingularity { .. })
        ));
    }

    #[test]
    fn rays_straighten_far_from_the_pulse() {
        // Launched 12 decay lengths out, the bending x⁰″ = ζ(α/n)² S S′ is
        // exponentially dead: second differences on h = 0.005 stay below
        // 1e-8.
        let params = reference_params();
        let grid: Vec<f64> = (0..=200).map(|i| 0.005 * i as f64).collect();
        let line = worldline_ode(RayShape::HalfCycle, &params, 12.0 / params.zeta, &grid).unwrap();
        for w in line.points.windows(3) {
            let second = w[2].1 - 2.0 * w[1].1 + w[0].1;
            assert!(second.abs() < 1e-8, "second difference {second}");
        }
    }

    #[test]
    fn ray_density_matches_the_closed_form() {
        // For the half-cycle flow, sinh u_exit = sinh u₀ + A, so
        // density = cosh(asinh(sinh u₀ + A))/cosh u₀ exactly.
        let params = reference_params();
        let a = params.strength();
        let grid = unit_grid(4);
        let mut worst = Vec::new();
        for count in [64usize, 128, 256] {
            let range = (-3.0 / params.zeta, 3.0 / params.zeta);
            let bundle =
                worldline_bundle(RayShape::HalfCycle, &params, range, count, &grid).unwrap();
            assert_eq!(bundle.len(), count);
            let densities = ray_density(&bundle, &params).unwrap();
            let mut err: f64 = 0.0;
            for &(ell_mid, density) in &densities {
                let u0 = params.zeta * ell_mid;
                let expected = (u0.sinh() + a).asinh().cosh() / u0.cosh();
                err = err.max(((density - expected) / expected).abs());
            }
            worst.push(err);
        }
        // Pair spacing converges quadratically onto the pointwise law; the
        // bend at u₀ = −asinh(A) dominates the error.
        assert!(worst[0] < 2e-2, "coarse bundle error {}", worst[0]);
        assert!(worst[2] < 1e-3, "fine bundle error {}", worst[2]);
        assert!(worst[2] < worst[0] / 8.0, "errors {worst:?} not second order");
    }

    #[test]
    fn weak_drive_density_follows_the_field_slope() {
        // To first order in A the compression is A tanh(u₀) sech(u₀) — the
        // (negative) slope of the half-cycle field. This ties the ray picture
        // to the time-domain response pattern.
        let params = RayParams::new(0.03, 3.0, 4.0);
        let a = params.strength();
        let grid = unit_grid(4);
        let bundle = worldline_bundle(
            RayShape::HalfCycle,
            &params,
            (-3.0 / params.zeta, 3.0 / params.zeta),
            256,
            &grid,
        )
        .unwrap();
        for &(ell_mid, density) in &ray_density(&bundle, &params).unwrap() {
            let u0 = params.zeta * ell_mid;
            let linear = a * u0.tanh() / u0.cosh();
            assert!(
                (density - 1.0 - linear).abs() <= 0.02 * a,
                "u0 = {u0}: density-1 = {}, linear {linear}",
                density - 1.0
            );
        }
    }

    #[test]
    fn bundle_and_density_error_paths() {
        let params = reference_params();
        let grid = unit_grid(4);
        let one = worldline_bundle(RayShape::HalfCycle, &params, (0.0, 1.0), 1, &grid).unwrap();
        assert!(matches!(ray_density(&one, &params), Err(GeodesicsError::EmptyBundle)));
        assert!(matches!(
            worldline_implicit(RayShape::HalfCycle, &params, 0.1, &[0.0, 0.0]),
            Err(GeodesicsError::NonMonotonicGrid { index: 1 })
        ));
        // Even-count symmetric bundles stay off the single-cycle node.
        let bundle = worldline_bundle(
            RayShape::SingleCycle,
            &params,
            (-1.0, 1.0),
            20,
            &grid,
        )
        .unwrap();
        assert_eq!(bundle.len(), 20);
    }
}
