//! Cloud-in-a-cell charge assignment and the 1D electrostatic solve.
//!
//! Nodes sit at `x_k = k * dx`, `k = 0..n`, with `x_0` on the Au/oxide
//! interface and `x_{n-1}` on the oxide/Pt interface. Charge is assigned to
//! the two nodes bracketing a particle with linear weights; the same weights
//! interpolate the nodal field back to the particle.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Grid1D {
    length_m: f64,
    dx_m: f64,
    /// Charge collected on each node, C.
    pub node_charge_c: Vec<f64>,
    /// Volumetric charge density, C/m^3.
    pub charge_density_c_per_m3: Vec<f64>,
    pub potential_v: Vec<f64>,
    pub field_v_per_m: Vec<f64>,
}

impl Grid1D {
    pub fn new(n_nodes: usize, length_m: f64) -> Result<Self> {
        if n_nodes < 3 {
            return Err(Error::config("n_nodes", n_nodes, "grid needs at least 3 nodes"));
        }
        if !(length_m > 0.0 && length_m.is_finite()) {
            return Err(Error::config("length_m", length_m, "must be > 0"));
        }
        Ok(Self {
            length_m,
            dx_m: length_m / (n_nodes - 1) as f64,
            node_charge_c: vec![0.0; n_nodes],
            charge_density_c_per_m3: vec![0.0; n_nodes],
            potential_v: vec![0.0; n_nodes],
            field_v_per_m: vec![0.0; n_nodes],
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.node_charge_c.len()
    }

    pub fn dx_m(&self) -> f64 {
        self.dx_m
    }

    pub fn length_m(&self) -> f64 {
        self.length_m
    }

    pub fn node_position(&self, k: usize) -> f64 {
        if k + 1 == self.n_nodes() {
            self.length_m
        } else {
            k as f64 * self.dx_m
        }
    }

    /// Control volume of node `k`; boundary nodes own half a cell.
    pub fn cell_volume(&self, k: usize, area_m2: f64) -> f64 {
        if k == 0 || k + 1 == self.n_nodes() {
            0.5 * self.dx_m * area_m2
        } else {
            self.dx_m * area_m2
        }
    }

    /// Left bracketing node and the fractional offset `f` in `[0, 1)` (or
    /// exactly 1 at the right boundary's last cell).
    #[inline]
    pub fn weights(&self, x: f64) -> Result<(usize, f64)> {
        if !(0.0..=self.length_m).contains(&x) {
            return Err(Error::Domain {
                x,
                length: self.length_m,
            });
        }
        Ok(self.weights_unchecked(x))
    }

    #[inline]
    fn weights_unchecked(&self, x: f64) -> (usize, f64) {
        let s = x / self.dx_m;
        let last_cell = self.n_nodes() - 2;
        let k = (s.floor() as usize).min(last_cell);
        (k, s - k as f64)
    }

    pub fn clear_charge(&mut self) {
        self.node_charge_c.iter_mut().for_each(|q| *q = 0.0);
    }

    /// Adds `charge_c` per particle, split linearly between the two bracketing
    /// nodes. Densities are not refreshed; call [`Grid1D::update_density`].
    pub fn deposit(&mut self, positions: &[f64], charge_c: f64) -> Result<()> {
        if let Some(&x) = positions.iter().find(|x| !(0.0..=self.length_m).contains(*x)) {
            return Err(Error::Domain {
                x,
                length: self.length_m,
            });
        }
        for &x in positions {
            let (k, f) = self.weights_unchecked(x);
            self.node_charge_c[k] += charge_c * (1.0 - f);
            self.node_charge_c[k + 1] += charge_c * f;
        }
        Ok(())
    }

    /// Converts node charges into volumetric densities.
    pub fn update_density(&mut self, area_m2: f64) {
        for k in 0..self.n_nodes() {
            self.charge_density_c_per_m3[k] = self.node_charge_c[k] / self.cell_volume(k, area_m2);
        }
    }

    /// Total charge represented by the density array, C.
    pub fn total_charge(&self, area_m2: f64) -> f64 {
        self.charge_density_c_per_m3
            .iter()
            .enumerate()
            .map(|(k, rho)| rho * self.cell_volume(k, area_m2))
            .sum()
    }

    /// Linear interpolation of the nodal field at `x`.
    #[inline]
    pub fn gather(&self, x: f64) -> Result<f64> {
        let (k, f) = self.weights(x)?;
        Ok(self.field_v_per_m[k] * (1.0 - f) + self.field_v_per_m[k + 1] * f)
    }

    pub fn gather_all(&self, positions: &[f64], out: &mut Vec<f64>) -> Result<()> {
        out.clear();
        for &x in positions {
            out.push(self.gather(x)?);
        }
        Ok(())
    }
}

/// Deposits a full mobile/fixed ensemble and refreshes the density.
///
/// Mobile particles carry `+charge_per_particle`, fixed ones the opposite.
pub fn deposit_charge(
    grid: &mut Grid1D,
    mobile: &[f64],
    fixed: &[f64],
    charge_per_particle: f64,
    area_m2: f64,
) -> Result<()> {
    grid.clear_charge();
    grid.deposit(mobile, charge_per_particle)?;
    grid.deposit(fixed, -charge_per_particle)?;
    grid.update_density(area_m2);
    Ok(())
}

/// Pre-factored Dirichlet Poisson operator `tridiag(-1, 2, -1)` on the
/// interior nodes. The matrix only depends on the node count, so the Thomas
/// forward-sweep coefficients are computed once.
#[derive(Debug, Clone)]
pub struct PoissonSolver {
    /// Modified super-diagonal `c'_i`.
    c_prime: Vec<f64>,
    /// Reciprocal of the modified diagonal.
    inv_diag: Vec<f64>,
    scratch: Vec<f64>,
}

impl PoissonSolver {
    pub fn new(n_nodes: usize) -> Result<Self> {
        if n_nodes < 3 {
            return Err(Error::config("n_nodes", n_nodes, "grid needs at least 3 nodes"));
        }
        let m = n_nodes - 2;
        let mut c_prime = vec![0.0; m];
        let mut inv_diag = vec![0.0; m];
        let mut prev_c = 0.0;
        for i in 0..m {
            let denom: f64 = 2.0 + prev_c; // b_i - a_i c'_{i-1} with a = c = -1
            if denom.abs() < f64::MIN_POSITIVE {
                return Err(Error::Internal("singular Poisson operator".into()));
            }
            inv_diag[i] = 1.0 / denom;
            c_prime[i] = -inv_diag[i];
            prev_c = c_prime[i];
        }
        Ok(Self {
            c_prime,
            inv_diag,
            scratch: vec![0.0; m],
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.c_prime.len() + 2
    }

    /// Solves `eps * phi'' = -rho` for the grid's density and writes the
    /// potential into the grid.
    pub fn solve(&mut self, grid: &mut Grid1D, phi_left: f64, phi_right: f64, epsilon: f64) -> Result<()> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::config("epsilon", epsilon, "permittivity must be > 0"));
        }
        let n = grid.n_nodes();
        if n != self.n_nodes() {
            return Err(Error::Internal(format!(
                "Poisson solver built for {} nodes, grid has {n}",
                self.n_nodes()
            )));
        }
        let m = n - 2;
        let scale = grid.dx_m * grid.dx_m / epsilon;
        let rho = &grid.charge_density_c_per_m3;
        let d = &mut self.scratch;

        // Forward sweep on the right-hand side.
        let mut prev = 0.0;
        for i in 0..m {
            let mut rhs = rho[i + 1] * scale;
            if i == 0 {
                rhs += phi_left;
            }
            if i == m - 1 {
                rhs += phi_right;
            }
            prev = (rhs + prev) * self.inv_diag[i];
            d[i] = prev;
        }

        let phi = &mut grid.potential_v;
        phi[0] = phi_left;
        phi[n - 1] = phi_right;
        phi[m] = d[m - 1];
        for i in (0..m - 1).rev() {
            phi[i + 1] = d[i] - self.c_prime[i] * phi[i + 2];
        }
        Ok(())
    }
}

/// One-shot Poisson solve; builds the factorization on the fly.
pub fn solve_poisson(grid: &mut Grid1D, phi_left: f64, phi_right: f64, epsilon: f64) -> Result<()> {
    PoissonSolver::new(grid.n_nodes())?.solve(grid, phi_left, phi_right, epsilon)
}

/// `E = -dphi/dx`: central differences inside, second-order one-sided at the ends.
pub fn electric_field(grid: &mut Grid1D) {
    let n = grid.n_nodes();
    let inv_2dx = 0.5 / grid.dx_m;
    let phi = &grid.potential_v;
    let e = &mut grid.field_v_per_m;
    for k in 1..n - 1 {
        e[k] = -(phi[k + 1] - phi[k - 1]) * inv_2dx;
    }
    if n >= 3 {
        e[0] = -(-3.0 * phi[0] + 4.0 * phi[1] - phi[2]) * inv_2dx;
        e[n - 1] = -(3.0 * phi[n - 1] - 4.0 * phi[n - 2] + phi[n - 3]) * inv_2dx;
    }
}

/// Interpolates the nodal field at `x`.
pub fn gather_field(grid: &Grid1D, x: f64) -> Result<f64> {
    grid.gather(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize) -> Grid1D {
        Grid1D::new(n, 600e-9).unwrap()
    }

    #[test]
    fn rejects_tiny_grid() {
        assert!(Grid1D::new(2, 1.0).is_err());
        assert!(PoissonSolver::new(2).is_err());
    }

    #[test]
    fn particle_on_node_deposits_on_that_node() {
        let mut g = grid(7);
        let x = g.node_position(3);
        g.deposit(&[x], 1.0).unwrap();
        assert_eq!(g.node_charge_c[3], 1.0);
        assert_eq!(g.node_charge_c[4], 0.0);
        assert_eq!(g.node_charge_c[2], 0.0);
    }

    #[test]
    fn midpoint_splits_evenly() {
        let mut g = Grid1D::new(5, 4.0).unwrap();
        g.deposit(&[1.5], 2.0).unwrap();
        assert_eq!(g.node_charge_c[1], 1.0);
        assert_eq!(g.node_charge_c[2], 1.0);
    }

    #[test]
    fn right_boundary_particle_lands_on_last_node() {
        let mut g = grid(11);
        g.deposit(&[600e-9], 1.0).unwrap();
        assert!((g.node_charge_c[10] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_positions_are_rejected() {
        let mut g = grid(11);
        assert!(matches!(g.deposit(&[-1e-12], 1.0), Err(Error::Domain { .. })));
        assert!(matches!(g.gather(601e-9), Err(Error::Domain { .. })));
    }

    #[test]
    fn laplace_gives_linear_ramp() {
        let mut g = grid(31);
        solve_poisson(&mut g, 0.0, 1.0, 1e-10).unwrap();
        for k in 0..31 {
            let expect = k as f64 / 30.0;
            assert!((g.potential_v[k] - expect).abs() < 1e-14, "node {k}");
        }
    }

    #[test]
    fn linear_potential_gives_uniform_field() {
        let mut g = grid(601);
        solve_poisson(&mut g, 0.0, 1.0, 1e-10).unwrap();
        electric_field(&mut g);
        for e in &g.field_v_per_m {
            assert!((e + 1.0 / 600e-9).abs() < 1e-6 * 1.0 / 600e-9);
        }
        assert!((g.field_v_per_m[0] + 1.667e6).abs() < 1e3);
    }

    #[test]
    fn constant_potential_gives_zero_field() {
        let mut g = grid(21);
        g.potential_v.iter_mut().for_each(|p| *p = 3.0);
        electric_field(&mut g);
        assert!(g.field_v_per_m.iter().all(|e| *e == 0.0));
    }

    #[test]
    fn parabolic_potential_field_is_second_order() {
        // phi = x (L - x): E = -(L - 2x)
        let err = |n: usize| {
            let mut g = Grid1D::new(n, 1.0).unwrap();
            for k in 0..n {
                let x = g.node_position(k);
                g.potential_v[k] = x * (1.0 - x) + 0.3 * x * x * x;
            }
            electric_field(&mut g);
            (0..n)
                .map(|k| {
                    let x = g.node_position(k);
                    let exact = -(1.0 - 2.0 * x + 0.9 * x * x);
                    (g.field_v_per_m[k] - exact).abs()
                })
                .fold(0.0, f64::max)
        };
        let coarse = err(21);
        let fine = err(41);
        let order = (coarse / fine).log2();
        assert!(order > 1.9, "observed order {order}");
    }

    #[test]
    fn gather_interpolates_linearly() {
        let mut g = Grid1D::new(3, 2.0).unwrap();
        g.field_v_per_m = vec![2.0, 4.0, 6.0];
        assert_eq!(g.gather(0.5).unwrap(), 3.0);
        assert_eq!(g.gather(1.0).unwrap(), 4.0);
        assert_eq!(g.gather(2.0).unwrap(), 6.0);
        g.field_v_per_m = vec![5.0; 3];
        assert_eq!(gather_field(&g, 1.37).unwrap(), 5.0);
    }

    #[test]
    fn boundary_nodes_use_half_cells() {
        let g = grid(11);
        let area = 4e-8;
        let total: f64 = (0..11).map(|k| g.cell_volume(k, area)).sum();
        assert!((total - 600e-9 * area).abs() < 1e-28);
    }

    proptest! {
        #[test]
        fn weights_sum_to_one(x in 0.0f64..=600e-9) {
            let g = grid(601);
            let (k, f) = g.weights(x).unwrap();
            prop_assert!(k < 600);
            prop_assert!((0.0..=1.0).contains(&f));
            let mut probe = grid(601);
            probe.deposit(&[x], 1.0).unwrap();
            let sum: f64 = probe.node_charge_c.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-15);
        }

        #[test]
        fn gather_of_uniform_field_is_uniform(x in 0.0f64..=600e-9, e in -1e8f64..1e8) {
            let mut g = grid(61);
            g.field_v_per_m.iter_mut().for_each(|v| *v = e);
            prop_assert!((g.gather(x).unwrap() - e).abs() <= 1e-9 * e.abs().max(1.0));
        }
    }
}
