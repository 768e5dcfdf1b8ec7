use nalgebra::DMatrix;

use super::finite::{FiniteChain, STOCHASTIC_TOL};
use crate::target::{log_sum_exp, ContinuousState, LogDensity};
use crate::{Error, Result};

/// Cap on grid size; dense eigen-decomposition beyond this is impractical.
pub const MAX_GRID_STATES: usize = 20_000;

/// One grid axis: `count` equal cells covering `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Axis {
    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.count as f64
    }

    pub fn center(&self, k: usize) -> f64 {
        self.lo + (k as f64 + 0.5) * self.width()
    }
}

/// A product grid; states are cell centres, flattened row-major (last axis fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    axes: Vec<Axis>,
    n: usize,
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::config("grid needs at least one axis"));
        }
        let mut n = 1usize;
        for a in &axes {
            if a.count == 0 || !(a.lo < a.hi) || !a.lo.is_finite() || !a.hi.is_finite() {
                return Err(Error::config(format!("bad grid axis {a:?}")));
            }
            n = n.saturating_mul(a.count);
        }
        if n > MAX_GRID_STATES {
            return Err(Error::TooLarge {
                what: "grid",
                size: n,
                cap: MAX_GRID_STATES,
            });
        }
        Ok(Self { axes, n })
    }

    pub fn line(lo: f64, hi: f64, count: usize) -> Result<Self> {
        Self::new(vec![Axis { lo, hi, count }])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn multi_index(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for (k, a) in self.axes.iter().enumerate().rev() {
            out[k] = index % a.count;
            index /= a.count;
        }
        out
    }

    /// Flat index of a multi-index, or `None` when any coordinate is off the grid.
    pub fn flat_index(&self, idx: &[i64]) -> Option<usize> {
        let mut flat = 0usize;
        for (a, &i) in self.axes.iter().zip(idx) {
            if i < 0 || i as usize >= a.count {
                return None;
            }
            flat = flat * a.count + i as usize;
        }
        Some(flat)
    }

    pub fn center(&self, index: usize) -> ContinuousState {
        let mi = self.multi_index(index);
        let coords = self.axes.iter().zip(mi).map(|(a, k)| a.center(k)).collect();
        ContinuousState::new(coords).expect("grid centres are finite")
    }
}

/// A tempered target on the cells where it has positive mass.
#[derive(Clone, Debug)]
pub struct GridDistribution {
    pub temperature: f64,
    /// Grid indices of the retained cells, increasing.
    pub cells: Vec<usize>,
    pub pi: Vec<f64>,
}

impl GridDistribution {
    pub fn n(&self) -> usize {
        self.cells.len()
    }

    /// This distribution's mass on `other`'s cells (zero where it has none).
    /// The result sums to at most 1.
    pub fn on_cells(&self, other: &[usize]) -> Vec<f64> {
        other
            .iter()
            .map(|c| self.cells.binary_search(c).map_or(0.0, |k| self.pi[k]))
            .collect()
    }
}

/// `pi_i ∝ exp(log pi(x_i) / t)` at cell centres. Cells whose mass is zero
/// (log-density `-inf`, or below the smallest positive double after
/// normalising) are dropped.
pub fn discretize_target<T>(target: &T, grid: &GridSpec, t: f64) -> Result<GridDistribution>
where
    T: LogDensity<ContinuousState> + ?Sized,
{
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::config(format!("temperature must be positive, got {t}")));
    }
    let mut cells = Vec::new();
    let mut logs = Vec::new();
    for i in 0..grid.n() {
        let x = grid.center(i);
        target.check_state(&x)?;
        let lp = target.log_density(&x);
        if lp.is_nan() || lp == f64::INFINITY {
            return Err(Error::Numerical(format!("log-density {lp} at grid cell {i} ({:?})", x.coords())));
        }
        if lp > f64::NEG_INFINITY {
            cells.push(i);
            logs.push(lp / t);
        }
    }
    if cells.is_empty() {
        return Err(Error::UnsupportedGrid);
    }
    let z = log_sum_exp(&logs);
    let mut kept_cells = Vec::with_capacity(cells.len());
    let mut pi = Vec::with_capacity(cells.len());
    for (c, l) in cells.into_iter().zip(logs) {
        let p = (l - z).exp();
        if p > 0.0 {
            kept_cells.push(c);
            pi.push(p);
        }
    }
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= s);
    Ok(GridDistribution {
        temperature: t,
        cells: kept_cells,
        pi,
    })
}

/// Uniform proposal over the lattice offsets with max-norm in `1..=radius`.
/// Offsets that leave the grid or land outside `cells` become holds.
pub fn local_walk_matrix(grid: &GridSpec, cells: &[usize], radius: usize) -> Result<DMatrix<f64>> {
    if radius == 0 {
        return Err(Error::config("local walk radius must be at least 1"));
    }
    let d = grid.dim();
    let r = radius as i64;
    let side = 2 * r + 1;
    let total = (side as usize).pow(d as u32);
    let mut offsets = Vec::with_capacity(total - 1);
    for k in 0..total {
        let mut rem = k as i64;
        let mut off = vec![0i64; d];
        for o in off.iter_mut().rev() {
            *o = rem % side - r;
            rem /= side;
        }
        if off.iter().any(|&v| v != 0) {
            offsets.push(off);
        }
    }
    let w = 1.0 / offsets.len() as f64;
    Ok(proposal_over_cells(grid, cells, |from, add| {
        let base: Vec<i64> = grid.multi_index(from).iter().map(|&v| v as i64).collect();
        for off in &offsets {
            let to: Vec<i64> = base.iter().zip(off).map(|(b, o)| b + o).collect();
            if let Some(j) = grid.flat_index(&to) {
                add(j, w);
            }
        }
    }))
}

/// Uniform proposal over the whole grid; proposals off `cells` are holds.
pub fn uniform_proposal_matrix(grid: &GridSpec, cells: &[usize]) -> DMatrix<f64> {
    let w = 1.0 / grid.n() as f64;
    let k = cells.len();
    let mut q = DMatrix::from_element(k, k, w);
    for i in 0..k {
        q[(i, i)] = 1.0 - w * (k - 1) as f64;
    }
    q
}

/// Product-Cauchy proposal with scale `gamma`, normalised over the grid
/// (the current cell included); proposals off `cells` are holds.
pub fn cauchy_proposal_matrix(grid: &GridSpec, cells: &[usize], gamma: f64) -> Result<DMatrix<f64>> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::config(format!("Cauchy scale must be positive, got {gamma}")));
    }
    let centers: Vec<ContinuousState> = (0..grid.n()).map(|i| grid.center(i)).collect();
    let kernel = |a: &ContinuousState, b: &ContinuousState| -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| {
                let z = (x - y) / gamma;
                1.0 / (1.0 + z * z)
            })
            .product()
    };
    Ok(proposal_over_cells(grid, cells, |from, add| {
        let z: f64 = centers.iter().map(|c| kernel(&centers[from], c)).sum();
        for (j, c) in centers.iter().enumerate() {
            add(j, kernel(&centers[from], c) / z);
        }
    }))
}

/// Independent proposal: every row is `pi`.
pub fn independence_proposal_matrix(pi: &[f64]) -> DMatrix<f64> {
    let n = pi.len();
    DMatrix::from_fn(n, n, |_, j| pi[j])
}

/// Builds a proposal over `cells` from a per-cell emitter of `(grid index, weight)`;
/// weight not landing on `cells` (or landing on the cell itself) goes to the diagonal.
fn proposal_over_cells<F>(grid: &GridSpec, cells: &[usize], mut emit: F) -> DMatrix<f64>
where
    F: FnMut(usize, &mut dyn FnMut(usize, f64)),
{
    let mut pos = vec![usize::MAX; grid.n()];
    for (k, &c) in cells.iter().enumerate() {
        pos[c] = k;
    }
    let k = cells.len();
    let mut q = DMatrix::zeros(k, k);
    for (a, &c) in cells.iter().enumerate() {
        let mut off = 0.0;
        emit(c, &mut |j, w| {
            let b = pos[j];
            if b != usize::MAX && b != a {
                q[(a, b)] += w;
                off += w;
            }
        });
        q[(a, a)] = (1.0 - off).max(0.0);
    }
    q
}

fn check_stochastic(q: &DMatrix<f64>, n: usize, what: &str) -> Result<()> {
    if q.nrows() != n || q.ncols() != n {
        return Err(Error::config(format!(
            "{what} is {}x{}, expected {n}x{n}",
            q.nrows(),
            q.ncols()
        )));
    }
    for i in 0..n {
        let row = q.row(i);
        if row.iter().any(|v| !(*v >= 0.0)) || (row.sum() - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::config(format!("{what} row {i} is not a probability vector")));
        }
    }
    Ok(())
}

fn check_pi(pi: &[f64]) -> Result<()> {
    if pi.is_empty() || pi.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::config("stationary vector needs strictly positive finite entries"));
    }
    Ok(())
}

/// Off-diagonal MH flows `min(pi_i Q_ij, pi_j Q_ji)`, symmetric by construction.
fn mh_flows(pi: &[f64], q: &DMatrix<f64>) -> DMatrix<f64> {
    let n = pi.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            (pi[i] * q[(i, j)]).min(pi[j] * q[(j, i)])
        }
    })
}

/// Turns flows `F` (zero diagonal) into `P = F / pi` plus the residual hold.
fn chain_from_flows(pi: &[f64], flows: DMatrix<f64>) -> Result<FiniteChain> {
    let n = pi.len();
    let mut p = flows;
    for i in 0..n {
        let mut off = 0.0;
        for j in 0..n {
            if i != j {
                p[(i, j)] /= pi[i];
                off += p[(i, j)];
            }
        }
        p[(i, i)] = (1.0 - off).max(0.0);
    }
    let z: f64 = pi.iter().sum();
    FiniteChain::new(p, pi.iter().map(|v| v / z).collect())
}

/// `P_ij = Q_ij min(1, pi_j Q_ji / (pi_i Q_ij))` for `j != i`, residual on the diagonal.
pub fn assemble_mh_matrix(pi: &[f64], q: &DMatrix<f64>) -> Result<FiniteChain> {
    check_pi(pi)?;
    check_stochastic(q, pi.len(), "proposal")?;
    chain_from_flows(pi, mh_flows(pi, q))
}

fn check_s(s: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::config(format!("long-range probability must lie in [0, 1], got {s}")));
    }
    Ok(())
}

/// `(1 - s) MH(pi, Q_local) + s MH(pi, Q_long)`.
pub fn assemble_small_world_matrix(
    pi: &[f64],
    q_local: &DMatrix<f64>,
    q_long: &DMatrix<f64>,
    s: f64,
) -> Result<FiniteChain> {
    check_pi(pi)?;
    check_s(s)?;
    check_stochastic(q_local, pi.len(), "local proposal")?;
    check_stochastic(q_long, pi.len(), "long-range proposal")?;
    let f = mh_flows(pi, q_local) * (1.0 - s) + mh_flows(pi, q_long) * s;
    chain_from_flows(pi, f)
}

/// The sampling chain with its long-range branch proposing `j ~ pi_hot`
/// independently of the current state. `pi_hot` lives on the same cells as
/// `pi_cold` and may sum to less than one; the missing mass is proposals
/// that fall off the support and are held.
pub fn assemble_idealized_sampling_matrix(
    pi_cold: &[f64],
    pi_hot: &[f64],
    q_local: &DMatrix<f64>,
    s: f64,
) -> Result<FiniteChain> {
    check_pi(pi_cold)?;
    check_s(s)?;
    let n = pi_cold.len();
    if pi_hot.len() != n {
        return Err(Error::config("cold and hot vectors must live on the same cells"));
    }
    if pi_hot.iter().any(|&v| !(v >= 0.0)) || pi_hot.iter().sum::<f64>() > 1.0 + STOCHASTIC_TOL {
        return Err(Error::config("hot vector must be a sub-probability vector"));
    }
    check_stochastic(q_local, n, "local proposal")?;
    let long = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            (pi_cold[i] * pi_hot[j]).min(pi_cold[j] * pi_hot[i])
        }
    });
    let f = mh_flows(pi_cold, q_local) * (1.0 - s) + long * s;
    chain_from_flows(pi_cold, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::{FnDensity, LaplaceMixture, UniformBox};
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_indexing() {
        let g = GridSpec::new(vec![
            Axis { lo: 0.0, hi: 2.0, count: 2 },
            Axis { lo: -1.0, hi: 2.0, count: 3 },
        ])
        .unwrap();
        assert_eq!(g.n(), 6);
        assert_eq!(g.multi_index(4), vec![1, 1]);
        assert_eq!(g.flat_index(&[1, 1]), Some(4));
        assert_eq!(g.flat_index(&[2, 0]), None);
        assert_eq!(g.center(4).coords(), &[1.5, 0.5]);
        assert!(GridSpec::line(0.0, 1.0, MAX_GRID_STATES + 1).is_err());
        assert!(GridSpec::line(1.0, 1.0, 3).is_err());
    }

    #[test]
    fn uniform_target_gives_uniform_vector() {
        let box_ = UniformBox { lo: vec![-5.0], hi: vec![5.0] };
        let g = GridSpec::line(-2.0, 2.0, 8).unwrap();
        let d = discretize_target(&box_, &g, 1.0).unwrap();
        assert_eq!(d.n(), 8);
        for p in &d.pi {
            assert_abs_diff_eq!(*p, 0.125, epsilon = 1e-15);
        }
        // half the grid outside the support is dropped
        let g = GridSpec::line(0.0, 10.0, 10).unwrap();
        let d = discretize_target(&box_, &g, 1.0).unwrap();
        assert_eq!(d.cells, vec![0, 1, 2, 3, 4]);
        let g = GridSpec::line(6.0, 10.0, 4).unwrap();
        assert_eq!(discretize_target(&box_, &g, 1.0).unwrap_err(), Error::UnsupportedGrid);
    }

    #[test]
    fn symmetric_target_gives_symmetric_vector() {
        let t = LaplaceMixture::new(vec![(0.5, vec![-3.0], 0.7), (0.5, vec![3.0], 0.7)]).unwrap();
        let g = GridSpec::line(-10.0, 10.0, 50).unwrap();
        let d = discretize_target(&t, &g, 2.0).unwrap();
        for i in 0..25 {
            assert_abs_diff_eq!(d.pi[i], d.pi[49 - i], epsilon = 1e-15);
        }
    }

    #[test]
    fn very_hot_is_nearly_uniform() {
        let t = LaplaceMixture::new(vec![(0.5, vec![-3.0], 0.2), (0.5, vec![3.0], 0.2)]).unwrap();
        let g = GridSpec::line(-10.0, 10.0, 200).unwrap();
        let d = discretize_target(&t, &g, 1e6).unwrap();
        let tv: f64 = d.pi.iter().map(|p| (p - 1.0 / 200.0).abs()).sum::<f64>() / 2.0;
        assert!(tv < 0.01, "{tv}");
    }

    #[test]
    fn bad_log_density_is_reported() {
        let t = FnDensity(|_: &ContinuousState| f64::NAN);
        let g = GridSpec::line(0.0, 1.0, 3).unwrap();
        assert!(matches!(discretize_target(&t, &g, 1.0), Err(Error::Numerical(_))));
    }

    #[test]
    fn mh_by_hand() {
        let q = DMatrix::from_element(2, 2, 0.5);
        let c = assemble_mh_matrix(&[2.0 / 3.0, 1.0 / 3.0], &q).unwrap();
        let want = [0.75, 0.25, 0.5, 0.5];
        for (k, w) in want.iter().enumerate() {
            assert_abs_diff_eq!(c.get(k / 2, k % 2), *w, epsilon = 1e-15);
        }
        assert!(c.is_reversible());
    }

    #[test]
    fn uniform_pi_symmetric_q_accepts_all() {
        let g = GridSpec::line(0.0, 1.0, 7).unwrap();
        let cells: Vec<usize> = (0..7).collect();
        let q = local_walk_matrix(&g, &cells, 2).unwrap();
        let c = assemble_mh_matrix(&[1.0 / 7.0; 7], &q).unwrap();
        assert!((c.matrix() - &q).amax() < 1e-15);
    }

    #[test]
    fn small_world_endpoints() {
        let g = GridSpec::line(-4.0, 4.0, 9).unwrap();
        let t = LaplaceMixture::new(vec![(0.3, vec![-2.0], 0.5), (0.7, vec![2.0], 0.5)]).unwrap();
        let d = discretize_target(&t, &g, 1.0).unwrap();
        let ql = local_walk_matrix(&g, &d.cells, 1).unwrap();
        let qu = uniform_proposal_matrix(&g, &d.cells);
        let a = assemble_small_world_matrix(&d.pi, &ql, &qu, 0.0).unwrap();
        let b = assemble_mh_matrix(&d.pi, &ql).unwrap();
        assert!((a.matrix() - b.matrix()).amax() < 1e-15);
        let a = assemble_small_world_matrix(&d.pi, &ql, &qu, 1.0).unwrap();
        let b = assemble_mh_matrix(&d.pi, &qu).unwrap();
        assert!((a.matrix() - b.matrix()).amax() < 1e-15);
        assert!(assemble_small_world_matrix(&d.pi, &ql, &qu, 1.5).is_err());
    }

    #[test]
    fn idealized_at_unit_temperature_proposes_from_target() {
        let g = GridSpec::line(-4.0, 4.0, 9).unwrap();
        let t = LaplaceMixture::new(vec![(0.3, vec![-2.0], 0.5), (0.7, vec![2.0], 0.5)]).unwrap();
        let d = discretize_target(&t, &g, 1.0).unwrap();
        let ql = local_walk_matrix(&g, &d.cells, 1).unwrap();
        let c = assemble_idealized_sampling_matrix(&d.pi, &d.pi, &ql, 1.0).unwrap();
        for i in 0..d.n() {
            for j in 0..d.n() {
                assert_abs_diff_eq!(c.get(i, j), d.pi[j], epsilon = 1e-14);
            }
        }
        assert!(c.is_reversible());
    }

    #[test]
    fn walks_and_cauchy_are_stochastic() {
        let g = GridSpec::new(vec![
            Axis { lo: 0.0, hi: 1.0, count: 4 },
            Axis { lo: 0.0, hi: 1.0, count: 5 },
        ])
        .unwrap();
        let cells: Vec<usize> = (0..20).filter(|c| c % 3 != 0).collect();
        for q in [
            local_walk_matrix(&g, &cells, 1).unwrap(),
            local_walk_matrix(&g, &cells, 2).unwrap(),
            cauchy_proposal_matrix(&g, &cells, 0.3).unwrap(),
            uniform_proposal_matrix(&g, &cells),
        ] {
            check_stochastic(&q, cells.len(), "q").unwrap();
        }
        // an interior 2-d cell sees 8 neighbours at radius 1
        let all: Vec<usize> = (0..20).collect();
        let q = local_walk_matrix(&g, &all, 1).unwrap();
        let interior = g.flat_index(&[1, 2]).unwrap();
        assert_abs_diff_eq!(q[(interior, interior)], 0.0);
        assert_abs_diff_eq!(q[(interior, g.flat_index(&[2, 3]).unwrap())], 0.125);
    }
}
