//! Linearized circuit: DC phases, capacitance and inductance matrices and
//! normal modes.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::netlist::Netlist;
use crate::units;

/// Static phase drops across the inductive branches at the flux bias.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DcPhases {
    /// Phase drop `phi_i - phi_j + delta` at the minimum, one per branch
    /// (zero for capacitive branches and for branches outside the loop).
    pub branch: Vec<f64>,
    /// Supercurrent circulating in the loop, in GHz (EJ sin(delta) units).
    pub loop_current_ghz: f64,
    junctions: Vec<usize>,
}

impl DcPhases {
    /// Phases of the junction branches, in netlist order.
    pub fn junction_phases(&self) -> Vec<f64> {
        self.junctions.iter().map(|&k| self.branch[k]).collect()
    }
}

/// The single inductive loop of a netlist, traversed from its lowest node
/// toward the lower-numbered neighbour.
#[derive(Debug, Clone, PartialEq)]
pub struct InductiveLoop {
    /// `(branch index, orientation)`; orientation is +1 when the traversal
    /// runs from `branch.i` to `branch.j`.
    pub branches: Vec<(usize, f64)>,
    /// Nodes in traversal order (1-based).
    pub nodes: Vec<usize>,
}

/// Finds the unique cycle of inductive branches, or reports why there is
/// none.
pub fn inductive_loop(netlist: &Netlist) -> Result<InductiveLoop> {
    let n = netlist.nodes;
    let edges: Vec<usize> = (0..netlist.branches.len()).filter(|&k| netlist.branches[k].is_inductive()).collect();
    if edges.is_empty() {
        return Err(Error::Topology("no inductive branches form a loop".into()));
    }
    // Cycle rank = E - V + components over the inductive subgraph.
    let mut parent: Vec<usize> = (0..=n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    let mut cycles = 0;
    for &k in &edges {
        let b = &netlist.branches[k];
        let (ra, rb) = (find(&mut parent, b.i), find(&mut parent, b.j));
        if ra == rb {
            cycles += 1;
        } else {
            parent[ra] = rb;
        }
    }
    if cycles == 0 {
        return Err(Error::Topology("inductive branches contain no closed loop for the external flux".into()));
    }
    if cycles > 1 {
        return Err(Error::Topology(format!(
            "inductive branches contain {cycles} independent loops; a single flux bias is ambiguous"
        )));
    }
    // Strip dangling trees: what remains is exactly the cycle.
    let mut alive = edges.clone();
    loop {
        let mut degree = vec![0usize; n + 1];
        for &k in &alive {
            degree[netlist.branches[k].i] += 1;
            degree[netlist.branches[k].j] += 1;
        }
        let before = alive.len();
        alive.retain(|&k| degree[netlist.branches[k].i] > 1 && degree[netlist.branches[k].j] > 1);
        if alive.len() == before {
            break;
        }
    }
    let start =
        alive.iter().flat_map(|&k| [netlist.branches[k].i, netlist.branches[k].j]).min().expect("cycle is non-empty");
    let other = |k: usize, node: usize| {
        let b = &netlist.branches[k];
        if b.i == node {
            b.j
        } else {
            b.i
        }
    };
    let first = *alive
        .iter()
        .filter(|&&k| netlist.branches[k].i == start || netlist.branches[k].j == start)
        .min_by_key(|&&k| other(k, start))
        .expect("start node lies on the cycle");
    let mut branches = Vec::with_capacity(alive.len());
    let mut nodes = vec![start];
    let (mut node, mut edge) = (start, first);
    loop {
        let b = &netlist.branches[edge];
        let orientation = if b.i == node { 1.0 } else { -1.0 };
        branches.push((edge, orientation));
        node = other(edge, node);
        if node == start {
            break;
        }
        nodes.push(node);
        edge = *alive
            .iter()
            .find(|&&k| k != edge && (netlist.branches[k].i == node || netlist.branches[k].j == node))
            .expect("cycle node has two cycle edges");
    }
    Ok(InductiveLoop { branches, nodes })
}

/// Branch current-phase relation `EJ sin(theta) + EL theta` and its slope.
fn branch_current(ej: f64, el: f64, theta: f64) -> (f64, f64) {
    (ej * theta.sin() + el * theta, ej * theta.cos() + el)
}

/// Largest phase on the stable (positive-slope) branch.
fn critical_phase(ej: f64, el: f64) -> f64 {
    if ej <= el {
        f64::INFINITY
    } else {
        (-el / ej).acos()
    }
}

/// Inverts the current-phase relation of one branch on `[0, theta_c)`.
fn branch_phase(ej: f64, el: f64, current: f64) -> f64 {
    let theta_c = critical_phase(ej, el);
    let mut hi = if theta_c.is_finite() { theta_c } else { (current + ej) / el + 1.0 };
    let mut lo = 0.0;
    let mut theta = if el > 0.0 { (current / (ej + el)).min(0.5 * hi) } else { (current / ej).clamp(-1.0, 1.0).asin() };
    for _ in 0..200 {
        let (i, di) = branch_current(ej, el, theta);
        let r = i - current;
        if r > 0.0 {
            hi = theta
        } else {
            lo = theta
        }
        let mut next = theta - r / di;
        if !(next > lo && next < hi) || di <= 0.0 {
            next = 0.5 * (lo + hi);
        }
        if (next - theta).abs() <= 1e-16 * (1.0 + theta.abs()) {
            return next;
        }
        theta = next;
    }
    theta
}

/// Solves current conservation around the flux loop: every loop branch
/// carries the same supercurrent and the oriented phase drops sum to
/// `2 pi flux`.
pub fn solve_dc_phases(netlist: &Netlist) -> Result<DcPhases> {
    netlist.validate()?;
    let junctions = netlist.junction_indices();
    let mut branch = vec![0.0; netlist.branches.len()];
    if netlist.flux_phi0 == 0.0 {
        return Ok(DcPhases { branch, loop_current_ghz: 0.0, junctions });
    }
    let cycle = inductive_loop(netlist)?;
    let target = 2.0 * PI * netlist.flux_phi0.abs();
    let params: Vec<(f64, f64)> = cycle
        .branches
        .iter()
        .map(|&(k, _)| (netlist.branches[k].ej_ghz, netlist.branches[k].linear_energy_ghz()))
        .collect();
    let i_max = params
        .iter()
        .map(|&(ej, el)| {
            let tc = critical_phase(ej, el);
            if tc.is_finite() {
                branch_current(ej, el, tc).0
            } else {
                f64::INFINITY
            }
        })
        .fold(f64::INFINITY, f64::min);
    let total = |current: f64| -> (f64, f64) {
        params.iter().fold((0.0, 0.0), |(s, ds), &(ej, el)| {
            let th = branch_phase(ej, el, current);
            (s + th, ds + 1.0 / branch_current(ej, el, th).1)
        })
    };
    let (mut lo, mut hi) = (0.0, i_max);
    if hi.is_finite() {
        let reach: f64 = params.iter().map(|&(ej, el)| branch_phase(ej, el, i_max)).sum();
        if target >= reach {
            return Err(Error::FluxTooLarge(format!(
                "flux {} Phi0 needs a loop phase of {:.4} rad, the junction loop supports below {:.4} rad",
                netlist.flux_phi0, target, reach
            )));
        }
    } else {
        hi = 1.0;
        while total(hi).0 < target {
            hi *= 2.0;
        }
    }
    let mut current = 0.5 * (lo + hi);
    for _ in 0..300 {
        let (s, ds) = total(current);
        let r = s - target;
        if r > 0.0 {
            hi = current
        } else {
            lo = current
        }
        let mut next = current - r / ds;
        if !(next > lo && next < hi) || !ds.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - current).abs() <= 1e-16 * current.abs() {
            current = next;
            break;
        }
        current = next;
    }
    let sign = netlist.flux_phi0.signum();
    let mut residual = -target;
    for (&(k, orientation), &(ej, el)) in cycle.branches.iter().zip(&params) {
        let th = branch_phase(ej, el, current);
        residual += th;
        branch[k] = sign * orientation * th;
    }
    if residual.abs() > 1e-9 {
        return Err(Error::Convergence(format!("loop phase residual {residual:e} after DC solve")));
    }
    Ok(DcPhases { branch, loop_current_ghz: sign * current, junctions })
}

/// Capacitance and inductive-curvature matrices about the DC minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedMatrices {
    /// Inductive curvature in GHz per squared reduced flux.
    pub el_ghz: DMatrix<f64>,
    /// Capacitance matrix in fF.
    pub c_ff: DMatrix<f64>,
    pub dc: DcPhases,
    /// Per-branch curvature `EJ cos(delta) + EL`, in GHz.
    pub branch_curvature_ghz: Vec<f64>,
    pub ring_order: Option<Vec<usize>>,
}

fn stamp(m: &mut DMatrix<f64>, i: usize, j: usize, value: f64) {
    let (a, b) = (i - 1, j - 1);
    m[(a, a)] += value;
    m[(b, b)] += value;
    m[(a, b)] -= value;
    m[(b, a)] -= value;
}

/// The inductive graph visits every node exactly once around a single loop.
fn ring_order(netlist: &Netlist) -> Option<Vec<usize>> {
    let cycle = inductive_loop(netlist).ok()?;
    let inductive = netlist.branches.iter().filter(|b| b.is_inductive()).count();
    (cycle.nodes.len() == netlist.nodes && inductive == netlist.nodes).then_some(cycle.nodes)
}

pub fn build_matrices(netlist: &Netlist) -> Result<LinearizedMatrices> {
    let dc = solve_dc_phases(netlist)?;
    let n = netlist.nodes;
    let mut el = DMatrix::zeros(n, n);
    let mut c = DMatrix::zeros(n, n);
    let mut curvature = vec![0.0; netlist.branches.len()];
    for (k, b) in netlist.branches.iter().enumerate() {
        let josephson = b.ej_ghz * dc.branch[k].cos();
        if b.is_junction() && josephson + b.linear_energy_ghz() < 0.0 {
            return Err(Error::Unstable(format!(
                "branch {k} ({}-{}) has negative curvature EJ cos(delta) = {josephson:.4} GHz",
                b.i, b.j
            )));
        }
        curvature[k] = josephson + b.linear_energy_ghz();
        stamp(&mut el, b.i, b.j, curvature[k]);
        stamp(&mut c, b.i, b.j, b.c_ff);
    }
    for (node, &cg) in netlist.ground_caps_ff.iter().enumerate() {
        c[(node, node)] += cg;
    }
    for k in 1..=n {
        if c.view((0, 0), (k, k)).into_owned().cholesky().is_none() {
            return Err(Error::config(format!("capacitance matrix is not positive definite at node {k}")));
        }
    }
    Ok(LinearizedMatrices { el_ghz: el, c_ff: c, dc, branch_curvature_ghz: curvature, ring_order: ring_order(netlist) })
}

/// Normal modes of the linearized circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSolution {
    /// Mode frequencies in GHz, ascending.
    pub frequencies_ghz: Vec<f64>,
    /// Node reduced flux per unit mode coordinate; column `mu` is mode `mu`.
    /// Columns are orthonormal in the reduced-capacitance metric.
    pub vectors: DMatrix<f64>,
    /// Zero-frequency (free-particle) directions, same normalization.
    pub zero_modes: DMatrix<f64>,
    /// Reduced capacitance matrix in ns/rad.
    pub capacitance: DMatrix<f64>,
    /// Node order around the inductive ring, when the circuit is a ring.
    pub ring_order: Option<Vec<usize>>,
}

impl ModeSolution {
    pub fn mode_count(&self) -> usize {
        self.frequencies_ghz.len()
    }

    /// Zero-point fluctuation of each mode coordinate, `1/sqrt(2 omega)`.
    pub fn zero_point_fluxes(&self) -> Vec<f64> {
        self.frequencies_ghz.iter().map(|&f| (0.5 / units::angular(f)).sqrt()).collect()
    }

    pub fn mode(&self, mu: usize) -> DVector<f64> {
        self.vectors.column(mu).into_owned()
    }

    /// Reorders modes: new mode `k` is old mode `order[k]`.
    pub fn reordered(&self, order: &[usize]) -> ModeSolution {
        let cols: Vec<DVector<f64>> = order.iter().map(|&o| self.mode(o)).collect();
        ModeSolution {
            frequencies_ghz: order.iter().map(|&o| self.frequencies_ghz[o]).collect(),
            vectors: DMatrix::from_columns(&cols),
            ..self.clone()
        }
    }

    /// Ring labels when available, otherwise ascending frequency.
    pub fn label_order(&self) -> Vec<usize> {
        self.ring_labels().unwrap_or_else(|| (0..self.mode_count()).collect())
    }

    /// For ring circuits: `labels[k]` is the mode index best matching the
    /// k-th analytic ring mode. Returns `None` for non-ring circuits.
    pub fn ring_labels(&self) -> Option<Vec<usize>> {
        let order = self.ring_order.as_ref()?;
        let analytic = ring_modes_in_node_order(order);
        let m = self.mode_count();
        if analytic.ncols() != m {
            return None;
        }
        let mut overlap = DMatrix::zeros(m, m);
        for k in 0..m {
            for mu in 0..m {
                let v = self.vectors.column(mu);
                overlap[(k, mu)] = (analytic.column(k).dot(&v) / v.norm()).abs();
            }
        }
        let mut labels = vec![usize::MAX; m];
        let mut taken = vec![false; m];
        let mut pairs: Vec<(usize, usize)> = (0..m).flat_map(|k| (0..m).map(move |mu| (k, mu))).collect();
        pairs.sort_by(|a, b| overlap[*b].total_cmp(&overlap[*a]));
        for (k, mu) in pairs {
            if labels[k] == usize::MAX && !taken[mu] {
                labels[k] = mu;
                taken[mu] = true;
            }
        }
        Some(labels)
    }
}

/// Analytic modes of a symmetric `n`-node ring, one unit-norm column per
/// mode: `mu` odd gives `cos(2 pi j ceil(mu/2) / n)`, `mu` even gives the
/// matching sine, for node `j = 0..n`.
pub fn symmetric_ring_modes(n: usize) -> Result<DMatrix<f64>> {
    if n < 3 {
        return Err(Error::Domain(format!("a ring needs at least 3 nodes, got {n}")));
    }
    let mut m = DMatrix::zeros(n, n - 1);
    for mu in 1..n {
        let k = mu.div_ceil(2) as f64;
        for j in 0..n {
            let arg = 2.0 * PI * j as f64 * k / n as f64;
            m[(j, mu - 1)] = if mu % 2 == 1 { arg.cos() } else { arg.sin() };
        }
        let norm = m.column(mu - 1).norm();
        m.column_mut(mu - 1).scale_mut(1.0 / norm);
    }
    Ok(m)
}

/// Analytic ring modes mapped from ring position to node index.
fn ring_modes_in_node_order(order: &[usize]) -> DMatrix<f64> {
    let ring = symmetric_ring_modes(order.len()).expect("inductive ring has at least 3 nodes");
    let mut out = DMatrix::zeros(order.len(), ring.ncols());
    for (pos, &node) in order.iter().enumerate() {
        out.row_mut(node - 1).copy_from(&ring.row(pos));
    }
    out
}

const ZERO_MODE_TOL: f64 = 1e-6;
const DEGENERACY_TOL: f64 = 1e-9;

pub fn normal_modes(matrices: &LinearizedMatrices) -> Result<ModeSolution> {
    let n = matrices.c_ff.nrows();
    let c_red = matrices.c_ff.map(units::reduced_capacitance);
    let el = matrices.el_ghz.map(units::angular);
    let ce = SymmetricEigen::new(c_red.clone());
    if ce.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(Error::config("capacitance matrix is not positive definite"));
    }
    let mut c_tilde = ce.eigenvectors.clone();
    for (k, &l) in ce.eigenvalues.iter().enumerate() {
        c_tilde.column_mut(k).scale_mut(1.0 / l.sqrt());
    }
    let e_tilde = c_tilde.transpose() * &el * &c_tilde;
    let e_tilde = (&e_tilde + e_tilde.transpose()) * 0.5;
    let ee = SymmetricEigen::new(e_tilde);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| ee.eigenvalues[a].total_cmp(&ee.eigenvalues[b]));
    let scale = ee.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
    if scale == 0.0 {
        return Err(Error::Unstable("circuit has no restoring force".into()));
    }
    let mut zero = Vec::new();
    let mut modes = Vec::new();
    for &k in &order {
        let l = ee.eigenvalues[k];
        if l < -ZERO_MODE_TOL * scale {
            return Err(Error::Unstable(format!("negative mode curvature {:.3e} (rad/ns)^2", l)));
        }
        let v = &c_tilde * ee.eigenvectors.column(k);
        if l.abs() < ZERO_MODE_TOL * scale {
            zero.push(v);
        } else {
            modes.push((l, v));
        }
    }
    let ring = matrices.ring_order.clone();
    let references = match &ring {
        Some(order) => ring_modes_in_node_order(order),
        None => DMatrix::identity(n, n),
    };
    // Fix the basis inside degenerate groups, then fix signs.
    let mut start = 0;
    while start < modes.len() {
        let mut end = start + 1;
        while end < modes.len() && (modes[end].0 - modes[start].0).abs() <= DEGENERACY_TOL * modes[end].0 {
            end += 1;
        }
        if end - start > 1 {
            let group: Vec<DVector<f64>> = modes[start..end].iter().map(|(_, v)| v.clone()).collect();
            for (slot, v) in canonical_basis(&group, &c_red, &references).into_iter().enumerate() {
                modes[start + slot].1 = v;
            }
        }
        start = end;
    }
    if zero.len() > 1 {
        zero = canonical_basis(&zero, &c_red, &DMatrix::identity(n, n));
    }
    let fix_sign = |v: &mut DVector<f64>| {
        let sign = if ring.is_some() {
            let (_, dot) = (0..references.ncols())
                .map(|k| references.column(k).dot(v))
                .fold((0.0, 0.0), |(best, d), x| if x.abs() > best { (x.abs(), x) } else { (best, d) });
            dot
        } else {
            let max = v.amax();
            v.iter().copied().find(|x| x.abs() > 1e-6 * max).unwrap_or(1.0)
        };
        if sign < 0.0 {
            v.neg_mut();
        }
    };
    let mut vectors = DMatrix::zeros(n, modes.len());
    let mut frequencies = Vec::with_capacity(modes.len());
    for (mu, (l, mut v)) in modes.into_iter().enumerate() {
        fix_sign(&mut v);
        vectors.set_column(mu, &v);
        frequencies.push(units::ghz(l.sqrt()));
    }
    let mut zero_modes = DMatrix::zeros(n, zero.len());
    for (k, mut v) in zero.into_iter().enumerate() {
        let max = v.amax();
        if v.iter().copied().find(|x| x.abs() > 1e-6 * max).unwrap_or(1.0) < 0.0 {
            v.neg_mut();
        }
        zero_modes.set_column(k, &v);
    }
    Ok(ModeSolution { frequencies_ghz: frequencies, vectors, zero_modes, capacitance: c_red, ring_order: ring })
}

/// Re-expresses a C-orthonormal degenerate group in the basis obtained by
/// projecting the reference columns in order and orthonormalizing.
fn canonical_basis(group: &[DVector<f64>], c: &DMatrix<f64>, references: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let d = group.len();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(d);
    for r in references.column_iter() {
        if basis.len() == d {
            break;
        }
        let cr = c * r;
        let coefficients = DVector::from_iterator(d, group.iter().map(|v| v.dot(&cr)));
        let mut candidate = DVector::zeros(c.nrows());
        for (v, a) in group.iter().zip(coefficients.iter()) {
            candidate.axpy(*a, v, 1.0);
        }
        let reference_norm = (r.transpose() * c * r)[(0, 0)].sqrt();
        for b in &basis {
            let overlap = (b.transpose() * c * &candidate)[(0, 0)];
            candidate.axpy(-overlap, b, 1.0);
        }
        let norm = (candidate.transpose() * c * &candidate)[(0, 0)].sqrt();
        if norm > 1e-6 * reference_norm {
            basis.push(candidate / norm);
        }
    }
    basis
}

/// Convenience: matrices and modes of a netlist at its own flux bias.
pub fn analyze_modes(netlist: &Netlist) -> Result<(LinearizedMatrices, ModeSolution)> {
    let matrices = build_matrices(netlist)?;
    let modes = normal_modes(&matrices)?;
    Ok((matrices, modes))
}
