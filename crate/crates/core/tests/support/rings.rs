use multimon::circuit::{analyze_modes, symmetric_ring_modes};
use multimon::netlist::{Branch, Netlist};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Ring of `n` equal junctions with equal neighbour capacitors and uniform
/// ground capacitance.
pub fn uniform_ring(n: usize, ej: f64, c: f64) -> Netlist {
    let branches = (1..=n).map(|i| {
        let j = i % n + 1;
        Branch::junction(i.min(j), i.max(j), ej, c)
    });
    Netlist { nodes: n, branches: branches.collect(), ground_caps_ff: vec![0.01; n], flux_phi0: 0.0 }
}

pub fn projector(columns: &DMatrix<f64>) -> DMatrix<f64> {
    let q = columns.clone().qr().q();
    let q = q.columns(0, columns.ncols()).into_owned();
    &q * q.transpose()
}

/// Largest distance between the projector onto each analytic cos/sin pair
/// and the projector onto the numerical modes that share it.
pub fn ring_projector_distance(n: usize) -> Result<f64, String> {
    let (_, modes) = analyze_modes(&uniform_ring(n, 9.0, 36.0)).map_err(|e| e.to_string())?;
    let analytic = symmetric_ring_modes(n).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for mu in 0..analytic.ncols() {
        let k = (mu + 1).div_ceil(2);
        match groups.last_mut() {
            Some(g) if (g[0] + 1).div_ceil(2) == k => g.push(mu),
            _ => groups.push(vec![mu]),
        }
    }
    let mut used = 0;
    for g in groups {
        let cols: Vec<DVector<f64>> = g.iter().map(|&mu| analytic.column(mu).into_owned()).collect();
        let pa = projector(&DMatrix::from_columns(&cols));
        let members: Vec<DVector<f64>> =
            (0..modes.mode_count()).map(|mu| modes.mode(mu).normalize()).filter(|v| (&pa * v).norm() > 0.5).collect();
        if members.len() != g.len() {
            return Err(format!("N = {n}: subspace of size {} matched {} modes", g.len(), members.len()));
        }
        used += members.len();
        let pn = projector(&DMatrix::from_columns(&members));
        worst = worst.max((pa - pn).norm());
    }
    if used != n - 1 {
        return Err(format!("N = {n}: {used} of {} modes matched", n - 1));
    }
    Ok(worst)
}

/// Ring netlists in the transmon regime: `nodes` junctions of 7-12 GHz
/// with 25-45 fF shunts and, on four nodes, random diagonal capacitors.
pub fn random_transmon_ring(rng: &mut ChaCha8Rng, nodes: usize) -> Netlist {
    let mut branches = Vec::new();
    for i in 1..=nodes {
        let j = i % nodes + 1;
        branches.push(Branch::junction(i.min(j), i.max(j), rng.random_range(7.0..12.0), rng.random_range(25.0..45.0)));
    }
    if nodes == 4 {
        branches.push(Branch::capacitor(1, 3, rng.random_range(5.0..25.0)));
        branches.push(Branch::capacitor(2, 4, rng.random_range(5.0..25.0)));
    }
    Netlist { nodes, branches, ground_caps_ff: vec![0.01; nodes], flux_phi0: 0.0 }
}
