//! Brute-force reference: the full cosine Hamiltonian diagonalized in a
//! truncated product Fock basis of the linearized modes.

use multimon::circuit::{analyze_modes, solve_dc_phases};
use multimon::netlist::Netlist;
use multimon::units;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

const BUILD_LEVELS: usize = 40;

/// Lowest eigenvalues (GHz, relative to the ground state) labelled by the
/// Fock state with the largest overlap.
pub struct FockSpectrum {
    pub levels: usize,
    pub modes: usize,
    pub energies: Vec<(Vec<u8>, f64)>,
}

impl FockSpectrum {
    pub fn energy(&self, occ: &[u8]) -> f64 {
        self.energies.iter().find(|(o, _)| o.as_slice() == occ).map(|(_, e)| *e).expect("state resolved")
    }
}

fn position(n: usize) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(n, n);
    for k in 1..n {
        let s = (k as f64).sqrt();
        x[(k - 1, k)] = s;
        x[(k, k - 1)] = s;
    }
    x
}

fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Embeds single-mode operators (one per mode) as their tensor product.
fn product(ops: &[DMatrix<f64>]) -> DMatrix<f64> {
    ops[1..].iter().fold(ops[0].clone(), |acc, o| kron(&acc, o))
}

pub fn diagonalize(netlist: &Netlist, levels: usize) -> FockSpectrum {
    let (_, modes) = analyze_modes(netlist).unwrap();
    let dc = solve_dc_phases(netlist).unwrap();
    let m = modes.mode_count();
    let omega: Vec<f64> = modes.frequencies_ghz.iter().map(|&f| units::angular(f)).collect();
    let zpf = modes.zero_point_fluxes();
    let dim = levels.pow(m as u32);
    let x_big = position(BUILD_LEVELS);
    let x_small = x_big.view((0, 0), (levels, levels)).into_owned();
    let identity = DMatrix::<f64>::identity(levels, levels);
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for index in 0..dim {
        let mut rest = index;
        let mut e = 0.0;
        for mu in (0..m).rev() {
            e += omega[mu] * ((rest % levels) as f64 + 0.5);
            rest /= levels;
        }
        h[(index, index)] = e;
    }
    for (k, b) in netlist.branches.iter().enumerate() {
        if !b.is_junction() {
            continue;
        }
        let ej = units::angular(b.ej_ghz);
        let delta = dc.branch[k];
        let c: Vec<f64> =
            (0..m).map(|mu| (modes.vectors[(b.i - 1, mu)] - modes.vectors[(b.j - 1, mu)]) * zpf[mu]).collect();
        // exp(i c X) per mode, built large and truncated.
        let re_ops: Vec<(DMatrix<f64>, DMatrix<f64>)> = c
            .iter()
            .map(|&cm| {
                let gen = x_big.map(|v| Complex64::new(0.0, cm * v));
                let u = gen.exp();
                let u = u.view((0, 0), (levels, levels)).into_owned();
                (u.map(|z| z.re), u.map(|z| z.im))
            })
            .collect();
        // Re(e^{i delta} prod_mu (R_mu + i I_mu)), expanded over subsets.
        let mut cos_part = DMatrix::<f64>::zeros(dim, dim);
        for mask in 0..(1usize << m) {
            let ops: Vec<DMatrix<f64>> = (0..m)
                .map(|mu| if mask >> mu & 1 == 1 { re_ops[mu].1.clone() } else { re_ops[mu].0.clone() })
                .collect();
            let imag_count = mask.count_ones() as usize;
            // i^imag_count times e^{i delta}: take the real part.
            let phase = match imag_count % 4 {
                0 => delta.cos(),
                1 => -delta.sin(),
                2 => -delta.cos(),
                _ => delta.sin(),
            };
            if phase != 0.0 {
                cos_part += product(&ops) * phase;
            }
        }
        h -= cos_part * ej;
        // Remove the quadratic part already contained in the harmonic term.
        let mut x = DMatrix::<f64>::zeros(dim, dim);
        for mu in 0..m {
            let ops: Vec<DMatrix<f64>> =
                (0..m).map(|nu| if nu == mu { x_small.clone() * c[mu] } else { identity.clone() }).collect();
            x += product(&ops);
        }
        h -= (&x * &x) * (0.5 * ej * delta.cos());
        // The quadratic part with X truncated from the large space.
        let x2_big = &x_big * &x_big;
        let x2 = x2_big.view((0, 0), (levels, levels)).into_owned();
        let edge = &x2 - &x_small * &x_small;
        for mu in 0..m {
            let ops: Vec<DMatrix<f64>> =
                (0..m).map(|nu| if nu == mu { edge.clone() * (c[mu] * c[mu]) } else { identity.clone() }).collect();
            h -= product(&ops) * (0.5 * ej * delta.cos());
        }
    }
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let ground = eig.eigenvalues[order[0]];
    let mut energies = Vec::new();
    for &k in order.iter().take(40) {
        let v = eig.eigenvectors.column(k);
        let (best, _) =
            v.iter().enumerate().fold((0, 0.0), |(bi, bv), (i, &x)| if x.abs() > bv { (i, x.abs()) } else { (bi, bv) });
        let mut occ = vec![0u8; m];
        let mut rest = best;
        for mu in (0..m).rev() {
            occ[mu] = (rest % levels) as u8;
            rest /= levels;
        }
        if !energies.iter().any(|(o, _): &(Vec<u8>, f64)| *o == occ) {
            energies.push((occ, units::ghz(eig.eigenvalues[k] - ground)));
        }
    }
    FockSpectrum { levels, modes: m, energies }
}
