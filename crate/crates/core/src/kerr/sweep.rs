use serde::Serialize;

use super::{kerr_for, KerrOptions, KerrTensor};
use crate::circuit::analyze_modes;
use crate::error::{Error, Result};
use crate::netlist::Netlist;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub flux_phi0: f64,
    /// Kerr tensor with modes in label order (ring modes matched to the
    /// analytic ring vectors, otherwise ascending frequency).
    pub kerr: KerrTensor,
}

/// Kerr tensor at the netlist's own flux, modes in label order.
pub fn labeled_kerr(netlist: &Netlist, options: KerrOptions) -> Result<KerrTensor> {
    let (_, modes) = analyze_modes(netlist)?;
    let kerr = kerr_for(netlist, &modes, options)?;
    Ok(match modes.ring_labels() {
        Some(order) => kerr.reordered(&order),
        None => kerr,
    })
}

pub fn flux_sweep(netlist: &Netlist, grid: &[f64], options: KerrOptions) -> Result<Vec<SweepPoint>> {
    if let Some(bad) = grid.iter().find(|f| !(f.is_finite() && f.abs() <= 0.25)) {
        return Err(Error::Domain(format!("flux {bad} Phi0 is outside [-0.25, 0.25]")));
    }
    let point = |&flux: &f64| -> Result<SweepPoint> {
        Ok(SweepPoint { flux_phi0: flux, kerr: labeled_kerr(&netlist.with_flux(flux), options)? })
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        grid.par_iter().map(point).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        grid.iter().map(point).collect()
    }
}

pub const SWEEP_HEADER: &str = "flux_phi0,f_A,f_B,f_C,alpha_A,alpha_B,alpha_C,J_AB,J_BC,J_CA,xi_ABC";

/// CSV in GHz for three-mode devices. `f` is the qubit frequency
/// `omega - J`; `xi_ABC` is the magnitude of the three-wave coefficient,
/// whose sign follows the arbitrary sign of each mode vector.
pub fn sweep_csv(points: &[SweepPoint]) -> Result<String> {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for p in points {
        let k = &p.kerr;
        if k.mode_count() != 3 {
            return Err(Error::config(format!("sweep CSV needs three modes, device has {}", k.mode_count())));
        }
        let f = k.qubit_frequencies();
        let row = [
            p.flux_phi0,
            f[0],
            f[1],
            f[2],
            k.anharmonicity(0),
            k.anharmonicity(1),
            k.anharmonicity(2),
            k.cross(0, 1),
            k.cross(1, 2),
            k.cross(2, 0),
            k.xi([0, 1, 2]).abs(),
        ];
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.9}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}
