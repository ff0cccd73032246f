//! Coupling of the modes to a readout cavity: direct couplings, dispersive
//! shifts of every computational state and joint-readout histograms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::circuit::{symmetric_ring_modes, ModeSolution};
use crate::error::{Error, Result};
use crate::kerr::KerrTensor;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CavityModel {
    pub omega_r_ghz: f64,
    pub g_ref_mhz: f64,
    /// Unit vector in node space along the cavity field.
    pub field_direction: Vec<f64>,
    /// `|g'_mu|` in MHz, modes in the order of the mode solution.
    pub g_direct_mhz: Vec<f64>,
    /// Single-excitation transition minus cavity frequency, GHz.
    pub detunings_ghz: Vec<f64>,
    /// Dispersive shift of each computational state (label `"010"` etc.),
    /// MHz; the cavity moves by `2 chi`.
    pub chi_mhz: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

/// Analytic ring mode `reference_mode` (0 = first dipolar mode), placed on
/// the nodes in ring order.
pub fn ring_field_direction(modes: &ModeSolution, reference_mode: usize) -> Result<Vec<f64>> {
    let order = modes
        .ring_order
        .as_ref()
        .ok_or_else(|| Error::Topology("cavity field along a ring mode needs a ring circuit".into()))?;
    let ring = symmetric_ring_modes(order.len())?;
    if reference_mode >= ring.ncols() {
        return Err(Error::Domain(format!(
            "reference mode {reference_mode} out of range for {} ring modes",
            ring.ncols()
        )));
    }
    let mut v = vec![0.0; order.len()];
    for (pos, &node) in order.iter().enumerate() {
        v[node - 1] = ring[(pos, reference_mode)];
    }
    Ok(v)
}

/// `g'_mu = g_ref (M_mu . v) / (s |v|^2)` where `s v` is the direction `v`
/// normalized in the capacitance metric, so a mode equal to that ideal
/// mode couples with exactly `g_ref`.
pub fn direct_couplings_along(modes: &ModeSolution, direction: &[f64], g_ref_mhz: f64) -> Result<Vec<f64>> {
    let n = modes.vectors.nrows();
    if direction.len() != n {
        return Err(Error::config(format!("field direction has {} entries for {n} nodes", direction.len())));
    }
    let v = nalgebra::DVector::from_column_slice(direction);
    let vv = v.dot(&v);
    if vv == 0.0 {
        return Err(Error::Domain("field direction is the zero vector".into()));
    }
    let s = 1.0 / (v.transpose() * &modes.capacitance * &v)[(0, 0)].sqrt();
    Ok((0..modes.mode_count()).map(|mu| (g_ref_mhz * modes.vectors.column(mu).dot(&v) / (s * vv)).abs()).collect())
}

pub fn direct_couplings(modes: &ModeSolution, reference_mode: usize, g_ref_mhz: f64) -> Result<Vec<f64>> {
    direct_couplings_along(modes, &ring_field_direction(modes, reference_mode)?, g_ref_mhz)
}

fn state_label(bits: usize, m: usize) -> String {
    (0..m).map(|mu| if bits >> (m - 1 - mu) & 1 == 1 { '1' } else { '0' }).collect()
}

/// Dispersive shift in MHz of the state with occupations `n`:
/// `chi = 1/2 sum_mu g_mu^2 [n_mu/(D_mu(n) + 2J_mu) - (n_mu + 1)/D_mu(n) + 1/D_mu0]`
/// with `D_mu(n) = D_mu0 - 2 J_mu n_mu - sum_nu 2 J_mu_nu n_nu`.
pub fn dispersive_shift(g_mhz: &[f64], detunings_ghz: &[f64], kerr: &KerrTensor, n: &[u8]) -> Result<f64> {
    let m = kerr.mode_count();
    let mut chi = 0.0;
    for mu in 0..m {
        let g = g_mhz[mu] * 1e-3;
        let mut d = detunings_ghz[mu] - 2.0 * kerr.self_kerr[mu] * n[mu] as f64;
        for nu in 0..m {
            if nu != mu {
                d -= 2.0 * kerr.cross(mu, nu) * n[nu] as f64;
            }
        }
        let nm = n[mu] as f64;
        for (label, den) in
            [("detuning", d), ("detuning + 2J", d + 2.0 * kerr.self_kerr[mu]), ("bare detuning", detunings_ghz[mu])]
        {
            if den.abs() < 1e-3 {
                return Err(Error::Resonance(format!(
                    "mode {mu} {label} {:.4} MHz from the cavity in state {:?}",
                    den * 1e3,
                    n
                )));
            }
        }
        chi += 0.5 * g * g * (nm / (d + 2.0 * kerr.self_kerr[mu]) - (nm + 1.0) / d + 1.0 / detunings_ghz[mu]);
    }
    Ok(chi * 1e3)
}

/// Shifts of all `2^N` computational states keyed by label (`"000"` = 0).
pub fn dispersive_shifts(g_mhz: &[f64], detunings_ghz: &[f64], kerr: &KerrTensor) -> Result<BTreeMap<String, f64>> {
    let m = kerr.mode_count();
    if g_mhz.len() != m || detunings_ghz.len() != m {
        return Err(Error::config("coupling and detuning lists must have one entry per mode"));
    }
    let mut out = BTreeMap::new();
    for bits in 0..(1usize << m) {
        let n: Vec<u8> = (0..m).map(|mu| (bits >> (m - 1 - mu) & 1) as u8).collect();
        out.insert(state_label(bits, m), dispersive_shift(g_mhz, detunings_ghz, kerr, &n)?);
    }
    Ok(out)
}

impl CavityModel {
    /// `transitions_ghz` are the uncoupled single-excitation transition
    /// frequencies that set `Delta_mu0`.
    pub fn new(
        modes: &ModeSolution,
        kerr: &KerrTensor,
        transitions_ghz: &[f64],
        field_direction: Vec<f64>,
        omega_r_ghz: f64,
        g_ref_mhz: f64,
    ) -> Result<Self> {
        let norm = field_direction.iter().map(|x| x * x).sum::<f64>().sqrt();
        let field_direction: Vec<f64> = field_direction.iter().map(|x| x / norm).collect();
        let g = direct_couplings_along(modes, &field_direction, g_ref_mhz)?;
        let detunings: Vec<f64> = transitions_ghz.iter().map(|f| f - omega_r_ghz).collect();
        let mut warnings = Vec::new();
        for (mu, (&gm, &d)) in g.iter().zip(&detunings).enumerate() {
            if gm > 0.0 && d.abs() * 1e3 / gm < 10.0 {
                warnings.push(format!(
                    "mode {mu}: |detuning|/g' = {:.1} is below 10; dispersive approximation is marginal",
                    d.abs() * 1e3 / gm
                ));
            }
        }
        let chi = dispersive_shifts(&g, &detunings, kerr)?;
        Ok(CavityModel {
            omega_r_ghz,
            g_ref_mhz,
            field_direction,
            g_direct_mhz: g,
            detunings_ghz: detunings,
            chi_mhz: chi,
            warnings,
        })
    }
}

/// Inputs of the three-mode dispersive formulas, energies in GHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrimonDispersive {
    pub g: [f64; 3],
    pub delta: [f64; 3],
    pub j_self: [f64; 3],
    pub j_ab: f64,
    pub j_bc: f64,
    pub j_ca: f64,
}

/// Shifts of states 100, 010, 001, 110, 011, 101, 111 written out term by
/// term for a three-mode device with direct coupling on every mode.
pub fn trimon_seven_state_shifts(p: &TrimonDispersive) -> [f64; 7] {
    let [ga, gb, gc] = p.g.map(|g| g * g);
    let [da, db, dc] = p.delta;
    let [ja, jb, jc] = p.j_self;
    let (jab, jbc, jca) = (p.j_ab, p.j_bc, p.j_ca);
    let direct = |d: f64, j: f64| 1.0 / d - 1.0 / (d - 2.0 * j);
    let pull = direct;
    let pair = |d: f64, j_self: f64, j: f64| 1.0 / d + 1.0 / (d - 2.0 * j) - 2.0 / (d - 2.0 * j_self - 2.0 * j);
    let chi_a = ga * direct(da, ja) + gb / 2.0 * pull(db, jab) + gc / 2.0 * pull(dc, jca);
    let chi_b = ga / 2.0 * pull(da, jab) + gb * direct(db, jb) + gc / 2.0 * pull(dc, jbc);
    let chi_c = ga / 2.0 * pull(da, jca) + gb / 2.0 * pull(db, jbc) + gc * direct(dc, jc);
    let chi_ab = ga / 2.0 * pair(da, ja, jab) + gb / 2.0 * pair(db, jb, jab) + gc / 2.0 * pull(dc, jca + jbc);
    let chi_bc = ga / 2.0 * pull(da, jab + jca) + gb / 2.0 * pair(db, jb, jbc) + gc / 2.0 * pair(dc, jc, jbc);
    let chi_ca = ga / 2.0 * pair(da, ja, jca) + gb / 2.0 * pull(db, jbc + jab) + gc / 2.0 * pair(dc, jc, jca);
    let chi_abc =
        ga / 2.0 * pair(da, ja, jab + jca) + gb / 2.0 * pair(db, jb, jbc + jab) + gc / 2.0 * pair(dc, jc, jca + jbc);
    [chi_a, chi_b, chi_c, chi_ab, chi_bc, chi_ca, chi_abc]
}

/// Single-excitation shifts when only mode A couples to the cavity.
pub fn trimon_single_coupling_shifts(g_a: f64, delta_a: f64, j_a: f64, j_ab: f64, j_ca: f64) -> [f64; 3] {
    let g2 = g_a * g_a;
    [
        g2 * (1.0 / delta_a - 1.0 / (delta_a - 2.0 * j_a)),
        g2 / 2.0 * (1.0 / delta_a - 1.0 / (delta_a - 2.0 * j_ab)),
        g2 / 2.0 * (1.0 / delta_a - 1.0 / (delta_a - 2.0 * j_ca)),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReadoutConfig {
    /// Cavity linewidth in MHz.
    pub kappa_mhz: f64,
    /// Probe frequency minus the bare cavity frequency, MHz.
    pub drive_detuning_mhz: f64,
    /// Gaussian noise on each single-shot response.
    pub sigma: f64,
    pub shots: usize,
    /// `(low, high)` demarcation lines; `None` places them halfway between
    /// the 000 and 111 responses and their nearest neighbours.
    pub demarcations: Option<(f64, f64)>,
    pub seed: u64,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        ReadoutConfig {
            kappa_mhz: 1.0,
            drive_detuning_mhz: 0.0,
            sigma: 0.02,
            shots: 10_000,
            demarcations: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateHistogram {
    pub state: String,
    pub label_mean: f64,
    pub sigma: f64,
    pub count_below: usize,
    pub count_between: usize,
    pub count_above: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReadoutReport {
    pub demarcations: (f64, f64),
    pub histograms: Vec<StateHistogram>,
    /// Fraction of 000 shots assigned to 111 plus 111 shots assigned to 000,
    /// halved.
    pub misassignment_000_111: f64,
}

pub const HISTOGRAM_HEADER: &str = "state,label_mean,sigma,count_below,count_between,count_above";

impl ReadoutReport {
    pub fn csv(&self) -> String {
        let mut s = format!("{HISTOGRAM_HEADER}\n");
        for h in &self.histograms {
            s.push_str(&format!(
                "{},{:.9},{:.9},{},{},{}\n",
                h.state, h.label_mean, h.sigma, h.count_below, h.count_between, h.count_above
            ));
        }
        s
    }
}

/// Mean transmitted response for a state with dispersive shift `chi`:
/// `Re[kappa / (kappa + 2i (delta - 2 chi))]`.
pub fn response_mean(chi_mhz: f64, config: &ReadoutConfig) -> f64 {
    let x = 2.0 * (config.drive_detuning_mhz - 2.0 * chi_mhz) / config.kappa_mhz;
    1.0 / (1.0 + x * x)
}

/// Probability of confusing two states with a midpoint threshold under the
/// configured noise.
pub fn pairwise_confusion(chi_a_mhz: f64, chi_b_mhz: f64, config: &ReadoutConfig) -> f64 {
    let gap = (response_mean(chi_a_mhz, config) - response_mean(chi_b_mhz, config)).abs();
    if config.sigma == 0.0 {
        return if gap == 0.0 { 0.5 } else { 0.0 };
    }
    0.5 * erfc(gap / (2.0 * config.sigma) / std::f64::consts::SQRT_2)
}

/// Complementary error function (Numerical Recipes rational fit, 1.2e-7).
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let poly = -z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07
                            + t * (-1.135_203_98 + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77))))))));
    let r = t * poly.exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

pub fn readout_histograms(chi_mhz: &BTreeMap<String, f64>, config: &ReadoutConfig) -> Result<ReadoutReport> {
    if !(config.kappa_mhz > 0.0) || config.sigma < 0.0 {
        return Err(Error::config("readout needs kappa > 0 and sigma >= 0"));
    }
    let width = chi_mhz.keys().next().map(|k| k.len()).unwrap_or(0);
    let ground = "0".repeat(width);
    let top = "1".repeat(width);
    let means: BTreeMap<&String, f64> = chi_mhz.iter().map(|(k, &c)| (k, response_mean(c, config))).collect();
    let mean_of = |label: &str| {
        means
            .iter()
            .find(|(k, _)| k.as_str() == label)
            .map(|(_, &v)| v)
            .ok_or_else(|| Error::config(format!("no shift for state {label}")))
    };
    let (m0, m1) = (mean_of(&ground)?, mean_of(&top)?);
    let demarcations = match config.demarcations {
        Some((lo, hi)) if lo <= hi => (lo, hi),
        Some(_) => return Err(Error::Domain("demarcation lines must satisfy low <= high".into())),
        None => {
            let nearest = |target: f64, own: &str| {
                means
                    .iter()
                    .filter(|(k, _)| k.as_str() != own)
                    .map(|(_, &v)| v)
                    .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
                    .unwrap_or(target)
            };
            let a = 0.5 * (m0 + nearest(m0, &ground));
            let b = 0.5 * (m1 + nearest(m1, &top));
            (a.min(b), a.max(b))
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut histograms = Vec::new();
    for (label, &mean) in &means {
        let (mut below, mut between, mut above) = (0, 0, 0);
        let noise = Normal::new(0.0, config.sigma.max(f64::MIN_POSITIVE)).expect("finite sigma");
        for _ in 0..config.shots {
            let x = mean + if config.sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            if x < demarcations.0 {
                below += 1;
            } else if x > demarcations.1 {
                above += 1;
            } else {
                between += 1;
            }
        }
        histograms.push(StateHistogram {
            state: (*label).clone(),
            label_mean: mean,
            sigma: config.sigma,
            count_below: below,
            count_between: between,
            count_above: above,
        });
    }
    // 000 sits on whichever side its mean lies relative to 111.
    let ground_low = m0 <= m1;
    let get = |label: &str| histograms.iter().find(|h| h.state == label).expect("state present");
    let shots = config.shots.max(1) as f64;
    let (h0, h1) = (get(&ground), get(&top));
    let wrong = if ground_low {
        h0.count_above as f64 + h1.count_below as f64
    } else {
        h0.count_below as f64 + h1.count_above as f64
    };
    Ok(ReadoutReport { demarcations, histograms, misassignment_000_111: wrong / (2.0 * shots) })
}
