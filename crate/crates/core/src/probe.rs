//! Measurements of the five equivalent conditions for full hieromorphisms
//! with hierarchically quasiconvex image, and of the bounds that follow from them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audit::audit_axioms;
use crate::hiero::{verify_fullness, verify_index_map};
use crate::model::HHSModel;
use crate::regions::{constants_of, gate_unchecked, hq_check, HqReport, Hieromorphism};
use crate::report::Violation;
use crate::space::{coarse_map_constants, CoarseConstants, FiniteSpace};

#[derive(Debug, Clone, thiserror::Error)]
pub enum ProbeError {
    #[error("index map is not a full hieromorphism: {0:?}")]
    NotFull(Vec<Violation>),
    #[error("image is not hierarchically quasiconvex: {0:?}")]
    NotHQC(Box<HqReport>),
}

/// `κ` used when reading the pullback uniqueness table.
pub const PULLBACK_KAPPA: u32 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub source: String,
    pub target: String,
    pub image_size: usize,
    pub image_hq: HqReport,
    pub map_constants: CoarseConstants,
    /// Condition (1): smallest `K` with `d' ≤ K d + K`.
    pub c1_lipschitz: f64,
    /// Condition (2): smallest `K` making the map a `(K,K)` quasi-isometric embedding.
    pub c2_qi: f64,
    /// Condition (3): largest displacement of the two gate round trips.
    pub c3_gate_defect: u32,
    /// Condition (4): verdict of the pulled back structure on the image with the subspace metric.
    pub c4_pullback_pass: bool,
    pub c4_theta: u32,
    /// Condition (5): largest `diam π_W(φ(X))` over `W` outside the image of the index map.
    pub c5_outside_diam: u32,
    pub c5_witness: Option<String>,
    pub image_element: String,
    /// Size of the parallel copy of `F_{S'}` used.
    pub f_size: usize,
    pub eta_distance: u32,
    pub eta: u32,
    pub eta_ok: bool,
    /// Hausdorff distance between `ρ_U^{S'}` and `π_U(φ(X))` for `U ⊋ S'` or `U ⋔ S'`.
    pub rho_coincidence: Vec<(String, u32)>,
    pub rho_bound: u32,
    pub rho_ok: bool,
    pub hausdorff_image_f: u32,
}

impl ProbeReport {
    pub fn rho_max(&self) -> u32 {
        self.rho_coincidence.iter().map(|r| r.1).max().unwrap_or(0)
    }
}

fn pullback(src: &HHSModel, tgt: &HHSModel, phi: &Hieromorphism) -> HHSModel {
    let n = src.n_points();
    let dist = (0..n)
        .map(|x| (0..n).map(|y| tgt.space.set_dist(phi.space_map.image(x), phi.space_map.image(y))).collect())
        .collect();
    let space = FiniteSpace::from_metric(src.space.labels().to_vec(), dist).expect("subspace metric of an embedding");
    HHSModel { name: format!("pullback of {}", src.name), space, constants: None, ..src.clone() }
}

/// Runs every measurement; only fullness and quasiconvexity of the image are hard preconditions.
pub fn theorem_b_probe(src: &HHSModel, tgt: &HHSModel, phi: &Hieromorphism) -> Result<ProbeReport, ProbeError> {
    let mut v = verify_index_map(&phi.index, &src.lattice, &tgt.lattice);
    v.extend(verify_fullness(&phi.index, &src.lattice, &tgt.lattice));
    if !v.is_ok() {
        return Err(ProbeError::NotFull(v.violations));
    }
    let image = phi.image();
    let image_hq = hq_check(tgt, &image);
    if !image_hq.pass {
        return Err(ProbeError::NotHQC(Box::new(image_hq)));
    }
    let l = &tgt.lattice;
    let k = l.len();
    let s_prime = phi.index.apply(src.lattice.maximal());

    let map_constants = coarse_map_constants(&phi.space_map, &src.space, &tgt.space);

    let in_image: Vec<bool> = {
        let mut b = vec![false; k];
        for u in 0..src.n_elements() {
            b[phi.index.apply(u)] = true;
        }
        b
    };
    let (c5_outside_diam, c5_witness) = (0..k)
        .filter(|&w| !in_image[w])
        .map(|w| (tgt.hyp[w].diam(&tgt.pi_set(w, &image)), w))
        .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
        .map(|(d, w)| (d, Some(l.id(w).to_string())))
        .unwrap_or((0, None));

    // F_{S'} through the orthogonal coordinates of φ(x0)
    let tc = constants_of(tgt);
    let kappa_p = tc.kappa0.max(tc.alpha_pr);
    let x0 = phi.space_map.image(0)[0];
    let pinned: Vec<usize> = (0..k).filter(|&w| l.properly_nested(s_prime, w) || l.transverse(s_prime, w)).collect();
    let orth: Vec<usize> = (0..k).filter(|&w| l.orth(s_prime, w)).collect();
    let f: Vec<usize> = (0..tgt.n_points())
        .filter(|&x| {
            pinned.iter().all(|&w| tgt.hyp[w].set_dist(tgt.pi(w, x), tgt.rho_set(w, s_prime).unwrap()) <= kappa_p)
                && orth.iter().all(|&w| tgt.pi(w, x) == tgt.pi(w, x0))
        })
        .collect();

    let c3_gate_defect = if f.is_empty() {
        u32::MAX
    } else {
        let a = f
            .par_iter()
            .map(|&z| tgt.space.d(z, gate_unchecked(tgt, &f, gate_unchecked(tgt, &image, z))))
            .max()
            .unwrap_or(0);
        let b = image
            .par_iter()
            .map(|&y| tgt.space.d(y, gate_unchecked(tgt, &image, gate_unchecked(tgt, &f, y))))
            .max()
            .unwrap_or(0);
        a.max(b)
    };

    let pb = audit_axioms(&pullback(src, tgt, phi));
    let c4_theta = pb.constants.theta(PULLBACK_KAPPA);

    let eta_distance = if f.is_empty() { u32::MAX } else { tgt.space.set_dist(&f, &image) };
    let kappa = (2 * tc.kappa0).max(2 * tc.e_bgi).max(tc.e_bgi + c5_outside_diam) + 1;
    let eta = image_hq.k(3 * kappa);

    let rho_coincidence: Vec<(String, u32)> = pinned
        .iter()
        .map(|&u| {
            let r = tgt.rho_set(u, s_prime).unwrap();
            (l.id(u).to_string(), tgt.hyp[u].hausdorff(r, &tgt.pi_set(u, &image)))
        })
        .collect();
    let lip = tc.proj_lip.ceil() as u32;
    let rho_bound = lip * eta + lip + c5_outside_diam + tc.xi;
    let rho_ok = rho_coincidence.iter().all(|r| r.1 <= rho_bound);
    let hausdorff_image_f = if f.is_empty() { u32::MAX } else { tgt.space.hausdorff(&image, &f) };

    Ok(ProbeReport {
        source: src.name.clone(),
        target: tgt.name.clone(),
        image_size: image.len(),
        image_hq,
        c1_lipschitz: map_constants.kk,
        c2_qi: map_constants.qi,
        map_constants,
        c3_gate_defect,
        c4_pullback_pass: pb.pass(),
        c4_theta,
        c5_outside_diam,
        c5_witness,
        image_element: l.id(s_prime).to_string(),
        f_size: f.len(),
        eta_distance,
        eta,
        eta_ok: eta_distance <= eta,
        rho_coincidence,
        rho_bound,
        rho_ok,
        hausdorff_image_f,
    })
}
