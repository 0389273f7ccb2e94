use serde::{Deserialize, Serialize};

use super::arch::ArchConfig;
use super::features::{encode_party, PartyFeatures};
use super::network::{PolicyNetwork, SampleTrace};
use crate::content::ContentPack;
use crate::error::Result;
use crate::sim::{stream_seed, RngStream};
use crate::training::{apply_hp_variation, generate_party, HpVariationConfig};

pub const FD_STEP: f64 = 1e-6;
/// Denominator floor of the relative error, so near-zero gradients are
/// compared in absolute terms.
pub const REL_FLOOR: f64 = 1e-3;

/// Central difference of the replayed log-probability along every listed
/// coordinate.
pub fn finite_difference(
    net: &PolicyNetwork<f64>,
    f: &PartyFeatures,
    trace: &SampleTrace,
    coords: &[usize],
    h: f64,
) -> Result<Vec<f64>> {
    let mut probe = net.clone();
    coords
        .iter()
        .map(|&i| {
            let orig = probe.params()[i];
            probe.params_mut()[i] = orig + h;
            let up = probe.log_prob(f, trace)?;
            probe.params_mut()[i] = orig - h;
            let down = probe.log_prob(f, trace)?;
            probe.params_mut()[i] = orig;
            Ok((up - down) / (2.0 * h))
        })
        .collect()
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub cases: usize,
    pub coordinates: usize,
    pub max_relative_error: f64,
    pub worst_parameter: usize,
}

/// Coordinates to probe: a seeded sample from every parameter block plus
/// the largest analytic entries.
fn probe_coords(net: &PolicyNetwork<f64>, grad: &[f64], per_block: usize, rng: &mut RngStream) -> Vec<usize> {
    let l = net.layout();
    let blocks = [
        l.numeric_w,
        l.numeric_b,
        l.class_embed,
        l.saves_w,
        l.resistances_w,
        l.spells_w,
        l.specials_w,
        l.member_w,
        l.member_b,
        l.synergy_w,
        l.synergy_b,
        l.synergy_dense_w,
        l.synergy_dense_b,
        l.out_w,
        l.out_b,
    ];
    let mut coords = Vec::new();
    for b in blocks {
        if b.is_empty() {
            continue;
        }
        for _ in 0..per_block.min(b.len()) {
            coords.push(b.offset + rng.below(b.len() as u32) as usize);
        }
    }
    let mut by_size: Vec<usize> = (0..grad.len()).collect();
    by_size.sort_by(|&a, &b| grad[b].abs().total_cmp(&grad[a].abs()).then(a.cmp(&b)));
    coords.extend(by_size.into_iter().take(per_block));
    coords.sort_unstable();
    coords.dedup();
    coords
}

/// Analytic log-probability gradients against central differences on
/// `nets` random wide-precision networks, each probed with `inputs` sampled
/// parties and traces.
pub fn gradcheck(pack: &ContentPack, nets: usize, inputs: usize, per_block: usize, seed: u64) -> Result<GradcheckReport> {
    let arch = ArchConfig::for_pack(pack);
    let hp = HpVariationConfig::default();
    let mut report = GradcheckReport {
        cases: 0,
        coordinates: 0,
        max_relative_error: 0.0,
        worst_parameter: 0,
    };
    for n in 0..nets as u64 {
        let net = PolicyNetwork::<f64>::random(arch.clone(), stream_seed(seed, "gradcheck-net", n));
        for k in 0..inputs as u64 {
            let mut rng = RngStream::new(stream_seed(seed, "gradcheck-input", n * 1000 + k));
            let party = apply_hp_variation(&generate_party(pack, &mut rng), &hp, &mut rng);
            let f = encode_party(&party, pack, &arch)?;
            let (trace, _) = net.sample(&f, &mut rng)?;
            let grad = net.log_prob_gradient(&f, &trace)?;
            let coords = probe_coords(&net, &grad, per_block, &mut rng);
            let fd = finite_difference(&net, &f, &trace, &coords, FD_STEP)?;
            for (&i, &numeric) in coords.iter().zip(&fd) {
                let e = relative_error(grad[i], numeric);
                if e > report.max_relative_error {
                    report.max_relative_error = e;
                    report.worst_parameter = i;
                }
            }
            report.cases += 1;
            report.coordinates += coords.len();
        }
    }
    Ok(report)
}
