//! Synthetic GWAS files built from one simulated replicate.
//!
//! The model SNPs carry the replicate's summary statistics. Around them the
//! files contain SNPs the pipeline must discard: LD tags with larger
//! standard errors, palindromic SNPs and exposure-only SNPs. Some outcome
//! rows report swapped alleles or the opposite strand, so harmonizing and
//! pruning should recover exactly the model SNPs.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{draw_replicate, SimConfig, TrueEffects};
use crate::error::Result;
use crate::estimators::SnpId;
use crate::gauss::two_sided_pvalue;
use crate::gwas_io::{Allele, SummaryRecord};
use crate::rng::{stream, Role};

const TAG_EVERY: usize = 50;
const PALINDROME_EVERY: usize = 97;
const EXPOSURE_ONLY_EVERY: usize = 89;
const TAG_R2: f64 = 0.8;

const ALLELE_PAIRS: [(Allele, Allele); 8] = [
    (Allele::A, Allele::C),
    (Allele::A, Allele::G),
    (Allele::C, Allele::A),
    (Allele::C, Allele::T),
    (Allele::G, Allele::A),
    (Allele::G, Allele::T),
    (Allele::T, Allele::C),
    (Allele::T, Allele::G),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub exposure: Vec<SummaryRecord>,
    pub outcome: Vec<SummaryRecord>,
    pub ld: Vec<(SnpId, SnpId, f64)>,
    pub truth: TrueEffects,
    /// Identifiers of the model SNPs, in model order.
    pub model_ids: Vec<SnpId>,
}

fn record(id: &str, chrom: usize, pos: u64, alleles: (Allele, Allele), beta: f64, se: f64, n: u64) -> SummaryRecord {
    SummaryRecord {
        snp_id: SnpId::new(id),
        chrom: chrom.to_string(),
        pos,
        effect_allele: alleles.0,
        other_allele: alleles.1,
        beta,
        se,
        eaf: None,
        pvalue: Some(two_sided_pvalue(beta / se)),
        n: Some(n),
    }
}

/// Re-expresses an outcome record as another file might: with swapped
/// alleles (negating beta) and/or on the opposite strand.
fn restate(mut r: SummaryRecord, swap: bool, strand: bool) -> SummaryRecord {
    if swap {
        std::mem::swap(&mut r.effect_allele, &mut r.other_allele);
        r.beta = -r.beta;
    }
    if strand {
        r.effect_allele = r.effect_allele.complement();
        r.other_allele = r.other_allele.complement();
    }
    r
}

pub fn build_fixture(cfg: &SimConfig, replicate: u64) -> Result<Fixture> {
    cfg.validate()?;
    let (truth, draw) = draw_replicate(cfg, replicate)?;
    let mut rng = stream(cfg.seed, replicate, Role::Decoys);
    let (sx, sy) = (draw.sigma_x, draw.sigma_y);
    let mut exposure = Vec::new();
    let mut outcome = Vec::new();
    let mut ld = Vec::new();
    let mut model_ids = Vec::with_capacity(cfg.p);
    for j in 0..cfg.p {
        let id = format!("rs{}", j + 1);
        let chrom = j % 22 + 1;
        let pos = 10_000 * (j / 22 + 1) as u64;
        let alleles = ALLELE_PAIRS[(j * 5 + j / 8) % ALLELE_PAIRS.len()];
        exposure.push(record(&id, chrom, pos, alleles, draw.gamma_hat[j], sx, cfg.n_x));
        let out = record(&id, chrom, pos, alleles, draw.gamma_y_hat[j], sy, cfg.n_y);
        outcome.push(restate(out, j % 3 == 1, j % 7 == 3));
        model_ids.push(SnpId::new(&id));

        if j % TAG_EVERY == 0 {
            let tag = format!("{id}_t");
            let (tsx, tsy) = (sx * 1.05, sy * 1.05);
            let gx = truth.gamma[j] + tsx * rng.sample::<f64, _>(StandardNormal);
            let gy = truth.gamma_y[j] + tsy * rng.sample::<f64, _>(StandardNormal);
            exposure.push(record(&tag, chrom, pos + 1, alleles, gx, tsx, cfg.n_x));
            outcome.push(record(&tag, chrom, pos + 1, alleles, gy, tsy, cfg.n_y));
            ld.push((SnpId::new(&id), SnpId::new(&tag), TAG_R2));
        }
        if j % PALINDROME_EVERY == 0 {
            let pal = format!("{id}_p");
            let gx = sx * rng.sample::<f64, _>(StandardNormal);
            let gy = sy * rng.sample::<f64, _>(StandardNormal);
            exposure.push(record(&pal, chrom, pos + 2, (Allele::A, Allele::T), gx, sx, cfg.n_x));
            outcome.push(record(&pal, chrom, pos + 2, (Allele::A, Allele::T), gy, sy, cfg.n_y));
        }
        if j % EXPOSURE_ONLY_EVERY == 0 {
            let gx = sx * rng.sample::<f64, _>(StandardNormal);
            exposure.push(record(&format!("{id}_x"), chrom, pos + 3, alleles, gx, sx, cfg.n_x));
        }
    }
    outcome.reverse();
    Ok(Fixture {
        exposure,
        outcome,
        ld,
        truth,
        model_ids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::Method;
    use crate::gwas_io::{harmonize, sigma_prune, LdInfo, DEFAULT_R2_THRESHOLD};
    use crate::simulate::{MethodSpec, PleiotropyLaw};

    fn cfg() -> SimConfig {
        SimConfig {
            p: 2000,
            pi_x: 0.05,
            pi_y: 0.05,
            rho: 1.0,
            eps_x2: 1e-4,
            tau2: 1e-4,
            beta: 1.0,
            n_x: 100_000,
            n_y: 100_000,
            n_reps: 1,
            seed: 3,
            methods: vec![MethodSpec::new(Method::Rivw)],
            pleiotropy: PleiotropyLaw::Normal,
            alpha: 0.05,
        }
    }

    #[test]
    fn harmonize_and_prune_recover_the_model_snps() {
        let c = cfg();
        let f = build_fixture(&c, 0).unwrap();
        let (pairs, report) = harmonize(&f.exposure, &f.outcome).unwrap();
        assert!(report.allele_swapped > 0 && report.strand_flipped > 0);
        assert!(report.dropped.iter().any(|r| r.reason == "palindromic"));
        assert!(report.dropped.iter().any(|r| r.reason == "absent from outcome"));
        let mut ld = LdInfo::new();
        for (a, b, r2) in &f.ld {
            ld.insert(a.clone(), b.clone(), *r2).unwrap();
        }
        let kept_ids: std::collections::HashSet<_> = pairs.iter().map(|p| p.snp_id.clone()).collect();
        let harmonized: Vec<_> = f
            .exposure
            .iter()
            .filter(|r| kept_ids.contains(&r.snp_id))
            .cloned()
            .collect();
        let mut retained = sigma_prune(&harmonized, &ld, DEFAULT_R2_THRESHOLD).unwrap();
        retained.sort();
        let mut expect = f.model_ids.clone();
        expect.sort();
        assert_eq!(retained, expect);

        let (_, draw) = draw_replicate(&c, 0).unwrap();
        for p in pairs.iter().filter(|p| !p.snp_id.as_str().contains('_')) {
            let j: usize = p.snp_id.as_str()[2..].parse::<usize>().unwrap() - 1;
            assert_eq!(p.gamma_x, draw.gamma_hat[j]);
            assert_eq!(p.gamma_y, draw.gamma_y_hat[j]);
        }
    }

    #[test]
    fn fixture_is_reproducible() {
        assert_eq!(build_fixture(&cfg(), 1).unwrap(), build_fixture(&cfg(), 1).unwrap());
    }
}
