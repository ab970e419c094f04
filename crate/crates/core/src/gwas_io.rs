//! GWAS summary-statistics ingestion, allele harmonization and sigma-based
//! LD pruning.
//!
//! Input files are tab-separated with a header row. Lines starting with `#`
//! before the header are treated as comments. `NA` (or an empty field) marks
//! a missing optional value.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{InstrumentPair, SnpId};

/// Default LD pruning threshold on r².
pub const DEFAULT_R2_THRESHOLD: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Allele {
    A,
    C,
    G,
    T,
}

impl Allele {
    pub fn complement(self) -> Allele {
        match self {
            Allele::A => Allele::T,
            Allele::T => Allele::A,
            Allele::C => Allele::G,
            Allele::G => Allele::C,
        }
    }
}

impl FromStr for Allele {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "A" | "a" => Ok(Allele::A),
            "C" | "c" => Ok(Allele::C),
            "G" | "g" => Ok(Allele::G),
            "T" | "t" => Ok(Allele::T),
            other => Err(format!("invalid allele {other:?}")),
        }
    }
}

impl fmt::Display for Allele {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Allele::A => "A",
            Allele::C => "C",
            Allele::G => "G",
            Allele::T => "T",
        };
        f.write_str(s)
    }
}

/// A/T and C/G SNPs cannot be strand-resolved from alleles alone.
pub fn is_palindromic(a: Allele, b: Allele) -> bool {
    a.complement() == b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub snp_id: SnpId,
    pub chrom: String,
    pub pos: u64,
    pub effect_allele: Allele,
    pub other_allele: Allele,
    pub beta: f64,
    pub se: f64,
    pub eaf: Option<f64>,
    pub pvalue: Option<f64>,
    pub n: Option<u64>,
}

/// Chromosome sort key: numbered autosomes first in numeric order, then
/// everything else by name.
fn chrom_key(chrom: &str) -> (u8, u64, &str) {
    let bare = chrom.strip_prefix("chr").unwrap_or(chrom);
    match bare.parse::<u64>() {
        Ok(n) => (0, n, ""),
        Err(_) => (1, 0, bare),
    }
}

/// Canonical genomic order: chromosome, position, then SNP identifier.
pub fn genomic_order(a: &SummaryRecord, b: &SummaryRecord) -> Ordering {
    chrom_key(&a.chrom)
        .cmp(&chrom_key(&b.chrom))
        .then(a.pos.cmp(&b.pos))
        .then_with(|| a.snp_id.cmp(&b.snp_id))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    SnpId,
    Chrom,
    Pos,
    EffectAllele,
    OtherAllele,
    Beta,
    Se,
    Eaf,
    Pvalue,
    N,
}

impl Column {
    pub const ALL: [Column; 10] = [
        Column::SnpId,
        Column::Chrom,
        Column::Pos,
        Column::EffectAllele,
        Column::OtherAllele,
        Column::Beta,
        Column::Se,
        Column::Eaf,
        Column::Pvalue,
        Column::N,
    ];

    pub fn canonical(self) -> &'static str {
        match self {
            Column::SnpId => "snp_id",
            Column::Chrom => "chrom",
            Column::Pos => "pos",
            Column::EffectAllele => "effect_allele",
            Column::OtherAllele => "other_allele",
            Column::Beta => "beta",
            Column::Se => "se",
            Column::Eaf => "eaf",
            Column::Pvalue => "pvalue",
            Column::N => "n",
        }
    }

    pub fn required(self) -> bool {
        !matches!(self, Column::Eaf | Column::Pvalue | Column::N)
    }
}

/// Header aliases per column, matched case-insensitively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormatSpec {
    pub aliases: BTreeMap<Column, Vec<String>>,
}

impl Default for FormatSpec {
    fn default() -> Self {
        let table: [(Column, &[&str]); 10] = [
            (Column::SnpId, &["snp_id", "snp", "rsid", "id", "markername"]),
            (Column::Chrom, &["chrom", "chr", "chromosome"]),
            (Column::Pos, &["pos", "bp", "position"]),
            (Column::EffectAllele, &["effect_allele", "ea", "a1", "alt"]),
            (Column::OtherAllele, &["other_allele", "nea", "a2", "ref"]),
            (Column::Beta, &["beta", "b", "effect"]),
            (Column::Se, &["se", "stderr", "standard_error"]),
            (Column::Eaf, &["eaf", "frq", "af", "freq"]),
            (Column::Pvalue, &["pvalue", "p", "pval", "p_value"]),
            (Column::N, &["n", "samplesize", "n_total"]),
        ];
        FormatSpec {
            aliases: table
                .into_iter()
                .map(|(c, names)| (c, names.iter().map(|s| s.to_string()).collect()))
                .collect(),
        }
    }
}

impl FormatSpec {
    pub fn with_alias(mut self, column: Column, name: &str) -> Self {
        self.aliases.entry(column).or_default().push(name.to_ascii_lowercase());
        self
    }

    fn resolve(&self, header: &[&str], path: &Path) -> Result<HashMap<Column, usize>> {
        let mut found = HashMap::new();
        for (i, name) in header.iter().enumerate() {
            let name = name.trim().to_ascii_lowercase();
            for (col, names) in &self.aliases {
                if names.iter().any(|n| n.eq_ignore_ascii_case(&name)) {
                    if let Some(prev) = found.insert(*col, i) {
                        return Err(Error::format(
                            path,
                            format!("columns {} and {} both map to {}", prev + 1, i + 1, col.canonical()),
                        ));
                    }
                }
            }
        }
        for col in Column::ALL.into_iter().filter(|c| c.required()) {
            if !found.contains_key(&col) {
                return Err(Error::format(
                    path,
                    format!("missing required column {}", col.canonical()),
                ));
            }
        }
        Ok(found)
    }
}

/// A row or SNP left out, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub snp_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SummaryTable {
    pub records: Vec<SummaryRecord>,
    pub rejects: Vec<Reject>,
}

fn is_missing(field: &str) -> bool {
    let f = field.trim();
    f.is_empty() || f.eq_ignore_ascii_case("na")
}

fn parse_row(fields: &[&str], cols: &HashMap<Column, usize>) -> std::result::Result<SummaryRecord, String> {
    let get = |c: Column| cols.get(&c).map(|&i| fields[i].trim());
    let required = |c: Column| {
        let v = get(c).unwrap_or("");
        if is_missing(v) {
            Err(format!("missing {}", c.canonical()))
        } else {
            Ok(v)
        }
    };
    let number = |c: Column| -> std::result::Result<f64, String> {
        let v = required(c)?;
        let x: f64 = v.parse().map_err(|_| format!("invalid {} {v:?}", c.canonical()))?;
        if x.is_finite() {
            Ok(x)
        } else {
            Err(format!("non-finite {}", c.canonical()))
        }
    };
    let optional_prob = |c: Column| -> std::result::Result<Option<f64>, String> {
        match get(c) {
            None => Ok(None),
            Some(v) if is_missing(v) => Ok(None),
            Some(v) => {
                let x: f64 = v.parse().map_err(|_| format!("invalid {} {v:?}", c.canonical()))?;
                if (0.0..=1.0).contains(&x) {
                    Ok(Some(x))
                } else {
                    Err(format!("{} outside [0, 1]", c.canonical()))
                }
            }
        }
    };

    let snp_id = SnpId::new(required(Column::SnpId)?);
    let chrom = required(Column::Chrom)?.to_string();
    let pos_text = required(Column::Pos)?;
    let pos: u64 = pos_text.parse().map_err(|_| format!("invalid pos {pos_text:?}"))?;
    let effect_allele: Allele = required(Column::EffectAllele)?.parse()?;
    let other_allele: Allele = required(Column::OtherAllele)?.parse()?;
    if effect_allele == other_allele {
        return Err("identical alleles".into());
    }
    let beta = number(Column::Beta)?;
    let se = number(Column::Se)?;
    if se <= 0.0 {
        return Err("nonpositive SE".into());
    }
    let eaf = optional_prob(Column::Eaf)?;
    let pvalue = optional_prob(Column::Pvalue)?;
    let n = match get(Column::N) {
        None => None,
        Some(v) if is_missing(v) => None,
        Some(v) => Some(
            v.parse::<f64>()
                .ok()
                .filter(|x| *x >= 0.0 && x.fract() == 0.0)
                .ok_or_else(|| format!("invalid n {v:?}"))? as u64,
        ),
    };
    Ok(SummaryRecord {
        snp_id,
        chrom,
        pos,
        effect_allele,
        other_allele,
        beta,
        se,
        eaf,
        pvalue,
        n,
    })
}

/// Parses summary statistics from any reader; `path` only labels errors.
pub fn parse_summary<R: BufRead>(reader: R, path: &Path, spec: &FormatSpec) -> Result<SummaryTable> {
    let mut lines = reader.lines().enumerate();
    let header = loop {
        match lines.next() {
            None => return Err(Error::format(path, "no header row")),
            Some((_, line)) => {
                let line = line.map_err(|e| Error::io(path, e))?;
                if !line.starts_with('#') && !line.trim().is_empty() {
                    break line;
                }
            }
        }
    };
    let header_fields: Vec<&str> = header.split('\t').collect();
    let cols = spec.resolve(&header_fields, path)?;
    let width = header_fields.len();
    let id_col = cols[&Column::SnpId];

    let mut table = SummaryTable::default();
    let mut seen = HashSet::new();
    for (i, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let label = fields
            .get(id_col)
            .map(|s| s.trim().to_string())
            .unwrap_or_else(|| format!("line {}", i + 1));
        if fields.len() != width {
            table.rejects.push(Reject {
                snp_id: label,
                reason: format!("expected {width} fields, found {}", fields.len()),
            });
            continue;
        }
        match parse_row(&fields, &cols) {
            Ok(rec) => {
                if seen.insert(rec.snp_id.clone()) {
                    table.records.push(rec);
                } else {
                    table.rejects.push(Reject {
                        snp_id: label,
                        reason: "duplicate snp_id".into(),
                    });
                }
            }
            Err(reason) => table.rejects.push(Reject { snp_id: label, reason }),
        }
    }
    Ok(table)
}

pub fn read_summary(path: &Path, spec: &FormatSpec) -> Result<SummaryTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_summary(BufReader::new(file), path, spec)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| format!("{v:e}"))
}

/// Writes records in canonical column order. `preamble` lines are emitted
/// first, each prefixed with `#`.
pub fn write_summary(path: &Path, records: &[SummaryRecord], preamble: &[String]) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for line in preamble {
        writeln!(w, "# {line}").map_err(io)?;
    }
    let header: Vec<&str> = Column::ALL.iter().map(|c| c.canonical()).collect();
    writeln!(w, "{}", header.join("\t")).map_err(io)?;
    for r in records {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{:e}\t{:e}\t{}\t{}\t{}",
            r.snp_id,
            r.chrom,
            r.pos,
            r.effect_allele,
            r.other_allele,
            r.beta,
            r.se,
            fmt_opt(r.eaf),
            fmt_opt(r.pvalue),
            r.n.map_or_else(|| "NA".to_string(), |n| n.to_string()),
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_rejects(path: &Path, rejects: &[Reject], preamble: &[String]) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for line in preamble {
        writeln!(w, "# {line}").map_err(io)?;
    }
    writeln!(w, "snp_id\treason").map_err(io)?;
    for r in rejects {
        writeln!(w, "{}\t{}", r.snp_id, r.reason).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HarmonizeReport {
    /// SNPs in both files and kept.
    pub kept: usize,
    /// Kept SNPs whose outcome alleles were swapped, so the outcome beta was negated.
    pub allele_swapped: usize,
    /// Kept SNPs reported on the opposite strand in the outcome file.
    pub strand_flipped: usize,
    pub dropped: Vec<Reject>,
}

/// Aligns outcome associations to the exposure effect allele.
///
/// Output follows the exposure file order. Palindromic SNPs are dropped, as
/// are SNPs absent from the outcome file or whose alleles cannot be matched
/// on either strand.
pub fn harmonize(
    exposure: &[SummaryRecord],
    outcome: &[SummaryRecord],
) -> Result<(Vec<InstrumentPair>, HarmonizeReport)> {
    let by_id: HashMap<&SnpId, &SummaryRecord> = outcome.iter().map(|r| (&r.snp_id, r)).collect();
    let mut report = HarmonizeReport::default();
    let mut pairs = Vec::new();
    let mut dropped = Vec::new();
    for e in exposure {
        let Some(o) = by_id.get(&e.snp_id) else {
            dropped.push(reject(&e.snp_id, "absent from outcome"));
            continue;
        };
        if is_palindromic(e.effect_allele, e.other_allele) {
            dropped.push(reject(&e.snp_id, "palindromic"));
            continue;
        }
        let (ea, oa) = (e.effect_allele, e.other_allele);
        let (sign, strand) = if (o.effect_allele, o.other_allele) == (ea, oa) {
            (1.0, false)
        } else if (o.effect_allele, o.other_allele) == (oa, ea) {
            (-1.0, false)
        } else if (o.effect_allele.complement(), o.other_allele.complement()) == (ea, oa) {
            (1.0, true)
        } else if (o.effect_allele.complement(), o.other_allele.complement()) == (oa, ea) {
            (-1.0, true)
        } else {
            dropped.push(reject(&e.snp_id, "allele mismatch"));
            continue;
        };
        if sign < 0.0 {
            report.allele_swapped += 1;
        }
        if strand {
            report.strand_flipped += 1;
        }
        pairs.push(InstrumentPair {
            snp_id: e.snp_id.clone(),
            gamma_x: e.beta,
            sigma_x: e.se,
            gamma_y: sign * o.beta,
            sigma_y: o.se,
        });
    }
    report.kept = pairs.len();
    report.dropped = dropped;
    if pairs.is_empty() {
        return Err(Error::Pipeline(
            "no SNPs left after harmonizing exposure and outcome".into(),
        ));
    }
    Ok((pairs, report))
}

fn reject(id: &SnpId, reason: &str) -> Reject {
    Reject {
        snp_id: id.to_string(),
        reason: reason.to_string(),
    }
}

/// Pairwise LD, stored symmetrically. SNP pairs that are not listed are
/// treated as independent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LdInfo {
    neighbours: HashMap<SnpId, Vec<(SnpId, f64)>>,
}

impl LdInfo {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an `r2` entry; self-pairs are ignored.
    pub fn insert(&mut self, a: SnpId, b: SnpId, r2: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&r2) {
            return Err(Error::Domain(format!(
                "r2 between {a} and {b} must lie in [0, 1], got {r2}"
            )));
        }
        if a == b {
            return Ok(());
        }
        if let Some(prev) = self.r2(&a, &b).filter(|p| *p != r2) {
            return Err(Error::Domain(format!(
                "conflicting r2 for {a} and {b}: {prev} and {r2}"
            )));
        }
        self.neighbours.entry(a.clone()).or_default().push((b.clone(), r2));
        self.neighbours.entry(b).or_default().push((a, r2));
        Ok(())
    }

    /// SNPs sharing a cluster label are treated as perfectly correlated.
    pub fn from_clusters<I: IntoIterator<Item = (SnpId, String)>>(assignments: I) -> Self {
        let mut groups: BTreeMap<String, Vec<SnpId>> = BTreeMap::new();
        for (snp, cluster) in assignments {
            groups.entry(cluster).or_default().push(snp);
        }
        let mut ld = LdInfo::new();
        for members in groups.values() {
            for (i, a) in members.iter().enumerate() {
                for b in &members[i + 1..] {
                    // r2 = 1 never conflicts with itself.
                    let _ = ld.insert(a.clone(), b.clone(), 1.0);
                }
            }
        }
        ld
    }

    pub fn r2(&self, a: &SnpId, b: &SnpId) -> Option<f64> {
        self.neighbours
            .get(a)?
            .iter()
            .find(|(other, _)| other == b)
            .map(|(_, r2)| *r2)
    }

    pub fn neighbours(&self, snp: &SnpId) -> &[(SnpId, f64)] {
        self.neighbours.get(snp).map_or(&[], Vec::as_slice)
    }

    pub fn n_pairs(&self) -> usize {
        self.neighbours.values().map(Vec::len).sum::<usize>() / 2
    }
}

/// Reads either `snp_id_a snp_id_b r2` pairs or `snp_id cluster` assignments.
pub fn read_ld(path: &Path) -> Result<LdInfo> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let header = loop {
        match lines.next() {
            None => return Err(Error::format(path, "no header row")),
            Some((_, line)) => {
                let line = line.map_err(|e| Error::io(path, e))?;
                if !line.starts_with('#') && !line.trim().is_empty() {
                    break line;
                }
            }
        }
    };
    let cols: Vec<String> = header.split('\t').map(|s| s.trim().to_ascii_lowercase()).collect();
    let clusters = match cols.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["snp_id_a", "snp_id_b", "r2"] => false,
        ["snp_id", "cluster"] => true,
        _ => {
            return Err(Error::format(
                path,
                "LD header must be `snp_id_a snp_id_b r2` or `snp_id cluster`",
            ))
        }
    };
    let mut ld = LdInfo::new();
    let mut assignments = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').map(str::trim).collect();
        let bad = |msg: String| Error::format(path, format!("line {}: {msg}", i + 1));
        if f.len() != cols.len() {
            return Err(bad(format!("expected {} fields, found {}", cols.len(), f.len())));
        }
        if clusters {
            assignments.push((SnpId::new(f[0]), f[1].to_string()));
        } else {
            let r2: f64 = f[2].parse().map_err(|_| bad(format!("invalid r2 {:?}", f[2])))?;
            ld.insert(SnpId::new(f[0]), SnpId::new(f[1]), r2)
                .map_err(|e| bad(e.to_string()))?;
        }
    }
    Ok(if clusters {
        LdInfo::from_clusters(assignments)
    } else {
        ld
    })
}

pub fn write_ld(path: &Path, pairs: &[(SnpId, SnpId, f64)], preamble: &[String]) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for line in preamble {
        writeln!(w, "# {line}").map_err(io)?;
    }
    writeln!(w, "snp_id_a\tsnp_id_b\tr2").map_err(io)?;
    for (a, b, r2) in pairs {
        writeln!(w, "{a}\t{b}\t{r2}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Greedy pruning by standard error: repeatedly keep the remaining SNP with
/// the smallest `se` and discard every SNP with `r2 >= r2_threshold` to it.
/// Ties in `se` are broken by genomic position and then identifier.
///
/// Only standard errors and positions are consulted, never effect sizes.
/// Returns the retained identifiers in selection order.
pub fn sigma_prune(records: &[SummaryRecord], ld: &LdInfo, r2_threshold: f64) -> Result<Vec<SnpId>> {
    if !(r2_threshold > 0.0 && r2_threshold <= 1.0) {
        return Err(Error::Domain(format!(
            "r2 threshold must lie in (0, 1], got {r2_threshold}"
        )));
    }
    let mut order: Vec<&SummaryRecord> = records.iter().collect();
    order.sort_by(|a, b| a.se.total_cmp(&b.se).then_with(|| genomic_order(a, b)));
    let mut removed: HashSet<&SnpId> = HashSet::new();
    let mut retained = Vec::new();
    for rec in order {
        if removed.contains(&rec.snp_id) {
            continue;
        }
        retained.push(rec.snp_id.clone());
        removed.insert(&rec.snp_id);
        for (other, r2) in ld.neighbours(&rec.snp_id) {
            if *r2 >= r2_threshold {
                removed.insert(other);
            }
        }
    }
    Ok(retained)
}
