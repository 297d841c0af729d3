//! Sparsity patterns, sampled symmetric matrices and entry-level diagnostics.
//!
//! A pattern fixes the set B(N) of positions that are not identically zero;
//! a sampled matrix fills the upper triangle (including the diagonal) of B(N)
//! with i.i.d. draws from a [`TailLaw`] and materializes symmetrically.
//! Sampling is bit-reproducible from `(seed, replica_index, pattern, law)`.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dense::{DenseMatrix, SymOperator};
use crate::error::{Error, Result};
use crate::heavy_tail::{SlowlyVarying, TailLaw};
use crate::rng::{derive_rng, salt};

pub const DEFAULT_DENSE_LIMIT: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PatternKind {
    Band,
    CyclicBand,
    CustomMask,
}

/// Sparsity mask satisfying the per-row density hypothesis: present positions
/// per row concentrate at a_n * N^mu.
#[derive(Clone, Debug, PartialEq)]
pub struct BandPattern {
    n: usize,
    mu: f64,
    kind: PatternKind,
    half_width: usize,
    a_n: f64,
    /// Upper-triangle positions, only stored for custom masks.
    custom_positions: Option<Vec<(u32, u32)>>,
}

impl BandPattern {
    /// Band or cyclic-band pattern: positions with (cyclic) distance
    /// |i - j| <= floor(N^mu / 2) are present. At mu = 1 the cyclic pattern
    /// is the full matrix.
    pub fn build(n: usize, mu: f64, kind: PatternKind) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("pattern needs n >= 2, got {n}")));
        }
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(Error::Config(format!("bandwidth exponent mu must be in (0, 1], got {mu}")));
        }
        if kind == PatternKind::CustomMask {
            return Err(Error::Config("custom masks are built with BandPattern::custom".into()));
        }
        let half_width = ((n as f64).powf(mu) / 2.0).floor() as usize;
        let full_row = (2 * half_width + 1).min(n);
        let a_n = full_row as f64 / (n as f64).powf(mu);
        Ok(Self { n, mu, kind, half_width, a_n, custom_positions: None })
    }

    /// Custom mask from upper-triangle positions (0-based, i <= j). The mask
    /// is symmetric by construction. Fails the density check when more than
    /// N / ln N rows fall short of the maximal row count.
    pub fn custom(n: usize, mu: f64, mut upper: Vec<(u32, u32)>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("pattern needs n >= 2, got {n}")));
        }
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(Error::Config(format!("bandwidth exponent mu must be in (0, 1], got {mu}")));
        }
        upper.sort_unstable();
        upper.dedup();
        for &(i, j) in &upper {
            if i > j || (j as usize) >= n {
                return Err(Error::Bounds(format!(
                    "custom position ({i}, {j}) outside the upper triangle of an {n}x{n} matrix"
                )));
            }
        }
        let mut row_counts = vec![0usize; n];
        for &(i, j) in &upper {
            row_counts[i as usize] += 1;
            if i != j {
                row_counts[j as usize] += 1;
            }
        }
        let d = *row_counts.iter().max().unwrap();
        if d == 0 {
            return Err(Error::Config("custom mask has no positions".into()));
        }
        let offending = row_counts.iter().filter(|&&c| c < d).count();
        let tolerance = (n as f64 / (n as f64).ln()).ceil() as usize;
        if offending > tolerance {
            return Err(Error::Config(format!(
                "custom mask fails the density check: {offending} rows below the \
                 typical count {d} (allowed {tolerance})"
            )));
        }
        let a_n = d as f64 / (n as f64).powf(mu);
        Ok(Self {
            n,
            mu,
            kind: PatternKind::CustomMask,
            half_width: 0,
            a_n,
            custom_positions: Some(upper),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn kind(&self) -> PatternKind {
        self.kind
    }
    pub fn half_width(&self) -> usize {
        self.half_width
    }
    /// Realized per-row density ratio a_n = (typical row count) / N^mu.
    pub fn a_n(&self) -> f64 {
        self.a_n
    }
    /// d_n = a_n * N^mu, the typical number of present entries per row.
    pub fn d_n(&self) -> f64 {
        self.a_n * (self.n as f64).powf(self.mu)
    }

    fn cyclic_distance(&self, i: usize, j: usize) -> usize {
        let d = i.abs_diff(j);
        d.min(self.n - d)
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        if i >= self.n || j >= self.n {
            return false;
        }
        match self.kind {
            PatternKind::Band => i.abs_diff(j) <= self.half_width,
            PatternKind::CyclicBand => self.cyclic_distance(i, j) <= self.half_width,
            PatternKind::CustomMask => {
                let key = if i <= j { (i as u32, j as u32) } else { (j as u32, i as u32) };
                self.custom_positions.as_ref().unwrap().binary_search(&key).is_ok()
            }
        }
    }

    /// Number of present entries in row i (full symmetric row).
    pub fn row_count(&self, i: usize) -> usize {
        match self.kind {
            PatternKind::Band => {
                let lo = i.saturating_sub(self.half_width);
                let hi = (i + self.half_width).min(self.n - 1);
                hi - lo + 1
            }
            PatternKind::CyclicBand => (2 * self.half_width + 1).min(self.n),
            PatternKind::CustomMask => {
                let mut c = 0;
                for &(a, b) in self.custom_positions.as_ref().unwrap() {
                    if a as usize == i || b as usize == i {
                        c += 1;
                    }
                }
                c
            }
        }
    }

    /// Upper-triangle positions (i <= j), sorted lexicographically.
    pub fn upper_positions(&self) -> Vec<(u32, u32)> {
        match self.kind {
            PatternKind::CustomMask => self.custom_positions.clone().unwrap(),
            PatternKind::Band => {
                let mut out = Vec::new();
                for i in 0..self.n {
                    let hi = (i + self.half_width).min(self.n - 1);
                    for j in i..=hi {
                        out.push((i as u32, j as u32));
                    }
                }
                out
            }
            PatternKind::CyclicBand => {
                let w = self.half_width;
                let mut out = Vec::new();
                for i in 0..self.n {
                    let direct_hi = (i + w).min(self.n - 1);
                    for j in i..=direct_hi {
                        out.push((i as u32, j as u32));
                    }
                    // wrap-around part of the row, skipping anything already emitted
                    if i + w < self.n {
                        let wrap_lo = (i + self.n - w).max(direct_hi + 1);
                        for j in wrap_lo..self.n {
                            out.push((i as u32, j as u32));
                        }
                    }
                }
                out.sort_unstable();
                out
            }
        }
    }

    /// Number of independent (upper triangle incl. diagonal) entries.
    pub fn independent_entry_count(&self) -> u64 {
        match self.kind {
            PatternKind::CustomMask => self.custom_positions.as_ref().unwrap().len() as u64,
            PatternKind::Band => (0..self.n)
                .map(|i| ((i + self.half_width).min(self.n - 1) - i + 1) as u64)
                .sum(),
            PatternKind::CyclicBand => {
                // total symmetric positions = N * row_count; diagonal counted once
                let c = (2 * self.half_width + 1).min(self.n) as u64;
                let n = self.n as u64;
                n * (c + 1) / 2
            }
        }
    }
}

/// One stored independent entry (upper triangle, i <= j).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub i: u32,
    pub j: u32,
    pub value: f64,
}

/// A sampled symmetric matrix with full seed provenance.
#[derive(Clone, Debug)]
pub struct SampledMatrix {
    pattern: BandPattern,
    law: TailLaw,
    entries: Vec<Entry>,
    seed: u64,
    replica_index: u64,
}

impl PartialEq for SampledMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.pattern == other.pattern
            && self.seed == other.seed
            && self.replica_index == other.replica_index
            && self.entries == other.entries
    }
}

/// Draw the independent entries of `pattern` from `law`. Entries are drawn in
/// sorted (i, j) order from a generator derived from `(seed, replica_index)`,
/// so identical inputs reproduce the matrix bit-exactly.
pub fn sample_matrix(
    pattern: &BandPattern,
    law: &TailLaw,
    seed: u64,
    replica_index: u64,
) -> SampledMatrix {
    let mut rng = derive_rng(seed, replica_index, salt::MATRIX_ENTRIES);
    let entries = pattern
        .upper_positions()
        .into_iter()
        .map(|(i, j)| Entry { i, j, value: law.sample(&mut rng) })
        .collect();
    SampledMatrix {
        pattern: pattern.clone(),
        law: law.clone(),
        entries,
        seed,
        replica_index,
    }
}

impl SampledMatrix {
    /// Assemble a matrix from explicit entries (used by truncation and tests).
    /// Entries must be sorted, unique, and inside the pattern.
    pub fn from_entries(
        pattern: BandPattern,
        law: TailLaw,
        entries: Vec<Entry>,
        seed: u64,
        replica_index: u64,
    ) -> Result<Self> {
        for w in entries.windows(2) {
            if (w[0].i, w[0].j) >= (w[1].i, w[1].j) {
                return Err(Error::Bounds("entries must be sorted by (i, j) without duplicates".into()));
            }
        }
        for e in &entries {
            if e.i > e.j || !pattern.contains(e.i as usize, e.j as usize) {
                return Err(Error::Bounds(format!(
                    "entry ({}, {}) outside the pattern",
                    e.i, e.j
                )));
            }
        }
        Ok(Self { pattern, law, entries, seed, replica_index })
    }

    pub fn n(&self) -> usize {
        self.pattern.n()
    }
    pub fn pattern(&self) -> &BandPattern {
        &self.pattern
    }
    pub fn law(&self) -> &TailLaw {
        &self.law
    }
    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn replica_index(&self) -> u64 {
        self.replica_index
    }

    /// Count of independent not-identically-zero entries of the pattern
    /// (the denominator count for the norming constant).
    pub fn independent_entry_count(&self) -> u64 {
        self.pattern.independent_entry_count()
    }

    /// Norming constant b_N for this matrix's entry count.
    pub fn norming_constant(&self) -> Result<f64> {
        self.law.norming_constant(self.independent_entry_count())
    }

    /// Dense materialization; refused above `limit` to keep memory bounded.
    pub fn to_dense_limited(&self, limit: usize) -> Result<DenseMatrix> {
        let n = self.n();
        if n > limit {
            return Err(Error::Bounds(format!(
                "dense materialization of n = {n} refused (limit {limit})"
            )));
        }
        let mut m = DenseMatrix::zeros(n);
        for e in &self.entries {
            m[(e.i as usize, e.j as usize)] = e.value;
            m[(e.j as usize, e.i as usize)] = e.value;
        }
        Ok(m)
    }

    pub fn to_dense(&self) -> Result<DenseMatrix> {
        self.to_dense_limited(DEFAULT_DENSE_LIMIT)
    }

    /// Sum of squares over the full symmetric matrix.
    pub fn frobenius_norm_sq(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| {
                let v2 = e.value * e.value;
                if e.i == e.j {
                    v2
                } else {
                    2.0 * v2
                }
            })
            .sum()
    }

    pub fn trace(&self) -> f64 {
        self.entries.iter().filter(|e| e.i == e.j).map(|e| e.value).sum()
    }
}

impl SymOperator for SampledMatrix {
    fn dim(&self) -> usize {
        self.n()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for e in &self.entries {
            let (i, j) = (e.i as usize, e.j as usize);
            y[i] += e.value * x[j];
            if i != j {
                y[j] += e.value * x[i];
            }
        }
    }
}

/// One ranked entry: position (i <= j), value, modulus and sign.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RankedEntry {
    pub i: u32,
    pub j: u32,
    pub value: f64,
    pub modulus: f64,
    pub sign: i8,
}

/// Top-k independent entries by modulus, descending; ties broken
/// lexicographically on (i, j).
pub fn largest_entries(m: &SampledMatrix, k: usize) -> Result<Vec<RankedEntry>> {
    let total = m.entries.len();
    if k > total {
        return Err(Error::Bounds(format!(
            "asked for top {k} of {total} independent entries"
        )));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut idx: Vec<usize> = (0..total).collect();
    let entries = &m.entries;
    let cmp = |&a: &usize, &b: &usize| {
        let (ea, eb) = (&entries[a], &entries[b]);
        eb.value
            .abs()
            .partial_cmp(&ea.value.abs())
            .unwrap()
            .then_with(|| (ea.i, ea.j).cmp(&(eb.i, eb.j)))
    };
    if k < total {
        idx.select_nth_unstable_by(k - 1, cmp);
        idx.truncate(k);
    }
    idx.sort_by(cmp);
    Ok(idx
        .into_iter()
        .map(|t| {
            let e = entries[t];
            RankedEntry {
                i: e.i,
                j: e.j,
                value: e.value,
                modulus: e.value.abs(),
                sign: if e.value < 0.0 { -1 } else { 1 },
            }
        })
        .collect())
}

#[derive(Clone, Debug)]
pub struct RowTailSums {
    pub per_row: Vec<f64>,
    pub max: f64,
}

/// Per-row sums of moduli strictly above `threshold`; the maximum over rows
/// bounds the spectral norm of the thresholded part.
pub fn row_tail_sum(m: &SampledMatrix, threshold: f64) -> RowTailSums {
    assert!(threshold >= 0.0, "threshold must be non-negative");
    let mut per_row = vec![0.0f64; m.n()];
    for e in &m.entries {
        let a = e.value.abs();
        if a > threshold {
            per_row[e.i as usize] += a;
            if e.i != e.j {
                per_row[e.j as usize] += a;
            }
        }
    }
    let max = per_row.iter().cloned().fold(0.0, f64::max);
    RowTailSums { per_row, max }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct OutlierRowDiagnostics {
    /// Some row holds two entries above the row threshold.
    pub two_large_in_row: bool,
    /// Some diagonal entry exceeds the diagonal threshold.
    pub large_diagonal: bool,
    pub row_threshold: f64,
    pub diagonal_threshold: f64,
}

/// Check that large entries are isolated: no row carries two entries above
/// b_N^{(1+2mu)/(2(1+mu)) + eta} and no diagonal entry exceeds
/// b_N^{1/(1+mu) + eta}.
pub fn outlier_row_diagnostics(m: &SampledMatrix, eta: f64) -> Result<OutlierRowDiagnostics> {
    if !(eta > 0.0) {
        return Err(Error::Domain(format!("eta must be positive, got {eta}")));
    }
    let mu = m.pattern().mu();
    let b = m.norming_constant()?;
    let row_threshold = b.powf((1.0 + 2.0 * mu) / (2.0 * (1.0 + mu)) + eta);
    let diagonal_threshold = b.powf(1.0 / (1.0 + mu) + eta);
    let mut row_counts = vec![0u32; m.n()];
    let mut two_large_in_row = false;
    let mut large_diagonal = false;
    for e in &m.entries {
        let a = e.value.abs();
        if a > row_threshold {
            row_counts[e.i as usize] += 1;
            if e.i != e.j {
                row_counts[e.j as usize] += 1;
            }
        }
        if e.i == e.j && a > diagonal_threshold {
            large_diagonal = true;
        }
    }
    if row_counts.iter().any(|&c| c >= 2) {
        two_large_in_row = true;
    }
    Ok(OutlierRowDiagnostics {
        two_large_in_row,
        large_diagonal,
        row_threshold,
        diagonal_threshold,
    })
}

// ---------------------------------------------------------------------------
// Matrix import/export
// ---------------------------------------------------------------------------

fn kind_tag(kind: PatternKind) -> u8 {
    match kind {
        PatternKind::Band => 0,
        PatternKind::CyclicBand => 1,
        PatternKind::CustomMask => 2,
    }
}

fn kind_from_tag(tag: u8) -> Result<PatternKind> {
    match tag {
        0 => Ok(PatternKind::Band),
        1 => Ok(PatternKind::CyclicBand),
        2 => Ok(PatternKind::CustomMask),
        _ => Err(Error::Format(format!("unknown pattern kind tag {tag}"))),
    }
}

fn sv_fields(sv: SlowlyVarying) -> (u8, f64) {
    match sv {
        SlowlyVarying::Constant(c) => (0, c),
        SlowlyVarying::LogPower(b) => (1, b),
    }
}

fn sv_from_fields(tag: u8, param: f64) -> Result<SlowlyVarying> {
    match tag {
        0 => Ok(SlowlyVarying::Constant(param)),
        1 => Ok(SlowlyVarying::LogPower(param)),
        _ => Err(Error::Format(format!("unknown slowly-varying tag {tag}"))),
    }
}

fn law_header(law: &TailLaw) -> String {
    let (tag, param) = sv_fields(law.slowly_varying());
    format!(
        "alpha={:e} scale={:e} sv={tag}:{param:e} symmetrized={} variance_normalized={}",
        law.alpha(),
        law.scale(),
        u8::from(law.symmetrized()),
        u8::from(law.variance_normalized()),
    )
}

/// Write the plain-text coordinate format: header comments carrying the
/// provenance, then one "i j value" line (1-based, upper triangle) per entry.
pub fn export_text(m: &SampledMatrix, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "# heavyband coo v1")?;
    writeln!(
        w,
        "# n={} mu={:e} kind={} seed={} replica={}",
        m.n(),
        m.pattern().mu(),
        kind_tag(m.pattern().kind()),
        m.seed(),
        m.replica_index()
    )?;
    writeln!(w, "# law {}", law_header(m.law()))?;
    for e in &m.entries {
        writeln!(w, "{} {} {:e}", e.i + 1, e.j + 1, e.value)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_law_header(line: &str) -> Result<TailLaw> {
    let mut alpha = None;
    let mut scale = None;
    let mut sv = None;
    let mut symm = None;
    let mut vn = None;
    for tok in line.split_whitespace() {
        if let Some((k, v)) = tok.split_once('=') {
            match k {
                "alpha" => alpha = Some(v.parse::<f64>().map_err(|e| Error::Format(e.to_string()))?),
                "scale" => scale = Some(v.parse::<f64>().map_err(|e| Error::Format(e.to_string()))?),
                "sv" => {
                    let (tag, param) = v
                        .split_once(':')
                        .ok_or_else(|| Error::Format("bad sv field".into()))?;
                    sv = Some(sv_from_fields(
                        tag.parse::<u8>().map_err(|e| Error::Format(e.to_string()))?,
                        param.parse::<f64>().map_err(|e| Error::Format(e.to_string()))?,
                    )?);
                }
                "symmetrized" => symm = Some(v == "1"),
                "variance_normalized" => vn = Some(v == "1"),
                _ => {}
            }
        }
    }
    match (alpha, scale, sv, symm, vn) {
        (Some(a), Some(s), Some(sv), Some(sy), Some(v)) => TailLaw::new(a, s, sv, sy, v),
        _ => Err(Error::Format("incomplete law header".into())),
    }
}

/// Read the plain-text coordinate format back; validates ordering, bounds and
/// pattern membership.
pub fn import_text(path: &Path) -> Result<SampledMatrix> {
    let r = BufReader::new(std::fs::File::open(path)?);
    let mut lines = r.lines();
    let magic = lines
        .next()
        .ok_or_else(|| Error::Format("empty file".into()))??;
    if magic.trim() != "# heavyband coo v1" {
        return Err(Error::Format(format!("bad magic line: {magic}")));
    }
    let meta = lines
        .next()
        .ok_or_else(|| Error::Format("missing metadata line".into()))??;
    let mut n = None;
    let mut mu = None;
    let mut kind = None;
    let mut seed = None;
    let mut replica = None;
    for tok in meta.trim_start_matches('#').split_whitespace() {
        if let Some((k, v)) = tok.split_once('=') {
            match k {
                "n" => n = Some(v.parse::<usize>().map_err(|e| Error::Format(e.to_string()))?),
                "mu" => mu = Some(v.parse::<f64>().map_err(|e| Error::Format(e.to_string()))?),
                "kind" => kind = Some(kind_from_tag(v.parse::<u8>().map_err(|e| Error::Format(e.to_string()))?)?),
                "seed" => seed = Some(v.parse::<u64>().map_err(|e| Error::Format(e.to_string()))?),
                "replica" => replica = Some(v.parse::<u64>().map_err(|e| Error::Format(e.to_string()))?),
                _ => {}
            }
        }
    }
    let (n, mu, kind, seed, replica) = match (n, mu, kind, seed, replica) {
        (Some(a), Some(b), Some(c), Some(d), Some(e)) => (a, b, c, d, e),
        _ => return Err(Error::Format("incomplete metadata line".into())),
    };
    let law_line = lines
        .next()
        .ok_or_else(|| Error::Format("missing law line".into()))??;
    let law = parse_law_header(law_line.trim_start_matches("# law"))?;
    let mut entries = Vec::new();
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut it = t.split_whitespace();
        let i: u32 = it
            .next()
            .ok_or_else(|| Error::Format("short entry line".into()))?
            .parse()
            .map_err(|e: std::num::ParseIntError| Error::Format(e.to_string()))?;
        let j: u32 = it
            .next()
            .ok_or_else(|| Error::Format("short entry line".into()))?
            .parse()
            .map_err(|e: std::num::ParseIntError| Error::Format(e.to_string()))?;
        let v: f64 = it
            .next()
            .ok_or_else(|| Error::Format("short entry line".into()))?
            .parse()
            .map_err(|e: std::num::ParseFloatError| Error::Format(e.to_string()))?;
        if i == 0 || j == 0 {
            return Err(Error::Format("coordinate indices are 1-based".into()));
        }
        entries.push(Entry { i: i - 1, j: j - 1, value: v });
    }
    let pattern = rebuild_pattern(n, mu, kind, &entries)?;
    SampledMatrix::from_entries(pattern, law, entries, seed, replica)
}

fn rebuild_pattern(n: usize, mu: f64, kind: PatternKind, entries: &[Entry]) -> Result<BandPattern> {
    match kind {
        PatternKind::CustomMask => {
            BandPattern::custom(n, mu, entries.iter().map(|e| (e.i, e.j)).collect())
        }
        k => BandPattern::build(n, mu, k),
    }
}

const BINARY_MAGIC: &[u8; 4] = b"HBM1";

/// Compact binary format: header {n, mu, kind, seed, replica, law}, then the
/// sorted upper-triangle entries.
pub fn export_binary(m: &SampledMatrix, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&(m.n() as u64).to_le_bytes())?;
    w.write_all(&m.pattern().mu().to_le_bytes())?;
    w.write_all(&[kind_tag(m.pattern().kind())])?;
    w.write_all(&m.seed().to_le_bytes())?;
    w.write_all(&m.replica_index().to_le_bytes())?;
    let law = m.law();
    let (sv_tag, sv_param) = sv_fields(law.slowly_varying());
    w.write_all(&law.alpha().to_le_bytes())?;
    w.write_all(&law.scale().to_le_bytes())?;
    w.write_all(&[sv_tag])?;
    w.write_all(&sv_param.to_le_bytes())?;
    w.write_all(&[u8::from(law.symmetrized()), u8::from(law.variance_normalized())])?;
    w.write_all(&(m.entries.len() as u64).to_le_bytes())?;
    for e in &m.entries {
        w.write_all(&e.i.to_le_bytes())?;
        w.write_all(&e.j.to_le_bytes())?;
        w.write_all(&e.value.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn import_binary(path: &Path) -> Result<SampledMatrix> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::Format("bad binary magic".into()));
    }
    let mut u64b = [0u8; 8];
    let mut f64b = [0u8; 8];
    let mut u8b = [0u8; 1];
    let mut read_u64 = |r: &mut dyn Read| -> Result<u64> {
        r.read_exact(&mut u64b)?;
        Ok(u64::from_le_bytes(u64b))
    };
    let n = read_u64(&mut r)? as usize;
    r.read_exact(&mut f64b)?;
    let mu = f64::from_le_bytes(f64b);
    r.read_exact(&mut u8b)?;
    let kind = kind_from_tag(u8b[0])?;
    let seed = read_u64(&mut r)?;
    let replica = read_u64(&mut r)?;
    r.read_exact(&mut f64b)?;
    let alpha = f64::from_le_bytes(f64b);
    r.read_exact(&mut f64b)?;
    let scale = f64::from_le_bytes(f64b);
    r.read_exact(&mut u8b)?;
    let sv_tag = u8b[0];
    r.read_exact(&mut f64b)?;
    let sv = sv_from_fields(sv_tag, f64::from_le_bytes(f64b))?;
    r.read_exact(&mut u8b)?;
    let symm = u8b[0] == 1;
    r.read_exact(&mut u8b)?;
    let vn = u8b[0] == 1;
    let law = TailLaw::new(alpha, scale, sv, symm, vn)?;
    let count = read_u64(&mut r)? as usize;
    let mut entries = Vec::with_capacity(count);
    let mut u32b = [0u8; 4];
    for _ in 0..count {
        r.read_exact(&mut u32b)?;
        let i = u32::from_le_bytes(u32b);
        r.read_exact(&mut u32b)?;
        let j = u32::from_le_bytes(u32b);
        r.read_exact(&mut f64b)?;
        entries.push(Entry { i, j, value: f64::from_le_bytes(f64b) });
    }
    let pattern = rebuild_pattern(n, mu, kind, &entries)?;
    SampledMatrix::from_entries(pattern, law, entries, seed, replica)
}
