//! Streaming readers for 1000-Genomes-style VCF genotype files and sample
//! panel files.
//!
//! Only the GT subfield of the per-sample columns is interpreted. Inputs may
//! be plain text or gzip/bgzip compressed; [`open_text`] sniffs the magic
//! bytes and decompresses transparently.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use indexmap::IndexMap;
use thiserror::Error;

/// The five continental super-population codes.
pub const SUPER_POPULATIONS: [&str; 5] = ["AFR", "AMR", "EAS", "EUR", "SAS"];

#[derive(Debug, Error)]
pub enum GenioError {
    #[error("line {line}: panel line needs at least 4 columns, found {found}")]
    MalformedPanelLine { line: usize, found: usize },
    #[error("line {line}: duplicate sample id {sample}")]
    DuplicateSample { line: usize, sample: String },
    #[error("line {line}: unknown super-population code {code}")]
    UnknownSuperPopulation { line: usize, code: String },
    #[error("VCF has no #CHROM header line before the data")]
    MissingHeader,
    #[error("line {line}: expected {expected} columns, found {found}")]
    ColumnCountMismatch { line: usize, expected: usize, found: usize },
    #[error("line {line}: bad genotype token {token:?}")]
    BadGenotypeToken { line: usize, token: String },
    #[error("line {line}: FORMAT column must start with GT, found {format:?}")]
    MissingGtField { line: usize, format: String },
    #[error("line {line}: bad position {token:?}")]
    BadPosition { line: usize, token: String },
    #[error("line {line}: record has no alternate allele")]
    NoAltAllele { line: usize },
    #[error("genotype call has a missing allele")]
    MissingAllele,
    #[error("allele number is zero")]
    ZeroAlleleNumber,
    #[error("allele count {ac} exceeds allele number {an}")]
    CountExceedsNumber { ac: u64, an: u64 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = GenioError> = std::result::Result<T, E>;

/// One row of the sample panel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PanelEntry {
    pub sample_id: String,
    pub population: String,
    pub super_population: String,
    pub gender: String,
}

/// A per-sample genotype call. `None` alleles are missing (`.`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenotypeCall {
    pub alleles: Vec<Option<u32>>,
    pub phased: bool,
}

impl GenotypeCall {
    pub fn diploid(a: u32, b: u32, phased: bool) -> Self {
        GenotypeCall { alleles: vec![Some(a), Some(b)], phased }
    }

    pub fn has_missing(&self) -> bool {
        self.alleles.iter().any(Option::is_none)
    }

    pub fn ploidy(&self) -> usize {
        self.alleles.len()
    }

    /// Parse a GT token such as `0|1`, `1/1`, `./.` or haploid `1`.
    /// `n_alleles` is `1 + |ALT|`; indices must be below it.
    pub fn parse(token: &str, n_alleles: usize) -> Option<Self> {
        if token.is_empty() {
            return None;
        }
        let phased = token.contains('|');
        if phased && token.contains('/') {
            return None;
        }
        let sep = if phased { '|' } else { '/' };
        let mut alleles = Vec::with_capacity(2);
        for part in token.split(sep) {
            if part == "." {
                alleles.push(None);
                continue;
            }
            let idx: u32 = part.parse().ok()?;
            if idx as usize >= n_alleles {
                return None;
            }
            alleles.push(Some(idx));
        }
        Some(GenotypeCall { alleles, phased })
    }
}

impl fmt::Display for GenotypeCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.phased { "|" } else { "/" };
        for (i, a) in self.alleles.iter().enumerate() {
            if i > 0 {
                f.write_str(sep)?;
            }
            match a {
                Some(idx) => write!(f, "{idx}")?,
                None => f.write_str(".")?,
            }
        }
        Ok(())
    }
}

/// One VCF data line.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantRecord {
    pub chrom: String,
    pub pos: u64,
    pub id: String,
    pub ref_allele: String,
    pub alt_alleles: Vec<String>,
    pub qual: String,
    pub filter: String,
    /// INFO fields in file order; flags carry an empty value.
    pub info: IndexMap<String, String>,
    pub calls: Vec<GenotypeCall>,
}

impl VariantRecord {
    pub fn info_value(&self, key: &str) -> Option<&str> {
        self.info.get(key).map(String::as_str)
    }

    /// Render the record as a tab-separated VCF data line (no newline).
    pub fn to_vcf_line(&self) -> String {
        let mut line = String::with_capacity(64 + 4 * self.calls.len());
        let info = if self.info.is_empty() {
            ".".to_string()
        } else {
            self.info
                .iter()
                .map(|(k, v)| if v.is_empty() { k.clone() } else { format!("{k}={v}") })
                .collect::<Vec<_>>()
                .join(";")
        };
        line.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.chrom,
            self.pos,
            self.id,
            self.ref_allele,
            self.alt_alleles.join(","),
            self.qual,
            self.filter,
            info
        ));
        if !self.calls.is_empty() {
            line.push_str("\tGT");
            for call in &self.calls {
                line.push('\t');
                line.push_str(&call.to_string());
            }
        }
        line
    }
}

/// Open a file for line reading, decompressing gzip input transparently.
pub fn open_text(path: impl AsRef<Path>) -> io::Result<Box<dyn BufRead + Send>> {
    let mut reader = BufReader::new(File::open(path)?);
    let is_gzip = reader.fill_buf()?.starts_with(&[0x1f, 0x8b]);
    if is_gzip {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(reader))))
    } else {
        Ok(Box::new(reader))
    }
}

/// Wrap an arbitrary byte stream the same way [`open_text`] wraps files.
pub fn wrap_reader<R: Read + Send + 'static>(inner: R) -> io::Result<Box<dyn BufRead + Send>> {
    let mut reader = BufReader::new(inner);
    let is_gzip = reader.fill_buf()?.starts_with(&[0x1f, 0x8b]);
    if is_gzip {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(reader))))
    } else {
        Ok(Box::new(reader))
    }
}

/// Parse a panel file: `sample pop super_pop gender [extra...]` per line.
///
/// A first line whose first token is `sample` is treated as a header.
pub fn parse_panel<R: BufRead>(reader: R) -> Result<Vec<PanelEntry>> {
    parse_panel_with(reader, false)
}

/// As [`parse_panel`], optionally rejecting super-population codes outside
/// [`SUPER_POPULATIONS`].
pub fn parse_panel_with<R: BufRead>(reader: R, validate_super: bool) -> Result<Vec<PanelEntry>> {
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if idx == 0 && tokens[0] == "sample" {
            continue;
        }
        if tokens.len() < 4 {
            return Err(GenioError::MalformedPanelLine { line: lineno, found: tokens.len() });
        }
        if validate_super && !SUPER_POPULATIONS.contains(&tokens[2]) {
            return Err(GenioError::UnknownSuperPopulation { line: lineno, code: tokens[2].to_string() });
        }
        if !seen.insert(tokens[0].to_string()) {
            return Err(GenioError::DuplicateSample { line: lineno, sample: tokens[0].to_string() });
        }
        entries.push(PanelEntry {
            sample_id: tokens[0].to_string(),
            population: tokens[1].to_string(),
            super_population: tokens[2].to_string(),
            gender: tokens[3].to_string(),
        });
    }
    Ok(entries)
}

/// Streaming VCF reader. Construct with [`parse_vcf`]; iterate for records.
///
/// Holds one line buffer; memory use does not grow with the file.
pub struct VcfReader<R> {
    reader: R,
    samples: Vec<String>,
    line: String,
    lineno: usize,
}

/// Read the meta and header lines of a VCF and return the sample names
/// together with a record iterator positioned at the first data line.
pub fn parse_vcf<R: BufRead>(mut reader: R) -> Result<VcfReader<R>> {
    let mut line = String::new();
    let mut lineno = 0;
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Err(GenioError::MissingHeader);
        }
        lineno += 1;
        let trimmed = line.trim_end_matches(['\n', '\r']);
        if trimmed.starts_with("##") || trimmed.is_empty() {
            continue;
        }
        if let Some(header) = trimmed.strip_prefix("#CHROM") {
            let cols: Vec<&str> = header.split('\t').collect();
            // cols[0] is the empty remainder of "#CHROM"; 8 fixed columns,
            // then FORMAT, then samples.
            let samples =
                if cols.len() > 9 { cols[9..].iter().map(|s| s.to_string()).collect() } else { Vec::new() };
            return Ok(VcfReader { reader, samples, line, lineno });
        }
        return Err(GenioError::MissingHeader);
    }
}

impl<R: BufRead> VcfReader<R> {
    pub fn samples(&self) -> &[String] {
        &self.samples
    }
}

impl<R: BufRead> Iterator for VcfReader<R> {
    type Item = Result<VariantRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.line.clear();
            match self.reader.read_line(&mut self.line) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            self.lineno += 1;
            let trimmed = self.line.trim_end_matches(['\n', '\r']);
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            return Some(parse_data_line(trimmed, self.samples.len(), self.lineno));
        }
    }
}

/// Parse one tab-separated data line against a header with `n_samples`
/// sample columns.
pub fn parse_data_line(line: &str, n_samples: usize, lineno: usize) -> Result<VariantRecord> {
    let cols: Vec<&str> = line.split('\t').collect();
    let expected = if n_samples > 0 { 9 + n_samples } else { 8 };
    let count_ok = if n_samples > 0 { cols.len() == expected } else { cols.len() == 8 || cols.len() == 9 };
    if !count_ok {
        return Err(GenioError::ColumnCountMismatch { line: lineno, expected, found: cols.len() });
    }
    let pos: u64 = match cols[1].parse() {
        Ok(p) if p >= 1 => p,
        _ => return Err(GenioError::BadPosition { line: lineno, token: cols[1].to_string() }),
    };
    let alt_alleles: Vec<String> = if cols[4] == "." || cols[4].is_empty() {
        Vec::new()
    } else {
        cols[4].split(',').map(str::to_string).collect()
    };
    if alt_alleles.is_empty() {
        return Err(GenioError::NoAltAllele { line: lineno });
    }
    let mut info = IndexMap::new();
    if cols[7] != "." {
        for field in cols[7].split(';').filter(|f| !f.is_empty()) {
            match field.split_once('=') {
                Some((k, v)) => info.insert(k.to_string(), v.to_string()),
                None => info.insert(field.to_string(), String::new()),
            };
        }
    }
    let mut calls = Vec::with_capacity(n_samples);
    if n_samples > 0 {
        let format = cols[8];
        if format.split(':').next() != Some("GT") {
            return Err(GenioError::MissingGtField { line: lineno, format: format.to_string() });
        }
        let n_alleles = 1 + alt_alleles.len();
        for field in &cols[9..] {
            let gt = field.split(':').next().unwrap_or("");
            let call = GenotypeCall::parse(gt, n_alleles)
                .ok_or_else(|| GenioError::BadGenotypeToken { line: lineno, token: gt.to_string() })?;
            calls.push(call);
        }
    }
    Ok(VariantRecord {
        chrom: cols[0].to_string(),
        pos,
        id: cols[2].to_string(),
        ref_allele: cols[3].to_string(),
        alt_alleles,
        qual: cols[5].to_string(),
        filter: cols[6].to_string(),
        info,
        calls,
    })
}

/// Number of non-reference alleles in a call. Multi-allelic indices all
/// count as one alternate each.
pub fn alt_allele_count(call: &GenotypeCall) -> Result<u32> {
    let mut count = 0;
    for allele in &call.alleles {
        match allele {
            Some(0) => {}
            Some(_) => count += 1,
            None => return Err(GenioError::MissingAllele),
        }
    }
    Ok(count)
}

/// AF = AC / AN.
pub fn allele_frequency(ac: u64, an: u64) -> Result<f64> {
    if an == 0 {
        return Err(GenioError::ZeroAlleleNumber);
    }
    if ac > an {
        return Err(GenioError::CountExceedsNumber { ac, an });
    }
    Ok(ac as f64 / an as f64)
}

/// Header line for a VCF carrying the given samples.
pub fn header_line(samples: &[String]) -> String {
    let mut line = String::from("#CHROM\tPOS\tID\tREF\tALT\tQUAL\tFILTER\tINFO");
    if !samples.is_empty() {
        line.push_str("\tFORMAT");
        for s in samples {
            line.push('\t');
            line.push_str(s);
        }
    }
    line
}
