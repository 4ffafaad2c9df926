//! Binary field files, sweep datasets, estimate tables, and the provenance
//! stamp (configuration hash and seed) they all carry.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::farfield::{Band, FarFieldRecord, SweepDataset};
use crate::forward::BornOrder;
use crate::grid::{ComplexField, GridSpec};
use crate::inverse::StrengthEstimate;
use crate::{Dim, Error, Result};

pub const FIELD_MAGIC: &[u8; 4] = b"PSFD";
pub const SWEEP_MAGIC: &[u8; 4] = b"PSSW";
pub const FORMAT_VERSION: u32 = 1;

/// Provenance carried by every output file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stamp {
    pub config_hash: String,
    pub seed: u64,
}

/// JSON sidecar of a binary field file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub config_hash: String,
    pub seed: u64,
    /// What the field holds, e.g. `potential` or `total_field`.
    pub kind: String,
    pub d: u32,
    pub n_points: usize,
    pub half_width: f64,
    #[serde(default)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl FieldMeta {
    pub fn new(kind: &str, grid: &GridSpec, stamp: &Stamp) -> Self {
        Self {
            config_hash: stamp.config_hash.clone(),
            seed: stamp.seed,
            kind: kind.to_string(),
            d: grid.dim() as u32,
            n_points: grid.n_points(),
            half_width: grid.half_width(),
            extra: Default::default(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.extra
            .insert(key.to_string(), serde_json::to_value(value).expect("metadata serializes"));
        self
    }

    pub fn stamp(&self) -> Stamp {
        Stamp {
            config_hash: self.config_hash.clone(),
            seed: self.seed,
        }
    }
}

/// JSON sidecar of a sweep dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepMeta {
    pub config_hash: String,
    pub seed: u64,
    pub grid: GridSpec,
    pub n: usize,
    pub band: Band,
    pub directions: Vec<Vec<f64>>,
    pub born_order: BornOrder,
    pub record_count: usize,
}

/// `foo.psfd` -> `foo.psfd.json`
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn format_err(path: &Path, what: &str) -> Error {
    Error::Format(format!("{}: {what}", path.display()))
}

fn read_exact<const K: usize>(r: &mut impl Read, path: &Path) -> Result<[u8; K]> {
    let mut buf = [0u8; K];
    r.read_exact(&mut buf).map_err(|_| format_err(path, "truncated header"))?;
    Ok(buf)
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| format_err(path, &e.to_string()))
}

/// Write `PSFD` header, little-endian complex64 payload and the sidecar.
/// The payload is single precision.
pub fn write_field(path: &Path, field: &ComplexField, meta: &FieldMeta) -> Result<()> {
    let grid = field.spec();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(FIELD_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    w.write_all(&(grid.n_points() as u32).to_le_bytes())?;
    w.write_all(&grid.half_width().to_le_bytes())?;
    for v in field.values() {
        w.write_all(&(v.re as f32).to_le_bytes())?;
        w.write_all(&(v.im as f32).to_le_bytes())?;
    }
    w.flush()?;
    write_json(&sidecar_path(path), meta)
}

pub fn read_field(path: &Path) -> Result<(ComplexField, FieldMeta)> {
    let mut r = BufReader::new(File::open(path)?);
    if &read_exact::<4>(&mut r, path)? != FIELD_MAGIC {
        return Err(format_err(path, "bad magic, expected PSFD"));
    }
    let version = u32::from_le_bytes(read_exact(&mut r, path)?);
    if version != FORMAT_VERSION {
        return Err(format_err(path, &format!("unsupported version {version}")));
    }
    let d = u32::from_le_bytes(read_exact(&mut r, path)?);
    let n = u32::from_le_bytes(read_exact(&mut r, path)?) as usize;
    let l = f64::from_le_bytes(read_exact(&mut r, path)?);
    let dim = Dim::try_from(d).map_err(|_| format_err(path, &format!("dimension {d}")))?;
    let grid = GridSpec::new(dim, l, n).map_err(|e| format_err(path, &e.to_string()))?;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() != 8 * grid.len() {
        return Err(format_err(
            path,
            &format!("payload has {} bytes, expected {}", payload.len(), 8 * grid.len()),
        ));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes(c[0..4].try_into().unwrap());
            let im = f32::from_le_bytes(c[4..8].try_into().unwrap());
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    let field = ComplexField::new(grid, values).map_err(|e| format_err(path, &e.to_string()))?;
    let meta: FieldMeta = read_json(&sidecar_path(path))?;
    if meta.d != d || meta.n_points != n || meta.half_width != l {
        return Err(format_err(path, "sidecar disagrees with the binary header"));
    }
    Ok((field, meta))
}

/// Write the sweep as `PSSW` records `{x̂, θ, κ, re, im}` (f64) plus a sidecar.
pub fn write_sweep(path: &Path, ds: &SweepDataset, stamp: &Stamp) -> Result<()> {
    let records = ds.records();
    let d = ds.d();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(SWEEP_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(d as u32).to_le_bytes())?;
    w.write_all(&(records.len() as u64).to_le_bytes())?;
    for r in &records {
        for v in r.x_hat.iter().chain(&r.theta).chain([&r.kappa, &r.value.re, &r.value.im]) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    let meta = SweepMeta {
        config_hash: stamp.config_hash.clone(),
        seed: stamp.seed,
        grid: ds.grid,
        n: ds.n,
        band: ds.band,
        directions: ds.directions.clone(),
        born_order: ds.born_order,
        record_count: records.len(),
    };
    write_json(&sidecar_path(path), &meta)
}

pub fn read_sweep_records(path: &Path) -> Result<(usize, Vec<FarFieldRecord>)> {
    let mut r = BufReader::new(File::open(path)?);
    if &read_exact::<4>(&mut r, path)? != SWEEP_MAGIC {
        return Err(format_err(path, "bad magic, expected PSSW"));
    }
    let version = u32::from_le_bytes(read_exact(&mut r, path)?);
    if version != FORMAT_VERSION {
        return Err(format_err(path, &format!("unsupported version {version}")));
    }
    let d = u32::from_le_bytes(read_exact(&mut r, path)?) as usize;
    if d != 2 && d != 3 {
        return Err(format_err(path, &format!("dimension {d}")));
    }
    let count = u64::from_le_bytes(read_exact(&mut r, path)?) as usize;
    let width = 2 * d + 3;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() != 8 * width * count {
        return Err(format_err(path, "record payload length does not match the count"));
    }
    let nums: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let records = nums
        .chunks_exact(width)
        .map(|c| FarFieldRecord {
            x_hat: c[..d].to_vec(),
            theta: c[d..2 * d].to_vec(),
            kappa: c[2 * d],
            value: Complex64::new(c[2 * d + 1], c[2 * d + 2]),
            born_order: BornOrder::Converge,
        })
        .collect();
    Ok((d, records))
}

pub fn read_sweep(path: &Path) -> Result<(SweepDataset, SweepMeta)> {
    let (d, mut records) = read_sweep_records(path)?;
    let meta: SweepMeta = read_json(&sidecar_path(path))?;
    if meta.grid.dim() != d || meta.record_count != records.len() {
        return Err(format_err(path, "sidecar disagrees with the binary header"));
    }
    for r in &mut records {
        r.born_order = meta.born_order;
    }
    let ds = SweepDataset::from_records(
        meta.grid,
        meta.n,
        meta.band,
        meta.directions.clone(),
        meta.born_order,
        meta.seed,
        &records,
    )?;
    Ok((ds, meta))
}

/// Estimates as CSV with `# config_hash=` and `# seed=` comment lines.
pub fn write_estimates(path: &Path, estimates: &[StrengthEstimate], stamp: &Stamp) -> Result<()> {
    let d = estimates.first().map(|e| e.x_hat.len()).unwrap_or(2);
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# config_hash={}", stamp.config_hash)?;
    writeln!(w, "# seed={}", stamp.seed)?;
    let axes = ["x", "y", "z"];
    let mut header: Vec<String> = (0..d).map(|a| format!("xhat_{}", axes[a])).collect();
    header.push("tau".into());
    header.extend((0..d).map(|a| format!("xi_{}", axes[a])));
    header.extend(["c_re", "c_im", "r_re", "r_im", "q", "n_kappa"].map(String::from));
    writeln!(w, "{}", header.join(","))?;
    for e in estimates {
        let mut row: Vec<String> = e.x_hat.iter().map(|v| v.to_string()).collect();
        row.push(e.tau.to_string());
        row.extend(e.xi.iter().map(|v| v.to_string()));
        row.extend([e.c_hat.re, e.c_hat.im, e.r_hat.re, e.r_hat.im, e.q].map(|v| v.to_string()));
        row.push(e.n_kappa.to_string());
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Stamp from the leading comment lines of a CSV written by this crate.
pub fn read_csv_stamp(path: &Path) -> Result<Stamp> {
    let r = BufReader::new(File::open(path)?);
    let (mut hash, mut seed) = (None, None);
    for line in r.lines() {
        let line = line?;
        let Some(rest) = line.strip_prefix("# ") else { break };
        if let Some(h) = rest.strip_prefix("config_hash=") {
            hash = Some(h.to_string());
        } else if let Some(s) = rest.strip_prefix("seed=") {
            seed = s.parse().ok();
        }
    }
    match (hash, seed) {
        (Some(config_hash), Some(seed)) => Ok(Stamp { config_hash, seed }),
        _ => Err(format_err(path, "missing config_hash/seed comment lines")),
    }
}

pub fn read_estimates(path: &Path) -> Result<(Vec<StrengthEstimate>, Stamp)> {
    let stamp = read_csv_stamp(path)?;
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| format_err(path, "missing header"))?;
    let d = header.split(',').filter(|c| c.starts_with("xhat_")).count();
    let width = 2 * d + 7;
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != width {
            return Err(format_err(path, &format!("row {i} has {} columns, expected {width}", cols.len())));
        }
        let num = |k: usize| -> Result<f64> {
            cols[k]
                .parse()
                .map_err(|_| format_err(path, &format!("row {i}: bad number {:?}", cols[k])))
        };
        let x_hat = (0..d).map(num).collect::<Result<Vec<_>>>()?;
        let xi = (d + 1..2 * d + 1).map(num).collect::<Result<Vec<_>>>()?;
        let b = 2 * d + 1;
        out.push(StrengthEstimate {
            x_hat,
            tau: num(d)?,
            xi,
            c_hat: Complex64::new(num(b)?, num(b + 1)?),
            r_hat: Complex64::new(num(b + 2)?, num(b + 3)?),
            q: num(b + 4)?,
            n_kappa: cols[b + 5]
                .parse()
                .map_err(|_| format_err(path, &format!("row {i}: bad count")))?,
        });
    }
    Ok((out, stamp))
}

/// Write a plain CSV with stamp comment lines.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>], stamp: &Stamp) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# config_hash={}", stamp.config_hash)?;
    writeln!(w, "# seed={}", stamp.seed)?;
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Stamp of any artifact: sidecar for binaries, comment lines for CSV,
/// top-level fields for JSON, a `# config_hash=` line for scripts.
pub fn read_stamp(path: &Path) -> Result<Stamp> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("psfd") | Some("pssw") => {
            let v: serde_json::Value = read_json(&sidecar_path(path))?;
            stamp_from_json(&v).ok_or_else(|| format_err(path, "sidecar lacks config_hash/seed"))
        }
        Some("json") => {
            let v: serde_json::Value = read_json(path)?;
            stamp_from_json(&v).ok_or_else(|| format_err(path, "missing config_hash/seed"))
        }
        _ => read_csv_stamp(path),
    }
}

fn stamp_from_json(v: &serde_json::Value) -> Option<Stamp> {
    Some(Stamp {
        config_hash: v.get("config_hash")?.as_str()?.to_string(),
        seed: v.get("seed")?.as_u64()?,
    })
}
