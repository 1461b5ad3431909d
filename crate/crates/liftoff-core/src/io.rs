//! CSV serialization of ensembles and problem instances.
//!
//! Both formats carry a commented header (`# key = value`) followed by data
//! rows. Floats are written in shortest round-trip form, so dump/load is
//! bitwise exact.
//!
//! Ensemble files: header `d, m, field, seed`, then one row per sensing
//! vector with interleaved real/imaginary entries.
//!
//! Instance files: header `d, m, k, field, seed, snr_db`, then rows `x0`
//! (interleaved), `support` (indices), `b` and `w`.

use std::io::{BufRead, Write};
use std::path::Path;

use faer::{c64, Col, Mat};

use crate::error::{LiftoffError, Result};
use crate::hermitian::ComplexVector;
use crate::measurement::MeasurementEnsemble;
use crate::synth::{gen_instance, ProblemInstance};
use crate::Field;

const ENSEMBLE_MAGIC: &str = "# liftoff ensemble v1";
const INSTANCE_MAGIC: &str = "# liftoff instance v1";

fn fmt_seed(seed: Option<u64>) -> String {
    match seed {
        Some(s) => s.to_string(),
        None => "none".to_string(),
    }
}

pub fn write_ensemble_csv<W: Write>(out: &mut W, ens: &MeasurementEnsemble) -> Result<()> {
    writeln!(out, "{ENSEMBLE_MAGIC}")?;
    writeln!(out, "# d = {}", ens.d())?;
    writeln!(out, "# m = {}", ens.m())?;
    writeln!(out, "# field = {}", ens.field())?;
    writeln!(out, "# seed = {}", fmt_seed(ens.seed()))?;
    for j in 0..ens.m() {
        let mut row = String::new();
        for i in 0..ens.d() {
            let z = ens.columns()[(i, j)];
            if i > 0 {
                row.push(',');
            }
            row.push_str(&format!("{:?},{:?}", z.re, z.im));
        }
        writeln!(out, "{row}")?;
    }
    Ok(())
}

pub fn write_ensemble_file<P: AsRef<Path>>(path: P, ens: &MeasurementEnsemble) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_ensemble_csv(&mut file, ens)
}

struct Header {
    entries: Vec<(String, String)>,
}

impl Header {
    fn get(&self, key: &str) -> Result<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| LiftoffError::Parse(format!("missing header key `{key}`")))
    }

    fn get_usize(&self, key: &str) -> Result<usize> {
        self.get(key)?
            .parse()
            .map_err(|_| LiftoffError::Parse(format!("header key `{key}` is not an integer")))
    }

    fn get_seed(&self, key: &str) -> Result<Option<u64>> {
        let v = self.get(key)?;
        if v == "none" {
            Ok(None)
        } else {
            v.parse()
                .map(Some)
                .map_err(|_| LiftoffError::Parse(format!("header key `{key}` is not a seed")))
        }
    }
}

fn read_lines<R: BufRead>(input: R, magic: &str) -> Result<(Header, Vec<String>)> {
    let mut lines = input.lines();
    let first = lines
        .next()
        .ok_or_else(|| LiftoffError::Parse("empty file".into()))??;
    if first.trim() != magic {
        return Err(LiftoffError::Parse(format!(
            "bad magic line: expected `{magic}`, got `{first}`"
        )));
    }
    let mut entries = Vec::new();
    let mut data = Vec::new();
    for line in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                entries.push((k.trim().to_string(), v.trim().to_string()));
            }
        } else {
            data.push(trimmed.to_string());
        }
    }
    Ok((Header { entries }, data))
}

fn parse_floats(row: &str, expect: usize, what: &str) -> Result<Vec<f64>> {
    let vals: std::result::Result<Vec<f64>, _> =
        row.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let vals = vals.map_err(|_| LiftoffError::Parse(format!("non-numeric value in {what} row")))?;
    if vals.len() != expect {
        return Err(LiftoffError::Parse(format!(
            "{what} row has {} values, expected {expect}",
            vals.len()
        )));
    }
    Ok(vals)
}

fn parse_complex_row(row: &str, dim: usize, what: &str) -> Result<ComplexVector> {
    let vals = parse_floats(row, 2 * dim, what)?;
    Ok(Col::from_fn(dim, |i| c64::new(vals[2 * i], vals[2 * i + 1])))
}

pub fn read_ensemble_csv<R: BufRead>(input: R) -> Result<MeasurementEnsemble> {
    let (header, data) = read_lines(input, ENSEMBLE_MAGIC)?;
    let d = header.get_usize("d")?;
    let m = header.get_usize("m")?;
    let field: Field = header.get("field")?.parse()?;
    let seed = header.get_seed("seed")?;
    if data.len() != m {
        return Err(LiftoffError::Parse(format!(
            "expected {m} vector rows, found {}",
            data.len()
        )));
    }
    let mut a = Mat::<c64>::zeros(d, m);
    for (j, row) in data.iter().enumerate() {
        let v = parse_complex_row(row, d, "vector")?;
        for i in 0..d {
            a[(i, j)] = v[i];
        }
    }
    MeasurementEnsemble::from_columns(a, field, seed)
}

pub fn read_ensemble_file<P: AsRef<Path>>(path: P) -> Result<MeasurementEnsemble> {
    read_ensemble_csv(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// The serialized fields of a problem instance (the ensemble itself is
/// regenerable from the stored trial seed).
#[derive(Debug, Clone)]
pub struct InstanceDump {
    pub d: usize,
    pub m: usize,
    pub k: usize,
    pub field: Field,
    pub seed: u64,
    pub snr_db: Option<f64>,
    pub x0: ComplexVector,
    pub support: Vec<usize>,
    pub b: Col<f64>,
    pub w: Col<f64>,
}

impl InstanceDump {
    /// Rebuilds the full instance from the stored trial seed and verifies the
    /// regenerated draws match the stored rows bitwise.
    pub fn into_instance(self) -> Result<ProblemInstance> {
        let inst = gen_instance(self.d, self.m, self.k, self.field, self.snr_db, self.seed);
        let same_x0 = (0..self.d).all(|i| inst.x0[i] == self.x0[i]);
        let same_rows =
            (0..self.m).all(|i| inst.b[i] == self.b[i] && inst.w[i] == self.w[i]);
        if !(same_x0 && same_rows && inst.support == self.support) {
            return Err(LiftoffError::Parse(
                "stored instance does not match its seed derivation".into(),
            ));
        }
        Ok(inst)
    }
}

pub fn write_instance_csv<W: Write>(out: &mut W, inst: &ProblemInstance) -> Result<()> {
    let d = inst.ensemble.d();
    let m = inst.ensemble.m();
    writeln!(out, "{INSTANCE_MAGIC}")?;
    writeln!(out, "# d = {d}")?;
    writeln!(out, "# m = {m}")?;
    writeln!(out, "# k = {}", inst.k)?;
    writeln!(out, "# field = {}", inst.ensemble.field())?;
    writeln!(out, "# seed = {}", inst.seed)?;
    match inst.snr_db {
        Some(snr) => writeln!(out, "# snr_db = {snr:?}")?,
        None => writeln!(out, "# snr_db = none")?,
    }
    let mut x0_row = String::from("x0");
    for i in 0..d {
        x0_row.push_str(&format!(",{:?},{:?}", inst.x0[i].re, inst.x0[i].im));
    }
    writeln!(out, "{x0_row}")?;
    let support_row: Vec<String> = inst.support.iter().map(|i| i.to_string()).collect();
    writeln!(out, "support,{}", support_row.join(","))?;
    let mut b_row = String::from("b");
    let mut w_row = String::from("w");
    for i in 0..m {
        b_row.push_str(&format!(",{:?}", inst.b[i]));
        w_row.push_str(&format!(",{:?}", inst.w[i]));
    }
    writeln!(out, "{b_row}")?;
    writeln!(out, "{w_row}")?;
    Ok(())
}

pub fn write_instance_file<P: AsRef<Path>>(path: P, inst: &ProblemInstance) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_instance_csv(&mut file, inst)
}

pub fn read_instance_csv<R: BufRead>(input: R) -> Result<InstanceDump> {
    let (header, data) = read_lines(input, INSTANCE_MAGIC)?;
    let d = header.get_usize("d")?;
    let m = header.get_usize("m")?;
    let k = header.get_usize("k")?;
    let field: Field = header.get("field")?.parse()?;
    let seed = header
        .get_seed("seed")?
        .ok_or_else(|| LiftoffError::Parse("instance header needs a concrete seed".into()))?;
    let snr_db = match header.get("snr_db")? {
        "none" => None,
        v => Some(
            v.parse::<f64>()
                .map_err(|_| LiftoffError::Parse("snr_db is not a number".into()))?,
        ),
    };
    let mut x0 = None;
    let mut support = None;
    let mut b = None;
    let mut w = None;
    for row in &data {
        let (tag, rest) = row
            .split_once(',')
            .ok_or_else(|| LiftoffError::Parse(format!("untagged data row `{row}`")))?;
        match tag {
            "x0" => x0 = Some(parse_complex_row(rest, d, "x0")?),
            "support" => {
                let idx: std::result::Result<Vec<usize>, _> =
                    rest.split(',').map(|t| t.trim().parse::<usize>()).collect();
                support = Some(idx.map_err(|_| {
                    LiftoffError::Parse("non-integer support index".into())
                })?);
            }
            "b" => b = Some(parse_floats(rest, m, "b")?),
            "w" => w = Some(parse_floats(rest, m, "w")?),
            other => return Err(LiftoffError::Parse(format!("unknown row tag `{other}`"))),
        }
    }
    let x0 = x0.ok_or_else(|| LiftoffError::Parse("missing x0 row".into()))?;
    let support = support.ok_or_else(|| LiftoffError::Parse("missing support row".into()))?;
    let b = b.ok_or_else(|| LiftoffError::Parse("missing b row".into()))?;
    let w = w.ok_or_else(|| LiftoffError::Parse("missing w row".into()))?;
    if support.len() != k {
        return Err(LiftoffError::Parse(format!(
            "support has {} indices, header says k = {k}",
            support.len()
        )));
    }
    Ok(InstanceDump {
        d,
        m,
        k,
        field,
        seed,
        snr_db,
        x0,
        support,
        b: Col::from_fn(m, |i| b[i]),
        w: Col::from_fn(m, |i| w[i]),
    })
}

pub fn read_instance_file<P: AsRef<Path>>(path: P) -> Result<InstanceDump> {
    read_instance_csv(std::io::BufReader::new(std::fs::File::open(path)?))
}
