use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::io::{read_manifest, write_manifest};
use super::record::{Method, TripletRecord};
use crate::error::{Error, Result};

/// Target size and method mix of an assembled dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub total: usize,
    pub proportions: BTreeMap<Method, f64>,
}

impl DatasetSpec {
    /// Equal share for each of the three methods.
    pub fn equal_thirds(total: usize) -> Self {
        Self { total, proportions: Method::ALL.iter().map(|&m| (m, 1.0 / 3.0)).collect() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.proportions.values().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Config("proportions must be finite and >= 0".into()));
        }
        let sum: f64 = self.proportions.values().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("proportions sum to {sum}, not 1")));
        }
        Ok(())
    }

    /// Per-method counts by largest remainder; ties go to the earlier method.
    pub fn counts(&self) -> Result<BTreeMap<Method, usize>> {
        self.validate()?;
        let exact: Vec<(Method, f64)> = self.proportions.iter().map(|(&m, &p)| (m, p * self.total as f64)).collect();
        let mut counts: BTreeMap<Method, usize> = exact.iter().map(|&(m, x)| (m, x.floor() as usize)).collect();
        let short = self.total - counts.values().sum::<usize>();
        let mut order: Vec<(Method, f64)> = exact.iter().map(|&(m, x)| (m, x - x.floor())).collect();
        order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for (m, _) in order.into_iter().take(short) {
            *counts.get_mut(&m).expect("present") += 1;
        }
        Ok(counts)
    }
}

/// Draws each method's share without replacement and shuffles the union.
pub fn assemble(
    spec: &DatasetSpec,
    pools: &BTreeMap<Method, Vec<TripletRecord>>,
    seed: u64,
) -> Result<Vec<TripletRecord>> {
    let counts = spec.counts()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(spec.total);
    for (method, &k) in &counts {
        let pool = pools.get(method).map(Vec::as_slice).unwrap_or(&[]);
        if pool.len() < k {
            return Err(Error::Capacity(format!("{method}: need {k} records, pool has {}", pool.len())));
        }
        if let Some(bad) = pool.iter().find(|r| r.method != *method) {
            return Err(Error::Validation(format!("record {} in the {method} pool is {}", bad.id, bad.method)));
        }
        let mut picked = index::sample(&mut rng, pool.len(), k).into_vec();
        picked.sort_unstable();
        out.extend(picked.into_iter().map(|i| pool[i].clone()));
    }
    out.shuffle(&mut rng);
    Ok(out)
}

fn absolutize(record: &mut TripletRecord, base: &Path) {
    for p in [&mut record.input_wav, &mut record.output_wav] {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
}

/// Reads per-method pool manifests, assembles, and writes `out`.
///
/// Relative WAV paths are rewritten against each pool's directory so the
/// combined manifest can live anywhere.
pub fn assemble_files(
    spec: &DatasetSpec,
    pools: &BTreeMap<Method, PathBuf>,
    out: &Path,
    seed: u64,
) -> Result<Vec<TripletRecord>> {
    let mut loaded = BTreeMap::new();
    for (&m, path) in pools {
        let base = std::path::absolute(path.parent().unwrap_or(Path::new("."))).map_err(|e| Error::io(path, e))?;
        let mut records = read_manifest(path)?;
        records.iter_mut().for_each(|r| absolutize(r, &base));
        loaded.insert(m, records);
    }
    let combined = assemble(spec, &loaded, seed)?;
    write_manifest(out, &combined)?;
    Ok(combined)
}
