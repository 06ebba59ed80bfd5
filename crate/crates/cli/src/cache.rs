//! Content-addressed artifact caches.
//!
//! Eigenpair caches use a small binary container ("DCKE"): magic, format version, a JSON
//! header, the sector layouts, then one record per state (energy, sector, parity,
//! converged flag, local vector). Classicality grids are stored as JSON.

use crate::config::BasisChoice;
use crate::error::{CliError, CliResult};
use dicke_core::classical::ClassicalityGrid;
use dicke_core::model::{BasisKind, BasisSpec, EigenSolution, ModelParams, ParityLabel, SectorLayout};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};
use std::sync::Arc;

const MAGIC: &[u8; 4] = b"DCKE";
const VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_digest(path: &Path) -> CliResult<String> {
    let mut hasher = Sha256::new();
    let mut f = BufReader::new(File::open(path).map_err(CliError::io(path.display()))?);
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(CliError::io(path.display()))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

/// Everything that determines a window solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenKey {
    pub params: ModelParams,
    pub basis: BasisChoice,
    pub n_max: Option<usize>,
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub delta: f64,
    pub values_only: bool,
}

impl EigenKey {
    pub fn digest(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("key serializes").as_bytes())
    }

    pub fn path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("{}.dcke", self.digest()))
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    key: EigenKey,
    kind: BasisKind,
    truncation: usize,
    states: usize,
    sectors: Vec<(u8, usize)>,
}

/// Writes via a temporary file so an interrupted run never leaves a truncated cache.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let tmp = path.with_extension("partial");
    std::fs::write(&tmp, bytes).map_err(CliError::io(tmp.display()))?;
    std::fs::rename(&tmp, path).map_err(CliError::io(path.display()))
}

pub fn save_eigen(path: &Path, key: &EigenKey, sol: &EigenSolution) -> CliResult<()> {
    let header = Header {
        key: key.clone(),
        kind: sol.basis.kind,
        truncation: sol.basis.truncation,
        states: sol.len(),
        sectors: sol.layouts.iter().map(|l| (l.label.0, l.states.len())).collect(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(json.len() as u64).to_le_bytes());
    buf.extend_from_slice(&json);
    for l in sol.layouts.iter() {
        for &g in &l.states {
            buf.extend_from_slice(&(g as u64).to_le_bytes());
        }
    }
    for k in 0..sol.len() {
        buf.extend_from_slice(&sol.energies[k].to_le_bytes());
        buf.extend_from_slice(&(sol.sector[k] as u32).to_le_bytes());
        buf.push(sol.parity[k].0);
        buf.push(u8::from(sol.converged[k]));
        let v: &[f64] = if key.values_only { &[] } else { &sol.vectors[k] };
        buf.extend_from_slice(&(v.len() as u64).to_le_bytes());
        for x in v {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    write_atomic(path, &buf)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> CliResult<&'a [u8]> {
        if self.at + n > self.bytes.len() {
            return Err(CliError::Corrupt {
                path: self.path.display().to_string(),
                reason: "unexpected end of file".into(),
            });
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u64(&mut self) -> CliResult<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> CliResult<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Loads a cache written for `key`; `Ok(None)` when the file does not exist.
pub fn load_eigen(path: &Path, key: &EigenKey) -> CliResult<Option<EigenSolution>> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(CliError::io(path.display())(e)),
    };
    let corrupt = |reason: &str| CliError::Corrupt {
        path: path.display().to_string(),
        reason: reason.into(),
    };
    let mut c = Cursor { bytes: &bytes, at: 0, path };
    if c.take(4)? != MAGIC {
        return Err(corrupt("bad magic"));
    }
    if u32::from_le_bytes(c.take(4)?.try_into().expect("4 bytes")) != VERSION {
        return Err(corrupt("unsupported format version"));
    }
    let len = c.u64()? as usize;
    let header: Header = serde_json::from_slice(c.take(len)?).map_err(|e| corrupt(&e.to_string()))?;
    if &header.key != key {
        return Err(corrupt("cache key does not match its file name"));
    }
    let mut layouts = Vec::with_capacity(header.sectors.len());
    for &(label, n) in &header.sectors {
        let states = (0..n).map(|_| c.u64().map(|g| g as usize)).collect::<CliResult<Vec<_>>>()?;
        layouts.push(SectorLayout {
            label: ParityLabel(label),
            states,
        });
    }
    let mut sol = EigenSolution {
        params: key.params,
        basis: BasisSpec {
            kind: header.kind,
            truncation: header.truncation,
            j: key.params.j,
        },
        layouts: Arc::new(layouts),
        energies: Vec::with_capacity(header.states),
        sector: Vec::with_capacity(header.states),
        vectors: Vec::with_capacity(header.states),
        converged: Vec::with_capacity(header.states),
        parity: Vec::with_capacity(header.states),
    };
    for _ in 0..header.states {
        sol.energies.push(c.f64()?);
        let s = u32::from_le_bytes(c.take(4)?.try_into().expect("4 bytes")) as usize;
        if s >= sol.layouts.len() {
            return Err(corrupt("sector index out of range"));
        }
        sol.sector.push(s);
        let flags = c.take(2)?;
        sol.parity.push(ParityLabel(flags[0]));
        sol.converged.push(flags[1] != 0);
        let n = c.u64()? as usize;
        if n != 0 && n != sol.layouts[s].states.len() {
            return Err(corrupt("vector length does not match its sector"));
        }
        sol.vectors.push((0..n).map(|_| c.f64()).collect::<CliResult<Vec<_>>>()?);
    }
    if c.at != bytes.len() {
        return Err(corrupt("trailing bytes"));
    }
    Ok(Some(sol))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridKey {
    pub params: ModelParams,
    pub epsilon: f64,
    pub grid: dicke_core::classical::GridConfig,
}

impl GridKey {
    pub fn digest(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("key serializes").as_bytes())
    }

    pub fn path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("{}.json", self.digest()))
    }
}

/// JSON has no NaN, so uncomputed exponents are stored as null.
#[derive(Serialize, Deserialize)]
struct GridFile {
    key: GridKey,
    accessible: Vec<bool>,
    weight: Vec<f64>,
    lyapunov: Vec<Option<f64>>,
    chi: Vec<i8>,
    component: Vec<i32>,
    failed: usize,
}

pub fn save_grid(path: &Path, key: &GridKey, grid: &ClassicalityGrid) -> CliResult<()> {
    let file = GridFile {
        key: key.clone(),
        accessible: grid.accessible.clone(),
        weight: grid.weight.clone(),
        lyapunov: grid.lyapunov.iter().map(|l| (!l.is_nan()).then_some(*l)).collect(),
        chi: grid.chi.clone(),
        component: grid.component.clone(),
        failed: grid.failed,
    };
    write_atomic(path, &serde_json::to_vec(&file).expect("grid serializes"))
}

pub fn load_grid(path: &Path, key: &GridKey) -> CliResult<Option<ClassicalityGrid>> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(CliError::io(path.display())(e)),
    };
    let corrupt = |reason: String| CliError::Corrupt {
        path: path.display().to_string(),
        reason,
    };
    let file: GridFile = serde_json::from_slice(&bytes).map_err(|e| corrupt(e.to_string()))?;
    if &file.key != key {
        return Err(corrupt("cache key does not match its file name".into()));
    }
    let n = key.grid.resolution * key.grid.resolution;
    let lens = [file.accessible.len(), file.weight.len(), file.lyapunov.len(), file.chi.len(), file.component.len()];
    if lens.iter().any(|&l| l != n) {
        return Err(corrupt("array lengths do not match the resolution".into()));
    }
    Ok(Some(ClassicalityGrid {
        epsilon: key.epsilon,
        params: key.params,
        config: key.grid,
        accessible: file.accessible,
        weight: file.weight,
        lyapunov: file.lyapunov.into_iter().map(|l| l.unwrap_or(f64::NAN)).collect(),
        chi: file.chi,
        component: file.component,
        failed: file.failed,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use dicke_core::model::{build_fock_hamiltonian, diagonalize_window};

    fn key(values_only: bool) -> EigenKey {
        EigenKey {
            params: ModelParams::two_photon(2.0),
            basis: BasisChoice::Fock,
            n_max: Some(12),
            eps_lo: -1.0,
            eps_hi: 2.0,
            delta: 1e-10,
            values_only,
        }
    }

    #[test]
    fn eigen_cache_round_trips_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let k = key(false);
        let h = build_fock_hamiltonian(&k.params, 12).unwrap();
        let sol = diagonalize_window(&h, -2.0, 4.0).unwrap();
        let path = k.path(dir.path());
        save_eigen(&path, &k, &sol).unwrap();
        let back = load_eigen(&path, &k).unwrap().unwrap();
        assert_eq!(back.energies, sol.energies);
        assert_eq!(back.vectors, sol.vectors);
        assert_eq!(back.sector, sol.sector);
        assert_eq!(back.parity, sol.parity);
        assert_eq!(back.converged, sol.converged);
        assert_eq!(*back.layouts, *sol.layouts);
        assert_eq!(back.basis, sol.basis);
        assert_eq!(back.global_vector(3), sol.global_vector(3));

        assert!(load_eigen(&key(true).path(dir.path()), &key(true)).unwrap().is_none());
        // a key mismatch is reported rather than silently accepted
        assert!(load_eigen(&path, &key(true)).is_err());
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(load_eigen(&path, &k), Err(CliError::Corrupt { .. })));
    }

    #[test]
    fn values_only_cache_drops_vectors() {
        let dir = tempfile::tempdir().unwrap();
        let k = key(true);
        let h = build_fock_hamiltonian(&k.params, 12).unwrap();
        let sol = diagonalize_window(&h, -2.0, 4.0).unwrap();
        save_eigen(&k.path(dir.path()), &k, &sol).unwrap();
        let back = load_eigen(&k.path(dir.path()), &k).unwrap().unwrap();
        assert_eq!(back.energies, sol.energies);
        assert!(back.vectors.iter().all(|v| v.is_empty()));
    }

    #[test]
    fn grid_cache_round_trips_including_nan() {
        use dicke_core::classical::{classicality_grid, GridConfig, LyapunovConfig};
        let dir = tempfile::tempdir().unwrap();
        let key = GridKey {
            params: ModelParams::one_photon(1.0),
            epsilon: 0.0,
            grid: GridConfig {
                resolution: 7,
                lyapunov: LyapunovConfig {
                    t_total: 10.0,
                    ..Default::default()
                },
                threshold: None,
            },
        };
        let grid = classicality_grid(key.epsilon, &key.params, &key.grid).unwrap();
        assert!(grid.lyapunov.iter().any(|l| l.is_nan()));
        save_grid(&key.path(dir.path()), &key, &grid).unwrap();
        let back = load_grid(&key.path(dir.path()), &key).unwrap().unwrap();
        assert_eq!(back.weight, grid.weight);
        assert_eq!(back.chi, grid.chi);
        assert_eq!(back.component, grid.component);
        for (a, b) in back.lyapunov.iter().zip(&grid.lyapunov) {
            assert!(a == b || a.is_nan() && b.is_nan());
        }
    }
}
