//! Checkpoint files: one file per run with a config echo, the time grid,
//! per-node field snapshots in a flat little-endian binary layout
//! (component-major: velocity components then density), and the diagnostics
//! history appended as CSV rows.

use super::{IterationDiagnostics, SolverConfig, SolverState};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::timegrid::{SpaceTimeField, TimeGrid};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"TENTFLOW";
const VERSION: u32 = 1;

pub const DIAGNOSTICS_HEADER: &str =
    "iter,t,e_alpha_total,rho_dev,energy_lhs,energy_rhs,div_max,increment";

pub struct Checkpoint {
    pub config: SolverConfig,
    pub time: TimeGrid,
    pub velocity: SpaceTimeField<VectorField>,
    pub density: SpaceTimeField<ScalarField>,
    pub diagnostics_csv: String,
}

pub fn diagnostics_csv(cfg: &SolverConfig, history: &[IterationDiagnostics]) -> String {
    let mut out = String::from(DIAGNOSTICS_HEADER);
    out.push('\n');
    for d in history {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            d.iterate,
            cfg.t_final,
            d.e_alpha_total,
            d.rho_dev,
            d.energy_lhs,
            d.energy_rhs,
            d.div_max,
            d.increment
        ));
    }
    out
}

pub fn write_checkpoint(path: &Path, cfg: &SolverConfig, state: &SolverState) -> Result<()> {
    let grid = cfg.grid()?;
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(MAGIC)?;
    file.write_all(&VERSION.to_le_bytes())?;
    let config_json = serde_json::to_vec(cfg)?;
    file.write_all(&(config_json.len() as u64).to_le_bytes())?;
    file.write_all(&config_json)?;
    file.write_all(&(cfg.dim as u32).to_le_bytes())?;
    file.write_all(&(cfg.n as u32).to_le_bytes())?;
    let node_count = state.u_traj.time().len() as u32;
    file.write_all(&node_count.to_le_bytes())?;
    file.write_all(&cfg.l.to_le_bytes())?;
    for &t in state.u_traj.time().nodes() {
        file.write_all(&t.to_le_bytes())?;
    }
    for &w in state.u_traj.time().weights() {
        file.write_all(&w.to_le_bytes())?;
    }
    let npts = grid.len();
    for (u, rho) in state.u_traj.slices().iter().zip(state.rho_traj.slices()) {
        for comp in u.components() {
            debug_assert_eq!(comp.values().len(), npts);
            for &v in comp.values() {
                file.write_all(&v.to_le_bytes())?;
            }
        }
        for &v in rho.values() {
            file.write_all(&v.to_le_bytes())?;
        }
    }
    file.write_all(diagnostics_csv(cfg, &state.diagnostics).as_bytes())?;
    file.flush()?;
    Ok(())
}

fn read_exact(file: &mut impl Read, len: usize) -> Result<Vec<u8>> {
    let mut buf = vec![0u8; len];
    file.read_exact(&mut buf)
        .map_err(|e| Error::Checkpoint(format!("truncated checkpoint: {e}")))?;
    Ok(buf)
}

fn read_u32(file: &mut impl Read) -> Result<u32> {
    Ok(u32::from_le_bytes(read_exact(file, 4)?.try_into().unwrap()))
}

fn read_f64_vec(file: &mut impl Read, count: usize) -> Result<Vec<f64>> {
    let bytes = read_exact(file, count * 8)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let magic = read_exact(&mut file, 8)?;
    if magic.as_slice() != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = read_u32(&mut file)?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let json_len = u64::from_le_bytes(read_exact(&mut file, 8)?.try_into().unwrap()) as usize;
    let config: SolverConfig = serde_json::from_slice(&read_exact(&mut file, json_len)?)?;
    let dim = read_u32(&mut file)? as usize;
    let n = read_u32(&mut file)? as usize;
    let node_count = read_u32(&mut file)? as usize;
    let l = f64::from_le_bytes(read_exact(&mut file, 8)?.try_into().unwrap());
    if dim != config.dim || n != config.n || (l - config.l).abs() > 1e-12 {
        return Err(Error::Checkpoint(
            "header disagrees with config echo".into(),
        ));
    }
    let grid = config.grid()?;
    let nodes = read_f64_vec(&mut file, node_count)?;
    let weights = read_f64_vec(&mut file, node_count)?;
    let time = TimeGrid::from_nodes_weights(nodes, weights)?;
    let npts = grid.len();
    let mut u_slices = Vec::with_capacity(node_count);
    let mut rho_slices = Vec::with_capacity(node_count);
    for _ in 0..node_count {
        let mut comps = Vec::with_capacity(dim);
        for _ in 0..dim {
            comps.push(ScalarField::from_values(
                grid,
                read_f64_vec(&mut file, npts)?,
            )?);
        }
        u_slices.push(VectorField::new(comps)?);
        rho_slices.push(ScalarField::from_values(
            grid,
            read_f64_vec(&mut file, npts)?,
        )?);
    }
    let mut diagnostics_csv = String::new();
    file.read_to_string(&mut diagnostics_csv)
        .map_err(|e| Error::Checkpoint(format!("bad diagnostics block: {e}")))?;
    Ok(Checkpoint {
        config,
        time: time.clone(),
        velocity: SpaceTimeField::new(time.clone(), u_slices)?,
        density: SpaceTimeField::new(time, rho_slices)?,
        diagnostics_csv,
    })
}
