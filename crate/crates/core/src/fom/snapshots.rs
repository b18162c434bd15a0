use super::operators::FomOperators;
use super::params::{BdfScheme, MembraneParams, ParamBox, ParameterSample, TimeGrid};
use super::transient::{solve_transient, InitialState, NewtonSettings, Trajectory};
use super::waveform::Waveform;
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Full-order trajectories for a set of parameter points, in input order.
#[derive(Debug, Clone)]
pub struct SnapshotSet {
    pub params: Vec<ParameterSample>,
    pub trajectories: Vec<Trajectory>,
}

impl SnapshotSet {
    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }
}

/// Uniform samples from `flow × membrane`, reproducible from `seed`.
pub fn sample_parameters(flow: &ParamBox, membrane: &ParamBox, count: usize, seed: u64) -> Result<Vec<ParameterSample>> {
    if membrane.dim() != 4 {
        return Err(Error::Dimension("membrane box must have 4 dimensions".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let f = flow.sample(&mut rng);
            let m = membrane.sample(&mut rng);
            Ok(ParameterSample {
                flow: f,
                membrane: MembraneParams::from_slice(&m)?,
            })
        })
        .collect()
}

/// Solves the full-order model independently for every parameter point.
#[allow(clippy::too_many_arguments)]
pub fn generate_snapshots(
    ops: &FomOperators,
    scheme: &BdfScheme,
    grid: &TimeGrid,
    waveform: &Waveform,
    params: &[ParameterSample],
    initial: &InitialState,
    newton: &NewtonSettings,
    exec: Execution,
) -> Result<SnapshotSet> {
    let runs = par::map_slice(exec, params, |p| solve_transient(ops, scheme, grid, waveform, p, initial, newton));
    let trajectories = runs.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SnapshotSet {
        params: params.to_vec(),
        trajectories,
    })
}
