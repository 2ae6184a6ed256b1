//! The five built-in simulation presets.
//!
//! Each preset bundles a target, a generating pair, map parameters,
//! singular values, step size, start point and objective. Preset 5 keeps
//! `sigma = 0.4`; pass a sigma override to explore larger amplitudes.

use crate::engine::{run, EngineError, ObjectivePort, RunRecord, RunSettings, Schedule, StopCriteria};
use crate::genfun::GeneratingPair;
use crate::objectives;
use crate::sequence::construct::construct_w;
use crate::sequence::target::{counter_rotation, TargetFamily, TargetSpec};
use crate::sequence::{ExplorationMatrix, MapParameters, SequenceError};

/// Objectives the presets (and config files) can name.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveKind {
    /// `||x - target||^2`
    Quadratic { target: Vec<f64> },
    /// `||x - target + amplitude sin(omega x)||^2`
    RippledQuadratic {
        target: Vec<f64>,
        amplitude: f64,
        omega: f64,
    },
    /// `||x||`
    EuclideanNorm,
}

impl ObjectiveKind {
    pub fn build(&self) -> ObjectivePort {
        match self {
            ObjectiveKind::Quadratic { target } => objectives::quadratic(target),
            ObjectiveKind::RippledQuadratic {
                target,
                amplitude,
                omega,
            } => objectives::rippled_quadratic(target, *amplitude, *omega),
            ObjectiveKind::EuclideanNorm => objectives::euclidean_norm(),
        }
    }
}

/// A fully-specified simulation setup.
#[derive(Debug, Clone)]
pub struct SimulationPreset {
    pub index: usize,
    pub n: usize,
    pub params: MapParameters,
    pub target: TargetSpec,
    pub pair: GeneratingPair,
    pub sigma: Vec<f64>,
    pub h: f64,
    pub x0: Vec<f64>,
    pub objective: ObjectiveKind,
    pub max_iters: usize,
}

impl SimulationPreset {
    /// Construct the preset's exploration matrix.
    pub fn build_exploration(&self) -> Result<ExplorationMatrix, SequenceError> {
        construct_w(&self.target, &self.params, &self.sigma)
    }

    /// Construct and run the preset end to end with a constant step size.
    pub fn run(&self) -> Result<(ExplorationMatrix, RunRecord), PresetError> {
        let em = self.build_exploration()?;
        let mut objective = self.objective.build();
        let settings = RunSettings {
            schedule: Schedule::constant(self.h),
            stop: StopCriteria::max_iters(self.max_iters),
        };
        let record = run(&em, &self.pair, &self.params, &settings, &mut objective, &self.x0)?;
        Ok((em, record))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PresetError {
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Preset `k` for `k = 1..=5`.
pub fn simulation_preset(k: usize) -> Option<SimulationPreset> {
    let sincos = GeneratingPair::h2_sincos(1.0, 1.0, 0.0).unwrap();
    let quad_target = vec![1.0, 2.0];
    Some(match k {
        1 => SimulationPreset {
            index: 1,
            n: 2,
            params: MapParameters::two_point(),
            target: TargetSpec::new(TargetFamily::H1, 2),
            pair: sincos,
            sigma: vec![1.0, 1.0, 1.0, 1.0],
            h: 0.05,
            x0: vec![0.0, 1.0],
            objective: ObjectiveKind::Quadratic {
                target: quad_target,
            },
            max_iters: 4000,
        },
        2 => SimulationPreset {
            index: 2,
            n: 2,
            params: MapParameters::two_point(),
            target: TargetSpec::new(TargetFamily::H2, 2)
                .with_a(1.0)
                .with_b(1.0)
                .with_q(counter_rotation(2)),
            pair: sincos,
            sigma: vec![2.0, 2.0],
            h: 0.05,
            x0: vec![0.0, 1.0],
            objective: ObjectiveKind::Quadratic {
                target: quad_target,
            },
            max_iters: 4000,
        },
        3 => SimulationPreset {
            index: 3,
            n: 2,
            params: MapParameters::single_point(),
            target: TargetSpec::new(TargetFamily::TdE, 2),
            pair: GeneratingPair::e1_radial(1.0, 0.0).unwrap(),
            sigma: vec![1.0, 1.0, 1.0, 1.0],
            h: 0.05,
            x0: vec![0.0, 1.0],
            objective: ObjectiveKind::Quadratic {
                target: quad_target,
            },
            max_iters: 4000,
        },
        4 => SimulationPreset {
            index: 4,
            n: 2,
            params: MapParameters::two_point(),
            target: TargetSpec::new(TargetFamily::H2, 2)
                .with_a(1.0)
                .with_b(1.0)
                .with_q(counter_rotation(2)),
            pair: sincos,
            sigma: vec![1.0, 1.0],
            h: 0.05,
            x0: vec![1.0, 2.0],
            objective: ObjectiveKind::RippledQuadratic {
                target: quad_target,
                amplitude: 0.5,
                omega: 10.0 * std::f64::consts::PI,
            },
            max_iters: 4000,
        },
        5 => SimulationPreset {
            index: 5,
            n: 2,
            params: MapParameters::two_point(),
            target: TargetSpec::new(TargetFamily::H2, 2)
                .with_a(1.0)
                .with_b(1.0)
                .with_q(counter_rotation(2)),
            pair: sincos,
            sigma: vec![0.4, 0.4],
            h: 0.05,
            x0: vec![1.0, 2.0],
            objective: ObjectiveKind::EuclideanNorm,
            max_iters: 4000,
        },
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_exist() {
        for k in 1..=5 {
            let p = simulation_preset(k).unwrap();
            assert_eq!(p.index, k);
            assert_eq!(p.n, 2);
            assert_eq!(p.x0.len(), 2);
        }
        assert!(simulation_preset(0).is_none());
        assert!(simulation_preset(6).is_none());
    }
}
