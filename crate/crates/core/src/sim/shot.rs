use rand::Rng;

use crate::circuit::{Expansion, OutcomeRef, Outcomes, PauliFrame};
use crate::error::{Error, Result};
use crate::pauli::SpacetimeError;
use crate::rng::Stream;
use crate::sim::program::{Action, Kernel, PrimitiveSite, Program};
use crate::sim::state::DensityState;

/// Which native noise a shot experiences.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NativeNoise {
    Off,
    /// A scenario is drawn per shot from the noise table.
    Drawn,
    Scenario(usize),
}

/// Supplies a Pauli applied right after the noise of each primitive operation.
pub trait Corrector {
    fn correct(&mut self, site: &PrimitiveSite, rng: &mut Stream) -> PauliFrame;
}

/// Result of one circuit execution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Shot {
    pub lambda: usize,
    /// `a(λ, μ)`.
    pub value: f64,
}

/// Runs shots of a program, reusing its buffers.
pub struct Executor<'p> {
    program: &'p Program,
    state: DensityState,
    outcomes: Outcomes,
    expansion: Expansion,
    actions: Vec<Action>,
    flags: Vec<usize>,
    lambda_cdf: Vec<f64>,
}

impl<'p> Executor<'p> {
    pub fn new(program: &'p Program) -> Result<Self> {
        let compiled = program.compiled();
        let mut acc = 0.0;
        let lambda_cdf = compiled
            .circuit()
            .lambda_weights()
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Executor {
            program,
            state: DensityState::new(program.qubit_count())?,
            outcomes: compiled.new_outcomes(),
            expansion: Expansion::default(),
            actions: Vec::new(),
            flags: vec![0; compiled.kinds().len()],
            lambda_cdf,
        })
    }

    pub fn outcomes(&self) -> &Outcomes {
        &self.outcomes
    }

    pub fn state(&self) -> &DensityState {
        &self.state
    }

    /// Occurrences of each kind in the last shot.
    pub fn occurrences(&self) -> &[usize] {
        &self.flags
    }

    fn draw_lambda(&self, rng: &mut Stream) -> usize {
        if self.lambda_cdf.len() == 1 {
            return 0;
        }
        let u = rng.gen::<f64>() * self.lambda_cdf[self.lambda_cdf.len() - 1];
        self.lambda_cdf.iter().position(|&c| u < c).unwrap_or(self.lambda_cdf.len() - 1)
    }

    /// Executes one shot from `|0…0⟩`.
    ///
    /// `insertion` adds its cells after the native noise of each occurrence,
    /// the `j`-th occurrence of a kind taking cell `j`.
    pub fn run(
        &mut self,
        native: NativeNoise,
        insertion: Option<&SpacetimeError>,
        mut corrector: Option<&mut dyn Corrector>,
        rng: &mut Stream,
    ) -> Result<Shot> {
        let program = self.program;
        let compiled = program.compiled();
        let scenario = match native {
            NativeNoise::Off => None,
            NativeNoise::Scenario(s) => Some(s),
            NativeNoise::Drawn => Some(
                program.noise().ok_or_else(|| Error::Contract("native noise requested without a noise table".into()))?.draw_scenario(rng),
            ),
        };
        if scenario.is_some_and(|s| s >= program.scenario_count()) {
            return Err(Error::Contract("noise scenario out of range".into()));
        }
        self.state.reset();
        self.outcomes.clear();
        self.flags.iter_mut().for_each(|f| *f = 0);
        let lambda = self.draw_lambda(rng);
        for slot in 0..compiled.slot_count() {
            let Some(op) = compiled.resolve(slot, lambda, &self.outcomes) else { continue };
            self.actions.clear();
            match &compiled.ops()[op].plan {
                Some(plan) => {
                    plan.draw_into(rng, &mut self.expansion);
                    program.plan_slot(op, Some(&self.expansion), &mut self.actions);
                }
                None => program.plan_slot(op, None, &mut self.actions),
            }
            for i in 0..self.actions.len() {
                match self.actions[i] {
                    Action::Frame(f) => self.state.apply_pauli(f),
                    Action::Kernel { op, k } => match program.kernel(op, k) {
                        Kernel::Measure { q, axis, bit } => {
                            let m = self.state.measure(*q, axis, rng);
                            self.outcomes.set(OutcomeRef { slot, bit: *bit }, m);
                        }
                        kernel => kernel.apply(&mut self.state)?,
                    },
                    Action::DecorationKernel { op, gate } => program.decoration_kernel(op, gate).apply(&mut self.state)?,
                    Action::Native { kind } => {
                        if let Some(s) = scenario {
                            for k in program.noise_kernels(s, kind as usize) {
                                k.sample_apply(&mut self.state, rng)?;
                            }
                        }
                    }
                    Action::Insert { kind } => {
                        let kind = kind as usize;
                        let j = self.flags[kind];
                        if j >= compiled.counts()[kind] {
                            return Err(Error::Contract(format!(
                                "kind '{}' occurs more often than its maximum count",
                                compiled.kinds()[kind].key
                            )));
                        }
                        self.flags[kind] += 1;
                        if let Some(e) = insertion {
                            if let Some(pos) = e.layout().position_of_kind(kind) {
                                let cell = e.cell(pos, j);
                                if !cell.is_identity() {
                                    self.state.apply_pauli(PauliFrame::lift(&cell, program.support(kind)));
                                }
                            }
                        }
                    }
                    Action::Correct { op } => {
                        if let Some(c) = corrector.as_deref_mut() {
                            for site in program.op_sites(op) {
                                let f = c.correct(site, rng);
                                self.state.apply_pauli(f);
                            }
                        }
                    }
                    Action::CorrectDecoration { op, gate } => {
                        if let Some(c) = corrector.as_deref_mut() {
                            let f = c.correct(program.decoration_site(op, gate), rng);
                            self.state.apply_pauli(f);
                        }
                    }
                }
            }
        }
        Ok(Shot { lambda, value: compiled.circuit().observable().evaluate(lambda, &self.outcomes) })
    }
}
